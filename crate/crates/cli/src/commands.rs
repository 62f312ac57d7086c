//! The five subcommands: simulate, stability, fit, forecast, backtest.

use std::path::{Path, PathBuf};

use regime_vol_core::backtest::{standardized_quantile, ExceptionSeries, VarSeries};
use regime_vol_core::filter::{run_metrics, Filter, ForecastRecord};
use regime_vol_core::gibbs::{param_names, run_chains, ModelFamily, PosteriorDraws};
use regime_vol_core::model::simulate_path;
use regime_vol_core::stability::stability_report_with;
use regime_vol_core::stats::Descriptive;

use crate::config::RunConfig;
use crate::dataset::{self, DataKind, ReturnsDataset};
use crate::error::{io_err, CliError, Result};
use crate::report::{histogram, write_csv, KeyValueDoc};

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| io_err(&format!("creating {}", cfg.out_dir.display()), e))
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn load_dataset(cfg: &RunConfig) -> Result<ReturnsDataset> {
    let path = cfg.require("data.path")?;
    let kind = DataKind::parse(cfg.get("data.kind").unwrap_or("returns"))?;
    let split = cfg.get_usize("data.split")?;
    dataset::ingest(Path::new(path), kind, split)
}

fn put_descriptive(doc: &mut KeyValueDoc, d: &Descriptive) {
    doc.put("count", d.count);
    doc.put_f64("mean", d.mean);
    doc.put_f64("std_dev", d.std_dev);
    doc.put_f64("min", d.min);
    doc.put_f64("max", d.max);
    doc.put_f64("skewness", d.skewness);
    doc.put_f64("excess_kurtosis", d.excess_kurtosis);
    if d.std_dev == 0.0 {
        doc.put("degenerate", "true (zero variance)");
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let spec = cfg.model_spec()?;
    let length = cfg
        .get_usize("sim.length")?
        .ok_or_else(|| CliError::validation("missing config key `sim.length`"))?;
    let burn_in = cfg.get_usize("sim.burn_in")?.unwrap_or(0);
    let seed = cfg.seed()?;
    let sim = simulate_path(&spec, length, burn_in, seed)?;

    let day0 = dataset::parse_date("2000-01-03").expect("fixed epoch");
    let dates: Vec<i64> = (0..sim.returns.len()).map(|i| day0 + i as i64).collect();
    dataset::write_returns_csv(&out_path(cfg, "returns.csv"), &dates, &sim.returns)?;

    let state_rows: Vec<String> = dates
        .iter()
        .zip(&sim.states)
        .map(|(d, z)| format!("{},{}", dataset::format_date(*d), z + 1))
        .collect();
    write_csv(&out_path(cfg, "states.csv"), "date,state", &state_rows)?;

    let stats = Descriptive::from_sample(&sim.returns)
        .ok_or_else(|| CliError::computation("empty simulation output"))?;
    let mut doc = KeyValueDoc::new("simulation summary");
    doc.put("seed", seed);
    doc.put("length", length);
    doc.put("burn_in", burn_in);
    doc.put("retained", sim.returns.len());
    doc.section("descriptive statistics");
    put_descriptive(&mut doc, &stats);
    doc.write(&out_path(cfg, "simulate_summary.txt"))?;

    println!(
        "simulated {} observations (burn-in {}) -> {}",
        sim.returns.len(),
        burn_in,
        cfg.out_dir.display()
    );
    Ok(())
}

/// Returns the stability verdict so the caller can set the exit status.
pub fn cmd_stability(cfg: &RunConfig) -> Result<bool> {
    ensure_out_dir(cfg)?;
    let spec = cfg.model_spec()?;
    let report = stability_report_with(&spec, cfg.lag_cap()?)?;

    let mut doc = KeyValueDoc::new("stability report");
    doc.put_f64("rho", report.rho);
    doc.put("stable", report.stable);
    match report.bound {
        Some(b) => doc.put_f64("second_moment_bound", b),
        None => doc.put("second_moment_bound", "unbounded"),
    };
    doc.put("lag_cap", report.lag_cap);
    doc.put_slice("pi", &report.pi);
    doc.put_slice("lambda", &report.lambda);
    doc.section("Q (row per line)");
    for (i, row) in report.q.iter().enumerate() {
        doc.put_slice(&format!("q.{}", i + 1), row);
    }
    doc.write(&out_path(cfg, "stability_report.txt"))?;

    println!(
        "rho = {:.4}; stable = {}{}",
        report.rho,
        report.stable,
        report
            .bound
            .map(|b| format!("; E(y^2) bound = {b:.4}"))
            .unwrap_or_default()
    );
    Ok(report.stable)
}

fn family_name(family: ModelFamily) -> &'static str {
    match family {
        ModelFamily::Logistic { m } if m > 1 => "msst",
        ModelFamily::Logistic { .. } => "st",
        ModelFamily::FixedWeight => "hygarch",
    }
}

/// Pooled posterior means across chains (theta columns, then p11/p22).
fn pooled_means(chains: &[PosteriorDraws]) -> (Vec<f64>, Option<[f64; 2]>) {
    let cols = chains[0].param_names.len();
    let mut out = vec![0.0; cols];
    let mut rows = 0usize;
    for c in chains {
        for row in &c.theta {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        rows += c.theta.len();
    }
    out.iter_mut().for_each(|v| *v /= rows as f64);
    let eta = if chains[0].eta.is_empty() {
        None
    } else {
        let mut e = [0.0; 2];
        let mut n = 0usize;
        for c in chains {
            for draw in &c.eta {
                e[0] += draw[0];
                e[1] += draw[1];
            }
            n += c.eta.len();
        }
        Some([e[0] / n as f64, e[1] / n as f64])
    };
    (out, eta)
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let ds = load_dataset(cfg)?;
    let family = cfg.family()?;
    let prior = cfg.prior_spec()?;
    let gibbs_cfg = cfg.gibbs_config()?;
    let chains = run_chains(ds.in_sample(), family, &prior, &gibbs_cfg)
        .map_err(|e| CliError::computation(format!("gibbs sampler: {e}")))?;

    let names = param_names(family);
    let m = family.m();

    // draws table, one row per retained iteration
    let mut header = String::from("chain,iteration");
    for n in &names {
        header.push(',');
        header.push_str(n);
    }
    if m == 2 {
        header.push_str(",p11,p22");
    }
    let mut rows = Vec::new();
    for (k, chain) in chains.iter().enumerate() {
        for (i, draw) in chain.theta.iter().enumerate() {
            let mut row = format!("{},{}", k + 1, i + 1);
            for v in draw {
                row.push(',');
                row.push_str(&v.to_string());
            }
            if m == 2 {
                let e = chain.eta[i];
                row.push_str(&format!(",{},{}", e[0], e[1]));
            }
            rows.push(row);
        }
    }
    write_csv(&out_path(cfg, "draws.csv"), &header, &rows)?;

    // summaries: per chain, then pooled
    let mut doc = KeyValueDoc::new("posterior summary");
    doc.put("family", family_name(family));
    doc.put("regimes", m);
    doc.put("observations", ds.split);
    doc.section("data (full sample)");
    put_descriptive(&mut doc, &ds.descriptive());
    doc.section("run");
    doc.put("iterations", gibbs_cfg.iterations);
    doc.put("warmup", gibbs_cfg.warmup);
    doc.put("grid_points", gibbs_cfg.grid_points);
    doc.put("chains", gibbs_cfg.chains);
    doc.put("seed", gibbs_cfg.seed);
    for (k, chain) in chains.iter().enumerate() {
        doc.section(&format!("chain {}", k + 1));
        for s in &chain.summaries {
            doc.put(
                &format!("{}.mean", s.name),
                format!("{:.6} (sd {:.6})", s.mean, s.std_dev),
            );
        }
    }
    let (means, eta_means) = pooled_means(&chains);
    doc.section("pooled posterior means");
    for (n, v) in names.iter().zip(&means) {
        doc.put_f64(n, *v);
    }
    if let Some([p11, p22]) = eta_means {
        doc.put_f64("p11", p11);
        doc.put_f64("p22", p22);
    }
    doc.write(&out_path(cfg, "fit_summary.txt"))?;

    // marginal-density histogram data per parameter
    for (c, name) in names.iter().enumerate() {
        let col: Vec<f64> = chains
            .iter()
            .flat_map(|ch| ch.theta.iter().map(move |row| row[c]))
            .collect();
        let rows: Vec<String> = histogram(&col, 30)
            .into_iter()
            .map(|(lo, hi, mass)| format!("{lo},{hi},{mass}"))
            .collect();
        write_csv(
            &out_path(cfg, &format!("hist_{name}.csv")),
            "bin_lo,bin_hi,mass",
            &rows,
        )?;
    }
    if m == 2 {
        for (i, name) in ["p11", "p22"].iter().enumerate() {
            let col: Vec<f64> = chains
                .iter()
                .flat_map(|ch| ch.eta.iter().map(move |e| e[i]))
                .collect();
            let rows: Vec<String> = histogram(&col, 30)
                .into_iter()
                .map(|(lo, hi, mass)| format!("{lo},{hi},{mass}"))
                .collect();
            write_csv(
                &out_path(cfg, &format!("hist_{name}.csv")),
                "bin_lo,bin_hi,mass",
                &rows,
            )?;
        }
    }

    // optional run-length-encoded state paths
    if gibbs_cfg.store_states && m == 2 {
        let mut rows = Vec::new();
        for (k, chain) in chains.iter().enumerate() {
            for (i, path) in chain.states.iter().enumerate() {
                let mut start = 0usize;
                for t in 1..=path.len() {
                    if t == path.len() || path[t] != path[start] {
                        rows.push(format!(
                            "{},{},{},{}",
                            k + 1,
                            i + 1,
                            path[start] + 1,
                            t - start
                        ));
                        start = t;
                    }
                }
            }
        }
        write_csv(
            &out_path(cfg, "states_rle.csv"),
            "chain,draw,state,run_length",
            &rows,
        )?;
    }

    // runnable config at the posterior means for stability/forecast/backtest
    let mut fitted = KeyValueDoc::new("fitted parameters (posterior means)");
    fitted.put("model.family", family_name(family));
    fitted.put("model.m", m);
    fitted.put("fracdiff.k", gibbs_cfg.trunc_k);
    fitted.put("seed", gibbs_cfg.seed);
    fitted.put("data.path", cfg.require("data.path")?);
    fitted.put("data.kind", cfg.get("data.kind").unwrap_or("returns"));
    fitted.put("data.split", ds.split);
    if let Some(cap) = cfg.get("stability.lag_cap") {
        fitted.put("stability.lag_cap", cap);
    }
    for j in 0..m {
        for slot in 0..8 {
            let name = ["a0", "a1", "a2", "b0", "b1", "b2", "d", "gamma"][slot];
            let value = means[j * 8 + slot];
            if slot == 7 && matches!(family, ModelFamily::FixedWeight) {
                fitted.put("params.w", value);
            } else {
                fitted.put(&format!("params.{}.{name}", j + 1), value);
            }
        }
    }
    if let Some([p11, p22]) = eta_means {
        fitted.put("params.p11", p11);
        fitted.put("params.p22", p22);
    }
    fitted.write(&out_path(cfg, "fitted_params.conf"))?;

    println!(
        "fit complete: {} chains x {} retained draws -> {}",
        chains.len(),
        chains[0].theta.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

pub fn cmd_forecast(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let ds = load_dataset(cfg)?;
    let spec = cfg.model_spec()?;
    let m = spec.m();

    let mut filter = Filter::init(&spec, ds.in_sample())?;
    let mut records = Vec::with_capacity(ds.len());
    let mut rows = Vec::with_capacity(ds.len());
    for (t, (&y, &date)) in ds.values.iter().zip(&ds.dates).enumerate() {
        let variance = filter.forecast_variance();
        let density = filter.predictive_density(y);
        let psi_high = filter.psi()[m - 1];
        records.push(ForecastRecord {
            t,
            variance,
            density,
        });
        rows.push(format!(
            "{},{},{},{},{},{},{}",
            dataset::format_date(date),
            t,
            variance,
            y,
            y * y,
            density,
            psi_high
        ));
        filter.step(y)?;
    }
    write_csv(
        &out_path(cfg, "forecast.csv"),
        "date,t,forecast_variance,realized,realized_sq,density,psi_high",
        &rows,
    )?;

    let (rmse_in, llv_in) = run_metrics(&records[..ds.split], ds.in_sample())?;
    let (rmse_out, llv_out) = run_metrics(&records[ds.split..], ds.out_of_sample())?;
    let mut doc = KeyValueDoc::new("forecast metrics");
    doc.put("observations", ds.len());
    doc.put("split", ds.split);
    doc.section("in-sample");
    doc.put_f64("rmse", rmse_in);
    doc.put_f64("llv", llv_in);
    doc.section("out-of-sample");
    doc.put_f64("rmse", rmse_out);
    doc.put_f64("llv", llv_out);
    doc.write(&out_path(cfg, "forecast_metrics.txt"))?;

    println!(
        "forecast: in-sample RMSE {rmse_in:.4} LLV {llv_in:.1}; out-of-sample RMSE {rmse_out:.4} LLV {llv_out:.1}"
    );
    Ok(())
}

/// Parse the forecast table back, returning the variance column.
fn read_forecast_variances(path: &Path, expect_len: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| io_err(&format!("reading {}", path.display()), e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::validation(format!("{}: empty file", path.display())))?;
    let col = header
        .split(',')
        .position(|c| c == "forecast_variance")
        .ok_or_else(|| {
            CliError::validation(format!(
                "{}: no forecast_variance column in `{header}`",
                path.display()
            ))
        })?;
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let field = line.split(',').nth(col).ok_or_else(|| {
            CliError::validation(format!("{}:{}: short row", path.display(), lineno + 2))
        })?;
        let v: f64 = field.parse().map_err(|_| {
            CliError::validation(format!(
                "{}:{}: bad variance `{field}`",
                path.display(),
                lineno + 2
            ))
        })?;
        out.push(v);
    }
    if out.len() != expect_len {
        return Err(CliError::validation(format!(
            "{}: {} forecasts against {} observations",
            path.display(),
            out.len(),
            expect_len
        )));
    }
    Ok(out)
}

pub fn cmd_backtest(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let ds = load_dataset(cfg)?;
    let forecast_file = cfg.require("backtest.forecast_file")?;
    let variances = read_forecast_variances(Path::new(forecast_file), ds.len())?;
    let normal_fallback = cfg.get_bool("risk.normal_quantile")?.unwrap_or(false);

    let sigma_out: Vec<f64> = variances[ds.split..].iter().map(|v| v.sqrt()).collect();
    let out_returns = ds.out_of_sample();

    let mut doc = KeyValueDoc::new("VaR backtest (out-of-sample)");
    doc.put("observations", out_returns.len());
    doc.put("in_sample", ds.split);
    for rho in cfg.risk_levels()? {
        let quantile =
            standardized_quantile(ds.in_sample(), &variances[..ds.split], rho, normal_fallback)?;
        let values: Vec<f64> = sigma_out.iter().map(|s| quantile * s).collect();
        let var_series = VarSeries {
            rho,
            quantile,
            values,
        };
        let report = regime_vol_core::backtest::backtest(out_returns, &var_series)?;
        let ex = ExceptionSeries::build(out_returns, &var_series.values)?;

        doc.section(&format!("rho = {rho}"));
        doc.put_f64("quantile", quantile);
        doc.put_f64("expected_exceptions", report.expected);
        doc.put("empirical_exceptions", report.n);
        doc.put(
            "lr_uc",
            format!("{:.4}{}", report.lr_uc, pass_mark(report.pass_uc)),
        );
        doc.put(
            "lr_ind",
            format!("{:.4}{}", report.lr_ind, pass_mark(report.pass_ind)),
        );
        doc.put(
            "lr_cc",
            format!("{:.4}{}", report.lr_cc, pass_mark(report.pass_cc)),
        );
        doc.put("pass_uc", report.pass_uc);
        doc.put("pass_ind", report.pass_ind);
        doc.put("pass_cc", report.pass_cc);

        let rows: Vec<String> = ds.dates[ds.split..]
            .iter()
            .zip(out_returns)
            .zip(var_series.values.iter().zip(&ex.q))
            .map(|((date, y), (var, q))| {
                format!(
                    "{},{},{},{}",
                    dataset::format_date(*date),
                    y,
                    var,
                    u8::from(*q)
                )
            })
            .collect();
        write_csv(
            &out_path(cfg, &format!("exceptions_{rho}.csv")),
            "date,return,var,exception",
            &rows,
        )?;
        println!(
            "rho {rho}: expected {:.0}, observed {}, UC {:.3}{} IND {:.3}{} CC {:.3}{}",
            report.expected,
            report.n,
            report.lr_uc,
            pass_mark(report.pass_uc),
            report.lr_ind,
            pass_mark(report.pass_ind),
            report.lr_cc,
            pass_mark(report.pass_cc),
        );
    }
    doc.write(&out_path(cfg, "backtest_report.txt"))?;
    Ok(())
}

fn pass_mark(pass: bool) -> &'static str {
    if pass {
        "*"
    } else {
        ""
    }
}

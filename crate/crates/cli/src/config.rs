//! Flat key-value run configuration.
//!
//! Files hold one `key = value` pair per line with `#` comments. Command-line
//! overrides of the form `key=value` replace file entries; `--seed` and
//! `--out` are shorthand for the `seed` and `out` keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use regime_vol_core::gibbs::{GibbsConfig, ModelFamily, ParamBounds, PriorSpec};
use regime_vol_core::model::{ModelSpec, RegimeParams, TransitionMatrix, WeightMode};

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| io_err(&format!("reading config {}", path.display()), e))?;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::validation(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(RunConfig {
            entries,
            out_dir: PathBuf::from("."),
        })
    }

    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            CliError::usage(format!(
                "override `{assignment}` is not of the form key=value"
            ))
        })?;
        self.entries
            .insert(key.trim().to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| CliError::validation(format!("missing config key `{key}`")))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::validation(format!("key `{key}`: `{s}` is not a number"))),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| CliError::validation(format!("missing config key `{key}`")))
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s.parse::<usize>().map(Some).map_err(|_| {
                CliError::validation(format!("key `{key}`: `{s}` is not a non-negative integer"))
            }),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s.parse::<u64>().map(Some).map_err(|_| {
                CliError::validation(format!("key `{key}`: `{s}` is not a non-negative integer"))
            }),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some("true") | Some("1") => Ok(Some(true)),
            Some("false") | Some("0") => Ok(Some(false)),
            Some(s) => Err(CliError::validation(format!(
                "key `{key}`: `{s}` is not a boolean"
            ))),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.get_u64("seed")?.unwrap_or(0))
    }

    pub fn trunc_k(&self) -> Result<usize> {
        Ok(self.get_usize("fracdiff.k")?.unwrap_or(1000))
    }

    pub fn lag_cap(&self) -> Result<usize> {
        Ok(self
            .get_usize("stability.lag_cap")?
            .unwrap_or(regime_vol_core::stability::DEFAULT_LAG_CAP))
    }

    pub fn family(&self) -> Result<ModelFamily> {
        let m = self.get_usize("model.m")?.unwrap_or(1);
        match self.require("model.family")? {
            "msst" => Ok(ModelFamily::Logistic { m }),
            "st" => Ok(ModelFamily::Logistic { m: 1 }),
            "hygarch" => Ok(ModelFamily::FixedWeight),
            other => Err(CliError::validation(format!(
                "model.family must be msst, st or hygarch, got `{other}`"
            ))),
        }
    }

    /// Risk levels for VaR, default 0.05 and 0.10.
    pub fn risk_levels(&self) -> Result<Vec<f64>> {
        match self.get("risk.levels") {
            None => Ok(vec![0.05, 0.10]),
            Some(s) => s
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        CliError::validation(format!("risk.levels: `{tok}` is not a number"))
                    })
                })
                .collect(),
        }
    }

    /// Fixed model parameters (simulate, stability, forecast).
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let family = self.family()?;
        let m = family.m();
        let mut regimes = Vec::with_capacity(m);
        for j in 1..=m {
            let slot = |name: &str| self.require_f64(&format!("params.{j}.{name}"));
            regimes.push(RegimeParams {
                a0: slot("a0")?,
                a1: slot("a1")?,
                a2: slot("a2")?,
                b0: slot("b0")?,
                b1: slot("b1")?,
                b2: self.get_f64(&format!("params.{j}.b2"))?.unwrap_or(0.0),
                d: slot("d")?,
                gamma: match family {
                    ModelFamily::FixedWeight => {
                        self.get_f64(&format!("params.{j}.gamma"))?.unwrap_or(1.0)
                    }
                    _ => slot("gamma")?,
                },
            });
        }
        let transition = if m == 1 {
            TransitionMatrix::single_state()
        } else if m == 2 {
            TransitionMatrix::two_state(
                self.require_f64("params.p11")?,
                self.require_f64("params.p22")?,
            )?
        } else {
            // general m: rows listed as params.p.<r> = comma-separated row
            let mut entries = Vec::with_capacity(m * m);
            for r in 1..=m {
                let row = self.require(&format!("params.p.{r}"))?;
                for tok in row.split(',') {
                    entries.push(tok.trim().parse::<f64>().map_err(|_| {
                        CliError::validation(format!("params.p.{r}: `{tok}` is not a number"))
                    })?);
                }
            }
            TransitionMatrix::new(m, entries)?
        };
        let weight_mode = match family {
            ModelFamily::FixedWeight => WeightMode::Fixed(self.require_f64("params.w")?),
            _ => WeightMode::Logistic,
        };
        Ok(ModelSpec::new(
            regimes,
            transition,
            weight_mode,
            self.trunc_k()?,
        )?)
    }

    fn bounds(&self, key: &str, default: ParamBounds) -> Result<ParamBounds> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => {
                let (lo, hi) = s.split_once(',').ok_or_else(|| {
                    CliError::validation(format!("key `{key}`: expected `lo,hi`, got `{s}`"))
                })?;
                let parse = |tok: &str| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        CliError::validation(format!("key `{key}`: `{tok}` is not a number"))
                    })
                };
                Ok(ParamBounds::new(parse(lo)?, parse(hi)?))
            }
        }
    }

    fn beta_pair(&self, key: &str) -> Result<(f64, f64)> {
        match self.get(key) {
            None => Ok((1.0, 1.0)),
            Some(s) => {
                let (a, b) = s.split_once(',').ok_or_else(|| {
                    CliError::validation(format!("key `{key}`: expected `c1,c2`, got `{s}`"))
                })?;
                let parse = |tok: &str| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        CliError::validation(format!("key `{key}`: `{tok}` is not a number"))
                    })
                };
                Ok((parse(a)?, parse(b)?))
            }
        }
    }

    pub fn prior_spec(&self) -> Result<PriorSpec> {
        let d = PriorSpec::default();
        Ok(PriorSpec {
            a0: self.bounds("priors.a0", d.a0)?,
            a1: self.bounds("priors.a1", d.a1)?,
            a2: self.bounds("priors.a2", d.a2)?,
            b0: self.bounds("priors.b0", d.b0)?,
            b1: self.bounds("priors.b1", d.b1)?,
            b2: self.bounds("priors.b2", d.b2)?,
            d: self.bounds("priors.d", d.d)?,
            gamma: self.bounds("priors.gamma", d.gamma)?,
            weight: self.bounds("priors.w", d.weight)?,
            p11: self.beta_pair("priors.p11")?,
            p22: self.beta_pair("priors.p22")?,
        })
    }

    pub fn gibbs_config(&self) -> Result<GibbsConfig> {
        let d = GibbsConfig::default();
        Ok(GibbsConfig {
            iterations: self.get_usize("gibbs.iterations")?.unwrap_or(d.iterations),
            warmup: self.get_usize("gibbs.warmup")?.unwrap_or(d.warmup),
            grid_points: self
                .get_usize("gibbs.grid_points")?
                .unwrap_or(d.grid_points),
            seed: self.seed()?,
            chains: self.get_usize("gibbs.chains")?.unwrap_or(1),
            store_states: self.get_bool("gibbs.store_states")?.unwrap_or(false),
            trunc_k: self.trunc_k()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> PathBuf {
        let path = std::env::temp_dir().join(format!(
            "rvl-config-test-{}-{}.conf",
            std::process::id(),
            content.len()
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn parses_keys_comments_and_overrides() {
        let path = write_temp(
            "# comment\nmodel.family = msst\nmodel.m = 2\nseed = 7 # trailing\n\nfracdiff.k=400\n",
        );
        let mut cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.get("model.family"), Some("msst"));
        assert_eq!(cfg.seed().unwrap(), 7);
        assert_eq!(cfg.trunc_k().unwrap(), 400);
        cfg.apply_override("seed=9").unwrap();
        assert_eq!(cfg.seed().unwrap(), 9);
        assert!(cfg.apply_override("no-equals").is_err());
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn malformed_line_reports_location() {
        let path = write_temp("model.family msst\n");
        let err = RunConfig::from_file(&path).unwrap_err();
        assert!(err.msg.contains(":1:"), "{}", err.msg);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn model_spec_round_trip() {
        let path = write_temp(
            "model.family = msst\nmodel.m = 2\n\
             params.1.a0 = 0.18\nparams.1.a1 = 0.20\nparams.1.a2 = 0.25\n\
             params.1.b0 = 0.15\nparams.1.b1 = 0.14\nparams.1.d = 0.40\nparams.1.gamma = 0.60\n\
             params.2.a0 = 1.50\nparams.2.a1 = 0.40\nparams.2.a2 = 0.35\n\
             params.2.b0 = 1.00\nparams.2.b1 = 0.18\nparams.2.d = 0.85\nparams.2.gamma = 2.00\n\
             params.p11 = 0.85\nparams.p22 = 0.60\n",
        );
        let cfg = RunConfig::from_file(&path).unwrap();
        let spec = cfg.model_spec().unwrap();
        assert_eq!(spec.m(), 2);
        assert_eq!(spec.regimes[1].a0, 1.5);
        assert_eq!(spec.transition.prob(0, 0), 0.85);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn prior_and_gibbs_defaults() {
        let path = write_temp("model.family = st\npriors.b2 = 0,0.1\ngibbs.iterations = 100\n");
        let cfg = RunConfig::from_file(&path).unwrap();
        let prior = cfg.prior_spec().unwrap();
        assert_eq!(prior.b2, ParamBounds::new(0.0, 0.1));
        assert_eq!(prior.p11, (1.0, 1.0));
        let g = cfg.gibbs_config().unwrap();
        assert_eq!(g.iterations, 100);
        assert_eq!(g.grid_points, 33);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn three_state_transition_rows() {
        let regime = |j: usize, a0: f64| {
            format!(
                "params.{j}.a0 = {a0}\nparams.{j}.a1 = 0.2\nparams.{j}.a2 = 0.2\n\
                 params.{j}.b0 = 0.2\nparams.{j}.b1 = 0.1\nparams.{j}.d = 0.4\n\
                 params.{j}.gamma = 1.0\n"
            )
        };
        let text = format!(
            "model.family = msst\nmodel.m = 3\n{}{}{}\
             params.p.1 = 0.8,0.1,0.1\nparams.p.2 = 0.2,0.7,0.1\nparams.p.3 = 0.1,0.2,0.7\n",
            regime(1, 0.2),
            regime(2, 0.6),
            regime(3, 1.4)
        );
        let path = write_temp(&text);
        let cfg = RunConfig::from_file(&path).unwrap();
        let spec = cfg.model_spec().unwrap();
        assert_eq!(spec.m(), 3);
        assert_eq!(spec.transition.prob(1, 0), 0.2);
        assert_eq!(spec.transition.prob(2, 2), 0.7);
        std::fs::remove_file(path).ok();
    }
}

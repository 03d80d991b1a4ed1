//! Experiment configuration and the `key = value` file format that overrides
//! command-line settings.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::{KsdConfig, KsdEstimator};
use crate::error::{Error, Result};

/// Replication `r` draws its seeds from `seed_base + r * SEED_STRIDE + offset`
/// with `offset < SEED_STRIDE`.
pub const SEED_STRIDE: u64 = 1000;

pub const DEFAULT_SAMPLE_SIZES: [usize; 15] = [
    100, 138, 193, 268, 372, 517, 719, 1000, 1389, 1930, 2682, 3727, 5179, 7196, 10000,
];

/// `10^(-5 + 4k/9)` for `k = 0..9`.
pub fn default_epsilon_grid() -> Vec<f64> {
    (0..10)
        .map(|k| 10f64.powf(-5.0 + 4.0 * k as f64 / 9.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Exp3,
    Bench,
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
            ExperimentId::Bench => "bench",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment_id: ExperimentId,
    pub replications: usize,
    pub sample_sizes: Vec<usize>,
    pub epsilon_grid: Vec<f64>,
    pub seed_base: u64,
    pub output_path: Option<PathBuf>,
    /// SGLD chain length per run.
    pub sgld_steps: usize,
    pub gradient_noise_sd: f64,
    /// Reference RWM chain length, before burn-in removal.
    pub rwm_steps: usize,
    pub rwm_proposal_sd: f64,
    pub rwm_burn_in: f64,
    /// Sample size of the single large MLE fit that locates the pseudo-true
    /// parameter in the structural-mismatch experiment.
    pub pseudo_true_n: usize,
    pub ksd: KsdConfig,
}

impl ExperimentConfig {
    pub fn new(experiment_id: ExperimentId) -> Self {
        Self {
            experiment_id,
            replications: if experiment_id == ExperimentId::Bench {
                10
            } else {
                100
            },
            sample_sizes: DEFAULT_SAMPLE_SIZES.to_vec(),
            epsilon_grid: default_epsilon_grid(),
            seed_base: 0,
            output_path: None,
            sgld_steps: 5000,
            gradient_noise_sd: 1.0,
            rwm_steps: 500_000,
            rwm_proposal_sd: 1.0,
            rwm_burn_in: 0.2,
            pseudo_true_n: 1_000_000,
            ksd: KsdConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return fail("sample_sizes must be non-empty and strictly ascending".into());
        }
        if self.sample_sizes[0] < 10 {
            return fail("sample sizes below 10 are not supported".into());
        }
        if self.epsilon_grid.is_empty()
            || self
                .epsilon_grid
                .iter()
                .any(|e| !(*e > 0.0 && e.is_finite()))
        {
            return fail("epsilon_grid must hold positive step sizes".into());
        }
        if self.sgld_steps < 10 || self.rwm_steps < 10 {
            return fail("chains need at least 10 steps".into());
        }
        if !(0.0..1.0).contains(&self.rwm_burn_in) {
            return fail("rwm_burn_in must lie in [0, 1)".into());
        }
        let positive_sd = self.rwm_proposal_sd > 0.0 && self.rwm_proposal_sd.is_finite();
        let noise_ok = self.gradient_noise_sd >= 0.0 && self.gradient_noise_sd.is_finite();
        if !positive_sd || !noise_ok {
            return fail(
                "rwm_proposal_sd must be positive and gradient_noise_sd non-negative".into(),
            );
        }
        if self.pseudo_true_n < 10 {
            return fail("pseudo_true_n must be at least 10".into());
        }
        self.ksd.validate()
    }

    /// Sets one option by name. Returns `Ok(false)` for unknown keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "replications" | "reps" => self.replications = parse(key, value)?,
            "sample_sizes" => self.sample_sizes = parse_list(key, value)?,
            "epsilon_grid" => self.epsilon_grid = parse_list(key, value)?,
            "seed_base" | "seed" => self.seed_base = parse(key, value)?,
            "output_path" | "out" => self.output_path = Some(PathBuf::from(value)),
            "sgld_steps" => self.sgld_steps = parse(key, value)?,
            "gradient_noise_sd" => self.gradient_noise_sd = parse(key, value)?,
            "rwm_steps" => self.rwm_steps = parse(key, value)?,
            "rwm_proposal_sd" => self.rwm_proposal_sd = parse(key, value)?,
            "rwm_burn_in" => self.rwm_burn_in = parse(key, value)?,
            "pseudo_true_n" => self.pseudo_true_n = parse(key, value)?,
            "ksd_c" => self.ksd.c = parse(key, value)?,
            "ksd_beta" => self.ksd.beta = parse(key, value)?,
            "ksd_estimator" => {
                self.ksd.estimator = match value.to_ascii_lowercase().as_str() {
                    "ustat" => KsdEstimator::UStat,
                    "vstat" => KsdEstimator::VStat,
                    _ => {
                        return Err(Error::Config(format!(
                            "ksd_estimator: unknown value '{value}'"
                        )))
                    }
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }
}

pub fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse '{value}': {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// One `key = value` entry with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Setting {
    pub key: String,
    pub value: String,
    pub line: u64,
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys are lower-cased and `-` becomes `_`.
pub fn parse_settings(text: &str, path: &Path) -> Result<Vec<Setting>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                message: format!("expected key = value, found '{line}'"),
            });
        };
        out.push(Setting {
            key: key.trim().to_ascii_lowercase().replace('-', "_"),
            value: value.trim().to_string(),
            line: i as u64 + 1,
        });
    }
    Ok(out)
}

pub fn read_settings(path: &Path) -> Result<Vec<Setting>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_settings(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        let c = ExperimentConfig::new(ExperimentId::Exp1);
        assert_eq!(c.sample_sizes.len(), 15);
        assert_eq!(c.replications, 100);
        let eps = default_epsilon_grid();
        assert_eq!(eps.len(), 10);
        assert!((eps[0] - 1e-5).abs() < 1e-20 && (eps[9] - 1e-1).abs() < 1e-15);
        c.validate().unwrap();
    }

    #[test]
    fn settings_round_trip() {
        let text = "# comment\nreps = 7\n\nsample-sizes = 10, 20,40\nksd_estimator=VStat\n";
        let settings = parse_settings(text, Path::new("c.conf")).unwrap();
        let mut c = ExperimentConfig::new(ExperimentId::Exp3);
        for s in &settings {
            assert!(c.set(&s.key, &s.value).unwrap());
        }
        assert_eq!(c.replications, 7);
        assert_eq!(c.sample_sizes, vec![10, 20, 40]);
        assert_eq!(c.ksd.estimator, KsdEstimator::VStat);
        assert!(!c.set("colour", "blue").unwrap());
    }

    #[test]
    fn malformed_setting_reports_line() {
        let err = parse_settings("reps = 1\nnonsense\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn validation_rejects_unsorted_sizes() {
        let mut c = ExperimentConfig::new(ExperimentId::Exp1);
        c.sample_sizes = vec![200, 100];
        assert!(c.validate().is_err());
        c.sample_sizes = vec![100];
        c.replications = 0;
        assert!(c.validate().is_err());
    }
}

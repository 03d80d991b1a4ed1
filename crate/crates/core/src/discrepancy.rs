//! Copula Discrepancy estimators, the equivalence test built on them, and
//! contamination used to probe their robustness.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::index;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::copula::{self, CopulaFamily, CopulaModel, TAU_CLAMP_HI, TAU_CLAMP_LO};
use crate::data::BivariateSample;
use crate::error::{Error, Result};
use crate::optimize::brent_bounded;
use crate::ranks::{self, PseudoObservations, VarianceEstimator};
use crate::seeded_rng;

pub const MLE_XTOL: f64 = 1e-6;
pub const MLE_MAX_ITER: usize = 200;
/// Half-width, in tau units, of the initial MLE search bracket.
const MLE_TAU_BRACKET: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Moment,
    Mle,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Moment => "moment",
            Estimator::Mle => "mle",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "moment" => Ok(Estimator::Moment),
            "mle" => Ok(Estimator::Mle),
            other => Err(Error::Config(format!(
                "unknown estimator '{other}' (expected moment or mle)"
            ))),
        }
    }
}

/// Result of one CD evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticReport {
    pub estimator: Estimator,
    pub family: CopulaFamily,
    pub theta_p: f64,
    pub tau_p: f64,
    /// Fitted parameter, clamped into the family's estimation bounds.
    pub theta_hat: f64,
    /// Empirical Kendall's tau of the sample.
    pub tau_hat: f64,
    /// Tau of the fitted model. For the moment estimator this is the
    /// empirical tau itself, also when `theta_hat` had to be clamped.
    pub tau_hat_model: f64,
    /// `|tau_p - tau_hat_model|`.
    pub cd: f64,
    pub n: usize,
    pub wall_time: Duration,
    /// Empirical tau fell outside `(0, 1)`, where neither family can fit it.
    pub degenerate: bool,
    /// `theta_hat` sits on an estimation bound.
    pub boundary: bool,
    /// Maximized pseudo-log-likelihood (MLE only).
    pub log_likelihood: Option<f64>,
}

fn target_model(family: CopulaFamily, theta_p: f64) -> Result<CopulaModel> {
    CopulaModel::new(family, theta_p)
}

/// Moment-based CD: `|tau(theta_p) - tau_hat|` with `theta_hat` obtained by
/// inverting the tau map at the empirical tau.
pub fn cd_moment(
    sample: &BivariateSample,
    family: CopulaFamily,
    theta_p: f64,
) -> Result<DiagnosticReport> {
    let start = Instant::now();
    let target = target_model(family, theta_p)?;
    let pobs = ranks::pseudo_observations(sample)?;
    let tau_hat = ranks::kendall_tau(&pobs);
    let mut report = moment_report(&pobs, tau_hat, &target);
    report.wall_time = start.elapsed();
    Ok(report)
}

fn moment_report(
    pobs: &PseudoObservations,
    tau_hat: f64,
    target: &CopulaModel,
) -> DiagnosticReport {
    let family = target.family();
    let bounds = family.default_bounds();
    let tau_p = target.tau();
    let degenerate = !(tau_hat > 0.0 && tau_hat < 1.0);
    let raw = if tau_hat <= 0.0 {
        bounds.lower
    } else {
        family.theta_unchecked(tau_hat.clamp(TAU_CLAMP_LO, TAU_CLAMP_HI))
    };
    let theta_hat = bounds.clamp(raw);
    DiagnosticReport {
        estimator: Estimator::Moment,
        family,
        theta_p: target.theta(),
        tau_p,
        theta_hat,
        tau_hat,
        tau_hat_model: tau_hat,
        cd: (tau_p - tau_hat).abs(),
        n: pobs.len(),
        wall_time: Duration::ZERO,
        degenerate,
        boundary: theta_hat != raw || theta_hat == bounds.lower || theta_hat == bounds.upper,
        log_likelihood: None,
    }
}

/// Per-point quantities that make the pseudo-log-likelihood cheap to
/// evaluate at many `theta`.
enum LogTerms {
    /// `x = -ln u`, `y = -ln v`, `ln x`, `ln y`.
    Gumbel(Vec<[f64; 4]>),
    /// `ln u`, `ln v`.
    Clayton(Vec<[f64; 2]>),
}

impl LogTerms {
    fn new(family: CopulaFamily, pobs: &PseudoObservations) -> Self {
        match family {
            CopulaFamily::Gumbel => LogTerms::Gumbel(
                pobs.points()
                    .map(|(u, v)| {
                        let (x, y) = (-u.ln(), -v.ln());
                        [x, y, x.ln(), y.ln()]
                    })
                    .collect(),
            ),
            CopulaFamily::Clayton => {
                LogTerms::Clayton(pobs.points().map(|(u, v)| [u.ln(), v.ln()]).collect())
            }
        }
    }

    fn point(&self, theta: f64, i: usize) -> f64 {
        match self {
            LogTerms::Gumbel(t) => {
                let [x, y, lx, ly] = t[i];
                copula::gumbel_log_density(theta, x, y, lx, ly)
            }
            LogTerms::Clayton(t) => copula::clayton_log_density(theta, t[i][0], t[i][1]),
        }
    }

    fn sum(&self, theta: f64) -> f64 {
        match self {
            LogTerms::Gumbel(t) => t
                .iter()
                .map(|&[x, y, lx, ly]| copula::gumbel_log_density(theta, x, y, lx, ly))
                .sum(),
            LogTerms::Clayton(t) => t
                .iter()
                .map(|&[lu, lv]| copula::clayton_log_density(theta, lu, lv))
                .sum(),
        }
    }

    fn len(&self) -> usize {
        match self {
            LogTerms::Gumbel(t) => t.len(),
            LogTerms::Clayton(t) => t.len(),
        }
    }
}

/// Pseudo-log-likelihood `sum_i log c_theta(u_i, v_i)` of a model on
/// pseudo-observations.
pub fn pseudo_log_likelihood(pobs: &PseudoObservations, model: &CopulaModel) -> Result<f64> {
    let terms = LogTerms::new(model.family(), pobs);
    checked_sum(&terms, pobs, model.theta())
}

fn checked_sum(terms: &LogTerms, pobs: &PseudoObservations, theta: f64) -> Result<f64> {
    let total = terms.sum(theta);
    if total.is_finite() {
        return Ok(total);
    }
    let index = (0..terms.len())
        .find(|&i| !terms.point(theta, i).is_finite())
        .unwrap_or(0);
    Err(Error::NonFiniteLikelihood {
        index,
        u: pobs.u()[index],
        v: pobs.v()[index],
        theta,
    })
}

/// MLE-based CD: `theta_hat` maximizes the pseudo-log-likelihood over the
/// family's estimation bounds, and CD is `|tau(theta_p) - tau(theta_hat)|`.
///
/// The search starts on a bracket around the moment estimate and falls back
/// to the full interval when the optimum lands on the bracket's edge.
pub fn cd_mle(
    sample: &BivariateSample,
    family: CopulaFamily,
    theta_p: f64,
) -> Result<DiagnosticReport> {
    let start = Instant::now();
    let target = target_model(family, theta_p)?;
    if sample.len() < 10 {
        return Err(Error::InsufficientData {
            required: 10,
            actual: sample.len(),
        });
    }
    let pobs = ranks::pseudo_observations(sample)?;
    let tau_hat = ranks::kendall_tau(&pobs);
    let terms = LogTerms::new(family, &pobs);
    let bounds = family.default_bounds();

    let mut failure = None;
    let mut objective = |theta: f64| -> f64 {
        let ll = terms.sum(theta);
        if !ll.is_finite() && failure.is_none() {
            failure = Some(theta);
        }
        -ll
    };

    let degenerate = !(tau_hat > 0.0 && tau_hat < 1.0);
    let full = (bounds.lower, bounds.upper);
    let bracket = if degenerate {
        full
    } else {
        let tau_lo = (tau_hat - MLE_TAU_BRACKET).max(TAU_CLAMP_LO);
        let tau_hi = (tau_hat + MLE_TAU_BRACKET).min(TAU_CLAMP_HI);
        (
            bounds.clamp(family.theta_unchecked(tau_lo)),
            bounds.clamp(family.theta_unchecked(tau_hi)),
        )
    };
    let mut best = brent_bounded(&mut objective, bracket.0, bracket.1, MLE_XTOL, MLE_MAX_ITER);
    let near = |a: f64, b: f64| (a - b).abs() <= 10.0 * MLE_XTOL;
    let on_inner_edge = (near(best.x, bracket.0) && bracket.0 > full.0)
        || (near(best.x, bracket.1) && bracket.1 < full.1);
    if on_inner_edge {
        let wide = brent_bounded(&mut objective, full.0, full.1, MLE_XTOL, MLE_MAX_ITER);
        if wide.value <= best.value {
            best = wide;
        }
    }
    if let Some(theta) = failure {
        checked_sum(&terms, &pobs, theta)?;
    }
    let log_likelihood = checked_sum(&terms, &pobs, best.x)?;

    let theta_hat = best.x;
    let tau_p = target.tau();
    let tau_hat_model = family.tau_unchecked(theta_hat);
    Ok(DiagnosticReport {
        estimator: Estimator::Mle,
        family,
        theta_p,
        tau_p,
        theta_hat,
        tau_hat,
        tau_hat_model,
        cd: (tau_p - tau_hat_model).abs(),
        n: pobs.len(),
        wall_time: start.elapsed(),
        degenerate,
        boundary: near(theta_hat, full.0) || near(theta_hat, full.1),
        log_likelihood: Some(log_likelihood),
    })
}

/// Runs the chosen estimator.
pub fn cd(
    sample: &BivariateSample,
    family: CopulaFamily,
    theta_p: f64,
    estimator: Estimator,
) -> Result<DiagnosticReport> {
    match estimator {
        Estimator::Moment => cd_moment(sample, family, theta_p),
        Estimator::Mle => cd_mle(sample, family, theta_p),
    }
}

/// Outcome of the copula-equivalence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub t_statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub critical_value: f64,
    pub sigma_tau_hat: f64,
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// `Phi^{-1}(1 - alpha/2)`.
pub fn critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "(0, 1)",
        });
    }
    Ok(standard_normal().inverse_cdf(1.0 - alpha / 2.0))
}

/// Folded-normal tail `2 (1 - Phi(t))`.
pub fn folded_normal_p_value(t: f64) -> f64 {
    erfc(t / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Tests H0: the sample's copula has the target's tau, with statistic
/// `T = sqrt(n) * CD / sigma_tau_hat` (moment CD, jackknife variance).
pub fn equivalence_test(
    sample: &BivariateSample,
    family: CopulaFamily,
    theta_p: f64,
    alpha: f64,
) -> Result<TestResult> {
    equivalence_test_with(sample, family, theta_p, alpha, VarianceEstimator::Jackknife)
}

pub fn equivalence_test_with(
    sample: &BivariateSample,
    family: CopulaFamily,
    theta_p: f64,
    alpha: f64,
    variance: VarianceEstimator,
) -> Result<TestResult> {
    let critical = critical_value(alpha)?;
    let target = target_model(family, theta_p)?;
    if sample.len() < 10 {
        return Err(Error::InsufficientData {
            required: 10,
            actual: sample.len(),
        });
    }
    let pobs = ranks::pseudo_observations(sample)?;
    let tau_hat = ranks::kendall_tau(&pobs);
    let report = moment_report(&pobs, tau_hat, &target);
    let sigma = variance.sigma_tau(&pobs)?;
    if sigma <= 0.0 {
        return Err(Error::Degenerate(
            "estimated sigma_tau is zero; the test statistic is undefined".into(),
        ));
    }
    let t = (pobs.len() as f64).sqrt() * report.cd / sigma;
    Ok(TestResult {
        t_statistic: t,
        p_value: folded_normal_p_value(t),
        reject: t > critical,
        alpha,
        critical_value: critical,
        sigma_tau_hat: sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContaminationMode {
    /// Replacement points move jointly up and to the right of the data.
    Concordant,
    /// Replacement points move right while moving down.
    Discordant,
}

/// Replaces `floor(fraction * n)` randomly chosen points with extreme points
/// beyond the sample's range, lying on an increasing (concordant) or
/// decreasing (discordant) line.
pub fn contaminate(
    sample: &BivariateSample,
    fraction: f64,
    mode: ContaminationMode,
    seed: u64,
) -> Result<BivariateSample> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Domain {
            what: "fraction",
            value: fraction,
            domain: "[0, 1)",
        });
    }
    let n = sample.len();
    let m = (fraction * n as f64).floor() as usize;
    let mut out = sample.clone();
    if m == 0 {
        return Ok(out);
    }
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        (lo, hi, span)
    };
    let (_, max_x, span_x) = range(sample.x());
    let (min_y, max_y, span_y) = range(sample.y());
    let mut rng = seeded_rng(seed);
    let chosen = index::sample(&mut rng, n, m);
    let (xs, ys) = out.columns_mut();
    for (k, i) in chosen.iter().enumerate() {
        let step = (k + 1) as f64 / m as f64;
        xs[i] = max_x + span_x * step;
        ys[i] = match mode {
            ContaminationMode::Concordant => max_y + span_y * step,
            ContaminationMode::Discordant => min_y - span_y * step,
        };
    }
    Ok(out)
}

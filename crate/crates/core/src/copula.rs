//! Bivariate Archimedean copulas: Gumbel (upper-tail dependent) and Clayton
//! (lower-tail dependent).
//!
//! Both families have strict generators, closed-form Kendall's tau maps and
//! exact frailty samplers:
//!
//! | family  | generator            | tau(theta)    | frailty                 |
//! |---------|----------------------|---------------|-------------------------|
//! | Gumbel  | `(-ln t)^theta`      | `1 - 1/theta` | positive stable(1/theta)|
//! | Clayton | `(t^-theta - 1)/theta` | `theta/(theta+2)` | Gamma(1/theta, 1)   |
//!
//! Densities are evaluated in log space so that parameters near the
//! estimation bounds and points close to the unit-square boundary stay finite.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01};

use crate::data::BivariateSample;
use crate::error::{Error, Result};
use crate::seeded_rng;

/// Lower clamp applied to tau before inversion.
pub const TAU_CLAMP_LO: f64 = 1e-6;
/// Upper clamp applied to tau before inversion.
pub const TAU_CLAMP_HI: f64 = 1.0 - 1e-6;

/// Largest double strictly below one.
const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CopulaFamily {
    Gumbel,
    Clayton,
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CopulaFamily::Gumbel => f.write_str("gumbel"),
            CopulaFamily::Clayton => f.write_str("clayton"),
        }
    }
}

impl FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gumbel" => Ok(CopulaFamily::Gumbel),
            "clayton" => Ok(CopulaFamily::Clayton),
            other => Err(Error::Config(format!(
                "unknown copula family {other:?} (expected gumbel or clayton)"
            ))),
        }
    }
}

/// Compact parameter interval used by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub lower: f64,
    pub upper: f64,
}

impl ParamBounds {
    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lower && theta <= self.upper
    }

    pub fn clamp(&self, theta: f64) -> f64 {
        theta.clamp(self.lower, self.upper)
    }
}

impl CopulaFamily {
    /// Default estimation bounds: Gumbel `[1+1e-6, 50]`, Clayton `[1e-6, 50]`.
    pub fn default_bounds(self) -> ParamBounds {
        match self {
            CopulaFamily::Gumbel => ParamBounds {
                lower: 1.0 + 1e-6,
                upper: 50.0,
            },
            CopulaFamily::Clayton => ParamBounds {
                lower: 1e-6,
                upper: 50.0,
            },
        }
    }

    /// Whether `theta` lies in the family's mathematical parameter space
    /// (Gumbel `[1, inf)`, Clayton `(0, inf)`).
    pub fn is_admissible(self, theta: f64) -> bool {
        theta.is_finite()
            && match self {
                CopulaFamily::Gumbel => theta >= 1.0,
                CopulaFamily::Clayton => theta > 0.0,
            }
    }

    fn check(self, theta: f64) -> Result<()> {
        if self.is_admissible(theta) {
            Ok(())
        } else {
            let lower = match self {
                CopulaFamily::Gumbel => 1.0,
                CopulaFamily::Clayton => 0.0,
            };
            Err(Error::ParameterOutOfRange {
                family: self,
                theta,
                lower,
                upper: f64::INFINITY,
            })
        }
    }

    pub(crate) fn tau_unchecked(self, theta: f64) -> f64 {
        match self {
            CopulaFamily::Gumbel => 1.0 - 1.0 / theta,
            CopulaFamily::Clayton => theta / (theta + 2.0),
        }
    }

    pub(crate) fn theta_unchecked(self, tau: f64) -> f64 {
        match self {
            CopulaFamily::Gumbel => 1.0 / (1.0 - tau),
            CopulaFamily::Clayton => 2.0 * tau / (1.0 - tau),
        }
    }
}

/// A copula family together with its dependence parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaModel {
    family: CopulaFamily,
    theta: f64,
}

impl CopulaModel {
    pub fn new(family: CopulaFamily, theta: f64) -> Result<Self> {
        family.check(theta)?;
        Ok(Self { family, theta })
    }

    /// The model whose population Kendall's tau equals `tau`.
    pub fn from_tau(family: CopulaFamily, tau: f64) -> Result<Self> {
        Self::new(family, theta_from_tau(family, tau)?)
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tau(&self) -> f64 {
        tau_from_theta(self)
    }
}

impl fmt::Display for CopulaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(theta={})", self.family, self.theta)
    }
}

/// Population Kendall's tau of the model.
pub fn tau_from_theta(model: &CopulaModel) -> f64 {
    model.family.tau_unchecked(model.theta)
}

/// Inverts the tau map. `tau` is clamped to `[1e-6, 1 - 1e-6]` first; values
/// outside `[0, 1]` are rejected.
pub fn theta_from_tau(family: CopulaFamily, tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain {
            what: "tau",
            value: tau,
            domain: "[0, 1]",
        });
    }
    Ok(family.theta_unchecked(tau.clamp(TAU_CLAMP_LO, TAU_CLAMP_HI)))
}

fn check_closed_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            domain: "[0, 1]",
        })
    }
}

fn check_open_unit(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            domain: "(0, 1)",
        })
    }
}

/// `ln(e^a + e^b - 1)` for `a, b >= 0`, accurate when both are tiny and
/// when either is huge.
fn ln_clayton_sum(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m < 30.0 {
        (a.exp_m1() + b.exp_m1()).ln_1p()
    } else {
        let lo = a.min(b);
        m + ((lo - m).exp() - (-m).exp()).ln_1p()
    }
}

/// `ln(e^p + e^q)`.
fn ln_add_exp(p: f64, q: f64) -> f64 {
    let (hi, lo) = if p >= q { (p, q) } else { (q, p) };
    hi + (lo - hi).exp().ln_1p()
}

/// Copula CDF `C(u, v)` for `u, v` in `[0, 1]`.
pub fn cdf(model: &CopulaModel, u: f64, v: f64) -> Result<f64> {
    check_closed_unit("u", u)?;
    check_closed_unit("v", v)?;
    if u == 0.0 || v == 0.0 {
        return Ok(0.0);
    }
    if u == 1.0 {
        return Ok(v);
    }
    if v == 1.0 {
        return Ok(u);
    }
    let theta = model.theta;
    let c = match model.family {
        CopulaFamily::Gumbel => {
            let lx = (-u.ln()).ln();
            let ly = (-v.ln()).ln();
            let ln_a = ln_add_exp(theta * lx, theta * ly);
            (-(ln_a / theta).exp()).exp()
        }
        CopulaFamily::Clayton => {
            let ln_b = ln_clayton_sum(-theta * u.ln(), -theta * v.ln());
            (-ln_b / theta).exp()
        }
    };
    Ok(c.clamp(0.0, u.min(v)))
}

/// Log copula density `ln c(u, v)` for interior points.
pub fn log_density(model: &CopulaModel, u: f64, v: f64) -> Result<f64> {
    check_open_unit("u", u)?;
    check_open_unit("v", v)?;
    Ok(log_density_unchecked(model.family, model.theta, u, v))
}

pub(crate) fn log_density_unchecked(family: CopulaFamily, theta: f64, u: f64, v: f64) -> f64 {
    match family {
        CopulaFamily::Gumbel => {
            let x = -u.ln();
            let y = -v.ln();
            gumbel_log_density(theta, x, y, x.ln(), y.ln())
        }
        CopulaFamily::Clayton => {
            let lu = u.ln();
            let lv = v.ln();
            clayton_log_density(theta, lu, lv)
        }
    }
}

/// Gumbel log density in terms of `x = -ln u`, `y = -ln v` and their logs.
#[inline]
pub(crate) fn gumbel_log_density(theta: f64, x: f64, y: f64, lx: f64, ly: f64) -> f64 {
    let ln_a = ln_add_exp(theta * lx, theta * ly);
    let s = (ln_a / theta).exp();
    -s + x + y + (theta - 1.0) * (lx + ly) + (1.0 / theta - 2.0) * ln_a + (s + theta - 1.0).ln()
}

/// Clayton log density in terms of `ln u`, `ln v`.
#[inline]
pub(crate) fn clayton_log_density(theta: f64, lu: f64, lv: f64) -> f64 {
    let ln_b = ln_clayton_sum(-theta * lu, -theta * lv);
    theta.ln_1p() - (theta + 1.0) * (lu + lv) - (2.0 + 1.0 / theta) * ln_b
}

/// Gradient of `ln c(u, v)` with respect to `(u, v)` at an interior point.
pub fn grad_log_density(model: &CopulaModel, u: f64, v: f64) -> Result<[f64; 2]> {
    check_open_unit("u", u)?;
    check_open_unit("v", v)?;
    Ok(grad_log_density_unchecked(model, u, v))
}

pub(crate) fn grad_log_density_unchecked(model: &CopulaModel, u: f64, v: f64) -> [f64; 2] {
    let theta = model.theta;
    match model.family {
        CopulaFamily::Gumbel => {
            let x = -u.ln();
            let y = -v.ln();
            let (lx, ly) = (x.ln(), y.ln());
            let ln_a = ln_add_exp(theta * lx, theta * ly);
            let s = (ln_a / theta).exp();
            let common = -s + (1.0 - 2.0 * theta) + s / (s + theta - 1.0);
            // d/dx, then chain through dx/du = -1/u.
            let d = |t: f64, lt: f64| {
                let r = ((theta - 1.0) * lt - ln_a).exp();
                1.0 + (theta - 1.0) / t + r * common
            };
            [-d(x, lx) / u, -d(y, ly) / v]
        }
        CopulaFamily::Clayton => {
            let a = -theta * u.ln();
            let b = -theta * v.ln();
            let ln_b = ln_clayton_sum(a, b);
            let k = 2.0 * theta + 1.0;
            [
                (-(theta + 1.0) + k * (a - ln_b).exp()) / u,
                (-(theta + 1.0) + k * (b - ln_b).exp()) / v,
            ]
        }
    }
}

/// Draws from a positive stable law with Laplace transform `exp(-t^alpha)`,
/// `0 < alpha <= 1`, via Kanter's representation.
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let angle = PI * rng.sample::<f64, _>(Open01);
    let w: f64 = rng.sample(Exp1);
    let beta = 1.0 - alpha;
    let ln_a = (alpha * (alpha * angle).sin().ln() + beta * (beta * angle).sin().ln()
        - angle.sin().ln())
        / beta;
    ((ln_a - w.ln()) * beta / alpha).exp()
}

/// `n` i.i.d. pairs from the copula via the Marshall-Olkin frailty
/// construction.
///
/// Each point consumes the random stream in order, so the first `m` points of
/// `sample(model, n, seed)` equal `sample(model, m, seed)` for `m <= n`.
pub fn sample(model: &CopulaModel, n: usize, seed: u64) -> Result<BivariateSample> {
    if n == 0 {
        return Err(Error::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    let mut rng = seeded_rng(seed);
    let theta = model.theta;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let to_open = |t: f64| t.clamp(f64::MIN_POSITIVE, ONE_MINUS_ULP);
    match model.family {
        CopulaFamily::Gumbel => {
            let alpha = 1.0 / theta;
            for _ in 0..n {
                let s = positive_stable(alpha, &mut rng);
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                xs.push(to_open((-(e1 / s).powf(alpha)).exp()));
                ys.push(to_open((-(e2 / s).powf(alpha)).exp()));
            }
        }
        CopulaFamily::Clayton => {
            let gamma = Gamma::new(1.0 / theta, 1.0).map_err(|_| Error::ParameterOutOfRange {
                family: model.family,
                theta,
                lower: 0.0,
                upper: f64::INFINITY,
            })?;
            for _ in 0..n {
                let v: f64 = gamma.sample(&mut rng);
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                xs.push(to_open((-(e1 / v).ln_1p() / theta).exp()));
                ys.push(to_open((-(e2 / v).ln_1p() / theta).exp()));
            }
        }
    }
    Ok(BivariateSample::from_columns_unchecked(xs, ys))
}

//! Comparison diagnostics: the kernel Stein discrepancy with an inverse
//! multiquadric kernel, and the naive tau discrepancy.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::copula::{self, CopulaModel};
use crate::data::BivariateSample;
use crate::error::{Error, Result};
use crate::ranks::{self, PseudoObservations};
use crate::samplers::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsdEstimator {
    /// Off-diagonal mean; unbiased and possibly negative.
    UStat,
    /// Full double sum over `n^2`; a squared norm, never negative.
    VStat,
}

/// Inverse multiquadric kernel `(c^2 + |x - y|^2)^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsdConfig {
    pub c: f64,
    pub beta: f64,
    pub estimator: KsdEstimator,
}

impl Default for KsdConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            beta: -0.5,
            estimator: KsdEstimator::UStat,
        }
    }
}

impl KsdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Domain {
                what: "c",
                value: self.c,
                domain: "(0, inf)",
            });
        }
        if !(self.beta > -1.0 && self.beta < 0.0) {
            return Err(Error::Domain {
                what: "beta",
                value: self.beta,
                domain: "(-1, 0)",
            });
        }
        Ok(())
    }
}

const DIM: f64 = 2.0;

#[inline]
fn imq_pow(q: f64, beta: f64) -> f64 {
    if beta == -0.5 {
        1.0 / q.sqrt()
    } else {
        q.powf(beta)
    }
}

/// Stein kernel `k0(x, y)` for scores `sx = grad log p(x)`, `sy = grad log p(y)`.
#[inline]
pub fn stein_kernel(x: Vec2, y: Vec2, sx: Vec2, sy: Vec2, cfg: &KsdConfig) -> f64 {
    let r = [x[0] - y[0], x[1] - y[1]];
    let r2 = r[0] * r[0] + r[1] * r[1];
    let q = cfg.c * cfg.c + r2;
    let k = imq_pow(q, cfg.beta);
    let kq = k / q;
    let b = cfg.beta;
    k * (sx[0] * sy[0] + sx[1] * sy[1])
        + 2.0 * b * kq * ((sy[0] - sx[0]) * r[0] + (sy[1] - sx[1]) * r[1])
        - 2.0 * b * DIM * kq
        - 4.0 * b * (b - 1.0) * kq / q * r2
}

/// Kernel Stein discrepancy of `sample` against the density whose score is
/// `score`. Quadratic in `n`; rows are summed in parallel and combined in
/// index order, so the result does not depend on the thread count.
pub fn ksd<F>(sample: &BivariateSample, score: F, cfg: &KsdConfig) -> Result<f64>
where
    F: Fn(Vec2) -> Vec2,
{
    cfg.validate()?;
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: n,
        });
    }
    let points: Vec<Vec2> = sample.points().map(|(a, b)| [a, b]).collect();
    let mut scores = Vec::with_capacity(n);
    for (index, &p) in points.iter().enumerate() {
        let s = score(p);
        if !(s[0].is_finite() && s[1].is_finite()) {
            return Err(Error::NonFinite {
                index,
                detail: format!("score {s:?} at ({}, {})", p[0], p[1]),
            });
        }
        scores.push(s);
    }
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (xi, si) = (points[i], scores[i]);
            let mut acc = 0.0;
            for j in (i + 1)..n {
                acc += stein_kernel(xi, points[j], si, scores[j], cfg);
            }
            acc
        })
        .collect();
    let off_diagonal = 2.0 * rows.iter().sum::<f64>();
    let nf = n as f64;
    Ok(match cfg.estimator {
        KsdEstimator::UStat => off_diagonal / (nf * (nf - 1.0)),
        KsdEstimator::VStat => {
            let diagonal: f64 = points
                .iter()
                .zip(&scores)
                .map(|(&p, &s)| stein_kernel(p, p, s, s, cfg))
                .sum();
            (off_diagonal + diagonal) / (nf * nf)
        }
    })
}

/// `|tau_hat - tau_p|`, the empirical tau compared directly with the target's.
pub fn naive_tau_discrepancy(sample: &BivariateSample, tau_p: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&tau_p) {
        return Err(Error::Domain {
            what: "tau_p",
            value: tau_p,
            domain: "[-1, 1]",
        });
    }
    let pobs = ranks::pseudo_observations(sample)?;
    Ok((ranks::kendall_tau(&pobs) - tau_p).abs())
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Score of the plane density `c(Phi(x1), Phi(x2)) phi(x1) phi(x2)`: the
/// copula with standard-normal margins.
pub fn score_from_copula_target(model: CopulaModel) -> impl Fn(Vec2) -> Vec2 + Send + Sync + Copy {
    move |x: Vec2| {
        let u = std_normal_cdf(x[0]);
        let v = std_normal_cdf(x[1]);
        let g = copula::grad_log_density_unchecked(&model, u, v);
        [
            g[0] * std_normal_pdf(x[0]) - x[0],
            g[1] * std_normal_pdf(x[1]) - x[1],
        ]
    }
}

/// Maps pseudo-observations to the plane with the standard-normal quantile.
pub fn normal_scores(pobs: &PseudoObservations) -> BivariateSample {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let (x, y) = pobs
        .points()
        .map(|(u, v)| (normal.inverse_cdf(u), normal.inverse_cdf(v)))
        .unzip();
    BivariateSample::from_columns_unchecked(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::CopulaFamily;
    use approx::assert_relative_eq;

    fn imq(x: Vec2, y: Vec2, cfg: &KsdConfig) -> f64 {
        let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        (cfg.c * cfg.c + r2).powf(cfg.beta)
    }

    /// `k0` assembled from finite differences of the plain kernel.
    fn stein_kernel_fd(x: Vec2, y: Vec2, sx: Vec2, sy: Vec2, cfg: &KsdConfig) -> f64 {
        let h = 1e-4;
        let shift = |p: Vec2, k: usize, d: f64| {
            let mut q = p;
            q[k] += d;
            q
        };
        let mut total = imq(x, y, cfg) * (sx[0] * sy[0] + sx[1] * sy[1]);
        for k in 0..2 {
            let dx = (imq(shift(x, k, h), y, cfg) - imq(shift(x, k, -h), y, cfg)) / (2.0 * h);
            let dy = (imq(x, shift(y, k, h), cfg) - imq(x, shift(y, k, -h), cfg)) / (2.0 * h);
            let dxy = (imq(shift(x, k, h), shift(y, k, h), cfg)
                - imq(shift(x, k, h), shift(y, k, -h), cfg)
                - imq(shift(x, k, -h), shift(y, k, h), cfg)
                + imq(shift(x, k, -h), shift(y, k, -h), cfg))
                / (4.0 * h * h);
            total += sy[k] * dx + sx[k] * dy + dxy;
        }
        total
    }

    #[test]
    fn stein_kernel_matches_finite_differences() {
        for cfg in [
            KsdConfig::default(),
            KsdConfig {
                c: 0.7,
                beta: -0.3,
                ..Default::default()
            },
        ] {
            let cases = [
                ([0.1, -0.4], [1.2, 0.3], [0.5, -1.0], [-0.2, 0.8]),
                ([2.0, 1.0], [-1.0, 0.5], [-2.0, -1.0], [1.0, -0.5]),
            ];
            for (x, y, sx, sy) in cases {
                let exact = stein_kernel(x, y, sx, sy, &cfg);
                let fd = stein_kernel_fd(x, y, sx, sy, &cfg);
                assert!(
                    (exact - fd).abs() < 1e-6 * exact.abs().max(1.0),
                    "{exact} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn stein_kernel_is_symmetric() {
        let cfg = KsdConfig::default();
        let (x, y, sx, sy) = ([0.3, 1.1], [-0.7, 0.2], [1.5, -0.1], [0.4, 0.9]);
        assert_relative_eq!(
            stein_kernel(x, y, sx, sy, &cfg),
            stein_kernel(y, x, sy, sx, &cfg),
            max_relative = 1e-14
        );
    }

    #[test]
    fn rejects_bad_configuration_and_inputs() {
        let s = BivariateSample::from_points([(0.0, 0.0), (1.0, 1.0)]).unwrap();
        let id = |x: Vec2| [-x[0], -x[1]];
        assert!(ksd(
            &s,
            id,
            &KsdConfig {
                beta: -1.0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(ksd(
            &s,
            id,
            &KsdConfig {
                c: 0.0,
                ..Default::default()
            }
        )
        .is_err());
        let one = BivariateSample::from_points([(0.0, 0.0)]).unwrap();
        assert!(ksd(&one, id, &KsdConfig::default()).is_err());
        let err = ksd(
            &s,
            |x: Vec2| if x[0] > 0.5 { [f64::NAN, 0.0] } else { x },
            &KsdConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
    }

    #[test]
    fn naive_tau_matches_moment_cd() {
        let model = CopulaModel::new(CopulaFamily::Gumbel, 2.5).unwrap();
        for seed in 0..50 {
            let s = copula::sample(&model, 50 + seed as usize, seed).unwrap();
            let naive = naive_tau_discrepancy(&s, 0.6).unwrap();
            let cd = crate::discrepancy::cd_moment(&s, CopulaFamily::Gumbel, 2.5)
                .unwrap()
                .cd;
            assert_eq!(naive, cd);
        }
    }

    #[test]
    fn independence_score_is_standard_normal() {
        let score =
            score_from_copula_target(CopulaModel::new(CopulaFamily::Clayton, 1e-10).unwrap());
        let s = score([0.7, -1.3]);
        assert!((s[0] + 0.7).abs() < 1e-8 && (s[1] - 1.3).abs() < 1e-8);
    }

    #[test]
    fn exchangeable_score_on_diagonal() {
        for family in [CopulaFamily::Gumbel, CopulaFamily::Clayton] {
            let score = score_from_copula_target(CopulaModel::new(family, 2.0).unwrap());
            for a in [-2.0, -0.1, 0.4, 1.7] {
                let s = score([a, a]);
                assert_relative_eq!(s[0], s[1], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn score_matches_finite_differences() {
        use rand::Rng;
        let mut rng = crate::seeded_rng(21);
        for (family, theta) in [(CopulaFamily::Gumbel, 2.5), (CopulaFamily::Clayton, 3.0)] {
            let model = CopulaModel::new(family, theta).unwrap();
            let score = score_from_copula_target(model);
            let log_p = |x: Vec2| {
                copula::log_density(&model, std_normal_cdf(x[0]), std_normal_cdf(x[1])).unwrap()
                    - 0.5 * (x[0] * x[0] + x[1] * x[1])
            };
            for _ in 0..100 {
                let x = [rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)];
                let s = score(x);
                for k in 0..2 {
                    let h = 1e-5;
                    let (mut a, mut b) = (x, x);
                    a[k] += h;
                    b[k] -= h;
                    let fd = (log_p(a) - log_p(b)) / (2.0 * h);
                    assert!(
                        (fd - s[k]).abs() <= 1e-4 * s[k].abs().max(1.0),
                        "{family} {x:?}: {fd} vs {}",
                        s[k]
                    );
                }
            }
        }
    }
}

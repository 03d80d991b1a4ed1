//! Target densities and the two MCMC samplers: stochastic gradient Langevin
//! dynamics (no accept/reject) and random-walk Metropolis.

use std::io;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::BivariateSample;
use crate::error::{Error, Result};
use crate::seeded_rng;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// A density on the plane known up to a constant, with its score.
pub trait Target {
    /// `(log p(x) + const, grad log p(x))`.
    fn log_density_and_grad(&self, x: Vec2) -> (f64, Vec2);

    fn log_density(&self, x: Vec2) -> f64 {
        self.log_density_and_grad(x).0
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Component {
    log_weight: f64,
    mean: Vec2,
    precision: Mat2,
    /// Lower Cholesky factor of the covariance.
    chol: Mat2,
    log_norm: f64,
}

/// Two-component Gaussian mixture on the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTarget {
    weights: [f64; 2],
    means: [Vec2; 2],
    covariances: [Mat2; 2],
    components: Vec<Component>,
}

impl MixtureTarget {
    /// Weights must be non-negative and sum to one; covariances symmetric
    /// positive definite. A zero weight drops that component.
    pub fn new(weights: [f64; 2], means: [Vec2; 2], covariances: [Mat2; 2]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || (weights[0] + weights[1] - 1.0).abs() > 1e-12
        {
            return Err(Error::Config(format!(
                "mixture weights {weights:?} must be non-negative and sum to 1"
            )));
        }
        let mut components = Vec::with_capacity(2);
        for k in 0..2 {
            let c = covariances[k];
            let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
            if c[0][1] != c[1][0] || !(c[0][0] > 0.0 && det > 0.0) || !det.is_finite() {
                return Err(Error::Config(format!(
                    "covariance {k} {c:?} is not symmetric positive definite"
                )));
            }
            if means[k].iter().any(|m| !m.is_finite()) {
                return Err(Error::Config(format!("mean {k} is not finite")));
            }
            if weights[k] == 0.0 {
                continue;
            }
            let precision = [
                [c[1][1] / det, -c[0][1] / det],
                [-c[1][0] / det, c[0][0] / det],
            ];
            let l00 = c[0][0].sqrt();
            let l10 = c[1][0] / l00;
            let l11 = (c[1][1] - l10 * l10).sqrt();
            components.push(Component {
                log_weight: weights[k].ln(),
                mean: means[k],
                precision,
                chol: [[l00, 0.0], [l10, l11]],
                log_norm: -0.5 * det.ln(),
            });
        }
        Ok(Self {
            weights,
            means,
            covariances,
            components,
        })
    }

    pub fn gaussian(mean: Vec2, covariance: Mat2) -> Result<Self> {
        Self::new([1.0, 0.0], [mean, mean], [covariance, covariance])
    }

    pub fn standard_normal() -> Self {
        Self::gaussian([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]).expect("identity covariance")
    }

    pub fn weights(&self) -> [f64; 2] {
        self.weights
    }

    pub fn means(&self) -> [Vec2; 2] {
        self.means
    }

    pub fn covariances(&self) -> [Mat2; 2] {
        self.covariances
    }

    /// One exact draw from the mixture.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        let pick: f64 = rng.random();
        let c = if self.components.len() == 1 || pick < self.weights[0] {
            &self.components[0]
        } else {
            &self.components[1]
        };
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        [
            c.mean[0] + c.chol[0][0] * z0,
            c.mean[1] + c.chol[1][0] * z0 + c.chol[1][1] * z1,
        ]
    }
}

impl Default for MixtureTarget {
    /// Equal weights, means `(-2, -2)` and `(2, 2)`, both covariances
    /// `[[1, 0.8], [0.8, 1]]`.
    fn default() -> Self {
        let cov = [[1.0, 0.8], [0.8, 1.0]];
        Self::new([0.5, 0.5], [[-2.0, -2.0], [2.0, 2.0]], [cov, cov]).expect("valid default target")
    }
}

impl Target for MixtureTarget {
    fn log_density_and_grad(&self, x: Vec2) -> (f64, Vec2) {
        let mut terms = [0.0; 2];
        let mut scores = [[0.0; 2]; 2];
        for (k, c) in self.components.iter().enumerate() {
            let d = [x[0] - c.mean[0], x[1] - c.mean[1]];
            let pd = [
                c.precision[0][0] * d[0] + c.precision[0][1] * d[1],
                c.precision[1][0] * d[0] + c.precision[1][1] * d[1],
            ];
            terms[k] = c.log_weight + c.log_norm - 0.5 * (d[0] * pd[0] + d[1] * pd[1]);
            scores[k] = [-pd[0], -pd[1]];
        }
        let m = self.components.len();
        let max = terms[..m].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        let mut grad = [0.0; 2];
        for k in 0..m {
            let w = (terms[k] - max).exp();
            total += w;
            grad[0] += w * scores[k][0];
            grad[1] += w * scores[k][1];
        }
        (
            max + total.ln() - std::f64::consts::TAU.ln(),
            [grad[0] / total, grad[1] / total],
        )
    }
}

/// Output of a sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// States after each of the `T` transitions; the start is kept apart.
    pub states: Vec<Vec2>,
    pub start: Vec2,
    /// SGLD step size or RWM proposal standard deviation.
    pub step_size: f64,
    pub seed: u64,
    /// Fraction of accepted proposals (RWM only).
    pub acceptance_rate: Option<f64>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// The chain without its first `floor(fraction * T)` states.
    pub fn discard_burn_in(&self, fraction: f64) -> &[Vec2] {
        let skip = ((fraction.clamp(0.0, 1.0)) * self.states.len() as f64).floor() as usize;
        &self.states[skip.min(self.states.len())..]
    }

    pub fn to_sample(&self) -> BivariateSample {
        states_to_sample(&self.states)
    }

    /// Two-column CSV, one row per state.
    pub fn write_csv<W: io::Write>(&self, out: W) -> io::Result<()> {
        self.to_sample().write_csv(out)
    }
}

pub(crate) fn states_to_sample(states: &[Vec2]) -> BivariateSample {
    let (x, y) = states.iter().map(|s| (s[0], s[1])).unzip();
    BivariateSample::from_columns_unchecked(x, y)
}

fn check_positive(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            domain: "(0, inf)",
        })
    }
}

/// SGLD on the mixture, started from an exact draw of the target:
/// `x <- x + (eps/2) (grad log p(x) + noise) + sqrt(eps) xi`, where `noise`
/// has standard deviation `gradient_noise_sd` per coordinate.
pub fn sgld(
    target: &MixtureTarget,
    epsilon: f64,
    steps: usize,
    gradient_noise_sd: f64,
    seed: u64,
) -> Result<Chain> {
    let mut rng = seeded_rng(seed);
    let start = target.draw(&mut rng);
    sgld_with(
        target,
        start,
        epsilon,
        steps,
        gradient_noise_sd,
        &mut rng,
        seed,
    )
}

/// SGLD from a given start on any target.
pub fn sgld_from<T: Target + ?Sized>(
    target: &T,
    start: Vec2,
    epsilon: f64,
    steps: usize,
    gradient_noise_sd: f64,
    seed: u64,
) -> Result<Chain> {
    let mut rng = seeded_rng(seed);
    sgld_with(
        target,
        start,
        epsilon,
        steps,
        gradient_noise_sd,
        &mut rng,
        seed,
    )
}

fn sgld_with<T: Target + ?Sized, R: Rng>(
    target: &T,
    start: Vec2,
    epsilon: f64,
    steps: usize,
    gradient_noise_sd: f64,
    rng: &mut R,
    seed: u64,
) -> Result<Chain> {
    check_positive("epsilon", epsilon)?;
    if steps == 0 {
        return Err(Error::Config("SGLD needs at least one step".into()));
    }
    if !(gradient_noise_sd >= 0.0 && gradient_noise_sd.is_finite()) {
        return Err(Error::Domain {
            what: "gradient_noise_sd",
            value: gradient_noise_sd,
            domain: "[0, inf)",
        });
    }
    let half = 0.5 * epsilon;
    let root = epsilon.sqrt();
    let mut x = start;
    let mut states = Vec::with_capacity(steps);
    for step in 0..steps {
        let (_, g) = target.log_density_and_grad(x);
        for k in 0..2 {
            let noise: f64 = rng.sample(StandardNormal);
            let xi: f64 = rng.sample(StandardNormal);
            x[k] += half * (g[k] + gradient_noise_sd * noise) + root * xi;
        }
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::Diverged { step });
        }
        states.push(x);
    }
    Ok(Chain {
        states,
        start,
        step_size: epsilon,
        seed,
        acceptance_rate: None,
    })
}

/// Random-walk Metropolis on the mixture with isotropic Gaussian proposals,
/// started from an exact draw of the target.
pub fn rwm(target: &MixtureTarget, proposal_sd: f64, steps: usize, seed: u64) -> Result<Chain> {
    let mut rng = seeded_rng(seed);
    let start = target.draw(&mut rng);
    rwm_with(target, start, proposal_sd, steps, &mut rng, seed)
}

pub fn rwm_from<T: Target + ?Sized>(
    target: &T,
    start: Vec2,
    proposal_sd: f64,
    steps: usize,
    seed: u64,
) -> Result<Chain> {
    let mut rng = seeded_rng(seed);
    rwm_with(target, start, proposal_sd, steps, &mut rng, seed)
}

fn rwm_with<T: Target + ?Sized, R: Rng>(
    target: &T,
    start: Vec2,
    proposal_sd: f64,
    steps: usize,
    rng: &mut R,
    seed: u64,
) -> Result<Chain> {
    check_positive("proposal_sd", proposal_sd)?;
    if steps == 0 {
        return Err(Error::Config("RWM needs at least one step".into()));
    }
    let mut x = start;
    let mut lp = target.log_density(x);
    let mut accepted = 0usize;
    let mut states = Vec::with_capacity(steps);
    for _ in 0..steps {
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        let y = [x[0] + proposal_sd * z0, x[1] + proposal_sd * z1];
        let lq = target.log_density(y);
        let log_u = rng.random::<f64>().ln();
        if log_u < lq - lp {
            x = y;
            lp = lq;
            accepted += 1;
        }
        states.push(x);
    }
    Ok(Chain {
        states,
        start,
        step_size: proposal_sd,
        seed,
        acceptance_rate: Some(accepted as f64 / steps as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Flat;

    impl Target for Flat {
        fn log_density_and_grad(&self, _: Vec2) -> (f64, Vec2) {
            (0.0, [0.0, 0.0])
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let target = MixtureTarget::default();
        let mut rng = seeded_rng(4);
        for _ in 0..100 {
            let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let (_, g) = target.log_density_and_grad(x);
            for k in 0..2 {
                let h = 1e-5;
                let (mut a, mut b) = (x, x);
                a[k] += h;
                b[k] -= h;
                let fd = (target.log_density(a) - target.log_density(b)) / (2.0 * h);
                assert!(
                    (fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0),
                    "{x:?} {k}: {fd} vs {}",
                    g[k]
                );
            }
        }
    }

    #[test]
    fn midpoint_gradient_vanishes_by_symmetry() {
        let (_, g) = MixtureTarget::default().log_density_and_grad([0.0, 0.0]);
        assert!((g[0] + g[1]).abs() < 1e-14);
    }

    #[test]
    fn single_component_score_is_gaussian() {
        let cov = [[2.0, 0.5], [0.5, 1.0]];
        let t = MixtureTarget::new([1.0, 0.0], [[1.0, -1.0], [9.0, 9.0]], [cov, cov]).unwrap();
        let x = [0.3, 0.7];
        let (_, g) = t.log_density_and_grad(x);
        let det = 2.0 - 0.25;
        let d = [x[0] - 1.0, x[1] + 1.0];
        let expect = [
            -(1.0 * d[0] - 0.5 * d[1]) / det,
            -(-0.5 * d[0] + 2.0 * d[1]) / det,
        ];
        assert_relative_eq!(g[0], expect[0], max_relative = 1e-12);
        assert_relative_eq!(g[1], expect[1], max_relative = 1e-12);
    }

    #[test]
    fn rejects_invalid_mixtures() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let bad = [[1.0, 2.0], [2.0, 1.0]];
        assert!(MixtureTarget::new([0.7, 0.7], [[0.0; 2]; 2], [id, id]).is_err());
        assert!(MixtureTarget::new([0.5, 0.5], [[0.0; 2]; 2], [id, bad]).is_err());
    }

    #[test]
    fn samplers_are_deterministic() {
        let t = MixtureTarget::default();
        assert_eq!(
            sgld(&t, 1e-2, 500, 1.0, 9).unwrap(),
            sgld(&t, 1e-2, 500, 1.0, 9).unwrap()
        );
        assert_eq!(rwm(&t, 1.0, 500, 9).unwrap(), rwm(&t, 1.0, 500, 9).unwrap());
        assert!(sgld(&t, 0.0, 10, 1.0, 1).is_err());
        assert!(rwm(&t, -1.0, 10, 1).is_err());
    }

    #[test]
    fn divergence_reports_step() {
        struct Explosive;
        impl Target for Explosive {
            fn log_density_and_grad(&self, x: Vec2) -> (f64, Vec2) {
                (0.0, [x[0] * 1e100, x[1] * 1e100])
            }
        }
        let err = sgld_from(&Explosive, [1.0, 1.0], 1.0, 100, 0.0, 1).unwrap_err();
        assert!(matches!(err, Error::Diverged { step } if step < 10));
    }

    #[test]
    fn flat_target_is_a_gaussian_random_walk() {
        let (steps, eps, chains) = (200, 0.01, 2000);
        let mut sq = 0.0;
        for c in 0..chains {
            let chain = sgld_from(&Flat, [0.0, 0.0], eps, steps, 1.0, c).unwrap();
            let last = chain.states[steps - 1];
            sq += last[0] * last[0] + last[1] * last[1];
        }
        let var = sq / (2 * chains) as f64;
        let expect = steps as f64 * eps;
        assert!((var / expect - 1.0).abs() < 0.1, "{var} vs {expect}");
    }

    #[test]
    fn langevin_preserves_standard_normal_at_small_step() {
        // Ten chains of 2e5 steps each, pooled over both coordinates.
        let t = MixtureTarget::standard_normal();
        let (mut s, mut s2, mut count) = (0.0, 0.0, 0.0);
        for seed in 0..10 {
            let chain = sgld(&t, 1e-3, 200_000, 0.0, seed).unwrap();
            for x in &chain.states {
                for v in x {
                    s += v;
                    s2 += v * v;
                    count += 1.0;
                }
            }
        }
        let var = s2 / count - (s / count).powi(2);
        assert!((0.9..=1.1).contains(&var), "{var}");
    }

    #[test]
    fn rwm_on_single_gaussian_recovers_mean() {
        let cov = [[1.0, 0.3], [0.3, 1.0]];
        let t = MixtureTarget::gaussian([1.5, -0.5], cov).unwrap();
        let chain = rwm(&t, 1.5, 100_000, 3).unwrap();
        let s = chain.to_sample();
        for (k, mu) in [1.5, -0.5].into_iter().enumerate() {
            let col = if k == 0 { s.x() } else { s.y() };
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let se = (1.0 / crate::ranks::ess(col).unwrap()).sqrt();
            assert!(
                (mean - mu).abs() < 3.0 * se,
                "coord {k}: {mean} vs {mu} (se {se})"
            );
        }
    }
}

//! Rank statistics: pseudo-observations, Kendall's tau, its resampling
//! variance, and the effective sample size of a scalar chain.

use rand::Rng;

use crate::data::BivariateSample;
use crate::error::{Error, Result};
use crate::seeded_rng;

/// Rank-transformed sample; every coordinate lies strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObservations {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl PseudoObservations {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = (f64, f64)> + '_ {
        self.u.iter().copied().zip(self.v.iter().copied())
    }
}

/// Order-preserving integer key of a non-NaN float (`-0.0` maps like `0.0`).
#[inline]
fn sort_key(v: f64) -> u64 {
    let bits = (v + 0.0).to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// 1-based ranks; tied values share the average of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<(u64, usize)> = values.iter().map(|&v| sort_key(v)).zip(0..n).collect();
    order.sort_unstable();
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && order[end].0 == order[start].0 {
            end += 1;
        }
        let rank = (start + 1 + end) as f64 / 2.0;
        for &(_, i) in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// `u_i = rank(x_i) / (n + 1)`, `v_i = rank(y_i) / (n + 1)`.
pub fn pseudo_observations(sample: &BivariateSample) -> Result<PseudoObservations> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: n,
        });
    }
    let scale = 1.0 / (n + 1) as f64;
    let to_unit = |values: &[f64]| -> Vec<f64> {
        average_ranks(values)
            .into_iter()
            .map(|r| r * scale)
            .collect()
    };
    Ok(PseudoObservations {
        u: to_unit(sample.x()),
        v: to_unit(sample.y()),
    })
}

/// Exact pair counts behind Kendall's tau.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Concordance {
    /// Sum of `sign((u_i - u_j)(v_i - v_j))` over unordered pairs.
    pub score: i64,
    /// Number of unordered pairs, `n(n-1)/2`.
    pub pairs: i64,
}

impl Concordance {
    pub fn tau(&self) -> f64 {
        self.score as f64 / self.pairs as f64
    }
}

fn pair_count(n: usize) -> i64 {
    let n = n as i64;
    n * (n - 1) / 2
}

fn tied_pairs(run: i64) -> i64 {
    run * (run - 1) / 2
}

/// Concordance score in `O(n log n)`: sort by `(x, y)`, then count
/// inversions of the `y` sequence with a bottom-up merge sort.
pub fn concordance(x: &[f64], y: &[f64]) -> Concordance {
    let n = x.len();
    debug_assert_eq!(n, y.len());
    let pairs = pair_count(n);
    if n < 2 {
        return Concordance { score: 0, pairs };
    }
    let mut pairs_sorted: Vec<(u64, u64)> = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (sort_key(a), sort_key(b)))
        .collect();
    pairs_sorted.sort_unstable();

    let (mut tied_x, mut tied_xy) = (0i64, 0i64);
    let (mut run_x, mut run_xy) = (1i64, 1i64);
    for w in pairs_sorted.windows(2) {
        let (p, q) = (w[0], w[1]);
        if p.0 == q.0 {
            run_x += 1;
            if p.1 == q.1 {
                run_xy += 1;
            } else {
                tied_xy += tied_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            tied_x += tied_pairs(run_x);
            tied_xy += tied_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tied_x += tied_pairs(run_x);
    tied_xy += tied_pairs(run_xy);

    let mut ys: Vec<u64> = pairs_sorted.iter().map(|p| p.1).collect();
    let swaps = merge_count_inversions(&mut ys);

    let mut tied_y = 0i64;
    let mut run_y = 1i64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            tied_y += tied_pairs(run_y);
            run_y = 1;
        }
    }
    tied_y += tied_pairs(run_y);

    Concordance {
        score: pairs - tied_x - tied_y + tied_xy - 2 * swaps,
        pairs,
    }
}

/// Sorts `values` ascending and returns the number of strict inversions.
fn merge_count_inversions(values: &mut Vec<u64>) -> i64 {
    let n = values.len();
    let mut buf = vec![0; n];
    let mut swaps = 0i64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if values[i] <= values[j] {
                    buf[k] = values[i];
                    i += 1;
                } else {
                    buf[k] = values[j];
                    j += 1;
                    swaps += (mid - i) as i64;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&values[i..mid]);
            k += mid - i;
            buf[k..k + (hi - j)].copy_from_slice(&values[j..hi]);
            lo = hi;
        }
        std::mem::swap(values, &mut buf);
        width *= 2;
    }
    swaps
}

/// Sample Kendall's tau `(concordant - discordant) / C(n, 2)`, without tie
/// correction, in `O(n log n)`.
pub fn kendall_tau(pobs: &PseudoObservations) -> f64 {
    concordance(&pobs.u, &pobs.v).tau()
}

/// Quadratic reference implementation of [`kendall_tau`].
pub fn kendall_tau_bruteforce(pobs: &PseudoObservations) -> f64 {
    concordance_bruteforce(&pobs.u, &pobs.v).tau()
}

pub fn concordance_bruteforce(x: &[f64], y: &[f64]) -> Concordance {
    let n = x.len();
    let sgn = |d: f64| (d > 0.0) as i64 - (d < 0.0) as i64;
    let mut score = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            score += sgn(x[i] - x[j]) * sgn(y[i] - y[j]);
        }
    }
    Concordance {
        score,
        pairs: pair_count(n),
    }
}

/// Dense 0-based ranks (ties share a rank).
fn dense_ranks(values: &[f64]) -> (Vec<usize>, usize) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; n];
    let mut r = 0;
    for k in 0..n {
        if k > 0 && values[order[k]] != values[order[k - 1]] {
            r += 1;
        }
        ranks[order[k]] = r;
    }
    (ranks, if n == 0 { 0 } else { r + 1 })
}

struct Fenwick(Vec<u32>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Self(vec![0; n + 1])
    }

    fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of inserted indices `< i`.
    fn prefix(&self, i: usize) -> u32 {
        let mut i = i;
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// For each point, the number of points strictly smaller in both ranks.
fn strict_dominance(rx: &[usize], ry: &[usize], levels: usize) -> Vec<u32> {
    let n = rx.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&i| rx[i]);
    let mut tree = Fenwick::new(levels);
    let mut out = vec![0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && rx[order[end]] == rx[order[start]] {
            end += 1;
        }
        for &i in &order[start..end] {
            out[i] = tree.prefix(ry[i]);
        }
        for &i in &order[start..end] {
            tree.add(ry[i]);
        }
        start = end;
    }
    out
}

/// Per-point concordance `s_i = sum_{j != i} sign((x_i - x_j)(y_i - y_j))`
/// in `O(n log n)`. The values sum to twice the total concordance score.
pub fn concordance_per_point(x: &[f64], y: &[f64]) -> Vec<i64> {
    let (rx, lx) = dense_ranks(x);
    let (ry, ly) = dense_ranks(y);
    let flip =
        |r: &[usize], levels: usize| -> Vec<usize> { r.iter().map(|&k| levels - 1 - k).collect() };
    let (fx, fy) = (flip(&rx, lx), flip(&ry, ly));
    let below_left = strict_dominance(&rx, &ry, ly);
    let above_right = strict_dominance(&fx, &fy, ly);
    let above_left = strict_dominance(&rx, &fy, ly);
    let below_right = strict_dominance(&fx, &ry, ly);
    (0..x.len())
        .map(|i| {
            below_left[i] as i64 + above_right[i] as i64
                - above_left[i] as i64
                - below_right[i] as i64
        })
        .collect()
}

fn check_spread(pobs: &PseudoObservations, required: usize) -> Result<()> {
    let n = pobs.len();
    if n < required {
        return Err(Error::InsufficientData {
            required,
            actual: n,
        });
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(&pobs.u) || constant(&pobs.v) {
        return Err(Error::Degenerate(
            "a coordinate takes a single value; Kendall's tau has no variability".into(),
        ));
    }
    Ok(())
}

/// Jackknife estimate of `sigma_tau`, the asymptotic standard deviation of
/// `sqrt(n) * (tau_hat - tau)`.
///
/// Leave-one-out taus come from the per-point concordance scores, so the
/// whole estimate costs `O(n log n)`. A perfectly concordant (or
/// discordant) sample yields `0`.
pub fn sigma_tau_jackknife(pobs: &PseudoObservations) -> Result<f64> {
    check_spread(pobs, 10)?;
    let n = pobs.len();
    let per_point = concordance_per_point(&pobs.u, &pobs.v);
    let total: i64 = per_point.iter().sum::<i64>() / 2;
    let loo_pairs = pair_count(n - 1) as f64;
    let loo: Vec<f64> = per_point
        .iter()
        .map(|&s| (total - s) as f64 / loo_pairs)
        .collect();
    let nf = n as f64;
    let mean = loo.iter().sum::<f64>() / nf;
    let ss: f64 = loo.iter().map(|t| (t - mean).powi(2)).sum();
    let var_tau = (nf - 1.0) / nf * ss;
    Ok((nf * var_tau).sqrt())
}

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;

/// Bootstrap estimate of `sigma_tau`: `sqrt(n)` times the standard deviation
/// of tau over `resamples` with-replacement resamples.
pub fn sigma_tau_bootstrap(pobs: &PseudoObservations, resamples: usize, seed: u64) -> Result<f64> {
    check_spread(pobs, 10)?;
    if resamples < 2 {
        return Err(Error::Config("bootstrap needs at least 2 resamples".into()));
    }
    let n = pobs.len();
    let mut rng = seeded_rng(seed);
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let taus: Vec<f64> = (0..resamples)
        .map(|_| {
            for k in 0..n {
                let i = rng.random_range(0..n);
                u[k] = pobs.u[i];
                v[k] = pobs.v[i];
            }
            concordance(&u, &v).tau()
        })
        .collect();
    let b = resamples as f64;
    let mean = taus.iter().sum::<f64>() / b;
    let var = taus.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (b - 1.0);
    Ok((n as f64 * var).sqrt())
}

/// How `sigma_tau` is estimated for the equivalence test.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum VarianceEstimator {
    #[default]
    Jackknife,
    Bootstrap {
        resamples: usize,
        seed: u64,
    },
}

impl VarianceEstimator {
    pub fn sigma_tau(&self, pobs: &PseudoObservations) -> Result<f64> {
        match *self {
            VarianceEstimator::Jackknife => sigma_tau_jackknife(pobs),
            VarianceEstimator::Bootstrap { resamples, seed } => {
                sigma_tau_bootstrap(pobs, resamples, seed)
            }
        }
    }
}

/// Effective sample size `n / (1 + 2 sum_k rho_k)` with Geyer's initial
/// positive sequence truncation, clipped to `[1, n]`.
///
/// Autocorrelations are summed in adjacent pairs `rho_{2m} + rho_{2m+1}`
/// until the first non-positive pair. A constant chain has ESS 1.
pub fn ess(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n < 10 {
        return Err(Error::InsufficientData {
            required: 10,
            actual: n,
        });
    }
    if let Some(index) = chain.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            index,
            detail: format!("chain value {}", chain[index]),
        });
    }
    let nf = n as f64;
    let mean = chain.iter().sum::<f64>() / nf;
    let centered: Vec<f64> = chain.iter().map(|v| v - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / nf
    };
    let gamma0 = autocov(0);
    if gamma0 <= 0.0 || !gamma0.is_finite() {
        return Ok(1.0);
    }
    // sum_{m} (rho_{2m} + rho_{2m+1}) over the initial positive sequence.
    let mut pair_sum = 0.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / gamma0;
        if pair <= 0.0 {
            break;
        }
        pair_sum += pair;
        lag += 2;
    }
    let iat = 2.0 * pair_sum - 1.0;
    Ok((nf / iat).clamp(1.0, nf))
}

/// Per-chain summary: ESS of each coordinate and the empirical tau.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStats {
    pub ess_per_dim: [f64; 2],
    pub mean_ess: f64,
    pub tau_hat: f64,
    pub n: usize,
}

pub fn chain_stats(sample: &BivariateSample) -> Result<ChainStats> {
    let ess_per_dim = [ess(sample.x())?, ess(sample.y())?];
    let tau_hat = concordance(sample.x(), sample.y()).tau();
    Ok(ChainStats {
        ess_per_dim,
        mean_ess: (ess_per_dim[0] + ess_per_dim[1]) / 2.0,
        tau_hat,
        n: sample.len(),
    })
}

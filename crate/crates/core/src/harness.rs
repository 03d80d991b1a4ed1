//! Replicated experiments, timing benchmarks and ingestion of external
//! chains.

use std::io::{self, Read};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{self, ksd, naive_tau_discrepancy, score_from_copula_target};
use crate::config::{ExperimentConfig, SEED_STRIDE};
use crate::copula::{self, CopulaFamily, CopulaModel};
use crate::data::BivariateSample;
use crate::discrepancy::{self, DiagnosticReport, Estimator, TestResult};
use crate::error::{Error, Result};
use crate::ranks::{self, VarianceEstimator};
use crate::samplers::{self, MixtureTarget};

pub const CSV_HEADER: [&str; 5] = ["method", "x", "mean", "ci_lo", "ci_hi"];

/// Target used by the dependence-detection experiments: Gumbel with tau 0.6.
pub const GUMBEL_THETA: f64 = 2.5;
/// Clayton with the same tau 0.6.
pub const CLAYTON_THETA: f64 = 3.0;

/// Mean of one method at one design point with a normal 95% interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    /// Sample size or step size.
    pub x: f64,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Sample standard deviation across replications.
    pub sd: f64,
    pub replications: usize,
}

impl ResultRow {
    /// `mean +- 1.96 sd / sqrt(R)`; a single value gets a zero-width interval.
    pub fn from_values(method: &str, x: f64, values: &[f64]) -> Self {
        let r = values.len();
        let mean = values.iter().sum::<f64>() / r as f64;
        let sd = if r > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64).sqrt()
        } else {
            0.0
        };
        let half = 1.96 * sd / (r as f64).sqrt();
        Self {
            method: method.to_string(),
            x,
            mean,
            ci_lo: mean - half,
            ci_hi: mean + half,
            sd,
            replications: r,
        }
    }

    pub fn coefficient_of_variation(&self) -> f64 {
        self.sd / self.mean.abs()
    }
}

pub fn write_rows<W: io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let wrap = |e: csv::Error| Error::Config(format!("writing results: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(wrap)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.x.to_string(),
            r.mean.to_string(),
            r.ci_lo.to_string(),
            r.ci_hi.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush()
        .map_err(|e| Error::Config(format!("writing results: {e}")))
}

pub fn write_rows_to_path(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(rows, io::BufWriter::new(file)).map_err(|e| match e {
        Error::Config(m) => Error::io(path, io::Error::other(m)),
        other => other,
    })
}

fn seed(cfg: &ExperimentConfig, replication: usize, offset: u64) -> u64 {
    debug_assert!(offset < SEED_STRIDE);
    cfg.seed_base
        .wrapping_add((replication as u64).wrapping_mul(SEED_STRIDE))
        .wrapping_add(offset)
}

fn prefix(sample: &BivariateSample, n: usize) -> BivariateSample {
    BivariateSample::from_columns_unchecked(sample.x()[..n].to_vec(), sample.y()[..n].to_vec())
}

/// Runs `per_rep` for every replication in parallel; the result is indexed
/// `[replication][series][size]`, independent of scheduling.
fn replicate<F>(cfg: &ExperimentConfig, per_rep: F) -> Result<Vec<Vec<Vec<f64>>>>
where
    F: Fn(usize) -> Result<Vec<Vec<f64>>> + Sync + Send,
{
    (0..cfg.replications).into_par_iter().map(per_rep).collect()
}

fn collect_rows(methods: &[&str], xs: &[f64], per_rep: &[Vec<Vec<f64>>]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for (m, method) in methods.iter().enumerate() {
        for (k, &x) in xs.iter().enumerate() {
            let values: Vec<f64> = per_rep.iter().map(|rep| rep[m][k]).collect();
            rows.push(ResultRow::from_values(method, x, &values));
        }
    }
    rows
}

fn sizes_as_x(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.sample_sizes.iter().map(|&n| n as f64).collect()
}

fn largest(cfg: &ExperimentConfig) -> usize {
    *cfg.sample_sizes.last().expect("validated sample sizes")
}

fn finish(cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<()> {
    if let Some(path) = &cfg.output_path {
        write_rows_to_path(rows, path)?;
    }
    Ok(())
}

/// MLE-CD against the Gumbel(2.5) target for on-target Gumbel(2.5) samples
/// and off-target Clayton(3.0) samples of equal tau.
///
/// Each replication draws one sample of the largest size and evaluates its
/// prefixes, so every size shares random numbers.
pub fn run_experiment1(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let on = CopulaModel::new(CopulaFamily::Gumbel, GUMBEL_THETA)?;
    let off = CopulaModel::new(CopulaFamily::Clayton, CLAYTON_THETA)?;
    let n_max = largest(cfg);
    let per_rep = replicate(cfg, |r| {
        let mut out = Vec::with_capacity(2);
        for (offset, model) in [(1, on), (2, off)] {
            let full = copula::sample(&model, n_max, seed(cfg, r, offset))?;
            let cds = cfg
                .sample_sizes
                .iter()
                .map(|&n| {
                    Ok(
                        discrepancy::cd_mle(&prefix(&full, n), CopulaFamily::Gumbel, GUMBEL_THETA)?
                            .cd,
                    )
                })
                .collect::<Result<Vec<f64>>>()?;
            out.push(cds);
        }
        Ok(out)
    })?;
    let rows = collect_rows(
        &["mle_cd_on_target", "mle_cd_off_target"],
        &sizes_as_x(cfg),
        &per_rep,
    );
    finish(cfg, &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment2Output {
    pub rows: Vec<ResultRow>,
    /// Kendall's tau of the target, estimated from the reference chain.
    pub tau_p: f64,
    pub rwm_acceptance_rate: f64,
    /// Diverged SGLD runs per step size, excluded from the means.
    pub diverged: Vec<(f64, usize)>,
}

/// Step-size selection for SGLD on the default mixture: a long RWM chain
/// fixes `tau_p`, then each step size gets replicated SGLD runs scored by
/// moment CD and mean ESS.
pub fn run_experiment2(cfg: &ExperimentConfig) -> Result<Experiment2Output> {
    cfg.validate()?;
    let target = MixtureTarget::default();
    let reference = samplers::rwm(
        &target,
        cfg.rwm_proposal_sd,
        cfg.rwm_steps,
        seed(cfg, 0, SEED_STRIDE - 1),
    )?;
    let kept = reference.discard_burn_in(cfg.rwm_burn_in);
    let kept = samplers::states_to_sample(kept);
    let tau_p = ranks::concordance(kept.x(), kept.y()).tau();
    let theta_p = copula::theta_from_tau(CopulaFamily::Gumbel, tau_p)?;

    // [replication][epsilon] -> Some((cd, ess)) or None when diverged.
    let runs: Vec<Vec<Option<(f64, f64)>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            cfg.epsilon_grid
                .iter()
                .map(|&eps| {
                    match samplers::sgld(
                        &target,
                        eps,
                        cfg.sgld_steps,
                        cfg.gradient_noise_sd,
                        seed(cfg, r, 10),
                    ) {
                        Ok(chain) => {
                            let sample = chain.to_sample();
                            let cd =
                                discrepancy::cd_moment(&sample, CopulaFamily::Gumbel, theta_p)?.cd;
                            let stats = ranks::chain_stats(&sample)?;
                            Ok(Some((cd, stats.mean_ess)))
                        }
                        Err(Error::Diverged { .. }) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cd_rows = Vec::new();
    let mut ess_rows = Vec::new();
    let mut diverged = Vec::new();
    for (e, &eps) in cfg.epsilon_grid.iter().enumerate() {
        let ok: Vec<(f64, f64)> = runs.iter().filter_map(|rep| rep[e]).collect();
        diverged.push((eps, cfg.replications - ok.len()));
        let cds: Vec<f64> = ok.iter().map(|p| p.0).collect();
        let ess: Vec<f64> = ok.iter().map(|p| p.1).collect();
        cd_rows.push(ResultRow::from_values("moment_cd", eps, &cds));
        ess_rows.push(ResultRow::from_values("ess", eps, &ess));
    }
    let mut rows = cd_rows;
    rows.extend(ess_rows);
    finish(cfg, &rows)?;
    Ok(Experiment2Output {
        rows,
        tau_p,
        rwm_acceptance_rate: reference.acceptance_rate.unwrap_or(f64::NAN),
        diverged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment3Output {
    pub rows: Vec<ResultRow>,
    /// `|0.6 - tau(theta_hat)|` for a Clayton MLE fit to one large Gumbel sample.
    pub pseudo_true_gap: f64,
}

/// Fits `family` by MLE to a single Gumbel(2.5) sample of size `n` and
/// reports the resulting CD against the tau-0.6 member of that family.
pub fn pseudo_true_gap(family: CopulaFamily, n: usize, seed: u64) -> Result<f64> {
    let model = CopulaModel::new(CopulaFamily::Gumbel, GUMBEL_THETA)?;
    let sample = copula::sample(&model, n, seed)?;
    let theta_p = copula::theta_from_tau(family, 0.6)?;
    Ok(discrepancy::cd_mle(&sample, family, theta_p)?.cd)
}

/// Structural mismatch: Gumbel(2.5) samples scored against a Clayton(3.0)
/// target of equal tau by the naive tau discrepancy, MLE-CD and KSD.
pub fn run_experiment3(cfg: &ExperimentConfig) -> Result<Experiment3Output> {
    cfg.validate()?;
    let gap = pseudo_true_gap(
        CopulaFamily::Clayton,
        cfg.pseudo_true_n,
        seed(cfg, 0, SEED_STRIDE - 2),
    )?;
    let source = CopulaModel::new(CopulaFamily::Gumbel, GUMBEL_THETA)?;
    let target = CopulaModel::new(CopulaFamily::Clayton, CLAYTON_THETA)?;
    let tau_p = target.tau();
    let score = score_from_copula_target(target);
    let n_max = largest(cfg);
    let per_rep = replicate(cfg, |r| {
        let full = copula::sample(&source, n_max, seed(cfg, r, 3))?;
        let mut naive = Vec::new();
        let mut mle = Vec::new();
        let mut stein = Vec::new();
        for &n in &cfg.sample_sizes {
            let s = prefix(&full, n);
            naive.push(naive_tau_discrepancy(&s, tau_p)?);
            mle.push(discrepancy::cd_mle(&s, CopulaFamily::Clayton, CLAYTON_THETA)?.cd);
            let z = baselines::normal_scores(&ranks::pseudo_observations(&s)?);
            stein.push(ksd(&z, score, &cfg.ksd)?);
        }
        Ok(vec![naive, mle, stein])
    })?;
    let rows = collect_rows(&["naive_tau", "mle_cd", "ksd"], &sizes_as_x(cfg), &per_rep);
    finish(cfg, &rows)?;
    Ok(Experiment3Output {
        rows,
        pseudo_true_gap: gap,
    })
}

/// Mean wall time in seconds of moment-CD, MLE-CD and KSD per sample size.
///
/// Every (method, size) pair gets one untimed warm-up call; timed calls run
/// sequentially so they do not compete for cores.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let model = CopulaModel::new(CopulaFamily::Gumbel, GUMBEL_THETA)?;
    let score = score_from_copula_target(model);
    let methods = ["moment_cd", "mle_cd", "ksd"];
    let mut rows = Vec::new();
    for (m, method) in methods.iter().enumerate() {
        for &n in &cfg.sample_sizes {
            let run = |s: &BivariateSample| -> Result<f64> {
                Ok(match m {
                    0 => discrepancy::cd_moment(s, CopulaFamily::Gumbel, GUMBEL_THETA)?.cd,
                    1 => discrepancy::cd_mle(s, CopulaFamily::Gumbel, GUMBEL_THETA)?.cd,
                    _ => {
                        let z = baselines::normal_scores(&ranks::pseudo_observations(s)?);
                        ksd(&z, score, &cfg.ksd)?
                    }
                })
            };
            std::hint::black_box(run(&copula::sample(&model, n, seed(cfg, 0, 4))?)?);
            let mut times = Vec::with_capacity(cfg.replications);
            for r in 0..cfg.replications {
                let s = copula::sample(&model, n, seed(cfg, r, 5))?;
                let start = Instant::now();
                std::hint::black_box(run(std::hint::black_box(&s))?);
                times.push(start.elapsed().as_secs_f64());
            }
            rows.push(ResultRow::from_values(method, n as f64, &times));
        }
    }
    finish(cfg, &rows)?;
    Ok(rows)
}

/// Parses a two-column numeric CSV. A first row in which no field is
/// numeric is taken as a header.
pub fn read_sample_csv<R: Read>(input: R, path: &Path) -> Result<BivariateSample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut non_finite = 0usize;
    for (i, record) in reader.records().enumerate() {
        let parse_error = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let record = record.map_err(|e| {
            let line = e.position().map_or(i as u64 + 1, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|f| f.parse::<f64>().ok()).collect();
        if i == 0 && parsed.iter().all(Option::is_none) {
            continue;
        }
        if record.len() != 2 {
            return Err(parse_error(
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        match (parsed[0], parsed[1]) {
            (Some(a), Some(b)) => {
                if !(a.is_finite() && b.is_finite()) {
                    non_finite += usize::from(!a.is_finite()) + usize::from(!b.is_finite());
                }
                x.push(a);
                y.push(b);
            }
            _ => {
                let bad = if parsed[0].is_none() {
                    &record[0]
                } else {
                    &record[1]
                };
                return Err(parse_error(line, format!("'{bad}' is not a number")));
            }
        }
    }
    if non_finite > 0 {
        return Err(Error::NonFiniteInput {
            path: path.to_path_buf(),
            count: non_finite,
        });
    }
    if x.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "no data rows".into(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: x.len(),
        });
    }
    BivariateSample::from_columns(x, y)
}

pub fn read_sample_file(path: &Path) -> Result<BivariateSample> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_sample_csv(io::BufReader::new(file), path)
}

/// A CD report plus the equivalence test, which can fail on its own (for
/// instance when the variance estimate is zero) without voiding the report.
#[derive(Debug)]
pub struct Diagnosis {
    pub report: DiagnosticReport,
    pub test: Result<TestResult>,
}

pub fn diagnose_sample(
    sample: &BivariateSample,
    family: CopulaFamily,
    theta_p: f64,
    estimator: Estimator,
    alpha: f64,
    variance: VarianceEstimator,
) -> Result<Diagnosis> {
    discrepancy::critical_value(alpha)?;
    let report = discrepancy::cd(sample, family, theta_p, estimator)?;
    let test = discrepancy::equivalence_test_with(sample, family, theta_p, alpha, variance);
    Ok(Diagnosis { report, test })
}

pub fn diagnose_file(
    path: &Path,
    family: CopulaFamily,
    theta_p: f64,
    estimator: Estimator,
    alpha: f64,
) -> Result<Diagnosis> {
    let sample = read_sample_file(path)?;
    diagnose_sample(
        &sample,
        family,
        theta_p,
        estimator,
        alpha,
        VarianceEstimator::Jackknife,
    )
}

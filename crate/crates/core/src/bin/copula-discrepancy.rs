use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use copula_discrepancy::config::{self, ExperimentConfig, ExperimentId};
use copula_discrepancy::harness::{self, Diagnosis, ResultRow};
use copula_discrepancy::ranks::{self, DEFAULT_BOOTSTRAP_RESAMPLES};
use copula_discrepancy::{
    copula, CopulaFamily, CopulaModel, Error, Estimator, Result, VarianceEstimator,
};

#[derive(Parser, Debug)]
#[command(
    name = "copula-discrepancy",
    version,
    about = "Dependence-aware sample quality diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Copula family of the target.
    #[arg(long, global = true, default_value = "gumbel")]
    family: CopulaFamily,

    /// Target dependence parameter.
    #[arg(long = "theta-p", global = true, default_value_t = 2.5)]
    theta_p: f64,

    #[arg(long, global = true, default_value = "moment")]
    estimator: Estimator,

    /// Level of the equivalence test.
    #[arg(long, global = true, default_value_t = 0.05)]
    alpha: f64,

    /// Replications per design point.
    #[arg(long, global = true)]
    reps: Option<usize>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// key = value file whose entries override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Variance estimator for the equivalence test.
    #[arg(long, global = true, value_enum, default_value_t = Variance::Jackknife)]
    variance: Variance,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Variance {
    Jackknife,
    Bootstrap,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// MLE-CD for on-target and off-target samples across sample sizes.
    Exp1,
    /// SGLD step-size selection: moment CD and ESS per step size.
    Exp2,
    /// Naive tau, MLE-CD and KSD under structural mismatch.
    Exp3,
    /// Wall time of moment-CD, MLE-CD and KSD.
    Bench,
    /// Diagnose a two-column CSV sample against the target copula.
    Diagnose { path: PathBuf },
    /// Draw from the target copula.
    Sample {
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Print the empirical Kendall's tau of a two-column CSV sample.
    Tau { path: PathBuf },
}

/// Settings after flags and config-file overrides are merged.
struct Settings {
    family: CopulaFamily,
    theta_p: f64,
    estimator: Estimator,
    alpha: f64,
    variance: VarianceEstimator,
    n: usize,
    experiment: ExperimentConfig,
}

fn experiment_id(cmd: &Command) -> ExperimentId {
    match cmd {
        Command::Exp2 => ExperimentId::Exp2,
        Command::Exp3 => ExperimentId::Exp3,
        Command::Bench => ExperimentId::Bench,
        _ => ExperimentId::Exp1,
    }
}

fn settings(cli: &Cli) -> Result<Settings> {
    let mut experiment = ExperimentConfig::new(experiment_id(&cli.command));
    if let Some(r) = cli.reps {
        experiment.replications = r;
    }
    if let Some(s) = cli.seed {
        experiment.seed_base = s;
    }
    experiment.output_path = cli.out.clone();
    let mut s = Settings {
        family: cli.family,
        theta_p: cli.theta_p,
        estimator: cli.estimator,
        alpha: cli.alpha,
        variance: VarianceEstimator::Jackknife,
        n: match cli.command {
            Command::Sample { n } => n,
            _ => 1000,
        },
        experiment,
    };
    let mut variance = cli.variance;
    if let Some(path) = &cli.config {
        for entry in config::read_settings(path)? {
            let (key, value) = (entry.key.as_str(), entry.value.as_str());
            match key {
                "family" => s.family = config::parse(key, value)?,
                "theta_p" => s.theta_p = config::parse(key, value)?,
                "estimator" => s.estimator = config::parse(key, value)?,
                "alpha" => s.alpha = config::parse(key, value)?,
                "n" => s.n = config::parse(key, value)?,
                "variance" => {
                    variance = Variance::from_str(value, true)
                        .map_err(|_| Error::Config(format!("variance: unknown value '{value}'")))?
                }
                _ => {
                    if !s.experiment.set(key, value)? {
                        return Err(Error::Config(format!(
                            "{}:{}: unknown setting '{key}'",
                            path.display(),
                            entry.line
                        )));
                    }
                }
            }
        }
    }
    s.variance = match variance {
        Variance::Jackknife => VarianceEstimator::Jackknife,
        Variance::Bootstrap => VarianceEstimator::Bootstrap {
            resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            seed: s.experiment.seed_base,
        },
    };
    Ok(s)
}

fn emit_rows(rows: &[ResultRow], cfg: &ExperimentConfig) -> Result<()> {
    if cfg.output_path.is_none() {
        harness::write_rows(rows, io::stdout().lock())?;
    }
    Ok(())
}

fn print_diagnosis(d: &Diagnosis) -> io::Result<()> {
    let r = &d.report;
    let mut out = io::stdout().lock();
    writeln!(out, "family          {}", r.family)?;
    writeln!(out, "estimator       {}", r.estimator)?;
    writeln!(out, "n               {}", r.n)?;
    writeln!(out, "theta_p         {}  (tau_p {:.6})", r.theta_p, r.tau_p)?;
    writeln!(out, "theta_hat       {:.6}", r.theta_hat)?;
    writeln!(out, "tau_hat         {:.6}", r.tau_hat)?;
    writeln!(out, "tau(theta_hat)  {:.6}", r.tau_hat_model)?;
    writeln!(out, "CD              {:.6}", r.cd)?;
    if r.degenerate {
        writeln!(
            out,
            "note            empirical tau outside (0, 1); theta_hat clamped (degenerate)"
        )?;
    } else if r.boundary {
        writeln!(
            out,
            "note            theta_hat on an estimation bound (boundary solution)"
        )?;
    }
    let test = match &d.test {
        Ok(t) => {
            writeln!(
                out,
                "test            T = {:.4}, p = {:.4}, critical {:.4} at alpha {}: {}",
                t.t_statistic,
                t.p_value,
                t.critical_value,
                t.alpha,
                if t.reject {
                    "reject H0"
                } else {
                    "do not reject H0"
                }
            )?;
            json!({
                "t_statistic": t.t_statistic,
                "p_value": t.p_value,
                "reject": t.reject,
                "alpha": t.alpha,
                "critical_value": t.critical_value,
                "sigma_tau_hat": t.sigma_tau_hat,
            })
        }
        Err(e) => {
            writeln!(out, "test            unavailable: {e}")?;
            json!({ "error": e.to_string() })
        }
    };
    let record = json!({
        "estimator": r.estimator.to_string(),
        "family": r.family.to_string(),
        "theta_p": r.theta_p,
        "tau_p": r.tau_p,
        "theta_hat": r.theta_hat,
        "tau_hat": r.tau_hat,
        "tau_hat_model": r.tau_hat_model,
        "cd": r.cd,
        "n": r.n,
        "wall_time_s": r.wall_time.as_secs_f64(),
        "degenerate": r.degenerate,
        "boundary": r.boundary,
        "log_likelihood": r.log_likelihood,
        "test": test,
    });
    writeln!(out, "{record}")
}

fn run(cli: &Cli) -> Result<()> {
    let s = settings(cli)?;
    let cfg = &s.experiment;
    let stdout_err = |e: io::Error| Error::io("<stdout>", e);
    match &cli.command {
        Command::Exp1 => emit_rows(&harness::run_experiment1(cfg)?, cfg),
        Command::Exp2 => {
            let out = harness::run_experiment2(cfg)?;
            eprintln!(
                "tau_p {:.6} (rwm acceptance {:.3})",
                out.tau_p, out.rwm_acceptance_rate
            );
            for (eps, count) in out.diverged.iter().filter(|d| d.1 > 0) {
                eprintln!("epsilon {eps}: {count} diverged run(s) excluded");
            }
            emit_rows(&out.rows, cfg)
        }
        Command::Exp3 => {
            let out = harness::run_experiment3(cfg)?;
            eprintln!("pseudo-true gap {:.6}", out.pseudo_true_gap);
            emit_rows(&out.rows, cfg)
        }
        Command::Bench => emit_rows(&harness::run_benchmark(cfg)?, cfg),
        Command::Diagnose { path } => {
            let sample = harness::read_sample_file(path)?;
            let d = harness::diagnose_sample(
                &sample,
                s.family,
                s.theta_p,
                s.estimator,
                s.alpha,
                s.variance,
            )?;
            print_diagnosis(&d).map_err(stdout_err)
        }
        Command::Sample { .. } => {
            let model = CopulaModel::new(s.family, s.theta_p)?;
            let sample = copula::sample(&model, s.n, cfg.seed_base)?;
            match &cfg.output_path {
                Some(p) => {
                    let f = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
                    sample
                        .write_csv(io::BufWriter::new(f))
                        .map_err(|e| Error::io(p, e))
                }
                None => sample.write_csv(io::stdout().lock()).map_err(stdout_err),
            }
        }
        Command::Tau { path } => {
            let sample = harness::read_sample_file(path)?;
            let tau = ranks::kendall_tau(&ranks::pseudo_observations(&sample)?);
            println!("{tau}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

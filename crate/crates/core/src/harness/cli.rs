//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::config::{env_seed, parse_samples, RunConfig};
use super::identity::{run_identity_suite, IdentityReport};
use super::output::{write_compare_csv, write_density_csv, write_sweep_csv, DensityRow};
use super::scenario::{gaussian_pair_conditional_sin, DensityTheorem, Scenario, SCENARIO_NAMES};
use super::sweep::{
    compare_slopes, run_bias_sweep, run_compare, run_variance_sweep, KernelKind, SampleSize,
    SweepConfig, SweepReport, DEFAULT_BIAS_EPSILONS, DEFAULT_VARIANCE_EPSILONS,
};
use crate::error::{Error, Result};
use crate::estimators::{
    centered_direct_density, conditional_expectation, direct_density, plain_kernel_density,
    regularized_density, shifted_kernel_density, DegeneratePolicy, DensityEstimate, PlainVariant,
    QuadBatch,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;

pub const DENSITY_ESTIMATORS: &[&str] = &[
    "direct",
    "regularized",
    "centered",
    "shifted",
    "plain_gamma",
    "plain_identity",
    "conditional",
];

pub const DEFAULT_DENSITY_EPSILON: f64 = 0.01;
pub const DEFAULT_MC_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 1;
const Z_LIMIT: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(
    name = "dirichlet-mc",
    version,
    about = "Density estimation for Monte Carlo simulations with error-calculus weights"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List built-in scenarios.
    ListScenarios,
    /// Estimate the density of X at the query points.
    Density(RunArgs),
    /// Bias of a kernel estimator against the exact density, over ε.
    SweepBias(RunArgs),
    /// Variance of a kernel estimator over ε, against the reduced-form limit.
    SweepVariance(RunArgs),
    /// Centering and integration-by-parts checks.
    CheckIdentities(RunArgs),
    /// Predicted MSE versus N for kernel and direct estimators.
    Compare(RunArgs),
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub epsilons: Option<Vec<f64>>,
    /// A sample count or "quadrature".
    #[arg(long)]
    pub samples: Option<String>,
    /// Comma-separated query points.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub points: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Key-value file whose entries override these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Exit with status 3 when the acceptance thresholds are missed.
    #[arg(long)]
    pub strict: bool,
}

/// Flags merged with the config file and the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub scenario: Option<String>,
    pub estimator: Option<String>,
    pub epsilon: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub samples: Option<SampleSize>,
    pub points: Vec<f64>,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub strict: bool,
}

impl Settings {
    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let cfg = match &args.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let samples = match (&cfg.samples, &args.samples) {
            (Some(v), _) => Some(v.to_sample_size()?),
            (None, Some(s)) => Some(parse_samples(s)?),
            (None, None) => None,
        };
        let seed = env_seed()?
            .or(cfg.seed)
            .or(args.seed)
            .unwrap_or(DEFAULT_SEED);
        let workers = cfg
            .workers
            .or(args.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(Self {
            scenario: cfg.scenario.or_else(|| args.scenario.clone()),
            estimator: cfg.estimator.or_else(|| args.estimator.clone()),
            epsilon: cfg.epsilon.or(args.epsilon),
            epsilons: cfg.epsilons.or_else(|| args.epsilons.clone()),
            samples,
            points: cfg
                .points
                .or_else(|| args.points.clone())
                .unwrap_or_default(),
            seed,
            workers,
            out: cfg.out.or_else(|| args.out.clone()),
            strict: cfg.strict.unwrap_or(false) || args.strict,
        })
    }

    fn scenario(&self) -> Result<Scenario> {
        match &self.scenario {
            Some(n) => Scenario::by_name(n),
            None => Err(Error::InvalidArgument(format!(
                "--scenario is required; valid names: {}",
                SCENARIO_NAMES.join(", ")
            ))),
        }
    }

    fn mc_samples(&self) -> Result<usize> {
        match self
            .samples
            .unwrap_or(SampleSize::MonteCarlo(DEFAULT_MC_SAMPLES))
        {
            SampleSize::MonteCarlo(0) => {
                Err(Error::InvalidArgument("samples must be positive".into()))
            }
            SampleSize::MonteCarlo(n) => Ok(n),
            SampleSize::Quadrature => Err(Error::InvalidArgument(
                "this command needs a Monte Carlo sample count".into(),
            )),
        }
    }

    fn points_or(&self, default: &[f64]) -> Vec<f64> {
        if self.points.is_empty() {
            default.to_vec()
        } else {
            self.points.clone()
        }
    }

    fn sweep_config(&self, default_eps: &[f64]) -> Result<SweepConfig> {
        let scenario = self.scenario()?;
        Ok(SweepConfig {
            scenario: scenario.name.to_string(),
            estimator: self.estimator.clone().unwrap_or_else(|| "shifted".into()),
            epsilons: self
                .epsilons
                .clone()
                .unwrap_or_else(|| default_eps.to_vec()),
            samples: self.samples.unwrap_or(SampleSize::Quadrature),
            points: self.points.clone(),
            seed: self.seed,
            workers: self.workers,
        })
    }
}

enum Failure {
    Invalid(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Invalid(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

/// Output of one subcommand: CSV text, a summary line, and whether the
/// strict thresholds were met.
struct Outcome {
    csv: Vec<u8>,
    summary: String,
    notices: Vec<String>,
    thresholds_met: bool,
}

/// Runs the tool on `args` (including the program name), writing the CSV
/// (when no `--out` is given) and the summary to `stdout`, diagnostics to
/// `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(Failure::Invalid(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INVALID
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_IO
        }
    }
}

fn execute(
    cmd: &Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> std::result::Result<i32, Failure> {
    let (args, run): (&RunArgs, fn(&Settings) -> Result<Outcome>) = match cmd {
        Command::ListScenarios => {
            list_scenarios(stdout)?;
            return Ok(EXIT_OK);
        }
        Command::Density(a) => (a, density),
        Command::SweepBias(a) => (a, sweep_bias),
        Command::SweepVariance(a) => (a, sweep_variance),
        Command::CheckIdentities(a) => (a, check_identities),
        Command::Compare(a) => (a, compare),
    };
    let settings = Settings::resolve(args)?;
    let outcome = run(&settings)?;
    for n in &outcome.notices {
        writeln!(stderr, "notice: {n}")?;
    }
    match &settings.out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(&outcome.csv)?;
            f.flush()?;
        }
        None => stdout.write_all(&outcome.csv)?,
    }
    writeln!(stdout, "{}", outcome.summary)?;
    if settings.strict && !outcome.thresholds_met {
        writeln!(stderr, "strict: acceptance thresholds not met")?;
        return Ok(EXIT_THRESHOLD);
    }
    Ok(EXIT_OK)
}

fn theorem_name(t: DensityTheorem) -> &'static str {
    match t {
        DensityTheorem::Direct => "direct",
        DensityTheorem::RegularizedOnly => "regularized-only",
        DensityTheorem::Outside => "outside",
    }
}

fn list_scenarios(out: &mut dyn Write) -> io::Result<()> {
    writeln!(
        out,
        "name,density_theorem,exact_density,oracle_dim,description"
    )?;
    for s in Scenario::all() {
        writeln!(
            out,
            "{},{},{},{},\"{}\"",
            s.name,
            theorem_name(s.theorem),
            if s.has_exact_density() { "yes" } else { "no" },
            s.oracle_dim()
                .map(|d| d.to_string())
                .unwrap_or_else(|| "-".into()),
            s.description
        )?;
    }
    Ok(())
}

fn unknown_estimator(name: &str) -> Error {
    Error::UnknownName {
        what: "estimator",
        name: name.to_string(),
        valid: DENSITY_ESTIMATORS.join(", "),
    }
}

fn density_estimates(
    name: &str,
    b: &QuadBatch,
    eps: f64,
    xs: &[f64],
) -> Result<Vec<DensityEstimate>> {
    let vx: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
    match name {
        "direct" => direct_density(b, xs),
        "regularized" => regularized_density(b, eps, xs),
        "centered" => centered_direct_density(b, xs),
        "shifted" => shifted_kernel_density(&b.to_triples(), eps, &vx, DegeneratePolicy::Skip),
        "plain_gamma" => plain_kernel_density(
            &b.to_triples(),
            eps,
            &vx,
            PlainVariant::GammaCov,
            DegeneratePolicy::Skip,
        ),
        "plain_identity" => plain_kernel_density(
            &b.to_triples(),
            eps,
            &vx,
            PlainVariant::IdentityCov,
            DegeneratePolicy::Skip,
        ),
        other => Err(unknown_estimator(other)),
    }
}

fn density(s: &Settings) -> Result<Outcome> {
    let scenario = s.scenario()?;
    let estimator = s.estimator.clone().unwrap_or_else(|| "direct".into());
    if !DENSITY_ESTIMATORS.contains(&estimator.as_str()) {
        return Err(unknown_estimator(&estimator));
    }
    let n = s.mc_samples()?;
    let eps = s.epsilon.unwrap_or(DEFAULT_DENSITY_EPSILON);
    let xs = s.points_or(&scenario.interior_points);
    let mut notices = Vec::new();
    if matches!(estimator.as_str(), "direct" | "centered" | "conditional")
        && scenario.theorem != DensityTheorem::Direct
    {
        notices.push(format!(
            "scenario '{}' is {} for the unregularized weight; results may be unreliable",
            scenario.name,
            theorem_name(scenario.theorem)
        ));
    }
    let batch = scenario.sample_batch(n, s.seed, s.workers);
    if batch.invalid_count() > 0 {
        notices.push(format!(
            "{} invalid samples discarded",
            batch.invalid_count()
        ));
    }
    let rows: Vec<DensityRow> = if estimator == "conditional" {
        conditional_expectation(&batch, &xs)?
            .into_iter()
            .map(|c| {
                if !c.reliable {
                    notices.push(format!(
                        "x = {}: density estimate not distinguishable from 0",
                        c.x
                    ));
                }
                DensityRow {
                    x: c.x,
                    estimate: c.ratio,
                    std_error: c.ratio_std_error,
                    reference: (scenario.name == "gaussian_pair")
                        .then(|| gaussian_pair_conditional_sin(c.x)),
                }
            })
            .collect()
    } else {
        let est = density_estimates(&estimator, &batch, eps, &xs)?;
        if let Some(skipped) = est.first().map(|e| e.n_skipped).filter(|k| *k > 0) {
            notices.push(format!(
                "{skipped} degenerate samples skipped by the estimator"
            ));
        }
        est.into_iter()
            .map(|e| DensityRow {
                x: e.x1(),
                estimate: e.value,
                std_error: e.std_error,
                reference: scenario.exact_density(e.x1()),
            })
            .collect()
    };
    let mut max_z: f64 = 0.0;
    let parts: Vec<String> = rows
        .iter()
        .map(|r| match r.reference {
            Some(f) => {
                let z = if r.std_error > 0.0 {
                    (r.estimate - f) / r.std_error
                } else {
                    0.0
                };
                max_z = max_z.max(z.abs());
                format!(
                    "x={} {:.6}±{:.6} ref {:.6} z={:.2}",
                    r.x, r.estimate, r.std_error, f, z
                )
            }
            None => format!("x={} {:.6}±{:.6}", r.x, r.estimate, r.std_error),
        })
        .collect();
    let mut csv = Vec::new();
    write_density_csv(&mut csv, &rows).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(Outcome {
        csv,
        summary: format!(
            "density {} {} N={}: {}",
            scenario.name,
            estimator,
            batch.len(),
            parts.join("; ")
        ),
        notices,
        thresholds_met: max_z <= Z_LIMIT,
    })
}

fn sweep_csv(r: &SweepReport) -> Result<Vec<u8>> {
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &r.rows).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(csv)
}

fn slope_text(r: &SweepReport) -> String {
    r.fits
        .iter()
        .map(|f| match f.slope {
            Some(s) => format!("x={} slope {:.3}", f.x, s),
            None => format!("x={} slope n/a", f.x),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn all_slopes_within(r: &SweepReport, lo: f64, hi: f64) -> bool {
    r.fits
        .iter()
        .all(|f| f.slope.is_some_and(|s| (lo..=hi).contains(&s)))
}

fn sweep_bias(s: &Settings) -> Result<Outcome> {
    let cfg = s.sweep_config(&DEFAULT_BIAS_EPSILONS)?;
    let kind = KernelKind::parse(&cfg.estimator)?;
    let report = run_bias_sweep(&cfg)?;
    let thresholds_met = match kind {
        KernelKind::Shifted => all_slopes_within(&report, 1.7, 2.3),
        KernelKind::PlainGamma => all_slopes_within(&report, 0.7, 1.3),
        KernelKind::PlainIdentity => true,
    };
    Ok(Outcome {
        csv: sweep_csv(&report)?,
        summary: format!(
            "sweep-bias {} {}: {}",
            cfg.scenario,
            kind.name(),
            slope_text(&report)
        ),
        notices: report.notices,
        thresholds_met,
    })
}

fn sweep_variance(s: &Settings) -> Result<Outcome> {
    let cfg = s.sweep_config(&DEFAULT_VARIANCE_EPSILONS)?;
    let kind = KernelKind::parse(&cfg.estimator)?;
    let report = run_variance_sweep(&cfg)?;
    let smallest = cfg.epsilons.last().copied().unwrap_or(f64::NAN);
    let last_rows: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.epsilon == smallest)
        .collect();
    let constant_ok = last_rows
        .iter()
        .all(|r| r.abs_error <= 0.05 * r.reference.abs());
    let detail: Vec<String> = last_rows
        .iter()
        .map(|r| {
            format!(
                "x={} sqrt(eps)*Var {:.6} vs {:.6} ({:+.2}%)",
                r.x,
                r.estimate,
                r.reference,
                100.0 * (r.estimate - r.reference) / r.reference
            )
        })
        .collect();
    Ok(Outcome {
        csv: sweep_csv(&report)?,
        summary: format!(
            "sweep-variance {} {}: {}; {}",
            cfg.scenario,
            kind.name(),
            slope_text(&report),
            detail.join("; ")
        ),
        notices: report.notices.clone(),
        thresholds_met: constant_ok && all_slopes_within(&report, -0.65, -0.35),
    })
}

fn identity_csv(r: &IdentityReport) -> Vec<u8> {
    let mut out = String::from("check,mean,std_error,z\n");
    for c in &r.checks {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.name, c.stat.mean, c.stat.std_error, c.z
        ));
    }
    out.into_bytes()
}

fn check_identities(s: &Settings) -> Result<Outcome> {
    let scenario = s.scenario()?;
    let n = s.mc_samples()?;
    let report = run_identity_suite(&scenario, n, s.seed, s.workers)?;
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.name.as_str())
        .collect();
    let verdict = if failed.is_empty() {
        "all pass".to_string()
    } else {
        format!("failed: {}", failed.join(", "))
    };
    Ok(Outcome {
        csv: identity_csv(&report),
        summary: format!(
            "check-identities {} N={}: {} checks, max |z| {:.2}, {}",
            scenario.name,
            report.samples,
            report.checks.len(),
            report.max_abs_z(),
            verdict
        ),
        notices: Vec::new(),
        thresholds_met: report.passed(),
    })
}

fn compare(s: &Settings) -> Result<Outcome> {
    let scenario = s.scenario()?;
    let x = s.points.first().copied().unwrap_or(scenario.sweep_point);
    let rows = run_compare(&scenario, x, s.workers)?;
    let mut csv = Vec::new();
    write_compare_csv(&mut csv, &rows).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let slopes: Vec<String> = compare_slopes(&rows)
        .into_iter()
        .map(|(n, v)| format!("{n} {v:.3}"))
        .collect();
    Ok(Outcome {
        csv,
        summary: format!(
            "compare {} x={}: MSE-vs-N slopes {}",
            scenario.name,
            x,
            slopes.join(", ")
        ),
        notices: Vec::new(),
        thresholds_met: true,
    })
}

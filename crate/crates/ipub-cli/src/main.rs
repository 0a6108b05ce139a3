//! Command-line harness: bound computation, the interval-Newton comparison
//! experiment, the randomized oracle check, and the synthetic data generator.
//!
//! Exit codes: 0 success, 1 validation or input error, 2 property violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ipub::harness::{run_bound, run_experiment, run_oracle_check, ExperimentGrid};
use ipub::inewton::{GradientExpansion, InewtonConfig};
use ipub::oracle::OracleBudget;
use ipub::pipeline::{load_csv, PipelineConfig};
use ipub::solver::SolverConfig;
use ipub::{Link, Loss, ModelSpec, Penalty};

#[derive(Parser)]
#[command(name = "ipub", version, about = "Prediction-uncertainty intervals for training data with interval-valued missing entries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a midpoint imputation and emit guaranteed prediction
    /// intervals for every test row.
    Bound(BoundArgs),
    /// Run the full grid experiment against the interval-Newton baseline.
    Experiment(ExperimentArgs),
    /// Verify containment, delta exactness, and range-sandwich properties on
    /// seeded random instances.
    OracleCheck(OracleCheckArgs),
    /// Write a seeded synthetic logistic dataset as CSV.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Squared,
    Hinge,
    Logistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    L2,
    ElasticNet,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkArg {
    Identity,
    Sign,
    Sigmoid,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "logistic")]
    loss: LossArg,
    #[arg(long, value_enum, default_value = "l2")]
    penalty: PenaltyArg,
    /// Strong-convexity parameter of the penalty.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// L1 weight of the elastic net.
    #[arg(long, default_value_t = 0.1)]
    kappa: f64,
    /// Override the loss's default link.
    #[arg(long, value_enum)]
    link: Option<LinkArg>,
    /// Solver tolerance (gradient norm or duality-gap analogue).
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, String> {
        let loss = match self.loss {
            LossArg::Squared => Loss::Squared,
            LossArg::Hinge => Loss::Hinge,
            LossArg::Logistic => Loss::Logistic,
        };
        let penalty = match self.penalty {
            PenaltyArg::L2 => Penalty::L2 { lambda: self.lambda },
            PenaltyArg::ElasticNet => {
                Penalty::ElasticNet { lambda: self.lambda, kappa: self.kappa }
            }
        };
        let mut spec = ModelSpec::new(loss, penalty).map_err(|e| e.to_string())?;
        if let Some(link) = self.link {
            spec = spec.with_link(match link {
                LinkArg::Identity => Link::Identity,
                LinkArg::Sign => Link::Sign,
                LinkArg::Sigmoid => Link::Sigmoid,
            });
        }
        Ok(spec)
    }

    fn solver_cfg(&self) -> SolverConfig {
        SolverConfig { grad_tol: self.tol, ..Default::default() }
    }
}

#[derive(Args)]
struct PipelineArgs {
    /// Missing-entry injection rate b.
    #[arg(long, default_value_t = 0.01)]
    b: f64,
    /// Interval-length quantile parameter alpha.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First CSV row is a header.
    #[arg(long)]
    header: bool,
    /// Zero-based label column (default: last).
    #[arg(long)]
    label_col: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    test_fraction: f64,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            test_fraction: self.test_fraction,
            missing_rate: self.b,
            coverage_alpha: self.alpha,
            seed: self.seed,
            has_header: self.header,
            label_col: self.label_col,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct BoundArgs {
    train_csv: PathBuf,
    test_csv: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Results JSON path.
    #[arg(long, default_value = "bound.json")]
    out: PathBuf,
    /// Manifest JSON path.
    #[arg(long, default_value = "manifest.json")]
    manifest: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    dataset_csv: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Grid of missing rates.
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.001])]
    b_grid: Vec<f64>,
    /// Grid of interval-length parameters.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.9])]
    alpha_grid: Vec<f64>,
    /// Grid of penalty parameters.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0])]
    lambda_grid: Vec<f64>,
    /// Histogram bin width on the output scale.
    #[arg(long, default_value_t = 0.02)]
    bin_width: f64,
    /// Test points per cell that also get oracle sample ranges.
    #[arg(long, default_value_t = 0)]
    oracle_points: usize,
    /// Interval-Newton iteration budget.
    #[arg(long, default_value_t = 30)]
    inewton_iters: usize,
    /// Expand the interval-Newton gradient at the box midpoint instead of
    /// over the full weight box.
    #[arg(long)]
    midpoint_gradient: bool,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Results JSON path; histogram CSVs are written next to it.
    #[arg(long, default_value = "experiment.json")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleCheckArgs {
    #[arg(long, default_value_t = 200)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Debug: scale the ball radius to verify the checker trips.
    #[arg(long, default_value_t = 1.0)]
    radius_factor: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "synth.csv")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Bound(args) => {
            let spec = args.model.spec()?;
            let cfg = args.pipeline.config();
            let train =
                load_csv(&args.train_csv, &cfg).map_err(|e| format!("{}: {e}", args.train_csv.display()))?;
            let test =
                load_csv(&args.test_csv, &cfg).map_err(|e| format!("{}: {e}", args.test_csv.display()))?;
            let (report, manifest) =
                run_bound(train, test, &spec, &cfg, &args.model.solver_cfg())
                    .map_err(|e| e.to_string())?;
            write_json(&args.out, &report)?;
            write_json(&args.manifest, &manifest)?;
            println!(
                "wrote {} intervals to {} (radius {:.6e}, delta {:.6e})",
                report.intervals.len(),
                args.out.display(),
                report.ball.radius,
                report.ball.delta_total
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment(args) => {
            let cfg = args.pipeline.config();
            let table = load_csv(&args.dataset_csv, &cfg)
                .map_err(|e| format!("{}: {e}", args.dataset_csv.display()))?;
            let grid = ExperimentGrid {
                missing_rates: args.b_grid.clone(),
                coverage_alphas: args.alpha_grid.clone(),
                lambdas: args.lambda_grid.clone(),
                bin_width: args.bin_width,
                oracle_spot_points: args.oracle_points,
                oracle_budget: OracleBudget {
                    max_corner_bits: 6,
                    interior_samples: 30,
                    seed: args.pipeline.seed,
                },
                timing_reps: 5,
            };
            let inewton_cfg = InewtonConfig {
                max_iter: args.inewton_iters,
                expansion: if args.midpoint_gradient {
                    GradientExpansion::Midpoint
                } else {
                    GradientExpansion::FullBox
                },
                ..Default::default()
            };
            let solver_cfg = SolverConfig { grad_tol: args.tol, ..Default::default() };
            let report = run_experiment(&table, &cfg, &grid, &solver_cfg, &inewton_cfg);
            write_json(&args.out, &report)?;
            let stem = args.out.with_extension("");
            for cell in &report.cells {
                let path = PathBuf::from(format!(
                    "{}_hist_b{}_a{}_l{}.csv",
                    stem.display(),
                    cell.missing_rate,
                    cell.coverage_alpha,
                    cell.lambda
                ));
                let mut csv = String::from("method,bin_lo,bin_hi,mass\n");
                for row in &cell.histogram {
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        row.method, row.bin_lo, row.bin_hi, row.mass
                    ));
                }
                std::fs::write(&path, csv).map_err(|e| e.to_string())?;
            }
            for cell in &report.cells {
                println!(
                    "b={} alpha={} lambda={}: median ipub {:.4}, median inewton {:.4}, time ratio {:.3e}",
                    cell.missing_rate,
                    cell.coverage_alpha,
                    cell.lambda,
                    cell.median_ipub_length,
                    cell.median_inewton_length,
                    cell.timing.time_ratio
                );
            }
            for failure in &report.failures {
                eprintln!(
                    "cell b={} alpha={} lambda={} failed: {}",
                    failure.missing_rate, failure.coverage_alpha, failure.lambda, failure.error
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleCheck(args) => {
            let solver_cfg = SolverConfig { grad_tol: args.tol, ..Default::default() };
            let report =
                run_oracle_check(args.instances, args.seed, args.radius_factor, &solver_cfg)
                    .map_err(|e| e.to_string())?;
            println!(
                "{} instances checked, {} violations",
                report.instances,
                report.violations.len()
            );
            for v in &report.violations {
                eprintln!("violation: {v}");
            }
            if report.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        Command::Synth(args) => {
            let csv = ipub::synth::logistic_csv(args.n, args.d, args.seed);
            std::fs::write(&args.out, csv).map_err(|e| e.to_string())?;
            println!("wrote {} rows to {}", args.n, args.out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> Result<(), String> {
    let json = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    std::fs::write(path, json).map_err(|e| format!("{}: {e}", path.display()))
}

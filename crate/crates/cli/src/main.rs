use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mmls_ro::bench::{make_problem, run_experiment, run_suite, ExperimentConfig, Report, SolverKind, Suite};
use mmls_ro::mmls::{project_batch, FrameConfig};
use mmls_ro::optimize::{BetaRule, Mode, Termination};
use mmls_ro::point_cloud::{
    add_noise, estimate_fill_distance, read_cloud_csv, read_points_csv, sample_manifold, write_cloud_csv,
    ManifoldKind, NoiseTarget,
};
use mmls_ro::weights::WeightSpec;

const EXIT_USAGE: u8 = 1;
const EXIT_MMLS_FAILURE: u8 = 2;

/// Riemannian optimization on manifolds given only by samples.
#[derive(Parser, Debug)]
#[command(name = "mmls-ro", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a manifold and write the cloud as CSV.
    Sample(SampleArgs),
    /// Project query points onto the approximate manifold of a cloud.
    Project(ProjectArgs),
    /// Run one benchmark experiment.
    Optimize(OptimizeArgs),
    /// Run a batch of benchmark experiments.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// A benchmark problem name (the cloud then carries cost samples) or one
    /// of sphere, stiefel, fixed_rank, prelim_surface.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Gaussian noise variance added to coordinates (and cost samples).
    #[arg(long)]
    noise: Option<f64>,
    /// Ambient dimension for sphere and prelim_surface.
    #[arg(long)]
    ambient: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long)]
    cloud: PathBuf,
    #[arg(long)]
    degree: usize,
    #[arg(long, default_value_t = 1.5)]
    weight_k: f64,
    /// Fill distance; estimated from the cloud when omitted.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Gd,
    Cg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Explicit,
    Sampled,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BetaArg {
    Fr,
    Prp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Paper,
    Smoke,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, value_enum)]
    solver: SolverArg,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    /// Noise variance; the problem's default when omitted.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    step_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    alpha_bar: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Conjugate-gradient beta rule.
    #[arg(long, value_enum)]
    beta: Option<BetaArg>,
    #[arg(long, default_value_t = 1.5)]
    weight_k: f64,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Sample(args) => sample(&args),
        Command::Project(args) => project(&args),
        Command::Optimize(args) => optimize(&args),
        Command::Bench(args) => bench(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn generic_kind(args: &SampleArgs) -> Result<ManifoldKind> {
    let need = |v: Option<usize>, flag: &str| v.with_context(|| format!("--kind {} needs --{flag}", args.kind));
    let kind = match args.kind.as_str() {
        "sphere" => ManifoldKind::Sphere {
            ambient: need(args.ambient, "ambient")?,
        },
        "prelim_surface" => ManifoldKind::PrelimSurface {
            ambient: args.ambient.unwrap_or(100),
        },
        "stiefel" => ManifoldKind::Stiefel {
            rows: need(args.rows, "rows")?,
            cols: need(args.cols, "cols")?,
        },
        "fixed_rank" => ManifoldKind::FixedRank {
            rows: need(args.rows, "rows")?,
            cols: need(args.cols, "cols")?,
            rank: need(args.rank, "rank")?,
        },
        other => bail!("unknown kind {other:?}"),
    };
    kind.validate()?;
    Ok(kind)
}

fn sample(args: &SampleArgs) -> Result<ExitCode> {
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    let noise = args.noise.unwrap_or(0.0);
    let set = match make_problem(&args.kind) {
        Ok(entry) => {
            let set = sample_manifold(&entry.kind, args.n, args.seed)?;
            let values = set.points().map(|p| entry.objective.cost(p)).collect();
            add_noise(&set.with_values(values)?, noise, args.seed ^ 0x6e6f_6973_65, NoiseTarget::Both)?
        }
        Err(_) => {
            let set = sample_manifold(&generic_kind(args)?, args.n, args.seed)?;
            add_noise(&set, noise, args.seed ^ 0x6e6f_6973_65, NoiseTarget::Points)?
        }
    };
    let mut out = create(&args.out)?;
    write_cloud_csv(&set, &mut out)?;
    out.flush()?;
    eprintln!(
        "wrote {} samples (D={}, d={}) to {}",
        set.len(),
        set.ambient_dim(),
        set.intrinsic_dim(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn project(args: &ProjectArgs) -> Result<ExitCode> {
    let set = read_cloud_csv(open(&args.cloud)?).with_context(|| format!("reading {}", args.cloud.display()))?;
    let points = read_points_csv(open(&args.points)?).with_context(|| format!("reading {}", args.points.display()))?;
    if let Some(p) = points.first() {
        if p.len() != set.ambient_dim() {
            bail!("query points have {} coordinates, the cloud has {}", p.len(), set.ambient_dim());
        }
    }
    let h = match args.h {
        Some(h) => h,
        None => estimate_fill_distance(&set)?.h_est,
    };
    let spec = WeightSpec::new(args.weight_k, h)?;
    let results = project_batch(&set, &points, args.degree, &spec, &FrameConfig::default());

    let dim = set.ambient_dim();
    let mut out = create(&args.out)?;
    let mut header: Vec<String> = (0..dim).map(|i| format!("q{i}")).collect();
    header.extend((0..dim).map(|i| format!("p{i}")));
    header.push("support_count".into());
    header.push("iterations".into());
    writeln!(out, "{}", header.join(","))?;
    let mut failed = 0;
    for (query, result) in points.iter().zip(&results) {
        let mut row: Vec<String> = query.iter().map(f64::to_string).collect();
        match result {
            Ok(p) => {
                row.extend(p.point.iter().map(f64::to_string));
                row.push(p.support_count.to_string());
                row.push(p.frame.iterations.to_string());
            }
            Err(e) => {
                failed += 1;
                eprintln!("projection failed for {query:?}: {e}");
                row.extend(std::iter::repeat_n("nan".to_string(), dim));
                row.push("0".into());
                row.push("0".into());
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    eprintln!("projected {} of {} points (h={h:.6})", points.len() - failed, points.len());
    Ok(if failed > 0 {
        ExitCode::from(EXIT_MMLS_FAILURE)
    } else {
        ExitCode::SUCCESS
    })
}

fn experiment_config(args: &OptimizeArgs) -> Result<ExperimentConfig> {
    make_problem(&args.problem)?;
    let solver = match args.solver {
        SolverArg::Gd => SolverKind::Gd,
        SolverArg::Cg => SolverKind::Cg,
    };
    let mode = match args.mode {
        ModeArg::Explicit => Mode::ExplicitGradient,
        ModeArg::Sampled => Mode::Sampled,
    };
    let mut cfg = ExperimentConfig::new(&args.problem, solver, mode, args.seed);
    cfg.n = args.n;
    cfg.degree = args.degree;
    cfg.noise = args.noise;
    cfg.weight_k = args.weight_k;
    cfg.h = args.h;
    let o = &mut cfg.options;
    if let Some(v) = args.grad_tol {
        o.grad_tol = v;
    }
    if let Some(v) = args.step_tol {
        o.step_tol = v;
    }
    if let Some(v) = args.max_iters {
        o.max_iters = v;
    }
    if let Some(v) = args.alpha_bar {
        o.alpha_bar = v;
    }
    if let Some(v) = args.gamma {
        o.gamma = v;
    }
    if let Some(v) = args.delta {
        o.delta = v;
    }
    if let Some(b) = args.beta {
        o.beta = match b {
            BetaArg::Fr => BetaRule::FletcherReeves,
            BetaArg::Prp => BetaRule::PolakRibierePlus,
        };
    }
    o.validate()?;
    Ok(cfg)
}

fn summarize(report: &Report) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"));
    format!(
        "{}: {} after {} iterations, cost {}, grad_norm {}, {} {}",
        report.config.problem,
        report.termination,
        report.iterations,
        fmt(report.final_cost),
        fmt(report.final_grad_norm),
        report.metric_name,
        fmt(report.metric)
    )
}

fn optimize(args: &OptimizeArgs) -> Result<ExitCode> {
    let cfg = experiment_config(args)?;
    let report = run_experiment(&cfg)?;
    report.write(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!("{}", summarize(&report));
    if let Some(reason) = &report.failure {
        eprintln!("projection failure: {reason}");
    }
    Ok(match report.termination {
        Termination::MmlsFailure => ExitCode::from(EXIT_MMLS_FAILURE),
        Termination::GradTol | Termination::StepTol | Termination::MaxIters => ExitCode::SUCCESS,
    })
}

fn bench(args: &BenchArgs) -> Result<ExitCode> {
    let suite = match args.suite {
        SuiteArg::Paper => Suite::Paper,
        SuiteArg::Smoke => Suite::Smoke,
    };
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut summary = create(&args.out.join("summary.csv"))?;
    writeln!(summary, "problem,termination,iterations,final_cost,final_grad_norm,metric_name,metric,seconds")?;
    for result in run_suite(suite, args.seed) {
        let report = result?;
        report.write(&args.out.join(&report.config.problem))?;
        println!("{}", summarize(&report));
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            report.config.problem,
            report.termination,
            report.iterations,
            opt(report.final_cost),
            opt(report.final_grad_norm),
            report.metric_name,
            opt(report.metric),
            report.setup_seconds + report.solve_seconds
        )?;
    }
    summary.flush()?;
    Ok(ExitCode::SUCCESS)
}

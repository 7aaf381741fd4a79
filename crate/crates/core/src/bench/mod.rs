//! The benchmark suite: problem registry, quality metrics and the
//! experiment runner.

mod problems;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use self::problems::{
    low_rank_target, pca_matrix, sphere_matrix, stiefel3_matrix, stiefel4_matrix, DistanceCost, PcaCost, PrelimCost,
    TraceCost, PCA_MATRIX_SEED,
};
use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::geometry::GeometryConfig;
use crate::optimize::{conjugate_gradient, gradient_descent, Mode, Objective, Problem, SolverOptions, Termination, Trace};
use crate::point_cloud::{add_noise, estimate_fill_distance, sample_manifold, ManifoldKind, NoiseTarget};
use crate::weights::{WeightSpec, DEFAULT_K};

pub const PROBLEM_NAMES: [&str; 6] = ["prelim", "sphere_eig", "stiefel_eig3", "stiefel_eig4", "stiefel_pca", "fixed_rank"];

/// A registry entry with its default experiment sizes.
#[derive(Clone)]
pub struct BenchProblem {
    pub name: &'static str,
    pub kind: ManifoldKind,
    pub n: usize,
    pub degree: usize,
    /// Noise variance for points and cost samples.
    pub noise: f64,
    pub objective: Arc<dyn Objective>,
}

impl std::fmt::Debug for BenchProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchProblem")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("degree", &self.degree)
            .field("noise", &self.noise)
            .finish()
    }
}

impl BenchProblem {
    pub fn ambient_dim(&self) -> usize {
        self.kind.ambient_dim()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.kind.intrinsic_dim()
    }
}

/// Looks up a benchmark problem by name.
pub fn make_problem(name: &str) -> Result<BenchProblem> {
    let entry = |name, kind, n, degree, noise, objective: Arc<dyn Objective>| BenchProblem {
        name,
        kind,
        n,
        degree,
        noise,
        objective,
    };
    Ok(match name {
        "prelim" => entry("prelim", ManifoldKind::prelim(), 50_000, 1, 1e-3, Arc::new(PrelimCost)),
        "sphere_eig" => entry(
            "sphere_eig",
            ManifoldKind::Sphere { ambient: 3 },
            40_000,
            3,
            1e-4,
            Arc::new(TraceCost { a: sphere_matrix() }),
        ),
        "stiefel_eig3" => entry(
            "stiefel_eig3",
            ManifoldKind::Stiefel { rows: 3, cols: 2 },
            42_875,
            3,
            1e-3,
            Arc::new(TraceCost { a: stiefel3_matrix() }),
        ),
        "stiefel_eig4" => entry(
            "stiefel_eig4",
            ManifoldKind::Stiefel { rows: 4, cols: 2 },
            100_000,
            4,
            1e-4,
            Arc::new(TraceCost { a: stiefel4_matrix() }),
        ),
        "stiefel_pca" => entry(
            "stiefel_pca",
            ManifoldKind::Stiefel { rows: 3, cols: 2 },
            42_875,
            6,
            1e-4,
            Arc::new(PcaCost::new(&pca_matrix())),
        ),
        "fixed_rank" => entry(
            "fixed_rank",
            ManifoldKind::FixedRank {
                rows: 2,
                cols: 2,
                rank: 1,
            },
            100_000,
            12,
            1e-4,
            Arc::new(DistanceCost {
                target: low_rank_target(),
            }),
        ),
        other => return Err(Error::UnknownProblem(other.to_string())),
    })
}

fn top_eigen_sum(a: &DMatrix<f64>, count: usize) -> f64 {
    let mut values: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| y.total_cmp(x));
    values[..count].iter().sum()
}

/// Leading `count` right singular vectors of `a` as columns.
pub fn leading_right_singular_vectors(a: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.tr_mul(a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    DMatrix::from_fn(a.ncols(), count, |r, c| eig.eigenvectors[(r, order[c])])
}

/// Best rank-`rank` approximation of `a`.
pub fn truncated_svd(a: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for &k in &order[..rank] {
        out += u.column(k) * vt.row(k) * svd.singular_values[k];
    }
    out
}

/// Name of the quality metric reported for `problem`.
pub fn metric_name(problem: &str) -> Result<&'static str> {
    Ok(match problem {
        "prelim" => "cost",
        "sphere_eig" | "stiefel_eig3" | "stiefel_eig4" => "relative_suboptimality",
        "stiefel_pca" => "relative_subspace_error",
        "fixed_rank" => "relative_frobenius_error",
        other => return Err(Error::UnknownProblem(other.to_string())),
    })
}

/// Quality of the point `x` for `problem`; zero at the exact optimizer
/// except for `prelim`, which reports its raw cost.
pub fn compute_metric(problem: &str, x: &[f64]) -> Result<f64> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let entry = make_problem(problem)?;
    if x.len() != entry.ambient_dim() {
        return Err(Error::RaggedInput {
            row: 0,
            len: x.len(),
            expected: entry.ambient_dim(),
        });
    }
    let eig_gap = |a: DMatrix<f64>, cols: usize| {
        let best = top_eigen_sum(&a, cols);
        let xm = DMatrix::from_column_slice(a.nrows(), cols, x);
        let value = xm.tr_mul(&(&a * &xm)).trace();
        (best - value).abs() / best
    };
    Ok(match problem {
        "prelim" => PrelimCost.cost(x),
        "sphere_eig" => eig_gap(sphere_matrix(), 1),
        "stiefel_eig3" => eig_gap(stiefel3_matrix(), 2),
        "stiefel_eig4" => eig_gap(stiefel4_matrix(), 2),
        "stiefel_pca" => {
            let v = leading_right_singular_vectors(&pca_matrix(), 2);
            let vv = &v * v.transpose();
            let xm = DMatrix::from_column_slice(3, 2, x);
            (&vv - &xm * xm.transpose()).norm() / vv.norm()
        }
        "fixed_rank" => {
            let best = truncated_svd(&low_rank_target(), 1);
            (DMatrix::from_column_slice(2, 2, x) - &best).norm() / best.norm()
        }
        _ => unreachable!(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Gd,
    Cg,
}

/// One experiment. `None` fields take the registry defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: String,
    pub n: Option<usize>,
    pub degree: Option<usize>,
    /// Noise variance for points and cost samples.
    pub noise: Option<f64>,
    pub seed: u64,
    pub solver: SolverKind,
    pub mode: Mode,
    pub options: SolverOptions,
    pub weight_k: f64,
    /// Overrides the estimated fill distance.
    pub h: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(problem: &str, solver: SolverKind, mode: Mode, seed: u64) -> Self {
        Self {
            problem: problem.to_string(),
            n: None,
            degree: None,
            noise: None,
            seed,
            solver,
            mode,
            options: SolverOptions {
                seed,
                ..SolverOptions::default()
            },
            weight_k: DEFAULT_K,
            h: None,
        }
    }
}

/// Summary of one experiment. The full trace is kept alongside but not
/// serialized.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub n: usize,
    pub degree: usize,
    pub noise: f64,
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub h: f64,
    pub weight: WeightSpec,
    pub step_guard: f64,
    pub initial_index: usize,
    pub termination: Termination,
    pub iterations: usize,
    pub final_cost: Option<f64>,
    pub final_grad_norm: Option<f64>,
    pub final_point: Option<Vec<f64>>,
    pub metric_name: String,
    pub metric: Option<f64>,
    pub cost_evals: usize,
    pub projections: usize,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub failure: Option<String>,
    #[serde(skip)]
    pub trace: Trace,
}

impl Report {
    /// Writes `trace.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.trace.write_csv(BufWriter::new(File::create(dir.join("trace.csv"))?))?;
        serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("report.json"))?), self)?;
        Ok(())
    }
}

/// Independent seeds for sampling, noise and the initial point.
fn stream_seeds(seed: u64) -> [u64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [rng.random(), rng.random(), rng.random()]
}

/// The cloud and problem an experiment runs on, before solving.
pub struct PreparedExperiment {
    pub entry: BenchProblem,
    pub problem: Problem,
    pub x0: Vec<f64>,
    pub initial_index: usize,
    pub n: usize,
    pub degree: usize,
    pub noise: f64,
    pub h: f64,
}

/// Samples the cloud, evaluates and perturbs the cost samples and picks the
/// starting sample.
pub fn prepare_experiment(cfg: &ExperimentConfig) -> Result<PreparedExperiment> {
    let entry = make_problem(&cfg.problem)?;
    let n = cfg.n.unwrap_or(entry.n);
    let degree = cfg.degree.unwrap_or(entry.degree);
    let noise = cfg.noise.unwrap_or(entry.noise);
    if !(noise >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise variance must be nonnegative, got {noise}")));
    }
    let [sample_seed, noise_seed, start_seed] = stream_seeds(cfg.seed);
    let clean = sample_manifold(&entry.kind, n, sample_seed)?;
    let values = clean.points().map(|p| entry.objective.cost(p)).collect();
    let clean = clean.with_values(values)?;
    let set = add_noise(&clean, noise, noise_seed, NoiseTarget::Both)?;
    let h = match cfg.h {
        Some(h) => h,
        None => estimate_fill_distance(&set)?.h_est,
    };
    let weight = WeightSpec::new(cfg.weight_k, h)?;
    let geometry = GeometryConfig::new(degree, weight);
    let mut rng = ChaCha8Rng::seed_from_u64(start_seed);
    let initial_index = rng.random_range(0..set.len());
    let x0 = set.point(initial_index).to_vec();
    let set = Arc::new(set);
    let problem = match cfg.mode {
        Mode::ExplicitGradient => Problem::explicit(set, entry.objective.clone(), geometry),
        Mode::Sampled => Problem::sampled(set, geometry)?,
    };
    Ok(PreparedExperiment {
        entry,
        problem,
        x0,
        initial_index,
        n,
        degree,
        noise,
        h,
    })
}

/// Runs one experiment end to end. A start that cannot be projected yields
/// a report with termination `mmls_failure` rather than an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.options.validate()?;
    let setup = Stopwatch::start();
    let prepared = prepare_experiment(cfg)?;
    let setup_seconds = setup.seconds();
    let solve = Stopwatch::start();
    let run = match cfg.solver {
        SolverKind::Gd => gradient_descent(&prepared.problem, &prepared.x0, &cfg.options),
        SolverKind::Cg => conjugate_gradient(&prepared.problem, &prepared.x0, &cfg.options),
    };
    let trace = match run {
        Ok(trace) => trace,
        Err(e @ Error::InitialProjectionFailure(_)) => Trace::from_initial_failure(e, &cfg.options),
        Err(e) => return Err(e),
    };
    let solve_seconds = solve.seconds();
    let last = trace.last();
    let metric = match last {
        Some(r) => Some(compute_metric(&cfg.problem, &r.point)?),
        None => None,
    };
    let geometry = prepared.problem.geometry;
    Ok(Report {
        config: cfg.clone(),
        n: prepared.n,
        degree: prepared.degree,
        noise: prepared.noise,
        ambient_dim: prepared.entry.ambient_dim(),
        intrinsic_dim: prepared.entry.intrinsic_dim(),
        h: prepared.h,
        weight: geometry.weight,
        step_guard: geometry.step_guard,
        initial_index: prepared.initial_index,
        termination: trace.termination,
        iterations: trace.iterations(),
        final_cost: last.map(|r| r.cost),
        final_grad_norm: last.map(|r| r.grad_norm),
        final_point: last.map(|r| r.point.clone()),
        metric_name: metric_name(&cfg.problem)?.to_string(),
        metric,
        cost_evals: trace.cost_evals,
        projections: trace.projections,
        setup_seconds,
        solve_seconds,
        failure: trace.failure.clone(),
        trace,
    })
}

/// Named experiment batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// All six problems at their registry defaults.
    Paper,
    /// The same problems on small clouds, for quick checks.
    Smoke,
}

/// Experiment list of a suite.
pub fn suite_configs(suite: Suite, seed: u64) -> Vec<ExperimentConfig> {
    PROBLEM_NAMES
        .iter()
        .map(|name| {
            let mut cfg = ExperimentConfig::new(name, SolverKind::Gd, Mode::Sampled, seed);
            if suite == Suite::Smoke {
                let entry = make_problem(name).expect("registry name");
                cfg.n = Some(smoke_size(&entry));
                cfg.degree = Some(entry.degree.min(2));
                cfg.options.max_iters = 200;
            }
            cfg
        })
        .collect()
}

fn smoke_size(entry: &BenchProblem) -> usize {
    match entry.intrinsic_dim() {
        2 => 5_000,
        3 => 8_000,
        _ => 20_000,
    }
}

/// Runs a suite, one experiment per problem, in parallel when enabled.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<Result<Report>> {
    let configs = suite_configs(suite, seed);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        configs.par_iter().map(run_experiment).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        configs.iter().map(run_experiment).collect()
    }
}

/// Initial point index the runner would pick for `seed` on a cloud of `n`
/// points.
pub fn initial_index(seed: u64, n: usize) -> usize {
    let [_, _, start_seed] = stream_seeds(seed);
    ChaCha8Rng::seed_from_u64(start_seed).random_range(0..n)
}

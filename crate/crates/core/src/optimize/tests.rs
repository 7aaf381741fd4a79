use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::point_cloud::{estimate_fill_distance, sample_manifold, ManifoldKind};
use crate::weights::WeightSpec;

// Plane spanned by e1, e2 in R^4, offset in the last two coordinates.
fn plane_points(n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    (0..n)
        .map(|_| {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            vec![a, b, 0.5, -0.25]
        })
        .collect()
}

fn geometry_for(set: &SampleSet, degree: usize) -> GeometryConfig {
    let h = estimate_fill_distance(set).unwrap().h_est;
    GeometryConfig::new(degree, WeightSpec::with_fill_distance(h).unwrap())
}

struct Quadratic {
    center: DVector<f64>,
    scale: DVector<f64>,
}

impl Objective for Quadratic {
    fn cost(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.center.iter().zip(self.scale.iter()))
            .map(|(xi, (c, s))| s * (xi - c) * (xi - c))
            .sum()
    }

    fn euclid_grad(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| 2.0 * self.scale[i] * (x[i] - self.center[i]))
    }
}

struct Linear(DVector<f64>);

impl Objective for Linear {
    fn cost(&self, x: &[f64]) -> f64 {
        self.0.dot(&DVector::from_column_slice(x))
    }

    fn euclid_grad(&self, _x: &[f64]) -> DVector<f64> {
        self.0.clone()
    }
}

struct Rayleigh(DMatrix<f64>);

impl Objective for Rayleigh {
    fn cost(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        -x.dot(&(&self.0 * &x))
    }

    fn euclid_grad(&self, x: &[f64]) -> DVector<f64> {
        &self.0 * DVector::from_column_slice(x) * -2.0
    }
}

fn sphere_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.64, 0.9, 0.71, 0.9, 0.82, 0.33, 0.71, 0.33, 0.7])
}

fn plane_quadratic() -> Problem {
    let set = SampleSet::new(&plane_points(600), None, 2).unwrap();
    let geometry = geometry_for(&set, 2);
    let objective = Quadratic {
        center: DVector::from_vec(vec![0.2, -0.1, 0.0, 0.0]),
        scale: DVector::from_vec(vec![1.0, 3.0, 1.0, 1.0]),
    };
    Problem::explicit(Arc::new(set), Arc::new(objective), geometry)
}

fn sphere_problem(n: usize, sampled: bool) -> Problem {
    let a = sphere_matrix();
    let mut set = sample_manifold(&ManifoldKind::Sphere { ambient: 3 }, n, 31).unwrap();
    let geometry = geometry_for(&set, 3);
    let objective = Rayleigh(a);
    if sampled {
        let values = set.points().map(|p| objective.cost(p)).collect();
        set = set.with_values(values).unwrap();
        Problem::sampled(Arc::new(set), geometry).unwrap()
    } else {
        Problem::explicit(Arc::new(set), Arc::new(objective), geometry)
    }
}

fn replay_armijo(trace: &Trace) {
    for pair in trace.records.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        assert!(prev.cost - next.cost >= -trace.delta * next.step_size * next.slope);
        assert!(next.cost < prev.cost);
    }
}

#[test]
fn eval_on_flat_cloud_matches_in_plane_gradient() {
    let pts = plane_points(500);
    let c = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
    let values = pts.iter().map(|p| c.dot(&DVector::from_column_slice(p))).collect();
    let set = Arc::new(SampleSet::new(&pts, Some(values), 2).unwrap());
    let geometry = geometry_for(&set, 1);
    let expected = DVector::from_vec(vec![1.0, -2.0, 0.0, 0.0]);
    let r = [0.1, 0.3, 0.5, -0.25];
    let proj = geometry.project(&set, &r).unwrap();
    let explicit = Problem::explicit(set.clone(), Arc::new(Linear(c.clone())), geometry);
    let sampled = Problem::sampled(set, geometry).unwrap();
    for problem in [explicit, sampled] {
        let (cost, g) = eval_cost_and_grad(&problem, proj.point.as_slice(), &proj).unwrap();
        assert!((g - &expected).norm() < 1e-8);
        assert!((cost - c.dot(&proj.point)).abs() < 1e-8);
    }
}

#[test]
fn constant_samples_have_zero_gradient() {
    let pts = plane_points(400);
    let set = Arc::new(SampleSet::new(&pts, Some(vec![4.0; 400]), 2).unwrap());
    let geometry = geometry_for(&set, 2);
    let problem = Problem::sampled(set.clone(), geometry).unwrap();
    let proj = geometry.project(&set, &[0.0, 0.0, 0.5, -0.25]).unwrap();
    let (cost, g) = eval_cost_and_grad(&problem, proj.point.as_slice(), &proj).unwrap();
    assert!((cost - 4.0).abs() < 1e-8);
    assert!(g.norm() < 1e-8);
}

#[test]
fn start_at_minimizer_stops_immediately() {
    let problem = plane_quadratic();
    let trace = gradient_descent(&problem, &[0.2, -0.1, 0.5, -0.25], &SolverOptions::default()).unwrap();
    assert_eq!(trace.termination, Termination::GradTol);
    assert!(trace.iterations() <= 2);
}

#[test]
fn small_first_step_is_accepted() {
    let problem = plane_quadratic();
    let state = initial_state(&problem, &[0.6, 0.4, 0.5, -0.25]).unwrap();
    let opts = SolverOptions {
        alpha_bar: 0.01,
        ..SolverOptions::default()
    };
    let dir = -&state.rgrad;
    let step = armijo_backtracking(&problem, &state, &dir, &opts).unwrap();
    assert_eq!(step.backtracks, 0);
    assert_eq!(step.alpha, 0.01);
    assert!(state.cost - step.state.cost >= opts.delta * step.alpha * state.rgrad.norm_squared());
}

#[test]
fn non_descent_direction_is_rejected() {
    let problem = plane_quadratic();
    let state = initial_state(&problem, &[0.6, 0.4, 0.5, -0.25]).unwrap();
    let dir = state.rgrad.clone();
    assert!(matches!(
        armijo_backtracking(&problem, &state, &dir, &SolverOptions::default()),
        Err(Error::NonDescentDirection)
    ));
}

#[test]
fn failed_projection_trial_is_shrunk() {
    let mut problem = sphere_problem(5000, false);
    problem.geometry.step_guard = 100.0;
    let state = initial_state(&problem, &[0.6, 0.0, 0.8]).unwrap();
    let dir = -&state.rgrad;
    let opts = SolverOptions {
        alpha_bar: 5.0 / dir.norm(),
        ..SolverOptions::default()
    };
    let first: Vec<f64> = state
        .point
        .iter()
        .zip(dir.iter())
        .map(|(x, d)| x + opts.alpha_bar * d)
        .collect();
    assert!(problem.geometry.project(&problem.set, &first).is_err());
    let step = armijo_backtracking(&problem, &state, &dir, &opts).unwrap();
    assert!(step.backtracks > 0);
    assert!(state.cost - step.state.cost >= opts.delta * step.alpha * state.rgrad.norm_squared());
}

#[test]
fn cg_on_flat_quadratic_is_fast() {
    let problem = plane_quadratic();
    let trace = conjugate_gradient(&problem, &[0.8, 0.7, 0.5, -0.25], &SolverOptions::default()).unwrap();
    assert_eq!(trace.termination, Termination::GradTol);
    assert!(trace.iterations() <= 10, "{}", trace.iterations());
    replay_armijo(&trace);
}

#[test]
fn sphere_descent_is_monotone_and_converges() {
    for sampled in [false, true] {
        let problem = sphere_problem(10000, sampled);
        let trace = gradient_descent(&problem, &[0.0, -0.6, 0.8], &SolverOptions::default()).unwrap();
        assert_eq!(trace.termination, Termination::GradTol, "sampled={sampled}");
        replay_armijo(&trace);
        let h = problem.geometry.weight.h;
        for r in &trace.records {
            let again = problem.geometry.project(&problem.set, &r.point).unwrap();
            assert!((again.point - DVector::from_column_slice(&r.point)).norm() <= 1e-6 * h);
            assert!(r.step_size * (r.slope.abs().sqrt()) <= problem.geometry.step_guard + 1e-12);
        }
    }
}

#[test]
fn zero_beta_cg_replays_descent() {
    let problem = sphere_problem(5000, false);
    let opts = SolverOptions {
        beta: BetaRule::Zero,
        ..SolverOptions::default()
    };
    let gd = gradient_descent(&problem, &[0.0, -0.6, 0.8], &opts).unwrap();
    let cg = conjugate_gradient(&problem, &[0.0, -0.6, 0.8], &opts).unwrap();
    assert_eq!(gd.records.len(), cg.records.len());
    for (a, b) in gd.records.iter().zip(&cg.records) {
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        assert_eq!(a.grad_norm.to_bits(), b.grad_norm.to_bits());
        assert_eq!(a.step_size.to_bits(), b.step_size.to_bits());
        assert_eq!(a.point, b.point);
    }
}

#[test]
fn cg_variants_on_sphere() {
    for beta in [BetaRule::FletcherReeves, BetaRule::PolakRibierePlus] {
        let problem = sphere_problem(10000, false);
        let opts = SolverOptions {
            beta,
            ..SolverOptions::default()
        };
        let trace = conjugate_gradient(&problem, &[0.0, -0.6, 0.8], &opts).unwrap();
        replay_armijo(&trace);
        // Fletcher-Reeves without a Wolfe line search may jam with tiny
        // steps; only PR+ is required to reach the gradient tolerance.
        if beta == BetaRule::PolakRibierePlus {
            assert_eq!(trace.termination, Termination::GradTol);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let problem = sphere_problem(5000, true);
    let a = conjugate_gradient(&problem, &[0.6, 0.0, 0.8], &SolverOptions::default()).unwrap();
    let b = conjugate_gradient(&problem, &[0.6, 0.0, 0.8], &SolverOptions::default()).unwrap();
    let strip = |t: &Trace| -> Vec<IterationRecord> {
        t.records
            .iter()
            .map(|r| IterationRecord {
                wall_seconds: 0.0,
                ..r.clone()
            })
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn fixed_step_descends_on_flat_quadratic() {
    let problem = plane_quadratic();
    let opts = SolverOptions {
        step: StepRule::Fixed(0.1),
        ..SolverOptions::default()
    };
    let trace = gradient_descent(&problem, &[0.8, 0.7, 0.5, -0.25], &opts).unwrap();
    assert_eq!(trace.termination, Termination::GradTol);
    assert!(trace.records.iter().skip(1).all(|r| r.step_size <= 0.1));
}

#[test]
fn unprojectable_start_is_an_error() {
    let problem = sphere_problem(2000, false);
    let err = gradient_descent(&problem, &[0.0, 0.0, 0.0], &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InitialProjectionFailure(_)));
    let trace = Trace::from_initial_failure(err, &SolverOptions::default());
    assert_eq!(trace.termination, Termination::MmlsFailure);
}

#[test]
fn max_iters_is_respected() {
    let problem = sphere_problem(5000, false);
    let opts = SolverOptions {
        max_iters: 2,
        grad_tol: 1e-12,
        ..SolverOptions::default()
    };
    let trace = gradient_descent(&problem, &[0.0, -0.6, 0.8], &opts).unwrap();
    assert_eq!(trace.termination, Termination::MaxIters);
    assert_eq!(trace.iterations(), 2);
}

#[test]
fn trace_csv_layout() {
    let problem = plane_quadratic();
    let trace = gradient_descent(&problem, &[0.8, 0.7, 0.5, -0.25], &SolverOptions::default()).unwrap();
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "iter,cost,grad_norm,step_size,backtracks,wall_seconds");
    assert_eq!(*lines.last().unwrap(), "# terminated=grad_tol");
    assert_eq!(lines.len(), trace.records.len() + 2);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first.len(), 6);
    assert_eq!(first[1].parse::<f64>().unwrap(), trace.records[0].cost);
}

#[test]
fn option_ranges_are_checked() {
    let ok = SolverOptions::default();
    assert!(ok.validate().is_ok());
    for bad in [
        SolverOptions { delta: 0.25, ..ok },
        SolverOptions { gamma: 1.0, ..ok },
        SolverOptions { alpha_bar: 0.0, ..ok },
        SolverOptions { grad_tol: -1.0, ..ok },
        SolverOptions {
            step: StepRule::Fixed(0.0),
            ..ok
        },
    ] {
        assert!(bad.validate().is_err());
    }
}


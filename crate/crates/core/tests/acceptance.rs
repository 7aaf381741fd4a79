//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mmls_ro::bench::{
    low_rank_target, make_problem, pca_matrix, run_experiment, sphere_matrix, stiefel3_matrix, stiefel4_matrix,
    ExperimentConfig, Report, SolverKind,
};
use mmls_ro::func_approx::{approx_value_and_grad, fit_scalar_poly};
use mmls_ro::geometry::{
    approx_riemannian_grad, retract, GeometryConfig, TangentBasis,
};
use mmls_ro::mmls::{local_frame, mmls_project, FrameConfig};
use mmls_ro::optimize::{
    conjugate_gradient, eval_cost_and_grad, gradient_descent, BetaRule, Mode, Objective, Problem, SolverOptions,
    Termination, Trace,
};
use mmls_ro::point_cloud::{estimate_fill_distance, sample_manifold, ManifoldKind, SampleSet};
use mmls_ro::weights::{theta, WeightSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, start: Instant) -> bool {
    start.elapsed() <= limit
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn unit_queries(count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let n = v.norm();
            if n > 0.1 && n <= 1.0 {
                break v / n;
            }
        })
        .collect()
}

fn geometry_for(set: &SampleSet, degree: usize) -> GeometryConfig {
    let h = estimate_fill_distance(set).unwrap().h_est;
    GeometryConfig::new(degree, WeightSpec::with_fill_distance(h).unwrap())
}

// sine of the largest principal angle between two column spaces
fn subspace_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    (&qb - &qa * qa.tr_mul(&qb)).norm().min(1.0)
}

// ---------------------------------------------------------------- 1

fn weight_correctness() -> Outcome {
    let start = Instant::now();
    let spec = WeightSpec::new(1.5, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut zero_tail = true;
    for i in 0..1000 {
        let t = 2.0 * i as f64 / 999.0;
        let v = theta(&spec, t).unwrap();
        if t >= 1.5 {
            zero_tail &= v == 0.0;
        } else {
            let closed = (-(t * t) / ((t - 1.5) * (t - 1.5))).exp();
            worst = worst.max((v - closed).abs());
        }
        monotone &= v <= prev && (0.0..=1.0).contains(&v);
        prev = v;
    }
    let pass = worst <= 1e-15 && monotone && zero_tail && within(Duration::from_secs(1), start);
    outcome(pass, format!("max |theta - closed form| = {worst:.1e}, monotone={monotone}, zero beyond kh={zero_tail}"))
}

// ---------------------------------------------------------------- 2

struct PlaneQuadratic {
    center: DVector<f64>,
}

impl Objective for PlaneQuadratic {
    fn cost(&self, x: &[f64]) -> f64 {
        let d = DVector::from_column_slice(x) - &self.center;
        d.dot(&d) + 0.5 * x[0] * x[1]
    }

    fn euclid_grad(&self, x: &[f64]) -> DVector<f64> {
        let mut g = (DVector::from_column_slice(x) - &self.center) * 2.0;
        g[0] += 0.5 * x[1];
        g[1] += 0.5 * x[0];
        g
    }
}

fn flat_cloud_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let c = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
    let pts: Vec<Vec<f64>> = (0..500)
        .map(|_| {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            (&c + u.column(0) * a + u.column(1) * b).as_slice().to_vec()
        })
        .collect();
    let objective = PlaneQuadratic {
        center: DVector::from_fn(5, |i, _| 0.1 * i as f64),
    };
    let values = pts.iter().map(|p| objective.cost(p)).collect();
    let set = Arc::new(SampleSet::new(&pts, Some(values), 2).unwrap());
    let geometry = geometry_for(&set, 2);
    let explicit = Problem::explicit(set.clone(), Arc::new(objective.clone_box()), geometry);
    let sampled = Problem::sampled(set.clone(), geometry).unwrap();
    let projector = &u * u.transpose();

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let inner = &c + &u * DVector::from_fn(2, |_, _| rng.random_range(-0.6..0.6));
        let r = &inner + (DMatrix::identity(5, 5) - &projector) * DVector::from_fn(5, |_, _| rng.random_range(-0.05..0.05));
        let p = geometry.project(&set, r.as_slice()).unwrap();
        let exact = &c + &projector * (&r - &c);
        worst = worst.max((&p.point - &exact).norm());
        let basis = TangentBasis::from_projection(&p).unwrap();
        worst = worst.max(subspace_gap(&u, basis.matrix()));
        let step = &u * DVector::from_fn(2, |_, _| rng.random_range(-0.05..0.05));
        let moved = retract(&set, p.point.as_slice(), step.as_slice(), &geometry).unwrap();
        worst = worst.max((moved - (&p.point + &step)).norm());
        let in_plane = &projector * objective.euclid_grad(p.point.as_slice());
        for problem in [&explicit, &sampled] {
            let (_, g) = eval_cost_and_grad(problem, p.point.as_slice(), &p).unwrap();
            worst = worst.max((g - &in_plane).norm());
        }
    }
    let pass = worst <= 1e-8 && within(Duration::from_secs(5), start);
    outcome(pass, format!("max deviation over projection/tangent/retraction/gradients = {worst:.1e}"))
}

impl PlaneQuadratic {
    fn clone_box(&self) -> PlaneQuadratic {
        PlaneQuadratic {
            center: self.center.clone(),
        }
    }
}

// ---------------------------------------------------------------- 3 and 4

struct SweepLevel {
    projection: Vec<f64>,
    angle: Vec<f64>,
    gradient: Vec<f64>,
}

fn sphere_sweep() -> Vec<SweepLevel> {
    let a = sphere_matrix();
    let queries = unit_queries(100, 99);
    let mut levels = Vec::new();
    for (i, n) in [2500usize, 10_000, 40_000].into_iter().enumerate() {
        let set = sample_manifold(&ManifoldKind::Sphere { ambient: 3 }, n, 1000 + i as u64).unwrap();
        let h = estimate_fill_distance(&set).unwrap().h_est;
        let spec = WeightSpec::with_fill_distance(h).unwrap();
        let mut level = SweepLevel {
            projection: Vec::new(),
            angle: Vec::new(),
            gradient: Vec::new(),
        };
        for m in 1..=3 {
            let mut proj = Vec::new();
            let mut ang = Vec::new();
            let mut grad = Vec::new();
            for q in &queries {
                let p = mmls_project(&set, q.as_slice(), m, &spec, &FrameConfig::default()).unwrap();
                proj.push((p.point.norm() - 1.0).abs());
                let x = &p.point;
                let normal = x / x.norm();
                let basis = TangentBasis::from_projection(&p).unwrap();
                // tangent columns leaking into the analytic normal
                let q_basis = basis.matrix().clone().qr().q();
                ang.push(q_basis.tr_mul(&normal).norm().min(1.0).asin());
                let egrad = &a * x * 2.0;
                let exact = &egrad - &normal * normal.dot(&egrad);
                grad.push((approx_riemannian_grad(&basis, &egrad) - exact).norm());
            }
            level.projection.push(median(proj));
            level.angle.push(median(ang));
            level.gradient.push(median(grad));
        }
        levels.push(level);
    }
    levels
}

fn ratios(levels: &[SweepLevel], pick: impl Fn(&SweepLevel) -> &Vec<f64>, m: usize) -> Vec<f64> {
    levels.windows(2).map(|w| pick(&w[0])[m - 1] / pick(&w[1])[m - 1]).collect()
}

fn projection_order(levels: &[SweepLevel], elapsed: Duration) -> Outcome {
    let mut pass = elapsed <= Duration::from_secs(120);
    let mut detail = Vec::new();
    for m in 1..=3 {
        let r = ratios(levels, |l| &l.projection, m);
        let need = 2f64.powi(m as i32 + 1) * 0.5;
        pass &= r.iter().all(|x| *x >= need);
        detail.push(format!("m={m}: ratios {:.2}, {:.2} (need >= {need})", r[0], r[1]));
    }
    outcome(pass, detail.join("; "))
}

fn tangent_order(levels: &[SweepLevel], elapsed: Duration) -> Outcome {
    let mut pass = elapsed <= Duration::from_secs(120);
    let mut detail = Vec::new();
    for m in 1..=3 {
        let need = 2f64.powi(m as i32) * 0.5;
        let ra = ratios(levels, |l| &l.angle, m);
        let rg = ratios(levels, |l| &l.gradient, m);
        pass &= ra.iter().chain(&rg).all(|x| *x >= need);
        detail.push(format!(
            "m={m}: angle {:.2}, {:.2}; grad {:.2}, {:.2} (need >= {need})",
            ra[0], ra[1], rg[0], rg[1]
        ));
    }
    outcome(pass, detail.join("; "))
}

// ---------------------------------------------------------------- 5

fn sampled_gradient_consistency() -> Outcome {
    let start = Instant::now();
    let a = sphere_matrix();
    let base = sample_manifold(&ManifoldKind::Sphere { ambient: 3 }, 10_000, 55).unwrap();
    let values = base
        .points()
        .map(|p| {
            let x = DVector::from_column_slice(p);
            x.dot(&(&a * &x))
        })
        .collect();
    let set = base.with_values(values).unwrap();
    let spec = WeightSpec::with_fill_distance(estimate_fill_distance(&set).unwrap().h_est).unwrap();
    let mut worst: f64 = 0.0;
    for (i, q) in unit_queries(50, 5).iter().enumerate() {
        let m = 1 + i % 3;
        let frame = local_frame(&set, q.as_slice(), &spec, &FrameConfig::default()).unwrap();
        let poly = fit_scalar_poly(&set, &frame, m, &spec).unwrap();
        let (_, grad) = approx_value_and_grad(&poly).unwrap();
        let step = 1e-5;
        let fd = DVector::from_fn(2, |k, _| {
            let mut plus = [0.0; 2];
            let mut minus = [0.0; 2];
            plus[k] = step;
            minus[k] = -step;
            (poly.eval(&plus) - poly.eval(&minus)) / (2.0 * step)
        });
        worst = worst.max((&grad - fd).norm() / grad.norm());
    }
    let pass = worst <= 1e-6 && within(Duration::from_secs(10), start);
    outcome(pass, format!("max relative error over 50 fits = {worst:.1e}"))
}

// ---------------------------------------------------------------- 6

fn idempotence() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for name in ["prelim", "sphere_eig", "stiefel_eig3", "stiefel_eig4", "stiefel_pca", "fixed_rank"] {
        let t0 = Instant::now();
        let entry = make_problem(name).unwrap();
        let set = sample_manifold(&entry.kind, entry.n, 7).unwrap();
        let geometry = geometry_for(&set, entry.degree);
        let h = geometry.weight.h;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut worst_idem: f64 = 0.0;
        let mut worst_retract: f64 = 0.0;
        let mut failures = 0;
        let mut outside = 0;
        let mut accepted = 0;
        // points of the approximate manifold are images of successful projections
        while accepted < 100 && outside < 10_000 {
            let i = rng.random_range(0..set.len());
            let Ok(first) = geometry.project(&set, set.point(i)) else {
                outside += 1;
                continue;
            };
            accepted += 1;
            let r = first.point.as_slice();
            match geometry.project(&set, r) {
                Ok(second) => worst_idem = worst_idem.max((&second.point - &first.point).norm() / h),
                Err(_) => failures += 1,
            }
            match retract(&set, r, &vec![0.0; r.len()], &geometry) {
                Ok(back) => worst_retract = worst_retract.max((back - &first.point).norm() / h),
                Err(_) => failures += 1,
            }
        }
        failures += 100 - accepted;
        pass &= failures == 0 && worst_idem <= 1e-6 && worst_retract <= 1e-6;
        detail.push(format!(
            "{name}: {worst_idem:.1e}/{worst_retract:.1e} h, {failures} failures, {outside} draws outside the domain ({:.1}s)",
            t0.elapsed().as_secs_f64()
        ));
    }
    pass &= within(Duration::from_secs(60), start);
    detail.push(format!("{:.1}s", start.elapsed().as_secs_f64()));
    outcome(pass, detail.join(", "))
}

// ---------------------------------------------------------------- 7 to 11

fn armijo_holds(trace: &Trace) -> bool {
    trace.records.windows(2).all(|w| {
        let (prev, next) = (&w[0], &w[1]);
        next.cost < prev.cost && prev.cost - next.cost >= -trace.delta * next.step_size * next.slope
    })
}

fn sphere_suboptimality(x: &[f64]) -> f64 {
    let a = sphere_matrix();
    let lambda = SymmetricEigen::new(a.clone()).eigenvalues.max();
    let x = DVector::from_column_slice(x);
    (lambda - x.dot(&(&a * &x))).abs() / lambda
}

fn top_two(a: DMatrix<f64>) -> f64 {
    let mut v: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v[0] + v[1]
}

fn independent_metric(name: &str, x: &[f64]) -> f64 {
    match name {
        "sphere_eig" => sphere_suboptimality(x),
        "stiefel_eig3" | "stiefel_eig4" => {
            let a = if name == "stiefel_eig3" { stiefel3_matrix() } else { stiefel4_matrix() };
            let rows = a.nrows();
            let best = top_two(a.clone());
            let xm = DMatrix::from_column_slice(rows, 2, x);
            (best - xm.tr_mul(&(&a * &xm)).trace()).abs() / best
        }
        "stiefel_pca" => {
            let svd = pca_matrix().svd(false, true);
            let vt = svd.v_t.unwrap();
            let mut order: Vec<usize> = (0..3).collect();
            order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
            let v = DMatrix::from_fn(3, 2, |r, c| vt[(order[c], r)]);
            let vv = &v * v.transpose();
            let xm = DMatrix::from_column_slice(3, 2, x);
            (&vv - &xm * xm.transpose()).norm() / vv.norm()
        }
        "fixed_rank" => {
            let svd = low_rank_target().svd(true, true);
            let k = svd.singular_values.imax();
            let best = svd.u.unwrap().column(k) * svd.v_t.unwrap().row(k) * svd.singular_values[k];
            (DMatrix::from_column_slice(2, 2, x) - &best).norm() / best.norm()
        }
        _ => unreachable!(),
    }
}

struct Run {
    label: String,
    report: Report,
    seconds: f64,
}

fn run(label: &str, cfg: ExperimentConfig) -> Run {
    let start = Instant::now();
    let report = run_experiment(&cfg).unwrap();
    Run {
        label: label.to_string(),
        report,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn clean(name: &str, solver: SolverKind, mode: Mode, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(name, solver, mode, seed);
    cfg.noise = Some(0.0);
    cfg
}

fn final_grad(r: &Report) -> f64 {
    r.final_grad_norm.unwrap_or(f64::INFINITY)
}

fn final_point(r: &Report) -> &[f64] {
    r.final_point.as_deref().unwrap_or(&[])
}

fn sphere_experiment(runs: &[Run]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for r in runs {
        let g = final_grad(&r.report);
        let sub = sphere_suboptimality(final_point(&r.report));
        pass &= r.report.termination == Termination::GradTol
            && g <= 0.005
            && r.report.iterations <= 1000
            && sub <= 1e-2
            && r.seconds <= 600.0;
        detail.push(format!(
            "{}: {} after {} iters, grad {:.1e}, subopt {:.1e}, {:.1}s",
            r.label, r.report.termination, r.report.iterations, g, sub, r.seconds
        ));
    }
    outcome(pass, detail.join("; "))
}

fn prelim_experiment(clean_run: &Run, noisy_run: &Run) -> Outcome {
    let c = &clean_run.report;
    let n = &noisy_run.report;
    let c_cost = c.final_cost.unwrap_or(f64::NAN);
    let n_cost = n.final_cost.unwrap_or(f64::NAN);
    let clean_ok = (c_cost + 1.25).abs() <= 0.1 && final_grad(c) <= 0.005 && clean_run.seconds <= 900.0;
    let noisy_ok = (n_cost + 1.22).abs() <= 0.15 && noisy_run.seconds <= 900.0;
    outcome(
        clean_ok && noisy_ok,
        format!(
            "clean: cost {c_cost:.4}, grad {:.1e}, {} after {} iters; noisy: cost {n_cost:.4}, {} after {} iters",
            final_grad(c),
            c.termination,
            c.iterations,
            n.termination,
            n.iterations
        ),
    )
}

fn matrix_experiments(runs: &[Run]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for r in runs {
        let name = r.report.config.problem.as_str();
        let limit = if name == "fixed_rank" { 0.1 } else { 5e-2 };
        let metric = r
            .report
            .final_point
            .as_deref()
            .map_or(f64::INFINITY, |x| independent_metric(name, x));
        pass &= metric <= limit && r.seconds <= 900.0;
        detail.push(format!("{}: {metric:.1e} (<= {limit:.0e}), {:.1}s", r.label, r.seconds));
    }
    outcome(pass, detail.join("; "))
}

fn armijo_contract(runs: &[&Run]) -> Outcome {
    let bad: Vec<&str> = runs
        .iter()
        .filter(|r| !armijo_holds(&r.report.trace))
        .map(|r| r.label.as_str())
        .collect();
    let steps: usize = runs.iter().map(|r| r.report.iterations).sum();
    outcome(
        bad.is_empty(),
        format!("{} runs, {steps} accepted steps replayed; violations in {:?}", runs.len(), bad),
    )
}

fn cg_sanity() -> Outcome {
    let entry = make_problem("sphere_eig").unwrap();
    let set = Arc::new(sample_manifold(&entry.kind, entry.n, 21).unwrap());
    let geometry = geometry_for(&set, entry.degree);
    let problem = Problem::explicit(set.clone(), entry.objective.clone(), geometry);
    let x0 = set.point(123).to_vec();
    let zero = SolverOptions {
        beta: BetaRule::Zero,
        ..SolverOptions::default()
    };
    let gd = gradient_descent(&problem, &x0, &zero).unwrap();
    let cg0 = conjugate_gradient(&problem, &x0, &zero).unwrap();
    let bitwise = gd.records.len() == cg0.records.len()
        && gd.records.iter().zip(&cg0.records).all(|(a, b)| {
            a.cost.to_bits() == b.cost.to_bits()
                && a.grad_norm.to_bits() == b.grad_norm.to_bits()
                && a.step_size.to_bits() == b.step_size.to_bits()
                && a.backtracks == b.backtracks
                && a.point.iter().zip(&b.point).all(|(x, y)| x.to_bits() == y.to_bits())
        });
    let prp = conjugate_gradient(&problem, &x0, &SolverOptions::default()).unwrap();
    let last = prp.last().unwrap();
    let converged = prp.termination == Termination::GradTol && prp.iterations() <= 1000 && last.grad_norm <= 0.005;
    outcome(
        bitwise && converged,
        format!(
            "beta=0 replay bitwise={bitwise} ({} iters); PR+ {} after {} iters, grad {:.1e}",
            gd.iterations(),
            prp.termination,
            prp.iterations(),
            last.grad_norm
        ),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |id: usize, name: &'static str, o: Outcome| {
        println!("criterion {id:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };

    report(1, "weight correctness", weight_correctness());
    report(2, "flat-cloud exactness", flat_cloud_exactness());
    let start = Instant::now();
    let levels = sphere_sweep();
    let elapsed = start.elapsed();
    report(3, "projection order sweep", projection_order(&levels, elapsed));
    report(4, "tangent/gradient order sweep", tangent_order(&levels, elapsed));
    report(5, "sampled-gradient consistency", sampled_gradient_consistency());
    report(6, "idempotence and retraction identity", idempotence());

    let sphere_runs = vec![
        run("gd explicit", clean("sphere_eig", SolverKind::Gd, Mode::ExplicitGradient, 1)),
        run("gd sampled", clean("sphere_eig", SolverKind::Gd, Mode::Sampled, 1)),
    ];
    let prelim_clean = run("prelim clean", clean("prelim", SolverKind::Gd, Mode::Sampled, 0));
    let prelim_noisy = {
        let mut cfg = ExperimentConfig::new("prelim", SolverKind::Gd, Mode::Sampled, 0);
        cfg.noise = Some(1e-3);
        run("prelim noisy", cfg)
    };
    let mut matrix_runs = Vec::new();
    for name in ["fixed_rank", "stiefel_eig3", "stiefel_eig4", "stiefel_pca"] {
        for (mode, tag) in [(Mode::ExplicitGradient, "explicit"), (Mode::Sampled, "sampled")] {
            matrix_runs.push(run(&format!("{name} {tag}"), clean(name, SolverKind::Gd, mode, 1)));
        }
    }
    let mut all: Vec<&Run> = sphere_runs.iter().collect();
    all.push(&prelim_clean);
    all.extend(matrix_runs.iter());
    report(7, "Armijo contract", armijo_contract(&all));
    report(8, "sphere eigenvalue experiment", sphere_experiment(&sphere_runs));
    report(9, "prelim experiment", prelim_experiment(&prelim_clean, &prelim_noisy));
    report(10, "fixed-rank and Stiefel experiments", matrix_experiments(&matrix_runs));
    report(11, "CG sanity", cg_sanity());

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

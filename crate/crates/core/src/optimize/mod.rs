//! First-order solvers over the MMLS geometry: gradient descent with Armijo
//! backtracking (or a fixed step) and nonlinear conjugate gradient with
//! projection-based vector transport.

mod trace;

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use self::trace::{IterationRecord, Termination, Trace};
use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::func_approx::{approx_value_and_grad, fit_scalar_poly, ScalarPoly};
use crate::geometry::{
    approx_riemannian_grad, approx_riemannian_grad_sampled, orth_project, GeometryConfig, TangentBasis,
};
use crate::mmls::{project_local, Projection};
use crate::point_cloud::SampleSet;

/// A cost with a known Euclidean gradient.
pub trait Objective: Send + Sync {
    fn cost(&self, x: &[f64]) -> f64;
    fn euclid_grad(&self, x: &[f64]) -> DVector<f64>;
}

/// How cost and gradient are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `f` and `grad f` are callable; the gradient is projected on the
    /// approximate tangent space.
    ExplicitGradient,
    /// Only the cost samples stored with the cloud are used.
    Sampled,
}

/// Optimization problem over the manifold sampled by `set`.
#[derive(Clone)]
pub struct Problem {
    pub set: Arc<SampleSet>,
    pub mode: Mode,
    pub objective: Option<Arc<dyn Objective>>,
    pub geometry: GeometryConfig,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("points", &self.set.len())
            .field("mode", &self.mode)
            .field("geometry", &self.geometry)
            .finish()
    }
}

impl Problem {
    pub fn explicit(set: Arc<SampleSet>, objective: Arc<dyn Objective>, geometry: GeometryConfig) -> Self {
        Self {
            set,
            mode: Mode::ExplicitGradient,
            objective: Some(objective),
            geometry,
        }
    }

    pub fn sampled(set: Arc<SampleSet>, geometry: GeometryConfig) -> Result<Self> {
        if set.values().is_none() {
            return Err(Error::MissingValues);
        }
        Ok(Self {
            set,
            mode: Mode::Sampled,
            objective: None,
            geometry,
        })
    }

    fn objective(&self) -> Result<&dyn Objective> {
        self.objective
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter("explicit mode needs an objective".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRule {
    FletcherReeves,
    PolakRibierePlus,
    /// Always restart; CG then coincides with gradient descent.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Armijo,
    /// Constant step length, shrunk only when the retraction fails.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iters: usize,
    /// Sufficient-decrease constant, in `(0, 0.25)`.
    pub delta: f64,
    /// Backtracking factor, in `(0, 1)`.
    pub gamma: f64,
    pub alpha_bar: f64,
    pub beta: BetaRule,
    pub step: StepRule,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grad_tol: 0.005,
            step_tol: 1e-10,
            max_iters: 1000,
            delta: 0.1,
            gamma: 0.5,
            alpha_bar: 1.0,
            beta: BetaRule::PolakRibierePlus,
            step: StepRule::Armijo,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.step_tol > 0.0) {
            return bad("step_tol must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 0.25) {
            return bad("delta must lie in (0, 0.25)");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.alpha_bar > 0.0) || !self.alpha_bar.is_finite() {
            return bad("alpha_bar must be positive");
        }
        if let StepRule::Fixed(a) = self.step {
            if !(a > 0.0) || !a.is_finite() {
                return bad("fixed step must be positive");
            }
        }
        Ok(())
    }
}

/// Everything known at an iterate.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub point: DVector<f64>,
    pub cost: f64,
    pub rgrad: DVector<f64>,
    pub basis: TangentBasis,
    pub projection: Projection,
}

#[derive(Debug, Default, Clone, Copy)]
struct Counters {
    cost_evals: usize,
    projections: usize,
}

fn cost_and_grad(
    problem: &Problem,
    r: &[f64],
    projection: &Projection,
    basis: &TangentBasis,
    fit: Option<&ScalarPoly>,
) -> Result<(f64, DVector<f64>)> {
    let (cost, rgrad) = match problem.mode {
        Mode::ExplicitGradient => {
            let obj = problem.objective()?;
            (obj.cost(r), approx_riemannian_grad(basis, &obj.euclid_grad(r)))
        }
        Mode::Sampled => {
            let owned;
            let poly = match fit {
                Some(p) => p,
                None => {
                    owned = fit_scalar_poly(&problem.set, &projection.frame, problem.geometry.degree, &projection.weight)?;
                    &owned
                }
            };
            let (value, grad) = approx_value_and_grad(poly)?;
            (value, approx_riemannian_grad_sampled(basis, &grad))
        }
    };
    if !cost.is_finite() || rgrad.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok((cost, rgrad))
}

/// Cost and approximate Riemannian gradient at `r`, given the MMLS
/// projection computed there.
pub fn eval_cost_and_grad(problem: &Problem, r: &[f64], projection: &Projection) -> Result<(f64, DVector<f64>)> {
    let basis = TangentBasis::from_projection(projection)?;
    cost_and_grad(problem, r, projection, &basis, None)
}

// Projects `query` and evaluates at the projected point. The projection of
// the query doubles as the projection of the new iterate.
fn evaluate(problem: &Problem, query: &[f64], counters: &mut Counters) -> Result<IterateState> {
    let g = &problem.geometry;
    counters.projections += 1;
    let fit = project_local(&problem.set, query, g.degree, &g.weight, &g.frame, problem.mode == Mode::Sampled)?;
    let projection = fit.projection;
    let basis = TangentBasis::from_projection(&projection)?;
    counters.cost_evals += 1;
    let (cost, rgrad) = cost_and_grad(problem, projection.point.as_slice(), &projection, &basis, fit.values.as_ref())?;
    Ok(IterateState {
        point: projection.point.clone(),
        cost,
        rgrad,
        basis,
        projection,
    })
}

/// Projects and evaluates a starting point.
pub fn initial_state(problem: &Problem, x0: &[f64]) -> Result<IterateState> {
    evaluate(problem, x0, &mut Counters::default()).map_err(|e| Error::InitialProjectionFailure(Box::new(e)))
}

/// Outcome of one line search.
#[derive(Debug, Clone)]
pub struct LineStep {
    pub alpha: f64,
    pub state: IterateState,
    /// Rejected trials before acceptance.
    pub backtracks: usize,
    /// `<grad, dir>` at the starting point.
    pub slope: f64,
}

struct LineFailure {
    alpha: f64,
    // every trial failed inside MMLS (as opposed to failing the decrease test)
    mmls_only: bool,
}

fn line_search(
    problem: &Problem,
    current: &IterateState,
    dir: &DVector<f64>,
    opts: &SolverOptions,
    counters: &mut Counters,
) -> std::result::Result<LineStep, LineFailure> {
    let slope = current.rgrad.dot(dir);
    let norm = dir.norm();
    let cap = problem.geometry.step_guard / norm;
    let (mut alpha, armijo) = match opts.step {
        StepRule::Armijo => (opts.alpha_bar.min(cap), true),
        StepRule::Fixed(a) => (a.min(cap), false),
    };
    let mut backtracks = 0;
    let mut mmls_only = true;
    loop {
        if alpha < opts.step_tol {
            return Err(LineFailure { alpha, mmls_only });
        }
        let query: Vec<f64> = current.point.iter().zip(dir.iter()).map(|(x, d)| x + alpha * d).collect();
        match evaluate(problem, &query, counters) {
            Ok(state) => {
                if !armijo || current.cost - state.cost >= -opts.delta * alpha * slope {
                    return Ok(LineStep {
                        alpha,
                        state,
                        backtracks,
                        slope,
                    });
                }
                mmls_only = false;
            }
            Err(_) => {}
        }
        alpha *= opts.gamma;
        backtracks += 1;
    }
}

/// Backtracking Armijo search along `dir` from `current`. Trials whose
/// retraction fails are treated like trials that fail the decrease test.
pub fn armijo_backtracking(
    problem: &Problem,
    current: &IterateState,
    dir: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<LineStep> {
    if !(current.rgrad.dot(dir) < 0.0) {
        return Err(Error::NonDescentDirection);
    }
    let opts = SolverOptions {
        step: StepRule::Armijo,
        ..*opts
    };
    line_search(problem, current, dir, &opts, &mut Counters::default())
        .map_err(|f| Error::StepTooSmall { alpha: f.alpha })
}

fn record(iter: usize, state: &IterateState, step: Option<&LineStep>, clock: &Stopwatch) -> IterationRecord {
    IterationRecord {
        iter,
        cost: state.cost,
        grad_norm: state.rgrad.norm(),
        step_size: step.map_or(0.0, |s| s.alpha),
        backtracks: step.map_or(0, |s| s.backtracks),
        slope: step.map_or(0.0, |s| s.slope),
        wall_seconds: clock.seconds(),
        point: state.point.as_slice().to_vec(),
    }
}

fn failed_trace(err: Error, opts: &SolverOptions) -> Trace {
    Trace {
        records: Vec::new(),
        termination: Termination::MmlsFailure,
        delta: opts.delta,
        cost_evals: 0,
        projections: 1,
        failure: Some(err.to_string()),
    }
}

/// Riemannian gradient descent. Fails only when the starting point cannot
/// be projected; see [`Trace::from_initial_failure`] for recording that case.
pub fn gradient_descent(problem: &Problem, x0: &[f64], opts: &SolverOptions) -> Result<Trace> {
    opts.validate()?;
    let clock = Stopwatch::start();
    let mut counters = Counters::default();
    let mut state = evaluate(problem, x0, &mut counters).map_err(|e| Error::InitialProjectionFailure(Box::new(e)))?;
    let mut records = vec![record(0, &state, None, &clock)];
    let termination = loop {
        let iter = records.len() - 1;
        if state.rgrad.norm() <= opts.grad_tol {
            break Termination::GradTol;
        }
        if iter >= opts.max_iters {
            break Termination::MaxIters;
        }
        let dir = -&state.rgrad;
        match line_search(problem, &state, &dir, opts, &mut counters) {
            Ok(step) => {
                records.push(record(iter + 1, &step.state, Some(&step), &clock));
                state = step.state;
            }
            Err(f) => break Termination::from_line_failure(f.mmls_only),
        }
    };
    Ok(Trace {
        records,
        termination,
        delta: opts.delta,
        cost_evals: counters.cost_evals,
        projections: counters.projections,
        failure: None,
    })
}

/// Riemannian nonlinear conjugate gradient. The previous direction (and,
/// for PR+, the previous gradient) is carried to the new iterate by
/// orthogonal projection onto its tangent space. A direction that is not a
/// descent direction is replaced by the negative gradient.
pub fn conjugate_gradient(problem: &Problem, x0: &[f64], opts: &SolverOptions) -> Result<Trace> {
    opts.validate()?;
    let clock = Stopwatch::start();
    let mut counters = Counters::default();
    let mut state = evaluate(problem, x0, &mut counters).map_err(|e| Error::InitialProjectionFailure(Box::new(e)))?;
    let mut records = vec![record(0, &state, None, &clock)];
    let mut dir = -&state.rgrad;
    let termination = loop {
        let iter = records.len() - 1;
        if state.rgrad.norm() <= opts.grad_tol {
            break Termination::GradTol;
        }
        if iter >= opts.max_iters {
            break Termination::MaxIters;
        }
        if state.rgrad.dot(&dir) >= 0.0 {
            dir = -&state.rgrad;
        }
        let step = match line_search(problem, &state, &dir, opts, &mut counters) {
            Ok(step) => step,
            Err(f) => break Termination::from_line_failure(f.mmls_only),
        };
        records.push(record(iter + 1, &step.state, Some(&step), &clock));
        let prev_sq = state.rgrad.norm_squared();
        let next = step.state;
        let next_sq = next.rgrad.norm_squared();
        let beta = match opts.beta {
            BetaRule::Zero => 0.0,
            BetaRule::FletcherReeves => next_sq / prev_sq,
            BetaRule::PolakRibierePlus => {
                let moved = orth_project(&next.basis, &state.rgrad);
                (next.rgrad.dot(&(&next.rgrad - moved)) / prev_sq).max(0.0)
            }
        };
        dir = if beta == 0.0 {
            -&next.rgrad
        } else {
            orth_project(&next.basis, &dir) * beta - &next.rgrad
        };
        state = next;
    };
    Ok(Trace {
        records,
        termination,
        delta: opts.delta,
        cost_evals: counters.cost_evals,
        projections: counters.projections,
        failure: None,
    })
}

impl Trace {
    /// Trace of a run whose starting point could not be projected.
    pub fn from_initial_failure(err: Error, opts: &SolverOptions) -> Self {
        failed_trace(err, opts)
    }
}

#[cfg(test)]
mod tests;

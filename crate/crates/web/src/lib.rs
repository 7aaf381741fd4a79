//! Browser bindings: a planar curve cloud with interactive projection,
//! a descent run toward a clicked target and the weight profile.

use std::sync::Arc;

use nalgebra::DVector;
use wasm_bindgen::prelude::*;

use mmls_ro::geometry::{GeometryConfig, TangentBasis};
use mmls_ro::optimize::{conjugate_gradient, gradient_descent, Objective, Problem, SolverOptions};
use mmls_ro::point_cloud::{add_noise, estimate_fill_distance, sample_manifold, ManifoldKind, NoiseTarget, SampleSet};
use mmls_ro::weights::{theta, WeightSpec};

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Samples a closed or open planar curve.
fn curve_cloud(kind: &str, n: usize, seed: u64) -> Result<SampleSet, JsError> {
    let circle = sample_manifold(&ManifoldKind::Sphere { ambient: 2 }, n, seed).map_err(js_err)?;
    match kind {
        "circle" => Ok(circle),
        "wave" => {
            // random abscissae from the circle's angles, then a sine graph
            let pts: Vec<Vec<f64>> = circle
                .points()
                .map(|p| {
                    let x = p[1].atan2(p[0]) / std::f64::consts::PI;
                    vec![x, 0.4 * (3.0 * std::f64::consts::PI * x).sin()]
                })
                .collect();
            SampleSet::new(&pts, None, 1).map_err(js_err)
        }
        other => Err(JsError::new(&format!("unknown curve {other:?}"))),
    }
}

struct SquaredDistance {
    target: DVector<f64>,
}

impl Objective for SquaredDistance {
    fn cost(&self, x: &[f64]) -> f64 {
        (DVector::from_column_slice(x) - &self.target).norm_squared()
    }

    fn euclid_grad(&self, x: &[f64]) -> DVector<f64> {
        (DVector::from_column_slice(x) - &self.target) * 2.0
    }
}

#[wasm_bindgen]
pub struct Demo {
    set: Arc<SampleSet>,
    geometry: GeometryConfig,
}

#[wasm_bindgen]
impl Demo {
    /// `kind` is "circle" or "wave"; `noise` is a variance added to the
    /// coordinates.
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, n: usize, noise: f64, degree: usize, seed: u64) -> Result<Demo, JsError> {
        let clean = curve_cloud(kind, n, seed)?;
        let set = add_noise(&clean, noise, seed.wrapping_add(1), NoiseTarget::Points).map_err(js_err)?;
        let h = estimate_fill_distance(&set).map_err(js_err)?.h_est;
        let weight = WeightSpec::with_fill_distance(h).map_err(js_err)?;
        Ok(Demo {
            set: Arc::new(set),
            geometry: GeometryConfig::new(degree, weight),
        })
    }

    /// Sample coordinates as `[x0, y0, x1, y1, ...]`.
    pub fn points(&self) -> Vec<f64> {
        self.set.coords().to_vec()
    }

    pub fn fill_distance(&self) -> f64 {
        self.geometry.weight.h
    }

    pub fn support_radius(&self) -> f64 {
        self.geometry.weight.support_radius()
    }

    /// `[px, py, tx, ty, support_count, frame_iterations]`: the projection
    /// of `(x, y)` and a unit tangent there.
    pub fn project(&self, x: f64, y: f64) -> Result<Vec<f64>, JsError> {
        let p = self.geometry.project(&self.set, &[x, y]).map_err(js_err)?;
        let tangent = TangentBasis::from_projection(&p).map_err(js_err)?.orthonormal();
        Ok(vec![
            p.point[0],
            p.point[1],
            tangent[(0, 0)],
            tangent[(1, 0)],
            p.support_count as f64,
            p.frame.iterations as f64,
        ])
    }

    /// Minimizes the squared distance to `(tx, ty)` along the curve from the
    /// projection of `(x, y)`. Returns iterates as `[x0, y0, x1, y1, ...]`;
    /// `solver` is "gd" or "cg".
    pub fn descend(&self, x: f64, y: f64, tx: f64, ty: f64, solver: &str, max_iters: usize) -> Result<Vec<f64>, JsError> {
        let objective = Arc::new(SquaredDistance {
            target: DVector::from_vec(vec![tx, ty]),
        });
        let problem = Problem::explicit(self.set.clone(), objective, self.geometry);
        let opts = SolverOptions {
            max_iters,
            grad_tol: 1e-4,
            ..SolverOptions::default()
        };
        let trace = match solver {
            "gd" => gradient_descent(&problem, &[x, y], &opts),
            "cg" => conjugate_gradient(&problem, &[x, y], &opts),
            other => return Err(JsError::new(&format!("unknown solver {other:?}"))),
        }
        .map_err(js_err)?;
        Ok(trace.records.iter().flat_map(|r| r.point.iter().copied()).collect())
    }
}

/// Weight profile `θ(t)` at `samples` evenly spaced `t` in `[0, 1.25 k h]`
/// with `h = 1`.
#[wasm_bindgen]
pub fn weight_profile(k: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    let spec = WeightSpec::new(k, 1.0).map_err(js_err)?;
    let end = 1.25 * spec.support_radius();
    let last = samples.max(2) - 1;
    (0..=last)
        .map(|i| theta(&spec, end * i as f64 / last as f64).map_err(js_err))
        .collect()
}

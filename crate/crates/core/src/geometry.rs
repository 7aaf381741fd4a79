//! Approximate Riemannian components built from MMLS: tangent basis,
//! orthogonal projection, gradients, retraction and vector transport.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmls::{mmls_project, poly_jacobian_origin, FrameConfig, Projection};
use crate::point_cloud::SampleSet;
use crate::weights::WeightSpec;

const RANK_TOL: f64 = 1e-10;
const GRAM_RIDGE: f64 = 1e-14;

/// Columns of `Dg(0)`, spanning the approximate tangent space, with a
/// factorized Gram matrix. The columns are not orthonormalized.
#[derive(Debug, Clone)]
pub struct TangentBasis {
    basis: DMatrix<f64>,
    gram: Cholesky<f64, Dyn>,
}

impl TangentBasis {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let d = basis.ncols();
        if d == 0 || basis.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let sv = basis.singular_values();
        if !(sv.min() > RANK_TOL * sv.max()) {
            return Err(Error::RankDeficient { intrinsic: d });
        }
        let g = basis.tr_mul(&basis);
        let gram = match Cholesky::new(g.clone()) {
            Some(c) => c,
            None => {
                let ridge = GRAM_RIDGE * g.trace() / d as f64;
                let mut g = g;
                for j in 0..d {
                    g[(j, j)] += ridge;
                }
                Cholesky::new(g).ok_or(Error::SingularGram)?
            }
        };
        Ok(Self { basis, gram })
    }

    /// Tangent basis read off a projection's polynomial.
    pub fn from_projection(p: &Projection) -> Result<Self> {
        Self::new(poly_jacobian_origin(&p.poly, &p.frame)?)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `B G^{-1} y` for `y` in `R^d`.
    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.basis * self.gram.solve(y)
    }

    /// `B G^{-1} B^T`, dense. Diagnostics only.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.gram.solve(&self.basis.transpose())
    }

    /// Orthonormal basis of the same span. Diagnostics only.
    pub fn orthonormal(&self) -> DMatrix<f64> {
        self.basis.clone().qr().q()
    }
}

/// Settings shared by the retraction, the transport and the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub degree: usize,
    pub weight: WeightSpec,
    pub frame: FrameConfig,
    /// Longest tangent step the optimizer may try.
    pub step_guard: f64,
}

impl GeometryConfig {
    /// Step guard defaults to the weight support radius `k h`.
    pub fn new(degree: usize, weight: WeightSpec) -> Self {
        Self {
            degree,
            weight,
            frame: FrameConfig::default(),
            step_guard: weight.support_radius(),
        }
    }

    pub fn with_step_guard(mut self, q: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!("step guard must be positive, got {q}")));
        }
        self.step_guard = q;
        Ok(self)
    }

    pub fn project(&self, set: &SampleSet, r: &[f64]) -> Result<Projection> {
        mmls_project(set, r, self.degree, &self.weight, &self.frame)
    }
}

/// `B G^{-1} B^T v`.
pub fn orth_project(basis: &TangentBasis, v: &DVector<f64>) -> DVector<f64> {
    basis.lift(&basis.basis.tr_mul(v))
}

/// Riemannian gradient from a known Euclidean gradient.
pub fn approx_riemannian_grad(basis: &TangentBasis, euclid_grad: &DVector<f64>) -> DVector<f64> {
    orth_project(basis, euclid_grad)
}

/// Riemannian gradient from the intrinsic gradient of the local cost fit.
pub fn approx_riemannian_grad_sampled(basis: &TangentBasis, intrinsic_grad: &DVector<f64>) -> DVector<f64> {
    basis.lift(intrinsic_grad)
}

/// `P(r + xi)`, with the full projection kept for reuse.
pub fn retract_projection(set: &SampleSet, r: &[f64], xi: &[f64], cfg: &GeometryConfig) -> Result<Projection> {
    if r.len() != xi.len() {
        return Err(Error::RaggedInput {
            row: 0,
            len: xi.len(),
            expected: r.len(),
        });
    }
    let moved: Vec<f64> = r.iter().zip(xi).map(|(a, b)| a + b).collect();
    cfg.project(set, &moved)
}

/// `P(r + xi)`. The step guard is left to the caller.
pub fn retract(set: &SampleSet, r: &[f64], xi: &[f64], cfg: &GeometryConfig) -> Result<DVector<f64>> {
    retract_projection(set, r, xi, cfg).map(|p| p.point)
}

/// Retracts along `eta` and projects `xi` onto the tangent space at the new
/// point. Returns `(new_point, transported)`.
pub fn vector_transport(
    set: &SampleSet,
    r: &[f64],
    eta: &[f64],
    xi: &[f64],
    cfg: &GeometryConfig,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let p = retract_projection(set, r, eta, cfg)?;
    let basis = TangentBasis::from_projection(&p)?;
    let moved = orth_project(&basis, &DVector::from_column_slice(xi));
    Ok((p.point, moved))
}

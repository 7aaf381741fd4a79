//! Step 2 of the MMLS projection: weighted polynomial least squares over the
//! local frame.
//!
//! The design matrix is built in coordinates scaled by the support radius and
//! with unit-norm columns, solved by Householder QR, and the coefficients are
//! mapped back to physical frame coordinates. A rank-deficient QR falls back
//! to ridge-regularized normal equations.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::frame::{weighted_support, LocalFrame};
use super::monomial::MonomialBasis;
use crate::error::{Error, Result};
use crate::point_cloud::SampleSet;
use crate::weights::WeightSpec;

const RANK_TOL: f64 = 1e-12;
const RIDGE: f64 = 1e-12;

/// Polynomial map `R^d -> R^D` in the frame coordinates `x = E^T (p - q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPoly {
    pub degree: usize,
    pub dim: usize,
    /// `M x D`; row `j` is the coefficient vector of monomial `j`
    /// (graded-lex order, constant first).
    pub coeffs: DMatrix<f64>,
}

impl VectorPoly {
    pub fn num_coeffs(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        let phi = DVector::from_vec(MonomialBasis::new(self.dim, self.degree).eval(x));
        self.coeffs.tr_mul(&phi)
    }

    /// `g(0)`, the constant coefficient row.
    pub fn value_at_origin(&self) -> DVector<f64> {
        self.coeffs.row(0).transpose()
    }
}

enum Solver {
    Qr(faer::linalg::solvers::Qr<f64>),
    Ridge { chol: Cholesky<f64, Dyn>, design: DMatrix<f64> },
}

/// Factorized weighted design over one frame; solves for any number of
/// right-hand sides.
pub(crate) struct LocalDesign {
    pub(crate) basis: MonomialBasis,
    pub(crate) indices: Vec<usize>,
    sqrt_w: Vec<f64>,
    // physical coefficient = scaled coefficient * unscale[j]
    unscale: Vec<f64>,
    solver: Solver,
}

impl LocalDesign {
    pub(crate) fn new(set: &SampleSet, frame: &LocalFrame, degree: usize, spec: &WeightSpec) -> Result<Self> {
        let d = frame.intrinsic_dim();
        let basis = MonomialBasis::new(d, degree);
        let m = basis.len();
        let (indices, w) = weighted_support(set, frame.origin.as_slice(), spec)?;
        if indices.len() < m {
            return Err(Error::InsufficientSupport {
                found: indices.len(),
                required: m,
            });
        }
        let scale = spec.support_radius();
        let k = indices.len();
        let sqrt_w: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
        let mut design = DMatrix::zeros(k, m);
        let mut x = vec![0.0; d];
        let mut phi = vec![0.0; m];
        for (row, (&i, &sw)) in indices.iter().zip(&sqrt_w).enumerate() {
            frame.local_coords_into(set.point(i), &mut x);
            x.iter_mut().for_each(|v| *v /= scale);
            basis.eval_into(&x, &mut phi);
            for (c, v) in phi.iter().enumerate() {
                design[(row, c)] = sw * v;
            }
        }
        let mut unscale = Vec::with_capacity(m);
        for j in 0..m {
            let norm = design.column(j).norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::IllConditioned);
            }
            design.column_mut(j).scale_mut(1.0 / norm);
            unscale.push(1.0 / (norm * scale.powi(basis.total_degree(j) as i32)));
        }
        // blocked Householder QR; nalgebra's unblocked one dominates the runtime at high degree
        let qr = Mat::from_fn(k, m, |i, j| design[(i, j)]).qr();
        let r = qr.thin_R();
        let diag: Vec<f64> = (0..m).map(|j| r[(j, j)].abs()).collect();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let solver = if lo > RANK_TOL * hi {
            Solver::Qr(qr)
        } else {
            let mut gram = design.tr_mul(&design);
            let ridge = RIDGE * gram.trace() / m as f64;
            for j in 0..m {
                gram[(j, j)] += ridge;
            }
            let chol = Cholesky::new(gram).ok_or(Error::IllConditioned)?;
            Solver::Ridge { chol, design }
        };
        Ok(Self {
            basis,
            indices,
            sqrt_w,
            unscale,
            solver,
        })
    }

    pub(crate) fn support_count(&self) -> usize {
        self.indices.len()
    }

    /// Weighted least-squares coefficients (`M x c`, physical units) for the
    /// right-hand side rows `rhs(i, :)` given at the support samples.
    pub(crate) fn solve(&self, rhs: DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut b = rhs;
        for (mut row, sw) in b.row_iter_mut().zip(&self.sqrt_w) {
            row *= *sw;
        }
        let m = self.basis.len();
        let mut coeffs = match &self.solver {
            Solver::Qr(qr) => {
                let x = qr.solve_lstsq(Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)]));
                DMatrix::from_fn(m, b.ncols(), |i, j| x[(i, j)])
            }
            Solver::Ridge { chol, design } => chol.solve(&design.tr_mul(&b)),
        };
        for (mut row, s) in coeffs.row_iter_mut().zip(&self.unscale) {
            row *= *s;
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::IllConditioned);
        }
        Ok(coeffs)
    }

    /// Solves the vector-valued fit `g(x_i) ~ r_i`.
    pub(crate) fn fit_points(&self, set: &SampleSet, frame: &LocalFrame) -> Result<VectorPoly> {
        let dim = set.ambient_dim();
        // fit offsets from the origin to avoid cancellation in the constant row
        let rhs = DMatrix::from_fn(self.indices.len(), dim, |row, c| {
            set.point(self.indices[row])[c] - frame.origin[c]
        });
        let mut coeffs = self.solve(rhs)?;
        for c in 0..dim {
            coeffs[(0, c)] += frame.origin[c];
        }
        Ok(VectorPoly {
            degree: self.basis.degree(),
            dim: self.basis.dim(),
            coeffs,
        })
    }

    /// Solves the scalar fit `p(x_i) ~ f_i`.
    pub(crate) fn fit_values(&self, values: &[f64]) -> Result<DVector<f64>> {
        let rhs = DMatrix::from_fn(self.indices.len(), 1, |row, _| values[self.indices[row]]);
        Ok(self.solve(rhs)?.column(0).into_owned())
    }
}

/// Weighted least-squares fit of a degree-`degree` map from the frame
/// coordinates to the samples.
pub fn fit_vector_poly(set: &SampleSet, frame: &LocalFrame, degree: usize, spec: &WeightSpec) -> Result<VectorPoly> {
    LocalDesign::new(set, frame, degree, spec)?.fit_points(set, frame)
}

//! Cost functions of the benchmark problems. Matrix arguments are
//! column-stacked vectors.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::optimize::Objective;

/// Seed of the 200 x 3 Gaussian data matrix of the PCA problem.
pub const PCA_MATRIX_SEED: u64 = 20_230_517;

pub fn sphere_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.64, 0.9, 0.71, 0.9, 0.82, 0.33, 0.71, 0.33, 0.7])
}

pub fn stiefel3_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.23, 0.35, 0.39, 0.35, 1.33, 1.06, 0.39, 1.06, 1.27])
}

pub fn stiefel4_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            2.77, 2.4, 1.49, 2.15, 2.4, 2.66, 1.18, 2.12, 1.49, 1.18, 1.51, 1.92, 2.15, 2.12, 1.92, 3.13,
        ],
    )
}

pub fn pca_matrix() -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(PCA_MATRIX_SEED);
    DMatrix::from_fn(200, 3, |_, _| StandardNormal.sample(&mut rng))
}

pub fn low_rank_target() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[-0.13, -0.24, -0.49, 0.11])
}

fn reshape(x: &[f64], rows: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, x.len() / rows, x)
}

fn flatten(m: DMatrix<f64>) -> DVector<f64> {
    let len = m.len();
    DVector::from_vec(m.reshape_generic(nalgebra::Dyn(len), nalgebra::Const::<1>).data.into())
}

/// `sin(2 pi x1) + 4 x2^2 + x1`; the remaining coordinates are ignored.
#[derive(Debug, Clone, Copy)]
pub struct PrelimCost;

impl Objective for PrelimCost {
    fn cost(&self, x: &[f64]) -> f64 {
        (2.0 * PI * x[0]).sin() + 4.0 * x[1] * x[1] + x[0]
    }

    fn euclid_grad(&self, x: &[f64]) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        g[0] = 2.0 * PI * (2.0 * PI * x[0]).cos() + 1.0;
        g[1] = 8.0 * x[1];
        g
    }
}

/// `-Tr(X^T A X)` for `X` with `A.nrows()` rows; a Rayleigh quotient when
/// `X` is a vector.
#[derive(Debug, Clone)]
pub struct TraceCost {
    pub a: DMatrix<f64>,
}

impl Objective for TraceCost {
    fn cost(&self, x: &[f64]) -> f64 {
        let x = reshape(x, self.a.nrows());
        -(x.tr_mul(&(&self.a * &x))).trace()
    }

    fn euclid_grad(&self, x: &[f64]) -> DVector<f64> {
        let x = reshape(x, self.a.nrows());
        flatten(&self.a * x * -2.0)
    }
}

/// `|A - A X X^T|_F^2`, evaluated through `C = A^T A`.
#[derive(Debug, Clone)]
pub struct PcaCost {
    pub gram: DMatrix<f64>,
}

impl PcaCost {
    pub fn new(a: &DMatrix<f64>) -> Self {
        Self { gram: a.tr_mul(a) }
    }
}

impl Objective for PcaCost {
    fn cost(&self, x: &[f64]) -> f64 {
        let n = self.gram.nrows();
        let x = reshape(x, n);
        let resid = DMatrix::identity(n, n) - &x * x.transpose();
        (resid.transpose() * &self.gram * resid).trace()
    }

    fn euclid_grad(&self, x: &[f64]) -> DVector<f64> {
        let x = reshape(x, self.gram.nrows());
        let cx = &self.gram * &x;
        let g = &cx * -4.0 + (&x * x.tr_mul(&cx) + &self.gram * &x * x.tr_mul(&x)) * 2.0;
        flatten(g)
    }
}

/// `|X - B|_F^2`.
#[derive(Debug, Clone)]
pub struct DistanceCost {
    pub target: DMatrix<f64>,
}

impl Objective for DistanceCost {
    fn cost(&self, x: &[f64]) -> f64 {
        (reshape(x, self.target.nrows()) - &self.target).norm_squared()
    }

    fn euclid_grad(&self, x: &[f64]) -> DVector<f64> {
        flatten((reshape(x, self.target.nrows()) - &self.target) * 2.0)
    }
}

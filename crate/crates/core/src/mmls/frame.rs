//! Step 1 of the MMLS projection: a local affine frame `(q, H)` fitted to the
//! samples around the query point.
//!
//! The frame is the fixed point of an alternating iteration:
//! `H` is spanned by the top-`d` eigenvectors of the weighted second-moment
//! matrix `sum_i w_i (r_i - q)(r_i - q)^T`, and `q = q_w + E E^T (r - q_w)`
//! with `q_w` the weighted mean. The update keeps `r - q` orthogonal to `H`
//! at every step.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point_cloud::SampleSet;
use crate::weights::WeightSpec;

/// Iteration controls for the frame solve and the support expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    /// Converged once `|q_new - q| <= tol * max(h, |r|)`.
    pub tol: f64,
    pub max_iters: usize,
    /// Region of interest is `roi_factor * k * h` unless `roi_radius` is set.
    pub roi_factor: f64,
    pub roi_radius: Option<f64>,
    /// Support expansion: `h` grows by this factor when too few samples
    /// carry weight.
    pub expansion_factor: f64,
    pub max_expansions: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 100,
            roi_factor: 3.0,
            roi_radius: None,
            expansion_factor: 1.3,
            max_expansions: 3,
        }
    }
}

impl FrameConfig {
    pub(crate) fn roi(&self, spec: &WeightSpec) -> f64 {
        self.roi_radius.unwrap_or(self.roi_factor * spec.support_radius())
    }
}

/// Local coordinate system: origin `q` and an orthonormal basis of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFrame {
    pub origin: DVector<f64>,
    /// `D x d`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// The query point the frame was solved for.
    pub anchor: DVector<f64>,
    pub iterations: usize,
}

impl LocalFrame {
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `E^T (p - q)`.
    pub fn local_coords(&self, p: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.intrinsic_dim());
        self.local_coords_into(p, out.as_mut_slice());
        out
    }

    pub(crate) fn local_coords_into(&self, p: &[f64], out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            let col = self.basis.column(k);
            *slot = p
                .iter()
                .zip(self.origin.iter())
                .zip(col.iter())
                .map(|((pi, qi), e)| (pi - qi) * e)
                .sum();
        }
    }
}

/// Positive-weight samples around `center`.
pub(crate) fn weighted_support(set: &SampleSet, center: &[f64], spec: &WeightSpec) -> Result<(Vec<usize>, Vec<f64>)> {
    let nbrs = set.neighbors_within(center, spec.support_radius())?;
    let mut idx = Vec::with_capacity(nbrs.len());
    let mut w = Vec::with_capacity(nbrs.len());
    for nb in nbrs {
        let wi = spec.eval(nb.distance);
        if wi > 0.0 {
            idx.push(nb.index);
            w.push(wi);
        }
    }
    Ok((idx, w))
}

// Top-d principal directions of sum_i w_i (r_i - q)(r_i - q)^T.
fn principal_directions(set: &SampleSet, idx: &[usize], w: &[f64], q: &DVector<f64>, d: usize) -> Result<DMatrix<f64>> {
    let dim = set.ambient_dim();
    let wsum: f64 = w.iter().sum();
    let k = idx.len();
    let mut a = DMatrix::zeros(k, dim);
    for (row, (&i, &wi)) in idx.iter().zip(w).enumerate() {
        let s = (wi / wsum).sqrt();
        for (c, (&p, &qc)) in set.point(i).iter().zip(q.iter()).enumerate() {
            a[(row, c)] = s * (p - qc);
        }
    }
    let (values, vectors) = if k >= dim {
        let eig = SymmetricEigen::new(a.tr_mul(&a));
        (eig.eigenvalues, eig.eigenvectors)
    } else {
        // small support in a large ambient space: diagonalize the k x k Gram
        // matrix and map its eigenvectors back through A^T
        let eig = SymmetricEigen::new(&a * a.transpose());
        let mut vecs = a.tr_mul(&eig.eigenvectors);
        for (j, lambda) in eig.eigenvalues.iter().enumerate() {
            if *lambda > 0.0 {
                vecs.column_mut(j).scale_mut(1.0 / lambda.sqrt());
            }
        }
        (eig.eigenvalues, vecs)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let top = values[order[0]];
    let last = values[order[d - 1]];
    if !(top > 0.0) || last <= 1e-12 * top {
        return Err(Error::RankDeficient { intrinsic: d });
    }
    let mut e = DMatrix::zeros(dim, d);
    for (j, &src) in order[..d].iter().enumerate() {
        e.set_column(j, &vectors.column(src));
    }
    // re-orthonormalize; the Gram route loses orthogonality at roundoff level
    let qr = e.qr();
    let r = qr.r();
    let mut e = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            e.column_mut(j).neg_mut();
        }
    }
    Ok(e)
}

/// Frame solve at a fixed weight scale (no support expansion).
pub(crate) fn frame_at(set: &SampleSet, r: &[f64], spec: &WeightSpec, cfg: &FrameConfig) -> Result<LocalFrame> {
    let d = set.intrinsic_dim();
    let start = set.nearest(r)?;
    let anchor = DVector::from_column_slice(r);
    let mut q = DVector::from_column_slice(set.point(start.index));
    let roi = cfg.roi(spec);
    let tol = cfg.tol * spec.h.max(anchor.norm());
    for it in 1..=cfg.max_iters {
        let (idx, w) = weighted_support(set, q.as_slice(), spec)?;
        if idx.len() < d + 1 {
            return Err(Error::InsufficientSupport {
                found: idx.len(),
                required: d + 1,
            });
        }
        let wsum: f64 = w.iter().sum();
        let mut mean = DVector::zeros(set.ambient_dim());
        for (&i, &wi) in idx.iter().zip(&w) {
            for (m, p) in mean.iter_mut().zip(set.point(i)) {
                *m += wi * p;
            }
        }
        mean /= wsum;
        let basis = principal_directions(set, &idx, &w, &q, d)?;
        let offset = &anchor - &mean;
        let next = &mean + &basis * basis.tr_mul(&offset);
        if (&next - &anchor).norm() > roi {
            return Err(Error::NoConvergence { iterations: it });
        }
        let step = (&next - &q).norm();
        q = next;
        if step <= tol {
            return Ok(LocalFrame {
                origin: q,
                basis,
                anchor,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iters,
    })
}

/// Solves for the local frame of `r`, expanding the weight support when fewer
/// than `d + 1` samples carry weight.
pub fn local_frame(set: &SampleSet, r: &[f64], spec: &WeightSpec, cfg: &FrameConfig) -> Result<LocalFrame> {
    let mut scale = 1.0;
    for _ in 0..=cfg.max_expansions {
        match frame_at(set, r, &spec.scaled(scale), cfg) {
            Err(Error::InsufficientSupport { .. }) => scale *= cfg.expansion_factor,
            other => return other,
        }
    }
    Err(Error::EmptySupport)
}

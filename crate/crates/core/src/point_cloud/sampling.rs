use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SampleSet;
use crate::error::{Error, Result};

/// Benchmark manifolds with analytic samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    /// `x3 = sin(2 pi (x1^2 + x2^2))` over `[-1, 1]^2`, remaining coordinates
    /// fixed at 1.
    PrelimSurface { ambient: usize },
    /// Unit sphere in `R^ambient`.
    Sphere { ambient: usize },
    /// Matrices with orthonormal columns, column-stacked.
    Stiefel { rows: usize, cols: usize },
    /// Matrices of fixed rank, column-stacked.
    FixedRank { rows: usize, cols: usize, rank: usize },
}

impl ManifoldKind {
    pub fn prelim() -> Self {
        ManifoldKind::PrelimSurface { ambient: 100 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            ManifoldKind::PrelimSurface { ambient } if ambient < 3 => {
                bad(format!("prelim surface needs ambient dimension >= 3, got {ambient}"))
            }
            ManifoldKind::Sphere { ambient } if ambient < 2 => {
                bad(format!("sphere needs ambient dimension >= 2, got {ambient}"))
            }
            ManifoldKind::Stiefel { rows, cols } if cols == 0 || cols > rows || rows * cols - cols * (cols + 1) / 2 == 0 => {
                bad(format!("invalid Stiefel shape {rows}x{cols}"))
            }
            ManifoldKind::FixedRank { rows, cols, rank } if rank == 0 || rank >= rows.min(cols) => {
                bad(format!("invalid fixed-rank shape {rows}x{cols} rank {rank}"))
            }
            _ => Ok(()),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            ManifoldKind::PrelimSurface { ambient } | ManifoldKind::Sphere { ambient } => ambient,
            ManifoldKind::Stiefel { rows, cols } | ManifoldKind::FixedRank { rows, cols, .. } => rows * cols,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match *self {
            ManifoldKind::PrelimSurface { .. } => 2,
            ManifoldKind::Sphere { ambient } => ambient - 1,
            ManifoldKind::Stiefel { rows, cols } => rows * cols - cols * (cols + 1) / 2,
            ManifoldKind::FixedRank { rows, cols, rank } => (rows + cols - rank) * rank,
        }
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

// Q factor of a Gaussian matrix with the signs fixed so that diag(R) > 0.
fn orthonormal_columns(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, rows, cols).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Draws `n` samples of a benchmark manifold. Deterministic in `seed`.
pub fn sample_manifold(kind: &ManifoldKind, n: usize, seed: u64) -> Result<SampleSet> {
    kind.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = kind.ambient_dim();
    let mut coords = Vec::with_capacity(n * dim);
    match *kind {
        ManifoldKind::PrelimSurface { ambient } => {
            for _ in 0..n {
                let x1: f64 = rng.random_range(-1.0..1.0);
                let x2: f64 = rng.random_range(-1.0..1.0);
                let x3 = (2.0 * std::f64::consts::PI * (x1 * x1 + x2 * x2)).sin();
                coords.extend_from_slice(&[x1, x2, x3]);
                coords.extend(std::iter::repeat(1.0).take(ambient - 3));
            }
        }
        ManifoldKind::Sphere { ambient } => {
            let mut v = vec![0.0; ambient];
            for _ in 0..n {
                loop {
                    v.iter_mut().for_each(|x| *x = StandardNormal.sample(&mut rng));
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 1e-8 {
                        coords.extend(v.iter().map(|x| x / norm));
                        break;
                    }
                }
            }
        }
        ManifoldKind::Stiefel { rows, cols } => {
            for _ in 0..n {
                // column-major storage is the column-stacked flattening
                coords.extend_from_slice(orthonormal_columns(&mut rng, rows, cols).as_slice());
            }
        }
        ManifoldKind::FixedRank { rows, cols, rank } => {
            for _ in 0..n {
                let u = orthonormal_columns(&mut rng, rows, rank);
                let v = orthonormal_columns(&mut rng, cols, rank);
                let s: Vec<f64> = (0..rank)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z.abs()
                    })
                    .collect();
                let mut us = u;
                for (j, sj) in s.iter().enumerate() {
                    us.column_mut(j).scale_mut(*sj);
                }
                let x = us * v.transpose();
                coords.extend_from_slice(x.as_slice());
            }
        }
    }
    let set = SampleSet::from_flat(coords, dim, None, kind.intrinsic_dim())?;
    Ok(match kind {
        ManifoldKind::PrelimSurface { .. } => set.with_noisy_coords(3),
        _ => set,
    })
}

/// What [`add_noise`] perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTarget {
    Points,
    Values,
    Both,
}

/// Returns a copy with independent `N(0, variance)` noise added to the
/// targeted coordinates and/or cost samples. Embedding coordinates that are
/// constant by construction (prelim surface beyond `x3`) are left untouched.
pub fn add_noise(set: &SampleSet, variance: f64, seed: u64, target: NoiseTarget) -> Result<SampleSet> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!("noise variance must be nonnegative, got {variance}")));
    }
    let noisy_values = matches!(target, NoiseTarget::Values | NoiseTarget::Both);
    if noisy_values && set.values().is_none() {
        return Err(Error::MissingValues);
    }
    if variance == 0.0 {
        return Ok(set.clone());
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = set.ambient_dim();
    let mut coords = set.coords().to_vec();
    if matches!(target, NoiseTarget::Points | NoiseTarget::Both) {
        let noisy = set.noisy_coords();
        for row in coords.chunks_exact_mut(dim) {
            for x in &mut row[..noisy] {
                *x += normal.sample(&mut rng);
            }
        }
    }
    let values = set.values().map(|v| {
        let mut v = v.to_vec();
        if noisy_values {
            v.iter_mut().for_each(|x| *x += normal.sample(&mut rng));
        }
        v
    });
    Ok(SampleSet::from_flat(coords, dim, values, set.intrinsic_dim())?.with_noisy_coords(set.noisy_coords()))
}

//! Manifold samples, exact neighbor queries, density estimates, benchmark
//! samplers and the point-cloud CSV format.

mod csv;
mod density;
mod kdtree;
mod sampling;

pub use self::csv::{read_cloud_csv, read_points_csv, write_cloud_csv};
pub use self::density::{estimate_fill_distance, DensityEstimate};
pub use self::kdtree::Neighbor;
pub use self::sampling::{add_noise, sample_manifold, ManifoldKind, NoiseTarget};

#[allow(unused_imports)]
pub(crate) use self::kdtree::distance;
use self::kdtree::KdTree;
use crate::error::{Error, Result};

/// An immutable point cloud in `R^D` sampling a `d`-dimensional manifold,
/// with optional cost samples and an exact spatial index.
#[derive(Debug, Clone)]
pub struct SampleSet {
    coords: Vec<f64>,
    values: Option<Vec<f64>>,
    ambient_dim: usize,
    intrinsic_dim: usize,
    // number of leading coordinates that carry noise (the rest are constant
    // embedding coordinates, e.g. the padded prelim surface)
    noisy_coords: usize,
    tree: KdTree,
}

impl SampleSet {
    /// Builds a set from row vectors. Point order is preserved.
    pub fn new(points: &[Vec<f64>], values: Option<Vec<f64>>, intrinsic_dim: usize) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyInput)?;
        let dim = first.len();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (row, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::RaggedInput {
                    row,
                    len: p.len(),
                    expected: dim,
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(coords, dim, values, intrinsic_dim)
    }

    /// Builds a set from a row-major buffer of `n * dim` coordinates.
    pub fn from_flat(coords: Vec<f64>, dim: usize, values: Option<Vec<f64>>, intrinsic_dim: usize) -> Result<Self> {
        if dim == 0 || coords.is_empty() {
            return Err(Error::EmptyInput);
        }
        if coords.len() % dim != 0 {
            return Err(Error::RaggedInput {
                row: coords.len() / dim,
                len: coords.len() % dim,
                expected: dim,
            });
        }
        if intrinsic_dim == 0 || intrinsic_dim >= dim {
            return Err(Error::InvalidDimension {
                intrinsic: intrinsic_dim,
                ambient: dim,
            });
        }
        let n = coords.len() / dim;
        if let Some(v) = &values {
            if v.len() != n {
                return Err(Error::ValuesLength { got: v.len(), expected: n });
            }
        }
        let tree = KdTree::build(&coords, dim);
        Ok(Self {
            coords,
            values,
            ambient_dim: dim,
            intrinsic_dim,
            noisy_coords: dim,
            tree,
        })
    }

    pub(crate) fn with_noisy_coords(mut self, count: usize) -> Self {
        self.noisy_coords = count.min(self.ambient_dim);
        self
    }

    pub(crate) fn noisy_coords(&self) -> usize {
        self.noisy_coords
    }

    /// Replaces the cost samples, keeping points and index.
    pub fn with_values(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::ValuesLength {
                got: values.len(),
                expected: self.len(),
            });
        }
        self.values = Some(values);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.ambient_dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.ambient_dim)
    }

    /// Row-major coordinate buffer.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ambient_dim {
            return Err(Error::RaggedInput {
                row: 0,
                len: x.len(),
                expected: self.ambient_dim,
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Exactly the samples with `|r_i - x| < radius`, sorted ascending by
    /// distance, ties broken by index.
    pub fn neighbors_within(&self, x: &[f64], radius: f64) -> Result<Vec<Neighbor>> {
        self.check_query(x)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        Ok(self.tree.within(&self.coords, x, radius))
    }

    /// The `k` nearest samples, sorted by (distance, index).
    pub fn k_nearest(&self, x: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        self.check_query(x)?;
        Ok(self.tree.nearest(&self.coords, x, k))
    }

    /// Nearest sample; ties go to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> Result<Neighbor> {
        self.check_query(x)?;
        Ok(self.tree.nearest(&self.coords, x, 1)[0])
    }
}

/// Builds a [`SampleSet`] from row vectors.
pub fn build_cloud(points: &[Vec<f64>], values: Option<Vec<f64>>, intrinsic_dim: usize) -> Result<SampleSet> {
    SampleSet::new(points, values, intrinsic_dim)
}

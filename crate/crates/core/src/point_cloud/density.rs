use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SampleSet;
use crate::error::{Error, Result};

/// Largest cloud for which the separation radius is computed over all points.
pub const EXACT_SEPARATION_LIMIT: usize = 5000;
const SEPARATION_SUBSAMPLE_SEED: u64 = 0x5eed_de17a;

/// Sampling-density estimates of a cloud, in ambient length units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    /// Fill-distance proxy: twice the median distance to the `ceil(2d)`-th
    /// nearest neighbor.
    pub h_est: f64,
    /// Separation radius: half the smallest pairwise distance.
    pub delta_est: f64,
}

/// Estimates fill distance and separation radius.
///
/// Above [`EXACT_SEPARATION_LIMIT`] points the separation radius is taken over
/// the nearest-neighbor distances of a fixed-seed subsample of that many
/// points (each still searched against the full cloud), so it can only
/// overestimate the exact value.
pub fn estimate_fill_distance(set: &SampleSet) -> Result<DensityEstimate> {
    let n = set.len();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let k = (2 * set.intrinsic_dim()).min(n - 1);

    let mut kth: Vec<f64> = set
        .points()
        .map(|p| {
            // +1 skips the query point itself
            let nb = set.tree.nearest(&set.coords, p, k + 1);
            nb[k].distance
        })
        .collect();
    kth.sort_unstable_by(f64::total_cmp);
    let median = if kth.len() % 2 == 1 {
        kth[kth.len() / 2]
    } else {
        0.5 * (kth[kth.len() / 2 - 1] + kth[kth.len() / 2])
    };

    let nn_distance = |i: usize| set.tree.nearest(&set.coords, set.point(i), 2)[1].distance;
    let min_pair = if n <= EXACT_SEPARATION_LIMIT {
        (0..n).map(nn_distance).fold(f64::INFINITY, f64::min)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(SEPARATION_SUBSAMPLE_SEED);
        sample(&mut rng, n, EXACT_SEPARATION_LIMIT)
            .into_iter()
            .map(nn_distance)
            .fold(f64::INFINITY, f64::min)
    };

    Ok(DensityEstimate {
        h_est: 2.0 * median,
        delta_est: 0.5 * min_pair,
    })
}

//! Compactly supported weight family shared by every weighted least-squares
//! problem in the MMLS pipeline.
//!
//! `theta(t) = exp(-t^2 / (t - kh)^2)` on `[0, kh)` and zero beyond. The
//! function is `C^inf`, equals one at the origin and decays monotonically to
//! zero at the support radius `kh`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default support multiplier `k`.
pub const DEFAULT_K: f64 = 1.5;

/// Parameters of the weight: support multiplier `k` and fill distance `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub k: f64,
    pub h: f64,
}

impl WeightSpec {
    pub fn new(k: f64, h: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight k must be positive, got {k}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("fill distance h must be positive, got {h}")));
        }
        Ok(Self { k, h })
    }

    /// Weight with the default `k = 1.5`.
    pub fn with_fill_distance(h: f64) -> Result<Self> {
        Self::new(DEFAULT_K, h)
    }

    pub fn support_radius(&self) -> f64 {
        self.k * self.h
    }

    /// Same `k`, fill distance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            k: self.k,
            h: self.h * factor,
        }
    }

    /// Evaluates the weight for a distance `t >= 0`. Negative input is
    /// treated as zero distance; use [`theta`] for the checked version.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let support = self.support_radius();
        if t >= support {
            return 0.0;
        }
        let gap = t - support;
        let gap2 = gap * gap;
        // t -> kh: the exponent tends to -inf
        if gap2 < f64::EPSILON * t * t {
            return 0.0;
        }
        (-(t * t) / gap2).exp()
    }
}

/// Checked weight evaluation.
pub fn theta(spec: &WeightSpec, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidParameter(format!("weight argument must be nonnegative, got {t}")));
    }
    Ok(spec.eval(t))
}

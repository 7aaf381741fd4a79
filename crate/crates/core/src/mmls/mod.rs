//! Manifold moving-least-squares (MMLS) projection.
//!
//! Projection of a point `r` runs in two steps: [`local_frame`] fits an
//! affine coordinate system `(q, H)` to the nearby samples, then
//! [`fit_vector_poly`] fits a weighted degree-`m` polynomial `g: H -> R^D`
//! through the samples expressed in that frame. The projection is `g(0)` and
//! the approximate tangent space is the range of `Dg(0)`.

mod fit;
mod frame;
pub mod monomial;

use nalgebra::{DMatrix, DVector};

pub use self::fit::{fit_vector_poly, VectorPoly};
pub(crate) use self::fit::LocalDesign;
pub use self::frame::{local_frame, FrameConfig, LocalFrame};
pub use self::monomial::{monomial_basis, num_monomials, MonomialBasis};

use self::frame::frame_at;
use crate::error::{Error, Result};
use crate::func_approx::ScalarPoly;
use crate::point_cloud::SampleSet;
use crate::weights::WeightSpec;

/// Result of projecting one point.
#[derive(Debug, Clone)]
pub struct Projection {
    /// `g(0)`.
    pub point: DVector<f64>,
    pub frame: LocalFrame,
    pub poly: VectorPoly,
    /// Samples with positive weight in the polynomial fit.
    pub support_count: usize,
    /// Weight actually used, after any support expansion.
    pub weight: WeightSpec,
}

/// A projection together with the local cost fit over the same frame.
#[derive(Debug, Clone)]
pub(crate) struct LocalFit {
    pub projection: Projection,
    pub values: Option<ScalarPoly>,
}

pub(crate) fn project_local(
    set: &SampleSet,
    r: &[f64],
    degree: usize,
    spec: &WeightSpec,
    cfg: &FrameConfig,
    with_values: bool,
) -> Result<LocalFit> {
    if r.len() != set.ambient_dim() {
        return Err(Error::RaggedInput {
            row: 0,
            len: r.len(),
            expected: set.ambient_dim(),
        });
    }
    let values = if with_values {
        Some(set.values().ok_or(Error::MissingValues)?)
    } else {
        None
    };
    let mut scale = 1.0;
    let mut last = Error::EmptySupport;
    for _ in 0..=cfg.max_expansions {
        let weight = spec.scaled(scale);
        scale *= cfg.expansion_factor;
        let frame = match frame_at(set, r, &weight, cfg) {
            Ok(frame) => frame,
            Err(Error::InsufficientSupport { .. }) => {
                last = Error::EmptySupport;
                continue;
            }
            Err(e) => return Err(e),
        };
        let design = match LocalDesign::new(set, &frame, degree, &weight) {
            Ok(design) => design,
            Err(e @ Error::InsufficientSupport { .. }) => {
                last = e;
                continue;
            }
            Err(e) => return Err(e),
        };
        let poly = design.fit_points(set, &frame)?;
        let values = match values {
            Some(v) => Some(ScalarPoly {
                degree,
                dim: frame.intrinsic_dim(),
                coeffs: design.fit_values(v)?,
            }),
            None => None,
        };
        let projection = Projection {
            point: poly.value_at_origin(),
            support_count: design.support_count(),
            frame,
            poly,
            weight,
        };
        return Ok(LocalFit { projection, values });
    }
    Err(last)
}

/// Projects `r` onto the MMLS approximating manifold with degree-`degree`
/// polynomials. When fewer than `C(d+m, m)` samples carry weight, `h` is
/// expanded by `cfg.expansion_factor` up to `cfg.max_expansions` times.
pub fn mmls_project(set: &SampleSet, r: &[f64], degree: usize, spec: &WeightSpec, cfg: &FrameConfig) -> Result<Projection> {
    project_local(set, r, degree, spec, cfg, false).map(|fit| fit.projection)
}

/// Projects many points; runs in parallel with the `parallel` feature.
pub fn project_batch(
    set: &SampleSet,
    points: &[Vec<f64>],
    degree: usize,
    spec: &WeightSpec,
    cfg: &FrameConfig,
) -> Vec<Result<Projection>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points
            .par_iter()
            .map(|p| mmls_project(set, p, degree, spec, cfg))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points.iter().map(|p| mmls_project(set, p, degree, spec, cfg)).collect()
    }
}

/// `Dg(0)` as a `D x d` matrix: column `k` holds the coefficients of the
/// linear monomial `x_k`. The fit is carried out in ambient coordinates, so
/// the columns are already ambient vectors.
pub fn poly_jacobian_origin(poly: &VectorPoly, frame: &LocalFrame) -> Result<DMatrix<f64>> {
    if poly.degree == 0 {
        return Err(Error::DegreeTooLow);
    }
    debug_assert_eq!(poly.dim, frame.intrinsic_dim());
    Ok(poly.coeffs.rows(1, poly.dim).transpose())
}

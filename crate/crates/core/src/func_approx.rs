//! Zeroth-order access to the cost: a weighted polynomial fit of the cost
//! samples over the MMLS frame, read off for an approximate value and an
//! intrinsic gradient at the frame origin.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::mmls::{LocalDesign, LocalFrame};
use crate::point_cloud::SampleSet;
use crate::weights::WeightSpec;

/// Polynomial `R^d -> R` in frame coordinates, graded-lex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPoly {
    pub degree: usize,
    pub dim: usize,
    pub coeffs: DVector<f64>,
}

impl ScalarPoly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let phi = crate::mmls::MonomialBasis::new(self.dim, self.degree).eval(x);
        phi.iter().zip(self.coeffs.iter()).map(|(a, b)| a * b).sum()
    }
}

/// Fits the cost samples over `frame` with the same weighted least-squares
/// machinery as the manifold fit.
pub fn fit_scalar_poly(set: &SampleSet, frame: &LocalFrame, degree: usize, spec: &WeightSpec) -> Result<ScalarPoly> {
    let values = set.values().ok_or(Error::MissingValues)?;
    let design = LocalDesign::new(set, frame, degree, spec)?;
    Ok(ScalarPoly {
        degree,
        dim: frame.intrinsic_dim(),
        coeffs: design.fit_values(values)?,
    })
}

/// Approximate value `p(0)` and intrinsic gradient `grad p(0)` (frame
/// coordinates).
pub fn approx_value_and_grad(poly: &ScalarPoly) -> Result<(f64, DVector<f64>)> {
    if poly.degree == 0 {
        return Err(Error::DegreeTooLow);
    }
    Ok((poly.coeffs[0], poly.coeffs.rows(1, poly.dim).into_owned()))
}

/// Approximate value only; valid for every degree.
pub fn approx_value(poly: &ScalarPoly) -> f64 {
    poly.coeffs[0]
}

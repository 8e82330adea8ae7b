//! String-addressable landscape registry for CLI use.
//!
//! Recognized ids: `f1`, `f2:C=<c>`, `f3`, `quartic`, `fig5_valley`,
//! `fig6_twovalley`, and `separable:<id>,<id>,...` (identity basis).

use crate::error::LandscapeError;
use crate::landscapes::{
    f1_logquad, f2_population, f3_2d, fig5_valley, fig6_two_valley, quartic, separable_sum,
    OrthonormalBasis, ScalarLandscape, VectorLandscape,
};

/// A resolved landscape, scalar or vector.
#[derive(Clone)]
pub enum LandscapeRef {
    Scalar(ScalarLandscape),
    Vector(VectorLandscape),
}

impl LandscapeRef {
    pub fn dim(&self) -> usize {
        match self {
            LandscapeRef::Scalar(_) => 1,
            LandscapeRef::Vector(v) => v.dim(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            LandscapeRef::Scalar(s) => s.label().to_string(),
            LandscapeRef::Vector(v) => v.label().to_string(),
        }
    }

    /// Uniform vector view (scalars become 1-D).
    pub fn as_vector(&self) -> VectorLandscape {
        match self {
            LandscapeRef::Scalar(s) => s.to_vector(),
            LandscapeRef::Vector(v) => v.clone(),
        }
    }

    pub fn as_scalar(&self) -> Option<&ScalarLandscape> {
        match self {
            LandscapeRef::Scalar(s) => Some(s),
            LandscapeRef::Vector(_) => None,
        }
    }
}

fn parse_scalar(id: &str) -> Result<ScalarLandscape, LandscapeError> {
    match resolve(id)? {
        LandscapeRef::Scalar(s) => Ok(s),
        LandscapeRef::Vector(_) => Err(LandscapeError::MalformedId {
            id: id.to_string(),
            reason: "separable components must be scalar landscapes".to_string(),
        }),
    }
}

/// Resolve a landscape id.
pub fn resolve(id: &str) -> Result<LandscapeRef, LandscapeError> {
    match id {
        "f1" => return Ok(LandscapeRef::Scalar(f1_logquad())),
        "f3" => return Ok(LandscapeRef::Vector(f3_2d())),
        "quartic" => return Ok(LandscapeRef::Scalar(quartic())),
        "fig5_valley" => return Ok(LandscapeRef::Vector(fig5_valley())),
        "fig6_twovalley" => return Ok(LandscapeRef::Vector(fig6_two_valley())),
        _ => {}
    }
    if let Some(rest) = id.strip_prefix("f2:") {
        let c = rest
            .strip_prefix("C=")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| LandscapeError::MalformedId {
                id: id.to_string(),
                reason: "expected f2:C=<positive real>".to_string(),
            })?;
        return Ok(LandscapeRef::Scalar(f2_population(c)?));
    }
    if let Some(rest) = id.strip_prefix("separable:") {
        let components: Vec<ScalarLandscape> = rest
            .split(',')
            .map(parse_scalar)
            .collect::<Result<_, _>>()?;
        if components.is_empty() {
            return Err(LandscapeError::MalformedId {
                id: id.to_string(),
                reason: "no components listed".to_string(),
            });
        }
        let basis = OrthonormalBasis::identity(components.len());
        return Ok(LandscapeRef::Vector(separable_sum(&components, &basis)?));
    }
    Err(LandscapeError::UnknownId(id.to_string()))
}

/// Ids with fixed parameters, for enumeration in the CLI.
pub fn builtin_ids() -> Vec<&'static str> {
    vec!["f1", "f2:C=3", "f3", "quartic", "fig5_valley", "fig6_twovalley"]
}

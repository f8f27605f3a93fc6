//! JSON file formats for polytopes and coefficient vectors.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{build_clw_pentagon, AffineFunctional, MomentPolytope};
use crate::potential::{MonomialBasis, SymplecticPotential};

/// `{"facets": [{"normal": [n1, n2], "offset": b}, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeFile {
    pub facets: Vec<AffineFunctional>,
}

impl PolytopeFile {
    pub fn from_polytope(poly: &MomentPolytope) -> Self {
        Self { facets: poly.facets().to_vec() }
    }

    pub fn to_polytope(&self) -> Result<MomentPolytope> {
        MomentPolytope::from_facets(self.facets.clone())
    }
}

/// `{"a": a, "degree": n, "symmetric": bool, "coeffs": [...]}`
///
/// A coefficient list shorter than the basis is padded with zeros, so a
/// lower-degree file can seed a higher-degree run. `facets` is present only
/// for polygons other than the class-`a` pentagon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub a: f64,
    pub degree: u32,
    pub symmetric: bool,
    pub coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<Vec<AffineFunctional>>,
}

impl CoefficientFile {
    pub fn from_potential(u: &SymplecticPotential, a: f64) -> Self {
        let facets = match u.polytope().clw_parameter() {
            Some(_) => None,
            None => Some(u.polytope().facets().to_vec()),
        };
        Self { a, degree: u.basis().degree(), symmetric: u.basis().is_symmetric(), coeffs: u.coeffs().to_vec(), facets }
    }

    pub fn polytope(&self) -> Result<MomentPolytope> {
        match &self.facets {
            Some(f) => MomentPolytope::from_facets(f.clone()),
            None => build_clw_pentagon(self.a),
        }
    }

    pub fn basis(&self) -> Result<MonomialBasis> {
        if self.symmetric {
            MonomialBasis::symmetric(self.degree)
        } else {
            MonomialBasis::full(self.degree)
        }
    }

    /// Coefficients zero-padded to `len`.
    pub fn padded(&self, len: usize) -> Result<Vec<f64>> {
        if self.coeffs.len() > len {
            return Err(Error::LengthMismatch { expected: len, got: self.coeffs.len() });
        }
        let mut c = self.coeffs.clone();
        c.resize(len, 0.0);
        Ok(c)
    }

    pub fn to_potential(&self) -> Result<SymplecticPotential> {
        let basis = self.basis()?;
        let coeffs = self.padded(basis.len())?;
        SymplecticPotential::new(self.polytope()?, basis, coeffs)
    }
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::MalformedFile(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serialises")
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::MalformedFile(format!("{}: {e}", path.display())))?;
    from_json(&text)
}

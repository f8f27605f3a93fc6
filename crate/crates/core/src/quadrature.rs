//! Gauss–Legendre rules and tensor-product schemes over moment polygons.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::polytope::{MomentPolytope, Vec2};

pub const MAX_ORDER: usize = 64;

/// Default order while optimising.
pub const OPTIMISE_ORDER: usize = 10;
/// Default order for standalone diagnostics.
pub const DIAGNOSE_ORDER: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs mapped affinely onto `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes.iter().zip(&self.weights).map(move |(t, w)| (mid + half * t, half * w))
    }
}

/// `k`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(k: usize) -> Result<QuadratureRule1D> {
    if k == 0 || k > MAX_ORDER {
        return Err(Error::InvalidParameter(format!("Gauss–Legendre order must be in 1..={MAX_ORDER}, got {k}")));
    }
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let n = k as f64;
    for i in 0..k.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_k
        let mut z = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(k, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(k, z);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[k - 1 - i] = z;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    if k % 2 == 1 {
        nodes[k / 2] = 0.0;
    }
    Ok(QuadratureRule1D { nodes, weights })
}

fn legendre_with_derivative(k: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = k as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Weighted interior points for integrating over a polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeQuadrature {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl PolytopeQuadrature {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ wᵢ f(pᵢ)` in index order.
    ///
    /// A non-finite sample propagates into the sum and marks the integrand as
    /// infeasible for the caller.
    pub fn integrate<F: FnMut(Vec2) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            acc += w * f(*p);
        }
        acc
    }

    /// Like [`integrate`](Self::integrate) but fails on non-finite samples.
    pub fn try_integrate<F: FnMut(Vec2) -> f64>(&self, f: F) -> Result<f64> {
        let v = self.integrate(f);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InfeasibleIntegrand)
        }
    }
}

/// The two-region split of the class-`a` pentagon:
/// `x₁ ∈ [−1, 0], x₂ ∈ [−1, a−1]` and `x₁ ∈ [0, a−1], x₂ ∈ [−1, a−1−x₁]`.
///
/// Each region is an iterated tensor rule with the inner interval mapped per
/// outer node, so the scheme has `2k²` points.
pub fn clw_split_scheme(poly: &MomentPolytope, k: usize) -> Result<PolytopeQuadrature> {
    let a = poly
        .clw_parameter()
        .ok_or_else(|| Error::InvalidParameter("split scheme requires the five-facet class-a pentagon".into()))?;
    let rule = gauss_legendre(k)?;
    let mut points = Vec::with_capacity(2 * k * k);
    let mut weights = Vec::with_capacity(2 * k * k);

    for (x1, w1) in rule.mapped(-1.0, 0.0) {
        for (x2, w2) in rule.mapped(-1.0, a - 1.0) {
            points.push(Vec2::new(x1, x2));
            weights.push(w1 * w2);
        }
    }
    for (x1, w1) in rule.mapped(0.0, a - 1.0) {
        for (x2, w2) in rule.mapped(-1.0, a - 1.0 - x1) {
            points.push(Vec2::new(x1, x2));
            weights.push(w1 * w2);
        }
    }
    Ok(PolytopeQuadrature { points, weights })
}

/// Fan triangulation from the area centroid with a collapsed-square
/// (Duffy) tensor rule on each triangle; `k²` points per facet.
pub fn triangulated_scheme(poly: &MomentPolytope, k: usize) -> Result<PolytopeQuadrature> {
    let rule = gauss_legendre(k)?;
    let centre = poly.centroid();
    let verts = poly.vertices();
    let m = verts.len();
    let mut points = Vec::with_capacity(m * k * k);
    let mut weights = Vec::with_capacity(m * k * k);
    for i in 0..m {
        let (v0, v1) = (verts[i], verts[(i + 1) % m]);
        let (e0, e1) = (v0 - centre, v1 - v0);
        let jac = (e0.x * e1.y - e0.y * e1.x).abs();
        for (s, ws) in rule.mapped(0.0, 1.0) {
            for (t, wt) in rule.mapped(0.0, 1.0) {
                points.push(centre + e0 * s + e1 * (s * t));
                weights.push(ws * wt * s * jac);
            }
        }
    }
    Ok(PolytopeQuadrature { points, weights })
}

/// Split scheme for the pentagon, triangulated scheme otherwise.
pub fn default_scheme(poly: &MomentPolytope, k: usize) -> Result<PolytopeQuadrature> {
    if poly.clw_parameter().is_some() {
        clw_split_scheme(poly, k)
    } else {
        triangulated_scheme(poly, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{build_clw_pentagon, build_square};
    use approx::assert_relative_eq;

    #[test]
    fn low_order_rules() {
        let r1 = gauss_legendre(1).unwrap();
        assert_eq!(r1.nodes, vec![0.0]);
        assert_relative_eq!(r1.weights[0], 2.0, epsilon = 1e-15);
        let r2 = gauss_legendre(2).unwrap();
        assert_relative_eq!(r2.nodes[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r2.nodes[0], -1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r2.weights[0], 1.0, epsilon = 1e-15);
        let r3 = gauss_legendre(3).unwrap();
        let quartic: f64 = r3.nodes.iter().zip(&r3.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert_relative_eq!(quartic, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn order_out_of_range() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(65).is_err());
        assert!(gauss_legendre(64).is_ok());
    }

    #[test]
    fn weights_sum_to_two() {
        for k in 1..=MAX_ORDER {
            let r = gauss_legendre(k).unwrap();
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14, "k={k}");
            assert!(r.weights.iter().all(|w| *w > 0.0));
            assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn split_scheme_area_and_size() {
        let a = 1.9577128052;
        let p = build_clw_pentagon(a).unwrap();
        let s = clw_split_scheme(&p, 10).unwrap();
        assert_eq!(s.len(), 200);
        assert_relative_eq!(s.total_weight(), (a * a + 2.0 * a - 1.0) / 2.0, epsilon = 1e-12);
        assert!(s.points.iter().all(|x| p.contains_strictly(*x, 1e-10)));
        assert_eq!(clw_split_scheme(&p, 20).unwrap().len(), 800);
    }

    #[test]
    fn split_scheme_rejects_other_polygons() {
        assert!(clw_split_scheme(&build_square(1.0).unwrap(), 10).is_err());
    }

    #[test]
    fn integrate_basic() {
        let sq = build_square(1.0).unwrap();
        let s = triangulated_scheme(&sq, 4).unwrap();
        assert_relative_eq!(s.integrate(|_| 1.0), 4.0, epsilon = 1e-12);
        assert_relative_eq!(s.integrate(|_| 2.5), 10.0, epsilon = 1e-12);
        assert!(s.integrate(|x| x.x + x.y).abs() < 1e-13);
        assert!(s.try_integrate(|x| if x.x > 0.5 { f64::INFINITY } else { 1.0 }).is_err());
    }

    #[test]
    fn fan_has_one_triangle_per_facet() {
        let p = build_clw_pentagon(1.9577128052).unwrap();
        let s = triangulated_scheme(&p, 6).unwrap();
        assert_eq!(s.len(), p.facets().len() * 36);
        assert!(s.points.iter().all(|x| p.contains_strictly(*x, 1e-10)));
    }
}

//! Moment polygons, their boundary measure, and the extremal affine target.
//!
//! A polygon is stored as the list of affine functionals `l_r(x) = ν_r·x + b_r`
//! whose nonnegativity cuts it out. Vertices and edges are derived once at
//! construction and kept counterclockwise.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Absolute tolerance for vertex/facet incidence.
pub const INCIDENCE_TOL: f64 = 1e-12;

/// `l(x) = normal · x + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFunctional {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl AffineFunctional {
    pub fn new(normal: [f64; 2], offset: f64) -> Self {
        Self { normal, offset }
    }

    #[inline]
    pub fn eval(&self, x: Vec2) -> f64 {
        self.normal[0] * x.x + self.normal[1] * x.y + self.offset
    }

    #[inline]
    pub fn normal_vec(&self) -> Vec2 {
        Vec2::new(self.normal[0], self.normal[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Index into [`MomentPolytope::facets`].
    pub facet: usize,
    pub start: Vec2,
    pub end: Vec2,
    /// Boundary-measure density relative to Euclidean arc length, `1/|ν|`.
    pub density: f64,
}

impl Edge {
    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentPolytope {
    facets: Vec<AffineFunctional>,
    vertices: Vec<Vec2>,
    edges: Vec<Edge>,
}

impl MomentPolytope {
    /// Builds the polygon `{x : l_r(x) ≥ 0 for all r}`.
    ///
    /// Every facet must support exactly one edge; redundant or degenerate
    /// facet lists are rejected.
    pub fn from_facets(facets: Vec<AffineFunctional>) -> Result<Self> {
        if facets.len() < 3 {
            return Err(Error::DegeneratePolytope(format!("need at least 3 facets, got {}", facets.len())));
        }
        for (r, f) in facets.iter().enumerate() {
            let n = f.normal_vec();
            if !(n.norm() > 0.0) || !f.offset.is_finite() {
                return Err(Error::DegeneratePolytope(format!("facet {r} has a zero or non-finite normal")));
            }
        }

        let mut vertices: Vec<Vec2> = Vec::new();
        for i in 0..facets.len() {
            for j in (i + 1)..facets.len() {
                let (ni, nj) = (facets[i].normal_vec(), facets[j].normal_vec());
                let det = ni.x * nj.y - ni.y * nj.x;
                if det.abs() < INCIDENCE_TOL {
                    continue;
                }
                let (bi, bj) = (-facets[i].offset, -facets[j].offset);
                let p = Vec2::new((bi * nj.y - ni.y * bj) / det, (ni.x * bj - bi * nj.x) / det);
                if facets.iter().all(|f| f.eval(p) >= -INCIDENCE_TOL)
                    && !vertices.iter().any(|v| (v - p).norm() <= INCIDENCE_TOL)
                {
                    vertices.push(p);
                }
            }
        }
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolytope("empty or unbounded interior".into()));
        }

        let centre = vertices.iter().fold(Vec2::zeros(), |acc, v| acc + v) / vertices.len() as f64;
        vertices.sort_by(|p, q| {
            let ap = (p.y - centre.y).atan2(p.x - centre.x);
            let aq = (q.y - centre.y).atan2(q.x - centre.x);
            ap.total_cmp(&aq)
        });

        for v in &vertices {
            let active = facets.iter().filter(|f| f.eval(*v).abs() <= INCIDENCE_TOL).count();
            if active != 2 {
                return Err(Error::DegeneratePolytope(format!("vertex ({}, {}) lies on {active} facets", v.x, v.y)));
            }
        }

        let m = vertices.len();
        let mut edges = Vec::with_capacity(m);
        let mut used = vec![false; facets.len()];
        for k in 0..m {
            let (start, end) = (vertices[k], vertices[(k + 1) % m]);
            let facet = facets
                .iter()
                .position(|f| f.eval(start).abs() <= INCIDENCE_TOL && f.eval(end).abs() <= INCIDENCE_TOL)
                .ok_or_else(|| Error::DegeneratePolytope("consecutive vertices share no facet".into()))?;
            used[facet] = true;
            edges.push(Edge { facet, start, end, density: 1.0 / facets[facet].normal_vec().norm() });
        }
        if let Some(r) = used.iter().position(|u| !u) {
            return Err(Error::DegeneratePolytope(format!("facet {r} is redundant")));
        }

        let poly = Self { facets, vertices, edges };
        if !(poly.area() > 0.0) {
            return Err(Error::DegeneratePolytope("zero area".into()));
        }
        Ok(poly)
    }

    pub fn facets(&self) -> &[AffineFunctional] {
        &self.facets
    }

    /// Counterclockwise.
    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn area(&self) -> f64 {
        self.moment(0, 0)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges.iter().map(Edge::length).sum()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Vec2 {
        let area = self.area();
        Vec2::new(self.moment(1, 0) / area, self.moment(0, 1) / area)
    }

    /// Axis-aligned bounding box as `(min, max)` corners.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Smallest value of any facet functional at `x`.
    pub fn min_facet_value(&self, x: Vec2) -> f64 {
        self.facets.iter().map(|f| f.eval(x)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains_strictly(&self, x: Vec2, margin: f64) -> bool {
        self.min_facet_value(x) > margin
    }

    /// `∫_P x₁ⁱ x₂ʲ dx`, exact for the polynomial integrand.
    ///
    /// Green's theorem reduces the area integral to a sum over edges; the
    /// per-edge integrals are expanded in closed form.
    pub fn moment(&self, i: u32, j: u32) -> f64 {
        let (p, q) = (i as usize, j as usize);
        let n = p + q;
        let mut total = 0.0;
        for edge in &self.edges {
            let (a, b) = (edge.start, edge.end);
            let cross = a.x * b.y - b.x * a.y;
            let mut inner = 0.0;
            for s in 0..=p {
                for t in 0..=q {
                    inner += binomial(s + t, s)
                        * binomial(n - s - t, p - s)
                        * a.x.powi(s as i32)
                        * b.x.powi((p - s) as i32)
                        * a.y.powi(t as i32)
                        * b.y.powi((q - t) as i32);
                }
            }
            total += cross * inner;
        }
        total / ((n + 2) as f64 * (n + 1) as f64 * binomial(n, p))
    }

    /// `∫_∂P 2 f dσ` for an affine `f`, using each edge's density.
    pub fn boundary_moment(&self, f: &AffineFunctional) -> f64 {
        self.edges
            .iter()
            .map(|e| {
                let mid = (e.start + e.end) * 0.5;
                2.0 * e.density * e.length() * f.eval(mid)
            })
            .sum()
    }

    pub fn translated(&self, t: Vec2) -> Result<Self> {
        let facets =
            self.facets.iter().map(|f| AffineFunctional::new(f.normal, f.offset - f.normal_vec().dot(&t))).collect();
        Self::from_facets(facets)
    }

    /// Recognises the five-facet pentagon produced by [`build_clw_pentagon`]
    /// (in any facet order) and returns its class parameter.
    pub fn clw_parameter(&self) -> Option<f64> {
        if self.facets.len() != 5 {
            return None;
        }
        let slanted = self.facets.iter().find(|f| f.normal == [-1.0, -1.0])?;
        let a = slanted.offset + 1.0;
        let expected = clw_facets(a);
        let all_present = expected
            .iter()
            .all(|e| self.facets.iter().any(|f| f.normal == e.normal && (f.offset - e.offset).abs() <= INCIDENCE_TOL));
        all_present.then_some(a)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, m| acc * (n - m) as f64 / (m + 1) as f64)
}

fn clw_facets(a: f64) -> [AffineFunctional; 5] {
    [
        AffineFunctional::new([1.0, 0.0], 1.0),
        AffineFunctional::new([0.0, 1.0], 1.0),
        AffineFunctional::new([-1.0, 0.0], a - 1.0),
        AffineFunctional::new([0.0, -1.0], a - 1.0),
        AffineFunctional::new([-1.0, -1.0], a - 1.0),
    ]
}

/// The pentagon `1+x₁, 1+x₂, a−1−x₁, a−1−x₂, a−1−x₁−x₂ ≥ 0`.
pub fn build_clw_pentagon(a: f64) -> Result<MomentPolytope> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("class parameter a must exceed 1, got {a}")));
    }
    MomentPolytope::from_facets(clw_facets(a).to_vec())
}

/// The square `[-h, h]²`.
pub fn build_square(half_width: f64) -> Result<MomentPolytope> {
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::InvalidParameter(format!("half width must be positive, got {half_width}")));
    }
    let h = half_width;
    MomentPolytope::from_facets(vec![
        AffineFunctional::new([1.0, 0.0], h),
        AffineFunctional::new([0.0, 1.0], h),
        AffineFunctional::new([-1.0, 0.0], h),
        AffineFunctional::new([0.0, -1.0], h),
    ])
}

/// `S(x) = a·x + b`, the scalar curvature of an extremal toric metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalAffineTarget {
    pub a_coeffs: [f64; 2],
    pub b: f64,
}

impl ExtremalAffineTarget {
    #[inline]
    pub fn eval(&self, x: Vec2) -> f64 {
        self.a_coeffs[0] * x.x + self.a_coeffs[1] * x.y + self.b
    }

    #[inline]
    pub fn gradient(&self) -> Vec2 {
        Vec2::new(self.a_coeffs[0], self.a_coeffs[1])
    }

    /// `∫_∂P 2f dσ − ∫_P S f dx` for affine `f`; vanishes for the solved target.
    pub fn donaldson_defect(&self, poly: &MomentPolytope, f: &AffineFunctional) -> f64 {
        let [n1, n2] = f.normal;
        let [s1, s2] = self.a_coeffs;
        let (c, b) = (f.offset, self.b);
        // (s1 x + s2 y + b)(n1 x + n2 y + c)
        let interior = s1 * n1 * poly.moment(2, 0)
            + (s1 * n2 + s2 * n1) * poly.moment(1, 1)
            + s2 * n2 * poly.moment(0, 2)
            + (s1 * c + b * n1) * poly.moment(1, 0)
            + (s2 * c + b * n2) * poly.moment(0, 1)
            + b * c * poly.moment(0, 0);
        poly.boundary_moment(f) - interior
    }
}

/// Solves `∫_∂P 2f dσ = ∫_P S f dx` for `f ∈ {1, x₁, x₂}`.
pub fn solve_extremal_affine(poly: &MomentPolytope) -> Result<ExtremalAffineTarget> {
    let m = |i, j| poly.moment(i, j);
    let gram = Matrix3::new(m(0, 0), m(1, 0), m(0, 1), m(1, 0), m(2, 0), m(1, 1), m(0, 1), m(1, 1), m(0, 2));
    let rhs = Vector3::new(
        poly.boundary_moment(&AffineFunctional::new([0.0, 0.0], 1.0)),
        poly.boundary_moment(&AffineFunctional::new([1.0, 0.0], 0.0)),
        poly.boundary_moment(&AffineFunctional::new([0.0, 1.0], 0.0)),
    );
    let chol = gram.cholesky().ok_or_else(|| Error::SingularSystem("moment matrix is not positive definite".into()))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
    if lo <= 1e-7 * hi {
        return Err(Error::SingularSystem("moment matrix is numerically singular".into()));
    }
    let sol = chol.solve(&rhs);
    Ok(ExtremalAffineTarget { a_coeffs: [sol[1], sol[2]], b: sol[0] })
}

/// Closed-form `(A, B)` with `S = A(x₁+x₂) + B` on the pentagon of class `a`.
pub fn clw_closed_form(a: f64) -> (f64, f64) {
    let den = a.powi(6) + 6.0 * a.powi(5) + 9.0 * a.powi(4) + 4.0 * a.powi(3) - 3.0 * a * a - 6.0 * a + 1.0;
    let big_a = 48.0 * (1.0 - a.powi(3)) / den;
    let big_b = 12.0 * (a.powi(5) + 7.0 * a.powi(4) - 2.0 * a.powi(3) + 2.0 * a * a - 5.0 * a + 5.0) / den;
    (big_a, big_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const A_CLW: f64 = 1.9577128052;

    fn affine(n1: f64, n2: f64, c: f64) -> AffineFunctional {
        AffineFunctional::new([n1, n2], c)
    }

    #[test]
    fn clw_vertices_at_a_two() {
        let p = build_clw_pentagon(2.0).unwrap();
        let expected = [(-1.0, -1.0), (1.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 1.0)];
        assert_eq!(p.vertices().len(), 5);
        let start = p.vertices().iter().position(|v| (v - Vec2::new(-1.0, -1.0)).norm() < 1e-14).unwrap();
        for (k, (x, y)) in expected.iter().enumerate() {
            let v = p.vertices()[(start + k) % 5];
            assert_relative_eq!(v.x, *x, epsilon = 1e-14);
            assert_relative_eq!(v.y, *y, epsilon = 1e-14);
        }
    }

    #[test]
    fn clw_area_and_parameter() {
        let p = build_clw_pentagon(A_CLW).unwrap();
        assert_relative_eq!(p.area(), (A_CLW * A_CLW + 2.0 * A_CLW - 1.0) / 2.0, max_relative = 1e-14);
        assert_relative_eq!(p.area(), 3.374032519022026, max_relative = 1e-13);
        assert_eq!(p.clw_parameter(), Some(A_CLW));
        assert_eq!(build_square(1.0).unwrap().clw_parameter(), None);
    }

    #[test]
    fn clw_rejects_degenerate_parameter() {
        assert!(matches!(build_clw_pentagon(0.5), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_clw_pentagon(1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_square(0.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn square_geometry() {
        let s = build_square(1.0).unwrap();
        assert_relative_eq!(s.area(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(s.perimeter(), 8.0, epsilon = 1e-14);
        assert_relative_eq!(s.boundary_moment(&affine(0.0, 0.0, 1.0)), 16.0, epsilon = 1e-14);
        assert_relative_eq!(s.boundary_moment(&affine(1.0, 0.0, 0.0)), 0.0, epsilon = 1e-14);
        assert_relative_eq!(build_square(2.0).unwrap().area(), 16.0, epsilon = 1e-13);
    }

    #[test]
    fn square_moments() {
        let s = build_square(1.0).unwrap();
        assert_relative_eq!(s.moment(0, 0), 4.0, epsilon = 1e-14);
        assert_relative_eq!(s.moment(2, 0), 4.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(s.moment(2, 2), 4.0 / 9.0, epsilon = 1e-14);
        assert_relative_eq!(s.moment(1, 0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(s.moment(3, 1), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn clw_moment_by_corner_subtraction() {
        let a = A_CLW;
        let p = build_clw_pentagon(a).unwrap();
        assert_relative_eq!(p.moment(0, 0), a * a - (a - 1.0).powi(2) / 2.0, max_relative = 1e-14);
        // slanted edge contributes its Euclidean length (a-1)√2 times density 1/√2
        let expected = 2.0 * (a + a + 1.0 + 1.0 + (a - 1.0));
        assert_relative_eq!(p.boundary_moment(&affine(0.0, 0.0, 1.0)), expected, max_relative = 1e-14);
    }

    #[test]
    fn square_target_is_constant_four() {
        let t = solve_extremal_affine(&build_square(1.0).unwrap()).unwrap();
        assert_relative_eq!(t.b, 4.0, epsilon = 1e-13);
        assert!(t.a_coeffs[0].abs() < 1e-13 && t.a_coeffs[1].abs() < 1e-13);
    }

    #[test]
    fn clw_target_at_a_two() {
        let t = solve_extremal_affine(&build_clw_pentagon(2.0).unwrap()).unwrap();
        assert_relative_eq!(t.a_coeffs[0], -336.0 / 409.0, max_relative = 1e-12);
        assert_relative_eq!(t.a_coeffs[1], -336.0 / 409.0, max_relative = 1e-12);
        assert_relative_eq!(t.b, 1572.0 / 409.0, max_relative = 1e-12);
        let (a, b) = clw_closed_form(2.0);
        assert_relative_eq!(a, -336.0 / 409.0, max_relative = 1e-15);
        assert_relative_eq!(b, 1572.0 / 409.0, max_relative = 1e-15);
    }

    #[test]
    fn target_satisfies_integration_by_parts() {
        let p = build_clw_pentagon(A_CLW).unwrap();
        let t = solve_extremal_affine(&p).unwrap();
        for f in [affine(0.0, 0.0, 1.0), affine(1.0, 0.0, 0.0), affine(0.0, 1.0, 0.0), affine(0.3, -2.0, 0.7)] {
            let bd = p.boundary_moment(&f);
            assert!(t.donaldson_defect(&p, &f).abs() <= 1e-10 * (1.0 + bd.abs()));
        }
    }

    #[test]
    fn redundant_facet_rejected() {
        let mut facets = build_square(1.0).unwrap().facets().to_vec();
        facets.push(affine(1.0, 0.0, 5.0));
        assert!(matches!(MomentPolytope::from_facets(facets), Err(Error::DegeneratePolytope(_))));
    }

    #[test]
    fn empty_interior_rejected() {
        let facets =
            vec![affine(1.0, 0.0, -1.0), affine(-1.0, 0.0, -1.0), affine(0.0, 1.0, 1.0), affine(0.0, -1.0, 1.0)];
        assert!(MomentPolytope::from_facets(facets).is_err());
    }

    #[test]
    fn vertices_counterclockwise_and_incident() {
        let p = build_clw_pentagon(2.3).unwrap();
        let v = p.vertices();
        let signed: f64 = (0..v.len()).map(|k| v[k].x * v[(k + 1) % v.len()].y - v[(k + 1) % v.len()].x * v[k].y).sum();
        assert!(signed > 0.0);
        for e in p.edges() {
            let f = p.facets()[e.facet];
            assert!(f.eval(e.start).abs() < 1e-12 && f.eval(e.end).abs() < 1e-12);
        }
    }
}

//! Restricted symplectic potentials `u = u_can + F` and Abreu's scalar curvature.
//!
//! Everything pointwise is driven by the twelve partial derivatives of `u` of
//! orders 2–4 at a point (a [`Partials`] array). The Hessian jet is assembled
//! from those, which makes the mixed-partial symmetry of the jet exact.

use std::ops::Add;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{MomentPolytope, Vec2};

/// Points with any `l_r(x) ≤ BOUNDARY_EPS` are treated as boundary points.
pub const BOUNDARY_EPS: f64 = 1e-13;

pub const JET_LEN: usize = 12;

/// `(∂₁ order, ∂₂ order)` of each slot in a [`Partials`] array.
pub const PARTIAL_ORDERS: [(u32, u32); JET_LEN] =
    [(2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3), (4, 0), (3, 1), (2, 2), (1, 3), (0, 4)];

/// Number of slots holding second and third derivatives.
pub const FIRST_ORDER_LEN: usize = 7;

/// Partial derivatives of orders 2, 3 and 4, laid out as [`PARTIAL_ORDERS`].
pub type Partials = [f64; JET_LEN];

type Mat2 = Matrix2<f64>;

// ---------------------------------------------------------------------------
// basis

/// Polynomial basis for the smooth part `F` of the potential.
///
/// With `symmetric` set, the term `(i, j)` (stored with `i ≤ j`) stands for
/// `x₁ⁱx₂ʲ + x₁ʲx₂ⁱ`, or `x₁ⁱx₂ⁱ` when `i = j`. Terms are graded by total
/// degree, and within a degree the most balanced exponent pair comes first:
/// `x₁x₂, (x₁²+x₂²), x₁x₂(x₁+x₂), (x₁³+x₂³), x₁²x₂², …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialBasis {
    terms: Vec<(u32, u32)>,
    symmetric: bool,
}

impl MonomialBasis {
    /// `Z₂`-symmetrised terms of total degree `2..=degree`.
    pub fn symmetric(degree: u32) -> Result<Self> {
        check_degree(degree)?;
        let terms = (2..=degree).flat_map(|d| (0..=d / 2).rev().map(move |i| (i, d - i))).collect();
        Ok(Self { terms, symmetric: true })
    }

    /// All monomials `x₁ⁱx₂ʲ` with `2 ≤ i+j ≤ degree`.
    pub fn full(degree: u32) -> Result<Self> {
        check_degree(degree)?;
        let terms = (2..=degree).flat_map(|d| (0..=d).rev().map(move |i| (i, d - i))).collect();
        Ok(Self { terms, symmetric: false })
    }

    pub fn from_terms(terms: Vec<(u32, u32)>, symmetric: bool) -> Result<Self> {
        for (k, &(i, j)) in terms.iter().enumerate() {
            if i + j < 2 {
                return Err(Error::InvalidParameter(format!("term ({i}, {j}) has degree below 2")));
            }
            if symmetric && i > j {
                return Err(Error::InvalidParameter(format!("symmetric term ({i}, {j}) must have i <= j")));
            }
            if terms[..k].contains(&(i, j)) {
                return Err(Error::InvalidParameter(format!("repeated term ({i}, {j})")));
            }
        }
        Ok(Self { terms, symmetric })
    }

    pub fn terms(&self) -> &[(u32, u32)] {
        &self.terms
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(i, j)| i + j).max().unwrap_or(0)
    }

    pub fn value(&self, coeffs: &[f64], x: Vec2) -> f64 {
        self.terms
            .iter()
            .zip(coeffs)
            .map(|(&(i, j), c)| {
                let m = x.x.powi(i as i32) * x.y.powi(j as i32);
                let sym = if self.symmetric && i != j { x.x.powi(j as i32) * x.y.powi(i as i32) } else { 0.0 };
                c * (m + sym)
            })
            .sum()
    }

    /// Orders 2–4 partials of every basis term at `x`.
    pub fn term_partials(&self, x: Vec2) -> Vec<Partials> {
        self.terms
            .iter()
            .map(|&(i, j)| {
                let mut out = monomial_partials(i, j, x);
                if self.symmetric && i != j {
                    let mirror = monomial_partials(j, i, x);
                    for (o, m) in out.iter_mut().zip(mirror) {
                        *o += m;
                    }
                }
                out
            })
            .collect()
    }
}

/// `⌊(n² + 4n − 4)/4⌋`, the size of the symmetric basis of degree `n`.
pub fn symmetric_term_count(degree: u32) -> usize {
    ((degree * degree + 4 * degree).saturating_sub(4) / 4) as usize
}

fn check_degree(degree: u32) -> Result<()> {
    if degree < 2 {
        return Err(Error::InvalidParameter(format!("polynomial degree must be at least 2, got {degree}")));
    }
    Ok(())
}

fn falling(e: u32, k: u32) -> f64 {
    if k > e {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, m| acc * (e - m) as f64)
}

fn monomial_partials(i: u32, j: u32, x: Vec2) -> Partials {
    let mut out = [0.0; JET_LEN];
    for (slot, &(p, q)) in out.iter_mut().zip(PARTIAL_ORDERS.iter()) {
        if p <= i && q <= j {
            *slot = falling(i, p) * x.x.powi((i - p) as i32) * falling(j, q) * x.y.powi((j - q) as i32);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// jets

/// The Hessian `u_ij` and its first two derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianJet {
    pub h: Mat2,
    /// `[∂₁H, ∂₂H]`
    pub dh: [Mat2; 2],
    /// `[∂₁₁H, ∂₁₂H, ∂₂₂H]`
    pub d2h: [Mat2; 3],
}

impl HessianJet {
    pub fn zero() -> Self {
        Self { h: Mat2::zeros(), dh: [Mat2::zeros(); 2], d2h: [Mat2::zeros(); 3] }
    }

    pub fn from_partials(p: &Partials) -> Self {
        let [u20, u11, u02, u30, u21, u12, u03, u40, u31, u22, u13, u04] = *p;
        let sym = |a, b, c| Mat2::new(a, b, b, c);
        Self {
            h: sym(u20, u11, u02),
            dh: [sym(u30, u21, u12), sym(u21, u12, u03)],
            d2h: [sym(u40, u31, u22), sym(u31, u22, u13), sym(u22, u13, u04)],
        }
    }

    #[inline]
    fn second(&self, i: usize, j: usize) -> &Mat2 {
        &self.d2h[i + j]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.h.determinant() > 0.0 && self.h.trace() > 0.0
    }
}

impl Add for HessianJet {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            h: self.h + o.h,
            dh: [self.dh[0] + o.dh[0], self.dh[1] + o.dh[1]],
            d2h: [self.d2h[0] + o.d2h[0], self.d2h[1] + o.d2h[1], self.d2h[2] + o.d2h[2]],
        }
    }
}

/// Partials of `u_can = ½ Σ l_r log l_r`.
pub fn canonical_partials(poly: &MomentPolytope, x: Vec2) -> Result<Partials> {
    let mut out = [0.0; JET_LEN];
    for f in poly.facets() {
        let l = f.eval(x);
        if !(l > BOUNDARY_EPS) {
            return Err(Error::BoundaryPoint(x.x, x.y));
        }
        let [n1, n2] = f.normal;
        let scale = [0.5 / l, -0.5 / (l * l), 1.0 / (l * l * l)];
        for (slot, &(p, q)) in out.iter_mut().zip(PARTIAL_ORDERS.iter()) {
            *slot += n1.powi(p as i32) * n2.powi(q as i32) * scale[(p + q - 2) as usize];
        }
    }
    Ok(out)
}

pub fn canonical_jet(poly: &MomentPolytope, x: Vec2) -> Result<HessianJet> {
    canonical_partials(poly, x).map(|p| HessianJet::from_partials(&p))
}

pub fn polynomial_partials(basis: &MonomialBasis, coeffs: &[f64], x: Vec2) -> Partials {
    let mut out = [0.0; JET_LEN];
    for (tp, c) in basis.term_partials(x).iter().zip(coeffs) {
        for (o, t) in out.iter_mut().zip(tp) {
            *o += c * t;
        }
    }
    out
}

pub fn polynomial_jet(basis: &MonomialBasis, coeffs: &[f64], x: Vec2) -> HessianJet {
    HessianJet::from_partials(&polynomial_partials(basis, coeffs, x))
}

// ---------------------------------------------------------------------------
// curvature

/// `H⁻¹` and `∂ₖ(H⁻¹) = −H⁻¹(∂ₖH)H⁻¹`.
#[derive(Debug, Clone, Copy)]
pub struct InverseJet {
    pub g: Mat2,
    pub dg: [Mat2; 2],
}

impl InverseJet {
    /// `None` when `H` is not positive definite.
    pub fn new(jet: &HessianJet) -> Option<Self> {
        if !jet.is_positive_definite() {
            return None;
        }
        let g = jet.h.try_inverse()?;
        let dg = [-g * jet.dh[0] * g, -g * jet.dh[1] * g];
        Some(Self { g, dg })
    }

    /// First variation of `(H⁻¹, ∂H⁻¹)` along a perturbation `δjet`.
    fn tangent(&self, jet: &HessianJet, djet: &HessianJet) -> (Mat2, [Mat2; 2]) {
        let g = &self.g;
        let dg = -g * djet.h * g;
        let d = |k: usize| -(dg * jet.dh[k] * g + g * djet.dh[k] * g + g * jet.dh[k] * dg);
        (dg, [d(0), d(1)])
    }

    /// `|∇f|²_u = aᵀ H⁻¹ a` for the affine `f` with gradient `a`.
    pub fn grad_sq(&self, a: Vec2) -> f64 {
        a.dot(&(self.g * a))
    }

    /// `Σᵢ ∂ᵢ(uⁱʲ aⱼ)`, the divergence-form Laplacian of an affine function.
    pub fn laplacian(&self, a: Vec2) -> f64 {
        (self.dg[0] * a)[0] + (self.dg[1] * a)[1]
    }
}

/// `S = −Σᵢⱼ ∂ᵢ∂ⱼ(H⁻¹)ᵢⱼ` from a jet whose inverse is already known.
fn curvature_with(jet: &HessianJet, inv: &InverseJet) -> f64 {
    let (g, dg) = (&inv.g, &inv.dg);
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let second = -(dg[i] * jet.dh[j] * g + g * jet.second(i, j) * g + g * jet.dh[j] * dg[i]);
            s -= second[(i, j)];
        }
    }
    s
}

fn curvature_tangent(jet: &HessianJet, inv: &InverseJet, djet: &HessianJet) -> f64 {
    let (g, dg) = (&inv.g, &inv.dg);
    let (tg, tdg) = inv.tangent(jet, djet);
    let mut ds = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let hj = &jet.dh[j];
            let hij = jet.second(i, j);
            let t = tdg[i] * hj * g
                + dg[i] * djet.dh[j] * g
                + dg[i] * hj * tg
                + tg * hij * g
                + g * djet.second(i, j) * g
                + g * hij * tg
                + tg * hj * dg[i]
                + g * djet.dh[j] * dg[i]
                + g * hj * tdg[i];
            ds += t[(i, j)];
        }
    }
    ds
}

fn unit_jet(slot: usize) -> HessianJet {
    let mut p = [0.0; JET_LEN];
    p[slot] = 1.0;
    HessianJet::from_partials(&p)
}

/// Scalar curvature at a point given the partials of `u`; `None` if the
/// Hessian is not positive definite.
pub fn curvature_from_partials(p: &Partials) -> Option<f64> {
    let jet = HessianJet::from_partials(p);
    let inv = InverseJet::new(&jet)?;
    Some(curvature_with(&jet, &inv))
}

/// Curvature together with `∂S/∂(partial slot)` for every slot.
///
/// The map from partials to `S` is linearised analytically; contracting the
/// result with a basis term's partials yields `∂S/∂c_k`.
pub fn curvature_sensitivity(p: &Partials) -> Option<(f64, Partials)> {
    let jet = HessianJet::from_partials(p);
    let inv = InverseJet::new(&jet)?;
    let mut sens = [0.0; JET_LEN];
    for (slot, out) in sens.iter_mut().enumerate() {
        *out = curvature_tangent(&jet, &inv, &unit_jet(slot));
    }
    Some((curvature_with(&jet, &inv), sens))
}

/// First-order quantities of the affine function with gradient `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFirstOrder {
    pub grad_sq: f64,
    pub laplacian: f64,
}

/// `|∇f|²` and `Δf` together with their sensitivities to the order-2 and
/// order-3 partial slots.
pub fn first_order_sensitivity(
    p: &Partials,
    a: Vec2,
) -> Option<(AffineFirstOrder, [f64; FIRST_ORDER_LEN], [f64; FIRST_ORDER_LEN])> {
    let jet = HessianJet::from_partials(p);
    let inv = InverseJet::new(&jet)?;
    let value = AffineFirstOrder { grad_sq: inv.grad_sq(a), laplacian: inv.laplacian(a) };
    let mut d_grad = [0.0; FIRST_ORDER_LEN];
    let mut d_lap = [0.0; FIRST_ORDER_LEN];
    for slot in 0..FIRST_ORDER_LEN {
        let (tg, tdg) = inv.tangent(&jet, &unit_jet(slot));
        d_grad[slot] = a.dot(&(tg * a));
        d_lap[slot] = (tdg[0] * a)[0] + (tdg[1] * a)[1];
    }
    Some((value, d_grad, d_lap))
}

// ---------------------------------------------------------------------------
// potential

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticPotential {
    polytope: MomentPolytope,
    basis: MonomialBasis,
    coeffs: Vec<f64>,
}

impl SymplecticPotential {
    pub fn new(polytope: MomentPolytope, basis: MonomialBasis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::LengthMismatch { expected: basis.len(), got: coeffs.len() });
        }
        Ok(Self { polytope, basis, coeffs })
    }

    /// `F ≡ 0`.
    pub fn canonical(polytope: MomentPolytope, basis: MonomialBasis) -> Self {
        let coeffs = vec![0.0; basis.len()];
        Self { polytope, basis, coeffs }
    }

    pub fn polytope(&self) -> &MomentPolytope {
        &self.polytope
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(self.polytope.clone(), self.basis.clone(), coeffs)
    }

    pub fn partials(&self, x: Vec2) -> Result<Partials> {
        let mut p = canonical_partials(&self.polytope, x)?;
        for (o, f) in p.iter_mut().zip(polynomial_partials(&self.basis, &self.coeffs, x)) {
            *o += f;
        }
        Ok(p)
    }

    pub fn jet(&self, x: Vec2) -> Result<HessianJet> {
        self.partials(x).map(|p| HessianJet::from_partials(&p))
    }

    pub fn scalar_curvature(&self, x: Vec2) -> Result<f64> {
        curvature_from_partials(&self.partials(x)?).ok_or(Error::IndefiniteHessian(x.x, x.y))
    }

    /// `∂S/∂c_k` for every basis coefficient.
    pub fn scalar_curvature_coeff_jacobian(&self, x: Vec2) -> Result<Vec<f64>> {
        let (_, sens) = curvature_sensitivity(&self.partials(x)?).ok_or(Error::IndefiniteHessian(x.x, x.y))?;
        Ok(self.basis.term_partials(x).iter().map(|tp| tp.iter().zip(&sens).map(|(t, s)| t * s).sum()).collect())
    }

    /// Never fails; boundary points count as not positive definite.
    pub fn is_positive_definite_on(&self, points: &[Vec2]) -> bool {
        points.iter().all(|x| match self.jet(*x) {
            Ok(j) => j.h.determinant() > 0.0 && j.h[(0, 0)] > 0.0,
            Err(_) => false,
        })
    }
}

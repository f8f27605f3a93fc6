//! The reduced objectives over a fixed quadrature scheme.
//!
//! [`CurvatureProblem`] caches the canonical partials and every basis term's
//! partials at each quadrature point, so an objective evaluation only sums
//! precomputed arrays and linearises the curvature once per point.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{ExtremalAffineTarget, MomentPolytope};
use crate::potential::{
    canonical_partials, curvature_from_partials, curvature_sensitivity, first_order_sensitivity, HessianJet,
    InverseJet, MonomialBasis, Partials, SymplecticPotential, FIRST_ORDER_LEN, JET_LEN,
};
use crate::quadrature::PolytopeQuadrature;

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Which functional is being minimised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// `4π² ∫ (S − S_t)²`
    Calabi,
    /// `4π² ∫ (κ − S_t³ − 6 S_t Δ S_t + 12 |∇S_t|²)²`
    Conformal { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub feasible: bool,
}

impl ObjectiveEval {
    pub fn infeasible(n: usize) -> Self {
        Self { value: f64::INFINITY, gradient: vec![f64::NAN; n], feasible: false }
    }
}

/// `√w̃ᵢ · rᵢ` in scheme order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pub residuals: DVector<f64>,
}

impl ResidualVector {
    pub fn sum_of_squares(&self) -> f64 {
        self.residuals.norm_squared()
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureProblem {
    polytope: MomentPolytope,
    basis: MonomialBasis,
    target: ExtremalAffineTarget,
    scheme: PolytopeQuadrature,
    canonical: Vec<Partials>,
    terms: Vec<Vec<Partials>>,
}

impl CurvatureProblem {
    pub fn new(
        polytope: MomentPolytope,
        basis: MonomialBasis,
        target: ExtremalAffineTarget,
        scheme: PolytopeQuadrature,
    ) -> Result<Self> {
        let canonical = scheme.points.iter().map(|x| canonical_partials(&polytope, *x)).collect::<Result<_>>()?;
        let terms = scheme.points.iter().map(|x| basis.term_partials(*x)).collect();
        Ok(Self { polytope, basis, target, scheme, canonical, terms })
    }

    pub fn polytope(&self) -> &MomentPolytope {
        &self.polytope
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn target(&self) -> &ExtremalAffineTarget {
        &self.target
    }

    pub fn scheme(&self) -> &PolytopeQuadrature {
        &self.scheme
    }

    pub fn n_coeffs(&self) -> usize {
        self.basis.len()
    }

    pub fn n_points(&self) -> usize {
        self.scheme.len()
    }

    pub fn potential(&self, coeffs: &[f64]) -> Result<SymplecticPotential> {
        SymplecticPotential::new(self.polytope.clone(), self.basis.clone(), coeffs.to_vec())
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.n_coeffs() {
            return Err(Error::LengthMismatch { expected: self.n_coeffs(), got: coeffs.len() });
        }
        Ok(())
    }

    fn partials_at(&self, i: usize, coeffs: &[f64]) -> Partials {
        let mut p = self.canonical[i];
        for (tp, c) in self.terms[i].iter().zip(coeffs) {
            for (o, t) in p.iter_mut().zip(tp) {
                *o += c * t;
            }
        }
        p
    }

    fn contract(&self, i: usize, sens: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let sens: Partials = std::array::from_fn(|k| sens.get(k).copied().unwrap_or(0.0));
        self.terms[i].iter().map(move |tp| tp.iter().zip(&sens).map(|(t, s)| t * s).sum())
    }

    /// Pointwise residual of the objective; `None` at an indefinite point.
    fn residual_at(&self, objective: Objective, i: usize, coeffs: &[f64]) -> Option<f64> {
        let p = self.partials_at(i, coeffs);
        let x = self.scheme.points[i];
        match objective {
            Objective::Calabi => curvature_from_partials(&p).map(|s| s - self.target.eval(x)),
            Objective::Conformal { kappa } => {
                let jet = HessianJet::from_partials(&p);
                let inv = InverseJet::new(&jet)?;
                let a = self.target.gradient();
                Some(conformal_defect(kappa, self.target.eval(x), inv.laplacian(a), inv.grad_sq(a)))
            }
        }
    }

    /// Pointwise residual and its sensitivity to the partial slots.
    fn residual_sensitivity_at(&self, objective: Objective, i: usize, coeffs: &[f64]) -> Option<(f64, Partials)> {
        let p = self.partials_at(i, coeffs);
        let x = self.scheme.points[i];
        let st = self.target.eval(x);
        match objective {
            Objective::Calabi => curvature_sensitivity(&p).map(|(s, sens)| (s - st, sens)),
            Objective::Conformal { kappa } => {
                let (fo, d_grad, d_lap) = first_order_sensitivity(&p, self.target.gradient())?;
                let mut sens = [0.0; JET_LEN];
                for k in 0..FIRST_ORDER_LEN {
                    sens[k] = -6.0 * st * d_lap[k] + 12.0 * d_grad[k];
                }
                Some((conformal_defect(kappa, st, fo.laplacian, fo.grad_sq), sens))
            }
        }
    }

    /// Pointwise residuals, or `None` if any point is infeasible.
    pub fn pointwise_residuals(&self, objective: Objective, coeffs: &[f64]) -> Option<Vec<f64>> {
        if coeffs.len() != self.n_coeffs() {
            return None;
        }
        (0..self.n_points()).into_par_iter().map(|i| self.residual_at(objective, i, coeffs)).collect()
    }

    /// Scalar curvature at every scheme point.
    pub fn curvature(&self, coeffs: &[f64]) -> Option<Vec<f64>> {
        if coeffs.len() != self.n_coeffs() {
            return None;
        }
        (0..self.n_points()).into_par_iter().map(|i| curvature_from_partials(&self.partials_at(i, coeffs))).collect()
    }

    /// `4π² Σ w̃ᵢ rᵢ²` without its gradient.
    pub fn value(&self, objective: Objective, coeffs: &[f64]) -> f64 {
        match self.pointwise_residuals(objective, coeffs) {
            Some(r) => FOUR_PI_SQ * weighted_sum_sq(&self.scheme.weights, &r),
            None => f64::INFINITY,
        }
    }

    pub fn evaluate(&self, objective: Objective, coeffs: &[f64]) -> ObjectiveEval {
        let n = self.n_coeffs();
        if coeffs.len() != n {
            return ObjectiveEval::infeasible(n);
        }
        let per_point: Option<Vec<(f64, Vec<f64>)>> = (0..self.n_points())
            .into_par_iter()
            .map(|i| {
                let (r, sens) = self.residual_sensitivity_at(objective, i, coeffs)?;
                Some((r, self.contract(i, &sens).collect()))
            })
            .collect();
        let Some(per_point) = per_point else {
            return ObjectiveEval::infeasible(n);
        };
        let mut value = 0.0;
        let mut gradient = vec![0.0; n];
        for ((r, dr), w) in per_point.iter().zip(&self.scheme.weights) {
            value += w * r * r;
            for (g, d) in gradient.iter_mut().zip(dr) {
                *g += w * r * d;
            }
        }
        for g in &mut gradient {
            *g *= 2.0 * FOUR_PI_SQ;
        }
        let value = FOUR_PI_SQ * value;
        if !value.is_finite() {
            return ObjectiveEval::infeasible(n);
        }
        ObjectiveEval { value, gradient, feasible: true }
    }

    pub fn residual_vector(&self, objective: Objective, coeffs: &[f64]) -> Result<ResidualVector> {
        self.check_len(coeffs)?;
        let r = self.pointwise_residuals(objective, coeffs).ok_or(Error::InfeasibleIntegrand)?;
        let residuals = DVector::from_iterator(r.len(), r.iter().zip(&self.scheme.weights).map(|(r, w)| w.sqrt() * r));
        if residuals.iter().all(|v| v.is_finite()) {
            Ok(ResidualVector { residuals })
        } else {
            Err(Error::InfeasibleIntegrand)
        }
    }

    /// Rows `√w̃ᵢ ∂rᵢ/∂c_k`.
    pub fn residual_jacobian(&self, objective: Objective, coeffs: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(coeffs)?;
        let rows: Option<Vec<Vec<f64>>> = (0..self.n_points())
            .into_par_iter()
            .map(|i| {
                let (_, sens) = self.residual_sensitivity_at(objective, i, coeffs)?;
                let sw = self.scheme.weights[i].sqrt();
                Some(self.contract(i, &sens).map(|d| sw * d).collect())
            })
            .collect();
        let rows = rows.ok_or(Error::InfeasibleIntegrand)?;
        Ok(DMatrix::from_fn(self.n_points(), self.n_coeffs(), |i, k| rows[i][k]))
    }

    /// `(∫(S − S_t)² / area)^{1/2}`.
    pub fn l2_error(&self, coeffs: &[f64]) -> Result<f64> {
        self.normalised_norm(Objective::Calabi, coeffs)
    }

    /// `(∫ defect² / area)^{1/2}` for the conformal defect.
    pub fn beta(&self, coeffs: &[f64], kappa: f64) -> Result<f64> {
        self.normalised_norm(Objective::Conformal { kappa }, coeffs)
    }

    fn normalised_norm(&self, objective: Objective, coeffs: &[f64]) -> Result<f64> {
        self.check_len(coeffs)?;
        let r = self.pointwise_residuals(objective, coeffs).ok_or(Error::InfeasibleIntegrand)?;
        let v = weighted_sum_sq(&self.scheme.weights, &r) / self.polytope.area();
        if v.is_finite() {
            Ok(v.sqrt())
        } else {
            Err(Error::InfeasibleIntegrand)
        }
    }

    /// `(|∇S_t|²_u, Δ_u S_t)` at every scheme point.
    pub fn target_first_order(&self, coeffs: &[f64]) -> Option<Vec<(f64, f64)>> {
        if coeffs.len() != self.n_coeffs() {
            return None;
        }
        let a = self.target.gradient();
        (0..self.n_points())
            .into_par_iter()
            .map(|i| {
                let jet = HessianJet::from_partials(&self.partials_at(i, coeffs));
                let inv = InverseJet::new(&jet)?;
                Some((inv.grad_sq(a), inv.laplacian(a)))
            })
            .collect()
    }
}

/// `κ − f³ − 6fΔf + 12|∇f|²`
pub fn conformal_defect(kappa: f64, f: f64, laplacian: f64, grad_sq: f64) -> f64 {
    kappa - f * f * f - 6.0 * f * laplacian + 12.0 * grad_sq
}

fn weighted_sum_sq(weights: &[f64], r: &[f64]) -> f64 {
    weights.iter().zip(r).map(|(w, r)| w * r * r).sum()
}

/// One-shot evaluation of `𝓘` for a standalone potential.
pub fn modified_calabi(
    u: &SymplecticPotential,
    target: &ExtremalAffineTarget,
    scheme: &PolytopeQuadrature,
) -> ObjectiveEval {
    one_shot(u, target, scheme, Objective::Calabi)
}

pub fn conformal_objective(
    u: &SymplecticPotential,
    target: &ExtremalAffineTarget,
    kappa: f64,
    scheme: &PolytopeQuadrature,
) -> ObjectiveEval {
    one_shot(u, target, scheme, Objective::Conformal { kappa })
}

fn one_shot(
    u: &SymplecticPotential,
    target: &ExtremalAffineTarget,
    scheme: &PolytopeQuadrature,
    o: Objective,
) -> ObjectiveEval {
    match CurvatureProblem::new(u.polytope().clone(), u.basis().clone(), *target, scheme.clone()) {
        Ok(p) => p.evaluate(o, u.coeffs()),
        Err(_) => ObjectiveEval::infeasible(u.coeffs().len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{build_clw_pentagon, build_square, solve_extremal_affine};
    use crate::quadrature::{clw_split_scheme, triangulated_scheme};
    use crate::CLW_A;

    const QUARTIC: [f64; 7] = [-0.09962, -0.1333, -0.04195, -0.03139, -0.01471, -0.01119, -0.007613];
    const KAPPA: f64 = 60.345668664;

    fn clw_problem(degree: u32, k: usize) -> CurvatureProblem {
        let poly = build_clw_pentagon(CLW_A).unwrap();
        let target = solve_extremal_affine(&poly).unwrap();
        let scheme = clw_split_scheme(&poly, k).unwrap();
        CurvatureProblem::new(poly, MonomialBasis::symmetric(degree).unwrap(), target, scheme).unwrap()
    }

    #[test]
    fn square_canonical_is_extremal() {
        let sq = build_square(1.0).unwrap();
        let target = solve_extremal_affine(&sq).unwrap();
        let scheme = triangulated_scheme(&sq, 6).unwrap();
        let p = CurvatureProblem::new(sq, MonomialBasis::symmetric(3).unwrap(), target, scheme).unwrap();
        let e = p.evaluate(Objective::Calabi, &[0.0; 4]);
        assert!(e.feasible);
        assert!(e.value < 1e-20);
        assert!(e.gradient.iter().all(|g| g.abs() < 1e-9));
        assert!(p.residual_vector(Objective::Calabi, &[0.0; 4]).unwrap().residuals.amax() < 1e-12);
    }

    #[test]
    fn quartic_l2_error() {
        let p = clw_problem(4, 10);
        let l2 = p.l2_error(&QUARTIC).unwrap();
        assert!((l2 - 0.13).abs() < 0.005, "{l2}");
    }

    #[test]
    fn residual_norm_matches_value() {
        let p = clw_problem(4, 20);
        assert_eq!(p.residual_vector(Objective::Calabi, &QUARTIC).unwrap().residuals.len(), 800);
        for o in [Objective::Calabi, Objective::Conformal { kappa: KAPPA }] {
            let ss = p.residual_vector(o, &QUARTIC).unwrap().sum_of_squares();
            let v = p.evaluate(o, &QUARTIC).value;
            assert!((FOUR_PI_SQ * ss - v).abs() <= 1e-12 * v);
        }
    }

    #[test]
    fn infeasible_is_in_band() {
        let p = clw_problem(2, 10);
        let e = p.evaluate(Objective::Calabi, &[0.0, -10.0]);
        assert!(!e.feasible);
        assert_eq!(e.value, f64::INFINITY);
        assert!(p.residual_vector(Objective::Calabi, &[0.0, -10.0]).is_err());
        assert_eq!(p.value(Objective::Calabi, &[0.0, -10.0]), f64::INFINITY);
    }

    #[test]
    fn canonical_baseline_positive() {
        let p = clw_problem(4, 20);
        let v = p.evaluate(Objective::Calabi, &[0.0; 7]).value;
        assert!(v > 1.0 && v.is_finite());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = clw_problem(5, 10);
        let c: Vec<f64> = (0..p.n_coeffs()).map(|k| -0.01 * (k as f64 + 1.0).recip()).collect();
        for o in [Objective::Calabi, Objective::Conformal { kappa: KAPPA }] {
            let e = p.evaluate(o, &c);
            for k in 0..c.len() {
                let (mut cp, mut cm) = (c.clone(), c.clone());
                cp[k] += 1e-6;
                cm[k] -= 1e-6;
                let fd = (p.value(o, &cp) - p.value(o, &cm)) / 2e-6;
                assert!((fd - e.gradient[k]).abs() <= 1e-5 * e.gradient[k].abs().max(1.0), "{o:?} {k}");
            }
        }
    }

    #[test]
    fn jacobian_rows_match_gradient() {
        let p = clw_problem(4, 10);
        for o in [Objective::Calabi, Objective::Conformal { kappa: KAPPA }] {
            let r = p.residual_vector(o, &QUARTIC).unwrap().residuals;
            let j = p.residual_jacobian(o, &QUARTIC).unwrap();
            let g = j.transpose() * r * (2.0 * FOUR_PI_SQ);
            let e = p.evaluate(o, &QUARTIC);
            for (a, b) in g.iter().zip(&e.gradient) {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn one_shot_wrappers_agree() {
        let p = clw_problem(4, 10);
        let u = p.potential(&QUARTIC).unwrap();
        assert_eq!(modified_calabi(&u, p.target(), p.scheme()), p.evaluate(Objective::Calabi, &QUARTIC));
        let o = Objective::Conformal { kappa: KAPPA };
        assert_eq!(conformal_objective(&u, p.target(), KAPPA, p.scheme()), p.evaluate(o, &QUARTIC));
    }
}

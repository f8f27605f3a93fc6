//! Geometric diagnostics of an approximate extremal potential.
//!
//! The extremal metric `g_k` is conformal to an Einstein metric
//! `g_e = S⁻² g_k` (with `S` the affine target). Integrals over the manifold
//! reduce to `4π²` times integrals over the polygon.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::CurvatureProblem;
use crate::polytope::{ExtremalAffineTarget, MomentPolytope, Vec2};
use crate::potential::{InverseJet, SymplecticPotential};
use crate::quadrature::PolytopeQuadrature;

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Lattice spacing for pointwise extrema.
pub const LATTICE_STEP: f64 = 0.01;
/// Offset of the lattice origin from the lower-left bounding-box corner.
pub const LATTICE_INSET: f64 = 1e-7;
/// Lattice points with some `l_r ≤ LATTICE_MARGIN` are dropped.
pub const LATTICE_MARGIN: f64 = 1e-9;

/// Euler characteristic and signature of the underlying 4-manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub euler: f64,
    pub signature: f64,
}

impl Topology {
    /// `CP² # 2 CP̄²`
    pub const TWO_POINT_BLOWUP: Self = Self { euler: 5.0, signature: -1.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EinsteinConstants {
    pub lambda: f64,
    pub kappa: f64,
    pub einstein_volume: f64,
}

/// `Λ = ((96π²χ + 144π²τ − ∫S²) / (8 Vol(g_e)))^{1/2}` with `Vol(g_e) = ∫S⁻⁴`,
/// both integrals taken against the Kähler volume.
pub fn einstein_constants(
    target: &ExtremalAffineTarget,
    scheme: &PolytopeQuadrature,
    topology: Topology,
) -> Result<EinsteinConstants> {
    let s2 = FOUR_PI_SQ * scheme.try_integrate(|x| target.eval(x).powi(2))?;
    let vol = FOUR_PI_SQ * scheme.try_integrate(|x| target.eval(x).powi(-4))?;
    let num = 96.0 * PI * PI * topology.euler + 144.0 * PI * PI * topology.signature - s2;
    let radicand = num / (8.0 * vol);
    if !(radicand >= 0.0) {
        return Err(Error::NegativeRadicand(radicand));
    }
    let lambda = radicand.sqrt();
    Ok(EinsteinConstants { lambda, kappa: 4.0 * lambda, einstein_volume: vol })
}

/// `∫|∇_e S^p|² dV_e` in closed form: `p²/(6(2p−1)) ∫(S⁴ − κS) S^{2p−5}`.
pub fn gradient_norm_oracle(
    target: &ExtremalAffineTarget,
    constants: &EinsteinConstants,
    p: f64,
    scheme: &PolytopeQuadrature,
) -> Result<f64> {
    if (2.0 * p - 1.0).abs() < 1e-12 {
        return Err(Error::InvalidParameter("the gradient-norm identity excludes p = 1/2".into()));
    }
    let k = constants.kappa;
    let integral = scheme.try_integrate(|x| {
        let s = target.eval(x);
        (s.powi(4) - k * s) * s.powf(2.0 * p - 5.0)
    })?;
    Ok(p * p / (6.0 * (2.0 * p - 1.0)) * FOUR_PI_SQ * integral)
}

// ---------------------------------------------------------------------------
// table rows

/// Points of the lattice `lo + LATTICE_INSET + step·(i, j)` strictly inside
/// the polygon.
pub fn lattice_samples(poly: &MomentPolytope, step: f64) -> Result<Vec<Vec2>> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("lattice step must be positive, got {step}")));
    }
    let (lo, hi) = poly.bounding_box();
    let axis = |lo: f64, hi: f64| {
        let n = ((hi - lo - LATTICE_INSET) / step).ceil().max(0.0) as usize;
        (0..n).map(move |i| lo + LATTICE_INSET + step * i as f64).filter(move |v| *v < hi)
    };
    let mut out = Vec::new();
    for y in axis(lo.y, hi.y) {
        for x in axis(lo.x, hi.x) {
            let p = Vec2::new(x, y);
            if poly.min_facet_value(p) > LATTICE_MARGIN {
                out.push(p);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub degree: u32,
    pub l2_error: f64,
    pub max_dev: f64,
    pub min_dev: f64,
    pub beta: f64,
    pub grad_s_norm: f64,
    pub grad_sinv_norm: f64,
}

/// `(max, min)` of `S − S_t` over `samples`.
pub fn deviation_extrema(
    u: &SymplecticPotential,
    target: &ExtremalAffineTarget,
    samples: &[Vec2],
) -> Result<(f64, f64)> {
    let devs: Vec<f64> =
        samples.par_iter().map(|x| u.scalar_curvature(*x).map(|s| s - target.eval(*x))).collect::<Result<_>>()?;
    let max = devs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = devs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((max, min))
}

/// One table row: integrated quantities on `scheme`, extrema on `samples`.
pub fn diagnostics_row(
    u: &SymplecticPotential,
    target: &ExtremalAffineTarget,
    constants: &EinsteinConstants,
    scheme: &PolytopeQuadrature,
    samples: &[Vec2],
) -> Result<DiagnosticsRow> {
    let problem = CurvatureProblem::new(u.polytope().clone(), u.basis().clone(), *target, scheme.clone())?;
    let c = u.coeffs();
    let first = problem.target_first_order(c).ok_or(Error::InfeasibleIntegrand)?;
    let (mut gs, mut gsinv) = (0.0, 0.0);
    for ((x, w), (g2, _)) in scheme.points.iter().zip(&scheme.weights).zip(&first) {
        let s = target.eval(*x);
        gs += w * g2 * s.powi(-2);
        gsinv += w * g2 * s.powi(-6);
    }
    let (max_dev, min_dev) = deviation_extrema(u, target, samples)?;
    Ok(DiagnosticsRow {
        degree: u.basis().degree(),
        l2_error: problem.l2_error(c)?,
        max_dev,
        min_dev,
        beta: problem.beta(c, constants.kappa)?,
        grad_s_norm: FOUR_PI_SQ * gs,
        grad_sinv_norm: FOUR_PI_SQ * gsinv,
    })
}

// ---------------------------------------------------------------------------
// Rayleigh quotients

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Invariant under `x₁ ↔ x₂`.
    Plus,
    /// Odd under `x₁ ↔ x₂`.
    Minus,
}

/// Trial polynomials of one parity up to `degree`, led by `x₁ ± x₂`.
///
/// The term `(i, j)` with `i ≤ j` is `x₁ⁱx₂ʲ + x₁ʲx₂ⁱ` (or `x₁ⁱx₂ⁱ`) for
/// `Plus` and `x₁ʲx₂ⁱ − x₁ⁱx₂ʲ` for `Minus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFamily {
    pub parity: Parity,
    pub terms: Vec<(u32, u32)>,
}

impl TrialFamily {
    pub fn new(parity: Parity, degree: u32) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidParameter("trial family degree must be at least 1".into()));
        }
        let terms = (1..=degree)
            .flat_map(|d| {
                let top = match parity {
                    Parity::Plus => d / 2,
                    Parity::Minus => (d - 1) / 2,
                };
                (0..=top).rev().map(move |i| (i, d - i)).filter(move |&(i, j)| parity == Parity::Plus || i < j)
            })
            .collect();
        Ok(Self { parity, terms })
    }

    /// The cubic families `φ⁺` and `φ⁻`.
    pub fn cubic(parity: Parity) -> Self {
        Self::new(parity, 3).expect("degree 3 is valid")
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Values and gradients of every term at `x`.
    fn eval(&self, x: Vec2) -> Vec<(f64, Vec2)> {
        let mono = |i: u32, j: u32| -> (f64, Vec2) {
            let p = |b: f64, e: u32| if e == 0 { 1.0 } else { b.powi(e as i32) };
            let dp = |b: f64, e: u32| if e == 0 { 0.0 } else { e as f64 * p(b, e - 1) };
            (p(x.x, i) * p(x.y, j), Vec2::new(dp(x.x, i) * p(x.y, j), p(x.x, i) * dp(x.y, j)))
        };
        self.terms
            .iter()
            .map(|&(i, j)| {
                let (a, ga) = mono(j, i);
                if i == j {
                    return (a, ga);
                }
                let (b, gb) = mono(i, j);
                match self.parity {
                    Parity::Plus => (a + b, ga + gb),
                    Parity::Minus => (a - b, ga - gb),
                }
            })
            .collect()
    }
}

/// Density against which `Plus` trial functions are made mean-free.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Centring {
    /// `S⁻⁴ dx`, the Einstein volume form.
    #[default]
    Einstein,
    /// `dx`, the Kähler volume form.
    Kahler,
}

/// Term values and gradients at a point, with the inverse Hessian there.
type PointTerms = (Vec<(f64, Vec2)>, nalgebra::Matrix2<f64>);

/// The two quadratic forms of the Einstein Rayleigh quotient over a family.
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighForms {
    pub family: TrialFamily,
    /// `4π² ∫ S⁻² ∇φ_kᵀ H⁻¹ ∇φ_l`
    pub numerator: DMatrix<f64>,
    /// `4π² ∫ S⁻⁴ φ̃_k φ̃_l`, with `φ̃` mean-free for `Plus`.
    pub denominator: DMatrix<f64>,
    /// Means of the terms under the centring density (zero for `Minus`).
    pub means: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenAnsatz {
    pub parity: Parity,
    /// Coefficients of the non-leading terms, leading term scaled to 1.
    pub coefficients: Vec<f64>,
    /// Constant making the ansatz integrate to zero against the centring density.
    pub mean_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimate {
    pub ansatz: EigenAnsatz,
    /// Minimal quotient in units of `Λ`.
    pub eigenvalue: f64,
}

impl RayleighForms {
    pub fn build(
        u: &SymplecticPotential,
        target: &ExtremalAffineTarget,
        family: TrialFamily,
        scheme: &PolytopeQuadrature,
    ) -> Result<Self> {
        Self::build_centred(u, target, family, scheme, Centring::Einstein)
    }

    pub fn build_centred(
        u: &SymplecticPotential,
        target: &ExtremalAffineTarget,
        family: TrialFamily,
        scheme: &PolytopeQuadrature,
        centring: Centring,
    ) -> Result<Self> {
        let m = family.len();
        let per_point: Vec<PointTerms> = scheme
            .points
            .par_iter()
            .map(|x| {
                let jet = u.jet(*x)?;
                let inv = InverseJet::new(&jet).ok_or(Error::IndefiniteHessian(x.x, x.y))?;
                Ok((family.eval(*x), inv.g))
            })
            .collect::<Result<_>>()?;

        let mut means = DVector::zeros(m);
        if family.parity == Parity::Plus {
            let mut mass = 0.0;
            for ((x, w), (vals, _)) in scheme.points.iter().zip(&scheme.weights).zip(&per_point) {
                let rho = match centring {
                    Centring::Einstein => w * target.eval(*x).powi(-4),
                    Centring::Kahler => *w,
                };
                mass += rho;
                for (k, (v, _)) in vals.iter().enumerate() {
                    means[k] += rho * v;
                }
            }
            means /= mass;
        }

        let mut num = DMatrix::zeros(m, m);
        let mut den = DMatrix::zeros(m, m);
        for ((x, w), (vals, g)) in scheme.points.iter().zip(&scheme.weights).zip(&per_point) {
            let s = target.eval(*x);
            let (wn, wd) = (w * s.powi(-2), w * s.powi(-4));
            for k in 0..m {
                let gk = g * vals[k].1;
                let vk = vals[k].0 - means[k];
                for l in 0..=k {
                    num[(k, l)] += wn * gk.dot(&vals[l].1);
                    den[(k, l)] += wd * vk * (vals[l].0 - means[l]);
                }
            }
        }
        for k in 0..m {
            for l in 0..k {
                num[(l, k)] = num[(k, l)];
                den[(l, k)] = den[(k, l)];
            }
        }
        Ok(Self { family, numerator: num * FOUR_PI_SQ, denominator: den * FOUR_PI_SQ, means })
    }

    /// `vᵀNv / vᵀDv` for a full coefficient vector (leading term included).
    pub fn quotient(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.numerator * v)) / v.dot(&(&self.denominator * v))
    }

    /// Smallest generalised eigenpair of `(N, D)`, normalised so the leading
    /// coefficient is 1. Returns the raw eigenvalue.
    pub fn minimize(&self) -> Result<(f64, DVector<f64>)> {
        let chol = self.denominator.clone().cholesky().ok_or(Error::IndefiniteGram)?;
        let l = chol.l();
        let linv = l.clone().try_inverse().ok_or(Error::IndefiniteGram)?;
        let c = &linv * &self.numerator * linv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c);
        let (k, lambda) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::IndefiniteGram)?;
        let y = eig.eigenvectors.column(k).into_owned();
        let v = l.transpose().solve_upper_triangular(&y).ok_or(Error::IndefiniteGram)?;
        if v[0].abs() < 1e-300 {
            return Err(Error::SingularSystem("minimising trial function has no leading term".into()));
        }
        let v = &v / v[0];
        Ok((lambda, v))
    }

    pub fn ansatz(&self, v: &DVector<f64>) -> EigenAnsatz {
        EigenAnsatz {
            parity: self.family.parity,
            coefficients: v.iter().skip(1).copied().collect(),
            mean_offset: -v.dot(&self.means),
        }
    }
}

/// Minimises the Einstein Rayleigh quotient over the cubic family of the
/// given parity; the estimate is reported in units of `Λ`.
pub fn rayleigh_minimize(
    u: &SymplecticPotential,
    target: &ExtremalAffineTarget,
    constants: &EinsteinConstants,
    parity: Parity,
    scheme: &PolytopeQuadrature,
) -> Result<EigenEstimate> {
    rayleigh_minimize_family(u, target, constants, TrialFamily::cubic(parity), scheme)
}

pub fn rayleigh_minimize_family(
    u: &SymplecticPotential,
    target: &ExtremalAffineTarget,
    constants: &EinsteinConstants,
    family: TrialFamily,
    scheme: &PolytopeQuadrature,
) -> Result<EigenEstimate> {
    let forms = RayleighForms::build(u, target, family, scheme)?;
    let (lambda, v) = forms.minimize()?;
    Ok(EigenEstimate { ansatz: forms.ansatz(&v), eigenvalue: lambda / constants.lambda })
}

// ---------------------------------------------------------------------------
// stability

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Maximum of `Δ_k S² = κ/3 + 2|∇S|² − S³/3` over the samples.
    pub max_laplacian_s2: f64,
    pub argmax: [f64; 2],
    pub half_kappa: f64,
    pub five_sixteenths_kappa: f64,
    /// `max Δ_k S² < κ/2`
    pub unstable: bool,
    /// `max Δ_k S² < 5κ/16`
    pub cone_unstable: bool,
    /// Open interval `(4/3, 2)` in units of `Λ`.
    pub conformal_interval: [f64; 2],
    pub plus: EigenEstimate,
    pub minus: EigenEstimate,
    pub plus_in_interval: bool,
    pub minus_in_interval: bool,
}

impl StabilityReport {
    pub fn conformally_unstable(&self) -> bool {
        self.plus_in_interval || self.minus_in_interval
    }
}

pub fn stability_report(
    u: &SymplecticPotential,
    target: &ExtremalAffineTarget,
    constants: &EinsteinConstants,
    scheme: &PolytopeQuadrature,
    samples: &[Vec2],
) -> Result<StabilityReport> {
    let k = constants.kappa;
    let a = target.gradient();
    let values: Vec<f64> = samples
        .par_iter()
        .map(|x| {
            let jet = u.jet(*x)?;
            let inv = InverseJet::new(&jet).ok_or(Error::IndefiniteHessian(x.x, x.y))?;
            let s = target.eval(*x);
            Ok(k / 3.0 + 2.0 * inv.grad_sq(a) - s.powi(3) / 3.0)
        })
        .collect::<Result<_>>()?;
    let (imax, max) = values
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InvalidParameter("no sample points".into()))?;

    let plus = rayleigh_minimize(u, target, constants, Parity::Plus, scheme)?;
    let minus = rayleigh_minimize(u, target, constants, Parity::Minus, scheme)?;
    let interval = [4.0 / 3.0, 2.0];
    let inside = |e: &EigenEstimate| e.eigenvalue > interval[0] && e.eigenvalue < interval[1];
    Ok(StabilityReport {
        max_laplacian_s2: max,
        argmax: [samples[imax].x, samples[imax].y],
        half_kappa: k / 2.0,
        five_sixteenths_kappa: 5.0 * k / 16.0,
        unstable: max < k / 2.0,
        cone_unstable: max < 5.0 * k / 16.0,
        conformal_interval: interval,
        plus_in_interval: inside(&plus),
        minus_in_interval: inside(&minus),
        plus,
        minus,
    })
}

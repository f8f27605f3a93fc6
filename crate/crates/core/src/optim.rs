//! Polak–Ribière conjugate gradient, Levenberg–Marquardt, and degree sweeps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{CurvatureProblem, Objective, ObjectiveEval};
use crate::polytope::{ExtremalAffineTarget, MomentPolytope};
use crate::potential::MonomialBasis;
use crate::quadrature::PolytopeQuadrature;

const RIDDER_MAX_ITER: usize = 60;
const MAX_BRACKET_DOUBLINGS: usize = 50;
const MIN_STEP: f64 = 1e-14;
const MAX_DAMPING: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgConfig {
    pub max_rounds: usize,
    /// `None` means four times the number of coefficients.
    pub steps_per_round: Option<usize>,
    pub value_tolerance: f64,
    pub line_search_bracket: f64,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self { max_rounds: 25, steps_per_round: None, value_tolerance: 1e-9, line_search_bracket: 1.0 }
    }
}

impl CgConfig {
    fn validate(&self) -> Result<()> {
        if self.max_rounds == 0
            || self.steps_per_round == Some(0)
            || !(self.value_tolerance > 0.0)
            || !(self.line_search_bracket > 0.0)
        {
            return Err(Error::InvalidParameter(format!("CG configuration must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub function_tolerance: f64,
    pub step_tolerance: f64,
    pub max_evaluations: usize,
    pub initial_damping: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { function_tolerance: 1e-13, step_tolerance: 1e-13, max_evaluations: 6000, initial_damping: 1e-2 }
    }
}

impl LmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.function_tolerance > 0.0)
            || !(self.step_tolerance > 0.0)
            || self.max_evaluations == 0
            || !(self.initial_damping > 0.0)
        {
            return Err(Error::InvalidParameter(format!("LM configuration must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ValueConverged,
    StepConverged,
    BudgetExhausted,
    InfeasibleStart,
}

/// One accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub value: f64,
    pub gradient_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimReport {
    pub final_coeffs: Vec<f64>,
    pub final_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    #[serde(default)]
    pub history: Vec<IterationLog>,
}

impl OptimReport {
    pub fn converged(&self) -> bool {
        matches!(self.termination, Termination::ValueConverged | Termination::StepConverged)
    }

    /// CSV run log, one line per accepted iterate.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iteration,value,gradient_norm,step\n");
        for (i, h) in self.history.iter().enumerate() {
            s.push_str(&format!("{},{:e},{:e},{:e}\n", i + 1, h.value, h.gradient_norm, h.step));
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Ridder

/// Root of `g` in `bracket` by Ridder's method.
///
/// If `g` does not change sign on the bracket it is widened about its centre,
/// doubling up to 50 times.
pub fn ridder_root<G: FnMut(f64) -> f64>(mut g: G, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    let (mut glo, mut ghi) = (g(lo), g(hi));
    let mut doublings = 0;
    while glo * ghi > 0.0 || glo.is_nan() || ghi.is_nan() {
        if doublings == MAX_BRACKET_DOUBLINGS {
            return Err(Error::NoSignChange { lo, hi });
        }
        let (mid, half) = (0.5 * (lo + hi), (hi - lo).max(MIN_STEP));
        lo = mid - half;
        hi = mid + half;
        glo = g(lo);
        ghi = g(hi);
        doublings += 1;
    }
    Ok(ridder_bracketed(&mut g, lo, glo, hi, ghi))
}

fn ridder_bracketed<G: FnMut(f64) -> f64>(g: &mut G, mut lo: f64, mut glo: f64, mut hi: f64, mut ghi: f64) -> f64 {
    if glo == 0.0 {
        return lo;
    }
    if ghi == 0.0 {
        return hi;
    }
    let scale = glo.abs().max(ghi.abs());
    let ftol = 1e-12 * scale;
    let mut ans = if glo.abs() < ghi.abs() { lo } else { hi };
    for _ in 0..RIDDER_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let gmid = g(mid);
        if gmid.abs() <= ftol {
            return mid;
        }
        let s = (gmid * gmid - glo * ghi).sqrt();
        if s == 0.0 || !s.is_finite() {
            return mid;
        }
        let sign = if glo >= ghi { 1.0 } else { -1.0 };
        let next = mid + (mid - lo) * sign * gmid / s;
        let gnext = g(next);
        ans = next;
        if gnext.abs() <= ftol {
            return ans;
        }
        if gmid.signum() != gnext.signum() {
            (lo, glo, hi, ghi) = if mid < next { (mid, gmid, next, gnext) } else { (next, gnext, mid, gmid) };
        } else if glo.signum() != gnext.signum() {
            hi = next;
            ghi = gnext;
        } else {
            lo = next;
            glo = gnext;
        }
        if (hi - lo).abs() <= MIN_STEP * (1.0 + ans.abs()) {
            return ans;
        }
    }
    ans
}

// ---------------------------------------------------------------------------
// conjugate gradient

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(x, d)| x + t * d).collect()
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> ObjectiveEval> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> ObjectiveEval {
        self.evaluations += 1;
        (self.f)(x)
    }
}

/// Exact line minimisation along a unit direction `d` with `φ'(0) < 0`.
///
/// Returns the step length and the evaluation there, or `None` if no point
/// with a lower value was found.
fn line_search<F: FnMut(&[f64]) -> ObjectiveEval>(
    obj: &mut Counted<F>,
    x: &[f64],
    start: &ObjectiveEval,
    d: &[f64],
    initial: f64,
) -> Option<(f64, ObjectiveEval)> {
    let f0 = start.value;
    let mut best: Option<(f64, ObjectiveEval)> = None;
    let consider = |t: f64, e: &ObjectiveEval, best: &mut Option<(f64, ObjectiveEval)>| {
        if e.feasible && e.value < best.as_ref().map_or(f0, |b| b.1.value) {
            *best = Some((t, e.clone()));
        }
    };

    // bracket a zero of φ' to the right of the origin: shrink while the trial
    // is infeasible or higher than the lower end, grow while still descending
    let (mut lo, mut flo, mut glo) = (0.0, f0, dot(&start.gradient, d));
    let mut cap = f64::INFINITY;
    let mut t = initial;
    let mut hi = None;
    for _ in 0..2 * MAX_BRACKET_DOUBLINGS {
        let e = obj.eval(&axpy(x, t, d));
        if !e.feasible || e.value > flo {
            cap = t;
            t = lo + 0.5 * (t - lo);
            if t - lo < MIN_STEP * (1.0 + lo) {
                break;
            }
            continue;
        }
        consider(t, &e, &mut best);
        let slope = dot(&e.gradient, d);
        if slope >= 0.0 {
            hi = Some((t, slope));
            break;
        }
        let grown = t + 2.0 * (t - lo);
        (lo, flo, glo) = (t, e.value, slope);
        t = if grown < cap { grown } else { 0.5 * (lo + cap) };
    }
    let Some((hi, ghi)) = hi else {
        return best;
    };

    let mut trials = Vec::new();
    let root = ridder_bracketed(
        &mut |s: f64| {
            let e = obj.eval(&axpy(x, s, d));
            let slope = if e.feasible { dot(&e.gradient, d) } else { f64::INFINITY };
            trials.push((s, e));
            slope
        },
        lo,
        glo,
        hi,
        ghi,
    );
    for (s, e) in &trials {
        consider(*s, e, &mut best);
    }
    if !trials.iter().any(|(s, _)| *s == root) {
        let e = obj.eval(&axpy(x, root, d));
        consider(root, &e, &mut best);
    }
    best
}

/// Polak–Ribière (PR+) conjugate gradient with exact line searches.
///
/// Each round starts from steepest descent and runs `steps_per_round` steps;
/// the run stops once a whole round changes the value by less than
/// `value_tolerance`, or after `max_rounds`.
pub fn cg_minimize<F>(objective: F, x0: &[f64], cfg: &CgConfig) -> Result<OptimReport>
where
    F: FnMut(&[f64]) -> ObjectiveEval,
{
    cfg.validate()?;
    let mut obj = Counted { f: objective, evaluations: 0 };
    let mut x = x0.to_vec();
    let mut e = obj.eval(&x);
    if !e.feasible {
        return Err(Error::InfeasibleStart);
    }
    let n = x.len();
    let steps = cfg.steps_per_round.unwrap_or(4 * n.max(1));
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut termination = Termination::BudgetExhausted;

    for _ in 0..cfg.max_rounds {
        let round_start = e.value;
        let mut r: Vec<f64> = e.gradient.iter().map(|g| -g).collect();
        let mut h = r.clone();
        let mut stalled = false;
        for _ in 0..steps {
            let mut hn = norm(&h);
            if hn == 0.0 || norm(&r) == 0.0 {
                stalled = true;
                break;
            }
            if dot(&h, &r) <= 0.0 {
                h = r.clone();
                hn = norm(&h);
            }
            let d: Vec<f64> = h.iter().map(|v| v / hn).collect();
            let Some((t, next)) = line_search(&mut obj, &x, &e, &d, cfg.line_search_bracket) else {
                stalled = true;
                break;
            };
            x = axpy(&x, t, &d);
            e = next;
            iterations += 1;
            let r_new: Vec<f64> = e.gradient.iter().map(|g| -g).collect();
            history.push(IterationLog { value: e.value, gradient_norm: norm(&r_new), step: t });
            let rr = dot(&r, &r);
            let beta = (dot(&r_new, &r_new) - dot(&r_new, &r)) / rr;
            let beta = if beta.is_finite() { beta.max(0.0) } else { 0.0 };
            h = r_new.iter().zip(&h).map(|(r, h)| r + beta * h).collect();
            r = r_new;
        }
        if (round_start - e.value).abs() < cfg.value_tolerance {
            termination = Termination::ValueConverged;
            break;
        }
        if stalled && (round_start - e.value).abs() == 0.0 {
            termination = Termination::StepConverged;
            break;
        }
    }
    Ok(OptimReport {
        final_coeffs: x,
        final_value: e.value,
        iterations,
        evaluations: obj.evaluations,
        termination,
        history,
    })
}

// ---------------------------------------------------------------------------
// Levenberg–Marquardt

/// A residual map `r(c)` with Jacobian; `None` marks an infeasible point.
pub trait LeastSquares {
    fn residuals(&self, c: &[f64]) -> Option<DVector<f64>>;
    fn jacobian(&self, c: &[f64]) -> Option<DMatrix<f64>>;
}

/// Solves `(JᵀJ + λD)δ = −Jᵀr` through a QR factorisation of the stacked
/// system `[J; √(λD)] δ ≈ [−r; 0]`.
fn damped_step(j: &DMatrix<f64>, r: &DVector<f64>, diag: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let (m, n) = j.shape();
    let mut a = DMatrix::zeros(m + n, n);
    a.rows_mut(0, m).copy_from(j);
    for k in 0..n {
        a[(m + k, k)] = (lambda * diag[k]).sqrt();
    }
    let mut rhs = DVector::zeros(m + n);
    rhs.rows_mut(0, m).copy_from(&(-r));
    let qr = a.qr();
    let rmat = qr.r();
    let dmax = rmat.diagonal().amax();
    if !(dmax > 0.0) || rmat.diagonal().iter().any(|v| v.abs() <= 1e-14 * dmax) {
        return None;
    }
    let qtb = qr.q().transpose() * rhs;
    let delta = rmat.solve_upper_triangular(&qtb)?;
    delta.iter().all(|v| v.is_finite()).then_some(delta)
}

/// Levenberg–Marquardt with diagonal scaling `D = diag(JᵀJ)` and ×10/÷10
/// damping updates.
pub fn lm_minimize<P: LeastSquares + ?Sized>(problem: &P, x0: &[f64], cfg: &LmConfig) -> Result<OptimReport> {
    cfg.validate()?;
    let mut x = DVector::from_column_slice(x0);
    let mut r = problem.residuals(x.as_slice()).ok_or(Error::InfeasibleStart)?;
    let mut evaluations = 1;
    let mut ss = r.norm_squared();
    if !ss.is_finite() {
        return Err(Error::InfeasibleStart);
    }
    let mut j = problem.jacobian(x.as_slice()).ok_or(Error::InfeasibleStart)?;
    let mut lambda = cfg.initial_damping;
    let mut iterations = 0;
    let mut history = Vec::new();

    let termination = loop {
        if evaluations >= cfg.max_evaluations {
            break Termination::BudgetExhausted;
        }
        let g = j.transpose() * &r;
        let diag = DVector::from_iterator(j.ncols(), j.column_iter().map(|c| c.norm_squared()));
        let Some(delta) = damped_step(&j, &r, &diag, lambda) else {
            lambda *= 10.0;
            if lambda > MAX_DAMPING {
                return Err(Error::SingularNormalEquations(lambda));
            }
            continue;
        };
        let step = delta.norm();
        if step <= cfg.step_tolerance * (cfg.step_tolerance + x.norm()) {
            break Termination::StepConverged;
        }
        let trial = &x + &delta;
        let rt = problem.residuals(trial.as_slice());
        evaluations += 1;
        match rt.map(|rt| (rt.norm_squared(), rt)) {
            Some((sst, rt)) if sst < ss => {
                let change = (ss - sst) / ss;
                x = trial;
                r = rt;
                ss = sst;
                lambda /= 10.0;
                iterations += 1;
                j = problem.jacobian(x.as_slice()).ok_or(Error::InfeasibleIntegrand)?;
                history.push(IterationLog { value: ss, gradient_norm: 2.0 * g.norm(), step });
                if change <= cfg.function_tolerance {
                    break Termination::ValueConverged;
                }
            }
            _ => lambda *= 10.0,
        }
    };
    Ok(OptimReport {
        final_coeffs: x.iter().copied().collect(),
        final_value: ss,
        iterations,
        evaluations,
        termination,
        history,
    })
}

/// A [`CurvatureProblem`] paired with an objective.
pub struct Functional<'a> {
    pub problem: &'a CurvatureProblem,
    pub objective: Objective,
}

impl Functional<'_> {
    pub fn eval(&self, c: &[f64]) -> ObjectiveEval {
        self.problem.evaluate(self.objective, c)
    }
}

impl LeastSquares for Functional<'_> {
    fn residuals(&self, c: &[f64]) -> Option<DVector<f64>> {
        self.problem.residual_vector(self.objective, c).ok().map(|r| r.residuals)
    }

    fn jacobian(&self, c: &[f64]) -> Option<DMatrix<f64>> {
        self.problem.residual_jacobian(self.objective, c).ok()
    }
}

// ---------------------------------------------------------------------------
// sweeps

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cg,
    Lm,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverConfig {
    pub cg: CgConfig,
    pub lm: LmConfig,
}

/// Minimises `objective` over `problem`'s coefficients from `x0`.
///
/// LM reports the plain sum of squares; the returned `final_value` is
/// rescaled to the objective's `4π²` normalisation so both methods agree.
pub fn minimize(
    problem: &CurvatureProblem,
    objective: Objective,
    method: Method,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<OptimReport> {
    let f = Functional { problem, objective };
    match method {
        Method::Cg => cg_minimize(|c| f.eval(c), x0, &cfg.cg),
        Method::Lm => {
            let mut rep = lm_minimize(&f, x0, &cfg.lm)?;
            rep.final_value = problem.value(objective, &rep.final_coeffs);
            Ok(rep)
        }
    }
}

/// Shared inputs of a degree sweep.
#[derive(Debug, Clone)]
pub struct SweepProblem {
    pub polytope: MomentPolytope,
    pub target: ExtremalAffineTarget,
    pub scheme: PolytopeQuadrature,
    pub objective: Objective,
    pub symmetric: bool,
}

impl SweepProblem {
    pub fn basis(&self, degree: u32) -> Result<MonomialBasis> {
        if self.symmetric {
            MonomialBasis::symmetric(degree)
        } else {
            MonomialBasis::full(degree)
        }
    }

    pub fn at_degree(&self, degree: u32) -> Result<CurvatureProblem> {
        CurvatureProblem::new(self.polytope.clone(), self.basis(degree)?, self.target, self.scheme.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub degree: u32,
    pub outcome: Result<OptimReport>,
}

/// Runs the optimiser at each degree in turn, warm-starting from the previous
/// degree's coefficients padded with zeros (cold start after a failure).
/// `on_entry` sees every entry as soon as it is available.
pub fn degree_sweep<C>(
    sweep: &SweepProblem,
    degrees: &[u32],
    method: Method,
    cfg: &SolverConfig,
    mut on_entry: C,
) -> Result<Vec<SweepEntry>>
where
    C: FnMut(&CurvatureProblem, &SweepEntry),
{
    if degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sweep degrees must be strictly increasing".into()));
    }
    let mut out = Vec::with_capacity(degrees.len());
    let mut previous: Option<Vec<f64>> = None;
    for &degree in degrees {
        let problem = sweep.at_degree(degree)?;
        let mut x0 = previous.take().unwrap_or_default();
        x0.resize(problem.n_coeffs(), 0.0);
        let outcome = minimize(&problem, sweep.objective, method, &x0, cfg);
        if let Ok(rep) = &outcome {
            previous = Some(rep.final_coeffs.clone());
        }
        let entry = SweepEntry { degree, outcome };
        on_entry(&problem, &entry);
        out.push(entry);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic<'a>(a: &'a DMatrix<f64>, b: &'a DVector<f64>) -> impl Fn(&[f64]) -> ObjectiveEval + 'a {
        move |x: &[f64]| {
            let x = DVector::from_column_slice(x);
            let ax = a * &x;
            ObjectiveEval {
                value: 0.5 * x.dot(&ax) - b.dot(&x),
                gradient: (ax - b).iter().copied().collect(),
                feasible: true,
            }
        }
    }

    #[test]
    fn ridder_examples() {
        assert!((ridder_root(|t| t - 3.0, (0.0, 10.0)).unwrap() - 3.0).abs() < 1e-12);
        assert!((ridder_root(|t| t * t * t - 2.0, (0.0, 2.0)).unwrap() - 2f64.cbrt()).abs() < 1e-12);
        assert!(matches!(ridder_root(|t| t * t + 1.0, (0.0, 1.0)), Err(Error::NoSignChange { .. })));
        assert!((ridder_root(|t| t - 30.0, (0.0, 1.0)).unwrap() - 30.0).abs() < 1e-10);
    }

    #[test]
    fn cg_on_separable_quadratic() {
        let f = |x: &[f64]| ObjectiveEval {
            value: (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2),
            gradient: vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] + 2.0)],
            feasible: true,
        };
        let rep = cg_minimize(f, &[0.0, 0.0], &CgConfig::default()).unwrap();
        assert!((rep.final_coeffs[0] - 1.0).abs() < 1e-10);
        assert!((rep.final_coeffs[1] + 2.0).abs() < 1e-10);
        assert!(rep.converged());
        assert!(rep.history[0].value < 1e-20);
    }

    #[test]
    fn cg_rejects_infeasible_start() {
        let f = |_: &[f64]| ObjectiveEval::infeasible(1);
        assert_eq!(cg_minimize(f, &[0.0], &CgConfig::default()).unwrap_err(), Error::InfeasibleStart);
    }

    #[test]
    fn cg_respects_infeasible_region() {
        // minimum at 3 but the objective is undefined beyond 2
        let f = |x: &[f64]| {
            if x[0] >= 2.0 {
                ObjectiveEval::infeasible(1)
            } else {
                ObjectiveEval { value: (x[0] - 3.0).powi(2), gradient: vec![2.0 * (x[0] - 3.0)], feasible: true }
            }
        };
        let rep = cg_minimize(f, &[0.0], &CgConfig::default()).unwrap();
        assert!(rep.final_coeffs[0] < 2.0 && rep.final_coeffs[0] > 1.9);
        assert!(rep.final_value <= 9.0);
    }

    #[test]
    fn cg_matches_linear_solve() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let b = DVector::from_column_slice(&[1.0, -2.0, 0.5]);
        let exact = a.clone().lu().solve(&b).unwrap();
        let cfg = CgConfig { max_rounds: 1, steps_per_round: Some(3), ..CgConfig::default() };
        let rep = cg_minimize(quadratic(&a, &b), &[0.0; 3], &cfg).unwrap();
        for (x, e) in rep.final_coeffs.iter().zip(exact.iter()) {
            assert!((x - e).abs() < 1e-10);
        }
    }

    struct Linear {
        a: DMatrix<f64>,
        b: DVector<f64>,
    }

    impl LeastSquares for Linear {
        fn residuals(&self, c: &[f64]) -> Option<DVector<f64>> {
            Some(&self.a * DVector::from_column_slice(c) - &self.b)
        }
        fn jacobian(&self, _: &[f64]) -> Option<DMatrix<f64>> {
            Some(self.a.clone())
        }
    }

    #[test]
    fn lm_linear_least_squares() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 2.0, 4.0]);
        let exact = (a.transpose() * &a).lu().solve(&(a.transpose() * &b)).unwrap();
        let cfg = LmConfig { initial_damping: 1e-14, ..LmConfig::default() };
        let rep = lm_minimize(&Linear { a, b }, &[0.0, 0.0], &cfg).unwrap();
        assert!(rep.iterations >= 1);
        let first = &rep.history[0];
        assert!(first.value.is_finite());
        for (x, e) in rep.final_coeffs.iter().zip(exact.iter()) {
            assert!((x - e).abs() < 1e-10);
        }
    }

    #[test]
    fn lm_rejects_degenerate_basis() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        let b = DVector::from_column_slice(&[1.0, 1.0, 1.0]);
        let err = lm_minimize(&Linear { a, b }, &[0.0, 0.0], &LmConfig::default()).unwrap_err();
        assert!(matches!(err, Error::SingularNormalEquations(_)));
    }

    #[test]
    fn config_validation() {
        let f = |_: &[f64]| ObjectiveEval { value: 0.0, gradient: vec![0.0], feasible: true };
        let bad = CgConfig { value_tolerance: 0.0, ..CgConfig::default() };
        assert!(cg_minimize(f, &[0.0], &bad).is_err());
        let a = DMatrix::identity(1, 1);
        let b = DVector::zeros(1);
        let bad = LmConfig { max_evaluations: 0, ..LmConfig::default() };
        assert!(lm_minimize(&Linear { a, b }, &[0.0], &bad).is_err());
    }

    #[test]
    fn history_csv_has_one_line_per_iterate() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_column_slice(&[1.0, 1.0]);
        let rep = cg_minimize(quadratic(&a, &b), &[0.0, 0.0], &CgConfig::default()).unwrap();
        assert_eq!(rep.history_csv().lines().count(), rep.history.len() + 1);
    }
}

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;
use toric_extremal::diagnostics::{
    diagnostics_row, einstein_constants, gradient_norm_oracle, lattice_samples, stability_report, DiagnosticsRow,
    EinsteinConstants, StabilityReport, Topology, LATTICE_STEP,
};
use toric_extremal::functionals::{CurvatureProblem, Objective};
use toric_extremal::io::{read_json, to_json, CoefficientFile, PolytopeFile};
use toric_extremal::optim::{degree_sweep, minimize, Method, OptimReport, SweepProblem, Termination};
use toric_extremal::{
    build_clw_pentagon, default_scheme, solve_extremal_affine, ExtremalAffineTarget, MomentPolytope,
    PolytopeQuadrature, SymplecticPotential, Vec2,
};

use crate::format::{sig9, table_line, TABLE_HEADER};
use crate::{check_quad_order, DiagnoseArgs, FormatArg, MethodArg, ObjectiveArg, ProblemArgs, SolveArgs, SweepArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] toric_extremal::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

type Result<T> = std::result::Result<T, CliError>;

/// Everything a run needs besides the basis.
struct Setup {
    polytope: MomentPolytope,
    target: ExtremalAffineTarget,
    scheme: PolytopeQuadrature,
    constants: EinsteinConstants,
    samples: Vec<Vec2>,
    a: f64,
}

impl Setup {
    fn new(polytope: MomentPolytope, a: f64, quad_order: usize, topology: Topology) -> Result<Self> {
        check_quad_order(quad_order)?;
        let target = solve_extremal_affine(&polytope)?;
        let scheme = default_scheme(&polytope, quad_order)?;
        let constants = einstein_constants(&target, &scheme, topology)?;
        let samples = lattice_samples(&polytope, LATTICE_STEP)?;
        Ok(Self { polytope, target, scheme, constants, samples, a })
    }

    fn from_problem(p: &ProblemArgs) -> Result<Self> {
        let (poly, a) = match &p.polytope {
            Some(path) => (read_json::<PolytopeFile>(path)?.to_polytope()?, p.a),
            None => (build_clw_pentagon(p.a)?, p.a),
        };
        Self::new(poly, a, p.quad_order, p.topology.topology())
    }

    fn objective(&self, o: ObjectiveArg) -> Objective {
        match o {
            ObjectiveArg::Calabi => Objective::Calabi,
            ObjectiveArg::Conformal => Objective::Conformal { kappa: self.constants.kappa },
        }
    }

    fn row(&self, u: &SymplecticPotential) -> Result<DiagnosticsRow> {
        Ok(diagnostics_row(u, &self.target, &self.constants, &self.scheme, &self.samples)?)
    }
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Cg => Method::Cg,
        MethodArg::Lm => Method::Lm,
    }
}

fn check_degree(d: u32) -> Result<()> {
    if d < 2 {
        return Err(CliError::Config(format!("degree must be at least 2, got {d}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct RunReport<'a> {
    degree: u32,
    method: Method,
    objective: Objective,
    quad_order: usize,
    report: &'a OptimReport,
    diagnostics: Option<DiagnosticsRow>,
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// Writes the coefficient, report and run-log files of one degree.
fn persist(
    setup: &Setup,
    args: &ProblemArgs,
    problem: &CurvatureProblem,
    rep: &OptimReport,
) -> Result<Option<DiagnosticsRow>> {
    let degree = problem.basis().degree();
    let u = problem.potential(&rep.final_coeffs)?;
    let row = setup.row(&u).ok();
    let run = RunReport {
        degree,
        method: method(args.method),
        objective: setup.objective(args.objective),
        quad_order: args.quad_order,
        report: rep,
        diagnostics: row,
    };
    write(&args.out, &format!("coeffs_deg{degree}.json"), &to_json(&CoefficientFile::from_potential(&u, setup.a)))?;
    write(&args.out, &format!("report_deg{degree}.json"), &to_json(&run))?;
    write(&args.out, &format!("runlog_deg{degree}.csv"), &rep.history_csv())?;
    Ok(row)
}

pub fn solve(args: &SolveArgs) -> Result<ExitCode> {
    check_degree(args.degree)?;
    let p = &args.problem;
    let setup = Setup::from_problem(p)?;
    let sweep = SweepProblem {
        polytope: setup.polytope.clone(),
        target: setup.target,
        scheme: setup.scheme.clone(),
        objective: setup.objective(p.objective),
        symmetric: setup.polytope.clw_parameter().is_some(),
    };
    let problem = sweep.at_degree(args.degree)?;
    let x0 = match &args.input {
        Some(path) => read_json::<CoefficientFile>(path)?.padded(problem.n_coeffs())?,
        None => vec![0.0; problem.n_coeffs()],
    };
    let rep = minimize(&problem, sweep.objective, method(p.method), &x0, &p.solver_config())?;
    let row = persist(&setup, p, &problem, &rep)?;
    println!(
        "degree {} {:?} after {} iterations ({} evaluations): value {}",
        args.degree,
        rep.termination,
        rep.iterations,
        rep.evaluations,
        sig9(rep.final_value)
    );
    if let Some(r) = row {
        println!("{TABLE_HEADER}\n{}", table_line(args.degree, Some(&r)));
    }
    Ok(exit_for(&[Some(rep.termination)]))
}

fn exit_for(outcomes: &[Option<Termination>]) -> ExitCode {
    if outcomes.iter().any(Option::is_none) {
        ExitCode::from(1)
    } else if outcomes.contains(&Some(Termination::BudgetExhausted)) {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

#[derive(Serialize)]
struct SweepRow {
    degree: u32,
    termination: Option<Termination>,
    row: Option<DiagnosticsRow>,
    error: Option<String>,
}

pub fn sweep(args: &SweepArgs) -> Result<ExitCode> {
    let degrees = &args.degrees.0;
    for d in degrees {
        check_degree(*d)?;
    }
    let p = &args.problem;
    let setup = Setup::from_problem(p)?;
    let sweep = SweepProblem {
        polytope: setup.polytope.clone(),
        target: setup.target,
        scheme: setup.scheme.clone(),
        objective: setup.objective(p.objective),
        symmetric: setup.polytope.clw_parameter().is_some(),
    };
    let mut rows = Vec::with_capacity(degrees.len());
    let mut io_error = None;
    degree_sweep(&sweep, degrees, method(p.method), &p.solver_config(), |problem, entry| {
        let row = match &entry.outcome {
            Ok(rep) => match persist(&setup, p, problem, rep) {
                Ok(row) => SweepRow { degree: entry.degree, termination: Some(rep.termination), row, error: None },
                Err(e) => {
                    io_error.get_or_insert(e);
                    return;
                }
            },
            Err(e) => SweepRow { degree: entry.degree, termination: None, row: None, error: Some(e.to_string()) },
        };
        eprintln!("{}", table_line(row.degree, row.row.as_ref()));
        rows.push(row);
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }

    let text = match args.format {
        FormatArg::Csv => {
            let mut s = format!("{TABLE_HEADER}\n");
            for r in &rows {
                s.push_str(&table_line(r.degree, r.row.as_ref()));
                s.push('\n');
            }
            s
        }
        FormatArg::Json => to_json(&rows) + "\n",
    };
    let name = match args.format {
        FormatArg::Csv => "table.csv",
        FormatArg::Json => "table.json",
    };
    write(&p.out, name, &text)?;
    print!("{text}");
    let outcomes: Vec<_> = rows.iter().map(|r| r.row.and(r.termination)).collect();
    Ok(exit_for(&outcomes))
}

#[derive(Serialize)]
struct Diagnosis {
    degree: u32,
    quad_order: usize,
    constants: EinsteinConstants,
    row: DiagnosticsRow,
    grad_s_oracle: f64,
    grad_sinv_oracle: f64,
    stability: StabilityReport,
}

pub fn diagnose(args: &DiagnoseArgs) -> Result<ExitCode> {
    let file: CoefficientFile = read_json(&args.input)?;
    let u = file.to_potential()?;
    let setup = Setup::new(u.polytope().clone(), file.a, args.quad_order, args.topology.topology())?;
    let row = setup.row(&u)?;
    let stability = stability_report(&u, &setup.target, &setup.constants, &setup.scheme, &setup.samples)?;
    let d = Diagnosis {
        degree: file.degree,
        quad_order: args.quad_order,
        constants: setup.constants,
        row,
        grad_s_oracle: gradient_norm_oracle(&setup.target, &setup.constants, 1.0, &setup.scheme)?,
        grad_sinv_oracle: gradient_norm_oracle(&setup.target, &setup.constants, -1.0, &setup.scheme)?,
        stability,
    };
    let summary = summary(&d);
    write(&args.out, "diagnostics.json", &to_json(&d))?;
    write(&args.out, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(ExitCode::SUCCESS)
}

fn summary(d: &Diagnosis) -> String {
    let c = &d.constants;
    let s = &d.stability;
    let verdict = |b: bool| if b { "yes" } else { "no" };
    let fmt_coeffs = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    format!(
        "degree {deg}, quadrature order {k}\n\
         Einstein volume {vol}, Lambda {lam}, kappa {kap}\n\
         {TABLE_HEADER}\n{line}\n\
         |grad S|^2 oracle {gso}, |grad 1/S|^2 oracle {gsio}\n\
         phi+ eigenvalue {pe:.5} Lambda, coefficients ({pc}), offset {po:.4}\n\
         phi- eigenvalue {me:.5} Lambda, coefficients ({mc})\n\
         max Laplacian of S^2 {mx} at ({x0}, {x1}); kappa/2 {h}, 5 kappa/16 {f}\n\
         unstable: {u}; cone unstable: {cu}; eigenvalue in (4/3, 2) Lambda: plus {pi}, minus {mi}\n",
        deg = d.degree,
        k = d.quad_order,
        vol = sig9(c.einstein_volume),
        lam = sig9(c.lambda),
        kap = sig9(c.kappa),
        line = table_line(d.degree, Some(&d.row)),
        gso = sig9(d.grad_s_oracle),
        gsio = sig9(d.grad_sinv_oracle),
        pe = s.plus.eigenvalue,
        pc = fmt_coeffs(&s.plus.ansatz.coefficients),
        po = s.plus.ansatz.mean_offset,
        me = s.minus.eigenvalue,
        mc = fmt_coeffs(&s.minus.ansatz.coefficients),
        mx = sig9(s.max_laplacian_s2),
        x0 = sig9(s.argmax[0]),
        x1 = sig9(s.argmax[1]),
        h = sig9(s.half_kappa),
        f = sig9(s.five_sixteenths_kappa),
        u = verdict(s.unstable),
        cu = verdict(s.cone_unstable),
        pi = verdict(s.plus_in_interval),
        mi = verdict(s.minus_in_interval),
    )
}

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use toric_extremal::diagnostics::Topology;
use toric_extremal::optim::{CgConfig, LmConfig, SolverConfig};
use toric_extremal::quadrature::{DIAGNOSE_ORDER, MAX_ORDER, OPTIMISE_ORDER};
use toric_extremal::CLW_A;

mod commands;
mod format;

#[derive(Debug, Parser)]
#[command(
    name = "toric-extremal",
    version,
    about = "Approximate extremal toric Kähler metrics by truncated symplectic potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimise one objective at a single polynomial degree.
    Solve(SolveArgs),
    /// Warm-started run over a range of degrees, emitting one table row per degree.
    Sweep(SweepArgs),
    /// Full diagnostics for a saved coefficient file.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cg,
    Lm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Calabi,
    Conformal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Class parameter of the pentagon.
    #[arg(long, default_value_t = CLW_A)]
    pub a: f64,
    /// Polygon JSON file; overrides --a.
    #[arg(long, value_name = "FILE")]
    pub polytope: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cg")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "calabi")]
    pub objective: ObjectiveArg,
    /// Gauss–Legendre points per direction.
    #[arg(long, default_value_t = OPTIMISE_ORDER)]
    pub quad_order: usize,
    /// Conjugate-gradient restart rounds.
    #[arg(long, default_value_t = CgConfig::default().max_rounds)]
    pub max_rounds: usize,
    /// Levenberg–Marquardt residual evaluations.
    #[arg(long, default_value_t = LmConfig::default().max_evaluations)]
    pub max_evaluations: usize,
    #[command(flatten)]
    pub topology: TopologyArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct TopologyArgs {
    #[arg(long, default_value_t = Topology::TWO_POINT_BLOWUP.euler)]
    pub euler: f64,
    #[arg(long, default_value_t = Topology::TWO_POINT_BLOWUP.signature)]
    pub signature: f64,
}

impl ProblemArgs {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            cg: CgConfig { max_rounds: self.max_rounds, ..CgConfig::default() },
            lm: LmConfig { max_evaluations: self.max_evaluations, ..LmConfig::default() },
        }
    }
}

impl TopologyArgs {
    pub fn topology(&self) -> Topology {
        Topology { euler: self.euler, signature: self.signature }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub degree: u32,
    /// Coefficient file to warm-start from (zero-padded).
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Inclusive range `LO..HI`, or a single degree.
    #[arg(long, value_name = "LO..HI")]
    pub degrees: DegreeRange,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value_t = DIAGNOSE_ORDER)]
    pub quad_order: usize,
    #[command(flatten)]
    pub topology: TopologyArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeRange(pub Vec<u32>);

impl FromStr for DegreeRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad degree `{t}`: {e}"));
        match s.split_once("..") {
            Some((lo, hi)) => {
                let hi = hi.strip_prefix('=').unwrap_or(hi);
                Ok(Self((parse(lo)?..=parse(hi)?).collect()))
            }
            None => Ok(Self(vec![parse(s)?])),
        }
    }
}

pub fn check_quad_order(k: usize) -> Result<(), commands::CliError> {
    if !(2..=MAX_ORDER).contains(&k) {
        return Err(commands::CliError::Config(format!("--quad-order must be in 2..={MAX_ORDER}, got {k}")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_ranges() {
        assert_eq!("2..4".parse::<DegreeRange>().unwrap().0, vec![2, 3, 4]);
        assert_eq!("2..=3".parse::<DegreeRange>().unwrap().0, vec![2, 3]);
        assert_eq!("7".parse::<DegreeRange>().unwrap().0, vec![7]);
        assert!("5..4".parse::<DegreeRange>().unwrap().0.is_empty());
        assert!("x..4".parse::<DegreeRange>().is_err());
    }

    #[test]
    fn arguments_parse() {
        Cli::command_for_test();
    }

    impl Cli {
        fn command_for_test() {
            use clap::CommandFactory;
            Cli::command().debug_assert();
        }
    }
}

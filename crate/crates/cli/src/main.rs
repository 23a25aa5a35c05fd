//! `smb-csp`: solve, inspect and generate SMB constraint problems.
//!
//! Exit status is 0 for SAT (or success), 1 for UNSAT (or a failed check),
//! 2 for errors.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use smb_core::{Method, OrderShape};

#[derive(Parser)]
#[command(name = "smb-csp", version, about = "CSP solver for templates of semilattices of Mal'cev blocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Linear,
    Flat,
    General,
    Malcev,
    Bruteforce,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::Linear => Method::Linear,
            MethodArg::Flat => Method::Flat,
            MethodArg::General => Method::General,
            MethodArg::Malcev => Method::Malcev,
            MethodArg::Bruteforce => Method::Bruteforce,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Malcev,
    Linear,
    Flat,
    Tree,
    General,
}

impl From<ShapeArg> for OrderShape {
    fn from(s: ShapeArg) -> OrderShape {
        match s {
            ShapeArg::Malcev => OrderShape::Malcev,
            ShapeArg::Linear => OrderShape::Linear,
            ShapeArg::Flat => OrderShape::Flat,
            ShapeArg::Tree => OrderShape::Tree,
            ShapeArg::General => OrderShape::General,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide an instance file.
    Solve(SolveArgs),
    /// Verify an algebra file and print its SMB structure.
    CheckAlgebra(CheckArgs),
    /// Structural analyses of a (2,3)-minimized instance.
    Analyze(AnalyzeArgs),
    /// Enforce (k,l)-minimality and write the result.
    Minimize(MinimizeArgs),
    /// Generate a random algebra or instance.
    Gen(GenArgs),
    /// Run several methods on a corpus and compare them with brute force.
    Compare(CompareArgs),
}

#[derive(Args)]
pub struct SolveArgs {
    pub path: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    /// Compute and verify a witness.
    #[arg(long)]
    pub extract: bool,
    /// Skip the oracle audits.
    #[arg(long)]
    pub no_audit: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Args)]
pub struct CheckArgs {
    pub path: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    pub path: PathBuf,
    #[arg(long)]
    pub strands: bool,
    #[arg(long)]
    pub coherent_sets: bool,
    #[arg(long)]
    pub link_partitions: bool,
    #[arg(long)]
    pub cycle_consistency: bool,
    /// Scope graph and microstructure.
    #[arg(long)]
    pub graphs: bool,
    /// `dot` applies to `--graphs` only.
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args)]
pub struct MinimizeArgs {
    pub path: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub l: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub kind: GenKind,
}

#[derive(Subcommand)]
pub enum GenKind {
    Algebra(GenAlgebraArgs),
    Instance(GenInstanceArgs),
}

#[derive(Args)]
pub struct GenAlgebraArgs {
    #[arg(long, value_enum, default_value = "linear")]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 2)]
    pub blocks: usize,
    #[arg(long, default_value_t = 3)]
    pub max_block_size: usize,
    #[arg(long, default_value_t = 4)]
    pub max_size: usize,
    /// Add a two-sided unit on top.
    #[arg(long)]
    pub unit: bool,
    /// Scramble the cross-block operations.
    #[arg(long)]
    pub irregular: bool,
    #[arg(long, default_value = "A")]
    pub name: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenInstanceArgs {
    #[arg(long, value_enum, default_value = "general")]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 5)]
    pub variables: usize,
    #[arg(long, default_value_t = 5)]
    pub constraints: usize,
    #[arg(long, default_value_t = 3)]
    pub max_arity: usize,
    #[arg(long, default_value_t = 2)]
    pub generators: usize,
    /// Plant a hidden solution.
    #[arg(long)]
    pub planted: bool,
    #[arg(long, default_value_t = 0.3)]
    pub subdomain_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Instance files; combined with any generated instances.
    pub paths: Vec<PathBuf>,
    /// Number of generated instances.
    #[arg(long, default_value_t = 0)]
    pub generate: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "auto,linear,flat,general,malcev")]
    pub methods: Vec<MethodArg>,
    /// Worker threads; 0 lets rayon decide.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::CheckAlgebra(a) => commands::check_algebra(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Minimize(a) => commands::minimize(&a),
        Command::Gen(a) => match a.kind {
            GenKind::Algebra(g) => commands::gen_algebra(&g),
            GenKind::Instance(g) => commands::gen_instance(&g),
        },
        Command::Compare(a) => commands::compare(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

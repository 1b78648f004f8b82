//! `curveddg`: convergence studies and verification suites for the
//! interior-penalty DG solver on the unit disk.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 on solver failure.

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use curveddg_core::study::{
    self, convergence_csv, run_convergence, run_verify, verify_csv, Problem, StudyConfig,
    VerifyConfig,
};
use curveddg_core::{mesh, Error, PenaltyConfig};

#[derive(Parser)]
#[command(name = "curveddg", version, about = "Curved-boundary interior-penalty DG solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study and write a CSV report.
    Solve(SolveArgs),
    /// Verify trace/inverse/Poincare-Friedrichs/coercivity ratios.
    Verify(VerifyArgs),
    /// Generate a disk mesh and write it in the text format.
    Mesh(MeshArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Problem: poisson | biharmonic.
    #[arg(long)]
    problem: String,
    /// Polynomial degree p.
    #[arg(long)]
    degree: usize,
    /// Number of refinement levels.
    #[arg(long, default_value_t = 5)]
    levels: usize,
    /// Coarsest target mesh size; level l uses h0 / 2^l.
    #[arg(long, default_value_t = 0.5)]
    h0: f64,
    /// Relative solver tolerance (defaults: 1e-10 poisson, 1e-7 biharmonic).
    #[arg(long)]
    tol: Option<f64>,
    /// Poisson jump penalty override.
    #[arg(long)]
    eta1: Option<f64>,
    /// Plate jump penalty override.
    #[arg(long)]
    eta2: Option<f64>,
    /// Plate normal-derivative penalty override.
    #[arg(long)]
    eta3: Option<f64>,
    /// Plate tangential-gradient penalty override.
    #[arg(long)]
    eta4: Option<f64>,
    /// Quadrature degree override (default 2p + 4).
    #[arg(long)]
    quad_degree: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of refinement levels.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Polynomial degree p.
    #[arg(long)]
    degree: usize,
    /// Random samples per level.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coarsest target mesh size.
    #[arg(long, default_value_t = 0.5)]
    h0: f64,
    /// Output CSV path.
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct MeshArgs {
    /// Target mesh size.
    #[arg(long)]
    target_h: f64,
    /// Output mesh path.
    #[arg(long)]
    out: String,
}

fn run_solve(args: &SolveArgs) -> Result<u8, Error> {
    let problem = match args.problem.as_str() {
        "poisson" => Problem::Poisson,
        "biharmonic" => Problem::Biharmonic,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown problem `{other}` (expected poisson or biharmonic)"
            )))
        }
    };
    let mut config = StudyConfig::new(problem, args.degree);
    config.levels = args.levels;
    config.h0 = args.h0;
    config.quad_degree = args.quad_degree;
    if let Some(tol) = args.tol {
        config.tol = tol;
    }
    if args.eta1.is_some() || args.eta2.is_some() || args.eta3.is_some() || args.eta4.is_some() {
        let mut pen = PenaltyConfig::defaults(args.degree);
        if let Some(v) = args.eta1 {
            pen.eta1 = v;
        }
        if let Some(v) = args.eta2 {
            pen.eta2 = v;
        }
        if let Some(v) = args.eta3 {
            pen.eta3 = v;
        }
        if let Some(v) = args.eta4 {
            pen.eta4 = v;
        }
        config.penalties = Some(pen);
    }
    config.validate()?;

    let report = run_convergence(&config)?;
    fs::write(&args.out, convergence_csv(&report))?;

    // Short human-readable summary.
    let cols = study::error_columns(problem);
    println!("{} p={} levels={}", problem.name(), config.degree, report.levels.len());
    for l in &report.levels {
        print!(
            "  level {} h={:.4} dofs={} ",
            l.level, l.record.h, l.record.dofs
        );
        for c in cols {
            print!("{}={:.3e} ", c, report.column(c)[l.level]);
        }
        println!("(cg={} res={:.1e})", l.solve.cg_iterations, l.solve.rel_residual);
    }
    if let Some(f) = &report.failure {
        eprintln!("solver failure: {f}");
        eprintln!("partial report written to {}", args.out);
        return Ok(2);
    }
    println!("report written to {}", args.out);
    Ok(0)
}

fn run_verify_cmd(args: &VerifyArgs) -> Result<u8, Error> {
    let config = VerifyConfig {
        degree: args.degree,
        levels: args.levels,
        h0: args.h0,
        samples: args.samples,
        seed: args.seed,
    };
    let report = run_verify(&config)?;
    fs::write(&args.out, verify_csv(&report))?;
    println!(
        "verified {} levels at p={} with {} samples (seed {})",
        report.levels.len(),
        report.degree,
        report.samples,
        report.seed
    );
    if report.levels.len() == 1 {
        println!("single level: cross-level spreads omitted");
    }
    println!("report written to {}", args.out);
    Ok(0)
}

fn run_mesh(args: &MeshArgs) -> Result<u8, Error> {
    let m = mesh::generate_disk_mesh(args.target_h)?;
    let mut buf = Vec::new();
    mesh::write_mesh(&m, &mut buf)?;
    let mut file = fs::File::create(&args.out)?;
    file.write_all(&buf)?;
    println!(
        "wrote mesh with {} vertices, {} triangles, {} boundary edges to {}",
        m.vertices.len(),
        m.triangles.len(),
        m.boundary_edges.len(),
        args.out
    );
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let outcome = match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Verify(args) => run_verify_cmd(args),
        Command::Mesh(args) => run_mesh(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e @ (Error::ConvergenceFailure { .. } | Error::NotSpd { .. })) => {
            eprintln!("solver failure: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

//! Command-line front-end: classify symplectic matrices, build common P.L.I.
//! subspaces, run the full model analysis pipeline, and construct/verify
//! germ fields. All inputs and outputs are JSON (path `-` for stdio).
//!
//! Exit codes: 0 success, 2 malformed input, 3 pipeline failure,
//! 4 verification failure.

use std::fs;
use std::io::{Read, Write};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{GermError, Result};
use crate::germ::{self, GermTolerances, DEFAULT_GRID};
use crate::models::{make_cyclic_model, CyclicModel, CyclicModelSpec};
use crate::monodromy;
use crate::pli;
use crate::schema;
use crate::spectral::{classify_stability, SpectralTolerances};
use crate::symcore::SymplecticSpace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;
pub const EXIT_VERIFY_FAIL: i32 = 4;

#[derive(Parser)]
#[command(
    name = "germkit",
    version,
    about = "Decide, construct and certify complex germs on invariant isotropic tori"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for randomized harnesses built on top of this tool (recorded in
    /// the output for reproducibility; the pipeline itself is deterministic).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify symplectic matrices as Unstable / Stable / StronglyStable.
    Classify(ClassifyArgs),
    /// Construct and verify the common P.L.I. subspace of a matrix family.
    Pli(ClassifyArgs),
    /// Full pipeline on a model spec: lattice, monodromy, reduction, decision.
    Analyze(ModelArgs),
    /// Build the germ field over the torus (requires existence).
    GermBuild(BuildArgs),
    /// Verify the germ axioms on a stored germ field.
    GermVerify(VerifyArgs),
}

#[derive(Args)]
struct IoArgs {
    /// Input JSON path, or `-` for stdin.
    #[arg(long, short = 'i')]
    input: String,
    /// Output JSON path, or `-` for stdout.
    #[arg(long, short = 'o', default_value = "-")]
    output: String,
}

#[derive(Args)]
struct TolArgs {
    /// Unit-circle tolerance for eigenvalues (default 1e-8).
    #[arg(long)]
    tol_circle: Option<f64>,
    /// Eigenvalue clustering radius (default 1e-7).
    #[arg(long)]
    tol_cluster: Option<f64>,
    /// Numerical rank cutoff (default 1e-10).
    #[arg(long)]
    tol_rank: Option<f64>,
}

impl TolArgs {
    fn apply(&self, strict: bool) -> Result<SpectralTolerances> {
        let mut tols = SpectralTolerances::default();
        for (name, value, slot) in [
            ("--tol-circle", self.tol_circle, &mut tols.tol_circle),
            ("--tol-cluster", self.tol_cluster, &mut tols.tol_cluster),
            ("--tol-rank", self.tol_rank, &mut tols.tol_rank),
        ] {
            if let Some(v) = value {
                if !(v > 0.0 && v < 1e-2) {
                    return Err(GermError::InputError(format!(
                        "{name}: tolerance {v:e} must lie in (0, 1e-2)"
                    )));
                }
                *slot = v;
            }
        }
        if !strict {
            // accept mildly non-symplectic inputs outside strict mode
            tols.tol_symplectic = 1e-6;
        }
        Ok(tols)
    }
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    tols: TolArgs,
    /// Enforce the tight symplectic-residual gate on inputs.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    tols: TolArgs,
    /// RK4 step; default is (reference period) / 20000.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Per-axis sample counts, e.g. `64` or `16,16`; default 64 per axis.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    io: IoArgs,
    /// RK4 step; default is (reference period) / 20000.
    #[arg(long)]
    step: Option<f64>,
    /// Also write per-sample residuals as CSV to this path.
    #[arg(long)]
    csv: Option<String>,
}

fn read_input(path: &str) -> Result<Value> {
    let text = if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| GermError::InputError(format!("stdin: {e}")))?;
        buf
    } else {
        fs::read_to_string(path).map_err(|e| GermError::InputError(format!("{path}: {e}")))?
    };
    serde_json::from_str(&text)
        .map_err(|e| GermError::InputError(format!("{path}: invalid JSON: {e}")))
}

fn write_output(path: &str, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| GermError::Backend(e.to_string()))?;
    if path == "-" {
        println!("{text}");
        Ok(())
    } else {
        fs::write(path, text + "\n")
            .map_err(|e| GermError::InputError(format!("{path}: {e}")))
    }
}

fn model_step(model: &CyclicModel, flag: Option<f64>) -> Result<f64> {
    match flag {
        Some(s) => {
            if !(s > 0.0 && s.is_finite()) {
                return Err(GermError::InputError(format!(
                    "--step: {s} must be a positive finite number"
                )));
            }
            Ok(s)
        }
        None => {
            let tau = 2.0 * std::f64::consts::PI;
            let period = (tau / model.frequencies[0].abs()).max(tau);
            Ok(monodromy::default_step(period))
        }
    }
}

fn parse_grid(flag: Option<&str>, k: usize) -> Result<Vec<usize>> {
    match flag {
        None => Ok(vec![DEFAULT_GRID; k]),
        Some(text) => {
            let parts: Vec<usize> = text
                .split(',')
                .map(|p| {
                    p.trim().parse::<usize>().map_err(|_| {
                        GermError::InputError(format!("--grid: {p:?} is not a count"))
                    })
                })
                .collect::<Result<_>>()?;
            match parts.len() {
                1 => Ok(vec![parts[0]; k]),
                len if len == k => Ok(parts),
                len => Err(GermError::InputError(format!(
                    "--grid: got {len} counts for {k} angle axes"
                ))),
            }
        }
    }
}

fn exit_code_for(e: &GermError) -> i32 {
    match e {
        GermError::InputError(_)
        | GermError::ModelError(_)
        | GermError::DimensionMismatch { .. } => EXIT_BAD_INPUT,
        _ => EXIT_PIPELINE,
    }
}

fn cmd_classify(args: &ClassifyArgs) -> Result<()> {
    let tols = args.tols.apply(args.strict)?;
    let matrices = schema::matrices_from_json(read_input(&args.io.input)?)?;
    let mut reports = Vec::with_capacity(matrices.len());
    for (i, m) in matrices.iter().enumerate() {
        if m.nrows() != m.ncols() || m.nrows() % 2 != 0 || m.nrows() == 0 {
            return Err(GermError::InputError(format!(
                "matrices[{i}]: expected a nonempty square matrix of even dimension, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let space = SymplecticSpace::new(m.nrows() / 2);
        let report = classify_stability(&space, m, &tols).map_err(|e| match e {
            GermError::NotSymplectic { residual } => GermError::InputError(format!(
                "matrices[{i}]: not symplectic (residual {residual:.3e})"
            )),
            other => other,
        })?;
        reports.push(report);
    }
    write_output(&args.io.output, &schema::classify_output(&reports))
}

fn cmd_pli(args: &ClassifyArgs) -> Result<()> {
    let tols = args.tols.apply(args.strict)?;
    let matrices = schema::matrices_from_json(read_input(&args.io.input)?)?;
    let dim = matrices
        .first()
        .map(|m| m.nrows())
        .ok_or_else(|| GermError::InputError("matrices: empty family".into()))?;
    if dim % 2 != 0 || matrices.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
        return Err(GermError::InputError(
            "matrices: family members must be square, even-dimensional and equally sized".into(),
        ));
    }
    let space = SymplecticSpace::new(dim / 2);
    let result = pli::pli_common(&space, &matrices, &tols)?;
    let verification = pli::verify_pli(&space, &matrices, &result.subspace, 1e-8)?;
    write_output(&args.io.output, &schema::pli_output(&result, &verification))
}

fn load_model(io: &IoArgs) -> Result<(CyclicModelSpec, CyclicModel)> {
    let spec = schema::model_spec_from_json(read_input(&io.input)?)?;
    let model = make_cyclic_model(&spec)?;
    Ok((spec, model))
}

fn cmd_analyze(args: &ModelArgs) -> Result<()> {
    let tols = args.tols.apply(args.strict)?;
    let (_, model) = load_model(&args.io)?;
    let step = model_step(&model, args.step)?;
    let analysis = germ::analyze_model(&model, &tols, step)?;
    let decision = serde_json::to_value(&analysis.decision)
        .map_err(|e| GermError::Backend(e.to_string()))?;
    write_output(
        &args.io.output,
        &schema::analysis_output(
            &analysis.lattice,
            &analysis.monodromy,
            &analysis.reports,
            &decision,
        ),
    )
}

fn cmd_germ_build(args: &BuildArgs) -> Result<()> {
    let tols = args.model.tols.apply(args.model.strict)?;
    let (spec, model) = load_model(&args.model.io)?;
    let step = model_step(&model, args.model.step)?;
    let grid = parse_grid(args.grid.as_deref(), model.k)?;
    let analysis = germ::analyze_model(&model, &tols, step)?;
    let field = germ::build_germ(&model, &analysis, &tols, &grid)?;
    write_output(&args.model.io.output, &schema::field_to_json(&spec, &field))
}

fn cmd_germ_verify(args: &VerifyArgs) -> Result<i32> {
    let (spec, field) = schema::field_from_json(read_input(&args.io.input)?)?;
    let model = make_cyclic_model(&spec)?;
    let step = model_step(&model, args.step)?;
    let report = germ::verify_germ(&model, &field, &GermTolerances::default(), step)?;
    if let Some(csv_path) = &args.csv {
        fs::write(csv_path, schema::report_csv(&report))
            .map_err(|e| GermError::InputError(format!("{csv_path}: {e}")))?;
    }
    write_output(&args.io.output, &schema::report_output(&report))?;
    Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY_FAIL })
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version print and exit 0; real parse errors exit 2
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Classify(args) => cmd_classify(args).map(|()| EXIT_OK),
        Command::Pli(args) => cmd_pli(args).map(|()| EXIT_OK),
        Command::Analyze(args) => cmd_analyze(args).map(|()| EXIT_OK),
        Command::GermBuild(args) => cmd_germ_build(args).map(|()| EXIT_OK),
        Command::GermVerify(args) => cmd_germ_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code_for(&e);
            let diag = json!({
                "schema": schema::SCHEMA,
                "kind": "error",
                "error": e.to_string(),
                "exit_code": code,
            });
            let _ = writeln!(
                std::io::stderr(),
                "{}",
                serde_json::to_string_pretty(&diag).unwrap_or_else(|_| e.to_string())
            );
            code
        }
    }
}

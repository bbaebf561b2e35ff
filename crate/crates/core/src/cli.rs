//! Command-line front end.
//!
//! Exit status: 0 on success (including `--help`), 1 on invalid input or
//! usage errors, 2 on numerical failure.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::complex::{build_flat_torus, load_complex, subdivide, write_complex, SimplicialComplex};
use crate::error::{Error, Result};
use crate::experiments::{
    converge_cup, converge_hodge, converge_wr, converge_weak_flow, default_test_forms, steady_state_scan,
    RefinementStudy, StudyOptions,
};
use crate::flow::{run, FlowParams, InitialCondition, Integrator};
use crate::hodge::{InnerProductModel, MetricKind};
use crate::solve::SolverOptions;
use crate::whitney::{parse_form, AnalyticForm, QuadratureOptions};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "cochain-flow", version, about = "Fluid flows on finite cochain complexes")]
struct Cli {
    /// Inner product on cochains: toy or whitney.
    #[arg(long, global = true, default_value = "whitney")]
    metric: MetricKind,
    /// Starting Gauss-Legendre degree for integrals of smooth forms.
    #[arg(long, global = true, default_value_t = 8)]
    quadrature_degree: usize,
    /// Relative tolerance of the linear solvers.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tolerance: f64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for `--init random`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct MeshSource {
    /// Mesh file.
    #[arg(long = "in", conflicts_with = "torus")]
    input: Option<PathBuf>,
    /// Build the n×…×n flat torus instead of reading a file.
    #[arg(long)]
    torus: Option<usize>,
    /// Dimension of the generated torus.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Apply edgewise subdivision this many times.
    #[arg(long, default_value_t = 0)]
    subdivide: usize,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// CSV destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary destination (default: stderr).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build, refine, convert or describe a mesh.
    Mesh {
        #[command(flatten)]
        source: MeshSource,
        /// Write the mesh here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print simplex counts and mesh quality.
        #[arg(long)]
        info: bool,
    },
    /// Harmonic basis and spectral report.
    Hodge {
        #[command(flatten)]
        source: MeshSource,
        /// Report format (only json).
        #[arg(long, default_value = "json")]
        report: String,
        /// Report destination (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the flow and write per-step diagnostics.
    Simulate {
        #[command(flatten)]
        source: MeshSource,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        /// Step size (default: 0.1 h² / max(ν, h), h the shortest edge, capped by
        /// the viscous stability limit).
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        t_final: f64,
        /// taylor-green, random, random:SEED, harmonic:K or a form expression.
        #[arg(long, default_value = "random")]
        init: String,
        /// Model norm of a random initial state.
        #[arg(long, default_value_t = 1.0)]
        init_norm: f64,
        #[arg(long, default_value = "rk4")]
        integrator: Integrator,
        /// Reproject onto co-closed cochains every this many steps.
        #[arg(long, default_value_t = 1)]
        reproject: usize,
        /// Record every this many steps.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Recorded states as JSON.
        #[arg(long)]
        state_out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Steady-state residuals of R(ω) under refinement.
    Steady {
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        /// Test form for weak pairings (repeatable; default battery if absent).
        #[arg(long = "test")]
        tests: Vec<String>,
    },
    /// ‖WRω − ω‖ under refinement.
    ConvergeWr {
        #[command(flatten)]
        study: StudyArgs,
    },
    /// ‖W(Rω₁ ∪ Rω₂) − ω₁∧ω₂‖ under refinement.
    ConvergeCup {
        #[command(flatten)]
        study: StudyArgs,
        /// Second factor.
        #[arg(long)]
        second: String,
    },
    /// ‖π(Rω) − R(πω)‖ under refinement.
    ConvergeHodge {
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Weak pairings of W π(T_ν Rω) against test forms under refinement.
    ConvergeWeak {
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long, default_value_t = 0.01)]
        nu: f64,
        #[arg(long = "test")]
        tests: Vec<String>,
    },
}

#[derive(Args, Debug, Clone)]
struct StudyArgs {
    /// Smooth form on the torus.
    #[arg(long)]
    form: String,
    /// Torus resolutions, increasing.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    resolutions: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[command(flatten)]
    output: Output,
}

struct Context {
    cli: Cli,
    argv: Vec<String>,
}

impl Context {
    fn quadrature(&self) -> QuadratureOptions {
        QuadratureOptions { degree: self.cli.quadrature_degree, ..QuadratureOptions::default() }
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions { rel_tol: self.cli.tolerance, ..SolverOptions::default() }
    }

    fn study_options(&self) -> StudyOptions {
        StudyOptions { metric: self.cli.metric, quadrature: self.quadrature(), solver: self.solver() }
    }

    fn header(&self, kind: &str) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("schema_version".into(), json!(SCHEMA_VERSION));
        m.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("invocation".into(), json!(self.argv));
        m.insert("kind".into(), json!(kind));
        m.insert("metric".into(), json!(self.cli.metric.name()));
        m
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit status.
pub fn cli_main(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let ctx = Context { cli, argv };
    let result = match ctx.cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&ctx)),
            Err(e) => Err(Error::InvalidArgument(format!("cannot start thread pool: {e}"))),
        },
        None => dispatch(&ctx),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(ctx: &Context) -> Result<()> {
    match &ctx.cli.command {
        Command::Mesh { source, out, info } => cmd_mesh(source, out.as_deref(), *info),
        Command::Hodge { source, report, out } => cmd_hodge(ctx, source, report, out.as_deref()),
        Command::Simulate {
            source,
            nu,
            dt,
            t_final,
            init,
            init_norm,
            integrator,
            reproject,
            stride,
            state_out,
            output,
        } => {
            let params = FlowParams {
                nu: *nu,
                dt: dt.unwrap_or(f64::NAN),
                t_final: *t_final,
                integrator: *integrator,
                reprojection_period: *reproject,
                record_stride: *stride,
            };
            cmd_simulate(ctx, source, params, init, *init_norm, state_out.as_deref(), output)
        }
        Command::Steady { study, nu, tests } => cmd_steady(ctx, study, *nu, tests),
        Command::ConvergeWr { study } => {
            let form = parse_form(&study.form, study.dim)?;
            let s = converge_wr(&form, &study.resolutions, &ctx.study_options())?;
            write_study(ctx, study, &s)
        }
        Command::ConvergeCup { study, second } => {
            let first = parse_form(&study.form, study.dim)?;
            let second = parse_form(second, study.dim)?;
            let s = converge_cup(&first, &second, &study.resolutions, &ctx.study_options())?;
            write_study(ctx, study, &s)
        }
        Command::ConvergeHodge { study } => {
            let form = parse_form(&study.form, study.dim)?;
            let s = converge_hodge(&form, &study.resolutions, &ctx.study_options())?;
            write_study(ctx, study, &s)
        }
        Command::ConvergeWeak { study, nu, tests } => cmd_weak(ctx, study, *nu, tests),
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_summary(path: Option<&Path>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => eprintln!("{text}"),
    }
    Ok(())
}

fn write_csv<T: Serialize>(path: Option<&Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_out(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn load_mesh(source: &MeshSource) -> Result<SimplicialComplex> {
    let mut cx = match (&source.input, source.torus) {
        (Some(p), None) => load_complex(p)?,
        (None, Some(n)) => build_flat_torus(n, source.dim)?,
        _ => return Err(Error::InvalidArgument("give exactly one of --in or --torus".into())),
    };
    for _ in 0..source.subdivide {
        cx = subdivide(&cx)?;
    }
    Ok(cx)
}

fn counts_line(cx: &SimplicialComplex) -> String {
    const NAMES: [&str; 4] = ["V", "E", "F", "T"];
    cx.counts().iter().enumerate().map(|(k, c)| format!("{}={c}", NAMES[k])).collect::<Vec<_>>().join(" ")
}

fn cmd_mesh(source: &MeshSource, out: Option<&Path>, info: bool) -> Result<()> {
    let cx = load_mesh(source)?;
    if let Some(p) = out {
        std::fs::write(p, write_complex(&cx))?;
    }
    if info || out.is_none() {
        let mut line = format!("{} chi={}", counts_line(&cx), cx.euler_characteristic());
        if cx.is_embedded() {
            let q = cx.mesh_quality()?;
            line.push_str(&format!(" eta={:.6} fullness={:.6}", q.eta, q.fullness));
        }
        println!("{line}");
    }
    Ok(())
}

fn cmd_hodge(ctx: &Context, source: &MeshSource, report: &str, out: Option<&Path>) -> Result<()> {
    if report != "json" {
        return Err(Error::InvalidArgument(format!("unsupported report format '{report}'")));
    }
    let cx = Arc::new(load_mesh(source)?);
    let model = InnerProductModel::new(cx.clone(), ctx.cli.metric, ctx.solver())?;
    let basis = model.harmonic_basis()?;
    let mut m = ctx.header("hodge");
    m.insert("counts".into(), json!(cx.counts()));
    m.insert("euler_characteristic".into(), json!(cx.euler_characteristic()));
    m.insert("harmonic_dimension".into(), json!(basis.vectors.len()));
    m.insert("threshold".into(), json!(basis.threshold));
    m.insert("gap".into(), json!(basis.gap));
    let shown: Vec<f64> = basis.eigenvalues.iter().take(basis.vectors.len() + 4).copied().collect();
    m.insert("lowest_eigenvalues".into(), json!(shown));
    let mut w = open_out(out)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&Value::Object(m))?)?;
    Ok(())
}

fn cmd_simulate(
    ctx: &Context,
    source: &MeshSource,
    mut params: FlowParams,
    init: &str,
    init_norm: f64,
    state_out: Option<&Path>,
    output: &Output,
) -> Result<()> {
    let cx = Arc::new(load_mesh(source)?);
    let model = InnerProductModel::new(cx.clone(), ctx.cli.metric, ctx.solver())?;
    if params.dt.is_nan() {
        params.dt = FlowParams::default_dt(&model, params.nu)?;
    }
    params.validate()?;
    let init_cond = if init == "random" {
        InitialCondition::Random { seed: ctx.cli.seed, norm: init_norm }
    } else {
        match InitialCondition::parse(init, cx.embedding().map_or(cx.dim(), |e| e.ambient_dim))? {
            InitialCondition::Random { seed, .. } => InitialCondition::Random { seed, norm: init_norm },
            other => other,
        }
    };
    let c0 = init_cond.build(&model, &ctx.quadrature())?;
    let traj = run(&model, &c0, &params)?;
    write_csv(output.out.as_deref(), &traj.diagnostics)?;
    if let Some(p) = state_out {
        let states: Vec<Value> = traj.states.iter().map(|(t, v)| json!({ "t": t, "values": v.as_slice() })).collect();
        let doc = json!({ "schema_version": SCHEMA_VERSION, "degree": 1, "count": cx.count(1), "states": states });
        std::fs::write(p, serde_json::to_string(&doc)? + "\n")?;
    }
    let first = traj.diagnostics.first().expect("initial diagnostics");
    let last = traj.diagnostics.last().expect("final diagnostics");
    let mut m = ctx.header("simulate");
    m.insert("counts".into(), json!(cx.counts()));
    m.insert("nu".into(), json!(params.nu));
    m.insert("dt".into(), json!(params.dt));
    m.insert("t_final".into(), json!(params.t_final));
    m.insert("steps".into(), json!(traj.steps));
    m.insert("initial_energy".into(), json!(first.energy));
    m.insert("final_energy".into(), json!(last.energy));
    m.insert("max_energy_increase".into(), json!(traj.max_energy_increase));
    m.insert("blow_up".into(), json!(traj.blow_up));
    write_summary(output.summary.as_deref(), &Value::Object(m))?;
    match traj.blow_up {
        Some(t) => Err(Error::BlowUp { t }),
        None => Ok(()),
    }
}

fn study_header(ctx: &Context, study: &StudyArgs, kind: &str) -> serde_json::Map<String, Value> {
    let mut m = ctx.header(kind);
    m.insert("form".into(), json!(study.form));
    m.insert("dim".into(), json!(study.dim));
    m.insert("resolutions".into(), json!(study.resolutions));
    m
}

fn write_study(ctx: &Context, study: &StudyArgs, s: &RefinementStudy) -> Result<()> {
    write_csv(study.output.out.as_deref(), &s.measurements)?;
    let mut m = study_header(ctx, study, &s.kind);
    m.insert("slope".into(), json!(s.slope));
    m.insert("intercept".into(), json!(s.intercept));
    m.insert("measurements".into(), json!(s.measurements));
    write_summary(study.output.summary.as_deref(), &Value::Object(m))
}

fn test_forms(tests: &[String], dim: usize) -> Result<Vec<(String, AnalyticForm)>> {
    if tests.is_empty() {
        if dim != 2 {
            return Err(Error::InvalidArgument("give --test forms when --dim is not 2".into()));
        }
        return Ok(default_test_forms());
    }
    tests.iter().map(|t| Ok((t.clone(), parse_form(t, dim)?))).collect()
}

fn cmd_weak(ctx: &Context, study: &StudyArgs, nu: f64, tests: &[String]) -> Result<()> {
    let form = parse_form(&study.form, study.dim)?;
    let tests = test_forms(tests, study.dim)?;
    let report = converge_weak_flow(&form, nu, &tests, &study.resolutions, &ctx.study_options())?;
    write_csv(study.output.out.as_deref(), &report.rows)?;
    let mut m = study_header(ctx, study, "weak-flow");
    m.insert("nu".into(), json!(nu));
    m.insert("oracle".into(), json!(report.oracle));
    m.insert("gaps_non_increasing".into(), json!(report.gaps_non_increasing(0.05)));
    let slopes: Vec<Value> = report
        .test_form_ids()
        .iter()
        .map(|id| {
            let eta: Vec<f64> = report.rows.iter().filter(|r| &r.test_form_id == id).map(|r| r.eta).collect();
            let fit = crate::experiments::fit_log_log(&eta, &report.gaps(id));
            json!({ "test_form_id": id, "slope": fit.map(|f| f.0), "intercept": fit.map(|f| f.1) })
        })
        .collect();
    m.insert("fits".into(), Value::Array(slopes));
    write_summary(study.output.summary.as_deref(), &Value::Object(m))
}

#[derive(Serialize)]
struct SteadyCsvRow {
    resolution: usize,
    eta: f64,
    steady_residual: f64,
    orthogonality_defect: f64,
}

fn cmd_steady(ctx: &Context, study: &StudyArgs, nu: f64, tests: &[String]) -> Result<()> {
    let form = parse_form(&study.form, study.dim)?;
    let tests = test_forms(tests, study.dim)?;
    let scan = steady_state_scan(&form, nu, &tests, &study.resolutions, &ctx.study_options())?;
    let rows: Vec<SteadyCsvRow> = scan
        .rows
        .iter()
        .map(|r| SteadyCsvRow {
            resolution: r.resolution,
            eta: r.eta,
            steady_residual: r.steady_residual,
            orthogonality_defect: r.orthogonality_defect,
        })
        .collect();
    write_csv(study.output.out.as_deref(), &rows)?;
    let mut m = study_header(ctx, study, "steady-state");
    m.insert("nu".into(), json!(nu));
    m.insert("oracle".into(), json!(scan.oracle));
    m.insert("rows".into(), json!(scan.rows));
    write_summary(study.output.summary.as_deref(), &Value::Object(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn exit_codes() {
        assert_eq!(cli_main(argv("cochain-flow --help")), 0);
        assert_eq!(cli_main(argv("cochain-flow --version")), 0);
        assert_eq!(cli_main(argv("cochain-flow --bogus mesh")), 1);
        assert_eq!(cli_main(argv("cochain-flow mesh --torus 1 --info")), 1);
        assert_eq!(cli_main(argv("cochain-flow mesh --torus 4 --dim 2 --info")), 0);
        assert_eq!(cli_main(argv("cochain-flow --metric nope mesh --torus 4")), 1);
    }

    #[test]
    fn counts_are_labelled() {
        assert_eq!(counts_line(&build_flat_torus(4, 2).unwrap()), "V=16 E=48 F=32");
    }
}

//! Command-line front end: solve QDIMACS instances with any of the four
//! eliminators, verify a result against the exhaustive oracle, run the
//! compositional benchmark sweep, and generate instances.
//!
//! Exit codes: `solve` returns 0 on success, 1 on parse or I/O errors, 2 when
//! a resource cap aborts the run. `verify` returns 0 when the result is
//! equivalent, 1 on a mismatch (printing the first differing point over the
//! free variables), 3 when the oracle's own caps are exceeded.

use std::fs;
use std::io::Write;
use std::process::ExitCode;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qe_core::baselines::{
    dp_resolution_qe, enum_sa_qe, qe_gbl_qe, BaselineError, DpConfig, EnumSaConfig, QeGblConfig,
};
use qe_core::benchgen::{
    base_block, copies_node_bound, gen_copies, gen_random_ecnf, Manifest,
};
use qe_core::cnf::{emit_dimacs, emit_qdimacs, parse_qdimacs, Cnf, EcnfFormula, Var};
use qe_core::engine::{run_qe, EngineConfig, RunStatus};
use qe_core::oracle::{first_counterexample, OracleConfig, OracleError};

#[derive(Parser)]
#[command(
    name = "qe",
    version,
    about = "Existential quantifier elimination for CNF formulas"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eliminate the quantified variables of a QDIMACS file and emit the
    /// result as DIMACS CNF.
    Solve(SolveArgs),
    /// Check a previously computed result against the exhaustive oracle.
    Verify(VerifyArgs),
    /// Sweep k independent copies of the base block across algorithms and
    /// report a CSV table.
    Bench(BenchArgs),
    /// Generate benchmark instances.
    #[command(subcommand)]
    Gen(GenCmd),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Algo {
    /// Dependency-sequent search (the main engine).
    Dds,
    /// Davis-Putnam resolution elimination.
    Dp,
    /// Model enumeration with free-variable projection.
    Enumsa,
    /// Boundary-point-guided elimination.
    Qegbl,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Dds => "dds",
            Algo::Dp => "dp",
            Algo::Enumsa => "enumsa",
            Algo::Qegbl => "qegbl",
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// QDIMACS input file.
    input: String,
    #[arg(long, value_enum, default_value_t = Algo::Dds)]
    algo: Algo,
    /// Write the result CNF here instead of stdout.
    #[arg(long)]
    out: Option<String>,
    /// Write run statistics as JSON.
    #[arg(long)]
    stats_json: Option<String>,
    /// Write the search trace as JSON lines (dds only).
    #[arg(long)]
    trace: Option<String>,
    /// Reactivate stored D-sequents instead of re-deriving them (dds).
    #[arg(long)]
    reuse_dseqs: bool,
    /// Delete conflict resolvents superseded at an enclosing merge (dds).
    #[arg(long)]
    conflict_retention: bool,
    /// Recompute incremental state after every backtrack and compare (dds).
    #[arg(long)]
    debug_checks: bool,
    /// Abort after this many search nodes (dds).
    #[arg(long)]
    node_cap: Option<u64>,
    /// Abort after this many seconds (dds).
    #[arg(long)]
    time_cap_secs: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// QDIMACS input file.
    input: String,
    /// DIMACS file holding the claimed elimination result.
    result: String,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated copy counts.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,500")]
    copies: Vec<u32>,
    /// Comma-separated algorithms to run.
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [Algo::Dds, Algo::Enumsa])]
    algos: Vec<Algo>,
    /// Per-run wall-clock budget in seconds.
    #[arg(long, default_value_t = 10)]
    timeout: u64,
    /// Write the CSV report here instead of stdout.
    #[arg(long)]
    report: Option<String>,
}

#[derive(Subcommand)]
enum GenCmd {
    /// k variable-disjoint copies of the fixed 4-variable base block.
    Copies {
        #[arg(long)]
        k: u32,
        /// Write QDIMACS here instead of stdout.
        #[arg(long)]
        out: Option<String>,
        /// Write a JSON description of the instance.
        #[arg(long)]
        manifest: Option<String>,
    },
    /// A seeded random instance; the lowest vars become quantified.
    Random {
        /// Defaults to the QE_DDS_SEED environment variable, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 8)]
        vars: u32,
        #[arg(long, default_value_t = 16)]
        clauses: usize,
        #[arg(long, default_value_t = 3)]
        clause_len: usize,
        /// Fraction of variables to quantify, rounded to a count.
        #[arg(long, default_value_t = 0.5)]
        x_fraction: f64,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        manifest: Option<String>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Solve(args) => cmd_solve(&args),
        Cmd::Verify(args) => cmd_verify(&args),
        Cmd::Bench(args) => cmd_bench(&args),
        Cmd::Gen(args) => cmd_gen(&args),
    }
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn read_input(path: &str) -> Result<EcnfFormula, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    parse_qdimacs(&text).map_err(|e| format!("{path}: {e}"))
}

fn write_output(path: Option<&str>, content: &str) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| format!("{p}: {e}")),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| e.to_string()),
    }
}

fn baseline_status(err: &BaselineError) -> &'static str {
    match err {
        BaselineError::ClauseCapExceeded { .. } => "clause_cap_exceeded",
        BaselineError::ModelCapExceeded { .. } => "model_cap_exceeded",
        BaselineError::TableTooLarge { .. } => "table_too_large",
        BaselineError::ScanBudgetExceeded { .. } => "scan_budget_exceeded",
        BaselineError::OrderMismatch | BaselineError::NotQuantified { .. } => "invalid_request",
    }
}

fn cmd_solve(args: &SolveArgs) -> ExitCode {
    let phi = match read_input(&args.input) {
        Ok(phi) => phi,
        Err(e) => return fail(e),
    };
    if args.trace.is_some() && args.algo != Algo::Dds {
        eprintln!("note: only the dds engine records traces; ignoring --trace");
    }

    let started = Instant::now();
    let mut stats = json!({
        "schema": 1,
        "algo": args.algo.name(),
        "nodes": 0u64,
        "resolvents": 0u64,
        "dsequents": 0u64,
        "joins": 0u64,
        "maxDepth": 0u64,
        "status": "complete",
    });
    let mut capped = false;
    let mut g: Option<Cnf> = None;

    match args.algo {
        Algo::Dds => {
            let cfg = EngineConfig {
                node_cap: args.node_cap,
                time_cap: args.time_cap_secs.map(Duration::from_secs),
                reuse_dseqs: args.reuse_dseqs,
                conflict_retention: args.conflict_retention,
                record_trace: args.trace.is_some(),
                debug_checks: args.debug_checks,
            };
            let res = run_qe(&phi, &cfg);
            stats["nodes"] = res.stats.nodes.into();
            stats["resolvents"] = res.stats.resolvents_added.into();
            stats["dsequents"] = res.stats.dseqs_total().into();
            stats["joins"] = res.stats.joins.into();
            stats["maxDepth"] = res.stats.max_depth.into();
            stats["reused"] = res.stats.dseqs_reused.into();
            stats["status"] = serde_json::to_value(res.status).unwrap();
            if let Some(b) = res.answer_for_empty_y {
                stats["constant"] = b.into();
            }
            if let Some(path) = &args.trace {
                let mut lines = String::new();
                for ev in &res.trace {
                    lines.push_str(&serde_json::to_string(ev).unwrap());
                    lines.push('\n');
                }
                if let Err(e) = write_output(Some(path), &lines) {
                    return fail(e);
                }
            }
            capped = res.status != RunStatus::Complete;
            g = Some(res.g);
        }
        Algo::Dp => {
            let order: Vec<Var> = phi.quantified().iter().copied().collect();
            match dp_resolution_qe(&phi, &order, &DpConfig::default()) {
                Ok(cnf) => g = Some(cnf),
                Err(e) => {
                    eprintln!("error: {e}");
                    stats["status"] = baseline_status(&e).into();
                    capped = true;
                }
            }
        }
        Algo::Enumsa => match enum_sa_qe(&phi, &EnumSaConfig::default()) {
            Ok(res) => {
                stats["models"] = res.models.into();
                g = res.g;
            }
            Err(e) => {
                eprintln!("error: {e}");
                stats["status"] = baseline_status(&e).into();
                capped = true;
            }
        },
        Algo::Qegbl => match qe_gbl_qe(&phi, &QeGblConfig::default()) {
            Ok(cnf) => g = Some(cnf),
            Err(e) => {
                eprintln!("error: {e}");
                stats["status"] = baseline_status(&e).into();
                capped = true;
            }
        },
    }

    stats["wallMs"] = (started.elapsed().as_millis() as u64).into();
    if let Some(path) = &args.stats_json {
        let mut text = serde_json::to_string_pretty(&stats).unwrap();
        text.push('\n');
        if let Err(e) = write_output(Some(path), &text) {
            return fail(e);
        }
    }
    if let Some(cnf) = &g {
        if let Err(e) = write_output(args.out.as_deref(), &emit_dimacs(cnf)) {
            return fail(e);
        }
    }
    if capped {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_verify(args: &VerifyArgs) -> ExitCode {
    let phi = match read_input(&args.input) {
        Ok(phi) => phi,
        Err(e) => return fail(e),
    };
    let g = match read_input(&args.result) {
        Ok(res) if !res.quantified().is_empty() => {
            return fail(format!("{}: result must be quantifier-free", args.result));
        }
        Ok(res) => res.cnf().clone(),
        Err(e) => return fail(e),
    };
    match first_counterexample(&g, &phi, &OracleConfig::default()) {
        Ok(None) => {
            println!("equivalent");
            ExitCode::SUCCESS
        }
        Ok(Some(point)) => {
            let codes: Vec<String> = point
                .iter()
                .map(|(v, b)| if b { v.to_string() } else { format!("-{v}") })
                .collect();
            println!("differs at free-variable point: {}", codes.join(" "));
            ExitCode::from(1)
        }
        Err(
            e @ (OracleError::QuantifiedVarInResult { .. }
            | OracleError::ResultVarOutOfRange { .. }),
        ) => {
            println!("malformed result: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

struct BenchRow {
    k: u32,
    algo: Algo,
    vars: u32,
    clauses: usize,
    nodes: u64,
    models: u64,
    wall_ms: u64,
    status: String,
}

/// Runs one benchmark instance on a worker thread so a stuck algorithm can
/// be abandoned at the timeout; the detached thread dies with the process.
fn bench_run(phi: EcnfFormula, algo: Algo, timeout: Duration) -> (u64, u64, u64, String) {
    let (tx, rx) = mpsc::channel();
    let started = Instant::now();
    let engine_timeout = timeout;
    thread::spawn(move || {
        let outcome = match algo {
            Algo::Dds => {
                let cfg = EngineConfig {
                    reuse_dseqs: true,
                    time_cap: Some(engine_timeout),
                    ..EngineConfig::default()
                };
                let res = run_qe(&phi, &cfg);
                let status = match res.status {
                    RunStatus::Complete => "complete",
                    RunStatus::NodeCapExceeded => "node_cap_exceeded",
                    RunStatus::TimeCapExceeded => "time_cap_exceeded",
                };
                (res.stats.nodes, 0, status.to_string())
            }
            Algo::Dp => {
                let order: Vec<Var> = phi.quantified().iter().copied().collect();
                match dp_resolution_qe(&phi, &order, &DpConfig::default()) {
                    Ok(_) => (0, 0, "complete".to_string()),
                    Err(e) => (0, 0, baseline_status(&e).to_string()),
                }
            }
            Algo::Enumsa => {
                let cfg = EnumSaConfig {
                    build_g: false,
                    ..EnumSaConfig::default()
                };
                match enum_sa_qe(&phi, &cfg) {
                    Ok(res) => (0, res.models, "complete".to_string()),
                    Err(BaselineError::ModelCapExceeded { cap }) => {
                        (0, cap, "model_cap_exceeded".to_string())
                    }
                    Err(e) => (0, 0, baseline_status(&e).to_string()),
                }
            }
            Algo::Qegbl => match qe_gbl_qe(&phi, &QeGblConfig::default()) {
                Ok(_) => (0, 0, "complete".to_string()),
                Err(e) => (0, 0, baseline_status(&e).to_string()),
            },
        };
        let _ = tx.send(outcome);
    });
    match rx.recv_timeout(timeout.saturating_add(Duration::from_secs(1))) {
        Ok((nodes, models, status)) => {
            (nodes, models, started.elapsed().as_millis() as u64, status)
        }
        Err(_) => (0, 0, timeout.as_millis() as u64, "timeout".to_string()),
    }
}

fn cmd_bench(args: &BenchArgs) -> ExitCode {
    let base = base_block();
    let timeout = Duration::from_secs(args.timeout);
    let mut rows = Vec::new();
    for &k in &args.copies {
        let phi = gen_copies(&base, k);
        for &algo in &args.algos {
            let (nodes, models, wall_ms, status) = bench_run(phi.clone(), algo, timeout);
            rows.push(BenchRow {
                k,
                algo,
                vars: phi.num_vars(),
                clauses: phi.cnf().len(),
                nodes,
                models,
                wall_ms,
                status,
            });
        }
    }
    let mut csv = String::from("k,algo,vars,clauses,nodes,models,wall_ms,status,node_bound\n");
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.k,
            r.algo.name(),
            r.vars,
            r.clauses,
            r.nodes,
            r.models,
            r.wall_ms,
            r.status,
            copies_node_bound(r.k)
        ));
    }
    match write_output(args.report.as_deref(), &csv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn cmd_gen(args: &GenCmd) -> ExitCode {
    let (phi, manifest, out, manifest_path) = match args {
        GenCmd::Copies { k, out, manifest } => {
            if *k == 0 {
                return fail("--k must be at least 1");
            }
            let phi = gen_copies(&base_block(), *k);
            let m = Manifest::for_copies(*k, &phi);
            (phi, m, out, manifest)
        }
        GenCmd::Random {
            seed,
            vars,
            clauses,
            clause_len,
            x_fraction,
            out,
            manifest,
        } => {
            if *vars == 0 {
                return fail("--vars must be at least 1");
            }
            let seed = seed.unwrap_or_else(|| {
                std::env::var("QE_DDS_SEED")
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(0)
            });
            let phi = gen_random_ecnf(seed, *vars, *clauses, *clause_len, *x_fraction);
            let m = Manifest::for_random(seed, *clause_len, *x_fraction, &phi);
            (phi, m, out, manifest)
        }
    };
    if let Some(path) = manifest_path {
        let mut text = serde_json::to_string_pretty(&manifest).unwrap();
        text.push('\n');
        if let Err(e) = write_output(Some(path), &text) {
            return fail(e);
        }
    }
    match write_output(out.as_deref(), &emit_qdimacs(&phi)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

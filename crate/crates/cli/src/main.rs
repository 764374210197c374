//! `circulant` -- print, verify, simulate and bench circulant-graph
//! broadcast schedules.
//!
//! Exit codes: 0 on success, 1 when verification or simulation fails,
//! 2 on usage errors.

use circulant_collectives::formats::{
    bench_rows_to_csv, schedule_doc, trace_to_lines, TraceMeta,
};
use circulant_collectives::sim::{
    choose_block_count, run_allgatherv, run_broadcast, run_reduce, run_reduce_scatter,
    BlockCountMode, CollectiveKind, CollectiveSpec, Distribution, ReduceOp, SimResult,
};
use circulant_collectives::{verify_range, Topology};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "circulant",
    version,
    about = "Round-optimal broadcast schedules on circulant graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Collective {
    Bcast,
    Allgatherv,
    Reduce,
    ReduceScatter,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dist {
    Regular,
    Irregular,
    Degenerate,
}

impl From<Dist> for Distribution {
    fn from(d: Dist) -> Self {
        match d {
            Dist::Regular => Distribution::Regular,
            Dist::Irregular => Distribution::Irregular,
            Dist::Degenerate => Distribution::Degenerate,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the skip table of the p-rank circulant graph
    Skips {
        #[arg(long)]
        p: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Print the receive and send schedules for all p ranks
    Schedule {
        #[arg(long)]
        p: usize,
        /// Root rank; rank rows hold the schedules renumbered for it
        #[arg(long, default_value_t = 0)]
        root: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Write the rendered document here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the four schedule correctness conditions over a range of p
    Verify {
        /// Single processor count (shorthand for --p-from P --p-to P)
        #[arg(long, conflicts_with_all = ["p_from", "p_to"])]
        p: Option<usize>,
        #[arg(long)]
        p_from: Option<usize>,
        #[arg(long)]
        p_to: Option<usize>,
    },
    /// Run one collective in the round-synchronous simulator
    Simulate {
        #[arg(long, value_enum)]
        collective: Collective,
        #[arg(long)]
        p: usize,
        /// Block count; computed from --m when omitted
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        root: usize,
        #[arg(long, value_enum, default_value_t = Dist::Regular)]
        dist: Dist,
        /// Total element count (drives the block-count formulas and the
        /// allgatherv / reduce-scatter distributions)
        #[arg(long)]
        m: Option<usize>,
        /// Block-size tuning constant for broadcast-style collectives
        #[arg(long, default_value_t = 70.0)]
        factor_f: f64,
        /// Block-count tuning constant for allgather-style collectives
        #[arg(long, default_value_t = 40.0)]
        factor_g: f64,
        /// Write the trace export here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time per-rank schedule computation over a range of p, as CSV
    Bench {
        #[arg(long)]
        p_from: usize,
        #[arg(long)]
        p_to: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), ExitCode> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            ExitCode::from(2)
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Skips { p, format } => cmd_skips(p, format),
        Command::Schedule { p, root, format, out } => cmd_schedule(p, root, format, &out),
        Command::Verify { p, p_from, p_to } => cmd_verify(p, p_from, p_to),
        Command::Simulate {
            collective,
            p,
            n,
            root,
            dist,
            m,
            factor_f,
            factor_g,
            out,
        } => cmd_simulate(collective, p, n, root, dist, m, factor_f, factor_g, &out),
        Command::Bench { p_from, p_to, reps, out } => cmd_bench(p_from, p_to, reps, &out),
    }
}

fn cmd_skips(p: usize, format: Format) -> ExitCode {
    let topo = match Topology::new(p) {
        Ok(t) => t,
        Err(e) => return usage_error(&e.to_string()),
    };
    match format {
        Format::Table => {
            println!("p={} q={}", topo.p(), topo.q());
            let cells: Vec<String> = topo.skips().iter().map(|s| s.to_string()).collect();
            println!("sigma: {}", cells.join(" "));
        }
        Format::Json => {
            let doc = serde_json::json!({ "p": topo.p(), "q": topo.q(), "sigma": topo.skips() });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
        }
        Format::Csv => {
            println!("k,sigma");
            for (k, s) in topo.skips().iter().enumerate() {
                println!("{k},{s}");
            }
        }
    }
    ExitCode::SUCCESS
}

fn cmd_schedule(p: usize, root: usize, format: Format, out: &Option<PathBuf>) -> ExitCode {
    let topo = match Topology::new(p) {
        Ok(t) => t,
        Err(e) => return usage_error(&e.to_string()),
    };
    let doc = match schedule_doc(&topo, root) {
        Ok(d) => d,
        Err(e) => return usage_error(&e.to_string()),
    };
    let rendered = match format {
        Format::Table => doc.to_table(),
        Format::Json => {
            let mut s = doc.to_json();
            s.push('\n');
            s
        }
        Format::Csv => doc.to_csv(),
    };
    match emit(out, &rendered) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn cmd_verify(p: Option<usize>, p_from: Option<usize>, p_to: Option<usize>) -> ExitCode {
    let (from, to) = match (p, p_from, p_to) {
        (Some(p), None, None) => (p, p),
        (None, Some(from), Some(to)) => (from, to),
        _ => return usage_error("pass either --p or both --p-from and --p-to"),
    };
    if from == 0 || from > to {
        return usage_error("need 1 <= p-from <= p-to");
    }
    let summary = match verify_range(from, to) {
        Ok(s) => s,
        Err(e) => return usage_error(&e.to_string()),
    };
    println!(
        "p in [{from},{to}]: {} verified, {}",
        summary.checked,
        if summary.all_ok { "all pass" } else { "FAILURES" }
    );
    println!(
        "max recursions {}, max scans {}, max violations {}",
        summary.max_recursions, summary.max_scans, summary.max_violations
    );
    if let Some(failed) = &summary.first_failure {
        println!(
            "first failure: p={} rank={} round={}: {}",
            failed.p, failed.failure.rank, failed.failure.round, failed.failure.detail
        );
    }
    if summary.all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    collective: Collective,
    p: usize,
    n: Option<usize>,
    root: usize,
    dist: Dist,
    m: Option<usize>,
    factor_f: f64,
    factor_g: f64,
    out: &Option<PathBuf>,
) -> ExitCode {
    if factor_f <= 0.0 || factor_g <= 0.0 {
        return usage_error("tuning factors must be positive");
    }
    let n = match (n, m) {
        (Some(n), _) => n,
        (None, Some(m)) if m >= 1 => match collective {
            Collective::Bcast | Collective::Reduce => {
                choose_block_count(m, p, BlockCountMode::Broadcast, factor_f)
            }
            Collective::Allgatherv | Collective::ReduceScatter => {
                choose_block_count(m, p, BlockCountMode::Allgather, factor_g)
            }
        },
        (None, Some(_)) => return usage_error("--m must be at least 1"),
        (None, None) => 1,
    };
    let elements = m.unwrap_or(p * n);

    let spec = match collective {
        Collective::Bcast => CollectiveSpec::broadcast(p, n, root),
        Collective::Allgatherv => CollectiveSpec::allgatherv(p, n, elements, dist.into()),
        Collective::Reduce => CollectiveSpec::reduce(p, n, root, ReduceOp::IntSum),
        Collective::ReduceScatter => {
            CollectiveSpec::reduce_scatter_dist(p, n, ReduceOp::IntSum, elements, dist.into())
        }
    };
    let result = match spec.kind {
        CollectiveKind::Broadcast => run_broadcast(&spec),
        CollectiveKind::Allgatherv => run_allgatherv(&spec),
        CollectiveKind::Reduce => run_reduce(&spec),
        CollectiveKind::ReduceScatter => run_reduce_scatter(&spec),
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => return usage_error(&e.to_string()),
    };

    println!(
        "collective={} p={p} n={n} root={root} rounds={} {}",
        spec.kind.name(),
        result.rounds_used,
        if result.ok { "ok" } else { "FAILED" }
    );
    for diag in &result.diagnostics {
        eprintln!("diagnostic: {diag}");
    }
    if let Some(path) = out {
        if let Err(code) = write_trace(path, &spec, &result) {
            return code;
        }
    }
    if result.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn write_trace(path: &Path, spec: &CollectiveSpec, result: &SimResult) -> Result<(), ExitCode> {
    let root = matches!(
        spec.kind,
        CollectiveKind::Broadcast | CollectiveKind::Reduce
    )
    .then_some(spec.root);
    let meta = TraceMeta {
        collective: spec.kind.name().to_string(),
        p: spec.p,
        n: spec.n,
        root,
        rounds: result.rounds_used,
        ok: result.ok,
    };
    std::fs::write(path, trace_to_lines(&meta, &result.trace)).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn cmd_bench(p_from: usize, p_to: usize, reps: usize, out: &Option<PathBuf>) -> ExitCode {
    if p_from == 0 || p_from > p_to {
        return usage_error("need 1 <= p-from <= p-to");
    }
    let mut rows = Vec::new();
    for p in p_from..=p_to {
        match circulant_collectives::bench::time_schedules(p, reps) {
            Ok(Some(row)) => rows.push(row),
            Ok(None) => {}
            Err(e) => return usage_error(&e.to_string()),
        }
    }
    match emit(out, &bench_rows_to_csv(&rows)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

//! Benchmark CLI.
//!
//! ```text
//! bench --problem e3 --seeds 10 --methods fpa,esqm:0.5,esqm:0.1,esqm:0.02 \
//!       --out results.csv [--size-index N | --dims p,n,k] [--paper-scale] \
//!       [--log-history] [--tol T] [--max-iter N] [--config FILE]
//! ```
//!
//! Options may also come from a key = value config file; command-line flags
//! win on conflict. Exits 0 only if every (method, seed) row completed.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dcfpa::bench::{
    emit_csv, format_summary, resolve_dims, run_benchmark, BenchConfig, Method, SizeSpec,
};
use dcfpa::instance::InstanceKind;

#[derive(Parser, Debug)]
#[command(name = "bench", about = "Seeded benchmark sweeps for the DC solvers")]
struct Cli {
    /// Problem family: e3 (Gaussian noise, group sparsity) or e4 (Cauchy
    /// noise, complex embedding).
    #[arg(long)]
    problem: Option<String>,

    /// Multiply the base dimensions by this factor.
    #[arg(long)]
    size_index: Option<usize>,

    /// Explicit dimensions p,n,k (overrides --size-index).
    #[arg(long)]
    dims: Option<String>,

    /// Use the large paper-scale base dimensions instead of desk scale.
    #[arg(long)]
    paper_scale: bool,

    /// Number of seeded instances (seeds run 1..=S).
    #[arg(long)]
    seeds: Option<usize>,

    /// Comma-separated methods: fpa, esqm:DELTA.
    #[arg(long)]
    methods: Option<String>,

    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Record per-iteration history (larger memory footprint).
    #[arg(long)]
    log_history: bool,

    /// Termination tolerance override.
    #[arg(long)]
    tol: Option<f64>,

    /// Iteration cap override.
    #[arg(long)]
    max_iter: Option<usize>,

    /// Key = value config file; flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_config_file(path: &PathBuf) -> Result<HashMap<String, String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("{path:?}:{}: expected key = value", lineno + 1));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_dims(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected p,n,k, got {s:?}"));
    }
    let v: Result<Vec<usize>, _> = parts.iter().map(|p| p.trim().parse::<usize>()).collect();
    let v = v.map_err(|e| format!("bad dimension in {s:?}: {e}"))?;
    Ok((v[0], v[1], v[2]))
}

fn build_config(cli: &Cli) -> Result<(BenchConfig, PathBuf), String> {
    let file = match &cli.config {
        Some(path) => parse_config_file(path)?,
        None => HashMap::new(),
    };
    let from_file = |key: &str| file.get(key).cloned();

    let problem_str = cli
        .problem
        .clone()
        .or_else(|| from_file("problem"))
        .ok_or("missing --problem (e3 or e4)")?;
    let problem = InstanceKind::parse(&problem_str).map_err(|e| e.to_string())?;

    let paper_scale = cli.paper_scale
        || from_file("paper-scale")
            .map(|v| v == "true" || v == "1")
            .unwrap_or(false);
    let log_history = cli.log_history
        || from_file("log-history")
            .map(|v| v == "true" || v == "1")
            .unwrap_or(false);

    let dims_str = cli.dims.clone().or_else(|| from_file("dims"));
    let size_index = match cli.size_index {
        Some(i) => Some(i),
        None => match from_file("size-index") {
            Some(s) => Some(
                s.parse::<usize>()
                    .map_err(|e| format!("bad size-index: {e}"))?,
            ),
            None => None,
        },
    };
    let size = match (dims_str, size_index) {
        (Some(d), _) => {
            let (p, n, k) = parse_dims(&d)?;
            SizeSpec::Dims(p, n, k)
        }
        (None, Some(i)) => SizeSpec::Index(i),
        (None, None) => SizeSpec::Desk,
    };
    let dims = resolve_dims(problem, size, paper_scale);

    let seeds = match cli.seeds {
        Some(s) => s,
        None => match from_file("seeds") {
            Some(s) => s.parse::<usize>().map_err(|e| format!("bad seeds: {e}"))?,
            None => 1,
        },
    };

    let methods_str = cli
        .methods
        .clone()
        .or_else(|| from_file("methods"))
        .ok_or("missing --methods (e.g. fpa,esqm:0.5)")?;
    let methods: Result<Vec<Method>, _> = methods_str
        .split(',')
        .map(|m| Method::parse(m.trim()))
        .collect();
    let methods = methods.map_err(|e| e.to_string())?;

    let out = cli
        .out
        .clone()
        .or_else(|| from_file("out").map(PathBuf::from))
        .ok_or("missing --out PATH")?;

    let tol = match cli.tol {
        Some(t) => Some(t),
        None => match from_file("tol") {
            Some(s) => Some(s.parse::<f64>().map_err(|e| format!("bad tol: {e}"))?),
            None => None,
        },
    };
    let max_iter = match cli.max_iter {
        Some(m) => Some(m),
        None => match from_file("max-iter") {
            Some(s) => Some(
                s.parse::<usize>()
                    .map_err(|e| format!("bad max-iter: {e}"))?,
            ),
            None => None,
        },
    };

    let cfg = BenchConfig {
        problem,
        dims,
        seeds,
        methods,
        log_history,
        tol,
        max_iter,
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok((cfg, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, out) = match build_config(&cli) {
        Ok(ok) => ok,
        Err(msg) => {
            eprintln!("bench: {msg}");
            return ExitCode::from(1);
        }
    };

    let (p, n, k) = cfg.dims;
    eprintln!(
        "bench: problem={} dims=({p},{n},{k}) seeds={} methods=[{}]",
        cfg.problem.as_str(),
        cfg.seeds,
        cfg.methods
            .iter()
            .map(|m| m.label())
            .collect::<Vec<_>>()
            .join(",")
    );

    let rows = match run_benchmark(&cfg) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("bench: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = emit_csv(&rows, &out) {
        eprintln!("bench: cannot write {out:?}: {e}");
        return ExitCode::from(1);
    }
    print!("{}", format_summary(&rows));
    println!("wrote {} rows to {}", rows.len(), out.display());

    let all_ok = rows.iter().all(|r| r.report.is_some());
    if all_ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("bench: some rows failed; see the termination column");
        ExitCode::from(1)
    }
}

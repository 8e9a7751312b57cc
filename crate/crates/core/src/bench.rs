//! Benchmark harness: generates seeded instances, runs the configured
//! methods, and emits one CSV row per (method, seed) pair.
//!
//! Timing is reported in stages: the QR factorization of the design, the
//! anchor solve given the factorization, the warm-start pipeline, and the
//! solver itself. Rows are ordered by (method, seed) in
//! the order methods were configured, regardless of execution order, and
//! identical configurations reproduce identical CSV output except for the
//! `cpu_*` columns.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::error::Error;
use crate::esqm::{esqm_solve, ESQMConfig};
use crate::fpa::{fpa_solve, FPAConfig, RunReport};
use crate::fpa_nonconvex::fpa_nonconvex_solve;
use crate::init::{init_e3, init_e4};
use crate::instance::{generate_timed, GenSpec, InstanceKind};
use crate::problem::{eval_residual, recovery_error};
use crate::rng::RNG_ALGORITHM;

/// A method to benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Fpa,
    Esqm { delta: f64 },
}

impl Method {
    pub fn parse(s: &str) -> Result<Self, Error> {
        if s == "fpa" {
            return Ok(Method::Fpa);
        }
        if let Some(delta) = s.strip_prefix("esqm:") {
            let delta: f64 = delta
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad esqm delta in {s:?}")))?;
            if delta <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "esqm delta must be positive, got {delta}"
                )));
            }
            return Ok(Method::Esqm { delta });
        }
        Err(Error::InvalidConfig(format!(
            "unknown method {s:?} (expected fpa or esqm:<delta>)"
        )))
    }

    pub fn label(&self) -> String {
        match self {
            Method::Fpa => "fpa".to_string(),
            Method::Esqm { delta } => format!("esqm:{delta}"),
        }
    }
}

/// Problem size selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeSpec {
    /// The default desk-scale dimensions.
    Desk,
    /// Multiple of the base dimensions.
    Index(usize),
    /// Explicit `(p, n, k)`.
    Dims(usize, usize, usize),
}

/// Desk-scale bases keep a full benchmark run in the minutes range; the
/// `paper_scale` flag switches to the larger reference sizes.
pub fn resolve_dims(
    problem: InstanceKind,
    size: SizeSpec,
    paper_scale: bool,
) -> (usize, usize, usize) {
    let base = match (problem, paper_scale) {
        (InstanceKind::E3, false) => (360, 1280, 60),
        (InstanceKind::E3, true) => (720, 2560, 120),
        (InstanceKind::E4, false) => (180, 640, 30),
        (InstanceKind::E4, true) => (360, 1280, 60),
    };
    match size {
        SizeSpec::Desk => base,
        SizeSpec::Index(i) => (base.0 * i, base.1 * i, base.2 * i),
        SizeSpec::Dims(p, n, k) => (p, n, k),
    }
}

/// Fully resolved benchmark configuration.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub problem: InstanceKind,
    pub dims: (usize, usize, usize),
    pub seeds: usize,
    pub methods: Vec<Method>,
    pub log_history: bool,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.seeds == 0 {
            return Err(Error::InvalidConfig("need at least one seed".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("need at least one method".into()));
        }
        Ok(())
    }
}

/// One benchmark outcome. `report` carries the full solver output for
/// in-process consumers; only the scalar columns go to the CSV.
#[derive(Debug)]
pub struct BenchRow {
    pub method: String,
    pub seed: u64,
    pub p: usize,
    pub n: usize,
    pub k: usize,
    pub iters: usize,
    pub cpu_qr: f64,
    pub cpu_slater: f64,
    pub cpu_init: f64,
    pub cpu_solve: f64,
    pub rec_err: f64,
    pub residual: f64,
    pub termination: String,
    pub report: Option<RunReport>,
}

/// Runs the full benchmark. Per-row solver failures are recorded in the
/// `termination` column and do not abort the sweep.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRow>, Error> {
    cfg.validate()?;
    let (p, n, k) = cfg.dims;
    // (method index, seed) -> row; filled per seed, then ordered by method.
    let mut rows: Vec<(usize, BenchRow)> = Vec::new();

    for seed in 1..=cfg.seeds as u64 {
        let spec = match cfg.problem {
            InstanceKind::E3 => GenSpec::e3(p, n, k, seed),
            InstanceKind::E4 => GenSpec::e4(p, n, k, seed),
        };

        let generated = generate_timed(&spec);
        let (inst, timings) = match generated {
            Ok(ok) => ok,
            Err(e) => {
                for (mi, method) in cfg.methods.iter().enumerate() {
                    rows.push((
                        mi,
                        error_row(method.label(), seed, (p, n, k), format!("error: {e}")),
                    ));
                }
                continue;
            }
        };

        let t_init = Instant::now();
        let init = match cfg.problem {
            InstanceKind::E3 => init_e3(&inst),
            InstanceKind::E4 => init_e4(&inst),
        };
        let cpu_init = t_init.elapsed().as_secs_f64();

        for (mi, method) in cfg.methods.iter().enumerate() {
            let outcome = match (method, cfg.problem) {
                (Method::Fpa, InstanceKind::E3) => {
                    let mut fc = FPAConfig {
                        log_history: cfg.log_history,
                        ..FPAConfig::default()
                    };
                    if let Some(t) = cfg.tol {
                        fc.tol = t;
                    }
                    if let Some(m) = cfg.max_iter {
                        fc.max_iter = m;
                    }
                    fpa_solve(&inst, &init.x0, &fc)
                }
                (Method::Fpa, InstanceKind::E4) => {
                    let mut fc = FPAConfig {
                        log_history: cfg.log_history,
                        ..FPAConfig::default()
                    };
                    if let Some(t) = cfg.tol {
                        fc.tol = t;
                    }
                    if let Some(m) = cfg.max_iter {
                        fc.max_iter = m;
                    }
                    fpa_nonconvex_solve(&inst, &init.x0, &fc)
                }
                (Method::Esqm { delta }, _) => {
                    let mut ec = ESQMConfig {
                        delta: *delta,
                        log_history: cfg.log_history,
                        ..ESQMConfig::default()
                    };
                    if let Some(t) = cfg.tol {
                        ec.tol = t;
                    }
                    if let Some(m) = cfg.max_iter {
                        ec.max_iter = m;
                    }
                    esqm_solve(&inst, &init.x0, &ec)
                }
            };

            let row = match outcome {
                Ok(mut report) => {
                    report.rng_algorithm = Some(RNG_ALGORITHM.to_string());
                    report.initializer = Some(init.label.to_string());
                    let rec = recovery_error(&inst, &report.final_x).unwrap_or(f64::NAN);
                    let res = eval_residual(&inst, &report.final_x);
                    BenchRow {
                        method: method.label(),
                        seed,
                        p,
                        n,
                        k,
                        iters: report.iterations,
                        cpu_qr: timings.qr_seconds,
                        cpu_slater: timings.slater_seconds,
                        cpu_init,
                        cpu_solve: report.cpu_seconds,
                        rec_err: rec,
                        residual: res,
                        termination: report.termination.as_str().to_string(),
                        report: Some(report),
                    }
                }
                Err(e) => error_row(method.label(), seed, (p, n, k), format!("error: {e}")),
            };
            rows.push((mi, row));
        }
    }

    rows.sort_by(|(mi_a, row_a), (mi_b, row_b)| mi_a.cmp(mi_b).then(row_a.seed.cmp(&row_b.seed)));
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

fn error_row(method: String, seed: u64, dims: (usize, usize, usize), msg: String) -> BenchRow {
    BenchRow {
        method,
        seed,
        p: dims.0,
        n: dims.1,
        k: dims.2,
        iters: 0,
        cpu_qr: f64::NAN,
        cpu_slater: f64::NAN,
        cpu_init: f64::NAN,
        cpu_solve: f64::NAN,
        rec_err: f64::NAN,
        residual: f64::NAN,
        termination: msg.replace(',', ";"),
        report: None,
    }
}

pub const CSV_HEADER: &str =
    "method,seed,p,n,k,iters,cpu_qr,cpu_slater,cpu_init,cpu_solve,rec_err,residual,termination";

/// Writes the rows as CSV. Floats use scientific notation with shortest
/// round-trip precision, so parsing the file back reproduces the values
/// exactly.
pub fn emit_csv(rows: &[BenchRow], path: &Path) -> Result<(), Error> {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            r.method,
            r.seed,
            r.p,
            r.n,
            r.k,
            r.iters,
            r.cpu_qr,
            r.cpu_slater,
            r.cpu_init,
            r.cpu_solve,
            r.rec_err,
            r.residual,
            r.termination
        )
        .unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parses a CSV produced by [`emit_csv`] back into rows (without reports).
pub fn parse_csv(text: &str) -> Result<Vec<BenchRow>, Error> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig("empty csv".into()))?;
    if header != CSV_HEADER {
        return Err(Error::InvalidConfig("unexpected csv header".into()));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 13 {
            return Err(Error::InvalidConfig(format!("bad csv row: {line}")));
        }
        let fu = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::InvalidConfig(s.into()))
        };
        let ff = |s: &str| s.parse::<f64>().map_err(|_| Error::InvalidConfig(s.into()));
        rows.push(BenchRow {
            method: parts[0].to_string(),
            seed: parts[1]
                .parse()
                .map_err(|_| Error::InvalidConfig(parts[1].into()))?,
            p: fu(parts[2])?,
            n: fu(parts[3])?,
            k: fu(parts[4])?,
            iters: fu(parts[5])?,
            cpu_qr: ff(parts[6])?,
            cpu_slater: ff(parts[7])?,
            cpu_init: ff(parts[8])?,
            cpu_solve: ff(parts[9])?,
            rec_err: ff(parts[10])?,
            residual: ff(parts[11])?,
            termination: parts[12].to_string(),
            report: None,
        });
    }
    Ok(rows)
}

/// Seed-averaged summary per method, for terminal display.
pub fn format_summary(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<12} {:>6} {:>10} {:>12} {:>12} {:>10}",
        "method", "rows", "mean_iter", "mean_recerr", "mean_resid", "mean_cpu"
    )
    .unwrap();
    let mut seen: Vec<String> = Vec::new();
    for r in rows {
        if !seen.contains(&r.method) {
            seen.push(r.method.clone());
        }
    }
    for m in seen {
        let ok: Vec<&BenchRow> = rows
            .iter()
            .filter(|r| r.method == m && r.report.is_some())
            .collect();
        let all = rows.iter().filter(|r| r.method == m).count();
        if ok.is_empty() {
            writeln!(
                out,
                "{m:<12} {all:>6} {:>10} {:>12} {:>12} {:>10}",
                "-", "-", "-", "-"
            )
            .unwrap();
            continue;
        }
        let nf = ok.len() as f64;
        let mean_iter = ok.iter().map(|r| r.iters as f64).sum::<f64>() / nf;
        let mean_rec = ok.iter().map(|r| r.rec_err).sum::<f64>() / nf;
        let mean_res = ok.iter().map(|r| r.residual).sum::<f64>() / nf;
        let mean_cpu = ok.iter().map(|r| r.cpu_solve).sum::<f64>() / nf;
        writeln!(
            out,
            "{m:<12} {all:>6} {mean_iter:>10.1} {mean_rec:>12.4} {mean_res:>12.3e} {mean_cpu:>10.3}"
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing() {
        assert_eq!(Method::parse("fpa").unwrap(), Method::Fpa);
        assert_eq!(
            Method::parse("esqm:0.5").unwrap(),
            Method::Esqm { delta: 0.5 }
        );
        assert!(Method::parse("esqm:nope").is_err());
        assert!(Method::parse("esqm:-1").is_err());
        assert!(Method::parse("newton").is_err());
    }

    #[test]
    fn dims_resolution() {
        assert_eq!(
            resolve_dims(InstanceKind::E3, SizeSpec::Desk, false),
            (360, 1280, 60)
        );
        assert_eq!(
            resolve_dims(InstanceKind::E4, SizeSpec::Desk, false),
            (180, 640, 30)
        );
        assert_eq!(
            resolve_dims(InstanceKind::E3, SizeSpec::Index(2), true),
            (1440, 5120, 240)
        );
        assert_eq!(
            resolve_dims(InstanceKind::E3, SizeSpec::Dims(10, 20, 3), false),
            (10, 20, 3)
        );
    }

    #[test]
    fn smoke_run_tiny() {
        let cfg = BenchConfig {
            problem: InstanceKind::E3,
            dims: (12, 40, 4),
            seeds: 1,
            methods: vec![Method::Fpa, Method::Esqm { delta: 0.5 }],
            log_history: false,
            tol: None,
            max_iter: None,
        };
        let rows = run_benchmark(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].method, "fpa");
        assert_eq!(rows[1].method, "esqm:0.5");
        for r in &rows {
            assert!(r.report.is_some(), "row failed: {}", r.termination);
            assert!(r.rec_err.is_finite());
            assert!(r.iters > 0);
        }
        // The feasible method ends (weakly) inside the constraint set.
        assert!(rows[0].residual <= 1e-8);
    }

    #[test]
    fn csv_roundtrip_and_cardinality() {
        let cfg = BenchConfig {
            problem: InstanceKind::E3,
            dims: (10, 30, 3),
            seeds: 2,
            methods: vec![Method::Fpa],
            log_history: false,
            tol: None,
            max_iter: Some(50),
        };
        let rows = run_benchmark(&cfg).unwrap();
        assert_eq!(rows.len(), 2); // one per (method, seed)
        let path = std::env::temp_dir().join("dcfpa_bench_roundtrip.csv");
        emit_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.len(), rows.len());
        for (a, b) in rows.iter().zip(&parsed) {
            assert_eq!(a.method, b.method);
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.iters, b.iters);
            // Bit-exact float round trip.
            assert_eq!(a.rec_err.to_bits(), b.rec_err.to_bits());
            assert_eq!(a.residual.to_bits(), b.residual.to_bits());
            assert_eq!(a.cpu_solve.to_bits(), b.cpu_solve.to_bits());
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let path = std::path::Path::new("/nonexistent-dir/dcfpa.csv");
        assert!(emit_csv(&[], path).is_err());
    }

    #[test]
    fn empty_rows_give_header_only_file() {
        let path = std::env::temp_dir().join("dcfpa_bench_empty.csv");
        emit_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.trim(), CSV_HEADER);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn deterministic_modulo_cpu_columns() {
        let cfg = BenchConfig {
            problem: InstanceKind::E3,
            dims: (10, 30, 3),
            seeds: 2,
            methods: vec![Method::Fpa],
            log_history: false,
            tol: None,
            max_iter: Some(200),
        };
        let a = run_benchmark(&cfg).unwrap();
        let b = run_benchmark(&cfg).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.method, rb.method);
            assert_eq!(ra.seed, rb.seed);
            assert_eq!(ra.iters, rb.iters);
            assert_eq!(ra.rec_err.to_bits(), rb.rec_err.to_bits());
            assert_eq!(ra.residual.to_bits(), rb.residual.to_bits());
            assert_eq!(ra.termination, rb.termination);
        }
    }
}

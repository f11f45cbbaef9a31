//! Parameter sweeps over the footing problem and their tabular output.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::analysis::condition_number;
use crate::assembly::{Formulation, MaterialParams, ReferenceSystem};
use crate::error::{BiotError, Result};
use crate::linalg::{minres, EigMode, DEFAULT_MAXITER, DEFAULT_RTOL};
use crate::mesh::build_structured_mesh;
use crate::preconditioners::{PrecKind, PreconditionerSpec};

pub const CSV_HEADER: [&str; 10] =
    ["prec", "E", "nu", "kappa", "n", "iterations", "converged", "cond_number", "wall_time_s", "rtol"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "E_list")]
    pub e_list: Vec<f64>,
    pub nu_list: Vec<f64>,
    pub kappa_list: Vec<f64>,
    pub mesh_list: Vec<usize>,
    pub preconditioners: Vec<PrecKind>,
    pub formulation: Formulation,
    pub rtol: f64,
    pub maxiter: usize,
    /// Condition numbers are computed on the coarsest mesh only.
    pub with_condition_numbers: bool,
    pub cond_mode: EigMode,
    /// Explicit β for the preconditioners that accept one.
    pub beta: Option<f64>,
    /// Worker threads; `None` uses all available cores.
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            e_list: vec![3e4, 3e5, 3e6],
            nu_list: vec![0.4, 0.49, 0.495, 0.499],
            kappa_list: vec![1.0, 10.0, 1e3, 1e5, 1e7],
            mesh_list: vec![16, 32, 64],
            preconditioners: vec![PrecKind::P1III, PrecKind::P2III, PrecKind::P3III],
            formulation: Formulation::ThreeField,
            rtol: DEFAULT_RTOL,
            maxiter: DEFAULT_MAXITER,
            with_condition_numbers: false,
            cond_mode: EigMode::Lanczos,
            beta: None,
            workers: None,
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text).map_err(|e| BiotError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(BiotError::Config(format!("{name} must not be empty")))
            } else {
                Ok(())
            }
        };
        empty("E_list", self.e_list.len())?;
        empty("nu_list", self.nu_list.len())?;
        empty("kappa_list", self.kappa_list.len())?;
        empty("mesh_list", self.mesh_list.len())?;
        empty("preconditioners", self.preconditioners.len())?;
        for &e in &self.e_list {
            for &nu in &self.nu_list {
                for &k in &self.kappa_list {
                    MaterialParams::footing(e, nu, k).map_err(|err| BiotError::Config(err.to_string()))?;
                }
            }
        }
        if let Some(&n) = self.mesh_list.iter().find(|&&n| n < 2 || n % 2 != 0) {
            return Err(BiotError::Config(format!("mesh size {n} must be even and at least 2")));
        }
        for &p in &self.preconditioners {
            if p.formulation().is_some_and(|f| f != self.formulation) {
                return Err(BiotError::Config(format!(
                    "preconditioner {p} does not apply to the {} system",
                    self.formulation
                )));
            }
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(BiotError::Config(format!("rtol must lie in (0, 1), got {}", self.rtol)));
        }
        if self.maxiter == 0 {
            return Err(BiotError::Config("maxiter must be positive".into()));
        }
        if self.beta.is_some_and(|b| !(b > 0.0 && b.is_finite())) {
            return Err(BiotError::Config("beta must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(BiotError::Config("workers must be positive".into()));
        }
        Ok(())
    }

    pub fn num_points(&self) -> usize {
        self.e_list.len()
            * self.nu_list.len()
            * self.kappa_list.len()
            * self.mesh_list.len()
            * self.preconditioners.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub prec: PrecKind,
    #[serde(rename = "E")]
    pub e: f64,
    pub nu: f64,
    pub kappa: f64,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub cond_number: Option<f64>,
    pub wall_time_s: f64,
    pub rtol: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SweepRow {
    fn key_cmp(&self, other: &Self) -> Ordering {
        let rank = |p: PrecKind| PrecKind::ALL.iter().position(|q| *q == p);
        rank(self.prec)
            .cmp(&rank(other.prec))
            .then(self.e.total_cmp(&other.e))
            .then(self.nu.total_cmp(&other.nu))
            .then(self.kappa.total_cmp(&other.kappa))
            .then(self.n.cmp(&other.n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub formulation: Option<Formulation>,
    pub rtol: f64,
    pub maxiter: Option<usize>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BiotError::Format(e.to_string()))
    }

    /// Reads rows written by [`emit_table`] in CSV format.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| BiotError::Format(e.to_string()))?.clone();
        if headers.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(BiotError::Format(format!("unexpected CSV header {:?}", headers.iter().collect::<Vec<_>>())));
        }
        let mut rows = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| BiotError::Format(e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let bad =
                |i: usize| BiotError::Format(format!("row {}: bad {} value {:?}", line + 1, CSV_HEADER[i], field(i)));
            let num = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
            let int = |i: usize| field(i).parse::<usize>().map_err(|_| bad(i));
            rows.push(SweepRow {
                prec: field(0).parse().map_err(|_| bad(0))?,
                e: num(1)?,
                nu: num(2)?,
                kappa: num(3)?,
                n: int(4)?,
                iterations: int(5)?,
                converged: field(6).parse().map_err(|_| bad(6))?,
                cond_number: if field(7).is_empty() { None } else { Some(num(7)?) },
                wall_time_s: num(8)?,
                rtol: num(9)?,
                notes: Vec::new(),
            });
        }
        let rtol = rows.first().map_or(DEFAULT_RTOL, |r| r.rtol);
        Ok(SweepResult {
            metadata: SweepMetadata { formulation: None, rtol, maxiter: None, version: String::new(), timestamp: None },
            rows,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = BiotError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            _ => Err(BiotError::Config(format!("unknown table format {s:?}"))),
        }
    }
}

struct Point {
    e: f64,
    nu: f64,
    kappa: f64,
}

fn failed_row(prec: PrecKind, p: &Point, n: usize, rtol: f64, why: String) -> SweepRow {
    SweepRow {
        prec,
        e: p.e,
        nu: p.nu,
        kappa: p.kappa,
        n,
        iterations: 0,
        converged: false,
        cond_number: None,
        wall_time_s: 0.0,
        rtol,
        notes: vec![why],
    }
}

fn run_point(cfg: &SweepConfig, reference: &ReferenceSystem, p: &Point, n: usize, with_cond: bool) -> Vec<SweepRow> {
    let params = match MaterialParams::footing(p.e, p.nu, p.kappa) {
        Ok(x) => x,
        Err(e) => return cfg.preconditioners.iter().map(|&k| failed_row(k, p, n, cfg.rtol, e.to_string())).collect(),
    };
    let (op, rhs) = match reference.instantiate(&params) {
        Ok(x) => x,
        Err(e) => return cfg.preconditioners.iter().map(|&k| failed_row(k, p, n, cfg.rtol, e.to_string())).collect(),
    };
    let system = op.monolithic();
    cfg.preconditioners
        .iter()
        .map(|&kind| {
            let start = std::time::Instant::now();
            let spec = match PreconditionerSpec::with_beta(kind, cfg.beta) {
                Ok(s) => s,
                Err(e) => return failed_row(kind, p, n, cfg.rtol, e.to_string()),
            };
            let prec = match spec.build(&op) {
                Ok(x) => x,
                Err(e) => return failed_row(kind, p, n, cfg.rtol, e.to_string()),
            };
            let mut row = match minres(&system, &prec, &rhs, cfg.rtol, cfg.maxiter) {
                Ok((_, rep)) => SweepRow {
                    prec: kind,
                    e: p.e,
                    nu: p.nu,
                    kappa: p.kappa,
                    n,
                    iterations: rep.iterations,
                    converged: rep.converged,
                    cond_number: None,
                    wall_time_s: 0.0,
                    rtol: cfg.rtol,
                    notes: prec.notes().to_vec(),
                },
                Err(e) => failed_row(kind, p, n, cfg.rtol, e.to_string()),
            };
            row.wall_time_s = start.elapsed().as_secs_f64();
            if with_cond {
                match condition_number(&op, &prec, cfg.cond_mode) {
                    Ok(c) => row.cond_number = Some(c),
                    Err(e) => row.notes.push(format!("condition number: {e}")),
                }
            }
            row
        })
        .collect()
}

/// Runs every configuration point. Per-point failures become rows with
/// `converged = false`; only an invalid configuration is an error.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let cond_mesh = config.mesh_list.iter().copied().min();
    let points: Vec<Point> = config
        .e_list
        .iter()
        .flat_map(|&e| {
            config
                .nu_list
                .iter()
                .flat_map(move |&nu| config.kappa_list.iter().map(move |&kappa| Point { e, nu, kappa }))
        })
        .collect();
    let meshes: BTreeSet<usize> = config.mesh_list.iter().copied().collect();
    let mut rows = Vec::with_capacity(config.num_points());
    for n in meshes {
        let with_cond = config.with_condition_numbers && Some(n) == cond_mesh;
        let reference = build_structured_mesh(n).and_then(|m| ReferenceSystem::new(&m, config.formulation));
        match reference {
            Ok(reference) => rows.extend(run_points(config, &reference, &points, n, with_cond)),
            Err(e) => {
                for p in &points {
                    rows.extend(
                        config.preconditioners.iter().map(|&k| failed_row(k, p, n, config.rtol, e.to_string())),
                    );
                }
            }
        }
    }
    rows.sort_by(|a, b| a.key_cmp(b));
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
    Ok(SweepResult {
        metadata: SweepMetadata {
            formulation: Some(config.formulation),
            rtol: config.rtol,
            maxiter: Some(config.maxiter),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        },
        rows,
    })
}

#[cfg(feature = "parallel")]
fn run_points(
    cfg: &SweepConfig,
    reference: &ReferenceSystem,
    points: &[Point],
    n: usize,
    with_cond: bool,
) -> Vec<SweepRow> {
    use rayon::prelude::*;
    let work = || points.par_iter().flat_map_iter(|p| run_point(cfg, reference, p, n, with_cond)).collect::<Vec<_>>();
    match cfg.workers.map(|w| rayon::ThreadPoolBuilder::new().num_threads(w).build()) {
        Some(Ok(pool)) => pool.install(work),
        _ => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_points(
    cfg: &SweepConfig,
    reference: &ReferenceSystem,
    points: &[Point],
    n: usize,
    with_cond: bool,
) -> Vec<SweepRow> {
    points.iter().flat_map(|p| run_point(cfg, reference, p, n, with_cond)).collect()
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn fmt_short(x: f64) -> String {
    if x != 0.0 && (x.abs() >= 1e4 || x.abs() < 1e-2) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn fmt_h(n: usize) -> String {
    format!("1/{n}")
}

pub fn emit_table(result: &SweepResult, format: TableFormat) -> Result<String> {
    if result.rows.is_empty() {
        return Err(BiotError::Format("sweep result has no rows".into()));
    }
    match format {
        TableFormat::Csv => emit_csv(result),
        TableFormat::Json => serde_json::to_string_pretty(result).map_err(|e| BiotError::Format(e.to_string())),
        TableFormat::Markdown => Ok(emit_markdown(result)),
    }
}

fn emit_csv(result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| BiotError::Format(e.to_string());
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in &result.rows {
        w.write_record([
            r.prec.as_str().to_string(),
            fmt_num(r.e),
            fmt_num(r.nu),
            fmt_num(r.kappa),
            r.n.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.cond_number.map(fmt_num).unwrap_or_default(),
            fmt_num(r.wall_time_s),
            fmt_num(r.rtol),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| BiotError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BiotError::Format(e.to_string()))
}

#[derive(PartialEq, Eq, PartialOrd, Ord, Clone, Copy)]
struct OrdF64(u64);

impl OrdF64 {
    fn new(x: f64) -> Self {
        // order-preserving bit pattern for finite floats
        let b = x.to_bits();
        OrdF64(if x.is_sign_negative() { !b } else { b | (1 << 63) })
    }

    fn get(self) -> f64 {
        let b = self.0;
        f64::from_bits(if b >> 63 == 1 { b & !(1 << 63) } else { !b })
    }
}

/// One table per κ: rows `(ν, h)`, column groups by `E`, one column per
/// preconditioner inside each group.
fn emit_markdown(result: &SweepResult) -> String {
    let rows = &result.rows;
    let kappas: BTreeSet<OrdF64> = rows.iter().map(|r| OrdF64::new(r.kappa)).collect();
    let es: BTreeSet<OrdF64> = rows.iter().map(|r| OrdF64::new(r.e)).collect();
    let mut precs: Vec<PrecKind> = Vec::new();
    for r in rows {
        if !precs.contains(&r.prec) {
            precs.push(r.prec);
        }
    }
    precs.sort_by_key(|p| PrecKind::ALL.iter().position(|q| q == p));
    let mut index: BTreeMap<(OrdF64, OrdF64, OrdF64, usize, usize), &SweepRow> = BTreeMap::new();
    for r in rows {
        let pi = precs.iter().position(|p| *p == r.prec).unwrap_or(0);
        index.insert((OrdF64::new(r.kappa), OrdF64::new(r.e), OrdF64::new(r.nu), r.n, pi), r);
    }
    let mut out = String::new();
    let title = match result.metadata.formulation {
        Some(f) => format!("MINRES iterations, {f} system, rtol = {}", fmt_short(result.metadata.rtol)),
        None => format!("MINRES iterations, rtol = {}", fmt_short(result.metadata.rtol)),
    };
    let _ = writeln!(out, "## {title}\n");
    let any_cond = rows.iter().any(|r| r.cond_number.is_some());
    let any_failed = rows.iter().any(|r| !r.converged);
    for &k in &kappas {
        let nu_h: BTreeSet<(OrdF64, usize)> =
            rows.iter().filter(|r| OrdF64::new(r.kappa) == k).map(|r| (OrdF64::new(r.nu), r.n)).collect();
        let render = |out: &mut String,
                      heading: &str,
                      cell: &dyn Fn(&SweepRow) -> Option<String>,
                      only: &dyn Fn(&SweepRow) -> bool| {
            let _ = writeln!(out, "### {heading}\n");
            let mut header = String::from("| ν | h |");
            let mut rule = String::from("|---|---|");
            for e in &es {
                for p in &precs {
                    let _ = write!(header, " E = {} {} |", fmt_short(e.get()), p);
                    rule.push_str("---:|");
                }
            }
            let _ = writeln!(out, "{header}\n{rule}");
            for &(nu, n) in &nu_h {
                if !index.iter().any(|((kk, _, nn, m, _), r)| *kk == k && *nn == nu && *m == n && only(r)) {
                    continue;
                }
                let mut line = format!("| {} | {} |", fmt_num(nu.get()), fmt_h(n));
                for &e in &es {
                    for pi in 0..precs.len() {
                        let text = index.get(&(k, e, nu, n, pi)).and_then(|r| cell(r)).unwrap_or_else(|| "–".into());
                        let _ = write!(line, " {text} |");
                    }
                }
                let _ = writeln!(out, "{line}");
            }
            out.push('\n');
        };
        let iter_cell =
            |r: &SweepRow| Some(if r.converged { r.iterations.to_string() } else { format!("{}*", r.iterations) });
        render(&mut out, &format!("κ = {}", fmt_short(k.get())), &iter_cell, &|_| true);
        if any_cond {
            let cond_cell =
                |r: &SweepRow| r.cond_number.map(|c| if c < 1e3 { format!("{c:.2}") } else { format!("{c:.2e}") });
            render(&mut out, &format!("κ = {}, condition numbers", fmt_short(k.get())), &cond_cell, &|r| {
                r.cond_number.is_some()
            });
        }
    }
    if any_failed {
        out.push_str("`*` not converged (or failed) within maxiter.\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(prec: PrecKind, e: f64, n: usize, it: usize) -> SweepRow {
        SweepRow {
            prec,
            e,
            nu: 0.4,
            kappa: 1e7,
            n,
            iterations: it,
            converged: true,
            cond_number: None,
            wall_time_s: 0.25,
            rtol: 1e-8,
            notes: Vec::new(),
        }
    }

    fn result(rows: Vec<SweepRow>) -> SweepResult {
        SweepResult {
            metadata: SweepMetadata {
                formulation: Some(Formulation::ThreeField),
                rtol: 1e-8,
                maxiter: Some(500),
                version: "0.1.0".into(),
                timestamp: Some(1),
            },
            rows,
        }
    }

    #[test]
    fn default_config_is_valid() {
        let c = SweepConfig::default();
        c.validate().unwrap();
        assert_eq!(c.num_points(), 3 * 4 * 5 * 3 * 3);
    }

    #[test]
    fn config_validation() {
        let mut c = SweepConfig::default();
        c.kappa_list.clear();
        assert!(matches!(c.validate(), Err(BiotError::Config(_))));
        let mut c = SweepConfig::default();
        c.nu_list.push(0.5);
        assert!(c.validate().is_err());
        let mut c = SweepConfig::default();
        c.preconditioners.push(PrecKind::PII);
        assert!(c.validate().is_err());
        let mut c = SweepConfig::default();
        c.mesh_list = vec![15];
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_field_names() {
        let c = SweepConfig::from_json(
            r#"{"E_list": [3e4], "nu_list": [0.4], "kappa_list": [1e7], "mesh_list": [16],
                "preconditioners": ["p1", "none"], "formulation": "three-field", "rtol": 1e-8, "maxiter": 500}"#,
        )
        .unwrap();
        assert_eq!(c.preconditioners, vec![PrecKind::P1III, PrecKind::None]);
        assert!(!c.with_condition_numbers);
        assert!(SweepConfig::from_json(r#"{"kappa_list": []}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn csv_single_row() {
        let text = emit_table(&result(vec![row(PrecKind::P1III, 3e4, 16, 28)]), TableFormat::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "prec,E,nu,kappa,n,iterations,converged,cond_number,wall_time_s,rtol");
        assert_eq!(lines[1], "p1,30000,0.4,10000000,16,28,true,,0.25,0.00000001");
        let back = SweepResult::from_csv(&text).unwrap();
        assert_eq!(back.rows, result(vec![row(PrecKind::P1III, 3e4, 16, 28)]).rows);
    }

    #[test]
    fn json_roundtrip() {
        let mut r = result(vec![row(PrecKind::P1III, 3e4, 16, 28), row(PrecKind::P3III, 3e6, 32, 41)]);
        r.rows[1].cond_number = Some(4.321_987_654_321);
        r.rows[1].notes.push("note".into());
        let text = emit_table(&r, TableFormat::Json).unwrap();
        assert_eq!(SweepResult::from_json(&text).unwrap(), r);
    }

    #[test]
    fn markdown_layout() {
        let r = result(vec![
            row(PrecKind::P1III, 3e4, 16, 28),
            row(PrecKind::P2III, 3e4, 16, 30),
            row(PrecKind::P3III, 3e4, 16, 33),
        ]);
        let md = emit_table(&r, TableFormat::Markdown).unwrap();
        assert!(md.contains("| ν | h | E = 3e4 p1 | E = 3e4 p2 | E = 3e4 p3 |"));
        assert!(md.contains("| 0.4 | 1/16 | 28 | 30 | 33 |"));
        assert!(md.contains("### κ = 1e7"));
    }

    #[test]
    fn formats_and_empty_results() {
        assert_eq!("MD".parse::<TableFormat>().unwrap(), TableFormat::Markdown);
        assert!("xml".parse::<TableFormat>().is_err());
        assert!(emit_table(&result(Vec::new()), TableFormat::Csv).is_err());
    }

    #[test]
    fn ordered_float_keys() {
        for x in [-3.5, -0.0, 0.0, 1e-8, 0.4, 1e7] {
            assert_eq!(OrdF64::new(x).get(), x);
        }
        assert!(OrdF64::new(-1.0) < OrdF64::new(0.5));
        assert!(OrdF64::new(0.49) < OrdF64::new(0.495));
    }
}

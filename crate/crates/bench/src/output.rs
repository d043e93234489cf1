//! Versioned CSV output with a `#`-prefixed metadata preamble.
//!
//! Layout:
//!
//! ```text
//! # schema=1
//! # experiment=convergence
//! # ...
//! experiment,solver,m,n,s,kappa,beta,seed,iteration,...
//! convergence,sirr,2000,50,200,1.0000000000000000e4,...
//! ```
//!
//! Rows of one instance are appended with a single write and flushed, so an
//! interrupted run leaves either whole instances or a torn final line.
//! Reopening a torn file drops the rows of its last instance; the instances
//! that remain are reported as done and the runner skips them.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{BenchError, Result};
use crate::spec::{Experiment, Solver};

pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 16] = [
    "experiment",
    "solver",
    "m",
    "n",
    "s",
    "kappa",
    "beta",
    "seed",
    "iteration",
    "forward_err",
    "residual_err",
    "backward_kw",
    "meta_calls",
    "wall_time_s",
    "converged",
    "failed",
];

/// One CSV line. Undefined metrics are NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub solver: Solver,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub kappa: f64,
    pub beta: f64,
    pub seed: u64,
    pub iteration: usize,
    pub forward_err: f64,
    pub residual_err: f64,
    pub backward_kw: f64,
    pub meta_calls: usize,
    pub wall_time_s: f64,
    pub converged: bool,
    pub failed: bool,
}

/// Identifies the instance a row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct InstanceKey {
    pub n: usize,
    pub s: usize,
    pub kappa_bits: u64,
    pub beta_bits: u64,
    pub seed: u64,
}

impl InstanceKey {
    pub fn new(n: usize, s: usize, kappa: f64, beta: f64, seed: u64) -> Self {
        Self { n, s, kappa_bits: kappa.to_bits(), beta_bits: beta.to_bits(), seed }
    }
}

/// 17 significant digits, enough to round-trip an f64.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl ResultRow {
    pub fn key(&self) -> InstanceKey {
        InstanceKey::new(self.n, self.s, self.kappa, self.beta, self.seed)
    }

    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.experiment.name().to_string(),
            self.solver.name().to_string(),
            self.m.to_string(),
            self.n.to_string(),
            self.s.to_string(),
            fmt_float(self.kappa),
            fmt_float(self.beta),
            self.seed.to_string(),
            self.iteration.to_string(),
            fmt_float(self.forward_err),
            fmt_float(self.residual_err),
            fmt_float(self.backward_kw),
            self.meta_calls.to_string(),
            fmt_float(self.wall_time_s),
            self.converged.to_string(),
            self.failed.to_string(),
        ]
    }

    pub fn from_record(rec: &csv::StringRecord) -> std::result::Result<Self, String> {
        if rec.len() != COLUMNS.len() {
            return Err(format!("expected {} fields, found {}", COLUMNS.len(), rec.len()));
        }
        fn num<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> std::result::Result<T, String> {
            rec[i].parse().map_err(|_| format!("bad {} value {:?}", COLUMNS[i], &rec[i]))
        }
        let experiment = Experiment::ALL
            .into_iter()
            .find(|e| e.name() == &rec[0])
            .ok_or_else(|| format!("unknown experiment {:?}", &rec[0]))?;
        let solver = rec[1].parse::<Solver>().map_err(|e| e.to_string())?;
        Ok(ResultRow {
            experiment,
            solver,
            m: num(rec, 2)?,
            n: num(rec, 3)?,
            s: num(rec, 4)?,
            kappa: num(rec, 5)?,
            beta: num(rec, 6)?,
            seed: num(rec, 7)?,
            iteration: num(rec, 8)?,
            forward_err: num(rec, 9)?,
            residual_err: num(rec, 10)?,
            backward_kw: num(rec, 11)?,
            meta_calls: num(rec, 12)?,
            wall_time_s: num(rec, 13)?,
            converged: num(rec, 14)?,
            failed: num(rec, 15)?,
        })
    }
}

fn preamble(metadata: &[(String, String)]) -> String {
    let mut out = format!("# schema={SCHEMA_VERSION}\n");
    for (k, v) in metadata {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    out
}

fn encode(rows: &[ResultRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        // Writing to a Vec cannot fail.
        w.write_record(r.to_record()).expect("in-memory CSV write");
    }
    w.into_inner().expect("in-memory CSV flush")
}

/// Parses the data rows of a CSV produced by [`CsvSink`].
pub fn parse_rows(text: &str) -> std::result::Result<Vec<ResultRow>, String> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err("header does not match the schema".into());
    }
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| e.to_string())?;
            ResultRow::from_record(&rec).map_err(|e| format!("data row {}: {e}", i + 1))
        })
        .collect()
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_rows(&text).map_err(|e| BenchError::io(path, e))
}

/// Single writer for a results file.
pub struct CsvSink {
    file: File,
    path: PathBuf,
    done: HashSet<InstanceKey>,
}

impl CsvSink {
    /// Creates `path`, or reopens it for resumption when it already holds a
    /// run with identical metadata.
    pub fn open(path: &Path, metadata: &[(String, String)]) -> Result<Self> {
        let io = |e: std::io::Error| BenchError::io(path, e);
        let head = preamble(metadata);
        let mut existing = String::new();
        if path.exists() {
            File::open(path).and_then(|mut f| f.read_to_string(&mut existing)).map_err(io)?;
        }
        if existing.is_empty() {
            let mut file = File::create(path).map_err(io)?;
            file.write_all(head.as_bytes()).and_then(|_| file.flush()).map_err(io)?;
            return Ok(Self { file, path: path.to_path_buf(), done: HashSet::new() });
        }
        if !existing.starts_with(&head) {
            return Err(BenchError::io(path, "existing file was written by a different experiment spec; refusing to append"));
        }
        // A file not ending in a newline was cut mid-write: drop its last instance.
        let clean = existing.ends_with('\n');
        let body_end = existing.rfind('\n').map_or(0, |i| i + 1).max(head.len());
        let body = &existing[head.len()..body_end];
        let rows = parse_rows(&format!("{}\n{body}", COLUMNS.join(","))).map_err(|e| BenchError::io(path, e))?;
        let mut keep = rows.len();
        if !clean {
            if let Some(last) = rows.last().map(ResultRow::key) {
                while keep > 0 && rows[keep - 1].key() == last {
                    keep -= 1;
                }
            }
        }
        // One line per row.
        let kept_bytes = head.len() + body.split_inclusive('\n').take(keep).map(str::len).sum::<usize>();
        let done = rows[..keep].iter().map(ResultRow::key).collect();
        let file = OpenOptions::new().write(true).open(path).map_err(io)?;
        file.set_len(kept_bytes as u64).map_err(io)?;
        let file = OpenOptions::new().append(true).open(path).map_err(io)?;
        Ok(Self { file, path: path.to_path_buf(), done })
    }

    pub fn is_done(&self, key: &InstanceKey) -> bool {
        self.done.contains(key)
    }

    pub fn completed(&self) -> usize {
        self.done.len()
    }

    /// Appends the rows of one instance and flushes.
    pub fn append(&mut self, rows: &[ResultRow]) -> Result<()> {
        self.file.write_all(&encode(rows)).and_then(|_| self.file.flush()).map_err(|e| BenchError::io(&self.path, e))?;
        self.done.extend(rows.iter().map(ResultRow::key));
        Ok(())
    }
}

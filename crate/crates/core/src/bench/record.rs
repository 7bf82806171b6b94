use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem_id: String,
    pub n: usize,
    /// `p` on the Stiefel manifold, `r` for correlation problems.
    pub p: usize,
    pub scheme: String,
    pub rho: f64,
    pub gtau: String,
    pub control: bool,
    pub seed: u64,
    pub stop_reason: String,
    pub f_initial: f64,
    pub f_final: f64,
    /// Correlation problems: `‖H o (V^T V - C)‖_F` at the start.
    /// Everything else: `‖D_rho‖_F` at the start.
    pub residual_initial: f64,
    /// Same quantity at the end.
    pub residual: f64,
    pub feasi: f64,
    pub nfge: usize,
    pub iters: usize,
    pub wall_ms: f64,
    /// `|f - f*| / max(1, |f*|)` when the optimum is known.
    pub err: Option<f64>,
    /// Total violation of prescribed entries.
    pub nu: Option<f64>,
}

impl RunRecord {
    /// Copy with the wall time zeroed, for comparing streams across runs.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_ms: 0.0,
            ..self.clone()
        }
    }

    pub fn line_search_failed(&self) -> bool {
        self.stop_reason == "line_search_fail"
    }
}

/// Means over the repetitions of one `(problem, n, p, variant)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub problem_id: String,
    pub n: usize,
    pub p: usize,
    pub scheme: String,
    pub rho: f64,
    pub gtau: String,
    pub control: bool,
    pub count: usize,
    pub a_f_initial: f64,
    pub a_f_final: f64,
    pub a_residual_initial: f64,
    pub a_residual: f64,
    pub a_feasi: f64,
    pub a_nfge: f64,
    pub a_iters: f64,
    pub a_wall_ms: f64,
    pub a_err: Option<f64>,
    pub a_nu: Option<f64>,
    pub line_search_failures: usize,
}

/// Self-describing line of a JSONL stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
pub enum Record {
    Run(RunRecord),
    Aggregate(AggregateRecord),
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    s / c as f64
}

fn mean_opt(xs: &[&RunRecord], f: impl Fn(&RunRecord) -> Option<f64>) -> Option<f64> {
    let v: Option<Vec<f64>> = xs.iter().map(|r| f(r)).collect();
    v.filter(|v| !v.is_empty()).map(|v| mean(v.into_iter()))
}

type GroupKey = (String, usize, usize, String, u64, String, bool);

fn key(r: &RunRecord) -> GroupKey {
    (
        r.problem_id.clone(),
        r.n,
        r.p,
        r.scheme.clone(),
        r.rho.to_bits(),
        r.gtau.clone(),
        r.control,
    )
}

/// Groups records by problem, size and solver variant (first-appearance
/// order) and averages each numeric column.
pub fn aggregate(records: &[RunRecord]) -> Vec<AggregateRecord> {
    let mut order: Vec<GroupKey> = Vec::new();
    let mut groups: std::collections::HashMap<GroupKey, Vec<&RunRecord>> = Default::default();
    for r in records {
        let k = key(r);
        if !groups.contains_key(&k) {
            order.push(k.clone());
        }
        groups.entry(k).or_default().push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let g = &groups[&k];
            let first = g[0];
            AggregateRecord {
                problem_id: first.problem_id.clone(),
                n: first.n,
                p: first.p,
                scheme: first.scheme.clone(),
                rho: first.rho,
                gtau: first.gtau.clone(),
                control: first.control,
                count: g.len(),
                a_f_initial: mean(g.iter().map(|r| r.f_initial)),
                a_f_final: mean(g.iter().map(|r| r.f_final)),
                a_residual_initial: mean(g.iter().map(|r| r.residual_initial)),
                a_residual: mean(g.iter().map(|r| r.residual)),
                a_feasi: mean(g.iter().map(|r| r.feasi)),
                a_nfge: mean(g.iter().map(|r| r.nfge as f64)),
                a_iters: mean(g.iter().map(|r| r.iters as f64)),
                a_wall_ms: mean(g.iter().map(|r| r.wall_ms)),
                a_err: mean_opt(g, |r| r.err),
                a_nu: mean_opt(g, |r| r.nu),
                line_search_failures: g.iter().filter(|r| r.line_search_failed()).count(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Jsonl,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json" => Ok(OutputFormat::Jsonl),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidParameter(format!("unknown format '{other}'"))),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidParameter(format!("csv: {other:?}")),
    }
}

fn json_err(e: serde_json::Error) -> Error {
    Error::InvalidParameter(format!("json: {e}"))
}

/// Runs first, then aggregates, one JSON object per line.
pub fn write_jsonl<W: Write>(mut w: W, runs: &[RunRecord], aggs: &[AggregateRecord]) -> Result<()> {
    for r in runs {
        serde_json::to_writer(&mut w, &Record::Run(r.clone())).map_err(json_err)?;
        writeln!(w)?;
    }
    for a in aggs {
        serde_json::to_writer(&mut w, &Record::Aggregate(a.clone())).map_err(json_err)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// One CSV table of runs.
pub fn write_runs_csv<W: Write>(w: W, runs: &[RunRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in runs {
        wr.serialize(r).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// One CSV table of aggregates.
pub fn write_aggregates_csv<W: Write>(w: W, aggs: &[AggregateRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for a in aggs {
        wr.serialize(a).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_runs_csv<R: std::io::Read>(r: R) -> Result<Vec<RunRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|rec| rec.map_err(csv_err))
        .collect()
}

//! Argument parsing and output plumbing for `afbb-bench`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use super::{
    compare_schemes, drift_demo, run_experiment, write_aggregates_csv, write_jsonl, write_runs_csv,
    ExperimentConfig, OutputFormat, ProblemSpec, StartKind, Variant,
};
use crate::error::{Error, Result};
use crate::problems::matrix_market::read_matrix_market_file;
use crate::problems::{FixedEntrySet, LMode};
use crate::retraction::{GTau, RetractionScheme, SchemeKind};
use crate::solver::{ResidualMode, SolverConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "AFBB_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "afbb-bench",
    version,
    about = "Benchmark runner for feasible optimization on the Stiefel manifold",
    args_conflicts_with_subcommands = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Seeded batch over ranks and repetitions (the default).
    Run(RunArgs),
    /// Paired runs of several solver variants from identical starts.
    Compare(CompareArgs),
    /// Feasibility error per iteration with and without drift control.
    Drift(DriftArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// ex2, ex3, ex3-weighted, corr-file, balogh, trace-eigen, trace-file, ex10
    #[arg(value_name = "PROBLEM")]
    pub problem_pos: Option<String>,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Single column count (alias for a one-element --ranks).
    #[arg(long)]
    pub p: Option<usize>,
    /// Comma-separated `p` or `r` values.
    #[arg(long, value_delimiter = ',')]
    pub ranks: Vec<usize>,
    #[arg(long, default_value = "minus-one")]
    pub l_mode: LMode,
    /// MatrixMarket file with `C` (correlation problems) or `A` (trace problems).
    #[arg(long)]
    pub matrix_file: Option<PathBuf>,
    /// MatrixMarket file with the weights `H`.
    #[arg(long)]
    pub weights_file: Option<PathBuf>,
    /// Triplet file `i j q` (1-based) of prescribed entries.
    #[arg(long)]
    pub fixed_entries: Option<PathBuf>,
    /// Partners sampled per row when no fixed-entry file is given.
    #[arg(long, default_value_t = 3)]
    pub n_e: usize,
    /// Generated target used by ex10 without --matrix-file: ex2 or ex3.
    #[arg(long, default_value = "ex2")]
    pub ex10_base: String,
    #[arg(long, default_value = "pca")]
    pub start: StartKind,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value = "new")]
    pub scheme: SchemeKind,
    #[arg(long, default_value_t = 0.25)]
    pub rho: f64,
    #[arg(long)]
    pub gtau: Option<GTau>,
    /// Use the plain `W` instead of the drift-controlled one.
    #[arg(long)]
    pub no_control: bool,
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub eps_x: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps_f: f64,
    #[arg(long, default_value_t = 3000)]
    pub max_iter: usize,
    /// Compare `‖D‖` with `eps` directly instead of `eps ‖D_0‖`.
    #[arg(long)]
    pub absolute: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; defaults to $AFBB_OUT_DIR/<problem>.<ext> or stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "jsonl")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Worker threads for independent solves; 0 uses all cores.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Record wall time as 0 so repeated runs produce identical streams.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// `scheme[:rho[:gtau[:ctl|noctl]]]`; the first one is the baseline.
    #[arg(long = "variant", required = true, num_args = 1)]
    pub variants: Vec<Variant>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of paired seeds.
    #[arg(long, default_value_t = 10)]
    pub repeat: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DriftArgs {
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load(path: &Path) -> Result<Arc<crate::linalg::DenseMatrix>> {
    Ok(Arc::new(read_matrix_market_file(path)?))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or("file".into(), |s| s.to_string_lossy().into_owned())
}

impl ProblemArgs {
    fn name(&self) -> Result<String> {
        match (&self.problem_pos, &self.problem) {
            (Some(a), Some(b)) if a != b => Err(Error::InvalidParameter(format!(
                "problem given twice: '{a}' and '{b}'"
            ))),
            (Some(a), _) | (None, Some(a)) => Ok(a.clone()),
            (None, None) => Err(Error::InvalidParameter("no problem given (try --help)".into())),
        }
    }

    pub fn spec(&self) -> Result<ProblemSpec> {
        let name = self.name()?;
        let need_file = |what: &str| {
            self.matrix_file
                .as_deref()
                .ok_or_else(|| Error::InvalidParameter(format!("{what} needs --matrix-file")))
        };
        let spec = match name.as_str() {
            "ex2" => ProblemSpec::Ex2 { n: self.n.unwrap_or(500) },
            "ex3" => ProblemSpec::Ex3 {
                n: self.n.unwrap_or(500),
                weighted: false,
            },
            "ex3-weighted" | "ex3w" => ProblemSpec::Ex3 {
                n: self.n.unwrap_or(500),
                weighted: true,
            },
            "corr-file" => {
                let path = need_file("corr-file")?;
                ProblemSpec::CorrFile {
                    name: stem(path),
                    c: load(path)?,
                    h: self.weights_file.as_deref().map(load).transpose()?,
                }
            }
            "balogh" => ProblemSpec::Balogh {
                n: self.n.unwrap_or(200),
                l_mode: self.l_mode,
            },
            "trace-eigen" => ProblemSpec::TraceEigen { n: self.n.unwrap_or(100) },
            "trace-file" => {
                let path = need_file("trace-file")?;
                ProblemSpec::TraceFile {
                    name: stem(path),
                    a: load(path)?,
                }
            }
            "ex10" => {
                let base = match &self.matrix_file {
                    Some(path) => ProblemSpec::CorrFile {
                        name: stem(path),
                        c: load(path)?,
                        h: self.weights_file.as_deref().map(load).transpose()?,
                    },
                    None => match self.ex10_base.as_str() {
                        "ex2" => ProblemSpec::Ex2 { n: self.n.unwrap_or(200) },
                        "ex3" => ProblemSpec::Ex3 {
                            n: self.n.unwrap_or(200),
                            weighted: false,
                        },
                        other => {
                            return Err(Error::InvalidParameter(format!("unknown ex10 base '{other}'")))
                        }
                    },
                };
                let n = base.n();
                let fixed = self
                    .fixed_entries
                    .as_deref()
                    .map(|p| FixedEntrySet::read_file(n, p).map(Arc::new))
                    .transpose()?;
                ProblemSpec::Ex10 {
                    base: Box::new(base),
                    n_e: self.n_e,
                    fixed,
                }
            }
            other => return Err(Error::InvalidParameter(format!("unknown problem '{other}'"))),
        };
        if self.fixed_entries.is_some() && !matches!(spec, ProblemSpec::Ex10 { .. }) {
            return Err(Error::InvalidParameter("--fixed-entries only applies to ex10".into()));
        }
        Ok(spec)
    }

    pub fn ranks(&self, spec: &ProblemSpec) -> Result<Vec<usize>> {
        if !self.ranks.is_empty() && self.p.is_some() {
            return Err(Error::InvalidParameter("give either --p or --ranks".into()));
        }
        if !self.ranks.is_empty() {
            return Ok(self.ranks.clone());
        }
        Ok(vec![self.p.unwrap_or(if spec.is_correlation() { 5 } else { 4 })])
    }
}

impl SolverArgs {
    pub fn config(&self) -> Result<SolverConfig> {
        if self.gtau.is_some() && !self.scheme.uses_gtau() {
            eprintln!("warning: scheme '{}' ignores --gtau", self.scheme);
        }
        let scheme = RetractionScheme::new(self.scheme)
            .with_gtau(self.gtau.unwrap_or_default())
            .with_control(!self.no_control);
        let mut cfg = SolverConfig::default()
            .with_scheme(scheme)
            .with_rho(self.rho)
            .with_tolerances(self.eps, self.eps_x, self.eps_f)
            .with_max_iter(self.max_iter);
        if self.absolute {
            cfg.residual_mode = ResidualMode::Absolute;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn destination(out: &Option<PathBuf>, id: &str, ext: &str) -> Option<PathBuf> {
    out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV).map(|dir| {
            let safe: String = id.chars().map(|c| if c.is_alphanumeric() || c == '-' { c } else { '_' }).collect();
            PathBuf::from(dir).join(format!("{safe}.{ext}"))
        })
    })
}

fn open(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(args: &RunArgs) -> Result<i32> {
    let spec = args.problem.spec()?;
    let mut cfg = ExperimentConfig::new(spec.clone(), args.problem.ranks(&spec)?);
    cfg.solver = args.solver.config()?;
    cfg.start = args.problem.start;
    cfg.seed = args.seed;
    cfg.repeat = args.repeat;
    cfg.jobs = args.jobs;
    cfg.timing = !args.no_timing;
    let (runs, aggs) = run_experiment(&cfg)?;

    let ext = match args.output.format {
        OutputFormat::Jsonl => "jsonl",
        OutputFormat::Csv => "csv",
    };
    let dest = destination(&args.output.out, &spec.id(), ext);
    match args.output.format {
        OutputFormat::Jsonl => write_jsonl(open(&dest)?, &runs, &aggs)?,
        OutputFormat::Csv => {
            write_runs_csv(open(&dest)?, &runs)?;
            match &dest {
                Some(p) => write_aggregates_csv(open(&Some(p.with_extension("agg.csv")))?, &aggs)?,
                None => {
                    println!();
                    write_aggregates_csv(open(&None)?, &aggs)?;
                }
            }
        }
    }
    Ok(if runs.iter().any(|r| r.line_search_failed()) { 1 } else { 0 })
}

fn compare(args: &CompareArgs) -> Result<i32> {
    let spec = args.problem.spec()?;
    let ranks = args.problem.ranks(&spec)?;
    let base = args.solver.config()?;
    let seeds: Vec<u64> = (0..args.repeat as u64).map(|k| args.seed + k).collect();
    let mut w = open(&args.out)?;
    writeln!(w, "# {} n={} seeds={}", spec.id(), spec.n(), seeds.len())?;
    writeln!(w, "{:<8} {:<32} {:>10} {:>10} {:>12} {:>10}", "p/r", "variant", "a.nfge", "a.iters", "a.err", "a.s.ratio")?;
    for &rank in &ranks {
        for row in compare_schemes(&spec, rank, &args.variants, &seeds, &base, args.jobs)? {
            writeln!(
                w,
                "{:<8} {:<32} {:>10.1} {:>10.1} {:>12} {:>10}",
                rank,
                row.label,
                row.mean_nfge,
                row.mean_iters,
                row.mean_err.map_or("-".into(), |e| format!("{e:.2e}")),
                row.saved_ratio.map_or("-".into(), |s| format!("{s:.1}")),
            )?;
        }
    }
    w.flush()?;
    Ok(0)
}

fn drift(args: &DriftArgs) -> Result<i32> {
    let ctl = drift_demo(args.n, args.p, args.steps, true, args.seed)?;
    let plain = drift_demo(args.n, args.p, args.steps, false, args.seed)?;
    let mut w = open(&args.out)?;
    writeln!(w, "iter,controlled,uncontrolled")?;
    let cell = |t: &super::DriftTrace, k: usize| t.drift.get(k).map_or(String::new(), |v| format!("{v:e}"));
    for k in 0..ctl.drift.len().max(plain.drift.len()) {
        writeln!(w, "{},{},{}", k + 1, cell(&ctl, k), cell(&plain, k))?;
    }
    w.flush()?;
    eprintln!(
        "controlled: max {:e} final {:e}; uncontrolled: max {:e} final {:e}",
        ctl.max(),
        ctl.last(),
        plain.max(),
        plain.last()
    );
    Ok(0)
}

/// Parses `args` and runs the selected command. Returns the process exit
/// code: 0 on success, 1 when some solve ended in a line-search failure.
pub fn main_with_args<I, T>(args: I) -> Result<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return Ok(code);
        }
    };
    match &cli.command {
        None => run(&cli.run),
        Some(Command::Run(a)) => run(a),
        Some(Command::Compare(a)) => compare(a),
        Some(Command::Drift(a)) => drift(a),
    }
}

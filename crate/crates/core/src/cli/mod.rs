//! Command-line front end: `train`, `path`, `cv` and `bench`.
//!
//! Settings come from an optional TOML file (`--config`) and are overridden
//! by flags. Every subcommand writes its artifacts into the output
//! directory; see [`output`] for the file layouts.
//!
//! Exit status: 0 when every fit converged, 2 when some fit stopped at the
//! iteration cap, 1 on error.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::dataset::{generate_synthetic, SyntheticSpec};
use crate::error::{Error, Result};
use crate::path::{cross_validate, lambda_max, run_path};
use crate::solver::{fit, Variant};

pub use config::{DataFormat, EmitFormat, RunConfig};
use output::{BenchRow, CoefficientFile, OutputDir, PathRow, RunSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MAX_ITERS: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "proxlogit", version, about = "Sparse logistic regression by proximal gradient methods")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model and write coefficients, trace and summary.
    Train(CommonArgs),
    /// Solve along a path of λ/λ_max fractions.
    Path(PathArgs),
    /// k-fold cross-validation over a path of fractions.
    Cv(CvArgs),
    /// Time solver variants on synthetic problems of growing size.
    Bench(BenchArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "libsvm"])]
    pub format: Option<String>,
    /// CSV label column (-1 for the last column).
    #[arg(long, allow_hyphen_values = true)]
    pub label_column: Option<i64>,
    /// CSV input starts with a header line.
    #[arg(long)]
    pub has_header: bool,
    /// Append a constant-1 feature (penalized like the others).
    #[arg(long)]
    pub bias: bool,
    #[arg(long, value_parser = ["l1", "scad", "mcp", "capped_l1"])]
    pub penalty: Option<String>,
    #[arg(long)]
    pub lambda_frac: Option<f64>,
    /// Absolute λ, overriding --lambda-frac.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_parser = ["ista_bb", "ista_reverse", "fista_lip", "ista_vanilla", "fista_vanilla"])]
    pub variant: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Fixed initial L instead of the Lipschitz estimate.
    #[arg(long)]
    pub l0: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated output formats: csv, json.
    #[arg(long, value_delimiter = ',')]
    pub emit: Option<Vec<String>>,
    /// Keep every n-th trace record.
    #[arg(long)]
    pub trace_every: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct PathArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated λ/λ_max fractions, increasing.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    /// Solve every point from the configured start instead of warm starting.
    #[arg(long)]
    pub cold_start: bool,
}

#[derive(Debug, Args, Default)]
pub struct CvArgs {
    #[command(flatten)]
    pub path: PathArgs,
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated NxD cells, e.g. 1000x500,1000x1000.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<String>>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Comma-separated solver variants to compare.
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,
    #[arg(long)]
    pub workers: Option<usize>,
}

impl CommonArgs {
    /// Loads the config file (if any) and applies the flag overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.data {
            cfg.data.path = Some(p.clone());
        }
        if let Some(f) = &self.format {
            cfg.data.format = Some(f.parse()?);
        }
        if let Some(c) = self.label_column {
            cfg.data.label_column = Some(c);
        }
        if self.has_header {
            cfg.data.has_header = Some(true);
        }
        if self.bias {
            cfg.data.append_bias = Some(true);
        }
        set(&mut cfg.penalty.kind, self.penalty.clone());
        set(&mut cfg.penalty.lambda_frac, self.lambda_frac);
        set(&mut cfg.penalty.lambda, self.lambda);
        set(&mut cfg.penalty.theta, self.theta);
        set(&mut cfg.penalty.epsilon, self.epsilon);
        set(&mut cfg.solver.variant, self.variant.clone());
        set(&mut cfg.solver.eta, self.eta);
        set(&mut cfg.solver.l0, self.l0);
        set(&mut cfg.solver.tol, self.tol);
        set(&mut cfg.solver.max_iters, self.max_iters);
        if let Some(seed) = self.seed {
            cfg.solver.seed = Some(seed);
            cfg.cv.seed = Some(seed);
            cfg.bench.seed = Some(seed);
            if let Some(s) = cfg.synthetic.as_mut() {
                s.seed = seed;
            }
        }
        set(&mut cfg.output.dir, self.out.clone());
        set(&mut cfg.output.trace_every, self.trace_every);
        if let Some(list) = &self.emit {
            let formats = list
                .iter()
                .map(|s| match s.trim().to_ascii_lowercase().as_str() {
                    "csv" => Ok(EmitFormat::Csv),
                    "json" => Ok(EmitFormat::Json),
                    other => Err(Error::Config(format!("unknown emit format {other:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            cfg.output.emit = Some(formats);
        }
        Ok(cfg)
    }
}

impl PathArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = self.common.resolve()?;
        set(&mut cfg.path.fractions, self.fractions.clone());
        if self.cold_start {
            cfg.path.warm_start = Some(false);
        }
        Ok(cfg)
    }
}

impl CvArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = self.path.resolve()?;
        set(&mut cfg.cv.folds, self.folds);
        Ok(cfg)
    }
}

impl BenchArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = self.common.resolve()?;
        if let Some(cells) = &self.grid {
            let grid = cells
                .iter()
                .map(|c| {
                    let (n, d) = c
                        .split_once(['x', 'X'])
                        .ok_or_else(|| Error::Config(format!("grid cell {c:?} is not NxD")))?;
                    let parse = |s: &str| {
                        s.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::Config(format!("grid cell {c:?} is not NxD")))
                    };
                    Ok([parse(n)?, parse(d)?])
                })
                .collect::<Result<Vec<_>>>()?;
            cfg.bench.grid = Some(grid);
        }
        set(&mut cfg.bench.repetitions, self.repetitions);
        set(&mut cfg.bench.variants, self.variants.clone());
        set(&mut cfg.bench.workers, self.workers);
        if let Some(frac) = self.common.lambda_frac {
            cfg.bench.lambda_frac = Some(frac);
        }
        Ok(cfg)
    }
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn exit_for(all_converged: bool) -> i32 {
    if all_converged {
        EXIT_OK
    } else {
        EXIT_MAX_ITERS
    }
}

/// Fits one model.
pub fn cmd_train(cfg: &RunConfig) -> Result<i32> {
    let data = cfg.load_dataset()?;
    let out = OutputDir::create(&cfg.output_dir())?;
    let lmax = lambda_max(&data)?;
    let pen = cfg.penalty_for(lmax)?;
    let opts = cfg.solver_options()?;

    let started = Instant::now();
    let result = fit(&data, &pen, &opts)?;
    let elapsed = started.elapsed().as_secs_f64();

    out.write_json(
        "coefficients.json",
        &CoefficientFile::new(&result.beta, &pen, opts.variant, lmax),
    )?;
    out.write_trace("trace", &result.trace, cfg.trace_every(), cfg.emits(EmitFormat::Json))?;
    out.write_json(
        "summary.json",
        &RunSummary {
            command: "train",
            variant: opts.variant.name().to_string(),
            penalty: pen.kind.name().to_string(),
            lambda: pen.lambda,
            lambda_max: lmax,
            lipschitz: result.lipschitz,
            n_samples: data.n_samples(),
            n_features: data.n_features(),
            converged: result.converged,
            iterations: result.iterations(),
            final_objective: result.final_objective,
            nnz: result.nnz(),
            threads: 1,
            time_s: elapsed,
        },
    )?;
    Ok(exit_for(result.converged))
}

/// Solves along the configured fractions of λ_max.
pub fn cmd_path(cfg: &RunConfig) -> Result<i32> {
    let data = cfg.load_dataset()?;
    let out = OutputDir::create(&cfg.output_dir())?;
    let spec = cfg.path_spec()?;
    let lmax = lambda_max(&data)?;
    let mut points = run_path(&data, &spec)?;
    points.reverse();

    let mut rows = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        out.write_json(
            &format!("path_coef_{i:02}.json"),
            &CoefficientFile::new(&p.result.beta, &spec.penalty.with_lambda(p.lambda), spec.options.variant, lmax)
                .with_fraction(p.fraction),
        )?;
        rows.push(PathRow {
            fraction: p.fraction,
            lambda: p.lambda,
            final_objective: p.result.final_objective,
            iterations: p.result.iterations(),
            nnz: p.nnz(),
            converged: p.result.converged,
            time_s: p.result.trace.records.last().map_or(0.0, |r| r.time_s),
        });
    }
    out.write_path_rows("path", &rows, cfg.emits(EmitFormat::Json))?;
    Ok(exit_for(points.iter().all(|p| p.result.converged)))
}

/// Cross-validates the configured path.
pub fn cmd_cv(cfg: &RunConfig) -> Result<i32> {
    let data = cfg.load_dataset()?;
    let out = OutputDir::create(&cfg.output_dir())?;
    let spec = cfg.path_spec()?;
    let k = cfg.folds();
    if k < 2 {
        return Err(Error::Config(format!("cv needs at least 2 folds, got {k}")));
    }
    let report = cross_validate(&data, &spec, k, cfg.cv_seed())?;
    out.write_cv(&report, cfg.emits(EmitFormat::Json))?;
    Ok(exit_for(report.cells.iter().all(|c| c.converged)))
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Bench row and whether every repetition converged.
type JobResult = Result<(BenchRow, bool)>;

/// Times each variant on every grid cell.
pub fn cmd_bench(cfg: &RunConfig) -> Result<i32> {
    let out = OutputDir::create(&cfg.output_dir())?;
    let b = &cfg.bench;
    let grid = b.grid.clone().unwrap_or_else(|| config::DEFAULT_BENCH_GRID.to_vec());
    let repetitions = b.repetitions.unwrap_or(3);
    if repetitions == 0 {
        return Err(Error::Config("bench repetitions must be >= 1".into()));
    }
    let variants = match &b.variants {
        Some(list) => list.iter().map(|v| v.parse()).collect::<Result<Vec<Variant>>>()?,
        None => vec![Variant::IstaBB, Variant::IstaReverse, Variant::FistaLipschitz],
    };
    let frac = b.lambda_frac.or(cfg.penalty.lambda_frac).unwrap_or(config::DEFAULT_LAMBDA_FRAC);
    let seed = b.seed.or(cfg.solver.seed).unwrap_or(0);
    let base_opts = cfg.solver_options()?;
    let workers = b.workers.unwrap_or(1).max(1);

    let jobs: Vec<(usize, usize, Variant)> = grid
        .iter()
        .flat_map(|&[n, d]| variants.iter().map(move |&v| (n, d, v)))
        .collect();
    let results: Mutex<Vec<Option<JobResult>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);

    let run_job = |&(n, d, variant): &(usize, usize, Variant)| -> JobResult {
        let n_nonzero = b.n_nonzero.unwrap_or((d / 10).max(1)).min(d);
        let (data, _) = generate_synthetic(&SyntheticSpec::new(n, d, n_nonzero, seed))?;
        let lmax = lambda_max(&data)?;
        let mut pen_cfg = cfg.clone();
        pen_cfg.penalty.lambda = None;
        pen_cfg.penalty.lambda_frac = Some(frac);
        let pen = pen_cfg.penalty_for(lmax)?;
        let opts = crate::solver::SolverOptions {
            variant,
            ..base_opts.clone()
        };
        let mut times = Vec::with_capacity(repetitions);
        let mut iters = Vec::with_capacity(repetitions);
        let mut converged = true;
        for _ in 0..repetitions {
            let started = Instant::now();
            let res = fit(&data, &pen, &opts)?;
            times.push(started.elapsed().as_secs_f64());
            iters.push(res.iterations());
            converged &= res.converged;
        }
        iters.sort_unstable();
        Ok((
            BenchRow {
                variant: variant.name().to_string(),
                n,
                d,
                median_time_s: median(&mut times),
                median_iters: iters[(iters.len() - 1) / 2],
            },
            converged,
        ))
    };

    std::thread::scope(|scope| {
        for _ in 0..workers.min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let r = run_job(&jobs[i]);
                results.lock().expect("bench results lock")[i] = Some(r);
            });
        }
    });

    let mut rows = Vec::with_capacity(jobs.len());
    let mut all_converged = true;
    for r in results.into_inner().expect("bench results lock") {
        let (row, converged) = r.expect("every job ran")?;
        all_converged &= converged;
        rows.push(row);
    }
    out.write_bench(&rows, cfg.emits(EmitFormat::Json))?;
    Ok(exit_for(all_converged))
}

/// Parses arguments, runs the subcommand and returns the exit status.
/// Errors are reported on standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Train(a) => a.resolve().and_then(|c| cmd_train(&c)),
        Command::Path(a) => a.resolve().and_then(|c| cmd_path(&c)),
        Command::Cv(a) => a.resolve().and_then(|c| cmd_cv(&c)),
        Command::Bench(a) => a.resolve().and_then(|c| cmd_bench(&c)),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

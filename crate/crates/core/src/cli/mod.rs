//! Command-line front end. `run` parses arguments, dispatches to a
//! subcommand and maps failures to exit codes: 0 on success, 1 when a
//! computation fails, 2 for usage and input errors.

mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::barycenter::{solve_barycenter, SolverOptions};
use crate::coreset::{distribution_costs, evaluate_with_costs, sensitivity_upper_bounds, uniform_coreset, WeightedCoreset};
use crate::distribution::{common_dim, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::instances::{
    gen_coreset_synthetic, gen_lb_barycenter, gen_ot_pair, gen_pullback, group_by_label, load_csv_distributions, load_idx_dataset, write_csv_distributions, MatchingInstance,
};
use crate::projection::{cost_ratio_sweep, jl_dimension, reduce_solve_reconstruct, DimensionPolicy, MapKind, ProjectionMap, SweepConfig};
use crate::seed::mix_seed;

use report::{BarycenterReport, CoresetReport, CoresetRow, ReduceReport, SweepReport, TimingReport};

#[derive(Parser, Debug)]
#[command(name = "wbary", version, about = "Wasserstein barycenters, random projections and coresets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for a barycenter with a fixed number of atoms.
    Barycenter(BarycenterArgs),
    /// Project, solve in low dimension, and rebuild in the original dimension.
    Reduce(ReduceArgs),
    /// Compare sensitivity and uniform coresets at query points.
    Coreset(CoresetArgs),
    /// Write a generated instance as CSV.
    Gen(GenArgs),
    /// Cost ratio of the reduced pipeline across target dimensions.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// CSV file with rows `dist_id,weight,x_1,...,x_d`.
    #[arg(long, required_unless_present = "idx_images")]
    input: Option<PathBuf>,
    /// IDX image file; distributions are formed per label.
    #[arg(long, requires = "idx_labels", conflicts_with = "input")]
    idx_images: Option<PathBuf>,
    #[arg(long, requires = "idx_images")]
    idx_labels: Option<PathBuf>,
    /// Keep at most this many points per label.
    #[arg(long)]
    subsample: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Leave wall-clock timings out of the output.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long = "support-size", short = 'n')]
    support_size: usize,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
}

impl SolverArgs {
    fn options(&self, seed: u64) -> SolverOptions {
        let mut o = SolverOptions::new(self.support_size, self.p).with_seed(seed).with_restarts(self.restarts);
        o.max_outer_iters = self.max_iters;
        o
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MapArg {
    Gaussian,
    Srht,
}

impl From<MapArg> for MapKind {
    fn from(m: MapArg) -> Self {
        match m {
            MapArg::Gaussian => MapKind::Gaussian,
            MapArg::Srht => MapKind::Srht,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    P2,
    Kirszbraun,
    Optimal,
}

impl From<PolicyArg> for DimensionPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::P2 => DimensionPolicy::P2,
            PolicyArg::Kirszbraun => DimensionPolicy::Kirszbraun,
            PolicyArg::Optimal => DimensionPolicy::Optimal,
        }
    }
}

#[derive(Args, Debug)]
struct BarycenterArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Target dimension.
    #[arg(long, conflicts_with = "policy", required_unless_present = "policy")]
    dim: Option<usize>,
    /// Choose the target dimension from a formula.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Multiplier applied to the dimension formula.
    #[arg(long, default_value_t = 1.0)]
    c_jl: f64,
    #[arg(long, value_enum, default_value_t = MapArg::Gaussian)]
    map: MapArg,
}

#[derive(Args, Debug)]
struct CoresetArgs {
    /// CSV input; without it the line instance with one far outlier is used.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Number of distributions in the outlier instance.
    #[arg(long, default_value_t = 1000)]
    k: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Approximation factor assumed for the anchor barycenter.
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Atoms of the anchor barycenter.
    #[arg(long = "support-size", short = 'n', default_value_t = 1)]
    support_size: usize,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![10usize, 100, 1000])]
    sizes: Vec<usize>,
    /// Query points `x` (the query is a point mass at `x`); coordinates separated by ':'.
    #[arg(long = "query", default_values_t = vec!["0".to_string(), "10".to_string(), "100".to_string()])]
    queries: Vec<String>,
    /// Independent samples per cell.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Draw uniform coresets without replacement, so a full-size sample is exact.
    #[arg(long)]
    without_replacement: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    #[value(alias = "lb_barycenter")]
    LbBarycenter,
    #[value(alias = "ot_pair")]
    OtPair,
    Pullback,
    #[value(alias = "coreset_synthetic")]
    CoresetSynthetic,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    /// Ambient dimension for matching instances.
    #[arg(long, default_value_t = 4)]
    d: usize,
    /// Half the number of points of the lower-bound instance.
    #[arg(long, default_value_t = 2)]
    t: usize,
    #[arg(long = "big-n", default_value_t = 10.0)]
    big_n: f64,
    /// Level count for `pullback`, scale constant for `lb-barycenter`.
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    k: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Target dimensions, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = MapArg::Gaussian)]
    map: MapArg,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

/// Maps an error to the documented exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NumericalFailure(_) | Error::InvalidSolution(_) | Error::ZeroWeight | Error::ZeroAtomWeight(_) => 1,
        _ => 2,
    }
}

/// Runs the command line given by `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Barycenter(a) => cmd_barycenter(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Coreset(a) => cmd_coreset(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Prefixes I/O errors with the offending path.
fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

fn load_input(args: &InputArgs, seed: u64) -> Result<Vec<DiscreteDistribution>> {
    let mus = match (&args.input, &args.idx_images, &args.idx_labels) {
        (Some(path), _, _) => with_path(path, load_csv_distributions(path))?,
        (None, Some(img), Some(lab)) => {
            let (images, labels) = with_path(img, load_idx_dataset(img, lab))?;
            group_by_label(images.points.view(), &labels, args.subsample, seed)?
        }
        _ => return Err(Error::BadParams("no input given".into())),
    };
    if mus.is_empty() {
        return Err(Error::Empty("input contains no distributions"));
    }
    common_dim(&mus)?;
    Ok(mus)
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: serde::Serialize>(common: &CommonArgs, value: &T) -> Result<()> {
    let mut out = open_output(&common.output)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn emit_csv(common: &CommonArgs, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_output(&common.output)?);
    let io_err = |e: csv::Error| Error::Io(e.into());
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(&r).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

fn support_rows(nu: &DiscreteDistribution) -> Vec<Vec<String>> {
    (0..nu.len())
        .map(|j| {
            let mut row = vec![nu.weight(j).to_string()];
            row.extend(nu.atom(j).iter().map(|x| x.to_string()));
            row
        })
        .collect()
}

fn support_header(d: usize) -> Vec<String> {
    std::iter::once("weight".to_string()).chain((1..=d).map(|i| format!("x{i}"))).collect()
}

fn cmd_barycenter(a: BarycenterArgs) -> Result<()> {
    let mus = load_input(&a.input, a.common.seed)?;
    let opts = a.solver.options(a.common.seed);
    let start = Instant::now();
    let res = solve_barycenter(&mus, &opts)?;
    let secs = start.elapsed().as_secs_f64();
    match a.common.format {
        Format::Json => emit_json(
            &a.common,
            &BarycenterReport::new(&res, opts.p, a.common.seed, (!a.common.no_timing).then_some(secs)),
        ),
        Format::Csv => {
            let header = support_header(res.nu.dim());
            emit_csv(&a.common, &header.iter().map(String::as_str).collect::<Vec<_>>(), support_rows(&res.nu))
        }
    }
}

fn cmd_reduce(a: ReduceArgs) -> Result<()> {
    let mus = load_input(&a.input, a.common.seed)?;
    let d = common_dim(&mus)?;
    let m = match (a.dim, a.policy) {
        (Some(m), _) => m,
        (None, Some(policy)) => jl_dimension(a.solver.support_size, a.eps, a.delta, a.solver.p, policy.into(), Some(mus.len()), a.c_jl)?,
        (None, None) => return Err(Error::BadParams("either --dim or --policy is required".into())),
    };
    let map = ProjectionMap::new(a.map.into(), d, m, mix_seed(&[a.common.seed, m as u64]))?;
    let opts = a.solver.options(a.common.seed);
    let out = reduce_solve_reconstruct(&mus, &map, &opts)?;
    match a.common.format {
        Format::Json => emit_json(
            &a.common,
            &ReduceReport {
                d,
                m,
                map: map.kind(),
                policy: a.policy.map(DimensionPolicy::from),
                p: opts.p,
                seed: a.common.seed,
                cost_low: out.cost_low.total_cost,
                cost_high: out.cost_high.total_cost,
                iterations: out.cost_low.iterations,
                support: report::rows(&out.nu_high),
                weights: out.nu_high.weights().to_vec(),
                timings: (!a.common.no_timing).then(|| TimingReport::from(out.timings)),
            },
        ),
        Format::Csv => {
            let header = support_header(d);
            emit_csv(&a.common, &header.iter().map(String::as_str).collect::<Vec<_>>(), support_rows(&out.nu_high))
        }
    }
}

fn parse_query(text: &str, d: usize) -> Result<DiscreteDistribution> {
    let coords: Vec<f64> = text
        .split(':')
        .map(|f| f.trim().parse::<f64>().map_err(|_| Error::BadParams(format!("bad query coordinate '{f}'"))))
        .collect::<Result<_>>()?;
    let coords = if coords.len() == 1 && d > 1 { vec![coords[0]; d] } else { coords };
    if coords.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: coords.len(),
        });
    }
    DiscreteDistribution::dirac(&coords)
}

fn uniform_without_replacement(count: usize, size: usize, seed: u64) -> Result<WeightedCoreset> {
    if size == 0 {
        return Err(Error::BadParams("coreset size must be at least 1".into()));
    }
    if size > count {
        return Err(Error::BadParams(format!("cannot draw {size} of {count} distributions without replacement")));
    }
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let idx = rand::seq::index::sample(&mut rng, count, size);
    Ok(WeightedCoreset {
        members: idx.into_iter().map(|i| (i, 1.0 / size as f64)).collect(),
    })
}

fn cmd_coreset(a: CoresetArgs) -> Result<()> {
    if a.trials == 0 {
        return Err(Error::BadParams("trials must be at least 1".into()));
    }
    if a.sizes.contains(&0) {
        return Err(Error::BadParams("sample sizes must be positive".into()));
    }
    let mus = match &a.input {
        Some(path) => with_path(path, load_csv_distributions(path))?,
        None => gen_coreset_synthetic(a.k)?,
    };
    let d = common_dim(&mus)?;
    let anchor = solve_barycenter(&mus, &SolverOptions::new(a.support_size, a.p).with_seed(a.common.seed))?;
    let scores = sensitivity_upper_bounds(&mus, &anchor.nu, a.alpha, a.p)?;
    let queries: Vec<(Vec<f64>, Vec<f64>)> = a
        .queries
        .iter()
        .map(|q| {
            let nu = parse_query(q, d)?;
            let costs = distribution_costs(&mus, &nu, a.p)?;
            Ok((nu.atom(0).to_vec(), costs))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (method_id, method) in ["uniform", "sensitivity"].into_iter().enumerate() {
        for &size in &a.sizes {
            let coresets: Vec<WeightedCoreset> = (0..a.trials)
                .map(|t| {
                    let seed = mix_seed(&[a.common.seed, method_id as u64, size as u64, t as u64]);
                    match method {
                        "sensitivity" => crate::coreset::build_coreset(&scores, size, seed),
                        _ if a.without_replacement => uniform_without_replacement(mus.len(), size, seed),
                        _ => uniform_coreset(mus.len(), size, seed),
                    }
                })
                .collect::<Result<_>>()?;
            for (query, costs) in &queries {
                let evals = coresets.iter().map(|c| evaluate_with_costs(c, costs)).collect::<Result<Vec<_>>>()?;
                rows.push(CoresetRow::new(method, size, query.clone(), &evals));
            }
        }
    }
    let report = CoresetReport {
        k: mus.len(),
        p: a.p,
        alpha: a.alpha,
        seed: a.common.seed,
        trials: a.trials,
        s_bar: scores.s_bar,
        rows,
    };
    match a.common.format {
        Format::Json => emit_json(&a.common, &report),
        Format::Csv => emit_csv(
            &a.common,
            &["method", "size", "query", "cost_orig", "mean_cost_core", "mean_rel_error"],
            report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.method.clone(),
                        r.size.to_string(),
                        r.query.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(":"),
                        r.cost_orig.to_string(),
                        r.mean_cost_core.to_string(),
                        r.mean_rel_error.map_or(String::new(), |e| e.to_string()),
                    ]
                })
                .collect(),
        ),
    }
}

fn matching_distributions(inst: &MatchingInstance) -> Result<Vec<DiscreteDistribution>> {
    Ok(vec![
        DiscreteDistribution::uniform(inst.a.clone())?,
        DiscreteDistribution::uniform(inst.b.clone())?,
    ])
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let mus = match a.kind {
        GenKind::LbBarycenter => gen_lb_barycenter(a.t, a.big_n, a.c, a.eps, 2.0)?.distributions,
        GenKind::OtPair => matching_distributions(&gen_ot_pair(a.d)?)?,
        GenKind::Pullback => {
            if a.c.fract() != 0.0 || a.c < 0.0 {
                return Err(Error::BadParams(format!("level count must be an integer, got {}", a.c)));
            }
            matching_distributions(&gen_pullback(a.d, a.c as usize)?)?
        }
        GenKind::CoresetSynthetic => gen_coreset_synthetic(a.k)?,
    };
    let mut out = open_output(&a.output)?;
    write_csv_distributions(&mut out, &mus)?;
    out.flush()?;
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    if a.trials == 0 {
        return Err(Error::BadParams("trials must be at least 1".into()));
    }
    let mus = load_input(&a.input, a.common.seed)?;
    let d = common_dim(&mus)?;
    let opts = a.solver.options(a.common.seed);
    let rows = cost_ratio_sweep(
        &mus,
        &opts,
        &a.dims,
        SweepConfig {
            trials: a.trials,
            seed: a.common.seed,
            kind: a.map.into(),
            jobs: a.jobs,
        },
    )?;
    let report = SweepReport::new(d, a.map.into(), a.trials, a.common.seed, opts.p, rows, !a.common.no_timing);
    match a.common.format {
        Format::Json => emit_json(&a.common, &report),
        Format::Csv => emit_csv(
            &a.common,
            &["m", "mean_ratio", "std_ratio", "low_secs", "high_secs"],
            report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        r.mean_ratio.to_string(),
                        r.std_ratio.to_string(),
                        r.low_secs.map_or(String::new(), |s| s.to_string()),
                        r.high_secs.map_or(String::new(), |s| s.to_string()),
                    ]
                })
                .collect(),
        ),
    }
}

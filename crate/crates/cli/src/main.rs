mod svg;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use heislab::distortion::{self, growth_curve, Mode, EXACT_PAIR_CAP};
use heislab::embedder::{embed, AngleSchedule, DEFAULT_M};
use heislab::heis::CVector;
use heislab::inequalities::{self, Checker};
use heislab::laakso::LaaksoGraph;
use heislab::markov::{self, ChainSpec, MarkovMode};

const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Parser, Debug)]
#[command(
    name = "heislab",
    version,
    about = "Heisenberg group and Laakso graph experiments"
)]
struct Cli {
    /// Random seed. The HEISLAB_SEED environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Record wall-clock duration in JSON reports (breaks byte-identical output).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Laakso graph summaries and edge lists.
    #[command(subcommand)]
    Laakso(LaaksoCmd),
    /// Write the embedding of G_n as CSV.
    Embed(EmbedArgs),
    /// Measure the distortion of the embedding of G_n.
    Distortion(DistortionArgs),
    /// Estimate the Markov convexity functional of the random walk on G_m.
    Markov(MarkovArgs),
    /// Run randomized inequality suites.
    #[command(subcommand)]
    Check(CheckCmd),
    /// Search for a pair of vectors with small symplectic product.
    CollapseSearch(CollapseArgs),
    /// Render series as an SVG chart.
    Plot(PlotArgs),
}

#[derive(Subcommand, Debug)]
enum LaaksoCmd {
    Stats(LevelArgs),
    Export(ExportArgs),
}

#[derive(Args, Debug, Serialize)]
struct LevelArgs {
    #[arg(long)]
    level: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ExportArgs {
    #[arg(long)]
    level: u32,
    /// Edge list CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ScheduleArgs {
    /// Offset in the angle formula.
    #[arg(long = "M", default_value_t = DEFAULT_M)]
    #[serde(rename = "M")]
    m: f64,
    /// Use this angle at every level instead of the formula.
    #[arg(long)]
    theta: Option<f64>,
}

impl ScheduleArgs {
    fn schedule(&self, level: u32) -> Result<AngleSchedule> {
        Ok(match self.theta {
            Some(t) => AngleSchedule::from_thetas(vec![t; level.max(1) as usize])?,
            None => AngleSchedule::from_formula(self.m, level.max(1))?,
        })
    }
}

#[derive(Args, Debug, Serialize)]
struct EmbedArgs {
    #[arg(long)]
    level: u32,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SamplingArgs {
    /// Evaluate every pair (or every trajectory) exactly.
    #[arg(long, conflicts_with = "samples")]
    exact: bool,
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct DistortionArgs {
    #[arg(long)]
    level: u32,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Target {
    /// The embedded image in the Heisenberg group.
    Embedding,
    /// The graph metric itself.
    Graph,
}

#[derive(Args, Debug, Serialize)]
struct MarkovArgs {
    #[arg(long)]
    level: u32,
    #[arg(long, default_value_t = 4.0)]
    p: f64,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, value_enum, default_value_t = Target::Embedding)]
    target: Target,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum CheckCmd {
    Inequalities(InequalityArgs),
}

#[derive(Args, Debug, Serialize)]
struct InequalityArgs {
    /// Samples per inequality.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    count: u64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 8])]
    dims: Vec<usize>,
    /// Synthetic fork families for the fork lemmas.
    #[arg(long, default_value_t = 10_000)]
    fork_trials: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CollapseArgs {
    /// CSV with one vector per row, real and imaginary parts interleaved.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    ell: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Preset {
    /// Exact distortion of G_1..G_max against the growth curve.
    Distortion,
    /// Exact Markov ratio for p = 2 and p = 4 on G_1..G_max.
    Markov,
}

#[derive(Args, Debug, Serialize)]
struct PlotArgs {
    /// CSV with header `series,x,y`.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Largest level for presets.
    #[arg(long, default_value_t = 4)]
    max_level: u32,
    #[arg(long = "M", default_value_t = DEFAULT_M)]
    #[serde(rename = "M")]
    m: f64,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    log_y: bool,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    passed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration_ms: Option<f64>,
    result: R,
}

struct Ctx {
    seed: u64,
    timing: bool,
    start: Instant,
}

impl Ctx {
    fn emit<C: Serialize, R: Serialize>(
        &self,
        command: &'static str,
        config: &C,
        passed: Option<bool>,
        result: R,
        out: Option<&Path>,
    ) -> Result<()> {
        let report = Report {
            tool: "heislab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: self.seed,
            config,
            passed,
            duration_ms: self
                .timing
                .then(|| self.start.elapsed().as_secs_f64() * 1e3),
            result,
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        write_text(out, &text)
    }
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    with_writer(out, |w| w.write_all(text.as_bytes()))
}

fn with_writer(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn resolve_seed(flag: u64) -> Result<u64> {
    match std::env::var("HEISLAB_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("HEISLAB_SEED must be an unsigned integer, got {v:?}")),
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(e) => bail!("HEISLAB_SEED: {e}"),
    }
}

fn sampling_mode(s: &SamplingArgs) -> Result<(bool, u64)> {
    let samples = s.samples.unwrap_or(DEFAULT_SAMPLES);
    if !s.exact && samples == 0 {
        bail!("--samples must be positive");
    }
    Ok((s.exact, samples))
}

#[derive(Serialize)]
struct Stats {
    level: u32,
    vertices: usize,
    edges: usize,
    diameter: u64,
    source: u32,
    sink: u32,
    fork_points: Option<[u32; 2]>,
    geodesics: Option<String>,
}

fn laakso_stats(ctx: &Ctx, args: &LevelArgs) -> Result<bool> {
    let g = LaaksoGraph::build(args.level)?;
    let stats = Stats {
        level: g.level(),
        vertices: g.num_vertices(),
        edges: g.num_edges(),
        diameter: g.diameter(),
        source: g.source(),
        sink: g.sink(),
        fork_points: g.fork_points().ok(),
        geodesics: g.geodesic_count().map(|c| c.to_string()),
    };
    ctx.emit("laakso stats", args, None, stats, args.out.as_deref())?;
    Ok(true)
}

fn laakso_export(args: &ExportArgs) -> Result<bool> {
    let g = LaaksoGraph::build(args.level)?;
    with_writer(args.out.as_deref(), |w| g.write_edge_csv(w))?;
    Ok(true)
}

fn embed_cmd(args: &EmbedArgs) -> Result<bool> {
    let g = LaaksoGraph::build(args.level)?;
    let map = embed(&g, &args.schedule.schedule(args.level)?)?;
    with_writer(args.out.as_deref(), |w| map.write_csv(w))?;
    Ok(true)
}

#[derive(Serialize)]
struct Witnesses {
    min: (usize, usize),
    max: (usize, usize),
}

#[derive(Serialize)]
struct DistortionOut {
    level: u32,
    #[serde(rename = "M")]
    m: f64,
    mode: Mode,
    pairs: u64,
    min_ratio: f64,
    max_ratio: f64,
    distortion: Option<f64>,
    infinite: bool,
    witness_pairs: Witnesses,
    growth_curve: f64,
    ratio_to_curve: Option<f64>,
    within_smallness_cap: bool,
}

fn distortion_cmd(ctx: &Ctx, args: &DistortionArgs) -> Result<bool> {
    let (exact, samples) = sampling_mode(&args.sampling)?;
    let g = LaaksoGraph::build(args.level)?;
    let mode = if exact {
        let n = g.num_vertices() as u64;
        let pairs = n * (n - 1) / 2;
        if pairs > EXACT_PAIR_CAP {
            bail!(
                "refusing --exact at level {}: {pairs} pairs exceed the exact cap of {EXACT_PAIR_CAP}; use --samples",
                args.level
            );
        }
        Mode::Exact
    } else {
        Mode::Sampled {
            samples,
            seed: ctx.seed,
        }
    };
    let schedule = args.schedule.schedule(args.level)?;
    let map = embed(&g, &schedule)?;
    let r = distortion::measure(&g, &map, mode)?;
    let curve = growth_curve(args.level, args.schedule.m);
    let finite = r.distortion.is_finite().then_some(r.distortion);
    let out = DistortionOut {
        level: args.level,
        m: args.schedule.m,
        mode: r.mode,
        pairs: r.pairs,
        min_ratio: r.min_ratio,
        max_ratio: r.max_ratio,
        distortion: finite,
        infinite: r.infinite,
        witness_pairs: Witnesses {
            min: r.min_pair,
            max: r.max_pair,
        },
        growth_curve: curve,
        ratio_to_curve: finite.map(|d| d / curve),
        within_smallness_cap: schedule.within_smallness_cap(),
    };
    ctx.emit("distortion", args, None, out, args.out.as_deref())?;
    Ok(true)
}

#[derive(Serialize)]
struct MarkovOut {
    level: u32,
    target: Target,
    #[serde(flatten)]
    estimate: markov::MarkovEstimate,
}

fn markov_estimate(
    level: u32,
    p: f64,
    schedule: &ScheduleArgs,
    target: Target,
    mode: MarkovMode,
) -> Result<markov::MarkovEstimate> {
    let g = LaaksoGraph::build(level)?;
    let chain = ChainSpec::laakso(&g)?;
    Ok(match target {
        Target::Graph => markov::functional(&chain, &g, p, mode)?,
        Target::Embedding => {
            let map = embed(&g, &schedule.schedule(level)?)?;
            markov::functional(&chain, &map, p, mode)?
        }
    })
}

fn markov_cmd(ctx: &Ctx, args: &MarkovArgs) -> Result<bool> {
    let (exact, samples) = sampling_mode(&args.sampling)?;
    let mode = if exact {
        MarkovMode::Exact
    } else {
        MarkovMode::MonteCarlo {
            samples,
            seed: ctx.seed,
        }
    };
    let estimate = markov_estimate(args.level, args.p, &args.schedule, args.target, mode)?;
    let out = MarkovOut {
        level: args.level,
        target: args.target,
        estimate,
    };
    ctx.emit("markov", args, None, out, args.out.as_deref())?;
    Ok(true)
}

#[derive(Serialize)]
struct InequalityOut {
    suites: Vec<inequalities::SuiteReport>,
    forks: inequalities::ForkTrialReport,
    fork_gap_range: (f64, f64),
}

fn check_inequalities(ctx: &Ctx, args: &InequalityArgs) -> Result<bool> {
    let suites = Checker::ALL
        .iter()
        .map(|&c| inequalities::run_suite(c, args.count, ctx.seed, &args.dims))
        .collect::<heislab::Result<Vec<_>>>()?;
    let forks = inequalities::run_fork_trials(args.fork_trials, ctx.seed, &args.dims)?;
    let passed = suites.iter().all(|s| s.violations == 0)
        && forks.collapse_failures == 0
        && forks.angle_failures == 0;
    for s in &suites {
        eprintln!(
            "{:<22} {:>9} samples  {:>3} violations  worst relative margin {:e}",
            s.checker.name(),
            s.samples,
            s.violations,
            s.worst_relative_margin
        );
    }
    eprintln!(
        "fork collapse          {:>9} applicable {:>3} failures",
        forks.collapse_applicable, forks.collapse_failures
    );
    eprintln!(
        "small angle            {:>9} applicable {:>3} failures",
        forks.angle_applicable, forks.angle_failures
    );
    let out = InequalityOut {
        suites,
        forks,
        fork_gap_range: inequalities::FORK_TRIAL_RANGE,
    };
    ctx.emit(
        "check inequalities",
        args,
        Some(passed),
        out,
        args.out.as_deref(),
    )?;
    Ok(passed)
}

fn read_vectors(path: &Path) -> Result<Vec<CVector>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parts = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("row {}: not a number", i + 1))?;
        out.push(CVector::from_interleaved(&parts).with_context(|| format!("row {}", i + 1))?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct CollapseOut {
    vectors: usize,
    #[serde(flatten)]
    search: inequalities::CollapseSearch,
    within_bound: bool,
    brute_force_smaller: Option<bool>,
}

fn collapse_cmd(ctx: &Ctx, args: &CollapseArgs) -> Result<bool> {
    let vectors = read_vectors(&args.input)?;
    let search = inequalities::symplectic_collapse_search(&vectors, args.ell)?;
    let within_bound = search.omega <= search.bound;
    let passed = within_bound || !search.hypotheses_hold;
    let out = CollapseOut {
        vectors: vectors.len(),
        brute_force_smaller: search.brute_force.map(|(_, b)| b < search.omega),
        within_bound,
        search,
    };
    ctx.emit(
        "collapse-search",
        args,
        Some(passed),
        out,
        args.out.as_deref(),
    )?;
    Ok(passed)
}

fn read_series(path: &Path) -> Result<Vec<svg::Series>> {
    #[derive(serde::Deserialize)]
    struct Row {
        series: String,
        x: f64,
        y: f64,
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out: Vec<svg::Series> = Vec::new();
    for row in reader.deserialize() {
        let row: Row = row?;
        match out.iter_mut().find(|s| s.label == row.series) {
            Some(s) => s.points.push((row.x, row.y)),
            None => out.push(svg::Series {
                label: row.series,
                points: vec![(row.x, row.y)],
            }),
        }
    }
    Ok(out)
}

fn preset_series(args: &PlotArgs, preset: Preset) -> Result<(Vec<svg::Series>, svg::PlotOptions)> {
    let levels = 1..=args.max_level;
    let schedule = ScheduleArgs {
        m: args.m,
        theta: None,
    };
    Ok(match preset {
        Preset::Distortion => {
            let mut measured = Vec::new();
            for n in levels.clone() {
                let g = LaaksoGraph::build(n)?;
                let map = embed(&g, &schedule.schedule(n)?)?;
                measured.push((
                    n as f64,
                    distortion::measure(&g, &map, Mode::Exact)?.distortion,
                ));
            }
            let curve = levels
                .map(|n| (n as f64, growth_curve(n, args.m)))
                .collect();
            let series = vec![
                svg::Series {
                    label: "measured distortion".into(),
                    points: measured,
                },
                svg::Series {
                    label: "(M+n)^1/4 log2(M+n)^1/2".into(),
                    points: curve,
                },
            ];
            let opts = svg::PlotOptions {
                title: format!("Distortion of G_n, M = {}", args.m),
                x_label: "level n".into(),
                y_label: "distortion".into(),
                ..Default::default()
            };
            (series, opts)
        }
        Preset::Markov => {
            let mut series = Vec::new();
            for p in [2.0, 4.0] {
                let points = levels
                    .clone()
                    .map(|m| {
                        let e =
                            markov_estimate(m, p, &schedule, Target::Embedding, MarkovMode::Exact)?;
                        Ok((m as f64, e.ratio_pi))
                    })
                    .collect::<Result<Vec<_>>>()?;
                series.push(svg::Series {
                    label: format!("p = {p}"),
                    points,
                });
            }
            let opts = svg::PlotOptions {
                title: "Markov convexity ratio of the embedded walk".into(),
                x_label: "level m".into(),
                y_label: "(lhs / rhs)^(1/p)".into(),
                ..Default::default()
            };
            (series, opts)
        }
    })
}

fn plot_cmd(args: &PlotArgs) -> Result<bool> {
    let (series, mut opts) = match (args.preset, &args.input) {
        (Some(p), _) => preset_series(args, p)?,
        (None, Some(path)) => (read_series(path)?, svg::PlotOptions::default()),
        (None, None) => bail!("either --input or --preset is required"),
    };
    if let Some(t) = &args.title {
        opts.title = t.clone();
    }
    opts.log_x = args.log_x;
    opts.log_y = args.log_y;
    let text = svg::render(&series, &opts)?;
    write_text(Some(&args.out), &text)?;
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    let ctx = Ctx {
        seed: resolve_seed(cli.seed)?,
        timing: cli.timing,
        start: Instant::now(),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("configuring the worker pool")?;
    match &cli.command {
        Command::Laakso(LaaksoCmd::Stats(a)) => laakso_stats(&ctx, a),
        Command::Laakso(LaaksoCmd::Export(a)) => laakso_export(a),
        Command::Embed(a) => embed_cmd(a),
        Command::Distortion(a) => distortion_cmd(&ctx, a),
        Command::Markov(a) => markov_cmd(&ctx, a),
        Command::Check(CheckCmd::Inequalities(a)) => check_inequalities(&ctx, a),
        Command::CollapseSearch(a) => collapse_cmd(&ctx, a),
        Command::Plot(a) => plot_cmd(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! One binary, five subcommands: sample, project, backbone, bench, verify.
//!
//! Every output begins with a `# seed=... trades=... algorithm=... version=...`
//! header; re-running a command with the header's values reproduces the
//! output byte for byte, regardless of `--threads`.

use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fastball::bench::{bench_sweep, BenchError, BenchResult};
use fastball::fdsm::{
    extract_backbone, required_samples, write_backbone_edges, BackboneConfig, CheckpointConfig,
    FdsmError, DEFAULT_CHECKPOINT_INTERVAL,
};
use fastball::graph::{BipartiteGraph, DegreeSequences};
use fastball::io::{read_edge_list, read_incidence_matrix, FormatError, LabeledGraph};
use fastball::sampler::{derive_stream_seed, for_each_sample, sample_stream, SamplerConfig};
use fastball::trade::Algorithm;
use fastball::verify::{default_battery, uniformity_test, VerifyError};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit codes: 0 success, 2 usage or parse failure, 3 I/O failure,
/// 4 verification failure.
enum CliError {
    Usage(String),
    Io(String),
    VerificationFailed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::VerificationFailed => 4,
        }
    }
}

fn usage(err: impl Display) -> CliError {
    CliError::Usage(err.to_string())
}

impl From<FormatError> for CliError {
    fn from(err: FormatError) -> Self {
        match err {
            FormatError::Parse { .. } => CliError::Usage(err.to_string()),
            FormatError::Io(e) => CliError::Io(e.to_string()),
        }
    }
}

impl From<FdsmError> for CliError {
    fn from(err: FdsmError) -> Self {
        match err {
            FdsmError::Io(e) => CliError::Io(e.to_string()),
            FdsmError::Checkpoint(_) => CliError::Io(err.to_string()),
            _ => CliError::Usage(err.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(err: BenchError) -> Self {
        match err {
            BenchError::Io(e) => CliError::Io(e.to_string()),
            BenchError::InvalidParameter(_) => CliError::Usage(err.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fastball",
    version,
    about = "Degree-preserving bipartite graph sampling and FDSM backbone extraction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw degree-preserving random samples of a bipartite graph
    Sample(SampleArgs),
    /// Project a bipartite graph onto its top nodes (co-occurrence weights)
    Project(ProjectArgs),
    /// Extract the signed FDSM backbone of the bipartite projection
    Backbone(BackboneArgs),
    /// Time both trade kernels on worst-case graphs and emit CSV
    Bench(BenchArgs),
    /// Run the empirical uniformity battery on small enumerable spaces
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// `top_label bottom_label` per line, `#` comments
    EdgeList,
    /// `n m` header then n rows of m 0/1 digits
    Matrix,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Fastball,
    Curveball,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Fastball => Algorithm::Fastball,
            AlgorithmArg::Curveball => Algorithm::Curveball,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Input graph file
    input: PathBuf,
    /// Input file format
    #[arg(long, value_enum, default_value_t = InputFormat::EdgeList)]
    format: InputFormat,
}

#[derive(Args)]
struct RandomArgs {
    /// RNG seed; drawn from entropy (and echoed in the header) when absent
    #[arg(long)]
    seed: Option<u64>,
    /// Trades per sample; defaults to 5 times the top-node count
    #[arg(long)]
    trades: Option<u64>,
    /// Trade algorithm
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Fastball)]
    algorithm: AlgorithmArg,
    /// Keep walking one chain instead of restarting per sample
    #[arg(long)]
    chain: bool,
}

impl RandomArgs {
    fn sampler_config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            algorithm: self.algorithm.into(),
            seed,
            trades_per_sample: self.trades,
            chain: self.chain,
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of samples to draw
    #[arg(long)]
    count: u64,
    #[command(flatten)]
    random: RandomArgs,
    /// Worker threads for sample generation
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output file (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output file (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BackboneArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Two-tailed significance level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Number of null-model samples, or `auto` for the power calculation
    #[arg(long, default_value = "auto")]
    samples: String,
    /// Statistical power used when `--samples auto`
    #[arg(long, default_value_t = 0.95)]
    power: f64,
    /// Use the add-one smoothed p-value estimator (count+1)/(samples+1)
    #[arg(long)]
    smooth: bool,
    #[command(flatten)]
    random: RandomArgs,
    /// Worker threads for null accumulation
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Persist null counts here and resume from them if the file exists
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Samples between checkpoint writes
    #[arg(long, default_value_t = DEFAULT_CHECKPOINT_INTERVAL)]
    checkpoint_interval: u64,
    /// Output file (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated bottom-node counts to sweep
    #[arg(long, default_value = "1000,10000,100000")]
    m_values: String,
    /// Extend the sweep to one million bottom nodes
    #[arg(long)]
    big: bool,
    /// Trades per replication
    #[arg(long, default_value_t = 100)]
    trades: u64,
    /// Timed replications per (algorithm, m) cell, after one warm-up
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// RNG seed; drawn from entropy when absent
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output file; when absent the CSV goes to stdout and the summary
    /// table to stderr
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Samples per degree-sequence space
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Chi-square significance below which a space fails
    #[arg(long, default_value_t = 1e-3)]
    significance: f64,
    /// Degree sequences to test, as `t1,t2,../b1,b2,..`; the default battery
    /// when absent
    #[arg(long = "space")]
    spaces: Vec<String>,
    #[command(flatten)]
    random: RandomArgs,
    /// Output file (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Project(args) => cmd_project(args),
        Command::Backbone(args) => cmd_backbone(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match &err {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Io(msg) => eprintln!("I/O error: {msg}"),
                CliError::VerificationFailed => eprintln!("verification failed"),
            }
            ExitCode::from(err.code())
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn read_input(args: &InputArgs) -> Result<LabeledGraph, CliError> {
    let file = File::open(&args.input)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.input.display())))?;
    let reader = BufReader::new(file);
    let labeled = match args.format {
        InputFormat::EdgeList => read_edge_list(reader)?,
        InputFormat::Matrix => LabeledGraph::with_index_labels(read_incidence_matrix(reader)?),
    };
    Ok(labeled)
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let file =
                File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn io_err(e: io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn repro_header(seed: u64, trades: impl Display, algorithm: Algorithm) -> String {
    format!("# seed={seed} trades={trades} algorithm={algorithm} version={VERSION}")
}

fn write_sample_edges<W: Write>(
    mut writer: W,
    sample: &BipartiteGraph,
    labels: &LabeledGraph,
) -> io::Result<()> {
    for (i, j) in sample.edges() {
        writeln!(
            writer,
            "{} {}",
            labels.top_label(i as usize),
            labels.bottom_label(j as usize)
        )?;
    }
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<(), CliError> {
    let labeled = read_input(&args.input)?;
    let graph = labeled.graph();
    if args.count == 0 {
        return Ok(());
    }
    let seed = resolve_seed(args.random.seed);
    let config = args.random.sampler_config(seed);
    let trades = config.resolved_trades(graph.top_count());

    let mut out = open_output(&args.output)?;
    writeln!(out, "{}", repro_header(seed, trades, config.algorithm)).map_err(io_err)?;

    // One rendered block per sample; blocks are written in index order, so
    // the output does not depend on the thread count.
    let render = |index: u64, sample: &BipartiteGraph| -> Vec<u8> {
        let mut block = Vec::new();
        writeln!(block, "# sample={index}").unwrap();
        write_sample_edges(&mut block, sample, &labeled).unwrap();
        block
    };

    if args.threads <= 1 || args.random.chain {
        let result = sample_stream(graph, args.count, &config, |index, sample| {
            out.write_all(&render(index, sample)).map_err(io_err)
        });
        match result {
            Ok(_) => {}
            Err(fastball::sampler::StreamError::Sampler(e)) => return Err(usage(e)),
            Err(fastball::sampler::StreamError::Consumer(e)) => return Err(e),
        }
    } else {
        let mut next = 0u64;
        while next < args.count {
            let batch_end = (next + args.threads as u64).min(args.count);
            let blocks: Vec<Result<Vec<u8>, CliError>> = std::thread::scope(|scope| {
                let handles: Vec<_> = (next..batch_end)
                    .map(|index| {
                        let config = &config;
                        let render = &render;
                        scope.spawn(move || {
                            let mut block = None;
                            for_each_sample(graph, index..index + 1, config, |i, sample| {
                                block = Some(render(i, sample));
                            })
                            .map_err(usage)?;
                            Ok(block.expect("one sample per range"))
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("sample worker panicked"))
                    .collect()
            });
            for block in blocks {
                out.write_all(&block?).map_err(io_err)?;
            }
            next = batch_end;
        }
    }
    out.flush().map_err(io_err)
}

fn cmd_project(args: ProjectArgs) -> Result<(), CliError> {
    let labeled = read_input(&args.input)?;
    let projection = fastball::fdsm::project(labeled.graph());
    let mut out = open_output(&args.output)?;
    writeln!(out, "{}", repro_header(0, 0, Algorithm::Fastball)).map_err(io_err)?;
    let n = projection.top_count();
    for i in 0..n {
        for j in i + 1..n {
            let w = projection.weight(i, j);
            if w > 0 {
                writeln!(out, "{} {} {w}", labeled.top_label(i), labeled.top_label(j))
                    .map_err(io_err)?;
            }
        }
    }
    out.flush().map_err(io_err)
}

fn cmd_backbone(args: BackboneArgs) -> Result<(), CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(usage(format!(
            "alpha must be in (0, 1), got {}",
            args.alpha
        )));
    }
    let labeled = read_input(&args.input)?;
    let graph = labeled.graph();
    let samples = match args.samples.as_str() {
        "auto" => required_samples(args.alpha, args.power)?,
        text => text
            .parse::<u64>()
            .map_err(|_| usage(format!("--samples takes a count or `auto`, got `{text}`")))?,
    };

    let seed = resolve_seed(args.random.seed);
    let sampler = args.random.sampler_config(seed);
    let trades = sampler.resolved_trades(graph.top_count());
    let mut config = BackboneConfig::new(args.alpha, samples);
    config.smooth = args.smooth;
    config.threads = args.threads.max(1);
    config.checkpoint = args.checkpoint.map(|path| CheckpointConfig {
        path,
        interval: args.checkpoint_interval,
    });

    let run = extract_backbone(graph, &sampler, &config)?;

    let mut out = open_output(&args.output)?;
    writeln!(out, "{}", repro_header(seed, trades, sampler.algorithm)).map_err(io_err)?;
    writeln!(
        out,
        "# alpha={} samples={samples} smooth={}",
        args.alpha, args.smooth
    )
    .map_err(io_err)?;
    write_backbone_edges(&mut out, &run.backbone, &run.counts, &labeled).map_err(io_err)?;
    out.flush().map_err(io_err)
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let mut m_values = Vec::new();
    for token in args.m_values.split(',').filter(|t| !t.trim().is_empty()) {
        let m: usize = token
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad bottom-node count `{token}`")))?;
        m_values.push(m);
    }
    if args.big && !m_values.contains(&1_000_000) {
        m_values.push(1_000_000);
    }
    let seed = resolve_seed(args.seed);

    let mut csv = open_output(&args.output)?;
    writeln!(
        csv,
        "{}",
        repro_header(seed, args.trades, Algorithm::Fastball)
    )
    .map_err(io_err)?;
    let results = bench_sweep(&m_values, args.trades, args.reps, seed, &mut csv)?;
    csv.flush().map_err(io_err)?;

    // Summary table: stdout when the CSV went to a file, stderr otherwise.
    let mut summary: Box<dyn Write> = if args.output.is_some() {
        Box::new(io::stdout())
    } else {
        Box::new(io::stderr())
    };
    let lines = summary_table(&results);
    for line in lines {
        writeln!(summary, "{line}").map_err(io_err)?;
    }
    Ok(())
}

fn summary_table(results: &[BenchResult]) -> Vec<String> {
    let mut lines = vec![
        "m fastball_mean_ns fastball_stddev_ns curveball_mean_ns curveball_stddev_ns ratio"
            .to_string(),
    ];
    for pair in results.chunks(2) {
        let (fast, curve) = match pair {
            [a, b] if a.algorithm == Algorithm::Fastball => (a, b),
            [b, a] => (a, b),
            _ => continue,
        };
        lines.push(format!(
            "{} {:.0} {:.0} {:.0} {:.0} {:.3}",
            fast.bottom_count,
            fast.mean_ns(),
            fast.stddev_ns(),
            curve.mean_ns(),
            curve.stddev_ns(),
            curve.mean_ns() / fast.mean_ns(),
        ));
    }
    lines
}

fn parse_space(text: &str) -> Result<DegreeSequences, CliError> {
    let err = || {
        usage(format!(
            "bad --space `{text}`, expected `t1,t2,../b1,b2,..`"
        ))
    };
    let (top_text, bottom_text) = text.split_once('/').ok_or_else(err)?;
    let parse_side = |side: &str| -> Result<Vec<usize>, CliError> {
        side.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| err()))
            .collect()
    };
    Ok(DegreeSequences::new(
        parse_side(top_text)?,
        parse_side(bottom_text)?,
    ))
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let spaces = if args.spaces.is_empty() {
        default_battery()
    } else {
        args.spaces
            .iter()
            .map(|s| parse_space(s))
            .collect::<Result<Vec<_>, _>>()?
    };

    let seed = resolve_seed(args.random.seed);
    let trades_label = match args.random.trades {
        Some(t) => t.to_string(),
        None => "auto".to_string(),
    };
    let mut out = open_output(&args.output)?;
    writeln!(
        out,
        "{}",
        repro_header(seed, trades_label, args.random.algorithm.into())
    )
    .map_err(io_err)?;
    writeln!(
        out,
        "# samples={} significance={}",
        args.samples, args.significance
    )
    .map_err(io_err)?;

    let mut all_pass = true;
    for (index, seq) in spaces.iter().enumerate() {
        // Every space gets its own stream family from the master seed.
        let mut config = args
            .random
            .sampler_config(derive_stream_seed(seed, index as u64));
        config.chain = args.random.chain;
        let report = uniformity_test(seq, args.samples, args.significance, &config).map_err(
            |e| match e {
                VerifyError::Graph(g) => usage(g),
                VerifyError::Sampler(s) => usage(s),
                VerifyError::EmptySpace { .. } => usage(e),
                VerifyError::SampleOutsideSpace { .. } => CliError::Io(e.to_string()),
            },
        )?;
        all_pass &= report.pass;
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        writeln!(
            out,
            "space top={} bottom={} size={} trades={} chi2={:.4} p={:.6} {}",
            join(&report.sequences.top),
            join(&report.sequences.bottom),
            report.space_size,
            report.trades_per_sample,
            report.statistic,
            report.p_value,
            if report.pass { "PASS" } else { "FAIL" },
        )
        .map_err(io_err)?;
    }
    writeln!(out, "battery {}", if all_pass { "PASS" } else { "FAIL" }).map_err(io_err)?;
    out.flush().map_err(io_err)?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

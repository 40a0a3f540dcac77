use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emitseq::bench::{
    default_training_config, render_rows, run_compare, run_compile, run_train, BenchError,
    CompileOptions, Config, GraphKind, GraphSpec, NamedGraph, OutputFormat, PolicySpec,
};
use emitseq::compiler::HardwareParams;
use emitseq::graph::{parse_log, GraphState};
use emitseq::qnet::QNetParams;
use emitseq::verify::{verify_sequence, DEFAULT_CAP, DEFAULT_SEEDS};

#[derive(Parser)]
#[command(name = "emitseq", version, about = "Compile photonic graph states into emitter gate sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a Q-network checkpoint on the graphs of a config file.
    Train(TrainArgs),
    /// Compile one graph with one policy and report its metrics.
    Compile(CompileArgs),
    /// Compile several graphs with several policies and report reduction ratios.
    Compare(CompareArgs),
    /// Check a logged operation sequence against its target graph.
    Verify(VerifyArgs),
    /// Write a generated benchmark graph as an edge list.
    Gen(GenArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list file.
    #[arg(long, conflicts_with = "kind")]
    graph: Option<PathBuf>,
    /// Generator family: path, star, cycle, tree, grid:RxC, regular:D, er:P.
    #[arg(long, requires = "n")]
    kind: Option<GraphKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GraphArgs {
    fn load(&self) -> Result<NamedGraph, BenchError> {
        match (&self.graph, self.kind, self.n) {
            (Some(path), ..) => load_graph_file(path),
            (None, Some(kind), Some(n)) => NamedGraph::from_spec(&GraphSpec::new(kind, n, self.seed)),
            _ => Err(BenchError::Config("give --graph FILE or --kind K --n N".into())),
        }
    }
}

#[derive(Args)]
struct CompileFlags {
    /// Q-network checkpoint, required by the rl policy.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Hardware config of `key = value` lines.
    #[arg(long)]
    hw: Option<PathBuf>,
    /// Weight of the emitter penalty in units of the CZ time.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Receptive-field size as a fraction of the vertex count (rl only).
    #[arg(long, default_value_t = 0.5)]
    rf_frac: f64,
    /// Largest V + N_e verified on a statevector.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Measurement-outcome seeds used in verification.
    #[arg(long, default_value_t = DEFAULT_SEEDS)]
    verify_seeds: u64,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

impl CompileFlags {
    fn options(&self) -> Result<CompileOptions, BenchError> {
        let hw = match &self.hw {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(BenchError::io(path))?;
                HardwareParams::from_config(&text)?
            }
            None => HardwareParams::default(),
        };
        let params = match &self.checkpoint {
            Some(path) => {
                let file = fs::File::open(path).map_err(BenchError::io(path))?;
                Some(QNetParams::load(BufReader::new(file))?)
            }
            None => None,
        };
        Ok(CompileOptions {
            hw,
            alpha: self.alpha,
            rf_frac: self.rf_frac,
            cap: self.cap,
            verify_seeds: self.verify_seeds,
            params,
            ..CompileOptions::default()
        })
    }
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// rl, greedy, exhaustive, random or random:SEED.
    #[arg(long, default_value = "greedy")]
    policy: PolicySpec,
    #[command(flatten)]
    flags: CompileFlags,
    /// Also write the operation log, one record per line.
    #[arg(long)]
    dump_log: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Config whose [[graph]] entries are compared.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge-list files; repeatable.
    #[arg(long)]
    graph: Vec<PathBuf>,
    /// Generator families sharing --n and --seed; repeatable.
    #[arg(long)]
    kind: Vec<GraphKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Policies to compare; repeatable.
    #[arg(long, required = true)]
    policy: Vec<PolicySpec>,
    /// Reference policy; defaults to the first --policy.
    #[arg(long)]
    reference: Option<PolicySpec>,
    #[command(flatten)]
    flags: CompileFlags,
}

#[derive(Args)]
struct TrainArgs {
    /// Training config; three ten-photon generator graphs with default settings if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Per-episode training log (CSV).
    #[arg(long)]
    log: PathBuf,
    /// Overrides the configured root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured episode count.
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Operation log as written by `compile --dump-log`.
    #[arg(long)]
    log: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEEDS)]
    verify_seeds: u64,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    kind: GraphKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_graph_file(path: &Path) -> Result<NamedGraph, BenchError> {
    let text = fs::read_to_string(path).map_err(BenchError::io(path))?;
    Ok(NamedGraph {
        name: path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned()),
        source: format!("file:{}", path.display()),
        graph: GraphState::from_edge_list(&text)?,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), BenchError> {
    match out {
        Some(path) => fs::write(path, text).map_err(BenchError::io(path)),
        None => io::stdout().write_all(text.as_bytes()).map_err(BenchError::io("<stdout>")),
    }
}

fn compile(args: &CompileArgs) -> Result<(), BenchError> {
    let graph = args.graph.load()?;
    let compiled = run_compile(&graph, &args.policy, &args.flags.options()?)?;
    if let Some(path) = &args.dump_log {
        let text: String = compiled.log.iter().map(|r| format!("{r}\n")).collect();
        fs::write(path, text).map_err(BenchError::io(path))?;
    }
    if compiled.row.verified != "yes" {
        eprintln!("warning: {}: verification {}", graph.name, compiled.row.verified);
    }
    emit(args.flags.out.as_deref(), &render_rows(&[compiled.row], args.flags.format)?)
}

fn compare(args: &CompareArgs) -> Result<(), BenchError> {
    let mut graphs = match &args.config {
        Some(path) => Config::from_path(path)?.load_graphs()?,
        None => Vec::new(),
    };
    for path in &args.graph {
        graphs.push(load_graph_file(path)?);
    }
    if !args.kind.is_empty() {
        let n = args.n.ok_or_else(|| BenchError::Config("--kind needs --n".into()))?;
        for &kind in &args.kind {
            graphs.push(NamedGraph::from_spec(&GraphSpec::new(kind, n, args.seed))?);
        }
    }
    if graphs.is_empty() {
        return Err(BenchError::Config("no graphs to compare".into()));
    }
    let reference = args.reference.unwrap_or(args.policy[0]);
    let cmp = run_compare(&graphs, &args.policy, &reference, &args.flags.options()?)?;
    emit(args.flags.out.as_deref(), &cmp.render(args.flags.format)?)
}

fn train(args: &TrainArgs) -> Result<(), BenchError> {
    let mut cfg = match &args.config {
        Some(path) => Config::from_path(path)?,
        None => default_training_config(),
    };
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    if let Some(episodes) = args.episodes {
        cfg.train.episodes = episodes;
    }
    let summary = run_train(&cfg, &args.checkpoint, &args.log)?;
    eprintln!(
        "trained on {} for {} episodes; final epsilon {}; {:.2} s",
        summary.graphs.join(", "),
        summary.episodes,
        summary.final_epsilon,
        summary.wall.as_secs_f64()
    );
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<(), BenchError> {
    let graph = args.graph.load()?;
    let text = fs::read_to_string(&args.log).map_err(BenchError::io(&args.log))?;
    let log = parse_log(&text)?;
    let report = verify_sequence(&graph.graph, &log, args.verify_seeds, args.cap)?;
    println!("seed,fidelity");
    for (seed, f) in &report.fidelities {
        println!("{seed},{f}");
    }
    if report.passed {
        Ok(())
    } else {
        Err(BenchError::VerificationFailed {
            graph: graph.name,
            policy: "logged".into(),
            min_fidelity: report.min_fidelity(),
        })
    }
}

fn gen(args: &GenArgs) -> Result<(), BenchError> {
    let graph = NamedGraph::from_spec(&GraphSpec::new(args.kind, args.n, args.seed))?;
    emit(args.out.as_deref(), &graph.graph.to_edge_list()?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Train(a) => train(a),
        Command::Compile(a) => compile(a),
        Command::Compare(a) => compare(a),
        Command::Verify(a) => verify(a),
        Command::Gen(a) => gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

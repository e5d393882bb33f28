use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use cgoracle::bench::{self, BenchConfig, BenchInput, SynthParams};
use cgoracle::query::{server, Oracle, QueryRequest, Render, DEFAULT_ANSWER_CAP};
use cgoracle::{CutoffMode, IngestMode};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "cgoracle", version, about = "Call-graph dependency oracle for egypt dumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a directory of .eg/.dot dumps and print the ingest report.
    Ingest {
        dir: PathBuf,
        #[arg(long, default_value = "skip")]
        mode: IngestMode,
        /// Also write a snapshot of the resulting graph.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Run one query and print the result.
    Query(QueryArgs),
    /// Save or inspect snapshots.
    #[command(subcommand)]
    Snapshot(SnapshotCommand),
    /// Serve queries over HTTP until interrupted.
    Serve {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value = "127.0.0.1")]
        addr: IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = DEFAULT_ANSWER_CAP)]
        answer_cap: usize,
    },
    /// Time ingest, edge enumeration, full closure and a hub query.
    Bench {
        #[command(flatten)]
        graph: GraphArgs,
        /// Edge count of the synthetic graph used when no input is given.
        #[arg(long, default_value_t = 50_000)]
        scale: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Function to use for the q1 rows.
        #[arg(long)]
        hub: Option<String>,
        #[arg(long)]
        skip_scan_closure: bool,
    },
    /// Write a seeded synthetic corpus of .eg dumps.
    Generate {
        dir: PathBuf,
        #[arg(long, default_value_t = 50_000)]
        scale: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Number of dump files; defaults to one per 50 edges.
        #[arg(long)]
        files: Option<usize>,
    },
}

#[derive(Subcommand)]
enum SnapshotCommand {
    /// Ingest dumps and write a snapshot.
    Save {
        path: PathBuf,
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Load a snapshot and print its statistics.
    Load { path: PathBuf },
}

/// A `--mode` value: ingest modes and cutoff modes share the flag since
/// their vocabularies are disjoint.
#[derive(Clone, Copy, Debug)]
enum ModeArg {
    Ingest(IngestMode),
    Cutoff(CutoffMode),
}

impl std::str::FromStr for ModeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse()
            .map(ModeArg::Ingest)
            .or_else(|_| s.parse().map(ModeArg::Cutoff))
            .map_err(|_| format!("unknown mode `{s}` (expected strict, skip, filter or barrier)"))
    }
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// Directory of dumps to ingest.
    #[arg(long)]
    ingest: Option<PathBuf>,
    /// Snapshot to load (before any --ingest).
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// strict|skip for ingest; filter|barrier for cutoff queries.
    #[arg(long = "mode")]
    modes: Vec<ModeArg>,
}

impl GraphArgs {
    fn ingest_mode(&self) -> IngestMode {
        self.modes
            .iter()
            .rev()
            .find_map(|m| match m {
                ModeArg::Ingest(m) => Some(*m),
                ModeArg::Cutoff(_) => None,
            })
            .unwrap_or_default()
    }

    fn cutoff_mode(&self) -> Option<CutoffMode> {
        self.modes.iter().rev().find_map(|m| match m {
            ModeArg::Cutoff(m) => Some(*m),
            ModeArg::Ingest(_) => None,
        })
    }

    fn reject_cutoff_mode(&self) -> Result<(), Failure> {
        match self.cutoff_mode() {
            Some(m) => Err(Failure::usage(format!("--mode {m} only applies to cutoff queries"))),
            None => Ok(()),
        }
    }
}

#[derive(Args)]
struct QueryArgs {
    /// file, source, dest, cutoff, reachable, top or stats
    kind: String,
    /// File tag or function name.
    subject: Option<String>,
    /// Destination function for `reachable`.
    target: Option<String>,
    #[command(flatten)]
    graph: GraphArgs,
    /// Comma-separated functions excluded by a cutoff query.
    #[arg(long, value_delimiter = ',')]
    excluded: Vec<String>,
    #[arg(long)]
    cutoff_mode: Option<CutoffMode>,
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, default_value = "structured")]
    render: Render,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn input(message: impl ToString) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }
}

fn load_graph(args: &GraphArgs) -> Result<Oracle, Failure> {
    if args.ingest.is_none() && args.snapshot.is_none() {
        return Err(Failure::usage("no graph loaded: pass --snapshot FILE and/or --ingest DIR"));
    }
    let oracle = Oracle::default();
    if let Some(path) = &args.snapshot {
        oracle.load_snapshot(path).map_err(Failure::input)?;
    }
    if let Some(dir) = &args.ingest {
        let report = oracle.ingest(dir, args.ingest_mode()).map_err(Failure::input)?;
        for err in &report.parse_errors {
            eprintln!("warning: skipped {err}");
        }
    }
    Ok(oracle)
}

/// Maps command-line flags onto the same parameters the HTTP front end takes.
fn build_request(args: &QueryArgs) -> Result<QueryRequest, Failure> {
    let mut params: Vec<(&str, String)> = Vec::new();
    if let Some(subject) = &args.subject {
        params.push(("subject", subject.clone()));
    }
    if let Some(target) = &args.target {
        params.push(("target", target.clone()));
    }
    if !args.excluded.is_empty() {
        params.push(("excluded", args.excluded.join(",")));
    }
    if let Some(mode) = args.cutoff_mode.or(args.graph.cutoff_mode()) {
        params.push(("mode", mode.to_string()));
    }
    if let Some(limit) = args.limit {
        params.push(("limit", limit.to_string()));
    }
    let req = QueryRequest::from_params(&args.kind, params.iter().map(|(k, v)| (*k, v.as_str())))
        .map_err(Failure::usage)?;
    Ok(req.with_render(args.render))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest { dir, mode, save } => {
            let oracle = Oracle::default();
            let report = oracle.ingest(&dir, mode).map_err(Failure::input)?;
            println!("{report}");
            if let Some(path) = save {
                oracle.save_snapshot(&path).map_err(Failure::input)?;
                println!("saved {}", path.display());
            }
        }
        Command::Query(args) => {
            let req = build_request(&args)?;
            let oracle = load_graph(&args.graph)?;
            let result = oracle.handle(&req).map_err(Failure::usage)?;
            print!("{}", result.render());
        }
        Command::Snapshot(SnapshotCommand::Save { path, graph }) => {
            graph.reject_cutoff_mode()?;
            let oracle = load_graph(&graph)?;
            oracle.save_snapshot(&path).map_err(Failure::input)?;
            print_stats(&oracle);
        }
        Command::Snapshot(SnapshotCommand::Load { path }) => {
            let oracle = Oracle::default();
            oracle.load_snapshot(&path).map_err(Failure::input)?;
            print_stats(&oracle);
        }
        Command::Serve {
            graph,
            addr,
            port,
            answer_cap,
        } => {
            graph.reject_cutoff_mode()?;
            let oracle = if graph.ingest.is_some() || graph.snapshot.is_some() {
                load_graph(&graph)?
            } else {
                Oracle::default()
            };
            let oracle = Arc::new(oracle.with_answer_cap(answer_cap));
            server::run(oracle, SocketAddr::new(addr, port))
                .map_err(|e| Failure::input(format!("server error on {addr}:{port}: {e}")))?;
        }
        Command::Bench {
            graph,
            scale,
            seed,
            hub,
            skip_scan_closure,
        } => {
            graph.reject_cutoff_mode()?;
            let input = match (graph.snapshot, graph.ingest) {
                (Some(path), _) => BenchInput::Snapshot(path),
                (None, Some(dir)) => BenchInput::Dumps(dir),
                (None, None) => BenchInput::Synthetic(SynthParams::with_edges(scale).seed(seed)),
            };
            let config = BenchConfig {
                input,
                hub,
                skip_scan_closure,
            };
            let report = bench::run(&config).map_err(Failure::input)?;
            print!("{report}");
        }
        Command::Generate {
            dir,
            scale,
            seed,
            files,
        } => {
            let mut params = SynthParams::with_edges(scale).seed(seed);
            if let Some(files) = files {
                params.files = files;
            }
            let edges = bench::synth::generate(&params);
            let n = write_corpus(&dir, &edges)?;
            println!("wrote {n} files, {} edges to {}", edges.len(), dir.display());
        }
    }
    Ok(())
}

fn write_corpus(dir: &Path, edges: &[cgoracle::RawEdge]) -> Result<usize, Failure> {
    bench::synth::write_dumps(dir, edges).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))
}

fn print_stats(oracle: &Oracle) {
    let s = oracle.stats();
    println!("functions {}", s.function_count);
    println!("files {}", s.file_count);
    println!("edges {}", s.edge_count);
    println!("raw_edges {}", s.raw_edge_count);
    println!("version {}", s.version);
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

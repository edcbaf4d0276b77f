use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use gadmol::analysis::{load_snapshots, snapshot_report, DEFAULT_CLUSTERS};
use gadmol::codec::{decode, encode, Genotype};
use gadmol::config::{ReferenceSource, RunConfig, TaskSpec};
use gadmol::molgraph::{canonical, parse_smiles, MolecularGraph};
use gadmol::properties::{Descriptors, PropertyRecord};
use gadmol::reference::{bundled_reference, load_reference, synthetic_reference, ReferenceSet};
use gadmol::report::{write_outputs, RunReport, Timing};
use gadmol::tasks::{run_task, Artifact};

/// Environment variable naming the default output directory.
const OUTPUT_ENV: &str = "GADMOL_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "gadmol-output";

#[derive(Parser, Debug)]
#[command(name = "gadmol", version, about = "Discriminator-augmented genetic algorithm for molecular design")]
struct Cli {
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Default)]
struct ReferenceArgs {
    /// Reference SMILES file, replacing the configured source.
    #[arg(long, conflicts_with = "synthetic_reference")]
    reference: Option<PathBuf>,
    /// Use N decoded random genotypes as the reference set.
    #[arg(long, value_name = "N")]
    synthetic_reference: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the task described by a JSON config.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        reference: ReferenceArgs,
    },
    /// Run a discriminator-weight sweep; other tasks in the config are replaced
    /// by the default sweep.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        reference: ReferenceArgs,
    },
    /// Print the canonical SMILES of a genotype.
    Decode { genotype: String },
    /// Print a genotype for a SMILES string.
    Encode { smiles: String },
    /// Score SMILES or genotypes read from standard input, one per line.
    Props {
        #[command(flatten)]
        reference: ReferenceArgs,
    },
    /// Score random genotypes.
    Baseline {
        #[arg(short = 'n', long, default_value_t = 50_000)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        reference: ReferenceArgs,
    },
    /// Cluster and project population snapshots of a finished run.
    Analyze {
        run_dir: PathBuf,
        /// Snapshot generations to include (all when omitted).
        #[arg(long, value_delimiter = ',')]
        generations: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_CLUSTERS)]
        clusters: usize,
        /// Also write long-format plot tables.
        #[arg(long)]
        plot_data: bool,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Runtime(m) => m,
        }
    }
}

fn invalid(e: impl ToString) -> Failure {
    Failure::Validation(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(runtime)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out, reference } => {
            let cfg = load_config(&config, cli.seed, cli.threads, &reference, false)?;
            execute(cfg, out)
        }
        Command::Sweep { config, out, reference } => {
            let cfg = load_config(&config, cli.seed, cli.threads, &reference, true)?;
            execute(cfg, out)
        }
        Command::Decode { genotype } => {
            let g: Genotype = genotype.parse().map_err(invalid)?;
            println!("{}", canonical(&decode(&g)));
            Ok(())
        }
        Command::Encode { smiles } => {
            let graph = parse_smiles(&smiles).map_err(invalid)?;
            println!("{}", encode(&graph).map_err(invalid)?);
            Ok(())
        }
        Command::Props { reference } => {
            init_threads(cli.threads)?;
            let r = resolve_reference(&ReferenceSource::Bundled, &reference, cli.seed.unwrap_or(0))?;
            props(&r)
        }
        Command::Baseline { n, bins, out, reference } => {
            let mut cfg = RunConfig {
                task: TaskSpec::RandomBaseline { n, bins },
                threads: cli.threads,
                ..Default::default()
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            apply_reference_args(&mut cfg, &reference);
            cfg.validate().map_err(invalid)?;
            execute(cfg, out)
        }
        Command::Analyze {
            run_dir,
            generations,
            clusters,
            plot_data,
        } => {
            init_threads(cli.threads)?;
            analyze(&run_dir, &generations, clusters, cli.seed.unwrap_or(0), plot_data)
        }
    }
}

fn apply_reference_args(cfg: &mut RunConfig, args: &ReferenceArgs) {
    if let Some(p) = &args.reference {
        cfg.reference = ReferenceSource::Path(p.clone());
    }
    if let Some(n) = args.synthetic_reference {
        cfg.reference = ReferenceSource::Synthetic(n);
    }
}

fn load_config(
    path: &Path,
    seed: Option<u64>,
    threads: Option<usize>,
    reference: &ReferenceArgs,
    sweep: bool,
) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(path).map_err(invalid)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if threads.is_some() {
        cfg.threads = threads;
    }
    if sweep && !matches!(cfg.task, TaskSpec::BetaSweep { .. }) {
        cfg.task = default_task("{\"kind\":\"beta_sweep\"}");
    }
    apply_reference_args(&mut cfg, reference);
    cfg.validate().map_err(invalid)?;
    Ok(cfg)
}

/// A task variant with every default filled in.
fn default_task(doc: &str) -> TaskSpec {
    RunConfig::from_json(&format!("{{\"task\":{doc}}}"))
        .expect("default task is valid")
        .task
}

fn resolve_reference(source: &ReferenceSource, args: &ReferenceArgs, seed: u64) -> Result<ReferenceSet, Failure> {
    let source = match (&args.reference, args.synthetic_reference) {
        (Some(p), _) => ReferenceSource::Path(p.clone()),
        (None, Some(n)) => ReferenceSource::Synthetic(n),
        _ => source.clone(),
    };
    match source {
        ReferenceSource::Bundled => Ok(bundled_reference()),
        ReferenceSource::Path(p) => load_reference(&p).map_err(invalid),
        ReferenceSource::Synthetic(n) => synthetic_reference(n, seed).map_err(invalid),
    }
}

fn output_dir(cli_out: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    cli_out
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

fn execute(cfg: RunConfig, out: Option<PathBuf>) -> Result<(), Failure> {
    init_threads(cfg.threads)?;
    let reference = resolve_reference(&cfg.reference, &ReferenceArgs::default(), cfg.seed)?;
    let dir = output_dir(out, &cfg);
    let start = Instant::now();
    let output = run_task(&cfg, &reference).map_err(runtime)?;
    let timing = Timing {
        wall_seconds: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    };
    let report = RunReport::new(&cfg, &reference, output.result, timing);
    write_outputs(&dir, &report, &output.artifacts).map_err(runtime)?;
    println!("task {} seed {}", report.task, report.seed);
    println!("output {}", dir.display());
    println!("determinism_hash {}", report.determinism_hash);
    Ok(())
}

fn parse_input(line: &str) -> Result<MolecularGraph, String> {
    if line.starts_with('[') {
        if let Ok(g) = line.parse::<Genotype>() {
            return Ok(decode(&g));
        }
    }
    parse_smiles(line).map_err(|e| e.to_string())
}

fn props(reference: &ReferenceSet) -> Result<(), Failure> {
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "input,logp_raw,sa_raw,ring_raw,qed,j").map_err(runtime)?;
    for (i, line) in stdin.lock().lines().enumerate() {
        let line = line.map_err(runtime)?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        match parse_input(text) {
            Ok(g) => {
                let r = PropertyRecord::from_descriptors(&Descriptors::of(&g), &reference.stats);
                writeln!(out, "{},{},{},{},{},{}", text, r.logp_raw + 0.0, r.sa_raw + 0.0, r.ring_raw + 0.0, r.qed, r.j).map_err(runtime)?;
            }
            Err(e) => eprintln!("line {}: skipped `{text}`: {e}", i + 1),
        }
    }
    Ok(())
}

fn analyze(run_dir: &Path, generations: &[usize], k: usize, seed: u64, plot: bool) -> Result<(), Failure> {
    if k == 0 {
        return Err(invalid("--clusters must be at least 1"));
    }
    let snapshots = load_snapshots(run_dir).map_err(invalid)?;
    if snapshots.is_empty() {
        return Err(invalid(format!("no snapshots under {}", run_dir.join("snapshots").display())));
    }
    let gens: Vec<usize> = if generations.is_empty() {
        snapshots.iter().map(|s| s.generation).collect()
    } else {
        generations.to_vec()
    };
    let report = snapshot_report(&snapshots, &gens, k, seed).map_err(invalid)?;
    let mut artifacts = vec![
        Artifact {
            path: "analysis/clusters.csv".into(),
            contents: report.points_csv(),
        },
        Artifact {
            path: "analysis/diversity.csv".into(),
            contents: report.diversity_csv(),
        },
    ];
    if plot {
        artifacts.push(Artifact {
            path: "analysis/plot_data.csv".into(),
            contents: report.plot_data(),
        });
    }
    for a in &artifacts {
        let path = run_dir.join(&a.path);
        std::fs::create_dir_all(path.parent().expect("nested path")).map_err(runtime)?;
        std::fs::write(&path, &a.contents).map_err(runtime)?;
        println!("wrote {}", path.display());
    }
    println!(
        "explained variance {:.4} {:.4}",
        report.explained[0], report.explained[1]
    );
    Ok(())
}

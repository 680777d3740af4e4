//! `podstyle` command-line driver.
//!
//! Any config value can be overridden with `--section.key value` (or
//! `--section.key=value`); top-level keys take `--seed`, `--corpus` and
//! `--output_dir`.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use podstyle::corpus::write_corpus;
use podstyle::pipeline::{load_config, Pipeline, Stage, Task};
use podstyle::synth::{generate, Shifts, SynthConfig};
use podstyle::Error;

#[derive(Parser)]
#[command(name = "podstyle", version, about = "Linguistic style and engagement analysis for spoken-content corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON run configuration; defaults apply to missing keys.
    #[arg(short, long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Filter the corpus and compute engagement groups.
    Ingest(ConfigArg),
    /// Topic model training and role labeling.
    Lda {
        #[command(subcommand)]
        action: LdaAction,
    },
    /// Per-episode feature extraction.
    Features {
        #[command(subcommand)]
        action: FeaturesAction,
    },
    /// Statistical contrasts.
    Analyze {
        #[command(subcommand)]
        action: AnalyzeAction,
    },
    /// Classifiers over feature representations.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Collect the Markdown tables into report.md.
    Report(ConfigArg),
    /// Run several stages in order.
    Run {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated stages; all when omitted.
        #[arg(long, value_delimiter = ',')]
        stages: Vec<String>,
    },
    /// Print the effective configuration as JSON.
    Config(ConfigArg),
    /// Write a synthetic corpus with known engagement effects.
    Synth(SynthArgs),
}

#[derive(Subcommand)]
enum LdaAction {
    /// Train the model, write the review sheet and label topics.
    Train(ConfigArg),
    /// Relabel topics of a trained model from the roles file or seed words.
    Label(ConfigArg),
}

#[derive(Subcommand)]
enum FeaturesAction {
    Extract(ConfigArg),
}

#[derive(Subcommand)]
enum AnalyzeAction {
    /// Bootstrapped Welch tests per feature and quartile.
    GroupMeans(ConfigArg),
    /// Stream rate against popularity within quartiles.
    Spearman(ConfigArg),
}

#[derive(Subcommand)]
enum ModelAction {
    Cv(ConfigArg),
    Ablate(ConfigArg),
    Sweep(ConfigArg),
    TopNgrams(ConfigArg),
}

#[derive(Args)]
struct SynthArgs {
    /// Output corpus file.
    #[arg(short, long)]
    out: PathBuf,
    #[arg(short, long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write each episode's latent engagement as CSV.
    #[arg(long)]
    latent: Option<PathBuf>,
    /// Generate without any engagement effect on the features.
    #[arg(long)]
    no_shifts: bool,
}

const TOP_LEVEL_KEYS: &[&str] = &["seed", "corpus", "output_dir"];

/// Pull `--key value` config overrides out of the argument list.
fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, String)>), String> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    if let Some(bin) = it.next() {
        rest.push(bin);
    }
    let is_synth = std::env::args().nth(1).as_deref() == Some("synth");
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            rest.push(a);
            continue;
        };
        let (key, inline) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        let is_override = key.contains('.') || (!is_synth && TOP_LEVEL_KEYS.contains(&key.as_str()));
        if !is_override {
            rest.push(a);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().ok_or_else(|| format!("--{key} needs a value"))?,
        };
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) | Error::MissingStage { .. } => 1,
        Error::Internal(_) => 3,
        _ => 2,
    }
}

fn pipeline(c: &ConfigArg, overrides: &[(String, String)]) -> Result<Pipeline, Error> {
    Pipeline::new(load_config(c.config.as_deref(), overrides)?)
}

fn synth(a: &SynthArgs) -> Result<(), Error> {
    let cfg = SynthConfig {
        n_episodes: a.n,
        seed: a.seed,
        shifts: if a.no_shifts {
            Shifts {
                entropy: false,
                speech_rate: false,
                swear: false,
            }
        } else {
            Shifts::default()
        },
        ..SynthConfig::default()
    };
    let s = generate(&cfg)?;
    let file = std::fs::File::create(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_corpus(&s.corpus, &mut w)?;
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    if let Some(p) = &a.latent {
        let mut out = String::from("episode_id,engagement\n");
        for (ep, z) in s.corpus.episodes.iter().zip(&s.engagement) {
            out.push_str(&format!("{},{z}\n", ep.episode_id));
        }
        std::fs::write(p, out).map_err(|e| Error::io(p, e))?;
    }
    log::info!("wrote {} episodes to {}", s.corpus.len(), a.out.display());
    Ok(())
}

fn run(cli: Cli, overrides: &[(String, String)]) -> Result<(), Error> {
    let task = |c: &ConfigArg, t: Task| pipeline(c, overrides)?.run_task(t);
    match cli.command {
        Command::Ingest(c) => task(&c, Task::Ingest),
        Command::Lda { action } => match action {
            LdaAction::Train(c) => task(&c, Task::LdaTrain),
            LdaAction::Label(c) => task(&c, Task::LdaLabel),
        },
        Command::Features { action: FeaturesAction::Extract(c) } => task(&c, Task::Features),
        Command::Analyze { action } => match action {
            AnalyzeAction::GroupMeans(c) => task(&c, Task::GroupMeans),
            AnalyzeAction::Spearman(c) => task(&c, Task::Spearman),
        },
        Command::Model { action } => match action {
            ModelAction::Cv(c) => task(&c, Task::Cv),
            ModelAction::Ablate(c) => task(&c, Task::Ablate),
            ModelAction::Sweep(c) => task(&c, Task::Sweep),
            ModelAction::TopNgrams(c) => task(&c, Task::TopNgrams),
        },
        Command::Report(c) => task(&c, Task::Report),
        Command::Run { config, stages } => {
            let stages: Vec<Stage> = if stages.is_empty() {
                Stage::ALL.to_vec()
            } else {
                stages.iter().map(|s| s.trim().parse()).collect::<Result<_, _>>()?
            };
            pipeline(&config, overrides)?.run_stages(&stages)
        }
        Command::Config(c) => {
            let json = load_config(c.config.as_deref(), overrides)?.to_json()?;
            // A closed pipe (e.g. `| head`) is not an error.
            let _ = writeln!(std::io::stdout().lock(), "{json}");
            Ok(())
        }
        Command::Synth(a) => {
            if !overrides.is_empty() {
                return Err(Error::Config("synth takes no config overrides".into()));
            }
            synth(&a)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let (args, overrides) = match split_overrides(std::env::args().collect()) {
        Ok(v) => v,
        Err(m) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

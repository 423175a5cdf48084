use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use errand_core::corpus::{evaluate, parse_corpus, validate_corpus};
use errand_core::nlu::{
    interpret, translator_from_config, Backend, CommandId, CommandSource, CommandText, Issue,
    Translator, TranslatorConfig,
};
use errand_core::sim::{run_scripted, LoadedScenario};
use errand_core::world::{GridMap, LandmarkDictionary};
use errand_service::{serve, ApiError, AppState};

const OFFICE_GRID: &str = include_str!("../../../assets/office.grid");
const OFFICE_LANDMARKS: &str = include_str!("../../../assets/office.landmarks");

#[derive(Parser)]
#[command(name = "errand", version, about = "Errand-running robot simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation and serve the HTTP API.
    Serve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value = "mock")]
        llm: Backend,
    },
    /// Interpret one command and print the task, or the error, as JSON.
    Parse {
        #[arg(long)]
        text: String,
        #[arg(long, default_value = "mock")]
        llm: Backend,
        /// Defaults to the bundled office landmarks.
        #[arg(long)]
        landmarks: Option<PathBuf>,
        /// Defaults to the `.grid` file next to the landmarks.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Score a command corpus against its gold labels.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        landmarks: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, default_value = "mock")]
        llm: Backend,
        /// Print the full report as JSON instead of one line per entry.
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario headless and print its metrics report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        ticks: Option<u64>,
        /// Overrides the scenario's crowd seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn translator(backend: Backend) -> Result<Box<dyn Translator>> {
    Ok(translator_from_config(&TranslatorConfig::from_env(
        backend,
    ))?)
}

fn dictionary(landmarks: Option<&Path>, map: Option<&Path>) -> Result<LandmarkDictionary> {
    let Some(landmarks) = landmarks else {
        let grid = GridMap::parse(OFFICE_GRID)?;
        return Ok(LandmarkDictionary::parse(OFFICE_LANDMARKS, &grid)?);
    };
    let map = map
        .map(Path::to_path_buf)
        .unwrap_or_else(|| landmarks.with_extension("grid"));
    let grid =
        GridMap::parse(&read(&map)?).with_context(|| format!("parsing {}", map.display()))?;
    LandmarkDictionary::parse(&read(landmarks)?, &grid)
        .with_context(|| format!("parsing {}", landmarks.display()))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Serve {
            scenario,
            port,
            host,
            llm,
        } => {
            let state = AppState::start(&scenario, Arc::from(translator(llm)?))?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port))
                    .await
                    .with_context(|| format!("binding {host}:{port}"))?;
                log::info!(
                    "serving {} on http://{} (scenarios: {})",
                    scenario.display(),
                    listener.local_addr()?,
                    state.scenario_names().join(", ")
                );
                serve(listener, state).await?;
                Ok::<_, anyhow::Error>(())
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Parse {
            text,
            llm,
            landmarks,
            map,
        } => {
            let dictionary = dictionary(landmarks.as_deref(), map.as_deref())?;
            let translator = translator(llm)?;
            let outcome = CommandText::new(text, CommandSource::Cli).and_then(|t| {
                interpret(
                    &t,
                    translator.as_ref(),
                    &dictionary,
                    Issue::new(CommandId::sequential(1), 0.0),
                )
            });
            match outcome {
                Ok(task) => {
                    print_json(&task)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    print_json(&ApiError {
                        error: e.code().to_string(),
                        message: e.to_string(),
                    })?;
                    Ok(ExitCode::FAILURE)
                }
            }
        }
        Command::Eval {
            corpus,
            landmarks,
            map,
            llm,
            json,
        } => {
            let dictionary = dictionary(Some(&landmarks), map.as_deref())?;
            let entries = parse_corpus(&read(&corpus)?)
                .with_context(|| format!("parsing {}", corpus.display()))?;
            validate_corpus(&entries, &dictionary)?;
            let report = evaluate(&entries, translator(llm)?.as_ref(), &dictionary);
            if json {
                print_json(&report)?;
            } else {
                for e in &report.entries {
                    let mark = if e.correct { "ok  " } else { "MISS" };
                    let detail = match (&e.predicted, &e.error) {
                        (Some(p), _) => format!("{} -> {} ({})", p.pickup, p.delivery, p.item),
                        (None, Some(err)) => err.clone(),
                        (None, None) => String::new(),
                    };
                    println!("{mark} {:?}: {detail}", e.command);
                }
                println!(
                    "accuracy {:.2} ({}/{})",
                    report.accuracy, report.correct, report.total
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            scenario,
            ticks,
            seed,
        } => {
            let loaded = LoadedScenario::load(&scenario)?;
            let mut config = loaded.config()?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let report =
                run_scripted(&loaded, &config, translator(Backend::Mock)?.as_ref(), ticks)?;
            print_json(&report)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

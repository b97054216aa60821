use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use replay_core::data::{load_games, windowize_corpus, write_games, write_sessions, SplitMode};
use replay_core::equilibrium::{self, Concept, ConceptParams};
use replay_core::harness::{
    emit_report, report, run_cross_game, run_game_specific, sweep_history_length, verify_aggregates, write_sweep_csv, EvalReport,
    ExperimentConfig, ModelKind, Protocol,
};
use replay_core::neural::{encode_samples, checkpoint, train, FeatureEncoding, ModelSpec};
use replay_core::{seed, Error, Result};

#[derive(Parser)]
#[command(name = "replay-bench", version, about = "Predict step-by-step play in repeated 2x2 games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the root seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for independent cells
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium profiles of the games in a game file
    Solve {
        #[arg(long)]
        games: PathBuf,
        /// Only this game id
        #[arg(long)]
        game: Option<String>,
        /// nash, qre, pse, ase or ibe
        #[arg(long, default_value = "nash")]
        concept: String,
        #[arg(long)]
        lambda: Option<f64>,
        /// Sample size for the sampling equilibria
        #[arg(long)]
        n: Option<u32>,
    },
    /// Write the configured synthetic corpus as game and session files
    Simulate(Common),
    /// Train the first network of the roster on the whole corpus
    Train(Common),
    /// Run the configured protocol(s) and write reports
    Eval(Common),
    /// History-length sweep of the roster's networks
    Sweep(Common),
    /// Recompute aggregates from a report directory and print them
    Report {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(d) = &c.out_dir {
        cfg.out_dir = d.clone();
    }
    if c.jobs.is_some() {
        cfg.jobs = c.jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &EvalReport) {
    println!("{:?} protocol, k = {}", report.protocol, report.k);
    println!("{:<28} {:>8} {:>10} {:>9} {:>10}", "model", "steps", "loss", "accuracy", "econ_value");
    for a in &report.aggregates {
        println!("{:<28} {:>8} {:>10.4} {:>9.2} {:>10.2}", a.model, a.steps, a.loss, a.accuracy, a.econ_value);
    }
    for e in &report.errors {
        eprintln!("cell failed: {} on {}: {}", e.model, e.split, e.message);
    }
}

/// Returns whether every cell succeeded.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { games, game, concept, lambda, n } => {
            let concept = Concept::parse(&concept)?;
            let params = ConceptParams { lambda, sample_size: n };
            let mut out = Vec::new();
            for g in load_games(&games)?.iter().filter(|g| game.as_ref().is_none_or(|id| *id == g.id)) {
                let profiles = equilibrium::solve(g, concept, params)?;
                out.push(serde_json::json!({ "game": g.id, "profiles": profiles }));
            }
            if out.is_empty() {
                return Err(Error::Config("no matching game".into()));
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(true)
        }
        Command::Simulate(c) => {
            let cfg = load_config(&c)?;
            let corpus = cfg.build_corpus()?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            write_games(cfg.out_dir.join("games.txt"), &corpus.games)?;
            write_sessions(cfg.out_dir.join("sessions.txt"), &corpus.sessions)?;
            println!("wrote {} games and {} sessions to {}", corpus.games.len(), corpus.sessions.len(), cfg.out_dir.display());
            Ok(true)
        }
        Command::Train(c) => {
            let cfg = load_config(&c)?;
            let kind = cfg
                .roster
                .iter()
                .copied()
                .find(|m| m.is_neural())
                .ok_or_else(|| Error::Config("roster has no network to train".into()))?;
            let corpus = cfg.build_corpus()?;
            let enc = FeatureEncoding::new(cfg.modes[0], cfg.k);
            let spec = ModelSpec { architecture: kind.architecture().expect("neural"), ..ModelSpec::mlp(enc) };
            let samples = windowize_corpus(&corpus, cfg.k, cfg.trim)?;
            let set = encode_samples(&samples, &corpus.games, enc)?;
            let tc = replay_core::neural::TrainConfig { seed: seed::derive(cfg.seed, "train"), ..cfg.training.clone() };
            let (model, log) = train(&spec, &set, &tc)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            checkpoint::save(&model, &cfg.out_dir.join("model.ckpt"))?;
            std::fs::write(cfg.out_dir.join("train_log.json"), serde_json::to_string_pretty(&log)? + "\n")?;
            println!(
                "{kind}: {} epochs, best validation loss {:.4}",
                log.epochs.len(),
                log.best_validation_loss().unwrap_or(f64::NAN)
            );
            Ok(true)
        }
        Command::Eval(c) => {
            let cfg = load_config(&c)?;
            let corpus = cfg.build_corpus()?;
            let mut ok = true;
            let protocols = match cfg.protocol {
                Protocol::CrossGame => vec![SplitMode::CrossGame],
                Protocol::GameSpecific => vec![SplitMode::GameSpecific],
                Protocol::Both => vec![SplitMode::CrossGame, SplitMode::GameSpecific],
            };
            for p in protocols {
                let (report, dir) = match p {
                    SplitMode::CrossGame => (run_cross_game(&cfg, &corpus)?, "cross_game"),
                    SplitMode::GameSpecific => (run_game_specific(&cfg, &corpus)?, "game_specific"),
                };
                emit_report(&report, &cfg, cfg.seed, &cfg.out_dir.join(dir))?;
                print_report(&report);
                ok &= report.succeeded();
            }
            Ok(ok)
        }
        Command::Sweep(c) => {
            let cfg = load_config(&c)?;
            let corpus = cfg.build_corpus()?;
            let table = sweep_history_length(&cfg, &corpus)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            write_sweep_csv(&table, &cfg.out_dir.join(report::SWEEP_CSV))?;
            println!("{:>4} {:<12} {:<6} {:>10} {:>9} {:>10}", "k", "mode", "model", "loss", "accuracy", "econ_value");
            for r in &table.rows {
                println!("{:>4} {:<12} {:<6} {:>10.4} {:>9.2} {:>10.2}", r.k, r.mode, r.model, r.loss, r.accuracy, r.econ_value);
            }
            for e in &table.errors {
                eprintln!("cell failed: {} on {}: {}", e.model, e.split, e.message);
            }
            Ok(table.errors.is_empty())
        }
        Command::Report { out_dir } => {
            let dirs: Vec<PathBuf> = ["cross_game", "game_specific", ""]
                .iter()
                .map(|d| out_dir.join(d))
                .filter(|d| d.join(report::PER_GAME_CSV).is_file())
                .collect();
            if dirs.is_empty() {
                return Err(Error::Config(format!("no {} under {}", report::PER_GAME_CSV, out_dir.display())));
            }
            for d in dirs {
                print_aggregates(&d)?;
            }
            Ok(true)
        }
    }
}

fn print_aggregates(dir: &Path) -> Result<()> {
    let rows = verify_aggregates(dir, 1e-12)?;
    println!("{}", dir.display());
    for a in rows {
        let note = if a.model == ModelKind::BestStatic.label(replay_core::neural::EncodingMode::ActionOnly) { "  (oracle benchmark)" } else { "" };
        println!("  {:<28} {:>8} {:>10.4} {:>9.2} {:>10.2}{note}", a.model, a.steps, a.loss, a.accuracy, a.econ_value);
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

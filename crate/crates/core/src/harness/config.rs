use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::roster::ModelKind;
use crate::data::{load_games, load_sessions, synth_generate, Corpus, CorpusShape, Generator, SynthSpec, DEFAULT_TRIM};
use crate::error::{Error, Result};
use crate::neural::{EncodingMode, TrainConfig};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[default]
    CrossGame,
    GameSpecific,
    Both,
}

/// Where the sessions come from: files on disk or a synthetic generator.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub games: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessions: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub generator: Generator,
    #[serde(default)]
    pub shape: CorpusShape,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_k() -> usize {
    20
}

fn default_sweep_k() -> Vec<usize> {
    vec![1, 2, 5, 10, 15, 20, 25, 30]
}

fn default_modes() -> Vec<EncodingMode> {
    vec![EncodingMode::ActionOnly]
}

fn default_trim() -> usize {
    DEFAULT_TRIM
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root of every random stream (corpus, splits, initialization).
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub roster: Vec<ModelKind>,
    /// History length for evaluation runs.
    #[serde(default = "default_k")]
    pub k: usize,
    /// History lengths visited by the sweep.
    #[serde(default = "default_sweep_k")]
    pub sweep_k: Vec<usize>,
    /// Input encodings for the neural models.
    #[serde(default = "default_modes")]
    pub modes: Vec<EncodingMode>,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default = "default_trim")]
    pub trim: usize,
    /// Worker threads for independent cells; `None` uses one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub training: TrainConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative corpus and output paths are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.corpus.games, &mut cfg.corpus.sessions].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.roster.is_empty() {
            return Err(Error::Config("model roster is empty".into()));
        }
        if self.k == 0 || self.sweep_k.contains(&0) {
            return Err(Error::Config("history lengths must be at least 1".into()));
        }
        if self.sweep_k.is_empty() {
            return Err(Error::Config("sweep needs at least one history length".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("at least one encoding mode is required".into()));
        }
        for m in &self.roster {
            if let Some(arch) = m.architecture() {
                if self.k < arch.min_k() {
                    return Err(Error::Config(format!("{m} needs k >= {}, config has k = {}", arch.min_k(), self.k)));
                }
            }
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        self.training.validate()?;
        let c = &self.corpus;
        match (&c.games, &c.sessions, &c.synthetic) {
            (Some(_), Some(_), None) => Ok(()),
            (None, None, Some(s)) => s.generator.validate(),
            _ => Err(Error::Config("corpus needs either both `games` and `sessions` paths or a `synthetic` section".into())),
        }
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(1)
    }

    pub fn build_corpus(&self) -> Result<Corpus> {
        match &self.corpus.synthetic {
            Some(s) => {
                let spec = SynthSpec::with_random_games(s.generator.clone(), s.shape.clone(), seed::derive(self.seed, "corpus"));
                let sessions = synth_generate(&spec, seed::derive(self.seed, "sessions"))?;
                Corpus::new(spec.games, sessions)
            }
            None => {
                let games = load_games(self.corpus.games.as_deref().expect("validated"))?;
                let sessions = load_sessions(self.corpus.sessions.as_deref().expect("validated"))?;
                Corpus::new(games, sessions)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYNTH: &str = r#"
seed = 3
roster = ["cnn", "nash", "inertia"]
modes = ["action_only", "econ_aware"]

[corpus.synthetic]
shape = { sessions_per_game = [2, 2], pairs = 1, periods = 30 }

[corpus.synthetic.generator]
generator = "inertia_agent"
stay_prob = 0.9

[training]
max_epochs = 2
max_batches_per_epoch = 5
"#;

    #[test]
    fn parses_synthetic_config() {
        let cfg = ExperimentConfig::from_toml(SYNTH).unwrap();
        assert_eq!(cfg.k, 20);
        assert_eq!(cfg.trim, 10);
        assert_eq!(cfg.training.batch_size, 64);
        assert_eq!(cfg.training.max_batches_per_epoch, Some(5));
        let corpus = cfg.build_corpus().unwrap();
        assert_eq!(corpus.sessions.len(), 4);
        assert_eq!(corpus.games.len(), 2);
    }

    #[test]
    fn config_errors() {
        let empty = SYNTH.replace(r#"roster = ["cnn", "nash", "inertia"]"#, "roster = []");
        assert!(matches!(ExperimentConfig::from_toml(&empty), Err(Error::Config(_))));
        let short = SYNTH.replace("seed = 3", "seed = 3\nk = 5");
        assert!(ExperimentConfig::from_toml(&short).unwrap_err().to_string().contains("k >= 9"));
        let unknown = SYNTH.replace("\"nash\"", "\"lstm\"");
        assert!(matches!(ExperimentConfig::from_toml(&unknown), Err(Error::Config(_))));
        let typo = SYNTH.replace("seed = 3", "sead = 3");
        assert!(matches!(ExperimentConfig::from_toml(&typo), Err(Error::Config(_))));
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let text = "roster = [\"random\"]\n[corpus]\ngames = \"g.txt\"\nsessions = \"s\"\n";
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, text).unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.corpus.games.unwrap(), dir.path().join("g.txt"));
        assert_eq!(cfg.out_dir, dir.path().join("out"));
    }
}

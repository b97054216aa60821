//! Sessions, history windows, splits and synthetic corpora.

mod format;
mod split;
mod synth;
mod window;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, Game2x2, Role, StepRecord};

pub use format::{format_games, format_sessions, load_games, load_sessions, parse_games, parse_sessions, write_games, write_sessions};
pub use split::{make_splits, SplitMode, SplitSpec};
pub use synth::{synth_generate, synthetic_games, CorpusShape, Generator, SynthSpec};
pub use window::{predictable_periods, windowize, windowize_corpus, DEFAULT_TRIM};

/// One row player and one column player matched for a whole session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerPair {
    pub row: Vec<Action>,
    pub col: Vec<Action>,
}

impl PlayerPair {
    pub fn actions(&self, role: Role) -> &[Action] {
        match role {
            Role::Row => &self.row,
            Role::Column => &self.col,
        }
    }

    /// The pair's history from `role`'s side.
    pub fn records(&self, game: &Game2x2, role: Role) -> Vec<StepRecord> {
        let (own, opp) = match role {
            Role::Row => (&self.row, &self.col),
            Role::Column => (&self.col, &self.row),
        };
        own.iter().zip(opp).map(|(&a, &b)| StepRecord::new(game, role, a, b)).collect()
    }
}

/// One experimental session of a game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub game_id: String,
    pub session_id: String,
    pub pairs: Vec<PlayerPair>,
    pub periods: usize,
}

impl Session {
    pub fn new(game_id: impl Into<String>, session_id: impl Into<String>, pairs: Vec<PlayerPair>, periods: usize) -> Result<Self> {
        let s = Self { game_id: game_id.into(), session_id: session_id.into(), pairs, periods };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.pairs.iter().enumerate() {
            if p.row.len() != self.periods || p.col.len() != self.periods {
                return Err(Error::Validation(format!(
                    "session {}/{} pair {i}: sequences of length {}/{} but T = {}",
                    self.game_id,
                    self.session_id,
                    p.row.len(),
                    p.col.len(),
                    self.periods
                )));
            }
        }
        Ok(())
    }

    /// `(game_id, session_id)`, the identity used by leakage audits.
    pub fn tag(&self) -> (String, String) {
        (self.game_id.clone(), self.session_id.clone())
    }
}

/// A supervised example: the `k` periods before `period`, seen by `role`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSample {
    pub game_id: String,
    pub session_id: String,
    pub pair: usize,
    /// Zero-based index of the predicted period.
    pub period: usize,
    pub role: Role,
    /// Oldest first; `None` marks padding before the first period.
    pub history: Vec<Option<StepRecord>>,
    pub target: Action,
}

/// Games and their sessions, kept together so lookups by id are cheap.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub games: Vec<Game2x2>,
    pub sessions: Vec<Session>,
}

impl Corpus {
    pub fn new(games: Vec<Game2x2>, sessions: Vec<Session>) -> Result<Self> {
        let c = Self { games, sessions };
        let ids = c.game_index();
        if ids.len() != c.games.len() {
            return Err(Error::Validation("duplicate game id".into()));
        }
        for s in &c.sessions {
            if !ids.contains_key(s.game_id.as_str()) {
                return Err(Error::Validation(format!("session {} refers to unknown game {}", s.session_id, s.game_id)));
            }
        }
        Ok(c)
    }

    fn game_index(&self) -> HashMap<&str, usize> {
        self.games.iter().enumerate().map(|(i, g)| (g.id.as_str(), i)).collect()
    }

    pub fn game(&self, id: &str) -> Option<&Game2x2> {
        self.games.iter().find(|g| g.id == id)
    }

    pub fn sessions_of<'a>(&'a self, game_id: &'a str) -> impl Iterator<Item = &'a Session> + 'a {
        self.sessions.iter().filter(move |s| s.game_id == game_id)
    }

    /// Game ids that have at least one session, in order of first appearance.
    pub fn played_games(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.sessions {
            if !out.contains(&s.game_id) {
                out.push(s.game_id.clone());
            }
        }
        out
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Session;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Train on every other game, test on one game.
    CrossGame,
    /// Train on the other sessions of the test game, test on one session.
    GameSpecific,
}

/// One train/test partition of a corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_games: Vec<String>,
    pub test_game: String,
    pub mode: SplitMode,
    pub held_out_session: Option<String>,
}

impl SplitSpec {
    pub fn is_test(&self, s: &Session) -> bool {
        s.game_id == self.test_game && self.held_out_session.as_ref().is_none_or(|h| *h == s.session_id)
    }

    pub fn is_train(&self, s: &Session) -> bool {
        match self.mode {
            SplitMode::CrossGame => s.game_id != self.test_game && self.train_games.contains(&s.game_id),
            SplitMode::GameSpecific => s.game_id == self.test_game && !self.is_test(s),
        }
    }

    pub fn label(&self) -> String {
        match &self.held_out_session {
            Some(h) => format!("{}/{}", self.test_game, h),
            None => self.test_game.clone(),
        }
    }
}

fn games_in_order(corpus: &[Session]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in corpus {
        if !out.contains(&s.game_id) {
            out.push(s.game_id.clone());
        }
    }
    out
}

/// Leave-one-game-out or leave-one-session-out splits, in corpus order.
pub fn make_splits(corpus: &[Session], mode: SplitMode) -> Result<Vec<SplitSpec>> {
    let games = games_in_order(corpus);
    match mode {
        SplitMode::CrossGame => {
            if games.len() < 2 {
                return Err(Error::Config(format!("cross-game splits need at least 2 games, corpus has {}", games.len())));
            }
            Ok(games
                .iter()
                .map(|g| SplitSpec {
                    train_games: games.iter().filter(|x| *x != g).cloned().collect(),
                    test_game: g.clone(),
                    mode,
                    held_out_session: None,
                })
                .collect())
        }
        SplitMode::GameSpecific => {
            let mut out = Vec::new();
            for g in &games {
                let sessions: Vec<&Session> = corpus.iter().filter(|s| &s.game_id == g).collect();
                if sessions.len() < 2 {
                    return Err(Error::Config(format!("game {g} has {} session(s), game-specific splits need 2", sessions.len())));
                }
                for s in sessions {
                    out.push(SplitSpec {
                        train_games: vec![g.clone()],
                        test_game: g.clone(),
                        mode,
                        held_out_session: Some(s.session_id.clone()),
                    });
                }
            }
            Ok(out)
        }
    }
}

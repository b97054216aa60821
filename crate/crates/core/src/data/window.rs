use crate::error::{Error, Result};
use crate::game::{Game2x2, Role, StepRecord};

use super::{Corpus, PredictionSample, Session};

/// Periods dropped at each end of a session.
pub const DEFAULT_TRIM: usize = 10;

/// Zero-based target periods kept after trimming. A target always has at
/// least one observed period before it.
pub fn predictable_periods(periods: usize, trim: usize) -> std::ops::Range<usize> {
    trim.max(1)..periods.saturating_sub(trim)
}

fn check_window(session: &Session, k: usize, trim: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Validation("history length k must be at least 1".into()));
    }
    if session.periods <= 2 * trim + 1 {
        return Err(Error::Validation(format!(
            "session {}/{} has T = {} periods, need more than {} for trim {trim}",
            session.game_id,
            session.session_id,
            session.periods,
            2 * trim + 1
        )));
    }
    Ok(())
}

/// Builds one sample per player per predictable period of `sessions`, which
/// must all be sessions of `game`. Order: session, pair, period, row before
/// column.
pub fn windowize(sessions: &[Session], game: &Game2x2, k: usize, trim: usize) -> Result<Vec<PredictionSample>> {
    let mut out = Vec::new();
    for s in sessions {
        windowize_session(s, game, k, trim, &mut out)?;
    }
    Ok(out)
}

pub(crate) fn windowize_session(
    s: &Session,
    game: &Game2x2,
    k: usize,
    trim: usize,
    out: &mut Vec<PredictionSample>,
) -> Result<()> {
    if s.game_id != game.id {
        return Err(Error::Validation(format!("session {} belongs to game {}, not {}", s.session_id, s.game_id, game.id)));
    }
    check_window(s, k, trim)?;
    let targets = predictable_periods(s.periods, trim);
    out.reserve(s.pairs.len() * 2 * targets.len());
    for (pi, pair) in s.pairs.iter().enumerate() {
        let records: [Vec<StepRecord>; 2] = [pair.records(game, Role::Row), pair.records(game, Role::Column)];
        for t in targets.clone() {
            for (ri, role) in Role::BOTH.into_iter().enumerate() {
                let recs = &records[ri];
                let history = (0..k)
                    .map(|j| (t + j).checked_sub(k).map(|idx| recs[idx]))
                    .collect();
                out.push(PredictionSample {
                    game_id: s.game_id.clone(),
                    session_id: s.session_id.clone(),
                    pair: pi,
                    period: t,
                    role,
                    history,
                    target: pair.actions(role)[t],
                });
            }
        }
    }
    Ok(())
}

/// [`windowize`] over a whole corpus, each session against its own game.
pub fn windowize_corpus(corpus: &Corpus, k: usize, trim: usize) -> Result<Vec<PredictionSample>> {
    let mut out = Vec::new();
    for s in &corpus.sessions {
        let game = corpus
            .game(&s.game_id)
            .ok_or_else(|| Error::Validation(format!("unknown game {}", s.game_id)))?;
        windowize_session(s, game, k, trim, &mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PlayerPair;
    use crate::game::Action;

    fn session(t: usize, pairs: usize) -> Session {
        let seq: Vec<Action> = (0..t).map(|i| if i % 3 == 0 { Action::One } else { Action::Zero }).collect();
        let pair = PlayerPair { row: seq.clone(), col: seq.iter().map(|a| a.flip()).collect() };
        Session::new("mp", "s", vec![pair; pairs], t).unwrap()
    }

    fn game() -> Game2x2 {
        Game2x2 { id: "mp".into(), ..Game2x2::matching_pennies() }
    }

    #[test]
    fn trimmed_pair_counts() {
        let s = windowize(&[session(22, 1)], &game(), 1, 10).unwrap();
        assert_eq!(s.len(), 4);
        let periods: Vec<_> = s.iter().map(|x| x.period).collect();
        assert_eq!(periods, vec![10, 10, 11, 11]);
    }

    #[test]
    fn minimal_untrimmed_session() {
        let s = windowize(&[session(2, 1)], &game(), 1, 0).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|x| x.period == 1 && x.history[0].is_some()));
    }

    #[test]
    fn too_short_session_names_itself() {
        let err = windowize(&[session(21, 1)], &game(), 1, 10).unwrap_err();
        assert!(err.to_string().contains("mp/s"));
    }

    #[test]
    fn history_viewpoint_and_padding() {
        let s = windowize(&[session(30, 1)], &game(), 12, 10).unwrap();
        let first_col = s.iter().find(|x| x.role == Role::Column).unwrap();
        assert_eq!(first_col.period, 10);
        // two padded steps for a window of 12 ending before period 10
        assert!(first_col.history[0].is_none() && first_col.history[1].is_none());
        let last = first_col.history[11].unwrap();
        let pair = &session(30, 1).pairs[0];
        assert_eq!(last.own, pair.col[9]);
        assert_eq!(last.opp, pair.row[9]);
        assert_eq!(first_col.target, pair.col[10]);
    }

    #[test]
    fn count_matches_enumeration() {
        for (t, trim, pairs) in [(30, 10, 3), (50, 0, 2), (24, 11, 1), (200, 10, 4)] {
            let got = windowize(&[session(t, pairs)], &game(), 3, trim).unwrap().len();
            let mut brute = 0;
            for _ in 0..pairs {
                for target in 0..t {
                    if target >= trim && target + trim < t && target >= 1 {
                        brute += 2;
                    }
                }
            }
            assert_eq!(got, brute);
            if trim >= 1 {
                assert_eq!(got, pairs * 2 * (t - 2 * trim));
            }
        }
    }
}

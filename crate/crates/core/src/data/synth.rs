//! Synthetic corpora with known structure, shaped like the human-subject
//! experiments (12 games, 12 or 6 sessions each, 4 pairs, 200 periods).

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, Game2x2, Role, StepRecord};
use crate::learners::{Learner, NfpParams, RlParams};
use crate::seed::{self, Rng};

use super::{PlayerPair, Session};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// Every action is 0 with probability `p`, independently.
    Iid { p: f64 },
    /// Blocks of `period` zeros then `period` ones, starting with zeros.
    Alternator { period: usize },
    /// Uniform first action, then repeat with probability `stay_prob`.
    InertiaAgent { stay_prob: f64 },
    /// Reinforcement learners sampling their own forecasts.
    RlPopulation { params: RlParams },
    /// Fictitious-play learners sampling their own forecasts.
    NfpPopulation { params: NfpParams },
}

impl Generator {
    pub fn validate(&self) -> Result<()> {
        match self {
            Generator::Iid { p } if !(0.0..=1.0).contains(p) => Err(Error::Config(format!("iid probability {p} outside [0, 1]"))),
            Generator::Alternator { period: 0 } => Err(Error::Config("alternator period must be at least 1".into())),
            Generator::InertiaAgent { stay_prob } if !(0.0..=1.0).contains(stay_prob) => {
                Err(Error::Config(format!("stay probability {stay_prob} outside [0, 1]")))
            }
            Generator::RlPopulation { params } => params.validate(),
            Generator::NfpPopulation { params } => params.validate(),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Generator::Iid { .. } => "iid",
            Generator::Alternator { .. } => "alternator",
            Generator::InertiaAgent { .. } => "inertia_agent",
            Generator::RlPopulation { .. } => "rl_population",
            Generator::NfpPopulation { .. } => "nfp_population",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusShape {
    pub sessions_per_game: Vec<usize>,
    pub pairs: usize,
    pub periods: usize,
}

impl CorpusShape {
    /// 12 sessions for games 1-6, 6 for games 7-12, 4 pairs, 200 periods.
    pub fn standard() -> Self {
        let mut sessions_per_game = vec![12; 6];
        sessions_per_game.extend([6; 6]);
        Self { sessions_per_game, pairs: 4, periods: 200 }
    }

    pub fn uniform(games: usize, sessions: usize, pairs: usize, periods: usize) -> Self {
        Self { sessions_per_game: vec![sessions; games], pairs, periods }
    }
}

impl Default for CorpusShape {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub generator: Generator,
    pub shape: CorpusShape,
    pub games: Vec<Game2x2>,
}

impl SynthSpec {
    /// `shape` with freshly drawn games (see [`synthetic_games`]).
    pub fn with_random_games(generator: Generator, shape: CorpusShape, seed: u64) -> Self {
        let games = synthetic_games(shape.sessions_per_game.len(), seed::derive(seed, "games"));
        Self { generator, shape, games }
    }
}

/// `n` games with ids "1".."n", each with a unique fully mixed equilibrium:
/// the row player wants to match, the column player to mismatch, with random
/// integer payoffs in [0, 18].
pub fn synthetic_games(n: usize, seed: u64) -> Vec<Game2x2> {
    let mut rng = seed::rng(seed);
    let draw = |rng: &mut Rng| -> (f64, f64) {
        let lo = f64::from(rng.gen_range(0u8..=10));
        (lo, lo + f64::from(rng.gen_range(1u8..=8)))
    };
    (0..n)
        .map(|i| {
            let (r10, r00) = draw(&mut rng);
            let (r01, r11) = draw(&mut rng);
            let (c00, c01) = draw(&mut rng);
            let (c11, c10) = draw(&mut rng);
            Game2x2 {
                id: (i + 1).to_string(),
                payoff_row: [[r00, r01], [r10, r11]],
                payoff_col: [[c00, c01], [c10, c11]],
            }
        })
        .collect()
}

fn bernoulli0(rng: &mut Rng, p0: f64) -> Action {
    if rng.gen::<f64>() < p0 {
        Action::Zero
    } else {
        Action::One
    }
}

fn learner_pair<L: Learner>(learner: &L, game: &Game2x2, periods: usize, rng: &mut Rng) -> PlayerPair {
    let mut rs = learner.init(game, Role::Row);
    let mut cs = learner.init(game, Role::Column);
    let mut row = Vec::with_capacity(periods);
    let mut col = Vec::with_capacity(periods);
    for _ in 0..periods {
        let a = bernoulli0(rng, learner.predict(&rs).p0());
        let b = bernoulli0(rng, learner.predict(&cs).p0());
        rs = learner.update(&rs, &StepRecord::new(game, Role::Row, a, b));
        cs = learner.update(&cs, &StepRecord::new(game, Role::Column, b, a));
        row.push(a);
        col.push(b);
    }
    PlayerPair { row, col }
}

fn single_player(gen: &Generator, periods: usize, rng: &mut Rng) -> Vec<Action> {
    match gen {
        Generator::Iid { p } => (0..periods).map(|_| bernoulli0(rng, *p)).collect(),
        Generator::Alternator { period } => (0..periods)
            .map(|t| if (t / period) % 2 == 0 { Action::Zero } else { Action::One })
            .collect(),
        Generator::InertiaAgent { stay_prob } => {
            let mut out = Vec::with_capacity(periods);
            let mut a = bernoulli0(rng, 0.5);
            for t in 0..periods {
                if t > 0 && rng.gen::<f64>() >= *stay_prob {
                    a = a.flip();
                }
                out.push(a);
            }
            out
        }
        Generator::RlPopulation { .. } | Generator::NfpPopulation { .. } => unreachable!("population generators couple players"),
    }
}

/// Draws a corpus from `spec`; identical for identical `(spec, seed)`.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<Vec<Session>> {
    spec.generator.validate()?;
    if spec.games.len() != spec.shape.sessions_per_game.len() {
        return Err(Error::Config(format!(
            "{} games but sessions listed for {}",
            spec.games.len(),
            spec.shape.sessions_per_game.len()
        )));
    }
    let mut rng = seed::rng(seed);
    let t = spec.shape.periods;
    let mut sessions = Vec::new();
    for (game, &count) in spec.games.iter().zip(&spec.shape.sessions_per_game) {
        for s in 0..count {
            let pairs = (0..spec.shape.pairs)
                .map(|_| match &spec.generator {
                    Generator::RlPopulation { params } => learner_pair(params, game, t, &mut rng),
                    Generator::NfpPopulation { params } => learner_pair(params, game, t, &mut rng),
                    g => {
                        let row = single_player(g, t, &mut rng);
                        let col = single_player(g, t, &mut rng);
                        PlayerPair { row, col }
                    }
                })
                .collect();
            sessions.push(Session { game_id: game.id.clone(), session_id: (s + 1).to_string(), pairs, periods: t });
        }
    }
    Ok(sessions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::nash_mixed;

    fn spec(generator: Generator) -> SynthSpec {
        SynthSpec::with_random_games(generator, CorpusShape::standard(), 1)
    }

    #[test]
    fn standard_shape_has_108_sessions() {
        let s = synth_generate(&spec(Generator::Iid { p: 0.5 }), 5).unwrap();
        assert_eq!(s.len(), 108);
        assert!(s.iter().all(|x| x.pairs.len() == 4 && x.periods == 200));
    }

    #[test]
    fn iid_frequency_within_three_sigma() {
        let s = synth_generate(&spec(Generator::Iid { p: 0.5 }), 9).unwrap();
        let n: usize = s.iter().map(|x| x.pairs.len() * x.periods * 2).sum();
        let zeros: usize = s
            .iter()
            .flat_map(|x| &x.pairs)
            .flat_map(|p| p.row.iter().chain(&p.col))
            .filter(|&&a| a == Action::Zero)
            .count();
        let sigma = (0.25 / n as f64).sqrt();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn alternator_row_sequence() {
        let s = synth_generate(&spec(Generator::Alternator { period: 1 }), 0).unwrap();
        let row = &s[0].pairs[0].row;
        for (t, a) in row.iter().enumerate() {
            assert_eq!(a.index(), t % 2);
        }
        let s = synth_generate(&spec(Generator::Alternator { period: 3 }), 0).unwrap();
        assert_eq!(s[0].pairs[0].row[..7].iter().map(|a| a.index()).collect::<Vec<_>>(), vec![0, 0, 0, 1, 1, 1, 0]);
    }

    #[test]
    fn inertia_repeat_rate() {
        let shape = CorpusShape::uniform(1, 1, 1, 10_001);
        let sp = SynthSpec::with_random_games(Generator::InertiaAgent { stay_prob: 0.9 }, shape, 2);
        let s = synth_generate(&sp, 4).unwrap();
        let row = &s[0].pairs[0].row;
        let repeats = row.windows(2).filter(|w| w[0] == w[1]).count();
        let rate = repeats as f64 / (row.len() - 1) as f64;
        assert!((rate - 0.9).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn generation_is_reproducible() {
        for g in [
            Generator::Iid { p: 0.7 },
            Generator::InertiaAgent { stay_prob: 0.8 },
            Generator::RlPopulation { params: RlParams { initial_strength: 1.0, forgetting: 0.05, experimentation: 0.1 } },
            Generator::NfpPopulation { params: NfpParams { recency: 0.9, precision: 1.0 } },
        ] {
            let sp = spec(g);
            assert_eq!(synth_generate(&sp, 11).unwrap(), synth_generate(&sp, 11).unwrap());
            assert_ne!(synth_generate(&sp, 11).unwrap(), synth_generate(&sp, 12).unwrap());
        }
    }

    #[test]
    fn unknown_generator_is_config_error() {
        let err = toml::from_str::<Generator>("generator = \"markov\"\np = 0.5\n").unwrap_err();
        assert!(err.to_string().contains("markov"));
        assert!(matches!(Generator::Iid { p: 1.5 }.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn synthetic_games_have_interior_nash() {
        for g in synthetic_games(50, 3) {
            let eq = nash_mixed(&g).unwrap();
            assert!(eq.row.p0() > 0.0 && eq.row.p0() < 1.0);
            assert!(eq.col.p0() > 0.0 && eq.col.p0() < 1.0);
        }
    }
}

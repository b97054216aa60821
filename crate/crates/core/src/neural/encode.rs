use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::PredictionSample;
use crate::error::{Error, Result};
use crate::game::{Action, Game2x2, Role};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingMode {
    ActionOnly,
    EconAware,
}

impl EncodingMode {
    pub const BOTH: [EncodingMode; 2] = [EncodingMode::ActionOnly, EncodingMode::EconAware];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "action_only" => Ok(Self::ActionOnly),
            "econ_aware" => Ok(Self::EconAware),
            other => Err(Error::Config(format!("unknown encoding mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for EncodingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ActionOnly => "action_only",
            Self::EconAware => "econ_aware",
        })
    }
}

/// Channel-major layout `[channel][step]`, oldest step first, followed by
/// the payoff appendix in econ-aware mode.
///
/// Channels: own action, opponent action, then (econ-aware only) own
/// obtained, own forgone, opponent obtained, opponent forgone payoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureEncoding {
    pub mode: EncodingMode,
    pub k: usize,
}

pub const PAD_ACTION: f64 = 0.5;
pub const APPENDIX_LEN: usize = 8;

impl FeatureEncoding {
    pub fn new(mode: EncodingMode, k: usize) -> Self {
        Self { mode, k }
    }

    pub fn channels(&self) -> usize {
        match self.mode {
            EncodingMode::ActionOnly => 2,
            EncodingMode::EconAware => 6,
        }
    }

    pub fn appendix(&self) -> usize {
        match self.mode {
            EncodingMode::ActionOnly => 0,
            EncodingMode::EconAware => APPENDIX_LEN,
        }
    }

    pub fn dim(&self) -> usize {
        self.channels() * self.k + self.appendix()
    }

    /// Writes the features of `sample` into `out` (length [`Self::dim`]).
    pub fn encode_into(&self, sample: &PredictionSample, game: &Game2x2, out: &mut [f64]) -> Result<()> {
        let k = self.k;
        if sample.history.len() != k {
            return Err(Error::Contract(format!("history has {} steps, encoding expects {k}", sample.history.len())));
        }
        if out.len() != self.dim() {
            return Err(Error::Contract(format!("output buffer has {} slots, need {}", out.len(), self.dim())));
        }
        let scale = match game.max_abs_payoff() {
            m if m > 0.0 => 1.0 / m,
            _ => 1.0,
        };
        for (t, step) in sample.history.iter().enumerate() {
            match step {
                Some(r) => {
                    out[t] = r.own.as_f64();
                    out[k + t] = r.opp.as_f64();
                    if self.mode == EncodingMode::EconAware {
                        out[2 * k + t] = r.own_payoff * scale;
                        out[3 * k + t] = r.own_forgone * scale;
                        out[4 * k + t] = r.opp_payoff * scale;
                        out[5 * k + t] = r.opp_forgone * scale;
                    }
                }
                None => {
                    out[t] = PAD_ACTION;
                    out[k + t] = PAD_ACTION;
                    if self.mode == EncodingMode::EconAware {
                        for c in 2..6 {
                            out[c * k + t] = 0.0;
                        }
                    }
                }
            }
        }
        if self.mode == EncodingMode::EconAware {
            let base = 6 * k;
            for (m, role) in [sample.role, sample.role.opponent()].into_iter().enumerate() {
                let mat = game.own_matrix(role);
                for a in 0..2 {
                    for b in 0..2 {
                        out[base + m * 4 + a * 2 + b] = mat[a][b] * scale;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn encode(&self, sample: &PredictionSample, game: &Game2x2) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.encode_into(sample, game, &mut out)?;
        Ok(out)
    }
}

/// Encoded samples in row-major `[sample][feature]` order.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedSet {
    pub dim: usize,
    pub features: Vec<f64>,
    pub targets: Vec<Action>,
    /// Source sequence of each sample (game, session, pair, role); validation
    /// splits never cut through a sequence.
    pub groups: Vec<u32>,
}

impl EncodedSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn subset(&self, idx: &[usize]) -> EncodedSet {
        let mut features = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            features.extend_from_slice(self.row(i));
        }
        EncodedSet {
            dim: self.dim,
            features,
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            groups: idx.iter().map(|&i| self.groups[i]).collect(),
        }
    }
}

/// Encodes `samples`, looking each one's game up by id in `games`.
pub fn encode_samples<'a, I>(samples: I, games: &[Game2x2], enc: FeatureEncoding) -> Result<EncodedSet>
where
    I: IntoIterator<Item = &'a PredictionSample>,
{
    let by_id: HashMap<&str, &Game2x2> = games.iter().map(|g| (g.id.as_str(), g)).collect();
    let mut group_ids: HashMap<(&str, &str, usize, Role), u32> = HashMap::new();
    let dim = enc.dim();
    let mut set = EncodedSet { dim, features: Vec::new(), targets: Vec::new(), groups: Vec::new() };
    for s in samples {
        let game = by_id
            .get(s.game_id.as_str())
            .ok_or_else(|| Error::Validation(format!("sample refers to unknown game {}", s.game_id)))?;
        let start = set.features.len();
        set.features.resize(start + dim, 0.0);
        enc.encode_into(s, game, &mut set.features[start..])?;
        set.targets.push(s.target);
        let next = group_ids.len() as u32;
        let key = (s.game_id.as_str(), s.session_id.as_str(), s.pair, s.role);
        set.groups.push(*group_ids.entry(key).or_insert(next));
    }
    Ok(set)
}

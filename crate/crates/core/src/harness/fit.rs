//! Grid search for the parametric predictors, and per-session predictions
//! shared by every non-neural model.
//!
//! Fitting is driven by per-session loss tables: the training cross-entropy of
//! a grid point on a split is the sum of its losses on the split's training
//! sessions, so each table is computed once per corpus.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{predictable_periods, Session};
use crate::equilibrium::{self, Concept, ConceptParams, EquilibriumProfile};
use crate::error::{Error, Result};
use crate::game::{Action, Game2x2, MixedStrategy, Role};
use crate::learners::{InertiaParams, Learner, MostFrequentParams, NfpParams, RlParams};
use crate::metrics::{step_loss, EconValue, MetricSums};

use super::roster::ModelKind;

/// Forecasts for one session: `[pair][target - first target][row, column]`.
pub type SessionPreds = Vec<Vec<[MixedStrategy; 2]>>;

/// `0` followed by 49 log-spaced points in `[0.1, 10]`.
pub fn qre_lambdas() -> Vec<f64> {
    let mut v = vec![0.0];
    v.extend((0..49).map(|i| 10f64.powf(-1.0 + 2.0 * f64::from(i) / 48.0)));
    v
}

pub fn sample_sizes() -> Vec<u32> {
    (1..=20).collect()
}

/// `lo, lo + step, ..., hi` built from integer hundredths.
fn hundredths(lo: u32, hi: u32, step: u32) -> Vec<f64> {
    (lo..=hi).step_by(step as usize).map(|c| f64::from(c) / 100.0).collect()
}

pub fn rl_grid() -> Vec<RlParams> {
    let mut out = Vec::new();
    for s in [0.1, 1.0, 10.0] {
        for phi in hundredths(0, 50, 5) {
            for eps in hundredths(0, 30, 5) {
                out.push(RlParams { initial_strength: s, forgetting: phi, experimentation: eps });
            }
        }
    }
    out
}

pub fn nfp_grid() -> Vec<NfpParams> {
    let precisions: Vec<f64> = (0..30).map(|i| 10f64.powf(-2.0 + 4.0 * f64::from(i) / 29.0)).collect();
    let mut out = Vec::new();
    for rho in hundredths(80, 100, 2) {
        for &lambda in &precisions {
            out.push(NfpParams { recency: rho, precision: lambda });
        }
    }
    out
}

pub fn stay_probs() -> Vec<f64> {
    hundredths(55, 95, 5)
}

pub fn mf_grid() -> Vec<MostFrequentParams> {
    let mut out = Vec::new();
    for window in 2..=20 {
        for p in stay_probs() {
            out.push(MostFrequentParams { window, confidence: p });
        }
    }
    out
}

/// A learning model with concrete parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DynamicModel {
    Rl(RlParams),
    Nfp(NfpParams),
    Inertia(InertiaParams),
    Mf(MostFrequentParams),
}

impl DynamicModel {
    pub fn grid(kind: ModelKind) -> Option<Vec<DynamicModel>> {
        Some(match kind {
            ModelKind::Rl => rl_grid().into_iter().map(DynamicModel::Rl).collect(),
            ModelKind::Nfp => nfp_grid().into_iter().map(DynamicModel::Nfp).collect(),
            ModelKind::Inertia => stay_probs().into_iter().map(|p| DynamicModel::Inertia(InertiaParams { stay_prob: p })).collect(),
            ModelKind::Mf => mf_grid().into_iter().map(DynamicModel::Mf).collect(),
            _ => return None,
        })
    }

    pub fn predictions(&self, game: &Game2x2, session: &Session, trim: usize) -> SessionPreds {
        let targets = predictable_periods(session.periods, trim);
        session
            .pairs
            .iter()
            .map(|pair| {
                let seq = |role: Role| {
                    let recs = pair.records(game, role);
                    match self {
                        DynamicModel::Rl(p) => p.predict_sequence(game, role, &recs),
                        DynamicModel::Nfp(p) => p.predict_sequence(game, role, &recs),
                        DynamicModel::Inertia(p) => p.predict_sequence(game, role, &recs),
                        DynamicModel::Mf(p) => p.predict_sequence(game, role, &recs),
                    }
                };
                let (row, col) = (seq(Role::Row), seq(Role::Column));
                targets.clone().map(|t| [row[t], col[t]]).collect()
            })
            .collect()
    }
}

/// Constant forecasts for every target of `session`.
pub fn static_predictions(session: &Session, trim: usize, row: MixedStrategy, col: MixedStrategy) -> SessionPreds {
    let n = predictable_periods(session.periods, trim).len();
    vec![vec![[row, col]; n]; session.pairs.len()]
}

/// Certain forecasts of the realized actions.
pub fn oracle_predictions(session: &Session, trim: usize) -> SessionPreds {
    session
        .pairs
        .iter()
        .map(|pair| {
            predictable_periods(session.periods, trim)
                .map(|t| [MixedStrategy::pure(pair.row[t]), MixedStrategy::pure(pair.col[t])])
                .collect()
        })
        .collect()
}

/// All three metrics of `preds` on `session`. Each player's economic value
/// uses the forecast for the opponent's action in the same period.
pub fn score(game: &Game2x2, session: &Session, trim: usize, preds: &SessionPreds) -> Result<MetricSums> {
    let targets = predictable_periods(session.periods, trim);
    if preds.len() != session.pairs.len() {
        return Err(Error::Contract(format!("{} pair forecasts for {} pairs", preds.len(), session.pairs.len())));
    }
    let mut sums = MetricSums::default();
    for (pair, pp) in session.pairs.iter().zip(preds) {
        if pp.len() != targets.len() {
            return Err(Error::Contract(format!("{} forecasts for {} targets", pp.len(), targets.len())));
        }
        for (t, &[row, col]) in targets.clone().zip(pp) {
            let (a, b) = (pair.row[t], pair.col[t]);
            sums.record(a, row);
            sums.record(b, col);
            sums.econ += EconValue::step(game, Role::Row, col, b);
            sums.econ += EconValue::step(game, Role::Column, row, a);
        }
    }
    Ok(sums)
}

/// Sum of step losses of `preds` on `session`.
pub fn session_loss(session: &Session, trim: usize, preds: &SessionPreds) -> f64 {
    let targets = predictable_periods(session.periods, trim);
    let mut total = 0.0;
    for (pair, pp) in session.pairs.iter().zip(preds) {
        for (t, &[row, col]) in targets.clone().zip(pp) {
            total += step_loss(pair.row[t], row) + step_loss(pair.col[t], col);
        }
    }
    total
}

/// Index of the smallest finite total over `sessions`, first on ties.
pub fn argmin_grid(table: &[Vec<f64>], sessions: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in table.iter().enumerate() {
        let total: f64 = sessions.iter().map(|&s| row[s]).sum();
        if total.is_finite() && best.is_none_or(|(_, b)| total < b) {
            best = Some((i, total));
        }
    }
    best.map(|(i, _)| i)
}

/// `[grid point][session]` training losses of a learning model family.
pub fn dynamic_loss_table(grid: &[DynamicModel], games: &[&Game2x2], sessions: &[Session], trim: usize) -> Vec<Vec<f64>> {
    grid.par_iter()
        .map(|m| {
            sessions
                .iter()
                .zip(games)
                .map(|(s, g)| session_loss(s, trim, &m.predictions(g, s, trim)))
                .collect()
        })
        .collect()
}

/// Target counts of one session: `[role][action]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ActionCounts(pub [[usize; 2]; 2]);

impl ActionCounts {
    pub fn of(session: &Session, trim: usize) -> Self {
        let mut c = [[0usize; 2]; 2];
        for pair in &session.pairs {
            for t in predictable_periods(session.periods, trim) {
                c[0][pair.row[t].index()] += 1;
                c[1][pair.col[t].index()] += 1;
            }
        }
        Self(c)
    }

    pub fn add(&mut self, other: &ActionCounts) {
        for r in 0..2 {
            for a in 0..2 {
                self.0[r][a] += other.0[r][a];
            }
        }
    }

    /// Summed step loss of a constant forecast.
    pub fn loss(&self, row: MixedStrategy, col: MixedStrategy) -> f64 {
        let mut total = 0.0;
        for (r, p) in [row, col].into_iter().enumerate() {
            for a in Action::BOTH {
                total += self.0[r][a.index()] as f64 * step_loss(a, p);
            }
        }
        total
    }

    /// Empirical frequency of action 0 per role.
    pub fn frequencies(&self) -> Result<(MixedStrategy, MixedStrategy)> {
        let f = |r: usize| {
            let n = self.0[r][0] + self.0[r][1];
            if n == 0 {
                Err(Error::Validation("no targets to count".into()))
            } else {
                MixedStrategy::new(self.0[r][0] as f64 / n as f64)
            }
        };
        Ok((f(0)?, f(1)?))
    }
}

/// Parameter grid of an equilibrium concept; a single entry when it has none.
pub fn concept_grid(concept: Concept) -> Vec<ConceptParams> {
    match concept {
        Concept::Qre => qre_lambdas().into_iter().map(ConceptParams::lambda).collect(),
        Concept::Pse | Concept::Ase => sample_sizes().into_iter().map(ConceptParams::sample_size).collect(),
        _ => vec![ConceptParams::default()],
    }
}

/// Fixed points of one concept for every grid point and game:
/// `[grid point][game]`.
pub struct EquilibriumTable {
    pub concept: Concept,
    pub grid: Vec<ConceptParams>,
    pub solutions: Vec<Vec<std::result::Result<Vec<EquilibriumProfile>, String>>>,
}

impl EquilibriumTable {
    pub fn build(concept: Concept, games: &[Game2x2]) -> Self {
        let grid = concept_grid(concept);
        let solutions = grid
            .par_iter()
            .map(|&p| {
                games
                    .iter()
                    .map(|g| equilibrium::solve(g, concept, p).map_err(|e| e.to_string()))
                    .collect()
            })
            .collect();
        Self { concept, grid, solutions }
    }

    /// Grid point minimizing training loss. `train` lists `(game index,
    /// pooled counts of that game's training sessions)`; within each game the
    /// best-fitting fixed point is used.
    pub fn fit(&self, train: &[(usize, ActionCounts)]) -> Result<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, per_game) in self.solutions.iter().enumerate() {
            let mut total = 0.0;
            for (g, counts) in train {
                let loss = match &per_game[*g] {
                    Ok(profiles) => profiles.iter().map(|p| counts.loss(p.row, p.col)).fold(f64::INFINITY, f64::min),
                    Err(_) => f64::INFINITY,
                };
                total += loss;
            }
            if total.is_finite() && best.is_none_or(|(_, b)| total < b) {
                best = Some((i, total));
            }
        }
        best.map(|(i, _)| i).ok_or_else(|| Error::Inapplicable {
            concept: self.concept.to_string(),
            reason: "no grid point has an equilibrium on every training game".into(),
        })
    }

    /// Fixed point used for a held-out game: the one closest to uniform play.
    pub fn select(&self, grid_index: usize, game_index: usize) -> Result<EquilibriumProfile> {
        match &self.solutions[grid_index][game_index] {
            Ok(profiles) => closest_to_uniform(profiles).ok_or_else(|| Error::Inapplicable {
                concept: self.concept.to_string(),
                reason: "no fixed point found".into(),
            }),
            Err(e) => Err(Error::Inapplicable { concept: self.concept.to_string(), reason: e.clone() }),
        }
    }
}

pub fn closest_to_uniform(profiles: &[EquilibriumProfile]) -> Option<EquilibriumProfile> {
    let dist = |p: &EquilibriumProfile| (p.row.p0() - 0.5).powi(2) + (p.col.p0() - 0.5).powi(2);
    let mut best: Option<&EquilibriumProfile> = None;
    for p in profiles {
        if best.is_none_or(|b| dist(p) < dist(b)) {
            best = Some(p);
        }
    }
    best.copied()
}

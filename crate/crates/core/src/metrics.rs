//! Cross-entropy, accuracy and economic value.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, Game2x2, MixedStrategy, Role};

/// Clipping applied to probabilities before taking logarithms.
pub const LOG_CLIP: f64 = 1e-7;

/// Loss of one prediction: negative log of the (clipped) probability given to
/// the realized action.
#[inline]
pub fn step_loss(y: Action, yhat: MixedStrategy) -> f64 {
    -yhat.prob(y).clamp(LOG_CLIP, 1.0 - LOG_CLIP).ln()
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Contract(format!("length mismatch: {a} labels vs {b} predictions")));
    }
    if a == 0 {
        return Err(Error::Contract("metrics need at least one step".into()));
    }
    Ok(())
}

/// Mean cross-entropy of `yhat` against realized actions `y`.
pub fn cross_entropy(y: &[Action], yhat: &[MixedStrategy]) -> Result<f64> {
    check_lengths(y.len(), yhat.len())?;
    let total: f64 = y.iter().zip(yhat).map(|(&a, &p)| step_loss(a, p)).sum();
    Ok(total / y.len() as f64)
}

/// Percentage of steps where the most likely action was the one played.
pub fn accuracy(y: &[Action], yhat: &[MixedStrategy]) -> Result<f64> {
    check_lengths(y.len(), yhat.len())?;
    let hits = y.iter().zip(yhat).filter(|(&a, p)| p.harden() == a).count();
    Ok(100.0 * hits as f64 / y.len() as f64)
}

/// Utility of best-responding to predictions, next to the hindsight optimum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EconValue {
    pub gained: f64,
    pub optimal: f64,
}

impl EconValue {
    /// `100 * gained / optimal`.
    pub fn ratio(self) -> Result<f64> {
        if self.optimal == 0.0 {
            return Err(Error::DegenerateValue);
        }
        Ok(100.0 * self.gained / self.optimal)
    }

    /// One decision: `role` best-responds to `opp_prediction` and the opponent
    /// then plays `opp_actual`.
    #[inline]
    pub fn step(game: &Game2x2, role: Role, opp_prediction: MixedStrategy, opp_actual: Action) -> Self {
        let choice = game.best_response(role, opp_prediction);
        Self {
            gained: game.payoff(role, choice, opp_actual),
            optimal: game.best_payoff_against(role, opp_actual),
        }
    }
}

impl AddAssign for EconValue {
    fn add_assign(&mut self, rhs: Self) {
        self.gained += rhs.gained;
        self.optimal += rhs.optimal;
    }
}

/// Economic value of using `yhat_opp` (predictions of the opponent's action)
/// as an oracle for `role`.
pub fn economic_value(
    game: &Game2x2,
    role: Role,
    yhat_opp: &[MixedStrategy],
    opp_actual: &[Action],
) -> Result<EconValue> {
    check_lengths(opp_actual.len(), yhat_opp.len())?;
    let mut total = EconValue::default();
    for (&p, &a) in yhat_opp.iter().zip(opp_actual) {
        total += EconValue::step(game, role, p, a);
    }
    Ok(total)
}

/// Running sums from which all three metrics are derived.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSums {
    pub loss: f64,
    pub hits: usize,
    pub steps: usize,
    pub econ: EconValue,
}

impl MetricSums {
    pub fn record(&mut self, y: Action, yhat: MixedStrategy) {
        self.loss += step_loss(y, yhat);
        self.hits += usize::from(yhat.harden() == y);
        self.steps += 1;
    }

    pub fn mean_loss(&self) -> f64 {
        self.loss / self.steps as f64
    }

    pub fn accuracy(&self) -> f64 {
        100.0 * self.hits as f64 / self.steps as f64
    }
}

impl AddAssign for MetricSums {
    fn add_assign(&mut self, rhs: Self) {
        self.loss += rhs.loss;
        self.hits += rhs.hits;
        self.steps += rhs.steps;
        self.econ += rhs.econ;
    }
}

//! Dynamic predictors that revise their forecast after every period:
//! Roth–Erev reinforcement, normalized fictitious play, inertia and
//! most-frequent.
//!
//! Each learner is a [`Learner`]: an immutable parameter record plus a value
//! state. Predictions are always emitted before the period's outcome is
//! folded in, so feeding period `t`'s record returns the forecast for `t`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, Game2x2, MixedStrategy, Role, StepRecord};

/// Lower bound on reinforcement propensities.
pub const PROPENSITY_FLOOR: f64 = 1e-9;

pub trait Learner {
    type State: Clone + PartialEq + std::fmt::Debug;

    fn init(&self, game: &Game2x2, role: Role) -> Self::State;

    fn predict(&self, state: &Self::State) -> MixedStrategy;

    fn update(&self, state: &Self::State, observed: &StepRecord) -> Self::State;

    fn predict_update(&self, state: &Self::State, observed: &StepRecord) -> (MixedStrategy, Self::State) {
        (self.predict(state), self.update(state, observed))
    }

    /// Forecast for every period of `records`, each made before that period.
    fn predict_sequence(&self, game: &Game2x2, role: Role, records: &[StepRecord]) -> Vec<MixedStrategy> {
        let mut state = self.init(game, role);
        records
            .iter()
            .map(|r| {
                let (p, next) = self.predict_update(&state, r);
                state = next;
                p
            })
            .collect()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// ---------------------------------------------------------------------------
// Reinforcement learning

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlParams {
    pub initial_strength: f64,
    pub forgetting: f64,
    pub experimentation: f64,
}

impl RlParams {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_strength > 0.0)
            || !(0.0..=1.0).contains(&self.forgetting)
            || !(0.0..1.0).contains(&self.experimentation)
        {
            return Err(Error::Config(format!("invalid reinforcement parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RlState {
    pub propensities: [f64; 2],
    /// Subtracted from realized payoffs so reinforcements are nonnegative.
    pub reference: f64,
}

impl RlState {
    pub fn new(params: &RlParams, reference: f64) -> Self {
        Self { propensities: [params.initial_strength; 2], reference }
    }
}

pub fn rl_predict_update(state: &RlState, params: &RlParams, observed: &StepRecord) -> (MixedStrategy, RlState) {
    (params.predict(state), params.update(state, observed))
}

impl Learner for RlParams {
    type State = RlState;

    fn init(&self, game: &Game2x2, _role: Role) -> RlState {
        RlState::new(self, game.min_payoff())
    }

    fn predict(&self, state: &RlState) -> MixedStrategy {
        let [q0, q1] = state.propensities;
        MixedStrategy::saturating(q0 / (q0 + q1))
    }

    fn update(&self, state: &RlState, observed: &StepRecord) -> RlState {
        let r = (observed.own_payoff - state.reference).max(0.0);
        let mut q = state.propensities;
        for a in Action::BOTH {
            let share = if a == observed.own { 1.0 - self.experimentation } else { self.experimentation };
            q[a.index()] = ((1.0 - self.forgetting) * q[a.index()] + share * r).max(PROPENSITY_FLOOR);
        }
        RlState { propensities: q, reference: state.reference }
    }
}

// ---------------------------------------------------------------------------
// Normalized fictitious play

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NfpParams {
    pub recency: f64,
    pub precision: f64,
}

impl NfpParams {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.recency > 0.0 && self.recency <= 1.0) || !(self.precision >= 0.0) {
            return Err(Error::Config(format!("invalid fictitious-play parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NfpState {
    /// Discounted counts of the opponent's actions.
    pub beliefs: [f64; 2],
    /// The player's payoffs, `[own][opp]`.
    pub payoffs: [[f64; 2]; 2],
}

pub fn nfp_predict_update(state: &NfpState, params: &NfpParams, observed: &StepRecord) -> (MixedStrategy, NfpState) {
    (params.predict(state), params.update(state, observed))
}

impl Learner for NfpParams {
    type State = NfpState;

    fn init(&self, game: &Game2x2, role: Role) -> NfpState {
        NfpState { beliefs: [1.0, 1.0], payoffs: game.own_matrix(role) }
    }

    fn predict(&self, state: &NfpState) -> MixedStrategy {
        let [b0, b1] = state.beliefs;
        let q0 = b0 / (b0 + b1);
        let m = &state.payoffs;
        let e0 = q0 * m[0][0] + (1.0 - q0) * m[0][1];
        let e1 = q0 * m[1][0] + (1.0 - q0) * m[1][1];
        MixedStrategy::saturating(logistic(self.precision * (e0 - e1)))
    }

    fn update(&self, state: &NfpState, observed: &StepRecord) -> NfpState {
        let mut b = state.beliefs.map(|x| self.recency * x);
        b[observed.opp.index()] += 1.0;
        NfpState { beliefs: b, payoffs: state.payoffs }
    }
}

// ---------------------------------------------------------------------------
// Inertia and most-frequent

/// Probability `stay_prob` on repeating `last_action`.
pub fn inertia_predict(last_action: Action, stay_prob: f64) -> MixedStrategy {
    match last_action {
        Action::Zero => MixedStrategy::saturating(stay_prob),
        Action::One => MixedStrategy::saturating(1.0 - stay_prob),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InertiaParams {
    pub stay_prob: f64,
}

impl Learner for InertiaParams {
    type State = Option<Action>;

    fn init(&self, _game: &Game2x2, _role: Role) -> Option<Action> {
        None
    }

    fn predict(&self, state: &Option<Action>) -> MixedStrategy {
        state.map_or(MixedStrategy::UNIFORM, |a| inertia_predict(a, self.stay_prob))
    }

    fn update(&self, _state: &Option<Action>, observed: &StepRecord) -> Option<Action> {
        Some(observed.own)
    }
}

/// Probability `confidence` on the modal action of `window`; exact ties and an
/// empty window give the uniform strategy. Only the last `k` entries count.
pub fn mf_predict(window: &[Action], k: usize, confidence: f64) -> MixedStrategy {
    let recent = &window[window.len().saturating_sub(k)..];
    let ones = recent.iter().filter(|&&a| a == Action::One).count();
    let zeros = recent.len() - ones;
    match zeros.cmp(&ones) {
        std::cmp::Ordering::Greater => MixedStrategy::saturating(confidence),
        std::cmp::Ordering::Less => MixedStrategy::saturating(1.0 - confidence),
        std::cmp::Ordering::Equal => MixedStrategy::UNIFORM,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MostFrequentParams {
    pub window: usize,
    pub confidence: f64,
}

impl Learner for MostFrequentParams {
    type State = VecDeque<Action>;

    fn init(&self, _game: &Game2x2, _role: Role) -> VecDeque<Action> {
        VecDeque::with_capacity(self.window)
    }

    fn predict(&self, state: &VecDeque<Action>) -> MixedStrategy {
        let (a, b) = state.as_slices();
        let ones = a.iter().chain(b).filter(|&&x| x == Action::One).count();
        let zeros = state.len() - ones;
        match zeros.cmp(&ones) {
            std::cmp::Ordering::Greater => MixedStrategy::saturating(self.confidence),
            std::cmp::Ordering::Less => MixedStrategy::saturating(1.0 - self.confidence),
            std::cmp::Ordering::Equal => MixedStrategy::UNIFORM,
        }
    }

    fn update(&self, state: &VecDeque<Action>, observed: &StepRecord) -> VecDeque<Action> {
        let mut w = state.clone();
        if w.len() == self.window {
            w.pop_front();
        }
        w.push_back(observed.own);
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rec(game: &Game2x2, role: Role, own: u8, opp: u8) -> StepRecord {
        StepRecord::new(game, role, Action::from_index(own).unwrap(), Action::from_index(opp).unwrap())
    }

    #[test]
    fn rl_fresh_state_is_uniform() {
        let p = RlParams { initial_strength: 1.0, forgetting: 0.1, experimentation: 0.1 };
        assert_eq!(p.predict(&RlState::new(&p, 0.0)).p0(), 0.5);
    }

    #[test]
    fn rl_single_update() {
        // payoff 2 above the reference reinforces action 0: q = (3, 1)
        let game = Game2x2::new("g", [[2.0, 0.0], [0.0, 0.0]], [[0.0; 2]; 2]).unwrap();
        let p = RlParams { initial_strength: 1.0, forgetting: 0.0, experimentation: 0.0 };
        let s0 = p.init(&game, Role::Row);
        assert_eq!(s0.reference, 0.0);
        let (pred, s1) = rl_predict_update(&s0, &p, &rec(&game, Role::Row, 0, 0));
        assert_eq!(pred.p0(), 0.5);
        assert_eq!(s1.propensities, [3.0, 1.0]);
        assert_eq!(p.predict(&s1).p0(), 0.75);
    }

    #[test]
    fn rl_full_forgetting_tracks_last_payoff() {
        let game = Game2x2::new("g", [[2.0, 1.0], [3.0, 1.0]], [[0.0; 2]; 2]).unwrap();
        let p = RlParams { initial_strength: 1.0, forgetting: 1.0, experimentation: 0.0 };
        let s = p.update(&p.init(&game, Role::Row), &rec(&game, Role::Row, 1, 0));
        assert_eq!(s.propensities, [PROPENSITY_FLOOR, 3.0]);
        let s = p.update(&s, &rec(&game, Role::Row, 0, 0));
        assert_eq!(s.propensities, [2.0, PROPENSITY_FLOOR]);
    }

    #[test]
    fn nfp_examples() {
        let mp = Game2x2::matching_pennies();
        let p = NfpParams { recency: 1.0, precision: 0.0 };
        let s = p.init(&mp, Role::Row);
        assert_eq!(p.predict(&s).p0(), 0.5);

        // beliefs all on opponent action 0, large precision -> match with 0
        let sharp = NfpParams { recency: 1.0, precision: 50.0 };
        let s = NfpState { beliefs: [1e6, 0.0], payoffs: mp.own_matrix(Role::Row) };
        assert!(sharp.predict(&s).p0() > 1.0 - 1e-12);

        // counts (1,1) + [0,0,1] -> (3,2), q0 = 0.6
        let g = Game2x2::new("g", [[2.0, 0.0], [0.0, 1.0]], [[0.0; 2]; 2]).unwrap();
        let p = NfpParams { recency: 1.0, precision: 1.5 };
        let mut s = p.init(&g, Role::Row);
        for opp in [0, 0, 1] {
            s = p.update(&s, &rec(&g, Role::Row, 0, opp));
        }
        assert_eq!(s.beliefs, [3.0, 2.0]);
        // E[u(0)] = 0.6*2 = 1.2, E[u(1)] = 0.4*1 = 0.4, gap 0.8
        let expected = 1.0 / (1.0 + (-1.5f64 * 0.8).exp());
        assert!((p.predict(&s).p0() - expected).abs() < 1e-15);
    }

    #[test]
    fn nfp_converges_to_best_response() {
        // against q0 = 0.3 the row player's gap is 0.3*2 - 0.7*1 < 0 -> action 1
        let g = Game2x2::new("g", [[2.0, 0.0], [0.0, 1.0]], [[0.0; 2]; 2]).unwrap();
        let p = NfpParams { recency: 1.0, precision: 1e3 };
        let mut rng = crate::seed::rng(3);
        let mut s = p.init(&g, Role::Row);
        for _ in 0..10_000 {
            let opp = if rng.gen::<f64>() < 0.3 { 0 } else { 1 };
            s = p.update(&s, &rec(&g, Role::Row, 0, opp));
        }
        assert!(p.predict(&s).p0() < 1e-6);
    }

    #[test]
    fn inertia_and_mf_examples() {
        assert_eq!(inertia_predict(Action::Zero, 0.9).p0(), 0.9);
        assert!((inertia_predict(Action::One, 0.9).p0() - 0.1).abs() < 1e-15);
        let z = Action::Zero;
        let o = Action::One;
        assert_eq!(mf_predict(&[z, z, o], 3, 0.8).p0(), 0.8);
        assert_eq!(mf_predict(&[z, o], 2, 0.8).p0(), 0.5);
        // only the last k count
        assert!((mf_predict(&[z, z, z, o, o], 2, 0.8).p0() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn mf_state_matches_window_function() {
        let g = Game2x2::matching_pennies();
        let p = MostFrequentParams { window: 4, confidence: 0.7 };
        let acts: Vec<u8> = vec![0, 1, 1, 0, 1, 1, 1, 0, 0, 0, 0];
        let recs: Vec<_> = acts.iter().map(|&a| rec(&g, Role::Row, a, 0)).collect();
        let preds = p.predict_sequence(&g, Role::Row, &recs);
        let own: Vec<Action> = recs.iter().map(|r| r.own).collect();
        for t in 1..own.len() {
            assert_eq!(preds[t], mf_predict(&own[..t], 4, 0.7));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn records() -> impl Strategy<Value = Vec<StepRecord>> {
            let g = Game2x2::new("g", [[3.0, -2.0], [0.0, 5.0]], [[-1.0, 4.0], [2.0, 0.0]]).unwrap();
            prop::collection::vec((0u8..2, 0u8..2), 0..60)
                .prop_map(move |v| v.into_iter().map(|(a, b)| rec(&g, Role::Row, a, b)).collect())
        }

        fn fold<L: Learner>(l: &L, s: L::State, recs: &[StepRecord]) -> L::State {
            recs.iter().fold(s, |s, r| l.update(&s, r))
        }

        proptest! {
            #[test]
            fn rl_propensities_stay_positive(
                recs in records(),
                s in 0.1f64..10.0, phi in 0.0f64..=1.0, eps in 0.0f64..0.99,
            ) {
                let p = RlParams { initial_strength: s, forgetting: phi, experimentation: eps };
                let g = Game2x2::new("g", [[3.0, -2.0], [0.0, 5.0]], [[-1.0, 4.0], [2.0, 0.0]]).unwrap();
                let mut st = p.init(&g, Role::Row);
                for r in &recs {
                    st = p.update(&st, r);
                    prop_assert!(st.propensities.iter().all(|&q| q > 0.0));
                    let pred = p.predict(&st).p0();
                    prop_assert!((0.0..=1.0).contains(&pred));
                }
            }

            #[test]
            fn fold_is_associative(recs in records(), cut in 0usize..60) {
                let g = Game2x2::new("g", [[3.0, -2.0], [0.0, 5.0]], [[-1.0, 4.0], [2.0, 0.0]]).unwrap();
                let cut = cut.min(recs.len());
                let (a, b) = recs.split_at(cut);
                let rl = RlParams { initial_strength: 1.0, forgetting: 0.1, experimentation: 0.05 };
                prop_assert_eq!(fold(&rl, rl.init(&g, Role::Row), &recs), fold(&rl, fold(&rl, rl.init(&g, Role::Row), a), b));
                let nfp = NfpParams { recency: 0.9, precision: 2.0 };
                prop_assert_eq!(fold(&nfp, nfp.init(&g, Role::Row), &recs), fold(&nfp, fold(&nfp, nfp.init(&g, Role::Row), a), b));
                let mf = MostFrequentParams { window: 5, confidence: 0.8 };
                prop_assert_eq!(fold(&mf, mf.init(&g, Role::Row), &recs), fold(&mf, fold(&mf, mf.init(&g, Role::Row), a), b));
            }
        }
    }
}

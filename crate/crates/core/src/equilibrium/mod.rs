//! Static predictors: each concept yields one stationary mixed strategy per
//! role for a game.
//!
//! * Nash: closed-form indifference for the fully mixed equilibrium.
//! * QRE: logit response `sigma(lambda * gap)` where `gap` is the expected
//!   payoff of action 0 minus that of action 1.
//! * ASE: best response to `n` sampled opponent actions, choice probability by
//!   exact binomial enumeration.
//! * PSE: `n` independent payoff draws per own action, the larger sum wins,
//!   enumerated over all `(n+1)^2` count outcomes.
//! * IBE: payoffs above the security level are halved, then the expected
//!   impulses toward each action balance.
//!
//! QRE, ASE, PSE and IBE return every distinct fixed point found.

mod fixed_point;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::PredictionSample;
use crate::error::{Error, Result};
use crate::game::{Action, Game2x2, MixedStrategy, Role};

pub use fixed_point::{FixedPoint, RESIDUAL_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Concept {
    Nash,
    Qre,
    Pse,
    Ase,
    Ibe,
    BestStatic,
    Random,
}

impl Concept {
    pub fn parse(name: &str) -> Result<Concept> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "nash" | "ne" => Concept::Nash,
            "qre" => Concept::Qre,
            "pse" => Concept::Pse,
            "ase" => Concept::Ase,
            "ibe" => Concept::Ibe,
            "best_static" => Concept::BestStatic,
            "random" => Concept::Random,
            other => return Err(Error::Config(format!("unknown equilibrium concept {other:?}"))),
        })
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Concept::Nash => "nash",
            Concept::Qre => "qre",
            Concept::Pse => "pse",
            Concept::Ase => "ase",
            Concept::Ibe => "ibe",
            Concept::BestStatic => "best_static",
            Concept::Random => "random",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConceptParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<u32>,
}

impl ConceptParams {
    pub fn lambda(lambda: f64) -> Self {
        Self { lambda: Some(lambda), sample_size: None }
    }

    pub fn sample_size(n: u32) -> Self {
        Self { lambda: None, sample_size: Some(n) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumProfile {
    pub row: MixedStrategy,
    pub col: MixedStrategy,
    pub concept: Concept,
    pub params: ConceptParams,
    pub residual: f64,
}

impl EquilibriumProfile {
    pub fn get(&self, role: Role) -> MixedStrategy {
        match role {
            Role::Row => self.row,
            Role::Column => self.col,
        }
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

fn opp(q: f64) -> MixedStrategy {
    MixedStrategy::saturating(q)
}

fn tie_tol(game: &Game2x2) -> f64 {
    1e-12 * (1.0 + game.max_abs_payoff())
}

/// Binomial probabilities of `0..=n` successes with success chance `q`.
pub fn binomial_pmf(n: u32, q: f64) -> Vec<f64> {
    let mut coef = 1.0f64;
    (0..=n)
        .map(|k| {
            if k > 0 {
                coef *= f64::from(n - k + 1) / f64::from(k);
            }
            coef * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32)
        })
        .collect()
}

/// Logit choice probability of action 0 against an opponent playing 0 with
/// probability `q`.
pub fn qre_response(game: &Game2x2, role: Role, lambda: f64, q: f64) -> f64 {
    logistic(lambda * game.payoff_gap(role, opp(q)))
}

/// Probability of choosing action 0 after best-responding to `n` sampled
/// opponent actions (exact ties split evenly).
pub fn ase_response(game: &Game2x2, role: Role, n: u32, q: f64) -> f64 {
    let tol = tie_tol(game);
    binomial_pmf(n, q)
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let gap = game.payoff_gap(role, opp(k as f64 / f64::from(n)));
            let share = if gap.abs() <= tol {
                0.5
            } else if gap > 0.0 {
                1.0
            } else {
                0.0
            };
            w * share
        })
        .sum()
}

/// Probability of choosing action 0 when each own action is scored by the sum
/// of `n` independent payoff draws (exact ties split evenly).
pub fn pse_response(game: &Game2x2, role: Role, n: u32, q: f64) -> f64 {
    let tol = tie_tol(game) * f64::from(n);
    let pmf = binomial_pmf(n, q);
    let nf = f64::from(n);
    let u = |a: Action, b: Action| game.payoff(role, a, b);
    let total = |a: Action, k: usize| k as f64 * u(a, Action::Zero) + (nf - k as f64) * u(a, Action::One);
    let mut p = 0.0;
    for (k0, &w0) in pmf.iter().enumerate() {
        let s0 = total(Action::Zero, k0);
        for (k1, &w1) in pmf.iter().enumerate() {
            let d = s0 - total(Action::One, k1);
            let share = if d.abs() <= tol {
                0.5
            } else if d > 0.0 {
                1.0
            } else {
                0.0
            };
            p += w0 * w1 * share;
        }
    }
    p
}

/// Expected impulses `(toward 1 while playing 0, toward 0 while playing 1)`
/// on security-level transformed payoffs.
pub fn ibe_impulses(game: &Game2x2, role: Role, q: f64) -> (f64, f64) {
    let m = game.own_matrix(role);
    let security = m.iter().map(|r| r[0].min(r[1])).fold(f64::NEG_INFINITY, f64::max);
    let t = |u: f64| if u <= security { u } else { security + 0.5 * (u - security) };
    let weights = [q, 1.0 - q];
    let mut up = 0.0;
    let mut down = 0.0;
    for (b, w) in weights.iter().enumerate() {
        let d = t(m[1][b]) - t(m[0][b]);
        up += w * d.max(0.0);
        down += w * (-d).max(0.0);
    }
    (up, down)
}

pub fn ibe_response(game: &Game2x2, role: Role, q: f64) -> f64 {
    let (up, down) = ibe_impulses(game, role, q);
    if up + down == 0.0 {
        0.5
    } else {
        down / (up + down)
    }
}

/// `role`'s response map for a parameterized concept.
pub fn response(game: &Game2x2, role: Role, concept: Concept, params: &ConceptParams, q: f64) -> Result<f64> {
    Ok(match concept {
        Concept::Qre => qre_response(game, role, require_lambda(params)?, q),
        Concept::Ase => ase_response(game, role, require_n(params)?, q),
        Concept::Pse => pse_response(game, role, require_n(params)?, q),
        Concept::Ibe => ibe_response(game, role, q),
        other => return Err(Error::Config(format!("{other} has no response map"))),
    })
}

fn require_lambda(params: &ConceptParams) -> Result<f64> {
    match params.lambda {
        Some(l) if l.is_finite() && l >= 0.0 => Ok(l),
        Some(l) => Err(Error::Config(format!("precision must be finite and nonnegative, got {l}"))),
        None => Err(Error::Config("qre needs a precision (lambda)".into())),
    }
}

fn require_n(params: &ConceptParams) -> Result<u32> {
    match params.sample_size {
        Some(n) if n >= 1 => Ok(n),
        _ => Err(Error::Config("sampling equilibria need a sample size n >= 1".into())),
    }
}

fn solve_maps(game: &Game2x2, concept: Concept, params: ConceptParams) -> Result<Vec<EquilibriumProfile>> {
    response(game, Role::Row, concept, &params, 0.5)?;
    let row_map = |q: f64| response(game, Role::Row, concept, &params, q).unwrap_or(f64::NAN);
    let col_map = |p: f64| response(game, Role::Column, concept, &params, p).unwrap_or(f64::NAN);
    let points = fixed_point::solve(row_map, col_map)?;
    Ok(points
        .into_iter()
        .map(|fp| EquilibriumProfile {
            row: MixedStrategy::saturating(fp.p),
            col: MixedStrategy::saturating(fp.q),
            concept,
            params,
            residual: fp.residual,
        })
        .collect())
}

/// The fully mixed Nash equilibrium from the two indifference conditions.
pub fn nash_mixed(game: &Game2x2) -> Result<EquilibriumProfile> {
    let inapplicable = |reason: String| Error::Inapplicable { concept: "nash".into(), reason };
    // each player's mix makes the other indifferent
    let mix_for = |indifferent: Role| -> Result<f64> {
        let gap = |opp_action: Action| {
            game.payoff(indifferent, Action::Zero, opp_action) - game.payoff(indifferent, Action::One, opp_action)
        };
        let (d0, d1) = (gap(Action::Zero), gap(Action::One));
        let denom = d1 - d0;
        if denom == 0.0 {
            return Err(inapplicable(format!("{indifferent} player is never indifferent in game {}", game.id)));
        }
        let p = d1 / denom;
        if !(p > 0.0 && p < 1.0) {
            return Err(inapplicable(format!("no fully mixed equilibrium in game {}", game.id)));
        }
        Ok(p)
    };
    let p = mix_for(Role::Column)?;
    let q = mix_for(Role::Row)?;
    let residual = game
        .payoff_gap(Role::Row, MixedStrategy::saturating(q))
        .abs()
        .max(game.payoff_gap(Role::Column, MixedStrategy::saturating(p)).abs());
    Ok(EquilibriumProfile {
        row: MixedStrategy::saturating(p),
        col: MixedStrategy::saturating(q),
        concept: Concept::Nash,
        params: ConceptParams::default(),
        residual,
    })
}

pub fn qre_logit(game: &Game2x2, lambda: f64) -> Result<Vec<EquilibriumProfile>> {
    solve_maps(game, Concept::Qre, ConceptParams::lambda(lambda))
}

pub fn action_sampling(game: &Game2x2, n: u32) -> Result<Vec<EquilibriumProfile>> {
    solve_maps(game, Concept::Ase, ConceptParams::sample_size(n))
}

pub fn payoff_sampling(game: &Game2x2, n: u32) -> Result<Vec<EquilibriumProfile>> {
    solve_maps(game, Concept::Pse, ConceptParams::sample_size(n))
}

pub fn impulse_balance(game: &Game2x2) -> Result<Vec<EquilibriumProfile>> {
    solve_maps(game, Concept::Ibe, ConceptParams::default())
}

pub fn random_profile() -> EquilibriumProfile {
    EquilibriumProfile {
        row: MixedStrategy::UNIFORM,
        col: MixedStrategy::UNIFORM,
        concept: Concept::Random,
        params: ConceptParams::default(),
        residual: 0.0,
    }
}

/// Every fixed point of `concept` on `game`. Nash and random give one profile.
pub fn solve(game: &Game2x2, concept: Concept, params: ConceptParams) -> Result<Vec<EquilibriumProfile>> {
    match concept {
        Concept::Nash => Ok(vec![nash_mixed(game)?]),
        Concept::Random => Ok(vec![random_profile()]),
        Concept::BestStatic => Err(Error::Config("best_static is fitted from data, not solved".into())),
        Concept::Ibe => impulse_balance(game),
        c => solve_maps(game, c, params),
    }
}

/// Residual of `profile` recomputed from the response maps.
pub fn profile_residual(game: &Game2x2, profile: &EquilibriumProfile) -> Result<f64> {
    let (p, q) = (profile.row.p0(), profile.col.p0());
    match profile.concept {
        Concept::Nash => Ok(game.payoff_gap(Role::Row, opp(q)).abs().max(game.payoff_gap(Role::Column, opp(p)).abs())),
        Concept::Random | Concept::BestStatic => Ok(0.0),
        c => {
            let r = response(game, Role::Row, c, &profile.params, q)?;
            let s = response(game, Role::Column, c, &profile.params, p)?;
            Ok((p - r).abs().max((q - s).abs()))
        }
    }
}

/// Frequency of action 0 among the targets of `role`'s samples.
pub fn best_static(samples: &[PredictionSample], role: Role) -> Result<MixedStrategy> {
    let (zeros, n) = samples
        .iter()
        .filter(|s| s.role == role)
        .fold((0usize, 0usize), |(z, n), s| (z + usize::from(s.target == Action::Zero), n + 1));
    if n == 0 {
        return Err(Error::Validation(format!("no {role} samples for best-static fit")));
    }
    MixedStrategy::new(zeros as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic_games;

    fn asym() -> Game2x2 {
        Game2x2::new("a", [[9.0, 0.0], [0.0, 1.0]], [[0.0, 4.0], [1.0, 0.0]]).unwrap()
    }

    fn all_concepts(g: &Game2x2) -> Vec<Vec<EquilibriumProfile>> {
        vec![
            vec![nash_mixed(g).unwrap()],
            qre_logit(g, 1.3).unwrap(),
            action_sampling(g, 3).unwrap(),
            payoff_sampling(g, 2).unwrap(),
            impulse_balance(g).unwrap(),
        ]
    }

    #[test]
    fn matching_pennies_is_uniform_for_every_concept() {
        let mp = Game2x2::matching_pennies();
        for profiles in all_concepts(&mp) {
            assert_eq!(profiles.len(), 1);
            assert!((profiles[0].row.p0() - 0.5).abs() < 1e-9, "{profiles:?}");
            assert!((profiles[0].col.p0() - 0.5).abs() < 1e-9, "{profiles:?}");
        }
        for lambda in [0.0, 0.5, 10.0, 1000.0] {
            let q = qre_logit(&mp, lambda).unwrap();
            assert!((q[0].row.p0() - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn nash_indifference_example() {
        let g = Game2x2::new("g", [[0.0, 2.0], [1.0, 0.0]], [[2.0, 0.0], [0.0, 1.0]]).unwrap();
        let ne = nash_mixed(&g).unwrap();
        assert!((ne.row.p0() - 1.0 / 3.0).abs() < 1e-15);
        // column is indifferent at the row mix, and vice versa
        assert!(g.payoff_gap(Role::Column, ne.row).abs() < 1e-12);
        assert!(g.payoff_gap(Role::Row, ne.col).abs() < 1e-12);
    }

    #[test]
    fn nash_rejects_degenerate_games() {
        let dominant = Game2x2::new("d", [[5.0, 4.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(nash_mixed(&dominant), Err(Error::Inapplicable { .. })));
        let flat = Game2x2::new("f", [[0.0; 2]; 2], [[0.0; 2]; 2]).unwrap();
        assert!(matches!(nash_mixed(&flat), Err(Error::Inapplicable { .. })));
    }

    #[test]
    fn qre_at_zero_precision_is_uniform() {
        let q = qre_logit(&asym(), 0.0).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].row.p0(), 0.5);
        assert_eq!(q[0].col.p0(), 0.5);
    }

    #[test]
    fn qre_approaches_nash() {
        for g in synthetic_games(5, 17) {
            let ne = nash_mixed(&g).unwrap();
            let q = qre_logit(&g, 1e3).unwrap();
            assert_eq!(q.len(), 1);
            assert!((q[0].row.p0() - ne.row.p0()).abs() < 1e-3);
            assert!((q[0].col.p0() - ne.col.p0()).abs() < 1e-3);
        }
    }

    #[test]
    fn pse_n1_matches_four_case_enumeration() {
        let g = asym();
        for &q in &[0.0, 0.2, 0.5, 0.77, 1.0] {
            // one draw per own action: (opp action under a0, opp action under a1)
            let mut want = 0.0;
            for b0 in Action::BOTH {
                for b1 in Action::BOTH {
                    let w = MixedStrategy::saturating(q).prob(b0) * MixedStrategy::saturating(q).prob(b1);
                    let s0 = g.payoff(Role::Row, Action::Zero, b0);
                    let s1 = g.payoff(Role::Row, Action::One, b1);
                    want += w * if s0 > s1 { 1.0 } else if s0 == s1 { 0.5 } else { 0.0 };
                }
            }
            assert!((pse_response(&g, Role::Row, 1, q) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn pse_strict_dominance_plays_zero() {
        let g = Game2x2::new("d", [[5.0, 4.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        for n in [1, 4, 9] {
            for fp in payoff_sampling(&g, n).unwrap() {
                assert!((fp.row.p0() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ibe_balance_and_translation() {
        let g = asym();
        let fp = impulse_balance(&g).unwrap();
        for e in &fp {
            for role in Role::BOTH {
                let q = e.get(role.opponent()).p0();
                let (up, down) = ibe_impulses(&g, role, q);
                let p = e.get(role).p0();
                assert!((p * up - (1.0 - p) * down).abs() < 1e-9);
            }
        }
        let mut shifted = g.clone();
        shifted.payoff_row = g.payoff_row.map(|r| r.map(|v| v + 7.5));
        let fs = impulse_balance(&shifted).unwrap();
        assert_eq!(fs.len(), fp.len());
        assert!((fs[0].row.p0() - fp[0].row.p0()).abs() < 1e-12);
        assert!((fs[0].col.p0() - fp[0].col.p0()).abs() < 1e-12);
    }

    #[test]
    fn residuals_recompute_below_tolerance() {
        for g in synthetic_games(8, 4) {
            for profiles in all_concepts(&g) {
                for p in profiles {
                    assert!(profile_residual(&g, &p).unwrap() < 1e-9, "{p:?}");
                }
            }
        }
    }

    #[test]
    fn missing_parameters_are_config_errors() {
        assert!(matches!(solve(&asym(), Concept::Qre, ConceptParams::default()), Err(Error::Config(_))));
        assert!(matches!(solve(&asym(), Concept::Ase, ConceptParams::sample_size(0)), Err(Error::Config(_))));
    }

    #[test]
    fn best_static_frequencies() {
        use crate::data::PredictionSample;
        let mk = |t: u8| PredictionSample {
            game_id: "g".into(),
            session_id: "s".into(),
            pair: 0,
            period: 1,
            role: Role::Row,
            history: vec![],
            target: Action::from_index(t).unwrap(),
        };
        let s: Vec<_> = [0, 0, 1, 1].iter().map(|&t| mk(t)).collect();
        assert_eq!(best_static(&s, Role::Row).unwrap().p0(), 0.5);
        let s: Vec<_> = [0, 0, 0, 1].iter().map(|&t| mk(t)).collect();
        assert_eq!(best_static(&s, Role::Row).unwrap().p0(), 0.75);
        assert!(matches!(best_static(&s, Role::Column), Err(Error::Validation(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn game() -> impl Strategy<Value = Game2x2> {
            (any::<u64>()).prop_map(|s| synthetic_games(1, s).remove(0))
        }

        fn concept_profiles(g: &Game2x2, c: Concept) -> Vec<EquilibriumProfile> {
            let params = match c {
                Concept::Qre => ConceptParams::lambda(0.7),
                Concept::Ase | Concept::Pse => ConceptParams::sample_size(4),
                _ => ConceptParams::default(),
            };
            solve(g, c, params).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn relabeling_flips_probabilities(g in game(), flip_row in any::<bool>()) {
                let role = if flip_row { Role::Row } else { Role::Column };
                let h = g.relabel(role);
                for c in [Concept::Nash, Concept::Qre, Concept::Ase, Concept::Pse, Concept::Ibe] {
                    let a = concept_profiles(&g, c);
                    let b = concept_profiles(&h, c);
                    prop_assert_eq!(a.len(), b.len());
                    for x in &a {
                        let want = 1.0 - x.get(role).p0();
                        let other = x.get(role.opponent()).p0();
                        let hit = b.iter().any(|y| (y.get(role).p0() - want).abs() < 1e-7
                            && (y.get(role.opponent()).p0() - other).abs() < 1e-7);
                        prop_assert!(hit, "{:?} {:?} {:?}", c, a, b);
                    }
                }
            }

            #[test]
            fn solvers_are_deterministic_and_valid(g in game()) {
                for c in [Concept::Qre, Concept::Ase, Concept::Pse, Concept::Ibe] {
                    let a = concept_profiles(&g, c);
                    prop_assert_eq!(&a, &concept_profiles(&g, c));
                    for x in &a {
                        prop_assert!((0.0..=1.0).contains(&x.row.p0()) && (0.0..=1.0).contains(&x.col.p0()));
                    }
                }
            }
        }
    }
}

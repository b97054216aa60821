//! 2x2 games, mixed strategies, and per-period step records.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary action. `Zero` is Up for the row player and Left for the column
/// player; `One` is Down / Right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    Zero = 0,
    One = 1,
}

impl Action {
    pub const BOTH: [Action; 2] = [Action::Zero, Action::One];

    pub fn from_index(i: u8) -> Option<Action> {
        match i {
            0 => Some(Action::Zero),
            1 => Some(Action::One),
            _ => None,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn flip(self) -> Action {
        match self {
            Action::Zero => Action::One,
            Action::One => Action::Zero,
        }
    }

    /// 0.0 or 1.0, the encoding used in network inputs.
    #[inline]
    pub fn as_f64(self) -> f64 {
        self as u8 as f64
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Row,
    Column,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::Row, Role::Column];

    pub fn opponent(self) -> Role {
        match self {
            Role::Row => Role::Column,
            Role::Column => Role::Row,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Row => f.write_str("row"),
            Role::Column => f.write_str("column"),
        }
    }
}

/// A probability distribution over two actions, stored as the probability of
/// action 0.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MixedStrategy {
    p0: f64,
}

impl MixedStrategy {
    pub const UNIFORM: MixedStrategy = MixedStrategy { p0: 0.5 };

    pub fn new(p0: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p0) {
            Ok(Self { p0 })
        } else {
            Err(Error::Contract(format!("probability {p0} outside [0, 1]")))
        }
    }

    /// Clamps into [0, 1]; NaN maps to the uniform strategy.
    pub fn saturating(p0: f64) -> Self {
        if p0.is_nan() {
            Self::UNIFORM
        } else {
            Self { p0: p0.clamp(0.0, 1.0) }
        }
    }

    /// All mass on `action`.
    pub fn pure(action: Action) -> Self {
        match action {
            Action::Zero => Self { p0: 1.0 },
            Action::One => Self { p0: 0.0 },
        }
    }

    #[inline]
    pub fn p0(self) -> f64 {
        self.p0
    }

    #[inline]
    pub fn p1(self) -> f64 {
        1.0 - self.p0
    }

    #[inline]
    pub fn prob(self, action: Action) -> f64 {
        match action {
            Action::Zero => self.p0,
            Action::One => 1.0 - self.p0,
        }
    }

    /// Most likely action; exact ties go to action 0.
    #[inline]
    pub fn harden(self) -> Action {
        if self.p0 >= 0.5 {
            Action::Zero
        } else {
            Action::One
        }
    }

    pub fn complement(self) -> Self {
        Self { p0: 1.0 - self.p0 }
    }
}

/// A two-player game with two actions each. Both matrices are indexed
/// `[row action][column action]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Game2x2 {
    pub id: String,
    pub payoff_row: [[f64; 2]; 2],
    pub payoff_col: [[f64; 2]; 2],
}

impl Game2x2 {
    pub fn new(id: impl Into<String>, payoff_row: [[f64; 2]; 2], payoff_col: [[f64; 2]; 2]) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::Validation(format!("invalid game id {id:?}")));
        }
        let finite = payoff_row.iter().chain(payoff_col.iter()).flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation(format!("game {id}: payoffs must be finite")));
        }
        Ok(Self { id, payoff_row, payoff_col })
    }

    /// Row player wins on a match, column player on a mismatch.
    pub fn matching_pennies() -> Self {
        Self {
            id: "matching_pennies".into(),
            payoff_row: [[1.0, -1.0], [-1.0, 1.0]],
            payoff_col: [[-1.0, 1.0], [1.0, -1.0]],
        }
    }

    /// Payoff to `role` when it plays `own` and the opponent plays `opp`.
    #[inline]
    pub fn payoff(&self, role: Role, own: Action, opp: Action) -> f64 {
        match role {
            Role::Row => self.payoff_row[own.index()][opp.index()],
            Role::Column => self.payoff_col[opp.index()][own.index()],
        }
    }

    /// The role's payoffs as `[own][opp]`.
    pub fn own_matrix(&self, role: Role) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for own in Action::BOTH {
            for opp in Action::BOTH {
                m[own.index()][opp.index()] = self.payoff(role, own, opp);
            }
        }
        m
    }

    pub fn expected_payoff(&self, role: Role, own: Action, opp: MixedStrategy) -> f64 {
        opp.p0() * self.payoff(role, own, Action::Zero) + opp.p1() * self.payoff(role, own, Action::One)
    }

    /// Expected payoff of action 0 minus that of action 1 against `opp`.
    pub fn payoff_gap(&self, role: Role, opp: MixedStrategy) -> f64 {
        self.expected_payoff(role, Action::Zero, opp) - self.expected_payoff(role, Action::One, opp)
    }

    /// Best response to `opp`; exact indifference resolves to action 0.
    pub fn best_response(&self, role: Role, opp: MixedStrategy) -> Action {
        let e0 = self.expected_payoff(role, Action::Zero, opp);
        let e1 = self.expected_payoff(role, Action::One, opp);
        if e0 >= e1 {
            Action::Zero
        } else {
            Action::One
        }
    }

    /// Hindsight-optimal payoff against a realized opponent action.
    pub fn best_payoff_against(&self, role: Role, opp: Action) -> f64 {
        self.payoff(role, Action::Zero, opp).max(self.payoff(role, Action::One, opp))
    }

    pub fn min_payoff(&self) -> f64 {
        self.payoff_row.iter().chain(self.payoff_col.iter()).flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_payoff(&self) -> f64 {
        self.payoff_row.iter().chain(self.payoff_col.iter()).flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Swaps the labels of `role`'s two actions.
    pub fn relabel(&self, role: Role) -> Game2x2 {
        let mut g = self.clone();
        match role {
            Role::Row => {
                g.payoff_row.swap(0, 1);
                g.payoff_col.swap(0, 1);
            }
            Role::Column => {
                for m in [&mut g.payoff_row, &mut g.payoff_col] {
                    for r in m.iter_mut() {
                        r.swap(0, 1);
                    }
                }
            }
        }
        g
    }
}

/// One period of play seen from one player's side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub own: Action,
    pub opp: Action,
    pub own_payoff: f64,
    pub opp_payoff: f64,
    pub own_forgone: f64,
    pub opp_forgone: f64,
}

impl StepRecord {
    pub fn new(game: &Game2x2, role: Role, own: Action, opp: Action) -> Self {
        let other = role.opponent();
        Self {
            own,
            opp,
            own_payoff: game.payoff(role, own, opp),
            opp_payoff: game.payoff(other, opp, own),
            own_forgone: game.payoff(role, own.flip(), opp),
            opp_forgone: game.payoff(other, opp.flip(), own),
        }
    }
}

//! Prediction of step-by-step play in repeated 2x2 normal-form games.
//!
//! The crate is organised around the pieces of a leave-one-game-out benchmark:
//!
//! * [`game`] and [`metrics`]: payoffs, best responses, and the three scoring
//!   metrics (cross-entropy, accuracy, economic value).
//! * [`data`]: session files, history windows, train/test splits, and
//!   synthetic corpora.
//! * [`equilibrium`]: static predictors (Nash, logit QRE, sampling equilibria,
//!   impulse balance, empirical benchmarks).
//! * [`learners`]: dynamic predictors that update after every period.
//! * [`neural`]: a small from-scratch MLP/temporal-CNN stack with Adam.
//! * [`harness`]: cross-game and game-specific protocols, grid fitting and
//!   CSV/JSON reports.

pub mod data;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod neural;
pub mod seed;

pub use error::{Error, Result};
pub use game::{Action, Game2x2, MixedStrategy, Role, StepRecord};

//! Experiment orchestration: leave-one-game-out and game-specific protocols,
//! grid fitting of the parametric models, the history-length sweep, and
//! CSV/JSON reports.

pub mod config;
pub mod fit;
pub mod protocol;
pub mod report;
pub mod roster;

pub use config::{CorpusConfig, ExperimentConfig, Protocol, SyntheticConfig};
pub use protocol::{expand_roster, run_cross_game, run_game_specific, run_protocol, sweep_history_length, EncodedCorpus, Entry};
pub use report::{
    aggregate_rows, emit_report, verify_aggregates, write_sweep_csv, AggregateRow, CellError, EvalReport, GameRow, LeakageAudit,
    SweepRow, SweepTable,
};
pub use roster::ModelKind;

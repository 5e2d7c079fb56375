//! Causal DAGs over logged trajectories: d-separation, back-door sets, the
//! three do-calculus rules and back-door adjustment.

mod adjust;
mod dag;
mod dsep;
mod table;

use thiserror::Error;

pub use adjust::{adjust, conditional, write_adjustment_csv, AdjustedEstimate, Adjustment};
pub use dag::CausalDag;
pub use dsep::{backdoor_admissible, backdoor_sets, d_separated, rule_applicable, Rule};
pub use table::{bin_index, extract_table, Source, TrajectoryTable, VariableSpec};

#[derive(Debug, Error, PartialEq)]
pub enum CausalError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("edge {0} -> {1} closes a directed cycle")]
    Cycle(String, String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("node sets must be disjoint (`{0}` appears twice)")]
    Overlap(String),
    #[error("{0} is not a valid back-door adjustment set")]
    InadmissibleSet(String),
    #[error("binning: {0}")]
    Binning(String),
    #[error("do-calculus rules are numbered 1 to 3, got {0}")]
    UnknownRule(u8),
}

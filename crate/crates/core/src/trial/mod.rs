//! Keyboard / shared Keyboard decision rules: keys, dose transitions,
//! elimination, pre-tabulated boundaries and final MTD selection.

mod data;
mod decide;
mod design;
mod keys;
mod select;
mod table;

pub use data::{Evidence, TrialData, TrialState};
pub use decide::{decide, decide_with_evidence, Action, Decision, Signal};
pub use design::DesignConfig;
pub use keys::{build_keys, strongest_key, KeyPartition};
pub use select::{select_mtd, selection_estimates};
pub use table::{decision_table, TableRow};

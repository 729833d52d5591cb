//! Flow-record ingestion and preprocessing: CSV loading, min-max scaling,
//! feature selection, windowing, class balancing and a synthetic generator.

mod balance;
mod normalize;
mod select;
mod synth;
mod table;
mod window;

pub use balance::{balance_windows, smote_oversample, undersample, BalanceOptions};
pub use normalize::NormStats;
pub use select::{correlation_filter, pearson, rfe};
pub use synth::{EventKind, EventSpec, Sinusoid, SynthSpec};
pub use table::{load_flows, FlowTable, LoadOptions};
pub use window::{make_windows, window_count, LabelRule, Window, WindowSet};

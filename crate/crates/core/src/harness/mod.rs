//! Seeded replications, parameter sweeps and result files.

mod config;
mod emit;
mod presets;
mod run;

pub use config::{EnvSpec, ExperimentConfig, DEFAULT_CHECKPOINTS};
pub use emit::{
    read_summary_csv, write_summary_csv, write_summary_json, write_trace_csv, write_trace_svg,
    write_traces_json,
};
pub use presets::{preset, Preset, PRESET_NAMES};
pub use run::{
    aggregate, checkpoint_steps, run_replications, run_single, run_sweep, simulate, summarize,
    CellResult, Execution, RegretTrace, SummaryRow, TraceSummary,
};

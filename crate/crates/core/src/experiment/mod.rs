//! Scenario composition, experiment suites and result output.

mod config;
mod output;
pub mod plot;
mod sim;
mod suites;

pub use config::{InfoSource, LoadSpec, Mode, Phase, Scenario, ScenarioConfig, TopologySpec, TraceFlags};
pub use output::*;
pub use sim::{run_scenario, EpochRecord, LedgerSnapshot, RunResult, Summary};
pub use suites::{
    degradation_study, derive_seed, point_config, surface_sweep, sweep_load, CurvePoint, DegradationRow, Surface,
    SurfaceCell, SweepPoint, SweepTable, SweepTarget, FAIR_LINE_TOLERANCE, SUSTAIN_FRACTION,
};

//! Discrete-event simulator for an unslotted, carrier-sense-free wireless
//! MAC in which every node learns its transmit probability with a
//! hysteretic Q-learning agent that only uses one-hop information.
//!
//! Module map:
//!
//! - [`topology`]: mesh graphs, neighborhoods, two-hop degrees, presets
//! - [`traffic`]: Poisson arrivals and uniform one-hop destinations
//! - [`channel`]: overlap-based collision resolution and epoch counters
//! - [`agent`]: state/action grids, reward, hysteretic Q-table updates
//! - [`info`]: piggybacked throughput reports
//! - [`oracle`]: independent reference computations
//! - [`experiment`]: scenario runner, sweeps, CSV and SVG output

pub mod agent;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod info;
pub mod oracle;
pub mod topology;
pub mod traffic;

pub use error::{Error, Result};
pub use experiment::{run_scenario, Mode, RunResult, ScenarioConfig};
pub use topology::{NodeId, Topology};

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::error::{Error, Result};
use crate::topology::{EdgeList, Topology};
use crate::traffic::{LoadStep, TrafficSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Every node transmits every packet; nothing is learned.
    AlohaBaseline,
    #[default]
    DrliMac,
}

/// Where an agent's throughput inputs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfoSource {
    /// Values learned from piggybacked reports (the normal mode).
    #[default]
    Piggyback,
    /// Simulator ground truth; diagnostic only.
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopologySpec {
    Preset(String),
    Edges(EdgeList),
}

impl TopologySpec {
    pub fn build(&self) -> Result<Topology> {
        match self {
            TopologySpec::Preset(name) => Topology::preset(name),
            TopologySpec::Edges(list) => Topology::from_edge_list(list),
        }
    }

    pub fn label(&self) -> String {
        match self {
            TopologySpec::Preset(name) => name.clone(),
            TopologySpec::Edges(list) => format!("custom{}", list.nodes),
        }
    }
}

/// One load for every node, or an explicit per-node vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LoadSpec {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl LoadSpec {
    pub fn per_node(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            LoadSpec::Uniform(g) => Ok(vec![*g; n]),
            LoadSpec::PerNode(v) if v.len() == n => Ok(v.clone()),
            LoadSpec::PerNode(v) => Err(Error::Config(format!(
                "{} per-node loads given for {n} nodes",
                v.len()
            ))),
        }
    }
}

/// Loads switched in at simulated time `at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub at: f64,
    pub loads: LoadSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceFlags {
    /// Keep every resolved transmission.
    pub transmissions: bool,
    /// Keep a ledger snapshot at every epoch close.
    pub ledgers: bool,
}

fn default_epochs() -> u64 {
    5000
}

fn default_packets_per_epoch() -> u64 {
    1000
}

fn default_summary_fraction() -> f64 {
    0.1
}

/// A complete, self-describing scenario. Everything except `topology` and
/// `loads` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub topology: TopologySpec,
    pub loads: LoadSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<Phase>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub agent: AgentConfig,
    /// Learning epochs recorded per node.
    #[serde(default = "default_epochs")]
    pub epochs: u64,
    /// MAC arrivals per learning epoch.
    #[serde(default = "default_packets_per_epoch")]
    pub packets_per_epoch: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub info: InfoSource,
    #[serde(default)]
    pub trace: TraceFlags,
    /// Fraction of final epochs averaged into the summary.
    #[serde(default = "default_summary_fraction")]
    pub summary_fraction: f64,
}

impl ScenarioConfig {
    pub fn new(topology: TopologySpec, loads: LoadSpec, mode: Mode) -> Self {
        Self {
            name: None,
            topology,
            loads,
            schedule: Vec::new(),
            mode,
            agent: AgentConfig::default(),
            epochs: default_epochs(),
            packets_per_epoch: default_packets_per_epoch(),
            seed: 0,
            info: InfoSource::default(),
            trace: TraceFlags::default(),
            summary_fraction: default_summary_fraction(),
        }
    }

    pub fn preset(name: &str, load: f64, mode: Mode) -> Self {
        Self::new(TopologySpec::Preset(name.into()), LoadSpec::Uniform(load), mode)
    }

    pub fn with_epochs(mut self, epochs: u64) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_loads(mut self, loads: LoadSpec) -> Self {
        self.loads = loads;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.topology.label())
    }

    /// Validates the configuration and builds the topology and traffic
    /// sources.
    pub fn resolve(&self) -> Result<Scenario> {
        let topology = self.topology.build()?;
        let n = topology.node_count();
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.packets_per_epoch == 0 {
            return Err(Error::Config("packets_per_epoch must be at least 1".into()));
        }
        if !(self.summary_fraction > 0.0 && self.summary_fraction <= 1.0) {
            return Err(Error::Config("summary_fraction must lie in (0, 1]".into()));
        }
        if self.mode == Mode::DrliMac {
            self.agent.validate()?;
        }

        let initial = self.loads.per_node(n)?;
        let mut changes = vec![Vec::new(); n];
        for phase in &self.schedule {
            if !(phase.at > 0.0 && phase.at.is_finite()) {
                return Err(Error::Config(format!(
                    "schedule phase time {} must be positive",
                    phase.at
                )));
            }
            for (node, load) in phase.loads.per_node(n)?.into_iter().enumerate() {
                changes[node].push(LoadStep { at: phase.at, load });
            }
        }
        let sources = initial
            .into_iter()
            .zip(changes)
            .enumerate()
            .map(|(node, (g, steps))| TrafficSource::scheduled(node, g, steps))
            .collect::<Result<Vec<_>>>()?;
        if sources.iter().all(TrafficSource::is_idle) {
            return Err(Error::Config("every node has zero load".into()));
        }

        Ok(Scenario {
            topology: Arc::new(topology),
            sources,
        })
    }
}

/// A validated configuration's derived objects.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Arc<Topology>,
    pub sources: Vec<TrafficSource>,
}

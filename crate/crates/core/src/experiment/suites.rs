//! Multi-run experiment suites: load sweeps, the tied-load surface on the
//! 4-node line, and the density degradation study.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{LoadSpec, Mode, ScenarioConfig};
use super::sim::{run_scenario, RunResult, Summary};
use crate::error::{Error, Result};
use crate::topology::{NodeId, Topology};

/// Seed for grid point `index`, derived from the base seed so that points
/// are independent but reproducible.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index.wrapping_add(1) << 32);
    rng.next_u64()
}

/// Which nodes a sweep drives.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepTarget {
    /// Every node gets the grid load.
    #[default]
    All,
    /// Only these nodes; the rest keep their configured load.
    Nodes(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub load: f64,
    pub result: RunResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub label: String,
    pub points: Vec<SweepPoint>,
}

impl SweepTable {
    /// Point with the highest summary network throughput.
    pub fn peak(&self) -> Option<&SweepPoint> {
        self.points
            .iter()
            .max_by(|a, b| a.result.summary.network_throughput.total_cmp(&b.result.summary.network_throughput))
    }

    pub fn loads(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.load).collect()
    }
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{what} grid is empty")));
    }
    if let Some(g) = grid.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::Config(format!("{what} grid value {g} is not a non-negative load")));
    }
    Ok(())
}

/// The config for one sweep point.
pub fn point_config(base: &ScenarioConfig, target: &SweepTarget, load: f64, index: u64) -> Result<ScenarioConfig> {
    let n = base.topology.build()?.node_count();
    let loads = match target {
        SweepTarget::All => LoadSpec::Uniform(load),
        SweepTarget::Nodes(nodes) => {
            let mut v = base.loads.per_node(n)?;
            for &i in nodes {
                if i >= n {
                    return Err(Error::UnknownNode { node: i, node_count: n });
                }
                v[i] = load;
            }
            LoadSpec::PerNode(v)
        }
    };
    Ok(base.clone().with_loads(loads).with_seed(derive_seed(base.seed, index)))
}

/// One run per grid point, in parallel; results in grid order.
pub fn sweep_load(base: &ScenarioConfig, grid: &[f64], target: &SweepTarget) -> Result<SweepTable> {
    check_grid(grid, "load")?;
    let configs = grid
        .iter()
        .enumerate()
        .map(|(i, &g)| point_config(base, target, g, i as u64))
        .collect::<Result<Vec<_>>>()?;
    let points = configs
        .par_iter()
        .zip(grid.par_iter())
        .map(|(cfg, &load)| run_scenario(cfg).map(|result| SweepPoint { load, result }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        label: base.label(),
        points,
    })
}

/// Tied-load ALOHA throughput surface over `(g1 = g4, g2 = g3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub g14: Vec<f64>,
    pub g23: Vec<f64>,
    /// `cells[i][j]` is the point `(g14[i], g23[j])`.
    pub cells: Vec<Vec<SurfaceCell>>,
    pub fair_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub g14: f64,
    pub g23: f64,
    pub node_throughput: Vec<f64>,
    pub network_throughput: f64,
}

impl SurfaceCell {
    pub fn mean_node_throughput(&self) -> f64 {
        self.node_throughput.iter().sum::<f64>() / self.node_throughput.len() as f64
    }

    pub fn relative_spread(&self) -> f64 {
        let max = self.node_throughput.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.node_throughput.iter().copied().fold(f64::INFINITY, f64::min);
        let m = self.mean_node_throughput();
        if m > 0.0 {
            (max - min) / m
        } else {
            0.0
        }
    }
}

/// Fair-line cells are those whose per-node throughputs lie within this
/// relative spread of each other.
pub const FAIR_LINE_TOLERANCE: f64 = 0.05;

impl Surface {
    pub fn iter(&self) -> impl Iterator<Item = &SurfaceCell> {
        self.cells.iter().flatten()
    }

    pub fn fair_line(&self) -> Vec<&SurfaceCell> {
        self.iter()
            .filter(|c| c.mean_node_throughput() > 0.0 && c.relative_spread() <= self.fair_tolerance)
            .collect()
    }

    /// Fair-line cell with the highest per-node throughput.
    pub fn fair_max(&self) -> Option<&SurfaceCell> {
        self.fair_line()
            .into_iter()
            .max_by(|a, b| a.mean_node_throughput().total_cmp(&b.mean_node_throughput()))
    }

    pub fn network_max(&self) -> Option<&SurfaceCell> {
        self.iter()
            .max_by(|a, b| a.network_throughput.total_cmp(&b.network_throughput))
    }
}

fn is_line4(topo: &Topology) -> bool {
    topo.node_count() == 4 && topo.edges() == [(0, 1), (1, 2), (2, 3)]
}

/// Runs the surface in ALOHA mode whatever `cfg.mode` says. `cfg` must use
/// the 4-node line.
pub fn surface_sweep(cfg: &ScenarioConfig, g14_grid: &[f64], g23_grid: &[f64]) -> Result<Surface> {
    check_grid(g14_grid, "g14")?;
    check_grid(g23_grid, "g23")?;
    if !is_line4(&cfg.topology.build()?) {
        return Err(Error::Config("surface sweep needs the 4-node line topology".into()));
    }
    let cols = g23_grid.len();
    let jobs: Vec<(usize, usize)> = (0..g14_grid.len()).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
    let flat = jobs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (g14_grid[i], g23_grid[j]);
            let point = cfg
                .clone()
                .with_mode(Mode::AlohaBaseline)
                .with_loads(LoadSpec::PerNode(vec![a, b, b, a]))
                .with_seed(derive_seed(cfg.seed, (i * cols + j) as u64));
            run_scenario(&point).map(|r| SurfaceCell {
                g14: a,
                g23: b,
                node_throughput: r.summary.throughput.clone(),
                network_throughput: r.summary.network_throughput,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut it = flat.into_iter();
    let cells = (0..g14_grid.len()).map(|_| it.by_ref().take(cols).collect()).collect();
    Ok(Surface {
        g14: g14_grid.to_vec(),
        g23: g23_grid.to_vec(),
        cells,
        fair_tolerance: FAIR_LINE_TOLERANCE,
    })
}

/// A topology counts as sustaining when its throughput at twice the peak
/// load is at least this fraction of the peak.
pub const SUSTAIN_FRACTION: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub load: f64,
    pub seed: u64,
    pub network_throughput: f64,
    pub mean_collision_prob: f64,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationRow {
    pub label: String,
    pub node_count: usize,
    pub max_two_hop_degree: usize,
    pub peak_load: f64,
    pub peak_throughput: f64,
    pub check_load: f64,
    pub check_throughput: f64,
    pub sustaining: bool,
    /// Sorted by load; includes the check point.
    pub curve: Vec<CurvePoint>,
}

impl DegradationRow {
    pub fn collision_at(&self, load: f64) -> Option<f64> {
        self.curve
            .iter()
            .find(|p| (p.load - load).abs() < 1e-9)
            .map(|p| p.mean_collision_prob)
    }
}

fn curve_point(p: &SweepPoint) -> CurvePoint {
    CurvePoint {
        load: p.load,
        seed: p.result.seed,
        network_throughput: p.result.summary.network_throughput,
        mean_collision_prob: p.result.summary.mean_collision_prob(),
        summary: p.result.summary.clone(),
    }
}

/// Sweeps each config over `grid` and classifies it as sustaining or
/// degrading. When twice the peak load is not on the grid an extra run is
/// made there.
pub fn degradation_study(configs: &[ScenarioConfig], grid: &[f64]) -> Result<Vec<DegradationRow>> {
    check_grid(grid, "load")?;
    let mut rows = Vec::with_capacity(configs.len());
    for cfg in configs {
        let topo = cfg.topology.build()?;
        let table = sweep_load(cfg, grid, &SweepTarget::All)?;
        let peak = table.peak().ok_or(Error::EmptyResults)?;
        let (peak_load, peak_throughput) = (peak.load, peak.result.summary.network_throughput);
        let check_load = 2.0 * peak_load;
        let mut curve: Vec<CurvePoint> = table.points.iter().map(curve_point).collect();
        let check_throughput = match curve.iter().find(|p| (p.load - check_load).abs() < 1e-9) {
            Some(p) => p.network_throughput,
            None => {
                let extra = point_config(cfg, &SweepTarget::All, check_load, grid.len() as u64)?;
                let r = run_scenario(&extra)?;
                let p = curve_point(&SweepPoint { load: check_load, result: r });
                let s = p.network_throughput;
                curve.push(p);
                curve.sort_by(|a, b| a.load.total_cmp(&b.load));
                s
            }
        };
        rows.push(DegradationRow {
            label: cfg.label(),
            node_count: topo.node_count(),
            max_two_hop_degree: topo.max_two_hop_degree(),
            peak_load,
            peak_throughput,
            check_load,
            check_throughput,
            sustaining: check_throughput >= SUSTAIN_FRACTION * peak_throughput,
            curve,
        });
    }
    Ok(rows)
}

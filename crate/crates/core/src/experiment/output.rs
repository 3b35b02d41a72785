//! CSV tables and SVG plots for run, sweep, surface and degradation results.
//!
//! Column order is the field order of the row structs below and does not
//! change. Every plot is built from the same rows that go into its CSV, so
//! [`plot_csv`] on a written file reproduces the emitted SVG byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::Mode;
use super::plot::{heatmap_svg, line_svg, Heatmap, LinePlot, Series};
use super::sim::{RunResult, Summary};
use super::suites::{DegradationRow, Surface, SweepTable};
use crate::error::{Error, Result};

/// `epochs.csv`: one row per node per epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub run: String,
    pub seed: u64,
    pub mode: Mode,
    pub node: usize,
    pub epoch: u64,
    pub start: f64,
    pub end: f64,
    pub generated: u64,
    pub transmitted: u64,
    pub collided: u64,
    pub delivered: u64,
    pub collision_prob: f64,
    pub throughput: f64,
    pub offered_load: f64,
    pub effective_load: f64,
    pub action: usize,
    pub action_probability: f64,
    pub state: u8,
    pub next_action: usize,
    pub reward: Option<f64>,
    pub epsilon: f64,
    pub known_throughput: f64,
    pub fairness: f64,
    pub network_throughput: f64,
}

/// `network.csv`: the network throughput series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRow {
    pub run: String,
    pub epoch: usize,
    pub network_throughput: f64,
}

/// `learning.csv`: the agent's view of each epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningRow {
    pub run: String,
    pub epoch: u64,
    pub node: usize,
    pub state: u8,
    pub action: usize,
    pub reward: Option<f64>,
    pub epsilon: f64,
    pub collision_prob: f64,
    pub throughput: f64,
}

/// `summary.csv`: per-node means over the summary window of each run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run: String,
    pub seed: u64,
    pub mode: Mode,
    pub node: usize,
    pub throughput: f64,
    pub collision_prob: f64,
    pub effective_load: f64,
    pub offered_load: f64,
    pub modal_action: Option<usize>,
    pub final_action: usize,
    pub network_throughput: f64,
}

/// `transmissions.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRow {
    pub run: String,
    pub time: f64,
    pub sender: usize,
    pub receiver: usize,
    pub outcome: String,
}

/// `ledgers.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub run: String,
    pub time: f64,
    pub owner: usize,
    pub epoch: u64,
    pub own_throughput: f64,
    pub neighbor: usize,
    pub neighbor_throughput: Option<f64>,
    pub heard_at_epoch: Option<u64>,
    pub reported_rate: f64,
}

/// `sweep.csv`: one row per grid point per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub series: String,
    pub load: f64,
    pub seed: u64,
    pub node: usize,
    pub throughput: f64,
    pub collision_prob: f64,
    pub effective_load: f64,
    pub offered_load: f64,
    pub modal_action: Option<usize>,
    pub network_throughput: f64,
}

/// `surface.csv`: one row per `(g14, g23)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub g14: f64,
    pub g23: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub network_throughput: f64,
    pub relative_spread: f64,
    pub fair: bool,
}

/// `degradation.csv`: one row per topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationSummaryRow {
    pub topology: String,
    pub node_count: usize,
    pub max_two_hop_degree: usize,
    pub peak_load: f64,
    pub peak_throughput: f64,
    pub check_load: f64,
    pub check_throughput: f64,
    pub sustaining: bool,
}

/// `collision.csv`: mean collision probability along each degradation curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionRow {
    pub topology: String,
    pub max_two_hop_degree: usize,
    pub load: f64,
    pub mean_collision_prob: f64,
}

/// Something [`emit_outputs`] can write.
#[derive(Debug, Clone, PartialEq)]
pub enum ResultSet {
    Runs(Vec<RunResult>),
    Sweeps(Vec<SweepTable>),
    Surface(Surface),
    Degradation(Vec<DegradationRow>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LoadThroughput,
    Convergence,
    Surface,
}

impl PlotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::LoadThroughput => "load-throughput",
            PlotKind::Convergence => "convergence",
            PlotKind::Surface => "surface",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "load-throughput" => Ok(PlotKind::LoadThroughput),
            "convergence" => Ok(PlotKind::Convergence),
            "surface" => Ok(PlotKind::Surface),
            other => Err(Error::Config(format!("unknown plot kind `{other}`"))),
        }
    }
}

pub fn epoch_rows(r: &RunResult) -> Vec<EpochRow> {
    let mut rows = Vec::new();
    for (node, series) in r.epochs.iter().enumerate() {
        for (t, e) in series.iter().enumerate() {
            let m = &e.metrics;
            rows.push(EpochRow {
                run: r.label.clone(),
                seed: r.seed,
                mode: r.mode,
                node,
                epoch: m.epoch,
                start: m.start,
                end: m.end,
                generated: m.generated,
                transmitted: m.transmitted,
                collided: m.collided,
                delivered: m.delivered,
                collision_prob: m.collision_prob,
                throughput: m.throughput,
                offered_load: m.offered_load(),
                effective_load: m.effective_load(),
                action: e.action.id(),
                action_probability: e.action.probability(),
                state: e.state.0,
                next_action: e.next_action.id(),
                reward: e.reward,
                epsilon: e.epsilon,
                known_throughput: e.known_throughput,
                fairness: e.fairness,
                network_throughput: r.network_throughput[t],
            });
        }
    }
    rows
}

pub fn network_rows(r: &RunResult) -> Vec<NetworkRow> {
    r.network_throughput
        .iter()
        .enumerate()
        .map(|(epoch, &s)| NetworkRow {
            run: r.label.clone(),
            epoch,
            network_throughput: s,
        })
        .collect()
}

pub fn learning_rows(r: &RunResult) -> Vec<LearningRow> {
    r.epochs
        .iter()
        .enumerate()
        .flat_map(|(node, series)| {
            series.iter().map(move |e| LearningRow {
                run: r.label.clone(),
                epoch: e.metrics.epoch,
                node,
                state: e.state.0,
                action: e.action.id(),
                reward: e.reward,
                epsilon: e.epsilon,
                collision_prob: e.metrics.collision_prob,
                throughput: e.metrics.throughput,
            })
        })
        .collect()
}

pub fn summary_rows(r: &RunResult) -> Vec<SummaryRow> {
    let s = &r.summary;
    (0..r.node_count)
        .map(|node| SummaryRow {
            run: r.label.clone(),
            seed: r.seed,
            mode: r.mode,
            node,
            throughput: s.throughput[node],
            collision_prob: s.collision_prob[node],
            effective_load: s.effective_load[node],
            offered_load: s.offered_load[node],
            modal_action: s.modal_action[node].map(|a| a.id()),
            final_action: r.final_actions[node].id(),
            network_throughput: s.network_throughput,
        })
        .collect()
}

fn summary_sweep_rows<'a>(series: &str, load: f64, seed: u64, s: &'a Summary) -> impl Iterator<Item = SweepRow> + 'a {
    let series = series.to_string();
    (0..s.throughput.len()).map(move |node| SweepRow {
        series: series.clone(),
        load,
        seed,
        node,
        throughput: s.throughput[node],
        collision_prob: s.collision_prob[node],
        effective_load: s.effective_load[node],
        offered_load: s.offered_load[node],
        modal_action: s.modal_action[node].map(|a| a.id()),
        network_throughput: s.network_throughput,
    })
}

pub fn sweep_rows(table: &SweepTable) -> Vec<SweepRow> {
    table
        .points
        .iter()
        .flat_map(|p| summary_sweep_rows(&table.label, p.load, p.result.seed, &p.result.summary))
        .collect()
}

pub fn surface_rows(surface: &Surface) -> Vec<SurfaceRow> {
    surface
        .iter()
        .map(|c| {
            let s = |i: usize| c.node_throughput.get(i).copied().unwrap_or(0.0);
            SurfaceRow {
                g14: c.g14,
                g23: c.g23,
                s1: s(0),
                s2: s(1),
                s3: s(2),
                s4: s(3),
                network_throughput: c.network_throughput,
                relative_spread: c.relative_spread(),
                fair: c.mean_node_throughput() > 0.0 && c.relative_spread() <= surface.fair_tolerance,
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    Ok(rows)
}

/// Groups rows by a string key, keeping first-seen order.
fn grouped<T, K: Fn(&T) -> String>(rows: &[T], key: K) -> Vec<(String, Vec<&T>)> {
    let mut order: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, Vec<&T>> = BTreeMap::new();
    for r in rows {
        let k = key(r);
        if !map.contains_key(&k) {
            order.push(k.clone());
        }
        map.entry(k).or_default().push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let v = map.remove(&k).unwrap_or_default();
            (k, v)
        })
        .collect()
}

pub fn load_throughput_svg(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    let groups = grouped(rows, |r| r.series.clone());
    let single = groups.len() == 1;
    let mut series = Vec::new();
    for (name, rs) in &groups {
        let mut points: Vec<(f64, f64)> = Vec::new();
        for r in rs {
            if !points.iter().any(|p| p.0 == r.load) {
                points.push((r.load, r.network_throughput));
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        series.push(Series {
            name: if single { "S".into() } else { name.clone() },
            points,
            dashed: false,
        });
        if single {
            for (node, nrs) in grouped(rs, |r| r.node.to_string()) {
                let mut points: Vec<(f64, f64)> = nrs.iter().map(|r| (r.load, r.throughput)).collect();
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                series.push(Series {
                    name: format!("node {node}"),
                    points,
                    dashed: true,
                });
            }
        }
    }
    Ok(line_svg(&LinePlot {
        title: "Throughput vs offered load".into(),
        x_label: "per-node offered load g (Erlang)".into(),
        y_label: "throughput (Erlang)".into(),
        series,
    }))
}

pub fn convergence_svg(rows: &[NetworkRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    let series = grouped(rows, |r| r.run.clone())
        .into_iter()
        .map(|(name, rs)| Series {
            name,
            points: rs.iter().map(|r| (r.epoch as f64, r.network_throughput)).collect(),
            dashed: false,
        })
        .collect();
    Ok(line_svg(&LinePlot {
        title: "Network throughput per epoch".into(),
        x_label: "epoch".into(),
        y_label: "S (Erlang)".into(),
        series,
    }))
}

pub fn surface_svg(rows: &[SurfaceRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut xs: Vec<f64> = rows.iter().map(|r| r.g14).collect();
    let mut ys: Vec<f64> = rows.iter().map(|r| r.g23).collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let mut values = vec![vec![f64::NAN; xs.len()]; ys.len()];
    let mut marked = Vec::new();
    for r in rows {
        let ix = xs.iter().position(|&x| x == r.g14).expect("collected above");
        let iy = ys.iter().position(|&y| y == r.g23).expect("collected above");
        values[iy][ix] = r.network_throughput;
        if r.fair {
            marked.push((ix, iy));
        }
    }
    marked.sort_unstable();
    Ok(heatmap_svg(&Heatmap {
        title: "Network throughput, g1 = g4 vs g2 = g3".into(),
        x_label: "g1 = g4".into(),
        y_label: "g2 = g3".into(),
        xs,
        ys,
        values,
        marked,
    }))
}

/// Renders a plot from a CSV written by [`emit_outputs`].
pub fn plot_csv(path: &Path, kind: PlotKind) -> Result<String> {
    match kind {
        PlotKind::LoadThroughput => load_throughput_svg(&read_csv(path)?),
        PlotKind::Convergence => convergence_svg(&read_csv(path)?),
        PlotKind::Surface => surface_svg(&read_csv(path)?),
    }
}

struct Emitter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Emitter {
    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.dir.join(name);
        write_csv(&path, rows)?;
        self.written.push(path);
        Ok(())
    }

    fn svg(&mut self, name: &str, svg: String) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, svg)?;
        self.written.push(path);
        Ok(())
    }
}

/// Writes CSV tables and plots for `set` into `out_dir`, creating it if
/// needed. Returns the written paths.
pub fn emit_outputs(set: &ResultSet, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let empty = match set {
        ResultSet::Runs(r) => r.is_empty() || r.iter().all(|r| r.epoch_rows() == 0),
        ResultSet::Sweeps(t) => t.iter().all(|t| t.points.is_empty()),
        ResultSet::Surface(s) => s.iter().next().is_none(),
        ResultSet::Degradation(d) => d.is_empty(),
    };
    if empty {
        return Err(Error::EmptyResults);
    }
    fs::create_dir_all(out_dir)?;
    let mut e = Emitter {
        dir: out_dir.to_path_buf(),
        written: Vec::new(),
    };
    match set {
        ResultSet::Runs(runs) => {
            let network: Vec<_> = runs.iter().flat_map(network_rows).collect();
            e.csv("epochs.csv", &runs.iter().flat_map(epoch_rows).collect::<Vec<_>>())?;
            e.csv("network.csv", &network)?;
            e.csv("learning.csv", &runs.iter().flat_map(learning_rows).collect::<Vec<_>>())?;
            e.csv("summary.csv", &runs.iter().flat_map(summary_rows).collect::<Vec<_>>())?;
            let tx: Vec<_> = runs
                .iter()
                .flat_map(|r| {
                    r.transmissions.iter().map(|t| TransmissionRow {
                        run: r.label.clone(),
                        time: t.start,
                        sender: t.sender,
                        receiver: t.receiver,
                        outcome: t.outcome.as_str().into(),
                    })
                })
                .collect();
            if !tx.is_empty() {
                e.csv("transmissions.csv", &tx)?;
            }
            let ledgers: Vec<_> = runs
                .iter()
                .flat_map(|r| {
                    r.ledgers.iter().map(|l| LedgerRow {
                        run: r.label.clone(),
                        time: l.time,
                        owner: l.owner,
                        epoch: l.epoch,
                        own_throughput: l.own_throughput,
                        neighbor: l.neighbor,
                        neighbor_throughput: l.neighbor_throughput,
                        heard_at_epoch: l.heard_at_epoch,
                        reported_rate: l.reported_rate,
                    })
                })
                .collect();
            if !ledgers.is_empty() {
                e.csv("ledgers.csv", &ledgers)?;
            }
            e.svg("convergence.svg", convergence_svg(&network)?)?;
        }
        ResultSet::Sweeps(tables) => {
            let rows: Vec<_> = tables.iter().flat_map(sweep_rows).collect();
            e.csv("sweep.csv", &rows)?;
            e.svg("load-throughput.svg", load_throughput_svg(&rows)?)?;
        }
        ResultSet::Surface(surface) => {
            let rows = surface_rows(surface);
            e.csv("surface.csv", &rows)?;
            e.svg("surface.svg", surface_svg(&rows)?)?;
        }
        ResultSet::Degradation(study) => {
            let summary: Vec<_> = study
                .iter()
                .map(|d| DegradationSummaryRow {
                    topology: d.label.clone(),
                    node_count: d.node_count,
                    max_two_hop_degree: d.max_two_hop_degree,
                    peak_load: d.peak_load,
                    peak_throughput: d.peak_throughput,
                    check_load: d.check_load,
                    check_throughput: d.check_throughput,
                    sustaining: d.sustaining,
                })
                .collect();
            let sweep: Vec<_> = study
                .iter()
                .flat_map(|d| {
                    d.curve
                        .iter()
                        .flat_map(|p| summary_sweep_rows(&d.label, p.load, p.seed, &p.summary).collect::<Vec<_>>())
                })
                .collect();
            let collision: Vec<_> = study
                .iter()
                .flat_map(|d| {
                    d.curve.iter().map(|p| CollisionRow {
                        topology: d.label.clone(),
                        max_two_hop_degree: d.max_two_hop_degree,
                        load: p.load,
                        mean_collision_prob: p.mean_collision_prob,
                    })
                })
                .collect();
            e.csv("degradation.csv", &summary)?;
            e.csv("sweep.csv", &sweep)?;
            e.csv("collision.csv", &collision)?;
            e.svg("load-throughput.svg", load_throughput_svg(&sweep)?)?;
        }
    }
    Ok(e.written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_kind_round_trip() {
        for k in [PlotKind::LoadThroughput, PlotKind::Convergence, PlotKind::Surface] {
            assert_eq!(k.as_str().parse::<PlotKind>().unwrap(), k);
        }
        assert!("pie".parse::<PlotKind>().is_err());
    }

    #[test]
    fn empty_inputs_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(emit_outputs(&ResultSet::Runs(vec![]), dir.path()), Err(Error::EmptyResults)));
        assert!(matches!(emit_outputs(&ResultSet::Degradation(vec![]), dir.path()), Err(Error::EmptyResults)));
        assert!(matches!(
            write_csv::<NetworkRow>(&dir.path().join("x.csv"), &[]),
            Err(Error::EmptyResults)
        ));
        assert!(!dir.path().join("x.csv").exists());
        assert!(convergence_svg(&[]).is_err());
    }

    #[test]
    fn grouping_keeps_first_seen_order() {
        let rows = ["b", "a", "b", "c"];
        let g = grouped(&rows, |r| r.to_string());
        let keys: Vec<_> = g.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["b", "a", "c"]);
        assert_eq!(g[0].1.len(), 2);
    }
}

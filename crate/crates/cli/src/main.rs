use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use drlimac::experiment::{
    degradation_study, emit_outputs, plot_csv, run_scenario, surface_sweep, sweep_load, InfoSource, Mode, PlotKind,
    ResultSet, ScenarioConfig, SweepTarget, TraceFlags,
};

#[derive(Parser)]
#[command(name = "drlimac", version, about = "Unslotted MAC simulator with learning transmit-probability agents")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of learning epochs per node.
    #[arg(long, global = true)]
    epochs: Option<u64>,
    /// Output directory (default `out`; `plot` defaults to the CSV's directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Record the transmission trace and ledger snapshots.
    #[arg(long, global = true)]
    trace: bool,
    /// Feed agents simulator ground truth instead of piggybacked reports.
    #[arg(long, global = true)]
    ground_truth_info: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run { config: PathBuf },
    /// Sweep the per-node offered load.
    Sweep {
        config: PathBuf,
        /// Loads as `start:stop:step` or a comma list.
        #[arg(long)]
        grid: String,
        /// Only drive these nodes (comma list); others keep their configured load.
        #[arg(long, value_delimiter = ',')]
        nodes: Option<Vec<usize>>,
        /// Also sweep the other mode at the same loads and seeds.
        #[arg(long)]
        both_modes: bool,
    },
    /// Tied-load ALOHA throughput surface on the 4-node line.
    Surface {
        config: PathBuf,
        #[arg(long, default_value = "0.05:0.5:0.025")]
        g14: String,
        #[arg(long, default_value = "0.05:0.5:0.025")]
        g23: String,
    },
    /// Sustaining/degrading classification over a set of topologies.
    Degrade {
        /// A JSON array of scenario configs, or a directory of config files.
        config_set: PathBuf,
        #[arg(long, default_value = "0.1,0.2,0.3,0.5,0.75,1.0")]
        grid: String,
    },
    /// Re-render a plot from a CSV written by another subcommand.
    Plot {
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    LoadThroughput,
    Convergence,
    Surface,
}

impl From<Kind> for PlotKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::LoadThroughput => PlotKind::LoadThroughput,
            Kind::Convergence => PlotKind::Convergence,
            Kind::Surface => PlotKind::Surface,
        }
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, s): (f64, f64, f64) = (start.trim().parse()?, stop.trim().parse()?, step.trim().parse()?);
            if !(s > 0.0) || b < a {
                bail!("grid `{spec}` needs start <= stop and a positive step");
            }
            let n = ((b - a) / s + 1e-9).floor() as usize;
            (0..=n).map(|i| ((a + i as f64 * s) * 1e9).round() / 1e9).collect()
        }
        [_] => spec
            .split(',')
            .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad grid value `{v}`")))
            .collect::<Result<Vec<_>>>()?,
        _ => bail!("grid `{spec}` must be `start:stop:step` or a comma list"),
    };
    if grid.is_empty() {
        bail!("grid `{spec}` is empty");
    }
    Ok(grid)
}

impl Overrides {
    fn apply(&self, mut cfg: ScenarioConfig) -> ScenarioConfig {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(epochs) = self.epochs {
            cfg.epochs = epochs;
        }
        if self.trace {
            cfg.trace = TraceFlags {
                transmissions: true,
                ledgers: true,
            };
        }
        if self.ground_truth_info {
            cfg.info = InfoSource::GroundTruth;
        }
        cfg
    }

    fn load(&self, path: &Path) -> Result<ScenarioConfig> {
        let cfg = ScenarioConfig::load(path).with_context(|| format!("reading config {}", path.display()))?;
        Ok(self.apply(cfg))
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn load_config_set(path: &Path, o: &Overrides) -> Result<Vec<ScenarioConfig>> {
    let configs = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| p.extension().is_some_and(|x| x == "json"));
        files.sort();
        files.iter().map(|p| o.load(p)).collect::<Result<Vec<_>>>()?
    } else {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let set: Vec<ScenarioConfig> =
            serde_json::from_str(&text).with_context(|| format!("parsing config set {}", path.display()))?;
        set.into_iter().map(|c| o.apply(c)).collect()
    };
    if configs.is_empty() {
        bail!("config set {} is empty", path.display());
    }
    Ok(configs)
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let o = &cli.overrides;
    match &cli.command {
        Command::Run { config } => {
            let cfg = o.load(config)?;
            let r = run_scenario(&cfg)?;
            let s = &r.summary;
            println!("{}: S = {:.4} over the last {:.0}% of epochs", r.label, s.network_throughput, 100.0 * s.fraction);
            for node in 0..r.node_count {
                println!(
                    "  node {node}: s = {:.4}  P_c = {:.3}  g* = {:.3}  modal action {}",
                    s.throughput[node],
                    s.collision_prob[node],
                    s.effective_load[node],
                    s.modal_action[node].map_or("-".into(), |a| a.id().to_string())
                );
            }
            report(&emit_outputs(&ResultSet::Runs(vec![r]), &o.out_dir())?);
        }
        Command::Sweep {
            config,
            grid,
            nodes,
            both_modes,
        } => {
            let cfg = o.load(config)?;
            let grid = parse_grid(grid)?;
            let target = nodes.clone().map_or(SweepTarget::All, SweepTarget::Nodes);
            let mut configs = vec![cfg.clone()];
            if *both_modes {
                let other = match cfg.mode {
                    Mode::AlohaBaseline => Mode::DrliMac,
                    Mode::DrliMac => Mode::AlohaBaseline,
                };
                configs.push(cfg.with_mode(other));
            }
            let mut tables = Vec::new();
            for mut c in configs {
                let mode = match c.mode {
                    Mode::AlohaBaseline => "aloha-baseline",
                    Mode::DrliMac => "drli-mac",
                };
                c.name = Some(format!("{} {mode}", c.label()));
                let t = sweep_load(&c, &grid, &target)?;
                for p in &t.points {
                    println!("{}: g = {:.3}  S = {:.4}", t.label, p.load, p.result.summary.network_throughput);
                }
                tables.push(t);
            }
            report(&emit_outputs(&ResultSet::Sweeps(tables), &o.out_dir())?);
        }
        Command::Surface { config, g14, g23 } => {
            let cfg = o.load(config)?;
            let surface = surface_sweep(&cfg, &parse_grid(g14)?, &parse_grid(g23)?)?;
            if let Some(c) = surface.network_max() {
                println!("max S = {:.4} at g1=g4={}, g2=g3={}", c.network_throughput, c.g14, c.g23);
            }
            match surface.fair_max() {
                Some(c) => println!(
                    "fair-line max s = {:.4} at g1=g4={}, g2=g3={} ({} fair cells)",
                    c.mean_node_throughput(),
                    c.g14,
                    c.g23,
                    surface.fair_line().len()
                ),
                None => println!("no cell meets the fair-line tolerance"),
            }
            report(&emit_outputs(&ResultSet::Surface(surface), &o.out_dir())?);
        }
        Command::Degrade { config_set, grid } => {
            let configs = load_config_set(config_set, o)?;
            let rows = degradation_study(&configs, &parse_grid(grid)?)?;
            for d in &rows {
                println!(
                    "{}: {} nodes, max two-hop degree {}, peak S {:.4} at g={}, S {:.4} at g={} -> {}",
                    d.label,
                    d.node_count,
                    d.max_two_hop_degree,
                    d.peak_throughput,
                    d.peak_load,
                    d.check_throughput,
                    d.check_load,
                    if d.sustaining { "sustaining" } else { "degrading" }
                );
            }
            report(&emit_outputs(&ResultSet::Degradation(rows), &o.out_dir())?);
        }
        Command::Plot { csv, kind } => {
            let kind = PlotKind::from(*kind);
            let svg = plot_csv(csv, kind).with_context(|| format!("plotting {}", csv.display()))?;
            let dir = match &o.out_dir {
                Some(d) => d.clone(),
                None => csv.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            fs::create_dir_all(&dir)?;
            let path = dir.join(format!("{}.svg", kind.as_str()));
            fs::write(&path, svg)?;
            report(&[path]);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_grid("0.5, 0.25").unwrap(), vec![0.5, 0.25]);
        assert_eq!(parse_grid("0.05:0.5:0.025").unwrap().len(), 19);
        assert!(parse_grid("0.3:0.1:0.1").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

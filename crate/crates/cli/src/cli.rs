//! Argument parsing and command dispatch.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use pstlab::dynamics::{CouplingModel, Polarization};
use pstlab::lattice::ArrayDesign;
use pstlab::tomography::records_to_csv;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::experiments::{self, ArraySource, PropagationScenario, RecordSet};
use crate::output::{pgm_heatmap, Metric, OutputDir, Quantity, RunRecord, RUN_RECORD_SCHEMA_VERSION};

pub const DEFAULT_OUT: &str = "pstlab-out";

#[derive(Debug, Parser)]
#[command(name = "pstlab", version, about = "Perfect-state-transfer waveguide simulator")]
pub struct Cli {
    /// Scenario configuration (JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true, env = "PSTLAB_OUT")]
    pub out: Option<PathBuf>,

    /// Base seed for simulated counts
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Pairs per tomography setting (0 = exact probabilities)
    #[arg(long, global = true)]
    pub shots: Option<u64>,

    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelArg>,

    /// Record wall-clock time in the run record (breaks bitwise reruns)
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Nn,
    Full,
}

impl From<ModelArg> for CouplingModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Nn => CouplingModel::NearestNeighbor,
            ModelArg::Full => CouplingModel::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolArg {
    H,
    V,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a transfer array and write its geometry
    Design {
        #[arg(long)]
        sites: Option<usize>,
        #[arg(long)]
        dmin_um: Option<f64>,
        #[arg(long)]
        a_per_mm: Option<f64>,
        #[arg(long)]
        b_per_um: Option<f64>,
    },
    /// Site intensities along the array for one input
    Propagate {
        #[arg(long, value_enum, conflicts_with = "design")]
        scenario: Option<PropagationScenario>,
        /// Design file written by `design`
        #[arg(long)]
        design: Option<PathBuf>,
        #[arg(long)]
        input: Option<usize>,
        #[arg(long, value_enum)]
        pol: Option<PolArg>,
        #[arg(long)]
        z_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Also write a PGM heatmap
        #[arg(long)]
        heatmap: bool,
    },
    /// Output distributions per polarization for each input
    TransferTable,
    /// Single-photon process tomography and compensation fit per transfer
    Qpt,
    /// Entangled-pair transfer with state tomography
    Bell,
    /// Bell transfer over a sweep of source delays
    Decohere {
        #[arg(long, value_delimiter = ',')]
        delays_um: Option<Vec<f64>>,
        #[arg(long)]
        coherence_length_um: Option<f64>,
    },
    /// Run a pinned scenario
    Scenario {
        #[arg(value_enum)]
        name: ScenarioName,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    Design,
    Fig2a,
    Fig2b,
    TransferTable,
    Qpt,
    Bell,
    Decohere,
    /// Every scenario above, each in its own subdirectory
    All,
}

impl ScenarioName {
    const EACH: [ScenarioName; 7] = [
        ScenarioName::Design,
        ScenarioName::Fig2a,
        ScenarioName::Fig2b,
        ScenarioName::TransferTable,
        ScenarioName::Qpt,
        ScenarioName::Bell,
        ScenarioName::Decohere,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ScenarioName::Design => "design",
            ScenarioName::Fig2a => "fig2a",
            ScenarioName::Fig2b => "fig2b",
            ScenarioName::TransferTable => "transfer-table",
            ScenarioName::Qpt => "qpt",
            ScenarioName::Bell => "bell",
            ScenarioName::Decohere => "decohere",
            ScenarioName::All => "all",
        }
    }
}

/// Global flags that override the configuration.
struct Overrides {
    seed: Option<u64>,
    shots: Option<u64>,
    model: Option<ModelArg>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(s) = self.seed {
            cfg.measurement.seed = s;
        }
        if let Some(s) = self.shots {
            cfg.measurement.shots = s;
        }
        if let Some(m) = self.model {
            cfg.model.coupling = m.into();
        }
    }
}

struct Run {
    out: OutputDir,
    command: String,
    cfg: ScenarioConfig,
    metrics: Vec<Metric>,
    summary: Vec<Quantity>,
}

impl Run {
    fn start(dir: &Path, command: &str, cfg: ScenarioConfig) -> CliResult<Self> {
        // design ignores the experiment sections, so `--sites 7` need not fit the default inputs
        if command == "design" {
            cfg.validate_design()?;
        } else {
            cfg.validate()?;
        }
        Ok(Self {
            out: OutputDir::create(dir)?,
            command: command.into(),
            cfg,
            metrics: Vec::new(),
            summary: Vec::new(),
        })
    }

    fn records(&mut self, sets: &[RecordSet]) -> CliResult<()> {
        for s in sets {
            self.out.write_text(&s.name, &records_to_csv(&s.records))?;
        }
        Ok(())
    }

    fn finish(self, started: Option<Instant>) -> CliResult<PathBuf> {
        let record = RunRecord {
            schema_version: RUN_RECORD_SCHEMA_VERSION,
            tool: "pstlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command,
            config: self.cfg,
            manifest: Vec::new(),
            metrics: self.metrics,
            summary: self.summary,
            wall_clock_s: started.map(|t| t.elapsed().as_secs_f64()),
        };
        self.out.finish(record)
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let started = cli.timing.then(Instant::now);
    let mut cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    let overrides = Overrides { seed: cli.seed, shots: cli.shots, model: cli.model };
    let out_dir = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    match cli.command {
        Command::Scenario { name } => {
            if name == ScenarioName::All {
                for each in ScenarioName::EACH {
                    run_scenario(each, cfg.clone(), &overrides, &out_dir.join(each.label()), started)?;
                }
                Ok(())
            } else {
                run_scenario(name, cfg, &overrides, &out_dir, started)
            }
        }
        Command::Design { sites, dmin_um, a_per_mm, b_per_um } => {
            overrides.apply(&mut cfg);
            let d = &mut cfg.design;
            d.n_sites = sites.unwrap_or(d.n_sites);
            d.d_min_um = dmin_um.unwrap_or(d.d_min_um);
            d.decay_a_per_mm = a_per_mm.unwrap_or(d.decay_a_per_mm);
            d.decay_b_per_um = b_per_um.unwrap_or(d.decay_b_per_um);
            cmd_design(cfg, &out_dir, started)
        }
        Command::Propagate { scenario, design, input, pol, z_max, steps, heatmap } => {
            overrides.apply(&mut cfg);
            let p = &mut cfg.propagation;
            p.input_site = input.unwrap_or(p.input_site);
            if let Some(pol) = pol {
                p.polarization = match pol {
                    PolArg::H => Polarization::H,
                    PolArg::V => Polarization::V,
                };
            }
            p.z_max_mm = z_max.or(p.z_max_mm);
            p.steps = steps.unwrap_or(p.steps);
            p.heatmap |= heatmap;
            let source = match (scenario, design) {
                (Some(s), _) => ArraySource::Scenario(s),
                (None, Some(path)) => ArraySource::Design(load_design(&path)?),
                (None, None) => ArraySource::Config,
            };
            if let Some(s) = scenario {
                cfg.scenario = format!("{s:?}").to_lowercase();
            }
            cmd_propagate(cfg, source, &out_dir, started)
        }
        Command::TransferTable => {
            overrides.apply(&mut cfg);
            cmd_transfer_table(cfg, &out_dir, started)
        }
        Command::Qpt => {
            overrides.apply(&mut cfg);
            cmd_qpt(cfg, &out_dir, started)
        }
        Command::Bell => {
            overrides.apply(&mut cfg);
            cmd_bell(cfg, &out_dir, started)
        }
        Command::Decohere { delays_um, coherence_length_um } => {
            overrides.apply(&mut cfg);
            if let Some(d) = delays_um {
                cfg.source.delays_um = d;
            }
            cfg.source.coherence_length_um = coherence_length_um.unwrap_or(cfg.source.coherence_length_um);
            cmd_decohere(cfg, &out_dir, started)
        }
    }
}

/// Scenario aliases pin the reference parameter sets (the config defaults)
/// plus the coupling model each one needs; global flags still apply.
fn scenario_config(name: ScenarioName, mut cfg: ScenarioConfig, overrides: &Overrides) -> ScenarioConfig {
    cfg.scenario = name.label().into();
    match name {
        ScenarioName::Fig2a | ScenarioName::Fig2b => {
            cfg.model.coupling = CouplingModel::NearestNeighbor;
            cfg.model.loss_enabled = false;
            cfg.propagation.input_site = 1;
            cfg.propagation.z_max_mm = None;
        }
        ScenarioName::TransferTable => cfg.model.coupling = CouplingModel::Full,
        _ => {}
    }
    overrides.apply(&mut cfg);
    cfg
}

fn run_scenario(
    name: ScenarioName,
    cfg: ScenarioConfig,
    overrides: &Overrides,
    out: &Path,
    started: Option<Instant>,
) -> CliResult<()> {
    let cfg = scenario_config(name, cfg, overrides);
    match name {
        ScenarioName::Design => cmd_design(cfg, out, started),
        ScenarioName::Fig2a => cmd_propagate(cfg, ArraySource::Scenario(PropagationScenario::Fig2a), out, started),
        ScenarioName::Fig2b => cmd_propagate(cfg, ArraySource::Scenario(PropagationScenario::Fig2b), out, started),
        ScenarioName::TransferTable => cmd_transfer_table(cfg, out, started),
        ScenarioName::Qpt => cmd_qpt(cfg, out, started),
        ScenarioName::Bell => cmd_bell(cfg, out, started),
        ScenarioName::Decohere => cmd_decohere(cfg, out, started),
        ScenarioName::All => unreachable!("expanded by the caller"),
    }
}

fn load_design(path: &Path) -> CliResult<ArrayDesign> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read design file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid design file {}: {e}", path.display())))
}

fn cmd_design(cfg: ScenarioConfig, out: &Path, started: Option<Instant>) -> CliResult<()> {
    let mut run = Run::start(out, "design", cfg)?;
    let (design, report) = experiments::design(&run.cfg)?;
    run.out.write_json("design.json", &design)?;
    println!("N = {}  z_PST = {:.4} mm  C_max = {:.5} /mm", report.n_sites, report.z_pst_mm, report.c_max_per_mm);
    println!("couplings (/mm): {}", fmt_list(&report.couplings_per_mm, 5));
    println!("spacings (um):   {}", fmt_list(&report.spacings_um, 4));
    run.summary = report.summary();
    run.finish(started)?;
    Ok(())
}

fn cmd_propagate(cfg: ScenarioConfig, source: ArraySource, out: &Path, started: Option<Instant>) -> CliResult<()> {
    let mut run = Run::start(out, "propagate", cfg)?;
    let (profile, report) = experiments::propagate(&run.cfg, source)?;
    run.out.write_text("profile.csv", &profile.to_csv())?;
    if run.cfg.propagation.heatmap {
        run.out.write_text("profile.pgm", &pgm_heatmap(&profile.intensities))?;
    }
    run.out.write_json("propagate.json", &report)?;
    println!(
        "{}: input {} -> {}  first peak P = {:.6} at z = {:.4} mm  final P = {:.10}",
        report.scenario,
        report.input_site,
        report.output_site,
        report.first_peak.probability,
        report.first_peak.z_mm,
        report.final_output_probability
    );
    run.metrics = report.metrics();
    run.summary = report.summary();
    run.finish(started)?;
    Ok(())
}

fn cmd_transfer_table(cfg: ScenarioConfig, out: &Path, started: Option<Instant>) -> CliResult<()> {
    let mut run = Run::start(out, "transfer-table", cfg)?;
    let table = experiments::transfer_table(&run.cfg)?;
    run.out.write_json("transfer_table.json", &table)?;
    println!("input  output  P_H(out)    P_V(out)    F_dist");
    for r in &table.rows {
        println!(
            "{:>5}  {:>6}  {:.8}  {:.8}  {:.8}",
            r.input,
            r.designed_output,
            r.designed_output_probability_h,
            r.designed_output_probability_v,
            r.distribution_fidelity
        );
    }
    run.metrics = table.metrics();
    run.summary = vec![Quantity::new("length", table.length_mm, "mm")];
    run.finish(started)?;
    Ok(())
}

fn cmd_qpt(cfg: ScenarioConfig, out: &Path, started: Option<Instant>) -> CliResult<()> {
    let mut run = Run::start(out, "qpt", cfg)?;
    let (report, sets) = experiments::qpt(&run.cfg)?;
    run.records(&sets)?;
    run.out.write_json("qpt.json", &report)?;
    println!("input  HWP (deg)   phase (deg)  F_process      F_process+comp");
    for r in &report.rows {
        println!(
            "{:>5}  {:>9.3}  {:>11.3}  {:.6}±{:.4}  {:.6}±{:.4}",
            r.input,
            r.compensation.hwp_angle_deg,
            r.compensation.phase_deg,
            r.fidelity_uncompensated.value,
            r.fidelity_uncompensated.std,
            r.fidelity_compensated.value,
            r.fidelity_compensated.std
        );
    }
    run.metrics = report.metrics();
    run.finish(started)?;
    Ok(())
}

fn cmd_bell(cfg: ScenarioConfig, out: &Path, started: Option<Instant>) -> CliResult<()> {
    let mut run = Run::start(out, "bell", cfg)?;
    let (report, sets) = experiments::bell(&run.cfg)?;
    run.records(&sets)?;
    run.out.write_json("bell.json", &report)?;
    println!("input  fidelity          similarity        purity    concurrence");
    for r in &report.rows {
        println!(
            "{:>5}  {:.6}±{:.4}  {:.6}±{:.4}  {:.6}  {:.6}",
            r.input, r.fidelity.value, r.fidelity.std, r.similarity.value, r.similarity.std, r.purity, r.concurrence
        );
    }
    run.metrics = report.metrics();
    run.finish(started)?;
    Ok(())
}

fn cmd_decohere(cfg: ScenarioConfig, out: &Path, started: Option<Instant>) -> CliResult<()> {
    let mut run = Run::start(out, "decohere", cfg)?;
    let (report, sets) = experiments::decohere(&run.cfg)?;
    run.records(&sets)?;
    run.out.write_json("decohere.json", &report)?;
    println!("delay (um)  input  purity    fidelity  similarity");
    for p in &report.points {
        for r in &p.transfers {
            println!(
                "{:>10.1}  {:>5}  {:.6}  {:.6}  {:.6}",
                p.delay_um, r.input, r.purity, r.fidelity.value, r.similarity.value
            );
        }
    }
    run.metrics = report.metrics();
    run.summary = vec![Quantity::new("coherence_length", report.coherence_length_um, "um")];
    run.finish(started)?;
    Ok(())
}

fn fmt_list(v: &[f64], digits: usize) -> String {
    v.iter().map(|x| format!("{x:.digits$}")).collect::<Vec<_>>().join(" ")
}

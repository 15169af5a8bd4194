//! `flowpath`: file-based pipeline from vehicle logs to flow fields, paths
//! and reports. Each subcommand reads artifacts from the workspace directory
//! and writes its own.

mod error;
mod render;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flowpath::evaluation::{build_report, evaluate, render_table, ReferencePath};
use flowpath::field::{detect_change, read_field, write_field, RoiFlowStore};
use flowpath::geometry::{Polygon, Polyline};
use flowpath::grouping::ChannelPartition;
use flowpath::pipeline::{
    channel_paths, field_stage, filter_stage, partition_stage, smooth_stage, PipelineConfig,
};
use flowpath::roi::RoiSpec;
use flowpath::search::{search_field, CandidatePath};
use flowpath::smoothing::SmoothedPath;
use flowpath::synth::{generate, BimodalSpec, ScenarioSpec, TraceTruth};
use flowpath::trajectory::{assemble_traces, LogRecord};

use crate::error::CliError;
use crate::render::{render_svg, Overlay};
use crate::workspace::*;

#[derive(Parser)]
#[command(
    name = "flowpath",
    version,
    about = "Flow-field path generation from vehicle trajectories"
)]
struct Cli {
    /// TOML config: stage sections plus an optional [paths] table.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, global = true)]
    workspace: Option<PathBuf>,
    /// Seed for scenario generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// ROI polygon file (JSON with a "polygon" vertex list).
    #[arg(long, global = true)]
    roi: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for the named numeric defaults.
#[derive(Args, Default)]
struct Overrides {
    /// Grid resolution for the field and the obstacle grid, meters.
    #[arg(long, global = true)]
    resolution: Option<f64>,
    /// Obstacle inflation, meters.
    #[arg(long, global = true)]
    inflation: Option<f64>,
    /// Station spacing of the lattice search, meters.
    #[arg(long, global = true)]
    station_spacing: Option<f64>,
    /// Lateral distance that makes a station distinct during NMS, meters.
    #[arg(long, global = true)]
    nms_threshold: Option<f64>,
    /// Fraction of distinct stations a candidate needs to survive NMS.
    #[arg(long, global = true)]
    nms_fraction: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(r) = self.resolution {
            cfg.field.resolution = r;
            cfg.obstacles.resolution = r;
        }
        if let Some(v) = self.inflation {
            cfg.obstacles.inflation = v;
        }
        if let Some(v) = self.station_spacing {
            cfg.search.station_spacing = v;
        }
        if let Some(v) = self.nms_threshold {
            cfg.search.nms_lateral_threshold = v;
        }
        if let Some(v) = self.nms_fraction {
            cfg.search.nms_fraction = v;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a trajectory log into traces.
    Ingest {
        /// Log file; defaults to log.jsonl in the workspace.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Reject unusable traces and attach entry/exit crossings.
    Filter {
        /// Obstacle polygons, one JSON vertex list per line.
        #[arg(long)]
        obstacles: Option<PathBuf>,
    },
    /// Refine ROI edges and split kept traces into channels.
    Partition,
    /// Rasterize every channel into the flow field.
    BuildField,
    /// Push new traces through the per-ROI FIFO and rebuild the field.
    UpdateField {
        /// Trace file (as written by `ingest`) with the new observations.
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        obstacles: Option<PathBuf>,
    },
    /// Search candidate paths on every channel of the field.
    Search,
    /// Smooth candidate paths.
    Smooth,
    /// Score smoothed paths against reference centerlines.
    Eval {
        #[arg(long)]
        references: Option<PathBuf>,
    },
    /// Compare the field with reference centerlines.
    DiffMap {
        #[arg(long)]
        references: Option<PathBuf>,
    },
    /// Generate a labelled intersection scenario.
    Synth(SynthArgs),
    /// Draw the field and paths as SVG.
    Render {
        /// Channels to draw; all when omitted.
        #[arg(long = "channel")]
        channels: Vec<u32>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Overlay reference centerlines as well.
        #[arg(long)]
        references: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// Full scenario as TOML; flags below are ignored when given.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    arms: usize,
    #[arg(long, default_value_t = 2)]
    lanes: usize,
    /// Traces per movement and lane.
    #[arg(long, default_value_t = 15)]
    traces: usize,
    #[arg(long, default_value_t = 0.2)]
    lateral_sigma: f64,
    #[arg(long, default_value_t = 0.02)]
    heading_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    fragment: f64,
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    #[arg(long, default_value_t = 0.0)]
    collide: f64,
    #[arg(long, default_value_t = 0.0)]
    reroute: f64,
    /// Arm whose first left-turn lane gets a second, inward-swung mode.
    #[arg(long)]
    bimodal_arm: Option<usize>,
    #[arg(long, default_value_t = 4.0)]
    bimodal_amplitude: f64,
}

impl SynthArgs {
    fn spec(&self, seed: u64) -> Result<ScenarioSpec, CliError> {
        if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::MissingArtifact {
                path: path.clone(),
                hint: e.to_string(),
            })?;
            let mut spec: ScenarioSpec = toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            spec.seed = seed;
            return Ok(spec);
        }
        let mut spec = ScenarioSpec::four_arm(seed, self.lanes, self.traces);
        spec.arms = self.arms;
        spec.movements
            .retain(|m| m.from_arm < self.arms && m.to_arm() < self.arms);
        spec.noise.lateral_sigma = self.lateral_sigma;
        spec.noise.heading_sigma = self.heading_sigma;
        spec.defects.fragment = self.fragment;
        spec.defects.drift = self.drift;
        spec.defects.collide = self.collide;
        spec.reroute_fraction = self.reroute;
        spec.bimodal = self.bimodal_arm.map(|from_arm| BimodalSpec {
            from_arm,
            lane: 0,
            amplitude: self.bimodal_amplitude,
        });
        Ok(spec)
    }
}

fn setup(cli: &Cli) -> Result<Workspace, CliError> {
    let file = cli.config.as_deref().map(load_config).transpose()?;
    let (mut config, file_roi, file_ws) = match file {
        Some(f) => (f.pipeline, f.roi, f.workspace),
        None => (PipelineConfig::default(), None, None),
    };
    cli.overrides.apply(&mut config);
    config.validate()?;
    Ok(Workspace {
        dir: cli
            .workspace
            .clone()
            .or(file_ws)
            .unwrap_or_else(|| PathBuf::from(".")),
        roi: cli.roi.clone().or(file_roi),
        config,
    })
}

fn load_obstacles(ws: &Workspace, path: Option<&PathBuf>) -> Result<Vec<Polygon>, CliError> {
    match path {
        Some(p) => Workspace::read_records_at(p),
        None if ws.exists(OBSTACLES) => ws.read_records(OBSTACLES),
        None => Ok(Vec::new()),
    }
}

fn load_field(ws: &Workspace) -> Result<flowpath::field::FlowField, CliError> {
    let p = ws.path(FIELD);
    let r = open(&p, "run `flowpath build-field`")?;
    read_field(r).map_err(|e| CliError::Other(format!("{}: {e}", p.display())))
}

fn load_references(ws: &Workspace, path: Option<&PathBuf>) -> Result<Vec<ReferencePath>, CliError> {
    match path {
        Some(p) => Workspace::read_records_at(p),
        None => ws.read_records(REFERENCES),
    }
}

fn write_field_artifact(
    ws: &Workspace,
    field: &flowpath::field::FlowField,
) -> Result<(), CliError> {
    Ok(write_field(ws.create(FIELD)?, field)?)
}

fn partition_of(ws: &Workspace) -> Result<ChannelPartition, CliError> {
    Ok(ChannelPartition {
        channels: ws.read_records(PARTITION)?,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ws = setup(&cli)?;
    let cfg = &ws.config;
    match &cli.command {
        Command::Ingest { log } => {
            let records: Vec<LogRecord> = match log {
                Some(p) => Workspace::read_records_at(p)?,
                None => ws.read_records(LOG)?,
            };
            let traces = assemble_traces(records)?;
            ws.write_trace_set(TRACES, &traces)?;
            println!("ingest: {} traces", traces.len());
        }
        Command::Filter { obstacles } => {
            let traces = ws.read_trace_set(TRACES)?;
            let roi = ws.load_roi()?;
            let polys = load_obstacles(&ws, obstacles.as_ref())?;
            let out = filter_stage(&traces, &roi, &polys, cfg)?;
            ws.write_trace_set(KEPT, &out.kept)?;
            ws.write_records(REJECTS, &out.rejected)?;
            println!(
                "filter: kept {}, rejected {}",
                out.kept.len(),
                out.rejected.len()
            );
        }
        Command::Partition => {
            let kept = ws.read_trace_set(KEPT)?;
            let roi = ws.load_roi()?;
            let (refined, partition) = partition_stage(&kept, &roi, cfg)?;
            ws.write_json(REFINED_ROI, &refined)?;
            ws.write_records(PARTITION, &partition.channels)?;
            println!("partition: {} channels", partition.len());
        }
        Command::BuildField => {
            let kept = ws.read_trace_set(KEPT)?;
            let partition = partition_of(&ws)?;
            let field = field_stage(&partition, &kept, cfg)?;
            write_field_artifact(&ws, &field)?;
            println!(
                "build-field: {} channels, {} cells",
                field.channels().len(),
                field.total_cells()
            );
        }
        Command::UpdateField { traces, obstacles } => {
            let roi = ws.load_roi()?;
            let mut store = RoiFlowStore::new(
                roi.clone(),
                cfg.field.fifo_capacity,
                cfg.grid()?,
                cfg.grouping.clone(),
            )?;
            let previous = if ws.exists(FIFO) {
                ws.read_trace_set(FIFO)?
            } else {
                ws.read_trace_set(KEPT)?
            };
            store.update_fifo(&previous)?;
            let incoming = Workspace::read_trace_set_at(traces)?;
            let polys = load_obstacles(&ws, obstacles.as_ref())?;
            let filtered = filter_stage(&incoming, &roi, &polys, cfg)?;
            store.update_fifo(&filtered.kept)?;
            ws.write_trace_set(FIFO, &store.queued_traces())?;
            ws.write_json(REFINED_ROI, store.refined_roi())?;
            ws.write_records(PARTITION, &store.partition().channels)?;
            write_field_artifact(&ws, store.field())?;
            println!(
                "update-field: {} new ({} rejected), queue {} of {}, {} channels",
                filtered.kept.len(),
                filtered.rejected.len(),
                store.queue().count(),
                cfg.field.fifo_capacity,
                store.field().channels().len()
            );
        }
        Command::Search => {
            let field = load_field(&ws)?;
            let outcome = search_field(&field, &cfg.search);
            ws.write_records(CANDIDATES, &outcome.candidates)?;
            println!("search: {} candidates", outcome.candidates.len());
            if !outcome.failures.is_empty() {
                return Err(CliError::from_failures("search", &outcome.failures));
            }
        }
        Command::Smooth => {
            let candidates: Vec<CandidatePath> = ws.read_records(CANDIDATES)?;
            let (smoothed, failures) = smooth_stage(&candidates, &cfg.smoothing);
            ws.write_records(SMOOTHED, &smoothed)?;
            println!("smooth: {} paths", smoothed.len());
            if !failures.is_empty() {
                return Err(CliError::from_failures("smoothing", &failures));
            }
        }
        Command::Eval { references } => {
            let smoothed: Vec<SmoothedPath> = ws.read_records(SMOOTHED)?;
            let refs = load_references(&ws, references.as_ref())?;
            let (records, unpaired) = evaluate(&channel_paths(&smoothed), &refs, &cfg.eval);
            for (c, e) in &unpaired {
                log::warn!("channel {c}: {e}");
            }
            let report = build_report(&records, &cfg.eval);
            let table = render_table(&report);
            ws.write_records(METRICS, &records)?;
            ws.write_text(REPORT, &table)?;
            print!("{table}");
            if records.is_empty() && !smoothed.is_empty() {
                return Err(CliError::from_failures("eval", &unpaired));
            }
        }
        Command::DiffMap { references } => {
            let field = load_field(&ws)?;
            let refs: Vec<Polyline> = load_references(&ws, references.as_ref())?
                .into_iter()
                .map(|r| r.polyline)
                .collect();
            let report = detect_change(&field, &refs, &cfg.change)?;
            ws.write_json(CHANGE, &report)?;
            println!(
                "diff-map: divergence {:.3} over {} cells, {}",
                report.divergence_score,
                report.evaluated_cells,
                if report.triggered {
                    "map update triggered"
                } else {
                    "no update"
                }
            );
        }
        Command::Synth(args) => {
            let spec = args.spec(cli.seed.unwrap_or(0))?;
            let sc = generate(&spec)?;
            ws.write_records(LOG, &sc.log)?;
            ws.write_records(TRUTH, &sc.truth.traces)?;
            let refs: Vec<ReferencePath> = sc
                .truth
                .references
                .iter()
                .map(|r| r.to_reference_path())
                .collect();
            ws.write_records(REFERENCES, &refs)?;
            ws.write_json(ROI, &sc.truth.roi)?;
            ws.write_records(OBSTACLES, &sc.truth.obstacles)?;
            let defects = sc
                .truth
                .traces
                .iter()
                .filter(|t: &&TraceTruth| t.defect.is_some())
                .count();
            println!(
                "synth: {} traces ({} with defects), {} records, {} expected channels",
                sc.truth.traces.len(),
                defects,
                sc.log.len(),
                sc.truth.channel_topology().len()
            );
        }
        Command::Render {
            channels,
            output,
            references,
        } => {
            let field = load_field(&ws)?;
            let roi: Option<RoiSpec> = if ws.exists(REFINED_ROI) {
                Some(ws.read_json(REFINED_ROI)?)
            } else {
                ws.load_roi().ok()
            };
            let refs = match references {
                Some(p) => Workspace::read_records_at::<ReferencePath>(p)?,
                None => Vec::new(),
            };
            let paths: Vec<(u32, Polyline)> = if ws.exists(SMOOTHED) {
                ws.read_records::<SmoothedPath>(SMOOTHED)?
                    .into_iter()
                    .map(|p| (p.channel, p.polyline))
                    .collect()
            } else if ws.exists(CANDIDATES) {
                ws.read_records::<CandidatePath>(CANDIDATES)?
                    .into_iter()
                    .map(|p| (p.channel, p.polyline))
                    .collect()
            } else {
                Vec::new()
            };
            let mut overlays: Vec<Overlay<'_>> = refs
                .iter()
                .map(|r| Overlay {
                    line: &r.polyline,
                    color: "#555555",
                    width: 1.0,
                })
                .collect();
            overlays.extend(
                paths
                    .iter()
                    .filter(|(c, _)| channels.is_empty() || channels.contains(c))
                    .map(|(_, l)| Overlay {
                        line: l,
                        color: "black",
                        width: 2.0,
                    }),
            );
            let svg = render_svg(
                &field,
                channels,
                roi.as_ref().map(|r| r.polygon()),
                &overlays,
            );
            match output {
                Some(p) => std::fs::write(p, &svg)?,
                None => ws.write_text(SVG, &svg)?,
            }
            println!("render: {} cells drawn", svg.matches("<rect x").count());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            e.exit_code()
        }
    }
}

//! Artifact files of a workspace directory and config resolution.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use flowpath::io::{read_jsonl, read_traces, write_jsonl, write_traces};
use flowpath::pipeline::PipelineConfig;
use flowpath::roi::RoiSpec;
use flowpath::trajectory::TraceSet;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

pub const LOG: &str = "log.jsonl";
pub const TRACES: &str = "traces.jsonl";
pub const KEPT: &str = "kept.jsonl";
pub const REJECTS: &str = "rejects.jsonl";
pub const OBSTACLES: &str = "obstacles.jsonl";
pub const ROI: &str = "roi.json";
pub const REFINED_ROI: &str = "refined_roi.json";
pub const PARTITION: &str = "partition.jsonl";
pub const FIELD: &str = "field.txt";
pub const FIFO: &str = "fifo.jsonl";
pub const CANDIDATES: &str = "candidates.jsonl";
pub const SMOOTHED: &str = "smoothed.jsonl";
pub const REFERENCES: &str = "references.jsonl";
pub const TRUTH: &str = "truth.jsonl";
pub const METRICS: &str = "metrics.jsonl";
pub const REPORT: &str = "report.txt";
pub const CHANGE: &str = "change.json";
pub const SVG: &str = "field.svg";

pub struct Workspace {
    pub dir: PathBuf,
    pub roi: Option<PathBuf>,
    pub config: PipelineConfig,
}

/// Which subcommand produces each artifact, for error hints.
fn producer(name: &str) -> &'static str {
    match name {
        LOG | TRUTH | REFERENCES | ROI | OBSTACLES => "run `flowpath synth` or provide the file",
        TRACES => "run `flowpath ingest`",
        KEPT | REJECTS => "run `flowpath filter`",
        PARTITION | REFINED_ROI => "run `flowpath partition`",
        FIELD => "run `flowpath build-field`",
        CANDIDATES => "run `flowpath search`",
        SMOOTHED => "run `flowpath smooth`",
        _ => "produce it with an earlier subcommand",
    }
}

pub fn open(path: &Path, hint: &str) -> Result<BufReader<File>, CliError> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(CliError::MissingArtifact {
            path: path.to_owned(),
            hint: hint.to_owned(),
        }),
        Err(e) => Err(CliError::Other(format!("{}: {e}", path.display()))),
    }
}

fn with_path<T>(path: &Path, r: flowpath::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Other(m) => CliError::Other(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl Workspace {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn reader(&self, name: &str) -> Result<(PathBuf, BufReader<File>), CliError> {
        let p = self.path(name);
        let r = open(&p, producer(name))?;
        Ok((p, r))
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        fs::create_dir_all(&self.dir)?;
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    pub fn read_records<T: DeserializeOwned>(&self, name: &str) -> Result<Vec<T>, CliError> {
        let (p, r) = self.reader(name)?;
        with_path(&p, read_jsonl(r))
    }

    pub fn read_records_at<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
        with_path(
            path,
            read_jsonl(open(path, "file given on the command line")?),
        )
    }

    pub fn write_records<T: Serialize>(&self, name: &str, items: &[T]) -> Result<(), CliError> {
        let w = self.create(name)?;
        Ok(write_jsonl(w, items)?)
    }

    pub fn read_trace_set(&self, name: &str) -> Result<TraceSet, CliError> {
        let (p, r) = self.reader(name)?;
        with_path(&p, read_traces(r))
    }

    pub fn read_trace_set_at(path: &Path) -> Result<TraceSet, CliError> {
        with_path(
            path,
            read_traces(open(path, "file given on the command line")?),
        )
    }

    pub fn write_trace_set(&self, name: &str, traces: &TraceSet) -> Result<(), CliError> {
        Ok(write_traces(self.create(name)?, traces)?)
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T, CliError> {
        let (p, r) = self.reader(name)?;
        serde_json::from_reader(r).map_err(|e| CliError::Other(format!("{}: {e}", p.display())))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Other(e.to_string()))?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir)?;
        Ok(fs::write(self.path(name), text)?)
    }

    /// The ROI from `--roi`, the config, or the workspace, in that order.
    pub fn load_roi(&self) -> Result<RoiSpec, CliError> {
        let path = self.roi.clone().unwrap_or_else(|| self.path(ROI));
        let r = open(&path, "pass --roi <path> or run `flowpath synth`")?;
        serde_json::from_reader(r).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).exists()
    }
}

/// Config file contents: an optional `[paths]` table plus the stage sections.
pub struct ConfigFile {
    pub roi: Option<PathBuf>,
    pub workspace: Option<PathBuf>,
    pub pipeline: PipelineConfig,
}

/// Parses a TOML config. Relative paths resolve against the file's directory.
pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingArtifact {
            path: path.to_owned(),
            hint: "config file given by --config".into(),
        },
        _ => CliError::Other(format!("{}: {e}", path.display())),
    })?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut roi = None;
    let mut workspace = None;
    if let Some(paths) = table.remove("paths") {
        let toml::Value::Table(paths) = paths else {
            return Err(CliError::Config("[paths] must be a table".into()));
        };
        for (k, v) in paths {
            let Some(s) = v.as_str() else {
                return Err(CliError::Config(format!("paths.{k} must be a string")));
            };
            let p = base.join(s);
            match k.as_str() {
                "roi" => roi = Some(p),
                "workspace" => workspace = Some(p),
                _ => return Err(CliError::Config(format!("unknown key paths.{k}"))),
            }
        }
    }
    let pipeline: PipelineConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(ConfigFile {
        roi,
        workspace,
        pipeline,
    })
}

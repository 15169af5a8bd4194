use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use flowpath::evaluation::{MetricRecord, ReferencePath, TurnType};
use flowpath::field::{write_field, ChannelField, FlowField};
use flowpath::geometry::{GridFrame, Polyline, Vec2};
use flowpath::grouping::Channel;
use flowpath::io::read_jsonl;
use flowpath::smoothing::SmoothedPath;
use flowpath::synth::TraceTruth;
use tempfile::TempDir;

fn flowpath(ws: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowpath"))
        .arg("--workspace")
        .arg(ws)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(ws: &Path, args: &[&str]) -> String {
    let out = flowpath(ws, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn records<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    read_jsonl(fs::File::open(path).map(std::io::BufReader::new).unwrap()).unwrap()
}

const STAGES: [&str; 8] = [
    "ingest",
    "filter",
    "partition",
    "build-field",
    "search",
    "smooth",
    "eval",
    "diff-map",
];

fn pipeline(ws: &Path, seed: &str) {
    ok(
        ws,
        &[
            "synth",
            "--seed",
            seed,
            "--lanes",
            "1",
            "--traces",
            "8",
            "--drift",
            "0.05",
            "--collide",
            "0.05",
        ],
    );
    for s in STAGES {
        ok(ws, &[s]);
    }
    ok(ws, &["render"]);
}

#[test]
fn full_pipeline_on_synthetic_scenario() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    pipeline(ws, "4");
    for f in [
        "log.jsonl",
        "truth.jsonl",
        "references.jsonl",
        "roi.json",
        "obstacles.jsonl",
        "traces.jsonl",
        "kept.jsonl",
        "rejects.jsonl",
        "refined_roi.json",
        "partition.jsonl",
        "field.txt",
        "candidates.jsonl",
        "smoothed.jsonl",
        "metrics.jsonl",
        "report.txt",
        "change.json",
        "field.svg",
    ] {
        assert!(ws.join(f).exists(), "{f} missing");
    }

    let truth: Vec<TraceTruth> = records(&ws.join("truth.jsonl"));
    let expected: BTreeSet<(usize, usize, usize)> = truth
        .iter()
        .filter(|t| t.defect.is_none())
        .map(|t| (t.movement.from_arm, t.to_arm, t.lane))
        .collect();
    let channels: Vec<Channel> = records(&ws.join("partition.jsonl"));
    assert_eq!(expected.len(), 12);
    assert_eq!(channels.len(), expected.len());
    let got: BTreeSet<(usize, usize)> = channels
        .iter()
        .map(|c| (c.goal.g_in, c.goal.g_out))
        .collect();
    assert_eq!(got, expected.iter().map(|t| (t.0, t.1)).collect());

    let rejects = fs::read_to_string(ws.join("rejects.jsonl"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rejects, truth.iter().filter(|t| t.defect.is_some()).count());

    let metrics: Vec<MetricRecord> = records(&ws.join("metrics.jsonl"));
    assert!(metrics.iter().filter(|m| m.rank == 0).count() >= 12);
    for m in metrics.iter().filter(|m| m.rank == 0) {
        let limit = if m.turn == TurnType::Straight {
            0.5
        } else {
            0.8
        };
        assert!(m.ade < limit, "{m:?}");
    }
    let report = fs::read_to_string(ws.join("report.txt")).unwrap();
    assert!(report.starts_with("turn"));
    assert_eq!(report.lines().count(), 4);

    let change: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.join("change.json")).unwrap()).unwrap();
    assert_eq!(change["triggered"], false);
    assert!(fs::read_to_string(ws.join("field.svg"))
        .unwrap()
        .starts_with("<svg"));
}

fn snapshot(ws: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(ws)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| {
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    pipeline(a.path(), "9");
    pipeline(b.path(), "9");
    let first = snapshot(a.path());
    assert_eq!(first, snapshot(b.path()));
    // re-running every stage in place reproduces the same bytes
    for s in STAGES {
        ok(a.path(), &[s]);
    }
    ok(a.path(), &["render"]);
    assert_eq!(first, snapshot(a.path()));
}

#[test]
fn eval_of_identical_paths_is_all_zeros() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    let line = Polyline::new(vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(20.0, 0.0),
        Vec2::new(40.0, 5.0),
        Vec2::new(70.0, 5.0),
    ])
    .unwrap();
    let smoothed = SmoothedPath {
        channel: 3,
        polyline: line.clone(),
        offsets: vec![0.0; 4],
        max_curvature: 0.0,
        max_deviation: 0.0,
        objective: 0.0,
    };
    let reference = ReferencePath {
        entry: "lane-a".into(),
        turn: TurnType::Straight,
        polyline: line,
    };
    fs::write(
        ws.join("smoothed.jsonl"),
        serde_json::to_string(&smoothed).unwrap() + "\n",
    )
    .unwrap();
    fs::write(
        ws.join("references.jsonl"),
        serde_json::to_string(&reference).unwrap() + "\n",
    )
    .unwrap();
    let out = ok(ws, &["eval"]);
    let metrics: Vec<MetricRecord> = records(&ws.join("metrics.jsonl"));
    assert_eq!(metrics.len(), 1);
    let m = &metrics[0];
    assert_eq!(m.reference, "lane-a");
    assert!(m.ade < 1e-12 && m.mde < 1e-12);
    for (_, de) in &m.de {
        assert!(de.unwrap() < 1e-12);
    }
    let row = out.lines().find(|l| l.starts_with("straight")).unwrap();
    let values: Vec<&str> = row.split_whitespace().skip(2).collect();
    // single candidate: averages are zero, deviations absent
    assert_eq!(values.iter().filter(|v| **v == "0.000").count(), 5);
    assert_eq!(values.iter().filter(|v| **v == "-").count(), 5);
}

#[test]
fn search_on_empty_field_lists_every_channel() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    ok(
        ws,
        &["synth", "--seed", "2", "--lanes", "1", "--traces", "4"],
    );
    for s in ["ingest", "filter", "partition"] {
        ok(ws, &[s]);
    }
    let channels: Vec<Channel> = records(&ws.join("partition.jsonl"));
    let empty = FlowField::new(
        GridFrame::with_resolution(0.2).unwrap(),
        channels
            .iter()
            .map(|c| ChannelField::new(c, BTreeMap::new()))
            .collect(),
    );
    write_field(fs::File::create(ws.join("field.txt")).unwrap(), &empty).unwrap();
    let out = flowpath(ws, &["search"]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("NoPath"), "{err}");
    let ids: Vec<String> = channels.iter().map(|c| c.id.to_string()).collect();
    assert!(
        err.contains(&format!("channels: {}", ids.join(", "))),
        "{err}"
    );
}

#[test]
fn missing_artifacts_exit_2() {
    let dir = TempDir::new().unwrap();
    for stage in [
        "ingest",
        "filter",
        "partition",
        "build-field",
        "search",
        "smooth",
        "eval",
        "diff-map",
        "render",
    ] {
        let out = flowpath(dir.path(), &[stage]);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{stage}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stderr).contains("missing-artifact"));
    }
}

#[test]
fn config_violations_exit_3() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    let out = flowpath(ws, &["--nms-fraction", "1.5", "search"]);
    assert_eq!(out.status.code(), Some(3));
    let out = flowpath(ws, &["--resolution", "0", "build-field"]);
    assert_eq!(out.status.code(), Some(3));

    for (name, text) in [
        ("neg.toml", "[search]\nstation_spacing = -1.0\n"),
        ("unknown.toml", "[bogus]\nx = 1\n"),
        ("typo.toml", "[paths]\nroi = 3\n"),
        ("syntax.toml", "[search\n"),
    ] {
        let p = ws.join(name);
        fs::write(&p, text).unwrap();
        let out = flowpath(ws, &["--config", p.to_str().unwrap(), "search"]);
        assert_eq!(
            out.status.code(),
            Some(3),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn config_file_paths_and_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("pipeline.toml");
    fs::write(&cfg, "[paths]\nworkspace = \"run\"\n\n[field]\nresolution = 0.4\n\n[search]\nstation_spacing = 4.0\n").unwrap();
    let c = cfg.to_str().unwrap();
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_flowpath"))
            .arg("--config")
            .arg(c)
            .args(args)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run(&["synth", "--seed", "1", "--lanes", "1", "--traces", "4"]);
    for s in ["ingest", "filter", "partition", "build-field"] {
        run(&[s]);
    }
    let ws = dir.path().join("run");
    let field = fs::read_to_string(ws.join("field.txt")).unwrap();
    assert!(field.lines().any(|l| l == "resolution 0.4"));
    run(&["--resolution", "0.5", "build-field"]);
    let field = fs::read_to_string(ws.join("field.txt")).unwrap();
    assert!(field.lines().any(|l| l == "resolution 0.5"));
}

#[test]
fn update_field_keeps_a_bounded_queue() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path().join("ws");
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[field]\nfifo_capacity = 30\n").unwrap();
    let c = cfg.to_str().unwrap();
    ok(
        &ws,
        &["synth", "--seed", "5", "--lanes", "1", "--traces", "4"],
    );
    for s in ["ingest", "filter", "partition", "build-field"] {
        ok(&ws, &["--config", c, s]);
    }
    let other = dir.path().join("other");
    ok(
        &other,
        &["synth", "--seed", "6", "--lanes", "1", "--traces", "4"],
    );
    ok(&other, &["ingest"]);
    let traces = other.join("traces.jsonl");
    let out = ok(
        &ws,
        &[
            "--config",
            c,
            "update-field",
            "--traces",
            traces.to_str().unwrap(),
        ],
    );
    assert!(out.contains("queue 30 of 30"), "{out}");
    assert_eq!(
        fs::read_to_string(ws.join("fifo.jsonl"))
            .unwrap()
            .lines()
            .count(),
        30
    );
    let channels: Vec<Channel> = records(&ws.join("partition.jsonl"));
    let members: usize = channels.iter().map(|c| c.members.len()).sum();
    assert_eq!(members, 30);
    ok(&ws, &["search"]);
}

#[test]
fn diff_map_flags_rerouted_traffic() {
    let dir = TempDir::new().unwrap();
    let spec = |fraction: f64| {
        format!(
            "lanes = 2\ntraces_per_movement = 10\nreroute_fraction = {fraction}\n\
             movements = [{{ from_arm = 0, turn = \"straight\" }}, {{ from_arm = 1, turn = \"straight\" }}, \
             {{ from_arm = 2, turn = \"straight\" }}, {{ from_arm = 3, turn = \"straight\" }}]\n"
        )
    };
    let mut triggered = Vec::new();
    for fraction in [0.0, 1.0] {
        let ws = dir.path().join(format!("f{fraction}"));
        fs::create_dir_all(&ws).unwrap();
        let p = ws.join("spec.toml");
        fs::write(&p, spec(fraction)).unwrap();
        ok(
            &ws,
            &["--seed", "3", "synth", "--spec", p.to_str().unwrap()],
        );
        for s in ["ingest", "filter", "partition", "build-field", "diff-map"] {
            ok(&ws, &[s]);
        }
        let change: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(ws.join("change.json")).unwrap()).unwrap();
        triggered.push(change["triggered"].as_bool().unwrap());
    }
    assert_eq!(triggered, [false, true]);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dualgrasp::cli::RunManifest;
use dualgrasp::dataset::read_records;
use dualgrasp::ddpm::AffordanceState;
use dualgrasp::symmetry::SymmetryReport;

fn dualgrasp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualgrasp"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("DHG_TTA_STEPS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = dualgrasp(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(out: &Path) -> RunManifest {
    let text = std::fs::read_to_string(dualgrasp::cli::manifest_path(out)).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// One small fixture object with two synthetic right grasps.
fn fixture(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let fx = dir.join("fx");
    ok(&[
        "fixture",
        "export",
        "--out",
        s(&fx),
        "--objects",
        "1",
        "--grasps",
        "2",
        "--points",
        "1024",
    ]);
    (
        fx.join("objects/sphere_s.obj"),
        fx.join("grasps.jsonl"),
        fx.join("parts/sphere_s.json"),
    )
}

#[test]
fn symmetry_report_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (obj, _, _) = fixture(dir.path());
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    ok(&[
        "symmetry",
        "--object",
        s(&obj),
        "--points",
        "1024",
        "--out",
        s(&a),
    ]);
    ok(&[
        "--threads",
        "1",
        "symmetry",
        "--object",
        s(&obj),
        "--points",
        "1024",
        "--out",
        s(&b),
    ]);
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let report: SymmetryReport = serde_json::from_slice(&ta).unwrap();
    assert!(report.chamfer.iter().all(|c| *c >= 0.0));
    let m = manifest(&a);
    assert_eq!(m.command, "symmetry");
    assert_eq!(m.config_digest.len(), 64);
}

#[test]
fn missing_object_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dualgrasp(&[
        "symmetry",
        "--object",
        "/no/such/mesh.obj",
        "--out",
        s(&dir.path().join("x.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/mesh.obj"));
    let out = dualgrasp(&["symmetry", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_grasp_file_gives_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let (obj, _, _) = fixture(dir.path());
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = dir.path().join("dual.jsonl");
    ok(&[
        "symopt",
        "--object",
        s(&obj),
        "--points",
        "1024",
        "--grasps",
        s(&empty),
        "--out",
        s(&out),
    ]);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
    assert_eq!(manifest(&out).counts["proposals"], 0);
}

#[test]
fn bad_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (obj, grasps, _) = fixture(dir.path());
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[tta]\nstepz = 3\n").unwrap();
    let out = dualgrasp(&[
        "symopt",
        "--object",
        s(&obj),
        "--grasps",
        s(&grasps),
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("o.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stepz"));
}

#[test]
fn pipeline_from_single_hand_records_to_refined_grasps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (obj, grasps, parts) = fixture(d);
    let pts = ["--points", "1024"];

    let dual = d.join("dual.jsonl");
    ok(&[
        &[
            "symopt",
            "--object",
            s(&obj),
            "--grasps",
            s(&grasps),
            "--out",
            s(&dual),
        ][..],
        &pts,
    ]
    .concat());
    let m = manifest(&dual);
    assert_eq!(m.counts["proposals"], 4);
    let records = read_records(&dual).unwrap();
    assert!(records.errors.is_empty());
    assert_eq!(records.records.len(), m.counts["optimized"]);
    assert!(!records.records.is_empty());
    for r in &records.records {
        assert_eq!(r.object, "sphere_s");
        assert!(r.contact.is_some());
        assert!(r.provenance.symmetry.is_some());
    }

    let metrics = d.join("metrics.json");
    ok(&[
        &[
            "metrics",
            "--object",
            s(&obj),
            "--grasps",
            s(&dual),
            "--out",
            s(&metrics),
        ][..],
        &pts,
    ]
    .concat());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert!(v.is_object());

    let labeled = d.join("labeled.jsonl");
    ok(&[
        "label",
        "--grasps",
        s(&dual),
        "--parts",
        s(&parts),
        "--out",
        s(&labeled),
    ]);
    let lab = read_records(&labeled).unwrap().records;
    assert!(lab.iter().all(|r| r.label.is_some()));
    assert_eq!(manifest(&labeled).counts["labeled"], lab.len());

    let balanced = d.join("balanced.jsonl");
    ok(&["balance", "--in", s(&labeled), "--out", s(&balanced)]);
    assert!(read_records(&balanced).unwrap().records.len() <= lab.len());

    let den = d.join("den.json");
    let cfg = d.join("small.toml");
    std::fs::write(&cfg, "[ddpm]\nsteps = 50\n").unwrap();
    ok(&[
        "train-dirs",
        "--grasps",
        s(&dual),
        "--config",
        s(&cfg),
        "--iters",
        "30",
        "--hidden",
        "8",
        "--out",
        s(&den),
    ]);
    let dirs = d.join("dirs.jsonl");
    ok(&[
        "sample-dirs",
        "--schedule",
        s(&cfg),
        "--denoiser",
        s(&den),
        "--count",
        "1",
        "--seed",
        "3",
        "--out",
        s(&dirs),
    ]);
    let again = d.join("dirs2.jsonl");
    ok(&[
        "sample-dirs",
        "--schedule",
        s(&cfg),
        "--denoiser",
        s(&den),
        "--count",
        "1",
        "--seed",
        "3",
        "--out",
        s(&again),
    ]);
    assert_eq!(
        std::fs::read(&dirs).unwrap(),
        std::fs::read(&again).unwrap()
    );
    let state: AffordanceState =
        serde_json::from_str(std::fs::read_to_string(&dirs).unwrap().trim()).unwrap();
    assert_eq!(state.len(), 12);
    // a schedule that does not match the trained one is an input error
    let out = dualgrasp(&[
        "sample-dirs",
        "--denoiser",
        s(&den),
        "--out",
        s(&d.join("bad.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let refined = d.join("refined.jsonl");
    let short = d.join("short.toml");
    std::fs::write(&short, "[tta]\nsteps = 10\n").unwrap();
    ok(&[
        &[
            "refine",
            "--object",
            s(&obj),
            "--grasps",
            s(&dual),
            "--dirs",
            s(&dirs),
            "--config",
            s(&short),
            "--out",
            s(&refined),
        ][..],
        &pts,
    ]
    .concat());
    let out = read_records(&refined).unwrap().records;
    assert_eq!(out.len(), records.records.len());
    for r in &out {
        let t = r.provenance.tta.as_ref().unwrap();
        assert_eq!(t.steps, 10);
        assert!(t.energy_tail.windows(2).all(|w| w[1] <= w[0]));
    }

    let scene = d.join("scene.obj");
    ok(&[
        &[
            "scene",
            "--object",
            s(&obj),
            "--grasps",
            s(&refined),
            "--out",
            s(&scene),
        ][..],
        &pts,
    ]
    .concat());
    let text = std::fs::read_to_string(&scene).unwrap();
    assert!(
        text.contains("o right_hand") && text.contains("o left_hand"),
        "{}",
        &text[..200.min(text.len())]
    );
}

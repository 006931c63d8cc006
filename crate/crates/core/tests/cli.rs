use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use seaclone::demo::{self, SceneConfig};
use seaclone::model::{Annotation, BBox, CategoryId, DatasetManifest, ImageEntry};

fn seaclone(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seaclone"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = seaclone(out, args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Demo fixture plus a crop directory harvested from it.
fn fixture(root: &Path) -> (PathBuf, PathBuf) {
    let manifest =
        demo::write_dataset(&root.join("fixture"), 12, &SceneConfig::default(), 7).unwrap();
    let objects = root.join("objects");
    ok(
        &objects,
        &[
            "crop-objects",
            "--manifest",
            s(&manifest),
            "--count",
            "seaurchin=6",
            "--count",
            "seacucumber=2",
            "--count",
            "scallop=2",
        ],
    );
    (manifest, objects)
}

fn synthesize(out: &Path, manifest: &Path, objects: &Path, seed: &str) -> String {
    ok(
        out,
        &[
            "--seed",
            seed,
            "synthesize",
            "--manifest",
            s(manifest),
            "--objects",
            s(objects),
            "--target",
            "seaurchin=40",
            "--target",
            "seacucumber=12",
            "--target",
            "scallop=8",
        ],
    )
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(tree(&p));
        } else {
            out.push((
                p.strip_prefix(dir).unwrap_or(&p).to_path_buf(),
                fs::read(&p).unwrap(),
            ));
        }
    }
    out.sort();
    out
}

#[test]
fn perfect_detections_score_one() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = demo::write_dataset(tmp.path(), 5, &SceneConfig::default(), 1).unwrap();
    let report = tmp.path().join("eval.json");
    let stdout = ok(
        tmp.path(),
        &[
            "eval",
            "--gt",
            s(&manifest),
            "--dets",
            s(&manifest),
            "--report",
            s(&report),
        ],
    );
    assert!(
        stdout.lines().any(|l| l.trim() == "mAP50 = 1.0"),
        "{stdout}"
    );
    let v = json(&report);
    assert_eq!(v["mAP50"], 1.0);
    assert_eq!(v["iou_threshold"], 0.5);
    assert!(v["per_category"].is_object());
}

#[test]
fn runtime_errors_are_json_with_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = seaclone(
        tmp.path(),
        &["stats", "--manifest", "/nonexistent/manifest.json"],
    );
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "io");
    assert!(v["message"].as_str().unwrap().contains("nonexistent"));
}

#[test]
fn usage_errors_are_json_with_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = seaclone(tmp.path(), &["synthesize", "--target", "seaurchin"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "usage");
}

#[test]
fn seven_block_backbone_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = seaclone(tmp.path(), &["describe-net", "--blocks", "2,2,2,1"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "invalid_network");
    assert!(ok(tmp.path(), &["describe-net"]).contains("391104"));
}

#[test]
fn stats_reports_relative_area() {
    let tmp = tempfile::tempdir().unwrap();
    let mut m = DatasetManifest::new(vec!["obj".into()]);
    m.images.push(ImageEntry {
        id: 1,
        file: "a.png".into(),
        width: 512,
        height: 512,
    });
    m.annotations.push(Annotation::new(
        1,
        BBox::new(3.0, 4.0, 44.0, 28.0, CategoryId(0)),
    ));
    let path = tmp.path().join("m.json");
    m.save(&path).unwrap();
    let stdout = ok(
        &tmp.path().join("stats"),
        &["stats", "--manifest", s(&path)],
    );
    assert!(stdout.contains("0.470%"), "{stdout}");

    let v = json(tmp.path().join("stats/stats.json"));
    for key in [
        "images",
        "instances",
        "counts",
        "quantiles",
        "below",
        "mean_size",
    ] {
        assert!(v.get(key).is_some(), "stats.json lacks {key}");
    }
    assert_eq!(v["mean_size"]["relative_area_percent"], "0.470%");
    assert_eq!(v["mean_size"]["reference"], serde_json::json!([512, 512]));
    let csv = fs::read_to_string(tmp.path().join("stats/sizes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(fs::read_to_string(tmp.path().join("stats/histogram.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn synthesis_is_deterministic_and_reports_its_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let (manifest, objects) = fixture(tmp.path());

    let index = json(objects.join("index.json"));
    assert_eq!(
        index["categories"],
        serde_json::json!(["seacucumber", "seaurchin", "scallop"])
    );
    let crops = index["crops"].as_array().unwrap();
    assert_eq!(crops.len(), 10);
    for c in crops {
        assert!(objects.join(c["file"].as_str().unwrap()).is_file());
        assert!(c["source_image"].is_u64());
        assert_eq!(c["source_box"].as_array().unwrap().len(), 4);
    }

    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let stdout = synthesize(&a, &manifest, &objects, "9");
    assert!(stdout.contains("final[seaurchin] = 40"), "{stdout}");
    synthesize(&b, &manifest, &objects, "9");
    assert_eq!(tree(&a), tree(&b));

    let c = tmp.path().join("c");
    synthesize(&c, &manifest, &objects, "10");
    assert_ne!(tree(&a), tree(&c));

    let report = json(a.join("report.json"));
    for key in [
        "seed",
        "targets",
        "background_counts",
        "embedded_counts",
        "final_counts",
        "shortfall",
        "placement_failures",
        "retry_passes",
        "images",
    ] {
        assert!(report.get(key).is_some(), "report.json lacks {key}");
    }
    assert_eq!(report["seed"], 9);
    assert_eq!(
        report["final_counts"],
        serde_json::json!({"seacucumber": 12, "seaurchin": 40, "scallop": 8})
    );
    let embeds: Vec<&Value> = report["images"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|i| i["embeds"].as_array().unwrap())
        .collect();
    assert!(!embeds.is_empty());
    for e in embeds {
        match e["status"].as_str().unwrap() {
            "embedded" => {
                assert_eq!(e["bbox"].as_array().unwrap().len(), 4);
                assert!(e["scale"].is_f64() && e["anchored"].is_boolean());
            }
            "failed" => assert!(e["error"].is_string()),
            other => panic!("unexpected status {other}"),
        }
    }
}

#[test]
fn infeasible_targets_fail_before_writing_images() {
    let tmp = tempfile::tempdir().unwrap();
    let (manifest, objects) = fixture(tmp.path());
    let out = tmp.path().join("synth");
    let o = seaclone(
        &out,
        &[
            "synthesize",
            "--manifest",
            s(&manifest),
            "--objects",
            s(&objects),
            "--target",
            "seaurchin=500",
            "--per-image",
            "seaurchin=0:1",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "infeasible_target");
    assert!(!out.join("images").exists());
}

#[test]
fn augment_and_pairs_write_their_records() {
    let tmp = tempfile::tempdir().unwrap();
    let (manifest, objects) = fixture(tmp.path());
    for method in ["baseline", "cutout", "rerase", "gridmask", "has", "mixup"] {
        let out = tmp.path().join(method);
        ok(
            &out,
            &[
                "--seed",
                "3",
                "augment",
                "--manifest",
                s(&manifest),
                "--method",
                method,
            ],
        );
        let v = json(out.join("augment.json"));
        assert_eq!(v["method"], method);
        assert_eq!(v["seed"], 3);
        let images = v["images"].as_array().unwrap();
        assert_eq!(images.len(), 12);
        if method == "mixup" {
            assert!(images
                .iter()
                .all(|r| r["lambda"].is_f64() && r["partner"].is_u64()));
        }
        let m = DatasetManifest::load(out.join("manifest.json")).unwrap();
        assert!(m.images.iter().all(|e| out.join(&e.file).is_file()));
    }

    let pairs = tmp.path().join("pairs");
    ok(
        &pairs,
        &[
            "--seed",
            "1",
            "pairs",
            "--manifest",
            s(&manifest),
            "--objects",
            s(&objects),
        ],
    );
    let entries = json(pairs.join("pairs.json"));
    let entries = entries.as_array().unwrap();
    assert!(!entries.is_empty());
    for e in entries {
        assert!(pairs.join(e["real"].as_str().unwrap()).is_file());
        assert!(pairs.join(e["fake"].as_str().unwrap()).is_file());
    }
    let stdout = ok(
        tmp.path(),
        &[
            "pair-score",
            "--pairs",
            s(&pairs),
            "--content",
            "1.0",
            "--adversarial",
            "10000",
        ],
    );
    assert!(!stdout.is_empty());
}

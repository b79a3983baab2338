use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::CommandFactory;

use rso_splat::bench::REPORT_SCHEMA;
use rso_splat::cli::Cli;
use rso_splat::image::ImageRGB;
use rso_splat::ingest::ChromaKeyConfig;
use rso_splat::scene::{save_ply, Gaussian, GaussianCloud};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rso-splat"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    ok(&[
        "synth", "--out", s(&data), "--views", "8", "--width", "48", "--image-height", "36",
        "--points", "300", "--holdout-every", "4",
    ]);
    data
}

#[test]
fn every_command_documents_its_flags() {
    let out = ok(&["--help"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    let cmd = Cli::command();
    for sub in cmd.get_subcommands() {
        let name = sub.get_name();
        let out = ok(&[name, "--help"]);
        let help = String::from_utf8_lossy(&out.stdout);
        for arg in sub.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(help.contains(&format!("--{long}")), "{name} help lacks --{long}");
            }
        }
    }
}

#[test]
fn missing_cameras_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["train", "--data", s(dir.path()), "--out", s(&dir.path().join("o")), "--iterations", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "MissingCamerasFile");
    assert!(err["message"].is_string());
}

#[test]
fn bad_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "iterations = 5\nlearning_rate = 0.1\n").unwrap();
    let out = run(&["train", "--config", s(&cfg), "--print-config"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "InvalidConfig");
}

#[test]
fn print_config_round_trips_and_reproduces_training() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let printed = ok(&["train", "--print-config", "--seed", "5", "--iterations", "12"]).stdout;
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, &printed).unwrap();
    assert_eq!(ok(&["train", "--print-config", "--config", s(&cfg)]).stdout, printed);

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["train", "--data", s(&data), "--out", s(&a), "--seed", "5", "--iterations", "12"]);
    ok(&["--threads", "2", "train", "--data", s(&data), "--out", s(&b), "--config", s(&cfg)]);
    let pa = std::fs::read(a.join("point_cloud.ply")).unwrap();
    assert_eq!(pa, std::fs::read(b.join("point_cloud.ply")).unwrap());
    assert_eq!(std::fs::read(a.join("config.toml")).unwrap(), printed);

    let csv = std::fs::read_to_string(a.join("loss.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "iteration,l1,dssim,total,n_gaussians,elapsed_s");
    assert_eq!(lines.count(), 12);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("train_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["iterations"], 12);

    // render, orbit and eval on the trained model
    let model = a.join("point_cloud.ply");
    let png = dir.path().join("v.png");
    let raw = dir.path().join("v.raw");
    ok(&["render", "--model", s(&model), "--data", s(&data), "--view", "view_003.png", "--out", s(&png), "--raw", s(&raw)]);
    let img = ImageRGB::load_png(&png).unwrap();
    assert_eq!((img.width(), img.height()), (48, 36));
    assert_eq!(std::fs::metadata(&raw).unwrap().len(), 48 * 36 * 16);
    ok(&["render", "--model", s(&model), "--data", s(&data), "--view", "3", "--out", s(&dir.path().join("w.png"))]);
    assert_eq!(std::fs::read(&png).unwrap(), std::fs::read(dir.path().join("w.png")).unwrap());

    let orbit = dir.path().join("orbit");
    ok(&[
        "orbit", "--model", s(&model), "--n", "36", "--frames", "37", "--width", "40", "--image-height", "30",
        "--out", s(&orbit),
    ]);
    assert_eq!(
        std::fs::read(orbit.join("frame_000.png")).unwrap(),
        std::fs::read(orbit.join("frame_036.png")).unwrap()
    );
    assert_ne!(
        std::fs::read(orbit.join("frame_000.png")).unwrap(),
        std::fs::read(orbit.join("frame_009.png")).unwrap()
    );

    let ev = dir.path().join("eval");
    let out = ok(&["eval", "--model", s(&model), "--data", s(&data), "--out", s(&ev)]);
    let scores: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(scores["per_view"].as_array().unwrap().len(), 2);
    assert!(ev.join("per_view.csv").is_file() && ev.join("scores.json").is_file());
}

#[test]
fn eval_against_self_rendered_truth() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());

    // a model too faint to touch any pixel renders exactly the background
    let faint = GaussianCloud::from_gaussians([Gaussian::isotropic([0.0; 3], 0.05, 0.002, [1.0; 3])], 0);
    let model = dir.path().join("faint.ply");
    save_ply(&faint, &model).unwrap();
    for i in 0..8 {
        let name = format!("view_{i:03}.png");
        ok(&["render", "--model", s(&model), "--data", s(&data), "--view", &name, "--out", s(&data.join("images").join(&name))]);
    }
    let out = ok(&["eval", "--model", s(&model), "--data", s(&data), "--split", "all"]);
    let scores: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = scores["per_view"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    for r in rows {
        assert_eq!(r["psnr"], 100.0);
        assert_eq!(r["ssim"], 1.0);
    }

    // a visible model differs from its own 8-bit render only by quantization
    let (cloud, _) = {
        let c = GaussianCloud::from_gaussians(
            [
                Gaussian::isotropic([0.0, 0.0, 0.0], 0.3, 0.9, [0.8, 0.5, 0.2]),
                Gaussian::isotropic([0.3, 0.0, 0.2], 0.2, 0.7, [0.2, 0.4, 0.9]),
            ],
            0,
        );
        (c, ())
    };
    let model = dir.path().join("blob.ply");
    save_ply(&cloud, &model).unwrap();
    for i in 0..8 {
        let name = format!("view_{i:03}.png");
        ok(&["render", "--model", s(&model), "--data", s(&data), "--view", &name, "--out", s(&data.join("images").join(&name))]);
    }
    let out = ok(&["eval", "--model", s(&model), "--data", s(&data), "--split", "train"]);
    let scores: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // |error| <= 1/510 per channel
    assert!(scores["psnr"].as_f64().unwrap() >= 20.0 * 510f64.log10());
}

#[test]
fn chroma_key_ingest_leaves_no_green() {
    let dir = tempfile::tempdir().unwrap();
    let colmap = dir.path().join("colmap");
    let images = dir.path().join("raw");
    std::fs::create_dir_all(&colmap).unwrap();
    std::fs::create_dir_all(&images).unwrap();
    std::fs::write(colmap.join("cameras.txt"), "1 PINHOLE 40 30 40 40 20 15\n").unwrap();
    std::fs::write(
        colmap.join("images.txt"),
        "1 1 0 0 0 0 0 3 1 a.png\n\n2 1 0 0 0 0.1 0 3 1 b.png\n\n",
    )
    .unwrap();
    std::fs::write(colmap.join("points3D.txt"), "1 0 0 0 200 150 60 0.2\n2 0.1 0 0 210 160 70 0.2\n").unwrap();
    for name in ["a.png", "b.png"] {
        let mut img = ImageRGB::filled(40, 30, [0.05, 0.85, 0.1]);
        for y in 10..20 {
            for x in 12..28 {
                img.set_pixel(x, y, [0.8, 0.6, 0.25]);
            }
        }
        img.set_pixel(0, 0, [0.3, 0.4, 0.3]);
        img.save_png(&images.join(name)).unwrap();
    }
    let out = dir.path().join("ds");
    ok(&[
        "ingest", "--colmap", s(&colmap), "--images", s(&images), "--out", s(&out), "--chroma-key", "--holdout-every", "2",
    ]);
    let key = ChromaKeyConfig::default();
    for name in ["a.png", "b.png"] {
        let img = ImageRGB::load_png(&out.join("images").join(name)).unwrap();
        let mut black = 0;
        for y in 0..30 {
            for x in 0..40 {
                let p = img.pixel(x, y);
                assert!(!key.is_green(p), "{name} ({x},{y}) still green: {p:?}");
                black += (p == [0.0; 3]) as usize;
            }
        }
        assert_eq!(black, 40 * 30 - 16 * 10 - 1);
        assert_ne!(img.pixel(15, 15), [0.0; 3]);
    }
    assert!(out.join("manifest.json").is_file());
    assert!(out.join("sparse/0/cameras.txt").is_file());

    let resized = dir.path().join("small");
    ok(&["ingest", "--colmap", s(&colmap), "--images", s(&images), "--out", s(&resized), "--resize", "20x15"]);
    let img = ImageRGB::load_png(&resized.join("images/a.png")).unwrap();
    assert_eq!((img.width(), img.height()), (20, 15));
    let cams = std::fs::read_to_string(resized.join("sparse/0/cameras.txt")).unwrap();
    assert!(cams.contains("20 15 20.0 10.0 7.5"), "{cams}");
}

#[test]
fn tiny_bench_report_validates() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let out = dir.path().join("bench");
    ok(&["bench", "--data", s(&data), "--out", s(&out), "--iterations", "15", "--loops", "10"]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    assert!(jsonschema::is_valid(&schema, &report));
    assert_eq!(report["rows"][0]["case"], "data");
    assert!(report["rows"][0]["lpips"].is_null());
    assert!(out.join("report.txt").is_file() && out.join("data.ply").is_file());

    let bad = run(&["bench", "--data", s(&data), "--out", s(&out), "--iterations", "1", "--loops", "25"]);
    assert_eq!(bad.status.code(), Some(2));
}

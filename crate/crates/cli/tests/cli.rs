use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use figuresdf_core::assembly::{load_scene, BodyPartSpec, Skeleton};
use figuresdf_core::camera::View;
use figuresdf_core::formats::write_pfm_gray;
use figuresdf_core::mesh::BodyPart;
use figuresdf_core::render::{render_depth, RenderConfig};
use figuresdf_core::sdf::io::save_sdfg;
use figuresdf_core::sdf::SdfGrid;
use figuresdf_core::Vec3;

fn figuresdf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_figuresdf")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/figure")
}

/// Left and central part grids of the fixture figure.
fn fixture_grid(part: BodyPart) -> SdfGrid {
    match part {
        BodyPart::Head => SdfGrid::from_fn_unit_cube(16, Vec3::repeat(0.25), |p| (p - Vec3::new(0.0, 0.2, 0.0)).norm() - 0.6),
        BodyPart::Torso => SdfGrid::from_fn_unit_cube(16, Vec3::repeat(0.6), |p| {
            let q = p.abs() - Vec3::new(0.55, 0.85, 0.3);
            q.sup(&Vec3::zeros()).norm() + q.max().min(0.0) - 0.1
        }),
        _ => {
            let spec = BodyPartSpec::canonical(part);
            let (a, b) = (spec.canonical_anchors[0] * 0.94, spec.canonical_anchors[1] * 0.94);
            SdfGrid::from_fn_unit_cube(16, Vec3::repeat(0.4), move |p| {
                let ab = b - a;
                let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                (p - (a + ab * t)).norm() - 0.2
            })
        }
    }
    .unwrap()
}

fn write_fixtures(dir: &Path) {
    let parts = dir.join("parts");
    std::fs::create_dir_all(&parts).unwrap();
    for part in BodyPart::ALL.into_iter().filter(|p| !p.is_right()) {
        save_sdfg(&fixture_grid(part), parts.join(format!("{}.sdfg", part.name()))).unwrap();
    }
    Skeleton::canonical().save(dir.join("skeleton.json")).unwrap();
}

/// Assembles the fixture figure into `work` and returns the scene path.
fn assemble_fixture(work: &Path) -> PathBuf {
    let fixtures = fixture_dir();
    if std::env::var_os("FIGURESDF_BLESS").is_some() {
        write_fixtures(&fixtures);
    }
    let scene = work.join("scene.json");
    let out = figuresdf(&[
        "assemble",
        "--skeleton",
        path_str(&fixtures.join("skeleton.json")),
        "--parts",
        path_str(&fixtures.join("parts")),
        "--out",
        path_str(&scene),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    scene
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = figuresdf(&[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(figuresdf(&["render", "--bogus"]).status.code(), Some(1));
}

#[test]
fn help_succeeds() {
    let out = figuresdf(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("assemble"));
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.sdfg");
    let out = figuresdf(&["metrics", "iou", path_str(&missing), path_str(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn identical_grids_have_unit_iou() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.sdfg");
    save_sdfg(&fixture_grid(BodyPart::Head), &g).unwrap();
    let out = figuresdf(&["metrics", "iou", path_str(&g), path_str(&g)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1.000000");
    let out = figuresdf(&["metrics", "rmse", path_str(&g), path_str(&g)]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.000000");
}

#[test]
fn depth_render_matches_library_and_golden_file() {
    let work = tempfile::tempdir().unwrap();
    let scene_path = assemble_fixture(work.path());
    let cli_out = work.path().join("front.pfm");
    let out = figuresdf(&[
        "render",
        "--scene",
        path_str(&scene_path),
        "--mode",
        "depth",
        "--view",
        "front",
        "--size",
        "64",
        "--threads",
        "1",
        "--out",
        path_str(&cli_out),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cli_bytes = std::fs::read(&cli_out).unwrap();

    let scene = load_scene(&scene_path).unwrap();
    assert_eq!(scene.parts().len(), 14);
    let cfg = RenderConfig::for_scene(&scene, 64, 64);
    let img = render_depth(&scene, &scene.view_camera(View::Front), &cfg).unwrap();
    assert!(img.coverage.data().iter().any(|&c| c != 0));
    let mut lib_bytes = Vec::new();
    write_pfm_gray(&mut lib_bytes, &img.depth).unwrap();
    assert_eq!(cli_bytes, lib_bytes);

    let golden = fixture_dir().join("front_depth.pfm");
    if std::env::var_os("FIGURESDF_BLESS").is_some() {
        std::fs::write(&golden, &cli_bytes).unwrap();
    }
    assert_eq!(cli_bytes, std::fs::read(&golden).unwrap(), "rerun with FIGURESDF_BLESS=1 after intended changes");
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let work = tempfile::tempdir().unwrap();
    let scene_path = assemble_fixture(work.path());
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out_path = work.path().join(format!("mask{threads}.pgm"));
        let out = figuresdf(&[
            "render",
            "--scene",
            path_str(&scene_path),
            "--mode",
            "mask",
            "--view",
            "left",
            "--size",
            "48",
            "--threads",
            threads,
            "--out",
            path_str(&out_path),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn scene_file_refers_to_fixture_grids() {
    let work = tempfile::tempdir().unwrap();
    let scene_path = assemble_fixture(work.path());
    let text = std::fs::read_to_string(&scene_path).unwrap();
    assert!(text.contains("l_upper_arm.sdfg"));
    assert!(!text.contains("r_upper_arm.sdfg"));
}

#[test]
fn poselift_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let ok = |o: Output| assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    ok(figuresdf(&["--seed", "3", "poselift", "gen", "--n", "40", "--out", path_str(&p("train.jsonl"))]));
    ok(figuresdf(&[
        "poselift",
        "train",
        "--data",
        path_str(&p("train.jsonl")),
        "--epochs",
        "2",
        "--batch-size",
        "8",
        "--hidden",
        "16",
        "--log",
        path_str(&p("loss.txt")),
        "--out",
        path_str(&p("model.plft")),
    ]));
    assert_eq!(std::fs::read_to_string(p("loss.txt")).unwrap().lines().count(), 2);
    let out = figuresdf(&["poselift", "eval", "--model", path_str(&p("model.plft")), "--data", path_str(&p("train.jsonl"))]);
    ok(out.clone());
    let text = String::from_utf8_lossy(&out.stdout);
    for key in ["rmse_mm", "pck", "baseline_rmse_mm", "baseline_pck"] {
        assert!(text.contains(key), "{text}");
    }
}

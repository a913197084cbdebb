use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use figuresdf_core::assembly::{
    assemble_figure, load_scene, save_scene, BodyPartSpec, FigureScene, MaskSize, PartEntry, SceneFile, Skeleton,
};
use figuresdf_core::camera::{Camera, View};
use figuresdf_core::formats::{self, write_pam, write_pfm_gray, write_pfm_rgb, write_pgm, write_ply};
use figuresdf_core::image::Image;
use figuresdf_core::mesh::obj::{load_obj, save_obj};
use figuresdf_core::mesh::{mesh_to_sdf_with_frame, mesh_view_images, split_by_groups, BodyPart, BodyPartIndexing, VertexGroups};
use figuresdf_core::remesh::{ball_pivot, default_radius, OrientedPointCloud};
use figuresdf_core::render::{export_point_cloud, render_depth, render_lit, render_part_mask, render_textured, RenderConfig};
use figuresdf_core::sdf::{io::load_sdfg, io::save_sdfg, iou_grids, rmse_grids, SdfGrid};
use figuresdf_core::{Vec2, Vec3};
use figuresdf_poselift::{
    evaluate, generate_synthetic_poses, load_dataset, pck, save_dataset, PoseLifter, PoseSample, RotationRanges, TrainConfig, NUM_JOINTS,
};

use crate::args::*;
use crate::CliError;

/// Anchors written next to a grid by `mesh2sdf --skeleton`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSidecar {
    pub part: String,
    pub anchors: Vec<String>,
    pub canonical_anchors: Vec<[f64; 3]>,
}

/// `<grid>.anchors.json` next to `<grid>.sdfg`.
pub fn sidecar_path(grid: &Path) -> PathBuf {
    grid.with_extension("anchors.json")
}

fn number(v: f64) -> String {
    format!("{v:.6}")
}

fn parse_part(name: &str) -> Result<BodyPart, CliError> {
    name.parse().map_err(CliError::Usage)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    match &cli.command {
        Command::Mesh2sdf(a) => mesh2sdf(a),
        Command::Split(a) => split(a),
        Command::Assemble(a) => assemble(a),
        Command::Render(a) => render(a, threads),
        Command::Pointcloud(a) => pointcloud(a, threads),
        Command::Bpa(a) => bpa(a),
        Command::Poselift(c) => poselift(c, cli.seed),
        Command::Metrics(c) => metrics(c),
    }
}

fn mesh2sdf(a: &Mesh2SdfArgs) -> Result<(), CliError> {
    if a.res < 2 {
        return Err(CliError::Usage("--res must be at least 2".into()));
    }
    let mesh = load_obj(&a.input)?;
    let (grid, frame) = mesh_to_sdf_with_frame(&mesh, a.res, a.pad)?;
    save_sdfg(&grid, &a.out)?;
    log::info!("wrote {}^3 grid to {}", a.res, a.out.display());
    if let (Some(skel), Some(part)) = (&a.skeleton, &a.part) {
        let part = parse_part(part)?;
        let skeleton = Skeleton::load(skel)?;
        let spec = BodyPartSpec::canonical(part);
        let canonical_anchors =
            spec.anchors.iter().map(|n| skeleton.get(n).map(|p| frame.to_local(&p).into())).collect::<Result<Vec<[f64; 3]>, _>>()?;
        let sidecar = AnchorSidecar { part: part.name().into(), anchors: spec.anchors, canonical_anchors };
        fs::write(sidecar_path(&a.out), serde_json::to_string_pretty(&sidecar)?)?;
    }
    Ok(())
}

fn split(a: &SplitArgs) -> Result<(), CliError> {
    let groups = VertexGroups::load(&a.weights)?;
    let mesh = load_obj(&a.input)?.with_groups(groups)?;
    let result = split_by_groups(&mesh, &BodyPartIndexing::default())?;
    fs::create_dir_all(&a.outdir)?;
    for (part, m) in BodyPart::ALL.iter().zip(&result.parts) {
        save_obj(m, a.outdir.join(format!("{}.obj", part.name())))?;
    }
    log::info!(
        "{} input triangles, {} added by edge splits, {} by hole fans, {} in parts",
        mesh.triangle_count(),
        result.split_added,
        result.fan_added,
        result.total_triangles()
    );
    Ok(())
}

/// `target` relative to `base` when it lies below it, absolute otherwise.
fn relative_path(base: &Path, target: &Path) -> Result<String, CliError> {
    let base = fs::canonicalize(base)?;
    let target = fs::canonicalize(target)?;
    let rel = target.strip_prefix(&base).map(Path::to_path_buf).unwrap_or(target);
    Ok(rel.to_string_lossy().replace('\\', "/"))
}

#[derive(Deserialize)]
struct MaskSizeEntry {
    width: f64,
    height: f64,
}

fn assemble(a: &AssembleArgs) -> Result<(), CliError> {
    let skeleton = Skeleton::load(&a.skeleton)?;
    let mut grids = BTreeMap::new();
    let mut paths = BTreeMap::new();
    let mut specs = Vec::new();
    for part in BodyPart::ALL {
        let path = a.parts.join(format!("{}.sdfg", part.name()));
        if path.exists() {
            grids.insert(part, Arc::new(load_sdfg(&path)?));
            let sidecar = sidecar_path(&path);
            let mut spec = BodyPartSpec::canonical(part);
            if sidecar.exists() {
                let s: AnchorSidecar = serde_json::from_str(&fs::read_to_string(&sidecar)?)?;
                if s.part != part.name() {
                    return Err(CliError::Data(format!("{} describes part '{}'", sidecar.display(), s.part)));
                }
                spec.anchors = s.anchors;
                spec.canonical_anchors = s.canonical_anchors.into_iter().map(Vec3::from).collect();
            }
            paths.insert(part, path);
            specs.push(spec);
        } else if part.is_right() && a.parts.join(format!("{}.sdfg", part.opposite().name())).exists() {
            log::info!("mirroring {} for {}", part.opposite().name(), part.name());
            specs.push(BodyPartSpec::mirrored(part, part.opposite()));
        } else {
            return Err(CliError::Data(format!("missing grid {}", path.display())));
        }
    }
    let mut mask_sizes = BTreeMap::new();
    if let Some(p) = &a.mask_sizes {
        let raw: BTreeMap<String, MaskSizeEntry> = serde_json::from_str(&fs::read_to_string(p)?)?;
        for (name, m) in raw {
            mask_sizes.insert(parse_part(&name).map_err(|e| CliError::Data(e.to_string()))?, MaskSize { width: m.width, height: m.height });
        }
    }
    let scene = assemble_figure(&grids, &skeleton, &mask_sizes, &specs)?;
    let out_dir = match a.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&out_dir)?;
    let mut entries = Vec::new();
    for (placed, spec) in scene.parts().iter().zip(sorted_specs(&specs)) {
        let source = spec.mirrored_from.unwrap_or(spec.part);
        entries.push(PartEntry::from_placed(placed, relative_path(&out_dir, &paths[&source])?, spec.mirrored_from.is_some()));
    }
    let file = SceneFile { parts: entries, skeleton_path: Some(relative_path(&out_dir, &a.skeleton)?), textures: None };
    save_scene(&file, &a.out)?;
    Ok(())
}

fn sorted_specs(specs: &[BodyPartSpec]) -> Vec<&BodyPartSpec> {
    let mut v: Vec<&BodyPartSpec> = specs.iter().collect();
    v.sort_by_key(|s| s.part);
    v
}

fn load_scene_arg(p: &Option<PathBuf>) -> Result<FigureScene, CliError> {
    let p = p.as_ref().ok_or_else(|| CliError::Usage("--scene is required for this mode".into()))?;
    Ok(load_scene(p)?)
}

fn camera_for(a: &RenderArgs, center: Vec3, radius: f64) -> Result<Camera, CliError> {
    let view = match a.view {
        ViewArg::Front => View::Front,
        ViewArg::Left => View::Left,
        ViewArg::Back => View::Back,
        ViewArg::Right => View::Right,
        ViewArg::Custom => {
            let p = a.camera.as_ref().ok_or_else(|| CliError::Usage("--view custom needs --camera".into()))?;
            let cam: Camera = serde_json::from_str(&fs::read_to_string(p)?)?;
            cam.validate()?;
            return Ok(cam);
        }
    };
    Ok(view.camera(center, radius))
}

fn render(a: &RenderArgs, threads: usize) -> Result<(), CliError> {
    if a.size == 0 {
        return Err(CliError::Usage("--size must be positive".into()));
    }
    if a.mode == RenderMode::Uv {
        return render_uv(a);
    }
    let scene = load_scene_arg(&a.scene)?;
    let (center, radius) = scene.bounding_sphere();
    let camera = camera_for(a, center, radius)?;
    let mut cfg = RenderConfig::for_scene(&scene, a.size, a.size);
    cfg.workers = threads;
    let out = formats::create(&a.out)?;
    match a.mode {
        RenderMode::Depth => write_pfm_gray(out, &render_depth(&scene, &camera, &cfg)?.depth)?,
        RenderMode::Mask => write_pgm(out, &render_part_mask(&scene, &camera, &cfg)?)?,
        RenderMode::Lit => {
            cfg.light_dir = Some(match &a.light {
                Some(l) => Vec3::new(l[0], l[1], l[2]),
                None => camera.forward,
            });
            let img = render_lit(&scene, &camera, &cfg)?;
            write_pgm(out, &img.map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8))?
        }
        RenderMode::Textured => {
            let atlas = scene.textures().ok_or_else(|| CliError::Data("scene has no textures".into()))?;
            write_pam(out, &render_textured(&scene, &camera, &cfg, atlas)?)?
        }
        RenderMode::Uv => unreachable!("handled above"),
    }
    Ok(())
}

fn render_uv(a: &RenderArgs) -> Result<(), CliError> {
    let dir = a.parts.as_ref().ok_or_else(|| CliError::Usage("uv mode needs --parts with the part meshes".into()))?;
    let mut meshes = Vec::new();
    for part in BodyPart::ALL {
        let p = dir.join(format!("{}.obj", part.name()));
        if !p.exists() {
            return Err(CliError::Data(format!("missing mesh {}", p.display())));
        }
        meshes.push(load_obj(&p)?);
    }
    let (lo, hi) = meshes
        .iter()
        .filter_map(|m| m.bounds())
        .fold((Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)), |(lo, hi), (a, b)| (lo.inf(&a), hi.sup(&b)));
    if !(lo.x <= hi.x) {
        return Err(CliError::Data("part meshes are empty".into()));
    }
    let camera = camera_for(a, (lo + hi) * 0.5, (hi - lo).norm() * 0.5)?;
    let images = mesh_view_images(&meshes, &camera, a.size, a.size)?;
    let uv: Image<[f32; 3]> = images.uv.map(|c| c.map(|v| v as f32));
    write_pfm_rgb(formats::create(&a.out)?, &uv)?;
    Ok(())
}

fn pointcloud(a: &PointcloudArgs, threads: usize) -> Result<(), CliError> {
    if a.size == 0 || a.views == 0 {
        return Err(CliError::Usage("--size and --views must be positive".into()));
    }
    let scene = load_scene(&a.scene)?;
    let mut cfg = RenderConfig::for_scene(&scene, a.size, a.size);
    cfg.workers = threads;
    let (points, normals) = export_point_cloud(&scene, &cfg, a.views)?;
    log::info!("{} points", points.len());
    let mut w = formats::create(&a.out)?;
    write_ply(&mut w, &points, &normals)?;
    w.flush()?;
    Ok(())
}

fn bpa(a: &BpaArgs) -> Result<(), CliError> {
    let (points, normals) = formats::read_ply(formats::open(&a.input)?)?;
    let cloud = OrientedPointCloud::new(points, normals)?;
    let radii = if a.radius.is_empty() { vec![default_radius(&cloud)?] } else { a.radius.clone() };
    let result = ball_pivot(&cloud, &radii)?;
    if result.mesh.triangle_count() == 0 {
        log::warn!("no seed triangle found; writing an empty mesh");
    }
    log::info!("{} triangles over {} of {} points", result.mesh.triangle_count(), result.used_points(), cloud.len());
    save_obj(&result.mesh, &a.out)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct Pose2dRecord {
    joints2d: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct Pose3dRecord {
    joints3d: Vec<[f64; 3]>,
}

fn poselift(c: &PoseliftCommand, seed: u64) -> Result<(), CliError> {
    match c {
        PoseliftCommand::Gen { n, ranges, out } => {
            let ranges = match ranges {
                Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
                None => RotationRanges::default(),
            };
            let poses = generate_synthetic_poses(*n, seed, &ranges)?;
            let skeletons: Vec<Skeleton> = poses.into_iter().map(|(s, _)| s).collect();
            save_dataset(out, &skeletons)?;
        }
        PoseliftCommand::Train { data, epochs, batch_size, lr, dropout, hidden, log, out } => {
            let skeletons = load_dataset(data)?;
            let cfg = TrainConfig { epochs: *epochs, batch_size: *batch_size, learning_rate: *lr, dropout: *dropout, seed };
            cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let (lifter, losses) = PoseLifter::fit(&skeletons, *hidden, &cfg)?;
            lifter.save(out)?;
            if let Some(p) = log {
                let mut w = BufWriter::new(fs::File::create(p)?);
                for l in &losses {
                    writeln!(w, "{}", number(*l))?;
                }
                w.flush()?;
            }
            if let (Some(first), Some(last)) = (losses.first(), losses.last()) {
                log::info!("loss {} -> {}", number(*first), number(*last));
            }
        }
        PoseliftCommand::Predict { model, input, out } => {
            let lifter = PoseLifter::load(model)?;
            let mut samples = Vec::new();
            for (i, line) in BufReader::new(fs::File::open(input)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: Pose2dRecord = serde_json::from_str(&line).map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
                if rec.joints2d.len() != NUM_JOINTS {
                    return Err(CliError::Data(format!("line {}: expected {NUM_JOINTS} joints", i + 1)));
                }
                let joints = std::array::from_fn(|j| Vec2::new(rec.joints2d[j][0], rec.joints2d[j][1]));
                samples.push(PoseSample::from_joints2d(joints)?);
            }
            let depths = lifter.predict(&samples)?;
            let mut w = BufWriter::new(fs::File::create(out)?);
            for (s, d) in samples.iter().zip(&depths) {
                let joints3d = (0..NUM_JOINTS).map(|j| [s.joints2d[j].x, s.joints2d[j].y, d[j]]).collect();
                serde_json::to_writer(&mut w, &Pose3dRecord { joints3d })?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        PoseliftCommand::Eval { model, data } => {
            let lifter = PoseLifter::load(model)?;
            let r = evaluate(&lifter, &load_dataset(data)?)?;
            println!("rmse_mm {}", number(r.rmse_mm));
            println!("pck {}", number(r.pck));
            println!("baseline_rmse_mm {}", number(r.baseline_rmse_mm));
            println!("baseline_pck {}", number(r.baseline_pck));
        }
    }
    Ok(())
}

fn load_grid(p: &Path) -> Result<SdfGrid, CliError> {
    Ok(load_sdfg(p)?)
}

fn metrics(c: &MetricsCommand) -> Result<(), CliError> {
    let value = match c {
        MetricsCommand::Iou { a, b } => iou_grids(&load_grid(a)?, &load_grid(b)?)?,
        MetricsCommand::Rmse { a, b } => rmse_grids(&load_grid(a)?, &load_grid(b)?)?,
        MetricsCommand::Pck { pred, truth, threshold } => {
            // Depths are compared relative to the pelvis, as predicted.
            let flatten = |s: Vec<Skeleton>| -> Vec<Vec3> {
                s.iter().flat_map(|k| k.joints().map(|p| Vec3::new(p.x, p.y, p.z - k.joints()[0].z))).collect()
            };
            pck(&flatten(load_dataset(pred)?), &flatten(load_dataset(truth)?), *threshold)?
        }
    };
    println!("{}", number(value));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[test]
    fn sidecar_sits_next_to_the_grid() {
        assert_eq!(sidecar_path(Path::new("parts/head.sdfg")), PathBuf::from("parts/head.anchors.json"));
    }

    #[test]
    fn numbers_have_six_decimals() {
        assert_eq!(number(1.0), "1.000000");
        assert_eq!(number(-0.1234567), "-0.123457");
    }

    #[test]
    fn paths_below_the_base_become_relative() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("parts");
        fs::create_dir(&sub).unwrap();
        fs::write(sub.join("head.sdfg"), b"").unwrap();
        assert_eq!(relative_path(dir.path(), &sub.join("head.sdfg")).unwrap(), "parts/head.sdfg");
    }

    #[test]
    fn zero_threads_is_a_usage_error() {
        let cli = Cli::try_parse_from(["figuresdf", "--threads", "0", "metrics", "iou", "a", "b"]).unwrap();
        assert!(matches!(run(&cli), Err(CliError::Usage(_))));
    }
}

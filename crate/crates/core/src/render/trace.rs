use rayon::prelude::*;

use super::shade::{shade_textured, TextureAtlas};
use super::{RenderConfig, RenderError};
use crate::assembly::{scene_distance, FigureScene};
use crate::camera::Camera;
use crate::image::Image;
use crate::sdf::estimate_normal;
use crate::Vec3;

/// Half-width of the depth smoothing window (5 x 5).
pub const FILTER_RADIUS: usize = 2;

const POLISH_STEPS: usize = 32;
const BISECTION_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceHit {
    pub t: f64,
    pub point: Vec3,
    /// Mask index of the nearest part at the hit.
    pub part: u8,
    /// Scene distance at the hit point.
    pub distance: f64,
}

/// Moves a hit onto the zero crossing of the field: fixed-point steps,
/// then bisection if the field changes sign ahead. A ray that only grazes
/// the surface has no crossing; the parameter to resume marching from is
/// returned instead.
fn polish(scene: &FigureScene, origin: &Vec3, dir: &Vec3, hit: TraceHit, cfg: &RenderConfig) -> Result<TraceHit, f64> {
    let tol = cfg.eps_hit * 1e-6;
    let eval = |t: f64| {
        let p = origin + dir * t;
        let (d, part) = scene_distance(scene, &p);
        TraceHit { t, point: p, part, distance: d }
    };
    let mut cur = hit;
    let mut prev = hit;
    for _ in 0..POLISH_STEPS {
        if cur.distance <= tol {
            break;
        }
        prev = cur;
        cur = eval(cur.t + cur.distance);
    }
    let (mut lo, mut hi) = if cur.distance < -tol {
        (prev, cur)
    } else if cur.distance <= tol {
        return Ok(cur);
    } else {
        let probe = eval(cur.t + 2.0 * cfg.eps_hit);
        if probe.distance >= 0.0 {
            return Err(cur.t);
        }
        (cur, probe)
    };
    for _ in 0..BISECTION_STEPS {
        if hi.t - lo.t <= tol {
            break;
        }
        let mid = eval(0.5 * (lo.t + hi.t));
        if mid.distance >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Marches `t += d` along the ray until the scene distance drops below
/// `eps_hit`, then refines the hit onto the surface crossing. Rays that
/// come close without crossing keep marching. A ray starting inside reports
/// a hit at `t = 0`. Misses past `t_max` or after `max_steps`.
pub fn sphere_trace(scene: &FigureScene, origin: &Vec3, dir: &Vec3, cfg: &RenderConfig) -> Option<TraceHit> {
    march(scene, origin, dir, cfg, |_| {})
}

/// Sphere tracing with `visit` called on every marched parameter.
fn march(scene: &FigureScene, origin: &Vec3, dir: &Vec3, cfg: &RenderConfig, mut visit: impl FnMut(f64)) -> Option<TraceHit> {
    let mut t = 0.0;
    for _ in 0..cfg.max_steps {
        visit(t);
        let point = origin + dir * t;
        let (d, part) = scene_distance(scene, &point);
        if d < cfg.eps_hit {
            let hit = TraceHit { t, point, part, distance: d };
            if t == 0.0 {
                return Some(hit);
            }
            match polish(scene, origin, dir, hit, cfg) {
                Ok(h) => return Some(h),
                Err(resume) => {
                    t = resume;
                    if t > cfg.t_max {
                        return None;
                    }
                    continue;
                }
            }
        }
        t += d;
        if t > cfg.t_max {
            return None;
        }
    }
    None
}

/// Central-difference normal of the scene field; `fallback` when the
/// gradient vanishes.
pub fn surface_normal(scene: &FigureScene, p: &Vec3, eps: f64, fallback: Vec3) -> Vec3 {
    estimate_normal(|q: &Vec3| scene_distance(scene, q).0, p, eps).unwrap_or(fallback)
}

/// Evaluates `pixel(x, y)` for every pixel, rows spread over `workers`
/// threads.
fn render_pixels<T, F>(cfg: &RenderConfig, pixel: F) -> Result<Image<T>, RenderError>
where
    T: Send + Clone,
    F: Fn(usize, usize) -> T + Sync,
{
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| RenderError::Config(e.to_string()))?;
    let rows: Vec<Vec<T>> =
        pool.install(|| (0..cfg.height).into_par_iter().map(|y| (0..cfg.width).map(|x| pixel(x, y)).collect()).collect());
    Ok(Image::from_vec(cfg.width, cfg.height, rows.into_iter().flatten().collect()).expect("pixel count"))
}

fn trace_pixel(scene: &FigureScene, camera: &Camera, cfg: &RenderConfig, x: usize, y: usize) -> (Option<TraceHit>, Vec3) {
    let ray = camera.primary_ray(x, y, cfg.width, cfg.height);
    (sphere_trace(scene, &ray.origin, &ray.dir, cfg), ray.dir)
}

/// Depth along the ray (0 on background) and coverage (1 on hits).
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub depth: Image<f32>,
    pub coverage: Image<u8>,
}

/// Unsmoothed per-pixel hit parameters.
pub fn render_depth_raw(scene: &FigureScene, camera: &Camera, cfg: &RenderConfig) -> Result<DepthImage, RenderError> {
    let px = render_pixels(cfg, |x, y| trace_pixel(scene, camera, cfg, x, y).0.map(|h| h.t as f32))?;
    Ok(DepthImage { depth: px.map(|d| d.unwrap_or(0.0)), coverage: px.map(|d| d.is_some() as u8) })
}

/// 5 x 5 box filter over covered pixels only, renormalized by the number of
/// covered pixels in each window. Background stays 0.
///
/// The window sum is accumulated in double precision; sums of 25 single
/// precision depths of similar magnitude are exact there, so the result does
/// not depend on summation order.
pub fn filter_depth(img: &DepthImage) -> Image<f32> {
    let (w, h) = (img.depth.width(), img.depth.height());
    let mut out = Image::new(w, h, 0.0f32);
    let r = FILTER_RADIUS;
    for y in 0..h {
        for x in 0..w {
            if *img.coverage.get(x, y) == 0 {
                continue;
            }
            let mut sum = 0.0f64;
            let mut count = 0u32;
            for yy in y.saturating_sub(r)..(y + r + 1).min(h) {
                for xx in x.saturating_sub(r)..(x + r + 1).min(w) {
                    if *img.coverage.get(xx, yy) != 0 {
                        sum += *img.depth.get(xx, yy) as f64;
                        count += 1;
                    }
                }
            }
            out.set(x, y, (sum / count as f64) as f32);
        }
    }
    out
}

/// Sphere-traced depth smoothed by [`filter_depth`].
pub fn render_depth(scene: &FigureScene, camera: &Camera, cfg: &RenderConfig) -> Result<DepthImage, RenderError> {
    let raw = render_depth_raw(scene, camera, cfg)?;
    Ok(DepthImage { depth: filter_depth(&raw), coverage: raw.coverage })
}

/// Mask index of the first part hit, 0 on background.
pub fn render_part_mask(scene: &FigureScene, camera: &Camera, cfg: &RenderConfig) -> Result<Image<u8>, RenderError> {
    render_pixels(cfg, |x, y| trace_pixel(scene, camera, cfg, x, y).0.map_or(0, |h| h.part))
}

/// Lambertian intensity `max(0, n . l)` with `l` pointing toward the light.
pub fn render_lit(scene: &FigureScene, camera: &Camera, cfg: &RenderConfig) -> Result<Image<f64>, RenderError> {
    let light = cfg.light_dir.ok_or_else(|| RenderError::Config("lit rendering needs a light direction".into()))?;
    if !(light.norm() > 0.0) {
        return Err(RenderError::Config("light direction must be nonzero".into()));
    }
    let l = -light.normalize();
    render_pixels(cfg, |x, y| match trace_pixel(scene, camera, cfg, x, y) {
        (Some(hit), dir) => surface_normal(scene, &hit.point, cfg.normal_eps, -dir).dot(&l).max(0.0),
        (None, _) => 0.0,
    })
}

/// RGBA image shaded from the texture atlas; background is transparent.
pub fn render_textured(
    scene: &FigureScene,
    camera: &Camera,
    cfg: &RenderConfig,
    atlas: &TextureAtlas,
) -> Result<Image<[u8; 4]>, RenderError> {
    render_pixels(cfg, |x, y| match trace_pixel(scene, camera, cfg, x, y) {
        (Some(hit), dir) => shade_textured(&hit.point, &surface_normal(scene, &hit.point, cfg.normal_eps, -dir), atlas),
        (None, _) => [0; 4],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::PlacedPart;
    use crate::mesh::BodyPart;
    use crate::sdf::SdfGrid;
    use nalgebra::UnitQuaternion;
    use std::sync::Arc;

    fn sphere_scene(n: usize) -> FigureScene {
        let grid = SdfGrid::from_fn_unit_cube(n, Vec3::repeat(2.0), |p| p.norm() - 0.5).unwrap();
        let part =
            PlacedPart::new(BodyPart::Head, Arc::new(grid), Vec3::zeros(), UnitQuaternion::identity(), Vec3::repeat(1.0), Vec3::zeros())
                .unwrap();
        FigureScene::new(vec![part], None, None).unwrap()
    }

    fn cfg(scene: &FigureScene, n: usize) -> RenderConfig {
        RenderConfig::for_scene(scene, n, n)
    }

    #[test]
    fn grazing_ray_is_a_miss() {
        let scene = sphere_scene(32);
        let c = cfg(&scene, 8);
        let dir = Vec3::z();
        let line_min =
            |x: f64| (0..40000).map(|i| scene_distance(&scene, &Vec3::new(x, 0.0, -2.0 + i as f64 * 1e-4)).0).fold(f64::INFINITY, f64::min);
        let x = (0..400)
            .map(|i| 0.49 + i as f64 * 1e-4)
            .find(|&x| {
                let m = line_min(x);
                m > 0.2 * c.eps_hit && m < 0.8 * c.eps_hit
            })
            .expect("some offset grazes the surface");
        assert!(sphere_trace(&scene, &Vec3::new(x, 0.0, -2.0), &dir, &c).is_none());
    }

    #[test]
    fn marched_parameters_never_decrease() {
        let scene = sphere_scene(32);
        let c = cfg(&scene, 8);
        for i in 0..200 {
            let x = -0.8 + i as f64 * 0.008;
            let mut ts = Vec::new();
            let hit = march(&scene, &Vec3::new(x, 0.1, -2.0), &Vec3::z(), &c, |t| ts.push(t));
            assert!(ts.windows(2).all(|w| w[1] > w[0]), "offset {x}");
            if let Some(h) = hit {
                assert!(h.t >= *ts.last().unwrap());
            }
        }
    }

    #[test]
    fn sphere_hit_distance() {
        let scene = sphere_scene(64);
        let c = cfg(&scene, 8);
        let hit = sphere_trace(&scene, &Vec3::new(0.0, 0.0, -2.0), &Vec3::z(), &c).unwrap();
        let spacing = 2.0 / 63.0;
        assert!((hit.t - 1.5).abs() < 2.0 * spacing);
        assert!(hit.distance.abs() < c.eps_hit);
    }

    #[test]
    fn miss_and_inside_start() {
        let scene = sphere_scene(32);
        let c = cfg(&scene, 8);
        assert!(sphere_trace(&scene, &Vec3::new(0.0, 3.0, -2.0), &Vec3::z(), &c).is_none());
        let hit = sphere_trace(&scene, &Vec3::new(0.1, 0.0, 0.0), &Vec3::z(), &c).unwrap();
        assert_eq!(hit.t, 0.0);
    }

    #[test]
    fn empty_scene_renders_background() {
        let scene = FigureScene::new(vec![], None, None).unwrap();
        let c = cfg(&scene, 6);
        let cam = Camera::orthographic(Vec3::new(0.0, 0.0, 2.0), -Vec3::z(), Vec3::y(), 2.0).unwrap();
        let d = render_depth(&scene, &cam, &c).unwrap();
        assert!(d.depth.data().iter().all(|&v| v == 0.0));
        assert!(d.coverage.data().iter().all(|&v| v == 0));
        assert!(render_part_mask(&scene, &cam, &c).unwrap().data().iter().all(|&v| v == 0));
    }

    #[test]
    fn filter_keeps_constant_regions() {
        let depth = Image::new(7, 7, 1.25f32);
        let coverage = Image::new(7, 7, 1u8);
        assert_eq!(filter_depth(&DepthImage { depth: depth.clone(), coverage }), depth);
    }

    #[test]
    fn workers_do_not_change_output() {
        let scene = sphere_scene(24);
        let cam = Camera::orthographic(Vec3::new(0.0, 0.0, 2.0), -Vec3::z(), Vec3::y(), 1.5).unwrap();
        let mut c = cfg(&scene, 24);
        let one = render_depth(&scene, &cam, &c).unwrap();
        c.workers = 3;
        assert_eq!(render_depth(&scene, &cam, &c).unwrap(), one);
    }

    #[test]
    fn lit_needs_light() {
        let scene = sphere_scene(16);
        let cam = Camera::orthographic(Vec3::new(0.0, 0.0, 2.0), -Vec3::z(), Vec3::y(), 1.5).unwrap();
        assert!(matches!(render_lit(&scene, &cam, &cfg(&scene, 4)), Err(RenderError::Config(_))));
    }
}

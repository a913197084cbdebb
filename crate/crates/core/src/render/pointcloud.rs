use std::collections::HashMap;

use rayon::prelude::*;

use super::trace::{sphere_trace, surface_normal};
use super::{RenderConfig, RenderError};
use crate::assembly::FigureScene;
use crate::camera::{orbit_camera, yaw_direction};
use crate::Vec3;

type Cell = (i64, i64, i64);

fn cell_of(p: &Vec3, size: f64) -> Cell {
    ((p.x / size).floor() as i64, (p.y / size).floor() as i64, (p.z / size).floor() as i64)
}

/// Surface points and normals seen from `n_views` orthographic cameras
/// spaced evenly in yaw around the scene. Points are visited view by view in
/// pixel order; a point is dropped when its hash cell (half a grid spacing
/// wide) is taken or a kept point lies closer than half a spacing.
pub fn export_point_cloud(scene: &FigureScene, cfg: &RenderConfig, n_views: usize) -> Result<(Vec<Vec3>, Vec<Vec3>), RenderError> {
    if n_views == 0 {
        return Err(RenderError::Config("at least one view is needed".into()));
    }
    cfg.validate()?;
    if scene.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let (center, radius) = scene.bounding_sphere();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| RenderError::Config(e.to_string()))?;
    let mut raw: Vec<(Vec3, Vec3)> = Vec::new();
    for k in 0..n_views {
        let camera = orbit_camera(center, radius, yaw_direction(360.0 * k as f64 / n_views as f64));
        let hits: Vec<Option<(Vec3, Vec3)>> = pool.install(|| {
            (0..cfg.width * cfg.height)
                .into_par_iter()
                .map(|i| {
                    let ray = camera.primary_ray(i % cfg.width, i / cfg.width, cfg.width, cfg.height);
                    sphere_trace(scene, &ray.origin, &ray.dir, cfg)
                        .map(|h| (h.point, surface_normal(scene, &h.point, cfg.normal_eps, -ray.dir)))
                })
                .collect()
        });
        raw.extend(hits.into_iter().flatten());
    }

    let h = 0.5 * scene.min_world_spacing().unwrap_or(cfg.normal_eps);
    let mut grid: HashMap<Cell, usize> = HashMap::new();
    let (mut points, mut normals): (Vec<Vec3>, Vec<Vec3>) = (Vec::new(), Vec::new());
    'next: for (p, n) in raw {
        let c = cell_of(&p, h);
        if grid.contains_key(&c) {
            continue;
        }
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(&i) = grid.get(&(c.0 + dx, c.1 + dy, c.2 + dz)) {
                        if (points[i] - p).norm() < h {
                            continue 'next;
                        }
                    }
                }
            }
        }
        grid.insert(c, points.len());
        points.push(p);
        normals.push(n);
    }
    Ok((points, normals))
}

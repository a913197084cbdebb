//! Sphere tracing of assembled figures into depth, mask, lit and textured
//! images, plus point-cloud export.

mod pointcloud;
mod shade;
mod trace;

use thiserror::Error;

use crate::assembly::FigureScene;
use crate::Vec3;

pub use pointcloud::export_point_cloud;
pub use shade::{shade_textured, TextureAtlas, TextureView};
pub use trace::{
    filter_depth, render_depth, render_depth_raw, render_lit, render_part_mask, render_textured, sphere_trace, surface_normal, DepthImage,
    TraceHit, FILTER_RADIUS,
};

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("invalid render configuration: {0}")]
    Config(String),
    #[error("texture atlas: {0}")]
    Atlas(String),
}

/// Image size and sphere-tracing parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    /// A march step closer than this to the surface is a hit.
    pub eps_hit: f64,
    pub max_steps: usize,
    /// Rays are abandoned beyond this parameter.
    pub t_max: f64,
    /// Central-difference step for normals.
    pub normal_eps: f64,
    /// Direction the light travels in (pointing away from the light).
    pub light_dir: Option<Vec3>,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
}

impl RenderConfig {
    /// Defaults scaled to the scene: `eps_hit` is 1e-3 of the bounds
    /// diagonal, `t_max` four diagonals, 128 steps, normals at the finest
    /// grid spacing, one worker.
    pub fn for_scene(scene: &FigureScene, width: usize, height: usize) -> RenderConfig {
        let diag = scene.diagonal();
        let diag = if diag > 0.0 { diag } else { 1.0 };
        RenderConfig {
            width,
            height,
            eps_hit: 1e-3 * diag,
            max_steps: 128,
            t_max: 4.0 * diag,
            normal_eps: scene.min_world_spacing().unwrap_or(1e-3 * diag),
            light_dir: None,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let fail = |m: &str| Err(RenderError::Config(m.to_string()));
        if self.width == 0 || self.height == 0 {
            return fail("image size must be positive");
        }
        if !(self.eps_hit > 0.0) {
            return fail("eps_hit must be positive");
        }
        if self.max_steps == 0 {
            return fail("max_steps must be at least 1");
        }
        if !(self.t_max > 0.0) {
            return fail("t_max must be positive");
        }
        if !(self.normal_eps > 0.0) {
            return fail("normal_eps must be positive");
        }
        if self.workers == 0 {
            return fail("workers must be at least 1");
        }
        Ok(())
    }
}

//! Orthographic and perspective pinhole cameras and the four standard views.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

const FRAME_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("camera frame is not orthonormal")]
    NotOrthonormal,
    #[error("invalid camera parameter: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Projection {
    Orthographic,
    /// Rays leave `position`; the image plane sits `focal` units ahead and is
    /// `extent` units wide.
    Perspective {
        focal: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub projection: Projection,
    pub position: Vec3,
    pub forward: Vec3,
    pub up: Vec3,
    pub right: Vec3,
    /// Width of the view in world units (at the image plane for perspective).
    pub extent: f64,
}

impl Camera {
    /// Builds a right-handed frame (`right = forward x up`) from a viewing
    /// direction and an approximate up vector.
    pub fn new(projection: Projection, position: Vec3, forward: Vec3, up: Vec3, extent: f64) -> Result<Camera, CameraError> {
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(CameraError::Invalid(format!("extent must be positive, got {extent}")));
        }
        if let Projection::Perspective { focal } = projection {
            if !(focal > 0.0 && focal.is_finite()) {
                return Err(CameraError::Invalid(format!("focal length must be positive, got {focal}")));
            }
        }
        let f = forward.try_normalize(1e-12).ok_or_else(|| CameraError::Invalid("zero forward vector".into()))?;
        let u = (up - f * up.dot(&f)).try_normalize(1e-12).ok_or_else(|| CameraError::Invalid("up vector parallel to forward".into()))?;
        let camera = Camera { projection, position, forward: f, up: u, right: f.cross(&u), extent };
        camera.validate()?;
        Ok(camera)
    }

    pub fn orthographic(position: Vec3, forward: Vec3, up: Vec3, extent: f64) -> Result<Camera, CameraError> {
        Camera::new(Projection::Orthographic, position, forward, up, extent)
    }

    pub fn perspective(position: Vec3, forward: Vec3, up: Vec3, extent: f64, focal: f64) -> Result<Camera, CameraError> {
        Camera::new(Projection::Perspective { focal }, position, forward, up, extent)
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let (f, u, r) = (self.forward, self.up, self.right);
        let unit = [f, u, r].iter().all(|v| (v.norm() - 1.0).abs() <= FRAME_TOLERANCE);
        let orthogonal = f.dot(&u).abs() <= FRAME_TOLERANCE && f.dot(&r).abs() <= FRAME_TOLERANCE && u.dot(&r).abs() <= FRAME_TOLERANCE;
        if unit && orthogonal {
            Ok(())
        } else {
            Err(CameraError::NotOrthonormal)
        }
    }

    /// The camera reflected through the plane `x = 0`, with its frame made
    /// right-handed again. Its images are horizontal flips of this camera's
    /// images of the reflected scene.
    pub fn mirrored_x(&self) -> Camera {
        let m = |v: Vec3| Vec3::new(-v.x, v.y, v.z);
        let forward = m(self.forward);
        let up = m(self.up);
        Camera { position: m(self.position), forward, up, right: forward.cross(&up), ..*self }
    }

    /// Offsets of the center of pixel `(px, py)` on the view plane, along
    /// `right` and `up`. Row 0 is the top row.
    pub fn pixel_offsets(&self, px: usize, py: usize, width: usize, height: usize) -> (f64, f64) {
        let (w, h) = (width as f64, height as f64);
        // Integer numerators keep pixel i and w-1-i exact negatives.
        let nx = (2.0 * px as f64 + 1.0 - w) / w;
        let ny = (h - 2.0 * py as f64 - 1.0) / h;
        let half_w = 0.5 * self.extent;
        let half_h = half_w * h / w;
        (nx * half_w, ny * half_h)
    }

    pub fn primary_ray(&self, px: usize, py: usize, width: usize, height: usize) -> Ray {
        let (ox, oy) = self.pixel_offsets(px, py, width, height);
        match self.projection {
            Projection::Orthographic => Ray { origin: self.position + self.right * ox + self.up * oy, dir: self.forward },
            Projection::Perspective { focal } => {
                let dir =
                    if ox == 0.0 && oy == 0.0 { self.forward } else { (self.forward * focal + self.right * ox + self.up * oy).normalize() };
                Ray { origin: self.position, dir }
            }
        }
    }

    /// Continuous pixel coordinates of `p` (pixel centers at integers) and
    /// its depth along `forward`.
    pub fn project(&self, p: &Vec3, width: usize, height: usize) -> Option<(f64, f64, f64)> {
        let rel = p - self.position;
        let depth = rel.dot(&self.forward);
        let (mut x, mut y) = (rel.dot(&self.right), rel.dot(&self.up));
        if let Projection::Perspective { focal } = self.projection {
            if depth <= 0.0 {
                return None;
            }
            x *= focal / depth;
            y *= focal / depth;
        }
        let (w, h) = (width as f64, height as f64);
        let half_w = 0.5 * self.extent;
        let half_h = half_w * h / w;
        let px = (x / half_w * w + w - 1.0) * 0.5;
        let py = (h - 1.0 - y / half_h * h) * 0.5;
        Some((px, py, depth))
    }
}

/// The four orthographic views used for masks, depth images and textures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Front,
    Left,
    Back,
    Right,
}

impl View {
    pub const ALL: [View; 4] = [View::Front, View::Left, View::Back, View::Right];

    pub fn name(self) -> &'static str {
        match self {
            View::Front => "front",
            View::Left => "left",
            View::Back => "back",
            View::Right => "right",
        }
    }

    /// Yaw of the camera position around the vertical axis, in quarter turns.
    /// The figure faces +z, so its left side is +x.
    pub fn quarter_turns(self) -> u32 {
        match self {
            View::Front => 0,
            View::Left => 1,
            View::Back => 2,
            View::Right => 3,
        }
    }

    /// Orthographic camera looking at `center` from this side, framing a
    /// sphere of `radius`.
    pub fn camera(self, center: Vec3, radius: f64) -> Camera {
        orbit_camera(center, radius, yaw_direction(self.quarter_turns() as f64 * 90.0))
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for View {
    type Err = CameraError;

    fn from_str(s: &str) -> Result<View, CameraError> {
        View::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| CameraError::Invalid(format!("unknown view '{s}'")))
    }
}

/// Horizontal unit direction for a yaw in degrees, exact at quarter turns.
pub fn yaw_direction(yaw_degrees: f64) -> Vec3 {
    let quarter = yaw_degrees / 90.0;
    if quarter.fract() == 0.0 {
        return match (quarter as i64).rem_euclid(4) {
            0 => Vec3::new(0.0, 0.0, 1.0),
            1 => Vec3::new(1.0, 0.0, 0.0),
            2 => Vec3::new(0.0, 0.0, -1.0),
            _ => Vec3::new(-1.0, 0.0, 0.0),
        };
    }
    let a = yaw_degrees * PI / 180.0;
    Vec3::new(a.sin(), 0.0, a.cos())
}

/// Orthographic camera placed at `center + 2 * radius * toward`, looking at
/// `center` with +y up and a square view of width `2.1 * radius`.
pub fn orbit_camera(center: Vec3, radius: f64, toward: Vec3) -> Camera {
    let radius = if radius > 0.0 { radius } else { 1.0 };
    Camera::orthographic(center + toward * (2.0 * radius), -toward, Vec3::y(), 2.1 * radius)
        .expect("horizontal orbit directions give a valid frame")
}

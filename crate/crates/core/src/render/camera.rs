use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{add3, cross3, dot3, normalize3, scale3, sub3, Vec3};

/// Orbit camera around `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub distance: f64,
    pub target: Vec3,
    pub vertical_fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

/// Eye point plus an orthonormal basis; `forward` looks at the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub eye: Vec3,
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
}

impl Camera {
    pub fn new(
        azimuth_deg: f64,
        elevation_deg: f64,
        distance: f64,
        target: Vec3,
        vertical_fov_deg: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let c = Camera {
            azimuth_deg,
            elevation_deg,
            distance,
            target,
            vertical_fov_deg,
            width,
            height,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::invalid(format!("camera distance must be > 0, got {}", self.distance)));
        }
        if !(self.vertical_fov_deg > 0.0 && self.vertical_fov_deg < 180.0) {
            return Err(Error::invalid(format!("fov must be in (0, 180), got {}", self.vertical_fov_deg)));
        }
        if !(-90.0..=90.0).contains(&self.elevation_deg) {
            return Err(Error::invalid(format!("elevation must be in [-90, 90], got {}", self.elevation_deg)));
        }
        if !self.azimuth_deg.is_finite() {
            return Err(Error::invalid("azimuth must be finite"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image dimensions must be >= 1"));
        }
        Ok(())
    }

    pub fn with_angles(&self, azimuth_deg: f64, elevation_deg: f64) -> Camera {
        Camera {
            azimuth_deg,
            elevation_deg,
            ..*self
        }
    }

    pub fn pose(&self) -> Pose {
        let a = self.azimuth_deg.to_radians();
        let e = self.elevation_deg.to_radians();
        let (ce, se) = if self.elevation_deg.abs() == 90.0 {
            (0.0, self.elevation_deg.signum())
        } else {
            (e.cos(), e.sin())
        };
        let offset = [ce * a.cos(), ce * a.sin(), se];
        let eye = add3(self.target, scale3(offset, self.distance));
        let forward = scale3(offset, -1.0);
        let mut right = cross3(forward, [0.0, 0.0, 1.0]);
        if self.elevation_deg.abs() == 90.0 || dot3(right, right) < 1e-24 {
            right = cross3(forward, [1.0, 0.0, 0.0]);
        }
        let right = normalize3(right);
        let up = cross3(right, forward);
        Pose {
            eye,
            forward,
            right,
            up,
        }
    }

    /// Primary ray through the center of pixel (`col`, `row`), row 0 at the top.
    pub fn ray(&self, pose: &Pose, col: usize, row: usize) -> (Vec3, Vec3) {
        let tan = (0.5 * self.vertical_fov_deg.to_radians()).tan();
        let aspect = self.width as f64 / self.height as f64;
        let x = (2.0 * (col as f64 + 0.5) / self.width as f64 - 1.0) * tan * aspect;
        let y = (1.0 - 2.0 * (row as f64 + 0.5) / self.height as f64) * tan;
        let dir = normalize3(add3(pose.forward, add3(scale3(pose.right, x), scale3(pose.up, y))));
        (pose.eye, dir)
    }

    /// Projects a world point to continuous pixel coordinates (col, row).
    pub fn project(&self, pose: &Pose, p: Vec3) -> Option<(f64, f64)> {
        let v = sub3(p, pose.eye);
        let z = dot3(v, pose.forward);
        if z <= 0.0 {
            return None;
        }
        let tan = (0.5 * self.vertical_fov_deg.to_radians()).tan();
        let aspect = self.width as f64 / self.height as f64;
        let x = dot3(v, pose.right) / (z * tan * aspect);
        let y = dot3(v, pose.up) / (z * tan);
        Some((
            (x + 1.0) * 0.5 * self.width as f64,
            (1.0 - y) * 0.5 * self.height as f64,
        ))
    }
}

/// Nine poses around `center`: the 3×3 grid of ±10° offsets in azimuth and
/// elevation. Elevations are clamped to [-90, 90]; poses that collapse onto
/// each other are replaced by ±20° azimuth offsets at the surviving
/// elevations (closest to the equator first).
pub fn view_set_cameras(center: &Camera) -> Vec<Camera> {
    let mut poses: Vec<(f64, f64)> = Vec::with_capacity(9);
    for de in [-10.0, 0.0, 10.0] {
        for da in [-10.0, 0.0, 10.0] {
            let p = (center.azimuth_deg + da, (center.elevation_deg + de).clamp(-90.0, 90.0));
            if !poses.contains(&p) {
                poses.push(p);
            }
        }
    }
    if poses.len() < 9 {
        let mut elevations: Vec<f64> = Vec::new();
        for &(_, e) in &poses {
            if !elevations.contains(&e) {
                elevations.push(e);
            }
        }
        elevations.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
        'fill: for e in elevations {
            for da in [-20.0, 20.0] {
                if poses.len() == 9 {
                    break 'fill;
                }
                let p = (center.azimuth_deg + da, e);
                if !poses.contains(&p) {
                    poses.push(p);
                }
            }
        }
    }
    poses.into_iter().map(|(a, e)| center.with_angles(a, e)).collect()
}

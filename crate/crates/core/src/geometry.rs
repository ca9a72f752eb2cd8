//! Planar RIS layouts and motion.
//!
//! A grid lies in the xz plane with element `n` (1-based) at
//! `(x(n)·d_x, 0, z(n)·d_z)`, where `x(n) = (n−1) mod n_x` and
//! `z(n) = ⌊(n−1)/n_x⌋`. Everything downstream only consumes the explicit
//! coordinates and the velocity vector, so rotated layouts flow through the
//! same code.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

/// Relative slack when counting how many spacings fit in an aperture, so
/// `0.4 / 0.0125` still yields 32 intervals.
const COUNT_SLACK: f64 = 1e-9;

const ORTHONORMAL_TOL: f64 = 1e-12;

/// Reference parameters carried alongside matrices and spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n: usize,
    pub n_x: usize,
    pub n_z: usize,
    pub d_x: f64,
    pub d_z: f64,
    pub l_x: f64,
    pub l_z: f64,
    pub wavelength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisGrid {
    n_x: usize,
    n_z: usize,
    d_x: f64,
    d_z: f64,
    wavelength: f64,
    coords: Vec<Vec3>,
    // Lattice steps along the row and column directions; (d_x,0,0) and
    // (0,0,d_z) until rotated.
    step_x: Vec3,
    step_z: Vec3,
}

impl RisGrid {
    /// Builds a canonical grid from explicit element counts.
    pub fn with_counts(
        n_x: usize,
        n_z: usize,
        d_x: f64,
        d_z: f64,
        wavelength: f64,
    ) -> Result<Self> {
        if n_x == 0 || n_z == 0 {
            return Err(Error::param("n_x/n_z", "element counts must be at least 1"));
        }
        positive("d_x", d_x)?;
        positive("d_z", d_z)?;
        positive("wavelength", wavelength)?;
        let step_x = Vec3::new(d_x, 0.0, 0.0);
        let step_z = Vec3::new(0.0, 0.0, d_z);
        let coords = (0..n_x * n_z)
            .map(|i| {
                let (x, z) = (i % n_x, i / n_x);
                step_x * x as f64 + step_z * z as f64
            })
            .collect();
        Ok(Self {
            n_x,
            n_z,
            d_x,
            d_z,
            wavelength,
            coords,
            step_x,
            step_z,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn d_x(&self) -> f64 {
        self.d_x
    }

    pub fn d_z(&self) -> f64 {
        self.d_z
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn coords(&self) -> &[Vec3] {
        &self.coords
    }

    /// Position of element `n` (1-based).
    pub fn coord(&self, n: usize) -> Result<Vec3> {
        if n == 0 || n > self.len() {
            return Err(Error::Index {
                index: n,
                len: self.len(),
            });
        }
        Ok(self.coords[n - 1])
    }

    pub fn l_x(&self) -> f64 {
        (self.n_x - 1) as f64 * self.d_x
    }

    pub fn l_z(&self) -> f64 {
        (self.n_z - 1) as f64 * self.d_z
    }

    /// Row and column lattice steps (in meters) in the current orientation.
    pub fn lattice_steps(&self) -> (Vec3, Vec3) {
        (self.step_x, self.step_z)
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta {
            n: self.len(),
            n_x: self.n_x,
            n_z: self.n_z,
            d_x: self.d_x,
            d_z: self.d_z,
            l_x: self.l_x(),
            l_z: self.l_z(),
            wavelength: self.wavelength,
        }
    }
}

/// Builds the canonical grid covering an `l_x × l_z` aperture with the given
/// spacings: `n_x = ⌊l_x/d_x⌋ + 1`, `n_z = ⌊l_z/d_z⌋ + 1`.
pub fn make_grid(l_x: f64, l_z: f64, d_x: f64, d_z: f64, wavelength: f64) -> Result<RisGrid> {
    positive("l_x", l_x)?;
    positive("l_z", l_z)?;
    positive("d_x", d_x)?;
    positive("d_z", d_z)?;
    positive("wavelength", wavelength)?;
    let n_x = interval_count("d_x", l_x, d_x)? + 1;
    let n_z = interval_count("d_z", l_z, d_z)? + 1;
    RisGrid::with_counts(n_x, n_z, d_x, d_z, wavelength)
}

fn interval_count(name: &'static str, length: f64, spacing: f64) -> Result<usize> {
    let ratio = length / spacing;
    if ratio < 1.0 - COUNT_SLACK {
        return Err(Error::param(
            name,
            format!("spacing {spacing} exceeds aperture {length}"),
        ));
    }
    Ok((ratio * (1.0 + COUNT_SLACK)).floor() as usize)
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::param(
            name,
            format!("must be finite and > 0, got {value}"),
        ));
    }
    Ok(())
}

/// Maps a 1-based element ordinal to its `(x, z)` lattice indices.
pub fn element_index(n: usize, n_x: usize, len: usize) -> Result<(usize, usize)> {
    if n == 0 || n > len || n_x == 0 {
        return Err(Error::Index { index: n, len });
    }
    Ok(((n - 1) % n_x, (n - 1) / n_x))
}

/// Speed and direction of the surface's translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionState {
    speed: f64,
    azimuth: f64,
    zenith: f64,
}

impl MotionState {
    pub fn new(speed: f64, azimuth: f64, zenith: f64) -> Result<Self> {
        if !(speed.is_finite() && speed >= 0.0) {
            return Err(Error::param(
                "speed",
                format!("must be finite and >= 0, got {speed}"),
            ));
        }
        if !(0.0..2.0 * PI).contains(&azimuth) {
            return Err(Error::param(
                "azimuth",
                format!("must lie in [0, 2π), got {azimuth}"),
            ));
        }
        if !(0.0..=PI).contains(&zenith) {
            return Err(Error::param(
                "zenith",
                format!("must lie in [0, π], got {zenith}"),
            ));
        }
        Ok(Self {
            speed,
            azimuth,
            zenith,
        })
    }

    pub fn stationary() -> Self {
        Self {
            speed: 0.0,
            azimuth: 0.0,
            zenith: PI / 2.0,
        }
    }

    /// Motion along +x.
    pub fn along_x(speed: f64) -> Result<Self> {
        Self::new(speed, 0.0, PI / 2.0)
    }

    /// Motion along +y, normal to the surface.
    pub fn along_y(speed: f64) -> Result<Self> {
        Self::new(speed, PI / 2.0, PI / 2.0)
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn zenith(&self) -> f64 {
        self.zenith
    }

    pub fn velocity(&self) -> Vec3 {
        velocity_vector(self)
    }
}

/// `v·[cosφ sinϑ, sinφ sinϑ, cosϑ]`.
pub fn velocity_vector(m: &MotionState) -> Vec3 {
    let (sin_phi, cos_phi) = snapped_sin_cos(m.azimuth);
    let (sin_theta, cos_theta) = snapped_sin_cos(m.zenith);
    m.speed * Vec3::new(cos_phi * sin_theta, sin_phi * sin_theta, cos_theta)
}

/// `sin_cos` with the ~6e-17 residue at right angles flushed to zero, so
/// motion along a coordinate axis has exactly zero off-axis components.
fn snapped_sin_cos(angle: f64) -> (f64, f64) {
    let snap = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    let (s, c) = angle.sin_cos();
    (snap(s), snap(c))
}

/// Applies a rigid rotation to every element (and to the lattice steps).
pub fn rotate_grid(g: &RisGrid, rotation: &Mat3) -> Result<RisGrid> {
    let defect = (rotation.transpose() * rotation - Mat3::identity()).amax();
    if !(defect <= ORTHONORMAL_TOL) {
        return Err(Error::param(
            "rotation",
            format!("not orthonormal, max |RᵀR − I| = {defect:e}"),
        ));
    }
    Ok(RisGrid {
        coords: g.coords.iter().map(|c| rotation * c).collect(),
        step_x: rotation * g.step_x,
        step_z: rotation * g.step_z,
        ..g.clone()
    })
}

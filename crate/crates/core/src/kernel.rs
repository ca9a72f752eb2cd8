//! Closed-form spatial-temporal correlation under isotropic scattering.
//!
//! For elements at `d_m`, `d_n` and a surface moving with velocity `v`, the
//! normalized correlation at lag `τ` is
//!
//! ```text
//! R(τ)[m, n] = sinc(2‖d_m − d_n − τv‖ / λ),   sinc(x) = sin(πx)/(πx)
//! ```
//!
//! It only depends on the displacement `d_m − d_n − τv`, so a spatial offset
//! and a temporal shift along the motion are interchangeable.

use nalgebra::DMatrix;
use rayon::prelude::*;
use std::f64::consts::{E, PI};

use crate::budget::MemoryBudget;
use crate::error::{Error, Result};
use crate::geometry::{velocity_vector, GridMeta, MotionState, RisGrid};
use crate::Vec3;

/// Below this |x| the Taylor branch replaces `sin(πx)/(πx)`.
const SINC_TAYLOR_CUTOFF: f64 = 1e-6;

/// Scan step in the normalized argument `u = 2·distance/λ`.
const SCAN_STEP: f64 = 1e-4;
const SCAN_MIN_CAP: f64 = 10.0;

/// Normalized sinc, `sin(πx)/(πx)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let px = PI * x;
    if x.abs() < SINC_TAYLOR_CUTOFF {
        1.0 - px * px / 6.0
    } else {
        px.sin() / px
    }
}

/// Correlation between element `m` at time `t` and element `n` at `t + τ`.
#[inline]
pub fn st_correlation(d_m: &Vec3, d_n: &Vec3, tau: f64, velocity: &Vec3, wavelength: f64) -> f64 {
    debug_assert!(wavelength > 0.0);
    let r = (d_m - d_n) - velocity * tau;
    sinc(2.0 * r.norm() / wavelength)
}

/// Correlation of a single element with itself after `τ`; independent of
/// the motion direction.
pub fn temporal_correlation(tau: f64, speed: f64, wavelength: f64) -> f64 {
    sinc(2.0 * tau * speed / wavelength)
}

/// Dense `R(τ)` together with the parameters it was evaluated for.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub values: DMatrix<f64>,
    pub tau: f64,
    pub motion: MotionState,
    pub grid_meta: GridMeta,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entry for 1-based element ordinals.
    pub fn get(&self, m: usize, n: usize) -> Result<f64> {
        let len = self.len();
        for idx in [m, n] {
            if idx == 0 || idx > len {
                return Err(Error::Index { index: idx, len });
            }
        }
        Ok(self.values[(m - 1, n - 1)])
    }

    /// Largest `|R[m,n] − R[n,m]|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in (j + 1)..n {
                worst = worst.max((self.values[(i, j)] - self.values[(j, i)]).abs());
            }
        }
        worst
    }
}

/// Evaluates `R(τ)` for every element pair under the default memory budget.
pub fn correlation_matrix(g: &RisGrid, tau: f64, m: &MotionState) -> Result<CorrelationMatrix> {
    correlation_matrix_with_budget(g, tau, m, MemoryBudget::default())
}

/// Columns are filled independently, so the result does not depend on the
/// number of worker threads.
pub fn correlation_matrix_with_budget(
    g: &RisGrid,
    tau: f64,
    m: &MotionState,
    budget: MemoryBudget,
) -> Result<CorrelationMatrix> {
    if !tau.is_finite() {
        return Err(Error::param("tau", "must be finite"));
    }
    let n = g.len();
    budget.check("correlation matrix", MemoryBudget::dense_bytes(n, 1))?;
    let velocity = velocity_vector(m);
    let lambda = g.wavelength();
    let coords = g.coords();

    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n)
        .enumerate()
        .for_each(|(col, column)| {
            let d_n = &coords[col];
            for (row, out) in column.iter_mut().enumerate() {
                *out = st_correlation(&coords[row], d_n, tau, &velocity, lambda);
            }
        });

    Ok(CorrelationMatrix {
        values: DMatrix::from_vec(n, n, data),
        tau,
        motion: *m,
        grid_meta: g.meta(),
    })
}

/// Smallest normalized argument `u*` with `|sinc(u)| ≤ threshold` for every
/// `u ≥ u*`.
fn last_crossing(threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::param(
            "threshold",
            format!("must lie in (0, 1), got {threshold}"),
        ));
    }
    // |sinc(u)| ≤ 1/(πu) bounds everything past the cap.
    let cap = SCAN_MIN_CAP.max(1.0 / (PI * threshold) + 1.0);
    let steps = (cap / SCAN_STEP).ceil() as usize;
    let above = |u: f64| sinc(u).abs() > threshold;

    // sinc(0) = 1 > threshold, so index 0 always qualifies.
    let last = (0..=steps)
        .rev()
        .find(|&i| above(i as f64 * SCAN_STEP))
        .unwrap_or(0);
    let (mut lo, mut hi) = (last as f64 * SCAN_STEP, (last + 1) as f64 * SCAN_STEP);
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Time after which `|sinc(2τv/λ)|` stays at or below `threshold`.
///
/// `threshold` defaults to `1/e` in [`decorrelation_time_default`].
pub fn decorrelation_time(speed: f64, wavelength: f64, threshold: f64) -> Result<f64> {
    if speed == 0.0 {
        return Err(Error::NoDecorrelation);
    }
    if !(speed.is_finite() && speed > 0.0) {
        return Err(Error::param(
            "speed",
            format!("must be finite and > 0, got {speed}"),
        ));
    }
    check_wavelength(wavelength)?;
    Ok(last_crossing(threshold)? * wavelength / (2.0 * speed))
}

pub fn decorrelation_time_default(speed: f64, wavelength: f64) -> Result<f64> {
    decorrelation_time(speed, wavelength, 1.0 / E)
}

/// Separation beyond which `|sinc(2δ/λ)|` stays at or below `threshold`.
pub fn decorrelation_distance(wavelength: f64, threshold: f64) -> Result<f64> {
    check_wavelength(wavelength)?;
    Ok(last_crossing(threshold)? * wavelength / 2.0)
}

pub fn decorrelation_distance_default(wavelength: f64) -> Result<f64> {
    decorrelation_distance(wavelength, 1.0 / E)
}

fn check_wavelength(wavelength: f64) -> Result<()> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::param(
            "wavelength",
            format!("must be finite and > 0, got {wavelength}"),
        ));
    }
    Ok(())
}

/// Correlation over a `(δx, δz, vτ)` lattice, stored `[i][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceTable {
    pub delta_x: Vec<f64>,
    pub delta_z: Vec<f64>,
    pub v_tau: Vec<f64>,
    values: Vec<f64>,
}

impl SliceTable {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let (nz, nt) = (self.delta_z.len(), self.v_tau.len());
        self.values[(i * nz + j) * nt + k]
    }

    /// Long-form rows `(δx, δz, vτ, value)` in `[i][j][k]` order.
    pub fn long_form(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        let (nz, nt) = (self.delta_z.len(), self.v_tau.len());
        self.values.iter().enumerate().map(move |(flat, &value)| {
            let (i, rest) = (flat / (nz * nt), flat % (nz * nt));
            let (j, k) = (rest / nt, rest % nt);
            [self.delta_x[i], self.delta_z[j], self.v_tau[k], value]
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Evaluates `sinc(2‖(δx, 0, δz) − τv‖/λ)` on a lattice of offsets and
/// travelled distances `vτ`.
///
/// The temporal shift is applied as `vτ·v̂`, so a stationary motion state
/// still defines a direction and no division by the speed is needed.
pub fn correlation_slice(
    wavelength: f64,
    m: &MotionState,
    delta_x: &[f64],
    delta_z: &[f64],
    v_tau: &[f64],
) -> Result<SliceTable> {
    check_wavelength(wavelength)?;
    if delta_x.is_empty() || delta_z.is_empty() || v_tau.is_empty() {
        return Err(Error::param("slice grid", "sweep grids must be non-empty"));
    }
    let direction = velocity_vector(&MotionState::new(1.0, m.azimuth(), m.zenith())?);
    let origin = Vec3::zeros();
    let mut values = Vec::with_capacity(delta_x.len() * delta_z.len() * v_tau.len());
    for &dx in delta_x {
        for &dz in delta_z {
            let d = Vec3::new(dx, 0.0, dz);
            for &vt in v_tau {
                values.push(st_correlation(&d, &origin, vt, &direction, wavelength));
            }
        }
    }
    Ok(SliceTable {
        delta_x: delta_x.to_vec(),
        delta_z: delta_z.to_vec(),
        v_tau: v_tau.to_vec(),
        values,
    })
}

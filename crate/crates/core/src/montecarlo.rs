//! Plane-wave Monte Carlo oracle.
//!
//! A channel is synthesized as a finite superposition of `P` plane waves
//! arriving from the half-space in front of the surface,
//!
//! ```text
//! h(t) = √(N/P) Σ_p α_p a(φ_p, θ_p) exp(j(2π/λ) vᵀe_p t)
//! ```
//!
//! and `R(τ) = E{h(t) hᴴ(t+τ)}` is estimated by averaging over independent
//! ensembles at `t = 0`. Nothing here calls into [`crate::kernel`] except to
//! package results, so it can serve as an independent check of the closed
//! form.
//!
//! Seeding: realization `k` of a run seeded with `s` draws its angles from
//! ChaCha8 stream `2k` and its gains from stream `2k + 1`, both keyed by `s`.
//! [`sample_isotropic`] is realization 0.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::budget::MemoryBudget;
use crate::error::{Error, Result};
use crate::geometry::{velocity_vector, MotionState, RisGrid};
use crate::kernel::CorrelationMatrix;
use crate::Vec3;

/// Realizations generated in parallel before being folded, in order, into
/// the running sums.
const BLOCK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveEnsemble {
    pub azimuths: Vec<f64>,
    pub zeniths: Vec<f64>,
    pub gains: Vec<Complex64>,
}

impl PlaneWaveEnsemble {
    pub fn wave_count(&self) -> usize {
        self.gains.len()
    }

    /// Unit arrival direction `e_p`.
    pub fn direction(&self, p: usize) -> Vec3 {
        direction(self.azimuths[p], self.zeniths[p])
    }
}

fn direction(phi: f64, theta: f64) -> Vec3 {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    Vec3::new(cp * st, sp * st, ct)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub values: Vec<Complex64>,
    pub time: f64,
}

/// Draws `waves` plane waves from the isotropic half-space density
/// `sin(θ)/(2π)` on `[0, π] × [0, π]` with unit-power complex Gaussian gains.
pub fn sample_isotropic(waves: usize, seed: u64) -> Result<PlaneWaveEnsemble> {
    if waves == 0 {
        return Err(Error::param("waves", "need at least one plane wave"));
    }
    Ok(draw_ensemble(waves, seed, 0))
}

fn draw_ensemble(waves: usize, seed: u64, realization: u64) -> PlaneWaveEnsemble {
    let mut angle_rng = ChaCha8Rng::seed_from_u64(seed);
    angle_rng.set_stream(2 * realization);
    let mut gain_rng = ChaCha8Rng::seed_from_u64(seed);
    gain_rng.set_stream(2 * realization + 1);

    let mut azimuths = Vec::with_capacity(waves);
    let mut zeniths = Vec::with_capacity(waves);
    let mut gains = Vec::with_capacity(waves);
    for _ in 0..waves {
        azimuths.push(angle_rng.random::<f64>() * PI);
        let u: f64 = angle_rng.random();
        zeniths.push((1.0 - 2.0 * u).acos());
        let re: f64 = gain_rng.sample(StandardNormal);
        let im: f64 = gain_rng.sample(StandardNormal);
        gains.push(Complex64::new(re, im) * FRAC_1_SQRT_2);
    }
    PlaneWaveEnsemble {
        azimuths,
        zeniths,
        gains,
    }
}

/// Unit-norm response `exp(j(2π/λ) d_nᵀe)/√N` for a wave from `(φ, θ)`.
pub fn array_response(g: &RisGrid, phi: f64, theta: f64) -> Vec<Complex64> {
    let k = 2.0 * PI / g.wavelength();
    let e = direction(phi, theta);
    let scale = 1.0 / (g.len() as f64).sqrt();
    g.coords()
        .iter()
        .map(|d| Complex64::cis(k * d.dot(&e)) * scale)
        .collect()
}

/// Evaluates the plane-wave sum at time `t`, element by element.
pub fn simulate_channel(
    g: &RisGrid,
    ens: &PlaneWaveEnsemble,
    m: &MotionState,
    t: f64,
) -> ChannelRealization {
    let n = g.len();
    let k = 2.0 * PI / g.wavelength();
    let v = velocity_vector(m);
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for p in 0..ens.wave_count() {
        let a = array_response(g, ens.azimuths[p], ens.zeniths[p]);
        let w = ens.gains[p] * Complex64::cis(k * v.dot(&ens.direction(p)) * t);
        for (h, ap) in values.iter_mut().zip(&a) {
            *h += w * ap;
        }
    }
    let scale = (n as f64 / ens.wave_count() as f64).sqrt();
    values.iter_mut().for_each(|h| *h *= scale);
    ChannelRealization { values, time: t }
}

/// Empirical correlation after a given number of realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    /// Real part of the estimate.
    pub matrix: CorrelationMatrix,
    /// Largest `|Im R̂[m, n]|`.
    pub max_imag: f64,
    pub realizations: usize,
    pub waves: usize,
}

impl CorrelationEstimate {
    /// Largest entrywise deviation from a reference matrix.
    pub fn max_abs_error(&self, reference: &CorrelationMatrix) -> f64 {
        (&self.matrix.values - &reference.values).amax()
    }
}

/// Estimates `R(τ)` from `realizations` independent `waves`-wave ensembles.
pub fn estimate_correlation(
    g: &RisGrid,
    m: &MotionState,
    tau: f64,
    waves: usize,
    realizations: usize,
    seed: u64,
) -> Result<CorrelationEstimate> {
    let mut out = estimate_correlation_series(
        g,
        m,
        &[tau],
        waves,
        &[realizations],
        seed,
        MemoryBudget::default(),
    )?;
    Ok(out.remove(0).remove(0))
}

/// Runs one realization stream and snapshots the estimate for every lag at
/// each checkpoint, so `result[c][t]` uses the first `checkpoints[c]`
/// realizations for lag `taus[t]`.
///
/// Checkpoints must be strictly increasing. Realizations are generated in
/// parallel but summed in index order, so results are independent of the
/// worker count.
pub fn estimate_correlation_series(
    g: &RisGrid,
    m: &MotionState,
    taus: &[f64],
    waves: usize,
    checkpoints: &[usize],
    seed: u64,
    budget: MemoryBudget,
) -> Result<Vec<Vec<CorrelationEstimate>>> {
    if waves == 0 {
        return Err(Error::param("waves", "need at least one plane wave"));
    }
    if taus.is_empty() || taus.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("taus", "need at least one finite lag"));
    }
    if checkpoints.first().is_none_or(|&k| k == 0) || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param(
            "realizations",
            "checkpoints must be positive and strictly increasing",
        ));
    }
    let n = g.len();
    let required = MemoryBudget::dense_bytes(n, 2 * taus.len() as u64 + 1);
    budget.check("Monte Carlo accumulators", required)?;

    let synth = Synthesizer::new(g, m, taus, waves, seed);
    let total = *checkpoints.last().unwrap();
    let mut sums = vec![DMatrix::<Complex64>::zeros(n, n); taus.len()];
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next_checkpoint = checkpoints.iter().peekable();
    let mut done = 0usize;

    while done < total {
        let stop = next_checkpoint
            .peek()
            .map_or(total, |&&c| c)
            .min(done + BLOCK);
        let block: Vec<Realization> = (done..stop)
            .into_par_iter()
            .map(|k| synth.realize(k as u64))
            .collect();
        for r in &block {
            for (sum, lagged) in sums.iter_mut().zip(&r.lagged) {
                for (col, hn) in lagged.iter().enumerate() {
                    let c = hn.conj();
                    for (row, hm) in r.now.iter().enumerate() {
                        sum[(row, col)] += hm * c;
                    }
                }
            }
        }
        done = stop;
        if next_checkpoint.peek() == Some(&&done) {
            next_checkpoint.next();
            out.push(
                taus.iter()
                    .zip(&sums)
                    .map(|(&tau, sum)| snapshot(g, m, tau, sum, done, waves))
                    .collect(),
            );
        }
    }
    Ok(out)
}

fn snapshot(
    g: &RisGrid,
    m: &MotionState,
    tau: f64,
    sum: &DMatrix<Complex64>,
    count: usize,
    waves: usize,
) -> CorrelationEstimate {
    let inv = 1.0 / count as f64;
    let values = sum.map(|z| z.re * inv);
    let max_imag = sum
        .iter()
        .fold(0.0f64, |acc, z| acc.max((z.im * inv).abs()));
    CorrelationEstimate {
        matrix: CorrelationMatrix {
            values,
            tau,
            motion: *m,
            grid_meta: g.meta(),
        },
        max_imag,
        realizations: count,
        waves,
    }
}

struct Realization {
    now: Vec<Complex64>,
    lagged: Vec<Vec<Complex64>>,
}

/// Channel synthesis specialized to lattice grids: the response of element
/// `(x, z)` factors into a row phasor times a column phasor.
struct Synthesizer {
    n_x: usize,
    n_z: usize,
    step_x: Vec3,
    step_z: Vec3,
    wavenumber: f64,
    velocity: Vec3,
    taus: Vec<f64>,
    waves: usize,
    seed: u64,
}

impl Synthesizer {
    fn new(g: &RisGrid, m: &MotionState, taus: &[f64], waves: usize, seed: u64) -> Self {
        let (step_x, step_z) = g.lattice_steps();
        Self {
            n_x: g.n_x(),
            n_z: g.n_z(),
            step_x,
            step_z,
            wavenumber: 2.0 * PI / g.wavelength(),
            velocity: velocity_vector(m),
            taus: taus.to_vec(),
            waves,
            seed,
        }
    }

    fn realize(&self, k: u64) -> Realization {
        let n = self.n_x * self.n_z;
        let zero = Complex64::new(0.0, 0.0);
        let ens = draw_ensemble(self.waves, self.seed, k);
        let mut now = vec![zero; n];
        let mut lagged = vec![vec![zero; n]; self.taus.len()];
        let mut row = vec![zero; self.n_x];
        let mut col = vec![zero; self.n_z];
        let mut weights = vec![zero; self.taus.len()];

        for p in 0..self.waves {
            let e = ens.direction(p);
            let (px, pz) = (
                self.wavenumber * self.step_x.dot(&e),
                self.wavenumber * self.step_z.dot(&e),
            );
            row.iter_mut()
                .enumerate()
                .for_each(|(i, r)| *r = Complex64::cis(px * i as f64));
            col.iter_mut()
                .enumerate()
                .for_each(|(j, c)| *c = Complex64::cis(pz * j as f64));
            let doppler = self.wavenumber * self.velocity.dot(&e);
            let alpha = ens.gains[p];
            for (w, &tau) in weights.iter_mut().zip(&self.taus) {
                *w = alpha * Complex64::cis(doppler * tau);
            }
            for (j, c) in col.iter().enumerate() {
                let base = j * self.n_x;
                let w_now = alpha * c;
                for (i, r) in row.iter().enumerate() {
                    now[base + i] += w_now * r;
                }
                for (h, w) in lagged.iter_mut().zip(&weights) {
                    let wc = w * c;
                    for (i, r) in row.iter().enumerate() {
                        h[base + i] += wc * r;
                    }
                }
            }
        }
        // √(N/P) from the plane-wave sum times 1/√N from the response.
        let scale = 1.0 / (self.waves as f64).sqrt();
        now.iter_mut().for_each(|h| *h *= scale);
        lagged.iter_mut().flatten().for_each(|h| *h *= scale);
        Realization { now, lagged }
    }
}

//! Eigen-analysis of the spatial correlation `R(0)` and the spatial
//! degrees of freedom (DoF) it supports.
//!
//! The effective rank of a finite sinc-kernel matrix exceeds the asymptotic
//! limit `⌊πL_xL_z/λ²⌋`. For a square aperture `A = L_xL_z/λ²` at
//! half-wavelength spacing it follows
//!
//! ```text
//! r = πA + 4.4·A^0.55
//! ```
//!
//! and for spacings below λ/2 it shrinks toward the limit as
//!
//! ```text
//! Rank = ⌊πA⌋ (1 + (b·d_x·d_z/λ²)^¼),   b = 4 (r/⌊πA⌋ − 1)⁴
//! ```

mod fit;

pub use fit::{fit_dof_coefficients, DofFit};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::budget::MemoryBudget;
use crate::error::{Error, Result};
use crate::geometry::GridMeta;
use crate::kernel::CorrelationMatrix;

const SYMMETRY_TOL: f64 = 1e-12;
const RECONSTRUCTION_TOL: f64 = 1e-8;
const RECONSTRUCTION_MAX_N: usize = 64;
/// Trace and PSD checks are relative to `N`.
const SPECTRAL_TOL: f64 = 1e-8;
const KNEE_FLOOR: f64 = 1e-6;

/// Dense copies held while decomposing: input, solver working copy,
/// tridiagonal workspace.
const EIGEN_COPIES: u64 = 3;

/// Eigenvalues of `R(0)` in non-increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    pub eigenvalues: Vec<f64>,
    pub trace: f64,
    pub grid_meta: GridMeta,
}

impl EigenSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues with round-off negatives set to zero.
    pub fn clamped(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|&l| l.max(0.0)).collect()
    }

    /// Cumulative power fraction after each eigenvalue.
    pub fn cumulative_power(&self) -> Vec<f64> {
        let total: f64 = self.clamped().iter().sum();
        self.clamped()
            .iter()
            .scan(0.0, |acc, &l| {
                *acc += l;
                Some(*acc / total)
            })
            .collect()
    }

    pub fn dof_limit(&self) -> u64 {
        let m = &self.grid_meta;
        dof_limit(m.l_x, m.l_z, m.wavelength).unwrap_or(0)
    }
}

/// Full spectrum of a zero-lag correlation matrix.
pub fn symmetric_eigenvalues(r: &CorrelationMatrix) -> Result<EigenSpectrum> {
    symmetric_eigenvalues_with_budget(r, MemoryBudget::default())
}

/// Bytes the eigen pipeline needs for an `n`-element grid.
pub fn eigen_bytes(n: usize) -> u64 {
    MemoryBudget::dense_bytes(n, EIGEN_COPIES)
}

pub fn symmetric_eigenvalues_with_budget(
    r: &CorrelationMatrix,
    budget: MemoryBudget,
) -> Result<EigenSpectrum> {
    if r.tau != 0.0 {
        return Err(Error::Unsupported(format!(
            "eigen-analysis needs the zero-lag matrix, got τ = {}",
            r.tau
        )));
    }
    let asym = r.asymmetry();
    if !(asym <= SYMMETRY_TOL) {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric (max deviation {asym:e})"
        )));
    }
    let n = r.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    budget.check("eigendecomposition", eigen_bytes(n))?;

    let mut eigenvalues: Vec<f64> = if n <= RECONSTRUCTION_MAX_N {
        let eig = r.values.clone().symmetric_eigen();
        let rebuilt = eig.recompose();
        let err = (&rebuilt - &r.values).amax();
        if !(err <= RECONSTRUCTION_TOL) {
            return Err(Error::NumericalContract(format!(
                "eigen reconstruction error {err:e} exceeds {RECONSTRUCTION_TOL:e}"
            )));
        }
        eig.eigenvalues.iter().copied().collect()
    } else {
        r.values.symmetric_eigenvalues().iter().copied().collect()
    };
    eigenvalues.sort_by(|a, b| b.total_cmp(a));

    let trace = r.values.trace();
    let tol = SPECTRAL_TOL * n as f64;
    let sum: f64 = eigenvalues.iter().sum();
    if !((sum - trace).abs() <= tol) {
        return Err(Error::NumericalContract(format!(
            "eigenvalue sum {sum} differs from trace {trace} by more than {tol:e}"
        )));
    }
    let min = *eigenvalues.last().unwrap();
    if !(min >= -tol) {
        return Err(Error::NumericalContract(format!(
            "matrix is not positive semidefinite: min eigenvalue {min:e} < -{tol:e}"
        )));
    }
    Ok(EigenSpectrum {
        eigenvalues,
        trace,
        grid_meta: r.grid_meta,
    })
}

/// `⌊π·L_x·L_z/λ²⌋`, the DoF of an asymptotically large, dense surface.
pub fn dof_limit(l_x: f64, l_z: f64, wavelength: f64) -> Result<u64> {
    for (name, v) in [("l_x", l_x), ("l_z", l_z), ("wavelength", wavelength)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(
                name,
                format!("must be finite and > 0, got {v}"),
            ));
        }
    }
    Ok((PI * (l_x / wavelength) * (l_z / wavelength)).floor() as u64)
}

/// Fraction of the trace held by the `k` largest eigenvalues.
pub fn power_capture(s: &EigenSpectrum, k: usize) -> Result<f64> {
    if k == 0 || k > s.len() {
        return Err(Error::Index {
            index: k,
            len: s.len(),
        });
    }
    let clamped = s.clamped();
    let total: f64 = clamped.iter().sum();
    Ok(clamped[..k].iter().sum::<f64>() / total)
}

/// How to turn a spectrum into a single effective rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum RankMethod {
    /// Count eigenvalues at or above `level · trace / ⌊πL_xL_z/λ²⌋`, i.e. a
    /// fraction of the mean power per asymptotic degree of freedom.
    Dominant { level: f64 },
    /// Index of the largest consecutive ratio `λ_i/λ_{i+1}` among
    /// eigenvalues above `1e-6·λ_1`.
    Knee,
    /// Smallest `k` whose top-`k` power capture reaches `gamma`.
    Power { gamma: f64 },
    /// Count of eigenvalues at or above `delta·λ_1`.
    Threshold { delta: f64 },
}

impl RankMethod {
    pub const DEFAULT_DOMINANT_LEVEL: f64 = 0.3;
}

impl Default for RankMethod {
    fn default() -> Self {
        RankMethod::Dominant {
            level: Self::DEFAULT_DOMINANT_LEVEL,
        }
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankMethod::Dominant { level } => write!(f, "dominant:{level}"),
            RankMethod::Knee => write!(f, "knee"),
            RankMethod::Power { gamma } => write!(f, "power:{gamma}"),
            RankMethod::Threshold { delta } => write!(f, "threshold:{delta}"),
        }
    }
}

impl FromStr for RankMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::param(
                "rank-method",
                format!("expected knee|dominant[:c]|power:γ|threshold:δ, got `{s}`"),
            )
        };
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a.parse::<f64>().map_err(|_| bad())?)),
            None => (s, None),
        };
        let in_unit = |x: f64| x > 0.0 && x <= 1.0;
        match (name, arg) {
            ("knee", None) => Ok(RankMethod::Knee),
            ("dominant", None) => Ok(RankMethod::default()),
            ("dominant", Some(level)) if level > 0.0 && level.is_finite() => {
                Ok(RankMethod::Dominant { level })
            }
            ("power", Some(gamma)) if in_unit(gamma) => Ok(RankMethod::Power { gamma }),
            ("threshold", Some(delta)) if in_unit(delta) => Ok(RankMethod::Threshold { delta }),
            _ => Err(bad()),
        }
    }
}

/// Number of dominant eigenvalues under `method`.
pub fn effective_rank(s: &EigenSpectrum, method: RankMethod) -> Result<usize> {
    if s.is_empty() {
        return Err(Error::InvalidInput("empty spectrum".into()));
    }
    let ev = s.clamped();
    let top = ev[0];
    let rank = match method {
        RankMethod::Dominant { level } => {
            let dof = s.dof_limit().max(1) as f64;
            let cut = level * s.trace / dof;
            ev.iter().take_while(|&&l| l >= cut).count()
        }
        RankMethod::Knee => knee(&ev)?,
        RankMethod::Power { gamma } => {
            let cumulative = s.cumulative_power();
            // tolerate the last partial sum landing a hair below 1
            cumulative
                .iter()
                .position(|&c| c >= gamma - 1e-12)
                .map_or(ev.len(), |i| i + 1)
        }
        RankMethod::Threshold { delta } => ev.iter().take_while(|&&l| l >= delta * top).count(),
    };
    Ok(rank.clamp(1, ev.len()))
}

fn knee(ev: &[f64]) -> Result<usize> {
    let floor = KNEE_FLOOR * ev[0];
    let mut best: Option<(usize, f64)> = None;
    for (i, pair) in ev.windows(2).enumerate() {
        if pair[0] < floor || pair[0] <= 0.0 {
            break;
        }
        let ratio = if pair[1] > 0.0 {
            pair[0] / pair[1]
        } else {
            f64::INFINITY
        };
        if best.is_none_or(|(_, b)| ratio > b) {
            best = Some((i + 1, ratio));
        }
    }
    match best {
        Some((idx, ratio)) if ratio > 1.0 + 1e-12 => Ok(idx),
        _ => Err(Error::DegenerateSpectrum("eigenvalues do not decay".into())),
    }
}

/// Rank of a square, half-wavelength-spaced surface with aperture
/// `A = L_xL_z/λ²` (must be positive).
pub fn rank_eq10(area_over_lambda2: f64) -> f64 {
    PI * area_over_lambda2 + 4.4 * area_over_lambda2.powf(0.55)
}

/// Rank for spacings at or below λ/2.
///
/// `b` is pinned by the square-aperture half-wavelength law, so rectangular
/// inputs are an extrapolation that uses `A = L_xL_z/λ²`.
pub fn rank_eq11(l_x: f64, l_z: f64, d_x: f64, d_z: f64, wavelength: f64) -> Result<f64> {
    let limit = dof_limit(l_x, l_z, wavelength)?;
    for (name, d) in [("d_x", d_x), ("d_z", d_z)] {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::param(
                name,
                format!("must be finite and > 0, got {d}"),
            ));
        }
        if d / wavelength > 0.5 * (1.0 + 1e-12) {
            return Err(Error::OutOfDomain(format!(
                "{name} = {d} exceeds half a wavelength"
            )));
        }
    }
    if limit == 0 {
        return Err(Error::OutOfDomain(
            "aperture below one asymptotic degree of freedom".into(),
        ));
    }
    let limit = limit as f64;
    let area = (l_x / wavelength) * (l_z / wavelength);
    let b = 4.0 * (rank_eq10(area) / limit - 1.0).powi(4);
    let density = (d_x / wavelength) * (d_z / wavelength);
    Ok(limit * (1.0 + (b * density).powf(0.25)))
}

/// DoF summary for one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DofReport {
    pub method: RankMethod,
    pub effective_rank: usize,
    pub dof_limit: u64,
    /// Present for square apertures at half-wavelength spacing.
    pub rank_estimate_eq10: Option<f64>,
    /// Present when both spacings are at most λ/2.
    pub rank_estimate_eq11: Option<f64>,
    pub power_at_limit: f64,
    pub rho: Option<f64>,
}

impl DofReport {
    pub fn new(s: &EigenSpectrum, method: RankMethod) -> Result<Self> {
        let m = &s.grid_meta;
        let effective_rank = effective_rank(s, method)?;
        let limit = s.dof_limit();
        let power_at_limit = match limit as usize {
            0 => 0.0,
            k if k >= s.len() => 1.0,
            k => power_capture(s, k)?,
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();
        let lam = m.wavelength;
        let square_half = close(m.l_x, m.l_z) && close(m.d_x, lam / 2.0) && close(m.d_z, lam / 2.0);
        Ok(Self {
            method,
            effective_rank,
            dof_limit: limit,
            rank_estimate_eq10: square_half.then(|| rank_eq10(m.l_x * m.l_z / (lam * lam))),
            rank_estimate_eq11: rank_eq11(m.l_x, m.l_z, m.d_x, m.d_z, lam).ok(),
            power_at_limit,
            rho: (limit > 0).then(|| effective_rank as f64 / limit as f64),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, MotionState, RisGrid};
    use crate::kernel::{correlation_matrix, sinc};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn spectrum_of(l: f64, d: f64) -> EigenSpectrum {
        let g = make_grid(l, l, d, d, 1.0).unwrap();
        symmetric_eigenvalues(&correlation_matrix(&g, 0.0, &MotionState::stationary()).unwrap())
            .unwrap()
    }

    fn bare(eigenvalues: Vec<f64>) -> EigenSpectrum {
        let trace = eigenvalues.iter().sum();
        let n = eigenvalues.len();
        EigenSpectrum {
            eigenvalues,
            trace,
            grid_meta: GridMeta {
                n,
                n_x: n,
                n_z: 1,
                d_x: 0.5,
                d_z: 0.5,
                l_x: 1.0,
                l_z: 1.0,
                wavelength: 1.0,
            },
        }
    }

    #[test]
    fn identity_spectrum() {
        let g = RisGrid::with_counts(2, 1, 0.5, 0.5, 1.0).unwrap();
        let s = symmetric_eigenvalues(
            &correlation_matrix(&g, 0.0, &MotionState::stationary()).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_element_closed_form() {
        let g = RisGrid::with_counts(2, 1, 0.125, 0.125, 1.0).unwrap();
        let s = symmetric_eigenvalues(
            &correlation_matrix(&g, 0.0, &MotionState::stationary()).unwrap(),
        )
        .unwrap();
        let rho = sinc(0.25);
        assert_abs_diff_eq!(s.eigenvalues[0], 1.0 + rho, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[1], 1.0 - rho, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[0], 1.90032, epsilon = 1e-5);
        assert_abs_diff_eq!(power_capture(&s, 1).unwrap(), 0.95016, epsilon = 1e-5);
        assert_abs_diff_eq!(power_capture(&s, 2).unwrap(), 1.0, epsilon = 1e-15);
        assert!(power_capture(&s, 0).is_err());
        assert!(power_capture(&s, 3).is_err());
    }

    #[test]
    fn rejects_lagged_and_asymmetric_input() {
        let g = make_grid(1.0, 1.0, 0.25, 0.25, 1.0).unwrap();
        let m = MotionState::along_x(1.0).unwrap();
        let lagged = correlation_matrix(&g, 0.1, &m).unwrap();
        assert!(matches!(
            symmetric_eigenvalues(&lagged),
            Err(Error::Unsupported(_))
        ));

        let mut skewed = correlation_matrix(&g, 0.0, &m).unwrap();
        skewed.values[(0, 1)] += 1e-9;
        assert!(matches!(
            symmetric_eigenvalues(&skewed),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn eigen_budget() {
        let g = make_grid(1.0, 1.0, 0.25, 0.25, 1.0).unwrap();
        let r = correlation_matrix(&g, 0.0, &MotionState::stationary()).unwrap();
        let err =
            symmetric_eigenvalues_with_budget(&r, MemoryBudget::from_bytes(1000)).unwrap_err();
        assert!(
            matches!(err, Error::Capacity { required_bytes, .. } if required_bytes == 25 * 25 * 8 * 3)
        );
    }

    #[test]
    fn non_psd_input_breaks_contract() {
        let g = RisGrid::with_counts(2, 1, 0.125, 0.125, 1.0).unwrap();
        let mut r = correlation_matrix(&g, 0.0, &MotionState::stationary()).unwrap();
        r.values = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            symmetric_eigenvalues(&r),
            Err(Error::NumericalContract(_))
        ));
    }

    #[test]
    fn sinc_spectra_conserve_trace_and_stay_psd() {
        for (l, d) in [(2.0, 0.5), (2.0, 0.25), (1.5, 0.125), (4.0, 0.5)] {
            let s = spectrum_of(l, d);
            let n = s.len() as f64;
            assert!((s.eigenvalues.iter().sum::<f64>() - n).abs() <= 1e-8 * n);
            assert!(*s.eigenvalues.last().unwrap() >= -1e-8 * n);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn dof_limit_examples() {
        assert_eq!(dof_limit(4.0, 4.0, 1.0).unwrap(), 50);
        assert_eq!(dof_limit(0.4, 0.4, 0.1).unwrap(), 50);
        assert_eq!(dof_limit(1.0, 1.0, 1.0).unwrap(), 3);
        assert_eq!(dof_limit(12.0, 12.0, 1.0).unwrap(), 452);
        assert_eq!(dof_limit(1.2, 1.2, 0.1).unwrap(), 452);
        assert!(dof_limit(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rank_methods() {
        let s = bare(vec![1.9, 0.1]);
        assert_eq!(effective_rank(&s, RankMethod::Knee).unwrap(), 1);
        assert_eq!(
            effective_rank(&s, RankMethod::Threshold { delta: 0.5 }).unwrap(),
            1
        );
        assert_eq!(
            effective_rank(&s, RankMethod::Power { gamma: 0.9 }).unwrap(),
            1
        );
        assert_eq!(
            effective_rank(&s, RankMethod::Power { gamma: 1.0 }).unwrap(),
            2
        );

        let flat = bare(vec![1.0; 6]);
        assert!(matches!(
            effective_rank(&flat, RankMethod::Knee),
            Err(Error::DegenerateSpectrum(_))
        ));
        assert_eq!(
            effective_rank(&flat, RankMethod::Threshold { delta: 0.9 }).unwrap(),
            6
        );
    }

    #[test]
    fn dominant_rank_tracks_half_wavelength_law() {
        let s = spectrum_of(4.0, 0.5);
        let rank = effective_rank(&s, RankMethod::default()).unwrap() as f64;
        let target = rank_eq10(16.0);
        assert!(
            (rank - target).abs() <= 0.1 * target,
            "rank {rank} vs {target}"
        );
    }

    #[test]
    fn literal_knee_overshoots_on_sinc_spectra() {
        // the largest consecutive ratio sits in the numerical tail, which is
        // why it is not the default
        let s = spectrum_of(4.0, 0.125);
        let knee = effective_rank(&s, RankMethod::Knee).unwrap() as f64;
        assert!(knee > 1.5 * rank_eq11(4.0, 4.0, 0.125, 0.125, 1.0).unwrap());
    }

    #[test]
    fn rank_method_parsing() {
        assert_eq!("knee".parse::<RankMethod>().unwrap(), RankMethod::Knee);
        assert_eq!(
            "dominant".parse::<RankMethod>().unwrap(),
            RankMethod::default()
        );
        assert_eq!(
            "power:0.95".parse::<RankMethod>().unwrap(),
            RankMethod::Power { gamma: 0.95 }
        );
        assert_eq!(
            "threshold:0.1".parse::<RankMethod>().unwrap(),
            RankMethod::Threshold { delta: 0.1 }
        );
        for bad in [
            "power",
            "power:1.5",
            "threshold:-1",
            "elbow",
            "knee:2",
            "dominant:x",
        ] {
            assert!(bad.parse::<RankMethod>().is_err(), "{bad}");
        }
        for m in [
            RankMethod::Knee,
            RankMethod::default(),
            RankMethod::Power { gamma: 0.5 },
        ] {
            assert_eq!(m.to_string().parse::<RankMethod>().unwrap(), m);
        }
    }

    #[test]
    fn aperture_law_examples() {
        assert_abs_diff_eq!(rank_eq10(16.0), 70.48, epsilon = 1e-2);
        assert_abs_diff_eq!(
            rank_eq10(64.0),
            201.06 + 4.4 * 64f64.powf(0.55),
            epsilon = 1e-2
        );
        assert!(rank_eq10(1e6) / 1e6 - PI <= 0.01);
        assert!(rank_eq10(1e6) / 1e6 > PI);
    }

    #[test]
    fn spacing_law_examples() {
        let half = rank_eq11(4.0, 4.0, 0.5, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(half, rank_eq10(16.0), epsilon = 1e-9);

        let b = 4.0 * (rank_eq10(16.0) / 50.0 - 1.0).powi(4);
        assert_abs_diff_eq!(b, 0.1126, epsilon = 1e-4);
        let quarter = rank_eq11(4.0, 4.0, 0.25, 0.25, 1.0).unwrap();
        assert_abs_diff_eq!(
            quarter,
            50.0 * (1.0 + (b / 16.0).powf(0.25)),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(quarter, 64.5, epsilon = 0.05);

        let dense = rank_eq11(4.0, 4.0, 1e-9, 1e-9, 1.0).unwrap();
        assert!((dense / 50.0 - 1.0) < 1e-3);

        assert!(matches!(
            rank_eq11(4.0, 4.0, 0.6, 0.5, 1.0),
            Err(Error::OutOfDomain(_))
        ));
        assert!(matches!(
            rank_eq11(0.3, 0.3, 0.1, 0.1, 1.0),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn dof_report_fields() {
        let s = spectrum_of(4.0, 0.5);
        let r = DofReport::new(&s, RankMethod::default()).unwrap();
        assert_eq!(r.dof_limit, 50);
        assert!(r.rank_estimate_eq10.is_some());
        assert_abs_diff_eq!(
            r.rank_estimate_eq11.unwrap(),
            r.rank_estimate_eq10.unwrap(),
            epsilon = 1e-9
        );
        assert!((1..=s.len()).contains(&r.effective_rank));
        assert!((0.0..=1.0).contains(&r.power_at_limit));
        assert_abs_diff_eq!(r.rho.unwrap(), r.effective_rank as f64 / 50.0);

        let s = spectrum_of(2.0, 0.25);
        let r = DofReport::new(&s, RankMethod::Knee).unwrap();
        assert!(r.rank_estimate_eq10.is_none());
        assert!(r.rank_estimate_eq11.is_some());
    }
}

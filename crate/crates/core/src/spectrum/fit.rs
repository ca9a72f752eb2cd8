//! Least-squares fit of the finite-aperture correction `c1·A^c2` on top of
//! the asymptotic `πA`.
//!
//! For a fixed exponent the optimal `c1` is linear, so the exponent is
//! located on the profiled objective (coarse grid, then golden section) and
//! the pair is polished with Gauss-Newton.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

const EXPONENT_RANGE: (f64, f64) = (-1.0, 2.0);
const GRID_STEP: f64 = 0.01;
const GOLDEN_TOL: f64 = 1e-12;
const NEWTON_ITERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DofFit {
    pub c1: f64,
    pub c2: f64,
    /// Sum of squared residuals at the optimum.
    pub residual: f64,
}

/// Fits `rank ≈ πA + c1·A^c2` to `(A, rank)` samples.
pub fn fit_dof_coefficients(samples: &[(f64, f64)]) -> Result<DofFit> {
    if samples
        .iter()
        .any(|&(a, r)| !(a.is_finite() && a > 0.0 && r.is_finite()))
    {
        return Err(Error::Fit("areas must be positive and ranks finite".into()));
    }
    let mut areas: Vec<f64> = samples.iter().map(|s| s.0).collect();
    areas.sort_by(f64::total_cmp);
    areas.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    if areas.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 distinct areas, got {}",
            areas.len()
        )));
    }

    let points: Vec<(f64, f64)> = samples.iter().map(|&(a, r)| (a, r - PI * a)).collect();
    let profile = |c2: f64| {
        let c1 = linear_coefficient(&points, c2);
        (c1, sse(&points, c1, c2))
    };

    let steps = ((EXPONENT_RANGE.1 - EXPONENT_RANGE.0) / GRID_STEP).round() as usize;
    let seed = (0..=steps)
        .map(|i| EXPONENT_RANGE.0 + i as f64 * GRID_STEP)
        .min_by(|&a, &b| profile(a).1.total_cmp(&profile(b).1))
        .unwrap();
    let c2 = golden_section(|c2| profile(c2).1, seed - GRID_STEP, seed + GRID_STEP);
    let (c1, _) = profile(c2);
    let (c1, c2) = gauss_newton(&points, c1, c2)?;

    Ok(DofFit {
        c1,
        c2,
        residual: sse(&points, c1, c2),
    })
}

fn linear_coefficient(points: &[(f64, f64)], c2: f64) -> f64 {
    let (num, den) = points.iter().fold((0.0, 0.0), |(n, d), &(a, y)| {
        let basis = a.powf(c2);
        (n + y * basis, d + basis * basis)
    });
    num / den
}

fn sse(points: &[(f64, f64)], c1: f64, c2: f64) -> f64 {
    points
        .iter()
        .map(|&(a, y)| (y - c1 * a.powf(c2)).powi(2))
        .sum()
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

fn gauss_newton(points: &[(f64, f64)], mut c1: f64, mut c2: f64) -> Result<(f64, f64)> {
    let mut current = sse(points, c1, c2);
    for _ in 0..NEWTON_ITERS {
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for &(a, y) in points {
            let basis = a.powf(c2);
            let j = Vector2::new(basis, c1 * basis * a.ln());
            jtj += j * j.transpose();
            jtr += j * (y - c1 * basis);
        }
        let scale = jtj[(0, 0)].max(jtj[(1, 1)]);
        if !(jtj.determinant().abs() > 1e-12 * scale * scale) {
            return Err(Error::Fit(
                "rank-deficient samples: exponent is not identifiable".into(),
            ));
        }
        let step = jtj.lu().solve(&jtr).expect("checked non-singular");
        let (n1, n2) = (c1 + step[0], c2 + step[1]);
        let next = sse(points, n1, n2);
        if !(next <= current) {
            break;
        }
        let converged = step.norm() <= 1e-15 * (1.0 + c1.abs() + c2.abs());
        (c1, c2, current) = (n1, n2, next);
        if converged {
            break;
        }
    }
    Ok((c1, c2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::rank_eq10;

    #[test]
    fn recovers_exact_model() {
        let samples: Vec<_> = [16.0, 64.0, 144.0]
            .iter()
            .map(|&a| (a, rank_eq10(a)))
            .collect();
        let fit = fit_dof_coefficients(&samples).unwrap();
        assert!((fit.c1 - 4.4).abs() <= 1e-6, "{fit:?}");
        assert!((fit.c2 - 0.55).abs() <= 1e-6, "{fit:?}");
        assert!(fit.residual <= 1e-12);
    }

    #[test]
    fn noisy_samples_stay_close() {
        let samples: Vec<_> = [9.0, 16.0, 36.0, 64.0, 100.0, 144.0]
            .iter()
            .enumerate()
            .map(|(i, &a)| (a, rank_eq10(a) + if i % 2 == 0 { 0.5 } else { -0.5 }))
            .collect();
        let fit = fit_dof_coefficients(&samples).unwrap();
        assert!((fit.c1 - 4.4).abs() < 0.5, "{fit:?}");
        assert!((fit.c2 - 0.55).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn rejects_degenerate_sets() {
        assert!(fit_dof_coefficients(&[(16.0, 70.0), (64.0, 240.0)]).is_err());
        assert!(fit_dof_coefficients(&[(16.0, 70.0), (16.0, 71.0), (64.0, 240.0)]).is_err());
        assert!(fit_dof_coefficients(&[(-1.0, 1.0), (16.0, 70.0), (64.0, 240.0)]).is_err());
        // pure πA leaves nothing for the correction term to explain
        let flat: Vec<_> = [16.0, 64.0, 144.0].iter().map(|&a| (a, PI * a)).collect();
        assert!(matches!(fit_dof_coefficients(&flat), Err(Error::Fit(_))));
    }
}

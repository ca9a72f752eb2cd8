use std::path::{Path, PathBuf};

use ris_corr::spectrum::{eigen_bytes, symmetric_eigenvalues_with_budget};
use ris_corr::{
    correlation_matrix_with_budget, correlation_slice, estimate_correlation_series,
    fit_dof_coefficients, make_grid, rank_eq10, rank_eq11, DofReport, EigenSpectrum, RisGrid,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::table::{write_table, Cell, Table};

/// Files written and human-readable summary lines of one run.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Runs the configured experiment and writes its tables into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let mut summary = Vec::new();
    let tables = match cfg.experiment {
        Experiment::CorrMatrix => corr_matrix(cfg)?,
        Experiment::McValidate => mc_validate(cfg, &mut summary)?,
        Experiment::Spectrum => vec![("spectrum", eigen_table(&spectrum(cfg)?))],
        Experiment::Dof => dof(cfg, &mut summary)?,
        Experiment::Fit => fit(cfg, &mut summary)?,
        Experiment::Fig2 => fig2(cfg)?,
        Experiment::Fig3 => fig3(cfg, &mut summary)?,
        Experiment::Fig4 | Experiment::Fig5 | Experiment::Fig6 => {
            let name = match cfg.experiment {
                Experiment::Fig4 => "fig4_slice",
                Experiment::Fig5 => "fig5_slice",
                _ => "fig6_slice",
            };
            vec![(name, slice(cfg, true)?)]
        }
    };

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut files = Vec::with_capacity(tables.len());
    for (name, table) in tables {
        let path = out_dir.join(format!("{name}.{}", cfg.format.extension()));
        write_table(&table.with_config(cfg.echo()), cfg.format, &path)?;
        files.push(path);
    }
    Ok(RunOutput { files, summary })
}

fn grid(cfg: &ExperimentConfig) -> Result<RisGrid, CliError> {
    let lam = cfg.wavelength_m;
    let g = &cfg.grid;
    Ok(make_grid(
        g.l_x * lam,
        g.l_z * lam,
        g.d_x * lam,
        g.d_z * lam,
        lam,
    )?)
}

fn square_grid(area: f64, spacing: f64, wavelength: f64) -> Result<RisGrid, CliError> {
    let side = area.sqrt() * wavelength;
    Ok(make_grid(
        side,
        side,
        spacing * wavelength,
        spacing * wavelength,
        wavelength,
    )?)
}

/// Converts a travelled distance `vτ` (in wavelengths) to seconds.
fn lag_seconds(cfg: &ExperimentConfig, v_tau: f64) -> f64 {
    if v_tau == 0.0 {
        0.0
    } else {
        v_tau * cfg.wavelength_m / cfg.motion.speed
    }
}

fn corr_matrix(cfg: &ExperimentConfig) -> Result<Vec<(&'static str, Table)>, CliError> {
    let g = grid(cfg)?;
    let motion = cfg.motion_state()?;
    let mut t = Table::new(&["m", "n", "v_tau", "value"]);
    for &v_tau in &cfg.lags {
        let r = correlation_matrix_with_budget(&g, lag_seconds(cfg, v_tau), &motion, cfg.budget())?;
        for m in 0..r.len() {
            for n in 0..r.len() {
                t.push(vec![
                    (m + 1).into(),
                    (n + 1).into(),
                    v_tau.into(),
                    r.values[(m, n)].into(),
                ]);
            }
        }
    }
    Ok(vec![("corr_matrix", t)])
}

fn mc_validate(
    cfg: &ExperimentConfig,
    summary: &mut Vec<String>,
) -> Result<Vec<(&'static str, Table)>, CliError> {
    let g = grid(cfg)?;
    let motion = cfg.motion_state()?;
    let seed = cfg.mc.seed.expect("validated");
    let taus: Vec<f64> = cfg.lags.iter().map(|&l| lag_seconds(cfg, l)).collect();
    let series = estimate_correlation_series(
        &g,
        &motion,
        &taus,
        cfg.mc.waves,
        &cfg.mc.realizations,
        seed,
        cfg.budget(),
    )?;
    let exact = taus
        .iter()
        .map(|&tau| correlation_matrix_with_budget(&g, tau, &motion, cfg.budget()))
        .collect::<Result<Vec<_>, _>>()?;

    let mut t = Table::new(&[
        "v_tau",
        "realizations",
        "waves",
        "max_abs_error",
        "max_imag",
    ]);
    for (l, &v_tau) in cfg.lags.iter().enumerate() {
        let errors: Vec<f64> = series
            .iter()
            .map(|s| s[l].max_abs_error(&exact[l]))
            .collect();
        for (s, err) in series.iter().zip(&errors) {
            let est = &s[l];
            t.push(vec![
                v_tau.into(),
                est.realizations.into(),
                est.waves.into(),
                (*err).into(),
                est.max_imag.into(),
            ]);
        }
        let monotone = errors.windows(2).all(|w| w[1] < w[0]);
        summary.push(format!(
            "v_tau = {v_tau}: max-abs error {:.4} after {} realizations (monotone in K: {monotone})",
            errors.last().unwrap(),
            cfg.mc.realizations.last().unwrap()
        ));
    }
    Ok(vec![("mc_validate", t)])
}

fn spectrum(cfg: &ExperimentConfig) -> Result<EigenSpectrum, CliError> {
    spectrum_of(&grid(cfg)?, cfg)
}

fn spectrum_of(g: &RisGrid, cfg: &ExperimentConfig) -> Result<EigenSpectrum, CliError> {
    cfg.budget()
        .check("eigendecomposition", eigen_bytes(g.len()))?;
    let r =
        correlation_matrix_with_budget(g, 0.0, &ris_corr::MotionState::stationary(), cfg.budget())?;
    Ok(symmetric_eigenvalues_with_budget(&r, cfg.budget())?)
}

fn eigen_table(s: &EigenSpectrum) -> Table {
    let mut t = Table::new(&["index", "eigenvalue", "cumulative_power"]);
    for (i, (l, c)) in s.eigenvalues.iter().zip(s.cumulative_power()).enumerate() {
        t.push(vec![(i + 1).into(), (*l).into(), c.into()]);
    }
    t
}

fn dof(
    cfg: &ExperimentConfig,
    summary: &mut Vec<String>,
) -> Result<Vec<(&'static str, Table)>, CliError> {
    let s = spectrum(cfg)?;
    let report = DofReport::new(&s, cfg.rank_method()?)?;
    let mut t = Table::new(&[
        "n",
        "method",
        "effective_rank",
        "dof_limit",
        "rank_eq10",
        "rank_eq11",
        "power_at_limit",
        "rho",
    ]);
    t.push(vec![
        s.len().into(),
        report.method.to_string().as_str().into(),
        report.effective_rank.into(),
        report.dof_limit.into(),
        report.rank_estimate_eq10.into(),
        report.rank_estimate_eq11.into(),
        report.power_at_limit.into(),
        report.rho.into(),
    ]);
    summary.push(format!(
        "N = {}: effective rank {} vs limit {} ({:.1}% of power in the top {})",
        s.len(),
        report.effective_rank,
        report.dof_limit,
        100.0 * report.power_at_limit,
        report.dof_limit
    ));
    Ok(vec![("dof", t)])
}

/// Effective rank of a square aperture `area` (in λ²) at `spacing` (in λ).
fn measured_rank(
    cfg: &ExperimentConfig,
    area: f64,
    spacing: f64,
) -> Result<(usize, DofReport), CliError> {
    let g = square_grid(area, spacing, cfg.wavelength_m)?;
    let s = spectrum_of(&g, cfg)?;
    let report = DofReport::new(&s, cfg.rank_method()?)?;
    Ok((g.len(), report))
}

fn fit(
    cfg: &ExperimentConfig,
    summary: &mut Vec<String>,
) -> Result<Vec<(&'static str, Table)>, CliError> {
    let samples = match &cfg.fit_samples {
        Some(s) => s.clone(),
        None => {
            let spacing = cfg.sweep.spacings[0];
            cfg.sweep
                .areas
                .iter()
                .map(|&a| Ok((a, measured_rank(cfg, a, spacing)?.1.effective_rank as f64)))
                .collect::<Result<Vec<_>, CliError>>()?
        }
    };
    let result = fit_dof_coefficients(&samples)?;

    let mut st = Table::new(&["area", "rank"]);
    for &(a, r) in &samples {
        st.push(vec![a.into(), r.into()]);
    }
    let mut ft = Table::new(&["c1", "c2", "residual", "samples"]);
    ft.push(vec![
        result.c1.into(),
        result.c2.into(),
        result.residual.into(),
        samples.len().into(),
    ]);
    summary.push(format!(
        "rank ≈ πA + {:.4}·A^{:.4} (residual {:.3e})",
        result.c1, result.c2, result.residual
    ));
    Ok(vec![("fit_samples", st), ("fit", ft)])
}

fn slice(cfg: &ExperimentConfig, with_lag: bool) -> Result<Table, CliError> {
    // Normalized wavelength keeps the λ-multiple grid points exact.
    let v_tau = if with_lag {
        cfg.slice.v_tau.values()
    } else {
        vec![0.0]
    };
    let table = correlation_slice(
        1.0,
        &cfg.motion_state()?,
        &cfg.slice.delta_x.values(),
        &cfg.slice.delta_z.values(),
        &v_tau,
    )?;
    let mut t = if with_lag {
        Table::new(&["delta_x", "delta_z", "v_tau", "value"])
    } else {
        Table::new(&["delta_x", "delta_z", "value"])
    };
    for [dx, dz, vt, value] in table.long_form() {
        if with_lag {
            t.push(vec![dx.into(), dz.into(), vt.into(), value.into()]);
        } else {
            t.push(vec![dx.into(), dz.into(), value.into()]);
        }
    }
    Ok(t)
}

fn fig2(cfg: &ExperimentConfig) -> Result<Vec<(&'static str, Table)>, CliError> {
    Ok(vec![
        ("fig2_spatial", slice(cfg, false)?),
        ("fig2_eigenvalues", eigen_table(&spectrum(cfg)?)),
    ])
}

fn fig3(
    cfg: &ExperimentConfig,
    summary: &mut Vec<String>,
) -> Result<Vec<(&'static str, Table)>, CliError> {
    let mut t = Table::new(&[
        "area",
        "spacing",
        "n",
        "status",
        "measured_rank",
        "dof_limit",
        "rho",
        "rank_eq10",
        "rank_eq11",
        "power_at_limit",
    ]);
    for &area in &cfg.sweep.areas {
        for &spacing in &cfg.sweep.spacings {
            let g = square_grid(area, spacing, cfg.wavelength_m)?;
            let needed = eigen_bytes(g.len());
            if needed > cfg.budget().bytes() {
                summary.push(format!(
                    "skipped A = {area}, d = {spacing}: N = {} needs {needed} bytes",
                    g.len()
                ));
                t.push(vec![
                    area.into(),
                    spacing.into(),
                    g.len().into(),
                    "skipped:capacity".into(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                ]);
                continue;
            }
            let (n, report) = measured_rank(cfg, area, spacing)?;
            let aperture_law = (spacing == 0.5).then(|| rank_eq10(area));
            let spacing_law = rank_eq11(area.sqrt(), area.sqrt(), spacing, spacing, 1.0).ok();
            t.push(vec![
                area.into(),
                spacing.into(),
                n.into(),
                "ok".into(),
                report.effective_rank.into(),
                report.dof_limit.into(),
                report.rho.into(),
                aperture_law.into(),
                spacing_law.into(),
                report.power_at_limit.into(),
            ]);
        }
    }
    Ok(vec![("fig3_ranks", t)])
}

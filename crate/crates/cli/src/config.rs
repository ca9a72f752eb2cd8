//! Experiment configuration.
//!
//! A config file is a partial JSON document laid over the defaults of the
//! chosen experiment. Every length is a multiple of the wavelength; only
//! `wavelength_m` and the motion speed carry physical units.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use ris_corr::{MemoryBudget, MotionState, RankMethod};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CorrMatrix,
    McValidate,
    Spectrum,
    Dof,
    Fit,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Experiment {
    pub fn needs_seed(self) -> bool {
        matches!(self, Experiment::McValidate)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("unit variant");
        f.write_str(v.as_str().expect("string tag"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Aperture and spacing in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub l_x: f64,
    pub l_z: f64,
    pub d_x: f64,
    pub d_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionConfig {
    /// meters per second
    pub speed: f64,
    /// radians
    pub azimuth: f64,
    /// radians
    pub zenith: f64,
}

/// Either an explicit list or an inclusive `start..=stop` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Sweep {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Sweep::Range { start, stop, step }
    }

    /// Points are `start + i·step`, so binary-exact steps give exact points.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::List(v) => v.clone(),
            Sweep::Range { start, stop, step } => {
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| start + i as f64 * step).collect()
            }
        }
    }

    fn validate(&self, field: &str) -> Result<(), CliError> {
        if let Sweep::Range { start, stop, step } = self {
            if !(step.is_finite()
                && *step > 0.0
                && start.is_finite()
                && stop.is_finite()
                && stop >= start)
            {
                return Err(CliError::config(
                    field,
                    "range needs finite start <= stop and step > 0",
                ));
            }
        }
        let v = self.values();
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::config(
                field,
                "sweep must be non-empty and finite",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceConfig {
    pub delta_x: Sweep,
    pub delta_z: Sweep,
    pub v_tau: Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub waves: usize,
    /// Realization counts at which the estimate is reported; the last one is
    /// the total.
    pub realizations: Vec<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Square apertures `L_xL_z/λ²`.
    pub areas: Vec<f64>,
    /// Spacings in wavelengths (`d_x = d_z`).
    pub spacings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub grid: GridConfig,
    pub wavelength_m: f64,
    pub motion: MotionConfig,
    /// Lags as travelled distance `vτ` in wavelengths.
    pub lags: Vec<f64>,
    pub slice: SliceConfig,
    pub mc: McConfig,
    pub sweep: SweepConfig,
    /// `(A, rank)` pairs for `fit`; measured from `sweep.areas` when absent.
    pub fit_samples: Option<Vec<(f64, f64)>>,
    pub rank_method: String,
    pub mem_budget_mib: u64,
    pub format: Format,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mem_budget_mib: Option<u64>,
    pub rank_method: Option<String>,
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let fig = Sweep::range(0.0, 4.0, 0.125);
        let mut cfg = Self {
            experiment,
            grid: GridConfig {
                l_x: 4.0,
                l_z: 4.0,
                d_x: 0.125,
                d_z: 0.125,
            },
            wavelength_m: 0.1,
            motion: MotionConfig {
                speed: 1.0,
                azimuth: 0.0,
                zenith: PI / 2.0,
            },
            lags: vec![0.0],
            slice: SliceConfig {
                delta_x: fig.clone(),
                delta_z: fig.clone(),
                v_tau: fig,
            },
            mc: McConfig {
                waves: 10_000,
                realizations: vec![100, 1_000, 10_000],
                seed: None,
            },
            sweep: SweepConfig {
                areas: vec![16.0, 64.0, 144.0],
                spacings: vec![0.5, 0.25, 0.125],
            },
            fit_samples: None,
            rank_method: RankMethod::default().to_string(),
            mem_budget_mib: MemoryBudget::DEFAULT_MIB,
            format: Format::Csv,
        };
        match experiment {
            Experiment::McValidate => {
                cfg.grid = GridConfig {
                    l_x: 1.0,
                    l_z: 1.0,
                    d_x: 0.25,
                    d_z: 0.25,
                };
                cfg.motion = MotionConfig {
                    speed: 1.0,
                    azimuth: PI / 36.0,
                    zenith: 4.0 * PI / 9.0,
                };
                cfg.lags = vec![0.0, 0.25];
            }
            Experiment::Fig2 => cfg.slice.v_tau = Sweep::List(vec![0.0]),
            Experiment::Fig5 => {
                cfg.motion.azimuth = PI / 2.0;
            }
            Experiment::Fig6 => {
                cfg.motion.azimuth = PI / 36.0;
                cfg.motion.zenith = 4.0 * PI / 9.0;
            }
            Experiment::Fit => cfg.sweep.spacings = vec![0.5],
            _ => {}
        }
        cfg
    }

    /// Defaults, then the file (if any), then command-line overrides.
    pub fn resolve(
        experiment: Experiment,
        file: Option<&Path>,
        overrides: &Overrides,
    ) -> Result<Self, CliError> {
        let mut value =
            serde_json::to_value(Self::defaults(experiment)).expect("config serializes");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let user: Value = serde_json::from_str(&text).map_err(|e| {
                CliError::Config(format!(
                    "{}: line {} column {}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ))
            })?;
            if !user.is_object() {
                return Err(CliError::Config(format!(
                    "{}: top level must be an object",
                    path.display()
                )));
            }
            if let Some(tag) = user.get("experiment") {
                if tag != &Value::String(experiment.to_string()) {
                    return Err(CliError::config(
                        "experiment",
                        format!("config is for {tag}, but `{experiment}` was requested"),
                    ));
                }
            }
            merge(&mut value, user);
        }
        let mut cfg: Self =
            serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(seed) = overrides.seed {
            cfg.mc.seed = Some(seed);
        }
        if let Some(mib) = overrides.mem_budget_mib {
            cfg.mem_budget_mib = mib;
        }
        if let Some(m) = &overrides.rank_method {
            cfg.rank_method = m.clone();
        }
        if let Some(f) = overrides.format {
            cfg.format = f;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CliError::config(
                    field,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        positive("grid.l_x", self.grid.l_x)?;
        positive("grid.l_z", self.grid.l_z)?;
        positive("grid.d_x", self.grid.d_x)?;
        positive("grid.d_z", self.grid.d_z)?;
        positive("wavelength_m", self.wavelength_m)?;
        self.motion_state()?;
        if self.lags.is_empty() || self.lags.iter().any(|l| !l.is_finite()) {
            return Err(CliError::config("lags", "need at least one finite lag"));
        }
        if self.motion.speed == 0.0 && self.lags.iter().any(|&l| l != 0.0) {
            return Err(CliError::config(
                "lags",
                "non-zero lags need a non-zero speed",
            ));
        }
        self.slice.delta_x.validate("slice.delta_x")?;
        self.slice.delta_z.validate("slice.delta_z")?;
        self.slice.v_tau.validate("slice.v_tau")?;
        if self.mc.waves == 0 {
            return Err(CliError::config("mc.waves", "must be at least 1"));
        }
        let ks = &self.mc.realizations;
        if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::config(
                "mc.realizations",
                "must be positive and strictly increasing",
            ));
        }
        if self.experiment.needs_seed() && self.mc.seed.is_none() {
            return Err(CliError::config(
                "mc.seed",
                "a seed is mandatory for Monte Carlo runs (--seed)",
            ));
        }
        for (field, sweep) in [
            ("sweep.areas", &self.sweep.areas),
            ("sweep.spacings", &self.sweep.spacings),
        ] {
            if sweep.is_empty() || sweep.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(CliError::config(field, "must be non-empty and positive"));
            }
        }
        self.rank_method()?;
        if self.mem_budget_mib == 0 {
            return Err(CliError::config("mem_budget_mib", "must be at least 1"));
        }
        Ok(())
    }

    pub fn motion_state(&self) -> Result<MotionState, CliError> {
        MotionState::new(self.motion.speed, self.motion.azimuth, self.motion.zenith)
            .map_err(|e| CliError::config("motion", e.to_string()))
    }

    pub fn rank_method(&self) -> Result<RankMethod, CliError> {
        self.rank_method
            .parse()
            .map_err(|e: ris_corr::Error| CliError::config("rank_method", e.to_string()))
    }

    pub fn budget(&self) -> MemoryBudget {
        MemoryBudget::from_mib(self.mem_budget_mib)
    }

    /// One-line JSON echo used in output headers.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn defaults_validate() {
        for e in [
            Experiment::CorrMatrix,
            Experiment::Spectrum,
            Experiment::Dof,
            Experiment::Fit,
            Experiment::Fig2,
            Experiment::Fig3,
            Experiment::Fig4,
            Experiment::Fig5,
            Experiment::Fig6,
        ] {
            ExperimentConfig::defaults(e).validate().unwrap();
        }
        // seed is mandatory
        assert!(ExperimentConfig::defaults(Experiment::McValidate)
            .validate()
            .is_err());
        let over = Overrides {
            seed: Some(42),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(Experiment::McValidate, None, &over).unwrap();
        assert_eq!(cfg.mc.seed, Some(42));
    }

    #[test]
    fn partial_file_overlays_defaults() {
        let f = write_tmp(r#"{"grid": {"l_x": 2.0}, "lags": [0.0, 1.5]}"#);
        let cfg = ExperimentConfig::resolve(
            Experiment::CorrMatrix,
            Some(f.path()),
            &Overrides::default(),
        )
        .unwrap();
        assert_eq!(cfg.grid.l_x, 2.0);
        assert_eq!(cfg.grid.l_z, 4.0);
        assert_eq!(cfg.lags, vec![0.0, 1.5]);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let f = write_tmp("{\n  \"grid\": {\"l_x\": 2.0,}\n}");
        let err =
            ExperimentConfig::resolve(Experiment::Fig2, Some(f.path()), &Overrides::default())
                .unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let f = write_tmp(r#"{"grid": {"l_y": 2.0}}"#);
        let err =
            ExperimentConfig::resolve(Experiment::Fig2, Some(f.path()), &Overrides::default())
                .unwrap_err();
        assert!(err.to_string().contains("l_y"), "{err}");

        let f = write_tmp(r#"{"grid": {"d_x": -1}}"#);
        let err =
            ExperimentConfig::resolve(Experiment::Fig2, Some(f.path()), &Overrides::default())
                .unwrap_err();
        assert!(err.to_string().contains("grid.d_x"), "{err}");

        let f = write_tmp(r#"{"experiment": "fig4"}"#);
        assert!(
            ExperimentConfig::resolve(Experiment::Fig2, Some(f.path()), &Overrides::default())
                .is_err()
        );

        let over = Overrides {
            rank_method: Some("elbow".into()),
            ..Default::default()
        };
        let err = ExperimentConfig::resolve(Experiment::Dof, None, &over).unwrap_err();
        assert!(err.to_string().contains("rank_method"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ExperimentConfig::defaults(Experiment::Fig6);
        let back: ExperimentConfig = serde_json::from_str(&cfg.echo()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn sweep_ranges_are_exact_multiples() {
        let v = Sweep::range(0.0, 4.0, 0.125).values();
        assert_eq!(v.len(), 33);
        assert_eq!(v[32], 4.0);
        assert_eq!(v[8], 1.0);
        assert_eq!(Sweep::List(vec![0.5]).values(), vec![0.5]);
        assert!(Sweep::range(1.0, 0.0, 0.1).validate("x").is_err());
    }
}

//! Experiment configuration: TOML file layered over a gait preset, with
//! command-line and environment overrides on top.
//!
//! Every key is optional. Resolution order, lowest first: built-in defaults,
//! the preset, the config file, then overrides. [`ConfigFile::resolved`]
//! writes every key back out, which is what the run manifest stores.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tiltgait_core::analysis::GridSpec;
use tiltgait_core::gait::GaitError;
use tiltgait_core::sim::SimError;
use tiltgait_core::{GaitSchedule, ModelParams, ParamError, Sign, SimConfig, VehicleState};

pub const DEFAULT_PRESET: &str = "large";
pub const DEFAULT_OUT_DIR: &str = "out";
pub const DEFAULT_SEED: u64 = 0x5EED;
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("unknown preset `{0}` (expected `small` or `large`)")]
    UnknownPreset(String),
    #[error("[gait] phase_sign must be -1 or 1, got {0}")]
    PhaseSign(i8),
    #[error("[sweep] lambda_sign must be -1 or 1, got {0}")]
    LambdaSign(i8),
    #[error("[sweep] resolution must be at least 1 in each direction, got {0:?}")]
    ZeroResolution([usize; 2]),
    #[error("[sweep] range {name} = {range:?} must be finite and ordered")]
    Range { name: &'static str, range: [f64; 2] },
    #[error("[model] {0}")]
    Model(#[from] ParamError),
    #[error("[gait] {0}")]
    Gait(#[from] GaitError),
    #[error("[sim] {0}")]
    Sim(SimError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_thrust: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kx1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kx2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ky1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ky2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_sign: Option<i8>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vx0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vy0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edot_range: Option<[f64; 2]>,
    /// Cells along `e` and `ė`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_sign: Option<i8>,
    /// Seed for randomized property sampling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

/// On-disk layout of a config or manifest file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub gait: GaitSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

/// Command-line and environment overrides; `None` leaves the lower layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub amplitude: Option<f64>,
    pub period: Option<f64>,
    pub grid_res: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub grid: GridSpec,
    pub lambda_sign: Sign,
    pub seed: u64,
    pub samples: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid: GridSpec::default(),
            lambda_sign: Sign::Pos,
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
        }
    }
}

/// Fully resolved and validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: String,
    pub out_dir: PathBuf,
    pub sim: SimConfig,
    pub sweep: SweepConfig,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            source: Box::new(e),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Every key set explicitly, so the file reproduces `cfg` on its own.
    pub fn resolved(cfg: &ExperimentConfig) -> Self {
        let SimConfig {
            params: p,
            gait: g,
            dt,
            duration,
            initial_state: s,
        } = cfg.sim;
        let sw = &cfg.sweep;
        ConfigFile {
            preset: Some(cfg.preset.clone()),
            out_dir: Some(cfg.out_dir.clone()),
            model: ModelSection {
                mass: Some(p.mass),
                theta: Some(p.theta),
                k_thrust: Some(p.k_thrust),
                kx1: Some(p.kx1),
                kx2: Some(p.kx2),
                ky1: Some(p.ky1),
                ky2: Some(p.ky2),
            },
            gait: GaitSection {
                amplitude: Some(g.amplitude),
                period: Some(g.period),
                phase_sign: Some(g.phase_sign.as_i8()),
            },
            sim: SimSection {
                dt: Some(dt),
                duration: Some(duration),
                x0: Some(s.x),
                y0: Some(s.y),
                vx0: Some(s.vx),
                vy0: Some(s.vy),
            },
            sweep: SweepSection {
                e_range: Some(sw.grid.e_range),
                edot_range: Some(sw.grid.edot_range),
                resolution: Some(sw.grid.resolution),
                lambda_sign: Some(sw.lambda_sign.as_i8()),
                seed: Some(sw.seed),
                samples: Some(sw.samples),
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config sections are plain tables")
    }
}

fn sign(v: i8, err: fn(i8) -> ConfigError) -> Result<Sign, ConfigError> {
    Sign::from_i8(v).ok_or(err(v))
}

fn range(name: &'static str, r: [f64; 2]) -> Result<[f64; 2], ConfigError> {
    if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] {
        Ok(r)
    } else {
        Err(ConfigError::Range { name, range: r })
    }
}

/// Layers `file` and `over` onto the defaults and validates the result.
pub fn resolve(file: &ConfigFile, over: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let preset = over
        .preset
        .clone()
        .or_else(|| file.preset.clone())
        .unwrap_or_else(|| DEFAULT_PRESET.to_owned());
    let mut gait = GaitSchedule::preset(&preset).ok_or_else(|| ConfigError::UnknownPreset(preset.clone()))?;

    let m = &file.model;
    let d = ModelParams::default();
    let params = ModelParams {
        mass: m.mass.unwrap_or(d.mass),
        theta: m.theta.unwrap_or(d.theta),
        k_thrust: m.k_thrust.unwrap_or(d.k_thrust),
        kx1: m.kx1.unwrap_or(d.kx1),
        kx2: m.kx2.unwrap_or(d.kx2),
        ky1: m.ky1.unwrap_or(d.ky1),
        ky2: m.ky2.unwrap_or(d.ky2),
    };
    params.validate()?;

    let g = &file.gait;
    gait.amplitude = over.amplitude.or(g.amplitude).unwrap_or(gait.amplitude);
    gait.period = over.period.or(g.period).unwrap_or(gait.period);
    if let Some(v) = g.phase_sign {
        gait.phase_sign = sign(v, ConfigError::PhaseSign)?;
    }
    gait.validate()?;

    let s = &file.sim;
    let base = SimConfig::default();
    let sim = SimConfig {
        params,
        gait,
        dt: over.dt.or(s.dt).unwrap_or(base.dt),
        duration: over.duration.or(s.duration).unwrap_or(base.duration),
        initial_state: VehicleState {
            x: s.x0.unwrap_or(0.0),
            y: s.y0.unwrap_or(0.0),
            vx: s.vx0.unwrap_or(0.0),
            vy: s.vy0.unwrap_or(0.0),
        },
    };
    sim.validate().map_err(ConfigError::Sim)?;

    let w = &file.sweep;
    let dg = GridSpec::default();
    let resolution = over.grid_res.map(|n| [n, n]).or(w.resolution).unwrap_or(dg.resolution);
    if resolution.contains(&0) {
        return Err(ConfigError::ZeroResolution(resolution));
    }
    let sweep = SweepConfig {
        grid: GridSpec {
            e_range: range("e_range", w.e_range.unwrap_or(dg.e_range))?,
            edot_range: range("edot_range", w.edot_range.unwrap_or(dg.edot_range))?,
            resolution,
        },
        lambda_sign: sign(w.lambda_sign.unwrap_or(1), ConfigError::LambdaSign)?,
        seed: over.seed.or(w.seed).unwrap_or(DEFAULT_SEED),
        samples: w.samples.unwrap_or(DEFAULT_SAMPLES),
    };

    let out_dir = over
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

    Ok(ExperimentConfig {
        preset,
        out_dir,
        sim,
        sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ConfigFile, ConfigError> {
        ConfigFile::parse(text, Path::new("test.toml"))
    }

    #[test]
    fn empty_file_gives_large_preset() {
        let cfg = resolve(&parse("").unwrap(), &Overrides::default()).unwrap();
        assert_eq!(cfg.sim, SimConfig::default());
        assert_eq!(cfg.sweep, SweepConfig::default());
    }

    #[test]
    fn layers_apply_in_order() {
        let file = parse("preset = \"small\"\n[gait]\nperiod = 4.0\n[sim]\ndt = 0.002\n").unwrap();
        let cfg = resolve(&file, &Overrides::default()).unwrap();
        assert_eq!(cfg.sim.gait.amplitude, GaitSchedule::small().amplitude);
        assert_eq!(cfg.sim.gait.period, 4.0);
        assert_eq!(cfg.sim.dt, 0.002);

        let over = Overrides {
            preset: Some("large".into()),
            dt: Some(0.001),
            ..Overrides::default()
        };
        let cfg = resolve(&file, &over).unwrap();
        assert_eq!(cfg.sim.gait.amplitude, GaitSchedule::large().amplitude);
        assert_eq!(cfg.sim.gait.period, 4.0);
        assert_eq!(cfg.sim.dt, 0.001);
    }

    #[test]
    fn unknown_field_names_location() {
        let err = parse("[sim]\ndt = 0.001\nstep = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("step"), "{msg}");
    }

    #[test]
    fn invalid_values_rejected() {
        let bad = [
            "preset = \"medium\"",
            "[gait]\nphase_sign = 0",
            "[sweep]\nresolution = [0, 3]",
            "[sweep]\ne_range = [1.0, -1.0]",
            "[model]\nmass = -1.0",
            "[sim]\ndt = 0.003",
        ];
        for text in bad {
            assert!(resolve(&parse(text).unwrap(), &Overrides::default()).is_err(), "{text}");
        }
    }

    #[test]
    fn manifest_round_trips() {
        let file = parse("preset = \"small\"\n[model]\nky1 = 4.5\n[sim]\ny0 = 0.1\n").unwrap();
        let cfg = resolve(
            &file,
            &Overrides {
                grid_res: Some(7),
                ..Overrides::default()
            },
        )
        .unwrap();
        let manifest = ConfigFile::resolved(&cfg).to_toml();
        let again = resolve(&parse(&manifest).unwrap(), &Overrides::default()).unwrap();
        assert_eq!(cfg, again);
    }
}

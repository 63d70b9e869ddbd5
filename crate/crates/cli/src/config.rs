//! Strict JSON run configuration.

use std::path::PathBuf;

use ewkv_core::data::DataKind;
use ewkv_core::SystemParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    Decay2d,
    Lplq,
    Profile,
    WeightedProfile,
    Semilinear2d,
    Gate,
    Helmholtz3d,
    Decay3d,
    Gate3d,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Decay2d => "decay2d",
            Experiment::Lplq => "lplq",
            Experiment::Profile => "profile",
            Experiment::WeightedProfile => "weighted-profile",
            Experiment::Semilinear2d => "semilinear2d",
            Experiment::Gate => "gate",
            Experiment::Helmholtz3d => "helmholtz3d",
            Experiment::Decay3d => "decay3d",
            Experiment::Gate3d => "gate3d",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub a: Option<f64>,
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub n: Option<usize>,
    #[serde(rename = "L")]
    pub half_length: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub nodes: Option<usize>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub output_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub m: Option<f64>,
    pub s: Option<f64>,
    pub gamma: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub p3: Option<f64>,
    pub data_kind: Option<DataKind>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub params: ParamsConfig,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seed for every randomized sample set.
    #[serde(default)]
    pub seed: u64,
}

/// A configuration problem, naming the offending key.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl RunConfig {
    /// A minimal configuration with `a = 1`, `b = 2` and all other fields defaulted.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            params: ParamsConfig {
                a: Some(1.0),
                b: Some(2.0),
            },
            numerics: Numerics::default(),
            physics: Physics::default(),
            output: OutputConfig::default(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.to_string();
            // name the missing key itself rather than its parent
            let key = match msg
                .strip_prefix("missing field `")
                .and_then(|m| m.split('`').next())
            {
                Some(field) if path == "." => field.to_string(),
                Some(field) => format!("{path}.{field}"),
                None => path,
            };
            ConfigError::new(key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn system_params(&self) -> Result<SystemParams, ConfigError> {
        let a = self
            .params
            .a
            .ok_or_else(|| ConfigError::new("params.a", "missing field `a`"))?;
        let b = self
            .params
            .b
            .ok_or_else(|| ConfigError::new("params.b", "missing field `b`"))?;
        SystemParams::new(a, b).map_err(|e| {
            ConfigError::new(
                if a > 0.0 && a.is_finite() {
                    "params.b"
                } else {
                    "params.a"
                },
                e.to_string(),
            )
        })
    }

    /// Checks every referenced field before dispatch.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.system_params()?;
        let n = &self.numerics;
        let positive = |key: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(ConfigError::new(
                key,
                format!("must be positive and finite, got {x}"),
            )),
            _ => Ok(()),
        };
        positive("numerics.L", n.half_length)?;
        positive("numerics.dt", n.dt)?;
        positive("numerics.t_end", n.t_end)?;
        positive("numerics.r_min", n.r_min)?;
        positive("numerics.r_max", n.r_max)?;
        positive("physics.amplitude", self.physics.amplitude)?;
        if let Some(size) = n.n {
            if size < 4 || !size.is_power_of_two() {
                return Err(ConfigError::new(
                    "numerics.n",
                    format!("must be a power of two ≥ 4, got {size}"),
                ));
            }
        }
        if let Some(nodes) = n.nodes {
            if nodes == 0 || nodes % ewkv_core::radial::PANEL_ORDER != 0 {
                return Err(ConfigError::new(
                    "numerics.nodes",
                    format!(
                        "must be a positive multiple of {}",
                        ewkv_core::radial::PANEL_ORDER
                    ),
                ));
            }
        }
        if let Some(times) = &n.output_times {
            if times.is_empty()
                || times.iter().any(|t| !(*t >= 0.0))
                || times.windows(2).any(|w| w[1] <= w[0])
            {
                return Err(ConfigError::new(
                    "numerics.output_times",
                    "must be nonempty, nonnegative and strictly ascending",
                ));
            }
        }
        let ph = &self.physics;
        if let Some(m) = ph.m {
            if !(1.0..2.0).contains(&m) {
                return Err(ConfigError::new(
                    "physics.m",
                    format!("must lie in [1, 2), got {m}"),
                ));
            }
        }
        if let Some(s) = ph.s {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(ConfigError::new(
                    "physics.s",
                    format!("must be nonnegative, got {s}"),
                ));
            }
        }
        if let Some(g) = ph.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(ConfigError::new(
                    "physics.gamma",
                    format!("must lie in [0, 1], got {g}"),
                ));
            }
        }
        for (key, p) in [
            ("physics.p1", ph.p1),
            ("physics.p2", ph.p2),
            ("physics.p3", ph.p3),
        ] {
            if let Some(p) = p {
                if !(p > 1.0 && p.is_finite()) {
                    return Err(ConfigError::new(key, format!("must exceed 1, got {p}")));
                }
            }
        }
        match self.experiment {
            Experiment::Gate => {
                for (key, p) in [("physics.p1", ph.p1), ("physics.p2", ph.p2)] {
                    p.ok_or_else(|| ConfigError::new(key, "required by the gate experiment"))?;
                }
            }
            Experiment::Gate3d => {
                for (key, p) in [
                    ("physics.p1", ph.p1),
                    ("physics.p2", ph.p2),
                    ("physics.p3", ph.p3),
                ] {
                    p.ok_or_else(|| ConfigError::new(key, "required by the gate3d experiment"))?;
                }
                if let Some(m) = ph.m {
                    if m >= 1.2 {
                        return Err(ConfigError::new(
                            "physics.m",
                            format!("must lie in [1, 6/5) in 3D, got {m}"),
                        ));
                    }
                }
            }
            Experiment::Decay3d | Experiment::Helmholtz3d => {
                if let Some(m) = ph.m {
                    if m >= 1.2 {
                        return Err(ConfigError::new(
                            "physics.m",
                            format!("must lie in [1, 6/5) in 3D, got {m}"),
                        ));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

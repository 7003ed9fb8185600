//! TOML run configuration and compact coefficient specifications.
//!
//! Coefficients are written as strings:
//!
//! * `const:c`
//! * `sin:mean,amplitude[,phase]` for `mean + amplitude·sin(2πt/T + phase)`
//! * `dip:level,amplitude,center,width` for a constant level with a Gaussian dip
//! * `dipsin:mean,amplitude,phase,depth,center,width` for a sinusoidal level with a dip

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{ClassifyOptions, SemiWaveOptions, ThresholdOptions};
use crate::fbsolver::SolverConfig;
use crate::model::{CoefficientField, InitialData, ModelError, ModelParams, PeriodicScalarFunction, RadialProfile};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("bad coefficient spec `{spec}`: {reason}")]
    Coefficient { spec: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub d1: f64,
    pub d2: f64,
    pub mu: f64,
    #[serde(default = "one_dim")]
    pub dim: u32,
    #[serde(default = "unit_period")]
    pub period: f64,
}

fn one_dim() -> u32 {
    1
}

fn unit_period() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub m1: String,
    pub m2: String,
    pub b1: String,
    pub b2: String,
    pub c1: String,
    pub c2: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub h0: f64,
    /// Amplitude of `u0 = A·cos(πr/(2h0))`.
    pub u0_amplitude: f64,
    #[serde(default = "default_u0_nodes")]
    pub u0_nodes: usize,
    /// Constant native density.
    pub v0: f64,
}

fn default_u0_nodes() -> usize {
    crate::presets::U0_NODES
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    pub coefficients: Coefficients,
    pub initial: Initial,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub classify: ClassifyOptions,
    #[serde(default)]
    pub threshold: ThresholdOptions,
    #[serde(default)]
    pub semiwave: SemiWaveOptions,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        let t = self.problem.period;
        let c = &self.coefficients;
        let init = InitialData::new(
            InitialData::cosine_bump(self.initial.h0, self.initial.u0_amplitude, self.initial.u0_nodes),
            RadialProfile::constant(1.0, self.initial.v0),
        )?;
        let params = ModelParams {
            d1: self.problem.d1,
            d2: self.problem.d2,
            mu: self.problem.mu,
            dim: self.problem.dim,
            period: t,
            m1: parse_coefficient(t, &c.m1)?,
            m2: parse_coefficient(t, &c.m2)?,
            b1: parse_coefficient(t, &c.b1)?,
            b2: parse_coefficient(t, &c.b2)?,
            c1: parse_coefficient(t, &c.c1)?,
            c2: parse_coefficient(t, &c.c2)?,
            init,
        };
        params.validate()?;
        Ok(params)
    }
}

fn numbers(spec: &str, body: &str, allowed: &[usize]) -> Result<Vec<f64>, ConfigError> {
    let err = |reason: String| ConfigError::Coefficient {
        spec: spec.to_string(),
        reason,
    };
    let xs = body
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| err(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if !allowed.contains(&xs.len()) {
        return Err(err(format!("expected {allowed:?} numbers, got {}", xs.len())));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(err("non-finite value".into()));
    }
    Ok(xs)
}

/// Parse a coefficient string (see the module docs).
pub fn parse_coefficient(period: f64, spec: &str) -> Result<CoefficientField, ConfigError> {
    let (kind, body) = spec.split_once(':').ok_or_else(|| ConfigError::Coefficient {
        spec: spec.to_string(),
        reason: "expected `kind:values`".into(),
    })?;
    let field = match kind.trim() {
        "const" => CoefficientField::constant(period, numbers(spec, body, &[1])?[0]),
        "sin" => {
            let x = numbers(spec, body, &[2, 3])?;
            let phase = x.get(2).copied().unwrap_or(0.0);
            CoefficientField::temporal(PeriodicScalarFunction::sinusoid(period, x[0], x[1], phase))
        }
        "dip" => {
            let x = numbers(spec, body, &[4])?;
            CoefficientField::gaussian_dip(PeriodicScalarFunction::constant(period, x[0]), x[1], x[2], x[3])?
        }
        "dipsin" => {
            let x = numbers(spec, body, &[6])?;
            CoefficientField::gaussian_dip(PeriodicScalarFunction::sinusoid(period, x[0], x[1], x[2]), x[3], x[4], x[5])?
        }
        other => {
            return Err(ConfigError::Coefficient {
                spec: spec.to_string(),
                reason: format!("unknown kind `{other}`"),
            })
        }
    };
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_strings() {
        assert_eq!(parse_coefficient(1.0, "const:0.2").unwrap().eval(0.3, 5.0), 0.2);
        let s = parse_coefficient(1.0, "sin:2,1").unwrap();
        assert!((s.eval(0.25, 0.0) - 3.0).abs() < 1e-12);
        let d = parse_coefficient(1.0, "dip:1,2,0,1").unwrap();
        assert!((d.eval(0.0, 0.0) + 1.0).abs() < 1e-12);
        assert!(parse_coefficient(1.0, "dip:1,2").is_err());
        assert!(parse_coefficient(1.0, "cosh:1").is_err());
        assert!(parse_coefficient(1.0, "const").is_err());
    }

    #[test]
    fn preset_round_trips_through_toml() {
        let cfg = crate::presets::bench_spread_config();
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        let p = back.params().unwrap();
        assert_eq!(p.h0(), 2.0);
        assert_eq!(p.c2.eval(0.0, 1.0), 0.3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut text = crate::presets::bench_spread_config().to_toml();
        text.push_str("\n[extra]\nx = 1\n");
        assert!(RunConfig::from_toml(&text).is_err());
    }
}

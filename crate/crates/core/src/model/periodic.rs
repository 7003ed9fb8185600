use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::ModelError;

/// Time dependence of a periodic scalar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeRule {
    Constant { value: f64 },
    /// `mean + amplitude * sin(2πt/T + phase)`
    Sinusoid {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Samples at `t_k = kT/n`, `k = 0..n`, periodic linear interpolation.
    Tabulated { samples: Vec<f64> },
}

/// A T-periodic scalar function of time.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicScalarFunction {
    period: f64,
    rule: TimeRule,
}

pub(crate) const MIN_TABULATED_SAMPLES: usize = 4;

impl PeriodicScalarFunction {
    pub fn new(period: f64, rule: TimeRule) -> Result<Self, ModelError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "period",
                reason: format!("must be positive and finite, got {period}"),
            });
        }
        if let TimeRule::Tabulated { samples } = &rule {
            if samples.len() < MIN_TABULATED_SAMPLES {
                return Err(ModelError::InvalidParameter {
                    name: "samples",
                    reason: format!(
                        "tabulated periodic function needs at least {MIN_TABULATED_SAMPLES} samples, got {}",
                        samples.len()
                    ),
                });
            }
            if samples.iter().any(|s| !s.is_finite()) {
                return Err(ModelError::InvalidParameter {
                    name: "samples",
                    reason: "non-finite sample".into(),
                });
            }
        }
        Ok(Self { period, rule })
    }

    pub fn constant(period: f64, value: f64) -> Self {
        Self::new(period, TimeRule::Constant { value }).expect("valid constant")
    }

    pub fn sinusoid(period: f64, mean: f64, amplitude: f64, phase: f64) -> Self {
        Self::new(
            period,
            TimeRule::Sinusoid {
                mean,
                amplitude,
                phase,
            },
        )
        .expect("valid sinusoid")
    }

    /// Tabulate `f` at `n` uniform times over one period.
    pub fn tabulate(period: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> Self {
        let samples = (0..n).map(|k| f(k as f64 * period / n as f64)).collect();
        Self::new(period, TimeRule::Tabulated { samples }).expect("valid table")
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn rule(&self) -> &TimeRule {
        &self.rule
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self.rule {
            TimeRule::Constant { value } => Some(value),
            TimeRule::Sinusoid {
                mean, amplitude, ..
            } if amplitude == 0.0 => Some(mean),
            _ => None,
        }
    }

    /// Fraction of the period elapsed at `t`, in `[0, 1)`.
    pub(crate) fn phase_of(period: f64, t: f64) -> f64 {
        let x = t / period;
        let f = x - x.floor();
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.rule {
            TimeRule::Constant { value } => *value,
            TimeRule::Sinusoid {
                mean,
                amplitude,
                phase,
            } => mean + amplitude * (2.0 * PI * Self::phase_of(self.period, t) + phase).sin(),
            TimeRule::Tabulated { samples } => {
                let n = samples.len();
                let pos = Self::phase_of(self.period, t) * n as f64;
                let k = (pos.floor() as usize).min(n - 1);
                let w = pos - k as f64;
                samples[k] * (1.0 - w) + samples[(k + 1) % n] * w
            }
        }
    }

    /// Time average over one period (exact for every rule).
    pub fn mean(&self) -> f64 {
        match &self.rule {
            TimeRule::Constant { value } => *value,
            TimeRule::Sinusoid { mean, .. } => *mean,
            TimeRule::Tabulated { samples } => samples.iter().sum::<f64>() / samples.len() as f64,
        }
    }

    pub fn min(&self) -> f64 {
        match &self.rule {
            TimeRule::Constant { value } => *value,
            TimeRule::Sinusoid {
                mean, amplitude, ..
            } => mean - amplitude.abs(),
            TimeRule::Tabulated { samples } => samples.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn max(&self) -> f64 {
        match &self.rule {
            TimeRule::Constant { value } => *value,
            TimeRule::Sinusoid {
                mean, amplitude, ..
            } => mean + amplitude.abs(),
            TimeRule::Tabulated { samples } => {
                samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Pointwise combination of several functions sharing a period. Constant
    /// inputs stay constant; anything else is tabulated on `n` samples.
    pub fn combine(
        inputs: &[&PeriodicScalarFunction],
        n: usize,
        f: impl Fn(&[f64]) -> f64,
    ) -> PeriodicScalarFunction {
        let period = inputs[0].period;
        let consts: Option<Vec<f64>> = inputs.iter().map(|p| p.constant_value()).collect();
        if let Some(values) = consts {
            return Self::constant(period, f(&values));
        }
        let mut buf = vec![0.0; inputs.len()];
        Self::tabulate(period, n, |t| {
            for (slot, p) in buf.iter_mut().zip(inputs) {
                *slot = p.eval(t);
            }
            f(&buf)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_tables() {
        let err = PeriodicScalarFunction::new(1.0, TimeRule::Tabulated { samples: vec![1.0; 3] });
        assert!(err.is_err());
    }

    #[test]
    fn tabulated_interpolates_periodically() {
        let f = PeriodicScalarFunction::new(
            2.0,
            TimeRule::Tabulated {
                samples: vec![0.0, 1.0, 2.0, 3.0],
            },
        )
        .unwrap();
        assert!((f.eval(0.25) - 0.5).abs() < 1e-15);
        // wraps from the last sample back to the first
        assert!((f.eval(1.75) - 1.5).abs() < 1e-15);
        assert_eq!(f.mean(), 1.5);
    }

    #[test]
    fn sinusoid_extrema_and_mean() {
        let f = PeriodicScalarFunction::sinusoid(1.0, 2.0, -0.5, 0.3);
        assert_eq!(f.min(), 1.5);
        assert_eq!(f.max(), 2.5);
        assert_eq!(f.mean(), 2.0);
    }

    #[test]
    fn combine_keeps_constants_exact() {
        let a = PeriodicScalarFunction::constant(1.0, 1.0);
        let b = PeriodicScalarFunction::constant(1.0, 0.2);
        let c = PeriodicScalarFunction::combine(&[&a, &b], 64, |x| x[0] - 1.5 * x[1]);
        assert_eq!(c.constant_value(), Some(1.0 - 1.5 * 0.2));
    }
}

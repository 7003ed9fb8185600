use std::f64::consts::PI;

use super::ModelError;
use crate::numerics::interp_uniform;

/// Radial samples on a uniform grid over `[0, length]`, held at the last
/// value beyond `length`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    length: f64,
    samples: Vec<f64>,
}

impl RadialProfile {
    pub fn new(length: f64, samples: Vec<f64>) -> Result<Self, ModelError> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "length",
                reason: format!("profile length must be positive, got {length}"),
            });
        }
        if samples.len() < 2 || samples.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "samples",
                reason: "need at least two finite samples".into(),
            });
        }
        Ok(Self { length, samples })
    }

    pub fn constant(length: f64, value: f64) -> Self {
        Self::new(length, vec![value; 2]).expect("constant profile")
    }

    pub fn from_fn(length: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let dx = length / (n - 1) as f64;
        Self::new(length, (0..n).map(|i| f(i as f64 * dx)).collect()).expect("profile")
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.samples.len() - 1) as f64
    }

    pub fn eval(&self, r: f64) -> f64 {
        interp_uniform(&self.samples, self.spacing(), r)
    }

    pub fn sup(&self) -> f64 {
        crate::numerics::sup_norm(&self.samples)
    }

    /// `sup |f'|` from first differences.
    pub fn sup_slope(&self) -> f64 {
        let dx = self.spacing();
        self.samples
            .windows(2)
            .fold(0.0_f64, |m, w| m.max(((w[1] - w[0]) / dx).abs()))
    }

    /// Same samples stretched onto `[0, length]`.
    pub fn stretched(&self, length: f64) -> Self {
        Self {
            length,
            samples: self.samples.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            length: self.length,
            samples: self.samples.iter().map(|x| x * factor).collect(),
        }
    }
}

/// Initial invader density on `[0, h0]`, native density on `[0, ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    u0: RadialProfile,
    v0: RadialProfile,
}

impl InitialData {
    pub fn new(u0: RadialProfile, v0: RadialProfile) -> Result<Self, ModelError> {
        let data = Self { u0, v0 };
        data.validate()?;
        Ok(data)
    }

    /// `u0(r) = amplitude·cos(πr/(2h0))` on `n` nodes.
    pub fn cosine_bump(h0: f64, amplitude: f64, n: usize) -> RadialProfile {
        let mut p = RadialProfile::from_fn(h0, n, |r| amplitude * (PI * r / (2.0 * h0)).cos());
        if let Some(last) = p.samples.last_mut() {
            *last = 0.0;
        }
        p
    }

    pub fn h0(&self) -> f64 {
        self.u0.length()
    }

    pub fn u0(&self) -> &RadialProfile {
        &self.u0
    }

    pub fn v0(&self) -> &RadialProfile {
        &self.v0
    }

    /// `‖u0‖_{C¹} = sup|u0| + sup|u0'|`.
    pub fn u0_c1_norm(&self) -> f64 {
        self.u0.sup() + self.u0.sup_slope()
    }

    pub fn with_h0(&self, h0: f64) -> Result<Self, ModelError> {
        Self::new(self.u0.stretched(h0), self.v0.clone())
    }

    pub fn with_u0_scale(&self, factor: f64) -> Result<Self, ModelError> {
        Self::new(self.u0.scaled(factor), self.v0.clone())
    }

    fn validate(&self) -> Result<(), ModelError> {
        let u = self.u0.samples();
        let n = u.len();
        if n < 3 {
            return Err(invalid("u0", "need at least three samples".into()));
        }
        if u[n - 1] != 0.0 {
            return Err(invalid("u0", format!("u0(h0) must be 0, got {}", u[n - 1])));
        }
        if let Some((i, x)) = u[..n - 1].iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
            return Err(invalid(
                "u0",
                format!("u0 must be positive on [0,h0), sample {i} is {x}"),
            ));
        }
        let slope0 = ((u[1] - u[0]) / self.u0.spacing()).abs();
        if slope0 > 0.1 * self.u0.sup_slope() + 1e-12 {
            return Err(invalid("u0", format!("u0'(0) must vanish, one-sided slope {slope0}")));
        }
        let v = self.v0.samples();
        if v.iter().any(|x| *x < 0.0) {
            return Err(invalid("v0", "v0 must be nonnegative".into()));
        }
        if v.iter().all(|x| *x == 0.0) {
            return Err(invalid("v0", "v0 must not vanish identically".into()));
        }
        if v.len() >= 3 {
            let slope0 = ((v[1] - v[0]) / self.v0.spacing()).abs();
            if slope0 > 0.1 * self.v0.sup_slope() + 1e-12 {
                return Err(invalid("v0", format!("v0'(0) must vanish, one-sided slope {slope0}")));
            }
        }
        Ok(())
    }
}

fn invalid(name: &'static str, reason: String) -> ModelError {
    ModelError::InvalidParameter { name, reason }
}

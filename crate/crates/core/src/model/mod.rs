//! Problem instances: periodic coefficients, initial data, and sampled
//! hypothesis checks.

mod field;
mod hypotheses;
mod initial;
mod periodic;

use thiserror::Error;

pub use field::{CoefficientField, FieldRule, SpaceTimeTable};
pub use hypotheses::{
    check_h1, check_h2, classify_environment, ClauseResult, EnvironmentClass, H1Report, H2Report, SamplingGrid,
    H2_POSITIVITY_FLOOR, H2_STABILIZATION,
};
pub use initial::{InitialData, RadialProfile};
pub use periodic::{PeriodicScalarFunction, TimeRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("far-field estimates did not stabilise: {detail}")]
    NonStabilized { detail: String },
}

/// A full problem instance.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub d1: f64,
    pub d2: f64,
    pub mu: f64,
    pub dim: u32,
    pub period: f64,
    pub m1: CoefficientField,
    pub m2: CoefficientField,
    pub b1: CoefficientField,
    pub b2: CoefficientField,
    pub c1: CoefficientField,
    pub c2: CoefficientField,
    pub init: InitialData,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [("d1", self.d1), ("d2", self.d2), ("mu", self.mu), ("period", self.period)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {value}"),
                });
            }
        }
        if self.dim == 0 {
            return Err(ModelError::InvalidParameter {
                name: "dim",
                reason: "dimension must be at least 1".into(),
            });
        }
        for (name, field) in self.fields() {
            if (field.period() - self.period).abs() > 1e-12 * self.period {
                return Err(ModelError::InvalidParameter {
                    name,
                    reason: format!("field period {} differs from T = {}", field.period(), self.period),
                });
            }
        }
        let grid = SamplingGrid::default_for(self);
        for (name, field) in [("b1", &self.b1), ("b2", &self.b2)] {
            let min = grid.min_of(field);
            if !(min > 0.0) {
                return Err(ModelError::InvalidParameter {
                    name,
                    reason: format!("must be strictly positive, sampled minimum {min}"),
                });
            }
        }
        // Zero competition is allowed so that decoupled runs can be set up;
        // the hypothesis report still flags it.
        for (name, field) in [("c1", &self.c1), ("c2", &self.c2)] {
            let min = grid.min_of(field);
            if !(min >= 0.0) {
                return Err(ModelError::InvalidParameter {
                    name,
                    reason: format!("must be nonnegative, sampled minimum {min}"),
                });
            }
        }
        Ok(())
    }

    pub fn fields(&self) -> [(&'static str, &CoefficientField); 6] {
        [
            ("m1", &self.m1),
            ("m2", &self.m2),
            ("b1", &self.b1),
            ("b2", &self.b2),
            ("c1", &self.c1),
            ("c2", &self.c2),
        ]
    }

    pub fn h0(&self) -> f64 {
        self.init.h0()
    }

    /// Radius out to which fields are sampled by default checks.
    pub fn sampling_radius(&self) -> f64 {
        let mut r = (10.0 * self.h0()).max(20.0).max(self.init.v0().length());
        for (_, f) in self.fields() {
            if let FieldRule::Tabulated(t) = f.rule() {
                r = r.max(t.r_max());
            }
        }
        r
    }

    /// `C1 = max{‖m1‖∞ / min b1, ‖u0‖∞}`.
    pub fn bound_c1(&self) -> f64 {
        (self.m1.sup_abs() / self.b1.inf()).max(self.init.u0().sup())
    }

    /// `C2 = max{‖m2‖∞ / min b2, ‖v0‖∞}`.
    pub fn bound_c2(&self) -> f64 {
        (self.m2.sup_abs() / self.b2.inf()).max(self.init.v0().sup())
    }

    /// The gradient-barrier constant `M` controlling the front speed bound.
    pub fn barrier_m(&self) -> f64 {
        let c1 = self.bound_c1();
        (1.0 / self.h0())
            .max((self.m1.sup_abs() / (2.0 * self.d1)).sqrt())
            .max(4.0 * self.init.u0_c1_norm() / (3.0 * c1))
    }

    /// `C3 = 2·M·C1·μ`.
    pub fn bound_c3(&self) -> f64 {
        2.0 * self.barrier_m() * self.bound_c1() * self.mu
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..self.clone() }
    }

    pub fn with_d1(&self, d1: f64) -> Self {
        Self { d1, ..self.clone() }
    }

    pub fn with_h0(&self, h0: f64) -> Result<Self, ModelError> {
        Ok(Self {
            init: self.init.with_h0(h0)?,
            ..self.clone()
        })
    }

    pub fn with_u0_scale(&self, factor: f64) -> Result<Self, ModelError> {
        Ok(Self {
            init: self.init.with_u0_scale(factor)?,
            ..self.clone()
        })
    }

    /// The same instance with the competition coefficient on `u` removed.
    pub fn without_competition(&self) -> Self {
        Self {
            c1: CoefficientField::constant(self.period, 0.0),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c1_formula() {
        let p = crate::presets::bench_spread();
        assert_eq!(p.bound_c1(), 1.0);
        assert_eq!(p.bound_c2(), 1.0);
    }

    #[test]
    fn c3_formula_uses_barrier() {
        let p = crate::presets::bench_spread();
        let m = p.barrier_m();
        let expected = (0.5_f64)
            .max((0.5_f64).sqrt())
            .max(4.0 * p.init.u0_c1_norm() / 3.0);
        assert_eq!(m, expected);
        assert!((p.bound_c3() - 10.0 * m).abs() < 1e-14);
    }

    #[test]
    fn validate_rejects_nonpositive_competition() {
        let mut p = crate::presets::bench_spread();
        p.c2 = CoefficientField::constant(1.0, -0.1);
        assert!(p.validate().is_err());
        p.b1 = CoefficientField::constant(1.0, 0.0);
        p.c2 = CoefficientField::constant(1.0, 0.0);
        assert!(p.validate().is_err());
        p.b1 = CoefficientField::constant(1.0, 1.0);
        assert!(p.validate().is_ok());
        p.c2 = CoefficientField::constant(1.0, 0.3);
        assert!(p.validate().is_ok());
    }
}

use std::sync::Arc;

use super::periodic::PeriodicScalarFunction;
use super::ModelError;

/// Samples on a uniform `(time × radius)` grid: `t_k = kT/n_t` for
/// `k = 0..n_t` (periodic in `t`) and `r_j = j·r_max/(n_r−1)`. Evaluation is
/// bilinear, periodic in time and clamped to the outermost column beyond
/// `r_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeTable {
    period: f64,
    n_t: usize,
    r_max: f64,
    n_r: usize,
    values: Vec<f64>,
}

impl SpaceTimeTable {
    pub fn new(period: f64, n_t: usize, r_max: f64, n_r: usize, values: Vec<f64>) -> Result<Self, ModelError> {
        if n_t < super::periodic::MIN_TABULATED_SAMPLES || n_r < 2 {
            return Err(ModelError::InvalidParameter {
                name: "table",
                reason: format!("table needs ≥4 time samples and ≥2 radii, got {n_t}×{n_r}"),
            });
        }
        if values.len() != n_t * n_r {
            return Err(ModelError::InvalidParameter {
                name: "table",
                reason: format!("expected {} values, got {}", n_t * n_r, values.len()),
            });
        }
        if !(period > 0.0 && r_max > 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "table",
                reason: "period and r_max must be positive".into(),
            });
        }
        Ok(Self {
            period,
            n_t,
            r_max,
            n_r,
            values,
        })
    }

    /// Build from rows, one per time sample.
    pub fn from_rows(period: f64, r_max: f64, rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n_t = rows.len();
        let n_r = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_r) {
            return Err(ModelError::InvalidParameter {
                name: "table",
                reason: "ragged rows".into(),
            });
        }
        Self::new(period, n_t, r_max, n_r, rows.into_iter().flatten().collect())
    }

    pub fn period(&self) -> f64 {
        self.period
    }
    pub fn n_t(&self) -> usize {
        self.n_t
    }
    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn dr(&self) -> f64 {
        self.r_max / (self.n_r - 1) as f64
    }
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.period / self.n_t as f64
    }
    pub fn radius(&self, j: usize) -> f64 {
        j as f64 * self.dr()
    }
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_r..(k + 1) * self.n_r]
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64, r: f64) -> f64 {
        let pos = PeriodicScalarFunction::phase_of(self.period, t) * self.n_t as f64;
        let k0 = (pos.floor() as usize).min(self.n_t - 1);
        let wt = pos - k0 as f64;
        let k1 = (k0 + 1) % self.n_t;
        let a = crate::numerics::interp_uniform(self.row(k0), self.dr(), r);
        if wt == 0.0 {
            return a;
        }
        let b = crate::numerics::interp_uniform(self.row(k1), self.dr(), r);
        a * (1.0 - wt) + b * wt
    }

    pub fn min(&self) -> f64 {
        crate::numerics::min_value(&self.values)
    }
    pub fn max(&self) -> f64 {
        crate::numerics::max_value(&self.values)
    }

    /// Values at radius `r` at every time sample.
    pub fn column_at(&self, r: f64) -> Vec<f64> {
        (0..self.n_t)
            .map(|k| crate::numerics::interp_uniform(self.row(k), self.dr(), r))
            .collect()
    }

    fn row_extrema(&self, f: impl Fn(&[f64]) -> f64) -> PeriodicScalarFunction {
        let samples: Vec<f64> = (0..self.n_t).map(|k| f(self.row(k))).collect();
        PeriodicScalarFunction::new(self.period, super::TimeRule::Tabulated { samples }).expect("table rows")
    }
}

/// Spatial structure of a coefficient.
#[derive(Clone, Debug)]
pub enum FieldRule {
    /// Space-independent: `f(t)`.
    Temporal(PeriodicScalarFunction),
    /// `level(t) − amplitude·exp(−(r−center)²/width²)`.
    GaussianDip {
        level: PeriodicScalarFunction,
        amplitude: f64,
        center: f64,
        width: f64,
    },
    Tabulated(Arc<SpaceTimeTable>),
    /// `growth(t,r) − inflation·competitor(t,r)·density(t,r)`.
    Composite {
        growth: Arc<CoefficientField>,
        competitor: Arc<CoefficientField>,
        density: Arc<SpaceTimeTable>,
        inflation: f64,
    },
}

/// A T-periodic, radially symmetric coefficient with optional declared
/// envelopes and far-field bounds.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    period: f64,
    rule: FieldRule,
    declared_lower: Option<PeriodicScalarFunction>,
    declared_upper: Option<PeriodicScalarFunction>,
    asymptotic_liminf: Option<PeriodicScalarFunction>,
    asymptotic_limsup: Option<PeriodicScalarFunction>,
}

/// Time resolution used when envelopes have to be tabulated.
const ENVELOPE_SAMPLES: usize = 256;

impl CoefficientField {
    pub fn new(period: f64, rule: FieldRule) -> Result<Self, ModelError> {
        let rule_period = match &rule {
            FieldRule::Temporal(f) => f.period(),
            FieldRule::GaussianDip { level, width, .. } => {
                if !(*width > 0.0) {
                    return Err(ModelError::InvalidParameter {
                        name: "width",
                        reason: format!("dip width must be positive, got {width}"),
                    });
                }
                level.period()
            }
            FieldRule::Tabulated(t) => t.period(),
            FieldRule::Composite {
                growth,
                competitor,
                density,
                ..
            } => {
                if growth.period != competitor.period {
                    return Err(period_mismatch(growth.period, competitor.period));
                }
                if growth.period != density.period() {
                    return Err(period_mismatch(growth.period, density.period()));
                }
                growth.period
            }
        };
        if (rule_period - period).abs() > 1e-12 * period {
            return Err(period_mismatch(period, rule_period));
        }
        Ok(Self {
            period,
            rule,
            declared_lower: None,
            declared_upper: None,
            asymptotic_liminf: None,
            asymptotic_limsup: None,
        })
    }

    pub fn constant(period: f64, value: f64) -> Self {
        Self::temporal(PeriodicScalarFunction::constant(period, value))
    }

    pub fn temporal(f: PeriodicScalarFunction) -> Self {
        Self::new(f.period(), FieldRule::Temporal(f)).expect("temporal field")
    }

    pub fn gaussian_dip(level: PeriodicScalarFunction, amplitude: f64, center: f64, width: f64) -> Result<Self, ModelError> {
        Self::new(
            level.period(),
            FieldRule::GaussianDip {
                level,
                amplitude,
                center,
                width,
            },
        )
    }

    pub fn tabulated(table: SpaceTimeTable) -> Self {
        Self::new(table.period(), FieldRule::Tabulated(Arc::new(table))).expect("tabulated field")
    }

    pub fn with_envelopes(mut self, lower: PeriodicScalarFunction, upper: PeriodicScalarFunction) -> Result<Self, ModelError> {
        if lower.period() != self.period || upper.period() != self.period {
            return Err(period_mismatch(self.period, lower.period()));
        }
        self.declared_lower = Some(lower);
        self.declared_upper = Some(upper);
        Ok(self)
    }

    pub fn with_asymptotics(mut self, liminf: PeriodicScalarFunction, limsup: PeriodicScalarFunction) -> Result<Self, ModelError> {
        if liminf.period() != self.period || limsup.period() != self.period {
            return Err(period_mismatch(self.period, liminf.period()));
        }
        self.asymptotic_liminf = Some(liminf);
        self.asymptotic_limsup = Some(limsup);
        Ok(self)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn rule(&self) -> &FieldRule {
        &self.rule
    }

    pub fn declared_lower(&self) -> Option<&PeriodicScalarFunction> {
        self.declared_lower.as_ref()
    }

    pub fn declared_upper(&self) -> Option<&PeriodicScalarFunction> {
        self.declared_upper.as_ref()
    }

    pub fn eval(&self, t: f64, r: f64) -> f64 {
        match &self.rule {
            FieldRule::Temporal(f) => f.eval(t),
            FieldRule::GaussianDip {
                level,
                amplitude,
                center,
                width,
            } => {
                let z = (r - center) / width;
                level.eval(t) - amplitude * (-z * z).exp()
            }
            FieldRule::Tabulated(table) => table.eval(t, r),
            FieldRule::Composite {
                growth,
                competitor,
                density,
                inflation,
            } => growth.eval(t, r) - inflation * competitor.eval(t, r) * density.eval(t, r),
        }
    }

    /// Space-independent time profile, when the field has one.
    pub fn as_temporal(&self) -> Option<&PeriodicScalarFunction> {
        match &self.rule {
            FieldRule::Temporal(f) => Some(f),
            _ => None,
        }
    }

    pub fn is_space_independent(&self) -> bool {
        matches!(self.rule, FieldRule::Temporal(_))
    }

    /// Tight pointwise-in-time bounds over `r ≥ 0` derived from the rule
    /// itself (tables and composites are bounded over their sample radii).
    pub fn derived_bounds(&self) -> (PeriodicScalarFunction, PeriodicScalarFunction) {
        match &self.rule {
            FieldRule::Temporal(f) => (f.clone(), f.clone()),
            FieldRule::GaussianDip {
                level,
                amplitude,
                center,
                width,
            } => {
                let peak = if *center >= 0.0 {
                    1.0
                } else {
                    (-(center / width).powi(2)).exp()
                };
                let spatial = -amplitude * peak;
                let lo = spatial.min(0.0);
                let hi = spatial.max(0.0);
                (
                    PeriodicScalarFunction::combine(&[level], ENVELOPE_SAMPLES, |x| x[0] + lo),
                    PeriodicScalarFunction::combine(&[level], ENVELOPE_SAMPLES, |x| x[0] + hi),
                )
            }
            FieldRule::Tabulated(table) => (
                table.row_extrema(crate::numerics::min_value),
                table.row_extrema(crate::numerics::max_value),
            ),
            FieldRule::Composite { density, .. } => {
                let sampled = self.sample_on(density);
                (
                    sampled.row_extrema(crate::numerics::min_value),
                    sampled.row_extrema(crate::numerics::max_value),
                )
            }
        }
    }

    /// Declared lower envelope, or the derived one when none was declared.
    pub fn lower_envelope(&self) -> PeriodicScalarFunction {
        self.declared_lower.clone().unwrap_or_else(|| self.derived_bounds().0)
    }

    pub fn upper_envelope(&self) -> PeriodicScalarFunction {
        self.declared_upper.clone().unwrap_or_else(|| self.derived_bounds().1)
    }

    /// Far-field `(liminf, limsup)` as functions of time: declared values win,
    /// otherwise the rule's tail.
    pub fn asymptotic_bounds(&self) -> (PeriodicScalarFunction, PeriodicScalarFunction) {
        if let (Some(lo), Some(hi)) = (&self.asymptotic_liminf, &self.asymptotic_limsup) {
            return (lo.clone(), hi.clone());
        }
        match &self.rule {
            FieldRule::Temporal(f) => (f.clone(), f.clone()),
            FieldRule::GaussianDip { level, .. } => (level.clone(), level.clone()),
            FieldRule::Tabulated(table) => {
                let tail = PeriodicScalarFunction::new(
                    self.period,
                    super::TimeRule::Tabulated {
                        samples: table.column_at(table.r_max()),
                    },
                )
                .expect("tail column");
                (tail.clone(), tail)
            }
            FieldRule::Composite { density, .. } => {
                let sampled = self.sample_on(density);
                let tail = PeriodicScalarFunction::new(
                    self.period,
                    super::TimeRule::Tabulated {
                        samples: sampled.column_at(sampled.r_max()),
                    },
                )
                .expect("tail column");
                (tail.clone(), tail)
            }
        }
    }

    /// `sup |field|` over `[0,T] × [0,∞)`, from the derived bounds.
    pub fn sup_abs(&self) -> f64 {
        let (lo, hi) = self.derived_bounds();
        lo.min().abs().max(hi.max().abs())
    }

    /// `min field` over `[0,T] × [0,∞)`, from the derived bounds.
    pub fn inf(&self) -> f64 {
        self.derived_bounds().0.min()
    }

    /// Period average `(1/T)∫ field(t,r) dt` at radius `r`, by the trapezoid
    /// rule on `n` samples (spectrally accurate for smooth periodic data).
    pub fn time_mean_at(&self, r: f64, n: usize) -> f64 {
        (0..n).map(|k| self.eval(k as f64 * self.period / n as f64, r)).sum::<f64>() / n as f64
    }

    /// Evaluate the field on the grid of `like`.
    pub fn sample_on(&self, like: &SpaceTimeTable) -> SpaceTimeTable {
        let mut values = Vec::with_capacity(like.n_t() * like.n_r());
        for k in 0..like.n_t() {
            let t = like.time(k);
            for j in 0..like.n_r() {
                values.push(self.eval(t, like.radius(j)));
            }
        }
        SpaceTimeTable::new(self.period, like.n_t(), like.r_max(), like.n_r(), values).expect("same grid")
    }
}

fn period_mismatch(a: f64, b: f64) -> ModelError {
    ModelError::InvalidParameter {
        name: "period",
        reason: format!("period mismatch: {a} vs {b}"),
    }
}

//! Positive T-periodic radial solutions of `w_t − dΔw = w(a − bw)` on a
//! truncated ball with zero flux at both ends, found as fixed points of the
//! period map.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    check_h2, CoefficientField, FieldRule, ModelError, ModelParams, PeriodicScalarFunction, SpaceTimeTable,
};
use crate::numerics::{max_value, min_value, sup_diff, OuterBoundary, Tridiagonal};
use crate::periodic_ode::{lower_native_envelope, upper_native_envelope, OdeError};
use crate::stepper::{LinearStepper, Scheme};

pub const DEFAULT_NODES: usize = 401;
pub const DEFAULT_STEPS: usize = 256;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_PERIODS: usize = 2000;
pub const DEGENERATE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntireError {
    #[error("period map did not converge in {periods} periods (last change {change:e})")]
    NonConvergence { periods: usize, change: f64 },
    #[error("iterate collapsed below {floor:e}; growth too weak")]
    Degenerate { floor: f64 },
    #[error("growth fails far-field positivity (liminf {liminf})")]
    FarFieldNotPositive { liminf: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Samples of a T-periodic radial field on `[0,T) × [0,R_out]`.
#[derive(Clone, Debug)]
pub struct RadialPeriodicField {
    table: Arc<SpaceTimeTable>,
    /// Sup-norm defect of the period map at the returned profile.
    residual: f64,
    periods: usize,
}

impl RadialPeriodicField {
    pub fn new(table: SpaceTimeTable, residual: f64, periods: usize) -> Self {
        Self {
            table: Arc::new(table),
            residual,
            periods,
        }
    }

    /// A space-independent field, e.g. an ODE solution, laid out on a table.
    pub fn flat(v: &PeriodicScalarFunction, r_out: f64, n_t: usize, n_r: usize) -> Self {
        let period = v.period();
        let values = (0..n_t)
            .flat_map(|k| std::iter::repeat(v.eval(k as f64 * period / n_t as f64)).take(n_r))
            .collect();
        Self::new(
            SpaceTimeTable::new(period, n_t, r_out, n_r, values).expect("flat table"),
            0.0,
            0,
        )
    }

    pub fn table(&self) -> &SpaceTimeTable {
        &self.table
    }

    pub fn shared_table(&self) -> Arc<SpaceTimeTable> {
        Arc::clone(&self.table)
    }

    pub fn eval(&self, t: f64, r: f64) -> f64 {
        self.table.eval(t, r)
    }

    pub fn r_out(&self) -> f64 {
        self.table.r_max()
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn periods(&self) -> usize {
        self.periods
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntireOptions {
    pub n_r: usize,
    pub steps_per_period: usize,
    pub tol: f64,
    pub max_periods: usize,
    /// Multiplies the flat initial plateau; used to test independence of the guess.
    pub initial_scale: f64,
}

impl Default for EntireOptions {
    fn default() -> Self {
        Self {
            n_r: DEFAULT_NODES,
            steps_per_period: DEFAULT_STEPS,
            tol: DEFAULT_TOL,
            max_periods: DEFAULT_MAX_PERIODS,
            initial_scale: 1.0,
        }
    }
}

/// Default truncation radius: `max(20, 10·dip width)` over the given fields.
pub fn default_r_out(fields: &[&CoefficientField]) -> f64 {
    fields.iter().fold(20.0_f64, |r, f| match f.rule() {
        FieldRule::GaussianDip { width, center, .. } => r.max(10.0 * width).max(center + 10.0 * width),
        FieldRule::Tabulated(t) => r.max(t.r_max()),
        _ => r,
    })
}

/// Per half step, the factors of the exact Bernoulli update
/// `w ↦ w·E / (1 + w·I)` with `E = e^{∫a}`, `I = ∫ b e^{∫a}`, by Simpson.
struct ReactionFactors {
    e: Vec<Vec<f64>>,
    i: Vec<Vec<f64>>,
}

impl ReactionFactors {
    fn new(growth: &CoefficientField, b: &CoefficientField, radii: &[f64], dt: f64, steps: usize) -> Self {
        let tau = 0.5 * dt;
        let halves = 2 * steps;
        let at = |t: f64| -> (Vec<f64>, Vec<f64>) {
            (
                radii.iter().map(|&r| growth.eval(t, r)).collect(),
                radii.iter().map(|&r| b.eval(t, r)).collect(),
            )
        };
        let mut e = Vec::with_capacity(halves);
        let mut i = Vec::with_capacity(halves);
        for h in 0..halves {
            let t0 = h as f64 * tau;
            let (a0, b0) = at(t0);
            let (am, bm) = at(t0 + 0.5 * tau);
            let (a1, b1) = at(t0 + tau);
            let mut eh = Vec::with_capacity(radii.len());
            let mut ih = Vec::with_capacity(radii.len());
            for j in 0..radii.len() {
                let a_mid = tau / 24.0 * (5.0 * a0[j] + 8.0 * am[j] - a1[j]);
                let a_end = tau / 6.0 * (a0[j] + 4.0 * am[j] + a1[j]);
                eh.push(a_end.exp());
                ih.push(tau / 6.0 * (b0[j] + 4.0 * bm[j] * a_mid.exp() + b1[j] * a_end.exp()));
            }
            e.push(eh);
            i.push(ih);
        }
        Self { e, i }
    }

    fn apply(&self, half: usize, w: &mut [f64]) {
        for ((x, e), i) in w.iter_mut().zip(&self.e[half]).zip(&self.i[half]) {
            *x = *x * e / (1.0 + *x * i);
        }
    }
}

/// The periodic solution of `w_t − dΔw = w(growth − b·w)` on `[0, R_out]`.
pub fn solve_periodic_entire(
    d: f64,
    growth: &CoefficientField,
    b: &CoefficientField,
    dim: u32,
    r_out: f64,
    opts: &EntireOptions,
) -> Result<RadialPeriodicField, EntireError> {
    if !(d > 0.0 && r_out > 0.0) || opts.n_r < 8 || opts.steps_per_period < 8 || dim == 0 {
        return Err(EntireError::Invalid("need d, R_out > 0, n_r ≥ 8, steps ≥ 8, N ≥ 1".into()));
    }
    if (growth.period() - b.period()).abs() > 1e-12 * growth.period() {
        return Err(EntireError::Invalid("growth and b periods differ".into()));
    }
    let far = check_h2(growth, &[0.6 * r_out, 0.8 * r_out, r_out])?;
    if !far.pass {
        return Err(EntireError::FarFieldNotPositive { liminf: far.liminf });
    }

    let n = opts.n_r;
    let steps = opts.steps_per_period;
    let period = growth.period();
    let dt = period / steps as f64;
    let dr = r_out / (n - 1) as f64;
    let radii: Vec<f64> = (0..n).map(|j| j as f64 * dr).collect();
    let reaction = ReactionFactors::new(growth, b, &radii, dt, steps);

    let mut op = Tridiagonal::radial_laplacian(n, dr, dim, OuterBoundary::ZeroFlux);
    for row in [&mut op.lower, &mut op.diag, &mut op.upper] {
        row.iter_mut().for_each(|x| *x *= d);
    }
    let stepper = LinearStepper::new(op, dt, Scheme::TrBdf2);
    let mut scratch = Vec::with_capacity(n);

    let plateau = {
        let gm = growth.time_mean_at(r_out, steps);
        let bm = b.time_mean_at(r_out, steps);
        opts.initial_scale * gm / bm
    };
    let mut w = vec![plateau; n];
    let mut rows: Vec<f64> = Vec::with_capacity(steps * n);

    let mut change = f64::INFINITY;
    for period_index in 1..=opts.max_periods {
        let start = w.clone();
        rows.clear();
        for k in 0..steps {
            rows.extend_from_slice(&w);
            reaction.apply(2 * k, &mut w);
            stepper.step(&mut w, &[], &mut scratch);
            reaction.apply(2 * k + 1, &mut w);
        }
        if max_value(&w) < DEGENERATE_FLOOR {
            return Err(EntireError::Degenerate {
                floor: DEGENERATE_FLOOR,
            });
        }
        if !(min_value(&w) > 0.0) {
            return Err(EntireError::Invalid(format!(
                "positivity lost at period {period_index}: min {}",
                min_value(&w)
            )));
        }
        change = sup_diff(&start, &w);
        if change < opts.tol {
            let table = SpaceTimeTable::new(period, steps, r_out, n, rows)?;
            return Ok(RadialPeriodicField::new(table, change, period_index));
        }
    }
    Err(EntireError::NonConvergence {
        periods: opts.max_periods,
        change,
    })
}

/// The native density `V` of the invader-free problem.
pub fn native_density(params: &ModelParams, r_out: f64, opts: &EntireOptions) -> Result<RadialPeriodicField, EntireError> {
    solve_periodic_entire(params.d2, &params.m2, &params.b2, params.dim, r_out, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub pass: bool,
    /// `min (field − (V_* − ε))` over the outer 20% of the grid.
    pub lower_margin: f64,
    /// `min ((V^* + ε) − field)` over the same region.
    pub upper_margin: f64,
    pub eps: f64,
}

/// Tail of `field` against the band `[V_* − ε, V^* + ε]`, `ε = 0.02·sup V^*`.
pub fn check_asymptotic_bounds(
    field: &RadialPeriodicField,
    v_star: &PeriodicScalarFunction,
    v_upper: &PeriodicScalarFunction,
) -> AsymptoticReport {
    let eps = 0.02 * v_upper.max();
    let table = field.table();
    let first = ((0.8 * (table.n_r() - 1) as f64).floor() as usize).min(table.n_r() - 1);
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for k in 0..table.n_t() {
        let t = table.time(k);
        let (lo, hi) = (v_star.eval(t) - eps, v_upper.eval(t) + eps);
        for &x in &table.row(k)[first..] {
            lower_margin = lower_margin.min(x - lo);
            upper_margin = upper_margin.min(hi - x);
        }
    }
    AsymptoticReport {
        pass: lower_margin >= 0.0 && upper_margin >= 0.0,
        lower_margin,
        upper_margin,
        eps,
    }
}

/// `m₁ − inflation·c₁·V` with far-field envelopes
/// `m_{1,*} − inflation·c₁^*V^*` and `m₁^* − inflation·c_{1,*}V_*`.
pub fn effective_u_growth(
    params: &ModelParams,
    v: &RadialPeriodicField,
    inflation: f64,
) -> Result<CoefficientField, EntireError> {
    let field = CoefficientField::new(
        params.period,
        FieldRule::Composite {
            growth: Arc::new(params.m1.clone()),
            competitor: Arc::new(params.c1.clone()),
            density: v.shared_table(),
            inflation,
        },
    )?;
    let v_upper = upper_native_envelope(params)?.v;
    let v_lower = lower_native_envelope(params)?.v;
    let (m_lo, m_hi) = params.m1.asymptotic_bounds();
    let (c_lo, c_hi) = (params.c1.lower_envelope(), params.c1.upper_envelope());
    let n = v_upper_samples(&v_upper);
    let liminf = PeriodicScalarFunction::combine(&[&m_lo, &c_hi, &v_upper], n, |x| x[0] - inflation * x[1] * x[2]);
    let limsup = PeriodicScalarFunction::combine(&[&m_hi, &c_lo, &v_lower], n, |x| x[0] - inflation * x[1] * x[2]);
    Ok(field.with_asymptotics(liminf, limsup)?)
}

fn v_upper_samples(v: &PeriodicScalarFunction) -> usize {
    match v.rule() {
        crate::model::TimeRule::Tabulated { samples } => samples.len(),
        _ => 256,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic_ode::solve_periodic_logistic;

    fn coarse() -> EntireOptions {
        EntireOptions {
            n_r: 101,
            ..EntireOptions::default()
        }
    }

    #[test]
    fn flat_unit_solution() {
        let one = CoefficientField::constant(1.0, 1.0);
        let f = solve_periodic_entire(1.0, &one, &one, 1, 20.0, &coarse()).unwrap();
        assert!((f.table().min() - 1.0).abs() < 1e-12 && (f.table().max() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_reduction_matches_ode() {
        let a = PeriodicScalarFunction::sinusoid(1.0, 1.0, 0.5, 0.0);
        let b = PeriodicScalarFunction::constant(1.0, 1.0);
        let ode = solve_periodic_logistic(&a, &b).unwrap();
        let f = solve_periodic_entire(
            1.0,
            &CoefficientField::temporal(a),
            &CoefficientField::temporal(b),
            2,
            20.0,
            &coarse(),
        )
        .unwrap();
        let table = f.table();
        let mut worst = 0.0_f64;
        for k in 0..table.n_t() {
            let exact = ode.v.eval(table.time(k));
            for x in table.row(k) {
                worst = worst.max((x - exact).abs());
            }
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn initial_guess_does_not_matter() {
        let m = CoefficientField::gaussian_dip(PeriodicScalarFunction::sinusoid(1.0, 1.0, 0.3, 0.0), 2.0, 0.0, 1.0).unwrap();
        let b = CoefficientField::constant(1.0, 1.0);
        let base = solve_periodic_entire(1.0, &m, &b, 2, 20.0, &coarse()).unwrap();
        let other = solve_periodic_entire(
            1.0,
            &m,
            &b,
            2,
            20.0,
            &EntireOptions {
                initial_scale: 3.0,
                ..coarse()
            },
        )
        .unwrap();
        assert!(sup_diff(base.table().values(), other.table().values()) < 1e-6);
        assert!(base.table().min() > 0.0);
        assert!(base.eval(0.0, 0.0) < 0.9 * base.eval(0.0, 20.0));
    }

    #[test]
    fn weak_growth_is_rejected() {
        let m = CoefficientField::constant(1.0, -0.5);
        let b = CoefficientField::constant(1.0, 1.0);
        assert!(matches!(
            solve_periodic_entire(1.0, &m, &b, 1, 20.0, &coarse()),
            Err(EntireError::FarFieldNotPositive { .. })
        ));
    }

    #[test]
    fn effective_growth_constants() {
        let p = crate::presets::bench_spread();
        let v = RadialPeriodicField::flat(&PeriodicScalarFunction::constant(1.0, 1.0), 20.0, 8, 11);
        let f = effective_u_growth(&p, &v, 1.0).unwrap();
        assert!((f.eval(0.3, 4.0) - 0.8).abs() < 1e-14);
        let f = effective_u_growth(&p, &v, 1.5).unwrap();
        assert!((f.eval(0.7, 1.0) - 0.7).abs() < 1e-14);
        let (lo, hi) = f.asymptotic_bounds();
        assert!((lo.eval(0.2) - 0.7).abs() < 1e-12 && (hi.eval(0.2) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_band() {
        let one = PeriodicScalarFunction::constant(1.0, 1.0);
        let v = RadialPeriodicField::flat(&one, 20.0, 8, 11);
        assert!(check_asymptotic_bounds(&v, &one, &one).pass);
        let low = RadialPeriodicField::flat(&PeriodicScalarFunction::constant(1.0, 0.9), 20.0, 8, 11);
        let rep = check_asymptotic_bounds(&low, &one, &one);
        assert!(!rep.pass && (rep.lower_margin + 0.08).abs() < 1e-12);
    }
}

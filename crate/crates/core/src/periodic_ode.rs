//! Positive periodic solutions of the scalar logistic equation
//! `V' = V(a(t) − b(t)V)` and the envelope constants built from them.
//!
//! The periodic solution is written in closed Bernoulli form
//!
//! ```text
//! V(t) = e^{A(t)} / (C + ∫₀ᵗ b e^{A}),   A(t) = ∫₀ᵗ a,
//! C    = ∫₀ᵀ b e^{A} / (e^{A(T)} − 1),
//! ```
//!
//! with every quadrature done by composite Simpson on a uniform time grid.

use serde::Serialize;
use thiserror::Error;

use crate::entire_solutions::RadialPeriodicField;
use crate::model::{ModelParams, PeriodicScalarFunction, TimeRule};
use crate::numerics::cumulative_simpson;

/// Default number of Simpson cells per period.
pub const DEFAULT_CELLS: usize = 512;
/// Sup-norm residual accepted for the returned solution.
pub const RESIDUAL_TOL: f64 = 1e-8;
const MAX_CELLS: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("no positive periodic solution: mean growth {mean} ≤ 0")]
    NoPositivePeriodicSolution { mean: f64 },
    #[error("coefficient b must be positive, found {min}")]
    NonPositiveB { min: f64 },
    #[error("periods differ: {0} vs {1}")]
    PeriodMismatch(f64, f64),
    #[error("residual {residual:e} above tolerance after refining to {cells} cells")]
    ResidualTooLarge { residual: f64, cells: usize },
    #[error("periodic density has nonpositive minimum {min}")]
    DegenerateV { min: f64 },
}

#[derive(Clone, Debug)]
pub struct PeriodicLogisticSolution {
    pub v: PeriodicScalarFunction,
    pub mean_a: f64,
    /// `|V(0) − V(T)|` of the closed form.
    pub periodicity_defect: f64,
    /// Sup over cells of `|ΔV/Δt − mean of V(a − bV)|` (Simpson in each cell).
    pub ode_residual: f64,
    pub cells: usize,
}

/// Positive T-periodic solution of `V' = V(a − bV)`.
pub fn solve_periodic_logistic(
    a: &PeriodicScalarFunction,
    b: &PeriodicScalarFunction,
) -> Result<PeriodicLogisticSolution, OdeError> {
    if (a.period() - b.period()).abs() > 1e-12 * a.period() {
        return Err(OdeError::PeriodMismatch(a.period(), b.period()));
    }
    let mean_a = a.mean();
    if !(mean_a > 0.0) {
        return Err(OdeError::NoPositivePeriodicSolution { mean: mean_a });
    }
    if !(b.min() > 0.0) {
        return Err(OdeError::NonPositiveB { min: b.min() });
    }
    let mut cells = aligned_cells(DEFAULT_CELLS, a, b);
    loop {
        let sol = closed_form(a, b, cells);
        if sol.ode_residual < RESIDUAL_TOL {
            return Ok(sol);
        }
        if cells * 2 > MAX_CELLS {
            return Err(OdeError::ResidualTooLarge {
                residual: sol.ode_residual,
                cells,
            });
        }
        cells *= 2;
    }
}

/// Round the cell count up so tabulated kinks fall on cell boundaries.
fn aligned_cells(base: usize, a: &PeriodicScalarFunction, b: &PeriodicScalarFunction) -> usize {
    let mut cells = base;
    for f in [a, b] {
        if let TimeRule::Tabulated { samples } = f.rule() {
            let m = samples.len();
            if cells % m != 0 {
                cells = cells.div_ceil(m) * m;
            }
        }
    }
    cells
}

fn closed_form(a: &PeriodicScalarFunction, b: &PeriodicScalarFunction, cells: usize) -> PeriodicLogisticSolution {
    let period = a.period();
    // Fine grid with 2·cells intervals; residual cells pair them up.
    let n = 2 * cells;
    let h = period / n as f64;
    let t_node = |k: usize| k as f64 * h;
    let a_nodes: Vec<f64> = (0..=n).map(|k| a.eval(t_node(k))).collect();
    let a_mids: Vec<f64> = (0..n).map(|k| a.eval(t_node(k) + 0.5 * h)).collect();
    let big_a = cumulative_simpson(&a_nodes, &a_mids, h);
    // A at cell midpoints from the quadratic through the cell's three samples.
    let big_a_mid: Vec<f64> = (0..n)
        .map(|k| big_a[k] + h / 24.0 * (5.0 * a_nodes[k] + 8.0 * a_mids[k] - a_nodes[k + 1]))
        .collect();
    let g_nodes: Vec<f64> = (0..=n).map(|k| b.eval(t_node(k)) * big_a[k].exp()).collect();
    let g_mids: Vec<f64> = (0..n)
        .map(|k| b.eval(t_node(k) + 0.5 * h) * big_a_mid[k].exp())
        .collect();
    let j = cumulative_simpson(&g_nodes, &g_mids, h);
    let growth = big_a[n].exp();
    let c = j[n] / (growth - 1.0);
    let v: Vec<f64> = (0..=n).map(|k| big_a[k].exp() / (c + j[k])).collect();

    let rhs = |k: usize| v[k] * (a_nodes[k] - b.eval(t_node(k)) * v[k]);
    let mut residual = 0.0_f64;
    for cell in 0..cells {
        let (k0, k1, k2) = (2 * cell, 2 * cell + 1, 2 * cell + 2);
        let width = 2.0 * h;
        let lhs = (v[k2] - v[k0]) / width;
        let avg = (rhs(k0) + 4.0 * rhs(k1) + rhs(k2)) / 6.0;
        residual = residual.max((lhs - avg).abs());
    }
    let samples = v[..n].to_vec();
    PeriodicLogisticSolution {
        periodicity_defect: (v[0] - v[n]).abs(),
        v: PeriodicScalarFunction::new(period, TimeRule::Tabulated { samples }).expect("samples"),
        mean_a: a.mean(),
        ode_residual: residual,
        cells,
    }
}

/// Far-field lower bound `V_*` of the native species' periodic state:
/// growth `liminf m₂`, self-limitation `b₂^*`.
pub fn lower_native_envelope(params: &ModelParams) -> Result<PeriodicLogisticSolution, OdeError> {
    let (m_low, _) = params.m2.asymptotic_bounds();
    solve_periodic_logistic(&m_low, &params.b2.upper_envelope())
}

/// Far-field upper bound `V^*`: growth `limsup m₂`, self-limitation `b_{2,*}`.
pub fn upper_native_envelope(params: &ModelParams) -> Result<PeriodicLogisticSolution, OdeError> {
    let (_, m_high) = params.m2.asymptotic_bounds();
    solve_periodic_logistic(&m_high, &params.b2.lower_envelope())
}

/// Decay rate `K` and overshoot `H` of the super-solution `(1 + He^{−Kt})V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeConstants {
    pub k: f64,
    pub h: f64,
    /// `‖v0‖∞ / min V(0,·)` as computed, before clamping `H` at zero.
    pub ratio: f64,
    /// The minimum of `V(0,·)` sits on the outer edge of the truncated grid,
    /// so the true infimum over `[0,∞)` may be smaller.
    pub min_on_boundary: bool,
}

pub fn envelope_constants(params: &ModelParams, v: &RadialPeriodicField) -> Result<EnvelopeConstants, OdeError> {
    let table = v.table();
    let min_v = table.min();
    if !(min_v > 0.0) {
        return Err(OdeError::DegenerateV { min: min_v });
    }
    let row0 = table.row(0);
    let (j_min, min_v0) = row0
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(jm, m), (j, x)| if x < m { (j, x) } else { (jm, m) });
    let k = 0.5 * params.b2.inf() * min_v;
    let ratio = params.init.v0().sup() / min_v0;
    Ok(EnvelopeConstants {
        k,
        h: (ratio - 1.0).max(0.0),
        ratio,
        min_on_boundary: j_min + 1 == row0.len() && row0.len() > 1 && row0[j_min] < row0[j_min - 1],
    })
}

/// `v̄(t,r) = (1 + H e^{−Kt}) V(t mod T, r)`.
pub fn vbar(t: f64, r: f64, v: &RadialPeriodicField, constants: &EnvelopeConstants) -> f64 {
    (1.0 + constants.h * (-constants.k * t).exp()) * v.eval(t, r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct H3Report {
    pub pass: bool,
    /// `min_t [m_{1,*}(t) − (1+H) c₁^*(t) V^*(t)]`.
    pub margin: f64,
    pub argmin_t: f64,
}

/// Weak-competition condition on the invader, checked on a 512-point time grid.
pub fn check_h3(params: &ModelParams, v_upper: &PeriodicLogisticSolution, constants: &EnvelopeConstants) -> H3Report {
    let (m_low, _) = params.m1.asymptotic_bounds();
    let c_high = params.c1.upper_envelope();
    let inflation = 1.0 + constants.h;
    let n = DEFAULT_CELLS;
    let period = params.period;
    let (margin, argmin_t) = (0..n)
        .map(|k| {
            let t = k as f64 * period / n as f64;
            (m_low.eval(t) - inflation * c_high.eval(t) * v_upper.v.eval(t), t)
        })
        .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc });
    H3Report {
        pass: margin > 0.0,
        margin,
        argmin_t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> PeriodicScalarFunction {
        PeriodicScalarFunction::constant(1.0, x)
    }

    #[test]
    fn constant_growth_gives_fixed_point() {
        let sol = solve_periodic_logistic(&c(2.0), &c(1.0)).unwrap();
        let TimeRule::Tabulated { samples } = sol.v.rule() else {
            panic!("expected table")
        };
        for s in samples {
            assert!((s - 2.0).abs() < 1e-12, "{s}");
        }
        assert!(sol.periodicity_defect < 1e-10);
    }

    #[test]
    fn nonpositive_mean_is_rejected() {
        assert!(matches!(
            solve_periodic_logistic(&c(-1.0), &c(1.0)),
            Err(OdeError::NoPositivePeriodicSolution { .. })
        ));
        let zero_mean = PeriodicScalarFunction::sinusoid(1.0, 0.0, 1.0, 0.0);
        assert!(solve_periodic_logistic(&zero_mean, &c(1.0)).is_err());
    }

    #[test]
    fn residual_and_periodicity_within_tolerance() {
        let a = PeriodicScalarFunction::sinusoid(1.0, 1.0, 0.5, 0.0);
        let sol = solve_periodic_logistic(&a, &c(1.0)).unwrap();
        assert!(sol.ode_residual < RESIDUAL_TOL);
        assert!(sol.periodicity_defect < 1e-10);
        assert!(sol.v.min() > 0.0);
    }

    #[test]
    fn tabulated_growth_is_supported() {
        let a = PeriodicScalarFunction::new(
            2.0,
            TimeRule::Tabulated {
                samples: vec![1.0, 2.0, 0.5, 1.5, 1.0, 0.2],
            },
        )
        .unwrap();
        let b = PeriodicScalarFunction::constant(2.0, 0.5);
        let sol = solve_periodic_logistic(&a, &b).unwrap();
        assert!(sol.ode_residual < RESIDUAL_TOL);
        assert_eq!(sol.cells % 6, 0);
    }

    #[test]
    fn h3_margins() {
        use crate::presets::bench_spread as bench_constant_params;
        let p = bench_constant_params();
        let v_up = solve_periodic_logistic(&c(1.0), &c(1.0)).unwrap();
        let constants = |h| EnvelopeConstants {
            k: 0.5,
            h,
            ratio: 1.0 + h,
            min_on_boundary: false,
        };
        let rep = check_h3(&p, &v_up, &constants(0.0));
        assert!(rep.pass && (rep.margin - 0.8).abs() < 1e-12);
        let rep = check_h3(&p, &v_up, &constants(0.5));
        assert!(rep.pass && (rep.margin - 0.7).abs() < 1e-12);
        let mut strong = p.clone();
        strong.c1 = crate::model::CoefficientField::constant(1.0, 2.0);
        let rep = check_h3(&strong, &v_up, &constants(0.0));
        assert!(!rep.pass && (rep.margin + 1.0).abs() < 1e-12);
    }
}

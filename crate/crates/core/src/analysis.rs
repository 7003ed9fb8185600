//! Dichotomy verdicts, sharp thresholds in `μ` and the initial amplitude,
//! the semi-wave speed `K₀`, and spreading-speed bounds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigensolver::{threshold_radius, EigenError, EigenProblem, RadiusThreshold};
use crate::entire_solutions::{
    default_r_out, effective_u_growth, native_density, EntireError, EntireOptions, RadialPeriodicField,
};
use crate::exec::{self, Execution};
use crate::fbsolver::{simulate_with_hook, FbError, SimulationState, SolverConfig, Trajectory};
use crate::model::{InitialData, ModelError, ModelParams, PeriodicScalarFunction, SpaceTimeTable, TimeRule};
use crate::numerics::{interp_uniform, sup_norm, Tridiagonal};
use crate::periodic_ode::{
    envelope_constants, lower_native_envelope, solve_periodic_logistic, upper_native_envelope, OdeError,
};
use crate::stepper::{LinearStepper, Scheme};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Entire(#[from] EntireError),
    #[error(transparent)]
    Solver(#[from] FbError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no bracket: both endpoints give {low:?} / {high:?}")]
    NoBracket { low: VerdictKind, high: VerdictKind },
    #[error("no semi-wave: mean growth {mean_a} ≤ (mean K)²/(4d) with mean K = {mean_k}")]
    NoSemiWave { mean_a: f64, mean_k: f64 },
    #[error("semi-wave iteration did not converge in {iterations} iterations (last change {change:e})")]
    NonConvergence { iterations: usize, change: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Spreading,
    Vanishing,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    pub radius_crossed: bool,
    pub crossing_time: Option<f64>,
    /// `sup u` at whole periods.
    pub decay: Vec<f64>,
    /// Front increment over each period.
    pub front_stall: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyVerdict {
    pub kind: VerdictKind,
    pub evidence: Evidence,
    /// `None` when the spreading radius is unbounded.
    pub h_star_used: Option<f64>,
    pub recommendation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyOptions {
    /// `tol_u = tol_u_rel · C1`.
    pub tol_u_rel: f64,
    /// `tol_h = tol_h_rel · h0`.
    pub tol_h_rel: f64,
    pub stall_periods: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            tol_u_rel: 1e-4,
            tol_h_rel: 1e-5,
            stall_periods: 5,
        }
    }
}

/// The spreading radius `h*(d₁, m₁ − inflation·c₁V, T)`.
pub fn spreading_radius(
    params: &ModelParams,
    v: &RadialPeriodicField,
    inflation: f64,
) -> Result<RadiusThreshold, AnalysisError> {
    let eff = effective_u_growth(params, v, inflation)?;
    let base = EigenProblem::new(params.d1, eff, params.h0(), params.dim);
    Ok(threshold_radius(&base, v.r_out())?)
}

/// Native density on the default truncation.
pub fn default_native_density(params: &ModelParams) -> Result<RadialPeriodicField, AnalysisError> {
    let r_out = default_r_out(&[&params.m2, &params.b2]);
    Ok(native_density(params, r_out, &EntireOptions::default())?)
}

/// Applies the verdict rules to a (possibly growing) trajectory.
#[derive(Clone, Debug)]
pub struct Classifier {
    pub h_star: Option<f64>,
    pub tol_u: f64,
    pub tol_h: f64,
    pub stall_periods: usize,
}

impl Classifier {
    pub fn new(params: &ModelParams, v: &RadialPeriodicField, opts: &ClassifyOptions) -> Result<Self, AnalysisError> {
        let h_star = spreading_radius(params, v, 1.0)?.value();
        Ok(Self::with_radius(params, h_star, opts))
    }

    pub fn with_radius(params: &ModelParams, h_star: Option<f64>, opts: &ClassifyOptions) -> Self {
        Self {
            h_star,
            tol_u: opts.tol_u_rel * params.bound_c1(),
            tol_h: opts.tol_h_rel * params.h0(),
            stall_periods: opts.stall_periods,
        }
    }

    pub fn classify(&self, traj: &Trajectory) -> DichotomyVerdict {
        let crossing = self
            .h_star
            .and_then(|hs| traj.records.iter().find(|r| r.h > hs).map(|r| r.t));
        let periodic: Vec<_> = traj.period_records().collect();
        let decay: Vec<f64> = periodic.iter().map(|r| r.u_max).collect();
        let front_stall: Vec<f64> = periodic.windows(2).map(|w| w[1].h - w[0].h).collect();
        let evidence = Evidence {
            radius_crossed: crossing.is_some(),
            crossing_time: crossing,
            decay,
            front_stall,
        };
        let kind = if crossing.is_some() {
            VerdictKind::Spreading
        } else if self.vanished(&evidence) {
            VerdictKind::Vanishing
        } else {
            VerdictKind::Inconclusive
        };
        DichotomyVerdict {
            kind,
            recommendation: (kind == VerdictKind::Inconclusive)
                .then(|| "extend the horizon (more periods) and classify again".to_string()),
            h_star_used: self.h_star,
            evidence,
        }
    }

    fn vanished(&self, ev: &Evidence) -> bool {
        let k = self.stall_periods;
        if ev.front_stall.len() < k {
            return false;
        }
        let decay_ok = ev.decay[ev.decay.len() - k..].iter().all(|u| *u < self.tol_u);
        let stall_ok = ev.front_stall[ev.front_stall.len() - k..].iter().all(|d| *d < self.tol_h);
        decay_ok && stall_ok
    }

    /// A per-period hook that stops a run as soon as the verdict is decided.
    pub fn hook(&self) -> impl FnMut(&SimulationState, &Trajectory) -> Option<String> + '_ {
        move |state, traj| {
            if self.h_star.is_some_and(|hs| state.h > hs) {
                return Some("spreading radius crossed".into());
            }
            let k = self.stall_periods;
            let periodic: Vec<_> = traj.period_records().collect();
            if periodic.len() > k {
                let tail = &periodic[periodic.len() - k - 1..];
                let decayed = tail[1..].iter().all(|r| r.u_max < self.tol_u);
                let stalled = tail.windows(2).all(|w| w[1].h - w[0].h < self.tol_h);
                if decayed && stalled {
                    return Some("decay and front stall".into());
                }
            }
            None
        }
    }
}

/// Classify a finished trajectory.
pub fn classify(
    traj: &Trajectory,
    params: &ModelParams,
    v: &RadialPeriodicField,
    opts: &ClassifyOptions,
) -> Result<DichotomyVerdict, AnalysisError> {
    Ok(Classifier::new(params, v, opts)?.classify(traj))
}

/// `sup_{r ≤ radius} |v(t,r) − V(t,r)|` at every snapshot.
pub fn native_gap(traj: &Trajectory, v: &RadialPeriodicField, radius: f64) -> Vec<(f64, f64)> {
    let dr = traj.config.dr();
    traj.snapshots
        .iter()
        .filter(|s| !s.v.is_empty())
        .map(|s| {
            let gap = s
                .v
                .iter()
                .enumerate()
                .take_while(|(j, _)| *j as f64 * dr <= radius)
                .fold(0.0_f64, |g, (j, x)| g.max((x - v.eval(s.t, j as f64 * dr)).abs()));
            (s.t, gap)
        })
        .collect()
}

/// The quantity varied by threshold searches and sweeps.
#[derive(Clone, Debug)]
pub enum Dial {
    Mu,
    /// `u0 = ε·θ` for the given shape.
    Eps(InitialData),
    D1,
    H0,
}

impl Dial {
    pub fn name(&self) -> &'static str {
        match self {
            Dial::Mu => "mu",
            Dial::Eps(_) => "eps",
            Dial::D1 => "d1",
            Dial::H0 => "h0",
        }
    }

    pub fn apply(&self, params: &ModelParams, x: f64) -> Result<ModelParams, AnalysisError> {
        Ok(match self {
            Dial::Mu => params.with_mu(x),
            Dial::Eps(theta) => ModelParams {
                init: theta.with_u0_scale(x)?,
                ..params.clone()
            },
            Dial::D1 => params.with_d1(x),
            Dial::H0 => params.with_h0(x)?,
        })
    }

    /// Whether the spreading radius must be recomputed for each value.
    fn moves_radius(&self) -> bool {
        matches!(self, Dial::D1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdOptions {
    /// Absolute stopping width; `None` means 1% of the bracket.
    pub width: Option<f64>,
    /// Longest horizon (in periods) reached by budget doubling.
    pub max_periods: f64,
    pub classify: ClassifyOptions,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            width: None,
            max_periods: 400.0,
            classify: ClassifyOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointVerdict {
    pub value: f64,
    pub kind: VerdictKind,
    pub h_final: f64,
    pub periods_run: f64,
}

/// Simulate one point until its verdict is decided, doubling the horizon
/// on inconclusive runs.
pub fn verdict_at(
    params: &ModelParams,
    config: &SolverConfig,
    classifier: &Classifier,
    max_periods: f64,
) -> Result<PointVerdict, AnalysisError> {
    let mut cfg = config.clone();
    loop {
        let mut hook = classifier.hook();
        let traj = match simulate_with_hook(params, &cfg, &mut hook) {
            Ok(t) => t,
            Err(FbError::DomainExhausted { partial, .. }) => *partial,
            Err(e) => return Err(e.into()),
        };
        let verdict = classifier.classify(&traj);
        if verdict.kind != VerdictKind::Inconclusive || cfg.periods * 2.0 > max_periods {
            return Ok(PointVerdict {
                value: f64::NAN,
                kind: verdict.kind,
                h_final: traj.final_h(),
                periods_run: traj.last().t / params.period,
            });
        }
        cfg.periods *= 2.0;
    }
}

/// Shared state for evaluating verdicts along a dial.
pub struct VerdictProbe<'a> {
    pub params: &'a ModelParams,
    pub config: &'a SolverConfig,
    pub dial: &'a Dial,
    pub v: &'a RadialPeriodicField,
    pub opts: &'a ThresholdOptions,
    base_radius: Option<f64>,
}

impl<'a> VerdictProbe<'a> {
    pub fn new(
        params: &'a ModelParams,
        config: &'a SolverConfig,
        dial: &'a Dial,
        v: &'a RadialPeriodicField,
        opts: &'a ThresholdOptions,
    ) -> Result<Self, AnalysisError> {
        let base_radius = if dial.moves_radius() {
            None
        } else {
            spreading_radius(params, v, 1.0)?.value()
        };
        Ok(Self {
            params,
            config,
            dial,
            v,
            opts,
            base_radius,
        })
    }

    pub fn h_star(&self) -> Option<f64> {
        self.base_radius
    }

    pub fn at(&self, x: f64) -> Result<PointVerdict, AnalysisError> {
        let p = self.dial.apply(self.params, x)?;
        let h_star = if self.dial.moves_radius() {
            spreading_radius(&p, self.v, 1.0)?.value()
        } else {
            self.base_radius
        };
        let classifier = Classifier::with_radius(&p, h_star, &self.opts.classify);
        let mut pv = verdict_at(&p, self.config, &classifier, self.opts.max_periods)?;
        pv.value = x;
        Ok(pv)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdOutcome {
    /// Spreading for every admissible value: the threshold is zero.
    Zero { h0: f64, h_star_inflated: f64 },
    Interval {
        low: f64,
        high: f64,
        /// Set when an inconclusive midpoint ended the search early.
        widened: bool,
        /// `h0 < h*(d₁, m₁)`, under which the threshold is known to be positive.
        positive_expected: bool,
        points: Vec<PointVerdict>,
    },
}

/// Bisection on a dial with the verdict as predicate: `Vanishing` below,
/// `Spreading` above.
pub fn find_threshold(
    params: &ModelParams,
    config: &SolverConfig,
    dial: &Dial,
    bracket: (f64, f64),
    opts: &ThresholdOptions,
) -> Result<ThresholdOutcome, AnalysisError> {
    if !(bracket.0 < bracket.1) {
        return Err(AnalysisError::Invalid("bracket must be increasing".into()));
    }
    let v = default_native_density(params)?;
    if matches!(dial, Dial::Mu | Dial::Eps(_)) {
        let constants = envelope_constants(params, &v)?;
        if let Some(hs) = spreading_radius(params, &v, 1.0 + constants.h)?.value() {
            if params.h0() >= hs {
                return Ok(ThresholdOutcome::Zero {
                    h0: params.h0(),
                    h_star_inflated: hs,
                });
            }
        }
    }
    let positive_expected = {
        let base = EigenProblem::new(params.d1, params.m1.clone(), params.h0(), params.dim);
        threshold_radius(&base, v.r_out())?
            .value()
            .is_none_or(|h| params.h0() < h)
    };
    let probe = VerdictProbe::new(params, config, dial, &v, opts)?;
    let lo_v = probe.at(bracket.0)?;
    let hi_v = probe.at(bracket.1)?;
    if lo_v.kind != VerdictKind::Vanishing || hi_v.kind != VerdictKind::Spreading {
        return Err(AnalysisError::NoBracket {
            low: lo_v.kind,
            high: hi_v.kind,
        });
    }
    let width = opts.width.unwrap_or(1e-2 * (bracket.1 - bracket.0));
    let (mut lo, mut hi) = bracket;
    let mut points = vec![lo_v, hi_v];
    let mut widened = false;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let pv = probe.at(mid)?;
        let kind = pv.kind;
        points.push(pv);
        match kind {
            VerdictKind::Spreading => hi = mid,
            VerdictKind::Vanishing => lo = mid,
            VerdictKind::Inconclusive => {
                widened = true;
                break;
            }
        }
    }
    Ok(ThresholdOutcome::Interval {
        low: lo,
        high: hi,
        widened,
        positive_expected,
        points,
    })
}

/// `μ*`, reported as an interval.
pub fn find_mu_star(
    params: &ModelParams,
    config: &SolverConfig,
    bracket: (f64, f64),
    opts: &ThresholdOptions,
) -> Result<ThresholdOutcome, AnalysisError> {
    find_threshold(params, config, &Dial::Mu, bracket, opts)
}

/// `ε*` for `u0 = ε·θ`, reported as an interval.
pub fn find_eps_star(
    params: &ModelParams,
    theta: &InitialData,
    config: &SolverConfig,
    bracket: (f64, f64),
    opts: &ThresholdOptions,
) -> Result<ThresholdOutcome, AnalysisError> {
    let p = ModelParams {
        init: theta.with_u0_scale(bracket.0)?,
        ..params.clone()
    };
    find_threshold(&p, config, &Dial::Eps(theta.clone()), bracket, opts)
}

/// Verdicts on a grid of dial values, evaluated independently.
pub fn verdict_grid(
    params: &ModelParams,
    config: &SolverConfig,
    dial: &Dial,
    values: &[f64],
    opts: &ThresholdOptions,
    exec: Execution,
) -> Result<Vec<PointVerdict>, AnalysisError> {
    let v = default_native_density(params)?;
    let probe = VerdictProbe::new(params, config, dial, &v, opts)?;
    exec::map(exec, values, |&x| probe.at(x)).into_iter().collect()
}

/// No `Vanishing` verdict above a `Spreading` one (values ascending).
pub fn verdicts_monotone(points: &[PointVerdict]) -> bool {
    let mut sorted: Vec<&PointVerdict> = points.iter().collect();
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut seen_spreading = false;
    for p in sorted {
        match p.kind {
            VerdictKind::Spreading => seen_spreading = true,
            VerdictKind::Vanishing if seen_spreading => return false,
            _ => {}
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub p1: f64,
    pub p2: Option<f64>,
    pub kind: VerdictKind,
    pub h_final: f64,
}

/// A one- or two-parameter verdict grid whose points can be evaluated in
/// any grouping; the native density and base radius are computed once.
pub struct SweepPlan<'a> {
    params: &'a ModelParams,
    config: &'a SolverConfig,
    first: &'a Dial,
    second: Option<&'a Dial>,
    opts: &'a ThresholdOptions,
    v: RadialPeriodicField,
    base_radius: Option<f64>,
}

impl<'a> SweepPlan<'a> {
    pub fn new(
        params: &'a ModelParams,
        config: &'a SolverConfig,
        first: &'a Dial,
        second: Option<&'a Dial>,
        opts: &'a ThresholdOptions,
    ) -> Result<Self, AnalysisError> {
        let v = default_native_density(params)?;
        let base_radius = spreading_radius(params, &v, 1.0)?.value();
        Ok(Self {
            params,
            config,
            first,
            second,
            opts,
            v,
            base_radius,
        })
    }

    /// Grid points in row-major order.
    pub fn points(first: &[f64], second: Option<&[f64]>) -> Vec<(f64, Option<f64>)> {
        match second {
            None => first.iter().map(|&x| (x, None)).collect(),
            Some(ys) => first
                .iter()
                .flat_map(|&x| ys.iter().map(move |&y| (x, Some(y))))
                .collect(),
        }
    }

    fn row(&self, x: f64, y: Option<f64>) -> Result<SweepRow, AnalysisError> {
        let mut p = self.first.apply(self.params, x)?;
        if let (Some(dial), Some(y)) = (self.second, y) {
            p = dial.apply(&p, y)?;
        }
        let moves = self.first.moves_radius() || self.second.is_some_and(|d| d.moves_radius());
        let h_star = if moves {
            spreading_radius(&p, &self.v, 1.0)?.value()
        } else {
            self.base_radius
        };
        let classifier = Classifier::with_radius(&p, h_star, &self.opts.classify);
        let pv = verdict_at(&p, self.config, &classifier, self.opts.max_periods)?;
        Ok(SweepRow {
            p1: x,
            p2: y,
            kind: pv.kind,
            h_final: pv.h_final,
        })
    }

    /// Rows for `points`, in the given order.
    pub fn run(&self, points: &[(f64, Option<f64>)], exec: Execution) -> Result<Vec<SweepRow>, AnalysisError> {
        exec::map(exec, points, |&(x, y)| self.row(x, y)).into_iter().collect()
    }
}

/// Verdicts on a one- or two-parameter grid, in row-major order.
pub fn sweep(
    params: &ModelParams,
    config: &SolverConfig,
    first: (&Dial, &[f64]),
    second: Option<(&Dial, &[f64])>,
    opts: &ThresholdOptions,
    exec: Execution,
) -> Result<Vec<SweepRow>, AnalysisError> {
    let plan = SweepPlan::new(params, config, first.0, second.map(|s| s.0), opts)?;
    plan.run(&SweepPlan::points(first.1, second.map(|s| s.1)), exec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemiWaveOptions {
    /// Half-line truncation; `None` means `40·sqrt(d / mean a)`.
    pub length: Option<f64>,
    pub dr: f64,
    pub steps_per_period: usize,
    pub relaxation: f64,
    pub tol: f64,
    pub max_iterations: usize,
    /// Periods of the `U` problem between `K` updates.
    pub inner_periods: usize,
}

impl Default for SemiWaveOptions {
    fn default() -> Self {
        Self {
            length: None,
            dr: 0.01,
            steps_per_period: 256,
            relaxation: 0.5,
            tol: 1e-6,
            max_iterations: 500,
            inner_periods: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemiWaveResult {
    #[serde(skip)]
    pub k0: PeriodicScalarFunction,
    pub k0_samples: Vec<f64>,
    #[serde(skip)]
    pub profile: SpaceTimeTable,
    pub mean_k0: f64,
    /// `2·sqrt(d · mean a)`.
    pub bound: f64,
    pub iterations: usize,
    /// `sup_t |μ U_r(t,0) − K₀(t)|`.
    pub boundary_residual: f64,
    /// `sup_t |U(t, 0.9L) − V(t)| / V(t)`.
    pub tail_defect: f64,
    /// Largest decrease between neighbouring nodes of the profile.
    pub monotonicity_defect: f64,
    pub length: f64,
}

/// `U_r(0)` from the second-order one-sided stencil with `U(0) = 0`.
fn slope_at_origin(u: &[f64], dr: f64) -> f64 {
    (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dr)
}

/// `K₀(μ, a, b)`: the front speed for which the semi-wave `U` on the
/// half-line satisfies `μ U_r(t,0) = K₀(t)`.
pub fn semiwave_k0(
    mu: f64,
    a: &PeriodicScalarFunction,
    b: &PeriodicScalarFunction,
    d: f64,
    opts: &SemiWaveOptions,
) -> Result<SemiWaveResult, AnalysisError> {
    let period = a.period();
    let mean_a = a.mean();
    if !(mean_a > 0.0) {
        return Err(AnalysisError::NoSemiWave { mean_a, mean_k: 0.0 });
    }
    if !(mu > 0.0 && d > 0.0) {
        return Err(AnalysisError::Invalid("μ and d must be positive".into()));
    }
    let bound = 2.0 * (d * mean_a).sqrt();
    let min_length = 40.0 * (d / mean_a).sqrt();
    let length = opts.length.unwrap_or(min_length);
    if length < min_length * (1.0 - 1e-12) {
        return Err(AnalysisError::Invalid(format!("L = {length} is below 40·sqrt(d/mean a) = {min_length}")));
    }
    let v = solve_periodic_logistic(a, b)?.v;
    let n = (length / opts.dr).round() as usize + 1;
    let dr = length / (n - 1) as f64;
    let steps = opts.steps_per_period;
    let dt = period / steps as f64;

    // Reaction over half steps: w ↦ w·E / (1 + w·I), as for the entire problem.
    let tau = 0.5 * dt;
    let (e_half, i_half): (Vec<f64>, Vec<f64>) = (0..2 * steps)
        .map(|h| {
            let t0 = h as f64 * tau;
            let (a0, am, a1) = (a.eval(t0), a.eval(t0 + 0.5 * tau), a.eval(t0 + tau));
            let (b0, bm, b1) = (b.eval(t0), b.eval(t0 + 0.5 * tau), b.eval(t0 + tau));
            let a_mid = tau / 24.0 * (5.0 * a0 + 8.0 * am - a1);
            let a_end = tau / 6.0 * (a0 + 4.0 * am + a1);
            (
                a_end.exp(),
                tau / 6.0 * (b0 + 4.0 * bm * a_mid.exp() + b1 * a_end.exp()),
            )
        })
        .unzip();
    let react = |h: usize, w: &mut [f64]| {
        let (e, i) = (e_half[h], i_half[h]);
        for x in w.iter_mut() {
            *x = *x * e / (1.0 + *x * i);
        }
    };
    let v_at: Vec<f64> = (0..=steps).map(|k| v.eval(k as f64 * dt)).collect();
    let operator = |k: f64| {
        let mut op = Tridiagonal::zeros(n);
        let diff = d / (dr * dr);
        let adv = k / (2.0 * dr);
        for i in 1..n - 1 {
            op.lower[i] = diff + adv;
            op.diag[i] = -2.0 * diff;
            op.upper[i] = diff - adv;
        }
        op
    };

    // Start from the tanh-like profile of the autonomous problem.
    let mut u: Vec<f64> = (0..n)
        .map(|j| v_at[0] * (1.0 - (-(j as f64) * dr * (mean_a / d).sqrt()).exp()))
        .collect();
    let mut k_prof = vec![0.5 * bound; steps];
    let mut scratch = Vec::with_capacity(n);
    let mut rows = vec![0.0; steps * n];
    let mut slopes = vec![0.0; steps];
    let mut change = f64::INFINITY;
    let mut defect;
    for iteration in 1..=opts.max_iterations {
        let steppers: Vec<LinearStepper> = k_prof
            .iter()
            .map(|&k| LinearStepper::new(operator(k), dt, Scheme::TrBdf2))
            .collect();
        let mut start = u.clone();
        defect = f64::INFINITY;
        for _ in 0..opts.inner_periods.max(1) {
            start.copy_from_slice(&u);
            for k in 0..steps {
                rows[k * n..(k + 1) * n].copy_from_slice(&u);
                slopes[k] = slope_at_origin(&u, dr);
                react(2 * k, &mut u);
                u[0] = 0.0;
                steppers[k].step(&mut u, &[(0, 0.0), (n - 1, v_at[k + 1])], &mut scratch);
                react(2 * k + 1, &mut u);
                u[0] = 0.0;
                u[n - 1] = v_at[k + 1];
            }
            defect = crate::numerics::sup_diff(&start, &u);
        }
        let next: Vec<f64> = k_prof
            .iter()
            .zip(&slopes)
            .map(|(k, s)| (1.0 - opts.relaxation) * k + opts.relaxation * mu * s)
            .collect();
        change = crate::numerics::sup_diff(&next, &k_prof);
        let mean_k = next.iter().sum::<f64>() / steps as f64;
        if !(mean_k < bound) {
            return Err(AnalysisError::NoSemiWave { mean_a, mean_k });
        }
        if change < opts.tol && defect < 1e-4 * opts.tol {
            // The profile was computed with the current K; keep K, not `next`.
            let boundary_residual = k_prof
                .iter()
                .zip(&slopes)
                .fold(0.0_f64, |m, (k, s)| m.max((mu * s - k).abs()));
            let profile = SpaceTimeTable::new(period, steps, length, n, rows.clone())?;
            let j_tail = ((0.9 * (n - 1) as f64).round() as usize).min(n - 1);
            let tail_defect = (0..steps).fold(0.0_f64, |m, k| {
                let vk = v_at[k];
                m.max((rows[k * n + j_tail] - vk).abs() / vk)
            });
            let monotonicity_defect = (0..steps).fold(0.0_f64, |m, k| {
                rows[k * n..(k + 1) * n]
                    .windows(2)
                    .fold(m, |m, w| m.max(w[0] - w[1]))
            });
            let mean_k0 = k_prof.iter().sum::<f64>() / steps as f64;
            let k0 = if k_prof.iter().all(|k| *k == k_prof[0]) {
                PeriodicScalarFunction::constant(period, k_prof[0])
            } else {
                PeriodicScalarFunction::new(period, TimeRule::Tabulated { samples: k_prof.clone() })?
            };
            return Ok(SemiWaveResult {
                k0,
                k0_samples: k_prof,
                profile,
                mean_k0,
                bound,
                iterations: iteration,
                boundary_residual,
                tail_defect,
                monotonicity_defect,
                length,
            });
        }
        k_prof = next;
    }
    Err(AnalysisError::NonConvergence {
        iterations: opts.max_iterations,
        change,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedBounds {
    /// `mean K₀(μ, m_{1,*} − c₁^*V^*, b₁^*)`; zero when no semi-wave exists.
    pub lower: f64,
    pub lower_exists: bool,
    /// `mean K₀(μ, m₁^*, b_{1,*})`.
    pub upper: f64,
    /// The lower bound uses `V^*` itself rather than `V^* + ε`.
    pub note: String,
}

/// Spreading-speed bounds from two semi-wave problems.
pub fn speed_bounds(params: &ModelParams, opts: &SemiWaveOptions) -> Result<SpeedBounds, AnalysisError> {
    let v_upper = upper_native_envelope(params)?.v;
    let _ = lower_native_envelope(params)?;
    let (m_lo, m_hi) = params.m1.asymptotic_bounds();
    let c_hi = params.c1.upper_envelope();
    let b_hi = params.b1.upper_envelope();
    let b_lo = params.b1.lower_envelope();
    let n = match v_upper.rule() {
        TimeRule::Tabulated { samples } => samples.len(),
        _ => 256,
    };
    let a_lower = PeriodicScalarFunction::combine(&[&m_lo, &c_hi, &v_upper], n, |x| x[0] - x[1] * x[2]);
    let upper = semiwave_k0(params.mu, &m_hi, &b_lo, params.d1, opts)?.mean_k0;
    let (lower, lower_exists) = match semiwave_k0(params.mu, &a_lower, &b_hi, params.d1, opts) {
        Ok(res) => (res.mean_k0, true),
        Err(AnalysisError::NoSemiWave { .. }) => (0.0, false),
        Err(e) => return Err(e),
    };
    Ok(SpeedBounds {
        lower,
        lower_exists,
        upper,
        note: "lower bound evaluated at V^* directly (ε = 0)".into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedMeasurement {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the linear fit.
    pub residual: f64,
    pub window: usize,
}

/// Least-squares slope of `h(t)` over the last `window` periods.
pub fn measure_speed(traj: &Trajectory, window: usize) -> Result<SpeedMeasurement, AnalysisError> {
    let span = traj.last().t / traj.period;
    if window == 0 || span + 1e-9 < 3.0 * window as f64 {
        return Err(AnalysisError::InsufficientData(format!(
            "trajectory spans {span} periods, need at least {}",
            3 * window
        )));
    }
    let t_start = traj.last().t - window as f64 * traj.period;
    let pts: Vec<(f64, f64)> = traj
        .records
        .iter()
        .filter(|r| r.t >= t_start - 1e-12)
        .map(|r| (r.t, r.h))
        .collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mh = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt = pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
    let sth = pts.iter().map(|p| (p.0 - mt) * (p.1 - mh)).sum::<f64>();
    let slope = sth / stt;
    let intercept = mh - slope * mt;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(SpeedMeasurement {
        slope,
        intercept,
        residual,
        window,
    })
}

/// Sample `u` of a snapshot at radius `r` (zero beyond the front).
pub fn snapshot_u_at(u: &[f64], h: f64, r: f64) -> f64 {
    if r >= h {
        0.0
    } else {
        interp_uniform(u, 1.0 / (u.len() - 1) as f64, r / h)
    }
}

/// Largest `|u|` in a profile; re-exported for report writers.
pub fn profile_sup(u: &[f64]) -> f64 {
    sup_norm(u)
}

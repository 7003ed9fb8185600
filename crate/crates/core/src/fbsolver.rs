//! Time stepping of the coupled free-boundary system.
//!
//! `u` lives on the fixed grid `s = r/h ∈ [0,1]`, where
//!
//! ```text
//! u_t = (d₁/h²)(u_ss + (N−1)/s·u_s) + (s·h'/h)·u_s + u(m₁ − b₁u − c₁v),
//! ```
//!
//! with diffusion by TR-BDF2 (an L-stable Crank–Nicolson variant) and
//! advection and reaction explicit.
//! `v` lives on a fixed `r` grid over `[0, R_out]` with zero flux at `R_out`.
//! The front moves by forward Euler on `h' = −μ u_r(t,h)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CoefficientField, ModelError, ModelParams};
use crate::numerics::{
    expansion_value, grow_expansion, interp_uniform, max_value, min_value, one_sided_derivative_end, OuterBoundary, ThomasFactor, Tridiagonal,
};

pub const NEGATIVITY_TOL: f64 = 1e-12;
pub const BOUND_SLACK: f64 = 1e-6;
/// Below this `sup u` the front speed is lost to underflow and runs stop.
pub const EXTINCT: f64 = 1e-250;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("stability failure at t = {t}: {detail}")]
    StabilityFailure { t: f64, detail: String, partial: Box<Trajectory> },
    #[error("front h = {h} reached 0.9·R_out at t = {t}")]
    DomainExhausted { t: f64, h: f64, partial: Box<Trajectory> },
}

impl FbError {
    /// Trajectory recorded up to the failure, when there is one.
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            FbError::StabilityFailure { partial, .. } | FbError::DomainExhausted { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Nodes on `s ∈ [0,1]`.
    pub ns: usize,
    /// Nodes on `[0, R_out]`.
    pub nr: usize,
    /// Time steps per period; `dt = T / steps_per_period`.
    pub steps_per_period: usize,
    pub r_out: f64,
    /// Final time in periods.
    pub periods: f64,
    /// Profile snapshots every this many periods.
    pub snapshot_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            ns: 256,
            nr: 2001,
            steps_per_period: 256,
            r_out: 100.0,
            periods: 50.0,
            snapshot_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn dt(&self, period: f64) -> f64 {
        period / self.steps_per_period as f64
    }

    pub fn ds(&self) -> f64 {
        1.0 / (self.ns - 1) as f64
    }

    pub fn dr(&self) -> f64 {
        self.r_out / (self.nr - 1) as f64
    }

    pub fn total_steps(&self) -> usize {
        (self.periods * self.steps_per_period as f64).round() as usize
    }

    pub fn validate(&self, params: &ModelParams) -> Result<(), FbError> {
        let bad = |s: String| Err(FbError::InvalidConfig(s));
        if self.ns < 64 || self.nr < 64 {
            return bad(format!("need ns, nr ≥ 64, got {} and {}", self.ns, self.nr));
        }
        if self.steps_per_period < 64 {
            return bad(format!("dt must be at most T/64, got T/{}", self.steps_per_period));
        }
        if !(self.r_out > 4.0 * params.h0()) {
            return bad(format!("R_out = {} must exceed 4·h0 = {}", self.r_out, 4.0 * params.h0()));
        }
        if !(self.periods > 0.0) || self.snapshot_every == 0 {
            return bad("need a positive horizon and snapshot interval".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationState {
    pub t: f64,
    pub h: f64,
    /// The front as an exact sum of its increments; `h` is its rounding.
    pub h_exact: Vec<f64>,
    pub dhdt: f64,
    /// Front increment of the most recent step.
    pub last_dh: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub step_index: usize,
}

impl SimulationState {
    pub fn initial(params: &ModelParams, config: &SolverConfig) -> Self {
        let h = params.h0();
        let ds = config.ds();
        let mut u: Vec<f64> = (0..config.ns).map(|i| params.init.u0().eval(i as f64 * ds * h)).collect();
        u[config.ns - 1] = 0.0;
        let dr = config.dr();
        let v = (0..config.nr).map(|j| params.init.v0().eval(j as f64 * dr)).collect();
        let dhdt = front_speed(&u, h, ds, params.mu);
        Self {
            t: 0.0,
            h,
            h_exact: vec![h],
            dhdt,
            last_dh: 0.0,
            u,
            v,
            step_index: 0,
        }
    }

    /// `u` on the `r` grid of spacing `dr`, zero beyond the front.
    pub fn u_on_r_grid(&self, nr: usize, dr: f64) -> Vec<f64> {
        let ds = 1.0 / (self.u.len() - 1) as f64;
        (0..nr)
            .map(|j| {
                let r = j as f64 * dr;
                if r >= self.h {
                    0.0
                } else {
                    interp_uniform(&self.u, ds, r / self.h)
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Record {
    pub t: f64,
    pub h: f64,
    /// Increment added to the exact front on the step ending here.
    pub dh: f64,
    pub dhdt: f64,
    pub u_max: f64,
    pub v_max: f64,
    pub u_min: f64,
    pub v_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub h: f64,
    /// On the `s` grid.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    EarlyStop { reason: String },
    StabilityFailure { detail: String },
    DomainExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub snapshots: Vec<Snapshot>,
    pub config: SolverConfig,
    pub period: f64,
    pub coupled: bool,
    pub termination: Termination,
}

impl Trajectory {
    fn new(config: &SolverConfig, period: f64, coupled: bool) -> Self {
        Self {
            records: Vec::new(),
            snapshots: Vec::new(),
            config: config.clone(),
            period,
            coupled,
            termination: Termination::Completed,
        }
    }

    fn push(&mut self, state: &SimulationState) {
        self.records.push(Record {
            t: state.t,
            h: state.h,
            dh: state.last_dh,
            dhdt: state.dhdt,
            u_max: max_value(&state.u),
            v_max: if state.v.is_empty() { 0.0 } else { max_value(&state.v) },
            u_min: min_value(&state.u),
            v_min: if state.v.is_empty() { 0.0 } else { min_value(&state.v) },
        });
    }

    fn snapshot(&mut self, state: &SimulationState) {
        self.snapshots.push(Snapshot {
            t: state.t,
            h: state.h,
            u: state.u.clone(),
            v: state.v.clone(),
        });
    }

    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectory has the initial record")
    }

    pub fn final_h(&self) -> f64 {
        self.last().h
    }

    /// Records at whole periods `t = kT`.
    pub fn period_records(&self) -> impl Iterator<Item = &Record> + '_ {
        let every = self.config.steps_per_period;
        self.records.iter().step_by(every)
    }
}

/// `h' = −μ u_r(h)` from the second-order one-sided stencil.
pub fn front_speed(u: &[f64], h: f64, ds: f64, mu: f64) -> f64 {
    -mu * one_sided_derivative_end(u, ds) / h
}

/// Reusable buffers and the fixed-grid factorisation for `v`.
struct Workspace {
    lap_s: Tridiagonal,
    v_op: Option<Tridiagonal>,
    rhs: Vec<f64>,
    source: Vec<f64>,
    v_source: Vec<f64>,
    v_rhs: Vec<f64>,
    v_at_u: Vec<f64>,
    m: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl Workspace {
    fn new(params: &ModelParams, config: &SolverConfig, coupled: bool) -> Self {
        let lap_s = Tridiagonal::radial_laplacian(config.ns, config.ds(), params.dim, OuterBoundary::Dirichlet);
        let v_op = coupled
            .then(|| Tridiagonal::radial_laplacian(config.nr, config.dr(), params.dim, OuterBoundary::ZeroFlux));
        Self {
            lap_s,
            v_op,
            rhs: vec![0.0; config.ns],
            source: vec![0.0; config.ns],
            v_source: vec![0.0; config.nr],
            v_rhs: vec![0.0; config.nr],
            v_at_u: vec![0.0; config.ns],
            m: vec![0.0; config.ns],
            b: vec![0.0; config.ns],
            c: vec![0.0; config.ns],
        }
    }
}

fn sample(field: &CoefficientField, t: f64, h: f64, ds: f64, out: &mut [f64]) {
    if let Some(f) = field.as_temporal() {
        out.fill(f.eval(t));
    } else {
        for (i, x) in out.iter_mut().enumerate() {
            *x = field.eval(t, i as f64 * ds * h);
        }
    }
}

/// One step of the `u` equation. `competition` carries `c₁·v` at the `u`
/// nodes, or `None` for the single-species problem. Advection and reaction
/// are frozen at the old time level and enter as a source.
#[allow(clippy::too_many_arguments)]
fn advance_u(
    u: &mut [f64],
    h_old: f64,
    hdot: f64,
    dt: f64,
    d1: f64,
    lap: &Tridiagonal,
    m: &[f64],
    b: &[f64],
    competition: Option<&[f64]>,
    source: &mut [f64],
    rhs: &mut [f64],
) {
    let n = u.len();
    let ds = 1.0 / (n - 1) as f64;
    let drift = hdot / h_old;
    for i in 0..n - 1 {
        let adv = if i == 0 {
            0.0
        } else {
            drift * (i as f64 * ds) * (u[i + 1] - u[i - 1]) / (2.0 * ds)
        };
        let mut growth = m[i] - b[i] * u[i];
        if let Some(cv) = competition {
            growth -= cv[i];
        }
        source[i] = adv + u[i] * growth;
    }
    source[n - 1] = 0.0;
    let diffusivity = |tau: f64| {
        let h = h_old + tau * hdot;
        d1 / (h * h)
    };
    tr_bdf2_step(u, lap, dt, diffusivity, source, rhs);
    u[n - 1] = 0.0;
}

const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;

/// One TR-BDF2 step of `w_t = D(τ)·L w + f` with `f` frozen; rows of `L`
/// that vanish keep `w` fixed there apart from the source.
fn tr_bdf2_step(
    w: &mut [f64],
    lap: &Tridiagonal,
    dt: f64,
    diffusivity: impl Fn(f64) -> f64,
    source: &[f64],
    rhs: &mut [f64],
) {
    let half = 0.5 * GAMMA * dt;
    lap.apply_shifted(half * diffusivity(0.0), w, rhs);
    for (r, f) in rhs.iter_mut().zip(source) {
        *r += GAMMA * dt * f;
    }
    ThomasFactor::new(&lap.implicit_matrix(half * diffusivity(GAMMA * dt))).solve(rhs);
    let c1 = 1.0 / (GAMMA * (2.0 - GAMMA));
    let c0 = (1.0 - GAMMA) * (1.0 - GAMMA) / (GAMMA * (2.0 - GAMMA));
    let weight = (1.0 - GAMMA) / (2.0 - GAMMA) * dt;
    for ((r, x), f) in rhs.iter_mut().zip(w.iter()).zip(source) {
        *r = c1 * *r - c0 * x + weight * f;
    }
    ThomasFactor::new(&lap.implicit_matrix(weight * diffusivity(dt))).solve(rhs);
    w.copy_from_slice(rhs);
}

/// Clamp roundoff negativity; report anything larger.
fn clamp_negative(x: &mut [f64], what: &str) -> Result<(), String> {
    for (i, v) in x.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -NEGATIVITY_TOL {
                return Err(format!("{what}[{i}] = {v:e} below the negativity tolerance"));
            }
            *v = 0.0;
        }
    }
    Ok(())
}

enum StepFailure {
    Stability(String),
    Domain,
}

/// Most substeps a single step may be split into to respect the CFL bound.
pub const MAX_SUBSTEPS: usize = 64;

fn step_inner(
    state: &mut SimulationState,
    params: &ModelParams,
    config: &SolverConfig,
    ws: &mut Workspace,
    c1_bound: f64,
) -> Result<(), StepFailure> {
    let dt = config.dt(params.period);
    let cfl = state.dhdt / state.h * dt / config.ds();
    // Margin so that a speed-up within the step stays under the bound.
    let substeps = (1.25 * cfl).ceil().max(1.0);
    if substeps > MAX_SUBSTEPS as f64 || !substeps.is_finite() {
        return Err(StepFailure::Stability(format!(
            "advection CFL number {cfl} needs more than {MAX_SUBSTEPS} substeps"
        )));
    }
    let substeps = substeps as usize;
    let sub_dt = dt / substeps as f64;
    state.last_dh = 0.0;
    for k in 0..substeps {
        let t = state.t + k as f64 * sub_dt;
        substep(state, params, config, ws, c1_bound, t, sub_dt)?;
    }
    state.step_index += 1;
    state.t = state.step_index as f64 * dt;
    if state.h >= 0.9 * config.r_out {
        return Err(StepFailure::Domain);
    }
    Ok(())
}

fn substep(
    state: &mut SimulationState,
    params: &ModelParams,
    config: &SolverConfig,
    ws: &mut Workspace,
    c1_bound: f64,
    t: f64,
    dt: f64,
) -> Result<(), StepFailure> {
    let ds = config.ds();
    let h_old = state.h;
    let hdot = state.dhdt;
    if !(hdot > 0.0) {
        return Err(StepFailure::Stability(format!("front speed {hdot:e} is not positive")));
    }
    let cfl = hdot / h_old * dt / ds;
    if cfl > 1.0 {
        return Err(StepFailure::Stability(format!("advection CFL number {cfl} exceeds 1")));
    }
    // Late increments of a stalling front are far below the resolution of
    // h, so the front is summed exactly.
    let dh = dt * hdot;
    let mut h_exact = state.h_exact.clone();
    grow_expansion(&mut h_exact, dh);
    let h_new = expansion_value(&h_exact);
    let coupled = ws.v_op.is_some();

    sample(&params.m1, t, h_old, ds, &mut ws.m);
    sample(&params.b1, t, h_old, ds, &mut ws.b);
    let competition = if coupled {
        sample(&params.c1, t, h_old, ds, &mut ws.c);
        let dr = config.dr();
        for (i, cv) in ws.v_at_u.iter_mut().enumerate() {
            *cv = ws.c[i] * interp_uniform(&state.v, dr, i as f64 * ds * h_old);
        }
        Some(ws.v_at_u.as_slice())
    } else {
        None
    };

    // v uses the old u, so take it before u moves.
    let u_on_r = coupled.then(|| state.u_on_r_grid(config.nr, config.dr()));

    let mut u = std::mem::take(&mut state.u);
    advance_u(
        &mut u,
        h_old,
        hdot,
        dt,
        params.d1,
        &ws.lap_s,
        &ws.m,
        &ws.b,
        competition,
        &mut ws.source,
        &mut ws.rhs,
    );
    state.u = u;
    clamp_negative(&mut state.u, "u").map_err(StepFailure::Stability)?;
    let u_sup = max_value(&state.u);
    if !(u_sup <= 2.0 * c1_bound) {
        return Err(StepFailure::Stability(format!("sup u = {u_sup} exceeds 2·C1 = {}", 2.0 * c1_bound)));
    }

    if let (Some(op), Some(u_r)) = (&ws.v_op, u_on_r) {
        let dr = config.dr();
        for (j, f) in ws.v_source.iter_mut().enumerate() {
            let r = j as f64 * dr;
            let v = state.v[j];
            *f = v * (params.m2.eval(t, r) - params.c2.eval(t, r) * u_r[j] - params.b2.eval(t, r) * v);
        }
        tr_bdf2_step(&mut state.v, op, dt, |_| params.d2, &ws.v_source, &mut ws.v_rhs);
        clamp_negative(&mut state.v, "v").map_err(StepFailure::Stability)?;
    }

    state.h = h_new;
    state.h_exact = h_exact;
    state.last_dh += dh;
    state.dhdt = front_speed(&state.u, state.h, ds, params.mu);
    Ok(())
}

/// Advance one step in place.
pub fn step(state: &mut SimulationState, params: &ModelParams, config: &SolverConfig) -> Result<(), FbError> {
    let coupled = !state.v.is_empty();
    let mut ws = Workspace::new(params, config, coupled);
    step_inner(state, params, config, &mut ws, params.bound_c1()).map_err(|f| match f {
        StepFailure::Stability(detail) => FbError::StabilityFailure {
            t: state.t,
            detail,
            partial: Box::new(Trajectory::new(config, params.period, coupled)),
        },
        StepFailure::Domain => FbError::DomainExhausted {
            t: state.t,
            h: state.h,
            partial: Box::new(Trajectory::new(config, params.period, coupled)),
        },
    })
}

/// Called at every whole period; returning a reason stops the run.
pub type PeriodHook<'a> = dyn FnMut(&SimulationState, &Trajectory) -> Option<String> + 'a;

fn run(
    params: &ModelParams,
    config: &SolverConfig,
    coupled: bool,
    hook: Option<&mut PeriodHook<'_>>,
) -> Result<Trajectory, FbError> {
    params.validate()?;
    config.validate(params)?;
    let mut state = SimulationState::initial(params, config);
    if !coupled {
        state.v.clear();
    }
    let mut ws = Workspace::new(params, config, coupled);
    let c1_bound = params.bound_c1();
    let mut traj = Trajectory::new(config, params.period, coupled);
    traj.push(&state);
    traj.snapshot(&state);
    let mut hook = hook;
    let total = config.total_steps();
    let per = config.steps_per_period;
    while state.step_index < total {
        if let Err(failure) = step_inner(&mut state, params, config, &mut ws, c1_bound) {
            return Err(match failure {
                StepFailure::Stability(detail) => {
                    traj.termination = Termination::StabilityFailure { detail: detail.clone() };
                    FbError::StabilityFailure {
                        t: state.t,
                        detail,
                        partial: Box::new(traj),
                    }
                }
                StepFailure::Domain => {
                    traj.push(&state);
                    traj.termination = Termination::DomainExhausted;
                    FbError::DomainExhausted {
                        t: state.t,
                        h: state.h,
                        partial: Box::new(traj),
                    }
                }
            });
        }
        traj.push(&state);
        if traj.last().u_max < EXTINCT {
            traj.snapshot(&state);
            traj.termination = Termination::EarlyStop {
                reason: format!("sup u fell below {EXTINCT:e}"),
            };
            return Ok(traj);
        }
        if state.step_index % per == 0 {
            let k = state.step_index / per;
            if k % config.snapshot_every == 0 {
                traj.snapshot(&state);
            }
            if let Some(h) = hook.as_deref_mut() {
                if let Some(reason) = h(&state, &traj) {
                    if k % config.snapshot_every != 0 {
                        traj.snapshot(&state);
                    }
                    traj.termination = Termination::EarlyStop { reason };
                    return Ok(traj);
                }
            }
        }
    }
    Ok(traj)
}

/// Run the coupled system until the configured horizon.
pub fn simulate(params: &ModelParams, config: &SolverConfig) -> Result<Trajectory, FbError> {
    run(params, config, true, None)
}

/// As [`simulate`], with a per-period hook that may stop the run early.
pub fn simulate_with_hook(
    params: &ModelParams,
    config: &SolverConfig,
    hook: &mut PeriodHook<'_>,
) -> Result<Trajectory, FbError> {
    run(params, config, true, Some(hook))
}

/// The single-species free-boundary problem: `v` is dropped entirely.
pub fn scalar_free_boundary(params: &ModelParams, config: &SolverConfig) -> Result<Trajectory, FbError> {
    run(params, config, false, None)
}

pub fn scalar_free_boundary_with_hook(
    params: &ModelParams,
    config: &SolverConfig,
    hook: &mut PeriodHook<'_>,
) -> Result<Trajectory, FbError> {
    run(params, config, false, Some(hook))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AprioriBounds {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub m: f64,
}

impl AprioriBounds {
    pub fn of(params: &ModelParams) -> Self {
        Self {
            c1: params.bound_c1(),
            c2: params.bound_c2(),
            c3: params.bound_c3(),
            m: params.barrier_m(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundViolation {
    pub index: usize,
    pub t: f64,
    pub quantity: &'static str,
    pub value: f64,
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub bounds: AprioriBounds,
    pub pass: bool,
    pub first_violation: Option<BoundViolation>,
    /// Records whose exact front did not move.
    pub stalled_records: usize,
    pub max_u: f64,
    pub max_v: f64,
    pub max_dhdt: f64,
    pub min_dhdt: f64,
}

/// Check `0 ≤ u ≤ C1`, `0 ≤ v ≤ C2`, `0 < h' ≤ C3` (with slack) and the
/// monotonicity of `h` at every record.
pub fn verify_bounds(traj: &Trajectory, params: &ModelParams) -> BoundsReport {
    let bounds = AprioriBounds::of(params);
    let slack = 1.0 + BOUND_SLACK;
    let mut first = None;
    let mut stalled = 0;
    let mut flag = |index: usize, t: f64, quantity: &'static str, value: f64, limit: f64| {
        if first.is_none() {
            first = Some(BoundViolation {
                index,
                t,
                quantity,
                value,
                limit,
            });
        }
    };
    for (i, r) in traj.records.iter().enumerate() {
        if r.u_min < 0.0 {
            flag(i, r.t, "u_min", r.u_min, 0.0);
        }
        if r.u_max > bounds.c1 * slack {
            flag(i, r.t, "u_max", r.u_max, bounds.c1 * slack);
        }
        if traj.coupled {
            if r.v_min < 0.0 {
                flag(i, r.t, "v_min", r.v_min, 0.0);
            }
            if r.v_max > bounds.c2 * slack {
                flag(i, r.t, "v_max", r.v_max, bounds.c2 * slack);
            }
        }
        if !(r.dhdt > 0.0) {
            flag(i, r.t, "dhdt_min", r.dhdt, 0.0);
        }
        if r.dhdt > bounds.c3 * slack {
            flag(i, r.t, "dhdt_max", r.dhdt, bounds.c3 * slack);
        }
        if i > 0 {
            // The exact front moved by `dh`; its rounding may only lag by an ulp.
            let prev = &traj.records[i - 1];
            let moved = r.h - prev.h;
            let ulp = 2.0 * f64::EPSILON * r.h;
            if moved < 0.0 {
                flag(i, r.t, "h_decrease", moved, 0.0);
            } else if (moved - r.dh).abs() > ulp {
                flag(i, r.t, "h_rounding", moved, r.dh);
            } else if !(r.dh > 0.0) {
                stalled += 1;
            }
        }
    }
    let fold = |f: fn(&Record) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
        traj.records.iter().map(f).fold(init, pick)
    };
    BoundsReport {
        bounds,
        pass: first.is_none(),
        first_violation: first,
        stalled_records: stalled,
        max_u: fold(|r| r.u_max, f64::NEG_INFINITY, f64::max),
        max_v: fold(|r| r.v_max, f64::NEG_INFINITY, f64::max),
        max_dhdt: fold(|r| r.dhdt, f64::NEG_INFINITY, f64::max),
        min_dhdt: fold(|r| r.dhdt, f64::INFINITY, f64::min),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareMode {
    FrontOnly,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderingWitness {
    pub t: f64,
    pub quantity: &'static str,
    /// `low − high` (or `high − low` for `v`), beyond the tolerance.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderingReport {
    pub pass: bool,
    pub shared_times: usize,
    /// `max (h_low − h_high)` over shared times.
    pub max_front_excess: f64,
    pub tolerance: f64,
    pub witness: Option<OrderingWitness>,
}

/// Comparison-principle ordering of two runs: `h_low ≤ h_high + 2h·Δs`,
/// and in `Full` mode `u_low ≤ u_high` and `v_high ≤ v_low` at snapshots.
pub fn compare_runs(low: &Trajectory, high: &Trajectory, mode: CompareMode) -> Result<OrderingReport, FbError> {
    if low.config.steps_per_period != high.config.steps_per_period
        || low.config.ns != high.config.ns
        || (low.period - high.period).abs() > 1e-12
    {
        return Err(FbError::InvalidConfig("runs must share the grid and period".into()));
    }
    let ds = low.config.ds();
    let shared = low.records.len().min(high.records.len());
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut tolerance: f64 = 0.0;
    for (a, b) in low.records.iter().zip(&high.records).take(shared) {
        let tol = 2.0 * b.h * ds;
        tolerance = tolerance.max(tol);
        let excess = a.h - b.h;
        worst = worst.max(excess);
        if excess > tol && witness.is_none() {
            witness = Some(OrderingWitness {
                t: a.t,
                quantity: "h",
                excess,
            });
        }
    }
    if mode == CompareMode::Full && witness.is_none() {
        let n = low.snapshots.len().min(high.snapshots.len());
        'snap: for (a, b) in low.snapshots.iter().zip(&high.snapshots).take(n) {
            let tol = 2.0 * b.h * ds;
            // Compare u on the physical radius grid of the lower run.
            let sa = SimulationState {
                t: a.t,
                h: a.h,
                h_exact: vec![a.h],
                dhdt: 0.0,
                last_dh: 0.0,
                u: a.u.clone(),
                v: Vec::new(),
                step_index: 0,
            };
            let sb = SimulationState {
                h: b.h,
                u: b.u.clone(),
                ..sa.clone()
            };
            let nr = low.config.nr;
            let dr = low.config.dr();
            let (ua, ub) = (sa.u_on_r_grid(nr, dr), sb.u_on_r_grid(nr, dr));
            for (x, y) in ua.iter().zip(&ub) {
                if x - y > tol {
                    witness = Some(OrderingWitness {
                        t: a.t,
                        quantity: "u",
                        excess: x - y,
                    });
                    break 'snap;
                }
            }
            if low.coupled && high.coupled && low.config.nr == high.config.nr {
                for (x, y) in a.v.iter().zip(&b.v) {
                    if y - x > tol {
                        witness = Some(OrderingWitness {
                            t: a.t,
                            quantity: "v",
                            excess: y - x,
                        });
                        break 'snap;
                    }
                }
            }
        }
    }
    Ok(OrderingReport {
        pass: witness.is_none(),
        shared_times: shared,
        max_front_excess: worst,
        tolerance,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{bench_spread, bench_vanish};

    fn small(periods: f64) -> SolverConfig {
        SolverConfig {
            ns: 128,
            nr: 401,
            steps_per_period: 128,
            r_out: 40.0,
            periods,
            snapshot_every: 1,
        }
    }

    #[test]
    fn decoupled_u_step_matches_scalar_bitwise() {
        let mut p = bench_spread();
        p.c1 = CoefficientField::constant(1.0, 0.0);
        let a = simulate(&p, &small(2.0)).unwrap();
        let b = scalar_free_boundary(&p, &small(2.0)).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.h.to_bits(), y.h.to_bits());
            assert_eq!(x.u_max.to_bits(), y.u_max.to_bits());
        }
        assert_eq!(a.snapshots.last().unwrap().u, b.snapshots.last().unwrap().u);
    }

    #[test]
    fn front_strictly_advances_and_bounds_hold() {
        let p = bench_spread();
        let traj = simulate(&p, &small(3.0)).unwrap();
        let rep = verify_bounds(&traj, &p);
        assert!(rep.pass, "{:?}", rep.first_violation);
        assert_eq!(rep.stalled_records, 0);
        assert!(traj.records.windows(2).all(|w| w[1].h > w[0].h && w[1].t > w[0].t));
    }

    #[test]
    fn stalling_front_still_advances_exactly() {
        let p = bench_vanish();
        let traj = simulate(&p, &small(6.0)).unwrap();
        let rep = verify_bounds(&traj, &p);
        assert!(rep.pass, "{:?}", rep.first_violation);
        assert_eq!(rep.stalled_records, 0);
        assert!(traj.records.windows(2).any(|w| w[1].h == w[0].h));
    }

    #[test]
    fn single_step_api() {
        let p = bench_spread();
        let cfg = small(1.0);
        let mut s = SimulationState::initial(&p, &cfg);
        let h0 = s.h;
        step(&mut s, &p, &cfg).unwrap();
        assert!(s.h > h0 && s.step_index == 1 && s.u[cfg.ns - 1] == 0.0);
    }

    #[test]
    fn oversized_dt_is_rejected() {
        let p = bench_spread();
        let cfg = SolverConfig {
            steps_per_period: 8,
            ..small(1.0)
        };
        assert!(matches!(simulate(&p, &cfg), Err(FbError::InvalidConfig(_))));
    }

    #[test]
    fn explosive_front_is_a_stability_failure() {
        let p = bench_spread().with_mu(2000.0);
        let err = simulate(&p, &small(1.0)).unwrap_err();
        assert!(matches!(err, FbError::StabilityFailure { .. }), "{err}");
    }

    #[test]
    fn domain_exhaustion_is_reported() {
        let p = bench_spread();
        let cfg = SolverConfig {
            r_out: 9.0,
            periods: 20.0,
            ..small(1.0)
        };
        match simulate(&p, &cfg) {
            Err(FbError::DomainExhausted { h, partial, .. }) => {
                assert!(h >= 8.1);
                assert_eq!(partial.termination, Termination::DomainExhausted);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identical_runs_compare_equal() {
        let p = bench_vanish();
        let a = simulate(&p, &small(2.0)).unwrap();
        let rep = compare_runs(&a, &a, CompareMode::Full).unwrap();
        assert!(rep.pass && rep.max_front_excess.abs() < 1e-12);
    }

    #[test]
    fn larger_initial_data_leads() {
        let p = bench_spread();
        let small_run = simulate(&p, &small(3.0)).unwrap();
        let big_run = simulate(&p.with_u0_scale(1.5).unwrap(), &small(3.0)).unwrap();
        let rep = compare_runs(&small_run, &big_run, CompareMode::Full).unwrap();
        assert!(rep.pass, "{:?}", rep.witness);
    }
}

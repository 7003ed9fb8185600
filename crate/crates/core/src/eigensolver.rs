//! Principal eigenvalue of the periodic-parabolic Dirichlet problem
//! `φ_t − dΔφ = m(t,r)φ` on the ball of radius `R`, and the thresholds in
//! `R` and `d` derived from it.

use serde::Serialize;
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::model::CoefficientField;
use crate::numerics::{sup_norm, OuterBoundary, ThomasFactor, Tridiagonal};
use crate::stepper::{LinearStepper, Scheme};

pub const DEFAULT_GRID: usize = 256;
pub const DEFAULT_STEPS: usize = 256;
pub const DEFAULT_MAX_PERIODS: usize = 500;
const MAX_STEPS: usize = 1 << 16;
pub const MULTIPLIER_TOL: f64 = 1e-8;
pub const THRESHOLD_REL_WIDTH: f64 = 1e-4;
/// Smallest diffusivity visited by the log-grid scans.
pub const D_SCAN_MIN: f64 = 1e-4;
pub const D_SCAN_PER_DECADE: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("invalid eigenproblem: {0}")]
    Invalid(String),
    #[error("power iteration did not converge in {periods} periods (last relative change {rel_change:e})")]
    NonConvergence { periods: usize, rel_change: f64 },
    #[error("λ₁ is already positive at the smallest tested diffusivity d = {d_min}")]
    NoSignChange { d_min: f64 },
    #[error("λ₁ stays nonpositive up to the search limit d = {search_max}")]
    NotReached { search_max: f64 },
}

#[derive(Clone, Debug)]
pub struct EigenProblem {
    pub d: f64,
    pub m: CoefficientField,
    pub radius: f64,
    pub dim: u32,
    /// Node count on `[0, R]`.
    pub grid: usize,
    pub steps_per_period: usize,
    pub max_periods: usize,
}

impl EigenProblem {
    pub fn new(d: f64, m: CoefficientField, radius: f64, dim: u32) -> Self {
        Self {
            d,
            m,
            radius,
            dim,
            grid: DEFAULT_GRID,
            steps_per_period: DEFAULT_STEPS,
            max_periods: DEFAULT_MAX_PERIODS,
        }
    }

    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_radius(&self, radius: f64) -> Self {
        Self { radius, ..self.clone() }
    }

    pub fn with_d(&self, d: f64) -> Self {
        Self { d, ..self.clone() }
    }

    pub fn period(&self) -> f64 {
        self.m.period()
    }

    pub fn validate(&self) -> Result<(), EigenError> {
        let bad = |what: &str| Err(EigenError::Invalid(what.to_string()));
        if !(self.d > 0.0 && self.d.is_finite()) {
            return bad("d must be positive");
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("R must be positive");
        }
        if self.grid < 32 {
            return bad("grid must have at least 32 nodes");
        }
        if self.dim == 0 {
            return bad("dimension must be at least 1");
        }
        if self.steps_per_period < 8 || self.max_periods == 0 {
            return bad("need at least 8 steps per period and one period");
        }
        Ok(())
    }

    /// `steps_per_period`, raised so that `d·ν·dt ≤ 0.1` for a crude
    /// overestimate `ν ≈ ((N+2)/R)²` of the Laplacian's principal eigenvalue.
    pub fn effective_steps(&self) -> usize {
        let nu = ((self.dim as f64 + 2.0) / self.radius).powi(2);
        let needed = (self.d * nu * self.period() / 0.1).ceil();
        if needed > self.steps_per_period as f64 {
            (needed as usize).min(MAX_STEPS)
        } else {
            self.steps_per_period
        }
    }

    fn radii(&self) -> Vec<f64> {
        let dr = self.radius / (self.grid - 1) as f64;
        (0..self.grid).map(|j| j as f64 * dr).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenResult {
    pub lambda1: f64,
    /// May underflow to zero for very large `λ₁`; `log_multiplier` is exact.
    pub multiplier: f64,
    pub log_multiplier: f64,
    pub phi0: Vec<f64>,
    pub iterations: usize,
    pub rel_change: f64,
}

/// Starting vector: principal eigenvector of the time-averaged operator
/// `dΔ + m̄(r)`, from shifted inverse iteration.
fn averaged_start(prob: &EigenProblem, mean_m: &[f64], lap: &Tridiagonal) -> Vec<f64> {
    let n = prob.grid - 1;
    let top = mean_m[..n].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = top + 1e-6 * (1.0 + top.abs());
    let mut mat = Tridiagonal::zeros(n);
    for i in 0..n {
        mat.lower[i] = -prob.d * lap.lower[i];
        mat.diag[i] = shift - mean_m[i] - prob.d * lap.diag[i];
        mat.upper[i] = if i + 1 < n { -prob.d * lap.upper[i] } else { 0.0 };
    }
    let factor = ThomasFactor::new(&mat);
    let mut x = vec![1.0; n];
    for _ in 0..60 {
        factor.solve(&mut x);
        let s = sup_norm(&x);
        x.iter_mut().for_each(|v| *v /= s);
    }
    x.push(0.0);
    x
}

pub fn principal_eigenvalue(prob: &EigenProblem) -> Result<EigenResult, EigenError> {
    prob.validate()?;
    let n = prob.grid;
    let period = prob.period();
    let steps = prob.effective_steps();
    let dt = period / steps as f64;
    let dr = prob.radius / (n - 1) as f64;
    let radii = prob.radii();

    // m on the (step × node) lattice; the reaction is integrated exactly
    // over half steps, so a space-constant m contributes its trapezoid mean.
    let m_grid: Vec<Vec<f64>> = (0..steps)
        .map(|k| {
            let t = k as f64 * dt;
            radii.iter().map(|&r| prob.m.eval(t, r)).collect()
        })
        .collect();
    let half_factors: Vec<Vec<f64>> = m_grid
        .iter()
        .map(|row| row.iter().map(|m| (0.5 * dt * m).exp()).collect())
        .collect();
    let mean_m: Vec<f64> = (0..n)
        .map(|j| m_grid.iter().map(|row| row[j]).sum::<f64>() / steps as f64)
        .collect();

    let lap = Tridiagonal::radial_laplacian(n, dr, prob.dim, OuterBoundary::Dirichlet);
    let mut phi = averaged_start(prob, &mean_m, &lap);
    let mut op = lap;
    for i in 0..n {
        op.lower[i] *= prob.d;
        op.diag[i] *= prob.d;
        op.upper[i] *= prob.d;
    }
    // CN leaves stiff modes nearly undamped over a period, which would let
    // them dominate the power iteration.
    let stepper = LinearStepper::new(op, dt, Scheme::TrBdf2);
    let pinned = [(n - 1, 0.0)];
    let mut scratch = Vec::with_capacity(n);

    let mut previous: Option<f64> = None;
    let mut rel_change = f64::INFINITY;
    for period_index in 1..=prob.max_periods {
        let mut log_rho = 0.0;
        for k in 0..steps {
            let next = (k + 1) % steps;
            for (p, f) in phi.iter_mut().zip(&half_factors[k]) {
                *p *= f;
            }
            stepper.step(&mut phi, &pinned, &mut scratch);
            for (p, f) in phi.iter_mut().zip(&half_factors[next]) {
                *p *= f;
            }
            let s = sup_norm(&phi);
            if !(s > 0.0 && s.is_finite()) {
                return Err(EigenError::NonConvergence {
                    periods: period_index,
                    rel_change,
                });
            }
            phi.iter_mut().for_each(|p| *p /= s);
            log_rho += s.ln();
        }
        if let Some(prev) = previous {
            rel_change = (log_rho - prev).exp_m1().abs();
            if rel_change < MULTIPLIER_TOL {
                phi[n - 1] = 0.0;
                return Ok(EigenResult {
                    lambda1: -log_rho / period,
                    multiplier: log_rho.exp(),
                    log_multiplier: log_rho,
                    phi0: phi,
                    iterations: period_index,
                    rel_change,
                });
            }
        }
        previous = Some(log_rho);
    }
    Err(EigenError::NonConvergence {
        periods: prob.max_periods,
        rel_change,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusThreshold {
    Finite {
        h_star: f64,
        /// `λ₁ > 0` at `bracket.0`, `λ₁ ≤ 0` at `bracket.1`.
        bracket: (f64, f64),
        evaluations: usize,
    },
    Unbounded {
        lambda_at_max: f64,
    },
}

impl RadiusThreshold {
    pub fn value(&self) -> Option<f64> {
        match self {
            RadiusThreshold::Finite { h_star, .. } => Some(*h_star),
            RadiusThreshold::Unbounded { .. } => None,
        }
    }
}

/// `h*` with `λ₁(d, m, h*) = 0`, using strict decrease of `λ₁` in `R`.
pub fn threshold_radius(base: &EigenProblem, search_max: f64) -> Result<RadiusThreshold, EigenError> {
    let lambda = |r: f64| principal_eigenvalue(&base.with_radius(r)).map(|e| e.lambda1);
    let mut evaluations = 1;
    let at_max = lambda(search_max)?;
    if at_max > 0.0 {
        return Ok(RadiusThreshold::Unbounded { lambda_at_max: at_max });
    }
    let mut hi = search_max;
    let mut lo = 0.5 * search_max;
    loop {
        evaluations += 1;
        if lambda(lo)? > 0.0 {
            break;
        }
        hi = lo;
        lo *= 0.5;
        if lo < 1e-12 * search_max {
            return Err(EigenError::Invalid("λ₁ nonpositive at vanishing radius".into()));
        }
    }
    while hi - lo > THRESHOLD_REL_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if lambda(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RadiusThreshold::Finite {
        h_star: 0.5 * (lo + hi),
        bracket: (lo, hi),
        evaluations,
    })
}

/// Log-spaced diffusivities from [`D_SCAN_MIN`] to `search_max`.
pub fn diffusion_grid(search_max: f64) -> Vec<f64> {
    let decades = (search_max / D_SCAN_MIN).log10();
    let n = (decades * D_SCAN_PER_DECADE as f64).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| D_SCAN_MIN * (search_max / D_SCAN_MIN).powf(i as f64 / n as f64))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffusionThreshold {
    pub d_star: f64,
    /// `λ₁` at `d_star`; close to zero when a sign change was bracketed.
    pub lambda_at: f64,
    pub bracket: (f64, f64),
    pub samples: Vec<(f64, f64)>,
}

fn scan(base: &EigenProblem, ds: &[f64], exec: Execution) -> Result<Vec<(f64, f64)>, EigenError> {
    exec::map(exec, ds, |&d| principal_eigenvalue(&base.with_d(d)).map(|e| (d, e.lambda1)))
        .into_iter()
        .collect()
}

/// `d^*`: beyond it `λ₁ > 0` at every sampled diffusivity up to `search_max`.
pub fn threshold_diffusion_fast(
    base: &EigenProblem,
    search_max: f64,
    exec: Execution,
) -> Result<DiffusionThreshold, EigenError> {
    let ds = diffusion_grid(search_max);
    let samples = scan(base, &ds, exec)?;
    if samples[0].1 > 0.0 {
        return Err(EigenError::NoSignChange { d_min: ds[0] });
    }
    let last_nonpos = samples.iter().rposition(|s| s.1 <= 0.0).expect("first sample is nonpositive");
    if last_nonpos + 1 == samples.len() {
        return Err(EigenError::NotReached { search_max });
    }
    // λ₁ is continuous in d, so the last crossing can be bisected.
    let (mut lo, mut hi) = (samples[last_nonpos].0, samples[last_nonpos + 1].0);
    let mut lambda_hi = samples[last_nonpos + 1].1;
    while hi - lo > THRESHOLD_REL_WIDTH * hi {
        let mid = (lo * hi).sqrt();
        let l = principal_eigenvalue(&base.with_d(mid))?.lambda1;
        if l > 0.0 {
            hi = mid;
            lambda_hi = l;
        } else {
            lo = mid;
        }
    }
    Ok(DiffusionThreshold {
        d_star: hi,
        lambda_at: lambda_hi,
        bracket: (lo, hi),
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlowThreshold {
    Certified {
        d_star: f64,
        /// Smallest tested diffusivity with `λ₁ > 0`, if any.
        first_positive: Option<f64>,
        tested: usize,
    },
    /// The time-averaged growth is nowhere positive on the ball.
    NotApplicable { max_mean: f64 },
    /// Positive mean growth but `λ₁ > 0` already at the smallest tested `d`.
    Uncertified { lambda_at_min: f64 },
}

const SLOW_REFINE_LEVELS: usize = 3;
const SLOW_REFINE_POINTS: usize = 16;

/// `d_*`: every sampled `d ≤ d_*` has `λ₁ ≤ 0`. Certified by exhaustive
/// sampling only, since `λ₁` need not be monotone in `d`.
pub fn threshold_diffusion_slow(
    base: &EigenProblem,
    search_max: f64,
    exec: Execution,
) -> Result<SlowThreshold, EigenError> {
    let n = base.grid;
    let steps = base.steps_per_period;
    let max_mean = base
        .radii()
        .iter()
        .take(n - 1)
        .map(|&r| (0..steps).map(|k| base.m.eval(k as f64 * base.period() / steps as f64, r)).sum::<f64>() / steps as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_mean <= 0.0 {
        return Ok(SlowThreshold::NotApplicable { max_mean });
    }
    let ds = diffusion_grid(search_max);
    let samples = scan(base, &ds, exec)?;
    let mut tested = samples.len();
    let Some(first) = samples.iter().position(|s| s.1 > 0.0) else {
        return Ok(SlowThreshold::Certified {
            d_star: search_max,
            first_positive: None,
            tested,
        });
    };
    if first == 0 {
        return Ok(SlowThreshold::Uncertified {
            lambda_at_min: samples[0].1,
        });
    }
    let (mut lo, mut hi) = (samples[first - 1].0, samples[first].0);
    for _ in 0..SLOW_REFINE_LEVELS {
        let sub: Vec<f64> = (1..SLOW_REFINE_POINTS)
            .map(|i| lo * (hi / lo).powf(i as f64 / SLOW_REFINE_POINTS as f64))
            .collect();
        let found = scan(base, &sub, exec)?;
        tested += found.len();
        match found.iter().position(|s| s.1 > 0.0) {
            Some(0) => hi = found[0].0,
            Some(i) => {
                lo = found[i - 1].0;
                hi = found[i].0;
            }
            None => lo = found[found.len() - 1].0,
        }
    }
    Ok(SlowThreshold::Certified {
        d_star: lo,
        first_positive: Some(hi),
        tested,
    })
}

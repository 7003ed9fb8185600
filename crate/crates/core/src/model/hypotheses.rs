use serde::Serialize;

use super::{CoefficientField, FieldRule, ModelError, ModelParams};

/// Sample counts used by the hypothesis checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplingGrid {
    pub n_t: usize,
    pub n_r: usize,
    pub r_max: f64,
}

/// Minimum far-field growth accepted as "positive at infinity".
pub const H2_POSITIVITY_FLOOR: f64 = 1e-6;
/// Relative agreement required across the last three probe radii.
pub const H2_STABILIZATION: f64 = 0.01;
const PERIODICITY_TOL: f64 = 1e-12;

impl SamplingGrid {
    pub fn default_for(params: &ModelParams) -> Self {
        Self {
            n_t: 64,
            n_r: 256,
            r_max: params.sampling_radius(),
        }
    }

    /// The 64×64 grid used for periodicity and envelope checks.
    pub fn h1_for(params: &ModelParams) -> Self {
        Self {
            n_t: 64,
            n_r: 64,
            r_max: params.sampling_radius(),
        }
    }

    pub fn times(&self, period: f64) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_t;
        (0..n).map(move |k| k as f64 * period / n as f64)
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_r;
        let r_max = self.r_max;
        (0..n).map(move |j| j as f64 * r_max / (n - 1) as f64)
    }

    /// Grid points, plus the nodes of any table backing `field`.
    fn points(&self, field: &CoefficientField) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self
            .times(field.period())
            .flat_map(|t| self.radii().map(move |r| (t, r)))
            .collect();
        if let FieldRule::Tabulated(table) = field.rule() {
            for k in 0..table.n_t() {
                for j in 0..table.n_r() {
                    pts.push((table.time(k), table.radius(j)));
                }
            }
        }
        pts
    }

    pub fn min_of(&self, field: &CoefficientField) -> f64 {
        self.points(field)
            .into_iter()
            .map(|(t, r)| field.eval(t, r))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClauseResult {
    pub field: &'static str,
    pub clause: &'static str,
    pub pass: bool,
    /// `(t, r, value)` of the first failing sample.
    pub witness: Option<(f64, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct H1Report {
    pub pass: bool,
    pub clauses: Vec<ClauseResult>,
}

/// Sampled check of periodicity, boundedness and positive envelopes.
pub fn check_h1(params: &ModelParams) -> H1Report {
    let grid = SamplingGrid::h1_for(params);
    let mut clauses = Vec::new();
    for (name, field) in params.fields() {
        let pts = grid.points(field);
        let period = field.period();
        let periodic_witness = pts.iter().find_map(|&(t, r)| {
            let a = field.eval(t, r);
            let b = field.eval(t + period, r);
            ((a - b).abs() > PERIODICITY_TOL * a.abs().max(1.0)).then_some((t, r, b - a))
        });
        clauses.push(ClauseResult {
            field: name,
            clause: "periodic",
            pass: periodic_witness.is_none(),
            witness: periodic_witness,
        });
        let bounded_witness = pts.iter().find_map(|&(t, r)| {
            let v = field.eval(t, r);
            (!v.is_finite()).then_some((t, r, v))
        });
        clauses.push(ClauseResult {
            field: name,
            clause: "bounded",
            pass: bounded_witness.is_none(),
            witness: bounded_witness,
        });
        if name.starts_with('b') || name.starts_with('c') {
            let positive_witness = pts.iter().find_map(|&(t, r)| {
                let v = field.eval(t, r);
                (!(v > 0.0)).then_some((t, r, v))
            });
            clauses.push(ClauseResult {
                field: name,
                clause: "positive",
                pass: positive_witness.is_none(),
                witness: positive_witness,
            });
            let lower = field.lower_envelope();
            let upper = field.upper_envelope();
            let envelope_witness = pts.iter().find_map(|&(t, r)| {
                let v = field.eval(t, r);
                let (lo, hi) = (lower.eval(t), upper.eval(t));
                let slack = 1e-12 * v.abs().max(1.0);
                (!(lo > 0.0 && lo - slack <= v && v <= hi + slack)).then_some((t, r, v))
            });
            clauses.push(ClauseResult {
                field: name,
                clause: "positive_envelope",
                pass: envelope_witness.is_none(),
                witness: envelope_witness,
            });
        }
    }
    H1Report {
        pass: clauses.iter().all(|c| c.pass),
        clauses,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct H2Report {
    /// `min_t field(t, r)` at each probe radius.
    pub liminf_by_probe: Vec<f64>,
    /// `max_t field(t, r)` at each probe radius.
    pub limsup_by_probe: Vec<f64>,
    pub liminf: f64,
    pub limsup: f64,
    pub pass: bool,
}

/// Estimate the far-field `liminf`/`limsup` of `field` from finite probes.
pub fn check_h2(field: &CoefficientField, probe_radii: &[f64]) -> Result<H2Report, ModelError> {
    if probe_radii.len() < 3 {
        return Err(ModelError::InvalidParameter {
            name: "probe_radii",
            reason: "need at least three probe radii".into(),
        });
    }
    if probe_radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ModelError::InvalidParameter {
            name: "probe_radii",
            reason: "probe radii must be strictly increasing".into(),
        });
    }
    let n_t = 64;
    let period = field.period();
    let (lows, highs): (Vec<f64>, Vec<f64>) = probe_radii
        .iter()
        .map(|&r| {
            (0..n_t)
                .map(|k| field.eval(k as f64 * period / n_t as f64, r))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        })
        .unzip();
    let tail = probe_radii.len() - 3;
    for series in [&lows, &highs] {
        let last = &series[tail..];
        for w in last.windows(2) {
            let scale = w[0].abs().max(w[1].abs());
            if (w[1] - w[0]).abs() > H2_STABILIZATION * scale {
                return Err(ModelError::NonStabilized {
                    detail: format!("successive probe estimates {} and {} differ by more than 1%", w[0], w[1]),
                });
            }
        }
    }
    let liminf = lows[tail..].iter().copied().fold(f64::INFINITY, f64::min);
    let limsup = highs[tail..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(H2Report {
        pass: liminf >= H2_POSITIVITY_FLOOR && limsup.is_finite(),
        liminf,
        limsup,
        liminf_by_probe: lows,
        limsup_by_probe: highs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EnvironmentClass {
    Strong,
    Weak,
    Neither,
}

/// Strong: both growth rates change sign in space at every sampled time
/// (`m1` inside the initial habitat). Weak: both uniformly positive.
pub fn classify_environment(params: &ModelParams) -> EnvironmentClass {
    let grid = SamplingGrid::default_for(params);
    let changes_sign = |field: &CoefficientField, r_hi: f64| {
        grid.times(field.period()).all(|t| {
            let n = grid.n_r;
            let (mut neg, mut pos) = (false, false);
            for j in 1..n {
                let r = j as f64 * r_hi / n as f64;
                let v = field.eval(t, r);
                neg |= v < 0.0;
                pos |= v > 0.0;
            }
            neg && pos
        })
    };
    let positive = |field: &CoefficientField| {
        let min = grid.min_of(field);
        let max = grid
            .points(field)
            .into_iter()
            .map(|(t, r)| field.eval(t, r))
            .fold(f64::NEG_INFINITY, f64::max);
        min > 0.0 && max.is_finite()
    };
    if changes_sign(&params.m1, params.h0()) && changes_sign(&params.m2, grid.r_max) {
        EnvironmentClass::Strong
    } else if positive(&params.m1) && positive(&params.m2) {
        EnvironmentClass::Weak
    } else {
        EnvironmentClass::Neither
    }
}

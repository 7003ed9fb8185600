//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use stefan_lab::analysis::{
    default_native_density, find_mu_star, measure_speed, native_gap, semiwave_k0, speed_bounds, verdict_at,
    verdict_grid, verdicts_monotone, Classifier, ClassifyOptions, Dial, SemiWaveOptions, ThresholdOptions,
    ThresholdOutcome, VerdictKind,
};
use stefan_lab::eigensolver::{
    principal_eigenvalue, threshold_diffusion_fast, threshold_radius, EigenProblem, RadiusThreshold,
};
use stefan_lab::entire_solutions::{native_density, EntireOptions};
use stefan_lab::exec::Execution;
use stefan_lab::fbsolver::{
    compare_runs, scalar_free_boundary, simulate, verify_bounds, CompareMode, SolverConfig, Trajectory,
};
use stefan_lab::model::{CoefficientField, ModelParams, PeriodicScalarFunction, SpaceTimeTable};
use stefan_lab::presets::{bench_spread, bench_vanish};

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// Oracles

/// J0 by its power series; accurate to ~1e-15 for |x| < 5.
fn bessel_j0(x: f64) -> f64 {
    let q = -(x * x) / 4.0;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..60 {
        term *= q / (k * k) as f64;
        sum += term;
    }
    sum
}

/// First positive zero of J0 by bisection on [2, 3].
fn bessel_j0_first_zero() -> f64 {
    let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(lo) * bessel_j0(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Constant-coefficient semi-wave by phase-plane shooting.
///
/// `d q'' − k q' + q(a − b q) = 0`, `q(0) = 0`, `q(∞) = a/b`. With `p = q'`
/// the profile is the stable manifold of the saddle `(a/b, 0)`, integrated
/// in `q` down to zero with RK4. `K₀` solves `μ p(0; k) = k`.
fn shooting_k0(mu: f64, a: f64, b: f64, d: f64) -> f64 {
    let slope_at_zero = |k: f64| -> f64 {
        let q_star = a / b;
        let lam = (k - (k * k + 4.0 * a * d).sqrt()) / (2.0 * d);
        let delta = 1e-7 * q_star;
        let mut q = q_star - delta;
        let mut p = -lam * delta;
        let f = |q: f64, p: f64| (k * p - q * (a - b * q)) / (d * p);
        let n = 200_000;
        let h = -q / n as f64;
        for _ in 0..n {
            let k1 = f(q, p);
            let k2 = f(q + 0.5 * h, p + 0.5 * h * k1);
            let k3 = f(q + 0.5 * h, p + 0.5 * h * k2);
            let k4 = f(q + h, p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            q += h;
        }
        p
    };
    // g(k) = μ p(0;k) − k decreases from μ√a·… > 0 at k→0 to negative at 2√(ad).
    let (mut lo, mut hi) = (1e-9, 2.0 * (a * d).sqrt() * (1.0 - 1e-9));
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mu * slope_at_zero(mid) - mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Shared runs

fn spread_config(periods: f64) -> SolverConfig {
    SolverConfig {
        ns: 256,
        nr: 2001,
        steps_per_period: 256,
        r_out: 100.0,
        periods,
        snapshot_every: 10,
    }
}

fn vanish_config(periods: f64) -> SolverConfig {
    SolverConfig {
        ns: 256,
        nr: 1001,
        steps_per_period: 256,
        r_out: 50.0,
        periods,
        snapshot_every: 1,
    }
}

struct Runs {
    spread_100: Trajectory,
    vanish_15: Trajectory,
}

// ---------------------------------------------------------------------------
// Criteria

fn eigen_anchors() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let j01 = bessel_j0_first_zero();
    let cases = [
        ("m=0 N=1", CoefficientField::constant(1.0, 0.0), 1, 256, (PI / 2.0).powi(2)),
        (
            "m=2+sin N=1",
            CoefficientField::temporal(PeriodicScalarFunction::sinusoid(1.0, 2.0, 1.0, 0.0)),
            1,
            256,
            (PI / 2.0).powi(2) - 2.0,
        ),
        ("m=0 N=2", CoefficientField::constant(1.0, 0.0), 2, 512, j01 * j01),
    ];
    for (name, m, dim, grid, exact) in cases {
        let t0 = Instant::now();
        let res = principal_eigenvalue(&EigenProblem::new(1.0, m, 1.0, dim).with_grid(grid));
        let el = t0.elapsed();
        match res {
            Ok(r) => {
                let e = rel(r.lambda1, exact);
                ok &= e <= 1e-3 && el < Duration::from_secs(5);
                lines.push(format!("{name}: {:.6} vs {exact:.6} rel {e:.1e} in {el:.2?}", r.lambda1));
            }
            Err(e) => {
                ok = false;
                lines.push(format!("{name}: {e}"));
            }
        }
    }
    check(ok, lines.join("; "))
}

fn threshold_anchors() -> Outcome {
    let one = EigenProblem::new(1.0, CoefficientField::constant(1.0, 1.0), 1.0, 1);
    let h = threshold_radius(&one, 20.0).map_err(|e| e.to_string())?;
    let h_ok = h.value().is_some_and(|h| (h - PI / 2.0).abs() <= 1e-3);
    let d = threshold_diffusion_fast(&one, 10.0, Execution::default()).map_err(|e| e.to_string())?;
    let d_ok = (d.d_star - 4.0 / (PI * PI)).abs() <= 1e-3;
    let zero = EigenProblem::new(1.0, CoefficientField::constant(1.0, 0.0), 1.0, 1);
    let z = threshold_radius(&zero, 20.0).map_err(|e| e.to_string())?;
    let z_ok = matches!(z, RadiusThreshold::Unbounded { .. });
    check(
        h_ok && d_ok && z_ok,
        format!(
            "h*={:?} (π/2={:.6}), d*={:.6} (4/π²={:.6}), m≡0 unbounded={z_ok}",
            h.value(),
            PI / 2.0,
            d.d_star,
            4.0 / (PI * PI)
        ),
    )
}

/// Tabulate `f` on a shared space-time grid.
fn table(f: impl Fn(f64, f64) -> f64) -> CoefficientField {
    let (n_t, n_r, r_max) = (64, 401, 8.0);
    let rows = (0..n_t)
        .map(|k| {
            let t = k as f64 / n_t as f64;
            (0..n_r).map(|j| f(t, r_max * j as f64 / (n_r - 1) as f64)).collect()
        })
        .collect();
    CoefficientField::tabulated(SpaceTimeTable::from_rows(1.0, r_max, rows).expect("table"))
}

fn monotonicity() -> Outcome {
    let tau = 2.0 * PI;
    let families: Vec<(&str, Box<dyn Fn(f64, f64) -> f64 + Sync>)> = vec![
        ("const", Box::new(|_, _| 1.0)),
        ("sin", Box::new(move |t, _| 1.0 + (tau * t).sin())),
        ("dip", Box::new(|_, r| 1.0 - 2.0 * (-(r / 0.5).powi(2)).exp())),
        (
            "dipsin",
            Box::new(move |t, r| 1.0 + 0.5 * (tau * t).sin() - 1.5 * (-((r - 0.3) / 0.4).powi(2)).exp()),
        ),
        ("ramp", Box::new(move |t, r| 0.5 * (tau * t).cos() - 0.5 + (r / 2.0).min(1.5))),
    ];
    let bump = |t: f64, r: f64| 0.2 * (1.0 + 0.5 * (tau * t).sin()) * (-(r / 0.3).powi(2)).exp();
    let radii = [0.5, 1.0, 2.0, 4.0];
    let lam = |m: CoefficientField, r: f64| {
        principal_eigenvalue(&EigenProblem::new(1.0, m, r, 1).with_grid(128)).map(|e| e.lambda1)
    };
    let mut violations = Vec::new();
    let mut checks = 0;
    for (name, f) in &families {
        let base = table(f);
        let ls: Vec<f64> = radii
            .iter()
            .map(|&r| lam(base.clone(), r))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        for (w, r) in ls.windows(2).zip(radii.windows(2)) {
            checks += 1;
            if !(w[1] < w[0]) {
                violations.push(format!("{name}: λ(R={})={} ≥ λ(R={})={}", r[1], w[1], r[0], w[0]));
            }
        }
        let at1 = ls[1];
        for (kind, raised) in [
            ("shift", table(|t, r| f(t, r) + 0.1)),
            ("bump", table(|t, r| f(t, r) + bump(t, r))),
        ] {
            checks += 1;
            let l = lam(raised, 1.0).map_err(|e| e.to_string())?;
            if !(l < at1) {
                violations.push(format!("{name}/{kind}: {l} ≥ {at1}"));
            }
        }
    }
    check(
        violations.is_empty(),
        format!("{} families, {checks} comparisons, violations: {:?}", families.len(), violations),
    )
}

fn apriori_bounds(runs: &Runs) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, traj, p) in [
        ("spreading", &runs.spread_100, bench_spread()),
        ("vanishing", &runs.vanish_15, bench_vanish()),
    ] {
        let rep = verify_bounds(traj, &p);
        ok &= rep.pass && rep.stalled_records == 0;
        lines.push(format!(
            "{name}: {} records, max u {:.4} ≤ {:.4}, max v {:.4} ≤ {:.4}, h' in ({:.3e}, {:.4}] ≤ {:.4}, stalls {}, first violation {:?}",
            traj.records.len(),
            rep.max_u,
            rep.bounds.c1,
            rep.max_v,
            rep.bounds.c2,
            rep.min_dhdt,
            rep.max_dhdt,
            rep.bounds.c3,
            rep.stalled_records,
            rep.first_violation
        ));
    }
    check(ok, lines.join("; "))
}

fn comparison(runs: &Runs) -> Outcome {
    let p = bench_spread();
    let scalar = scalar_free_boundary(&p, &spread_config(50.0)).map_err(|e| e.to_string())?;
    let rep = compare_runs(&runs.spread_100, &scalar, CompareMode::FrontOnly).map_err(|e| e.to_string())?;
    let horizon = rep.shared_times as f64 / 256.0;
    check(
        rep.pass && horizon >= 50.0,
        format!(
            "{} shared times ({horizon:.1} periods), max h − h̄ = {:.3e}, tolerance {:.3e}",
            rep.shared_times, rep.max_front_excess, rep.tolerance
        ),
    )
}

fn dichotomy(runs: &Runs) -> Outcome {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    let opts = ThresholdOptions::default();

    let vp = bench_vanish();
    let v_star = default_native_density(&vp).map_err(|e| e.to_string())?;
    let cls = Classifier::new(&vp, &v_star, &ClassifyOptions::default()).map_err(|e| e.to_string())?;
    let vv = verdict_at(&vp, &vanish_config(25.0), &cls, 200.0).map_err(|e| e.to_string())?;
    let u_final = runs.vanish_15.last().u_max;
    ok &= vv.kind == VerdictKind::Vanishing && vv.periods_run <= 200.0 && u_final < 1e-4;
    lines.push(format!("vanishing: {:?} after {:.0} periods", vv.kind, vv.periods_run));

    let gaps: Vec<(f64, f64)> = native_gap(&runs.vanish_15, &v_star, 10.0)
        .into_iter()
        .filter(|(t, _)| *t >= 1.0 - 1e-9)
        .collect();
    let decreasing = gaps.windows(2).all(|w| w[1].1 < w[0].1);
    let final_gap = gaps.last().map_or(f64::INFINITY, |g| g.1);
    ok &= decreasing && final_gap < 1e-2 && gaps.len() >= 10;
    lines.push(format!(
        "sup u(15T) {u_final:.1e}, gap over [0,10] decreasing={decreasing} across {} periods, final {final_gap:.1e}",
        gaps.len()
    ));

    let sp = bench_spread();
    let s_star = default_native_density(&sp).map_err(|e| e.to_string())?;
    let cls = Classifier::new(&sp, &s_star, &ClassifyOptions::default()).map_err(|e| e.to_string())?;
    let sv = verdict_at(&sp, &spread_config(10.0), &cls, 10.0).map_err(|e| e.to_string())?;
    ok &= sv.kind == VerdictKind::Spreading && sv.periods_run <= 10.0;
    lines.push(format!("spreading: {:?} after {:.2} periods", sv.kind, sv.periods_run));

    let cfg = vanish_config(25.0);
    let bisect = ThresholdOptions {
        width: Some(0.05),
        ..opts.clone()
    };
    match find_mu_star(&vp, &cfg, (0.05, 50.0), &bisect).map_err(|e| e.to_string())? {
        ThresholdOutcome::Interval {
            low,
            high,
            widened,
            points,
            ..
        } => {
            let grid: Vec<f64> = (0..10).map(|i| 0.05 + (50.0 - 0.05) * i as f64 / 9.0).collect();
            let gv = verdict_grid(&vp, &cfg, &Dial::Mu, &grid, &opts, Execution::default())
                .map_err(|e| e.to_string())?;
            let all: Vec<_> = gv.iter().chain(points.iter()).cloned().collect();
            let mono = verdicts_monotone(&all) && gv.iter().all(|p| p.kind != VerdictKind::Inconclusive);
            ok &= high - low < 0.05 && !widened && mono;
            let kinds: String = gv
                .iter()
                .map(|p| match p.kind {
                    VerdictKind::Vanishing => 'V',
                    VerdictKind::Spreading => 'S',
                    VerdictKind::Inconclusive => '?',
                })
                .collect();
            lines.push(format!(
                "μ* in [{low:.4}, {high:.4}] (width {:.4}), grid verdicts {kinds}, monotone={mono}",
                high - low
            ));
        }
        ThresholdOutcome::Zero { .. } => {
            ok = false;
            lines.push("μ search reported a zero threshold".into());
        }
    }
    let el = t0.elapsed();
    ok &= el < Duration::from_secs(600);
    lines.push(format!("{el:.1?}"));
    check(ok, lines.join("; "))
}

fn semiwave() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let opts = SemiWaveOptions::default();
    let cases = [(1.0, 1.0, 1.0, 1.0), (5.0, 1.0, 1.0, 1.0), (5.0, 0.8, 1.0, 1.0), (2.0, 1.0, 2.0, 0.5)];
    for (mu, a, b, d) in cases {
        let oracle = shooting_k0(mu, a, b, d);
        let res = semiwave_k0(
            mu,
            &PeriodicScalarFunction::constant(1.0, a),
            &PeriodicScalarFunction::constant(1.0, b),
            d,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        let e = rel(res.mean_k0, oracle);
        let bound = res.mean_k0 > 0.0 && res.mean_k0 < res.bound;
        ok &= e <= 1e-3 && bound && res.boundary_residual < 1e-5;
        lines.push(format!(
            "μ={mu} a={a} b={b} d={d}: {:.6} vs {oracle:.6} rel {e:.1e}, residual {:.1e}",
            res.mean_k0, res.boundary_residual
        ));
    }
    let res = semiwave_k0(
        1.0,
        &PeriodicScalarFunction::sinusoid(1.0, 1.0, 0.5, 0.0),
        &PeriodicScalarFunction::constant(1.0, 1.0),
        1.0,
        &opts,
    )
    .map_err(|e| e.to_string())?;
    ok &= res.mean_k0 > 0.0 && res.mean_k0 < res.bound && res.boundary_residual < 1e-5;
    lines.push(format!(
        "periodic a: mean {:.6} < {:.6}, residual {:.1e}",
        res.mean_k0, res.bound, res.boundary_residual
    ));
    check(ok, lines.join("; "))
}

fn speed(runs: &Runs) -> Outcome {
    let sb = speed_bounds(&bench_spread(), &SemiWaveOptions::default()).map_err(|e| e.to_string())?;
    let m = measure_speed(&runs.spread_100, 20).map_err(|e| e.to_string())?;
    check(
        m.slope >= 0.95 * sb.lower && m.slope <= 1.05 * sb.upper && sb.lower_exists,
        format!(
            "slope {:.5} in [0.95·{:.5}, 1.05·{:.5}] = [{:.5}, {:.5}]",
            m.slope,
            sb.lower,
            sb.upper,
            0.95 * sb.lower,
            1.05 * sb.upper
        ),
    )
}

fn hygiene() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let p = bench_spread();

    // dt fine enough that no grid needs CFL substeps, so only Ns varies.
    let sup_u = |ns: usize| {
        let cfg = SolverConfig {
            ns,
            nr: 4001,
            steps_per_period: 1024,
            r_out: 40.0,
            periods: 5.0,
            snapshot_every: 5,
        };
        simulate(&p, &cfg).map(|t| t.last().u_max)
    };
    let s: Vec<f64> = [128, 256, 512]
        .into_iter()
        .map(sup_u)
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let order = ((s[0] - s[1]) / (s[1] - s[2])).abs().log2();
    ok &= (1.5..=2.5).contains(&order);
    lines.push(format!("Richardson order {order:.3} from sup u {:.8} {:.8} {:.8}", s[0], s[1], s[2]));

    let final_h = |cfg: SolverConfig| simulate(&p, &cfg).map(|t| t.final_h()).map_err(|e| e.to_string());
    let base = SolverConfig {
        snapshot_every: 10,
        ..spread_config(10.0)
    };
    let h = final_h(base.clone())?;
    let h_dt = final_h(SolverConfig {
        steps_per_period: 512,
        ..base.clone()
    })?;
    let h_r = final_h(SolverConfig {
        r_out: 200.0,
        nr: 4001,
        ..base.clone()
    })?;
    let (e_dt, e_r) = (rel(h_dt, h), rel(h_r, h));
    ok &= e_dt < 1e-2 && e_r < 1e-3;
    lines.push(format!("h(10T) {h:.6}; dt/2 change {e_dt:.1e}; 2·R_out change {e_r:.1e}"));

    let one = PeriodicScalarFunction::constant(1.0, 1.0);
    let five = PeriodicScalarFunction::constant(1.0, 5.0);
    let k = |length: f64| {
        semiwave_k0(
            5.0,
            &one,
            &one,
            1.0,
            &SemiWaveOptions {
                length: Some(length),
                ..Default::default()
            },
        )
        .map(|r| r.mean_k0)
        .map_err(|e| e.to_string())
    };
    let (k40, k80) = (k(40.0)?, k(80.0)?);
    let e_l = rel(k80, k40);
    ok &= e_l < 1e-3;
    lines.push(format!("K0 with L=40,80: {k40:.6}, {k80:.6}, change {e_l:.1e}"));

    // Native density with a spatial dip: doubling the truncation leaves the core unchanged.
    let dip = |p: &ModelParams| ModelParams {
        m2: CoefficientField::gaussian_dip(PeriodicScalarFunction::sinusoid(1.0, 1.0, 0.5, 0.0), 0.8, 0.0, 1.0)
            .expect("dip"),
        b2: CoefficientField::temporal(five.clone()),
        ..p.clone()
    };
    let pd = dip(&p);
    let opts = EntireOptions::default();
    let (v1, v2) = (
        native_density(&pd, 10.0, &opts).map_err(|e| e.to_string())?,
        native_density(&pd, 20.0, &opts).map_err(|e| e.to_string())?,
    );
    let mut e_v: f64 = 0.0;
    for k in 0..16 {
        let t = k as f64 / 16.0;
        for j in 0..=50 {
            let r = 5.0 * j as f64 / 50.0;
            e_v = e_v.max(rel(v2.eval(t, r), v1.eval(t, r)));
        }
    }
    ok &= e_v < 1e-3;
    lines.push(format!("V on [0,5] with R_out=10,20: max change {e_v:.1e}"));
    check(ok, lines.join("; "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let runs = Runs {
        spread_100: simulate(&bench_spread(), &spread_config(100.0)).expect("spreading benchmark"),
        vanish_15: simulate(&bench_vanish(), &vanish_config(15.0)).expect("vanishing benchmark"),
    };
    println!("benchmark runs ready in {:.1?}", start.elapsed());

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("eigen analytic anchors", Box::new(eigen_anchors)),
        ("threshold anchors", Box::new(threshold_anchors)),
        ("eigenvalue monotonicity", Box::new(monotonicity)),
        ("a priori bounds", Box::new(|| apriori_bounds(&runs))),
        ("comparison ordering", Box::new(|| comparison(&runs))),
        ("dichotomy and mu threshold", Box::new(|| dichotomy(&runs))),
        ("semi-wave speed", Box::new(semiwave)),
        ("spreading speed bounds", Box::new(|| speed(&runs))),
        ("numerical hygiene", Box::new(hygiene)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{}] {name} ({:.1?}): {detail}", i + 1, t0.elapsed());
    }
    println!("{} of {} criteria passed in {:.1?}", criteria.len() - failed, criteria.len(), start.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

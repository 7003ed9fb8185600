//! Subcommand implementations. Each returns the process exit code.

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use stefan_lab::analysis::{
    default_native_density, find_eps_star, find_mu_star, measure_speed, semiwave_k0, snapshot_u_at,
    speed_bounds, AnalysisError, Classifier, Dial, SweepPlan, ThresholdOutcome, ThresholdOptions,
    VerdictKind,
};
use stefan_lab::config::{parse_coefficient, RunConfig};
use stefan_lab::eigensolver::{principal_eigenvalue, threshold_diffusion_fast, threshold_radius, EigenProblem};
use stefan_lab::entire_solutions::{check_asymptotic_bounds, default_r_out, native_density, EntireOptions};
use stefan_lab::exec::Execution;
use stefan_lab::fbsolver::{simulate_with_hook, verify_bounds, FbError, Trajectory};
use stefan_lab::model::{check_h1, check_h2, classify_environment, ModelParams, PeriodicScalarFunction};
use stefan_lab::periodic_ode::{
    check_h3, envelope_constants, lower_native_envelope, solve_periodic_logistic, upper_native_envelope,
};
use stefan_lab::presets;

use crate::output::{line_plot, stdout_line, verdict_map, Sink};
use crate::{Common, Failure, ThresholdParam};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Failure::Usage(msg.into()).into()
}

fn numerical(e: impl std::fmt::Display) -> anyhow::Error {
    Failure::Numerical(e.to_string()).into()
}

fn load_config(common: &Common) -> Result<Option<RunConfig>> {
    let Some(name) = &common.config else {
        return Ok(None);
    };
    let mut cfg = match presets::config_by_name(name) {
        Some(cfg) => cfg,
        None => RunConfig::load(std::path::Path::new(name)).map_err(|e| usage(format!("config `{name}`: {e}")))?,
    };
    if let Some(t_end) = common.t_end {
        cfg.solver.periods = t_end;
    }
    Ok(Some(cfg))
}

fn require_config(common: &Common) -> Result<(RunConfig, ModelParams)> {
    let cfg = load_config(common)?.ok_or_else(|| usage("--config is required"))?;
    let params = cfg.params().map_err(|e| usage(e.to_string()))?;
    Ok((cfg, params))
}

fn sink(common: &Common, name: &'static str, cfg: Option<&RunConfig>, args: Value) -> Sink {
    let echo = json!({
        "subcommand": name,
        "args": args,
        "config": cfg.map(RunConfig::to_toml),
    });
    Sink::new(common.out.clone(), name, echo)
}

fn temporal(period: f64, spec: &str) -> Result<PeriodicScalarFunction> {
    let field = parse_coefficient(period, spec).map_err(|e| usage(e.to_string()))?;
    field
        .as_temporal()
        .cloned()
        .ok_or_else(|| usage(format!("`{spec}` must not depend on r here")))
}

pub struct EigenArgs {
    pub d: Option<f64>,
    pub radius: Option<f64>,
    pub dim: Option<u32>,
    pub period: Option<f64>,
    pub m: Option<String>,
    pub grid: usize,
    pub steps: usize,
    pub hstar: bool,
    pub dstar: bool,
    pub search_max: f64,
}

pub fn eigen(common: &Common, args: EigenArgs) -> Result<u8> {
    let cfg = load_config(common)?;
    let p = cfg.as_ref().map(|c| &c.problem);
    let d = args.d.or(p.map(|p| p.d1)).unwrap_or(1.0);
    let radius = args.radius.or(cfg.as_ref().map(|c| c.initial.h0)).unwrap_or(1.0);
    let dim = args.dim.or(p.map(|p| p.dim)).unwrap_or(1);
    let period = args.period.or(p.map(|p| p.period)).unwrap_or(1.0);
    let m_spec = args
        .m
        .clone()
        .or(cfg.as_ref().map(|c| c.coefficients.m1.clone()))
        .unwrap_or_else(|| "const:0".into());
    let m = parse_coefficient(period, &m_spec).map_err(|e| usage(e.to_string()))?;
    let mut prob = EigenProblem::new(d, m, radius, dim).with_grid(args.grid);
    prob.steps_per_period = args.steps;
    prob.validate().map_err(|e| usage(e.to_string()))?;

    let mut out = sink(
        common,
        "eigen",
        cfg.as_ref(),
        json!({"d": d, "R": radius, "N": dim, "T": period, "m": m_spec, "grid": args.grid,
               "steps": args.steps, "hstar": args.hstar, "dstar": args.dstar, "search_max": args.search_max}),
    );
    let res = principal_eigenvalue(&prob).map_err(numerical)?;
    let h_star = if args.hstar {
        Some(threshold_radius(&prob, args.search_max).map_err(numerical)?)
    } else {
        None
    };
    let d_star = if args.dstar {
        Some(threshold_diffusion_fast(&prob, args.search_max, Execution::Sequential).map_err(numerical)?)
    } else {
        None
    };
    out.result(&json!({
        "config_hash": out.config_hash(),
        "d": d, "R": radius, "N": dim, "T": period, "m": m_spec,
        "grid": prob.grid,
        "steps_per_period": prob.effective_steps(),
        "lambda1": res.lambda1,
        "multiplier": res.multiplier,
        "log_multiplier": res.log_multiplier,
        "iterations": res.iterations,
        "rel_change": res.rel_change,
        "h_star": h_star,
        "d_star": d_star,
    }))?;
    let dr = radius / (res.phi0.len() - 1) as f64;
    out.csv(
        "eigenfunction",
        res.phi0.iter().enumerate().map(|(i, &phi)| Phi { r: i as f64 * dr, phi }),
    )?;
    out.finish()?;
    Ok(0)
}

#[derive(Serialize)]
struct Phi {
    r: f64,
    phi: f64,
}

#[derive(Serialize)]
struct OdeRow {
    t: f64,
    a: f64,
    b: f64,
    v: f64,
}

pub fn periodic_ode(
    common: &Common,
    a: Option<String>,
    b: Option<String>,
    period: Option<f64>,
    samples: usize,
) -> Result<u8> {
    let cfg = load_config(common)?;
    let period = period.or(cfg.as_ref().map(|c| c.problem.period)).unwrap_or(1.0);
    let pick = |arg: Option<String>, from: fn(&RunConfig) -> &String| {
        arg.or(cfg.as_ref().map(|c| from(c).clone()))
            .ok_or_else(|| usage("give --a and --b, or --config"))
    };
    let a_spec = pick(a, |c| &c.coefficients.m2)?;
    let b_spec = pick(b, |c| &c.coefficients.b2)?;
    let (fa, fb) = (temporal(period, &a_spec)?, temporal(period, &b_spec)?);
    let mut out = sink(
        common,
        "periodic-ode",
        cfg.as_ref(),
        json!({"a": a_spec, "b": b_spec, "T": period, "samples": samples}),
    );
    let sol = solve_periodic_logistic(&fa, &fb).map_err(numerical)?;
    out.result(&json!({
        "config_hash": out.config_hash(),
        "mean_a": sol.mean_a,
        "v_mean": sol.v.mean(),
        "v_min": sol.v.min(),
        "v_max": sol.v.max(),
        "periodicity_defect": sol.periodicity_defect,
        "ode_residual": sol.ode_residual,
        "cells": sol.cells,
    }))?;
    out.csv(
        "solution",
        (0..samples).map(|k| {
            let t = period * k as f64 / samples as f64;
            OdeRow {
                t,
                a: fa.eval(t),
                b: fb.eval(t),
                v: sol.v.eval(t),
            }
        }),
    )?;
    out.finish()?;
    Ok(0)
}

#[derive(Serialize)]
struct FieldRow {
    t: f64,
    r: f64,
    v: f64,
}

pub fn entire(common: &Common, r_out: Option<f64>, n_r: Option<usize>) -> Result<u8> {
    let (cfg, params) = require_config(common)?;
    let r_out = r_out.unwrap_or_else(|| default_r_out(&[&params.m2, &params.b2]));
    let mut opts = EntireOptions::default();
    if let Some(n) = n_r {
        opts.n_r = n;
    }
    let mut out = sink(common, "entire", Some(&cfg), json!({"r_out": r_out, "n_r": opts.n_r}));
    let v = native_density(&params, r_out, &opts).map_err(numerical)?;
    let lower = lower_native_envelope(&params).map_err(numerical)?;
    let upper = upper_native_envelope(&params).map_err(numerical)?;
    let tail = check_asymptotic_bounds(&v, &lower.v, &upper.v);
    let table = v.table();
    out.result(&json!({
        "config_hash": out.config_hash(),
        "r_out": v.r_out(),
        "n_r": table.n_r(),
        "n_t": table.n_t(),
        "residual": v.residual(),
        "periods": v.periods(),
        "min": table.min(),
        "max": table.max(),
        "asymptotic_bounds": tail,
    }))?;
    out.csv(
        "field",
        (0..table.n_t()).flat_map(|k| {
            (0..table.n_r()).map(move |j| FieldRow {
                t: table.time(k),
                r: table.radius(j),
                v: table.row(k)[j],
            })
        }),
    )?;
    out.finish()?;
    Ok(0)
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    h: f64,
    dhdt: f64,
    u_max: f64,
    v_max: f64,
}

#[derive(Serialize)]
struct ProfileRow {
    r: f64,
    u: f64,
    v: Option<f64>,
}

/// Trajectory CSV, snapshot CSVs and the optional h(t) plot.
fn write_trajectory(out: &mut Sink, traj: &Trajectory, svg: bool) -> Result<()> {
    out.csv(
        "trajectory",
        traj.records.iter().map(|r| TrajectoryRow {
            t: r.t,
            h: r.h,
            dhdt: r.dhdt,
            u_max: r.u_max,
            v_max: r.v_max,
        }),
    )?;
    let dr = traj.config.dr();
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let rows: Vec<ProfileRow> = if snap.v.is_empty() {
            let ds = 1.0 / (snap.u.len() - 1) as f64;
            snap.u
                .iter()
                .enumerate()
                .map(|(i, &u)| ProfileRow {
                    r: i as f64 * ds * snap.h,
                    u,
                    v: None,
                })
                .collect()
        } else {
            snap.v
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    let r = j as f64 * dr;
                    ProfileRow {
                        r,
                        u: snapshot_u_at(&snap.u, snap.h, r),
                        v: Some(v),
                    }
                })
                .collect()
        };
        out.csv(&format!("snapshot_{k:04}"), rows)?;
    }
    if svg {
        let pts: Vec<(f64, f64)> = traj.period_records().map(|r| (r.t, r.h)).collect();
        out.svg("front", line_plot("front position", "t", "h(t)", &pts))?;
    }
    Ok(())
}

/// Splits a solver result into the trajectory and the exit code it implies.
fn settle(res: Result<Trajectory, FbError>) -> Result<(Trajectory, u8, Option<String>)> {
    match res {
        Ok(t) => Ok((t, 0, None)),
        Err(FbError::StabilityFailure { partial, detail, t }) => {
            Ok((*partial, 2, Some(format!("stability failure at t={t}: {detail}"))))
        }
        Err(FbError::DomainExhausted { partial, t, h }) => {
            Ok((*partial, 3, Some(format!("front h={h} reached the truncation at t={t}"))))
        }
        Err(e @ FbError::InvalidConfig(_)) | Err(e @ FbError::Model(_)) => Err(usage(e.to_string())),
    }
}

pub fn simulate(common: &Common) -> Result<u8> {
    let (cfg, params) = require_config(common)?;
    let mut out = sink(common, "simulate", Some(&cfg), json!({"t_end": cfg.solver.periods}));
    let (traj, code, failure) = settle(stefan_lab::fbsolver::simulate(&params, &cfg.solver))?;
    let bounds = verify_bounds(&traj, &params);
    let last = traj.last();
    out.result(&json!({
        "config_hash": out.config_hash(),
        "termination": traj.termination,
        "failure": failure,
        "t_final": last.t,
        "h_final": last.h,
        "records": traj.records.len(),
        "snapshots": traj.snapshots.len(),
        "bounds": bounds,
        "config": cfg,
    }))?;
    write_trajectory(&mut out, &traj, common.svg)?;
    out.finish()?;
    if let Some(msg) = failure {
        eprintln!("{msg}");
    }
    Ok(code)
}

pub fn classify(common: &Common) -> Result<u8> {
    let (cfg, params) = require_config(common)?;
    let mut out = sink(common, "classify", Some(&cfg), json!({"t_end": cfg.solver.periods}));
    let v = default_native_density(&params).map_err(numerical)?;
    let classifier = Classifier::new(&params, &v, &cfg.classify).map_err(numerical)?;
    let mut hook = classifier.hook();
    let (traj, code, failure) = settle(simulate_with_hook(&params, &cfg.solver, &mut hook))?;
    let verdict = classifier.classify(&traj);
    // A front that left the truncated domain has already spread.
    let code = if code == 3 && verdict.kind == VerdictKind::Spreading { 0 } else { code };
    out.result(&json!({
        "config_hash": out.config_hash(),
        "verdict": verdict,
        "h_final": traj.final_h(),
        "periods_run": traj.last().t / traj.period,
        "termination": traj.termination,
        "failure": failure,
        "tolerances": cfg.classify,
    }))?;
    if common.svg {
        let pts: Vec<(f64, f64)> = traj.period_records().map(|r| (r.t, r.h)).collect();
        out.svg("front", line_plot("front position", "t", "h(t)", &pts))?;
    }
    out.finish()?;
    Ok(code)
}

pub fn threshold(common: &Common, param: ThresholdParam, bracket: (f64, f64), width: Option<f64>) -> Result<u8> {
    let (cfg, params) = require_config(common)?;
    if !(bracket.0 < bracket.1) {
        return Err(usage("--bracket needs LOW < HIGH"));
    }
    let opts = ThresholdOptions {
        width: width.or(cfg.threshold.width),
        ..cfg.threshold.clone()
    };
    let mut out = sink(
        common,
        "threshold",
        Some(&cfg),
        json!({"param": param, "bracket": [bracket.0, bracket.1], "width": opts.width}),
    );
    let res = match param {
        ThresholdParam::Mu => find_mu_star(&params, &cfg.solver, bracket, &opts),
        ThresholdParam::Eps => find_eps_star(&params, &params.init, &cfg.solver, bracket, &opts),
    };
    let outcome = match res {
        Ok(o @ ThresholdOutcome::Interval { .. }) | Ok(o @ ThresholdOutcome::Zero { .. }) => serde_json::to_value(o)?,
        // The threshold lies outside the bracket: report the half-line it is on.
        Err(AnalysisError::NoBracket {
            low: VerdictKind::Vanishing,
            high: VerdictKind::Vanishing,
        }) => json!({"kind": "above_bracket", "low": bracket.1, "high": null}),
        Err(AnalysisError::NoBracket {
            low: VerdictKind::Spreading,
            high: VerdictKind::Spreading,
        }) => json!({"kind": "below_bracket", "low": null, "high": bracket.0}),
        Err(e) => return Err(numerical(e)),
    };
    out.result(&json!({
        "config_hash": out.config_hash(),
        "param": param,
        "bracket": [bracket.0, bracket.1],
        "outcome": outcome,
        "options": opts,
        "solver": cfg.solver,
    }))?;
    out.finish()?;
    Ok(0)
}

pub fn speed(common: &Common, window: usize) -> Result<u8> {
    let (mut cfg, params) = require_config(common)?;
    if common.t_end.is_none() {
        cfg.solver.periods = cfg.solver.periods.max(5.0 * window as f64);
    }
    let mut out = sink(common, "speed", Some(&cfg), json!({"window": window}));
    let bounds = speed_bounds(&params, &cfg.semiwave).map_err(numerical)?;
    let (traj, code, failure) = settle(stefan_lab::fbsolver::simulate(&params, &cfg.solver))?;
    let measured = match measure_speed(&traj, window) {
        Ok(m) => Some(m),
        Err(AnalysisError::InsufficientData(_)) => None,
        Err(e) => return Err(numerical(e)),
    };
    let within = measured
        .as_ref()
        .map(|m| m.slope >= 0.95 * bounds.lower && m.slope <= 1.05 * bounds.upper);
    out.result(&json!({
        "config_hash": out.config_hash(),
        "bounds": bounds,
        "measured": measured,
        "within_bounds": within,
        "periods_run": traj.last().t / traj.period,
        "failure": failure,
        "semiwave_options": cfg.semiwave,
    }))?;
    if common.svg {
        let pts: Vec<(f64, f64)> = traj.period_records().map(|r| (r.t, r.h)).collect();
        out.svg("front", line_plot("front position", "t", "h(t)", &pts))?;
    }
    out.finish()?;
    Ok(code)
}

#[derive(Serialize)]
struct KRow {
    t: f64,
    k0: f64,
}

pub fn semiwave(
    common: &Common,
    mu: Option<f64>,
    a: Option<String>,
    b: Option<String>,
    d: Option<f64>,
    period: Option<f64>,
    length: Option<f64>,
) -> Result<u8> {
    let cfg = load_config(common)?;
    let period = period.or(cfg.as_ref().map(|c| c.problem.period)).unwrap_or(1.0);
    let mu = mu
        .or(cfg.as_ref().map(|c| c.problem.mu))
        .ok_or_else(|| usage("give --mu or --config"))?;
    let d = d.or(cfg.as_ref().map(|c| c.problem.d1)).unwrap_or(1.0);
    let a_spec = a
        .or(cfg.as_ref().map(|c| c.coefficients.m1.clone()))
        .ok_or_else(|| usage("give --a or --config"))?;
    let b_spec = b
        .or(cfg.as_ref().map(|c| c.coefficients.b1.clone()))
        .unwrap_or_else(|| "const:1".into());
    let (fa, fb) = (temporal(period, &a_spec)?, temporal(period, &b_spec)?);
    let mut opts = cfg.as_ref().map(|c| c.semiwave.clone()).unwrap_or_default();
    if length.is_some() {
        opts.length = length;
    }
    let mut out = sink(
        common,
        "semiwave",
        cfg.as_ref(),
        json!({"mu": mu, "a": a_spec, "b": b_spec, "d": d, "T": period, "options": opts}),
    );
    let res = semiwave_k0(mu, &fa, &fb, d, &opts).map_err(numerical)?;
    out.result(&json!({
        "config_hash": out.config_hash(),
        "result": res,
        "options": opts,
    }))?;
    let n = res.k0_samples.len();
    out.csv(
        "k0",
        res.k0_samples.iter().enumerate().map(|(k, &k0)| KRow {
            t: period * k as f64 / n as f64,
            k0,
        }),
    )?;
    out.finish()?;
    Ok(0)
}

/// `NAME:LOW:HIGH:COUNT` or `NAME:V1,V2,...`.
fn parse_axis(spec: &str) -> Result<(String, Vec<f64>)> {
    let (name, rest) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("axis `{spec}` needs NAME:...")))?;
    if !matches!(name, "d1" | "h0" | "mu" | "eps") {
        return Err(usage(format!("sweep parameter `{name}` is not one of d1, h0, mu, eps")));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| usage(format!("bad number `{s}` in `{spec}`")));
    let parts: Vec<&str> = rest.split(':').collect();
    let values = match parts.as_slice() {
        [lo, hi, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.parse().map_err(|_| usage(format!("bad count in `{spec}`")))?;
            if n == 0 {
                return Err(usage("count must be positive"));
            }
            if n == 1 {
                vec![lo]
            } else {
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            }
        }
        [list] => list.split(',').map(num).collect::<Result<_>>()?,
        _ => return Err(usage(format!("cannot parse axis `{spec}`"))),
    };
    Ok((name.to_string(), values))
}

fn dial(name: &str, params: &ModelParams) -> Dial {
    match name {
        "mu" => Dial::Mu,
        "d1" => Dial::D1,
        "h0" => Dial::H0,
        _ => Dial::Eps(params.init.clone()),
    }
}

#[derive(Serialize)]
struct SweepCsvRow {
    param1: f64,
    param2: Option<f64>,
    verdict: VerdictKind,
    h_final: f64,
}

/// Worker count for the sweep: `STEFAN_THREADS` if set, else all cores.
fn sweep_threads() -> Result<usize> {
    match std::env::var("STEFAN_THREADS") {
        Ok(s) => s
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("STEFAN_THREADS=`{s}` is not a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}

pub fn sweep(common: &Common, x: &str, y: Option<&str>) -> Result<u8> {
    let (cfg, params) = require_config(common)?;
    let (x_name, xs) = parse_axis(x)?;
    let y_axis = y.map(parse_axis).transpose()?;
    let threads = sweep_threads()?;
    let mut out = sink(
        common,
        "sweep",
        Some(&cfg),
        json!({"x": x, "y": y}),
    );
    let dx = dial(&x_name, &params);
    let dy = y_axis.as_ref().map(|(n, _)| dial(n, &params));
    let plan = SweepPlan::new(&params, &cfg.solver, &dx, dy.as_ref(), &cfg.threshold).map_err(numerical)?;
    let points = SweepPlan::points(&xs, y_axis.as_ref().map(|(_, v)| v.as_slice()));

    let mut file = out.streaming_csv("verdicts")?;
    let mut stdout = if file.is_none() {
        Some(csv::Writer::from_writer(std::io::stdout()))
    } else {
        None
    };
    let mut rows = Vec::with_capacity(points.len());
    let exec = if threads > 1 { Execution::Parallel } else { Execution::Sequential };
    for chunk in points.chunks(threads.max(1) * 2) {
        let batch = with_pool(threads, || plan.run(chunk, exec))?.map_err(numerical)?;
        for r in &batch {
            let row = SweepCsvRow {
                param1: r.p1,
                param2: r.p2,
                verdict: r.kind,
                h_final: r.h_final,
            };
            if let Some(w) = file.as_mut() {
                w.serialize(&row)?;
            } else if let Some(w) = stdout.as_mut() {
                if let Err(e) = w.serialize(&row) {
                    if !broken_pipe(&e) {
                        return Err(e.into());
                    }
                }
            }
        }
        if let Some(w) = file.as_mut() {
            w.flush().context("flushing sweep rows")?;
        } else if let Some(w) = stdout.as_mut() {
            let _ = w.flush();
        }
        rows.extend(batch);
    }
    let count = |k: VerdictKind| rows.iter().filter(|r| r.kind == k).count();
    let summary = json!({
        "config_hash": out.config_hash(),
        "param1": x_name,
        "param2": y_axis.as_ref().map(|(n, _)| n.clone()),
        "points": rows.len(),
        "spreading": count(VerdictKind::Spreading),
        "vanishing": count(VerdictKind::Vanishing),
        "inconclusive": count(VerdictKind::Inconclusive),
        "threshold_options": cfg.threshold,
        "solver": cfg.solver,
    });
    if out.writes_files() {
        out.result(&summary)?;
    }
    if common.svg {
        let cells: Vec<(f64, f64, &str)> = rows
            .iter()
            .map(|r| {
                let kind = match r.kind {
                    VerdictKind::Spreading => "spreading",
                    VerdictKind::Vanishing => "vanishing",
                    VerdictKind::Inconclusive => "inconclusive",
                };
                (r.p1, r.p2.unwrap_or(0.0), kind)
            })
            .collect();
        let y_label = y_axis.as_ref().map_or("-", |(n, _)| n.as_str());
        out.svg("verdicts", verdict_map("verdict map", &x_name, y_label, &cells))?;
    }
    out.finish()?;
    Ok(0)
}

fn broken_pipe(e: &csv::Error) -> bool {
    matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn mark(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn check(common: &Common) -> Result<u8> {
    let (cfg, params) = require_config(common)?;
    let mut out = sink(common, "check", Some(&cfg), json!({}));
    let h1 = check_h1(&params);
    let r = params.sampling_radius();
    let probes = [0.6 * r, 0.8 * r, r];
    let h2_m2 = check_h2(&params.m2, &probes).map_err(numerical)?;
    let v = default_native_density(&params).map_err(numerical)?;
    let eff = stefan_lab::entire_solutions::effective_u_growth(&params, &v, 1.0).map_err(numerical)?;
    let h2_eff = check_h2(&eff, &probes).map_err(numerical)?;
    let upper = upper_native_envelope(&params).map_err(numerical)?;
    let constants = envelope_constants(&params, &v).map_err(numerical)?;
    let h3 = check_h3(&params, &upper, &constants);
    let env = classify_environment(&params);

    let mut lines = Vec::new();
    lines.push(format!("(H1) positivity, boundedness, periodicity: {}", mark(h1.pass)));
    for c in h1.clauses.iter().filter(|c| !c.pass) {
        lines.push(format!("      {} {} fails at (t, r, value) = {:?}", c.field, c.clause, c.witness));
    }
    lines.push(format!(
        "(H2) m2 far field: liminf {:.6}, limsup {:.6}: {}",
        h2_m2.liminf,
        h2_m2.limsup,
        mark(h2_m2.pass)
    ));
    lines.push(format!(
        "(H2) m1 - c1 V far field: liminf {:.6}, limsup {:.6}: {}",
        h2_eff.liminf,
        h2_eff.limsup,
        mark(h2_eff.pass)
    ));
    lines.push(format!(
        "(H3) weak competition margin {:.6} at t = {:.4}: {}",
        h3.margin,
        h3.argmin_t,
        mark(h3.pass)
    ));
    lines.push(format!("environment: {env:?} (Strong = (Hs), Weak = (Hw))"));
    stdout_line(&lines.join("\n"))?;
    if out.writes_files() {
        out.result(&json!({
            "config_hash": out.config_hash(),
            "h1": h1,
            "h2_m2": h2_m2,
            "h2_effective_growth": h2_eff,
            "h3": h3,
            "envelope_constants": constants,
            "environment": env,
        }))?;
    }
    out.finish()?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::parse_axis;

    #[test]
    fn axis_forms() {
        let (name, v) = parse_axis("mu:1:3:3").unwrap();
        assert_eq!(name, "mu");
        assert_eq!(v, vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_axis("h0:0.5,2").unwrap().1, vec![0.5, 2.0]);
        assert_eq!(parse_axis("eps:0.2").unwrap().1, vec![0.2]);
        assert!(parse_axis("c1:1:2:3").is_err());
        assert!(parse_axis("mu:1:2:0").is_err());
        assert!(parse_axis("mu").is_err());
    }
}

//! Built-in benchmark instances.

use crate::config::{Coefficients, Initial, Problem, RunConfig};
use crate::fbsolver::SolverConfig;
use crate::model::ModelParams;

/// Nodes used for the cosine initial bump.
pub const U0_NODES: usize = 129;

fn constant_competition(h0: f64, mu: f64, amplitude: f64) -> RunConfig {
    let s = |x: &str| format!("const:{x}");
    RunConfig {
        problem: Problem {
            d1: 1.0,
            d2: 1.0,
            mu,
            dim: 1,
            period: 1.0,
        },
        coefficients: Coefficients {
            m1: s("1"),
            m2: s("1"),
            b1: s("1"),
            b2: s("1"),
            c1: s("0.2"),
            c2: s("0.3"),
        },
        initial: Initial {
            h0,
            u0_amplitude: amplitude,
            u0_nodes: U0_NODES,
            v0: 1.0,
        },
        solver: SolverConfig::default(),
        classify: Default::default(),
        threshold: Default::default(),
        semiwave: Default::default(),
    }
}

/// `h0 = 2`, `μ = 5`, `u0 = 0.5·cos(πr/4)`, `v0 ≡ 1`.
pub fn bench_spread_config() -> RunConfig {
    constant_competition(2.0, 5.0, 0.5)
}

/// `h0 = 0.5`, `μ = 0.05`, `u0 = 0.05·cos(πr)`, `v0 ≡ 1`.
pub fn bench_vanish_config() -> RunConfig {
    constant_competition(0.5, 0.05, 0.05)
}

pub fn bench_spread() -> ModelParams {
    bench_spread_config().params().expect("preset")
}

pub fn bench_vanish() -> ModelParams {
    bench_vanish_config().params().expect("preset")
}

pub fn config_by_name(name: &str) -> Option<RunConfig> {
    match name {
        "bench_spread" => Some(bench_spread_config()),
        "bench_vanish" => Some(bench_vanish_config()),
        _ => None,
    }
}

pub const NAMES: [&str; 2] = ["bench_spread", "bench_vanish"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in NAMES {
            config_by_name(name).unwrap().params().unwrap();
        }
        assert!(config_by_name("nope").is_none());
        let p = bench_vanish();
        assert_eq!(p.h0(), 0.5);
        assert!((p.init.u0().sup() - 0.05).abs() < 1e-15);
    }
}

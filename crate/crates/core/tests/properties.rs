use proptest::prelude::*;

use stefan_lab::config::parse_coefficient;
use stefan_lab::model::PeriodicScalarFunction;
use stefan_lab::numerics::{expansion_value, grow_expansion};
use stefan_lab::periodic_ode::solve_periodic_logistic;

fn rk4_period(a: &PeriodicScalarFunction, b: &PeriodicScalarFunction, v0: f64, steps: usize) -> f64 {
    let f = |t: f64, v: f64| v * (a.eval(t) - b.eval(t) * v);
    let dt = a.period() / steps as f64;
    let mut v = v0;
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = f(t, v);
        let k2 = f(t + dt / 2.0, v + dt / 2.0 * k1);
        let k3 = f(t + dt / 2.0, v + dt / 2.0 * k2);
        let k4 = f(t + dt, v + dt * k3);
        v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    v
}

proptest! {
    // Increments are integer multiples of 2^-80, so an i128 accumulator is exact.
    #[test]
    fn expansion_matches_integer_sum(start in 1i64..1 << 40, incs in prop::collection::vec(0i64..1 << 20, 1..400)) {
        let ulp = 2f64.powi(-80);
        let mut e = vec![start as f64];
        let mut exact = (start as i128) << 80;
        for &k in &incs {
            grow_expansion(&mut e, k as f64 * ulp);
            exact += k as i128;
        }
        let whole = (exact >> 80) as f64;
        let frac = (exact & ((1i128 << 80) - 1)) as f64 * ulp;
        prop_assert_eq!(expansion_value(&e), whole + frac);
        let mut rest = e.clone();
        grow_expansion(&mut rest, -whole);
        prop_assert_eq!(expansion_value(&rest), frac);
    }

    #[test]
    fn coefficients_are_periodic(period in 0.2f64..5.0, mean in -2.0f64..2.0, amp in 0.0f64..2.0,
                                 t in 0.0f64..1.0, r in 0.0f64..10.0, shift in 1i32..4) {
        let spec = format!("dipsin:{mean},{amp},0.3,1.5,0.5,1");
        let field = parse_coefficient(period, &spec).unwrap();
        let t = t * period;
        let later = field.eval(t + f64::from(shift) * period, r);
        prop_assert!((field.eval(t, r) - later).abs() < 1e-9);
    }

    #[test]
    fn logistic_solution_is_a_periodic_orbit(a_mean in 0.2f64..3.0, a_amp in 0.0f64..3.0, b_mean in 0.5f64..2.0,
                                             b_frac in 0.0f64..0.9, phase in 0.0f64..6.0) {
        let a = PeriodicScalarFunction::sinusoid(1.0, a_mean, a_amp, 0.0);
        let b = PeriodicScalarFunction::sinusoid(1.0, b_mean, b_frac * b_mean, phase);
        let sol = solve_periodic_logistic(&a, &b).unwrap();
        let v0 = sol.v.eval(0.0);
        let v1 = rk4_period(&a, &b, v0, 4000);
        prop_assert!((v1 - v0).abs() < 1e-6 * v0.max(1.0), "v0 {} after one period {}", v0, v1);
    }
}

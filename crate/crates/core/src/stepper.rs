//! Implicit steppers for `u_t = A u` with a fixed tridiagonal `A`.
//!
//! Rows of `A` that are identically zero are treated as pinned (Dirichlet)
//! nodes: their new values are supplied by the caller.

use crate::numerics::{ThomasFactor, Tridiagonal};

/// Time discretisation of the linear part.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    CrankNicolson,
    /// Trapezoidal stage followed by BDF2; second order and L-stable.
    TrBdf2,
}

const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;

#[derive(Clone, Debug)]
pub struct LinearStepper {
    scheme: Scheme,
    op: Tridiagonal,
    half: f64,
    first: ThomasFactor,
    second: Option<ThomasFactor>,
    scratch_len: usize,
}

impl LinearStepper {
    pub fn new(op: Tridiagonal, dt: f64, scheme: Scheme) -> Self {
        let n = op.len();
        match scheme {
            Scheme::CrankNicolson => {
                let half = 0.5 * dt;
                let first = ThomasFactor::new(&op.implicit_matrix(half));
                Self {
                    scheme,
                    op,
                    half,
                    first,
                    second: None,
                    scratch_len: n,
                }
            }
            Scheme::TrBdf2 => {
                let half = 0.5 * GAMMA * dt;
                let first = ThomasFactor::new(&op.implicit_matrix(half));
                let w = (1.0 - GAMMA) / (2.0 - GAMMA) * dt;
                let second = Some(ThomasFactor::new(&op.implicit_matrix(w)));
                Self {
                    scheme,
                    op,
                    half,
                    first,
                    second,
                    scratch_len: n,
                }
            }
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Advance `u` by one step. `pinned` lists `(node, new value)` for
    /// Dirichlet rows; the old values are whatever `u` currently holds.
    pub fn step(&self, u: &mut [f64], pinned: &[(usize, f64)], scratch: &mut Vec<f64>) {
        scratch.resize(self.scratch_len, 0.0);
        match self.scheme {
            Scheme::CrankNicolson => {
                self.op.apply_shifted(self.half, u, scratch);
                for &(i, v) in pinned {
                    scratch[i] = v;
                }
                self.first.solve(scratch);
                u.copy_from_slice(scratch);
            }
            Scheme::TrBdf2 => {
                self.op.apply_shifted(self.half, u, scratch);
                for &(i, v) in pinned {
                    scratch[i] = u[i] + GAMMA * (v - u[i]);
                }
                self.first.solve(scratch);
                let c1 = 1.0 / (GAMMA * (2.0 - GAMMA));
                let c0 = (1.0 - GAMMA) * (1.0 - GAMMA) / (GAMMA * (2.0 - GAMMA));
                for (s, x) in scratch.iter_mut().zip(u.iter()) {
                    *s = c1 * *s - c0 * x;
                }
                for &(i, v) in pinned {
                    scratch[i] = v;
                }
                self.second.as_ref().expect("bdf2 factor").solve(scratch);
                u.copy_from_slice(scratch);
            }
        }
    }
}

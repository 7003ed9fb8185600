//! Shared discrete machinery: radial stencils, tridiagonal solves,
//! interpolation and quadrature on uniform grids.

/// Tridiagonal operator `(Lu)_i = lower_i u_{i-1} + diag_i u_i + upper_i u_{i+1}`.
///
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Boundary treatment at the outer node of a radial grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OuterBoundary {
    /// Value pinned (the row becomes an identity row in implicit solves).
    Dirichlet,
    /// Zero flux through a mirrored ghost node.
    ZeroFlux,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Radial Laplacian `u_rr + (N-1)/r u_r` on nodes `r_i = i*dx`, `i = 0..n`.
    ///
    /// At the origin the symmetry condition `u_r = 0` gives `Δu = N u_rr`,
    /// discretised with the mirrored ghost `u_{-1} = u_1`.
    pub fn radial_laplacian(n: usize, dx: f64, dim: u32, outer: OuterBoundary) -> Self {
        assert!(n >= 3, "radial grid needs at least three nodes");
        let mut op = Self::zeros(n);
        let inv_dx2 = 1.0 / (dx * dx);
        let nm1 = f64::from(dim) - 1.0;
        op.diag[0] = -2.0 * f64::from(dim) * inv_dx2;
        op.upper[0] = 2.0 * f64::from(dim) * inv_dx2;
        for i in 1..n - 1 {
            let drift = nm1 / (2.0 * i as f64) * inv_dx2;
            op.lower[i] = inv_dx2 - drift;
            op.diag[i] = -2.0 * inv_dx2;
            op.upper[i] = inv_dx2 + drift;
        }
        match outer {
            OuterBoundary::Dirichlet => {}
            OuterBoundary::ZeroFlux => {
                op.lower[n - 1] = 2.0 * inv_dx2;
                op.diag[n - 1] = -2.0 * inv_dx2;
            }
        }
        op
    }

    /// Apply `u -> (I + scale*L) u` into `out`.
    pub fn apply_shifted(&self, scale: f64, u: &[f64], out: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(u.len(), n);
        if n == 1 {
            out[0] = u[0] + scale * self.diag[0] * u[0];
            return;
        }
        out[0] = u[0] + scale * (self.diag[0] * u[0] + self.upper[0] * u[1]);
        for i in 1..n - 1 {
            out[i] = u[i]
                + scale * (self.lower[i] * u[i - 1] + self.diag[i] * u[i] + self.upper[i] * u[i + 1]);
        }
        out[n - 1] = u[n - 1] + scale * (self.lower[n - 1] * u[n - 2] + self.diag[n - 1] * u[n - 1]);
    }

    /// `(I - scale*L)` as an explicit tridiagonal matrix.
    pub fn implicit_matrix(&self, scale: f64) -> Tridiagonal {
        let n = self.len();
        let mut m = Tridiagonal::zeros(n);
        for i in 0..n {
            m.lower[i] = -scale * self.lower[i];
            m.diag[i] = 1.0 - scale * self.diag[i];
            m.upper[i] = -scale * self.upper[i];
        }
        m
    }
}

/// Thomas-algorithm factorisation of a diagonally dominant tridiagonal matrix,
/// reusable across right-hand sides.
#[derive(Clone, Debug)]
pub struct ThomasFactor {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper_scaled: Vec<f64>,
}

impl ThomasFactor {
    pub fn new(m: &Tridiagonal) -> Self {
        let n = m.len();
        let mut inv_pivot = vec![0.0; n];
        let mut upper_scaled = vec![0.0; n];
        let mut pivot = m.diag[0];
        inv_pivot[0] = 1.0 / pivot;
        upper_scaled[0] = m.upper[0] * inv_pivot[0];
        for i in 1..n {
            pivot = m.diag[i] - m.lower[i] * upper_scaled[i - 1];
            inv_pivot[i] = 1.0 / pivot;
            upper_scaled[i] = m.upper[i] * inv_pivot[i];
        }
        Self {
            lower: m.lower.clone(),
            inv_pivot,
            upper_scaled,
        }
    }

    /// Solve in place.
    pub fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_scaled[i] * rhs[i + 1];
        }
    }
}

/// One-shot tridiagonal solve.
pub fn solve_tridiagonal(m: &Tridiagonal, rhs: &mut [f64]) {
    ThomasFactor::new(m).solve(rhs);
}

/// Linear interpolation of samples on `x_i = i*dx` (`i = 0..n`), clamped to the
/// end values outside the grid.
/// Error-free transformation `a + b = s + e` with `s = fl(a + b)`.
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Adds `b` exactly to a nonoverlapping expansion stored in increasing
/// magnitude, dropping zero components.
pub fn grow_expansion(e: &mut Vec<f64>, b: f64) {
    let mut q = b;
    let mut out = Vec::with_capacity(e.len() + 1);
    for &x in e.iter() {
        let (s, err) = two_sum(q, x);
        if err != 0.0 {
            out.push(err);
        }
        q = s;
    }
    if q != 0.0 || out.is_empty() {
        out.push(q);
    }
    if out.len() > 4 {
        out = compress_expansion(&out);
    }
    *e = out;
}

fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Shewchuk's compression: the same value with every component but the
/// top one carrying a full mantissa.
fn compress_expansion(e: &[f64]) -> Vec<f64> {
    let m = e.len();
    let mut g = vec![0.0; m];
    let mut q = e[m - 1];
    let mut bottom = m - 1;
    for &x in e[..m - 1].iter().rev() {
        let (big, small) = fast_two_sum(q, x);
        if small != 0.0 {
            g[bottom] = big;
            bottom -= 1;
            q = small;
        } else {
            q = big;
        }
    }
    g[bottom] = q;
    let mut out = Vec::with_capacity(m - bottom);
    for &x in &g[bottom + 1..] {
        let (big, small) = fast_two_sum(x, q);
        if small != 0.0 {
            out.push(small);
        }
        q = big;
    }
    out.push(q);
    out
}

/// Nearest double to the exact value of an expansion.
pub fn expansion_value(e: &[f64]) -> f64 {
    e.iter().sum()
}

pub fn interp_uniform(samples: &[f64], dx: f64, x: f64) -> f64 {
    let n = samples.len();
    if x <= 0.0 {
        return samples[0];
    }
    let pos = x / dx;
    let k = pos.floor() as usize;
    if k >= n - 1 {
        return samples[n - 1];
    }
    let w = pos - k as f64;
    samples[k] * (1.0 - w) + samples[k + 1] * w
}

/// Uniform grid of `n` nodes on `[0, length]`.
pub fn uniform_nodes(n: usize, length: f64) -> Vec<f64> {
    let dx = length / (n - 1) as f64;
    (0..n).map(|i| i as f64 * dx).collect()
}

/// Cumulative integral of `f` over `[0, t_k]` on `t_k = k*h`, using Simpson's
/// rule on each cell with the midpoint value `mid[k]` of cell `[t_k, t_{k+1}]`.
pub fn cumulative_simpson(nodes: &[f64], mids: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..nodes.len() - 1 {
        acc += h / 6.0 * (nodes[k] + 4.0 * mids[k] + nodes[k + 1]);
        out.push(acc);
    }
    out
}

/// Second-order one-sided derivative at the last node of a uniform grid.
pub fn one_sided_derivative_end(u: &[f64], dx: f64) -> f64 {
    let n = u.len();
    (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx)
}

/// Second-order one-sided derivative at the first node of a uniform grid.
pub fn one_sided_derivative_start(u: &[f64], dx: f64) -> f64 {
    (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx)
}

pub fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn max_value(u: &[f64]) -> f64 {
    u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_value(u: &[f64]) -> f64 {
    u.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_dense_solution() {
        let m = Tridiagonal {
            lower: vec![0.0, -1.0, -1.0, -1.0],
            diag: vec![4.0, 4.0, 4.0, 4.0],
            upper: vec![-1.0, -1.0, -1.0, 0.0],
        };
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut rhs = vec![0.0; 4];
        for i in 0..4 {
            rhs[i] = m.diag[i] * x[i];
            if i > 0 {
                rhs[i] += m.lower[i] * x[i - 1];
            }
            if i < 3 {
                rhs[i] += m.upper[i] * x[i + 1];
            }
        }
        solve_tridiagonal(&m, &mut rhs);
        for i in 0..4 {
            assert!((rhs[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_flux_laplacian_annihilates_constants() {
        for dim in 1..=3 {
            let op = Tridiagonal::radial_laplacian(50, 0.1, dim, OuterBoundary::ZeroFlux);
            let u = vec![2.5; 50];
            let mut out = vec![0.0; 50];
            op.apply_shifted(1.0, &u, &mut out);
            assert!(sup_diff(&u, &out) < 1e-10);
        }
    }

    #[test]
    fn laplacian_is_exact_on_even_quadratics() {
        // Δ r^2 = 2N in N dimensions
        for dim in 1..=3u32 {
            let n = 40;
            let dx = 0.05;
            let op = Tridiagonal::radial_laplacian(n, dx, dim, OuterBoundary::Dirichlet);
            let u: Vec<f64> = (0..n).map(|i| (i as f64 * dx).powi(2)).collect();
            let mut out = vec![0.0; n];
            op.apply_shifted(1.0, &u, &mut out);
            for i in 0..n - 1 {
                let lap = out[i] - u[i];
                assert!((lap - 2.0 * f64::from(dim)).abs() < 1e-8, "dim {dim} node {i}: {lap}");
            }
        }
    }

    #[test]
    fn interpolation_clamps_and_blends() {
        let s = [0.0, 1.0, 4.0];
        assert_eq!(interp_uniform(&s, 0.5, -1.0), 0.0);
        assert_eq!(interp_uniform(&s, 0.5, 2.0), 4.0);
        assert!((interp_uniform(&s, 0.5, 0.75) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn cumulative_simpson_integrates_cubics_exactly() {
        let h = 0.1;
        let nodes: Vec<f64> = (0..11).map(|k| (k as f64 * h).powi(3)).collect();
        let mids: Vec<f64> = (0..10).map(|k| ((k as f64 + 0.5) * h).powi(3)).collect();
        let c = cumulative_simpson(&nodes, &mids, h);
        assert!((c[10] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn expansion_sums_exactly() {
        let mut e = vec![0.5];
        for k in 0..1000 {
            grow_expansion(&mut e, 1e-40 * (k + 1) as f64);
        }
        assert_eq!(expansion_value(&e), 0.5);
        let mut diff = e.clone();
        grow_expansion(&mut diff, -0.5);
        assert!((expansion_value(&diff) / (1e-40 * 500.0 * 1001.0) - 1.0).abs() < 1e-12);
        assert!(e.len() <= 5, "{e:?}");
    }
}

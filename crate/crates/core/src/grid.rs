//! Uniform space-time mesh, cell projection, nodal interpolation, the
//! discrete Dirichlet Laplacian and its sine eigenbasis.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math::{self, PI, SQRT_2};

/// Default fraction of the explicit stability limit used when a grid picks
/// its own number of time steps: `dt = fraction / (2n)`.
pub const DEFAULT_STABILITY_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("spatial resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error("need at least one time step")]
    NoSteps,
    #[error("horizon must be positive, got {0}")]
    Horizon(f64),
    #[error("time step {dt} violates the explicit stability bound 1/n = {limit}")]
    Unstable { dt: f64, limit: f64 },
    #[error("point {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("mode {j} outside 1..={max}")]
    Mode { j: usize, max: usize },
    #[error("expected {expected} nodal values, got {found}")]
    Length { expected: usize, found: usize },
    #[error("nonzero boundary value {0:e} in strict mode")]
    Boundary(f64),
}

/// Uniform grid: `n` spatial cells on `[0, 1]`, `m` time steps on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub m: usize,
    pub horizon: f64,
}

impl Grid {
    pub fn new(n: usize, m: usize, horizon: f64) -> Result<Grid, GridError> {
        if n < 2 {
            return Err(GridError::Resolution(n));
        }
        if m == 0 {
            return Err(GridError::NoSteps);
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(GridError::Horizon(horizon));
        }
        let g = Grid { n, m, horizon };
        // leapfrog: dt * omega_max < 2 with omega_max < 2n
        let limit = 1.0 / n as f64;
        if g.dt() > limit {
            return Err(GridError::Unstable { dt: g.dt(), limit });
        }
        Ok(g)
    }

    /// Grid whose time step is `fraction / (2n)` or slightly smaller.
    pub fn with_fraction(n: usize, horizon: f64, fraction: f64) -> Result<Grid, GridError> {
        let m = libm::ceil(horizon * 2.0 * n as f64 / fraction).max(1.0) as usize;
        Grid::new(n, m, horizon)
    }

    pub fn with_default_steps(n: usize, horizon: f64) -> Result<Grid, GridError> {
        Grid::with_fraction(n, horizon, DEFAULT_STABILITY_FRACTION)
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / self.m as f64
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        if i == self.m {
            self.horizon
        } else {
            self.horizon * i as f64 / self.m as f64
        }
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        node(self.n, k)
    }

    /// Measure of one space-time cell.
    #[inline]
    pub fn cell_measure(&self) -> f64 {
        self.dt() / self.n as f64
    }
}

/// Node `k / n`; exact at both ends.
#[inline]
pub fn node(n: usize, k: usize) -> f64 {
    if k == n {
        1.0
    } else {
        k as f64 / n as f64
    }
}

/// Index of the cell containing `z`, with `z = 1` mapped to `n`.
#[inline]
pub fn cell_index(n: usize, z: f64) -> usize {
    let mut k = (math::floor(z * n as f64).max(0.0) as usize).min(n);
    // z * n can round across an integer; settle against the exact nodes
    while k < n && node(n, k + 1) <= z {
        k += 1;
    }
    while k > 0 && node(n, k) > z {
        k -= 1;
    }
    k
}

/// `κ_n(z) = ⌊zn⌋ / n`.
pub fn kappa(n: usize, z: f64) -> Result<f64, GridError> {
    if !(0.0..=1.0).contains(&z) {
        return Err(GridError::OutOfRange(z));
    }
    Ok(node(n, cell_index(n, z)))
}

/// Evaluates the polygonal interpolant of nodal `values` (length `n + 1`) at `x`.
pub fn interpolate(values: &[f64], x: f64) -> f64 {
    let n = values.len() - 1;
    let k = cell_index(n, x.clamp(0.0, 1.0));
    if k == n {
        return values[n];
    }
    let frac = x * n as f64 - k as f64;
    values[k] + frac * (values[k + 1] - values[k])
}

/// Nodal values together with the polygonal evaluation rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn from_nodal(values: Vec<f64>) -> PiecewiseLinear {
        assert!(values.len() >= 2, "at least two nodes");
        PiecewiseLinear { values }
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        interpolate(&self.values, x)
    }
}

/// `Π_n(w)`: polygonal interpolation of `w` at the nodes `k / n`.
pub fn pi_n(n: usize, w: impl Fn(f64) -> f64) -> PiecewiseLinear {
    PiecewiseLinear::from_nodal((0..=n).map(|k| w(node(n, k))).collect())
}

/// Sine eigenfunction `φ_j(x) = √2 sin(jπx)`.
#[inline]
pub fn phi(j: usize, x: f64) -> f64 {
    SQRT_2 * math::sin(j as f64 * PI * x)
}

/// `φ_j(k/n)` with the argument reduced exactly modulo `2π`.
#[inline]
pub fn phi_node(n: usize, j: usize, k: usize) -> f64 {
    let r = (j * k) % (2 * n);
    SQRT_2 * math::sin(PI * r as f64 / n as f64)
}

/// `c_j^n = sin²(jπ/2n) / (jπ/2n)²` without range checks.
#[inline]
pub fn eigenfactor_unchecked(n: usize, j: usize) -> f64 {
    let a = j as f64 * PI / (2.0 * n as f64);
    let s = math::sin(a) / a;
    s * s
}

pub fn eigenfactor(n: usize, j: usize) -> Result<f64, GridError> {
    if j == 0 || j >= n {
        return Err(GridError::Mode {
            j,
            max: n.saturating_sub(1),
        });
    }
    Ok(eigenfactor_unchecked(n, j))
}

/// Angular frequency `jπ√c_j^n = 2n sin(jπ/2n)` of mode `j`.
#[inline]
pub fn mode_frequency(n: usize, j: usize) -> f64 {
    2.0 * n as f64 * math::sin(j as f64 * PI / (2.0 * n as f64))
}

/// Writes `n²(w_{k-1} - 2w_k + w_{k+1})` into the interior of `out`; the
/// boundary entries of `out` are set to zero.
#[inline]
pub fn laplacian_into(w: &[f64], out: &mut [f64]) {
    let n = w.len() - 1;
    let n2 = (n * n) as f64;
    out[0] = 0.0;
    out[n] = 0.0;
    for k in 1..n {
        out[k] = n2 * (w[k - 1] - 2.0 * w[k] + w[k + 1]);
    }
}

/// Discrete Dirichlet Laplacian on nodal values. With `strict`, nonzero
/// boundary entries are rejected; otherwise they are used as given.
pub fn discrete_laplacian(n: usize, w: &[f64], strict: bool) -> Result<Vec<f64>, GridError> {
    if w.len() != n + 1 {
        return Err(GridError::Length {
            expected: n + 1,
            found: w.len(),
        });
    }
    if strict {
        for &b in &[w[0], w[n]] {
            if b != 0.0 {
                return Err(GridError::Boundary(b));
            }
        }
    }
    let mut out = vec![0.0; n + 1];
    laplacian_into(w, &mut out);
    Ok(out)
}

/// `|∫ Δ_n u · v∘κ_n − ∫ u∘κ_n · Δ_n v|`, both integrals as exact cell sums.
pub fn ibp_check(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() - 1;
    let mut lu = vec![0.0; n + 1];
    let mut lv = vec![0.0; n + 1];
    laplacian_into(u, &mut lu);
    laplacian_into(v, &mut lv);
    // Δ_n vanishes on the first cell; cells 1..n-1 carry nodal values.
    let mut left = 0.0;
    let mut right = 0.0;
    for k in 1..n {
        left += lu[k] * v[k];
        right += u[k] * lv[k];
    }
    ((left - right) / n as f64).abs()
}

/// `(1/n) Σ_{k=1}^{n-1} φ_j(k/n) φ_l(k/n)`.
pub fn discrete_inner(n: usize, j: usize, l: usize) -> f64 {
    (1..n).map(|k| phi_node(n, j, k) * phi_node(n, l, k)).sum::<f64>() / n as f64
}

/// Max error of the eigenrelation `Δ_n φ_j = -j²π²c_j^n φ_j` over nodes and modes.
pub fn eigenrelation_error(n: usize) -> f64 {
    let mut worst = 0.0_f64;
    let mut lap = vec![0.0; n + 1];
    for j in 1..n {
        let w: Vec<f64> = (0..=n).map(|k| phi_node(n, j, k)).collect();
        laplacian_into(&w, &mut lap);
        let lambda = (j * j) as f64 * PI * PI * eigenfactor_unchecked(n, j);
        for k in 1..n {
            worst = worst.max((lap[k] + lambda * w[k]).abs());
        }
    }
    worst
}

/// Max deviation of the discrete Gram matrix of `φ_1..φ_{n-1}` from the identity.
pub fn orthonormality_error(n: usize) -> f64 {
    let mut worst = 0.0_f64;
    for j in 1..n {
        for l in j..n {
            let target = if j == l { 1.0 } else { 0.0 };
            worst = worst.max((discrete_inner(n, j, l) - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_floor_convention() {
        assert_eq!(kappa(10, 0.37).unwrap(), 0.3);
        assert_eq!(kappa(4, 1.0).unwrap(), 1.0);
        assert_eq!(kappa(7, 0.999).unwrap(), 6.0 / 7.0);
        assert_eq!(kappa(8, 0.0).unwrap(), 0.0);
        assert!(kappa(4, 1.5).is_err());
        assert!(kappa(4, -0.1).is_err());
    }

    #[test]
    fn nodes_are_exact() {
        for n in 2..40 {
            for k in 0..=n {
                assert_eq!(kappa(n, node(n, k)).unwrap(), node(n, k));
            }
        }
    }

    #[test]
    fn interpolation_cases() {
        let p = pi_n(2, |x| x * x);
        assert_eq!(p.eval(0.25), 0.125);
        let affine = pi_n(7, |x| 3.0 * x - 1.0);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((affine.eval(x) - (3.0 * x - 1.0)).abs() < 1e-14);
        }
        // idempotence
        let w = pi_n(5, |x| libm::sin(7.0 * x));
        let ww = pi_n(5, |x| w.eval(x));
        assert_eq!(w, ww);
        for k in 0..=5 {
            assert_eq!(w.eval(node(5, k)), w.values()[k]);
        }
    }

    #[test]
    fn eigenfactor_cases() {
        assert!((eigenfactor(2, 1).unwrap() - 8.0 / (PI * PI)).abs() < 1e-15);
        assert!((eigenfactor(2, 1).unwrap() - 0.8105694691).abs() < 1e-10);
        for n in [100, 250, 1000] {
            assert!(eigenfactor(n, 1).unwrap() >= 1.0 - 1e-3);
        }
        for n in 2..=64 {
            for j in 1..n {
                let c = eigenfactor(n, j).unwrap();
                assert!(c >= 4.0 / (PI * PI) && c <= 1.0, "n={n} j={j} c={c}");
            }
        }
        assert!(eigenfactor(4, 0).is_err());
        assert!(eigenfactor(4, 4).is_err());
    }

    #[test]
    fn frequency_matches_eigenfactor() {
        for n in [3, 8, 33] {
            for j in 1..n {
                let direct = j as f64 * PI * libm::sqrt(eigenfactor_unchecked(n, j));
                assert!((mode_frequency(n, j) - direct).abs() < 1e-12 * direct);
                assert!(mode_frequency(n, j) < 2.0 * n as f64);
            }
        }
    }

    #[test]
    fn laplacian_cases() {
        let zero = vec![0.0; 9];
        assert_eq!(discrete_laplacian(8, &zero, true).unwrap(), zero);
        // n = 4, φ_1 at nodes
        let w: Vec<f64> = (0..=4).map(|k| phi(1, node(4, k))).collect();
        let lap = discrete_laplacian(4, &w, false).unwrap();
        let c = math::powi(libm::sin(PI / 8.0), 2) / math::powi(PI / 8.0, 2);
        for k in 1..4 {
            assert!((lap[k] + PI * PI * c * w[k]).abs() < 1e-12);
        }
        assert!(matches!(
            discrete_laplacian(2, &[1.0, 0.0, 0.0], true),
            Err(GridError::Boundary(_))
        ));
        assert!(matches!(
            discrete_laplacian(2, &[0.0, 0.0], true),
            Err(GridError::Length { .. })
        ));
    }

    #[test]
    fn exact_identities() {
        for n in [2, 4, 8, 16, 32, 64] {
            assert!(eigenrelation_error(n) <= 1e-10, "n={n}");
            assert!(orthonormality_error(n) <= 1e-12, "n={n}");
        }
    }

    #[test]
    fn ibp_on_eigenvectors() {
        let n = 16;
        let u: Vec<f64> = (0..=n).map(|k| phi(1, node(n, k))).collect();
        let v: Vec<f64> = (0..=n).map(|k| phi(2, node(n, k))).collect();
        assert!(ibp_check(&u, &v) <= 1e-12);
        assert_eq!(ibp_check(&u, &u), 0.0);
    }

    #[test]
    fn grid_stability_guard() {
        assert!(Grid::new(8, 8, 1.0).is_ok());
        assert!(matches!(Grid::new(8, 7, 1.0), Err(GridError::Unstable { .. })));
        let g = Grid::with_default_steps(8, 1.0).unwrap();
        assert_eq!(g.m, 32);
        assert_eq!(g.time(g.m), 1.0);
        assert!(Grid::new(1, 8, 1.0).is_err());
    }
}

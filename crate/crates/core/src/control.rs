//! Space-time controls: piecewise constant on grid cells, plus smooth random
//! profiles that can be discretized on any grid.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::grid::{cell_index, Grid};
use crate::math::{self, PI};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("expected {expected} cell values, got {found}")]
    Length { expected: usize, found: usize },
    #[error("non-finite cell value at time cell {i}, space cell {k}")]
    NonFinite { i: usize, k: usize },
    #[error("grid {from_n}x{from_m} does not refine into {to_n}x{to_m}")]
    Refinement {
        from_n: usize,
        from_m: usize,
        to_n: usize,
        to_m: usize,
    },
    #[error("controls live on different grids")]
    GridMismatch,
}

/// Cell values `h[i][k]` on `[t_i, t_{i+1}) × [k/n, (k+1)/n)`, row-major in `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    grid: Grid,
    values: Vec<f64>,
    norm_sq: f64,
}

impl Control {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Control, ControlError> {
        let expected = grid.m * grid.n;
        if values.len() != expected {
            return Err(ControlError::Length {
                expected,
                found: values.len(),
            });
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(ControlError::NonFinite {
                i: p / grid.n,
                k: p % grid.n,
            });
        }
        let norm_sq = values.iter().map(|v| v * v).sum::<f64>() * grid.cell_measure();
        Ok(Control {
            grid,
            values,
            norm_sq,
        })
    }

    pub fn zeros(grid: Grid) -> Control {
        Control {
            grid,
            values: vec![0.0; grid.m * grid.n],
            norm_sq: 0.0,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(usize, usize) -> f64) -> Result<Control, ControlError> {
        let mut values = Vec::with_capacity(grid.m * grid.n);
        for i in 0..grid.m {
            for k in 0..grid.n {
                values.push(f(i, k));
            }
        }
        Control::new(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Control, ControlError> {
        Control::new(grid, vec![c; grid.m * grid.n])
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.grid.n + k]
    }

    /// Space cells of time cell `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.n;
        &self.values[i * n..(i + 1) * n]
    }

    /// `‖h‖²_{L²}` as an exact cell sum.
    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm_sq)
    }

    /// `½‖h‖²`.
    pub fn action(&self) -> f64 {
        0.5 * self.norm_sq
    }

    /// Value at `(t, x)`; `t = T` and `x = 1` fall into the last cells.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let dt = self.grid.dt();
        let i = ((math::floor(t / dt)).max(0.0) as usize).min(self.grid.m - 1);
        let k = cell_index(self.grid.n, x.clamp(0.0, 1.0)).min(self.grid.n - 1);
        self.get(i, k)
    }

    pub fn scaled(&self, c: f64) -> Control {
        Control {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            norm_sq: self.norm_sq * c * c,
        }
    }

    pub fn sub(&self, other: &Control) -> Result<Control, ControlError> {
        if self.grid != other.grid {
            return Err(ControlError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Control::new(self.grid, values)
    }

    pub fn distance(&self, other: &Control) -> Result<f64, ControlError> {
        Ok(self.sub(other)?.norm())
    }

    /// Copy of `self` with the inert first space cell set to zero.
    pub fn without_first_cell(&self) -> Control {
        let n = self.grid.n;
        let mut values = self.values.clone();
        for i in 0..self.grid.m {
            values[i * n] = 0.0;
        }
        Control::new(self.grid, values).expect("same shape")
    }

    /// The same function on a refined grid; `target.n` and `target.m` must be
    /// multiples of the current ones and the horizon must agree.
    pub fn embed(&self, target: Grid) -> Result<Control, ControlError> {
        let g = self.grid;
        let ok = target.horizon == g.horizon
            && target.n >= g.n
            && target.m >= g.m
            && target.n % g.n == 0
            && target.m % g.m == 0;
        if !ok {
            return Err(ControlError::Refinement {
                from_n: g.n,
                from_m: g.m,
                to_n: target.n,
                to_m: target.m,
            });
        }
        let rn = target.n / g.n;
        let rm = target.m / g.m;
        Control::from_fn(target, |i, k| self.get(i / rm, k / rn))
    }
}

/// Smooth random field
/// `h(t, x) = Σ_{p<P, q≤Q} [α_pq cos(pπt/T) + β_pq sin((p+1)πt/T)] sin(qπx) / ((p+1) q)`
/// multiplied by a global scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProfile {
    horizon: f64,
    /// `(p, q, α, β)`
    terms: Vec<(usize, usize, f64, f64)>,
    scale: f64,
}

impl ControlProfile {
    pub fn random(horizon: f64, time_modes: usize, space_modes: usize, rng: &mut impl Rng) -> ControlProfile {
        let mut terms = Vec::with_capacity(time_modes * space_modes);
        for p in 0..time_modes {
            for q in 1..=space_modes {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                terms.push((p, q, a, b));
            }
        }
        ControlProfile {
            horizon,
            terms,
            scale: 1.0,
        }
    }

    pub fn zero(horizon: f64) -> ControlProfile {
        ControlProfile {
            horizon,
            terms: Vec::new(),
            scale: 0.0,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn scaled(&self, c: f64) -> ControlProfile {
        ControlProfile {
            scale: self.scale * c,
            ..self.clone()
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let w = PI / self.horizon;
        self.terms
            .iter()
            .map(|&(p, q, a, b)| {
                let pt = (a * math::cos(p as f64 * w * t) + b * math::sin((p + 1) as f64 * w * t))
                    / ((p + 1) * q) as f64;
                pt * math::sin(q as f64 * PI * x)
            })
            .sum::<f64>()
            * self.scale
    }

    /// Exact cell averages on `grid`. The first space cell is set to zero:
    /// it never drives the discrete system, so its value could not be
    /// recovered from a path.
    pub fn discretize(&self, grid: Grid) -> Control {
        assert_eq!(grid.horizon, self.horizon, "profile and grid horizons differ");
        let (n, m) = (grid.n, grid.m);
        let w = PI / self.horizon;
        let dt = grid.dt();
        let dx = grid.dx();
        let mut values = vec![0.0; n * m];
        for &(p, q, a, b) in &self.terms {
            let time_avg: Vec<f64> = (0..m)
                .map(|i| {
                    let (t0, t1) = (grid.time(i), grid.time(i + 1));
                    let c = if p == 0 {
                        1.0
                    } else {
                        let f = p as f64 * w;
                        (math::sin(f * t1) - math::sin(f * t0)) / (f * dt)
                    };
                    let f = (p + 1) as f64 * w;
                    let s = (math::cos(f * t0) - math::cos(f * t1)) / (f * dt);
                    (a * c + b * s) / ((p + 1) * q) as f64
                })
                .collect();
            let fq = q as f64 * PI;
            let space_avg: Vec<f64> = (0..n)
                .map(|k| {
                    if k == 0 {
                        0.0
                    } else {
                        (math::cos(fq * grid.node(k)) - math::cos(fq * grid.node(k + 1))) / (fq * dx)
                    }
                })
                .collect();
            for i in 0..m {
                for k in 0..n {
                    values[i * n + k] += time_avg[i] * space_avg[k];
                }
            }
        }
        values.iter_mut().for_each(|v| *v *= self.scale);
        Control::new(grid, values).expect("finite profile")
    }

    /// Discretize and, if the result leaves the ball of radius `a`, project
    /// it radially onto the sphere.
    pub fn discretize_in_ball(&self, grid: Grid, a: f64) -> Control {
        let h = self.discretize(grid);
        let norm = h.norm();
        if norm > a {
            h.scaled(a / norm)
        } else {
            h
        }
    }
}

/// Reference grid used to normalize profiles drawn by [`BallSampler`].
const NORMALIZATION_N: usize = 256;

/// Deterministic generator of controls in the ball `{‖h‖ ≤ a}`.
#[derive(Debug, Clone)]
pub struct BallSampler {
    radius: f64,
    horizon: f64,
    rng: ChaCha8Rng,
    pub time_modes: usize,
    pub space_modes: usize,
}

impl BallSampler {
    pub fn new(radius: f64, horizon: f64, seed: u64) -> BallSampler {
        assert!(radius > 0.0 && radius.is_finite(), "radius must be positive");
        BallSampler {
            radius,
            horizon,
            rng: ChaCha8Rng::seed_from_u64(seed),
            time_modes: 3,
            space_modes: 4,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Profile whose norm on a fine reference grid is `r·a`, `r` uniform in `[1/2, 1]`.
    pub fn next_profile(&mut self) -> ControlProfile {
        let profile = ControlProfile::random(self.horizon, self.time_modes, self.space_modes, &mut self.rng);
        let r: f64 = 0.5 + 0.5 * self.rng.random::<f64>();
        let fine = Grid::with_default_steps(NORMALIZATION_N, self.horizon).expect("reference grid");
        let norm = profile.discretize(fine).norm();
        profile.scaled(r * self.radius / norm)
    }

    /// One control on `grid` with `‖h‖ ≤ a`.
    pub fn sample(&mut self, grid: Grid) -> Control {
        let radius = self.radius;
        self.next_profile().discretize_in_ball(grid, radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_cell_sum() {
        let g = Grid::new(2, 2, 1.0).unwrap();
        let h = Control::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((h.action() - 3.75).abs() < 1e-15);
        assert_eq!(Control::zeros(g).action(), 0.0);
        let c = Control::constant(Grid::new(4, 8, 2.0).unwrap(), 0.3).unwrap();
        assert!((c.action() - 0.5 * 0.09 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn embedding_preserves_values_and_norm() {
        let mut s = BallSampler::new(1.0, 1.0, 5);
        let g = Grid::with_default_steps(8, 1.0).unwrap();
        let h = s.sample(g);
        let fine = Grid::new(32, g.m * 4, 1.0).unwrap();
        let e = h.embed(fine).unwrap();
        assert!((e.norm_sq() - h.norm_sq()).abs() < 1e-14);
        for &(t, x) in &[(0.1, 0.3), (0.77, 0.9), (0.5, 0.51)] {
            assert_eq!(e.eval(t, x), h.eval(t, x));
        }
        assert!(h.embed(Grid::new(12, g.m, 1.0).unwrap()).is_err());
    }

    #[test]
    fn sampler_stays_in_ball_and_is_deterministic() {
        let g = Grid::with_default_steps(16, 1.0).unwrap();
        let mut a = BallSampler::new(2.0, 1.0, 9);
        let mut b = BallSampler::new(2.0, 1.0, 9);
        for _ in 0..10 {
            let ha = a.sample(g);
            let hb = b.sample(g);
            assert_eq!(ha, hb);
            assert!(ha.norm() <= 2.0 + 1e-12);
            assert!(ha.norm() > 0.0);
            assert!((0..g.m).all(|i| ha.get(i, 0) == 0.0));
        }
    }

    #[test]
    fn discretization_matches_midpoint_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ControlProfile::random(1.5, 3, 4, &mut rng);
        let g = Grid::new(6, 12, 1.5).unwrap();
        let h = p.discretize(g);
        // 2D composite midpoint rule inside one cell
        let (i, k) = (5, 3);
        let q = 400;
        let mut acc = 0.0;
        for a in 0..q {
            for b in 0..q {
                let t = g.time(i) + (a as f64 + 0.5) / q as f64 * g.dt();
                let x = g.node(k) + (b as f64 + 0.5) / q as f64 * g.dx();
                acc += p.eval(t, x);
            }
        }
        acc /= (q * q) as f64;
        assert!((acc - h.get(i, k)).abs() < 1e-6, "{acc} {}", h.get(i, k));
    }
}

//! Nodal trajectories of the discrete system.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{interpolate, Grid};
use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("expected {expected} values, got {found}")]
    Length { expected: usize, found: usize },
    #[error("paths live on different grids")]
    GridMismatch,
}

/// Positions `f_k(t_i)` and velocities `f_k'(t_i)` for `i = 0..=m`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    grid: Grid,
    pos: Vec<f64>,
    vel: Vec<f64>,
}

impl DiscretePath {
    pub fn new(grid: Grid, pos: Vec<f64>, vel: Vec<f64>) -> Result<DiscretePath, PathError> {
        let expected = (grid.m + 1) * (grid.n + 1);
        for v in [&pos, &vel] {
            if v.len() != expected {
                return Err(PathError::Length {
                    expected,
                    found: v.len(),
                });
            }
        }
        Ok(DiscretePath { grid, pos, vel })
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn position(&self, i: usize) -> &[f64] {
        let w = self.grid.n + 1;
        &self.pos[i * w..(i + 1) * w]
    }

    #[inline]
    pub fn velocity(&self, i: usize) -> &[f64] {
        let w = self.grid.n + 1;
        &self.vel[i * w..(i + 1) * w]
    }

    pub fn positions(&self) -> &[f64] {
        &self.pos
    }

    pub fn velocities(&self) -> &[f64] {
        &self.vel
    }

    /// `Π_n(f(T, ·))(x)`.
    pub fn terminal_value(&self, x: f64) -> f64 {
        interpolate(self.position(self.grid.m), x)
    }

    /// Time cell containing `t` and the local coordinate in `[0, 1]`.
    fn locate(&self, t: f64) -> (usize, f64) {
        let dt = self.grid.dt();
        let t = t.clamp(0.0, self.grid.horizon);
        let i = ((math::floor(t / dt)) as usize).min(self.grid.m - 1);
        let s = ((t - self.grid.time(i)) / dt).clamp(0.0, 1.0);
        (i, s)
    }

    /// Cubic Hermite value and time derivative of node `k` at local coordinate `s` in cell `i`.
    fn hermite(&self, i: usize, s: f64, k: usize) -> (f64, f64) {
        let dt = self.grid.dt();
        let (p0, p1) = (self.position(i)[k], self.position(i + 1)[k]);
        let (v0, v1) = (self.velocity(i)[k] * dt, self.velocity(i + 1)[k] * dt);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * s2 - 2.0 * s;
        let value = h00 * p0 + h10 * v0 + h01 * p1 + h11 * v1;
        let rate = (d00 * p0 + d10 * v0 + d01 * p1 + d11 * v1) / dt;
        (value, rate)
    }

    /// Nodal position and velocity at time `t`.
    pub fn section(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let (i, s) = self.locate(t);
        (0..=self.grid.n).map(|k| self.hermite(i, s, k)).unzip()
    }

    fn space_weights(&self, x: f64) -> (usize, f64) {
        let n = self.grid.n;
        let y = x.clamp(0.0, 1.0) * n as f64;
        let k = (math::floor(y) as usize).min(n - 1);
        (k, y - k as f64)
    }

    /// `f(t, x)`: Hermite in time, piecewise linear in space.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let (i, s) = self.locate(t);
        let (k, w) = self.space_weights(x);
        let a = self.hermite(i, s, k).0;
        let b = self.hermite(i, s, k + 1).0;
        a + w * (b - a)
    }

    /// `∂_t f(t, x)`.
    pub fn eval_rate(&self, t: f64, x: f64) -> f64 {
        let (i, s) = self.locate(t);
        let (k, w) = self.space_weights(x);
        let a = self.hermite(i, s, k).1;
        let b = self.hermite(i, s, k + 1).1;
        a + w * (b - a)
    }

    /// Max of `|f|` over stored grid values.
    pub fn sup_norm(&self) -> f64 {
        math::max_abs(&self.pos)
    }

    /// Max of `|f - g|` over the stored grid values of two paths on one grid.
    pub fn sup_distance(&self, other: &DiscretePath) -> Result<f64, PathError> {
        if self.grid != other.grid {
            return Err(PathError::GridMismatch);
        }
        Ok(self
            .pos
            .iter()
            .zip(&other.pos)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Max of `|f - g|` over the space-time lattice `t = jT/mt`, `x = k/nx`.
    pub fn sup_distance_on(&self, other: &DiscretePath, mt: usize, nx: usize) -> f64 {
        let horizon = self.grid.horizon;
        let mut best = 0.0_f64;
        for j in 0..=mt {
            let t = horizon * j as f64 / mt as f64;
            for k in 0..=nx {
                let x = k as f64 / nx as f64;
                best = best.max((self.eval(t, x) - other.eval(t, x)).abs());
            }
        }
        best
    }
}

/// Max over `pairs` random point pairs of
/// `|f(t,x) - f(s,y)| / (|x - y|^{1/2} + |t - s|^{1/2})`.
pub fn holder_half_ratio(path: &DiscretePath, pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = path.grid().horizon;
    let mut best = 0.0_f64;
    let mut drawn = 0;
    while drawn < pairs {
        let t: f64 = rng.random::<f64>() * horizon;
        let s: f64 = rng.random::<f64>() * horizon;
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        let d = math::sqrt((x - y).abs()) + math::sqrt((t - s).abs());
        if d == 0.0 {
            continue;
        }
        drawn += 1;
        best = best.max((path.eval(t, x) - path.eval(s, y)).abs() / d);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cubic_path() -> DiscretePath {
        // f_k(t) = (t³ + 2t) · k(n - k), exactly representable by Hermite cubics
        let g = Grid::new(4, 5, 1.0).unwrap();
        let mut pos = vec![];
        let mut vel = vec![];
        for i in 0..=g.m {
            let t = g.time(i);
            for k in 0..=g.n {
                let c = (k * (g.n - k)) as f64;
                pos.push((t * t * t + 2.0 * t) * c);
                vel.push((3.0 * t * t + 2.0) * c);
            }
        }
        DiscretePath::new(g, pos, vel).unwrap()
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let p = cubic_path();
        for &t in &[0.0, 0.13, 0.5, 0.91, 1.0] {
            for k in 0..=4 {
                let x = k as f64 / 4.0;
                let c = (k * (4 - k)) as f64;
                assert!((p.eval(t, x) - (t * t * t + 2.0 * t) * c).abs() < 1e-12);
                assert!((p.eval_rate(t, x) - (3.0 * t * t + 2.0) * c).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn spatial_sections_are_polygonal() {
        let p = cubic_path();
        let (sec, _) = p.section(0.37);
        for &x in &[0.1, 0.33, 0.8] {
            assert!((p.eval(0.37, x) - interpolate(&sec, x)).abs() < 1e-13);
        }
    }

    #[test]
    fn holder_ratio_is_deterministic() {
        let p = cubic_path();
        let a = holder_half_ratio(&p, 500, 4);
        assert_eq!(a, holder_half_ratio(&p, 500, 4));
        assert!(a > 0.0 && a.is_finite());
    }
}

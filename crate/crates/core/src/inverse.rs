//! Closed-form inverse of `Υⁿ` and the terminal-value modification.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::control::{Control, ControlError};
use crate::expr::EvalError;
use crate::path::{DiscretePath, PathError};
use crate::problem::ProblemSpec;
use crate::skeleton::{forcing_into, initial_state, Propagator};

/// Default tolerance for the membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Violations of the conditions defining the path class `ℳ_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipReport {
    /// Max |f(0,·) − Π_n(u0)| over nodes.
    pub initial_position: f64,
    /// Max |∂_t f(0,·) − Π_n(v0)| over nodes.
    pub initial_velocity: f64,
    /// Max |f| and |∂_t f| at the boundary nodes.
    pub boundary: f64,
    /// Max deviation from the polygonal interpolant; zero for nodal storage.
    pub polygonal: f64,
    /// Max |∂_t f(t_{i+1}) − ∂_t f(t_i)| / dt, a proxy for `∂_t² f ∈ L²`.
    pub acceleration: f64,
    pub tol: f64,
}

impl MembershipReport {
    pub fn initial_position_ok(&self) -> bool {
        self.initial_position <= self.tol
    }

    pub fn initial_velocity_ok(&self) -> bool {
        self.initial_velocity <= self.tol
    }

    pub fn boundary_ok(&self) -> bool {
        self.boundary <= self.tol
    }

    pub fn polygonal_ok(&self) -> bool {
        self.polygonal <= self.tol
    }

    pub fn time_regular(&self) -> bool {
        self.acceleration.is_finite()
    }

    pub fn passed(&self) -> bool {
        self.initial_position_ok()
            && self.initial_velocity_ok()
            && self.boundary_ok()
            && self.polygonal_ok()
            && self.time_regular()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InverseError {
    #[error("path is not in the admissible class: {0:?}")]
    NotAdmissible(MembershipReport),
    #[error("|sigma| = {value:e} below floor {floor:e} at time point {i}, node {k}")]
    SigmaFloor { i: usize, k: usize, value: f64, floor: f64 },
    #[error("coefficient evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("bump needs 1/n <= kappa_n(x0) <= (n-2)/n; got n = {n}, kappa = {kappa}")]
    BumpSupport { n: usize, kappa: f64 },
    #[error("terminal value is not finite")]
    NonFiniteTerminal,
    #[error("control and path grids differ")]
    GridMismatch,
}

pub fn check_membership(spec: &ProblemSpec, f: &DiscretePath, tol: f64) -> Result<MembershipReport, EvalError> {
    let g = f.grid();
    let n = g.n;
    let (u0, v0) = initial_state(spec, n)?;
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let mut boundary = 0.0_f64;
    let mut acceleration = 0.0_f64;
    for i in 0..=g.m {
        let (p, v) = (f.position(i), f.velocity(i));
        for w in [p[0], p[n], v[0], v[n]] {
            boundary = boundary.max(w.abs());
        }
        if i < g.m {
            let next = f.velocity(i + 1);
            for k in 0..=n {
                let a = ((next[k] - v[k]) / g.dt()).abs();
                acceleration = if a.is_finite() { acceleration.max(a) } else { f64::INFINITY };
            }
        }
        if p.iter().chain(v).any(|x| !x.is_finite()) {
            acceleration = f64::INFINITY;
        }
    }
    Ok(MembershipReport {
        initial_position: diff(f.position(0), &u0),
        initial_velocity: diff(f.velocity(0), &v0),
        boundary,
        polygonal: 0.0,
        acceleration,
        tol,
    })
}

/// `h` such that one split step per control cell maps `(f_i, ∂_t f_i)` to
/// `(f_{i+1}, ∂_t f_{i+1})`:
///
/// `h_i = [2((v⁻ − v_i) + (v_{i+1} − v⁺))/dt − b(f_i) − b(f_{i+1})] / (σ(f_i) + σ(f_{i+1}))`
///
/// with `v⁻ = S⁻¹(f_{i+1} − C f_i)` and `v⁺ = −L f_i + C v⁻`. The first space
/// cell does not drive any node; it receives `−b(0)/σ(0)`, the value of the
/// pointwise formula where `Δ_n f` and `∂_t² f` vanish.
pub fn invert_upsilon_n(spec: &ProblemSpec, f: &DiscretePath, sigma_floor: f64) -> Result<Control, InverseError> {
    let report = check_membership(spec, f, MEMBERSHIP_TOL)?;
    if !report.passed() {
        return Err(InverseError::NotAdmissible(report));
    }
    let g = f.grid();
    let (n, m) = (g.n, g.m);
    let dt = g.dt();
    let prop = Propagator::new(n, dt);
    let sigma_at = |i: usize, k: usize, x: f64| -> Result<f64, InverseError> {
        let value = spec.sigma.eval(x)?;
        if value.abs() < sigma_floor {
            return Err(InverseError::SigmaFloor {
                i,
                k,
                value: value.abs(),
                floor: sigma_floor,
            });
        }
        Ok(value)
    };
    let first_cell = -spec.b.eval(0.0)? / sigma_at(0, 0, 0.0)?;
    let mut values = vec![0.0; m * n];
    let mut delta = vec![0.0; n + 1];
    let mut vm = vec![0.0; n + 1];
    let mut lf = vec![0.0; n + 1];
    let mut cv = vec![0.0; n + 1];
    let mut cf = vec![0.0; n + 1];
    for i in 0..m {
        let (f0, f1) = (f.position(i), f.position(i + 1));
        let (v0, v1) = (f.velocity(i), f.velocity(i + 1));
        prop.apply_c(f0, &mut cf);
        for k in 0..=n {
            delta[k] = f1[k] - cf[k];
        }
        prop.apply_s_inv(&delta, &mut vm);
        prop.apply_l(f0, &mut lf);
        prop.apply_c(&vm, &mut cv);
        values[i * n] = first_cell;
        for k in 1..n {
            let vp = cv[k] - lf[k];
            let kicks = 2.0 * ((vm[k] - v0[k]) + (v1[k] - vp)) / dt;
            let num = kicks - spec.b.eval(f0[k])? - spec.b.eval(f1[k])?;
            let den = sigma_at(i, k, f0[k])? + sigma_at(i + 1, k, f1[k])?;
            values[i * n + k] = num / den;
        }
    }
    Ok(Control::new(g, values)?)
}

/// Piecewise-cubic bump equal to `amp` on `[κ, κ + 1/n]`, vanishing at 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub n: usize,
    pub kappa: f64,
    pub amp: f64,
}

impl Bump {
    /// Plateau on the cell containing `x0`.
    pub fn new(n: usize, x0: f64, amp: f64) -> Result<Bump, InverseError> {
        let k = crate::grid::cell_index(n, x0);
        let kappa = crate::grid::node(n, k);
        if k < 1 || k + 2 > n {
            return Err(InverseError::BumpSupport { n, kappa });
        }
        Ok(Bump { n, kappa, amp })
    }

    fn right(&self) -> f64 {
        self.kappa + 1.0 / self.n as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (kappa, right) = (self.kappa, self.right());
        if x <= kappa {
            let r = (x - kappa) / kappa;
            self.amp * (1.0 + r * r * r)
        } else if x <= right {
            self.amp
        } else {
            let r = (x - right) / (1.0 - right);
            self.amp * (1.0 - r * r * r)
        }
    }

    /// `sup |p''| = 6|amp| max(κ⁻², (1 − κ − 1/n)⁻²)`.
    pub fn second_derivative_sup(&self) -> f64 {
        let l = self.kappa;
        let r = 1.0 - self.right();
        6.0 * self.amp.abs() * (1.0 / (l * l)).max(1.0 / (r * r))
    }

    /// Nodal values `p(k/n)`; the plateau nodes carry `amp` exactly.
    pub fn nodal(&self) -> Vec<f64> {
        let n = self.n;
        let kk = crate::grid::cell_index(n, self.kappa);
        (0..=n)
            .map(|k| {
                if k == kk || k == kk + 1 {
                    self.amp
                } else if k == 0 || k == n {
                    0.0
                } else {
                    self.eval(crate::grid::node(n, k))
                }
            })
            .collect()
    }
}

/// The bump that moves `f̃(T, x0)` to `y`, as nodal values.
pub fn terminal_bump(f: &DiscretePath, y: f64, x0: f64) -> Result<Vec<f64>, InverseError> {
    let current = f.terminal_value(x0);
    if !current.is_finite() || !y.is_finite() {
        return Err(InverseError::NonFiniteTerminal);
    }
    Ok(Bump::new(f.grid().n, x0, y - current)?.nodal())
}

/// `f = f̃ + (t²/T²) Π_n(p)`, with `∂_t f = ∂_t f̃ + (2t/T²) Π_n(p)`.
pub fn modify_terminal(f: &DiscretePath, y: f64, x0: f64) -> Result<DiscretePath, InverseError> {
    let w = terminal_bump(f, y, x0)?;
    Ok(add_ramped(f, &w)?)
}

/// `f + (t²/T²) w` for nodal `w`, velocities adjusted accordingly. Initial
/// position and velocity are unchanged.
pub fn add_ramped(f: &DiscretePath, w: &[f64]) -> Result<DiscretePath, PathError> {
    let g = f.grid();
    let t2 = g.horizon * g.horizon;
    let mut pos = f.positions().to_vec();
    let mut vel = f.velocities().to_vec();
    let width = g.n + 1;
    for i in 0..=g.m {
        let t = g.time(i);
        let (q, dq) = (t * t / t2, 2.0 * t / t2);
        for k in 0..width {
            pos[i * width + k] += q * w[k];
            vel[i * width + k] += dq * w[k];
        }
    }
    DiscretePath::new(g, pos, vel)
}

/// Modified path and the control that produces it. The positions are
/// `f̃_i + (t_i²/T²) Π_n(p)` exactly at every time point; the control is the
/// unique one for which one split step per cell reaches each of these
/// positions, computed by a forward recursion that carries the velocity.
/// The first space cell keeps the value of `h̃`.
pub fn modified_control(
    spec: &ProblemSpec,
    f: &DiscretePath,
    h: &Control,
    y: f64,
    x0: f64,
) -> Result<(DiscretePath, Control), InverseError> {
    let g = f.grid();
    if h.grid() != g {
        return Err(InverseError::GridMismatch);
    }
    let w = terminal_bump(f, y, x0)?;
    let (n, m) = (g.n, g.m);
    let dt = g.dt();
    let t2 = g.horizon * g.horizon;
    let prop = Propagator::new(n, dt);
    let width = n + 1;
    let target = |i: usize| -> Vec<f64> {
        let t = g.time(i);
        let q = t * t / t2;
        f.position(i).iter().zip(&w).map(|(a, b)| a + q * b).collect()
    };

    let mut pos = Vec::with_capacity((m + 1) * width);
    let mut vel = Vec::with_capacity((m + 1) * width);
    let mut values = vec![0.0; m * n];
    let mut fi = target(0);
    let mut vi = f.velocity(0).to_vec();
    pos.extend_from_slice(&fi);
    vel.extend_from_slice(&vi);
    let (mut cf, mut delta, mut vm, mut lf, mut cv) =
        (vec![0.0; width], vec![0.0; width], vec![0.0; width], vec![0.0; width], vec![0.0; width]);
    let mut force = vec![0.0; width];
    for i in 0..m {
        let next = target(i + 1);
        prop.apply_c(&fi, &mut cf);
        for k in 0..width {
            delta[k] = next[k] - cf[k];
        }
        prop.apply_s_inv(&delta, &mut vm);
        let row = &mut values[i * n..(i + 1) * n];
        row[0] = h.get(i, 0);
        for k in 1..n {
            let kick = 2.0 * (vm[k] - vi[k]) / dt;
            row[k] = (kick - spec.b.eval(fi[k])?) / spec.sigma.eval(fi[k])?;
        }
        prop.apply_l(&fi, &mut lf);
        prop.apply_c(&vm, &mut cv);
        forcing_into(spec, &next, row, &mut force)?;
        for k in 0..width {
            vi[k] = cv[k] - lf[k] + 0.5 * dt * force[k];
        }
        vi[0] = 0.0;
        vi[n] = 0.0;
        fi = next;
        pos.extend_from_slice(&fi);
        vel.extend_from_slice(&vi);
    }
    Ok((DiscretePath::new(g, pos, vel)?, Control::new(g, values)?))
}

/// `|Δ_n Π_n(p)|` at interior nodes against `sup |p''|`; returns `(max, bound)`.
pub fn bump_second_difference(b: &Bump) -> (f64, f64) {
    let w = b.nodal();
    let n = b.n;
    let n2 = (n * n) as f64;
    let max = (1..n)
        .map(|k| (n2 * (w[k - 1] - 2.0 * w[k] + w[k + 1])).abs())
        .fold(0.0, f64::max);
    (max, b.second_derivative_sup())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::BallSampler;
    use crate::grid::{eigenfactor_unchecked, Grid};
    use crate::math::{self, PI};
    use crate::problem::Preset;
    use crate::skeleton::{upsilon_n, upsilon_n_with, SkeletonOptions};

    #[test]
    fn zero_control_round_trip() {
        for p in [Preset::Linear, Preset::NonlinA, Preset::NonlinB] {
            let spec = ProblemSpec::preset(p);
            let g = Grid::with_default_steps(8, 1.0).unwrap();
            let path = upsilon_n(&spec, &Control::zeros(g)).unwrap();
            let h = invert_upsilon_n(&spec, &path, 1e-6).unwrap();
            assert!(h.norm() < 1e-10, "{p}: {}", h.norm());
        }
    }

    #[test]
    fn same_grid_inverse_is_exact() {
        let spec = ProblemSpec::preset(Preset::NonlinB);
        let g = Grid::with_default_steps(8, 1.0).unwrap();
        let h = BallSampler::new(1.0, 1.0, 4).sample(g);
        let path = upsilon_n(&spec, &h).unwrap();
        let back = invert_upsilon_n(&spec, &path, 1e-6).unwrap();
        assert!(back.distance(&h).unwrap() < 1e-10);
    }

    #[test]
    fn round_trip_against_fine_trajectory() {
        let spec = ProblemSpec::preset(Preset::NonlinA);
        let mut errs = vec![];
        for m in [128, 256, 512] {
            let g = Grid::new(8, m, 1.0).unwrap();
            let h = BallSampler::new(1.0, 1.0, 7).sample(g);
            let path = upsilon_n_with(&spec, &h, SkeletonOptions::with_substeps(16)).unwrap();
            let back = invert_upsilon_n(&spec, &path, 1e-6).unwrap();
            errs.push(back.distance(&h).unwrap());
        }
        assert!(errs[2] <= 1e-2, "{errs:?}");
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }

    #[test]
    fn single_mode_path_inverts_to_zero() {
        let spec = ProblemSpec::preset(Preset::Linear);
        let n = 8;
        let g = Grid::new(n, 64, 1.0).unwrap();
        let c = math::sqrt(eigenfactor_unchecked(n, 1));
        let w = PI * c;
        let mut pos = vec![];
        let mut vel = vec![];
        for i in 0..=g.m {
            let t = g.time(i);
            for k in 0..=n {
                let s = if k == 0 || k == n { 0.0 } else { math::sin(PI * k as f64 / n as f64) };
                pos.push(math::cos(w * t) * s);
                vel.push(-w * math::sin(w * t) * s);
            }
        }
        let path = DiscretePath::new(g, pos, vel).unwrap();
        let h = invert_upsilon_n(&spec, &path, 1e-6).unwrap();
        assert!(math::max_abs(h.values()) < 1e-9);
    }

    #[test]
    fn membership_rejects_wrong_initial_data() {
        let spec = ProblemSpec::preset(Preset::Linear);
        let g = Grid::with_default_steps(4, 1.0).unwrap();
        let mut spec2 = spec.clone();
        spec2.u0 = crate::expr::Expression::parse("0.5*sin(pi*x)").unwrap();
        let path = upsilon_n(&spec2, &Control::zeros(g)).unwrap();
        let r = check_membership(&spec, &path, MEMBERSHIP_TOL).unwrap();
        assert!(!r.initial_position_ok() && r.boundary_ok());
        assert!(matches!(
            invert_upsilon_n(&spec, &path, 1e-6),
            Err(InverseError::NotAdmissible(_))
        ));
    }

    #[test]
    fn sigma_floor_is_enforced() {
        let mut spec = ProblemSpec::preset(Preset::Linear);
        spec.sigma = crate::expr::Expression::parse("x").unwrap();
        let g = Grid::with_default_steps(4, 1.0).unwrap();
        let path = upsilon_n(&spec, &Control::zeros(g)).unwrap();
        assert!(matches!(
            invert_upsilon_n(&spec, &path, 1e-6),
            Err(InverseError::SigmaFloor { .. })
        ));
    }

    #[test]
    fn bump_cases() {
        let b = Bump::new(8, 0.5, 0.1).unwrap();
        assert_eq!(b.kappa, 0.5);
        assert_eq!(b.eval(0.0), 0.0);
        assert_eq!(b.eval(1.0), 0.0);
        assert_eq!(b.eval(0.5), 0.1);
        assert_eq!(b.eval(0.625), 0.1);
        let w = b.nodal();
        assert!(w.iter().all(|&v| v <= 0.1));
        let (d2, bound) = bump_second_difference(&b);
        assert!(d2 <= bound);
        assert!(Bump::new(2, 0.5, 1.0).is_err());
        assert!(Bump::new(8, 0.05, 1.0).is_err());
        assert!(Bump::new(8, 0.9, 1.0).is_err());
    }

    #[test]
    fn modify_terminal_cases() {
        let spec = ProblemSpec::preset(Preset::NonlinA);
        let g = Grid::with_default_steps(8, 1.0).unwrap();
        let f = upsilon_n(&spec, &Control::zeros(g)).unwrap();
        let y0 = f.terminal_value(0.5);
        assert_eq!(modify_terminal(&f, y0, 0.5).unwrap(), f);
        let f2 = modify_terminal(&f, y0 + 0.1, 0.5).unwrap();
        assert!((f2.terminal_value(0.5) - (y0 + 0.1)).abs() <= 1e-12);
        assert_eq!(f2.position(0), f.position(0));
        assert_eq!(f2.velocity(0), f.velocity(0));
        let sup = f2
            .positions()
            .iter()
            .zip(f.positions())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!((sup - 0.1).abs() < 1e-12, "{sup}");
    }

    #[test]
    fn modified_control_lands_exactly() {
        for p in [Preset::Linear, Preset::NonlinA, Preset::NonlinB] {
            let spec = ProblemSpec::preset(p);
            let g = Grid::with_default_steps(8, 1.0).unwrap();
            let h0 = BallSampler::new(1.0, 1.0, 11).sample(g);
            let f0 = upsilon_n(&spec, &h0).unwrap();
            let y = f0.terminal_value(0.5) + 0.3;
            let (f, h) = modified_control(&spec, &f0, &h0, y, 0.5).unwrap();
            let forward = upsilon_n(&spec, &h).unwrap();
            assert!((forward.terminal_value(0.5) - y).abs() <= 1e-12, "{p}");
            assert!(forward.sup_distance(&f).unwrap() < 1e-11, "{p}");
            // no change requested: control unchanged
            let (_, same) = modified_control(&spec, &f0, &h0, f0.terminal_value(0.5), 0.5).unwrap();
            assert!(same.distance(&h0).unwrap() < 1e-10, "{p}");
        }
    }

    #[test]
    fn linear_modification_matches_closed_form_update() {
        // b = 0, σ = 1: h − h̃ → (2w − t²Δ_n w)/T² as dt → 0
        let spec = ProblemSpec::preset(Preset::Linear);
        let mut errs = vec![];
        for m in [64, 128, 256] {
            let g = Grid::new(8, m, 1.0).unwrap();
            let h0 = Control::zeros(g);
            let f0 = upsilon_n(&spec, &h0).unwrap();
            let y = f0.terminal_value(0.5) + 0.2;
            let (_, h) = modified_control(&spec, &f0, &h0, y, 0.5).unwrap();
            let w = Bump::new(8, 0.5, 0.2).unwrap().nodal();
            let lap = crate::grid::discrete_laplacian(8, &w, false).unwrap();
            let mut worst = 0.0_f64;
            for i in 0..m {
                let t = g.time(i) + 0.5 * g.dt();
                for k in 1..8 {
                    let expected = 2.0 * w[k] - t * t * lap[k];
                    worst = worst.max((h.get(i, k) - expected).abs());
                }
            }
            errs.push(worst);
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
        assert!(errs[2] < 1e-2, "{errs:?}");
    }

    #[test]
    fn modification_cost_scales_linearly() {
        let spec = ProblemSpec::preset(Preset::Linear);
        let g = Grid::with_default_steps(8, 1.0).unwrap();
        let h0 = Control::zeros(g);
        let f0 = upsilon_n(&spec, &h0).unwrap();
        let y0 = f0.terminal_value(0.5);
        let d = |dy: f64| {
            let (_, h) = modified_control(&spec, &f0, &h0, y0 + dy, 0.5).unwrap();
            h.distance(&h0).unwrap()
        };
        let (a, b) = (d(1e-3), d(2e-3));
        assert!((b / a - 2.0).abs() < 1e-8);
    }
}

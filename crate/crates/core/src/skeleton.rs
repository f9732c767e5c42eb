//! Solvers for the discrete skeleton equation `Υⁿ(h)` and its fine-grid
//! reference.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::control::{Control, ControlError, ControlProfile};
use crate::expr::EvalError;
use crate::green::{nodal, DiscreteGreen};
use crate::grid::{laplacian_into, Grid, GridError};
use crate::math;
use crate::path::{DiscretePath, PathError};
use crate::problem::ProblemSpec;

/// Blow-up factor relative to the initial scale that counts as instability.
pub const BLOWUP_FACTOR: f64 = 1e8;

/// Picard iterations allowed before the mild solver gives up.
pub const MAX_PICARD_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkeletonError {
    #[error("coefficient evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("solution blew up at time step {step}; reduce the time step")]
    Unstable { step: usize },
    #[error("|sigma| = {value:e} below floor {floor:e} at t = {t}, node {k}")]
    SigmaFloor { t: f64, k: usize, value: f64, floor: f64 },
    #[error("Picard iteration did not converge in {iterations} iterations (last update {update:e})")]
    Divergence { iterations: usize, update: f64 },
    #[error("reference resolution {n_ref} must be a multiple of {n} and at least 4x")]
    Reference { n: usize, n_ref: usize },
    #[error("horizon of the problem ({spec}) and the grid ({grid}) differ")]
    Horizon { spec: f64, grid: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonOptions {
    /// Integrator steps per control time cell.
    pub substeps: usize,
    /// Fail if `|σ(f)|` drops below this value at any stored node.
    pub sigma_floor: Option<f64>,
}

impl Default for SkeletonOptions {
    fn default() -> Self {
        SkeletonOptions {
            substeps: 1,
            sigma_floor: None,
        }
    }
}

impl SkeletonOptions {
    pub fn with_substeps(substeps: usize) -> Self {
        SkeletonOptions {
            substeps: substeps.max(1),
            ..Default::default()
        }
    }
}

/// Nodal `Π_n(u0)` and `Π_n(v0)` with exact zero boundary entries.
pub fn initial_state(spec: &ProblemSpec, n: usize) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    let mut u = nodal(n, |x| spec.u0.eval(x))?;
    let mut v = nodal(n, |x| spec.v0.eval(x))?;
    for w in [&mut u, &mut v] {
        w[0] = 0.0;
        w[n] = 0.0;
    }
    Ok((u, v))
}

/// `b(f) + σ(f) h` at interior nodes; node `k` is driven by space cell `k`.
pub fn forcing_into(spec: &ProblemSpec, f: &[f64], h_row: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
    let n = f.len() - 1;
    out[0] = 0.0;
    out[n] = 0.0;
    for k in 1..n {
        out[k] = spec.b.eval(f[k])? + spec.sigma.eval(f[k])? * h_row[k];
    }
    Ok(())
}

/// `Δ_n f + b(f) + σ(f) h` at interior nodes.
pub fn acceleration_into(
    spec: &ProblemSpec,
    f: &[f64],
    h_row: &[f64],
    out: &mut [f64],
) -> Result<(), EvalError> {
    laplacian_into(f, out);
    let n = f.len() - 1;
    for k in 1..n {
        out[k] += spec.b.eval(f[k])? + spec.sigma.eval(f[k])? * h_row[k];
    }
    Ok(())
}

/// Exact flow of `f'' = Δ_n f` over one step `τ`, as symmetric matrices on
/// the interior nodes: `f ← C f + S v`, `v ← -L f + C v`. `S⁻¹` is kept for
/// inversion.
#[derive(Debug, Clone)]
pub struct Propagator {
    n: usize,
    tau: f64,
    c: Vec<f64>,
    s: Vec<f64>,
    l: Vec<f64>,
    s_inv: Vec<f64>,
}

impl Propagator {
    /// Requires `τ · 2n < π` so that `S` is invertible.
    pub fn new(n: usize, tau: f64) -> Propagator {
        let d = n - 1;
        let dg = DiscreteGreen::new(n);
        let inv_n = 1.0 / n as f64;
        let mut c = vec![0.0; d * d];
        let mut s = vec![0.0; d * d];
        let mut l = vec![0.0; d * d];
        let mut s_inv = vec![0.0; d * d];
        for j in 1..n {
            let om = dg.frequencies()[j - 1];
            let (cj, sj) = (math::cos(om * tau), math::sin(om * tau));
            assert!(sj > 0.0, "time step too large for the exact flow to be invertible");
            let e = dg.basis_nodes(j);
            for a in 0..d {
                for b in 0..d {
                    let w = e[a + 1] * e[b + 1] * inv_n;
                    c[a * d + b] += cj * w;
                    s[a * d + b] += sj / om * w;
                    l[a * d + b] += om * sj * w;
                    s_inv[a * d + b] += om / sj * w;
                }
            }
        }
        Propagator { n, tau, c, s, l, s_inv }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `out[1..n] = M x[1..n]`, boundary entries zero.
    fn apply(&self, mat: &[f64], x: &[f64], out: &mut [f64]) {
        let d = self.n - 1;
        out[0] = 0.0;
        out[self.n] = 0.0;
        for a in 0..d {
            let row = &mat[a * d..(a + 1) * d];
            out[a + 1] = row.iter().zip(&x[1..self.n]).map(|(m, v)| m * v).sum();
        }
    }

    pub fn apply_c(&self, x: &[f64], out: &mut [f64]) {
        self.apply(&self.c, x, out)
    }

    pub fn apply_s(&self, x: &[f64], out: &mut [f64]) {
        self.apply(&self.s, x, out)
    }

    pub fn apply_l(&self, x: &[f64], out: &mut [f64]) {
        self.apply(&self.l, x, out)
    }

    pub fn apply_s_inv(&self, x: &[f64], out: &mut [f64]) {
        self.apply(&self.s_inv, x, out)
    }

    /// In place `(f, v) ← (C f + S v, -L f + C v)`.
    pub fn rotate(&self, f: &mut [f64], v: &mut [f64], scratch: &mut [Vec<f64>; 4]) {
        let [cf, sv, lf, cv] = scratch;
        self.apply_c(f, cf);
        self.apply_s(v, sv);
        self.apply_l(f, lf);
        self.apply_c(v, cv);
        for k in 0..=self.n {
            f[k] = cf[k] + sv[k];
            v[k] = cv[k] - lf[k];
        }
    }
}

/// One split step: half kick with `b(f) + σ(f)h`, exact linear flow, half kick.
pub(crate) struct Stepper {
    pub(crate) prop: Propagator,
    force: Vec<f64>,
    scratch: [Vec<f64>; 4],
}

impl Stepper {
    pub(crate) fn new(n: usize, tau: f64) -> Stepper {
        Stepper::with_propagator(Propagator::new(n, tau))
    }

    pub(crate) fn with_propagator(prop: Propagator) -> Stepper {
        let n = prop.n;
        Stepper {
            prop,
            force: vec![0.0; n + 1],
            scratch: [vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]],
        }
    }

    pub(crate) fn step(
        &mut self,
        spec: &ProblemSpec,
        f: &mut [f64],
        v: &mut [f64],
        h_row: &[f64],
    ) -> Result<(), EvalError> {
        let half = 0.5 * self.prop.tau;
        forcing_into(spec, f, h_row, &mut self.force)?;
        for (vk, a) in v.iter_mut().zip(&self.force) {
            *vk += half * a;
        }
        self.prop.rotate(f, v, &mut self.scratch);
        forcing_into(spec, f, h_row, &mut self.force)?;
        for (vk, a) in v.iter_mut().zip(&self.force) {
            *vk += half * a;
        }
        Ok(())
    }
}

pub(crate) fn initial_scale(u: &[f64], v: &[f64]) -> f64 {
    math::max_abs(u).max(math::max_abs(v)).max(1.0)
}

fn check_horizon(spec: &ProblemSpec, grid: Grid) -> Result<(), SkeletonError> {
    if spec.horizon != grid.horizon {
        return Err(SkeletonError::Horizon {
            spec: spec.horizon,
            grid: grid.horizon,
        });
    }
    Ok(())
}

fn check_sigma(spec: &ProblemSpec, f: &[f64], t: f64, floor: Option<f64>) -> Result<(), SkeletonError> {
    if let Some(floor) = floor {
        for (k, &fk) in f.iter().enumerate() {
            let value = spec.sigma.eval(fk)?.abs();
            if value < floor {
                return Err(SkeletonError::SigmaFloor { t, k, value, floor });
            }
        }
    }
    Ok(())
}

/// `Υⁿ(h)` with one integrator step per control cell.
pub fn upsilon_n(spec: &ProblemSpec, h: &Control) -> Result<DiscretePath, SkeletonError> {
    upsilon_n_with(spec, h, SkeletonOptions::default())
}

/// `Υⁿ(h)` for the node system `f_k'' = Δ_n f_k + b(f_k) + σ(f_k) h_k(t)`,
/// split into the exact flow of `f'' = Δ_n f` and half kicks with the
/// remaining force, which is frozen within each half step.
pub fn upsilon_n_with(
    spec: &ProblemSpec,
    h: &Control,
    opts: SkeletonOptions,
) -> Result<DiscretePath, SkeletonError> {
    let grid = h.grid();
    check_horizon(spec, grid)?;
    let n = grid.n;
    let substeps = opts.substeps.max(1);
    let tau = grid.dt() / substeps as f64;
    let (mut f, mut v) = initial_state(spec, n)?;
    let limit = BLOWUP_FACTOR * initial_scale(&f, &v);
    let mut pos = Vec::with_capacity((grid.m + 1) * (n + 1));
    let mut vel = Vec::with_capacity((grid.m + 1) * (n + 1));
    pos.extend_from_slice(&f);
    vel.extend_from_slice(&v);
    check_sigma(spec, &f, 0.0, opts.sigma_floor)?;
    let mut stepper = Stepper::new(n, tau);
    for i in 0..grid.m {
        let row = h.row(i);
        for _ in 0..substeps {
            stepper.step(spec, &mut f, &mut v, row)?;
        }
        if !(math::max_abs(&f) <= limit && math::max_abs(&v) <= limit) {
            return Err(SkeletonError::Unstable { step: i + 1 });
        }
        check_sigma(spec, &f, grid.time(i + 1), opts.sigma_floor)?;
        pos.extend_from_slice(&f);
        vel.extend_from_slice(&v);
    }
    Ok(DiscretePath::new(grid, pos, vel)?)
}

/// Result of the Picard iteration on the mild form.
#[derive(Debug, Clone)]
pub struct MildSolution {
    pub path: DiscretePath,
    pub iterations: usize,
    pub last_update: f64,
}

/// `Υⁿ(h)` from the mild form
/// `f(t) = ∂_tGⁿ_t * u0 + Gⁿ_t * v0 + ∫_0^t Gⁿ_{t-s} * [b(f) + σ(f) h](s) ds`,
/// iterated to a fixed point. Space integrals are exact cell sums (mode
/// projections); time integrals use the composite trapezoid rule on the
/// control grid, with the cell value of `h` at both ends of each cell.
pub fn upsilon_n_mild(spec: &ProblemSpec, h: &Control, picard_tol: f64) -> Result<MildSolution, SkeletonError> {
    let grid = h.grid();
    check_horizon(spec, grid)?;
    let (n, m) = (grid.n, grid.m);
    let dt = grid.dt();
    let dg = DiscreteGreen::new(n);
    let omega = dg.frequencies().to_vec();
    let modes = n - 1;
    let (u0, v0) = initial_state(spec, n)?;
    let (u0h, v0h) = (dg.project(&u0), dg.project(&v0));
    let times: Vec<f64> = (0..=m).map(|i| grid.time(i)).collect();
    // cos(ω_j t_i), sin(ω_j t_i)
    let mut cs = vec![0.0; (m + 1) * modes];
    let mut sn = vec![0.0; (m + 1) * modes];
    for (i, &t) in times.iter().enumerate() {
        for j in 0..modes {
            cs[i * modes + j] = math::cos(omega[j] * t);
            sn[i * modes + j] = math::sin(omega[j] * t);
        }
    }

    let w = n + 1;
    // free evolution as the starting iterate
    let mut pos = vec![0.0; (m + 1) * w];
    let mut vel = vec![0.0; (m + 1) * w];
    let mut coeff = vec![0.0; modes];
    let mut rate = vec![0.0; modes];
    let mut buf = vec![0.0; w];
    for i in 0..=m {
        for j in 0..modes {
            let (c, s, om) = (cs[i * modes + j], sn[i * modes + j], omega[j]);
            coeff[j] = c * u0h[j] + s / om * v0h[j];
            rate[j] = -om * s * u0h[j] + c * v0h[j];
        }
        dg.synthesize_into(&coeff, &mut buf);
        pos[i * w..(i + 1) * w].copy_from_slice(&buf);
        dg.synthesize_into(&rate, &mut buf);
        vel[i * w..(i + 1) * w].copy_from_slice(&buf);
    }

    let mut forcing = vec![0.0; w];
    let mut fhat = vec![0.0; modes];
    let mut cum_c = vec![0.0; modes];
    let mut cum_s = vec![0.0; modes];
    let mut new_pos = pos.clone();
    let mut new_vel = vel.clone();
    let mut last_update = f64::INFINITY;
    for iteration in 1..=MAX_PICARD_ITERATIONS {
        cum_c.iter_mut().for_each(|v| *v = 0.0);
        cum_s.iter_mut().for_each(|v| *v = 0.0);
        for p in 0..=m {
            if p > 0 {
                // cell p-1: right end of its left neighbour point and left end of p
                let i = p - 1;
                let row = h.row(i);
                for (end, weight_idx) in [(i, i), (p, p)] {
                    let f = &pos[end * w..(end + 1) * w];
                    for k in 1..n {
                        forcing[k] = spec.b.eval(f[k])? + spec.sigma.eval(f[k])? * row[k];
                    }
                    dg.project_into(&forcing, &mut fhat);
                    for j in 0..modes {
                        let half = 0.5 * dt * fhat[j];
                        cum_c[j] += half * cs[weight_idx * modes + j];
                        cum_s[j] += half * sn[weight_idx * modes + j];
                    }
                }
            }
            for j in 0..modes {
                let (c, s, om) = (cs[p * modes + j], sn[p * modes + j], omega[j]);
                coeff[j] = c * u0h[j] + s / om * v0h[j] + (s * cum_c[j] - c * cum_s[j]) / om;
                rate[j] = -om * s * u0h[j] + c * v0h[j] + c * cum_c[j] + s * cum_s[j];
            }
            dg.synthesize_into(&coeff, &mut buf);
            new_pos[p * w..(p + 1) * w].copy_from_slice(&buf);
            dg.synthesize_into(&rate, &mut buf);
            new_vel[p * w..(p + 1) * w].copy_from_slice(&buf);
        }
        let update = pos
            .iter()
            .zip(&new_pos)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        core::mem::swap(&mut pos, &mut new_pos);
        core::mem::swap(&mut vel, &mut new_vel);
        if !update.is_finite() {
            return Err(SkeletonError::Divergence {
                iterations: iteration,
                update,
            });
        }
        last_update = update;
        if update < picard_tol {
            return Ok(MildSolution {
                path: DiscretePath::new(grid, pos, vel)?,
                iterations: iteration,
                last_update,
            });
        }
    }
    Err(SkeletonError::Divergence {
        iterations: MAX_PICARD_ITERATIONS,
        update: last_update,
    })
}

/// Grid with `n_ref` cells and the same `dt · n` as `grid`.
pub fn reference_grid(grid: Grid, n_ref: usize) -> Result<Grid, SkeletonError> {
    if n_ref < 4 * grid.n || n_ref % grid.n != 0 {
        return Err(SkeletonError::Reference { n: grid.n, n_ref });
    }
    Ok(Grid::new(n_ref, grid.m * (n_ref / grid.n), grid.horizon)?)
}

/// `Υ^{n_ref}(h)` with `h` embedded on the refined grid; stands in for `Υ(h)`.
pub fn upsilon_reference(
    spec: &ProblemSpec,
    h: &Control,
    n_ref: usize,
    opts: SkeletonOptions,
) -> Result<DiscretePath, SkeletonError> {
    let fine = reference_grid(h.grid(), n_ref)?;
    upsilon_n_with(spec, &h.embed(fine)?, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub ns: Vec<usize>,
    pub errors: Vec<f64>,
    /// Least-squares `δ̂` in `error ≈ K n^{-δ̂}`; `NaN` if any error is zero.
    pub order: f64,
}

impl ErrorCurve {
    pub fn strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }
}

/// Sup-norm distance between `Υⁿ(h)` and `Υ^{n_ref}(h)` for each `n`, where
/// `h` is a profile discretized on each level's default grid. The sup runs
/// over the reference grid's nodes and time points.
pub fn sup_error_curve(
    spec: &ProblemSpec,
    h: &ControlProfile,
    ns: &[usize],
    n_ref: usize,
    opts: SkeletonOptions,
) -> Result<ErrorCurve, SkeletonError> {
    let fine = Grid::with_default_steps(n_ref, spec.horizon)?;
    for &n in ns {
        if n_ref % n != 0 {
            return Err(SkeletonError::Reference { n, n_ref });
        }
    }
    let reference = upsilon_n_with(spec, &h.discretize(fine), opts)?;
    let mut errors = Vec::with_capacity(ns.len());
    for &n in ns {
        let g = Grid::with_default_steps(n, spec.horizon)?;
        let path = upsilon_n_with(spec, &h.discretize(g), opts)?;
        errors.push(path.sup_distance_on(&reference, fine.m, n_ref));
    }
    let order = if errors.iter().all(|&e| e > 0.0) && ns.len() >= 2 {
        let lx: Vec<f64> = ns.iter().map(|&n| math::ln(n as f64)).collect();
        let ly: Vec<f64> = errors.iter().map(|&e| math::ln(e)).collect();
        -math::ls_slope(&lx, &ly)
    } else {
        f64::NAN
    };
    Ok(ErrorCurve {
        ns: ns.to_vec(),
        errors,
        order,
    })
}

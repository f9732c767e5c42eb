//! One-point rate functions: `Iⁿ(y)` by constrained minimization of the
//! action, closed forms for the linear case, and convergence studies.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::control::{BallSampler, Control, ControlError};
use crate::expr::EvalError;
use crate::green::{sine_coefficients, DiscreteGreen, GreenSeries};
use crate::grid::{cell_index, node, phi, Grid, GridError};
use crate::inverse::{add_ramped, invert_upsilon_n, modified_control, modify_terminal, Bump, InverseError};
use crate::math::{self, PI};
use crate::optim::{self, LbfgsOptions, Termination};
use crate::path::{holder_half_ratio, DiscretePath, PathError};
use crate::problem::{ProblemSpec, DEFAULT_SIGMA_FLOOR};
use crate::skeleton::{initial_state, upsilon_n, Propagator, SkeletonError, Stepper};

/// Terminal residual below which the penalty iterate is taken as feasible.
pub const FEASIBLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("coefficient evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("|sigma| = {value:e} below floor {floor:e} along the trajectory")]
    SigmaFloor { value: f64, floor: f64 },
    #[error("target value {0} is not finite")]
    Target(f64),
    #[error("the linear oracle needs b = 0 and constant nonzero sigma")]
    NotLinear,
    #[error("horizon of the problem ({spec}) and the grid ({grid}) differ")]
    Horizon { spec: f64, grid: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    /// Penalty weights, applied in order.
    pub penalties: Vec<f64>,
    /// Stage stops when `‖∇J‖ ≤ grad_rel_tol · max(1, ‖h‖)`.
    pub grad_rel_tol: f64,
    pub max_inner: usize,
    pub memory: usize,
    /// Additional random feasible starts besides the warm start.
    pub multistart: usize,
    pub seed: u64,
    pub sigma_floor: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            penalties: vec![1e2, 1e3, 1e4, 1e5, 1e6],
            grad_rel_tol: 1e-8,
            max_inner: 500,
            memory: 10,
            multistart: 0,
            seed: 0,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    /// The penalty iterate already met the constraint to `FEASIBLE_TOL`.
    PenaltyConverged,
    /// Feasibility restored by the terminal modification.
    Modified,
}

impl Feasibility {
    pub fn tag(self) -> &'static str {
        match self {
            Feasibility::PenaltyConverged => "penalty-converged",
            Feasibility::Modified => "modified",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub y: f64,
    pub n: usize,
    pub m: usize,
    /// `½‖h*‖²`, an upper bound on `Iⁿ(y)`.
    pub value: f64,
    pub h_star: Control,
    pub f_star: DiscretePath,
    pub iterations: usize,
    pub stages: usize,
    /// `Υⁿ(h)(T, x0) − y` for the last penalty iterate.
    pub residual_before: f64,
    pub feasibility: Feasibility,
    /// Every stage of the selected start met its gradient tolerance.
    pub converged: bool,
    pub final_grad_norm: f64,
    pub starts: usize,
}

impl RateResult {
    pub fn terminal_error(&self, x0: f64) -> f64 {
        (self.f_star.terminal_value(x0) - self.y).abs()
    }
}

/// `½‖h‖²`.
pub fn action(h: &Control) -> f64 {
    h.action()
}

/// Forward map `h ↦ Υⁿ(h)(T, x0)` with its adjoint on a fixed grid.
pub struct TerminalMap<'a> {
    spec: &'a ProblemSpec,
    grid: Grid,
    stepper: Stepper,
    weights: (usize, f64, f64),
    u0: Vec<f64>,
    v0: Vec<f64>,
    sigma_floor: f64,
}

impl<'a> TerminalMap<'a> {
    pub fn new(spec: &'a ProblemSpec, grid: Grid, sigma_floor: f64) -> Result<TerminalMap<'a>, RateError> {
        if spec.horizon != grid.horizon {
            return Err(RateError::Horizon {
                spec: spec.horizon,
                grid: grid.horizon,
            });
        }
        let n = grid.n;
        let k = cell_index(n, spec.x0).min(n - 1);
        let frac = spec.x0 * n as f64 - k as f64;
        let (u0, v0) = initial_state(spec, n)?;
        Ok(TerminalMap {
            spec,
            grid,
            stepper: Stepper::with_propagator(Propagator::new(n, grid.dt())),
            weights: (k, 1.0 - frac, frac),
            u0,
            v0,
            sigma_floor,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn observe(&self, terminal: &[f64]) -> f64 {
        let (k, a, b) = self.weights;
        a * terminal[k] + b * terminal[k + 1]
    }

    /// Nodal positions at every time point.
    pub fn forward(&mut self, h: &[f64]) -> Result<Vec<f64>, RateError> {
        let (n, m) = (self.grid.n, self.grid.m);
        let mut f = self.u0.clone();
        let mut v = self.v0.clone();
        let mut pos = Vec::with_capacity((m + 1) * (n + 1));
        pos.extend_from_slice(&f);
        for i in 0..m {
            self.stepper
                .step(self.spec, &mut f, &mut v, &h[i * n..(i + 1) * n])?;
            if !f.iter().all(|x| x.is_finite()) {
                return Err(SkeletonError::Unstable { step: i + 1 }.into());
            }
            pos.extend_from_slice(&f);
        }
        Ok(pos)
    }

    pub fn value(&mut self, h: &[f64]) -> Result<f64, RateError> {
        let pos = self.forward(h)?;
        let n = self.grid.n;
        Ok(self.observe(&pos[self.grid.m * (n + 1)..]))
    }

    /// `Φ(h) = Υⁿ(h)(T, x0)` and `∂Φ/∂h[i][k]` (raw cell coordinates).
    pub fn value_and_gradient(&mut self, h: &[f64], grad: &mut [f64]) -> Result<f64, RateError> {
        let pos = self.forward(h)?;
        let (n, m) = (self.grid.n, self.grid.m);
        let w = n + 1;
        let phi_t = self.observe(&pos[m * w..]);
        let half = 0.5 * self.grid.dt();
        let spec = self.spec;
        let prop = &self.stepper.prop;

        let mut lf = vec![0.0; w];
        let mut lv = vec![0.0; w];
        let (k0, a, b) = self.weights;
        lf[k0] = a;
        lf[k0 + 1] = b;
        lf[0] = 0.0;
        lf[n] = 0.0;
        let (mut cl, mut ll, mut sl, mut cv) = (vec![0.0; w], vec![0.0; w], vec![0.0; w], vec![0.0; w]);
        let mut min_sigma = f64::INFINITY;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in (0..m).rev() {
            let f0 = &pos[i * w..(i + 1) * w];
            let f1 = &pos[(i + 1) * w..(i + 2) * w];
            let row = &h[i * n..(i + 1) * n];
            let g = &mut grad[i * n..(i + 1) * n];
            // second half kick, evaluated at f_{i+1}
            for k in 1..n {
                let la = half * lv[k];
                let (s, ds) = spec.sigma.eval_with_derivative(f1[k])?;
                let (_, db) = spec.b.eval_with_derivative(f1[k])?;
                min_sigma = min_sigma.min(s.abs());
                g[k] += s * la;
                lf[k] += (db + ds * row[k]) * la;
            }
            // exact linear flow; C, S, L are symmetric
            prop.apply_c(&lf, &mut cl);
            prop.apply_l(&lv, &mut ll);
            prop.apply_s(&lf, &mut sl);
            prop.apply_c(&lv, &mut cv);
            for k in 0..w {
                lf[k] = cl[k] - ll[k];
                lv[k] = sl[k] + cv[k];
            }
            // first half kick, evaluated at f_i
            for k in 1..n {
                let la = half * lv[k];
                let (s, ds) = spec.sigma.eval_with_derivative(f0[k])?;
                let (_, db) = spec.b.eval_with_derivative(f0[k])?;
                min_sigma = min_sigma.min(s.abs());
                g[k] += s * la;
                lf[k] += (db + ds * row[k]) * la;
            }
        }
        if min_sigma < self.sigma_floor {
            return Err(RateError::SigmaFloor {
                value: min_sigma,
                floor: self.sigma_floor,
            });
        }
        Ok(phi_t)
    }
}

struct StageOutcome {
    z: Vec<f64>,
    iterations: usize,
    stages: usize,
    converged: bool,
    grad_norm: f64,
}

/// Penalty continuation in the scaled variable `z = h·√(dt/n)`, where the
/// action is `½|z|²`.
fn penalty_continuation(
    map: &mut TerminalMap,
    y: f64,
    z0: Vec<f64>,
    opts: &OptimizerOptions,
) -> Result<StageOutcome, RateError> {
    let scale = math::sqrt(map.grid().cell_measure());
    let mut z = z0;
    let mut iterations = 0;
    let mut converged = true;
    let mut grad_norm = 0.0;
    let d = z.len();
    let mut h = vec![0.0; d];
    let mut gh = vec![0.0; d];
    for &rho in &opts.penalties {
        let znorm = math::sqrt(z.iter().map(|v| v * v).sum());
        let lopts = LbfgsOptions {
            memory: opts.memory,
            max_iterations: opts.max_inner,
            grad_tol: opts.grad_rel_tol * znorm.max(1.0),
            ..Default::default()
        };
        let res = optim::minimize(
            |zz: &[f64], grad: &mut [f64]| -> Result<f64, RateError> {
                for (hi, zi) in h.iter_mut().zip(zz) {
                    *hi = zi / scale;
                }
                let phi_t = match map.value_and_gradient(&h, &mut gh) {
                    Ok(v) => v,
                    // an unstable trial step is rejected by the line search
                    Err(RateError::Skeleton(SkeletonError::Unstable { .. })) => return Ok(f64::INFINITY),
                    Err(e) => return Err(e),
                };
                let r = phi_t - y;
                let mut j = 0.0;
                for i in 0..zz.len() {
                    j += 0.5 * zz[i] * zz[i];
                    grad[i] = zz[i] + rho * r * gh[i] / scale;
                }
                Ok(j + 0.5 * rho * r * r)
            },
            z,
            lopts,
        )?;
        iterations += res.iterations;
        converged &= res.termination == Termination::Converged;
        grad_norm = res.grad_norm;
        z = res.x;
    }
    Ok(StageOutcome {
        z,
        iterations,
        stages: opts.penalties.len(),
        converged,
        grad_norm,
    })
}

/// `Iⁿ(y)`: minimizes `½‖h‖²` subject to `Υⁿ(h)(T, x0) = y`.
///
/// Starts from the minimum-norm solution of the linearized constraint at
/// `h = 0`, runs quadratic-penalty continuation with L-BFGS inner solves,
/// then lands exactly on the constraint with [`modified_control`]. With
/// `multistart > 0`, further starts are drawn as random feasible controls
/// around the warm start and the smallest action wins.
pub fn rate_discrete(spec: &ProblemSpec, grid: Grid, y: f64, opts: &OptimizerOptions) -> Result<RateResult, RateError> {
    if !y.is_finite() {
        return Err(RateError::Target(y));
    }
    let mut map = TerminalMap::new(spec, grid, opts.sigma_floor)?;
    let d = grid.n * grid.m;
    let scale = math::sqrt(grid.cell_measure());

    let zero = vec![0.0; d];
    let mut g0 = vec![0.0; d];
    let phi0 = map.value_and_gradient(&zero, &mut g0)?;
    let gz: Vec<f64> = g0.iter().map(|g| g / scale).collect();
    let gz2: f64 = gz.iter().map(|g| g * g).sum();
    let warm: Vec<f64> = if gz2 > 0.0 {
        gz.iter().map(|g| (y - phi0) * g / gz2).collect()
    } else {
        zero.clone()
    };

    let mut starts = vec![warm.clone()];
    if opts.multistart > 0 {
        let warm_norm = math::sqrt(warm.iter().map(|v| v * v).sum());
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut sampler = BallSampler::new((0.5 * warm_norm).max(0.1), spec.horizon, rng.random());
        for _ in 0..opts.multistart {
            let pert = sampler.sample(grid);
            let h: Vec<f64> = warm
                .iter()
                .zip(pert.values())
                .map(|(w, p)| w / scale + p)
                .collect();
            let h = Control::new(grid, h)?;
            let path = upsilon_n(spec, &h)?;
            let (_, feasible) = modified_control(spec, &path, &h, y, spec.x0)?;
            starts.push(feasible.values().iter().map(|v| v * scale).collect());
        }
    }

    let mut best: Option<RateResult> = None;
    for z0 in starts {
        let out = penalty_continuation(&mut map, y, z0, opts)?;
        let h = Control::new(grid, out.z.iter().map(|z| z / scale).collect())?;
        let path = upsilon_n(spec, &h)?;
        let residual = path.terminal_value(spec.x0) - y;
        let (h_star, feasibility) = if residual.abs() <= FEASIBLE_TOL {
            (h, Feasibility::PenaltyConverged)
        } else {
            let (_, hm) = modified_control(spec, &path, &h, y, spec.x0)?;
            (hm, Feasibility::Modified)
        };
        let f_star = upsilon_n(spec, &h_star)?;
        let result = RateResult {
            y,
            n: grid.n,
            m: grid.m,
            value: h_star.action(),
            h_star,
            f_star,
            iterations: out.iterations,
            stages: out.stages,
            residual_before: residual,
            feasibility,
            converged: out.converged,
            final_grad_norm: out.grad_norm,
            starts: 1,
        };
        best = match best {
            Some(b) if b.value <= result.value => Some(b),
            _ => Some(result),
        };
    }
    let mut best = best.expect("at least one start");
    best.starts = 1 + opts.multistart;
    Ok(best)
}

/// `I(y)` stand-in: [`rate_discrete`] on the default grid at `n_ref`.
pub fn rate_reference(spec: &ProblemSpec, y: f64, n_ref: usize, opts: &OptimizerOptions) -> Result<RateResult, RateError> {
    let grid = Grid::with_default_steps(n_ref, spec.horizon)?;
    rate_discrete(spec, grid, y, opts)
}

/// Spatial resolution for [`rate_linear_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    /// Spatial discretization with `n` cells (exact `n − 1` mode sum).
    Discrete(usize),
    /// Continuous kernel truncated at `j_max` modes.
    Continuous { j_max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    /// Terminal value of the uncontrolled solution.
    pub mu: f64,
    /// `‖G_{T−·}(x0, ·)‖²_{L²}`.
    pub norm_sq: f64,
    /// Bound on the omitted tail of `norm_sq` (zero for the discrete case).
    pub tail: f64,
}

/// `(y − μ)² / (2σ²‖G_{T−·}(x0,·)‖²)` for `b ≡ 0`, constant `σ`.
pub fn rate_linear_oracle(spec: &ProblemSpec, res: Resolution, y: f64) -> Result<OracleValue, RateError> {
    let sigma = spec.linear_sigma().ok_or(RateError::NotLinear)?;
    let (t, x0) = (spec.horizon, spec.x0);
    let (mu, norm_sq, tail) = match res {
        Resolution::Discrete(n) => {
            let dg = DiscreteGreen::new(n);
            (dg.initial_terms(spec, t, x0)?, dg.terminal_norm_sq(t, x0), 0.0)
        }
        Resolution::Continuous { j_max } => {
            let u = sine_coefficients(|x| spec.u0.eval(x), j_max)?;
            let v = sine_coefficients(|x| spec.v0.eval(x), j_max)?;
            let mu = (1..=j_max)
                .map(|j| {
                    let w = j as f64 * PI;
                    (math::cos(w * t) * u[j - 1] + math::sin(w * t) / w * v[j - 1]) * phi(j, x0)
                })
                .sum();
            let (norm_sq, tail) = GreenSeries::new(j_max).terminal_norm_sq(t, x0);
            (mu, norm_sq, tail)
        }
    };
    let d = y - mu;
    Ok(OracleValue {
        value: d * d / (2.0 * sigma * sigma * norm_sq),
        mu,
        norm_sq,
        tail,
    })
}

/// Terminal value of the uncontrolled discrete solution on `grid`.
pub fn deterministic_terminal(spec: &ProblemSpec, grid: Grid) -> Result<f64, RateError> {
    Ok(upsilon_n(spec, &Control::zeros(grid))?.terminal_value(spec.x0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub y: f64,
    pub n: usize,
    pub m: usize,
    pub value: f64,
    /// `|Iⁿ(y) − I_ref(y)|`.
    pub gap: f64,
    pub residual_before: f64,
    pub iterations: usize,
    pub feasibility: Feasibility,
    pub converged: bool,
    /// Sampled `C^{1/2}` semi-norm of the optimizer path.
    pub holder_seminorm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    /// `(y, I_ref(y))`.
    pub reference: Vec<(f64, f64)>,
    pub n_ref: usize,
}

/// Point pairs used for the Hölder semi-norm of optimizer paths.
pub const HOLDER_PAIRS: usize = 2000;

impl StudyTable {
    /// Assembles rows from results ordered as `ys × ns` (y outer), plus one
    /// reference result per `y`.
    pub fn from_results(results: &[RateResult], references: &[RateResult], n_ref: usize) -> StudyTable {
        let reference: Vec<(f64, f64)> = references.iter().map(|r| (r.y, r.value)).collect();
        let rows = results
            .iter()
            .map(|r| {
                let i_ref = reference
                    .iter()
                    .find(|(y, _)| *y == r.y)
                    .map(|p| p.1)
                    .unwrap_or(f64::NAN);
                StudyRow {
                    y: r.y,
                    n: r.n,
                    m: r.m,
                    value: r.value,
                    gap: (r.value - i_ref).abs(),
                    residual_before: r.residual_before,
                    iterations: r.iterations,
                    feasibility: r.feasibility,
                    converged: r.converged,
                    holder_seminorm: holder_half_ratio(&r.f_star, HOLDER_PAIRS, 17),
                }
            })
            .collect();
        StudyTable { rows, reference, n_ref }
    }

    pub fn rows_for(&self, y: f64) -> impl Iterator<Item = &StudyRow> {
        self.rows.iter().filter(move |r| r.y == y)
    }

    /// Ratio of the largest to the smallest Hölder semi-norm across rows with target `y`.
    pub fn holder_band(&self, y: f64) -> f64 {
        let (lo, hi) = self
            .rows_for(y)
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r.holder_seminorm), hi.max(r.holder_seminorm)));
        if lo > 0.0 {
            hi / lo
        } else {
            f64::NAN
        }
    }
}

/// `Iⁿ(y)` for every `(y, n)` and the `n_ref` reference, run sequentially.
pub fn convergence_study(
    spec: &ProblemSpec,
    ys: &[f64],
    ns: &[usize],
    n_ref: usize,
    opts: &OptimizerOptions,
) -> Result<StudyTable, RateError> {
    let mut results = Vec::with_capacity(ys.len() * ns.len());
    let mut references = Vec::with_capacity(ys.len());
    for &y in ys {
        references.push(rate_reference(spec, y, n_ref, opts)?);
        for &n in ns {
            results.push(rate_discrete(spec, Grid::with_default_steps(n, spec.horizon)?, y, opts)?);
        }
    }
    Ok(StudyTable::from_results(&results, &references, n_ref))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub n: usize,
    pub eps: f64,
    /// `Jⁿ_y(f_n) = ½‖invert(f_n)‖²`.
    pub action: f64,
    /// `action − J_y(f)`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub limit_value: f64,
    pub min_margin: f64,
}

/// Perturbs each level's optimizer path by `(t²/T²) Π_n(ε_n p)`, with `p` a
/// unit bump centred away from `x0`, restores `f_n(T, x0) = y`, and compares
/// `Jⁿ_y(f_n)` with `limit_value = J_y(f)`.
pub fn gamma_liminf_probe(
    spec: &ProblemSpec,
    y: f64,
    ns: &[usize],
    eps: impl Fn(usize) -> f64,
    limit_value: f64,
    opts: &OptimizerOptions,
) -> Result<ProbeReport, RateError> {
    let centre = if spec.x0 >= 0.5 { 0.25 } else { 0.75 };
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = Grid::with_default_steps(n, spec.horizon)?;
        let base = rate_discrete(spec, grid, y, opts)?;
        let e = eps(n);
        let bump = Bump::new(n, centre, e)?.nodal();
        let moved = add_ramped(&base.f_star, &bump)?;
        let f_n = modify_terminal(&moved, y, spec.x0)?;
        let h = invert_upsilon_n(spec, &f_n, opts.sigma_floor)?;
        let action = h.action();
        rows.push(ProbeRow {
            n,
            eps: e,
            action,
            margin: action - limit_value,
        });
    }
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(ProbeReport {
        rows,
        limit_value,
        min_margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub index: usize,
    pub adjoint: f64,
    pub finite_difference: f64,
    pub rel_error: f64,
}

/// Adjoint gradient of `h ↦ Υⁿ(h)(T, x0)` against central differences with
/// step `step · max(1, |z_i|)` in the optimizer variable `z = h·√(dt/n)`, at
/// the given flat cell indices. Relative errors do not depend on the scaling.
pub fn gradient_check(
    spec: &ProblemSpec,
    h: &Control,
    indices: &[usize],
    step: f64,
) -> Result<Vec<GradientCheck>, RateError> {
    let grid = h.grid();
    let mut map = TerminalMap::new(spec, grid, 0.0)?;
    let scale = math::sqrt(grid.cell_measure());
    let mut grad = vec![0.0; h.values().len()];
    map.value_and_gradient(h.values(), &mut grad)?;
    let mut work = h.values().to_vec();
    let mut out = Vec::with_capacity(indices.len());
    for &idx in indices {
        let base = work[idx];
        let e = step * (base * scale).abs().max(1.0) / scale;
        work[idx] = base + e;
        let plus = map.value(&work)?;
        work[idx] = base - e;
        let minus = map.value(&work)?;
        work[idx] = base;
        let fd = (plus - minus) / (2.0 * e);
        let adjoint = grad[idx];
        let diff = (adjoint - fd).abs();
        let rel_error = if diff == 0.0 { 0.0 } else { diff / fd.abs().max(adjoint.abs()) };
        out.push(GradientCheck {
            index: idx,
            adjoint,
            finite_difference: fd,
            rel_error,
        });
    }
    Ok(out)
}

/// `count` distinct flat indices of cells that drive a node (space cell ≥ 1).
pub fn random_active_cells(grid: Grid, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<usize> = Vec::with_capacity(count);
    while out.len() < count.min(grid.m * (grid.n - 1)) {
        let i = rng.random_range(0..grid.m);
        let k = rng.random_range(1..grid.n);
        let idx = i * grid.n + k;
        if !out.contains(&idx) {
            out.push(idx);
        }
    }
    out
}

/// `x` position of node `k` on `grid`, for reporting.
pub fn node_position(grid: Grid, k: usize) -> f64 {
    node(grid.n, k)
}

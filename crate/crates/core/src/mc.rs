//! Crude Monte Carlo for the noise-driven node system and empirical
//! `−ε log P` slopes.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::expr::EvalError;
use crate::green::DiscreteGreen;
use crate::grid::{interpolate, Grid, GridError, DEFAULT_STABILITY_FRACTION};
use crate::math;
use crate::problem::ProblemSpec;
use crate::skeleton::{initial_scale, initial_state, Stepper, BLOWUP_FACTOR};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Smallest sample count accepted by [`estimate_rare`].
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("noise scale must lie in (0, 1], got {0}")]
    Epsilon(f64),
    #[error("time step {dt} exceeds {limit} for the Monte Carlo grid")]
    Step { dt: f64, limit: f64 },
    #[error("sample path blew up at step {step}")]
    Unstable { step: usize },
    #[error("need at least {min} samples, got {found}")]
    Samples { min: usize, found: usize },
    #[error("epsilon list must be strictly decreasing with at least 3 entries")]
    EpsilonList,
    #[error("horizon of the problem ({spec}) and the grid ({grid}) differ")]
    Horizon { spec: f64, grid: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("coefficient evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// Source of the Brownian increments `W(t, (k+1)/n) − W(t, k/n)` for one
/// sample path. Each sample index gets its own ChaCha stream under `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoisePlan {
    pub seed: u64,
    pub sample: u64,
    /// Force every increment to zero.
    pub silent: bool,
}

impl NoisePlan {
    pub fn new(seed: u64, sample: u64) -> NoisePlan {
        NoisePlan {
            seed,
            sample,
            silent: false,
        }
    }

    pub fn silent() -> NoisePlan {
        NoisePlan {
            seed: 0,
            sample: 0,
            silent: true,
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.sample);
        rng
    }

    /// Increments for steps `0..m`, cells `1..n`, each `Normal(0, dt/n)`,
    /// stored row-major as `i * n + k` (cell 0 is unused and zero).
    pub fn increments(&self, grid: Grid) -> Vec<f64> {
        let (n, m) = (grid.n, grid.m);
        let mut out = vec![0.0; n * m];
        if self.silent {
            return out;
        }
        let sd = math::sqrt(grid.dt() / n as f64);
        let mut rng = self.rng();
        for i in 0..m {
            for k in 1..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                out[i * n + k] = sd * z;
            }
        }
        out
    }
}

/// Monte Carlo grid with `dt = fraction / (4n)` rounded down to fit `T`.
pub fn default_mc_grid(n: usize, horizon: f64) -> Result<Grid, GridError> {
    let m = libm::ceil(horizon * 4.0 * n as f64 / DEFAULT_STABILITY_FRACTION) as usize;
    Grid::new(n, m.max(1), horizon)
}

fn check_inputs(spec: &ProblemSpec, grid: Grid, eps: f64) -> Result<(), McError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(McError::Epsilon(eps));
    }
    if spec.horizon != grid.horizon {
        return Err(McError::Horizon {
            spec: spec.horizon,
            grid: grid.horizon,
        });
    }
    let limit = 1.0 / (2.0 * grid.n as f64);
    if grid.dt() > limit * (1.0 + 1e-12) {
        return Err(McError::Step { dt: grid.dt(), limit });
    }
    Ok(())
}

/// Reusable integrator for many sample paths on one grid.
pub struct Simulator<'a> {
    spec: &'a ProblemSpec,
    grid: Grid,
    eps: f64,
    stepper: Stepper,
    u0: Vec<f64>,
    v0: Vec<f64>,
    zero: Vec<f64>,
    f: Vec<f64>,
    v: Vec<f64>,
}

impl<'a> Simulator<'a> {
    pub fn new(spec: &'a ProblemSpec, grid: Grid, eps: f64) -> Result<Simulator<'a>, McError> {
        check_inputs(spec, grid, eps)?;
        let (u0, v0) = initial_state(spec, grid.n)?;
        Ok(Simulator {
            spec,
            grid,
            eps,
            stepper: Stepper::new(grid.n, grid.dt()),
            f: u0.clone(),
            v: v0.clone(),
            u0,
            v0,
            zero: vec![0.0; grid.n],
        })
    }

    /// `u^{ε,n}(T, x0)`. Each step first kicks the velocity by
    /// `n √ε σ(u_k) ΔW_k`, then takes the deterministic split step.
    pub fn terminal(&mut self, plan: &NoisePlan) -> Result<f64, McError> {
        let (n, m) = (self.grid.n, self.grid.m);
        self.f.copy_from_slice(&self.u0);
        self.v.copy_from_slice(&self.v0);
        let limit = BLOWUP_FACTOR * initial_scale(&self.u0, &self.v0);
        let amp = n as f64 * math::sqrt(self.eps);
        let sd = math::sqrt(self.grid.dt() / n as f64);
        let mut rng = if plan.silent { None } else { Some(plan.rng()) };
        for i in 0..m {
            if let Some(rng) = rng.as_mut() {
                for k in 1..n {
                    let z: f64 = StandardNormal.sample(rng);
                    self.v[k] += amp * self.spec.sigma.eval(self.f[k])? * sd * z;
                }
            }
            self.stepper.step(self.spec, &mut self.f, &mut self.v, &self.zero)?;
            if !(math::max_abs(&self.f) <= limit) {
                return Err(McError::Unstable { step: i + 1 });
            }
        }
        Ok(interpolate(&self.f, self.spec.x0))
    }
}

/// One sample of `u^{ε,n}(T, x0)` driven by `plan`.
pub fn simulate_terminal(spec: &ProblemSpec, grid: Grid, eps: f64, plan: &NoisePlan) -> Result<f64, McError> {
    Simulator::new(spec, grid, eps)?.terminal(plan)
}

/// Terminal values for sample indices `range` under `seed`, in index order.
pub fn sample_terminals(
    spec: &ProblemSpec,
    grid: Grid,
    eps: f64,
    seed: u64,
    range: core::ops::Range<u64>,
) -> Result<Vec<f64>, McError> {
    let mut sim = Simulator::new(spec, grid, eps)?;
    range.map(|s| sim.terminal(&NoisePlan::new(seed, s))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `{u ≥ y}`
    Above,
    /// `{u ≤ y}`
    Below,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Above => "ge",
            Side::Below => "le",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub side: Side,
    pub threshold: f64,
}

impl Event {
    pub fn above(threshold: f64) -> Event {
        Event {
            side: Side::Above,
            threshold,
        }
    }

    pub fn below(threshold: f64) -> Event {
        Event {
            side: Side::Below,
            threshold,
        }
    }

    pub fn contains(&self, u: f64) -> bool {
        match self.side {
            Side::Above => u >= self.threshold,
            Side::Below => u <= self.threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RareEventEstimate {
    pub eps: f64,
    pub event: Event,
    pub samples: usize,
    pub hits: usize,
    pub p_hat: f64,
    /// 95% interval for `p`.
    pub lo: f64,
    pub hi: f64,
    /// `−ε log p̂`; `+∞` when there are no hits.
    pub eps_log: f64,
    /// `−ε log hi`, a lower bound for the exponent.
    pub eps_log_lo: f64,
    /// `−ε log lo`; `+∞` when `lo = 0`.
    pub eps_log_hi: f64,
}

impl RareEventEstimate {
    pub fn from_counts(eps: f64, event: Event, samples: usize, hits: usize) -> RareEventEstimate {
        let p_hat = hits as f64 / samples as f64;
        let (lo, hi) = if hits == 0 {
            // one-sided exact bound: (1 − hi)^M = 0.05
            (0.0, 1.0 - math::exp(math::ln(0.05) / samples as f64))
        } else {
            wilson(hits, samples, Z95)
        };
        let exponent = |p: f64| if p > 0.0 { -eps * math::ln(p) } else { f64::INFINITY };
        RareEventEstimate {
            eps,
            event,
            samples,
            hits,
            p_hat,
            lo,
            hi,
            eps_log: exponent(p_hat),
            eps_log_lo: exponent(hi),
            eps_log_hi: exponent(lo),
        }
    }
}

/// Wilson score interval for `hits` successes out of `samples`.
pub fn wilson(hits: usize, samples: usize, z: f64) -> (f64, f64) {
    let nn = samples as f64;
    let p = hits as f64 / nn;
    let z2 = z * z;
    let denom = 1.0 + z2 / nn;
    let centre = (p + z2 / (2.0 * nn)) / denom;
    let half = z * math::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// Sequential crude Monte Carlo estimate of `P(u^{ε,n}(T, x0) ∈ event)`.
pub fn estimate_rare(
    spec: &ProblemSpec,
    grid: Grid,
    eps: f64,
    event: Event,
    samples: usize,
    seed: u64,
) -> Result<RareEventEstimate, McError> {
    if samples < MIN_SAMPLES {
        return Err(McError::Samples {
            min: MIN_SAMPLES,
            found: samples,
        });
    }
    let values = sample_terminals(spec, grid, eps, seed, 0..samples as u64)?;
    let hits = values.iter().filter(|&&u| event.contains(u)).count();
    Ok(RareEventEstimate::from_counts(eps, event, samples, hits))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeReport {
    pub rows: Vec<RareEventEstimate>,
    /// `Iⁿ(y)` supplied by the caller, if any.
    pub rate: Option<f64>,
}

impl SlopeReport {
    /// Every finite `−ε log p̂` moves toward `rate` as ε decreases, allowing
    /// each step to stall within its confidence interval. False if any row has
    /// no hits.
    pub fn trend_toward_rate(&self) -> bool {
        let Some(rate) = self.rate else { return false };
        if self.rows.iter().any(|r| r.hits == 0) {
            return false;
        }
        self.rows.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            (b.eps_log - rate).abs() <= (a.eps_log - rate).abs() || (b.eps_log_lo <= a.eps_log && a.eps_log <= b.eps_log_hi)
        })
    }

    /// `|−ε log p̂ − Iⁿ(y)| / Iⁿ(y)` at the smallest ε.
    pub fn final_rel_gap(&self) -> f64 {
        match (self.rows.last(), self.rate) {
            (Some(r), Some(rate)) => (r.eps_log - rate).abs() / rate,
            _ => f64::INFINITY,
        }
    }
}

/// `−ε log p̂` at each `ε` in `eps_list` for `{u ≥ y}` (or `{u ≤ y}`).
pub fn ldp_slope(
    spec: &ProblemSpec,
    grid: Grid,
    event: Event,
    eps_list: &[f64],
    samples: usize,
    seed: u64,
    rate: Option<f64>,
) -> Result<SlopeReport, McError> {
    check_eps_list(eps_list)?;
    let rows = eps_list
        .iter()
        .map(|&e| estimate_rare(spec, grid, e, event, samples, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SlopeReport { rows, rate })
}

pub fn check_eps_list(eps_list: &[f64]) -> Result<(), McError> {
    if eps_list.len() < 3 || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(McError::EpsilonList);
    }
    Ok(())
}

/// Mean and variance of the Gaussian law of `u^{ε,n}(T, x0)` for `b ≡ 0`,
/// constant `σ`: `(μⁿ, ε σ² ‖Gⁿ_{T−·}(x0, ·)‖²)`. `None` for other problems.
pub fn linear_law(spec: &ProblemSpec, n: usize, eps: f64) -> Result<Option<(f64, f64)>, McError> {
    let Some(sigma) = spec.linear_sigma() else { return Ok(None) };
    let dg = DiscreteGreen::new(n);
    let mean = dg.initial_terms(spec, spec.horizon, spec.x0)?;
    let var = eps * sigma * sigma * dg.terminal_norm_sq(spec.horizon, spec.x0);
    Ok(Some((mean, var)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test of `values` against `Normal(mean, var)`,
/// with the asymptotic Kolmogorov p-value.
pub fn ks_normal(values: &[f64], mean: f64, var: f64) -> KsResult {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nn = sorted.len() as f64;
    let sd = math::sqrt(var);
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let c = math::normal_cdf((x - mean) / sd);
        d = d.max((i as f64 + 1.0) / nn - c).max(c - i as f64 / nn);
    }
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(math::sqrt(nn) * d),
    }
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = math::exp(-2.0 * jf * jf * lambda * lambda);
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn sample_mean_var(values: &[f64]) -> (f64, f64) {
    let nn = values.len() as f64;
    let mean = values.iter().sum::<f64>() / nn;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nn - 1.0);
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Control;
    use crate::problem::Preset;
    use crate::skeleton::upsilon_n;

    #[test]
    fn silent_noise_reduces_to_skeleton() {
        for p in Preset::ALL {
            let spec = ProblemSpec::preset(p);
            let g = default_mc_grid(8, 1.0).unwrap();
            let u = simulate_terminal(&spec, g, 0.5, &NoisePlan::silent()).unwrap();
            let det = upsilon_n(&spec, &Control::zeros(g)).unwrap().terminal_value(spec.x0);
            assert_eq!(u, det);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let spec = ProblemSpec::preset(Preset::NonlinA);
        let g = default_mc_grid(8, 1.0).unwrap();
        let a = simulate_terminal(&spec, g, 0.1, &NoisePlan::new(3, 9)).unwrap();
        let b = simulate_terminal(&spec, g, 0.1, &NoisePlan::new(3, 9)).unwrap();
        let c = simulate_terminal(&spec, g, 0.1, &NoisePlan::new(3, 10)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, c);
    }

    #[test]
    fn increments_have_the_stated_variance() {
        let g = Grid::new(8, 400, 1.0).unwrap();
        let inc = NoisePlan::new(1, 2).increments(g);
        let used: Vec<f64> = (0..g.m).flat_map(|i| (1..g.n).map(move |k| (i, k))).map(|(i, k)| inc[i * g.n + k]).collect();
        let (_, var) = sample_mean_var(&used);
        let target = g.dt() / g.n as f64;
        assert!((var / target - 1.0).abs() < 0.05, "{}", var / target);
    }

    #[test]
    fn linear_variance_matches_green_norm() {
        let spec = ProblemSpec::preset(Preset::Linear);
        let g = default_mc_grid(8, 1.0).unwrap();
        let vals = sample_terminals(&spec, g, 0.1, 7, 0..10_000).unwrap();
        let (mean, var) = sample_mean_var(&vals);
        let (mu, v) = linear_law(&spec, 8, 0.1).unwrap().unwrap();
        assert!((var / v - 1.0).abs() < 0.05, "{var} vs {v}");
        assert!((mean - mu).abs() < 4.0 * math::sqrt(v / 1e4));
        assert!(ks_normal(&vals, mu, v).p_value > 0.01);
    }

    #[test]
    fn trivial_events() {
        let spec = ProblemSpec::preset(Preset::Linear);
        let g = default_mc_grid(4, 1.0).unwrap();
        let all = estimate_rare(&spec, g, 0.1, Event::above(f64::NEG_INFINITY), 1000, 1).unwrap();
        assert_eq!(all.p_hat, 1.0);
        assert_eq!(all.eps_log, 0.0);
        let (mu, _) = linear_law(&spec, 4, 0.1).unwrap().unwrap();
        let half = estimate_rare(&spec, g, 0.1, Event::above(mu), 4000, 2).unwrap();
        assert!(half.lo <= 0.5 && 0.5 <= half.hi, "{half:?}");
        assert!(estimate_rare(&spec, g, 0.1, Event::above(mu), 10, 2).is_err());
    }

    #[test]
    fn wilson_and_zero_hits() {
        let (lo, hi) = wilson(50, 100, Z95);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        let r = RareEventEstimate::from_counts(0.1, Event::above(1.0), 1000, 0);
        assert_eq!(r.p_hat, 0.0);
        assert!(r.eps_log.is_infinite() && r.eps_log_lo.is_finite());
        assert!((r.hi - 0.002991).abs() < 1e-5);
    }

    #[test]
    fn kolmogorov_tail_values() {
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.0100).abs() < 3e-4);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = ProblemSpec::preset(Preset::Linear);
        let g = default_mc_grid(4, 1.0).unwrap();
        assert!(simulate_terminal(&spec, g, 0.0, &NoisePlan::silent()).is_err());
        assert!(simulate_terminal(&spec, Grid::new(4, 4, 1.0).unwrap(), 0.1, &NoisePlan::silent()).is_err());
        assert!(check_eps_list(&[0.1, 0.05]).is_err());
        assert!(check_eps_list(&[0.1, 0.1, 0.05]).is_err());
    }
}

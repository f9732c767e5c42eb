//! Sampled boundedness, Hölder and Lipschitz constants of `Υⁿ` across `n`.

use alloc::vec::Vec;

use crate::control::{BallSampler, ControlProfile};
use crate::grid::Grid;
use crate::path::holder_half_ratio;
use crate::problem::ProblemSpec;
use crate::skeleton::{upsilon_n, SkeletonError};

/// Random point pairs per path for the Hölder ratio.
pub const HOLDER_SAMPLE_PAIRS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    /// `(n, sampled maximum)`.
    pub per_n: Vec<(usize, f64)>,
}

impl SuiteReport {
    /// Largest maximum across `n`; the reported constant.
    pub fn constant(&self) -> f64 {
        self.per_n.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    /// Ratio of the largest to the smallest per-`n` maximum.
    pub fn spread(&self) -> f64 {
        let lo = self.per_n.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        self.constant() / lo
    }

    pub fn all_finite(&self) -> bool {
        self.per_n.iter().all(|p| p.1.is_finite())
    }

    /// Finite everywhere and within a factor 2 across `n`.
    pub fn stable(&self) -> bool {
        self.all_finite() && self.spread() <= 2.0
    }
}

fn profiles(radius: f64, horizon: f64, count: usize, seed: u64) -> Vec<ControlProfile> {
    let mut s = BallSampler::new(radius, horizon, seed);
    (0..count).map(|_| s.next_profile()).collect()
}

/// `max ‖Υⁿ(h)‖_C` over `count` profiles from each ball radius in `radii`.
pub fn boundedness(
    spec: &ProblemSpec,
    ns: &[usize],
    radii: &[f64],
    count: usize,
    seed: u64,
) -> Result<SuiteReport, SkeletonError> {
    let sets: Vec<Vec<ControlProfile>> = radii
        .iter()
        .enumerate()
        .map(|(i, &a)| profiles(a, spec.horizon, count, seed.wrapping_add(i as u64)))
        .collect();
    let mut per_n = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = Grid::with_default_steps(n, spec.horizon)?;
        let mut best = 0.0_f64;
        for p in sets.iter().flatten() {
            best = best.max(upsilon_n(spec, &p.discretize(grid))?.sup_norm());
        }
        per_n.push((n, best));
    }
    Ok(SuiteReport { name: "sup_norm", per_n })
}

/// Max over profiles of the sampled `C^{1/2}` ratio of `Υⁿ(h)`.
pub fn holder(
    spec: &ProblemSpec,
    ns: &[usize],
    radius: f64,
    count: usize,
    pairs: usize,
    seed: u64,
) -> Result<SuiteReport, SkeletonError> {
    let set = profiles(radius, spec.horizon, count, seed);
    let mut per_n = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = Grid::with_default_steps(n, spec.horizon)?;
        let mut best = 0.0_f64;
        for (i, p) in set.iter().enumerate() {
            let path = upsilon_n(spec, &p.discretize(grid))?;
            best = best.max(holder_half_ratio(&path, pairs, seed ^ (i as u64) << 20));
        }
        per_n.push((n, best));
    }
    Ok(SuiteReport { name: "holder_half", per_n })
}

/// Max over `count` pairs in the ball of `‖Υⁿ(h₁) − Υⁿ(h₂)‖_C / ‖h₁ − h₂‖`.
pub fn lipschitz(
    spec: &ProblemSpec,
    ns: &[usize],
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<SuiteReport, SkeletonError> {
    let set = profiles(radius, spec.horizon, 2 * count, seed);
    let mut per_n = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = Grid::with_default_steps(n, spec.horizon)?;
        let mut best = 0.0_f64;
        for pair in set.chunks_exact(2) {
            let (h1, h2) = (pair[0].discretize(grid), pair[1].discretize(grid));
            let d = h1.distance(&h2)?;
            if d == 0.0 {
                continue;
            }
            let gap = upsilon_n(spec, &h1)?.sup_distance(&upsilon_n(spec, &h2)?)?;
            best = best.max(gap / d);
        }
        per_n.push((n, best));
    }
    Ok(SuiteReport { name: "lipschitz", per_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Preset;

    #[test]
    fn suites_are_stable_on_small_samples() {
        let spec = ProblemSpec::preset(Preset::NonlinA);
        let ns = [4, 8, 16];
        let b = boundedness(&spec, &ns, &[1.0, 2.0], 4, 1).unwrap();
        let h = holder(&spec, &ns, 1.0, 3, 2000, 2).unwrap();
        let l = lipschitz(&spec, &ns, 2.0, 3, 3).unwrap();
        for r in [&b, &h, &l] {
            assert!(r.stable(), "{r:?}");
            assert!(r.constant() > 0.0);
        }
    }

    #[test]
    fn linear_lipschitz_is_linear() {
        // for b = 0 and constant σ, Υⁿ is affine in h
        let spec = ProblemSpec::preset(Preset::Linear);
        let l = lipschitz(&spec, &[8], 1.0, 4, 5).unwrap();
        let l2 = lipschitz(&spec, &[8], 2.0, 4, 5).unwrap();
        assert!((l.constant() - l2.constant()).abs() < 1e-10 * l.constant());
    }
}

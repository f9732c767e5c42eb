//! Worker pool and order-preserving parallel studies.

use rayon::prelude::*;
use rayon::ThreadPool;

use swe_ldp_core::grid::Grid;
use swe_ldp_core::mc::{self, Event, McError, RareEventEstimate, SlopeReport};
use swe_ldp_core::problem::ProblemSpec;
use swe_ldp_core::rate::{rate_discrete, OptimizerOptions, RateError, RateResult, StudyTable};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "SWE_LDP_THREADS";

/// Samples per Monte Carlo work item.
pub const MC_CHUNK: u64 = 1024;

pub fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&t: &usize| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

pub fn pool(threads: Option<usize>) -> ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or_else(default_threads))
        .build()
        .expect("thread pool")
}

fn chunks(samples: usize) -> Vec<std::ops::Range<u64>> {
    let total = samples as u64;
    (0..total.div_ceil(MC_CHUNK))
        .map(|c| c * MC_CHUNK..((c + 1) * MC_CHUNK).min(total))
        .collect()
}

/// Terminal values for samples `0..samples`, in sample order.
pub fn mc_values(
    pool: &ThreadPool,
    spec: &ProblemSpec,
    grid: Grid,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>, McError> {
    let parts: Vec<Vec<f64>> = pool.install(|| {
        chunks(samples)
            .into_par_iter()
            .map(|r| mc::sample_terminals(spec, grid, eps, seed, r))
            .collect::<Result<_, _>>()
    })?;
    Ok(parts.concat())
}

/// Parallel counterpart of [`mc::estimate_rare`]; same streams, same result.
pub fn estimate_rare(
    pool: &ThreadPool,
    spec: &ProblemSpec,
    grid: Grid,
    eps: f64,
    event: Event,
    samples: usize,
    seed: u64,
) -> Result<RareEventEstimate, McError> {
    if samples < mc::MIN_SAMPLES {
        return Err(McError::Samples {
            min: mc::MIN_SAMPLES,
            found: samples,
        });
    }
    let hits: usize = pool.install(|| {
        chunks(samples)
            .into_par_iter()
            .map(|r| {
                mc::sample_terminals(spec, grid, eps, seed, r).map(|v| v.iter().filter(|&&u| event.contains(u)).count())
            })
            .collect::<Result<Vec<_>, _>>()
    })?
    .iter()
    .sum();
    Ok(RareEventEstimate::from_counts(eps, event, samples, hits))
}

pub fn ldp_slope(
    pool: &ThreadPool,
    spec: &ProblemSpec,
    grid: Grid,
    event: Event,
    eps_list: &[f64],
    samples: usize,
    seed: u64,
    rate: Option<f64>,
) -> Result<SlopeReport, McError> {
    mc::check_eps_list(eps_list)?;
    let rows = eps_list
        .iter()
        .map(|&e| estimate_rare(pool, spec, grid, e, event, samples, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SlopeReport { rows, rate })
}

/// `Iⁿ(y)` for each `(y, grid)` cell, results in cell order.
pub fn rate_cells(
    pool: &ThreadPool,
    spec: &ProblemSpec,
    cells: &[(f64, Grid)],
    opts: &OptimizerOptions,
) -> Result<Vec<RateResult>, RateError> {
    pool.install(|| {
        cells
            .par_iter()
            .map(|&(y, g)| rate_discrete(spec, g, y, opts))
            .collect()
    })
}

/// Parallel counterpart of `rate::convergence_study`.
pub fn convergence_study(
    pool: &ThreadPool,
    spec: &ProblemSpec,
    ys: &[f64],
    ns: &[usize],
    n_ref: usize,
    opts: &OptimizerOptions,
) -> Result<StudyTable, RateError> {
    let grid = |n| Grid::with_default_steps(n, spec.horizon);
    let refs: Vec<(f64, Grid)> = ys.iter().map(|&y| Ok((y, grid(n_ref)?))).collect::<Result<_, RateError>>()?;
    let mut cells = Vec::new();
    for &y in ys {
        for &n in ns {
            cells.push((y, grid(n)?));
        }
    }
    let mut all = refs.clone();
    all.extend(cells);
    let results = rate_cells(pool, spec, &all, opts)?;
    let (references, rows) = results.split_at(refs.len());
    Ok(StudyTable::from_results(rows, references, n_ref))
}

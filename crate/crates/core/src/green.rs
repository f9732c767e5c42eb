//! Continuous and discrete Green functions of the Dirichlet wave operator.
//!
//! The continuous kernel is only ever applied through sine coefficients
//! (its pointwise series converges slowly); the discrete kernel is a finite
//! sum over `n - 1` modes and every spatial integral against a cell-constant
//! function reduces to an exact sum over cells.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::EvalError;
use crate::grid::{self, cell_index, eigenrelation_error, ibp_check, interpolate, mode_frequency, node, orthonormality_error, phi, phi_node};
use crate::math::{self, PI};
use crate::problem::ProblemSpec;

/// `∫_0^T sin²(ω s) ds`.
pub fn sin_sq_integral(omega: f64, horizon: f64) -> f64 {
    horizon / 2.0 - math::sin(2.0 * omega * horizon) / (4.0 * omega)
}

/// The discrete Green function `Gⁿ` on a mesh of `n` cells.
#[derive(Debug, Clone)]
pub struct DiscreteGreen {
    n: usize,
    omega: Vec<f64>,
    /// `basis[j-1][k] = φ_j(k/n)`, boundary entries included.
    basis: Vec<Vec<f64>>,
}

impl DiscreteGreen {
    pub fn new(n: usize) -> DiscreteGreen {
        assert!(n >= 2, "n >= 2");
        let omega = (1..n).map(|j| mode_frequency(n, j)).collect();
        let basis = (1..n)
            .map(|j| (0..=n).map(|k| phi_node(n, j, k)).collect())
            .collect();
        DiscreteGreen { n, omega, basis }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.n - 1
    }

    /// `jπ√c_j^n` for `j = 1..n-1` (index `j - 1`).
    pub fn frequencies(&self) -> &[f64] {
        &self.omega
    }

    /// `sin(ω_j t) / ω_j`.
    #[inline]
    pub fn weight(&self, j: usize, t: f64) -> f64 {
        let w = self.omega[j - 1];
        math::sin(w * t) / w
    }

    /// `∂_t` of [`weight`](Self::weight): `cos(ω_j t)`.
    #[inline]
    pub fn weight_rate(&self, j: usize, t: f64) -> f64 {
        math::cos(self.omega[j - 1] * t)
    }

    /// `φ_{j,n}(x) = Π_n(φ_j)(x)`.
    #[inline]
    pub fn basis_interp(&self, j: usize, x: f64) -> f64 {
        interpolate(&self.basis[j - 1], x)
    }

    /// `φ_j(κ_n(y))`.
    #[inline]
    pub fn basis_cell(&self, j: usize, y: f64) -> f64 {
        self.basis[j - 1][cell_index(self.n, y)]
    }

    pub fn basis_nodes(&self, j: usize) -> &[f64] {
        &self.basis[j - 1]
    }

    /// `Gⁿ_t(x, y)` as the exact finite mode sum.
    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        (1..self.n)
            .map(|j| self.weight(j, t) * self.basis_interp(j, x) * self.basis_cell(j, y))
            .sum()
    }

    /// `∂_t Gⁿ_t(x, y)`.
    pub fn eval_rate(&self, t: f64, x: f64, y: f64) -> f64 {
        (1..self.n)
            .map(|j| self.weight_rate(j, t) * self.basis_interp(j, x) * self.basis_cell(j, y))
            .sum()
    }

    /// Mode coefficients `∫_0^1 φ_j(κ_n(z)) g(κ_n(z)) dz = (1/n) Σ_{k<n} φ_j(k/n) g_k`.
    pub fn project(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n - 1];
        self.project_into(g, &mut out);
        out
    }

    pub fn project_into(&self, g: &[f64], out: &mut [f64]) {
        let inv_n = 1.0 / self.n as f64;
        for (j, o) in out.iter_mut().enumerate() {
            let b = &self.basis[j];
            // φ_j(0) = 0, so the first cell never contributes
            *o = (1..self.n).map(|k| b[k] * g[k]).sum::<f64>() * inv_n;
        }
    }

    /// Nodal values of `Σ_j a_j φ_{j,n}`; boundary entries are zero.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        self.synthesize_into(coeffs, &mut out);
        out
    }

    pub fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &a) in coeffs.iter().enumerate() {
            let b = &self.basis[j];
            for k in 1..self.n {
                out[k] += a * b[k];
            }
        }
    }

    /// `∫_0^1 Gⁿ_t(x, z) g(κ_n(z)) dz` for nodal `g`.
    pub fn apply(&self, t: f64, x: f64, g: &[f64]) -> f64 {
        self.project(g)
            .iter()
            .enumerate()
            .map(|(i, gj)| self.weight(i + 1, t) * self.basis_interp(i + 1, x) * gj)
            .sum()
    }

    /// `∫ Gⁿ_t(x,z) v0(κ_n z) dz + ∫ ∂_t Gⁿ_t(x,z) u0(κ_n z) dz`.
    pub fn initial_terms(&self, spec: &ProblemSpec, t: f64, x: f64) -> Result<f64, EvalError> {
        let (u0, v0) = self.initial_modes(spec)?;
        Ok((1..self.n)
            .map(|j| {
                (self.weight(j, t) * v0[j - 1] + self.weight_rate(j, t) * u0[j - 1])
                    * self.basis_interp(j, x)
            })
            .sum())
    }

    /// Mode coefficients of the nodal initial position and velocity.
    pub fn initial_modes(&self, spec: &ProblemSpec) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
        let u0 = nodal(self.n, |x| spec.u0.eval(x))?;
        let v0 = nodal(self.n, |x| spec.v0.eval(x))?;
        Ok((self.project(&u0), self.project(&v0)))
    }

    /// `‖Gⁿ_{T-·}(x0, ·)‖²_{L²(O_T)} = Σ_j φ_{j,n}(x0)² ∫_0^T sin²(ω_j s)/ω_j² ds`.
    pub fn terminal_norm_sq(&self, horizon: f64, x0: f64) -> f64 {
        (1..self.n)
            .map(|j| {
                let w = self.omega[j - 1];
                let b = self.basis_interp(j, x0);
                b * b * sin_sq_integral(w, horizon) / (w * w)
            })
            .sum()
    }

    /// `∫_0^1 |Gⁿ_t(x, z)|² dz` by Parseval over the discrete basis.
    pub fn l2_sq(&self, t: f64, x: f64) -> f64 {
        (1..self.n)
            .map(|j| {
                let v = self.weight(j, t) * self.basis_interp(j, x);
                v * v
            })
            .sum()
    }

    /// `∫_0^1 |Gⁿ_t(x, z) - Gⁿ_t(y, z)|² dz`.
    pub fn space_increment_sq(&self, t: f64, x: f64, y: f64) -> f64 {
        (1..self.n)
            .map(|j| {
                let v = self.weight(j, t) * (self.basis_interp(j, x) - self.basis_interp(j, y));
                v * v
            })
            .sum()
    }

    /// `∫_0^1 |Gⁿ_t(x, z) - Gⁿ_s(x, z)|² dz`.
    pub fn time_increment_sq(&self, t: f64, s: f64, x: f64) -> f64 {
        (1..self.n)
            .map(|j| {
                let v = (self.weight(j, t) - self.weight(j, s)) * self.basis_interp(j, x);
                v * v
            })
            .sum()
    }
}

/// Nodal samples `w(k/n)`, `k = 0..=n`.
pub fn nodal<E>(n: usize, w: impl Fn(f64) -> Result<f64, E>) -> Result<Vec<f64>, E> {
    (0..=n).map(|k| w(grid::node(n, k))).collect()
}

/// Truncated sine series of the continuous Green function `G`.
#[derive(Debug, Clone, Copy)]
pub struct GreenSeries {
    pub j_max: usize,
}

impl GreenSeries {
    pub fn new(j_max: usize) -> GreenSeries {
        assert!(j_max >= 1, "j_max >= 1");
        GreenSeries { j_max }
    }

    /// `4 n_ref` modes, strictly finer than any discrete kernel up to `n_ref`.
    pub fn for_reference(n_ref: usize) -> GreenSeries {
        GreenSeries::new(4 * n_ref)
    }

    #[inline]
    pub fn weight(j: usize, t: f64) -> f64 {
        let w = j as f64 * PI;
        math::sin(w * t) / w
    }

    /// `Σ_{j ≤ J} sin(jπt)/(jπ) φ_j(x) ĝ_j`.
    pub fn apply(&self, t: f64, x: f64, coeffs: &[f64]) -> f64 {
        coeffs
            .iter()
            .take(self.j_max)
            .enumerate()
            .map(|(i, g)| Self::weight(i + 1, t) * phi(i + 1, x) * g)
            .sum()
    }

    /// Bound `(√2/π) Σ_{j>J} |ĝ_j| / j` on the truncation error of [`apply`](Self::apply),
    /// evaluated over the coefficients supplied beyond `J`.
    pub fn apply_tail_bound(&self, coeffs: &[f64]) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .skip(self.j_max)
            .map(|(i, g)| g.abs() / (i + 1) as f64)
            .sum::<f64>()
            * math::SQRT_2
            / PI
    }

    /// Fejér (Cesàro) mean of the pointwise series; diagnostics only.
    pub fn eval_fejer(&self, t: f64, x: f64, y: f64) -> f64 {
        let cut = (self.j_max + 1) as f64;
        (1..=self.j_max)
            .map(|j| (1.0 - j as f64 / cut) * Self::weight(j, t) * phi(j, x) * phi(j, y))
            .sum()
    }

    /// Truncated `‖G_{T-·}(x0, ·)‖²_{L²(O_T)}` and a bound on the omitted tail.
    pub fn terminal_norm_sq(&self, horizon: f64, x0: f64) -> (f64, f64) {
        let sum = (1..=self.j_max)
            .map(|j| {
                let w = j as f64 * PI;
                let b = phi(j, x0);
                b * b * sin_sq_integral(w, horizon) / (w * w)
            })
            .sum();
        let j = self.j_max as f64;
        let tail = (horizon + 1.0 / (2.0 * PI * (j + 1.0))) / (PI * PI * j);
        (sum, tail)
    }

    pub fn l2_sq(&self, t: f64, x: f64) -> f64 {
        (1..=self.j_max)
            .map(|j| {
                let v = Self::weight(j, t) * phi(j, x);
                v * v
            })
            .sum()
    }

    pub fn space_increment_sq(&self, t: f64, x: f64, y: f64) -> f64 {
        (1..=self.j_max)
            .map(|j| {
                let v = Self::weight(j, t) * (phi(j, x) - phi(j, y));
                v * v
            })
            .sum()
    }

    pub fn time_increment_sq(&self, t: f64, s: f64, x: f64) -> f64 {
        (1..=self.j_max)
            .map(|j| {
                let v = (Self::weight(j, t) - Self::weight(j, s)) * phi(j, x);
                v * v
            })
            .sum()
    }
}

/// Sine coefficients `ĝ_j = ∫_0^1 g(z) φ_j(z) dz`, `j = 1..=j_max`, by
/// composite Simpson quadrature with `8 j_max` panels.
pub fn sine_coefficients<E>(
    g: impl Fn(f64) -> Result<f64, E>,
    j_max: usize,
) -> Result<Vec<f64>, E> {
    let panels = 8 * j_max;
    let h = 1.0 / panels as f64;
    let samples: Vec<f64> = (0..=panels)
        .map(|i| g(if i == panels { 1.0 } else { i as f64 * h }))
        .collect::<Result<_, _>>()?;
    Ok((1..=j_max)
        .map(|j| {
            let mut acc = 0.0;
            for (i, &v) in samples.iter().enumerate() {
                let w = if i == 0 || i == panels {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * v * phi(j, i as f64 * h);
            }
            acc * h / 3.0
        })
        .collect())
}

/// One named estimate from [`check_green_bounds`]. `n = 0` marks the
/// continuous kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundEntry {
    pub name: String,
    pub n: usize,
    pub estimate: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundReport {
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn get(&self, name: &str, n: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.name == name && e.n == n)
            .map(|e| e.estimate)
    }
}

/// Samples the Green-function estimates over random `(t, s, x, y)` with
/// `t ≠ s` and `x ≠ y`:
///
/// - `sup_abs`: max |G_t(x,y)| (continuous, Fejér mean only);
/// - `l2`: max ∫|G_t(x,·)|², taken over a deterministic `(t, x)` lattice
///   (400 time points per unit horizon, 200 space points) since the peak is
///   too narrow for random sampling to find reliably;
/// - `holder_x`: max ∫|G_t(x,·) − G_t(y,·)|² / |x − y|;
/// - `holder_t`: max ∫|G_t(x,·) − G_s(x,·)|² / |t − s|.
///
/// Continuous entries use `series`; one set of discrete entries per `ns`.
pub fn check_green_bounds(
    series: GreenSeries,
    ns: &[usize],
    horizon: f64,
    samples: usize,
    seed: u64,
) -> BoundReport {
    assert!(samples >= 100, "sample budget >= 100");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(samples);
    while pts.len() < samples {
        let t: f64 = rng.random::<f64>() * horizon;
        let s: f64 = rng.random::<f64>() * horizon;
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        if t != s && x != y {
            pts.push((t, s, x, y));
        }
    }

    let mut report = BoundReport::default();
    let mut push = |name: &str, n: usize, estimate: f64| {
        report.entries.push(BoundEntry {
            name: name.into(),
            n,
            estimate,
            samples,
        })
    };

    let mut sup = 0.0_f64;
    let l2 = lattice_sup(horizon, |t, x| series.l2_sq(t, x));
    let mut hx = 0.0_f64;
    let mut ht = 0.0_f64;
    for &(t, s, x, y) in &pts {
        sup = sup.max(series.eval_fejer(t, x, y).abs());
        hx = hx.max(series.space_increment_sq(t, x, y) / (x - y).abs());
        ht = ht.max(series.time_increment_sq(t, s, x) / (t - s).abs());
    }
    push("sup_abs", 0, sup);
    push("l2", 0, l2);
    push("holder_x", 0, hx);
    push("holder_t", 0, ht);

    for &n in ns {
        let dg = DiscreteGreen::new(n);
        let l2 = lattice_sup(horizon, |t, x| dg.l2_sq(t, x));
        let mut hx = 0.0_f64;
        let mut ht = 0.0_f64;
        for &(t, s, x, y) in &pts {
            hx = hx.max(dg.space_increment_sq(t, x, y) / (x - y).abs());
            ht = ht.max(dg.time_increment_sq(t, s, x) / (t - s).abs());
        }
        push("l2", n, l2);
        push("holder_x", n, hx);
        push("holder_t", n, ht);
    }
    report
}

fn lattice_sup(horizon: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let nt = (libm::ceil(400.0 * horizon) as usize).max(1);
    let nx = 200;
    let mut best = 0.0_f64;
    for i in 0..=nt {
        let t = horizon * i as f64 / nt as f64;
        for k in 0..=nx {
            best = best.max(f(t, k as f64 / nx as f64));
        }
    }
    best
}

/// Max errors of the exact identities at size `n`: eigenrelation,
/// summation by parts and orthonormality, and the interpolation identity
/// `∫ ∂_t Gⁿ_0(x, y) w(κ_n y) dy = Π_n(w)(x)`. Random nodal vectors come from `seed`.
pub fn identity_errors(n: usize, seed: u64) -> [(&'static str, f64); 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64));
    let draw = |rng: &mut ChaCha8Rng| {
        let mut w: Vec<f64> = (0..=n).map(|_| rng.random::<f64>() - 0.5).collect();
        w[0] = 0.0;
        w[n] = 0.0;
        w
    };
    let mut ibp = 0.0_f64;
    let mut interp = 0.0_f64;
    let dg = DiscreteGreen::new(n);
    for _ in 0..8 {
        let (u, v) = (draw(&mut rng), draw(&mut rng));
        ibp = ibp.max(ibp_check(&u, &v));
        for i in 0..=40 {
            let x = i as f64 / 40.0;
            let direct: f64 = (0..n).map(|k| dg.eval_rate(0.0, x, node(n, k)) * u[k]).sum::<f64>() / n as f64;
            interp = interp.max((direct - interpolate(&u, x)).abs());
        }
    }
    [
        ("eigenrelation", eigenrelation_error(n)),
        ("ibp", ibp),
        ("orthonormality", orthonormality_error(n)),
        ("interpolation", interp),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;
    use crate::grid::{eigenfactor_unchecked, node, pi_n};
    use crate::problem::Preset;

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn vanishes_at_time_zero_and_boundary() {
        let dg = DiscreteGreen::new(8);
        for &(x, y) in &[(0.3, 0.7), (0.55, 0.1), (0.9, 0.9)] {
            assert_eq!(dg.eval(0.0, x, y), 0.0);
        }
        for &y in &[0.2, 0.6] {
            assert!(dg.eval(0.4, 0.0, y).abs() < 1e-15);
            assert!(dg.eval(0.4, 1.0, y).abs() < 1e-15);
        }
    }

    #[test]
    fn nodal_symmetry() {
        let dg = DiscreteGreen::new(8);
        let a = dg.eval(0.3, 2.0 / 8.0, 3.0 / 8.0);
        let b = dg.eval(0.3, 3.0 / 8.0, 2.0 / 8.0);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn apply_cases() {
        let dg = DiscreteGreen::new(4);
        assert_eq!(dg.apply(0.4, 0.3, &[0.0; 5]), 0.0);

        // n = 2 has a single mode with ω = 4 sin(π/4); pick t with sin(ωt) = 0
        let dg2 = DiscreteGreen::new(2);
        let t = PI / dg2.frequencies()[0];
        assert!(dg2.apply(t, 0.5, &[0.0, 1.0, 0.0]).abs() < 1e-15);

        // single-mode reduction
        let g: Vec<f64> = (0..=4).map(|k| phi(1, node(4, k))).collect();
        let c = libm::sqrt(eigenfactor_unchecked(4, 1));
        let expected = math::sin(PI * 0.25 * c) / (PI * c) * dg.basis_interp(1, 0.5);
        assert!((dg.apply(0.25, 0.5, &g) - expected).abs() < 1e-14);
    }

    #[test]
    fn apply_matches_cell_sum_of_kernel() {
        let mut st = 7;
        for n in [4, 8, 16] {
            let dg = DiscreteGreen::new(n);
            let g: Vec<f64> = (0..=n).map(|_| lcg(&mut st) - 0.5).collect();
            for _ in 0..5 {
                let t = lcg(&mut st);
                let x = lcg(&mut st);
                // brute force: kernel is constant in z on each cell, sample at its left end
                let brute: f64 = (0..n)
                    .map(|k| dg.eval(t, x, node(n, k)) * g[k])
                    .sum::<f64>()
                    / n as f64;
                assert!((dg.apply(t, x, &g) - brute).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rate_at_time_zero_reproduces_interpolation() {
        let mut st = 11;
        for n in 2..=32 {
            let dg = DiscreteGreen::new(n);
            let mut w: Vec<f64> = (0..=n).map(|_| lcg(&mut st) - 0.5).collect();
            w[0] = 0.0;
            w[n] = 0.0;
            let coeffs = dg.project(&w);
            for i in 0..=20 {
                let x = i as f64 / 20.0;
                let lhs: f64 = (1..n).map(|j| coeffs[j - 1] * dg.basis_interp(j, x)).sum();
                assert!((lhs - interpolate(&w, x)).abs() < 1e-10, "n={n} x={x}");
                let direct: f64 = (0..n).map(|k| dg.eval_rate(0.0, x, node(n, k)) * w[k]).sum::<f64>()
                    / n as f64;
                assert!((direct - interpolate(&w, x)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn initial_terms_cases() {
        let spec = ProblemSpec::preset(Preset::Linear);
        let dg = DiscreteGreen::new(8);
        // t = 0: Π_n(u0)
        let pu = pi_n(8, |x| libm::sin(PI * x));
        for i in 0..=16 {
            let x = i as f64 / 16.0;
            assert!((dg.initial_terms(&spec, 0.0, x).unwrap() - pu.eval(x)).abs() < 1e-12);
        }
        // single-mode closed form
        let c = libm::sqrt(eigenfactor_unchecked(8, 1));
        let expected = math::cos(PI * 0.3 * c) * (1.0 / math::SQRT_2) * dg.basis_interp(1, 0.5);
        assert!((dg.initial_terms(&spec, 0.3, 0.5).unwrap() - expected).abs() < 1e-12);

        let mut zero = spec.clone();
        zero.u0 = Expression::parse("0").unwrap();
        assert_eq!(dg.initial_terms(&zero, 0.7, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn continuous_apply_cases() {
        let gs = GreenSeries::new(8);
        assert_eq!(gs.apply(0.5, 0.5, &[0.0; 8]), 0.0);
        let mut c = [0.0; 8];
        c[0] = 1.0;
        let v = gs.apply(0.5, 0.5, &c);
        assert!((v - math::SQRT_2 / PI).abs() < 1e-15);
    }

    #[test]
    fn continuous_tail_bound_holds_under_doubling() {
        // g(z) = z(1 - z): coefficients decay like j^-3
        let g = |z: f64| Ok::<f64, ()>(z * (1.0 - z));
        let fine = sine_coefficients(g, 256).unwrap();
        for j_max in [8, 16, 32, 64] {
            let gs = GreenSeries::new(j_max);
            let gs2 = GreenSeries::new(2 * j_max);
            let bound = gs.apply_tail_bound(&fine);
            for &(t, x) in &[(0.3, 0.4), (0.8, 0.9), (0.55, 0.5)] {
                let diff = (gs2.apply(t, x, &fine) - gs.apply(t, x, &fine)).abs();
                assert!(diff <= bound + 1e-15, "J={j_max}");
            }
        }
    }

    #[test]
    fn sine_coefficients_of_a_mode() {
        let c = sine_coefficients(|z| Ok::<f64, ()>(phi(3, z)), 6).unwrap();
        for (j, v) in c.iter().enumerate() {
            let target = if j == 2 { 1.0 } else { 0.0 };
            assert!((v - target).abs() < 1e-8, "j={} v={v}", j + 1);
        }
    }

    #[test]
    fn terminal_norms_converge() {
        let (cont, tail) = GreenSeries::new(4096).terminal_norm_sq(1.0, 0.5);
        // Σ_{j odd} 1/(jπ)² = 1/8
        assert!((cont - 0.125).abs() <= tail);
        let mut prev = f64::INFINITY;
        for n in [4, 8, 16, 32, 64] {
            let d = DiscreteGreen::new(n).terminal_norm_sq(1.0, 0.5);
            let gap = (d - 0.125).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn discrete_l2_bound_is_uniform_in_n() {
        let report = check_green_bounds(GreenSeries::new(1000), &[4, 8, 16, 32], 1.0, 500, 3);
        let vals: Vec<f64> = [4, 8, 16, 32]
            .iter()
            .map(|&n| report.get("l2", n).unwrap())
            .collect();
        let max = vals.iter().cloned().fold(0.0, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max.is_finite() && (max - min) / max <= 0.05, "{vals:?}");
        for name in ["sup_abs", "l2", "holder_x", "holder_t"] {
            assert!(report.get(name, 0).unwrap().is_finite());
        }
    }

    #[test]
    fn discrete_green_action_approaches_continuous() {
        let g = |z: f64| Ok::<f64, ()>(z * (1.0 - z) * (1.0 + z));
        let coeffs = sine_coefficients(g, 512).unwrap();
        let gs = GreenSeries::new(512);
        let pts = [(0.3, 0.4), (0.7, 0.25), (0.9, 0.8)];
        let mut prev = f64::INFINITY;
        for n in [4, 8, 16, 32, 64] {
            let dg = DiscreteGreen::new(n);
            let nod = nodal(n, g).unwrap();
            let err = pts
                .iter()
                .map(|&(t, x)| (gs.apply(t, x, &coeffs) - dg.apply(t, x, &nod)).abs())
                .fold(0.0, f64::max);
            assert!(err < prev, "n={n} err={err}");
            prev = err;
        }
    }
}

//! Problem instances: coefficients, initial data, horizon and observation point.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::expr::{EvalError, Expression, ParseError};

/// Smallest |σ| accepted before the nondegeneracy assumption counts as violated.
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-6;

/// Boundary compatibility tolerance for `u0(0)` and `u0(1)`.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Linear,
    NonlinA,
    NonlinB,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Linear, Preset::NonlinA, Preset::NonlinB];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Linear => "LINEAR",
            Preset::NonlinA => "NONLIN-A",
            Preset::NonlinB => "NONLIN-B",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(name.trim()))
    }

    fn sources(self) -> (&'static str, &'static str) {
        match self {
            Preset::Linear => ("0", "1"),
            Preset::NonlinA => ("sin(x)", "2 + sin(x)"),
            Preset::NonlinB => ("tanh(x)", "1 + 0.5*cos(x)"),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("expression `{key}`: {source}")]
    Parse { key: String, source: ParseError },
    #[error("horizon T must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("observation point x0 must lie in (0, 1), got {0}")]
    BadObservation(f64),
    #[error("u0 must vanish at x = 0 and x = 1 (|u0(0)| = {left:e}, |u0(1)| = {right:e})")]
    BoundaryIncompatible { left: f64, right: f64 },
    #[error("u0: {0}")]
    InitialData(EvalError),
    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

/// Coefficients `b`, `σ`, initial data `u0`, `v0`, horizon and observation point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub b: Expression,
    pub sigma: Expression,
    pub u0: Expression,
    pub v0: Expression,
    pub horizon: f64,
    pub x0: f64,
    pub lipschitz_hint: f64,
}

impl ProblemSpec {
    pub fn new(
        b: Expression,
        sigma: Expression,
        u0: Expression,
        v0: Expression,
        horizon: f64,
        x0: f64,
    ) -> Result<ProblemSpec, ProblemError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(ProblemError::BadHorizon(horizon));
        }
        if !(x0 > 0.0 && x0 < 1.0) {
            return Err(ProblemError::BadObservation(x0));
        }
        let left = u0.eval(0.0).map_err(ProblemError::InitialData)?.abs();
        let right = u0.eval(1.0).map_err(ProblemError::InitialData)?.abs();
        if left > BOUNDARY_TOL || right > BOUNDARY_TOL {
            return Err(ProblemError::BoundaryIncompatible { left, right });
        }
        Ok(ProblemSpec {
            b,
            sigma,
            u0,
            v0,
            horizon,
            x0,
            lipschitz_hint: 1.0,
        })
    }

    /// Preset with `u0 = sin(πx)`, `v0 = 0`, `T = 1`, `x0 = 0.5`.
    pub fn preset(p: Preset) -> ProblemSpec {
        let (b, s) = p.sources();
        let parse = |s: &str| Expression::parse(s).expect("preset expression");
        let mut spec = ProblemSpec::new(
            parse(b),
            parse(s),
            parse("sin(pi*x)"),
            parse("0"),
            1.0,
            0.5,
        )
        .expect("preset is valid");
        spec.lipschitz_hint = 1.0;
        spec
    }

    /// `Some(σ)` when `b ≡ 0` and `σ` is a nonzero constant.
    pub fn linear_sigma(&self) -> Option<f64> {
        match (self.b.as_constant(), self.sigma.as_constant()) {
            (Some(b), Some(s)) if b == 0.0 && s != 0.0 => Some(s),
            _ => None,
        }
    }

    /// Parses the `key = value` configuration format. Keys: `preset`, `b`,
    /// `sigma`, `u0`, `v0`, `T`, `x0`. A preset supplies defaults which the
    /// remaining keys override; without one, LINEAR is the base.
    pub fn from_config(text: &str) -> Result<ProblemSpec, ProblemError> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ProblemError::Config {
                line: line_no,
                msg: "expected `key = value`".to_string(),
            })?;
            let key = k.trim().to_string();
            if !matches!(key.as_str(), "preset" | "b" | "sigma" | "u0" | "v0" | "T" | "x0") {
                return Err(ProblemError::Config {
                    line: line_no,
                    msg: alloc::format!("unknown key {key:?}"),
                });
            }
            if entries.iter().any(|(_, k2, _)| *k2 == key) {
                return Err(ProblemError::Config {
                    line: line_no,
                    msg: alloc::format!("duplicate key {key:?}"),
                });
            }
            entries.push((line_no, key, v.trim().to_string()));
        }

        let base = match entries.iter().find(|(_, k, _)| k == "preset") {
            Some((_, _, name)) => Preset::from_name(name)
                .ok_or_else(|| ProblemError::UnknownPreset(name.clone()))?,
            None => Preset::Linear,
        };
        let mut spec = ProblemSpec::preset(base);
        for (line, key, value) in &entries {
            let expr = |v: &str| {
                Expression::parse(v).map_err(|source| ProblemError::Parse {
                    key: key.clone(),
                    source,
                })
            };
            let number = |v: &str| {
                v.parse::<f64>().map_err(|_| ProblemError::Config {
                    line: *line,
                    msg: alloc::format!("{key}: not a number: {v:?}"),
                })
            };
            match key.as_str() {
                "b" => spec.b = expr(value)?,
                "sigma" => spec.sigma = expr(value)?,
                "u0" => spec.u0 = expr(value)?,
                "v0" => spec.v0 = expr(value)?,
                "T" => spec.horizon = number(value)?,
                "x0" => spec.x0 = number(value)?,
                _ => {}
            }
        }
        let hint = spec.lipschitz_hint;
        let mut checked = ProblemSpec::new(spec.b, spec.sigma, spec.u0, spec.v0, spec.horizon, spec.x0)?;
        checked.lipschitz_hint = hint;
        Ok(checked)
    }
}

/// Outcome of [`validate_problem`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub boundary_ok: bool,
    pub u0_left: f64,
    pub u0_right: f64,
    pub sigma_min_abs: f64,
    pub sigma_floor: f64,
    pub nondegenerate: bool,
    pub lipschitz_b: f64,
    pub lipschitz_sigma: f64,
    /// Evaluation failures encountered while sampling, as `(x, error)`.
    pub eval_failures: Vec<(f64, EvalError)>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.boundary_ok && self.nondegenerate && self.eval_failures.is_empty()
    }
}

/// Samples `b` and `σ` on `[-range, range]` at `samples` equispaced points.
/// Lipschitz estimates are max difference quotients over consecutive samples.
pub fn validate_problem(
    spec: &ProblemSpec,
    range: f64,
    samples: usize,
    sigma_floor: f64,
) -> ValidationReport {
    assert!(range > 0.0 && samples >= 2, "range > 0 and samples >= 2");
    let u0_left = spec.u0.eval(0.0).map(f64::abs).unwrap_or(f64::INFINITY);
    let u0_right = spec.u0.eval(1.0).map(f64::abs).unwrap_or(f64::INFINITY);
    let mut failures = Vec::new();
    let mut sigma_min = f64::INFINITY;
    let mut lip_b = 0.0_f64;
    let mut lip_s = 0.0_f64;
    let mut prev: Option<(f64, f64, f64)> = None;
    let step = 2.0 * range / (samples - 1) as f64;
    for i in 0..samples {
        let x = if i + 1 == samples {
            range
        } else {
            -range + step * i as f64
        };
        let b = spec.b.eval(x);
        let s = spec.sigma.eval(x);
        match (b, s) {
            (Ok(b), Ok(s)) => {
                sigma_min = sigma_min.min(s.abs());
                if let Some((px, pb, ps)) = prev {
                    let dx = x - px;
                    lip_b = lip_b.max((b - pb).abs() / dx);
                    lip_s = lip_s.max((s - ps).abs() / dx);
                }
                prev = Some((x, b, s));
            }
            (Err(e), _) | (_, Err(e)) => {
                failures.push((x, e));
                prev = None;
            }
        }
    }
    ValidationReport {
        boundary_ok: u0_left <= BOUNDARY_TOL && u0_right <= BOUNDARY_TOL,
        u0_left,
        u0_right,
        sigma_min_abs: sigma_min,
        sigma_floor,
        nondegenerate: sigma_min >= sigma_floor,
        lipschitz_b: lip_b,
        lipschitz_sigma: lip_s,
        eval_failures: failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_with(b: &str, sigma: &str) -> ProblemSpec {
        let p = |s: &str| Expression::parse(s).unwrap();
        ProblemSpec::new(p(b), p(sigma), p("sin(3.141592653589793*x)"), p("0"), 1.0, 0.5).unwrap()
    }

    #[test]
    fn constant_sigma_passes() {
        let r = validate_problem(&spec_with("0", "1"), 3.0, 101, DEFAULT_SIGMA_FLOOR);
        assert!(r.passed());
        assert_eq!(r.sigma_min_abs, 1.0);
        assert_eq!(r.lipschitz_b, 0.0);
    }

    #[test]
    fn vanishing_sigma_is_flagged() {
        let r = validate_problem(&spec_with("0", "x"), 1.0, 101, DEFAULT_SIGMA_FLOOR);
        assert_eq!(r.sigma_min_abs, 0.0);
        assert!(!r.nondegenerate);
        assert!(!r.passed());
    }

    #[test]
    fn lipschitz_of_sine_from_dense_samples() {
        // oracle: max |sin(x)-sin(y)|/|x-y| over consecutive samples near 0
        let n = 10001;
        let h = 10.0 / (n - 1) as f64;
        let mut oracle = 0.0_f64;
        for i in 0..n - 1 {
            let x = -5.0 + h * i as f64;
            oracle = oracle.max((libm::sin(x + h) - libm::sin(x)).abs() / h);
        }
        let r = validate_problem(&spec_with("sin(x)", "1"), 5.0, n, DEFAULT_SIGMA_FLOOR);
        assert!(r.lipschitz_b >= 0.99 && r.lipschitz_b <= 1.0);
        assert!((r.lipschitz_b - oracle).abs() < 1e-9);
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        let p = |s: &str| Expression::parse(s).unwrap();
        assert!(matches!(
            ProblemSpec::new(p("0"), p("1"), p("x"), p("0"), 1.0, 0.5),
            Err(ProblemError::BoundaryIncompatible { .. })
        ));
        assert!(matches!(
            ProblemSpec::new(p("0"), p("1"), p("0"), p("0"), 1.0, 1.0),
            Err(ProblemError::BadObservation(_))
        ));
        assert!(matches!(
            ProblemSpec::new(p("0"), p("1"), p("0"), p("0"), 0.0, 0.5),
            Err(ProblemError::BadHorizon(_))
        ));
    }

    #[test]
    fn presets_are_nondegenerate() {
        for preset in Preset::ALL {
            let spec = ProblemSpec::preset(preset);
            let r = validate_problem(&spec, 10.0, 2001, DEFAULT_SIGMA_FLOOR);
            assert!(r.passed(), "{preset}");
            assert!(r.sigma_min_abs >= 0.5 - 1e-12);
        }
        assert_eq!(ProblemSpec::preset(Preset::Linear).linear_sigma(), Some(1.0));
        assert_eq!(ProblemSpec::preset(Preset::NonlinA).linear_sigma(), None);
    }

    #[test]
    fn config_overrides_preset() {
        let text = "# comment\npreset = NONLIN-A\nT = 0.75  # shorter\nx0 = 0.25\n";
        let spec = ProblemSpec::from_config(text).unwrap();
        assert_eq!(spec.horizon, 0.75);
        assert_eq!(spec.x0, 0.25);
        assert_eq!(spec.sigma, Expression::parse("2 + sin(x)").unwrap());

        let spec = ProblemSpec::from_config("sigma = 2").unwrap();
        assert_eq!(spec.linear_sigma(), Some(2.0));
    }

    #[test]
    fn config_rejects_unknown_keys_and_garbage() {
        assert!(matches!(
            ProblemSpec::from_config("colour = red"),
            Err(ProblemError::Config { line: 1, .. })
        ));
        assert!(matches!(
            ProblemSpec::from_config("\nT 1"),
            Err(ProblemError::Config { line: 2, .. })
        ));
        assert!(matches!(
            ProblemSpec::from_config("preset = QUADRATIC"),
            Err(ProblemError::UnknownPreset(_))
        ));
        assert!(matches!(
            ProblemSpec::from_config("b = sin(("),
            Err(ProblemError::Parse { .. })
        ));
        assert!(matches!(
            ProblemSpec::from_config("T = 1\nT = 2"),
            Err(ProblemError::Config { line: 2, .. })
        ));
    }
}

use proptest::prelude::*;

use swe_ldp_core::control::Control;
use swe_ldp_core::expr::{BinOp, Expression, Func, Node};
use swe_ldp_core::grid::{interpolate, Grid};
use swe_ldp_core::inverse::{invert_upsilon_n, modify_terminal};
use swe_ldp_core::mc::{wilson, Z95};
use swe_ldp_core::problem::{Preset, ProblemSpec};
use swe_ldp_core::skeleton::upsilon_n;

fn node() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![(0.0f64..10.0).prop_map(Node::Num), Just(Node::Var)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
            (inner.clone(), inner.clone(), 0..4usize).prop_map(|(a, b, op)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][op];
                Node::Bin(op, Box::new(a), Box::new(b))
            }),
            (inner.clone(), 0..4i32).prop_map(|(a, p)| Node::Pow(Box::new(a), p)),
            (inner.clone(), 0..5usize).prop_map(|(a, f)| {
                let f = [Func::Sin, Func::Cos, Func::Exp, Func::Tanh, Func::Abs][f];
                Node::Call(f, vec![a])
            }),
            (inner.clone(), inner, any::<bool>())
                .prop_map(|(a, b, mx)| Node::Call(if mx { Func::Max } else { Func::Min }, vec![a, b])),
        ]
    })
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn control(grid: Grid, seed_vals: &[f64]) -> Control {
    let vals = (0..grid.n * grid.m)
        .map(|i| seed_vals[i % seed_vals.len()] * (1.0 + (i % 7) as f64 * 0.1))
        .collect();
    Control::new(grid, vals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expression_display_round_trips(root in node(), xs in prop::collection::vec(-3.0f64..3.0, 4)) {
        let e = Expression::from_node(root);
        let text = e.to_string();
        let back = Expression::parse(&text).unwrap();
        for x in xs {
            match (e.eval(x), back.eval(x)) {
                (Ok(a), Ok(b)) => prop_assert!(same(a, b), "{text}: {a} vs {b}"),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{text}: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_between_bounds(vals in prop::collection::vec(-5.0f64..5.0, 3..20), x in 0.0f64..1.0) {
        let n = vals.len() - 1;
        for (k, v) in vals.iter().enumerate() {
            prop_assert!((interpolate(&vals, k as f64 / n as f64) - v).abs() < 1e-12);
        }
        let k = ((x * n as f64) as usize).min(n - 1);
        let u = interpolate(&vals, x);
        prop_assert!(u >= vals[k].min(vals[k + 1]) - 1e-12 && u <= vals[k].max(vals[k + 1]) + 1e-12);
    }

    #[test]
    fn action_scales_quadratically(vals in prop::collection::vec(-3.0f64..3.0, 1..8), c in -4.0f64..4.0) {
        let g = Grid::with_default_steps(4, 1.0).unwrap();
        let h = control(g, &vals);
        prop_assert!((h.scaled(c).action() - c * c * h.action()).abs() <= 1e-12 * h.action().max(1.0) * c * c + 1e-15);
    }

    #[test]
    fn linear_skeleton_is_affine(a in prop::collection::vec(-2.0f64..2.0, 1..6), b in prop::collection::vec(-2.0f64..2.0, 1..6)) {
        let spec = ProblemSpec::preset(Preset::Linear);
        let g = Grid::with_default_steps(8, 1.0).unwrap();
        let (h1, h2) = (control(g, &a), control(g, &b));
        let sum = Control::new(g, h1.values().iter().zip(h2.values()).map(|(x, y)| x + y).collect()).unwrap();
        let p0 = upsilon_n(&spec, &Control::zeros(g)).unwrap();
        let p1 = upsilon_n(&spec, &h1).unwrap();
        let p2 = upsilon_n(&spec, &h2).unwrap();
        let p12 = upsilon_n(&spec, &sum).unwrap();
        for ((s, x), (y, z)) in p12.positions().iter().zip(p1.positions()).zip(p2.positions().iter().zip(p0.positions())) {
            prop_assert!((s - x - y + z).abs() < 1e-11);
        }
    }

    #[test]
    fn inverse_recovers_same_grid_controls(vals in prop::collection::vec(-2.0f64..2.0, 1..6), preset in 0..3usize) {
        let spec = ProblemSpec::preset(Preset::ALL[preset]);
        let g = Grid::with_default_steps(8, 1.0).unwrap();
        let h = control(g, &vals).without_first_cell();
        let back = invert_upsilon_n(&spec, &upsilon_n(&spec, &h).unwrap(), 1e-6).unwrap();
        prop_assert!(back.distance(&h).unwrap() < 1e-8);
    }

    #[test]
    fn terminal_modification_hits_target(vals in prop::collection::vec(-2.0f64..2.0, 1..6), y in -3.0f64..3.0) {
        let spec = ProblemSpec::preset(Preset::NonlinB);
        let g = Grid::with_default_steps(8, 1.0).unwrap();
        let f = upsilon_n(&spec, &control(g, &vals)).unwrap();
        let moved = modify_terminal(&f, y, spec.x0).unwrap();
        prop_assert!((moved.terminal_value(spec.x0) - y).abs() < 1e-12);
        prop_assert_eq!(moved.position(0), f.position(0));
    }

    #[test]
    fn wilson_interval_brackets_estimate(samples in 1usize..100_000, frac in 0.0f64..=1.0) {
        let hits = ((samples as f64) * frac) as usize;
        let (lo, hi) = wilson(hits, samples, Z95);
        let p = hits as f64 / samples as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }
}

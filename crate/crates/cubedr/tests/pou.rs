use cubedr::model::{parse_plots, Cover, Model};
use cubedr::pou::{check_pou, lambda_ab, psi_boundary, stabilizer, BaseFunction, MvSplit, PouBuilder};
use cubedr::rng::Rng;
use cubedr::shipped;
use proptest::prelude::*;

proptest! {
    #[test]
    fn stabilizer_is_a_clamped_ramp(s in -2.0f64..3.0, t in -2.0f64..3.0) {
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        prop_assert!(stabilizer(lo) <= stabilizer(hi));
        if t <= 0.0 { prop_assert_eq!(stabilizer(t), 0.0); }
        if t >= 1.0 { prop_assert_eq!(stabilizer(t), 1.0); }
        prop_assert!((stabilizer(t) + stabilizer(1.0 - t) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stabilizer_is_strict_inside(t in 0.05f64..0.94) {
        prop_assert!(stabilizer(t) < stabilizer(t + 0.01));
    }

    #[test]
    fn ramps(a in -1.0f64..1.0, w in 0.01f64..2.0, t in -2.0f64..3.0) {
        let b = a + w;
        let v = lambda_ab(a, b, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        if t <= a + w / 4.0 { prop_assert_eq!(v, 0.0); }
        if t >= b - w / 4.0 { prop_assert_eq!(v, 1.0); }
        prop_assert!(lambda_ab(b, a, t).is_err());
    }

    #[test]
    fn collar_function(a in 0.01f64..0.49, x in prop::collection::vec(0.0f64..1.0, 1..4), k in 0usize..3, side in any::<bool>()) {
        let mut y = x.clone();
        let i = k % y.len();
        y[i] = if side { 1.0 } else { 0.0 };
        prop_assert_eq!(psi_boundary(a, &y).unwrap(), 1.0);
        let centre = vec![0.5; x.len()];
        prop_assert_eq!(psi_boundary(a, &centre).unwrap(), 0.0);
        let v = psi_boundary(a, &x).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }
}

/// Affine plots into the circle: `x ↦ u + (v − u)·x` with `u, v ∈ {0, 1/4, …, 2}`.
fn circle_plot(u: i64, v: i64) -> String {
    format!("plot 1 : ({u}/4 + {}/4*x1)\n", v - u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn circle_plots(u in 0i64..9, v in 0i64..9) {
        let s = shipped::load("circle").unwrap();
        let cover = s.cover.as_ref().unwrap();
        let b = PouBuilder::new(&s.model, cover, BaseFunction::Urysohn, 16).unwrap();
        let plots = parse_plots(&circle_plot(u, v), 1).unwrap();
        let r = check_pou(&b, &plots, 16).unwrap();
        prop_assert!(r.passes(1e-12), "{:?}", r);
    }

    #[test]
    fn torus_plots(a in 0i64..5, c in 0i64..5, bend in 0i64..3) {
        let s = shipped::load("torus").unwrap();
        let cover = s.cover.as_ref().unwrap();
        let b = PouBuilder::new(&s.model, cover, BaseFunction::Urysohn, 8).unwrap();
        let text = format!("plot 2 : ({a}/4 + x1, {c}/8 + 1/2*x2*x1^{bend})\n");
        let plots = parse_plots(&text, 2).unwrap();
        let r = check_pou(&b, &plots, 8).unwrap();
        prop_assert!(r.passes(1e-12), "{:?}", r);
    }

    #[test]
    fn split_reconstructs(seed in any::<u64>()) {
        let s = shipped::load("torus").unwrap();
        let cover = s.cover.as_ref().unwrap();
        let b = PouBuilder::new(&s.model, cover, BaseFunction::Urysohn, 16).unwrap();
        for f in &s.forms {
            let r = MvSplit::new(&b, f).check(16, &mut Rng::new(seed)).unwrap();
            prop_assert!(r.reconstruction_error < 1e-10);
            prop_assert_eq!(r.support_violations, 0);
        }
    }
}

#[test]
fn point_plots_and_three_valued_base() {
    let m = Model::parse("[0,1]\n[1,2]\n").unwrap();
    let cover = Cover::parse("cover A = cells([0,1])\ncover B = cells([1,2])\n", &m).unwrap();
    for base in [BaseFunction::Urysohn, BaseFunction::ThreeValued] {
        let b = PouBuilder::new(&m, &cover, base, 16).unwrap();
        let deep_a = parse_plots("plot 0 : (1/8)\n", 1).unwrap();
        assert_eq!(b.eval_plot(&deep_a[0], &[]).unwrap(), (1.0, 0.0));
        let deep_b = parse_plots("plot 0 : (15/8)\n", 1).unwrap();
        assert_eq!(b.eval_plot(&deep_b[0], &[]).unwrap(), (0.0, 1.0));
        let r = check_pou(&b, &parse_plots("plot 1 : (2*x1)\n", 1).unwrap(), 32).unwrap();
        assert!(r.passes(1e-12), "{base:?}: {r:?}");
    }
}

#[test]
fn uncovered_points_are_reported() {
    let m = Model::parse("[0,1]").unwrap();
    let cover = Cover::parse("cover A = ball((0), 1/4)\ncover B = ball((1), 1/4)\n", &m).unwrap();
    let b = PouBuilder::new(&m, &cover, BaseFunction::Urysohn, 16).unwrap();
    assert!(matches!(b.rho(&[0.5]), Err(cubedr::Error::Coverage(_))));
}

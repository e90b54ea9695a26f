use cubedr::hurewicz::{exactness_defect, green_check, integrate_1form, PathPlot, Segment};
use cubedr::model::{CellForm, Model};
use cubedr::poly::parse_with;
use cubedr::polyform::{PolyForm, PolyMap};
use cubedr::rng::Rng;
use cubedr::{qi, random, shipped, Q};
use proptest::prelude::*;

/// `t ↦ u + (v − u)·t^k`, which stays between `u` and `v`.
fn ramp(u: &Q, v: &Q, k: u32) -> String {
    format!("{u} + ({})*t^{k}", v - u)
}

fn segment(model: &Model, cell: &str, from: &[Q], to: &[Q], k: u32) -> Segment {
    let comps = from.iter().zip(to).map(|(u, v)| parse_with(&ramp(u, v, k), &["t"]).unwrap()).collect();
    Segment { cell: model.resolve(cell).unwrap(), map: PolyMap::new(1, comps).unwrap() }
}

fn point(rng: &mut Rng, n: usize) -> Vec<Q> {
    random::grid_point(rng, n, 8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fundamental_theorem(seed in any::<u64>(), k in 1u32..4) {
        let mut rng = Rng::new(seed);
        let m = Model::parse("[0,1]x[0,1]").unwrap();
        let f = random::polynomial(&mut rng, 2, 3, 4);
        let mut w = CellForm::zero("dF", 1);
        w.cells.insert(m.resolve("[0,1]x[0,1]").unwrap(), PolyForm::function(f.clone()).d());
        let (a, b) = (point(&mut rng, 2), point(&mut rng, 2));
        let path = PathPlot::new(&m, "p", vec![segment(&m, "[0,1]x[0,1]", &a, &b, k)]).unwrap();
        let v = integrate_1form(&m, &w, &path).unwrap();
        prop_assert_eq!(v, f.eval(&b).unwrap() - f.eval(&a).unwrap());
    }

    #[test]
    fn concatenation_and_reversal(seed in any::<u64>(), k1 in 1u32..4, k2 in 1u32..4) {
        let mut rng = Rng::new(seed);
        let s = shipped::load("torus").unwrap();
        let (a, b, c) = (point(&mut rng, 2), point(&mut rng, 2), point(&mut rng, 2));
        let p1 = PathPlot::new(&s.model, "p1", vec![segment(&s.model, "[0,1]x[0,1]", &a, &b, k1)]).unwrap();
        let p2 = PathPlot::new(&s.model, "p2", vec![segment(&s.model, "[0,1]x[0,1]", &b, &c, k2)]).unwrap();
        let p12 = p1.concat(&s.model, &p2).unwrap();
        for w in &s.forms {
            let (i1, i2) = (integrate_1form(&s.model, w, &p1).unwrap(), integrate_1form(&s.model, w, &p2).unwrap());
            prop_assert_eq!(integrate_1form(&s.model, w, &p12).unwrap(), &i1 + &i2);
            prop_assert_eq!(integrate_1form(&s.model, w, &p1.reversed()).unwrap(), -i1);
        }
    }

    #[test]
    fn homotopic_paths_agree(seed in any::<u64>(), k1 in 1u32..5, k2 in 1u32..5) {
        // same endpoints, different speeds per coordinate: homotopic inside the cell
        let mut rng = Rng::new(seed);
        let m = Model::parse("[0,1]x[0,1]").unwrap();
        let mut w = CellForm::zero("w", 1);
        w.cells.insert(m.resolve("[0,1]x[0,1]").unwrap(), random::closed_one_form(&mut rng, 2, 2));
        let (a, b) = (point(&mut rng, 2), point(&mut rng, 2));
        let cell = m.resolve("[0,1]x[0,1]").unwrap();
        let comps = vec![
            parse_with(&ramp(&a[0], &b[0], k1), &["t"]).unwrap(),
            parse_with(&ramp(&a[1], &b[1], k2), &["t"]).unwrap(),
        ];
        let bent = PathPlot::new(&m, "bent", vec![Segment { cell, map: PolyMap::new(1, comps).unwrap() }]).unwrap();
        let straight = PathPlot::new(&m, "straight", vec![segment(&m, "[0,1]x[0,1]", &a, &b, 1)]).unwrap();
        prop_assert_eq!(integrate_1form(&m, &w, &bent).unwrap(), integrate_1form(&m, &w, &straight).unwrap());
    }

    #[test]
    fn green_formula(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let n = rng.range(1, 3) as usize;
        let h = random::map(&mut rng, 2, n, 2);
        let closed = random::closed_one_form(&mut rng, n, 2);
        prop_assert_eq!(green_check(&closed, &h).unwrap().boundary, qi(0));
        let any = random::form(&mut rng, n, 1, 2);
        prop_assert_eq!(green_check(&any, &h).unwrap().stokes_defect(), qi(0));
    }
}

#[test]
fn green_on_the_unit_square() {
    let w = PolyForm::from_terms(2, 1, vec![(cubedr::exterior::MultiIndex::new(2, vec![1]).unwrap(), cubedr::poly::parse("x2", 2).unwrap())]).unwrap();
    let r = green_check(&w, &PolyMap::identity(2)).unwrap();
    assert_eq!(r.boundary, qi(-1));
    assert_eq!(r.interior, qi(-1));
}

#[test]
fn shipped_pairings() {
    let c = shipped::load("circle").unwrap();
    let g = c.form("g").unwrap();
    assert_eq!(integrate_1form(&c.model, g, &c.loops[0]).unwrap(), qi(1));
    assert_eq!(integrate_1form(&c.model, g, &c.loops[0].reversed()).unwrap(), qi(-1));
    let r = exactness_defect(&c.model, c.form("exact").unwrap(), &c.loops).unwrap();
    assert_eq!(r.integrals, vec![qi(0)]);
    let f = r.primitive.unwrap();
    for (cell, piece) in &f.cells {
        assert_eq!(piece.d(), c.form("exact").unwrap().cells[cell]);
    }

    let t = shipped::load("torus").unwrap();
    let table: Vec<Vec<Q>> = ["alpha", "beta"]
        .iter()
        .map(|n| t.loops.iter().map(|l| integrate_1form(&t.model, t.form(n).unwrap(), l).unwrap()).collect())
        .collect();
    assert_eq!(table, vec![vec![qi(1), qi(0)], vec![qi(0), qi(1)]]);
    let r = exactness_defect(&t.model, t.form("exact").unwrap(), &t.loops).unwrap();
    assert!(r.primitive.is_some());

    let w = shipped::load("wedge").unwrap();
    let r = exactness_defect(&w.model, w.form("exact").unwrap(), &w.loops).unwrap();
    assert_eq!(r.integrals, vec![qi(0), qi(0)]);
    assert!(r.primitive.is_some());
    let r = exactness_defect(&w.model, w.form("a").unwrap(), &w.loops).unwrap();
    assert_eq!(r.integrals, vec![qi(1), qi(0)]);
    assert!(r.primitive.is_none());
}

#[test]
fn broken_paths_are_rejected() {
    let c = shipped::load("circle").unwrap();
    let gap = "segment [0,1] : (t)\nsegment [1,2] : (1/2 + 1/2*t)\n";
    assert!(PathPlot::parse_all(gap, &c.model).is_err());
    assert!(PathPlot::parse_all("segment [0,1] : (t, t)\n", &c.model).is_err());
    assert!(matches!(PathPlot::parse_all("segment [0,1] (t)\n", &c.model), Err(cubedr::Error::Parse { line: 1, .. })));
}

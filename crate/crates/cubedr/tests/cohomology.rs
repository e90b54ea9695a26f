use std::collections::{BTreeMap, BTreeSet};

use cubedr::cohomology::{betti, chain_complex, derham_compare, disjoint_union_betti, mayer_vietoris, mayer_vietoris_sub};
use cubedr::cubicalset::{subdivide_sd, CubicSet, CubicalComplex, SubdivPair, Subordination};
use cubedr::model::{Cover, Model};
use cubedr::polyform::PolyMap;
use cubedr::{q, qi, shipped, Error};
use proptest::prelude::*;

/// Unit squares `[x,x+1]x[y,y+1]` with `0 ≤ x, y < 3`, as a model.
fn grid_model(squares: &BTreeSet<(i64, i64)>) -> Model {
    let text: String = squares.iter().map(|(x, y)| format!("[{x},{}]x[{y},{}]\n", x + 1, y + 1)).collect();
    Model::parse(&text).unwrap()
}

/// `b0` by union-find over shared vertices, `b1 = b0 − χ`, `b2 = 0`.
fn planar_oracle(squares: &BTreeSet<(i64, i64)>) -> Vec<usize> {
    let mut verts = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for &(x, y) in squares {
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            verts.insert((x + dx, y + dy));
        }
        edges.insert((x, y, 0));
        edges.insert((x, y + 1, 0));
        edges.insert((x, y, 1));
        edges.insert((x + 1, y, 1));
    }
    let mut parent: BTreeMap<(i64, i64), (i64, i64)> = verts.iter().map(|&v| (v, v)).collect();
    fn find(p: &mut BTreeMap<(i64, i64), (i64, i64)>, v: (i64, i64)) -> (i64, i64) {
        let u = p[&v];
        if u == v {
            v
        } else {
            let r = find(p, u);
            p.insert(v, r);
            r
        }
    }
    for &(x, y, dir) in &edges {
        let a = find(&mut parent, (x, y));
        let b = find(&mut parent, if dir == 0 { (x + 1, y) } else { (x, y + 1) });
        parent.insert(a, b);
    }
    let b0 = verts.iter().map(|&v| find(&mut parent, v)).collect::<BTreeSet<_>>().len() as i64;
    let chi = verts.len() as i64 - edges.len() as i64 + squares.len() as i64;
    vec![b0 as usize, (b0 - chi) as usize, 0]
}

fn squares() -> impl Strategy<Value = BTreeSet<(i64, i64)>> {
    prop::collection::btree_set((0i64..3, 0i64..3), 1..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grid_models_match_the_euler_oracle(s in squares()) {
        let cc = chain_complex(&grid_model(&s)).unwrap();
        prop_assert!(cc.is_complex());
        prop_assert_eq!(betti(&cc), planar_oracle(&s));
    }

    #[test]
    fn mayer_vietoris_is_exact_on_splits(s in squares(), mask in any::<u16>()) {
        let list: Vec<_> = s.iter().copied().collect();
        prop_assume!(list.len() >= 2);
        let m = grid_model(&s);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (k, &(x, y)) in list.iter().enumerate() {
            let c = m.resolve(&format!("[{x},{}]x[{y},{}]", x + 1, y + 1)).unwrap();
            if mask >> k & 1 == 1 { a.push(c) } else { b.push(c) }
        }
        prop_assume!(!a.is_empty() && !b.is_empty());
        let t = mayer_vietoris_sub(&m, &m.closure(&a), &m.closure(&b)).unwrap();
        prop_assert!(t.is_exact(), "{:?}", t.failures);
        prop_assert!(t.agrees());
    }

    #[test]
    fn betti_survives_subdivision(s in squares()) {
        // the same squares scaled into the unit square, every cell coned off
        let mut k = CubicalComplex::new(2);
        for &(x, y) in &s {
            let sq = CubicSet::lattice(vec![q(x, 3), q(y, 3)], vec![true, true], q(1, 3)).unwrap();
            k.insert_closure(&sq);
        }
        let model = Model::parse("[0,1]x[0,1]").unwrap();
        let cover = Cover::parse("cover A = ball((5, 5), 1/8)\ncover B = ball((-5, 5), 1/8)\n", &model).unwrap();
        let pair = SubdivPair::new(k, PolyMap::identity(2)).unwrap();
        let sub = Subordination::new(&model, &cover, &pair.plot).unwrap();
        let sd = subdivide_sd(&pair, &sub);
        prop_assert!(sd.complex.len() > pair.complex.len());
        let mut want = planar_oracle(&s);
        prop_assert_eq!(betti(&sd.complex.chain_complex().unwrap()), want.clone());
        want.truncate(3);
        prop_assert_eq!(betti(&pair.complex.chain_complex().unwrap()), want);
    }

    #[test]
    fn pairing_rank_never_exceeds_betti(c in prop::collection::vec(-3i64..4, 6)) {
        let t = shipped::load("torus").unwrap();
        let g = t.forms.clone();
        let mut forms = Vec::new();
        for pair in c.chunks(3) {
            let mut f = g[0].clone();
            f.name = "combo".into();
            f.cells.clear();
            for (w, k) in g.iter().zip(pair) {
                for (cell, piece) in &w.cells {
                    let add = piece.scale(&qi(*k));
                    let e = f.cells.entry(*cell).or_insert_with(|| cubedr::polyform::PolyForm::zero(2, 1));
                    *e = e.add(&add).unwrap();
                }
            }
            forms.push(f);
        }
        let r = derham_compare(&t.model, &forms).unwrap();
        prop_assert!(r.rank <= r.betti);
        let det = qi(c[0] * c[4] - c[1] * c[3]);
        prop_assert_eq!(r.rank == 2, det != qi(0));
    }
}

#[test]
fn shipped_chain_complexes() {
    for s in shipped::all().unwrap() {
        let cc = chain_complex(&s.model).unwrap();
        assert!(cc.is_complex(), "{}", s.name);
        let r = derham_compare(&s.model, &s.generators()).unwrap();
        assert!(r.full_rank(), "{}: rank {} vs betti {}", s.name, r.rank, r.betti);
        match (&s.cover, s.name) {
            // two balls around the ends: no subcomplex realises either set
            (Some(cover), "interval") => {
                assert!(matches!(mayer_vietoris(&s.model, cover), Err(Error::UnsupportedCover(_))))
            }
            (Some(cover), _) => {
                let t = mayer_vietoris(&s.model, cover).unwrap();
                assert!(t.is_exact() && t.agrees(), "{}", s.name);
            }
            (None, _) => {}
        }
    }
}

#[test]
fn sphere_and_circle_pieces() {
    let s = shipped::load("sphere").unwrap();
    let t = mayer_vietoris(&s.model, s.cover.as_ref().unwrap()).unwrap();
    assert_eq!(t.pieces(), [vec![1, 0, 0], vec![1, 0, 0], vec![1, 1, 0]]);
    assert_eq!(t.assembled, vec![1, 0, 1]);
    let t = shipped::load("torus").unwrap();
    let l = mayer_vietoris(&t.model, t.cover.as_ref().unwrap()).unwrap();
    assert_eq!(l.pieces(), [vec![1, 1, 0], vec![1, 1, 0], vec![2, 2, 0]]);
}

#[test]
fn unions_and_bad_covers() {
    let c = shipped::load("circle").unwrap();
    let p = shipped::load("point").unwrap();
    assert_eq!(disjoint_union_betti(&[c.model.clone(), p.model.clone()]).unwrap(), vec![2, 1]);
    assert_eq!(disjoint_union_betti(&[]).unwrap(), Vec::<usize>::new());
    let partial = Cover::parse("cover A = cells([0,1])\ncover B = cells([0,1])\n", &c.model).unwrap();
    assert!(matches!(mayer_vietoris(&c.model, &partial), Err(Error::UnsupportedCover(_))));
}

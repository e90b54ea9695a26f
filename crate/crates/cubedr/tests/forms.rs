use cubedr::exterior::{basis, dimension, wedge_basis};
use cubedr::polyform::{homotopy_identity_defect, PolyForm, PolyMap};
use cubedr::rng::Rng;
use cubedr::{q, random};
use proptest::prelude::*;

fn shape(rng: &mut Rng) -> (usize, usize) {
    let n = rng.range(1, 4) as usize;
    (n, rng.range(0, n as i64) as usize)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d_squared_vanishes(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let (n, p) = shape(&mut rng);
        let w = random::form(&mut rng, n, p, 3);
        prop_assert!(w.d().d().is_zero());
    }

    #[test]
    fn leibniz(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let n = rng.range(1, 4) as usize;
        let p = rng.range(0, n as i64) as usize;
        let r = rng.range(0, (n - p) as i64) as usize;
        let a = random::form(&mut rng, n, p, 2);
        let b = random::form(&mut rng, n, r, 2);
        let lhs = a.wedge(&b).unwrap().d();
        let mut second = a.wedge(&b.d()).unwrap();
        if p % 2 == 1 {
            second = second.neg();
        }
        let rhs = a.d().wedge(&b).unwrap().add(&second).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn graded_commutativity(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let n = rng.range(1, 4) as usize;
        let p = rng.range(0, n as i64) as usize;
        let r = rng.range(0, (n - p) as i64) as usize;
        let a = random::form(&mut rng, n, p, 3);
        let b = random::form(&mut rng, n, r, 3);
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        prop_assert_eq!(ab, if p * r % 2 == 1 { ba.neg() } else { ba });
    }

    #[test]
    fn pullback_is_functorial(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let (m, j) = (rng.range(1, 3) as usize, rng.range(1, 3) as usize);
        let (n, p) = shape(&mut rng);
        let f = random::map(&mut rng, m, j, 2);
        let g = random::map(&mut rng, j, n, 2);
        let w = random::form(&mut rng, n, p, 2);
        prop_assert_eq!(g.after(&f).unwrap().pullback(&w).unwrap(), f.pullback(&g.pullback(&w).unwrap()).unwrap());
        prop_assert_eq!(PolyMap::identity(n).pullback(&w).unwrap(), w);
    }

    #[test]
    fn pullback_commutes_with_d_and_wedge(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let m = rng.range(1, 3) as usize;
        let n = rng.range(1, 3) as usize;
        let p = rng.range(0, n as i64) as usize;
        let f = random::map(&mut rng, m, n, 2);
        let a = random::form(&mut rng, n, p, 2);
        let b = random::form(&mut rng, n, n - p, 1);
        prop_assert_eq!(f.pullback(&a.d()).unwrap(), f.pullback(&a).unwrap().d());
        prop_assert_eq!(
            f.pullback(&a.wedge(&b).unwrap()).unwrap(),
            f.pullback(&a).unwrap().wedge(&f.pullback(&b).unwrap()).unwrap()
        );
    }

    #[test]
    fn homotopy_identity(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let n = rng.range(0, 2) as usize;
        let (t, p) = shape(&mut rng);
        let f = random::map(&mut rng, n + 1, t, 2);
        let w = random::form(&mut rng, t, p, 2);
        prop_assert!(homotopy_identity_defect(&f, &w).unwrap().is_zero());
    }

    #[test]
    fn evaluation_is_linear(seed in any::<u64>(), num in -8i64..8, den in 1i64..5) {
        let mut rng = Rng::new(seed);
        let (n, p) = shape(&mut rng);
        let a = random::form(&mut rng, n, p, 2);
        let b = random::form(&mut rng, n, p, 2);
        let x = random::grid_point(&mut rng, n, 6);
        let c = q(num, den);
        let lhs = a.add(&b.scale(&c)).unwrap().evaluate(&x).unwrap();
        let (ea, eb) = (a.evaluate(&x).unwrap(), b.evaluate(&x).unwrap());
        for idx in basis(n, p as i64) {
            let z = cubedr::qi(0);
            let want = ea.get(&idx).unwrap_or(&z) + eb.get(&idx).unwrap_or(&z) * &c;
            prop_assert_eq!(lhs.get(&idx).unwrap_or(&z), &want);
        }
    }
}

#[test]
fn basis_sizes_are_binomial() {
    for n in 0..6 {
        let total: usize = (0..=n as i64).map(|p| dimension(n, p)).sum();
        assert_eq!(total, 1 << n);
        assert_eq!(basis(n, -1).len(), 0);
        assert_eq!(basis(n, n as i64 + 1).len(), 0);
    }
}

#[test]
fn wedge_of_basis_elements() {
    let b = basis(3, 1);
    let (s, idx) = wedge_basis(&b[1], &b[0]).unwrap();
    assert_eq!(s, -1);
    assert_eq!(idx.indices(), &[1, 2]);
    assert_eq!(wedge_basis(&b[0], &b[0]).unwrap().0, 0);
}

#[test]
fn fiber_integral_of_dt() {
    // ∫ over t of t·dt∧dx1 is (1/2)·dx1
    let w = PolyForm::from_terms(
        2,
        2,
        vec![(cubedr::exterior::MultiIndex::new(2, vec![1, 2]).unwrap(), cubedr::poly::parse("x1", 2).unwrap())],
    )
    .unwrap();
    let f = w.fiber_integrate().unwrap();
    assert_eq!(f, PolyForm::basic(1, &[1]).unwrap().scale(&q(1, 2)));
}

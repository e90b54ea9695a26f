//! Random polynomial data for the property suites.

use crate::exterior::basis;
use crate::poly::Polynomial;
use crate::polyform::{PolyForm, PolyMap};
use crate::rng::Rng;
use crate::{q, Q};

/// Small rational `a/b` with `|a| ≤ 5`, `1 ≤ b ≤ 4`.
pub fn rational(rng: &mut Rng) -> Q {
    q(rng.range(-5, 5), rng.range(1, 4))
}

/// A polynomial in `n` variables with at most `terms` monomials of total
/// degree at most `max_deg`.
pub fn polynomial(rng: &mut Rng, n: usize, max_deg: u32, terms: usize) -> Polynomial {
    let k = rng.range(1, terms.max(1) as i64) as usize;
    let mut out = Polynomial::zero(n);
    for _ in 0..k {
        let deg = rng.range(0, max_deg as i64) as u32;
        let mut e = vec![0u32; n];
        if n > 0 {
            for _ in 0..deg {
                e[rng.index(n)] += 1;
            }
        }
        out.add_assign(&Polynomial::monomial(e, rational(rng)));
    }
    out
}

/// A `p`-form on `□ⁿ` touching at most three basis elements.
pub fn form(rng: &mut Rng, n: usize, p: usize, max_deg: u32) -> PolyForm {
    let b = basis(n, p as i64);
    let mut out = PolyForm::zero(n, p);
    if b.is_empty() {
        return out;
    }
    let k = rng.range(1, b.len().min(3) as i64);
    for _ in 0..k {
        let idx = b[rng.index(b.len())].clone();
        let t = PolyForm::term(idx, polynomial(rng, n, max_deg, 3));
        out = out.add(&t).expect("same shape");
    }
    out
}

/// A polynomial map `□ᵐ → ℝⁿ` with components of degree at most `max_deg`.
pub fn map(rng: &mut Rng, m: usize, n: usize, max_deg: u32) -> PolyMap {
    let comps = (0..n).map(|_| polynomial(rng, m, max_deg, 3)).collect();
    PolyMap::new(m, comps).expect("components in m variables")
}

/// A closed 1-form on `□ⁿ`: the differential of a random polynomial.
pub fn closed_one_form(rng: &mut Rng, n: usize, max_deg: u32) -> PolyForm {
    PolyForm::function(polynomial(rng, n, max_deg + 1, 4)).d()
}

/// A rational point of `[0,1]ⁿ` with denominator `den`.
pub fn grid_point(rng: &mut Rng, n: usize, den: i64) -> Vec<Q> {
    (0..n).map(|_| q(rng.range(0, den), den)).collect()
}

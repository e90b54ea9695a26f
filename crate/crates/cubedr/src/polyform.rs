//! Differential forms on `□ⁿ` with polynomial coefficients over ℚ.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::cube_cat::{Coord, CubeMorphism};
use crate::exterior::{basis, wedge_basis, MultiIndex};
use crate::poly::Polynomial;
use crate::{qi, Error, Result, Q};

/// A `p`-form `Σ a_I dx_I` on `□ⁿ`; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyForm {
    n: usize,
    p: usize,
    coeffs: BTreeMap<MultiIndex, Polynomial>,
}

impl PolyForm {
    pub fn zero(n: usize, p: usize) -> Self {
        PolyForm { n, p, coeffs: BTreeMap::new() }
    }

    /// The 0-form given by a polynomial.
    pub fn function(f: Polynomial) -> Self {
        let n = f.n();
        PolyForm::term(MultiIndex::unit(n), f)
    }

    /// A single term `a dx_I`.
    pub fn term(idx: MultiIndex, a: Polynomial) -> Self {
        assert_eq!(idx.n(), a.n(), "coefficient variables must match ambient dimension");
        let mut f = PolyForm::zero(idx.n(), idx.degree());
        if !a.is_zero() {
            f.coeffs.insert(idx, a);
        }
        f
    }

    /// `dx_{i₁}∧…∧dx_{i_p}` with unit coefficient; indices need not be sorted.
    pub fn basic(n: usize, idx: &[usize]) -> Result<Self> {
        let mut acc = PolyForm::function(Polynomial::one(n));
        for &i in idx {
            let dxi = PolyForm::term(MultiIndex::new(n, vec![i])?, Polynomial::one(n));
            acc = acc.wedge(&dxi)?;
        }
        if acc.is_zero() {
            return Ok(PolyForm::zero(n, idx.len()));
        }
        Ok(acc)
    }

    pub fn from_terms(n: usize, p: usize, terms: Vec<(MultiIndex, Polynomial)>) -> Result<Self> {
        let mut f = PolyForm::zero(n, p);
        for (idx, a) in terms {
            if idx.n() != n || idx.degree() != p || a.n() != n {
                return Err(Error::arg(format!(
                    "term {idx} does not fit a {p}-form on a {n}-cube"
                )));
            }
            f.add_coeff(idx, &a);
        }
        Ok(f)
    }

    fn add_coeff(&mut self, idx: MultiIndex, a: &Polynomial) {
        if a.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(idx.clone()).or_insert_with(|| Polynomial::zero(a.n()));
        slot.add_assign(a);
        if slot.is_zero() {
            self.coeffs.remove(&idx);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, Polynomial> {
        &self.coeffs
    }

    pub fn coeff(&self, idx: &MultiIndex) -> Polynomial {
        self.coeffs.get(idx).cloned().unwrap_or_else(|| Polynomial::zero(self.n))
    }

    /// Highest total degree among the coefficients.
    pub fn coeff_degree(&self) -> u32 {
        self.coeffs.values().map(|a| a.degree()).max().unwrap_or(0)
    }

    fn same_shape(&self, other: &PolyForm) -> Result<()> {
        if self.n != other.n || self.p != other.p {
            return Err(Error::arg(format!(
                "cannot combine a {}-form on a {}-cube with a {}-form on a {}-cube",
                self.p, self.n, other.p, other.n
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &PolyForm) -> Result<PolyForm> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (k, a) in &other.coeffs {
            out.add_coeff(k.clone(), a);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &PolyForm) -> Result<PolyForm> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> PolyForm {
        PolyForm {
            n: self.n,
            p: self.p,
            coeffs: self.coeffs.iter().map(|(k, a)| (k.clone(), -a)).collect(),
        }
    }

    pub fn scale(&self, c: &Q) -> PolyForm {
        if c.is_zero() {
            return PolyForm::zero(self.n, self.p);
        }
        PolyForm {
            n: self.n,
            p: self.p,
            coeffs: self.coeffs.iter().map(|(k, a)| (k.clone(), a.scale(c))).collect(),
        }
    }

    /// `dω = Σᵢ ∂a/∂xᵢ dxᵢ∧dx_I`.
    pub fn d(&self) -> PolyForm {
        let mut out = PolyForm::zero(self.n, self.p + 1);
        for (idx, a) in &self.coeffs {
            for i in 1..=self.n {
                if idx.contains(i) {
                    continue;
                }
                let da = a.derivative(i);
                if da.is_zero() {
                    continue;
                }
                let dxi = MultiIndex::from_sorted_unchecked(self.n, vec![i]);
                let (sign, merged) = wedge_basis(&dxi, idx).expect("same ambient");
                out.add_coeff(merged, &da.scale(&qi(sign as i64)));
            }
        }
        out
    }

    pub fn wedge(&self, other: &PolyForm) -> Result<PolyForm> {
        if self.n != other.n {
            return Err(Error::arg(format!(
                "wedge of forms on {}- and {}-cubes",
                self.n, other.n
            )));
        }
        let mut out = PolyForm::zero(self.n, self.p + other.p);
        for (i1, a) in &self.coeffs {
            for (i2, b) in &other.coeffs {
                let (sign, merged) = wedge_basis(i1, i2)?;
                if sign == 0 {
                    continue;
                }
                let prod = a * b;
                out.add_coeff(merged, &prod.scale(&qi(sign as i64)));
            }
        }
        Ok(out)
    }

    /// Multiply every coefficient by a polynomial function.
    pub fn mul_function(&self, f: &Polynomial) -> Result<PolyForm> {
        self.wedge(&PolyForm::function(f.clone()))
    }

    pub fn evaluate(&self, x: &[Q]) -> Result<BTreeMap<MultiIndex, Q>> {
        if x.len() != self.n {
            return Err(Error::arg(format!(
                "point has {} coordinates, form lives on a {}-cube",
                x.len(),
                self.n
            )));
        }
        let mut out = BTreeMap::new();
        for (k, a) in &self.coeffs {
            out.insert(k.clone(), a.eval(x)?);
        }
        Ok(out)
    }

    /// Integrate out the first coordinate `t` of `I × □ⁿ`.
    ///
    /// Terms `a dt∧dx_J` contribute `(∫₀¹ a dt) dx_J`; terms free of `dt`
    /// are dropped. A 0-form has no fibre component and maps to the zero
    /// 0-form on `□ⁿ`.
    pub fn fiber_integrate(&self) -> Result<PolyForm> {
        if self.n == 0 {
            return Err(Error::arg("fiber integration needs at least one coordinate"));
        }
        let m = self.n - 1;
        let mut out = PolyForm::zero(m, self.p.saturating_sub(1));
        for (idx, a) in &self.coeffs {
            if idx.indices().first() != Some(&1) {
                continue;
            }
            let rest: Vec<usize> = idx.indices()[1..].iter().map(|i| i - 1).collect();
            let k = MultiIndex::from_sorted_unchecked(m, rest);
            out.add_coeff(k, &a.integrate_unit(1));
        }
        Ok(out)
    }

    /// `∫_{□ⁿ} ω` for a top-degree form.
    pub fn integrate_top(&self) -> Result<Q> {
        if self.p != self.n {
            return Err(Error::arg(format!(
                "cannot integrate a {}-form over a {}-cube",
                self.p, self.n
            )));
        }
        let mut a = self.coeff(&MultiIndex::top(self.n));
        for _ in 0..self.n {
            a = a.integrate_unit(1);
        }
        Ok(a.as_constant().expect("all variables integrated"))
    }
}

impl fmt::Display for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(k, a)| {
                if k.degree() == 0 {
                    format!("({a})")
                } else {
                    format!("({a}) {k}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// A polynomial map `□ᵐ → ℝⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyMap {
    m: usize,
    components: Vec<Polynomial>,
}

impl PolyMap {
    pub fn new(m: usize, components: Vec<Polynomial>) -> Result<Self> {
        if components.iter().any(|c| c.n() != m) {
            return Err(Error::arg(format!("map components must be polynomials in {m} variables")));
        }
        Ok(PolyMap { m, components })
    }

    pub fn identity(n: usize) -> Self {
        PolyMap { m: n, components: (1..=n).map(|i| Polynomial::var(n, i)).collect() }
    }

    pub fn constant(m: usize, point: &[Q]) -> Self {
        PolyMap { m, components: point.iter().map(|c| Polynomial::constant(m, c.clone())).collect() }
    }

    /// `x ↦ A x + b` with `A` given row by row (`n` rows of length `m`).
    pub fn affine(m: usize, a: &[Vec<Q>], b: &[Q]) -> Result<Self> {
        if a.len() != b.len() || a.iter().any(|r| r.len() != m) {
            return Err(Error::arg("affine map shape mismatch"));
        }
        let comps = a
            .iter()
            .zip(b)
            .map(|(row, bi)| {
                let mut p = Polynomial::constant(m, bi.clone());
                for (j, c) in row.iter().enumerate() {
                    p.add_assign(&Polynomial::var(m, j + 1).scale(c));
                }
                p
            })
            .collect();
        Ok(PolyMap { m, components: comps })
    }

    /// The slice inclusion `x ↦ (t, x)` of `□ⁿ` into `I × □ⁿ`.
    pub fn slice(n: usize, t: Q) -> Self {
        let mut comps = vec![Polynomial::constant(n, t)];
        comps.extend((1..=n).map(|i| Polynomial::var(n, i)));
        PolyMap { m: n, components: comps }
    }

    /// The projection `(t, x) ↦ x` of `I × □ⁿ` onto `□ⁿ`.
    pub fn drop_first(n: usize) -> Self {
        PolyMap { m: n + 1, components: (2..=n + 1).map(|i| Polynomial::var(n + 1, i)).collect() }
    }

    pub fn from_cube_morphism(f: &CubeMorphism) -> Self {
        let m = f.source_dim();
        let comps = f
            .symbolic()
            .into_iter()
            .map(|c| match c {
                Coord::Const(e) => Polynomial::constant(m, qi(e as i64)),
                Coord::Var(k) => Polynomial::var(m, k + 1),
            })
            .collect();
        PolyMap { m, components: comps }
    }

    pub fn source_dim(&self) -> usize {
        self.m
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(|c| c.degree()).max().unwrap_or(0)
    }

    pub fn is_affine(&self) -> bool {
        self.degree() <= 1
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &PolyMap) -> Result<PolyMap> {
        if first.target_dim() != self.m {
            return Err(Error::arg(format!(
                "cannot compose a map from {} after a map into {}",
                self.m,
                first.target_dim()
            )));
        }
        let comps = self
            .components
            .iter()
            .map(|c| c.compose(&first.components, first.m))
            .collect::<Result<Vec<_>>>()?;
        Ok(PolyMap { m: first.m, components: comps })
    }

    pub fn eval(&self, y: &[Q]) -> Result<Vec<Q>> {
        self.components.iter().map(|c| c.eval(y)).collect()
    }

    /// `J[i][j] = ∂fᵢ/∂yⱼ`.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        self.components
            .iter()
            .map(|c| (1..=self.m).map(|j| c.derivative(j)).collect())
            .collect()
    }

    /// Pull a form on the target back along the map, coefficientwise
    /// `b_J = Σ_I a_I∘f · det(∂f_I/∂y_J)`.
    pub fn pullback(&self, omega: &PolyForm) -> Result<PolyForm> {
        if omega.n != self.target_dim() {
            return Err(Error::arg(format!(
                "form lives on a {}-cube, map lands in dimension {}",
                omega.n,
                self.target_dim()
            )));
        }
        let p = omega.p;
        let mut out = PolyForm::zero(self.m, p);
        if p > self.m || omega.is_zero() {
            return Ok(out);
        }
        let jac = self.jacobian();
        let targets = basis(self.m, p as i64);
        for (idx, a) in &omega.coeffs {
            let af = a.compose(&self.components, self.m)?;
            if af.is_zero() {
                continue;
            }
            for j in &targets {
                let rows: Vec<usize> = idx.indices().iter().map(|i| i - 1).collect();
                let cols: Vec<usize> = j.indices().iter().map(|i| i - 1).collect();
                let minor = det_minor(&jac, &rows, &cols, self.m);
                if minor.is_zero() {
                    continue;
                }
                out.add_coeff(j.clone(), &(&af * &minor));
            }
        }
        Ok(out)
    }
}

fn det_minor(jac: &[Vec<Polynomial>], rows: &[usize], cols: &[usize], m: usize) -> Polynomial {
    match rows.len() {
        0 => Polynomial::one(m),
        1 => jac[rows[0]][cols[0]].clone(),
        _ => {
            let mut acc = Polynomial::zero(m);
            let r0 = rows[0];
            for (k, &c) in cols.iter().enumerate() {
                let entry = &jac[r0][c];
                if entry.is_zero() {
                    continue;
                }
                let sub_cols: Vec<usize> =
                    cols.iter().enumerate().filter(|(l, _)| *l != k).map(|(_, &c)| c).collect();
                let sub = det_minor(jac, &rows[1..], &sub_cols, m);
                let term = entry * &sub;
                if k % 2 == 0 {
                    acc.add_assign(&term);
                } else {
                    acc.add_assign(&-&term);
                }
            }
            acc
        }
    }
}

pub fn exterior_derivative(omega: &PolyForm) -> PolyForm {
    omega.d()
}

pub fn pullback(f: &PolyMap, omega: &PolyForm) -> Result<PolyForm> {
    f.pullback(omega)
}

pub fn wedge(a: &PolyForm, b: &PolyForm) -> Result<PolyForm> {
    a.wedge(b)
}

pub fn evaluate(omega: &PolyForm, x: &[Q]) -> Result<BTreeMap<MultiIndex, Q>> {
    omega.evaluate(x)
}

pub fn fiber_integrate(omega: &PolyForm) -> Result<PolyForm> {
    omega.fiber_integrate()
}

/// `D_F ω = ∫_I F*ω` for a homotopy `F : I × □ⁿ → ℝᵏ`.
pub fn homotopy_operator(f: &PolyMap, omega: &PolyForm) -> Result<PolyForm> {
    if f.source_dim() == 0 {
        return Err(Error::arg("a homotopy needs the time coordinate"));
    }
    f.pullback(omega)?.fiber_integrate()
}

/// `d(Dω) + D(dω) − (in₁* − in₀*)F*ω`, which vanishes identically.
pub fn homotopy_identity_defect(f: &PolyMap, omega: &PolyForm) -> Result<PolyForm> {
    let n = f
        .source_dim()
        .checked_sub(1)
        .ok_or_else(|| Error::arg("a homotopy needs the time coordinate"))?;
    let fw = f.pullback(omega)?;
    let ends = PolyMap::slice(n, Q::one())
        .pullback(&fw)?
        .sub(&PolyMap::slice(n, Q::zero()).pullback(&fw)?)?;
    let d_dw = homotopy_operator(f, &omega.d())?;
    let mut lhs = d_dw;
    if omega.degree() > 0 {
        lhs = lhs.add(&homotopy_operator(f, omega)?.d())?;
    }
    lhs.sub(&ends)
}

/// `f*(dω) = d(f*ω)`.
pub fn check_naturality(f: &PolyMap, omega: &PolyForm) -> Result<bool> {
    Ok(f.pullback(&omega.d())? == f.pullback(omega)?.d())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse;
    use crate::q;

    fn mi(n: usize, v: &[usize]) -> MultiIndex {
        MultiIndex::new(n, v.to_vec()).unwrap()
    }

    fn term(n: usize, v: &[usize], s: &str) -> PolyForm {
        PolyForm::term(mi(n, v), parse(s, n).unwrap())
    }

    #[test]
    fn derivative_of_x1_dx2() {
        assert_eq!(term(2, &[2], "x1").d(), term(2, &[1, 2], "1"));
        assert!(term(3, &[], "7").d().is_zero());
        assert!(term(3, &[3], "x1^2*x2").d().d().is_zero());
    }

    #[test]
    fn pullback_swap_and_product() {
        let swap = PolyMap::new(2, vec![parse("x2", 2).unwrap(), parse("x1", 2).unwrap()]).unwrap();
        assert_eq!(swap.pullback(&term(2, &[1, 2], "1")).unwrap(), term(2, &[1, 2], "-1"));
        let pi2 = PolyMap::new(2, vec![parse("x1*x2", 2).unwrap(), parse("x2", 2).unwrap()]).unwrap();
        let expected = term(2, &[1], "x2").add(&term(2, &[2], "x1")).unwrap();
        assert_eq!(pi2.pullback(&term(2, &[1], "1")).unwrap(), expected);
        let w = term(3, &[1, 3], "x1*x2 + x3^2");
        assert_eq!(PolyMap::identity(3).pullback(&w).unwrap(), w);
    }

    #[test]
    fn wedge_examples() {
        let dx1 = term(2, &[1], "1");
        assert!(dx1.wedge(&dx1).unwrap().is_zero());
        let a = term(2, &[1], "x1");
        let b = term(2, &[2], "x2");
        assert_eq!(a.wedge(&b).unwrap(), term(2, &[1, 2], "x1*x2"));
        let one = term(2, &[], "1");
        assert_eq!(a.wedge(&one).unwrap(), a);
    }

    #[test]
    fn evaluation() {
        let v = term(2, &[2], "x1").evaluate(&[q(1, 2), q(1, 1)]).unwrap();
        assert_eq!(v.get(&mi(2, &[2])), Some(&q(1, 2)));
        let v = term(2, &[], "x1 + x2").evaluate(&[q(1, 3), q(1, 3)]).unwrap();
        assert_eq!(v.get(&mi(2, &[])), Some(&q(2, 3)));
        assert!(term(2, &[1], "1").evaluate(&[q(1, 2)]).is_err());
    }

    #[test]
    fn fiber_integration_examples() {
        assert_eq!(term(2, &[1, 2], "x1").fiber_integrate().unwrap(), term(1, &[1], "1/2"));
        assert!(term(2, &[2], "1").fiber_integrate().unwrap().is_zero());
        assert_eq!(term(2, &[1], "x1^2*x2").fiber_integrate().unwrap(), term(1, &[], "1/3*x1"));
    }

    #[test]
    fn homotopy_scaling_example() {
        // F(t, x) = t·x, ω = dx
        let f = PolyMap::new(2, vec![parse("x1*x2", 2).unwrap()]).unwrap();
        let w = term(1, &[1], "1");
        assert_eq!(homotopy_operator(&f, &w).unwrap(), term(1, &[], "x1"));
        assert!(homotopy_identity_defect(&f, &w).unwrap().is_zero());
        let constant = PolyMap::drop_first(1);
        assert!(homotopy_operator(&constant, &w).unwrap().is_zero());
    }

    #[test]
    fn naturality_examples() {
        let pi2 = PolyMap::new(2, vec![parse("x1*x2", 2).unwrap(), parse("x2", 2).unwrap()]).unwrap();
        assert!(check_naturality(&pi2, &term(2, &[2], "x1")).unwrap());
        let c = PolyMap::constant(2, &[q(1, 3), q(1, 2)]);
        let w = term(2, &[1], "x1*x2");
        assert!(check_naturality(&c, &w).unwrap());
        assert!(c.pullback(&w).unwrap().is_zero());
    }

    #[test]
    fn cube_morphism_as_map() {
        let f = CubeMorphism::boundary(1, 1, 1).unwrap();
        let m = PolyMap::from_cube_morphism(&f);
        assert_eq!(m.eval(&[q(1, 4)]).unwrap(), vec![q(1, 1), q(1, 4)]);
    }

    #[test]
    fn top_integral() {
        assert_eq!(term(2, &[1, 2], "x1*x2").integrate_top().unwrap(), q(1, 4));
    }
}

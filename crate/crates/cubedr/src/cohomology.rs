//! Rational cellular (co)homology of cubical models, the Mayer–Vietoris long
//! exact sequence, the de Rham comparison and the excision homotopy check.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use num_traits::Zero;

use crate::exterior::{basis, wedge_basis, MultiIndex};
use crate::linalg::{induced_rank, kernel, rank, Matrix};
use crate::model::{restrict_to_face, CellForm, Cover, Model, Subcomplex};
use crate::poly::{FPoly, Ring};
use crate::polyform::PolyForm;
use crate::pou::lambda_jet;
use crate::quadrature::gauss_legendre;
use crate::{Error, Result, Q};

/// Free modules `C_q` with boundary matrices `∂_q : C_q → C_{q−1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalChainComplex {
    dims: Vec<usize>,
    boundaries: Vec<Matrix>,
}

impl RationalChainComplex {
    /// `boundaries[q]` is `∂_q`; `boundaries[0]` must have no rows.
    pub fn new(dims: Vec<usize>, boundaries: Vec<Matrix>) -> Result<Self> {
        if dims.len() != boundaries.len() {
            return Err(Error::arg("one boundary matrix per degree"));
        }
        for (q, b) in boundaries.iter().enumerate() {
            let rows = if q == 0 { 0 } else { dims[q - 1] };
            if b.rows() != rows || b.cols() != dims[q] {
                return Err(Error::arg(format!("boundary in degree {q} has the wrong shape")));
            }
        }
        Ok(RationalChainComplex { dims, boundaries })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn boundary(&self, q: usize) -> &Matrix {
        &self.boundaries[q]
    }

    /// `∂_{q} ∘ ∂_{q+1} = 0` in every degree.
    pub fn is_complex(&self) -> bool {
        (1..self.dims.len().saturating_sub(1)).all(|q| self.boundaries[q].mul(&self.boundaries[q + 1]).is_zero())
    }

    pub fn betti(&self) -> Vec<usize> {
        let ranks: Vec<usize> = self.boundaries.iter().map(rank).collect();
        (0..self.dims.len())
            .map(|q| self.dims[q] - ranks[q] - ranks.get(q + 1).copied().unwrap_or(0))
            .collect()
    }
}

/// One generator per identification class of cells.
pub fn chain_complex(model: &Model) -> Result<RationalChainComplex> {
    let top = model.dim();
    let dims: Vec<usize> = (0..=top).map(|q| model.classes(q).len()).collect();
    let boundaries: Vec<Matrix> = (0..=top).map(|q| model.boundary(q)).collect();
    let cc = RationalChainComplex::new(dims, boundaries)?;
    if !cc.is_complex() {
        return Err(Error::Model("identifications are not cellular: the boundary does not square to zero".into()));
    }
    Ok(cc)
}

pub fn betti(cc: &RationalChainComplex) -> Vec<usize> {
    cc.betti()
}

/// Betti numbers of a disjoint union: componentwise sums.
pub fn disjoint_union_betti(models: &[Model]) -> Result<Vec<usize>> {
    let mut out: Vec<usize> = Vec::new();
    for m in models {
        let b = chain_complex(m)?.betti();
        if b.len() > out.len() {
            out.resize(b.len(), 0);
        }
        for (o, v) in out.iter_mut().zip(b) {
            *o += v;
        }
    }
    Ok(out)
}

/// Cochains of a subcomplex in a fixed degree range.
struct Cochains {
    basis: Vec<Vec<usize>>,
    coboundary: Vec<Matrix>,
}

impl Cochains {
    fn new(model: &Model, sub: &Subcomplex, top: usize) -> Cochains {
        let basis: Vec<Vec<usize>> = (0..=top + 1).map(|q| sub.classes(q)).collect();
        let coboundary = (0..=top)
            .map(|q| {
                let d = model.boundary(q + 1);
                let mut m = Matrix::zeros(basis[q + 1].len(), basis[q].len());
                if q < top {
                    for (r, &t) in basis[q + 1].iter().enumerate() {
                        for (c, &s) in basis[q].iter().enumerate() {
                            m.set(r, c, d.get(s, t).clone());
                        }
                    }
                }
                m
            })
            .collect();
        Cochains { basis, coboundary }
    }

    fn dim(&self, q: usize) -> usize {
        self.basis[q].len()
    }

    fn cocycles(&self, q: usize) -> Vec<Vec<Q>> {
        kernel(&self.coboundary[q])
    }

    /// Coboundaries in degree `q`, as columns.
    fn coboundaries(&self, q: usize) -> Matrix {
        if q == 0 {
            Matrix::zeros(self.dim(0), 0)
        } else {
            self.coboundary[q - 1].clone()
        }
    }

    fn h(&self, q: usize) -> usize {
        self.cocycles(q).len() - rank(&self.coboundaries(q))
    }

    /// Coordinate restriction from `self` onto the classes of `other`.
    fn restriction(&self, other: &Cochains, q: usize) -> Matrix {
        let mut m = Matrix::zeros(other.dim(q), self.dim(q));
        for (r, c) in other.basis[q].iter().enumerate() {
            let j = self.basis[q].iter().position(|x| x == c).expect("restriction to a subcomplex");
            m.set(r, j, Q::from_integer(1.into()));
        }
        m
    }
}

fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let mut m = Matrix::zeros(a.rows() + b.rows(), a.cols() + b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            m.set(i, j, a.get(i, j).clone());
        }
    }
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            m.set(a.rows() + i, a.cols() + j, b.get(i, j).clone());
        }
    }
    m
}

fn vstack(a: &Matrix, b: &Matrix) -> Matrix {
    a.transpose().hstack(&b.transpose()).transpose()
}

/// Ranks around one degree of the Mayer–Vietoris sequence
/// `… → H^q(X) →ψ H^q(A)⊕H^q(B) →φ H^q(A∩B) →δ H^{q+1}(X) → …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LesRow {
    pub q: usize,
    pub h_x: usize,
    pub h_a: usize,
    pub h_b: usize,
    pub h_ab: usize,
    pub rank_psi: usize,
    pub rank_phi: usize,
    pub rank_delta: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LesTable {
    pub rows: Vec<LesRow>,
    /// Degrees and positions (`"X"`, `"A+B"`, `"AB"`) where exactness fails.
    pub failures: Vec<(usize, &'static str)>,
    pub assembled: Vec<usize>,
    pub direct: Vec<usize>,
}

impl LesTable {
    pub fn is_exact(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn agrees(&self) -> bool {
        self.assembled == self.direct
    }

    pub fn pieces(&self) -> [Vec<usize>; 3] {
        [
            self.rows.iter().map(|r| r.h_a).collect(),
            self.rows.iter().map(|r| r.h_b).collect(),
            self.rows.iter().map(|r| r.h_ab).collect(),
        ]
    }
}

/// Mayer–Vietoris for the subcomplexes realising the cover sets `A`, `B`.
pub fn mayer_vietoris(model: &Model, cover: &Cover) -> Result<LesTable> {
    let (a, b) = cover.pair()?;
    mayer_vietoris_sub(model, &a.subcomplex(model), &b.subcomplex(model))
}

pub fn mayer_vietoris_sub(model: &Model, ka: &Subcomplex, kb: &Subcomplex) -> Result<LesTable> {
    let full = model.full();
    if ka.union(kb) != full.union(&Subcomplex::default()) || ka.is_empty() || kb.is_empty() {
        return Err(Error::UnsupportedCover(
            "the subcomplexes of A and B do not together make up the model".into(),
        ));
    }
    chain_complex(model)?;
    let top = model.dim();
    let kab = ka.intersection(kb);
    let cx = Cochains::new(model, &full, top);
    let ca = Cochains::new(model, ka, top);
    let cb = Cochains::new(model, kb, top);
    let cab = Cochains::new(model, &kab, top);

    let mut rows = Vec::new();
    for q in 0..=top {
        let zx = cx.cocycles(q);
        let za = ca.cocycles(q);
        let zb = cb.cocycles(q);
        let zab = cab.cocycles(q);

        let psi = vstack(&cx.restriction(&ca, q), &cx.restriction(&cb, q));
        let rank_psi = induced_rank(&psi, &zx, &block_diag(&ca.coboundaries(q), &cb.coboundaries(q)));

        let ra = ca.restriction(&cab, q);
        let rb = cb.restriction(&cab, q);
        let mut phi = Matrix::zeros(cab.dim(q), ca.dim(q) + cb.dim(q));
        for i in 0..cab.dim(q) {
            for j in 0..ca.dim(q) {
                phi.set(i, j, ra.get(i, j).clone());
            }
            for j in 0..cb.dim(q) {
                phi.set(i, ca.dim(q) + j, -rb.get(i, j).clone());
            }
        }
        let zab_src: Vec<Vec<Q>> = za
            .iter()
            .map(|z| z.iter().cloned().chain(std::iter::repeat_n(Q::zero(), cb.dim(q))).collect())
            .chain(zb.iter().map(|z| std::iter::repeat_n(Q::zero(), ca.dim(q)).chain(z.iter().cloned()).collect()))
            .collect();
        let rank_phi = induced_rank(&phi, &zab_src, &cab.coboundaries(q));

        // connecting map: extend by zero to A, apply δ_A, read off on X
        let rank_delta = if q == top {
            0
        } else {
            let ext = ca.restriction(&cab, q).transpose();
            let cols: Vec<Vec<Q>> = zab
                .iter()
                .map(|z| {
                    let da = ca.coboundary[q].mul_vec(&ext.mul_vec(z));
                    cx.basis[q + 1]
                        .iter()
                        .map(|cls| match ca.basis[q + 1].iter().position(|x| x == cls) {
                            Some(k) => da[k].clone(),
                            None => Q::zero(),
                        })
                        .collect()
                })
                .collect();
            let dmat = Matrix::from_cols(cx.dim(q + 1), &cols);
            let bx = cx.coboundaries(q + 1);
            rank(&dmat.hstack(&bx)) - rank(&bx)
        };

        rows.push(LesRow {
            q,
            h_x: cx.h(q),
            h_a: ca.h(q),
            h_b: cb.h(q),
            h_ab: cab.h(q),
            rank_psi,
            rank_phi,
            rank_delta,
        });
    }

    let mut failures = Vec::new();
    for (q, r) in rows.iter().enumerate() {
        let prev_delta = if q == 0 { 0 } else { rows[q - 1].rank_delta };
        if r.h_x - r.rank_psi != prev_delta {
            failures.push((q, "X"));
        }
        if r.h_a + r.h_b - r.rank_phi != r.rank_psi {
            failures.push((q, "A+B"));
        }
        if r.h_ab - r.rank_delta != r.rank_phi {
            failures.push((q, "AB"));
        }
    }
    let assembled = (0..rows.len())
        .map(|q| {
            let r = &rows[q];
            let left = if q == 0 { 0 } else { rows[q - 1].h_ab - rows[q - 1].rank_phi };
            (r.h_a + r.h_b - r.rank_phi) + left
        })
        .collect();
    let direct = chain_complex(model)?.betti();
    Ok(LesTable { rows, failures, assembled, direct })
}

/// Outcome of pairing closed cellwise forms with cycles.
#[derive(Clone, Debug, PartialEq)]
pub struct DeRhamReport {
    pub degree: usize,
    pub betti: usize,
    /// Rows: forms; columns: a basis of cycles.
    pub pairing: Vec<Vec<Q>>,
    pub rank: usize,
}

impl DeRhamReport {
    pub fn full_rank(&self) -> bool {
        self.rank == self.betti
    }
}

/// The form carried by every class of dimension ≥ `p`, in the local
/// coordinates of its representative, after checking that the form is
/// closed, lives on maximal cells and agrees across faces and gluings.
pub fn class_forms(model: &Model, form: &CellForm) -> Result<BTreeMap<usize, PolyForm>> {
    for (&c, w) in &form.cells {
        if !w.d().is_zero() {
            return Err(Error::Form(format!("{} is not closed on {}", form.name, model.name(c))));
        }
    }
    compatible_class_forms(model, form)
}

/// As [`class_forms`] without the closedness requirement.
pub fn compatible_class_forms(model: &Model, form: &CellForm) -> Result<BTreeMap<usize, PolyForm>> {
    let maximal = model.maximal_cells();
    for &c in form.cells.keys() {
        if !maximal.contains(&c) {
            return Err(Error::Form(format!(
                "{}: forms are given on maximal cells, {} is a face",
                form.name,
                model.name(c)
            )));
        }
    }
    let p = form.degree;
    let mut out: BTreeMap<usize, PolyForm> = BTreeMap::new();
    for &m in &maximal {
        let big = model.cell(m);
        let wm = form.cells.get(&m).cloned().unwrap_or_else(|| PolyForm::zero(big.dim(), p));
        for face in big.faces() {
            if face.dim() < p {
                continue;
            }
            let f = model.cell_index(&face).expect("faces are cells");
            let restricted = restrict_to_face(&wm, big, &face);
            let on_root = model.to_root(f).inverse().poly_map().pullback(&restricted)?;
            let r = model.root(f);
            match out.get(&r) {
                Some(prev) if *prev != on_root => {
                    return Err(Error::Form(format!(
                        "{} does not agree across {} (seen from {})",
                        form.name,
                        model.name(f),
                        model.name(m)
                    )))
                }
                Some(_) => {}
                None => {
                    out.insert(r, on_root);
                }
            }
        }
    }
    Ok(out)
}

/// The form on cell `c` in its own coordinates, transported from its class.
pub fn form_on_cell(model: &Model, classes: &BTreeMap<usize, PolyForm>, c: usize, degree: usize) -> Result<PolyForm> {
    match classes.get(&model.root(c)) {
        Some(w) => model.to_root(c).poly_map().pullback(w),
        None => Ok(PolyForm::zero(model.cell(c).dim(), degree)),
    }
}

/// Integral of a compatible form over every class of its degree.
pub fn cochain_of(model: &Model, form: &CellForm) -> Result<Vec<Q>> {
    let forms = class_forms(model, form)?;
    model
        .classes(form.degree)
        .iter()
        .map(|r| match forms.get(r) {
            Some(w) => w.integrate_top(),
            None => Ok(Q::zero()),
        })
        .collect()
}

pub fn derham_compare(model: &Model, forms: &[CellForm]) -> Result<DeRhamReport> {
    let p = forms.first().map_or(1, |f| f.degree);
    if forms.iter().any(|f| f.degree != p) {
        return Err(Error::Form("all compared forms must have the same degree".into()));
    }
    let cc = chain_complex(model)?;
    let b = cc.betti().get(p).copied().unwrap_or(0);
    let cycles = if p < cc.dims().len() { kernel(cc.boundary(p)) } else { Vec::new() };
    let mut pairing = Vec::new();
    for f in forms {
        let values = cochain_of(model, f)?;
        pairing.push(
            cycles
                .iter()
                .map(|z| z.iter().zip(&values).fold(Q::zero(), |s, (a, v)| s + a * v))
                .collect::<Vec<Q>>(),
        );
    }
    let cols = cycles.len();
    let r = rank(&Matrix::from_rows(cols, pairing.clone()));
    Ok(DeRhamReport { degree: p, betti: b, pairing, rank: r })
}

/// First-order forward-mode number: value and gradient.
#[derive(Clone, Debug)]
struct Dual {
    v: f64,
    g: Vec<f64>,
}

impl Dual {
    fn constant(v: f64, n: usize) -> Dual {
        Dual { v, g: vec![0.0; n] }
    }

    fn variable(v: f64, i: usize, n: usize) -> Dual {
        let mut g = vec![0.0; n];
        g[i] = 1.0;
        Dual { v, g }
    }

    fn chain(&self, f: f64, df: f64) -> Dual {
        Dual { v: f, g: self.g.iter().map(|x| x * df).collect() }
    }

    fn scale(&self, c: f64) -> Dual {
        Dual { v: self.v * c, g: self.g.iter().map(|x| x * c).collect() }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        if self.g.is_empty() {
            return Dual { v: self.v + o.v, g: o.g };
        }
        if o.g.is_empty() {
            return Dual { v: self.v + o.v, g: self.g };
        }
        Dual { v: self.v + o.v, g: self.g.iter().zip(&o.g).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        self + o.scale(-1.0)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        let g = if self.g.is_empty() {
            o.g.iter().map(|b| b * self.v).collect()
        } else if o.g.is_empty() {
            self.g.iter().map(|a| a * o.v).collect()
        } else {
            self.g.iter().zip(&o.g).map(|(a, b)| a * o.v + b * self.v).collect()
        };
        Dual { v: self.v * o.v, g }
    }
}

impl Ring for Dual {
    // constants carry an empty gradient, treated as zero
    fn from_f64(c: f64) -> Self {
        Dual { v: c, g: Vec::new() }
    }
}

/// `D_𝒰ω` at `x` by Gauss–Legendre quadrature of the fibre integral of
/// `H*ω`, `H(t,x)ᵢ = (1−t)xᵢ + tλ(xᵢ)`, with gradients in `x`.
fn excision_operator(coeffs: &[(MultiIndex, FPoly)], x: &[Dual], nodes: &[f64], weights: &[f64]) -> BTreeMap<MultiIndex, Dual> {
    let n = x.len();
    let lam: Vec<Dual> = x.iter().map(|xi| { let (v, d, _) = lambda_jet(0.0, 1.0, xi.v); xi.chain(v, d) }).collect();
    let dlam: Vec<Dual> = x.iter().map(|xi| { let (_, d, dd) = lambda_jet(0.0, 1.0, xi.v); xi.chain(d, dd) }).collect();
    let mut out: BTreeMap<MultiIndex, Dual> = BTreeMap::new();
    for (&t, &w) in nodes.iter().zip(weights) {
        let y: Vec<Dual> = (0..n).map(|i| x[i].scale(1.0 - t) + lam[i].scale(t)).collect();
        let g: Vec<Dual> = (0..n).map(|i| lam[i].clone() - x[i].clone()).collect();
        let k: Vec<Dual> = (0..n).map(|i| Dual::constant(1.0 - t, n) + dlam[i].scale(t)).collect();
        for (idx, a) in coeffs {
            let ay = a.eval_ring(&y);
            let ids = idx.indices();
            for r in 0..ids.len() {
                let mut term = ay.clone() * g[ids[r] - 1].clone();
                for (s, &j) in ids.iter().enumerate() {
                    if s != r {
                        term = term * k[j - 1].clone();
                    }
                }
                let sign = if r % 2 == 0 { w } else { -w };
                let rest: Vec<usize> = ids.iter().enumerate().filter(|&(s, _)| s != r).map(|(_, &j)| j).collect();
                let key = MultiIndex::new(n, rest).expect("sub-index");
                let slot = out.entry(key).or_insert_with(|| Dual::constant(0.0, n));
                *slot = slot.clone() + term.scale(sign);
            }
        }
    }
    out
}

/// Residuals of the excision homotopy identity at sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcisionReport {
    pub points: usize,
    /// `max |d D ω + D dω − (ω̃ − ω)|` over points and coefficients.
    pub identity_residual: f64,
    /// `max |ω̃ − (λⁿ)*ω|`, the pullback recomputed with a difference quotient.
    pub reparam_residual: f64,
}

/// Check `d∘D_𝒰 + D_𝒰∘d = ω̃ − ω` with `ω̃ = (λⁿ)*ω` at the given points
/// of `□ⁿ`, using `gauss` quadrature nodes in `t`.
pub fn excision_homotopy_check(omega: &PolyForm, points: &[Vec<f64>], gauss: usize) -> ExcisionReport {
    let n = omega.n();
    let (nodes, weights) = gauss_legendre(gauss);
    let coeffs: Vec<(MultiIndex, FPoly)> = omega.coeffs().iter().map(|(k, a)| (k.clone(), a.to_f64())).collect();
    let dcoeffs: Vec<(MultiIndex, FPoly)> = omega.d().coeffs().iter().map(|(k, a)| (k.clone(), a.to_f64())).collect();
    let mut identity_residual: f64 = 0.0;
    let mut reparam_residual: f64 = 0.0;
    for x in points {
        let xd: Vec<Dual> = (0..n).map(|i| Dual::variable(x[i], i, n)).collect();
        let d_omega = excision_operator(&coeffs, &xd, &nodes, &weights);
        let d_domega = excision_operator(&dcoeffs, &xd, &nodes, &weights);
        let mut lhs: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (j, v) in &d_omega {
            for i in 1..=n {
                if j.contains(i) {
                    continue;
                }
                let (s, merged) = wedge_basis(&MultiIndex::new(n, vec![i]).expect("unit"), j).expect("same n");
                *lhs.entry(merged).or_insert(0.0) += s as f64 * v.g[i - 1];
            }
        }
        for (j, v) in &d_domega {
            *lhs.entry(j.clone()).or_insert(0.0) += v.v;
        }
        let jets: Vec<(f64, f64, f64)> = x.iter().map(|&xi| lambda_jet(0.0, 1.0, xi)).collect();
        let lam: Vec<f64> = jets.iter().map(|j| j.0).collect();
        let mut rhs: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (idx, a) in &coeffs {
            let jac: f64 = idx.indices().iter().map(|&i| jets[i - 1].1).product();
            *rhs.entry(idx.clone()).or_insert(0.0) += a.eval(&lam) * jac - a.eval(x);
        }
        for idx in basis(n, omega.degree() as i64) {
            let l = lhs.get(&idx).copied().unwrap_or(0.0);
            let r = rhs.get(&idx).copied().unwrap_or(0.0);
            identity_residual = identity_residual.max((l - r).abs());
        }
        // (λⁿ)*ω again, with the Jacobian of λⁿ taken by central differences
        let h = 1e-5;
        let fd: Vec<f64> = x.iter().map(|&xi| {
            let l = |t: f64| lambda_jet(0.0, 1.0, t).0;
            (l(xi + h) - l(xi - h)) / (2.0 * h)
        }).collect();
        for (idx, a) in &coeffs {
            let exact: f64 = idx.indices().iter().map(|&i| jets[i - 1].1).product();
            let approx: f64 = idx.indices().iter().map(|&i| fd[i - 1]).product();
            reparam_residual = reparam_residual.max((a.eval(&lam) * (exact - approx)).abs());
        }
    }
    ExcisionReport { points: points.len(), identity_residual, reparam_residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse;
    use crate::qi;
    use num_traits::Signed;

    fn model(text: &str) -> Model {
        Model::parse(text).unwrap()
    }

    const CIRCLE: &str = "[0,1]\n[1,2]\nidentify [2,2] -> [0,0] via [[1]]; (-2)\n";

    #[test]
    fn point_and_circle() {
        assert_eq!(chain_complex(&model("[0,0]")).unwrap().betti(), vec![1]);
        let c = chain_complex(&model("[0,1]\nidentify [1,1] -> [0,0] via [[1]]; (-1)\n")).unwrap();
        assert_eq!(c.dims(), &[1, 1]);
        assert!(c.boundary(1).is_zero());
        assert_eq!(c.betti(), vec![1, 1]);
        assert_eq!(chain_complex(&model(CIRCLE)).unwrap().betti(), vec![1, 1]);
    }

    #[test]
    fn torus_single_square() {
        let t = "[0,1]x[0,1]\nidentify [0,0]x[0,1] -> [1,1]x[0,1] via [[1,0],[0,1]]; (1,0)\nidentify [0,1]x[0,0] -> [0,1]x[1,1] via [[1,0],[0,1]]; (0,1)\n";
        let c = chain_complex(&model(t)).unwrap();
        assert_eq!(c.dims(), &[1, 2, 1]);
        assert!(c.boundary(1).is_zero() && c.boundary(2).is_zero());
        assert_eq!(c.betti(), vec![1, 2, 1]);
    }

    #[test]
    fn projective_plane_over_q() {
        let t = "[0,1]x[0,1]\nidentify [0,1]x[0,0] -> [0,1]x[1,1] via [[-1,0],[0,1]]; (1,1)\nidentify [0,0]x[0,1] -> [1,1]x[0,1] via [[1,0],[0,-1]]; (1,1)\n";
        let c = chain_complex(&model(t)).unwrap();
        assert_eq!(rank(c.boundary(2)), 1);
        assert_eq!(c.betti(), vec![1, 0, 0]);
    }

    #[test]
    fn disjoint_unions() {
        let p = model("[0,0]");
        let s = model(CIRCLE);
        assert_eq!(disjoint_union_betti(&[p.clone(), p.clone()]).unwrap(), vec![2]);
        assert_eq!(disjoint_union_betti(&[s, p]).unwrap(), vec![2, 1]);
        assert!(disjoint_union_betti(&[]).unwrap().is_empty());
    }

    #[test]
    fn circle_mayer_vietoris() {
        let m = model(CIRCLE);
        let cover = Cover::parse("cover A = cells([0,1])\ncover B = cells([1,2])\n", &m).unwrap();
        let t = mayer_vietoris(&m, &cover).unwrap();
        assert!(t.is_exact());
        assert_eq!(t.pieces(), [vec![1, 0], vec![1, 0], vec![2, 0]]);
        assert_eq!(t.assembled, vec![1, 1]);
        assert!(t.agrees());
        let redundant = Cover::parse("cover A = cells([0,1], [1,2])\ncover B = cells([1,2])\n", &m).unwrap();
        let t = mayer_vietoris(&m, &redundant).unwrap();
        assert!(t.is_exact() && t.agrees());
        let partial = Cover::parse("cover A = cells([0,1])\ncover B = cells([0,1])\n", &m).unwrap();
        assert!(matches!(mayer_vietoris(&m, &partial), Err(Error::UnsupportedCover(_))));
    }

    #[test]
    fn circle_generator_pairs_to_one() {
        let m = model(CIRCLE);
        let g = crate::model::parse_forms("on [0,1] : dx1 : 1\non [1,2] : dx1 : 1\n", &m).unwrap();
        let r = derham_compare(&m, &g).unwrap();
        assert_eq!(r.betti, 1);
        assert_eq!(r.rank, 1);
        assert_eq!(r.pairing[0][0].clone().abs(), qi(2));
        let exact = crate::model::parse_forms("on [0,1] : dx1 : 2*x1\non [1,2] : dx1 : -2*x1\n", &m);
        // d of x² on the first arc and 1 − x² on the second
        let r = derham_compare(&m, &exact.unwrap()).unwrap();
        assert_eq!(r.rank, 0);
    }

    #[test]
    fn incompatible_forms_are_rejected() {
        let m = model("[0,1]x[0,1]\n[1,2]x[0,1]\n");
        let f = crate::model::parse_forms("on [0,1]x[0,1] : dx2 : 1\n", &m).unwrap();
        assert!(matches!(class_forms(&m, &f[0]), Err(Error::Form(_))));
        let nc = crate::model::parse_forms("on [0,1]x[0,1] : dx1 : x2\n", &m).unwrap();
        assert!(matches!(class_forms(&m, &nc[0]), Err(Error::Form(_))));
    }

    #[test]
    fn excision_residuals() {
        let pts: Vec<Vec<f64>> = (0..9).map(|k| vec![k as f64 / 8.0]).collect();
        let w = PolyForm::term(MultiIndex::new(1, vec![1]).unwrap(), parse("x1", 1).unwrap());
        let r = excision_homotopy_check(&w, &pts, 64);
        assert!(r.identity_residual < 1e-10, "{r:?}");
        assert!(r.reparam_residual < 1e-6, "{r:?}");
        let zero = PolyForm::zero(2, 1);
        let pts2 = vec![vec![0.3, 0.7]];
        assert_eq!(excision_homotopy_check(&zero, &pts2, 64).identity_residual, 0.0);
        let c = PolyForm::term(MultiIndex::new(2, vec![1, 2]).unwrap(), parse("3", 2).unwrap());
        assert!(excision_homotopy_check(&c, &pts2, 64).identity_residual < 1e-10);
    }
}

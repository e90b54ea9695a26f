//! Integration of closed 1-forms along paths: the pairing between loops and
//! first cohomology, Green's formula on squares, and primitives of forms
//! with vanishing periods.

use std::collections::{BTreeMap, VecDeque};

use num_traits::{One, Zero};

use crate::cohomology::{class_forms, compatible_class_forms, form_on_cell};
use crate::exterior::MultiIndex;
use crate::linalg::{rank, Matrix};
use crate::model::{strip_comment, CellForm, Model};
use crate::poly::{parse_with, Polynomial};
use crate::polyform::{PolyForm, PolyMap};
use crate::{q, Error, Result, Q};

/// A polynomial segment `□¹ → cell`, in the cell's local coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub cell: usize,
    pub map: PolyMap,
}

/// A piecewise polynomial path; consecutive segments meet in the quotient.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPlot {
    pub name: String,
    pub segments: Vec<Segment>,
}

const CHECK_DENOMINATOR: i64 = 64;

impl PathPlot {
    pub fn new(model: &Model, name: &str, segments: Vec<Segment>) -> Result<PathPlot> {
        if segments.is_empty() {
            return Err(Error::Model(format!("path {name} has no segments")));
        }
        for s in &segments {
            let qd = model.cell(s.cell).dim();
            if s.map.source_dim() != 1 || s.map.target_dim() != qd {
                return Err(Error::Model(format!("segment on {} needs {qd} components in t", model.name(s.cell))));
            }
            // the segment must stay in its cell
            for k in 0..=CHECK_DENOMINATOR {
                let u = s.map.eval(&[q(k, CHECK_DENOMINATOR)])?;
                if u.iter().any(|v| v < &Q::zero() || v > &Q::one()) {
                    return Err(Error::Model(format!("segment leaves {} at t = {k}/{CHECK_DENOMINATOR}", model.name(s.cell))));
                }
            }
        }
        let path = PathPlot { name: name.to_string(), segments };
        for w in path.segments.windows(2) {
            if endpoint(model, &w[0], 1)? != endpoint(model, &w[1], 0)? {
                return Err(Error::Model(format!("path {name}: segments on {} and {} do not meet", model.name(w[0].cell), model.name(w[1].cell))));
            }
        }
        Ok(path)
    }

    /// `path <name>` starts a path; `segment <cell-id> : (p1(t), ...)` lines
    /// add segments. Lines before any header form a path named `path`.
    pub fn parse_all(text: &str, model: &Model) -> Result<Vec<PathPlot>> {
        let mut groups: Vec<(String, Vec<Segment>)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix("path ") {
                groups.push((name.trim().to_string(), Vec::new()));
                continue;
            }
            let rest = line
                .strip_prefix("segment ")
                .ok_or_else(|| Error::parse(line_no, "expected 'path <name>' or 'segment <cell-id> : (...)'"))?;
            let (id, comps) = rest.rsplit_once(':').ok_or_else(|| Error::parse(line_no, "missing ':'"))?;
            let cell = model.resolve(id.trim()).map_err(|e| Error::parse(line_no, e.to_string()))?;
            let inner = crate::model::strip_brackets(comps).ok_or_else(|| Error::parse(line_no, "components must be in parentheses"))?;
            let polys = crate::model::split_top(inner, ',')
                .iter()
                .map(|c| parse_with(c.trim(), &["t"]).map_err(|e| Error::parse(line_no, e)))
                .collect::<Result<Vec<Polynomial>>>()?;
            let map = PolyMap::new(1, polys)?;
            if groups.is_empty() {
                groups.push(("path".into(), Vec::new()));
            }
            groups.last_mut().expect("a current path").1.push(Segment { cell, map });
        }
        groups.into_iter().map(|(name, segs)| PathPlot::new(model, &name, segs)).collect()
    }

    /// Canonical start and end points in the quotient.
    pub fn endpoints(&self, model: &Model) -> Result<((usize, Vec<Q>), (usize, Vec<Q>))> {
        Ok((endpoint(model, &self.segments[0], 0)?, endpoint(model, self.segments.last().expect("segments"), 1)?))
    }

    pub fn is_loop(&self, model: &Model) -> Result<bool> {
        let (a, b) = self.endpoints(model)?;
        Ok(a == b)
    }

    /// `t ↦ ℓ(1 − t)`.
    pub fn reversed(&self) -> PathPlot {
        let flip = vec![&Polynomial::one(1) - &Polynomial::var(1, 1)];
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| {
                let comps = s.map.components().iter().map(|c| c.compose(&flip, 1).expect("reparametrise")).collect();
                Segment { cell: s.cell, map: PolyMap::new(1, comps).expect("segment") }
            })
            .collect();
        PathPlot { name: format!("{}^-1", self.name), segments }
    }

    pub fn concat(&self, model: &Model, other: &PathPlot) -> Result<PathPlot> {
        let mut segs = self.segments.clone();
        segs.extend(other.segments.iter().cloned());
        PathPlot::new(model, &format!("{}*{}", self.name, other.name), segs)
    }
}

fn endpoint(model: &Model, s: &Segment, t: i64) -> Result<(usize, Vec<Q>)> {
    let u = s.map.eval(&[Q::from_integer(t.into())])?;
    let y = model.cell(s.cell).point_q(&u);
    model.canonical_point(&y).ok_or_else(|| Error::Model("path endpoint outside the model".into()))
}

/// `∫_ℓ ω`, summed over segments.
pub fn integrate_1form(model: &Model, omega: &CellForm, path: &PathPlot) -> Result<Q> {
    if omega.degree != 1 {
        return Err(Error::Form(format!("{} has degree {}, paths pair with 1-forms", omega.name, omega.degree)));
    }
    let classes = compatible_class_forms(model, omega)?;
    let mut total = Q::zero();
    for s in &path.segments {
        let w = form_on_cell(model, &classes, s.cell, 1)?;
        total += s.map.pullback(&w)?.integrate_top()?;
    }
    Ok(total)
}

/// Both sides of Green's formula for `H*ω` on the unit square.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreenReport {
    /// `∫_{∂□²} H*ω`, counterclockwise.
    pub boundary: Q,
    /// `∫_{□²} H*dω`.
    pub interior: Q,
}

impl GreenReport {
    /// `boundary − interior`; zero whenever the computation is right.
    pub fn stokes_defect(&self) -> Q {
        &self.boundary - &self.interior
    }
}

/// Green's formula for a 1-form on a cell and a square `H : □² → cell`.
/// For closed `ω` the boundary integral vanishes, which is what makes the
/// pairing independent of the homotopy class of a path.
pub fn green_check(omega: &PolyForm, h: &PolyMap) -> Result<GreenReport> {
    if omega.degree() != 1 || h.source_dim() != 2 || h.target_dim() != omega.n() {
        return Err(Error::arg("green_check needs a 1-form and a square into its cube"));
    }
    let pulled = h.pullback(omega)?;
    let t = Polynomial::var(1, 1);
    let c = |v: i64| Polynomial::constant(1, Q::from_integer(v.into()));
    // bottom, right, top, left with their orientation along ∂□²
    let edges = [
        (vec![t.clone(), c(0)], 1),
        (vec![c(1), t.clone()], 1),
        (vec![t.clone(), c(1)], -1),
        (vec![c(0), t.clone()], -1),
    ];
    let mut boundary = Q::zero();
    for (comps, sign) in edges {
        let e = PolyMap::new(1, comps)?;
        boundary += e.pullback(&pulled)?.integrate_top()? * Q::from_integer(sign.into());
    }
    let interior = h.pullback(&omega.d())?.integrate_top()?;
    Ok(GreenReport { boundary, interior })
}

/// Loop integrals of a closed 1-form and, when they all vanish, a cellwise
/// primitive `F` with `dF = ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactnessReport {
    pub integrals: Vec<Q>,
    pub primitive: Option<CellForm>,
}

pub fn exactness_defect(model: &Model, omega: &CellForm, loops: &[PathPlot]) -> Result<ExactnessReport> {
    let integrals = loops.iter().map(|l| integrate_1form(model, omega, l)).collect::<Result<Vec<Q>>>()?;
    if integrals.iter().any(|v| !v.is_zero()) {
        return Ok(ExactnessReport { integrals, primitive: None });
    }
    let primitive = primitive(model, omega)?;
    Ok(ExactnessReport { integrals, primitive: Some(primitive) })
}

/// Integrate `ω` from base points: along a spanning forest of the 1-skeleton
/// for vertices, then radially from the corner of each maximal cell.
pub fn primitive(model: &Model, omega: &CellForm) -> Result<CellForm> {
    if omega.degree != 1 {
        return Err(Error::Form("primitives are built for 1-forms".into()));
    }
    let classes = class_forms(model, omega)?;
    // vertex classes joined by edge classes
    let mut adj: BTreeMap<usize, Vec<(usize, Q)>> = BTreeMap::new();
    for &e in model.classes(1) {
        let cube = model.cell(e);
        let w = form_on_cell(model, &classes, e, 1)?;
        let v = w.integrate_top()?;
        let a = model.root(model.cell_index(&cube.facet(0, 0)).expect("edge end"));
        let b = model.root(model.cell_index(&cube.facet(0, 1)).expect("edge end"));
        adj.entry(a).or_default().push((b, v.clone()));
        adj.entry(b).or_default().push((a, -v));
    }
    let mut value: BTreeMap<usize, Q> = BTreeMap::new();
    for &v0 in model.classes(0) {
        if value.contains_key(&v0) {
            continue;
        }
        value.insert(v0, Q::zero());
        let mut queue = VecDeque::from([v0]);
        while let Some(v) = queue.pop_front() {
            let fv = value[&v].clone();
            for (w, inc) in adj.get(&v).cloned().unwrap_or_default() {
                if let std::collections::btree_map::Entry::Vacant(e) = value.entry(w) {
                    e.insert(&fv + &inc);
                    queue.push_back(w);
                }
            }
        }
    }
    let mut f = CellForm::zero(&format!("F[{}]", omega.name), 0);
    for c in model.maximal_cells() {
        let cube = model.cell(c);
        let qd = cube.dim();
        let w = form_on_cell(model, &classes, c, 1)?;
        let corner = model.root(model.cell_index(&crate::model::Cube::new(cube.lo().to_vec(), vec![false; cube.ambient()])).expect("corner"));
        // F(x) = F(0) + ∫₀¹ Σ aᵢ(s x) xᵢ ds with s the extra variable
        let m = qd + 1;
        let s = Polynomial::var(m, m);
        let subs: Vec<Polynomial> = (1..=qd).map(|i| &Polynomial::var(m, i) * &s).collect();
        let mut integrand = Polynomial::zero(m);
        for i in 1..=qd {
            let a = w.coeff(&MultiIndex::new(qd, vec![i])?);
            integrand.add_assign(&(&a.compose(&subs, m)? * &Polynomial::var(m, i)));
        }
        let mut fc = integrand.integrate_unit(m);
        fc.add_assign(&Polynomial::constant(qd, value[&corner].clone()));
        let fc = PolyForm::function(fc);
        if fc.d() != w {
            return Err(Error::Model(format!("{} has no primitive on {}", omega.name, model.name(c))));
        }
        f.cells.insert(c, fc);
    }
    // the cellwise primitives must glue
    compatible_class_forms(model, &f)
        .map_err(|_| Error::Model(format!("the primitive of {} does not glue; the loops miss part of H1", omega.name)))?;
    Ok(f)
}

/// Pairing matrix `∫_{loopⱼ} ωᵢ` and its rank.
pub fn pairing_matrix(model: &Model, forms: &[CellForm], loops: &[PathPlot]) -> Result<(Vec<Vec<Q>>, usize)> {
    let rows = forms
        .iter()
        .map(|w| loops.iter().map(|l| integrate_1form(model, w, l)).collect::<Result<Vec<Q>>>())
        .collect::<Result<Vec<_>>>()?;
    let r = rank(&Matrix::from_rows(loops.len(), rows.clone()));
    Ok((rows, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_forms;
    use crate::poly::parse;
    use crate::qi;

    const CIRCLE: &str = "[0,1]\n[1,2]\nidentify [2,2] -> [0,0] via [[1]]; (-2)\n";

    fn circle() -> (Model, Vec<PathPlot>) {
        let m = Model::parse(CIRCLE).unwrap();
        let loops = PathPlot::parse_all("path gen\nsegment [0,1] : (t)\nsegment [1,2] : (t)\n", &m).unwrap();
        (m, loops)
    }

    #[test]
    fn fundamental_theorem() {
        let m = Model::parse("[0,1]").unwrap();
        let w = parse_forms("on [0,1] : dx1 : 2*x1\n", &m).unwrap();
        let p = PathPlot::parse_all("segment [0,1] : (t)\n", &m).unwrap();
        assert_eq!(integrate_1form(&m, &w[0], &p[0]).unwrap(), qi(1));
        let c = PathPlot::parse_all("segment [0,1] : (1/3)\n", &m).unwrap();
        assert_eq!(integrate_1form(&m, &w[0], &c[0]).unwrap(), qi(0));
        assert!(matches!(PathPlot::parse_all("segment [0,1] : (2*t)\n", &m), Err(Error::Model(_))));
    }

    #[test]
    fn circle_generator() {
        let (m, loops) = circle();
        assert!(loops[0].is_loop(&m).unwrap());
        let g = parse_forms("form g\non [0,1] : dx1 : 1/2\non [1,2] : dx1 : 1/2\n", &m).unwrap();
        assert_eq!(integrate_1form(&m, &g[0], &loops[0]).unwrap(), qi(1));
        assert_eq!(integrate_1form(&m, &g[0], &loops[0].reversed()).unwrap(), qi(-1));
        let twice = loops[0].concat(&m, &loops[0]).unwrap();
        assert_eq!(integrate_1form(&m, &g[0], &twice).unwrap(), qi(2));
        let r = exactness_defect(&m, &g[0], &loops).unwrap();
        assert_eq!(r.integrals, vec![qi(1)]);
        assert!(r.primitive.is_none());
    }

    #[test]
    fn exact_form_has_a_primitive() {
        let (m, loops) = circle();
        let w = parse_forms("on [0,1] : dx1 : 2*x1\non [1,2] : dx1 : -2*x1\n", &m).unwrap();
        let r = exactness_defect(&m, &w[0], &loops).unwrap();
        assert_eq!(r.integrals, vec![qi(0)]);
        let f = r.primitive.unwrap();
        for (c, fc) in &f.cells {
            assert_eq!(fc.d(), w[0].cells[c]);
        }
        let zero = CellForm::zero("z", 1);
        let r = exactness_defect(&m, &zero, &loops).unwrap();
        assert!(r.primitive.unwrap().cells.values().all(|p| p.is_zero()));
    }

    #[test]
    fn green() {
        let sq = PolyMap::identity(2);
        let w = PolyForm::term(MultiIndex::new(2, vec![1]).unwrap(), parse("x2", 2).unwrap());
        let r = green_check(&w, &sq).unwrap();
        assert_eq!(r.boundary, qi(-1));
        assert_eq!(r.stokes_defect(), qi(0));
        let exact = PolyForm::function(parse("x1*x2", 2).unwrap()).d();
        let h = PolyMap::new(2, vec![parse("x1^2", 2).unwrap(), parse("x1*x2", 2).unwrap()]).unwrap();
        assert_eq!(green_check(&exact, &h).unwrap().boundary, qi(0));
    }

    #[test]
    fn pairing_rank() {
        let (m, loops) = circle();
        let g = parse_forms("on [0,1] : dx1 : 1\non [1,2] : dx1 : 1\n", &m).unwrap();
        let (rows, r) = pairing_matrix(&m, &g, &loops).unwrap();
        assert_eq!(rows, vec![vec![qi(2)]]);
        assert_eq!(r, 1);
    }
}

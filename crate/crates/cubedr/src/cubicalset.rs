//! Cubic sets, cubical complexes and their subdivisions.
//!
//! A cubic set is a lattice cube, a cone `σ∗b` or a prism `σ×I`, built
//! inductively and stored as a constructor tree. Every cubic set is convex,
//! so its vertex set (with its dimension) identifies it inside a complex.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::rc::Rc;

use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::cohomology::RationalChainComplex;
use crate::linalg::{det, rank, Matrix};
use crate::model::{parse_cube, parse_point, parse_rational, strip_comment, Cover, Model};
use crate::poly::{FPoly, Polynomial};
use crate::polyform::PolyMap;
use crate::{q_to_f64, qi, Error, Result, Q};

#[derive(Clone, Debug, PartialEq)]
pub enum Build {
    /// `lo + size·[0,1]` along the free axes, `lo` elsewhere.
    Lattice { lo: Vec<Q>, free: Vec<bool>, size: Q },
    Cone { base: Rc<CubicSet>, apex: Vec<Q> },
    /// `base × [0,1]` along `axis` (1-based); the base has coordinate 0 there.
    Product { base: Rc<CubicSet>, axis: usize },
}

/// Identity of a cell: dimension and sorted vertex list.
pub type CellKey = (usize, Vec<Vec<Q>>);

#[derive(Clone, Debug, PartialEq)]
pub struct CubicSet {
    n: usize,
    dim: usize,
    build: Build,
    vertices: Vec<Vec<Q>>,
}

fn sorted(mut v: Vec<Vec<Q>>) -> Vec<Vec<Q>> {
    v.sort();
    v.dedup();
    v
}

impl CubicSet {
    pub fn lattice(lo: Vec<Q>, free: Vec<bool>, size: Q) -> Result<CubicSet> {
        if lo.len() != free.len() {
            return Err(Error::arg("lattice cube: corner and axis flags differ in length"));
        }
        if !size.is_positive() {
            return Err(Error::arg("lattice cube: size must be positive"));
        }
        let axes: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
        let mut vertices = Vec::with_capacity(1 << axes.len());
        for mask in 0..(1usize << axes.len()) {
            let mut v = lo.clone();
            for (k, &a) in axes.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    v[a] += &size;
                }
            }
            vertices.push(v);
        }
        Ok(CubicSet { n: lo.len(), dim: axes.len(), build: Build::Lattice { lo, free, size }, vertices: sorted(vertices) })
    }

    pub fn point(p: Vec<Q>) -> CubicSet {
        let n = p.len();
        CubicSet::lattice(p, vec![false; n], Q::one()).expect("a point is a lattice cube")
    }

    pub fn unit_cube(n: usize) -> CubicSet {
        CubicSet::lattice(vec![Q::zero(); n], vec![true; n], Q::one()).expect("unit cube")
    }

    /// The join `base ∗ apex`.
    pub fn cone(base: &CubicSet, apex: Vec<Q>) -> Result<CubicSet> {
        if apex.len() != base.n {
            return Err(Error::arg("cone apex lives in a different dimension"));
        }
        let rows: Vec<Vec<Q>> = base.vertices.iter().map(|v| v.iter().zip(&apex).map(|(a, b)| a - b).collect()).collect();
        if rank(&Matrix::from_rows(base.n, rows)) != base.dim + 1 {
            return Err(Error::Degenerate("cone apex lies in the affine hull of its base".into()));
        }
        Ok(CubicSet::cone_unchecked(base, apex))
    }

    fn cone_unchecked(base: &CubicSet, apex: Vec<Q>) -> CubicSet {
        let mut vertices = base.vertices.clone();
        vertices.push(apex.clone());
        CubicSet { n: base.n, dim: base.dim + 1, build: Build::Cone { base: Rc::new(base.clone()), apex }, vertices: sorted(vertices) }
    }

    /// The prism `base × I` along `axis` (1-based).
    pub fn product_with_i(base: &CubicSet, axis: usize) -> Result<CubicSet> {
        if axis == 0 || axis > base.n {
            return Err(Error::arg(format!("axis {axis} out of range 1..={}", base.n)));
        }
        if base.vertices.iter().any(|v| !v[axis - 1].is_zero()) {
            return Err(Error::arg(format!("prism base must lie in the hyperplane x{axis} = 0")));
        }
        Ok(CubicSet::product_unchecked(base, axis))
    }

    fn product_unchecked(base: &CubicSet, axis: usize) -> CubicSet {
        let mut vertices = base.vertices.clone();
        vertices.extend(base.vertices.iter().map(|v| {
            let mut w = v.clone();
            w[axis - 1] += Q::one();
            w
        }));
        CubicSet { n: base.n, dim: base.dim + 1, build: Build::Product { base: Rc::new(base.clone()), axis }, vertices: sorted(vertices) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn build(&self) -> &Build {
        &self.build
    }

    pub fn vertices(&self) -> &[Vec<Q>] {
        &self.vertices
    }

    pub fn key(&self) -> CellKey {
        (self.dim, self.vertices.clone())
    }

    /// Vertex centroid; interior for every cell of this family.
    pub fn barycenter(&self) -> Vec<Q> {
        let k = qi(self.vertices.len() as i64);
        (0..self.n).map(|i| self.vertices.iter().fold(Q::zero(), |s, v| s + &v[i]) / &k).collect()
    }

    /// Codimension-one faces.
    pub fn facets(&self) -> Vec<CubicSet> {
        match &self.build {
            Build::Lattice { lo, free, size } => {
                let mut out = Vec::new();
                for a in (0..self.n).filter(|&i| free[i]) {
                    for eps in 0..2 {
                        let mut l = lo.clone();
                        if eps == 1 {
                            l[a] += size;
                        }
                        let mut f = free.clone();
                        f[a] = false;
                        out.push(CubicSet::lattice(l, f, size.clone()).expect("facet"));
                    }
                }
                out
            }
            Build::Cone { base, apex } => {
                let mut out = vec![(**base).clone()];
                if base.dim == 0 {
                    out.push(CubicSet::point(apex.clone()));
                } else {
                    out.extend(base.facets().iter().map(|f| CubicSet::cone_unchecked(f, apex.clone())));
                }
                out
            }
            Build::Product { base, axis } => {
                let mut out = vec![(**base).clone(), base.shifted(*axis, &Q::one())];
                out.extend(base.facets().iter().map(|f| CubicSet::product_unchecked(f, *axis)));
                out
            }
        }
    }

    /// All faces including the cell itself.
    pub fn closure(&self) -> Vec<CubicSet> {
        let mut seen: BTreeMap<CellKey, CubicSet> = BTreeMap::new();
        let mut stack = vec![self.clone()];
        while let Some(c) = stack.pop() {
            let k = c.key();
            if seen.contains_key(&k) {
                continue;
            }
            stack.extend(c.facets());
            seen.insert(k, c);
        }
        seen.into_values().collect()
    }

    /// Translate by `by` along `axis` (1-based).
    pub fn shifted(&self, axis: usize, by: &Q) -> CubicSet {
        let shift = |v: &Vec<Q>| {
            let mut w = v.clone();
            w[axis - 1] += by;
            w
        };
        match &self.build {
            Build::Lattice { lo, free, size } => CubicSet::lattice(shift(lo), free.clone(), size.clone()).expect("shift"),
            Build::Cone { base, apex } => CubicSet::cone_unchecked(&base.shifted(axis, by), shift(apex)),
            Build::Product { base, axis: a } => CubicSet::product_unchecked(&base.shifted(axis, by), *a),
        }
    }

    /// `{value} × self` in one dimension more, the new coordinate first.
    pub fn lifted(&self, value: &Q) -> CubicSet {
        let lift = |v: &Vec<Q>| {
            let mut w = vec![value.clone()];
            w.extend(v.iter().cloned());
            w
        };
        match &self.build {
            Build::Lattice { lo, free, size } => {
                let mut f = vec![false];
                f.extend(free.iter().copied());
                CubicSet::lattice(lift(lo), f, size.clone()).expect("lift")
            }
            Build::Cone { base, apex } => CubicSet::cone_unchecked(&base.lifted(value), lift(apex)),
            Build::Product { base, axis } => CubicSet::product_unchecked(&base.lifted(value), axis + 1),
        }
    }

    /// Characteristic map `□^q → ℝⁿ`: affine on lattice cubes, the join
    /// `(t, x) ↦ t·φ(x) + (1−t)·b` on cones, `φ × id` on prisms.
    pub fn char_map(&self) -> PolyMap {
        let q = self.dim;
        match &self.build {
            Build::Lattice { lo, free, size } => {
                let mut k = 0;
                let comps = (0..self.n)
                    .map(|i| {
                        let mut p = Polynomial::constant(q, lo[i].clone());
                        if free[i] {
                            k += 1;
                            p.add_assign(&Polynomial::var(q, k).scale(size));
                        }
                        p
                    })
                    .collect();
                PolyMap::new(q, comps).expect("lattice chart")
            }
            Build::Cone { base, apex } => {
                let subs: Vec<Polynomial> = (2..=q).map(|i| Polynomial::var(q, i)).collect();
                let t = Polynomial::var(q, 1);
                let s = &Polynomial::one(q) - &t;
                let comps = base
                    .char_map()
                    .components()
                    .iter()
                    .zip(apex)
                    .map(|(c, b)| {
                        let moved = c.compose(&subs, q).expect("chart substitution");
                        &(&t * &moved) + &s.scale(b)
                    })
                    .collect();
                PolyMap::new(q, comps).expect("cone chart")
            }
            Build::Product { base, axis } => {
                let subs: Vec<Polynomial> = (1..q).map(|i| Polynomial::var(q, i)).collect();
                let comps = base
                    .char_map()
                    .components()
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let mut p = c.compose(&subs, q).expect("chart substitution");
                        if i + 1 == *axis {
                            p.add_assign(&Polynomial::var(q, q));
                        }
                        p
                    })
                    .collect();
                PolyMap::new(q, comps).expect("prism chart")
            }
        }
    }

    /// A decomposition into `q`-simplices (Kuhn for cubes, joins for cones,
    /// staircases for prisms), each given by its `q+1` vertices.
    pub fn simplices(&self) -> Vec<Vec<Vec<Q>>> {
        match &self.build {
            Build::Lattice { lo, free, size } => {
                let axes: Vec<usize> = (0..self.n).filter(|&i| free[i]).collect();
                let mut out = Vec::new();
                for perm in permutations(&axes) {
                    let mut v = lo.clone();
                    let mut s = vec![v.clone()];
                    for a in perm {
                        v[a] += size;
                        s.push(v.clone());
                    }
                    out.push(s);
                }
                out
            }
            Build::Cone { base, apex } => base
                .simplices()
                .into_iter()
                .map(|mut s| {
                    s.push(apex.clone());
                    s
                })
                .collect(),
            Build::Product { base, axis } => {
                let mut out = Vec::new();
                for s in base.simplices() {
                    let up = |v: &Vec<Q>| {
                        let mut w = v.clone();
                        w[axis - 1] += Q::one();
                        w
                    };
                    for j in 0..s.len() {
                        let mut t: Vec<Vec<Q>> = s[..=j].to_vec();
                        t.extend(s[j..].iter().map(up));
                        out.push(t);
                    }
                }
                out
            }
        }
    }

    /// Exact `n`-volume of a full-dimensional cell.
    pub fn volume(&self) -> Option<Q> {
        if self.dim != self.n {
            return None;
        }
        let fact: i64 = (1..=self.n as i64).product();
        Some(
            self.simplices()
                .iter()
                .map(|s| {
                    let rows = s[1..].iter().map(|v| v.iter().zip(&s[0]).map(|(a, b)| a - b).collect()).collect();
                    det(&Matrix::from_rows(self.n, rows)).abs()
                })
                .fold(Q::zero(), |a, b| a + b)
                / qi(fact),
        )
    }

    /// Squared Euclidean distance from `x` to the cell, exactly.
    pub fn sq_dist_q(&self, x: &[Q]) -> Q {
        self.simplices().iter().map(|s| sq_dist_to_simplex(s, x)).min().expect("cells have a simplex")
    }

    pub fn sq_dist_f64(&self, x: &[f64]) -> f64 {
        self.simplices()
            .iter()
            .map(|s| {
                let sf: Vec<Vec<f64>> = s.iter().map(|v| v.iter().map(q_to_f64).collect()).collect();
                sq_dist_to_simplex(&sf, x)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Scalars for the small geometric solves: exact rationals or doubles.
pub trait Scalar: Num + Signed + Clone + PartialOrd {
    /// Slack allowed on sign tests.
    fn slack() -> Self;
}

impl Scalar for Q {
    fn slack() -> Self {
        Q::zero()
    }
}

impl Scalar for f64 {
    fn slack() -> Self {
        1e-12
    }
}

/// Solve a small square system by Gaussian elimination; `None` if singular.
fn solve_small<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if a[p][c].abs() <= T::slack() {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for i in c + 1..n {
            let f = a[i][c].clone() / a[c][c].clone();
            if f.is_zero() {
                continue;
            }
            for j in c..n {
                let d = f.clone() * a[c][j].clone();
                a[i][j] = a[i][j].clone() - d;
            }
            let d = f * b[c].clone();
            b[i] = b[i].clone() - d;
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i].clone();
        for j in i + 1..n {
            s = s - a[i][j].clone() * x[j].clone();
        }
        x[i] = s / a[i][i].clone();
    }
    Some(x)
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + x.clone() * y.clone())
}

/// Squared distance from `x` to the simplex spanned by `pts`: the least
/// distance to an orthogonal projection onto a face affine hull that lands
/// inside that face.
pub fn sq_dist_to_simplex<T: Scalar>(pts: &[Vec<T>], x: &[T]) -> T {
    let k = pts.len();
    let mut best: Option<T> = None;
    for mask in 1usize..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let p0 = &pts[idx[0]];
        let e: Vec<Vec<T>> = idx[1..].iter().map(|&i| pts[i].iter().zip(p0).map(|(a, b)| a.clone() - b.clone()).collect()).collect();
        let r: Vec<T> = x.iter().zip(p0).map(|(a, b)| a.clone() - b.clone()).collect();
        let gram: Vec<Vec<T>> = e.iter().map(|u| e.iter().map(|v| dot(u, v)).collect()).collect();
        let rhs: Vec<T> = e.iter().map(|u| dot(u, &r)).collect();
        let Some(lam) = solve_small(gram, rhs) else { continue };
        let total = lam.iter().fold(T::zero(), |s, l| s + l.clone());
        let neg = -T::slack();
        if lam.iter().any(|l| *l < neg) || T::one() - total < neg {
            continue;
        }
        let mut diff = r.clone();
        for (u, l) in e.iter().zip(&lam) {
            for (d, c) in diff.iter_mut().zip(u) {
                *d = d.clone() - l.clone() * c.clone();
            }
        }
        let d2 = dot(&diff, &diff);
        if best.as_ref().is_none_or(|b| d2 < *b) {
            best = Some(d2);
        }
    }
    best.expect("a vertex projection always qualifies")
}

/// Outcome of the closure and intersection audit.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    /// Cells with a facet missing from the complex.
    pub missing_faces: usize,
    /// Pairs of cells sharing vertices whose common vertices do not span a
    /// common face.
    pub bad_intersections: usize,
    /// Total volume of full-dimensional cells.
    pub volume: Q,
    /// Grid points of `□ⁿ` outside every full-dimensional cell.
    pub uncovered: usize,
}

impl AuditReport {
    /// A valid complex whose carrier is the whole cube.
    pub fn is_valid_cube(&self) -> bool {
        self.missing_faces == 0 && self.bad_intersections == 0 && self.volume == Q::one() && self.uncovered == 0
    }
}

/// A finite family of cubic sets closed under faces.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicalComplex {
    n: usize,
    cells: BTreeMap<CellKey, CubicSet>,
}

impl CubicalComplex {
    pub fn new(n: usize) -> Self {
        CubicalComplex { n, cells: BTreeMap::new() }
    }

    /// The unit cube with all its faces.
    pub fn unit(n: usize) -> Self {
        let mut k = CubicalComplex::new(n);
        k.insert_closure(&CubicSet::unit_cube(n));
        k
    }

    pub fn from_cells<'a>(n: usize, cells: impl IntoIterator<Item = &'a CubicSet>) -> Self {
        let mut k = CubicalComplex::new(n);
        for c in cells {
            k.insert_closure(c);
        }
        k
    }

    pub fn insert_closure(&mut self, c: &CubicSet) {
        if self.cells.contains_key(&c.key()) {
            return;
        }
        for f in c.closure() {
            self.cells.entry(f.key()).or_insert(f);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = &CubicSet> {
        self.cells.values()
    }

    pub fn keys(&self) -> BTreeSet<CellKey> {
        self.cells.keys().cloned().collect()
    }

    pub fn contains(&self, key: &CellKey) -> bool {
        self.cells.contains_key(key)
    }

    pub fn get(&self, key: &CellKey) -> Option<&CubicSet> {
        self.cells.get(key)
    }

    pub fn dim(&self) -> usize {
        self.cells.keys().map(|k| k.0).max().unwrap_or(0)
    }

    /// Cells that are not a proper face of another cell.
    pub fn maximal(&self) -> Vec<&CubicSet> {
        let mut faces: BTreeSet<CellKey> = BTreeSet::new();
        for c in self.cells.values() {
            for f in c.facets() {
                faces.insert(f.key());
            }
        }
        self.cells.iter().filter(|(k, _)| !faces.contains(*k)).map(|(_, c)| c).collect()
    }

    /// Keys of the cells lying in the hyperplane `x_axis = value`.
    pub fn slice_keys(&self, axis: usize, value: &Q) -> BTreeSet<CellKey> {
        self.cells.keys().filter(|(_, vs)| vs.iter().all(|v| &v[axis - 1] == value)).cloned().collect()
    }

    /// Sum of the volumes of the full-dimensional cells.
    pub fn volume(&self) -> Q {
        self.cells.values().filter_map(|c| c.volume()).fold(Q::zero(), |a, b| a + b)
    }

    /// Check face closure and intersections, and measure the carrier on a
    /// grid of `□ⁿ` with the given denominator.
    pub fn audit(&self, grid: u32) -> AuditReport {
        let mut missing_faces = 0;
        let mut face_sets: HashMap<CellKey, BTreeSet<CellKey>> = HashMap::new();
        for c in self.cells.values() {
            if c.facets().iter().any(|f| !self.cells.contains_key(&f.key())) {
                missing_faces += 1;
            }
        }
        let mut face_set = |c: &CubicSet| -> BTreeSet<CellKey> {
            face_sets.entry(c.key()).or_insert_with(|| c.closure().iter().map(|f| f.key()).collect()).clone()
        };
        let mut by_vertex: BTreeMap<&Vec<Q>, Vec<&CubicSet>> = BTreeMap::new();
        for c in self.cells.values() {
            for v in &c.vertices {
                by_vertex.entry(v).or_default().push(c);
            }
        }
        let by_vertices: HashMap<Vec<Vec<Q>>, Vec<CellKey>> = self.cells.keys().fold(HashMap::new(), |mut m, k| {
            m.entry(k.1.clone()).or_default().push(k.clone());
            m
        });
        let mut checked: BTreeSet<(CellKey, CellKey)> = BTreeSet::new();
        let mut bad_intersections = 0;
        for cells in by_vertex.values() {
            for (i, a) in cells.iter().enumerate() {
                for b in &cells[i + 1..] {
                    let pair = (a.key(), b.key());
                    if !checked.insert(pair) {
                        continue;
                    }
                    let vb: BTreeSet<&Vec<Q>> = b.vertices.iter().collect();
                    let common: Vec<Vec<Q>> = a.vertices.iter().filter(|v| vb.contains(v)).cloned().collect();
                    let (fa, fb) = (face_set(a), face_set(b));
                    let ok = by_vertices
                        .get(&common)
                        .is_some_and(|ks| ks.iter().any(|k| fa.contains(k) && fb.contains(k)));
                    if !ok {
                        bad_intersections += 1;
                    }
                }
            }
        }
        let tops: Vec<Vec<Vec<Vec<f64>>>> = self
            .cells
            .values()
            .filter(|c| c.dim == self.n)
            .map(|c| c.simplices().iter().map(|s| s.iter().map(|v| v.iter().map(q_to_f64).collect()).collect()).collect())
            .collect();
        let mut uncovered = 0;
        for x in grid_points(self.n, grid) {
            let inside = tops.iter().any(|ss| ss.iter().any(|s| sq_dist_to_simplex(s, &x) < 1e-18));
            if !inside {
                uncovered += 1;
            }
        }
        AuditReport { missing_faces, bad_intersections, volume: self.volume(), uncovered }
    }

    /// Cellular chains: one generator per cell, boundary from the faces of
    /// the characteristic maps, `∂σ = Σᵢ (−1)ⁱ(σ∘∂ᵢ¹ − σ∘∂ᵢ⁰)`, degenerate
    /// (collapsed) faces dropped.
    pub fn chain_complex(&self) -> Result<RationalChainComplex> {
        let top = self.dim();
        let by_dim: Vec<Vec<&CellKey>> = (0..=top).map(|q| self.cells.keys().filter(|k| k.0 == q).collect()).collect();
        let index: HashMap<&CellKey, usize> =
            by_dim.iter().flat_map(|ks| ks.iter().enumerate().map(|(i, k)| (*k, i))).collect();
        let mut boundaries = vec![Matrix::zeros(0, by_dim[0].len())];
        for q in 1..=top {
            let mut m = Matrix::zeros(by_dim[q - 1].len(), by_dim[q].len());
            for (col, key) in by_dim[q].iter().enumerate() {
                let cell = &self.cells[*key];
                let phi = cell.char_map();
                let charts: Vec<(CellKey, PolyMap)> = cell
                    .facets()
                    .iter()
                    .map(|f| {
                        let k = f.key();
                        let stored = self.cells.get(&k).map_or_else(|| f.char_map(), |c| c.char_map());
                        (k, stored)
                    })
                    .collect();
                for i in 1..=q {
                    for eps in 0..2u8 {
                        let face = face_map(&phi, i, eps);
                        if face.components().iter().all(|c| c.as_constant().is_some()) && q > 1 {
                            continue;
                        }
                        let Some((k, _)) = charts.iter().find(|(_, c)| *c == face) else {
                            return Err(Error::Degenerate(format!(
                                "face {i},{eps} of a {q}-cell does not match the chart of any facet"
                            )));
                        };
                        let sign = if i % 2 == 0 { 1 } else { -1 } * if eps == 1 { 1 } else { -1 };
                        let row = index[k];
                        let v = m.get(row, col) + qi(sign);
                        m.set(row, col, v);
                    }
                }
            }
            boundaries.push(m);
        }
        RationalChainComplex::new(by_dim.iter().map(|v| v.len()).collect(), boundaries)
    }

    /// Text form: `scale N`, lattice cubes in scaled integer coordinates,
    /// then `point`, `cone` and `prism` lines for constructed cells.
    pub fn serialize(&self) -> Result<String> {
        let mut size: Option<Q> = None;
        for c in self.cells.values() {
            if let Build::Lattice { size: s, .. } = &c.build {
                if c.dim > 0 {
                    match &size {
                        None => size = Some(s.clone()),
                        Some(t) if t != s => return Err(Error::arg("lattice cubes of different sizes")),
                        _ => {}
                    }
                }
            }
        }
        let size = size.unwrap_or_else(Q::one);
        let scale = Q::one() / &size;
        if !scale.is_integer() {
            return Err(Error::arg("lattice size must be 1/N"));
        }
        let mut out = String::new();
        writeln!(out, "scale {}", scale).unwrap();
        let mut ids: HashMap<CellKey, String> = HashMap::new();
        let mut next = 0;
        let mut cells: Vec<&CubicSet> = self.cells.values().collect();
        cells.sort_by_key(|a| a.key());
        for c in cells {
            let id = match &c.build {
                Build::Lattice { lo, free, .. } => {
                    let scaled: Vec<Q> = lo.iter().map(|v| v * &scale).collect();
                    if scaled.iter().all(|v| v.is_integer()) {
                        let id = scaled
                            .iter()
                            .zip(free)
                            .map(|(a, &f)| format!("[{},{}]", a, if f { a + Q::one() } else { a.clone() }))
                            .collect::<Vec<_>>()
                            .join("x");
                        writeln!(out, "{id}").unwrap();
                        id
                    } else if c.dim == 0 {
                        let id = format!("c{next}");
                        next += 1;
                        writeln!(out, "point {id} = {}", fmt_point(lo)).unwrap();
                        id
                    } else {
                        return Err(Error::arg("lattice cube off the lattice"));
                    }
                }
                Build::Cone { base, apex } => {
                    let id = format!("c{next}");
                    next += 1;
                    writeln!(out, "cone {id} base={} apex={}", ids[&base.key()], fmt_point(apex)).unwrap();
                    id
                }
                Build::Product { base, axis } => {
                    let id = format!("c{next}");
                    next += 1;
                    writeln!(out, "prism {id} base={} axis={axis}", ids[&base.key()]).unwrap();
                    id
                }
            };
            ids.insert(c.key(), id);
        }
        Ok(out)
    }

    /// Read a complex file; the complex is the downward closure of the
    /// listed cells.
    pub fn parse(text: &str, n: usize) -> Result<CubicalComplex> {
        let mut scale = Q::one();
        let mut named: HashMap<String, CubicSet> = HashMap::new();
        let mut k = CubicalComplex::new(n);
        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let perr = |m: String| Error::parse(line_no, m);
            let cell = if let Some(rest) = line.strip_prefix("scale ") {
                scale = parse_rational(rest).map_err(perr)?;
                if !scale.is_integer() || !scale.is_positive() {
                    return Err(Error::parse(line_no, "scale must be a positive integer"));
                }
                continue;
            } else if let Some(rest) = line.strip_prefix("point ") {
                let (id, p) = rest.split_once('=').ok_or_else(|| Error::parse(line_no, "expected 'point <id> = (...)'"))?;
                let p = parse_point(p).map_err(perr)?;
                named.insert(id.trim().to_string(), CubicSet::point(p.clone()));
                CubicSet::point(p)
            } else if let Some(rest) = line.strip_prefix("cone ") {
                let (id, base, arg) = constructed(rest, "apex=", &named).map_err(perr)?;
                let apex = parse_point(&arg).map_err(|m| Error::parse(line_no, m))?;
                let c = CubicSet::cone(&base, apex).map_err(|e| Error::parse(line_no, e.to_string()))?;
                named.insert(id, c.clone());
                c
            } else if let Some(rest) = line.strip_prefix("prism ") {
                let (id, base, arg) = constructed(rest, "axis=", &named).map_err(perr)?;
                let axis: usize = arg.trim().parse().map_err(|_| Error::parse(line_no, "axis must be a number"))?;
                let c = CubicSet::product_with_i(&base, axis).map_err(|e| Error::parse(line_no, e.to_string()))?;
                named.insert(id, c.clone());
                c
            } else {
                let cube = parse_cube(line).map_err(perr)?;
                if cube.ambient() != n {
                    return Err(Error::parse(line_no, format!("expected {n} intervals")));
                }
                let lo: Vec<Q> = cube.lo().iter().map(|&a| qi(a) / &scale).collect();
                let free: Vec<bool> = (0..n).map(|i| cube.free_axes().contains(&i)).collect();
                let c = CubicSet::lattice(lo, free, Q::one() / &scale)?;
                named.insert(cube.id(), c.clone());
                c
            };
            if cell.n != n {
                return Err(Error::parse(line_no, format!("cell lives in dimension {}, expected {n}", cell.n)));
            }
            k.insert_closure(&cell);
        }
        Ok(k)
    }
}

fn constructed(rest: &str, arg: &str, named: &HashMap<String, CubicSet>) -> std::result::Result<(String, CubicSet, String), String> {
    let mut parts = rest.splitn(2, char::is_whitespace);
    let id = parts.next().unwrap_or("").trim().to_string();
    let tail = parts.next().unwrap_or("").trim();
    let tail = tail.strip_prefix("base=").ok_or("expected base=<id>")?;
    let (base, value) = tail.split_once(char::is_whitespace).ok_or("missing argument after the base")?;
    let base = named.get(base.trim()).ok_or_else(|| format!("unknown cell '{}'", base.trim()))?.clone();
    let value = value.trim().strip_prefix(arg).ok_or_else(|| format!("expected {arg}"))?;
    Ok((id, base, value.to_string()))
}

fn fmt_point(p: &[Q]) -> String {
    format!("({})", p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
}

/// `φ ∘ ∂ᵢ^ε`.
fn face_map(phi: &PolyMap, i: usize, eps: u8) -> PolyMap {
    let q = phi.source_dim();
    let comps = phi.components().iter().map(|c| c.restrict(i, &qi(eps as i64))).collect();
    PolyMap::new(q - 1, comps).expect("face of a chart")
}

/// Points of `□ⁿ` with coordinates in `(1/den)ℤ`, as doubles.
pub fn grid_points(n: usize, den: u32) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                (0..=den).map(move |k| {
                    let mut q = p.clone();
                    q.push(k as f64 / den as f64);
                    q
                })
            })
            .collect();
    }
    out
}

/// A complex with `|K| = □ⁿ` and a plot `□ⁿ → model`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubdivPair {
    pub complex: CubicalComplex,
    pub plot: PolyMap,
}

impl SubdivPair {
    pub fn new(complex: CubicalComplex, plot: PolyMap) -> Result<Self> {
        if plot.source_dim() != complex.n() {
            return Err(Error::arg("the plot must be defined on the cube of the complex"));
        }
        Ok(SubdivPair { complex, plot })
    }

    pub fn n(&self) -> usize {
        self.complex.n()
    }
}

const SAMPLE_DENOMINATORS: [u32; 4] = [2, 4, 8, 16];

/// Decides and caches whether plot images of cells lie in a cover set.
pub struct Subordination<'a> {
    model: &'a Model,
    cover: &'a Cover,
    plot: PolyMap,
    plot_f: Vec<FPoly>,
    memo: RefCell<HashMap<CellKey, bool>>,
}

impl<'a> Subordination<'a> {
    pub fn new(model: &'a Model, cover: &'a Cover, plot: &PolyMap) -> Result<Self> {
        if plot.target_dim() != model.ambient() {
            return Err(Error::arg(format!(
                "plot has {} components, the model lives in dimension {}",
                plot.target_dim(),
                model.ambient()
            )));
        }
        if cover.sets.is_empty() {
            return Err(Error::UnsupportedCover("empty cover".into()));
        }
        Ok(Subordination {
            model,
            cover,
            plot: plot.clone(),
            plot_f: plot.components().iter().map(|c| c.to_f64()).collect(),
            memo: RefCell::new(HashMap::new()),
        })
    }

    pub fn plot(&self) -> &PolyMap {
        &self.plot
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn cover(&self) -> &Cover {
        self.cover
    }

    /// `P(x)` in double precision.
    pub fn image_f64(&self, x: &[f64]) -> Vec<f64> {
        self.plot_f.iter().map(|c| c.eval(x)).collect()
    }

    /// Indices of the cover sets certified to contain `P(σ)`.
    pub fn covering_sets(&self, cell: &CubicSet) -> Vec<usize> {
        let affine = self.plot.is_affine();
        let images: Vec<Vec<Q>> = if affine {
            cell.vertices.iter().map(|v| self.plot.eval(v).expect("plot evaluation")).collect()
        } else {
            Vec::new()
        };
        (0..self.cover.sets.len())
            .filter(|&s| {
                let set = &self.cover.sets[s];
                if affine && set.contains_hull(&images) {
                    return true;
                }
                self.certified_by_sampling(cell, s)
            })
            .collect()
    }

    /// Sample `P∘φ_σ` on grids of increasing density; a sample certifies
    /// its grid neighbourhood when the margin beats the Lipschitz bound.
    fn certified_by_sampling(&self, cell: &CubicSet, s: usize) -> bool {
        let set = &self.cover.sets[s];
        let comp = self.plot.after(&cell.char_map()).expect("plot after chart");
        let q = cell.dim;
        let lip = lipschitz_bound(&comp);
        let comp_f: Vec<FPoly> = comp.components().iter().map(|c| c.to_f64()).collect();
        for den in SAMPLE_DENOMINATORS {
            let reach = lip * (q as f64).sqrt() / (2.0 * den as f64);
            let ok = grid_points(q, den).iter().all(|u| {
                let y: Vec<f64> = comp_f.iter().map(|c| c.eval(u)).collect();
                set.margin(self.model, &y) > reach + 1e-12
            });
            if ok {
                return true;
            }
        }
        false
    }

    /// `P(σ)` lies in one cover set, and so does every face.
    pub fn is_subordinate(&self, cell: &CubicSet) -> bool {
        let key = cell.key();
        if let Some(&v) = self.memo.borrow().get(&key) {
            return v;
        }
        let v = !self.covering_sets(cell).is_empty() && cell.facets().iter().all(|f| self.is_subordinate(f));
        self.memo.borrow_mut().insert(key, v);
        v
    }
}

/// Upper bound for the Lipschitz constant of a polynomial map on the unit
/// cube: Frobenius norm of the coefficient bounds of its partials.
pub fn lipschitz_bound(f: &PolyMap) -> f64 {
    let mut s = 0.0;
    for c in f.components() {
        for i in 1..=f.source_dim() {
            let b = q_to_f64(&c.derivative(i).abs_coeff_sum());
            s += b * b;
        }
    }
    s.sqrt()
}

/// The subcomplex `K_P(𝒰)` of subordinate cells.
pub fn subordinate_cells(pair: &SubdivPair, sub: &Subordination) -> CubicalComplex {
    let mut k = CubicalComplex::new(pair.n());
    for c in pair.complex.cells() {
        if sub.is_subordinate(c) {
            k.insert_closure(c);
        }
    }
    k
}

/// The cells replacing one cell under `Sd`: its closure if subordinate,
/// otherwise the cone from its barycenter over the subdivided boundary.
fn sd_cell(cell: &CubicSet, sub: &Subordination, memo: &mut HashMap<CellKey, Rc<Vec<CubicSet>>>) -> Rc<Vec<CubicSet>> {
    let key = cell.key();
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let out = if sub.is_subordinate(cell) {
        cell.closure()
    } else {
        let mut boundary: BTreeMap<CellKey, CubicSet> = BTreeMap::new();
        for f in cell.facets() {
            for c in sd_cell(&f, sub, memo).iter() {
                boundary.entry(c.key()).or_insert_with(|| c.clone());
            }
        }
        let b = cell.barycenter();
        let mut out: Vec<CubicSet> = boundary.values().cloned().collect();
        out.push(CubicSet::point(b.clone()));
        out.extend(boundary.values().map(|r| CubicSet::cone_unchecked(r, b.clone())));
        out
    };
    let out = Rc::new(out);
    memo.insert(key, out.clone());
    out
}

/// `Sd^𝒰_P`: keep subordinate cells, cone off the rest.
pub fn subdivide_sd(pair: &SubdivPair, sub: &Subordination) -> SubdivPair {
    let mut memo = HashMap::new();
    let mut k = CubicalComplex::new(pair.n());
    for c in pair.complex.cells() {
        for d in sd_cell(c, sub, &mut memo).iter() {
            k.cells.entry(d.key()).or_insert_with(|| d.clone());
        }
    }
    SubdivPair { complex: k, plot: pair.plot.clone() }
}

/// `ε` and `d` of a pair; `ε` is absent without subordinate cells.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshMetrics {
    pub epsilon: Option<f64>,
    pub diameter: f64,
}

/// `ε`: least distance from a maximal subordinate cell to a grid point
/// whose image leaves the cell's covering set. `d`: largest distance from a
/// vertex of a non-subordinate cell to a maximal subordinate cell it meets;
/// 0 when there is no such pair.
pub fn mesh_metrics(pair: &SubdivPair, sub: &Subordination, grid: u32) -> MeshMetrics {
    let ksub = subordinate_cells(pair, sub);
    let maximal: Vec<&CubicSet> = ksub.maximal();
    let n = pair.n();

    let epsilon = if maximal.is_empty() {
        None
    } else {
        let pts = grid_points(n, grid);
        let margins: Vec<Vec<f64>> = pts
            .iter()
            .map(|x| {
                let y = sub.image_f64(x);
                sub.cover.sets.iter().map(|s| s.margin(sub.model, &y)).collect()
            })
            .collect();
        let mut eps = f64::INFINITY;
        for tau in &maximal {
            let best = sub
                .covering_sets(tau)
                .into_iter()
                .map(|s| {
                    pts.iter()
                        .zip(&margins)
                        .filter(|(_, m)| m[s] <= 0.0)
                        .map(|(x, _)| tau.sq_dist_f64(x).sqrt())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max);
            eps = eps.min(best);
        }
        Some(eps)
    };

    let mut d2 = Q::zero();
    for tau in &maximal {
        let tv: BTreeSet<&Vec<Q>> = tau.vertices.iter().collect();
        for sigma in pair.complex.cells() {
            if sub.is_subordinate(sigma) || !sigma.vertices.iter().any(|v| tv.contains(v)) {
                continue;
            }
            for v in &sigma.vertices {
                let d = tau.sq_dist_q(v);
                if d > d2 {
                    d2 = d;
                }
            }
        }
    }
    MeshMetrics { epsilon, diameter: d2.to_f64().unwrap_or(f64::NAN).sqrt() }
}

/// Result of iterating `Sd` until every cell is subordinate.
#[derive(Clone, Debug)]
pub struct SdRun {
    pub pair: SubdivPair,
    pub iterations: usize,
    /// Metrics before the first step and after each step.
    pub trail: Vec<MeshMetrics>,
}

impl SdRun {
    /// Largest `d(Sd K)/d(K)` over the steps with `d(K) > 0`.
    pub fn worst_ratio(&self) -> Option<f64> {
        self.trail
            .windows(2)
            .filter(|w| w[0].diameter > 0.0)
            .map(|w| w[1].diameter / w[0].diameter)
            .fold(None, |a: Option<f64>, r| Some(a.map_or(r, |a| a.max(r))))
    }
}

/// Check that the cover meets every grid point of the plot image.
pub fn check_coverage(n: usize, sub: &Subordination, grid: u32) -> Result<()> {
    for x in grid_points(n, grid) {
        let y = sub.image_f64(&x);
        if sub.cover.sets.iter().all(|s| s.margin(sub.model, &y) <= 0.0) {
            return Err(Error::Coverage(format!("no cover set contains the image of {x:?}")));
        }
    }
    Ok(())
}

pub fn sd_iterate(pair: &SubdivPair, sub: &Subordination, max_iters: usize, grid: u32) -> Result<SdRun> {
    check_coverage(pair.n(), sub, 16)?;
    let mut current = pair.clone();
    let mut trail = vec![mesh_metrics(&current, sub, grid)];
    let mut r = 0;
    loop {
        if current.complex.cells().all(|c| sub.is_subordinate(c)) {
            return Ok(SdRun { pair: current, iterations: r, trail });
        }
        if r == max_iters {
            let m = trail.last().expect("metrics").clone();
            return Err(Error::NonTermination { iters: r, epsilon: m.epsilon, diameter: m.diameter });
        }
        current = subdivide_sd(&current, sub);
        trail.push(mesh_metrics(&current, sub, grid));
        r += 1;
    }
}

fn td_cell(
    cell: &CubicSet,
    sub: &Subordination,
    memo: &mut HashMap<CellKey, Rc<Vec<CubicSet>>>,
) -> Rc<Vec<CubicSet>> {
    let key = cell.key();
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let zero = Q::zero();
    let out = if sub.is_subordinate(cell) {
        CubicSet::product_unchecked(&cell.lifted(&zero), 1).closure()
    } else {
        let mut rim: BTreeMap<CellKey, CubicSet> = BTreeMap::new();
        for f in cell.facets() {
            for c in td_cell(&f, sub, memo).iter() {
                rim.entry(c.key()).or_insert_with(|| c.clone());
            }
        }
        for c in cell.lifted(&zero).closure() {
            rim.entry(c.key()).or_insert(c);
        }
        let apex = CubicSet::point(cell.barycenter()).lifted(&Q::one()).vertices[0].clone();
        let mut out: Vec<CubicSet> = rim.values().cloned().collect();
        out.push(CubicSet::point(apex.clone()));
        out.extend(rim.values().map(|r| CubicSet::cone_unchecked(r, apex.clone())));
        out
    };
    let out = Rc::new(out);
    memo.insert(key, out.clone());
    out
}

/// `Td^𝒰_P`: a complex on `I × □ⁿ` (time first) from `K` at `t = 0` to
/// `Sd(K)` at `t = 1`, with plot `P ∘ pr`.
pub fn prism_td(pair: &SubdivPair, sub: &Subordination) -> SubdivPair {
    let mut memo = HashMap::new();
    let mut k = CubicalComplex::new(pair.n() + 1);
    for c in pair.complex.cells() {
        for d in td_cell(c, sub, &mut memo).iter() {
            k.cells.entry(d.key()).or_insert_with(|| d.clone());
        }
    }
    let plot = pair.plot.after(&PolyMap::drop_first(pair.n())).expect("plot after projection");
    SubdivPair { complex: k, plot }
}

/// Cells of the `t = 0` and `t = 1` slices of a prism complex compared with
/// `K` and `Sd(K)`: counts of mismatched cells.
pub fn td_slice_mismatches(pair: &SubdivPair, td: &SubdivPair, sd: &SubdivPair) -> (usize, usize) {
    let diff = |slice: BTreeSet<CellKey>, want: BTreeSet<CellKey>| slice.symmetric_difference(&want).count();
    let lifted = |k: &CubicalComplex, v: &Q| k.cells().map(|c| c.lifted(v).key()).collect::<BTreeSet<_>>();
    let zero = Q::zero();
    let one = Q::one();
    (
        diff(td.complex.slice_keys(1, &zero), lifted(&pair.complex, &zero)),
        diff(td.complex.slice_keys(1, &one), lifted(&sd.complex, &one)),
    )
}

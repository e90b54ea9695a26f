//! Finite cubical models: elementary lattice cubes glued along affine face
//! identifications, plus the text formats that refer to their cells.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::exterior::MultiIndex;
use crate::linalg::Matrix;
use crate::poly::{self, Polynomial};
use crate::polyform::{PolyForm, PolyMap};
use crate::{q_to_f64, qi, Error, Result, Q};

/// Radius of the open neighbourhood used for `cells(...)` cover parts.
pub fn neighbourhood() -> Q {
    crate::q(1, 4)
}

/// An elementary lattice cube `Π [loᵢ, loᵢ + freeᵢ]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    lo: Vec<i64>,
    free: Vec<bool>,
}

impl Cube {
    pub fn new(lo: Vec<i64>, free: Vec<bool>) -> Self {
        assert_eq!(lo.len(), free.len());
        Cube { lo, free }
    }

    /// The cube with the given corners, if every side has length 0 or 1.
    pub fn from_bounds(lo: &[i64], hi: &[i64]) -> Option<Cube> {
        let mut free = Vec::with_capacity(lo.len());
        for (a, b) in lo.iter().zip(hi) {
            match b - a {
                0 => free.push(false),
                1 => free.push(true),
                _ => return None,
            }
        }
        Some(Cube { lo: lo.to_vec(), free })
    }

    pub fn ambient(&self) -> usize {
        self.lo.len()
    }

    pub fn dim(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> Vec<i64> {
        self.lo.iter().zip(&self.free).map(|(&a, &f)| a + f as i64).collect()
    }

    /// 0-based ambient axes along which the cube extends.
    pub fn free_axes(&self) -> Vec<usize> {
        (0..self.free.len()).filter(|&i| self.free[i]).collect()
    }

    pub fn vertices(&self) -> Vec<Vec<i64>> {
        let axes = self.free_axes();
        (0..1usize << axes.len())
            .map(|mask| {
                let mut v = self.lo.clone();
                for (k, &a) in axes.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        v[a] += 1;
                    }
                }
                v
            })
            .collect()
    }

    /// Canonical identifier such as `[0,1]x[0,0]`.
    pub fn id(&self) -> String {
        self.lo
            .iter()
            .zip(self.hi())
            .map(|(a, b)| format!("[{a},{b}]"))
            .collect::<Vec<_>>()
            .join("x")
    }

    /// The face `xₖ = eps` in local coordinates (`k` 0-based among free axes).
    pub fn facet(&self, k: usize, eps: u8) -> Cube {
        let a = self.free_axes()[k];
        let mut c = self.clone();
        c.free[a] = false;
        c.lo[a] += eps as i64;
        c
    }

    /// All faces, the cube itself included.
    pub fn faces(&self) -> Vec<Cube> {
        let axes = self.free_axes();
        let mut out = Vec::new();
        // each free axis is kept, pinned low, or pinned high
        let total = 3usize.pow(axes.len() as u32);
        for code in 0..total {
            let mut c = self.clone();
            let mut x = code;
            for &a in &axes {
                match x % 3 {
                    0 => {}
                    1 => c.free[a] = false,
                    _ => {
                        c.free[a] = false;
                        c.lo[a] += 1;
                    }
                }
                x /= 3;
            }
            out.push(c);
        }
        out
    }

    pub fn is_face_of(&self, other: &Cube) -> bool {
        let hi = self.hi();
        let ohi = other.hi();
        (0..self.lo.len()).all(|i| self.lo[i] >= other.lo[i] && hi[i] <= ohi[i])
    }

    /// `□^q → ℝⁿ`, `x ↦ lo + Σ xⱼ e_{axisⱼ}`.
    pub fn char_map(&self) -> PolyMap {
        let q = self.dim();
        let axes = self.free_axes();
        let comps = (0..self.ambient())
            .map(|i| {
                let mut p = Polynomial::constant(q, qi(self.lo[i]));
                if let Some(k) = axes.iter().position(|&a| a == i) {
                    p.add_assign(&Polynomial::var(q, k + 1));
                }
                p
            })
            .collect();
        PolyMap::new(q, comps).expect("cube chart")
    }

    pub fn local_q(&self, y: &[Q]) -> Vec<Q> {
        self.free_axes().iter().map(|&a| &y[a] - qi(self.lo[a])).collect()
    }

    pub fn local_f64(&self, y: &[f64]) -> Vec<f64> {
        self.free_axes().iter().map(|&a| y[a] - self.lo[a] as f64).collect()
    }

    pub fn point_q(&self, u: &[Q]) -> Vec<Q> {
        let mut y: Vec<Q> = self.lo.iter().map(|&v| qi(v)).collect();
        for (k, a) in self.free_axes().into_iter().enumerate() {
            y[a] += &u[k];
        }
        y
    }

    pub fn point_f64(&self, u: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.lo.iter().map(|&v| v as f64).collect();
        for (k, a) in self.free_axes().into_iter().enumerate() {
            y[a] += u[k];
        }
        y
    }

    pub fn contains_f64(&self, y: &[f64], tol: f64) -> bool {
        let hi = self.hi();
        (0..self.lo.len()).all(|i| y[i] >= self.lo[i] as f64 - tol && y[i] <= hi[i] as f64 + tol)
    }

    pub fn contains_q(&self, y: &[Q]) -> bool {
        let hi = self.hi();
        (0..self.lo.len()).all(|i| y[i] >= qi(self.lo[i]) && y[i] <= qi(hi[i]))
    }

    pub fn sq_dist_f64(&self, y: &[f64]) -> f64 {
        let hi = self.hi();
        (0..self.lo.len())
            .map(|i| {
                let d = (self.lo[i] as f64 - y[i]).max(y[i] - hi[i] as f64).max(0.0);
                d * d
            })
            .sum()
    }

    pub fn sq_dist_q(&self, y: &[Q]) -> Q {
        let hi = self.hi();
        let mut s = Q::zero();
        for i in 0..self.lo.len() {
            let lo = qi(self.lo[i]);
            let h = qi(hi[i]);
            let d = if y[i] < lo {
                &lo - &y[i]
            } else if y[i] > h {
                &y[i] - &h
            } else {
                continue;
            };
            s += &d * &d;
        }
        s
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// A symmetry of `□^q` permuting and reflecting coordinates:
/// `outⱼ = xₛ` or `1 − xₛ` with `s = src[j]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalMap {
    src: Vec<usize>,
    flip: Vec<bool>,
}

impl LocalMap {
    pub fn identity(q: usize) -> Self {
        LocalMap { src: (0..q).collect(), flip: vec![false; q] }
    }

    pub fn dim(&self) -> usize {
        self.src.len()
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &LocalMap) -> LocalMap {
        LocalMap {
            src: next.src.iter().map(|&k| self.src[k]).collect(),
            flip: next.src.iter().zip(&next.flip).map(|(&k, &f)| f ^ self.flip[k]).collect(),
        }
    }

    pub fn inverse(&self) -> LocalMap {
        let q = self.src.len();
        let mut src = vec![0; q];
        let mut flip = vec![false; q];
        for j in 0..q {
            src[self.src[j]] = j;
            flip[self.src[j]] = self.flip[j];
        }
        LocalMap { src, flip }
    }

    /// Orientation: permutation parity times one sign per reflection.
    pub fn sign(&self) -> i64 {
        let mut seen = vec![false; self.src.len()];
        let mut parity = 0;
        for s in 0..self.src.len() {
            if seen[s] {
                continue;
            }
            let mut len = 0;
            let mut j = s;
            while !seen[j] {
                seen[j] = true;
                j = self.src[j];
                len += 1;
            }
            parity += len - 1;
        }
        parity += self.flip.iter().filter(|&&f| f).count();
        if parity % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn is_identity(&self) -> bool {
        self.src.iter().enumerate().all(|(j, &s)| s == j) && self.flip.iter().all(|&f| !f)
    }

    pub fn apply_q(&self, x: &[Q]) -> Vec<Q> {
        self.src
            .iter()
            .zip(&self.flip)
            .map(|(&s, &f)| if f { Q::one() - &x[s] } else { x[s].clone() })
            .collect()
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        self.src.iter().zip(&self.flip).map(|(&s, &f)| if f { 1.0 - x[s] } else { x[s] }).collect()
    }

    pub fn poly_map(&self) -> PolyMap {
        let q = self.dim();
        let comps = self
            .src
            .iter()
            .zip(&self.flip)
            .map(|(&s, &f)| {
                let v = Polynomial::var(q, s + 1);
                if f {
                    &Polynomial::one(q) - &v
                } else {
                    v
                }
            })
            .collect();
        PolyMap::new(q, comps).expect("local symmetry")
    }
}

/// One `identify` statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Identification {
    pub from: String,
    pub to: String,
    pub matrix: Vec<Vec<i64>>,
    pub offset: Vec<i64>,
}

/// A set of cell classes, one index set per dimension, closed under faces.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Subcomplex {
    classes: Vec<BTreeSet<usize>>,
}

impl Subcomplex {
    pub fn classes(&self, q: usize) -> Vec<usize> {
        self.classes.get(q).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    pub fn contains(&self, q: usize, class: usize) -> bool {
        self.classes.get(q).is_some_and(|s| s.contains(&class))
    }

    pub fn count(&self, q: usize) -> usize {
        self.classes.get(q).map_or(0, |s| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.classes.iter().all(|s| s.is_empty())
    }

    pub fn union(&self, other: &Subcomplex) -> Subcomplex {
        let n = self.classes.len().max(other.classes.len());
        Subcomplex {
            classes: (0..n)
                .map(|q| {
                    let mut s = self.classes.get(q).cloned().unwrap_or_default();
                    s.extend(other.classes.get(q).into_iter().flatten().copied());
                    s
                })
                .collect(),
        }
    }

    pub fn intersection(&self, other: &Subcomplex) -> Subcomplex {
        let n = self.classes.len().min(other.classes.len());
        Subcomplex {
            classes: (0..n).map(|q| self.classes[q].intersection(&other.classes[q]).copied().collect()).collect(),
        }
    }
}

/// A finite cubical complex in `ℤⁿ` with face identifications.
#[derive(Clone, Debug)]
pub struct Model {
    n: usize,
    cells: Vec<Cube>,
    index: HashMap<Cube, usize>,
    labels: BTreeMap<String, usize>,
    listed: Vec<usize>,
    identifications: Vec<Identification>,
    root: Vec<usize>,
    to_root: Vec<LocalMap>,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    members: HashMap<usize, Vec<usize>>,
}

struct UnionFind {
    parent: Vec<usize>,
    to_parent: Vec<LocalMap>,
}

impl UnionFind {
    fn find(&self, c: usize) -> (usize, LocalMap) {
        let mut map = LocalMap::identity(self.to_parent[c].dim());
        let mut x = c;
        while self.parent[x] != x {
            map = map.then(&self.to_parent[x]);
            x = self.parent[x];
        }
        (x, map)
    }

    fn union(&mut self, a: usize, b: usize, l: &LocalMap, cells: &[Cube]) -> Result<()> {
        let (ra, ta) = self.find(a);
        let (rb, tb) = self.find(b);
        let m = ta.inverse().then(l).then(&tb);
        if ra == rb {
            if m.sign() < 0 {
                return Err(Error::Model(format!(
                    "identifications glue cell {} to itself with reversed orientation",
                    cells[ra]
                )));
            }
            return Ok(());
        }
        if ra < rb {
            self.parent[rb] = ra;
            self.to_parent[rb] = m.inverse();
        } else {
            self.parent[ra] = rb;
            self.to_parent[ra] = m;
        }
        Ok(())
    }
}

impl Model {
    /// Build from listed cubes (with optional labels) and identifications.
    pub fn new(
        n: usize,
        listed: Vec<(Option<String>, Cube)>,
        identifications: Vec<Identification>,
    ) -> Result<Model> {
        let mut all = BTreeSet::new();
        for (_, c) in &listed {
            if c.ambient() != n {
                return Err(Error::Model(format!("cell {c} is not in dimension {n}")));
            }
            all.extend(c.faces());
        }
        let mut cells: Vec<Cube> = all.into_iter().collect();
        cells.sort_by(|a, b| (a.dim(), a).cmp(&(b.dim(), b)));
        let index: HashMap<Cube, usize> = cells.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        let mut labels = BTreeMap::new();
        let mut listed_idx = Vec::new();
        for (label, c) in &listed {
            let i = index[c];
            listed_idx.push(i);
            if let Some(l) = label {
                if labels.insert(l.clone(), i).is_some() {
                    return Err(Error::Model(format!("label {l} used twice")));
                }
            }
        }
        let mut model = Model {
            n,
            cells,
            index,
            labels,
            listed: listed_idx,
            identifications: Vec::new(),
            root: Vec::new(),
            to_root: Vec::new(),
            classes: Vec::new(),
            class_of: Vec::new(),
            members: HashMap::new(),
        };
        let mut uf = UnionFind {
            parent: (0..model.cells.len()).collect(),
            to_parent: model.cells.iter().map(|c| LocalMap::identity(c.dim())).collect(),
        };
        for idf in &identifications {
            model.apply_identification(idf, &mut uf)?;
        }
        model.identifications = identifications;
        model.finish(&uf);
        Ok(model)
    }

    fn apply_identification(&self, idf: &Identification, uf: &mut UnionFind) -> Result<()> {
        let a = self.resolve(&idf.from)?;
        let b = self.resolve(&idf.to)?;
        if idf.matrix.len() != self.n || idf.matrix.iter().any(|r| r.len() != self.n) || idf.offset.len() != self.n {
            return Err(Error::Model(format!(
                "identify {} -> {}: matrix and offset must have size {}",
                idf.from, idf.to, self.n
            )));
        }
        if idf.matrix.iter().flatten().any(|v| v.abs() > 1) {
            return Err(Error::Model("identification matrices have entries in {-1,0,1}".into()));
        }
        let image = |v: &[i64]| -> Vec<i64> {
            (0..self.n).map(|i| (0..self.n).map(|j| idf.matrix[i][j] * v[j]).sum::<i64>() + idf.offset[i]).collect()
        };
        let ca = self.cells[a].clone();
        if ca.dim() != self.cells[b].dim() {
            return Err(Error::Model(format!("identify {} -> {}: dimensions differ", idf.from, idf.to)));
        }
        for face in ca.faces() {
            let verts: Vec<Vec<i64>> = face.vertices().iter().map(|v| image(v)).collect();
            let lo: Vec<i64> = (0..self.n).map(|i| verts.iter().map(|v| v[i]).min().unwrap()).collect();
            let hi: Vec<i64> = (0..self.n).map(|i| verts.iter().map(|v| v[i]).max().unwrap()).collect();
            let target = Cube::from_bounds(&lo, &hi)
                .filter(|t| t.dim() == face.dim())
                .and_then(|t| self.index.get(&t).copied())
                .ok_or_else(|| {
                    Error::Model(format!(
                        "identify {} -> {}: face {face} does not map onto a cell",
                        idf.from, idf.to
                    ))
                })?;
            if face == ca && target != b {
                return Err(Error::Model(format!(
                    "identify {} -> {}: the map sends {} onto {}",
                    idf.from, idf.to, ca, self.cells[target]
                )));
            }
            let t = &self.cells[target];
            let mut src = vec![0; face.dim()];
            let mut flip = vec![false; face.dim()];
            let taxes = t.free_axes();
            for (j, &f) in face.free_axes().iter().enumerate() {
                let col: Vec<i64> = (0..self.n).map(|i| idf.matrix[i][f]).collect();
                let hit: Vec<usize> = (0..self.n).filter(|&i| col[i] != 0).collect();
                let k = match hit.as_slice() {
                    [i] => taxes.iter().position(|a| a == i),
                    _ => None,
                }
                .ok_or_else(|| {
                    Error::Model(format!("identify {} -> {}: not a lattice map on {face}", idf.from, idf.to))
                })?;
                src[k] = j;
                flip[k] = col[hit[0]] < 0;
            }
            let fi = self.index[&face];
            uf.union(fi, target, &LocalMap { src, flip }, &self.cells)?;
        }
        Ok(())
    }

    fn finish(&mut self, uf: &UnionFind) {
        let m = self.cells.len();
        self.root = vec![0; m];
        self.to_root = Vec::with_capacity(m);
        for c in 0..m {
            let (r, t) = uf.find(c);
            self.root[c] = r;
            self.to_root.push(t);
        }
        let top = self.cells.iter().map(|c| c.dim()).max().map_or(0, |d| d + 1);
        self.classes = vec![Vec::new(); top];
        self.class_of = vec![0; m];
        for c in 0..m {
            if self.root[c] == c {
                let q = self.cells[c].dim();
                self.class_of[c] = self.classes[q].len();
                self.classes[q].push(c);
            }
        }
        for c in 0..m {
            self.class_of[c] = self.class_of[self.root[c]];
            self.members.entry(self.root[c]).or_default().push(c);
        }
    }

    /// Parse a model file: lattice cube lines (optionally `label = ...`) and
    /// `identify <id> -> <id> via [[..],..]; (o1,..)` lines.
    pub fn parse(text: &str) -> Result<Model> {
        let mut listed = Vec::new();
        let mut idfs = Vec::new();
        let mut n = None;
        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("identify ") {
                idfs.push(parse_identify(rest).map_err(|m| Error::parse(line_no, m))?);
                continue;
            }
            let (label, body) = match line.split_once('=') {
                Some((l, b)) => {
                    let l = l.trim();
                    if l.is_empty() || l.contains(char::is_whitespace) || l.contains('[') {
                        return Err(Error::parse(line_no, format!("bad cell label '{l}'")));
                    }
                    (Some(l.to_string()), b.trim())
                }
                None => (None, line),
            };
            let cube = parse_cube(body).map_err(|m| Error::parse(line_no, m))?;
            match n {
                None => n = Some(cube.ambient()),
                Some(d) if d != cube.ambient() => {
                    return Err(Error::parse(line_no, format!("expected {d} intervals, found {}", cube.ambient())))
                }
                _ => {}
            }
            listed.push((label, cube));
        }
        let n = n.ok_or_else(|| Error::parse(0, "model lists no cells"))?;
        Model::new(n, listed, idfs)
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.classes.len().saturating_sub(1)
    }

    pub fn cells(&self) -> &[Cube] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &Cube {
        &self.cells[i]
    }

    pub fn cell_index(&self, c: &Cube) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn listed(&self) -> &[usize] {
        &self.listed
    }

    pub fn identifications(&self) -> &[Identification] {
        &self.identifications
    }

    /// Name used for a cell in files: its label if it has one.
    pub fn name(&self, i: usize) -> String {
        self.labels.iter().find(|(_, &v)| v == i).map_or_else(|| self.cells[i].id(), |(k, _)| k.clone())
    }

    /// Look up a cell by label or canonical id (whitespace ignored).
    pub fn resolve(&self, id: &str) -> Result<usize> {
        let key: String = id.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some(&i) = self.labels.get(&key) {
            return Ok(i);
        }
        if let Ok(c) = parse_cube(&key) {
            if let Some(&i) = self.index.get(&c) {
                return Ok(i);
            }
        }
        Err(Error::Model(format!("no cell named {id}")))
    }

    pub fn root(&self, c: usize) -> usize {
        self.root[c]
    }

    /// Local coordinates of `c` → local coordinates of its class representative.
    pub fn to_root(&self, c: usize) -> &LocalMap {
        &self.to_root[c]
    }

    pub fn class_of(&self, c: usize) -> usize {
        self.class_of[c]
    }

    /// Representative cells of the classes of dimension `q`.
    pub fn classes(&self, q: usize) -> &[usize] {
        self.classes.get(q).map_or(&[], |v| v.as_slice())
    }

    pub fn members(&self, c: usize) -> &[usize] {
        &self.members[&self.root[c]]
    }

    /// Cells that are not proper faces of other cells.
    pub fn maximal_cells(&self) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&i| {
                !self.cells.iter().any(|o| o.dim() > self.cells[i].dim() && self.cells[i].is_face_of(o))
            })
            .collect()
    }

    /// The oriented cellular boundary `C_q → C_{q−1}`, taken as
    /// `∂σ = Σᵢ (−1)ⁱ ([∂ᵢ¹σ] − [∂ᵢ⁰σ])` over the free axes of the representative.
    pub fn boundary(&self, q: usize) -> Matrix {
        let cols = self.classes(q).len();
        if q == 0 {
            return Matrix::zeros(0, cols);
        }
        let mut m = Matrix::zeros(self.classes(q - 1).len(), cols);
        for (j, &s) in self.classes(q).iter().enumerate() {
            let cube = &self.cells[s];
            for k in 0..q {
                let sgn = if (k + 1) % 2 == 0 { 1 } else { -1 };
                for (eps, e) in [(1u8, 1i64), (0u8, -1i64)] {
                    let f = self.index[&cube.facet(k, eps)];
                    let row = self.class_of[f];
                    let v = m.get(row, j) + qi(sgn * e * self.to_root[f].sign());
                    m.set(row, j, v);
                }
            }
        }
        m
    }

    /// The subcomplex generated by some cells: all their faces and
    /// everything identified with those.
    pub fn closure(&self, cells: &[usize]) -> Subcomplex {
        let mut classes = vec![BTreeSet::new(); self.classes.len()];
        for &c in cells {
            for f in self.cells[c].faces() {
                let i = self.index[&f];
                classes[f.dim()].insert(self.class_of[i]);
            }
        }
        Subcomplex { classes }
    }

    pub fn full(&self) -> Subcomplex {
        Subcomplex { classes: self.classes.iter().map(|v| (0..v.len()).collect()).collect() }
    }

    /// Every cell whose class lies in the subcomplex.
    pub fn carrier(&self, sub: &Subcomplex) -> Vec<usize> {
        (0..self.cells.len()).filter(|&c| sub.contains(self.cells[c].dim(), self.class_of[c])).collect()
    }

    /// The smallest cell containing `y` and the local coordinates there.
    pub fn locate(&self, y: &[Q]) -> Option<(usize, Vec<Q>)> {
        if y.len() != self.n {
            return None;
        }
        let mut lo = Vec::with_capacity(self.n);
        let mut free = Vec::with_capacity(self.n);
        for v in y {
            let f = v.floor();
            lo.push(i64::try_from(f.to_integer()).ok()?);
            free.push(&f != v);
        }
        let c = Cube { lo, free };
        let i = *self.index.get(&c)?;
        let u = c.local_q(y);
        Some((i, u))
    }

    /// Canonical form of a point of the quotient: representative cell of the
    /// smallest containing cell and the transported local coordinates.
    pub fn canonical_point(&self, y: &[Q]) -> Option<(usize, Vec<Q>)> {
        let (c, u) = self.locate(y)?;
        Some((self.root[c], self.to_root[c].apply_q(&u)))
    }

    /// All ambient representatives of a point of the carrier.
    pub fn representatives(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![y.to_vec()];
        for (c, cube) in self.cells.iter().enumerate() {
            if self.members(c).len() < 2 || !cube.contains_f64(y, 1e-12) {
                continue;
            }
            let w = self.to_root[c].apply_f64(&cube.local_f64(y));
            for &o in self.members(c) {
                if o == c {
                    continue;
                }
                let u = self.to_root[o].inverse().apply_f64(&w);
                let p = self.cells[o].point_f64(&u);
                if !out.iter().any(|r| r.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-12)) {
                    out.push(p);
                }
            }
        }
        out
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn parse_int(s: &str) -> std::result::Result<i64, String> {
    s.trim().parse::<i64>().map_err(|_| format!("expected an integer, found '{}'", s.trim()))
}

/// `[a1,b1] x [a2,b2] x ...` with `b − a ∈ {0, 1}`.
pub fn parse_cube(s: &str) -> std::result::Result<Cube, String> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    for part in compact.split('x') {
        let inner = part
            .strip_prefix('[')
            .and_then(|p| p.strip_suffix(']'))
            .ok_or_else(|| format!("expected an interval [a,b], found '{part}'"))?;
        let (a, b) = inner.split_once(',').ok_or_else(|| format!("expected [a,b], found '{part}'"))?;
        let (a, b) = (parse_int(a)?, parse_int(b)?);
        if b - a != 0 && b - a != 1 {
            return Err(format!("interval [{a},{b}] must have length 0 or 1"));
        }
        lo.push(a);
        hi.push(b);
    }
    Ok(Cube::from_bounds(&lo, &hi).expect("validated lengths"))
}

/// Split at top-level occurrences of `sep`, ignoring those inside brackets.
pub fn split_top(s: &str, sep: char) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        if c == sep && depth == 0 {
            out.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    out.push(cur);
    out
}

pub(crate) fn strip_brackets(s: &str) -> Option<&str> {
    let s = s.trim();
    s.strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .or_else(|| s.strip_prefix('[').and_then(|r| r.strip_suffix(']')))
}

/// A rational literal such as `-3/4`.
pub fn parse_rational(s: &str) -> std::result::Result<Q, String> {
    poly::parse(s, 0)?.as_constant().ok_or_else(|| format!("'{s}' is not a constant"))
}

/// `(q1, ..., qn)`.
pub fn parse_point(s: &str) -> std::result::Result<Vec<Q>, String> {
    let inner = strip_brackets(s).ok_or_else(|| format!("expected a point (..), found '{}'", s.trim()))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    split_top(inner, ',').iter().map(|c| parse_rational(c)).collect()
}

fn parse_identify(rest: &str) -> std::result::Result<Identification, String> {
    let (ids, tail) = rest.split_once(" via ").ok_or("expected 'identify A -> B via [matrix]; offset'")?;
    let (from, to) = ids.split_once("->").ok_or("expected '->' between cell ids")?;
    let (mat, off) = tail.split_once(';').ok_or("expected ';' before the offset")?;
    let inner = strip_brackets(mat).ok_or("matrix must be written [[..],[..]]")?;
    let matrix = split_top(inner, ',')
        .iter()
        .map(|row| {
            let r = strip_brackets(row).ok_or_else(|| format!("bad matrix row '{}'", row.trim()))?;
            split_top(r, ',').iter().map(|v| parse_int(v)).collect::<std::result::Result<Vec<_>, _>>()
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let off_inner = strip_brackets(off).ok_or("offset must be written (o1,..)")?;
    let offset = split_top(off_inner, ',').iter().map(|v| parse_int(v)).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Identification {
        from: from.trim().to_string(),
        to: to.trim().to_string(),
        matrix,
        offset,
    })
}

/// One piece of a cover set.
#[derive(Clone, Debug)]
pub enum CoverPart {
    /// Open neighbourhood of the subcomplex generated by these cells.
    Cells { cells: Vec<usize>, carrier: Vec<Cube> },
    /// Open Euclidean ball, measured between ambient representatives.
    Ball { center: Vec<Q>, radius: Q },
}

#[derive(Clone, Debug)]
pub struct CoverSet {
    pub name: String,
    pub parts: Vec<CoverPart>,
}

impl CoverSet {
    /// Signed margin: positive exactly on the set, 1-Lipschitz.
    pub fn margin(&self, model: &Model, y: &[f64]) -> f64 {
        let delta = q_to_f64(&neighbourhood());
        let mut best = f64::NEG_INFINITY;
        let mut reps: Option<Vec<Vec<f64>>> = None;
        for part in &self.parts {
            let m = match part {
                CoverPart::Cells { carrier, .. } => {
                    let d2 = carrier.iter().map(|c| c.sq_dist_f64(y)).fold(f64::INFINITY, f64::min);
                    delta - d2.sqrt()
                }
                CoverPart::Ball { center, radius } => {
                    let reps = reps.get_or_insert_with(|| model.representatives(y));
                    let c: Vec<f64> = center.iter().map(q_to_f64).collect();
                    let d = reps
                        .iter()
                        .map(|r| r.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                        .fold(f64::INFINITY, f64::min);
                    q_to_f64(radius) - d
                }
            };
            best = best.max(m);
        }
        best
    }

    /// Sufficient exact test that the convex hull of `pts` lies in the set:
    /// every point inside one ball, or within the neighbourhood radius of one
    /// carrier cube.
    pub fn contains_hull(&self, pts: &[Vec<Q>]) -> bool {
        let d2 = neighbourhood() * neighbourhood();
        self.parts.iter().any(|part| match part {
            CoverPart::Ball { center, radius } => {
                let r2 = radius * radius;
                pts.iter().all(|p| {
                    let s = p.iter().zip(center).fold(Q::zero(), |s, (a, b)| s + (a - b) * (a - b));
                    s < r2
                })
            }
            CoverPart::Cells { carrier, .. } => {
                carrier.iter().any(|c| pts.iter().all(|p| c.sq_dist_q(p) < d2))
            }
        })
    }

    /// Cells of the model realising this set as a subcomplex: for cell parts
    /// the generated subcomplex, for balls every cell with a representative
    /// strictly inside.
    pub fn subcomplex(&self, model: &Model) -> Subcomplex {
        let mut gens = Vec::new();
        for part in &self.parts {
            match part {
                CoverPart::Cells { cells, .. } => gens.extend(cells.iter().copied()),
                CoverPart::Ball { center, radius } => {
                    let r2 = radius * radius;
                    for (i, c) in model.cells().iter().enumerate() {
                        let inside = c.vertices().iter().all(|v| {
                            v.iter().zip(center).fold(Q::zero(), |s, (a, b)| {
                                let d = qi(*a) - b;
                                s + &d * &d
                            }) < r2
                        });
                        if inside {
                            gens.push(i);
                        }
                    }
                }
            }
        }
        model.closure(&gens)
    }
}

/// A named family of open sets; two-set operations use `A` and `B`.
#[derive(Clone, Debug)]
pub struct Cover {
    pub sets: Vec<CoverSet>,
}

impl Cover {
    /// Lines `cover <name> = cells(<id>, ...) | ball((c1,..), r)`; repeated
    /// names accumulate.
    pub fn parse(text: &str, model: &Model) -> Result<Cover> {
        let mut sets: Vec<CoverSet> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let rest = line
                .strip_prefix("cover ")
                .ok_or_else(|| Error::parse(line_no, "expected 'cover <name> = ...'"))?;
            let (name, body) = rest.split_once('=').ok_or_else(|| Error::parse(line_no, "missing '='"))?;
            let name = name.trim().to_string();
            let mut parts = Vec::new();
            for piece in split_top(body, '|') {
                let piece = piece.trim();
                if let Some(args) = piece.strip_prefix("cells") {
                    let inner = strip_brackets(args)
                        .ok_or_else(|| Error::parse(line_no, "expected cells(<id>, ...)"))?;
                    let cells = split_top(inner, ',')
                        .iter()
                        .map(|id| model.resolve(id))
                        .collect::<Result<Vec<_>>>()?;
                    let carrier = model.carrier(&model.closure(&cells)).into_iter().map(|i| model.cell(i).clone()).collect();
                    parts.push(CoverPart::Cells { cells, carrier });
                } else if let Some(args) = piece.strip_prefix("ball") {
                    let inner = strip_brackets(args)
                        .ok_or_else(|| Error::parse(line_no, "expected ball((c1,..), r)"))?;
                    let fields = split_top(inner, ',');
                    if fields.len() != 2 {
                        return Err(Error::parse(line_no, "expected ball((c1,..), r)"));
                    }
                    let center = parse_point(&fields[0]).map_err(|m| Error::parse(line_no, m))?;
                    let radius = parse_rational(&fields[1]).map_err(|m| Error::parse(line_no, m))?;
                    if center.len() != model.ambient() {
                        return Err(Error::parse(line_no, format!("ball center needs {} coordinates", model.ambient())));
                    }
                    if !radius.is_positive() {
                        return Err(Error::parse(line_no, "ball radius must be positive"));
                    }
                    parts.push(CoverPart::Ball { center, radius });
                } else {
                    return Err(Error::parse(line_no, format!("unknown cover part '{piece}'")));
                }
            }
            match sets.iter_mut().find(|s| s.name == name) {
                Some(s) => s.parts.extend(parts),
                None => sets.push(CoverSet { name, parts }),
            }
        }
        Ok(Cover { sets })
    }

    pub fn get(&self, name: &str) -> Option<&CoverSet> {
        self.sets.iter().find(|s| s.name == name)
    }

    /// The sets named `A` and `B`.
    pub fn pair(&self) -> Result<(&CoverSet, &CoverSet)> {
        match (self.get("A"), self.get("B")) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::UnsupportedCover("the cover must define sets A and B".into())),
        }
    }
}

/// A cellwise form: one polynomial form per cell in that cell's local
/// coordinates. Cells without an entry carry the zero form.
#[derive(Clone, Debug, PartialEq)]
pub struct CellForm {
    pub name: String,
    pub degree: usize,
    pub cells: BTreeMap<usize, PolyForm>,
}

impl CellForm {
    pub fn zero(name: &str, degree: usize) -> Self {
        CellForm { name: name.to_string(), degree, cells: BTreeMap::new() }
    }

    /// The form on cell `c`: its own entry, else the restriction from a cell
    /// having `c` as a face, else zero.
    pub fn on_cell(&self, model: &Model, c: usize) -> PolyForm {
        let cube = model.cell(c);
        if let Some(f) = self.cells.get(&c) {
            return f.clone();
        }
        for (&o, f) in &self.cells {
            let oc = model.cell(o);
            if cube.is_face_of(oc) {
                return restrict_to_face(f, oc, cube);
            }
        }
        PolyForm::zero(cube.dim(), self.degree)
    }
}

/// Restrict a form given in the local coordinates of `big` to its face `small`.
pub fn restrict_to_face(f: &PolyForm, big: &Cube, small: &Cube) -> PolyForm {
    let inc = face_inclusion(big, small);
    inc.pullback(f).expect("face inclusion matches the form")
}

/// Local coordinates of `small` → local coordinates of `big`.
pub fn face_inclusion(big: &Cube, small: &Cube) -> PolyMap {
    let q = small.dim();
    let saxes = small.free_axes();
    let comps = big
        .free_axes()
        .iter()
        .map(|&a| match saxes.iter().position(|&s| s == a) {
            Some(k) => Polynomial::var(q, k + 1),
            None => Polynomial::constant(q, qi(small.lo()[a] - big.lo()[a])),
        })
        .collect();
    PolyMap::new(q, comps).expect("face inclusion")
}

/// Parse a form file: `on <cell> : dx1^dx2 : <poly>` lines, grouped into
/// named forms by optional `form <name>` headers.
pub fn parse_forms(text: &str, model: &Model) -> Result<Vec<CellForm>> {
    let mut out: Vec<CellForm> = Vec::new();
    let mut current: Option<CellForm> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix("form ") {
            if let Some(f) = current.take() {
                out.push(f);
            }
            current = Some(CellForm { name: name.trim().to_string(), degree: usize::MAX, cells: BTreeMap::new() });
            continue;
        }
        let rest = line.strip_prefix("on ").ok_or_else(|| Error::parse(line_no, "expected 'on <cell> : <dx> : <poly>'"))?;
        let fields: Vec<&str> = rest.split(':').collect();
        if fields.len() != 3 {
            return Err(Error::parse(line_no, "expected 'on <cell> : <dx> : <poly>'"));
        }
        let c = model.resolve(fields[0])?;
        let q = model.cell(c).dim();
        let idx = parse_dx(fields[1].trim(), q).map_err(|m| Error::parse(line_no, m))?;
        let coeff = poly::parse(fields[2].trim(), q).map_err(|m| Error::parse(line_no, m))?;
        let form = current.get_or_insert_with(|| CellForm {
            name: format!("form{}", out.len() + 1),
            degree: usize::MAX,
            cells: BTreeMap::new(),
        });
        if form.degree == usize::MAX {
            form.degree = idx.degree();
        } else if form.degree != idx.degree() {
            return Err(Error::Form(format!(
                "line {line_no}: form {} mixes degrees {} and {}",
                form.name,
                form.degree,
                idx.degree()
            )));
        }
        let term = PolyForm::term(idx, coeff);
        let entry = form.cells.entry(c).or_insert_with(|| PolyForm::zero(q, term.degree()));
        *entry = entry.add(&term)?;
    }
    if let Some(f) = current.take() {
        out.push(f);
    }
    for f in &mut out {
        if f.degree == usize::MAX {
            f.degree = 0;
        }
    }
    Ok(out)
}

/// `dx1^dx3`, or `1` for degree 0.
pub fn parse_dx(s: &str, q: usize) -> std::result::Result<MultiIndex, String> {
    if s == "1" {
        return Ok(MultiIndex::unit(q));
    }
    let mut idx = Vec::new();
    for part in s.split('^') {
        let k = part
            .trim()
            .strip_prefix("dx")
            .and_then(|k| k.parse::<usize>().ok())
            .ok_or_else(|| format!("expected dx<i>, found '{}'", part.trim()))?;
        idx.push(k);
    }
    let mut sorted = idx.clone();
    sorted.sort_unstable();
    if sorted != idx {
        return Err(format!("dx indices in '{s}' must increase"));
    }
    MultiIndex::new(q, idx).map_err(|e| e.to_string())
}

/// Serialize a cellwise form in the form-file syntax.
pub fn format_form(model: &Model, f: &CellForm) -> String {
    let mut s = format!("form {}\n", f.name);
    for (&c, w) in &f.cells {
        let q = w.n();
        let names = poly::x_names(q);
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        for (idx, a) in w.coeffs() {
            s.push_str(&format!("on {} : {} : {}\n", model.name(c), idx, a.display_with(&refs)));
        }
    }
    s
}

/// Parse a plot file: `plot <m> : (p1, ..., pn)` with components in `x1..xm`.
pub fn parse_plots(text: &str, n: usize) -> Result<Vec<PolyMap>> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let rest = line.strip_prefix("plot ").ok_or_else(|| Error::parse(line_no, "expected 'plot <m> : (...)'"))?;
        let (m, comps) = rest.split_once(':').ok_or_else(|| Error::parse(line_no, "missing ':'"))?;
        let m: usize = m.trim().parse().map_err(|_| Error::parse(line_no, "plot dimension must be a number"))?;
        let inner = strip_brackets(comps).ok_or_else(|| Error::parse(line_no, "components must be in parentheses"))?;
        let polys = split_top(inner, ',')
            .iter()
            .map(|c| poly::parse(c.trim(), m).map_err(|e| Error::parse(line_no, e)))
            .collect::<Result<Vec<_>>>()?;
        if polys.len() != n {
            return Err(Error::parse(line_no, format!("plot has {} components, the model lives in dimension {n}", polys.len())));
        }
        out.push(PolyMap::new(m, polys)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;

    const CIRCLE: &str = "[0,1]\n[1,2]\nidentify [2,2] -> [0,0] via [[1]]; (-2)\n";

    #[test]
    fn cube_faces_and_ids() {
        let c = parse_cube("[0,1] x [2,2] x [0,1]").unwrap();
        assert_eq!(c.dim(), 2);
        assert_eq!(c.id(), "[0,1]x[2,2]x[0,1]");
        assert_eq!(c.faces().len(), 9);
        assert_eq!(c.facet(1, 1).id(), "[0,1]x[2,2]x[1,1]");
        assert!(parse_cube("[0,2]").is_err());
    }

    #[test]
    fn local_map_algebra() {
        let m = LocalMap { src: vec![1, 0], flip: vec![true, false] };
        assert_eq!(m.sign(), 1);
        assert!(m.then(&m.inverse()).is_identity());
        let x = vec![q(1, 4), q(1, 3)];
        assert_eq!(m.inverse().apply_q(&m.apply_q(&x)), x);
        assert_eq!(LocalMap { src: vec![0], flip: vec![true] }.sign(), -1);
    }

    #[test]
    fn circle_classes() {
        let m = Model::parse(CIRCLE).unwrap();
        assert_eq!(m.classes(0).len(), 2);
        assert_eq!(m.classes(1).len(), 2);
        assert!(m.boundary(1).mul(&Matrix::zeros(2, 0)).is_zero());
        let two = m.canonical_point(&[q(2, 1)]).unwrap();
        let zero = m.canonical_point(&[q(0, 1)]).unwrap();
        assert_eq!(two, zero);
    }

    #[test]
    fn orientation_conflict_is_reported() {
        let text = "[0,1]\nidentify [0,1] -> [0,1] via [[-1]]; (1)\n";
        assert!(matches!(Model::parse(text), Err(Error::Model(_))));
    }

    #[test]
    fn bad_identification_target() {
        let text = "[0,1]x[0,1]\nidentify [0,1]x[0,0] -> [0,0]x[0,1] via [[1,0],[0,1]]; (0,0)\n";
        assert!(matches!(Model::parse(text), Err(Error::Model(_))));
    }

    #[test]
    fn parse_errors_carry_lines() {
        match Model::parse("[0,1]\n[0,2]\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn forms_and_plots() {
        let m = Model::parse(CIRCLE).unwrap();
        let fs = parse_forms("form g\non [0,1] : dx1 : 1\non [1,2] : dx1 : 1\n", &m).unwrap();
        assert_eq!(fs.len(), 1);
        assert_eq!(fs[0].degree, 1);
        assert_eq!(fs[0].cells.len(), 2);
        let plots = parse_plots("plot 1 : (2*x1)\n", 1).unwrap();
        assert_eq!(plots[0].eval(&[q(1, 2)]).unwrap(), vec![q(1, 1)]);
        assert!(parse_plots("plot 1 : (x1, x1)\n", 1).is_err());
    }

    #[test]
    fn cover_margins() {
        let m = Model::parse(CIRCLE).unwrap();
        let c = Cover::parse("cover A = cells([0,1])\ncover B = ball((3/2), 3/4)\n", &m).unwrap();
        let (a, b) = c.pair().unwrap();
        assert!(a.margin(&m, &[0.5]) > 0.0);
        assert!(a.margin(&m, &[1.9]) > 0.0);
        assert!(a.margin(&m, &[1.5]) < 0.0);
        assert!(b.margin(&m, &[1.5]) > 0.0);
        assert!(b.margin(&m, &[0.5]) < 0.0);
        assert!(a.contains_hull(&[vec![q(0, 1)], vec![q(1, 1)]]));
    }
}

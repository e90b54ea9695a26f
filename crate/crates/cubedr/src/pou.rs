//! Smooth stabilizer, ramps and partitions of unity on cube plots.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use num_traits::Zero;

use crate::cubicalset::{grid_points, lipschitz_bound};
use crate::exterior::MultiIndex;
use crate::model::{CellForm, Cover, CoverSet, Model};
use crate::poly::{FPoly, Polynomial};
use crate::polyform::PolyMap;
use crate::rng::Rng;
use crate::{q_to_f64, Error, Result, Q};

/// `λ̂(t) = h(t)/(h(t)+h(1−t))`, `h(t) = e^{−1/t}` for `t > 0`.
pub fn stabilizer(t: f64) -> f64 {
    stabilizer_jet(t).0
}

#[derive(Clone, Copy)]
struct Jet(f64, f64, f64);

impl Jet {
    fn h(t: f64) -> Jet {
        if t <= 0.0 {
            return Jet(0.0, 0.0, 0.0);
        }
        let v = (-1.0 / t).exp();
        let i = 1.0 / t;
        Jet(v, v * i * i, v * (i * i * i * i - 2.0 * i * i * i))
    }

    fn div(self, w: Jet) -> Jet {
        let q = self.0 / w.0;
        let dq = (self.1 - q * w.1) / w.0;
        let ddq = (self.2 - 2.0 * dq * w.1 - q * w.2) / w.0;
        Jet(q, dq, ddq)
    }
}

/// `λ̂` with its first two derivatives.
pub fn stabilizer_jet(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let a = Jet::h(t);
    let b = Jet::h(1.0 - t);
    let s = Jet(a.0 + b.0, a.1 - b.1, a.2 + b.2);
    let r = a.div(s);
    (r.0, r.1, r.2)
}

/// `λ_{a,b}(t) = λ̂((t−a−ε)/(b−a−2ε))` with `ε = (b−a)/4`.
pub fn lambda_ab(a: f64, b: f64, t: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::arg(format!("ramp needs a < b, got a = {a}, b = {b}")));
    }
    Ok(lambda_jet(a, b, t).0)
}

/// `λ_{a,b}` with its first two derivatives in `t`; assumes `a < b`.
pub fn lambda_jet(a: f64, b: f64, t: f64) -> (f64, f64, f64) {
    let eps = (b - a) / 4.0;
    let w = b - a - 2.0 * eps;
    let (v, d, dd) = stabilizer_jet((t - a - eps) / w);
    (v, d / w, dd / (w * w))
}

/// `ψ_∂(x) = λ_{1−a,1}(max_i max(x_i, 1−x_i))`: 1 on `∂□ⁿ`, 0 away from
/// the collar of width `a`.
pub fn psi_boundary(a: f64, x: &[f64]) -> Result<f64> {
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::arg(format!("collar width must lie in (0, 1/2), got {a}")));
    }
    Ok(lambda_jet(1.0 - a, 1.0, sup_to_boundary(x)).0)
}

fn sup_to_boundary(x: &[f64]) -> f64 {
    x.iter().map(|&v| v.max(1.0 - v)).fold(0.0, f64::max)
}

/// The function `ρ` on the model separating `A` from `B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseFunction {
    /// `λ̂(m_B⁺ / (m_A⁺ + m_B⁺))` from the signed margins of the sets.
    Urysohn,
    /// 0 on `A∖B`, 1 on `B∖A`, 1/2 on `A∩B`.
    ThreeValued,
}

const STABILIZER_SLOPE: f64 = 2.0;
const BASE_MARGIN: f64 = 1.0 / 12.0;

/// Partition of unity on one plot, built by induction on the dimension.
#[derive(Debug)]
pub enum PlotPou {
    /// A point plot: `ρ^B = λ_{1/3,2/3}(ρ(P))`.
    Point { image: Vec<f64> },
    /// A plot not depending on some variables: evaluate the reduced plot on
    /// the kept coordinates (0-based).
    Reduced { keep: Vec<usize>, inner: Rc<PlotPou> },
    /// Collar blend of the faces with the base function.
    Full { n: usize, a: f64, plot: Vec<FPoly>, faces: Vec<Rc<PlotPou>> },
}

impl PlotPou {
    pub fn dim(&self) -> usize {
        match self {
            PlotPou::Point { .. } => 0,
            PlotPou::Reduced { keep, .. } => keep.len(),
            PlotPou::Full { n, .. } => *n,
        }
    }

    /// Width `c` of the boundary strip on which the values are those of the
    /// nearest face.
    pub fn collar(&self) -> f64 {
        match self {
            PlotPou::Point { .. } => 0.25,
            PlotPou::Reduced { inner, .. } => inner.collar(),
            PlotPou::Full { a, .. } => a / 4.0,
        }
    }
}

/// Builds and evaluates partitions of unity subordinate to `{A, B}`.
pub struct PouBuilder<'a> {
    model: &'a Model,
    a: &'a CoverSet,
    b: &'a CoverSet,
    base: BaseFunction,
    grid: u32,
    memo: RefCell<HashMap<PolyMap, Rc<PlotPou>>>,
}

impl<'a> PouBuilder<'a> {
    /// `grid` is the sampling density used to bound `m_A + m_B` from below.
    pub fn new(model: &'a Model, cover: &'a Cover, base: BaseFunction, grid: u32) -> Result<Self> {
        let (a, b) = cover.pair()?;
        Ok(PouBuilder { model, a, b, base, grid: grid.max(1), memo: RefCell::new(HashMap::new()) })
    }

    pub fn margins(&self, y: &[f64]) -> (f64, f64) {
        (self.a.margin(self.model, y), self.b.margin(self.model, y))
    }

    /// `ρ(y) ∈ [0, 1]`: 0 on `A∖B`, 1 on `B∖A`.
    pub fn rho(&self, y: &[f64]) -> Result<f64> {
        let (ma, mb) = self.margins(y);
        let (ma, mb) = (ma.max(0.0), mb.max(0.0));
        if ma + mb == 0.0 {
            return Err(Error::Coverage(format!("{y:?} lies in neither A nor B")));
        }
        Ok(match self.base {
            BaseFunction::Urysohn => stabilizer((mb / (ma + mb)).clamp(0.0, 1.0)),
            BaseFunction::ThreeValued => {
                if mb == 0.0 {
                    0.0
                } else if ma == 0.0 {
                    1.0
                } else {
                    0.5
                }
            }
        })
    }

    fn base_pair(&self, y: &[f64]) -> Result<(f64, f64)> {
        let l = lambda_jet(1.0 / 3.0, 2.0 / 3.0, self.rho(y)?).0;
        Ok((1.0 - l, l))
    }

    pub fn get(&self, plot: &PolyMap) -> Result<Rc<PlotPou>> {
        if let Some(p) = self.memo.borrow().get(plot) {
            return Ok(p.clone());
        }
        let built = Rc::new(self.build(plot)?);
        self.memo.borrow_mut().insert(plot.clone(), built.clone());
        Ok(built)
    }

    fn build(&self, plot: &PolyMap) -> Result<PlotPou> {
        let n = plot.source_dim();
        if plot.target_dim() != self.model.ambient() {
            return Err(Error::arg("plot and model dimensions differ"));
        }
        let keep: Vec<usize> = (0..n).filter(|&i| plot.components().iter().any(|c| c.depends_on(i + 1))).collect();
        if keep.is_empty() {
            let image: Vec<f64> = plot.eval(&vec![Q::zero(); n])?.iter().map(q_to_f64).collect();
            self.rho(&image)?;
            let point = PlotPou::Point { image };
            return Ok(if n == 0 { point } else { PlotPou::Reduced { keep, inner: Rc::new(point) } });
        }
        if keep.len() < n {
            let m = keep.len();
            let subs: Vec<Polynomial> = (0..n)
                .map(|i| match keep.iter().position(|&k| k == i) {
                    Some(j) => Polynomial::var(m, j + 1),
                    None => Polynomial::zero(m),
                })
                .collect();
            let comps = plot.components().iter().map(|c| c.compose(&subs, m)).collect::<Result<Vec<_>>>()?;
            let inner = self.get(&PolyMap::new(m, comps)?)?;
            return Ok(PlotPou::Reduced { keep, inner });
        }
        let mut faces = Vec::with_capacity(2 * n);
        for i in 1..=n {
            for eps in 0..2 {
                faces.push(self.get(&face_plot(plot, i, eps))?);
            }
        }
        let mut a: f64 = 0.25;
        for f in &faces {
            if f.dim() > 0 {
                a = a.min(f.collar() / 2.0);
            }
        }
        let plot_f: Vec<FPoly> = plot.components().iter().map(|c| c.to_f64()).collect();
        if self.base == BaseFunction::Urysohn {
            let mut s_min = f64::INFINITY;
            for x in grid_points(n, self.grid) {
                let y: Vec<f64> = plot_f.iter().map(|c| c.eval(&x)).collect();
                let (ma, mb) = self.margins(&y);
                s_min = s_min.min(ma.max(0.0) + mb.max(0.0));
            }
            if s_min <= 0.0 {
                return Err(Error::Coverage("the plot leaves A ∪ B".into()));
            }
            let l_rho = STABILIZER_SLOPE / (s_min / 2.0);
            let l_p = lipschitz_bound(plot);
            let margin = BASE_MARGIN / f64::powi(2.0, n as i32 - 1);
            a = a.min(margin / (2.0 * l_rho * l_p));
        }
        Ok(PlotPou::Full { n, a, plot: plot_f, faces })
    }

    /// `(ρ^A, ρ^B)` of the plot's partition at `x ∈ □ⁿ`.
    pub fn eval(&self, pou: &PlotPou, x: &[f64]) -> Result<(f64, f64)> {
        match pou {
            PlotPou::Point { image } => self.base_pair(image),
            PlotPou::Reduced { keep, inner } => {
                let y: Vec<f64> = keep.iter().map(|&i| x[i]).collect();
                self.eval(inner, &y)
            }
            PlotPou::Full { n, a, plot, faces } => {
                let psi = lambda_jet(1.0 - a, 1.0, sup_to_boundary(x)).0;
                let mut out = (0.0, 0.0);
                if psi > 0.0 {
                    let (i, eps) = nearest_face(x);
                    let mut y = x.to_vec();
                    y.remove(i);
                    let (fa, fb) = self.eval(&faces[2 * i + eps], &y)?;
                    out = (psi * fa, psi * fb);
                }
                if psi < 1.0 {
                    let img: Vec<f64> = plot.iter().map(|c| c.eval(x)).collect();
                    let (ba, bb) = self.base_pair(&img)?;
                    out = (out.0 + (1.0 - psi) * ba, out.1 + (1.0 - psi) * bb);
                }
                debug_assert_eq!(*n, x.len());
                Ok(out)
            }
        }
    }

    pub fn eval_plot(&self, plot: &PolyMap, x: &[f64]) -> Result<(f64, f64)> {
        let p = self.get(plot)?;
        self.eval(&p, x)
    }
}

/// `(axis, ε)` of the face nearest to `x`, ties to the lower axis, then to
/// `ε = 0`; the axis is 0-based.
fn nearest_face(x: &[f64]) -> (usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for (i, &v) in x.iter().enumerate() {
        for (eps, d) in [(0, v), (1, 1.0 - v)] {
            if d < best.0 {
                best = (d, i, eps);
            }
        }
    }
    (best.1, best.2)
}

/// `P ∘ ∂ᵢ^ε`, `i` 1-based.
pub fn face_plot(plot: &PolyMap, i: usize, eps: usize) -> PolyMap {
    let comps = plot.components().iter().map(|c| c.restrict(i, &Q::from_integer((eps as i64).into()))).collect();
    PolyMap::new(plot.source_dim() - 1, comps).expect("face of a plot")
}

/// `P ∘ εᵢ`: the plot on one more coordinate, ignoring coordinate `i`.
pub fn degenerate_plot(plot: &PolyMap, i: usize) -> PolyMap {
    let m = plot.source_dim() + 1;
    let subs: Vec<Polynomial> = (1..=m).filter(|&j| j != i).map(|j| Polynomial::var(m, j)).collect();
    let comps = plot.components().iter().map(|c| c.compose(&subs, m).expect("degeneracy")).collect();
    PolyMap::new(m, comps).expect("degenerate plot")
}

fn insert(y: &[f64], i: usize, v: f64) -> Vec<f64> {
    let mut x = y.to_vec();
    x.insert(i, v);
    x
}

/// Worst deviations of a partition of unity over a plot family.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PouReport {
    pub plots: usize,
    pub points: usize,
    /// `max |ρ^A + ρ^B − 1|`.
    pub max_sum_error: f64,
    /// Points with `ρ^A > 0` but `ρ ≥ 2/3`, or `ρ^B > 0` but `ρ ≤ 1/3`.
    pub support_violations: usize,
    /// Compatibility with degeneracies, `ρ(P∘εᵢ) = ρ(P)∘εᵢ`.
    pub degeneracy_residual: f64,
    /// Compatibility with faces, `ρ(P∘∂ᵢ^ε) = ρ(P)∘∂ᵢ^ε`.
    pub face_residual: f64,
    /// Constancy across the collar, at depths `t ≤ c`.
    pub collar_residual: f64,
}

impl PouReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_sum_error < tol
            && self.support_violations == 0
            && self.degeneracy_residual < tol
            && self.face_residual < tol
            && self.collar_residual < tol
    }
}

/// Evaluate the conditions of the construction on the grid `(1/grid)ℤⁿ`
/// for every listed plot and all of its faces.
pub fn check_pou(builder: &PouBuilder, plots: &[PolyMap], grid: u32) -> Result<PouReport> {
    let mut family: Vec<PolyMap> = Vec::new();
    let mut stack: Vec<PolyMap> = plots.to_vec();
    while let Some(p) = stack.pop() {
        if family.contains(&p) {
            continue;
        }
        for i in 1..=p.source_dim() {
            for eps in 0..2 {
                stack.push(face_plot(&p, i, eps));
            }
        }
        family.push(p);
    }
    let mut r = PouReport { plots: family.len(), ..PouReport::default() };
    let diff = |u: (f64, f64), v: (f64, f64)| (u.0 - v.0).abs().max((u.1 - v.1).abs());
    for p in &family {
        let n = p.source_dim();
        let pou = builder.get(p)?;
        let plot_f: Vec<FPoly> = p.components().iter().map(|c| c.to_f64()).collect();
        for x in grid_points(n, grid) {
            let (ra, rb) = builder.eval(&pou, &x)?;
            r.points += 1;
            r.max_sum_error = r.max_sum_error.max((ra + rb - 1.0).abs());
            let y: Vec<f64> = plot_f.iter().map(|c| c.eval(&x)).collect();
            let rho = builder.rho(&y)?;
            if (ra > 0.0 && rho >= 2.0 / 3.0) || (rb > 0.0 && rho <= 1.0 / 3.0) {
                r.support_violations += 1;
            }
        }
        let c = pou.collar();
        for i in 0..n {
            for eps in 0..2 {
                let face = builder.get(&face_plot(p, i + 1, eps))?;
                for y in grid_points(n - 1, grid) {
                    let want = builder.eval(&face, &y)?;
                    let on = builder.eval(&pou, &insert(&y, i, eps as f64))?;
                    r.face_residual = r.face_residual.max(diff(on, want));
                    for k in 1..=4 {
                        let t = c * k as f64 / 4.0;
                        let v = if eps == 0 { t } else { 1.0 - t };
                        let inside = builder.eval(&pou, &insert(&y, i, v))?;
                        r.collar_residual = r.collar_residual.max(diff(inside, want));
                    }
                }
            }
        }
        // degeneracies: the extra coordinate on a coarser grid
        let extra = grid.min(8);
        for i in 0..=n {
            let deg = builder.get(&degenerate_plot(p, i + 1))?;
            for y in grid_points(n, grid) {
                let want = builder.eval(&pou, &y)?;
                for k in 0..=extra {
                    let z = insert(&y, i, k as f64 / extra as f64);
                    r.degeneracy_residual = r.degeneracy_residual.max(diff(builder.eval(&deg, &z)?, want));
                }
            }
        }
    }
    Ok(r)
}

/// Outcome of splitting a cellwise form along the partition of unity.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitReport {
    pub points: usize,
    /// `max |κ⁽¹⁾ − κ⁽²⁾ − κ|` over coefficients and points.
    pub reconstruction_error: f64,
    /// Points where `κ⁽¹⁾ ≠ 0` outside `B` or `κ⁽²⁾ ≠ 0` outside `A`.
    pub support_violations: usize,
}

/// `κ⁽¹⁾ = ρ^B·κ` and `κ⁽²⁾ = −ρ^A·κ` on the characteristic plot of a cell.
pub struct MvSplit<'a> {
    builder: &'a PouBuilder<'a>,
    model: &'a Model,
    kappa: &'a CellForm,
}

/// Coefficients of a form at a point, keyed by basis index.
pub type Coefficients = BTreeMap<MultiIndex, f64>;

impl<'a> MvSplit<'a> {
    pub fn new(builder: &'a PouBuilder<'a>, kappa: &'a CellForm) -> Self {
        MvSplit { builder, model: builder.model, kappa }
    }

    /// `(κ⁽¹⁾, κ⁽²⁾)` at local coordinates `u` of cell `c`.
    pub fn pieces(&self, c: usize, u: &[f64]) -> Result<(Coefficients, Coefficients)> {
        let plot = self.model.cell(c).char_map();
        let (ra, rb) = self.builder.eval_plot(&plot, u)?;
        let mut k1 = Coefficients::new();
        let mut k2 = Coefficients::new();
        for (idx, a) in self.kappa.on_cell(self.model, c).coeffs() {
            let v = a.to_f64().eval(u);
            k1.insert(idx.clone(), rb * v);
            k2.insert(idx.clone(), -ra * v);
        }
        Ok((k1, k2))
    }

    /// Reconstruction and support at `samples` points spread over the
    /// maximal cells.
    pub fn check(&self, samples: usize, rng: &mut Rng) -> Result<SplitReport> {
        let cells = self.model.maximal_cells();
        let mut r = SplitReport { points: 0, reconstruction_error: 0.0, support_violations: 0 };
        for s in 0..samples {
            let c = cells[s % cells.len()];
            let cube = self.model.cell(c);
            let u: Vec<f64> = (0..cube.dim()).map(|_| rng.unit()).collect();
            let (k1, k2) = self.pieces(c, &u)?;
            let y = cube.point_f64(&u);
            let (ma, mb) = self.builder.margins(&y);
            for (idx, a) in self.kappa.on_cell(self.model, c).coeffs() {
                let v = a.to_f64().eval(&u);
                let (p, q) = (k1[idx], k2[idx]);
                r.reconstruction_error = r.reconstruction_error.max((p - q - v).abs());
                if (p != 0.0 && mb <= 0.0) || (q != 0.0 && ma <= 0.0) {
                    r.support_violations += 1;
                }
            }
            r.points += 1;
        }
        Ok(r)
    }
}

//! The cube category: objects are dimensions, morphisms are words in the
//! boundary maps `∂ᵢ^ε : n → n+1` and degeneracies `εᵢ : n+1 → n`.
//!
//! `∂ᵢ^ε` inserts the constant ε as coordinate i, `εᵢ` deletes coordinate i.
//! A word is stored in application order, so `word[0]` acts first.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};

use crate::{q, Error, Result, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    Boundary { i: usize, eps: u8 },
    Degeneracy { i: usize },
}

/// Symbolic value of one output coordinate of a morphism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    Const(u8),
    /// Zero-based index of the source coordinate copied here.
    Var(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CubeMorphism {
    source_dim: usize,
    target_dim: usize,
    word: Vec<Generator>,
}

fn step_dim(dim: usize, g: Generator) -> Result<usize> {
    match g {
        Generator::Boundary { i, eps } => {
            if eps > 1 {
                return Err(Error::arg(format!("boundary sign {eps} is not 0 or 1")));
            }
            if i == 0 || i > dim + 1 {
                return Err(Error::arg(format!("boundary index {i} outside 1..={}", dim + 1)));
            }
            Ok(dim + 1)
        }
        Generator::Degeneracy { i } => {
            if dim == 0 || i == 0 || i > dim {
                return Err(Error::arg(format!(
                    "degeneracy index {i} invalid on a {dim}-cube"
                )));
            }
            Ok(dim - 1)
        }
    }
}

/// Insert `value` so that it becomes coordinate `i` (1-based).
pub fn insert_coord<T: Clone>(t: &[T], i: usize, value: T) -> Vec<T> {
    let mut out = Vec::with_capacity(t.len() + 1);
    out.extend_from_slice(&t[..i - 1]);
    out.push(value);
    out.extend_from_slice(&t[i - 1..]);
    out
}

/// Delete coordinate `i` (1-based).
pub fn delete_coord<T: Clone>(t: &[T], i: usize) -> Vec<T> {
    let mut out = t.to_vec();
    out.remove(i - 1);
    out
}

pub fn apply_boundary(n: usize, i: usize, eps: u8, t: &[Q]) -> Result<Vec<Q>> {
    if t.len() != n {
        return Err(Error::arg(format!("point has {} coordinates, expected {n}", t.len())));
    }
    step_dim(n, Generator::Boundary { i, eps })?;
    let value = if eps == 0 { Q::zero() } else { Q::one() };
    Ok(insert_coord(t, i, value))
}

pub fn apply_degeneracy(n: usize, i: usize, t: &[Q]) -> Result<Vec<Q>> {
    if t.len() != n + 1 {
        return Err(Error::arg(format!(
            "point has {} coordinates, expected {}",
            t.len(),
            n + 1
        )));
    }
    step_dim(n + 1, Generator::Degeneracy { i })?;
    Ok(delete_coord(t, i))
}

impl CubeMorphism {
    pub fn identity(n: usize) -> Self {
        CubeMorphism { source_dim: n, target_dim: n, word: Vec::new() }
    }

    pub fn from_word(source_dim: usize, word: Vec<Generator>) -> Result<Self> {
        let mut dim = source_dim;
        for &g in &word {
            dim = step_dim(dim, g)?;
        }
        Ok(CubeMorphism { source_dim, target_dim: dim, word })
    }

    /// `∂ᵢ^ε : n → n+1`.
    pub fn boundary(n: usize, i: usize, eps: u8) -> Result<Self> {
        Self::from_word(n, vec![Generator::Boundary { i, eps }])
    }

    /// `εᵢ : n+1 → n`.
    pub fn degeneracy(n: usize, i: usize) -> Result<Self> {
        Self::from_word(n + 1, vec![Generator::Degeneracy { i }])
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn word(&self) -> &[Generator] {
        &self.word
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &CubeMorphism) -> Result<Self> {
        if first.target_dim != self.source_dim {
            return Err(Error::arg(format!(
                "cannot compose {} -> {} after {} -> {}",
                self.source_dim, self.target_dim, first.source_dim, first.target_dim
            )));
        }
        let mut word = first.word.clone();
        word.extend_from_slice(&self.word);
        Ok(CubeMorphism { source_dim: first.source_dim, target_dim: self.target_dim, word })
    }

    pub fn apply<T: Clone>(&self, t: &[T], zero: &T, one: &T) -> Result<Vec<T>> {
        if t.len() != self.source_dim {
            return Err(Error::arg(format!(
                "point has {} coordinates, expected {}",
                t.len(),
                self.source_dim
            )));
        }
        let mut p = t.to_vec();
        for g in &self.word {
            p = match *g {
                Generator::Boundary { i, eps } => {
                    insert_coord(&p, i, if eps == 0 { zero.clone() } else { one.clone() })
                }
                Generator::Degeneracy { i } => delete_coord(&p, i),
            };
        }
        Ok(p)
    }

    pub fn apply_q(&self, t: &[Q]) -> Result<Vec<Q>> {
        self.apply(t, &Q::zero(), &Q::one())
    }

    /// Output coordinates expressed through the source coordinates.
    pub fn symbolic(&self) -> Vec<Coord> {
        let start: Vec<Coord> = (0..self.source_dim).map(Coord::Var).collect();
        self.apply(&start, &Coord::Const(0), &Coord::Const(1))
            .expect("word validated at construction")
    }

    /// Canonical word: delete unused coordinates from the top down, then
    /// insert constants at increasing positions.
    pub fn normal_form(&self) -> CubeMorphism {
        let sym = self.symbolic();
        let used: BTreeSet<usize> = sym
            .iter()
            .filter_map(|c| match c {
                Coord::Var(k) => Some(*k),
                Coord::Const(_) => None,
            })
            .collect();
        let mut word = Vec::new();
        for k in (1..=self.source_dim).rev() {
            if !used.contains(&(k - 1)) {
                word.push(Generator::Degeneracy { i: k });
            }
        }
        for (pos, c) in sym.iter().enumerate() {
            if let Coord::Const(eps) = c {
                word.push(Generator::Boundary { i: pos + 1, eps: *eps });
            }
        }
        CubeMorphism::from_word(self.source_dim, word).expect("normal form is well formed")
    }

    /// Equality as maps, decided by normal forms.
    pub fn equivalent(&self, other: &CubeMorphism) -> bool {
        self.source_dim == other.source_dim
            && self.target_dim == other.target_dim
            && self.symbolic() == other.symbolic()
    }
}

impl fmt::Display for CubeMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "id{}", self.source_dim);
        }
        let parts: Vec<String> = self
            .word
            .iter()
            .rev()
            .map(|g| match g {
                Generator::Boundary { i, eps } => format!("d{i}^{eps}"),
                Generator::Degeneracy { i } => format!("e{i}"),
            })
            .collect();
        write!(f, "{}", parts.join(" . "))
    }
}

/// Points of `[0,1]^dim` with coordinates `k/denominator`.
///
/// When the full grid is larger than `cap`, a deterministic spread subset of
/// `cap` points is returned (index `k·7919 mod size`), always including the
/// corner `(0,…,0)` and one point with pairwise distinct coordinates.
pub fn sample_grid(dim: usize, denominator: u32, cap: usize) -> Vec<Vec<Q>> {
    let side = denominator as u64 + 1;
    let size = side.checked_pow(dim as u32).unwrap_or(u64::MAX);
    let decode = |mut idx: u64| -> Vec<Q> {
        let mut p = Vec::with_capacity(dim);
        for _ in 0..dim {
            p.push(q((idx % side) as i64, denominator as i64));
            idx /= side;
        }
        p
    };
    if size <= cap as u64 {
        return (0..size).map(decode).collect();
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(cap + 1);
    let mut k = 0u64;
    while out.len() < cap {
        let idx = (k.wrapping_mul(7919)) % size;
        if seen.insert(idx) {
            out.push(decode(idx));
        }
        k += 1;
    }
    let distinct: Vec<Q> = (0..dim)
        .map(|c| q(((c as u64 + 1) % side) as i64, denominator as i64))
        .collect();
    out.push(distinct);
    out
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub relation: u8,
    pub lhs: CubeMorphism,
    pub rhs: CubeMorphism,
    pub witness: Option<Vec<Q>>,
}

#[derive(Clone, Debug)]
pub struct RelationReport {
    pub max_dim: usize,
    /// Instance counts for relations (1) through (4).
    pub instances: [usize; 4],
    pub points_checked: usize,
    pub violations: Vec<Violation>,
}

impl RelationReport {
    pub fn total_instances(&self) -> usize {
        self.instances.iter().sum()
    }
}

use Generator::{Boundary as B, Degeneracy as D};

/// Every instance of the four cube relations whose objects all have
/// dimension at most `max_dim`, as `(relation, source_dim, lhs word, rhs word)`.
pub fn relation_instances(max_dim: usize) -> Vec<(u8, usize, Vec<Generator>, Vec<Generator>)> {
    let mut out = Vec::new();
    let epss = [0u8, 1u8];
    // (1) ∂ⱼ^ε'∘∂ᵢ^ε on n
    for n in 0..=max_dim.saturating_sub(2) {
        if n + 2 > max_dim {
            break;
        }
        for i in 1..=n + 1 {
            for j in 1..=n + 2 {
                for &e in &epss {
                    for &e2 in &epss {
                        let lhs = vec![B { i, eps: e }, B { i: j, eps: e2 }];
                        let rhs = if i < j {
                            vec![B { i: j - 1, eps: e2 }, B { i, eps: e }]
                        } else {
                            vec![B { i: j, eps: e2 }, B { i: i + 1, eps: e }]
                        };
                        out.push((1, n, lhs, rhs));
                    }
                }
            }
        }
    }
    // (2) εⱼ∘εᵢ on n+2
    for n in 0..=max_dim.saturating_sub(2) {
        if n + 2 > max_dim {
            break;
        }
        for i in 1..=n + 2 {
            for j in 1..=n + 1 {
                let lhs = vec![D { i }, D { i: j }];
                let rhs = if i <= j {
                    vec![D { i: j + 1 }, D { i }]
                } else {
                    vec![D { i: j }, D { i: i - 1 }]
                };
                out.push((2, n + 2, lhs, rhs));
            }
        }
    }
    // (3) ∂ⱼ^ε'∘εᵢ on n+1
    for n in 0..=max_dim.saturating_sub(2) {
        if n + 2 > max_dim {
            break;
        }
        for i in 1..=n + 1 {
            for j in 1..=n + 1 {
                for &e in &epss {
                    let lhs = vec![D { i }, B { i: j, eps: e }];
                    let rhs = if i >= j {
                        vec![B { i: j, eps: e }, D { i: i + 1 }]
                    } else {
                        vec![B { i: j + 1, eps: e }, D { i }]
                    };
                    out.push((3, n + 1, lhs, rhs));
                }
            }
        }
    }
    // (4) εⱼ∘∂ᵢ^ε on n
    for n in 0..max_dim {
        for i in 1..=n + 1 {
            for j in 1..=n + 1 {
                for &e in &epss {
                    let lhs = vec![B { i, eps: e }, D { i: j }];
                    let rhs = if i > j {
                        vec![D { i: j }, B { i: i - 1, eps: e }]
                    } else if i < j {
                        vec![D { i: j - 1 }, B { i, eps: e }]
                    } else {
                        vec![]
                    };
                    out.push((4, n, lhs, rhs));
                }
            }
        }
    }
    out
}

/// Points sampled per instance when checking relations.
pub const RELATION_SAMPLE_CAP: usize = 729;

/// Verify all relation instances through `max_dim` on the denominator-8 grid
/// and by normal forms.
pub fn check_relations(max_dim: usize) -> Result<RelationReport> {
    if max_dim < 1 {
        return Err(Error::arg("check_relations needs max_dim >= 1"));
    }
    let mut report = RelationReport {
        max_dim,
        instances: [0; 4],
        points_checked: 0,
        violations: Vec::new(),
    };
    let grids: Vec<Vec<Vec<Q>>> = (0..=max_dim)
        .map(|d| sample_grid(d, 8, RELATION_SAMPLE_CAP))
        .collect();
    for (rel, src, lw, rw) in relation_instances(max_dim) {
        report.instances[(rel - 1) as usize] += 1;
        let lhs = CubeMorphism::from_word(src, lw)?;
        let rhs = CubeMorphism::from_word(src, rw)?;
        if lhs.target_dim != rhs.target_dim || !lhs.equivalent(&rhs) {
            report.violations.push(Violation { relation: rel, lhs, rhs, witness: None });
            continue;
        }
        for p in &grids[src] {
            report.points_checked += 1;
            if lhs.apply_q(p)? != rhs.apply_q(p)? {
                report.violations.push(Violation {
                    relation: rel,
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                    witness: Some(p.clone()),
                });
                break;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_inserts_constant() {
        assert_eq!(
            apply_boundary(2, 2, 0, &[q(1, 2), q(1, 4)]).unwrap(),
            vec![q(1, 2), q(0, 1), q(1, 4)]
        );
        assert_eq!(apply_boundary(0, 1, 1, &[]).unwrap(), vec![q(1, 1)]);
        assert!(apply_boundary(2, 4, 0, &[q(0, 1), q(0, 1)]).is_err());
    }

    #[test]
    fn degeneracy_deletes() {
        assert_eq!(apply_degeneracy(1, 1, &[q(3, 4), q(1, 2)]).unwrap(), vec![q(1, 2)]);
        assert_eq!(apply_degeneracy(0, 1, &[q(1, 3)]).unwrap(), Vec::<Q>::new());
        assert!(apply_degeneracy(1, 3, &[q(0, 1), q(0, 1)]).is_err());
    }

    #[test]
    fn double_boundary_composite() {
        let a = CubeMorphism::from_word(1, vec![B { i: 1, eps: 0 }, B { i: 1, eps: 1 }]).unwrap();
        let b = CubeMorphism::from_word(1, vec![B { i: 1, eps: 1 }, B { i: 2, eps: 0 }]).unwrap();
        let t = q(3, 8);
        assert_eq!(a.apply_q(std::slice::from_ref(&t)).unwrap(), vec![q(1, 1), q(0, 1), t.clone()]);
        assert_eq!(b.apply_q(std::slice::from_ref(&t)).unwrap(), vec![q(1, 1), q(0, 1), t]);
    }

    #[test]
    fn degeneracy_after_boundary_same_index_is_identity() {
        let m = CubeMorphism::from_word(1, vec![B { i: 1, eps: 0 }, D { i: 1 }]).unwrap();
        assert_eq!(m.apply_q(&[q(2, 5)]).unwrap(), vec![q(2, 5)]);
        assert!(m.equivalent(&CubeMorphism::identity(1)));
    }

    #[test]
    fn normal_form_is_equivalent_and_idempotent() {
        let m = CubeMorphism::from_word(
            3,
            vec![D { i: 2 }, B { i: 1, eps: 1 }, B { i: 3, eps: 0 }, D { i: 4 }],
        )
        .unwrap();
        let nf = m.normal_form();
        assert!(nf.equivalent(&m));
        assert_eq!(nf.normal_form(), nf);
    }

    #[test]
    fn relations_small_dims() {
        for d in 1..=3 {
            let r = check_relations(d).unwrap();
            assert!(r.violations.is_empty(), "{:?}", r.violations);
        }
        assert_eq!(check_relations(1).unwrap().total_instances(), 2);
    }

    #[test]
    fn grid_cap_is_respected() {
        assert_eq!(sample_grid(2, 8, 1000).len(), 81);
        let g = sample_grid(5, 8, 100);
        assert_eq!(g.len(), 101);
    }
}

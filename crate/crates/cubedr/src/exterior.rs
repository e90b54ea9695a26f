//! Basis combinatorics of the exterior algebra on `dx₁, …, dxₙ`.

use std::fmt;

use crate::{Error, Result};

/// A strictly increasing list of 1-based indices drawn from `1..=n`.
/// The empty list is the degree-0 basis element `1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    n: usize,
    idx: Vec<usize>,
}

impl MultiIndex {
    pub fn new(n: usize, idx: Vec<usize>) -> Result<Self> {
        if idx.iter().any(|&i| i == 0 || i > n) {
            return Err(Error::arg(format!("index out of 1..={n} in {idx:?}")));
        }
        if idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg(format!("indices {idx:?} not strictly increasing")));
        }
        Ok(MultiIndex { n, idx })
    }

    pub fn unit(n: usize) -> Self {
        MultiIndex { n, idx: Vec::new() }
    }

    /// The top-degree element `dx₁∧…∧dxₙ`.
    pub fn top(n: usize) -> Self {
        MultiIndex { n, idx: (1..=n).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.idx.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx
    }

    pub fn contains(&self, i: usize) -> bool {
        self.idx.binary_search(&i).is_ok()
    }

    pub(crate) fn from_sorted_unchecked(n: usize, idx: Vec<usize>) -> Self {
        MultiIndex { n, idx }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.idx.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.idx.iter().map(|i| format!("dx{i}")).collect();
        write!(f, "{}", parts.join("^"))
    }
}

/// All `p`-element strictly increasing index lists in `1..=n`; empty when `p`
/// is negative or exceeds `n`.
pub fn basis(n: usize, p: i64) -> Vec<MultiIndex> {
    if p < 0 || p as usize > n {
        return Vec::new();
    }
    let p = p as usize;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(p);
    fn rec(n: usize, p: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if cur.len() == p {
            out.push(MultiIndex { n, idx: cur.clone() });
            return;
        }
        for i in start..=n {
            if n - i + 1 < p - cur.len() {
                break;
            }
            cur.push(i);
            rec(n, p, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, p, 1, &mut cur, &mut out);
    out
}

/// `a ∧ b = sign · merged`. The sign is 0 when the lists share an index,
/// otherwise the parity of the permutation sorting the concatenation.
pub fn wedge_basis(a: &MultiIndex, b: &MultiIndex) -> Result<(i8, MultiIndex)> {
    if a.n != b.n {
        return Err(Error::arg(format!(
            "ambient dimensions differ: {} and {}",
            a.n, b.n
        )));
    }
    let mut merged = Vec::with_capacity(a.idx.len() + b.idx.len());
    let mut inversions = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.idx.len() || j < b.idx.len() {
        if j == b.idx.len() || (i < a.idx.len() && a.idx[i] < b.idx[j]) {
            merged.push(a.idx[i]);
            i += 1;
        } else if i == a.idx.len() || b.idx[j] < a.idx[i] {
            // b[j] moves past the a-entries not yet placed
            inversions += a.idx.len() - i;
            merged.push(b.idx[j]);
            j += 1;
        } else {
            return Ok((0, MultiIndex::unit(a.n)));
        }
    }
    let sign = if inversions.is_multiple_of(2) { 1 } else { -1 };
    Ok((sign, MultiIndex { n: a.n, idx: merged }))
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `C(n, p)`, the dimension of `∧^p` on `n` generators.
pub fn dimension(n: usize, p: i64) -> usize {
    if p < 0 {
        0
    } else {
        binomial(n, p as usize)
    }
}

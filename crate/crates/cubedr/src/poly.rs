//! Sparse multivariate polynomials with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::{qi, Error, Result, Q};

/// A polynomial in `n` variables; the term map never stores a zero coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, Q>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Q) -> Self {
        let mut p = Polynomial::zero(n);
        if !c.is_zero() {
            p.terms.insert(vec![0; n], c);
        }
        p
    }

    pub fn one(n: usize) -> Self {
        Polynomial::constant(n, Q::one())
    }

    /// The coordinate function `xᵢ` (1-based).
    pub fn var(n: usize, i: usize) -> Self {
        assert!(i >= 1 && i <= n, "variable x{i} outside 1..={n}");
        let mut e = vec![0; n];
        e[i - 1] = 1;
        Polynomial::monomial(e, Q::one())
    }

    pub fn monomial(exps: Vec<u32>, c: Q) -> Self {
        let n = exps.len();
        let mut p = Polynomial::zero(n);
        if !c.is_zero() {
            p.terms.insert(exps, c);
        }
        p
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Vec<u32>, Q)>) -> Self {
        let mut p = Polynomial::zero(n);
        for (e, c) in terms {
            assert_eq!(e.len(), n, "exponent vector length");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Vec<u32>, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// `self += other` without cloning `self`.
    pub fn add_assign(&mut self, other: &Polynomial) {
        assert_eq!(self.n, other.n, "adding polynomials in different variable counts");
        for (e, c) in &other.terms {
            self.add_term(e.clone(), c.clone());
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Q)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Highest power of `xᵢ` appearing (1-based).
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i - 1]).max().unwrap_or(0)
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|e| e[i - 1] > 0)
    }

    /// The constant value if the polynomial has no variable terms.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&k| k == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn coeff(&self, exps: &[u32]) -> Q {
        self.terms.get(exps).cloned().unwrap_or_else(Q::zero)
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Polynomial::zero(self.n);
        }
        Polynomial {
            n: self.n,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Polynomial::one(self.n);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `∂/∂xᵢ` (1-based).
    pub fn derivative(&self, i: usize) -> Self {
        let k = i - 1;
        let mut out = Polynomial::zero(self.n);
        for (e, c) in &self.terms {
            if e[k] > 0 {
                let mut e2 = e.clone();
                e2[k] -= 1;
                out.add_term(e2, c * qi(e[k] as i64));
            }
        }
        out
    }

    pub fn eval(&self, x: &[Q]) -> Result<Q> {
        if x.len() != self.n {
            return Err(Error::arg(format!(
                "point has {} coordinates, polynomial has {} variables",
                x.len(),
                self.n
            )));
        }
        let mut total = Q::zero();
        for (e, c) in &self.terms {
            let mut v = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    v *= num_traits::pow(xi.clone(), k as usize);
                }
            }
            total += v;
        }
        Ok(total)
    }

    /// Substitute `xᵢ := subs[i-1]`, each substitute a polynomial in `m`
    /// variables.
    pub fn compose(&self, subs: &[Polynomial], m: usize) -> Result<Self> {
        if subs.len() != self.n {
            return Err(Error::arg(format!(
                "{} substitutes for a polynomial in {} variables",
                subs.len(),
                self.n
            )));
        }
        if subs.iter().any(|s| s.n != m) {
            return Err(Error::arg("substitutes live in different numbers of variables"));
        }
        let mut powers: Vec<Vec<Polynomial>> = subs.iter().map(|s| vec![Polynomial::one(m), s.clone()]).collect();
        let mut out = Polynomial::zero(m);
        for (e, c) in &self.terms {
            let mut term = Polynomial::constant(m, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while powers[i].len() <= k as usize {
                    let next = &powers[i][powers[i].len() - 1] * &subs[i];
                    powers[i].push(next);
                }
                term = &term * &powers[i][k as usize];
            }
            out.add_assign(&term);
        }
        Ok(out)
    }

    /// Set `xᵢ = value` and drop the variable.
    pub fn restrict(&self, i: usize, value: &Q) -> Self {
        let k = i - 1;
        let mut out = Polynomial::zero(self.n - 1);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let p = e2.remove(k);
            let v = if p == 0 { c.clone() } else { c * num_traits::pow(value.clone(), p as usize) };
            out.add_term(e2, v);
        }
        out
    }

    /// `∫₀¹ … dxᵢ`, dropping the variable.
    pub fn integrate_unit(&self, i: usize) -> Self {
        let k = i - 1;
        let mut out = Polynomial::zero(self.n - 1);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let p = e2.remove(k);
            out.add_term(e2, c / qi(p as i64 + 1));
        }
        out
    }

    /// Insert an unused variable at position `i` (1-based) of `n+1`.
    pub fn insert_var(&self, i: usize) -> Self {
        Polynomial {
            n: self.n + 1,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e2 = e.clone();
                    e2.insert(i - 1, 0);
                    (e2, c.clone())
                })
                .collect(),
        }
    }

    /// Drop variable `i`, which must not occur.
    pub fn remove_var(&self, i: usize) -> Option<Self> {
        if self.depends_on(i) {
            return None;
        }
        Some(self.restrict(i, &Q::zero()))
    }

    /// Sum of absolute coefficient values: a bound for `|p|` on `[0,1]ⁿ`.
    pub fn abs_coeff_sum(&self) -> Q {
        self.terms.values().map(|c| c.abs()).fold(Q::zero(), |a, b| a + b)
    }

    pub fn to_f64(&self) -> FPoly {
        FPoly {
            n: self.n,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), crate::q_to_f64(c))).collect(),
        }
    }

    pub fn display_with(&self, names: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            for (i, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => factors.push(names[i].to_string()),
                    _ => factors.push(format!("{}^{}", names[i], p)),
                }
            }
            if factors.is_empty() {
                out.push_str(&a.to_string());
            } else {
                if !a.is_one() {
                    out.push_str(&a.to_string());
                    out.push('*');
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }
}

pub fn x_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = x_names(self.n);
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        write!(f, "{}", self.display_with(&refs))
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n, "adding polynomials in different variable counts");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n, "subtracting polynomials in different variable counts");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n, "multiplying polynomials in different variable counts");
        let mut out = Polynomial::zero(self.n);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }
}

/// Arithmetic needed to evaluate a polynomial over a numeric type.
pub trait Ring: Clone + Add<Output = Self> + Mul<Output = Self> {
    fn from_f64(c: f64) -> Self;
}

impl Ring for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
}

/// Double-precision copy of a polynomial for numeric evaluation.
#[derive(Clone, Debug)]
pub struct FPoly {
    n: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl FPoly {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut total = 0.0;
        for (e, c) in &self.terms {
            let mut v = *c;
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    v *= xi.powi(k as i32);
                }
            }
            total += v;
        }
        total
    }

    pub fn eval_ring<T: Ring>(&self, x: &[T]) -> T {
        let mut total = T::from_f64(0.0);
        for (e, c) in &self.terms {
            let mut v = T::from_f64(*c);
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    v = v * xi.clone();
                }
            }
            total = total + v;
        }
        total
    }
}

// ---------------------------------------------------------------- parsing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(num_bigint::BigInt),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> std::result::Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let lit: String = chars[st..i].iter().collect();
            out.push(Tok::Num(lit.parse().map_err(|_| format!("bad number {lit}"))?));
        } else if c.is_ascii_alphabetic() {
            let st = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[st..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(format!("unexpected character '{c}'"));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    names: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat_op(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn n(&self) -> usize {
        self.names.len()
    }

    fn expr(&mut self) -> std::result::Result<Polynomial, String> {
        let mut acc = if self.eat_op('-') {
            -&self.term()?
        } else {
            self.eat_op('+');
            self.term()?
        };
        loop {
            if self.eat_op('+') {
                acc = &acc + &self.term()?;
            } else if self.eat_op('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> std::result::Result<Polynomial, String> {
        let mut acc = self.factor()?;
        loop {
            if self.eat_op('*') {
                acc = &acc * &self.factor()?;
            } else if self.eat_op('/') {
                let d = self.factor()?;
                let c = d.as_constant().ok_or("division by a non-constant")?;
                if c.is_zero() {
                    return Err("division by zero".into());
                }
                acc = acc.scale(&(Q::one() / c));
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> std::result::Result<Polynomial, String> {
        if self.eat_op('-') {
            return Ok(-&self.factor()?);
        }
        let base = self.base()?;
        if self.eat_op('^') {
            match self.toks.get(self.pos).cloned() {
                Some(Tok::Num(k)) => {
                    self.pos += 1;
                    let k: u32 = k.try_into().map_err(|_| "exponent too large")?;
                    Ok(base.pow(k))
                }
                _ => Err("exponent must be a non-negative integer".into()),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> std::result::Result<Polynomial, String> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Polynomial::constant(self.n(), Q::from_integer(v)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match self.names.iter().position(|n| *n == name) {
                    Some(i) => Ok(Polynomial::var(self.n(), i + 1)),
                    None => Err(format!("unknown variable '{name}'")),
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat_op(')') {
                    return Err("missing ')'".into());
                }
                Ok(e)
            }
            Some(t) => Err(format!("unexpected token {t:?}")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

/// Parse a polynomial over the given variable names.
pub fn parse_with(s: &str, names: &[&str]) -> std::result::Result<Polynomial, String> {
    let toks = tokenize(s)?;
    if toks.is_empty() {
        return Err("empty polynomial".into());
    }
    let mut p = Parser { toks, pos: 0, names };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(format!("trailing input after token {}", p.pos));
    }
    Ok(e)
}

/// Parse a polynomial in `x1..xn`.
pub fn parse(s: &str, n: usize) -> std::result::Result<Polynomial, String> {
    let names = x_names(n);
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    parse_with(s, &refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;

    #[test]
    fn arithmetic_and_derivative() {
        let p = parse("x1^2*x2 + 3/2*x2 - 1", 2).unwrap();
        assert_eq!(p.derivative(1), parse("2*x1*x2", 2).unwrap());
        assert_eq!(p.derivative(2), parse("x1^2 + 3/2", 2).unwrap());
        assert_eq!(p.eval(&[q(1, 2), q(2, 1)]).unwrap(), q(5, 2));
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn composition() {
        let p = parse("x1*x2", 2).unwrap();
        let s = vec![parse("x1 + 1", 1).unwrap(), parse("x1", 1).unwrap()];
        assert_eq!(p.compose(&s, 1).unwrap(), parse("x1^2 + x1", 1).unwrap());
    }

    #[test]
    fn integration_and_restriction() {
        let p = parse("x1^2*x2", 2).unwrap();
        assert_eq!(p.integrate_unit(1), parse("1/3*x1", 1).unwrap());
        assert_eq!(p.restrict(2, &q(1, 2)), parse("1/2*x1^2", 1).unwrap());
    }

    #[test]
    fn display_roundtrip() {
        for s in ["x1^2*x2 - 3/4*x1 + 2", "-x2", "0", "5/3"] {
            let p = parse(s, 2).unwrap();
            assert_eq!(parse(&p.to_string(), 2).unwrap(), p);
        }
    }

    #[test]
    fn parse_errors() {
        assert!(parse("x3", 2).is_err());
        assert!(parse("x1/x2", 2).is_err());
        assert!(parse("x1 +", 2).is_err());
        assert!(parse("(x1", 2).is_err());
        assert!(parse("x1 $ 2", 2).is_err());
    }

    #[test]
    fn f64_mirror_agrees() {
        let p = parse("x1^3 - 1/3*x1*x2 + 7", 2).unwrap();
        let v = p.to_f64().eval(&[0.5, 0.25]);
        assert!((v - crate::q_to_f64(&p.eval(&[q(1, 2), q(1, 4)]).unwrap())).abs() < 1e-15);
    }
}

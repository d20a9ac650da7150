//! Sparse multivariate polynomials.
//!
//! The coefficient type is generic so the same carrier serves exact
//! rational dynamics and floating-point barrier templates.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Num;

use crate::error::{Error, Result};
use crate::rational::{format_rat, to_f64, Rat};

pub type Exponent = Vec<u32>;

/// Coefficient ring requirements.
pub trait Coeff: Num + Clone + Neg<Output = Self> + fmt::Debug {}
impl<T: Num + Clone + Neg<Output = T> + fmt::Debug> Coeff for T {}

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    nvars: usize,
    terms: BTreeMap<Exponent, T>,
}

pub type RatPoly = Polynomial<Rat>;
pub type FloatPoly = Polynomial<f64>;

impl<T: Coeff> Polynomial<T> {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    /// The coordinate polynomial `x[i]` (0-based).
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, T::one())
    }

    pub fn monomial(nvars: usize, exp: Exponent, c: T) -> Self {
        assert_eq!(exp.len(), nvars, "exponent length must equal variable count");
        let mut p = Self::zero(nvars);
        p.add_term(exp, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponent, T)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::Dimension(format!(
                    "exponent {e:?} has length {} but polynomial has {nvars} variables",
                    e.len()
                )));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: &[u32]) -> T {
        self.terms.get(exp).cloned().unwrap_or_else(T::zero)
    }

    pub fn add_term(&mut self, exp: Exponent, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exp) {
            Some(v) => {
                let sum = v.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&exp);
                } else {
                    *v = sum;
                }
            }
            None => {
                self.terms.insert(exp, c);
            }
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn scale(&self, s: &T) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.nvars {
            return Err(Error::Dimension(format!(
                "point of dimension {} for polynomial in {} variables",
                x.len(),
                self.nvars
            )));
        }
        Ok(self.terms.iter().fold(T::zero(), |acc, (e, c)| {
            let mut m = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    m = m * xi.clone();
                }
            }
            acc + m
        }))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.nvars, T::one());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Substitutes `subs[i]` for variable `i`; the result lives in the
    /// variable space of the substituted polynomials.
    pub fn compose(&self, subs: &[Polynomial<T>]) -> Result<Self> {
        if subs.len() != self.nvars {
            return Err(Error::Dimension(format!(
                "{} substitutions for {} variables",
                subs.len(),
                self.nvars
            )));
        }
        let target = subs.first().map_or(0, |p| p.nvars);
        if subs.iter().any(|p| p.nvars != target) {
            return Err(Error::Dimension("substitutions disagree on variable count".into()));
        }
        let mut cache: BTreeMap<(usize, u32), Polynomial<T>> = BTreeMap::new();
        let mut out = Self::zero(target);
        for (e, c) in &self.terms {
            let mut m = Self::constant(target, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let pw = cache.entry((i, k)).or_insert_with(|| subs[i].pow(k)).clone();
                m = &m * &pw;
            }
            out = &out + &m;
        }
        Ok(out)
    }

    pub fn map_coeffs<U: Coeff>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        let mut out = Polynomial::<U>::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    pub fn max_abs_coeff(&self, abs: impl Fn(&T) -> f64) -> f64 {
        self.terms.values().map(abs).fold(0.0, f64::max)
    }
}

impl RatPoly {
    pub fn to_float(&self) -> FloatPoly {
        self.map_coeffs(to_f64)
    }
}

impl<T: Coeff> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: Self) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<T: Coeff> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: Self) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl<T: Coeff> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: Self) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<T: Coeff> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        self.scale(&-T::one())
    }
}

/// All exponent vectors in `nvars` variables with total degree at most
/// `max_degree`, in graded lexicographic order (degree ascending, then
/// lexicographically descending so `x1` precedes `x2`).
pub fn monomials_up_to(nvars: usize, max_degree: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        let mut level = Vec::new();
        exponents_of_degree(nvars, d, &mut vec![0; nvars], 0, &mut level);
        level.sort_by(|a, b| b.cmp(a));
        out.extend(level);
    }
    out
}

fn exponents_of_degree(nvars: usize, left: u32, cur: &mut Exponent, i: usize, out: &mut Vec<Exponent>) {
    if nvars == 0 {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if i == nvars - 1 {
        cur[i] = left;
        out.push(cur.clone());
        cur[i] = 0;
        return;
    }
    for k in 0..=left {
        cur[i] = k;
        exponents_of_degree(nvars, left - k, cur, i + 1, out);
    }
    cur[i] = 0;
}

fn write_poly<T>(
    f: &mut fmt::Formatter<'_>,
    terms: &BTreeMap<Exponent, T>,
    fmt_coeff: impl Fn(&T) -> String,
) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    let parts: Vec<String> = terms
        .iter()
        .map(|(e, c)| {
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, k) })
                .collect();
            if vars.is_empty() {
                fmt_coeff(c)
            } else {
                format!("{}*{}", fmt_coeff(c), vars.join("*"))
            }
        })
        .collect();
    write!(f, "{}", parts.join(" + "))
}

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_poly(f, &self.terms, format_rat)
    }
}

impl fmt::Display for FloatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_poly(f, &self.terms, |c| format!("{c}"))
    }
}

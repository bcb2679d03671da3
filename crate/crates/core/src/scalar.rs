//! Exact coefficient rings: Gaussian rationals and polynomials in real
//! parameters with Gaussian-rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational number.
pub type Rat = BigRational;

pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Formats a rational as `p/q`, omitting `/1`.
pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p` or `p/q`. Rejects zero denominators and stray whitespace.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let bad = || Error::Parse(format!("malformed rational {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let valid = |t: &str, signed: bool| {
        let digits = if signed { t.strip_prefix('-').unwrap_or(t) } else { t };
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(num, true) {
        return Err(bad());
    }
    let n = BigInt::from_str(num).map_err(|_| bad())?;
    let d = match den {
        Some(d) if valid(d, false) => BigInt::from_str(d).map_err(|_| bad())?,
        Some(_) => return Err(bad()),
        None => BigInt::one(),
    };
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(n, d))
}

/// Common interface of the coefficient rings used by [`crate::poly::BiPoly`].
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + 'static
{
    fn conj(&self) -> Self;
    fn from_gauss(c: GaussRat) -> Self;
    fn scale(&self, c: &GaussRat) -> Self;
    /// Real part, with parameters treated as real.
    fn re_part(&self) -> Self;
    /// Imaginary part, with parameters treated as real.
    fn im_part(&self) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_gauss(GaussRat::from_int(n))
    }
}

/// A Gaussian rational `re + i·im`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussRat {
    pub re: Rat,
    pub im: Rat,
}

impl GaussRat {
    pub fn new(re: Rat, im: Rat) -> Self {
        Self { re, im }
    }

    pub fn real(re: Rat) -> Self {
        Self { re, im: Rat::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(Rat::from_integer(n.into()))
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        Self::real(rat(p, q))
    }

    pub fn i() -> Self {
        Self::new(Rat::zero(), Rat::one())
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// `|c|²`, a nonnegative rational.
    pub fn norm_sqr(&self) -> Rat {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return None;
        }
        Some(Self::new(&self.re / &n, -&self.im / &n))
    }

    pub fn mul_rat(&self, r: &Rat) -> Self {
        Self::new(&self.re * r, &self.im * r)
    }
}

impl fmt::Debug for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", format_rat(&self.re)),
            (true, false) => write!(f, "{}i", format_rat(&self.im)),
            (false, false) => {
                let sign = if self.im.is_negative() { '-' } else { '+' };
                write!(f, "({}{}{}i)", format_rat(&self.re), sign, format_rat(&self.im.abs()))
            }
        }
    }
}

impl Add for GaussRat {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

impl<'a> Add<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn add(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Sub for GaussRat {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}

impl Neg for GaussRat {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl<'a> Mul<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Mul for GaussRat {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        &self * &o
    }
}

impl Zero for GaussRat {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussRat {
    fn one() -> Self {
        Self::from_int(1)
    }
}

impl Scalar for GaussRat {
    fn conj(&self) -> Self {
        Self::new(self.re.clone(), -&self.im)
    }
    fn from_gauss(c: GaussRat) -> Self {
        c
    }
    fn scale(&self, c: &GaussRat) -> Self {
        self * c
    }
    fn re_part(&self) -> Self {
        Self::real(self.re.clone())
    }
    fn im_part(&self) -> Self {
        Self::real(self.im.clone())
    }
}

/// Exponent vector over the parameter symbols, trailing zeros trimmed so
/// that equal monomials compare equal regardless of how many symbols exist.
pub type ParamMono = Vec<u16>;

fn trim(mut e: ParamMono) -> ParamMono {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

fn mono_mul(a: &[u16], b: &[u16]) -> ParamMono {
    let len = a.len().max(b.len());
    let e = (0..len)
        .map(|i| a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0))
        .collect();
    trim(e)
}

fn mono_degree(e: &[u16]) -> u32 {
    e.iter().map(|&x| u32::from(x)).sum()
}

/// Polynomial in real parameters `t_0, t_1, …` (ordered by creation index)
/// with Gaussian-rational coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ParamScalar {
    terms: BTreeMap<ParamMono, GaussRat>,
}

impl ParamScalar {
    pub fn constant(c: GaussRat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Self { terms }
    }

    /// The parameter `t_index` itself.
    pub fn param(index: usize) -> Self {
        let mut e = vec![0u16; index + 1];
        e[index] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(e, GaussRat::one());
        Self { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ParamMono, &GaussRat)> {
        self.terms.iter()
    }

    pub fn from_terms(it: impl IntoIterator<Item = (ParamMono, GaussRat)>) -> Self {
        let mut out = Self::default();
        for (e, c) in it {
            out.add_term(trim(e), c);
        }
        out
    }

    fn add_term(&mut self, e: ParamMono, c: GaussRat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn constant_term(&self) -> GaussRat {
        self.terms.get(&Vec::new()).cloned().unwrap_or_default()
    }

    /// `Some(c)` when no parameter occurs.
    pub fn as_constant(&self) -> Option<GaussRat> {
        if self.is_constant() {
            Some(self.constant_term())
        } else {
            None
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.is_empty())
    }

    /// Total degree in the parameters (0 for constants and zero).
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| mono_degree(e)).max().unwrap_or(0)
    }

    /// Indices of parameters that occur.
    pub fn params(&self) -> Vec<usize> {
        let mut seen: Vec<usize> = self
            .terms
            .keys()
            .flat_map(|e| e.iter().enumerate().filter(|(_, &x)| x > 0).map(|(i, _)| i))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }

    pub fn real_part(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, c)| (e.clone(), GaussRat::real(c.re.clone()))))
    }

    pub fn imag_part(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, c)| (e.clone(), GaussRat::real(c.im.clone()))))
    }

    pub fn mul_gauss(&self, c: &GaussRat) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, x)| (e.clone(), x * c)))
    }

    /// Splits `self = a·t_index + b` when `self` has degree ≤ 1 in `t_index`.
    /// Returns `None` if `t_index` occurs with a higher power.
    pub fn split_affine(&self, index: usize) -> Option<(ParamScalar, ParamScalar)> {
        let mut coeff = ParamScalar::default();
        let mut rest = ParamScalar::default();
        for (e, c) in &self.terms {
            match e.get(index).copied().unwrap_or(0) {
                0 => rest.add_term(e.clone(), c.clone()),
                1 => {
                    let mut e2 = e.clone();
                    e2[index] = 0;
                    coeff.add_term(trim(e2), c.clone());
                }
                _ => return None,
            }
        }
        Some((coeff, rest))
    }

    /// Replaces `t_index` by `value` everywhere.
    pub fn substitute(&self, index: usize, value: &ParamScalar) -> ParamScalar {
        if !self.terms.keys().any(|e| e.get(index).copied().unwrap_or(0) > 0) {
            return self.clone();
        }
        let mut powers: Vec<ParamScalar> = vec![ParamScalar::one()];
        let mut out = ParamScalar::default();
        for (e, c) in &self.terms {
            let k = e.get(index).copied().unwrap_or(0) as usize;
            while powers.len() <= k {
                let next = powers.last().unwrap().clone() * value.clone();
                powers.push(next);
            }
            let mut e2 = e.clone();
            if k > 0 {
                e2[index] = 0;
            }
            let base = ParamScalar::from_terms([(e2, c.clone())]);
            out = out + base * powers[k].clone();
        }
        out
    }

    /// Evaluates with rational parameter values; missing entries are an error.
    pub fn evaluate(&self, values: &[Rat]) -> Result<GaussRat> {
        let mut acc = GaussRat::zero();
        for (e, c) in &self.terms {
            let mut m = Rat::one();
            for (i, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                let v = values
                    .get(i)
                    .ok_or_else(|| Error::Internal(format!("no value for parameter t{i}")))?;
                for _ in 0..p {
                    m *= v;
                }
            }
            acc = acc + c.mul_rat(&m);
        }
        Ok(acc)
    }
}

impl fmt::Debug for ParamScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ParamScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x > 0)
                    .map(|(i, &x)| if x == 1 { format!("t{i}") } else { format!("t{i}^{x}") })
                    .collect();
                if mono.is_empty() {
                    c.to_string()
                } else {
                    format!("{}*{}", c, mono.join("*"))
                }
            })
            .collect();
        if parts.len() > 1 && f.alternate() {
            write!(f, "({})", parts.join(" + "))
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl Add for ParamScalar {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for (e, c) in o.terms {
            self.add_term(e, c);
        }
        self
    }
}

impl Sub for ParamScalar {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for ParamScalar {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            terms: self.terms.into_iter().map(|(e, c)| (e, -c)).collect(),
        }
    }
}

impl Mul for ParamScalar {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = ParamScalar::default();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                out.add_term(mono_mul(ea, eb), ca * cb);
            }
        }
        out
    }
}

impl Zero for ParamScalar {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for ParamScalar {
    fn one() -> Self {
        Self::constant(GaussRat::one())
    }
}

impl Scalar for ParamScalar {
    // Parameters are real, so conjugation acts on coefficients only.
    fn conj(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.conj())).collect(),
        }
    }
    fn from_gauss(c: GaussRat) -> Self {
        Self::constant(c)
    }
    fn scale(&self, c: &GaussRat) -> Self {
        self.mul_gauss(c)
    }
    fn re_part(&self) -> Self {
        self.real_part()
    }
    fn im_part(&self) -> Self {
        self.imag_part()
    }
}

impl From<GaussRat> for ParamScalar {
    fn from(c: GaussRat) -> Self {
        Self::constant(c)
    }
}

//! Sparse polynomials in `(z, z̄)` with exact coefficients.
//!
//! A [`BiPoly`] stores `Σ c_{m,n} z^m z̄^n` as a map from bidegree to
//! coefficient. Keys iterate in graded lexicographic order by `(m+n, m)`, so
//! anything derived from the iteration order (serialization, matrix
//! columns) is deterministic. The same container doubles as a polynomial in
//! `(z, w)` for formal maps; see [`crate::surface`].

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::RwLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{GaussRat, Rat, Scalar};

/// Exponent pair `(m, n)` of `z^m z̄^n`, ordered by total degree, then `m`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Bideg {
    pub m: u32,
    pub n: u32,
}

impl Bideg {
    pub fn new(m: u32, n: u32) -> Self {
        Self { m, n }
    }

    pub fn degree(self) -> u32 {
        self.m + self.n
    }
}

impl Ord for Bideg {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.degree(), self.m).cmp(&(other.degree(), other.m))
    }
}

impl PartialOrd for Bideg {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

static FACTORIALS: RwLock<Vec<BigInt>> = RwLock::new(Vec::new());

/// `n!` as an exact integer, memoized.
pub fn factorial(n: u32) -> BigInt {
    let n = n as usize;
    if let Some(v) = FACTORIALS.read().expect("factorial cache").get(n) {
        return v.clone();
    }
    let mut cache = FACTORIALS.write().expect("factorial cache");
    if cache.is_empty() {
        cache.push(BigInt::one());
    }
    while cache.len() <= n {
        let k = cache.len();
        let next = &cache[k - 1] * BigInt::from(k);
        cache.push(next);
    }
    cache[n].clone()
}

/// `k!/(k-d)!`, the coefficient produced by `d` derivatives of `x^k`.
fn falling(k: u32, d: u32) -> BigInt {
    (k - d + 1..=k).fold(BigInt::one(), |acc, j| acc * BigInt::from(j))
}

#[derive(Clone, PartialEq)]
pub struct BiPoly<S: Scalar> {
    terms: BTreeMap<Bideg, S>,
}

impl<S: Scalar> Default for BiPoly<S> {
    fn default() -> Self {
        Self { terms: BTreeMap::new() }
    }
}

impl<S: Scalar> BiPoly<S> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: S) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn one() -> Self {
        Self::constant(S::one())
    }

    pub fn monomial(m: u32, n: u32, c: S) -> Self {
        let mut p = Self::zero();
        p.add_term(Bideg::new(m, n), c);
        p
    }

    /// `z`.
    pub fn z() -> Self {
        Self::monomial(1, 0, S::one())
    }

    /// `z̄` (or `w`, when used as a `(z, w)` polynomial).
    pub fn zbar() -> Self {
        Self::monomial(0, 1, S::one())
    }

    /// The fixed quadric `Q = z² + z̄²`.
    pub fn quadric() -> Self {
        Self::from_terms([((2, 0), S::one()), ((0, 2), S::one())])
    }

    pub fn from_terms(it: impl IntoIterator<Item = ((u32, u32), S)>) -> Self {
        let mut p = Self::zero();
        for ((m, n), c) in it {
            p.add_term(Bideg::new(m, n), c);
        }
        p
    }

    pub fn add_term(&mut self, k: Bideg, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(k) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = o.get().clone() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (Bideg, &S)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Bideg, S)> {
        self.terms.into_iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: u32, n: u32) -> S {
        self.terms.get(&Bideg::new(m, n)).cloned().unwrap_or_else(S::zero)
    }

    /// Highest total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(|k| k.degree())
    }

    /// Lowest total degree, `None` for the zero polynomial.
    pub fn low_degree(&self) -> Option<u32> {
        self.terms.keys().next().map(|k| k.degree())
    }

    /// Zero counts as homogeneous of every degree.
    pub fn is_homogeneous(&self) -> bool {
        self.degree() == self.low_degree()
    }

    /// Degree of a homogeneous polynomial; `Ok(None)` for zero.
    pub fn homogeneous_degree(&self) -> Result<Option<u32>> {
        if self.is_homogeneous() {
            Ok(self.degree())
        } else {
            Err(Error::NotHomogeneous)
        }
    }

    pub fn homogeneous_component(&self, d: u32) -> Self {
        self.filter(|k| k.degree() == d)
    }

    /// Drops every term of total degree above `bound`.
    pub fn truncate(&self, bound: u32) -> Self {
        self.filter(|k| k.degree() <= bound)
    }

    pub fn filter(&self, keep: impl Fn(Bideg) -> bool) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep(**k))
                .map(|(k, c)| (*k, c.clone()))
                .collect(),
        }
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> BiPoly<T> {
        let mut out = BiPoly::zero();
        for (k, c) in &self.terms {
            out.add_term(*k, f(c));
        }
        out
    }

    pub fn try_map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> Result<T>) -> Result<BiPoly<T>> {
        let mut out = BiPoly::zero();
        for (k, c) in &self.terms {
            out.add_term(*k, f(c)?);
        }
        Ok(out)
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map_coeffs(|x| x.clone() * c.clone())
    }

    pub fn scale_gauss(&self, c: &GaussRat) -> Self {
        self.map_coeffs(|x| x.scale(c))
    }

    /// Coefficient at `(m, n)` becomes the conjugate of the one at `(n, m)`.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            out.add_term(Bideg::new(k.n, k.m), c.conj());
        }
        out
    }

    /// Real-valued part `(P + conj P)/2`.
    pub fn re(&self) -> Self {
        (self.clone() + self.conj()).scale_gauss(&GaussRat::from_ratio(1, 2))
    }

    /// Imaginary part `(P − conj P)/(2i)`, itself real-valued.
    pub fn im(&self) -> Self {
        (self.clone() - self.conj()).scale_gauss(&GaussRat::new(Rat::zero(), crate::scalar::rat(-1, 2)))
    }

    pub fn mul_trunc(&self, other: &Self, bound: u32) -> Self {
        let mut out = Self::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let k = Bideg::new(ka.m + kb.m, ka.n + kb.n);
                if k.degree() <= bound {
                    out.add_term(k, ca.clone() * cb.clone());
                }
            }
        }
        out
    }

    fn mul_full(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                out.add_term(Bideg::new(ka.m + kb.m, ka.n + kb.n), ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn pow_trunc(&self, e: u32, bound: u32) -> Self {
        let mut acc = Self::one().truncate(bound);
        for _ in 0..e {
            acc = acc.mul_trunc(self, bound);
        }
        acc
    }

    /// `∂^a/∂z^a ∂^b/∂z̄^b`.
    pub fn derivative(&self, a: u32, b: u32) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            if k.m < a || k.n < b {
                continue;
            }
            let f = falling(k.m, a) * falling(k.n, b);
            out.add_term(Bideg::new(k.m - a, k.n - b), c.scale(&GaussRat::real(Rat::from_integer(f))));
        }
        out
    }

    /// `∂²/∂z² + ∂²/∂z̄²`.
    pub fn trace(&self) -> Self {
        self.derivative(2, 0) + self.derivative(0, 2)
    }

    /// `P(zexpr, zbarexpr)` with every term of degree above `bound` dropped.
    ///
    /// Exact below the bound provided neither substitute has a constant term.
    pub fn substitute(&self, zexpr: &Self, zbarexpr: &Self, bound: u32) -> Self {
        self.substitute_with(zexpr, zbarexpr, |p, q| p.mul_trunc(q, bound), Self::truncate, bound)
    }

    /// Substitution with caller-supplied truncating product, used for the
    /// weighted `(z, w)` filtration of formal maps.
    pub(crate) fn substitute_with(
        &self,
        zexpr: &Self,
        zbarexpr: &Self,
        mul: impl Fn(&Self, &Self) -> Self,
        trunc: impl Fn(&Self, u32) -> Self,
        bound: u32,
    ) -> Self {
        let max_m = self.terms.keys().map(|k| k.m).max().unwrap_or(0);
        let max_n = self.terms.keys().map(|k| k.n).max().unwrap_or(0);
        let powers = |base: &Self, top: u32| {
            let mut v = vec![trunc(&Self::one(), bound)];
            for i in 0..top as usize {
                let next = mul(&v[i], base);
                v.push(next);
            }
            v
        };
        let zp = powers(zexpr, max_m);
        let zbp = powers(zbarexpr, max_n);
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let t = mul(&zp[k.m as usize], &zbp[k.n as usize]);
            out = out + t.scale(c);
        }
        trunc(&out, bound)
    }
}

impl BiPoly<GaussRat> {
    pub fn lift<S: Scalar>(&self) -> BiPoly<S> {
        self.map_coeffs(|c| S::from_gauss(c.clone()))
    }
}

/// Fischer pairing `Σ m!·n!·conj(p_{m,n})·r_{m,n}` of two homogeneous
/// polynomials of equal degree.
pub fn fischer_pair(p: &BiPoly<GaussRat>, r: &BiPoly<GaussRat>) -> Result<GaussRat> {
    let dp = p.homogeneous_degree()?;
    let dr = r.homogeneous_degree()?;
    if let (Some(a), Some(b)) = (dp, dr) {
        if a != b {
            return Err(Error::DegreeMismatch { expected: a, found: b });
        }
    }
    Ok(pair_unchecked(p, r))
}

/// Fischer pairing extended bilinearly over mixed degrees (distinct degrees
/// are orthogonal).
pub(crate) fn pair_unchecked<S: Scalar>(p: &BiPoly<GaussRat>, r: &BiPoly<S>) -> S {
    let mut acc = S::zero();
    for (k, c) in p.terms() {
        let rc = r.coeff(k.m, k.n);
        if rc.is_zero() {
            continue;
        }
        let w = Rat::from_integer(factorial(k.m) * factorial(k.n));
        acc = acc + rc.scale(&c.conj().mul_rat(&w));
    }
    acc
}

/// Applies `P* = Σ conj(p_{m,n}) ∂^{m+n}/∂z^m∂z̄^n` to `r`.
pub fn adjoint_apply<S: Scalar>(p: &BiPoly<GaussRat>, r: &BiPoly<S>) -> BiPoly<S> {
    let mut out = BiPoly::zero();
    for (k, c) in p.terms() {
        out = out + r.derivative(k.m, k.n).scale_gauss(&c.conj());
    }
    out
}

impl<S: Scalar> Add for BiPoly<S> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for (k, c) in o.terms {
            self.add_term(k, c);
        }
        self
    }
}

impl<S: Scalar> Sub for BiPoly<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<S: Scalar> Neg for BiPoly<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            terms: self.terms.into_iter().map(|(k, c)| (k, -c)).collect(),
        }
    }
}

impl<S: Scalar> Mul for BiPoly<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.mul_full(&o)
    }
}

impl<'a, S: Scalar> Mul<&'a BiPoly<S>> for &'a BiPoly<S> {
    type Output = BiPoly<S>;
    fn mul(self, o: &BiPoly<S>) -> BiPoly<S> {
        self.mul_full(o)
    }
}

impl<S: Scalar> fmt::Display for BiPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, c)| {
                let mut s = format!("{c:#}");
                if k.m > 0 {
                    s.push_str(&format!("*z^{}", k.m));
                }
                if k.n > 0 {
                    s.push_str(&format!("*zb^{}", k.n));
                }
                s
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<S: Scalar> fmt::Debug for BiPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Real-linear coordinates of a homogeneous degree-`d` polynomial:
/// `[Re c_{d,0}, Im c_{d,0}, Re c_{d-1,1}, …]`.
pub fn real_coords(p: &BiPoly<GaussRat>, d: u32) -> Vec<Rat> {
    let mut v = Vec::with_capacity(2 * (d as usize + 1));
    for m in (0..=d).rev() {
        let c = p.coeff(m, d - m);
        v.push(c.re);
        v.push(c.im);
    }
    v
}

/// [`real_coords`] over any coefficient ring.
pub fn real_coords_of<S: Scalar>(p: &BiPoly<S>, d: u32) -> Vec<S> {
    let mut v = Vec::with_capacity(2 * (d as usize + 1));
    for m in (0..=d).rev() {
        let c = p.coeff(m, d - m);
        v.push(c.re_part());
        v.push(c.im_part());
    }
    v
}

/// Inverse of [`real_coords`].
pub fn from_real_coords<S: Scalar>(v: &[S], d: u32) -> BiPoly<S> {
    let mut p = BiPoly::zero();
    let i = S::from_gauss(GaussRat::i());
    for (j, m) in (0..=d).rev().enumerate() {
        let c = v[2 * j].clone() + v[2 * j + 1].clone() * i.clone();
        p.add_term(Bideg::new(m, d - m), c);
    }
    p
}

/// Fischer weights `m!·n!` matching the layout of [`real_coords`]; the real
/// part of the Fischer pairing is the weighted dot product in these
/// coordinates.
pub fn real_weights(d: u32) -> Vec<Rat> {
    let mut w = Vec::with_capacity(2 * (d as usize + 1));
    for m in (0..=d).rev() {
        let f = Rat::from_integer(factorial(m) * factorial(d - m));
        w.push(f.clone());
        w.push(f);
    }
    w
}

//! Fischer division by the quadric `Q = z² + z̄²`.
//!
//! Every homogeneous `P` of degree `p ≥ 2` splits uniquely as `P = Q·A + R`
//! with `tr R = 0`, and the two pieces are orthogonal for the Fischer
//! pairing because multiplication by `Q` is adjoint to `tr`. Iterating the
//! division on quotients gives the chain decomposition whose remainders
//! carry the normalization conditions.

use std::collections::BTreeMap;
use std::sync::RwLock;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::{adjoint_apply, from_real_coords, BiPoly, Bideg};
use crate::scalar::{GaussRat, Rat, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct FischerSplit<S: Scalar> {
    pub quotient: BiPoly<S>,
    pub remainder: BiPoly<S>,
}

/// Iterated division `P_k = Q·P_{k+1} + R_{k+1}`, `P_0 = P`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainDecomposition<S: Scalar> {
    /// Degree of the decomposed polynomial.
    pub degree: u32,
    /// `P_1, …, P_K`; the last entry is the final quotient.
    pub quotients: Vec<BiPoly<S>>,
    /// `R_1, …, R_K`; `R_{k+1}` has nominal degree `degree − 2k`.
    pub remainders: Vec<BiPoly<S>>,
}

impl<S: Scalar> ChainDecomposition<S> {
    pub fn final_quotient(&self) -> BiPoly<S> {
        self.quotients.last().cloned().unwrap_or_default()
    }

    /// Nominal degree of `R_{k+1}`.
    pub fn remainder_degree(&self, k: usize) -> u32 {
        self.degree - 2 * k as u32
    }

    /// `R_1 + Q·R_2 + … + Q^{K−1}·R_K + Q^K·P_K`.
    pub fn reassemble(&self) -> BiPoly<S> {
        let q: BiPoly<S> = BiPoly::quadric();
        let mut qk = BiPoly::one();
        let mut out = BiPoly::zero();
        for r in &self.remainders {
            out = out + &qk * r;
            qk = &qk * &q;
        }
        out + &qk * &self.final_quotient()
    }
}

// A ↦ tr(Q·A) on homogeneous polynomials of degree d, in monomial
// coordinates ordered by descending power of z.
fn trace_q_inverse(d: u32) -> Matrix {
    static CACHE: RwLock<BTreeMap<u32, Matrix>> = RwLock::new(BTreeMap::new());
    if let Some(m) = CACHE.read().expect("division cache").get(&d) {
        return m.clone();
    }
    let q: BiPoly<GaussRat> = BiPoly::quadric();
    let n = d as usize + 1;
    let mut mat = Matrix::zeros(n, n);
    for (j, m) in (0..=d).rev().enumerate() {
        let img = (&q * &BiPoly::monomial(m, d - m, GaussRat::from_int(1))).trace();
        for (i, mm) in (0..=d).rev().enumerate() {
            mat[(i, j)] = img.coeff(mm, d - mm).re;
        }
    }
    let inv = mat
        .inverse()
        .unwrap_or_else(|| panic!("A -> tr(QA) singular in degree {d}"));
    CACHE.write().expect("division cache").insert(d, inv.clone());
    inv
}

/// Splits a homogeneous `P` as `Q·A + R` with `tr R = 0`.
///
/// For degree below 2 the quotient is zero and `R = P`.
pub fn fischer_divide<S: Scalar>(p: &BiPoly<S>) -> Result<FischerSplit<S>> {
    let Some(deg) = p.homogeneous_degree()? else {
        return Ok(FischerSplit { quotient: BiPoly::zero(), remainder: BiPoly::zero() });
    };
    divide_nominal(p, deg)
}

fn divide_nominal<S: Scalar>(p: &BiPoly<S>, deg: u32) -> Result<FischerSplit<S>> {
    if deg < 2 || p.is_zero() {
        return Ok(FischerSplit { quotient: BiPoly::zero(), remainder: p.clone() });
    }
    let d = deg - 2;
    let target = p.trace();
    let rhs: Vec<S> = (0..=d).rev().map(|m| target.coeff(m, d - m)).collect();
    let sol = trace_q_inverse(d).apply(&rhs);
    let mut quotient = BiPoly::zero();
    for (x, m) in sol.into_iter().zip((0..=d).rev()) {
        quotient.add_term(Bideg::new(m, d - m), x);
    }
    let remainder = p.clone() - &BiPoly::quadric() * &quotient;
    if !remainder.trace().is_zero() {
        return Err(Error::Internal(format!("Fischer remainder not trace-free in degree {deg}")));
    }
    Ok(FischerSplit { quotient, remainder })
}

/// Trace-free part `C_k` of `z^k`, for `k > 2`.
pub fn harmonic_power(k: u32) -> Result<BiPoly<GaussRat>> {
    static CACHE: RwLock<BTreeMap<u32, BiPoly<GaussRat>>> = RwLock::new(BTreeMap::new());
    if k <= 2 {
        return Err(Error::InvalidDegree(format!("harmonic power needs k > 2, got {k}")));
    }
    if let Some(c) = CACHE.read().expect("harmonic cache").get(&k) {
        return Ok(c.clone());
    }
    let c = fischer_divide(&BiPoly::monomial(k, 0, GaussRat::from_int(1)))?.remainder;
    CACHE.write().expect("harmonic cache").insert(k, c.clone());
    Ok(c)
}

/// Repeated division of a homogeneous polynomial until the quotient is zero
/// or of degree below 2.
pub fn chain_decompose<S: Scalar>(p: &BiPoly<S>) -> Result<ChainDecomposition<S>> {
    let deg = p.homogeneous_degree()?.unwrap_or(0);
    chain_decompose_nominal(p, deg)
}

/// As [`chain_decompose`], for a polynomial known to be homogeneous of
/// degree `deg` (possibly zero).
pub fn chain_decompose_nominal<S: Scalar>(p: &BiPoly<S>, deg: u32) -> Result<ChainDecomposition<S>> {
    if !p.is_zero() && p.homogeneous_degree()? != Some(deg) {
        return Err(Error::DegreeMismatch { expected: deg, found: p.degree().unwrap_or(0) });
    }
    let mut quotients = Vec::new();
    let mut remainders = Vec::new();
    let mut current = p.clone();
    let mut d = deg;
    loop {
        let split = divide_nominal(&current, d)?;
        remainders.push(split.remainder);
        quotients.push(split.quotient.clone());
        if split.quotient.is_zero() || d < 4 {
            break;
        }
        current = split.quotient;
        d -= 2;
    }
    Ok(ChainDecomposition { degree: deg, quotients, remainders })
}

/// Scalar conditions `C_d*(R) = 0`, `C̄_d*(R) = 0` on every chain remainder
/// of nominal degree `d > 2`, each tagged with its chain depth.
pub fn chain_conditions<S: Scalar>(p: &BiPoly<S>, deg: u32) -> Result<Vec<(usize, S)>> {
    let chain = chain_decompose_nominal(p, deg)?;
    let mut out = Vec::new();
    for (k, r) in chain.remainders.iter().enumerate() {
        let d = chain.remainder_degree(k);
        if d <= 2 {
            continue;
        }
        let c = harmonic_power(d)?;
        for h in [c.conj(), c] {
            out.push((k, adjoint_apply(&h, r).coeff(0, 0)));
        }
    }
    Ok(out)
}

/// Membership in the chain normalization space: every remainder of degree
/// `d > 2` is annihilated by `C_d*` and `C̄_d*` (and by `tr`, automatically).
pub fn in_chain_space<S: Scalar>(p: &BiPoly<S>) -> Result<bool> {
    let deg = p.homogeneous_degree()?.unwrap_or(0);
    Ok(chain_conditions(p, deg)?.iter().all(|(_, c)| c.is_zero()))
}

/// Real basis (in [`crate::poly::real_coords`] layout) of the degree-`deg`
/// chain normalization space, computed as the joint kernel of the chain
/// conditions.
pub fn chain_space_basis(deg: u32) -> Result<Vec<Vec<Rat>>> {
    let dim = 2 * (deg as usize + 1);
    let mut cols = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut e = vec![GaussRat::zero(); dim];
        e[j] = GaussRat::from_int(1);
        let p: BiPoly<GaussRat> = from_real_coords(&e, deg);
        let conds = chain_conditions(&p, deg)?;
        let col: Vec<Rat> = conds.into_iter().flat_map(|(_, c)| [c.re, c.im]).collect();
        cols.push(col);
    }
    let rows = cols.first().map_or(0, Vec::len);
    if rows == 0 {
        return Ok((0..dim)
            .map(|j| {
                let mut v = vec![Rat::zero(); dim];
                v[j] = Rat::from_integer(1.into());
                v
            })
            .collect());
    }
    Ok(Matrix::from_columns(rows, &cols).nullspace())
}

/// The `Q`-multiple part of a cubic: `Q·A` where `a3 = Q·A + R`,
/// `tr R = 0`. Vanishes exactly when `a3 ∈ span{C₃, C̄₃}`.
pub fn compute_w(a3: &BiPoly<GaussRat>) -> Result<BiPoly<GaussRat>> {
    match a3.homogeneous_degree()? {
        None => Ok(BiPoly::zero()),
        Some(3) => {
            let split = fischer_divide(a3)?;
            Ok(&BiPoly::quadric() * &split.quotient)
        }
        Some(d) => Err(Error::DegreeMismatch { expected: 3, found: d }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::fischer_pair;

    type P = BiPoly<GaussRat>;

    fn g(p: i64, q: i64) -> GaussRat {
        GaussRat::from_ratio(p, q)
    }

    #[test]
    fn divide_cubic() {
        let s = fischer_divide(&P::monomial(3, 0, g(1, 1))).unwrap();
        assert_eq!(s.quotient, P::monomial(1, 0, g(3, 4)));
        assert_eq!(s.remainder, P::from_terms([((3, 0), g(1, 4)), ((1, 2), g(-3, 4))]));
    }

    #[test]
    fn divide_quartic() {
        let s = fischer_divide(&P::monomial(4, 0, g(1, 1))).unwrap();
        assert_eq!(s.quotient, P::from_terms([((2, 0), g(7, 8)), ((0, 2), g(-1, 8))]));
        assert_eq!(
            s.remainder,
            P::from_terms([((4, 0), g(1, 8)), ((2, 2), g(-3, 4)), ((0, 4), g(1, 8))])
        );
    }

    #[test]
    fn divide_quadric_and_low_degree() {
        let s = fischer_divide(&P::quadric()).unwrap();
        assert_eq!(s.quotient, P::one());
        assert!(s.remainder.is_zero());
        let z = P::z();
        let s = fischer_divide(&z).unwrap();
        assert!(s.quotient.is_zero());
        assert_eq!(s.remainder, z);
        assert!(fischer_divide(&(P::z() + P::quadric())).is_err());
    }

    #[test]
    fn divide_zzbar() {
        // tr kills z·z̄, so it is its own remainder
        let zzb = P::monomial(1, 1, g(1, 1));
        let s = fischer_divide(&zzb).unwrap();
        assert!(s.quotient.is_zero());
        assert_eq!(s.remainder, zzb);
    }

    #[test]
    fn harmonic_powers() {
        assert_eq!(harmonic_power(3).unwrap(), P::from_terms([((3, 0), g(1, 4)), ((1, 2), g(-3, 4))]));
        assert!(harmonic_power(2).is_err());
        assert!(harmonic_power(0).is_err());
        let c5 = harmonic_power(5).unwrap();
        assert!(c5.trace().is_zero());
    }

    #[test]
    fn chain_examples() {
        let q2 = &P::quadric() * &P::quadric();
        let ch = chain_decompose(&q2).unwrap();
        assert_eq!(ch.remainders, vec![P::zero(), P::zero()]);
        assert_eq!(ch.final_quotient(), P::one());

        let ch = chain_decompose(&P::monomial(3, 0, g(1, 1))).unwrap();
        assert_eq!(ch.remainders, vec![harmonic_power(3).unwrap()]);
        assert_eq!(ch.final_quotient(), P::monomial(1, 0, g(3, 4)));

        let c4 = harmonic_power(4).unwrap();
        let ch = chain_decompose(&c4).unwrap();
        assert_eq!(ch.remainders, vec![c4.clone()]);
        assert!(ch.final_quotient().is_zero());
        assert_eq!(ch.reassemble(), c4);
    }

    #[test]
    fn chain_membership() {
        let c3 = harmonic_power(3).unwrap();
        assert!(!in_chain_space(&c3).unwrap());
        assert!(in_chain_space(&P::zero()).unwrap());
        assert!(in_chain_space(&P::monomial(1, 1, g(1, 1))).unwrap());
        assert!(in_chain_space(&(&P::quadric() * &P::zbar())).unwrap());
    }

    #[test]
    fn chain_space_dimensions() {
        // Odd degree: every harmonic layer is killed, leaving Q^k·{z, z̄}.
        // Even degree: C_d is self-conjugate, so each harmonic layer of
        // degree ≥ 4 keeps one complex direction.
        for d in 3..=8u32 {
            let expected = if d % 2 == 1 { 4 } else { d as usize + 4 };
            assert_eq!(chain_space_basis(d).unwrap().len(), expected, "degree {d}");
        }
    }

    #[test]
    fn w_examples() {
        let w = compute_w(&P::monomial(3, 0, g(1, 1))).unwrap();
        assert_eq!(w, P::from_terms([((3, 0), g(3, 4)), ((1, 2), g(3, 4))]));
        let c3 = harmonic_power(3).unwrap();
        assert!(fischer_pair(&w, &c3).unwrap().is_zero());
        assert!(fischer_pair(&w, &c3.conj()).unwrap().is_zero());
        assert!(compute_w(&c3).unwrap().is_zero());
        let zq = &P::z() * &P::quadric();
        assert_eq!(compute_w(&zq).unwrap(), zq);
        assert!(compute_w(&P::quadric()).is_err());
    }
}

//! Surfaces `w = Q(z, z̄) + Σ a_{m,n} z^m z̄^n` and formal maps
//! `(z, w) ↦ (z + Σ f_{k,l} z^k w^l, w + Σ g_{k,l} z^k w^l)`.
//!
//! Everything is truncated at a total `(z, z̄)`-degree `N`. A map term
//! `z^k w^l` restricted to a surface starts in degree `k + 2l`, so maps are
//! truncated by that weighted degree.


use crate::error::{Error, Result};
use crate::poly::{BiPoly, Bideg};
use crate::scalar::{GaussRat, Scalar};

/// Weighted degree of `z^k w^l` on the graph.
pub fn weight(k: Bideg) -> u32 {
    k.m + 2 * k.n
}

fn truncate_weighted<S: Scalar>(p: &BiPoly<S>, bound: u32) -> BiPoly<S> {
    p.filter(|k| weight(k) <= bound)
}

fn mul_weighted<S: Scalar>(a: &BiPoly<S>, b: &BiPoly<S>, bound: u32) -> BiPoly<S> {
    truncate_weighted(&(a * b), bound)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Surface<S: Scalar = GaussRat> {
    truncation: u32,
    coeffs: BiPoly<S>,
}

impl<S: Scalar> Surface<S> {
    /// Coefficients must sit in degrees `3..=truncation`.
    pub fn new(truncation: u32, coeffs: BiPoly<S>) -> Result<Self> {
        if truncation < 3 {
            return Err(Error::InvalidDegree(format!("truncation {truncation} < 3")));
        }
        if let Some((k, _)) = coeffs.terms().find(|(k, _)| k.degree() < 3 || k.degree() > truncation) {
            return Err(Error::InvalidDegree(format!(
                "coefficient a_{{{},{}}} outside degrees 3..={truncation}",
                k.m, k.n
            )));
        }
        Ok(Self { truncation, coeffs })
    }

    pub fn model(truncation: u32) -> Self {
        Self { truncation: truncation.max(3), coeffs: BiPoly::zero() }
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    /// `a_{≥3}` as a polynomial.
    pub fn coeffs(&self) -> &BiPoly<S> {
        &self.coeffs
    }

    /// `a_T`, the homogeneous degree-`T` part.
    pub fn component(&self, t: u32) -> BiPoly<S> {
        self.coeffs.homogeneous_component(t)
    }

    /// Same surface cut at a lower order.
    pub fn truncated(&self, n: u32) -> Result<Self> {
        Self::new(n, self.coeffs.truncate(n))
    }

    pub fn lift<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Surface<T> {
        Surface { truncation: self.truncation, coeffs: self.coeffs.map_coeffs(f) }
    }
}

impl Surface<GaussRat> {
    pub fn to_param<T: Scalar>(&self) -> Surface<T> {
        self.lift(|c| T::from_gauss(c.clone()))
    }
}

/// `h = Q + a_{≥3}`, the graphing function of `M`.
pub fn graph_series<S: Scalar>(m: &Surface<S>) -> BiPoly<S> {
    BiPoly::quadric() + m.coeffs.clone()
}

/// Formal map of shape `(z + f̃, w + g̃)` with `f̃, g̃` supported on
/// `z^k w^l`, `k + l ≥ 2`. Exponents are stored as `(k, l)` in a [`BiPoly`].
#[derive(Clone, Debug, PartialEq)]
pub struct FormalMap<S: Scalar = GaussRat> {
    truncation: u32,
    f: BiPoly<S>,
    g: BiPoly<S>,
}

impl<S: Scalar> FormalMap<S> {
    pub fn new(truncation: u32, f: BiPoly<S>, g: BiPoly<S>) -> Result<Self> {
        for (name, p) in [("f", &f), ("g", &g)] {
            if let Some((k, _)) = p.terms().find(|(k, _)| k.m + k.n < 2) {
                return Err(Error::InvalidDegree(format!(
                    "{name}_{{{},{}}}: only terms with k + l >= 2 are allowed",
                    k.m, k.n
                )));
            }
        }
        Ok(Self { truncation, f: truncate_weighted(&f, truncation), g: truncate_weighted(&g, truncation) })
    }

    pub fn identity(truncation: u32) -> Self {
        Self { truncation, f: BiPoly::zero(), g: BiPoly::zero() }
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    /// Higher-order part of the first component.
    pub fn f(&self) -> &BiPoly<S> {
        &self.f
    }

    /// Higher-order part of the second component.
    pub fn g(&self) -> &BiPoly<S> {
        &self.g
    }

    pub fn is_identity(&self) -> bool {
        self.f.is_zero() && self.g.is_zero()
    }

    /// Terms belonging to the degree-`t` block: `f_{k,l}` with
    /// `k + 2l = t − 1` and `g_{k,l}` with `k + 2l = t`.
    pub fn block(&self, t: u32) -> (BiPoly<S>, BiPoly<S>) {
        (self.f.filter(|k| weight(k) + 1 == t), self.g.filter(|k| weight(k) == t))
    }

    /// The full first component `z + f̃`.
    pub fn f_full(&self) -> BiPoly<S> {
        BiPoly::z() + self.f.clone()
    }

    /// The full second component `w + g̃`.
    pub fn g_full(&self) -> BiPoly<S> {
        BiPoly::zbar() + self.g.clone()
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> FormalMap<T> {
        FormalMap { truncation: self.truncation, f: self.f.map_coeffs(&f), g: self.g.map_coeffs(&f) }
    }

    pub fn try_map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> Result<T>) -> Result<FormalMap<T>> {
        Ok(FormalMap {
            truncation: self.truncation,
            f: self.f.try_map_coeffs(&f)?,
            g: self.g.try_map_coeffs(&f)?,
        })
    }

    pub fn with_truncation(&self, truncation: u32) -> Self {
        Self { truncation, f: truncate_weighted(&self.f, truncation), g: truncate_weighted(&self.g, truncation) }
    }

    /// Adds terms to the higher-order parts.
    pub fn add_terms(&self, f: &BiPoly<S>, g: &BiPoly<S>) -> Result<Self> {
        Self::new(self.truncation, self.f.clone() + f.clone(), self.g.clone() + g.clone())
    }

    /// `self ∘ inner`, i.e. `(z, w) ↦ self(inner(z, w))`, truncated at the
    /// smaller weighted order.
    pub fn compose(&self, inner: &FormalMap<S>) -> FormalMap<S> {
        let n = self.truncation.min(inner.truncation);
        let fz = inner.f_full();
        let gw = inner.g_full();
        let mul = |a: &BiPoly<S>, b: &BiPoly<S>| mul_weighted(a, b, n);
        let tr = |p: &BiPoly<S>, b: u32| truncate_weighted(p, b);
        let f = self.f.substitute_with(&fz, &gw, mul, tr, n) + inner.f.clone();
        let g = self.g.substitute_with(&fz, &gw, mul, tr, n) + inner.g.clone();
        FormalMap { truncation: n, f: truncate_weighted(&f, n), g: truncate_weighted(&g, n) }
    }
}

/// `(f(z, h), g(z, h))` as polynomials in `(z, z̄)`, exact to degree `bound`.
pub fn eval_map_on_graph<S: Scalar>(
    phi: &FormalMap<S>,
    h: &BiPoly<S>,
    bound: u32,
) -> (BiPoly<S>, BiPoly<S>) {
    let z = BiPoly::<S>::z();
    let f = phi.f_full().substitute(&z, h, bound);
    let g = phi.g_full().substitute(&z, h, bound);
    (f, g)
}

/// Given `u = z + O(2)`, returns `(ζ, ζ̄)` with `u(ζ, ζ̄) = z'` up to
/// degree `bound`, where `ζ` is a series in `(z', z̄')`.
pub fn invert_2d_jet<S: Scalar>(u: &BiPoly<S>, bound: u32) -> Result<(BiPoly<S>, BiPoly<S>)> {
    let low = u.truncate(1);
    if low != BiPoly::z() {
        return Err(Error::NonUnitLinearPart);
    }
    let z = BiPoly::<S>::z();
    let nonlinear = u.clone() - z.clone();
    let mut zeta = z.truncate(bound);
    // each pass fixes one more degree
    for _ in 1..bound {
        let next = z.clone() - nonlinear.substitute(&zeta, &zeta.conj(), bound);
        let next = next.truncate(bound);
        if next == zeta {
            break;
        }
        zeta = next;
    }
    let conj = zeta.conj();
    Ok((zeta, conj))
}

/// The image of `M` under `φ`, re-graphed over the new `z'` coordinate.
pub fn push_forward<S: Scalar>(m: &Surface<S>, phi: &FormalMap<S>) -> Result<Surface<S>> {
    let n = m.truncation;
    if phi.truncation < n {
        return Err(Error::InvalidDegree(format!(
            "map truncation {} below surface truncation {n}",
            phi.truncation
        )));
    }
    let h = graph_series(m);
    let (u, v) = eval_map_on_graph(phi, &h, n);
    let (zeta, zeta_bar) = invert_2d_jet(&u, n)?;
    let w_new = v.substitute(&zeta, &zeta_bar, n);
    let a_new = w_new - BiPoly::quadric();
    let low = a_new.truncate(2);
    if !low.is_zero() {
        let quad = (low + BiPoly::quadric()).homogeneous_component(2);
        return Err(Error::LeftClass { found: format!("{} terms", quad.len()) });
    }
    Surface::new(n, a_new)
}

/// `g(z, h) − Q(f, f̄) − a'(f, f̄)` with `w = h(z, z̄)`, cut at `bound`.
/// Vanishes exactly when `φ` maps `M` into `M'` to that order.
pub fn transform_residual<S: Scalar>(
    m: &Surface<S>,
    phi: &FormalMap<S>,
    target: &Surface<S>,
    bound: u32,
) -> BiPoly<S> {
    let h = graph_series(m);
    let (f, g) = eval_map_on_graph(phi, &h, bound);
    let fbar = f.conj();
    let rhs = graph_series(target).substitute(&f, &fbar, bound);
    (g - rhs).truncate(bound)
}

/// Convenience constructor from `((k, l), c)` lists.
pub fn map_from_terms<S: Scalar>(
    truncation: u32,
    f: impl IntoIterator<Item = ((u32, u32), S)>,
    g: impl IntoIterator<Item = ((u32, u32), S)>,
) -> Result<FormalMap<S>> {
    FormalMap::new(truncation, BiPoly::from_terms(f), BiPoly::from_terms(g))
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = BiPoly<GaussRat>;

    fn g(p: i64, q: i64) -> GaussRat {
        GaussRat::from_ratio(p, q)
    }

    fn q() -> P {
        P::quadric()
    }

    #[test]
    fn graph_examples() {
        assert_eq!(graph_series(&Surface::<GaussRat>::model(5)), q());
        let m = Surface::new(4, P::monomial(3, 0, g(1, 1))).unwrap();
        assert_eq!(graph_series(&m), q() + P::monomial(3, 0, g(1, 1)));
        let m = Surface::new(4, P::monomial(2, 1, GaussRat::i())).unwrap();
        assert_eq!(graph_series(&m), q() + P::monomial(2, 1, GaussRat::i()));
        assert!(Surface::new(4, P::monomial(2, 0, g(1, 1))).is_err());
        assert!(Surface::new(4, P::monomial(5, 0, g(1, 1))).is_err());
    }

    #[test]
    fn eval_examples() {
        let h = q();
        let (u, v) = eval_map_on_graph(&FormalMap::<GaussRat>::identity(4), &h, 4);
        assert_eq!((u, v), (P::z(), q()));
        let phi = map_from_terms(4, [((1, 1), g(1, 1))], []).unwrap();
        let (u, v) = eval_map_on_graph(&phi, &h, 4);
        assert_eq!(u, P::z() + &P::z() * &q());
        assert_eq!(v, q());
        let phi = map_from_terms(4, [], [((0, 2), g(1, 1))]).unwrap();
        let (_, v) = eval_map_on_graph(&phi, &h, 4);
        assert_eq!(v, q() + &q() * &q());
    }

    #[test]
    fn map_shape_is_enforced() {
        assert!(map_from_terms::<GaussRat>(4, [((0, 1), g(1, 1))], []).is_err());
        assert!(map_from_terms::<GaussRat>(4, [], [((1, 0), g(1, 1))]).is_err());
    }

    #[test]
    fn invert_examples() {
        let (zeta, _) = invert_2d_jet(&P::z(), 3).unwrap();
        assert_eq!(zeta, P::z());
        let u = P::z() + P::monomial(2, 0, g(1, 1));
        let (zeta, _) = invert_2d_jet(&u, 3).unwrap();
        assert_eq!(zeta, P::from_terms([((1, 0), g(1, 1)), ((2, 0), g(-1, 1)), ((3, 0), g(2, 1))]));
        let u = P::z() + P::monomial(1, 1, g(1, 1));
        let (zeta, zb) = invert_2d_jet(&u, 2).unwrap();
        assert_eq!(zeta, P::from_terms([((1, 0), g(1, 1)), ((1, 1), g(-1, 1))]));
        assert_eq!(u.substitute(&zeta, &zb, 2), P::z());
        assert!(matches!(invert_2d_jet(&P::z().scale_gauss(&g(2, 1)), 3), Err(Error::NonUnitLinearPart)));
        assert!(matches!(invert_2d_jet(&(P::z() + P::zbar()), 3), Err(Error::NonUnitLinearPart)));
    }

    #[test]
    fn push_forward_examples() {
        let m = Surface::new(5, P::from_terms([((3, 0), g(1, 1)), ((2, 2), GaussRat::i())])).unwrap();
        assert_eq!(push_forward(&m, &FormalMap::identity(5)).unwrap(), m);

        let phi = map_from_terms(6, [((1, 1), g(1, 1))], [((0, 2), g(2, 1))]).unwrap();
        let out = push_forward(&Surface::<GaussRat>::model(6), &phi).unwrap();
        let expected = P::from_terms([((6, 0), g(-1, 1)), ((4, 2), g(-3, 1)), ((2, 4), g(-3, 1)), ((0, 6), g(-1, 1))]);
        assert_eq!(out.coeffs(), &expected);

        let phi = map_from_terms(4, [], [((0, 2), g(1, 1))]).unwrap();
        let out = push_forward(&Surface::<GaussRat>::model(4), &phi).unwrap();
        assert_eq!(out.coeffs(), &P::from_terms([((4, 0), g(1, 1)), ((2, 2), g(2, 1)), ((0, 4), g(1, 1))]));
    }

    #[test]
    fn push_forward_rejects_quadratic_change() {
        let phi = map_from_terms(4, [], [((2, 0), g(1, 1))]).unwrap();
        assert!(matches!(push_forward(&Surface::<GaussRat>::model(4), &phi), Err(Error::LeftClass { .. })));
    }

    #[test]
    fn residual_examples() {
        let m = Surface::new(5, P::monomial(4, 1, g(3, 2))).unwrap();
        assert!(transform_residual(&m, &FormalMap::identity(5), &m, 5).is_zero());
        let phi = map_from_terms(6, [((1, 1), g(1, 1))], [((0, 2), g(2, 1))]).unwrap();
        let model = Surface::<GaussRat>::model(6);
        let image = push_forward(&model, &phi).unwrap();
        assert!(transform_residual(&model, &phi, &image, 6).is_zero());
        let q3 = &(&q() * &q()) * &q();
        assert_eq!(transform_residual(&model, &phi, &model, 6), -q3);
    }
}

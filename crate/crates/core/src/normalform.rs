//! Degree-by-degree normalization.
//!
//! At degree `T` the unknown map coefficients enter the transformation
//! equation only through the real-linear block operator
//!
//! ```text
//! L_T(f, g) = g_T(z, Q) − 2·Re{Q_z · f_T(z, Q)},   Q_z = 2z,
//! ```
//!
//! where `g_T` collects `g_{k,l}` with `k + 2l = T` and `f_T` collects
//! `f_{k,l}` with `k + 2l = T − 1` (both with `k + l ≥ 2`). Everything else
//! in degree `T` is known from lower degrees. The solver projects the known
//! part onto a normal space complementary to `Im L_T`, solves for the block,
//! and turns `ker L_T` into free real parameters. Parameters are fixed later
//! by the resonance conditions built from the invariant cubic `W`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::fischer::{chain_decompose_nominal, chain_space_basis, compute_w, in_chain_space};
use crate::linalg::{weighted_dot, Matrix};
use crate::poly::{
    adjoint_apply, from_real_coords, real_coords, real_coords_of, real_weights, BiPoly, Bideg,
};
use crate::scalar::{GaussRat, ParamScalar, Rat, Scalar};
use crate::surface::{push_forward, transform_residual, weight, FormalMap, Surface};

pub const DEFAULT_PARAM_DEGREE_CAP: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Fischer-orthogonal complement of `Im L_T`.
    Ortho,
    /// Chain-remainder conditions on the normalized coefficient.
    Chain,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ortho => "ortho",
            Strategy::Chain => "chain",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ortho" => Ok(Strategy::Ortho),
            "chain" => Ok(Strategy::Chain),
            _ => Err(Error::Parse(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resonance {
    /// Kernel parameters are consumed by `W*`-conditions on chain quotients.
    WChain,
    /// Kernel parameters are left free and reported.
    Off,
}

impl Resonance {
    pub fn name(self) -> &'static str {
        match self {
            Resonance::WChain => "w-chain",
            Resonance::Off => "off",
        }
    }
}

impl std::str::FromStr for Resonance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w-chain" => Ok(Resonance::WChain),
            "off" => Ok(Resonance::Off),
            _ => Err(Error::Parse(format!("unknown resonance rule {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Component {
    F,
    G,
}

/// One real coordinate of the unknown block: the real or imaginary part of
/// `f_{k,l}` or `g_{k,l}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Unknown {
    pub component: Component,
    pub k: u32,
    pub l: u32,
    pub imaginary: bool,
}

impl fmt::Display for Unknown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.component {
            Component::F => 'f',
            Component::G => 'g',
        };
        let part = if self.imaginary { "Im" } else { "Re" };
        write!(f, "{part} {c}_{{{},{}}}", self.k, self.l)
    }
}

impl Unknown {
    fn unit(&self) -> GaussRat {
        if self.imaginary {
            GaussRat::i()
        } else {
            GaussRat::one()
        }
    }

    /// `L_T` applied to this unit unknown.
    fn image(&self) -> BiPoly<GaussRat> {
        let q = BiPoly::<GaussRat>::quadric();
        let base = &BiPoly::monomial(self.k, 0, self.unit()) * &q.pow_trunc(self.l, u32::MAX);
        match self.component {
            Component::G => base,
            Component::F => {
                let t = &BiPoly::monomial(1, 0, GaussRat::from_int(2)) * &base;
                -(t.conj() + t)
            }
        }
    }
}

/// The real-linear operator `L_T` together with the subspaces the solver
/// needs.
#[derive(Clone, Debug)]
pub struct DegreeBlock {
    pub degree: u32,
    /// Column order: all `g` unknowns, then all `f` unknowns, each in
    /// graded lexicographic order of `(k, l)`, real part before imaginary.
    pub unknowns: Vec<Unknown>,
    /// `2(T+1) × unknowns` matrix in [`real_coords`] layout.
    pub matrix: Matrix,
    pub pivots: Vec<usize>,
    pub image_basis: Vec<Vec<Rat>>,
    /// Basis of the Fischer-orthogonal complement of the image.
    pub complement_basis: Vec<Vec<Rat>>,
    pub kernel_basis: Vec<Vec<Rat>>,
}

fn block_unknowns(t: u32) -> Vec<Unknown> {
    let mut g_keys = Vec::new();
    let mut f_keys = Vec::new();
    for l in 0..=t / 2 {
        let k = t - 2 * l;
        if k + l >= 2 {
            g_keys.push(Bideg::new(k, l));
        }
        if t > 2 * l {
            let k = t - 1 - 2 * l;
            if k + l >= 2 {
                f_keys.push(Bideg::new(k, l));
            }
        }
    }
    g_keys.sort();
    f_keys.sort();
    let mut out = Vec::new();
    for (component, keys) in [(Component::G, g_keys), (Component::F, f_keys)] {
        for key in keys {
            for imaginary in [false, true] {
                out.push(Unknown { component, k: key.m, l: key.n, imaginary });
            }
        }
    }
    out
}

/// Assembles `L_T` column by column from unit unknowns.
pub fn build_block(t: u32) -> Result<Arc<DegreeBlock>> {
    static CACHE: RwLock<BTreeMap<u32, Arc<DegreeBlock>>> = RwLock::new(BTreeMap::new());
    if t < 3 {
        return Err(Error::InvalidDegree(format!("block degree {t} < 3")));
    }
    if let Some(b) = CACHE.read().expect("block cache").get(&t) {
        return Ok(b.clone());
    }
    let unknowns = block_unknowns(t);
    let dim = 2 * (t as usize + 1);
    let cols: Vec<Vec<Rat>> = unknowns.iter().map(|u| real_coords(&u.image(), t)).collect();
    let matrix = Matrix::from_columns(dim, &cols);
    let (_, pivots) = matrix.rref();
    let image_basis: Vec<Vec<Rat>> = pivots.iter().map(|&j| cols[j].clone()).collect();
    let weights = real_weights(t);
    let complement_basis = if image_basis.is_empty() {
        let id = Matrix::identity(dim);
        (0..dim).map(|j| id.column(j)).collect()
    } else {
        Matrix::from_rows(&image_basis, dim).scale_columns(&weights).nullspace()
    };
    let kernel_basis = matrix.nullspace();
    let block = Arc::new(DegreeBlock { degree: t, unknowns, matrix, pivots, image_basis, complement_basis, kernel_basis });
    CACHE.write().expect("block cache").insert(t, block.clone());
    Ok(block)
}

impl Matrix {
    fn scale_columns(&self, w: &[Rat]) -> Matrix {
        self.transpose().scale_rows(w).transpose()
    }
}

impl DegreeBlock {
    pub fn target_dim(&self) -> usize {
        2 * (self.degree as usize + 1)
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Evaluates `L_T` on a real unknown vector.
    pub fn apply<S: Scalar>(&self, x: &[S]) -> BiPoly<S> {
        from_real_coords(&self.matrix.apply(x), self.degree)
    }

    /// Splits a block of map coefficients into the real unknown vector.
    pub fn unknown_vector<S: Scalar>(&self, f: &BiPoly<S>, g: &BiPoly<S>) -> Vec<S> {
        self.unknowns
            .iter()
            .map(|u| {
                let c = match u.component {
                    Component::F => f.coeff(u.k, u.l),
                    Component::G => g.coeff(u.k, u.l),
                };
                if u.imaginary {
                    c.im_part()
                } else {
                    c.re_part()
                }
            })
            .collect()
    }

    /// Inverse of [`Self::unknown_vector`].
    pub fn block_terms<S: Scalar>(&self, x: &[S]) -> (BiPoly<S>, BiPoly<S>) {
        let mut f = BiPoly::zero();
        let mut g = BiPoly::zero();
        for (u, v) in self.unknowns.iter().zip(x) {
            let c = v.scale(&u.unit());
            let key = Bideg::new(u.k, u.l);
            match u.component {
                Component::F => f.add_term(key, c),
                Component::G => g.add_term(key, c),
            }
        }
        (f, g)
    }
}

/// Linear data for splitting a degree-`T` vector as `v = L_T x + a'` with
/// `a'` in the chosen normal space.
#[derive(Clone, Debug)]
pub struct Projector {
    pub degree: u32,
    pub strategy: Strategy,
    /// `y = coeffs · v` gives the image coordinates along the pivot columns.
    coeffs: Matrix,
    pivots: Vec<usize>,
    image: Matrix,
    /// Dimension of the normal space actually used.
    pub normal_dim: usize,
    /// Dimension of `Im L_T ∩ S` (chain strategy only; zero for ortho).
    pub overlap_dim: usize,
    /// Whether `Im L_T + S` is the whole degree-`T` space.
    pub spans: bool,
}

impl Projector {
    pub fn new(block: &DegreeBlock, strategy: Strategy) -> Result<Self> {
        let dim = block.target_dim();
        let weights = real_weights(block.degree);
        let r = block.rank();
        let (span_cols, normal_dim, overlap_dim) = match strategy {
            Strategy::Ortho => (block.image_basis.clone(), dim - r, 0),
            Strategy::Chain => {
                let s = chain_space_basis(block.degree)?;
                // pairs (y, c) with B·y = S·c
                let mut joint = block.image_basis.clone();
                joint.extend(s.iter().map(|c| c.iter().map(|x| -x.clone()).collect()));
                let overlap: Vec<Vec<Rat>> = if joint.is_empty() {
                    Vec::new()
                } else {
                    Matrix::from_columns(dim, &joint)
                        .nullspace()
                        .into_iter()
                        .map(|pair| combine(&s, &pair[r..]))
                        .collect()
                };
                // part of S orthogonal to the overlap
                let s_reduced: Vec<Vec<Rat>> = if overlap.is_empty() || s.is_empty() {
                    s.clone()
                } else {
                    let rows: Vec<Vec<Rat>> = overlap
                        .iter()
                        .map(|k| s.iter().map(|c| weighted_dot(k, c, &weights)).collect())
                        .collect();
                    Matrix::from_rows(&rows, s.len())
                        .nullspace()
                        .into_iter()
                        .map(|c| combine(&s, &c))
                        .collect()
                };
                let mut cols = block.image_basis.clone();
                cols.extend(s_reduced.iter().cloned());
                let n = s_reduced.len();
                (cols, n, overlap.len())
            }
        };
        let spans = span_cols.len() == dim;
        let image = Matrix::from_columns(dim, &block.image_basis);
        let coeffs = if span_cols.is_empty() {
            Matrix::zeros(0, dim)
        } else {
            let m = Matrix::from_columns(dim, &span_cols);
            let mt_d = m.transpose().scale_columns(&weights);
            let gram = mt_d.mul(&m);
            let inv = gram
                .inverse()
                .ok_or_else(|| Error::Internal(format!("singular Gram matrix in degree {}", block.degree)))?;
            let full = inv.mul(&mt_d);
            // keep only the rows belonging to image columns
            let mut top = Matrix::zeros(r, dim);
            for i in 0..r {
                for j in 0..dim {
                    top[(i, j)] = full[(i, j)].clone();
                }
            }
            top
        };
        Ok(Self {
            degree: block.degree,
            strategy,
            coeffs,
            pivots: block.pivots.clone(),
            image,
            normal_dim,
            overlap_dim,
            spans,
        })
    }

    /// Returns `(x, a')` with `v + L_T x = a'`, free unknowns zero.
    pub fn split<S: Scalar>(&self, v: &BiPoly<S>, n_unknowns: usize) -> (Vec<S>, BiPoly<S>) {
        let coords = real_coords_of(v, self.degree);
        let y = self.coeffs.apply(&coords);
        let img = self.image.apply(&y);
        let normal: Vec<S> = coords.into_iter().zip(img).map(|(a, b)| a - b).collect();
        let mut x = vec![S::zero(); n_unknowns];
        for (yi, &p) in y.into_iter().zip(&self.pivots) {
            x[p] = -yi;
        }
        (x, from_real_coords(&normal, self.degree))
    }
}

fn combine(basis: &[Vec<Rat>], c: &[Rat]) -> Vec<Rat> {
    let n = basis.first().map_or(0, Vec::len);
    let mut out = vec![Rat::zero(); n];
    for (b, x) in basis.iter().zip(c) {
        if x.is_zero() {
            continue;
        }
        for (o, bi) in out.iter_mut().zip(b) {
            *o += bi * x;
        }
    }
    out
}

/// Whether `p` (homogeneous, degree ≥ 3) lies in the normal space of the
/// given strategy.
pub fn in_normal_space<S: Scalar>(p: &BiPoly<S>, strategy: Strategy) -> Result<bool> {
    let Some(t) = p.homogeneous_degree()? else {
        return Ok(true);
    };
    match strategy {
        Strategy::Chain => in_chain_space(p),
        Strategy::Ortho => {
            if t < 3 {
                return Err(Error::InvalidDegree(format!("normal space needs degree >= 3, got {t}")));
            }
            let block = build_block(t)?;
            let coords = real_coords_of(p, t);
            let weighted: Vec<S> = coords
                .iter()
                .zip(real_weights(t))
                .map(|(c, w)| c.scale(&GaussRat::real(w)))
                .collect();
            Ok(block.image_basis.iter().all(|b| {
                let mut acc = S::zero();
                for (x, c) in b.iter().zip(&weighted) {
                    if !x.is_zero() {
                        acc = acc + c.scale(&GaussRat::real(x.clone()));
                    }
                }
                acc.is_zero()
            }))
        }
    }
}

/// Outcome of the degree-2 consistency check.
#[derive(Clone, Debug, PartialEq)]
pub struct GateVerdict {
    pub accepted: bool,
    /// The relation that fails, when rejected.
    pub violated: Option<String>,
    /// Model automorphism `(z, w) ↦ (z/f10, w/g01)` that brings an accepted
    /// pair to `f10 = g01 = 1`.
    pub normalizer: Option<(GaussRat, GaussRat)>,
}

/// Checks `g01·Q(z, z̄) = Q(f10·z, conj(f10·z))`.
pub fn solve_linear_gate(f10: &GaussRat, g01: &GaussRat) -> GateVerdict {
    if f10.is_zero() {
        return GateVerdict {
            accepted: false,
            violated: Some("f10 != 0 (linear part must be invertible)".into()),
            normalizer: None,
        };
    }
    let fz = BiPoly::monomial(1, 0, f10.clone());
    let lhs = BiPoly::<GaussRat>::quadric().scale(g01);
    let rhs = BiPoly::<GaussRat>::quadric().substitute(&fz, &fz.conj(), 2);
    if lhs == rhs {
        debug_assert!(g01.is_real());
        let inv_f = f10.inv().expect("nonzero");
        let inv_g = g01.inv().expect("nonzero");
        return GateVerdict { accepted: true, violated: None, normalizer: Some((inv_f, inv_g)) };
    }
    let sq = f10 * f10;
    let violated = if &sq != g01 {
        format!("g01 = f10^2 fails: f10^2 = {sq}, g01 = {g01}")
    } else {
        format!("f10^2 real fails: f10^2 = {sq}")
    };
    GateVerdict { accepted: false, violated: Some(violated), normalizer: None }
}

#[derive(Clone, Debug)]
pub struct NormalizeOptions {
    pub order: u32,
    pub strategy: Strategy,
    pub resonance: Resonance,
    pub param_cap: u32,
}

impl NormalizeOptions {
    pub fn new(order: u32) -> Self {
        Self { order, strategy: Strategy::Ortho, resonance: Resonance::WChain, param_cap: DEFAULT_PARAM_DEGREE_CAP }
    }

    pub fn strategy(mut self, s: Strategy) -> Self {
        self.strategy = s;
        self
    }

    pub fn resonance(mut self, r: Resonance) -> Self {
        self.resonance = r;
        self
    }

    pub fn param_cap(mut self, cap: u32) -> Self {
        self.param_cap = cap;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterRecord {
    pub index: usize,
    /// Degree whose kernel introduced it.
    pub degree: u32,
    /// Unknown attached to the kernel vector's free column.
    pub label: String,
    /// Expression it was resolved to, in terms of still-unresolved
    /// parameters.
    pub value: Option<ParamScalar>,
    pub resolved_at: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionRecord {
    pub degree: u32,
    /// Chain depth `k` of the quotient `P_k` the condition came from.
    pub depth: usize,
    /// Position among the real scalar conditions of that quotient.
    pub index: usize,
    /// Value of the condition after all resolutions.
    pub value: ParamScalar,
    /// Parameter solved for, if any.
    pub resolved: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrategyComparison {
    pub ortho_dim: usize,
    pub chain_dim: usize,
    pub overlap_dim: usize,
    pub chain_spans: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeReport {
    pub degree: u32,
    pub unknowns: usize,
    pub rank: usize,
    pub kernel_dim: usize,
    pub normal_dim: usize,
    pub introduced: Vec<usize>,
    pub resolved: Vec<usize>,
    pub conditions: Vec<ConditionRecord>,
    /// Normalized coefficient `a'_T` (final, after all resolutions).
    pub normal_component: BiPoly<ParamScalar>,
    pub comparison: Option<StrategyComparison>,
}

#[derive(Clone, Debug)]
pub struct NormalFormResult {
    pub order: u32,
    pub strategy: Strategy,
    pub resonance: Resonance,
    pub surface: Surface<ParamScalar>,
    pub map: FormalMap<ParamScalar>,
    pub w: BiPoly<GaussRat>,
    pub degrees: Vec<DegreeReport>,
    pub parameters: Vec<ParameterRecord>,
}

impl NormalFormResult {
    pub fn unresolved(&self) -> Vec<usize> {
        self.parameters.iter().filter(|p| p.value.is_none()).map(|p| p.index).collect()
    }

    /// Normalized surface without parameters; errors if any coefficient
    /// still depends on an unresolved parameter.
    pub fn surface_values(&self) -> Result<Surface<GaussRat>> {
        let coeffs = self.surface.coeffs().try_map_coeffs(|c| {
            c.as_constant()
                .ok_or_else(|| Error::Unresolved(format!("normal form coefficient {c}")))
        })?;
        Surface::new(self.order, coeffs)
    }

    /// Normalizing map with every unresolved parameter set to zero.
    pub fn map_at_zero(&self) -> Result<FormalMap<GaussRat>> {
        let zeros = vec![Rat::zero(); self.parameters.len()];
        self.map.try_map_coeffs(|c| c.evaluate(&zeros))
    }

    /// Checks `transform_residual(M, map, surface, N) = 0` symbolically.
    pub fn residual(&self, m: &Surface<GaussRat>) -> Result<BiPoly<ParamScalar>> {
        let input = m.truncated(self.order)?.to_param::<ParamScalar>();
        Ok(transform_residual(&input, &self.map, &self.surface, self.order))
    }

    /// Lowest degree where some coefficient depends on a parameter.
    pub fn lowest_parametric_degree(&self) -> Option<u32> {
        self.surface.coeffs().terms().find(|(_, c)| !c.is_constant()).map(|(k, _)| k.degree())
    }
}

struct Solver {
    opts: NormalizeOptions,
    map: FormalMap<ParamScalar>,
    normal: BiPoly<ParamScalar>,
    params: Vec<ParameterRecord>,
    reports: Vec<DegreeReport>,
}

impl Solver {
    fn substitute(&mut self, index: usize, value: &ParamScalar) -> Result<()> {
        let sub = |c: &ParamScalar| c.substitute(index, value);
        self.map = self.map.map_coeffs(sub);
        self.normal = self.normal.map_coeffs(sub);
        for p in &mut self.params {
            if let Some(v) = &p.value {
                p.value = Some(v.substitute(index, value));
            }
        }
        for r in &mut self.reports {
            for c in &mut r.conditions {
                c.value = c.value.substitute(index, value);
            }
        }
        Ok(())
    }

    fn check_cap(&self, degree: u32) -> Result<()> {
        let cap = self.opts.param_cap;
        let found = self
            .map
            .f()
            .terms()
            .chain(self.map.g().terms())
            .chain(self.normal.terms())
            .map(|(_, c)| c.degree())
            .max()
            .unwrap_or(0);
        if found > cap {
            return Err(Error::ParameterCapExceeded { degree, found, cap });
        }
        Ok(())
    }

    /// Substitutes every resolved parameter into `c`.
    fn refresh(&self, c: ParamScalar) -> ParamScalar {
        self.params
            .iter()
            .filter_map(|p| p.value.as_ref().map(|v| (p.index, v)))
            .fold(c, |c, (i, v)| c.substitute(i, v))
    }

    /// Solves `cond = 0` for the oldest unresolved parameter in which it is
    /// affine with a nonzero constant coefficient.
    fn resolve(&mut self, cond: &ParamScalar, degree: u32, depth: usize) -> Result<Option<usize>> {
        if cond.is_constant() {
            return Ok(None);
        }
        for idx in cond.params() {
            if self.params[idx].value.is_some() {
                return Err(Error::Internal(format!("resolved parameter t{idx} still present")));
            }
            let Some((coef, rest)) = cond.split_affine(idx) else {
                continue;
            };
            let Some(c) = coef.as_constant() else {
                continue;
            };
            let inv = c.inv().expect("nonzero coefficient");
            let value = (-rest).mul_gauss(&inv);
            self.substitute(idx, &value)?;
            self.params[idx].value = Some(value);
            self.params[idx].resolved_at = Some(degree);
            return Ok(Some(idx));
        }
        Err(Error::NonAffineResolution { degree, depth })
    }
}

/// Real scalar `W*`-conditions from the chain quotients of a degree-`t`
/// normalized coefficient: for each quotient `P_k` (`k ≥ 1`) of degree at
/// least 3, every real and imaginary part of `W*(P_k)`.
pub fn resonance_conditions(
    w: &BiPoly<GaussRat>,
    normal: &BiPoly<ParamScalar>,
    t: u32,
) -> Result<Vec<(usize, usize, ParamScalar)>> {
    let chain = chain_decompose_nominal(normal, t)?;
    let mut out = Vec::new();
    for (i, quotient) in chain.quotients.iter().enumerate() {
        let depth = i + 1;
        let d = t - 2 * depth as u32;
        if d < 3 {
            break;
        }
        let applied = adjoint_apply(w, quotient);
        let coords = real_coords_of(&applied, d - 3);
        for (j, c) in coords.into_iter().enumerate() {
            out.push((depth, j, c));
        }
    }
    Ok(out)
}

/// Real conditions `⟨u_i, a'⟩ = 0`, one per parameter `t_i` still present in
/// the degree-`t` coefficient `a' = c + Σ t_i u_i`, using the real part of the
/// Fischer pairing. Together they pick the representative of `a'` orthogonal
/// to every remaining parameter direction.
pub fn gauge_conditions(normal: &BiPoly<ParamScalar>, t: u32) -> Result<Vec<ParamScalar>> {
    let mut params: Vec<usize> = normal.terms().flat_map(|(_, c)| c.params()).collect();
    params.sort_unstable();
    params.dedup();
    let coords = real_coords_of(normal, t);
    let weights = real_weights(t);
    let mut out = Vec::new();
    for idx in params {
        let mut dir = Vec::with_capacity(coords.len());
        for c in &coords {
            let u = match c.split_affine(idx) {
                Some((coef, _)) => coef.as_constant(),
                None => None,
            };
            match u {
                Some(u) => dir.push(u.re),
                None if !c.params().contains(&idx) => dir.push(Rat::zero()),
                None => return Err(Error::NonAffineResolution { degree: t, depth: 0 }),
            }
        }
        let mut acc = ParamScalar::zero();
        for ((c, u), w) in coords.iter().zip(&dir).zip(&weights) {
            if !u.is_zero() {
                acc = acc + c.scale(&GaussRat::real(u * w));
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Computes the normal form of `m` to order `opts.order`.
pub fn normalize(m: &Surface<GaussRat>, opts: &NormalizeOptions) -> Result<NormalFormResult> {
    let n = opts.order;
    if n < 3 || n > m.truncation() {
        return Err(Error::InvalidDegree(format!(
            "order {n} must lie in 3..={}",
            m.truncation()
        )));
    }
    let input = m.truncated(n)?.to_param::<ParamScalar>();
    let mut solver = Solver {
        opts: opts.clone(),
        map: FormalMap::identity(n),
        normal: BiPoly::zero(),
        params: Vec::new(),
        reports: Vec::new(),
    };
    let mut w = BiPoly::zero();

    for t in 3..=n {
        let block = build_block(t)?;
        let projector = Projector::new(&block, opts.strategy)?;
        let lower = Surface::new(n, solver.normal.clone())?;
        let v = transform_residual(&input, &solver.map, &lower, t).homogeneous_component(t);
        let (mut x, normal_t) = projector.split(&v, block.unknowns.len());

        let mut introduced = Vec::new();
        for kv in &block.kernel_basis {
            let idx = solver.params.len();
            let free = kv.iter().rposition(|c| c.is_one()).unwrap_or(0);
            solver.params.push(ParameterRecord {
                index: idx,
                degree: t,
                label: block.unknowns[free].to_string(),
                value: None,
                resolved_at: None,
            });
            let p = ParamScalar::param(idx);
            for (xi, c) in x.iter_mut().zip(kv) {
                if !c.is_zero() {
                    *xi = xi.clone() + p.scale(&GaussRat::real(c.clone()));
                }
            }
            introduced.push(idx);
        }
        let (fb, gb) = block.block_terms(&x);
        solver.map = solver.map.add_terms(&fb, &gb)?;
        solver.normal = solver.normal.clone() + normal_t.clone();

        if t == 3 {
            let cubic = normal_t.try_map_coeffs(|c| {
                c.as_constant().ok_or_else(|| Error::Internal("parameter in cubic".into()))
            })?;
            w = compute_w(&cubic)?;
            if opts.resonance == Resonance::WChain && w.is_zero() {
                return Err(Error::DegenerateW);
            }
        }

        let mut conditions = Vec::new();
        let mut resolved = Vec::new();
        if opts.resonance == Resonance::WChain {
            let current = solver.normal.homogeneous_component(t);
            for (depth, index, cond) in resonance_conditions(&w, &current, t)? {
                let cond = solver.refresh(cond);
                let hit = solver.resolve(&cond, t, depth)?;
                if let Some(i) = hit {
                    resolved.push(i);
                }
                conditions.push(ConditionRecord { degree: t, depth, index, value: cond, resolved: hit });
            }
            let current = solver.normal.homogeneous_component(t);
            for (index, cond) in gauge_conditions(&current, t)?.into_iter().enumerate() {
                let cond = solver.refresh(cond);
                let hit = solver.resolve(&cond, t, 0)?;
                if let Some(i) = hit {
                    resolved.push(i);
                }
                conditions.push(ConditionRecord { degree: t, depth: 0, index, value: cond, resolved: hit });
            }
            for c in &mut conditions {
                for r in &resolved {
                    if let Some(v) = solver.params[*r].value.clone() {
                        c.value = c.value.substitute(*r, &v);
                    }
                }
            }
        }
        solver.check_cap(t)?;

        let comparison = if t <= 6 {
            let ortho = Projector::new(&block, Strategy::Ortho)?;
            let chain = Projector::new(&block, Strategy::Chain)?;
            Some(StrategyComparison {
                ortho_dim: ortho.normal_dim,
                chain_dim: chain.normal_dim + chain.overlap_dim,
                overlap_dim: chain.overlap_dim,
                chain_spans: chain.spans,
            })
        } else {
            None
        };

        solver.reports.push(DegreeReport {
            degree: t,
            unknowns: block.unknowns.len(),
            rank: block.rank(),
            kernel_dim: block.kernel_basis.len(),
            normal_dim: projector.normal_dim,
            introduced,
            resolved,
            conditions,
            normal_component: BiPoly::zero(),
            comparison,
        });
    }

    for r in &mut solver.reports {
        r.normal_component = solver.normal.homogeneous_component(r.degree);
    }
    Ok(NormalFormResult {
        order: n,
        strategy: opts.strategy,
        resonance: opts.resonance,
        surface: Surface::new(n, solver.normal)?,
        map: solver.map,
        w,
        degrees: solver.reports,
        parameters: solver.params,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeCheck {
    pub degree: u32,
    pub pass: bool,
    /// Chain strategy: real part in the degree-`p` chain space.
    pub re_pass: Option<bool>,
    /// Chain strategy: imaginary part in the chain space. The index of the
    /// target space is read as the degree (`S_p`); the depth reading
    /// `S_{p−1}` is reported under the same verdict.
    pub im_pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub strategy: Strategy,
    pub degrees: Vec<DegreeCheck>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.degrees.iter().all(|d| d.pass)
    }

    pub fn first_failure(&self) -> Option<u32> {
        self.degrees.iter().find(|d| !d.pass).map(|d| d.degree)
    }
}

/// Checks each homogeneous component of `m` against the normal space.
pub fn verify_normal_form(m: &Surface<GaussRat>, strategy: Strategy) -> Result<VerifyReport> {
    let mut degrees = Vec::new();
    for t in 3..=m.truncation() {
        let a = m.component(t);
        let check = match strategy {
            Strategy::Ortho => DegreeCheck { degree: t, pass: in_normal_space(&a, strategy)?, re_pass: None, im_pass: None },
            Strategy::Chain => {
                let re = in_chain_space(&a.re())?;
                let im = in_chain_space(&a.im())?;
                DegreeCheck { degree: t, pass: re && im, re_pass: Some(re), im_pass: Some(im) }
            }
        };
        degrees.push(check);
    }
    Ok(VerifyReport { strategy, degrees })
}

#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub equal: bool,
    pub first_discrepancy: Option<u32>,
    pub original: NormalFormResult,
    pub transformed: NormalFormResult,
}

/// Compares two normal forms degree by degree; returns the first degree
/// where they differ.
pub fn first_difference(a: &NormalFormResult, b: &NormalFormResult) -> Option<u32> {
    let n = a.order.min(b.order);
    (3..=n).find(|&t| a.surface.component(t) != b.surface.component(t))
}

/// Normalizes `M` and `φ(M)` and compares the results exactly.
pub fn invariance_check(
    m: &Surface<GaussRat>,
    phi: &FormalMap<GaussRat>,
    opts: &NormalizeOptions,
) -> Result<InvarianceReport> {
    let original = normalize(m, opts)?;
    let image = push_forward(m, &phi.with_truncation(phi.truncation().max(m.truncation())))?;
    let transformed = normalize(&image, opts)?;
    let first_discrepancy = first_difference(&original, &transformed);
    Ok(InvarianceReport { equal: first_discrepancy.is_none(), first_discrepancy, original, transformed })
}

/// Projects each block of `phi` off `ker L_T` (Euclidean inner product on
/// the real unknown coordinates).
pub fn remove_kernel_components(phi: &FormalMap<GaussRat>) -> Result<FormalMap<GaussRat>> {
    let n = phi.truncation();
    let mut f = BiPoly::zero();
    let mut g = BiPoly::zero();
    let top = phi
        .f()
        .terms()
        .map(|(k, _)| weight(k) + 1)
        .chain(phi.g().terms().map(|(k, _)| weight(k)))
        .max()
        .unwrap_or(0);
    for t in 3..=top.max(3) {
        let block = build_block(t)?;
        let (bf, bg) = phi.block(t);
        let x = block.unknown_vector(&bf, &bg);
        let x: Vec<Rat> = x.into_iter().map(|c| c.re).collect();
        let projected = project_off(&x, &block.kernel_basis);
        let xs: Vec<GaussRat> = projected.into_iter().map(GaussRat::real).collect();
        let (pf, pg) = block.block_terms(&xs);
        f = f + pf;
        g = g + pg;
    }
    // quadratic g-terms are not part of any block; keep them
    g = g + phi.g().filter(|k| weight(k) == 2);
    FormalMap::new(n, f, g)
}

fn project_off(x: &[Rat], basis: &[Vec<Rat>]) -> Vec<Rat> {
    if basis.is_empty() {
        return x.to_vec();
    }
    let k = Matrix::from_columns(x.len(), basis);
    let kt = k.transpose();
    let gram = kt.mul(&k);
    let inv = gram.inverse().expect("kernel basis is independent");
    let c = inv.mul_vec(&kt.mul_vec(x));
    let along = k.mul_vec(&c);
    x.iter().zip(along).map(|(a, b)| a - b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = BiPoly<GaussRat>;

    fn g(p: i64, q: i64) -> GaussRat {
        GaussRat::from_ratio(p, q)
    }

    #[test]
    fn gate_examples() {
        assert!(solve_linear_gate(&g(1, 1), &g(1, 1)).accepted);
        assert!(solve_linear_gate(&GaussRat::i(), &g(-1, 1)).accepted);
        let v = solve_linear_gate(&GaussRat::new(Rat::one(), Rat::one()), &GaussRat::new(Rat::zero(), Rat::from_integer(2.into())));
        assert!(!v.accepted);
        assert!(v.violated.unwrap().contains("real"));
        assert!(!solve_linear_gate(&g(0, 1), &g(0, 1)).accepted);
        assert!(!solve_linear_gate(&g(2, 1), &g(3, 1)).accepted);
    }

    #[test]
    fn block_three_columns() {
        let b = build_block(3).unwrap();
        let labels: Vec<String> = b.unknowns.iter().map(|u| u.to_string()).collect();
        assert_eq!(
            labels,
            ["Re g_{1,1}", "Im g_{1,1}", "Re g_{3,0}", "Im g_{3,0}", "Re f_{2,0}", "Im f_{2,0}"]
        );
        let col = |i: usize| from_real_coords::<GaussRat>(
            &b.matrix.column(i).into_iter().map(GaussRat::real).collect::<Vec<_>>(),
            3,
        );
        assert_eq!(col(0), &P::z() * &P::quadric());
        assert_eq!(col(2), P::monomial(3, 0, g(1, 1)));
        assert_eq!(col(4), P::from_terms([((3, 0), g(-2, 1)), ((0, 3), g(-2, 1))]));
        assert_eq!(b.kernel_basis.len(), 0);
        assert_eq!(b.rank(), 6);
        assert_eq!(b.complement_basis.len(), 2);
    }

    #[test]
    fn block_four_kernel_family() {
        let b = build_block(4).unwrap();
        // f_{1,1} = c, g_{2,1} = 2(c − c̄), g_{0,2} = 2c̄
        for c in [g(1, 1), GaussRat::i(), GaussRat::new(Rat::from_integer(3.into()), Rat::from_integer((-2).into()))] {
            let f = P::monomial(1, 1, c.clone());
            let gg = P::from_terms([((2, 1), (c.clone() - c.conj()).scale(&g(2, 1))), ((0, 2), c.conj().scale(&g(2, 1)))]);
            let x = b.unknown_vector(&f, &gg);
            assert!(b.apply(&x).is_zero());
        }
        assert_eq!(b.kernel_basis.len(), 4);
        for k in &b.kernel_basis {
            assert!(b.matrix.mul_vec(k).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn normal_space_dimensions() {
        for t in 3..=10u32 {
            let b = build_block(t).unwrap();
            assert_eq!(b.rank() + b.complement_basis.len(), b.target_dim());
            let expected_kernel = if t % 2 == 0 { t as usize } else { 0 };
            assert_eq!(b.kernel_basis.len(), expected_kernel, "T = {t}");
        }
    }

    #[test]
    fn gate_brute_force_matches_rule() {
        let vals: Vec<Rat> = (-2..=2)
            .flat_map(|p| [1, 2].map(move |q| Rat::new(p.into(), q.into())))
            .collect();
        for re in &vals {
            for im in &vals {
                let f10 = GaussRat::new(re.clone(), im.clone());
                if f10.is_zero() {
                    continue;
                }
                let sq = &f10 * &f10;
                for g01 in [sq.clone(), sq.conj(), GaussRat::real(sq.re.clone()), sq.clone() + GaussRat::one()] {
                    let v = solve_linear_gate(&f10, &g01);
                    assert_eq!(v.accepted, g01 == sq && sq.is_real());
                    if v.accepted {
                        assert!(g01.is_real());
                    }
                }
            }
        }
    }
}

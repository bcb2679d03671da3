use crnf_core::fischer::{chain_decompose, compute_w, fischer_divide, harmonic_power};
use crnf_core::linalg::Matrix;
use crnf_core::poly::{from_real_coords, real_coords};
use crnf_core::random::{gen_random_map, random_gauss, random_homogeneous, random_surface, rng};
use crnf_core::surface::{invert_2d_jet, push_forward, transform_residual, FormalMap, Surface};
use crnf_core::{fischer_pair, BiPoly, GaussRat, Rat};
use num_traits::{One, Zero};
use proptest::prelude::*;

type P = BiPoly<GaussRat>;

fn q() -> P {
    P::quadric()
}

fn small_gauss() -> impl Strategy<Value = GaussRat> {
    (-9i64..=9, 1i64..=9, -9i64..=9, 1i64..=9)
        .prop_map(|(a, b, c, d)| GaussRat::new(Rat::new(a.into(), b.into()), Rat::new(c.into(), d.into())))
}

fn small_poly(max_deg: u32) -> impl Strategy<Value = P> {
    prop::collection::vec(((0..=max_deg), (0..=max_deg), small_gauss()), 0..6)
        .prop_map(|terms| P::from_terms(terms.into_iter().map(|(m, n, c)| ((m, n), c))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in small_poly(4), b in small_poly(4), c in small_poly(4)) {
        prop_assert_eq!((a.clone() + b.clone()) - b.clone(), a.clone());
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(b.clone() + c.clone()), &a * &b + &a * &c);
    }

    #[test]
    fn conj_is_multiplicative_involution(a in small_poly(4), b in small_poly(4)) {
        prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
        prop_assert_eq!(a.conj().conj(), a);
    }
}

#[test]
fn pairing_is_positive() {
    let mut r = rng(1);
    for i in 0..100 {
        let d = i % 11;
        let p = random_homogeneous(&mut r, d);
        if p.is_zero() {
            continue;
        }
        let v = fischer_pair(&p, &p).unwrap();
        assert!(v.im.is_zero() && v.re > Rat::zero(), "degree {d}: {v}");
    }
}

#[test]
fn multiplication_by_q_is_adjoint_to_trace() {
    let mut r = rng(2);
    for i in 0..100 {
        let d = 2 + i % 9;
        let a = random_homogeneous(&mut r, d - 2);
        let b = random_homogeneous(&mut r, d);
        assert_eq!(fischer_pair(&(&q() * &a), &b).unwrap(), fischer_pair(&a, &b.trace()).unwrap());
    }
}

#[test]
fn trace_free_is_orthogonal_to_q_multiples() {
    let mut r = rng(3);
    for d in 3..=10 {
        let p = harmonic_power(d).unwrap().scale(&random_gauss(&mut r))
            + harmonic_power(d).unwrap().conj().scale(&random_gauss(&mut r));
        assert!(p.trace().is_zero());
        let a = random_homogeneous(&mut r, d - 2);
        assert!(fischer_pair(&(&q() * &a), &p).unwrap().is_zero());
    }
}

#[test]
fn division_is_unique() {
    let mut r = rng(4);
    for i in 0..100 {
        let d = 2 + i % 9;
        let p = random_homogeneous(&mut r, d);
        let split = fischer_divide(&p).unwrap();
        assert_eq!(&q() * &split.quotient + split.remainder.clone(), p);
        assert!(split.remainder.trace().is_zero());
        // shift the data by a Q-multiple and a trace-free piece, then re-solve
        let shift = random_homogeneous(&mut r, d - 2);
        let moved = p.clone() + &q() * &shift;
        let again = fischer_divide(&moved).unwrap();
        assert_eq!(again.quotient, split.quotient.clone() + shift);
        assert_eq!(again.remainder, split.remainder);
    }
}

#[test]
fn trace_kernel_has_dimension_two() {
    for d in 2..=10u32 {
        let cols: Vec<Vec<Rat>> = (0..2 * (d as usize + 1))
            .map(|j| {
                let mut e = vec![GaussRat::zero(); 2 * (d as usize + 1)];
                e[j] = GaussRat::one();
                let p: P = from_real_coords(&e, d);
                real_coords(&p.trace(), d - 2)
            })
            .collect();
        let m = Matrix::from_columns(2 * (d as usize - 1), &cols);
        assert_eq!(m.nullspace().len(), 4, "real dimension at degree {d}");
        if d > 2 {
            assert!(harmonic_power(d).unwrap().trace().is_zero());
        }
    }
}

#[test]
fn chain_layers_reassemble_orthogonally() {
    let mut r = rng(5);
    for i in 0..40 {
        let d = 3 + i % 8;
        let p = random_homogeneous(&mut r, d);
        let chain = chain_decompose(&p).unwrap();
        assert_eq!(chain.reassemble(), p);
        let layers: Vec<P> = chain
            .remainders
            .iter()
            .enumerate()
            .map(|(k, rem)| &q().pow_trunc(k as u32, u32::MAX) * rem)
            .collect();
        for j in 0..layers.len() {
            for k in j + 1..layers.len() {
                assert!(fischer_pair(&layers[j], &layers[k]).unwrap().is_zero());
            }
        }
    }
}

#[test]
fn w_is_idempotent_on_q_multiples() {
    let mut r = rng(6);
    for _ in 0..20 {
        let lin = random_homogeneous(&mut r, 1);
        let w = &q() * &lin;
        assert_eq!(compute_w(&w).unwrap(), w);
    }
}

#[test]
fn push_forward_is_functorial() {
    let mut r = rng(7);
    for s in 0..10u64 {
        let n = 4 + (s % 3) as u32;
        let m = random_surface(&mut r, n).unwrap();
        let phi = gen_random_map(100 + s, 3, false).unwrap().with_truncation(n);
        let psi = gen_random_map(200 + s, 3, false).unwrap().with_truncation(n);
        let stepwise = push_forward(&push_forward(&m, &phi).unwrap(), &psi).unwrap();
        let direct = push_forward(&m, &psi.compose(&phi)).unwrap();
        assert_eq!(stepwise.coeffs(), direct.coeffs());
    }
}

#[test]
fn residual_vanishes_on_push_forward() {
    let mut r = rng(8);
    for s in 0..10u64 {
        let n = 3 + (s % 4) as u32;
        let m = random_surface(&mut r, n).unwrap();
        let phi = gen_random_map(s, n, false).unwrap();
        let image = push_forward(&m, &phi).unwrap();
        assert!(transform_residual(&m, &phi, &image, n).is_zero());
        let graph = crnf_core::surface::graph_series(&image).truncate(2);
        assert_eq!(graph, q());
    }
}

#[test]
fn inversion_composes_to_identity() {
    let mut r = rng(9);
    for _ in 0..20 {
        let mut u = P::z();
        for d in 2..=4 {
            u = u + random_homogeneous(&mut r, d);
        }
        let bound = 5;
        let (zeta, zeta_bar) = invert_2d_jet(&u, bound).unwrap();
        assert_eq!(zeta_bar, zeta.conj());
        assert_eq!(u.substitute(&zeta, &zeta_bar, bound).truncate(bound), P::z());
    }
}

#[test]
fn identity_map_fixes_surfaces() {
    let mut r = rng(10);
    let m: Surface = random_surface(&mut r, 5).unwrap();
    assert_eq!(push_forward(&m, &FormalMap::identity(5)).unwrap(), m);
}

use crnf_core::fischer::harmonic_power;
use crnf_core::io;
use crnf_core::linalg::weighted_dot;
use crnf_core::normalform::*;
use crnf_core::poly::real_weights;
use crnf_core::random::{gen_random_map, random_gauss, random_surface, rng};
use crnf_core::surface::{map_from_terms, push_forward, Surface};
use crnf_core::{BiPoly, Error, GaussRat};
use num_traits::{One, Zero};
use rand::Rng;

type P = BiPoly<GaussRat>;

fn seed_surface(n: u32) -> Surface {
    Surface::new(n, P::from_terms([((3, 0), GaussRat::one()), ((2, 1), GaussRat::from_ratio(1, 2))])).unwrap()
}

#[test]
fn block_matches_symbolic_expansion() {
    let mut r = rng(21);
    for t in 3..=10 {
        let block = build_block(t).unwrap();
        let x: Vec<GaussRat> = (0..block.unknowns.len()).map(|_| GaussRat::real(random_gauss(&mut r).re)).collect();
        let (f, g) = block.block_terms(&x);
        let z = P::z();
        let q = P::quadric();
        let gz = g.substitute(&z, &q, t);
        let fz = f.substitute(&z, &q, t);
        let qzf = &P::monomial(1, 0, GaussRat::from_int(2)) * &fz;
        let expected = gz - (qzf.clone() + qzf.conj());
        assert_eq!(block.apply(&x), expected, "T = {t}");
    }
}

#[test]
fn complement_is_fischer_orthogonal_to_image() {
    for t in 3..=10 {
        let block = build_block(t).unwrap();
        let w = real_weights(t);
        assert_eq!(block.image_basis.len() + block.complement_basis.len(), block.target_dim());
        for c in &block.complement_basis {
            for b in &block.image_basis {
                assert!(weighted_dot(c, b, &w).is_zero());
            }
        }
    }
}

#[test]
fn model_surface_is_fixed() {
    let m = Surface::model(6);
    let nf = normalize(&m, &NormalizeOptions::new(6).resonance(Resonance::Off)).unwrap();
    assert!(nf.surface.coeffs().is_zero());
    assert!(matches!(normalize(&m, &NormalizeOptions::new(6)), Err(Error::DegenerateW)));
}

#[test]
fn harmonic_cubic_is_degenerate() {
    let m = Surface::new(5, harmonic_power(3).unwrap()).unwrap();
    assert!(matches!(normalize(&m, &NormalizeOptions::new(5)), Err(Error::DegenerateW)));
    let off = normalize(&m, &NormalizeOptions::new(5).resonance(Resonance::Off)).unwrap();
    assert!(off.w.is_zero());
    assert_eq!(off.unresolved(), vec![0, 1, 2, 3]);
}

#[test]
fn seed_surface_report() {
    let nf = normalize(&seed_surface(6), &NormalizeOptions::new(6)).unwrap();
    assert_eq!(nf.w, P::from_terms([((2, 1), GaussRat::from_ratio(1, 8)), ((0, 3), GaussRat::from_ratio(1, 8))]));
    let kernels: Vec<usize> = nf.degrees.iter().map(|d| d.kernel_dim).collect();
    assert_eq!(kernels, [0, 4, 0, 6]);
    // all four degree-4 parameters are fixed at degree 6
    for p in &nf.parameters[..4] {
        assert_eq!(p.resolved_at, Some(6));
    }
    assert!(nf.degrees[3].conditions.iter().any(|c| c.depth == 1 && c.resolved.is_some()));
    assert_eq!(nf.surface_values().unwrap().coeffs(), &P::monomial(2, 1, GaussRat::from_ratio(1, 2)));
    assert!(nf.residual(&seed_surface(6)).unwrap().is_zero());
}

#[test]
fn higher_degrees_do_not_affect_lower_ones() {
    let mut r = rng(22);
    for _ in 0..4 {
        let m = random_surface(&mut r, 6).unwrap();
        let mut changed = m.coeffs().clone();
        for d in 5..=6 {
            changed = changed + P::monomial(d - 1, 1, random_gauss(&mut r));
        }
        let changed = Surface::new(6, changed).unwrap();
        let a = normalize(&m, &NormalizeOptions::new(6)).unwrap();
        let b = normalize(&changed, &NormalizeOptions::new(6)).unwrap();
        for t in 3..=4 {
            assert_eq!(a.surface.component(t), b.surface.component(t));
        }
    }
}

#[test]
fn normal_forms_are_idempotent_and_coherent() {
    let mut r = rng(23);
    for _ in 0..3 {
        let m = random_surface(&mut r, 6).unwrap();
        let nf = normalize(&m, &NormalizeOptions::new(6)).unwrap();
        assert!(nf.residual(&m).unwrap().is_zero());
        let again = normalize(&nf.surface_values().unwrap(), &NormalizeOptions::new(6)).unwrap();
        assert_eq!(again.surface.coeffs(), nf.surface.coeffs());
        assert!(again.map_at_zero().unwrap().is_identity());
        assert!(verify_normal_form(&nf.surface_values().unwrap(), Strategy::Ortho).unwrap().all_pass());
    }
}

#[test]
fn chain_strategy_runs_and_reports() {
    let nf = normalize(&seed_surface(6), &NormalizeOptions::new(6).strategy(Strategy::Chain).resonance(Resonance::Off)).unwrap();
    assert!(nf.residual(&seed_surface(6)).unwrap().is_zero());
    for d in &nf.degrees {
        let c = d.comparison.as_ref().unwrap();
        assert_eq!(c.ortho_dim, 2 * (d.degree as usize + 1) - d.rank);
        assert!(c.chain_dim >= c.overlap_dim);
    }
}

#[test]
fn random_kernel_free_maps_preserve_the_normal_form() {
    let opts = NormalizeOptions::new(5);
    for s in 0..3 {
        let phi = gen_random_map(s, 5, true).unwrap();
        let rep = invariance_check(&seed_surface(5), &phi, &opts).unwrap();
        assert!(rep.equal, "seed {s}");
    }
}

#[test]
fn kernel_map_is_localized_without_resonance() {
    let phi = map_from_terms(6, [((1, 1), GaussRat::one())], [((0, 2), GaussRat::from_int(2))]).unwrap();
    let off = invariance_check(&seed_surface(6), &phi, &NormalizeOptions::new(6).resonance(Resonance::Off)).unwrap();
    assert_eq!(off.first_discrepancy, Some(6));
    let model = push_forward(&Surface::model(6), &phi).unwrap();
    assert_eq!(model.coeffs(), &(-P::quadric().pow_trunc(3, 6)));
}

#[test]
fn parameter_cap_is_enforced() {
    let err = normalize(&seed_surface(6), &NormalizeOptions::new(6).resonance(Resonance::Off).param_cap(0)).unwrap_err();
    assert!(matches!(err, Error::ParameterCapExceeded { degree: 4, .. }), "{err}");
}

#[test]
fn results_round_trip_through_json() {
    let mut r = rng(24);
    for i in 0..3 {
        let m = random_surface(&mut r, 5).unwrap();
        let res = if i == 0 { Resonance::Off } else { Resonance::WChain };
        let nf = normalize(&m, &NormalizeOptions::new(5).resonance(res)).unwrap();
        let text = io::write_result(&nf);
        let back = io::parse_result(&text).unwrap();
        assert_eq!(io::write_result(&back), text);
        assert_eq!(back.surface, nf.surface);
        assert_eq!(back.map, nf.map);
        assert_eq!(io::parse_surface(&io::write_surface(&m)).unwrap(), m);
        let phi = gen_random_map(r.gen(), 5, i % 2 == 0).unwrap();
        assert_eq!(io::parse_map(&io::write_map(&phi)).unwrap(), phi);
    }
}

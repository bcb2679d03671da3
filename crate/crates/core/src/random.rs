//! Seeded generators for property trials.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::normalform::remove_kernel_components;
use crate::poly::{BiPoly, Bideg};
use crate::scalar::{GaussRat, Rat};
use crate::surface::{FormalMap, Surface};

/// Numerators and denominators are bounded by this in absolute value.
pub const COEFF_BOUND: i64 = 9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rat<R: Rng>(rng: &mut R) -> Rat {
    let p = rng.gen_range(-COEFF_BOUND..=COEFF_BOUND);
    let q = rng.gen_range(1..=COEFF_BOUND);
    Rat::new(p.into(), q.into())
}

pub fn random_gauss<R: Rng>(rng: &mut R) -> GaussRat {
    GaussRat::new(random_rat(rng), random_rat(rng))
}

/// Homogeneous polynomial of degree `d` with each monomial present with
/// probability 3/4.
pub fn random_homogeneous<R: Rng>(rng: &mut R, d: u32) -> BiPoly<GaussRat> {
    let mut p = BiPoly::zero();
    for m in 0..=d {
        if rng.gen_bool(0.75) {
            p = p + BiPoly::monomial(m, d - m, random_gauss(rng));
        }
    }
    p
}

/// Surface with random coefficients in every degree `3..=n` and a nonzero
/// `z²z̄` coefficient, so that `W` does not vanish.
pub fn random_surface<R: Rng>(rng: &mut R, n: u32) -> Result<Surface<GaussRat>> {
    let mut coeffs = BiPoly::zero();
    for d in 3..=n {
        coeffs = coeffs + random_homogeneous(rng, d);
    }
    while coeffs.coeff(2, 1).is_zero() {
        coeffs.add_term(Bideg::new(2, 1), random_gauss(rng));
    }
    Surface::new(n, coeffs)
}

/// Random map `z + f, w + g` with blocks of weighted degree `3..=n` and no
/// quadratic `w`-term. With `kernel_free`, every block is projected off
/// `ker L_T`.
pub fn gen_random_map(seed: u64, n: u32, kernel_free: bool) -> Result<FormalMap<GaussRat>> {
    let mut rng = rng(seed);
    let mut f = BiPoly::zero();
    let mut g = BiPoly::zero();
    for t in 3..=n {
        for l in 0..=t / 2 {
            let k = t - 2 * l;
            if k + l >= 2 {
                g = g + BiPoly::monomial(k, l, random_gauss(&mut rng));
            }
            if t > 2 * l {
                let k = t - 1 - 2 * l;
                if k + l >= 2 {
                    f = f + BiPoly::monomial(k, l, random_gauss(&mut rng));
                }
            }
        }
    }
    let map = FormalMap::new(n, f, g)?;
    if kernel_free {
        remove_kernel_components(&map)
    } else {
        Ok(map)
    }
}

//! Random valid parameter sets and spectral parameters for certification sweeps.

use num_complex::Complex64;
use rand::Rng;

use crate::integrable::{ModelSpec, POLE_GUARD};
use crate::spin::SiteList;

fn signed<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let x = rng.random_range(lo..hi);
    if rng.random_bool(0.5) {
        x
    } else {
        -x
    }
}

/// A random spec satisfying every constraint, with site-dependent signs in
/// the site coefficients and a random common `alpha/beta` ratio.
pub fn random_spec<R: Rng + ?Sized>(sites: SiteList, rng: &mut R) -> ModelSpec {
    let gamma_a = signed(rng, 0.5, 2.0);
    let rho_a = signed(rng, 0.5, 2.0);
    let gamma_b = signed(rng, 0.5, 2.0);
    let rho_b = gamma_a * rho_a / gamma_b;
    let product = gamma_a * rho_a;
    // alpha = ratio * beta, alpha * beta = product  =>  beta^2 = product / ratio
    let ratio = product.signum() * rng.random_range(0.5..2.0);
    let beta_mag = (product / ratio).sqrt();
    let mut coeffs = |count: usize| {
        let beta: Vec<f64> = (0..count)
            .map(|_| if rng.random_bool(0.5) { beta_mag } else { -beta_mag })
            .collect();
        let alpha = beta.iter().map(|b| ratio * b).collect::<Vec<_>>();
        (alpha, beta)
    };
    let (alpha_a, beta_a) = coeffs(sites.n());
    let (alpha_b, beta_b) = coeffs(sites.m());
    let spec = ModelSpec {
        sites,
        gamma_a,
        rho_a,
        gamma_b,
        rho_b,
        eta: signed(rng, 0.5, 1.5),
        omega_a: rng.random_range(-1.0..1.0),
        omega_b: rng.random_range(-1.0..1.0),
        alpha_a,
        beta_a,
        alpha_b,
        beta_b,
        xi0: signed(rng, 0.5, 2.0),
        xi1: rng.random_range(-1.0..1.0),
    };
    debug_assert!(spec.validate().is_ok());
    spec
}

/// Uniform point in the disc `|u| <= radius`.
pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Complex64 {
    loop {
        let z = Complex64::new(rng.random_range(-radius..radius), rng.random_range(-radius..radius));
        if z.norm() <= radius {
            return z;
        }
    }
}

/// Random `(u, v)` in the disc, redrawn while any of `u - v`, `u`, `v`
/// comes within a safety margin of `-eta`.
pub fn random_spectral_pair<R: Rng + ?Sized>(rng: &mut R, radius: f64, eta: f64) -> (Complex64, Complex64) {
    let margin = 1e3 * POLE_GUARD;
    loop {
        let u = random_complex(rng, radius);
        let v = random_complex(rng, radius);
        let near = |z: Complex64| (z + eta).norm() < margin;
        if !near(u - v) && !near(u) && !near(v) {
            return (u, v);
        }
    }
}

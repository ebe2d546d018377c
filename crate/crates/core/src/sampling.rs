//! Seeded random streams and point samplers.
//!
//! Work that runs in parallel is cut into fixed batches, and batch `b` draws
//! from stream `b` of a ChaCha generator keyed by the seed. Results therefore
//! depend on the seed only, never on the number of worker threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::heis::{CVector, HPoint};

/// Generator for batch `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Complex vector with independent standard normal parts. Panics if
/// `dim == 0`.
pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    CVector::new(
        (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect(),
    )
    .expect("dimension must be positive")
}

/// Gaussian horizontal part; the center is normal with standard deviation
/// `‖h‖²`, so both parts of the gauge are of comparable size.
pub fn generic_point<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HPoint {
    let h = gaussian_vector(rng, dim);
    let z: f64 = rng.sample(StandardNormal);
    let center = z * h.norm_sqr();
    HPoint::new(h, center)
}

/// Point on a horizontal line through the identity, nudged off it by a
/// relative amount `eps` in both the horizontal and central directions.
pub fn near_geodesic_point<R: Rng + ?Sized>(rng: &mut R, direction: &CVector, eps: f64) -> HPoint {
    let s: f64 = rng.sample(StandardNormal);
    let noise = gaussian_vector(rng, direction.dim()).scale(eps);
    let h = direction.scale(s).add(&noise).expect("same dimension");
    let c: f64 = rng.sample(StandardNormal);
    HPoint::new(h, eps * c * s * s)
}

/// Point that is mostly vertical: small horizontal part, unit-order center.
pub fn near_vertical_point<R: Rng + ?Sized>(rng: &mut R, dim: usize, eps: f64) -> HPoint {
    let h = gaussian_vector(rng, dim).scale(eps);
    let c: f64 = rng.sample(StandardNormal);
    HPoint::new(h, c)
}

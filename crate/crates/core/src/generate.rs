//! Pardalos-style random instances.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{BqpInstance, InstanceMeta, Sense};

/// Off-diagonal `(½Q)_ij` is drawn from `{-50..=50}` with probability
/// `density`, the diagonal `(½Q)_ii` from `{-100..=100}`, and `c = 0`.
///
/// The stream is ChaCha8 keyed by `(seed, n, density)`, so the same triple
/// always yields the same instance. The diagonal stays in `Q`; call
/// [`BqpInstance::normalize_diagonal`] before building relaxations.
pub fn generate_pardalos(n: usize, density: f64, seed: u64) -> Result<BqpInstance> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Input(format!("density {density} is outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::Input("n must be positive".into()));
    }
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(n as u64).to_le_bytes());
    key[16..24].copy_from_slice(&density.to_bits().to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);

    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        q[(i, i)] = 2.0 * f64::from(rng.random_range(-100i32..=100));
        for j in (i + 1)..n {
            if rng.random_bool(density) {
                let v = 2.0 * f64::from(rng.random_range(-50i32..=50));
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
    }
    let meta = InstanceMeta {
        name: format!("pardalos-n{n}-d{density}-s{seed}"),
        sense_original: Sense::Min,
        density: Some(density),
        seed: Some(seed),
    };
    BqpInstance::with_meta(q, DVector::zeros(n), meta)
}

//! Seeded random states.

use crate::qmatrix::{ComplexMatrix, DensityMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Generator for (seed, stream) pairs, so independent trials stay reproducible.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector.
pub fn haar_vector(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

pub fn haar_pure(factor_dims: Vec<usize>, rng: &mut impl Rng) -> DensityMatrix {
    let d = factor_dims.iter().product();
    DensityMatrix::pure(&haar_vector(d, rng), factor_dims).expect("unit vector")
}

/// Induced-measure random state G G† / Tr of rank at most `rank`.
pub fn random_density(factor_dims: Vec<usize>, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let d: usize = factor_dims.iter().product();
    let g: Vec<Vec<C64>> = (0..rank.max(1)).map(|_| (0..d).map(|_| gaussian(rng)).collect()).collect();
    let m = ComplexMatrix::from_fn(d, |i, j| g.iter().map(|col| col[i] * col[j].conj()).sum());
    let t = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / t), factor_dims).expect("valid by construction")
}

//! Seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::instance::{build_file, InstanceFile};
use crate::dualizer;
use crate::error::{Error, Result};
use crate::gframe;
use crate::opspace::{self, SpaceLayout};
use crate::perturb;
use crate::symbol::Symbol;

/// Distance of the generated `LambdaPrime`, as a fraction of `√A_Λ`.
pub const PRIME_FRACTION: f64 = 0.1;
/// `μ` of the generated `GammaNear`.
pub const NEAR_MU: f64 = 0.5;

/// Random instance with frames `Lambda`, `Gamma`, `LambdaPrime`, `LambdaDual`,
/// `GammaNear`, a random symbol and operators `T`, `Phi`, `Psi`, `T1`, `T2`.
///
/// `Lambda` and `Gamma` have `B/A ≤ cond_cap`; the symbol blocks and the
/// square operators have condition number at most `cond_cap`.
pub fn generate(ambient_dim: usize, block_sizes: &[usize], cond_cap: f64, seed: u64) -> Result<InstanceFile> {
    let layout = SpaceLayout::new(block_sizes.to_vec())?;
    if layout.total() < ambient_dim {
        return Err(Error::InvalidInput(format!(
            "blocks span {} coordinates, fewer than the dimension {ambient_dim}",
            layout.total()
        )));
    }
    let n = ambient_dim;
    let k = layout.total();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = gframe::random_gframe_with(n, &layout, cond_cap, &mut rng)?;
    let gamma = gframe::random_gframe_with(n, &layout, cond_cap, &mut rng)?;
    let u = Symbol::random_with(&layout, cond_cap, &mut rng);
    let t = opspace::random_well_conditioned(n, cond_cap, 1.0, &mut rng);
    let phi = opspace::random_gaussian(k, n, &mut rng);
    let psi = opspace::random_gaussian(n, k, &mut rng);
    let t1 = opspace::random_well_conditioned(n, cond_cap, 1.0, &mut rng);
    let t2 = opspace::random_well_conditioned(n, cond_cap, 1.0, &mut rng);
    let a = lambda.ensure_frame()?.lower;
    let lambda_prime = perturb::random_perturbation(&lambda, PRIME_FRACTION * a.sqrt(), rng.random())?;
    let lambda_dual = dualizer::random_dual(&lambda, &mut rng)?;
    let gamma_near = perturb::near_sequence(&lambda, &lambda_dual, &u, NEAR_MU, rng.random())?;
    Ok(build_file(
        n,
        &layout,
        &[
            ("Gamma", &gamma),
            ("GammaNear", &gamma_near),
            ("Lambda", &lambda),
            ("LambdaDual", &lambda_dual),
            ("LambdaPrime", &lambda_prime),
        ],
        Some(&u),
        &[("Phi", &phi), ("Psi", &psi), ("T", &t), ("T1", &t1), ("T2", &t2)],
        Some(seed),
    ))
}

/// Random shape at desk scale: `n ∈ [2, 6]`, block sizes in `[1, 3]`, at most
/// six blocks. One draw in three is square (`K = n`), giving g-Riesz frames.
pub fn random_shape<R: Rng + ?Sized>(rng: &mut R) -> (usize, Vec<usize>) {
    let n = rng.random_range(2..=6);
    if rng.random_range(0..3) == 0 {
        let mut sizes = Vec::new();
        let mut left = n;
        while left > 0 {
            let k = rng.random_range(1..=left.min(3));
            sizes.push(k);
            left -= k;
        }
        return (n, sizes);
    }
    loop {
        let m = rng.random_range(1..=6);
        let sizes: Vec<usize> = (0..m).map(|_| rng.random_range(1..=3)).collect();
        if sizes.iter().sum::<usize>() > n {
            return (n, sizes);
        }
    }
}

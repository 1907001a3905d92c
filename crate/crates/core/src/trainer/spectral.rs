use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::CScalar;
use crate::error::{Error, Result};
use crate::network::CMatrix;

/// Relative change in the Rayleigh quotient at which power iteration stops.
pub const POWER_ITERATION_TOLERANCE: f64 = 1e-15;
pub const POWER_ITERATION_MAX_ITERS: usize = 5000;

// fixed start vector so results do not depend on a caller's RNG
const START_SEED: u64 = 0x005e_ed0f_5ec7;

/// Largest singular value by power iteration on `W^H W`.
pub fn spectral_norm(w: &CMatrix) -> Result<f64> {
    if w.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("matrix has non-finite entries".into()));
    }
    if w.as_slice().iter().all(|v| v.norm_sqr() == 0.0) {
        return Err(Error::InvalidConfig("cannot normalize a zero matrix".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut v: Vec<CScalar> = (0..w.cols())
        .map(|_| CScalar::new(rng.random_range(0.5..1.5), 0.0))
        .collect();
    normalize(&mut v);

    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATION_MAX_ITERS {
        let wv = apply(w, &v);
        let next_lambda: f64 = wv.iter().map(|z| z.norm_sqr()).sum();
        let mut next = apply_adjoint(w, &wv);
        if normalize(&mut next) == 0.0 {
            // start vector landed in the null space; any unit vector orthogonal to it works
            next = (0..w.cols())
                .map(|j| CScalar::new(if j % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
                .collect();
            normalize(&mut next);
        }
        v = next;
        let converged = (next_lambda - lambda).abs() <= POWER_ITERATION_TOLERANCE * next_lambda;
        lambda = next_lambda;
        if converged {
            break;
        }
    }
    // one more Rayleigh quotient with the final vector
    let wv = apply(w, &v);
    let lambda = lambda.max(wv.iter().map(|z| z.norm_sqr()).sum());
    Ok(lambda.sqrt())
}

/// `W / sigma_max(W)`.
pub fn spectral_normalize(w: &CMatrix) -> Result<CMatrix> {
    let sigma = spectral_norm(w)?;
    let mut out = w.clone();
    for v in out.as_mut_slice() {
        *v /= sigma;
    }
    Ok(out)
}

fn apply(w: &CMatrix, v: &[CScalar]) -> Vec<CScalar> {
    (0..w.rows())
        .map(|r| w.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn apply_adjoint(w: &CMatrix, u: &[CScalar]) -> Vec<CScalar> {
    let mut out = vec![CScalar::new(0.0, 0.0); w.cols()];
    for (r, &ur) in u.iter().enumerate() {
        for (o, a) in out.iter_mut().zip(w.row(r)) {
            *o += a.conj() * ur;
        }
    }
    out
}

fn normalize(v: &mut [CScalar]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    norm
}

//! Seeded random ensembles: Haar unitaries, flat-Dirichlet spectra and
//! Ginibre operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::linalg::{CMatrix, C64};

/// Independent stream for one trial of a seeded sweep.
///
/// The stream depends only on `(master_seed, trial)`, so trials can be
/// evaluated in any order or in parallel.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Matrix with i.i.d. standard complex Gaussian entries (variance 1).
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix,
/// with the phases of `R`'s diagonal absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = ginibre(rng, n, n).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Uniform point on the probability simplex (flat Dirichlet).
pub fn flat_dirichlet<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Flat-Dirichlet spectrum, re-drawn until every weight is at least `floor`.
pub fn full_rank_spectrum<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    loop {
        let w = flat_dirichlet(rng, n);
        if w.iter().all(|&x| x >= floor) {
            return w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_defect;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = trial_rng(7, 0);
        for n in 1..8 {
            assert!(unitarity_defect(&haar_unitary(&mut rng, n)) < 1e-13);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = trial_rng(42, 3).random();
        let b: f64 = trial_rng(42, 3).random();
        let c: f64 = trial_rng(42, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn dirichlet_sums_to_one() {
        let mut rng = trial_rng(1, 1);
        let w = full_rank_spectrum(&mut rng, 6, 1e-6);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(w.iter().all(|&x| x >= 1e-6));
    }
}

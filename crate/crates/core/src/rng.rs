//! Seeded, stream-splittable randomness and Haar-random pure states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{PureState, C64};
use crate::tol;

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Parallel workers each take their own stream index; two streams with the
/// same seed and different indices are independent ChaCha keystreams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub fn complex_gaussian(&mut self) -> C64 {
        C64::new(self.gaussian(), self.gaussian())
    }
}

/// Draw a pure state uniformly from the unit sphere of `C^d`: a vector of
/// i.i.d. complex Gaussians, normalised.
pub fn haar_sample(d: usize, rng: &mut RngStream) -> Result<PureState> {
    if !(2..=tol::MAX_DIM).contains(&d) {
        return Err(Error::Dimension(format!("Haar sampling needs 2 <= d <= {}, got {d}", tol::MAX_DIM)));
    }
    loop {
        let amps: Vec<C64> = (0..d).map(|_| rng.complex_gaussian()).collect();
        // A zero draw has probability zero; retry rather than fail.
        if let Ok(s) = PureState::normalized(amps) {
            return Ok(s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(d: usize, n: usize, seed: u64) -> (f64, f64, f64, f64) {
        let mut rng = RngStream::new(seed, 0);
        let (mut s2, mut s2sq, mut s4, mut s4sq) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let p = haar_sample(d, &mut rng).unwrap().amplitudes()[0].norm_sqr();
            s2 += p;
            s2sq += p * p;
            s4 += p * p;
            s4sq += p.powi(4);
        }
        let nf = n as f64;
        let m2 = s2 / nf;
        let m4 = s4 / nf;
        let se2 = ((s2sq / nf - m2 * m2) / nf).sqrt();
        let se4 = ((s4sq / nf - m4 * m4) / nf).sqrt();
        (m2, se2, m4, se4)
    }

    #[test]
    fn qubit_moments_match_analytic() {
        // First moment 1/d, second moment 2/(d(d+1)).
        let (m2, _, m4, _) = moments(2, 100_000, 7);
        assert!((m2 - 0.5).abs() < 0.005, "first moment {m2}");
        assert!((m4 - 1.0 / 3.0).abs() < 0.005, "second moment {m4}");
    }

    #[test]
    fn moments_within_four_standard_errors() {
        for d in 2..=5 {
            let (m2, se2, m4, se4) = moments(d, 100_000, 11 + d as u64);
            let df = d as f64;
            assert!((m2 - 1.0 / df).abs() <= 4.0 * se2, "d={d} first moment {m2}");
            assert!((m4 - 2.0 / (df * (df + 1.0))).abs() <= 4.0 * se4, "d={d} second moment {m4}");
        }
    }

    #[test]
    fn same_seed_same_state() {
        let a = haar_sample(2, &mut RngStream::new(42, 0)).unwrap();
        let b = haar_sample(2, &mut RngStream::new(42, 0)).unwrap();
        assert_eq!(a, b);
        let c = haar_sample(2, &mut RngStream::new(42, 1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(matches!(haar_sample(1, &mut RngStream::new(0, 0)), Err(Error::Dimension(_))));
    }
}

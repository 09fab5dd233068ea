//! Fixtures shared by the benchmarks.

use qrseal::device::random_device;
use qrseal::{RepeatingDevice, RngStream};

/// A reproducible random instrument with `d` outcomes.
pub fn random_fixture(d: usize, seed: u64) -> RepeatingDevice {
    random_device(d, d, &mut RngStream::new(seed, 0)).expect("valid dimension")
}

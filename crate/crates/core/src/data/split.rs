//! Deterministic train/test splitting.

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Split parameters: held-out fraction and RNG seed.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

/// Partition rows into `(train, test)`.
///
/// The test set holds `floor(test_fraction * n)` rows chosen by partial
/// Fisher-Yates over `[0, n)` under the seeded stream; both partitions keep
/// the original row order. An empty side is an error.
pub fn split(data: &DataMatrix, spec: &SplitSpec) -> Result<(DataMatrix, DataMatrix)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::DegenerateSplit(format!(
            "test_fraction {} outside (0, 1)",
            spec.test_fraction
        )));
    }
    let n = data.n_rows();
    let n_test = (spec.test_fraction * n as f64).floor() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::DegenerateSplit(format!(
            "fraction {} of {} rows leaves an empty partition",
            spec.test_fraction, n
        )));
    }

    let mut rng = StreamRng::derived(spec.seed, "split", 0);
    let mut test_idx = rng.sample_without_replacement(n, n_test);
    test_idx.sort_unstable();

    let mut in_test = vec![false; n];
    for &i in &test_idx {
        in_test[i] = true;
    }
    let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();

    Ok((data.select_rows(&train_idx), data.select_rows(&test_idx)))
}

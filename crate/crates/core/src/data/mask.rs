//! MCAR missingness masks over complete data.
//!
//! A [`MaskedMatrix`] retains the complete ground truth internally but only
//! exposes observed entries through its public accessors; the true values
//! behind unobserved cells are readable solely by this crate's metrics and
//! theory modules. That keeps simulated-missing ground truth out of every
//! imputation and modeling path by construction.

use std::io::{BufRead, Write};

use nalgebra::DVector;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Boolean observation mask (`true` = observed), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    observed: Vec<bool>,
    n_rows: usize,
    n_cols: usize,
}

impl Mask {
    pub fn all_observed(n_rows: usize, n_cols: usize) -> Mask {
        Mask {
            observed: vec![true; n_rows * n_cols],
            n_rows,
            n_cols,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.observed[row * self.n_cols + col]
    }

    pub fn n_missing(&self) -> usize {
        self.observed.iter().filter(|o| !**o).count()
    }

    /// Row indices with no observed entries at all.
    pub fn fully_missing_rows(&self) -> Vec<usize> {
        (0..self.n_rows)
            .filter(|&i| (0..self.n_cols).all(|j| !self.is_observed(i, j)))
            .collect()
    }

    fn set_missing(&mut self, cell: usize) {
        self.observed[cell] = false;
    }
}

/// A [`DataMatrix`] with simulated-missing entries.
#[derive(Debug, Clone)]
pub struct MaskedMatrix {
    base: DataMatrix,
    mask: Mask,
    rate: f64,
}

impl MaskedMatrix {
    pub fn n_rows(&self) -> usize {
        self.base.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.base.n_features()
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn feature_names(&self) -> &[String] {
        self.base.feature_names()
    }

    pub fn task(&self) -> crate::data::Task {
        self.base.task()
    }

    pub fn n_classes(&self) -> usize {
        self.base.n_classes()
    }

    /// Targets are never masked.
    pub fn target(&self) -> &DVector<f64> {
        self.base.target()
    }

    /// The public cell accessor: `None` for unobserved entries.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        if self.mask.is_observed(row, col) {
            Some(self.base.values()[(row, col)])
        } else {
            None
        }
    }

    /// Row `i` with unobserved entries encoded as NaN (the model-facing
    /// missing convention).
    pub fn row_with_nans(&self, i: usize) -> Vec<f64> {
        (0..self.n_features())
            .map(|j| self.get(i, j).unwrap_or(f64::NAN))
            .collect()
    }

    /// Full matrix with unobserved entries encoded as NaN.
    pub fn values_with_nans(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n_rows(), self.n_features(), |i, j| {
            self.get(i, j).unwrap_or(f64::NAN)
        })
    }

    /// Observed row indices per column; the complement is the missing set.
    pub fn observed_rows(&self) -> Vec<Vec<usize>> {
        (0..self.n_features())
            .map(|j| {
                (0..self.n_rows())
                    .filter(|&i| self.mask.is_observed(i, j))
                    .collect()
            })
            .collect()
    }

    /// Ground-truth channel for the metrics and theory modules only. The
    /// sequestration invariant relies on this never becoming `pub`.
    pub(crate) fn ground_truth(&self) -> &DataMatrix {
        &self.base
    }
}

/// Mask a dataset completely at random: exactly `floor(rate * n * p)` cells,
/// chosen uniformly without replacement by partial Fisher-Yates over
/// row-major cell indices, become unobserved. Deterministic per seed and
/// independent of cell values.
pub fn apply_mcar(data: &DataMatrix, rate: f64, seed: u64) -> Result<MaskedMatrix> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidRate(rate));
    }
    let n_cells = data.n_rows() * data.n_features();
    let n_missing = (rate * n_cells as f64).floor() as usize;

    let mut mask = Mask::all_observed(data.n_rows(), data.n_features());
    let mut rng = StreamRng::derived(seed, "mcar", 0);
    for cell in rng.sample_without_replacement(n_cells, n_missing) {
        mask.set_missing(cell);
    }
    Ok(MaskedMatrix {
        base: data.clone(),
        mask,
        rate,
    })
}

/// Serialize a mask as CSV of 0/1 (1 = observed) for experiment replay.
pub fn mask_to_csv<W: Write>(out: &mut W, mask: &Mask) -> Result<()> {
    for i in 0..mask.n_rows() {
        let row: Vec<&str> = (0..mask.n_cols())
            .map(|j| if mask.is_observed(i, j) { "1" } else { "0" })
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read a 0/1 mask CSV written by [`mask_to_csv`].
pub fn mask_from_csv<R: BufRead>(input: R) -> Result<Mask> {
    let mut observed = Vec::new();
    let mut n_cols = 0;
    let mut n_rows = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if n_rows == 0 {
            n_cols = cells.len();
        } else if cells.len() != n_cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{n_cols} columns"),
                got: format!("{} in line {}", cells.len(), i + 1),
            });
        }
        for c in cells {
            match c.trim() {
                "1" => observed.push(true),
                "0" => observed.push(false),
                other => {
                    return Err(Error::BadCell {
                        row: i + 1,
                        column: String::new(),
                        message: format!("mask cell '{other}' is not 0/1"),
                    })
                }
            }
        }
        n_rows += 1;
    }
    Ok(Mask {
        observed,
        n_rows,
        n_cols,
    })
}

/// Rebuild a [`MaskedMatrix`] from data plus a replayed mask.
pub fn masked_from_parts(data: &DataMatrix, mask: Mask) -> Result<MaskedMatrix> {
    if (mask.n_rows(), mask.n_cols()) != (data.n_rows(), data.n_features()) {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", data.n_rows(), data.n_features()),
            got: format!("{}x{}", mask.n_rows(), mask.n_cols()),
        });
    }
    let rate = mask.n_missing() as f64 / (mask.n_rows() * mask.n_cols()) as f64;
    Ok(MaskedMatrix {
        base: data.clone(),
        mask,
        rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Task;
    use nalgebra::DMatrix;

    fn dataset(n: usize, p: usize) -> DataMatrix {
        let values = DMatrix::from_fn(n, p, |i, j| (i * p + j) as f64);
        let names = (0..p).map(|j| format!("f{j}")).collect();
        DataMatrix::new(values, DVector::zeros(n), names, Task::Regression).unwrap()
    }

    #[test]
    fn exact_missing_count() {
        let d = dataset(5, 2); // 10 cells
        let m = apply_mcar(&d, 0.2, 7).unwrap();
        assert_eq!(m.mask().n_missing(), 2);
    }

    #[test]
    fn rate_zero_leaves_everything_observed() {
        let d = dataset(4, 3);
        let m = apply_mcar(&d, 0.0, 7).unwrap();
        assert_eq!(m.mask().n_missing(), 0);
        assert!(m.get(2, 1).is_some());
    }

    #[test]
    fn rate_one_is_rejected() {
        let d = dataset(2, 2);
        assert!(matches!(apply_mcar(&d, 1.0, 0), Err(Error::InvalidRate(_))));
        assert!(apply_mcar(&d, -0.1, 0).is_err());
    }

    #[test]
    fn masks_are_deterministic_per_seed() {
        let d = dataset(6, 4);
        let a = apply_mcar(&d, 0.5, 42).unwrap();
        let b = apply_mcar(&d, 0.5, 42).unwrap();
        assert_eq!(a.mask(), b.mask());
        let c = apply_mcar(&d, 0.5, 43).unwrap();
        assert_ne!(a.mask(), c.mask());
    }

    #[test]
    fn public_accessor_hides_masked_ground_truth() {
        let d = dataset(4, 4);
        let m = apply_mcar(&d, 0.5, 1).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if m.mask().is_observed(i, j) {
                    assert_eq!(m.get(i, j), Some(d.values()[(i, j)]));
                } else {
                    assert_eq!(m.get(i, j), None);
                    assert!(m.row_with_nans(i)[j].is_nan());
                }
            }
        }
    }

    #[test]
    fn observed_rows_partition_matches_mask() {
        let d = dataset(5, 3);
        let m = apply_mcar(&d, 0.2, 7).unwrap();
        let obs = m.observed_rows();
        let total_missing: usize = obs.iter().map(|col| 5 - col.len()).sum();
        assert_eq!(total_missing, 3); // floor(0.2 * 15)
        for (j, col) in obs.iter().enumerate() {
            for &i in col {
                assert!(m.mask().is_observed(i, j));
            }
        }
    }

    #[test]
    fn fully_observed_column_lists_every_row() {
        let d = dataset(3, 1);
        let m = apply_mcar(&d, 0.0, 0).unwrap();
        assert_eq!(m.observed_rows()[0], vec![0, 1, 2]);
    }

    #[test]
    fn per_cell_frequency_matches_rate_over_seeds() {
        // MCAR independence oracle: over 1000 seeds on a 4x4 matrix at
        // rate 0.5, each cell should be missing in about half the seeds.
        // 99% binomial bound: 500 +- 2.576 * sqrt(1000 * 0.25) ~ 40.7.
        let d = dataset(4, 4);
        let mut counts = vec![0u32; 16];
        for seed in 0..1000 {
            let m = apply_mcar(&d, 0.5, seed).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    if !m.mask().is_observed(i, j) {
                        counts[i * 4 + j] += 1;
                    }
                }
            }
        }
        for (cell, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - 500.0).abs() < 41.0,
                "cell {cell} missing in {c}/1000 seeds"
            );
        }
    }

    #[test]
    fn mask_csv_roundtrip() {
        let d = dataset(5, 3);
        let m = apply_mcar(&d, 0.4, 11).unwrap();
        let mut buf = Vec::new();
        mask_to_csv(&mut buf, m.mask()).unwrap();
        let parsed = mask_from_csv(std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(&parsed, m.mask());
        let rebuilt = masked_from_parts(&d, parsed).unwrap();
        assert_eq!(rebuilt.mask(), m.mask());
    }
}

//! Dataset ingestion, standardization, splitting, and MCAR mask generation.
//!
//! All types here are immutable after construction and safe to share across
//! threads; every operation is a pure function of its inputs (masking and
//! splitting take explicit seeds).

mod csv_io;
mod mask;
mod matrix;
mod split;
mod standardize;

pub use csv_io::{load_csv, write_values_csv};
pub use mask::{apply_mcar, mask_from_csv, mask_to_csv, masked_from_parts, Mask, MaskedMatrix};
pub use matrix::{DataMatrix, Task};
pub use split::{split, SplitSpec};
pub use standardize::Standardizer;

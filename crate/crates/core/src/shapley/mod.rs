//! Shapley attribution: exact coalition enumeration over two value-function
//! modes, the linear closed form, and plot-table generators.

mod exact;
mod linear;
mod matrix;
mod value;
mod weights;

pub use exact::exact_shapley;
pub use linear::{linear_shapley, linear_shapley_grouped};
pub use matrix::{
    beeswarm_table, group_values, write_shapley_csv, BeeswarmRecord, GlobalImportance,
    ShapleyMatrix,
};
pub use value::{FeatureGroups, ValueFunction};
pub use weights::{CoalitionWeights, MAX_PLAYERS};

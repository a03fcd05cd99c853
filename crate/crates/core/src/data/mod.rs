//! Corpus ingestion and the skewed synthetic generator.

mod load;
mod synthetic;

pub use load::{load_dataset, read_dataset, write_user_lines, DataFormat};
pub use synthetic::{generate_synthetic, pareto_length, write_synthetic, zeta_sample, SyntheticSpec};

//! Feature-stream and dataset representations, file ingestion, dataset
//! statistics, and the synthetic contaminated-data generator.

pub mod io;
pub mod stats;
mod stream;
pub mod synth;

pub use io::{load_features, load_labels, save_features, save_features_text, save_labels};
pub use stats::compute_dataset_stats;
pub use stream::{Dataset, FeatureStream, LabelSet, SnippetLabel};
pub use synth::{generate_synthetic, generate_synthetic_with_truth, SynthConfig, SynthTruth};

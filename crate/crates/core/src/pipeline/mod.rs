//! File formats, synthetic data, the sweep harness and its renderers.

mod chart;
mod extract;
mod features;
mod manifest;
mod report;
mod sweep;
mod synth;

pub use chart::render_chart_svg;
pub use extract::{extract_features, id_from_path, preprocess_all};
pub use features::{align_labels, read_features, read_labels, valid_id, write_features, write_labels, CsvError};
pub use manifest::{read_manifest, write_manifest, ManifestEntry, ManifestError, Sex, MANIFEST_HEADER};
pub use report::{parse_report_csv, render_report_csv, REPORT_HEADER};
pub use sweep::{cell_seed, parse_algorithms, parse_k_range, sweep, SweepConfig, SweepReport, SweepRow};
pub use synth::{synth_blobs, synth_images, SynthImage};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("image {id}: {message}")]
    Image { id: String, message: String },
}

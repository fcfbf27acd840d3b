//! Image preprocessing and batched CNN feature extraction.

use rayon::prelude::*;

use crate::clustering::FeatureMatrix;
use crate::cnn::Network;
use crate::imaging::{preprocess, CropRect, ImageGray, PixelTensor};
use crate::numerics::Matrix;

use super::PipelineError;

/// Derives a feature id from a file path: the file stem with characters
/// outside `[A-Za-z0-9._-]` replaced by `_`.
pub fn id_from_path(path: &str) -> String {
    let name = std::path::Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let id: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect();
    if id.is_empty() {
        "_".to_string()
    } else {
        id
    }
}

/// Crops and resizes each image, in parallel; order is preserved.
pub fn preprocess_all(
    images: &[(String, ImageGray, Option<CropRect>)],
    size: usize,
) -> Result<Vec<(String, PixelTensor)>, PipelineError> {
    images
        .par_iter()
        .map(|(id, img, rect)| {
            preprocess(img, rect.as_ref(), size)
                .map(|(_, t)| (id.clone(), t))
                .map_err(|e| PipelineError::Image {
                    id: id.clone(),
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Forward passes in parallel; row `i` of the result belongs to `inputs[i]`.
pub fn extract_features(net: &Network, inputs: &[(String, PixelTensor)]) -> Result<FeatureMatrix, PipelineError> {
    if inputs.is_empty() {
        return Err(PipelineError::Config("no images to extract".into()));
    }
    let vectors: Vec<Vec<f64>> = inputs
        .par_iter()
        .map(|(id, t)| {
            net.forward(t).map_err(|e| PipelineError::Image {
                id: id.clone(),
                message: e.to_string(),
            })
        })
        .collect::<Result<_, _>>()?;
    let d = vectors[0].len();
    let ids = inputs.iter().map(|(id, _)| id.clone()).collect();
    let values = Matrix::from_vec(inputs.len(), d, vectors.concat());
    FeatureMatrix::new(ids, values).map_err(|e| PipelineError::Config(e.to_string()))
}

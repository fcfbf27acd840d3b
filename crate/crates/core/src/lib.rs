//! Unsupervised clustering of grayscale radiograph-style images: PGM loading
//! and preprocessing, a small forward-only CNN feature extractor, nine
//! clustering variants, silhouette scoring and a sweep harness.

pub mod clustering;
pub mod cnn;
pub mod imaging;
pub mod metrics;
pub mod numerics;
pub mod pipeline;

//! Seeded synthetic data: Gaussian blobs in feature space and two-population
//! grayscale images for the image path.

use crate::clustering::FeatureMatrix;
use crate::imaging::ImageGray;
use crate::numerics::{make_rng, Matrix};

use super::PipelineError;

/// Points are emitted round-robin over blobs: row `p` belongs to blob `p % n_blobs`.
/// Blob `i` is centred at `±separation * e_(i mod d)`, positive for the first `d` blobs.
pub fn synth_blobs(
    n_per_blob: usize,
    n_blobs: usize,
    d: usize,
    separation: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<(FeatureMatrix, Vec<usize>), PipelineError> {
    if n_per_blob == 0 || n_blobs == 0 || d == 0 {
        return Err(PipelineError::Config("n_per_blob, n_blobs and d must be at least 1".into()));
    }
    if !(separation > 0.0 && separation.is_finite()) || !(noise_sigma > 0.0 && noise_sigma.is_finite()) {
        return Err(PipelineError::Config("separation and noise_sigma must be positive".into()));
    }
    if n_blobs > 2 * d {
        return Err(PipelineError::Config(format!(
            "{n_blobs} blobs cannot be placed on the signed axes of a {d}-dimensional space"
        )));
    }
    let n = n_per_blob * n_blobs;
    let mut rng = make_rng(seed);
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for p in 0..n {
        let blob = p % n_blobs;
        let axis = blob % d;
        let sign = if blob < d { 1.0 } else { -1.0 };
        for j in 0..d {
            let center = if j == axis { sign * separation } else { 0.0 };
            values.push(center + noise_sigma * rng.next_gaussian());
        }
        labels.push(blob);
    }
    let ids = (0..n).map(|p| format!("s{p:05}")).collect();
    let fm = FeatureMatrix::new(ids, Matrix::from_vec(n, d, values))
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok((fm, labels))
}

/// One generated image with its population index.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub id: String,
    pub image: ImageGray,
    pub population: usize,
}

/// `n` square images alternating between two populations.
///
/// Population 0 is dark with fine horizontal banding and mild noise;
/// population 1 is bright with coarse vertical banding and stronger noise.
pub fn synth_images(n: usize, size: usize, seed: u64) -> Result<Vec<SynthImage>, PipelineError> {
    if n == 0 || size == 0 {
        return Err(PipelineError::Config("image count and size must be at least 1".into()));
    }
    let mut rng = make_rng(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let population = i % 2;
        let (base, amplitude, period, noise) = match population {
            0 => (70.0, 25.0, 6.0, 8.0),
            _ => (160.0, 45.0, 16.0, 20.0),
        };
        let phase = rng.next_uniform() * period;
        let mut pixels = Vec::with_capacity(size * size);
        for y in 0..size {
            for x in 0..size {
                let coord = if population == 0 { y } else { x } as f64;
                let wave = (std::f64::consts::TAU * (coord + phase) / period).sin();
                let v = base + amplitude * wave + noise * rng.next_gaussian();
                pixels.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
        let image = ImageGray::new(size, size, pixels).map_err(|e| PipelineError::Config(e.to_string()))?;
        out.push(SynthImage {
            id: format!("img_{i:03}"),
            image,
            population,
        });
    }
    Ok(out)
}

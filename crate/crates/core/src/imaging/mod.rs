//! Grayscale image loading and preprocessing: crop, resize, normalize.

mod pgm;

pub use pgm::{load_pgm, save_pgm, PgmError, PgmErrorKind};

/// Canonical side length of the images fed to the feature extractor.
pub const CANONICAL_SIZE: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImagingError {
    #[error("image dimensions must be non-zero and match the pixel count ({width}x{height} vs {len} pixels)")]
    BadDimensions { width: usize, height: usize, len: usize },
    #[error("crop rect must have non-zero extent")]
    EmptyCrop,
    #[error("crop rect exceeds image bounds: {axis} coordinate {coordinate} > {limit}")]
    OutOfBounds {
        axis: &'static str,
        coordinate: usize,
        limit: usize,
    },
    #[error("resize target must be at least 1x1")]
    BadTarget,
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGray {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(pixels.len()) {
            return Err(ImagingError::BadDimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Pixel at column `x`, row `y`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Axis-aligned crop rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl CropRect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    /// Rect `inner`, expressed relative to this rect, in the parent's frame.
    pub fn compose(&self, inner: &CropRect) -> CropRect {
        CropRect::new(self.x + inner.x, self.y + inner.y, inner.w, inner.h)
    }
}

/// Floating-point image tensor, shape `(height, width, channels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelTensor {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub values: Vec<f64>,
}

pub fn crop(img: &ImageGray, rect: &CropRect) -> Result<ImageGray, ImagingError> {
    if rect.w == 0 || rect.h == 0 {
        return Err(ImagingError::EmptyCrop);
    }
    let right = rect.x.saturating_add(rect.w);
    if right > img.width {
        return Err(ImagingError::OutOfBounds {
            axis: "x",
            coordinate: right,
            limit: img.width,
        });
    }
    let bottom = rect.y.saturating_add(rect.h);
    if bottom > img.height {
        return Err(ImagingError::OutOfBounds {
            axis: "y",
            coordinate: bottom,
            limit: img.height,
        });
    }
    let mut pixels = Vec::with_capacity(rect.w * rect.h);
    for row in rect.y..bottom {
        let start = row * img.width + rect.x;
        pixels.extend_from_slice(&img.pixels[start..start + rect.w]);
    }
    ImageGray::new(rect.w, rect.h, pixels)
}

/// Resizes to `out_w` x `out_h`.
///
/// Whole-factor downscales (including the identity) average each source
/// block and round half up. Everything else samples bilinearly at pixel
/// centers with edge clamping.
pub fn resize(img: &ImageGray, out_w: usize, out_h: usize) -> Result<ImageGray, ImagingError> {
    if out_w == 0 || out_h == 0 {
        return Err(ImagingError::BadTarget);
    }
    if img.width % out_w == 0 && img.height % out_h == 0 {
        Ok(area_downscale(img, img.width / out_w, img.height / out_h))
    } else {
        Ok(bilinear(img, out_w, out_h))
    }
}

fn area_downscale(img: &ImageGray, fx: usize, fy: usize) -> ImageGray {
    let out_w = img.width / fx;
    let out_h = img.height / fy;
    let count = (fx * fy) as u64;
    let mut pixels = Vec::with_capacity(out_w * out_h);
    for oy in 0..out_h {
        for ox in 0..out_w {
            let mut sum = 0u64;
            for y in oy * fy..(oy + 1) * fy {
                for x in ox * fx..(ox + 1) * fx {
                    sum += u64::from(img.get(x, y));
                }
            }
            pixels.push(((sum + count / 2) / count) as u8);
        }
    }
    ImageGray {
        width: out_w,
        height: out_h,
        pixels,
    }
}

fn bilinear(img: &ImageGray, out_w: usize, out_h: usize) -> ImageGray {
    let sx = img.width as f64 / out_w as f64;
    let sy = img.height as f64 / out_h as f64;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    let mut pixels = Vec::with_capacity(out_w * out_h);
    for oy in 0..out_h {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let ty = fy - y0 as f64;
        for ox in 0..out_w {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(img.width - 1);
            let tx = fx - x0 as f64;
            let top = f64::from(img.get(x0, y0)) * (1.0 - tx) + f64::from(img.get(x1, y0)) * tx;
            let bottom = f64::from(img.get(x0, y1)) * (1.0 - tx) + f64::from(img.get(x1, y1)) * tx;
            let v = top * (1.0 - ty) + bottom * ty;
            pixels.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
        }
    }
    ImageGray {
        width: out_w,
        height: out_h,
        pixels,
    }
}

/// Scales intensities into `[0, 1]` by dividing by 255.
pub fn normalize(img: &ImageGray) -> PixelTensor {
    PixelTensor {
        height: img.height,
        width: img.width,
        channels: 1,
        values: img.pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
    }
}

/// Crop (when a rect is given), resize to `size` x `size`, normalize.
pub fn preprocess(
    img: &ImageGray,
    rect: Option<&CropRect>,
    size: usize,
) -> Result<(ImageGray, PixelTensor), ImagingError> {
    let cropped = match rect {
        Some(r) => crop(img, r)?,
        None => img.clone(),
    };
    let resized = resize(&cropped, size, size)?;
    let tensor = normalize(&resized);
    Ok((resized, tensor))
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::subtitle::Timecode;

/// Grayscale frame with intensities in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameImage<T> {
    width: usize,
    height: usize,
    pixels: Vec<T>,
    pub timestamp: Timecode,
}

impl<T: Scalar> FrameImage<T> {
    pub fn new(width: usize, height: usize, pixels: Vec<T>, timestamp: Timecode) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("frame of size {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} pixels for a {width}x{height} frame",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("frame pixels".into()));
        }
        Ok(FrameImage {
            width,
            height,
            pixels,
            timestamp,
        })
    }

    pub fn filled(width: usize, height: usize, value: T, timestamp: Timecode) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], timestamp)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        timestamp: Timecode,
        f: impl Fn(usize, usize) -> T,
    ) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, pixels, timestamp)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn at(&self, x: usize, y: usize) -> T {
        self.pixels[y * self.width + x]
    }

    /// `1 - p` for every pixel.
    pub fn negative(&self) -> Self {
        FrameImage {
            pixels: self.pixels.iter().map(|&p| T::one() - p).collect(),
            ..self.clone()
        }
    }
}

/// Local SSIM parameters: square uniform window, stabilising constants
/// `(k1 L)^2` and `(k2 L)^2` for dynamic range `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimConfig {
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        SsimConfig {
            window: 8,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

pub fn ssim<T: Scalar>(a: &FrameImage<T>, b: &FrameImage<T>) -> Result<T> {
    ssim_with(a, b, &SsimConfig::default())
}

/// Mean SSIM over every window position (stride 1). Windows are clipped to
/// the frame size for frames smaller than the window.
pub fn ssim_with<T: Scalar>(a: &FrameImage<T>, b: &FrameImage<T>, config: &SsimConfig) -> Result<T> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Dimension(format!(
            "frames {}x{} and {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    if config.window == 0 {
        return Err(Error::Invalid("SSIM window must be positive".into()));
    }
    let (w, h) = (a.width, a.height);
    let ww = config.window.min(w);
    let wh = config.window.min(h);

    // Summed-area tables with a zero border row/column.
    let stride = w + 1;
    let mut sums = [(); 5].map(|_| vec![T::zero(); stride * (h + 1)]);
    for y in 0..h {
        let mut row = [T::zero(); 5];
        for x in 0..w {
            let p = a.at(x, y);
            let q = b.at(x, y);
            let vals = [p, q, p * p, q * q, p * q];
            for k in 0..5 {
                row[k] = row[k] + vals[k];
                let above = sums[k][y * stride + x + 1];
                sums[k][(y + 1) * stride + x + 1] = above + row[k];
            }
        }
    }
    let window_sum = |k: usize, x: usize, y: usize| {
        let t = &sums[k];
        t[(y + wh) * stride + x + ww] - t[y * stride + x + ww] - t[(y + wh) * stride + x]
            + t[y * stride + x]
    };

    let n = T::from_count(ww * wh);
    let c1 = T::lit((config.k1 * config.dynamic_range).powi(2));
    let c2 = T::lit((config.k2 * config.dynamic_range).powi(2));
    let two = T::lit(2.0);
    let mut total = T::zero();
    let positions = (w - ww + 1) * (h - wh + 1);
    for y in 0..=(h - wh) {
        for x in 0..=(w - ww) {
            let mx = window_sum(0, x, y) / n;
            let my = window_sum(1, x, y) / n;
            let vx = window_sum(2, x, y) / n - mx * mx;
            let vy = window_sum(3, x, y) / n - my * my;
            let cxy = window_sum(4, x, y) / n - mx * my;
            let num = (two * mx * my + c1) * (two * cxy + c2);
            let den = (mx * mx + my * my + c1) * (vx + vy + c2);
            total = total + num / den;
        }
    }
    Ok(total / T::from_count(positions))
}

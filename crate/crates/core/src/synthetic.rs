//! Synthetic test rasters with known ground truth.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::costs::PartitionK;
use crate::error::{Error, Result};

/// Flat stripe colors used by [`three_stripes`].
pub const STRIPE_COLORS: [[u8; 3]; 3] = [[200, 40, 40], [40, 170, 60], [50, 70, 210]];

/// Vertical stripes of the given widths and colors, plus Gaussian noise of
/// `noise` gray levels per channel. Returns the image and its ground truth.
pub fn stripes(
    height: u32,
    widths: &[u32],
    colors: &[[u8; 3]],
    noise: f64,
    seed: u64,
) -> Result<(RgbImage, PartitionK)> {
    if widths.is_empty() || widths.len() != colors.len() || widths.contains(&0) || height == 0 {
        return Err(Error::Config(
            "stripes need one positive width per color".into(),
        ));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::domain("noise", noise, "[0, inf)"));
    }
    let normal = Normal::new(0.0, noise).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width: u32 = widths.iter().sum();
    let mut stripe_of = Vec::with_capacity(width as usize);
    for (s, &w) in widths.iter().enumerate() {
        stripe_of.extend(std::iter::repeat_n(s, w as usize));
    }
    let mut img = RgbImage::new(width, height);
    let mut labels = Vec::with_capacity((width * height) as usize);
    for y in 0..height {
        for x in 0..width {
            let s = stripe_of[x as usize];
            let px = colors[s].map(|c| {
                (c as f64 + normal.sample(&mut rng))
                    .round()
                    .clamp(0.0, 255.0) as u8
            });
            img.put_pixel(x, y, Rgb(px));
            labels.push(s);
        }
    }
    Ok((img, PartitionK::new(labels, widths.len())?))
}

/// Square image of three equal-width stripes with noise σ = 2 gray levels.
pub fn three_stripes(size: u32, seed: u64) -> Result<(RgbImage, PartitionK)> {
    let base = size / 3;
    let widths = [base, base, size - 2 * base];
    stripes(size, &widths, &STRIPE_COLORS, 2.0, seed)
}

/// Randomized stripe image: 3 to 5 stripes of uneven widths and random
/// colors, for trend studies across many instances.
pub fn random_stripes(size: u32, seed: u64) -> Result<(RgbImage, PartitionK)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5712_1be5);
    let k = rng.random_range(3..=5usize);
    let mut cuts: Vec<u32> = Vec::new();
    while cuts.len() < k - 1 {
        let c = rng.random_range(3..size - 2);
        if cuts.iter().all(|&o| o.abs_diff(c) >= 3) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut widths = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(size)) {
        widths.push(c - prev);
        prev = c;
    }
    let colors: Vec<[u8; 3]> = (0..k)
        .map(|_| {
            [
                rng.random_range(20..236),
                rng.random_range(20..236),
                rng.random_range(20..236),
            ]
        })
        .collect();
    stripes(size, &widths, &colors, 2.0, seed)
}

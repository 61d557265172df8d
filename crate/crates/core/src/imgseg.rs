//! Image front end: color conversion, pixel affinities and segmentation.

use image::{ImageBuffer, Luma, Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::PartitionK;
use crate::error::{Error, Result};
use crate::graph::{BalanceMode, BalanceWeights, Graph, MIN_WEIGHT};
use crate::irrq::IrrqConfig;
use crate::partition::{hierarchical_segment, multiway_segment, Segmentation, SplitOrder};

/// sRGB (D65) to CIE XYZ.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// CIE L*a*b* of one sRGB pixel, D65 white.
pub fn rgb_pixel_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    let mut xyz = [0.0; 3];
    for (r, out) in RGB_TO_XYZ.iter().zip(xyz.iter_mut()) {
        // normalizing by the row sum maps white to exactly (1, 1, 1)
        let white: f64 = r.iter().sum();
        *out = (r[0] * lin[0] + r[1] * lin[1] + r[2] * lin[2]) / white;
    }
    let [fx, fy, fz] = xyz.map(lab_f);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Row-major per-pixel L*a*b* triples.
pub fn rgb_to_lab(image: &RgbImage) -> Result<Vec<[f64; 3]>> {
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::Image("empty raster".into()));
    }
    Ok(image.pixels().map(|p| rgb_pixel_to_lab(p.0)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffinityParams {
    /// Neighborhood radius in pixels.
    pub radius: f64,
    /// Kernel scale; `None` picks the median in-radius Lab distance.
    pub sigma: Option<f64>,
    pub min_weight: f64,
    /// Upper bound on the number of edges built.
    pub max_edges: usize,
}

impl Default for AffinityParams {
    fn default() -> Self {
        AffinityParams {
            radius: 10.0,
            sigma: None,
            min_weight: 0.0,
            max_edges: 50_000_000,
        }
    }
}

/// Weight given to 4-neighbor edges whose kernel value underflows, so the
/// pixel lattice always stays connected.
pub const LATTICE_WEIGHT_FLOOR: f64 = 1e-10;

const SIGMA_SAMPLES: usize = 10_000;

fn forward_offsets(radius: f64) -> Vec<(i64, i64)> {
    let r = radius.floor() as i64;
    let mut out = Vec::new();
    for dy in 0..=r {
        for dx in -r..=r {
            if (dy > 0 || dx > 0) && ((dx * dx + dy * dy) as f64) <= radius * radius {
                out.push((dx, dy));
            }
        }
    }
    out
}

fn lab_dist_sq(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|c| (a[c] - b[c]).powi(2)).sum()
}

/// Median Lab distance over a fixed-seed sample of in-radius pixel pairs.
pub fn estimate_sigma(lab: &[[f64; 3]], width: usize, height: usize, radius: f64) -> f64 {
    let offsets = forward_offsets(radius);
    let mut rng = ChaCha8Rng::seed_from_u64(0xaff1);
    let mut dists = Vec::with_capacity(SIGMA_SAMPLES);
    let mut attempts = 0;
    while dists.len() < SIGMA_SAMPLES && attempts < 20 * SIGMA_SAMPLES && !offsets.is_empty() {
        attempts += 1;
        let x = rng.random_range(0..width) as i64;
        let y = rng.random_range(0..height) as i64;
        let (dx, dy) = offsets[rng.random_range(0..offsets.len())];
        let (qx, qy) = (x + dx, y + dy);
        if qx < 0 || qy < 0 || qx >= width as i64 || qy >= height as i64 {
            continue;
        }
        let p = y as usize * width + x as usize;
        let q = qy as usize * width + qx as usize;
        dists.push(lab_dist_sq(&lab[p], &lab[q]).sqrt());
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let median = dists[dists.len() / 2];
    if median > 1e-9 {
        median
    } else {
        // flat images: any positive scale gives the same unit weights
        let nonzero: Vec<f64> = dists.into_iter().filter(|&d| d > 1e-9).collect();
        if nonzero.is_empty() {
            1.0
        } else {
            nonzero[nonzero.len() / 2]
        }
    }
}

/// Pixels become vertices; pixels within `radius` are joined with weight
/// `exp(−‖lab_i − lab_j‖² / (2σ²))`. Edges lighter than `min_weight` (or
/// than [`MIN_WEIGHT`]) are dropped, except 4-neighbor edges, which are
/// floored at [`LATTICE_WEIGHT_FLOOR`] instead.
pub fn lab_affinity(image: &RgbImage, params: &AffinityParams) -> Result<(Graph, f64)> {
    if !(params.radius >= 1.0) || !params.radius.is_finite() {
        return Err(Error::domain("radius", params.radius, "[1, inf)"));
    }
    let lab = rgb_to_lab(image)?;
    let (width, height) = (image.width() as usize, image.height() as usize);
    let offsets = forward_offsets(params.radius);
    let estimate = (width * height).saturating_mul(offsets.len());
    if estimate > params.max_edges {
        return Err(Error::TooLarge(format!(
            "{width}x{height} image at radius {} needs up to {estimate} edges (budget {})",
            params.radius, params.max_edges
        )));
    }
    let sigma = match params.sigma {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::domain("sigma", s, "(0, inf)")),
        None => estimate_sigma(&lab, width, height, params.radius),
    };
    let scale = 1.0 / (2.0 * sigma * sigma);
    let cutoff = params.min_weight.max(MIN_WEIGHT);

    let rows: Vec<Vec<(usize, usize, f64)>> = (0..height)
        .into_par_iter()
        .map(|y| {
            let mut out = Vec::with_capacity(width * offsets.len());
            for x in 0..width {
                let p = y * width + x;
                for &(dx, dy) in &offsets {
                    let (qx, qy) = (x as i64 + dx, y as i64 + dy);
                    if qx < 0 || qx >= width as i64 || qy >= height as i64 {
                        continue;
                    }
                    let q = qy as usize * width + qx as usize;
                    let w = (-lab_dist_sq(&lab[p], &lab[q]) * scale).exp();
                    let lattice = dx.abs() + dy.abs() == 1;
                    if w >= cutoff {
                        out.push((p, q, w));
                    } else if lattice {
                        out.push((p, q, w.max(LATTICE_WEIGHT_FLOOR)));
                    }
                }
            }
            out
        })
        .collect();
    let graph = Graph::new(width * height, rows.into_iter().flatten())?;
    Ok((graph, sigma))
}

/// Per-pixel segment labels, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: u32, height: u32, labels: Vec<u32>) -> Result<Self> {
        crate::graph::check_len(width as usize * height as usize, labels.len())?;
        let map = LabelMap {
            width,
            height,
            labels,
        };
        map.to_partition()?;
        Ok(map)
    }

    pub fn from_partition(width: u32, height: u32, part: &PartitionK) -> Result<Self> {
        Self::new(
            width,
            height,
            part.labels().iter().map(|&l| l as u32).collect(),
        )
    }

    pub fn to_partition(&self) -> Result<PartitionK> {
        PartitionK::from_labels(self.labels.iter().map(|&l| l as usize).collect())
    }

    pub fn k(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m as usize + 1)
    }

    pub fn to_gray16(&self) -> ImageBuffer<Luma<u16>, Vec<u16>> {
        ImageBuffer::from_fn(self.width, self.height, |x, y| {
            Luma([self.labels[(y * self.width + x) as usize].min(u16::MAX as u32) as u16])
        })
    }

    pub fn colorize(&self) -> RgbImage {
        ImageBuffer::from_fn(self.width, self.height, |x, y| {
            Rgb(palette_color(self.labels[(y * self.width + x) as usize]))
        })
    }
}

const PALETTE: [[u8; 3]; 12] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [170, 110, 40],
];

pub fn palette_color(label: u32) -> [u8; 3] {
    let base = PALETTE[label as usize % PALETTE.len()];
    let shade = (label as usize / PALETTE.len()) % 4;
    base.map(|c| (c as usize * (4 - shade) / 4) as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentMethod {
    #[default]
    Multiway,
    Hierarchical,
}

impl std::str::FromStr for SegmentMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "multiway" => Ok(SegmentMethod::Multiway),
            "hierarchical" => Ok(SegmentMethod::Hierarchical),
            other => Err(Error::Config(format!(
                "unknown segmentation method `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImageSegmentation {
    pub labels: LabelMap,
    pub graph: Graph,
    pub sigma: f64,
    pub segmentation: Segmentation,
}

/// Affinity graph, then multiway or hierarchical rounding into `cfg.k`
/// segments.
pub fn segment_image(
    image: &RgbImage,
    params: &AffinityParams,
    cfg: &IrrqConfig,
    method: SegmentMethod,
    mode: BalanceMode,
) -> Result<ImageSegmentation> {
    cfg.validate()?;
    let (graph, sigma) = lab_affinity(image, params)?;
    if cfg.k > graph.n() {
        return Err(Error::Config(format!(
            "cannot form {} segments from {} pixels",
            cfg.k,
            graph.n()
        )));
    }
    let segmentation = match method {
        SegmentMethod::Multiway => {
            let w = BalanceWeights::for_graph(&graph, mode)?;
            multiway_segment(&graph, cfg, &w, cfg.seed)?
        }
        SegmentMethod::Hierarchical => {
            hierarchical_segment(&graph, cfg, mode, SplitOrder::Cost)?.segmentation
        }
    };
    let labels = LabelMap::from_partition(image.width(), image.height(), &segmentation.partition)?;
    Ok(ImageSegmentation {
        labels,
        graph,
        sigma,
        segmentation,
    })
}

/// Population standard deviation of block volumes over their mean.
pub fn degree_spread(g: &Graph, part: &PartitionK) -> Result<f64> {
    part.check_n(g)?;
    let volumes = part.masses(&g.degrees());
    let k = volumes.len() as f64;
    let mean = volumes.iter().sum::<f64>() / k;
    if mean == 0.0 {
        return Ok(0.0);
    }
    let var = volumes.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
    Ok(var.sqrt() / mean)
}

/// Spread from volumes directly.
pub fn spread_of(volumes: &[f64]) -> f64 {
    let k = volumes.len() as f64;
    let mean = volumes.iter().sum::<f64>() / k;
    let var = volumes.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
    var.sqrt() / mean
}

pub fn read_rgb(path: &std::path::Path) -> Result<RgbImage> {
    Ok(image::open(path)?.to_rgb8())
}

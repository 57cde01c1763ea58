//! Synthetic road frames with known boundary positions.
//!
//! A frame is a dark roadbed with narrow bright vertical stripes painted
//! at chosen columns — the streaming chain should hand back exactly those
//! columns as lane boundaries. A 3-pixel stripe survives the averaging
//! stage with a symmetric intensity profile, so the Sobel response is
//! symmetric around the stripe center and the count-weighted centroid
//! lands on the painted column itself. Optional salt-and-pepper noise
//! exercises the smoothing stage's job.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::frame::RgbFrame;
use crate::stream::FrameGeometry;

/// Recipe for one synthetic frame.
#[derive(Debug, Clone)]
pub struct RoadSpec {
    pub geometry: FrameGeometry,
    /// Stripe center columns, strictly increasing.
    pub boundary_cols: Vec<u32>,
    /// Stripe width in pixels (odd; painted centered on the column).
    pub stripe_width: u32,
    pub background: u8,
    pub stripe_value: u8,
    /// Per-pixel probability of being replaced by pure black or white.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl RoadSpec {
    pub fn new(geometry: FrameGeometry, boundary_cols: Vec<u32>) -> Self {
        Self {
            geometry,
            boundary_cols,
            stripe_width: 3,
            background: 0,
            stripe_value: 255,
            noise_fraction: 0.0,
            seed: 0,
        }
    }
}

/// Paint the described road frame. Gray content (R=G=B) so the
/// converted luminance is exact.
pub fn generate_road(spec: &RoadSpec) -> RgbFrame {
    let g = spec.geometry;
    let mut frame = RgbFrame::new(g);
    let b = spec.background;
    for row in 0..g.height {
        for col in 0..g.width {
            frame.set_pixel(row, col, [b, b, b]);
        }
    }
    let half = spec.stripe_width / 2;
    for &center in &spec.boundary_cols {
        let lo = center.saturating_sub(half);
        let hi = (center + half).min(g.width - 1);
        for row in 0..g.height {
            for col in lo..=hi {
                let v = spec.stripe_value;
                frame.set_pixel(row, col, [v, v, v]);
            }
        }
    }
    if spec.noise_fraction > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for row in 0..g.height {
            for col in 0..g.width {
                if rng.gen_bool(spec.noise_fraction) {
                    let v = if rng.gen_bool(0.5) { 255 } else { 0 };
                    frame.set_pixel(row, col, [v, v, v]);
                }
            }
        }
    }
    frame
}

/// Pick `count` boundary columns, pairwise at least `min_gap` apart and
/// at least `margin` from either frame edge. Deterministic in the seed.
pub fn random_boundaries(
    geometry: FrameGeometry,
    count: u32,
    margin: u32,
    min_gap: u32,
    seed: u64,
) -> Vec<u32> {
    assert!(count >= 1);
    let usable = geometry.width - 2 * margin;
    let slot = usable / count;
    assert!(
        slot > min_gap,
        "width {} cannot fit {count} boundaries {min_gap} apart",
        geometry.width
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let jitter = rng.gen_range(0..=(slot - min_gap));
            margin + k * slot + min_gap / 2 + jitter
        })
        .collect()
}

/// A seeded multi-boundary road frame plus its ground truth.
pub fn random_road(
    geometry: FrameGeometry,
    count: u32,
    noise_fraction: f64,
    seed: u64,
) -> (RgbFrame, Vec<u32>) {
    let truth = random_boundaries(geometry, count, 8, 28, seed);
    let mut spec = RoadSpec::new(geometry, truth.clone());
    spec.noise_fraction = noise_fraction;
    spec.seed = seed.wrapping_add(1);
    (generate_road(&spec), truth)
}

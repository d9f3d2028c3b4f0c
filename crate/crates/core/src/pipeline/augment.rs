use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frame::Frame;
use crate::pipeline::preprocess::{quantize, sample_bilinear};

/// Largest rotation, in degrees, drawn by [`AugmentParams::sample`].
pub const MAX_ROTATION_DEG: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub flip: bool,
    pub angle_deg: f64,
}

impl AugmentParams {
    /// Flip with probability 1/2, angle uniform in [-20, 20] degrees.
    pub fn sample(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flip = rng.gen_bool(0.5);
        let angle_deg = rng.gen_range(-MAX_ROTATION_DEG..=MAX_ROTATION_DEG);
        AugmentParams { flip, angle_deg }
    }
}

pub fn flip_horizontal(f: &Frame) -> Frame {
    let (w, c) = (f.width(), f.channels());
    let mut out = f.clone();
    for y in 0..f.height() {
        let row = &f.data()[y * w * c..(y + 1) * w * c];
        let dst = &mut out.data_mut()[y * w * c..(y + 1) * w * c];
        for x in 0..w {
            dst[x * c..(x + 1) * c].copy_from_slice(&row[(w - 1 - x) * c..(w - x) * c]);
        }
    }
    out
}

/// Rotates about the frame centre. With y pointing down, positive angles turn
/// the image clockwise on screen. Samples falling outside the source
/// replicate the nearest edge pixel.
pub fn rotate(f: &Frame, angle_deg: f64) -> Frame {
    if angle_deg == 0.0 || f.is_empty() {
        return f.clone();
    }
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let cx = (f.width() as f64 - 1.0) / 2.0;
    let cy = (f.height() as f64 - 1.0) / 2.0;
    let mut out = f.clone();
    let c = f.channels();
    for y in 0..f.height() {
        for x in 0..f.width() {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            // Inverse mapping: rotate the output position back by -angle.
            let src_x = cos * dx + sin * dy + cx;
            let src_y = -sin * dx + cos * dy + cy;
            let base = (y * f.width() + x) * c;
            for ch in 0..c {
                out.data_mut()[base + ch] = quantize(sample_bilinear(f, src_x, src_y, ch));
            }
        }
    }
    out
}

pub fn apply_augment(f: &Frame, params: AugmentParams) -> Frame {
    let flipped = if params.flip { flip_horizontal(f) } else { f.clone() };
    rotate(&flipped, params.angle_deg)
}

/// Random flip then random rotation, fully determined by `rng_seed`.
pub fn augment(f: &Frame, rng_seed: u64) -> Frame {
    apply_augment(f, AugmentParams::sample(rng_seed))
}

//! Procedural grayscale training images.
//!
//! Each image layers a smooth background, oriented sinusoidal gratings and a
//! handful of hard-edged discs and rectangles. The gratings stay below the
//! ×2 LR Nyquist rate so the detail is recoverable in principle; the shape
//! edges are what bicubic upsampling blurs and the network learns to
//! sharpen.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::imagekit::ImageGrid;

enum Shape {
    Disc {
        cy: f64,
        cx: f64,
        r: f64,
        value: f64,
    },
    Rect {
        top: f64,
        left: f64,
        h: f64,
        w: f64,
        value: f64,
    },
}

impl Shape {
    fn covers(&self, y: f64, x: f64) -> Option<f64> {
        match *self {
            Shape::Disc { cy, cx, r, value } => {
                ((y - cy).powi(2) + (x - cx).powi(2) <= r * r).then_some(value)
            }
            Shape::Rect {
                top,
                left,
                h,
                w,
                value,
            } => (y >= top && y < top + h && x >= left && x < left + w).then_some(value),
        }
    }
}

struct Grating {
    fy: f64,
    fx: f64,
    phase: f64,
    amplitude: f64,
}

/// `count` square grayscale images of side `size`, values in `[0, 255]`
/// (`L = 255`). Identical arguments give identical images.
pub fn toy_images(count: usize, size: usize, seed: u64) -> Result<Vec<ImageGrid>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| toy_image(size, &mut rng)).collect()
}

fn toy_image(size: usize, rng: &mut ChaCha8Rng) -> Result<ImageGrid> {
    let s = size as f64;
    let base = rng.gen_range(0.3..0.7);
    let slope_y = rng.gen_range(-0.3..0.3) / s;
    let slope_x = rng.gen_range(-0.3..0.3) / s;

    let gratings: Vec<Grating> = (0..rng.gen_range(1..=3))
        .map(|_| {
            // cycles per pixel, below the LR Nyquist rate of 0.25
            let freq = rng.gen_range(0.03..0.2);
            let angle = rng.gen_range(0.0..PI);
            Grating {
                fy: freq * angle.sin(),
                fx: freq * angle.cos(),
                phase: rng.gen_range(0.0..2.0 * PI),
                amplitude: rng.gen_range(0.05..0.15),
            }
        })
        .collect();

    let shapes: Vec<Shape> = (0..rng.gen_range(4..=8))
        .map(|_| {
            let value = rng.gen_range(0.0..1.0);
            if rng.gen_bool(0.5) {
                Shape::Disc {
                    cy: rng.gen_range(0.0..s),
                    cx: rng.gen_range(0.0..s),
                    r: rng.gen_range(0.05..0.25) * s,
                    value,
                }
            } else {
                Shape::Rect {
                    top: rng.gen_range(-0.1..0.9) * s,
                    left: rng.gen_range(-0.1..0.9) * s,
                    h: rng.gen_range(0.1..0.4) * s,
                    w: rng.gen_range(0.1..0.4) * s,
                    value,
                }
            }
        })
        .collect();

    ImageGrid::from_fn(size, size, 1, 255.0, |r, c, _| {
        let (y, x) = (r as f64, c as f64);
        // Later shapes are drawn on top.
        let mut v = shapes
            .iter()
            .rev()
            .find_map(|sh| sh.covers(y, x))
            .unwrap_or(base + slope_y * y + slope_x * x);
        for g in &gratings {
            v += g.amplitude * (2.0 * PI * (g.fy * y + g.fx * x) + g.phase).sin();
        }
        (v.clamp(0.0, 1.0) * 255.0).round()
    })
}

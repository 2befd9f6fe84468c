//! Shared fixtures for the criterion benches.

use pspl_core::trainkit::toy_images;
use pspl_core::{Architecture, ImageGrid, SrModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A normalized toy image and a noisy copy of it, both `size × size`.
pub fn image_pair(size: usize, seed: u64) -> (ImageGrid, ImageGrid) {
    let hr = toy_images(1, size, seed)
        .unwrap()
        .remove(0)
        .normalized()
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = ImageGrid::from_fn(size, size, 1, 1.0, |r, c, _| {
        hr.get(r, c, 0) + rng.gen_range(-0.05..0.05)
    })
    .unwrap();
    (sr, hr)
}

/// The standard grayscale ×2 network with seeded weights.
pub fn standard_model(seed: u64) -> SrModel {
    SrModel::initialized(Architecture::standard(1, 2), seed).unwrap()
}

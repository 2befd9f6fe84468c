use proptest::prelude::*;
use pspl_core::imagekit::extract_patch;
use pspl_core::ssim::{gaussian_window, mean_ssim, ssim_map, ssim_patch};
use pspl_core::{ImageGrid, SsimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reflect-without-repeat, written as an explicit walk rather than a modulus.
fn mirror(mut i: i64, n: i64) -> usize {
    if n == 1 {
        return 0;
    }
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// Straight from the definition: for every pixel gather the mirrored window,
/// weight it with a freshly sampled Gaussian and evaluate SSIM from raw
/// moments.
fn naive_ssim_map(x: &[f64], y: &[f64], h: usize, w: usize, l: f64) -> Vec<f64> {
    let (size, sigma) = (11i64, 1.5f64);
    let r = size / 2;
    let mut g = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            g.push((-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= total);
    let (c1, c2) = ((0.01 * l).powi(2), (0.03 * l).powi(2));

    let mut out = Vec::with_capacity(h * w);
    for row in 0..h as i64 {
        for col in 0..w as i64 {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            let mut k = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let idx = mirror(row + dy, h as i64) * w + mirror(col + dx, w as i64);
                    let (a, b) = (x[idx], y[idx]);
                    mx += g[k] * a;
                    my += g[k] * b;
                    sxx += g[k] * a * a;
                    syy += g[k] * b * b;
                    sxy += g[k] * a * b;
                    k += 1;
                }
            }
            let (vx, vy, cov) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
            out.push(
                ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2)),
            );
        }
    }
    out
}

fn random_pair(rng: &mut ChaCha8Rng, h: usize, w: usize) -> (ImageGrid, ImageGrid) {
    let a = ImageGrid::from_fn(h, w, 1, 1.0, |_, _, _| rng.gen::<f64>()).unwrap();
    let noise = rng.gen_range(0.0..0.5);
    let b = ImageGrid::from_fn(h, w, 1, 1.0, |r, c, _| {
        (a.get(r, c, 0) + noise * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0)
    })
    .unwrap();
    (a, b)
}

#[test]
fn fast_map_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cfg = SsimConfig::default();
    for _ in 0..10 {
        let (a, b) = random_pair(&mut rng, 32, 32);
        let fast = ssim_map(&a, &b, &cfg).unwrap();
        let slow = naive_ssim_map(a.data(), b.data(), 32, 32, 1.0);
        let max = fast
            .data()
            .iter()
            .zip(&slow)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(max < 1e-6, "max abs error {max}");
    }
}

#[test]
fn map_agrees_with_patchwise_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = SsimConfig::default();
    let (a, b) = random_pair(&mut rng, 13, 17);
    let fast = ssim_map(&a, &b, &cfg).unwrap();
    for r in 0..13 {
        for c in 0..17 {
            let pa = extract_patch(&a, (r, c), 11).unwrap();
            let pb = extract_patch(&b, (r, c), 11).unwrap();
            let s = ssim_patch(&pa, &pb, &cfg).unwrap();
            assert!((fast.get(r, c, 0) - s).abs() < 1e-9, "({r}, {c})");
        }
    }
}

#[test]
fn tiny_images_mirror_consistently() {
    // Windows wider than the image still reflect, possibly several times.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (h, w) in [(1, 1), (1, 7), (3, 2), (5, 5)] {
        let (a, b) = random_pair(&mut rng, h, w);
        let fast = ssim_map(&a, &b, &SsimConfig::default()).unwrap();
        let slow = naive_ssim_map(a.data(), b.data(), h, w, 1.0);
        for (p, q) in fast.data().iter().zip(&slow) {
            assert!((p - q).abs() < 1e-6, "{h}x{w}");
        }
    }
}

#[test]
fn center_weight_matches_sampled_gaussian() {
    let g = gaussian_window(11, 1.5).unwrap();
    let mut total = 0.0;
    for dy in -5i32..=5 {
        for dx in -5i32..=5 {
            total += (-((dx * dx + dy * dy) as f64) / 4.5).exp();
        }
    }
    assert!((g[60] - 1.0 / total).abs() < 1e-12);
}

#[test]
fn identical_images_score_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (a, _) = random_pair(&mut rng, 20, 24);
    let map = ssim_map(&a, &a, &SsimConfig::default()).unwrap();
    assert!(map.data().iter().all(|v| (v - 1.0).abs() < 1e-9));
    assert!((mean_ssim(&a, &a, &SsimConfig::default()).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn mean_ssim_is_mean_of_oracle_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, b) = random_pair(&mut rng, 16, 16);
    let slow = naive_ssim_map(a.data(), b.data(), 16, 16, 1.0);
    let expected = slow.iter().sum::<f64>() / slow.len() as f64;
    assert!((mean_ssim(&a, &b, &SsimConfig::default()).unwrap() - expected).abs() < 1e-6);
}

#[test]
fn brightness_shift_lowers_similarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (a, _) = random_pair(&mut rng, 16, 16);
    let shifted = a.map(|v| v + 0.1).unwrap();
    let map = ssim_map(&a, &shifted, &SsimConfig::default()).unwrap();
    assert!(map.data().iter().all(|&v| v < 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Scaling the data together with `L` leaves every SSIM value unchanged,
    /// since C1 and C2 scale with L².
    #[test]
    fn invariant_under_range_scaling(seed in any::<u64>(), factor in 0.5f64..300.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = random_pair(&mut rng, 12, 12);
        let base = ssim_map(&a, &b, &SsimConfig::default()).unwrap();
        let sa = a.rescaled(factor).unwrap();
        let sb = b.rescaled(factor).unwrap();
        let scaled = ssim_map(&sa, &sb, &SsimConfig::for_range(factor)).unwrap();
        for (p, q) in base.data().iter().zip(scaled.data()) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_and_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = random_pair(&mut rng, 9, 14);
        let ab = ssim_map(&a, &b, &SsimConfig::default()).unwrap();
        let ba = ssim_map(&b, &a, &SsimConfig::default()).unwrap();
        prop_assert_eq!(ab.data(), ba.data());
        prop_assert!(ab.data().iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}

use std::path::Path;

use proptest::prelude::*;
use pspl_core::imagekit::{
    bicubic_resize, extract_patch, load_pfm, load_png, save_pfm, save_png, to_luminance,
};
use pspl_core::{Error, ImageGrid};

// ---------------------------------------------------------------------------
// PNG fixtures are assembled byte by byte: zlib "stored" blocks need no
// compressor, and the checksums are computed here from their definitions.

fn crc32(bytes: &[u8]) -> u32 {
    let mut crc = 0xffff_ffffu32;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xedb8_8320 & mask);
        }
    }
    !crc
}

fn adler32(bytes: &[u8]) -> u32 {
    let (mut a, mut b) = (1u32, 0u32);
    for &x in bytes {
        a = (a + x as u32) % 65521;
        b = (b + a) % 65521;
    }
    (b << 16) | a
}

fn chunk(out: &mut Vec<u8>, kind: &[u8; 4], body: &[u8]) {
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    let mut tagged = kind.to_vec();
    tagged.extend_from_slice(body);
    out.extend_from_slice(&tagged);
    out.extend_from_slice(&crc32(&tagged).to_be_bytes());
}

/// PNG with filter type 0 on every scanline. `color_type` 0 = gray, 2 = RGB.
fn hand_png(width: u32, height: u32, color_type: u8, interlace: u8, rows: &[Vec<u8>]) -> Vec<u8> {
    let mut raw = Vec::new();
    for row in rows {
        raw.push(0);
        raw.extend_from_slice(row);
    }
    let mut zlib = vec![0x78, 0x01];
    zlib.push(1); // final stored block
    zlib.extend_from_slice(&(raw.len() as u16).to_le_bytes());
    zlib.extend_from_slice(&(!(raw.len() as u16)).to_le_bytes());
    zlib.extend_from_slice(&raw);
    zlib.extend_from_slice(&adler32(&raw).to_be_bytes());

    let mut png = b"\x89PNG\r\n\x1a\n".to_vec();
    let mut ihdr = Vec::new();
    ihdr.extend_from_slice(&width.to_be_bytes());
    ihdr.extend_from_slice(&height.to_be_bytes());
    ihdr.extend_from_slice(&[8, color_type, 0, 0, interlace]);
    chunk(&mut png, b"IHDR", &ihdr);
    chunk(&mut png, b"IDAT", &zlib);
    chunk(&mut png, b"IEND", &[]);
    png
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, bytes).unwrap();
    path
}

#[test]
fn checksum_helpers_match_published_vectors() {
    assert_eq!(crc32(b"123456789"), 0xcbf4_3926);
    assert_eq!(adler32(b"Wikipedia"), 0x11e6_0398);
}

#[test]
fn black_rgb_png() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "black.png",
        &hand_png(2, 2, 2, 0, &[vec![0; 6], vec![0; 6]]),
    );
    let img = load_png(&path).unwrap();
    assert_eq!((img.height(), img.width(), img.channels()), (2, 2, 3));
    assert_eq!(img.dynamic_range(), 255.0);
    assert!(img.data().iter().all(|&v| v == 0.0));
}

#[test]
fn white_pixel_png() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "white.png",
        &hand_png(1, 1, 2, 0, &[vec![255; 3]]),
    );
    let img = load_png(&path).unwrap();
    assert_eq!((img.height(), img.width(), img.channels()), (1, 1, 3));
    assert_eq!(img.data(), &[255.0, 255.0, 255.0]);
}

#[test]
fn fixture_bytes_decode_exactly() {
    let rows: Vec<Vec<u8>> = (0..3u8)
        .map(|r| {
            (0..4u8 * 3)
                .map(|i| r.wrapping_mul(71).wrapping_add(i * 19))
                .collect()
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "rgb.png", &hand_png(4, 3, 2, 0, &rows));
    let img = load_png(&path).unwrap();
    for (r, row) in rows.iter().enumerate() {
        for (i, &byte) in row.iter().enumerate() {
            assert_eq!(img.get(r, i / 3, i % 3), byte as f64);
        }
    }

    let gray: Vec<Vec<u8>> = vec![vec![0, 17, 255], vec![128, 64, 1]];
    let path = write(dir.path(), "gray.png", &hand_png(3, 2, 0, 0, &gray));
    let img = load_png(&path).unwrap();
    assert_eq!(img.channels(), 1);
    assert_eq!(img.data(), &[0.0, 17.0, 255.0, 128.0, 64.0, 1.0]);
}

#[test]
fn png_write_read_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let img = ImageGrid::from_fn(5, 3, 3, 255.0, |r, c, ch| {
        ((r * 50 + c * 7 + ch * 90) % 256) as f64
    })
    .unwrap();
    let path = dir.path().join("rt.png");
    save_png(&img, &path).unwrap();
    assert_eq!(load_png(&path).unwrap(), img);
}

#[test]
fn unsupported_pngs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let interlaced = write(dir.path(), "adam7.png", &hand_png(1, 1, 0, 1, &[vec![7]]));
    assert!(load_png(&interlaced).is_err());
    let garbage = write(dir.path(), "junk.png", b"definitely not a png");
    assert!(load_png(&garbage).is_err());
    assert!(matches!(
        load_png(dir.path().join("missing.png")),
        Err(Error::Io { .. })
    ));
}

// ---------------------------------------------------------------------------
// Bicubic oracle: every output pixel is a direct 2-D weighted sum over the
// source with the Keys kernel written out independently.

fn keys(x: f64) -> f64 {
    let a = -0.5;
    let t = x.abs();
    if t < 1.0 {
        (a + 2.0) * t.powi(3) - (a + 3.0) * t.powi(2) + 1.0
    } else if t < 2.0 {
        a * t.powi(3) - 5.0 * a * t.powi(2) + 8.0 * a * t - 4.0 * a
    } else {
        0.0
    }
}

fn oracle_resize(src: &[f64], h: usize, w: usize, scale: f64) -> Vec<f64> {
    let (oh, ow) = (
        (h as f64 * scale).round() as usize,
        (w as f64 * scale).round() as usize,
    );
    let stretch = scale.min(1.0);
    let taps = |o: usize| -> Vec<(usize, f64)> {
        let center = (o as f64 + 0.5) / scale - 0.5;
        let reach = (2.0 / stretch).ceil() as i64 + 1;
        let base = center.floor() as i64;
        let mut t: Vec<(i64, f64)> = (base - reach..=base + reach)
            .map(|i| (i, keys((center - i as f64) * stretch)))
            .filter(|&(_, wt)| wt != 0.0)
            .collect();
        let total: f64 = t.iter().map(|p| p.1).sum();
        t.iter_mut().for_each(|p| p.1 /= total);
        t.into_iter()
            .map(|(i, wt)| (i.max(0) as usize, wt))
            .collect()
    };
    let mut out = vec![0.0; oh * ow];
    for oy in 0..oh {
        for ox in 0..ow {
            let mut acc = 0.0;
            for &(iy, wy) in &taps(oy) {
                for &(ix, wx) in &taps(ox) {
                    acc += wy * wx * src[iy.min(h - 1) * w + ix.min(w - 1)];
                }
            }
            out[oy * ow + ox] = acc;
        }
    }
    out
}

#[test]
fn ramp_downscale_matches_direct_oracle() {
    let ramp = ImageGrid::from_fn(8, 8, 1, 1.0, |r, c, _| (r * 8 + c) as f64 / 63.0).unwrap();
    let fast = bicubic_resize(&ramp, 0.5).unwrap();
    let slow = oracle_resize(ramp.data(), 8, 8, 0.5);
    assert_eq!((fast.height(), fast.width()), (4, 4));
    let max = fast
        .data()
        .iter()
        .zip(&slow)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(max < 1e-5, "max abs diff {max}");
}

#[test]
fn random_resizes_match_direct_oracle() {
    for (h, w, scale) in [(7, 5, 2.0), (9, 6, 0.5), (6, 6, 3.0), (12, 10, 0.25)] {
        let img = ImageGrid::from_fn(h, w, 1, 1.0, |r, c, _| {
            ((r * 37 + c * 91) % 17) as f64 / 17.0
        })
        .unwrap();
        let fast = bicubic_resize(&img, scale).unwrap();
        let slow = oracle_resize(img.data(), h, w, scale);
        for (a, b) in fast.data().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-10, "{h}x{w} by {scale}");
        }
    }
}

#[test]
fn patch_extraction_mirrors_borders() {
    // 4x4 grid with value 10 r + c; the top-left 5x5 window reflects rows and
    // columns -2, -1 onto 2, 1.
    let g = ImageGrid::from_fn(4, 4, 1, 100.0, |r, c, _| (10 * r + c) as f64).unwrap();
    let p = extract_patch(&g, (0, 0), 5).unwrap();
    let idx = [2usize, 1, 0, 1, 2];
    for (pr, &r) in idx.iter().enumerate() {
        for (pc, &c) in idx.iter().enumerate() {
            assert_eq!(p.plane(0)[pr * 5 + pc], (10 * r + c) as f64);
        }
    }
    assert!(extract_patch(&g, (1, 1), 4).is_err());
}

#[test]
fn luminance_anchors() {
    let red = ImageGrid::new(1, 1, 3, vec![255.0, 0.0, 0.0], 255.0).unwrap();
    assert!((to_luminance(&red).unwrap().data()[0] - 76.245).abs() < 1e-9);
    let white = ImageGrid::filled(2, 2, 3, 255.0, 255.0).unwrap();
    assert!(to_luminance(&white)
        .unwrap()
        .data()
        .iter()
        .all(|&v| v == 255.0));
    let gray = ImageGrid::filled(2, 2, 1, 3.0, 255.0).unwrap();
    assert!(to_luminance(&gray).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pfm_roundtrip_is_bit_exact(
        h in 1usize..6,
        w in 1usize..6,
        rgb in any::<bool>(),
        range in prop::sample::select(vec![1.0f64, 255.0, 0.5]),
        seed in any::<u64>(),
    ) {
        let channels = if rgb { 3 } else { 1 };
        // Values representable in f32, which is what the format stores.
        let img = ImageGrid::from_fn(h, w, channels, range, |r, c, ch| {
            let bits = seed.wrapping_mul(6364136223846793005)
                .wrapping_add((r * 131 + c * 17 + ch) as u64);
            ((bits >> 40) as f32 / (1u32 << 24) as f32 * range as f32) as f64
        }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pfm");
        save_pfm(&img, &path).unwrap();
        let back = load_pfm(&path).unwrap();
        prop_assert_eq!(back, img);
    }
}

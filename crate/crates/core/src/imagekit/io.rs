use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::ImageGrid;
use crate::error::{Error, Result};

/// Decode an 8-bit grayscale or RGB PNG into a grid with `L = 255`.
///
/// Samples are taken verbatim from the decoded scanlines; gamma, ICC and
/// other color chunks are ignored.
pub fn load_png(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let png_err = |source| Error::Png {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = decoder.read_info().map_err(png_err)?;
    let unsupported = |reason: String| Error::Unsupported {
        path: path.to_path_buf(),
        reason,
    };
    let info = reader.info();
    if info.interlaced {
        return Err(unsupported("interlaced PNG".into()));
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(unsupported(format!(
            "bit depth {:?}, only 8-bit is supported",
            info.bit_depth
        )));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => {
            return Err(unsupported(format!(
                "color type {other:?}, expected grayscale or RGB"
            )))
        }
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| unsupported("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(png_err)?;
    let (width, height) = (frame.width as usize, frame.height as usize);
    let row_bytes = width * channels;
    let mut data = Vec::with_capacity(height * row_bytes);
    for row in buf.chunks(frame.line_size).take(height) {
        data.extend(row[..row_bytes].iter().map(|&b| b as f64));
    }
    ImageGrid::new(height, width, channels, data, 255.0)
}

/// Quantize to 8 bits (`round(v / L * 255)`, clamped) and write a PNG.
pub fn save_png(grid: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        grid.width() as u32,
        grid.height() as u32,
    );
    encoder.set_color(if grid.channels() == 3 {
        png::ColorType::Rgb
    } else {
        png::ColorType::Grayscale
    });
    encoder.set_depth(png::BitDepth::Eight);
    let scale = 255.0 / grid.dynamic_range();
    let bytes: Vec<u8> = grid
        .data()
        .iter()
        .map(|&v| (v * scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    let enc_err = |source| Error::PngEncode {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = encoder.write_header().map_err(enc_err)?;
    writer.write_image_data(&bytes).map_err(enc_err)?;
    writer.finish().map_err(enc_err)
}

/// Serialize `grid` as a little-endian Portable Float Map.
///
/// The header scale field carries `-L`, so the dynamic range survives a
/// round trip. Samples are stored as `f32`, bottom scanline first.
pub fn save_pfm(grid: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pfm(grid)?;
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_pfm(grid: &ImageGrid) -> Result<Vec<u8>> {
    let magic = match grid.channels() {
        1 => "Pf",
        3 => "PF",
        n => {
            return Err(Error::InvalidArgument(format!(
                "PFM holds 1 or 3 channels, got {n}"
            )))
        }
    };
    let header = format!(
        "{magic}\n{} {}\n{:?}\n",
        grid.width(),
        grid.height(),
        -grid.dynamic_range()
    );
    let row_len = grid.width() * grid.channels();
    let mut out = Vec::with_capacity(header.len() + grid.len() * 4);
    out.extend_from_slice(header.as_bytes());
    for row in grid.data().chunks_exact(row_len).rev() {
        for &v in row {
            let f = v as f32;
            if !f.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{v} does not fit in a 32-bit float"
                )));
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    Ok(out)
}

/// Read a Portable Float Map (`Pf` grayscale or `PF` color, either byte
/// order). The absolute header scale becomes the grid's dynamic range.
pub fn load_pfm(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes).map_err(|reason| Error::malformed(path, reason))
}

pub(crate) fn decode_pfm(bytes: &[u8]) -> std::result::Result<ImageGrid, String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<&str, String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos || pos >= bytes.len() {
            return Err("truncated header".into());
        }
        let tok = std::str::from_utf8(&bytes[start..pos]).map_err(|_| "non-ASCII header")?;
        // Consume the single whitespace byte that terminates the token.
        pos += 1;
        Ok(tok)
    };
    let channels = match token()? {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(format!("bad magic {other:?}")),
    };
    let width: usize = token()?.parse().map_err(|_| "bad width")?;
    let height: usize = token()?.parse().map_err(|_| "bad height")?;
    let scale: f64 = token()?.parse().map_err(|_| "bad scale")?;
    if !scale.is_finite() || scale == 0.0 {
        return Err(format!("bad scale {scale}"));
    }
    let little_endian = scale < 0.0;
    let row_len = width * channels;
    let expected = row_len * height * 4;
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(format!(
            "payload is {} bytes, expected {expected}",
            payload.len()
        ));
    }
    let mut data = vec![0.0; row_len * height];
    for (file_row, chunk) in payload.chunks_exact(row_len * 4).enumerate() {
        let row = height - 1 - file_row;
        for (i, b) in chunk.chunks_exact(4).enumerate() {
            let raw = [b[0], b[1], b[2], b[3]];
            let v = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            data[row * row_len + i] = v as f64;
        }
    }
    ImageGrid::new(height, width, channels, data, scale.abs()).map_err(|e| e.to_string())
}

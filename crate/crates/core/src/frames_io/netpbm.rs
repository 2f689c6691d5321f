//! Minimal binary Netpbm codec: 16-bit P5 for thermal counts, 8-bit P6 for RGB.

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) struct Header {
    pub magic: [u8; 2],
    pub width: u32,
    pub height: u32,
    pub maxval: u32,
    /// Offset of the first raster byte.
    pub data_start: usize,
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::Netpbm {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub(crate) fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(malformed(path, "missing magic number"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // whitespace and comments between tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(malformed(path, "truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(malformed(path, "expected a decimal header field"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| malformed(path, format!("header field {text} out of range")))?;
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(malformed(path, "missing whitespace after maxval")),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(malformed(path, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(malformed(path, format!("maxval {maxval} out of range")));
    }
    Ok(Header {
        magic,
        width,
        height,
        maxval,
        data_start: pos,
    })
}

/// Decodes a P5 (graymap) file into 16-bit samples.
pub(crate) fn decode_pgm(bytes: &[u8], path: &Path) -> Result<(u32, u32, Vec<u16>)> {
    let header = parse_header(bytes, path)?;
    if &header.magic != b"P5" {
        return Err(malformed(path, "expected binary graymap (P5)"));
    }
    let n = header.width as usize * header.height as usize;
    let data = &bytes[header.data_start..];
    let samples = if header.maxval > 255 {
        if data.len() < 2 * n {
            return Err(malformed(path, "truncated raster"));
        }
        data[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        if data.len() < n {
            return Err(malformed(path, "truncated raster"));
        }
        data[..n].iter().map(|&b| u16::from(b)).collect()
    };
    Ok((header.width, header.height, samples))
}

/// Decodes a P6 (pixmap) file with 8-bit samples.
pub(crate) fn decode_ppm(bytes: &[u8], path: &Path) -> Result<(u32, u32, Vec<u8>)> {
    let header = parse_header(bytes, path)?;
    if &header.magic != b"P6" {
        return Err(malformed(path, "expected binary pixmap (P6)"));
    }
    if header.maxval > 255 {
        return Err(malformed(path, "16-bit pixmaps are not supported"));
    }
    let n = 3 * header.width as usize * header.height as usize;
    let data = &bytes[header.data_start..];
    if data.len() < n {
        return Err(malformed(path, "truncated raster"));
    }
    Ok((header.width, header.height, data[..n].to_vec()))
}

pub(crate) fn encode_pgm16(width: u32, height: u32, samples: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(samples.len() * 2);
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

pub(crate) fn encode_ppm(width: u32, height: u32, rgb: &[u8]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_with_comments() {
        let mut bytes = b"P5\n# a comment\n2 1\n# another\n65535\n".to_vec();
        bytes.extend_from_slice(&[0x12, 0x34, 0xff, 0xff]);
        let (w, h, s) = decode_pgm(&bytes, Path::new("x.pgm")).unwrap();
        assert_eq!((w, h), (2, 1));
        assert_eq!(s, vec![0x1234, 0xffff]);
    }

    #[test]
    fn eight_bit_graymap_is_widened() {
        let mut bytes = b"P5 3 1 255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255]);
        let (_, _, s) = decode_pgm(&bytes, Path::new("x.pgm")).unwrap();
        assert_eq!(s, vec![0, 128, 255]);
    }

    #[test]
    fn rejects_bad_headers() {
        let p = Path::new("x.pgm");
        assert!(decode_pgm(b"P2\n1 1\n255\n0", p).is_err());
        assert!(decode_pgm(b"P5\n1\n", p).is_err());
        assert!(decode_pgm(b"P5\n0 1\n255\n", p).is_err());
        assert!(decode_pgm(b"P5\n2 2\n70000\n", p).is_err());
        assert!(decode_pgm(b"P5\n2 2\n65535\n\x00\x01", p).is_err());
        assert!(decode_ppm(b"P5\n1 1\n255\n\x00", p).is_err());
    }

    #[test]
    fn all_zero_frame_encodes_with_full_maxval() {
        let bytes = encode_pgm16(8, 8, &[0; 64]);
        assert!(bytes.starts_with(b"P5\n8 8\n65535\n"));
        assert_eq!(bytes.len(), "P5\n8 8\n65535\n".len() + 128);
    }
}

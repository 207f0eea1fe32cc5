//! Binary PGM (P5), 8-bit maxval.

use std::io::Write;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, String> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos).ok_or("missing magic")?;
    if magic != b"P5" {
        return Err(format!("unsupported magic {:?}", String::from_utf8_lossy(magic)));
    }
    let mut header = [0u32; 3];
    for (slot, name) in header.iter_mut().zip(["width", "height", "maxval"]) {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| format!("missing {name}"))?;
        *slot = std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("invalid {name}"))?;
    }
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 255 {
        return Err(format!("maxval {maxval} is not 8-bit"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let n = width as usize * height as usize;
    let raster = bytes.get(pos..pos + n).ok_or("truncated raster")?;
    let data = if maxval == 255 {
        raster.to_vec()
    } else {
        raster
            .iter()
            .map(|&v| ((v.min(maxval as u8) as u32 * 255 + maxval / 2) / maxval) as u8)
            .collect()
    };
    Ok(GrayImage { width, height, data })
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

pub fn encode_pgm(width: u32, height: u32, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len() + 20);
    write!(out, "P5\n{width} {height}\n255\n").expect("writing to a Vec");
    out.extend_from_slice(data);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let data: Vec<u8> = (0..=255u8).cycle().take(12 * 9).collect();
        let bytes = encode_pgm(12, 9, &data);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!((img.width, img.height), (12, 9));
        assert_eq!(img.data, data);
    }

    #[test]
    fn header_comments_and_low_maxval() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# c\n15\n".to_vec();
        bytes.extend_from_slice(&[15, 0]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!(img.data, vec![255, 0]);
    }

    #[test]
    fn truncated_and_wide_rejected() {
        assert!(decode_pgm(b"P5 4 4 255\n\x00\x01").is_err());
        assert!(decode_pgm(b"P5 1 1 65535\n\x00\x01").is_err());
        assert!(decode_pgm(b"P2 1 1 255\n0").is_err());
    }
}

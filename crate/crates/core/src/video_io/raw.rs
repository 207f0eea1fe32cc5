//! Raw Y8 stream: a 12-byte little-endian header `width:u32, height:u32,
//! frame_count:u32`, followed by `frame_count` row-major 8-bit frames.

use std::io::{Read, Write};

use super::{Frame, VideoError};

pub const HEADER_LEN: usize = 12;

pub fn read_raw_stream(r: &mut dyn Read, fps: f64) -> Result<Vec<Frame>, VideoError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|e| VideoError::DecodeFailure {
        index: 0,
        source_name: "raw stream".into(),
        reason: format!("header: {e}"),
    })?;
    let field = |i: usize| u32::from_le_bytes(header[i * 4..i * 4 + 4].try_into().expect("4 bytes"));
    let (width, height, count) = (field(0), field(1), field(2));
    let size = width as usize * height as usize;
    let mut frames = Vec::with_capacity(count as usize);
    for index in 0..count as usize {
        let mut data = vec![0u8; size];
        r.read_exact(&mut data).map_err(|e| VideoError::DecodeFailure {
            index,
            source_name: "raw stream".into(),
            reason: e.to_string(),
        })?;
        let frame = Frame::new(width, height, data, index as u64, fps).map_err(|e| VideoError::DecodeFailure {
            index,
            source_name: "raw stream".into(),
            reason: e.to_string(),
        })?;
        frames.push(frame);
    }
    Ok(frames)
}

pub fn write_raw_stream(w: &mut dyn Write, frames: &[Frame]) -> std::io::Result<()> {
    let (width, height) = frames.first().map(|f| (f.width(), f.height())).unwrap_or((0, 0));
    w.write_all(&width.to_le_bytes())?;
    w.write_all(&height.to_le_bytes())?;
    w.write_all(&(frames.len() as u32).to_le_bytes())?;
    for f in frames {
        if (f.width(), f.height()) != (width, height) {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "mixed frame sizes"));
        }
        w.write_all(f.data())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_round_trip() {
        let frames: Vec<Frame> = (0..3)
            .map(|i| Frame::new(8, 10, vec![i as u8 * 40; 80], i, 30.0).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_raw_stream(&mut buf, &frames).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 3 * 80);
        let back = read_raw_stream(&mut buf.as_slice(), 30.0).unwrap();
        assert_eq!(back, frames);
    }

    #[test]
    fn truncated_stream_reports_frame_index() {
        let mut buf = Vec::new();
        buf.extend_from_slice(&8u32.to_le_bytes());
        buf.extend_from_slice(&8u32.to_le_bytes());
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&[0u8; 64 + 10]);
        match read_raw_stream(&mut buf.as_slice(), 30.0) {
            Err(VideoError::DecodeFailure { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}

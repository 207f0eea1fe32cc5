//! Frame ingestion and synthetic scene rendering.
//!
//! Frames are 8-bit grayscale. Colour PNG input is reduced with the integer
//! luma `(77 R + 150 G + 29 B) >> 8`, which is exact and identical on every
//! platform.

mod frame;
pub mod pgm;
pub mod raw;
pub mod synthetic;

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

pub use frame::{Frame, MIN_FRAME_SIDE};
pub use synthetic::{
    render_synthetic, write_synthetic, AccelSegment, AngleProgram, GroundTruth, LinkSpec, LinkTruth, Occlusion,
    OcclusionRect, SyntheticSpec,
};

pub const DEFAULT_FPS: f64 = 30.0;

#[derive(Debug, thiserror::Error)]
pub enum VideoError {
    #[error("frame {index} is {found_w}x{found_h}, expected {expected_w}x{expected_h}")]
    MixedDimensions {
        index: usize,
        expected_w: u32,
        expected_h: u32,
        found_w: u32,
        found_h: u32,
    },
    #[error("cannot decode frame {index} ({source_name}): {reason}")]
    DecodeFailure {
        index: usize,
        source_name: String,
        reason: String,
    },
    #[error("need at least {required} frames, found {found}")]
    TooFewFrames { found: usize, required: usize },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("link {link} leaves the {width}x{height} frame at frame {frame}")]
    LinkOutOfFrame {
        link: usize,
        frame: usize,
        width: u32,
        height: u32,
    },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(#[from] crate::keyvalue::ParseError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl VideoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        VideoError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Where frames come from.
pub enum FrameSource<'a> {
    /// PGM/PNG files, ordered by file name.
    Directory(&'a Path),
    /// Raw Y8 stream with the 12-byte header (see [`raw`]).
    RawStream(&'a mut dyn Read),
}

/// Reads an ordered frame sequence and checks that at least `min_frames`
/// are present.
pub fn read_frame_sequence(source: FrameSource<'_>, fps: f64, min_frames: usize) -> Result<Vec<Frame>, VideoError> {
    let frames = match source {
        FrameSource::Directory(dir) => read_directory(dir, fps)?,
        FrameSource::RawStream(r) => raw::read_raw_stream(r, fps)?,
    };
    if frames.len() < min_frames {
        return Err(VideoError::TooFewFrames {
            found: frames.len(),
            required: min_frames,
        });
    }
    Ok(frames)
}

/// Image files in `dir` with a `.pgm` or `.png` extension, sorted by name.
pub fn list_image_files(dir: &Path) -> Result<Vec<PathBuf>, VideoError> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| VideoError::io(dir, e))? {
        let path = entry.map_err(|e| VideoError::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("pgm") | Some("png")) && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn read_directory(dir: &Path, fps: f64) -> Result<Vec<Frame>, VideoError> {
    let paths = list_image_files(dir)?;
    let mut frames: Vec<Frame> = Vec::with_capacity(paths.len());
    for (index, path) in paths.iter().enumerate() {
        let bytes = fs::read(path).map_err(|e| VideoError::io(path, e))?;
        let (w, h, data) = decode_image(&bytes).map_err(|reason| VideoError::DecodeFailure {
            index,
            source_name: path.display().to_string(),
            reason,
        })?;
        if let Some(first) = frames.first() {
            if (first.width(), first.height()) != (w, h) {
                return Err(VideoError::MixedDimensions {
                    index,
                    expected_w: first.width(),
                    expected_h: first.height(),
                    found_w: w,
                    found_h: h,
                });
            }
        }
        let frame = Frame::new(w, h, data, index as u64, fps).map_err(|e| VideoError::DecodeFailure {
            index,
            source_name: path.display().to_string(),
            reason: e.to_string(),
        })?;
        frames.push(frame);
    }
    Ok(frames)
}

/// Decodes PGM (P5) or PNG bytes to grayscale, sniffing the magic number.
pub fn decode_image(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), String> {
    if bytes.starts_with(b"P5") {
        let img = pgm::decode_pgm(bytes)?;
        return Ok((img.width, img.height, img.data));
    }
    if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        return decode_png(bytes);
    }
    Err("unrecognised image format (expected PGM P5 or PNG)".into())
}

fn decode_png(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), String> {
    use image::DynamicImage;
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(|e| e.to_string())?;
    let (w, h) = (img.width(), img.height());
    let data = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        other => return Err(format!("unsupported PNG pixel format {:?}", other.color())),
    };
    Ok((w, h, data))
}

/// Integer luma: `(77 R + 150 G + 29 B) >> 8`.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((77 * r as u32 + 150 * g as u32 + 29 * b as u32) >> 8) as u8
}

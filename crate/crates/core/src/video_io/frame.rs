use super::VideoError;

/// Smallest accepted frame side, in pixels.
pub const MIN_FRAME_SIDE: u32 = 8;

/// Immutable 8-bit grayscale frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: u32,
    height: u32,
    data: Vec<u8>,
    index: u64,
    timestamp: f64,
}

impl Frame {
    /// Row-major intensities; `timestamp = index / fps`.
    pub fn new(width: u32, height: u32, data: Vec<u8>, index: u64, fps: f64) -> Result<Self, VideoError> {
        if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
            return Err(VideoError::InvalidFrame(format!(
                "{width}x{height} is smaller than {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}"
            )));
        }
        if data.len() != width as usize * height as usize {
            return Err(VideoError::InvalidFrame(format!(
                "{} intensities for a {width}x{height} frame",
                data.len()
            )));
        }
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(VideoError::InvalidFrame(format!("fps must be positive, got {fps}")));
        }
        Ok(Self {
            width,
            height,
            data,
            index,
            timestamp: index as f64 / fps,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Same pixels under a different ordinal.
    pub fn with_index(mut self, index: u64, fps: f64) -> Self {
        self.index = index;
        self.timestamp = index as f64 / fps;
        self
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Frame::new(7, 8, vec![0; 56], 0, 30.0).is_err());
        assert!(Frame::new(8, 8, vec![0; 63], 0, 30.0).is_err());
        assert!(Frame::new(8, 8, vec![0; 64], 0, 0.0).is_err());
        let f = Frame::new(8, 8, vec![0; 64], 3, 30.0).unwrap();
        assert!((f.timestamp() - 0.1).abs() < 1e-15);
    }
}

use crate::geometry::Vec2;
use crate::video_io::{AngleProgram, LinkSpec, SyntheticSpec};

/// One 8 px thick link pivoting near the lower left of the frame.
pub fn rotating_link(width: u32, height: u32, frames: usize, length: f64, angle: f64, omega: f64) -> SyntheticSpec {
    let pivot = Vec2::new(width as f64 * 0.2, height as f64 * 0.8);
    SyntheticSpec::single_link(
        width,
        height,
        frames,
        pivot,
        LinkSpec {
            length_px: length,
            thickness_px: 8.0,
            intensity: SyntheticSpec::default_intensity(0),
            program: AngleProgram::constant_velocity(angle, omega),
        },
    )
}

//! Video-to-motion pipeline for a planar arm: frame differencing, object
//! localization, motion estimation with occlusion prediction, and a
//! simulated joint servo.

pub mod actuation;
pub mod don_core;
pub mod estimation;
pub mod geometry;
pub mod keyvalue;
pub mod mask;
pub mod multilink;
pub mod pipeline;
pub mod prediction;
pub mod video_io;

#[cfg(test)]
pub(crate) mod testutil;

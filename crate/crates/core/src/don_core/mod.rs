//! Layers 1-3: sliding window, frame differences, object finders.

pub mod blur;
pub mod debug;
pub mod difference;
pub mod morphology;
mod object;
pub mod skeleton;
mod window;

pub use blur::GaussianBlur;
pub use difference::{binarize, delta1, delta2, DEFAULT_THRESHOLD};
pub use object::{locate_object, observe, observe_layers, label_pivots, Cleanup, LayerMasks, ObjectObservation};
pub use skeleton::{skeletonize, Skeleton};
pub use window::FrameWindow;

pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_BLUR_SIZE: usize = 15;
pub const DEFAULT_BLUR_SIGMA: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DonError {
    #[error("frame is {}x{}, window holds {}x{}", found.0, found.1, expected.0, expected.1)]
    DimensionMismatch { expected: (u32, u32), found: (u32, u32) },
    #[error("expected frame index {expected}, got {found}")]
    NonConsecutiveIndex { expected: u64, found: u64 },
    #[error("window holds {have} frames, needs {need}")]
    WindowNotFull { have: usize, need: usize },
    #[error("masks differ in size")]
    MaskShapeMismatch,
    #[error("no moving object")]
    EmptyObject,
    #[error("blob of {pixels} pixels has no usable skeleton")]
    DegenerateBlob { pixels: usize },
    #[error("no motion in any frame of the window")]
    AllFramesEmpty,
}

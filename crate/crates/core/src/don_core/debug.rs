//! PGM dumps of intermediate masks, named `<frame>_<layer>_<p>.pgm`.

use std::path::{Path, PathBuf};

use super::object::LayerMasks;
use crate::mask::BinaryMask;
use crate::video_io::pgm::encode_pgm;
use crate::video_io::VideoError;

pub fn mask_path(dir: &Path, frame: u64, layer: &str, p: usize) -> PathBuf {
    dir.join(format!("{frame}_{layer}_{p}.pgm"))
}

pub fn write_mask(dir: &Path, frame: u64, layer: &str, p: usize, mask: &BinaryMask) -> Result<(), VideoError> {
    let path = mask_path(dir, frame, layer, p);
    let bytes = encode_pgm(mask.width(), mask.height(), &mask.to_gray());
    std::fs::write(&path, bytes).map_err(|e| VideoError::io(&path, e))
}

/// Writes `delta1`, `delta2`, `object` and `skeleton` masks for one tick.
/// `frame` is the index of the current frame; `p` follows the layer's own
/// numbering (lag for the difference masks, age of the newer frame for the
/// object finders).
pub fn dump_layers(dir: &Path, frame: u64, layers: &LayerMasks) -> Result<(), VideoError> {
    std::fs::create_dir_all(dir).map_err(|e| VideoError::io(dir, e))?;
    for (p, m) in layers.delta1.iter().enumerate() {
        write_mask(dir, frame, "delta1", p, m)?;
    }
    for (i, m) in layers.delta2.iter().enumerate() {
        write_mask(dir, frame, "delta2", i + 1, m)?;
    }
    let n = layers.observations.len();
    for (i, o) in layers.observations.iter().enumerate() {
        let p = n - 1 - i;
        write_mask(dir, frame, "object", p, &o.mask)?;
        let mut sk = BinaryMask::new(o.mask.width(), o.mask.height());
        o.skeleton.iter().for_each(|px| sk.set(px.x, px.y, true));
        write_mask(dir, frame, "skeleton", p, &sk)?;
    }
    Ok(())
}

use std::collections::VecDeque;

use super::blur::GaussianBlur;
use super::DonError;
use crate::video_io::Frame;

#[derive(Debug, Clone)]
struct Slot {
    frame: Frame,
    blurred: Vec<u8>,
}

/// Current frame `f_t` plus up to `N` predecessors, newest first. Each frame
/// is pre-blurred once when pushed.
#[derive(Debug, Clone)]
pub struct FrameWindow {
    n: usize,
    blur: GaussianBlur,
    slots: VecDeque<Slot>,
}

impl FrameWindow {
    pub fn new(n: usize, blur: GaussianBlur) -> Self {
        Self {
            n,
            blur,
            slots: VecDeque::with_capacity(n + 1),
        }
    }

    /// Seeds a window from frames given oldest first.
    pub fn from_frames(n: usize, blur: GaussianBlur, frames: impl IntoIterator<Item = Frame>) -> Result<Self, DonError> {
        let mut w = Self::new(n, blur);
        for f in frames {
            w.push_frame(f)?;
        }
        Ok(w)
    }

    /// Makes `frame` the current frame. Once full, the oldest frame drops out.
    pub fn push_frame(&mut self, frame: Frame) -> Result<(), DonError> {
        if let Some(cur) = self.slots.front() {
            if (cur.frame.width(), cur.frame.height()) != (frame.width(), frame.height()) {
                return Err(DonError::DimensionMismatch {
                    expected: (cur.frame.width(), cur.frame.height()),
                    found: (frame.width(), frame.height()),
                });
            }
            if frame.index() != cur.frame.index() + 1 {
                return Err(DonError::NonConsecutiveIndex {
                    expected: cur.frame.index() + 1,
                    found: frame.index(),
                });
            }
        }
        let blurred = self
            .blur
            .apply(frame.width() as usize, frame.height() as usize, frame.data());
        self.slots.push_front(Slot { frame, blurred });
        if self.slots.len() > self.n + 1 {
            self.slots.pop_back();
        }
        Ok(())
    }

    /// Window length `N` (number of predecessors).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_full(&self) -> bool {
        self.slots.len() == self.n + 1
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn current(&self) -> Option<&Frame> {
        self.slots.front().map(|s| &s.frame)
    }

    /// `f_{t-1} ... f_{t-N}`, newest first.
    pub fn history(&self) -> impl Iterator<Item = &Frame> {
        self.slots.iter().skip(1).map(|s| &s.frame)
    }

    /// `f_{t-age}`.
    pub fn frame(&self, age: usize) -> &Frame {
        &self.slots[age].frame
    }

    /// Pre-blurred intensities of `f_{t-age}`.
    pub fn blurred(&self, age: usize) -> &[u8] {
        &self.slots[age].blurred
    }

    pub fn dimensions(&self) -> Option<(u32, u32)> {
        self.current().map(|f| (f.width(), f.height()))
    }

    pub(crate) fn require_full(&self) -> Result<(), DonError> {
        if self.is_full() {
            Ok(())
        } else {
            Err(DonError::WindowNotFull {
                have: self.slots.len(),
                need: self.n + 1,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(i: u64) -> Frame {
        Frame::new(8, 8, vec![i as u8; 64], i, 30.0).unwrap()
    }

    fn indices(w: &FrameWindow) -> Vec<u64> {
        w.current()
            .into_iter()
            .chain(w.history())
            .map(|f| f.index())
            .collect()
    }

    #[test]
    fn queue_semantics() {
        let mut w = FrameWindow::from_frames(10, GaussianBlur::identity(), (0..=10).map(frame)).unwrap();
        assert!(w.is_full());
        w.push_frame(frame(11)).unwrap();
        assert_eq!(indices(&w), (1..=11).rev().collect::<Vec<_>>());
    }

    #[test]
    fn index_gap_rejected() {
        let mut w = FrameWindow::from_frames(3, GaussianBlur::identity(), (0..=3).map(frame)).unwrap();
        assert!(matches!(
            w.push_frame(frame(5)),
            Err(DonError::NonConsecutiveIndex { expected: 4, found: 5 })
        ));
        assert_eq!(w.current().unwrap().index(), 3);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut w = FrameWindow::from_frames(3, GaussianBlur::identity(), [frame(0)]).unwrap();
        let big = Frame::new(9, 8, vec![0; 72], 1, 30.0).unwrap();
        assert!(matches!(w.push_frame(big), Err(DonError::DimensionMismatch { .. })));
    }

    #[test]
    fn pushing_n_frames_discards_the_n_oldest() {
        let n = 10;
        let mut w = FrameWindow::from_frames(n, GaussianBlur::identity(), (0..=n as u64).map(frame)).unwrap();
        for i in n as u64 + 1..=2 * n as u64 {
            w.push_frame(frame(i)).unwrap();
        }
        let expected: Vec<u64> = (n as u64..=2 * n as u64).rev().collect();
        assert_eq!(indices(&w), expected);
        assert!((0..n as u64).all(|i| !indices(&w).contains(&i)));
    }
}

use alloc::vec::Vec;
use core::ops::Range;

use crate::rng::{self, Rng};

/// How a parameter slot is initialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    Normal { mean: f64, std: f64 },
}

/// A contiguous range of a flat parameter buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub offset: usize,
    pub len: usize,
}

impl Slot {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Allocates slots in a flat parameter buffer while a network is built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layout {
    slots: Vec<(Slot, Init)>,
    len: usize,
}

impl Layout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, len: usize, init: Init) -> Slot {
        let slot = Slot {
            offset: self.len,
            len,
        };
        self.len += len;
        self.slots.push((slot, init));
        slot
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Draws initial values. Slots are filled in allocation order from one
    /// stream, so the result depends only on the layout and the rng state.
    pub fn init(&self, r: &mut Rng) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.len);
        for (slot, init) in &self.slots {
            match *init {
                Init::Zeros => out.extend(core::iter::repeat_n(0.0f32, slot.len)),
                Init::Normal { mean, std } => {
                    out.extend((0..slot.len).map(|_| (mean + std * rng::normal(r)) as f32))
                }
            }
        }
        out
    }
}

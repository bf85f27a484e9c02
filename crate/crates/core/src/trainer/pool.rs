use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::rng::{self, Rng};

/// Buffer of past generator outputs used to feed the discriminators.
///
/// Until full, every query is stored and returned unchanged. Once full, a
/// query returns a uniformly chosen stored frame with probability one half
/// (storing the query in its place) and the query itself otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePool {
    capacity: usize,
    stored: Vec<Vec<f32>>,
    rng: Rng,
}

impl ImagePool {
    pub const DEFAULT_CAPACITY: usize = 50;

    pub fn new(capacity: usize, seed: u64) -> Self {
        Self {
            capacity,
            stored: Vec::with_capacity(capacity),
            rng: rng::rng(seed),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.stored.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored.is_empty()
    }

    pub fn stored(&self) -> &[Vec<f32>] {
        &self.stored
    }

    /// Rebuilds a pool from checkpointed parts.
    pub fn from_parts(capacity: usize, stored: Vec<Vec<f32>>, rng: Rng) -> Self {
        Self { capacity, stored, rng }
    }

    pub fn rng(&self) -> &Rng {
        &self.rng
    }

    pub fn query(&mut self, item: Vec<f32>) -> Vec<f32> {
        if self.capacity == 0 {
            return item;
        }
        if self.stored.len() < self.capacity {
            self.stored.push(item.clone());
            return item;
        }
        if rng::uniform(&mut self.rng) < 0.5 {
            let k = rng::int_range(&mut self.rng, 0, self.capacity - 1);
            core::mem::replace(&mut self.stored[k], item)
        } else {
            item
        }
    }
}

pub fn pool_query(pool: &mut ImagePool, item: Vec<f32>) -> Vec<f32> {
    pool.query(item)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn fills_then_swaps() {
        let mut pool = ImagePool::new(50, 0);
        for k in 0..50 {
            assert_eq!(pool.query(vec![k as f32]), vec![k as f32]);
        }
        assert_eq!(pool.len(), 50);
        let mut swapped = 0;
        for k in 50..10_050 {
            let out = pool.query(vec![k as f32]);
            assert!(pool.len() <= 50);
            if out != vec![k as f32] {
                swapped += 1;
                assert!(out[0] < k as f32);
            }
        }
        let rate = swapped as f64 / 10_000.0;
        assert!((rate - 0.5).abs() <= 0.02, "{rate}");
    }

    #[test]
    fn zero_capacity_passes_through() {
        let mut pool = ImagePool::new(0, 0);
        assert_eq!(pool.query(vec![1.0]), vec![1.0]);
        assert!(pool.is_empty());
    }
}

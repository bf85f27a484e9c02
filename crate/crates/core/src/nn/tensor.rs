use alloc::vec;
use alloc::vec::Vec;

use super::Real;

/// A single-sample `channels x height x width` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self {
            c,
            h,
            w,
            data: vec![T::zero(); c * h * w],
        }
    }

    pub fn from_vec(c: usize, h: usize, w: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), c * h * w, "tensor data length");
        Self { c, h, w, data }
    }

    pub fn from_f32(c: usize, h: usize, w: usize, data: &[f32]) -> Self {
        Self::from_vec(c, h, w, data.iter().map(|&v| T::lit(v as f64)).collect())
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.c, self.h, self.w)
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let p = self.plane();
        &self.data[c * p..(c + 1) * p]
    }

    /// Stacks single-channel planes of equal size into one tensor.
    pub fn stack(h: usize, w: usize, planes: &[&[T]]) -> Self {
        let mut data = Vec::with_capacity(planes.len() * h * w);
        for p in planes {
            assert_eq!(p.len(), h * w, "plane size");
            data.extend_from_slice(p);
        }
        Self::from_vec(planes.len(), h, w, data)
    }

    /// Channel-wise concatenation.
    pub fn concat(a: &Self, b: &Self) -> Self {
        assert_eq!((a.h, a.w), (b.h, b.w), "concat spatial size");
        let mut data = Vec::with_capacity(a.data.len() + b.data.len());
        data.extend_from_slice(&a.data);
        data.extend_from_slice(&b.data);
        Self::from_vec(a.c + b.c, a.h, a.w, data)
    }

    /// Splits channels `[0, k)` and `[k, c)`.
    pub fn split(self, k: usize) -> (Self, Self) {
        let p = self.plane();
        let mut data = self.data;
        let tail = data.split_off(k * p);
        (
            Self::from_vec(k, self.h, self.w, data),
            Self::from_vec(self.c - k, self.h, self.w, tail),
        )
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|v| v.to_f64_lossy() as f32).collect()
    }
}

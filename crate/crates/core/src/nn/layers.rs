use alloc::vec;
use alloc::vec::Vec;

use super::{Init, Layout, Real, Slot, Tensor};

const NORM_EPS: f64 = 1e-5;

/// 2-D convolution over a fixed input size. Rows wrap around, columns are
/// zero padded.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_c: usize,
    pub out_c: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub weight: Slot,
    pub bias: Option<Slot>,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        layout: &mut Layout,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        stride: usize,
        in_hw: (usize, usize),
        bias: bool,
        weight_init: Init,
    ) -> Self {
        assert!(kernel >= 1 && stride >= 1);
        // odd kernels keep the size at stride 1; 4x4 stride-2 kernels halve it
        let pad = if kernel % 2 == 1 { kernel / 2 } else { kernel / 2 - 1 };
        let (in_h, in_w) = in_hw;
        let out_h = (in_h + 2 * pad - kernel) / stride + 1;
        let out_w = (in_w + 2 * pad - kernel) / stride + 1;
        let weight = layout.alloc(out_c * in_c * kernel * kernel, weight_init);
        let bias = bias.then(|| layout.alloc(out_c, Init::Zeros));
        Self {
            in_c,
            out_c,
            kernel,
            stride,
            pad,
            in_h,
            in_w,
            out_h,
            out_w,
            weight,
            bias,
        }
    }

    fn k_dim(&self) -> usize {
        self.in_c * self.kernel * self.kernel
    }

    fn n_dim(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Valid output columns `[lo, hi)` for kernel column `kj` at stride 1.
    fn valid_cols(&self, kj: usize) -> (usize, usize) {
        let lo = self.pad.saturating_sub(kj);
        let hi = (self.in_w + self.pad).saturating_sub(kj).min(self.out_w);
        (lo, hi.max(lo))
    }

    fn src_row(&self, oh: usize, ki: usize) -> usize {
        let ih = (oh * self.stride + ki) as isize - self.pad as isize;
        ih.rem_euclid(self.in_h as isize) as usize
    }

    fn im2col<T: Real>(&self, x: &[T]) -> Vec<T> {
        let (k, n) = (self.kernel, self.n_dim());
        let mut cols = vec![T::zero(); self.k_dim() * n];
        let plane = self.in_h * self.in_w;
        for c in 0..self.in_c {
            let xc = &x[c * plane..(c + 1) * plane];
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let dst = &mut cols[row * n..(row + 1) * n];
                    for oh in 0..self.out_h {
                        let ih = self.src_row(oh, ki);
                        let src = &xc[ih * self.in_w..(ih + 1) * self.in_w];
                        let out = &mut dst[oh * self.out_w..(oh + 1) * self.out_w];
                        if self.stride == 1 {
                            let (lo, hi) = self.valid_cols(kj);
                            if hi > lo {
                                let s0 = lo + kj - self.pad;
                                out[lo..hi].copy_from_slice(&src[s0..s0 + (hi - lo)]);
                            }
                        } else {
                            for (ow, o) in out.iter_mut().enumerate() {
                                let iw = (ow * self.stride + kj) as isize - self.pad as isize;
                                if iw >= 0 && (iw as usize) < self.in_w {
                                    *o = src[iw as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im<T: Real>(&self, cols: &[T]) -> Vec<T> {
        let (k, n) = (self.kernel, self.n_dim());
        let plane = self.in_h * self.in_w;
        let mut x = vec![T::zero(); self.in_c * plane];
        for c in 0..self.in_c {
            let xc = &mut x[c * plane..(c + 1) * plane];
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let src_all = &cols[row * n..(row + 1) * n];
                    for oh in 0..self.out_h {
                        let ih = self.src_row(oh, ki);
                        let dst = &mut xc[ih * self.in_w..(ih + 1) * self.in_w];
                        let src = &src_all[oh * self.out_w..(oh + 1) * self.out_w];
                        if self.stride == 1 {
                            let (lo, hi) = self.valid_cols(kj);
                            if hi > lo {
                                let d0 = lo + kj - self.pad;
                                for (d, &s) in dst[d0..d0 + (hi - lo)].iter_mut().zip(&src[lo..hi]) {
                                    *d += s;
                                }
                            }
                        } else {
                            for (ow, &s) in src.iter().enumerate() {
                                let iw = (ow * self.stride + kj) as isize - self.pad as isize;
                                if iw >= 0 && (iw as usize) < self.in_w {
                                    dst[iw as usize] += s;
                                }
                            }
                        }
                    }
                }
            }
        }
        x
    }

    pub fn forward<T: Real>(&self, p: &[T], x: &Tensor<T>) -> (Tensor<T>, Vec<T>) {
        assert_eq!(x.shape(), (self.in_c, self.in_h, self.in_w), "conv input shape");
        let cols = self.im2col(&x.data);
        let (m, kd, n) = (self.out_c, self.k_dim(), self.n_dim());
        let mut out = vec![T::zero(); m * n];
        let w = &p[self.weight.range()];
        T::gemm_raw(
            m, kd, n, T::one(), w, kd as isize, 1, &cols, n as isize, 1, T::zero(), &mut out,
            n as isize, 1,
        );
        if let Some(b) = self.bias {
            for (oc, &bv) in p[b.range()].iter().enumerate() {
                for v in &mut out[oc * n..(oc + 1) * n] {
                    *v += bv;
                }
            }
        }
        (Tensor::from_vec(m, self.out_h, self.out_w, out), cols)
    }

    pub fn backward<T: Real>(
        &self,
        p: &[T],
        cols: &[T],
        dy: &Tensor<T>,
        g: &mut [T],
        need_dx: bool,
    ) -> Option<Tensor<T>> {
        let (m, kd, n) = (self.out_c, self.k_dim(), self.n_dim());
        assert_eq!(dy.data.len(), m * n, "conv grad shape");
        // dW += dy @ cols^T
        T::gemm_raw(
            m,
            n,
            kd,
            T::one(),
            &dy.data,
            n as isize,
            1,
            cols,
            1,
            n as isize,
            T::one(),
            &mut g[self.weight.range()],
            kd as isize,
            1,
        );
        if let Some(b) = self.bias {
            for (oc, gb) in g[b.range()].iter_mut().enumerate() {
                *gb += dy.data[oc * n..(oc + 1) * n].iter().copied().sum::<T>();
            }
        }
        if !need_dx {
            return None;
        }
        // dcols = W^T @ dy
        let mut dcols = vec![T::zero(); kd * n];
        let w = &p[self.weight.range()];
        T::gemm_raw(
            kd, m, n, T::one(), w, 1, kd as isize, &dy.data, n as isize, 1, T::zero(),
            &mut dcols, n as isize, 1,
        );
        Some(Tensor::from_vec(
            self.in_c,
            self.in_h,
            self.in_w,
            self.col2im(&dcols),
        ))
    }
}

/// Per-sample normalization over the spatial extent of each channel with a
/// learned scale and shift. With one sample per batch this is batch
/// normalization using batch statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Norm {
    pub channels: usize,
    pub gamma: Slot,
    pub beta: Slot,
}

impl Norm {
    pub fn new(layout: &mut Layout, channels: usize) -> Self {
        Self {
            channels,
            gamma: layout.alloc(channels, Init::Normal { mean: 1.0, std: 0.02 }),
            beta: layout.alloc(channels, Init::Zeros),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv(Conv2d),
    Norm(Norm),
    Relu,
    LeakyRelu(f64),
    Tanh,
    /// Nearest-neighbour upsampling by two, cropped to the given size.
    Upsample { out_h: usize, out_w: usize },
    /// 2x2 max pooling (even input sizes only).
    MaxPool,
}

#[derive(Debug, Clone)]
pub enum Cache<T> {
    Conv { cols: Vec<T> },
    Norm { xhat: Vec<T>, inv_std: Vec<T> },
    Input(Tensor<T>),
    Output(Tensor<T>),
    Upsample { in_h: usize, in_w: usize },
    MaxPool { argmax: Vec<u32>, in_h: usize, in_w: usize },
}

impl Layer {
    pub fn forward<T: Real>(&self, p: &[T], x: Tensor<T>) -> (Tensor<T>, Cache<T>) {
        match self {
            Layer::Conv(conv) => {
                let (y, cols) = conv.forward(p, &x);
                (y, Cache::Conv { cols })
            }
            Layer::Norm(n) => {
                assert_eq!(x.c, n.channels, "norm channels");
                let plane = x.plane();
                let inv_n = T::one() / T::lit(plane as f64);
                let mut y = x;
                let mut inv_std = Vec::with_capacity(n.channels);
                let gamma = &p[n.gamma.range()];
                let beta = &p[n.beta.range()];
                let mut xhat = vec![T::zero(); y.data.len()];
                for c in 0..n.channels {
                    let ch = &mut y.data[c * plane..(c + 1) * plane];
                    let mean = ch.iter().copied().sum::<T>() * inv_n;
                    let var = ch.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() * inv_n;
                    let is = T::one() / (var + T::lit(NORM_EPS)).sqrt();
                    inv_std.push(is);
                    let xh = &mut xhat[c * plane..(c + 1) * plane];
                    for (v, h) in ch.iter_mut().zip(xh.iter_mut()) {
                        *h = (*v - mean) * is;
                        *v = gamma[c] * *h + beta[c];
                    }
                }
                (y, Cache::Norm { xhat, inv_std })
            }
            Layer::Relu => {
                let mut y = x;
                for v in &mut y.data {
                    if *v < T::zero() {
                        *v = T::zero();
                    }
                }
                let c = y.clone();
                (y, Cache::Output(c))
            }
            Layer::LeakyRelu(slope) => {
                let s = T::lit(*slope);
                let mut y = x.clone();
                for v in &mut y.data {
                    if *v < T::zero() {
                        *v *= s;
                    }
                }
                (y, Cache::Input(x))
            }
            Layer::Tanh => {
                let mut y = x;
                for v in &mut y.data {
                    *v = v.tanh();
                }
                let c = y.clone();
                (y, Cache::Output(c))
            }
            Layer::Upsample { out_h, out_w } => {
                let (oh, ow) = (*out_h, *out_w);
                assert!(oh <= 2 * x.h && ow <= 2 * x.w, "upsample target too large");
                let mut y = Tensor::zeros(x.c, oh, ow);
                for c in 0..x.c {
                    let src = x.channel(c);
                    let dst = &mut y.data[c * oh * ow..(c + 1) * oh * ow];
                    for i in 0..oh {
                        let srow = &src[(i / 2) * x.w..(i / 2 + 1) * x.w];
                        for (j, d) in dst[i * ow..(i + 1) * ow].iter_mut().enumerate() {
                            *d = srow[j / 2];
                        }
                    }
                }
                (y, Cache::Upsample { in_h: x.h, in_w: x.w })
            }
            Layer::MaxPool => {
                assert!(x.h.is_multiple_of(2) && x.w.is_multiple_of(2), "max pool needs even sizes");
                let (oh, ow) = (x.h / 2, x.w / 2);
                let mut y = Tensor::zeros(x.c, oh, ow);
                let mut argmax = vec![0u32; x.c * oh * ow];
                for c in 0..x.c {
                    let src = x.channel(c);
                    for i in 0..oh {
                        for j in 0..ow {
                            let mut best = (2 * i) * x.w + 2 * j;
                            for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                                let k = (2 * i + di) * x.w + 2 * j + dj;
                                if src[k] > src[best] {
                                    best = k;
                                }
                            }
                            let o = c * oh * ow + i * ow + j;
                            y.data[o] = src[best];
                            argmax[o] = best as u32;
                        }
                    }
                }
                (y, Cache::MaxPool { argmax, in_h: x.h, in_w: x.w })
            }
        }
    }

    pub fn backward<T: Real>(
        &self,
        p: &[T],
        cache: &Cache<T>,
        dy: Tensor<T>,
        g: &mut [T],
        need_dx: bool,
    ) -> Option<Tensor<T>> {
        match (self, cache) {
            (Layer::Conv(conv), Cache::Conv { cols }) => conv.backward(p, cols, &dy, g, need_dx),
            (Layer::Norm(n), Cache::Norm { xhat, inv_std }) => {
                let plane = dy.plane();
                let inv_n = T::one() / T::lit(plane as f64);
                let gamma = &p[n.gamma.range()];
                let mut dx = dy;
                for c in 0..n.channels {
                    let d = &mut dx.data[c * plane..(c + 1) * plane];
                    let xh = &xhat[c * plane..(c + 1) * plane];
                    let mut sum_d = T::zero();
                    let mut sum_dx = T::zero();
                    for (&dv, &h) in d.iter().zip(xh) {
                        sum_d += dv;
                        sum_dx += dv * h;
                    }
                    g[n.gamma.offset + c] += sum_dx;
                    g[n.beta.offset + c] += sum_d;
                    let k = gamma[c] * inv_std[c];
                    let mean_d = sum_d * inv_n;
                    let mean_dx = sum_dx * inv_n;
                    for (dv, &h) in d.iter_mut().zip(xh) {
                        *dv = k * (*dv - mean_d - h * mean_dx);
                    }
                }
                Some(dx)
            }
            (Layer::Relu, Cache::Output(y)) => {
                let mut dx = dy;
                for (d, &v) in dx.data.iter_mut().zip(&y.data) {
                    if v <= T::zero() {
                        *d = T::zero();
                    }
                }
                Some(dx)
            }
            (Layer::LeakyRelu(slope), Cache::Input(x)) => {
                let s = T::lit(*slope);
                let mut dx = dy;
                for (d, &v) in dx.data.iter_mut().zip(&x.data) {
                    if v < T::zero() {
                        *d *= s;
                    }
                }
                Some(dx)
            }
            (Layer::Tanh, Cache::Output(y)) => {
                let mut dx = dy;
                for (d, &v) in dx.data.iter_mut().zip(&y.data) {
                    *d *= T::one() - v * v;
                }
                Some(dx)
            }
            (Layer::Upsample { out_h, out_w }, Cache::Upsample { in_h, in_w }) => {
                let (oh, ow) = (*out_h, *out_w);
                let mut dx = Tensor::zeros(dy.c, *in_h, *in_w);
                for c in 0..dy.c {
                    let src = dy.channel(c);
                    let dst = &mut dx.data[c * in_h * in_w..(c + 1) * in_h * in_w];
                    for i in 0..oh {
                        let drow = &mut dst[(i / 2) * in_w..(i / 2 + 1) * in_w];
                        for (j, &s) in src[i * ow..(i + 1) * ow].iter().enumerate() {
                            drow[j / 2] += s;
                        }
                    }
                }
                Some(dx)
            }
            (Layer::MaxPool, Cache::MaxPool { argmax, in_h, in_w }) => {
                let mut dx = Tensor::zeros(dy.c, *in_h, *in_w);
                let plane_in = in_h * in_w;
                let plane_out = dy.plane();
                for c in 0..dy.c {
                    for o in 0..plane_out {
                        let k = c * plane_out + o;
                        dx.data[c * plane_in + argmax[k] as usize] += dy.data[k];
                    }
                }
                Some(dx)
            }
            _ => panic!("layer/cache mismatch"),
        }
    }

    /// Output shape for an input shape.
    pub fn out_shape(&self, (c, h, w): (usize, usize, usize)) -> (usize, usize, usize) {
        match self {
            Layer::Conv(conv) => (conv.out_c, conv.out_h, conv.out_w),
            Layer::Upsample { out_h, out_w } => (c, *out_h, *out_w),
            Layer::MaxPool => (c, h / 2, w / 2),
            _ => (c, h, w),
        }
    }
}

/// A chain of layers, or a residual block wrapping one.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Layer(Layer),
    Residual(Vec<Layer>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sequential {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone)]
pub struct SeqTrace<T> {
    caches: Vec<Vec<Cache<T>>>,
}

impl Sequential {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, layer: Layer) {
        self.nodes.push(Node::Layer(layer));
    }

    pub fn push_residual(&mut self, body: Vec<Layer>) {
        self.nodes.push(Node::Residual(body));
    }

    pub fn forward<T: Real>(&self, p: &[T], x: Tensor<T>) -> (Tensor<T>, SeqTrace<T>) {
        let mut caches = Vec::with_capacity(self.nodes.len());
        let mut x = x;
        for node in &self.nodes {
            match node {
                Node::Layer(l) => {
                    let (y, c) = l.forward(p, x);
                    caches.push(vec![c]);
                    x = y;
                }
                Node::Residual(body) => {
                    let skip = x.clone();
                    let mut cs = Vec::with_capacity(body.len());
                    for l in body {
                        let (y, c) = l.forward(p, x);
                        cs.push(c);
                        x = y;
                    }
                    x.add_assign(&skip);
                    caches.push(cs);
                }
            }
        }
        (x, SeqTrace { caches })
    }

    /// Back-propagates `dy`; returns the input gradient when `need_dx`.
    pub fn backward<T: Real>(
        &self,
        p: &[T],
        trace: &SeqTrace<T>,
        dy: Tensor<T>,
        g: &mut [T],
        need_dx: bool,
    ) -> Option<Tensor<T>> {
        let mut d = dy;
        for (idx, (node, cs)) in self.nodes.iter().zip(&trace.caches).enumerate().rev() {
            let want = need_dx || idx > 0;
            match node {
                Node::Layer(l) => {
                    let next = l.backward(p, &cs[0], d, g, want)?;
                    d = next
                },
                Node::Residual(body) => {
                    let skip = d.clone();
                    let mut inner = d;
                    for (l, c) in body.iter().zip(cs).rev() {
                        inner = l
                            .backward(p, c, inner, g, true)
                            .expect("residual bodies always propagate");
                    }
                    inner.add_assign(&skip);
                    d = inner;
                }
            }
        }
        Some(d)
    }

    pub fn out_shape(&self, mut s: (usize, usize, usize)) -> (usize, usize, usize) {
        for node in &self.nodes {
            match node {
                Node::Layer(l) => s = l.out_shape(s),
                Node::Residual(body) => {
                    for l in body {
                        s = l.out_shape(s);
                    }
                }
            }
        }
        s
    }
}

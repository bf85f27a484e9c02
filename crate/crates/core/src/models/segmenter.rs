use alloc::vec;
use alloc::vec::Vec;

use super::SegmenterConfig;
use crate::error::{Error, Result};
use crate::nn::{Conv2d, Init, Layer, Layout, Real, SeqTrace, Sequential, Tensor};

fn he(fan_in: usize) -> Init {
    Init::Normal {
        mean: 0.0,
        std: libm::sqrt(2.0 / fan_in as f64),
    }
}

fn conv_relu(seq: &mut Sequential, layout: &mut Layout, cin: usize, cout: usize, hw: (usize, usize)) {
    seq.push(Layer::Conv(Conv2d::new(layout, cin, cout, 3, 1, hw, true, he(cin * 9))));
    seq.push(Layer::Relu);
}

/// U-Net occupancy segmenter: `levels` encoder stages doubling the features
/// and halving the resolution, a mirrored decoder with skip connections and
/// a 1x1 head emitting one logit per class.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmenter {
    pub config: SegmenterConfig,
    pub dims: (usize, usize),
    pub padded: (usize, usize),
    pub layout: Layout,
    enc: Vec<Sequential>,
    ups: Vec<Sequential>,
    decs: Vec<Sequential>,
    head: Sequential,
}

#[derive(Debug, Clone)]
pub struct SegTrace<T> {
    enc: Vec<SeqTrace<T>>,
    ups: Vec<SeqTrace<T>>,
    decs: Vec<SeqTrace<T>>,
    head: SeqTrace<T>,
}

impl Segmenter {
    pub fn new(config: SegmenterConfig, dims: (usize, usize)) -> Result<Self> {
        config.validate()?;
        let m = 1usize << (config.levels - 1);
        let padded = if config.pad_input {
            (dims.0.div_ceil(m) * m, dims.1.div_ceil(m) * m)
        } else {
            if !dims.0.is_multiple_of(m) || !dims.1.is_multiple_of(m) {
                return Err(Error::InvalidParam(alloc::format!(
                    "grid {dims:?} not divisible by {m} and padding disabled"
                )));
            }
            dims
        };
        let mut layout = Layout::new();
        let f = |l: usize| config.initial_features << l;
        let mut enc = Vec::new();
        let mut sizes = Vec::new();
        let mut hw = padded;
        for l in 0..config.levels {
            let mut s = Sequential::new();
            let cin = if l == 0 { 1 } else { f(l - 1) };
            if l > 0 {
                s.push(Layer::MaxPool);
                hw = (hw.0 / 2, hw.1 / 2);
            }
            conv_relu(&mut s, &mut layout, cin, f(l), hw);
            conv_relu(&mut s, &mut layout, f(l), f(l), hw);
            sizes.push(hw);
            enc.push(s);
        }
        let mut ups = vec![Sequential::new(); config.levels - 1];
        let mut decs = vec![Sequential::new(); config.levels - 1];
        for l in (0..config.levels - 1).rev() {
            let target = sizes[l];
            let up = &mut ups[l];
            up.push(Layer::Upsample {
                out_h: target.0,
                out_w: target.1,
            });
            conv_relu(up, &mut layout, f(l + 1), f(l), target);
            let dec = &mut decs[l];
            conv_relu(dec, &mut layout, 2 * f(l), f(l), target);
            conv_relu(dec, &mut layout, f(l), f(l), target);
        }
        let mut head = Sequential::new();
        head.push(Layer::Conv(Conv2d::new(
            &mut layout,
            f(0),
            config.classes,
            1,
            1,
            padded,
            true,
            he(f(0)),
        )));
        Ok(Self {
            config,
            dims,
            padded,
            layout,
            enc,
            ups,
            decs,
            head,
        })
    }

    pub fn param_count(&self) -> usize {
        self.layout.len()
    }

    fn pad<T: Real>(&self, x: &[T]) -> Tensor<T> {
        let (h, w) = self.dims;
        let (ph, pw) = self.padded;
        let mut t = Tensor::zeros(1, ph, pw);
        for i in 0..h {
            t.data[i * pw..i * pw + w].copy_from_slice(&x[i * w..(i + 1) * w]);
        }
        t
    }

    /// Logits `(classes, H, W)` for one radar plane.
    pub fn forward<T: Real>(&self, p: &[T], x: &[T]) -> (Tensor<T>, SegTrace<T>) {
        assert_eq!(x.len(), self.dims.0 * self.dims.1, "segmenter input");
        let levels = self.config.levels;
        let mut enc_tr = Vec::with_capacity(levels);
        let mut skips = Vec::with_capacity(levels);
        let mut cur = self.pad(x);
        for (l, s) in self.enc.iter().enumerate() {
            let (y, t) = s.forward(p, cur);
            enc_tr.push(t);
            if l + 1 < levels {
                skips.push(y.clone());
            }
            cur = y;
        }
        let mut up_tr: Vec<Option<SeqTrace<T>>> = vec![None; levels - 1];
        let mut dec_tr: Vec<Option<SeqTrace<T>>> = vec![None; levels - 1];
        for l in (0..levels - 1).rev() {
            let (u, tu) = self.ups[l].forward(p, cur);
            let cat = Tensor::concat(&u, &skips[l]);
            let (y, td) = self.decs[l].forward(p, cat);
            up_tr[l] = Some(tu);
            dec_tr[l] = Some(td);
            cur = y;
        }
        let (logits, th) = self.head.forward(p, cur);
        let logits = self.crop(logits);
        let trace = SegTrace {
            enc: enc_tr,
            ups: up_tr.into_iter().map(|t| t.expect("set")).collect(),
            decs: dec_tr.into_iter().map(|t| t.expect("set")).collect(),
            head: th,
        };
        (logits, trace)
    }

    fn crop<T: Real>(&self, t: Tensor<T>) -> Tensor<T> {
        if self.padded == self.dims {
            return t;
        }
        let (h, w) = self.dims;
        let pw = self.padded.1;
        let mut out = Tensor::zeros(t.c, h, w);
        for c in 0..t.c {
            let src = t.channel(c);
            for i in 0..h {
                out.data[(c * h + i) * w..(c * h + i + 1) * w]
                    .copy_from_slice(&src[i * pw..i * pw + w]);
            }
        }
        out
    }

    fn uncrop<T: Real>(&self, t: Tensor<T>) -> Tensor<T> {
        if self.padded == self.dims {
            return t;
        }
        let (h, w) = self.dims;
        let (ph, pw) = self.padded;
        let mut out = Tensor::zeros(t.c, ph, pw);
        for c in 0..t.c {
            for i in 0..h {
                out.data[(c * ph + i) * pw..(c * ph + i) * pw + w]
                    .copy_from_slice(&t.data[(c * h + i) * w..(c * h + i + 1) * w]);
            }
        }
        out
    }

    /// Accumulates parameter gradients for `dlogits`.
    pub fn backward<T: Real>(&self, p: &[T], trace: &SegTrace<T>, dlogits: Tensor<T>, g: &mut [T]) {
        let levels = self.config.levels;
        let mut d = self
            .head
            .backward(p, &trace.head, self.uncrop(dlogits), g, true)
            .expect("head grad");
        let mut dskips = Vec::with_capacity(levels - 1);
        for l in 0..levels - 1 {
            let dcat = self.decs[l]
                .backward(p, &trace.decs[l], d, g, true)
                .expect("decoder grad");
            let (du, ds) = dcat.split(self.config.initial_features << l);
            dskips.push(ds);
            d = self.ups[l]
                .backward(p, &trace.ups[l], du, g, true)
                .expect("upsample grad");
        }
        for l in (0..levels).rev() {
            if l + 1 < levels {
                d.add_assign(&dskips[l]);
            }
            match self.enc[l].backward(p, &trace.enc[l], d, g, l > 0) {
                Some(next) => d = next,
                None => return,
            }
        }
    }
}

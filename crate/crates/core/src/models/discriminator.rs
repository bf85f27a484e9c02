use super::DiscriminatorConfig;
use crate::error::Result;
use crate::nn::{Conv2d, Init, Layer, Layout, Norm, Real, SeqTrace, Sequential, Tensor};

const WEIGHT_INIT: Init = Init::Normal { mean: 0.0, std: 0.02 };
const LEAK: f64 = 0.2;

/// Patch discriminator: `layers` stride-2 4x4 convolutions followed by a
/// 3x3 scoring convolution. Each output cell scores one receptive-field
/// patch; scores are raw (no squashing).
///
/// Each stride-2 layer maps a side of `n` cells to `floor(n / 2)`, so a
/// 64 x 64 input with the default three layers yields an 8 x 8 score grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub config: DiscriminatorConfig,
    pub dims: (usize, usize),
    pub out_dims: (usize, usize),
    pub layout: Layout,
    net: Sequential,
}

impl Discriminator {
    pub fn new(config: DiscriminatorConfig, dims: (usize, usize)) -> Result<Self> {
        config.validate()?;
        let mut layout = Layout::new();
        let mut net = Sequential::new();
        let mut hw = dims;
        let mut c_in = 1;
        let mut c = config.base_channels;
        for l in 0..config.layers {
            let conv = Conv2d::new(&mut layout, c_in, c, 4, 2, hw, l == 0, WEIGHT_INIT);
            hw = (conv.out_h, conv.out_w);
            net.push(Layer::Conv(conv));
            if l > 0 {
                net.push(Layer::Norm(Norm::new(&mut layout, c)));
            }
            net.push(Layer::LeakyRelu(LEAK));
            c_in = c;
            c *= 2;
        }
        net.push(Layer::Conv(Conv2d::new(&mut layout, c_in, 1, 3, 1, hw, true, WEIGHT_INIT)));
        Ok(Self {
            config,
            dims,
            out_dims: hw,
            layout,
            net,
        })
    }

    pub fn param_count(&self) -> usize {
        self.layout.len()
    }

    pub fn forward<T: Real>(&self, p: &[T], x: Tensor<T>) -> (Tensor<T>, SeqTrace<T>) {
        assert_eq!(x.shape(), (1, self.dims.0, self.dims.1), "discriminator input");
        self.net.forward(p, x)
    }

    pub fn backward<T: Real>(
        &self,
        p: &[T],
        trace: &SeqTrace<T>,
        dy: Tensor<T>,
        g: &mut [T],
        need_dx: bool,
    ) -> Option<Tensor<T>> {
        self.net.backward(p, trace, dy, g, need_dx)
    }
}

use alloc::vec::Vec;

use super::GeneratorConfig;
use crate::error::{Error, Result};
use crate::nn::{Conv2d, Init, Layer, Layout, Norm, Real, SeqTrace, Sequential, Tensor};

const WEIGHT_INIT: Init = Init::Normal { mean: 0.0, std: 0.02 };

/// ResNet-style image-to-image generator taking a 2-channel (state, noise)
/// input and producing one tanh-bounded channel of the same size.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub config: GeneratorConfig,
    pub dims: (usize, usize),
    pub layout: Layout,
    net: Sequential,
}

impl Generator {
    pub fn new(config: GeneratorConfig, dims: (usize, usize)) -> Result<Self> {
        config.validate()?;
        let mut layout = Layout::new();
        let mut net = Sequential::new();
        let b = config.base_channels;
        let mut sizes: Vec<(usize, usize)> = Vec::new();
        let mut hw = dims;

        let stem = Conv2d::new(&mut layout, 2, b, 7, 1, hw, false, WEIGHT_INIT);
        net.push(Layer::Conv(stem));
        net.push(Layer::Norm(Norm::new(&mut layout, b)));
        net.push(Layer::Relu);

        let mut c = b;
        for _ in 0..config.downsampling_stages {
            sizes.push(hw);
            let conv = Conv2d::new(&mut layout, c, 2 * c, 3, 2, hw, false, WEIGHT_INIT);
            hw = (conv.out_h, conv.out_w);
            c *= 2;
            net.push(Layer::Conv(conv));
            net.push(Layer::Norm(Norm::new(&mut layout, c)));
            net.push(Layer::Relu);
        }

        for _ in 0..config.residual_blocks {
            let c1 = Conv2d::new(&mut layout, c, c, 3, 1, hw, false, WEIGHT_INIT);
            let n1 = Norm::new(&mut layout, c);
            let c2 = Conv2d::new(&mut layout, c, c, 3, 1, hw, false, WEIGHT_INIT);
            let n2 = Norm::new(&mut layout, c);
            net.push_residual(alloc::vec![
                Layer::Conv(c1),
                Layer::Norm(n1),
                Layer::Relu,
                Layer::Conv(c2),
                Layer::Norm(n2),
            ]);
        }

        // up-convolutions: nearest upsampling back to the matching encoder
        // size followed by a 3x3 convolution
        for &target in sizes.iter().rev() {
            net.push(Layer::Upsample {
                out_h: target.0,
                out_w: target.1,
            });
            hw = target;
            let conv = Conv2d::new(&mut layout, c, c / 2, 3, 1, hw, false, WEIGHT_INIT);
            c /= 2;
            net.push(Layer::Conv(conv));
            net.push(Layer::Norm(Norm::new(&mut layout, c)));
            net.push(Layer::Relu);
        }

        net.push(Layer::Conv(Conv2d::new(&mut layout, c, 1, 7, 1, hw, true, WEIGHT_INIT)));
        net.push(Layer::Tanh);

        let out = net.out_shape((2, dims.0, dims.1));
        if out != (1, dims.0, dims.1) {
            return Err(Error::InvalidParam(alloc::format!(
                "generator maps {dims:?} to {out:?}"
            )));
        }
        Ok(Self {
            config,
            dims,
            layout,
            net,
        })
    }

    pub fn param_count(&self) -> usize {
        self.layout.len()
    }

    /// Runs the network on a stacked `(state, noise)` input.
    pub fn forward<T: Real>(&self, p: &[T], input: Tensor<T>) -> (Tensor<T>, SeqTrace<T>) {
        assert_eq!(input.shape(), (2, self.dims.0, self.dims.1), "generator input");
        self.net.forward(p, input)
    }

    /// Gradient with respect to the 2-channel input when `need_dx`.
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

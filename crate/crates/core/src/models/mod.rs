//! Network architectures, their configurations and parameter storage.
//!
//! Five networks take part: the forward generator (elevation + noise to
//! radar), the backward generator (radar + noise to elevation), one patch
//! discriminator per domain and the occupancy segmenter. Each owns a
//! disjoint flat parameter group.

mod discriminator;
mod generator;
mod segmenter;

pub use discriminator::Discriminator;
pub use generator::Generator;
pub use segmenter::{SegTrace, Segmenter};

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalkit::{Class, OccupancyGrid};
use crate::nn::{AdamState, Tensor};
use crate::polargrid::{ElevationMap, PolarGridSpec, RadarFrame};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Batch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub residual_blocks: usize,
    pub base_channels: usize,
    pub downsampling_stages: usize,
    pub normalization: Normalization,
    pub output_activation: OutputActivation,
}

impl GeneratorConfig {
    pub fn paper() -> Self {
        Self {
            residual_blocks: 9,
            base_channels: 64,
            downsampling_stages: 2,
            normalization: Normalization::Batch,
            output_activation: OutputActivation::Tanh,
        }
    }

    pub fn desk() -> Self {
        Self {
            residual_blocks: 4,
            base_channels: 16,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.residual_blocks == 0 || self.base_channels == 0 || self.downsampling_stages == 0 {
            return Err(Error::InvalidParam("generator counts must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self::paper()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    pub layers: usize,
    pub base_channels: usize,
    pub patch_output: bool,
}

impl DiscriminatorConfig {
    pub fn paper() -> Self {
        Self {
            layers: 3,
            base_channels: 64,
            patch_output: true,
        }
    }

    pub fn desk() -> Self {
        Self {
            base_channels: 32,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.base_channels == 0 {
            return Err(Error::InvalidParam("discriminator counts must be >= 1".into()));
        }
        if !self.patch_output {
            return Err(Error::InvalidParam("only patch discriminators are supported".into()));
        }
        Ok(())
    }
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self::paper()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmenterConfig {
    pub levels: usize,
    pub initial_features: usize,
    pub classes: usize,
    /// Zero-pad inputs up to a multiple of `2^(levels-1)` instead of
    /// rejecting them.
    pub pad_input: bool,
}

impl SegmenterConfig {
    pub fn desk() -> Self {
        Self {
            levels: 6,
            initial_features: 8,
            classes: 3,
            pad_input: false,
        }
    }

    pub fn paper() -> Self {
        Self {
            pad_input: true,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.initial_features == 0 {
            return Err(Error::InvalidParam("segmenter counts must be >= 1".into()));
        }
        if self.classes != 3 {
            return Err(Error::InvalidParam("segmenter predicts exactly 3 classes".into()));
        }
        Ok(())
    }
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self::desk()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ModelConfig {
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    pub segmenter: SegmenterConfig,
}

impl ModelConfig {
    pub fn desk() -> Self {
        Self {
            generator: GeneratorConfig::desk(),
            discriminator: DiscriminatorConfig::desk(),
            segmenter: SegmenterConfig::desk(),
        }
    }

    pub fn paper() -> Self {
        Self {
            generator: GeneratorConfig::paper(),
            discriminator: DiscriminatorConfig::paper(),
            segmenter: SegmenterConfig::paper(),
        }
    }
}

/// Standard-normal noise plane fed alongside the state (epsilon for the
/// forward model, kappa for the backward model).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentNoise {
    pub spec: PolarGridSpec,
    pub values: Vec<f32>,
}

impl LatentNoise {
    pub fn sample(spec: PolarGridSpec, r: &mut Rng) -> Self {
        Self {
            spec,
            values: (0..spec.cells()).map(|_| rng::normal(r) as f32).collect(),
        }
    }

    pub fn zeros(spec: PolarGridSpec) -> Self {
        Self {
            spec,
            values: alloc::vec![0.0; spec.cells()],
        }
    }
}

/// One network's parameters with their optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGroup {
    pub values: Vec<f32>,
    pub adam: AdamState,
}

impl ParamGroup {
    pub fn new(values: Vec<f32>) -> Self {
        let adam = AdamState::new(values.len());
        Self { values, adam }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupId {
    ThetaX,
    ThetaW,
    BetaX,
    BetaW,
    Alpha,
}

impl GroupId {
    pub const ALL: [GroupId; 5] = [
        GroupId::ThetaX,
        GroupId::ThetaW,
        GroupId::BetaX,
        GroupId::BetaW,
        GroupId::Alpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GroupId::ThetaX => "theta_x",
            GroupId::ThetaW => "theta_w",
            GroupId::BetaX => "beta_x",
            GroupId::BetaW => "beta_w",
            GroupId::Alpha => "alpha",
        }
    }
}

/// Parameters of all five networks plus the training step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub theta_x: ParamGroup,
    pub theta_w: ParamGroup,
    pub beta_x: ParamGroup,
    pub beta_w: ParamGroup,
    pub alpha: ParamGroup,
    pub step: u64,
}

impl ModelParameters {
    pub fn group(&self, id: GroupId) -> &ParamGroup {
        match id {
            GroupId::ThetaX => &self.theta_x,
            GroupId::ThetaW => &self.theta_w,
            GroupId::BetaX => &self.beta_x,
            GroupId::BetaW => &self.beta_w,
            GroupId::Alpha => &self.alpha,
        }
    }

    pub fn group_mut(&mut self, id: GroupId) -> &mut ParamGroup {
        match id {
            GroupId::ThetaX => &mut self.theta_x,
            GroupId::ThetaW => &mut self.theta_w,
            GroupId::BetaX => &mut self.beta_x,
            GroupId::BetaW => &mut self.beta_w,
            GroupId::Alpha => &mut self.alpha,
        }
    }
}

/// The five architectures instantiated for one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Networks {
    pub grid: PolarGridSpec,
    pub config: ModelConfig,
    pub forward: Generator,
    pub backward: Generator,
    pub disc_x: Discriminator,
    pub disc_w: Discriminator,
    pub segmenter: Segmenter,
}

impl Networks {
    pub fn new(config: ModelConfig, grid: PolarGridSpec) -> Result<Self> {
        grid.validate()?;
        let dims = grid.dims();
        let forward = Generator::new(config.generator, dims)?;
        let backward = forward.clone();
        let disc_x = Discriminator::new(config.discriminator, dims)?;
        let disc_w = disc_x.clone();
        let segmenter = Segmenter::new(config.segmenter, dims)?;
        Ok(Self {
            grid,
            config,
            forward,
            backward,
            disc_x,
            disc_w,
            segmenter,
        })
    }

    pub fn layout_len(&self, id: GroupId) -> usize {
        match id {
            GroupId::ThetaX => self.forward.param_count(),
            GroupId::ThetaW => self.backward.param_count(),
            GroupId::BetaX => self.disc_x.param_count(),
            GroupId::BetaW => self.disc_w.param_count(),
            GroupId::Alpha => self.segmenter.param_count(),
        }
    }
}

/// Deterministic initialization of every group; each group draws from its
/// own sub-stream of `seed`.
pub fn init_parameters(nets: &Networks, seed: u64) -> ModelParameters {
    let init = |layout: &crate::nn::Layout, stream: u64| {
        ParamGroup::new(layout.init(&mut rng::substream(seed, stream)))
    };
    ModelParameters {
        theta_x: init(&nets.forward.layout, 1),
        theta_w: init(&nets.backward.layout, 2),
        beta_x: init(&nets.disc_x.layout, 3),
        beta_w: init(&nets.disc_w.layout, 4),
        alpha: init(&nets.segmenter.layout, 5),
        step: 0,
    }
}

fn check_group(nets_len: usize, got: usize) -> Result<()> {
    if nets_len != got {
        return Err(Error::InvalidParam(alloc::format!(
            "parameter group has {got} values, network expects {nets_len}"
        )));
    }
    Ok(())
}

fn generator_input(spec: &PolarGridSpec, state: &[f32], noise: &[f32]) -> Tensor<f32> {
    let (h, w) = spec.dims();
    Tensor::stack(h, w, &[state, noise])
}

/// Samples a radar frame `g_x(w, eps)`.
pub fn forward_generator(
    nets: &Networks,
    w: &ElevationMap,
    eps: &LatentNoise,
    theta_x: &[f32],
) -> Result<RadarFrame> {
    nets.grid.same_as(&w.spec)?;
    nets.grid.same_as(&eps.spec)?;
    check_group(nets.forward.param_count(), theta_x.len())?;
    let (y, _) = nets
        .forward
        .forward(theta_x, generator_input(&nets.grid, &w.heights, &eps.values));
    Ok(RadarFrame {
        spec: nets.grid,
        power: y.data,
    })
}

/// Samples an elevation map `g_w(x, kappa)`.
pub fn backward_generator(
    nets: &Networks,
    x: &RadarFrame,
    kappa: &LatentNoise,
    theta_w: &[f32],
) -> Result<ElevationMap> {
    nets.grid.same_as(&x.spec)?;
    nets.grid.same_as(&kappa.spec)?;
    check_group(nets.backward.param_count(), theta_w.len())?;
    let (y, _) = nets
        .backward
        .forward(theta_w, generator_input(&nets.grid, &x.power, &kappa.values));
    Ok(ElevationMap {
        spec: nets.grid,
        heights: y.data,
    })
}

/// Raw patch scores, shape `disc.out_dims`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchScores {
    pub rows: usize,
    pub cols: usize,
    pub scores: Vec<f32>,
}

pub fn discriminate(disc: &Discriminator, plane: &[f32], beta: &[f32]) -> Result<PatchScores> {
    let (h, w) = disc.dims;
    if plane.len() != h * w {
        return Err(Error::ShapeMismatch {
            expected: disc.dims,
            got: (plane.len(), 1),
        });
    }
    check_group(disc.param_count(), beta.len())?;
    let (y, _) = disc.forward(beta, Tensor::from_vec(1, h, w, plane.to_vec()));
    Ok(PatchScores {
        rows: y.h,
        cols: y.w,
        scores: y.data,
    })
}

/// Per-cell class logits in class-major layout (`classes` planes of
/// `rows x cols`).
#[derive(Debug, Clone, PartialEq)]
pub struct SegLogits {
    pub spec: PolarGridSpec,
    pub classes: usize,
    pub data: Vec<f32>,
}

impl SegLogits {
    pub fn logit(&self, cell: usize, class: usize) -> f32 {
        self.data[class * self.spec.cells() + cell]
    }

    /// Arg-max class per cell; ties go to the lower class index.
    pub fn predict(&self) -> OccupancyGrid {
        let n = self.spec.cells();
        let labels = (0..n)
            .map(|k| {
                let mut best = 0;
                for c in 1..self.classes {
                    if self.logit(k, c) > self.logit(k, best) {
                        best = c;
                    }
                }
                Class::from_index(best)
            })
            .collect();
        OccupancyGrid {
            spec: self.spec,
            labels,
        }
    }
}

pub fn segment(nets: &Networks, x: &RadarFrame, alpha: &[f32]) -> Result<SegLogits> {
    nets.grid.same_as(&x.spec)?;
    check_group(nets.segmenter.param_count(), alpha.len())?;
    let (y, _) = nets.segmenter.forward(alpha, &x.power);
    Ok(SegLogits {
        spec: nets.grid,
        classes: y.c,
        data: y.data,
    })
}

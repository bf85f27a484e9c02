//! Joint adversarial training of the forward and backward sensor models.

mod pool;
mod schedule;

pub use pool::{pool_query, ImagePool};
pub use schedule::batch_indices;

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{init_parameters, Discriminator, Generator, ModelParameters, Networks, ParamGroup};
use crate::nn::{Adam, AdamConfig, SeqTrace, Tensor};
use crate::objectives::{
    combined_generator_objective, cycle_consistency_grad, lsgan_discriminator_grad, lsgan_generator_grad,
    masked_alignment_grad, paired_regression_grad, LossBreakdown, LossParts, LossWeights, Term,
};
use crate::polargrid::{ElevationMap, PartialElevationMap, RadarFrame};
use crate::rng;

/// What the forward generator is fed during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardInput {
    /// Lidar heights of real scenes (paired with real radar).
    PartialY,
    /// Dense simulated elevation.
    SimW,
}

/// Data roles a configuration consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DataNeeds {
    pub real_radar: bool,
    pub partial: bool,
    pub sim_elevation: bool,
}

/// One training configuration: which terms are optimized and on what data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub name: char,
    pub active_terms: Vec<Term>,
    pub forward_input: ForwardInput,
    pub data_needs: DataNeeds,
}

impl AblationSpec {
    pub fn is_active(&self, term: Term) -> bool {
        self.active_terms.contains(&term)
    }

    /// The forward discriminator trains whenever the forward adversarial
    /// term is active, and likewise for the backward one.
    pub fn trains_disc_x(&self) -> bool {
        self.is_active(Term::Gx)
    }

    pub fn trains_disc_w(&self) -> bool {
        self.is_active(Term::Gw)
    }

    /// Whether the backward model receives gradients.
    pub fn trains_backward(&self) -> bool {
        [Term::Aw, Term::Gw, Term::Cx, Term::Cw].iter().any(|&t| self.is_active(t))
    }
}

/// Presets `a` to `e`:
///
/// | preset | terms                      | forward input | data       |
/// |--------|----------------------------|---------------|------------|
/// | a      | A_x                        | lidar y       | x*, y      |
/// | b      | A_x, G_x                   | lidar y       | x*, y      |
/// | c      | G_x                        | simulated w   | x*, w      |
/// | d      | G_x, G_w, C_x, C_w         | simulated w   | x*, w      |
/// | e      | A_w, G_x, G_w, C_x, C_w    | simulated w   | x*, y, w   |
pub fn ablation_preset(name: &str) -> Result<AblationSpec> {
    use Term::*;
    let real_pairs = DataNeeds {
        real_radar: true,
        partial: true,
        sim_elevation: false,
    };
    let unpaired = DataNeeds {
        real_radar: true,
        partial: false,
        sim_elevation: true,
    };
    let (active, input, needs) = match name {
        "a" => (vec![Ax], ForwardInput::PartialY, real_pairs),
        "b" => (vec![Ax, Gx], ForwardInput::PartialY, real_pairs),
        "c" => (vec![Gx], ForwardInput::SimW, unpaired),
        "d" => (vec![Gx, Gw, Cx, Cw], ForwardInput::SimW, unpaired),
        "e" => (
            vec![Aw, Gx, Gw, Cx, Cw],
            ForwardInput::SimW,
            DataNeeds {
                real_radar: true,
                partial: true,
                sim_elevation: true,
            },
        ),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(AblationSpec {
        name: name.chars().next().expect("matched non-empty"),
        active_terms: active,
        forward_input: input,
        data_needs: needs,
    })
}

pub const PRESETS: [&str; 5] = ["a", "b", "c", "d", "e"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: u64,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub weights: LossWeights,
    pub seed: u64,
    /// Write a checkpoint every this many steps (0 disables).
    pub checkpoint_every: u64,
    pub pool_capacity: usize,
    pub desk_scale: bool,
}

impl TrainConfig {
    pub fn paper() -> Self {
        Self {
            steps: 500_000,
            adam: AdamConfig::default(),
            batch_size: 1,
            weights: LossWeights::default(),
            seed: 0,
            checkpoint_every: 10_000,
            pool_capacity: ImagePool::DEFAULT_CAPACITY,
            desk_scale: false,
        }
    }

    pub fn desk() -> Self {
        Self {
            steps: 2000,
            checkpoint_every: 500,
            desk_scale: true,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParam("steps must be >= 1".into()));
        }
        if self.batch_size != 1 {
            return Err(Error::InvalidParam("only batch size 1 is supported".into()));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::InvalidParam("learning rate must be > 0".into()));
        }
        self.weights.validate()
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::paper()
    }
}

/// Everything that changes during training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: ModelParameters,
    pub pool_x: ImagePool,
    pub pool_w: ImagePool,
}

const POOL_X_TAG: u64 = 0x0050_4f4f_4c58;
const POOL_W_TAG: u64 = 0x0050_4f4f_4c57;
const NOISE_TAG: u64 = 0x004e_4f49_5345;

impl TrainState {
    pub fn new(nets: &Networks, config: &TrainConfig) -> Self {
        Self {
            params: init_parameters(nets, config.seed),
            pool_x: ImagePool::new(config.pool_capacity, rng::mix(config.seed, POOL_X_TAG)),
            pool_w: ImagePool::new(config.pool_capacity, rng::mix(config.seed, POOL_W_TAG)),
        }
    }
}

/// One step's data. Roles not needed by the configuration may be `None`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Batch<'a> {
    pub real_radar: Option<&'a RadarFrame>,
    pub partial: Option<&'a PartialElevationMap>,
    pub sim_elevation: Option<&'a ElevationMap>,
}

fn need<'a, T>(v: Option<&'a T>, wanted: bool, role: &'static str) -> Result<Option<&'a T>> {
    match (v, wanted) {
        (None, true) => Err(Error::MissingData(role)),
        (v, true) => Ok(v),
        (_, false) => Ok(None),
    }
}

/// Noise planes of one step: one draw per generator application.
struct StepNoise {
    eps_fwd: Vec<f32>,
    kappa_fwd: Vec<f32>,
    kappa_bwd: Vec<f32>,
    eps_bwd: Vec<f32>,
}

impl StepNoise {
    fn draw(seed: u64, step: u64, cells: usize) -> Self {
        let mut r = rng::substream(rng::mix(seed, NOISE_TAG), step);
        let mut plane = || (0..cells).map(|_| rng::normal(&mut r) as f32).collect::<Vec<f32>>();
        Self {
            eps_fwd: plane(),
            kappa_fwd: plane(),
            kappa_bwd: plane(),
            eps_bwd: plane(),
        }
    }
}

struct GenPass {
    out: Tensor<f32>,
    trace: SeqTrace<f32>,
}

fn run_gen(g: &Generator, p: &[f32], state: &[f32], noise: &[f32]) -> GenPass {
    let (h, w) = g.dims;
    let (out, trace) = g.forward(p, Tensor::stack(h, w, &[state, noise]));
    GenPass { out, trace }
}

/// Back-propagates into `grads`; returns the gradient of the state channel
/// when requested.
fn back_gen(g: &Generator, p: &[f32], pass: &GenPass, dy: Vec<f32>, grads: &mut [f32], want_state: bool) -> Option<Vec<f32>> {
    let (h, w) = g.dims;
    let dx = g.backward(p, &pass.trace, Tensor::from_vec(1, h, w, dy), grads, want_state)?;
    let mut d = dx.data;
    d.truncate(h * w);
    Some(d)
}

/// Generator loss of `plane` under a frozen discriminator and its gradient
/// with respect to the plane.
fn adversarial_grad(d: &Discriminator, beta: &[f32], plane: &[f32]) -> Result<(f64, Vec<f32>)> {
    let (h, w) = d.dims;
    let (scores, trace) = d.forward(beta, Tensor::from_vec(1, h, w, plane.to_vec()));
    let (loss, ds) = lsgan_generator_grad(&scores.data)?;
    let mut scratch = vec![0.0f32; beta.len()];
    let dx = d
        .backward(beta, &trace, Tensor::from_vec(1, scores.h, scores.w, ds), &mut scratch, true)
        .expect("input gradient requested");
    Ok((loss as f64, dx.data))
}

/// One discriminator update on a real and a (pooled) fake plane.
fn discriminator_update(d: &Discriminator, group: &mut ParamGroup, adam: &AdamConfig, real: &[f32], fake: &[f32]) -> Result<f64> {
    let (h, w) = d.dims;
    let (sr, tr) = d.forward(&group.values, Tensor::from_vec(1, h, w, real.to_vec()));
    let (sf, tf) = d.forward(&group.values, Tensor::from_vec(1, h, w, fake.to_vec()));
    let (loss, dr, df) = lsgan_discriminator_grad(&sr.data, &sf.data)?;
    if !loss.is_finite() {
        return Ok(loss as f64);
    }
    let mut g = vec![0.0f32; group.len()];
    d.backward(&group.values, &tr, Tensor::from_vec(1, sr.h, sr.w, dr), &mut g, false);
    d.backward(&group.values, &tf, Tensor::from_vec(1, sf.h, sf.w, df), &mut g, false);
    Adam::step(adam, &mut group.adam, &mut group.values, &g);
    Ok(loss as f64)
}

fn add_into(acc: &mut [f32], v: &[f32], k: f32) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += k * b;
    }
}

fn check_finite(parts: &LossParts, step: u64) -> Result<()> {
    for t in Term::ALL {
        if let Some(v) = parts.get(t) {
            if !v.is_finite() {
                return Err(Error::NonFiniteLoss { term: t.name(), step });
            }
        }
    }
    Ok(())
}

/// Fixed inputs of a training run.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub nets: &'a Networks,
    pub ablation: &'a AblationSpec,
    pub config: &'a TrainConfig,
}

/// One optimization step: an Adam update of both generators on the active
/// generator-side terms, then one update of each active discriminator on
/// real data against pooled fresh fakes.
///
/// Noise is drawn from the stream of `(config.seed, step)`, with a separate
/// draw for every generator application. On a non-finite loss the state is
/// left untouched and an error is returned.
pub fn train_step(ctx: &StepContext<'_>, state: &mut TrainState, batch: &Batch<'_>) -> Result<LossBreakdown> {
    let StepContext { nets, ablation, config } = *ctx;
    let needs = ablation.data_needs;
    let x_star = need(batch.real_radar, needs.real_radar, "real radar")?;
    let y = need(batch.partial, needs.partial, "partial elevation")?;
    let w_sim = need(batch.sim_elevation, needs.sim_elevation, "simulated elevation")?;
    for spec in [x_star.map(|v| v.spec), y.map(|v| v.spec), w_sim.map(|v| v.spec)].into_iter().flatten() {
        nets.grid.same_as(&spec)?;
    }
    let step = state.params.step;
    let weights = &config.weights;
    let noise = StepNoise::draw(config.seed, step, nets.grid.cells());
    let p = &state.params;
    let tx = &p.theta_x.values;
    let tw = &p.theta_w.values;
    let mut gx = vec![0.0f32; tx.len()];
    let mut gw = vec![0.0f32; tw.len()];
    let mut parts = LossParts::default();
    let cells = nets.grid.cells();
    let on = |t: Term| ablation.is_active(t);

    // forward model applied to its training input, then optionally cycled
    // back through the backward model
    let fwd_input: &[f32] = match ablation.forward_input {
        ForwardInput::PartialY => &y.ok_or(Error::MissingData("partial elevation"))?.heights,
        ForwardInput::SimW => &w_sim.ok_or(Error::MissingData("simulated elevation"))?.heights,
    };
    let fake_x = run_gen(&nets.forward, tx, fwd_input, &noise.eps_fwd);
    let mut d_fake_x = vec![0.0f32; cells];
    if on(Term::Ax) {
        let real = x_star.ok_or(Error::MissingData("real radar"))?;
        let (l, g) = paired_regression_grad(&fake_x.out.data, &real.power)?;
        parts.set(Term::Ax, l as f64);
        add_into(&mut d_fake_x, &g, 1.0);
    }
    if on(Term::Gx) {
        let (l, g) = adversarial_grad(&nets.disc_x, &p.beta_x.values, &fake_x.out.data)?;
        parts.set(Term::Gx, l);
        add_into(&mut d_fake_x, &g, 1.0);
    }
    if on(Term::Cw) {
        let rec = run_gen(&nets.backward, tw, &fake_x.out.data, &noise.kappa_fwd);
        let (l, g) = cycle_consistency_grad(fwd_input, &rec.out.data)?;
        parts.set(Term::Cw, l as f64);
        let k = weights.lambda_cw as f32;
        let scaled: Vec<f32> = g.iter().map(|v| k * v).collect();
        let d = back_gen(&nets.backward, tw, &rec, scaled, &mut gw, true).expect("state gradient");
        add_into(&mut d_fake_x, &d, 1.0);
    }

    // backward model applied to real radar, then optionally cycled forward
    let mut fake_w_plane = None;
    if ablation.trains_backward() && (on(Term::Aw) || on(Term::Gw) || on(Term::Cx)) {
        let real = x_star.ok_or(Error::MissingData("real radar"))?;
        let fake_w = run_gen(&nets.backward, tw, &real.power, &noise.kappa_bwd);
        let mut d_fake_w = vec![0.0f32; cells];
        if on(Term::Aw) {
            let y = y.ok_or(Error::MissingData("partial elevation"))?;
            let (l, g) = masked_alignment_grad(&fake_w.out.data, &y.heights, &y.mask)?;
            parts.set(Term::Aw, l as f64);
            add_into(&mut d_fake_w, &g, weights.lambda_aw as f32);
        }
        if on(Term::Gw) {
            let (l, g) = adversarial_grad(&nets.disc_w, &p.beta_w.values, &fake_w.out.data)?;
            parts.set(Term::Gw, l);
            add_into(&mut d_fake_w, &g, weights.lambda_gw as f32);
        }
        if on(Term::Cx) {
            let rec = run_gen(&nets.forward, tx, &fake_w.out.data, &noise.eps_bwd);
            let (l, g) = cycle_consistency_grad(&real.power, &rec.out.data)?;
            parts.set(Term::Cx, l as f64);
            let k = weights.lambda_cx as f32;
            let scaled: Vec<f32> = g.iter().map(|v| k * v).collect();
            let d = back_gen(&nets.forward, tx, &rec, scaled, &mut gx, true).expect("state gradient");
            add_into(&mut d_fake_w, &d, 1.0);
        }
        back_gen(&nets.backward, tw, &fake_w, d_fake_w, &mut gw, false);
        fake_w_plane = Some(fake_w.out.data);
    }
    back_gen(&nets.forward, tx, &fake_x, d_fake_x, &mut gx, false);

    check_finite(&parts, step)?;
    let mut breakdown = combined_generator_objective(&parts, weights, &ablation.active_terms)?;
    if !breakdown.total.is_finite() {
        return Err(Error::NonFiniteLoss { term: "total", step });
    }

    // discriminator losses are checked before any parameter changes
    let adam = &config.adam;
    let p = &mut state.params;
    let mut next_beta_x = None;
    let mut next_beta_w = None;
    if ablation.trains_disc_x() {
        let real = x_star.ok_or(Error::MissingData("real radar"))?;
        let fake = state.pool_x.clone().query(fake_x.out.data.clone());
        let mut group = p.beta_x.clone();
        let l = discriminator_update(&nets.disc_x, &mut group, adam, &real.power, &fake)?;
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss { term: "d_x", step });
        }
        breakdown.d_x = Some(l);
        next_beta_x = Some(group);
    }
    if ablation.trains_disc_w() {
        let real = w_sim.ok_or(Error::MissingData("simulated elevation"))?;
        let fake = state.pool_w.clone().query(fake_w_plane.clone().expect("backward model ran"));
        let mut group = p.beta_w.clone();
        let l = discriminator_update(&nets.disc_w, &mut group, adam, &real.heights, &fake)?;
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss { term: "d_w", step });
        }
        breakdown.d_w = Some(l);
        next_beta_w = Some(group);
    }

    // commit: generators first, then discriminators and pools
    Adam::step(adam, &mut p.theta_x.adam, &mut p.theta_x.values, &gx);
    if ablation.trains_backward() {
        Adam::step(adam, &mut p.theta_w.adam, &mut p.theta_w.values, &gw);
    }
    if let Some(g) = next_beta_x {
        state.pool_x.query(fake_x.out.data);
        p.beta_x = g;
    }
    if let Some(g) = next_beta_w {
        state.pool_w.query(fake_w_plane.expect("backward model ran"));
        p.beta_w = g;
    }
    p.step += 1;
    Ok(breakdown)
}

/// In-memory training data: aligned real pairs and simulated elevation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainData {
    pub real_radar: Vec<RadarFrame>,
    pub partial: Vec<PartialElevationMap>,
    pub sim_elevation: Vec<ElevationMap>,
}

impl TrainData {
    pub fn check(&self, needs: &DataNeeds) -> Result<()> {
        if needs.real_radar && self.real_radar.is_empty() {
            return Err(Error::MissingData("real radar"));
        }
        if needs.partial && self.partial.len() != self.real_radar.len() {
            return Err(Error::MissingData("partial elevation for every real frame"));
        }
        if needs.sim_elevation && self.sim_elevation.is_empty() {
            return Err(Error::MissingData("simulated elevation"));
        }
        Ok(())
    }

    /// Batch for `step` under the shuffled epoch schedule of `seed`.
    pub fn batch(&self, seed: u64, step: u64) -> Batch<'_> {
        let (r, s) = batch_indices(self.real_radar.len(), self.sim_elevation.len(), seed, step);
        Batch {
            real_radar: r.map(|i| &self.real_radar[i]),
            partial: r.and_then(|i| self.partial.get(i)),
            sim_elevation: s.map(|i| &self.sim_elevation[i]),
        }
    }
}

/// Runs steps until `state.params.step == until`, calling `on_step` after
/// every step with the step's losses.
pub fn run_steps<F>(ctx: &StepContext<'_>, state: &mut TrainState, data: &TrainData, until: u64, mut on_step: F) -> Result<()>
where
    F: FnMut(&TrainState, &LossBreakdown) -> Result<()>,
{
    data.check(&ctx.ablation.data_needs)?;
    while state.params.step < until {
        let batch = data.batch(ctx.config.seed, state.params.step);
        let losses = train_step(ctx, state, &batch)?;
        on_step(state, &losses)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;

//! A small reverse-mode engine for single-sample convolutional networks.
//!
//! Networks here are static graphs built for one input size. A forward pass
//! returns the output plus a trace of per-layer caches; the matching
//! backward pass consumes the trace, accumulates parameter gradients into a
//! flat buffer and returns the gradient with respect to the input. Every
//! network call owns its trace, so one network can be applied several times
//! within a step and back-propagated through each application.
//!
//! Convolutions pad circularly along azimuth (rows) and with zeros along
//! range (columns).

mod adam;
mod layers;
mod params;
mod real;
mod tensor;

pub use adam::{Adam, AdamConfig, AdamState};
pub use layers::{Cache, Conv2d, Layer, Node, Norm, Sequential, SeqTrace};
pub use params::{Init, Layout, Slot};
pub use real::Real;
pub use tensor::Tensor;

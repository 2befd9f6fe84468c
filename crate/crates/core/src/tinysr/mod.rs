//! A small pre-upsampling super-resolution network.
//!
//! The input is an image already bicubically resized to the target size. A
//! stack of "same"-padded convolutions with ReLUs in between predicts a
//! residual that is added back onto the input. Forward and backward passes
//! are written out by hand; the forward pass records every layer input on a
//! [`Tape`] for the reverse sweep.

mod adam;
mod checkpoint;
pub(crate) mod conv;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint, CHECKPOINT_VERSION};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imagekit::ImageGrid;
use conv::{conv_backward, conv_forward, Planes};

/// One convolution layer. Padding is always `(kernel - 1) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub relu: bool,
}

impl ConvSpec {
    pub fn padding(&self) -> usize {
        (self.kernel - 1) / 2
    }

    pub fn fan_in(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.fan_in()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Architecture {
    pub layers: Vec<ConvSpec>,
    /// Super-resolution factor the model is trained for.
    pub scale: usize,
}

impl Architecture {
    /// `channels → hidden[0] → … → channels` with ReLU after every hidden
    /// layer and a linear output layer.
    pub fn residual(
        channels: usize,
        hidden: &[usize],
        kernel: usize,
        scale: usize,
    ) -> Result<Self> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(channels);
        widths.extend_from_slice(hidden);
        widths.push(channels);
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, pair)| ConvSpec {
                in_channels: pair[0],
                out_channels: pair[1],
                kernel,
                relu: i + 2 < widths.len(),
            })
            .collect();
        let arch = Self { layers, scale };
        arch.validate()?;
        Ok(arch)
    }

    /// Three 3×3 layers, 32 hidden channels.
    pub fn standard(channels: usize, scale: usize) -> Self {
        Self::residual(channels, &[32, 32], 3, scale).expect("standard architecture is valid")
    }

    pub fn channels(&self) -> usize {
        self.layers[0].in_channels
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight_len() + l.out_channels)
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("architecture: {msg}")));
        let (first, last) = match (self.layers.first(), self.layers.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return bad("no layers".into()),
        };
        if first.in_channels != 1 && first.in_channels != 3 {
            return bad(format!("{} image channels", first.in_channels));
        }
        if last.out_channels != first.in_channels {
            return bad(format!(
                "output has {} channels, input {}",
                last.out_channels, first.in_channels
            ));
        }
        if last.relu {
            return bad("last layer must be linear".into());
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].out_channels != pair[1].in_channels {
                return bad(format!("layer {i} -> {} channel mismatch", i + 1));
            }
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.kernel % 2 == 0 || l.kernel == 0 {
                return bad(format!("layer {i} kernel {} is not odd", l.kernel));
            }
            if l.out_channels == 0 {
                return bad(format!("layer {i} has no outputs"));
            }
        }
        if self.scale == 0 {
            return bad("scale must be at least 1".into());
        }
        Ok(())
    }
}

/// Weight (`[out][in][ky][kx]`) and bias block for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerParams {
    fn zeros(spec: &ConvSpec) -> Self {
        Self {
            weight: vec![0.0; spec.weight_len()],
            bias: vec![0.0; spec.out_channels],
        }
    }
}

/// One block per layer, congruent with the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<LayerParams>,
}

impl GradientSet {
    pub fn zeros(arch: &Architecture) -> Self {
        Self {
            layers: arch.layers.iter().map(LayerParams::zeros).collect(),
        }
    }

    pub fn congruent_with(&self, arch: &Architecture) -> bool {
        self.layers.len() == arch.layers.len()
            && self
                .layers
                .iter()
                .zip(&arch.layers)
                .all(|(p, s)| p.weight.len() == s.weight_len() && p.bias.len() == s.out_channels)
    }

    /// `self += other`, block by block in a fixed order.
    pub fn accumulate(&mut self, other: &GradientSet) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight
                .iter_mut()
                .zip(&b.weight)
                .for_each(|(x, y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }
}

/// Layer inputs recorded by [`SrModel::forward`].
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<Planes>,
    dynamic_range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrModel {
    arch: Architecture,
    params: Vec<LayerParams>,
}

impl SrModel {
    /// A model with all weights and biases zero (an identity map).
    pub fn new(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let params = arch.layers.iter().map(LayerParams::zeros).collect();
        Ok(Self { arch, params })
    }

    /// He-uniform initialized model; see [`SrModel::init_parameters`].
    pub fn initialized(arch: Architecture, seed: u64) -> Result<Self> {
        let mut model = Self::new(arch)?;
        model.init_parameters(seed);
        Ok(model)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[LayerParams] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [LayerParams] {
        &mut self.params
    }

    pub fn parameter_values(&self) -> impl Iterator<Item = &f64> {
        self.params
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
    }

    pub fn parameter_values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.params
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Weights uniform in `±sqrt(6 / fan_in)` from a ChaCha8 stream seeded
    /// with `seed`, biases zero. Layers are filled in order.
    pub fn init_parameters(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (spec, p) in self.arch.layers.iter().zip(&mut self.params) {
            let bound = he_uniform_bound(spec.fan_in());
            for w in &mut p.weight {
                *w = rng.gen_range(-bound..bound);
            }
            p.bias.fill(0.0);
        }
    }

    fn check_input(&self, input: &ImageGrid) -> Result<()> {
        if input.channels() != self.arch.channels() {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} channels, got {}",
                self.arch.channels(),
                input.channels()
            )));
        }
        Ok(())
    }

    /// Predict the SR image for a pre-upsampled input, recording a tape.
    pub fn forward(&self, input: &ImageGrid) -> Result<(ImageGrid, Tape)> {
        self.check_input(input)?;
        let mut inputs = Vec::with_capacity(self.arch.layers.len());
        let mut x = to_planes(input);
        for (spec, p) in self.arch.layers.iter().zip(&self.params) {
            let mut y = conv_forward(&x, &p.weight, &p.bias, spec.out_channels, spec.kernel);
            if spec.relu {
                y.data.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            inputs.push(std::mem::replace(&mut x, y));
        }
        // Global skip: output = input + residual.
        let residual = x;
        let skip = &inputs[0];
        let mut out = residual;
        out.data
            .iter_mut()
            .zip(&skip.data)
            .for_each(|(o, s)| *o += s);
        let sr = from_planes(&out, input.dynamic_range())?;
        Ok((
            sr,
            Tape {
                inputs,
                dynamic_range: input.dynamic_range(),
            },
        ))
    }

    /// Forward pass without keeping the tape.
    pub fn predict(&self, input: &ImageGrid) -> Result<ImageGrid> {
        self.forward(input).map(|(sr, _)| sr)
    }

    /// Parameter gradients of a scalar loss given `d loss / d output`.
    pub fn backward(&self, tape: &Tape, grad_output: &ImageGrid) -> Result<GradientSet> {
        self.backward_impl(tape, grad_output, false).map(|(g, _)| g)
    }

    /// Like [`SrModel::backward`], also returning `d loss / d input`.
    pub fn backward_with_input(
        &self,
        tape: &Tape,
        grad_output: &ImageGrid,
    ) -> Result<(GradientSet, ImageGrid)> {
        let (grads, input) = self.backward_impl(tape, grad_output, true)?;
        let input = input.expect("input gradient requested");
        Ok((grads, from_planes(&input, tape.dynamic_range)?))
    }

    fn backward_impl(
        &self,
        tape: &Tape,
        grad_output: &ImageGrid,
        need_input: bool,
    ) -> Result<(GradientSet, Option<Planes>)> {
        let layers = &self.arch.layers;
        let tape_matches = tape.inputs.len() == layers.len()
            && tape
                .inputs
                .iter()
                .zip(layers)
                .all(|(x, s)| x.channels == s.in_channels);
        if !tape_matches {
            return Err(Error::ShapeMismatch(
                "tape was not recorded by this architecture".into(),
            ));
        }
        let skip = &tape.inputs[0];
        if grad_output.channels() != skip.channels
            || grad_output.height() != skip.height
            || grad_output.width() != skip.width
        {
            return Err(Error::ShapeMismatch(format!(
                "output gradient {}x{}x{} vs forward output {}x{}x{}",
                grad_output.height(),
                grad_output.width(),
                grad_output.channels(),
                skip.height,
                skip.width,
                skip.channels
            )));
        }

        let g_out = to_planes(grad_output);
        let mut grads = GradientSet::zeros(&self.arch);
        let mut dy = g_out.clone();
        let mut d_input = None;
        for i in (0..layers.len()).rev() {
            let spec = &layers[i];
            if spec.relu {
                // The next layer's input is this layer's ReLU output.
                let act = &tape.inputs[i + 1];
                dy.data.iter_mut().zip(&act.data).for_each(|(g, &a)| {
                    if a <= 0.0 {
                        *g = 0.0
                    }
                });
            }
            let want_dx = i > 0 || need_input;
            let cg = conv_backward(
                &tape.inputs[i],
                &dy,
                &self.params[i].weight,
                spec.kernel,
                want_dx,
            );
            grads.layers[i].weight = cg.weight;
            grads.layers[i].bias = cg.bias;
            match cg.input {
                Some(dx) if i > 0 => dy = dx,
                other => d_input = other,
            }
        }
        let d_input = d_input.map(|mut d| {
            d.data
                .iter_mut()
                .zip(&g_out.data)
                .for_each(|(a, b)| *a += b);
            d
        });
        Ok((grads, d_input))
    }
}

pub fn he_uniform_bound(fan_in: usize) -> f64 {
    (6.0 / fan_in as f64).sqrt()
}

fn to_planes(grid: &ImageGrid) -> Planes {
    let (h, w, c) = (grid.height(), grid.width(), grid.channels());
    let mut p = Planes::zeros(c, h, w);
    for (i, px) in grid.data().chunks_exact(c).enumerate() {
        for (ch, &v) in px.iter().enumerate() {
            p.data[ch * h * w + i] = v;
        }
    }
    p
}

fn from_planes(p: &Planes, dynamic_range: f64) -> Result<ImageGrid> {
    let (h, w, c) = (p.height, p.width, p.channels);
    let mut data = vec![0.0; c * h * w];
    for ch in 0..c {
        for (i, &v) in p.plane(ch).iter().enumerate() {
            data[i * c + ch] = v;
        }
    }
    ImageGrid::new(h, w, c, data, dynamic_range)
}

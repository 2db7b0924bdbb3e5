use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vinedmp_core::GaussianBasis;

use crate::gemm::gemm;
use crate::LearnerError;

/// Architecture of the image-to-weights network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Side of the square network input.
    pub input_size: usize,
    /// Output channels of each conv block; every block halves the resolution.
    pub channels: Vec<usize>,
    /// Append normalized column and row coordinate planes to the input so
    /// pooled features can carry position.
    pub coord_channels: bool,
    /// Add a 1×1 projection of each block's input to its conv output.
    pub residual: bool,
    pub num_kernels: usize,
    pub overlap: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_size: 64,
            channels: vec![8, 16, 32, 64],
            coord_channels: true,
            residual: false,
            num_kernels: 10,
            overlap: vinedmp_core::dmp::DEFAULT_OVERLAP,
        }
    }
}

/// Image channels every input tensor carries.
pub const IMAGE_CHANNELS: usize = 3;

impl ModelConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: String| Err(LearnerError::InvalidConfig(m));
        if self.channels.is_empty() || self.channels.contains(&0) {
            return bad("channels must be a nonempty list of positive widths".into());
        }
        let div = 1usize << self.channels.len();
        if self.input_size < div || self.input_size % div != 0 {
            return bad(format!(
                "input_size {} must be a positive multiple of {div} for {} pooling blocks",
                self.input_size,
                self.channels.len()
            ));
        }
        if self.num_kernels < 2 {
            return bad("num_kernels must be at least 2".into());
        }
        Ok(())
    }

    fn input_channels(&self) -> usize {
        IMAGE_CHANNELS + if self.coord_channels { 2 } else { 0 }
    }
}

/// A named slice of the flat parameter array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamView {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl ParamView {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone)]
struct BlockLayout {
    c_in: usize,
    c_out: usize,
    /// Input side length.
    size: usize,
    weight: usize,
    bias: usize,
    skip: Option<usize>,
}

/// Conv backbone, global average pool and affine head producing the
/// anchored weight matrix (2 × K) of a planar movement primitive.
#[derive(Debug, Clone)]
pub struct VisionDmpModel {
    config: ModelConfig,
    basis: GaussianBasis,
    params: Vec<f64>,
    views: Vec<ParamView>,
    blocks: Vec<BlockLayout>,
    head_weight: usize,
    head_bias: usize,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    blocks: Vec<BlockCache>,
    features: Vec<f64>,
    output: Vec<f64>,
}

#[derive(Debug, Clone)]
struct BlockCache {
    input: Vec<f64>,
    cols: Vec<f64>,
    pre: Vec<f64>,
    argmax: Vec<u32>,
}

impl ForwardPass {
    /// Raw head output: x-row weights then y-row weights.
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }
}

impl VisionDmpModel {
    /// A freshly initialized model: conv and projection weights uniform with
    /// fan-in scaled bounds, biases zero.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, LearnerError> {
        let mut model = Self::zeroed(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for view in model.views.clone() {
            if view.name.ends_with(".bias") {
                continue;
            }
            let fan_in: usize = view.shape[1..].iter().product();
            let gain = if view.name.starts_with("head") { 3.0 } else { 6.0 };
            let bound = (gain / fan_in as f64).sqrt();
            for p in &mut model.params[view.range()] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(model)
    }

    /// Same layout with every parameter zero.
    pub fn zeroed(config: ModelConfig) -> Result<Self, LearnerError> {
        config.validate()?;
        let basis = GaussianBasis::new(config.num_kernels, config.overlap)
            .map_err(|e| LearnerError::InvalidConfig(e.to_string()))?;
        let mut views = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, shape: Vec<usize>| {
            let at = offset;
            offset += shape.iter().product::<usize>();
            views.push(ParamView { name, shape, offset: at });
            at
        };
        let mut blocks = Vec::new();
        let mut c_in = config.input_channels();
        let mut size = config.input_size;
        for (i, &c_out) in config.channels.iter().enumerate() {
            let weight = push(format!("block{i}.conv.weight"), vec![c_out, c_in, 3, 3]);
            let bias = push(format!("block{i}.conv.bias"), vec![c_out]);
            let skip = config
                .residual
                .then(|| push(format!("block{i}.skip.weight"), vec![c_out, c_in]));
            blocks.push(BlockLayout {
                c_in,
                c_out,
                size,
                weight,
                bias,
                skip,
            });
            c_in = c_out;
            size /= 2;
        }
        let outputs = 2 * config.num_kernels;
        let head_weight = push("head.weight".into(), vec![outputs, c_in]);
        let head_bias = push("head.bias".into(), vec![outputs]);
        Ok(Self {
            config,
            basis,
            params: vec![0.0; offset],
            views,
            blocks,
            head_weight,
            head_bias,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn basis(&self) -> &GaussianBasis {
        &self.basis
    }

    pub fn num_kernels(&self) -> usize {
        self.config.num_kernels
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn views(&self) -> &[ParamView] {
        &self.views
    }

    pub fn view(&self, name: &str) -> Option<&ParamView> {
        self.views.iter().find(|v| v.name == name)
    }

    /// Mutable slice of the named parameter block.
    pub fn param_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let range = self.view(name)?.range();
        Some(&mut self.params[range])
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Length of a preprocessed input tensor.
    pub fn input_len(&self) -> usize {
        IMAGE_CHANNELS * self.config.input_size * self.config.input_size
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), LearnerError> {
        if params.len() != self.params.len() {
            return Err(LearnerError::InvalidConfig(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn with_coords(&self, input: &[f64]) -> Vec<f64> {
        let s = self.config.input_size;
        let mut x = Vec::with_capacity(self.config.input_channels() * s * s);
        x.extend_from_slice(input);
        if self.config.coord_channels {
            let denom = (s - 1).max(1) as f64;
            for _row in 0..s {
                x.extend((0..s).map(|c| c as f64 / denom));
            }
            for row in 0..s {
                x.extend(std::iter::repeat_n(row as f64 / denom, s));
            }
        }
        x
    }

    /// Runs the network on one `3 × S × S` tensor.
    pub fn forward(&self, input: &[f64]) -> Result<ForwardPass, LearnerError> {
        if input.len() != self.input_len() {
            return Err(LearnerError::InputShape {
                expected: self.input_len(),
                got: input.len(),
            });
        }
        let mut x = self.with_coords(input);
        let mut caches = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let hw = b.size * b.size;
            let cols = im2col(&x, b.c_in, b.size);
            let mut pre = vec![0.0; b.c_out * hw];
            for (o, row) in pre.chunks_exact_mut(hw).enumerate() {
                row.fill(self.params[b.bias + o]);
            }
            let w = &self.params[b.weight..b.weight + b.c_out * b.c_in * 9];
            gemm(b.c_out, b.c_in * 9, hw, w, false, &cols, false, 1.0, &mut pre);
            if let Some(skip) = b.skip {
                let p = &self.params[skip..skip + b.c_out * b.c_in];
                gemm(b.c_out, b.c_in, hw, p, false, &x, false, 1.0, &mut pre);
            }
            let (out, argmax) = relu_maxpool(&pre, b.c_out, b.size);
            caches.push(BlockCache {
                input: x,
                cols,
                pre,
                argmax,
            });
            x = out;
        }
        let last = self.blocks.last().expect("at least one block");
        let side = last.size / 2;
        let area = (side * side) as f64;
        let features: Vec<f64> = x.chunks_exact(side * side).map(|c| c.iter().sum::<f64>() / area).collect();
        let outputs = 2 * self.config.num_kernels;
        let mut output = self.params[self.head_bias..self.head_bias + outputs].to_vec();
        let hw = &self.params[self.head_weight..self.head_weight + outputs * features.len()];
        for (o, row) in hw.chunks_exact(features.len()).enumerate() {
            output[o] += row.iter().zip(&features).map(|(a, b)| a * b).sum::<f64>();
        }
        if output.iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::NonFiniteActivation);
        }
        Ok(ForwardPass {
            blocks: caches,
            features,
            output,
        })
    }

    /// Anchored weights (2 × K) for one input tensor.
    pub fn anchored_weights(&self, input: &[f64]) -> Result<DMatrix<f64>, LearnerError> {
        let pass = self.forward(input)?;
        Ok(DMatrix::from_row_slice(2, self.config.num_kernels, &pass.output))
    }

    /// Accumulates `scale ×` the gradient of a loss whose derivative with
    /// respect to the head output is `d_output` into `grads`.
    pub fn backward(&self, pass: &ForwardPass, d_output: &[f64], scale: f64, grads: &mut [f64]) {
        assert_eq!(grads.len(), self.params.len());
        let outputs = d_output.len();
        let f = pass.features.len();
        let d_out: Vec<f64> = d_output.iter().map(|d| d * scale).collect();
        let mut d_feat = vec![0.0; f];
        for o in 0..outputs {
            let g = d_out[o];
            grads[self.head_bias + o] += g;
            let row = self.head_weight + o * f;
            for c in 0..f {
                grads[row + c] += g * pass.features[c];
                d_feat[c] += g * self.params[row + c];
            }
        }
        let last = self.blocks.last().expect("at least one block");
        let area = (last.size / 2) * (last.size / 2);
        let mut d_x: Vec<f64> = d_feat
            .iter()
            .flat_map(|g| std::iter::repeat_n(g / area as f64, area))
            .collect();

        for (i, (b, cache)) in self.blocks.iter().zip(&pass.blocks).enumerate().rev() {
            let hw = b.size * b.size;
            let mut dz = vec![0.0; b.c_out * hw];
            for (o, (g, &idx)) in d_x.iter().zip(&cache.argmax).enumerate() {
                let plane = o / (hw / 4);
                let at = plane * hw + idx as usize;
                if cache.pre[at] > 0.0 {
                    dz[at] += g;
                }
            }
            let k9 = b.c_in * 9;
            gemm(b.c_out, hw, k9, &dz, false, &cache.cols, true, 1.0, &mut grads[b.weight..b.weight + b.c_out * k9]);
            for (o, row) in dz.chunks_exact(hw).enumerate() {
                grads[b.bias + o] += row.iter().sum::<f64>();
            }
            if let Some(skip) = b.skip {
                gemm(b.c_out, hw, b.c_in, &dz, false, &cache.input, true, 1.0, &mut grads[skip..skip + b.c_out * b.c_in]);
            }
            if i == 0 {
                break;
            }
            let mut d_cols = vec![0.0; k9 * hw];
            let w = &self.params[b.weight..b.weight + b.c_out * k9];
            gemm(k9, b.c_out, hw, w, true, &dz, false, 0.0, &mut d_cols);
            let mut d_in = col2im(&d_cols, b.c_in, b.size);
            if let Some(skip) = b.skip {
                let p = &self.params[skip..skip + b.c_out * b.c_in];
                gemm(b.c_in, b.c_out, hw, p, true, &dz, false, 1.0, &mut d_in);
            }
            d_x = d_in;
        }
    }
}

/// Unfolds 3×3 zero-padded windows: row `c·9 + ky·3 + kx`, column `y·s + x`.
fn im2col(x: &[f64], channels: usize, s: usize) -> Vec<f64> {
    let hw = s * s;
    let mut cols = vec![0.0; channels * 9 * hw];
    for c in 0..channels {
        let plane = &x[c * hw..(c + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[(c * 9 + ky * 3 + kx) * hw..][..hw];
                for y in 0..s {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= s as isize {
                        continue;
                    }
                    let src = &plane[sy as usize * s..][..s];
                    let dst = &mut row[y * s..][..s];
                    match kx {
                        0 => dst[1..].copy_from_slice(&src[..s - 1]),
                        1 => dst.copy_from_slice(src),
                        _ => dst[..s - 1].copy_from_slice(&src[1..]),
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`].
fn col2im(cols: &[f64], channels: usize, s: usize) -> Vec<f64> {
    let hw = s * s;
    let mut x = vec![0.0; channels * hw];
    for c in 0..channels {
        let plane = &mut x[c * hw..(c + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[(c * 9 + ky * 3 + kx) * hw..][..hw];
                for y in 0..s {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= s as isize {
                        continue;
                    }
                    let dst = &mut plane[sy as usize * s..][..s];
                    let src = &row[y * s..][..s];
                    match kx {
                        0 => dst[..s - 1].iter_mut().zip(&src[1..]).for_each(|(d, v)| *d += v),
                        1 => dst.iter_mut().zip(src).for_each(|(d, v)| *d += v),
                        _ => dst[1..].iter_mut().zip(&src[..s - 1]).for_each(|(d, v)| *d += v),
                    }
                }
            }
        }
    }
    x
}

/// ReLU followed by 2×2 max pooling; `argmax` holds the winning in-plane
/// index of each output. Ties go to the first element in scan order.
fn relu_maxpool(pre: &[f64], channels: usize, s: usize) -> (Vec<f64>, Vec<u32>) {
    let h = s / 2;
    let mut out = vec![0.0; channels * h * h];
    let mut argmax = vec![0u32; channels * h * h];
    for c in 0..channels {
        let plane = &pre[c * s * s..(c + 1) * s * s];
        for y in 0..h {
            for x in 0..h {
                let mut best = f64::NEG_INFINITY;
                let mut at = 0;
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let i = (2 * y + dy) * s + 2 * x + dx;
                    let v = plane[i].max(0.0);
                    if v > best {
                        best = v;
                        at = i;
                    }
                }
                let o = c * h * h + y * h + x;
                out[o] = best;
                argmax[o] = at as u32;
            }
        }
    }
    (out, argmax)
}

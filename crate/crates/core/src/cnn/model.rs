//! Blink-detector network: configuration, parameters, forward and backward
//! passes, and the binary model file.
//!
//! The default network has five blocks of `conv -> ReLU -> conv -> ReLU ->
//! max-pool` (ten convolutions in total), then a ReLU hidden dense layer,
//! dropout, and a two-way softmax output. Convolutions are 3x3 with one
//! pixel of zero padding so each 2x2 pool halves the map:
//! 50 -> 25 -> 12 -> 6 -> 3 -> 1.

use std::fmt::Write as _;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{self, Mode};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 5] = b"BLNK1";
pub const CLASS_COUNT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvBlock {
    pub out_channels: usize,
    pub kernel_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnConfig {
    pub input_channels: usize,
    pub input_size: usize,
    pub conv_blocks: Vec<ConvBlock>,
    pub convs_per_block: usize,
    pub pool_size: usize,
    pub dense_widths: Vec<usize>,
    /// Probability that a hidden unit is dropped during training.
    pub dropout_drop_probability: f64,
    pub class_count: usize,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self::blink_detector()
    }
}

impl CnnConfig {
    /// The ten-convolution network for 50x50 eye crops.
    pub fn blink_detector() -> Self {
        Self {
            input_channels: 1,
            input_size: 50,
            conv_blocks: [8, 16, 32, 64, 64]
                .into_iter()
                .map(|out_channels| ConvBlock {
                    out_channels,
                    kernel_size: 3,
                })
                .collect(),
            convs_per_block: 2,
            pool_size: 2,
            dense_widths: vec![128],
            dropout_drop_probability: 0.8,
            class_count: CLASS_COUNT,
        }
    }

    pub fn keep_probability(&self) -> f64 {
        1.0 - self.dropout_drop_probability
    }

    pub fn conv_layer_count(&self) -> usize {
        self.conv_blocks.len() * self.convs_per_block
    }

    /// Whether this is the full-size 50x50, ten-convolution detector.
    pub fn is_blink_detector_geometry(&self) -> bool {
        self.input_channels == 1 && self.input_size == 50 && self.conv_layer_count() == 10
    }

    /// Spatial side length after each block's pooling.
    pub fn spatial_trace(&self) -> Result<Vec<usize>> {
        let mut size = self.input_size;
        let mut trace = vec![size];
        for _ in &self.conv_blocks {
            if size < self.pool_size {
                return Err(Error::InputTooSmall {
                    height: size,
                    width: size,
                    window: self.pool_size,
                });
            }
            size /= self.pool_size;
            trace.push(size);
        }
        Ok(trace)
    }

    pub fn flattened_len(&self) -> Result<usize> {
        let side = *self.spatial_trace()?.last().expect("trace is non-empty");
        let channels = self
            .conv_blocks
            .last()
            .map_or(self.input_channels, |b| b.out_channels);
        Ok(channels * side * side)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ValidationFailure(msg));
        if self.class_count != CLASS_COUNT {
            return bad(format!("class_count must be 2, got {}", self.class_count));
        }
        if self.input_channels == 0 || self.input_size == 0 {
            return bad("input shape must be positive".into());
        }
        if self.convs_per_block == 0 || self.pool_size == 0 {
            return bad("convs_per_block and pool_size must be positive".into());
        }
        for b in &self.conv_blocks {
            if b.out_channels == 0 || b.kernel_size % 2 == 0 {
                return bad(format!(
                    "conv block {}:{} needs positive channels and an odd kernel",
                    b.out_channels, b.kernel_size
                ));
            }
        }
        if self.dense_widths.contains(&0) {
            return bad("dense widths must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_drop_probability) {
            return bad(format!(
                "dropout drop probability {} outside [0, 1)",
                self.dropout_drop_probability
            ));
        }
        self.flattened_len().map(|_| ())
    }

    fn canonical_lines(&self) -> String {
        let blocks: Vec<String> = self
            .conv_blocks
            .iter()
            .map(|b| format!("{}:{}", b.out_channels, b.kernel_size))
            .collect();
        let dense: Vec<String> = self.dense_widths.iter().map(usize::to_string).collect();
        format!(
            "input={}x{}x{}\nconv_blocks={}\nconvs_per_block={}\npool={}\ndense={}\ndropout_drop={}\nclasses={}\n",
            self.input_channels,
            self.input_size,
            self.input_size,
            blocks.join(","),
            self.convs_per_block,
            self.pool_size,
            dense.join(","),
            self.dropout_drop_probability,
            self.class_count
        )
    }

    /// One entry per learnable tensor, in serialization order.
    pub fn parameter_shapes(&self) -> Result<Vec<(String, Vec<usize>)>> {
        self.validate()?;
        let mut shapes = Vec::new();
        let mut channels = self.input_channels;
        let mut index = 1;
        for b in &self.conv_blocks {
            for _ in 0..self.convs_per_block {
                let k = b.kernel_size;
                shapes.push((
                    format!("conv{index}.weight"),
                    vec![b.out_channels, channels, k, k],
                ));
                shapes.push((format!("conv{index}.bias"), vec![b.out_channels]));
                channels = b.out_channels;
                index += 1;
            }
        }
        let mut width = self.flattened_len()?;
        for (i, &out) in self
            .dense_widths
            .iter()
            .chain(std::iter::once(&self.class_count))
            .enumerate()
        {
            shapes.push((format!("fc{}.weight", i + 1), vec![out, width]));
            shapes.push((format!("fc{}.bias", i + 1), vec![out]));
            width = out;
        }
        Ok(shapes)
    }
}

/// Provenance of a trained model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    /// Summed training loss per epoch.
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub config: CnnConfig,
    pub names: Vec<String>,
    pub params: Vec<Tensor>,
    pub training_meta: TrainingMeta,
}

#[derive(Debug, Clone)]
enum Layer {
    Conv { weight: usize, padding: usize },
    Relu,
    Pool { window: usize },
    Flatten,
    Dense { weight: usize },
    Dropout,
}

enum LayerCache {
    Conv(Tensor),
    Relu(Tensor),
    Pool {
        input_shape: Vec<usize>,
        argmax: Vec<usize>,
    },
    Flatten(Vec<usize>),
    Dense(Vec<f64>),
    Dropout(Option<Vec<f64>>),
}

enum Activation {
    Map(Tensor),
    Flat(Vec<f64>),
}

impl Activation {
    fn into_map(self) -> Tensor {
        match self {
            Activation::Map(t) => t,
            Activation::Flat(v) => Tensor::from_vec(v),
        }
    }
}

impl CnnModel {
    /// Fresh model with He-uniform weights drawn from `seed` and zero biases.
    pub fn initialize(config: CnnConfig, seed: u64) -> Result<Self> {
        let shapes = config.parameter_shapes()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::with_capacity(shapes.len());
        let mut params = Vec::with_capacity(shapes.len());
        for (name, shape) in shapes {
            let tensor = if name.ends_with(".bias") {
                Tensor::zeros(&shape)
            } else {
                let fan_in: usize = shape[1..].iter().product();
                let bound = (6.0 / fan_in as f64).sqrt();
                let n = shape.iter().product();
                let data = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
                Tensor::new(shape, data)?
            };
            names.push(name);
            params.push(tensor);
        }
        Ok(Self {
            config,
            names,
            params,
            training_meta: TrainingMeta {
                seed,
                ..TrainingMeta::default()
            },
        })
    }

    fn plan(&self) -> Vec<Layer> {
        let mut plan = Vec::new();
        let mut weight = 0;
        for b in &self.config.conv_blocks {
            for _ in 0..self.config.convs_per_block {
                plan.push(Layer::Conv {
                    weight,
                    padding: b.kernel_size / 2,
                });
                plan.push(Layer::Relu);
                weight += 2;
            }
            plan.push(Layer::Pool {
                window: self.config.pool_size,
            });
        }
        plan.push(Layer::Flatten);
        for _ in &self.config.dense_widths {
            plan.push(Layer::Dense { weight });
            plan.push(Layer::Relu);
            weight += 2;
        }
        if !self.config.dense_widths.is_empty() {
            plan.push(Layer::Dropout);
        }
        plan.push(Layer::Dense { weight });
        plan
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        let c = &self.config;
        let expected = [c.input_channels, c.input_size, c.input_size];
        if input.shape() != expected {
            return Err(Error::ShapeMismatch(format!(
                "network input must be {expected:?}, got {:?}",
                input.shape()
            )));
        }
        Ok(())
    }

    fn run<R: Rng + ?Sized>(
        &self,
        input: &Tensor,
        mode: Mode,
        rng: &mut R,
        mut cache: Option<&mut Vec<LayerCache>>,
    ) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let keep = self.config.keep_probability();
        let mut act = Activation::Map(input.clone());
        for layer in self.plan() {
            act = match (layer, act) {
                (Layer::Conv { weight, padding }, Activation::Map(x)) => {
                    let y = layers::conv2d_forward_padded(
                        &x,
                        &self.params[weight],
                        &self.params[weight + 1],
                        padding,
                    )?;
                    if let Some(c) = cache.as_deref_mut() {
                        c.push(LayerCache::Conv(x));
                    }
                    Activation::Map(y)
                }
                (Layer::Relu, Activation::Map(x)) => {
                    let y = layers::relu(&x);
                    if let Some(c) = cache.as_deref_mut() {
                        c.push(LayerCache::Relu(y.clone()));
                    }
                    Activation::Map(y)
                }
                (Layer::Relu, Activation::Flat(x)) => {
                    let y: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
                    if let Some(c) = cache.as_deref_mut() {
                        c.push(LayerCache::Relu(Tensor::from_vec(y.clone())));
                    }
                    Activation::Flat(y)
                }
                (Layer::Pool { window }, Activation::Map(x)) => {
                    let pooled = layers::maxpool2d(&x, window)?;
                    if let Some(c) = cache.as_deref_mut() {
                        c.push(LayerCache::Pool {
                            input_shape: x.shape().to_vec(),
                            argmax: pooled.argmax,
                        });
                    }
                    Activation::Map(pooled.output)
                }
                (Layer::Flatten, Activation::Map(x)) => {
                    if let Some(c) = cache.as_deref_mut() {
                        c.push(LayerCache::Flatten(x.shape().to_vec()));
                    }
                    Activation::Flat(x.into_data())
                }
                (Layer::Dense { weight }, Activation::Flat(x)) => {
                    let y =
                        layers::dense_forward(&x, &self.params[weight], &self.params[weight + 1])?;
                    if let Some(c) = cache.as_deref_mut() {
                        c.push(LayerCache::Dense(x));
                    }
                    Activation::Flat(y)
                }
                (Layer::Dropout, Activation::Flat(x)) => {
                    let (y, mask) = layers::dropout_forward(&x, keep, mode, rng)?;
                    if let Some(c) = cache.as_deref_mut() {
                        c.push(LayerCache::Dropout(mask));
                    }
                    Activation::Flat(y)
                }
                (layer, _) => unreachable!("layer plan out of order at {layer:?}"),
            };
        }
        match act {
            Activation::Flat(mut logits) => {
                layers::softmax_in_place(&mut logits);
                Ok(logits)
            }
            Activation::Map(_) => unreachable!("plan ends with a dense layer"),
        }
    }

    /// Class probabilities in inference mode (dropout disabled).
    pub fn probabilities(&self, input: &Tensor) -> Result<Vec<f64>> {
        // The RNG is never consulted in inference mode.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        self.run(input, Mode::Inference, &mut rng, None)
    }

    /// Summed cross-entropy of a batch and the gradient of every parameter.
    ///
    /// Dropout masks are drawn from `rng` when `mode` is [`Mode::Train`].
    pub fn loss_and_gradients<R: Rng + ?Sized>(
        &self,
        inputs: &[Tensor],
        targets: &[usize],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(f64, Vec<Tensor>)> {
        if inputs.len() != targets.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let mut grads: Vec<Tensor> = self
            .params
            .iter()
            .map(|p| Tensor::zeros(p.shape()))
            .collect();
        let mut total = 0.0;
        let plan = self.plan();
        for (input, &target) in inputs.iter().zip(targets) {
            if target >= self.config.class_count {
                return Err(Error::ShapeMismatch(format!(
                    "target class {target} out of range"
                )));
            }
            let mut cache = Vec::with_capacity(plan.len());
            let probs = self.run(input, mode, rng, Some(&mut cache))?;
            total -= probs[target].max(layers::LOG_CLAMP).ln();

            let mut grad: Vec<f64> = probs;
            grad[target] -= 1.0;
            let mut upstream = Activation::Flat(grad);
            for (layer, cached) in plan.iter().zip(cache).rev() {
                upstream = match (layer, cached, upstream) {
                    (Layer::Dense { weight }, LayerCache::Dense(x), Activation::Flat(g)) => {
                        let (gx, gw, gb) = layers::dense_backward(&x, &self.params[*weight], &g)?;
                        grads[*weight].add_assign(&gw);
                        grads[*weight + 1].add_assign(&gb);
                        Activation::Flat(gx)
                    }
                    (Layer::Dropout, LayerCache::Dropout(mask), Activation::Flat(g)) => {
                        match mask {
                            Some(m) => {
                                Activation::Flat(g.iter().zip(&m).map(|(a, b)| a * b).collect())
                            }
                            None => Activation::Flat(g),
                        }
                    }
                    (Layer::Relu, LayerCache::Relu(y), up) => {
                        let flat = matches!(up, Activation::Flat(_));
                        let g = up.into_map().reshaped(y.shape())?;
                        let out = layers::relu_backward(&y, &g);
                        if flat {
                            Activation::Flat(out.into_data())
                        } else {
                            Activation::Map(out)
                        }
                    }
                    (Layer::Flatten, LayerCache::Flatten(shape), Activation::Flat(g)) => {
                        Activation::Map(Tensor::new(shape, g)?)
                    }
                    (
                        Layer::Pool { .. },
                        LayerCache::Pool {
                            input_shape,
                            argmax,
                        },
                        Activation::Map(g),
                    ) => Activation::Map(layers::maxpool2d_backward(&input_shape, &argmax, &g)),
                    (Layer::Conv { weight, padding }, LayerCache::Conv(x), Activation::Map(g)) => {
                        let (gx, gw, gb) =
                            layers::conv2d_backward(&x, &self.params[*weight], &g, *padding)?;
                        grads[*weight].add_assign(&gw);
                        grads[*weight + 1].add_assign(&gb);
                        Activation::Map(gx)
                    }
                    (layer, _, _) => unreachable!("cache out of order at {layer:?}"),
                };
            }
        }
        Ok((total, grads))
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Serializes to the versioned binary model format.
    ///
    /// Layout: `BLNK1`, a little-endian `u32` byte length followed by the
    /// canonical text header, a little-endian `u64` value count, then every
    /// parameter as a little-endian `f64` in declaration order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut text = self.config.canonical_lines();
        let meta = &self.training_meta;
        let losses: Vec<String> = meta.losses.iter().map(|l| format!("{l}")).collect();
        let _ = write!(
            text,
            "seed={}\nepochs={}\nlosses={}\n",
            meta.seed,
            meta.epochs,
            losses.join(",")
        );
        let mut out = Vec::with_capacity(32 + text.len() + 8 * self.parameter_count());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        out.extend_from_slice(&(self.parameter_count() as u64).to_le_bytes());
        for p in &self.params {
            for v in p.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::ModelFormat(msg.to_string());
        let rest = bytes
            .strip_prefix(MODEL_MAGIC)
            .ok_or_else(|| bad("missing BLNK1 magic"))?;
        let (len, rest) = split_array::<4>(rest).ok_or_else(|| bad("truncated header length"))?;
        let len = u32::from_le_bytes(len) as usize;
        if rest.len() < len {
            return Err(bad("truncated header"));
        }
        let (text, rest) = rest.split_at(len);
        let text = std::str::from_utf8(text).map_err(|_| bad("header is not UTF-8"))?;
        let (config, meta) = parse_header(text)?;
        let (count, mut rest) =
            split_array::<8>(rest).ok_or_else(|| bad("truncated value count"))?;
        let count = u64::from_le_bytes(count) as usize;

        let shapes = config.parameter_shapes()?;
        let expected: usize = shapes
            .iter()
            .map(|(_, s)| s.iter().product::<usize>())
            .sum();
        if count != expected || rest.len() != 8 * expected {
            return Err(Error::ModelFormat(format!(
                "config needs {expected} parameters, file declares {count} with {} bytes",
                rest.len()
            )));
        }
        let mut names = Vec::with_capacity(shapes.len());
        let mut params = Vec::with_capacity(shapes.len());
        for (name, shape) in shapes {
            let n: usize = shape.iter().product();
            let (chunk, tail) = rest.split_at(8 * n);
            rest = tail;
            let data = chunk
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            names.push(name);
            params.push(Tensor::new(shape, data)?);
        }
        Ok(Self {
            config,
            names,
            params,
            training_meta: meta,
        })
    }
}

fn split_array<const N: usize>(bytes: &[u8]) -> Option<([u8; N], &[u8])> {
    if bytes.len() < N {
        return None;
    }
    let (head, tail) = bytes.split_at(N);
    Some((head.try_into().ok()?, tail))
}

fn parse_header(text: &str) -> Result<(CnnConfig, TrainingMeta)> {
    let bad = Error::ModelFormat;
    let mut config = CnnConfig {
        input_channels: 0,
        input_size: 0,
        conv_blocks: Vec::new(),
        convs_per_block: 0,
        pool_size: 0,
        dense_widths: Vec::new(),
        dropout_drop_probability: 0.0,
        class_count: 0,
    };
    let mut meta = TrainingMeta::default();
    let num = |key: &str, v: &str| -> Result<usize> {
        v.parse()
            .map_err(|_| Error::ModelFormat(format!("bad {key} `{v}`")))
    };
    for line in text.lines() {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("header line `{line}` is not key=value")))?;
        match key {
            "input" => {
                let dims: Vec<&str> = value.split('x').collect();
                let [c, h, w] = dims[..] else {
                    return Err(bad(format!("bad input shape `{value}`")));
                };
                if h != w {
                    return Err(bad("input must be square".into()));
                }
                config.input_channels = num(key, c)?;
                config.input_size = num(key, h)?;
            }
            "conv_blocks" => {
                for item in split_list(value) {
                    let (c, k) = item
                        .split_once(':')
                        .ok_or_else(|| bad(format!("bad conv block `{item}`")))?;
                    config.conv_blocks.push(ConvBlock {
                        out_channels: num(key, c)?,
                        kernel_size: num(key, k)?,
                    });
                }
            }
            "convs_per_block" => config.convs_per_block = num(key, value)?,
            "pool" => config.pool_size = num(key, value)?,
            "dense" => {
                config.dense_widths = split_list(value)
                    .into_iter()
                    .map(|v| num(key, v))
                    .collect::<Result<_>>()?
            }
            "dropout_drop" => {
                config.dropout_drop_probability = value
                    .parse()
                    .map_err(|_| bad(format!("bad dropout `{value}`")))?
            }
            "classes" => config.class_count = num(key, value)?,
            "seed" => {
                meta.seed = value
                    .parse()
                    .map_err(|_| bad(format!("bad seed `{value}`")))?
            }
            "epochs" => meta.epochs = num(key, value)?,
            "losses" => {
                meta.losses = split_list(value)
                    .into_iter()
                    .map(|v| v.parse().map_err(|_| bad(format!("bad loss `{v}`"))))
                    .collect::<Result<_>>()?
            }
            other => return Err(bad(format!("unknown header key `{other}`"))),
        }
    }
    config.validate().map_err(|e| bad(e.to_string()))?;
    Ok((config, meta))
}

fn split_list(v: &str) -> Vec<&str> {
    v.split(',').filter(|s| !s.is_empty()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_config() -> CnnConfig {
        CnnConfig {
            input_channels: 1,
            input_size: 8,
            conv_blocks: vec![
                ConvBlock {
                    out_channels: 3,
                    kernel_size: 3,
                },
                ConvBlock {
                    out_channels: 4,
                    kernel_size: 3,
                },
            ],
            convs_per_block: 2,
            pool_size: 2,
            dense_widths: vec![6],
            dropout_drop_probability: 0.5,
            class_count: 2,
        }
    }

    #[test]
    fn default_geometry() {
        let c = CnnConfig::blink_detector();
        c.validate().unwrap();
        assert_eq!(c.conv_layer_count(), 10);
        assert!(c.is_blink_detector_geometry());
        assert_eq!(c.spatial_trace().unwrap(), vec![50, 25, 12, 6, 3, 1]);
        assert_eq!(c.flattened_len().unwrap(), 64);
        assert_eq!(c.keep_probability(), 1.0 - 0.8);
        let shapes = c.parameter_shapes().unwrap();
        assert_eq!(shapes.len(), 2 * 10 + 2 * 2);
        assert_eq!(shapes[0], ("conv1.weight".to_string(), vec![8, 1, 3, 3]));
        assert_eq!(shapes[21].1, vec![128]);
        assert_eq!(shapes[22], ("fc2.weight".to_string(), vec![2, 128]));
    }

    #[test]
    fn rejects_infeasible_geometry() {
        let mut c = CnnConfig::blink_detector();
        c.conv_blocks.push(ConvBlock {
            out_channels: 8,
            kernel_size: 3,
        });
        assert!(matches!(c.validate(), Err(Error::InputTooSmall { .. })));
        let mut c = CnnConfig::blink_detector();
        c.class_count = 3;
        assert!(c.validate().is_err());
        let mut c = CnnConfig::blink_detector();
        c.conv_blocks[0].kernel_size = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = CnnModel::initialize(tiny_config(), 3).unwrap();
        let input = Tensor::new(
            vec![1, 8, 8],
            (0..64).map(|i| (i % 7) as f64 / 7.0).collect(),
        )
        .unwrap();
        let p = model.probabilities(&input).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(model.probabilities(&Tensor::zeros(&[1, 9, 9])).is_err());
    }

    #[test]
    fn zero_kernels_give_zero_conv_gradients_past_first_layer() {
        let mut model = CnnModel::initialize(tiny_config(), 11).unwrap();
        for (name, p) in model.names.iter().zip(model.params.iter_mut()) {
            if name.starts_with("conv") {
                p.data_mut().fill(0.0);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let inputs = vec![Tensor::zeros(&[1, 8, 8]); 2];
        let (_, grads) = model
            .loss_and_gradients(&inputs, &[0, 1], Mode::Train, &mut rng)
            .unwrap();
        for (name, g) in model.names.iter().zip(&grads) {
            if name.starts_with("conv") && name.ends_with(".weight") && name != "conv1.weight" {
                assert!(g.data().iter().all(|&v| v == 0.0), "{name}");
            }
        }
    }

    #[test]
    fn serialization_round_trips_bit_exactly() {
        let mut model = CnnModel::initialize(tiny_config(), 9).unwrap();
        model.training_meta.epochs = 3;
        model.training_meta.losses = vec![1.0 / 3.0, 0.1 + 0.2, 1e-300];
        let bytes = model.to_bytes();
        assert_eq!(&bytes[..5], b"BLNK1");
        let back = CnnModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_bytes(), bytes);

        let mut corrupt = bytes.clone();
        corrupt.truncate(bytes.len() - 1);
        assert!(matches!(
            CnnModel::from_bytes(&corrupt),
            Err(Error::ModelFormat(_))
        ));
        assert!(CnnModel::from_bytes(b"BLNK2....").is_err());
    }
}

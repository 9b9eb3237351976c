//! Forward and backward passes of the individual layers.
//!
//! Activations are single samples laid out `channels x height x width`;
//! dense layers take flat vectors. Batches are formed by the caller.

use rand::Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Smallest probability passed to `ln` by the cross-entropy loss.
pub const LOG_CLAMP: f64 = 1e-12;

/// Stride-1 convolution without padding.
pub fn conv2d_forward(input: &Tensor, kernel: &Tensor, bias: &Tensor) -> Result<Tensor> {
    conv2d_forward_padded(input, kernel, bias, 0)
}

/// Stride-1 convolution with `padding` zero rows and columns on every side.
///
/// Output spatial size is `input + 2 * padding - kernel + 1`.
pub fn conv2d_forward_padded(
    input: &Tensor,
    kernel: &Tensor,
    bias: &Tensor,
    padding: usize,
) -> Result<Tensor> {
    let geom = ConvGeometry::new(input, kernel, bias, padding)?;
    let ConvGeometry {
        in_c,
        in_h,
        in_w,
        out_c,
        k,
        out_h,
        out_w,
    } = geom;
    let x = input.data();
    let w = kernel.data();
    let mut out = vec![0.0; out_c * out_h * out_w];
    for o in 0..out_c {
        let plane = &mut out[o * out_h * out_w..(o + 1) * out_h * out_w];
        plane.fill(bias.data()[o]);
        for c in 0..in_c {
            let in_plane = &x[c * in_h * in_w..(c + 1) * in_h * in_w];
            for ki in 0..k {
                let (y_lo, y_hi) = valid_range(ki, padding, in_h, out_h);
                for kj in 0..k {
                    let weight = w[((o * in_c + c) * k + ki) * k + kj];
                    if weight == 0.0 {
                        continue;
                    }
                    let (x_lo, x_hi) = valid_range(kj, padding, in_w, out_w);
                    for y in y_lo..y_hi {
                        let iy = y + ki - padding;
                        let out_row = &mut plane[y * out_w + x_lo..y * out_w + x_hi];
                        let in_row = &in_plane[iy * in_w + x_lo + kj - padding..];
                        for (acc, &v) in out_row.iter_mut().zip(in_row) {
                            *acc += weight * v;
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![out_c, out_h, out_w], out)
}

/// Gradients of a convolution with respect to its input, kernel and bias.
pub fn conv2d_backward(
    input: &Tensor,
    kernel: &Tensor,
    grad_output: &Tensor,
    padding: usize,
) -> Result<(Tensor, Tensor, Tensor)> {
    let out_c = kernel.shape().first().copied().unwrap_or(0);
    let bias = Tensor::zeros(&[out_c.max(1)]);
    let ConvGeometry {
        in_c,
        in_h,
        in_w,
        out_c,
        k,
        out_h,
        out_w,
    } = ConvGeometry::new(input, kernel, &bias, padding)?;
    if grad_output.shape() != [out_c, out_h, out_w] {
        return Err(Error::ShapeMismatch(format!(
            "conv output gradient {:?}, expected {:?}",
            grad_output.shape(),
            [out_c, out_h, out_w]
        )));
    }
    let x = input.data();
    let w = kernel.data();
    let g = grad_output.data();
    let mut grad_in = vec![0.0; x.len()];
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = vec![0.0; out_c];
    for o in 0..out_c {
        let g_plane = &g[o * out_h * out_w..(o + 1) * out_h * out_w];
        grad_b[o] = g_plane.iter().sum();
        for c in 0..in_c {
            let in_plane = &x[c * in_h * in_w..(c + 1) * in_h * in_w];
            let gin_plane = &mut grad_in[c * in_h * in_w..(c + 1) * in_h * in_w];
            for ki in 0..k {
                let (y_lo, y_hi) = valid_range(ki, padding, in_h, out_h);
                for kj in 0..k {
                    let widx = ((o * in_c + c) * k + ki) * k + kj;
                    let weight = w[widx];
                    let (x_lo, x_hi) = valid_range(kj, padding, in_w, out_w);
                    let mut acc = 0.0;
                    for y in y_lo..y_hi {
                        let iy = y + ki - padding;
                        let g_row = &g_plane[y * out_w + x_lo..y * out_w + x_hi];
                        let start = iy * in_w + x_lo + kj - padding;
                        let in_row = &in_plane[start..start + g_row.len()];
                        for (&gv, &v) in g_row.iter().zip(in_row) {
                            acc += gv * v;
                        }
                        let gin_row = &mut gin_plane[start..start + g_row.len()];
                        for (gi, &gv) in gin_row.iter_mut().zip(g_row) {
                            *gi += weight * gv;
                        }
                    }
                    grad_w[widx] += acc;
                }
            }
        }
    }
    Ok((
        Tensor::new(input.shape().to_vec(), grad_in)?,
        Tensor::new(kernel.shape().to_vec(), grad_w)?,
        Tensor::new(vec![out_c], grad_b)?,
    ))
}

struct ConvGeometry {
    in_c: usize,
    in_h: usize,
    in_w: usize,
    out_c: usize,
    k: usize,
    out_h: usize,
    out_w: usize,
}

impl ConvGeometry {
    fn new(input: &Tensor, kernel: &Tensor, bias: &Tensor, padding: usize) -> Result<Self> {
        let (in_c, in_h, in_w) = input.dims3("conv input")?;
        let [out_c, k_c, kh, kw] = kernel.shape()[..] else {
            return Err(Error::ShapeMismatch(format!(
                "kernel must be rank 4 (out x in x k x k), got {:?}",
                kernel.shape()
            )));
        };
        if k_c != in_c {
            return Err(Error::ShapeMismatch(format!(
                "kernel expects {k_c} input channels, input has {in_c}"
            )));
        }
        if kh != kw {
            return Err(Error::ShapeMismatch(format!(
                "kernel must be square, got {kh}x{kw}"
            )));
        }
        if bias.shape() != [out_c] {
            return Err(Error::ShapeMismatch(format!(
                "bias {:?} does not match {out_c} output channels",
                bias.shape()
            )));
        }
        if in_h + 2 * padding < kh || in_w + 2 * padding < kw {
            return Err(Error::ShapeMismatch(format!(
                "{kh}x{kw} kernel larger than padded {in_h}x{in_w} input"
            )));
        }
        Ok(Self {
            in_c,
            in_h,
            in_w,
            out_c,
            k: kh,
            out_h: in_h + 2 * padding - kh + 1,
            out_w: in_w + 2 * padding - kw + 1,
        })
    }
}

/// Output positions `[lo, hi)` whose input tap `pos + offset - padding` is in bounds.
fn valid_range(offset: usize, padding: usize, in_len: usize, out_len: usize) -> (usize, usize) {
    let lo = padding.saturating_sub(offset);
    let hi = (in_len + padding).saturating_sub(offset).min(out_len);
    (lo, hi.max(lo))
}

pub fn relu(t: &Tensor) -> Tensor {
    t.map(|x| x.max(0.0))
}

/// Passes gradient where the ReLU output was positive.
pub fn relu_backward(output: &Tensor, grad: &Tensor) -> Tensor {
    let data = output
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&y, &g)| if y > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(output.shape().to_vec(), data).expect("same shape as output")
}

/// Result of a max-pooling pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub output: Tensor,
    /// Flat input index of each output's maximum.
    pub argmax: Vec<usize>,
}

/// Non-overlapping max pooling with a `window x window` window and matching
/// stride. Trailing rows and columns that do not fill a window are dropped.
pub fn maxpool2d(t: &Tensor, window: usize) -> Result<Pooled> {
    let (c, h, w) = t.dims3("pool input")?;
    if window == 0 || h < window || w < window {
        return Err(Error::InputTooSmall {
            height: h,
            width: w,
            window,
        });
    }
    let (oh, ow) = (h / window, w / window);
    let x = t.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let base = ch * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + oy * window * w + ox * window;
                for dy in 0..window {
                    for dx in 0..window {
                        let idx = base + (oy * window + dy) * w + ox * window + dx;
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                }
                out.push(x[best]);
                argmax.push(best);
            }
        }
    }
    Ok(Pooled {
        output: Tensor::new(vec![c, oh, ow], out)?,
        argmax,
    })
}

pub fn maxpool2d_backward(input_shape: &[usize], argmax: &[usize], grad: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(input_shape);
    let data = out.data_mut();
    for (&idx, &g) in argmax.iter().zip(grad.data()) {
        data[idx] += g;
    }
    out
}

/// Affine map `weight * input + bias` with `weight` shaped `out x in`.
pub fn dense_forward(input: &[f64], weight: &Tensor, bias: &Tensor) -> Result<Vec<f64>> {
    let (out_n, in_n) = dense_dims(weight, bias)?;
    if input.len() != in_n {
        return Err(Error::ShapeMismatch(format!(
            "dense layer expects {in_n} inputs, got {}",
            input.len()
        )));
    }
    let w = weight.data();
    Ok((0..out_n)
        .map(|o| {
            let row = &w[o * in_n..(o + 1) * in_n];
            bias.data()[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect())
}

/// Gradients of a dense layer: `(d input, d weight, d bias)`.
pub fn dense_backward(
    input: &[f64],
    weight: &Tensor,
    grad_output: &[f64],
) -> Result<(Vec<f64>, Tensor, Tensor)> {
    let [out_n, in_n] = weight.shape()[..] else {
        return Err(Error::ShapeMismatch(format!(
            "dense weight must be rank 2, got {:?}",
            weight.shape()
        )));
    };
    if input.len() != in_n || grad_output.len() != out_n {
        return Err(Error::ShapeMismatch("dense backward operand sizes".into()));
    }
    let w = weight.data();
    let mut grad_in = vec![0.0; in_n];
    let mut grad_w = vec![0.0; out_n * in_n];
    for (o, &g) in grad_output.iter().enumerate() {
        let row = &w[o * in_n..(o + 1) * in_n];
        let grow = &mut grad_w[o * in_n..(o + 1) * in_n];
        for i in 0..in_n {
            grow[i] = g * input[i];
            grad_in[i] += g * row[i];
        }
    }
    Ok((
        grad_in,
        Tensor::new(vec![out_n, in_n], grad_w)?,
        Tensor::new(vec![out_n], grad_output.to_vec())?,
    ))
}

fn dense_dims(weight: &Tensor, bias: &Tensor) -> Result<(usize, usize)> {
    match weight.shape()[..] {
        [out_n, in_n] if bias.shape() == [out_n] => Ok((out_n, in_n)),
        _ => Err(Error::ShapeMismatch(format!(
            "dense weight {:?} with bias {:?}",
            weight.shape(),
            bias.shape()
        ))),
    }
}

/// Numerically stable softmax over the last axis.
pub fn softmax(t: &Tensor) -> Tensor {
    let width = *t.shape().last().expect("tensor has at least one axis");
    let mut data = t.data().to_vec();
    for row in data.chunks_mut(width) {
        softmax_in_place(row);
    }
    Tensor::new(t.shape().to_vec(), data).expect("shape preserved")
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Inference,
}

/// Inverted dropout: in training each unit is kept with `keep_probability`
/// and scaled by its inverse, so inference needs no rescaling.
///
/// Returns the output and, in training mode, the per-unit multiplier.
pub fn dropout_forward<R: Rng + ?Sized>(
    input: &[f64],
    keep_probability: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    if !(keep_probability > 0.0 && keep_probability <= 1.0) {
        return Err(Error::OutOfRange {
            what: "keep probability",
            value: keep_probability,
            min: f64::MIN_POSITIVE,
            max: 1.0,
        });
    }
    match mode {
        Mode::Inference => Ok((input.to_vec(), None)),
        Mode::Train => {
            let scale = 1.0 / keep_probability;
            let mask: Vec<f64> = input
                .iter()
                .map(|_| {
                    if rng.random::<f64>() < keep_probability {
                        scale
                    } else {
                        0.0
                    }
                })
                .collect();
            let out = input.iter().zip(&mask).map(|(x, m)| x * m).collect();
            Ok((out, Some(mask)))
        }
    }
}

/// Categorical cross-entropy summed over classes and samples.
pub fn cross_entropy_loss(predicted: &Tensor, truth: &Tensor) -> Result<f64> {
    predicted.same_shape(truth, "cross-entropy operands")?;
    if predicted.shape().len() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "cross-entropy expects batch x classes, got {:?}",
            predicted.shape()
        )));
    }
    Ok(predicted
        .data()
        .iter()
        .zip(truth.data())
        .filter(|(_, &y)| y != 0.0)
        .map(|(&p, &y)| -y * p.max(LOG_CLAMP).ln())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t3(c: usize, h: usize, w: usize, data: Vec<f64>) -> Tensor {
        Tensor::new(vec![c, h, w], data).unwrap()
    }

    #[test]
    fn conv_zero_input_gives_zero() {
        let input = Tensor::zeros(&[1, 3, 3]);
        let kernel = Tensor::new(vec![1, 1, 2, 2], vec![0.3, -1.0, 2.0, 5.0]).unwrap();
        let out = conv2d_forward(&input, &kernel, &Tensor::zeros(&[1])).unwrap();
        assert_eq!(out.shape(), &[1, 2, 2]);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_identity_kernel() {
        let input = t3(1, 3, 3, (0..9).map(f64::from).collect());
        let kernel = Tensor::new(vec![1, 1, 1, 1], vec![1.0]).unwrap();
        let out = conv2d_forward(&input, &kernel, &Tensor::zeros(&[1])).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn conv_window_sums_on_ramp() {
        let input = t3(1, 4, 4, (0..16).map(f64::from).collect());
        let kernel = Tensor::new(vec![1, 1, 2, 2], vec![1.0; 4]).unwrap();
        let out = conv2d_forward(&input, &kernel, &Tensor::zeros(&[1])).unwrap();
        // Window at (r, c) covers 4r+c, 4r+c+1, 4r+c+4, 4r+c+5.
        let expected: Vec<f64> = (0..3)
            .flat_map(|r| (0..3).map(move |c| (4 * (4 * r + c) + 10) as f64))
            .collect();
        assert_eq!(out.shape(), &[1, 3, 3]);
        assert_eq!(out.data(), &expected[..]);
    }

    #[test]
    fn conv_padding_keeps_size() {
        let input = t3(1, 3, 3, vec![1.0; 9]);
        let kernel = Tensor::new(vec![1, 1, 3, 3], vec![1.0; 9]).unwrap();
        let out = conv2d_forward_padded(&input, &kernel, &Tensor::from_vec(vec![0.5]), 1).unwrap();
        assert_eq!(out.shape(), &[1, 3, 3]);
        // Corner sees a 2x2 patch, edge 2x3, centre 3x3.
        assert_eq!(out.data(), &[4.5, 6.5, 4.5, 6.5, 9.5, 6.5, 4.5, 6.5, 4.5]);
    }

    #[test]
    fn conv_shape_errors() {
        let input = Tensor::zeros(&[2, 4, 4]);
        let kernel = Tensor::zeros(&[1, 1, 3, 3]);
        assert!(matches!(
            conv2d_forward(&input, &kernel, &Tensor::zeros(&[1])),
            Err(Error::ShapeMismatch(_))
        ));
        let kernel = Tensor::zeros(&[1, 2, 3, 3]);
        assert!(conv2d_forward(&input, &kernel, &Tensor::zeros(&[2])).is_err());
    }

    #[test]
    fn conv_backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rand_t = |shape: &[usize], rng: &mut ChaCha8Rng| {
            let n = shape.iter().product();
            Tensor::new(
                shape.to_vec(),
                (0..n).map(|_| rng.random::<f64>() - 0.5).collect(),
            )
            .unwrap()
        };
        for padding in [0, 1] {
            let input = rand_t(&[2, 5, 4], &mut rng);
            let kernel = rand_t(&[3, 2, 3, 3], &mut rng);
            let bias = rand_t(&[3], &mut rng);
            let out = conv2d_forward_padded(&input, &kernel, &bias, padding).unwrap();
            let weights = rand_t(out.shape(), &mut rng);
            let objective = |i: &Tensor, k: &Tensor, b: &Tensor| -> f64 {
                let o = conv2d_forward_padded(i, k, b, padding).unwrap();
                o.data()
                    .iter()
                    .zip(weights.data())
                    .map(|(a, b)| a * b)
                    .sum()
            };
            let (gi, gk, gb) = conv2d_backward(&input, &kernel, &weights, padding).unwrap();
            let h = 1e-6;
            for idx in 0..input.len() {
                let (mut p, mut m) = (input.clone(), input.clone());
                p.data_mut()[idx] += h;
                m.data_mut()[idx] -= h;
                let fd =
                    (objective(&p, &kernel, &bias) - objective(&m, &kernel, &bias)) / (2.0 * h);
                assert_abs_diff_eq!(fd, gi.data()[idx], epsilon = 1e-7);
            }
            for idx in 0..kernel.len() {
                let (mut p, mut m) = (kernel.clone(), kernel.clone());
                p.data_mut()[idx] += h;
                m.data_mut()[idx] -= h;
                let fd = (objective(&input, &p, &bias) - objective(&input, &m, &bias)) / (2.0 * h);
                assert_abs_diff_eq!(fd, gk.data()[idx], epsilon = 1e-7);
            }
            for idx in 0..bias.len() {
                let expected: f64 = weights.data()[idx * out.len() / 3..(idx + 1) * out.len() / 3]
                    .iter()
                    .sum();
                assert_abs_diff_eq!(expected, gb.data()[idx], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn relu_examples() {
        let t = Tensor::from_vec(vec![-1.0, 0.0, 2.0]);
        assert_eq!(relu(&t).data(), &[0.0, 0.0, 2.0]);
        let neg = Tensor::from_vec(vec![-3.0, -0.5]);
        assert!(relu(&neg).data().iter().all(|&v| v == 0.0));
        assert_eq!(relu(&relu(&t)), relu(&t));
    }

    #[test]
    fn pool_examples() {
        let block = t3(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let pooled = maxpool2d(&block, 2).unwrap();
        assert_eq!(pooled.output.data(), &[4.0]);
        assert_eq!(pooled.argmax, vec![3]);

        let constant = t3(2, 4, 4, vec![0.7; 32]);
        let pooled = maxpool2d(&constant, 2).unwrap();
        assert!(pooled.output.data().iter().all(|&v| v == 0.7));

        let five = t3(1, 5, 5, (0..25).map(f64::from).collect());
        let pooled = maxpool2d(&five, 2).unwrap();
        assert_eq!(pooled.output.shape(), &[1, 2, 2]);
        assert_eq!(pooled.output.data(), &[6.0, 8.0, 16.0, 18.0]);

        assert!(matches!(
            maxpool2d(&t3(1, 1, 4, vec![0.0; 4]), 2),
            Err(Error::InputTooSmall { .. })
        ));
    }

    #[test]
    fn pool_backward_routes_to_argmax() {
        let t = t3(1, 2, 4, vec![1.0, 5.0, 0.0, 0.0, 2.0, 3.0, 9.0, 1.0]);
        let pooled = maxpool2d(&t, 2).unwrap();
        let g = maxpool2d_backward(t.shape(), &pooled.argmax, &t3(1, 1, 2, vec![10.0, 20.0]));
        assert_eq!(g.data(), &[0.0, 10.0, 0.0, 0.0, 0.0, 0.0, 20.0, 0.0]);
    }

    #[test]
    fn softmax_examples() {
        let s = softmax(&Tensor::from_vec(vec![0.0, 0.0]));
        assert_eq!(s.data(), &[0.5, 0.5]);
        let big = softmax(&Tensor::new(vec![2, 2], vec![1000.0, -1000.0, 3.0, 4.0]).unwrap());
        for row in big.data().chunks(2) {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            assert!(row.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn dense_identity_passthrough() {
        let mut eye = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            eye.data_mut()[i * 3 + i] = 1.0;
        }
        let out = dense_forward(&[1.5, -2.0, 0.25], &eye, &Tensor::zeros(&[3])).unwrap();
        assert_eq!(out, vec![1.5, -2.0, 0.25]);
        assert!(dense_forward(&[1.0], &eye, &Tensor::zeros(&[3])).is_err());
    }

    #[test]
    fn dense_softmax_cross_entropy_gradient_is_residual_outer_input() {
        let x = [0.3, -1.2, 0.8];
        let w = Tensor::new(vec![2, 3], vec![0.1, 0.2, -0.3, 0.5, -0.4, 0.2]).unwrap();
        let b = Tensor::from_vec(vec![0.05, -0.1]);
        let y = [0.0, 1.0];
        let probs = softmax(&Tensor::from_vec(dense_forward(&x, &w, &b).unwrap()));
        let residual: Vec<f64> = probs.data().iter().zip(y).map(|(p, t)| p - t).collect();
        let (_, gw, gb) = dense_backward(&x, &w, &residual).unwrap();
        for (o, r) in residual.iter().enumerate() {
            for (i, xi) in x.iter().enumerate() {
                assert_abs_diff_eq!(gw.data()[o * 3 + i], r * xi, epsilon = 1e-15);
            }
        }
        assert_eq!(gb.data(), &residual[..]);

        // Cross-check the closed form against central differences of the loss.
        let loss = |w: &Tensor| {
            let p = softmax(&Tensor::from_vec(dense_forward(&x, w, &b).unwrap()));
            let p = p.reshaped(&[1, 2]).unwrap();
            cross_entropy_loss(&p, &Tensor::new(vec![1, 2], y.to_vec()).unwrap()).unwrap()
        };
        let h = 1e-6;
        for idx in 0..6 {
            let (mut p, mut m) = (w.clone(), w.clone());
            p.data_mut()[idx] += h;
            m.data_mut()[idx] -= h;
            assert_abs_diff_eq!(
                (loss(&p) - loss(&m)) / (2.0 * h),
                gw.data()[idx],
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn dropout_inference_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = [1.0, -2.0, 3.0];
        let (out, mask) = dropout_forward(&x, 0.2, Mode::Inference, &mut rng).unwrap();
        assert_eq!(out, x);
        assert!(mask.is_none());
        let (_, mask) = dropout_forward(&x, 0.2, Mode::Train, &mut rng).unwrap();
        assert!(mask.unwrap().iter().all(|&m| m == 0.0 || m == 5.0));
        assert!(dropout_forward(&x, 0.0, Mode::Train, &mut rng).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        let truth = Tensor::new(vec![1, 2], vec![1.0, 0.0]).unwrap();
        let perfect = cross_entropy_loss(&truth, &truth).unwrap();
        assert!(perfect <= 1e-11);
        let uniform = Tensor::new(vec![1, 2], vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(
            cross_entropy_loss(&uniform, &truth).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        let pred = Tensor::new(vec![1, 2], vec![0.3, 0.7]).unwrap();
        let pred2 = Tensor::new(vec![2, 2], vec![0.3, 0.7, 0.3, 0.7]).unwrap();
        let truth2 = Tensor::new(vec![2, 2], vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(
            cross_entropy_loss(&pred2, &truth2).unwrap(),
            2.0 * cross_entropy_loss(&pred, &truth).unwrap()
        );
        // Saturated wrong prediction stays finite.
        let wrong = Tensor::new(vec![1, 2], vec![0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(
            cross_entropy_loss(&wrong, &truth).unwrap(),
            -(1e-12f64).ln()
        );
        assert!(cross_entropy_loss(&pred, &truth2).is_err());
    }
}

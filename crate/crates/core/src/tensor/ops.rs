//! Forward kernels and their analytic gradients.

use rand::Rng;

use super::{axpy, dot, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::rng::Prng;

/// Border handling along the depth axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Output keeps the input length. Convolutions zero-pad, pooling
    /// replicates the edge sample.
    Same,
    /// No padding; windows that would run past the end are dropped
    /// (convolution) or truncated (pooling, ceil mode).
    Valid,
}

/// State saved by a forward call for the matching backward call.
#[derive(Debug, Clone)]
pub enum LayerCache<T> {
    Conv1d {
        input: Tensor<T>,
        padding: Padding,
    },
    MaxPool {
        input_shape: Vec<usize>,
        /// Per output element, the index of the winning sample within its channel.
        argmax: Vec<usize>,
    },
    Dense {
        input: Tensor<T>,
    },
    Relu {
        pre: Tensor<T>,
    },
    Dropout {
        /// `None` in inference mode. Otherwise 0 or 1/(1-rate) per element.
        mask: Option<Vec<T>>,
        shape: Vec<usize>,
    },
    SoftmaxCrossEntropy {
        probs: Tensor<T>,
        label: usize,
        weight: T,
    },
}

/// Gradients returned by [`layer_backward`]. Parametrized layers return
/// `[d_weights, d_bias]`.
#[derive(Debug, Clone)]
pub struct Backward<T> {
    pub input_grad: Tensor<T>,
    pub param_grads: Vec<Tensor<T>>,
}

fn conv_offset(padding: Padding, k: usize) -> usize {
    match padding {
        Padding::Same => (k - 1) / 2,
        Padding::Valid => 0,
    }
}

fn conv_out_len(padding: Padding, l: usize, k: usize) -> usize {
    match padding {
        Padding::Same => l,
        Padding::Valid => l + 1 - k,
    }
}

const BLOCK: usize = 8;

/// Copies `[channels, len]` rows into zeroed rows of length `stride`, shifted
/// right by `left`.
fn pad_rows<T: Scalar>(x: &[T], channels: usize, len: usize, left: usize, stride: usize) -> Vec<T> {
    let mut out = vec![T::zero(); channels * stride];
    for c in 0..channels {
        out[c * stride + left..c * stride + left + len].copy_from_slice(&x[c * len..(c + 1) * len]);
    }
    out
}

/// `out[o][t] = bias[o] + Σ_c Σ_k xp[c][t+k] · w[o][c][k]` for `t < n_out`.
/// Rows of `xp` have length `stride >= n_out.next_multiple_of(BLOCK) + k - 1`.
#[allow(clippy::too_many_arguments)]
fn correlate<T: Scalar>(
    xp: &[T],
    stride: usize,
    c_in: usize,
    w: &[T],
    c_out: usize,
    k: usize,
    bias: Option<&[T]>,
    n_out: usize,
) -> Vec<T> {
    let mut out = vec![T::zero(); c_out * n_out];
    for o in 0..c_out {
        let b = bias.map_or(T::zero(), |b| b[o]);
        let wo = &w[o * c_in * k..(o + 1) * c_in * k];
        for t0 in (0..n_out).step_by(BLOCK) {
            let mut acc = [b; BLOCK];
            for (c, wc) in wo.chunks_exact(k).enumerate() {
                let xr = &xp[c * stride + t0..c * stride + t0 + k - 1 + BLOCK];
                for (kk, &wv) in wc.iter().enumerate() {
                    let xs = &xr[kk..kk + BLOCK];
                    for j in 0..BLOCK {
                        acc[j] += wv * xs[j];
                    }
                }
            }
            let n = BLOCK.min(n_out - t0);
            out[o * n_out + t0..o * n_out + t0 + n].copy_from_slice(&acc[..n]);
        }
    }
    out
}

/// 1D convolution along depth: `out[o][t] = Σ_c Σ_k in[c][t+k-off] · w[o][c][k] + b[o]`.
pub fn conv1d<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
    padding: Padding,
) -> Result<Tensor<T>> {
    if input.rank() != 2 || kernels.rank() != 3 {
        return Err(Error::Dimension(format!(
            "conv1d expects [C, L] input and [O, C, K] kernels, got {:?} and {:?}",
            input.shape(),
            kernels.shape()
        )));
    }
    let (c_in, l) = (input.shape()[0], input.shape()[1]);
    let (c_out, kc, k) = (kernels.shape()[0], kernels.shape()[1], kernels.shape()[2]);
    if kc != c_in {
        return Err(Error::Dimension(format!(
            "conv1d input has {c_in} channels but kernels expect {kc}"
        )));
    }
    if bias.len() != c_out {
        return Err(Error::Dimension(format!(
            "conv1d bias has {} entries for {c_out} output channels",
            bias.len()
        )));
    }
    if k.is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "conv1d kernel size {k} is not odd"
        )));
    }
    if padding == Padding::Valid && k > l {
        return Err(Error::Dimension(format!(
            "valid conv1d kernel {k} longer than input {l}"
        )));
    }
    let off = conv_offset(padding, k);
    let l_out = conv_out_len(padding, l, k);
    let stride = l_out.next_multiple_of(BLOCK) + k - 1;
    let xp = pad_rows(input.data(), c_in, l, off, stride);
    let out = correlate(
        &xp,
        stride,
        c_in,
        kernels.data(),
        c_out,
        k,
        Some(bias.data()),
        l_out,
    );
    Tensor::new(vec![c_out, l_out], out)
}

fn conv1d_backward<T: Scalar>(
    input: &Tensor<T>,
    padding: Padding,
    kernels: &Tensor<T>,
    upstream: &Tensor<T>,
) -> Result<Backward<T>> {
    let (c_in, l) = (input.shape()[0], input.shape()[1]);
    let (c_out, k) = (kernels.shape()[0], kernels.shape()[2]);
    let l_out = conv_out_len(padding, l, k);
    if upstream.shape() != [c_out, l_out] {
        return Err(Error::Dimension(format!(
            "conv1d upstream grad {:?} does not match forward output [{c_out}, {l_out}]",
            upstream.shape()
        )));
    }
    let off = conv_offset(padding, k);
    let w = kernels.data();
    let g = upstream.data();
    let stride = l_out.next_multiple_of(BLOCK) + k - 1;
    let xp = pad_rows(input.data(), c_in, l, off, stride);
    // Zero-padding the upstream rows to whole blocks keeps every dot tail-free.
    let l8 = l_out.next_multiple_of(BLOCK);
    let gb = pad_rows(g, c_out, l_out, 0, l8);
    let mut dw = vec![T::zero(); c_out * c_in * k];
    let mut db = vec![T::zero(); c_out];
    for o in 0..c_out {
        let go = &gb[o * l8..(o + 1) * l8];
        db[o] = go.iter().copied().sum();
        for c in 0..c_in {
            for kk in 0..k {
                let start = c * stride + kk;
                dw[(o * c_in + c) * k + kk] = dot(go, &xp[start..start + l8]);
            }
        }
    }
    // Input gradient: correlate the upstream gradient with flipped, transposed kernels.
    let mut flipped = vec![T::zero(); c_in * c_out * k];
    for o in 0..c_out {
        for c in 0..c_in {
            for kk in 0..k {
                flipped[(c * c_out + o) * k + (k - 1 - kk)] = w[(o * c_in + c) * k + kk];
            }
        }
    }
    let g_stride = l.next_multiple_of(BLOCK) + k - 1;
    let gp = pad_rows(g, c_out, l_out, k - 1 - off, g_stride);
    let dx = correlate(&gp, g_stride, c_out, &flipped, c_in, k, None, l);
    Ok(Backward {
        input_grad: Tensor::new(vec![c_in, l], dx)?,
        param_grads: vec![
            Tensor::new(kernels.shape().to_vec(), dw)?,
            Tensor::new(vec![c_out], db)?,
        ],
    })
}

/// Max pooling along depth.
///
/// `Valid` uses ceil mode: `ceil((L - kernel) / stride) + 1` outputs, the last
/// window truncated at the end of the input. `Same` requires stride 1 and an
/// odd kernel and replicates the edge samples, so the output keeps length `L`.
pub fn pool1d<T: Scalar>(
    input: &Tensor<T>,
    kernel: usize,
    stride: usize,
    padding: Padding,
) -> Result<(Tensor<T>, LayerCache<T>)> {
    if input.rank() != 2 {
        return Err(Error::Dimension(format!(
            "pool1d expects [C, L], got {:?}",
            input.shape()
        )));
    }
    if kernel == 0 || stride == 0 {
        return Err(Error::Config("pool kernel and stride must be >= 1".into()));
    }
    let (c, l) = (input.shape()[0], input.shape()[1]);
    // (start, end) of each window, already clamped to the input.
    let windows: Vec<(usize, usize)> = match padding {
        Padding::Valid => {
            if l < kernel {
                return Err(Error::Dimension(format!(
                    "pool1d kernel {kernel} longer than input {l}"
                )));
            }
            let n = (l - kernel).div_ceil(stride) + 1;
            (0..n)
                .map(|j| (j * stride, (j * stride + kernel).min(l)))
                .collect()
        }
        Padding::Same => {
            if stride != 1 || kernel.is_multiple_of(2) {
                return Err(Error::Config(format!(
                    "same-padded pooling needs stride 1 and an odd kernel (got kernel {kernel}, stride {stride})"
                )));
            }
            let half = (kernel - 1) / 2;
            (0..l)
                .map(|t| (t.saturating_sub(half), (t + half + 1).min(l)))
                .collect()
        }
    };
    let n = windows.len();
    let mut out = Vec::with_capacity(c * n);
    let mut argmax = Vec::with_capacity(c * n);
    for ch in 0..c {
        let x = input.row(ch);
        for &(s, e) in &windows {
            let mut best = s;
            for i in s + 1..e {
                if x[i] > x[best] {
                    best = i;
                }
            }
            out.push(x[best]);
            argmax.push(best);
        }
    }
    Ok((
        Tensor::new(vec![c, n], out)?,
        LayerCache::MaxPool {
            input_shape: input.shape().to_vec(),
            argmax,
        },
    ))
}

/// Fully connected layer: `weights · input + bias` over the flattened input.
pub fn dense<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    if weights.rank() != 2 {
        return Err(Error::Dimension(format!(
            "dense weights must be [M, N], got {:?}",
            weights.shape()
        )));
    }
    let (m, n) = (weights.shape()[0], weights.shape()[1]);
    if input.len() != n {
        return Err(Error::Dimension(format!(
            "dense layer expects {n} inputs, got {}",
            input.len()
        )));
    }
    if bias.len() != m {
        return Err(Error::Dimension(format!(
            "dense bias has {} entries for {m} outputs",
            bias.len()
        )));
    }
    let x = input.data();
    let out = (0..m)
        .map(|i| dot(weights.row(i), x) + bias.data()[i])
        .collect();
    Ok(Tensor::from_vec(out))
}

fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    upstream: &Tensor<T>,
) -> Result<Backward<T>> {
    let (m, n) = (weights.shape()[0], weights.shape()[1]);
    if upstream.len() != m {
        return Err(Error::Dimension(format!(
            "dense upstream grad has {} entries, expected {m}",
            upstream.len()
        )));
    }
    let x = input.data();
    let g = upstream.data();
    let mut dw = vec![T::zero(); m * n];
    let mut dx = vec![T::zero(); n];
    for i in 0..m {
        let row = &mut dw[i * n..(i + 1) * n];
        axpy(g[i], x, row);
        axpy(g[i], weights.row(i), &mut dx);
    }
    Ok(Backward {
        input_grad: Tensor::new(input.shape().to_vec(), dx)?,
        param_grads: vec![Tensor::new(vec![m, n], dw)?, Tensor::from_vec(g.to_vec())],
    })
}

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|x| x.max(T::zero()))
}

/// Numerically stable softmax of a logit vector.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    logits.check_finite("softmax logits")?;
    let max = logits
        .data()
        .iter()
        .fold(T::neg_infinity(), |m, &x| m.max(x));
    let exps: Vec<T> = logits.data().iter().map(|&x| (x - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(Tensor::from_vec(
        exps.into_iter().map(|e| e / total).collect(),
    ))
}

/// Softmax followed by the (weighted) negative log-likelihood of `label`
/// (0-based). Returns the loss and the cache for the fused backward pass.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    label: usize,
    weight: T,
) -> Result<(T, LayerCache<T>)> {
    if label >= logits.len() {
        return Err(Error::Dimension(format!(
            "label index {label} out of range for {} classes",
            logits.len()
        )));
    }
    let max = logits
        .data()
        .iter()
        .fold(T::neg_infinity(), |m, &x| m.max(x));
    let probs = softmax(logits)?;
    // log p_y computed from the shifted logits avoids log(0) for confident nets.
    let log_total = logits
        .data()
        .iter()
        .map(|&x| (x - max).exp())
        .sum::<T>()
        .ln();
    let loss = -weight * (logits.data()[label] - max - log_total);
    Ok((
        loss,
        LayerCache::SoftmaxCrossEntropy {
            probs,
            label,
            weight,
        },
    ))
}

/// Concatenates `[C_i, L]` tensors along the channel axis, in order.
pub fn concat_channels<T: Scalar>(inputs: &[&Tensor<T>]) -> Result<Tensor<T>> {
    let first = inputs
        .first()
        .ok_or_else(|| Error::Dimension("concat of zero tensors".into()))?;
    let l = first.length();
    let mut channels = 0;
    let mut data = Vec::new();
    for t in inputs {
        if t.rank() != 2 || t.length() != l {
            return Err(Error::Dimension(format!(
                "concat length mismatch: {:?} vs length {l}",
                t.shape()
            )));
        }
        channels += t.channels();
        data.extend_from_slice(t.data());
    }
    Tensor::new(vec![channels, l], data)
}

/// Inverse of [`concat_channels`]: splits a `[ΣC_i, L]` tensor into blocks.
pub fn split_channels<T: Scalar>(input: &Tensor<T>, sizes: &[usize]) -> Result<Vec<Tensor<T>>> {
    if input.rank() != 2 || sizes.iter().sum::<usize>() != input.channels() {
        return Err(Error::Dimension(format!(
            "cannot split {:?} into channel blocks {sizes:?}",
            input.shape()
        )));
    }
    let l = input.length();
    let mut start = 0;
    sizes
        .iter()
        .map(|&c| {
            let block = input.data()[start * l..(start + c) * l].to_vec();
            start += c;
            Tensor::new(vec![c, l], block)
        })
        .collect()
}

/// Inverted dropout: in training mode each element is zeroed with
/// probability `rate` and survivors are scaled by `1 / (1 - rate)`.
pub fn dropout<T: Scalar>(
    input: &Tensor<T>,
    rate: f64,
    rng: &mut Prng,
    training: bool,
) -> Result<(Tensor<T>, LayerCache<T>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} not in [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok((
            input.clone(),
            LayerCache::Dropout {
                mask: None,
                shape: input.shape().to_vec(),
            },
        ));
    }
    let keep = T::from_f64(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..input.len())
        .map(|_| {
            if rng.random::<f64>() < rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect();
    let out = input
        .data()
        .iter()
        .zip(&mask)
        .map(|(&x, &m)| x * m)
        .collect();
    Ok((
        Tensor::new(input.shape().to_vec(), out)?,
        LayerCache::Dropout {
            mask: Some(mask),
            shape: input.shape().to_vec(),
        },
    ))
}

fn expect_shape<T: Scalar>(upstream: &Tensor<T>, shape: &[usize], layer: &str) -> Result<()> {
    if upstream.shape() != shape {
        return Err(Error::Dimension(format!(
            "{layer} upstream grad {:?} does not match cached shape {shape:?}",
            upstream.shape()
        )));
    }
    Ok(())
}

/// Backward pass of one layer. `weights` is the kernel/weight tensor for
/// convolution and dense layers and ignored otherwise. For the fused softmax
/// cross-entropy, `upstream` is the scalar loss gradient (a length-1 tensor).
pub fn layer_backward<T: Scalar>(
    cache: &LayerCache<T>,
    weights: Option<&Tensor<T>>,
    upstream: &Tensor<T>,
) -> Result<Backward<T>> {
    let need_weights = || Error::Dimension("layer backward needs its weight tensor".into());
    match cache {
        LayerCache::Conv1d { input, padding } => {
            conv1d_backward(input, *padding, weights.ok_or_else(need_weights)?, upstream)
        }
        LayerCache::Dense { input } => {
            dense_backward(input, weights.ok_or_else(need_weights)?, upstream)
        }
        LayerCache::MaxPool {
            input_shape,
            argmax,
        } => {
            if upstream.len() != argmax.len() || upstream.channels() != input_shape[0] {
                return Err(Error::Dimension(format!(
                    "pool upstream grad {:?} does not match cache",
                    upstream.shape()
                )));
            }
            let (c, l) = (input_shape[0], input_shape[1]);
            let n = argmax.len() / c;
            let mut dx = vec![T::zero(); c * l];
            for ch in 0..c {
                for j in 0..n {
                    dx[ch * l + argmax[ch * n + j]] += upstream.data()[ch * n + j];
                }
            }
            Ok(Backward {
                input_grad: Tensor::new(input_shape.clone(), dx)?,
                param_grads: vec![],
            })
        }
        LayerCache::Relu { pre } => {
            expect_shape(upstream, pre.shape(), "relu")?;
            let dx = pre
                .data()
                .iter()
                .zip(upstream.data())
                .map(|(&p, &g)| if p > T::zero() { g } else { T::zero() })
                .collect();
            Ok(Backward {
                input_grad: Tensor::new(pre.shape().to_vec(), dx)?,
                param_grads: vec![],
            })
        }
        LayerCache::Dropout { mask, shape } => {
            expect_shape(upstream, shape, "dropout")?;
            let input_grad = match mask {
                None => upstream.clone(),
                Some(m) => Tensor::new(
                    shape.clone(),
                    upstream
                        .data()
                        .iter()
                        .zip(m)
                        .map(|(&g, &k)| g * k)
                        .collect(),
                )?,
            };
            Ok(Backward {
                input_grad,
                param_grads: vec![],
            })
        }
        LayerCache::SoftmaxCrossEntropy {
            probs,
            label,
            weight,
        } => {
            if upstream.len() != 1 {
                return Err(Error::Dimension(
                    "softmax cross-entropy expects a scalar upstream grad".into(),
                ));
            }
            let scale = *weight * upstream.data()[0];
            let mut g = probs.clone();
            g.data_mut()[*label] -= T::one();
            g.scale(scale);
            Ok(Backward {
                input_grad: g,
                param_grads: vec![],
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn t1(v: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(v.to_vec())
    }

    fn t2(rows: &[&[f64]]) -> Tensor<f64> {
        Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn kernels(o: usize, c: usize, k: usize, v: Vec<f64>) -> Tensor<f64> {
        Tensor::new(vec![o, c, k], v).unwrap()
    }

    /// Brute-force convolution with explicit zero padding.
    fn conv_oracle(x: &[Vec<f64>], w: &[Vec<Vec<f64>>], b: &[f64], same: bool) -> Vec<Vec<f64>> {
        let l = x[0].len() as isize;
        let k = w[0][0].len() as isize;
        let off = if same { (k - 1) / 2 } else { 0 };
        let l_out = if same { l } else { l - k + 1 };
        let mut out = vec![vec![0.0; l_out as usize]; w.len()];
        for (o, wo) in w.iter().enumerate() {
            for t in 0..l_out {
                let mut s = b[o];
                for (c, wc) in wo.iter().enumerate() {
                    for kk in 0..k {
                        let i = t + kk - off;
                        if i >= 0 && i < l {
                            s += x[c][i as usize] * wc[kk as usize];
                        }
                    }
                }
                out[o][t as usize] = s;
            }
        }
        out
    }

    #[test]
    fn conv_identity_kernel() {
        let x = t2(&[&[0.5, -1.0, 3.0, 2.0]]);
        let y = conv1d(&x, &kernels(1, 1, 1, vec![1.0]), &t1(&[0.0]), Padding::Same).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn conv_zero_kernel_gives_bias() {
        let x = t2(&[&[0.5, -1.0, 3.0], &[1.0, 1.0, 1.0]]);
        let y = conv1d(
            &x,
            &kernels(2, 2, 3, vec![0.0; 12]),
            &t1(&[1.5, -2.0]),
            Padding::Same,
        )
        .unwrap();
        assert_eq!(y.data(), &[1.5, 1.5, 1.5, -2.0, -2.0, -2.0]);
    }

    #[test]
    fn conv_hand_example() {
        let x = t2(&[&[1.0, 2.0, 4.0]]);
        let w = kernels(1, 1, 3, vec![1.0, 0.0, -1.0]);
        let y = conv1d(&x, &w, &t1(&[0.0]), Padding::Same).unwrap();
        let oracle = conv_oracle(
            &[vec![1.0, 2.0, 4.0]],
            &[vec![vec![1.0, 0.0, -1.0]]],
            &[0.0],
            true,
        );
        assert_eq!(oracle[0], vec![-2.0, -3.0, 2.0]);
        assert_eq!(y.data(), &[-2.0, -3.0, 2.0]);
    }

    #[test]
    fn conv_matches_triple_loop_oracle() {
        let mut rng = Stream::root(11).rng();
        use rand::Rng;
        for &(c_in, c_out, k, l, same) in
            &[(3, 2, 5, 9, true), (2, 4, 3, 7, false), (1, 1, 7, 4, true)]
        {
            let x: Vec<Vec<f64>> = (0..c_in)
                .map(|_| (0..l).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let w: Vec<Vec<Vec<f64>>> = (0..c_out)
                .map(|_| {
                    (0..c_in)
                        .map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
                        .collect()
                })
                .collect();
            let b: Vec<f64> = (0..c_out).map(|_| rng.random_range(-1.0..1.0)).collect();
            let pad = if same { Padding::Same } else { Padding::Valid };
            let xt = Tensor::from_rows(&x).unwrap();
            let wt = Tensor::new(
                vec![c_out, c_in, k],
                w.iter().flatten().flatten().copied().collect(),
            )
            .unwrap();
            let y = conv1d(&xt, &wt, &Tensor::from_vec(b.clone()), pad).unwrap();
            let expect = conv_oracle(&x, &w, &b, same);
            for (o, row) in expect.iter().enumerate() {
                for (t, v) in row.iter().enumerate() {
                    assert!((y.row(o)[t] - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn conv_rejects_channel_mismatch() {
        let x = t2(&[&[1.0, 2.0, 3.0]]);
        let err = conv1d(
            &x,
            &kernels(1, 2, 1, vec![1.0, 1.0]),
            &t1(&[0.0]),
            Padding::Same,
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn conv_lengths() {
        for k in [1usize, 3, 5, 7] {
            for l in 8..=64 {
                let x = Tensor::<f64>::filled(&[2, l], 1.0);
                let w = Tensor::filled(&[3, 2, k], 0.1);
                let b = Tensor::zeros(&[3]);
                assert_eq!(conv1d(&x, &w, &b, Padding::Same).unwrap().shape(), &[3, l]);
                assert_eq!(
                    conv1d(&x, &w, &b, Padding::Valid).unwrap().shape(),
                    &[3, l + 1 - k]
                );
            }
        }
    }

    #[test]
    fn pool_examples() {
        let x = t2(&[&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]]);
        let (y, _) = pool1d(&x, 2, 2, Padding::Valid).unwrap();
        assert_eq!(y.data(), &[3.0, 4.0, 9.0]);

        let x = t2(&[&[2.5; 5]]);
        let (y, _) = pool1d(&x, 2, 2, Padding::Valid).unwrap();
        assert_eq!(y.data(), &[2.5; 3]);

        let x = t2(&[&[1.0, 2.0, 3.0, 4.0]]);
        let (y, _) = pool1d(&x, 3, 1, Padding::Same).unwrap();
        assert_eq!(y.data(), &[2.0, 3.0, 4.0, 4.0]);
    }

    #[test]
    fn pool_ceil_mode_and_errors() {
        // odd length keeps a truncated final window
        let x = t2(&[&[1.0, 5.0, 2.0, 0.0, 7.0]]);
        let (y, _) = pool1d(&x, 2, 2, Padding::Valid).unwrap();
        assert_eq!(y.data(), &[5.0, 2.0, 7.0]);
        for l in (2..=64).step_by(2) {
            let x = Tensor::<f64>::filled(&[1, l], 0.0);
            assert_eq!(pool1d(&x, 2, 2, Padding::Valid).unwrap().0.length(), l / 2);
        }
        let short = t2(&[&[1.0]]);
        assert!(matches!(
            pool1d(&short, 2, 2, Padding::Valid),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn dense_examples() {
        let w = t2(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(
            dense(&t1(&[1.0, 1.0]), &w, &t1(&[0.0, 0.0]))
                .unwrap()
                .data(),
            &[3.0, 7.0]
        );
        let eye = t2(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(
            dense(&t1(&[-3.0, 0.5]), &eye, &t1(&[0.0, 0.0]))
                .unwrap()
                .data(),
            &[-3.0, 0.5]
        );
        let zero = t2(&[&[0.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(
            dense(&t1(&[-3.0, 0.5]), &zero, &t1(&[2.0, 2.0]))
                .unwrap()
                .data(),
            &[2.0, 2.0]
        );
        assert!(dense(&t1(&[1.0]), &w, &t1(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn relu_examples() {
        assert_eq!(relu(&t1(&[-1.0, 0.0, 2.0])).data(), &[0.0, 0.0, 2.0]);
        assert_eq!(relu(&t1(&[-1.0, -2.0])).data(), &[0.0, 0.0]);
        assert_eq!(relu(&t1(&[1.0, 2.0])).data(), &[1.0, 2.0]);
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&t1(&[0.0, 0.0, 0.0])).unwrap();
        p.data()
            .iter()
            .for_each(|&v| assert!((v - 1.0 / 3.0).abs() < 1e-15));
        let p = softmax(&t1(&[1f64.ln(), 2f64.ln(), 7f64.ln()])).unwrap();
        for (v, e) in p.data().iter().zip([0.1, 0.2, 0.7]) {
            assert!((v - e).abs() < 1e-12);
        }
        let a = softmax(&t1(&[0.3, -1.2, 4.0])).unwrap();
        let b = softmax(&t1(&[100.3, 98.8, 104.0])).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-6);
        }
        assert!(matches!(
            softmax(&t1(&[0.0, f64::NAN])),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn concat_and_split() {
        let a = t2(&[&[1.0, 2.0]]);
        let b = t2(&[&[3.0, 4.0]]);
        let c = concat_channels(&[&a, &b]).unwrap();
        assert_eq!(c, t2(&[&[1.0, 2.0], &[3.0, 4.0]]));
        assert_eq!(concat_channels(&[&a]).unwrap(), a);
        assert_eq!(split_channels(&c, &[1, 1]).unwrap(), vec![a.clone(), b]);
        let short = t2(&[&[1.0]]);
        assert!(concat_channels(&[&a, &short]).is_err());
    }

    #[test]
    fn dropout_modes() {
        let x = Tensor::<f64>::filled(&[4, 8], 1.5);
        let mut rng = Stream::root(0).rng();
        assert_eq!(dropout(&x, 0.0, &mut rng, true).unwrap().0, x);
        assert_eq!(dropout(&x, 0.7, &mut rng, false).unwrap().0, x);
        assert!(matches!(
            dropout(&x, 1.0, &mut rng, true),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn dropout_preserves_expectation() {
        // Monte-Carlo oracle: mean over 10^4 draws of each element ~ the input.
        let x = Tensor::<f64>::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let mut rng = Stream::root(5).rng();
        let mut sum = [0.0; 4];
        let draws = 10_000;
        for _ in 0..draws {
            let (y, _) = dropout(&x, 0.5, &mut rng, true).unwrap();
            for (s, v) in sum.iter_mut().zip(y.data()) {
                *s += v;
            }
        }
        for (s, v) in sum.iter().zip(x.data()) {
            let mean = s / draws as f64;
            assert!((mean - v).abs() <= 0.02 * v.abs(), "mean {mean} vs {v}");
        }
    }

    #[test]
    fn relu_backward_example() {
        let cache = LayerCache::Relu {
            pre: t1(&[-1.0, 2.0]),
        };
        let b = layer_backward(&cache, None, &t1(&[5.0, 5.0])).unwrap();
        assert_eq!(b.input_grad.data(), &[0.0, 5.0]);
    }

    #[test]
    fn fused_softmax_ce_grad_at_uniform() {
        let (loss, cache) = softmax_cross_entropy(&Tensor::<f64>::zeros(&[9]), 0, 1.0).unwrap();
        assert!((loss - 9f64.ln()).abs() < 1e-12);
        let g = layer_backward(&cache, None, &t1(&[1.0]))
            .unwrap()
            .input_grad;
        assert!((g.data()[0] + 8.0 / 9.0).abs() < 1e-12);
        g.data()[1..]
            .iter()
            .for_each(|&v| assert!((v - 1.0 / 9.0).abs() < 1e-12));
    }

    #[test]
    fn backward_rejects_wrong_upstream_shape() {
        let cache = LayerCache::Relu {
            pre: t1(&[-1.0, 2.0]),
        };
        assert!(layer_backward(&cache, None, &t1(&[5.0])).is_err());
        let x = t2(&[&[1.0, 2.0, 3.0]]);
        let cache = LayerCache::Conv1d {
            input: x,
            padding: Padding::Same,
        };
        let w = kernels(1, 1, 3, vec![1.0; 3]);
        assert!(layer_backward(&cache, Some(&w), &t2(&[&[1.0, 1.0]])).is_err());
        assert!(layer_backward(&cache, None, &t2(&[&[1.0, 1.0, 1.0]])).is_err());
    }
}

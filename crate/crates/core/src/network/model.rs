//! Forward and backward passes of the inception network.

use rayon::prelude::*;

use super::params::ModelParams;
use super::spec::{InceptionSpec, ModelSpec, STAGE_POOL};
use crate::error::{Error, Result};
use crate::rng::{Prng, Stream};
use crate::tensor::{
    concat_channels, conv1d, dense, dropout, layer_backward, pool1d, relu, split_channels,
    LayerCache, Padding, Scalar, Tensor,
};

/// Parameter tensors consumed by one inception stage.
pub const STAGE_PARAMS: usize = 12;

/// Examples per gradient partial sum. Fixed so that the summation order, and
/// therefore every bit of the result, is independent of the thread count.
pub const REDUCE_CHUNK: usize = 8;

#[derive(Debug, Clone)]
pub struct ConvReluCache<T> {
    conv: LayerCache<T>,
    relu: LayerCache<T>,
}

fn conv_relu<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
) -> Result<(Tensor<T>, ConvReluCache<T>)> {
    let pre = conv1d(x, w, b, Padding::Same)?;
    let out = relu(&pre);
    Ok((
        out,
        ConvReluCache {
            conv: LayerCache::Conv1d {
                input: x.clone(),
                padding: Padding::Same,
            },
            relu: LayerCache::Relu { pre },
        },
    ))
}

/// Returns `(d_input, d_weights, d_bias)`.
fn conv_relu_backward<T: Scalar>(
    cache: &ConvReluCache<T>,
    w: &Tensor<T>,
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let g = layer_backward(&cache.relu, None, upstream)?.input_grad;
    let mut b = layer_backward(&cache.conv, Some(w), &g)?;
    let db = b.param_grads.pop().unwrap();
    let dw = b.param_grads.pop().unwrap();
    Ok((b.input_grad, dw, db))
}

#[derive(Debug, Clone)]
pub struct InceptionCache<T> {
    b1: ConvReluCache<T>,
    b2_reduce: ConvReluCache<T>,
    b2: ConvReluCache<T>,
    b3_reduce: ConvReluCache<T>,
    b3: ConvReluCache<T>,
    pool: LayerCache<T>,
    b4: ConvReluCache<T>,
}

/// Runs the four branches on `input` (`[C, L]`) and concatenates them into
/// `[a + b + c + d, L]`. `params` holds the stage's twelve tensors in
/// storage order (b1, b2_reduce, b2, b3_reduce, b3, b4; weight then bias).
pub fn inception_forward<T: Scalar>(
    spec: &InceptionSpec,
    params: &[Tensor<T>],
    input: &Tensor<T>,
) -> Result<(Tensor<T>, InceptionCache<T>)> {
    if params.len() != STAGE_PARAMS {
        return Err(Error::Dimension(format!(
            "inception stage needs {STAGE_PARAMS} parameter tensors, got {}",
            params.len()
        )));
    }
    let expect_in = params[0].shape()[1];
    if input.rank() != 2 || input.channels() != expect_in {
        return Err(Error::Dimension(format!(
            "inception stage expects {expect_in} input channels, got {:?}",
            input.shape()
        )));
    }
    if params[0].shape()[0] != spec.branch_1x1 || params[8].shape()[0] != spec.large_channels {
        return Err(Error::Dimension(
            "inception parameters do not match the stage spec".into(),
        ));
    }
    let (y1, b1) = conv_relu(input, &params[0], &params[1])?;
    let (r2, b2_reduce) = conv_relu(input, &params[2], &params[3])?;
    let (y2, b2) = conv_relu(&r2, &params[4], &params[5])?;
    let (r3, b3_reduce) = conv_relu(input, &params[6], &params[7])?;
    let (y3, b3) = conv_relu(&r3, &params[8], &params[9])?;
    let (pooled, pool) = pool1d(input, 3, 1, Padding::Same)?;
    let (y4, b4) = conv_relu(&pooled, &params[10], &params[11])?;
    let out = concat_channels(&[&y1, &y2, &y3, &y4])?;
    Ok((
        out,
        InceptionCache {
            b1,
            b2_reduce,
            b2,
            b3_reduce,
            b3,
            pool,
            b4,
        },
    ))
}

/// Returns the input gradient and the twelve parameter gradients.
pub fn inception_backward<T: Scalar>(
    spec: &InceptionSpec,
    params: &[Tensor<T>],
    cache: &InceptionCache<T>,
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, Vec<Tensor<T>>)> {
    let g = split_channels(upstream, &spec.branch_channels())?;
    let mut grads = Vec::with_capacity(STAGE_PARAMS);

    let (mut dx, w, b) = conv_relu_backward(&cache.b1, &params[0], &g[0])?;
    grads.extend([w, b]);

    let (dr2, w2, b2) = conv_relu_backward(&cache.b2, &params[4], &g[1])?;
    let (dx2, w2r, b2r) = conv_relu_backward(&cache.b2_reduce, &params[2], &dr2)?;
    grads.extend([w2r, b2r, w2, b2]);
    dx.add_assign(&dx2)?;

    let (dr3, w3, b3) = conv_relu_backward(&cache.b3, &params[8], &g[2])?;
    let (dx3, w3r, b3r) = conv_relu_backward(&cache.b3_reduce, &params[6], &dr3)?;
    grads.extend([w3r, b3r, w3, b3]);
    dx.add_assign(&dx3)?;

    let (dpool, w4, b4) = conv_relu_backward(&cache.b4, &params[10], &g[3])?;
    grads.extend([w4, b4]);
    dx.add_assign(&layer_backward(&cache.pool, None, &dpool)?.input_grad)?;

    Ok((dx, grads))
}

/// Everything the backward pass needs from one example's forward pass.
#[derive(Debug, Clone)]
pub struct ExampleCache<T> {
    param_count: usize,
    stem: Option<ConvReluCache<T>>,
    stages: Vec<(InceptionCache<T>, LayerCache<T>)>,
    feature_shape: Vec<usize>,
    hidden: Vec<[LayerCache<T>; 3]>,
    out: LayerCache<T>,
}

fn check_input<T: Scalar>(spec: &ModelSpec, input: &Tensor<T>) -> Result<()> {
    if input.shape() != [spec.in_channels, spec.window] {
        return Err(Error::Mismatch(format!(
            "model expects [{}, {}] windows, got {:?}",
            spec.in_channels,
            spec.window,
            input.shape()
        )));
    }
    Ok(())
}

/// Forward pass of a single `[channels, W]` window. Dropout is active only
/// when `training` and draws its masks from `rng`.
pub fn forward_example<T: Scalar>(
    spec: &ModelSpec,
    params: &ModelParams<T>,
    input: &Tensor<T>,
    training: bool,
    rng: &mut Prng,
) -> Result<(Tensor<T>, ExampleCache<T>)> {
    check_input(spec, input)?;
    let p = &params.tensors;
    let mut idx = 0;
    let mut x = input.clone();

    let stem = match &spec.stem {
        None => None,
        Some(_) => {
            let (y, c) = conv_relu(&x, &p[0], &p[1])?;
            idx = 2;
            x = y;
            Some(c)
        }
    };

    let mut stages = Vec::with_capacity(spec.stages.len());
    for s in &spec.stages {
        let (y, ic) = inception_forward(s, &p[idx..idx + STAGE_PARAMS], &x)?;
        idx += STAGE_PARAMS;
        let (pooled, pc) = pool1d(&y, STAGE_POOL, STAGE_POOL, Padding::Valid)?;
        stages.push((ic, pc));
        x = pooled;
    }

    let feature_shape = x.shape().to_vec();
    let mut x = x.flatten();
    let mut hidden = Vec::with_capacity(spec.hidden.len());
    for _ in &spec.hidden {
        let pre = dense(&x, &p[idx], &p[idx + 1])?;
        let act = relu(&pre);
        let (dropped, dc) = dropout(&act, spec.dropout, rng, training)?;
        hidden.push([LayerCache::Dense { input: x }, LayerCache::Relu { pre }, dc]);
        idx += 2;
        x = dropped;
    }
    let logits = dense(&x, &p[idx], &p[idx + 1])?;
    Ok((
        logits,
        ExampleCache {
            param_count: p.len(),
            stem,
            stages,
            feature_shape,
            hidden,
            out: LayerCache::Dense { input: x },
        },
    ))
}

/// Parameter gradients of one example given `d loss / d logits`.
pub fn backward_example<T: Scalar>(
    spec: &ModelSpec,
    params: &ModelParams<T>,
    cache: &ExampleCache<T>,
    logit_grad: &Tensor<T>,
) -> Result<ModelParams<T>> {
    let p = &params.tensors;
    if cache.param_count != p.len()
        || cache.stages.len() != spec.stages.len()
        || cache.hidden.len() != spec.hidden.len()
    {
        return Err(Error::Mismatch(
            "forward cache was produced by a different model".into(),
        ));
    }
    let mut grads: Vec<Option<Tensor<T>>> = vec![None; p.len()];
    let mut idx = p.len() - 2;

    let b = layer_backward(&cache.out, Some(&p[idx]), logit_grad)?;
    let [dw, db]: [Tensor<T>; 2] = b.param_grads.try_into().expect("dense grads");
    grads[idx] = Some(dw);
    grads[idx + 1] = Some(db);
    let mut g = b.input_grad;

    for layer in cache.hidden.iter().rev() {
        idx -= 2;
        g = layer_backward(&layer[2], None, &g)?.input_grad;
        g = layer_backward(&layer[1], None, &g)?.input_grad;
        let b = layer_backward(&layer[0], Some(&p[idx]), &g)?;
        let [dw, db]: [Tensor<T>; 2] = b.param_grads.try_into().expect("dense grads");
        grads[idx] = Some(dw);
        grads[idx + 1] = Some(db);
        g = b.input_grad;
    }

    let mut g = g.reshape(cache.feature_shape.clone())?;
    for (s, (ic, pc)) in spec.stages.iter().zip(&cache.stages).rev() {
        idx -= STAGE_PARAMS;
        let gp = layer_backward(pc, None, &g)?.input_grad;
        let (dx, sg) = inception_backward(s, &p[idx..idx + STAGE_PARAMS], ic, &gp)?;
        for (k, t) in sg.into_iter().enumerate() {
            grads[idx + k] = Some(t);
        }
        g = dx;
    }

    if let Some(stem) = &cache.stem {
        let (_, dw, db) = conv_relu_backward(stem, &p[0], &g)?;
        grads[0] = Some(dw);
        grads[1] = Some(db);
    }

    Ok(ModelParams {
        names: params.names.clone(),
        tensors: grads
            .into_iter()
            .map(|t| t.expect("every parameter visited"))
            .collect(),
    })
}

/// Sums `f(i)` for `i in 0..n` in fixed-size chunks; parallel across chunks,
/// sequential within and between them, so the result is bit-reproducible.
pub fn sum_chunked<T, F>(params: &ModelParams<T>, n: usize, f: F) -> Result<ModelParams<T>>
where
    T: Scalar,
    F: Fn(usize) -> Result<ModelParams<T>> + Sync,
{
    let partials: Vec<ModelParams<T>> = (0..n.div_ceil(REDUCE_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc: Option<ModelParams<T>> = None;
            for i in chunk * REDUCE_CHUNK..((chunk + 1) * REDUCE_CHUNK).min(n) {
                let g = f(i)?;
                match &mut acc {
                    None => acc = Some(g),
                    Some(a) => a.add_assign(&g)?,
                }
            }
            Ok(acc.expect("non-empty chunk"))
        })
        .collect::<Result<_>>()?;
    let mut total = zeros_from(params);
    for part in &partials {
        total.add_assign(part)?;
    }
    Ok(total)
}

fn zeros_from<T: Scalar>(params: &ModelParams<T>) -> ModelParams<T> {
    ModelParams {
        names: params.names.clone(),
        tensors: params
            .tensors
            .iter()
            .map(|t| Tensor::zeros(t.shape()))
            .collect(),
    }
}

fn split_batch<T: Scalar>(spec: &ModelSpec, batch: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
    if batch.rank() != 3 || batch.shape()[1..] != [spec.in_channels, spec.window] {
        return Err(Error::Mismatch(format!(
            "batch {:?} does not match [B, {}, {}]",
            batch.shape(),
            spec.in_channels,
            spec.window
        )));
    }
    (0..batch.shape()[0])
        .map(|b| Tensor::new(vec![spec.in_channels, spec.window], batch.row(b).to_vec()))
        .collect()
}

/// Forward pass over a `[B, channels, W]` batch, returning `[B, classes]`
/// logits and one cache per example. Example `b` draws dropout masks from
/// `stream.fork(b)`.
pub fn model_forward<T: Scalar>(
    spec: &ModelSpec,
    params: &ModelParams<T>,
    batch: &Tensor<T>,
    training: bool,
    stream: Stream,
) -> Result<(Tensor<T>, Vec<ExampleCache<T>>)> {
    let inputs = split_batch(spec, batch)?;
    let results: Vec<(Tensor<T>, ExampleCache<T>)> = inputs
        .par_iter()
        .enumerate()
        .map(|(b, x)| forward_example(spec, params, x, training, &mut stream.fork(b as u64).rng()))
        .collect::<Result<_>>()?;
    let (logits, caches): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let rows: Vec<Vec<T>> = logits.into_iter().map(Tensor::into_data).collect();
    Ok((Tensor::from_rows(&rows)?, caches))
}

/// Parameter gradients summed over the batch, given `[B, classes]` logit grads.
pub fn model_backward<T: Scalar>(
    spec: &ModelSpec,
    params: &ModelParams<T>,
    caches: &[ExampleCache<T>],
    logit_grads: &Tensor<T>,
) -> Result<ModelParams<T>> {
    if logit_grads.rank() != 2
        || logit_grads.shape()[0] != caches.len()
        || logit_grads.shape()[1] != spec.classes
    {
        return Err(Error::Mismatch(format!(
            "logit grads {:?} do not match {} cached examples",
            logit_grads.shape(),
            caches.len()
        )));
    }
    if caches.is_empty() {
        return Ok(zeros_from(params));
    }
    sum_chunked(params, caches.len(), |b| {
        let g = Tensor::from_vec(logit_grads.row(b).to_vec());
        backward_example(spec, params, &caches[b], &g)
    })
}

/// Inference-mode logits for each window, computed in parallel.
pub fn infer<T: Scalar>(
    spec: &ModelSpec,
    params: &ModelParams<T>,
    inputs: &[Tensor<T>],
) -> Result<Vec<Tensor<T>>> {
    let dummy = Stream::root(0);
    inputs
        .par_iter()
        .map(|x| forward_example(spec, params, x, false, &mut dummy.rng()).map(|(l, _)| l))
        .collect()
}

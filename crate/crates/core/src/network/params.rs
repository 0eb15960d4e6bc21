use rand_distr::{Distribution, Normal};

use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::tensor::{Scalar, Tensor};

/// Learned parameters in the storage order given by [`ModelSpec::param_shapes`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros_like(spec: &ModelSpec) -> Result<Self> {
        let shapes = spec.param_shapes()?;
        Ok(ModelParams {
            names: shapes.iter().map(|p| p.name.clone()).collect(),
            tensors: shapes.iter().map(|p| Tensor::zeros(&p.shape)).collect(),
        })
    }

    /// Checks names, shapes and finiteness against the model description.
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        let shapes = spec.param_shapes()?;
        if shapes.len() != self.tensors.len() || self.names.len() != self.tensors.len() {
            return Err(Error::Mismatch(format!(
                "spec has {} parameter tensors, params hold {}",
                shapes.len(),
                self.tensors.len()
            )));
        }
        for ((p, name), t) in shapes.iter().zip(&self.names).zip(&self.tensors) {
            if &p.name != name || p.shape != t.shape() {
                return Err(Error::Mismatch(format!(
                    "parameter `{name}` {:?} does not match spec `{}` {:?}",
                    t.shape(),
                    p.name,
                    p.shape
                )));
            }
            t.check_finite(name)?;
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.tensors[i])
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }

    /// Elementwise `self += other`; shapes must agree.
    pub fn add_assign(&mut self, other: &ModelParams<T>) -> Result<()> {
        if self.tensors.len() != other.tensors.len() {
            return Err(Error::Dimension("parameter sets differ in length".into()));
        }
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: T) {
        self.tensors.iter_mut().for_each(|t| t.scale(factor));
    }

    pub fn flat(&self) -> impl Iterator<Item = &T> {
        self.tensors.iter().flat_map(|t| t.data().iter())
    }
}

/// He-normal weights (`std = sqrt(2 / fan_in)`) and zero biases. Parameter
/// tensor `i` draws from stream `[INIT, i]` of `seed`.
pub fn init_params<T: Scalar>(spec: &ModelSpec, seed: u64) -> Result<ModelParams<T>> {
    spec.validate()?;
    let shapes = spec.param_shapes()?;
    let root = Stream::root(seed).fork(rng::INIT);
    let tensors = shapes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if p.fan_in == 0 {
                return Tensor::zeros(&p.shape);
            }
            let normal = Normal::new(0.0, (2.0 / p.fan_in as f64).sqrt()).expect("positive std");
            let mut rng = root.fork(i as u64).rng();
            let n = p.shape.iter().product();
            let data = (0..n)
                .map(|_| T::from_f64(normal.sample(&mut rng)))
                .collect();
            Tensor::new(p.shape.clone(), data).expect("param shape")
        })
        .collect();
    Ok(ModelParams {
        names: shapes.into_iter().map(|p| p.name).collect(),
        tensors,
    })
}

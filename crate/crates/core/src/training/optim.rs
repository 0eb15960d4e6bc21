use crate::error::{Error, Result};
use crate::network::ModelParams;
use crate::tensor::Scalar;

/// One momentum SGD update: `v <- momentum * v - lr * g; p <- p + v`.
pub fn sgd_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    lr: f64,
    momentum: f64,
    velocity: &mut ModelParams<T>,
) -> Result<()> {
    let n = params.tensors.len();
    if grads.tensors.len() != n || velocity.tensors.len() != n {
        return Err(Error::Dimension(
            "sgd: parameter, gradient and velocity sets differ".into(),
        ));
    }
    let (lr, mu) = (T::from_f64(lr), T::from_f64(momentum));
    for ((p, g), v) in params
        .tensors
        .iter_mut()
        .zip(&grads.tensors)
        .zip(velocity.tensors.iter_mut())
    {
        if p.shape() != g.shape() || p.shape() != v.shape() {
            return Err(Error::Dimension(format!(
                "sgd: shapes {:?} / {:?} / {:?} differ",
                p.shape(),
                g.shape(),
                v.shape()
            )));
        }
        for ((pi, &gi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
            *vi = mu * *vi - lr * gi;
            *pi += *vi;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn single(v: f64) -> ModelParams<f64> {
        ModelParams {
            names: vec!["p".into()],
            tensors: vec![Tensor::from_vec(vec![v])],
        }
    }

    #[test]
    fn zero_grad_keeps_params() {
        let mut p = single(1.5);
        let mut v = single(0.0);
        sgd_step(&mut p, &single(0.0), 0.1, 0.9, &mut v).unwrap();
        assert_eq!(p, single(1.5));
    }

    #[test]
    fn plain_sgd() {
        let mut p = single(1.0);
        let mut v = single(0.0);
        sgd_step(&mut p, &single(2.0), 0.1, 0.0, &mut v).unwrap();
        assert!((p.tensors[0].data()[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn momentum_recurrence() {
        let mut p = single(0.0);
        let mut v = single(0.0);
        sgd_step(&mut p, &single(1.0), 0.1, 0.9, &mut v).unwrap();
        assert!((p.tensors[0].data()[0] + 0.1).abs() < 1e-15);
        sgd_step(&mut p, &single(1.0), 0.1, 0.9, &mut v).unwrap();
        assert!((p.tensors[0].data()[0] + 0.29).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = single(0.0);
        let mut v = single(0.0);
        let g = ModelParams {
            names: vec!["p".into()],
            tensors: vec![Tensor::from_vec(vec![1.0, 2.0])],
        };
        assert!(sgd_step(&mut p, &g, 0.1, 0.9, &mut v).is_err());
    }
}

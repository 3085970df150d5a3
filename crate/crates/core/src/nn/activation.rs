use crate::error::{config_err, Result};
use crate::tensor::{Real, Tensor};

pub fn tanh_act<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    x.map(T::tanh)
}

/// Gradient through `tanh` given its forward output `y`: `d_out ⊙ (1 − y²)`.
pub fn tanh_grad<T: Real>(y: &Tensor<T>, d_out: &Tensor<T>) -> Result<Tensor<T>> {
    if y.shape() != d_out.shape() {
        return Err(config_err!(
            "tanh_grad: shape {:?} vs {:?}",
            y.shape(),
            d_out.shape()
        ));
    }
    let data = y
        .data()
        .iter()
        .zip(d_out.data())
        .map(|(&y, &g)| g * (T::one() - y * y))
        .collect();
    Tensor::from_vec(y.channels(), y.length(), data)
}

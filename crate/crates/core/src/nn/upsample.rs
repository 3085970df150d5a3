use crate::error::{config_err, Result};
use crate::tensor::{Real, Tensor};

/// Nearest-neighbour ×2: `out[2m] = out[2m+1] = x[m]`.
pub fn upsample2<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let (c, l) = x.shape();
    let mut data = Vec::with_capacity(c * l * 2);
    for &v in x.data() {
        data.push(v);
        data.push(v);
    }
    Tensor::from_vec(c, 2 * l, data).expect("doubled shape")
}

/// Adjoint of [`upsample2`]: sums each output pair back onto its source sample.
pub fn upsample2_grad<T: Real>(d_out: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, l) = d_out.shape();
    if l % 2 != 0 {
        return Err(config_err!("upsample2_grad: odd length {l}"));
    }
    let data = d_out.data().chunks_exact(2).map(|p| p[0] + p[1]).collect();
    Tensor::from_vec(c, l / 2, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeats_and_sums() {
        let x = Tensor::from_signal(&[1.0f32, 2.0]).unwrap();
        assert_eq!(upsample2(&x).data(), &[1.0, 1.0, 2.0, 2.0]);
        let g = Tensor::from_signal(&[1.0f32, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(upsample2_grad(&g).unwrap().data(), &[3.0, 7.0]);
        assert_eq!(upsample2(&Tensor::<f32>::zeros(3, 1000)).shape(), (3, 2000));
    }
}

//! Generative-neuron (self-operational) 1D layers.
//!
//! Each kernel tap applies a learned polynomial `Σ_{q=1..Q} w(r,q)·y^q` to its
//! input sample instead of a single multiply. Rearranging the sums turns the
//! layer into `Q` ordinary convolutions over the element-wise powers of the
//! input, which is how it is computed here:
//!
//! ```text
//! out_k = b_k + Σ_q conv1d(W_q, x^q)
//! ```
//!
//! The constant (`q = 0`) term is left out; the bias absorbs it. With `Q = 1`
//! the layer is a plain convolution.

use rand::Rng;

use crate::error::{config_err, Result};
use crate::nn::{tanh_grad, Geometry, PaddedStack};
use crate::tensor::{Real, Tensor};

/// Channel block `q` (1-based) holds `x^q`, computed by repeated multiplication.
pub fn power_stack<T: Real>(x: &Tensor<T>, order: usize) -> Result<Tensor<T>> {
    if order == 0 {
        return Err(config_err!("power order must be at least 1"));
    }
    let n = x.data().len();
    let mut data = Vec::with_capacity(n * order);
    data.extend_from_slice(x.data());
    for q in 1..order {
        let (prev, base) = (&data[(q - 1) * n..q * n], x.data());
        let next: Vec<T> = prev.iter().zip(base).map(|(&p, &b)| p * b).collect();
        data.extend(next);
    }
    Tensor::from_vec(x.channels() * order, x.length(), data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeLayer<T: Real = f32> {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub order: usize,
    pub stride: usize,
    pub pad_left: usize,
    pub pad_right: usize,
    pub activation: bool,
    /// `[c_out × c_in × kernel × order]`
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// Values saved by [`GenerativeLayer::forward_cached`] for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache<T: Real = f32> {
    powers: PaddedStack<T>,
    output: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads<T: Real = f32> {
    pub dx: Tensor<T>,
    pub dw: Vec<T>,
    pub db: Vec<T>,
}

impl<T: Real> GenerativeLayer<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn zeros(
        c_in: usize,
        c_out: usize,
        kernel: usize,
        order: usize,
        stride: usize,
        pad_left: usize,
        pad_right: usize,
        activation: bool,
    ) -> Result<Self> {
        if c_in == 0 || c_out == 0 || kernel == 0 || order == 0 || stride == 0 {
            return Err(config_err!(
                "layer dims must be positive (c_in {c_in}, c_out {c_out}, kernel {kernel}, order {order}, stride {stride})"
            ));
        }
        Ok(GenerativeLayer {
            c_in,
            c_out,
            kernel,
            order,
            stride,
            pad_left,
            pad_right,
            activation,
            weights: vec![T::zero(); c_out * c_in * kernel * order],
            bias: vec![T::zero(); c_out],
        })
    }

    /// Uniform weights in `±sqrt(1/(c_in·K·Q))`, zero bias.
    pub fn init_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let bound = (1.0 / (self.c_in * self.kernel * self.order) as f64).sqrt();
        for w in &mut self.weights {
            *w = T::lit(rng.random_range(-bound..bound));
        }
        self.bias.fill(T::zero());
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn weight(&self, k: usize, i: usize, r: usize, q: usize) -> T {
        self.weights[((k * self.c_in + i) * self.kernel + r) * self.order + q - 1]
    }

    pub fn weight_mut(&mut self, k: usize, i: usize, r: usize, q: usize) -> &mut T {
        &mut self.weights[((k * self.c_in + i) * self.kernel + r) * self.order + q - 1]
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        self.geometry().output_len(len)
    }

    fn geometry(&self) -> Geometry {
        Geometry {
            c_in: self.c_in,
            c_out: self.c_out,
            kernel: self.kernel,
            order: self.order,
            stride: self.stride,
            pad_left: self.pad_left,
            pad_right: self.pad_right,
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.channels() != self.c_in {
            return Err(config_err!(
                "layer expects {} input channels, got {}",
                self.c_in,
                x.channels()
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Tensor<T>) -> Result<(Tensor<T>, LayerCache<T>)> {
        self.check_input(x)?;
        let g = self.geometry();
        let powers = g.stack(x);
        let mut out = g.forward(&powers, &self.weights, &self.bias)?;
        if self.activation {
            out.data_mut().iter_mut().for_each(|v| *v = v.tanh());
        }
        let cache = LayerCache {
            powers,
            output: out.clone(),
        };
        Ok((out, cache))
    }

    pub fn backward(&self, cache: &LayerCache<T>, d_out: &Tensor<T>) -> Result<LayerGrads<T>> {
        let d_pre = if self.activation {
            tanh_grad(&cache.output, d_out)?
        } else {
            if d_out.shape() != cache.output.shape() {
                return Err(config_err!(
                    "output gradient shape {:?}, expected {:?}",
                    d_out.shape(),
                    cache.output.shape()
                ));
            }
            d_out.clone()
        };
        let (d_powers, dw, db) = self.geometry().backward(&cache.powers, &self.weights, &d_pre)?;
        // dx = Σ_q q·x^{q−1} ⊙ d(x^q)
        let len = cache.powers.len();
        let n = self.c_in * len;
        let dp = d_powers.data();
        let mut dx = dp[..n].to_vec();
        for q in 2..=self.order {
            let scale = T::lit(q as f64);
            for i in 0..self.c_in {
                let block = &dp[((q - 1) * self.c_in + i) * len..][..len];
                let lower = cache.powers.row((q - 2) * self.c_in + i);
                for ((d, &g), &p) in dx[i * len..(i + 1) * len].iter_mut().zip(block).zip(lower) {
                    *d += scale * p * g;
                }
            }
        }
        let dx = Tensor::from_vec(self.c_in, len, dx)?;
        Ok(LayerGrads { dx, dw, db })
    }

    pub fn grads(&self, x: &Tensor<T>, d_out: &Tensor<T>) -> Result<LayerGrads<T>> {
        let (_, cache) = self.forward_cached(x)?;
        self.backward(&cache, d_out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{conv1d, conv1d_grads, ConvParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn power_stack_examples() {
        let x = Tensor::from_signal(&[0.5f64]).unwrap();
        assert_eq!(power_stack(&x, 3).unwrap().data(), &[0.5, 0.25, 0.125]);
        assert_eq!(power_stack(&x, 1).unwrap(), x);
        let y = Tensor::from_signal(&[-0.3f64, 0.2]).unwrap();
        let s = power_stack(&y, 2).unwrap();
        assert_eq!(s.shape(), (2, 2));
        assert!((s.channel(1)[0] - 0.09).abs() < 1e-15 && (s.channel(1)[1] - 0.04).abs() < 1e-15);
        assert!(power_stack(&y, 0).is_err());
    }

    #[test]
    fn scalar_polynomial_tap() {
        let mut l = GenerativeLayer::<f64>::zeros(1, 1, 1, 2, 1, 0, 0, false).unwrap();
        l.weights = vec![2.0, -1.0];
        l.bias = vec![0.1];
        let y = l.forward(&Tensor::from_signal(&[0.5]).unwrap()).unwrap();
        assert!((y.data()[0] - 0.85).abs() < 1e-12);
    }

    #[test]
    fn zero_input_gives_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut l = GenerativeLayer::<f32>::zeros(3, 4, 5, 3, 2, 2, 2, false).unwrap();
        l.init_uniform(&mut rng);
        l.bias = vec![0.1, -0.2, 0.3, 0.0];
        let y = l.forward(&Tensor::zeros(3, 20)).unwrap();
        for k in 0..4 {
            assert!(y.channel(k).iter().all(|&v| v == l.bias[k]));
        }
    }

    #[test]
    fn order_one_equals_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut l = GenerativeLayer::<f32>::zeros(2, 3, 5, 1, 2, 2, 2, false).unwrap();
        l.init_uniform(&mut rng);
        l.bias = vec![0.5, -0.5, 0.25];
        let mut p = ConvParams::zeros(2, 3, 5, 2, 2, 2);
        p.weights = l.weights.clone();
        p.bias = l.bias.clone();
        let x = Tensor::from_vec(2, 16, (0..32).map(|i| ((i * 7) % 11) as f32 / 11.0 - 0.5).collect()).unwrap();
        assert_eq!(l.forward(&x).unwrap(), conv1d(&x, &p).unwrap());
        let d_out = Tensor::from_vec(3, 8, (0..24).map(|i| (i as f32 * 0.1).sin()).collect()).unwrap();
        let a = l.grads(&x, &d_out).unwrap();
        let b = conv1d_grads(&x, &p, &d_out).unwrap();
        assert_eq!((a.dx, a.dw, a.db), (b.dx, b.dw, b.db));
    }

    #[test]
    fn param_count_formula() {
        let l = GenerativeLayer::<f32>::zeros(1, 16, 5, 3, 2, 2, 2, true).unwrap();
        assert_eq!(l.param_count(), 256);
        assert!(GenerativeLayer::<f32>::zeros(1, 16, 5, 0, 2, 2, 2, true).is_err());
    }

    #[test]
    fn channel_mismatch_is_a_config_error() {
        let l = GenerativeLayer::<f32>::zeros(2, 1, 3, 2, 1, 1, 1, false).unwrap();
        assert!(l.forward(&Tensor::zeros(1, 8)).is_err());
    }
}

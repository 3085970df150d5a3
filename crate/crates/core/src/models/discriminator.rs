use rand::Rng;

use crate::error::{input_err, Result};
use crate::models::{Network, ParamGrads};
use crate::selfonn::{GenerativeLayer, LayerCache};
use crate::tensor::{Real, Tensor};

pub const DISC_WIDTHS: [usize; 6] = [16, 32, 64, 64, 64, 1];
pub const DISC_STRIDES: [usize; 6] = [2, 2, 2, 2, 1, 2];
const KERNEL: usize = 4;

/// Conditional patch discriminator over the (corrupted, candidate) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator<T: Real = f32> {
    pub order: usize,
    layers: Vec<GenerativeLayer<T>>,
}

pub struct DiscriminatorCache<T: Real = f32> {
    layers: Vec<LayerCache<T>>,
}

pub fn build_discriminator<T: Real, R: Rng + ?Sized>(order: usize, rng: &mut R) -> Result<Discriminator<T>> {
    let mut layers = Vec::with_capacity(DISC_WIDTHS.len());
    let mut c_in = 2;
    for (i, (&w, &s)) in DISC_WIDTHS.iter().zip(&DISC_STRIDES).enumerate() {
        // K=4: pads (1,1) halve the length at stride 2, (1,2) keep it at stride 1
        let (pl, pr) = if s == 1 { (1, 2) } else { (1, 1) };
        let last = i + 1 == DISC_WIDTHS.len();
        let mut l = GenerativeLayer::zeros(c_in, w, KERNEL, order, s, pl, pr, !last)?;
        l.init_uniform(rng);
        layers.push(l);
        c_in = w;
    }
    Ok(Discriminator { order, layers })
}

impl<T: Real> Discriminator<T> {
    /// Total length reduction of the stride chain.
    pub fn downsampling(&self) -> usize {
        DISC_STRIDES.iter().product()
    }

    fn pair(&self, condition: &Tensor<T>, candidate: &Tensor<T>) -> Result<Tensor<T>> {
        let f = self.downsampling();
        if condition.shape() != candidate.shape()
            || condition.channels() != 1
            || !condition.length().is_multiple_of(f)
        {
            return Err(input_err!(
                "discriminator pair must be two 1 x (multiple of {f}) signals, got {:?} and {:?}",
                condition.shape(),
                candidate.shape()
            ));
        }
        Tensor::concat_channels(&[condition, candidate])
    }

    pub fn forward(&self, condition: &Tensor<T>, candidate: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward_cached(condition, candidate)?.0)
    }

    pub fn forward_cached(
        &self,
        condition: &Tensor<T>,
        candidate: &Tensor<T>,
    ) -> Result<(Tensor<T>, DiscriminatorCache<T>)> {
        let mut h = self.pair(condition, candidate)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let (out, c) = l.forward_cached(&h)?;
            caches.push(c);
            h = out;
        }
        Ok((h, DiscriminatorCache { layers: caches }))
    }

    /// Parameter gradients and the gradient w.r.t. the candidate signal.
    pub fn backward(
        &self,
        cache: &DiscriminatorCache<T>,
        d_scores: &Tensor<T>,
    ) -> Result<(Vec<ParamGrads<T>>, Tensor<T>)> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut dh = d_scores.clone();
        for (l, c) in self.layers.iter().zip(&cache.layers).rev() {
            let lg = l.backward(c, &dh)?;
            grads.push(ParamGrads {
                weights: lg.dw,
                bias: lg.db,
            });
            dh = lg.dx;
        }
        grads.reverse();
        let (_, d_candidate) = dh.split_channels(1)?;
        Ok((grads, d_candidate))
    }
}

impl<T: Real> Network<T> for Discriminator<T> {
    fn prefix(&self) -> &'static str {
        "d"
    }

    fn layer_names(&self) -> Vec<String> {
        (1..=self.layers.len()).map(|i| format!("layer{i}")).collect()
    }

    fn layers(&self) -> &[GenerativeLayer<T>] {
        &self.layers
    }

    fn layers_mut(&mut self) -> &mut [GenerativeLayer<T>] {
        &mut self.layers
    }
}

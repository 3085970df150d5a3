use rand::Rng;

use crate::error::{input_err, Result};
use crate::models::{Network, ParamGrads};
use crate::nn::{tanh_grad, upsample2, upsample2_grad};
use crate::selfonn::{GenerativeLayer, LayerCache};
use crate::tensor::{Real, Tensor};

pub const ENCODER_WIDTHS: [usize; 5] = [16, 32, 64, 128, 128];
pub const DECODER_WIDTHS: [usize; 5] = [128, 64, 32, 16, 1];
const KERNEL: usize = 5;
const STAGES: usize = 5;

/// U-Net of five stride-2 generative layers and five (upsample ×2 →
/// generative layer) stages.
///
/// Decoder stage `d` (1-based) reads its upsampled input concatenated with
/// the output of encoder stage `5 − d`, where stage 0 is the network input.
/// When the stage's output width equals its upsampled input width the two are
/// summed before the `tanh`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator<T: Real = f32> {
    pub order: usize,
    layers: Vec<GenerativeLayer<T>>,
}

struct DecoderStep<T: Real> {
    layer: LayerCache<T>,
    up_channels: usize,
    residual: bool,
    output: Tensor<T>,
}

/// Activations saved by [`Generator::forward_cached`].
pub struct GeneratorCache<T: Real = f32> {
    encoder: Vec<LayerCache<T>>,
    decoder: Vec<DecoderStep<T>>,
}

/// Untrained generator with order-`order` generative layers.
pub fn build_generator<T: Real, R: Rng + ?Sized>(order: usize, rng: &mut R) -> Result<Generator<T>> {
    let mut layers = Vec::with_capacity(2 * STAGES);
    let mut c_in = 1;
    for &w in &ENCODER_WIDTHS {
        layers.push(GenerativeLayer::zeros(c_in, w, KERNEL, order, 2, 2, 2, true)?);
        c_in = w;
    }
    for (d, &w) in DECODER_WIDTHS.iter().enumerate() {
        let skip = if d + 1 < STAGES { ENCODER_WIDTHS[STAGES - 2 - d] } else { 1 };
        layers.push(GenerativeLayer::zeros(c_in + skip, w, KERNEL, order, 1, 2, 2, false)?);
        c_in = w;
    }
    for l in &mut layers {
        l.init_uniform(rng);
    }
    Ok(Generator { order, layers })
}

impl<T: Real> Generator<T> {
    pub fn encoder(&self) -> &[GenerativeLayer<T>] {
        &self.layers[..STAGES]
    }

    pub fn decoder(&self) -> &[GenerativeLayer<T>] {
        &self.layers[STAGES..]
    }

    fn check_input(x: &Tensor<T>) -> Result<()> {
        let len = x.length();
        if x.channels() != 1 || !len.is_multiple_of(1 << STAGES) {
            return Err(input_err!(
                "generator input must be 1 x (multiple of {}), got {:?}",
                1 << STAGES,
                x.shape()
            ));
        }
        Ok(())
    }

    /// Output shapes of the five encoder stages for a `len`-sample input.
    pub fn encoder_shapes(&self, len: usize) -> Result<Vec<(usize, usize)>> {
        let mut shapes = Vec::new();
        let mut l = len;
        for layer in self.encoder() {
            l = layer.output_len(l)?;
            shapes.push((layer.c_out, l));
        }
        Ok(shapes)
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Tensor<T>) -> Result<(Tensor<T>, GeneratorCache<T>)> {
        Self::check_input(x)?;
        let mut skips = vec![x.clone()];
        let mut encoder = Vec::with_capacity(STAGES);
        for layer in self.encoder() {
            let (h, c) = layer.forward_cached(skips.last().expect("nonempty"))?;
            encoder.push(c);
            skips.push(h);
        }
        let mut h = skips.pop().expect("encoder output");
        let mut decoder = Vec::with_capacity(STAGES);
        for (d, layer) in self.decoder().iter().enumerate() {
            let up = upsample2(&h);
            let skip = &skips[STAGES - 1 - d];
            let cat = Tensor::concat_channels(&[&up, skip])?;
            let (mut z, c) = layer.forward_cached(&cat)?;
            let residual = z.channels() == up.channels();
            if residual {
                z.add_assign(&up)?;
            }
            z.data_mut().iter_mut().for_each(|v| *v = v.tanh());
            h = z;
            decoder.push(DecoderStep {
                layer: c,
                up_channels: up.channels(),
                residual,
                output: h.clone(),
            });
        }
        Ok((h, GeneratorCache { encoder, decoder }))
    }

    /// Parameter gradients (encoder then decoder order) for upstream `d_out`.
    pub fn backward(&self, cache: &GeneratorCache<T>, d_out: &Tensor<T>) -> Result<Vec<ParamGrads<T>>> {
        let mut grads = vec![None; 2 * STAGES];
        // gradient arriving at encoder output s (index s−1) through skip links
        let mut skip_grads: Vec<Option<Tensor<T>>> = vec![None; STAGES];
        let mut dh = d_out.clone();
        for d in (0..STAGES).rev() {
            let step = &cache.decoder[d];
            let dz = tanh_grad(&step.output, &dh)?;
            let lg = self.decoder()[d].backward(&step.layer, &dz)?;
            let (mut du, dskip) = lg.dx.split_channels(step.up_channels)?;
            if step.residual {
                du.add_assign(&dz)?;
            }
            let target = STAGES - 1 - d;
            if target > 0 {
                skip_grads[target - 1] = Some(dskip);
            }
            grads[STAGES + d] = Some(ParamGrads {
                weights: lg.dw,
                bias: lg.db,
            });
            dh = upsample2_grad(&du)?;
        }
        for s in (0..STAGES).rev() {
            if let Some(g) = &skip_grads[s] {
                dh.add_assign(g)?;
            }
            let lg = self.encoder()[s].backward(&cache.encoder[s], &dh)?;
            grads[s] = Some(ParamGrads {
                weights: lg.dw,
                bias: lg.db,
            });
            dh = lg.dx;
        }
        Ok(grads.into_iter().map(|g| g.expect("every layer visited")).collect())
    }
}

impl<T: Real> Network<T> for Generator<T> {
    fn prefix(&self) -> &'static str {
        "g"
    }

    fn layer_names(&self) -> Vec<String> {
        (1..=STAGES)
            .map(|i| format!("enc{i}"))
            .chain((1..=STAGES).map(|i| format!("dec{i}")))
            .collect()
    }

    fn layers(&self) -> &[GenerativeLayer<T>] {
        &self.layers
    }

    fn layers_mut(&mut self) -> &mut [GenerativeLayer<T>] {
        &mut self.layers
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn widths_and_skip_inputs() {
        let g: Generator<f32> = build_generator(3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let c_in: Vec<usize> = g.decoder().iter().map(|l| l.c_in).collect();
        assert_eq!(c_in, vec![256, 192, 96, 48, 17]);
        assert_eq!(
            g.encoder_shapes(32000).unwrap(),
            vec![(16, 16000), (32, 8000), (64, 4000), (128, 2000), (128, 1000)]
        );
    }

    #[test]
    fn rejects_bad_lengths() {
        let g: Generator<f32> = build_generator(1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(g.forward(&Tensor::zeros(1, 100)).is_err());
        assert!(g.forward(&Tensor::zeros(2, 64)).is_err());
        assert_eq!(g.forward(&Tensor::zeros(1, 64)).unwrap().shape(), (1, 64));
    }
}

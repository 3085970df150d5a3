//! Op-GAN networks built from generative layers, plus the named parameter
//! collections used for optimization and checkpointing.

mod discriminator;
mod generator;

pub use discriminator::{build_discriminator, DiscriminatorCache, Discriminator, DISC_STRIDES, DISC_WIDTHS};
pub use generator::{build_generator, Generator, GeneratorCache, DECODER_WIDTHS, ENCODER_WIDTHS};

use crate::error::{config_err, Result};
use crate::nn::{adam_step, AdamConfig, AdamState};
use crate::selfonn::GenerativeLayer;
use crate::tensor::Real;

/// One named weight or bias array.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamArray<T: Real = f32> {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<T>,
}

/// Ordered, uniquely named parameter arrays of one or more networks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelParams<T: Real = f32> {
    pub arrays: Vec<ParamArray<T>>,
}

impl<T: Real> ModelParams<T> {
    pub fn get(&self, name: &str) -> Option<&ParamArray<T>> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn extend(&mut self, other: ModelParams<T>) -> Result<()> {
        for a in other.arrays {
            if self.get(&a.name).is_some() {
                return Err(config_err!("duplicate parameter name {}", a.name));
            }
            self.arrays.push(a);
        }
        Ok(())
    }
}

/// Total element count of every array.
pub fn count_params<T: Real>(m: &ModelParams<T>) -> usize {
    m.arrays.iter().map(|a| a.data.len()).sum()
}

/// Gradient of one layer's weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads<T: Real = f32> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> ParamGrads<T> {
    pub fn zeros_like(layer: &GenerativeLayer<T>) -> Self {
        ParamGrads {
            weights: vec![T::zero(); layer.weights.len()],
            bias: vec![T::zero(); layer.bias.len()],
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrads<T>) {
        for (a, &b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, &b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: T) {
        self.weights.iter_mut().chain(self.bias.iter_mut()).for_each(|v| *v *= s);
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.weights.iter().chain(&self.bias)
    }
}

/// A feed-forward stack of generative layers with fixed wiring.
pub trait Network<T: Real> {
    /// Name prefix for this network's arrays (`"g"` / `"d"`).
    fn prefix(&self) -> &'static str;
    fn layer_names(&self) -> Vec<String>;
    fn layers(&self) -> &[GenerativeLayer<T>];
    fn layers_mut(&mut self) -> &mut [GenerativeLayer<T>];

    fn param_count(&self) -> usize {
        self.layers().iter().map(GenerativeLayer::param_count).sum()
    }

    fn zero_grads(&self) -> Vec<ParamGrads<T>> {
        self.layers().iter().map(ParamGrads::zeros_like).collect()
    }

    fn params(&self) -> ModelParams<T> {
        let mut arrays = Vec::new();
        for (name, l) in self.layer_names().iter().zip(self.layers()) {
            arrays.push(ParamArray {
                name: format!("{}.{name}.weight", self.prefix()),
                dims: vec![l.c_out, l.c_in, l.kernel, l.order],
                data: l.weights.clone(),
            });
            arrays.push(ParamArray {
                name: format!("{}.{name}.bias", self.prefix()),
                dims: vec![l.c_out],
                data: l.bias.clone(),
            });
        }
        ModelParams { arrays }
    }

    /// Copies matching arrays out of `m`; every array of this network must be present.
    fn load_params(&mut self, m: &ModelParams<T>) -> Result<()> {
        let prefix = self.prefix();
        let names = self.layer_names();
        for (name, l) in names.iter().zip(self.layers_mut()) {
            let wname = format!("{prefix}.{name}.weight");
            let bname = format!("{prefix}.{name}.bias");
            let w = m.get(&wname).ok_or_else(|| config_err!("missing parameter {wname}"))?;
            let b = m.get(&bname).ok_or_else(|| config_err!("missing parameter {bname}"))?;
            if w.dims != [l.c_out, l.c_in, l.kernel, l.order] || b.dims != [l.c_out] {
                return Err(config_err!(
                    "parameter {wname} has dims {:?}, network expects {:?}",
                    w.dims,
                    [l.c_out, l.c_in, l.kernel, l.order]
                ));
            }
            l.weights.clone_from(&w.data);
            l.bias.clone_from(&b.data);
        }
        Ok(())
    }
}

/// Adam over every array of one network.
#[derive(Debug, Clone)]
pub struct NetworkOptimizer<T: Real = f32> {
    pub lr: T,
    states: Vec<(AdamState<T>, AdamState<T>)>,
}

impl<T: Real> NetworkOptimizer<T> {
    pub fn new<N: Network<T> + ?Sized>(net: &N, lr: T, config: AdamConfig) -> Self {
        let states = net
            .layers()
            .iter()
            .map(|l| (AdamState::new(l.weights.len(), config), AdamState::new(l.bias.len(), config)))
            .collect();
        NetworkOptimizer { lr, states }
    }

    pub fn step<N: Network<T> + ?Sized>(&mut self, net: &mut N, grads: &[ParamGrads<T>]) -> Result<()> {
        if grads.len() != self.states.len() || net.layers().len() != self.states.len() {
            return Err(config_err!("optimizer tracks {} layers, got {} gradients", self.states.len(), grads.len()));
        }
        for ((l, g), (sw, sb)) in net.layers_mut().iter_mut().zip(grads).zip(&mut self.states) {
            adam_step(&mut l.weights, &g.weights, sw, self.lr)?;
            adam_step(&mut l.bias, &g.bias, sb, self.lr)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_examples() {
        assert_eq!(count_params(&ModelParams::<f32>::default()), 0);
        let l = GenerativeLayer::<f32>::zeros(1, 16, 5, 3, 2, 2, 2, true).unwrap();
        let m = ModelParams {
            arrays: vec![
                ParamArray {
                    name: "w".into(),
                    dims: vec![16, 1, 5, 3],
                    data: l.weights.clone(),
                },
                ParamArray {
                    name: "b".into(),
                    dims: vec![16],
                    data: l.bias.clone(),
                },
            ],
        };
        assert_eq!(count_params(&m), 256);
        let mut dup = m.clone();
        assert!(dup.extend(m).is_err());
    }
}

//! Adversarial training loop, validation and model selection, plus the
//! inference path.

mod checkpoint;
mod restore;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use restore::restore;

use crate::corruption::derive_seed;
use crate::dsp::peak;
use crate::error::{config_err, input_err, Error, Result};
use crate::losses::{
    d_loss, d_loss_grads, g_adv_grad, g_adv_loss, loss_fd_grad, loss_td, loss_td_grad, total_g_loss, LossReport,
    LossWeights,
};
use crate::manifest::{Manifest, Split};
use crate::metrics::sdr;
use crate::models::{build_discriminator, build_generator, Discriminator, Generator, GeneratorCache, NetworkOptimizer, ParamGrads};
use crate::nn::AdamConfig;
use crate::tensor::Tensor;
use crate::wav::read_wav;
use crate::SEGMENT_LEN;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub q_order: usize,
    pub batch_size: usize,
    pub max_iterations: usize,
    pub lr_g: f32,
    pub lr_d: f32,
    pub lambda_td: f64,
    pub lambda_fd: f64,
    pub seed: u64,
    pub validate_every: usize,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            q_order: 3,
            batch_size: 8,
            max_iterations: 1000,
            lr_g: 1e-3,
            lr_d: 2e-3,
            lambda_td: 10.0,
            lambda_fd: 5.0,
            seed: 0,
            validate_every: 50,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q_order == 0 {
            return Err(config_err!("q_order must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(config_err!("batch_size must be at least 1"));
        }
        if !(self.lr_g > 0.0 && self.lr_d > 0.0) {
            return Err(config_err!("learning rates must be positive"));
        }
        if !(self.lambda_td >= 0.0 && self.lambda_fd >= 0.0) {
            return Err(config_err!("loss weights must be non-negative"));
        }
        if self.validate_every == 0 {
            return Err(config_err!("validate_every must be at least 1"));
        }
        Ok(())
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            lambda_td: self.lambda_td,
            lambda_fd: self.lambda_fd,
        }
    }
}

/// A (corrupted, clean) pair, both divided by the corrupted segment's peak.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub corrupted: Tensor,
    pub clean: Tensor,
    pub scale: f32,
}

impl TrainingPair {
    pub fn new(corrupted: &[f32], clean: &[f32]) -> Result<Self> {
        if corrupted.len() != SEGMENT_LEN || clean.len() != SEGMENT_LEN {
            return Err(input_err!(
                "training pairs must be {SEGMENT_LEN} samples, got {} and {}",
                corrupted.len(),
                clean.len()
            ));
        }
        let scale = peak(corrupted);
        if scale <= 0.0 {
            return Err(input_err!("corrupted segment is silent"));
        }
        let div = |x: &[f32]| Tensor::from_signal(&x.iter().map(|&v| v / scale).collect::<Vec<_>>());
        Ok(TrainingPair {
            corrupted: div(corrupted)?,
            clean: div(clean)?,
            scale,
        })
    }
}

/// Loads every pair of one split from a manifest.
pub fn load_pairs(manifest: &Manifest, split: Split) -> Result<(Vec<TrainingPair>, Option<u32>)> {
    let mut rate = None;
    let pairs = manifest
        .split(split)
        .map(|r| {
            let clean = read_wav(manifest.resolve(&r.clean_path))?;
            let corrupted = read_wav(manifest.resolve(&r.corrupted_path))?;
            rate.get_or_insert(clean.sample_rate);
            TrainingPair::new(&corrupted.samples, &clean.samples)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((pairs, rate))
}

/// Generator, discriminator and their optimizers.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub g: Generator,
    pub d: Discriminator,
    opt_g: NetworkOptimizer,
    opt_d: NetworkOptimizer,
    weights: LossWeights,
    iteration: usize,
}

fn check_finite(iteration: usize, what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence {
            iteration,
            detail: format!("{what} = {v}"),
        })
    }
}

fn mean_grads(parts: Vec<Vec<ParamGrads>>, iteration: usize, what: &str) -> Result<Vec<ParamGrads>> {
    let n = parts.len();
    let mut it = parts.into_iter();
    let mut acc = it.next().ok_or_else(|| input_err!("empty batch"))?;
    for p in it {
        for (a, b) in acc.iter_mut().zip(&p) {
            a.add_assign(b);
        }
    }
    for a in &mut acc {
        a.scale(1.0 / n as f32);
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iteration,
                detail: format!("non-finite {what} gradient"),
            });
        }
    }
    Ok(acc)
}

impl Trainer {
    /// Freshly initialized networks; all randomness comes from `cfg.seed`.
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let g = build_generator(cfg.q_order, &mut rng)?;
        let d = build_discriminator(cfg.q_order, &mut rng)?;
        Ok(Self::from_models(g, d, cfg))
    }

    pub fn from_models(g: Generator, d: Discriminator, cfg: &TrainConfig) -> Self {
        let adam = AdamConfig::default();
        Trainer {
            opt_g: NetworkOptimizer::new(&g, cfg.lr_g, adam),
            opt_d: NetworkOptimizer::new(&d, cfg.lr_d, adam),
            g,
            d,
            weights: cfg.weights(),
            iteration: 0,
        }
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Generator outputs (with activations kept for backprop) for a batch.
    pub fn generate(&self, batch: &[&TrainingPair]) -> Result<Vec<(Tensor, GeneratorCache)>> {
        batch.par_iter().map(|p| self.g.forward_cached(&p.corrupted)).collect()
    }

    /// One discriminator update on real pairs and the given generated pairs.
    /// Returns the batch-mean discriminator loss.
    pub fn discriminator_step(&mut self, batch: &[&TrainingPair], fakes: &[(Tensor, GeneratorCache)]) -> Result<f64> {
        check_batch(batch, fakes)?;
        let it = self.iteration;
        let parts = batch
            .par_iter()
            .zip(fakes)
            .map(|(p, (fake, _))| {
                let (real_s, real_c) = self.d.forward_cached(&p.corrupted, &p.clean)?;
                let (fake_s, fake_c) = self.d.forward_cached(&p.corrupted, fake)?;
                let loss = d_loss(real_s.data(), fake_s.data())?;
                let (gr, gf) = d_loss_grads(real_s.data(), fake_s.data())?;
                let (mut grads, _) = self.d.backward(&real_c, &Tensor::from_vec(1, gr.len(), gr)?)?;
                let (gf_grads, _) = self.d.backward(&fake_c, &Tensor::from_vec(1, gf.len(), gf)?)?;
                for (a, b) in grads.iter_mut().zip(&gf_grads) {
                    a.add_assign(b);
                }
                Ok((f64::from(loss), grads))
            })
            .collect::<Result<Vec<_>>>()?;
        let loss = parts.iter().map(|(l, _)| l).sum::<f64>() / batch.len() as f64;
        check_finite(it, "d_loss", loss)?;
        let grads = mean_grads(parts.into_iter().map(|(_, g)| g).collect(), it, "discriminator")?;
        self.opt_d.step(&mut self.d, &grads)?;
        Ok(loss)
    }

    /// One generator update against the current discriminator. Returns the
    /// batch means of the adversarial, temporal and spectral losses.
    pub fn generator_step(&mut self, batch: &[&TrainingPair], fakes: &[(Tensor, GeneratorCache)]) -> Result<[f64; 3]> {
        check_batch(batch, fakes)?;
        let it = self.iteration;
        let w = self.weights;
        let parts = batch
            .par_iter()
            .zip(fakes)
            .map(|(p, (fake, cache))| {
                let (scores, d_cache) = self.d.forward_cached(&p.corrupted, fake)?;
                let adv = g_adv_loss(scores.data());
                let d_scores = g_adv_grad(scores.data());
                let (_, mut d_fake) = self.d.backward(&d_cache, &Tensor::from_vec(1, d_scores.len(), d_scores)?)?;
                let td = loss_td(p.clean.data(), fake.data())?;
                let td_grad = loss_td_grad(p.clean.data(), fake.data())?;
                let (fd, fd_grad) = loss_fd_grad(p.clean.data(), fake.data())?;
                let (a, b) = (w.lambda_td as f32, w.lambda_fd as f32);
                for ((g, &t), &f) in d_fake.data_mut().iter_mut().zip(&td_grad).zip(&fd_grad) {
                    *g += a * t + b * f;
                }
                let grads = self.g.backward(cache, &d_fake)?;
                Ok(([f64::from(adv), f64::from(td), f64::from(fd)], grads))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sums = [0.0f64; 3];
        for (l, _) in &parts {
            for (s, v) in sums.iter_mut().zip(l) {
                *s += v;
            }
        }
        let means = sums.map(|s| s / batch.len() as f64);
        for (what, v) in ["g_adv", "loss_td", "loss_fd"].into_iter().zip(means) {
            check_finite(it, what, v)?;
        }
        let grads = mean_grads(parts.into_iter().map(|(_, g)| g).collect(), it, "generator")?;
        self.opt_g.step(&mut self.g, &grads)?;
        Ok(means)
    }

    /// One discriminator update on real and generated pairs, then one
    /// generator update against the updated discriminator. Gradients are
    /// averaged over the batch in a fixed order.
    pub fn train_step(&mut self, batch: &[&TrainingPair]) -> Result<LossReport> {
        if batch.is_empty() {
            return Err(input_err!("empty batch"));
        }
        self.iteration += 1;
        let fakes = self.generate(batch)?;
        let d_loss = self.discriminator_step(batch, &fakes)?;
        let [g_adv, td, fd] = self.generator_step(batch, &fakes)?;
        Ok(LossReport {
            d_loss,
            g_adv,
            loss_td: td,
            loss_fd: fd,
            total: total_g_loss(g_adv, td, fd, &self.weights),
        })
    }
}

fn check_batch(batch: &[&TrainingPair], fakes: &[(Tensor, GeneratorCache)]) -> Result<()> {
    if batch.is_empty() || batch.len() != fakes.len() {
        return Err(input_err!("batch of {} pairs with {} generated outputs", batch.len(), fakes.len()));
    }
    Ok(())
}

/// Mean SDR of the generator's output on normalized pairs.
pub fn validation_sdr(g: &Generator, pairs: &[TrainingPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(config_err!("validation split is empty"));
    }
    let s = pairs
        .par_iter()
        .map(|p| sdr(p.clean.data(), g.forward(&p.corrupted)?.data()))
        .collect::<Result<Vec<_>>>()?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Mean SDR of the corrupted inputs themselves.
pub fn baseline_sdr(pairs: &[TrainingPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(config_err!("validation split is empty"));
    }
    let s = pairs
        .iter()
        .map(|p| sdr(p.clean.data(), p.corrupted.data()))
        .collect::<Result<Vec<_>>>()?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    #[serde(flatten)]
    pub losses: LossReport,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub val_sdr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub last: Checkpoint,
    pub best_iteration: usize,
    pub best_val_sdr: f64,
    pub last_val_sdr: f64,
    /// Mean SDR of the unrestored validation inputs.
    pub baseline_val_sdr: f64,
    pub log: Vec<IterationLog>,
}

impl TrainOutcome {
    /// Writes `best.ckpt`, `last.ckpt` and `train_log.jsonl` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.best.write(dir.join("best.ckpt"))?;
        self.last.write(dir.join("last.ckpt"))?;
        let path = dir.join("train_log.jsonl");
        let mut out = Vec::new();
        for entry in &self.log {
            serde_json::to_writer(&mut out, entry).expect("log entries serialize");
            out.push(b'\n');
        }
        fs::File::create(&path)
            .and_then(|mut f| f.write_all(&out))
            .map_err(|e| Error::io(&path, e))
    }
}

/// Trains for `cfg.max_iterations` steps over reshuffled passes of `train`,
/// validating every `cfg.validate_every` steps and after the final step.
pub fn train(
    train: &[TrainingPair],
    val: &[TrainingPair],
    cfg: &TrainConfig,
    sample_rate: Option<u32>,
    mut on_iteration: impl FnMut(&IterationLog),
) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(config_err!("training split is empty"));
    }
    if cfg.max_iterations == 0 {
        return Err(config_err!("max_iterations must be at least 1"));
    }
    let baseline_val_sdr = baseline_sdr(val)?;
    let mut trainer = Trainer::new(cfg)?;
    let mut shuffle = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut cursor = order.len();
    let batch_size = cfg.batch_size.min(train.len());

    let mut log = Vec::with_capacity(cfg.max_iterations);
    let mut best: Option<(f64, usize, Checkpoint)> = None;
    let mut last_val_sdr = f64::NAN;
    for it in 1..=cfg.max_iterations {
        let started = Instant::now();
        let mut batch = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            if cursor == order.len() {
                order.shuffle(&mut shuffle);
                cursor = 0;
            }
            batch.push(&train[order[cursor]]);
            cursor += 1;
        }
        let losses = trainer.train_step(&batch)?;
        let val_sdr = if it % cfg.validate_every == 0 || it == cfg.max_iterations {
            let v = validation_sdr(&trainer.g, val)?;
            last_val_sdr = v;
            if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
                best = Some((v, it, Checkpoint::from_models(&trainer.g, Some(&trainer.d), sample_rate)?));
            }
            Some(v)
        } else {
            None
        };
        let entry = IterationLog {
            iteration: it,
            losses,
            seconds: started.elapsed().as_secs_f64(),
            val_sdr,
        };
        on_iteration(&entry);
        log.push(entry);
    }
    let (best_val_sdr, best_iteration, best) = best.expect("validated after the final step");
    Ok(TrainOutcome {
        best,
        last: Checkpoint::from_models(&trainer.g, Some(&trainer.d), sample_rate)?,
        best_iteration,
        best_val_sdr,
        last_val_sdr,
        baseline_val_sdr,
        log,
    })
}

/// Loads the train and validation splits of `manifest` and runs [`train`].
pub fn train_from_manifest(
    manifest: &Manifest,
    cfg: &TrainConfig,
    on_iteration: impl FnMut(&IterationLog),
) -> Result<TrainOutcome> {
    let (train_pairs, rate) = load_pairs(manifest, Split::Train)?;
    let (val_pairs, _) = load_pairs(manifest, Split::Val)?;
    if train_pairs.is_empty() || val_pairs.is_empty() {
        return Err(config_err!(
            "manifest needs train and val records (found {} and {})",
            train_pairs.len(),
            val_pairs.len()
        ));
    }
    train(&train_pairs, &val_pairs, cfg, rate, on_iteration)
}

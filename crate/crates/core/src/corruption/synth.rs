//! Synthetic stand-ins for speech corpora, impulse-response banks and
//! background recordings, used when licensed data is unavailable.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{config_err, Error, Result};
use crate::wav::write_wav;

/// Exponentially decaying noise tail with a unit direct path at sample 0.
///
/// The tail is uniform noise in (−1, 1) shaped by `exp(−6.91·t/T60)`, so the
/// energy envelope falls by 60 dB at `t = T60` and the direct path stays the peak.
pub fn synth_test_rir<R: Rng + ?Sized>(t60_seconds: f64, length: usize, sample_rate: u32, rng: &mut R) -> Result<Vec<f32>> {
    if t60_seconds.is_nan() || t60_seconds <= 0.0 {
        return Err(config_err!("t60 must be positive, got {t60_seconds}"));
    }
    if length == 0 || sample_rate == 0 {
        return Err(config_err!("impulse response needs positive length and sample rate"));
    }
    let decay = 6.91 / (t60_seconds * f64::from(sample_rate));
    let mut h: Vec<f64> = (0..length)
        .map(|n| rng.random_range(-1.0..1.0) * (-decay * n as f64).exp())
        .collect();
    h[0] = 1.0;
    let p = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(h.iter().map(|v| (v / p) as f32).collect())
}

/// Voiced, syllable-like bursts: a few formant-weighted harmonics of a
/// gliding fundamental, some followed by a high-passed noise burst standing
/// in for a fricative, over a faint room-noise floor.
pub fn speech_like<R: Rng + ?Sized>(len: usize, sample_rate: u32, rng: &mut R) -> Vec<f32> {
    let fs = f64::from(sample_rate);
    let mut out = vec![0.0f64; len];
    let base_f0 = rng.random_range(90.0..230.0);
    let mut pos = (rng.random_range(0.0..0.1) * fs) as usize;
    while pos < len {
        let dur = (rng.random_range(0.08..0.3) * fs) as usize;
        let f0 = base_f0 * rng.random_range(0.85..1.2);
        let glide = rng.random_range(-0.25..0.25);
        let f1 = rng.random_range(300.0..850.0);
        let f2 = rng.random_range(900.0..2400.0);
        let gain = rng.random_range(0.3..1.0);
        let mut phase = 0.0f64;
        let harmonics = ((0.45 * fs / f0) as usize).clamp(1, 24);
        let amps: Vec<f64> = (1..=harmonics)
            .map(|k| {
                let f = k as f64 * f0;
                let g = |c: f64, bw: f64| (-((f - c) / bw).powi(2)).exp();
                (g(f1, 180.0) + 0.6 * g(f2, 250.0) + 0.05) / k as f64
            })
            .collect();
        for n in 0..dur.min(len - pos) {
            let t = n as f64 / dur as f64;
            let env = (PI * t).sin().powf(0.7);
            let f = f0 * (1.0 + glide * t);
            phase += 2.0 * PI * f / fs;
            let s: f64 = amps.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * phase).sin()).sum();
            out[pos + n] += gain * env * s;
        }
        pos += dur;
        if rng.random_bool(0.4) && pos < len {
            let fdur = (rng.random_range(0.04..0.12) * fs) as usize;
            let fgain = gain * rng.random_range(0.1..0.3);
            let mut prev = 0.0f64;
            for n in 0..fdur.min(len - pos) {
                let w: f64 = rng.sample(StandardNormal);
                let env = (PI * n as f64 / fdur as f64).sin();
                out[pos + n] += fgain * env * (w - prev);
                prev = w;
            }
            pos += fdur;
        }
        pos += (rng.random_range(0.02..0.15) * fs) as usize;
    }
    for v in out.iter_mut() {
        *v += 5e-3 * rng.sample::<f64, _>(StandardNormal);
    }
    let p = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let level = rng.random_range(0.3..0.9);
    out.iter().map(|v| (v / p * level) as f32).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Roughly 1/f spectrum.
    Pink,
    /// Integrated white noise with a leak; dominated by low frequencies.
    Brown,
    /// Several overlapping speech-like talkers.
    Babble,
    /// Mains hum harmonics over a pink floor.
    Hum,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [NoiseKind::Pink, NoiseKind::Brown, NoiseKind::Babble, NoiseKind::Hum];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Pink => "pink",
            NoiseKind::Brown => "brown",
            NoiseKind::Babble => "babble",
            NoiseKind::Hum => "hum",
        }
    }
}

fn pink<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    // Paul Kellet's economy filter.
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    (0..len)
        .map(|_| {
            let w: f64 = rng.sample(StandardNormal);
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            b0 + b1 + b2 + w * 0.1848
        })
        .collect()
}

/// Background recording of the given kind, peak-normalized to 0.5.
pub fn synth_noise<R: Rng + ?Sized>(kind: NoiseKind, len: usize, sample_rate: u32, rng: &mut R) -> Vec<f32> {
    let fs = f64::from(sample_rate);
    let x: Vec<f64> = match kind {
        NoiseKind::Pink => pink(len, rng),
        NoiseKind::Brown => {
            let mut acc = 0.0;
            (0..len)
                .map(|_| {
                    acc = 0.995 * acc + rng.sample::<f64, _>(StandardNormal);
                    acc
                })
                .collect()
        }
        NoiseKind::Babble => {
            let mut sum = vec![0.0f64; len];
            for _ in 0..5 {
                for (s, v) in sum.iter_mut().zip(speech_like(len, sample_rate, rng)) {
                    *s += f64::from(v);
                }
            }
            sum
        }
        NoiseKind::Hum => {
            let mains = if rng.random_bool(0.5) { 50.0 } else { 60.0 };
            let floor = pink(len, rng);
            (0..len)
                .map(|n| {
                    let t = n as f64 / fs;
                    let h: f64 = (1..=6).map(|k| (2.0 * PI * mains * k as f64 * t).sin() / k as f64).sum();
                    h + 0.05 * floor[n]
                })
                .collect()
        }
    };
    let p = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    x.iter().map(|v| (v / p * 0.5) as f32).collect()
}

/// Layout of a generated toy corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyCorpusSpec {
    pub clean_files: usize,
    pub clean_len: usize,
    pub rirs: usize,
    pub mixtures: usize,
    pub mixture_len: usize,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for ToyCorpusSpec {
    fn default() -> Self {
        ToyCorpusSpec {
            clean_files: 12,
            clean_len: crate::SEGMENT_LEN,
            rirs: 4,
            mixtures: 4,
            mixture_len: 3 * crate::SEGMENT_LEN,
            sample_rate: 16000,
            seed: 0,
        }
    }
}

/// Writes `clean/`, `rirs/` and `mixtures/` WAV directories under `dir`.
pub fn write_toy_corpus(dir: &Path, spec: &ToyCorpusSpec) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let fs = spec.sample_rate;
    let sub = |name: &str| -> Result<std::path::PathBuf> {
        let p = dir.join(name);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    let (clean, rirs, mixtures) = (sub("clean")?, sub("rirs")?, sub("mixtures")?);
    for i in 0..spec.clean_files {
        let x = speech_like(spec.clean_len, fs, &mut rng);
        write_wav(clean.join(format!("utt{i:04}.wav")), fs, &x)?;
    }
    for i in 0..spec.rirs {
        let t60 = rng.random_range(0.2..0.8);
        let len = (t60 * f64::from(fs)) as usize;
        let h = synth_test_rir(t60, len.max(1), fs, &mut rng)?;
        write_wav(rirs.join(format!("rir{i:02}.wav")), fs, &h)?;
    }
    for i in 0..spec.mixtures {
        let kind = NoiseKind::ALL[i % NoiseKind::ALL.len()];
        let m = synth_noise(kind, spec.mixture_len, fs, &mut rng);
        write_wav(mixtures.join(format!("{}{i:02}.wav", kind.name())), fs, &m)?;
    }
    Ok(())
}

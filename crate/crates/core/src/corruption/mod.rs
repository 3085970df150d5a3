//! Randomized real-world corruption: reverberation, additive background
//! mixtures and white noise, blended with random severities and accepted
//! only when the result lands in a target SDR window.

mod dataset;
mod synth;

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dsp::{convolve_full, peak, rms};
use crate::error::{config_err, input_err, Error, Result};
use crate::metrics::sdr;
use crate::wav::read_wav;

pub use dataset::{
    build_dataset, derive_seed, load_clean_dir, CleanCorpus, CleanSegment, DatasetComposition, DatasetOptions,
    DatasetSummary,
};
pub use synth::{speech_like, synth_noise, synth_test_rir, write_toy_corpus, NoiseKind, ToyCorpusSpec};

pub const DEFAULT_SDR_MIN: f64 = -6.0;
pub const DEFAULT_SDR_MAX: f64 = 6.0;
pub const DEFAULT_MAX_RETRIES: usize = 100;

/// Peak below which a segment counts as silent.
pub const SILENCE_PEAK: f32 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ArtifactFlags {
    pub reverb: bool,
    pub mixture: bool,
    pub awgn: bool,
}

impl ArtifactFlags {
    pub const ALL: ArtifactFlags = ArtifactFlags {
        reverb: true,
        mixture: true,
        awgn: true,
    };

    pub fn any(self) -> bool {
        self.reverb || self.mixture || self.awgn
    }

    pub fn count(self) -> usize {
        usize::from(self.reverb) + usize::from(self.mixture) + usize::from(self.awgn)
    }
}

impl fmt::Display for ArtifactFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "reverb={} mixture={} awgn={}", self.reverb, self.mixture, self.awgn)
    }
}

/// A named artifact waveform (impulse response or background recording).
#[derive(Debug, Clone, PartialEq)]
pub struct NamedAudio {
    pub id: String,
    pub samples: Vec<f32>,
}

/// A file that was passed over while loading audio, with the reason.
#[derive(Debug, Clone)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ArtifactBank {
    pub rirs: Vec<NamedAudio>,
    pub mixtures: Vec<NamedAudio>,
    pub sample_rate: Option<u32>,
}

pub(crate) fn wav_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn file_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

impl ArtifactBank {
    /// Loads every WAV in the given directories. Unreadable files, files at a
    /// different sample rate, silent impulse responses and mixtures shorter
    /// than `min_mixture_len` are skipped and reported.
    pub fn load(
        rir_dir: Option<&Path>,
        mixture_dir: Option<&Path>,
        sample_rate: Option<u32>,
        min_mixture_len: usize,
    ) -> Result<(Self, Vec<SkippedFile>)> {
        let mut bank = ArtifactBank {
            sample_rate,
            ..Default::default()
        };
        let mut skipped = Vec::new();
        for (dir, is_rir) in [(rir_dir, true), (mixture_dir, false)] {
            let Some(dir) = dir else { continue };
            for path in wav_files(dir)? {
                let wav = match read_wav(&path) {
                    Ok(w) => w,
                    Err(e) => {
                        skipped.push(SkippedFile {
                            path,
                            reason: e.to_string(),
                        });
                        continue;
                    }
                };
                let rate = *bank.sample_rate.get_or_insert(wav.sample_rate);
                let reason = if wav.sample_rate != rate {
                    Some(format!("sample rate {} differs from {rate}", wav.sample_rate))
                } else if is_rir && peak(&wav.samples) <= SILENCE_PEAK {
                    Some("silent impulse response".to_string())
                } else if !is_rir && wav.samples.len() < min_mixture_len {
                    Some(format!("{} samples, need at least {min_mixture_len}", wav.samples.len()))
                } else {
                    None
                };
                if let Some(reason) = reason {
                    skipped.push(SkippedFile { path, reason });
                    continue;
                }
                let item = NamedAudio {
                    id: file_id(&path),
                    samples: wav.samples,
                };
                if is_rir {
                    bank.rirs.push(item);
                } else {
                    bank.mixtures.push(item);
                }
            }
        }
        Ok((bank, skipped))
    }

    /// Errors when a requested artifact type has nothing to draw from.
    pub fn check_supports(&self, flags: ArtifactFlags) -> Result<()> {
        if flags.reverb && self.rirs.is_empty() {
            return Err(config_err!("reverberation requested but the impulse-response bank is empty"));
        }
        if flags.mixture && self.mixtures.is_empty() {
            return Err(config_err!("mixture requested but the background-mixture bank is empty"));
        }
        Ok(())
    }
}

/// Provenance of one accepted corrupted segment.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionRecipe {
    pub flags: ArtifactFlags,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rir_id: Option<String>,
    pub mixture_id: Option<String>,
    pub mixture_offset: Option<usize>,
    pub achieved_sdr_db: f64,
    pub seed: u64,
    /// Weight draws used, including the accepted one.
    pub attempts: usize,
}

/// Each flag on with probability ½, redrawn until at least one is on.
pub fn select_artifacts<R: Rng + ?Sized>(rng: &mut R) -> ArtifactFlags {
    loop {
        let f = ArtifactFlags {
            reverb: rng.random_bool(0.5),
            mixture: rng.random_bool(0.5),
            awgn: rng.random_bool(0.5),
        };
        if f.any() {
            return f;
        }
    }
}

fn check_weight(name: &str, w: f64) -> Result<()> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(config_err!("{name} = {w} outside [0, 1]"))
    }
}

fn rms_matched(component: &[f32], target_rms: f32) -> Vec<f32> {
    let r = rms(component);
    if r <= 0.0 {
        return vec![0.0; component.len()];
    }
    let g = f64::from(target_rms) / f64::from(r);
    component.iter().map(|&v| (f64::from(v) * g) as f32).collect()
}

/// The reverberant component: `x ∗ rir` truncated to `x.len()` and RMS-matched to `x`.
pub fn reverb_wet(x: &[f32], rir: &[f32]) -> Result<Vec<f32>> {
    if rir.is_empty() || peak(rir) <= SILENCE_PEAK {
        return Err(input_err!("impulse response is empty or silent"));
    }
    if x.is_empty() {
        return Err(input_err!("cannot reverberate an empty signal"));
    }
    let mut wet = convolve_full(x, rir)?;
    wet.truncate(x.len());
    Ok(rms_matched(&wet, rms(x)))
}

/// `m` samples of `mixture` starting at `offset`, RMS-matched to `x`.
pub fn mixture_crop(x: &[f32], mixture: &[f32], offset: usize) -> Result<Vec<f32>> {
    let end = offset
        .checked_add(x.len())
        .filter(|&e| e <= mixture.len())
        .ok_or_else(|| input_err!("mixture crop [{offset}, {offset}+{}) exceeds {} samples", x.len(), mixture.len()))?;
    Ok(rms_matched(&mixture[offset..end], rms(x)))
}

/// Standard-normal noise of length `x.len()`, RMS-matched to `x`.
pub fn awgn_component<R: Rng + ?Sized>(x: &[f32], rng: &mut R) -> Vec<f32> {
    let n: Vec<f32> = (0..x.len()).map(|_| rng.sample::<f64, _>(StandardNormal) as f32).collect();
    rms_matched(&n, rms(x))
}

fn add_scaled(x: &[f32], component: &[f32], w: f64) -> Vec<f32> {
    let w = w as f32;
    x.iter().zip(component).map(|(&a, &c)| a + w * c).collect()
}

fn dry_wet(x: &[f32], wet: &[f32], alpha: f64) -> Vec<f32> {
    let a = alpha as f32;
    x.iter().zip(wet).map(|(&d, &w)| (1.0 - a) * d + a * w).collect()
}

/// `(1−α)·x + α·wet` with the RMS-matched reverberant `wet`.
pub fn apply_reverb(x: &[f32], rir: &[f32], alpha: f64) -> Result<Vec<f32>> {
    check_weight("alpha", alpha)?;
    Ok(dry_wet(x, &reverb_wet(x, rir)?, alpha))
}

/// `x + β·crop` with an RMS-matched crop of the background recording.
pub fn add_mixture(x: &[f32], mixture: &[f32], beta: f64, offset: usize) -> Result<Vec<f32>> {
    check_weight("beta", beta)?;
    Ok(add_scaled(x, &mixture_crop(x, mixture, offset)?, beta))
}

/// `x + γ·n` with white Gaussian `n` RMS-matched to `x`.
pub fn add_awgn<R: Rng + ?Sized>(x: &[f32], gamma: f64, rng: &mut R) -> Result<Vec<f32>> {
    check_weight("gamma", gamma)?;
    Ok(add_scaled(x, &awgn_component(x, rng), gamma))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptOptions {
    /// `None` draws flags with [`select_artifacts`].
    pub flags: Option<ArtifactFlags>,
    /// Fixed `(α, β, γ)`; disables redraws.
    pub weights: Option<(f64, f64, f64)>,
    pub sdr_min: f64,
    pub sdr_max: f64,
    pub max_retries: usize,
}

impl Default for CorruptOptions {
    fn default() -> Self {
        CorruptOptions {
            flags: None,
            weights: None,
            sdr_min: DEFAULT_SDR_MIN,
            sdr_max: DEFAULT_SDR_MAX,
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }
}

/// Corrupts `x` with reverb → mixture → AWGN for the selected artifacts,
/// redrawing the severities until the SDR against `x` falls inside
/// `[sdr_min, sdr_max]`. All randomness comes from `seed`.
pub fn corrupt_segment(
    x: &[f32],
    bank: &ArtifactBank,
    seed: u64,
    opts: &CorruptOptions,
) -> Result<(Vec<f32>, CorruptionRecipe)> {
    if opts.sdr_min > opts.sdr_max {
        return Err(config_err!("sdr_min {} exceeds sdr_max {}", opts.sdr_min, opts.sdr_max));
    }
    if peak(x) <= SILENCE_PEAK {
        return Err(input_err!("cannot corrupt a silent segment"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flags = match opts.flags {
        Some(f) if !f.any() => return Err(config_err!("at least one artifact type must be selected")),
        Some(f) => f,
        None => select_artifacts(&mut rng),
    };
    bank.check_supports(flags)?;
    if let Some((a, b, g)) = opts.weights {
        check_weight("alpha", a)?;
        check_weight("beta", b)?;
        check_weight("gamma", g)?;
    }

    let mut recipe = CorruptionRecipe {
        flags,
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
        rir_id: None,
        mixture_id: None,
        mixture_offset: None,
        achieved_sdr_db: f64::NAN,
        seed,
        attempts: 0,
    };
    let wet = if flags.reverb {
        let rir = &bank.rirs[rng.random_range(0..bank.rirs.len())];
        recipe.rir_id = Some(rir.id.clone());
        Some(reverb_wet(x, &rir.samples)?)
    } else {
        None
    };
    let crop = if flags.mixture {
        let mix = &bank.mixtures[rng.random_range(0..bank.mixtures.len())];
        if mix.samples.len() < x.len() {
            return Err(input_err!("mixture {} is shorter than the segment", mix.id));
        }
        let offset = rng.random_range(0..=mix.samples.len() - x.len());
        recipe.mixture_id = Some(mix.id.clone());
        recipe.mixture_offset = Some(offset);
        Some(mixture_crop(x, &mix.samples, offset)?)
    } else {
        None
    };
    let noise = flags.awgn.then(|| awgn_component(x, &mut rng));

    let attempts = if opts.weights.is_some() { 1 } else { opts.max_retries };
    for attempt in 1..=attempts {
        let (a, b, g) = opts.weights.unwrap_or_else(|| {
            (
                if flags.reverb { rng.random::<f64>() } else { 0.0 },
                if flags.mixture { rng.random::<f64>() } else { 0.0 },
                if flags.awgn { rng.random::<f64>() } else { 0.0 },
            )
        });
        let mut y = match &wet {
            Some(w) => dry_wet(x, w, a),
            None => x.to_vec(),
        };
        if let Some(c) = &crop {
            y = add_scaled(&y, c, b);
        }
        if let Some(n) = &noise {
            y = add_scaled(&y, n, g);
        }
        let s = sdr(x, &y)?;
        if (opts.sdr_min..=opts.sdr_max).contains(&s) {
            recipe.alpha = if flags.reverb { a } else { 0.0 };
            recipe.beta = if flags.mixture { b } else { 0.0 };
            recipe.gamma = if flags.awgn { g } else { 0.0 };
            recipe.achieved_sdr_db = s;
            recipe.attempts = attempt;
            return Ok((y, recipe));
        }
    }
    Err(Error::RetryExhausted { flags, attempts })
}

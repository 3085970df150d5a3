//! Dataset assembly: clean segment pools, composition control and the
//! manifest of corrupted pairs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{corrupt_segment, wav_files, ArtifactBank, CorruptOptions, CorruptionRecipe, SkippedFile, SILENCE_PEAK};
use crate::dsp::peak;
use crate::error::{config_err, Error, Result};
use crate::manifest::{Condition, Manifest, ManifestRecord, Split};
use crate::metrics::sdr;
use crate::wav::{quantize, read_wav, write_wav};
use crate::SEGMENT_LEN;

/// Record counts per split and condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetComposition {
    counts: BTreeMap<(Split, Condition), usize>,
}

impl Default for DatasetComposition {
    fn default() -> Self {
        Self::timit()
    }
}

impl DatasetComposition {
    pub fn empty() -> Self {
        DatasetComposition { counts: BTreeMap::new() }
    }

    fn from_rows(rows: [(Split, [usize; 4]); 3]) -> Self {
        let mut c = Self::empty();
        for (split, row) in rows {
            for (cond, n) in Condition::ALL.into_iter().zip(row) {
                c.set(split, cond, n);
            }
        }
        c
    }

    /// Speech corpus layout: 3000 / 1000 / 1453 records.
    pub fn timit() -> Self {
        Self::from_rows([
            (Split::Train, [1500, 500, 500, 500]),
            (Split::Val, [500, 166, 166, 168]),
            (Split::Test, [703, 250, 250, 250]),
        ])
    }

    /// Music corpus layout.
    pub fn gtzan() -> Self {
        Self::from_rows([
            (Split::Train, [1250, 500, 500, 500]),
            (Split::Val, [500, 166, 166, 168]),
            (Split::Test, [830, 276, 276, 278]),
        ])
    }

    pub fn get(&self, split: Split, cond: Condition) -> usize {
        self.counts.get(&(split, cond)).copied().unwrap_or(0)
    }

    pub fn set(&mut self, split: Split, cond: Condition, n: usize) {
        self.counts.insert((split, cond), n);
    }

    pub fn split_total(&self, split: Split) -> usize {
        Condition::ALL.iter().map(|&c| self.get(split, c)).sum()
    }

    pub fn total(&self) -> usize {
        Split::ALL.iter().map(|&s| self.split_total(s)).sum()
    }

    /// Distinct clean segments a split needs. Single-artifact groups are
    /// disjoint slices of the pool; the all-artifact records reuse it.
    pub fn pool_size(&self, split: Split) -> usize {
        let singles: usize = [Condition::Awgn, Condition::Mixture, Condition::Reverb]
            .iter()
            .map(|&c| self.get(split, c))
            .sum();
        singles.max(self.get(split, Condition::All))
    }

    /// Parses `timit`, `gtzan`, or a list like `all:4,awgn:2,val.all:2`.
    /// Entries without a split prefix count toward the training split.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "timit" => return Ok(Self::timit()),
            "gtzan" => return Ok(Self::gtzan()),
            _ => {}
        }
        let mut c = Self::empty();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (key, n) = item
                .split_once(':')
                .ok_or_else(|| config_err!("composition entry {item:?} is not key:count"))?;
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| config_err!("composition count {n:?} is not a non-negative integer"))?;
            let (split, cond) = match key.split_once('.') {
                Some((s, c)) => (s.parse()?, c.parse()?),
                None => (Split::Train, key.parse()?),
            };
            c.set(split, cond, c.get(split, cond) + n);
        }
        if c.total() == 0 {
            return Err(config_err!("composition {s:?} requests no records"));
        }
        Ok(c)
    }
}

/// One 32000-sample clean excerpt and where it came from.
#[derive(Debug, Clone)]
pub struct CleanSegment {
    pub source: PathBuf,
    pub index: usize,
    pub samples: Vec<f32>,
}

#[derive(Debug, Clone, Default)]
pub struct CleanCorpus {
    pub segments: Vec<CleanSegment>,
    pub sample_rate: Option<u32>,
    pub files_seen: usize,
}

/// Cuts every WAV in `dir` into non-overlapping segments. Files shorter than
/// one segment are zero-padded; trailing remainders are dropped; silent
/// segments are discarded.
pub fn load_clean_dir(dir: &Path) -> Result<(CleanCorpus, Vec<SkippedFile>)> {
    let mut corpus = CleanCorpus::default();
    let mut skipped = Vec::new();
    for path in wav_files(dir)? {
        corpus.files_seen += 1;
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
        let rate = *corpus.sample_rate.get_or_insert(wav.sample_rate);
        if wav.sample_rate != rate {
            skipped.push(SkippedFile {
                path,
                reason: format!("sample rate {} differs from {rate}", wav.sample_rate),
            });
            continue;
        }
        let mut samples = wav.samples;
        if samples.len() < SEGMENT_LEN {
            samples.resize(SEGMENT_LEN, 0.0);
        }
        for (index, chunk) in samples.chunks_exact(SEGMENT_LEN).enumerate() {
            if peak(chunk) > SILENCE_PEAK {
                corpus.segments.push(CleanSegment {
                    source: path.clone(),
                    index,
                    samples: chunk.to_vec(),
                });
            }
        }
    }
    Ok((corpus, skipped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOptions {
    pub seed: u64,
    pub sdr_min: f64,
    pub sdr_max: f64,
    pub max_retries: usize,
    /// Fresh artifact draws allowed after a record exhausts its weight retries.
    pub max_reselections: usize,
    pub sample_rate: u32,
}

impl DatasetOptions {
    pub fn new(seed: u64, sample_rate: u32) -> Self {
        DatasetOptions {
            seed,
            sdr_min: super::DEFAULT_SDR_MIN,
            sdr_max: super::DEFAULT_SDR_MAX,
            max_retries: super::DEFAULT_MAX_RETRIES,
            max_reselections: 50,
            sample_rate,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSummary {
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
}

impl DatasetSummary {
    pub fn count(&self, split: Split, cond: Condition) -> usize {
        self.manifest.records.iter().filter(|r| r.split == split && r.condition == cond).count()
    }

    /// Achieved SDRs bucketed into 2 dB bins over [−6, 6]; returns `(lower edge, count)`.
    pub fn sdr_histogram(&self) -> Vec<(f64, usize)> {
        let mut bins: Vec<(f64, usize)> = (0..6).map(|i| (-6.0 + 2.0 * f64::from(i), 0)).collect();
        for r in &self.manifest.records {
            let i = (((r.achieved_sdr_db + 6.0) / 2.0).floor().max(0.0) as usize).min(bins.len() - 1);
            bins[i].1 += 1;
        }
        bins
    }
}

/// SplitMix64 finalizer applied to `seed + index`, giving each record its own stream.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Job {
    split: Split,
    condition: Condition,
    clean: usize,
}

struct Emitted {
    clean: Vec<f32>,
    corrupted: Vec<f32>,
    recipe: CorruptionRecipe,
}

/// Corrupts one record, reselecting artifacts whenever weight retries run
/// out. The pair is scaled jointly to avoid clipping, quantized to 16 bits,
/// and the SDR window is checked again on what will actually be written.
fn emit(x: &[f32], bank: &ArtifactBank, cond: Condition, record_seed: u64, opts: &DatasetOptions) -> Result<Emitted> {
    let copts = CorruptOptions {
        flags: Some(cond.flags()),
        weights: None,
        sdr_min: opts.sdr_min,
        sdr_max: opts.sdr_max,
        max_retries: opts.max_retries,
    };
    let mut last_err = None;
    for round in 0..=opts.max_reselections as u64 {
        let seed = derive_seed(record_seed, round);
        let (y, mut recipe) = match corrupt_segment(x, bank, seed, &copts) {
            Ok(v) => v,
            Err(e @ Error::RetryExhausted { .. }) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let top = peak(x).max(peak(&y));
        let gain = if top > 0.99 { 0.99 / top } else { 1.0 };
        let scale = |v: &[f32]| -> Vec<f32> { quantize(&v.iter().map(|s| s * gain).collect::<Vec<_>>()) };
        let (xq, yq) = (scale(x), scale(&y));
        let s = sdr(&xq, &yq)?;
        if (opts.sdr_min..=opts.sdr_max).contains(&s) {
            recipe.achieved_sdr_db = s;
            return Ok(Emitted {
                clean: xq,
                corrupted: yq,
                recipe,
            });
        }
    }
    Err(last_err.unwrap_or(Error::RetryExhausted {
        flags: cond.flags(),
        attempts: opts.max_retries,
    }))
}

/// Writes `clean/`, `corrupted/` and `manifest.jsonl` under `out_dir`.
///
/// Clean segments are shuffled once with `opts.seed` and dealt into disjoint
/// per-split pools. Each record draws from its own seed, so the output does
/// not depend on how the work is scheduled.
pub fn build_dataset(
    corpus: &CleanCorpus,
    bank: &ArtifactBank,
    comp: &DatasetComposition,
    opts: &DatasetOptions,
    out_dir: &Path,
) -> Result<DatasetSummary> {
    for cond in Condition::ALL {
        if Split::ALL.iter().any(|&s| comp.get(s, cond) > 0) {
            bank.check_supports(cond.flags())?;
        }
    }
    let needed: usize = Split::ALL.iter().map(|&s| comp.pool_size(s)).sum();
    if needed > corpus.segments.len() {
        return Err(config_err!(
            "composition needs {needed} clean segments but only {} are available",
            corpus.segments.len()
        ));
    }
    let mut order: Vec<usize> = (0..corpus.segments.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));

    let mut jobs = Vec::with_capacity(comp.total());
    let mut base = 0;
    for split in Split::ALL {
        let mut single_offset = 0;
        for cond in Condition::ALL {
            let n = comp.get(split, cond);
            let start = if cond == Condition::All {
                0
            } else {
                let s = single_offset;
                single_offset += n;
                s
            };
            jobs.extend((0..n).map(|i| Job {
                split,
                condition: cond,
                clean: order[base + start + i],
            }));
        }
        base += comp.pool_size(split);
    }

    let emitted: Vec<Emitted> = jobs
        .par_iter()
        .enumerate()
        .map(|(j, job)| {
            emit(
                &corpus.segments[job.clean].samples,
                bank,
                job.condition,
                derive_seed(opts.seed, j as u64),
                opts,
            )
        })
        .collect::<Result<_>>()?;

    let clean_dir = out_dir.join("clean");
    let corrupted_dir = out_dir.join("corrupted");
    for d in [&clean_dir, &corrupted_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let mut records = Vec::with_capacity(jobs.len());
    for (j, (job, e)) in jobs.iter().zip(&emitted).enumerate() {
        let name = format!("{}_{}_{j:05}.wav", job.split, job.condition);
        write_wav(clean_dir.join(&name), opts.sample_rate, &e.clean)?;
        write_wav(corrupted_dir.join(&name), opts.sample_rate, &e.corrupted)?;
        records.push(ManifestRecord::new(
            format!("clean/{name}"),
            format!("corrupted/{name}"),
            job.split,
            job.condition,
            &e.recipe,
        ));
    }
    let manifest = Manifest {
        root: out_dir.to_path_buf(),
        records,
    };
    let manifest_path = out_dir.join("manifest.jsonl");
    manifest.write(&manifest_path)?;
    Ok(DatasetSummary {
        manifest_path,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_presets_and_parsing() {
        let t = DatasetComposition::default();
        assert_eq!(t.get(Split::Train, Condition::All), 1500);
        assert_eq!(t.split_total(Split::Train), 3000);
        assert_eq!(t.split_total(Split::Val), 1000);
        assert_eq!(t.split_total(Split::Test), 1453);
        assert_eq!(t.pool_size(Split::Train), 1500);
        assert_eq!(DatasetComposition::gtzan().split_total(Split::Test), 1660);

        let c = DatasetComposition::parse("all:4,awgn:2,mix:2,reverb:2").unwrap();
        assert_eq!(c.split_total(Split::Train), 10);
        assert_eq!(c.total(), 10);
        assert_eq!(c.pool_size(Split::Train), 6);
        let c = DatasetComposition::parse("all:8, val.all:4").unwrap();
        assert_eq!(c.get(Split::Val, Condition::All), 4);
        assert!(DatasetComposition::parse("all").is_err());
        assert!(DatasetComposition::parse("echo:3").is_err());
        assert!(DatasetComposition::parse("all:-1").is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}

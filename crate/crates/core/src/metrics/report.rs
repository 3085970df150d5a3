//! Dataset-level evaluation of restored files against a manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::{fwssnr, sdr, segsnr, stoi, FwSsnrParams, SegSnrParams};
use crate::error::{config_err, input_err, Error, Result};
use crate::manifest::{Condition, Manifest, ManifestRecord, Split};
use crate::wav::read_wav;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sdr,
    SegSnr,
    FwSsnr,
    Stoi,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Sdr, Metric::SegSnr, Metric::FwSsnr, Metric::Stoi];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Sdr => "sdr",
            Metric::SegSnr => "segsnr",
            Metric::FwSsnr => "fwssnr",
            Metric::Stoi => "stoi",
        }
    }

    /// Comma-separated metric names, e.g. `sdr,stoi`.
    pub fn parse_list(s: &str) -> Result<Vec<Metric>> {
        let mut out: Vec<Metric> = Vec::new();
        for m in s.split(',').map(str::trim).filter(|m| !m.is_empty()) {
            let m: Metric = m.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(config_err!("no metrics selected"));
        }
        Ok(out)
    }

    pub fn compute(self, reference: &[f32], estimate: &[f32], fs: u32) -> Result<f64> {
        match self {
            Metric::Sdr => sdr(reference, estimate),
            Metric::SegSnr => segsnr(reference, estimate, &SegSnrParams::default()),
            Metric::FwSsnr => fwssnr(reference, estimate, fs, &FwSsnrParams::default()),
            Metric::Stoi => stoi(reference, estimate, fs),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| config_err!("unknown metric {s:?} (expected sdr, segsnr, fwssnr or stoi)"))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ItemReport {
    pub clean_path: String,
    pub corrupted_path: String,
    pub restored_path: PathBuf,
    pub split: Split,
    pub condition: Condition,
    /// Metric values of the corrupted input against the clean reference.
    pub corrupted: BTreeMap<&'static str, f64>,
    pub restored: BTreeMap<&'static str, f64>,
    /// Set when the item could not be scored; such items are left out of the means.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitSummary {
    pub split: Split,
    pub metric: Metric,
    pub count: usize,
    pub corrupted_mean: f64,
    pub restored_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub metrics: Vec<Metric>,
    pub items: Vec<ItemReport>,
    pub summary: Vec<SplitSummary>,
    pub failed: usize,
}

impl MetricReport {
    pub fn mean(&self, split: Split, metric: Metric) -> Option<&SplitSummary> {
        self.summary.iter().find(|s| s.split == split && s.metric == metric)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// One row per (split, metric) with corrupted and restored means.
pub fn write_csv_summary(report: &MetricReport, path: &Path) -> Result<()> {
    let mut out = String::from("split,metric,count,corrupted_mean,restored_mean,improvement\n");
    for s in &report.summary {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6}",
            s.split,
            s.metric.name(),
            s.count,
            s.corrupted_mean,
            s.restored_mean,
            s.restored_mean - s.corrupted_mean
        )
        .expect("writing to a String");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Restored files are looked up in `restored_dir` under the corrupted file's name.
pub fn restored_path_for(record: &ManifestRecord, restored_dir: &Path) -> PathBuf {
    let name = Path::new(&record.corrupted_path).file_name().unwrap_or_default();
    restored_dir.join(name)
}

fn score(manifest: &Manifest, record: &ManifestRecord, restored: &Path, metrics: &[Metric]) -> Result<[BTreeMap<&'static str, f64>; 2]> {
    let clean = read_wav(manifest.resolve(&record.clean_path))?;
    let corrupted = read_wav(manifest.resolve(&record.corrupted_path))?;
    let restored = read_wav(restored)?;
    for (what, w) in [("corrupted", &corrupted), ("restored", &restored)] {
        if w.samples.len() != clean.samples.len() {
            return Err(input_err!(
                "{what} file has {} samples, clean has {}",
                w.samples.len(),
                clean.samples.len()
            ));
        }
    }
    let mut out = [BTreeMap::new(), BTreeMap::new()];
    for &m in metrics {
        out[0].insert(m.name(), m.compute(&clean.samples, &corrupted.samples, clean.sample_rate)?);
        out[1].insert(m.name(), m.compute(&clean.samples, &restored.samples, clean.sample_rate)?);
    }
    Ok(out)
}

/// Scores every record (optionally one split) of `manifest`.
pub fn evaluate_set(manifest: &Manifest, restored_dir: &Path, metrics: &[Metric], split: Option<Split>) -> Result<MetricReport> {
    if metrics.is_empty() {
        return Err(config_err!("no metrics selected"));
    }
    let records: Vec<&ManifestRecord> = manifest
        .records
        .iter()
        .filter(|r| split.is_none_or(|s| r.split == s))
        .collect();
    let items: Vec<ItemReport> = records
        .par_iter()
        .map(|r| {
            let restored_path = restored_path_for(r, restored_dir);
            let (corrupted, restored, error) = match score(manifest, r, &restored_path, metrics) {
                Ok([c, rr]) => (c, rr, None),
                Err(e) => (BTreeMap::new(), BTreeMap::new(), Some(e.to_string())),
            };
            ItemReport {
                clean_path: r.clean_path.clone(),
                corrupted_path: r.corrupted_path.clone(),
                restored_path,
                split: r.split,
                condition: r.condition,
                corrupted,
                restored,
                error,
            }
        })
        .collect();

    let mut summary = Vec::new();
    for s in Split::ALL {
        let scored: Vec<&ItemReport> = items.iter().filter(|i| i.split == s && i.error.is_none()).collect();
        if scored.is_empty() {
            continue;
        }
        for &m in metrics {
            let mean = |pick: fn(&ItemReport) -> &BTreeMap<&'static str, f64>| {
                scored.iter().map(|i| pick(i)[m.name()]).sum::<f64>() / scored.len() as f64
            };
            summary.push(SplitSummary {
                split: s,
                metric: m,
                count: scored.len(),
                corrupted_mean: mean(|i| &i.corrupted),
                restored_mean: mean(|i| &i.restored),
            });
        }
    }
    let failed = items.iter().filter(|i| i.error.is_some()).count();
    Ok(MetricReport {
        metrics: metrics.to_vec(),
        items,
        summary,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_list_parsing() {
        assert_eq!(Metric::parse_list("sdr").unwrap(), vec![Metric::Sdr]);
        assert_eq!(
            Metric::parse_list("sdr, STOI,sdr").unwrap(),
            vec![Metric::Sdr, Metric::Stoi]
        );
        assert!(Metric::parse_list("pesq").is_err());
        assert!(Metric::parse_list("").is_err());
    }
}

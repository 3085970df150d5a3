//! JSON-lines dataset index: one record per clean/corrupted pair.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corruption::{ArtifactFlags, CorruptionRecipe};
use crate::error::{config_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(config_err!("unknown split {s:?}")),
        }
    }
}

/// Which artifacts a record was generated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    All,
    Awgn,
    Mixture,
    Reverb,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::All, Condition::Awgn, Condition::Mixture, Condition::Reverb];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::All => "all",
            Condition::Awgn => "awgn",
            Condition::Mixture => "mixture",
            Condition::Reverb => "reverb",
        }
    }

    pub fn flags(self) -> ArtifactFlags {
        match self {
            Condition::All => ArtifactFlags::ALL,
            Condition::Awgn => ArtifactFlags {
                awgn: true,
                ..ArtifactFlags::default()
            },
            Condition::Mixture => ArtifactFlags {
                mixture: true,
                ..ArtifactFlags::default()
            },
            Condition::Reverb => ArtifactFlags {
                reverb: true,
                ..ArtifactFlags::default()
            },
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Condition::All),
            "awgn" | "noise" => Ok(Condition::Awgn),
            "mixture" | "mix" => Ok(Condition::Mixture),
            "reverb" => Ok(Condition::Reverb),
            _ => Err(config_err!("unknown condition {s:?}")),
        }
    }
}

/// One manifest line. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub clean_path: String,
    pub corrupted_path: String,
    pub split: Split,
    pub condition: Condition,
    pub use_reverb: bool,
    pub use_mixture: bool,
    pub use_awgn: bool,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rir_id: Option<String>,
    pub mixture_id: Option<String>,
    pub mixture_offset: Option<usize>,
    pub achieved_sdr_db: f64,
    pub seed: u64,
}

impl ManifestRecord {
    pub fn new(clean_path: String, corrupted_path: String, split: Split, condition: Condition, r: &CorruptionRecipe) -> Self {
        ManifestRecord {
            clean_path,
            corrupted_path,
            split,
            condition,
            use_reverb: r.flags.reverb,
            use_mixture: r.flags.mixture,
            use_awgn: r.flags.awgn,
            alpha: r.alpha,
            beta: r.beta,
            gamma: r.gamma,
            rir_id: r.rir_id.clone(),
            mixture_id: r.mixture_id.clone(),
            mixture_offset: r.mixture_offset,
            achieved_sdr_db: r.achieved_sdr_db,
            seed: r.seed,
        }
    }

    pub fn flags(&self) -> ArtifactFlags {
        ArtifactFlags {
            reverb: self.use_reverb,
            mixture: self.use_mixture,
            awgn: self.use_awgn,
        }
    }
}

/// A manifest together with the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub root: PathBuf,
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<_>>()?;
        Ok(Manifest {
            root: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            records,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut out, r).expect("manifest records serialize");
            out.push(b'\n');
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&out).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }
}

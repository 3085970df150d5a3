//! Binary checkpoint: `"OPG1"`, version, Q, entry count, then named
//! little-endian f32 arrays.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{config_err, Error, Result};
use crate::models::{build_discriminator, build_generator, count_params, Discriminator, Generator, ModelParams, Network, ParamArray};

const MAGIC: &[u8; 4] = b"OPG1";
pub const CHECKPOINT_VERSION: u32 = 1;
const SAMPLE_RATE_ENTRY: &str = "meta.sample_rate";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub order: u32,
    pub params: ModelParams<f32>,
    /// Rate of the training audio, when known.
    pub sample_rate: Option<u32>,
}

impl Checkpoint {
    pub fn from_models(g: &Generator, d: Option<&Discriminator>, sample_rate: Option<u32>) -> Result<Self> {
        let mut params = g.params();
        if let Some(d) = d {
            if d.order != g.order {
                return Err(config_err!("generator order {} differs from discriminator order {}", g.order, d.order));
            }
            params.extend(d.params())?;
        }
        Ok(Checkpoint {
            order: g.order as u32,
            params,
            sample_rate,
        })
    }

    fn prefixed_count(&self, prefix: &str) -> usize {
        self.params
            .arrays
            .iter()
            .filter(|a| a.name.starts_with(prefix))
            .map(|a| a.data.len())
            .sum()
    }

    pub fn generator_params(&self) -> usize {
        self.prefixed_count("g.")
    }

    pub fn discriminator_params(&self) -> usize {
        self.prefixed_count("d.")
    }

    pub fn generator(&self) -> Result<Generator> {
        let mut g = build_generator(self.order as usize, &mut ChaCha8Rng::seed_from_u64(0))?;
        g.load_params(&self.params)?;
        Ok(g)
    }

    /// `None` for generator-only checkpoints.
    pub fn discriminator(&self) -> Result<Option<Discriminator>> {
        if self.discriminator_params() == 0 {
            return Ok(None);
        }
        let mut d = build_discriminator(self.order as usize, &mut ChaCha8Rng::seed_from_u64(0))?;
        d.load_params(&self.params)?;
        Ok(Some(d))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = self.sample_rate.map(|r| ParamArray {
            name: SAMPLE_RATE_ENTRY.to_string(),
            dims: vec![1],
            data: vec![r as f32],
        });
        let entries: Vec<&ParamArray> = self.params.arrays.iter().chain(meta.as_ref()).collect();
        let mut out = Vec::with_capacity(16 + 4 * count_params(&self.params));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.order.to_le_bytes());
        out.extend_from_slice(&u32::try_from(entries.len()).map_err(|_| config_err!("too many entries"))?.to_le_bytes());
        for a in entries {
            let name = a.name.as_bytes();
            let name_len = u16::try_from(name.len()).map_err(|_| config_err!("entry name {} too long", a.name))?;
            let rank = u8::try_from(a.dims.len()).map_err(|_| config_err!("entry {} has too many dims", a.name))?;
            if a.dims.iter().product::<usize>() != a.data.len() {
                return Err(config_err!("entry {} dims {:?} disagree with {} values", a.name, a.dims, a.data.len()));
            }
            out.extend_from_slice(&name_len.to_le_bytes());
            out.extend_from_slice(name);
            out.push(rank);
            for &d in &a.dims {
                let d = u32::try_from(d).map_err(|_| config_err!("entry {} dim too large", a.name))?;
                out.extend_from_slice(&d.to_le_bytes());
            }
            for v in &a.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    /// `source` only labels errors.
    pub fn from_bytes(bytes: &[u8], source: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, source };
        if r.take(4)? != MAGIC {
            return Err(Error::format(source, "not a checkpoint (bad magic)"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(source, format!("unsupported checkpoint version {version}")));
        }
        let order = r.u32()?;
        let count = r.u32()?;
        let mut params = ModelParams::default();
        let mut sample_rate = None;
        for _ in 0..count {
            let name_len = usize::from(r.u16()?);
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::format(source, "entry name is not UTF-8"))?
                .to_string();
            let rank = usize::from(r.take(1)?[0]);
            let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n = dims
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| Error::format(source, format!("entry {name} is too large")))?;
            let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::format(source, "entry too large"))?)?;
            let data: Vec<f32> = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
            if name == SAMPLE_RATE_ENTRY {
                sample_rate = data.first().map(|&v| v as u32);
                continue;
            }
            let entry = ModelParams {
                arrays: vec![ParamArray { name, dims, data }],
            };
            params.extend(entry).map_err(|e| Error::format(source, e.to_string()))?;
        }
        if r.pos != bytes.len() {
            return Err(Error::format(source, "trailing bytes after the last entry"));
        }
        Ok(Checkpoint {
            order,
            params,
            sample_rate,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    source: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(self.source, "truncated checkpoint"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

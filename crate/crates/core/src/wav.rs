//! Mono 16-bit PCM WAV files.
//!
//! Samples map to floats as `s / 32768` on read and
//! `clamp(round(x·32768), −32768, 32767)` on write.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WavFile {
    pub sample_rate: u32,
    pub channels: u16,
    pub bits_per_sample: u16,
    pub samples: Vec<f32>,
}

pub fn from_pcm(s: i16) -> f32 {
    f32::from(s) / 32768.0
}

pub fn to_pcm(x: f32) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Snaps samples onto the 16-bit grid they would occupy after a write/read cycle.
pub fn quantize(x: &[f32]) -> Vec<f32> {
    x.iter().map(|&v| from_pcm(to_pcm(v))).collect()
}

fn hound_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<WavFile> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| hound_err(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::format(
            path,
            format!(
                "expected mono 16-bit PCM, found {} channel(s), {}-bit {:?}",
                spec.channels, spec.bits_per_sample, spec.sample_format
            ),
        ));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(from_pcm))
        .collect::<Result<Vec<f32>, _>>()
        .map_err(|e| hound_err(path, e))?;
    Ok(WavFile {
        sample_rate: spec.sample_rate,
        channels: 1,
        bits_per_sample: 16,
        samples,
    })
}

pub fn write_wav(path: impl AsRef<Path>, sample_rate: u32, samples: &[f32]) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| hound_err(path, e))?;
    let mut pcm = w.get_i16_writer(samples.len() as u32);
    for &s in samples {
        pcm.write_sample(to_pcm(s));
    }
    pcm.flush().map_err(|e| hound_err(path, e))?;
    w.finalize().map_err(|e| hound_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcm_mapping_edges() {
        assert_eq!(to_pcm(1.0), 32767);
        assert_eq!(to_pcm(-1.0), -32768);
        assert_eq!(to_pcm(-2.0), -32768);
        assert_eq!(to_pcm(0.5), 16384);
        assert_eq!(from_pcm(-32768), -1.0);
        for s in [-32768i16, -1, 0, 1, 12345, 32767] {
            assert_eq!(to_pcm(from_pcm(s)), s);
        }
    }

    #[test]
    fn write_read_write_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.wav");
        let b = dir.path().join("b.wav");
        let x: Vec<f32> = (0..1000).map(|i| ((i as f32) * 0.02).sin() * 0.7).collect();
        write_wav(&a, 16000, &x).unwrap();
        let w = read_wav(&a).unwrap();
        assert_eq!(w.sample_rate, 16000);
        assert_eq!(w.samples, quantize(&x));
        write_wav(&b, w.sample_rate, &w.samples).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn rejects_stereo() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&p), Err(Error::Format { .. })));
        assert!(matches!(read_wav(dir.path().join("missing.wav")), Err(Error::Io { .. })));
    }
}

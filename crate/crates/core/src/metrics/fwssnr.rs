use crate::dsp::{stft, Spectrogram};
use crate::error::{input_err, Result};
use crate::metrics::snr::clamped_snr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwSsnrParams {
    pub frame: usize,
    pub hop: usize,
    pub bands: usize,
    /// Exponent of the band-magnitude weights.
    pub gamma: f64,
    pub floor_db: f64,
    pub ceil_db: f64,
}

impl Default for FwSsnrParams {
    fn default() -> Self {
        FwSsnrParams {
            frame: 512,
            hop: 256,
            bands: 25,
            gamma: 0.2,
            floor_db: -10.0,
            ceil_db: 35.0,
        }
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// `bands × (n_fft/2 + 1)` triangular filters with mel-spaced edges over `[0, fs/2]`.
pub fn mel_filterbank(bands: usize, n_fft: usize, fs: f64) -> Vec<Vec<f64>> {
    let top = hz_to_mel(fs / 2.0);
    let edges: Vec<f64> = (0..bands + 2).map(|i| mel_to_hz(top * i as f64 / (bands + 1) as f64)).collect();
    let bin_hz = fs / n_fft as f64;
    (0..bands)
        .map(|b| {
            let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            (0..=n_fft / 2)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// Weighted mean of clamped band SNRs for one frame, `None` when every weight is zero.
pub fn fwssnr_frame(reference: &[f64], estimate: &[f64], p: &FwSsnrParams) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&b, &e) in reference.iter().zip(estimate) {
        let w = b.powf(p.gamma);
        if w <= 0.0 {
            continue;
        }
        let snr = clamped_snr(b * b, (b - e) * (b - e), p.floor_db, p.ceil_db);
        num += w * snr;
        den += w;
    }
    (den > 0.0).then(|| num / den)
}

fn band_magnitudes(s: &Spectrogram<f64>, bank: &[Vec<f64>]) -> Vec<Vec<f64>> {
    s.frames
        .iter()
        .map(|frame| {
            bank.iter()
                .map(|filt| filt.iter().zip(frame).map(|(&w, c)| w * c.norm()).sum())
                .collect()
        })
        .collect()
}

/// Frequency-weighted segmental SNR over mel bands, in dB.
pub fn fwssnr(reference: &[f32], estimate: &[f32], fs: u32, p: &FwSsnrParams) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(input_err!("fwssnr: lengths {} and {} differ", reference.len(), estimate.len()));
    }
    let r: Vec<f64> = reference.iter().map(|&v| f64::from(v)).collect();
    let e: Vec<f64> = estimate.iter().map(|&v| f64::from(v)).collect();
    let sr = stft(&r, p.frame, p.hop)?;
    let se = stft(&e, p.frame, p.hop)?;
    let bank = mel_filterbank(p.bands, p.frame, f64::from(fs));
    let br = band_magnitudes(&sr, &bank);
    let be = band_magnitudes(&se, &bank);
    let scores: Vec<f64> = br.iter().zip(&be).filter_map(|(a, b)| fwssnr_frame(a, b, p)).collect();
    if scores.is_empty() {
        return Err(input_err!("fwssnr: reference is silent"));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_band_frame_matches_scalar_oracle() {
        let p = FwSsnrParams::default();
        let (b1, e1, b2, e2) = (2.0f64, 1.5f64, 0.5f64, 0.1f64);
        let s1 = 10.0 * (b1 * b1 / ((b1 - e1) * (b1 - e1))).log10();
        let s2 = 10.0 * (b2 * b2 / ((b2 - e2) * (b2 - e2))).log10();
        let (w1, w2) = (b1.powf(0.2), b2.powf(0.2));
        let oracle = (w1 * s1 + w2 * s2) / (w1 + w2);
        let got = fwssnr_frame(&[b1, b2], &[e1, e2], &p).unwrap();
        assert!((got - oracle).abs() < 1e-6);
        assert!(fwssnr_frame(&[0.0, 0.0], &[1.0, 1.0], &p).is_none());
    }

    #[test]
    fn filterbank_covers_every_band() {
        let bank = mel_filterbank(25, 512, 16000.0);
        assert_eq!(bank.len(), 25);
        assert!(bank.iter().all(|f| f.iter().any(|&w| w > 0.0)));
    }
}

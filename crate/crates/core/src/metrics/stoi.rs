//! Short-time objective intelligibility with the canonical parameters:
//! 10 kHz analysis, 256-sample Hann frames zero-padded to a 512-point FFT,
//! 15 one-third-octave bands from 150 Hz, 30-frame (384 ms) envelopes,
//! −15 dB clipping bound and 40 dB silent-frame removal.

use crate::dsp::rfft;
use crate::error::{input_err, Result};
use crate::metrics::resample::resample_poly;

pub const STOI_FS: usize = 10000;
const FRAME: usize = 256;
const NFFT: usize = 512;
const BANDS: usize = 15;
const MIN_FREQ: f64 = 150.0;
const SEGMENT: usize = 30;
const BETA_DB: f64 = -15.0;
const DYN_RANGE_DB: f64 = 40.0;
const EPS: f64 = f64::EPSILON;

/// Symmetric Hann of length `n` without its zero endpoints.
fn hanning_inner(n: usize) -> Vec<f64> {
    let m = (n + 2) as f64;
    (1..=n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (m - 1.0)).cos())
        .collect()
}

fn frame_starts(len: usize, frame: usize, hop: usize) -> impl Iterator<Item = usize> {
    (0..len.saturating_sub(frame)).step_by(hop)
}

/// Drops frames more than `DYN_RANGE_DB` below the loudest reference frame and
/// overlap-adds the survivors.
fn remove_silent_frames(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hop = FRAME / 2;
    let w = hanning_inner(FRAME);
    let starts: Vec<usize> = frame_starts(x.len(), FRAME, hop).collect();
    let energy = |s: usize| {
        let n: f64 = (0..FRAME).map(|i| (w[i] * x[s + i]).powi(2)).sum::<f64>().sqrt();
        20.0 * (n + EPS).log10()
    };
    let energies: Vec<f64> = starts.iter().map(|&s| energy(s)).collect();
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energies)
        .filter(|(_, &e)| max - DYN_RANGE_DB - e < 0.0)
        .map(|(&s, _)| s)
        .collect();
    if kept.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let out_len = (kept.len() - 1) * hop + FRAME;
    let mut xs = vec![0.0; out_len];
    let mut ys = vec![0.0; out_len];
    for (j, &s) in kept.iter().enumerate() {
        for i in 0..FRAME {
            xs[j * hop + i] += w[i] * x[s + i];
            ys[j * hop + i] += w[i] * y[s + i];
        }
    }
    (xs, ys)
}

/// Power spectra of Hann frames zero-padded to `NFFT`, `frames × (NFFT/2+1)`.
fn power_frames(x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let w = hanning_inner(FRAME);
    frame_starts(x.len(), FRAME, FRAME / 2)
        .map(|s| {
            let mut buf = vec![0.0; NFFT];
            for i in 0..FRAME {
                buf[i] = w[i] * x[s + i];
            }
            Ok(rfft(&buf)?.iter().map(|c| c.norm_sqr()).collect())
        })
        .collect()
}

/// One-third-octave band bin ranges `[lo, hi)` at 10 kHz / 512-point FFT.
fn third_octave_bands() -> Vec<(usize, usize)> {
    let freqs: Vec<f64> = (0..=NFFT / 2).map(|k| k as f64 * STOI_FS as f64 / NFFT as f64).collect();
    let nearest = |target: f64| {
        let mut best = 0;
        for (i, f) in freqs.iter().enumerate() {
            if (f - target).powi(2) < (freqs[best] - target).powi(2) {
                best = i;
            }
        }
        best
    };
    (0..BANDS)
        .map(|k| {
            let k = k as f64;
            let lo = MIN_FREQ * 2f64.powf((2.0 * k - 1.0) / 6.0);
            let hi = MIN_FREQ * 2f64.powf((2.0 * k + 1.0) / 6.0);
            (nearest(lo), nearest(hi))
        })
        .collect()
}

fn band_envelopes(frames: &[Vec<f64>], bands: &[(usize, usize)]) -> Vec<Vec<f64>> {
    bands
        .iter()
        .map(|&(lo, hi)| frames.iter().map(|f| f[lo..hi].iter().sum::<f64>().sqrt()).collect())
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn centred_unit(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|a| *a -= mean);
    let n = norm(v) + EPS;
    v.iter_mut().for_each(|a| *a /= n);
}

/// STOI of `estimate` against the clean `reference`, both sampled at `fs` Hz.
pub fn stoi(reference: &[f32], estimate: &[f32], fs: u32) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(input_err!("stoi: lengths {} and {} differ", reference.len(), estimate.len()));
    }
    if (fs as usize) < STOI_FS {
        return Err(input_err!("stoi: sample rate {fs} Hz is below {STOI_FS} Hz"));
    }
    let to64 = |s: &[f32]| s.iter().map(|&v| f64::from(v)).collect::<Vec<f64>>();
    let x = resample_poly(&to64(reference), fs as usize, STOI_FS);
    let y = resample_poly(&to64(estimate), fs as usize, STOI_FS);
    let (x, y) = remove_silent_frames(&x, &y);
    let xf = power_frames(&x)?;
    let yf = power_frames(&y)?;
    if xf.len() < SEGMENT {
        return Err(input_err!(
            "stoi: {} frames of retained signal, need at least {SEGMENT} (384 ms)",
            xf.len()
        ));
    }
    let bands = third_octave_bands();
    let x_env = band_envelopes(&xf, &bands);
    let y_env = band_envelopes(&yf, &bands);
    let clip = 10f64.powf(-BETA_DB / 20.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for m in SEGMENT..=xf.len() {
        for (xb, yb) in x_env.iter().zip(&y_env) {
            let mut xs = xb[m - SEGMENT..m].to_vec();
            let ys = &yb[m - SEGMENT..m];
            let scale = norm(&xs) / (norm(ys) + EPS);
            let mut yp: Vec<f64> = ys
                .iter()
                .zip(&xs)
                .map(|(&yv, &xv)| (yv * scale).min(xv * (1.0 + clip)))
                .collect();
            centred_unit(&mut yp);
            centred_unit(&mut xs);
            total += yp.iter().zip(&xs).map(|(a, b)| a * b).sum::<f64>();
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_edges_are_increasing() {
        let b = third_octave_bands();
        assert_eq!(b.len(), 15);
        assert!(b.iter().all(|&(lo, hi)| lo < hi));
        assert!(b.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn hann_inner_matches_symmetric_definition() {
        let w = hanning_inner(4);
        // np.hanning(6)[1:-1]
        let want = [0.3454915, 0.9045085, 0.9045085, 0.3454915];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn short_input_is_rejected() {
        let x: Vec<f32> = (0..3000).map(|i| (i as f32 * 0.1).sin()).collect();
        assert!(stoi(&x, &x, 10000).is_err());
        assert!(stoi(&x, &x, 8000).is_err());
    }
}

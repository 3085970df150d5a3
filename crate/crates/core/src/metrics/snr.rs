use crate::dsp::frame_count;
use crate::error::{input_err, Result};

pub const SDR_CAP_DB: f64 = 100.0;

fn energy(x: impl Iterator<Item = f64>) -> f64 {
    x.map(|v| v * v).sum()
}

/// `10·log10(Σref² / Σ(ref − est)²)`, capped at [`SDR_CAP_DB`].
pub fn sdr(reference: &[f32], estimate: &[f32]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(input_err!("sdr: lengths {} and {} differ", reference.len(), estimate.len()));
    }
    let e_ref = energy(reference.iter().map(|&v| f64::from(v)));
    if e_ref <= 0.0 {
        return Err(input_err!("sdr: silent reference"));
    }
    let e_res = energy(reference.iter().zip(estimate).map(|(&r, &e)| f64::from(r) - f64::from(e)));
    if e_res <= 1e-12 * e_ref {
        return Ok(SDR_CAP_DB);
    }
    Ok((10.0 * (e_ref / e_res).log10()).min(SDR_CAP_DB))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegSnrParams {
    pub frame: usize,
    pub hop: usize,
    pub floor_db: f64,
    pub ceil_db: f64,
    /// Frames whose reference energy is at or below this are skipped.
    pub min_energy: f64,
}

impl Default for SegSnrParams {
    fn default() -> Self {
        SegSnrParams {
            frame: 512,
            hop: 256,
            floor_db: -10.0,
            ceil_db: 35.0,
            min_energy: 1e-10,
        }
    }
}

pub(crate) fn clamped_snr(signal: f64, noise: f64, floor: f64, ceil: f64) -> f64 {
    if noise <= 0.0 {
        return ceil;
    }
    if signal <= 0.0 {
        return floor;
    }
    (10.0 * (signal / noise).log10()).clamp(floor, ceil)
}

/// Mean of per-frame clamped SNRs over non-silent reference frames.
pub fn segsnr(reference: &[f32], estimate: &[f32], p: &SegSnrParams) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(input_err!("segsnr: lengths {} and {} differ", reference.len(), estimate.len()));
    }
    if reference.len() < p.frame {
        return Err(input_err!("segsnr: {} samples is shorter than one frame", reference.len()));
    }
    let mut sum = 0.0;
    let mut kept = 0usize;
    for t in 0..frame_count(reference.len(), p.frame, p.hop) {
        let span = t * p.hop..t * p.hop + p.frame;
        let r = &reference[span.clone()];
        let e = &estimate[span];
        let sig = energy(r.iter().map(|&v| f64::from(v)));
        if sig <= p.min_energy {
            continue;
        }
        let noise = energy(r.iter().zip(e).map(|(&a, &b)| f64::from(a) - f64::from(b)));
        sum += clamped_snr(sig, noise, p.floor_db, p.ceil_db);
        kept += 1;
    }
    if kept == 0 {
        return Err(input_err!("segsnr: reference has no non-silent frames"));
    }
    Ok(sum / kept as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(n: usize) -> Vec<f32> {
        (0..n).map(|i| (i as f32 * 0.05).sin() * 0.5).collect()
    }

    #[test]
    fn sdr_examples() {
        let x = tone(1000);
        assert_eq!(sdr(&x, &x).unwrap(), SDR_CAP_DB);
        assert!((sdr(&x, &vec![0.0; 1000]).unwrap()).abs() < 1e-9);
        assert!(sdr(&[0.0; 4], &[1.0; 4]).is_err());
        assert!(sdr(&x, &x[..10]).is_err());
    }

    #[test]
    fn segsnr_examples() {
        let p = SegSnrParams::default();
        let x = tone(4096);
        assert_eq!(segsnr(&x, &x, &p).unwrap(), 35.0);
        let twice: Vec<f32> = x.iter().map(|v| 2.0 * v).collect();
        assert!(segsnr(&x, &twice, &p).unwrap().abs() < 1e-9);
        let loud: Vec<f32> = x.iter().enumerate().map(|(i, v)| v + if i % 2 == 0 { 100.0 } else { -100.0 }).collect();
        assert_eq!(segsnr(&x, &loud, &p).unwrap(), -10.0);
        assert!(segsnr(&[0.0; 1024], &[0.0; 1024], &p).is_err());
        assert!(segsnr(&x[..100], &x[..100], &p).is_err());
    }
}

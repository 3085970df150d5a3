//! Least-squares adversarial losses and the temporal / log-spectral
//! reconstruction losses of the generator objective, each with its gradient.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dsp::{fft_in_place, stft};
use crate::error::{input_err, Result};
use crate::tensor::Real;

pub const FD_FRAME: usize = 256;
pub const FD_HOP: usize = 128;
/// Magnitude floor applied before `log10`.
pub const MAG_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Weight of the waveform MSE term.
    pub lambda_td: f64,
    /// Weight of the log-spectral MSE term.
    pub lambda_fd: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_td: 10.0,
            lambda_fd: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub d_loss: f64,
    pub g_adv: f64,
    pub loss_td: f64,
    pub loss_fd: f64,
    pub total: f64,
}

fn same_len<T>(a: &[T], b: &[T], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(input_err!("{what}: lengths {} and {} differ", a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(input_err!("{what}: empty input"));
    }
    Ok(())
}

fn mean_sq<T: Real>(it: impl Iterator<Item = T>, n: usize) -> T {
    it.map(|v| v * v).sum::<T>() / T::lit(n as f64)
}

/// `½·mean((real − 1)²) + ½·mean(fake²)`
pub fn d_loss<T: Real>(real: &[T], fake: &[T]) -> Result<T> {
    same_len(real, fake, "d_loss")?;
    let half = T::lit(0.5);
    Ok(half * mean_sq(real.iter().map(|&r| r - T::one()), real.len()) + half * mean_sq(fake.iter().copied(), fake.len()))
}

/// Gradients of [`d_loss`] w.r.t. the real and fake score vectors.
pub fn d_loss_grads<T: Real>(real: &[T], fake: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    same_len(real, fake, "d_loss")?;
    let inv = T::lit(real.len() as f64).recip();
    Ok((
        real.iter().map(|&r| (r - T::one()) * inv).collect(),
        fake.iter().map(|&f| f * inv).collect(),
    ))
}

/// `½·mean((fake − 1)²)`
pub fn g_adv_loss<T: Real>(fake: &[T]) -> T {
    if fake.is_empty() {
        return T::zero();
    }
    T::lit(0.5) * mean_sq(fake.iter().map(|&f| f - T::one()), fake.len())
}

pub fn g_adv_grad<T: Real>(fake: &[T]) -> Vec<T> {
    let inv = T::lit(fake.len() as f64).recip();
    fake.iter().map(|&f| (f - T::one()) * inv).collect()
}

/// Mean squared waveform error.
pub fn loss_td<T: Real>(target: &[T], generated: &[T]) -> Result<T> {
    same_len(target, generated, "loss_td")?;
    Ok(mean_sq(target.iter().zip(generated).map(|(&t, &g)| t - g), target.len()))
}

/// Gradient of [`loss_td`] w.r.t. `generated`.
pub fn loss_td_grad<T: Real>(target: &[T], generated: &[T]) -> Result<Vec<T>> {
    same_len(target, generated, "loss_td")?;
    let s = T::lit(2.0 / target.len() as f64);
    Ok(target.iter().zip(generated).map(|(&t, &g)| s * (g - t)).collect())
}

fn log_mag<T: Real>(c: &Complex<T>) -> T {
    c.norm().max(T::lit(MAG_FLOOR)).log10()
}

/// Mean squared difference of `log10` floored STFT magnitudes (Hann, 256/128).
pub fn loss_fd<T: Real>(target: &[T], generated: &[T]) -> Result<T> {
    same_len(target, generated, "loss_fd")?;
    let st = stft(target, FD_FRAME, FD_HOP)?;
    let sg = stft(generated, FD_FRAME, FD_HOP)?;
    let bins = st.frames.len() * st.bins();
    let sum: T = st
        .frames
        .iter()
        .flatten()
        .zip(sg.frames.iter().flatten())
        .map(|(a, b)| {
            let d = log_mag(a) - log_mag(b);
            d * d
        })
        .sum();
    Ok(sum / T::lit(bins as f64))
}

/// Value and gradient of [`loss_fd`] w.r.t. `generated`.
pub fn loss_fd_grad<T: Real>(target: &[T], generated: &[T]) -> Result<(T, Vec<T>)> {
    same_len(target, generated, "loss_fd")?;
    let st = stft(target, FD_FRAME, FD_HOP)?;
    let sg = stft(generated, FD_FRAME, FD_HOP)?;
    let n_bins = st.bins();
    let total = T::lit((st.frames.len() * n_bins) as f64);
    let floor = T::lit(MAG_FLOOR);
    let ln10 = T::LN_10();
    let window = crate::dsp::hann_window::<T>(FD_FRAME)?;
    let mut value = T::zero();
    let mut grad = vec![T::zero(); generated.len()];
    let zero = Complex::new(T::zero(), T::zero());
    let mut buf = vec![zero; FD_FRAME];
    for (t, (ft, fg)) in st.frames.iter().zip(&sg.frames).enumerate() {
        buf.fill(zero);
        for (k, (a, b)) in ft.iter().zip(fg).enumerate() {
            let mag = b.norm();
            let d = log_mag(a) - log_mag(b);
            value += d * d;
            if mag > floor {
                // ∂/∂|G| of (lt − lg)² / total
                let d_mag = -T::lit(2.0) * d / (total * mag * ln10);
                let g = Complex::new(b.re * d_mag / mag, b.im * d_mag / mag);
                buf[k] = g.conj();
            }
        }
        // ∂L/∂u_n = Re Σ_k G_k e^{+j2πkn/N} = Re FFT(conj G)_n
        fft_in_place(&mut buf)?;
        let base = t * FD_HOP;
        for n in 0..FD_FRAME {
            grad[base + n] += window[n] * buf[n].re;
        }
    }
    Ok((value / total, grad))
}

/// `g_adv + λ_td·loss_td + λ_fd·loss_fd`
pub fn total_g_loss(g_adv: f64, loss_td: f64, loss_fd: f64, w: &LossWeights) -> f64 {
    g_adv + w.lambda_td * loss_td + w.lambda_fd * loss_fd
}

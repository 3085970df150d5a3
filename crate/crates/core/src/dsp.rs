//! Signal-processing primitives: radix-2 FFT, Hann-window STFT and its
//! inverse, peak normalization, and full linear convolution.

use num_complex::Complex;

use crate::error::{config_err, input_err, Result};
use crate::tensor::Real;

/// In-place iterative radix-2 FFT (forward, `e^{−j2πkn/N}` kernel).
pub fn fft_in_place<T: Real>(buf: &mut [Complex<T>]) -> Result<()> {
    let n = buf.len();
    if !n.is_power_of_two() {
        return Err(config_err!("FFT size {n} is not a power of two"));
    }
    if n <= 1 {
        return Ok(());
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -T::TAU() / T::lit(len as f64);
        let half = len / 2;
        let twiddles: Vec<Complex<T>> = (0..half)
            .map(|k| Complex::from_polar(T::one(), ang * T::lit(k as f64)))
            .collect();
        for chunk in buf.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((a, b), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let t = *b * w;
                *b = *a - t;
                *a = *a + t;
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// Non-negative-frequency bins `0..=N/2` of the DFT of a real frame.
pub fn rfft<T: Real>(frame: &[T]) -> Result<Vec<Complex<T>>> {
    let mut buf: Vec<Complex<T>> = frame.iter().map(|&v| Complex::new(v, T::zero())).collect();
    fft_in_place(&mut buf)?;
    buf.truncate(frame.len() / 2 + 1);
    Ok(buf)
}

/// Real inverse of [`rfft`] for an `n`-point transform.
pub fn irfft<T: Real>(bins: &[Complex<T>], n: usize) -> Result<Vec<T>> {
    if bins.len() != n / 2 + 1 {
        return Err(input_err!("irfft: {} bins for size {n}", bins.len()));
    }
    // x = conj(FFT(conj(X))) / n over the Hermitian-completed spectrum.
    let mut full = vec![Complex::new(T::zero(), T::zero()); n];
    for (k, b) in bins.iter().enumerate() {
        full[k] = b.conj();
        if k > 0 && k < n - k {
            full[n - k] = *b;
        }
    }
    fft_in_place(&mut full)?;
    let scale = T::lit(n as f64).recip();
    Ok(full.into_iter().map(|c| c.re * scale).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Periodic (DFT-even) Hann.
    HannPeriodic,
    Rectangular,
}

impl WindowKind {
    pub fn build<T: Real>(self, n: usize) -> Result<Vec<T>> {
        match self {
            WindowKind::HannPeriodic => hann_window(n),
            WindowKind::Rectangular => Ok(vec![T::one(); n]),
        }
    }
}

/// Periodic Hann window `0.5·(1 − cos(2πn/N))`; constant overlap-add at hop `N/2`.
pub fn hann_window<T: Real>(n: usize) -> Result<Vec<T>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(config_err!("Hann window length {n} must be even and at least 2"));
    }
    let nf = T::lit(n as f64);
    Ok((0..n)
        .map(|i| T::lit(0.5) * (T::one() - (T::TAU() * T::lit(i as f64) / nf).cos()))
        .collect())
}

/// `T × (N/2+1)` complex frames; frames lie fully inside the signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T: Real = f32> {
    pub frame_size: usize,
    pub hop: usize,
    pub window: WindowKind,
    /// Samples in the analysed signal.
    pub signal_len: usize,
    pub frames: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Spectrogram<T> {
    pub fn bins(&self) -> usize {
        self.frame_size / 2 + 1
    }

    pub fn magnitudes(&self) -> impl Iterator<Item = T> + '_ {
        self.frames.iter().flatten().map(|c| c.norm())
    }
}

pub fn frame_count(len: usize, frame: usize, hop: usize) -> usize {
    if len < frame || hop == 0 {
        0
    } else {
        1 + (len - frame) / hop
    }
}

/// Hann STFT with frame size `n` and hop `hop` (`n` a power of two).
pub fn stft<T: Real>(x: &[T], n: usize, hop: usize) -> Result<Spectrogram<T>> {
    stft_with(x, n, hop, WindowKind::HannPeriodic)
}

pub fn stft_with<T: Real>(x: &[T], n: usize, hop: usize, window: WindowKind) -> Result<Spectrogram<T>> {
    if hop == 0 {
        return Err(config_err!("STFT hop must be positive"));
    }
    if x.len() < n {
        return Err(input_err!("STFT input of {} samples is shorter than frame {n}", x.len()));
    }
    let w = window.build::<T>(n)?;
    let frames = (0..frame_count(x.len(), n, hop))
        .map(|t| {
            let seg: Vec<T> = x[t * hop..t * hop + n].iter().zip(&w).map(|(&a, &b)| a * b).collect();
            rfft(&seg)
        })
        .collect::<Result<_>>()?;
    Ok(Spectrogram {
        frame_size: n,
        hop,
        window,
        signal_len: x.len(),
        frames,
    })
}

/// Weighted overlap-add inverse; exact wherever the squared-window sum is nonzero.
pub fn istft<T: Real>(s: &Spectrogram<T>) -> Result<Vec<T>> {
    let n = s.frame_size;
    if s.hop == 0 || s.frames.len() != frame_count(s.signal_len, n, s.hop) {
        return Err(input_err!(
            "spectrogram holds {} frames, metadata implies {}",
            s.frames.len(),
            frame_count(s.signal_len, n, s.hop)
        ));
    }
    if s.frames.iter().any(|f| f.len() != s.bins()) {
        return Err(input_err!("spectrogram frame with wrong bin count"));
    }
    let w = s.window.build::<T>(n)?;
    let mut out = vec![T::zero(); s.signal_len];
    let mut norm = vec![T::zero(); s.signal_len];
    for (t, frame) in s.frames.iter().enumerate() {
        let seg = irfft(frame, n)?;
        let base = t * s.hop;
        for i in 0..n {
            out[base + i] += w[i] * seg[i];
            norm[base + i] += w[i] * w[i];
        }
    }
    let tiny = T::lit(1e-10);
    for (o, &d) in out.iter_mut().zip(&norm) {
        *o = if d > tiny { *o / d } else { T::zero() };
    }
    Ok(out)
}

/// A peak-normalized segment plus the divisor needed to undo it.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSegment {
    pub samples: Vec<f32>,
    pub scale: f32,
    /// Source was all zeros; samples are unchanged and `scale` is 1.
    pub silent: bool,
}

/// Divides by the peak absolute sample value.
pub fn normalize(x: &[f32]) -> NormalizedSegment {
    let peak = x.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    normalize_by(x, peak)
}

/// Divides by a caller-chosen positive `scale` (falls back to 1 when `scale` is 0).
pub fn normalize_by(x: &[f32], scale: f32) -> NormalizedSegment {
    if scale > 0.0 {
        NormalizedSegment {
            samples: x.iter().map(|&v| v / scale).collect(),
            scale,
            silent: false,
        }
    } else {
        NormalizedSegment {
            samples: x.to_vec(),
            scale: 1.0,
            silent: true,
        }
    }
}

pub fn denormalize(n: &NormalizedSegment) -> Vec<f32> {
    n.samples.iter().map(|&v| v * n.scale).collect()
}

/// Full linear convolution, length `x.len() + h.len() − 1`.
///
/// Short kernels are summed directly; longer ones go through a zero-padded
/// FFT evaluated in double precision.
pub fn convolve_full<T: Real>(x: &[T], h: &[T]) -> Result<Vec<T>> {
    if x.is_empty() || h.is_empty() {
        return Err(input_err!("convolve_full needs nonempty inputs"));
    }
    if x.len().min(h.len()) > 64 {
        return convolve_fft(x, h);
    }
    let mut out = vec![T::zero(); x.len() + h.len() - 1];
    for (k, &hk) in h.iter().enumerate() {
        if hk == T::zero() {
            continue;
        }
        for (o, &xv) in out[k..k + x.len()].iter_mut().zip(x) {
            *o += hk * xv;
        }
    }
    Ok(out)
}

fn convolve_fft<T: Real>(x: &[T], h: &[T]) -> Result<Vec<T>> {
    let len = x.len() + h.len() - 1;
    let n = len.next_power_of_two();
    let spectrum = |s: &[T]| -> Result<Vec<Complex<f64>>> {
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (b, &v) in buf.iter_mut().zip(s) {
            b.re = v.to_f64().unwrap_or(0.0);
        }
        fft_in_place(&mut buf)?;
        Ok(buf)
    };
    let hs = spectrum(h)?;
    let mut prod = spectrum(x)?;
    // Inverse via conj(FFT(conj(·)))/n.
    for (p, q) in prod.iter_mut().zip(&hs) {
        *p = (*p * q).conj();
    }
    fft_in_place(&mut prod)?;
    let scale = 1.0 / n as f64;
    Ok(prod[..len].iter().map(|c| T::from_f64_lossy(c.re * scale)).collect())
}

pub fn rms(x: &[f32]) -> f32 {
    if x.is_empty() {
        return 0.0;
    }
    let e: f64 = x.iter().map(|&v| f64::from(v) * f64::from(v)).sum();
    (e / x.len() as f64).sqrt() as f32
}

pub fn peak(x: &[f32]) -> f32 {
    x.iter().fold(0.0f32, |m, v| m.max(v.abs()))
}

use std::f64::consts::PI;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser-windowed sinc low-pass with unit DC gain.
fn lowpass(taps: usize, cutoff: f64, beta: f64) -> Vec<f64> {
    let mid = (taps - 1) as f64 / 2.0;
    let denom = bessel_i0(beta);
    let h: Vec<f64> = (0..taps)
        .map(|n| {
            let m = n as f64 - mid;
            let sinc = if m == 0.0 { 1.0 } else { (PI * cutoff * m).sin() / (PI * cutoff * m) };
            let ratio = m / mid;
            let win = bessel_i0(beta * (1.0 - ratio * ratio).max(0.0).sqrt()) / denom;
            cutoff * sinc * win
        })
        .collect();
    let s: f64 = h.iter().sum();
    h.into_iter().map(|v| v / s).collect()
}

/// Rational-rate polyphase resampling from `from_hz` to `to_hz`.
///
/// Uses a Kaiser (β = 5) windowed-sinc anti-aliasing filter with ten zero
/// crossings per side at the lower of the two rates, applied zero-phase.
/// Output length is `ceil(len · up / down)`.
pub fn resample_poly(x: &[f64], from_hz: usize, to_hz: usize) -> Vec<f64> {
    if from_hz == to_hz {
        return x.to_vec();
    }
    let g = gcd(from_hz, to_hz);
    let (up, down) = (to_hz / g, from_hz / g);
    let max_rate = up.max(down);
    let half = 10 * max_rate;
    let h: Vec<f64> = lowpass(2 * half + 1, 1.0 / max_rate as f64, 5.0)
        .into_iter()
        .map(|v| v * up as f64)
        .collect();
    let out_len = (x.len() * up).div_ceil(down);
    (0..out_len)
        .map(|n| {
            // y[n] = Σ_i x[i]·h[n·down − i·up + half]
            let centre = n * down + half;
            let i_hi = (centre / up).min(x.len().saturating_sub(1));
            let i_lo = centre.saturating_sub(2 * half).div_ceil(up);
            (i_lo..=i_hi)
                .filter(|&i| i < x.len())
                .map(|i| x[i] * h[centre - i * up])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_in_band_tone() {
        // 1 kHz tone at 16 kHz → 10 kHz
        let x: Vec<f64> = (0..16000).map(|n| (2.0 * PI * 1000.0 * n as f64 / 16000.0).sin()).collect();
        let y = resample_poly(&x, 16000, 10000);
        assert_eq!(y.len(), 10000);
        for (n, v) in y.iter().enumerate().take(9800).skip(200) {
            let want = (2.0 * PI * 1000.0 * n as f64 / 10000.0).sin();
            assert!((v - want).abs() < 1e-2, "n={n}: {v} vs {want}");
        }
    }

    #[test]
    fn odd_ratio_length() {
        let y = resample_poly(&vec![0.0; 22050], 22050, 10000);
        assert_eq!(y.len(), 10000);
    }
}

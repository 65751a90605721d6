//! Spectral peak extraction from uniformly sampled real traces.
//!
//! The trace is mean-subtracted, tapered with a 4-term Blackman-Harris window and transformed
//! with a real-input FFT. Peaks are local maxima of the amplitude spectrum, refined by a
//! parabola through the log-magnitudes of the three bins around the maximum.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_TRACE_LEN: usize = 16;

const BLACKMAN_HARRIS: [f64; 4] = [0.35875, 0.48829, 0.14128, 0.01168];

/// A spectral line. `frequency` is angular; `amplitude` is in signal units (a pure
/// `a cos(w t)` yields amplitude `a`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPeak {
    pub frequency: f64,
    pub amplitude: f64,
    pub resolution: f64,
}

/// One-sided amplitude spectrum of a windowed, mean-subtracted trace.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Amplitude per bin `0..=len/2`.
    pub amplitudes: Vec<f64>,
    /// Bin spacing in angular frequency, `2 pi / (len dt)`.
    pub resolution: f64,
    /// Largest `|x|` of the raw trace, used to reject rounding-level maxima.
    signal_scale: f64,
    /// `sqrt(sum w^2) / sum w` of the taper.
    noise_gain: f64,
}

impl Spectrum {
    pub fn new(trace: &[f64], dt: f64) -> Result<Self> {
        let n = trace.len();
        if n < MIN_TRACE_LEN {
            return Err(Error::TooShort { len: n, min: MIN_TRACE_LEN });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("sampling step must be positive, got {dt}")));
        }
        let mean = trace.iter().sum::<f64>() / n as f64;
        let window: Vec<f64> = (0..n)
            .map(|i| {
                let x = TAU * i as f64 / n as f64;
                BLACKMAN_HARRIS[0] - BLACKMAN_HARRIS[1] * x.cos() + BLACKMAN_HARRIS[2] * (2.0 * x).cos()
                    - BLACKMAN_HARRIS[3] * (3.0 * x).cos()
            })
            .collect();
        let gain: f64 = window.iter().sum();
        let mut buf: Vec<Complex<f64>> =
            trace.iter().zip(&window).map(|(&x, &w)| Complex::new((x - mean) * w, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let amplitudes = buf[..=n / 2].iter().map(|z| 2.0 * z.norm() / gain).collect();
        let signal_scale = trace.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let noise_gain = window.iter().map(|w| w * w).sum::<f64>().sqrt() / gain;
        Ok(Self { amplitudes, resolution: TAU / (n as f64 * dt), signal_scale, noise_gain })
    }

    /// Median bin amplitude over the positive-frequency bins.
    pub fn floor(&self) -> f64 {
        let mut v: Vec<f64> = self.amplitudes[1..].to_vec();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    /// Mean bin amplitude produced by independent per-sample noise of standard deviation `sigma`.
    /// The bin value is Rayleigh distributed, so the mean is `sqrt(pi) sigma sqrt(sum w^2) / sum w`.
    pub fn noise_floor(&self, sigma: f64) -> f64 {
        std::f64::consts::PI.sqrt() * sigma * self.noise_gain
    }

    /// Largest amplitude among bins whose centre lies in `[lo, hi]`.
    pub fn max_in_band(&self, lo: f64, hi: f64) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let f = *k as f64 * self.resolution;
                f >= lo && f <= hi
            })
            .fold(0.0_f64, |a, (_, &x)| a.max(x))
    }

    /// All interpolated local maxima, strongest first.
    pub fn peaks(&self) -> Vec<SpectralPeak> {
        let a = &self.amplitudes;
        let threshold = 1e-9 * self.signal_scale;
        let mut peaks = Vec::new();
        for k in 1..a.len().saturating_sub(1) {
            if !(a[k] > a[k - 1] && a[k] >= a[k + 1] && a[k] > threshold) {
                continue;
            }
            let tiny = f64::MIN_POSITIVE;
            let (l, m, rt) = (a[k - 1].max(tiny).ln(), a[k].ln(), a[k + 1].max(tiny).ln());
            let denom = l - 2.0 * m + rt;
            let offset = if denom.abs() > 0.0 { (0.5 * (l - rt) / denom).clamp(-0.5, 0.5) } else { 0.0 };
            let log_amp = m - 0.25 * (l - rt) * offset;
            peaks.push(SpectralPeak {
                frequency: (k as f64 + offset) * self.resolution,
                amplitude: log_amp.exp(),
                resolution: self.resolution,
            });
        }
        peaks.sort_by(|x, y| y.amplitude.total_cmp(&x.amplitude).then(x.frequency.total_cmp(&y.frequency)));
        peaks
    }
}

/// The `max_peaks` strongest spectral lines of `trace` sampled every `dt`.
pub fn dominant_frequencies(trace: &[f64], dt: f64, max_peaks: usize) -> Result<Vec<SpectralPeak>> {
    let mut peaks = Spectrum::new(trace, dt)?.peaks();
    peaks.truncate(max_peaks);
    Ok(peaks)
}

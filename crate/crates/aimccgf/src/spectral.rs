//! Frequency-domain spectral function from a time-domain Green's function.
//!
//! `A(ω) = 2 Δt Re sum_n w_n G(t_n) e^{-2π δ t_n} e^{-i 2π ω t_n}`, with
//! trapezoid weight `w_0 = 1/2` and `w_n = 1` otherwise. A single pole
//! `e^{i 2π ω0 t}` becomes a unit-area Lorentzian of half width `δ` at `ω0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::ed::LehmannData;
use crate::error::{domain, Result};
use crate::series::GreensSeries;

pub const DEFAULT_BROADENING: f64 = 0.1;
pub const DEFAULT_HORIZON: f64 = 50.0;
pub const DEFAULT_STEP: f64 = 0.03;
pub const DEFAULT_PADDING: usize = 4;

/// Samples of `A(ω)` on an ascending frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSeries {
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    pub broadening: f64,
    pub provenance: String,
}

/// A local maximum of a spectral function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub omega: f64,
    pub height: f64,
}

fn damped_samples(series: &GreensSeries, broadening: f64) -> Vec<Complex64> {
    let dt = series.grid.step();
    series
        .total
        .iter()
        .enumerate()
        .map(|(n, g)| {
            let t = n as f64 * dt;
            let weight = if n == 0 { 0.5 } else { 1.0 };
            g * (weight * (-2.0 * PI * broadening * t).exp())
        })
        .collect()
}

fn check_broadening(broadening: f64) -> Result<()> {
    if !(broadening > 0.0 && broadening.is_finite()) {
        return Err(domain(format!(
            "broadening must be positive, got {broadening}"
        )));
    }
    Ok(())
}

/// `A(ω)` on the FFT grid `ω_k = k / (N_pad Δt)`, wrapped to negative
/// frequencies and returned in ascending order.
pub fn spectral_function(
    series: &GreensSeries,
    broadening: f64,
    padding: usize,
) -> Result<SpectralSeries> {
    check_broadening(broadening)?;
    if padding < 1 {
        return Err(domain("padding factor must be at least 1"));
    }
    let dt = series.grid.step();
    let n_pad = series.total.len() * padding;
    let mut buffer = damped_samples(series, broadening);
    buffer.resize(n_pad, Complex64::new(0.0, 0.0));
    FftPlanner::new()
        .plan_fft_forward(n_pad)
        .process(&mut buffer);
    let df = 1.0 / (n_pad as f64 * dt);
    let mut pairs: Vec<(f64, f64)> = buffer
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let signed = if k < n_pad.div_ceil(2) {
                k as f64
            } else {
                k as f64 - n_pad as f64
            };
            (signed * df, 2.0 * dt * x.re)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (omega, values) = pairs.into_iter().unzip();
    Ok(SpectralSeries {
        omega,
        values,
        broadening,
        provenance: format!(
            "{}; broadening={broadening}, padding={padding}",
            series.provenance
        ),
    })
}

/// `A(ω)` at arbitrary frequencies by direct summation.
pub fn spectral_function_at(
    series: &GreensSeries,
    omegas: &[f64],
    broadening: f64,
) -> Result<SpectralSeries> {
    check_broadening(broadening)?;
    let dt = series.grid.step();
    let samples = damped_samples(series, broadening);
    let values = omegas
        .iter()
        .map(|&w| {
            let sum: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(n, g)| g * Complex64::from_polar(1.0, -2.0 * PI * w * n as f64 * dt))
                .sum();
            2.0 * dt * sum.re
        })
        .collect();
    Ok(SpectralSeries {
        omega: omegas.to_vec(),
        values,
        broadening,
        provenance: format!("{}; broadening={broadening}, direct", series.provenance),
    })
}

/// Sum of unit-area Lorentzians weighted by the real parts of the pole weights.
pub fn lorentzian_spectrum(
    poles: &LehmannData,
    omegas: &[f64],
    broadening: f64,
) -> Result<SpectralSeries> {
    check_broadening(broadening)?;
    Ok(SpectralSeries {
        omega: omegas.to_vec(),
        values: omegas
            .iter()
            .map(|&w| poles.broadened(w, broadening))
            .collect(),
        broadening,
        provenance: format!("Lehmann poles; broadening={broadening}"),
    })
}

impl SpectralSeries {
    /// Trapezoid integral over the frequency grid.
    pub fn integral(&self) -> f64 {
        self.omega
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(w, a)| 0.5 * (w[1] - w[0]) * (a[0] + a[1]))
            .sum()
    }

    /// Local maxima higher than `min_fraction` of the global maximum, with
    /// parabolic refinement of the position, in ascending frequency.
    pub fn peaks(&self, min_fraction: f64) -> Vec<Peak> {
        let top = self
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if top.is_nan() || top <= 0.0 {
            return Vec::new();
        }
        let threshold = min_fraction * top;
        (1..self.values.len().saturating_sub(1))
            .filter(|&k| {
                let (l, c, r) = (self.values[k - 1], self.values[k], self.values[k + 1]);
                c > l && c >= r && c >= threshold
            })
            .map(|k| {
                let (l, c, r) = (self.values[k - 1], self.values[k], self.values[k + 1]);
                let curvature = l - 2.0 * c + r;
                let shift = if curvature < 0.0 {
                    0.5 * (l - r) / curvature
                } else {
                    0.0
                };
                let h = self.omega[k + 1] - self.omega[k];
                Peak {
                    omega: self.omega[k] + shift * h,
                    height: c - 0.25 * (l - r) * shift,
                }
            })
            .collect()
    }

    /// Largest pointwise difference to another series on the same grid.
    pub fn max_difference(&self, other: &SpectralSeries) -> Result<f64> {
        if self.omega.len() != other.omega.len() {
            return Err(crate::error::Error::SizeMismatch {
                expected: self.omega.len(),
                found: other.omega.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

//! Uniform time grids and time-domain Green's-function samples.

use num_complex::Complex64;

use crate::error::{domain, Result};

/// Uniform grid `t_n = n * step` for `n = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    step: f64,
    count: usize,
}

impl TimeGrid {
    pub fn new(step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(domain(format!("time step must be positive, got {step}")));
        }
        if count == 0 {
            return Err(domain("time grid needs at least one point"));
        }
        Ok(Self { step, count })
    }

    /// Grid from 0 to `horizon` inclusive, rounding the point count.
    pub fn with_horizon(step: f64, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(domain(format!(
                "horizon must be non-negative, got {horizon}"
            )));
        }
        Self::new(step, (horizon / step).round() as usize + 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.count).map(|n| self.time(n)).collect()
    }
}

/// Samples of `G = G< + G>` on a time grid, with per-point standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct GreensSeries {
    pub grid: TimeGrid,
    pub lesser: Vec<Complex64>,
    pub greater: Vec<Complex64>,
    pub total: Vec<Complex64>,
    /// Standard error of the real and imaginary parts of `total`, zero for exact evaluation.
    pub stderr: Vec<Complex64>,
    /// Free-form description of how the samples were produced.
    pub provenance: String,
}

impl GreensSeries {
    /// Builds the series with `total = lesser + greater` and zero standard errors.
    pub fn from_parts(
        grid: TimeGrid,
        lesser: Vec<Complex64>,
        greater: Vec<Complex64>,
        provenance: impl Into<String>,
    ) -> Self {
        let total = lesser.iter().zip(&greater).map(|(a, b)| a + b).collect();
        Self {
            grid,
            stderr: vec![Complex64::new(0.0, 0.0); lesser.len()],
            lesser,
            greater,
            total,
            provenance: provenance.into(),
        }
    }

    /// Largest pointwise modulus of the difference of the totals.
    pub fn max_deviation(&self, other: &GreensSeries) -> f64 {
        self.total
            .iter()
            .zip(&other.total)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Pointwise average of two series on the same grid.
    pub fn average(&self, other: &GreensSeries, provenance: impl Into<String>) -> GreensSeries {
        let half = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> {
            a.iter().zip(b).map(|(x, y)| (x + y) * 0.5).collect()
        };
        let mut out = GreensSeries::from_parts(
            self.grid,
            half(&self.lesser, &other.lesser),
            half(&self.greater, &other.greater),
            provenance,
        );
        out.stderr = self
            .stderr
            .iter()
            .zip(&other.stderr)
            .map(|(a, b)| Complex64::new(0.5 * a.re.hypot(b.re), 0.5 * a.im.hypot(b.im)))
            .collect();
        out
    }
}

//! Benchmark models and reporting helpers for the acceptance run.

use aimccgf::cc::{solve_ccsd, CcAmplitudes, CcSettings};
use aimccgf::model::{reference_state, AimParams, Filling, ReferenceState, Spin};
use aimccgf::Result;

pub const INTERACTION: f64 = 8.0;

/// A named benchmark model.
#[derive(Debug, Clone)]
pub struct BenchmarkSet {
    pub name: &'static str,
    pub params: AimParams,
}

impl BenchmarkSet {
    fn new(name: &'static str, eps: &[f64], v: &[f64]) -> Self {
        Self {
            name,
            params: AimParams::new(INTERACTION, eps.to_vec(), v.to_vec())
                .expect("valid benchmark parameters"),
        }
    }

    pub fn two_site() -> Self {
        Self::new("two-site", &[4.0, 0.0], &[1.0])
    }

    pub fn two_site_atomic() -> Self {
        Self::new("two-site atomic", &[4.0, 0.0], &[0.0])
    }

    pub fn three_site_symmetric() -> Self {
        Self::new("three-site symmetric", &[4.0, 3.61, 4.39], &[0.63, 0.63])
    }

    pub fn three_site_asymmetric() -> Self {
        Self::new("three-site asymmetric", &[4.0, -0.13, 10.1], &[1.0, 0.15])
    }

    pub fn all() -> Vec<Self> {
        vec![
            Self::two_site(),
            Self::two_site_atomic(),
            Self::three_site_symmetric(),
            Self::three_site_asymmetric(),
        ]
    }

    pub fn is_two_site(&self) -> bool {
        self.params.n_bath() == 1
    }

    /// Reference determinant and converged amplitudes with de-excitations.
    pub fn solve(&self) -> Result<Solved> {
        let reference = reference_state(&self.params, &Filling::Default)?;
        let amplitudes = solve_ccsd(&self.params, &reference, &CcSettings::default())?;
        let down = self.params.impurity(Spin::Down);
        let occupied = if reference.is_occupied(down) {
            down
        } else {
            self.params.impurity(Spin::Up)
        };
        let empty = if occupied == down {
            self.params.impurity(Spin::Up)
        } else {
            down
        };
        Ok(Solved {
            reference,
            amplitudes,
            occupied,
            empty,
        })
    }
}

/// Solver output shared by the checks.
#[derive(Debug, Clone)]
pub struct Solved {
    pub reference: ReferenceState,
    pub amplitudes: CcAmplitudes,
    /// Impurity spin-orbital occupied in the reference.
    pub occupied: usize,
    /// Impurity spin-orbital empty in the reference.
    pub empty: usize,
}

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub label: String,
    pub passed: bool,
    pub details: Vec<String>,
}

impl Verdict {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            passed: true,
            details: Vec::new(),
        }
    }

    /// Records a named check and folds it into the verdict.
    pub fn check(&mut self, ok: bool, detail: impl Into<String>) {
        let detail = detail.into();
        self.details.push(if ok {
            detail
        } else {
            format!("{detail} [violated]")
        });
        self.passed &= ok;
    }

    pub fn note(&mut self, detail: impl Into<String>) {
        self.details.push(detail.into());
    }

    pub fn fail(label: impl Into<String>, error: impl std::fmt::Display) -> Self {
        Self {
            label: label.into(),
            passed: false,
            details: vec![format!("error: {error}")],
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.label
        )
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

/// Sample mean and unbiased standard deviation.
pub fn mean_and_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

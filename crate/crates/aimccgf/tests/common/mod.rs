//! Parameter sets and helpers shared by the integration tests.
#![allow(dead_code)]

use aimccgf::cc::{solve_ccsd, CcAmplitudes, CcSettings};
use aimccgf::model::{reference_state, AimParams, Filling, ReferenceState, Spin};

pub const INTERACTION: f64 = 8.0;

/// The two two-site and two three-site benchmark models.
pub fn benchmark_sets() -> Vec<(&'static str, AimParams)> {
    vec![
        ("two-site", params(&[4.0, 0.0], &[1.0])),
        ("two-site atomic", params(&[4.0, 0.0], &[0.0])),
        (
            "three-site symmetric",
            params(&[4.0, 3.61, 4.39], &[0.63, 0.63]),
        ),
        (
            "three-site asymmetric",
            params(&[4.0, -0.13, 10.1], &[1.0, 0.15]),
        ),
    ]
}

pub fn params(eps: &[f64], v: &[f64]) -> AimParams {
    AimParams::new(INTERACTION, eps.to_vec(), v.to_vec()).expect("valid parameters")
}

pub fn solved(params: &AimParams) -> (ReferenceState, CcAmplitudes) {
    let reference = reference_state(params, &Filling::Default).expect("default filling");
    let amplitudes =
        solve_ccsd(params, &reference, &CcSettings::default()).expect("CCSD converges");
    (reference, amplitudes)
}

/// The impurity spin-orbital occupied in the reference.
pub fn occupied_impurity(params: &AimParams, reference: &ReferenceState) -> usize {
    let down = params.impurity(Spin::Down);
    if reference.is_occupied(down) {
        down
    } else {
        params.impurity(Spin::Up)
    }
}

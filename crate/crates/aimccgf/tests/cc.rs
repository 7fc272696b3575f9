mod common;

use aimccgf::cc::{
    cc_energy, cluster_exponential_state, excitation_space, solve_lambda_amplitudes,
    solve_t_amplitudes, solve_t_amplitudes_with, CcLevel, CcSettings, CcState, Excitation,
};
use aimccgf::ed::EdOracle;
use aimccgf::fock::FockSpace;
use aimccgf::model::{build_hamiltonian, reference_state, AimParams, Filling, DEFAULT_BATH_CAP};
use aimccgf::{Error, Execution};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn excitation_matrix(fock: FockSpace, excitation: &Excitation) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(fock.dim(), fock.dim());
    for s in 0..fock.dim() {
        if let Some((sign, t)) = fock.apply_ops(s, &excitation.operators()) {
            m[(t, s)] = sign;
        }
    }
    m
}

fn dense_operator(fock: FockSpace, excitations: &[Excitation], amplitudes: &[f64]) -> DMatrix<f64> {
    excitations
        .iter()
        .zip(amplitudes)
        .fold(DMatrix::zeros(fock.dim(), fock.dim()), |acc, (e, &x)| {
            acc + excitation_matrix(fock, e) * x
        })
}

fn basis(dim: usize, index: usize) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    v[index] = 1.0;
    v
}

#[test]
fn two_site_space_has_two_singles_and_one_double() {
    let params = common::params(&[4.0, 0.0], &[1.0]);
    let reference = reference_state(&params, &Filling::Default).unwrap();
    let space = excitation_space(&reference, CcLevel::SinglesDoubles);
    assert_eq!(space.iter().filter(|e| e.rank() == 1).count(), 2);
    assert_eq!(space.iter().filter(|e| e.rank() == 2).count(), 1);
    assert_eq!(excitation_space(&reference, CcLevel::Singles).len(), 2);
}

#[test]
fn excitations_conserve_spin_projection() {
    let params = common::params(&[4.0, 3.61, 4.39], &[0.63, 0.63]);
    let reference = reference_state(&params, &Filling::Default).unwrap();
    let fock = reference.fock();
    for e in excitation_space(&reference, CcLevel::SinglesDoubles) {
        let (_, target) = fock
            .apply_ops(reference.index(), &e.operators())
            .expect("excitation acts on the reference");
        assert_eq!(
            fock.spin_counts(target),
            fock.spin_counts(reference.index())
        );
    }
}

#[test]
fn unsupported_truncation_level_is_a_domain_error() {
    assert_eq!(CcLevel::from_rank(2).unwrap(), CcLevel::SinglesDoubles);
    assert!(matches!(CcLevel::from_rank(3), Err(Error::Domain(_))));
}

#[test]
fn coupled_cluster_energy_matches_exact_diagonalization() {
    for (name, params) in common::benchmark_sets() {
        let (reference, amplitudes) = common::solved(&params);
        let oracle = EdOracle::new(&params, &reference).unwrap();
        assert!(amplitudes.is_converged(), "{name}");
        assert!(
            (amplitudes.e_cc - oracle.ground().e0).abs() < 1e-8,
            "{name}: {} vs {}",
            amplitudes.e_cc,
            oracle.ground().e0
        );
    }
}

#[test]
fn singles_energy_expression_reproduces_the_projected_energy() {
    for (name, params) in common::benchmark_sets() {
        let (_, amplitudes) = common::solved(&params);
        let energy = cc_energy(&params, &amplitudes).unwrap();
        assert!((energy - amplitudes.e_cc).abs() < 1e-10, "{name}");
    }
}

#[test]
fn amplitude_equations_hold_with_dense_exponentials() {
    for (name, params) in common::benchmark_sets() {
        let (reference, amplitudes) = common::solved(&params);
        let fock = reference.fock();
        let (_, h) = build_hamiltonian(&params, DEFAULT_BATH_CAP).unwrap();
        let t = dense_operator(fock, &amplitudes.excitations, &amplitudes.t);
        let hbar = (-&t).exp() * &h * t.exp();
        let phi = basis(fock.dim(), reference.index());
        let hbar_phi = &hbar * &phi;
        assert!(
            (hbar_phi[reference.index()] - amplitudes.e_cc).abs() < 1e-9,
            "{name}"
        );
        for e in &amplitudes.excitations {
            let (sign, target) = fock.apply_ops(reference.index(), &e.operators()).unwrap();
            assert!((sign * hbar_phi[target]).abs() < 1e-9, "{name}: {e:?}");
        }

        let lambda = amplitudes
            .lambda
            .as_ref()
            .expect("de-excitation amplitudes");
        let lambda_dag = dense_operator(fock, &amplitudes.excitations, lambda);
        let bra =
            (DMatrix::identity(fock.dim(), fock.dim()) + lambda_dag.transpose()).transpose() * &phi;
        let shifted = &hbar - DMatrix::identity(fock.dim(), fock.dim()) * amplitudes.e_cc;
        for e in &amplitudes.excitations {
            let (sign, target) = fock.apply_ops(reference.index(), &e.operators()).unwrap();
            let ket = basis(fock.dim(), target) * sign;
            let value = bra.dot(&(&shifted * ket));
            assert!(value.abs() < 1e-8, "{name}: {e:?} gives {value}");
        }
    }
}

#[test]
fn de_excitation_residual_is_small() {
    for (name, params) in common::benchmark_sets() {
        let (_, amplitudes) = common::solved(&params);
        let residual = aimccgf::cc::lambda_residual(&params, &amplitudes).unwrap();
        assert!(residual < 1e-8, "{name}: {residual}");
    }
}

#[test]
fn uncoupled_impurity_has_vanishing_amplitudes() {
    let params = common::params(&[4.0, 0.0], &[0.0]);
    let (_, amplitudes) = common::solved(&params);
    assert!(amplitudes.t.iter().all(|x| x.abs() < 1e-12));
    assert!((amplitudes.e_cc - 4.0).abs() < 1e-12);
}

#[test]
fn bra_and_ket_forms_are_biorthogonal() {
    let params = common::params(&[4.0, 0.0], &[1.0]);
    let (_, amplitudes) = common::solved(&params);
    let ket = cluster_exponential_state(&amplitudes, CcState::Ket).unwrap();
    let bra = cluster_exponential_state(&amplitudes, CcState::Bra).unwrap();
    let overlap: num_complex::Complex64 = bra.iter().zip(&ket).map(|(b, k)| b.conj() * k).sum();
    assert!((overlap.re - 1.0).abs() < 1e-12 && overlap.im.abs() < 1e-12);
}

#[test]
fn unsolved_or_unconverged_amplitudes_are_rejected() {
    let params = common::params(&[4.0, 0.0], &[1.0]);
    let reference = reference_state(&params, &Filling::Default).unwrap();
    let t_only = solve_t_amplitudes(&params, &reference, &CcSettings::default()).unwrap();
    assert!(matches!(t_only.lambda_adjoint(), Err(Error::State(_))));
    assert!(matches!(
        cluster_exponential_state(&t_only, CcState::Bra),
        Err(Error::State(_))
    ));

    let mut stale = t_only.clone();
    stale.residual_norm = 1.0;
    assert!(matches!(cc_energy(&params, &stale), Err(Error::State(_))));
    assert!(matches!(
        solve_lambda_amplitudes(&params, &stale),
        Err(Error::State(_))
    ));
}

#[test]
fn iteration_budget_exhaustion_is_a_convergence_error() {
    let params = common::params(&[4.0, 0.0], &[1.0]);
    let reference = reference_state(&params, &Filling::Default).unwrap();
    let settings = CcSettings {
        max_iter: 0,
        ci_start: false,
        ..CcSettings::default()
    };
    assert!(matches!(
        solve_t_amplitudes(&params, &reference, &settings),
        Err(Error::Convergence { iterations: 0, .. })
    ));
}

#[test]
fn execution_modes_give_identical_amplitudes() {
    let params = common::params(&[4.0, -0.13, 10.1], &[1.0, 0.15]);
    let reference = reference_state(&params, &Filling::Default).unwrap();
    let settings = CcSettings::default();
    let a = solve_t_amplitudes_with(&params, &reference, &settings, Execution::Sequential).unwrap();
    let b = solve_t_amplitudes_with(&params, &reference, &settings, Execution::Parallel).unwrap();
    assert_eq!(a.t, b.t);
    assert_eq!(a.e_cc, b.e_cc);
}

#[test]
fn impurity_singles_keeps_only_impurity_singles() {
    let params = common::params(&[4.0, 3.61, 4.39], &[0.63, 0.63]);
    let (_, amplitudes) = common::solved(&params);
    let reduced = amplitudes.impurity_singles(&params);
    assert_eq!(reduced.level, CcLevel::Singles);
    assert!(!reduced.excitations.is_empty());
    for e in &reduced.excitations {
        match *e {
            Excitation::Single { i, a } => assert!(params.is_impurity(i) || params.is_impurity(a)),
            Excitation::Double { .. } => panic!("doubles must be dropped"),
        }
        assert_eq!(reduced.amplitude(*e), amplitudes.amplitude(*e));
    }
}

fn arb_two_site() -> impl Strategy<Value = AimParams> {
    (2.0f64..10.0, 1.0f64..5.0, -1.0f64..1.0, 0.2f64..1.5).prop_map(|(u, eps_imp, eps_bath, v)| {
        AimParams::new(u, vec![eps_imp, eps_bath], vec![v]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn two_site_coupled_cluster_is_exact(params in arb_two_site()) {
        let reference = reference_state(&params, &Filling::Default).unwrap();
        let oracle = EdOracle::new(&params, &reference).unwrap();
        let amplitudes = solve_t_amplitudes(&params, &reference, &CcSettings::default()).unwrap();
        prop_assert!((amplitudes.e_cc - oracle.ground().e0).abs() < 1e-8);
        prop_assert!((cc_energy(&params, &amplitudes).unwrap() - amplitudes.e_cc).abs() < 1e-10);
    }
}

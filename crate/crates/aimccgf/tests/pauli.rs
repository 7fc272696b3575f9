use aimccgf::fock::{FermionOp, FockSpace};
use aimccgf::pauli::{majorana_product, majorana_x, majorana_y, Pauli, PauliString, Phase};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single(p: Pauli) -> DMatrix<Complex64> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match p {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Kronecker product with qubit 0 as the leftmost factor.
fn kron_matrix(s: &PauliString) -> DMatrix<Complex64> {
    let m = s
        .letters()
        .iter()
        .fold(DMatrix::from_element(1, 1, c(1.0, 0.0)), |acc, &p| {
            acc.kronecker(&single(p))
        });
    m * s.phase().value()
}

fn fermion_matrix(fock: FockSpace, op: FermionOp) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(fock.dim(), fock.dim());
    for s in 0..fock.dim() {
        if let Some((sign, t)) = fock.apply_op(s, op) {
            m[(t, s)] = c(sign, 0.0);
        }
    }
    m
}

fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
    (0u8..4, prop::collection::vec(0u8..4, n)).prop_map(|(phase, letters)| {
        let letters = letters
            .into_iter()
            .map(|k| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][k as usize])
            .collect();
        PauliString::new(Phase::from_power(phase), letters)
    })
}

#[test]
fn single_qubit_products_follow_the_cyclic_rule() {
    let x = PauliString::parse("X").unwrap();
    let y = PauliString::parse("Y").unwrap();
    let z = PauliString::parse("Z").unwrap();
    assert_eq!(&x * &y, PauliString::parse("iZ").unwrap());
    assert_eq!(&y * &x, PauliString::parse("-iZ").unwrap());
    assert_eq!(&y * &z, PauliString::parse("iX").unwrap());
    assert_eq!(&z * &x, PauliString::parse("iY").unwrap());
    assert_eq!(&x * &x, PauliString::identity(1));
}

#[test]
fn parse_round_trips_and_rejects_unknown_letters() {
    for text in ["XYZI", "-ZZ", "iXY", "-iY"] {
        let parsed = PauliString::parse(text).unwrap();
        assert_eq!(PauliString::parse(&parsed.to_string()).unwrap(), parsed);
    }
    assert!(PauliString::parse("XQ").is_err());
    assert!(PauliString::parse("X")
        .unwrap()
        .try_mul(&PauliString::parse("XX").unwrap())
        .is_err());
}

#[test]
fn majorana_strings_are_jordan_wigner_images() {
    let n = 4;
    let fock = FockSpace::new(n);
    for q in 0..n {
        let a = fermion_matrix(fock, FermionOp::annihilate(q));
        let ad = fermion_matrix(fock, FermionOp::create(q));
        let x = kron_matrix(&majorana_x(q, n).unwrap());
        let y = kron_matrix(&majorana_y(q, n).unwrap());
        assert!((&a + &ad - x).camax() < 1e-14, "X on mode {q}");
        assert!(
            ((&ad - &a) * c(0.0, 1.0) - y).camax() < 1e-14,
            "Y on mode {q}"
        );
    }
}

#[test]
fn majorana_strings_anticommute() {
    let n = 5;
    let id = DMatrix::<Complex64>::identity(1 << n, 1 << n);
    for p in 0..n {
        for q in 0..n {
            let a = kron_matrix(&majorana_x(p, n).unwrap());
            let b = kron_matrix(&majorana_x(q, n).unwrap());
            let anti = &a * &b + &b * &a;
            let expected = if p == q {
                &id * c(2.0, 0.0)
            } else {
                &id * c(0.0, 0.0)
            };
            assert!((anti - expected).camax() < 1e-14);
        }
    }
}

#[test]
fn majorana_product_matches_matrix_product() {
    let n = 4;
    let orbitals = [0, 1, 3];
    let expected = orbitals
        .iter()
        .fold(DMatrix::<Complex64>::identity(16, 16), |acc, &o| {
            acc * kron_matrix(&majorana_x(o, n).unwrap())
        });
    assert!((kron_matrix(&majorana_product(&orbitals, n).unwrap()) - expected).camax() < 1e-14);
    assert_eq!(majorana_product(&[], n).unwrap(), PauliString::identity(n));
}

proptest! {
    #[test]
    fn matrix_form_matches_kronecker_oracle(s in arb_string(3)) {
        prop_assert!((s.to_matrix() - kron_matrix(&s)).camax() < 1e-14);
    }

    #[test]
    fn products_match_matrix_products(a in arb_string(3), b in arb_string(3)) {
        let product = &a * &b;
        prop_assert!((kron_matrix(&product) - kron_matrix(&a) * kron_matrix(&b)).camax() < 1e-14);
    }

    #[test]
    fn strings_are_unitary_and_adjoint_is_conjugate_transpose(s in arb_string(3)) {
        let m = kron_matrix(&s);
        let id = DMatrix::<Complex64>::identity(8, 8);
        prop_assert!((m.adjoint() * &m - id).camax() < 1e-14);
        prop_assert!((kron_matrix(&s.adjoint()) - m.adjoint()).camax() < 1e-14);
        prop_assert_eq!(s.is_hermitian(), (m.adjoint() - &m).camax() < 1e-14);
    }

    #[test]
    fn vector_action_matches_matrix(s in arb_string(3), re in prop::collection::vec(-1.0f64..1.0, 8)) {
        let v: Vec<Complex64> = re.iter().enumerate().map(|(k, &x)| c(x, 0.1 * k as f64)).collect();
        let out = s.apply(&v).unwrap();
        let expected = kron_matrix(&s) * nalgebra::DVector::from_column_slice(&v);
        for (a, b) in out.iter().zip(expected.iter()) {
            prop_assert!((a - b).norm() < 1e-14);
        }
    }
}

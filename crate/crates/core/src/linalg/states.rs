//! Named kets and operators for qubits.
//!
//! Conventions: `|0⟩` and `|1⟩` are the `+1` and `-1` eigenstates of σ_z,
//! `|±⟩ = (|0⟩ ± |1⟩)/√2`, and the local charge is `q = (σ_z − 1)/2`
//! so that `|0⟩` carries charge 0 and `|1⟩` charge −1.

use std::f64::consts::FRAC_1_SQRT_2;

use super::density::{Ket, ObservableOp};
use super::matrix::{lift_local, CMatrix, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn ket0() -> Ket {
    Ket::basis(2, 0)
}

pub fn ket1() -> Ket {
    Ket::basis(2, 1)
}

pub fn ket_plus() -> Ket {
    Ket::new(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).expect("unit norm")
}

pub fn ket_minus() -> Ket {
    Ket::new(vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)]).expect("unit norm")
}

/// (|01⟩ + |10⟩)/√2
pub fn bell_psi_plus() -> Ket {
    let s = FRAC_1_SQRT_2;
    Ket::new(vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]).expect("unit norm")
}

/// (|01⟩ − |10⟩)/√2, the singlet.
pub fn bell_psi_minus() -> Ket {
    let s = FRAC_1_SQRT_2;
    Ket::new(vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]).expect("unit norm")
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::new(
        2,
        2,
        vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
    )
    .expect("2x2")
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0])
}

/// sinθ cosφ σ_x + sinθ sinφ σ_y + cosθ σ_z
pub fn pauli_n(theta: f64, phi: f64) -> CMatrix {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    CMatrix::new(
        2,
        2,
        vec![
            c(ct, 0.0),
            c(st * cp, -st * sp),
            c(st * cp, st * sp),
            c(-ct, 0.0),
        ],
    )
    .expect("2x2")
}

/// Eigenkets of `pauli_n(theta, phi)` for eigenvalues +1 and −1.
pub fn pauli_n_eigenkets(theta: f64, phi: f64) -> (Ket, Ket) {
    let (sh, ch) = (theta / 2.0).sin_cos();
    let phase = C64::from_polar(1.0, phi);
    let up = Ket::new(vec![c(ch, 0.0), phase * sh]).expect("unit norm");
    let down = Ket::new(vec![c(sh, 0.0), -phase * ch]).expect("unit norm");
    (up, down)
}

pub fn pauli_z_obs() -> ObservableOp {
    ObservableOp::new(pauli_z()).expect("hermitian")
}

pub fn pauli_x_obs() -> ObservableOp {
    ObservableOp::new(pauli_x()).expect("hermitian")
}

pub fn pauli_n_obs(theta: f64, phi: f64) -> ObservableOp {
    ObservableOp::new(pauli_n(theta, phi)).expect("hermitian")
}

/// Local charge `(σ_z − 1)/2`.
pub fn charge() -> CMatrix {
    CMatrix::from_real(2, &[0.0, 0.0, 0.0, -1.0])
}

pub fn charge_obs() -> ObservableOp {
    ObservableOp::new(charge()).expect("hermitian")
}

/// Total charge `Σ_j q_j` on `n` qubits.
pub fn total_charge(n: usize) -> ObservableOp {
    assert!(n >= 1, "need at least one qubit");
    let dims = vec![2; n];
    let mut total = CMatrix::zeros(1 << n, 1 << n);
    for j in 0..n {
        total = &total + &lift_local(&charge(), j, &dims).expect("qubit dims");
    }
    ObservableOp::new(total).expect("hermitian")
}

/// Qubit state by name: `0`, `1`, `+`, `-`.
pub fn named_qubit(name: &str) -> Option<Ket> {
    match name {
        "0" => Some(ket0()),
        "1" => Some(ket1()),
        "+" => Some(ket_plus()),
        "-" => Some(ket_minus()),
        _ => None,
    }
}

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polystate_core::linalg::states::{pauli_n, pauli_n_eigenkets};
use polystate_core::linalg::{CMatrix, DensityOperator, Ket, C64};
use polystate_core::scenario::{Intervention, Scenario};
use polystate_core::spacetime::{Event, Segment, Worldline};

/// Knobs for random 1+1 dimensional qubit scenarios.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub parties: usize,
    /// Spatial distance between neighbouring anchors.
    pub spacing: f64,
    pub max_interventions: usize,
    /// Proper-time window for interventions.
    pub tau_range: (f64, f64),
    /// Chance that an intervention is a measurement rather than a unitary.
    pub p_measure: f64,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            parties: 2,
            spacing: 2.0,
            max_interventions: 3,
            tau_range: (-1.0, 3.0),
            p_measure: 0.75,
        }
    }
}

fn velocity(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![rng.random_range(-0.6..0.6)]
}

pub fn random_worldline(rng: &mut ChaCha8Rng, x0: f64) -> Worldline {
    let anchor = Event::tx(
        rng.random_range(-0.5..0.5),
        x0 + rng.random_range(-0.3..0.3),
    );
    let segments = (0..rng.random_range(0..3))
        .map(|_| Segment {
            dtau: rng.random_range(0.3..2.0),
            v: velocity(rng),
        })
        .collect();
    Worldline::new(anchor, segments, velocity(rng)).unwrap()
}

pub fn random_ket(rng: &mut ChaCha8Rng, dim: usize) -> Ket {
    let amps = (0..dim)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Ket::normalized(amps).unwrap()
}

fn angles(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (
        rng.random_range(0.0..std::f64::consts::PI),
        rng.random_range(0.0..std::f64::consts::TAU),
    )
}

pub fn random_basis(rng: &mut ChaCha8Rng) -> [Ket; 2] {
    let (theta, phi) = angles(rng);
    let (up, down) = pauli_n_eigenkets(theta, phi);
    [up, down]
}

pub fn random_unitary(rng: &mut ChaCha8Rng) -> CMatrix {
    let (theta, phi) = angles(rng);
    pauli_n(theta, phi)
}

pub fn random_scenario(seed: u64, shape: Shape) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.parties;
    let names = (0..n)
        .map(|i| char::from(b'A' + i as u8).to_string())
        .collect();
    let worldlines = (0..n)
        .map(|i| random_worldline(&mut rng, shape.spacing * i as f64))
        .collect();
    let initial = random_ket(&mut rng, 1 << n).density();
    let count = rng.random_range(1..=shape.max_interventions);
    let mut taken: Vec<(usize, f64)> = Vec::new();
    let mut interventions = Vec::new();
    while interventions.len() < count {
        let i = rng.random_range(0..n);
        let tau = rng.random_range(shape.tau_range.0..shape.tau_range.1);
        if taken.iter().any(|&(j, t)| j == i && (t - tau).abs() < 1e-3) {
            continue;
        }
        taken.push((i, tau));
        interventions.push(if rng.random_bool(shape.p_measure) {
            let basis = random_basis(&mut rng);
            Intervention::projective(i, tau, &basis, rng.random_range(0..2))
        } else {
            Intervention::unitary(i, tau, random_unitary(&mut rng))
        });
    }
    Scenario::new(names, vec![2; n], worldlines, initial, interventions).unwrap()
}

pub fn random_taus(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-3.0..7.0)).collect()
}

pub fn max_diff(a: &DensityOperator, b: &DensityOperator) -> f64 {
    a.matrix().max_abs_diff(b.matrix())
}

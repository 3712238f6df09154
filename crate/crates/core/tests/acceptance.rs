//! Acceptance gate: one line per criterion, nonzero exit if any fails.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polystate_core::audit::{
    charge_ledger, criteria_report, recollection_conservation, Prescription, Targets,
};
use polystate_core::ensemble::{
    compare_to_polystate, enumerate_branches, oracle_sector, sample_runs,
};
use polystate_core::fixtures;
use polystate_core::linalg::states::total_charge;
use polystate_core::linalg::{expect, kron, trace_distance, CMatrix, Ket, ObservableOp, C64};
use polystate_core::polystate::{early_taus, late_taus, Engine, Subset};
use polystate_core::scenario::{
    parse_scenario, serialize_scenario, Intervention, NamedFoliation, Scenario,
};
use polystate_core::spacetime::{causally_precedes, proper_time_at_leaf, Boost, Foliation};
use polystate_core::Error;

use common::{max_diff, random_scenario, random_taus, random_worldline, Shape};

const TOL: f64 = 1e-12;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn ket(amps: &[f64]) -> Ket {
    Ket::new(amps.iter().map(|&a| c(a, 0.0)).collect()).unwrap()
}

fn pure(amps: &[f64]) -> CMatrix {
    ket(amps).projector()
}

fn half_identity() -> CMatrix {
    CMatrix::identity(2).scale_real(0.5)
}

const H: f64 = FRAC_1_SQRT_2;

/// Worst entrywise error of the three sectors against `[a, b, ab]`.
fn sector_error(engine: &Engine, taus: &[f64], expected: &[CMatrix; 3]) -> Result<f64, String> {
    let p = engine.polystate_at(taus).map_err(|e| e.to_string())?;
    let got = [
        p.sector(Subset::singleton(0)),
        p.sector(Subset::singleton(1)),
        p.sector(Subset::full(2)),
    ];
    Ok(got
        .iter()
        .zip(expected)
        .map(|(g, e)| g.matrix().max_abs_diff(e))
        .fold(0.0, f64::max))
}

fn sector_reproduction() -> Check {
    let start = Instant::now();
    let s = parse_scenario(fixtures::BELL_SIGMA_Z).map_err(|e| e.to_string())?;
    let engine = Engine::new(s).map_err(|e| e.to_string())?;
    let expected = [
        pure(&[1.0, 0.0]),
        half_identity(),
        pure(&[0.0, 1.0, 0.0, 0.0]),
    ];
    let mut worst = 0.0f64;
    for tau_a in [1.0, 1.25, 2.0, 4.0, 10.0] {
        for tau_b in [-0.999, -0.5, 0.0, 1.0, 2.0, 2.999] {
            worst = worst.max(sector_error(&engine, &[tau_a, tau_b], &expected)?);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(worst <= TOL, || format!("max entry error {worst:e}"))?;
    ensure(elapsed < 1.0, || format!("took {elapsed:.3} s"))?;
    Ok(format!(
        "30 tuples, max entry error {worst:.1e}, {elapsed:.3} s"
    ))
}

fn case_table() -> Check {
    let zero = [1.0, 0.0];
    let one = [0.0, 1.0];
    let plus = [H, H];
    let minus = [H, -H];
    let table = |a: [f64; 2], b: [f64; 2], ab_pre: [f64; 4], ab_post: [f64; 4]| {
        move |tau_a: f64, tau_b: f64| -> [CMatrix; 3] {
            let (a_done, b_done) = (tau_a >= 1.0, tau_b >= 3.0);
            let ab = if a_done || b_done {
                pure(&ab_post)
            } else {
                pure(&ab_pre)
            };
            [
                if a_done { pure(&a) } else { half_identity() },
                if b_done { pure(&b) } else { half_identity() },
                ab,
            ]
        }
    };
    let kron4 = |x: [f64; 2], y: [f64; 2]| [x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]];
    let psi_z = [0.0, H, H, 0.0];
    // |+−⟩ + |−+⟩ over √2, written out in the computational basis
    let psi_x = [H, 0.0, 0.0, -H];
    let z_table = table(zero, one, psi_z, kron4(zero, one));
    let x_table = table(plus, minus, psi_x, kron4(plus, minus));
    let mut worst = 0.0f64;
    for (scenario, expected) in [
        (
            fixtures::bell_sigma_z(),
            &z_table as &dyn Fn(f64, f64) -> [CMatrix; 3],
        ),
        (fixtures::bell_sigma_x(), &x_table),
    ] {
        let engine = Engine::new(scenario).map_err(|e| e.to_string())?;
        for tau_a in [-3.0, 0.0, 0.999, 1.0, 1.5, 5.0] {
            for tau_b in [-5.0, -1.0, 0.0, 2.999, 3.0, 3.5, 8.0] {
                let err = sector_error(&engine, &[tau_a, tau_b], &expected(tau_a, tau_b))?;
                ensure(err <= TOL, || {
                    format!("regime ({tau_a}, {tau_b}) off by {err:e}")
                })?;
                worst = worst.max(err);
            }
        }
    }
    Ok(format!(
        "σz and σx fixtures, 4 regimes × 42 tuples each, max entry error {worst:.1e}"
    ))
}

/// The singlet fixture with B measuring along `theta` and the given records.
fn epr_with(theta: f64, a: usize, b: usize) -> Scenario {
    let mut s = fixtures::epr_test();
    let tau_b = s.interventions[1].tau;
    let (up, down) = polystate_core::linalg::states::pauli_n_eigenkets(theta, 0.0);
    s.interventions[1] = Intervention::projective(1, tau_b, &[up, down], b);
    s.with_outcome(0, a).unwrap()
}

fn epr_statistics() -> Check {
    let mut worst = 0.0f64;
    let mut track = |got: f64, want: f64, what: &str| -> Result<(), String> {
        let err = (got - want).abs();
        worst = worst.max(err);
        ensure(err <= TOL, || format!("{what}: {got} vs {want}"))
    };
    for theta in [0.0, FRAC_PI_6, FRAC_PI_4, FRAC_PI_2, 2.0 * FRAC_PI_3] {
        // outcome index 0 is +1 for both parties
        let z_kets = [ket(&[1.0, 0.0]), ket(&[0.0, 1.0])];
        let n_kets = [
            ket(&[(theta / 2.0).cos(), (theta / 2.0).sin()]),
            ket(&[(theta / 2.0).sin(), -(theta / 2.0).cos()]),
        ];
        let paper = |a: usize, b: usize| {
            if a == b {
                (theta / 2.0).sin().powi(2)
            } else {
                (theta / 2.0).cos().powi(2)
            }
        };
        let e = Engine::new(epr_with(theta, 0, 0)).map_err(|e| e.to_string())?;
        let early = [0.0, 0.0];
        let sz = CMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0]);
        let sn = CMatrix::from_real(2, &[theta.cos(), theta.sin(), theta.sin(), -theta.cos()]);
        let ab_obs = ObservableOp::new(kron(&sz, &sn)).unwrap();
        let ab_sector = e
            .sector(&early, Subset::full(2))
            .map_err(|e| e.to_string())?;
        track(
            expect(&ab_sector, &ab_obs).unwrap(),
            -theta.cos(),
            &format!("⟨ab⟩ at θ={theta}"),
        )?;
        for a in 0..2 {
            for b in 0..2 {
                let projectors = [z_kets[a].projector(), n_kets[b].projector()];
                let p = e
                    .prob_joint_outcome(&early, &projectors)
                    .map_err(|e| e.to_string())?;
                track(p, 0.5 * paper(a, b), &format!("Prob({a},{b}) at θ={theta}"))?;
            }
        }
        for other in [-4.0, 0.0, 1.0, 2.0, 9.0] {
            for a in 0..2 {
                let p = e
                    .marginal_prob(&[0.0, other], 0, &z_kets[a].projector())
                    .map_err(|e| e.to_string())?;
                track(p, 0.5, "Prob(a)")?;
                let p = e
                    .marginal_prob(&[other, 0.0], 1, &n_kets[a].projector())
                    .map_err(|e| e.to_string())?;
                track(p, 0.5, "Prob(b)")?;
            }
        }
        for record in 0..2 {
            // B's record conditions A: evaluate after τ_B* but before A's
            // measurement reaches either party
            let eb = Engine::new(epr_with(theta, 1 - record, record)).map_err(|e| e.to_string())?;
            let ea = Engine::new(epr_with(theta, record, 1 - record)).map_err(|e| e.to_string())?;
            for x in 0..2 {
                let p = eb
                    .conditional_prob(0, &z_kets[x].projector(), &[0.0, 1.5])
                    .map_err(|e| e.to_string())?;
                track(
                    p,
                    paper(x, record),
                    &format!("Prob(a={x}|b={record}) at θ={theta}"),
                )?;
                let p = ea
                    .conditional_prob(1, &n_kets[x].projector(), &[1.5, 0.0])
                    .map_err(|e| e.to_string())?;
                track(
                    p,
                    paper(record, x),
                    &format!("Prob(b={x}|a={record}) at θ={theta}"),
                )?;
            }
        }
    }
    Ok(format!("5 angles, max error {worst:.1e}"))
}

fn incompatibility() -> Check {
    let s = fixtures::bell_sigma_z();
    let taus = [2.0, 1.0];
    let targets = Targets::from_oracle(&s, &taus).map_err(|e| e.to_string())?;
    let engine = Engine::new(s).map_err(|e| e.to_string())?;
    let report =
        criteria_report(&engine, &taus, targets, &Foliation::rest(1)).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for row in &report.rows {
        let worst = row.deviation_a.max(row.deviation_b).max(row.deviation_ab);
        if row.prescription == "Polystate" {
            let got = [row.expect_a, row.expect_b, row.expect_ab];
            let err = got
                .iter()
                .zip([1.0, 0.0, -1.0])
                .map(|(g, w)| (g - w).abs())
                .fold(0.0, f64::max);
            ensure(err <= TOL, || format!("polystate gives {got:?}"))?;
            ensure(row.all_pass, || {
                "polystate row fails its own criteria".into()
            })?;
        } else {
            ensure(worst >= 0.5, || {
                format!("{} deviates by only {worst}", row.prescription)
            })?;
        }
        parts.push(format!("{} {worst:.2}", row.prescription));
    }
    ensure(report.polystate_unique_pass, || {
        "another rule passes every check".into()
    })?;
    Ok(format!(
        "polystate (+1, 0, −1); max deviations: {}",
        parts.join(", ")
    ))
}

fn charge_bookkeeping() -> Check {
    let s = fixtures::bell_sigma_z();
    let initial = expect(&s.initial_state, &total_charge(2)).unwrap();
    ensure((initial + 1.0).abs() <= TOL, || {
        format!("initial charge {initial}")
    })?;
    let engine = Engine::new(s.clone()).map_err(|e| e.to_string())?;

    let tilted = s.foliation("tilted").unwrap().clone();
    let leaf = tilted.leaf_of(&s.worldlines[0].position(2.0));
    let ledger = charge_ledger(&engine, &tilted, &[leaf], &Prescription::FutureLightcone)
        .map_err(|e| e.to_string())?;
    let row = &ledger.rows[0];
    ensure(
        row.taus[0] >= 1.0 && row.taus[1] > -1.0 && row.taus[1] < 3.0,
        || format!("tilted leaf crosses at {:?}", row.taus),
    )?;
    ensure((row.q_sum + 0.5).abs() <= TOL, || {
        format!("future-lightcone local sum {}", row.q_sum)
    })?;

    let grid: Vec<f64> = (0..50).map(|i| -4.0 + 12.0 * i as f64 / 49.0).collect();
    let mut polystate_worst = 0.0f64;
    for v in [-0.7, -0.35, 0.0, 0.35, 0.7] {
        let f = Foliation::new(vec![v]).unwrap();
        let ledger = charge_ledger(&engine, &f, &grid, &Prescription::Polystate)
            .map_err(|e| e.to_string())?;
        for r in &ledger.rows {
            polystate_worst = polystate_worst.max((r.q_joint + 1.0).abs());
        }
    }
    ensure(polystate_worst <= TOL, || {
        format!("polystate joint charge off by {polystate_worst:e}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut recollection_worst = 0.0f64;
    for _ in 0..10 {
        let z = random_worldline(&mut rng, 1.0);
        let report = recollection_conservation(&engine, &z, &grid, &Foliation::rest(1))
            .map_err(|e| e.to_string())?;
        recollection_worst = recollection_worst.max(report.max_deviation);
    }
    ensure(recollection_worst <= TOL, || {
        format!("recollection charge drifts by {recollection_worst:e}")
    })?;
    Ok(format!(
        "initial −1, future-lightcone local sum {:.3}, polystate drift {polystate_worst:.1e} on 5×50 leaves, recollection drift {recollection_worst:.1e} on 10×50",
        row.q_sum
    ))
}

fn foliation_tables() -> Check {
    let s = fixtures::foliation_demo();
    let engine = Engine::new(s.clone()).map_err(|e| e.to_string())?;
    let (xa, xb) = (s.intervention_event(0), s.intervention_event(1));
    let sigma = s.foliation("Sigma").unwrap().clone();
    let xi = s.foliation("Xi").unwrap().clone();
    let (t_a, t_b) = (sigma.leaf_of(&xa), sigma.leaf_of(&xb));
    let (s_a, s_b) = (xi.leaf_of(&xa), xi.leaf_of(&xb));
    ensure(t_b < t_a && s_a < s_b, || {
        format!("orderings t: {t_b} {t_a}, s: {s_a} {s_b}")
    })?;

    let zero = [1.0, 0.0];
    let one = [0.0, 1.0];
    let plus = [H, H];
    let kron4 = |x: [f64; 2], y: [f64; 2]| [x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]];
    let bell = pure(&[0.0, H, H, 0.0]);
    let late = pure(&kron4(zero, plus));
    // (foliation, leaf, expected foliation state, expected [A, B, AB] sectors)
    let cases = [
        (
            &sigma,
            t_b - 0.3,
            bell.clone(),
            [half_identity(), half_identity(), bell.clone()],
        ),
        (
            &sigma,
            t_b,
            pure(&kron4(plus, plus)),
            [half_identity(), pure(&plus), pure(&kron4(plus, plus))],
        ),
        (
            &sigma,
            0.5 * (t_a + t_b),
            pure(&kron4(plus, plus)),
            [half_identity(), pure(&plus), pure(&kron4(plus, plus))],
        ),
        (
            &sigma,
            t_a,
            late.clone(),
            [pure(&zero), pure(&plus), late.clone()],
        ),
        (
            &sigma,
            t_a + 2.0,
            late.clone(),
            [pure(&zero), pure(&plus), late.clone()],
        ),
        (
            &xi,
            s_a - 0.3,
            bell.clone(),
            [half_identity(), half_identity(), bell.clone()],
        ),
        (
            &xi,
            s_a,
            pure(&kron4(zero, one)),
            [pure(&zero), half_identity(), pure(&kron4(zero, one))],
        ),
        (
            &xi,
            0.5 * (s_a + s_b),
            pure(&kron4(zero, one)),
            [pure(&zero), half_identity(), pure(&kron4(zero, one))],
        ),
        (
            &xi,
            s_b,
            late.clone(),
            [pure(&zero), pure(&plus), late.clone()],
        ),
        (
            &xi,
            s_b + 2.0,
            late.clone(),
            [pure(&zero), pure(&plus), late.clone()],
        ),
    ];
    let mut worst = 0.0f64;
    for (f, t, state, sectors) in &cases {
        let got = engine.foliation_state(f, *t).map_err(|e| e.to_string())?;
        let err = got.matrix().max_abs_diff(state);
        let taus = s
            .worldlines
            .iter()
            .map(|w| proper_time_at_leaf(w, f, *t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let err = err.max(sector_error(&engine, &taus, sectors)?);
        ensure(err <= TOL, || {
            format!("leaf {t} of v={:?} off by {err:e}", f.frame_velocity())
        })?;
        worst = worst.max(err);
    }

    let mid_sigma = engine
        .foliation_state(&sigma, 0.5 * (t_a + t_b))
        .map_err(|e| e.to_string())?;
    let mid_xi = engine
        .foliation_state(&xi, 0.5 * (s_a + s_b))
        .map_err(|e| e.to_string())?;
    let d = trace_distance(&mid_sigma, &mid_xi).map_err(|e| e.to_string())?;
    // pure states: D = √(1 − |⟨++|01⟩|²)
    let overlap = ket(&kron4(plus, plus))
        .inner(&ket(&kron4(zero, one)))
        .norm_sqr();
    let exact = (1.0 - overlap).sqrt();
    ensure((d - exact).abs() <= TOL && d > 0.5, || {
        format!("intermediate trace distance {d}")
    })?;

    let agree = (0..5)
        .map(|i| {
            let a = engine.foliation_state(&sigma, t_a + i as f64).unwrap();
            let b = engine.foliation_state(&xi, s_b + 0.7 * i as f64).unwrap();
            max_diff(&a, &b)
        })
        .fold(0.0, f64::max);
    ensure(agree <= TOL, || format!("late states differ by {agree:e}"))?;
    Ok(format!(
        "10 leaves, max entry error {worst:.1e}; intermediate trace distance {d:.6}; late disagreement {agree:.1e}"
    ))
}

/// Engine and oracle agree on every sector, impossibility included.
fn compare_sectors(s: &Scenario, engine: &Engine, taus: &[f64]) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for subset in Subset::all(s.n()) {
        match (engine.sector(taus, subset), oracle_sector(s, taus, subset)) {
            (Ok(a), Ok(b)) => worst = worst.max(max_diff(&a, &b)),
            (Err(Error::ImpossibleOutcome(_)), Err(Error::ImpossibleOutcome(_))) => {}
            (a, b) => {
                return Err(format!(
                    "at {taus:?}: engine {:?}, oracle {:?}",
                    a.err(),
                    b.err()
                ))
            }
        }
    }
    Ok(worst)
}

fn oracle_equivalence() -> Check {
    let mut worst = 0.0f64;
    let grid = [-2.0, -0.5, 0.5, 1.0, 1.5, 2.5, 3.0, 3.5, 6.0];
    let mut tuples = 0;
    for s in [
        fixtures::bell_sigma_z(),
        fixtures::bell_sigma_x(),
        fixtures::epr_test(),
    ] {
        let engine = Engine::new(s.clone()).map_err(|e| e.to_string())?;
        for &ta in &grid {
            for &tb in &grid {
                worst = worst.max(compare_sectors(&s, &engine, &[ta, tb])?);
                tuples += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for seed in 1..=25 {
        let s = random_scenario(seed, Shape::default());
        let engine = Engine::new(s.clone()).map_err(|e| e.to_string())?;
        let mut taus: Vec<Vec<f64>> = (0..40).map(|_| random_taus(&mut rng, 2)).collect();
        taus.push(early_taus(&s).map_err(|e| e.to_string())?);
        let late = late_taus(&s).map_err(|e| e.to_string())?;
        taus.push(late.clone());
        for t in &taus {
            worst = worst.max(compare_sectors(&s, &engine, t)?);
            tuples += 1;
        }

        // after everything, the joint sector is the recorded branch
        let branches = enumerate_branches(&s).map_err(|e| e.to_string())?;
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        ensure((total - 1.0).abs() <= TOL, || {
            format!("seed {seed}: branch probabilities sum to {total}")
        })?;
        let recorded: Vec<usize> = s
            .selective_indices()
            .iter()
            .map(|&k| s.interventions[k].chosen().unwrap())
            .collect();
        let branch = branches.iter().find(|b| b.outcomes == recorded).unwrap();
        if let Some(final_state) = &branch.final_state {
            let sector = engine
                .sector(&late, Subset::full(2))
                .map_err(|e| e.to_string())?;
            worst = worst.max(max_diff(&sector, final_state));
        }
    }
    ensure(worst <= TOL, || format!("max entry error {worst:e}"))?;
    Ok(format!(
        "3 fixtures + 25 random scenarios, {tuples} tuples, max entry error {worst:.1e}"
    ))
}

fn monte_carlo() -> Check {
    let start = Instant::now();
    let n = 100_000;
    let mut worst_distance = 0.0f64;
    let mut worst_sigma = 0.0f64;
    for (s, probe) in [
        (
            fixtures::bell_sigma_z(),
            vec![[0.0, 0.0], [1.0, 1.0], [0.0, 3.5], [2.0, 4.0]],
        ),
        (
            fixtures::epr_test(),
            vec![[0.0, 0.0], [1.5, 0.0], [0.0, 1.5], [1.5, 1.5], [4.0, 4.0]],
        ),
    ] {
        let log = sample_runs(&s, n, 2024).map_err(|e| e.to_string())?;
        let engine = Engine::new(s.clone()).map_err(|e| e.to_string())?;
        for taus in &probe {
            let report = compare_to_polystate(&log, &engine, taus).map_err(|e| e.to_string())?;
            worst_distance = worst_distance.max(report.max_empirical_distance);
        }
        let freq = log.frequencies();
        for b in enumerate_branches(&s).map_err(|e| e.to_string())? {
            let count = freq.get(&b.outcomes).copied().unwrap_or(0) as f64;
            let p = b.probability;
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            let off = (count / n as f64 - p).abs();
            if sd > 0.0 {
                worst_sigma = worst_sigma.max(off / sd);
            } else {
                ensure(count == 0.0, || {
                    format!("impossible branch {:?} drawn", b.outcomes)
                })?;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(worst_distance <= 0.02, || {
        format!("empirical trace distance {worst_distance}")
    })?;
    ensure(worst_sigma <= 6.0, || {
        format!("branch frequency {worst_sigma:.2}σ off")
    })?;
    ensure(elapsed < 30.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!(
        "N = 10⁵ on two fixtures, max trace distance {worst_distance:.4}, worst frequency {worst_sigma:.2}σ, {elapsed:.1} s"
    ))
}

fn runner() -> TestRunner {
    let config = Config {
        cases: 256,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

fn shape(parties: usize) -> Shape {
    Shape {
        parties,
        ..Shape::default()
    }
}

fn singleton_independence(
    seed: u64,
    parties: usize,
    taus: &[f64],
    others: &[f64],
) -> Result<(), TestCaseError> {
    let s = random_scenario(seed, shape(parties));
    let engine = Engine::new(s).map_err(|e| fail(e.to_string()))?;
    for i in 0..parties {
        let mut moved = others[..parties].to_vec();
        moved[i] = taus[i];
        let a = engine.sector(&taus[..parties], Subset::singleton(i));
        let b = engine.sector(&moved, Subset::singleton(i));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert!(max_diff(&a, &b) <= TOL, "sector {i} moved with the others")
            }
            (Err(_), Err(_)) => {}
            _ => return Err(fail(format!("sector {i} possible at one tuple only"))),
        }
    }
    Ok(())
}

fn outcome_independence(seed: u64, parties: usize, taus: &[f64]) -> Result<(), TestCaseError> {
    let s = random_scenario(seed, shape(parties));
    let engine = Engine::new(s.clone()).map_err(|e| fail(e.to_string()))?;
    let taus = &taus[..parties];
    for i in 0..parties {
        let Ok(base) = engine.sector(taus, Subset::singleton(i)) else {
            continue;
        };
        let x = s.worldlines[i].position(taus[i]);
        for k in s.selective_indices() {
            let event = s.intervention_event(k);
            if s.interventions[k].subsystem == i || causally_precedes(&event, &x).unwrap() {
                continue;
            }
            let flipped = s
                .with_outcome(k, 1 - s.interventions[k].chosen().unwrap())
                .unwrap();
            for variant in [flipped, s.without_intervention(k)] {
                let rho = Engine::new(variant)
                    .and_then(|e| e.sector(taus, Subset::singleton(i)))
                    .map_err(|e| fail(e.to_string()))?;
                prop_assert!(
                    max_diff(&rho, &base) <= TOL,
                    "remote change to {k} reached {i}"
                );
            }
        }
    }
    Ok(())
}

fn spacelike_commutation(seed: u64) -> Result<(), TestCaseError> {
    let s = random_scenario(
        seed,
        Shape {
            spacing: 8.0,
            max_interventions: 4,
            tau_range: (0.0, 2.0),
            ..Shape::default()
        },
    );
    let m = s.interventions.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|j| (j + 1..m).map(move |k| (j, k)))
        .filter(|&(j, k)| {
            let (ej, ek) = (s.intervention_event(j), s.intervention_event(k));
            s.interventions[j].subsystem != s.interventions[k].subsystem
                && !causally_precedes(&ej, &ek).unwrap()
                && !causally_precedes(&ek, &ej).unwrap()
        })
        .collect();
    prop_assume!(!pairs.is_empty());
    let rho = s.initial_state.matrix();
    for (j, k) in pairs {
        let jk = s
            .apply_sequence(&[j, k], rho)
            .map_err(|e| fail(e.to_string()))?;
        let kj = s
            .apply_sequence(&[k, j], rho)
            .map_err(|e| fail(e.to_string()))?;
        prop_assert!(
            jk.max_abs_diff(&kj) <= TOL,
            "interventions {j} and {k} do not commute"
        );
    }
    Ok(())
}

fn boost_covariance(
    seed: u64,
    parties: usize,
    taus: &[f64],
    rapidity: f64,
) -> Result<(), TestCaseError> {
    let s = random_scenario(seed, shape(parties));
    let boosted = s.boosted(&Boost::new(rapidity, vec![1.0]).unwrap());
    let (a, b) = (
        Engine::new(s).map_err(|e| fail(e.to_string()))?,
        Engine::new(boosted).map_err(|e| fail(e.to_string()))?,
    );
    let taus = &taus[..parties];
    for subset in Subset::all(parties) {
        match (a.sector(taus, subset), b.sector(taus, subset)) {
            (Ok(x), Ok(y)) => prop_assert!(
                max_diff(&x, &y) <= 1e-10,
                "sector {subset:?} changed under boost"
            ),
            (Err(_), Err(_)) => {}
            _ => {
                return Err(fail(format!(
                    "sector {subset:?} possible in one frame only"
                )))
            }
        }
    }
    Ok(())
}

fn parser_round_trip(seed: u64, parties: usize, v: f64) -> Result<(), TestCaseError> {
    let mut s = random_scenario(seed, shape(parties));
    s.foliations.push(NamedFoliation {
        name: "leaf".into(),
        foliation: Foliation::new(vec![v]).unwrap(),
    });
    let text = serialize_scenario(&s);
    let parsed = parse_scenario(&text).map_err(|e| fail(e.to_string()))?;
    prop_assert_eq!(&parsed, &s);
    prop_assert_eq!(serialize_scenario(&parsed), text);
    Ok(())
}

fn property_suites() -> Check {
    let taus = || prop::collection::vec(-3.0f64..7.0, 3);
    let mut lines = Vec::new();
    let mut record = |name: &str, result: Result<(), String>| -> Result<(), String> {
        result.map_err(|e| format!("{name}: {e}"))?;
        lines.push(format!("{name} 256/256"));
        Ok(())
    };
    record(
        "singleton-independence",
        runner()
            .run(
                &(any::<u64>(), 2usize..=3, taus(), taus()),
                |(seed, n, t, o)| singleton_independence(seed, n, &t, &o),
            )
            .map_err(|e| e.to_string()),
    )?;
    record(
        "no-signalling",
        runner()
            .run(&(any::<u64>(), 2usize..=3, taus()), |(seed, n, t)| {
                outcome_independence(seed, n, &t)
            })
            .map_err(|e| e.to_string()),
    )?;
    record(
        "spacelike-commutation",
        runner()
            .run(&any::<u64>(), spacelike_commutation)
            .map_err(|e| e.to_string()),
    )?;
    record(
        "boost-covariance",
        runner()
            .run(
                &(any::<u64>(), 2usize..=3, taus(), -2.0f64..=2.0),
                |(seed, n, t, r)| boost_covariance(seed, n, &t, r),
            )
            .map_err(|e| e.to_string()),
    )?;
    record(
        "parser-round-trip",
        runner()
            .run(&(any::<u64>(), 1usize..=3, -0.9f64..0.9), |(seed, n, v)| {
                parser_round_trip(seed, n, v)
            })
            .map_err(|e| e.to_string()),
    )?;
    Ok(lines.join(", "))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "Bell sector values after A's measurement",
            sector_reproduction,
        ),
        ("full case table, σz and σx", case_table),
        ("EPR statistics", epr_statistics),
        ("single-state incompatibility", incompatibility),
        ("charge ledger", charge_bookkeeping),
        ("foliation tables", foliation_tables),
        ("oracle equivalence", oracle_equivalence),
        ("Monte Carlo ensemble", monte_carlo),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

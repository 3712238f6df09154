//! Exact and sampled measurement statistics.
//!
//! Everything here applies interventions in global coordinate-time order with
//! direct tensor-index arithmetic, independently of the per-subsystem order
//! and the lifted operators the polystate engine uses. Agreement between the
//! two is therefore a real check.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    normalize, ptrace_matrix, trace_distance, CMatrix, DensityOperator, C64, IMPOSSIBLE_TRACE, ZERO,
};
use crate::polystate::{Engine, Subset};
use crate::scenario::{Scenario, Selection};
use crate::spacetime::{causally_precedes, Event};

pub const BRANCH_CAP: u128 = 1_000_000;

/// One assignment of outcomes to every selective intervention.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Outcome per selective intervention, in scenario order.
    pub outcomes: Vec<usize>,
    pub probability: f64,
    /// `None` for branches of zero probability.
    pub final_state: Option<DensityOperator>,
}

/// Sampled outcomes of repeated runs of one scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunLog {
    pub seed: u64,
    pub n: usize,
    /// Intervention index of each recorded column.
    pub selective: Vec<usize>,
    pub outcomes: Vec<Vec<usize>>,
}

impl RunLog {
    /// How often each outcome tuple occurred.
    pub fn frequencies(&self) -> BTreeMap<Vec<usize>, usize> {
        let mut out = BTreeMap::new();
        for run in &self.outcomes {
            *out.entry(run.clone()).or_insert(0) += 1;
        }
        out
    }
}

/// `(K ⊗ 1) ρ (K ⊗ 1)†` with `K` acting on factor `target`, computed by
/// index arithmetic without forming the lifted operator.
pub fn apply_local(rho: &CMatrix, k: &CMatrix, target: usize, dims: &[usize]) -> CMatrix {
    let n = rho.rows();
    let d = dims[target];
    let stride: usize = dims[target + 1..].iter().product();
    let digit = |idx: usize| (idx / stride) % d;
    let with_digit = |idx: usize, v: usize| idx - digit(idx) * stride + v * stride;

    let mut left = CMatrix::zeros(n, n);
    for r in 0..n {
        let a = digit(r);
        for b in 0..d {
            let kab = k[(a, b)];
            if kab == ZERO {
                continue;
            }
            let src = with_digit(r, b);
            for c in 0..n {
                left[(r, c)] += kab * rho[(src, c)];
            }
        }
    }
    let mut out = CMatrix::zeros(n, n);
    for c in 0..n {
        let a = digit(c);
        for b in 0..d {
            let kab: C64 = k[(a, b)].conj();
            if kab == ZERO {
                continue;
            }
            let src = with_digit(c, b);
            for r in 0..n {
                out[(r, c)] += left[(r, src)] * kab;
            }
        }
    }
    out
}

/// Intervention indices by coordinate time of their events; ties broken by
/// subsystem and proper time.
pub fn global_order(s: &Scenario) -> Vec<usize> {
    let events = s.intervention_events();
    let mut order: Vec<usize> = (0..s.interventions.len()).collect();
    order.sort_by(|&a, &b| {
        let (ia, ib) = (&s.interventions[a], &s.interventions[b]);
        events[a]
            .t()
            .total_cmp(&events[b].t())
            .then(ia.subsystem.cmp(&ib.subsystem))
            .then(ia.tau.total_cmp(&ib.tau))
    });
    order
}

fn branch_count(s: &Scenario, indices: impl IntoIterator<Item = usize>) -> u128 {
    indices
        .into_iter()
        .map(|k| s.interventions[k].branches().len() as u128)
        .try_fold(1u128, |acc, b| acc.checked_mul(b))
        .unwrap_or(u128::MAX)
}

/// Every branch of the full Lüders chain.
pub fn enumerate_branches(s: &Scenario) -> Result<Vec<Branch>> {
    let count = branch_count(s, 0..s.interventions.len());
    if count > BRANCH_CAP {
        return Err(Error::BranchExplosion {
            count,
            cap: BRANCH_CAP,
        });
    }
    let order = global_order(s);
    let selective = s.selective_indices();
    let mut leaves = Vec::new();
    walk(
        s,
        &order,
        &mut |_| None,
        s.initial_state.matrix().clone(),
        &mut BTreeMap::new(),
        &mut leaves,
    );
    leaves
        .into_iter()
        .map(|(chosen, m)| {
            let probability = m.trace().re.max(0.0);
            let final_state = (probability > IMPOSSIBLE_TRACE)
                .then(|| normalize(&m))
                .transpose();
            Ok(Branch {
                outcomes: selective.iter().map(|k| chosen[k]).collect(),
                probability,
                final_state: final_state?,
            })
        })
        .collect()
}

/// Depth-first over the Kraus branches of `order`. `fixed(k)` pins the
/// branch of intervention `k`; unpinned selective interventions fan out.
fn walk(
    s: &Scenario,
    order: &[usize],
    fixed: &mut dyn FnMut(usize) -> Option<usize>,
    rho: CMatrix,
    chosen: &mut BTreeMap<usize, usize>,
    leaves: &mut Vec<(BTreeMap<usize, usize>, CMatrix)>,
) {
    let Some((&k, rest)) = order.split_first() else {
        leaves.push((chosen.clone(), rho));
        return;
    };
    let iv = &s.interventions[k];
    let branches = iv.branches();
    let picks: Vec<usize> = match fixed(k) {
        Some(b) => vec![b],
        None => (0..branches.len()).collect(),
    };
    for b in picks {
        let next = apply_local(&rho, &branches[b], iv.subsystem, &s.dims);
        if iv.is_selective() {
            chosen.insert(k, b);
        }
        walk(s, rest, fixed, next, chosen, leaves);
        chosen.remove(&k);
    }
}

/// Joint state after the `included` interventions, keeping only branches in
/// which every `conditioned` intervention gave its recorded outcome and
/// averaging over the rest.
pub fn conditional_state(
    s: &Scenario,
    included: &Selection,
    conditioned: &Selection,
) -> Result<DensityOperator> {
    let order: Vec<usize> = global_order(s)
        .into_iter()
        .filter(|&k| included.contains(k))
        .collect();
    let free = order.iter().copied().filter(|&k| !conditioned.contains(k));
    let count = branch_count(s, free);
    if count > BRANCH_CAP {
        return Err(Error::BranchExplosion {
            count,
            cap: BRANCH_CAP,
        });
    }
    let mut leaves = Vec::new();
    let mut fixed = |k: usize| {
        if conditioned.contains(k) {
            s.interventions[k].chosen()
        } else {
            None
        }
    };
    walk(
        s,
        &order,
        &mut fixed,
        s.initial_state.matrix().clone(),
        &mut BTreeMap::new(),
        &mut leaves,
    );
    let dim = s.total_dim();
    let sum = leaves
        .into_iter()
        .fold(CMatrix::zeros(dim, dim), |acc, (_, m)| &acc + &m);
    normalize(&sum)
}

fn evaluation_events(s: &Scenario, taus: &[f64], subset: Subset) -> Vec<Event> {
    subset
        .indices()
        .into_iter()
        .map(|i| s.worldlines[i].position(taus[i]))
        .collect()
}

/// Which interventions an ensemble held by `subset` at `taus` has passed
/// through, and which of those it was filtered on.
///
/// Filtering: selective interventions in the causal past union. Passed
/// through without filtering: interventions on the other subsystems that are
/// not in the causal future of any evaluation event.
pub fn knowledge_split(
    s: &Scenario,
    taus: &[f64],
    subset: Subset,
) -> Result<(Selection, Selection)> {
    if taus.len() != s.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} proper times for {} subsystems",
            taus.len(),
            s.n()
        )));
    }
    let xs = evaluation_events(s, taus, subset);
    let events = s.intervention_events();
    let mut included = Vec::new();
    let mut conditioned = Vec::new();
    for (k, e) in events.iter().enumerate() {
        let in_past = xs.iter().any(|x| causally_precedes(e, x).unwrap_or(false));
        let in_future = xs.iter().any(|x| causally_precedes(x, e).unwrap_or(false));
        let elsewhere = !subset.contains(s.interventions[k].subsystem);
        if in_past {
            included.push(k);
            if s.interventions[k].is_selective() {
                conditioned.push(k);
            }
        } else if elsewhere && !in_future {
            included.push(k);
        }
    }
    Ok((Selection::new(included), Selection::new(conditioned)))
}

/// Exact sector from branch enumeration under the knowledge rule of
/// [`knowledge_split`].
pub fn oracle_sector(s: &Scenario, taus: &[f64], subset: Subset) -> Result<DensityOperator> {
    let (included, conditioned) = knowledge_split(s, taus, subset)?;
    let joint = conditional_state(s, &included, &conditioned)?;
    joint.ptrace(&s.dims, &subset.indices())
}

/// `n` independent runs. Run `r` draws from its own ChaCha stream `r` of
/// `seed`, so the log does not depend on thread scheduling.
pub fn sample_runs(s: &Scenario, n: usize, seed: u64) -> Result<RunLog> {
    if n == 0 {
        return Err(Error::InvalidInput("at least one run is required".into()));
    }
    let order = global_order(s);
    let selective = s.selective_indices();
    let column: BTreeMap<usize, usize> =
        selective.iter().enumerate().map(|(c, &k)| (k, c)).collect();
    let outcomes = (0..n)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(run as u64);
            let mut rho = s.initial_state.matrix().clone();
            let mut record = vec![0; selective.len()];
            for &k in &order {
                let iv = &s.interventions[k];
                let branches = iv.branches();
                if !iv.is_selective() {
                    rho = apply_local(&rho, &branches[0], iv.subsystem, &s.dims);
                    continue;
                }
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = None;
                let mut last_nonzero = 0;
                let outs: Vec<CMatrix> = branches
                    .iter()
                    .map(|b| apply_local(&rho, b, iv.subsystem, &s.dims))
                    .collect();
                for (b, m) in outs.iter().enumerate() {
                    let p = m.trace().re.max(0.0);
                    if p > 0.0 {
                        last_nonzero = b;
                    }
                    acc += p;
                    if pick.is_none() && u < acc {
                        pick = Some(b);
                    }
                }
                // rounding can leave u just above the accumulated total
                let b = pick.unwrap_or(last_nonzero);
                let p = outs[b].trace().re;
                rho = outs[b].scale_real(1.0 / p);
                record[column[&k]] = b;
            }
            record
        })
        .collect();
    Ok(RunLog {
        seed,
        n,
        selective,
        outcomes,
    })
}

/// Ensemble held by `subset` at `taus`: runs whose outcomes disagree with
/// the recorded ones inside the causal past union are discarded, and each
/// retained run contributes its own normalized branch state.
pub fn empirical_sector(
    log: &RunLog,
    s: &Scenario,
    subset: Subset,
    taus: &[f64],
) -> Result<DensityOperator> {
    Ok(retained_sector(log, s, subset, taus)?.0)
}

/// The empirical sector together with the number of runs retained.
pub fn retained_sector(
    log: &RunLog,
    s: &Scenario,
    subset: Subset,
    taus: &[f64],
) -> Result<(DensityOperator, usize)> {
    if log.selective != s.selective_indices() {
        return Err(Error::InvalidInput(
            "run log belongs to a different scenario".into(),
        ));
    }
    let (included, conditioned) = knowledge_split(s, taus, subset)?;
    let cols: Vec<(usize, usize)> = log.selective.iter().copied().enumerate().collect();
    let mut groups: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut retained = 0usize;
    for run in &log.outcomes {
        let keep = cols
            .iter()
            .all(|&(c, k)| !conditioned.contains(k) || Some(run[c]) == s.interventions[k].chosen());
        if !keep {
            continue;
        }
        retained += 1;
        let key: Vec<usize> = cols
            .iter()
            .filter(|&&(_, k)| included.contains(k))
            .map(|&(c, _)| run[c])
            .collect();
        *groups.entry(key).or_insert(0) += 1;
    }
    if retained == 0 {
        return Err(Error::EmptyEnsemble(format!(
            "no run matches the recorded outcomes for sector {}",
            subset.label(&s.names)
        )));
    }
    let order: Vec<usize> = global_order(s)
        .into_iter()
        .filter(|&k| included.contains(k))
        .collect();
    let dim = s.total_dim();
    let mut sum = CMatrix::zeros(dim, dim);
    for (key, count) in groups {
        let picks: BTreeMap<usize, usize> = cols
            .iter()
            .filter(|&&(_, k)| included.contains(k))
            .map(|&(_, k)| k)
            .zip(key)
            .collect();
        let mut rho = s.initial_state.matrix().clone();
        for &k in &order {
            let iv = &s.interventions[k];
            let b = picks.get(&k).copied().unwrap_or(0);
            rho = apply_local(&rho, &iv.branches()[b], iv.subsystem, &s.dims);
        }
        let tr = rho.trace().re;
        if tr <= IMPOSSIBLE_TRACE {
            continue;
        }
        sum = &sum + &rho.scale_real(count as f64 / (tr * retained as f64));
    }
    Ok((
        normalize(&ptrace_matrix(&sum, &s.dims, &subset.indices())?)?,
        retained,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorComparison {
    pub sector: String,
    pub retained: usize,
    /// `None` when no run was retained.
    pub empirical_distance: Option<f64>,
    pub oracle_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub taus: Vec<f64>,
    pub sectors: Vec<SectorComparison>,
    pub max_empirical_distance: f64,
    pub max_oracle_distance: f64,
}

/// Trace distances of empirical and exact-oracle sectors to the engine's
/// sectors, for every subset.
pub fn compare_to_polystate(
    log: &RunLog,
    engine: &Engine,
    taus: &[f64],
) -> Result<ComparisonReport> {
    let s = engine.scenario();
    let polystate = engine.polystate_at(taus)?;
    let sectors = Subset::all(s.n())
        .map(|subset| {
            let exact = polystate.sector(subset);
            let (empirical_distance, retained) = match retained_sector(log, s, subset, taus) {
                Ok((rho, count)) => (Some(trace_distance(&rho, exact)?), count),
                Err(Error::EmptyEnsemble(_)) => (None, 0),
                Err(e) => return Err(e),
            };
            let oracle = oracle_sector(s, taus, subset)?;
            Ok(SectorComparison {
                sector: subset.label(&s.names),
                retained,
                empirical_distance,
                oracle_distance: trace_distance(&oracle, exact)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_empirical_distance = sectors
        .iter()
        .filter_map(|c| c.empirical_distance)
        .fold(0.0, f64::max);
    let max_oracle_distance = sectors
        .iter()
        .map(|c| c.oracle_distance)
        .fold(0.0, f64::max);
    Ok(ComparisonReport {
        taus: taus.to_vec(),
        sectors,
        max_empirical_distance,
        max_oracle_distance,
    })
}

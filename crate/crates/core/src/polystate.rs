//! Polystate evaluation.
//!
//! The sector for a subset `I` of subsystems, each at its own proper time,
//! applies every intervention in the union of their closed causal pasts to
//! the initial state, traces out the complement and renormalizes. Sectors are
//! piecewise constant in the proper times, so the unnormalized joint states
//! are cached by the set of interventions they include.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    expect, kron_all, lift_local, normalize, CMatrix, DensityOperator, ObservableOp,
};
use crate::scenario::{Scenario, Selection};
use crate::spacetime::{
    causally_precedes, lightcone_crossings, Event, Foliation, Region, Worldline,
};

pub const DEFAULT_MAX_PARTIES: usize = 10;

/// Nonempty set of subsystems as a bitmask; bit `i` is subsystem `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset(u32);

impl Subset {
    pub fn from_mask(mask: u32) -> Self {
        Self(mask)
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        Self(indices.iter().fold(0, |m, &i| m | (1 << i)))
    }

    pub fn singleton(i: usize) -> Self {
        Self(1 << i)
    }

    pub fn full(n: usize) -> Self {
        Self(((1u64 << n) - 1) as u32)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 32 && self.0 & (1 << i) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in ascending order.
    pub fn indices(self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).collect()
    }

    /// Every nonempty subset of `n` subsystems, by increasing mask.
    pub fn all(n: usize) -> impl Iterator<Item = Subset> {
        (1..=Subset::full(n).0).map(Subset)
    }

    /// Names concatenated when all are single characters, comma-joined
    /// otherwise.
    pub fn label(self, names: &[String]) -> String {
        let parts: Vec<&str> = self
            .indices()
            .into_iter()
            .map(|i| names[i].as_str())
            .collect();
        if parts.iter().all(|p| p.chars().count() == 1) {
            parts.concat()
        } else {
            parts.join(",")
        }
    }

    /// Reads `"AB"`, `"A,B"` or a single name.
    pub fn parse(text: &str, names: &[String]) -> Result<Subset> {
        let lookup = |name: &str| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown subsystem {name:?}")))
        };
        let text = text.trim();
        let indices: Vec<usize> = if text.contains(',') {
            text.split(',')
                .map(|p| lookup(p.trim()))
                .collect::<Result<_>>()?
        } else if let Ok(i) = lookup(text) {
            vec![i]
        } else {
            text.chars()
                .map(|c| lookup(&c.to_string()))
                .collect::<Result<_>>()?
        };
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty subsystem set".into()));
        }
        Ok(Subset::from_indices(&indices))
    }
}

/// All sectors at one tuple of proper times, indexed by subset mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Polystate {
    pub names: Vec<String>,
    pub dims: Vec<usize>,
    pub eval_taus: Vec<f64>,
    sectors: Vec<DensityOperator>,
}

impl Polystate {
    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn sector(&self, subset: Subset) -> &DensityOperator {
        &self.sectors[subset.mask() as usize - 1]
    }

    pub fn sectors(&self) -> impl Iterator<Item = (Subset, &DensityOperator)> {
        self.sectors
            .iter()
            .enumerate()
            .map(|(m, rho)| (Subset::from_mask(m as u32 + 1), rho))
    }

    pub fn expect_individual(&self, i: usize, obs: &ObservableOp) -> Result<f64> {
        expect(self.sector(Subset::singleton(i)), obs)
    }

    pub fn expect_joint(&self, subset: Subset, obs: &ObservableOp) -> Result<f64> {
        expect(self.sector(subset), obs)
    }
}

impl fmt::Display for Polystate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (subset, rho) in self.sectors() {
            writeln!(f, "{}: {:?}", subset.label(&self.names), rho.matrix())?;
        }
        Ok(())
    }
}

/// Evaluates sectors of one scenario, sharing work between proper-time
/// tuples that select the same interventions.
pub struct Engine {
    scenario: Scenario,
    events: Vec<Event>,
    cache: Mutex<HashMap<Selection, CMatrix>>,
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("scenario", &self.scenario)
            .finish_non_exhaustive()
    }
}

impl Engine {
    pub fn new(scenario: Scenario) -> Result<Self> {
        Self::with_max_parties(scenario, DEFAULT_MAX_PARTIES)
    }

    pub fn with_max_parties(scenario: Scenario, max_parties: usize) -> Result<Self> {
        let diags = scenario.validate();
        if !diags.is_empty() {
            return Err(Error::Validation(diags));
        }
        if scenario.n() > max_parties.min(31) {
            return Err(Error::InvalidInput(format!(
                "{} subsystems exceed the sector enumeration cap of {max_parties}",
                scenario.n()
            )));
        }
        let events = scenario.intervention_events();
        Ok(Self {
            scenario,
            events,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn n(&self) -> usize {
        self.scenario.n()
    }

    pub fn intervention_event(&self, k: usize) -> &Event {
        &self.events[k]
    }

    fn check_taus(&self, taus: &[f64]) -> Result<()> {
        if taus.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} proper times for {} subsystems",
                taus.len(),
                self.n()
            )));
        }
        if taus.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("proper times must be finite".into()));
        }
        Ok(())
    }

    fn check_subset(&self, subset: Subset) -> Result<()> {
        if subset.is_empty() || subset.mask() > Subset::full(self.n()).mask() {
            return Err(Error::InvalidInput(format!(
                "subset mask {:#b} is not a nonempty subset of {} subsystems",
                subset.mask(),
                self.n()
            )));
        }
        Ok(())
    }

    /// Evaluation events `x_i(τ_i)` for the members of `subset`.
    pub fn evaluation_events(&self, taus: &[f64], subset: Subset) -> Vec<Event> {
        subset
            .indices()
            .into_iter()
            .map(|i| self.scenario.worldlines[i].position(taus[i]))
            .collect()
    }

    /// Union of the members' causal pasts.
    pub fn past_union(&self, taus: &[f64], subset: Subset) -> Region {
        Region::past_of_events(self.evaluation_events(taus, subset))
    }

    /// Interventions inside the members' causal pasts.
    pub fn selection(&self, taus: &[f64], subset: Subset) -> Selection {
        let xs = self.evaluation_events(taus, subset);
        self.select_below(&xs)
    }

    fn select_below(&self, xs: &[Event]) -> Selection {
        Selection::new(
            (0..self.events.len())
                .filter(|&k| {
                    xs.iter()
                        .any(|x| causally_precedes(&self.events[k], x).unwrap_or(false))
                })
                .collect(),
        )
    }

    /// Unnormalized joint state after the selected interventions.
    pub fn joint_unnormalized(&self, selection: &Selection) -> Result<CMatrix> {
        if let Some(m) = self.cache.lock().expect("cache lock").get(selection) {
            return Ok(m.clone());
        }
        let m = self
            .scenario
            .apply(selection, self.scenario.initial_state.matrix())?;
        self.cache
            .lock()
            .expect("cache lock")
            .insert(selection.clone(), m.clone());
        Ok(m)
    }

    fn reduce(
        &self,
        selection: &Selection,
        subset: Subset,
        what: impl Fn() -> String,
    ) -> Result<DensityOperator> {
        let joint = self.joint_unnormalized(selection)?;
        let reduced = crate::linalg::ptrace_matrix(&joint, &self.scenario.dims, &subset.indices())?;
        normalize(&reduced).map_err(|e| match e {
            Error::ImpossibleOutcome(m) => Error::ImpossibleOutcome(format!("{}: {m}", what())),
            other => other,
        })
    }

    pub fn sector(&self, taus: &[f64], subset: Subset) -> Result<DensityOperator> {
        self.check_taus(taus)?;
        self.check_subset(subset)?;
        let sel = self.selection(taus, subset);
        self.reduce(&sel, subset, || {
            format!(
                "sector {} at proper times {taus:?}",
                subset.label(&self.scenario.names)
            )
        })
    }

    /// All `2ⁿ − 1` sectors; the first impossible sector aborts the lot.
    pub fn polystate_at(&self, taus: &[f64]) -> Result<Polystate> {
        self.check_taus(taus)?;
        let subsets: Vec<Subset> = Subset::all(self.n()).collect();
        let sectors = subsets
            .par_iter()
            .map(|&s| self.sector(taus, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Polystate {
            names: self.scenario.names.clone(),
            dims: self.scenario.dims.clone(),
            eval_taus: taus.to_vec(),
            sectors,
        })
    }

    /// Probability that every subsystem's projector fires, read off the
    /// sector of all subsystems.
    pub fn prob_joint_outcome(&self, taus: &[f64], projectors: &[CMatrix]) -> Result<f64> {
        if projectors.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} projectors for {} subsystems",
                projectors.len(),
                self.n()
            )));
        }
        let p = kron_all(projectors).expect("at least one subsystem");
        let rho = self.sector(taus, Subset::full(self.n()))?;
        expect(&rho, &ObservableOp::new(p)?)
    }

    pub fn marginal_prob(&self, taus: &[f64], i: usize, projector: &CMatrix) -> Result<f64> {
        let rho = self.sector(taus, Subset::singleton(i))?;
        expect(&rho, &ObservableOp::new(projector.clone())?)
    }

    /// Probability for `projector` on subsystem `i` in the sector of all
    /// subsystems at `conditioning_taus`. Which other outcomes are
    /// conditioned on is fixed by which of their measurements those proper
    /// times place in the causal past union.
    pub fn conditional_prob(
        &self,
        i: usize,
        projector: &CMatrix,
        conditioning_taus: &[f64],
    ) -> Result<f64> {
        if i >= self.n() {
            return Err(Error::InvalidInput(format!("no subsystem {i}")));
        }
        let lifted = lift_local(projector, i, &self.scenario.dims)?;
        let rho = self.sector(conditioning_taus, Subset::full(self.n()))?;
        expect(&rho, &ObservableOp::new(lifted)?)
    }

    /// State held by an observer at `x` who knows everything in its causal
    /// past.
    pub fn observer_state(&self, x: &Event) -> Result<DensityOperator> {
        let sel = self.select_below(std::slice::from_ref(x));
        self.reduce(&sel, Subset::full(self.n()), || {
            format!("observer state at {:?}", x.coords())
        })
    }

    pub fn recollection(&self, z: &Worldline, tau: f64) -> Result<DensityOperator> {
        self.observer_state(&z.position(tau))
    }

    /// State conditioned on everything at or below leaf `t` of `f`.
    pub fn foliation_state(&self, f: &Foliation, t: f64) -> Result<DensityOperator> {
        let sel = self.foliation_selection(f, t);
        self.reduce(&sel, Subset::full(self.n()), || {
            format!("foliation state at leaf {t}")
        })
    }

    pub fn foliation_selection(&self, f: &Foliation, t: f64) -> Selection {
        Selection::new(
            (0..self.events.len())
                .filter(|&k| f.leaf_of(&self.events[k]) <= t)
                .collect(),
        )
    }
}

/// Proper times before every intervention's past lightcone on each
/// worldline: at these times no sector includes any intervention.
pub fn early_taus(s: &Scenario) -> Result<Vec<f64>> {
    let events = s.intervention_events();
    s.worldlines
        .iter()
        .map(|w| {
            let mut lo = 0.0f64;
            for x in &events {
                lo = lo.min(lightcone_crossings(w, x)?.0);
            }
            Ok(lo - 1.0)
        })
        .collect()
}

/// Proper times after every intervention's future lightcone on each
/// worldline: at these times every sector includes every intervention.
pub fn late_taus(s: &Scenario) -> Result<Vec<f64>> {
    let events = s.intervention_events();
    s.worldlines
        .iter()
        .map(|w| {
            let mut hi = 0.0f64;
            for x in &events {
                hi = hi.max(lightcone_crossings(w, x)?.1);
            }
            Ok(hi + 1.0)
        })
        .collect()
}

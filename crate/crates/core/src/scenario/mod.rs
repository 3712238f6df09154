//! Scenario data model, scenario-file parsing and validation, and the region
//! transformation map.
//!
//! A scenario is a set of subsystems on worldlines, an initial joint state,
//! and a list of strictly local interventions pinned to proper times. The map
//! for a spacetime region applies every intervention whose event lies in the
//! region; free evolution between interventions is trivial.

mod format;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use format::{load_scenario, parse_scenario, parse_scenario_with, serialize_scenario};

use crate::error::{Error, Result};
use crate::linalg::{conj_apply, lift_local, CMatrix, DensityOperator, DEFAULT_MAX_DIM};
use crate::spacetime::{region_contains, Boost, Event, Foliation, Region, Worldline};

/// Numerical tolerance for unitarity and Kraus completeness.
pub const OPERATOR_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SUBSYSTEMS: usize = 10;

/// Size caps applied during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_dim: usize,
    pub max_subsystems: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_MAX_DIM,
            max_subsystems: DEFAULT_MAX_SUBSYSTEMS,
        }
    }
}

/// One violated invariant, located by field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub field: String,
    pub invariant: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(field: impl Into<String>, invariant: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            invariant: invariant.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.field, self.invariant, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InterventionKind {
    Unitary(CMatrix),
    /// Kraus branch `kraus[chosen]` of a measurement with recorded outcome.
    Selective {
        kraus: Vec<CMatrix>,
        chosen: usize,
        labels: Vec<String>,
    },
}

/// A local operation on one subsystem at one proper time.
#[derive(Debug, Clone, PartialEq)]
pub struct Intervention {
    pub subsystem: usize,
    pub tau: f64,
    pub kind: InterventionKind,
}

impl Intervention {
    pub fn unitary(subsystem: usize, tau: f64, u: CMatrix) -> Self {
        Self {
            subsystem,
            tau,
            kind: InterventionKind::Unitary(u),
        }
    }

    /// Projective measurement in the basis `kets`, outcome `chosen` recorded.
    pub fn projective(
        subsystem: usize,
        tau: f64,
        kets: &[crate::linalg::Ket],
        chosen: usize,
    ) -> Self {
        Self {
            subsystem,
            tau,
            kind: InterventionKind::Selective {
                kraus: kets.iter().map(|k| k.projector()).collect(),
                chosen,
                labels: default_labels(kets.len()),
            },
        }
    }

    pub fn is_selective(&self) -> bool {
        matches!(self.kind, InterventionKind::Selective { .. })
    }

    /// The operator applied on the recorded branch.
    pub fn operator(&self) -> &CMatrix {
        match &self.kind {
            InterventionKind::Unitary(u) => u,
            InterventionKind::Selective { kraus, chosen, .. } => &kraus[*chosen],
        }
    }

    /// Every branch operator: the unitary alone, or the full Kraus set.
    pub fn branches(&self) -> &[CMatrix] {
        match &self.kind {
            InterventionKind::Unitary(u) => std::slice::from_ref(u),
            InterventionKind::Selective { kraus, .. } => kraus,
        }
    }

    pub fn chosen(&self) -> Option<usize> {
        match &self.kind {
            InterventionKind::Unitary(_) => None,
            InterventionKind::Selective { chosen, .. } => Some(*chosen),
        }
    }

    pub fn label(&self) -> Option<&str> {
        match &self.kind {
            InterventionKind::Unitary(_) => None,
            InterventionKind::Selective { chosen, labels, .. } => {
                labels.get(*chosen).map(String::as_str)
            }
        }
    }
}

pub(crate) fn default_labels(n: usize) -> Vec<String> {
    if n == 2 {
        vec!["+1".into(), "-1".into()]
    } else {
        (0..n).map(|i| i.to_string()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedFoliation {
    pub name: String,
    pub foliation: Foliation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub names: Vec<String>,
    pub dims: Vec<usize>,
    pub worldlines: Vec<Worldline>,
    pub initial_state: DensityOperator,
    pub interventions: Vec<Intervention>,
    /// Number of spatial dimensions `d`.
    pub spatial_dim: usize,
    pub foliations: Vec<NamedFoliation>,
}

/// Sorted set of intervention indices picked out by a region.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Selection(Vec<usize>);

impl Selection {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn all(s: &Scenario) -> Self {
        Self((0..s.interventions.len()).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    pub fn is_subset(&self, other: &Selection) -> bool {
        self.0.iter().all(|k| other.contains(*k))
    }
}

impl Scenario {
    /// Builds and validates.
    pub fn new(
        names: Vec<String>,
        dims: Vec<usize>,
        worldlines: Vec<Worldline>,
        initial_state: DensityOperator,
        interventions: Vec<Intervention>,
    ) -> Result<Self> {
        let spatial_dim = worldlines.first().map_or(1, Worldline::spatial_dim);
        let s = Self {
            names,
            dims,
            worldlines,
            initial_state,
            interventions,
            spatial_dim,
            foliations: vec![],
        };
        let diags = s.validate();
        if diags.is_empty() {
            Ok(s)
        } else {
            Err(Error::Validation(diags))
        }
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn subsystem_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn foliation(&self, name: &str) -> Option<&Foliation> {
        self.foliations
            .iter()
            .find(|f| f.name == name)
            .map(|f| &f.foliation)
    }

    /// Spacetime event of intervention `k`.
    pub fn intervention_event(&self, k: usize) -> Event {
        let iv = &self.interventions[k];
        self.worldlines[iv.subsystem].position(iv.tau)
    }

    pub fn intervention_events(&self) -> Vec<Event> {
        (0..self.interventions.len())
            .map(|k| self.intervention_event(k))
            .collect()
    }

    pub fn selective_indices(&self) -> Vec<usize> {
        (0..self.interventions.len())
            .filter(|&k| self.interventions[k].is_selective())
            .collect()
    }

    /// Interventions whose events lie in `r`.
    pub fn select(&self, r: &Region) -> Selection {
        Selection(
            (0..self.interventions.len())
                .filter(|&k| region_contains(r, &self.intervention_event(k)))
                .collect(),
        )
    }

    /// Applies the selected interventions, per subsystem in ascending proper
    /// time. Unnormalized.
    pub fn apply(&self, selection: &Selection, rho: &CMatrix) -> Result<CMatrix> {
        let mut order: Vec<usize> = selection.indices().to_vec();
        order.sort_by(|&a, &b| {
            let (ia, ib) = (&self.interventions[a], &self.interventions[b]);
            ia.subsystem
                .cmp(&ib.subsystem)
                .then(ia.tau.total_cmp(&ib.tau))
        });
        self.apply_sequence(&order, rho)
    }

    /// Applies interventions in exactly the given order.
    pub fn apply_sequence(&self, order: &[usize], rho: &CMatrix) -> Result<CMatrix> {
        let total = self.total_dim();
        if !rho.is_square() || rho.rows() != total {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {}x{} against joint dimension {total}",
                rho.rows(),
                rho.cols()
            )));
        }
        let mut out = rho.clone();
        for &k in order {
            let iv = &self.interventions[k];
            let op = lift_local(iv.operator(), iv.subsystem, &self.dims)?;
            out = conj_apply(&op, &out)?;
        }
        Ok(out)
    }

    /// The map collecting every intervention inside `r`.
    pub fn psi_map(&self, r: &Region, rho: &CMatrix) -> Result<CMatrix> {
        self.apply(&self.select(r), rho)
    }

    /// Same scenario with intervention `k`'s recorded outcome replaced.
    pub fn with_outcome(&self, k: usize, outcome: usize) -> Result<Scenario> {
        let mut s = self.clone();
        match &mut s.interventions[k].kind {
            InterventionKind::Selective { kraus, chosen, .. } if outcome < kraus.len() => {
                *chosen = outcome;
                Ok(s)
            }
            _ => Err(Error::InvalidInput(format!(
                "intervention {k} has no outcome {outcome}"
            ))),
        }
    }

    pub fn without_intervention(&self, k: usize) -> Scenario {
        let mut s = self.clone();
        s.interventions.remove(k);
        s
    }

    /// Applies the same Lorentz boost to every worldline and foliation.
    pub fn boosted(&self, boost: &Boost) -> Scenario {
        let mut s = self.clone();
        s.worldlines = self.worldlines.iter().map(|w| w.boosted(boost)).collect();
        for f in &mut s.foliations {
            f.foliation = f.foliation.boosted(boost);
        }
        s
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        self.validate_with(&Limits::default())
    }

    pub fn validate_with(&self, limits: &Limits) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let n = self.n();
        if n == 0 {
            diags.push(Diagnostic::new(
                "subsystems",
                "no-subsystems",
                "at least one subsystem is required",
            ));
            return diags;
        }
        if n > limits.max_subsystems {
            diags.push(Diagnostic::new(
                "subsystems",
                "too-many-subsystems",
                format!("{n} subsystems exceed the cap of {}", limits.max_subsystems),
            ));
        }
        if self.names.len() != n {
            diags.push(Diagnostic::new(
                "subsystems",
                "name-count",
                format!("{} names for {n} subsystems", self.names.len()),
            ));
        }
        let mut seen = HashSet::new();
        for (i, name) in self.names.iter().enumerate() {
            if name.is_empty() || !seen.insert(name) {
                diags.push(Diagnostic::new(
                    format!("subsystems[{i}].name"),
                    "duplicate-name",
                    format!("subsystem name {name:?} is empty or repeated"),
                ));
            }
        }
        for (i, &d) in self.dims.iter().enumerate() {
            if d == 0 {
                diags.push(Diagnostic::new(
                    format!("subsystems[{i}].dim"),
                    "zero-dimension",
                    "local dimension must be positive",
                ));
            }
        }
        let total = self
            .dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d));
        match total {
            Some(t) if t > limits.max_dim => diags.push(Diagnostic::new(
                "subsystems",
                "dimension-cap",
                format!("joint dimension {t} exceeds the cap of {}", limits.max_dim),
            )),
            None => diags.push(Diagnostic::new(
                "subsystems",
                "dimension-cap",
                "joint dimension overflows",
            )),
            Some(t) if t != self.initial_state.dim() => diags.push(Diagnostic::new(
                "initial_state",
                "dimension-mismatch",
                format!(
                    "state of dimension {} for joint dimension {t}",
                    self.initial_state.dim()
                ),
            )),
            _ => {}
        }
        if self.worldlines.len() != n {
            diags.push(Diagnostic::new(
                "subsystems",
                "worldline-count",
                format!("{} worldlines for {n} subsystems", self.worldlines.len()),
            ));
        }
        for (i, w) in self.worldlines.iter().enumerate() {
            if w.spatial_dim() != self.spatial_dim {
                diags.push(Diagnostic::new(
                    format!("subsystems[{i}].worldline"),
                    "spacetime-dimension",
                    format!(
                        "worldline in 1+{} for a 1+{} spacetime",
                        w.spatial_dim(),
                        self.spatial_dim
                    ),
                ));
            }
        }
        for (j, f) in self.foliations.iter().enumerate() {
            if f.foliation.frame_velocity().len() != self.spatial_dim {
                diags.push(Diagnostic::new(
                    format!("foliations[{j}]"),
                    "spacetime-dimension",
                    "frame velocity has the wrong number of components",
                ));
            }
        }

        let mut taus: HashSet<(usize, u64)> = HashSet::new();
        for (k, iv) in self.interventions.iter().enumerate() {
            let field = format!("interventions[{k}]");
            if iv.subsystem >= n {
                diags.push(Diagnostic::new(
                    &field,
                    "unknown-subsystem",
                    format!("subsystem {} does not exist", iv.subsystem),
                ));
                continue;
            }
            if !iv.tau.is_finite() {
                diags.push(Diagnostic::new(
                    &field,
                    "non-finite-tau",
                    "proper time must be finite",
                ));
            } else if !taus.insert((iv.subsystem, iv.tau.to_bits())) {
                diags.push(Diagnostic::new(
                    &field,
                    "duplicate-proper-time",
                    format!(
                        "another intervention on {} at tau = {}",
                        self.names.get(iv.subsystem).map_or("?", String::as_str),
                        iv.tau
                    ),
                ));
            }
            let d = self.dims[iv.subsystem];
            let wrong_shape = |m: &CMatrix| !m.is_square() || m.rows() != d;
            match &iv.kind {
                InterventionKind::Unitary(u) => {
                    if wrong_shape(u) {
                        diags.push(Diagnostic::new(
                            &field,
                            "dimension-mismatch",
                            format!(
                                "unitary is {}x{}, subsystem dimension {d}",
                                u.rows(),
                                u.cols()
                            ),
                        ));
                    } else if !u.is_unitary(OPERATOR_TOL) {
                        diags.push(Diagnostic::new(
                            &field,
                            "non-unitary",
                            "U†U differs from the identity",
                        ));
                    }
                }
                InterventionKind::Selective {
                    kraus,
                    chosen,
                    labels,
                } => {
                    if kraus.is_empty() {
                        diags.push(Diagnostic::new(
                            &field,
                            "kraus-incomplete",
                            "empty Kraus set",
                        ));
                        continue;
                    }
                    if kraus.iter().any(wrong_shape) {
                        diags.push(Diagnostic::new(
                            &field,
                            "dimension-mismatch",
                            format!("Kraus operators must be {d}x{d}"),
                        ));
                        continue;
                    }
                    let mut sum = CMatrix::zeros(d, d);
                    for kop in kraus {
                        sum = &sum + &(&kop.adjoint() * kop);
                    }
                    let defect = sum.max_abs_diff(&CMatrix::identity(d));
                    if defect > OPERATOR_TOL {
                        diags.push(Diagnostic::new(
                            &field,
                            "kraus-incomplete",
                            format!("sum of K†K misses the identity by {defect:e}"),
                        ));
                    }
                    if *chosen >= kraus.len() {
                        diags.push(Diagnostic::new(
                            &field,
                            "outcome-out-of-range",
                            format!("outcome {chosen} of {} branches", kraus.len()),
                        ));
                    }
                    if labels.len() != kraus.len() {
                        diags.push(Diagnostic::new(
                            &field,
                            "label-count",
                            format!("{} labels for {} branches", labels.len(), kraus.len()),
                        ));
                    }
                }
            }
        }
        diags
    }
}

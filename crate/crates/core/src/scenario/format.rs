//! JSON scenario files.
//!
//! Complex numbers are `[re, im]` pairs; plain numbers are read as real.
//! Operators, kets and bases may be given explicitly or by name.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    default_labels, Diagnostic, Intervention, InterventionKind, Limits, NamedFoliation, Scenario,
};
use crate::error::{Error, Result};
use crate::linalg::{states, CMatrix, DensityOperator, Ket, C64};
use crate::spacetime::{Event, Foliation, Segment, Worldline};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    spacetime: SpacetimeDoc,
    subsystems: Vec<SubsystemDoc>,
    initial_state: StateDoc,
    #[serde(default)]
    interventions: Vec<InterventionDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    foliations: Vec<FoliationDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpacetimeDoc {
    d: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubsystemDoc {
    name: String,
    dim: usize,
    worldline: WorldlineDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldlineDoc {
    anchor: Vec<f64>,
    #[serde(default)]
    segments: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    final_v: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FoliationDoc {
    name: String,
    v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum ComplexDoc {
    Pair([f64; 2]),
    Real(f64),
}

impl ComplexDoc {
    fn value(self) -> C64 {
        match self {
            ComplexDoc::Pair([re, im]) => C64::new(re, im),
            ComplexDoc::Real(re) => C64::new(re, 0.0),
        }
    }

    fn from_value(z: C64) -> Self {
        ComplexDoc::Pair([z.re, z.im])
    }
}

type MatrixDoc = Vec<Vec<ComplexDoc>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum KetDoc {
    Name(String),
    Amplitudes(Vec<ComplexDoc>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum StateDoc {
    Named { named: String },
    Ket { ket: KetDoc },
    Matrix { matrix: MatrixDoc },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct AnglesDoc {
    theta: f64,
    #[serde(default)]
    phi: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum OperatorDoc {
    Name(String),
    PauliN { pauli_n: AnglesDoc },
    Projector { projector: KetDoc },
    Matrix(MatrixDoc),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum BasisDoc {
    Name(String),
    PauliN { n: AnglesDoc },
    Kets(Vec<KetDoc>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum OutcomeDoc {
    Index(usize),
    Label(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kraus: Option<Vec<OperatorDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    projective_basis: Option<BasisDoc>,
    outcome: OutcomeDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterventionDoc {
    on: String,
    tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unitary: Option<OperatorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    measure: Option<MeasureDoc>,
}

/// Parses and validates with the default limits.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_scenario_with(text, &Limits::default())
}

pub fn parse_scenario_with(text: &str, limits: &Limits) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let message = full
            .rsplit_once(" at line ")
            .map_or(full.as_str(), |(m, _)| m)
            .to_string();
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message,
        }
    })?;
    build(doc, limits)
}

pub fn load_scenario(path: impl AsRef<Path>, limits: &Limits) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario_with(&text, limits)
}

/// Pretty JSON with every operator written out explicitly.
pub fn serialize_scenario(s: &Scenario) -> String {
    let matrix_doc = |m: &CMatrix| -> MatrixDoc {
        m.to_rows()
            .into_iter()
            .map(|row| row.into_iter().map(ComplexDoc::from_value).collect())
            .collect()
    };
    let doc = ScenarioDoc {
        schema_version: Some(SCHEMA_VERSION),
        description: None,
        spacetime: SpacetimeDoc { d: s.spatial_dim },
        subsystems: s
            .names
            .iter()
            .zip(&s.dims)
            .zip(&s.worldlines)
            .map(|((name, &dim), w)| SubsystemDoc {
                name: name.clone(),
                dim,
                worldline: WorldlineDoc {
                    anchor: w.anchor().coords().to_vec(),
                    segments: w.segments().to_vec(),
                    final_v: Some(w.final_v().to_vec()),
                },
            })
            .collect(),
        initial_state: StateDoc::Matrix {
            matrix: matrix_doc(s.initial_state.matrix()),
        },
        interventions: s
            .interventions
            .iter()
            .map(|iv| {
                let on = s.names[iv.subsystem].clone();
                match &iv.kind {
                    InterventionKind::Unitary(u) => InterventionDoc {
                        on,
                        tau: iv.tau,
                        unitary: Some(OperatorDoc::Matrix(matrix_doc(u))),
                        measure: None,
                    },
                    InterventionKind::Selective {
                        kraus,
                        chosen,
                        labels,
                    } => InterventionDoc {
                        on,
                        tau: iv.tau,
                        unitary: None,
                        measure: Some(MeasureDoc {
                            kraus: Some(
                                kraus
                                    .iter()
                                    .map(|k| OperatorDoc::Matrix(matrix_doc(k)))
                                    .collect(),
                            ),
                            projective_basis: None,
                            outcome: OutcomeDoc::Index(*chosen),
                            labels: Some(labels.clone()),
                        }),
                    },
                }
            })
            .collect(),
        foliations: s
            .foliations
            .iter()
            .map(|f| FoliationDoc {
                name: f.name.clone(),
                v: f.foliation.frame_velocity().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("scenario documents always serialize")
}

struct Builder {
    diags: Vec<Diagnostic>,
}

impl Builder {
    fn fail<T>(
        &mut self,
        field: impl Into<String>,
        invariant: &str,
        message: impl Into<String>,
    ) -> Option<T> {
        self.diags.push(Diagnostic::new(field, invariant, message));
        None
    }

    fn matrix(&mut self, field: &str, doc: &MatrixDoc) -> Option<CMatrix> {
        let rows: Vec<Vec<C64>> = doc
            .iter()
            .map(|r| r.iter().map(|z| z.value()).collect())
            .collect();
        match CMatrix::from_rows(rows) {
            Ok(m) => Some(m),
            Err(e) => self.fail(field, "malformed-matrix", e.to_string()),
        }
    }

    fn ket(&mut self, field: &str, doc: &KetDoc, dim: usize) -> Option<Ket> {
        let ket = match doc {
            KetDoc::Name(name) => match named_ket(name) {
                Some(k) => k,
                None => return self.fail(field, "unknown-name", format!("no ket named {name:?}")),
            },
            KetDoc::Amplitudes(amps) => match Ket::new(amps.iter().map(|z| z.value()).collect()) {
                Ok(k) => k,
                Err(e) => return self.fail(field, "non-normalized-ket", e.to_string()),
            },
        };
        if ket.dim() != dim {
            return self.fail(
                field,
                "dimension-mismatch",
                format!("ket of dimension {} where {dim} is required", ket.dim()),
            );
        }
        Some(ket)
    }

    fn operator(&mut self, field: &str, doc: &OperatorDoc, dim: usize) -> Option<CMatrix> {
        let m = match doc {
            OperatorDoc::Name(name) => match (name.as_str(), dim) {
                ("identity", d) => CMatrix::identity(d),
                ("pauli_x", 2) => states::pauli_x(),
                ("pauli_y", 2) => states::pauli_y(),
                ("pauli_z", 2) => states::pauli_z(),
                ("hadamard", 2) => {
                    let h = std::f64::consts::FRAC_1_SQRT_2;
                    CMatrix::from_real(2, &[h, h, h, -h])
                }
                _ => {
                    return self.fail(
                        field,
                        "unknown-name",
                        format!("no operator named {name:?} on dimension {dim}"),
                    )
                }
            },
            OperatorDoc::PauliN { pauli_n } if dim == 2 => {
                states::pauli_n(pauli_n.theta, pauli_n.phi)
            }
            OperatorDoc::PauliN { .. } => {
                return self.fail(field, "dimension-mismatch", "pauli_n acts on a qubit")
            }
            OperatorDoc::Projector { projector } => self.ket(field, projector, dim)?.projector(),
            OperatorDoc::Matrix(rows) => self.matrix(field, rows)?,
        };
        if !m.is_square() || m.rows() != dim {
            return self.fail(
                field,
                "dimension-mismatch",
                format!(
                    "operator is {}x{}, subsystem dimension {dim}",
                    m.rows(),
                    m.cols()
                ),
            );
        }
        Some(m)
    }

    fn basis(
        &mut self,
        field: &str,
        doc: &BasisDoc,
        dim: usize,
    ) -> Option<(Vec<Ket>, Vec<String>)> {
        let pm = || vec!["+1".to_string(), "-1".to_string()];
        match doc {
            BasisDoc::Name(name) => match (name.as_str(), dim) {
                ("z", 2) => Some((vec![states::ket0(), states::ket1()], pm())),
                ("computational", d) => Some((
                    (0..d).map(|i| Ket::basis(d, i)).collect(),
                    default_labels_plain(d),
                )),
                ("x", 2) => Some((vec![states::ket_plus(), states::ket_minus()], pm())),
                ("y", 2) => {
                    let (up, down) = states::pauli_n_eigenkets(
                        std::f64::consts::FRAC_PI_2,
                        std::f64::consts::FRAC_PI_2,
                    );
                    Some((vec![up, down], pm()))
                }
                _ => self.fail(
                    field,
                    "unknown-name",
                    format!("no basis named {name:?} on dimension {dim}"),
                ),
            },
            BasisDoc::PauliN { n } if dim == 2 => {
                let (up, down) = states::pauli_n_eigenkets(n.theta, n.phi);
                Some((vec![up, down], pm()))
            }
            BasisDoc::PauliN { .. } => self.fail(
                field,
                "dimension-mismatch",
                "a spin-direction basis needs a qubit",
            ),
            BasisDoc::Kets(kets) => {
                let kets: Vec<Ket> = kets
                    .iter()
                    .enumerate()
                    .map(|(j, k)| self.ket(&format!("{field}[{j}]"), k, dim))
                    .collect::<Option<_>>()?;
                for a in 0..kets.len() {
                    for b in a + 1..kets.len() {
                        if kets[a].inner(&kets[b]).norm() > super::OPERATOR_TOL {
                            return self.fail(
                                field,
                                "basis-not-orthonormal",
                                format!("kets {a} and {b} overlap"),
                            );
                        }
                    }
                }
                let n = kets.len();
                Some((kets, default_labels(n)))
            }
        }
    }

    fn initial_state(&mut self, doc: &StateDoc, dims: &[usize]) -> Option<DensityOperator> {
        let field = "initial_state";
        let total: usize = dims.iter().product();
        match doc {
            StateDoc::Named { named } => {
                if named == "maximally_mixed" {
                    return Some(DensityOperator::maximally_mixed(total));
                }
                if let Some(k) = named_ket(named) {
                    return Some(k.density()).filter(|r| r.dim() == total).or_else(|| {
                        self.fail(
                            field,
                            "dimension-mismatch",
                            format!("{named} has dimension {}, joint dimension {total}", k.dim()),
                        )
                    });
                }
                self.fail(field, "unknown-name", format!("no state named {named:?}"))
            }
            StateDoc::Ket { ket } => self.ket(field, ket, total).map(|k| k.density()),
            StateDoc::Matrix { matrix } => {
                let m = self.matrix(field, matrix)?;
                if !m.is_square() || m.rows() != total {
                    return self.fail(
                        field,
                        "dimension-mismatch",
                        format!(
                            "matrix is {}x{}, joint dimension {total}",
                            m.rows(),
                            m.cols()
                        ),
                    );
                }
                match DensityOperator::new(m) {
                    Ok(rho) => Some(rho),
                    Err(e) => self.fail(field, "invalid-density-operator", e.to_string()),
                }
            }
        }
    }
}

fn default_labels_plain(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Bell states, or a product of `0`, `1`, `+`, `-` qubit labels such as `"0+"`.
fn named_ket(name: &str) -> Option<Ket> {
    match name {
        "bell_psi_plus" => return Some(states::bell_psi_plus()),
        "bell_psi_minus" => return Some(states::bell_psi_minus()),
        "" => return None,
        _ => {}
    }
    let mut chars = name.chars();
    let mut ket = states::named_qubit(&chars.next()?.to_string())?;
    for c in chars {
        ket = ket.tensor(&states::named_qubit(&c.to_string())?);
    }
    Some(ket)
}

fn build(doc: ScenarioDoc, limits: &Limits) -> Result<Scenario> {
    let mut b = Builder { diags: Vec::new() };
    if let Some(v) = doc.schema_version {
        if v != SCHEMA_VERSION {
            b.diags.push(Diagnostic::new(
                "schema_version",
                "unsupported-schema",
                format!("version {v}, expected {SCHEMA_VERSION}"),
            ));
        }
    }
    let d = doc.spacetime.d;
    if !(1..=crate::spacetime::MAX_SPATIAL_DIM).contains(&d) {
        b.diags.push(Diagnostic::new(
            "spacetime.d",
            "spacetime-dimension",
            format!("d = {d} is outside 1..=3"),
        ));
        return Err(Error::Validation(b.diags));
    }
    if doc.subsystems.len() > limits.max_subsystems {
        b.diags.push(Diagnostic::new(
            "subsystems",
            "too-many-subsystems",
            format!(
                "{} subsystems exceed the cap of {}",
                doc.subsystems.len(),
                limits.max_subsystems
            ),
        ));
        return Err(Error::Validation(b.diags));
    }

    let names: Vec<String> = doc.subsystems.iter().map(|s| s.name.clone()).collect();
    let dims: Vec<usize> = doc.subsystems.iter().map(|s| s.dim).collect();
    let mut worldlines = Vec::new();
    for (i, sub) in doc.subsystems.iter().enumerate() {
        let field = format!("subsystems[{i}].worldline");
        let w = &sub.worldline;
        if w.anchor.len() != d + 1
            || w.segments.iter().any(|s| s.v.len() != d)
            || w.final_v.as_ref().is_some_and(|v| v.len() != d)
        {
            b.diags.push(Diagnostic::new(
                &field,
                "spacetime-dimension",
                format!("coordinates must have 1+{d} components"),
            ));
            continue;
        }
        let anchor = match Event::new(w.anchor.clone()) {
            Ok(e) => e,
            Err(e) => {
                b.diags
                    .push(Diagnostic::new(&field, "invalid-event", e.to_string()));
                continue;
            }
        };
        let final_v = w
            .final_v
            .clone()
            .or_else(|| w.segments.last().map(|s| s.v.clone()))
            .unwrap_or_else(|| vec![0.0; d]);
        match Worldline::new(anchor, w.segments.clone(), final_v) {
            Ok(w) => worldlines.push(w),
            Err(Error::InvalidInput(m)) if m.contains("non-timelike") => b
                .diags
                .push(Diagnostic::new(&field, "non-timelike-worldline", m)),
            Err(e) => b
                .diags
                .push(Diagnostic::new(&field, "invalid-worldline", e.to_string())),
        }
    }

    let total = dims.iter().try_fold(1usize, |acc, &x| acc.checked_mul(x));
    let initial_state = match total {
        Some(t) if t > limits.max_dim => {
            b.diags.push(Diagnostic::new(
                "subsystems",
                "dimension-cap",
                format!("joint dimension {t} exceeds the cap of {}", limits.max_dim),
            ));
            return Err(Error::Validation(b.diags));
        }
        None => {
            b.diags.push(Diagnostic::new(
                "subsystems",
                "dimension-cap",
                "joint dimension overflows",
            ));
            return Err(Error::Validation(b.diags));
        }
        Some(0) => None,
        Some(_) => b.initial_state(&doc.initial_state, &dims),
    };

    let mut interventions = Vec::new();
    for (k, iv) in doc.interventions.iter().enumerate() {
        let field = format!("interventions[{k}]");
        let Some(subsystem) = names.iter().position(|n| *n == iv.on) else {
            b.diags.push(Diagnostic::new(
                &field,
                "unknown-subsystem",
                format!("no subsystem named {:?}", iv.on),
            ));
            continue;
        };
        let dim = dims[subsystem];
        let kind = match (&iv.unitary, &iv.measure) {
            (Some(u), None) => b
                .operator(&format!("{field}.unitary"), u, dim)
                .map(InterventionKind::Unitary),
            (None, Some(m)) => measure(&mut b, &format!("{field}.measure"), m, dim),
            _ => b.fail(
                &field,
                "intervention-kind",
                "exactly one of `unitary` and `measure` is required",
            ),
        };
        if let Some(kind) = kind {
            interventions.push(Intervention {
                subsystem,
                tau: iv.tau,
                kind,
            });
        }
    }

    let mut foliations = Vec::new();
    for (j, f) in doc.foliations.iter().enumerate() {
        if f.v.len() != d {
            b.diags.push(Diagnostic::new(
                format!("foliations[{j}]"),
                "spacetime-dimension",
                format!("frame velocity must have {d} components"),
            ));
            continue;
        }
        match Foliation::new(f.v.clone()) {
            Ok(foliation) => foliations.push(NamedFoliation {
                name: f.name.clone(),
                foliation,
            }),
            Err(e) => b.diags.push(Diagnostic::new(
                format!("foliations[{j}]"),
                "non-timelike-frame",
                e.to_string(),
            )),
        }
    }

    if !b.diags.is_empty() {
        return Err(Error::Validation(b.diags));
    }
    let Some(initial_state) = initial_state else {
        return Err(Error::Validation(vec![Diagnostic::new(
            "subsystems",
            "zero-dimension",
            "local dimension must be positive",
        )]));
    };
    let s = Scenario {
        names,
        dims,
        worldlines,
        initial_state,
        interventions,
        spatial_dim: d,
        foliations,
    };
    let diags = s.validate_with(limits);
    if diags.is_empty() {
        Ok(s)
    } else {
        Err(Error::Validation(diags))
    }
}

fn measure(b: &mut Builder, field: &str, m: &MeasureDoc, dim: usize) -> Option<InterventionKind> {
    let (kraus, default) = match (&m.kraus, &m.projective_basis) {
        (Some(ks), None) => {
            let ops: Vec<CMatrix> = ks
                .iter()
                .enumerate()
                .map(|(j, k)| b.operator(&format!("{field}.kraus[{j}]"), k, dim))
                .collect::<Option<_>>()?;
            let n = ops.len();
            (ops, default_labels(n))
        }
        (None, Some(basis)) => {
            let (kets, labels) = b.basis(&format!("{field}.projective_basis"), basis, dim)?;
            (kets.iter().map(Ket::projector).collect(), labels)
        }
        _ => {
            return b.fail(
                field,
                "measurement-kind",
                "exactly one of `kraus` and `projective_basis` is required",
            )
        }
    };
    let labels = m.labels.clone().unwrap_or(default);
    let chosen = match &m.outcome {
        OutcomeDoc::Index(i) => *i,
        OutcomeDoc::Label(l) => match labels.iter().position(|x| x == l) {
            Some(i) => i,
            None => {
                return b.fail(
                    format!("{field}.outcome"),
                    "outcome-out-of-range",
                    format!("no outcome labelled {l:?}"),
                )
            }
        },
    };
    Some(InterventionKind::Selective {
        kraus,
        chosen,
        labels,
    })
}

use std::path::Path;

use serde_json::{json, Value};

use polystate_core::linalg::states::{self, total_charge};
use polystate_core::linalg::{kron_all, CMatrix, DensityOperator, Ket, ObservableOp, C64};
use polystate_core::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Rows of `[re, im]` pairs.
pub fn matrix(m: &CMatrix) -> Value {
    Value::Array(
        m.to_rows()
            .into_iter()
            .map(|row| Value::Array(row.into_iter().map(|z| json!([z.re, z.im])).collect()))
            .collect(),
    )
}

pub fn read_matrix(v: &Value) -> Result<CMatrix> {
    let bad = || {
        Error::InvalidInput("observable file must hold rows of [re, im] pairs or numbers".into())
    };
    let rows = v.as_array().ok_or_else(bad)?;
    let rows = rows
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|z| match z {
                    Value::Number(n) => n.as_f64().map(|re| C64::new(re, 0.0)).ok_or_else(bad),
                    Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
                        (Some(re), Some(im)) => Ok(C64::new(re, im)),
                        _ => Err(bad()),
                    },
                    _ => Err(bad()),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    CMatrix::from_rows(rows)
}

/// A named observable on `qubits` qubits, or a matrix read from a JSON file.
/// Pauli names give the tensor power; `charge` gives the total charge.
pub fn observable(spec: &str, dims: &[usize]) -> Result<ObservableOp> {
    let dim: usize = dims.iter().product();
    let all_qubits = dims.iter().all(|&d| d == 2);
    let power = |m: CMatrix| {
        let factors = vec![m; dims.len()];
        ObservableOp::new(kron_all(&factors).expect("nonempty sector"))
    };
    match spec {
        "identity" => return ObservableOp::new(CMatrix::identity(dim)),
        "sigma_x" | "pauli_x" if all_qubits => return power(states::pauli_x()),
        "sigma_y" | "pauli_y" if all_qubits => return power(states::pauli_y()),
        "sigma_z" | "pauli_z" if all_qubits => return power(states::pauli_z()),
        "charge" if all_qubits => return Ok(total_charge(dims.len())),
        _ => {}
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::InvalidInput(format!(
            "{spec:?} is neither a known observable for this sector nor a file"
        )));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {spec}: {e}")))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let m = read_matrix(&value)?;
    if m.rows() != dim {
        return Err(Error::DimensionMismatch(format!(
            "observable of dimension {} on a sector of dimension {dim}",
            m.rows()
        )));
    }
    ObservableOp::new(m)
}

/// Named pure states to compare sector and foliation states against:
/// products of `0 1 + -` on up to four qubits, and the two odd Bell states.
pub fn reference_states(dims: &[usize]) -> Vec<(String, Ket)> {
    if dims.iter().any(|&d| d != 2) || dims.len() > 4 {
        return vec![];
    }
    let labels = ["0", "1", "+", "-"];
    let mut out: Vec<(String, Ket)> = vec![(String::new(), Ket::basis(1, 0))];
    for _ in dims {
        out = out
            .into_iter()
            .flat_map(|(name, ket)| {
                labels.iter().map(move |l| {
                    let q = states::named_qubit(l).expect("qubit label");
                    let ket = if name.is_empty() { q } else { ket.tensor(&q) };
                    (format!("{name}{l}"), ket)
                })
            })
            .collect();
    }
    if dims.len() == 2 {
        out.push(("bell_psi_plus".into(), states::bell_psi_plus()));
        out.push(("bell_psi_minus".into(), states::bell_psi_minus()));
    }
    out
}

/// Reference state of highest fidelity; the first listed wins ties.
pub fn best_match(rho: &DensityOperator, refs: &[(String, Ket)]) -> Result<Option<(String, f64)>> {
    let mut best: Option<(String, f64)> = None;
    for (name, ket) in refs {
        let f = rho.fidelity_pure(ket)?;
        if best.as_ref().is_none_or(|(_, b)| f > *b + 1e-12) {
            best = Some((name.clone(), f));
        }
    }
    Ok(best)
}

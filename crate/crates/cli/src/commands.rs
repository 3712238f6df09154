use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use serde_json::{json, Value};

use polystate_core::audit::{
    charge_ledger, criteria_report, prescription_state, require_bipartite_qubits, Prescription,
    Targets,
};
use polystate_core::ensemble::{compare_to_polystate, enumerate_branches, sample_runs};
use polystate_core::linalg::states::{charge_obs, total_charge};
use polystate_core::linalg::{expect, trace_distance};
use polystate_core::polystate::{early_taus, late_taus, Engine, Subset};
use polystate_core::scenario::{parse_scenario_with, Diagnostic, Limits, Scenario};
use polystate_core::spacetime::{lightcone_crossings, proper_time_at_leaf, Event, Foliation};
use polystate_core::{Error, Result};

use crate::args::{parse_foliation, parse_range, parse_taus, parse_triple};
use crate::render::{self, best_match, reference_states, SCHEMA_VERSION};

fn emit(v: &Value) -> Result<()> {
    let text = serde_json::to_string(v).expect("json values serialize");
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| Error::InvalidInput(format!("cannot write output: {e}")))
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn named_taus(s: &Scenario, taus: &[f64]) -> Value {
    let map: serde_json::Map<String, Value> = s
        .names
        .iter()
        .cloned()
        .zip(taus.iter().map(|&t| json!(t)))
        .collect();
    Value::Object(map)
}

fn sector_dims(s: &Scenario, subset: Subset) -> Vec<usize> {
    subset.indices().into_iter().map(|i| s.dims[i]).collect()
}

pub fn eval(
    s: &Scenario,
    tau: &str,
    sector: Option<&str>,
    observable: Option<&str>,
) -> Result<ExitCode> {
    let taus = parse_taus(tau, s)?;
    let engine = Engine::new(s.clone())?;
    let subsets: Vec<Subset> = match sector {
        Some(text) => vec![Subset::parse(text, &s.names)?],
        None => Subset::all(s.n()).collect(),
    };
    let polystate = engine.polystate_at(&taus)?;
    let mut sectors = Vec::new();
    for subset in subsets {
        let rho = polystate.sector(subset);
        let mut entry = json!({
            "sector": subset.label(&s.names),
            "matrix": render::matrix(rho.matrix()),
        });
        if let Some(spec) = observable {
            let obs = render::observable(spec, &sector_dims(s, subset))?;
            entry["expectation"] = json!(expect(rho, &obs)?);
        }
        sectors.push(entry);
    }
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "taus": named_taus(s, &taus),
        "sectors": sectors,
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn prescription(source: &str, f: &Foliation) -> Result<Prescription> {
    match source {
        "polystate" => Ok(Prescription::Polystate),
        "foliation" => Ok(Prescription::Foliation(f.clone())),
        "future" => Ok(Prescription::FutureLightcone),
        "past" => Ok(Prescription::PastLightcone),
        other => Err(Error::InvalidInput(format!(
            "unknown source {other:?}; expected polystate, foliation, future or past"
        ))),
    }
}

pub fn sweep(s: &Scenario, foliation: &str, t_range: &str, source: &str) -> Result<ExitCode> {
    let f = parse_foliation(foliation, s)?;
    let grid = parse_range(t_range)?;
    let p = prescription(source, &f)?;
    let engine = Engine::new(s.clone())?;
    let refs = reference_states(&s.dims);
    let qubits = s.dims.iter().all(|&d| d == 2);

    let mut header = vec!["t".to_string()];
    header.extend(s.names.iter().map(|n| format!("tau_{n}")));
    header.extend(
        [
            "best_match",
            "best_fidelity",
            "distance_initial",
            "q_joint",
            "q_sum",
        ]
        .map(String::from),
    );
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    let io = |e: csv::Error| Error::InvalidInput(format!("cannot write output: {e}"));
    w.write_record(&header).map_err(io)?;
    for t in grid {
        let taus = s
            .worldlines
            .iter()
            .map(|wl| proper_time_at_leaf(wl, &f, t))
            .collect::<Result<Vec<_>>>()?;
        let st = prescription_state(&engine, &p, &taus)?;
        let mut row = vec![t.to_string()];
        row.extend(taus.iter().map(f64::to_string));
        match best_match(&st.joint, &refs)? {
            Some((name, fid)) => row.extend([name, fid.to_string()]),
            None => row.extend([String::new(), String::new()]),
        }
        row.push(trace_distance(&st.joint, &s.initial_state)?.to_string());
        if qubits {
            row.push(expect(&st.joint, &total_charge(s.n()))?.to_string());
            let q = charge_obs();
            let sum = st
                .locals
                .iter()
                .map(|rho| expect(rho, &q))
                .sum::<Result<f64>>()?;
            row.push(sum.to_string());
        } else {
            row.extend([String::new(), String::new()]);
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("cannot write output: {e}")))?;
    Ok(ExitCode::SUCCESS)
}

/// Frame in which the two evaluation events are simultaneous, when they
/// are spacelike separated in 1+1 dimensions.
fn simultaneity_foliation(xs: &[Event]) -> Option<Foliation> {
    let [a, b] = xs else { return None };
    if a.spatial_dim() != 1 {
        return None;
    }
    let dx = b.spatial()[0] - a.spatial()[0];
    let dt = b.t() - a.t();
    if dx == 0.0 || dt.abs() >= dx.abs() {
        return None;
    }
    Foliation::new(vec![dt / dx]).ok()
}

fn default_grid(engine: &Engine, f: &Foliation, xs: &[Event]) -> Vec<f64> {
    let n_iv = engine.scenario().interventions.len();
    let leaves: Vec<f64> = (0..n_iv)
        .map(|k| f.leaf_of(engine.intervention_event(k)))
        .chain(xs.iter().map(|x| f.leaf_of(x)))
        .collect();
    let lo = leaves.iter().copied().fold(f64::INFINITY, f64::min) - 2.0;
    let hi = leaves.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0;
    let steps = 41;
    (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect()
}

pub fn audit(
    s: &Scenario,
    tau: &str,
    targets: Option<&str>,
    foliation: Option<&str>,
    ledger_foliation: Option<&str>,
    grid: Option<&str>,
) -> Result<ExitCode> {
    let taus = parse_taus(tau, s)?;
    let engine = Engine::new(s.clone())?;
    if let Err(e) = require_bipartite_qubits(s) {
        let polystate = engine.polystate_at(&taus)?;
        let qubits = s.dims.iter().all(|&d| d == 2);
        let rows = polystate
            .sectors()
            .map(|(subset, rho)| {
                let mut row = json!({"sector": subset.label(&s.names), "matrix": render::matrix(rho.matrix())});
                if qubits {
                    let z = render::observable("sigma_z", &sector_dims(s, subset))?;
                    row["expect_sigma_z"] = json!(expect(rho, &z)?);
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        emit(&json!({
            "schema_version": SCHEMA_VERSION,
            "taus": named_taus(s, &taus),
            "polystate": rows,
            "error": "bipartite-only",
        }))?;
        eprintln!("error: {e}");
        return Ok(ExitCode::from(1));
    }

    let targets = match targets {
        Some(text) => {
            let [a, b, ab] = parse_triple(text)?;
            Targets { a, b, ab }
        }
        None => Targets::from_oracle(s, &taus)?,
    };
    let rule_foliation = match foliation {
        Some(text) => parse_foliation(text, s)?,
        None => Foliation::rest(s.spatial_dim),
    };
    let criteria = criteria_report(&engine, &taus, targets, &rule_foliation)?;

    let xs = engine.evaluation_events(&taus, Subset::full(2));
    let ledger_f = match ledger_foliation {
        Some(text) => parse_foliation(text, s)?,
        None => simultaneity_foliation(&xs).unwrap_or_else(|| rule_foliation.clone()),
    };
    let grid = match grid {
        Some(text) => parse_range(text)?,
        None => default_grid(&engine, &ledger_f, &xs),
    };
    let eval_leaf = ledger_f.leaf_of(&xs[0]);
    let mut ledgers = Vec::new();
    let mut at_leaf = Vec::new();
    for p in Prescription::all(rule_foliation.clone()) {
        ledgers.push(to_value(&charge_ledger(&engine, &ledger_f, &grid, &p)?));
        let row = charge_ledger(&engine, &ledger_f, &[eval_leaf], &p)?;
        at_leaf.push(json!({
            "prescription": p.name(),
            "taus": row.rows[0].taus,
            "q_joint": row.rows[0].q_joint,
            "q_sum": row.rows[0].q_sum,
        }));
    }
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "criteria": to_value(&criteria),
        "charge": {
            "foliation": ledger_f.frame_velocity(),
            "evaluation_leaf": eval_leaf,
            "at_evaluation_leaf": at_leaf,
            "ledgers": ledgers,
        },
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn outcome_labels(s: &Scenario, selective: &[usize], outcomes: &[usize]) -> Vec<String> {
    selective
        .iter()
        .zip(outcomes)
        .map(|(&k, &o)| match &s.interventions[k].kind {
            polystate_core::scenario::InterventionKind::Selective { labels, .. } => {
                format!("{}:{}", s.names[s.interventions[k].subsystem], labels[o])
            }
            _ => o.to_string(),
        })
        .collect()
}

pub fn ensemble(s: &Scenario, n: usize, seed: u64, tau: &str) -> Result<ExitCode> {
    let taus = parse_taus(tau, s)?;
    let engine = Engine::new(s.clone())?;
    let log = sample_runs(s, n, seed)?;
    let branches = enumerate_branches(s)?;
    let comparison = compare_to_polystate(&log, &engine, &taus)?;
    let selective = s.selective_indices();
    let branch_rows: Vec<Value> = branches
        .iter()
        .map(|b| json!({"outcomes": outcome_labels(s, &selective, &b.outcomes), "probability": b.probability}))
        .collect();
    let freq_rows: Vec<Value> = log
        .frequencies()
        .into_iter()
        .map(|(o, count)| {
            json!({
                "outcomes": outcome_labels(s, &selective, &o),
                "count": count,
                "fraction": count as f64 / n as f64,
            })
        })
        .collect();
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "n": n,
        "seed": seed,
        "taus": named_taus(s, &taus),
        "branches": branch_rows,
        "frequencies": freq_rows,
        "comparison": to_value(&comparison),
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn point(e: &Event) -> Value {
    json!([e.t(), e.spatial()[0]])
}

pub fn diagram(s: &Scenario, leaves: &[String], tau_range: Option<&str>) -> Result<ExitCode> {
    if s.spatial_dim != 1 {
        return Err(Error::InvalidInput(format!(
            "diagrams need 1+1 dimensions, scenario has 1+{}",
            s.spatial_dim
        )));
    }
    let engine = Engine::new(s.clone())?;
    let (tau_min, tau_max) = match tau_range {
        Some(text) => {
            let parts: Vec<&str> = text.split(':').collect();
            let [lo, hi] = parts.as_slice() else {
                return Err(Error::InvalidInput(format!(
                    "expected MIN:MAX, got {text:?}"
                )));
            };
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("{v:?} is not a number")))
            };
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidInput(format!(
                    "empty proper-time window {text:?}"
                )));
            }
            (lo, hi)
        }
        None => {
            let early = early_taus(s)?;
            let late = late_taus(s)?;
            (
                early.iter().copied().fold(f64::INFINITY, f64::min),
                late.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        }
    };

    let mut xs_all = Vec::new();
    let worldlines: Vec<Value> = s
        .names
        .iter()
        .zip(&s.worldlines)
        .map(|(name, w)| {
            let pts = w.polyline(tau_min, tau_max);
            xs_all.extend(pts.iter().map(|(_, e)| e.clone()));
            json!({
                "name": name,
                "points": pts.iter().map(|(tau, e)| json!({"tau": tau, "t": e.t(), "x": e.spatial()[0]})).collect::<Vec<_>>(),
            })
        })
        .collect();
    let t_lo = xs_all.iter().map(Event::t).fold(f64::INFINITY, f64::min);
    let t_hi = xs_all
        .iter()
        .map(Event::t)
        .fold(f64::NEG_INFINITY, f64::max);
    let x_lo = xs_all
        .iter()
        .map(|e| e.spatial()[0])
        .fold(f64::INFINITY, f64::min)
        - 1.0;
    let x_hi = xs_all
        .iter()
        .map(|e| e.spatial()[0])
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    let reach = (t_hi - t_lo).max(x_hi - x_lo);

    let mut events = Vec::new();
    let mut cones = Vec::new();
    let mut crossings = Vec::new();
    for (k, iv) in s.interventions.iter().enumerate() {
        let e = engine.intervention_event(k);
        events.push(json!({
            "index": k,
            "on": s.names[iv.subsystem],
            "tau": iv.tau,
            "t": e.t(),
            "x": e.spatial()[0],
            "selective": iv.is_selective(),
            "outcome": iv.label(),
        }));
        let edge = |dt: f64, dx: f64| Event::tx(e.t() + dt, e.spatial()[0] + dx);
        cones.push(json!({
            "event": k,
            "past_left": [point(e), point(&edge(-reach, -reach))],
            "past_right": [point(e), point(&edge(-reach, reach))],
            "future_left": [point(e), point(&edge(reach, -reach))],
            "future_right": [point(e), point(&edge(reach, reach))],
        }));
        for (j, w) in s.worldlines.iter().enumerate() {
            if j == iv.subsystem {
                continue;
            }
            let (minus, plus) = lightcone_crossings(w, e)?;
            crossings.push(json!({
                "event": k,
                "subsystem": s.names[j],
                "tau_minus": minus,
                "tau_plus": plus,
                "minus": point(&w.position(minus)),
                "plus": point(&w.position(plus)),
            }));
        }
    }

    let mut leaf_rows = Vec::new();
    for spec in leaves {
        let (fol, items) = spec.rsplit_once(':').ok_or_else(|| {
            Error::InvalidInput(format!("expected FOLIATION:ITEMS, got {spec:?}"))
        })?;
        let f = parse_foliation(fol, s)?;
        for item in items.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let t = match item.parse::<f64>() {
                Ok(t) if t.is_finite() => t,
                _ => {
                    let i = s.subsystem_index(item).ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "{item:?} is neither a leaf parameter nor a subsystem"
                        ))
                    })?;
                    let k = s
                        .interventions
                        .iter()
                        .position(|iv| iv.subsystem == i)
                        .ok_or_else(|| Error::InvalidInput(format!("no intervention on {item}")))?;
                    f.leaf_of(engine.intervention_event(k))
                }
            };
            let (from, to) = f.leaf_segment(t, x_lo, x_hi);
            leaf_rows.push(json!({
                "foliation": fol,
                "v": f.frame_velocity(),
                "t": t,
                "from": point(&from),
                "to": point(&to),
            }));
        }
    }

    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "tau_range": [tau_min, tau_max],
        "worldlines": worldlines,
        "events": events,
        "cones": cones,
        "crossings": crossings,
        "leaves": leaf_rows,
    }))?;
    Ok(ExitCode::SUCCESS)
}

pub fn validate(path: &Path, limits: &Limits) -> Result<ExitCode> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let diagnostics: Vec<Diagnostic> = match parse_scenario_with(&text, limits) {
        Ok(_) => vec![],
        Err(Error::Validation(d)) => d,
        Err(Error::Parse {
            line,
            column,
            message,
        }) => vec![Diagnostic::new(
            format!("line {line}, column {column}"),
            "parse-error",
            message,
        )],
        Err(e) => return Err(e),
    };
    for d in &diagnostics {
        eprintln!("{d}");
    }
    let valid = diagnostics.is_empty();
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "valid": valid,
        "diagnostics": diagnostics,
    }))?;
    Ok(if valid {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

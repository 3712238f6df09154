use polystate_core::scenario::Scenario;
use polystate_core::spacetime::Foliation;
use polystate_core::{Error, Result};

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn number(text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| usage(format!("{text:?} is not a number")))?;
    if !v.is_finite() {
        return Err(usage(format!("{text:?} is not finite")));
    }
    Ok(v)
}

/// `A=1.0,B=0.5`: one proper time per subsystem, every subsystem named.
pub fn parse_taus(text: &str, s: &Scenario) -> Result<Vec<f64>> {
    let mut taus = vec![None; s.n()];
    for part in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("expected NAME=TAU, got {part:?}")))?;
        let i = s
            .subsystem_index(name.trim())
            .ok_or_else(|| usage(format!("unknown subsystem {:?}", name.trim())))?;
        taus[i] = Some(number(value)?);
    }
    taus.into_iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| usage(format!("no proper time given for {}", s.names[i]))))
        .collect()
}

/// `start:end:steps` with `steps ≥ 1` points from start to end inclusive.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, end, steps] = parts.as_slice() else {
        return Err(usage(format!("expected START:END:STEPS, got {text:?}")));
    };
    let (start, end) = (number(start)?, number(end)?);
    let steps: usize = steps
        .trim()
        .parse()
        .map_err(|_| usage(format!("{steps:?} is not a step count")))?;
    if steps == 0 || end < start || (steps == 1 && end != start) {
        return Err(usage(format!("empty range {text:?}")));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    let h = (end - start) / (steps - 1) as f64;
    Ok((0..steps).map(|i| start + h * i as f64).collect())
}

/// A foliation named in the scenario, or comma-separated frame velocity
/// components.
pub fn parse_foliation(text: &str, s: &Scenario) -> Result<Foliation> {
    if let Some(f) = s.foliation(text.trim()) {
        return Ok(f.clone());
    }
    let v = text.split(',').map(number).collect::<Result<Vec<_>>>()?;
    if v.len() != s.spatial_dim {
        return Err(usage(format!(
            "foliation {text:?} is neither a named foliation nor a {}-component velocity",
            s.spatial_dim
        )));
    }
    Foliation::new(v)
}

pub fn parse_triple(text: &str) -> Result<[f64; 3]> {
    let v = text.split(',').map(number).collect::<Result<Vec<_>>>()?;
    v.try_into().map_err(|_| {
        usage(format!(
            "expected three comma-separated numbers, got {text:?}"
        ))
    })
}

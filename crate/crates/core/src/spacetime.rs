//! Causal geometry of flat (1+d)-dimensional Minkowski spacetime, c = 1.
//!
//! Worldlines are piecewise inertial and inextendible: before the anchor they
//! continue with the first segment's velocity, after the last listed segment
//! with `final_v`. Proper time is zero at the anchor.
//!
//! Causal pasts are closed: `x ≼ x`, and null-separated events are causally
//! related.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_SPATIAL_DIM: usize = 3;
const MAX_RAPIDITY: f64 = 20.0;
/// Below this the crossing quadratic is treated as degenerate and the root
/// is polished by bisection.
const DEGENERATE_DISCRIMINANT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Event {
    coords: Vec<f64>,
}

impl Event {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let d = coords.len().saturating_sub(1);
        if !(1..=MAX_SPATIAL_DIM).contains(&d) {
            return Err(Error::InvalidInput(format!(
                "event needs 1+d coordinates with 1 <= d <= {MAX_SPATIAL_DIM}, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite event {coords:?}")));
        }
        Ok(Self { coords })
    }

    /// 1+1 event `(t, x)`.
    pub fn tx(t: f64, x: f64) -> Self {
        Self { coords: vec![t, x] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn t(&self) -> f64 {
        self.coords[0]
    }

    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }

    pub fn spatial_dim(&self) -> usize {
        self.coords.len() - 1
    }

    fn check_same_dim(&self, other: &Event) -> Result<()> {
        if self.coords.len() != other.coords.len() {
            return Err(Error::DimensionMismatch(format!(
                "events of dimension {} and {}",
                self.coords.len(),
                other.coords.len()
            )));
        }
        Ok(())
    }

    /// Minkowski interval `Δt² − |Δx|²` from `self` to `other`.
    pub fn interval(&self, other: &Event) -> Result<f64> {
        self.check_same_dim(other)?;
        let dt = other.t() - self.t();
        let dx2: f64 = spatial_diff(self, other).iter().map(|d| d * d).sum();
        Ok(dt * dt - dx2)
    }

    fn offset(&self, u: &[f64], s: f64) -> Event {
        Event {
            coords: self
                .coords
                .iter()
                .zip(u)
                .map(|(c, ui)| c + ui * s)
                .collect(),
        }
    }
}

fn spatial_diff(from: &Event, to: &Event) -> Vec<f64> {
    from.spatial()
        .iter()
        .zip(to.spatial())
        .map(|(a, b)| b - a)
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn lorentz_factor(v: &[f64]) -> f64 {
    1.0 / (1.0 - dot(v, v)).sqrt()
}

fn four_velocity(v: &[f64]) -> Vec<f64> {
    let g = lorentz_factor(v);
    std::iter::once(g)
        .chain(v.iter().map(|vi| g * vi))
        .collect()
}

/// `x ≼ y`: `y` lies in the closed causal future of `x`.
pub fn causally_precedes(x: &Event, y: &Event) -> Result<bool> {
    x.check_same_dim(y)?;
    let dt = y.t() - x.t();
    let dx2: f64 = spatial_diff(x, y).iter().map(|d| d * d).sum();
    Ok(dt >= 0.0 && dt * dt >= dx2)
}

/// `x ≪ y`: `y` lies strictly inside the future lightcone of `x`.
pub fn chronologically_precedes(x: &Event, y: &Event) -> Result<bool> {
    x.check_same_dim(y)?;
    let dt = y.t() - x.t();
    let dx2: f64 = spatial_diff(x, y).iter().map(|d| d * d).sum();
    Ok(dt > 0.0 && dt * dt > dx2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub dtau: f64,
    pub v: Vec<f64>,
}

/// One inertial piece of a worldline over the proper-time range `[lo, hi]`.
#[derive(Debug, Clone)]
struct Piece {
    tau0: f64,
    base: Event,
    v: Vec<f64>,
    u: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Piece {
    fn at(&self, tau: f64) -> Event {
        self.base.offset(&self.u, tau - self.tau0)
    }

    fn contains(&self, tau: f64) -> bool {
        tau >= self.lo && tau <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worldline {
    anchor: Event,
    segments: Vec<Segment>,
    final_v: Vec<f64>,
}

impl Worldline {
    pub fn new(anchor: Event, segments: Vec<Segment>, final_v: Vec<f64>) -> Result<Self> {
        let d = anchor.spatial_dim();
        let check_v = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "{what} has {} components in a 1+{d} spacetime",
                    v.len()
                )));
            }
            if v.iter().any(|c| !c.is_finite()) || norm(v) >= 1.0 {
                return Err(Error::InvalidInput(format!(
                    "non-timelike worldline: {what} {v:?} is not subluminal"
                )));
            }
            Ok(())
        };
        for (i, seg) in segments.iter().enumerate() {
            check_v(&seg.v, &format!("segment {i} velocity"))?;
            if !(seg.dtau.is_finite() && seg.dtau > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "segment {i} duration {} must be positive",
                    seg.dtau
                )));
            }
        }
        check_v(&final_v, "final velocity")?;
        Ok(Self {
            anchor,
            segments,
            final_v,
        })
    }

    /// At rest at the spatial position of `anchor`.
    pub fn at_rest(anchor: Event) -> Self {
        let d = anchor.spatial_dim();
        Self {
            anchor,
            segments: vec![],
            final_v: vec![0.0; d],
        }
    }

    pub fn inertial(anchor: Event, v: Vec<f64>) -> Result<Self> {
        Self::new(anchor, vec![], v)
    }

    pub fn anchor(&self) -> &Event {
        &self.anchor
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn final_v(&self) -> &[f64] {
        &self.final_v
    }

    pub fn spatial_dim(&self) -> usize {
        self.anchor.spatial_dim()
    }

    fn pieces(&self) -> Vec<Piece> {
        let first_v = self
            .segments
            .first()
            .map_or(&self.final_v, |s| &s.v)
            .clone();
        let mut pieces = vec![Piece {
            tau0: 0.0,
            base: self.anchor.clone(),
            u: four_velocity(&first_v),
            v: first_v,
            lo: f64::NEG_INFINITY,
            hi: 0.0,
        }];
        let mut tau = 0.0;
        let mut base = self.anchor.clone();
        for seg in &self.segments {
            let u = four_velocity(&seg.v);
            let end = base.offset(&u, seg.dtau);
            pieces.push(Piece {
                tau0: tau,
                base: base.clone(),
                v: seg.v.clone(),
                u,
                lo: tau,
                hi: tau + seg.dtau,
            });
            tau += seg.dtau;
            base = end;
        }
        pieces.push(Piece {
            tau0: tau,
            base,
            u: four_velocity(&self.final_v),
            v: self.final_v.clone(),
            lo: tau,
            hi: f64::INFINITY,
        });
        pieces
    }

    /// Proper-time values where the velocity changes, including the anchor.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut tau = 0.0;
        for seg in &self.segments {
            tau += seg.dtau;
            out.push(tau);
        }
        out
    }

    /// Polyline vertices covering `[tau_min, tau_max]`.
    pub fn polyline(&self, tau_min: f64, tau_max: f64) -> Vec<(f64, Event)> {
        let mut taus = vec![tau_min];
        taus.extend(
            self.breakpoints()
                .into_iter()
                .filter(|&t| t > tau_min && t < tau_max),
        );
        taus.push(tau_max);
        taus.into_iter().map(|t| (t, self.position(t))).collect()
    }

    pub fn boosted(&self, boost: &Boost) -> Worldline {
        Worldline {
            anchor: boost.apply_event(&self.anchor),
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    dtau: s.dtau,
                    v: boost.apply_velocity(&s.v),
                })
                .collect(),
            final_v: boost.apply_velocity(&self.final_v),
        }
    }

    /// Event at proper time `tau`.
    pub fn position(&self, tau: f64) -> Event {
        let pieces = self.pieces();
        let piece = pieces
            .iter()
            .find(|p| p.contains(tau))
            .expect("pieces cover the real line");
        piece.at(tau)
    }

    /// `(x_t − t(τ)) − |x − 𝐱(τ)|`: positive strictly inside the past cone of
    /// `x`, zero on its boundary, strictly decreasing in τ.
    pub fn past_cone_gap(&self, x: &Event, tau: f64) -> f64 {
        let p = self.position(tau);
        (x.t() - p.t()) - norm(&spatial_diff(&p, x))
    }

    /// `(t(τ) − x_t) − |𝐱(τ) − x|`: strictly increasing in τ, zero on the
    /// future cone of `x`.
    pub fn future_cone_gap(&self, x: &Event, tau: f64) -> f64 {
        let p = self.position(tau);
        (p.t() - x.t()) - norm(&spatial_diff(x, &p))
    }
}

/// Proper times `(τ⁻, τ⁺)` where `w` crosses the past and future lightcones
/// of `x`.
pub fn lightcone_crossings(w: &Worldline, x: &Event) -> Result<(f64, f64)> {
    if w.spatial_dim() != x.spatial_dim() {
        return Err(Error::DimensionMismatch(format!(
            "worldline in 1+{} against event in 1+{}",
            w.spatial_dim(),
            x.spatial_dim()
        )));
    }
    let pieces = w.pieces();
    let past = crossing(&pieces, x, -1.0, |tau| w.past_cone_gap(x, tau));
    let future = crossing(&pieces, x, 1.0, |tau| -w.future_cone_gap(x, tau));
    Ok((past, future))
}

/// Root of the piecewise null-separation quadratic. `sign` picks the lower
/// (−1) or upper (+1) root; `gap` is a decreasing function vanishing there.
fn crossing(pieces: &[Piece], x: &Event, sign: f64, gap: impl Fn(f64) -> f64) -> f64 {
    for piece in pieces {
        let dt = x.t() - piece.base.t();
        let dx = spatial_diff(&piece.base, x);
        // apex time and distance in the piece's rest frame
        let g = piece.u[0];
        let rest_t = g * (dt - dot(&piece.v, &dx));
        let r2 = rest_t * rest_t - (dt * dt - dot(&dx, &dx));
        let tau = piece.tau0 + rest_t + sign * r2.max(0.0).sqrt();
        let slack = 1e-9 * (1.0 + tau.abs());
        if tau >= piece.lo - slack && tau <= piece.hi + slack {
            if r2 < DEGENERATE_DISCRIMINANT {
                let lo = (tau - 1.0).max(piece.lo);
                let hi = (tau + 1.0).min(piece.hi);
                if let Some(root) = bisect_decreasing(&gap, lo, hi) {
                    return root;
                }
            }
            return tau.clamp(piece.lo, piece.hi);
        }
    }
    // Monotone gap over a covering set of pieces always has a root; fall
    // back to a bracketed search if rounding skipped every piece.
    let mut lo = -1.0;
    let mut hi = 1.0;
    while gap(lo) < 0.0 {
        lo *= 2.0;
    }
    while gap(hi) > 0.0 {
        hi *= 2.0;
    }
    bisect_decreasing(&gap, lo, hi).unwrap_or(0.5 * (lo + hi))
}

/// Bisection for a decreasing function on `[lo, hi]`; `None` if unbracketed.
pub fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    if f(lo) < 0.0 || f(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Family of spacelike hyperplanes `{x : t'(x) = t}`, where `t'` is the time
/// coordinate of the inertial frame moving at `frame_velocity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Foliation {
    frame_velocity: Vec<f64>,
}

impl Foliation {
    pub fn new(frame_velocity: Vec<f64>) -> Result<Self> {
        if frame_velocity.is_empty() || frame_velocity.len() > MAX_SPATIAL_DIM {
            return Err(Error::InvalidInput(format!(
                "frame velocity needs 1..={MAX_SPATIAL_DIM} components"
            )));
        }
        if frame_velocity.iter().any(|c| !c.is_finite()) || norm(&frame_velocity) >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "frame velocity {frame_velocity:?} is not subluminal"
            )));
        }
        Ok(Self { frame_velocity })
    }

    pub fn rest(d: usize) -> Self {
        Self {
            frame_velocity: vec![0.0; d],
        }
    }

    pub fn frame_velocity(&self) -> &[f64] {
        &self.frame_velocity
    }

    /// Leaf parameter of the leaf through `x`.
    pub fn leaf_of(&self, x: &Event) -> f64 {
        let g = lorentz_factor(&self.frame_velocity);
        g * (x.t() - dot(&self.frame_velocity, x.spatial()))
    }

    pub fn boosted(&self, boost: &Boost) -> Foliation {
        Foliation {
            frame_velocity: boost.apply_velocity(&self.frame_velocity),
        }
    }

    /// Two events on leaf `t` spanning `[x_min, x_max]` in a 1+1 diagram.
    pub fn leaf_segment(&self, t: f64, x_min: f64, x_max: f64) -> (Event, Event) {
        let v = self.frame_velocity[0];
        let g = lorentz_factor(&self.frame_velocity);
        // t_coord = t/γ + v x
        let at = |x: f64| Event::tx(t / g + v * x, x);
        (at(x_min), at(x_max))
    }
}

/// Proper time at which `w` meets the leaf `t` of `f`.
pub fn proper_time_at_leaf(w: &Worldline, f: &Foliation, t: f64) -> Result<f64> {
    if w.spatial_dim() != f.frame_velocity.len() {
        return Err(Error::DimensionMismatch(format!(
            "worldline in 1+{} against foliation in 1+{}",
            w.spatial_dim(),
            f.frame_velocity.len()
        )));
    }
    let uf = four_velocity(&f.frame_velocity);
    for piece in w.pieces() {
        // rate of leaf-parameter advance per unit proper time: −η(u_f, u) > 0
        let rate = uf[0] * piece.u[0] - dot(&uf[1..], &piece.u[1..]);
        let tau = piece.tau0 + (t - f.leaf_of(&piece.base)) / rate;
        let slack = 1e-12 * (1.0 + tau.abs());
        if tau >= piece.lo - slack && tau <= piece.hi + slack {
            return Ok(tau.clamp(piece.lo, piece.hi));
        }
    }
    unreachable!("timelike worldline meets every spacelike leaf")
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegionAtom {
    PastOfEvent(Event),
    PastOfLeaf(Foliation, f64),
}

impl RegionAtom {
    pub fn contains(&self, x: &Event) -> bool {
        match self {
            RegionAtom::PastOfEvent(e) => causally_precedes(x, e).unwrap_or(false),
            RegionAtom::PastOfLeaf(f, t) => f.leaf_of(x) <= *t,
        }
    }
}

/// Union of causal pasts of events and leaves.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Everything,
    Nothing,
    Union(Vec<RegionAtom>),
}

impl Region {
    pub fn past_of(e: Event) -> Self {
        Region::Union(vec![RegionAtom::PastOfEvent(e)])
    }

    pub fn past_of_events(events: impl IntoIterator<Item = Event>) -> Self {
        let atoms: Vec<_> = events.into_iter().map(RegionAtom::PastOfEvent).collect();
        if atoms.is_empty() {
            Region::Nothing
        } else {
            Region::Union(atoms)
        }
    }

    pub fn past_of_leaf(f: Foliation, t: f64) -> Self {
        Region::Union(vec![RegionAtom::PastOfLeaf(f, t)])
    }
}

pub fn region_contains(r: &Region, x: &Event) -> bool {
    match r {
        Region::Everything => true,
        Region::Nothing => false,
        Region::Union(atoms) => atoms.iter().any(|a| a.contains(x)),
    }
}

/// Lorentz boost with the given rapidity along a spatial axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Boost {
    rapidity: f64,
    axis: Vec<f64>,
}

impl Boost {
    pub fn new(rapidity: f64, axis: Vec<f64>) -> Result<Self> {
        if !(rapidity.is_finite() && rapidity.abs() < MAX_RAPIDITY) {
            return Err(Error::InvalidInput(format!(
                "rapidity {rapidity} outside (-{MAX_RAPIDITY}, {MAX_RAPIDITY})"
            )));
        }
        let n = norm(&axis);
        if !(n.is_finite() && n > 0.0) || axis.len() > MAX_SPATIAL_DIM {
            return Err(Error::InvalidInput(format!("bad boost axis {axis:?}")));
        }
        Ok(Self {
            rapidity,
            axis: axis.iter().map(|a| a / n).collect(),
        })
    }

    fn apply_vec(&self, t: f64, x: &[f64]) -> (f64, Vec<f64>) {
        let (sh, ch) = (self.rapidity.sinh(), self.rapidity.cosh());
        let along = dot(&self.axis, x);
        let t2 = ch * t - sh * along;
        let shift = (ch - 1.0) * along - sh * t;
        let x2 = x
            .iter()
            .zip(&self.axis)
            .map(|(xi, ni)| xi + shift * ni)
            .collect();
        (t2, x2)
    }

    pub fn apply_event(&self, e: &Event) -> Event {
        let (t, x) = self.apply_vec(e.t(), e.spatial());
        Event {
            coords: std::iter::once(t).chain(x).collect(),
        }
    }

    pub fn apply_velocity(&self, v: &[f64]) -> Vec<f64> {
        let u = four_velocity(v);
        let (t, x) = self.apply_vec(u[0], &u[1..]);
        x.into_iter().map(|c| c / t).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_and_moving_positions() {
        let w = Worldline::at_rest(Event::tx(0.0, 0.0));
        assert_eq!(w.position(2.0), Event::tx(2.0, 0.0));
        assert_eq!(w.position(0.0), Event::tx(0.0, 0.0));

        let m = Worldline::new(
            Event::tx(0.0, 0.0),
            vec![Segment {
                dtau: 5.0,
                v: vec![0.6],
            }],
            vec![0.0],
        )
        .unwrap();
        let p = m.position(1.0);
        assert!((p.t() - 1.25).abs() < 1e-15 && (p.spatial()[0] - 0.75).abs() < 1e-15);
        // after the segment it rests at x = 3.75
        let late = m.position(7.0);
        assert!((late.spatial()[0] - 3.75).abs() < 1e-12);
        assert!((late.t() - (6.25 + 2.0)).abs() < 1e-12);
        // before the anchor it keeps the first segment's velocity
        let early = m.position(-1.0);
        assert!((early.t() + 1.25).abs() < 1e-15 && (early.spatial()[0] + 0.75).abs() < 1e-15);
    }

    #[test]
    fn causal_order_examples() {
        let o = Event::tx(0.0, 0.0);
        assert!(causally_precedes(&o, &Event::tx(2.0, 1.0)).unwrap());
        assert!(!causally_precedes(&o, &Event::tx(1.0, 2.0)).unwrap());
        assert!(causally_precedes(&o, &Event::tx(1.0, 1.0)).unwrap());
        assert!(causally_precedes(&o, &o).unwrap());
        assert!(!causally_precedes(&Event::tx(2.0, 1.0), &o).unwrap());
        assert!(causally_precedes(&o, &Event::new(vec![0.0, 0.0, 0.0]).unwrap()).is_err());
        assert!(!chronologically_precedes(&o, &Event::tx(1.0, 1.0)).unwrap());
        assert!(!chronologically_precedes(&o, &o).unwrap());
    }

    #[test]
    fn crossings_for_static_worldline() {
        let w = Worldline::at_rest(Event::tx(0.0, 1.0));
        let (lo, hi) = lightcone_crossings(&w, &Event::tx(0.0, 0.0)).unwrap();
        assert!((lo + 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn crossings_for_apex_on_worldline() {
        let w = Worldline::at_rest(Event::tx(0.0, 0.0));
        let (lo, hi) = lightcone_crossings(&w, &Event::tx(3.0, 0.0)).unwrap();
        assert!((lo - 3.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn crossings_for_moving_worldline_match_bisection() {
        let w = Worldline::inertial(Event::tx(0.0, 2.0), vec![0.6]).unwrap();
        let apex = Event::tx(0.0, 0.0);
        let (lo, hi) = lightcone_crossings(&w, &apex).unwrap();
        let lo_b = bisect_decreasing(|t| w.past_cone_gap(&apex, t), -100.0, 100.0).unwrap();
        let hi_b = bisect_decreasing(|t| -w.future_cone_gap(&apex, t), -100.0, 100.0).unwrap();
        assert!((lo - lo_b).abs() < 1e-12, "{lo} vs {lo_b}");
        assert!((hi - hi_b).abs() < 1e-12, "{hi} vs {hi_b}");
        // x(τ) = 2 + 0.75τ, t = 1.25τ: past crossing at t = -x, τ = -1
        assert!((lo + 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossings_across_segments() {
        let w = Worldline::new(
            Event::tx(0.0, 3.0),
            vec![
                Segment {
                    dtau: 1.0,
                    v: vec![-0.5],
                },
                Segment {
                    dtau: 2.0,
                    v: vec![0.8],
                },
            ],
            vec![0.1],
        )
        .unwrap();
        for apex in [
            Event::tx(0.5, 0.0),
            Event::tx(4.0, 1.0),
            Event::tx(-3.0, 6.0),
        ] {
            let (lo, hi) = lightcone_crossings(&w, &apex).unwrap();
            assert!(lo <= hi);
            assert!(w.past_cone_gap(&apex, lo).abs() < 1e-9);
            assert!(w.future_cone_gap(&apex, hi).abs() < 1e-9);
        }
    }

    #[test]
    fn region_examples() {
        let r = Region::past_of(Event::tx(2.0, 0.0));
        assert!(region_contains(&r, &Event::tx(0.0, 0.0)));
        let r = Region::past_of_events([Event::tx(0.0, 0.0), Event::tx(0.0, 10.0)]);
        assert!(region_contains(&r, &Event::tx(-0.5, 9.8)));
        let r = Region::past_of_leaf(Foliation::rest(1), 1.0);
        assert!(!region_contains(&r, &Event::tx(1.5, 0.0)));
        assert!(region_contains(&r, &Event::tx(1.0, 50.0)));
        assert!(region_contains(&Region::Everything, &Event::tx(9.0, 9.0)));
        assert!(!region_contains(&Region::Nothing, &Event::tx(9.0, 9.0)));
    }

    #[test]
    fn leaf_proper_times() {
        let w = Worldline::at_rest(Event::tx(0.0, 0.0));
        let rest = Foliation::rest(1);
        assert!((proper_time_at_leaf(&w, &rest, 1.7).unwrap() - 1.7).abs() < 1e-15);

        // static at x0 = 2, frame velocity 0.5: γ(τ − v x0) = t
        let w = Worldline::at_rest(Event::tx(0.0, 2.0));
        let f = Foliation::new(vec![0.5]).unwrap();
        let g = 1.0 / (1.0f64 - 0.25).sqrt();
        for t in [-1.0, 0.0, 0.3, 2.5] {
            let tau = proper_time_at_leaf(&w, &f, t).unwrap();
            let closed = t / g + 0.5 * 2.0;
            let bisect =
                bisect_decreasing(|s| t - f.leaf_of(&w.position(s)), -100.0, 100.0).unwrap();
            assert!((tau - closed).abs() < 1e-12);
            assert!((tau - bisect).abs() < 1e-12);
        }
        // leaf through the anchor gives τ = 0
        let leaf = f.leaf_of(w.anchor());
        assert!(proper_time_at_leaf(&w, &f, leaf).unwrap().abs() < 1e-12);
    }

    #[test]
    fn boost_preserves_interval_and_velocity_sanity() {
        let b = Boost::new(0.7, vec![1.0]).unwrap();
        let x = Event::tx(0.3, -1.2);
        let y = Event::tx(2.0, 0.4);
        let i0 = x.interval(&y).unwrap();
        let i1 = b.apply_event(&x).interval(&b.apply_event(&y)).unwrap();
        assert!((i0 - i1).abs() < 1e-12);
        // boosting the rest velocity gives -tanh(η)
        let v = b.apply_velocity(&[0.0]);
        assert!((v[0] + 0.7f64.tanh()).abs() < 1e-15);
        assert!(Boost::new(25.0, vec![1.0]).is_err());
        let id = Boost::new(0.0, vec![1.0]).unwrap();
        assert_eq!(id.apply_event(&x), x);
    }

    #[test]
    fn invalid_worldlines_rejected() {
        let a = Event::tx(0.0, 0.0);
        assert!(Worldline::inertial(a.clone(), vec![1.0]).is_err());
        assert!(Worldline::new(
            a.clone(),
            vec![Segment {
                dtau: 0.0,
                v: vec![0.0]
            }],
            vec![0.0]
        )
        .is_err());
        assert!(Worldline::inertial(a, vec![0.1, 0.1]).is_err());
        assert!(Event::new(vec![0.0]).is_err());
        assert!(Event::new(vec![0.0, f64::NAN]).is_err());
    }
}

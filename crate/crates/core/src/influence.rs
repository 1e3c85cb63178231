//! Pointwise-influence and max-influence of the private record on other
//! records, the distance threshold `delta_star`, and the split of record
//! indices into small/medium/large leakage regions.

use std::fmt;
use std::ops::Add;

use crate::error::{Error, Result};
use crate::markov::MarkovModel;

/// Largest index set `max_influence_set` will enumerate (2^20 realizations).
pub const MAX_SET_ENUMERATION: usize = 20;

/// Default search cap for `delta_star`.
pub const DEFAULT_DELTA_CAP: usize = 1_000_000;

/// Budgets closer than this to a region threshold are reported as
/// near-boundary in [`Regions::near_boundary`].
pub const BOUNDARY_DIAGNOSTIC_TOL: f64 = 1e-12;

/// Influence in nats on the extended half-line `[0, +inf]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct InfluenceValue(f64);

impl InfluenceValue {
    pub const ZERO: Self = Self(0.0);
    pub const INFINITE: Self = Self(f64::INFINITY);

    pub fn new(value: f64) -> Self {
        debug_assert!(value >= 0.0, "influence must be nonnegative, got {value}");
        Self(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `self <= eps`; an infinite influence never fits a finite budget.
    pub fn within(self, eps: f64) -> bool {
        self.0 <= eps
    }
}

impl Add for InfluenceValue {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl From<InfluenceValue> for f64 {
    fn from(v: InfluenceValue) -> f64 {
        v.0
    }
}

impl fmt::Display for InfluenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// `|log((1 + c * lambda^delta) / (1 - lambda^delta))|`, +inf at distance 0.
fn distance_influence(model: &MarkovModel, c: f64, delta: usize) -> InfluenceValue {
    if delta == 0 {
        return InfluenceValue::INFINITE;
    }
    let l = model.lambda().powi(delta.min(i32::MAX as usize) as i32);
    InfluenceValue::new(((c * l).ln_1p() - (-l).ln_1p()).abs())
}

/// Pointwise-influence of the private record on a record at distance
/// `delta` that takes value 0.
pub fn influence_low(model: &MarkovModel, delta: usize) -> InfluenceValue {
    distance_influence(model, model.alpha() / model.beta(), delta)
}

/// Pointwise-influence on a record at distance `delta` taking value 1, which
/// is also the max-influence on a single record at that distance.
pub fn influence_high(model: &MarkovModel, delta: usize) -> InfluenceValue {
    distance_influence(model, model.beta() / model.alpha(), delta)
}

pub(crate) fn check_index(model: &MarkovModel, index: usize) -> Result<()> {
    if index == 0 || index > model.n() {
        return Err(Error::IndexOutOfRange {
            index,
            n: model.n(),
        });
    }
    Ok(())
}

/// `I(X_p ~> X_t = x_t)` for 1-based indices `p`, `t`.
pub fn pointwise_influence(
    model: &MarkovModel,
    p: usize,
    t: usize,
    x_t: u8,
) -> Result<InfluenceValue> {
    check_index(model, p)?;
    check_index(model, t)?;
    let delta = p.abs_diff(t);
    Ok(match x_t {
        0 => influence_low(model, delta),
        1 => influence_high(model, delta),
        other => {
            return Err(Error::Domain(format!(
                "record value must be 0 or 1, got {other}"
            )))
        }
    })
}

/// `log Pr[X_S = x_S | X_p = x]` for both `x`, by walking outward from `p`.
/// `indices` must be sorted, deduplicated and exclude `p`.
fn joint_conditional_log(
    model: &MarkovModel,
    p: usize,
    indices: &[usize],
    values: &[u8],
) -> [f64; 2] {
    let split = indices.partition_point(|&t| t < p);
    let mut out = [0.0; 2];
    for (x, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        // left of p, nearest first
        let (mut prev_t, mut prev_x) = (p, x);
        for k in (0..split).rev() {
            let (t, v) = (indices[k], values[k] as usize);
            acc += model.power(prev_t - t)[prev_x][v].ln();
            prev_t = t;
            prev_x = v;
        }
        let (mut prev_t, mut prev_x) = (p, x);
        for k in split..indices.len() {
            let (t, v) = (indices[k], values[k] as usize);
            acc += model.power(t - prev_t)[prev_x][v].ln();
            prev_t = t;
            prev_x = v;
        }
        *slot = acc;
    }
    out
}

fn normalize_set(model: &MarkovModel, p: usize, indices: &[usize]) -> Result<Vec<usize>> {
    check_index(model, p)?;
    for &t in indices {
        check_index(model, t)?;
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() > MAX_SET_ENUMERATION {
        return Err(Error::EnumerationLimit {
            what: "index set size",
            requested: sorted.len(),
            cap: MAX_SET_ENUMERATION,
        });
    }
    Ok(sorted)
}

/// Pointwise-influence of a joint realization: `values[k]` is the value of
/// record `indices[k]`.
pub fn pointwise_set_influence(
    model: &MarkovModel,
    p: usize,
    indices: &[usize],
    values: &[u8],
) -> Result<InfluenceValue> {
    if indices.len() != values.len() {
        return Err(Error::Domain("indices and values differ in length".into()));
    }
    if values.iter().any(|&v| v > 1) {
        return Err(Error::Domain("record values must be 0 or 1".into()));
    }
    let mut pairs: Vec<(usize, u8)> = indices
        .iter()
        .copied()
        .zip(values.iter().copied())
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Domain(
            "conflicting values for a repeated index".into(),
        ));
    }
    let sorted = normalize_set(model, p, indices)?;
    if sorted.contains(&p) {
        return Ok(InfluenceValue::INFINITE);
    }
    let vals: Vec<u8> = pairs.iter().map(|&(_, v)| v).collect();
    let [l0, l1] = joint_conditional_log(model, p, &sorted, &vals);
    Ok(InfluenceValue::new((l0 - l1).abs()))
}

/// Max-influence `I(X_p ~> X_S)` by enumerating all `2^|S|` realizations.
pub fn max_influence_set(
    model: &MarkovModel,
    p: usize,
    indices: &[usize],
) -> Result<InfluenceValue> {
    let sorted = normalize_set(model, p, indices)?;
    if sorted.contains(&p) {
        return Ok(InfluenceValue::INFINITE);
    }
    let k = sorted.len();
    let mut values = vec![0u8; k];
    let mut best = 0.0f64;
    for code in 0u32..(1u32 << k) {
        for (bit, v) in values.iter_mut().enumerate() {
            *v = ((code >> bit) & 1) as u8;
        }
        let [l0, l1] = joint_conditional_log(model, p, &sorted, &values);
        best = best.max((l0 - l1).abs());
    }
    Ok(InfluenceValue::new(best))
}

/// Smallest `delta >= 1` with `influence_high(delta) <= eps`.
pub fn delta_star(model: &MarkovModel, eps: f64) -> Result<usize> {
    delta_star_capped(model, eps, DEFAULT_DELTA_CAP)
}

pub fn delta_star_capped(model: &MarkovModel, eps: f64, cap: usize) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!(
            "delta_star needs eps > 0, got {eps}"
        )));
    }
    first_distance_within(model, eps, cap).ok_or(Error::DistanceNotFound { eps, cap })
}

/// Same scan as [`delta_star`] but also accepts `eps = 0`, which succeeds
/// only for independent records.
pub(crate) fn first_distance_within(model: &MarkovModel, eps: f64, cap: usize) -> Option<usize> {
    (1..=cap).find(|&d| influence_high(model, d).within(eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionKind {
    Small,
    Medium,
    Large,
}

/// Classification of every record index for a private index `p` and a pair
/// of side budgets. Index `p` itself is always `Large`.
#[derive(Debug, Clone, PartialEq)]
pub struct Regions {
    pub p: usize,
    pub eps_left: f64,
    pub eps_right: f64,
    pub small: Vec<usize>,
    pub medium: Vec<usize>,
    pub large: Vec<usize>,
    /// Indices whose side budget sits within 1e-12 of one of their influence
    /// thresholds; their classification is sensitive to rounding.
    pub near_boundary: Vec<usize>,
    kinds: Vec<RegionKind>,
}

impl Regions {
    pub fn n(&self) -> usize {
        self.kinds.len()
    }

    /// Region of 1-based index `t`.
    pub fn kind(&self, t: usize) -> RegionKind {
        self.kinds[t - 1]
    }

    pub fn side_budget(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.eps_left,
            Side::Right => self.eps_right,
        }
    }

    /// Indices of `kind` strictly on one side of `p`, nearest to `p` first.
    pub fn on_side(&self, kind: RegionKind, side: Side) -> Vec<usize> {
        let set = match kind {
            RegionKind::Small => &self.small,
            RegionKind::Medium => &self.medium,
            RegionKind::Large => &self.large,
        };
        match side {
            Side::Left => set.iter().rev().copied().filter(|&t| t < self.p).collect(),
            Side::Right => set.iter().copied().filter(|&t| t > self.p).collect(),
        }
    }
}

pub fn compute_regions(
    model: &MarkovModel,
    p: usize,
    eps_left: f64,
    eps_right: f64,
) -> Result<Regions> {
    check_index(model, p)?;
    if !(eps_left >= 0.0) || !(eps_right >= 0.0) {
        return Err(Error::Domain(format!(
            "side budgets must be nonnegative, got ({eps_left}, {eps_right})"
        )));
    }
    let n = model.n();
    let mut regions = Regions {
        p,
        eps_left,
        eps_right,
        small: Vec::new(),
        medium: Vec::new(),
        large: Vec::new(),
        near_boundary: Vec::new(),
        kinds: Vec::with_capacity(n),
    };
    for t in 1..=n {
        let kind = if t == p {
            RegionKind::Large
        } else {
            let eps = if t < p { eps_left } else { eps_right };
            let delta = p.abs_diff(t);
            let low = influence_low(model, delta).value();
            let high = influence_high(model, delta).value();
            if (eps - low).abs() < BOUNDARY_DIAGNOSTIC_TOL
                || (eps - high).abs() < BOUNDARY_DIAGNOSTIC_TOL
            {
                regions.near_boundary.push(t);
            }
            if high <= eps {
                RegionKind::Small
            } else if low <= eps {
                RegionKind::Medium
            } else {
                RegionKind::Large
            }
        };
        match kind {
            RegionKind::Small => regions.small.push(t),
            RegionKind::Medium => regions.medium.push(t),
            RegionKind::Large => regions.large.push(t),
        }
        regions.kinds.push(kind);
    }
    Ok(regions)
}

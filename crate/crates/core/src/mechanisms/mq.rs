//! Markov-quilt baseline: deterministically redact a window around `p`, plus
//! closed-form utility bounds for data-independent mechanisms.

use super::{MechanismKind, RedactionMechanism};
use crate::error::{Error, Result};
use crate::influence::{
    check_index, delta_star, first_distance_within, influence_high, DEFAULT_DELTA_CAP,
};
use crate::markov::MarkovModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MqBranch {
    OneSided,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MqPlan {
    pub delta_left: usize,
    pub delta_right: usize,
    /// Redacted window `[p - delta_left, p + delta_right]`, 1-based inclusive.
    pub window: (usize, usize),
    pub branch: MqBranch,
    /// `p + delta*(eps) - 2 delta*(eps/2)`, in mirrored coordinates.
    pub threshold: i64,
    pub delta_eps: usize,
    pub delta_half_eps: usize,
    /// True when `p > n/2` and the plan was computed on the reversed chain.
    pub mirrored: bool,
}

/// Mirrors `p` into the left half of the chain.
fn fold(n: usize, p: usize) -> (usize, bool) {
    if 2 * p > n {
        (n + 1 - p, true)
    } else {
        (p, false)
    }
}

pub fn build_mq(model: &MarkovModel, p: usize, eps: f64) -> Result<(MqPlan, RedactionMechanism)> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!(
            "privacy budget must be positive and finite, got {eps}"
        )));
    }
    check_index(model, p)?;
    let n = model.n();
    let (pm, mirrored) = fold(n, p);

    let delta_eps = delta_star(model, eps)?;
    let delta_half_eps = delta_star(model, eps / 2.0)?;
    let threshold = pm as i64 + delta_eps as i64 - 2 * delta_half_eps as i64;
    let guard = influence_high(model, n + 1 - pm) + influence_high(model, pm - 1);
    let (branch, dl, dr) = if pm == 1 || !guard.within(eps) || threshold < 0 {
        (MqBranch::OneSided, pm - 1, delta_eps.min(n - pm))
    } else {
        (
            MqBranch::Symmetric,
            delta_half_eps.min(pm - 1),
            delta_half_eps.min(n - pm),
        )
    };
    let (delta_left, delta_right) = if mirrored { (dr, dl) } else { (dl, dr) };
    let window = (p - delta_left, p + delta_right);
    let table = (1..=n)
        .map(|t| {
            if (window.0..=window.1).contains(&t) {
                [1.0, 1.0]
            } else {
                [0.0, 0.0]
            }
        })
        .collect();
    let plan = MqPlan {
        delta_left,
        delta_right,
        window,
        branch,
        threshold,
        delta_eps,
        delta_half_eps,
        mirrored,
    };
    Ok((plan, RedactionMechanism::new(p, MechanismKind::Mq, table)?))
}

impl MqPlan {
    pub fn utility(&self, n: usize) -> f64 {
        1.0 - (self.delta_left + self.delta_right + 1) as f64 / n as f64
    }

    /// Side budgets `(left, right)` matching how the plan spends `eps`: the
    /// whole budget on the far side for the one-sided branch, halves otherwise.
    pub fn budget_split(&self, eps: f64) -> (f64, f64) {
        match (self.branch, self.mirrored) {
            (MqBranch::OneSided, false) => (0.0, eps),
            (MqBranch::OneSided, true) => (eps, 0.0),
            (MqBranch::Symmetric, _) => (eps / 2.0, eps / 2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimCase {
    Zero,
    OneSided,
    TwoSided,
}

/// Upper bound on the utility of any data-independent mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimBound {
    pub eps: f64,
    pub case: DimCase,
    pub r1: Option<usize>,
    pub r2: Option<usize>,
    pub value: f64,
}

struct Radii {
    case: DimCase,
    r1: Option<usize>,
    r2: Option<usize>,
}

fn radii(model: &MarkovModel, p: usize, eps: f64) -> Result<Radii> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!(
            "privacy budget must be nonnegative, got {eps}"
        )));
    }
    check_index(model, p)?;
    let n = model.n();
    let (p, _) = fold(n, p);
    if !influence_high(model, n - p).within(eps) {
        return Ok(Radii {
            case: DimCase::Zero,
            r1: None,
            r2: None,
        });
    }
    let d =
        first_distance_within(model, eps, DEFAULT_DELTA_CAP).ok_or(Error::DistanceNotFound {
            eps,
            cap: DEFAULT_DELTA_CAP,
        })?;
    let r1 = d + p - 1;
    if (influence_high(model, p - 1) + influence_high(model, n - p)).within(eps) {
        let half = first_distance_within(model, eps / 2.0, DEFAULT_DELTA_CAP).ok_or(
            Error::DistanceNotFound {
                eps: eps / 2.0,
                cap: DEFAULT_DELTA_CAP,
            },
        )?;
        Ok(Radii {
            case: DimCase::TwoSided,
            r1: Some(r1),
            r2: Some(r1.min(2 * half - 1)),
        })
    } else {
        Ok(Radii {
            case: DimCase::OneSided,
            r1: Some(r1),
            r2: None,
        })
    }
}

pub fn dim_upper_bound(model: &MarkovModel, p: usize, eps: f64) -> Result<DimBound> {
    let Radii { case, r1, r2 } = radii(model, p, eps)?;
    let n = model.n() as f64;
    let value = match case {
        DimCase::Zero => 0.0,
        DimCase::OneSided => 1.0 - r1.unwrap_or(0) as f64 / n,
        DimCase::TwoSided => 1.0 - r2.unwrap_or(0) as f64 / n,
    };
    Ok(DimBound {
        eps,
        case,
        r1,
        r2,
        value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MqUtilityBounds {
    /// Closed-form lower bound, floored at 0.
    pub lower: f64,
    pub exact: f64,
}

pub fn mq_utility_bounds(model: &MarkovModel, p: usize, eps: f64) -> Result<MqUtilityBounds> {
    let (plan, _) = build_mq(model, p, eps)?;
    let Radii { case, r1, r2 } = radii(model, p, eps)?;
    let n = model.n() as f64;
    let lower = match case {
        DimCase::Zero => 0.0,
        DimCase::OneSided => 1.0 - r1.unwrap_or(0) as f64 / n - 1.0 / n,
        DimCase::TwoSided => 1.0 - r2.unwrap_or(0) as f64 / n - 2.0 / n,
    };
    Ok(MqUtilityBounds {
        lower: lower.max(0.0),
        exact: plan.utility(model.n()),
    })
}

//! Three-region (3R) mechanisms: always redact `L`, always release `S`,
//! and on `M` redact value 1 always and value 0 with probability `q`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{MechanismKind, RedactionMechanism};
use crate::audit::{exact_leakage_capped, side_leakage, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::influence::{compute_regions, influence_high, influence_low, RegionKind, Regions, Side};
use crate::markov::MarkovModel;

pub const DEFAULT_GRID_STEPS: usize = 999;

const BUDGET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeRDesign {
    pub eps: f64,
    pub eps_left: f64,
    pub eps_right: f64,
    pub regions: Regions,
    /// Redaction probability of value 0 for each index in `M`.
    pub q: BTreeMap<usize, f64>,
    /// Influence carried past each index in `M` by its outer neighbour.
    pub deltas: BTreeMap<usize, f64>,
    /// Sum over both sides of the largest relaxed leakage term at the chosen `q`.
    pub relaxed_leakage_bound: f64,
}

impl ThreeRDesign {
    /// Emits the redaction table.
    pub fn mechanism(&self, kind: MechanismKind) -> Result<RedactionMechanism> {
        let n = self.regions.n();
        let table = (1..=n)
            .map(|t| match self.regions.kind(t) {
                RegionKind::Large => [1.0, 1.0],
                RegionKind::Small => [0.0, 0.0],
                RegionKind::Medium => [self.q[&t], 1.0],
            })
            .collect();
        RedactionMechanism::new(self.regions.p, kind, table)
    }

    /// Constant `q` used on one side, if that side has medium records.
    pub fn side_q(&self, side: Side) -> Option<f64> {
        self.regions
            .on_side(RegionKind::Medium, side)
            .first()
            .map(|t| self.q[t])
    }
}

/// Grid search settings for [`build_3r_numerical`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumericalSearch {
    pub grid_steps: usize,
    /// Chain length limit for the exact audits.
    pub cap: usize,
}

impl Default for NumericalSearch {
    fn default() -> Self {
        Self {
            grid_steps: DEFAULT_GRID_STEPS,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

fn resolve_split(
    model: &MarkovModel,
    p: usize,
    eps: f64,
    split: Option<(f64, f64)>,
) -> Result<(f64, f64)> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!(
            "privacy budget must be positive and finite, got {eps}"
        )));
    }
    crate::influence::check_index(model, p)?;
    let (l, r) = split.unwrap_or(if p == 1 {
        (0.0, eps)
    } else {
        (eps / 2.0, eps / 2.0)
    });
    if !(l >= 0.0) || !(r >= 0.0) {
        return Err(Error::Domain(format!(
            "side budgets must be nonnegative, got ({l}, {r})"
        )));
    }
    if l + r > eps * (1.0 + BUDGET_TOL) {
        return Err(Error::Budget {
            eps,
            eps_left: l,
            eps_right: r,
        });
    }
    Ok((l, r))
}

/// `delta_t` for each medium index on `side`, nearest to `p` first.
fn side_deltas(model: &MarkovModel, regions: &Regions, side: Side) -> Vec<(usize, f64)> {
    let n = regions.n();
    let p = regions.p;
    regions
        .on_side(RegionKind::Medium, side)
        .into_iter()
        .map(|t| {
            let next = match side {
                Side::Left => t.checked_sub(1).filter(|&u| u >= 1),
                Side::Right => Some(t + 1).filter(|&u| u <= n),
            };
            let delta = match next {
                None => 0.0,
                Some(u) => {
                    let d = p.abs_diff(u);
                    match regions.kind(u) {
                        RegionKind::Medium => influence_low(model, d).value(),
                        _ => influence_high(model, d).value(),
                    }
                }
            };
            (t, delta)
        })
        .collect()
}

/// Relaxed leakage of one side at constant `q`.
fn side_relaxed_bound(
    model: &MarkovModel,
    regions: &Regions,
    side: Side,
    deltas: &[(usize, f64)],
    q: f64,
) -> f64 {
    let p = regions.p;
    let from_medium = deltas
        .iter()
        .enumerate()
        .map(|(k, &(_, d))| d - (k + 1) as f64 * q.ln())
        .fold(0.0f64, f64::max);
    let nearest_small = regions
        .on_side(RegionKind::Small, side)
        .first()
        .map_or(0.0, |&t| influence_high(model, p.abs_diff(t)).value());
    from_medium.max(nearest_small)
}

fn relaxation_q(eps_side: f64, deltas: &[(usize, f64)]) -> f64 {
    deltas
        .iter()
        .enumerate()
        .map(|(k, &(_, d))| (-(eps_side - d) / (k + 1) as f64).exp())
        .fold(0.0f64, f64::max)
        .min(1.0)
}

struct SidePlan {
    deltas: Vec<(usize, f64)>,
    q: f64,
}

fn assemble(
    model: &MarkovModel,
    eps: f64,
    regions: Regions,
    left: SidePlan,
    right: SidePlan,
) -> ThreeRDesign {
    let bound = side_relaxed_bound(model, &regions, Side::Left, &left.deltas, left.q)
        + side_relaxed_bound(model, &regions, Side::Right, &right.deltas, right.q);
    let mut q = BTreeMap::new();
    let mut deltas = BTreeMap::new();
    for plan in [&left, &right] {
        for &(t, d) in &plan.deltas {
            q.insert(t, plan.q);
            deltas.insert(t, d);
        }
    }
    ThreeRDesign {
        eps,
        eps_left: regions.eps_left,
        eps_right: regions.eps_right,
        regions,
        q,
        deltas,
        relaxed_leakage_bound: bound,
    }
}

/// 3R mechanism from the closed-form solution of the relaxed constraints.
pub fn build_3r_relaxation(
    model: &MarkovModel,
    p: usize,
    eps: f64,
    split: Option<(f64, f64)>,
) -> Result<(ThreeRDesign, RedactionMechanism)> {
    let (l, r) = resolve_split(model, p, eps, split)?;
    let regions = compute_regions(model, p, l, r)?;
    let plan = |side: Side| {
        let deltas = side_deltas(model, &regions, side);
        let q = relaxation_q(regions.side_budget(side), &deltas);
        SidePlan { deltas, q }
    };
    let (left, right) = (plan(Side::Left), plan(Side::Right));
    let design = assemble(model, eps, regions, left, right);
    let mech = design.mechanism(MechanismKind::ThreeRRelaxation)?;
    Ok((design, mech))
}

fn grid_q(i: usize, steps: usize) -> f64 {
    i as f64 / steps as f64
}

/// Table with constant `q` on the medium records of each side.
fn table_with(regions: &Regions, q_left: f64, q_right: f64) -> Result<RedactionMechanism> {
    let p = regions.p;
    let table = (1..=regions.n())
        .map(|t| match regions.kind(t) {
            RegionKind::Large => [1.0, 1.0],
            RegionKind::Small => [0.0, 0.0],
            RegionKind::Medium => [if t < p { q_left } else { q_right }, 1.0],
        })
        .collect();
    RedactionMechanism::new(p, MechanismKind::ThreeRNumerical, table)
}

/// Smallest grid index whose side-restricted leakage fits the side budget.
fn search_side(
    model: &MarkovModel,
    regions: &Regions,
    side: Side,
    search: &NumericalSearch,
) -> Result<usize> {
    let steps = search.grid_steps;
    if regions.on_side(RegionKind::Medium, side).is_empty() {
        return Ok(steps);
    }
    let budget = regions.side_budget(side);
    let passes = |i: usize| -> Result<bool> {
        let q = grid_q(i, steps);
        let mech = table_with(regions, q, q)?;
        Ok(side_leakage(model, &mech, side, search.cap)? <= budget)
    };
    // scan in chunks so the first passing index is found without auditing
    // the whole grid, while keeping the selection deterministic
    let chunk = rayon::current_num_threads().max(1) * 4;
    let mut start = 0;
    while start <= steps {
        let end = (start + chunk).min(steps + 1);
        let results: Vec<Result<bool>> = (start..end).into_par_iter().map(passes).collect();
        for (i, ok) in (start..end).zip(results) {
            if ok? {
                return Ok(i);
            }
        }
        start = end;
    }
    Err(Error::Infeasible(format!(
        "no grid value of q satisfies the {side:?} side budget {budget}"
    )))
}

/// 3R mechanism with the smallest constant grid `q` per side that the exact
/// audit certifies.
pub fn build_3r_numerical(
    model: &MarkovModel,
    p: usize,
    eps: f64,
    split: Option<(f64, f64)>,
    search: &NumericalSearch,
) -> Result<(ThreeRDesign, RedactionMechanism)> {
    if search.grid_steps == 0 {
        return Err(Error::Domain("grid_steps must be positive".into()));
    }
    let (l, r) = resolve_split(model, p, eps, split)?;
    if model.n() > search.cap {
        return Err(Error::EnumerationLimit {
            what: "chain length for numerical 3R search",
            requested: model.n(),
            cap: search.cap,
        });
    }
    let regions = compute_regions(model, p, l, r)?;
    let steps = search.grid_steps;
    let mut il = search_side(model, &regions, Side::Left, search)?;
    let mut ir = search_side(model, &regions, Side::Right, search)?;
    loop {
        let mech = table_with(&regions, grid_q(il, steps), grid_q(ir, steps))?;
        if exact_leakage_capped(model, &mech, search.cap)?.leakage <= eps {
            break;
        }
        if il == steps && ir == steps {
            return Err(Error::Infeasible(format!(
                "redacting every medium record still exceeds the budget {eps}"
            )));
        }
        il = (il + 1).min(steps);
        ir = (ir + 1).min(steps);
    }
    let left = SidePlan {
        deltas: side_deltas(model, &regions, Side::Left),
        q: grid_q(il, steps),
    };
    let right = SidePlan {
        deltas: side_deltas(model, &regions, Side::Right),
        q: grid_q(ir, steps),
    };
    let design = assemble(model, eps, regions, left, right);
    let mech = design.mechanism(MechanismKind::ThreeRNumerical)?;
    Ok((design, mech))
}

/// Utility of a 3R design from its region sizes and `q` values.
pub fn three_r_utility(design: &ThreeRDesign, model: &MarkovModel) -> f64 {
    let (pi0, _) = model.stationary_marginal();
    let released: f64 = design.q.values().map(|q| 1.0 - q).sum();
    (design.regions.small.len() as f64 + pi0 * released) / design.regions.n() as f64
}

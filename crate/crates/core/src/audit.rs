//! Exact privacy leakage of a local redaction mechanism by enumerating every
//! output string.
//!
//! Given `X_p`, the records left of `p` and right of `p` are conditionally
//! independent, so `Pr[Y = y | X_p = x]` factors into a left pass, the
//! private record's own emission, and a right pass. Each pass is a forward
//! recursion over the chain holding `Pr[X_t = j, Y_{..t} = y_{..t} | X_p = x]`
//! with a running power-of-two rescale so long outputs cannot underflow.
//! Backward transitions equal forward ones under stationarity, so both passes
//! use the same matrix.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::influence::{max_influence_set, pointwise_set_influence, Side, MAX_SET_ENUMERATION};
use crate::markov::{MarkovModel, Transition};
use crate::mechanisms::RedactionMechanism;

/// Default chain length limit for exhaustive audits (`3^n` outputs).
pub const DEFAULT_ENUMERATION_CAP: usize = 12;

/// Hard limit: side keys are packed base-3 into a `u64`.
const MAX_ENUMERATION_CAP: usize = 40;

/// Slack used by the lower-bound checks.
pub const LOWER_BOUND_SLACK: f64 = 1e-9;

/// One released symbol. The derived order (`0 < 1 < ⊥`) is the
/// lexicographic order used to break ties between witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Zero,
    One,
    Redacted,
}

impl Symbol {
    const ALL: [Symbol; 3] = [Symbol::Zero, Symbol::One, Symbol::Redacted];

    fn digit(self) -> u64 {
        self as u64
    }

    fn from_digit(d: u64) -> Self {
        Self::ALL[d as usize]
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(Symbol::Zero),
            '1' => Some(Symbol::One),
            '⊥' | '_' | '*' => Some(Symbol::Redacted),
            _ => None,
        }
    }

    /// `Pr[Y_t = self | X_t = x]` for a row `r = (r_t(0), r_t(1))`.
    fn emission(self, r: [f64; 2], x: usize) -> f64 {
        match self {
            Symbol::Zero => {
                if x == 0 {
                    1.0 - r[0]
                } else {
                    0.0
                }
            }
            Symbol::One => {
                if x == 1 {
                    1.0 - r[1]
                } else {
                    0.0
                }
            }
            Symbol::Redacted => r[x],
        }
    }

    /// Symbols with positive probability under row `r`.
    fn feasible(r: [f64; 2]) -> impl Iterator<Item = Symbol> {
        Self::ALL.into_iter().filter(move |s| match s {
            Symbol::Zero => r[0] < 1.0,
            Symbol::One => r[1] < 1.0,
            Symbol::Redacted => r[0] > 0.0 || r[1] > 0.0,
        })
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symbol::Zero => "0",
            Symbol::One => "1",
            Symbol::Redacted => "⊥",
        })
    }
}

/// Formats an output string such as `⊥⊥01`.
pub fn format_output(y: &[Symbol]) -> String {
    y.iter().map(Symbol::to_string).collect()
}

pub fn parse_output(s: &str) -> Result<Vec<Symbol>> {
    s.chars()
        .map(|c| {
            Symbol::from_char(c)
                .ok_or_else(|| Error::Domain(format!("invalid output symbol '{c}'")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeakageReport {
    /// Leakage in nats; `+inf` when some output is possible under only one
    /// value of the private record.
    pub leakage: f64,
    pub witness: Vec<Symbol>,
    pub outputs_enumerated: u64,
    /// `(left, right)`: leakage of the mechanism restricted to `[1, p]` and
    /// to `[p, n]`.
    pub per_side: Option<(f64, f64)>,
}

impl LeakageReport {
    pub fn passes(&self, eps: f64) -> bool {
        self.leakage <= eps
    }
}

/// Forward-pass state for one conditioning value: `v * exp(log_scale)`,
/// with `gap` value-independent redactions not yet folded into `v`.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    v: [f64; 2],
    log_scale: f64,
    gap: usize,
}

const RESCALE_BELOW: f64 = 1e-150;
const RESCALE_BY: f64 = 1e150;

/// `P^k` for `k = 0..=n`.
fn powers(model: &MarkovModel) -> Vec<Transition> {
    (0..=model.n()).map(|k| model.power(k)).collect()
}

impl Scaled {
    fn point(x: usize) -> Self {
        let mut v = [0.0; 2];
        v[x] = 1.0;
        Self {
            v,
            log_scale: 0.0,
            gap: 0,
        }
    }

    fn step(self, powers: &[Transition], r: [f64; 2], sym: Symbol) -> Self {
        if sym == Symbol::Redacted && r[0] == r[1] {
            // the record's value is marginalized out; only the constant r remains
            return Self {
                log_scale: self.log_scale + r[0].ln(),
                gap: self.gap + 1,
                ..self
            };
        }
        let p = &powers[self.gap + 1];
        let mut v = [0.0; 2];
        for (j, slot) in v.iter_mut().enumerate() {
            let e = sym.emission(r, j);
            if e > 0.0 {
                *slot = (self.v[0] * p[0][j] + self.v[1] * p[1][j]) * e;
            }
        }
        let mut log_scale = self.log_scale;
        let m = v[0].max(v[1]);
        if m > 0.0 && m < RESCALE_BELOW {
            v[0] *= RESCALE_BY;
            v[1] *= RESCALE_BY;
            log_scale -= RESCALE_BY.ln();
        }
        Self {
            v,
            log_scale,
            gap: 0,
        }
    }

    fn log_total(&self) -> f64 {
        let s = self.v[0] + self.v[1];
        if s > 0.0 {
            s.ln() + self.log_scale
        } else {
            f64::NEG_INFINITY
        }
    }
}

fn check_shapes(model: &MarkovModel, mech: &RedactionMechanism) -> Result<()> {
    if model.n() != mech.n() {
        return Err(Error::InvalidMechanism(format!(
            "mechanism has {} rows but the model has n = {}",
            mech.n(),
            model.n()
        )));
    }
    Ok(())
}

/// Positions of one side, nearest to `p` first.
fn side_positions(n: usize, p: usize, side: Side) -> Vec<usize> {
    match side {
        Side::Left => (1..p).rev().collect(),
        Side::Right => (p + 1..=n).collect(),
    }
}

/// Exact `log Pr[Y = y | X_p = x_p]`.
pub fn output_probability(
    model: &MarkovModel,
    mech: &RedactionMechanism,
    y: &[Symbol],
    x_p: u8,
) -> Result<f64> {
    check_shapes(model, mech)?;
    if y.len() != model.n() {
        return Err(Error::Domain(format!(
            "output has length {} but the model has n = {}",
            y.len(),
            model.n()
        )));
    }
    if x_p > 1 {
        return Err(Error::Domain(format!(
            "private value must be 0 or 1, got {x_p}"
        )));
    }
    let x = x_p as usize;
    let p = mech.p();
    let e_p = y[p - 1].emission(mech.row(p), x);
    if e_p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let trans = powers(model);
    let mut total = e_p.ln();
    for side in [Side::Left, Side::Right] {
        let mut s = Scaled::point(x);
        for t in side_positions(model.n(), p, side) {
            s = s.step(&trans, mech.row(t), y[t - 1]);
        }
        total += s.log_total();
    }
    Ok(total)
}

/// All feasible outputs of one side with their log-probabilities under
/// `X_p = 0` and `X_p = 1`.
struct SideOutputs {
    /// Base-3 lexicographic key over the side's positions in index order.
    keys: Vec<u64>,
    logp: Vec<[f64; 2]>,
}

fn enumerate_side(model: &MarkovModel, mech: &RedactionMechanism, side: Side) -> SideOutputs {
    let n = model.n();
    let p = mech.p();
    let positions = side_positions(n, p, side);
    // weight of each position in the lexicographic key
    let weights: Vec<u64> = positions
        .iter()
        .map(|&t| match side {
            Side::Left => 3u64.pow((p - 1 - t) as u32),
            Side::Right => 3u64.pow((n - t) as u32),
        })
        .collect();
    let feasible: Vec<Vec<Symbol>> = positions
        .iter()
        .map(|&t| Symbol::feasible(mech.row(t)).collect())
        .collect();
    let rows: Vec<[f64; 2]> = positions.iter().map(|&t| mech.row(t)).collect();
    let trans = powers(model);

    let mut out = SideOutputs {
        keys: Vec::new(),
        logp: Vec::new(),
    };
    let start = [Scaled::point(0), Scaled::point(1)];
    let mut stack: Vec<(usize, u64, [Scaled; 2])> = vec![(0, 0, start)];
    while let Some((depth, key, state)) = stack.pop() {
        if depth == positions.len() {
            out.keys.push(key);
            out.logp.push([state[0].log_total(), state[1].log_total()]);
            continue;
        }
        for &sym in feasible[depth].iter().rev() {
            let next = [
                state[0].step(&trans, rows[depth], sym),
                state[1].step(&trans, rows[depth], sym),
            ];
            stack.push((depth + 1, key + sym.digit() * weights[depth], next));
        }
    }
    out
}

/// Log-ratio leakage contributed by a pair of log-probabilities, or `None`
/// when the output is impossible under both conditionings.
fn log_ratio(l0: f64, l1: f64) -> Option<f64> {
    match (l0 == f64::NEG_INFINITY, l1 == f64::NEG_INFINITY) {
        (true, true) => None,
        (true, false) | (false, true) => Some(f64::INFINITY),
        (false, false) => Some((l0 - l1).abs()),
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    let cap = cap.min(MAX_ENUMERATION_CAP);
    if n > cap {
        return Err(Error::EnumerationLimit {
            what: "chain length for exhaustive audit",
            requested: n,
            cap,
        });
    }
    Ok(())
}

fn side_max(side: &SideOutputs, private_emissions: &[[f64; 2]]) -> f64 {
    let mut best = 0.0f64;
    for lp in &side.logp {
        for e in private_emissions {
            if let Some(v) = log_ratio(lp[0] + e[0], lp[1] + e[1]) {
                best = best.max(v);
            }
        }
    }
    best
}

fn private_emissions(mech: &RedactionMechanism) -> Vec<(Symbol, [f64; 2])> {
    let r = mech.row(mech.p());
    Symbol::feasible(r)
        .map(|s| (s, [s.emission(r, 0).ln(), s.emission(r, 1).ln()]))
        .collect()
}

/// Exact leakage with the default cap.
pub fn exact_leakage(model: &MarkovModel, mech: &RedactionMechanism) -> Result<LeakageReport> {
    exact_leakage_capped(model, mech, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_leakage_capped(
    model: &MarkovModel,
    mech: &RedactionMechanism,
    cap: usize,
) -> Result<LeakageReport> {
    check_shapes(model, mech)?;
    check_cap(model.n(), cap)?;
    let n = model.n();
    let p = mech.p();
    let left = enumerate_side(model, mech, Side::Left);
    let right = enumerate_side(model, mech, Side::Right);
    let private = private_emissions(mech);

    // (value, left key, private symbol, right key); ties go to the
    // lexicographically smallest output
    let mut best: Option<(f64, u64, Symbol, u64)> = None;
    let mut count = 0u64;
    for (li, lp) in left.logp.iter().enumerate() {
        for &(sym, e) in &private {
            for (ri, rp) in right.logp.iter().enumerate() {
                count += 1;
                let Some(v) = log_ratio(lp[0] + e[0] + rp[0], lp[1] + e[1] + rp[1]) else {
                    continue;
                };
                let cand = (v, left.keys[li], sym, right.keys[ri]);
                let better = match &best {
                    None => true,
                    Some(b) => match v.partial_cmp(&b.0) {
                        Some(Ordering::Greater) => true,
                        Some(Ordering::Equal) => (cand.1, cand.2, cand.3) < (b.1, b.2, b.3),
                        _ => false,
                    },
                };
                if better {
                    best = Some(cand);
                }
            }
        }
    }
    let (_, lkey, psym, rkey) =
        best.ok_or_else(|| Error::InvalidMechanism("no output has positive probability".into()))?;

    let mut witness = vec![Symbol::Redacted; n];
    for t in 1..p {
        witness[t - 1] = Symbol::from_digit(lkey / 3u64.pow((p - 1 - t) as u32) % 3);
    }
    witness[p - 1] = psym;
    for t in p + 1..=n {
        witness[t - 1] = Symbol::from_digit(rkey / 3u64.pow((n - t) as u32) % 3);
    }
    // report the witness's own re-evaluation so it reproduces exactly
    let l0 = output_probability(model, mech, &witness, 0)?;
    let l1 = output_probability(model, mech, &witness, 1)?;
    let leakage = log_ratio(l0, l1).unwrap_or(0.0);

    let emissions: Vec<[f64; 2]> = private.iter().map(|&(_, e)| e).collect();
    let per_side = Some((side_max(&left, &emissions), side_max(&right, &emissions)));

    Ok(LeakageReport {
        leakage,
        witness,
        outputs_enumerated: count,
        per_side,
    })
}

/// Leakage of the mechanism restricted to one side of `p` (the side plus the
/// private record itself).
pub fn side_leakage(
    model: &MarkovModel,
    mech: &RedactionMechanism,
    side: Side,
    cap: usize,
) -> Result<f64> {
    check_shapes(model, mech)?;
    check_cap(model.n(), cap)?;
    let outputs = enumerate_side(model, mech, side);
    let emissions: Vec<[f64; 2]> = private_emissions(mech)
        .into_iter()
        .map(|(_, e)| e)
        .collect();
    Ok(side_max(&outputs, &emissions))
}

/// Every feasible output with `[log Pr[y | X_p = 0], log Pr[y | X_p = 1]]`.
pub fn enumerate_outputs(
    model: &MarkovModel,
    mech: &RedactionMechanism,
    cap: usize,
) -> Result<Vec<(Vec<Symbol>, [f64; 2])>> {
    check_shapes(model, mech)?;
    check_cap(model.n(), cap)?;
    let n = model.n();
    let feasible: Vec<Vec<Symbol>> = (1..=n)
        .map(|t| Symbol::feasible(mech.row(t)).collect())
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let y: Vec<Symbol> = idx.iter().zip(&feasible).map(|(&i, f)| f[i]).collect();
        let lp = [
            output_probability(model, mech, &y, 0)?,
            output_probability(model, mech, &y, 1)?,
        ];
        out.push((y, lp));
        // odometer over positions, last position fastest
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < feasible[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundCheck {
    pub leakage: f64,
    /// Largest pointwise set-influence over realizations of the released set
    /// that the mechanism can emit unredacted.
    pub pointwise_bound: f64,
    /// Max-influence of the released set, when every released row ignores
    /// the record's value.
    pub max_influence_bound: Option<f64>,
    pub holds: bool,
}

/// Checks that the exact leakage dominates the influence of records the
/// mechanism can release.
pub fn leakage_lower_bound_check(
    model: &MarkovModel,
    mech: &RedactionMechanism,
    released: &[usize],
) -> Result<LowerBoundCheck> {
    let report = exact_leakage(model, mech)?;
    leakage_lower_bound_check_with(model, mech, released, report.leakage)
}

/// Same as [`leakage_lower_bound_check`] with an already computed leakage.
pub fn leakage_lower_bound_check_with(
    model: &MarkovModel,
    mech: &RedactionMechanism,
    released: &[usize],
    leakage: f64,
) -> Result<LowerBoundCheck> {
    check_shapes(model, mech)?;
    let mut set = released.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.len() > MAX_SET_ENUMERATION {
        return Err(Error::EnumerationLimit {
            what: "released set size",
            requested: set.len(),
            cap: MAX_SET_ENUMERATION,
        });
    }
    let mut releasable: Vec<Vec<u8>> = Vec::with_capacity(set.len());
    for &t in &set {
        crate::influence::check_index(model, t)?;
        let vals: Vec<u8> = (0..2u8).filter(|&x| mech.redact_prob(t, x) < 1.0).collect();
        if vals.is_empty() {
            return Err(Error::Domain(format!("record {t} is never released")));
        }
        releasable.push(vals);
    }

    let p = mech.p();
    let mut pointwise_bound = 0.0f64;
    let mut choice = vec![0usize; set.len()];
    let mut values = vec![0u8; set.len()];
    'outer: loop {
        for (k, v) in values.iter_mut().enumerate() {
            *v = releasable[k][choice[k]];
        }
        let v = pointwise_set_influence(model, p, &set, &values)?.value();
        pointwise_bound = pointwise_bound.max(v);
        let mut k = set.len();
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < releasable[k].len() {
                break;
            }
            choice[k] = 0;
        }
    }

    let data_independent = set.iter().all(|&t| {
        let r = mech.row(t);
        r[0] == r[1] && r[0] < 1.0
    });
    let max_influence_bound = if data_independent {
        Some(max_influence_set(model, p, &set)?.value())
    } else {
        None
    };

    let holds = leakage >= pointwise_bound - LOWER_BOUND_SLACK
        && max_influence_bound.is_none_or(|b| leakage >= b - LOWER_BOUND_SLACK);
    Ok(LowerBoundCheck {
        leakage,
        pointwise_bound,
        max_influence_bound,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::MechanismKind;

    fn example1() -> (MarkovModel, RedactionMechanism) {
        let model = MarkovModel::new(2, 0.25, 0.5).unwrap();
        let mech =
            RedactionMechanism::new(1, MechanismKind::Custom, vec![[1.0, 1.0], [0.125, 1.0]])
                .unwrap();
        (model, mech)
    }

    #[test]
    fn output_probability_examples() {
        let (model, mech) = example1();
        let y = [Symbol::Redacted, Symbol::Redacted];
        let lp = output_probability(&model, &mech, &y, 1).unwrap();
        assert!((lp - 0.5625f64.ln()).abs() < 1e-14);
        let lp = output_probability(&model, &mech, &y, 0).unwrap();
        assert!((lp - 0.34375f64.ln()).abs() < 1e-14);

        let full = RedactionMechanism::full_redaction(5, 2).unwrap();
        let m5 = MarkovModel::new(5, 0.1, 0.3).unwrap();
        let y = vec![Symbol::Redacted; 5];
        assert_eq!(output_probability(&m5, &full, &y, 0).unwrap(), 0.0);
        assert_eq!(output_probability(&m5, &full, &y, 1).unwrap(), 0.0);

        let y = [Symbol::Zero, Symbol::Zero];
        assert_eq!(
            output_probability(&model, &mech, &y, 0).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(output_probability(&model, &mech, &[Symbol::Zero], 0).is_err());
        assert!(output_probability(&model, &mech, &y, 2).is_err());
    }

    #[test]
    fn example1_leakage() {
        let (model, mech) = example1();
        let report = exact_leakage(&model, &mech).unwrap();
        let expected = (0.5625f64 / 0.34375).ln();
        assert!((report.leakage - expected).abs() < 1e-14);
        assert!((report.leakage - 0.492_476).abs() < 1e-6);
        assert!(report.leakage <= 0.5);
        assert_eq!(report.witness, vec![Symbol::Redacted, Symbol::Redacted]);
        // (⊥, 0) and (⊥, ⊥)
        assert_eq!(report.outputs_enumerated, 2);
        let (l, r) = report.per_side.unwrap();
        assert_eq!(l, 0.0);
        assert!((r - report.leakage).abs() < 1e-14);
    }

    #[test]
    fn boundary_mechanisms() {
        let model = MarkovModel::new(6, 0.1, 0.4).unwrap();
        let full = RedactionMechanism::full_redaction(6, 3).unwrap();
        let report = exact_leakage(&model, &full).unwrap();
        assert_eq!(report.leakage, 0.0);
        assert_eq!(report.outputs_enumerated, 1);

        let leaky =
            RedactionMechanism::new_unrestricted(3, MechanismKind::Custom, vec![[0.0, 0.0]; 6])
                .unwrap();
        let report = exact_leakage(&model, &leaky).unwrap();
        assert!(report.leakage.is_infinite());
        assert!(report.witness[2] != Symbol::Redacted);
    }

    #[test]
    fn cap_is_enforced() {
        let model = MarkovModel::new(13, 0.1, 0.4).unwrap();
        let mech = RedactionMechanism::full_redaction(13, 1).unwrap();
        assert!(matches!(
            exact_leakage(&model, &mech),
            Err(Error::EnumerationLimit { .. })
        ));
        assert!(exact_leakage_capped(&model, &mech, 13).is_ok());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let model = MarkovModel::new(3, 0.1, 0.4).unwrap();
        let mech = RedactionMechanism::full_redaction(4, 1).unwrap();
        assert!(exact_leakage(&model, &mech).is_err());
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = MarkovModel::new(6, 0.2, 0.7).unwrap();
        let mech = RedactionMechanism::new(
            3,
            MechanismKind::Custom,
            vec![
                [0.3, 0.9],
                [0.5, 0.5],
                [1.0, 1.0],
                [0.1, 1.0],
                [0.0, 0.0],
                [0.7, 0.2],
            ],
        )
        .unwrap();
        let outs = enumerate_outputs(&model, &mech, 12).unwrap();
        for x in 0..2 {
            let total: f64 = outs.iter().map(|(_, lp)| lp[x].exp()).sum();
            assert!((total - 1.0).abs() < 1e-9, "x={x} total={total}");
        }
        // the pruned enumeration visits exactly the feasible outputs
        let report = exact_leakage(&model, &mech).unwrap();
        assert_eq!(report.outputs_enumerated, outs.len() as u64);
        let brute = outs
            .iter()
            .filter_map(|(_, lp)| log_ratio(lp[0], lp[1]))
            .fold(0.0f64, f64::max);
        assert!((brute - report.leakage).abs() < 1e-12);
    }

    #[test]
    fn witness_reproduces_leakage() {
        let model = MarkovModel::new(5, 0.1, 0.6).unwrap();
        let mech = RedactionMechanism::new(
            2,
            MechanismKind::Custom,
            vec![[0.4, 1.0], [1.0, 1.0], [0.3, 1.0], [0.0, 0.0], [0.0, 0.5]],
        )
        .unwrap();
        let report = exact_leakage(&model, &mech).unwrap();
        let l0 = output_probability(&model, &mech, &report.witness, 0).unwrap();
        let l1 = output_probability(&model, &mech, &report.witness, 1).unwrap();
        assert_eq!((l0 - l1).abs().to_bits(), report.leakage.to_bits());
    }

    #[test]
    fn lower_bound_examples() {
        let (model, mech) = example1();
        let check = leakage_lower_bound_check(&model, &mech, &[2]).unwrap();
        assert!(check.holds);
        assert!((check.pointwise_bound - 1.5f64.ln()).abs() < 1e-12);
        assert!(check.max_influence_bound.is_none());

        let full = RedactionMechanism::full_redaction(2, 1).unwrap();
        let check = leakage_lower_bound_check(&model, &full, &[]).unwrap();
        assert!(check.holds);
        assert_eq!(check.pointwise_bound, 0.0);
        assert!(leakage_lower_bound_check(&model, &full, &[2]).is_err());
    }

    #[test]
    fn symbols_format_and_parse() {
        let y = parse_output("⊥0_1").unwrap();
        assert_eq!(
            y,
            vec![
                Symbol::Redacted,
                Symbol::Zero,
                Symbol::Redacted,
                Symbol::One
            ]
        );
        assert_eq!(format_output(&y), "⊥0⊥1");
        assert!(parse_output("2").is_err());
    }
}

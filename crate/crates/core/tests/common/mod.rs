//! Brute-force oracles over the full joint distribution of the chain.

#![allow(dead_code)]

use markov_redaction::audit::Symbol;
use markov_redaction::{MarkovModel, RedactionMechanism};

/// Every path `x_1..x_n` with its probability.
pub fn all_paths(model: &MarkovModel) -> Vec<(Vec<u8>, f64)> {
    let n = model.n();
    let (pi0, pi1) = model.stationary_marginal();
    let p = model.one_step();
    (0..1u32 << n)
        .map(|code| {
            let x: Vec<u8> = (0..n).map(|i| ((code >> i) & 1) as u8).collect();
            let mut pr = if x[0] == 0 { pi0 } else { pi1 };
            for w in x.windows(2) {
                pr *= p[w[0] as usize][w[1] as usize];
            }
            (x, pr)
        })
        .collect()
}

/// `Pr[X_S = values | X_p = xp]` by summing the joint.
pub fn set_conditional(model: &MarkovModel, p: usize, set: &[usize], values: &[u8], xp: u8) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, pr) in all_paths(model) {
        if x[p - 1] != xp {
            continue;
        }
        den += pr;
        if set.iter().zip(values).all(|(&t, &v)| x[t - 1] == v) {
            num += pr;
        }
    }
    num / den
}

pub fn set_influence(model: &MarkovModel, p: usize, set: &[usize], values: &[u8]) -> f64 {
    let a = set_conditional(model, p, set, values, 0);
    let b = set_conditional(model, p, set, values, 1);
    (a.ln() - b.ln()).abs()
}

pub fn max_set_influence(model: &MarkovModel, p: usize, set: &[usize]) -> f64 {
    (0..1u32 << set.len())
        .map(|code| {
            let v: Vec<u8> = (0..set.len()).map(|i| ((code >> i) & 1) as u8).collect();
            set_influence(model, p, set, &v)
        })
        .fold(0.0, f64::max)
}

fn emission(sym: Symbol, r: [f64; 2], x: u8) -> f64 {
    match sym {
        Symbol::Redacted => r[x as usize],
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
    }
}

/// `Pr[Y = y | X_p = xp]` by summing the joint.
pub fn output_conditional(
    model: &MarkovModel,
    mech: &RedactionMechanism,
    y: &[Symbol],
    xp: u8,
) -> f64 {
    let p = mech.p();
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, pr) in all_paths(model) {
        if x[p - 1] != xp {
            continue;
        }
        den += pr;
        let e: f64 = (1..=model.n())
            .map(|t| emission(y[t - 1], mech.row(t), x[t - 1]))
            .product();
        num += pr * e;
    }
    num / den
}

/// Every output in `{0,1,⊥}^n`.
pub fn all_outputs(n: usize) -> Vec<Vec<Symbol>> {
    let syms = [Symbol::Zero, Symbol::One, Symbol::Redacted];
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|y| {
                syms.iter().map(move |&s| {
                    let mut z = y.clone();
                    z.push(s);
                    z
                })
            })
            .collect();
    }
    out
}

/// Leakage by enumerating every output and evaluating the joint directly.
pub fn brute_leakage(model: &MarkovModel, mech: &RedactionMechanism) -> f64 {
    let mut best = 0.0f64;
    for y in all_outputs(model.n()) {
        let a = output_conditional(model, mech, &y, 0);
        let b = output_conditional(model, mech, &y, 1);
        match (a > 0.0, b > 0.0) {
            (false, false) => {}
            (true, true) => best = best.max((a.ln() - b.ln()).abs()),
            _ => best = f64::INFINITY,
        }
    }
    best
}

//! Stationary two-state Markov chain over binary records.
//!
//! The chain `X_1 - X_2 - ... - X_n` has transition matrix
//!
//! ```text
//! P = | 1-alpha   alpha  |
//!     |  beta    1-beta  |
//! ```
//!
//! and starts in its stationary distribution, so every record has the same
//! marginal and backward transitions equal forward transitions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A 2x2 row-stochastic matrix, indexed `[from][to]`.
pub type Transition = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovModel {
    n: usize,
    alpha: f64,
    beta: f64,
}

impl MarkovModel {
    /// Builds a chain of `n` records with `Pr[0 -> 1] = alpha` and
    /// `Pr[1 -> 0] = beta`. Requires `n >= 1` and `0 < alpha <= beta < 1`.
    ///
    /// Chains with `alpha > beta` are rejected rather than relabelled: swapping
    /// the roles of 0 and 1 also swaps which value carries the larger
    /// pointwise-influence, so callers must relabel their data explicitly.
    pub fn new(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel(
                "chain length n must be at least 1".into(),
            ));
        }
        if !(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidModel(format!(
                "transition probabilities must lie in (0, 1), got alpha={alpha}, beta={beta}"
            )));
        }
        if alpha > beta {
            return Err(Error::InvalidModel(format!(
                "alpha={alpha} > beta={beta}; relabel the records (swap 0 and 1) so that alpha <= beta"
            )));
        }
        Ok(Self { n, alpha, beta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Second eigenvalue of `P`, `1 - alpha - beta`.
    pub fn lambda(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }

    /// Same chain parameters with a different length.
    pub fn with_len(&self, n: usize) -> Result<Self> {
        Self::new(n, self.alpha, self.beta)
    }

    /// `(Pr[X = 0], Pr[X = 1])` under the stationary distribution.
    pub fn stationary_marginal(&self) -> (f64, f64) {
        let s = self.alpha + self.beta;
        (self.beta / s, self.alpha / s)
    }

    pub fn one_step(&self) -> Transition {
        [[1.0 - self.alpha, self.alpha], [self.beta, 1.0 - self.beta]]
    }

    /// Closed form of `P^delta` for `delta >= 1`.
    pub fn multi_step(&self, delta: usize) -> Result<MultiStepTransition> {
        if delta == 0 {
            return Err(Error::Domain(
                "multi-step transition needs delta >= 1".into(),
            ));
        }
        let s = self.alpha + self.beta;
        let decay = 1.0 - self.lambda().powi(delta_exponent(delta));
        Ok(MultiStepTransition {
            delta,
            alpha_delta: self.alpha / s * decay,
            beta_delta: self.beta / s * decay,
        })
    }

    /// `P^delta` as a matrix, with `P^0` the identity.
    pub(crate) fn power(&self, delta: usize) -> Transition {
        match self.multi_step(delta) {
            Ok(m) => m.matrix(),
            Err(_) => [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// Samples one realization `x_1..x_n`, deterministically from `seed`.
    pub fn sample_path(&self, seed: u64) -> Path {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0u8; self.n];
        self.fill_path(&mut rng, &mut values);
        Path { values, seed }
    }

    pub(crate) fn fill_path<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [u8]) {
        let (_, pi1) = self.stationary_marginal();
        let mut state = u8::from(rng.random::<f64>() < pi1);
        for (t, slot) in out.iter_mut().enumerate() {
            if t > 0 {
                let flip = if state == 0 { self.alpha } else { self.beta };
                if rng.random::<f64>() < flip {
                    state ^= 1;
                }
            }
            *slot = state;
        }
    }
}

fn delta_exponent(delta: usize) -> i32 {
    // lambda^delta underflows long before delta reaches i32::MAX
    delta.min(i32::MAX as usize) as i32
}

/// Entries of `P^delta`: `alpha_delta = Pr[X_{t+delta} = 1 | X_t = 0]` and
/// `beta_delta = Pr[X_{t+delta} = 0 | X_t = 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiStepTransition {
    pub delta: usize,
    pub alpha_delta: f64,
    pub beta_delta: f64,
}

impl MultiStepTransition {
    pub fn matrix(&self) -> Transition {
        [
            [1.0 - self.alpha_delta, self.alpha_delta],
            [self.beta_delta, 1.0 - self.beta_delta],
        ]
    }
}

/// A sampled realization of the chain together with the seed that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub values: Vec<u8>,
    pub seed: u64,
}

impl Path {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_mul(a: &Transition, b: &Transition) -> Transition {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    fn grid() -> Vec<MarkovModel> {
        let pairs = [
            (0.01, 0.8),
            (0.25, 0.5),
            (0.5, 0.5),
            (0.3, 0.7),
            (0.4, 0.9),
            (0.1, 0.15),
            (0.05, 0.95),
        ];
        pairs
            .iter()
            .map(|&(a, b)| MarkovModel::new(5, a, b).unwrap())
            .collect()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MarkovModel::new(0, 0.1, 0.2).is_err());
        assert!(MarkovModel::new(3, 0.0, 0.2).is_err());
        assert!(MarkovModel::new(3, 0.1, 1.0).is_err());
        assert!(MarkovModel::new(3, 0.6, 0.2).is_err());
        assert!(MarkovModel::new(3, f64::NAN, 0.2).is_err());
        assert!(MarkovModel::new(1, 0.3, 0.7).is_ok());
    }

    #[test]
    fn stationary_marginal_examples() {
        let (p0, p1) = MarkovModel::new(2, 0.25, 0.5)
            .unwrap()
            .stationary_marginal();
        assert!((p0 - 2.0 / 3.0).abs() < 1e-15);
        assert!((p1 - 1.0 / 3.0).abs() < 1e-15);

        let (p0, p1) = MarkovModel::new(2, 0.5, 0.5).unwrap().stationary_marginal();
        assert_eq!((p0, p1), (0.5, 0.5));

        let (p0, p1) = MarkovModel::new(2, 0.01, 0.8)
            .unwrap()
            .stationary_marginal();
        assert!((p0 - 0.8 / 0.81).abs() < 1e-15);
        assert!((p0 - 0.987_654_320_987_654_3).abs() < 1e-12);
        assert!((p1 - 0.012_345_679_012_345_68).abs() < 1e-12);
        assert!((p0 + p1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn multi_step_examples() {
        let m = MarkovModel::new(2, 0.25, 0.5).unwrap();
        let one = m.multi_step(1).unwrap();
        assert!((one.alpha_delta - 0.25).abs() < 1e-15);
        assert!((one.beta_delta - 0.5).abs() < 1e-15);
        // P^2 by hand:
        // row 0: 0.75*0.75 + 0.25*0.5 = 0.6875, 0.75*0.25 + 0.25*0.5 = 0.3125
        // row 1: 0.5*0.75 + 0.5*0.5 = 0.625,    0.5*0.25 + 0.5*0.5 = 0.375
        let two = m.multi_step(2).unwrap();
        assert!((two.alpha_delta - 0.3125).abs() < 1e-15);
        assert!((two.beta_delta - 0.625).abs() < 1e-15);

        let m = MarkovModel::new(2, 0.01, 0.8).unwrap();
        let three = m.multi_step(3).unwrap();
        assert!((1.0 - three.alpha_delta - three.beta_delta - 0.006_859).abs() < 1e-12);

        assert!(m.multi_step(0).is_err());
    }

    #[test]
    fn multi_step_matches_matrix_power() {
        for m in grid() {
            let p = m.one_step();
            let mut acc = p;
            for delta in 1..=20 {
                let closed = m.multi_step(delta).unwrap();
                let cm = closed.matrix();
                for i in 0..2 {
                    for j in 0..2 {
                        assert!(
                            (cm[i][j] - acc[i][j]).abs() < 1e-12,
                            "{m:?} delta={delta} entry ({i},{j})"
                        );
                    }
                }
                let (pi0, pi1) = m.stationary_marginal();
                assert!(
                    (closed.alpha_delta / closed.beta_delta - m.alpha() / m.beta()).abs() < 1e-12
                );
                assert!(
                    (1.0 - closed.alpha_delta - closed.beta_delta - m.lambda().powi(delta as i32))
                        .abs()
                        < 1e-12
                );
                assert!((pi0 * closed.alpha_delta - pi1 * closed.beta_delta).abs() < 1e-12);
                acc = mat_mul(&acc, &p);
            }
        }
    }

    #[test]
    fn sample_path_is_deterministic() {
        let m = MarkovModel::new(50, 0.1, 0.3).unwrap();
        let a = m.sample_path(42);
        let b = m.sample_path(42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert_eq!(a.seed, 42);
        assert!(a.values.iter().all(|&v| v <= 1));
        assert_ne!(m.sample_path(43).values, a.values);
    }

    #[test]
    fn sample_path_statistics() {
        let n = 100_000;
        let m = MarkovModel::new(n, 0.25, 0.5).unwrap();
        let path = m.sample_path(7);
        let zeros = path.values.iter().filter(|&&v| v == 0).count() as f64;
        let frac0 = zeros / n as f64;
        assert!((frac0 - 2.0 / 3.0).abs() < 0.01, "Pr[X=0] estimate {frac0}");

        let (mut from0, mut to1) = (0usize, 0usize);
        for w in path.values.windows(2) {
            if w[0] == 0 {
                from0 += 1;
                if w[1] == 1 {
                    to1 += 1;
                }
            }
        }
        let rate = to1 as f64 / from0 as f64;
        assert!((rate - 0.25).abs() < 0.01, "transition estimate {rate}");
        // 4-sigma binomial bound on the transition count
        let sd = (0.25 * 0.75 / from0 as f64).sqrt();
        assert!((rate - 0.25).abs() < 4.0 * sd);
    }
}

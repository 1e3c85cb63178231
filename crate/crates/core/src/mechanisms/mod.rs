//! Local redaction mechanisms and their constructions.
//!
//! Every mechanism is a table `r_t(x) = Pr[Y_t = ⊥ | X_t = x]`, one row per
//! record. Locality is structural: a row only sees its own record's value.

mod format;
mod mq;
mod three_r;

use std::fmt;
use std::str::FromStr;

pub use format::{read_mechanism_file, write_mechanism_file, MechanismFile};
pub use mq::{
    build_mq, dim_upper_bound, mq_utility_bounds, DimBound, DimCase, MqBranch, MqPlan,
    MqUtilityBounds,
};
pub use three_r::{
    build_3r_numerical, build_3r_relaxation, three_r_utility, NumericalSearch, ThreeRDesign,
    DEFAULT_GRID_STEPS,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MechanismKind {
    Mq,
    ThreeRRelaxation,
    ThreeRNumerical,
    Custom,
}

impl MechanismKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::Mq => "mq",
            MechanismKind::ThreeRRelaxation => "3r-relaxation",
            MechanismKind::ThreeRNumerical => "3r-numerical",
            MechanismKind::Custom => "custom",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mq" => Ok(MechanismKind::Mq),
            "3r-relaxation" => Ok(MechanismKind::ThreeRRelaxation),
            "3r-numerical" => Ok(MechanismKind::ThreeRNumerical),
            "custom" => Ok(MechanismKind::Custom),
            other => Err(Error::Domain(format!("unknown mechanism kind '{other}'"))),
        }
    }
}

/// Per-record redaction probabilities for a private index `p` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct RedactionMechanism {
    p: usize,
    kind: MechanismKind,
    table: Vec<[f64; 2]>,
}

impl RedactionMechanism {
    /// Validates that every entry is a probability and that the private
    /// record is always redacted.
    pub fn new(p: usize, kind: MechanismKind, table: Vec<[f64; 2]>) -> Result<Self> {
        let mech = Self::new_unrestricted(p, kind, table)?;
        if mech.table[p - 1] != [1.0, 1.0] {
            return Err(Error::InvalidMechanism(format!(
                "private record {p} must always be redacted, got r = {:?}",
                mech.table[p - 1]
            )));
        }
        Ok(mech)
    }

    /// Like [`RedactionMechanism::new`] but allows the private record to be
    /// released. Such tables are not private; they exist so the audit can
    /// demonstrate it.
    pub fn new_unrestricted(p: usize, kind: MechanismKind, table: Vec<[f64; 2]>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidMechanism("empty table".into()));
        }
        if p == 0 || p > n {
            return Err(Error::IndexOutOfRange { index: p, n });
        }
        for (i, row) in table.iter().enumerate() {
            if row.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(Error::InvalidMechanism(format!(
                    "row {} has entries outside [0, 1]: {row:?}",
                    i + 1
                )));
            }
        }
        Ok(Self { p, kind, table })
    }

    /// Redacts every record.
    pub fn full_redaction(n: usize, p: usize) -> Result<Self> {
        Self::new(p, MechanismKind::Custom, vec![[1.0, 1.0]; n])
    }

    /// Redacts only the private record.
    pub fn private_only(n: usize, p: usize) -> Result<Self> {
        let mut table = vec![[0.0, 0.0]; n];
        if p >= 1 && p <= n {
            table[p - 1] = [1.0, 1.0];
        }
        Self::new(p, MechanismKind::Custom, table)
    }

    pub fn n(&self) -> usize {
        self.table.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn table(&self) -> &[[f64; 2]] {
        &self.table
    }

    /// `Pr[Y_t = ⊥ | X_t = x]` for 1-based `t`.
    pub fn redact_prob(&self, t: usize, x: u8) -> f64 {
        self.table[t - 1][x as usize]
    }

    pub fn row(&self, t: usize) -> [f64; 2] {
        self.table[t - 1]
    }

    /// Indices that are released with positive probability for some value.
    pub fn released_set(&self) -> Vec<usize> {
        (1..=self.n())
            .filter(|&t| self.row(t).iter().any(|&r| r < 1.0))
            .collect()
    }

    /// True when every row ignores the record's value.
    pub fn is_data_independent(&self) -> bool {
        self.table.iter().all(|r| r[0] == r[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_table() {
        assert!(RedactionMechanism::new(1, MechanismKind::Custom, vec![]).is_err());
        assert!(RedactionMechanism::new(3, MechanismKind::Custom, vec![[1.0, 1.0]; 2]).is_err());
        assert!(
            RedactionMechanism::new(1, MechanismKind::Custom, vec![[1.0, 1.0], [1.5, 0.0]])
                .is_err()
        );
        assert!(RedactionMechanism::new(
            1,
            MechanismKind::Custom,
            vec![[1.0, 1.0], [f64::NAN, 0.0]]
        )
        .is_err());
        assert!(
            RedactionMechanism::new(1, MechanismKind::Custom, vec![[0.5, 1.0], [0.0, 0.0]])
                .is_err()
        );
        assert!(RedactionMechanism::new_unrestricted(
            1,
            MechanismKind::Custom,
            vec![[0.0, 0.0], [0.0, 0.0]]
        )
        .is_ok());
    }

    #[test]
    fn released_set_and_independence() {
        let m = RedactionMechanism::new(
            2,
            MechanismKind::Custom,
            vec![[0.0, 0.0], [1.0, 1.0], [0.25, 1.0], [1.0, 1.0]],
        )
        .unwrap();
        assert_eq!(m.released_set(), vec![1, 3]);
        assert!(!m.is_data_independent());
        assert!(RedactionMechanism::full_redaction(4, 2)
            .unwrap()
            .is_data_independent());
        assert_eq!(
            RedactionMechanism::private_only(4, 2)
                .unwrap()
                .released_set(),
            vec![1, 3, 4]
        );
    }

    #[test]
    fn kind_round_trips_through_str() {
        for k in [
            MechanismKind::Mq,
            MechanismKind::ThreeRRelaxation,
            MechanismKind::ThreeRNumerical,
            MechanismKind::Custom,
        ] {
            assert_eq!(k.as_str().parse::<MechanismKind>().unwrap(), k);
        }
        assert!("3r".parse::<MechanismKind>().is_err());
    }
}

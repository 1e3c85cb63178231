//! Local redaction mechanisms for binary records correlated by a stationary
//! two-state Markov chain.
//!
//! The crate computes influence measures and privacy regions, builds
//! three-region (3R) and Markov-quilt (MQ) redaction mechanisms, bounds the
//! utility of data-independent mechanisms, and audits the exact leakage of any
//! local redaction table by enumerating its output distribution.
//!
//! ```
//! use markov_redaction::{build_3r_relaxation, exact_leakage, MarkovModel};
//!
//! let model = MarkovModel::new(10, 0.01, 0.8).unwrap();
//! let (_, mech) = build_3r_relaxation(&model, 1, 1.0, None).unwrap();
//! assert!(exact_leakage(&model, &mech).unwrap().leakage <= 1.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod error;
pub mod experiments;
pub mod influence;
pub mod markov;
pub mod mechanisms;
pub mod utility;

pub use audit::{
    exact_leakage, exact_leakage_capped, leakage_lower_bound_check, output_probability,
    side_leakage, LeakageReport, LowerBoundCheck, Symbol, DEFAULT_ENUMERATION_CAP,
};
pub use error::{Error, Result};
pub use influence::{
    compute_regions, delta_star, influence_high, influence_low, max_influence_set,
    pointwise_influence, pointwise_set_influence, InfluenceValue, RegionKind, Regions, Side,
};
pub use markov::{MarkovModel, MultiStepTransition, Path};
pub use mechanisms::{
    build_3r_numerical, build_3r_relaxation, build_mq, dim_upper_bound, mq_utility_bounds,
    three_r_utility, DimBound, DimCase, MechanismFile, MechanismKind, MqBranch, MqPlan,
    MqUtilityBounds, NumericalSearch, RedactionMechanism, ThreeRDesign,
};
pub use utility::{exact_utility, monte_carlo_utility, MonteCarloEstimate, UtilityReport};

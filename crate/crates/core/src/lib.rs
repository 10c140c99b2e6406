//! Stable many-to-one matching where hospitals have matroid rank valuations
//! over doctors and doctors have ordinal or cardinal preferences.
//!
//! The crate provides the two sequential mechanisms for ordinal doctors
//! ([`mechanism::hwsd`] and [`mechanism::serial_dictatorship`]), weighted matroid
//! intersection for doctor welfare ([`intersection`]), the cap-transfer local
//! search for hospital Nash welfare ([`welfare_opt`]), brute-force oracles for
//! small instances ([`oracle`]), and the 2P2N-3SAT hardness gadget
//! ([`sat_gadget`]).

pub mod bitset;
pub mod error;
pub mod fixtures;
pub mod instance;
pub mod intersection;
pub mod mechanism;
pub mod oracle;
pub mod rational;
pub mod sat_gadget;
pub mod valuation;
pub mod welfare_opt;

pub use bitset::DoctorSet;
pub use error::{Error, Result};
pub use instance::{Allocation, BlockingWitness, DoctorPrefs, Instance, RandomKind};
pub use rational::Rational;
pub use valuation::{BundleState, MatroidRankValuation, MrfReport, ValuationKind};

//! Energy-aware admission and placement for multi-access edge computing.
//!
//! [`model`] holds the network description and the live resource state,
//! [`bandit`] the index and dual machinery, [`policies`] the admission
//! rules, [`sim`] the discrete-event engine and experiment driver, and
//! [`scenario`] the on-disk scenario format.

pub mod bandit;
pub mod model;
pub mod policies;
pub mod scenario;
pub mod sim;

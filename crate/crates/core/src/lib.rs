//! Staged identification of the parameters of a continuum-discrete damage
//! model from a notched three-point-bending test.
//!
//! * [`constitutive`]: bulk damage with hardening and a softening cohesive
//!   interface.
//! * [`simulators`]: a localizing tensile bar and a plane-stress FEM of the
//!   notched beam with a cohesive ligament.
//! * [`objectives`]: curve features and the three staged objectives.
//! * [`optimizer`]: GRADE with CERAF niching and an RBF-network surrogate.
//! * [`pipeline`]: sequential identification, reliability statistics, CLI glue.

pub mod constitutive;
pub mod error;
pub mod objectives;
pub mod optimizer;
pub mod pipeline;
pub mod simulators;

pub use error::{Error, Result};

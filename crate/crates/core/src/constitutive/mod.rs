//! Bulk and interface constitutive laws.

mod bulk;
mod discrete;
mod params;

pub use bulk::{
    bulk_dissipation_increment, bulk_update, plane_stress_compliance, plane_stress_stiffness,
    BulkState, BulkUpdate, Compliance, StressMode, Voigt, RETURN_MAX_ITER, RETURN_TOL,
};
pub use discrete::{
    discrete_dissipation_increment, discrete_update, evaluate_softening, DiscreteState,
    DiscreteUpdate, CONTACT_TOL,
};
pub use params::{Interval, MaterialParams, ParamBounds, ParamId, SHEAR_TO_NORMAL_LIMIT};

/// Either kind of material point, for [`dissipation_increment`].
#[derive(Debug, Clone, Copy)]
pub enum PointState<'a> {
    Bulk(&'a BulkState),
    Discrete(&'a DiscreteState),
}

/// Dissipation of one converged step; mJ/mm^3 for bulk points, mJ/mm^2 for
/// interface points.
pub fn dissipation_increment(before: PointState<'_>, after: PointState<'_>, params: &MaterialParams) -> f64 {
    match (before, after) {
        (PointState::Bulk(b), PointState::Bulk(a)) => bulk_dissipation_increment(b, a, params),
        (PointState::Discrete(b), PointState::Discrete(a)) => discrete_dissipation_increment(b, a, params),
        _ => panic!("dissipation_increment called with mismatched point kinds"),
    }
}

//! Forward solvers producing structural response curves.

pub mod band;
pub mod beam;
pub mod control;
pub mod curve;
pub mod mesh;
pub mod tensile;

pub use beam::{run_bending, BeamModel, BeamRun, BeamState, Increment, Ligament, PairedRun, StepInfo, PENALTY_PER_E};
pub use control::{SimulationControl, MAX_HALVINGS};
pub use curve::{CurvePoint, ResponseCurve};
pub use mesh::{build_beam_mesh, BeamGeometry, InterfaceRule, Mesh};
pub use tensile::{run_tensile, BarGeometry};

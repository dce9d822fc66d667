//! Rotation-aware degree computations for planar time-periodic ODEs.
//!
//! The toolkit integrates planar evolution maps, lifts trajectories to the
//! half-plane cover in the canonical clockwise chart, computes certified
//! winding numbers and the displacement-map Brouwer degree, splits that
//! degree across rotation classes, checks the twist condition on generalized
//! annuli, and localizes periodic orbits with prescribed rotation numbers by
//! degree-guided subdivision plus Newton refinement.

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

pub mod boundary;
pub mod chart;
mod error;
pub mod degree;
pub mod flow;
pub mod linear;
pub mod locate;
pub mod report;
pub mod vectorfield;

pub use error::{Error, Result};

pub use boundary::{GeneralizedAnnulus, OrientedCurve, Orientation, OriginSide, Region};
pub use degree::{
    annulus_consistency, brouwer_deg_ft, check_twist, dee_degree, sigma_set, verify_decomposition,
    winding_number, DegreeReport, IntegerTarget, RotationSummary, TwistReport,
};
pub use flow::{
    displacement_big_ft, displacement_ft, evolve, evolve_lifted, lift_trajectory, rotation_number,
    IntegratorConfig, LiftedPath, Method, NullSetHit, Trajectory,
};
pub use linear::{
    asymptotic_radius, linear_degree, maslov_index, monodromy, nonresonant, rotation_interval,
    AsymptoticEnd, AsymptoticRadius, LinearSystem, RadiusProbe,
};
pub use locate::{
    find_all, floquet_multipliers, localize, refine_orbit, Cell, CellNode, CellTree,
    FindAllReport, PeriodicOrbit,
};
pub use vectorfield::{build_scenario, ScenarioName, ScenarioSpec, TimeVaryingField};

//! Frictional surface contacts in six dimensions.
//!
//! A soft finger pressing on a curved object produces a pressure
//! distribution over a patch, not a point force. The set of frictional
//! wrenches such a contact can transmit while sticking is bounded by a
//! convex limit surface in wrench space,
//!
//! ```text
//!     f(w) <= 1,      w = [f_x, f_y, f_z, tau_x, tau_y, tau_z]
//! ```
//!
//! and every sliding motion maps to a wrench on that boundary. This crate
//! samples the boundary by sweeping unit twists over the contact patch,
//! fits closed-form models to the samples (a positive definite ellipsoid
//! or a sum-of-squares convex homogeneous quartic), linearizes the fitted
//! surface into a polytope, and composes several contacts into a grasp
//! wrench space to predict whether a grasp resists a disturbance wrench.
//!
//! The pipeline stages map onto the public modules:
//!
//! * [`geometry`]: contact patches (parametric or triangulated), pressure
//!   fields, pressure centers, the local contact frame.
//! * [`kinematics`]: Pluecker lines, unit twists, surface velocities,
//!   tangential sliding directions, deterministic twist sampling.
//! * [`wrench`]: frictional and normal wrench integrals, wrench sample
//!   sets, per-dimension normalization bounds.
//! * [`fit`]: ellipsoid and quartic limit-surface models with convexity
//!   certificates.
//! * [`linearize`]: polytope approximation of a fitted surface and the
//!   on-disk constraint cache.
//! * [`gws`]: contact constraint transforms, grasp wrench spaces, and
//!   disturbance-resistance prediction.
//! * [`io`]: JSON and OBJ interchange plus canonical cache keys.
//! * [`studies`]: mesh-convergence and sensitivity sweeps used by the
//!   command-line driver.

pub mod error;
pub mod exec;
pub mod fit;
pub mod geometry;
pub mod gws;
pub mod io;
pub mod kinematics;
pub mod linearize;
pub mod quad;
pub mod studies;
pub mod wrench;

pub use error::{Error, Result};
pub use fit::{
    fit_ellipsoid, fit_quartic, fitting_error, pca_components, EllipsoidModel, FitReport,
    LimitSurfaceModel, ModelKind, QuarticFitOptions, QuarticModel,
};
pub use geometry::{
    normalize_pressure, pressure_center, to_local_contact_frame, ContactProfile, ParametricSurface,
    PressureField, Surface, SurfaceKind, TriangleMesh,
};
pub use gws::{
    build_gws, contact_constraints, convex_membership, predict, predict_grasp, predict_with,
    ContactPlacement, Facet, ForceScale, GraspWrenchSpace, PipelineOptions, PredictionMode,
    PredictionOutput, PredictionResult,
};
pub use io::{canonical_key, load_grasp, load_profile, GraspContactSpec, GraspSpec, ProfileRef};
pub use kinematics::{sample_unit_twists, PluckerLine, TwistSampling, UnitTwist};
pub use linearize::{
    denormalize_constraints, linearize_ls, ray_intersect_ls, sample_hypercube_surface,
    ConstraintCache, ConstraintSet,
};
pub use quad::Quadrature;
pub use wrench::{
    frictional_wrench, normal_wrench, sample_wrench_set, wrench_bounds, Wrench6, WrenchSampleSet,
};

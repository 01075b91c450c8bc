//! Repeatable numerical studies behind the command-line driver:
//! mesh-convergence of wrench bounds, fitting-error comparison across
//! the standard surfaces, and trend-level sensitivity sweeps over
//! grasp batches.

use nalgebra::{DVector, Point3};

use crate::error::{Error, Result};
use crate::exec::try_par_map;
use crate::fit::{fit_ellipsoid, fit_quartic, fitting_error, LimitSurfaceModel, QuarticFitOptions};
use crate::geometry::{
    mesh_parametric, normalize_pressure, to_local_contact_frame, ContactProfile,
    ParametricSurface, PressureField, RadialMode, Surface, SurfaceKind,
};
use crate::gws::{predict_grasp, PipelineOptions};
use crate::io::{GraspSpec, ProfileRef};
use crate::kinematics::{sample_unit_twists, TwistSampling};
use crate::linearize::ConstraintCache;
use crate::quad::Quadrature;
use crate::wrench::sample_wrench_set;

/// One of the standard test patches (unit-scale S1..S6) under uniform
/// pressure.
pub fn standard_profile(kind: SurfaceKind, mu: f64) -> Result<ContactProfile> {
    let surface = ParametricSurface::new(kind)?;
    ContactProfile::new(
        Surface::Parametric(surface),
        PressureField::Uniform { value: 1000.0 },
        mu,
    )
}

/// One measurement of the mesh-discretization study.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub surface: String,
    /// Requested triangle budget.
    pub target_triangles: usize,
    /// Actual face count of the generated mesh.
    pub triangles: usize,
    /// Mean over the six wrench dimensions of
    /// `|w_max_mesh - w_max| / w_max` against the parametric truth.
    pub error_rate: f64,
}

/// Meshes each surface at each resolution and measures how far the
/// per-dimension wrench bounds drift from the smooth-surface truth.
/// The same twist set probes both paths, so the difference isolates
/// the discretization error.
pub fn mesh_convergence(
    kinds: &[SurfaceKind],
    resolutions: &[usize],
    mu: f64,
    sampling: &TwistSampling,
    quad: &Quadrature,
) -> Result<Vec<ConvergenceRow>> {
    if kinds.is_empty() {
        return Err(Error::domain("convergence study needs surfaces"));
    }
    if resolutions.is_empty() {
        return Err(Error::domain("convergence study needs resolutions"));
    }
    if let Some(zero) = resolutions.iter().find(|r| **r < 2) {
        return Err(Error::domain(format!(
            "mesh resolution must be at least 2 triangles, got {zero}"
        )));
    }
    let mut rows = Vec::with_capacity(kinds.len() * resolutions.len());
    for kind in kinds {
        let profile = standard_profile(*kind, mu)?;
        let (centered, _) = to_local_contact_frame(&profile, quad)?;
        let (normalized, _) = normalize_pressure(&centered, quad)?;
        let twists = sample_unit_twists(&normalized, sampling, quad)?;
        let truth = sample_wrench_set(&normalized, &twists, quad)?
            .w_max
            .as_vector6();
        let Surface::Parametric(parametric) = profile.surface() else {
            unreachable!("standard profiles are parametric");
        };
        let per_res = try_par_map(resolutions, |&target| {
            let mesh = mesh_parametric(parametric, target)?;
            let triangles = mesh.face_count();
            let mesh_profile =
                ContactProfile::new(Surface::Mesh(mesh), profile.pressure().clone(), mu)?;
            let (centered, _) = to_local_contact_frame(&mesh_profile, quad)?;
            let (norm_mesh, _) = normalize_pressure(&centered, quad)?;
            let approx = sample_wrench_set(&norm_mesh, &twists, quad)?
                .w_max
                .as_vector6();
            let error_rate =
                (0..6).map(|k| (approx[k] - truth[k]).abs() / truth[k]).sum::<f64>() / 6.0;
            Ok::<_, Error>((triangles, error_rate))
        })?;
        for (&target, (triangles, error_rate)) in resolutions.iter().zip(per_res) {
            rows.push(ConvergenceRow {
                surface: kind.id().to_string(),
                target_triangles: target,
                triangles,
                error_rate,
            });
        }
    }
    Ok(rows)
}

/// Held-out fitting error of both model families on one surface.
#[derive(Debug, Clone)]
pub struct FitStudyRow {
    pub surface: String,
    pub fit_samples: usize,
    pub eval_samples: usize,
    pub ellipsoid_error: f64,
    pub quartic_error: f64,
}

/// Fits both model families to `fit_count` boundary samples per
/// surface and scores them on a fresh evaluation set drawn with a
/// different seed. Evaluation wrenches are normalized by the fit
/// set's bounds, since that is the space the models live in.
pub fn fit_error_study(
    kinds: &[SurfaceKind],
    mu: f64,
    fit_count: usize,
    eval_count: usize,
    seed: u64,
    quad: &Quadrature,
    quartic: &QuarticFitOptions,
) -> Result<Vec<FitStudyRow>> {
    if kinds.is_empty() {
        return Err(Error::domain("fit study needs surfaces"));
    }
    try_par_map(kinds, |kind| {
        let profile = standard_profile(*kind, mu)?;
        let (centered, _) = to_local_contact_frame(&profile, quad)?;
        let (normalized, _) = normalize_pressure(&centered, quad)?;
        let fit_twists = sample_unit_twists(
            &normalized,
            &TwistSampling {
                count: fit_count,
                seed,
            },
            quad,
        )?;
        let fit_set = sample_wrench_set(&normalized, &fit_twists, quad)?;
        let (ellipsoid, _) = fit_ellipsoid(&fit_set.normalized)?;
        let (quartic_model, _) = fit_quartic(&fit_set.normalized, quartic)?;

        let eval_twists = sample_unit_twists(
            &normalized,
            &TwistSampling {
                count: eval_count,
                seed: seed.wrapping_add(1),
            },
            quad,
        )?;
        let eval_set = sample_wrench_set(&normalized, &eval_twists, quad)?;
        let w_max = fit_set.w_max.as_vector6();
        let eval: Vec<DVector<f64>> = eval_set
            .wrenches
            .iter()
            .map(|w| {
                let v = w.as_vector6();
                DVector::from_fn(6, |k, _| v[k] / w_max[k])
            })
            .collect();
        Ok::<_, Error>(FitStudyRow {
            surface: kind.id().to_string(),
            fit_samples: fit_set.wrenches.len(),
            eval_samples: eval.len(),
            ellipsoid_error: fitting_error(&LimitSurfaceModel::Ellipsoid(ellipsoid), &eval)?,
            quartic_error: fitting_error(&LimitSurfaceModel::Quartic(quartic_model), &eval)?,
        })
    })
}

/// Which physical knob a sensitivity sweep turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Multiply every contact's friction coefficient by the value.
    Friction,
    /// Set the power-law pressure exponent to the value (uniform
    /// fields are first converted to an equivalent power law).
    PressureExponent,
    /// Scale each parametric patch's second parameter extent about
    /// its midpoint by the value.
    ContactLength,
}

impl SweepParameter {
    #[must_use]
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::Friction => "friction",
            SweepParameter::PressureExponent => "pressure_exponent",
            SweepParameter::ContactLength => "contact_length",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Ok(match id {
            "friction" => SweepParameter::Friction,
            "pressure_exponent" => SweepParameter::PressureExponent,
            "contact_length" => SweepParameter::ContactLength,
            other => {
                return Err(Error::domain(format!("unknown sweep parameter {other:?}")));
            }
        })
    }
}

fn swept_profile(
    profile: &ContactProfile,
    parameter: SweepParameter,
    value: f64,
) -> Result<ContactProfile> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::domain("sweep values must be positive and finite"));
    }
    match parameter {
        SweepParameter::Friction => ContactProfile::new(
            profile.surface().clone(),
            profile.pressure().clone(),
            profile.mu() * value,
        ),
        SweepParameter::PressureExponent => {
            let pressure = match profile.pressure() {
                PressureField::PowerLaw {
                    p0,
                    r_max,
                    mode,
                    center,
                    ..
                } => PressureField::PowerLaw {
                    p0: *p0,
                    k: value,
                    r_max: *r_max,
                    mode: *mode,
                    center: *center,
                },
                PressureField::Uniform { value: p0 } => {
                    let (lo, hi) = profile.surface().bounds();
                    let center = Point3::from((lo.coords + hi.coords) * 0.5);
                    PressureField::PowerLaw {
                        p0: *p0,
                        k: value,
                        // Strictly beyond any point of the patch, so the
                        // field stays positive everywhere on it.
                        r_max: profile.longest_bound_side(),
                        mode: RadialMode::Line,
                        center,
                    }
                }
                PressureField::PerElement { .. } => {
                    return Err(Error::domain(
                        "pressure-exponent sweeps need an analytic pressure field",
                    ));
                }
            };
            ContactProfile::new(profile.surface().clone(), pressure, profile.mu())
        }
        SweepParameter::ContactLength => {
            let Surface::Parametric(s) = profile.surface() else {
                return Err(Error::domain(
                    "contact-length sweeps need parametric patches",
                ));
            };
            let [[u0, u1], [v0, v1]] = s.domain();
            let mid = 0.5 * (v0 + v1);
            let half = 0.5 * (v1 - v0) * value;
            let stretched = s.clone().with_domain([[u0, u1], [mid - half, mid + half]])?;
            ContactProfile::new(
                Surface::Parametric(stretched),
                profile.pressure().clone(),
                profile.mu(),
            )
        }
    }
}

/// Applies one sweep value to every inline contact of a grasp.
pub fn swept_grasp(grasp: &GraspSpec, parameter: SweepParameter, value: f64) -> Result<GraspSpec> {
    let mut out = grasp.clone();
    for contact in &mut out.contacts {
        match &contact.profile {
            ProfileRef::Inline(p) => {
                contact.profile = ProfileRef::Inline(swept_profile(p, parameter, value)?);
            }
            ProfileRef::Key(_) => {
                return Err(Error::domain(
                    "sensitivity sweeps need inline profiles, not cache keys",
                ));
            }
        }
    }
    Ok(out)
}

/// Positive-prediction count of a grasp batch at one sweep value.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub parameter: SweepParameter,
    pub value: f64,
    pub positives: usize,
    pub total: usize,
}

/// Re-predicts the whole batch at each sweep value and counts positive
/// outcomes. The counts, not the margins, carry the trend.
pub fn sensitivity_sweep(
    grasps: &[GraspSpec],
    parameter: SweepParameter,
    values: &[f64],
    cache: Option<&ConstraintCache>,
    options: &PipelineOptions,
) -> Result<Vec<SweepPoint>> {
    if grasps.is_empty() {
        return Err(Error::domain("sensitivity sweep needs grasps"));
    }
    if values.is_empty() {
        return Err(Error::domain("sensitivity sweep needs values"));
    }
    let mut out = Vec::with_capacity(values.len());
    for &value in values {
        let outcomes = try_par_map(grasps, |g| {
            let swept = swept_grasp(g, parameter, value)?;
            Ok::<_, Error>(predict_grasp(&swept, cache, options)?.result.y)
        })?;
        out.push(SweepPoint {
            parameter,
            value,
            positives: outcomes.iter().filter(|y| **y).count(),
            total: grasps.len(),
        });
    }
    Ok(out)
}

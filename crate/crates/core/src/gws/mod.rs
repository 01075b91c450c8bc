//! Grasp wrench space: object-frame contact constraints, their
//! Minkowski-sum hull, and wrench-resistance prediction.
//!
//! The default prediction path answers "is the opposed disturbance
//! inside the grasp wrench space" with a small linear program, which
//! needs no explicit hull. Facet mode builds the 6D hull lazily and
//! applies the strict halfspace test; on degenerate inputs it falls
//! back to the LP.

mod hull;
mod lp;

pub use hull::Facet;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::exec::try_par_map;
use crate::fit::{
    fit_ellipsoid, fit_quartic, LimitSurfaceModel, ModelKind, QuarticFitOptions,
};
use crate::geometry::{normalize_pressure, to_local_contact_frame};
use crate::io::{canonical_key, GraspSpec, ProfileRef};
use crate::kinematics::{sample_unit_twists, TwistSampling};
use crate::linearize::{
    denormalize_constraints, linearize_ls, sample_hypercube_surface, CachedContact,
    ConstraintCache, ConstraintSet,
};
use crate::quad::Quadrature;
use crate::wrench::{normal_wrench, sample_wrench_set, Wrench6};

use hull::HullOutcome;

/// How a contact's unit-force constraints scale to physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForceScale {
    /// Scale by the pressure integral of the contact's own profile.
    Integral,
    /// Scale so the normal-force component along the contact frame's
    /// x-axis matches a sensor reading.
    Sensor { f_s: f64 },
}

/// Pose of a local contact frame in the object frame plus the force
/// scaling rule for that contact.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPlacement {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    force: ForceScale,
}

impl ContactPlacement {
    /// Validates the rotation (orthonormal, right-handed within 1e-10)
    /// and the scaling parameters.
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        force: ForceScale,
    ) -> Result<Self> {
        let gram = rotation.transpose() * rotation;
        if (gram - Matrix3::identity()).amax() > 1e-10 {
            return Err(Error::domain("contact rotation is not orthonormal"));
        }
        if (rotation.determinant() - 1.0).abs() > 1e-10 {
            return Err(Error::domain(
                "contact rotation must be proper (determinant +1)",
            ));
        }
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("contact translation must be finite"));
        }
        if let ForceScale::Sensor { f_s } = force {
            if !(f_s > 0.0) || !f_s.is_finite() {
                return Err(Error::domain("sensor force must be positive and finite"));
            }
        }
        Ok(Self {
            rotation,
            translation,
            force,
        })
    }

    #[must_use]
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    #[must_use]
    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    #[must_use]
    pub fn force(&self) -> ForceScale {
        self.force
    }
}

/// Maps a contact's denormalized constraints plus its unit-force normal
/// wrench into the object frame and scales them to physical units:
/// force `f -> R f`, torque `tau -> t x (R f) + R tau`, all times the
/// resolved force scale.
///
/// `total_force` is the pressure integral of the actual profile; sensor
/// mode replaces it with `f_s / |normal-force x-component|`.
pub fn contact_constraints(
    set: &ConstraintSet,
    normal: &Wrench6,
    placement: &ContactPlacement,
    total_force: f64,
) -> Result<Vec<Vector6<f64>>> {
    if set.dim() != 6 {
        return Err(Error::dimension("contact constraints must be 6-vectors"));
    }
    if set.is_normalized() {
        return Err(Error::domain(
            "contact constraints must be denormalized before frame transfer",
        ));
    }
    let scale = match placement.force {
        ForceScale::Integral => {
            if !(total_force > 0.0) || !total_force.is_finite() {
                return Err(Error::domain("total pressure force must be positive"));
            }
            total_force
        }
        ForceScale::Sensor { f_s } => {
            let axis = normal.force.x.abs();
            if axis < 1e-12 {
                return Err(Error::degenerate(
                    "sensor scaling needs a normal force along the contact x-axis",
                ));
            }
            f_s / axis
        }
    };
    let r = &placement.rotation;
    let t = &placement.translation;
    let w = normal.as_vector6();
    let out = set
        .vertices()
        .iter()
        .map(|s| {
            let f = Vector3::new(s[0] + w[0], s[1] + w[1], s[2] + w[2]);
            let tau = Vector3::new(s[3] + w[3], s[4] + w[4], s[5] + w[5]);
            let f_obj = r * f;
            let tau_obj = t.cross(&f_obj) + r * tau;
            Vector6::new(f_obj.x, f_obj.y, f_obj.z, tau_obj.x, tau_obj.y, tau_obj.z) * scale
        })
        .collect();
    Ok(out)
}

#[derive(Debug)]
enum HullState {
    Facets(Vec<Facet>),
    Degenerate(String),
}

/// Candidate-vertex budget for explicit hull construction; beyond it
/// facet mode defers to the LP.
const MINKOWSKI_CAP: u128 = 200_000;

/// The grasp wrench space: per-contact generator sets whose Minkowski
/// sum is hulled lazily when facets are requested.
#[derive(Debug)]
pub struct GraspWrenchSpace {
    contacts: Vec<Vec<Vector6<f64>>>,
    degenerate: bool,
    hull: OnceLock<HullState>,
}

/// Assembles the wrench space from per-contact object-frame constraint
/// vertices. Contacts whose generators span fewer than six dimensions
/// are accepted but flagged; facet-mode queries on them fall back to
/// the LP.
pub fn build_gws(contacts: Vec<Vec<Vector6<f64>>>) -> Result<GraspWrenchSpace> {
    if contacts.is_empty() {
        return Err(Error::domain("grasp needs at least one contact"));
    }
    let mut degenerate = false;
    for c in &contacts {
        if c.len() < 7 {
            return Err(Error::domain(format!(
                "a contact needs at least 7 constraint vertices, got {}",
                c.len()
            )));
        }
        if c.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::domain("constraint vertices must be finite"));
        }
        // Affine rank of the generator cloud.
        let mean = c.iter().sum::<Vector6<f64>>() / c.len() as f64;
        let m = DMatrix::from_fn(6, c.len(), |i, j| c[j][i] - mean[i]);
        let sv = m.singular_values();
        if !(sv[0] > 0.0) || sv[5] < 1e-9 * sv[0] {
            degenerate = true;
        }
    }
    Ok(GraspWrenchSpace {
        contacts,
        degenerate,
        hull: OnceLock::new(),
    })
}

impl GraspWrenchSpace {
    /// Object-frame generator vertices, one set per contact.
    #[must_use]
    pub fn contacts(&self) -> &[Vec<Vector6<f64>>] {
        &self.contacts
    }

    fn minkowski_count(&self) -> u128 {
        self.contacts
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128))
    }

    /// All Minkowski-sum candidate vertices (every cross-contact sum).
    #[must_use]
    pub fn minkowski_vertices(&self) -> Vec<Vector6<f64>> {
        let total = self.minkowski_count() as usize;
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.contacts.len()];
        loop {
            let mut v = Vector6::zeros();
            for (n, &i) in idx.iter().enumerate() {
                v += self.contacts[n][i];
            }
            out.push(v);
            let mut carry = idx.len();
            for n in (0..idx.len()).rev() {
                idx[n] += 1;
                if idx[n] < self.contacts[n].len() {
                    carry = n;
                    break;
                }
                idx[n] = 0;
            }
            if carry == idx.len() {
                return out;
            }
        }
    }

    fn build_hull(&self) -> HullState {
        if self.degenerate {
            let msg = "contact generators span fewer than six dimensions";
            log::warn!("{msg}; facet queries fall back to the LP");
            return HullState::Degenerate(msg.into());
        }
        let count = self.minkowski_count();
        if count > MINKOWSKI_CAP {
            let msg = format!("{count} Minkowski vertices exceed the explicit-hull budget");
            log::warn!("{msg}; facet queries fall back to the LP");
            return HullState::Degenerate(msg);
        }
        match hull::convex_hull_6d(&self.minkowski_vertices(), 0x6D15) {
            HullOutcome::Facets(f) => HullState::Facets(f),
            HullOutcome::Degenerate(msg) => {
                log::warn!("explicit hull failed ({msg}); facet queries fall back to the LP");
                HullState::Degenerate(msg)
            }
        }
    }

    /// Facets of the explicit hull, built on first request. `None`
    /// when the space is degenerate or over the enumeration budget.
    #[must_use]
    pub fn facets(&self) -> Option<&[Facet]> {
        match self.hull.get_or_init(|| self.build_hull()) {
            HullState::Facets(f) => Some(f),
            HullState::Degenerate(_) => None,
        }
    }

    /// Why the explicit hull is unavailable, if facets were requested
    /// and construction was refused or failed.
    #[must_use]
    pub fn hull_failure(&self) -> Option<&str> {
        match self.hull.get()? {
            HullState::Facets(_) => None,
            HullState::Degenerate(msg) => Some(msg),
        }
    }
}

/// Which containment test answers a prediction query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictionMode {
    /// Feasibility LP over the generator sets (no explicit hull).
    #[default]
    Lp,
    /// Strict halfspace test against the explicit hull facets.
    Facet,
}

impl PredictionMode {
    #[must_use]
    pub fn as_str(&self) -> &'static str {
        match self {
            PredictionMode::Lp => "lp",
            PredictionMode::Facet => "facet",
        }
    }
}

/// Outcome of a resistance query: `y` is success, `margin` a
/// distance-to-boundary proxy (positive inside, zero on the boundary,
/// negative or -1 outside), `mode` the test that actually ran.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionResult {
    pub y: bool,
    pub margin: f64,
    pub mode: PredictionMode,
}

/// LP margin: smallest uniform scale `g` of the wrench space that still
/// reaches the opposed disturbance; margin is `1 - g`. `None` when the
/// disturbance lies outside the cone of the generators entirely.
fn lp_margin(contacts: &[Vec<Vector6<f64>>], w_ext: &Vector6<f64>) -> Result<Option<f64>> {
    let k: usize = contacts.iter().map(Vec::len).sum();
    let n_rows = 6 + contacts.len();
    let mut a = DMatrix::zeros(n_rows, k + 1);
    let mut col = 0;
    for (n, c) in contacts.iter().enumerate() {
        for v in c {
            for r in 0..6 {
                a[(r, col)] = v[r];
            }
            a[(6 + n, col)] = 1.0;
            col += 1;
        }
    }
    for n in 0..contacts.len() {
        a[(6 + n, k)] = -1.0;
    }
    let mut b = DVector::zeros(n_rows);
    for r in 0..6 {
        b[r] = -w_ext[r];
    }
    let mut cost = DVector::zeros(k + 1);
    cost[k] = 1.0;
    match lp::solve_equality_lp(&a, &b, &cost)? {
        // The last variable is the shrink factor itself.
        lp::LpOutcome::Optimal { x, .. } => Ok(Some(1.0 - x[k])),
        lp::LpOutcome::Infeasible => Ok(None),
    }
}

/// Convexity membership: is `point` a convex combination of
/// `generators`? Used to compare wrench spaces vertex by vertex.
pub fn convex_membership(generators: &[Vector6<f64>], point: &Vector6<f64>) -> Result<bool> {
    if generators.is_empty() {
        return Err(Error::domain("membership query needs generators"));
    }
    let mut a = DMatrix::zeros(7, generators.len());
    for (j, g) in generators.iter().enumerate() {
        for r in 0..6 {
            a[(r, j)] = g[r];
        }
        a[(6, j)] = 1.0;
    }
    let mut b = DVector::zeros(7);
    for r in 0..6 {
        b[r] = point[r];
    }
    b[6] = 1.0;
    let cost = DVector::zeros(generators.len());
    Ok(matches!(
        lp::solve_equality_lp(&a, &b, &cost)?,
        lp::LpOutcome::Optimal { .. }
    ))
}

/// Predicts with the default LP containment test.
pub fn predict(gws: &GraspWrenchSpace, w_ext: &Wrench6) -> Result<PredictionResult> {
    predict_with(gws, w_ext, PredictionMode::Lp)
}

/// Predicts whether the grasp resists `w_ext`. Success requires strict
/// interior containment of the opposed wrench: boundary queries fail.
pub fn predict_with(
    gws: &GraspWrenchSpace,
    w_ext: &Wrench6,
    mode: PredictionMode,
) -> Result<PredictionResult> {
    let w = w_ext.as_vector6();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("external wrench must be finite"));
    }
    if mode == PredictionMode::Facet {
        if let Some(facets) = gws.facets() {
            // Shrink-factor margin, comparable with the LP mode: the
            // largest halfspace ratio of the opposed wrench. Offsets
            // are positive because the space strictly contains the
            // origin whenever facets exist.
            if facets.iter().all(|f| f.offset > 0.0) {
                let g = facets
                    .iter()
                    .map(|f| -f.normal.dot(&w) / f.offset)
                    .fold(f64::NEG_INFINITY, f64::max);
                return Ok(PredictionResult {
                    y: g < 1.0,
                    margin: 1.0 - g,
                    mode: PredictionMode::Facet,
                });
            }
            log::warn!("hull does not contain the origin; falling back to the LP");
        }
    }
    let margin = lp_margin(gws.contacts(), &w)?.unwrap_or(-1.0);
    Ok(PredictionResult {
        y: margin > 0.0,
        margin,
        mode: PredictionMode::Lp,
    })
}

/// Pipeline knobs for [`predict_grasp`].
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub sampling: TwistSampling,
    pub quadrature: Quadrature,
    pub mode: PredictionMode,
    pub quartic: QuarticFitOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            sampling: TwistSampling {
                count: 600,
                seed: 0,
            },
            quadrature: Quadrature::new(Quadrature::DEFAULT_ORDER)
                .expect("default quadrature order is valid"),
            mode: PredictionMode::Lp,
            quartic: QuarticFitOptions::default(),
        }
    }
}

/// Per-contact pipeline report.
#[derive(Debug, Clone)]
pub struct ContactDiagnostics {
    /// Canonical content key of the contact's constraint record.
    pub key: String,
    /// True when the constraints came from the cache.
    pub cache_hit: bool,
    /// Pressure integral of the contact's profile (cached producer's
    /// value for key-only contacts).
    pub total_force: f64,
    /// Mean fitting error of a freshly fitted model; absent on hits.
    pub fit_error: Option<f64>,
    /// Number of object-frame constraint vertices contributed.
    pub constraint_count: usize,
}

/// A prediction plus its per-contact diagnostics.
#[derive(Debug, Clone)]
pub struct PredictionOutput {
    pub result: PredictionResult,
    pub per_contact: Vec<ContactDiagnostics>,
}

struct ResolvedContact {
    record: CachedContact,
    total_force: f64,
    key: String,
    cache_hit: bool,
    fit_error: Option<f64>,
}

fn resolve_contact(
    profile: &ProfileRef,
    model: ModelKind,
    directions: usize,
    cache: Option<&ConstraintCache>,
    options: &PipelineOptions,
) -> Result<ResolvedContact> {
    let quad = &options.quadrature;
    match profile {
        ProfileRef::Key(key) => {
            let Some(cache) = cache else {
                return Err(Error::domain(
                    "grasp references a cache key but no cache is configured",
                ));
            };
            let Some(record) = cache.get(key) else {
                return Err(Error::domain(format!(
                    "cache has no constraint record for key {key}"
                )));
            };
            let total_force = record.total_force;
            Ok(ResolvedContact {
                record,
                total_force,
                key: key.clone(),
                cache_hit: true,
                fit_error: None,
            })
        }
        ProfileRef::Inline(profile) => {
            let key = canonical_key(profile, model, directions, &options.sampling, quad)?;
            let (centered, _) = to_local_contact_frame(profile, quad)?;
            let (normalized, total_force) = normalize_pressure(&centered, quad)?;
            if let Some(record) = cache.and_then(|c| c.get(&key)) {
                return Ok(ResolvedContact {
                    record,
                    total_force,
                    key,
                    cache_hit: true,
                    fit_error: None,
                });
            }
            let twists = sample_unit_twists(&normalized, &options.sampling, quad)?;
            let samples = sample_wrench_set(&normalized, &twists, quad)?;
            let (fitted, fit_error) = match model {
                ModelKind::Ellipsoid => {
                    let (m, report) = fit_ellipsoid(&samples.normalized)?;
                    (LimitSurfaceModel::Ellipsoid(m), report.mean_abs_error)
                }
                ModelKind::Quartic => {
                    let (m, report) = fit_quartic(&samples.normalized, &options.quartic)?;
                    (LimitSurfaceModel::Quartic(m), report.mean_abs_error)
                }
            };
            let dirs = sample_hypercube_surface(6, directions)?;
            let lin = linearize_ls(&fitted, &dirs)?;
            let w_max = samples.w_max.as_vector6();
            let denorm =
                denormalize_constraints(&lin, &DVector::from_column_slice(w_max.as_slice()))?;
            let normal = normal_wrench(&normalized, quad)?;
            let record = CachedContact {
                constraints: denorm,
                normal_wrench: normal,
                total_force,
            };
            if let Some(cache) = cache {
                if let Err(e) = cache.put(&key, &record) {
                    log::warn!("failed to store cache entry {key}: {e}");
                }
            }
            Ok(ResolvedContact {
                record,
                total_force,
                key,
                cache_hit: false,
                fit_error: Some(fit_error),
            })
        }
    }
}

/// Runs the full prediction pipeline for a grasp: per contact, center
/// the profile at its pressure center, normalize pressure, fit (or
/// fetch) the limit surface, linearize, denormalize, add the normal
/// wrench, and transfer into the object frame; then assemble the
/// wrench space and test the disturbance.
///
/// Contacts run in parallel; results do not depend on scheduling.
pub fn predict_grasp(
    grasp: &GraspSpec,
    cache: Option<&ConstraintCache>,
    options: &PipelineOptions,
) -> Result<PredictionOutput> {
    if grasp.contacts.is_empty() {
        return Err(Error::domain("grasp needs at least one contact"));
    }
    let resolved = try_par_map(&grasp.contacts, |c| {
        let r = resolve_contact(&c.profile, grasp.model, grasp.directions, cache, options)?;
        let placement = ContactPlacement::new(c.rotation, c.translation, c.force)?;
        let constraints = contact_constraints(
            &r.record.constraints,
            &r.record.normal_wrench,
            &placement,
            r.total_force,
        )?;
        let diag = ContactDiagnostics {
            key: r.key,
            cache_hit: r.cache_hit,
            total_force: r.total_force,
            fit_error: r.fit_error,
            constraint_count: constraints.len(),
        };
        Ok::<_, Error>((constraints, diag))
    })?;
    let mut contacts = Vec::with_capacity(resolved.len());
    let mut per_contact = Vec::with_capacity(resolved.len());
    for (c, d) in resolved {
        contacts.push(c);
        per_contact.push(d);
    }
    let gws = build_gws(contacts)?;
    let result = predict_with(&gws, &Wrench6::from_vector6(&grasp.w_ext), options.mode)?;
    Ok(PredictionOutput {
        result,
        per_contact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::reference_cylinder_patch;
    use crate::io::GraspContactSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn cross_polytope(radius: f64) -> Vec<Vector6<f64>> {
        let mut out = Vec::new();
        for k in 0..6 {
            let mut v = Vector6::zeros();
            v[k] = radius;
            out.push(v);
            out.push(-v);
        }
        out
    }

    fn e(k: usize, s: f64) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v[k] = s;
        v
    }

    #[test]
    fn placement_rejects_improper_rotations() {
        let skew = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(ContactPlacement::new(skew, Vector3::zeros(), ForceScale::Integral).is_err());
        let mirror = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(ContactPlacement::new(mirror, Vector3::zeros(), ForceScale::Integral).is_err());
        assert!(ContactPlacement::new(
            Matrix3::identity(),
            Vector3::zeros(),
            ForceScale::Sensor { f_s: -1.0 }
        )
        .is_err());
    }

    fn denorm_set(vertices: Vec<DVector<f64>>) -> ConstraintSet {
        let n = vertices[0].len();
        ConstraintSet::from_parts(n, vertices, false, Some(DVector::repeat(n, 1.0))).unwrap()
    }

    #[test]
    fn constraints_transform_like_wrenches() {
        // 12 axis vertices, one of which lands on (1,0,0,0,0,0) after
        // the normal wrench cancels.
        let vertices: Vec<DVector<f64>> = (0..6)
            .flat_map(|k| {
                let mut plus = DVector::zeros(6);
                plus[k] = 1.0;
                let minus = -plus.clone();
                [plus, minus]
            })
            .collect();
        let set = denorm_set(vertices);
        let zero_normal = Wrench6::zero();

        // Identity placement, unit force: vertices pass through.
        let id = ContactPlacement::new(Matrix3::identity(), Vector3::zeros(), ForceScale::Integral)
            .unwrap();
        let c = contact_constraints(&set, &zero_normal, &id, 1.0).unwrap();
        assert_eq!(c[0], e(0, 1.0));
        assert_eq!(c[3], e(1, -1.0));

        // A lever arm along z turns f_x into tau_y.
        let lever = ContactPlacement::new(
            Matrix3::identity(),
            Vector3::new(0.0, 0.0, 1.0),
            ForceScale::Integral,
        )
        .unwrap();
        let c = contact_constraints(&set, &zero_normal, &lever, 1.0).unwrap();
        let mut expect = e(0, 1.0);
        expect[4] = 1.0;
        assert_relative_eq!(c[0], expect, epsilon = 1e-15);

        // Doubling the force doubles every constraint exactly.
        let twice = contact_constraints(&set, &zero_normal, &lever, 2.0).unwrap();
        for (a, b) in c.iter().zip(&twice) {
            assert_eq!(*b, a * 2.0);
        }

        // Normalized sets are refused.
        let normalized =
            ConstraintSet::from_parts(6, set.vertices().to_vec(), true, None).unwrap();
        assert!(contact_constraints(&normalized, &zero_normal, &id, 1.0).is_err());
    }

    #[test]
    fn sensor_scaling_uses_the_normal_axis() {
        let set = denorm_set(
            (0..6)
                .flat_map(|k| {
                    let mut plus = DVector::zeros(6);
                    plus[k] = 0.5;
                    let minus = -plus.clone();
                    [plus, minus]
                })
                .collect(),
        );
        let normal = Wrench6 {
            force: Vector3::new(-0.5, 0.0, 0.0),
            torque: Vector3::zeros(),
        };
        let sensed = ContactPlacement::new(
            Matrix3::identity(),
            Vector3::zeros(),
            ForceScale::Sensor { f_s: 2.5 },
        )
        .unwrap();
        // lambda = 2.5 / 0.5 = 5; first vertex (0.5,0,..) + (-0.5,0,..) = 0.
        let c = contact_constraints(&set, &normal, &sensed, 123.0).unwrap();
        assert_relative_eq!(c[0].norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(c[1], e(0, -5.0), epsilon = 1e-12);

        // No normal force along x: sensor mode cannot scale.
        let flat = Wrench6 {
            force: Vector3::new(0.0, -0.5, 0.0),
            torque: Vector3::zeros(),
        };
        assert!(contact_constraints(&set, &flat, &sensed, 1.0).is_err());
    }

    #[test]
    fn cross_polytope_queries_in_both_modes() {
        let gws = build_gws(vec![cross_polytope(1.0)]).unwrap();
        for mode in [PredictionMode::Lp, PredictionMode::Facet] {
            let inside = predict_with(&gws, &Wrench6::from_vector6(&e(0, 0.5)), mode).unwrap();
            assert!(inside.y);
            assert!(inside.margin > 0.0);
            assert_eq!(inside.mode, mode);

            let outside = predict_with(&gws, &Wrench6::from_vector6(&e(0, 1.5)), mode).unwrap();
            assert!(!outside.y);
            assert!(outside.margin < 0.0);
        }
        // Exact boundary: strict test fails it.
        let boundary = predict(&gws, &Wrench6::from_vector6(&e(0, 1.0))).unwrap();
        assert!(!boundary.y);
        assert!(boundary.margin.abs() < 1e-9);
        // LP margin is the uniform shrink factor.
        let lp = predict(&gws, &Wrench6::from_vector6(&e(0, 0.5))).unwrap();
        assert_relative_eq!(lp.margin, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn minkowski_sum_reaches_combined_extremes() {
        let gws = build_gws(vec![cross_polytope(1.0), cross_polytope(1.0)]).unwrap();
        for mode in [PredictionMode::Lp, PredictionMode::Facet] {
            let inside = predict_with(&gws, &Wrench6::from_vector6(&e(0, 1.98)), mode).unwrap();
            assert!(inside.y, "2e1 is an extreme of the sum ({mode:?})");
            let outside = predict_with(&gws, &Wrench6::from_vector6(&e(0, 2.02)), mode).unwrap();
            assert!(!outside.y, "beyond the summed extreme ({mode:?})");
        }
    }

    #[test]
    fn degenerate_generators_fall_back_to_lp() {
        // Ten vertices spanning only five dimensions.
        let mut flat = Vec::new();
        for k in 0..5 {
            flat.push(e(k, 1.0));
            flat.push(e(k, -1.0));
        }
        let gws = build_gws(vec![flat]).unwrap();
        assert!(gws.facets().is_none());
        let r = predict_with(&gws, &Wrench6::from_vector6(&e(0, 0.5)), PredictionMode::Facet)
            .unwrap();
        assert_eq!(r.mode, PredictionMode::Lp);
        assert!(r.y);
        // A component outside the span is unresistable.
        let r = predict_with(&gws, &Wrench6::from_vector6(&e(5, 0.5)), PredictionMode::Facet)
            .unwrap();
        assert!(!r.y);

        assert!(build_gws(vec![cross_polytope(1.0), Vec::new()]).is_err());
    }

    #[test]
    fn membership_separates_inside_from_outside() {
        let gens = cross_polytope(1.0);
        assert!(convex_membership(&gens, &e(0, 0.9)).unwrap());
        assert!(convex_membership(&gens, &Vector6::zeros()).unwrap());
        assert!(!convex_membership(&gens, &e(0, 1.1)).unwrap());
        let mut mixed = e(0, 0.5);
        mixed[1] = 0.6;
        assert!(!convex_membership(&gens, &mixed).unwrap());
    }

    fn two_jaw_grasp(mu: f64, w_ext: Vector6<f64>) -> GraspSpec {
        let patch = reference_cylinder_patch(1000.0, mu).unwrap();
        let jaw_b = Matrix3::new(-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0);
        GraspSpec {
            contacts: vec![
                GraspContactSpec {
                    profile: ProfileRef::Inline(patch.clone()),
                    rotation: Matrix3::identity(),
                    translation: Vector3::new(0.0, 0.04, 0.0),
                    force: ForceScale::Integral,
                },
                GraspContactSpec {
                    profile: ProfileRef::Inline(patch),
                    rotation: jaw_b,
                    translation: Vector3::new(0.0, -0.04, 0.0),
                    force: ForceScale::Integral,
                },
            ],
            w_ext,
            model: ModelKind::Ellipsoid,
            directions: 76,
        }
    }

    fn quick_options() -> PipelineOptions {
        PipelineOptions {
            sampling: TwistSampling { count: 80, seed: 9 },
            quadrature: Quadrature::new(16).unwrap(),
            ..PipelineOptions::default()
        }
    }

    #[test]
    fn antipodal_grasp_resists_small_gravity() {
        let spec = two_jaw_grasp(0.5, e(2, -0.05));
        let out = predict_grasp(&spec, None, &quick_options()).unwrap();
        assert!(out.result.y);
        assert!(out.result.margin > 0.0);
        assert_eq!(out.per_contact.len(), 2);
        assert!(out.per_contact.iter().all(|d| !d.cache_hit));
        assert!(out.per_contact.iter().all(|d| d.fit_error.is_some()));
        // Both jaws share a profile and therefore a content key.
        assert_eq!(out.per_contact[0].key, out.per_contact[1].key);
        assert_relative_eq!(out.per_contact[0].total_force, 0.628, epsilon = 1e-2);
    }

    #[test]
    fn vanishing_friction_cannot_hold_tangential_loads() {
        let spec = two_jaw_grasp(1e-6, e(2, -0.05));
        let out = predict_grasp(&spec, None, &quick_options()).unwrap();
        assert!(!out.result.y);
    }

    #[test]
    fn warm_cache_reproduces_the_prediction() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ConstraintCache::new(dir.path()).unwrap();
        let spec = two_jaw_grasp(0.5, e(2, -0.05));
        let cold = predict_grasp(&spec, Some(&cache), &quick_options()).unwrap();
        assert!(cold.per_contact.iter().any(|d| !d.cache_hit));
        let warm = predict_grasp(&spec, Some(&cache), &quick_options()).unwrap();
        assert!(warm.per_contact.iter().all(|d| d.cache_hit));
        assert_eq!(warm.result.y, cold.result.y);
        assert_eq!(warm.result.margin, cold.result.margin);

        // A cache-key-only grasp reuses the stored record outright.
        let mut keyed = two_jaw_grasp(0.5, e(2, -0.05));
        for c in &mut keyed.contacts {
            c.profile = ProfileRef::Key(cold.per_contact[0].key.clone());
        }
        let reused = predict_grasp(&keyed, Some(&cache), &quick_options()).unwrap();
        assert_eq!(reused.result.y, cold.result.y);
        assert_relative_eq!(reused.result.margin, cold.result.margin, epsilon = 1e-12);
        // Without a cache the key cannot resolve.
        assert!(predict_grasp(&keyed, None, &quick_options()).is_err());
    }

    #[test]
    fn reference_point_shift_preserves_the_outcome() {
        let w_ext = {
            let mut w = e(2, -0.05);
            w[0] = 0.02;
            w
        };
        let base = two_jaw_grasp(0.5, w_ext);
        let out = predict_grasp(&base, None, &quick_options()).unwrap();

        let delta = Vector3::new(0.013, -0.021, 0.007);
        let mut shifted = base.clone();
        for c in &mut shifted.contacts {
            c.translation += delta;
        }
        let f_ext = Vector3::new(w_ext[0], w_ext[1], w_ext[2]);
        let tau_shift = delta.cross(&f_ext);
        for k in 0..3 {
            shifted.w_ext[3 + k] += tau_shift[k];
        }
        let moved = predict_grasp(&shifted, None, &quick_options()).unwrap();
        assert_eq!(moved.result.y, out.result.y);
        assert_relative_eq!(moved.result.margin, out.result.margin, epsilon = 1e-6);
    }

    #[test]
    fn rotated_placement_carries_the_frictional_span() {
        // One contact rotated a quarter turn about z: x-force capacity
        // moves to y.
        let patch = reference_cylinder_patch(1000.0, 0.5).unwrap();
        let rot = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let spec = GraspSpec {
            contacts: vec![GraspContactSpec {
                profile: ProfileRef::Inline(patch),
                rotation: rot,
                translation: Vector3::zeros(),
                force: ForceScale::Integral,
            }],
            w_ext: Vector6::zeros(),
            model: ModelKind::Ellipsoid,
            directions: 76,
        };
        let out = predict_grasp(&spec, None, &quick_options()).unwrap();
        // Zero disturbance is always resisted.
        assert!(out.result.y);
        assert_relative_eq!(out.result.margin, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn facet_and_lp_modes_agree_off_the_boundary() {
        let quarter = PI / 2.0;
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), quarter)
            .into_inner();
        let mut gens_a = cross_polytope(1.0);
        gens_a.push(e(0, 0.3) + e(3, 0.4));
        let mut gens_b = cross_polytope(0.7);
        for g in &mut gens_b {
            let f = rot * Vector3::new(g[0], g[1], g[2]);
            let t = rot * Vector3::new(g[3], g[4], g[5]);
            *g = Vector6::new(f.x, f.y, f.z, t.x, t.y, t.z);
        }
        let gws = build_gws(vec![gens_a, gens_b]).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(21);
        for _ in 0..40 {
            let dir = Vector6::from_fn(|_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0));
            let w = Wrench6::from_vector6(&(dir * rand::Rng::gen_range(&mut rng, 0.1..2.5)));
            let lp = predict_with(&gws, &w, PredictionMode::Lp).unwrap();
            let facet = predict_with(&gws, &w, PredictionMode::Facet).unwrap();
            assert_eq!(facet.mode, PredictionMode::Facet);
            if lp.margin.abs() > 1e-6 && facet.margin.abs() > 1e-6 {
                assert_eq!(lp.y, facet.y, "disagreement at {w:?}");
            }
        }
    }
}

//! Frictional and normal contact wrenches.
//!
//! Under a sliding twist, friction at each patch point opposes the
//! tangential velocity; integrating force and torque (about the pressure
//! center) over the patch gives a 6D wrench
//!
//! ```text
//!     w = [ -mu * integral( P v_r dS );  -mu * integral( P (r x v_r) dS ) ]
//! ```
//!
//! with `v_r` the unit slip direction and `r` the arm from the pressure
//! center. The pressure alone contributes the normal wrench
//! `[-integral(P n dS); -integral(P (r x n) dS)]`.

use nalgebra::{DVector, Point3, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::exec::try_par_map;
use crate::geometry::{pressure_center, ContactProfile};
use crate::kinematics::{tangential_direction, UnitTwist};
use crate::quad::Quadrature;

/// Force and torque packed as `[f; tau]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench6 {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench6 {
    #[must_use]
    pub fn zero() -> Self {
        Self {
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
        }
    }

    #[must_use]
    pub fn from_vector6(v: &Vector6<f64>) -> Self {
        Self {
            force: Vector3::new(v[0], v[1], v[2]),
            torque: Vector3::new(v[3], v[4], v[5]),
        }
    }

    #[must_use]
    pub fn as_vector6(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        )
    }
}

impl std::ops::Index<usize> for Wrench6 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        if i < 3 {
            &self.force[i]
        } else {
            &self.torque[i - 3]
        }
    }
}

/// Wrenches for a twist set together with per-dimension bounds and the
/// normalized samples they induce.
#[derive(Debug, Clone)]
pub struct WrenchSampleSet {
    /// Raw wrenches, one per input twist, torque about the pressure center.
    pub wrenches: Vec<Wrench6>,
    /// `w_i / w_max` componentwise; every entry in [-1, 1] with each
    /// dimension touching 1 in magnitude somewhere.
    pub normalized: Vec<DVector<f64>>,
    /// Per-dimension maxima of |w_i|.
    pub w_max: Wrench6,
}

/// Frictional wrench for one twist, torque taken about the patch's
/// pressure center. Patch points whose velocity is normal to the surface
/// (tangential part below 1e-12) transmit no friction and drop out.
pub fn frictional_wrench(
    profile: &ContactProfile,
    twist: &UnitTwist,
    quad: &Quadrature,
) -> Result<Wrench6> {
    let o = pressure_center(profile, quad)?;
    frictional_wrench_about(profile, twist, &o, quad)
}

pub(crate) fn frictional_wrench_about(
    profile: &ContactProfile,
    twist: &UnitTwist,
    o: &Point3<f64>,
    quad: &Quadrature,
) -> Result<Wrench6> {
    let mu = profile.mu();
    let vals = profile.integrate_weighted(quad, |p, n| {
        let v = twist.velocity_at(p);
        match tangential_direction(&v, n) {
            Ok(t) => {
                let r = p - o;
                let torque = r.cross(&t);
                [
                    -mu * t.x,
                    -mu * t.y,
                    -mu * t.z,
                    -mu * torque.x,
                    -mu * torque.y,
                    -mu * torque.z,
                ]
            }
            Err(_) => [0.0; 6],
        }
    })?;
    Ok(Wrench6 {
        force: Vector3::new(vals[0], vals[1], vals[2]),
        torque: Vector3::new(vals[3], vals[4], vals[5]),
    })
}

/// Wrench exerted by the pressure field itself (the pushing contact),
/// torque about the pressure center.
pub fn normal_wrench(profile: &ContactProfile, quad: &Quadrature) -> Result<Wrench6> {
    let o = pressure_center(profile, quad)?;
    normal_wrench_about(profile, &o, quad)
}

pub(crate) fn normal_wrench_about(
    profile: &ContactProfile,
    o: &Point3<f64>,
    quad: &Quadrature,
) -> Result<Wrench6> {
    let vals = profile.integrate_weighted(quad, |p, n| {
        let r = p - o;
        let torque = r.cross(n);
        [-n.x, -n.y, -n.z, -torque.x, -torque.y, -torque.z]
    })?;
    Ok(Wrench6 {
        force: Vector3::new(vals[0], vals[1], vals[2]),
        torque: Vector3::new(vals[3], vals[4], vals[5]),
    })
}

/// Per-dimension maxima of |w| over a sample set. Errors if any
/// dimension never becomes nonzero: such a set cannot be normalized.
pub fn wrench_bounds(wrenches: &[Wrench6]) -> Result<Wrench6> {
    if wrenches.is_empty() {
        return Err(Error::degenerate("empty wrench set"));
    }
    let mut bounds = Vector6::<f64>::zeros();
    for w in wrenches {
        let v = w.as_vector6();
        for k in 0..6 {
            bounds[k] = bounds[k].max(v[k].abs());
        }
    }
    if bounds.iter().any(|&b| b == 0.0) {
        return Err(Error::degenerate(
            "a wrench dimension is identically zero; sampling is degenerate",
        ));
    }
    Ok(Wrench6::from_vector6(&bounds))
}

/// Evaluates the frictional wrench for every twist (in parallel), then
/// normalizes per dimension. Twists must be expressed in the same frame
/// as the profile; torque is taken about the pressure center.
pub fn sample_wrench_set(
    profile: &ContactProfile,
    twists: &[UnitTwist],
    quad: &Quadrature,
) -> Result<WrenchSampleSet> {
    if twists.is_empty() {
        return Err(Error::domain("twist set is empty"));
    }
    let o = pressure_center(profile, quad)?;
    let wrenches = try_par_map(twists, |t| frictional_wrench_about(profile, t, &o, quad))?;
    let w_max = wrench_bounds(&wrenches)?;
    let bounds = w_max.as_vector6();
    let normalized = wrenches
        .iter()
        .map(|w| {
            let v = w.as_vector6();
            DVector::from_iterator(6, (0..6).map(|k| v[k] / bounds[k]))
        })
        .collect();
    Ok(WrenchSampleSet {
        wrenches,
        normalized,
        w_max,
    })
}

/// Keeps the two tangential force dimensions and the torque about
/// `axis`, zeroing the rest: the 3D nonplanar reduction of a 6D bound.
#[must_use]
pub fn reduce_bounds_to_3d(w_max: &Wrench6, axis: usize) -> Vector6<f64> {
    let v = w_max.as_vector6();
    let mut out = Vector6::zeros();
    for k in 0..3 {
        if k != axis {
            out[k] = v[k];
        }
    }
    out[3 + axis] = v[3 + axis];
    out
}

/// Projects normalized 6D samples onto the 3D nonplanar coordinates
/// (two in-plane forces in ascending axis order, then torque about
/// `axis`).
#[must_use]
pub fn reduce_samples_to_3d(samples: &[DVector<f64>], axis: usize) -> Vec<DVector<f64>> {
    let (i1, i2) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    samples
        .iter()
        .map(|s| DVector::from_vec(vec![s[i1], s[i2], s[3 + axis]]))
        .collect()
}

/// A planar rigid motion for the planar contact baseline: in-plane
/// coordinates are the two axes cyclically following the projection axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanarTwist {
    /// Unit translation along the in-plane angle `theta` (radians from
    /// the first in-plane axis).
    Translation { theta: f64 },
    /// Unit-speed rotation about the in-plane center of rotation.
    Rotation { cor: [f64; 2] },
}

/// Planar wrench `(f1, f2, tau)` of the classical flat-contact model:
/// the patch is projected along `axis`, pressure is uniform over the
/// shadow, and torque is taken about the shadow's centroid. In-plane
/// components are in cyclic order after `axis`.
pub fn planar_wrench_baseline(
    profile: &ContactProfile,
    axis: usize,
    twist: &PlanarTwist,
    quad: &Quadrature,
) -> Result<Vector3<f64>> {
    let mu = profile.mu();
    let [area, m1, m2] = profile.integrate_projected(quad, axis, |x, y| [1.0, x, y])?;
    if !(area > 1e-300) {
        return Err(Error::degenerate("projected contact area vanishes"));
    }
    let center = [m1 / area, m2 / area];
    let density = 1.0 / area;
    let vals = match twist {
        PlanarTwist::Translation { theta } => {
            let t = [theta.cos(), theta.sin()];
            let [f1, f2, tau] = profile.integrate_projected(quad, axis, |x, y| {
                let r = [x - center[0], y - center[1]];
                [
                    -mu * density * t[0],
                    -mu * density * t[1],
                    -mu * density * (r[0] * t[1] - r[1] * t[0]),
                ]
            })?;
            [f1, f2, tau]
        }
        PlanarTwist::Rotation { cor } => {
            let [f1, f2, tau] = profile.integrate_projected(quad, axis, |x, y| {
                let rel = [x - cor[0], y - cor[1]];
                let speed = rel[0].hypot(rel[1]);
                if speed < 1e-12 {
                    return [0.0; 3];
                }
                let v = [-rel[1] / speed, rel[0] / speed];
                let r = [x - center[0], y - center[1]];
                [
                    -mu * density * v[0],
                    -mu * density * v[1],
                    -mu * density * (r[0] * v[1] - r[1] * v[0]),
                ]
            })?;
            [f1, f2, tau]
        }
    };
    Ok(Vector3::new(vals[0], vals[1], vals[2]))
}

/// Per-dimension bounds of the planar baseline embedded in the 6D
/// layout: in-plane force capacity is `mu` in every direction, and the
/// torque capacity is attained spinning about the shadow centroid.
pub fn planar_wrench_bounds(
    profile: &ContactProfile,
    axis: usize,
    quad: &Quadrature,
) -> Result<Vector6<f64>> {
    let mu = profile.mu();
    let [area, m1, m2] = profile.integrate_projected(quad, axis, |x, y| [1.0, x, y])?;
    if !(area > 1e-300) {
        return Err(Error::degenerate("projected contact area vanishes"));
    }
    let center = [m1 / area, m2 / area];
    let [torque] = profile.integrate_projected(quad, axis, |x, y| {
        let r = [x - center[0], y - center[1]];
        [mu / area * r[0].hypot(r[1])]
    })?;
    let mut out = Vector6::zeros();
    for k in 0..3 {
        if k != axis {
            out[k] = mu;
        }
    }
    out[3 + axis] = torque;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        normalize_pressure, reference_cylinder_patch, to_local_contact_frame, ContactProfile,
        ParametricSurface, PressureField, Surface, SurfaceKind,
    };
    use crate::kinematics::{sample_unit_twists, TwistSampling};
    use approx::assert_relative_eq;

    fn quad() -> Quadrature {
        Quadrature::new(Quadrature::DEFAULT_ORDER).unwrap()
    }

    fn centered_reference() -> ContactProfile {
        let profile = reference_cylinder_patch(1000.0, 0.3).unwrap();
        to_local_contact_frame(&profile, &quad()).unwrap().0
    }

    #[test]
    fn reference_patch_normal_wrench() {
        // Quarter-arc around +y: the pressure pushes along -y with
        // magnitude 2 sqrt(2) * r * dv * P = 0.5657 N; symmetric torque
        // cancels.
        let w = normal_wrench(&centered_reference(), &quad()).unwrap();
        assert_relative_eq!(w.force.y, -0.56569, max_relative = 1e-4);
        assert!(w.force.x.abs() < 1e-10);
        assert!(w.force.z.abs() < 1e-10);
        assert!(w.torque.norm() < 1e-10);
    }

    #[test]
    fn reference_patch_spin_torque() {
        // Rotation about -y through the pressure center: only the
        // y-torque survives; its exact value is
        // 6 * integral sqrt(sin^2 u (v + 0.04)^2 + 4e-4 cos^2 u) du dv.
        let twist = UnitTwist::rotation_about(-Vector3::y(), Point3::origin(), 0.0).unwrap();
        let w = frictional_wrench(&centered_reference(), &twist, &quad()).unwrap();
        for k in [0usize, 1, 2, 3, 5] {
            assert!(w[k].abs() < 1e-8, "component {k} = {}", w[k]);
        }
        assert_relative_eq!(w.torque.y, 1.7693e-3, max_relative = 2e-4);
    }

    #[test]
    fn coulomb_bound_holds() {
        let profile = centered_reference();
        let (normalized, _) = normalize_pressure(&profile, &quad()).unwrap();
        let twists = sample_unit_twists(
            &normalized,
            &TwistSampling { count: 40, seed: 5 },
            &quad(),
        )
        .unwrap();
        for t in &twists {
            let w = frictional_wrench(&normalized, t, &quad()).unwrap();
            assert!(w.force.norm() <= normalized.mu() + 1e-9);
        }
    }

    #[test]
    fn reversal_antisymmetry_is_exact() {
        let profile = centered_reference();
        let twists = sample_unit_twists(
            &profile,
            &TwistSampling { count: 20, seed: 9 },
            &quad(),
        )
        .unwrap();
        for t in &twists {
            let w = frictional_wrench(&profile, t, &quad()).unwrap();
            let wr = frictional_wrench(&profile, &t.reversed(), &quad()).unwrap();
            assert_eq!(w.as_vector6(), -wr.as_vector6());
        }
    }

    #[test]
    fn doubling_mu_doubles_wrenches_exactly() {
        let profile = centered_reference();
        let doubled = profile.with_mu(0.6).unwrap();
        let twist = UnitTwist::rotation_about(
            Vector3::new(0.3, -1.0, 0.2),
            Point3::new(0.002, -0.001, 0.004),
            0.7,
        )
        .unwrap();
        let w = frictional_wrench(&profile, &twist, &quad()).unwrap();
        let w2 = frictional_wrench(&doubled, &twist, &quad()).unwrap();
        assert_eq!(w2.as_vector6(), 2.0 * w.as_vector6());
    }

    #[test]
    fn sample_set_normalization_touches_one() {
        let profile = centered_reference();
        let twists = sample_unit_twists(
            &profile,
            &TwistSampling { count: 60, seed: 2 },
            &quad(),
        )
        .unwrap();
        let set = sample_wrench_set(&profile, &twists, &quad()).unwrap();
        assert_eq!(set.normalized.len(), 60);
        let mut max_abs = [0.0f64; 6];
        for s in &set.normalized {
            for k in 0..6 {
                assert!(s[k].abs() <= 1.0 + 1e-12);
                max_abs[k] = max_abs[k].max(s[k].abs());
            }
        }
        for k in 0..6 {
            assert_relative_eq!(max_abs[k], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn flat_patch_cannot_normalize_all_dimensions() {
        // A flat square in the xy-plane: normal-direction friction and
        // in-plane torques vanish identically.
        let mesh = crate::geometry::TriangleMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let profile = ContactProfile::new(
            Surface::Mesh(mesh),
            PressureField::Uniform { value: 1.0 },
            0.5,
        )
        .unwrap();
        let twists = sample_unit_twists(
            &profile,
            &TwistSampling { count: 24, seed: 1 },
            &quad(),
        )
        .unwrap();
        let err = sample_wrench_set(&profile, &twists, &quad()).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn planar_translation_force_is_mu() {
        let s = ParametricSurface::new(SurfaceKind::Cylinder).unwrap();
        let profile = ContactProfile::new(
            Surface::Parametric(s),
            PressureField::Uniform { value: 1.0 },
            1.0,
        )
        .unwrap();
        for theta in [0.0, 0.7, 2.1] {
            let w = planar_wrench_baseline(
                &profile,
                1,
                &PlanarTwist::Translation { theta },
                &quad(),
            )
            .unwrap();
            assert_relative_eq!(w.xy().norm(), 1.0, epsilon = 1e-10);
            // Pure translation through the centroid: no torque.
            assert!(w.z.abs() < 1e-10);
        }
    }

    #[test]
    fn planar_far_rotation_approaches_translation() {
        let s = ParametricSurface::new(SurfaceKind::Cylinder).unwrap();
        let profile = ContactProfile::new(
            Surface::Parametric(s),
            PressureField::Uniform { value: 1.0 },
            1.0,
        )
        .unwrap();
        let far = planar_wrench_baseline(
            &profile,
            1,
            &PlanarTwist::Rotation { cor: [1e6, 0.5] },
            &quad(),
        )
        .unwrap();
        // COR far along +z2d: velocity field approaches translation.
        assert_relative_eq!(far.xy().norm(), 1.0, max_relative = 1e-5);
    }

    #[test]
    fn three_d_reduction_keeps_expected_slots() {
        let w = Wrench6 {
            force: Vector3::new(1.0, 2.0, 3.0),
            torque: Vector3::new(4.0, 5.0, 6.0),
        };
        let r = reduce_bounds_to_3d(&w, 1);
        assert_eq!(r.as_slice(), &[1.0, 0.0, 3.0, 0.0, 5.0, 0.0]);
        let samples = vec![DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])];
        let reduced = reduce_samples_to_3d(&samples, 1);
        assert_eq!(reduced[0].as_slice(), &[1.0, 3.0, 5.0]);
    }
}

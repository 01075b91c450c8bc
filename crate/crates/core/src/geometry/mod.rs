//! Contact patches: geometry, pressure, and the local contact frame.

mod mesh;
mod parametric;
mod pressure;

pub use mesh::{mesh_parametric, TriangleMesh};
pub use parametric::{ParametricSurface, SurfaceEval, SurfaceKind};
pub use pressure::{power_law_pressure, PressureField, RadialMode};

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::quad::{pairwise_sum, Quadrature};

/// A contact patch, either smooth or triangulated.
#[derive(Debug, Clone)]
pub enum Surface {
    Parametric(ParametricSurface),
    Mesh(TriangleMesh),
}

impl Surface {
    /// Axis-aligned bounds (sampled for parametric patches, exact for
    /// meshes).
    #[must_use]
    pub fn bounds(&self) -> (Point3<f64>, Point3<f64>) {
        match self {
            Surface::Parametric(s) => s.sampled_bounds(),
            Surface::Mesh(m) => m.bounds(),
        }
    }

    #[must_use]
    pub fn translated(&self, d: &Vector3<f64>) -> Surface {
        match self {
            Surface::Parametric(s) => Surface::Parametric(s.translated(d)),
            Surface::Mesh(m) => Surface::Mesh(m.translated(d)),
        }
    }
}

/// Contact patch plus pressure distribution plus friction coefficient:
/// everything the wrench integrals consume.
#[derive(Debug, Clone)]
pub struct ContactProfile {
    surface: Surface,
    pressure: PressureField,
    mu: f64,
}

impl ContactProfile {
    pub fn new(surface: Surface, pressure: PressureField, mu: f64) -> Result<Self> {
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::domain("friction coefficient must be positive"));
        }
        pressure.validate()?;
        if let PressureField::PerElement { values } = &pressure {
            match &surface {
                Surface::Mesh(m) => {
                    if values.len() != m.face_count() {
                        return Err(Error::domain(format!(
                            "per-element pressure has {} entries for {} faces",
                            values.len(),
                            m.face_count()
                        )));
                    }
                }
                Surface::Parametric(_) => {
                    return Err(Error::domain(
                        "per-element pressure requires a mesh surface",
                    ));
                }
            }
        }
        Ok(Self {
            surface,
            pressure,
            mu,
        })
    }

    #[must_use]
    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    #[must_use]
    pub fn pressure(&self) -> &PressureField {
        &self.pressure
    }

    #[must_use]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Same profile with a different friction coefficient.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.surface.clone(), self.pressure.clone(), mu)
    }

    /// Longest side of the axis-aligned bounding box.
    #[must_use]
    pub fn longest_bound_side(&self) -> f64 {
        let (lo, hi) = self.surface.bounds();
        let d = hi - lo;
        d.x.max(d.y).max(d.z)
    }

    /// Integrates `f(point, unit_normal) * P * dS` over the patch.
    ///
    /// Parametric patches use tensor-product Gauss-Legendre quadrature
    /// with pairwise accumulation; meshes sum the per-face midpoint rule
    /// pairwise. Both are deterministic for fixed inputs.
    pub(crate) fn integrate_weighted<const K: usize>(
        &self,
        quad: &Quadrature,
        f: impl Fn(&Point3<f64>, &Vector3<f64>) -> [f64; K],
    ) -> Result<[f64; K]> {
        match &self.surface {
            Surface::Parametric(s) => {
                let mut pressure_err: Option<Error> = None;
                let out = quad.integrate(s.domain(), |u, v| {
                    if pressure_err.is_some() {
                        return [0.0; K];
                    }
                    let (du, dv) = s.partials(u, v);
                    let cross = du.cross(&dv);
                    let ds = cross.norm();
                    if ds == 0.0 {
                        return [0.0; K];
                    }
                    let n = cross / ds;
                    let p = s.eval(u, v);
                    match self.pressure.value_at(&p, None) {
                        Ok(pressure) => {
                            let mut val = f(&p, &n);
                            for x in val.iter_mut() {
                                *x *= pressure * ds;
                            }
                            val
                        }
                        Err(e) => {
                            pressure_err = Some(e);
                            [0.0; K]
                        }
                    }
                });
                match pressure_err {
                    Some(e) => Err(e),
                    None => Ok(out),
                }
            }
            Surface::Mesh(m) => {
                let mut terms = Vec::with_capacity(m.face_count());
                for i in 0..m.face_count() {
                    let c = &m.centers()[i];
                    let pressure = self.pressure.value_at(c, Some(i))?;
                    let mut val = f(c, &m.normals()[i]);
                    for x in val.iter_mut() {
                        *x *= pressure * m.areas()[i];
                    }
                    terms.push(val);
                }
                Ok(pairwise_sum(&terms))
            }
        }
    }

    /// Integrates `g(q1, q2) * dA` over the patch's shadow on the plane
    /// normal to coordinate `axis`, where (q1, q2) are the remaining
    /// coordinates in cyclic order after `axis`. Valid when the patch
    /// projects injectively onto that plane.
    pub(crate) fn integrate_projected<const K: usize>(
        &self,
        quad: &Quadrature,
        axis: usize,
        f: impl Fn(f64, f64) -> [f64; K],
    ) -> Result<[f64; K]> {
        if axis > 2 {
            return Err(Error::domain("projection axis must be 0, 1, or 2"));
        }
        let (i1, i2) = ((axis + 1) % 3, (axis + 2) % 3);
        match &self.surface {
            Surface::Parametric(s) => Ok(quad.integrate(s.domain(), |u, v| {
                let (du, dv) = s.partials(u, v);
                let w = du.cross(&dv)[axis].abs();
                let p = s.eval(u, v);
                let mut val = f(p[i1], p[i2]);
                for x in val.iter_mut() {
                    *x *= w;
                }
                val
            })),
            Surface::Mesh(m) => {
                let mut terms = Vec::with_capacity(m.face_count());
                for i in 0..m.face_count() {
                    let w = m.areas()[i] * m.normals()[i][axis].abs();
                    let c = &m.centers()[i];
                    let mut val = f(c[i1], c[i2]);
                    for x in val.iter_mut() {
                        *x *= w;
                    }
                    terms.push(val);
                }
                Ok(pairwise_sum(&terms))
            }
        }
    }
}

/// Total normal force `F = integral of P dS` and the patch area.
pub fn pressure_force_and_area(profile: &ContactProfile, quad: &Quadrature) -> Result<(f64, f64)> {
    let [f] = profile.integrate_weighted(quad, |_, _| [1.0])?;
    let area = match profile.surface() {
        Surface::Parametric(s) => {
            let [area] = quad.integrate(s.domain(), |u, v| [s.area_element(u, v)]);
            area
        }
        Surface::Mesh(m) => m.total_area(),
    };
    Ok((f, area))
}

/// Pressure-weighted centroid `o = integral(P sigma dS) / integral(P dS)`.
///
/// The field magnitude cancels in the ratio; integrating the unit form
/// of the field keeps the center bit-stable under pressure rescaling.
pub fn pressure_center(profile: &ContactProfile, quad: &Quadrature) -> Result<Point3<f64>> {
    let (_, unit_field) = profile.pressure.split_scale();
    let unit_profile = ContactProfile {
        surface: profile.surface.clone(),
        pressure: unit_field,
        mu: profile.mu,
    };
    let [mx, my, mz, force] =
        unit_profile.integrate_weighted(quad, |p, _| [p.x, p.y, p.z, 1.0])?;
    if !(force > 1e-300) {
        return Err(Error::degenerate("total pressure force is not positive"));
    }
    Ok(Point3::new(mx / force, my / force, mz / force))
}

/// Translates the profile so its pressure center sits at the origin.
///
/// Returns the centered profile and the translation that was added to
/// every point (the negated pressure center). The power-law pressure
/// center, if any, moves along with the geometry.
pub fn to_local_contact_frame(
    profile: &ContactProfile,
    quad: &Quadrature,
) -> Result<(ContactProfile, Vector3<f64>)> {
    let o = pressure_center(profile, quad)?;
    let t = -o.coords;
    let centered = ContactProfile {
        surface: profile.surface.translated(&t),
        pressure: profile.pressure.translated(&t),
        mu: profile.mu,
    };
    Ok((centered, t))
}

/// Rescales the pressure field so it integrates to one, returning the
/// normalized profile and the original total force `F`.
///
/// The field's magnitude is factored out symbolically before the
/// integral, so fields that differ only by a uniform rescale normalize
/// to bit-identical profiles; the cache key depends on that.
pub fn normalize_pressure(
    profile: &ContactProfile,
    quad: &Quadrature,
) -> Result<(ContactProfile, f64)> {
    let (scale, unit_field) = profile.pressure.split_scale();
    let unit_profile = ContactProfile {
        surface: profile.surface.clone(),
        pressure: unit_field,
        mu: profile.mu,
    };
    let [unit_force] = unit_profile.integrate_weighted(quad, |_, _| [1.0])?;
    let force = scale * unit_force;
    if !(force > 1e-300) {
        return Err(Error::degenerate("total pressure force is not positive"));
    }
    let normalized = ContactProfile {
        surface: profile.surface.clone(),
        pressure: unit_profile.pressure.scaled(1.0 / unit_force),
        mu: profile.mu,
    };
    Ok((normalized, force))
}

/// The worked reference patch: a radius-0.02 circular cylinder strip,
/// quarter arc around +y, 0.02 tall, in its object frame.
pub fn reference_cylinder_patch(pressure: f64, mu: f64) -> Result<ContactProfile> {
    use std::f64::consts::PI;
    let surface = ParametricSurface::new(SurfaceKind::EllipticCylinder)?
        .with_shape(0.02, 0.02, 1.0)?
        .with_domain([[0.25 * PI, 0.75 * PI], [-0.05, -0.03]])?;
    ContactProfile::new(
        Surface::Parametric(surface),
        PressureField::Uniform { value: pressure },
        mu,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quad() -> Quadrature {
        Quadrature::new(Quadrature::DEFAULT_ORDER).unwrap()
    }

    #[test]
    fn reference_patch_force_and_density() {
        // Uniform 1000 Pa on a 0.02 * (pi/2 * 0.02) patch: F = 0.62832 N,
        // normalized density 1591.5 per square meter.
        let profile = reference_cylinder_patch(1000.0, 0.3).unwrap();
        let (normalized, force) = normalize_pressure(&profile, &quad()).unwrap();
        assert_relative_eq!(force, 0.62832, max_relative = 1e-4);
        match normalized.pressure() {
            PressureField::Uniform { value } => {
                assert_relative_eq!(*value, 1591.5, max_relative = 1e-3)
            }
            _ => unreachable!(),
        }
        let [unit] = normalized
            .integrate_weighted(&quad(), |_, _| [1.0])
            .unwrap();
        assert_relative_eq!(unit, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn reference_patch_pressure_center() {
        let profile = reference_cylinder_patch(1000.0, 0.3).unwrap();
        let o = pressure_center(&profile, &quad()).unwrap();
        assert_relative_eq!(o.x, 0.0, epsilon = 1e-12);
        // 0.02 * 2 sqrt(2) / pi.
        assert_relative_eq!(o.y, 0.018006, epsilon = 1e-6);
        assert_relative_eq!(o.z, -0.04, epsilon = 1e-12);
    }

    #[test]
    fn centering_moves_pressure_center_to_origin() {
        let profile = reference_cylinder_patch(1000.0, 0.3).unwrap();
        let (centered, t) = to_local_contact_frame(&profile, &quad()).unwrap();
        let o = pressure_center(&centered, &quad()).unwrap();
        assert!(o.coords.norm() < 1e-10);
        let o_original = pressure_center(&profile, &quad()).unwrap();
        assert_relative_eq!(t, -o_original.coords, epsilon = 1e-12);
        // Centering an already centered profile is a no-op.
        let (_, t2) = to_local_contact_frame(&centered, &quad()).unwrap();
        assert!(t2.norm() < 1e-10);
    }

    #[test]
    fn mesh_and_parametric_pressure_centers_agree() {
        for kind in SurfaceKind::STANDARD {
            let s = ParametricSurface::new(kind).unwrap();
            let mesh = mesh_parametric(&s, 1000).unwrap();
            let pressure = PressureField::Uniform { value: 1.0 };
            let p_param = ContactProfile::new(Surface::Parametric(s), pressure.clone(), 0.5).unwrap();
            let p_mesh = ContactProfile::new(Surface::Mesh(mesh), pressure, 0.5).unwrap();
            let a = pressure_center(&p_param, &quad()).unwrap();
            let b = pressure_center(&p_mesh, &quad()).unwrap();
            // An inscribed mesh sits inside the smooth surface, so the
            // centroid drifts inward by O(h^2): about 1.5e-3 for the
            // sphere at this resolution.
            let scale = a.coords.norm().max(1.0);
            assert!(
                (a - b).norm() <= 3e-3 * scale,
                "{kind:?}: {a:?} vs {b:?}"
            );
        }
    }

    #[test]
    fn single_face_pressure_center_is_its_centroid() {
        let mesh = TriangleMesh::new(
            vec![
                Point3::new(0.0, 0.0, 1.0),
                Point3::new(1.0, 0.0, 1.0),
                Point3::new(0.0, 1.0, 1.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let centroid = mesh.centers()[0];
        let profile = ContactProfile::new(
            Surface::Mesh(mesh),
            PressureField::PerElement { values: vec![42.0] },
            1.0,
        )
        .unwrap();
        let o = pressure_center(&profile, &quad()).unwrap();
        assert_relative_eq!(o, centroid, epsilon = 1e-14);
    }

    #[test]
    fn pressure_scaling_leaves_center_fixed() {
        let profile = reference_cylinder_patch(1000.0, 0.3).unwrap();
        let scaled = ContactProfile::new(
            profile.surface().clone(),
            profile.pressure().scaled(7.5),
            profile.mu(),
        )
        .unwrap();
        let a = pressure_center(&profile, &quad()).unwrap();
        let b = pressure_center(&scaled, &quad()).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn per_element_on_parametric_rejected() {
        let s = ParametricSurface::new(SurfaceKind::Cylinder).unwrap();
        let r = ContactProfile::new(
            Surface::Parametric(s),
            PressureField::PerElement { values: vec![1.0] },
            0.5,
        );
        assert!(r.is_err());
    }

    #[test]
    fn negative_mu_rejected() {
        let s = ParametricSurface::new(SurfaceKind::Cylinder).unwrap();
        let r = ContactProfile::new(
            Surface::Parametric(s),
            PressureField::Uniform { value: 1.0 },
            -0.5,
        );
        assert!(r.is_err());
    }

    #[test]
    fn power_law_radius_overflow_surfaces_as_error() {
        let s = ParametricSurface::new(SurfaceKind::Cylinder).unwrap();
        let profile = ContactProfile::new(
            Surface::Parametric(s),
            PressureField::PowerLaw {
                p0: 100.0,
                k: 2.0,
                r_max: 0.1, // far smaller than the patch
                mode: RadialMode::Point,
                center: Point3::origin(),
            },
            0.5,
        )
        .unwrap();
        assert!(pressure_center(&profile, &quad()).is_err());
    }

    #[test]
    fn projected_area_of_half_cylinder_is_rectangle() {
        // Shadow along y of the half cylinder: [-1, 1] x [0, 1].
        let s = ParametricSurface::new(SurfaceKind::Cylinder).unwrap();
        let profile = ContactProfile::new(
            Surface::Parametric(s),
            PressureField::Uniform { value: 1.0 },
            0.5,
        )
        .unwrap();
        let [area] = profile.integrate_projected(&quad(), 1, |_, _| [1.0]).unwrap();
        assert_relative_eq!(area, 2.0, epsilon = 1e-10);
        // Mesh projection converges to the same shadow.
        let mesh = mesh_parametric(
            &ParametricSurface::new(SurfaceKind::Cylinder).unwrap(),
            2000,
        )
        .unwrap();
        let profile = ContactProfile::new(
            Surface::Mesh(mesh),
            PressureField::Uniform { value: 1.0 },
            0.5,
        )
        .unwrap();
        let [area] = profile.integrate_projected(&quad(), 1, |_, _| [1.0]).unwrap();
        assert_relative_eq!(area, 2.0, max_relative = 2e-3);
    }
}

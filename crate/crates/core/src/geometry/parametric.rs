use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

/// Evaluator for a user-supplied surface patch.
pub type SurfaceEval = Arc<dyn Fn(f64, f64) -> Vector3<f64> + Send + Sync>;

/// The six closed-form test surfaces, all over a rectangular (u, v)
/// domain. Shape parameters default to the canonical half-unit bodies:
/// elliptic variants use (a, b) = (1, 1/2) and the ellipsoid
/// (a, b, c) = (1, 1/2, 3/5).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    /// S1: (cos u, sin u, v) on [0, pi] x [0, 1].
    Cylinder,
    /// S2: (a cos u, b sin u, v) on [0, pi] x [0, 1].
    EllipticCylinder,
    /// S3: (cos u cos v, cos u sin v, sin u) on [-pi/2, pi/2] x [0, pi].
    Sphere,
    /// S4: (a cos u cos v, b cos u sin v, c sin u), domain as S3.
    Ellipsoid,
    /// S5: (v cos u, v sin u, v^2) on [0, pi] x [0, 1].
    Paraboloid,
    /// S6: (a v cos u, b v sin u, v^2) on [0, pi] x [0, 1].
    EllipticParaboloid,
    /// User-supplied evaluator; derivatives by central differences.
    Custom,
}

impl SurfaceKind {
    pub const STANDARD: [SurfaceKind; 6] = [
        SurfaceKind::Cylinder,
        SurfaceKind::EllipticCylinder,
        SurfaceKind::Sphere,
        SurfaceKind::Ellipsoid,
        SurfaceKind::Paraboloid,
        SurfaceKind::EllipticParaboloid,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            SurfaceKind::Cylinder => "S1",
            SurfaceKind::EllipticCylinder => "S2",
            SurfaceKind::Sphere => "S3",
            SurfaceKind::Ellipsoid => "S4",
            SurfaceKind::Paraboloid => "S5",
            SurfaceKind::EllipticParaboloid => "S6",
            SurfaceKind::Custom => "custom",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Ok(match id {
            "S1" => SurfaceKind::Cylinder,
            "S2" => SurfaceKind::EllipticCylinder,
            "S3" => SurfaceKind::Sphere,
            "S4" => SurfaceKind::Ellipsoid,
            "S5" => SurfaceKind::Paraboloid,
            "S6" => SurfaceKind::EllipticParaboloid,
            "custom" => SurfaceKind::Custom,
            other => {
                return Err(Error::domain(format!("unknown surface id {other:?}")));
            }
        })
    }

    fn default_domain(&self) -> [[f64; 2]; 2] {
        match self {
            SurfaceKind::Sphere | SurfaceKind::Ellipsoid => [[-FRAC_PI_2, FRAC_PI_2], [0.0, PI]],
            _ => [[0.0, PI], [0.0, 1.0]],
        }
    }
}

/// A smooth patch `sigma(u, v) = scale * base(u, v) + offset` over a
/// rectangular domain. The base map must be regular on the interior of
/// the domain (`sigma_u x sigma_v != 0`); the standard kinds satisfy this,
/// degenerating only on boundary curves (sphere poles, paraboloid apex).
#[derive(Clone)]
pub struct ParametricSurface {
    kind: SurfaceKind,
    a: f64,
    b: f64,
    c: f64,
    domain: [[f64; 2]; 2],
    scale: f64,
    offset: Vector3<f64>,
    custom: Option<SurfaceEval>,
}

impl fmt::Debug for ParametricSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricSurface")
            .field("kind", &self.kind)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("c", &self.c)
            .field("domain", &self.domain)
            .field("scale", &self.scale)
            .field("offset", &self.offset)
            .finish()
    }
}

impl ParametricSurface {
    pub fn new(kind: SurfaceKind) -> Result<Self> {
        if kind == SurfaceKind::Custom {
            return Err(Error::domain(
                "custom surfaces require ParametricSurface::custom with an evaluator",
            ));
        }
        let (b, c) = match kind {
            SurfaceKind::Ellipsoid => (0.5, 0.6),
            SurfaceKind::EllipticCylinder | SurfaceKind::EllipticParaboloid => (0.5, 1.0),
            _ => (1.0, 1.0),
        };
        Ok(Self {
            kind,
            a: 1.0,
            b,
            c,
            domain: kind.default_domain(),
            scale: 1.0,
            offset: Vector3::zeros(),
            custom: None,
        })
    }

    /// A user-supplied patch over the given domain.
    pub fn custom(eval: SurfaceEval, domain: [[f64; 2]; 2]) -> Result<Self> {
        let s = Self {
            kind: SurfaceKind::Custom,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            domain,
            scale: 1.0,
            offset: Vector3::zeros(),
            custom: Some(eval),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_shape(mut self, a: f64, b: f64, c: f64) -> Result<Self> {
        self.a = a;
        self.b = b;
        self.c = c;
        self.validate()?;
        Ok(self)
    }

    pub fn with_domain(mut self, domain: [[f64; 2]; 2]) -> Result<Self> {
        self.domain = domain;
        self.validate()?;
        Ok(self)
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        self.scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_offset(mut self, offset: Vector3<f64>) -> Self {
        self.offset = offset;
        self
    }

    fn validate(&self) -> Result<()> {
        for p in [self.a, self.b, self.c, self.scale] {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::domain(
                    "surface shape parameters and scale must be positive",
                ));
            }
        }
        let [[u0, u1], [v0, v1]] = self.domain;
        if !(u0 < u1 && v0 < v1) || ![u0, u1, v0, v1].iter().all(|x| x.is_finite()) {
            return Err(Error::domain("parameter domain must be a nonempty rectangle"));
        }
        Ok(())
    }

    #[must_use]
    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    #[must_use]
    pub fn domain(&self) -> [[f64; 2]; 2] {
        self.domain
    }

    #[must_use]
    pub fn shape(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }

    #[must_use]
    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[must_use]
    pub fn offset(&self) -> Vector3<f64> {
        self.offset
    }

    /// Same patch translated by `d`.
    #[must_use]
    pub fn translated(&self, d: &Vector3<f64>) -> Self {
        let mut s = self.clone();
        s.offset += d;
        s
    }

    fn base(&self, u: f64, v: f64) -> Vector3<f64> {
        let (a, b, c) = (self.a, self.b, self.c);
        match self.kind {
            SurfaceKind::Cylinder => Vector3::new(u.cos(), u.sin(), v),
            SurfaceKind::EllipticCylinder => Vector3::new(a * u.cos(), b * u.sin(), v),
            SurfaceKind::Sphere => Vector3::new(u.cos() * v.cos(), u.cos() * v.sin(), u.sin()),
            SurfaceKind::Ellipsoid => {
                Vector3::new(a * u.cos() * v.cos(), b * u.cos() * v.sin(), c * u.sin())
            }
            SurfaceKind::Paraboloid => Vector3::new(v * u.cos(), v * u.sin(), v * v),
            SurfaceKind::EllipticParaboloid => {
                Vector3::new(a * v * u.cos(), b * v * u.sin(), v * v)
            }
            SurfaceKind::Custom => (self.custom.as_ref().expect("custom evaluator"))(u, v),
        }
    }

    /// Surface point at (u, v).
    #[must_use]
    pub fn eval(&self, u: f64, v: f64) -> Point3<f64> {
        Point3::from(self.scale * self.base(u, v) + self.offset)
    }

    /// Partial derivatives (sigma_u, sigma_v) at (u, v).
    #[must_use]
    pub fn partials(&self, u: f64, v: f64) -> (Vector3<f64>, Vector3<f64>) {
        let (a, b, c) = (self.a, self.b, self.c);
        let (du, dv) = match self.kind {
            SurfaceKind::Cylinder => (
                Vector3::new(-u.sin(), u.cos(), 0.0),
                Vector3::new(0.0, 0.0, 1.0),
            ),
            SurfaceKind::EllipticCylinder => (
                Vector3::new(-a * u.sin(), b * u.cos(), 0.0),
                Vector3::new(0.0, 0.0, 1.0),
            ),
            SurfaceKind::Sphere => (
                Vector3::new(-u.sin() * v.cos(), -u.sin() * v.sin(), u.cos()),
                Vector3::new(-u.cos() * v.sin(), u.cos() * v.cos(), 0.0),
            ),
            SurfaceKind::Ellipsoid => (
                Vector3::new(-a * u.sin() * v.cos(), -b * u.sin() * v.sin(), c * u.cos()),
                Vector3::new(-a * u.cos() * v.sin(), b * u.cos() * v.cos(), 0.0),
            ),
            SurfaceKind::Paraboloid => (
                Vector3::new(-v * u.sin(), v * u.cos(), 0.0),
                Vector3::new(u.cos(), u.sin(), 2.0 * v),
            ),
            SurfaceKind::EllipticParaboloid => (
                Vector3::new(-a * v * u.sin(), b * v * u.cos(), 0.0),
                Vector3::new(a * u.cos(), b * u.sin(), 2.0 * v),
            ),
            SurfaceKind::Custom => {
                let [[u0, u1], [v0, v1]] = self.domain;
                let hu = 1e-6 * (u1 - u0);
                let hv = 1e-6 * (v1 - v0);
                let du = (self.base(u + hu, v) - self.base(u - hu, v)) / (2.0 * hu);
                let dv = (self.base(u, v + hv) - self.base(u, v - hv)) / (2.0 * hv);
                (du, dv)
            }
        };
        (self.scale * du, self.scale * dv)
    }

    /// Unit normal `sigma_u x sigma_v / |sigma_u x sigma_v|`.
    ///
    /// Errors where the parameterization degenerates (cross product below
    /// 1e-12 of the patch scale).
    pub fn normal(&self, u: f64, v: f64) -> Result<Vector3<f64>> {
        let (du, dv) = self.partials(u, v);
        let cross = du.cross(&dv);
        let n = cross.norm();
        if n < 1e-12 * self.scale * self.scale {
            return Err(Error::degenerate(format!(
                "surface normal undefined at (u, v) = ({u}, {v})"
            )));
        }
        Ok(cross / n)
    }

    /// Area element `|sigma_u x sigma_v|` at (u, v).
    #[must_use]
    pub fn area_element(&self, u: f64, v: f64) -> f64 {
        let (du, dv) = self.partials(u, v);
        du.cross(&dv).norm()
    }

    /// Axis-aligned bounds sampled on a dense parameter grid (the exact
    /// bounds of the smooth patch may exceed these by a grid step).
    #[must_use]
    pub fn sampled_bounds(&self) -> (Point3<f64>, Point3<f64>) {
        let [[u0, u1], [v0, v1]] = self.domain;
        let n = 64;
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for i in 0..=n {
            let u = u0 + (u1 - u0) * i as f64 / n as f64;
            for j in 0..=n {
                let v = v0 + (v1 - v0) * j as f64 / n as f64;
                let p = self.eval(u, v);
                lo = lo.inf(&p.coords);
                hi = hi.sup(&p.coords);
            }
        }
        (Point3::from(lo), Point3::from(hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd_partials(s: &ParametricSurface, u: f64, v: f64) -> (Vector3<f64>, Vector3<f64>) {
        let h = 1e-6;
        let du = (s.eval(u + h, v) - s.eval(u - h, v)) / (2.0 * h);
        let dv = (s.eval(u, v + h) - s.eval(u, v - h)) / (2.0 * h);
        (du, dv)
    }

    #[test]
    fn standard_surfaces_hit_reference_points() {
        let s1 = ParametricSurface::new(SurfaceKind::Cylinder).unwrap();
        assert_relative_eq!(s1.eval(0.0, 0.0), Point3::new(1.0, 0.0, 0.0), epsilon = 1e-15);

        let s3 = ParametricSurface::new(SurfaceKind::Sphere).unwrap();
        assert_relative_eq!(s3.eval(0.0, 0.0), Point3::new(1.0, 0.0, 0.0), epsilon = 1e-15);

        let s5 = ParametricSurface::new(SurfaceKind::Paraboloid).unwrap();
        assert_relative_eq!(s5.eval(1.3, 0.0), Point3::new(0.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        for kind in SurfaceKind::STANDARD {
            let s = ParametricSurface::new(kind).unwrap();
            let [[u0, u1], [v0, v1]] = s.domain();
            for (fu, fv) in [(0.3, 0.4), (0.61, 0.52), (0.85, 0.9)] {
                let u = u0 + fu * (u1 - u0);
                let v = v0 + fv * (v1 - v0);
                let (au, av) = s.partials(u, v);
                let (nu, nv) = fd_partials(&s, u, v);
                assert_relative_eq!(au, nu, epsilon = 1e-7, max_relative = 1e-6);
                assert_relative_eq!(av, nv, epsilon = 1e-7, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn cylinder_normal_is_radial() {
        let s = ParametricSurface::new(SurfaceKind::Cylinder).unwrap();
        let n = s.normal(FRAC_PI_2, 0.5).unwrap();
        assert_relative_eq!(n, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-14);
        // Scaling and translating must not change the direction.
        let s = s.with_scale(0.07).unwrap().with_offset(Vector3::new(1.0, 2.0, 3.0));
        let n = s.normal(FRAC_PI_2, 0.5).unwrap();
        assert_relative_eq!(n, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-14);
    }

    #[test]
    fn worked_cylinder_patch_normal_and_area_element() {
        // Radius-0.02 circular patch: n = (cos u, sin u, 0), dS = 0.02 du dv.
        let s = ParametricSurface::new(SurfaceKind::EllipticCylinder)
            .unwrap()
            .with_shape(0.02, 0.02, 1.0)
            .unwrap()
            .with_domain([[0.25 * PI, 0.75 * PI], [-0.05, -0.03]])
            .unwrap();
        for (u, v) in [(0.3 * PI, -0.04), (0.5 * PI, -0.035), (0.7 * PI, -0.045)] {
            let n = s.normal(u, v).unwrap();
            assert_relative_eq!(n, Vector3::new(u.cos(), u.sin(), 0.0), epsilon = 1e-13);
            assert_relative_eq!(s.area_element(u, v), 0.02, epsilon = 1e-15);
        }
    }

    #[test]
    fn sphere_pole_normal_is_degenerate() {
        let s = ParametricSurface::new(SurfaceKind::Sphere).unwrap();
        assert!(s.normal(FRAC_PI_2, 1.0).is_err());
        assert!(s.normal(0.3, 1.0).is_ok());
    }

    #[test]
    fn custom_surface_uses_finite_differences() {
        let eval: SurfaceEval = Arc::new(|u, v| Vector3::new(u, v, u * v));
        let s = ParametricSurface::custom(eval, [[0.0, 1.0], [0.0, 1.0]]).unwrap();
        let (du, dv) = s.partials(0.3, 0.7);
        assert_relative_eq!(du, Vector3::new(1.0, 0.0, 0.7), epsilon = 1e-6);
        assert_relative_eq!(dv, Vector3::new(0.0, 1.0, 0.3), epsilon = 1e-6);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ParametricSurface::new(SurfaceKind::EllipticCylinder)
            .unwrap()
            .with_shape(-1.0, 0.5, 1.0)
            .is_err());
        assert!(ParametricSurface::new(SurfaceKind::Cylinder)
            .unwrap()
            .with_domain([[1.0, 0.0], [0.0, 1.0]])
            .is_err());
        assert!(ParametricSurface::new(SurfaceKind::Custom).is_err());
    }
}

//! Screw kinematics: Pluecker lines, unit twists, surface velocities.

use nalgebra::{Point3, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{pressure_center, ContactProfile};
use crate::quad::Quadrature;

/// A directed line in Pluecker coordinates `(e, m)` with unit direction
/// `e` and moment `m = q x e` for any point `q` on the line, so
/// `e . m = 0` by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluckerLine {
    e: Vector3<f64>,
    m: Vector3<f64>,
}

impl PluckerLine {
    /// Line through `point` along `direction` (normalized here).
    pub fn through_point(direction: Vector3<f64>, point: Point3<f64>) -> Result<Self> {
        let n = direction.norm();
        if n < 1e-12 {
            return Err(Error::degenerate("line direction is numerically zero"));
        }
        let e = direction / n;
        Ok(Self {
            e,
            m: point.coords.cross(&e),
        })
    }

    #[must_use]
    pub fn direction(&self) -> Vector3<f64> {
        self.e
    }

    #[must_use]
    pub fn moment(&self) -> Vector3<f64> {
        self.m
    }
}

/// A unit twist: either a screw of pitch `h` about a line (unit angular
/// speed) or a pure translation (unit linear speed),
///
/// ```text
///     xi = [h e + m; e]   (rotational)
///     xi = [e; 0]         (translational)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitTwist {
    Rotational { line: PluckerLine, pitch: f64 },
    Translational { direction: Vector3<f64> },
}

impl UnitTwist {
    /// Screw about the line through `point` along `direction`.
    pub fn rotation_about(
        direction: Vector3<f64>,
        point: Point3<f64>,
        pitch: f64,
    ) -> Result<Self> {
        if !pitch.is_finite() {
            return Err(Error::domain("pitch must be finite"));
        }
        Ok(UnitTwist::Rotational {
            line: PluckerLine::through_point(direction, point)?,
            pitch,
        })
    }

    /// Pure translation along `direction` (normalized here).
    pub fn translation(direction: Vector3<f64>) -> Result<Self> {
        let n = direction.norm();
        if n < 1e-12 {
            return Err(Error::degenerate("translation direction is numerically zero"));
        }
        Ok(UnitTwist::Translational {
            direction: direction / n,
        })
    }

    /// `[linear; angular]` coordinates.
    #[must_use]
    pub fn as_vector6(&self) -> Vector6<f64> {
        let (lin, ang) = match self {
            UnitTwist::Rotational { line, pitch } => {
                (*pitch * line.e + line.m, line.e)
            }
            UnitTwist::Translational { direction } => (*direction, Vector3::zeros()),
        };
        Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z)
    }

    /// The twist with motion reversed: `e -> -e`, `m -> -m`, pitch kept.
    /// Velocities at every point are exactly negated.
    #[must_use]
    pub fn reversed(&self) -> Self {
        match self {
            UnitTwist::Rotational { line, pitch } => UnitTwist::Rotational {
                line: PluckerLine {
                    e: -line.e,
                    m: -line.m,
                },
                pitch: *pitch,
            },
            UnitTwist::Translational { direction } => UnitTwist::Translational {
                direction: -direction,
            },
        }
    }

    /// Rigid-body velocity of the point `p`:
    /// `v = h e + m - p x e` for screws, `e` for translations.
    #[must_use]
    pub fn velocity_at(&self, p: &Point3<f64>) -> Vector3<f64> {
        match self {
            UnitTwist::Rotational { line, pitch } => {
                *pitch * line.e + line.m - p.coords.cross(&line.e)
            }
            UnitTwist::Translational { direction } => *direction,
        }
    }
}

/// Unit tangential (slip) direction: the velocity projected into the
/// tangent plane of unit normal `n` and normalized. Errors when the
/// velocity is within 1e-12 of the normal direction.
pub fn tangential_direction(v: &Vector3<f64>, n: &Vector3<f64>) -> Result<Vector3<f64>> {
    let t = v - n * n.dot(v);
    let norm = t.norm();
    if norm < 1e-12 {
        return Err(Error::degenerate(
            "velocity is normal to the surface; slip direction undefined",
        ));
    }
    Ok(t / norm)
}

/// Twist-sampling options. `count` includes the 12 mandatory axis
/// seeds; the remainder splits 80/20 rotational/translational.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwistSampling {
    pub count: usize,
    pub seed: u64,
}

/// Deterministic unit-twist set over a contact patch.
///
/// The first 12 twists are seeds: axis-aligned unit translations
/// (+-x, +-y, +-z) followed by axis-aligned zero-pitch rotations through
/// the pressure center. The remaining rotations take their axes from a
/// Fibonacci sphere, points uniformly from the ball of radius
/// `0.25 * longest bounding-box side` around the pressure center, and
/// pitches uniformly from [-2, 2]; translations reuse the leading
/// Fibonacci directions.
pub fn sample_unit_twists(
    profile: &ContactProfile,
    sampling: &TwistSampling,
    quad: &Quadrature,
) -> Result<Vec<UnitTwist>> {
    if sampling.count < 12 {
        return Err(Error::domain(format!(
            "twist count {} below the 12 mandatory axis seeds",
            sampling.count
        )));
    }
    let o = pressure_center(profile, quad)?;
    let radius = 0.25 * profile.longest_bound_side();
    if !(radius > 0.0) {
        return Err(Error::degenerate("contact patch has zero extent"));
    }

    let axes = [
        Vector3::x(),
        -Vector3::x(),
        Vector3::y(),
        -Vector3::y(),
        Vector3::z(),
        -Vector3::z(),
    ];
    let mut twists = Vec::with_capacity(sampling.count);
    for axis in axes {
        twists.push(UnitTwist::translation(axis)?);
    }
    for axis in axes {
        twists.push(UnitTwist::rotation_about(axis, o, 0.0)?);
    }

    let rest = sampling.count - 12;
    let n_rot = (0.8 * rest as f64).round() as usize;
    let n_trans = rest - n_rot;
    let directions = fibonacci_sphere(n_rot.max(n_trans));

    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    for dir in directions.iter().take(n_rot) {
        let q = o + radius * sample_unit_ball(&mut rng);
        let pitch = rng.gen_range(-2.0..=2.0);
        twists.push(UnitTwist::rotation_about(*dir, q, pitch)?);
    }
    for dir in directions.iter().take(n_trans) {
        twists.push(UnitTwist::translation(*dir)?);
    }
    Ok(twists)
}

/// `n` near-evenly spread unit vectors (golden-angle spiral).
#[must_use]
pub fn fibonacci_sphere(n: usize) -> Vec<Vector3<f64>> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

fn sample_unit_ball(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        );
        if v.norm_squared() <= 1.0 {
            return v;
        }
    }
}

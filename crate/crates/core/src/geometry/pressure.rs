use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial coordinate used by the power-law pressure profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialMode {
    /// Distance to the vertical line through `center` parallel to the
    /// z-axis. Suits elongated, cylinder-like contact patches.
    Line,
    /// Distance to `center` itself. Suits blob-like patches.
    Point,
}

/// Pressure distribution over a contact patch, in pascals unless the
/// profile has been normalized (then the field integrates to one).
#[derive(Debug, Clone, PartialEq)]
pub enum PressureField {
    Uniform {
        value: f64,
    },
    /// `P(r) = p0 * (1 - (r / r_max)^k)^(1/k)`; approaches the uniform
    /// field as k grows and concentrates toward the center as k drops.
    PowerLaw {
        p0: f64,
        k: f64,
        r_max: f64,
        mode: RadialMode,
        center: Point3<f64>,
    },
    /// One value per mesh face; invalid on parametric surfaces.
    PerElement {
        values: Vec<f64>,
    },
}

impl PressureField {
    pub fn validate(&self) -> Result<()> {
        match self {
            PressureField::Uniform { value } => {
                if !value.is_finite() || *value <= 0.0 {
                    return Err(Error::domain("uniform pressure must be positive"));
                }
            }
            PressureField::PowerLaw { p0, k, r_max, .. } => {
                if !p0.is_finite() || *p0 <= 0.0 {
                    return Err(Error::domain("power-law p0 must be positive"));
                }
                if !k.is_finite() || *k <= 0.0 {
                    return Err(Error::domain("power-law exponent k must be positive"));
                }
                if !r_max.is_finite() || *r_max <= 0.0 {
                    return Err(Error::domain("power-law r_max must be positive"));
                }
            }
            PressureField::PerElement { values } => {
                if values.is_empty() {
                    return Err(Error::domain("per-element pressure list is empty"));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::domain(
                        "per-element pressures must be finite and nonnegative",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Pressure at a surface point. Mesh faces pass their index so the
    /// per-element field can resolve; parametric evaluation passes None.
    pub fn value_at(&self, point: &Point3<f64>, face: Option<usize>) -> Result<f64> {
        match self {
            PressureField::Uniform { value } => Ok(*value),
            PressureField::PowerLaw {
                p0,
                k,
                r_max,
                mode,
                center,
            } => {
                let r = match mode {
                    RadialMode::Line => {
                        let dx = point.x - center.x;
                        let dy = point.y - center.y;
                        dx.hypot(dy)
                    }
                    RadialMode::Point => (point - center).norm(),
                };
                power_law_pressure(r, *r_max, *k, *p0)
            }
            PressureField::PerElement { values } => {
                let idx = face.ok_or_else(|| {
                    Error::domain("per-element pressure requires a mesh face index")
                })?;
                values.get(idx).copied().ok_or_else(|| {
                    Error::domain(format!(
                        "per-element pressure has {} entries, face {idx} requested",
                        values.len()
                    ))
                })
            }
        }
    }

    /// Same field with every value scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> PressureField {
        match self {
            PressureField::Uniform { value } => PressureField::Uniform {
                value: value * factor,
            },
            PressureField::PowerLaw {
                p0,
                k,
                r_max,
                mode,
                center,
            } => PressureField::PowerLaw {
                p0: p0 * factor,
                k: *k,
                r_max: *r_max,
                mode: *mode,
                center: *center,
            },
            PressureField::PerElement { values } => PressureField::PerElement {
                values: values.iter().map(|v| v * factor).collect(),
            },
        }
    }

    /// Splits off the field's leading magnitude: returns `(s, unit)`
    /// with the original field equal to `unit` scaled by `s`. Uniform
    /// and power-law fields split exactly (their unit form never sees
    /// the magnitude, so rescaled fields share one unit form bit for
    /// bit); per-element fields divide through by their maximum.
    #[must_use]
    pub fn split_scale(&self) -> (f64, PressureField) {
        match self {
            PressureField::Uniform { value } => (*value, PressureField::Uniform { value: 1.0 }),
            PressureField::PowerLaw {
                p0,
                k,
                r_max,
                mode,
                center,
            } => (
                *p0,
                PressureField::PowerLaw {
                    p0: 1.0,
                    k: *k,
                    r_max: *r_max,
                    mode: *mode,
                    center: *center,
                },
            ),
            PressureField::PerElement { values } => {
                let s = values.iter().copied().fold(0.0_f64, f64::max);
                if s > 0.0 {
                    (
                        s,
                        PressureField::PerElement {
                            values: values.iter().map(|v| v / s).collect(),
                        },
                    )
                } else {
                    (1.0, self.clone())
                }
            }
        }
    }

    /// Same field translated by `d` (moves the power-law center).
    pub fn translated(&self, d: &nalgebra::Vector3<f64>) -> PressureField {
        match self {
            PressureField::PowerLaw {
                p0,
                k,
                r_max,
                mode,
                center,
            } => PressureField::PowerLaw {
                p0: *p0,
                k: *k,
                r_max: *r_max,
                mode: *mode,
                center: center + d,
            },
            other => other.clone(),
        }
    }
}

/// Power-law profile value at radius `r`.
///
/// Monotone nonincreasing in r, equal to `p0` at the center and zero at
/// the rim; as `k -> inf` the profile flattens toward uniform `p0`.
pub fn power_law_pressure(r: f64, r_max: f64, k: f64, p0: f64) -> Result<f64> {
    if !(r_max > 0.0) || !(k > 0.0) || !(p0 > 0.0) {
        return Err(Error::domain(
            "power-law parameters must satisfy r_max > 0, k > 0, p0 > 0",
        ));
    }
    // Tiny slack absorbs roundoff when r is computed from geometry that
    // defined r_max in the first place.
    if r < 0.0 || r > r_max * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "radius {r} outside [0, {r_max}]"
        )));
    }
    let t = (r.min(r_max) / r_max).powf(k);
    Ok(p0 * (1.0 - t).powf(1.0 / k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rim_pressure_vanishes_and_center_is_p0() {
        assert_eq!(power_law_pressure(1.0, 1.0, 2.0, 300.0).unwrap(), 0.0);
        assert_relative_eq!(
            power_law_pressure(0.0, 1.0, 2.0, 300.0).unwrap(),
            300.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn huge_exponent_approaches_uniform() {
        // k = 1e6 at half radius: indistinguishable from p0.
        let p = power_law_pressure(0.5, 1.0, 1e6, 250.0).unwrap();
        assert_relative_eq!(p, 250.0, max_relative = 1e-4);
    }

    #[test]
    fn monotone_nonincreasing_in_radius() {
        for &k in &[0.5, 1.0, 1.8, 4.0, 1e3, 1e6] {
            let mut last = f64::INFINITY;
            for i in 0..=100 {
                let r = i as f64 / 100.0;
                let p = power_law_pressure(r, 1.0, k, 10.0).unwrap();
                assert!(p <= last + 1e-12, "k={k} r={r}");
                last = p;
            }
        }
    }

    #[test]
    fn out_of_range_radius_rejected() {
        assert!(power_law_pressure(1.1, 1.0, 2.0, 10.0).is_err());
        assert!(power_law_pressure(-0.1, 1.0, 2.0, 10.0).is_err());
        assert!(power_law_pressure(0.5, 1.0, -2.0, 10.0).is_err());
    }

    #[test]
    fn line_mode_ignores_height() {
        let field = PressureField::PowerLaw {
            p0: 100.0,
            k: 2.0,
            r_max: 1.0,
            mode: RadialMode::Line,
            center: Point3::origin(),
        };
        let a = field.value_at(&Point3::new(0.3, 0.4, 0.0), None).unwrap();
        let b = field.value_at(&Point3::new(0.3, 0.4, 5.0), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn per_element_requires_face_index() {
        let field = PressureField::PerElement {
            values: vec![1.0, 2.0],
        };
        assert!(field.value_at(&Point3::origin(), None).is_err());
        assert_eq!(field.value_at(&Point3::origin(), Some(1)).unwrap(), 2.0);
        assert!(field.value_at(&Point3::origin(), Some(2)).is_err());
    }
}

//! File formats: contact profiles, fitted models, constraint sets,
//! grasp specifications, wrench CSV exports, and the canonical content
//! key used by the constraint cache.
//!
//! Every JSON file carries a format version field `"v": 1`. Floats are
//! serialized as shortest round-trip decimals, so file round-trips are
//! bit-exact. Writes go through a temp file plus rename.

use nalgebra::{DVector, Matrix3, Point3, Vector3, Vector6};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fit::{EllipsoidModel, LimitSurfaceModel, ModelKind, QuarticModel};
use crate::geometry::{
    normalize_pressure, to_local_contact_frame, ContactProfile, ParametricSurface, PressureField,
    RadialMode, Surface, SurfaceKind, TriangleMesh,
};
use crate::gws::ForceScale;
use crate::kinematics::{TwistSampling, UnitTwist};
use crate::linearize::{CachedContact, ConstraintSet};
use crate::quad::Quadrature;
use crate::wrench::Wrench6;

/// Format version stamped into every file.
pub const SCHEMA_VERSION: u32 = 1;

/// Hex digest identifying a centered, pressure-normalized profile plus
/// the pipeline parameters that shape its constraint set.
pub type CanonicalProfileKey = String;

fn default_version() -> u32 {
    SCHEMA_VERSION
}

// ---------------------------------------------------------------------
// Shared JSON plumbing.

fn read_json_value(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::schema(path.display().to_string(), e.to_string()))
}

fn check_version(value: &serde_json::Value, path: &Path) -> Result<()> {
    let Some(v) = value.get("v") else {
        return Err(Error::schema(
            path.display().to_string(),
            "missing format version field \"v\"",
        ));
    };
    let found = v.as_u64().unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(Error::Version {
            expected: SCHEMA_VERSION,
            found,
        });
    }
    Ok(())
}

fn decode<T: DeserializeOwned>(value: serde_json::Value, path: &Path) -> Result<T> {
    serde_json::from_value(value)
        .map_err(|e| Error::schema(path.display().to_string(), e.to_string()))
}

/// Writes bytes through a sibling temp file and an atomic rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    // Per-call counter: concurrent writers of the same target (e.g. two
    // identical contacts caching in parallel) must not share a temp file.
    static SEQ: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let stem = path
        .file_name()
        .ok_or_else(|| Error::domain("output path has no file name"))?;
    let mut tmp_name = stem.to_os_string();
    tmp_name.push(format!(
        ".tmp{}.{}",
        std::process::id(),
        SEQ.fetch_add(1, std::sync::atomic::Ordering::Relaxed)
    ));
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    std::fs::write(&tmp, bytes)?;
    if let Err(e) = std::fs::rename(&tmp, path) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

// ---------------------------------------------------------------------
// Contact profile files.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileSchema {
    #[serde(default = "default_version")]
    v: u32,
    mu: f64,
    surface: SurfaceSchema,
    pressure: PressureSchema,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum SurfaceSchema {
    Parametric {
        id: String,
        #[serde(default)]
        params: ParamsSchema,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[[f64; 2]; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<[f64; 3]>,
    },
    Mesh {
        vertices: Vec<[f64; 3]>,
        faces: Vec<[usize; 3]>,
    },
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSchema {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum PressureSchema {
    Uniform {
        value: f64,
    },
    PowerLaw {
        k: f64,
        p0: f64,
        r_max: f64,
        mode: RadialMode,
        center: [f64; 3],
    },
    PerElement {
        values: Vec<f64>,
    },
}

fn surface_to_schema(surface: &Surface) -> Result<SurfaceSchema> {
    match surface {
        Surface::Parametric(s) => {
            if s.kind() == SurfaceKind::Custom {
                return Err(Error::domain(
                    "custom parametric surfaces have no parameter description and cannot be saved",
                ));
            }
            let (a, b, c) = s.shape();
            let o = s.offset();
            Ok(SurfaceSchema::Parametric {
                id: s.kind().id().to_string(),
                params: ParamsSchema {
                    a: Some(a),
                    b: Some(b),
                    c: Some(c),
                    scale: Some(s.scale()),
                },
                domain: Some(s.domain()),
                offset: Some([o.x, o.y, o.z]),
            })
        }
        Surface::Mesh(m) => Ok(SurfaceSchema::Mesh {
            vertices: m.vertices().iter().map(|p| [p.x, p.y, p.z]).collect(),
            faces: m.faces().to_vec(),
        }),
    }
}

fn surface_from_schema(schema: SurfaceSchema, path: &Path) -> Result<Surface> {
    match schema {
        SurfaceSchema::Parametric {
            id,
            params,
            domain,
            offset,
        } => {
            let kind = SurfaceKind::from_id(&id)?;
            if kind == SurfaceKind::Custom {
                return Err(Error::schema(
                    path.display().to_string(),
                    "surface id \"custom\" needs a programmatic evaluator and cannot be loaded",
                ));
            }
            let mut s = ParametricSurface::new(kind)?;
            let (da, db, dc) = s.shape();
            s = s.with_shape(
                params.a.unwrap_or(da),
                params.b.unwrap_or(db),
                params.c.unwrap_or(dc),
            )?;
            if let Some(d) = domain {
                s = s.with_domain(d)?;
            }
            if let Some(scale) = params.scale {
                s = s.with_scale(scale)?;
            }
            if let Some([x, y, z]) = offset {
                s = s.with_offset(Vector3::new(x, y, z));
            }
            Ok(Surface::Parametric(s))
        }
        SurfaceSchema::Mesh { vertices, faces } => {
            let verts = vertices
                .into_iter()
                .map(|[x, y, z]| Point3::new(x, y, z))
                .collect();
            Ok(Surface::Mesh(TriangleMesh::new(verts, faces)?))
        }
    }
}

fn pressure_to_schema(pressure: &PressureField) -> PressureSchema {
    match pressure {
        PressureField::Uniform { value } => PressureSchema::Uniform { value: *value },
        PressureField::PowerLaw {
            p0,
            k,
            r_max,
            mode,
            center,
        } => PressureSchema::PowerLaw {
            k: *k,
            p0: *p0,
            r_max: *r_max,
            mode: *mode,
            center: [center.x, center.y, center.z],
        },
        PressureField::PerElement { values } => PressureSchema::PerElement {
            values: values.clone(),
        },
    }
}

fn pressure_from_schema(schema: PressureSchema) -> PressureField {
    match schema {
        PressureSchema::Uniform { value } => PressureField::Uniform { value },
        PressureSchema::PowerLaw {
            k,
            p0,
            r_max,
            mode,
            center,
        } => PressureField::PowerLaw {
            p0,
            k,
            r_max,
            mode,
            center: Point3::new(center[0], center[1], center[2]),
        },
        PressureSchema::PerElement { values } => PressureField::PerElement { values },
    }
}

fn profile_to_schema(profile: &ContactProfile) -> Result<ProfileSchema> {
    Ok(ProfileSchema {
        v: SCHEMA_VERSION,
        mu: profile.mu(),
        surface: surface_to_schema(profile.surface())?,
        pressure: pressure_to_schema(profile.pressure()),
    })
}

fn profile_from_schema(schema: ProfileSchema, path: &Path) -> Result<ContactProfile> {
    let surface = surface_from_schema(schema.surface, path)?;
    let pressure = pressure_from_schema(schema.pressure);
    ContactProfile::new(surface, pressure, schema.mu)
}

/// Loads a contact profile file, enforcing all profile invariants.
pub fn load_profile(path: &Path) -> Result<ContactProfile> {
    let value = read_json_value(path)?;
    check_version(&value, path)?;
    profile_from_schema(decode(value, path)?, path)
}

/// Parses an inline profile object (as embedded in grasp files); the
/// version field is optional here but checked when present.
pub fn profile_from_value(value: serde_json::Value, context: &Path) -> Result<ContactProfile> {
    if value.get("v").is_some() {
        check_version(&value, context)?;
    }
    profile_from_schema(decode(value, context)?, context)
}

/// Saves a contact profile; custom parametric surfaces are rejected.
pub fn save_profile(path: &Path, profile: &ContactProfile) -> Result<()> {
    write_json(path, &profile_to_schema(profile)?)
}

/// Serializes a profile to an inline JSON object (for grasp files).
pub fn profile_to_value(profile: &ContactProfile) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(profile_to_schema(profile)?)?)
}

// ---------------------------------------------------------------------
// OBJ mesh import with a per-face pressure sidecar.

/// Reads a Wavefront OBJ (v/f records only; polygons fan-triangulated).
pub fn read_obj(path: &Path) -> Result<(Vec<Point3<f64>>, Vec<[usize; 3]>)> {
    let text = std::fs::read_to_string(path)?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let loc = |line: usize, msg: String| {
        Error::schema(format!("{}:{}", path.display(), line), msg)
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coords = [0.0; 3];
                for c in coords.iter_mut() {
                    let tok = parts
                        .next()
                        .ok_or_else(|| loc(line_no, "vertex needs three coordinates".into()))?;
                    *c = tok
                        .parse()
                        .map_err(|_| loc(line_no, format!("bad vertex coordinate {tok:?}")))?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut ids = Vec::new();
                for tok in parts {
                    // "7", "7/1" and "7/1/3" all reference vertex 7.
                    let v = tok.split('/').next().unwrap_or("");
                    let n: isize = v
                        .parse()
                        .map_err(|_| loc(line_no, format!("bad face index {tok:?}")))?;
                    let resolved = if n > 0 {
                        (n - 1) as usize
                    } else if n < 0 && vertices.len() as isize + n >= 0 {
                        (vertices.len() as isize + n) as usize
                    } else {
                        return Err(loc(line_no, format!("face index {n} out of range")));
                    };
                    ids.push(resolved);
                }
                if ids.len() < 3 {
                    return Err(loc(line_no, "face needs at least three vertices".into()));
                }
                for k in 1..ids.len() - 1 {
                    faces.push([ids[0], ids[k], ids[k + 1]]);
                }
            }
            // Normals, texcoords, groups, materials: ignored.
            _ => {}
        }
    }
    if faces.is_empty() {
        return Err(Error::schema(
            path.display().to_string(),
            "OBJ contains no faces",
        ));
    }
    Ok((vertices, faces))
}

/// Reads a one-column CSV of per-face pressures (optional `pressure`
/// header).
pub fn read_face_pressures(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_path(path)?;
    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?;
        let field = record
            .get(0)
            .ok_or_else(|| Error::schema(path.display().to_string(), "empty record"))?
            .trim();
        if idx == 0 && field.eq_ignore_ascii_case("pressure") {
            continue;
        }
        let v: f64 = field.parse().map_err(|_| {
            Error::schema(
                format!("{}:{}", path.display(), idx + 1),
                format!("bad pressure value {field:?}"),
            )
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::schema(
            path.display().to_string(),
            "pressure CSV has no values",
        ));
    }
    Ok(out)
}

/// Assembles a mesh profile from an OBJ file and a per-face pressure
/// CSV.
pub fn load_obj_profile(obj: &Path, pressures: &Path, mu: f64) -> Result<ContactProfile> {
    let (vertices, faces) = read_obj(obj)?;
    let values = read_face_pressures(pressures)?;
    let (mesh, values) = TriangleMesh::with_face_data(vertices, faces, values)?;
    ContactProfile::new(
        Surface::Mesh(mesh),
        PressureField::PerElement { values },
        mu,
    )
}

// ---------------------------------------------------------------------
// Canonical content key.

/// Fixed float formatting for canonical strings: 17 significant digits
/// round-trip every finite f64; negative zero collapses onto zero so
/// algebraically identical inputs agree.
fn push_canonical_f64(out: &mut String, x: f64) {
    let x = if x == 0.0 { 0.0 } else { x };
    let _ = write!(out, "{x:.17e}");
}

fn push_canonical_slice(out: &mut String, xs: &[f64]) {
    out.push('[');
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_canonical_f64(out, x);
    }
    out.push(']');
}

fn canonical_surface(out: &mut String, surface: &Surface) -> Result<()> {
    match surface {
        Surface::Parametric(s) => {
            if s.kind() == SurfaceKind::Custom {
                return Err(Error::domain(
                    "custom parametric surfaces have no canonical form",
                ));
            }
            let (a, b, c) = s.shape();
            let [[u0, u1], [v0, v1]] = s.domain();
            let o = s.offset();
            let _ = write!(out, "{{\"type\":\"parametric\",\"id\":\"{}\",\"a\":", s.kind().id());
            push_canonical_f64(out, a);
            out.push_str(",\"b\":");
            push_canonical_f64(out, b);
            out.push_str(",\"c\":");
            push_canonical_f64(out, c);
            out.push_str(",\"scale\":");
            push_canonical_f64(out, s.scale());
            out.push_str(",\"domain\":");
            push_canonical_slice(out, &[u0, u1, v0, v1]);
            out.push_str(",\"offset\":");
            push_canonical_slice(out, &[o.x, o.y, o.z]);
            out.push('}');
        }
        Surface::Mesh(m) => {
            out.push_str("{\"type\":\"mesh\",\"vertices\":[");
            for (i, p) in m.vertices().iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                push_canonical_slice(out, &[p.x, p.y, p.z]);
            }
            out.push_str("],\"faces\":[");
            for (i, f) in m.faces().iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "[{},{},{}]", f[0], f[1], f[2]);
            }
            out.push_str("]}");
        }
    }
    Ok(())
}

fn canonical_pressure(out: &mut String, pressure: &PressureField) {
    match pressure {
        PressureField::Uniform { value } => {
            out.push_str("{\"type\":\"uniform\",\"value\":");
            push_canonical_f64(out, *value);
            out.push('}');
        }
        PressureField::PowerLaw {
            p0,
            k,
            r_max,
            mode,
            center,
        } => {
            out.push_str("{\"type\":\"power_law\",\"k\":");
            push_canonical_f64(out, *k);
            out.push_str(",\"p0\":");
            push_canonical_f64(out, *p0);
            out.push_str(",\"r_max\":");
            push_canonical_f64(out, *r_max);
            let mode = match mode {
                RadialMode::Line => "line",
                RadialMode::Point => "point",
            };
            let _ = write!(out, ",\"mode\":\"{mode}\",\"center\":");
            push_canonical_slice(out, &[center.x, center.y, center.z]);
            out.push('}');
        }
        PressureField::PerElement { values } => {
            out.push_str("{\"type\":\"per_element\",\"values\":");
            push_canonical_slice(out, values);
            out.push('}');
        }
    }
}

/// Canonical content key for a contact's constraint set: the profile is
/// moved to its pressure-centered frame and its pressure normalized to
/// unit total force, then rendered to a fixed-order, fixed-format JSON
/// string together with the friction coefficient and the pipeline
/// parameters (model family, direction count, twist sampling,
/// quadrature order); the key is the SHA-256 hex digest of that string.
///
/// Scaling the pressure field by a power of two leaves the key
/// unchanged (normalization divides it out exactly).
pub fn canonical_key(
    profile: &ContactProfile,
    kind: ModelKind,
    directions: usize,
    sampling: &TwistSampling,
    quad: &Quadrature,
) -> Result<CanonicalProfileKey> {
    let (centered, _) = to_local_contact_frame(profile, quad)?;
    let (normalized, _) = normalize_pressure(&centered, quad)?;
    let mut s = String::with_capacity(512);
    s.push_str("{\"mu\":");
    push_canonical_f64(&mut s, normalized.mu());
    s.push_str(",\"surface\":");
    canonical_surface(&mut s, normalized.surface())?;
    s.push_str(",\"pressure\":");
    canonical_pressure(&mut s, normalized.pressure());
    let _ = write!(
        s,
        ",\"model\":\"{}\",\"directions\":{directions},\"twists\":{},\"seed\":{},\"quadrature\":{}}}",
        kind.as_str(),
        sampling.count,
        sampling.seed,
        quad.order(),
    );
    Ok(crate::linearize::ConstraintCache::digest(s.as_bytes()))
}

// ---------------------------------------------------------------------
// Model files.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSchema {
    #[serde(default = "default_version")]
    v: u32,
    kind: String,
    dim: usize,
    #[serde(rename = "A")]
    a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    monomial_order: Option<String>,
    fit_error: f64,
    certificate_residual: f64,
}

/// Saves a fitted model: the ellipsoid form matrix row-major, or the
/// quartic coefficients in graded lexicographic monomial order.
pub fn save_model(path: &Path, model: &LimitSurfaceModel, fit_error: f64) -> Result<()> {
    let schema = match model {
        LimitSurfaceModel::Ellipsoid(m) => ModelSchema {
            v: SCHEMA_VERSION,
            kind: "ellipsoid".into(),
            dim: m.dim(),
            a: m
                .matrix()
                .row_iter()
                .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
                .collect(),
            monomial_order: None,
            fit_error,
            certificate_residual: 0.0,
        },
        LimitSurfaceModel::Quartic(m) => ModelSchema {
            v: SCHEMA_VERSION,
            kind: "quartic".into(),
            dim: m.dim(),
            a: m.coefficients().iter().copied().collect(),
            monomial_order: Some("grlex".into()),
            fit_error,
            certificate_residual: m.certificate_residual(),
        },
    };
    write_json(path, &schema)
}

/// Loads a model file; returns the model and its recorded fit error.
pub fn load_model(path: &Path) -> Result<(LimitSurfaceModel, f64)> {
    let value = read_json_value(path)?;
    check_version(&value, path)?;
    let schema: ModelSchema = decode(value, path)?;
    let model = match schema.kind.as_str() {
        "ellipsoid" => {
            if schema.a.len() != schema.dim * schema.dim {
                return Err(Error::schema(
                    path.display().to_string(),
                    format!(
                        "ellipsoid \"A\" needs {} entries, found {}",
                        schema.dim * schema.dim,
                        schema.a.len()
                    ),
                ));
            }
            let m = nalgebra::DMatrix::from_row_slice(schema.dim, schema.dim, &schema.a);
            LimitSurfaceModel::Ellipsoid(EllipsoidModel::from_matrix(m)?)
        }
        "quartic" => {
            match schema.monomial_order.as_deref() {
                Some("grlex") => {}
                other => {
                    return Err(Error::schema(
                        path.display().to_string(),
                        format!("unsupported monomial order {other:?}; expected \"grlex\""),
                    ));
                }
            }
            LimitSurfaceModel::Quartic(QuarticModel::from_coefficients(
                schema.dim,
                DVector::from_vec(schema.a),
            )?)
        }
        other => {
            return Err(Error::schema(
                path.display().to_string(),
                format!("unknown model kind {other:?}"),
            ));
        }
    };
    Ok((model, schema.fit_error))
}

// ---------------------------------------------------------------------
// Constraint-set and cached-contact files.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintSchema {
    #[serde(default = "default_version")]
    v: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w_max: Option<Vec<f64>>,
    normalized: bool,
    vertices: Vec<Vec<f64>>,
    // Cached-contact extras.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w_perp: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    total_force: Option<f64>,
}

fn constraint_schema(set: &ConstraintSet, key: Option<&str>) -> ConstraintSchema {
    ConstraintSchema {
        v: SCHEMA_VERSION,
        key: key.map(str::to_string),
        w_max: set.w_max().map(|s| s.iter().copied().collect()),
        normalized: set.is_normalized(),
        vertices: set
            .vertices()
            .iter()
            .map(|v| v.iter().copied().collect())
            .collect(),
        w_perp: None,
        total_force: None,
    }
}

fn constraint_from_schema(schema: &ConstraintSchema, path: &Path) -> Result<ConstraintSet> {
    let Some(first) = schema.vertices.first() else {
        return Err(Error::schema(
            path.display().to_string(),
            "constraint set has no vertices",
        ));
    };
    let dim = first.len();
    let vertices = schema
        .vertices
        .iter()
        .map(|v| DVector::from_column_slice(v))
        .collect();
    let w_max = schema
        .w_max
        .as_ref()
        .map(|s| DVector::from_column_slice(s));
    ConstraintSet::from_parts(dim, vertices, schema.normalized, w_max)
}

/// Saves a constraint set, optionally tagged with its content key.
pub fn save_constraints(path: &Path, set: &ConstraintSet, key: Option<&str>) -> Result<()> {
    write_json(path, &constraint_schema(set, key))
}

/// Loads a constraint set plus its content key, if one was recorded.
pub fn load_constraints(path: &Path) -> Result<(ConstraintSet, Option<String>)> {
    let value = read_json_value(path)?;
    check_version(&value, path)?;
    let schema: ConstraintSchema = decode(value, path)?;
    let set = constraint_from_schema(&schema, path)?;
    Ok((set, schema.key))
}

/// Saves a cache record: denormalized constraints plus the unit-force
/// normal wrench and total pressure force of the producing contact.
pub fn write_cached_contact(path: &Path, key: &str, record: &CachedContact) -> Result<()> {
    if record.constraints.is_normalized() {
        return Err(Error::domain(
            "cache records must hold denormalized constraints",
        ));
    }
    let mut schema = constraint_schema(&record.constraints, Some(key));
    let w = record.normal_wrench.as_vector6();
    schema.w_perp = Some(w.iter().copied().collect());
    schema.total_force = Some(record.total_force);
    write_json(path, &schema)
}

/// Loads a cache record written by [`write_cached_contact`].
pub fn read_cached_contact(path: &Path) -> Result<CachedContact> {
    let value = read_json_value(path)?;
    check_version(&value, path)?;
    let schema: ConstraintSchema = decode(value, path)?;
    let constraints = constraint_from_schema(&schema, path)?;
    let missing = |field: &str| {
        Error::schema(
            path.display().to_string(),
            format!("cache record is missing {field:?}"),
        )
    };
    let w_perp = schema.w_perp.ok_or_else(|| missing("w_perp"))?;
    if w_perp.len() != 6 {
        return Err(Error::schema(
            path.display().to_string(),
            "w_perp needs six components",
        ));
    }
    let total_force = schema.total_force.ok_or_else(|| missing("total_force"))?;
    Ok(CachedContact {
        constraints,
        normal_wrench: Wrench6::from_vector6(&Vector6::from_column_slice(&w_perp)),
        total_force,
    })
}

// ---------------------------------------------------------------------
// Grasp files.

/// A contact's limit surface source: an inline profile or a cache key.
#[derive(Debug, Clone)]
pub enum ProfileRef {
    Inline(ContactProfile),
    Key(CanonicalProfileKey),
}

/// One contact of a grasp: profile source, object-frame placement, and
/// force scaling mode.
#[derive(Debug, Clone)]
pub struct GraspContactSpec {
    pub profile: ProfileRef,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub force: ForceScale,
}

/// A grasp prediction problem: contacts, external wrench, model family
/// and constraint direction count.
#[derive(Debug, Clone)]
pub struct GraspSpec {
    pub contacts: Vec<GraspContactSpec>,
    pub w_ext: Vector6<f64>,
    pub model: ModelKind,
    pub directions: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraspSchema {
    #[serde(default = "default_version")]
    v: u32,
    contacts: Vec<GraspContactSchema>,
    w_ext: Vec<f64>,
    model: String,
    #[serde(rename = "M")]
    m: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraspContactSchema {
    profile: serde_json::Value,
    #[serde(rename = "R")]
    r: [[f64; 3]; 3],
    t: [f64; 3],
    force: ForceSchema,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum ForceSchema {
    Integral,
    Sensor {
        #[serde(rename = "F_s")]
        f_s: f64,
    },
}

fn grasp_from_schema(schema: GraspSchema, path: &Path) -> Result<GraspSpec> {
    if schema.contacts.is_empty() {
        return Err(Error::schema(
            path.display().to_string(),
            "grasp needs at least one contact",
        ));
    }
    if schema.w_ext.len() != 6 {
        return Err(Error::schema(
            path.display().to_string(),
            "w_ext needs six components",
        ));
    }
    let model: ModelKind = schema.model.parse()?;
    let mut contacts = Vec::with_capacity(schema.contacts.len());
    for c in schema.contacts {
        let profile = match c.profile {
            serde_json::Value::String(key) => ProfileRef::Key(key),
            obj @ serde_json::Value::Object(_) => {
                ProfileRef::Inline(profile_from_value(obj, path)?)
            }
            other => {
                return Err(Error::schema(
                    path.display().to_string(),
                    format!(
                        "contact profile must be an object or a cache key string, found {other}"
                    ),
                ));
            }
        };
        let rotation = Matrix3::from_fn(|i, j| c.r[i][j]);
        contacts.push(GraspContactSpec {
            profile,
            rotation,
            translation: Vector3::new(c.t[0], c.t[1], c.t[2]),
            force: match c.force {
                ForceSchema::Integral => ForceScale::Integral,
                ForceSchema::Sensor { f_s } => ForceScale::Sensor { f_s },
            },
        });
    }
    Ok(GraspSpec {
        contacts,
        w_ext: Vector6::from_column_slice(&schema.w_ext),
        model,
        directions: schema.m,
    })
}

fn grasp_to_schema(grasp: &GraspSpec) -> Result<GraspSchema> {
    let mut contacts = Vec::with_capacity(grasp.contacts.len());
    for c in &grasp.contacts {
        let profile = match &c.profile {
            ProfileRef::Inline(p) => profile_to_value(p)?,
            ProfileRef::Key(k) => serde_json::Value::String(k.clone()),
        };
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = c.rotation[(i, j)];
            }
        }
        contacts.push(GraspContactSchema {
            profile,
            r,
            t: [c.translation.x, c.translation.y, c.translation.z],
            force: match c.force {
                ForceScale::Integral => ForceSchema::Integral,
                ForceScale::Sensor { f_s } => ForceSchema::Sensor { f_s },
            },
        });
    }
    Ok(GraspSchema {
        v: SCHEMA_VERSION,
        contacts,
        w_ext: grasp.w_ext.iter().copied().collect(),
        model: grasp.model.as_str().to_string(),
        m: grasp.directions,
    })
}

/// Loads a grasp specification.
pub fn load_grasp(path: &Path) -> Result<GraspSpec> {
    let value = read_json_value(path)?;
    check_version(&value, path)?;
    grasp_from_schema(decode(value, path)?, path)
}

/// Saves a grasp specification.
pub fn save_grasp(path: &Path, grasp: &GraspSpec) -> Result<()> {
    write_json(path, &grasp_to_schema(grasp)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchSchema {
    #[serde(default = "default_version")]
    v: u32,
    items: Vec<BatchItemSchema>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchItemSchema {
    grasp: GraspSchema,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<u8>,
}

/// Loads a batch of grasps with optional ground-truth labels (0 or 1).
pub fn load_batch(path: &Path) -> Result<Vec<(GraspSpec, Option<bool>)>> {
    let value = read_json_value(path)?;
    check_version(&value, path)?;
    let schema: BatchSchema = decode(value, path)?;
    if schema.items.is_empty() {
        return Err(Error::schema(
            path.display().to_string(),
            "batch has no items",
        ));
    }
    let mut out = Vec::with_capacity(schema.items.len());
    for item in schema.items {
        let label = match item.label {
            None => None,
            Some(0) => Some(false),
            Some(1) => Some(true),
            Some(other) => {
                return Err(Error::schema(
                    path.display().to_string(),
                    format!("label must be 0 or 1, found {other}"),
                ));
            }
        };
        out.push((grasp_from_schema(item.grasp, path)?, label));
    }
    Ok(out)
}

/// Saves a batch of grasps with optional labels.
pub fn save_batch(path: &Path, items: &[(GraspSpec, Option<bool>)]) -> Result<()> {
    let mut schema_items = Vec::with_capacity(items.len());
    for (grasp, label) in items {
        schema_items.push(BatchItemSchema {
            grasp: grasp_to_schema(grasp)?,
            label: label.map(u8::from),
        });
    }
    write_json(
        path,
        &BatchSchema {
            v: SCHEMA_VERSION,
            items: schema_items,
        },
    )
}

// ---------------------------------------------------------------------
// CSV exports.

fn twist_fields(twist: &UnitTwist) -> (&'static str, Vector3<f64>, Vector3<f64>, f64) {
    match twist {
        UnitTwist::Rotational { line, pitch } => {
            ("rotation", line.direction(), line.moment(), *pitch)
        }
        UnitTwist::Translational { direction } => {
            ("translation", *direction, Vector3::zeros(), 0.0)
        }
    }
}

/// Writes wrenches with their generating twists:
/// `fx,fy,fz,tx,ty,tz,kind,ex,ey,ez,mx,my,mz,h`.
pub fn write_wrench_csv(path: &Path, rows: &[(UnitTwist, Wrench6)]) -> Result<()> {
    let mut out = String::from("fx,fy,fz,tx,ty,tz,kind,ex,ey,ez,mx,my,mz,h\n");
    for (twist, wrench) in rows {
        let w = wrench.as_vector6();
        let (kind, e, m, h) = twist_fields(twist);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{kind},{},{},{},{},{},{},{h}",
            w[0], w[1], w[2], w[3], w[4], w[5], e.x, e.y, e.z, m.x, m.y, m.z
        );
    }
    write_atomic(path, out.as_bytes())
}

/// Reads the wrench columns back from a wrench CSV (twist columns, if
/// present, are ignored).
pub fn read_wrench_csv(path: &Path) -> Result<Vec<Wrench6>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?
        .clone();
    let expected = ["fx", "fy", "fz", "tx", "ty", "tz"];
    for (k, name) in expected.iter().enumerate() {
        if headers.get(k).map(str::trim) != Some(*name) {
            return Err(Error::schema(
                path.display().to_string(),
                format!("wrench CSV must start with columns {expected:?}"),
            ));
        }
    }
    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?;
        let mut v = Vector6::zeros();
        for k in 0..6 {
            let field = record.get(k).unwrap_or("").trim();
            v[k] = field.parse().map_err(|_| {
                Error::schema(
                    format!("{}:{}", path.display(), idx + 2),
                    format!("bad wrench value {field:?}"),
                )
            })?;
        }
        out.push(Wrench6::from_vector6(&v));
    }
    if out.is_empty() {
        return Err(Error::schema(
            path.display().to_string(),
            "wrench CSV has no data rows",
        ));
    }
    Ok(out)
}

/// Debug export of a twist set: `kind,ex,ey,ez,mx,my,mz,h`.
pub fn write_twist_csv(path: &Path, twists: &[UnitTwist]) -> Result<()> {
    let mut out = String::from("kind,ex,ey,ez,mx,my,mz,h\n");
    for twist in twists {
        let (kind, e, m, h) = twist_fields(twist);
        let _ = writeln!(
            out,
            "{kind},{},{},{},{},{},{},{h}",
            e.x, e.y, e.z, m.x, m.y, m.z
        );
    }
    write_atomic(path, out.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WMaxSchema {
    #[serde(default = "default_version")]
    v: u32,
    w_max: Vec<f64>,
}

/// Saves per-dimension wrench bounds alongside a wrench CSV.
pub fn save_w_max(path: &Path, w_max: &Wrench6) -> Result<()> {
    write_json(
        path,
        &WMaxSchema {
            v: SCHEMA_VERSION,
            w_max: w_max.as_vector6().iter().copied().collect(),
        },
    )
}

/// Loads wrench bounds written by [`save_w_max`].
pub fn load_w_max(path: &Path) -> Result<Wrench6> {
    let value = read_json_value(path)?;
    check_version(&value, path)?;
    let schema: WMaxSchema = decode(value, path)?;
    if schema.w_max.len() != 6 {
        return Err(Error::schema(
            path.display().to_string(),
            "w_max needs six components",
        ));
    }
    Ok(Wrench6::from_vector6(&Vector6::from_column_slice(
        &schema.w_max,
    )))
}

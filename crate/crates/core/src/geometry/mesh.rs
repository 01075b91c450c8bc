use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

use super::parametric::ParametricSurface;

/// Triangulated contact patch with per-face centers, unit normals, and
/// areas precomputed. Faces with area below 1e-14 are dropped on
/// construction (with a warning) so downstream integrals never see a
/// zero-length normal.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    centers: Vec<Point3<f64>>,
    normals: Vec<Vector3<f64>>,
    areas: Vec<f64>,
}

impl TriangleMesh {
    pub const DEGENERATE_AREA: f64 = 1e-14;

    /// Builds a mesh from shared vertices and index triples. Face winding
    /// defines orientation: the normal is `(v1 - v0) x (v2 - v0)`
    /// normalized.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::degenerate("mesh has no faces"));
        }
        for (i, f) in faces.iter().enumerate() {
            for &idx in f {
                if idx >= vertices.len() {
                    return Err(Error::domain(format!(
                        "face {i} references vertex {idx}, mesh has {}",
                        vertices.len()
                    )));
                }
            }
        }
        let mut kept = Vec::with_capacity(faces.len());
        let mut centers = Vec::with_capacity(faces.len());
        let mut normals = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        let mut dropped = 0usize;
        for f in faces {
            let [a, b, c] = [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            if area < Self::DEGENERATE_AREA {
                dropped += 1;
                continue;
            }
            kept.push(f);
            centers.push(Point3::from((a.coords + b.coords + c.coords) / 3.0));
            normals.push(cross / cross.norm());
            areas.push(area);
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} degenerate mesh faces (area < 1e-14)");
        }
        if kept.is_empty() {
            return Err(Error::degenerate("all mesh faces are degenerate"));
        }
        Ok(Self {
            vertices,
            faces: kept,
            centers,
            normals,
            areas,
        })
    }

    /// Like [`TriangleMesh::new`] but keeps a per-face data column in
    /// sync with the degenerate-face filter.
    pub fn with_face_data(
        vertices: Vec<Point3<f64>>,
        faces: Vec<[usize; 3]>,
        data: Vec<f64>,
    ) -> Result<(Self, Vec<f64>)> {
        if data.len() != faces.len() {
            return Err(Error::domain(format!(
                "face data has {} entries for {} faces",
                data.len(),
                faces.len()
            )));
        }
        let mesh = Self::new(vertices.clone(), faces.clone())?;
        if mesh.face_count() == faces.len() {
            return Ok((mesh, data));
        }
        // Re-run the filter to keep the data aligned with kept faces.
        let mut kept_data = Vec::with_capacity(mesh.face_count());
        for (f, d) in faces.iter().zip(data) {
            let [a, b, c] = [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
            if 0.5 * (b - a).cross(&(c - a)).norm() >= Self::DEGENERATE_AREA {
                kept_data.push(d);
            }
        }
        Ok((mesh, kept_data))
    }

    #[must_use]
    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    #[must_use]
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    #[must_use]
    pub fn centers(&self) -> &[Point3<f64>] {
        &self.centers
    }

    #[must_use]
    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    #[must_use]
    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    #[must_use]
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    #[must_use]
    pub fn total_area(&self) -> f64 {
        crate::quad::pairwise_sum_scalar(&self.areas)
    }

    /// Vertex bounding box.
    #[must_use]
    pub fn bounds(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(&v.coords);
            hi = hi.sup(&v.coords);
        }
        (Point3::from(lo), Point3::from(hi))
    }

    /// Same mesh translated by `d`.
    #[must_use]
    pub fn translated(&self, d: &Vector3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + d).collect(),
            faces: self.faces.clone(),
            centers: self.centers.iter().map(|c| c + d).collect(),
            normals: self.normals.clone(),
            areas: self.areas.clone(),
        }
    }
}

/// Triangulates a parametric patch on a regular (u, v) grid sized to
/// approximately `target_triangles`, orienting faces to match the
/// parametric normal. Degenerate cells (sphere poles, paraboloid apex)
/// collapse and are dropped, so the realized count can come in slightly
/// under the target; read it back from the mesh.
pub fn mesh_parametric(surface: &ParametricSurface, target_triangles: usize) -> Result<TriangleMesh> {
    if target_triangles < 2 {
        return Err(Error::domain("target triangle count must be at least 2"));
    }
    let [[u0, u1], [v0, v1]] = surface.domain();
    // Split cells between the axes in proportion to the parameter extents.
    let ratio = (u1 - u0) / (v1 - v0);
    let cells = (target_triangles as f64 / 2.0).max(1.0);
    let nv = (cells / ratio).sqrt().round().max(1.0) as usize;
    let nu = ((cells / nv as f64).round().max(1.0)) as usize;

    let mut vertices = Vec::with_capacity((nu + 1) * (nv + 1));
    for i in 0..=nu {
        let u = u0 + (u1 - u0) * i as f64 / nu as f64;
        for j in 0..=nv {
            let v = v0 + (v1 - v0) * j as f64 / nv as f64;
            vertices.push(surface.eval(u, v));
        }
    }
    let idx = |i: usize, j: usize| i * (nv + 1) + j;
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let mesh = TriangleMesh::new(vertices, faces)?;

    // Align winding with the parametric orientation, probing a face whose
    // normal is well defined.
    let probe = mesh
        .faces()
        .iter()
        .position(|f| {
            let [a, b, c] = [mesh.vertices()[f[0]], mesh.vertices()[f[1]], mesh.vertices()[f[2]]];
            (b - a).cross(&(c - a)).norm() > 1e-10
        })
        .ok_or_else(|| Error::degenerate("mesh has no usable probe face"))?;
    let center = mesh.centers()[probe];
    // Find the (u, v) cell of the probe face by brute-force nearest grid
    // cell center; adequate because we only need the normal's sign.
    let mut best = (f64::INFINITY, 0.5 * (u0 + u1), 0.5 * (v0 + v1));
    for i in 0..nu {
        let u = u0 + (u1 - u0) * (i as f64 + 0.5) / nu as f64;
        for j in 0..nv {
            let v = v0 + (v1 - v0) * (j as f64 + 0.5) / nv as f64;
            let d = (surface.eval(u, v) - center).norm();
            if d < best.0 {
                best = (d, u, v);
            }
        }
    }
    let reference = surface.normal(best.1, best.2)?;
    if mesh.normals()[probe].dot(&reference) < 0.0 {
        let flipped = mesh.faces.iter().map(|f| [f[0], f[2], f[1]]).collect();
        return TriangleMesh::new(mesh.vertices, flipped);
    }
    Ok(mesh)
}

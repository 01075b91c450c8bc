//! Linearization of a fitted limit surface into convex-polytope
//! constraints.
//!
//! Rays through a deterministic grid on the unit-cube surface are
//! intersected with the model surface `f(w) = 1`; the hit points are the
//! vertices of an inner polytopal approximation. Vertices are computed
//! in normalized wrench coordinates and rescaled by the per-dimension
//! wrench bounds for downstream use.

use nalgebra::DVector;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::exec::try_par_map;
use crate::fit::LimitSurfaceModel;
use crate::wrench::Wrench6;

/// Admissible direction counts (grid resolution, point count) up to
/// `max_count`. For resolution `g` the cube surface carries
/// `g^d - (g-2)^d` grid points; even resolutions lack the face centers,
/// so the signed axis directions are appended to keep them in every set.
#[must_use]
pub fn admissible_direction_counts(dim: usize, max_count: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for grid in 2usize.. {
        let count = direction_count(dim, grid);
        if count > max_count {
            break;
        }
        out.push((grid, count));
    }
    out
}

/// Number of directions produced at a given cube grid resolution.
#[must_use]
pub fn direction_count(dim: usize, grid: usize) -> usize {
    let surface = grid.pow(dim as u32) - (grid - 2).pow(dim as u32);
    if grid % 2 == 0 {
        surface + 2 * dim
    } else {
        surface
    }
}

/// Smallest grid resolution whose direction count is exactly `count`.
pub fn grid_for_count(dim: usize, count: usize) -> Result<usize> {
    for grid in 2usize.. {
        let c = direction_count(dim, grid);
        if c == count {
            return Ok(grid);
        }
        if c > count {
            break;
        }
    }
    let menu: Vec<usize> = admissible_direction_counts(dim, 200_000)
        .iter()
        .map(|&(_, c)| c)
        .collect();
    Err(Error::domain(format!(
        "no cube grid in {dim} dimensions yields {count} directions; admissible counts start {menu:?}"
    )))
}

/// `count` evenly spread ray directions on the surface of `[-1, 1]^dim`;
/// `count` must come from the admissible menu (see
/// [`admissible_direction_counts`]). The signed axis directions are
/// always included.
pub fn sample_hypercube_surface(dim: usize, count: usize) -> Result<Vec<DVector<f64>>> {
    sample_hypercube_grid(dim, grid_for_count(dim, count)?)
}

/// Deterministic ray directions: all grid points on the surface of the
/// cube `[-1, 1]^dim` at the given resolution (coordinates are exactly
/// -1 or 1 on the touching faces), in lexicographic index order. Even
/// resolutions append the signed axis directions.
pub fn sample_hypercube_grid(dim: usize, grid: usize) -> Result<Vec<DVector<f64>>> {
    if dim < 2 {
        return Err(Error::domain("direction grid needs dim >= 2"));
    }
    if grid < 2 {
        return Err(Error::domain("cube grid resolution must be at least 2"));
    }
    let coord = |k: usize| -> f64 {
        if k == 0 {
            -1.0
        } else if k == grid - 1 {
            1.0
        } else {
            -1.0 + 2.0 * k as f64 / (grid - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(direction_count(dim, grid));
    let mut idx = vec![0usize; dim];
    loop {
        if idx.iter().any(|&k| k == 0 || k == grid - 1) {
            out.push(DVector::from_iterator(dim, idx.iter().map(|&k| coord(k))));
        }
        // Odometer increment.
        let mut p = dim;
        loop {
            if p == 0 {
                if grid % 2 == 0 {
                    for j in 0..dim {
                        for sign in [1.0, -1.0] {
                            let mut v = DVector::zeros(dim);
                            v[j] = sign;
                            out.push(v);
                        }
                    }
                }
                return Ok(out);
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < grid {
                break;
            }
            idx[p] = 0;
        }
    }
}

/// Scale `gamma > 0` with `f(gamma s) = 1`, by Newton iteration on the
/// scalar `g(gamma) = f(gamma s) - 1` from `gamma = 1`. Both model
/// families are convex and positive along rays, so the iteration is
/// globally convergent; it is polished to `|f - 1| <= 1e-12`.
pub fn ray_intersect_ls(model: &LimitSurfaceModel, direction: &DVector<f64>) -> Result<f64> {
    let f_dir = model.value(direction.as_slice())?;
    if !(f_dir > 1e-12) {
        return Err(Error::degenerate(format!(
            "limit surface is flat along the ray (f = {f_dir:.3e}); no intersection"
        )));
    }
    let mut gamma = 1.0f64;
    for _ in 0..100 {
        let point: Vec<f64> = direction.iter().map(|&x| gamma * x).collect();
        let err = model.value(&point)? - 1.0;
        if err.abs() <= 1e-12 {
            return Ok(gamma);
        }
        let slope = model.gradient(&point)?.dot(direction);
        if !(slope > 0.0) {
            return Err(Error::numerical(
                "ray intersection lost monotonicity; model may be degenerate",
            ));
        }
        gamma -= err / slope;
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::numerical("ray intersection diverged"));
        }
    }
    Err(Error::NoConvergence {
        context: "ray intersection".into(),
        residual: f64::NAN,
    })
}

/// Vertices of an inner polytopal approximation of a limit surface,
/// either in normalized (dimensionless) or denormalized (wrench-unit)
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    dim: usize,
    vertices: Vec<DVector<f64>>,
    normalized: bool,
    /// Per-dimension wrench bounds; set once denormalized.
    w_max: Option<DVector<f64>>,
}

impl ConstraintSet {
    /// Assembles a set from parts (deserialization path). At least
    /// `2 * dim` vertices are required so the axis directions can be
    /// represented.
    pub fn from_parts(
        dim: usize,
        vertices: Vec<DVector<f64>>,
        normalized: bool,
        w_max: Option<DVector<f64>>,
    ) -> Result<Self> {
        if vertices.len() < 2 * dim {
            return Err(Error::domain(format!(
                "constraint set needs at least {} vertices, got {}",
                2 * dim,
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::dimension("constraint vertex dimension mismatch"));
        }
        if let Some(s) = &w_max {
            if s.len() != dim {
                return Err(Error::dimension("constraint w_max dimension mismatch"));
            }
        }
        if normalized && w_max.is_some() {
            return Err(Error::domain(
                "a normalized constraint set cannot carry applied bounds",
            ));
        }
        if !normalized && w_max.is_none() {
            return Err(Error::domain(
                "a denormalized constraint set must carry its bounds",
            ));
        }
        Ok(Self {
            dim,
            vertices,
            normalized,
            w_max,
        })
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// True while vertices are in normalized (dimensionless) units.
    #[must_use]
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// The bounds applied during denormalization, if any.
    #[must_use]
    pub fn w_max(&self) -> Option<&DVector<f64>> {
        self.w_max.as_ref()
    }
}

/// Intersects every direction with the model surface. All vertices land
/// on `f = 1` within the Newton tolerance.
pub fn linearize_ls(
    model: &LimitSurfaceModel,
    directions: &[DVector<f64>],
) -> Result<ConstraintSet> {
    let dim = model.dim();
    if directions.len() < 2 * dim {
        return Err(Error::domain(format!(
            "need at least {} ray directions, got {}",
            2 * dim,
            directions.len()
        )));
    }
    if directions.iter().any(|d| d.len() != dim) {
        return Err(Error::dimension("ray direction dimension mismatch"));
    }
    let vertices = try_par_map(directions, |d| {
        Ok::<_, Error>(ray_intersect_ls(model, d)? * d)
    })?;
    Ok(ConstraintSet {
        dim,
        vertices,
        normalized: true,
        w_max: None,
    })
}

/// Maps normalized vertices to wrench units by the componentwise product
/// with the per-dimension bounds. Rejects already-denormalized sets.
pub fn denormalize_constraints(set: &ConstraintSet, w_max: &DVector<f64>) -> Result<ConstraintSet> {
    if !set.normalized {
        return Err(Error::domain("constraint set is already denormalized"));
    }
    if w_max.len() != set.dim {
        return Err(Error::dimension("wrench bound dimension mismatch"));
    }
    if w_max.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::domain("wrench bounds must be positive and finite"));
    }
    let vertices = set
        .vertices
        .iter()
        .map(|v| v.component_mul(w_max))
        .collect();
    Ok(ConstraintSet {
        dim: set.dim,
        vertices,
        normalized: false,
        w_max: Some(w_max.clone()),
    })
}

/// A cached per-contact record: the denormalized constraint set plus the
/// unit-force normal wrench and the pressure integral it was built with,
/// so a grasp can be assembled from the cache alone.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedContact {
    pub constraints: ConstraintSet,
    pub normal_wrench: Wrench6,
    pub total_force: f64,
}

/// Content-addressed store of per-contact constraint records keyed by a
/// digest of the producing inputs. Writes are atomic (temp + rename);
/// unreadable entries are treated as misses with a warning so corrupt
/// files trigger recomputation rather than failure.
#[derive(Debug, Clone)]
pub struct ConstraintCache {
    dir: PathBuf,
}

impl ConstraintCache {
    /// Opens (creating if needed) a cache directory.
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    #[must_use]
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex digest of a canonical byte string describing the inputs (see
    /// [`crate::io::canonical_key`] for the pipeline's key derivation).
    #[must_use]
    pub fn digest(canonical: &[u8]) -> String {
        let mut hasher = Sha256::new();
        hasher.update(canonical);
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            use std::fmt::Write;
            let _ = write!(out, "{b:02x}");
        }
        out
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Loads a cached record; `None` on miss or unreadable entry.
    #[must_use]
    pub fn get(&self, key: &str) -> Option<CachedContact> {
        let path = self.path_for(key);
        if !path.exists() {
            return None;
        }
        match crate::io::read_cached_contact(&path) {
            Ok(record) => Some(record),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                None
            }
        }
    }

    /// Stores a record under `key`, replacing any previous entry.
    pub fn put(&self, key: &str, record: &CachedContact) -> Result<()> {
        crate::io::write_cached_contact(&self.path_for(key), key, record)
    }
}

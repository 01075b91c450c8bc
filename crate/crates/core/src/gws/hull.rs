//! Incremental convex hull of points in 6D with simplicial facets.
//!
//! Farthest-point insertion with a full visibility scan per step: the
//! horizon is recovered from ridge counts over the visible set (a ridge
//! seen once borders a hidden facet), so no adjacency graph is kept.
//! Inputs are deduplicated and joggled by a deterministic jitter.
//! Minkowski sums are full of exactly coplanar bundles (every index
//! quadruple forms a parallelogram, and several relations can stack in
//! one candidate simplex), so the build retries on an escalating joggle
//! ladder: most inputs succeed at a jitter far below the visibility
//! epsilon, and structured degeneracies climb until the slivers break.

use nalgebra::{Matrix5, OMatrix, Vector6, U5, U6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap};

/// One simplicial facet: `normal · x <= offset` for all hull points.
/// The offset is the exact support value of the input set along the
/// normal, so containment is tight by construction and the spanning
/// vertices sit on the plane up to the refit tolerance.
#[derive(Debug, Clone)]
pub struct Facet {
    /// Indices into the deduplicated input points.
    pub vertices: [usize; 6],
    /// Outward unit normal.
    pub normal: Vector6<f64>,
    /// Support value of the input points along `normal`.
    pub offset: f64,
}

#[derive(Debug)]
pub(crate) enum HullOutcome {
    Facets(Vec<Facet>),
    /// Inputs span fewer than six dimensions, or the build tripped a
    /// safety cap; callers fall back to LP queries.
    Degenerate(String),
}

struct FacetRec {
    vertices: [usize; 6],
    normal: Vector6<f64>,
    offset: f64,
    outside: Vec<usize>,
    furthest: usize,
    furthest_d: f64,
    alive: bool,
}

const FACET_CAP: usize = 2_000_000;

/// Unit normal of the row space complement of a 5x6 edge matrix, via
/// the generalized cross product of the orthonormal right singular
/// rows. Cofactors of an orthonormal matrix have no cancellation, so
/// the result is stable even for very thin simplices; `None` only when
/// the edges are rank-deficient at machine level.
fn edge_null_vector(edges: &OMatrix<f64, U5, U6>) -> Option<Vector6<f64>> {
    let svd = edges.svd(false, true);
    let s = &svd.singular_values;
    if !(s[4] > 1e-13 * s[0]) {
        return None;
    }
    let v_t = svd.v_t.as_ref()?;
    let mut normal = Vector6::zeros();
    for k in 0..6 {
        let minor = Matrix5::from_fn(|r, c| v_t[(r, if c < k { c } else { c + 1 })]);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        normal[k] = sign * minor.determinant();
    }
    let len = normal.norm();
    if len < 0.5 {
        return None;
    }
    Some(normal / len)
}

/// Hyperplane through six points. Thin simplices are accepted: on
/// points in general position convexity pins their planes, and the
/// output pass recomputes supports anyway.
fn facet_plane(pts: &[Vector6<f64>], vs: &[usize; 6]) -> Option<(Vector6<f64>, f64)> {
    let base = pts[vs[0]];
    let edges = OMatrix::<f64, U5, U6>::from_fn(|r, c| (pts[vs[r + 1]] - base)[c]);
    let normal = edge_null_vector(&edges)?;
    // Average over the vertices beats a single-vertex offset when the
    // simplex is thin.
    let offset = vs.iter().map(|&v| normal.dot(&pts[v])).sum::<f64>() / 6.0;
    Some((normal, offset))
}

fn oriented_facet(
    pts: &[Vector6<f64>],
    mut vs: [usize; 6],
    interior: &Vector6<f64>,
) -> Option<FacetRec> {
    vs.sort_unstable();
    let (mut normal, mut offset) = facet_plane(pts, &vs)?;
    let side = normal.dot(interior) - offset;
    if side.abs() < 1e-300 {
        return None;
    }
    if side > 0.0 {
        normal = -normal;
        offset = -offset;
    }
    Some(FacetRec {
        vertices: vs,
        normal,
        offset,
        outside: Vec::new(),
        furthest: usize::MAX,
        furthest_d: 0.0,
        alive: true,
    })
}

fn sorted_ridge(vs: &[usize; 6], omit: usize) -> [usize; 5] {
    let mut ridge = [0usize; 5];
    let mut w = 0;
    for (k, &v) in vs.iter().enumerate() {
        if k != omit {
            ridge[w] = v;
            w += 1;
        }
    }
    ridge
}

/// Facets of `candidates` reachable from `start` through shared ridges.
fn connected_component(facets: &[FacetRec], candidates: &[usize], start: usize) -> Vec<usize> {
    let mut by_ridge: BTreeMap<[usize; 5], Vec<usize>> = BTreeMap::new();
    for &f in candidates {
        for omit in 0..6 {
            by_ridge
                .entry(sorted_ridge(&facets[f].vertices, omit))
                .or_default()
                .push(f);
        }
    }
    let mut in_component: HashMap<usize, bool> =
        candidates.iter().map(|&f| (f, false)).collect();
    in_component.insert(start, true);
    let mut queue = vec![start];
    while let Some(f) = queue.pop() {
        for omit in 0..6 {
            for &g in &by_ridge[&sorted_ridge(&facets[f].vertices, omit)] {
                if let Some(seen) = in_component.get_mut(&g) {
                    if !*seen {
                        *seen = true;
                        queue.push(g);
                    }
                }
            }
        }
    }
    let mut out: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|f| in_component[f])
        .collect();
    out.sort_unstable();
    out
}

/// Builds the hull of `points`. The `seed` drives the deterministic
/// joggle so repeated builds agree bit for bit.
pub(crate) fn convex_hull_6d(points: &[Vector6<f64>], seed: u64) -> HullOutcome {
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return HullOutcome::Degenerate("points have no finite extent".into());
    }

    // Deduplicate on a grid at the smallest joggle amplitude.
    let grid = 1e-12 * scale;
    let mut seen: HashMap<[i64; 6], ()> = HashMap::new();
    let mut kept: Vec<Vector6<f64>> = Vec::with_capacity(points.len());
    for p in points {
        let mut key = [0i64; 6];
        for k in 0..6 {
            key[k] = (p[k] / grid).round() as i64;
        }
        if seen.insert(key, ()).is_none() {
            kept.push(*p);
        }
    }
    if kept.len() < 7 {
        return HullOutcome::Degenerate(format!(
            "{} distinct points cannot span a 6D hull",
            kept.len()
        ));
    }

    // Initial simplex: greedy affine-independent selection on the
    // unjoggled points, so genuinely flat inputs stay flagged no matter
    // how large the jitter later grows.
    let mut simplex = vec![(0..kept.len())
        .min_by(|&a, &b| kept[a][0].total_cmp(&kept[b][0]))
        .unwrap()];
    let mut basis: Vec<Vector6<f64>> = Vec::with_capacity(6);
    for _ in 0..6 {
        let p0 = kept[simplex[0]];
        let mut best = (0usize, 0.0f64);
        for (i, p) in kept.iter().enumerate() {
            let mut r = p - p0;
            for b in &basis {
                r -= b.dot(&r) * b;
            }
            let score = r.norm();
            if score > best.1 {
                best = (i, score);
            }
        }
        if best.1 < 1e-9 * scale {
            return HullOutcome::Degenerate(
                "points span fewer than six dimensions".into(),
            );
        }
        let mut r = kept[best.0] - p0;
        for b in &basis {
            r -= b.dot(&r) * b;
        }
        basis.push(r / r.norm());
        simplex.push(best.0);
    }

    let mut last_failure = String::new();
    for (attempt, jog_rel) in [1e-12, 1e-9, 1e-6].into_iter().enumerate() {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let jog = jog_rel * scale;
        let pts: Vec<Vector6<f64>> = kept
            .iter()
            .map(|p| Vector6::from_fn(|k, _| p[k] + jog * rng.gen_range(-1.0..1.0)))
            .collect();
        match build_hull(&pts, &simplex, scale) {
            Ok(facets) => return HullOutcome::Facets(refine_planes(&kept, facets)),
            Err(msg) => last_failure = msg,
        }
    }
    HullOutcome::Degenerate(last_failure)
}

/// Output pass over the original (unjoggled) points. Well-conditioned
/// simplices get their plane refit from the exact coordinates; simplices
/// thinned by structured degeneracies keep the build plane, which the
/// joggled hull's convexity already pinned near the true facet. Every
/// offset becomes the exact support value over all points, so each
/// half-space is a valid outer bound and containment holds by
/// construction.
fn refine_planes(kept: &[Vector6<f64>], facets: Vec<Facet>) -> Vec<Facet> {
    facets
        .into_iter()
        .map(|f| {
            let base = kept[f.vertices[0]];
            let edges = OMatrix::<f64, U5, U6>::from_fn(|r, c| {
                (kept[f.vertices[r + 1]] - base)[c]
            });
            let s = edges.svd(false, false).singular_values;
            let mut normal = f.normal;
            if s[4] > 1e-5 * s[0] {
                if let Some(n) = edge_null_vector(&edges) {
                    normal = if n.dot(&f.normal) < 0.0 { -n } else { n };
                }
            }
            let offset = kept
                .iter()
                .map(|p| normal.dot(p))
                .fold(f64::NEG_INFINITY, f64::max);
            Facet {
                vertices: f.vertices,
                normal,
                offset,
            }
        })
        .collect()
}

/// One hull construction over already-joggled points, starting from the
/// given affinely independent 7-point simplex.
fn build_hull(
    pts: &[Vector6<f64>],
    simplex: &[usize],
    scale: f64,
) -> std::result::Result<Vec<Facet>, String> {
    let interior = simplex.iter().map(|&i| pts[i]).sum::<Vector6<f64>>() / 7.0;

    let mut facets: Vec<FacetRec> = Vec::new();
    for omit in 0..7 {
        let mut vs = [0usize; 6];
        let mut w = 0;
        for (k, &v) in simplex.iter().enumerate() {
            if k != omit {
                vs[w] = v;
                w += 1;
            }
        }
        match oriented_facet(pts, vs, &interior) {
            Some(f) => facets.push(f),
            None => {
                return Err("initial simplex is flat".into());
            }
        }
    }

    let eps = 1e-10 * scale;
    let assign = |facets: &mut Vec<FacetRec>, targets: &[usize], idx: usize, p: &Vector6<f64>| {
        let mut best: Option<(usize, f64)> = None;
        for &fi in targets {
            let d = facets[fi].normal.dot(p) - facets[fi].offset;
            if d > eps && best.is_none_or(|(_, bd)| d > bd) {
                best = Some((fi, d));
            }
        }
        if let Some((fi, d)) = best {
            facets[fi].outside.push(idx);
            if d > facets[fi].furthest_d {
                facets[fi].furthest_d = d;
                facets[fi].furthest = idx;
            }
        }
    };

    let initial: Vec<usize> = (0..facets.len()).collect();
    for (i, p) in pts.iter().enumerate() {
        if !simplex.contains(&i) {
            assign(&mut facets, &initial, i, p);
        }
    }

    let mut stack: Vec<usize> = (0..facets.len())
        .filter(|&f| !facets[f].outside.is_empty())
        .collect();
    let max_rounds = 40 * pts.len() + 1000;
    let mut rounds = 0usize;

    while let Some(fi) = stack.pop() {
        if !facets[fi].alive || facets[fi].outside.is_empty() {
            continue;
        }
        rounds += 1;
        if rounds > max_rounds || facets.len() > FACET_CAP {
            return Err("hull construction budget exceeded".into());
        }
        let p_idx = facets[fi].furthest;
        let p = pts[p_idx];

        // Full scan, then keep only the ridge-connected component of the
        // processed facet. Marginally visible islands (apex barely above
        // their plane) must survive: tearing one down turns all its
        // ridges into horizon ridges whose new facets are eps-thin.
        let candidates: Vec<usize> = (0..facets.len())
            .filter(|&f| facets[f].alive && facets[f].normal.dot(&p) - facets[f].offset > eps)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let visible = connected_component(&facets, &candidates, fi);

        // Sorted map: facet creation order must not depend on hash
        // seeds, or repeated builds would disagree at epsilon scale.
        let mut ridges: BTreeMap<[usize; 5], u32> = BTreeMap::new();
        for &f in &visible {
            for omit in 0..6 {
                *ridges
                    .entry(sorted_ridge(&facets[f].vertices, omit))
                    .or_insert(0) += 1;
            }
        }

        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            facets[f].alive = false;
            orphans.extend(facets[f].outside.drain(..).filter(|&i| i != p_idx));
        }

        let mut created: Vec<usize> = Vec::new();
        for (ridge, count) in ridges {
            if count != 1 {
                continue;
            }
            let vs = [ridge[0], ridge[1], ridge[2], ridge[3], ridge[4], p_idx];
            let Some(f) = oriented_facet(pts, vs, &interior) else {
                return Err("degenerate facet at insertion".into());
            };
            created.push(facets.len());
            facets.push(f);
        }
        if created.is_empty() {
            return Err("horizon collapsed at insertion".into());
        }

        orphans.sort_unstable();
        orphans.dedup();
        for idx in orphans {
            let q = pts[idx];
            assign(&mut facets, &created, idx, &q);
        }
        for &f in &created {
            if !facets[f].outside.is_empty() {
                stack.push(f);
            }
        }
    }

    let out: Vec<Facet> = facets
        .into_iter()
        .filter(|f| f.alive)
        .map(|f| Facet {
            vertices: f.vertices,
            normal: f.normal,
            offset: f.offset,
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn violation(points: &[Vector6<f64>], facets: &[Facet]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for f in facets {
            for p in points {
                worst = worst.max(f.normal.dot(p) - f.offset);
            }
        }
        worst
    }

    #[test]
    fn cross_polytope_hull_has_orthant_facets() {
        let mut points = Vec::new();
        for k in 0..6 {
            let mut p = Vector6::zeros();
            p[k] = 1.0;
            points.push(p);
            points.push(-p);
        }
        let HullOutcome::Facets(facets) = convex_hull_6d(&points, 11) else {
            panic!("full-dimensional input reported degenerate");
        };
        // One facet per sign pattern.
        assert_eq!(facets.len(), 64);
        assert!(violation(&points, &facets) < 1e-9);
        // Every facet plane sits at distance 1/sqrt(6) from the origin.
        for f in &facets {
            assert!((f.offset - 1.0 / 6.0f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_points_all_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let points: Vec<Vector6<f64>> = (0..120)
            .map(|_| {
                let v = Vector6::from_fn(|_, _| rng.gen_range(-1.0..1.0f64));
                v / v.norm()
            })
            .collect();
        let HullOutcome::Facets(facets) = convex_hull_6d(&points, 7) else {
            panic!("full-dimensional input reported degenerate");
        };
        assert!(facets.len() > 64);
        assert!(violation(&points, &facets) < 1e-9);
        // Ridges of the alive hull pair up: the surface is closed.
        let mut ridges: HashMap<[usize; 5], u32> = HashMap::new();
        for f in &facets {
            for omit in 0..6 {
                *ridges
                    .entry(sorted_ridge(&f.vertices, omit))
                    .or_insert(0) += 1;
            }
        }
        assert!(ridges.values().all(|&c| c == 2));
    }

    #[test]
    fn coplanar_cube_corners_are_contained() {
        // 64 cube corners: facets are far from simplicial, so this
        // exercises the joggle path.
        let mut points = Vec::new();
        for mask in 0..64u32 {
            points.push(Vector6::from_fn(|k, _| {
                if mask >> k & 1 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }));
        }
        let HullOutcome::Facets(facets) = convex_hull_6d(&points, 3) else {
            panic!("cube reported degenerate");
        };
        assert!(violation(&points, &facets) < 1e-9);
        // The hull volume is bounded by planes near the cube's own.
        for f in &facets {
            assert!(f.offset < 1.0 + 1e-9);
            assert!(f.offset > 1.0 - 1e-6);
        }
    }

    #[test]
    fn flat_inputs_are_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // Random points stuck in the hyperplane w5 = 0.
        let points: Vec<Vector6<f64>> = (0..40)
            .map(|_| {
                let mut v = Vector6::from_fn(|_, _| rng.gen_range(-1.0..1.0f64));
                v[5] = 0.0;
                v
            })
            .collect();
        assert!(matches!(
            convex_hull_6d(&points, 1),
            HullOutcome::Degenerate(_)
        ));
        assert!(matches!(
            convex_hull_6d(&points[..3], 1),
            HullOutcome::Degenerate(_)
        ));
    }
}

//! Nearest point maps onto compact convex sets.
//!
//! Distances are measured by an arbitrary gauge. Segments reduce to a 1-D
//! convex line search; polytopes are handled in barycentric coordinates by
//! projected subgradient descent with seeded restarts followed by a
//! pairwise mass-transfer polish. Every result carries a certificate: an
//! upper bound on how far the reported distance can sit above the true
//! minimum, from the bracket width (segments) or the linearization gap
//! (polytopes).
//!
//! A brute-force grid oracle over the same sets backs the solvers in tests,
//! and `modulus_scan` drives the continuity experiment: pairs of inputs at
//! shrinking separation whose nearest points refuse to approach each other.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::geometry::{Functional, Gauge, Point};
use crate::solver::golden_section_min;
use crate::{Error, Result};

/// A compact convex subset given by finitely many points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompactConvexSet {
    Segment { from: Point, to: Point },
    Polytope { vertices: Vec<Point> },
}

impl CompactConvexSet {
    pub fn segment(from: Point, to: Point) -> Result<Self> {
        let s = CompactConvexSet::Segment { from, to };
        s.validate()?;
        Ok(s)
    }

    pub fn polytope(vertices: Vec<Point>) -> Result<Self> {
        let s = CompactConvexSet::Polytope { vertices };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CompactConvexSet::Segment { from, to } => {
                if from.dim() != to.dim() {
                    return Err(Error::DimensionMismatch {
                        left: from.dim(),
                        right: to.dim(),
                        context: "segment endpoints",
                    });
                }
            }
            CompactConvexSet::Polytope { vertices } => {
                if vertices.is_empty() {
                    return Err(Error::constraint(
                        "polytope has at least one vertex",
                        "vertex list is empty".to_string(),
                    ));
                }
                let d = vertices[0].dim();
                for v in vertices {
                    if v.dim() != d {
                        return Err(Error::DimensionMismatch {
                            left: d,
                            right: v.dim(),
                            context: "polytope vertices",
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            CompactConvexSet::Segment { from, .. } => from.dim(),
            CompactConvexSet::Polytope { vertices } => vertices[0].dim(),
        }
    }

    /// Extreme points (endpoints or the vertex list).
    pub fn extreme_points(&self) -> Vec<Point> {
        match self {
            CompactConvexSet::Segment { from, to } => vec![from.clone(), to.clone()],
            CompactConvexSet::Polytope { vertices } => vertices.clone(),
        }
    }

    /// Exact supremum of `|u|` over the set: a linear functional attains its
    /// extremes at extreme points.
    pub fn sup_abs_functional(&self, u: &Functional) -> Result<f64> {
        let mut best = 0.0f64;
        for p in self.extreme_points() {
            best = best.max(crate::geometry::dual_eval(u, &p)?.abs());
        }
        Ok(best)
    }
}

/// Knobs for the nearest point solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    /// Bracket tolerance in parameter space.
    pub param_tol: f64,
    /// Total gauge-evaluation budget per query.
    pub max_evals: usize,
    /// Seeded restarts for the polytope solver.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            param_tol: 1e-8,
            max_evals: 200_000,
            restarts: 8,
            seed: 7,
        }
    }
}

/// A nearest point together with its optimality certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub point: Point,
    /// Gauge distance from the query to `point`.
    pub distance: f64,
    /// Upper bound on `distance - true minimum` (always nonnegative).
    pub certificate_gap: f64,
    pub evals: usize,
}

struct CountedGauge<'a> {
    g: &'a dyn Gauge,
    evals: Cell<usize>,
    failed: Cell<bool>,
}

impl<'a> CountedGauge<'a> {
    fn new(g: &'a dyn Gauge) -> Self {
        CountedGauge {
            g,
            evals: Cell::new(0),
            failed: Cell::new(false),
        }
    }

    fn dist(&self, x: &Point, p: &Point) -> f64 {
        self.evals.set(self.evals.get() + 1);
        match self.g.gauge(&x.sub(p)) {
            Ok(v) => v,
            Err(_) => {
                self.failed.set(true);
                f64::INFINITY
            }
        }
    }

    fn finish(&self) -> Result<usize> {
        if self.failed.get() {
            return Err(Error::Numerical {
                context: "nearest_point",
                detail: "gauge evaluation failed during the search".into(),
            });
        }
        Ok(self.evals.get())
    }
}

/// Nearest point of `k` to `x` in the gauge `g`.
pub fn nearest_point(
    g: &dyn Gauge,
    x: &Point,
    k: &CompactConvexSet,
    opts: &ProjectionOptions,
) -> Result<ProjectionResult> {
    k.validate()?;
    if k.dim() != g.dim() || x.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            left: g.dim(),
            right: if k.dim() != g.dim() { k.dim() } else { x.dim() },
            context: "nearest_point",
        });
    }
    match k {
        CompactConvexSet::Segment { from, to } => segment_nearest(g, x, from, to, opts),
        CompactConvexSet::Polytope { vertices } => match vertices.len() {
            1 => {
                let counted = CountedGauge::new(g);
                let d = counted.dist(x, &vertices[0]);
                let evals = counted.finish()?;
                Ok(ProjectionResult {
                    point: vertices[0].clone(),
                    distance: d,
                    certificate_gap: 0.0,
                    evals,
                })
            }
            2 => segment_nearest(g, x, &vertices[0], &vertices[1], opts),
            _ => polytope_nearest(g, x, vertices, opts),
        },
    }
}

fn segment_nearest(
    g: &dyn Gauge,
    x: &Point,
    from: &Point,
    to: &Point,
    opts: &ProjectionOptions,
) -> Result<ProjectionResult> {
    let counted = CountedGauge::new(g);
    let dir = to.sub(from);
    // One-sided gauges need not be symmetric; take the larger slope.
    let slope = g.gauge(&dir)?.max(g.gauge(&dir.scale(-1.0))?);
    let f = |s: f64| counted.dist(x, &from.axpy(s, &dir));
    let r = golden_section_min(f, 0.0, 1.0, opts.param_tol, opts.max_evals);
    let evals = counted.finish()? + 2;
    Ok(ProjectionResult {
        point: from.axpy(r.x, &dir),
        distance: r.fx,
        certificate_gap: slope * r.width + 1e-12 * (1.0 + r.fx),
        evals,
    })
}

fn combine(vertices: &[Point], w: &[f64]) -> Point {
    let mut coords = vec![0.0; vertices[0].dim()];
    for (v, &wi) in vertices.iter().zip(w) {
        for (c, vc) in coords.iter_mut().zip(v.coords()) {
            *c += wi * vc;
        }
    }
    Point::new(coords).expect("finite combination")
}

/// Euclidean projection of `w` onto the probability simplex.
fn project_simplex(w: &[f64]) -> Vec<f64> {
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = (w.iter().sum::<f64>() - 1.0) / w.len() as f64;
    for (i, &ui) in sorted.iter().enumerate() {
        cum += ui;
        let th = (cum - 1.0) / (i + 1) as f64;
        if ui > th {
            theta = th;
        }
    }
    w.iter().map(|&wi| (wi - theta).max(0.0)).collect()
}

fn polytope_nearest(
    g: &dyn Gauge,
    x: &Point,
    vertices: &[Point],
    opts: &ProjectionOptions,
) -> Result<ProjectionResult> {
    let m = vertices.len();
    let counted = CountedGauge::new(g);
    let f = |w: &[f64]| counted.dist(x, &combine(vertices, w));
    let fd = 1e-7;
    let grad = |w: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let mut hi = w.to_vec();
                hi[i] += fd;
                let mut lo = w.to_vec();
                lo[i] -= fd;
                (f(&hi) - f(&lo)) / (2.0 * fd)
            })
            .collect()
    };

    let mut rng = crate::sampling::seeded_rng(opts.seed ^ 0x70_6f_6c_79);
    let mut best_w = vec![1.0 / m as f64; m];
    let mut best_f = f(&best_w);

    for restart in 0..opts.restarts.max(1) {
        let mut w = if restart == 0 {
            vec![1.0 / m as f64; m]
        } else {
            // Exponential spacings give a uniform simplex start.
            let raw: Vec<f64> = (0..m)
                .map(|_| -(rand::Rng::random::<f64>(&mut rng).max(1e-12)).ln())
                .collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|r| r / s).collect()
        };
        let mut fw = f(&w);
        let mut local_best = fw;
        for iter in 0..80 {
            if counted.evals.get() >= opts.max_evals {
                break;
            }
            let gr = grad(&w);
            let gn2: f64 = gr.iter().map(|c| c * c).sum();
            if gn2 < 1e-18 {
                break;
            }
            // Polyak step toward a slowly tightening target value.
            let slack = 0.5 * (local_best + 1e-9) * 0.85f64.powi(iter);
            let step = (fw - local_best + slack) / gn2;
            let moved: Vec<f64> = w.iter().zip(&gr).map(|(wi, gi)| wi - step * gi).collect();
            w = project_simplex(&moved);
            fw = f(&w);
            if fw < local_best {
                local_best = fw;
            }
            if fw < best_f {
                best_f = fw;
                best_w = w.clone();
            }
        }
    }

    // Pairwise mass transfers: exact convex line searches that stay on the
    // simplex and grind out the last digits.
    for _ in 0..4 {
        for i in 0..m {
            for j in (i + 1)..m {
                if counted.evals.get() >= opts.max_evals {
                    break;
                }
                let (wi, wj) = (best_w[i], best_w[j]);
                if wi + wj <= 1e-15 {
                    continue;
                }
                let trial = |tau: f64| {
                    let mut w = best_w.clone();
                    w[i] = wi + tau;
                    w[j] = wj - tau;
                    f(&w)
                };
                let r = golden_section_min(trial, -wi, wj, opts.param_tol * (wi + wj), 80);
                if r.fx < best_f {
                    best_f = r.fx;
                    best_w[i] = wi + r.x;
                    best_w[j] = wj - r.x;
                }
            }
        }
    }

    // Linearization certificate: for convex f on the simplex,
    // f(w) - min f <= <grad, w> - min_i grad_i, up to differencing error.
    let gr = grad(&best_w);
    let lin: f64 = gr.iter().zip(&best_w).map(|(gi, wi)| gi * wi).sum::<f64>()
        - gr.iter().cloned().fold(f64::INFINITY, f64::min);
    let evals = counted.finish()?;
    Ok(ProjectionResult {
        point: combine(vertices, &best_w),
        distance: best_f,
        certificate_gap: lin.max(0.0) + 1e-6 * (1.0 + best_f),
        evals,
    })
}

/// Exhaustive grid oracle. Segments are sampled at `resolution + 1`
/// parameters; triangles on the barycentric grid of the same pitch. Used to
/// validate the solvers; the returned distance is within one grid step's
/// oscillation of the true minimum.
pub fn brute_force_nearest(
    g: &dyn Gauge,
    x: &Point,
    k: &CompactConvexSet,
    resolution: usize,
) -> Result<(Point, f64)> {
    k.validate()?;
    if resolution == 0 {
        return Err(Error::constraint(
            "resolution >= 1",
            "resolution = 0".to_string(),
        ));
    }
    match k {
        CompactConvexSet::Segment { from, to } => {
            let dir = to.sub(from);
            let mut best = (from.clone(), f64::INFINITY);
            for i in 0..=resolution {
                let p = from.axpy(i as f64 / resolution as f64, &dir);
                let d = g.gauge(&x.sub(&p))?;
                if d < best.1 {
                    best = (p, d);
                }
            }
            Ok(best)
        }
        CompactConvexSet::Polytope { vertices } if vertices.len() == 3 => {
            let mut best: Option<(Point, f64)> = None;
            let r = resolution;
            for i in 0..=r {
                for j in 0..=(r - i) {
                    let a = i as f64 / r as f64;
                    let b = j as f64 / r as f64;
                    let p = combine(vertices, &[a, b, 1.0 - a - b]);
                    let d = g.gauge(&x.sub(&p))?;
                    if best.as_ref().map_or(true, |(_, bd)| d < *bd) {
                        best = Some((p, d));
                    }
                }
            }
            Ok(best.expect("grid is nonempty"))
        }
        CompactConvexSet::Polytope { vertices } => Err(Error::constraint(
            "brute force supports segments and triangles",
            format!("polytope has {} vertices", vertices.len()),
        )),
    }
}

/// One probed input pair of the continuity experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    /// Nominal input separation scale the pair was built for.
    pub delta: f64,
    /// Measured gauge distance between the two inputs.
    pub in_sep: f64,
    /// Gauge distance between their nearest points.
    pub out_sep: f64,
    /// `out_sep / in_sep`: blows up as the inputs approach each other.
    pub ratio: f64,
    /// Certificate gaps of the two projections.
    pub gap_x: f64,
    pub gap_y: f64,
    /// Whether `out_sep` cleared the bound (with `slack` forgiveness).
    pub pass: bool,
}

/// Result of probing the nearest point map at several input separations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    /// Output separation every pair must maintain.
    pub bound: f64,
    pub rows: Vec<ModulusRow>,
    pub min_out_sep: f64,
    pub all_pass: bool,
}

/// Projects both members of every pair onto `k` and checks that the output
/// separation never drops below `bound - slack`, however small the input
/// separation is. A uniformly continuous nearest point map could not do
/// this; these gauges force it.
pub fn modulus_scan(
    g: &dyn Gauge,
    k: &CompactConvexSet,
    pairs: &[(Point, Point, f64)],
    bound: f64,
    slack: f64,
    opts: &ProjectionOptions,
) -> Result<ModulusReport> {
    let mut rows = Vec::with_capacity(pairs.len());
    let mut min_out = f64::INFINITY;
    for (x, y, delta) in pairs {
        let rx = nearest_point(g, x, k, opts)?;
        let ry = nearest_point(g, y, k, opts)?;
        let in_sep = g.gauge(&x.sub(y))?;
        let out_sep = g.gauge(&rx.point.sub(&ry.point))?;
        let ratio = if in_sep > 0.0 { out_sep / in_sep } else { f64::INFINITY };
        let pass = out_sep >= bound - slack;
        min_out = min_out.min(out_sep);
        rows.push(ModulusRow {
            delta: *delta,
            in_sep,
            out_sep,
            ratio,
            gap_x: rx.certificate_gap,
            gap_y: ry.certificate_gap,
            pass,
        });
    }
    let all_pass = rows.iter().all(|r| r.pass);
    let min_out_sep = if rows.is_empty() { 0.0 } else { min_out };
    Ok(ModulusReport {
        bound,
        rows,
        min_out_sep,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blueprint::BlueprintNorm;
    use crate::geometry::{EuclideanGauge, Point};

    fn seg(dim: usize, axis: usize, half: f64) -> CompactConvexSet {
        CompactConvexSet::segment(
            Point::basis(dim, axis).scale(-half),
            Point::basis(dim, axis).scale(half),
        )
        .unwrap()
    }

    #[test]
    fn segment_boundary_minimum() {
        let g = EuclideanGauge { dim: 8 };
        let k = seg(8, 2, 0.05);
        let x = Point::basis(8, 2);
        let r = nearest_point(&g, &x, &k, &ProjectionOptions::default()).unwrap();
        assert!((r.distance - 0.95).abs() <= 1e-9, "distance {}", r.distance);
        assert!((r.point.coords()[2] - 0.05).abs() <= 1e-6);
        assert!(r.certificate_gap <= 1e-6);
    }

    #[test]
    fn segment_interior_minimum() {
        let g = EuclideanGauge { dim: 4 };
        let k = seg(4, 1, 0.3);
        let x = Point::zero(4);
        let r = nearest_point(&g, &x, &k, &ProjectionOptions::default()).unwrap();
        assert!(r.distance <= 1e-8, "distance {}", r.distance);
    }

    #[test]
    fn triangle_reaches_the_centroid() {
        let g = EuclideanGauge { dim: 3 };
        let k = CompactConvexSet::polytope(vec![
            Point::basis(3, 0),
            Point::basis(3, 1),
            Point::basis(3, 2),
        ])
        .unwrap();
        let r = nearest_point(&g, &Point::zero(3), &k, &ProjectionOptions::default()).unwrap();
        let want = (1.0f64 / 3.0).sqrt();
        assert!((r.distance - want).abs() <= 1e-6, "distance {}", r.distance);
        for c in r.point.coords() {
            assert!((c - 1.0 / 3.0).abs() <= 1e-5);
        }
    }

    #[test]
    fn solver_matches_grid_oracle_on_segments() {
        let g = EuclideanGauge { dim: 3 };
        let from = Point::new(vec![-0.4, 0.2, 0.1]).unwrap();
        let to = Point::new(vec![0.7, -0.3, 0.5]).unwrap();
        let k = CompactConvexSet::segment(from, to).unwrap();
        let x = Point::new(vec![0.2, 0.9, -0.4]).unwrap();
        let r = nearest_point(&g, &x, &k, &ProjectionOptions::default()).unwrap();
        let (_, bf) = brute_force_nearest(&g, &x, &k, 100_000).unwrap();
        assert!((r.distance - bf).abs() <= 1e-4);
        assert!(r.distance <= bf + r.certificate_gap + 1e-9);
    }

    #[test]
    fn solver_matches_grid_oracle_on_triangles() {
        let g = EuclideanGauge { dim: 3 };
        let k = CompactConvexSet::polytope(vec![
            Point::new(vec![1.0, 0.1, 0.0]).unwrap(),
            Point::new(vec![-0.2, 0.8, 0.1]).unwrap(),
            Point::new(vec![0.0, -0.1, 0.9]).unwrap(),
        ])
        .unwrap();
        let x = Point::new(vec![0.5, 0.5, 0.5]).unwrap();
        let r = nearest_point(&g, &x, &k, &ProjectionOptions::default()).unwrap();
        let (_, bf) = brute_force_nearest(&g, &x, &k, 600).unwrap();
        assert!(r.distance <= bf + 1e-6, "{} vs {}", r.distance, bf);
        assert!(bf <= r.distance + 5e-3, "grid pitch bounds the gap");
    }

    #[test]
    fn brute_force_rejects_big_polytopes() {
        let g = EuclideanGauge { dim: 3 };
        let k = CompactConvexSet::polytope(vec![
            Point::basis(3, 0),
            Point::basis(3, 1),
            Point::basis(3, 2),
            Point::zero(3),
        ])
        .unwrap();
        assert!(brute_force_nearest(&g, &Point::zero(3), &k, 10).is_err());
    }

    #[test]
    fn modulus_scan_on_the_blueprint_witnesses() {
        let bn = BlueprintNorm::canonical(8).unwrap();
        let p = bn.points().clone();
        let k = seg(8, 2, 0.05);
        let pairs = vec![(p.x_plus.clone(), p.x_minus.clone(), 2.0 * bn.alpha().t)];
        let report = modulus_scan(
            &bn,
            &k,
            &pairs,
            bn.alpha().rho / 16.0,
            1e-6,
            &ProjectionOptions::default(),
        )
        .unwrap();
        assert!(report.all_pass, "{report:?}");
        let row = &report.rows[0];
        // Inputs 2t apart, outputs a fixed rho/4-scale distance apart.
        assert!(row.in_sep <= 0.02);
        assert!(row.out_sep >= 0.0125 - 1e-6);
        assert!(row.ratio > 5.0);
    }
}

//! The invariant suite behind the `selftest` subcommand: one named check
//! per module-level promise, each cheap enough that the whole battery runs
//! in a couple of seconds.

use anyhow::{ensure, Context};
use renorm_core::blueprint::AlphaTuple;
use renorm_core::geometry::{euclid_norm, q_functional, strict_convexity_probe};
use renorm_core::projection::brute_force_nearest;
use renorm_core::sampling::{sample_unit_ball, sample_unit_sphere};
use renorm_core::{
    lemma_sweep, nearest_point, theorem22_check, theorem31_run, BlueprintNorm, CompactConvexSet,
    CompositeNorm, EuclideanGauge, Gauge, Point, TermId, TheoremOptions,
};

use crate::config::RunConfig;

/// Result of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check<F: FnOnce() -> anyhow::Result<String>>(name: &'static str, f: F) -> CheckOutcome {
    match f() {
        Ok(detail) => CheckOutcome {
            name,
            passed: true,
            detail,
        },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("{e:#}"),
        },
    }
}

/// First coordinate (1-based) that is inert for the level-1 tuple: not its
/// `e`, `h`, or the shared direction.
fn inert_index(cfg: &RunConfig) -> usize {
    (3..=cfg.dim)
        .find(|i| *i != cfg.v_index())
        .expect("dim >= levels + 3 leaves an inert coordinate")
}

/// Runs the whole battery against the configured scheme.
pub fn run_all(cfg: &RunConfig) -> anyhow::Result<Vec<CheckOutcome>> {
    let scheme = cfg.scheme()?;
    let composite =
        CompositeNorm::build(scheme.clone(), cfg.tolerances()).context("building composite")?;
    let term1 = composite.term(TermId(1))?;
    let bn = term1.blueprint();
    let alpha = bn.alpha().clone();
    let rho = alpha.rho;
    let dim = cfg.dim;
    let seed = cfg.seed;

    let mut out = Vec::new();

    out.push(check("sampling: seeded streams reproduce", || {
        let a = sample_unit_sphere(seed, 64, dim);
        let b = sample_unit_sphere(seed, 64, dim);
        ensure!(a == b, "same seed produced different streams");
        let c = sample_unit_sphere(seed ^ 1, 64, dim);
        ensure!(a != c, "different seeds produced the same stream");
        for p in &a {
            ensure!(
                (euclid_norm(p) - 1.0).abs() <= 1e-12,
                "sphere sample off the sphere"
            );
        }
        for p in sample_unit_ball(seed, 64, dim) {
            ensure!(euclid_norm(&p) <= 1.0 + 1e-12, "ball sample escaped");
        }
        Ok("two 64-point streams identical, sphere and ball memberships hold".into())
    }));

    out.push(check("geometry: euclidean q identity", || {
        let g = EuclideanGauge { dim };
        let pts = sample_unit_ball(seed ^ 0x11, 2000, dim);
        let mut worst = 0.0f64;
        for pair in pts.chunks_exact(2) {
            let q = q_functional(&g, &pair[0], &pair[1])?;
            let d = pair[0].sub(&pair[1]);
            worst = worst.max((q - d.dot(&d)).abs());
        }
        ensure!(worst <= 1e-10, "q identity violated by {worst}");
        Ok(format!("1000 pairs, worst defect {worst:.2e}"))
    }));

    out.push(check("blueprint: constructor names broken invariants", || {
        let e = AlphaTuple::canonical_with(dim, rho, rho / 16.0).unwrap_err();
        ensure!(
            e.to_string().contains("0 < t < rho/16"),
            "offset rejection missing, got: {e}"
        );
        let e = AlphaTuple::canonical_with(dim, 0.3, 0.01).unwrap_err();
        ensure!(
            e.to_string().contains("0 < rho < 1/4"),
            "rho rejection missing, got: {e}"
        );
        Ok("offset and slab-depth rejections carry their invariant names".into())
    }));

    out.push(check("blueprint: separation residual sweep", || {
        let report = lemma_sweep(&alpha, 2000, seed)?;
        ensure!(
            report.min_residual >= -1e-12,
            "worst residual {} on item {}",
            report.min_residual,
            report.worst_item
        );
        Ok(format!(
            "2000 samples, min residual {:.3e} on {}",
            report.min_residual, report.worst_item
        ))
    }));

    out.push(check("blueprint: separating functionals under the bound", || {
        let planes = bn.planes();
        let worst = planes
            .phi_plus
            .dual_norm()
            .max(planes.phi_minus.dual_norm());
        let margin = planes.norm_bound - worst;
        ensure!(margin > 2e-3, "margin {margin} too small");
        Ok(format!(
            "dual norms {:.7} within bound {:.7}, margin {:.2e}",
            worst, planes.norm_bound, margin
        ))
    }));

    out.push(check("blueprint: vertices, inert directions, cap points", || {
        for y in [&bn.points().y_plus, &bn.points().y_minus] {
            let g = bn.gauge(y)?;
            ensure!((g - 1.0).abs() <= 1e-6, "glued vertex gauge {g}");
        }
        let inert = Point::basis(dim, inert_index(cfg) - 1);
        let g = bn.gauge(&inert)?;
        ensure!((g - 1.0).abs() <= 1e-6, "inert direction gauge {g}");
        let (g, gap) = bn.gauge_with_certificate(&bn.points().x_plus, seed)?;
        let lower = g * (1.0 - gap);
        ensure!(
            g > 1.0 && lower > 1.0,
            "cap point not certified outside the ball: value {g}, lower {lower}"
        );
        Ok(format!("vertices at 1, inert at 1, cap point certified {lower:.9} > 1"))
    }));

    out.push(check("blueprint: euclidean sandwich", || {
        let cap = 1.0 / (1.0 - rho);
        for x in sample_unit_ball(seed ^ 0x22, 300, dim) {
            let g = bn.gauge(&x)?;
            let n = euclid_norm(&x);
            ensure!(
                g >= n - 1e-9 && g <= cap * n + 1e-9,
                "sandwich violated: euclid {n}, gauge {g}"
            );
        }
        Ok(format!("300 samples inside [1, {cap:.4}] x euclidean"))
    }));

    out.push(check("blueprint: certificates within five percent", || {
        let coeff = sample_unit_sphere(seed ^ 0x33, 100, 3);
        let mut worst = 0.0f64;
        for c in &coeff {
            let x = alpha
                .e
                .scale(c.coords()[0])
                .axpy(c.coords()[1], &alpha.h)
                .axpy(c.coords()[2], &alpha.v);
            let (_, gap) = bn.gauge_with_certificate(&x, seed)?;
            worst = worst.max(gap);
            ensure!(gap <= 0.05, "relative certification gap {gap}");
        }
        Ok(format!("100 span points, worst relative gap {worst:.4}"))
    }));

    out.push(check("renorming: rotund terms hug the blueprint gauge", || {
        for x in sample_unit_ball(seed ^ 0x44, 200, dim) {
            let g = bn.gauge(&x)?;
            let l = term1.gauge(&x)?;
            let eta = scheme.eta(1);
            ensure!(
                l >= g - 1e-12 && l <= (1.0 + eta) * g + 1e-12,
                "term sandwich violated: gauge {g}, term {l}"
            );
        }
        Ok("200 samples inside [1, 1 + eta_1] x gauge".into())
    }));

    out.push(check("renorming: composite distortion window", || {
        let lo = 1.0 / (1.0 - rho / 8.0);
        let hi = lo / (1.0 - rho);
        for x in sample_unit_ball(seed ^ 0x55, 500, dim) {
            let n = euclid_norm(&x);
            let g = composite.gauge(&x)?;
            ensure!(
                g >= lo * n - 1e-9 && g <= hi * n + 1e-9,
                "window violated: euclid {n}, composite {g}"
            );
        }
        Ok(format!("500 samples inside [{lo:.6}, {hi:.6}] x euclidean"))
    }));

    out.push(check("renorming: quadratic convexity certificates", || {
        let pts = sample_unit_ball(seed ^ 0x66, 600, dim);
        let eta = scheme.eta(1);
        for pair in pts.chunks_exact(2) {
            let q = q_functional(term1, &pair[0], &pair[1])?;
            let d = pair[0].sub(&pair[1]);
            ensure!(
                q >= eta * d.dot(&d) - 1e-10,
                "term certificate violated: q {q}"
            );
        }
        Ok("300 pairs above the eta_1 modulus".into())
    }));

    out.push(check("renorming: flat edge rounded by the composite", || {
        let y_plus = &bn.points().y_plus;
        let y_minus = &bn.points().y_minus;
        let flat = strict_convexity_probe(bn, y_plus, y_minus)?;
        ensure!(flat.abs() <= 1e-6, "blueprint probe {flat} not flat");
        let rounded = strict_convexity_probe(&composite, y_plus, y_minus)?;
        ensure!(rounded > 0.0, "composite probe {rounded} not positive");
        Ok(format!(
            "blueprint probe {flat:.2e} flat, composite probe {rounded:.2e} positive"
        ))
    }));

    out.push(check("projection: solvers match the grid oracle", || {
        let g3 = EuclideanGauge { dim: 3 };
        let k = CompactConvexSet::segment(
            Point::new(vec![-0.4, 0.1, 0.0])?,
            Point::new(vec![0.3, -0.2, 0.5])?,
        )?;
        let opts = cfg.projection_options();
        let mut worst = 0.0f64;
        for x in sample_unit_ball(seed ^ 0x77, 10, 3) {
            let fast = nearest_point(&g3, &x, &k, &opts)?;
            let (_, slow) = brute_force_nearest(&g3, &x, &k, 20_000)?;
            worst = worst.max((fast.distance - slow).abs());
            ensure!(
                (fast.distance - slow).abs() <= 1e-6,
                "euclidean segment query off the grid by {}",
                (fast.distance - slow).abs()
            );
        }
        let bn3 = BlueprintNorm::canonical(3)?;
        let k3 = CompactConvexSet::segment(
            Point::new(vec![0.0, 0.0, -0.1])?,
            Point::new(vec![0.0, 0.0, 0.1])?,
        )?;
        for x in sample_unit_ball(seed ^ 0x88, 5, 3) {
            let fast = nearest_point(&bn3, &x, &k3, &opts)?;
            let (_, slow) = brute_force_nearest(&bn3, &x, &k3, 20_000)?;
            worst = worst.max((fast.distance - slow).abs());
            ensure!(
                (fast.distance - slow).abs() <= 1e-6,
                "blueprint segment query off the grid by {}",
                (fast.distance - slow).abs()
            );
        }
        Ok(format!("15 segment queries, worst distance error {worst:.2e}"))
    }));

    out.push(check("experiment: level one separation", || {
        let target = cfg.target_set()?;
        let opts = TheoremOptions {
            samples: 64,
            ..cfg.theorem_options()
        };
        let report = theorem22_check(term1, &composite, &target, &opts)?;
        ensure!(
            report.hypotheses_pass,
            "failed hypotheses: {:?}",
            report.failed_hypotheses()
        );
        let c = report.conclusions.as_ref().context("no conclusions")?;
        ensure!(c.pass, "conclusions failed");
        Ok(format!(
            "v-swing {:.6} / {:.6}, out_sep {:.6} >= {:.6}",
            c.v_r_plus, c.v_r_minus, c.out_sep, c.out_bound
        ))
    }));

    out.push(check("experiment: ladder determinism", || {
        let target = cfg.target_set()?;
        let opts = TheoremOptions {
            samples: 64,
            ..cfg.theorem_options()
        };
        let a = theorem31_run(&composite, &target, &opts)?;
        let b = theorem31_run(&composite, &target, &opts)?;
        let ja = serde_json::to_string(&a)?;
        let jb = serde_json::to_string(&b)?;
        ensure!(ja == jb, "two identical runs serialized differently");
        ensure!(a.all_pass, "ladder failed");
        Ok(format!(
            "two runs byte-identical, {} levels pass",
            a.ladder.len()
        ))
    }));

    Ok(out)
}

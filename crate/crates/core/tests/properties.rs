//! Randomized properties of the gauges and estimates, driven by tuples far
//! from the canonical coordinate-aligned one: random ambient rotations,
//! nonzero (but admissible) tilt of h toward e, and a shared direction v
//! leaning into the span of e and h.

use proptest::prelude::*;

use renorm_core::blueprint::{lemma_residuals, AlphaTuple, BlueprintNorm};
use renorm_core::geometry::{dual_eval, euclid_norm, q_functional, Functional, Gauge, Point, ToleranceConfig};
use renorm_core::renorming::{CompositeNorm, SchemeConfig, TermId};
use renorm_core::sampling::{sample_unit_ball, sample_unit_sphere};

fn orthonormal_triple(seed: u64, dim: usize) -> (Point, Point, Point) {
    let raw = sample_unit_sphere(seed, 3, dim);
    let e0 = raw[0].clone();
    let mut h0 = raw[1].axpy(-raw[1].dot(&e0), &e0);
    let nh = euclid_norm(&h0);
    if nh < 1e-6 {
        h0 = fallback_orthogonal(&e0);
    } else {
        h0 = h0.scale(1.0 / nh);
    }
    let mut v0 = raw[2]
        .axpy(-raw[2].dot(&e0), &e0)
        .axpy(-raw[2].dot(&h0), &h0);
    let nv = euclid_norm(&v0);
    if nv < 1e-6 {
        v0 = fallback_orthogonal(&h0);
        v0 = v0.axpy(-v0.dot(&e0), &e0);
        v0 = v0.scale(1.0 / euclid_norm(&v0));
    } else {
        v0 = v0.scale(1.0 / nv);
    }
    (e0, h0, v0)
}

fn fallback_orthogonal(p: &Point) -> Point {
    // Any basis vector not aligned with p, Gram-Schmidted against it.
    let dim = p.dim();
    let idx = p
        .coords()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let cand = Point::basis(dim, idx).axpy(-p.coords()[idx], p);
    cand.scale(1.0 / euclid_norm(&cand))
}

#[allow(clippy::too_many_arguments)]
fn random_tuple(
    seed: u64,
    dim: usize,
    rho: f64,
    t_frac: f64,
    tilt_frac: f64,
    lean_e: f64,
    lean_h: f64,
) -> AlphaTuple {
    let (e0, h0, v0) = orthonormal_triple(seed, dim);
    let tilt = tilt_frac * 0.9 * rho / 800.0;
    let h = h0.scale((1.0 - tilt * tilt).sqrt()).axpy(tilt, &e0);
    let v_raw = v0.axpy(lean_e, &e0).axpy(lean_h, &h0);
    let v = v_raw.scale(1.0 / euclid_norm(&v_raw));
    let t = t_frac * rho / 16.0;
    AlphaTuple::new(
        v.clone(),
        Functional::from_point(&v),
        e0.clone(),
        Functional::from_point(&e0),
        h.clone(),
        Functional::from_point(&h),
        t,
        rho,
    )
    .expect("construction ranges keep every constraint satisfiable")
}

fn tuple_strategy() -> impl Strategy<Value = AlphaTuple> {
    (
        any::<u64>(),
        4usize..=8,
        0.05f64..0.24,
        0.05f64..0.95,
        0.0f64..1.0,
        -0.3f64..0.3,
        -0.3f64..0.3,
    )
        .prop_map(|(seed, dim, rho, t_frac, tilt, le, lh)| {
            random_tuple(seed, dim, rho, t_frac, tilt, le, lh)
        })
}

/// Tuples whose shared direction is exactly orthogonal to the span of
/// `e, h`, as in every scheme level. Only these keep both glued vertices on
/// the unit sphere; a leaning `v` can swallow the lee-side vertex into the
/// hull.
fn orthogonal_tuple_strategy() -> impl Strategy<Value = AlphaTuple> {
    (
        any::<u64>(),
        4usize..=8,
        0.05f64..0.24,
        0.05f64..0.95,
        0.0f64..1.0,
    )
        .prop_map(|(seed, dim, rho, t_frac, tilt)| {
            random_tuple(seed, dim, rho, t_frac, tilt, 0.0, 0.0)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(160))]

    #[test]
    fn gauge_axioms_hold(alpha in tuple_strategy(), pt_seed in any::<u64>(), s in -3.0f64..3.0) {
        let bn = BlueprintNorm::new(alpha, ToleranceConfig::default()).unwrap();
        let pts = sample_unit_ball(pt_seed, 2, bn.dim());
        let (x, y) = (&pts[0], &pts[1]);
        let gx = bn.gauge(x).unwrap();
        let gy = bn.gauge(y).unwrap();
        let rho = bn.alpha().rho;

        // Euclidean sandwich.
        prop_assert!(gx >= euclid_norm(x) - 1e-9);
        prop_assert!(gx <= euclid_norm(x) / (1.0 - rho) + 1e-9);

        // Positive homogeneity.
        let gs = bn.gauge(&x.scale(s)).unwrap();
        prop_assert!((gs - s.abs() * gx).abs() <= 1e-8 * (1.0 + s.abs()), "gs = {gs}, s gx = {}", s.abs() * gx);

        // Subadditivity.
        let gxy = bn.gauge(&x.add(y)).unwrap();
        prop_assert!(gxy <= gx + gy + 1e-8, "gxy = {gxy} vs {}", gx + gy);
    }

    #[test]
    fn closed_form_matches_nested_reference(alpha in tuple_strategy(), pt_seed in any::<u64>()) {
        let bn = BlueprintNorm::new(alpha, ToleranceConfig::default()).unwrap();
        let mut probes = sample_unit_ball(pt_seed, 2, bn.dim());
        probes.push(bn.points().y_plus.clone());
        probes.push(bn.points().x_plus.clone());
        for x in &probes {
            let fast = bn.gauge(x).unwrap();
            let slow = bn.nested_reference_gauge(x).unwrap();
            prop_assert!((fast - slow).abs() <= 1e-8 * (1.0 + slow), "{fast} vs {slow}");
        }
    }

    #[test]
    fn dual_certificates_never_exceed_the_gauge(alpha in tuple_strategy(), pt_seed in any::<u64>()) {
        let bn = BlueprintNorm::new(alpha, ToleranceConfig::default()).unwrap();
        let x = &sample_unit_ball(pt_seed, 1, bn.dim())[0];
        let net = bn.certification_net(x, pt_seed ^ 1, 32);
        let lower = bn.lower_bound(x, &net).unwrap();
        let g = bn.gauge(x).unwrap();
        prop_assert!(lower <= g + 1e-8, "lower = {lower}, gauge = {g}");
    }

    #[test]
    fn vertices_never_leave_the_unit_ball(alpha in tuple_strategy()) {
        // Both glued vertices generate the hull, so their gauge is at most 1
        // for every admissible tuple, leaning shared direction included.
        let bn = BlueprintNorm::new(alpha, ToleranceConfig::default()).unwrap();
        for y in [&bn.points().y_plus, &bn.points().y_minus] {
            let g = bn.gauge(y).unwrap();
            prop_assert!(g <= 1.0 + 1e-9, "gauge of glued vertex = {g}");
        }
    }

    #[test]
    fn vertices_sit_on_the_unit_sphere(alpha in orthogonal_tuple_strategy()) {
        // Equality needs v orthogonal to e and h: the supporting functional
        // for the flat edge is then a small h-correction of e_star and holds
        // both vertices at height one. A leaning v breaks the symmetry and
        // can pull the lee-side vertex strictly inside the hull.
        let bn = BlueprintNorm::new(alpha, ToleranceConfig::default()).unwrap();
        for y in [&bn.points().y_plus, &bn.points().y_minus] {
            let g = bn.gauge(y).unwrap();
            prop_assert!((g - 1.0).abs() <= 1e-7, "gauge of glued vertex = {g}");
        }
    }

    #[test]
    fn separation_estimates_hold_at_random_perturbations(
        alpha in tuple_strategy(),
        pt_seed in any::<u64>(),
    ) {
        let samples = sample_unit_ball(pt_seed, 2, alpha.dim());
        let k = &samples[0];
        // Reflect the e-component if necessary: keeps the ball, forces
        // admissibility for the slab item.
        let mut z = samples[1].clone();
        let ez = dual_eval(&alpha.e_star, &z).unwrap();
        if ez > 1.0 - alpha.rho {
            z = z.axpy(-2.0 * z.dot(&alpha.e), &alpha.e);
        }
        let r = lemma_residuals(&alpha, k, Some(&z)).unwrap();
        prop_assert!(r.min() >= -1e-12, "worst residual {}", r.min());
    }

    #[test]
    fn quadratic_mean_inequality(
        alpha in tuple_strategy(),
        pt_seed in any::<u64>(),
    ) {
        let bn = BlueprintNorm::new(alpha, ToleranceConfig::default()).unwrap();
        let pts = sample_unit_ball(pt_seed, 2, bn.dim());
        let q = q_functional(&bn, &pts[0], &pts[1]).unwrap();
        prop_assert!(q >= -1e-8, "blueprint q = {q}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn span_sections_reduce_to_three_dimensions(
        c1 in -1.2f64..1.2,
        c2 in -1.2f64..1.2,
        c3 in -1.2f64..1.2,
    ) {
        let big = BlueprintNorm::canonical(8).unwrap();
        let small = BlueprintNorm::canonical(3).unwrap();
        let x8 = Point::basis(8, 0)
            .scale(c1)
            .axpy(c2, &Point::basis(8, 1))
            .axpy(c3, &Point::basis(8, 2));
        let x3 = Point::new(vec![c1, c2, c3]).unwrap();
        let g8 = big.gauge(&x8).unwrap();
        let g3 = small.gauge(&x3).unwrap();
        prop_assert!((g8 - g3).abs() <= 1e-9 * (1.0 + g3), "{g8} vs {g3}");
    }

    #[test]
    fn composite_strict_convexity_probe(pt_seed in any::<u64>()) {
        let composite = CompositeNorm::canonical().unwrap();
        let pts = sample_unit_ball(pt_seed, 2, 8);
        let q = q_functional(&composite, &pts[0], &pts[1]).unwrap();
        prop_assert!(q >= -1e-8, "composite q = {q}");
        // The level-1 rotund term alone carries a quantitative floor.
        let term = composite.term(TermId(1)).unwrap();
        let qt = q_functional(term, &pts[0], &pts[1]).unwrap();
        let d = pts[0].sub(&pts[1]);
        let floor = term.eta * euclid_norm(&d).powi(2);
        prop_assert!(qt >= floor - 1e-8, "term q = {qt}, floor = {floor}");
    }
}

#[test]
fn scheme_levels_use_disjoint_slices() {
    let composite = CompositeNorm::canonical().unwrap();
    // Every level's witness pair collapses to a Euclidean point for every
    // other level: the slices do not interact.
    for n in 1..=4 {
        let yn = composite
            .term(TermId(n))
            .unwrap()
            .blueprint()
            .points()
            .y_plus
            .clone();
        for m in 1..=4 {
            if m == n {
                continue;
            }
            let g = composite.term(TermId(m)).unwrap().blueprint().gauge(&yn).unwrap();
            assert!(
                (g - euclid_norm(&yn)).abs() <= 1e-10,
                "level {m} at level {n}'s vertex: {g}"
            );
        }
    }
}

#[test]
fn config_dimensions_scale() {
    // Larger ladders and ambient dimensions build without touching the
    // shared direction.
    let config = SchemeConfig {
        rho: 0.15,
        levels: 6,
        dim: 12,
        v_index: 9,
    };
    let composite = CompositeNorm::build(config, ToleranceConfig::default()).unwrap();
    assert_eq!(composite.terms().len(), 6);
    let v = Point::basis(12, 8);
    let c = composite.gauge(&v).unwrap();
    assert!((c - 1.0 / (1.0 - 0.15 / 8.0)).abs() <= 1e-9);
}

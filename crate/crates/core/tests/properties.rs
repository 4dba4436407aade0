use proptest::prelude::*;

use circnet::catalog::parse_surface;
use circnet::conics::{
    circle_conic_intersections, conic_axes, diagonal_bisectors, pencil_degenerate_members, Conic2, Lambda,
};
use circnet::constructions::{circularity_defect, planarity_defect};
use circnet::geom3::{circle_through, moebius_invert, quat_cross_ratio, Circle3, Point2, Vec2, Vec3};
use circnet::harness::{fit_order, ConvergenceSample};
use circnet::nets::{build_circular_net, build_conjugate_projection};

fn vec3() -> impl Strategy<Value = Vec3> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vec3> {
    vec3().prop_filter("nonzero", |v| v.norm() > 0.2).prop_map(|v| v.normalized())
}

/// Rotation about `axis` by `angle` (Rodrigues) followed by a translation.
fn rigid(axis: Vec3, angle: f64, shift: Vec3) -> impl Fn(Vec3) -> Vec3 {
    move |p: Vec3| {
        let (c, s) = (angle.cos(), angle.sin());
        p * c + axis.cross(p) * s + axis * (axis.dot(p) * (1.0 - c)) + shift
    }
}

fn concircular(center: Vec3, radius: f64, normal: Vec3, t: [f64; 4]) -> [Vec3; 4] {
    let c = Circle3::new(center, radius, normal);
    let mut t = t;
    t.sort_by(f64::total_cmp);
    t.map(|x| c.point_at(x))
}

proptest! {
    #[test]
    fn inversion_is_an_involution(p in vec3(), c in vec3()) {
        prop_assume!(p.dist(c) > 1e-2);
        let back = moebius_invert(moebius_invert(p, c).unwrap(), c).unwrap();
        prop_assert!(back.dist(p) <= 1e-10 * (1.0 + p.norm()));
    }

    #[test]
    fn circumcircle_passes_through_its_points(a in vec3(), b in vec3(), c in vec3()) {
        let area = (b - a).cross(c - a).norm();
        prop_assume!(area > 1e-2);
        let k = circle_through(a, b, c).unwrap();
        for p in [a, b, c] {
            prop_assert!(k.distance(p) <= 1e-9 * (1.0 + k.radius));
        }
    }

    #[test]
    fn concircular_cross_ratio_is_real(
        center in vec3(), radius in 0.1..3.0f64, normal in unit(),
        t in prop::array::uniform4(0.0..std::f64::consts::TAU),
    ) {
        let [a, b, c, d] = concircular(center, radius, normal, t);
        let gaps = [a.dist(b), b.dist(c), c.dist(d), d.dist(a)];
        prop_assume!(gaps.iter().all(|g| *g > 1e-3 * radius));
        let q = quat_cross_ratio(a, b, c, d).unwrap();
        prop_assert!(q.imag().norm() <= 1e-8 * q.norm());
        prop_assert!(circularity_defect(a, b, c, d).unwrap().circularity.unwrap() <= 1e-8);
    }

    #[test]
    fn quad_defects_are_rigid_invariant(
        pts in prop::array::uniform4(vec3()), axis in unit(), angle in 0.0..6.0f64, shift in vec3(),
    ) {
        let [a, b, c, d] = pts;
        prop_assume!((b - a).cross(c - a).norm() > 0.1);
        let f = rigid(axis, angle, shift);
        let q0 = planarity_defect(a, b, c, d).unwrap();
        let q1 = planarity_defect(f(a), f(b), f(c), f(d)).unwrap();
        let (v0, v1) = (q0.planarity_volume.unwrap(), q1.planarity_volume.unwrap());
        prop_assert!((v0 - v1).abs() <= 1e-10 * (1.0 + v0.abs()));
        let (h0, h1) = (q0.planarity_height.unwrap(), q1.planarity_height.unwrap());
        prop_assert!((h0 - h1).abs() <= 1e-10 * (1.0 + h0.abs()));
    }

    #[test]
    fn quad_defects_scale_homogeneously(pts in prop::array::uniform4(vec3()), lam in 0.1..10.0f64) {
        let [a, b, c, d] = pts;
        prop_assume!((b - a).cross(c - a).norm() > 0.1);
        prop_assume!(a.dist(d) > 0.1 && b.dist(c) > 0.1);
        let q0 = planarity_defect(a, b, c, d).unwrap();
        let q1 = planarity_defect(a * lam, b * lam, c * lam, d * lam).unwrap();
        let (v0, v1) = (q0.planarity_volume.unwrap(), q1.planarity_volume.unwrap());
        prop_assert!((v1 - v0 * lam.powi(3)).abs() <= 1e-9 * (1.0 + v0.abs()) * lam.powi(3));
        let (h0, h1) = (q0.planarity_height.unwrap(), q1.planarity_height.unwrap());
        prop_assert!((h1 - h0 * lam).abs() <= 1e-9 * (1.0 + h0.abs()) * lam);
        let circ = |x: [Vec3; 4]| circularity_defect(x[0], x[1], x[2], x[3]).unwrap().circularity.unwrap();
        let (c0, c1) = (circ([a, b, c, d]), circ([a * lam, b * lam, c * lam, d * lam]));
        prop_assert!((c0 - c1).abs() <= 1e-9);
    }

    #[test]
    fn intersections_are_covariant(angle in 0.0..6.0f64, sx in -2.0..2.0f64, sy in -2.0..2.0f64) {
        let q = Conic2::from_coeffs(0.25, 0.1, 1.0, 0.0, 0.0, -1.0).unwrap();
        let w = Conic2::circle(Point2::new(0.2, 0.1), 1.5);
        let shift = Vec2::new(sx, sy);
        let map = |p: Point2| Vec2::new(angle.cos() * p.x - angle.sin() * p.y, angle.sin() * p.x + angle.cos() * p.y) + shift;
        let h0 = circle_conic_intersections(&q, &w).unwrap();
        let h1 = circle_conic_intersections(&q.transformed(angle, shift), &w.transformed(angle, shift)).unwrap();
        prop_assert_eq!(h0.len(), h1.len());
        for h in &h0 {
            let p = map(h.point);
            prop_assert!(h1.iter().any(|k| k.point.dist(p) < 1e-9));
        }
    }

    #[test]
    fn bisectors_are_parallel_to_axes(
        a in 1.2..2.0f64, b in 0.5..0.9f64, hyperbola in any::<bool>(), rot in 0.0..3.1f64,
        cx in -0.2..0.2f64, cy in -0.2..0.2f64, t in 0.15..0.85f64,
    ) {
        // Radius between the semi-axes (ellipse) or beyond the vertex (hyperbola): four crossings.
        let sign = if hyperbola { -1.0 } else { 1.0 };
        let r = if hyperbola { a + 0.3 + t } else { b + t * (a - b) };
        let shift = Vec2::new(0.3, -0.1);
        let q = Conic2::from_coeffs(1.0 / (a * a), 0.0, sign / (b * b), 0.0, 0.0, -1.0).unwrap().transformed(rot, shift);
        let hits = circle_conic_intersections(&q, &Conic2::circle(shift + Vec2::new(cx, cy), r)).unwrap();
        prop_assume!(hits.len() == 4 && hits.iter().all(|h| h.multiplicity == 1));
        let p: Vec<Point2> = hits.iter().map(|h| h.point).collect();
        let min_gap = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).map(|(i, j)| p[i].dist(p[j])).fold(f64::INFINITY, f64::min);
        prop_assume!(min_gap > 0.05 * r);
        let axes = conic_axes(&q).unwrap();
        let bis = diagonal_bisectors(p[0], p[1], p[2], p[3]).unwrap();
        for d in bis.dirs {
            let err = axes.iter().map(|x| d.cross(*x).abs().atan2(d.dot(*x).abs())).fold(f64::INFINITY, f64::min);
            prop_assert!(err < 1e-7, "{err}");
        }
    }

    #[test]
    fn pencil_members_are_singular(
        a in 0.3..2.0f64, c in 0.3..2.0f64, bxy in -0.3..0.3f64, cx in -1.0..1.0f64, cy in -1.0..1.0f64, r in 0.3..2.0f64,
    ) {
        let q = Conic2::from_coeffs(a, bxy, c, 0.0, 0.0, -1.0).unwrap();
        let w = Conic2::circle(Point2::new(cx, cy), r);
        let pd = pencil_degenerate_members(&q, &w).unwrap();
        for m in &pd.members {
            if let Lambda::Finite(l) = m.lambda {
                let mat = q.matrix() + w.matrix() * l;
                let scale = q.matrix().norm() + w.matrix().norm() * l.abs();
                prop_assert!(mat.determinant().abs() <= 1e-9 * scale.powi(3));
            }
        }
    }

    #[test]
    fn fit_is_invariant_under_error_rescaling(k in 1.0..4.0f64, c in 1e-3..1e3f64, noise in prop::array::uniform5(-0.01..0.01f64)) {
        let eps = [0.2, 0.1, 0.05, 0.025, 0.0125];
        let mk = |scale: f64| -> Vec<ConvergenceSample> {
            eps.iter().zip(noise).map(|(&e, n)| ConvergenceSample {
                eps: e,
                nominal_eps: e,
                error: scale * e.powf(k) * (1.0 + n),
                experiment: "p".into(),
                surface: "s".into(),
                metric: "m".into(),
                seed: 0,
            }).collect()
        };
        let (f0, f1) = (fit_order(&mk(1.0)).unwrap(), fit_order(&mk(c)).unwrap());
        prop_assert!((f0.slope - f1.slope).abs() < 1e-9);
        prop_assert!((f1.intercept - f0.intercept - c.ln()).abs() < 1e-9);
        prop_assert!((f0.slope - k).abs() < 0.05);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Vertex (i, j) depends only on its lower-left window, so a larger net extends a smaller one.
    #[test]
    fn circular_net_prefix_property(du in -0.3..0.3f64, dv in -0.3..0.3f64) {
        let s = parse_surface("ellipsoid-lines:a=3,b=2,c=1").unwrap();
        let uv0 = Point2::new(1.9 + du, 5.5 + dv);
        let small = build_circular_net(&s, uv0, 0.1, 3).unwrap();
        let big = build_circular_net(&s, uv0, 0.1, 5).unwrap();
        for v in &small.vertices {
            prop_assert_eq!(v.xyz, big.vertex(v.i, v.j).xyz);
        }
    }

    #[test]
    fn projection_net_prefix_property(du in -0.3..0.3f64, dv in -0.3..0.3f64) {
        let s = parse_surface("ellipsoid-lines:a=3,b=2,c=1").unwrap();
        let uv0 = Point2::new(1.9 + du, 5.5 + dv);
        let small = build_conjugate_projection(&s, uv0, 0.1, 3).unwrap();
        let big = build_conjugate_projection(&s, uv0, 0.1, 5).unwrap();
        for v in &small.vertices {
            prop_assert_eq!(v.xyz, big.vertex(v.i, v.j).xyz);
        }
    }
}

#[test]
fn nets_are_deterministic() {
    let s = parse_surface("ellipsoid-lines:a=3,b=2,c=1").unwrap();
    let uv0 = s.default_uv();
    let a = build_circular_net(&s, uv0, 0.05, 8).unwrap();
    let b = build_circular_net(&s, uv0, 0.05, 8).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

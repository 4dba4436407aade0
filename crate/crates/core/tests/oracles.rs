//! Library results compared against closed forms and independent computations.

use std::f64::consts::{FRAC_PI_2, PI};

use circnet::catalog::parse_surface;
use circnet::conics::{circle_conic_intersections, conic_axes, diagonal_bisectors, Conic2};
use circnet::constructions::{
    circular_fourth_point, double_planar_point, ee6_coefficient, euclidean_principal, moebius_principal,
    planar_fourth_point, planarity_defect,
};
use circnet::geom3::{circle_through, moebius_invert, triple_product, Circle3, Plane3, Point2, Vec2, Vec3};
use circnet::intersect::{circle_surface_hits, line_surface_hit, plane_section, sphere_tangent_at, SurfaceHit};
use circnet::nets::smooth_net_traced;
use circnet::surface::{
    closest_point, conjugate_coeffs, dupin_indicatrix, is_umbilic, principal_frame, trace_curvature_line, Domain,
    Family, FnSurface, ParamTag, Surface,
};
use circnet::GeomError;

fn v3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

fn uv(u: f64, v: f64) -> Point2 {
    Point2::new(u, v)
}

fn line_angle(a: Vec3, b: Vec3) -> f64 {
    let (a, b) = (a.normalized(), b.normalized());
    a.cross(b).norm().atan2(a.dot(b).abs())
}

#[test]
fn circumcircle_is_covariant_under_rotation() {
    let (a, b, c) = (v3(1.0, 0.0, 0.0), v3(1.0, 1.0, 0.0), v3(1.0, 0.0, 1.0));
    let base = circle_through(a, b, c).unwrap();
    assert!(base.center.dist(v3(1.0, 0.5, 0.5)) < 1e-14);
    assert!((base.radius - 0.5f64.sqrt()).abs() < 1e-14);
    let rot = |p: Vec3| {
        let (s, co) = (0.7f64.sin(), 0.7f64.cos());
        v3(co * p.x - s * p.z, p.y, s * p.x + co * p.z) + v3(0.3, -1.0, 2.0)
    };
    let moved = circle_through(rot(a), rot(b), rot(c)).unwrap();
    assert!(moved.center.dist(rot(base.center)) < 1e-13);
    assert!((moved.radius - base.radius).abs() < 1e-13);
}

#[test]
fn triple_product_examples() {
    assert_eq!(triple_product(Vec3::X, Vec3::Y, Vec3::Z), 1.0);
    let u = v3(0.3, -2.0, 1.5);
    assert!(triple_product(u, u, v3(1.0, 2.0, 3.0)).abs() < 1e-15);
}

#[test]
fn inversion_fixes_its_sphere() {
    let c = v3(1.0, 2.0, -1.0);
    let p = c + v3(0.6, 0.0, 0.8);
    assert!(moebius_invert(p, c).unwrap().dist(p) < 1e-15);
    assert_eq!(moebius_invert(c, c), Err(GeomError::CenterCoincidence));
}

#[test]
fn conic_axes_follow_rotation() {
    let q = Conic2::from_coeffs(0.25, 0.0, 1.0, 0.0, 0.0, -1.0).unwrap();
    let ax = conic_axes(&q).unwrap();
    assert!((ax[0].x.abs() - 1.0).abs() < 1e-14 && (ax[1].y.abs() - 1.0).abs() < 1e-14);
    let r = q.transformed(0.3, Vec2::new(0.5, -0.2));
    let ax = conic_axes(&r).unwrap();
    let want = Vec2::new(0.3f64.cos(), 0.3f64.sin());
    assert!(ax[0].cross(want).abs() < 1e-10);
    assert_eq!(conic_axes(&Conic2::circle(Point2::new(0.0, 0.0), 1.0)).err(), Some(GeomError::CircularConic));
}

#[test]
fn square_bisectors_are_the_axes() {
    let b = diagonal_bisectors(
        Point2::new(-1.0, -1.0),
        Point2::new(1.0, -1.0),
        Point2::new(1.0, 1.0),
        Point2::new(-1.0, 1.0),
    )
    .unwrap();
    let mut xs: Vec<f64> = b.dirs.iter().map(|d| d.x.abs()).collect();
    xs.sort_by(f64::total_cmp);
    assert!(xs[0] < 1e-14 && (xs[1] - 1.0).abs() < 1e-14);
    let a = Point2::new(0.2, 0.1);
    assert!(diagonal_bisectors(a, Point2::new(1.0, 0.0), a, Point2::new(0.0, 1.0)).is_err());
}

#[test]
fn tangential_circle_conic_contacts() {
    let q = Conic2::from_coeffs(1.0, 0.0, 4.0, 0.0, 0.0, -4.0).unwrap();
    let w = Conic2::circle(Point2::new(0.0, 0.0), 1.0);
    let hits = circle_conic_intersections(&q, &w).unwrap();
    assert_eq!(hits.len(), 2);
    for h in &hits {
        assert!(h.point.x.abs() < 1e-6 && (h.point.y.abs() - 1.0).abs() < 1e-9);
        assert_eq!(h.multiplicity, 2);
    }
    let inside = Conic2::circle(Point2::new(0.0, 0.0), 0.2);
    assert!(circle_conic_intersections(&q, &inside).unwrap().is_empty());
}

#[test]
fn circle_conic_hits_match_angle_scan() {
    let q = Conic2::from_coeffs(1.0 / 4.0, 0.1, 1.0, 0.0, 0.0, -1.0).unwrap();
    let (c, r) = (Point2::new(0.2, 0.1), 1.5);
    let hits = circle_conic_intersections(&q, &Conic2::circle(c, r)).unwrap();
    // Oracle: sign changes of Q along the circle angle, refined by bisection.
    let g = |t: f64| q.eval(Point2::new(c.x + r * t.cos(), c.y + r * t.sin()));
    let mut roots = Vec::new();
    let n = 20_000;
    for k in 0..n {
        let (mut a, mut b) = (2.0 * PI * k as f64 / n as f64, 2.0 * PI * (k + 1) as f64 / n as f64);
        if g(a).signum() != g(b).signum() {
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if g(a).signum() == g(m).signum() {
                    a = m
                } else {
                    b = m
                }
            }
            roots.push(Point2::new(c.x + r * a.cos(), c.y + r * a.sin()));
        }
    }
    assert_eq!(hits.len(), 4);
    assert_eq!(roots.len(), 4);
    for h in &hits {
        assert!(q.eval(h.point).abs() < 1e-12);
        assert!(roots.iter().any(|p| p.dist(h.point) < 1e-10));
    }
}

#[test]
fn torus_curvatures_closed_form() {
    let (big_r, r) = (2.0, 1.0);
    let s = parse_surface("torus:R=2,r=1").unwrap();
    for &(u, v) in &[(0.0, 0.0), (0.7, 0.3), (-1.1, 2.0), (2.5, -0.4)] {
        let fr = principal_frame(&s, uv(u, v)).unwrap();
        let kp = u.cos() / (big_r + r * u.cos());
        let km = 1.0 / r;
        let (lo, hi) = if kp < km { (kp, km) } else { (km, kp) };
        assert!((fr.k1 - lo).abs() < 1e-12 && (fr.k2 - hi).abs() < 1e-12, "{u} {v}");
        // The meridian direction carries 1/r.
        let meridian = v3(-u.sin() * v.cos(), -u.sin() * v.sin(), u.cos());
        assert!(line_angle(fr.dir2, meridian) < 1e-10);
    }
    let fr = principal_frame(&s, uv(0.0, 0.0)).unwrap();
    assert!(fr.point.dist(v3(3.0, 0.0, 0.0)) < 1e-15);
    assert!((fr.k1 - 1.0 / 3.0).abs() < 1e-14 && (fr.k2 - 1.0).abs() < 1e-14);
}

#[test]
fn sphere_and_cylinder_curvatures() {
    let sph = parse_surface("sphere:R=2").unwrap();
    let fr = principal_frame(&sph, uv(0.3, 1.0)).unwrap();
    assert!((fr.k1 - 0.5).abs() < 1e-13 && (fr.k2 - 0.5).abs() < 1e-13);
    assert!(is_umbilic(&sph, uv(0.3, 1.0), 1e-6).unwrap());
    let cyl = parse_surface("cylinder:r=0.5").unwrap();
    let fr = principal_frame(&cyl, uv(0.1, 0.2)).unwrap();
    assert!(fr.k1.abs() < 1e-13 && (fr.k2 - 2.0).abs() < 1e-13);
    assert!(!is_umbilic(&parse_surface("torus").unwrap(), uv(0.0, 0.0), 1e-4).unwrap());
}

#[test]
fn ellipsoid_umbilic_closed_form() {
    let (a, b, c): (f64, f64, f64) = (3.0, 2.0, 1.0);
    let s = parse_surface("ellipsoid:a=3,b=2,c=1").unwrap();
    // Classical umbilic: x = a sqrt((a2-b2)/(a2-c2)), y = 0 -> cos u = sqrt((a2-b2)/(a2-c2)).
    let u0 = ((a * a - b * b) / (a * a - c * c)).sqrt().acos();
    assert!(is_umbilic(&s, uv(u0, 0.0), 1e-6).unwrap());
    assert!(!is_umbilic(&s, uv(u0 + 0.2, 0.3), 1e-6).unwrap());
}

#[test]
fn jet_matches_finite_differences() {
    let s = parse_surface("cubic-graph").unwrap();
    let fd = FnSurface { f: |p: Point2| s.point(p), domain: Domain::ALL, tag: ParamTag::Generic };
    let p = uv(0.3, -0.2);
    let (a, b) = (s.jet(p), fd.jet(p));
    for (x, y) in a.as_array().iter().zip(b.as_array()) {
        assert!(x.dist(y) < 1e-6, "{x:?} vs {y:?}");
    }
}

#[test]
fn revolution_conjugate_coefficients() {
    // g = 2 + cos u, h = sin u: a = 0, b = g'/g.
    let s = parse_surface("revolve:g0=2,g1=1,h1=1").unwrap();
    for &u in &[0.3, -1.0, 2.2] {
        let (a, b) = conjugate_coeffs(&s, uv(u, 0.4)).unwrap();
        assert!(a.abs() < 1e-13);
        assert!((b - (-u.sin() / (2.0 + u.cos()))).abs() < 1e-13);
    }
    let t = parse_surface("translational").unwrap();
    let (a, b) = conjugate_coeffs(&t, uv(0.2, -0.1)).unwrap();
    assert!(a.abs() < 1e-14 && b.abs() < 1e-14);
    assert_eq!(conjugate_coeffs(&parse_surface("cubic-graph").unwrap(), uv(0.1, 0.1)), Err(GeomError::NotConjugate));
}

#[test]
fn ellipsoid_lines_conjugate_coefficients() {
    let s = parse_surface("ellipsoid-lines:a=3,b=2,c=1").unwrap();
    for &(u, v) in &[(1.9, 5.5), (1.3, 4.6), (3.5, 8.0)] {
        let (a, b) = conjugate_coeffs(&s, uv(u, v)).unwrap();
        assert!((a - 1.0 / (2.0 * (v - u))).abs() < 1e-10);
        assert!((b - 1.0 / (2.0 * (u - v))).abs() < 1e-10);
    }
}

#[test]
fn defect_coefficient_on_ellipsoid_lines() {
    // a = 1/(2(v-u)), b = -a, so a_u - ab = b_v - ab = 3 / (4 (u-v)^2).
    let s = parse_surface("ellipsoid-lines:a=3,b=2,c=1").unwrap();
    for &(u, v) in &[(1.9, 5.5), (1.3, 4.6), (3.5, 8.0)] {
        let j = s.jet(uv(u, v));
        let l1 = j.fuu.cross(j.fu).dot(j.fv);
        let n1 = j.fvv.cross(j.fu).dot(j.fv);
        let want = 3.0 / (4.0 * (u - v) * (u - v)) * (l1 + n1);
        let got = ee6_coefficient(&s, uv(u, v)).unwrap();
        assert!((got - want).abs() < 1e-6 * want.abs(), "{got} vs {want}");
    }
}

#[test]
fn defect_coefficient_vanishes_on_revolution_and_translation() {
    let r = parse_surface("revolve:g0=2,g1=1,h1=1").unwrap();
    assert!(ee6_coefficient(&r, uv(0.3, 0.2)).unwrap().abs() < 1e-8);
    let t = parse_surface("translational").unwrap();
    assert!(ee6_coefficient(&t, uv(0.1, 0.4)).unwrap().abs() < 1e-12);
}

#[test]
fn translational_quads_are_planar() {
    let s = parse_surface("translational").unwrap();
    let e = 0.1;
    let p = |i: f64, j: f64| s.point(uv(i * e, j * e));
    let q = planarity_defect(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), p(1.0, 1.0)).unwrap();
    assert!(q.planarity_volume.unwrap().abs() < 1e-14 * e.powi(3));
}

#[test]
fn dupin_indicatrix_examples() {
    let para = parse_surface("cubic-graph:a30=0,a21=0,a12=0,a03=0").unwrap();
    let plane = Plane3::from_point_normal(v3(0.0, 0.0, 0.02), Vec3::Z).unwrap();
    let ind = dupin_indicatrix(&para, uv(0.0, 0.0), &plane, None).unwrap();
    for &(x, y) in &[(0.2, 0.0), (0.0, 0.02f64.sqrt()), (-0.2, 0.0)] {
        assert!(ind.conic.eval(Point2::new(x, y)).abs() < 1e-12 * ind.conic.norm());
    }
    let tilted = Plane3::from_point_normal(v3(0.0, 0.0, 0.02), v3(-0.001, 0.0, 1.0)).unwrap();
    let ind = dupin_indicatrix(&para, uv(0.0, 0.0), &tilted, None).unwrap();
    // Substitution: points of the paraboloid lying on the tilted plane.
    for k in 0..8 {
        let t = k as f64 * PI / 4.0;
        let (dx, dy) = (t.cos(), t.sin());
        // Solve (x^2 + 2 y^2)/2 = 0.02 + 0.001 x along the ray for its radius.
        let (qa, qb) = ((dx * dx + 2.0 * dy * dy) / 2.0, -0.001 * dx);
        let rr = (-qb + (qb * qb + 4.0 * qa * 0.02).sqrt()) / (2.0 * qa);
        let (x, y) = (rr * dx, rr * dy);
        let q = ind.coords(v3(x, y, (x * x + 2.0 * y * y) / 2.0));
        assert!(ind.conic.eval(q).abs() < 1e-12 * ind.conic.norm());
    }
}

#[test]
fn circle_and_sphere_intersection() {
    let s = parse_surface("sphere:R=1").unwrap();
    let c = Circle3::new(v3(0.5, 0.0, 0.0), 1.0, Vec3::Z);
    let hits = circle_surface_hits(&c, &s, uv(0.0, 0.0)).unwrap();
    assert_eq!(hits.len(), 2);
    for h in &hits {
        assert!((h.point.x - 0.25).abs() < 1e-10 && (h.point.y.abs() - 15f64.sqrt() / 4.0).abs() < 1e-10);
    }
    let inner = Circle3::new(v3(0.0, 0.0, 0.0), 0.1, Vec3::Z);
    assert!(circle_surface_hits(&inner, &s, uv(0.0, 0.0)).unwrap().is_empty());
    let great = Circle3::new(v3(0.0, 0.0, 0.0), 1.0, Vec3::Z);
    assert_eq!(circle_surface_hits(&great, &s, uv(0.0, 0.0)).err(), Some(GeomError::AllOnSurface));
}

#[test]
fn line_hits() {
    let s = parse_surface("sphere:R=1").unwrap();
    let top = line_surface_hit(v3(0.0, 0.0, 0.0), Vec3::Z, &s, uv(1.2, 0.0)).unwrap();
    assert!(top.point.dist(Vec3::Z) < 1e-12);
    let g = parse_surface("cubic-graph").unwrap();
    let h = line_surface_hit(v3(0.3, -0.2, 5.0), Vec3::Z, &g, uv(0.0, 0.0)).unwrap();
    assert!(h.point.dist(g.point(uv(0.3, -0.2))) < 1e-12);
    let cyl = parse_surface("cylinder:r=1").unwrap();
    let dir = v3(1e-8, 0.0, 1.0).normalized();
    assert!(line_surface_hit(v3(1.0, 0.0, 0.0), dir, &cyl, uv(0.0, 0.0)).is_err());
}

#[test]
fn sphere_section_is_a_circle() {
    let s = parse_surface("sphere:R=1").unwrap();
    let plane = Plane3::from_point_normal(v3(0.0, 0.0, 0.6), Vec3::Z).unwrap();
    let seed = line_surface_hit(v3(0.8, 0.0, 0.6), Vec3::X, &s, uv(0.6, 0.0)).unwrap();
    let sec = plane_section(&s, &plane, &seed, 0.05).unwrap();
    assert!(sec.closed);
    for p in &sec.points {
        assert!((p.point.x.hypot(p.point.y) - 0.8).abs() < 1e-8 && (p.point.z - 0.6).abs() < 1e-8);
    }
    let tangent = Plane3::from_point_normal(Vec3::Z, Vec3::Z).unwrap();
    let seed = SurfaceHit::at(&s, uv(FRAC_PI_2 - 1e-9, 0.0));
    assert_eq!(plane_section(&s, &tangent, &seed, 0.05).err(), Some(GeomError::TangentialContact));
}

#[test]
fn torus_equatorial_section_finds_seeded_circle() {
    let s = parse_surface("torus:R=2,r=1").unwrap();
    let plane = Plane3::from_point_normal(Vec3::ZERO, Vec3::Z).unwrap();
    for (u0, rad) in [(0.0, 3.0), (PI, 1.0)] {
        let seed = SurfaceHit::at(&s, uv(u0, 0.0));
        let sec = plane_section(&s, &plane, &seed, 0.05).unwrap();
        for p in &sec.points {
            assert!((p.point.x.hypot(p.point.y) - rad).abs() < 1e-8);
        }
    }
}

#[test]
fn tangent_spheres() {
    let t = parse_surface("torus:R=2,r=1").unwrap();
    let sp = sphere_tangent_at(&t, uv(0.0, 0.0), 2.0).unwrap();
    assert!(sp.center.dist(v3(1.0, 0.0, 0.0)) < 1e-12);
    let sph = parse_surface("sphere:R=1").unwrap();
    assert_eq!(sphere_tangent_at(&sph, uv(0.2, 0.1), 1.0).err(), Some(GeomError::CurvatureSandwichViolated));
    let g = parse_surface("cubic-graph").unwrap();
    assert!(sphere_tangent_at(&g, uv(0.0, 0.0), 1.0 / 1.5).is_ok());
}

#[test]
fn foot_points() {
    let s = parse_surface("ellipsoid:a=3,b=2,c=1").unwrap();
    let p0 = uv(0.4, 0.7);
    let j = s.jet(p0);
    let off = j.p + j.normal() * 0.01;
    let back = closest_point(&s, off, uv(0.35, 0.75)).unwrap();
    assert!(back.dist(p0) < 1e-8);
    let sph = parse_surface("sphere:R=1").unwrap();
    let q = sph.point(uv(0.3, 0.9));
    let foot = closest_point(&sph, q * 2.0, uv(0.1, 0.5)).unwrap();
    assert!(sph.point(foot).dist(q) < 1e-10);
}

#[test]
fn curvature_line_tracing() {
    let s = parse_surface("torus:R=2,r=1").unwrap();
    let start = uv(0.0, 0.0);
    // Parallel through the outer equator has length 2 pi (R + r).
    let end = trace_curvature_line(&s, start, Family::First, 2.0 * PI * 3.0).unwrap();
    assert!(s.point(end).dist(s.point(start)) < 1e-6);
    let r = parse_surface("revolve:g0=2,g1=1,h1=1").unwrap();
    let m = trace_curvature_line(&r, uv(0.3, 0.2), Family::Second, 0.05).unwrap();
    assert!((m.y - 0.2).abs() < 1e-9 || (m.x - 0.3).abs() < 1e-9);
}

#[test]
fn symmetric_euclidean_configuration_is_exact() {
    // Mirror symmetric in both the meridian and the equatorial plane through P = (3, 0, 0):
    // the four points form a planar rectangle, so D is exact and Z_f = P.
    let s = parse_surface("torus:R=2,r=1").unwrap();
    let (a, b) = (0.08, 0.05);
    let h = |u: f64, v: f64| SurfaceHit::at(&s, uv(u, v));
    let est = euclidean_principal(&s, &h(a, b), &h(-a, b), &h(-a, -b)).unwrap();
    assert!(est.base_point.dist(v3(3.0, 0.0, 0.0)) < 1e-9);
    assert!(est.max_error() < 1e-7, "{}", est.max_error());
}

#[test]
fn traced_net_on_revolution_matches_parametrization() {
    // g = 2 + cos u, h = sin u: the meridian has unit speed and the parallel has speed g(u0).
    let s = parse_surface("revolve:g0=2,g1=1,h1=1").unwrap();
    let (u0, v0, e) = (0.3, 0.2, 0.05);
    let fr = principal_frame(&s, uv(u0, v0)).unwrap();
    let fu = s.jet(uv(u0, v0)).fu;
    let meridian = if line_angle(fr.dir1, fu) < line_angle(fr.dir2, fu) { Family::First } else { Family::Second };
    let net = smooth_net_traced(&s, uv(u0, v0), e, 6, 5, meridian).unwrap();
    let g0 = 2.0 + u0.cos();
    for vx in &net.vertices {
        let want = s.point(uv(u0 + vx.i as f64 * e, v0 + vx.j as f64 * e / g0));
        assert!(vx.xyz.dist(want) < 1e-8, "({}, {})", vx.i, vx.j);
    }
}

#[test]
fn moebius_on_cylinder_is_exact() {
    let s = parse_surface("cylinder:r=1").unwrap();
    let est = moebius_principal(&s, uv(0.2, 0.3), 1.6, 0.1).unwrap();
    assert!(est.max_error() < 1e-6);
}

#[test]
fn fourth_points_on_flat_and_symmetric_surfaces() {
    let plane = FnSurface { f: |p: Point2| v3(p.x, p.y, 0.0), domain: Domain::ALL, tag: ParamTag::CurvatureLine };
    let h = |s: &dyn Surface, x: f64, y: f64| SurfaceHit::at(s, uv(x, y));
    let m = planar_fourth_point(
        &plane,
        &h(&plane, 0.0, 0.0),
        &h(&plane, 0.1, 0.0),
        &h(&plane, 0.0, 0.1),
        &h(&plane, 0.1, 0.1),
    )
    .unwrap();
    assert_eq!(m.point, v3(0.1, 0.1, 0.0));
    // Round cylinder with a square grid: the quad is an exact rectangle.
    let cyl = parse_surface("cylinder:r=1").unwrap();
    let (a, b, c, d) = (h(&cyl, 0.2, 0.3), h(&cyl, 0.3, 0.3), h(&cyl, 0.2, 0.4), h(&cyl, 0.3, 0.4));
    let m = circular_fourth_point(&cyl, &a, &b, &c, &d).unwrap();
    assert!(m.point.dist(d.point) < 1e-9);
    let sph = parse_surface("sphere:R=1").unwrap();
    let (a, b, c, d) = (h(&sph, 0.2, 0.3), h(&sph, 0.3, 0.3), h(&sph, 0.2, 0.4), h(&sph, 0.3, 0.4));
    assert!(circular_fourth_point(&sph, &a, &b, &c, &d).is_err());
}

#[test]
fn double_planar_point_on_translational_surface() {
    let s = parse_surface("translational").unwrap();
    let e = 0.1;
    let h = |i: f64, j: f64| SurfaceHit::at(&s, uv(i * e, j * e));
    // ABMC and BMFE planar, with E = (2, 0), F = (2, 1).
    let m = double_planar_point(&s, &h(0.0, 0.0), &h(1.0, 0.0), &h(0.0, 1.0), &h(2.0, 0.0), &h(2.0, 1.0), &h(1.0, 1.0))
        .unwrap();
    assert!(m.point.dist(h(1.0, 1.0).point) < 1e-10);
    let cg = parse_surface("cylinder-graph").unwrap();
    let h = |i: f64, j: f64| SurfaceHit::at(&cg, uv(i * e, j * e));
    assert_eq!(
        double_planar_point(&cg, &h(0.0, 0.0), &h(1.0, 0.0), &h(0.0, 1.0), &h(2.0, 0.0), &h(2.0, 1.0), &h(1.0, 1.0))
            .err(),
        Some(GeomError::ParabolicPoint)
    );
}

//! Principal directions from circles, quad defects, and fourth-point solvers.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::conics::diagonal_bisectors;
use crate::error::{GeomError, Result};
use crate::geom3::{circle_through, quat_cross_ratio, triple_product, Plane3, Point2, Point3, Vec3};
use crate::intersect::{circle_on_sphere, circle_surface_hits, line_surface_hit, sphere_tangent_at, SurfaceHit};
use crate::surface::{
    closest_point, conjugate_coeffs, frame_from_jet, principal_frame, umbilic_frame, ParamTag, PrincipalFrame, Surface,
    DEFAULT_UMBILIC_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrincipalEstimate {
    pub base_point: Point3,
    pub base_uv: Point2,
    pub dir1: Vec3,
    pub dir2: Vec3,
    pub reference: PrincipalFrame,
    pub angle_err_1: f64,
    pub angle_err_2: f64,
    pub eps_eff: f64,
}

impl PrincipalEstimate {
    pub fn max_error(&self) -> f64 {
        self.angle_err_1.max(self.angle_err_2)
    }
}

/// Angle in [0, pi/2] between the lines spanned by two vectors.
pub fn line_angle(a: Vec3, b: Vec3) -> f64 {
    let c = a.normalized().cross(b.normalized()).norm();
    let d = a.normalized().dot(b.normalized()).abs();
    c.atan2(d)
}

/// Matches estimated lines to the reference mod pi/2 and packages the estimate.
fn matched_estimate(p1: Vec3, p2: Vec3, reference: PrincipalFrame, base_uv: Point2, eps_eff: f64) -> PrincipalEstimate {
    let straight = (line_angle(p1, reference.dir1), line_angle(p2, reference.dir2));
    let swapped = (line_angle(p2, reference.dir1), line_angle(p1, reference.dir2));
    let (d1, d2, e) =
        if straight.0.max(straight.1) <= swapped.0.max(swapped.1) { (p1, p2, straight) } else { (p2, p1, swapped) };
    let orient = |d: Vec3, r: Vec3| if d.dot(r) < 0.0 { -d } else { d };
    PrincipalEstimate {
        base_point: reference.point,
        base_uv,
        dir1: orient(d1.normalized(), reference.dir1),
        dir2: orient(d2.normalized(), reference.dir2),
        reference,
        angle_err_1: e.0,
        angle_err_2: e.1,
        eps_eff,
    }
}

fn max_pairwise(pts: &[Point3]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            m = m.max(pts[i].dist(pts[j]));
        }
    }
    m
}

fn in_arc(x: f64, start: f64, end: f64) -> bool {
    (x - start).rem_euclid(TAU) < (end - start).rem_euclid(TAU)
}

/// Index of the hit closest to `p`, if within `tol`.
fn find_hit(hits: &[SurfaceHit], p: Point3, tol: f64) -> Option<usize> {
    hits.iter()
        .enumerate()
        .map(|(k, h)| (k, h.point.dist(p)))
        .filter(|&(_, d)| d <= tol)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
}

/// Euclidean construction from three surface points A, B, C.
pub fn euclidean_principal(
    s: &dyn Surface,
    a: &SurfaceHit,
    b: &SurfaceHit,
    c: &SurfaceHit,
) -> Result<PrincipalEstimate> {
    let interior = {
        let (u, w) = (a.point - b.point, c.point - b.point);
        u.cross(w).norm().atan2(u.dot(w))
    };
    if interior < PI / 6.0 || interior.is_nan() {
        return Err(GeomError::DiagonalDegenerate);
    }
    if umbilic_frame(&principal_frame(s, b.uv)?, DEFAULT_UMBILIC_TOL) {
        return Err(GeomError::UmbilicRegion);
    }
    let omega = circle_through(a.point, b.point, c.point)?;
    let hits = circle_surface_hits(&omega, s, b.uv)?;
    let tol = 1e-6 * omega.radius;
    let idx: Vec<usize> = [a, b, c]
        .iter()
        .map(|h| find_hit(&hits, h.point, tol).ok_or(GeomError::FourthPointMissing))
        .collect::<Result<_>>()?;
    let (ta, tb, tc) = (hits[idx[0]].param, hits[idx[1]].param, hits[idx[2]].param);
    // D lies on the arc between C and A that avoids B.
    let (lo, hi) = if in_arc(tb, tc, ta) { (ta, tc) } else { (tc, ta) };
    let mid = lo + 0.5 * (hi - lo).rem_euclid(TAU);
    let candidates: Vec<&SurfaceHit> =
        hits.iter().enumerate().filter(|(k, h)| !idx.contains(k) && h.multiplicity == 1).map(|(_, h)| h).collect();
    let gap = |h: &SurfaceHit| {
        let d = (h.param - mid).rem_euclid(TAU);
        d.min(TAU - d)
    };
    let d = candidates
        .iter()
        .filter(|h| in_arc(h.param, lo, hi))
        .min_by(|x, y| gap(x).total_cmp(&gap(y)))
        .or_else(|| candidates.iter().min_by(|x, y| gap(x).total_cmp(&gap(y))))
        .copied()
        .ok_or(GeomError::FourthPointMissing)?;
    let mut quad = [*a, *b, *c, *d];
    for (h, k) in quad.iter_mut().zip([idx[0], idx[1], idx[2]]) {
        h.param = hits[k].param;
    }
    quad.sort_by(|x, y| x.param.total_cmp(&y.param));
    let q2: Vec<Point2> = quad.iter().map(|h| omega.to_plane(h.point)).collect();
    let bis = diagonal_bisectors(q2[0], q2[1], q2[2], q2[3])?;
    let z = match (bis.parallel, bis.vertex) {
        (false, Some(z)) => z,
        _ => return Err(GeomError::DiagonalDegenerate),
    };
    let z3 = omega.from_plane(z);
    let hint = closest_point(s, z3, b.uv)?;
    let zf = line_surface_hit(z3, omega.normal, s, hint)?;
    let frame = principal_frame(s, zf.uv)?;
    let nf = frame.normal;
    let nl = omega.normal;
    let denom = nl.dot(nf);
    if denom.abs() <= 1e-12 {
        return Err(GeomError::DiagonalDegenerate);
    }
    let project = |v: Vec3| (v - nl * (v.dot(nf) / denom)).normalized();
    let lift = |v: Point2| omega.axis * v.x + omega.axis2() * v.y;
    let p1 = project(lift(bis.dirs[0]));
    let p2 = project(lift(bis.dirs[1]));
    let pts: Vec<Point3> = vec![a.point, b.point, c.point];
    Ok(matched_estimate(p1, p2, frame, zf.uv, max_pairwise(&pts)))
}

/// Tangent direction at `p` of the circle through `x`, `p`, `y`.
fn circle_tangent_at(x: Point3, p: Point3, y: Point3) -> Result<Vec3> {
    let w = circle_through(x, p, y)?;
    Ok(w.normal.cross(p - w.center).normalized())
}

/// Moebius-invariant construction at uv_p with a tangent sphere of radius R.
pub fn moebius_principal(s: &dyn Surface, uv_p: Point2, radius: f64, eps: f64) -> Result<PrincipalEstimate> {
    let frame = principal_frame(s, uv_p)?;
    if umbilic_frame(&frame, DEFAULT_UMBILIC_TOL) {
        return Err(GeomError::UmbilicRegion);
    }
    let sphere = sphere_tangent_at(s, uv_p, radius)?;
    let omega = circle_on_sphere(&sphere, frame.point, eps);
    let hits = circle_surface_hits(&omega, s, uv_p)?;
    if hits.len() != 4 || hits.iter().any(|h| h.multiplicity != 1) {
        return Err(GeomError::FourPointsNotFound(hits.len()));
    }
    let p = frame.point;
    let n = frame.normal;
    let t1 = circle_tangent_at(hits[0].point, p, hits[2].point)?.reject(n).normalized();
    let mut t2 = circle_tangent_at(hits[1].point, p, hits[3].point)?.reject(n).normalized();
    if t1.dot(t2) < 0.0 {
        t2 = -t2;
    }
    let b1 = (t1 + t2).normalized();
    let b2 = n.cross(b1);
    let pts: Vec<Point3> = hits.iter().take(3).map(|h| h.point).collect();
    Ok(matched_estimate(b1, b2, frame, uv_p, max_pairwise(&pts)))
}

/// Sphere radius whose curvature is the mean of K1 and K2 at uv.
pub fn midpoint_radius(s: &dyn Surface, uv: Point2) -> Result<f64> {
    let fr = principal_frame(s, uv)?;
    let m = 0.5 * (fr.k1 + fr.k2);
    if m.abs() > 1e-12 {
        return Ok(1.0 / m.abs());
    }
    // Mean curvature ~ 0: use the curvature a quarter of the way in from either end.
    Ok(1.0 / (0.25 * (fr.k2 - fr.k1)).abs().max(1e-12))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct QuadDefects {
    pub planarity_volume: Option<f64>,
    pub planarity_height: Option<f64>,
    pub circularity: Option<f64>,
    pub eps_eff: f64,
}

/// Volume spanned by AB, AC, AD and the height of D over the plane ABC.
pub fn planarity_defect(a: Point3, b: Point3, c: Point3, d: Point3) -> Result<QuadDefects> {
    let (ab, ac, ad) = (b - a, c - a, d - a);
    let base = ab.cross(ac).norm();
    let edge = ab.norm().max(ac.norm());
    if base <= 1e-12 * edge * edge || edge == 0.0 {
        return Err(GeomError::CollinearBase);
    }
    let vol = triple_product(ab, ac, ad);
    Ok(QuadDefects {
        planarity_volume: Some(vol),
        planarity_height: Some(vol.abs() / base),
        circularity: None,
        eps_eff: max_pairwise(&[a, b, c]),
    })
}

/// |Im Q| / |Q| for the quaternionic cross-ratio of A, B, C, D.
pub fn circularity_defect(a: Point3, b: Point3, c: Point3, d: Point3) -> Result<QuadDefects> {
    let q = quat_cross_ratio(a, b, c, d)?;
    let qn = q.norm();
    let circ = if qn == 0.0 { 0.0 } else { q.imag().norm() / qn };
    Ok(QuadDefects { circularity: Some(circ), eps_eff: max_pairwise(&[a, b, c]), ..Default::default() })
}

/// Leading coefficient of the quad volume: volume = eps^6/12 * phi + o(eps^6).
///
/// phi = (a_u - ab)(f_uu x f_u).f_v + (b_v - ab)(f_vv x f_u).f_v, with a_u, b_v
/// from central differences of the conjugate coefficients.
pub fn ee6_coefficient(s: &dyn Surface, uv: Point2) -> Result<f64> {
    let h = 1e-5 * s.param_scale();
    let (a, b) = conjugate_coeffs(s, uv)?;
    let (ap, _) = conjugate_coeffs(s, Point2::new(uv.x + h, uv.y))?;
    let (am, _) = conjugate_coeffs(s, Point2::new(uv.x - h, uv.y))?;
    let (_, bp) = conjugate_coeffs(s, Point2::new(uv.x, uv.y + h))?;
    let (_, bm) = conjugate_coeffs(s, Point2::new(uv.x, uv.y - h))?;
    let (a_u, b_v) = ((ap - am) / (2.0 * h), (bp - bm) / (2.0 * h));
    let j = s.jet(uv);
    let l1 = j.fuu.cross(j.fu).dot(j.fv);
    let n1 = j.fvv.cross(j.fu).dot(j.fv);
    Ok((a_u - a * b) * l1 + (b_v - a * b) * n1)
}

/// Moves along the curve plane and surface until the point nearest to `target` is reached.
fn nearest_on_section(s: &dyn Surface, plane: &Plane3, target: Point3, uv_start: Point2, tol: f64) -> Result<Point2> {
    let dom = s.domain();
    let correct = |mut uv: Point2| -> Result<Point2> {
        for _ in 0..40 {
            let j = s.jet(uv);
            let h = plane.signed_distance(j.p);
            if h.abs() <= tol {
                return Ok(uv);
            }
            let t = plane.normal.reject(j.normal());
            if t.norm() <= 1e-10 {
                return Err(GeomError::TangentialContact);
            }
            uv = uv + j.pull(t * (-h / t.norm_sq()));
            if !dom.contains(uv) {
                return Err(GeomError::DomainExit);
            }
        }
        Err(GeomError::NoConvergence("plane corrector"))
    };
    let mut uv = correct(uv_start)?;
    for _ in 0..100 {
        let j = s.jet(uv);
        let t = j.normal().cross(plane.normal).normalized();
        let along = (target - j.p).dot(t);
        if along.abs() <= tol {
            return Ok(uv);
        }
        uv = correct(uv + j.pull(t * along))?;
    }
    Err(GeomError::NoConvergence("nearest point on section"))
}

/// Point of plane(ABC) meeting the surface nearest to `d_guess`.
pub fn planar_fourth_point(
    s: &dyn Surface,
    a: &SurfaceHit,
    b: &SurfaceHit,
    c: &SurfaceHit,
    d_guess: &SurfaceHit,
) -> Result<SurfaceHit> {
    let plane = Plane3::through(a.point, b.point, c.point).map_err(|_| GeomError::CollinearBase)?;
    let eps = max_pairwise(&[a.point, b.point, c.point]);
    let tol = 1e-13 * s.scale();
    if plane.signed_distance(d_guess.point).abs() <= tol {
        return Ok(*d_guess);
    }
    let jd = s.jet(d_guess.uv);
    let angle = jd.normal().cross(plane.normal).norm();
    if angle <= 1e-3 * eps / s.scale() {
        return Err(GeomError::TangentialContact);
    }
    let uv = nearest_on_section(s, &plane, d_guess.point, d_guess.uv, tol)?;
    Ok(SurfaceHit::at(s, uv))
}

/// Fourth intersection of circle(ABC) with the surface, nearest to `d_guess` in uv.
pub fn circular_fourth_point(
    s: &dyn Surface,
    a: &SurfaceHit,
    b: &SurfaceHit,
    c: &SurfaceHit,
    d_guess: &SurfaceHit,
) -> Result<SurfaceHit> {
    if s.tag() != ParamTag::CurvatureLine {
        return Err(GeomError::NotCurvatureLine);
    }
    if umbilic_frame(&principal_frame(s, d_guess.uv)?, DEFAULT_UMBILIC_TOL) {
        return Err(GeomError::UmbilicEncountered);
    }
    let omega = circle_through(a.point, b.point, c.point)?;
    let hits = circle_surface_hits(&omega, s, d_guess.uv)?;
    let tol = 1e-6 * omega.radius;
    let known: Vec<usize> = [a, b, c].iter().filter_map(|h| find_hit(&hits, h.point, tol)).collect();
    hits.iter()
        .enumerate()
        .filter(|(k, _)| !known.contains(k))
        .map(|(_, h)| h)
        .min_by(|x, y| x.uv.dist(d_guess.uv).total_cmp(&y.uv.dist(d_guess.uv)))
        .copied()
        .ok_or(GeomError::FourthPointMissing)
}

/// True if (f_uu x f_u).f_v or (f_vv x f_u).f_v vanishes at uv (relative 1e-6).
pub fn is_parabolic(s: &dyn Surface, uv: Point2) -> bool {
    let j = s.jet(uv);
    let scale = j.fu.norm() * j.fv.norm();
    let l1 = j.fuu.cross(j.fu).dot(j.fv);
    let n1 = j.fvv.cross(j.fu).dot(j.fv);
    l1.abs() <= 1e-6 * j.fuu.norm() * scale || n1.abs() <= 1e-6 * j.fvv.norm() * scale
}

/// The point M making both ABMC and BMFE planar.
pub fn double_planar_point(
    s: &dyn Surface,
    a: &SurfaceHit,
    b: &SurfaceHit,
    c: &SurfaceHit,
    e: &SurfaceHit,
    f: &SurfaceHit,
    d_guess: &SurfaceHit,
) -> Result<SurfaceHit> {
    if is_parabolic(s, d_guess.uv) || is_parabolic(s, b.uv) {
        return Err(GeomError::ParabolicPoint);
    }
    let p1 = Plane3::through(a.point, b.point, c.point)?;
    let p2 = Plane3::through(b.point, e.point, f.point)?;
    let dir = p1.normal.cross(p2.normal);
    if dir.norm() <= 1e-12 {
        return Err(GeomError::ParallelPlanes);
    }
    let dir = dir.normalized();
    let hit = line_surface_hit(b.point, dir, s, d_guess.uv)?;
    let eps = max_pairwise(&[a.point, b.point, c.point]);
    if hit.point.dist(b.point) <= 1e-6 * eps {
        return Err(GeomError::NoConvergence("double-planar line returned to B"));
    }
    Ok(hit)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CenterCheck {
    /// Distance between the center of circle(ABC) and the center of the Dupin indicatrix at P.
    pub center_distance: f64,
    /// Smallest angle between the circle and the section curve at their common points.
    pub min_angle: f64,
    pub hits: usize,
    pub eps_eff: f64,
}

/// Compares circle(ABC) with the plane section I_ABC and with the Dupin indicatrix
/// taken at the "center point" P, where the normal to plane(ABC) through the
/// circle's center meets the surface.
pub fn center_check(s: &dyn Surface, a: &SurfaceHit, b: &SurfaceHit, c: &SurfaceHit) -> Result<CenterCheck> {
    let omega = circle_through(a.point, b.point, c.point)?;
    let plane = omega.plane();
    let hint = closest_point(s, omega.center, b.uv)?;
    let p = line_surface_hit(omega.center, omega.normal, s, hint)?;
    let ind = crate::surface::dupin_indicatrix(s, p.uv, &plane, None)?;
    let ic = ind.conic.center().ok_or(GeomError::DegenerateConic)?;
    let center_distance = ind.lift(ic).dist(omega.center);
    let hits = circle_surface_hits(&omega, s, b.uv)?;
    let mut min_angle = f64::INFINITY;
    for h in &hits {
        let t_circle = omega.normal.cross(h.point - omega.center);
        let t_section = s.jet(h.uv).normal().cross(plane.normal);
        min_angle = min_angle.min(line_angle(t_circle, t_section));
    }
    Ok(CenterCheck {
        center_distance,
        min_angle,
        hits: hits.len(),
        eps_eff: max_pairwise(&[a.point, b.point, c.point]),
    })
}

/// Reference frame helper used by several experiments.
pub fn frame_at(s: &dyn Surface, uv: Point2) -> Result<PrincipalFrame> {
    frame_from_jet(&s.jet(uv))
}

/// Three points at parameter distance eps from uv at the given polar angles.
pub fn triple_around(s: &dyn Surface, uv: Point2, eps: f64, angles: [f64; 3]) -> [SurfaceHit; 3] {
    angles.map(|t| SurfaceHit::at(s, Point2::new(uv.x + eps * t.cos(), uv.y + eps * t.sin())))
}

/// Polar angles for the Euclidean triple; generic, no symmetry with the axes.
pub const DEFAULT_TRIPLE_ANGLES: [f64; 3] = [0.3, 2.56, 4.73];

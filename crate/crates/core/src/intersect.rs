//! Circle, line and plane intersections with a parametric surface.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::geom3::{Circle3, Plane3, Point2, Point3, Sphere3, Vec3};
use crate::surface::{closest_point, frame_from_jet, umbilic_frame, Surface, DEFAULT_UMBILIC_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceHit {
    pub point: Point3,
    pub uv: Point2,
    /// Angle on the circle, parameter along the line, or arclength along a section.
    pub param: f64,
    /// 2 for a tangential (double) contact.
    pub multiplicity: u8,
}

impl SurfaceHit {
    /// The surface point at `uv`.
    pub fn at(s: &dyn Surface, uv: Point2) -> Self {
        SurfaceHit { point: s.point(uv), uv, param: 0.0, multiplicity: 1 }
    }
}

pub const CIRCLE_SAMPLES: usize = 256;

/// Signed normal offset of `p` from the surface, measured at its foot point.
fn offset(s: &dyn Surface, p: Point3, warm: Point2) -> Result<(f64, Point2)> {
    let uv = closest_point(s, p, warm).map_err(|_| GeomError::FootPointFailure)?;
    let j = s.jet(uv);
    Ok(((p - j.p).dot(j.normal()), uv))
}

pub fn circle_surface_hits(c: &Circle3, s: &dyn Surface, uv_hint: Point2) -> Result<Vec<SurfaceHit>> {
    circle_surface_hits_n(c, s, uv_hint, CIRCLE_SAMPLES)
}

/// Hits of a circle with the surface, ordered by angle in [0, 2pi).
pub fn circle_surface_hits_n(c: &Circle3, s: &dyn Surface, uv_hint: Point2, samples: usize) -> Result<Vec<SurfaceHit>> {
    let n = samples.max(8);
    let dt = TAU / n as f64;
    let mut g = Vec::with_capacity(n);
    let mut uvs = Vec::with_capacity(n);
    let mut warm = uv_hint;
    for k in 0..n {
        let (gk, uv) = offset(s, c.point_at(k as f64 * dt), warm)?;
        g.push(gk);
        uvs.push(uv);
        warm = uv;
    }
    let root_tol = 1e-12 * c.radius;
    let touch_tol = 1e-10 * c.radius;
    if g.iter().all(|v| v.abs() < touch_tol) {
        return Err(GeomError::AllOnSurface);
    }
    let eval = |t: f64, warm: Point2| offset(s, c.point_at(t), warm);
    let mut hits = vec![];
    for k in 0..n {
        let k1 = (k + 1) % n;
        let (ga, gb) = (g[k], g[k1]);
        let (ta, tb) = (k as f64 * dt, (k + 1) as f64 * dt);
        if ga == 0.0 {
            let uv = uvs[k];
            hits.push(SurfaceHit { point: s.point(uv), uv, param: ta, multiplicity: 1 });
            continue;
        }
        if ga * gb < 0.0 {
            let (t, uv) = refine_root(&eval, (ta, ga), (tb, gb), uvs[k], root_tol, c, s)?;
            hits.push(SurfaceHit { point: s.point(uv), uv, param: t.rem_euclid(TAU), multiplicity: 1 });
            continue;
        }
        // Tangential contact: a local minimum of |g| without a sign change.
        let kp = (k + n - 1) % n;
        if gb != 0.0 && g[kp] * ga > 0.0 && ga.abs() < g[kp].abs() && ga.abs() <= gb.abs() && ga.abs() < 1e3 * touch_tol
        {
            let (t, gmin, uv) = minimize_abs(&eval, ta - dt, ta + dt, uvs[k])?;
            if gmin.abs() < touch_tol {
                hits.push(SurfaceHit { point: s.point(uv), uv, param: t.rem_euclid(TAU), multiplicity: 2 });
            }
        }
    }
    hits.sort_by(|a, b| a.param.total_cmp(&b.param));
    Ok(hits)
}

type OffsetFn<'a> = dyn Fn(f64, Point2) -> Result<(f64, Point2)> + 'a;

/// Safeguarded Newton inside a sign-change bracket.
fn refine_root(
    eval: &OffsetFn,
    a: (f64, f64),
    b: (f64, f64),
    warm: Point2,
    tol: f64,
    c: &Circle3,
    s: &dyn Surface,
) -> Result<(f64, Point2)> {
    let (mut ta, mut ga) = a;
    let (mut tb, _) = b;
    let mut t = if (b.1 - a.1) != 0.0 { ta - ga * (tb - ta) / (b.1 - ga) } else { 0.5 * (ta + tb) };
    let mut uv = warm;
    for _ in 0..200 {
        let (gt, u2) = eval(t, uv)?;
        uv = u2;
        if gt.abs() < tol || (tb - ta).abs() < 1e-15 {
            return Ok((t, uv));
        }
        if gt * ga < 0.0 {
            tb = t;
        } else {
            ta = t;
            ga = gt;
        }
        // dg/dt is the circle velocity projected on the foot-point normal.
        let j = s.jet(uv);
        let slope = c.tangent_at(t).dot(j.normal()) * c.radius;
        let newton = if slope != 0.0 { t - gt / slope } else { f64::NAN };
        let (lo, hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
        t = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (ta + tb) };
    }
    Err(GeomError::NoConvergence("circle root refinement"))
}

/// Golden-section minimization of |g| on [lo, hi].
fn minimize_abs(eval: &OffsetFn, mut lo: f64, mut hi: f64, warm: Point2) -> Result<(f64, f64, Point2)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut uv1) = eval(x1, warm)?;
    let (mut f2, mut uv2) = eval(x2, warm)?;
    for _ in 0..80 {
        if f1.abs() < f2.abs() {
            hi = x2;
            x2 = x1;
            f2 = f1;
            uv2 = uv1;
            x1 = hi - r * (hi - lo);
            (f1, uv1) = eval(x1, uv2)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            uv1 = uv2;
            x2 = lo + r * (hi - lo);
            (f2, uv2) = eval(x2, uv1)?;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(if f1.abs() < f2.abs() { (x1, f1, uv1) } else { (x2, f2, uv2) })
}

/// Intersection of the line `origin + t dir` with the surface near `uv_hint`.
pub fn line_surface_hit(origin: Point3, dir: Vec3, s: &dyn Surface, uv_hint: Point2) -> Result<SurfaceHit> {
    let dir = dir.normalized();
    let tol = 1e-12 * s.scale();
    let dom = s.domain();
    let mut uv = uv_hint;
    let mut j = s.jet(uv);
    if dir.dot(j.normal()).abs() <= 1e-6 {
        return Err(GeomError::Tangential);
    }
    let mut t = (j.p - origin).dot(dir);
    let mut res = j.p - origin - dir * t;
    for _ in 0..60 {
        if res.norm() < tol {
            if dir.dot(j.normal()).abs() <= 1e-6 {
                return Err(GeomError::Tangential);
            }
            return Ok(SurfaceHit { point: j.p, uv, param: t, multiplicity: 1 });
        }
        // Solve [fu fv -dir] x = -res by Cramer's rule.
        let m = -dir;
        let det = j.fu.dot(j.fv.cross(m));
        if det.abs() <= 1e-14 * j.fu.norm() * j.fv.norm() {
            return Err(GeomError::Tangential);
        }
        let rhs = -res;
        let du = rhs.dot(j.fv.cross(m)) / det;
        let dv = j.fu.dot(rhs.cross(m)) / det;
        let dt = j.fu.dot(j.fv.cross(rhs)) / det;
        let mut alpha = 1.0;
        loop {
            let cand = Point2::new(uv.x + alpha * du, uv.y + alpha * dv);
            if dom.contains(cand) {
                let jc = s.jet(cand);
                let tc = t + alpha * dt;
                let rc = jc.p - origin - dir * tc;
                if rc.norm() < res.norm() || alpha < 1e-3 {
                    uv = cand;
                    j = jc;
                    t = tc;
                    res = rc;
                    break;
                }
            } else if alpha < 1e-3 {
                return Err(GeomError::DomainExit);
            }
            alpha *= 0.5;
        }
    }
    Err(GeomError::NoConvergence("line-surface intersection"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectionCurve {
    pub points: Vec<SurfaceHit>,
    pub closed: bool,
}

impl SectionCurve {
    /// Rows `arclength,x,y,z,u,v`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("arclength,x,y,z,u,v\n");
        for h in &self.points {
            out.push_str(&format!("{},{},{},{},{},{}\n", h.param, h.point.x, h.point.y, h.point.z, h.uv.x, h.uv.y));
        }
        out
    }
}

/// Newton projection of uv onto `plane`, moving orthogonally to the plane within the surface.
fn correct_onto_plane(s: &dyn Surface, plane: &Plane3, mut uv: Point2, tol: f64) -> Result<Point2> {
    let dom = s.domain();
    for _ in 0..30 {
        let j = s.jet(uv);
        let h = plane.signed_distance(j.p);
        if h.abs() < tol {
            return Ok(uv);
        }
        let n = j.normal();
        let t = plane.normal.reject(n);
        if t.norm() <= 1e-8 {
            return Err(GeomError::TangentialContact);
        }
        let d = j.pull(t * (-h / t.norm_sq()));
        uv = uv + d;
        if !dom.contains(uv) {
            return Err(GeomError::OpenCurveTruncated);
        }
    }
    Err(GeomError::NoConvergence("plane section corrector"))
}

/// Traces the component of `plane` meeting the surface that passes through `seed`.
pub fn plane_section(s: &dyn Surface, plane: &Plane3, seed: &SurfaceHit, step: f64) -> Result<SectionCurve> {
    let tol = 1e-13 * s.scale();
    let dom = s.domain();
    let uv0 = correct_onto_plane(s, plane, seed.uv, tol)?;
    let p0 = s.point(uv0);
    let mut pts = vec![SurfaceHit { point: p0, uv: uv0, param: 0.0, multiplicity: 1 }];
    let mut uv = uv0;
    let mut prev_t: Option<Vec3> = None;
    let mut arclength = 0.0;
    let max_points = 2_000_000;
    loop {
        if pts.len() > max_points {
            return Err(GeomError::NoConvergence("plane section tracing"));
        }
        let j = s.jet(uv);
        let n = j.normal();
        let mut tangent = n.cross(plane.normal);
        if tangent.norm() <= 1e-8 {
            return Err(GeomError::TangentialContact);
        }
        tangent = tangent.normalized();
        if let Some(pt) = prev_t {
            if tangent.dot(pt) < 0.0 {
                tangent = -tangent;
            }
        }
        let here = j.p;
        if pts.len() > 3 {
            let back = p0 - here;
            if back.norm() <= step && back.dot(tangent) > 0.0 {
                return Ok(SectionCurve { points: pts, closed: true });
            }
        }
        let mut h = step;
        let next = loop {
            let guess = uv + j.pull(tangent * (0.98 * h));
            if !dom.contains(guess) {
                return Err(GeomError::OpenCurveTruncated);
            }
            match correct_onto_plane(s, plane, guess, tol) {
                Ok(c) => {
                    let p = s.point(c);
                    let chord = p.dist(here);
                    if chord <= step && (p - here).dot(tangent) > 0.0 {
                        break (c, p, chord);
                    }
                }
                Err(GeomError::OpenCurveTruncated) => return Err(GeomError::OpenCurveTruncated),
                Err(GeomError::TangentialContact) => return Err(GeomError::TangentialContact),
                Err(_) => {}
            }
            h *= 0.5;
            if h < 1e-9 * step {
                return Err(GeomError::NoConvergence("plane section step control"));
            }
        };
        arclength += next.2;
        uv = next.0;
        prev_t = Some(tangent);
        pts.push(SurfaceHit { point: next.1, uv, param: arclength, multiplicity: 1 });
    }
}

/// Sphere of radius `radius` tangent at uv whose curvature 1/R lies strictly between K1 and K2.
pub fn sphere_tangent_at(s: &dyn Surface, uv: Point2, radius: f64) -> Result<Sphere3> {
    let fr = frame_from_jet(&s.jet(uv))?;
    if umbilic_frame(&fr, DEFAULT_UMBILIC_TOL) || !(radius > 0.0) {
        return Err(GeomError::CurvatureSandwichViolated);
    }
    let k = 1.0 / radius;
    let margin = 0.1 * (fr.k2 - fr.k1);
    for sign in [1.0, -1.0] {
        let kk = sign * k;
        if kk >= fr.k1 + margin && kk <= fr.k2 - margin {
            // A sphere centered at P + sR n has normal curvature s/R with respect to n.
            return Ok(Sphere3 { center: fr.point + fr.normal * (sign * radius), radius });
        }
    }
    Err(GeomError::CurvatureSandwichViolated)
}

/// Circle on `sphere` around its point `p` at geodesic radius `eps`.
pub fn circle_on_sphere(sphere: &Sphere3, p: Point3, eps: f64) -> Circle3 {
    let rho = sphere.radius;
    let inward = (sphere.center - p).normalized();
    let phi = (eps / rho).min(std::f64::consts::PI * 0.9);
    let depth = rho * (1.0 - phi.cos());
    Circle3::new(p + inward * depth, rho * phi.sin(), inward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::parse_surface;
    use crate::geom3::Vec2;

    #[test]
    fn offset_circle_on_unit_sphere() {
        let s = parse_surface("sphere:R=1").unwrap();
        let c = Circle3::new(Vec3::new(0.5, 0.0, 0.0), 1.0, Vec3::Z);
        let hits = circle_surface_hits(&c, &s, Vec2::new(0.0, 0.0)).unwrap();
        assert_eq!(hits.len(), 2);
        for h in hits {
            assert!((h.point.x - 0.25).abs() < 1e-10);
            assert!((h.point.y.abs() - 15f64.sqrt() / 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn great_circle_is_degenerate() {
        let s = parse_surface("sphere:R=1").unwrap();
        let c = Circle3::new(Vec3::ZERO, 1.0, Vec3::Z);
        assert_eq!(circle_surface_hits(&c, &s, Vec2::new(0.0, 0.0)).unwrap_err(), GeomError::AllOnSurface);
    }
}

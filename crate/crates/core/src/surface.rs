//! Parametric surfaces with derivatives to third order and the local
//! differential geometry built on them.

use serde::{Deserialize, Serialize};

use crate::conics::Conic2;
use crate::error::{GeomError, Result};
use crate::geom3::{Plane3, Point2, Point3, Vec2, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamTag {
    Generic,
    Conjugate,
    CurvatureLine,
}

/// Rectangular parameter domain; infinite bounds mean periodic/unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub u: (f64, f64),
    pub v: (f64, f64),
}

impl Domain {
    pub const ALL: Domain = Domain { u: (f64::NEG_INFINITY, f64::INFINITY), v: (f64::NEG_INFINITY, f64::INFINITY) };

    pub fn contains(&self, uv: Point2) -> bool {
        uv.x > self.u.0 && uv.x < self.u.1 && uv.y > self.v.0 && uv.y < self.v.1
    }
}

/// Value and partial derivatives of f at one parameter point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SurfaceJet {
    pub p: Vec3,
    pub fu: Vec3,
    pub fv: Vec3,
    pub fuu: Vec3,
    pub fuv: Vec3,
    pub fvv: Vec3,
    pub fuuu: Vec3,
    pub fuuv: Vec3,
    pub fuvv: Vec3,
    pub fvvv: Vec3,
}

impl SurfaceJet {
    pub fn normal(&self) -> Vec3 {
        self.fu.cross(self.fv).normalized()
    }

    /// Velocity in R^3 of the parameter velocity `d`.
    pub fn push(&self, d: Vec2) -> Vec3 {
        self.fu * d.x + self.fv * d.y
    }

    /// Parameter velocity whose image is the tangential part of `x`.
    pub fn pull(&self, x: Vec3) -> Vec2 {
        let (e, f, g) = (self.fu.dot(self.fu), self.fu.dot(self.fv), self.fv.dot(self.fv));
        let (a, b) = (x.dot(self.fu), x.dot(self.fv));
        let det = e * g - f * f;
        Vec2::new((g * a - f * b) / det, (e * b - f * a) / det)
    }

    pub fn as_array(&self) -> [Vec3; 10] {
        [self.p, self.fu, self.fv, self.fuu, self.fuv, self.fvv, self.fuuu, self.fuuv, self.fuvv, self.fvvv]
    }
}

pub trait Surface: Send + Sync {
    fn point(&self, uv: Point2) -> Point3;

    /// Exact derivatives, when the surface can provide them.
    fn analytic_jet(&self, _uv: Point2) -> Option<SurfaceJet> {
        None
    }

    fn jet(&self, uv: Point2) -> SurfaceJet {
        self.analytic_jet(uv).unwrap_or_else(|| fd_jet(&|q| self.point(q), uv, self.param_scale()))
    }

    fn domain(&self) -> Domain {
        Domain::ALL
    }

    fn tag(&self) -> ParamTag {
        ParamTag::Generic
    }

    /// Typical length scale of the embedded surface, for tolerances.
    fn scale(&self) -> f64 {
        1.0
    }

    /// Typical scale of the parameters, for finite-difference steps.
    fn param_scale(&self) -> f64 {
        1.0
    }

    /// Implicit form F and its gradient, if known.
    fn implicit(&self, _p: Point3) -> Option<(f64, Vec3)> {
        None
    }

    fn label(&self) -> String {
        "surface".to_string()
    }
}

/// Finite-difference derivatives from point evaluations only.
///
/// First and second derivatives use fourth-order stencils; third derivatives
/// are fourth-order differences of the second-derivative stencils.
pub fn fd_jet(f: &dyn Fn(Point2) -> Point3, uv: Point2, scale: f64) -> SurfaceJet {
    let h1 = 1e-3 * scale;
    let h2 = 2e-3 * scale;
    let k3 = 5e-3 * scale;
    let at = |du: f64, dv: f64| f(Vec2::new(uv.x + du, uv.y + dv));
    let d1 = |eu: f64, ev: f64| {
        (at(-2.0 * h1 * eu, -2.0 * h1 * ev) - at(2.0 * h1 * eu, 2.0 * h1 * ev)
            + (at(h1 * eu, h1 * ev) - at(-h1 * eu, -h1 * ev)) * 8.0)
            / (12.0 * h1)
    };
    let second = |c: Point2| -> (Vec3, Vec3, Vec3) {
        let at = |du: f64, dv: f64| f(Vec2::new(c.x + du, c.y + dv));
        let p0 = at(0.0, 0.0);
        let d2 = |eu: f64, ev: f64| {
            ((at(h2 * eu, h2 * ev) + at(-h2 * eu, -h2 * ev)) * 16.0
                - at(2.0 * h2 * eu, 2.0 * h2 * ev)
                - at(-2.0 * h2 * eu, -2.0 * h2 * ev)
                - p0 * 30.0)
                / (12.0 * h2 * h2)
        };
        let s = |h: f64| at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h);
        let fuv = (s(h2) * 16.0 - s(2.0 * h2)) / (48.0 * h2 * h2);
        (d2(1.0, 0.0), fuv, d2(0.0, 1.0))
    };
    let (fuu, fuv, fvv) = second(uv);
    let third = |eu: f64, ev: f64| {
        let g = |t: f64| second(Vec2::new(uv.x + t * eu, uv.y + t * ev));
        let (a2, a1, b1, b2) = (g(-2.0 * k3), g(-k3), g(k3), g(2.0 * k3));
        let comb = |x2: Vec3, x1: Vec3, y1: Vec3, y2: Vec3| (x2 - y2 + (y1 - x1) * 8.0) / (12.0 * k3);
        (comb(a2.0, a1.0, b1.0, b2.0), comb(a2.1, a1.1, b1.1, b2.1), comb(a2.2, a1.2, b1.2, b2.2))
    };
    let (fuuu, fuuv_a, fuvv_a) = third(1.0, 0.0);
    let (fuuv_b, fuvv_b, fvvv) = third(0.0, 1.0);
    SurfaceJet {
        p: at(0.0, 0.0),
        fu: d1(1.0, 0.0),
        fv: d1(0.0, 1.0),
        fuu,
        fuv,
        fvv,
        fuuu,
        fuuv: (fuuv_a + fuuv_b) * 0.5,
        fuvv: (fuvv_a + fuvv_b) * 0.5,
        fvvv,
    }
}

/// A user-supplied parametrization with finite-difference derivatives.
pub struct FnSurface<F: Fn(Point2) -> Point3 + Send + Sync> {
    pub f: F,
    pub domain: Domain,
    pub tag: ParamTag,
}

impl<F: Fn(Point2) -> Point3 + Send + Sync> Surface for FnSurface<F> {
    fn point(&self, uv: Point2) -> Point3 {
        (self.f)(uv)
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn tag(&self) -> ParamTag {
        self.tag
    }
    fn label(&self) -> String {
        "user".to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrincipalFrame {
    pub point: Point3,
    pub normal: Vec3,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    pub dir1: Vec3,
    pub dir2: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Direction of K1 (the smaller principal curvature).
    First,
    /// Direction of K2.
    Second,
}

impl Family {
    pub fn pick(self, fr: &PrincipalFrame) -> Vec3 {
        match self {
            Family::First => fr.dir1,
            Family::Second => fr.dir2,
        }
    }
}

/// Second fundamental form in the orthonormal tangent basis (e1 = f_u/|f_u|, e2 = n x e1).
fn ortho_second_form(j: &SurfaceJet) -> Result<(Vec3, Vec3, Vec3, [f64; 3])> {
    let cross = j.fu.cross(j.fv);
    if cross.norm() <= 1e-10 * (j.fu.norm() * j.fv.norm()).max(1e-300) || !cross.is_finite() {
        return Err(GeomError::DegenerateMetric);
    }
    let n = cross.normalized();
    let e1 = j.fu.normalized();
    let e2 = n.cross(e1);
    let (l, m, nn) = (j.fuu.dot(n), j.fuv.dot(n), j.fvv.dot(n));
    // P maps parameter velocities to (e1, e2) coordinates; P = [[p11, p12], [0, p22]].
    let p11 = j.fu.norm();
    let p12 = e1.dot(j.fv);
    let p22 = e2.dot(j.fv);
    // S = P^-T B P^-1 with P^-1 = [[1/p11, -p12/(p11 p22)], [0, 1/p22]].
    let (q11, q12, q22) = (1.0 / p11, -p12 / (p11 * p22), 1.0 / p22);
    let s11 = l * q11 * q11;
    let s12 = q11 * (l * q12 + m * q22);
    let s22 = l * q12 * q12 + 2.0 * m * q12 * q22 + nn * q22 * q22;
    Ok((n, e1, e2, [s11, s12, s22]))
}

pub fn frame_from_jet(j: &SurfaceJet) -> Result<PrincipalFrame> {
    let (n, e1, e2, [a, b, c]) = ortho_second_form(j)?;
    let mean = 0.5 * (a + c);
    let disc = (0.5 * (a - c)).hypot(b);
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (st, ct) = theta.sin_cos();
    let dir2 = e1 * ct + e2 * st;
    let dir1 = n.cross(dir2);
    Ok(PrincipalFrame { point: j.p, normal: n, k1: mean - disc, k2: mean + disc, dir1, dir2 })
}

pub fn principal_frame(s: &dyn Surface, uv: Point2) -> Result<PrincipalFrame> {
    frame_from_jet(&s.jet(uv))
}

pub const DEFAULT_UMBILIC_TOL: f64 = 1e-4;

pub fn is_umbilic(s: &dyn Surface, uv: Point2, tol: f64) -> Result<bool> {
    let fr = principal_frame(s, uv)?;
    Ok(umbilic_frame(&fr, tol))
}

pub fn umbilic_frame(fr: &PrincipalFrame, tol: f64) -> bool {
    (fr.k2 - fr.k1).abs() < tol * (fr.k1.abs() + fr.k2.abs() + 1.0)
}

/// (a, b) with f_uv = a f_u + b f_v.
pub fn conjugate_coeffs(s: &dyn Surface, uv: Point2) -> Result<(f64, f64)> {
    if s.tag() == ParamTag::Generic {
        return Err(GeomError::NotConjugate);
    }
    conjugate_coeffs_jet(&s.jet(uv))
}

pub fn conjugate_coeffs_jet(j: &SurfaceJet) -> Result<(f64, f64)> {
    let n = j.normal();
    let size = j.fuv.norm();
    if size == 0.0 {
        return Ok((0.0, 0.0));
    }
    if j.fuv.dot(n).abs() >= 1e-6 * size {
        return Err(GeomError::NotConjugate);
    }
    let ab = j.pull(j.fuv);
    Ok((ab.x, ab.y))
}

/// Dupin indicatrix cut by `plane`, in principal-frame coordinates (x along dir1, y along dir2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Indicatrix {
    pub conic: Conic2,
    pub frame: PrincipalFrame,
    /// Plane height over the tangent plane as an affine function: h0 + hx x + hy y.
    pub height: [f64; 3],
    /// K1 K2 ~ 0: the conic is parabolic or degenerate.
    pub parabolic: bool,
}

impl Indicatrix {
    /// Lift of a frame-coordinate point to the plane.
    pub fn lift(&self, q: Point2) -> Point3 {
        let f = &self.frame;
        let h = self.height[0] + self.height[1] * q.x + self.height[2] * q.y;
        f.point + f.dir1 * q.x + f.dir2 * q.y + f.normal * h
    }

    /// Frame coordinates of a point (orthogonal projection onto the tangent plane).
    pub fn coords(&self, p: Point3) -> Point2 {
        let d = p - self.frame.point;
        Vec2::new(d.dot(self.frame.dir1), d.dot(self.frame.dir2))
    }
}

pub fn dupin_indicatrix(s: &dyn Surface, uv: Point2, plane: &Plane3, max_height: Option<f64>) -> Result<Indicatrix> {
    let fr = principal_frame(s, uv)?;
    let np = plane.normal;
    let nn = np.dot(fr.normal);
    if nn.abs() <= 1e-12 {
        return Err(GeomError::TangentialContact);
    }
    let h0 = (plane.offset - np.dot(fr.point)) / nn;
    let hx = -np.dot(fr.dir1) / nn;
    let hy = -np.dot(fr.dir2) / nn;
    if let Some(bound) = max_height {
        if h0.abs() > bound {
            return Err(GeomError::PlaneTooFar { height: h0.abs(), bound });
        }
    }
    let conic =
        Conic2 { m: [[fr.k1 / 2.0, 0.0, -hx / 2.0], [0.0, fr.k2 / 2.0, -hy / 2.0], [-hx / 2.0, -hy / 2.0, -h0]] };
    let parabolic = (fr.k1 * fr.k2).abs() <= 1e-10 * (fr.k1 * fr.k1 + fr.k2 * fr.k2);
    Ok(Indicatrix { conic, frame: fr, height: [h0, hx, hy], parabolic })
}

/// Unit principal direction of `family` at uv, oriented along `reference`.
fn oriented_direction(s: &dyn Surface, uv: Point2, family: Family, reference: Vec3) -> Result<(Vec2, Vec3)> {
    let j = s.jet(uv);
    let fr = frame_from_jet(&j)?;
    if umbilic_frame(&fr, DEFAULT_UMBILIC_TOL) {
        return Err(GeomError::UmbilicEncountered);
    }
    let mut d = family.pick(&fr);
    if d.dot(reference) < 0.0 {
        d = -d;
    }
    Ok((j.pull(d), d))
}

/// Default orientation: positive along f_u, else along f_v.
pub fn default_orientation(s: &dyn Surface, uv: Point2, family: Family) -> Result<Vec3> {
    let j = s.jet(uv);
    let d = family.pick(&frame_from_jet(&j)?);
    let (a, b) = (d.dot(j.fu.normalized()), d.dot(j.fv.normalized()));
    let flip = if a.abs() > 1e-8 { a < 0.0 } else { b < 0.0 };
    Ok(if flip { -d } else { d })
}

pub fn trace_curvature_line(s: &dyn Surface, uv0: Point2, which: Family, arclength: f64) -> Result<Point2> {
    let dir = default_orientation(s, uv0, which)?;
    trace_curvature_line_from(s, uv0, which, arclength, dir).map(|r| r.0)
}

/// Integrates the principal direction field by arclength (Dormand-Prince 5(4)).
///
/// `reference` fixes the orientation at the start; a negative arclength runs
/// against it. Returns the end point and the unit direction there (oriented
/// along the direction of travel for positive arclength).
pub fn trace_curvature_line_from(
    s: &dyn Surface,
    uv0: Point2,
    which: Family,
    arclength: f64,
    reference: Vec3,
) -> Result<(Point2, Vec3)> {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] =
        [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];
    let sign = if arclength < 0.0 { -1.0 } else { 1.0 };
    let total = arclength.abs();
    let tol = 1e-13 * s.scale().max(1.0);
    let dom = s.domain();
    let mut uv = uv0;
    let mut dref = reference * sign;
    let mut t = 0.0;
    let mut h = (0.02 * s.scale()).min(total).max(1e-12);
    let mut steps = 0usize;
    while t < total {
        steps += 1;
        if steps > 200_000 {
            return Err(GeomError::NoConvergence("curvature line tracing"));
        }
        h = h.min(total - t);
        let mut k = [Vec2::default(); 7];
        let mut dirs = [Vec3::default(); 7];
        let mut ok = true;
        for st in 0..7 {
            let mut y = uv;
            for (m, km) in k.iter().enumerate().take(st) {
                y = y + *km * (h * A[st][m]);
            }
            if !dom.contains(y) {
                ok = false;
                break;
            }
            let r = if st == 0 { dref } else { dirs[st - 1] };
            let (vel, d) = oriented_direction(s, y, which, r)?;
            k[st] = vel;
            dirs[st] = d;
        }
        if !ok {
            if h < 1e-10 {
                return Err(GeomError::DomainExit);
            }
            h *= 0.5;
            continue;
        }
        let mut y5 = uv;
        let mut err = Vec2::default();
        for m in 0..7 {
            if m < 6 {
                y5 = y5 + k[m] * (h * A[6][m]);
            }
            err = err + k[m] * (h * E[m]);
        }
        let j = s.jet(uv);
        let err3 = j.push(err).norm();
        if err3 <= tol || h < 1e-12 {
            uv = y5;
            t += h;
            dref = dirs[6];
            if !dom.contains(uv) {
                return Err(GeomError::DomainExit);
            }
        }
        let fac = if err3 == 0.0 { 4.0 } else { (0.9 * (tol / err3).powf(0.2)).clamp(0.2, 4.0) };
        h *= fac;
    }
    Ok((uv, dref * sign))
}

/// Foot point of `p` on the surface near `uv_guess` (damped Newton on |f - p|^2 / 2).
pub fn closest_point(s: &dyn Surface, p: Point3, uv_guess: Point2) -> Result<Point2> {
    let dom = s.domain();
    let mut uv = uv_guess;
    let mut j = s.jet(uv);
    for _ in 0..50 {
        let r = j.p - p;
        let rn = r.norm();
        let (nu, nv) = (j.fu.norm(), j.fv.norm());
        let gu = r.dot(j.fu);
        let gv = r.dot(j.fv);
        if rn < 1e-12 || (gu.abs() <= 1e-10 * rn * nu && gv.abs() <= 1e-10 * rn * nv) {
            return Ok(uv);
        }
        let (e, f, g) = (j.fu.dot(j.fu), j.fu.dot(j.fv), j.fv.dot(j.fv));
        let (mut h11, mut h12, mut h22) = (e + r.dot(j.fuu), f + r.dot(j.fuv), g + r.dot(j.fvv));
        if h11 <= 0.0 || h11 * h22 - h12 * h12 <= 1e-12 * (e * g) {
            h11 = e;
            h12 = f;
            h22 = g;
        }
        let det = h11 * h22 - h12 * h12;
        let step = Vec2::new(-(h22 * gu - h12 * gv) / det, -(h11 * gv - h12 * gu) / det);
        let phi = 0.5 * rn * rn;
        let slope = gu * step.x + gv * step.y;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = uv + step * alpha;
            if dom.contains(cand) {
                let jc = s.jet(cand);
                let rc = (jc.p - p).norm();
                if 0.5 * rc * rc <= phi + 1e-4 * alpha * slope.min(0.0) || rc <= rn {
                    accepted = Some((cand, jc));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((cand, jc)) = accepted else {
            // No decrease is possible: round-off stagnation near the optimum.
            if j.push(step).norm() <= 1e-13 * (1.0 + p.norm()) {
                return Ok(uv);
            }
            return Err(GeomError::NoConvergence("closest point"));
        };
        let moved = j.push(step * alpha).norm();
        uv = cand;
        j = jc;
        if moved <= 4e-16 * (1.0 + p.norm()) {
            return Ok(uv);
        }
    }
    Err(GeomError::NoConvergence("closest point"))
}

/// Signed distance along the normal at the foot point, and the foot uv.
pub fn signed_offset(s: &dyn Surface, p: Point3, uv_guess: Point2) -> Result<(f64, Point2)> {
    let uv = closest_point(s, p, uv_guess)?;
    let j = s.jet(uv);
    Ok(((p - j.p).dot(j.normal()), uv))
}

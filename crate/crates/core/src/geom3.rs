//! Points, vectors, quaternions, planes, circles and spheres in R^3.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Absolute floor for length comparisons when the local scale is ~0.
pub const ABS_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub type Point3 = Vec3;

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    /// Unit vector in the same direction; the zero vector is returned unchanged.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self / n
        }
    }

    pub fn dist(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Some unit vector orthogonal to `self` (deterministic).
    pub fn any_orthogonal(self) -> Vec3 {
        let a = self.normalized();
        let helper = if a.x.abs() <= a.y.abs() && a.x.abs() <= a.z.abs() {
            Vec3::X
        } else if a.y.abs() <= a.z.abs() {
            Vec3::Y
        } else {
            Vec3::Z
        };
        a.cross(helper).normalized()
    }

    /// Component of `self` orthogonal to the unit vector `n`.
    pub fn reject(self, n: Vec3) -> Vec3 {
        self - n * self.dot(n)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, k: f64) -> Vec3 {
        Vec3::new(self.x / k, self.y / k, self.z / k)
    }
}

/// 2D point / vector, used for (u,v) parameters and conic coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

pub type Point2 = Vec2;

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self / n
        }
    }
    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, k: f64) -> Vec2 {
        Vec2::new(self.x / k, self.y / k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Purely imaginary quaternion of a point.
    pub fn pure(v: Vec3) -> Self {
        Quaternion::new(0.0, v.x, v.y, v.z)
    }

    pub fn imag(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sq(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn inverse(self) -> Result<Self> {
        let n2 = self.norm_sq();
        if n2.sqrt() <= ABS_FLOOR {
            return Err(GeomError::DegeneratePoints);
        }
        let c = self.conj();
        Ok(Quaternion::new(c.w / n2, c.x / n2, c.y / n2, c.z / n2))
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        let (a, b) = (self, o);
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

/// Plane `{X : normal . X = offset}` with unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plane3 {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane3 {
    /// Plane through `p` with (not necessarily unit) normal `n`.
    pub fn from_point_normal(p: Point3, n: Vec3) -> Result<Self> {
        let len = n.norm();
        if len <= ABS_FLOOR {
            return Err(GeomError::PlaneDegenerate);
        }
        let normal = n / len;
        Ok(Plane3 { normal, offset: normal.dot(p) })
    }

    /// Plane through three points, oriented by (B-A)x(C-A).
    pub fn through(a: Point3, b: Point3, c: Point3) -> Result<Self> {
        let n = (b - a).cross(c - a);
        let scale = (b - a).norm_sq().max((c - a).norm_sq()).max((c - b).norm_sq());
        if n.norm() <= 1e-12 * scale || scale.sqrt() <= ABS_FLOOR {
            return Err(GeomError::PlaneDegenerate);
        }
        Plane3::from_point_normal(a, n)
    }

    pub fn signed_distance(&self, p: Point3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn project(&self, p: Point3) -> Point3 {
        p - self.normal * self.signed_distance(p)
    }
}

/// Circle with an in-plane reference axis; `point_at(0)` lies along `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle3 {
    pub center: Point3,
    pub radius: f64,
    pub normal: Vec3,
    pub axis: Vec3,
}

impl Circle3 {
    pub fn new(center: Point3, radius: f64, normal: Vec3) -> Self {
        let normal = normal.normalized();
        Circle3 { center, radius, normal, axis: normal.any_orthogonal() }
    }

    pub fn with_axis(center: Point3, radius: f64, normal: Vec3, axis: Vec3) -> Self {
        let normal = normal.normalized();
        let axis = axis.reject(normal).normalized();
        Circle3 { center, radius, normal, axis }
    }

    /// Second in-plane axis, `normal x axis`.
    pub fn axis2(&self) -> Vec3 {
        self.normal.cross(self.axis)
    }

    pub fn point_at(&self, theta: f64) -> Point3 {
        self.center + (self.axis * theta.cos() + self.axis2() * theta.sin()) * self.radius
    }

    pub fn tangent_at(&self, theta: f64) -> Vec3 {
        self.axis2() * theta.cos() - self.axis * theta.sin()
    }

    /// Polar angle of the projection of `p` into the circle plane, in [0, 2pi).
    pub fn angle_of(&self, p: Point3) -> f64 {
        let d = p - self.center;
        let t = d.dot(self.axis2()).atan2(d.dot(self.axis));
        if t < 0.0 {
            t + std::f64::consts::TAU
        } else {
            t
        }
    }

    /// In-plane 2D coordinates of `p` relative to the center.
    pub fn to_plane(&self, p: Point3) -> Vec2 {
        let d = p - self.center;
        Vec2::new(d.dot(self.axis), d.dot(self.axis2()))
    }

    pub fn from_plane(&self, q: Vec2) -> Point3 {
        self.center + self.axis * q.x + self.axis2() * q.y
    }

    /// Distance from `p` to the circle as a curve in space.
    pub fn distance(&self, p: Point3) -> f64 {
        let d = p - self.center;
        let h = d.dot(self.normal);
        let r = d.reject(self.normal).norm();
        (h * h + (r - self.radius).powi(2)).sqrt()
    }

    pub fn plane(&self) -> Plane3 {
        Plane3 { normal: self.normal, offset: self.normal.dot(self.center) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sphere3 {
    pub center: Point3,
    pub radius: f64,
}

/// Circumcircle of a triangle.
///
/// The center is `A + s(B-A) + t(C-A)`, with (s,t) from the 2x2 Gram system
/// that expresses equidistance inside the triangle plane.
pub fn circle_through(a: Point3, b: Point3, c: Point3) -> Result<Circle3> {
    let u = b - a;
    let w = c - a;
    let edges = [u.norm(), w.norm(), (c - b).norm()];
    let max_edge = edges.iter().cloned().fold(0.0, f64::max);
    let floor = ABS_FLOOR.max(1e-14 * a.max_abs().max(b.max_abs()).max(c.max_abs()));
    if edges.iter().any(|&e| e <= floor) {
        return Err(GeomError::CoincidentPoints);
    }
    let n = u.cross(w);
    if 0.5 * n.norm() <= 1e-12 * max_edge * max_edge {
        return Err(GeomError::CollinearPoints);
    }
    let (uu, uw, ww) = (u.dot(u), u.dot(w), w.dot(w));
    let det = uu * ww - uw * uw;
    let s = 0.5 * (uu * ww - ww * uw) / det;
    let t = 0.5 * (ww * uu - uu * uw) / det;
    let offset = u * s + w * t;
    let center = a + offset;
    Ok(Circle3::with_axis(center, offset.norm(), n, a - center))
}

/// Inversion in the unit sphere about `center`: `center + (p-center)/|p-center|^2`.
pub fn moebius_invert(p: Point3, center: Point3) -> Result<Point3> {
    invert_in_sphere(p, &Sphere3 { center, radius: 1.0 })
}

/// Inversion in an arbitrary sphere.
pub fn invert_in_sphere(p: Point3, s: &Sphere3) -> Result<Point3> {
    let d = p - s.center;
    let r2 = d.norm_sq();
    if r2.sqrt() <= 1e-12 {
        return Err(GeomError::CenterCoincidence);
    }
    Ok(s.center + d * (s.radius * s.radius / r2))
}

pub fn triple_product(u: Vec3, v: Vec3, w: Vec3) -> f64 {
    u.dot(v.cross(w))
}

/// `(A-B)(B-C)^-1 (C-D)(D-A)^-1` with points as imaginary quaternions.
pub fn quat_cross_ratio(a: Point3, b: Point3, c: Point3, d: Point3) -> Result<Quaternion> {
    let bc = Quaternion::pure(b - c);
    let da = Quaternion::pure(d - a);
    if bc.norm() <= ABS_FLOOR || da.norm() <= ABS_FLOOR {
        return Err(GeomError::DegeneratePoints);
    }
    Ok(Quaternion::pure(a - b) * bc.inverse()? * Quaternion::pure(c - d) * da.inverse()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle() {
        let c = circle_through(Vec3::X, Vec3::Y, -Vec3::X).unwrap();
        assert!(c.center.norm() < 1e-15);
        assert!((c.radius - 1.0).abs() < 1e-15);
        assert!(c.normal.dist(Vec3::Z) < 1e-15);
    }

    #[test]
    fn collinear_and_coincident() {
        let o = Vec3::ZERO;
        let p = Vec3::new(1.0, 1.0, 1.0);
        assert_eq!(circle_through(o, p, p * 2.0).unwrap_err(), GeomError::CollinearPoints);
        assert_eq!(circle_through(o, p, p).unwrap_err(), GeomError::CoincidentPoints);
    }

    #[test]
    fn inversion_basics() {
        let q = moebius_invert(Vec3::new(2.0, 0.0, 0.0), Vec3::ZERO).unwrap();
        assert!(q.dist(Vec3::new(0.5, 0.0, 0.0)) < 1e-16);
        let c = Vec3::new(1.0, -2.0, 0.5);
        let p = c + Vec3::new(0.6, 0.0, 0.8);
        assert!(moebius_invert(p, c).unwrap().dist(p) < 1e-15);
        assert_eq!(moebius_invert(c, c).unwrap_err(), GeomError::CenterCoincidence);
    }

    #[test]
    fn square_cross_ratio() {
        let q = quat_cross_ratio(Vec3::X, Vec3::Y, -Vec3::X, -Vec3::Y).unwrap();
        assert!((q.w + 1.0).abs() < 1e-15 && q.imag().norm() < 1e-15);
        let a = Vec3::new(0.3, 0.1, 2.0);
        assert_eq!(quat_cross_ratio(a, Vec3::X, Vec3::Y, a).unwrap_err(), GeomError::DegeneratePoints);
    }

    #[test]
    fn triple_product_basics() {
        assert_eq!(triple_product(Vec3::X, Vec3::Y, Vec3::Z), 1.0);
        let u = Vec3::new(0.3, -1.0, 2.0);
        assert_eq!(triple_product(u, u, Vec3::Z), 0.0);
    }
}

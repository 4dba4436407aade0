//! Planar conics as symmetric 3x3 forms: pencils, line-pair factorization,
//! axes, diagonal bisectors and circle intersections.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix2, Matrix3};
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::geom3::{Point2, Vec2};

/// Conic `[x y 1] M [x y 1]^T = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Conic2 {
    pub m: [[f64; 3]; 3],
}

impl Conic2 {
    /// Symmetrizes the input.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = 0.5 * (m[i][j] + m[j][i]);
            }
        }
        let c = Conic2 { m: s };
        if c.norm() <= 1e-14 {
            return Err(GeomError::DegenerateConic);
        }
        Ok(c)
    }

    /// `a x^2 + b xy + c y^2 + d x + e y + f`.
    pub fn from_coeffs(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Self> {
        Conic2::from_matrix([[a, b / 2.0, d / 2.0], [b / 2.0, c, e / 2.0], [d / 2.0, e / 2.0, f]])
    }

    pub fn circle(center: Point2, r: f64) -> Self {
        let (x, y) = (center.x, center.y);
        Conic2 { m: [[1.0, 0.0, -x], [0.0, 1.0, -y], [-x, -y, x * x + y * y - r * r]] }
    }

    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn eval(&self, p: Point2) -> f64 {
        let v = [p.x, p.y, 1.0];
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += v[i] * self.m[i][j] * v[j];
            }
        }
        s
    }

    pub fn gradient(&self, p: Point2) -> Vec2 {
        let m = &self.m;
        Vec2::new(2.0 * (m[0][0] * p.x + m[0][1] * p.y + m[0][2]), 2.0 * (m[1][0] * p.x + m[1][1] * p.y + m[1][2]))
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.m[i][j])
    }

    fn from_na(m: &Matrix3<f64>) -> Self {
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = 0.5 * (m[(i, j)] + m[(j, i)]);
            }
        }
        Conic2 { m: a }
    }

    /// Image of the conic under `p -> R(angle) p + shift`.
    pub fn transformed(&self, angle: f64, shift: Vec2) -> Self {
        let (c, s) = (angle.cos(), angle.sin());
        // Inverse map: p = R^T (q - shift).
        let inv = Matrix3::new(c, s, -(c * shift.x + s * shift.y), -s, c, s * shift.x - c * shift.y, 0.0, 0.0, 1.0);
        Conic2::from_na(&(inv.transpose() * self.matrix() * inv))
    }

    /// Center of the conic when the quadratic part is invertible.
    pub fn center(&self) -> Option<Point2> {
        let m = &self.m;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let scale = m[0][0].abs().max(m[1][1].abs()).max(m[0][1].abs());
        if det.abs() <= 1e-14 * scale * scale || scale == 0.0 {
            return None;
        }
        let x = (-m[0][2] * m[1][1] + m[1][2] * m[0][1]) / det;
        let y = (-m[1][2] * m[0][0] + m[0][2] * m[1][0]) / det;
        Some(Vec2::new(x, y))
    }

    /// Nearest point of the real locus Q = 0 to `p`, by alternating a normal
    /// projection onto the locus with a tangential slide toward `p`.
    pub fn nearest_point(&self, p: Point2) -> Result<Point2> {
        let mut x = p;
        let scale = self.norm().max(1e-300);
        for _ in 0..200 {
            for _ in 0..50 {
                let g = self.gradient(x);
                let q = self.eval(x);
                let gg = g.dot(g);
                if gg <= 1e-28 * scale * scale {
                    return Err(GeomError::DegenerateConic);
                }
                let step = g * (q / gg);
                x = x - step;
                if step.norm() <= 1e-15 * (1.0 + x.norm()) {
                    break;
                }
            }
            let t = self.gradient(x).perp().normalized();
            let slide = (p - x).dot(t);
            if slide.abs() <= 1e-14 * (1.0 + p.dist(x)) {
                return Ok(x);
            }
            x = x + t * slide;
        }
        Err(GeomError::NoConvergence("nearest point on conic"))
    }

    pub fn distance_to(&self, p: Point2) -> Result<f64> {
        self.nearest_point(p).map(|x| x.dist(p))
    }

    /// Center and radius when the conic is a real circle.
    pub fn as_circle(&self) -> Result<(Point2, f64)> {
        let m = &self.m;
        let (a, c, b) = (m[0][0], m[1][1], m[0][1]);
        let s = a.abs() + c.abs();
        if s == 0.0 || (a - c).abs() > 1e-12 * s || b.abs() > 1e-12 * s {
            return Err(GeomError::NotACircle);
        }
        let k = 0.5 * (a + c);
        let center = Vec2::new(-m[0][2] / k, -m[1][2] / k);
        let r2 = center.x * center.x + center.y * center.y - m[2][2] / k;
        if r2 <= 0.0 {
            return Err(GeomError::NotACircle);
        }
        Ok((center, r2.sqrt()))
    }
}

/// Two homogeneous lines `l . [x y 1] = 0` with `M ~ (l1 l2^T + l2 l1^T)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinePair2 {
    pub lines: [[f64; 3]; 2],
    /// Homogeneous intersection point; `None` for a double line.
    pub vertex: Option<[f64; 3]>,
}

impl LinePair2 {
    /// The symmetric product form `(l1 l2^T + l2 l1^T)/2`.
    pub fn product(&self) -> [[f64; 3]; 3] {
        let [l, m] = self.lines;
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = 0.5 * (l[i] * m[j] + m[i] * l[j]);
            }
        }
        out
    }

    /// Distance from a point to the nearer of the two (finite) lines.
    pub fn distance(&self, p: Point2) -> f64 {
        self.lines
            .iter()
            .map(|l| {
                let n = l[0].hypot(l[1]);
                if n == 0.0 {
                    f64::INFINITY
                } else {
                    (l[0] * p.x + l[1] * p.y + l[2]).abs() / n
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Lambda {
    Finite(f64),
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PencilMember {
    pub lambda: Lambda,
    pub multiplicity: u8,
    pub lines: LinePair2,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PencilDegenerates {
    pub members: Vec<PencilMember>,
    /// Non-real roots of the determinant cubic, skipped.
    pub complex_roots: usize,
    /// Real roots whose member is a pair of complex-conjugate lines, skipped.
    pub complex_lines: usize,
}

fn adjugate(a: &Matrix3<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| {
        // Cofactor of (j, i).
        let r: Vec<usize> = (0..3).filter(|&k| k != j).collect();
        let c: Vec<usize> = (0..3).filter(|&k| k != i).collect();
        let minor = a[(r[0], c[0])] * a[(r[1], c[1])] - a[(r[0], c[1])] * a[(r[1], c[0])];
        if (i + j) % 2 == 0 {
            minor
        } else {
            -minor
        }
    })
}

/// Roots of `c[0] + c[1] x + ... + c[n] x^n` (leading coefficient nonzero) as (re, im).
pub fn poly_roots(c: &[f64]) -> Vec<(f64, f64)> {
    let n = c.len() - 1;
    if n == 0 {
        return vec![];
    }
    let lead = c[n];
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -c[i] / lead;
    }
    comp.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
}

fn poly_eval(c: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &k in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + k;
    }
    (p, dp)
}

/// Splits a rank <= 2 symmetric form into two lines; `None` if the lines are not real.
pub fn factor_degenerate(a: &Matrix3<f64>) -> Option<LinePair2> {
    let norm = a.norm();
    let b = adjugate(a);
    let i = (0..3).max_by(|&x, &y| b[(x, x)].abs().total_cmp(&b[(y, y)].abs())).unwrap();
    let bii = b[(i, i)];
    if bii.abs() <= 1e-10 * norm * norm {
        // Rank one: a double line sigma * l l^T.
        let k = (0..3).max_by(|&x, &y| a[(x, x)].abs().total_cmp(&a[(y, y)].abs())).unwrap();
        let akk = a[(k, k)];
        if akk == 0.0 {
            return None;
        }
        let s = akk.abs().sqrt();
        let l = [a[(0, k)] / s, a[(1, k)] / s, a[(2, k)] / s];
        let sig = akk.signum();
        return Some(LinePair2 { lines: [[sig * l[0], sig * l[1], sig * l[2]], l], vertex: None });
    }
    if bii > 0.0 {
        return None;
    }
    let beta = (-bii).sqrt();
    let p = [b[(0, i)] / beta, b[(1, i)] / beta, b[(2, i)] / beta];
    let cross = Matrix3::new(0.0, -p[2], p[1], p[2], 0.0, -p[0], -p[1], p[0], 0.0);
    let c = a + cross;
    let (mut bi, mut bj, mut best) = (0, 0, 0.0);
    for r in 0..3 {
        for s in 0..3 {
            if c[(r, s)].abs() > best {
                best = c[(r, s)].abs();
                bi = r;
                bj = s;
            }
        }
    }
    let cij = c[(bi, bj)];
    let l1 = [c[(bi, 0)], c[(bi, 1)], c[(bi, 2)]];
    let l2 = [c[(0, bj)] / cij, c[(1, bj)] / cij, c[(2, bj)] / cij];
    let v = [l1[1] * l2[2] - l1[2] * l2[1], l1[2] * l2[0] - l1[0] * l2[2], l1[0] * l2[1] - l1[1] * l2[0]];
    let vn = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let vertex = if vn > 0.0 { Some([v[0] / vn, v[1] / vn, v[2] / vn]) } else { None };
    Some(LinePair2 { lines: [l1, l2], vertex })
}

/// Real degenerate members of the pencil `Q + lambda W`.
pub fn pencil_degenerate_members(q: &Conic2, w: &Conic2) -> Result<PencilDegenerates> {
    let (mq, mw) = (q.matrix(), w.matrix());
    let c_best = mq.dot(&mw) / mw.dot(&mw);
    if (mq - mw * c_best).norm() <= 1e-10 * mq.norm() {
        return Err(GeomError::ProportionalConics);
    }
    let coeffs = [mq.determinant(), (adjugate(&mq) * mw).trace(), (mq * adjugate(&mw)).trace(), mw.determinant()];
    let wn = mw.norm();
    let mut out = PencilDegenerates { members: vec![], complex_roots: 0, complex_lines: 0 };
    let mut poly: &[f64] = &coeffs;
    if coeffs[3].abs() <= 1e-12 * wn * wn * wn {
        // W itself is degenerate: the root at infinity.
        match factor_degenerate(&mw) {
            Some(lines) => out.members.push(PencilMember { lambda: Lambda::Infinite, multiplicity: 1, lines }),
            None => out.complex_lines += 1,
        }
        poly = &coeffs[..3];
        while poly.len() > 1 && poly[poly.len() - 1].abs() <= 1e-14 * (mq.norm() + wn).powi(3) {
            poly = &poly[..poly.len() - 1];
        }
    }
    let mut real: Vec<(f64, u8)> = vec![];
    for (re, im) in poly_roots(poly) {
        let tol = 1e-7 * re.abs().max(1.0);
        if im.abs() > tol {
            if im > 0.0 {
                out.complex_roots += 2;
            }
            continue;
        }
        if im < 0.0 {
            // Near-real conjugate pair: keep one copy, counted as a double root.
            continue;
        }
        let mut x = re;
        let (p, dp) = poly_eval(poly, x);
        if dp != 0.0 && (p / dp).abs() < 1e-3 * x.abs().max(1.0) {
            x -= p / dp;
        }
        let mult = if im > 0.0 { 2 } else { 1 };
        if let Some(prev) = real.iter_mut().find(|(y, _)| (y - x).abs() <= 1e-6 * x.abs().max(1.0)) {
            prev.1 += mult;
        } else {
            real.push((x, mult));
        }
    }
    real.sort_by(|a, b| a.0.total_cmp(&b.0));
    let deriv: Vec<f64> = poly.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
    for (mut lam, mult) in real {
        if mult >= 2 {
            // A double root is only sqrt(eps)-accurate from the eigenvalues; it is a simple root of p'.
            for _ in 0..3 {
                let (p1, dp1) = poly_eval(&deriv, lam);
                if dp1 == 0.0 || (p1 / dp1).abs() > 1e-3 * lam.abs().max(1.0) {
                    break;
                }
                lam -= p1 / dp1;
            }
        }
        let m = mq + mw * lam;
        match factor_degenerate(&m) {
            Some(lines) => out.members.push(PencilMember { lambda: Lambda::Finite(lam), multiplicity: mult, lines }),
            None => out.complex_lines += 1,
        }
    }
    Ok(out)
}

/// Unit eigenvectors of the quadratic part, ordered by ascending eigenvalue.
pub fn conic_axes(q: &Conic2) -> Result<[Vec2; 2]> {
    let (a, b, c) = (q.m[0][0], q.m[0][1], q.m[1][1]);
    let block = Matrix2::new(a, b, b, c);
    if block.norm() <= 1e-12 {
        return Err(GeomError::DegenerateConic);
    }
    let disc = ((a - c) * 0.5).hypot(b);
    let (l1, l2) = (0.5 * (a + c) - disc, 0.5 * (a + c) + disc);
    if (l2 - l1).abs() <= 1e-10 * (l1.abs() + l2.abs()) {
        return Err(GeomError::CircularConic);
    }
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    // Direction of the larger eigenvalue is at theta.
    let big = Vec2::new(theta.cos(), theta.sin());
    Ok([big.perp(), big])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bisectors {
    pub dirs: [Vec2; 2],
    /// Intersection of the diagonals (AC) and (BD).
    pub vertex: Option<Point2>,
    pub parallel: bool,
}

/// Angle bisectors of the lines (AC) and (BD).
pub fn diagonal_bisectors(a: Point2, b: Point2, c: Point2, d: Point2) -> Result<Bisectors> {
    let ac = c - a;
    let bd = d - b;
    let scale = ac.norm().max(bd.norm());
    if ac.norm() <= 1e-14 * scale.max(1.0) || bd.norm() <= 1e-14 * scale.max(1.0) {
        return Err(GeomError::CoincidentPoints);
    }
    let d1 = ac.normalized();
    let mut d2 = bd.normalized();
    let sin = d1.cross(d2);
    if sin.abs() <= 1e-10 {
        return Ok(Bisectors { dirs: [d1, d1.perp()], vertex: None, parallel: true });
    }
    if d1.dot(d2) < 0.0 {
        d2 = -d2;
    }
    let b1 = (d1 + d2).normalized();
    // a + s ac = b + t bd
    let s = (b - a).cross(bd) / ac.cross(bd);
    Ok(Bisectors { dirs: [b1, b1.perp()], vertex: Some(a + ac * s), parallel: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConicHit {
    pub point: Point2,
    /// Polar angle around the circle center, in [0, 2pi).
    pub angle: f64,
    /// 2 for a tangential contact.
    pub multiplicity: u8,
}

/// Fourier coefficients of `Q(c + r(cos t, sin t)) = a0 + a1 cos t + b1 sin t + a2 cos 2t + b2 sin 2t`.
fn circle_fourier(q: &Conic2, c: Point2, r: f64) -> [f64; 5] {
    let m = &q.m;
    let (a, b, cc, d, e) = (m[0][0], m[0][1], m[1][1], m[0][2], m[1][2]);
    [
        q.eval(c) + r * r * (a + cc) / 2.0,
        2.0 * r * (a * c.x + b * c.y + d),
        2.0 * r * (b * c.x + cc * c.y + e),
        r * r * (a - cc) / 2.0,
        r * r * b,
    ]
}

fn fourier_eval(f: &[f64; 5], t: f64) -> (f64, f64, f64) {
    let (s1, c1) = t.sin_cos();
    let (s2, c2) = (2.0 * t).sin_cos();
    let g = f[0] + f[1] * c1 + f[2] * s1 + f[3] * c2 + f[4] * s2;
    let dg = -f[1] * s1 + f[2] * c1 - 2.0 * f[3] * s2 + 2.0 * f[4] * c2;
    let ddg = -f[1] * c1 - f[2] * s1 - 4.0 * f[3] * c2 - 4.0 * f[4] * s2;
    (g, dg, ddg)
}

/// Intersections of a conic with a circle, ordered by polar angle on the circle.
pub fn circle_conic_intersections(q: &Conic2, w: &Conic2) -> Result<Vec<ConicHit>> {
    let (c, r) = w.as_circle()?;
    let f = circle_fourier(q, c, r);
    let fscale = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let qscale = q.norm() * (1.0 + c.norm() + r).powi(2);
    if fscale <= 1e-14 * qscale {
        return Err(GeomError::ProportionalConics);
    }
    // Pick the substitution origin so that theta0 + pi is far from a root.
    let theta0 = (0..8)
        .map(|k| k as f64 * PI / 4.0)
        .max_by(|&x, &y| fourier_eval(&f, x + PI).0.abs().total_cmp(&fourier_eval(&f, y + PI).0.abs()))
        .unwrap();
    let (s0, c0) = theta0.sin_cos();
    let (s20, c20) = (2.0 * theta0).sin_cos();
    let a0 = f[0];
    let a1 = f[1] * c0 + f[2] * s0;
    let b1 = -f[1] * s0 + f[2] * c0;
    let a2 = f[3] * c20 + f[4] * s20;
    let b2 = -f[3] * s20 + f[4] * c20;
    let poly = [a0 + a1 + a2, 2.0 * b1 + 4.0 * b2, 2.0 * a0 - 6.0 * a2, 2.0 * b1 - 4.0 * b2, a0 - a1 + a2];
    let mut cand: Vec<(f64, bool)> = vec![];
    for (re, im) in poly_roots(&poly) {
        if im.abs() > 1e-6 * re.abs().max(1.0) || im < 0.0 {
            continue;
        }
        cand.push((theta0 + 2.0 * re.atan(), im > 0.0));
    }
    let gtol = 1e-9 * fscale.max(1e-300);
    let mut hits: Vec<ConicHit> = vec![];
    for (t0, near_double) in cand {
        let mut t = t0;
        let mut mult = if near_double { 2 } else { 1 };
        for _ in 0..8 {
            let (g, dg, ddg) = fourier_eval(&f, t);
            let step = if mult == 1 && dg.abs() > 1e-8 * fscale {
                g / dg
            } else if ddg != 0.0 {
                dg / ddg
            } else {
                0.0
            };
            if !step.is_finite() || step.abs() > 0.1 {
                break;
            }
            t -= step;
        }
        let (g, dg, _) = fourier_eval(&f, t);
        if g.abs() > gtol * 1e3 {
            continue;
        }
        if dg.abs() <= 1e-6 * fscale {
            mult = 2;
        }
        let angle = t.rem_euclid(TAU);
        if let Some(h) = hits.iter_mut().find(|h| {
            let d = (h.angle - angle).rem_euclid(TAU);
            d.min(TAU - d) < 1e-6
        }) {
            h.multiplicity = 2;
            continue;
        }
        hits.push(ConicHit { point: c + Vec2::new(angle.cos(), angle.sin()) * r, angle, multiplicity: mult });
    }
    hits.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_of_aligned_ellipse() {
        let q = Conic2::from_coeffs(0.25, 0.0, 1.0, 0.0, 0.0, -1.0).unwrap();
        let ax = conic_axes(&q).unwrap();
        assert!(ax[0].cross(Vec2::new(1.0, 0.0)).abs() < 1e-15);
        assert!(ax[1].cross(Vec2::new(0.0, 1.0)).abs() < 1e-15);
        let circ = Conic2::circle(Vec2::new(0.0, 0.0), 1.0);
        assert_eq!(conic_axes(&circ).unwrap_err(), GeomError::CircularConic);
    }

    #[test]
    fn square_bisectors() {
        let b =
            diagonal_bisectors(Vec2::new(-1.0, -1.0), Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0))
                .unwrap();
        let axis_aligned = |v: Vec2| v.x.abs() < 1e-15 || v.y.abs() < 1e-15;
        assert!(axis_aligned(b.dirs[0]) && axis_aligned(b.dirs[1]));
        assert!(b.vertex.unwrap().norm() < 1e-15);
    }

    #[test]
    fn tangent_contacts() {
        let q = Conic2::from_coeffs(1.0, 0.0, 4.0, 0.0, 0.0, -4.0).unwrap();
        let w = Conic2::circle(Vec2::new(0.0, 0.0), 1.0);
        let hits = circle_conic_intersections(&q, &w).unwrap();
        assert_eq!(hits.len(), 2);
        for h in &hits {
            assert_eq!(h.multiplicity, 2);
            assert!(h.point.x.abs() < 1e-7 && (h.point.y.abs() - 1.0).abs() < 1e-12);
        }
    }
}

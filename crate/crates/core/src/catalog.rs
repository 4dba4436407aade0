//! Built-in analytic surfaces, selectable by `name:key=value,...`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::error::{GeomError, Result};
use crate::geom3::{Point2, Point3, Vec2, Vec3};
use crate::jet::{Jet, Real};
use crate::surface::{Domain, ParamTag, Surface, SurfaceJet};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kind {
    /// ((R + r cos u) cos v, (R + r cos u) sin v, r sin u); u meridian angle, v parallel angle.
    Torus { big_r: f64, r: f64 },
    /// R (cos u cos v, cos u sin v, sin u).
    Sphere { r: f64 },
    /// (r cos(v/r), r sin(v/r), u): u along the rulings, v arclength around.
    Cylinder { r: f64 },
    /// Profile g(u) = g0 + g1 cos u, h(u) = h1 sin u rotated about z.
    Revolve { g0: f64, g1: f64, h1: f64 },
    /// z = (K1 x^2 + K2 y^2)/2 + a30 x^3 + a21 x^2 y + a12 x y^2 + a03 y^3.
    CubicGraph { k1: f64, k2: f64, a30: f64, a21: f64, a12: f64, a03: f64 },
    /// c1(u) + c2(v) with c1 = (u, 0, a u^2), c2 = (s v, v, b v^2).
    Translational { a: f64, b: f64, s: f64 },
    /// (a cos u cos v, b cos u sin v, c sin u).
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// Triaxial ellipsoid in ellipsoidal (confocal) coordinates c^2 < u < b^2 < v < a^2,
    /// first octant; the coordinate lines are curvature lines.
    EllipsoidLines { a: f64, b: f64, c: f64 },
    /// z = K u^2 / 2: a parabolic cylinder as a graph.
    CylinderGraph { k: f64 },
    /// Image of the torus under inversion in the unit sphere about (cx, cy, cz).
    InvertedTorus { big_r: f64, r: f64, center: [f64; 3] },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatalogSurface {
    pub kind: Kind,
}

fn eval<S: Real>(kind: &Kind, u: S, v: S) -> [S; 3] {
    match *kind {
        Kind::Torus { big_r, r } => torus(big_r, r, u, v),
        Kind::Sphere { r } => {
            let cu = u.cos();
            [(cu * v.cos()).scale(r), (cu * v.sin()).scale(r), u.sin().scale(r)]
        }
        Kind::Cylinder { r } => {
            let t = v.scale(1.0 / r);
            [t.cos().scale(r), t.sin().scale(r), u]
        }
        Kind::Revolve { g0, g1, h1 } => {
            let g = u.cos().scale(g1).add_c(g0);
            [g * v.cos(), g * v.sin(), u.sin().scale(h1)]
        }
        Kind::CubicGraph { k1, k2, a30, a21, a12, a03 } => {
            let (x2, y2) = (u * u, v * v);
            let z = (x2.scale(k1) + y2.scale(k2)).scale(0.5)
                + (x2 * u).scale(a30)
                + (x2 * v).scale(a21)
                + (u * y2).scale(a12)
                + (y2 * v).scale(a03);
            [u, v, z]
        }
        Kind::Translational { a, b, s } => [u + v.scale(s), v, (u * u).scale(a) + (v * v).scale(b)],
        Kind::Ellipsoid { a, b, c } => {
            let cu = u.cos();
            [(cu * v.cos()).scale(a), (cu * v.sin()).scale(b), u.sin().scale(c)]
        }
        Kind::EllipsoidLines { a, b, c } => {
            let (a2, b2, c2) = (a * a, b * b, c * c);
            let x = ((u.scale(-1.0).add_c(a2) * v.scale(-1.0).add_c(a2)).scale(1.0 / ((a2 - b2) * (a2 - c2)))).sqrt();
            let y = ((u.scale(-1.0).add_c(b2) * v.add_c(-b2)).scale(1.0 / ((a2 - b2) * (b2 - c2)))).sqrt();
            let z = ((u.add_c(-c2) * v.add_c(-c2)).scale(1.0 / ((a2 - c2) * (b2 - c2)))).sqrt();
            [x.scale(a), y.scale(b), z.scale(c)]
        }
        Kind::CylinderGraph { k } => [u, v, (u * u).scale(0.5 * k)],
        Kind::InvertedTorus { big_r, r, center } => {
            let p = torus(big_r, r, u, v);
            let d = [p[0].add_c(-center[0]), p[1].add_c(-center[1]), p[2].add_c(-center[2])];
            let inv = S::cst(1.0) / (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
            [(d[0] * inv).add_c(center[0]), (d[1] * inv).add_c(center[1]), (d[2] * inv).add_c(center[2])]
        }
    }
}

fn torus<S: Real>(big_r: f64, r: f64, u: S, v: S) -> [S; 3] {
    let g = u.cos().scale(r).add_c(big_r);
    [g * v.cos(), g * v.sin(), u.sin().scale(r)]
}

impl CatalogSurface {
    pub fn new(kind: Kind) -> Self {
        CatalogSurface { kind }
    }

    /// Reasonable generic base point, away from umbilics and parabolic lines.
    pub fn default_uv(&self) -> Point2 {
        match self.kind {
            Kind::Torus { .. } | Kind::InvertedTorus { .. } => Vec2::new(0.7, 0.3),
            Kind::Sphere { .. } => Vec2::new(0.3, 0.4),
            Kind::Cylinder { .. } => Vec2::new(0.2, 0.3),
            Kind::Revolve { .. } => Vec2::new(0.3, 0.2),
            Kind::CubicGraph { .. } | Kind::CylinderGraph { .. } | Kind::Translational { .. } => Vec2::new(0.0, 0.0),
            Kind::Ellipsoid { .. } => Vec2::new(0.4, 0.7),
            Kind::EllipsoidLines { a, b, c } => {
                let (a2, b2, c2) = (a * a, b * b, c * c);
                Vec2::new(c2 + 0.3 * (b2 - c2), b2 + 0.3 * (a2 - b2))
            }
        }
    }
}

impl Surface for CatalogSurface {
    fn point(&self, uv: Point2) -> Point3 {
        let p = eval(&self.kind, uv.x, uv.y);
        Vec3::new(p[0], p[1], p[2])
    }

    fn analytic_jet(&self, uv: Point2) -> Option<SurfaceJet> {
        let p = eval(&self.kind, Jet::var_u(uv.x), Jet::var_v(uv.y));
        let d = |i: usize, j: usize| Vec3::new(p[0].deriv(i, j), p[1].deriv(i, j), p[2].deriv(i, j));
        Some(SurfaceJet {
            p: d(0, 0),
            fu: d(1, 0),
            fv: d(0, 1),
            fuu: d(2, 0),
            fuv: d(1, 1),
            fvv: d(0, 2),
            fuuu: d(3, 0),
            fuuv: d(2, 1),
            fuvv: d(1, 2),
            fvvv: d(0, 3),
        })
    }

    fn domain(&self) -> Domain {
        match self.kind {
            Kind::Sphere { .. } | Kind::Ellipsoid { .. } => {
                Domain { u: (-FRAC_PI_2, FRAC_PI_2), v: (f64::NEG_INFINITY, f64::INFINITY) }
            }
            Kind::EllipsoidLines { a, b, c } => Domain { u: (c * c, b * b), v: (b * b, a * a) },
            Kind::CubicGraph { .. } | Kind::CylinderGraph { .. } | Kind::Translational { .. } => {
                Domain { u: (-10.0, 10.0), v: (-10.0, 10.0) }
            }
            _ => Domain::ALL,
        }
    }

    fn tag(&self) -> ParamTag {
        match self.kind {
            Kind::Torus { .. }
            | Kind::Sphere { .. }
            | Kind::Cylinder { .. }
            | Kind::Revolve { .. }
            | Kind::EllipsoidLines { .. }
            | Kind::CylinderGraph { .. }
            | Kind::InvertedTorus { .. } => ParamTag::CurvatureLine,
            Kind::Translational { .. } => ParamTag::Conjugate,
            Kind::CubicGraph { .. } | Kind::Ellipsoid { .. } => ParamTag::Generic,
        }
    }

    fn scale(&self) -> f64 {
        match self.kind {
            Kind::Torus { big_r, r } => big_r + r,
            Kind::Sphere { r } | Kind::Cylinder { r } => r,
            Kind::Revolve { g0, g1, h1 } => g0.abs() + g1.abs() + h1.abs(),
            Kind::Ellipsoid { a, .. } | Kind::EllipsoidLines { a, .. } => a,
            _ => 1.0,
        }
    }

    fn implicit(&self, p: Point3) -> Option<(f64, Vec3)> {
        match self.kind {
            Kind::Torus { big_r, r } => {
                // (R^2 + |p|^2 - r^2)^2 - 4 R^2 (x^2 + y^2)
                let s = big_r * big_r + p.norm_sq() - r * r;
                let f = s * s - 4.0 * big_r * big_r * (p.x * p.x + p.y * p.y);
                let g = p * (4.0 * s) - Vec3::new(p.x, p.y, 0.0) * (8.0 * big_r * big_r);
                Some((f, g))
            }
            Kind::Sphere { r } => Some((p.norm_sq() - r * r, p * 2.0)),
            Kind::Cylinder { r } => Some((p.x * p.x + p.y * p.y - r * r, Vec3::new(2.0 * p.x, 2.0 * p.y, 0.0))),
            Kind::Ellipsoid { a, b, c } | Kind::EllipsoidLines { a, b, c } => Some((
                (p.x / a).powi(2) + (p.y / b).powi(2) + (p.z / c).powi(2) - 1.0,
                Vec3::new(2.0 * p.x / (a * a), 2.0 * p.y / (b * b), 2.0 * p.z / (c * c)),
            )),
            _ => None,
        }
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CatalogSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Kind::Torus { big_r, r } => write!(f, "torus:R={big_r},r={r}"),
            Kind::Sphere { r } => write!(f, "sphere:R={r}"),
            Kind::Cylinder { r } => write!(f, "cylinder:r={r}"),
            Kind::Revolve { g0, g1, h1 } => write!(f, "revolve:g0={g0},g1={g1},h1={h1}"),
            Kind::CubicGraph { k1, k2, a30, a21, a12, a03 } => {
                write!(f, "cubic-graph:K1={k1},K2={k2},a30={a30},a21={a21},a12={a12},a03={a03}")
            }
            Kind::Translational { a, b, s } => write!(f, "translational:a={a},b={b},s={s}"),
            Kind::Ellipsoid { a, b, c } => write!(f, "ellipsoid:a={a},b={b},c={c}"),
            Kind::EllipsoidLines { a, b, c } => write!(f, "ellipsoid-lines:a={a},b={b},c={c}"),
            Kind::CylinderGraph { k } => write!(f, "cylinder-graph:K={k}"),
            Kind::InvertedTorus { big_r, r, center } => {
                write!(f, "inverted-torus:R={big_r},r={r},cx={},cy={},cz={}", center[0], center[1], center[2])
            }
        }
    }
}

struct Params {
    map: BTreeMap<String, f64>,
    spec: String,
}

impl Params {
    fn take(&mut self, key: &str, default: f64) -> f64 {
        self.map.remove(key).unwrap_or(default)
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.map.keys().next() {
            return Err(GeomError::InvalidSurfaceSpec(format!("unknown parameter `{k}` in `{}`", self.spec)));
        }
        Ok(())
    }
}

/// Names accepted by [`parse_surface`].
pub const CATALOG_NAMES: [&str; 10] = [
    "torus",
    "sphere",
    "cylinder",
    "revolve",
    "cubic-graph",
    "translational",
    "ellipsoid",
    "ellipsoid-lines",
    "cylinder-graph",
    "inverted-torus",
];

/// Parses `name` or `name:key=value,...`; omitted keys take their defaults.
pub fn parse_surface(spec: &str) -> Result<CatalogSurface> {
    let bad = |msg: String| GeomError::InvalidSurfaceSpec(msg);
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r.trim()),
        None => (spec.trim(), ""),
    };
    let mut map = BTreeMap::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{item}`")))?;
        let val: f64 = v.trim().parse().map_err(|_| bad(format!("bad number `{v}` for `{k}`")))?;
        if !val.is_finite() {
            return Err(bad(format!("non-finite value for `{k}`")));
        }
        if map.insert(k.trim().to_string(), val).is_some() {
            return Err(bad(format!("duplicate key `{k}`")));
        }
    }
    let mut p = Params { map, spec: spec.to_string() };
    let positive = |x: f64, what: &str| -> Result<f64> {
        if x > 0.0 {
            Ok(x)
        } else {
            Err(GeomError::InvalidSurfaceSpec(format!("{what} must be positive")))
        }
    };
    let kind = match name {
        "torus" => {
            let big_r = positive(p.take("R", 2.0), "R")?;
            let r = positive(p.take("r", 1.0), "r")?;
            if r >= big_r {
                return Err(bad("torus needs r < R".into()));
            }
            Kind::Torus { big_r, r }
        }
        "sphere" => Kind::Sphere { r: positive(p.take("R", 1.0), "R")? },
        "cylinder" => Kind::Cylinder { r: positive(p.take("r", 1.0), "r")? },
        "revolve" => {
            let (g0, g1, h1) = (p.take("g0", 2.0), p.take("g1", 1.0), p.take("h1", 1.0));
            if g0 - g1.abs() <= 0.0 || h1 == 0.0 {
                return Err(bad("revolve needs g0 > |g1| and h1 != 0".into()));
            }
            Kind::Revolve { g0, g1, h1 }
        }
        "cubic-graph" => Kind::CubicGraph {
            k1: p.take("K1", 1.0),
            k2: p.take("K2", 2.0),
            a30: p.take("a30", 0.1),
            a21: p.take("a21", -0.05),
            a12: p.take("a12", 0.2),
            a03: p.take("a03", 0.07),
        },
        "translational" => Kind::Translational { a: p.take("a", 0.5), b: p.take("b", 0.3), s: p.take("s", 0.2) },
        "ellipsoid" | "ellipsoid-lines" => {
            let (a, b, c) = (p.take("a", 3.0), p.take("b", 2.0), p.take("c", 1.0));
            if !(a > b && b > c && c > 0.0) {
                return Err(bad("ellipsoid needs a > b > c > 0".into()));
            }
            if name == "ellipsoid" {
                Kind::Ellipsoid { a, b, c }
            } else {
                Kind::EllipsoidLines { a, b, c }
            }
        }
        "cylinder-graph" => Kind::CylinderGraph { k: p.take("K", 1.0) },
        "inverted-torus" => {
            let big_r = positive(p.take("R", 2.0), "R")?;
            let r = positive(p.take("r", 1.0), "r")?;
            let center = [p.take("cx", 4.0), p.take("cy", 0.5), p.take("cz", 0.3)];
            let c = Vec3::from(center);
            let ring = (c.x.hypot(c.y) - big_r).hypot(c.z);
            if r >= big_r || ring <= r * 1.05 {
                return Err(bad("inversion center must lie well outside the torus".into()));
            }
            Kind::InvertedTorus { big_r, r, center }
        }
        _ => {
            return Err(bad(format!("unknown surface `{name}` (known: {})", CATALOG_NAMES.join(", "))));
        }
    };
    p.finish()?;
    Ok(CatalogSurface { kind })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_roundtrip() {
        let s = parse_surface("cubic-graph:K1=1,K2=2,a30=0.1,a21=-0.05,a12=0.2,a03=0.07").unwrap();
        assert_eq!(parse_surface(&s.to_string()).unwrap(), s);
        assert!(parse_surface("torus:R=2,q=1").is_err());
        assert!(parse_surface("klein").is_err());
        assert!(parse_surface("torus:R=1,r=2").is_err());
    }

    #[test]
    fn ellipsoid_lines_lie_on_ellipsoid() {
        let s = parse_surface("ellipsoid-lines:a=3,b=2,c=1").unwrap();
        for uv in [Vec2::new(1.5, 5.0), Vec2::new(3.7, 8.2)] {
            let (f, _) = s.implicit(s.point(uv)).unwrap();
            assert!(f.abs() < 1e-14);
        }
    }
}

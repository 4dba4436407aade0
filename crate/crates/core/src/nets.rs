//! Discrete nets inscribed in a surface: smooth reference nets, the two
//! conjugate-net builders, the circular-net builder, and deviation analytics.

use serde::Serialize;

use crate::constructions::{
    circular_fourth_point, circularity_defect, double_planar_point, planarity_defect, QuadDefects,
};
use crate::error::{GeomError, Result};
use crate::geom3::{Plane3, Point2, Point3, Vec3};
use crate::intersect::SurfaceHit;
use crate::surface::{
    closest_point, principal_frame, trace_curvature_line_from, umbilic_frame, Family, ParamTag, Surface,
    DEFAULT_UMBILIC_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    FixedInitial,
    FixedEvenColumn,
    Constructed,
    Projected,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NetVertex {
    pub i: usize,
    pub j: usize,
    pub xyz: Point3,
    pub uv: Option<Point2>,
    pub kind: VertexKind,
}

/// Vertices indexed by (i, j) with i along u; `nu` x `nv` vertices in total.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetLattice {
    pub nu: usize,
    pub nv: usize,
    pub eps: f64,
    pub uv0: Point2,
    pub builder: String,
    pub surface: String,
    pub vertices: Vec<NetVertex>,
    pub reference_uv: Vec<Point2>,
}

impl NetLattice {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    pub fn vertex(&self, i: usize, j: usize) -> &NetVertex {
        &self.vertices[self.idx(i, j)]
    }

    pub fn reference(&self, i: usize, j: usize) -> Point2 {
        self.reference_uv[self.idx(i, j)]
    }

    fn hit(&self, i: usize, j: usize) -> SurfaceHit {
        let v = self.vertex(i, j);
        SurfaceHit { point: v.xyz, uv: v.uv.unwrap_or(self.reference(i, j)), param: 0.0, multiplicity: 1 }
    }

    fn set(&mut self, i: usize, j: usize, xyz: Point3, uv: Option<Point2>, kind: VertexKind) {
        let k = self.idx(i, j);
        self.vertices[k] = NetVertex { i, j, xyz, uv, kind };
    }

    /// Corners of quad (i, j) in cyclic order: (i,j), (i+1,j), (i+1,j+1), (i,j+1).
    pub fn quad(&self, i: usize, j: usize) -> [Point3; 4] {
        [self.vertex(i, j).xyz, self.vertex(i + 1, j).xyz, self.vertex(i + 1, j + 1).xyz, self.vertex(i, j + 1).xyz]
    }
}

fn grid_uv(uv0: Point2, eps: f64, i: usize, j: usize) -> Point2 {
    Point2::new(uv0.x + i as f64 * eps, uv0.y + j as f64 * eps)
}

/// Smooth net f(u0 + i eps, v0 + j eps) for i <= nu, j <= nv steps.
pub fn smooth_net(s: &dyn Surface, uv0: Point2, eps: f64, nu: usize, nv: usize) -> Result<NetLattice> {
    let dom = s.domain();
    let (mu, mv) = (nu + 1, nv + 1);
    let mut vertices = Vec::with_capacity(mu * mv);
    let mut reference_uv = Vec::with_capacity(mu * mv);
    for i in 0..mu {
        for j in 0..mv {
            let uv = grid_uv(uv0, eps, i, j);
            if !dom.contains(uv) {
                return Err(GeomError::DomainExit);
            }
            vertices.push(NetVertex { i, j, xyz: s.point(uv), uv: Some(uv), kind: VertexKind::FixedInitial });
            reference_uv.push(uv);
        }
    }
    Ok(NetLattice { nu: mu, nv: mv, eps, uv0, builder: "smooth".into(), surface: s.label(), vertices, reference_uv })
}

/// Trace `steps` segments of arclength `eps` from `uv0`, keeping orientation.
fn trace_polyline(
    s: &dyn Surface,
    uv0: Point2,
    which: Family,
    eps: f64,
    steps: usize,
    reference: Vec3,
) -> Result<Vec<Point2>> {
    let mut out = vec![uv0];
    let mut dir = reference;
    let mut uv = uv0;
    for _ in 0..steps {
        let (next, d) = trace_curvature_line_from(s, uv, which, eps, dir)?;
        uv = next;
        dir = d;
        out.push(uv);
    }
    Ok(out)
}

/// Smooth curvature-line net realized by tracing, for surfaces not parametrized by curvature lines.
///
/// The i-lines follow `i_family`, oriented along f_u at uv0; the j-lines follow the
/// other family, oriented along f_v. Coordinates are arclengths along the two
/// initial curves, and interior vertices are intersections of traced lines.
pub fn smooth_net_traced(
    s: &dyn Surface,
    uv0: Point2,
    eps: f64,
    nu: usize,
    nv: usize,
    i_family: Family,
) -> Result<NetLattice> {
    let j_family = match i_family {
        Family::First => Family::Second,
        Family::Second => Family::First,
    };
    let fr = principal_frame(s, uv0)?;
    if umbilic_frame(&fr, DEFAULT_UMBILIC_TOL) {
        return Err(GeomError::UmbilicEncountered);
    }
    let jet0 = s.jet(uv0);
    let orient = |d: Vec3, r: Vec3| if d.dot(r) < 0.0 { -d } else { d };
    let ref_i = orient(i_family.pick(&fr), jet0.fu);
    let ref_j = orient(j_family.pick(&fr), jet0.fv);
    let gi = trace_polyline(s, uv0, i_family, eps, nu, ref_i)?;
    let gj = trace_polyline(s, uv0, j_family, eps, nv, ref_j)?;
    let (mu, mv) = (nu + 1, nv + 1);
    let mut grid = vec![Point2::new(0.0, 0.0); mu * mv];
    for i in 0..mu {
        grid[i * mv] = gi[i];
    }
    grid[..mv].copy_from_slice(&gj[..mv]);
    let dir_at = |uv: Point2, fam: Family, r: fn(&crate::surface::SurfaceJet) -> Vec3| -> Result<Vec3> {
        let j = s.jet(uv);
        let f = principal_frame(s, uv)?;
        Ok(orient(fam.pick(&f), r(&j)))
    };
    for i in 1..mu {
        for jj in 1..mv {
            // j-line from gi[i] meets the i-line from gj[jj].
            let (pa, pb) = (gi[i], gj[jj]);
            let ra = dir_at(pa, j_family, |j| j.fv)?;
            let rb = dir_at(pb, i_family, |j| j.fu)?;
            let (mut sa, mut sb) = (jj as f64 * eps, i as f64 * eps);
            let mut done = false;
            for _ in 0..30 {
                let (xa, da) = trace_curvature_line_from(s, pa, j_family, sa, ra)?;
                let (xb, db) = trace_curvature_line_from(s, pb, i_family, sb, rb)?;
                let f = xa - xb;
                if f.norm() <= 1e-13 * s.param_scale() {
                    grid[i * mv + jj] = xa;
                    done = true;
                    break;
                }
                let (ja, jb) = (s.jet(xa).pull(da), s.jet(xb).pull(db));
                // [ja, -jb] [dsa, dsb] = -f
                let det = ja.x * (-jb.y) - (-jb.x) * ja.y;
                if det.abs() <= 1e-14 {
                    return Err(GeomError::NoConvergence("traced net: lines are tangent"));
                }
                let dsa = (-f.x * (-jb.y) - (-jb.x) * (-f.y)) / det;
                let dsb = (ja.x * (-f.y) - (-f.x) * ja.y) / det;
                sa += dsa;
                sb += dsb;
                grid[i * mv + jj] = xa;
            }
            if !done {
                return Err(GeomError::NoConvergence("traced net intersection"));
            }
        }
    }
    let mut vertices = Vec::with_capacity(mu * mv);
    for i in 0..mu {
        for j in 0..mv {
            let uv = grid[i * mv + j];
            vertices.push(NetVertex { i, j, xyz: s.point(uv), uv: Some(uv), kind: VertexKind::FixedInitial });
        }
    }
    Ok(NetLattice {
        nu: mu,
        nv: mv,
        eps,
        uv0,
        builder: "smooth-traced".into(),
        surface: s.label(),
        vertices,
        reference_uv: grid,
    })
}

fn require_conjugate(s: &dyn Surface) -> Result<()> {
    match s.tag() {
        ParamTag::Conjugate | ParamTag::CurvatureLine => Ok(()),
        ParamTag::Generic => Err(GeomError::NotConjugate),
    }
}

fn edge_scale(pts: &[Point3]) -> f64 {
    pts.windows(2).map(|w| w[0].dist(w[1])).fold(0.0, f64::max)
}

/// Interior vertices are orthogonal projections of the smooth vertex onto the
/// plane through the three previously built neighbours.
pub fn build_conjugate_projection(s: &dyn Surface, uv0: Point2, eps: f64, n: usize) -> Result<NetLattice> {
    require_conjugate(s)?;
    let mut net = smooth_net(s, uv0, eps, n, n)?;
    net.builder = "projection".into();
    for i in 1..net.nu {
        for j in 1..net.nv {
            let a = net.vertex(i - 1, j - 1).xyz;
            let b = net.vertex(i, j - 1).xyz;
            let c = net.vertex(i - 1, j).xyz;
            let plane = Plane3::through(a, b, c)?;
            let p = plane.project(s.point(net.reference(i, j)));
            let q = planarity_defect(a, b, c, p)?;
            let h = q.planarity_height.unwrap_or(0.0);
            if h > 1e-9 * eps.max(1e-300) && h > 1e-13 * s.scale() {
                return Err(GeomError::InvariantViolated(format!("projection quad ({i},{j}) height {h:e}")));
            }
            net.set(i, j, p, None, VertexKind::Projected);
        }
    }
    Ok(net)
}

/// Even columns and row 0 stay on the smooth net; each odd-column vertex
/// makes its two neighbouring quads planar while staying on the surface.
pub fn build_conjugate_onsurface(s: &dyn Surface, uv0: Point2, eps: f64, n: usize) -> Result<NetLattice> {
    require_conjugate(s)?;
    let n = n + n % 2;
    let mut net = smooth_net(s, uv0, eps, n, n)?;
    net.builder = "onsurface".into();
    for i in (0..net.nu).step_by(2) {
        for j in 1..net.nv {
            let k = net.idx(i, j);
            net.vertices[k].kind = VertexKind::FixedEvenColumn;
        }
    }
    for j in 1..net.nv {
        for i in (1..net.nu).step_by(2) {
            let a = net.hit(i - 1, j - 1);
            let b = net.hit(i, j - 1);
            let c = net.hit(i - 1, j);
            let e = net.hit(i + 1, j - 1);
            let f = net.hit(i + 1, j);
            let guess = SurfaceHit::at(s, net.reference(i, j));
            let m = double_planar_point(s, &a, &b, &c, &e, &f, &guess)?;
            for quad in [[a.point, b.point, m.point, c.point], [b.point, m.point, f.point, e.point]] {
                let vol = planarity_defect(quad[0], quad[1], quad[3], quad[2])?.planarity_volume.unwrap_or(0.0);
                let scale = edge_scale(&[quad[0], quad[1], quad[2], quad[3], quad[0]]);
                if vol.abs() > 1e-10 * eps.powi(3) + 1e-12 * s.scale() * scale * scale {
                    return Err(GeomError::InvariantViolated(format!("on-surface quad at ({i},{j}) volume {vol:e}")));
                }
            }
            net.set(i, j, m.point, Some(m.uv), VertexKind::Constructed);
        }
    }
    Ok(net)
}

/// Row 0 and column 0 stay on the smooth net; vertex (i, j) is the fourth
/// intersection of the circle through its three lower-left neighbours.
/// Filled by anti-diagonals.
pub fn build_circular_net(s: &dyn Surface, uv0: Point2, eps: f64, n: usize) -> Result<NetLattice> {
    if s.tag() != ParamTag::CurvatureLine {
        return Err(GeomError::NotCurvatureLine);
    }
    let mut net = smooth_net(s, uv0, eps, n, n)?;
    net.builder = "circular".into();
    for uv in &net.reference_uv {
        if umbilic_frame(&principal_frame(s, *uv)?, DEFAULT_UMBILIC_TOL) {
            return Err(GeomError::UmbilicEncountered);
        }
    }
    for d in 2..=(net.nu - 1 + net.nv - 1) {
        for i in 1..net.nu {
            if d < i + 1 || d - i >= net.nv {
                continue;
            }
            let j = d - i;
            let a = net.hit(i - 1, j - 1);
            let b = net.hit(i, j - 1);
            let c = net.hit(i - 1, j);
            let guess = SurfaceHit::at(s, net.reference(i, j));
            let m = circular_fourth_point(s, &a, &b, &c, &guess)?;
            let circ = circularity_defect(a.point, b.point, m.point, c.point)?.circularity.unwrap_or(0.0);
            if circ >= 1e-8 {
                return Err(GeomError::InvariantViolated(format!("circular quad at ({i},{j}) defect {circ:e}")));
            }
            net.set(i, j, m.point, Some(m.uv), VertexKind::Constructed);
        }
    }
    Ok(net)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sublattice {
    Even,
    Odd,
    Intermediate,
}

impl Sublattice {
    pub fn of(i: usize, j: usize) -> Self {
        match (i % 2, j % 2) {
            (0, 0) => Sublattice::Even,
            (1, 1) => Sublattice::Odd,
            _ => Sublattice::Intermediate,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sublattice::Even => "even",
            Sublattice::Odd => "odd",
            Sublattice::Intermediate => "intermediate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VertexDeviation {
    pub i: usize,
    pub j: usize,
    pub du: f64,
    pub dv: f64,
    pub dist: f64,
    pub sublattice: Sublattice,
}

impl VertexDeviation {
    /// Shift along the coordinate line the vertex sits on (intermediate vertices only):
    /// du for (odd, even), dv for (even, odd).
    pub fn along(&self) -> Option<f64> {
        match (self.i % 2, self.j % 2) {
            (1, 0) => Some(self.du.abs()),
            (0, 1) => Some(self.dv.abs()),
            _ => None,
        }
    }

    pub fn cross(&self) -> Option<f64> {
        match (self.i % 2, self.j % 2) {
            (1, 0) => Some(self.dv.abs()),
            (0, 1) => Some(self.du.abs()),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DeviationStats {
    pub count: usize,
    pub max_du: f64,
    pub max_dv: f64,
    pub max_dist: f64,
    pub rms_du: f64,
    pub rms_dv: f64,
    pub rms_dist: f64,
    pub max_shift: f64,
    pub max_along: f64,
    pub max_cross: f64,
}

impl DeviationStats {
    fn from_rows<'a>(rows: impl Iterator<Item = &'a VertexDeviation>) -> Self {
        let mut st = DeviationStats::default();
        let (mut su, mut sv, mut sd) = (0.0, 0.0, 0.0);
        for r in rows {
            st.count += 1;
            st.max_du = st.max_du.max(r.du.abs());
            st.max_dv = st.max_dv.max(r.dv.abs());
            st.max_dist = st.max_dist.max(r.dist);
            st.max_shift = st.max_shift.max(r.du.abs().max(r.dv.abs()));
            st.max_along = st.max_along.max(r.along().unwrap_or(0.0));
            st.max_cross = st.max_cross.max(r.cross().unwrap_or(0.0));
            su += r.du * r.du;
            sv += r.dv * r.dv;
            sd += r.dist * r.dist;
        }
        if st.count > 0 {
            let n = st.count as f64;
            st.rms_du = (su / n).sqrt();
            st.rms_dv = (sv / n).sqrt();
            st.rms_dist = (sd / n).sqrt();
        }
        st
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationReport {
    pub rows: Vec<VertexDeviation>,
    /// Vertices whose foot point did not converge, excluded from the aggregates.
    pub failed: Vec<(usize, usize)>,
    pub overall: DeviationStats,
    pub even: DeviationStats,
    pub odd: DeviationStats,
    pub intermediate: DeviationStats,
}

impl DeviationReport {
    pub fn stats(&self, sub: Sublattice) -> &DeviationStats {
        match sub {
            Sublattice::Even => &self.even,
            Sublattice::Odd => &self.odd,
            Sublattice::Intermediate => &self.intermediate,
        }
    }
}

/// Per-vertex (du, dv) via the foot point, and Euclidean distance to the smooth vertex.
pub fn deviation_report(net: &NetLattice, s: &dyn Surface) -> DeviationReport {
    let mut rows = Vec::with_capacity(net.vertices.len());
    let mut failed = Vec::new();
    for v in &net.vertices {
        let r = net.reference(v.i, v.j);
        let foot = match v.uv {
            Some(uv) if s.point(uv) == v.xyz => Ok(uv),
            Some(uv) => closest_point(s, v.xyz, uv),
            None => closest_point(s, v.xyz, r),
        };
        match foot {
            Ok(uv) => rows.push(VertexDeviation {
                i: v.i,
                j: v.j,
                du: uv.x - r.x,
                dv: uv.y - r.y,
                dist: v.xyz.dist(s.point(r)),
                sublattice: Sublattice::of(v.i, v.j),
            }),
            Err(_) => failed.push((v.i, v.j)),
        }
    }
    let by = |sub: Sublattice| DeviationStats::from_rows(rows.iter().filter(|r| r.sublattice == sub));
    DeviationReport {
        overall: DeviationStats::from_rows(rows.iter()),
        even: by(Sublattice::Even),
        odd: by(Sublattice::Odd),
        intermediate: by(Sublattice::Intermediate),
        rows,
        failed,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadRecord {
    pub i: usize,
    pub j: usize,
    pub defects: QuadDefects,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct QuadSummary {
    pub quads: usize,
    pub max_planarity_height: f64,
    pub rms_planarity_height: f64,
    pub max_circularity: f64,
    pub rms_circularity: f64,
}

/// Planarity and circularity of every elementary quad.
pub fn net_quad_defects(net: &NetLattice) -> (Vec<QuadRecord>, QuadSummary) {
    let mut recs = Vec::new();
    let mut sum = QuadSummary::default();
    let (mut sh, mut sc) = (0.0, 0.0);
    for i in 0..net.nu - 1 {
        for j in 0..net.nv - 1 {
            let [a, b, d, c] = net.quad(i, j);
            // planarity of D over plane(A, B, C) with AB, AC the two edges at A
            let mut q = planarity_defect(a, b, c, d).unwrap_or_default();
            q.circularity = circularity_defect(a, b, d, c).ok().and_then(|x| x.circularity);
            let h = q.planarity_height.unwrap_or(0.0);
            let ci = q.circularity.unwrap_or(0.0);
            sum.max_planarity_height = sum.max_planarity_height.max(h);
            sum.max_circularity = sum.max_circularity.max(ci);
            sh += h * h;
            sc += ci * ci;
            recs.push(QuadRecord { i, j, defects: q });
        }
    }
    sum.quads = recs.len();
    if sum.quads > 0 {
        sum.rms_planarity_height = (sh / sum.quads as f64).sqrt();
        sum.rms_circularity = (sc / sum.quads as f64).sqrt();
    }
    (recs, sum)
}

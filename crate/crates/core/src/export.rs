//! OBJ, JSON and CSV writers for nets and deviation tables.

use std::fmt::Write as _;

use serde::Serialize;

use crate::nets::{DeviationReport, NetLattice, QuadSummary};

/// Wavefront OBJ with one 4-gon face per elementary quad.
pub fn net_to_obj(net: &NetLattice) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} net on {}, eps = {}", net.builder, net.surface, net.eps);
    let _ = writeln!(out, "# {} x {} vertices", net.nu, net.nv);
    for v in &net.vertices {
        let _ = writeln!(out, "v {} {} {}", v.xyz.x, v.xyz.y, v.xyz.z);
    }
    for i in 0..net.nu - 1 {
        for j in 0..net.nv - 1 {
            let k = |a: usize, b: usize| net.idx(a, b) + 1;
            let _ = writeln!(out, "f {} {} {} {}", k(i, j), k(i + 1, j), k(i + 1, j + 1), k(i, j + 1));
        }
    }
    out
}

#[derive(Serialize)]
struct NetJson<'a> {
    #[serde(flatten)]
    net: &'a NetLattice,
    quads: &'a QuadSummary,
}

pub fn net_to_json(net: &NetLattice, quads: &QuadSummary) -> serde_json::Result<String> {
    serde_json::to_string_pretty(&NetJson { net, quads })
}

/// CSV `i,j,du,dv,dist,sublattice`.
pub fn deviations_to_csv(report: &DeviationReport) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["i", "j", "du", "dv", "dist", "sublattice"])?;
    for r in &report.rows {
        w.write_record([
            r.i.to_string(),
            r.j.to_string(),
            r.du.to_string(),
            r.dv.to_string(),
            r.dist.to_string(),
            r.sublattice.name().to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::parse_surface;
    use crate::geom3::Point2;
    use crate::nets::{deviation_report, net_quad_defects, smooth_net};

    #[test]
    fn obj_counts() {
        let s = parse_surface("torus").unwrap();
        let net = smooth_net(&s, Point2::new(0.0, 0.0), 0.1, 4, 3).unwrap();
        let obj = net_to_obj(&net);
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 20);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 12);
        let csv = deviations_to_csv(&deviation_report(&net, &s)).unwrap();
        assert_eq!(csv.lines().count(), 21);
        let (_, q) = net_quad_defects(&net);
        let js: serde_json::Value = serde_json::from_str(&net_to_json(&net, &q).unwrap()).unwrap();
        assert_eq!(js["vertices"].as_array().unwrap().len(), 20);
    }
}

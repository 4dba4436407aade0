use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use circnet::catalog::parse_surface;
use circnet::constructions::{
    euclidean_principal, midpoint_radius, moebius_principal, triple_around, DEFAULT_TRIPLE_ANGLES,
};
use circnet::export::{deviations_to_csv, net_to_json, net_to_obj};
use circnet::geom3::Point2;
use circnet::harness::{find_experiment, registry, run_experiment, summary_lines, write_artifacts};
use circnet::nets::{
    build_circular_net, build_conjugate_onsurface, build_conjugate_projection, deviation_report, net_quad_defects,
};
use circnet::GeomError;

#[derive(Parser)]
#[command(name = "circnet", version, about = "Principal directions from circles, discrete conjugate and circular nets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Euclidean,
    Moebius,
}

#[derive(Clone, Copy, ValueEnum)]
enum NetKind {
    Projection,
    Onsurface,
    Circular,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate principal directions at a point from one circle.
    Principal {
        /// Catalog surface, e.g. `torus:R=2,r=1`.
        #[arg(long)]
        surface: String,
        /// Base parameters `u,v` (defaults to the surface's reference point).
        #[arg(long, value_parser = parse_uv, allow_hyphen_values = true)]
        uv: Option<Point2>,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, value_enum, default_value = "moebius")]
        method: Method,
        /// Sphere radius for the Moebius construction (default: 2 / (K1 + K2)).
        #[arg(long)]
        radius: Option<f64>,
        /// Write the estimate as JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a discrete net and write net.obj, net.json and deviations.csv.
    BuildNet {
        #[arg(long, value_enum)]
        kind: NetKind,
        #[arg(long)]
        surface: String,
        #[arg(long, value_parser = parse_uv, allow_hyphen_values = true)]
        uv: Option<Point2>,
        #[arg(long)]
        eps: f64,
        /// Steps per direction.
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run registered convergence experiments.
    Sweep {
        /// Experiment id, or `all`.
        #[arg(long, default_value = "all")]
        experiment: String,
        /// Directory for per-experiment CSV and JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the registry seed.
        #[arg(long)]
        seed: Option<u64>,
        /// List experiment ids and exit.
        #[arg(long)]
        list: bool,
    },
}

fn parse_uv(s: &str) -> Result<Point2, String> {
    let (u, v) = s.split_once(',').ok_or("expected u,v")?;
    let u: f64 = u.trim().parse().map_err(|_| format!("bad u `{u}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad v `{v}`"))?;
    Ok(Point2::new(u, v))
}

enum Failure {
    Geom(GeomError),
    Other(anyhow::Error),
}

impl From<GeomError> for Failure {
    fn from(e: GeomError) -> Self {
        Failure::Geom(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn check_eps(eps: f64) -> Result<(), Failure> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(GeomError::InvalidExperiment(format!("eps must be positive, got {eps}")).into())
    }
}

fn principal(
    surface: &str,
    uv: Option<Point2>,
    eps: f64,
    method: Method,
    radius: Option<f64>,
    out: Option<&Path>,
) -> Result<bool, Failure> {
    check_eps(eps)?;
    let s = parse_surface(surface)?;
    let uv = uv.unwrap_or_else(|| s.default_uv());
    let est = match method {
        Method::Moebius => {
            let r = match radius {
                Some(r) => r,
                None => midpoint_radius(&s, uv)?,
            };
            moebius_principal(&s, uv, r, eps)?
        }
        Method::Euclidean => {
            let [a, b, c] = triple_around(&s, uv, eps, DEFAULT_TRIPLE_ANGLES);
            euclidean_principal(&s, &a, &b, &c)?
        }
    };
    println!("surface   {s}");
    println!("uv        {} {}", est.base_uv.x, est.base_uv.y);
    println!("eps_eff   {:.6e}", est.eps_eff);
    println!("angle_err {:.6e} {:.6e}", est.angle_err_1, est.angle_err_2);
    let json = serde_json::to_string_pretty(&est).context("serializing estimate")?;
    match out {
        Some(p) => fs::write(p, json).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }
    Ok(true)
}

fn build_net(
    kind: NetKind,
    surface: &str,
    uv: Option<Point2>,
    eps: f64,
    n: usize,
    out: &Path,
) -> Result<bool, Failure> {
    check_eps(eps)?;
    let s = parse_surface(surface)?;
    let uv = uv.unwrap_or_else(|| s.default_uv());
    let net = match kind {
        NetKind::Projection => build_conjugate_projection(&s, uv, eps, n)?,
        NetKind::Onsurface => build_conjugate_onsurface(&s, uv, eps, n)?,
        NetKind::Circular => build_circular_net(&s, uv, eps, n)?,
    };
    let report = deviation_report(&net, &s);
    let (_, quads) = net_quad_defects(&net);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("net.obj"), net_to_obj(&net)).context("writing net.obj")?;
    fs::write(out.join("net.json"), net_to_json(&net, &quads).context("serializing net")?)
        .context("writing net.json")?;
    fs::write(out.join("deviations.csv"), deviations_to_csv(&report).context("serializing deviations")?)
        .context("writing deviations.csv")?;
    println!("net             {} on {s}", net.builder);
    println!("vertices        {} x {}", net.nu, net.nv);
    println!("max deviation   {:.6e}", report.overall.max_dist);
    println!("max |du|        {:.6e}", report.overall.max_du);
    println!("max |dv|        {:.6e}", report.overall.max_dv);
    println!("max planarity   {:.6e}", quads.max_planarity_height);
    println!("max circularity {:.6e}", quads.max_circularity);
    if !report.failed.is_empty() {
        println!("unprojected     {}", report.failed.len());
    }
    Ok(true)
}

fn sweep(experiment: &str, out: Option<&Path>, seed: Option<u64>, list: bool) -> Result<bool, Failure> {
    if list {
        for s in registry() {
            println!("{:<22} {}", s.id, s.description);
        }
        return Ok(true);
    }
    let specs = if experiment == "all" { registry() } else { vec![find_experiment(experiment)?] };
    let mut all_pass = true;
    let mut table = Vec::new();
    for mut spec in specs {
        if let Some(seed) = seed {
            spec.seed = seed;
        }
        let r = run_experiment(&spec)?;
        println!("{} {}", r.id, if r.pass { "PASS" } else { "FAIL" });
        for line in summary_lines(&r) {
            println!("{line}");
        }
        if let Some(dir) = out {
            write_artifacts(&r, dir).with_context(|| format!("writing artifacts to {}", dir.display()))?;
        }
        let slope = r.primary().and_then(|s| s.fit).map(|f| format!("{:.3}", f.slope)).unwrap_or_else(|| "-".into());
        table.push((r.id.clone(), slope, r.pass, spec.gating));
        if spec.gating && !r.pass {
            all_pass = false;
        }
    }
    if table.len() > 1 {
        println!();
        println!("{:<22} {:>8}  result", "experiment", "slope");
        for (id, slope, pass, gating) in &table {
            let verdict = match (pass, gating) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "FAIL (non-gating)",
            };
            println!("{id:<22} {slope:>8}  {verdict}");
        }
    }
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Principal { surface, uv, eps, method, radius, out } => {
            principal(surface, *uv, *eps, *method, *radius, out.as_deref())
        }
        Cmd::BuildNet { kind, surface, uv, eps, n, out } => build_net(*kind, surface, *uv, *eps, *n, out),
        Cmd::Sweep { experiment, out, seed, list } => sweep(experiment, out.as_deref(), *seed, *list),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Geom(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

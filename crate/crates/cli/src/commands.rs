use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use trilattice::asymptotics::{family_field, log_growth_coefficient, total_field, FieldMetadata, DEFAULT_R_FLOOR};
use trilattice::compare::{compare as score, default_ray_band, CompareOptions};
use trilattice::critical::{census, characteristic_fan, star_directions, Resonance};
use trilattice::dispersion::{isofrequency_contours, sample_surface, Branch};
use trilattice::field::{read_field_csv, write_field_csv, write_surface_csv};
use trilattice::lattice::{node_position, Displacement2, NodeIndex};
use trilattice::sim::{RunMetadata, SimConfig, Simulator};

use crate::error::{CliError, Result};
use crate::manifest::{OutputDir, RunManifest};

/// Parses `x,y` into a pair of numbers.
fn parse_pair<T: std::str::FromStr>(s: &str) -> std::result::Result<[T; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok([a, b]),
            _ => Err(format!("expected two numbers `x,y`, got `{s}`")),
        },
        _ => Err(format!("expected two comma-separated values, got `{s}`")),
    }
}

fn parse_f64_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    parse_pair(s)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    /// 1 for the upper surface, 2 for the lower.
    #[arg(long)]
    pub branch: u8,
    /// Samples per axis.
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
}

pub fn dispersion(out: &Path, a: &DispersionArgs) -> Result<RunManifest> {
    let branch = Branch::from_index(a.branch)?;
    let grid = sample_surface(branch, a.resolution)?;
    let mut dir = OutputDir::create(out, "dispersion")?;
    dir.param("branch", a.branch);
    dir.param("resolution", a.resolution);
    info!("branch {} maximum frequency {:.6}", a.branch, grid.max());
    dir.write_with(&format!("surface_branch{}.csv", a.branch), |w| write_surface_csv(w, &grid))?;
    dir.finish()
}

#[derive(Debug, Args)]
pub struct ContoursArgs {
    #[arg(long)]
    pub branch: u8,
    /// Radian frequency of the level set.
    #[arg(long)]
    pub omega: f64,
    #[arg(long, default_value_t = 256)]
    pub resolution: usize,
}

pub fn contours(out: &Path, a: &ContoursArgs) -> Result<RunManifest> {
    let branch = Branch::from_index(a.branch)?;
    let c = isofrequency_contours(branch, a.omega, a.resolution)?;
    let mut dir = OutputDir::create(out, "contours")?;
    dir.param("branch", a.branch);
    dir.param("omega", a.omega);
    dir.param("resolution", a.resolution);
    info!("{} polylines, vertex tolerance {:.2e}", c.polylines.len(), c.tolerance);
    dir.write_json(&format!("contours_branch{}.json", a.branch), &c.to_json())?;
    dir.finish()
}

#[derive(Debug, Serialize)]
struct CriticalRow {
    label: String,
    branch: u8,
    omega_star: f64,
    kx: f64,
    ky: f64,
    class: String,
    a: f64,
    b: f64,
    c: f64,
    angles: Vec<f64>,
}

pub fn critical(out: &Path) -> Result<RunManifest> {
    let mut rows = Vec::new();
    for branch in Branch::ALL {
        let cs = census(branch);
        if !cs.unconverged_seeds.is_empty() {
            warn!("branch {}: {} Newton seeds did not converge", branch.index(), cs.unconverged_seeds.len());
        }
        for p in &cs.points {
            let q = p.coeffs;
            let angles = if p.is_saddle() {
                characteristic_fan(q.a, q.b, q.c, false)?.angles
            } else {
                Vec::new()
            };
            rows.push(CriticalRow {
                label: p.label.clone(),
                branch: p.branch,
                omega_star: p.omega_star,
                kx: p.k.kx,
                ky: p.k.ky,
                class: p.klass.to_string(),
                a: q.a,
                b: q.b,
                c: q.c,
                angles,
            });
        }
    }
    for res in Resonance::ALL {
        let n = rows.iter().filter(|r| (r.omega_star - res.omega_star()).abs() < 1e-6).count();
        info!("resonance {} (omega* = {:.6}): {n} points", res.index(), res.omega_star());
    }
    let mut dir = OutputDir::create(out, "critical")?;
    dir.write_json("critical_points.json", &rows)?;
    dir.finish()
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// 1, 2 or 3.
    #[arg(long)]
    pub resonance: u8,
    /// Force components `px,py`.
    #[arg(long = "P", value_parser = parse_f64_pair, allow_hyphen_values = true, default_value = "1,0")]
    pub p: [f64; 2],
    /// Time since the force was switched on.
    #[arg(long)]
    pub t: f64,
    /// Nodes with `|m|, |n| <= extent` are evaluated.
    #[arg(long, default_value_t = 100)]
    pub extent: i64,
    /// Restrict the sum to one saddle family label.
    #[arg(long)]
    pub family: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub resonance: u8,
    pub omega_star: f64,
    pub t: f64,
    #[serde(rename = "P")]
    pub p: [f64; 2],
    pub families: Vec<String>,
    pub extent: i64,
    pub r_floor: f64,
    pub masked_nodes: usize,
}

impl FieldSidecar {
    fn new(meta: FieldMetadata, extent: i64, masked_nodes: usize) -> Self {
        Self {
            resonance: meta.resonance,
            omega_star: meta.omega_star,
            t: meta.t,
            p: meta.p,
            families: meta.families,
            extent,
            r_floor: DEFAULT_R_FLOOR,
            masked_nodes,
        }
    }
}

pub fn field(out: &Path, a: &FieldArgs) -> Result<RunManifest> {
    let res = Resonance::from_index(a.resonance)?;
    let p = Displacement2::real(a.p[0], a.p[1]);
    let f = match &a.family {
        Some(label) => family_field(res, label, p, a.t, a.extent)?,
        None => total_field(res, p, a.t, a.extent)?,
    };
    if f.families.is_empty() {
        warn!(
            "resonance {} has no saddle points: the star is empty and the resonant response stays bounded",
            a.resonance
        );
    }
    let mut dir = OutputDir::create(out, "field")?;
    dir.param("resonance", a.resonance);
    dir.param("P", a.p);
    dir.param("t", a.t);
    dir.param("extent", a.extent);
    if let Some(label) = &a.family {
        dir.param("family", label);
    }
    dir.write_with("field.csv", |w| write_field_csv(w, &f.samples, true))?;
    let sidecar = FieldSidecar::new(f.metadata(), f.extent, f.masked_count());
    dir.write_json("field_meta.json", &sidecar)?;
    dir.finish()
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON file with the simulation configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Time between energy log entries.
    #[arg(long, default_value_t = 10.0)]
    pub energy_interval: f64,
}

/// Frequency regime of a drive, used only for reporting.
fn regime(omega: f64) -> &'static str {
    if Resonance::ALL.iter().any(|r| (r.omega_star() - omega).abs() < 1e-9) {
        "resonant"
    } else if omega.abs() > 6f64.sqrt() {
        "steady"
    } else {
        "propagating"
    }
}

fn snapshot_name(t: f64) -> String {
    format!("snapshot_t{t}.csv")
}

pub fn simulate(out: &Path, a: &SimulateArgs) -> Result<RunManifest> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| CliError::io(&a.config, e))?;
    let cfg: SimConfig = serde_json::from_str(&text).map_err(|e| {
        trilattice::Error::Validation(format!("{}: {e}", a.config.display()))
    })?;
    if !(a.energy_interval > 0.0) {
        return Err(CliError::Usage(format!("energy interval must be positive, got {}", a.energy_interval)));
    }
    let kind = regime(cfg.drive_omega);
    let sim = Simulator::new(cfg.clone())?;
    info!(
        "{} steps on a {}-node grid, drive omega {} ({kind})",
        cfg.steps(),
        (2 * cfg.half_size + 1).pow(2),
        cfg.drive_omega
    );

    let every = ((a.energy_interval / cfg.dt).round() as usize).max(1);
    let mut energies = Vec::new();
    let run = sim.run_observed(every, |s| {
        let e = s.energy();
        energies.push((s.time(), e));
    })?;

    if let (Some(first), Some(last)) = (energies.first(), energies.last()) {
        info!(
            "energy audit: leapfrog energy {:.6e} at t = {} and {:.6e} at t = {}",
            first.1.leapfrog, first.0, last.1.leapfrog, last.0
        );
    }
    let peak = run.trace.iter().map(|(_, u)| u.norm()).fold(0.0, f64::max);
    if kind == "steady" {
        info!("steady: stop-band drive, drive-node amplitude bounded by {peak:.6e}");
    }

    let mut dir = OutputDir::create(out, "simulate")?;
    dir.param("config", &cfg);
    dir.param("energy_interval", a.energy_interval);
    dir.param("regime", kind);
    for snap in &run.snapshots {
        dir.write_with(&snapshot_name(snap.t), |w| write_field_csv(w, &snap.samples, false))?;
    }
    dir.write_with("trace.csv", |w| {
        writeln!(w, "t,re_ux,im_ux,re_uy,im_uy")?;
        for (t, u) in &run.trace {
            writeln!(w, "{},{},{},{},{}", num(*t), num(u.ux.re), num(u.ux.im), num(u.uy.re), num(u.uy.im))?;
        }
        Ok(())
    })?;
    dir.write_with("energy.csv", |w| {
        writeln!(w, "t,kinetic,potential,leapfrog")?;
        for (t, e) in &energies {
            writeln!(w, "{},{},{},{}", num(*t), num(e.kinetic), num(e.potential), num(e.leapfrog))?;
        }
        Ok(())
    })?;
    dir.write_json("run_meta.json", &RunMetadata::from(&cfg))?;
    dir.finish()
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Simulated snapshot CSV.
    #[arg(long)]
    pub sim: PathBuf,
    /// Asymptotic field CSV on the same nodes.
    #[arg(long)]
    pub field: PathBuf,
    /// Field sidecar JSON; supplies the resonance, force and time.
    #[arg(long)]
    pub field_meta: Option<PathBuf>,
    /// Run metadata JSON; supplies the drive node.
    #[arg(long)]
    pub sim_meta: Option<PathBuf>,
    /// Drive-node trace CSV for the logarithmic growth fit.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Inner and outer radius of the ray measurement annulus.
    #[arg(long, value_parser = parse_f64_pair)]
    pub band: Option<[f64; 2]>,
    /// Time window of the growth fit.
    #[arg(long, value_parser = parse_f64_pair, default_value = "100,400")]
    pub fit_window: [f64; 2],
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::json(path, e))
}

fn read_trace(path: &Path) -> Result<Vec<(f64, f64)>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match cols.as_deref() {
            Ok([t, a, b, c, d]) => out.push((*t, (a * a + b * b + c * c + d * d).sqrt())),
            _ => return Err(trilattice::Error::parse(path, format!("line {}: expected five numbers", i + 1)).into()),
        }
    }
    Ok(out)
}

pub fn compare(out: &Path, a: &CompareArgs) -> Result<RunManifest> {
    let sim = read_field_csv(&a.sim)?;
    let field = read_field_csv(&a.field)?;
    let meta: Option<FieldSidecar> = a.field_meta.as_deref().map(read_json).transpose()?;
    let run_meta: Option<RunMetadata> = a.sim_meta.as_deref().map(read_json).transpose()?;

    let mut opts = CompareOptions::default();
    if let Some(m) = &meta {
        let res = Resonance::from_index(m.resonance)?;
        opts.star_angles = star_directions(res);
        opts.ray_band = Some(default_ray_band(m.t));
        if a.trace.is_some() {
            let coeff = log_growth_coefficient(res, Displacement2::real(m.p[0], m.p[1]))?;
            opts.predicted_slope = Some(coeff.norm());
        }
    }
    if let Some(b) = a.band {
        opts.ray_band = Some((b[0], b[1]));
    }
    if let Some(r) = &run_meta {
        opts.centre = Some(node_position(NodeIndex::new(r.drive_node[0], r.drive_node[1])));
    }
    if let Some(path) = &a.trace {
        opts.trace = Some(read_trace(path)?);
        opts.fit_window = Some((a.fit_window[0], a.fit_window[1]));
    }

    let report = score(&sim.samples, &field.samples, &opts)?;
    if let Some(worst) = report.ray_angle_errors_deg.iter().cloned().reduce(f64::max) {
        info!("largest ray angle error {worst:.2} deg");
    }
    let mut dir = OutputDir::create(out, "compare")?;
    dir.param("sim", a.sim.display().to_string());
    dir.param("field", a.field.display().to_string());
    for (key, path) in [("field_meta", &a.field_meta), ("sim_meta", &a.sim_meta), ("trace", &a.trace)] {
        if let Some(p) = path {
            dir.param(key, p.display().to_string());
        }
    }
    if let Some(b) = opts.ray_band {
        dir.param("band", [b.0, b.1]);
    }
    dir.param("fit_window", a.fit_window);
    dir.write_json("compare_report.json", &report)?;
    dir.finish()
}

//! Complex displacement fields sampled on lattice nodes: CSV exchange,
//! interpolation of the magnitude, and angular profiles.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::dispersion::SurfaceGrid;
use crate::error::{Error, Result};
use crate::lattice::{node_position, Displacement2, NodeIndex, Position, HALF_SQRT3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSample {
    pub idx: NodeIndex,
    pub u: Displacement2,
    pub masked: bool,
}

pub const FIELD_HEADER: &str = "m,n,x,y,re_ux,im_ux,re_uy,im_uy,masked";
pub const SNAPSHOT_HEADER: &str = "m,n,x,y,re_ux,im_ux,re_uy,im_uy";
pub const SURFACE_HEADER: &str = "kx,ky,omega";

/// Floats are written with 17 significant digits so that a read-back is exact.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_field_csv<W: Write>(mut w: W, samples: &[NodeSample], with_mask: bool) -> std::io::Result<()> {
    writeln!(w, "{}", if with_mask { FIELD_HEADER } else { SNAPSHOT_HEADER })?;
    for s in samples {
        let p = node_position(s.idx);
        write!(
            w,
            "{},{},{},{},{},{},{},{}",
            s.idx.m,
            s.idx.n,
            num(p.x),
            num(p.y),
            num(s.u.ux.re),
            num(s.u.ux.im),
            num(s.u.uy.re),
            num(s.u.uy.im)
        )?;
        if with_mask {
            write!(w, ",{}", u8::from(s.masked))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_surface_csv<W: Write>(mut w: W, grid: &SurfaceGrid) -> std::io::Result<()> {
    writeln!(w, "{SURFACE_HEADER}")?;
    let n = grid.resolution();
    for j in 0..n {
        for i in 0..n {
            writeln!(w, "{},{},{}", num(grid.kx[i]), num(grid.ky[j]), num(grid.at(i, j)))?;
        }
    }
    Ok(())
}

pub fn save_field_csv(path: &Path, samples: &[NodeSample], with_mask: bool) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_field_csv(&mut w, samples, with_mask).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// A field read back from CSV, with or without the mask column.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub samples: Vec<NodeSample>,
    pub has_mask: bool,
}

pub fn read_field_csv(path: &Path) -> Result<FieldTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::parse(path, "empty file")),
    };
    let has_mask = match header.trim() {
        FIELD_HEADER => true,
        SNAPSHOT_HEADER => false,
        other => return Err(Error::parse(path, format!("unexpected header `{other}`"))),
    };
    let mut samples = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::parse(path, format!("line {}: {what}", lineno + 2));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != if has_mask { 9 } else { 8 } {
            return Err(bad("wrong number of columns"));
        }
        let int = |s: &str| s.trim().parse::<i64>().map_err(|_| bad("bad integer"));
        let float = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("bad number"));
        let idx = NodeIndex::new(int(cols[0])?, int(cols[1])?);
        let u = Displacement2::new(
            Complex64::new(float(cols[4])?, float(cols[5])?),
            Complex64::new(float(cols[6])?, float(cols[7])?),
        );
        let masked = if has_mask {
            match cols[8].trim() {
                "0" => false,
                "1" => true,
                _ => return Err(bad("mask must be 0 or 1")),
            }
        } else {
            false
        };
        samples.push(NodeSample { idx, u, masked });
    }
    Ok(FieldTable { samples, has_mask })
}

/// Barycentric interpolation of `|U|` on the lattice triangles.
#[derive(Debug, Clone)]
pub struct MagnitudeMap {
    values: HashMap<NodeIndex, f64>,
}

impl MagnitudeMap {
    pub fn new(samples: &[NodeSample]) -> Self {
        let values = samples
            .iter()
            .filter(|s| !s.masked)
            .map(|s| (s.idx, s.u.norm()))
            .collect();
        Self { values }
    }

    pub fn get(&self, idx: NodeIndex) -> Option<f64> {
        self.values.get(&idx).copied()
    }

    /// `None` when any vertex of the enclosing triangle is missing.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<f64> {
        let nf = y / HALF_SQRT3;
        let mf = x - 0.5 * nf;
        let (m0, n0) = (mf.floor(), nf.floor());
        let (fm, fn_) = (mf - m0, nf - n0);
        let (m0, n0) = (m0 as i64, n0 as i64);
        let at = |dm: i64, dn: i64| self.get(NodeIndex::new(m0 + dm, n0 + dn));
        if fm + fn_ <= 1.0 {
            Some((1.0 - fm - fn_) * at(0, 0)? + fm * at(1, 0)? + fn_ * at(0, 1)?)
        } else {
            Some((fm + fn_ - 1.0) * at(1, 1)? + (1.0 - fm) * at(0, 1)? + (1.0 - fn_) * at(1, 0)?)
        }
    }

    /// `|U|` on a circle about `centre`, at `n_angles` uniform angles from 0.
    pub fn ray_profile(&self, centre: Position, radius: f64, n_angles: usize) -> Result<Vec<(f64, f64)>> {
        if !(radius > 0.0) || n_angles == 0 {
            return Err(Error::InvalidArgument(format!(
                "ray profile needs a positive radius and at least one angle, got {radius} and {n_angles}"
            )));
        }
        (0..n_angles)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n_angles as f64;
                let (x, y) = (centre.x + radius * a.cos(), centre.y + radius * a.sin());
                self.interpolate(x, y).map(|v| (a, v)).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "radius {radius} leaves the sampled region at angle {a:.4}"
                    ))
                })
            })
            .collect()
    }
}

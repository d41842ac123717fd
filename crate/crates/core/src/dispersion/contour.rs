//! Marching-squares extraction of isofrequency (slowness) contours.

use std::collections::HashMap;

use serde::Serialize;

use super::{branch_omega, sample_surface, Branch, SurfaceGrid, WaveVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IsoContour {
    pub omega: f64,
    pub branch: Branch,
    pub polylines: Vec<Vec<WaveVector>>,
    /// Largest `|ω_branch(k) - omega|` over all vertices.
    pub tolerance: f64,
}

impl IsoContour {
    pub fn vertices(&self) -> impl Iterator<Item = &WaveVector> {
        self.polylines.iter().flatten()
    }

    pub fn is_closed(line: &[WaveVector]) -> bool {
        line.len() > 2 && line.first() == line.last()
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Out<'a> {
            branch: u8,
            omega: f64,
            tolerance: f64,
            polylines: &'a [Vec<[f64; 2]>],
        }
        let lines: Vec<Vec<[f64; 2]>> = self
            .polylines
            .iter()
            .map(|l| l.iter().map(|k| [k.kx, k.ky]).collect())
            .collect();
        serde_json::to_value(Out {
            branch: self.branch.index(),
            omega: self.omega,
            tolerance: self.tolerance,
            polylines: &lines,
        })
        .expect("contour serialises")
    }
}

/// Grid edge crossed by the level set: horizontal edges join `(i,j)`-`(i+1,j)`,
/// vertical edges join `(i,j)`-`(i,j+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

pub fn isofrequency_contours(branch: Branch, omega: f64, resolution: usize) -> Result<IsoContour> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "contour frequency must be positive, got {omega}"
        )));
    }
    let grid = sample_surface(branch, resolution)?;
    let segments = march(&grid, omega);
    let chains = chain(&segments);

    let mut tolerance: f64 = 0.0;
    let mut cache: HashMap<Edge, WaveVector> = HashMap::new();
    let mut polylines = Vec::with_capacity(chains.len());
    for edges in chains {
        let mut line = Vec::with_capacity(edges.len());
        for e in edges {
            let k = *cache
                .entry(e)
                .or_insert_with(|| locate_crossing(&grid, e, omega));
            tolerance = tolerance.max((branch_omega(branch, k) - omega).abs());
            line.push(k);
        }
        polylines.push(line);
    }
    Ok(IsoContour {
        omega,
        branch,
        polylines,
        tolerance,
    })
}

fn march(grid: &SurfaceGrid, level: f64) -> Vec<(Edge, Edge)> {
    let n = grid.resolution();
    let above = |i: usize, j: usize| grid.at(i, j) > level;
    let mut segs = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let corners = [above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1)];
            // bottom, right, top, left
            let edges = [Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j)];
            let crossed = |e: usize| match e {
                0 => corners[0] != corners[1],
                1 => corners[1] != corners[2],
                2 => corners[3] != corners[2],
                _ => corners[0] != corners[3],
            };
            let hits: Vec<usize> = (0..4).filter(|&e| crossed(e)).collect();
            match hits.len() {
                2 => segs.push((edges[hits[0]], edges[hits[1]])),
                4 => {
                    let center = 0.25
                        * (grid.at(i, j) + grid.at(i + 1, j) + grid.at(i + 1, j + 1) + grid.at(i, j + 1));
                    if (center > level) == corners[0] {
                        // corners 0 and 2 connect through the centre: cut off 1 and 3
                        segs.push((edges[0], edges[1]));
                        segs.push((edges[2], edges[3]));
                    } else {
                        segs.push((edges[3], edges[0]));
                        segs.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    segs
}

/// Joins segments sharing an edge into polylines. Open chains start at edges
/// touched by a single segment; closed chains repeat their first edge at the end.
fn chain(segs: &[(Edge, Edge)]) -> Vec<Vec<Edge>> {
    let mut touching: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segs.iter().enumerate() {
        touching.entry(*a).or_default().push(s);
        touching.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();

    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| {
        let mut line = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segs[seg];
            let next = if a == at { b } else { a };
            line.push(next);
            at = next;
            match touching[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        line
    };

    // Deterministic traversal order: by segment index.
    for s in 0..segs.len() {
        if used[s] {
            continue;
        }
        let (a, b) = segs[s];
        if touching[&a].len() == 1 {
            out.push(walk(s, a, &mut used));
        } else if touching[&b].len() == 1 {
            out.push(walk(s, b, &mut used));
        }
    }
    for s in 0..segs.len() {
        if !used[s] {
            out.push(walk(s, segs[s].0, &mut used));
        }
    }
    out
}

/// Linear interpolation on the edge, then regula falsi (Illinois) on the exact
/// surface to put the vertex on the level set.
fn locate_crossing(grid: &SurfaceGrid, e: Edge, level: f64) -> WaveVector {
    let (p0, p1, f0, f1) = match e {
        Edge::H(i, j) => (
            WaveVector::new(grid.kx[i], grid.ky[j]),
            WaveVector::new(grid.kx[i + 1], grid.ky[j]),
            grid.at(i, j),
            grid.at(i + 1, j),
        ),
        Edge::V(i, j) => (
            WaveVector::new(grid.kx[i], grid.ky[j]),
            WaveVector::new(grid.kx[i], grid.ky[j + 1]),
            grid.at(i, j),
            grid.at(i, j + 1),
        ),
    };
    let point = |s: f64| WaveVector::new(p0.kx + s * (p1.kx - p0.kx), p0.ky + s * (p1.ky - p0.ky));
    let f = |s: f64| branch_omega(grid.branch, point(s)) - level;

    let (mut a, mut b) = (0.0, 1.0);
    let (mut fa, mut fb) = (f0 - level, f1 - level);
    if fa == 0.0 {
        return p0;
    }
    if fb == 0.0 {
        return p1;
    }
    let mut side = 0i8;
    let mut s = fa / (fa - fb);
    for _ in 0..100 {
        s = (a * fb - b * fa) / (fb - fa);
        let fs = f(s);
        if fs == 0.0 || (b - a).abs() < 1e-15 {
            break;
        }
        if (fs > 0.0) == (fb > 0.0) {
            b = s;
            fb = fs;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = s;
            fa = fs;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
        if fs.abs() < 1e-14 {
            break;
        }
    }
    point(s)
}

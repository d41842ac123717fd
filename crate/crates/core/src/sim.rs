//! Direct time integration of the forced lattice.
//!
//! Complex displacements advance by velocity Verlet under a point force
//! `P g(t) e^{iωt}` at one node, where `g` is an optional smooth switch-on
//! envelope. The outer ring `|m| = H` or `|n| = H` is clamped.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{MagnitudeMap, NodeSample};
use crate::lattice::{node_position, Displacement2, NodeIndex, HALF_SQRT3, LONGITUDINAL_SPEED, MAX_GROUP_SPEED};

/// Leapfrog stability requires `dt < 2/ω_max` with `ω_max = √6`.
pub const STABILITY_LIMIT: f64 = 0.816_496_580_927_726;
/// Displacements above this abort the run.
pub const INSTABILITY_THRESHOLD: f64 = 1e12;
/// Extra rings kept active beyond the fastest wavefront.
const GATE_MARGIN: f64 = 40.0;
const QUARTER_SQRT3: f64 = 0.5 * HALF_SQRT3;
/// Steps between instability checks.
const CHECK_INTERVAL: usize = 100;

fn default_true() -> bool {
    true
}

fn default_trace_interval() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub half_size: i64,
    pub dt: f64,
    pub t_end: f64,
    pub drive_omega: f64,
    #[serde(rename = "drive_P")]
    pub drive_p: [f64; 2],
    pub drive_node: [i64; 2],
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Width of the error-function switch-on centred at `8 * ramp_width`;
    /// zero switches the force on abruptly.
    #[serde(default)]
    pub ramp_width: f64,
    /// Snapshots cover `|m|, |n| <= snapshot_extent` about the origin; defaults to the whole grid.
    #[serde(default)]
    pub snapshot_extent: Option<i64>,
    /// Time between samples of the amplitude at the drive node.
    #[serde(default = "default_trace_interval")]
    pub trace_interval: f64,
    /// Require the longitudinal front to stay clear of the clamped boundary.
    #[serde(default = "default_true")]
    pub enforce_containment: bool,
}

impl SimConfig {
    pub fn new(half_size: i64, dt: f64, t_end: f64, drive_omega: f64, drive_p: [f64; 2]) -> Self {
        Self {
            half_size,
            dt,
            t_end,
            drive_omega,
            drive_p,
            drive_node: [0, 0],
            snapshot_times: Vec::new(),
            ramp_width: 0.0,
            snapshot_extent: None,
            trace_interval: default_trace_interval(),
            enforce_containment: true,
        }
    }

    pub fn drive_node(&self) -> NodeIndex {
        NodeIndex::new(self.drive_node[0], self.drive_node[1])
    }

    pub fn drive_force(&self) -> Displacement2 {
        Displacement2::real(self.drive_p[0], self.drive_p[1])
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// `LONGITUDINAL_SPEED * t_end + 10`, the radius the clamped ring must exceed.
    pub fn containment_radius(&self) -> f64 {
        LONGITUDINAL_SPEED * self.t_end + 10.0
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.half_size < 2 {
            return fail(format!("half_size must be at least 2, got {}", self.half_size));
        }
        if !(self.dt > 0.0) || self.dt >= STABILITY_LIMIT {
            return fail(format!(
                "dt = {} violates the leapfrog stability bound 0 < dt < 2/sqrt(6) = {STABILITY_LIMIT:.4}",
                self.dt
            ));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return fail(format!("t_end must be finite and non-negative, got {}", self.t_end));
        }
        if !self.drive_omega.is_finite() || !self.drive_p.iter().all(|p| p.is_finite()) {
            return fail("drive frequency and force must be finite".into());
        }
        let node = self.drive_node();
        if node.m.abs() >= self.half_size || node.n.abs() >= self.half_size {
            return fail(format!("drive node {node:?} is not inside the grid"));
        }
        if let Some(&t) = self.snapshot_times.iter().find(|&&t| !(0.0..=self.t_end).contains(&t)) {
            return fail(format!("snapshot time {t} is outside [0, {}]", self.t_end));
        }
        if let Some(e) = self.snapshot_extent {
            if e < 0 || e > self.half_size {
                return fail(format!("snapshot_extent {e} must lie in [0, {}]", self.half_size));
            }
        }
        if !(self.ramp_width >= 0.0) {
            return fail(format!("ramp_width must be non-negative, got {}", self.ramp_width));
        }
        if !(self.trace_interval > 0.0) {
            return fail(format!("trace_interval must be positive, got {}", self.trace_interval));
        }
        if self.enforce_containment {
            let reach = self.half_size as f64 * HALF_SQRT3;
            if reach <= self.containment_radius() {
                return fail(format!(
                    "half_size {} does not contain the wavefront: {reach:.1} <= c1 * t_end + 10 = {:.1}",
                    self.half_size,
                    self.containment_radius()
                ));
            }
        }
        Ok(())
    }

    /// Switch-on envelope `½ erfc(-(t - 8σ)/(√2 σ))`.
    pub fn envelope(&self, t: f64) -> f64 {
        let s = self.ramp_width;
        if s == 0.0 {
            1.0
        } else {
            0.5 * libm::erfc(-(t - 8.0 * s) / (std::f64::consts::SQRT_2 * s))
        }
    }
}

/// Displacements and velocities on the `(2H+1)²` grid, rows indexed by `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub half_size: i64,
    pub ux: Vec<Complex64>,
    pub uy: Vec<Complex64>,
    pub vx: Vec<Complex64>,
    pub vy: Vec<Complex64>,
    pub t: f64,
}

impl SimState {
    pub fn zeros(half_size: i64) -> Self {
        let len = ((2 * half_size + 1) * (2 * half_size + 1)) as usize;
        let z = vec![Complex64::new(0.0, 0.0); len];
        Self {
            half_size,
            ux: z.clone(),
            uy: z.clone(),
            vx: z.clone(),
            vy: z,
            t: 0.0,
        }
    }

    pub fn width(&self) -> usize {
        (2 * self.half_size + 1) as usize
    }

    pub fn contains(&self, idx: NodeIndex) -> bool {
        idx.m.abs() <= self.half_size && idx.n.abs() <= self.half_size
    }

    pub fn is_boundary(&self, idx: NodeIndex) -> bool {
        idx.m.abs() == self.half_size || idx.n.abs() == self.half_size
    }

    pub fn offset(&self, idx: NodeIndex) -> usize {
        let w = self.width() as i64;
        ((idx.n + self.half_size) * w + idx.m + self.half_size) as usize
    }

    pub fn displacement(&self, idx: NodeIndex) -> Displacement2 {
        let o = self.offset(idx);
        Displacement2::new(self.ux[o], self.uy[o])
    }

    pub fn velocity(&self, idx: NodeIndex) -> Displacement2 {
        let o = self.offset(idx);
        Displacement2::new(self.vx[o], self.vy[o])
    }

    pub fn set(&mut self, idx: NodeIndex, u: Displacement2, v: Displacement2) {
        let o = self.offset(idx);
        self.ux[o] = u.ux;
        self.uy[o] = u.uy;
        self.vx[o] = v.ux;
        self.vy[o] = v.uy;
    }

    /// Zeroes the clamped ring.
    pub fn clamp_boundary(&mut self) {
        let h = self.half_size;
        for n in -h..=h {
            for m in -h..=h {
                let idx = NodeIndex::new(m, n);
                if self.is_boundary(idx) {
                    self.set(idx, Displacement2::ZERO, Displacement2::ZERO);
                }
            }
        }
    }
}

/// Inclusive column range per grid row; rows with `lo > hi` are idle.
type Spans = Vec<(usize, usize)>;

/// Elastic acceleration on the given spans. Closed form of the six-bond sum.
fn accelerate(w: usize, ux: &[Complex64], uy: &[Complex64], ax: &mut [Complex64], ay: &mut [Complex64], spans: &[(usize, usize)]) {
    ax.par_chunks_mut(w)
        .zip(ay.par_chunks_mut(w))
        .zip(spans.par_iter())
        .enumerate()
        .for_each(|(row, ((axr, ayr), &(c0, c1)))| {
            if c0 > c1 {
                return;
            }
            let up = (row + 1) * w;
            let mid = row * w;
            let dn = (row - 1) * w;
            for i in c0..=c1 {
                let (cx, cy) = (ux[mid + i], uy[mid + i]);
                let (ex, wx) = (ux[mid + i + 1], ux[mid + i - 1]);
                // N = (m, n+1), NW = (m-1, n+1), S = (m, n-1), SE = (m+1, n-1)
                let (nx, ny) = (ux[up + i], uy[up + i]);
                let (nwx, nwy) = (ux[up + i - 1], uy[up + i - 1]);
                let (sx, sy) = (ux[dn + i], uy[dn + i]);
                let (sex, sey) = (ux[dn + i + 1], uy[dn + i + 1]);
                let ring_x = nx + nwx + sx + sex - cx * 4.0;
                let ring_y = ny + nwy + sy + sey - cy * 4.0;
                let skew_x = nx - nwx + sx - sex;
                let skew_y = ny - nwy + sy - sey;
                axr[i] = ex + wx - cx * 2.0 + ring_x * 0.25 + skew_y * QUARTER_SQRT3;
                ayr[i] = skew_x * QUARTER_SQRT3 + ring_y * 0.75;
            }
        });
}

/// `v += a dt/2` and, when `drift` is set, `u += v dt` on the spans.
fn kick(w: usize, u: &mut [Complex64], v: &mut [Complex64], a: &[Complex64], spans: &[(usize, usize)], dt: f64, drift: bool) {
    let half = 0.5 * dt;
    u.par_chunks_mut(w)
        .zip(v.par_chunks_mut(w))
        .zip(a.par_chunks(w))
        .zip(spans.par_iter())
        .for_each(|(((ur, vr), ar), &(c0, c1))| {
            if c0 > c1 {
                return;
            }
            for i in c0..=c1 {
                vr[i] += ar[i] * half;
                if drift {
                    ur[i] += vr[i] * dt;
                }
            }
        });
}

/// Complex amplitude `U = u e^{-iωt}` on a block of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSnapshot {
    pub t: f64,
    pub omega: f64,
    pub centre: NodeIndex,
    pub extent: i64,
    /// Ordered by `n`, then `m`.
    pub samples: Vec<NodeSample>,
}

impl AmplitudeSnapshot {
    pub fn get(&self, idx: NodeIndex) -> Option<Displacement2> {
        let e = self.extent;
        if idx.m.abs() > e || idx.n.abs() > e {
            return None;
        }
        let w = 2 * e + 1;
        Some(self.samples[((idx.n + e) * w + idx.m + e) as usize].u)
    }

    pub fn magnitude_map(&self) -> MagnitudeMap {
        MagnitudeMap::new(&self.samples)
    }
}

/// `|U|` on a circle of the given radius about the drive node.
pub fn ray_profile(snapshot: &AmplitudeSnapshot, radius: f64, n_angles: usize) -> Result<Vec<(f64, f64)>> {
    let centre = node_position(snapshot.centre);
    let reach = (snapshot.extent as f64 - 1.0) * HALF_SQRT3 - centre.norm();
    if radius >= reach {
        return Err(Error::InvalidArgument(format!(
            "radius {radius} exceeds the snapshot extent (usable radius {reach:.1})"
        )));
    }
    snapshot.magnitude_map().ray_profile(centre, radius, n_angles)
}

/// Energy of the lattice: kinetic, bond, and the leapfrog invariant
/// `kinetic + bond - (dt²/8) Σ|a|²`, which Verlet conserves exactly when unforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub kinetic: f64,
    pub potential: f64,
    pub leapfrog: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub snapshots: Vec<AmplitudeSnapshot>,
    /// `(t, U)` at the drive node.
    pub trace: Vec<(f64, Displacement2)>,
    pub final_state: SimState,
}

pub struct Simulator {
    cfg: SimConfig,
    state: SimState,
    ax: Vec<Complex64>,
    ay: Vec<Complex64>,
    /// Set while all motion started from rest at the drive node, enabling
    /// work to be restricted to a hexagon around it.
    gated: bool,
    step: usize,
}

impl Simulator {
    /// Starts from rest.
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let state = SimState::zeros(cfg.half_size);
        Self::build(cfg, state, true)
    }

    /// Starts from a given state; the clamped ring is zeroed first.
    pub fn with_state(cfg: SimConfig, mut state: SimState) -> Result<Self> {
        cfg.validate()?;
        if state.half_size != cfg.half_size {
            return Err(Error::Validation(format!(
                "state half_size {} does not match config half_size {}",
                state.half_size, cfg.half_size
            )));
        }
        state.clamp_boundary();
        Self::build(cfg, state, false)
    }

    fn build(cfg: SimConfig, state: SimState, gated: bool) -> Result<Self> {
        let len = state.ux.len();
        let mut sim = Self {
            cfg,
            state,
            ax: vec![Complex64::new(0.0, 0.0); len],
            ay: vec![Complex64::new(0.0, 0.0); len],
            gated,
            step: 0,
        };
        let spans = sim.spans();
        sim.compute_acceleration(&spans);
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    /// Hex radius about the drive node outside which the field is still at rest.
    fn active_radius(&self) -> i64 {
        let reach = MAX_GROUP_SPEED / HALF_SQRT3 * (self.state.t + self.cfg.dt) + GATE_MARGIN;
        reach.ceil() as i64
    }

    /// Interior nodes that can be in motion at the current time.
    fn spans(&self) -> Spans {
        let h = self.cfg.half_size;
        let w = self.state.width();
        let interior = |row: usize| {
            if row == 0 || row == w - 1 {
                (1, 0)
            } else {
                (1, w - 2)
            }
        };
        if !self.gated {
            return (0..w).map(interior).collect();
        }
        let r = self.active_radius();
        let c = self.cfg.drive_node();
        // hexagon |dm| <= r, |dn| <= r, |dm + dn| <= r about the drive node
        (0..w)
            .map(|row| {
                let (i0, i1) = interior(row);
                let dn = row as i64 - h - c.n;
                if dn.abs() > r {
                    return (1, 0);
                }
                let lo = (c.m + (-r).max(-r - dn) + h).max(i0 as i64);
                let hi = (c.m + r.min(r - dn) + h).min(i1 as i64);
                if lo > hi {
                    (1, 0)
                } else {
                    (lo as usize, hi as usize)
                }
            })
            .collect()
    }

    fn compute_acceleration(&mut self, spans: &[(usize, usize)]) {
        let w = self.state.width();
        accelerate(w, &self.state.ux, &self.state.uy, &mut self.ax, &mut self.ay, spans);
        let f = self.cfg.drive_force();
        if f.norm_sqr() > 0.0 {
            let phase = Complex64::from_polar(self.cfg.envelope(self.state.t), self.cfg.drive_omega * self.state.t);
            let o = self.state.offset(self.cfg.drive_node());
            self.ax[o] += f.ux * phase;
            self.ay[o] += f.uy * phase;
        }
    }

    /// One velocity-Verlet step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.cfg.dt;
        let w = self.state.width();
        let spans = self.spans();
        let s = &mut self.state;
        kick(w, &mut s.ux, &mut s.vx, &self.ax, &spans, dt, true);
        kick(w, &mut s.uy, &mut s.vy, &self.ay, &spans, dt, true);
        s.t = (self.step + 1) as f64 * dt;
        self.compute_acceleration(&spans);
        let s = &mut self.state;
        kick(w, &mut s.ux, &mut s.vx, &self.ax, &spans, dt, false);
        kick(w, &mut s.uy, &mut s.vy, &self.ay, &spans, dt, false);
        self.step += 1;
        if self.step % CHECK_INTERVAL == 0 {
            self.check_stability()?;
        }
        Ok(())
    }

    fn check_stability(&self) -> Result<()> {
        let worst = self
            .state
            .ux
            .par_iter()
            .chain(self.state.uy.par_iter())
            .map(|u| if u.re.is_finite() && u.im.is_finite() { u.norm() } else { f64::INFINITY })
            .reduce(|| 0.0, f64::max);
        if worst > INSTABILITY_THRESHOLD {
            return Err(Error::Instability {
                t: self.state.t,
                magnitude: worst,
            });
        }
        Ok(())
    }

    /// Amplitude at one node, demodulated by the drive carrier.
    pub fn amplitude(&self, idx: NodeIndex) -> Displacement2 {
        self.state.displacement(idx) * Complex64::from_polar(1.0, -self.cfg.drive_omega * self.state.t)
    }

    pub fn snapshot(&self) -> AmplitudeSnapshot {
        let e = self.cfg.snapshot_extent.unwrap_or(self.cfg.half_size);
        let carrier = Complex64::from_polar(1.0, -self.cfg.drive_omega * self.state.t);
        let mut samples = Vec::with_capacity(((2 * e + 1) * (2 * e + 1)) as usize);
        for n in -e..=e {
            for m in -e..=e {
                let idx = NodeIndex::new(m, n);
                samples.push(NodeSample {
                    idx,
                    u: self.state.displacement(idx) * carrier,
                    masked: false,
                });
            }
        }
        AmplitudeSnapshot {
            t: self.state.t,
            omega: self.cfg.drive_omega,
            centre: self.cfg.drive_node(),
            extent: e,
            samples,
        }
    }

    pub fn energy(&self) -> Energy {
        let s = &self.state;
        let w = s.width();
        let per_row: Vec<(f64, f64, f64)> = (0..w)
            .into_par_iter()
            .map(|row| {
                let (mut kin, mut pot, mut acc) = (0.0, 0.0, 0.0);
                for i in 0..w {
                    let o = row * w + i;
                    kin += s.vx[o].norm_sqr() + s.vy[o].norm_sqr();
                    acc += self.ax[o].norm_sqr() + self.ay[o].norm_sqr();
                    // bonds to E, N and NW, each counted once
                    for (dm, dn, ex, ey) in [(1i64, 0i64, 1.0, 0.0), (0, 1, 0.5, HALF_SQRT3), (-1, 1, -0.5, HALF_SQRT3)] {
                        let (j, r) = (i as i64 + dm, row as i64 + dn);
                        if j < 0 || j >= w as i64 || r >= w as i64 {
                            continue;
                        }
                        let p = (r as usize) * w + j as usize;
                        let q = (s.ux[p] - s.ux[o]) * ex + (s.uy[p] - s.uy[o]) * ey;
                        pot += q.norm_sqr();
                    }
                }
                (kin, pot, acc)
            })
            .collect();
        let (kin, pot, acc) = per_row
            .iter()
            .fold((0.0, 0.0, 0.0), |(a, b, c), (x, y, z)| (a + x, b + y, c + z));
        let (kinetic, potential) = (0.5 * kin, 0.5 * pot);
        Energy {
            kinetic,
            potential,
            leapfrog: kinetic + potential - self.cfg.dt * self.cfg.dt / 8.0 * acc,
        }
    }

    /// Integrates to `t_end`, taking snapshots at the steps nearest the
    /// requested times and sampling the drive-node amplitude.
    pub fn run(self) -> Result<RunOutput> {
        self.run_observed(0, |_| {})
    }

    /// As [`Simulator::run`], also handing the simulator to `observe` every
    /// `every` steps (never when `every` is zero), starting at step zero.
    pub fn run_observed<F: FnMut(&Self)>(mut self, every: usize, mut observe: F) -> Result<RunOutput> {
        let steps = self.cfg.steps();
        let dt = self.cfg.dt;
        let mut pending: Vec<(usize, f64)> = self
            .cfg
            .snapshot_times
            .iter()
            .map(|&t| ((t / dt).round() as usize, t))
            .collect();
        pending.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let trace_every = ((self.cfg.trace_interval / dt).round() as usize).max(1);
        let node = self.cfg.drive_node();
        let mut snapshots = Vec::with_capacity(pending.len());
        let mut trace = Vec::with_capacity(steps / trace_every + 1);
        let mut next = 0;
        loop {
            while next < pending.len() && pending[next].0 == self.step {
                snapshots.push(self.snapshot());
                next += 1;
            }
            if self.step % trace_every == 0 {
                trace.push((self.state.t, self.amplitude(node)));
            }
            if every > 0 && self.step % every == 0 {
                observe(&self);
            }
            if self.step >= steps {
                break;
            }
            self.step()?;
        }
        self.check_stability()?;
        Ok(RunOutput {
            snapshots,
            trace,
            final_state: self.state,
        })
    }
}

/// Runs a configuration from rest.
pub fn run(cfg: &SimConfig) -> Result<RunOutput> {
    Simulator::new(cfg.clone())?.run()
}

/// Run metadata written beside snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub half_size: i64,
    pub dt: f64,
    pub t_end: f64,
    pub drive_omega: f64,
    #[serde(rename = "drive_P")]
    pub drive_p: [f64; 2],
    pub drive_node: [i64; 2],
}

impl From<&SimConfig> for RunMetadata {
    fn from(c: &SimConfig) -> Self {
        Self {
            half_size: c.half_size,
            dt: c.dt,
            t_end: c.t_end,
            drive_omega: c.drive_omega,
            drive_p: c.drive_p,
            drive_node: c.drive_node,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{branch_omega, compliance_numerator, Branch, WaveVector};
    use crate::lattice::{acceleration, bond_forces, gather_neighbors};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn free(h: i64, dt: f64, t_end: f64) -> SimConfig {
        let mut c = SimConfig::new(h, dt, t_end, 0.0, [0.0, 0.0]);
        c.enforce_containment = false;
        c
    }

    fn random_state(h: i64, seed: u64) -> SimState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = SimState::zeros(h);
        for v in [&mut s.ux, &mut s.uy, &mut s.vx, &mut s.vy] {
            for z in v.iter_mut() {
                *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        s
    }

    #[test]
    fn stencil_matches_bond_sum() {
        let h = 5;
        let cfg = free(h, 0.02, 0.0);
        let sim = Simulator::with_state(cfg, random_state(h, 7)).unwrap();
        let s = sim.state();
        for n in -h + 1..h {
            for m in -h + 1..h {
                let idx = NodeIndex::new(m, n);
                let nb = gather_neighbors(idx, |j| s.displacement(j));
                let want = acceleration(&bond_forces(s.displacement(idx), &nb), Displacement2::ZERO);
                let o = s.offset(idx);
                let got = Displacement2::new(sim.ax[o], sim.ay[o]);
                assert!((got - want).norm() < 1e-13, "{idx:?}");
            }
        }
    }

    #[test]
    fn validation() {
        let ok = SimConfig::new(100, 0.02, 50.0, 1.0, [1.0, 0.0]);
        ok.validate().unwrap();
        let mut c = ok.clone();
        c.dt = 0.82;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("stability"), "{msg}");
        let mut c = ok.clone();
        c.t_end = 100.0;
        assert!(c.validate().is_err());
        c.enforce_containment = false;
        c.validate().unwrap();
        let mut c = ok.clone();
        c.drive_node = [100, 0];
        assert!(c.validate().is_err());
        let mut c = ok;
        c.snapshot_times = vec![60.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_uses_verbatim_names() {
        let c = SimConfig::new(64, 0.02, 10.0, 2f64.sqrt(), [1.0, 0.0]);
        let v = serde_json::to_value(&c).unwrap();
        for key in ["half_size", "dt", "t_end", "drive_omega", "drive_P", "drive_node", "snapshot_times"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let minimal = r#"{"half_size": 40, "dt": 0.02, "t_end": 5, "drive_omega": 1.5,
                          "drive_P": [0, 1], "drive_node": [0, 0], "snapshot_times": [5]}"#;
        let c: SimConfig = serde_json::from_str(minimal).unwrap();
        assert!(c.enforce_containment);
        assert_eq!(c.ramp_width, 0.0);
    }

    #[test]
    fn zero_drive_stays_at_rest() {
        let mut c = SimConfig::new(30, 0.05, 5.0, 1.0, [0.0, 0.0]);
        c.enforce_containment = false;
        c.snapshot_times = vec![5.0];
        let out = run(&c).unwrap();
        assert!(out.snapshots[0].samples.iter().all(|s| s.u.norm() == 0.0));
    }

    #[test]
    fn leapfrog_invariant_is_conserved() {
        let h = 12;
        let cfg = free(h, 0.02, 20.0);
        let mut sim = Simulator::with_state(cfg, random_state(h, 3)).unwrap();
        let e0 = sim.energy();
        for _ in 0..1000 {
            sim.step().unwrap();
        }
        let e1 = sim.energy();
        assert!(((e1.leapfrog - e0.leapfrog) / e0.leapfrog).abs() < 1e-10);
        assert!(((e1.total() - e0.total()) / e0.total()).abs() < 1e-2);
    }

    #[test]
    fn bloch_wave_advances_at_its_frequency() {
        let h = 40;
        let dt = 0.02;
        let k = WaveVector::new(0.7, -0.4);
        let w = branch_omega(Branch::Lower, k);
        // Eigenvector of the dynamical matrix for Ω = ω²: a column of B.
        let b = compliance_numerator(w * w, k);
        let e = Displacement2::real(b.bxx, b.bxy);
        let e = e * (1.0 / e.norm());
        let mut s = SimState::zeros(h);
        for n in -h..=h {
            for m in -h..=h {
                let idx = NodeIndex::new(m, n);
                let p = node_position(idx);
                let ph = Complex64::from_polar(1.0, -(k.kx * p.x + k.ky * p.y));
                let u = e * ph;
                s.set(idx, u, u * Complex64::new(0.0, w));
            }
        }
        let mut sim = Simulator::with_state(free(h, dt, 1.0), s).unwrap();
        let before = sim.state().displacement(NodeIndex::ORIGIN);
        let steps = 20;
        for _ in 0..steps {
            sim.step().unwrap();
        }
        let after = sim.state().displacement(NodeIndex::ORIGIN);
        let ratio = after.ux / before.ux;
        let expected = w * dt * steps as f64;
        assert!((ratio.norm() - 1.0).abs() < 1e-3);
        assert!((ratio.arg() - expected).abs() < (w * dt).powi(2) * steps as f64);
        let r2 = after.uy / before.uy;
        assert!((r2 - ratio).norm() < 1e-9);
    }

    #[test]
    fn gating_matches_full_update() {
        let mut c = SimConfig::new(60, 0.05, 20.0, 1.3, [0.4, 1.0]);
        c.enforce_containment = false;
        c.drive_node = [3, -2];
        let gated = Simulator::new(c.clone()).unwrap().run().unwrap();
        let mut full = Simulator::new(c).unwrap();
        full.gated = false;
        let full = full.run().unwrap();
        let diff = gated
            .final_state
            .ux
            .iter()
            .zip(&full.final_state.ux)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14, "{diff}");
    }

    #[test]
    fn linearity_and_mirror_symmetry() {
        let mut c = SimConfig::new(40, 0.05, 15.0, 2f64.sqrt(), [1.0, 0.0]);
        c.enforce_containment = false;
        c.snapshot_times = vec![15.0];
        c.snapshot_extent = Some(20);
        let a = run(&c).unwrap();
        c.drive_p = [2.0, 0.0];
        let b = run(&c).unwrap();
        for (x, y) in a.snapshots[0].samples.iter().zip(&b.snapshots[0].samples) {
            assert!((y.u - x.u * 2.0).norm() <= 1e-15 * x.u.norm().max(1e-300) * 4.0);
        }
        let snap = &a.snapshots[0];
        let mut worst: f64 = 0.0;
        for s in &snap.samples {
            let img = s.idx.mirror_y();
            if let Some(u) = snap.get(img) {
                worst = worst.max((s.u.norm() - u.norm()).abs());
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn ray_profile_rejects_large_radius() {
        let mut c = SimConfig::new(20, 0.05, 1.0, 1.0, [1.0, 0.0]);
        c.enforce_containment = false;
        c.snapshot_times = vec![1.0];
        let out = run(&c).unwrap();
        assert!(ray_profile(&out.snapshots[0], 30.0, 36).is_err());
        assert_eq!(ray_profile(&out.snapshots[0], 5.0, 36).unwrap().len(), 36);
    }
}

//! Stationary points of the dispersion branches and their local quadratic forms.
//!
//! Near a stationary point `k*` of branch `Ω`,
//! `Ω(k* + q) - Ω(k*) ≈ a qx² + b qy² + c qx qy`, so `(a, b, c)` are half the
//! diagonal and the full off-diagonal of the Hessian. Saddles (`c² > 4ab`)
//! carry real characteristic lines `y = φ x` with
//! `φ = c/(2a) ± √((c/(2a))² - b/a)`.

use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{
    branch_omega_sq, f_and_s, linspace, Branch, Trig, WaveVector, KX_HALF, KY_HALF,
};
use crate::error::{Error, Result};
use crate::lattice::SQRT3;
use crate::numeric::{angle_distance, wrap_angle};

/// `S` below this marks a branch-touching point.
pub const DEGENERACY_FLOOR: f64 = 1e-10;
/// Seeds per axis for the Newton sweep.
pub const SEEDS_PER_AXIS: usize = 241;
/// Converged points closer than this on the torus are the same point.
pub const MERGE_DISTANCE: f64 = 1e-4;
/// Hessian eigenvalues smaller than this make a point degenerate.
pub const CLASSIFY_THRESHOLD: f64 = 1e-6;
/// Richardson base step for the quadratic coefficients.
pub const RICHARDSON_STEP: f64 = 1e-3;
/// Largest tolerated disagreement between the two Richardson levels.
pub const RICHARDSON_AGREEMENT: f64 = 1e-6;
/// Required gradient norm of every reported stationary point.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;

/// Analytic gradient of `Ω_branch = F ± √S`.
pub fn gradient_omega(branch: Branch, k: WaveVector) -> Result<(f64, f64)> {
    let t = Trig::at(k);
    let cc = t.c1 * t.c2;
    let g = t.cx - cc;
    let s = g * g + 3.0 * (t.s1 * t.s2).powi(2);
    if s < DEGENERACY_FLOOR {
        return Err(Error::Degenerate { kx: k.kx, ky: k.ky, s });
    }
    let fx = t.sx + t.s1 * t.c2;
    let fy = SQRT3 * t.c1 * t.s2;
    let gx = -t.sx + 0.5 * t.s1 * t.c2;
    let gy = 0.5 * SQRT3 * t.c1 * t.s2;
    let sx = 2.0 * g * gx + 3.0 * t.s1 * t.c1 * t.s2 * t.s2;
    let sy = 2.0 * g * gy + 3.0 * SQRT3 * t.s1 * t.s1 * t.s2 * t.c2;
    let scale = branch.sign() / (2.0 * s.sqrt());
    Ok((fx + scale * sx, fy + scale * sy))
}

/// Jacobian of the analytic gradient by central differences; Newton only.
fn gradient_jacobian(branch: Branch, k: WaveVector) -> Result<[[f64; 2]; 2]> {
    const H: f64 = 1e-6;
    let px = gradient_omega(branch, WaveVector::new(k.kx + H, k.ky))?;
    let mx = gradient_omega(branch, WaveVector::new(k.kx - H, k.ky))?;
    let py = gradient_omega(branch, WaveVector::new(k.kx, k.ky + H))?;
    let my = gradient_omega(branch, WaveVector::new(k.kx, k.ky - H))?;
    let hxx = (px.0 - mx.0) / (2.0 * H);
    let hyy = (py.1 - my.1) / (2.0 * H);
    let hxy = 0.5 * ((py.0 - my.0) + (px.1 - mx.1)) / (2.0 * H);
    Ok([[hxx, hxy], [hxy, hyy]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalClass {
    Maximum,
    Minimum,
    Saddle,
}

impl fmt::Display for CriticalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriticalClass::Maximum => "maximum",
            CriticalClass::Minimum => "minimum",
            CriticalClass::Saddle => "saddle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadCoeffs {
    /// `c² - 4ab`; positive for saddles.
    pub fn discriminant(&self) -> f64 {
        self.c * self.c - 4.0 * self.a * self.b
    }

    pub fn eval(&self, qx: f64, qy: f64) -> f64 {
        self.a * qx * qx + self.b * qy * qy + self.c * qx * qy
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
        }
    }

    pub fn classify(&self) -> Result<CriticalClass> {
        let tr = 2.0 * (self.a + self.b);
        let det = 4.0 * self.a * self.b - self.c * self.c;
        let root = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let (l1, l2) = (0.5 * (tr + root), 0.5 * (tr - root));
        if l1.abs() < CLASSIFY_THRESHOLD || l2.abs() < CLASSIFY_THRESHOLD {
            return Err(Error::Numerical(format!(
                "degenerate stationary point: Hessian eigenvalues {l1:e}, {l2:e}"
            )));
        }
        Ok(if det < 0.0 {
            CriticalClass::Saddle
        } else if tr < 0.0 {
            CriticalClass::Maximum
        } else {
            CriticalClass::Minimum
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub k: WaveVector,
    pub branch: u8,
    pub omega_star: f64,
    pub klass: CriticalClass,
    pub coeffs: QuadCoeffs,
    pub label: String,
}

impl CriticalPoint {
    pub fn branch(&self) -> Branch {
        Branch::from_index(self.branch).expect("stored branch index is valid")
    }

    pub fn is_saddle(&self) -> bool {
        self.klass == CriticalClass::Saddle
    }
}

/// Half-Hessian coefficients by Richardson-extrapolated central differences
/// of the analytic gradient.
pub fn quad_coeffs(branch: Branch, k: WaveVector) -> Result<QuadCoeffs> {
    let g = |dx: f64, dy: f64| gradient_omega(branch, WaveVector::new(k.kx + dx, k.ky + dy));
    let second = |h: f64| -> Result<[f64; 3]> {
        let (px, mx) = (g(h, 0.0)?, g(-h, 0.0)?);
        let (py, my) = (g(0.0, h)?, g(0.0, -h)?);
        let dxx = (px.0 - mx.0) / (2.0 * h);
        let dyy = (py.1 - my.1) / (2.0 * h);
        let dxy = 0.5 * ((py.0 - my.0) + (px.1 - mx.1)) / (2.0 * h);
        Ok([dxx, dyy, dxy])
    };
    let h = RICHARDSON_STEP;
    let (d1, d2, d4) = (second(h)?, second(h / 2.0)?, second(h / 4.0)?);
    let extrapolate = |coarse: [f64; 3], fine: [f64; 3]| -> [f64; 3] {
        [0, 1, 2].map(|i| (4.0 * fine[i] - coarse[i]) / 3.0)
    };
    let level1 = extrapolate(d1, d2);
    let level2 = extrapolate(d2, d4);
    let gap = (0..3).map(|i| (level1[i] - level2[i]).abs()).fold(0.0, f64::max);
    if !(gap <= RICHARDSON_AGREEMENT) {
        return Err(Error::Numerical(format!(
            "Richardson levels disagree by {gap:e} at k = ({}, {})",
            k.kx, k.ky
        )));
    }
    Ok(QuadCoeffs {
        a: 0.5 * level2[0],
        b: 0.5 * level2[1],
        c: level2[2],
    })
}

pub fn classify(cp: &CriticalPoint) -> Result<CriticalClass> {
    quad_coeffs(cp.branch(), cp.k)?.classify()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CharacteristicFan {
    /// Directions of the characteristic rays, sorted, in `(-π, π]`.
    pub angles: Vec<f64>,
    /// Slopes `φ` of the characteristic lines `y = φ x`.
    pub slopes: Vec<f64>,
}

impl CharacteristicFan {
    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

const ANGLE_MERGE: f64 = 1e-8;

fn push_unique(set: &mut Vec<f64>, a: f64) {
    if !set.iter().any(|&b| angle_distance(a, b) < ANGLE_MERGE) {
        set.push(a);
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Rays of the characteristic lines of `a ∂xx + b ∂yy + c ∂xy`. Each line
/// contributes both of its directions. With `include_mirror` the fan of the
/// mirror point (`c -> -c`) is merged in.
pub fn characteristic_fan(a: f64, b: f64, c: f64, include_mirror: bool) -> Result<CharacteristicFan> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "characteristic slopes need a nonzero a, got {a}"
        )));
    }
    let disc = (c / (2.0 * a)).powi(2) - b / a;
    if disc < 0.0 {
        return Ok(CharacteristicFan::default());
    }
    let root = disc.sqrt();
    let mut centers = vec![c / (2.0 * a)];
    if include_mirror && c != 0.0 {
        centers.push(-c / (2.0 * a));
    }
    let mut slopes = Vec::new();
    let mut angles = Vec::new();
    for center in centers {
        for phi in [center + root, center - root] {
            if !slopes.iter().any(|&s: &f64| (s - phi).abs() < ANGLE_MERGE) {
                slopes.push(phi);
            }
            let alpha = phi.atan();
            push_unique(&mut angles, wrap_angle(alpha));
            push_unique(&mut angles, wrap_angle(alpha + std::f64::consts::PI));
        }
    }
    Ok(CharacteristicFan {
        angles: sorted(angles),
        slopes: sorted(slopes),
    })
}

/// The three resonant frequencies of the lattice: the upper-branch maxima
/// `√6`, the upper-branch saddles `9/4`, and the lower-branch saddles `√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Resonance {
    First,
    Second,
    Third,
}

impl Resonance {
    pub const ALL: [Resonance; 3] = [Resonance::First, Resonance::Second, Resonance::Third];

    pub fn index(self) -> u8 {
        match self {
            Resonance::First => 1,
            Resonance::Second => 2,
            Resonance::Third => 3,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Resonance::First),
            2 => Ok(Resonance::Second),
            3 => Ok(Resonance::Third),
            _ => Err(Error::InvalidArgument(format!("resonance must be 1, 2 or 3, got {i}"))),
        }
    }

    pub fn omega_star(self) -> f64 {
        match self {
            Resonance::First => 6f64.sqrt(),
            Resonance::Second => 2.25,
            Resonance::Third => 2f64.sqrt(),
        }
    }

    pub fn branch(self) -> Branch {
        match self {
            Resonance::First | Resonance::Second => Branch::Upper,
            Resonance::Third => Branch::Lower,
        }
    }

    pub fn matching(branch: Branch, omega: f64) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.branch() == branch && (r.omega_star() - omega).abs() < 1e-6)
    }
}

/// Conventional `ij` family labels: `i` indexes the resonant frequency and
/// `j` the coordinate family, identified by its first-quadrant position.
pub const REFERENCE_FAMILIES: [(&str, Resonance, f64, f64); 10] = [
    ("11", Resonance::First, 0.0, KY_HALF),
    ("12", Resonance::First, KX_HALF, 0.0),
    ("13", Resonance::First, std::f64::consts::PI, 1.813_799_364_234_217_8),
    ("21", Resonance::Second, 2.890_937_0, KY_HALF),
    ("22", Resonance::Second, 3.392_248_3, 0.0),
    ("23", Resonance::Second, 1.696_124_2, 2.937_773_2),
    ("24", Resonance::Second, 4.587_061_1, 0.689_825_5),
    ("31", Resonance::Third, 0.0, KY_HALF),
    ("32", Resonance::Third, KX_HALF, 0.0),
    ("33", Resonance::Third, std::f64::consts::PI, 1.813_799_364_234_217_8),
];

const LABEL_MATCH: f64 = 1e-3;

fn reference_label(branch: Branch, omega: f64, k: WaveVector) -> Option<&'static str> {
    let res = Resonance::matching(branch, omega)?;
    REFERENCE_FAMILIES
        .iter()
        .find(|(_, r, x, y)| {
            *r == res && (k.kx.abs() - x).abs() < LABEL_MATCH && (k.ky.abs() - y).abs() < LABEL_MATCH
        })
        .map(|(l, ..)| *l)
}

/// Outcome of the Newton sweep over one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Census {
    pub branch: Branch,
    /// Every stationary point expanded over the closed periodicity rectangle,
    /// sorted by `(ω*, kx, ky)`.
    pub points: Vec<CriticalPoint>,
    /// Seeds whose iterates ran into a branch-touching point.
    pub degenerate_seeds: usize,
    /// Seeds that failed to converge, by starting position.
    pub unconverged_seeds: Vec<WaveVector>,
}

impl Census {
    /// Points grouped by frequency, ascending.
    pub fn groups(&self) -> Vec<(f64, Vec<&CriticalPoint>)> {
        let mut out: Vec<(f64, Vec<&CriticalPoint>)> = Vec::new();
        for p in &self.points {
            match out.iter_mut().find(|(w, _)| (w - p.omega_star).abs() < 1e-7) {
                Some((_, v)) => v.push(p),
                None => out.push((p.omega_star, vec![p])),
            }
        }
        out
    }

    pub fn at_frequency(&self, omega: f64) -> Vec<&CriticalPoint> {
        self.points
            .iter()
            .filter(|p| (p.omega_star - omega).abs() < 1e-6)
            .collect()
    }

    /// One representative per point of the torus (edge duplicates dropped).
    pub fn torus_points(&self) -> Vec<&CriticalPoint> {
        let mut out: Vec<&CriticalPoint> = Vec::new();
        for p in &self.points {
            if !out.iter().any(|q| q.k.periodic_distance(p.k) < MERGE_DISTANCE) {
                out.push(p);
            }
        }
        out
    }
}

enum SeedOutcome {
    Converged(WaveVector, f64),
    Degenerate,
    Unconverged,
}

fn newton(branch: Branch, seed: WaveVector) -> SeedOutcome {
    const MAX_ITER: usize = 60;
    const MAX_STEP: f64 = 0.5;
    let mut k = seed;
    for _ in 0..MAX_ITER {
        let g = match gradient_omega(branch, k) {
            Ok(g) => g,
            Err(_) => return SeedOutcome::Degenerate,
        };
        let gnorm = g.0.hypot(g.1);
        if gnorm < 1e-11 {
            return SeedOutcome::Converged(k.wrapped(), gnorm);
        }
        let h = match gradient_jacobian(branch, k) {
            Ok(h) => h,
            Err(_) => return SeedOutcome::Degenerate,
        };
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-14 {
            return SeedOutcome::Unconverged;
        }
        let mut dx = (h[1][1] * g.0 - h[0][1] * g.1) / det;
        let mut dy = (h[0][0] * g.1 - h[1][0] * g.0) / det;
        let len = dx.hypot(dy);
        if len > MAX_STEP {
            dx *= MAX_STEP / len;
            dy *= MAX_STEP / len;
        }
        k = WaveVector::new(k.kx - dx, k.ky - dy);
        if len < 1e-13 && gnorm < GRADIENT_TOLERANCE {
            return SeedOutcome::Converged(k.wrapped(), gnorm);
        }
    }
    SeedOutcome::Unconverged
}

pub fn find_critical_points(branch: Branch) -> Result<Census> {
    let xs = linspace(-KX_HALF, KX_HALF, SEEDS_PER_AXIS);
    let ys = linspace(-KY_HALF, KY_HALF, SEEDS_PER_AXIS);
    let seeds: Vec<WaveVector> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| WaveVector::new(x, y)))
        .collect();
    let outcomes: Vec<SeedOutcome> = seeds.par_iter().map(|&s| newton(branch, s)).collect();

    let mut degenerate_seeds = 0;
    let mut unconverged_seeds = Vec::new();
    let mut torus: Vec<(WaveVector, f64)> = Vec::new();
    for (seed, outcome) in seeds.iter().zip(outcomes) {
        match outcome {
            SeedOutcome::Degenerate => degenerate_seeds += 1,
            SeedOutcome::Unconverged => unconverged_seeds.push(*seed),
            SeedOutcome::Converged(k, gnorm) => {
                let (_, s) = f_and_s(k);
                if s < DEGENERACY_FLOOR {
                    degenerate_seeds += 1;
                    continue;
                }
                match torus.iter_mut().find(|(q, _)| q.periodic_distance(k) < MERGE_DISTANCE) {
                    Some(entry) if gnorm < entry.1 => *entry = (k, gnorm),
                    Some(_) => {}
                    None => torus.push((k, gnorm)),
                }
            }
        }
    }

    let mut points = Vec::new();
    for (k, _) in torus {
        let coeffs = quad_coeffs(branch, k)?;
        let klass = coeffs.classify()?;
        let omega_star = branch_omega_sq(branch, k).sqrt();
        for image in k.rectangle_images(1e-9) {
            points.push(CriticalPoint {
                k: image,
                branch: branch.index(),
                omega_star,
                klass,
                coeffs,
                label: String::new(),
            });
        }
    }

    // Canonical order: frequency group, then kx, then ky.
    let mut group_of: Vec<f64> = Vec::new();
    for p in &points {
        if !group_of.iter().any(|w| (w - p.omega_star).abs() < 1e-7) {
            group_of.push(p.omega_star);
        }
    }
    group_of.sort_by(f64::total_cmp);
    let group = |w: f64| group_of.iter().position(|g| (g - w).abs() < 1e-7).unwrap_or(0);
    points.sort_by(|p, q| {
        group(p.omega_star)
            .cmp(&group(q.omega_star))
            .then(p.k.kx.total_cmp(&q.k.kx))
            .then(p.k.ky.total_cmp(&q.k.ky))
    });

    let mut auto = 0;
    for p in &mut points {
        p.label = match reference_label(branch, p.omega_star, p.k) {
            Some(l) => l.to_string(),
            None => {
                auto += 1;
                format!("b{}-{auto}", branch.index())
            }
        };
    }

    Ok(Census {
        branch,
        points,
        degenerate_seeds,
        unconverged_seeds,
    })
}

/// Census of one branch, computed once per process.
pub fn census(branch: Branch) -> &'static Census {
    static UPPER: OnceLock<Census> = OnceLock::new();
    static LOWER: OnceLock<Census> = OnceLock::new();
    let cell = match branch {
        Branch::Upper => &UPPER,
        Branch::Lower => &LOWER,
    };
    cell.get_or_init(|| find_critical_points(branch).expect("critical point sweep succeeds"))
}

/// Stationary points at a resonant frequency, one per torus point.
pub fn resonant_points(resonance: Resonance) -> Vec<&'static CriticalPoint> {
    census(resonance.branch())
        .torus_points()
        .into_iter()
        .filter(|p| (p.omega_star - resonance.omega_star()).abs() < 1e-6)
        .collect()
}

/// Union of the characteristic fans of all saddles at a resonance.
pub fn star_directions(resonance: Resonance) -> Vec<f64> {
    let mut angles = Vec::new();
    for p in resonant_points(resonance) {
        if !p.is_saddle() {
            continue;
        }
        let fan = characteristic_fan(p.coeffs.a, p.coeffs.b, p.coeffs.c, true)
            .expect("saddles have a nonzero a");
        for a in fan.angles {
            push_unique(&mut angles, a);
        }
    }
    sorted(angles)
}

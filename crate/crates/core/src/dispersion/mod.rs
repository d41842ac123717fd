//! Closed-form dispersion surfaces of the triangular lattice.
//!
//! With `c1 = cos(kx/2)`, `c2 = cos(√3 ky/2)`, `s1 = sin(kx/2)`, `s2 = sin(√3 ky/2)`:
//!
//! ```text
//! F = 1 - cos kx + 2 (1 - c1 c2)
//! S = (cos kx - c1 c2)^2 + 3 s1^2 s2^2
//! Ω_{1,2} = F ± √S
//! ```
//!
//! Functions of the wave vector are periodic on the rectangle
//! `[-2π, 2π] × [-2π/√3, 2π/√3]`, which covers the reciprocal cell twice.

mod contour;
mod green;

pub use contour::{isofrequency_contours, IsoContour};
pub use green::{nonresonant_green, nonresonant_green_tensor, GreenQuadrature, DEFAULT_QUADRATURE_ORDER};

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{SQRT3, HALF_SQRT3};

/// Half-width of the periodicity rectangle along `kx`.
pub const KX_HALF: f64 = 2.0 * PI;
/// Half-width of the periodicity rectangle along `ky`.
pub const KY_HALF: f64 = 2.0 * PI / SQRT3;
pub const KX_PERIOD: f64 = 2.0 * KX_HALF;
pub const KY_PERIOD: f64 = 2.0 * KY_HALF;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WaveVector {
    pub kx: f64,
    pub ky: f64,
}

impl WaveVector {
    pub const fn new(kx: f64, ky: f64) -> Self {
        Self { kx, ky }
    }

    /// Canonical representative in `[-2π, 2π) × [-2π/√3, 2π/√3)`.
    pub fn wrapped(self) -> Self {
        Self::new(
            wrap_into(self.kx, KX_HALF, KX_PERIOD),
            wrap_into(self.ky, KY_HALF, KY_PERIOD),
        )
    }

    /// Distance on the torus defined by the periodicity rectangle.
    pub fn periodic_distance(self, other: Self) -> f64 {
        let dx = wrap_into(self.kx - other.kx, KX_HALF, KX_PERIOD);
        let dy = wrap_into(self.ky - other.ky, KY_HALF, KY_PERIOD);
        dx.hypot(dy)
    }

    /// All representatives of this torus point inside the closed rectangle.
    /// Interior points have one; edge points two; the corners four.
    pub fn rectangle_images(self, tol: f64) -> Vec<WaveVector> {
        let w = self.wrapped();
        let xs = edge_images(w.kx, KX_HALF, tol);
        let ys = edge_images(w.ky, KY_HALF, tol);
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &kx in &xs {
            for &ky in &ys {
                out.push(WaveVector::new(kx, ky));
            }
        }
        out
    }

    pub fn dot(self, x: f64, y: f64) -> f64 {
        self.kx * x + self.ky * y
    }
}

fn wrap_into(v: f64, half: f64, period: f64) -> f64 {
    let w = (v + half).rem_euclid(period) - half;
    // rem_euclid can round up to exactly `period`.
    if w >= half {
        w - period
    } else {
        w
    }
}

fn edge_images(v: f64, half: f64, tol: f64) -> Vec<f64> {
    if (v + half).abs() < tol || (v - half).abs() < tol {
        vec![-half, half]
    } else if v.abs() < tol {
        vec![0.0]
    } else {
        vec![v]
    }
}

/// Dispersion branch: `Upper` is `F + √S`, `Lower` is `F - √S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    Upper,
    Lower,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::Upper, Branch::Lower];

    pub fn index(self) -> u8 {
        match self {
            Branch::Upper => 1,
            Branch::Lower => 2,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Branch::Upper),
            2 => Ok(Branch::Lower),
            _ => Err(Error::InvalidArgument(format!("branch must be 1 or 2, got {i}"))),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Branch::Upper => Branch::Lower,
            Branch::Lower => Branch::Upper,
        }
    }

    pub(crate) fn sign(self) -> f64 {
        match self {
            Branch::Upper => 1.0,
            Branch::Lower => -1.0,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchFrequencies {
    pub omega1: f64,
    pub omega2: f64,
    /// Squared frequency of the upper branch.
    #[serde(rename = "Omega1")]
    pub big_omega1: f64,
    /// Squared frequency of the lower branch.
    #[serde(rename = "Omega2")]
    pub big_omega2: f64,
}

impl BranchFrequencies {
    pub fn squared(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Upper => self.big_omega1,
            Branch::Lower => self.big_omega2,
        }
    }

    pub fn omega(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Upper => self.omega1,
            Branch::Lower => self.omega2,
        }
    }
}

/// Adjugate of the shifted dynamical matrix, `B = adj(D(k) - Ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplianceNumerator {
    pub bxx: f64,
    pub byy: f64,
    pub bxy: f64,
}

impl ComplianceNumerator {
    pub fn det(&self) -> f64 {
        self.bxx * self.byy - self.bxy * self.bxy
    }

    pub fn apply(&self, p: crate::lattice::Displacement2) -> crate::lattice::Displacement2 {
        crate::lattice::Displacement2::new(
            p.ux * self.bxx + p.uy * self.bxy,
            p.ux * self.bxy + p.uy * self.byy,
        )
    }
}

/// The trigonometric building blocks shared by every closed form here.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Trig {
    pub c1: f64,
    pub s1: f64,
    pub c2: f64,
    pub s2: f64,
    pub cx: f64,
    pub sx: f64,
}

impl Trig {
    pub fn at(k: WaveVector) -> Self {
        let (s1, c1) = (0.5 * k.kx).sin_cos();
        let (s2, c2) = (HALF_SQRT3 * k.ky).sin_cos();
        let (sx, cx) = k.kx.sin_cos();
        Self { c1, s1, c2, s2, cx, sx }
    }
}

pub fn f_and_s(k: WaveVector) -> (f64, f64) {
    let t = Trig::at(k);
    let cc = t.c1 * t.c2;
    let f = 1.0 - t.cx + 2.0 * (1.0 - cc);
    let g = t.cx - cc;
    let ss = t.s1 * t.s2;
    (f, g * g + 3.0 * ss * ss)
}

pub fn branch_omegas(k: WaveVector) -> BranchFrequencies {
    let (f, s) = f_and_s(k);
    let root = s.sqrt();
    let big1 = f + root;
    // F ≥ √S analytically; clamp rounding at the acoustic origin.
    let big2 = (f - root).max(0.0);
    BranchFrequencies {
        omega1: big1.sqrt(),
        omega2: big2.sqrt(),
        big_omega1: big1,
        big_omega2: big2,
    }
}

/// Squared frequency `Ω` of one branch.
pub fn branch_omega_sq(branch: Branch, k: WaveVector) -> f64 {
    let (f, s) = f_and_s(k);
    f + branch.sign() * s.sqrt()
}

pub fn branch_omega(branch: Branch, k: WaveVector) -> f64 {
    branch_omega_sq(branch, k).max(0.0).sqrt()
}

pub fn compliance_numerator(big_omega: f64, k: WaveVector) -> ComplianceNumerator {
    let t = Trig::at(k);
    let cc = t.c1 * t.c2;
    ComplianceNumerator {
        bxx: -big_omega + 3.0 * (1.0 - cc),
        byy: -big_omega + 2.0 * (1.0 - t.cx) + 1.0 - cc,
        bxy: -SQRT3 * t.s1 * t.s2,
    }
}

/// Dynamical matrix `D(k)`: the harmonic equations read `(D - Ω) U = P`.
pub fn dynamical_matrix(k: WaveVector) -> [[f64; 2]; 2] {
    let t = Trig::at(k);
    let cc = t.c1 * t.c2;
    let dxx = 2.0 * (1.0 - t.cx) + 1.0 - cc;
    let dyy = 3.0 * (1.0 - cc);
    let dxy = SQRT3 * t.s1 * t.s2;
    [[dxx, dxy], [dxy, dyy]]
}

/// `Δ = (Ω - Ω1)(Ω - Ω2)`.
pub fn delta(big_omega: f64, k: WaveVector) -> f64 {
    let (f, s) = f_and_s(k);
    let root = s.sqrt();
    (big_omega - (f + root)) * (big_omega - (f - root))
}

/// `ω_branch` sampled on a uniform `resolution × resolution` grid spanning the
/// closed periodicity rectangle. Row-major: one row per `ky`, `kx` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub branch: Branch,
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub omega: Vec<f64>,
}

impl SurfaceGrid {
    pub fn resolution(&self) -> usize {
        self.kx.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.omega[j * self.kx.len() + i]
    }

    pub fn max(&self) -> f64 {
        self.omega.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

pub fn sample_surface(branch: Branch, resolution: usize) -> Result<SurfaceGrid> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "surface resolution must be at least 2, got {resolution}"
        )));
    }
    let kx = linspace(-KX_HALF, KX_HALF, resolution);
    let ky = linspace(-KY_HALF, KY_HALF, resolution);
    let mut omega = Vec::with_capacity(resolution * resolution);
    for &y in &ky {
        for &x in &kx {
            omega.push(branch_omega(branch, WaveVector::new(x, y)));
        }
    }
    Ok(SurfaceGrid { branch, kx, ky, omega })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn f_and_s_examples() {
        let (f, s) = f_and_s(WaveVector::new(0.0, 0.0));
        assert_abs_diff_eq!(f, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-15);
        let (f, s) = f_and_s(WaveVector::new(2.0 * PI, 0.0));
        assert_abs_diff_eq!(f, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s, 4.0, epsilon = 1e-14);
        let (f, s) = f_and_s(WaveVector::new(0.0, KY_HALF));
        assert_abs_diff_eq!(f, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s, 4.0, epsilon = 1e-14);
    }

    #[test]
    fn branch_examples() {
        let b = branch_omegas(WaveVector::new(2.0 * PI, 0.0));
        assert_abs_diff_eq!(b.omega1, 6f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(b.omega2, 2f64.sqrt(), epsilon = 1e-14);
        let b = branch_omegas(WaveVector::new(0.0, 0.0));
        assert_eq!((b.omega1, b.omega2), (0.0, 0.0));
        let b = branch_omegas(WaveVector::new(PI, 1.8137994));
        assert_abs_diff_eq!(b.omega1, 6f64.sqrt(), epsilon = 1e-7);
    }

    #[test]
    fn compliance_examples() {
        let b = compliance_numerator(6.0, WaveVector::new(2.0 * PI, 0.0));
        assert_abs_diff_eq!(b.bxx, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.byy, -4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.bxy, 0.0, epsilon = 1e-14);
        let b = compliance_numerator(2.0, WaveVector::new(2.0 * PI, 0.0));
        assert_abs_diff_eq!(b.bxx, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.byy, 0.0, epsilon = 1e-14);
        let b = compliance_numerator(6.0, WaveVector::new(PI, PI / SQRT3));
        assert_abs_diff_eq!(b.bxx, -3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.byy, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.bxy, -SQRT3, epsilon = 1e-14);
    }

    #[test]
    fn delta_examples() {
        let k = WaveVector::new(1.1, -0.4);
        let b = branch_omegas(k);
        assert_abs_diff_eq!(delta(b.big_omega1, k), 0.0, epsilon = 1e-13);
        assert_eq!(delta(0.0, WaveVector::new(0.0, 0.0)), 0.0);
        let d = delta(5.0625, WaveVector::new(2.8909370, KY_HALF));
        assert!(d.abs() < 1e-6, "{d}");
    }

    #[test]
    fn dynamical_matrix_adjugate() {
        let k = WaveVector::new(0.7, 2.1);
        let d = dynamical_matrix(k);
        let big = 3.3;
        let b = compliance_numerator(big, k);
        assert_abs_diff_eq!(b.bxx, d[1][1] - big, epsilon = 1e-14);
        assert_abs_diff_eq!(b.byy, d[0][0] - big, epsilon = 1e-14);
        assert_abs_diff_eq!(b.bxy, -d[0][1], epsilon = 1e-14);
    }

    #[test]
    fn surface_sampling() {
        assert!(sample_surface(Branch::Upper, 1).is_err());
        let g = sample_surface(Branch::Lower, 9).unwrap();
        let n = g.resolution();
        for (i, j) in [(0, 0), (0, n - 1), (n - 1, 0), (n - 1, n - 1)] {
            assert_abs_diff_eq!(g.at(i, j), 0.0, epsilon = 1e-7);
        }
        let g1 = sample_surface(Branch::Upper, 33).unwrap();
        let g2 = sample_surface(Branch::Lower, 33).unwrap();
        for (a, b) in g1.omega.iter().zip(&g2.omega) {
            assert!(a >= b);
        }
        let coarse = 6f64.sqrt() - sample_surface(Branch::Upper, 32).unwrap().max();
        let fine = 6f64.sqrt() - sample_surface(Branch::Upper, 256).unwrap().max();
        assert!(fine >= 0.0 && fine < coarse && fine < 1e-3, "{coarse} {fine}");
    }

    #[test]
    fn touching_points() {
        // S vanishes at Γ, the rectangle corners, and the six K points.
        let pts = [
            (0.0, 0.0),
            (KX_HALF, KY_HALF),
            (-KX_HALF, KY_HALF),
            (4.0 * PI / 3.0, 0.0),
            (-4.0 * PI / 3.0, 0.0),
            (2.0 * PI / 3.0, KY_HALF),
            (-2.0 * PI / 3.0, -KY_HALF),
        ];
        for (kx, ky) in pts {
            let (_, s) = f_and_s(WaveVector::new(kx, ky));
            assert!(s < 1e-24, "({kx}, {ky}): {s}");
        }
    }

    #[test]
    fn wrapping_and_images() {
        let k = WaveVector::new(2.0 * PI + 0.3, -KY_HALF - 0.1).wrapped();
        assert_abs_diff_eq!(k.kx, -2.0 * PI + 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(k.ky, KY_HALF - 0.1, epsilon = 1e-12);
        assert_eq!(WaveVector::new(2.0 * PI, 0.0).rectangle_images(1e-9).len(), 2);
        assert_eq!(WaveVector::new(PI, 1.0).rectangle_images(1e-9).len(), 1);
        assert_eq!(WaveVector::new(-2.0 * PI, KY_HALF).rectangle_images(1e-9).len(), 4);
        let a = WaveVector::new(-2.0 * PI + 1e-6, 0.0);
        let b = WaveVector::new(2.0 * PI - 1e-6, 0.0);
        assert!(a.periodic_distance(b) < 3e-6);
    }

    fn arb_k() -> impl Strategy<Value = WaveVector> {
        (-3.0 * KX_HALF..3.0 * KX_HALF, -3.0 * KY_HALF..3.0 * KY_HALF)
            .prop_map(|(x, y)| WaveVector::new(x, y))
    }

    proptest! {
        #[test]
        fn periodicity(k in arb_k()) {
            let b = branch_omegas(k);
            for shifted in [
                WaveVector::new(k.kx + KX_PERIOD, k.ky),
                WaveVector::new(k.kx, k.ky + KY_PERIOD),
            ] {
                let c = branch_omegas(shifted);
                prop_assert!((b.omega1 - c.omega1).abs() < 1e-12);
                prop_assert!((b.omega2 - c.omega2).abs() < 1e-12);
            }
        }

        #[test]
        fn reflection_symmetry(k in arb_k()) {
            let b = branch_omegas(k);
            for (sx, sy) in [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                let c = branch_omegas(WaveVector::new(sx * k.kx, sy * k.ky));
                prop_assert!((b.omega1 - c.omega1).abs() < 1e-12);
                prop_assert!((b.omega2 - c.omega2).abs() < 1e-12);
            }
        }

        #[test]
        fn ordering_and_nonnegative_s(k in arb_k()) {
            let (_, s) = f_and_s(k);
            prop_assert!(s >= 0.0);
            let b = branch_omegas(k);
            prop_assert!(b.big_omega1 >= b.big_omega2 && b.big_omega2 >= 0.0);
            prop_assert!((b.omega1 * b.omega1 - b.big_omega1).abs() < 1e-12);
            // Branches coincide only where S vanishes.
            if b.big_omega1 - b.big_omega2 < 1e-9 {
                prop_assert!(s < 1e-17);
            }
        }

        #[test]
        fn adjugate_identity(k in arb_k(), big in -2.0..12.0f64) {
            let b = compliance_numerator(big, k);
            let d = delta(big, k);
            let scale = d.abs().max(1.0);
            prop_assert!((b.det() - d).abs() / scale < 1e-12);
        }
    }
}

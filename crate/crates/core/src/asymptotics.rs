//! Large-time asymptotics of the resonant lattice response.
//!
//! Near a resonant point the Fourier denominator behaves as
//! `Δ ≈ C [s' - i Q(q)/(2ω*)]` with `C = 2iω*(Ω_other - ω*²)` and `Q` the
//! half-Hessian form of `Ω = ω²`. The effective coefficients
//! `(a, b, c)/(2ω*)` therefore drive both the phase `R` and the prefactor.
//! Each saddle contributes
//! `U̇ = √3/(8πC√(c²-4ab) t) e^{iR} B P` and `U = √3/(8πC√(c²-4ab)) E1(-iR) B P`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::critical::{resonant_points, CriticalPoint, QuadCoeffs, Resonance};
use crate::dispersion::{branch_omegas, compliance_numerator, f_and_s, ComplianceNumerator};
use crate::critical::DEGENERACY_FLOOR;
use crate::error::{Error, Result};
use crate::field::NodeSample;
use crate::lattice::{node_position, Displacement2, NodeIndex, SQRT3};
use crate::special::e1_imag;

/// Nodes with `|R|` below this for any contributing saddle are masked.
pub const DEFAULT_R_FLOOR: f64 = 1e-3;

/// `C = 2iω*(Ω_other(k*) - ω*²)`, purely imaginary.
pub fn resonance_constant(cp: &CriticalPoint) -> Result<Complex64> {
    let (_, s) = f_and_s(cp.k);
    if s < DEGENERACY_FLOOR {
        return Err(Error::Degenerate { kx: cp.k.kx, ky: cp.k.ky, s });
    }
    let w = branch_omegas(cp.k);
    let other = w.squared(cp.branch().other());
    let omega = cp.omega_star;
    Ok(Complex64::new(0.0, 2.0 * omega * (other - omega * omega)))
}

/// `R = (b x² + a y² - c x y) / ((c² - 4ab) t)`.
pub fn phase_r(x: f64, y: f64, t: f64, coeffs: &QuadCoeffs) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    let QuadCoeffs { a, b, c } = *coeffs;
    let disc = coeffs.discriminant();
    if disc == 0.0 {
        return Err(Error::InvalidArgument("parabolic point: c² - 4ab = 0".into()));
    }
    Ok((b * x * x + a * y * y - c * x * y) / (disc * t))
}

/// A saddle together with the quantities its asymptotic wave needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantPointData {
    pub cp: CriticalPoint,
    pub bmat: ComplianceNumerator,
    pub c: Complex64,
    /// `(a, b, c) / (2ω*)`: the coefficients of the homogenized operator.
    pub effective: QuadCoeffs,
    /// `√3 / (8π C √(c²-4ab))` with the effective coefficients.
    pub prefactor: Complex64,
}

impl ResonantPointData {
    pub fn new(cp: &CriticalPoint) -> Result<Self> {
        let c = resonance_constant(cp)?;
        let effective = cp.coeffs.scaled(1.0 / (2.0 * cp.omega_star));
        let disc = effective.discriminant();
        if !(disc > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "point {} is not a saddle (c² - 4ab = {disc:e})",
                cp.label
            )));
        }
        let bmat = compliance_numerator(cp.omega_star * cp.omega_star, cp.k);
        let prefactor = SQRT3 / (8.0 * PI * c * disc.sqrt());
        Ok(Self {
            cp: cp.clone(),
            bmat,
            c,
            effective,
            prefactor,
        })
    }

    pub fn phase(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        phase_r(x, y, t, &self.effective)
    }

    /// `K B P`: the vector multiplying the scalar kernel.
    pub fn polarisation(&self, p: Displacement2) -> Displacement2 {
        self.bmat.apply(p) * self.prefactor
    }

    /// Carrier `exp(-i k*·x)` at a lattice node.
    pub fn carrier(&self, idx: NodeIndex) -> Complex64 {
        let pos = node_position(idx);
        Complex64::from_polar(1.0, -(self.cp.k.kx * pos.x + self.cp.k.ky * pos.y))
    }
}

pub fn velocity_amplitude(rp: &ResonantPointData, x: f64, y: f64, t: f64, p: Displacement2) -> Result<Displacement2> {
    let r = rp.phase(x, y, t)?;
    Ok(rp.polarisation(p) * (Complex64::from_polar(1.0, r) / t))
}

/// Displacement amplitude; `None` when `|R| <= r_floor`.
pub fn displacement_amplitude_with_floor(
    rp: &ResonantPointData,
    x: f64,
    y: f64,
    t: f64,
    p: Displacement2,
    r_floor: f64,
) -> Result<Option<Displacement2>> {
    let r = rp.phase(x, y, t)?;
    if r.abs() <= r_floor {
        return Ok(None);
    }
    Ok(Some(rp.polarisation(p) * e1_imag(r)?))
}

pub fn displacement_amplitude(
    rp: &ResonantPointData,
    x: f64,
    y: f64,
    t: f64,
    p: Displacement2,
) -> Result<Option<Displacement2>> {
    displacement_amplitude_with_floor(rp, x, y, t, p, DEFAULT_R_FLOOR)
}

/// Saddles contributing at a resonance, one per point of the torus.
pub fn contributing_saddles(resonance: Resonance) -> Result<Vec<ResonantPointData>> {
    resonant_points(resonance)
        .into_iter()
        .filter(|p| p.is_saddle())
        .map(ResonantPointData::new)
        .collect()
}

/// Coefficient of `ln t` in the displacement at the source node:
/// `Σ K B P` over the contributing saddles.
pub fn log_growth_coefficient(resonance: Resonance, p: Displacement2) -> Result<Displacement2> {
    Ok(contributing_saddles(resonance)?
        .iter()
        .fold(Displacement2::ZERO, |acc, rp| acc + rp.polarisation(p)))
}

/// Superposed asymptotic amplitude on a square block of lattice nodes.
/// Samples hold the complex amplitude multiplying `exp(iω* t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticField {
    pub resonance: Resonance,
    pub omega_star: f64,
    pub t: f64,
    pub p: Displacement2,
    pub extent: i64,
    pub families: Vec<String>,
    /// Ordered by `n`, then `m`.
    pub samples: Vec<NodeSample>,
}

impl AsymptoticField {
    pub fn masked_count(&self) -> usize {
        self.samples.iter().filter(|s| s.masked).count()
    }

    pub fn metadata(&self) -> FieldMetadata {
        FieldMetadata {
            resonance: self.resonance.index(),
            omega_star: self.omega_star,
            t: self.t,
            p: [self.p.ux.re, self.p.uy.re],
            families: self.families.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldMetadata {
    pub resonance: u8,
    pub omega_star: f64,
    pub t: f64,
    #[serde(rename = "P")]
    pub p: [f64; 2],
    pub families: Vec<String>,
}

fn superpose(
    resonance: Resonance,
    saddles: &[ResonantPointData],
    p: Displacement2,
    t: f64,
    extent: i64,
    r_floor: f64,
) -> Result<AsymptoticField> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    if extent < 0 {
        return Err(Error::InvalidArgument(format!("extent must be non-negative, got {extent}")));
    }
    let rows: Result<Vec<Vec<NodeSample>>> = (-extent..=extent)
        .into_par_iter()
        .map(|n| {
            let mut row = Vec::with_capacity((2 * extent + 1) as usize);
            for m in -extent..=extent {
                let idx = NodeIndex::new(m, n);
                let pos = node_position(idx);
                let mut u = Displacement2::ZERO;
                let mut masked = false;
                for rp in saddles {
                    match displacement_amplitude_with_floor(rp, pos.x, pos.y, t, p, r_floor)? {
                        Some(v) => u += v * rp.carrier(idx),
                        None => masked = true,
                    }
                }
                if masked {
                    u = Displacement2::ZERO;
                }
                row.push(NodeSample { idx, u, masked });
            }
            Ok(row)
        })
        .collect();
    let mut families: Vec<String> = saddles.iter().map(|s| s.cp.label.clone()).collect();
    families.sort();
    families.dedup();
    Ok(AsymptoticField {
        resonance,
        omega_star: resonance.omega_star(),
        t,
        p,
        extent,
        families,
        samples: rows?.into_iter().flatten().collect(),
    })
}

/// Sum over every saddle at the resonance. At the first resonance there are
/// no saddles and the field is identically zero.
pub fn total_field(resonance: Resonance, p: Displacement2, t: f64, extent: i64) -> Result<AsymptoticField> {
    total_field_with_floor(resonance, p, t, extent, DEFAULT_R_FLOOR)
}

pub fn total_field_with_floor(
    resonance: Resonance,
    p: Displacement2,
    t: f64,
    extent: i64,
    r_floor: f64,
) -> Result<AsymptoticField> {
    let saddles = contributing_saddles(resonance)?;
    superpose(resonance, &saddles, p, t, extent, r_floor)
}

/// Field of the saddles carrying one family label.
pub fn family_field(resonance: Resonance, label: &str, p: Displacement2, t: f64, extent: i64) -> Result<AsymptoticField> {
    let saddles: Vec<ResonantPointData> = contributing_saddles(resonance)?
        .into_iter()
        .filter(|s| s.cp.label == label)
        .collect();
    if saddles.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no saddle family {label} at resonance {}",
            resonance.index()
        )));
    }
    superpose(resonance, &saddles, p, t, extent, DEFAULT_R_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::census;
    use crate::dispersion::Branch;
    use approx::assert_abs_diff_eq;

    fn point(label: &str) -> &'static CriticalPoint {
        let branch = if label.starts_with('3') { Branch::Lower } else { Branch::Upper };
        census(branch).points.iter().find(|p| p.label == label).unwrap()
    }

    #[test]
    fn resonance_constants() {
        let c = resonance_constant(point("32")).unwrap();
        assert_abs_diff_eq!(c.re, 0.0);
        assert_abs_diff_eq!(c.im, 8.0 * 2f64.sqrt(), epsilon = 1e-9);
        let c = resonance_constant(point("11")).unwrap();
        assert_abs_diff_eq!(c.im, -8.0 * 6f64.sqrt(), epsilon = 1e-9);
        for l in ["21", "22", "23", "24", "33"] {
            assert_eq!(resonance_constant(point(l)).unwrap().re, 0.0);
        }
    }

    #[test]
    fn phase_properties() {
        let q = QuadCoeffs { a: 0.875, b: -0.375, c: 0.0 };
        assert_eq!(phase_r(0.0, 0.0, 3.0, &q).unwrap(), 0.0);
        let phi = (0.375f64 / 0.875).sqrt();
        assert_abs_diff_eq!(phase_r(2.0, 2.0 * phi, 5.0, &q).unwrap(), 0.0, epsilon = 1e-15);
        let r1 = phase_r(1.3, -0.4, 2.0, &q).unwrap();
        let r3 = phase_r(3.9, -1.2, 2.0, &q).unwrap();
        assert_abs_diff_eq!(r3, 9.0 * r1, epsilon = 1e-12);
        assert!(phase_r(1.0, 1.0, 0.0, &q).is_err());
    }

    #[test]
    fn maxima_are_rejected() {
        assert!(ResonantPointData::new(point("11")).is_err());
        assert!(contributing_saddles(Resonance::First).unwrap().is_empty());
    }

    #[test]
    fn velocity_is_the_time_derivative_of_displacement() {
        let rp = ResonantPointData::new(point("33")).unwrap();
        let p = Displacement2::real(1.0, 0.3);
        let t = 400.0;
        let h = 1e-3;
        let mut checked = 0;
        for (x, y) in [(30.0, 5.0), (-12.0, 40.0), (25.0, -25.0), (3.0, 60.0), (-50.0, -8.0)] {
            let r = rp.phase(x, y, t).unwrap().abs();
            if !(0.5..=5.0).contains(&r) {
                continue;
            }
            let up = displacement_amplitude(&rp, x, y, t + h, p).unwrap().unwrap();
            let dn = displacement_amplitude(&rp, x, y, t - h, p).unwrap().unwrap();
            let fd = (up - dn) * (1.0 / (2.0 * h));
            let v = velocity_amplitude(&rp, x, y, t, p).unwrap();
            assert!((fd - v).norm() < 1e-4 * v.norm(), "({x}, {y})");
            checked += 1;
        }
        assert!(checked >= 2);
    }

    #[test]
    fn zero_force_and_null_space() {
        let rp = ResonantPointData::new(point("32")).unwrap();
        let z = displacement_amplitude(&rp, 10.0, 3.0, 100.0, Displacement2::ZERO).unwrap().unwrap();
        assert_eq!(z.norm(), 0.0);
        // B at (2π, 0) is diag(4, 0): vertical forcing is invisible
        let v = velocity_amplitude(&rp, 10.0, 3.0, 100.0, Displacement2::real(0.0, 1.0)).unwrap();
        assert!(v.norm() < 1e-14);
        let v = velocity_amplitude(&rp, 10.0, 3.0, 100.0, Displacement2::real(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v.norm(), 4.0 * rp.prefactor.norm() / 100.0, epsilon = 1e-12);
    }

    #[test]
    fn masking_near_characteristics() {
        let f = total_field(Resonance::Third, Displacement2::real(1.0, 0.0), 200.0, 6).unwrap();
        let origin = f.samples.iter().find(|s| s.idx == NodeIndex::ORIGIN).unwrap();
        assert!(origin.masked);
        assert_eq!(origin.u, Displacement2::ZERO);
        assert_eq!(f.samples.len(), 13 * 13);
    }

    #[test]
    fn first_resonance_field_is_zero() {
        let f = total_field(Resonance::First, Displacement2::real(1.0, 0.0), 50.0, 3).unwrap();
        assert!(f.samples.iter().all(|s| s.u.norm() == 0.0 && !s.masked));
        assert!(f.families.is_empty());
    }
}

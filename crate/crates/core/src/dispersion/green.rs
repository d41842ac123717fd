//! Time-harmonic lattice Green's tensor away from resonance.
//!
//! `U(m,n) = √3/(16π²) ∬ B(Ω,k) P / Δ(Ω,k) · exp(-i k·x(m,n)) dk` over the
//! periodicity rectangle. The integrand is periodic, so the tensor-product
//! trapezoid rule converges spectrally.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{compliance_numerator, delta, WaveVector, KX_HALF, KX_PERIOD, KY_HALF, KY_PERIOD};
use crate::error::{Error, Result};
use crate::lattice::{node_position, Displacement2, NodeIndex, SQRT3};
use crate::numeric::pairwise_sum;

pub const DEFAULT_QUADRATURE_ORDER: usize = 512;

/// `|Δ|` below this anywhere on the grid is treated as resonant.
const DELTA_FLOOR: f64 = 1e-8;

/// Precomputed `B/Δ` samples for one frequency.
#[derive(Debug, Clone)]
pub struct GreenQuadrature {
    omega: f64,
    order: usize,
    kx: Vec<f64>,
    ky: Vec<f64>,
    /// `(Bxx, Bxy, Byy) / Δ`, row-major with `kx` fastest.
    axx: Vec<f64>,
    axy: Vec<f64>,
    ayy: Vec<f64>,
}

impl GreenQuadrature {
    pub fn new(omega: f64, order: usize) -> Result<Self> {
        if order < 4 {
            return Err(Error::InvalidArgument(format!(
                "quadrature order must be at least 4, got {order}"
            )));
        }
        let big = omega * omega;
        let kx: Vec<f64> = (0..order)
            .map(|i| -KX_HALF + KX_PERIOD * i as f64 / order as f64)
            .collect();
        let ky: Vec<f64> = (0..order)
            .map(|j| -KY_HALF + KY_PERIOD * j as f64 / order as f64)
            .collect();

        struct Row {
            samples: Vec<[f64; 3]>,
            lo: f64,
            hi: f64,
            min_abs: f64,
            worst: WaveVector,
        }
        let rows: Vec<Row> = ky
            .par_iter()
            .map(|&y| {
                let mut row = Row {
                    samples: Vec::with_capacity(order),
                    lo: f64::INFINITY,
                    hi: f64::NEG_INFINITY,
                    min_abs: f64::INFINITY,
                    worst: WaveVector::new(kx[0], y),
                };
                for &x in &kx {
                    let k = WaveVector::new(x, y);
                    let d = delta(big, k);
                    if d.abs() < row.min_abs {
                        row.min_abs = d.abs();
                        row.worst = k;
                    }
                    row.lo = row.lo.min(d);
                    row.hi = row.hi.max(d);
                    let b = compliance_numerator(big, k);
                    row.samples.push([b.bxx / d, b.bxy / d, b.byy / d]);
                }
                row
            })
            .collect();

        // Real Δ changes sign across the rectangle whenever ω lies in a band,
        // even if no grid node lands on the zero set.
        let lo = rows.iter().map(|r| r.lo).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.hi).fold(f64::NEG_INFINITY, f64::max);
        let worst = rows
            .iter()
            .min_by(|a, b| a.min_abs.total_cmp(&b.min_abs))
            .expect("order >= 4");
        if lo.signum() != hi.signum() || worst.min_abs < DELTA_FLOOR {
            return Err(Error::Resonance {
                kx: worst.worst.kx,
                ky: worst.worst.ky,
                delta: worst.min_abs,
            });
        }

        let n = order * order;
        let (mut axx, mut axy, mut ayy) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for row in rows {
            for [a, b, c] in row.samples {
                axx.push(a);
                axy.push(b);
                ayy.push(c);
            }
        }
        Ok(Self { omega, order, kx, ky, axx, axy, ayy })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Green's tensor `G` with `U = G P`, as `[[Gxx, Gxy], [Gyx, Gyy]]`.
    pub fn tensor(&self, idx: NodeIndex) -> [[Complex64; 2]; 2] {
        let pos = node_position(idx);
        let ex: Vec<Complex64> = self.kx.iter().map(|&k| Complex64::from_polar(1.0, -k * pos.x)).collect();
        let n = self.order;
        let rows: Vec<[Complex64; 3]> = self
            .ky
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let phase_y = Complex64::from_polar(1.0, -k * pos.y);
                let base = j * n;
                let mut sxx = Vec::with_capacity(n);
                let mut sxy = Vec::with_capacity(n);
                let mut syy = Vec::with_capacity(n);
                for i in 0..n {
                    sxx.push(ex[i] * self.axx[base + i]);
                    sxy.push(ex[i] * self.axy[base + i]);
                    syy.push(ex[i] * self.ayy[base + i]);
                }
                [
                    pairwise_sum(&sxx) * phase_y,
                    pairwise_sum(&sxy) * phase_y,
                    pairwise_sum(&syy) * phase_y,
                ]
            })
            .collect();
        let col = |c: usize| pairwise_sum(&rows.iter().map(|r| r[c]).collect::<Vec<_>>());
        let weight = SQRT3 / (16.0 * PI * PI) * (KX_PERIOD / n as f64) * (KY_PERIOD / n as f64);
        let (gxx, gxy, gyy) = (col(0) * weight, col(1) * weight, col(2) * weight);
        [[gxx, gxy], [gxy, gyy]]
    }

    pub fn response(&self, p: Displacement2, idx: NodeIndex) -> Displacement2 {
        let g = self.tensor(idx);
        Displacement2::new(g[0][0] * p.ux + g[0][1] * p.uy, g[1][0] * p.ux + g[1][1] * p.uy)
    }
}

pub fn nonresonant_green_tensor(omega: f64, idx: NodeIndex, quadrature_order: usize) -> Result<[[Complex64; 2]; 2]> {
    Ok(GreenQuadrature::new(omega, quadrature_order)?.tensor(idx))
}

pub fn nonresonant_green(
    omega: f64,
    p: Displacement2,
    idx: NodeIndex,
    quadrature_order: usize,
) -> Result<Displacement2> {
    Ok(GreenQuadrature::new(omega, quadrature_order)?.response(p, idx))
}

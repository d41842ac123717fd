//! Cosine and sine integrals and the exponential integral on the imaginary axis.
//!
//! Power series below `x = 4`; above it the continued fraction for `E1(ix)`
//! evaluated with the modified Lentz method.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_LIMIT: f64 = 4.0;
const EPS: f64 = 1e-16;

/// `(Ci(x), Si(x))` for `x > 0`.
pub fn cos_sin_integrals(x: f64) -> (f64, f64) {
    debug_assert!(x > 0.0);
    if x <= SERIES_LIMIT {
        series(x)
    } else {
        let e1 = e1_imaginary_cf(x);
        (-e1.re, FRAC_PI_2 + e1.im)
    }
}

pub fn sine_integral(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    x.signum() * cos_sin_integrals(x.abs()).1
}

pub fn cosine_integral(x: f64) -> f64 {
    cos_sin_integrals(x.abs()).0
}

fn series(x: f64) -> (f64, f64) {
    let x2 = x * x;

    // Si: Σ (-1)^k x^{2k+1} / ((2k+1)(2k+1)!)
    let mut t = x;
    let mut si = x;
    for k in 0.. {
        let kk = k as f64;
        t *= -x2 / ((2.0 * kk + 2.0) * (2.0 * kk + 3.0));
        let term = t / (2.0 * kk + 3.0);
        si += term;
        if term.abs() < EPS * si.abs() {
            break;
        }
    }

    // Ci: γ + ln x + Σ_{k≥1} (-1)^k x^{2k} / (2k (2k)!)
    let mut u = 1.0;
    let mut acc = 0.0;
    for k in 1.. {
        let kk = k as f64;
        u *= -x2 / ((2.0 * kk - 1.0) * (2.0 * kk));
        let term = u / (2.0 * kk);
        acc += term;
        if term.abs() < EPS * acc.abs().max(1.0) {
            break;
        }
    }
    (EULER_GAMMA + x.ln() + acc, si)
}

/// `E1(ix)` for `x > 0` from `E1(z) = e^{-z} / (z + 1 - 1²/(z + 3 - 2²/(z + 5 - ...)))`.
fn e1_imaginary_cf(x: f64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..10_000 {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < EPS {
            break;
        }
    }
    h * Complex64::new(x.cos(), -x.sin())
}

/// `E1(-iR) = -Ci(|R|) - i [Si(R) - (π/2) sign R]`, the displacement kernel.
pub fn e1_imag(r: f64) -> Result<Complex64> {
    if r == 0.0 || !r.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "E1(-iR) is singular or undefined at R = {r}"
        )));
    }
    let (ci, si) = cos_sin_integrals(r.abs());
    let si = r.signum() * si;
    Ok(Complex64::new(-ci, -(si - FRAC_PI_2 * r.signum())))
}

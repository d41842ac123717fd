//! Scoring a simulated amplitude snapshot against the asymptotic field.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{MagnitudeMap, NodeSample};
use crate::lattice::{NodeIndex, Position};
use crate::numeric::{angle_distance, linear_fit, pearson, LinearFit};

/// Angular resolution of measured profiles.
pub const PROFILE_ANGLES: usize = 1440;
/// Circles sampled across an annulus.
pub const ANNULUS_RADII: usize = 31;
/// Largest reported ray error, in degrees.
pub const PEAK_WINDOW_DEG: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub ray_angle_errors_deg: Vec<f64>,
    pub log_growth_slope_ratio: Option<f64>,
    pub masked_fraction: f64,
    pub magnitude_correlation: f64,
}

/// Checks that two sample lists cover the same nodes in the same order.
pub fn check_same_grid(a: &[NodeSample], b: &[NodeSample]) -> Result<()> {
    if a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.idx == y.idx) {
        return Ok(());
    }
    let other: HashSet<NodeIndex> = b.iter().map(|s| s.idx).collect();
    let overlap = a.iter().filter(|s| other.contains(&s.idx)).count();
    let kind = if overlap == 0 { "disjoint" } else { "different" };
    Err(Error::GridMismatch(format!(
        "{kind} node ranges: {} versus {} nodes, {overlap} shared",
        a.len(),
        b.len()
    )))
}

/// Pearson correlation of `|U|` over nodes unmasked in both fields.
pub fn magnitude_correlation(a: &[NodeSample], b: &[NodeSample]) -> Result<f64> {
    check_same_grid(a, b)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .iter()
        .zip(b)
        .filter(|(x, y)| !x.masked && !y.masked)
        .map(|(x, y)| (x.u.norm(), y.u.norm()))
        .unzip();
    pearson(&xs, &ys).ok_or_else(|| Error::Numerical("too few unmasked nodes to correlate".into()))
}

/// Local maxima of a circular profile that rise above its mean.
pub fn prominent_maxima(profile: &[(f64, f64)]) -> Vec<f64> {
    let n = profile.len();
    if n < 3 {
        return Vec::new();
    }
    let mean = profile.iter().map(|p| p.1).sum::<f64>() / n as f64;
    (0..n)
        .filter(|&i| {
            let (prev, here, next) = (profile[(i + n - 1) % n].1, profile[i].1, profile[(i + 1) % n].1);
            here > mean && here >= prev && here > next
        })
        .map(|i| profile[i].0)
        .collect()
}

/// Angular profile of `|U|` averaged over circles spanning `[inner, outer]`,
/// each normalised by its own mean so that every radius carries equal weight.
pub fn annulus_profile(map: &MagnitudeMap, centre: Position, inner: f64, outer: f64) -> Result<Vec<(f64, f64)>> {
    if !(inner > 0.0 && outer >= inner) {
        return Err(Error::InvalidArgument(format!("bad annulus [{inner}, {outer}]")));
    }
    let mut acc = vec![0.0; PROFILE_ANGLES];
    let mut angles = Vec::new();
    for i in 0..ANNULUS_RADII {
        let r = inner + (outer - inner) * i as f64 / (ANNULUS_RADII - 1) as f64;
        let prof = map.ray_profile(centre, r, PROFILE_ANGLES)?;
        let mean = prof.iter().map(|p| p.1).sum::<f64>() / PROFILE_ANGLES as f64;
        if mean > 0.0 {
            for (slot, (_, v)) in acc.iter_mut().zip(&prof) {
                *slot += v / mean;
            }
        }
        angles = prof.into_iter().map(|(a, _)| a).collect();
    }
    Ok(angles.into_iter().zip(acc).collect())
}

/// Angular distances, in degrees, from each expected ray to the nearest
/// prominent local maximum of the annulus profile. Rays with no maximum
/// within the search window report the window width.
pub fn ray_angle_errors_deg(
    map: &MagnitudeMap,
    centre: Position,
    band: (f64, f64),
    expected: &[f64],
) -> Result<Vec<f64>> {
    let peaks = prominent_maxima(&annulus_profile(map, centre, band.0, band.1)?);
    Ok(expected
        .iter()
        .map(|&target| {
            peaks
                .iter()
                .map(|&a| angle_distance(a, target).to_degrees())
                .fold(PEAK_WINDOW_DEG, f64::min)
        })
        .collect())
}

/// Measurement annulus for a snapshot at time `t`: far enough out for the
/// rays to separate, well inside the region the star has swept.
pub fn default_ray_band(t: f64) -> (f64, f64) {
    (t / 16.0, t / 8.0)
}

/// Least-squares fit of `|U|` against `ln t` over `t ∈ [t0, t1]`.
pub fn log_growth_fit(trace: &[(f64, f64)], t0: f64, t1: f64) -> Option<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = trace
        .iter()
        .filter(|(t, _)| *t >= t0 && *t <= t1 && *t > 0.0)
        .map(|(t, u)| (t.ln(), *u))
        .unzip();
    linear_fit(&xs, &ys)
}

/// Inputs beyond the two fields that a full comparison can use.
#[derive(Debug, Clone, Default)]
pub struct CompareOptions {
    /// Expected ray directions; empty skips the angle measurement.
    pub star_angles: Vec<f64>,
    pub centre: Option<Position>,
    /// Inner and outer radius of the measurement annulus.
    pub ray_band: Option<(f64, f64)>,
    /// `(t, |U|)` at the drive node and the predicted `ln t` coefficient.
    pub trace: Option<Vec<(f64, f64)>>,
    pub predicted_slope: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
}

pub fn compare(sim: &[NodeSample], field: &[NodeSample], opts: &CompareOptions) -> Result<CompareReport> {
    check_same_grid(sim, field)?;
    let magnitude_correlation = magnitude_correlation(sim, field)?;
    let masked_fraction = if field.is_empty() {
        0.0
    } else {
        field.iter().filter(|s| s.masked).count() as f64 / field.len() as f64
    };

    let ray_angle_errors_deg = if opts.star_angles.is_empty() {
        Vec::new()
    } else {
        let centre = opts.centre.unwrap_or(Position { x: 0.0, y: 0.0 });
        let band = match opts.ray_band {
            Some(b) => b,
            None => {
                let extent = sim
                    .iter()
                    .map(|s| s.idx.m.abs().max(s.idx.n.abs()))
                    .max()
                    .unwrap_or(0);
                let r = extent as f64 * crate::lattice::HALF_SQRT3;
                (0.25 * r, 0.5 * r)
            }
        };
        ray_angle_errors_deg(&MagnitudeMap::new(sim), centre, band, &opts.star_angles)?
    };

    let log_growth_slope_ratio = match (&opts.trace, opts.predicted_slope) {
        (Some(trace), Some(pred)) if pred != 0.0 => {
            let (t0, t1) = opts.fit_window.unwrap_or((100.0, 400.0));
            log_growth_fit(trace, t0, t1).map(|f| f.slope / pred)
        }
        _ => None,
    };

    Ok(CompareReport {
        ray_angle_errors_deg,
        log_growth_slope_ratio,
        masked_fraction,
        magnitude_correlation,
    })
}

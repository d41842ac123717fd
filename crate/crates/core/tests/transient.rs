use trilattice::lattice::{Displacement2, Position};
use trilattice::sim::{run, AmplitudeSnapshot, SimConfig};

fn low_frequency_snapshot(p: [f64; 2]) -> AmplitudeSnapshot {
    let mut cfg = SimConfig::new(160, 0.05, 160.0, 0.1, p);
    cfg.ramp_width = 10.0;
    cfg.enforce_containment = false;
    cfg.snapshot_times = vec![160.0];
    cfg.snapshot_extent = Some(40);
    cfg.trace_interval = 10.0;
    run(&cfg).unwrap().snapshots.remove(0)
}

/// Long waves see a homogeneous isotropic medium. A single point force is
/// not isotropic, but the summed intensity of two orthogonal unit forces is
/// rotation invariant.
#[test]
fn long_wave_response_is_isotropic() {
    let sx = low_frequency_snapshot([1.0, 0.0]);
    let sy = low_frequency_snapshot([0.0, 1.0]);
    let combined: Vec<_> = sx
        .samples
        .iter()
        .zip(&sy.samples)
        .map(|(a, b)| {
            let mut s = *a;
            s.u = Displacement2::real((a.u.norm_sqr() + b.u.norm_sqr()).sqrt(), 0.0);
            s
        })
        .collect();
    let map = trilattice::field::MagnitudeMap::new(&combined);
    for radius in [10.0, 20.0] {
        let prof = map.ray_profile(Position { x: 0.0, y: 0.0 }, radius, 360).unwrap();
        let mean = prof.iter().map(|p| p.1).sum::<f64>() / prof.len() as f64;
        let spread = prof.iter().map(|p| (p.1 - mean).abs()).fold(0.0, f64::max) / mean;
        assert!(spread < 0.1, "radius {radius}: spread {spread}");
    }
}

//! Triangular lattice geometry and the discrete equations of motion.
//!
//! Natural units throughout: unit mass, unit bond length, unit bond stiffness.
//! Node `(m, n)` sits at `x = m + n/2`, `y = (√3/2) n`.
//!
//! Neighbours are always listed in the order
//! `(m+1,n), (m,n+1), (m-1,n+1), (m-1,n), (m,n-1), (m+1,n-1)`,
//! which is the order of the bond force projections `Q0..Q5`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;
pub const HALF_SQRT3: f64 = 0.5 * SQRT3;

/// Long-wave longitudinal speed, `√(9/8)`.
pub const LONGITUDINAL_SPEED: f64 = 1.060_660_171_779_821_2;
/// Long-wave shear speed, `√(3/8)`.
pub const SHEAR_SPEED: f64 = 0.612_372_435_695_794_5;
/// Largest group velocity over both dispersion branches. It is attained at the
/// conical touching points of the branches and exceeds the long-wave speed.
pub const MAX_GROUP_SPEED: f64 = 1.5;

/// `(dm, dn)` offsets of the six neighbours, in `Q0..Q5` order.
pub const NEIGHBOR_OFFSETS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// Unit bond vectors pointing from a node to each neighbour, in `Q0..Q5` order.
pub const BOND_DIRECTIONS: [(f64, f64); 6] = [
    (1.0, 0.0),
    (0.5, HALF_SQRT3),
    (-0.5, HALF_SQRT3),
    (-1.0, 0.0),
    (-0.5, -HALF_SQRT3),
    (0.5, -HALF_SQRT3),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeIndex {
    pub m: i64,
    pub n: i64,
}

impl NodeIndex {
    pub const ORIGIN: NodeIndex = NodeIndex { m: 0, n: 0 };

    pub const fn new(m: i64, n: i64) -> Self {
        Self { m, n }
    }

    /// Hexagonal (graph) distance from the origin: the number of bonds on the
    /// shortest lattice path.
    pub fn hex_distance(self) -> i64 {
        let (m, n) = (self.m, self.n);
        m.abs().max(n.abs()).max((m + n).abs())
    }

    /// Image under the reflection `y -> -y`.
    pub fn mirror_y(self) -> Self {
        Self::new(self.m + self.n, -self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

pub fn node_position(idx: NodeIndex) -> Position {
    Position {
        x: idx.m as f64 + 0.5 * idx.n as f64,
        y: HALF_SQRT3 * idx.n as f64,
    }
}

/// Complex displacement (or force, or velocity) amplitude of one mass.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Displacement2 {
    pub ux: Complex64,
    pub uy: Complex64,
}

impl Displacement2 {
    pub const ZERO: Displacement2 = Displacement2 {
        ux: Complex64::new(0.0, 0.0),
        uy: Complex64::new(0.0, 0.0),
    };

    pub fn new(ux: Complex64, uy: Complex64) -> Self {
        Self { ux, uy }
    }

    pub fn real(ux: f64, uy: f64) -> Self {
        Self::new(Complex64::new(ux, 0.0), Complex64::new(uy, 0.0))
    }

    pub fn norm_sqr(self) -> f64 {
        self.ux.norm_sqr() + self.uy.norm_sqr()
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Projection onto a real direction.
    pub fn dot_dir(self, (ex, ey): (f64, f64)) -> Complex64 {
        self.ux * ex + self.uy * ey
    }

    pub fn is_finite(self) -> bool {
        self.ux.is_finite() && self.uy.is_finite()
    }
}

impl Add for Displacement2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.ux + rhs.ux, self.uy + rhs.uy)
    }
}

impl AddAssign for Displacement2 {
    fn add_assign(&mut self, rhs: Self) {
        self.ux += rhs.ux;
        self.uy += rhs.uy;
    }
}

impl Sub for Displacement2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.ux - rhs.ux, self.uy - rhs.uy)
    }
}

impl Neg for Displacement2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.ux, -self.uy)
    }
}

impl Mul<f64> for Displacement2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.ux * rhs, self.uy * rhs)
    }
}

impl Mul<Complex64> for Displacement2 {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        Self::new(self.ux * rhs, self.uy * rhs)
    }
}

/// Axial force projections `Q0..Q5` exerted on a mass by its six bonds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BondForces(pub [Complex64; 6]);

impl Mul<Complex64> for BondForces {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        BondForces(self.0.map(|q| q * rhs))
    }
}

/// `Q_j = (u_j - u) · e_j`, with neighbours in `Q0..Q5` order.
pub fn bond_forces(center: Displacement2, neighbors: &[Displacement2; 6]) -> BondForces {
    let mut q = [Complex64::new(0.0, 0.0); 6];
    for (j, (nb, dir)) in neighbors.iter().zip(BOND_DIRECTIONS).enumerate() {
        q[j] = (*nb - center).dot_dir(dir);
    }
    BondForces(q)
}

/// Acceleration of a unit mass under its bond forces and an external force.
pub fn acceleration(forces: &BondForces, external: Displacement2) -> Displacement2 {
    let [q0, q1, q2, q3, q4, q5] = forces.0;
    Displacement2::new(
        q0 - q3 + (q1 - q2 - q4 + q5) * 0.5 + external.ux,
        (q1 + q2 - q4 - q5) * HALF_SQRT3 + external.uy,
    )
}

/// Neighbour values of node `idx` pulled from an arbitrary displacement field.
pub fn gather_neighbors<F>(idx: NodeIndex, field: F) -> [Displacement2; 6]
where
    F: Fn(NodeIndex) -> Displacement2,
{
    NEIGHBOR_OFFSETS.map(|(dm, dn)| field(NodeIndex::new(idx.m + dm, idx.n + dn)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn positions() {
        let p = node_position(NodeIndex::new(0, 0));
        assert_eq!((p.x, p.y), (0.0, 0.0));
        let p = node_position(NodeIndex::new(1, 0));
        assert_eq!((p.x, p.y), (1.0, 0.0));
        let p = node_position(NodeIndex::new(0, 1));
        assert_abs_diff_eq!(p.x, 0.5);
        assert_abs_diff_eq!(p.y, 3f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn neighbor_offsets_match_bond_directions() {
        for ((dm, dn), (ex, ey)) in NEIGHBOR_OFFSETS.iter().zip(BOND_DIRECTIONS) {
            let p = node_position(NodeIndex::new(*dm, *dn));
            assert_abs_diff_eq!(p.x, ex, epsilon = 1e-15);
            assert_abs_diff_eq!(p.y, ey, epsilon = 1e-15);
            assert_abs_diff_eq!(p.norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn speeds() {
        assert_abs_diff_eq!(LONGITUDINAL_SPEED, (9.0f64 / 8.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(SHEAR_SPEED, (3.0f64 / 8.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(SQRT3, 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn single_stretched_bond() {
        let center = Displacement2::ZERO;
        let mut nb = [Displacement2::ZERO; 6];
        nb[0] = Displacement2::real(1.0, 0.0);
        let q = bond_forces(center, &nb).0;
        assert_eq!(q[0], c(1.0, 0.0));
        for qj in &q[1..] {
            assert_eq!(*qj, c(0.0, 0.0));
        }

        let mut nb = [Displacement2::ZERO; 6];
        nb[1] = Displacement2::real(0.0, 1.0);
        let q = bond_forces(center, &nb).0;
        assert_abs_diff_eq!(q[1].re, 3f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn explicit_bond_formulas() {
        // Q2, Q4, Q5 written out component by component.
        let center = Displacement2::new(c(0.3, -0.1), c(-0.7, 0.2));
        let nb = [
            Displacement2::new(c(1.0, 0.5), c(0.2, 0.0)),
            Displacement2::new(c(-0.4, 0.1), c(0.9, -0.3)),
            Displacement2::new(c(0.6, 0.0), c(-0.2, 0.8)),
            Displacement2::new(c(0.1, -0.9), c(0.4, 0.4)),
            Displacement2::new(c(-1.1, 0.2), c(0.0, 0.6)),
            Displacement2::new(c(0.5, 0.5), c(-0.5, -0.5)),
        ];
        let q = bond_forces(center, &nb).0;
        let (u, v) = (center.ux, center.uy);
        let h = 3f64.sqrt() / 2.0;
        let q0 = nb[0].ux - u;
        let q3 = u - nb[3].ux;
        let q1 = (nb[1].ux - u) * 0.5 + (nb[1].uy - v) * h;
        let q2 = -(nb[2].ux - u) * 0.5 + (nb[2].uy - v) * h;
        let q4 = -(nb[4].ux - u) * 0.5 - (nb[4].uy - v) * h;
        let q5 = (nb[5].ux - u) * 0.5 - (nb[5].uy - v) * h;
        for (got, want) in q.iter().zip([q0, q1, q2, q3, q4, q5]) {
            assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn acceleration_examples() {
        let zero = BondForces::default();
        let a = acceleration(&zero, Displacement2::real(1.0, 0.0));
        assert_eq!(a, Displacement2::real(1.0, 0.0));
        let a = acceleration(&zero, Displacement2::ZERO);
        assert_eq!(a, Displacement2::ZERO);
    }

    #[test]
    fn hex_distance_and_mirror() {
        assert_eq!(NodeIndex::new(3, -1).hex_distance(), 3);
        assert_eq!(NodeIndex::new(-2, -2).hex_distance(), 4);
        let idx = NodeIndex::new(4, 3);
        let (p, q) = (node_position(idx), node_position(idx.mirror_y()));
        assert_abs_diff_eq!(p.x, q.x, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, -q.y, epsilon = 1e-15);
    }

    fn arb_disp() -> impl Strategy<Value = Displacement2> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
            .prop_map(|(a, b, c2, d)| Displacement2::new(c(a, b), c(c2, d)))
    }

    proptest! {
        #[test]
        fn rigid_translation_is_force_free(shift in arb_disp()) {
            let q = bond_forces(shift, &[shift; 6]);
            for qj in q.0 {
                prop_assert!(qj.norm() < 1e-15);
            }
        }

        #[test]
        fn acceleration_is_linear(
            nb in proptest::array::uniform6(arb_disp()),
            center in arb_disp(),
            p in arb_disp(),
            ar in -3.0..3.0f64,
            ai in -3.0..3.0f64,
        ) {
            let alpha = c(ar, ai);
            let q = bond_forces(center, &nb);
            let lhs = acceleration(&(q * alpha), p * alpha);
            let rhs = acceleration(&q, p) * alpha;
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}

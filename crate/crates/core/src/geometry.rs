//! Transmitter/receiver layouts and the distances the channel models consume.
//!
//! Topologies are kept as explicit 3-D coordinates. Separation angles and
//! centre distances are derived from them, so a planar two-receiver layout and
//! an arbitrary n-receiver layout go through the same code.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or displacement in 3-D space, in micrometres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Rotation about the z axis by `angle` radians.
    pub fn rotate_z(self, angle: f64) -> Vec3 {
        let (s, c) = angle.sin_cos();
        Vec3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A fully absorbing spherical receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Receiver {
    pub center: Vec3,
    pub radius: f64,
}

impl Receiver {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (p - self.center).norm_squared() < self.radius * self.radius
    }

    /// Signed distance from `p` to the sphere surface (negative inside).
    pub fn surface_distance(&self, p: Vec3) -> f64 {
        (p - self.center).norm() - self.radius
    }
}

/// Point transmitter, absorbing receivers and the diffusion coefficient
/// (um^2/s) of the medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    tx: Vec3,
    receivers: Vec<Receiver>,
    diffusion: f64,
}

impl Topology {
    /// Validates and builds a topology.
    ///
    /// Rejects non-positive radii or diffusion, a transmitter on or inside a
    /// receiver, and touching or overlapping receivers.
    pub fn new(tx: Vec3, receivers: Vec<Receiver>, diffusion: f64) -> Result<Self> {
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(Error::InvalidTopology(format!(
                "diffusion coefficient must be positive and finite, got {diffusion}"
            )));
        }
        if !tx.is_finite() {
            return Err(Error::InvalidTopology(format!(
                "transmitter position {tx} is not finite"
            )));
        }
        for (i, rx) in receivers.iter().enumerate() {
            if !rx.center.is_finite() {
                return Err(Error::InvalidTopology(format!(
                    "receiver {} center {} is not finite",
                    i + 1,
                    rx.center
                )));
            }
            if !(rx.radius > 0.0 && rx.radius.is_finite()) {
                return Err(Error::InvalidTopology(format!(
                    "receiver {} radius must be positive, got {}",
                    i + 1,
                    rx.radius
                )));
            }
            let d = tx.distance(rx.center);
            if d <= rx.radius {
                return Err(Error::InvalidTopology(format!(
                    "transmitter must lie outside receiver {}: |tx - center| = {} <= r = {}",
                    i + 1,
                    d,
                    rx.radius
                )));
            }
        }
        for i in 0..receivers.len() {
            for j in (i + 1)..receivers.len() {
                let (a, b) = (&receivers[i], &receivers[j]);
                let d = a.center.distance(b.center);
                if d <= a.radius + b.radius {
                    return Err(Error::InvalidTopology(format!(
                        "receivers {} and {} overlap: center distance {} <= r{} + r{} = {}",
                        i + 1,
                        j + 1,
                        d,
                        i + 1,
                        j + 1,
                        a.radius + b.radius
                    )));
                }
            }
        }
        Ok(Self {
            tx,
            receivers,
            diffusion,
        })
    }

    /// Single-receiver topology with the transmitter at the origin and the
    /// receiver on the +x axis.
    pub fn siso(r0: f64, radius: f64, diffusion: f64) -> Result<Self> {
        Self::new(
            Vec3::ZERO,
            vec![Receiver::new(Vec3::new(r0, 0.0, 0.0), radius)],
            diffusion,
        )
    }

    pub fn tx(&self) -> Vec3 {
        self.tx
    }

    pub fn receivers(&self) -> &[Receiver] {
        &self.receivers
    }

    pub fn receiver(&self, i: usize) -> Result<&Receiver> {
        self.receivers.get(i).ok_or(Error::ReceiverIndex {
            index: i,
            count: self.receivers.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.receivers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.receivers.is_empty()
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    /// Distance from the transmitter to the center of receiver `i`.
    pub fn center_distance(&self, i: usize) -> Result<f64> {
        Ok(self.tx.distance(self.receiver(i)?.center))
    }

    /// Angle at the transmitter between the centers of receivers `i` and `j`.
    pub fn separation_angle(&self, i: usize, j: usize) -> Result<f64> {
        let a = self.receiver(i)?.center - self.tx;
        let b = self.receiver(j)?.center - self.tx;
        let cos = (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
        Ok(cos.acos())
    }

    /// Same topology with receivers reordered by `order` (a permutation).
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let receivers = order
            .iter()
            .map(|&i| self.receiver(i).copied())
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.tx, receivers, self.diffusion)
    }

    /// Applies `f` to every position in the topology (tx and centers).
    pub fn map_points(&self, f: impl Fn(Vec3) -> Vec3) -> Result<Self> {
        let receivers = self
            .receivers
            .iter()
            .map(|rx| Receiver::new(f(rx.center), rx.radius))
            .collect();
        Self::new(f(self.tx), receivers, self.diffusion)
    }

    /// The point on receiver `i`'s surface closest to the transmitter.
    pub fn virtual_release_point(&self, i: usize) -> Result<Vec3> {
        let rx = self.receiver(i)?;
        let toward_tx = self.tx - rx.center;
        Ok(rx.center + toward_tx * (rx.radius / toward_tx.norm()))
    }

    /// Distance from receiver `from`'s virtual release point to the center of
    /// receiver `to`.
    ///
    /// Fails when the release point lies on or inside the target sphere, since
    /// the conditional single-receiver response is undefined there.
    pub fn cross_distance(&self, from: usize, to: usize) -> Result<f64> {
        if from == to {
            return Err(Error::InvalidParams(format!(
                "cross distance needs two distinct receivers, got {from} twice"
            )));
        }
        let release = self.virtual_release_point(from)?;
        let target = self.receiver(to)?;
        let distance = release.distance(target.center);
        if distance <= target.radius {
            return Err(Error::ReleasePointInsideTarget {
                from,
                to,
                distance,
                radius: target.radius,
            });
        }
        Ok(distance)
    }
}

/// Planar two-receiver layout described from the transmitter: radii, center
/// distances and the separation angle between the two centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarSpec2Rx {
    pub r1: f64,
    pub r2: f64,
    pub r01: f64,
    pub r02: f64,
    /// Separation angle in radians, within [0, pi].
    pub phi: f64,
    pub diffusion: f64,
}

impl PlanarSpec2Rx {
    pub fn with_phi(self, phi: f64) -> Self {
        Self { phi, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("r1", self.r1),
            ("r2", self.r2),
            ("r01", self.r01),
            ("r02", self.r02),
        ];
        for (name, v) in lengths {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.r01 <= self.r1 {
            return Err(Error::InvalidTopology(format!(
                "r01 must exceed r1 (transmitter outside Rx1): r01 = {}, r1 = {}",
                self.r01, self.r1
            )));
        }
        if self.r02 <= self.r2 {
            return Err(Error::InvalidTopology(format!(
                "r02 must exceed r2 (transmitter outside Rx2): r02 = {}, r2 = {}",
                self.r02, self.r2
            )));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.phi) {
            return Err(Error::InvalidParams(format!(
                "separation angle must lie in [0, pi], got {}",
                self.phi
            )));
        }
        if !(self.diffusion > 0.0 && self.diffusion.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "diffusion coefficient must be positive, got {}",
                self.diffusion
            )));
        }
        Ok(())
    }

    /// (radius, center distance) of the receiver nearer to the transmitter,
    /// then of the farther one. Ties go to Rx1.
    fn closer_farther(&self) -> ((f64, f64), (f64, f64)) {
        let rx1 = (self.r1, self.r01);
        let rx2 = (self.r2, self.r02);
        if self.r02 < self.r01 {
            (rx2, rx1)
        } else {
            (rx1, rx2)
        }
    }
}

/// Places Tx at the origin, Rx1 on the +x axis and Rx2 at angle `phi` in the
/// xy plane.
pub fn build_planar_2rx(spec: &PlanarSpec2Rx) -> Result<Topology> {
    spec.validate()?;
    let (s, c) = spec.phi.sin_cos();
    Topology::new(
        Vec3::ZERO,
        vec![
            Receiver::new(Vec3::new(spec.r01, 0.0, 0.0), spec.r1),
            Receiver::new(Vec3::new(spec.r02 * c, spec.r02 * s, 0.0), spec.r2),
        ],
        spec.diffusion,
    )
}

/// Separation angle at which the farther receiver's center sits on the
/// tangent line of the closer receiver: `asin(r_closer / r0_closer)`.
pub fn half_eclipse_angle(spec: &PlanarSpec2Rx) -> f64 {
    let ((r, r0), _) = spec.closer_farther();
    (r / r0).asin()
}

/// Separation angle at which the tangent lines of both receivers coincide,
/// i.e. the farther receiver is no longer shadowed at all.
pub fn no_eclipse_angle(spec: &PlanarSpec2Rx) -> f64 {
    let ((rc, r0c), (rf, r0f)) = spec.closer_farther();
    (rc / r0c).asin() + (rf / r0f).asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn scenario1(phi: f64) -> PlanarSpec2Rx {
        PlanarSpec2Rx {
            r1: 2.0,
            r2: 5.0,
            r01: 6.0,
            r02: 16.0,
            phi,
            diffusion: 79.4,
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn planar_centers_for_opposite_receivers() {
        let t = build_planar_2rx(&scenario1(PI)).unwrap();
        let c1 = t.receivers()[0].center;
        let c2 = t.receivers()[1].center;
        assert_eq!(c1, Vec3::new(6.0, 0.0, 0.0));
        assert!(close(c2.x, -16.0, 1e-12) && close(c2.y, 0.0, 1e-12) && c2.z == 0.0);
    }

    #[test]
    fn coincident_receivers_rejected() {
        let spec = PlanarSpec2Rx {
            r1: 1.0,
            r2: 1.0,
            r01: 5.0,
            r02: 5.0,
            phi: 0.0,
            diffusion: 79.4,
        };
        match build_planar_2rx(&spec) {
            Err(Error::InvalidTopology(msg)) => assert!(msg.contains("overlap"), "{msg}"),
            other => panic!("expected overlap error, got {other:?}"),
        }
    }

    #[test]
    fn tx_inside_receiver_rejected() {
        let err = Topology::new(
            Vec3::ZERO,
            vec![Receiver::new(Vec3::new(1.0, 0.0, 0.0), 2.0)],
            79.4,
        )
        .unwrap_err();
        assert!(err.to_string().contains("outside receiver 1"));
        assert!(Topology::siso(15.0, 6.0, 0.0).is_err());
        assert!(Topology::siso(15.0, -1.0, 79.4).is_err());
    }

    #[test]
    fn law_of_cosines_center_distance() {
        let spec = PlanarSpec2Rx {
            r1: 6.0,
            r2: 3.0,
            r01: 15.0,
            r02: 9.0,
            phi: 2.0 * PI / 3.0,
            diffusion: 79.4,
        };
        let t = build_planar_2rx(&spec).unwrap();
        let d = t.receivers()[0].center.distance(t.receivers()[1].center);
        assert!(close(d, 21.0, 1e-12), "{d}");
    }

    #[test]
    fn virtual_release_points() {
        let t = Topology::siso(12.0, 4.0, 79.4).unwrap();
        assert_eq!(t.virtual_release_point(0).unwrap(), Vec3::new(8.0, 0.0, 0.0));

        let t = Topology::new(
            Vec3::ZERO,
            vec![Receiver::new(Vec3::new(0.0, 0.0, 12.0), 4.0)],
            79.4,
        )
        .unwrap();
        assert_eq!(t.virtual_release_point(0).unwrap(), Vec3::new(0.0, 0.0, 8.0));

        let t = build_planar_2rx(&scenario1(FRAC_PI_2)).unwrap();
        assert_eq!(t.virtual_release_point(0).unwrap(), Vec3::new(4.0, 0.0, 0.0));
    }

    #[test]
    fn cross_distances_scenario1() {
        let t = build_planar_2rx(&scenario1(PI)).unwrap();
        assert!(close(t.cross_distance(0, 1).unwrap(), 20.0, 1e-12));
        let t = build_planar_2rx(&scenario1(0.0)).unwrap();
        assert!(close(t.cross_distance(0, 1).unwrap(), 12.0, 1e-12));
        let t = build_planar_2rx(&scenario1(FRAC_PI_2)).unwrap();
        assert!(close(t.cross_distance(0, 1).unwrap(), 272f64.sqrt(), 1e-12));
        assert!(close(t.cross_distance(1, 0).unwrap(), 157f64.sqrt(), 1e-12));
        assert!(t.cross_distance(1, 1).is_err());
    }

    #[test]
    fn release_point_stays_outside_other_receivers() {
        // The release point lies on the source sphere, so non-overlap already
        // keeps it outside every other receiver; the error is a guard only.
        let t = Topology::new(
            Vec3::ZERO,
            vec![
                Receiver::new(Vec3::new(10.0, 0.0, 0.0), 4.0),
                Receiver::new(Vec3::new(14.0, 5.0, 0.0), 2.39),
            ],
            79.4,
        )
        .unwrap();
        assert!(t.cross_distance(1, 0).unwrap() > 4.0);
        assert!(t.cross_distance(0, 1).unwrap() > 2.39);
    }

    #[test]
    fn eclipse_angles_match_figure_ticks() {
        let s1 = scenario1(0.0);
        assert!(close(half_eclipse_angle(&s1).to_degrees(), 19.47, 0.01));
        assert!(close(no_eclipse_angle(&s1).to_degrees(), 37.68, 0.01));
        let s2 = PlanarSpec2Rx {
            r1: 5.0,
            r2: 2.0,
            r01: 9.0,
            r02: 19.0,
            phi: 0.0,
            diffusion: 79.4,
        };
        assert!(close(half_eclipse_angle(&s2).to_degrees(), 33.75, 0.01));
        assert!(close(no_eclipse_angle(&s2).to_degrees(), 39.79, 0.01));
        let s3 = PlanarSpec2Rx {
            r1: 5.0,
            r2: 5.0,
            r01: 9.0,
            r02: 22.0,
            phi: 0.0,
            diffusion: 79.4,
        };
        assert!(close(half_eclipse_angle(&s3).to_degrees(), 33.74, 0.01));
        assert!(close(no_eclipse_angle(&s3).to_degrees(), 46.88, 0.01));
    }

    #[test]
    fn closer_receiver_is_chosen_regardless_of_index() {
        let swapped = PlanarSpec2Rx {
            r1: 5.0,
            r2: 2.0,
            r01: 16.0,
            r02: 6.0,
            phi: 0.0,
            diffusion: 79.4,
        };
        assert!(close(half_eclipse_angle(&swapped), (2.0f64 / 6.0).asin(), 1e-15));
    }

    #[test]
    fn planar_readback() {
        let spec = PlanarSpec2Rx {
            r1: 5.0,
            r2: 5.0,
            r01: 9.0,
            r02: 22.0,
            phi: 1.234,
            diffusion: 79.4,
        };
        let t = build_planar_2rx(&spec).unwrap();
        assert!(close(t.center_distance(0).unwrap(), 9.0, 9.0 * 1e-12));
        assert!(close(t.center_distance(1).unwrap(), 22.0, 22.0 * 1e-12));
        assert!(close(t.separation_angle(0, 1).unwrap(), 1.234, 1.234 * 1e-12));
    }
}

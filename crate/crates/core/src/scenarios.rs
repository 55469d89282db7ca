//! Reference layouts: the three two-receiver scenarios and the single- and
//! two-receiver setups of the motivating figures.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{PlanarSpec2Rx, Receiver, Topology, Vec3};

/// Diffusion coefficient used throughout (um^2/s).
pub const DEFAULT_DIFFUSION: f64 = 79.4;
/// Default model step (s).
pub const DEFAULT_MODEL_DT: f64 = 1e-3;
/// Default particle-simulation step (s).
pub const DEFAULT_SIM_DT: f64 = 1e-4;
/// Default observation horizon (s).
pub const DEFAULT_HORIZON: f64 = 5.0;
/// Molecule count of the reference simulations.
pub const DEFAULT_MOLECULES: usize = 50_000;

/// Scenario 1 (smaller receiver closer), 2 (larger receiver closer) or
/// 3 (equal radii); `phi` is left at zero.
pub fn scenario(n: u8) -> Result<PlanarSpec2Rx> {
    let (r1, r2, r01, r02) = match n {
        1 => (2.0, 5.0, 6.0, 16.0),
        2 => (5.0, 2.0, 9.0, 19.0),
        3 => (5.0, 5.0, 9.0, 22.0),
        _ => {
            return Err(Error::InvalidParams(format!(
                "unknown scenario {n}; expected 1, 2 or 3"
            )))
        }
    };
    Ok(PlanarSpec2Rx {
        r1,
        r2,
        r01,
        r02,
        phi: 0.0,
        diffusion: DEFAULT_DIFFUSION,
    })
}

/// Two receivers at 2pi/3 separation: r1 = 6, r01 = 15, r2 = 3, r02 = 9.
pub fn fig23() -> PlanarSpec2Rx {
    PlanarSpec2Rx {
        r1: 6.0,
        r2: 3.0,
        r01: 15.0,
        r02: 9.0,
        phi: 2.0 * PI / 3.0,
        diffusion: DEFAULT_DIFFUSION,
    }
}

/// Single receiver of radius 4 at the origin, transmitter at (0, 0, 12).
pub fn fig4() -> Topology {
    Topology::new(
        Vec3::new(0.0, 0.0, 12.0),
        vec![Receiver::new(Vec3::ZERO, 4.0)],
        DEFAULT_DIFFUSION,
    )
    .expect("preset topology is valid")
}

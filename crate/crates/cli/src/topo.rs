//! Topology selection shared by the subcommands: scenario tables, figure
//! presets, planar parameters or raw coordinates.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use clap::{Args, ValueEnum};
use mcvd_core::scenarios::{fig23, fig4, scenario, DEFAULT_DIFFUSION};
use mcvd_core::{
    build_planar_2rx, half_eclipse_angle, no_eclipse_angle, PlanarSpec2Rx, Receiver, Topology, Vec3,
};

use crate::InputError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// One receiver (r = 4 um) at the origin, transmitter at (0, 0, 12).
    Fig4,
    /// r1 = 6, r01 = 15, r2 = 3, r02 = 9 at 2pi/3 separation.
    Fig23,
}

/// Separation angle given in degrees or by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleArg {
    Degrees(f64),
    HalfEclipse,
    NoEclipse,
}

impl AngleArg {
    pub fn radians(&self, spec: &PlanarSpec2Rx) -> f64 {
        match *self {
            AngleArg::Degrees(d) => d.to_radians(),
            AngleArg::HalfEclipse => half_eclipse_angle(spec),
            AngleArg::NoEclipse => no_eclipse_angle(spec),
        }
    }
}

impl FromStr for AngleArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "half-eclipse" => Ok(AngleArg::HalfEclipse),
            "no-eclipse" => Ok(AngleArg::NoEclipse),
            _ => s
                .parse::<f64>()
                .map(AngleArg::Degrees)
                .map_err(|_| format!("expected degrees, half-eclipse or no-eclipse, got '{s}'")),
        }
    }
}

impl fmt::Display for AngleArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngleArg::Degrees(d) => write!(f, "{d}"),
            AngleArg::HalfEclipse => f.write_str("half-eclipse"),
            AngleArg::NoEclipse => f.write_str("no-eclipse"),
        }
    }
}

fn parse_floats<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got '{s}'"));
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| format!("'{p}' is not a number"))?;
    }
    Ok(out)
}

pub fn parse_point(s: &str) -> std::result::Result<Vec3, String> {
    let [x, y, z] = parse_floats::<3>(s)?;
    Ok(Vec3::new(x, y, z))
}

pub fn parse_receiver(s: &str) -> std::result::Result<Receiver, String> {
    let [x, y, z, r] = parse_floats::<4>(s)?;
    Ok(Receiver::new(Vec3::new(x, y, z), r))
}

pub fn parse_planar(s: &str) -> std::result::Result<[f64; 4], String> {
    parse_floats::<4>(s)
}

#[derive(Debug, Clone, Args)]
pub struct TopologyArgs {
    /// Scenario table 1, 2 or 3 (needs --angle).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub scenario: Option<u8>,

    /// Planar two-receiver layout `r1,r2,r01,r02` in um (needs --angle).
    #[arg(long, value_parser = parse_planar, value_name = "R1,R2,R01,R02")]
    pub planar: Option<[f64; 4]>,

    /// Separation angle: degrees, `half-eclipse` or `no-eclipse`.
    #[arg(long, allow_hyphen_values = true)]
    pub angle: Option<AngleArg>,

    /// Figure preset.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    /// Transmitter position `x,y,z` (um); defaults to the origin.
    #[arg(long, value_parser = parse_point, value_name = "X,Y,Z", allow_hyphen_values = true)]
    pub tx: Option<Vec3>,

    /// Receiver `x,y,z,r` (um); repeat for several receivers.
    #[arg(long = "rx", value_parser = parse_receiver, value_name = "X,Y,Z,R", allow_hyphen_values = true)]
    pub rx: Vec<Receiver>,

    /// Diffusion coefficient (um^2/s).
    #[arg(long = "diffusion", short = 'D')]
    pub diffusion: Option<f64>,
}

/// A resolved layout, with the planar description when there is one.
pub struct Resolved {
    pub topology: Topology,
    pub planar: Option<PlanarSpec2Rx>,
    pub source: String,
}

impl TopologyArgs {
    fn diffusion(&self) -> f64 {
        self.diffusion.unwrap_or(DEFAULT_DIFFUSION)
    }

    /// Planar description without an angle applied, if the layout is planar.
    pub fn planar_base(&self) -> Result<Option<(PlanarSpec2Rx, String)>> {
        let d = self.diffusion();
        if let Some(n) = self.scenario {
            let s = scenario(n)?;
            return Ok(Some((
                PlanarSpec2Rx { diffusion: d, ..s },
                format!("scenario {n}"),
            )));
        }
        if let Some([r1, r2, r01, r02]) = self.planar {
            return Ok(Some((
                PlanarSpec2Rx {
                    r1,
                    r2,
                    r01,
                    r02,
                    phi: 0.0,
                    diffusion: d,
                },
                "planar".into(),
            )));
        }
        if self.preset == Some(Preset::Fig23) {
            return Ok(Some((
                PlanarSpec2Rx {
                    diffusion: d,
                    ..fig23()
                },
                "preset fig23".into(),
            )));
        }
        Ok(None)
    }

    fn check_exclusive(&self) -> Result<()> {
        let chosen = [
            self.scenario.is_some(),
            self.planar.is_some(),
            self.preset.is_some(),
            !self.rx.is_empty(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if chosen != 1 {
            bail!(InputError(
                "give exactly one of --scenario, --planar, --preset or --rx".into()
            ));
        }
        if self.tx.is_some() && self.rx.is_empty() {
            bail!(InputError("--tx only applies together with --rx".into()));
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        self.check_exclusive()?;
        if let Some((base, source)) = self.planar_base()? {
            let spec = match (self.angle, self.preset) {
                (Some(a), _) => base.with_phi(a.radians(&base)),
                (None, Some(Preset::Fig23)) => base,
                (None, _) => bail!(InputError(format!("{source} needs --angle"))),
            };
            let topology = build_planar_2rx(&spec)?;
            return Ok(Resolved {
                topology,
                planar: Some(spec),
                source,
            });
        }
        if self.angle.is_some() {
            bail!(InputError(
                "--angle applies to --scenario, --planar and --preset fig23 only".into()
            ));
        }
        if self.preset == Some(Preset::Fig4) {
            let t = fig4();
            let topology = match self.diffusion {
                Some(d) => Topology::new(t.tx(), t.receivers().to_vec(), d)?,
                None => t,
            };
            return Ok(Resolved {
                topology,
                planar: None,
                source: "preset fig4".into(),
            });
        }
        let topology = Topology::new(self.tx.unwrap_or(Vec3::ZERO), self.rx.clone(), self.diffusion())?;
        Ok(Resolved {
            topology,
            planar: None,
            source: "coordinates".into(),
        })
    }
}

/// `start:stop:step` (inclusive) or a comma-separated list, in degrees.
pub fn parse_angles(s: &str) -> Result<Vec<f64>> {
    let bad = || anyhow!(InputError(format!("cannot parse angle list '{s}'")));
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| start + k as f64 * step).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

//! Brownian-motion particle simulator used as the ground-truth oracle.
//!
//! Molecules start at the transmitter and take Gaussian steps with
//! per-coordinate standard deviation `sqrt(2 D dt)`. A molecule whose
//! end-of-step position lies inside a receiver is absorbed there; the hit
//! point is where the step segment first crosses that sphere and the hit time
//! is interpolated along the step.
//!
//! Every molecule draws from its own ChaCha stream (`seed`, stream = molecule
//! id), so results do not depend on how molecules are spread over threads.
//!
//! Far from every receiver, `m` consecutive steps are fused into one Gaussian
//! jump of standard deviation `sqrt(m) * sigma`. `m` is chosen so the nearest
//! receiver surface is at least [`LEAP_SIGMAS`] jump deviations away, which
//! bounds the probability of an unseen intermediate absorption by
//! `2 * Phi(-8)`, about `1e-15` per jump. The end-point law is unchanged.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{csv_number, HittingCurve, TimeGrid};
use crate::error::{Error, Result};
use crate::geometry::{Receiver, Topology, Vec3};

/// Minimum distance to the nearest receiver, in jump standard deviations,
/// for fusing steps.
pub const LEAP_SIGMAS: f64 = 8.0;

pub const RECORDS_CSV_HEADER: [&str; 6] = ["molecule", "time_s", "x_um", "y_um", "z_um", "rx"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_molecules: usize,
    /// Simulation step (s).
    pub dt: f64,
    /// Simulated duration (s).
    pub horizon: f64,
    pub seed: u64,
    /// Bin width of the output hitting curves (s); at least `dt`.
    pub curve_dt: f64,
    /// Fuse steps far from every receiver.
    pub leap: bool,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn new(n_molecules: usize, dt: f64, horizon: f64, seed: u64) -> Self {
        Self {
            n_molecules,
            dt,
            horizon,
            seed,
            curve_dt: dt,
            leap: true,
            threads: None,
        }
    }

    pub fn with_curve_dt(mut self, curve_dt: f64) -> Self {
        self.curve_dt = curve_dt;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn with_leap(mut self, leap: bool) -> Self {
        self.leap = leap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_molecules == 0 {
            return Err(Error::InvalidConfig("need at least one molecule".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "horizon {} s must be at least dt = {} s",
                self.horizon, self.dt
            )));
        }
        if !(self.curve_dt >= self.dt * (1.0 - 1e-9) && self.curve_dt <= self.horizon * (1.0 + 1e-9)) {
            return Err(Error::InvalidConfig(format!(
                "curve bin width {} s must lie in [dt, horizon]",
                self.curve_dt
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("thread count must be positive".into()));
        }
        Ok(())
    }

    pub fn sim_grid(&self) -> Result<TimeGrid> {
        TimeGrid::with_horizon(self.dt, self.horizon).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn curve_grid(&self) -> Result<TimeGrid> {
        TimeGrid::with_horizon(self.curve_dt, self.horizon).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// One absorption event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub molecule: u64,
    /// Absorption time (s).
    pub time: f64,
    /// Hit position on the receiver surface (um).
    pub point: Vec3,
    /// Zero-based receiver index.
    pub receiver: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    /// Hit records ordered by molecule id.
    pub records: Vec<HitRecord>,
    /// One curve per receiver on the config's curve grid.
    pub curves: Vec<HittingCurve>,
    /// `absorbed[i][k]`: molecules absorbed by receiver `i` during simulation
    /// step `k`.
    pub absorbed: Vec<Vec<u32>>,
    /// Molecules still free after each simulation step.
    pub surviving: Vec<u64>,
    pub n_molecules: usize,
}

impl SimOutcome {
    /// Absorbed plus surviving molecules equals `N` after every step.
    pub fn conservation_holds(&self) -> bool {
        let mut absorbed_so_far = 0u64;
        for (k, &alive) in self.surviving.iter().enumerate() {
            absorbed_so_far += self.absorbed.iter().map(|a| a[k] as u64).sum::<u64>();
            if absorbed_so_far + alive != self.n_molecules as u64 {
                return false;
            }
        }
        true
    }

    pub fn hits_of(&self, receiver: usize) -> impl Iterator<Item = &HitRecord> {
        self.records.iter().filter(move |r| r.receiver == receiver)
    }
}

struct Absorption {
    step: usize,
    record: HitRecord,
}

/// Smallest `u` in `[0, 1]` with `|start + u (end - start) - c| = r`, for a
/// segment that ends inside the sphere. `None` if `start` is not outside.
fn segment_entry(start: Vec3, end: Vec3, rx: &Receiver) -> Option<f64> {
    let a = start - rx.center;
    let d = end - start;
    let qa = d.norm_squared();
    let qb = 2.0 * a.dot(d);
    let qc = a.norm_squared() - rx.radius * rx.radius;
    if qc <= 0.0 || qa == 0.0 {
        return None;
    }
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    // Numerically stable pair of roots.
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    let (u1, u2) = (q / qa, qc / q);
    let lo = u1.min(u2);
    let hi = u1.max(u2);
    let u = if lo >= 0.0 { lo } else { hi };
    Some(u.clamp(0.0, 1.0))
}

fn project_to_surface(p: Vec3, rx: &Receiver) -> Vec3 {
    let off = p - rx.center;
    let n = off.norm();
    if n == 0.0 {
        // Degenerate: any surface point will do.
        return rx.center + Vec3::new(rx.radius, 0.0, 0.0);
    }
    rx.center + off * (rx.radius / n)
}

fn simulate_molecule(
    id: u64,
    topology: &Topology,
    config: &SimConfig,
    sigma: f64,
    n_steps: usize,
) -> Option<Absorption> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(id);
    let receivers = topology.receivers();
    let mut pos = topology.tx();
    let mut k = 0usize;
    while k < n_steps {
        let m = if config.leap {
            let nearest = receivers
                .iter()
                .map(|rx| rx.surface_distance(pos))
                .fold(f64::INFINITY, f64::min);
            let ratio = nearest / (LEAP_SIGMAS * sigma);
            ((ratio * ratio).floor() as usize).clamp(1, n_steps - k)
        } else {
            1
        };
        let scale = sigma * (m as f64).sqrt();
        let jump = Vec3::new(
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        );
        let next = pos + jump * scale;
        if let Some((i, rx)) = receivers.iter().enumerate().find(|(_, rx)| rx.contains(next)) {
            let (u, point) = match segment_entry(pos, next, rx) {
                Some(u) => (u, project_to_surface(pos + (next - pos) * u, rx)),
                None => (0.0, project_to_surface(pos, rx)),
            };
            let u = u.max(1e-12);
            let offset = ((u * m as f64).ceil() as usize).clamp(1, m);
            let time = (k as f64 + u * m as f64) * config.dt;
            return Some(Absorption {
                step: k + offset - 1,
                record: HitRecord {
                    molecule: id,
                    time,
                    point,
                    receiver: i,
                },
            });
        }
        pos = next;
        k += m;
    }
    None
}

/// Runs the particle simulation.
pub fn simulate(topology: &Topology, config: &SimConfig) -> Result<SimOutcome> {
    config.validate()?;
    if topology.is_empty() {
        return Err(Error::ReceiverCount {
            expected: "at least 1",
            found: 0,
        });
    }
    let sim_grid = config.sim_grid()?;
    let curve_grid = config.curve_grid()?;
    let n_steps = sim_grid.n_steps();
    let sigma = (2.0 * topology.diffusion() * config.dt).sqrt();

    let run = || -> Vec<Option<Absorption>> {
        (0..config.n_molecules as u64)
            .into_par_iter()
            .map(|id| simulate_molecule(id, topology, config, sigma, n_steps))
            .collect()
    };
    let fates = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let n_rx = topology.len();
    let mut absorbed = vec![vec![0u32; n_steps]; n_rx];
    // Molecules leaving the free population after step k.
    let mut departures = vec![0u64; n_steps];
    let mut records = Vec::new();
    for fate in fates.into_iter().flatten() {
        absorbed[fate.record.receiver][fate.step] += 1;
        departures[fate.step] += 1;
        records.push(fate.record);
    }
    let mut alive = config.n_molecules as u64;
    let surviving = departures
        .iter()
        .map(|d| {
            alive -= d;
            alive
        })
        .collect();

    let curves = (0..n_rx)
        .map(|i| empirical_curve(&records, &curve_grid, i, config.n_molecules))
        .collect();
    Ok(SimOutcome {
        records,
        curves,
        absorbed,
        surviving,
        n_molecules: config.n_molecules,
    })
}

/// Bins hit times of `receiver` into `grid`; cumulative values are
/// hits-so-far divided by `n_molecules`. Hits after the horizon are ignored.
pub fn empirical_curve(
    records: &[HitRecord],
    grid: &TimeGrid,
    receiver: usize,
    n_molecules: usize,
) -> HittingCurve {
    let n = grid.n_steps();
    let mut counts = vec![0u64; n];
    let horizon = grid.horizon();
    for r in records.iter().filter(|r| r.receiver == receiver) {
        if r.time > horizon * (1.0 + 1e-12) {
            continue;
        }
        // Interval (t_b, t_{b+1}] holds time t.
        let b = ((r.time / grid.dt()).ceil() as usize)
            .saturating_sub(1)
            .min(n - 1);
        counts[b] += 1;
    }
    let total = n_molecules as f64;
    let mut running = 0u64;
    let cumulative = counts
        .iter()
        .map(|&c| {
            running += c;
            running as f64 / total
        })
        .collect();
    HittingCurve {
        grid: *grid,
        step_prob: counts.iter().map(|&c| c as f64 / total).collect(),
        cumulative,
        negative_residual: 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapBin {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub count: u64,
}

/// Histogram of hit positions over the polar angle measured from the
/// receiver-center-to-transmitter axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub receiver: usize,
    pub bins: Vec<HeatmapBin>,
}

impl Heatmap {
    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Counts divided by the solid-angle fraction `(cos lo - cos hi) / 2`
    /// of each band: flat for hits spread uniformly over the surface.
    pub fn area_density(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.bins
            .iter()
            .map(|b| b.count as f64 / total / ((b.theta_lo.cos() - b.theta_hi.cos()) / 2.0))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(writer);
        w.write_record(["theta_lo", "theta_hi", "count"])?;
        for b in &self.bins {
            w.write_record([
                csv_number(b.theta_lo),
                csv_number(b.theta_hi),
                b.count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Polar angle of `point` on `rx`, from the axis pointing at `tx`.
pub fn polar_angle(point: Vec3, rx: &Receiver, tx: Vec3) -> f64 {
    let axis = tx - rx.center;
    let off = point - rx.center;
    (axis.dot(off) / (axis.norm() * off.norm()))
        .clamp(-1.0, 1.0)
        .acos()
}

pub fn heatmap(
    records: &[HitRecord],
    topology: &Topology,
    receiver: usize,
    n_theta_bins: usize,
) -> Result<Heatmap> {
    if n_theta_bins == 0 {
        return Err(Error::InvalidParams("heatmap needs at least one bin".into()));
    }
    let rx = topology.receiver(receiver)?;
    let width = std::f64::consts::PI / n_theta_bins as f64;
    let mut counts = vec![0u64; n_theta_bins];
    for r in records.iter().filter(|r| r.receiver == receiver) {
        let theta = polar_angle(r.point, rx, topology.tx());
        counts[((theta / width) as usize).min(n_theta_bins - 1)] += 1;
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::NoHits(receiver));
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| HeatmapBin {
            theta_lo: b as f64 * width,
            theta_hi: (b + 1) as f64 * width,
            count,
        })
        .collect();
    Ok(Heatmap { receiver, bins })
}

/// Writes hit records as CSV; receivers are labelled from 1.
pub fn write_records_csv<W: Write>(records: &[HitRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    w.write_record(RECORDS_CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.molecule.to_string(),
            csv_number(r.time),
            csv_number(r.point.x),
            csv_number(r.point.y),
            csv_number(r.point.z),
            (r.receiver + 1).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn siso() -> Topology {
        Topology::siso(15.0, 6.0, 79.4).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0, 1e-4, 1.0, 1).validate().is_err());
        assert!(SimConfig::new(1, 0.0, 1.0, 1).validate().is_err());
        assert!(SimConfig::new(1, 1e-3, 1e-4, 1).validate().is_err());
        assert!(SimConfig::new(1, 1e-3, 1.0, 1)
            .with_curve_dt(1e-4)
            .validate()
            .is_err());
        assert!(SimConfig::new(1, 1e-3, 1.0, 1)
            .with_threads(0)
            .validate()
            .is_err());
        assert!(SimConfig::new(1, 1e-4, 1.0, 1)
            .with_curve_dt(1e-3)
            .validate()
            .is_ok());
    }

    #[test]
    fn single_molecule_is_deterministic() {
        let cfg = SimConfig::new(1, 1e-4, 5.0, 42);
        let a = simulate(&siso(), &cfg).unwrap();
        let b = simulate(&siso(), &cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.surviving, b.surviving);
    }

    #[test]
    fn hits_lie_on_surface_and_conserve() {
        let t = siso();
        let cfg = SimConfig::new(400, 1e-3, 2.0, 7).with_curve_dt(1e-2);
        let out = simulate(&t, &cfg).unwrap();
        assert!(out.conservation_holds());
        assert!(!out.records.is_empty());
        let rx = t.receivers()[0];
        for r in &out.records {
            assert!((r.point.distance(rx.center) - rx.radius).abs() < 1e-6);
            assert!(r.time > 0.0 && r.time <= 2.0);
        }
        let hits = out.records.len() as f64 / 400.0;
        assert!((out.curves[0].final_fraction() - hits).abs() < 1e-12);
    }

    #[test]
    fn segment_entry_point() {
        let rx = Receiver::new(Vec3::ZERO, 1.0);
        let u = segment_entry(Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0), &rx).unwrap();
        assert!((u - 2.0 / 3.0).abs() < 1e-15);
        assert!(segment_entry(Vec3::new(0.5, 0.0, 0.0), Vec3::new(0.2, 0.0, 0.0), &rx).is_none());
    }

    #[test]
    fn empirical_curve_edges() {
        let grid = TimeGrid::new(0.1, 10).unwrap();
        let c = empirical_curve(&[], &grid, 0, 5);
        assert!(c.cumulative.iter().all(|&v| v == 0.0));
        let recs: Vec<HitRecord> = (0..5)
            .map(|m| HitRecord {
                molecule: m,
                time: 0.05,
                point: Vec3::ZERO,
                receiver: 0,
            })
            .collect();
        let c = empirical_curve(&recs, &grid, 0, 5);
        assert!(c.cumulative.iter().all(|&v| v == 1.0));
        // Other receivers' hits are ignored.
        assert!(empirical_curve(&recs, &grid, 1, 5)
            .cumulative
            .iter()
            .all(|&v| v == 0.0));
        // Interval ends are inclusive.
        let edge = [HitRecord {
            molecule: 0,
            time: 0.2,
            point: Vec3::ZERO,
            receiver: 0,
        }];
        let c = empirical_curve(&edge, &grid, 0, 1);
        assert_eq!(c.step_prob[1], 1.0);
    }

    #[test]
    fn uniform_records_give_flat_area_density() {
        let t = Topology::new(
            Vec3::new(0.0, 0.0, 12.0),
            vec![Receiver::new(Vec3::ZERO, 4.0)],
            79.4,
        )
        .unwrap();
        // Deterministic equal-area (golden spiral) points on the sphere.
        let n = 20_000;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let recs: Vec<HitRecord> = (0..n)
            .map(|k| {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * k as f64;
                HitRecord {
                    molecule: k as u64,
                    time: 1.0,
                    point: Vec3::new(4.0 * r * a.cos(), 4.0 * r * a.sin(), 4.0 * z),
                    receiver: 0,
                }
            })
            .collect();
        let h = heatmap(&recs, &t, 0, 12).unwrap();
        assert_eq!(h.total(), n as u64);
        for d in h.area_density() {
            assert!((d - 1.0).abs() < 0.02, "{d}");
        }
        assert!(matches!(heatmap(&[], &t, 0, 12), Err(Error::NoHits(0))));
    }

    #[test]
    fn records_csv_layout() {
        let recs = [HitRecord {
            molecule: 3,
            time: 0.125,
            point: Vec3::new(1.0, -2.5, 0.1),
            receiver: 1,
        }];
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "molecule,time_s,x_um,y_um,z_um,rx\n3,0.125,1.0,-2.5,0.1,2\n"
        );
    }
}

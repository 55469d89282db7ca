use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::warn;
use mcvd_core::closed_form::{approx_model, build_series, roc_check, ClosedFormModel};
use mcvd_core::metrics::{compare_samples, write_sweep_csv};
use mcvd_core::montecarlo::{heatmap, write_records_csv};
use mcvd_core::{
    angle_sweep, approx_nrx, compare as compare_curves, csv_number, half_eclipse_angle, no_eclipse_angle,
    recursive_nrx, resample as resample_curve, simulate as run_simulation, siso_cdf, siso_pdf, HittingCurve,
    ModelKind, SimConfig, SisoParams, TimeGrid,
};

use crate::output::{create, write_table, Manifest, Target};
use crate::topo::{parse_angles, Resolved, TopologyArgs};
use crate::{GridArgs, InputError, ModelArg, OutputError};

fn grid_of(args: &GridArgs, default_dt: f64) -> Result<TimeGrid> {
    Ok(TimeGrid::with_horizon(
        args.dt.unwrap_or(default_dt),
        args.horizon,
    )?)
}

fn describe_topology(m: &mut Manifest, r: &Resolved) {
    let t = &r.topology;
    m.set("topology_source", &r.source);
    m.set("diffusion_um2_per_s", t.diffusion());
    m.set("tx_um", t.tx());
    m.set("receivers", t.len());
    for (i, rx) in t.receivers().iter().enumerate() {
        m.set(&format!("rx{}_center_um", i + 1), rx.center);
        m.set(&format!("rx{}_radius_um", i + 1), rx.radius);
    }
    if let Some(s) = &r.planar {
        m.set("r1_um", s.r1)
            .set("r2_um", s.r2)
            .set("r01_um", s.r01)
            .set("r02_um", s.r02);
        m.set("phi_deg", s.phi.to_degrees());
        m.set("half_eclipse_deg", half_eclipse_angle(s).to_degrees());
        m.set("no_eclipse_deg", no_eclipse_angle(s).to_degrees());
    }
}

fn describe_grid(m: &mut Manifest, prefix: &str, g: &TimeGrid) {
    m.set(&format!("{prefix}dt_s"), g.dt());
    m.set(&format!("{prefix}steps"), g.n_steps());
    m.set(&format!("{prefix}horizon_s"), g.horizon());
}

pub fn siso(r0: f64, rr: f64, diffusion: f64, grid: &GridArgs, out: Option<PathBuf>) -> Result<()> {
    let p = SisoParams::new(r0, rr, diffusion)?;
    let g = grid_of(grid, mcvd_core::scenarios::DEFAULT_MODEL_DT)?;
    let target = Target::resolve(out.as_deref(), "siso.csv");
    let header = ["t", "pdf", "cdf"].map(String::from);
    write_table(
        &target,
        &header,
        g.end_times().map(|t| vec![t, siso_pdf(t, &p), siso_cdf(t, &p)]),
    )?;

    let mut m = Manifest::new("siso");
    m.set("r0_um", r0)
        .set("rr_um", rr)
        .set("diffusion_um2_per_s", diffusion);
    describe_grid(&mut m, "", &g);
    m.set("columns", header.join(","));
    m.set("output", target.describe());
    m.write_for(&target)
}

/// Column pairs of a model run: rate or step mass, then cumulative.
struct Columns {
    header: Vec<String>,
    series: Vec<Vec<f64>>,
}

fn discrete_columns(curves: &[HittingCurve]) -> Columns {
    let mut header = vec!["t".to_string()];
    let mut series = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        header.push(format!("rx{}_step", i + 1));
        header.push(format!("rx{}_cum", i + 1));
        series.push(c.step_prob.clone());
        series.push(c.cumulative.clone());
    }
    Columns { header, series }
}

fn closed_columns(models: &[ClosedFormModel], g: &TimeGrid) -> Columns {
    let mut header = vec!["t".to_string()];
    let mut series = Vec::new();
    for (i, model) in models.iter().enumerate() {
        header.push(format!("rx{}_pdf", i + 1));
        header.push(format!("rx{}_cum", i + 1));
        series.push(g.end_times().map(|t| model.eval_pdf(t)).collect());
        series.push(g.end_times().map(|t| model.eval_cdf(t)).collect());
    }
    Columns { header, series }
}

fn write_columns(target: &Target, g: &TimeGrid, cols: &Columns) -> Result<()> {
    let rows = g.end_times().enumerate().map(|(k, t)| {
        let mut row = Vec::with_capacity(cols.series.len() + 1);
        row.push(t);
        row.extend(cols.series.iter().map(|s| s[k]));
        row
    });
    write_table(target, &cols.header, rows)
}

pub fn simo(
    topo: &TopologyArgs,
    model: ModelArg,
    eps: f64,
    grid: &GridArgs,
    out: Option<PathBuf>,
) -> Result<()> {
    let resolved = topo.resolve()?;
    let t = &resolved.topology;
    let g = grid_of(grid, mcvd_core::scenarios::DEFAULT_MODEL_DT)?;
    let mut m = Manifest::new("simo");
    describe_topology(&mut m, &resolved);
    describe_grid(&mut m, "", &g);
    m.set("model", model.kind(eps).name());

    let cols = match model {
        ModelArg::Recursive => discrete_columns(&recursive_nrx(t, &g)?),
        ModelArg::ApproxRecursive => discrete_columns(&approx_nrx(t, &g)?),
        ModelArg::Closed | ModelArg::Approx => {
            if t.len() == 2 {
                let roc = roc_check(t)?;
                m.set("loop_gain", roc.loop_gain);
            }
            let models = (0..t.len())
                .map(|i| match model {
                    ModelArg::Closed => build_series(t, i, eps),
                    _ => approx_model(t, i),
                })
                .collect::<mcvd_core::Result<Vec<_>>>()?;
            if model == ModelArg::Closed {
                m.set("truncation_eps", eps);
                for (i, s) in models.iter().enumerate() {
                    m.set(&format!("rx{}_series_terms", i + 1), s.terms.len());
                }
            }
            closed_columns(&models, &g)
        }
    };
    let target = Target::resolve(out.as_deref(), "simo.csv");
    write_columns(&target, &g, &cols)?;
    m.set("columns", cols.header.join(","));
    m.set("output", target.describe());
    m.write_for(&target)
}

pub struct SimulateArgs<'a> {
    pub topology: &'a TopologyArgs,
    pub n_molecules: usize,
    pub dt: f64,
    pub horizon: f64,
    pub curve_dt: Option<f64>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub leap: bool,
    pub records: Option<PathBuf>,
    pub heatmap: Option<String>,
    pub heatmap_out: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// `rx=K bins=M` with K counted from 1.
fn parse_heatmap_spec(s: &str, n_rx: usize) -> Result<(usize, usize)> {
    let mut rx = None;
    let mut bins = None;
    for part in s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|p| !p.is_empty())
    {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| InputError(format!("heatmap option '{part}' is not key=value")))?;
        let v: usize = v
            .parse()
            .map_err(|_| InputError(format!("heatmap {k} needs an integer, got '{v}'")))?;
        match k {
            "rx" => rx = Some(v),
            "bins" => bins = Some(v),
            _ => bail!(InputError(format!("unknown heatmap option '{k}'"))),
        }
    }
    let rx = rx.unwrap_or(1);
    if rx == 0 || rx > n_rx {
        bail!(InputError(format!("heatmap rx={rx} outside 1..={n_rx}")));
    }
    let bins = bins.unwrap_or(18);
    if bins == 0 {
        bail!(InputError("heatmap needs at least one bin".into()));
    }
    Ok((rx, bins))
}

fn sibling(target: &Target, suffix: &str) -> PathBuf {
    match target {
        Target::File(p) => {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "simulate".into());
            p.with_file_name(format!("{stem}{suffix}"))
        }
        Target::Stdout => match Target::resolve(None, &format!("simulate{suffix}")) {
            Target::File(p) => p,
            Target::Stdout => unreachable!("default targets are files"),
        },
    }
}

pub fn simulate(a: SimulateArgs<'_>) -> Result<()> {
    let resolved = a.topology.resolve()?;
    let t = &resolved.topology;
    let mut config = SimConfig::new(a.n_molecules, a.dt, a.horizon, a.seed)
        .with_curve_dt(
            a.curve_dt
                .unwrap_or(mcvd_core::scenarios::DEFAULT_MODEL_DT.max(a.dt)),
        )
        .with_leap(a.leap);
    config.threads = a.threads;
    let heat = a
        .heatmap
        .as_deref()
        .map(|s| parse_heatmap_spec(s, t.len()))
        .transpose()?;

    let outcome = run_simulation(t, &config)?;
    let curve_grid = config.curve_grid()?;
    let target = Target::resolve(a.out.as_deref(), "simulate.csv");
    write_columns(&target, &curve_grid, &discrete_columns(&outcome.curves))?;

    let mut m = Manifest::new("simulate");
    describe_topology(&mut m, &resolved);
    m.set("molecules", a.n_molecules)
        .set("seed", a.seed)
        .set("leap", a.leap);
    describe_grid(&mut m, "sim_", &config.sim_grid()?);
    describe_grid(&mut m, "curve_", &curve_grid);
    m.set("rng", "ChaCha8, stream = molecule id");
    for i in 0..t.len() {
        m.set(&format!("rx{}_hits", i + 1), outcome.hits_of(i).count());
    }
    m.set(
        "surviving",
        outcome.surviving.last().copied().unwrap_or(a.n_molecules as u64),
    );
    m.set("output", target.describe());

    if let Some(path) = &a.records {
        let f = create(path)?;
        write_records_csv(&outcome.records, std::io::BufWriter::new(f))
            .map_err(|e| OutputError(format!("writing {}: {e}", path.display())))?;
        m.set("records", path.display());
    }
    if let Some((rx, bins)) = heat {
        let h = heatmap(&outcome.records, t, rx - 1, bins)?;
        let path = a
            .heatmap_out
            .clone()
            .unwrap_or_else(|| sibling(&target, &format!("_heatmap_rx{rx}.csv")));
        let f = create(&path)?;
        h.write_csv(std::io::BufWriter::new(f))
            .map_err(|e| OutputError(format!("writing {}: {e}", path.display())))?;
        m.set("heatmap", path.display());
        m.set("heatmap_rx", rx).set("heatmap_bins", bins);
    }
    m.write_for(&target)
}

/// A curve CSV: the `t` column and every cumulative column.
struct CurveTable {
    times: Vec<f64>,
    columns: Vec<(String, Vec<f64>)>,
}

fn is_cumulative(name: &str) -> bool {
    name == "cdf" || name.ends_with("_cum")
}

fn read_curves(path: &Path) -> Result<CurveTable> {
    let file =
        std::fs::File::open(path).map_err(|e| OutputError(format!("cannot open {}: {e}", path.display())))?;
    let mut r = csv::Reader::from_reader(file);
    let bad = |msg: String| InputError(format!("{}: {msg}", path.display()));
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let t_col = header
        .iter()
        .position(|h| h == "t")
        .ok_or_else(|| bad("no `t` column".into()))?;
    let cum: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| is_cumulative(h))
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    if cum.is_empty() {
        bail!(bad("no cumulative (`cdf` or `*_cum`) columns".into()));
    }
    let mut times = Vec::new();
    let mut columns: Vec<(String, Vec<f64>)> = cum.iter().map(|(_, h)| (h.clone(), Vec::new())).collect();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: column {} is not a number", line + 2, i + 1)).into())
        };
        times.push(num(t_col)?);
        for ((i, _), (_, values)) in cum.iter().zip(columns.iter_mut()) {
            values.push(num(*i)?);
        }
    }
    Ok(CurveTable { times, columns })
}

/// Recovers the uniform grid `t_k = (k + 1) dt` behind a time column.
fn grid_from_times(times: &[f64], path: &Path) -> Result<TimeGrid> {
    let Some(&first) = times.first() else {
        bail!(InputError(format!("{}: no rows", path.display())));
    };
    let uniform = times
        .iter()
        .enumerate()
        .all(|(k, &t)| (t - (k + 1) as f64 * first).abs() <= 1e-9 * t.abs().max(1.0));
    if !uniform {
        bail!(InputError(format!(
            "{}: time column is not a uniform grid starting at dt",
            path.display()
        )));
    }
    Ok(TimeGrid::new(first, times.len())?)
}

pub fn compare(a: &Path, b: &Path, resample: bool, out: Option<PathBuf>) -> Result<()> {
    let ta = read_curves(a)?;
    let tb = read_curves(b)?;
    let ga = grid_from_times(&ta.times, a)?;
    let gb = grid_from_times(&tb.times, b)?;
    let target = Target::resolve(out.as_deref(), "compare.csv");

    let mut rows = Vec::new();
    for (name, va) in &ta.columns {
        let Some((_, vb)) = tb.columns.iter().find(|(n, _)| n == name) else {
            continue;
        };
        let ca = HittingCurve::from_cumulative(ga, va.clone());
        let cb = HittingCurve::from_cumulative(gb, vb.clone());
        let cmp = if resample {
            compare_curves(&ca, &resample_curve(&cb, &ga)?)?
        } else if ta.times == tb.times {
            compare_samples(va, vb)?
        } else {
            compare_curves(&ca, &cb)?
        };
        rows.push((name.clone(), cmp));
    }
    if rows.is_empty() {
        bail!(InputError(format!(
            "{} and {} share no cumulative column",
            a.display(),
            b.display()
        )));
    }

    let sink = target.open()?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    let io = |e: csv::Error| OutputError(format!("writing {}: {e}", target.describe()));
    w.write_record(["column", "rms", "max_abs", "pearson", "n_points"])
        .map_err(io)?;
    for (name, c) in &rows {
        w.write_record([
            name.clone(),
            csv_number(c.rms),
            csv_number(c.max_abs),
            csv_number(c.pearson),
            c.n_points.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| OutputError(e.to_string()))?;

    let mut m = Manifest::new("compare");
    m.set("a", a.display())
        .set("b", b.display())
        .set("resample", resample);
    describe_grid(&mut m, "", &ga);
    m.set("metric_basis", "cumulative fraction curves");
    m.set("output", target.describe());
    m.write_for(&target)
}

pub struct SweepArgs<'a> {
    pub topology: &'a TopologyArgs,
    pub angles: &'a str,
    pub model: ModelKind,
    pub mc: &'a str,
    pub curve_dt: f64,
    pub horizon: f64,
    pub eclipse_rows: bool,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

struct McSettings {
    molecules: usize,
    dt: f64,
    seed: u64,
}

/// `N=5e4,dt=1e-4,seed=1`; separators may be commas or spaces.
fn parse_mc(s: &str) -> Result<McSettings> {
    let mut mc = McSettings {
        molecules: mcvd_core::scenarios::DEFAULT_MOLECULES,
        dt: mcvd_core::scenarios::DEFAULT_SIM_DT,
        seed: 1,
    };
    for part in s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|p| !p.is_empty())
    {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| InputError(format!("--mc option '{part}' is not key=value")))?;
        let num: f64 = v
            .parse()
            .map_err(|_| InputError(format!("--mc {k} needs a number, got '{v}'")))?;
        match k {
            "N" | "n" => {
                if !(num >= 1.0 && num.fract() == 0.0) {
                    bail!(InputError(format!("--mc N must be a positive integer, got {v}")));
                }
                mc.molecules = num as usize;
            }
            "dt" => mc.dt = num,
            "seed" => {
                if !(num >= 0.0 && num.fract() == 0.0) {
                    bail!(InputError(format!(
                        "--mc seed must be a nonnegative integer, got {v}"
                    )));
                }
                mc.seed = num as u64;
            }
            _ => bail!(InputError(format!("unknown --mc option '{k}'"))),
        }
    }
    Ok(mc)
}

pub fn sweep(a: SweepArgs<'_>) -> Result<()> {
    if a.topology.angle.is_some() {
        bail!(InputError("sweep takes --angles, not --angle".into()));
    }
    if !a.topology.rx.is_empty() {
        bail!(InputError(
            "sweep needs a planar layout: --scenario, --planar or --preset fig23".into()
        ));
    }
    let Some((spec, source)) = a.topology.planar_base()? else {
        bail!(InputError(
            "sweep needs a planar layout: --scenario, --planar or --preset fig23".into()
        ));
    };
    let mc = parse_mc(a.mc)?;
    let mut config = SimConfig::new(mc.molecules, mc.dt, a.horizon, mc.seed).with_curve_dt(a.curve_dt);
    config.threads = a.threads;
    config.validate()?;

    let mut angles = parse_angles(a.angles)?;
    if let Some(bad) = angles.iter().find(|d| !(0.0..=180.0).contains(*d)) {
        bail!(InputError(format!("separation angle {bad} deg outside [0, 180]")));
    }
    let half = half_eclipse_angle(&spec).to_degrees();
    let none = no_eclipse_angle(&spec).to_degrees();
    if a.eclipse_rows {
        angles.extend([half, none]);
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    let radians: Vec<f64> = angles.iter().map(|d| (d.to_radians()).min(PI)).collect();

    let rows = angle_sweep(&spec, &radians, a.model, &config);
    let target = Target::resolve(a.out.as_deref(), "sweep.csv");
    let failed = {
        let sink = target.open()?;
        write_sweep_csv(&rows, sink)
            .map_err(|e| OutputError(format!("writing {}: {e}", target.describe())))?
    };
    for row in &failed {
        if let Err(e) = &row.result {
            warn!("angle {} deg skipped: {e}", row.angle.to_degrees());
        }
    }

    let mut m = Manifest::new("sweep");
    m.set("topology_source", source);
    m.set("r1_um", spec.r1)
        .set("r2_um", spec.r2)
        .set("r01_um", spec.r01)
        .set("r02_um", spec.r02);
    m.set("diffusion_um2_per_s", spec.diffusion);
    m.set("model", a.model.name());
    if let ModelKind::Closed { eps } = a.model {
        m.set("truncation_eps", eps);
    }
    m.set("mc_molecules", mc.molecules)
        .set("mc_dt_s", mc.dt)
        .set("mc_seed", mc.seed);
    describe_grid(&mut m, "rms_", &config.curve_grid()?);
    m.set("metric_basis", "cumulative fraction curves");
    m.set("half_eclipse_deg", half).set("no_eclipse_deg", none);
    if a.eclipse_rows {
        m.set("marked_rows", format!("half-eclipse@{half},no-eclipse@{none}"));
    }
    m.set(
        "failed_angles_deg",
        failed
            .iter()
            .map(|r| r.angle.to_degrees().to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    m.set("output", target.describe());
    m.write_for(&target)?;

    if failed.len() == rows.len() {
        let first = rows
            .into_iter()
            .find_map(|r| r.result.err())
            .expect("every row failed");
        return Err(first).context("no separation angle could be evaluated");
    }
    Ok(())
}

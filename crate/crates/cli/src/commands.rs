use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use intervaldyn::classifier::{classify_attractors, critical_order, ClassifyConfig};
use intervaldyn::induction::{
    expansion_analysis, find_nice_interval, first_return, measure_distortion, refine_partition, InductionError,
};
use intervaldyn::mane::{mane_certificate, ManeConfig, ManeError};
use intervaldyn::map::validate_nonflat;
use intervaldyn::orbit::{find_periodic_points, orbit};
use intervaldyn::report::to_json;
use intervaldyn::{build_map, Interval, MapSpec, PiecewiseMap};

use crate::svg;
use crate::{Command, Common};

/// Distortion probes per branch.
const PROBES: usize = 16;

/// Cap on refined-partition cells.
const MAX_CELLS: f64 = 1e6;

/// Return-map branches narrower than this fraction of `J` are left out of the plot.
const PLOT_MIN_WIDTH: f64 = 1e-4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Compute(m) => f.write_str(m),
        }
    }
}

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalList(pub Vec<Interval>);

fn parse_numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect()
}

pub fn parse_interval(s: &str) -> Result<Interval, String> {
    match parse_numbers(s)?[..] {
        [a, b] if a < b => Ok(Interval::new(a, b)),
        [_, _] => Err("interval needs a < b".into()),
        _ => Err("expected a,b".into()),
    }
}

pub fn parse_intervals(s: &str) -> Result<IntervalList, String> {
    let v = parse_numbers(s)?;
    if v.is_empty() || v.len() % 2 != 0 {
        return Err("expected an even number of values a,b[,a2,b2...]".into());
    }
    let out: Vec<Interval> = v.chunks(2).map(|c| Interval::new(c[0], c[1])).collect();
    if out.iter().any(|iv| !(iv.lo < iv.hi)) {
        return Err("every interval needs a < b".into());
    }
    Ok(IntervalList(out))
}

fn load(common: &Common) -> Result<(MapSpec, PiecewiseMap), CliError> {
    let spec = MapSpec::from_file(&common.map).map_err(|e| CliError::Config(e.to_string()))?;
    let m = build_map(&spec).map_err(|e| CliError::Config(format!("{}: {e}", common.map.display())))?;
    fs::create_dir_all(&common.out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", common.out.display())))?;
    Ok((spec, m))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Compute(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    write(dir, name, &to_json(value).map_err(compute)?)
}

fn config(cond: bool, msg: &str) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Analyze { common, grid, period_max } => analyze(&common, grid, period_max),
        Command::Classify {
            common,
            samples,
            seed,
            burn_in,
            length,
            resolution,
            period_max,
            horizon,
        } => {
            let cfg = ClassifyConfig {
                samples,
                seed,
                burn_in,
                length,
                resolution,
                period_max,
            };
            classify(&common, &cfg, horizon)
        }
        Command::ReturnMap {
            common,
            j,
            p,
            delta,
            t_max,
            depth,
        } => return_map(&common, j, p, delta, t_max, depth),
        Command::Mane {
            common,
            avoid,
            period_max,
            samples,
            nmax,
            seed,
        } => {
            let cfg = ManeConfig {
                period_max,
                samples,
                n_max: nmax,
                seed,
            };
            mane(&common, &avoid.0, &cfg)
        }
        Command::Plot { common, x, n } => plot(&common, x, n),
    }
}

#[derive(Serialize)]
struct BranchSummary {
    domain: Interval,
    expr: String,
    orientation: f64,
    nonlinearity: f64,
    min_abs_derivative: f64,
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    command: &'static str,
    map: &'a MapSpec,
    branches: Vec<BranchSummary>,
    exceptional: &'a [f64],
    lateral_values: &'a [intervaldyn::map::LateralValue],
    validation: intervaldyn::map::ValidationReport,
    period_max: usize,
    periodic_points: Vec<intervaldyn::orbit::PeriodicPoint>,
}

fn analyze(common: &Common, grid: usize, period_max: usize) -> Result<(), CliError> {
    config((2..=1 << 20).contains(&grid), "--grid must be between 2 and 2^20")?;
    config((1..=12).contains(&period_max), "--period-max must be between 1 and 12")?;
    let (spec, m) = load(common)?;
    let validation = validate_nonflat(&m, grid).map_err(compute)?;
    let periodic_points = find_periodic_points(&m, period_max, 1e-9).map_err(compute)?;
    let report = AnalyzeReport {
        command: "analyze",
        map: &spec,
        branches: m
            .branches()
            .iter()
            .map(|b| BranchSummary {
                domain: b.domain,
                expr: b.source.clone(),
                orientation: b.orientation,
                nonlinearity: b.nonlinearity,
                min_abs_derivative: b.min_abs_derivative,
            })
            .collect(),
        exceptional: m.exceptional(),
        lateral_values: m.lateral_values(),
        validation,
        period_max,
        periodic_points,
    };
    write_json(&common.out, "report.json", &report)
}

#[derive(Serialize)]
struct ClassifyReport<'a> {
    command: &'static str,
    map: &'a MapSpec,
    config: &'a ClassifyConfig,
    classification: intervaldyn::classifier::Classification,
    report_bound: usize,
    critical_order: intervaldyn::classifier::CriticalOrder,
}

fn classify(common: &Common, cfg: &ClassifyConfig, horizon: usize) -> Result<(), CliError> {
    config(cfg.samples >= 100, "--samples must be at least 100")?;
    config(cfg.length >= 10_000, "--length must be at least 1e4")?;
    config(cfg.burn_in + cfg.length <= 10_000_000, "--burn-in plus --length must not exceed 1e7")?;
    config(cfg.resolution >= 1e-6 && cfg.resolution < 1.0, "--resolution must lie in [1e-6, 1)")?;
    config((1..=12).contains(&cfg.period_max), "--period-max must be between 1 and 12")?;
    config(horizon >= 10_000, "--horizon must be at least 1e4")?;
    let (spec, m) = load(common)?;
    let classification = classify_attractors(&m, cfg).map_err(compute)?;
    let order = critical_order(&m, horizon, cfg.resolution).map_err(compute)?;
    let rows: Vec<(String, Vec<Interval>)> = classification
        .reports
        .iter()
        .map(|r| {
            (
                format!("{} {:.3}", r.kind.name(), r.basin_fraction),
                r.cover.cells.clone(),
            )
        })
        .collect();
    write(&common.out, "cover.svg", &svg::strips(m.ambient(), &rows))?;
    let report = ClassifyReport {
        command: "classify",
        map: &spec,
        config: cfg,
        report_bound: classification.report_bound(&m),
        classification,
        critical_order: order,
    };
    write_json(&common.out, "report.json", &report)
}

#[derive(Serialize)]
struct PartitionSummary {
    requested_depth: usize,
    depth: usize,
    cells: usize,
    max_diameter: f64,
    max_distortion: f64,
}

#[derive(Serialize)]
struct ReturnMapReport<'a> {
    command: &'static str,
    map: &'a MapSpec,
    base: Interval,
    t_max: usize,
    branches: usize,
    coverage: f64,
    dropped: f64,
    full_markov: bool,
    markov_failures: usize,
    probe_failures: usize,
    min_time: Option<usize>,
    distortion: f64,
    expansion: Option<intervaldyn::induction::ExpansionReport>,
    expansion_error: Option<String>,
    partition: PartitionSummary,
}

fn return_map(
    common: &Common,
    j: Option<Interval>,
    p: Option<f64>,
    delta: f64,
    t_max: usize,
    depth: usize,
) -> Result<(), CliError> {
    config((1..=100_000).contains(&t_max), "--t-max must be between 1 and 1e5")?;
    config(depth <= 8, "--depth must be at most 8")?;
    let (spec, m) = load(common)?;
    let base = match (j, p) {
        (Some(j), None) => {
            config(m.ambient().contains_interval(&j), "--j must lie inside the ambient interval")?;
            j
        }
        (None, Some(p)) => match find_nice_interval(&m, p, delta, 1000) {
            Ok(Some(j)) => j,
            Ok(None) => return Err(CliError::Compute(format!("no nice interval found within {delta} of {p}"))),
            Err(InductionError::InvalidArgument(msg)) => return Err(CliError::Config(msg)),
            Err(e) => return Err(compute(e)),
        },
        _ => return Err(CliError::Config("give exactly one of --j or --p".into())),
    };
    let ind = first_return(&m, base, t_max).map_err(compute)?;
    let distortion = if ind.branches.is_empty() { 1.0 } else { measure_distortion(&m, &ind, PROBES) };
    let (expansion, expansion_error) = match expansion_analysis(&m, &ind) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let nb = ind.branches.len().max(1) as f64;
    let used = (0..=depth).rev().find(|&n| nb.powi(n as i32 + 1) <= MAX_CELLS).unwrap_or(0);
    let partition = refine_partition(&m, &ind, used).map_err(compute)?;

    let mut csv = String::from("index,lo,hi,time,orientation,image_lo,image_hi\n");
    for (i, b) in ind.branches.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{i},{:e},{:e},{},{},{:e},{:e}",
            b.domain.lo, b.domain.hi, b.time, b.orientation, b.image.lo, b.image.hi
        );
    }
    write(&common.out, "branches.csv", &csv)?;

    let mut plot = svg::Plot::new(base, base, &format!("first return to ({}, {})", base.lo, base.hi));
    plot.polyline(&[(base.lo, base.lo), (base.hi, base.hi)], "lightgray", 1.0);
    for b in ind.branches.iter().filter(|b| b.domain.len() >= PLOT_MIN_WIDTH * base.len()) {
        let pts: Vec<(f64, f64)> = (1..16)
            .map(|k| b.domain.at(k as f64 / 16.0))
            .filter_map(|x| Some((x, b.eval(&m, x).ok()?)))
            .collect();
        plot.polyline(&pts, "steelblue", 1.0);
    }
    write(&common.out, "return_map.svg", &plot.finish())?;

    let report = ReturnMapReport {
        command: "return-map",
        map: &spec,
        base,
        t_max,
        branches: ind.branches.len(),
        coverage: ind.coverage,
        dropped: ind.dropped,
        full_markov: ind.full_markov(),
        markov_failures: ind.markov_failures,
        probe_failures: ind.probe_failures,
        min_time: ind.min_time(),
        distortion,
        expansion,
        expansion_error,
        partition: PartitionSummary {
            requested_depth: depth,
            depth: used,
            cells: partition.cells.len(),
            max_diameter: partition.max_diameter,
            max_distortion: partition.max_distortion,
        },
    };
    write_json(&common.out, "report.json", &report)
}

fn mane(common: &Common, u: &[Interval], cfg: &ManeConfig) -> Result<(), CliError> {
    config(cfg.samples >= 1, "--samples must be positive")?;
    config((1..=100_000).contains(&cfg.n_max), "--nmax must be between 1 and 1e5")?;
    config((1..=12).contains(&cfg.period_max), "--period-max must be between 1 and 12")?;
    let (_, m) = load(common)?;
    let cert = match mane_certificate(&m, u, cfg) {
        Ok(c) => c,
        Err(e @ (ManeError::UNotCovering { .. } | ManeError::InvalidArgument(_))) => {
            return Err(CliError::Config(e.to_string()))
        }
        Err(e) => return Err(compute(e)),
    };
    write_json(&common.out, "certificate.json", &cert)
}

fn plot(common: &Common, x: f64, n: usize) -> Result<(), CliError> {
    config(n <= 100_000, "--n must be at most 1e5")?;
    let (_, m) = load(common)?;
    config(m.contains(x), "--x must lie in the ambient interval")?;
    let seg = orbit(&m, x, n).map_err(compute)?;

    let mut csv = String::from("k,x,log_abs_derivative\n");
    for (k, (x, d)) in seg.iterates.iter().zip(&seg.log_deriv_prefix).enumerate() {
        let _ = writeln!(csv, "{k},{x:e},{d:e}");
    }
    write(&common.out, "orbit.csv", &csv)?;

    let amb = m.ambient();
    let mut p = svg::Plot::new(amb, amb, &format!("cobweb from x = {x}, {} steps", seg.iterates.len() - 1));
    p.polyline(&[(amb.lo, amb.lo), (amb.hi, amb.hi)], "lightgray", 1.0);
    for b in m.branches() {
        let pts: Vec<(f64, f64)> = (1..256)
            .map(|k| b.domain.at(k as f64 / 256.0))
            .filter_map(|x| Some((x, b.eval(x).ok()?)))
            .collect();
        p.polyline(&pts, "black", 1.5);
    }
    let mut path = vec![(seg.iterates[0], seg.iterates[0])];
    for w in seg.iterates.windows(2) {
        path.push((w[0], w[1]));
        path.push((w[1], w[1]));
    }
    p.polyline(&path, "firebrick", 0.8);
    write(&common.out, "cobweb.svg", &p.finish())
}

//! Configuration-driven experiment runner: single simulations, convergence
//! sweeps, CSV reports and plain-text field snapshots.
//!
//! Config files are flat `key = value` lines with `#` comments:
//!
//! ```text
//! problem     = circle          # circle | star5 | star3 | nonsmooth
//! order       = 4               # 2 | 4
//! degree      = 3               # correction polynomial degree
//! h           = 1/20, 1/28, 1/40
//! cfl         = 0.5             # dt = cfl * h
//! t_final     = 0.5
//! out_dir     = out
//! snapshots   = 0.25, 0.5       # written by `run`
//! corrections = on
//! divergence  = on
//! ```

use crate::diagnostics::{pairwise_orders, ConvergenceReport, ReportRow};
use crate::error::{Error, Result};
use crate::fdtd::{run, RunOptions, SchemeConfig};
use crate::grid::{FieldSet, Family, GridSpec};
use crate::problems::{make_problem, Physics};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Experiment description; defaults mirror the reference setup on the unit
/// square with T = 0.5, mu = eps = sigma = 1 and dt = h/2.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: String,
    pub order: usize,
    pub degree: usize,
    /// grid resolutions as cells per unit length (h = 1/n)
    pub ns: Vec<usize>,
    pub cfl: f64,
    pub t_final: f64,
    pub out_dir: PathBuf,
    pub snapshots: Vec<f64>,
    pub corrections: bool,
    pub divergence: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "circle".into(),
            order: 4,
            degree: 3,
            ns: vec![20, 28, 40, 52, 72, 96, 132, 180, 244, 336],
            cfl: 0.5,
            t_final: 0.5,
            out_dir: PathBuf::from("out"),
            snapshots: Vec::new(),
            corrections: true,
            divergence: true,
        }
    }
}

fn parse_bool(v: &str, line: usize) -> Result<bool> {
    match v {
        "on" | "true" | "1" | "yes" => Ok(true),
        "off" | "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("line {line}: expected on/off, got `{v}`"))),
    }
}

/// Parse one h entry: `1/20`, `20`, or `0.05` all mean 20 cells per unit.
fn parse_h(v: &str, line: usize) -> Result<usize> {
    let bad = || Error::Config(format!("line {line}: bad h entry `{v}`"));
    if let Some(den) = v.strip_prefix("1/") {
        return den.trim().parse::<usize>().map_err(|_| bad());
    }
    if let Ok(n) = v.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = v.parse().map_err(|_| bad())?;
    if x <= 0.0 || x > 0.5 {
        return Err(bad());
    }
    let n = (1.0 / x).round();
    if ((1.0 / x) - n).abs() > 1e-9 {
        return Err(bad());
    }
    Ok(n as usize)
}

/// Parse a flat key-value config. Unknown keys and malformed values are
/// reported with their line number.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`")))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "problem" => cfg.problem = value.to_string(),
            "order" => {
                cfg.order = value
                    .parse()
                    .map_err(|_| Error::Config(format!("line {line}: bad order `{value}`")))?;
                if cfg.order != 2 && cfg.order != 4 {
                    return Err(Error::Config(format!("line {line}: order must be 2 or 4")));
                }
            }
            "degree" => {
                cfg.degree = value
                    .parse()
                    .map_err(|_| Error::Config(format!("line {line}: bad degree `{value}`")))?;
            }
            "h" => {
                cfg.ns = value
                    .split(',')
                    .map(|v| parse_h(v.trim(), line))
                    .collect::<Result<Vec<_>>>()?;
                if cfg.ns.is_empty() {
                    return Err(Error::Config(format!("line {line}: empty h list")));
                }
            }
            "cfl" => {
                cfg.cfl = value
                    .parse()
                    .map_err(|_| Error::Config(format!("line {line}: bad cfl `{value}`")))?;
                if cfg.cfl <= 0.0 {
                    return Err(Error::Config(format!("line {line}: cfl must be positive")));
                }
            }
            "t_final" => {
                cfg.t_final = value
                    .parse()
                    .map_err(|_| Error::Config(format!("line {line}: bad t_final `{value}`")))?;
            }
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            "snapshots" => {
                cfg.snapshots = value
                    .split(',')
                    .filter(|v| !v.trim().is_empty())
                    .map(|v| {
                        v.trim().parse::<f64>().map_err(|_| {
                            Error::Config(format!("line {line}: bad snapshot time `{v}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
            }
            "corrections" => cfg.corrections = parse_bool(value, line)?,
            "divergence" => cfg.divergence = parse_bool(value, line)?,
            other => {
                return Err(Error::Config(format!("line {line}: unknown key `{other}`")));
            }
        }
    }
    if let Ok(dir) = std::env::var("CFM_OUT_DIR") {
        if !dir.is_empty() {
            cfg.out_dir = PathBuf::from(dir);
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn scheme_for(cfg: &RunConfig, n: usize, physics: Physics) -> (GridSpec, SchemeConfig) {
    let grid = GridSpec::unit_square(n);
    let scheme = SchemeConfig {
        order: cfg.order,
        dt: cfg.cfl * grid.h(),
        physics,
        degree: cfg.degree,
    };
    (grid, scheme)
}

/// Run one grid of the sweep.
fn run_one(cfg: &RunConfig, n: usize, snapshots: Vec<f64>) -> Result<(ReportRow, crate::fdtd::RunOutput)> {
    let problem = make_problem(&cfg.problem)?;
    let (grid, scheme) = scheme_for(cfg, n, problem.physics);
    let opts = RunOptions {
        corrections: cfg.corrections,
        track_divergence: cfg.divergence,
        snapshots,
    };
    let out = run(&problem, &grid, &scheme, cfg.t_final, opts)?;
    let row = ReportRow {
        h: grid.h(),
        dt: scheme.dt,
        linf: out.linf,
        l1: out.l1,
        div_linf: out.div_linf,
        div_l1: out.div_l1,
    };
    Ok((row, out))
}

/// Text of one float with 17 significant digits (round-trip exact for f64).
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serialize a convergence report; fitted orders go in a trailing comment
/// block so the CSV stays machine-readable.
pub fn csv_text(report: &ConvergenceReport) -> String {
    let mut s = String::new();
    s.push_str("h,dt,Linf_Hx,L1_Hx,Linf_Hy,L1_Hy,Linf_Ez,L1_Ez,Linf_divH,L1_divH\n");
    for r in &report.rows {
        let cols = [
            r.h, r.dt, r.linf[0], r.l1[0], r.linf[1], r.l1[1], r.linf[2], r.l1[2], r.div_linf,
            r.div_l1,
        ];
        let line: Vec<String> = cols.iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    let f = &report.fitted;
    let _ = writeln!(s, "# fitted orders (least-squares slope of log error vs log h)");
    let _ = writeln!(
        s,
        "# Linf_Hx={:.4} L1_Hx={:.4} Linf_Hy={:.4} L1_Hy={:.4} Linf_Ez={:.4} L1_Ez={:.4}",
        f.linf[0], f.l1[0], f.linf[1], f.l1[1], f.linf[2], f.l1[2]
    );
    let _ = writeln!(s, "# Linf_divH={:.4} L1_divH={:.4}", f.div_linf, f.div_l1);
    let hs: Vec<f64> = report.rows.iter().map(|r| r.h).collect();
    let ez: Vec<f64> = report.rows.iter().map(|r| r.l1[2]).collect();
    if hs.len() >= 2 {
        let pw: Vec<String> = pairwise_orders(&hs, &ez)
            .iter()
            .map(|p| format!("{p:.4}"))
            .collect();
        let _ = writeln!(s, "# pairwise L1_Ez orders: {}", pw.join(", "));
    }
    s
}

/// Convergence sweep over the configured h list; writes
/// `<out_dir>/<problem>_order<order>.csv` and returns the report.
pub fn run_convergence(cfg: &RunConfig) -> Result<(ConvergenceReport, PathBuf)> {
    make_problem(&cfg.problem)?; // validate the id before spawning work
    let rows: Result<Vec<ReportRow>> = cfg
        .ns
        .par_iter()
        .map(|&n| run_one(cfg, n, Vec::new()).map(|(row, _)| row))
        .collect();
    let report = ConvergenceReport::from_rows(rows?)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg
        .out_dir
        .join(format!("{}_order{}.csv", cfg.problem, cfg.order));
    std::fs::write(&path, csv_text(&report))?;
    Ok((report, path))
}

/// Single simulation on the first configured h; writes snapshots and a
/// one-row CSV summary.
pub fn run_single(cfg: &RunConfig) -> Result<(ReportRow, Vec<PathBuf>)> {
    let n = *cfg
        .ns
        .first()
        .ok_or_else(|| Error::Config("empty h list".into()))?;
    let (row, out) = run_one(cfg, n, cfg.snapshots.clone())?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut written = Vec::new();
    let grid = GridSpec::unit_square(n);
    for fields in &out.snapshots {
        let path = cfg.out_dir.join(format!(
            "{}_order{}_n{}_t{:.6}.snap",
            cfg.problem, cfg.order, n, fields.time
        ));
        write_snapshot(fields, &grid, &cfg.problem, cfg.order, &path)?;
        written.push(path);
    }
    let report = ConvergenceReport {
        rows: vec![row.clone()],
        fitted: crate::diagnostics::FittedOrders {
            linf: [0.0; 3],
            l1: [0.0; 3],
            div_linf: 0.0,
            div_l1: 0.0,
        },
    };
    let mut text = String::new();
    text.push_str("h,dt,Linf_Hx,L1_Hx,Linf_Hy,L1_Hy,Linf_Ez,L1_Ez,Linf_divH,L1_divH\n");
    let r = &report.rows[0];
    let cols = [
        r.h, r.dt, r.linf[0], r.l1[0], r.linf[1], r.l1[1], r.linf[2], r.l1[2], r.div_linf,
        r.div_l1,
    ];
    let line: Vec<String> = cols.iter().map(|v| fmt_f64(*v)).collect();
    text.push_str(&line.join(","));
    text.push('\n');
    let path = cfg
        .out_dir
        .join(format!("{}_order{}_n{}.csv", cfg.problem, cfg.order, n));
    std::fs::write(&path, text)?;
    written.push(path);
    Ok((row, written))
}

/// Plain-text field snapshot: one row per node with family, staggered-grid
/// indices, coordinates and value, all floats at 17 significant digits.
pub fn write_snapshot(
    fields: &FieldSet,
    grid: &GridSpec,
    problem: &str,
    order: usize,
    path: &Path,
) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# problem = {problem}");
    let _ = writeln!(s, "# scheme_order = {order}");
    let _ = writeln!(s, "# h = {}", fmt_f64(grid.h()));
    let _ = writeln!(s, "# t = {}", fmt_f64(fields.time));
    let _ = writeln!(s, "# columns = family i j x y value");
    for family in Family::ALL {
        let arr = fields.get(family);
        for r in 0..grid.nx {
            for c in 0..grid.ny {
                let (i, j) = grid.from_storage(family, r, c);
                let p = grid.storage_coords(family, r, c);
                let _ = writeln!(
                    s,
                    "{} {} {} {} {} {}",
                    family.name(),
                    i,
                    j,
                    fmt_f64(p.x),
                    fmt_f64(p.y),
                    fmt_f64(arr[(r, c)])
                );
            }
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Self-tests behind the `check` subcommand: the no-growth property of the
/// jump-PDE symbol over random draws, determinant residuals of the
/// closed-form eigenvalues, and the divergence-free basis dimensions.
pub fn self_check() -> Result<String> {
    use crate::basis::divfree_basis;
    use crate::diagnostics::{char_poly_residual, growth_check, spectrum, symbol_matrix};
    use rand::{Rng, SeedableRng};

    let mut log = String::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst_growth = f64::NEG_INFINITY;
    let mut worst_resid = 0.0_f64;
    for _ in 0..1000 {
        let k = [
            rng.gen_range(-6_i64..=6),
            rng.gen_range(-6..=6),
            rng.gen_range(-6..=6),
        ];
        let mu = rng.gen_range(0.1..4.0);
        let eps = rng.gen_range(0.1..4.0);
        let sigma = rng.gen_range(0.0..4.0);
        let a = symbol_matrix(k, mu, eps, sigma);
        worst_growth = worst_growth.max(growth_check(&a));
        for l in spectrum(&a) {
            worst_resid = worst_resid.max(char_poly_residual(&a, l));
        }
    }
    let _ = writeln!(log, "no-growth: max Re(lambda) over 1000 draws = {worst_growth:.3e}");
    let _ = writeln!(log, "eigenvalue det residual: max = {worst_resid:.3e}");
    if worst_growth > 1e-10 || worst_resid > 1e-10 {
        return Err(Error::Config("no-growth self-test failed".into()));
    }
    // the three closed-form eigenvalue cases
    let cases = [
        symbol_matrix([0, 0, 0], 1.0, 1.0, 2.0),  // k.k = 0
        symbol_matrix([1, 2, 0], 1.0, 1.0, (20.0_f64).sqrt()), // k.k = mu sigma^2 / (4 eps)
        symbol_matrix([3, -1, 2], 1.5, 0.8, 1.1), // generic
    ];
    for (i, a) in cases.iter().enumerate() {
        let r = spectrum(a)
            .iter()
            .map(|l| char_poly_residual(a, *l))
            .fold(0.0_f64, f64::max);
        let _ = writeln!(log, "case {}: det residual = {r:.3e}", i + 1);
        if r > 1e-10 {
            return Err(Error::Config(format!("case {} residual {r:.3e}", i + 1)));
        }
    }
    let mut rng2 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for k in 0..=6usize {
        let b = divfree_basis(k)?;
        if b.len() != (k + 1) * (k + 4) / 2 {
            return Err(Error::Config(format!("basis dimension wrong at k={k}")));
        }
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let xi = rng2.gen_range(-0.5..0.5);
            let eta = rng2.gen_range(-0.5..0.5);
            for m in &b.members {
                worst = worst.max(m.divergence(xi, eta).abs());
            }
        }
        if worst > 1e-13 {
            return Err(Error::Config(format!("basis divergence {worst:.3e} at k={k}")));
        }
        let _ = writeln!(log, "basis k={k}: dim = {}, max |div| = {worst:.1e}", b.len());
    }
    Ok(log)
}

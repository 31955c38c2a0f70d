//! Staggered spatial operators with correction lookups, the TM_z right-hand
//! side G, and the RK4 time stepper with Taylor-staged corrections.

use crate::cfm::{CfmEngine, CorrectionPoly, Patch, QuadSpec};
use crate::error::{Error, Result};
use crate::geometry::Side;
use crate::grid::{classify_nodes, FieldSet, Family, GridSpec, SideMasks};
use crate::problems::{Physics, Problem};
use ndarray::Array2;
use rayon::prelude::*;

/// Scheme parameters: spatial order, time step and physics.
#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    /// spatial order, 2 or 4
    pub order: usize,
    pub dt: f64,
    pub physics: Physics,
    /// correction polynomial degree (k = 3 by default)
    pub degree: usize,
}

/// Per-step staged correction values, one entry per corrected node (the
/// node's own field component), in the order of `SideMasks::corrected`.
/// `staged[i][s]` is the stage-(s+1) value D-hat_{s+1} at the node.
#[derive(Debug, Clone)]
pub struct CorrectionTable {
    pub staged: Vec<[f64; 4]>,
}

impl CorrectionTable {
    pub fn empty() -> Self {
        CorrectionTable { staged: Vec::new() }
    }
}

/// View of one RK stage of a correction table.
pub type StageView<'a> = (&'a CorrectionTable, usize);

/// Sample a field value for a stencil whose center lies on `target` side.
/// Same-side samples are returned raw; across the interface the jump
/// correction is added (target Plus) or subtracted (target Minus), using
/// D = (.)+ - (.)-. With `corr = None` corrections are disabled and the raw
/// value is returned.
pub fn corrected_sample(
    fields: &FieldSet,
    grid: &GridSpec,
    masks: &SideMasks,
    corr: Option<StageView>,
    family: Family,
    r: i64,
    c: i64,
    target: Side,
) -> Result<f64> {
    let (rw, cw) = grid.wrap_storage(r, c);
    let raw = fields.get(family)[(rw, cw)];
    let side = masks.side(family, rw, cw);
    if side == target {
        return Ok(raw);
    }
    match corr {
        None => Ok(raw),
        Some((table, stage)) => {
            let idx = masks.corrected_index(family, rw, cw).ok_or({
                let (i, j) = grid.from_storage(family, rw, cw);
                Error::MissingCorrection {
                    family: family.name(),
                    i,
                    j,
                }
            })?;
            let d = table.staged[idx][stage];
            Ok(match target {
                Side::Plus => raw + d,
                Side::Minus => raw - d,
            })
        }
    }
}

/// Stencil axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Centered first derivative of `sampled` along `axis`, evaluated at a node
/// of another family (storage index), with every sample routed through
/// [`corrected_sample`] using the evaluation node's side as target.
///
/// Supported layouts are the ones arising on the staggered grid:
/// d/dy Ez at Hx, d/dx Ez at Hy, d/dx Hy at Ez, d/dy Hx at Ez.
pub fn spatial_deriv(
    fields: &FieldSet,
    grid: &GridSpec,
    masks: &SideMasks,
    corr: Option<StageView>,
    sampled: Family,
    axis: Axis,
    at: (Family, usize, usize),
    order: usize,
) -> Result<f64> {
    let (fam_at, r, c) = at;
    let target = masks.side(fam_at, r, c);
    let (ri, ci) = (r as i64, c as i64);
    // index of the sample at half-cell offset o along the axis
    let base = |o: i64| -> (i64, i64) {
        match (fam_at, sampled, axis) {
            (Family::Hx, Family::Ez, Axis::Y) => (ri, ci + (o - 1) / 2),
            (Family::Hy, Family::Ez, Axis::X) => (ri + (o - 1) / 2, ci),
            (Family::Ez, Family::Hy, Axis::X) => (ri + (o + 1) / 2, ci),
            (Family::Ez, Family::Hx, Axis::Y) => (ri, ci + (o + 1) / 2),
            _ => panic!("stencil not aligned with the staggered layout"),
        }
    };
    let delta = match axis {
        Axis::X => grid.dx(),
        Axis::Y => grid.dy(),
    };
    let mut acc = 0.0;
    match order {
        2 => {
            for (o, w) in [(-1_i64, -1.0), (1, 1.0)] {
                let (rr, cc) = base(o);
                acc += w * corrected_sample(fields, grid, masks, corr, sampled, rr, cc, target)?;
            }
            Ok(acc / delta)
        }
        4 => {
            for (o, w) in [(-3_i64, 1.0), (-1, -27.0), (1, 27.0), (3, -1.0)] {
                let (rr, cc) = base(o);
                acc += w * corrected_sample(fields, grid, masks, corr, sampled, rr, cc, target)?;
            }
            Ok(acc / (24.0 * delta))
        }
        other => panic!("unsupported scheme order {other}"),
    }
}

/// The TM_z right-hand side G(t, U) on all three families, with sources
/// evaluated on each node's own side:
///   G_Hx = (f1x - dy Ez) / mu
///   G_Hy = (f1y + dx Ez) / mu
///   G_Ez = -sigma Ez + f2 + dx Hy - dy Hx
pub fn rhs_g(
    fields: &FieldSet,
    grid: &GridSpec,
    masks: &SideMasks,
    corr: Option<StageView>,
    problem: &Problem,
    t: f64,
    cfg: &SchemeConfig,
) -> Result<FieldSet> {
    let mut out = FieldSet::zeros(grid, t);
    let mu = cfg.physics.mu;
    let sigma = cfg.physics.sigma;
    let order = cfg.order;
    for r in 0..grid.nx {
        for c in 0..grid.ny {
            let side = masks.hx[(r, c)];
            let p = grid.storage_coords(Family::Hx, r, c);
            let f1x = (problem.side(side).f1x)(p.x, p.y, t);
            let dy_ez = spatial_deriv(
                fields,
                grid,
                masks,
                corr,
                Family::Ez,
                Axis::Y,
                (Family::Hx, r, c),
                order,
            )?;
            out.hx[(r, c)] = (f1x - dy_ez) / mu;
        }
    }
    for r in 0..grid.nx {
        for c in 0..grid.ny {
            let side = masks.hy[(r, c)];
            let p = grid.storage_coords(Family::Hy, r, c);
            let f1y = (problem.side(side).f1y)(p.x, p.y, t);
            let dx_ez = spatial_deriv(
                fields,
                grid,
                masks,
                corr,
                Family::Ez,
                Axis::X,
                (Family::Hy, r, c),
                order,
            )?;
            out.hy[(r, c)] = (f1y + dx_ez) / mu;
        }
    }
    for r in 0..grid.nx {
        for c in 0..grid.ny {
            let side = masks.ez[(r, c)];
            let p = grid.storage_coords(Family::Ez, r, c);
            let f2 = (problem.side(side).f2)(p.x, p.y, t);
            let dx_hy = spatial_deriv(
                fields,
                grid,
                masks,
                corr,
                Family::Hy,
                Axis::X,
                (Family::Ez, r, c),
                order,
            )?;
            let dy_hx = spatial_deriv(
                fields,
                grid,
                masks,
                corr,
                Family::Hx,
                Axis::Y,
                (Family::Ez, r, c),
                order,
            )?;
            let ez = fields.ez[(r, c)];
            out.ez[(r, c)] = -sigma * ez + f2 + dx_hy - dy_hx;
        }
    }
    Ok(out)
}

fn axpy(dst: &mut FieldSet, a: f64, src: &FieldSet) {
    dst.hx.zip_mut_with(&src.hx, |d, s| *d += a * s);
    dst.hy.zip_mut_with(&src.hy, |d, s| *d += a * s);
    dst.ez.zip_mut_with(&src.ez, |d, s| *d += a * s);
}

fn combo(u: &FieldSet, a: f64, k: &FieldSet, t: f64) -> FieldSet {
    let mut v = u.clone();
    axpy(&mut v, a, k);
    v.time = t;
    v
}

/// One classic RK4 step from t_n with staged corrections: stage s uses the
/// Taylor extrapolation D-hat_s anchored at t_n, and stage sources are
/// evaluated at t_n, t_n + dt/2, t_n + dt/2, t_n + dt.
pub fn rk4_step(
    fields: &FieldSet,
    t_n: f64,
    grid: &GridSpec,
    masks: &SideMasks,
    table: Option<&CorrectionTable>,
    problem: &Problem,
    cfg: &SchemeConfig,
) -> Result<FieldSet> {
    let dt = cfg.dt;
    let stage = |s: usize| table.map(|t| (t, s));
    let k1 = rhs_g(fields, grid, masks, stage(0), problem, t_n, cfg)?;
    let u2 = combo(fields, 0.5 * dt, &k1, t_n + 0.5 * dt);
    let k2 = rhs_g(&u2, grid, masks, stage(1), problem, t_n + 0.5 * dt, cfg)?;
    let u3 = combo(fields, 0.5 * dt, &k2, t_n + 0.5 * dt);
    let k3 = rhs_g(&u3, grid, masks, stage(2), problem, t_n + 0.5 * dt, cfg)?;
    let u4 = combo(fields, dt, &k3, t_n + dt);
    let k4 = rhs_g(&u4, grid, masks, stage(3), problem, t_n + dt, cfg)?;
    let mut out = fields.clone();
    let w = dt / 6.0;
    axpy(&mut out, w, &k1);
    axpy(&mut out, 2.0 * w, &k2);
    axpy(&mut out, 2.0 * w, &k3);
    axpy(&mut out, w, &k4);
    out.time = t_n + dt;
    Ok(out)
}

/// Sample the exact solution (each node's own side) into a field set.
pub fn exact_fields(problem: &Problem, grid: &GridSpec, masks: &SideMasks, t: f64) -> FieldSet {
    let mut u = FieldSet::zeros(grid, t);
    for family in Family::ALL {
        let arr = u.get_mut(family);
        for r in 0..grid.nx {
            for c in 0..grid.ny {
                let p = grid.storage_coords(family, r, c);
                let side = masks.side(family, r, c);
                arr[(r, c)] = problem.exact(family, side, p.x, p.y, t);
            }
        }
    }
    u
}

/// Solve all patches at anchor time t_n and evaluate the four stage values
/// at each corrected node.
pub fn build_correction_table(
    engine: &CfmEngine,
    patches: &[Patch],
    problem: &Problem,
    t_n: f64,
    dt: f64,
) -> Result<CorrectionTable> {
    let staged: Result<Vec<[f64; 4]>> = patches
        .par_iter()
        .map(|patch| {
            let cp = engine.fit(patch, problem, t_n);
            engine.staged_corrections(&cp, patch.node.family, patch.node_pos, dt)
        })
        .collect();
    Ok(CorrectionTable { staged: staged? })
}

/// Solve all patches at time t and keep the polynomials (diagnostics need
/// plain values rather than stage extrapolations).
pub fn fit_all(
    engine: &CfmEngine,
    patches: &[Patch],
    problem: &Problem,
    t_n: f64,
) -> Vec<CorrectionPoly> {
    patches
        .par_iter()
        .map(|patch| engine.fit(patch, problem, t_n))
        .collect()
}

/// Options for a full run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub corrections: bool,
    /// track the per-step drift of the discrete divergence at corners whose
    /// stencil stays on one side
    pub track_divergence: bool,
    /// capture field snapshots at the first step time reaching each entry
    pub snapshots: Vec<f64>,
}

impl RunOptions {
    pub fn standard() -> Self {
        RunOptions {
            corrections: true,
            track_divergence: true,
            snapshots: Vec::new(),
        }
    }
}

/// Everything a convergence study needs from one run.
pub struct RunOutput {
    pub fields: FieldSet,
    pub masks: SideMasks,
    /// (Linf, L1) errors for Hx, Hy, Ez at the final time
    pub linf: [f64; 3],
    pub l1: [f64; 3],
    /// norms of the corrected discrete divergence of H at the final time
    pub div_linf: f64,
    pub div_l1: f64,
    /// max over steps and single-sided corners of |div^n - div^0|
    pub single_sided_drift: f64,
    pub n_corrected: usize,
    /// captured states for each requested snapshot time, in request order
    pub snapshots: Vec<FieldSet>,
}

/// Advance the problem from exact initial data at t = 0 to `t_final` and
/// report error and divergence diagnostics.
pub fn run(
    problem: &Problem,
    grid: &GridSpec,
    cfg: &SchemeConfig,
    t_final: f64,
    opts: RunOptions,
) -> Result<RunOutput> {
    let masks = classify_nodes(grid, &problem.level_set, cfg.order);
    let n_steps = (t_final / cfg.dt).round() as usize;
    if ((n_steps as f64) * cfg.dt - t_final).abs() > 1e-9 * cfg.dt.max(1.0) {
        return Err(Error::Config(format!(
            "final time {t_final} is not a multiple of dt {}",
            cfg.dt
        )));
    }

    let (engine, patches) = if opts.corrections && !masks.corrected.is_empty() {
        let engine = CfmEngine::new(grid.h(), cfg.order, cfg.physics, cfg.degree, QuadSpec::default())?;
        let patches: Result<Vec<Patch>> = masks
            .corrected
            .par_iter()
            .map(|&node| engine.build_patch(&problem.level_set, grid, node))
            .collect();
        (Some(engine), patches?)
    } else {
        (None, Vec::new())
    };

    let mut u = exact_fields(problem, grid, &masks, 0.0);
    let single_sided = crate::diagnostics::single_sided_corners(grid, &masks, cfg.order);
    let div0 = crate::diagnostics::discrete_div(&u, grid, &masks, cfg.order, None)?;
    let mut drift = 0.0_f64;
    let mut snapshots: Vec<Option<FieldSet>> = vec![None; opts.snapshots.len()];
    let capture = |u: &FieldSet, snapshots: &mut Vec<Option<FieldSet>>| {
        for (want, slot) in opts.snapshots.iter().zip(snapshots.iter_mut()) {
            if slot.is_none() && u.time >= want - 0.5 * cfg.dt {
                *slot = Some(u.clone());
            }
        }
    };
    capture(&u, &mut snapshots);

    for n in 0..n_steps {
        let t_n = n as f64 * cfg.dt;
        let table = match &engine {
            Some(eng) => Some(build_correction_table(eng, &patches, problem, t_n, cfg.dt)?),
            None => None,
        };
        u = rk4_step(&u, t_n, grid, &masks, table.as_ref(), problem, cfg)?;
        capture(&u, &mut snapshots);
        if opts.track_divergence {
            let div = crate::diagnostics::discrete_div(&u, grid, &masks, cfg.order, None)?;
            for r in 0..grid.nx {
                for c in 0..grid.ny {
                    if single_sided[(r, c)] {
                        drift = drift.max((div[(r, c)] - div0[(r, c)]).abs());
                    }
                }
            }
        }
    }

    // final-time error norms and corrected divergence norms
    let (linf, l1) = crate::diagnostics::error_norms(&u, problem, grid, &masks, u.time);
    let (div_linf, div_l1) = match &engine {
        Some(eng) => {
            let polys = fit_all(eng, &patches, problem, u.time);
            let table = stage_one_table(eng, &patches, &polys)?;
            let div = crate::diagnostics::discrete_div(&u, grid, &masks, cfg.order, Some(&table))?;
            crate::diagnostics::corner_norms(&div, grid)
        }
        None => {
            let div = crate::diagnostics::discrete_div(&u, grid, &masks, cfg.order, None)?;
            crate::diagnostics::corner_norms(&div, grid)
        }
    };
    let n_corrected = masks.corrected.len();
    Ok(RunOutput {
        fields: u,
        masks,
        linf,
        l1,
        div_linf,
        div_l1,
        single_sided_drift: drift,
        n_corrected,
        snapshots: snapshots.into_iter().flatten().collect(),
    })
}

/// A table whose four stages all hold the plain value D(t) (what the
/// corrected divergence diagnostic consumes).
pub fn stage_one_table(
    engine: &CfmEngine,
    patches: &[Patch],
    polys: &[CorrectionPoly],
) -> Result<CorrectionTable> {
    let staged: Result<Vec<[f64; 4]>> = patches
        .iter()
        .zip(polys)
        .map(|(patch, cp)| {
            let d = engine.eval_correction(cp, patch.node.family, patch.node_pos, cp.t_n, 0)?;
            Ok([d; 4])
        })
        .collect();
    Ok(CorrectionTable { staged: staged? })
}

/// Single-field helper for tests: apply the order-p first-derivative
/// stencil along x to a closure sampled on Hy nodes (no interface).
pub fn plain_stencil_x(values: &Array2<f64>, grid: &GridSpec, r: usize, c: usize, order: usize) -> f64 {
    let ri = r as i64;
    let dx = grid.dx();
    let at = |rr: i64| {
        let (rw, cw) = grid.wrap_storage(rr, c as i64);
        values[(rw, cw)]
    };
    match order {
        2 => (at(ri + 1) - at(ri)) / dx,
        4 => (at(ri - 1) - 27.0 * at(ri) + 27.0 * at(ri + 1) - at(ri + 2)) / (24.0 * dx),
        _ => panic!("unsupported order"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LevelSet;
    use crate::problems::{make_problem, Physics};
    use std::sync::Arc;

    fn no_interface_problem() -> Problem {
        // smooth single-branch problem: both sides share the circle problem's
        // Omega+ fields, interface far outside the domain
        let circle = make_problem("circle").unwrap();
        Problem {
            id: "smooth".into(),
            level_set: LevelSet::half_plane(0.0, 1.0, 10.0),
            physics: circle.physics,
            plus: circle.plus.clone(),
            minus: circle.plus.clone(),
        }
    }

    fn cfg(order: usize, dt: f64) -> SchemeConfig {
        SchemeConfig {
            order,
            dt,
            physics: Physics::unit(),
            degree: 3,
        }
    }

    #[test]
    fn corrected_sample_rules() {
        let grid = GridSpec::unit_square(8);
        let ls = LevelSet::half_plane(1.0, 0.0, 0.53); // Plus for x >= 0.53
        let masks = classify_nodes(&grid, &ls, 2);
        let mut fields = FieldSet::zeros(&grid, 0.0);
        // Ez node (3, 0) at x = 0.4375 is Minus; (5, 0) at x = 0.6875 is Plus
        fields.ez[(3, 0)] = 3.0;
        fields.ez[(5, 0)] = 5.0;
        let idx_minus = masks.corrected_index(Family::Ez, 3, 0);
        let idx_plus = masks.corrected_index(Family::Ez, 4, 0);
        // build a table with D-hat = 2 everywhere
        let table = CorrectionTable {
            staged: vec![[2.0; 4]; masks.corrected.len()],
        };
        let corr = Some((&table, 0));
        // same side: identity
        let v = corrected_sample(&fields, &grid, &masks, corr, Family::Ez, 3, 0, Side::Minus)
            .unwrap();
        assert_eq!(v, 3.0);
        // Minus-side value sampled for a Plus-centered stencil: value + D
        if idx_minus.is_some() {
            let v = corrected_sample(&fields, &grid, &masks, corr, Family::Ez, 3, 0, Side::Plus)
                .unwrap();
            assert_eq!(v, 5.0);
        }
        // Plus-side value sampled for a Minus-centered stencil: value - D
        fields.ez[(4, 0)] = 5.0;
        if idx_plus.is_some() {
            let v = corrected_sample(&fields, &grid, &masks, corr, Family::Ez, 4, 0, Side::Minus)
                .unwrap();
            assert_eq!(v, 3.0);
        }
        // corrections disabled: raw value
        let v = corrected_sample(&fields, &grid, &masks, None, Family::Ez, 3, 0, Side::Plus)
            .unwrap();
        assert_eq!(v, 3.0);
        // cross-side sample of a node without a table entry
        assert!(masks.corrected_index(Family::Ez, 0, 0).is_none());
        assert!(matches!(
            corrected_sample(&fields, &grid, &masks, corr, Family::Ez, 0, 0, Side::Plus),
            Err(crate::error::Error::MissingCorrection { .. })
        ));
    }

    #[test]
    fn stencils_exact_on_polynomials() {
        let grid = GridSpec::unit_square(16);
        let ls = LevelSet::half_plane(0.0, 1.0, 10.0);
        let masks = classify_nodes(&grid, &ls, 4);
        let mut fields = FieldSet::zeros(&grid, 0.0);
        for r in 0..grid.nx {
            for c in 0..grid.ny {
                let p = grid.storage_coords(Family::Ez, r, c);
                fields.ez[(r, c)] = p.x * p.x * p.x * p.x; // x^4
            }
        }
        // d/dx Ez at interior Hy nodes: order 4 exact on degree <= 4
        for r in 4..grid.nx - 4 {
            let p = grid.storage_coords(Family::Hy, r, 3);
            let d = spatial_deriv(
                &fields,
                &grid,
                &masks,
                None,
                Family::Ez,
                Axis::X,
                (Family::Hy, r, 3),
                4,
            )
            .unwrap();
            let want = 4.0 * p.x * p.x * p.x;
            assert!((d - want).abs() <= 1e-11 * (1.0 + want.abs()), "{d} vs {want}");
        }
        // linear field: both orders exact
        for r in 0..grid.nx {
            for c in 0..grid.ny {
                let p = grid.storage_coords(Family::Ez, r, c);
                fields.ez[(r, c)] = p.x;
            }
        }
        for order in [2usize, 4] {
            for r in 4..grid.nx - 4 {
                let d = spatial_deriv(
                    &fields,
                    &grid,
                    &masks,
                    None,
                    Family::Ez,
                    Axis::X,
                    (Family::Hy, r, 5),
                    order,
                )
                .unwrap();
                assert!((d - 1.0).abs() <= 1e-12, "order {order}: {d}");
            }
        }
    }

    #[test]
    fn corrected_stencil_recovers_one_sided_derivative() {
        // interface at x = 0.53; piecewise-smooth field with a known jump.
        // With the exact jump supplied, the corrected order-4 stencil
        // converges at order 4; with an O(h^p) perturbed jump at q = p - 1.
        let fplus = |x: f64| (3.0 * x).sin() + 2.0;
        let fminus = |x: f64| (3.0 * x).cos() - 1.0;
        let dplus = |x: f64| 3.0 * (3.0 * x).cos();
        let dminus = |x: f64| -3.0 * (3.0 * x).sin();
        let jump = |x: f64| fplus(x) - fminus(x);

        let mut errs_exact = Vec::new();
        let mut errs_p4 = Vec::new();
        let hs: [f64; 3] = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
        for (gi, n) in [16usize, 32, 64].iter().enumerate() {
            let grid = GridSpec::unit_square(*n);
            let ls = LevelSet::half_plane(1.0, 0.0, 0.53);
            let masks = classify_nodes(&grid, &ls, 4);
            let mut fields = FieldSet::zeros(&grid, 0.0);
            for r in 0..grid.nx {
                for c in 0..grid.ny {
                    let p = grid.storage_coords(Family::Ez, r, c);
                    fields.ez[(r, c)] = if ls.side_of(p) == Side::Plus {
                        fplus(p.x)
                    } else {
                        fminus(p.x)
                    };
                }
            }
            let h = hs[gi];
            for perturb in [0.0, h.powi(4)] {
                let staged: Vec<[f64; 4]> = masks
                    .corrected
                    .iter()
                    .map(|node| {
                        let p = grid.storage_coords(node.family, node.r, node.c);
                        [jump(p.x) + perturb; 4]
                    })
                    .collect();
                let table = CorrectionTable { staged };
                let mut worst = 0.0_f64;
                for r in 0..grid.nx {
                    let c = grid.ny / 2;
                    let p = grid.storage_coords(Family::Hy, r, c);
                    if (p.x - 0.53).abs() > 3.0 * grid.dx() {
                        continue; // only corrected stencils are of interest
                    }
                    let d = spatial_deriv(
                        &fields,
                        &grid,
                        &masks,
                        Some((&table, 0)),
                        Family::Ez,
                        Axis::X,
                        (Family::Hy, r, c),
                        4,
                    )
                    .unwrap();
                    let want = if ls.side_of(p) == Side::Plus {
                        dplus(p.x)
                    } else {
                        dminus(p.x)
                    };
                    worst = worst.max((d - want).abs());
                }
                if perturb == 0.0 {
                    errs_exact.push(worst);
                } else {
                    errs_p4.push(worst);
                }
            }
        }
        let order_exact = (errs_exact[0] / errs_exact[2]).log2() / 2.0;
        let order_p4 = (errs_p4[0] / errs_p4[2]).log2() / 2.0;
        assert!(order_exact > 3.5, "exact-D order {order_exact} ({errs_exact:?})");
        assert!(order_p4 > 2.5, "p=4 order {order_p4} ({errs_p4:?})");
        assert!(
            order_p4 < 3.7,
            "p=4 should cap near q=3: {order_p4} ({errs_p4:?})"
        );
    }

    #[test]
    fn rhs_examples() {
        let grid = GridSpec::unit_square(10);
        let problem = no_interface_problem();
        let masks = classify_nodes(&grid, &problem.level_set, 4);
        let fields = FieldSet::zeros(&grid, 0.0);
        // zero fields, zero sources -> zero
        let zero_side = crate::problems::SideFields {
            hx: Arc::new(|_, _, _| 0.0),
            hy: Arc::new(|_, _, _| 0.0),
            ez: Arc::new(|_, _, _| 0.0),
            f1x: Arc::new(|_, _, _| 0.0),
            f1y: Arc::new(|_, _, _| 0.0),
            f2: Arc::new(|_, _, _| 0.0),
        };
        let zero = Problem {
            id: "zero".into(),
            level_set: problem.level_set.clone(),
            physics: problem.physics,
            plus: zero_side.clone(),
            minus: zero_side.clone(),
        };
        let g = rhs_g(&fields, &grid, &masks, None, &zero, 0.1, &cfg(4, 0.01)).unwrap();
        assert!(g.hx.iter().chain(g.hy.iter()).chain(g.ez.iter()).all(|v| *v == 0.0));
        // f2 = 1: G_Ez = 1 for zero fields regardless of sigma
        let one_side = crate::problems::SideFields {
            f2: Arc::new(|_, _, _| 1.0),
            ..zero_side
        };
        let one = Problem {
            plus: one_side.clone(),
            minus: one_side,
            ..zero.clone()
        };
        let g = rhs_g(&fields, &grid, &masks, None, &one, 0.1, &cfg(4, 0.01)).unwrap();
        assert!(g.ez.iter().all(|v| (*v - 1.0).abs() < 1e-15));
        assert!(g.hx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rhs_accuracy_matches_spatial_order() {
        // oracle: analytic derivatives of the smooth manufactured fields
        let problem = no_interface_problem();
        let t = 0.3;
        let mut errs = [[0.0_f64; 2]; 2];
        for (gi, n) in [20usize, 40].iter().enumerate() {
            let grid = GridSpec::unit_square(*n);
            let masks = classify_nodes(&grid, &problem.level_set, 4);
            let u = exact_fields(&problem, &grid, &masks, t);
            for (oi, order) in [2usize, 4].iter().enumerate() {
                let g = rhs_g(&u, &grid, &masks, None, &problem, t, &cfg(*order, 0.01)).unwrap();
                // compare G_Ez against its analytic value
                let tp = 2.0 * std::f64::consts::PI;
                let mut worst = 0.0_f64;
                for r in 0..grid.nx {
                    for c in 0..grid.ny {
                        let p = grid.storage_coords(Family::Ez, r, c);
                        let ez = (tp * p.x).sin() * (tp * p.y).cos() * (tp * t).cos();
                        let f2 = (problem.plus.f2)(p.x, p.y, t);
                        let dx_hy = -tp * (tp * p.x).sin() * (tp * p.y).cos() * (tp * t).sin();
                        let dy_hx = tp * (tp * p.x).sin() * (tp * p.y).cos() * (tp * t).sin();
                        let want = -ez + f2 + dx_hy - dy_hx;
                        worst = worst.max((g.ez[(r, c)] - want).abs());
                    }
                }
                errs[oi][gi] = worst;
            }
        }
        let order2 = (errs[0][0] / errs[0][1]).log2();
        let order4 = (errs[1][0] / errs[1][1]).log2();
        assert!(order2 > 1.7 && order2 < 2.3, "order-2 rate {order2} ({errs:?})");
        assert!(order4 > 3.6 && order4 < 4.4, "order-4 rate {order4} ({errs:?})");
    }

    #[test]
    fn rk4_exact_on_constant_slope() {
        // U' = G constant in U and t: one step gives U + dt G exactly
        let grid = GridSpec::unit_square(8);
        let ls = LevelSet::half_plane(0.0, 1.0, 10.0);
        let masks = classify_nodes(&grid, &ls, 2);
        let zero_side = crate::problems::SideFields {
            hx: Arc::new(|_, _, _| 0.0),
            hy: Arc::new(|_, _, _| 0.0),
            ez: Arc::new(|_, _, _| 0.0),
            f1x: Arc::new(|_, _, _| 0.0),
            f1y: Arc::new(|_, _, _| 0.0),
            f2: Arc::new(|_, _, _| 4.0),
        };
        let problem = Problem {
            id: "const".into(),
            level_set: ls,
            physics: Physics {
                mu: 1.0,
                eps: 1.0,
                sigma: 0.0,
            },
            plus: zero_side.clone(),
            minus: zero_side,
        };
        let c = SchemeConfig {
            order: 2,
            dt: 0.01,
            physics: problem.physics,
            degree: 3,
        };
        let u0 = FieldSet::zeros(&grid, 0.0);
        let u1 = rk4_step(&u0, 0.0, &grid, &masks, None, &problem, &c).unwrap();
        assert!(u1.ez.iter().all(|v| (*v - 0.04).abs() < 1e-16));
    }

    #[test]
    fn rk4_decay_has_fifth_order_local_error() {
        // spatially uniform Ez with sigma = 1 decays as exp(-t)
        let grid = GridSpec::unit_square(8);
        let ls = LevelSet::half_plane(0.0, 1.0, 10.0);
        let masks = classify_nodes(&grid, &ls, 2);
        let zero_side = crate::problems::SideFields {
            hx: Arc::new(|_, _, _| 0.0),
            hy: Arc::new(|_, _, _| 0.0),
            ez: Arc::new(|_, _, _| 1.0),
            f1x: Arc::new(|_, _, _| 0.0),
            f1y: Arc::new(|_, _, _| 0.0),
            f2: Arc::new(|_, _, _| 0.0),
        };
        let problem = Problem {
            id: "decay".into(),
            level_set: ls,
            physics: Physics::unit(),
            plus: zero_side.clone(),
            minus: zero_side,
        };
        let mut errs = Vec::new();
        for dt in [0.1, 0.05] {
            let c = SchemeConfig {
                order: 2,
                dt,
                physics: problem.physics,
                degree: 3,
            };
            let mut u = FieldSet::zeros(&grid, 0.0);
            u.ez.fill(1.0);
            let u1 = rk4_step(&u, 0.0, &grid, &masks, None, &problem, &c).unwrap();
            errs.push((u1.ez[(0, 0)] - (-dt).exp()).abs());
        }
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 4.5, "local error rate {rate} ({errs:?})");
    }

    #[test]
    fn run_zero_steps_returns_initial_data() {
        let problem = no_interface_problem();
        let grid = GridSpec::unit_square(10);
        let c = cfg(4, 0.025);
        let out = run(&problem, &grid, &c, 0.0, RunOptions::standard()).unwrap();
        let masks = classify_nodes(&grid, &problem.level_set, 4);
        let want = exact_fields(&problem, &grid, &masks, 0.0);
        assert_eq!(out.fields.ez, want.ez);
        assert!(out.linf.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn run_zero_solution_stays_zero() {
        let ls = LevelSet::half_plane(0.0, 1.0, 10.0);
        let zero_side = crate::problems::SideFields {
            hx: Arc::new(|_, _, _| 0.0),
            hy: Arc::new(|_, _, _| 0.0),
            ez: Arc::new(|_, _, _| 0.0),
            f1x: Arc::new(|_, _, _| 0.0),
            f1y: Arc::new(|_, _, _| 0.0),
            f2: Arc::new(|_, _, _| 0.0),
        };
        let problem = Problem {
            id: "null".into(),
            level_set: ls,
            physics: Physics::unit(),
            plus: zero_side.clone(),
            minus: zero_side,
        };
        let grid = GridSpec::unit_square(10);
        let c = cfg(4, 0.05);
        let out = run(&problem, &grid, &c, 0.5, RunOptions::standard()).unwrap();
        assert!(out.fields.ez.iter().all(|v| v.abs() < 1e-14));
        assert!(out.linf.iter().all(|v| *v < 1e-14));
    }
}

//! Discrete divergence operators (plain and corrected), error norms,
//! convergence-order estimation, and the no-growth spectral check of the
//! correction-function PDE system.

use crate::error::{Error, Result};
use crate::fdtd::{corrected_sample, CorrectionTable};
use crate::grid::{FieldSet, Family, GridSpec, SideMasks};
use crate::problems::Problem;
use ndarray::Array2;
use num_complex::Complex64;

/// Discrete divergence of H at cell corners; order 2 or 4. When a sampled H
/// node lies across the interface from the corner's side and `corr` is
/// supplied, the sample is shifted by the node's jump correction (the
/// corrected operator); with `corr = None` raw values are used.
pub fn discrete_div(
    fields: &FieldSet,
    grid: &GridSpec,
    masks: &SideMasks,
    order: usize,
    corr: Option<&CorrectionTable>,
) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((grid.nx, grid.ny));
    let stage = corr.map(|t| (t, 0));
    let (dx, dy) = (grid.dx(), grid.dy());
    for r in 0..grid.nx {
        for c in 0..grid.ny {
            let target = masks.corner[(r, c)];
            let (ri, ci) = (r as i64, c as i64);
            let mut acc = 0.0;
            match order {
                2 => {
                    let hx_m = corrected_sample(fields, grid, masks, stage, Family::Hx, ri - 1, ci, target)?;
                    let hx_p = corrected_sample(fields, grid, masks, stage, Family::Hx, ri, ci, target)?;
                    let hy_m = corrected_sample(fields, grid, masks, stage, Family::Hy, ri, ci - 1, target)?;
                    let hy_p = corrected_sample(fields, grid, masks, stage, Family::Hy, ri, ci, target)?;
                    acc = (hx_p - hx_m) / dx + (hy_p - hy_m) / dy;
                }
                4 => {
                    for (o, w) in [(-3_i64, 1.0), (-1, -27.0), (1, 27.0), (3, -1.0)] {
                        let m = (o - 1) / 2;
                        let hx = corrected_sample(fields, grid, masks, stage, Family::Hx, ri + m, ci, target)?;
                        let hy = corrected_sample(fields, grid, masks, stage, Family::Hy, ri, ci + m, target)?;
                        acc += w * (hx / (24.0 * dx) + hy / (24.0 * dy));
                    }
                }
                other => panic!("unsupported order {other}"),
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Corners whose divergence stencil samples H only from the corner's own
/// side (where the plain operator conserves the discrete divergence).
pub fn single_sided_corners(grid: &GridSpec, masks: &SideMasks, order: usize) -> Array2<bool> {
    let offsets: &[i64] = match order {
        2 => &[-1, 1],
        4 => &[-3, -1, 1, 3],
        _ => panic!("unsupported order"),
    };
    Array2::from_shape_fn((grid.nx, grid.ny), |(r, c)| {
        let target = masks.corner[(r, c)];
        offsets.iter().all(|&o| {
            let m = (o - 1) / 2;
            let (rw, cw) = grid.wrap_storage(r as i64 + m, c as i64);
            let (rw2, cw2) = grid.wrap_storage(r as i64, c as i64 + m);
            masks.side(Family::Hx, rw, cw) == target && masks.side(Family::Hy, rw2, cw2) == target
        })
    })
}

/// (Linf, L1) norms of a corner array; L1 uses the cell measure dx dy.
pub fn corner_norms(div: &Array2<f64>, grid: &GridSpec) -> (f64, f64) {
    let mut linf = 0.0_f64;
    let mut l1 = 0.0_f64;
    for v in div.iter() {
        linf = linf.max(v.abs());
        l1 += v.abs();
    }
    (linf, l1 * grid.dx() * grid.dy())
}

/// Node-wise errors against the exact solution of each node's own side;
/// returns (Linf, L1) per component [Hx, Hy, Ez].
pub fn error_norms(
    fields: &FieldSet,
    problem: &Problem,
    grid: &GridSpec,
    masks: &SideMasks,
    t: f64,
) -> ([f64; 3], [f64; 3]) {
    let mut linf = [0.0_f64; 3];
    let mut l1 = [0.0_f64; 3];
    let measure = grid.dx() * grid.dy();
    for (fi, family) in Family::ALL.iter().enumerate() {
        let arr = fields.get(*family);
        for r in 0..grid.nx {
            for c in 0..grid.ny {
                let p = grid.storage_coords(*family, r, c);
                let side = masks.side(*family, r, c);
                let e = (arr[(r, c)] - problem.exact(*family, side, p.x, p.y, t)).abs();
                linf[fi] = linf[fi].max(e);
                l1[fi] += e * measure;
            }
        }
    }
    (linf, l1)
}

/// Least-squares slope of log(error) versus log(h).
pub fn convergence_order(hs: &[f64], errors: &[f64]) -> Result<f64> {
    if hs.len() != errors.len() || hs.len() < 2 {
        return Err(Error::DegenerateData("convergence fit needs >= 2 points"));
    }
    if errors.iter().any(|&e| e <= 0.0) || hs.iter().any(|&h| h <= 0.0) {
        return Err(Error::DegenerateData("non-positive error in convergence fit"));
    }
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateData("identical grid sizes"));
    }
    Ok(sxy / sxx)
}

/// Pairwise orders log(e_i/e_{i+1}) / log(h_i/h_{i+1}).
pub fn pairwise_orders(hs: &[f64], errors: &[f64]) -> Vec<f64> {
    hs.windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// One grid's entry in a convergence study.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub h: f64,
    pub dt: f64,
    pub linf: [f64; 3],
    pub l1: [f64; 3],
    pub div_linf: f64,
    pub div_l1: f64,
}

/// Fitted orders for the field components and the divergence.
#[derive(Debug, Clone)]
pub struct FittedOrders {
    pub linf: [f64; 3],
    pub l1: [f64; 3],
    pub div_linf: f64,
    pub div_l1: f64,
}

/// Full convergence report: one row per h plus fitted orders.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    pub fitted: FittedOrders,
}

impl ConvergenceReport {
    pub fn from_rows(rows: Vec<ReportRow>) -> Result<Self> {
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let pick = |f: &dyn Fn(&ReportRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
        let mut linf = [0.0; 3];
        let mut l1 = [0.0; 3];
        for i in 0..3 {
            linf[i] = convergence_order(&hs, &pick(&|r| r.linf[i]))?;
            l1[i] = convergence_order(&hs, &pick(&|r| r.l1[i]))?;
        }
        let div_linf = convergence_order(&hs, &pick(&|r| r.div_linf))?;
        let div_l1 = convergence_order(&hs, &pick(&|r| r.div_l1))?;
        Ok(ConvergenceReport {
            rows,
            fitted: FittedOrders {
                linf,
                l1,
                div_linf,
                div_l1,
            },
        })
    }
}

/// The 6x6 Fourier symbol of the correction-function PDE system for mode k,
/// stored with separate real and imaginary parts. Unknown ordering is
/// (D_Hx, D_Hy, D_Hz, D_Ex, D_Ey, D_Ez).
#[derive(Debug, Clone)]
pub struct SymbolMatrix {
    pub re: [[f64; 6]; 6],
    pub im: [[f64; 6]; 6],
    pub mu: f64,
    pub eps: f64,
    pub sigma: f64,
    pub k: [f64; 3],
}

pub fn symbol_matrix(k: [i64; 3], mu: f64, eps: f64, sigma: f64) -> SymbolMatrix {
    let (kx, ky, kz) = (k[0] as f64, k[1] as f64, k[2] as f64);
    let mut re = [[0.0; 6]; 6];
    let mut im = [[0.0; 6]; 6];
    // H rows: -(1/mu) i k x E
    im[0][4] = kz / mu;
    im[0][5] = -ky / mu;
    im[1][3] = -kz / mu;
    im[1][5] = kx / mu;
    im[2][3] = ky / mu;
    im[2][4] = -kx / mu;
    // E rows: (1/eps) i k x H - (sigma/eps) E
    im[3][1] = -kz / eps;
    im[3][2] = ky / eps;
    im[4][0] = kz / eps;
    im[4][2] = -kx / eps;
    im[5][0] = -ky / eps;
    im[5][1] = kx / eps;
    for r in 3..6 {
        re[r][r] = -sigma / eps;
    }
    SymbolMatrix {
        re,
        im,
        mu,
        eps,
        sigma,
        k: [kx, ky, kz],
    }
}

/// Closed-form spectrum: the characteristic polynomial factors as
/// lambda (lambda + sigma/eps) (lambda^2 + (sigma/eps) lambda + K/(eps mu))^2
/// with K = k . k.
pub fn spectrum(a: &SymbolMatrix) -> [Complex64; 6] {
    let s = a.sigma / a.eps;
    let kk = a.k.iter().map(|v| v * v).sum::<f64>();
    if kk == 0.0 {
        return [
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(-s, 0.0),
        ];
    }
    let disc = s * s - 4.0 * kk / (a.eps * a.mu);
    let (l3, l4) = if disc >= 0.0 {
        (
            Complex64::new((-s + disc.sqrt()) / 2.0, 0.0),
            Complex64::new((-s - disc.sqrt()) / 2.0, 0.0),
        )
    } else {
        let w = (-disc).sqrt() / 2.0;
        (Complex64::new(-s / 2.0, w), Complex64::new(-s / 2.0, -w))
    };
    [Complex64::new(0.0, 0.0), Complex64::new(-s, 0.0), l3, l3, l4, l4]
}

/// Max real part of the spectrum; nonpositive for all mu, eps > 0 and
/// sigma >= 0 (perturbations of the correction functions do not grow).
pub fn growth_check(a: &SymbolMatrix) -> f64 {
    spectrum(a)
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// |det(A - lambda I)| normalized by the Hadamard bound (product of row
/// norms); a true eigenvalue gives a value at round-off level.
pub fn char_poly_residual(a: &SymbolMatrix, lambda: Complex64) -> f64 {
    let mut m = [[Complex64::new(0.0, 0.0); 6]; 6];
    for r in 0..6 {
        for c in 0..6 {
            m[r][c] = Complex64::new(a.re[r][c], a.im[r][c]);
        }
        m[r][r] -= lambda;
    }
    let mut scale = 1.0_f64;
    for row in &m {
        let n = row.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        scale *= n.max(1e-300);
    }
    // complex LU with partial pivoting
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..6 {
        let mut p = k;
        for r in k + 1..6 {
            if m[r][k].norm() > m[p][k].norm() {
                p = r;
            }
        }
        if m[p][k].norm() == 0.0 {
            return 0.0;
        }
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        det *= m[k][k];
        for r in k + 1..6 {
            let f = m[r][k] / m[k][k];
            for c in k..6 {
                let sub = f * m[k][c];
                m[r][c] -= sub;
            }
        }
    }
    det.norm() / scale
}

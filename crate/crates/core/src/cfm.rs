//! Correction-function machinery: patch construction, assembly and
//! minimization of the quadratic jump-residual functional in TM_z variables,
//! and evaluation of the fitted corrections and their time derivatives.
//!
//! Unknowns per patch (degree k): the magnetic jump D_H in the
//! divergence-free space-time basis and the electric jump D_Ez in the scalar
//! space-time basis; 56 + 40 = 96 coefficients at the default k = 3. The
//! normal matrix is assembled in patch-local coordinates xi, eta in
//! [-1/2, 1/2], tau in [-1, 0]; with a stationary interface it is
//! time-independent, so each patch factors it once and only the right-hand
//! side is rebuilt every step.

use crate::basis::{divfree_basis, scalar_basis, spacetime_tensor, tau_eval, Deriv, SpaceTimeBasis, Spatial};
use crate::error::{Error, Result};
use crate::geometry::{interface_segments, LevelSet, Vec2};
use crate::grid::{GridSpec, Family, Node};
use crate::linalg::SymmetricFactor;
use crate::problems::{Physics, Problem};
use crate::quadrature::composite;

/// Quadrature layout for the patch integrals. The defaults follow the
/// volume rule (2x2 tiles, 3x3 Gauss points each, 4 points in time) and
/// 4 Gauss points per interface segment; segments are chords of length at
/// most l_h / seg_divisor.
#[derive(Debug, Clone, Copy)]
pub struct QuadSpec {
    pub space_tiles: usize,
    pub space_pts: usize,
    pub time_tiles: usize,
    pub time_pts: usize,
    pub seg_pts: usize,
    pub seg_divisor: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            space_tiles: 2,
            space_pts: 3,
            time_tiles: 1,
            time_pts: 4,
            seg_pts: 4,
            seg_divisor: 6.0,
        }
    }
}

impl QuadSpec {
    /// Uniformly refined layout (integration oracle for tests).
    pub fn refined(self, factor: usize) -> Self {
        QuadSpec {
            space_tiles: self.space_tiles * factor,
            time_tiles: self.time_tiles * factor,
            seg_divisor: self.seg_divisor * factor as f64,
            ..self
        }
    }
}

struct VolPt {
    xi: f64,
    eta: f64,
    /// physical space weight (includes l_h^2)
    w: f64,
    vx: Vec<f64>,
    vy: Vec<f64>,
    /// d_eta Vx - d_xi Vy per member (the z-curl of the vector member)
    curl: Vec<f64>,
    s: Vec<f64>,
    s_xi: Vec<f64>,
    s_eta: Vec<f64>,
}

struct TauPt {
    tau: f64,
    /// physical time weight (includes dt_gamma)
    w: f64,
    t: Vec<f64>,
    tp: Vec<f64>,
}

/// Shared per-run state: bases, quadrature tables, and the volume part of
/// the normal matrix (identical for every patch).
pub struct CfmEngine {
    pub k: usize,
    pub beta: f64,
    pub l_h: f64,
    pub l_c: f64,
    pub dt_gamma: f64,
    pub physics: Physics,
    pub quad: QuadSpec,
    hbasis: SpaceTimeBasis,
    ebasis: SpaceTimeBasis,
    nh: usize,
    ne: usize,
    n: usize,
    vol: Vec<VolPt>,
    taus: Vec<TauPt>,
    m_vol: Vec<f64>,
}

/// Data consumed by the functional: jump sources in the patch volume and
/// jump conditions on the interface.
pub trait JumpData: Sync {
    fn f_d1x(&self, x: f64, y: f64, t: f64) -> f64;
    fn f_d1y(&self, x: f64, y: f64, t: f64) -> f64;
    fn f_d2(&self, x: f64, y: f64, t: f64) -> f64;
    /// (a_s, b_s, d) at a point of Gamma with unit normal `n`.
    fn jump(&self, q: Vec2, n: Vec2, t: f64) -> (f64, f64, f64);
}

impl JumpData for Problem {
    fn f_d1x(&self, x: f64, y: f64, t: f64) -> f64 {
        Problem::f_d1x(self, x, y, t)
    }
    fn f_d1y(&self, x: f64, y: f64, t: f64) -> f64 {
        Problem::f_d1y(self, x, y, t)
    }
    fn f_d2(&self, x: f64, y: f64, t: f64) -> f64 {
        Problem::f_d2(self, x, y, t)
    }
    fn jump(&self, q: Vec2, n: Vec2, t: f64) -> (f64, f64, f64) {
        let jhx = self.exact_jump(Family::Hx, q.x, q.y, t);
        let jhy = self.exact_jump(Family::Hy, q.x, q.y, t);
        let jez = self.exact_jump(Family::Ez, q.x, q.y, t);
        (jez, n.x * jhy - n.y * jhx, self.physics.mu * (n.x * jhx + n.y * jhy))
    }
}

struct IfacePt {
    pos: Vec2,
    nrm: Vec2,
    /// physical arclength weight
    w: f64,
    s: Vec<f64>,
    /// n_x Vy - n_y Vx per vector member (tangential trace)
    tb: Vec<f64>,
    /// n_x Vx + n_y Vy per vector member (normal trace)
    nd: Vec<f64>,
}

/// One corrected node's patch: geometry, interface quadrature, and the
/// factorized normal matrix.
pub struct Patch {
    pub node: Node,
    pub node_pos: Vec2,
    pub center: Vec2,
    pub l_h: f64,
    pub dt_gamma: f64,
    iface: Vec<IfacePt>,
    factor: SymmetricFactor,
}

/// Solved space-time polynomial coefficients for (D_Hx, D_Hy) and D_Ez on
/// one patch, anchored at t_n.
#[derive(Debug, Clone)]
pub struct CorrectionPoly {
    pub coef_h: Vec<f64>,
    pub coef_e: Vec<f64>,
    pub t_n: f64,
    pub center: Vec2,
    pub l_h: f64,
    pub dt_gamma: f64,
}

impl CfmEngine {
    /// `h` is the grid spacing max(dx, dy); the patch length is beta h with
    /// beta = 1 for the second-order scheme and 3 for the fourth-order one,
    /// l_c = l_h, and dt_gamma = sqrt(eps mu) l_h.
    pub fn new(h: f64, scheme_order: usize, physics: Physics, k: usize, quad: QuadSpec) -> Result<Self> {
        let beta = match scheme_order {
            2 => 1.0,
            4 => 3.0,
            other => {
                return Err(Error::Config(format!("unsupported scheme order {other}")));
            }
        };
        let l_h = beta * h;
        let l_c = l_h;
        let dt_gamma = (physics.eps * physics.mu).sqrt() * l_h;
        let hdiv = divfree_basis(k)?;
        let sca = scalar_basis(k)?;
        let hbasis = spacetime_tensor(Spatial::DivFree(hdiv), k);
        let ebasis = spacetime_tensor(Spatial::Scalar(sca), k);
        let nh = hbasis.len();
        let ne = ebasis.len();
        let n = nh + ne;

        let (sx, sw) = composite(quad.space_pts, quad.space_tiles, -0.5, 0.5);
        let nsm = match &hbasis.spatial {
            Spatial::DivFree(b) => b.members.clone(),
            _ => unreachable!(),
        };
        let smon = match &ebasis.spatial {
            Spatial::Scalar(b) => b.clone(),
            _ => unreachable!(),
        };
        let mut vol = Vec::with_capacity(sx.len() * sx.len());
        for (xi, wx) in sx.iter().zip(&sw) {
            for (eta, we) in sx.iter().zip(&sw) {
                let mut vx = Vec::with_capacity(nsm.len());
                let mut vy = Vec::with_capacity(nsm.len());
                let mut curl = Vec::with_capacity(nsm.len());
                for m in &nsm {
                    let (a, b) = m.eval(*xi, *eta, 0, 0);
                    vx.push(a);
                    vy.push(b);
                    let (dya, _) = m.eval(*xi, *eta, 0, 1);
                    let (_, dxb) = m.eval(*xi, *eta, 1, 0);
                    curl.push(dya - dxb);
                }
                let ns = smon.len();
                let mut s = Vec::with_capacity(ns);
                let mut s_xi = Vec::with_capacity(ns);
                let mut s_eta = Vec::with_capacity(ns);
                for idx in 0..ns {
                    s.push(smon.eval(idx, *xi, *eta, 0, 0));
                    s_xi.push(smon.eval(idx, *xi, *eta, 1, 0));
                    s_eta.push(smon.eval(idx, *xi, *eta, 0, 1));
                }
                vol.push(VolPt {
                    xi: *xi,
                    eta: *eta,
                    w: wx * we * l_h * l_h,
                    vx,
                    vy,
                    curl,
                    s,
                    s_xi,
                    s_eta,
                });
            }
        }
        let (tx, tw) = composite(quad.time_pts, quad.time_tiles, -1.0, 0.0);
        let taus: Vec<TauPt> = tx
            .iter()
            .zip(&tw)
            .map(|(tau, w)| TauPt {
                tau: *tau,
                w: w * dt_gamma,
                t: (0..=k).map(|b| tau_eval(b, *tau, 0)).collect(),
                tp: (0..=k).map(|b| tau_eval(b, *tau, 1)).collect(),
            })
            .collect();

        let mut engine = CfmEngine {
            k,
            beta,
            l_h,
            l_c,
            dt_gamma,
            physics,
            quad,
            hbasis,
            ebasis,
            nh,
            ne,
            n,
            vol,
            taus,
            m_vol: Vec::new(),
        };
        engine.m_vol = engine.assemble_m_vol();
        Ok(engine)
    }

    pub fn system_size(&self) -> usize {
        self.n
    }

    /// (H-block, E-block) coefficient counts.
    pub fn basis_sizes(&self) -> (usize, usize) {
        (self.nh, self.ne)
    }

    /// The three volume residual rows at one quadrature point as dense
    /// coefficient vectors (H block then E block).
    fn volume_rows(&self, vp: &VolPt, tp: &TauPt) -> [Vec<f64>; 3] {
        let Physics { mu, eps, sigma } = self.physics;
        let kt = self.k + 1;
        let ct = 1.0 / self.dt_gamma;
        let cs = 1.0 / self.l_h;
        let mut rows = [vec![0.0; self.n], vec![0.0; self.n], vec![0.0; self.n]];
        for a in 0..self.nh / kt {
            for b in 0..kt {
                let j = a * kt + b;
                rows[0][j] = mu * ct * vp.vx[a] * tp.tp[b];
                rows[1][j] = mu * ct * vp.vy[a] * tp.tp[b];
                rows[2][j] = cs * vp.curl[a] * tp.t[b];
            }
        }
        for a in 0..self.ne / kt {
            for b in 0..kt {
                let j = self.nh + a * kt + b;
                rows[0][j] = cs * vp.s_eta[a] * tp.t[b];
                rows[1][j] = -cs * vp.s_xi[a] * tp.t[b];
                rows[2][j] = eps * ct * vp.s[a] * tp.tp[b] + sigma * vp.s[a] * tp.t[b];
            }
        }
        rows
    }

    fn assemble_m_vol(&self) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for vp in &self.vol {
            for tp in &self.taus {
                let w = self.l_c * vp.w * tp.w;
                for row in self.volume_rows(vp, tp) {
                    for i in 0..n {
                        if row[i] == 0.0 {
                            continue;
                        }
                        let wi = w * row[i];
                        for j in 0..=i {
                            m[i * n + j] += wi * row[j];
                        }
                    }
                }
            }
        }
        // mirror
        for i in 0..n {
            for j in i + 1..n {
                m[i * n + j] = m[j * n + i];
            }
        }
        m
    }

    /// Build the patch of a corrected node: square of side l_h centered at
    /// the closest interface point, interface quadrature, and the cached
    /// factorization of the (time-independent) normal matrix.
    pub fn build_patch(&self, ls: &LevelSet, grid: &GridSpec, node: Node) -> Result<Patch> {
        let node_pos = grid.storage_coords(node.family, node.r, node.c);
        let center = ls.closest_point(node_pos)?;
        debug_assert!(
            (node_pos.x - center.x).abs() <= 0.5 * self.l_h + 1e-9
                && (node_pos.y - center.y).abs() <= 0.5 * self.l_h + 1e-9,
            "owner node outside its patch"
        );
        let segs = interface_segments(
            ls,
            center,
            self.l_h,
            self.quad.seg_pts,
            self.l_h / self.quad.seg_divisor,
        )?;
        let smon = match &self.ebasis.spatial {
            Spatial::Scalar(b) => b,
            _ => unreachable!(),
        };
        let vmem = match &self.hbasis.spatial {
            Spatial::DivFree(b) => &b.members,
            _ => unreachable!(),
        };
        let mut iface = Vec::new();
        for seg in &segs {
            for qp in &seg.quad {
                let xi = (qp.point.x - center.x) / self.l_h;
                let eta = (qp.point.y - center.y) / self.l_h;
                let s: Vec<f64> = (0..smon.len()).map(|i| smon.eval(i, xi, eta, 0, 0)).collect();
                let mut tb = Vec::with_capacity(vmem.len());
                let mut nd = Vec::with_capacity(vmem.len());
                for m in vmem {
                    let (vx, vy) = m.eval(xi, eta, 0, 0);
                    tb.push(qp.normal.x * vy - qp.normal.y * vx);
                    nd.push(qp.normal.x * vx + qp.normal.y * vy);
                }
                iface.push(IfacePt {
                    pos: qp.point,
                    nrm: qp.normal,
                    w: qp.weight,
                    s,
                    tb,
                    nd,
                });
            }
        }

        // M = M_vol + interface gram (tensorized over the time rule)
        let kt = self.k + 1;
        let nsp_h = self.nh / kt;
        let nsp_e = self.ne / kt;
        let mut ge = vec![0.0; nsp_e * nsp_e];
        let mut gh = vec![0.0; nsp_h * nsp_h];
        for p in &iface {
            for i in 0..nsp_e {
                for j in 0..=i {
                    ge[i * nsp_e + j] += p.w * p.s[i] * p.s[j];
                }
            }
            for i in 0..nsp_h {
                for j in 0..=i {
                    gh[i * nsp_h + j] += p.w * (p.tb[i] * p.tb[j] + p.nd[i] * p.nd[j]);
                }
            }
        }
        let mut gt = vec![0.0; kt * kt];
        for tp in &self.taus {
            for b in 0..kt {
                for b2 in 0..=b {
                    gt[b * kt + b2] += tp.w * tp.t[b] * tp.t[b2];
                }
            }
        }
        let sym = |g: &[f64], n: usize, i: usize, j: usize| {
            if j <= i {
                g[i * n + j]
            } else {
                g[j * n + i]
            }
        };
        let n = self.n;
        let mut m = self.m_vol.clone();
        for a in 0..nsp_h {
            for b in 0..kt {
                let i = a * kt + b;
                for a2 in 0..nsp_h {
                    for b2 in 0..kt {
                        let j = a2 * kt + b2;
                        if j > i {
                            continue;
                        }
                        m[i * n + j] += sym(&gh, nsp_h, a, a2) * sym(&gt, kt, b, b2);
                    }
                }
            }
        }
        for a in 0..nsp_e {
            for b in 0..kt {
                let i = self.nh + a * kt + b;
                for a2 in 0..nsp_e {
                    for b2 in 0..kt {
                        let j = self.nh + a2 * kt + b2;
                        if j > i {
                            continue;
                        }
                        m[i * n + j] += sym(&ge, nsp_e, a, a2) * sym(&gt, kt, b, b2);
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                m[i * n + j] = m[j * n + i];
            }
        }
        let factor = SymmetricFactor::new(&m, n)?;
        Ok(Patch {
            node,
            node_pos,
            center,
            l_h: self.l_h,
            dt_gamma: self.dt_gamma,
            iface,
            factor,
        })
    }

    /// Right-hand side of the normal equations for data anchored at t_n
    /// (the patch time window is [t_n - dt_gamma, t_n]).
    pub fn assemble_rhs(&self, patch: &Patch, data: &dyn JumpData, t_n: f64) -> Vec<f64> {
        let Physics { mu, eps, sigma } = self.physics;
        let kt = self.k + 1;
        let nsp_h = self.nh / kt;
        let nsp_e = self.ne / kt;
        let ct = 1.0 / self.dt_gamma;
        let cs = 1.0 / self.l_h;
        let mut rhs = vec![0.0; self.n];
        let mut tmp_h_tp = vec![0.0; nsp_h];
        let mut tmp_h_t = vec![0.0; nsp_h];
        let mut tmp_e_t = vec![0.0; nsp_e];
        let mut tmp_e_tp = vec![0.0; nsp_e];
        for vp in &self.vol {
            let x = patch.center.x + self.l_h * vp.xi;
            let y = patch.center.y + self.l_h * vp.eta;
            for tp in &self.taus {
                let t = t_n + self.dt_gamma * tp.tau;
                let g1 = data.f_d1x(x, y, t);
                let g2 = data.f_d1y(x, y, t);
                let g3 = data.f_d2(x, y, t);
                let w = self.l_c * vp.w * tp.w;
                for a in 0..nsp_h {
                    tmp_h_tp[a] = w * mu * ct * (vp.vx[a] * g1 + vp.vy[a] * g2);
                    tmp_h_t[a] = w * cs * vp.curl[a] * g3;
                }
                for a in 0..nsp_e {
                    tmp_e_t[a] =
                        w * (cs * vp.s_eta[a] * g1 - cs * vp.s_xi[a] * g2 + sigma * vp.s[a] * g3);
                    tmp_e_tp[a] = w * eps * ct * vp.s[a] * g3;
                }
                for a in 0..nsp_h {
                    let base = a * kt;
                    for b in 0..kt {
                        rhs[base + b] += tmp_h_tp[a] * tp.tp[b] + tmp_h_t[a] * tp.t[b];
                    }
                }
                for a in 0..nsp_e {
                    let base = self.nh + a * kt;
                    for b in 0..kt {
                        rhs[base + b] += tmp_e_t[a] * tp.t[b] + tmp_e_tp[a] * tp.tp[b];
                    }
                }
            }
        }
        for p in &patch.iface {
            for tp in &self.taus {
                let t = t_n + self.dt_gamma * tp.tau;
                let (a_s, b_s, d) = data.jump(p.pos, p.nrm, t);
                let dm = d / mu;
                for a in 0..nsp_h {
                    let v = p.w * (b_s * p.tb[a] + dm * p.nd[a]);
                    let base = a * kt;
                    for b in 0..kt {
                        rhs[base + b] += v * tp.w * tp.t[b];
                    }
                }
                for a in 0..nsp_e {
                    let v = p.w * a_s * p.s[a];
                    let base = self.nh + a * kt;
                    for b in 0..kt {
                        rhs[base + b] += v * tp.w * tp.t[b];
                    }
                }
            }
        }
        rhs
    }

    /// Solve the cached normal equations for the correction coefficients of
    /// a right-hand side anchored at t_n.
    pub fn solve_corrections(&self, patch: &Patch, rhs: &[f64], t_n: f64) -> CorrectionPoly {
        let x = patch.factor.solve(rhs);
        CorrectionPoly {
            coef_h: x[..self.nh].to_vec(),
            coef_e: x[self.nh..].to_vec(),
            t_n,
            center: patch.center,
            l_h: patch.l_h,
            dt_gamma: patch.dt_gamma,
        }
    }

    /// Assemble and solve for one patch at anchor time t_n.
    pub fn fit(&self, patch: &Patch, data: &dyn JumpData, t_n: f64) -> CorrectionPoly {
        let rhs = self.assemble_rhs(patch, data, t_n);
        self.solve_corrections(patch, &rhs, t_n)
    }

    /// Value of the quadratic functional for given coefficients (evaluated
    /// pointwise on the patch quadrature; zero-residual data gives zero).
    pub fn functional_value(
        &self,
        patch: &Patch,
        data: &dyn JumpData,
        t_n: f64,
        cp: &CorrectionPoly,
    ) -> f64 {
        let Physics { mu, eps, sigma } = self.physics;
        let mut j = 0.0;
        for vp in &self.vol {
            let x = patch.center.x + self.l_h * vp.xi;
            let y = patch.center.y + self.l_h * vp.eta;
            let p = Vec2::new(x, y);
            for tp in &self.taus {
                let t = t_n + self.dt_gamma * tp.tau;
                let dt_hx = self.eval_full(cp, Family::Hx, p, t, Deriv { dxi: 0, deta: 0, dtau: 1 });
                let dt_hy = self.eval_full(cp, Family::Hy, p, t, Deriv { dxi: 0, deta: 0, dtau: 1 });
                let dt_ez = self.eval_full(cp, Family::Ez, p, t, Deriv { dxi: 0, deta: 0, dtau: 1 });
                let dy_ez = self.eval_full(cp, Family::Ez, p, t, Deriv { dxi: 0, deta: 1, dtau: 0 });
                let dx_ez = self.eval_full(cp, Family::Ez, p, t, Deriv { dxi: 1, deta: 0, dtau: 0 });
                let dx_hy = self.eval_full(cp, Family::Hy, p, t, Deriv { dxi: 1, deta: 0, dtau: 0 });
                let dy_hx = self.eval_full(cp, Family::Hx, p, t, Deriv { dxi: 0, deta: 1, dtau: 0 });
                let ez = self.eval_full(cp, Family::Ez, p, t, Deriv::VALUE);
                let r1 = mu * dt_hx + dy_ez - data.f_d1x(x, y, t);
                let r2 = mu * dt_hy - dx_ez - data.f_d1y(x, y, t);
                let r3 = eps * dt_ez - dx_hy + dy_hx + sigma * ez - data.f_d2(x, y, t);
                j += 0.5 * self.l_c * vp.w * tp.w * (r1 * r1 + r2 * r2 + r3 * r3);
            }
        }
        for p in &patch.iface {
            for tp in &self.taus {
                let t = t_n + self.dt_gamma * tp.tau;
                let (a_s, b_s, d) = data.jump(p.pos, p.nrm, t);
                let hx = self.eval_full(cp, Family::Hx, p.pos, t, Deriv::VALUE);
                let hy = self.eval_full(cp, Family::Hy, p.pos, t, Deriv::VALUE);
                let ez = self.eval_full(cp, Family::Ez, p.pos, t, Deriv::VALUE);
                let r1 = ez - a_s;
                let r2 = p.nrm.x * hy - p.nrm.y * hx - b_s;
                let r3 = p.nrm.x * hx + p.nrm.y * hy - d / mu;
                j += 0.5 * p.w * tp.w * (r1 * r1 + r2 * r2 + r3 * r3);
            }
        }
        j
    }

    /// Correction value or mixed derivative in physical units (chain-rule
    /// scaled by 1/l_h and 1/dt_gamma per order).
    pub fn eval_full(
        &self,
        cp: &CorrectionPoly,
        family: Family,
        point: Vec2,
        t: f64,
        d: Deriv,
    ) -> f64 {
        let xi = (point.x - cp.center.x) / cp.l_h;
        let eta = (point.y - cp.center.y) / cp.l_h;
        let tau = (t - cp.t_n) / cp.dt_gamma;
        let kt = self.k + 1;
        let scale = cp.l_h.powi(-((d.dxi + d.deta) as i32)) * cp.dt_gamma.powi(-(d.dtau as i32));
        let mut acc = 0.0;
        match family {
            Family::Ez => {
                let smon = match &self.ebasis.spatial {
                    Spatial::Scalar(b) => b,
                    _ => unreachable!(),
                };
                for a in 0..self.ne / kt {
                    let sv = smon.eval(a, xi, eta, d.dxi, d.deta);
                    if sv == 0.0 {
                        continue;
                    }
                    for b in 0..kt {
                        acc += cp.coef_e[a * kt + b] * sv * tau_eval(b, tau, d.dtau);
                    }
                }
            }
            Family::Hx | Family::Hy => {
                let vmem = match &self.hbasis.spatial {
                    Spatial::DivFree(b) => &b.members,
                    _ => unreachable!(),
                };
                for (a, m) in vmem.iter().enumerate() {
                    let (vx, vy) = m.eval(xi, eta, d.dxi, d.deta);
                    let sv = if family == Family::Hx { vx } else { vy };
                    if sv == 0.0 {
                        continue;
                    }
                    for b in 0..kt {
                        acc += cp.coef_h[a * kt + b] * sv * tau_eval(b, tau, d.dtau);
                    }
                }
            }
        }
        acc * scale
    }

    /// D or a pure time derivative of it at a point inside the patch square.
    pub fn eval_correction(
        &self,
        cp: &CorrectionPoly,
        family: Family,
        point: Vec2,
        t: f64,
        tau_deriv: usize,
    ) -> Result<f64> {
        if tau_deriv > 3 {
            return Err(Error::UnsupportedDerivative { space: 0, time: tau_deriv });
        }
        let xi = (point.x - cp.center.x) / cp.l_h;
        let eta = (point.y - cp.center.y) / cp.l_h;
        let tau = (t - cp.t_n) / cp.dt_gamma;
        let tol = 1e-9;
        if xi.abs() > 0.5 + tol || eta.abs() > 0.5 + tol || tau > tol || tau < -1.0 - tol {
            return Err(Error::OutsidePatch);
        }
        Ok(self.eval_full(cp, family, point, t, Deriv { dxi: 0, deta: 0, dtau: tau_deriv }))
    }

    /// Taylor-extrapolated stage values D-hat_1..4 anchored at t_n:
    ///   D-hat_1 = D
    ///   D-hat_2 = D + (dt/2) D'
    ///   D-hat_3 = D + (dt/2) D' + (dt^2/4) D''
    ///   D-hat_4 = D + dt D' + (dt^2/2) D'' + (dt^3/4) D'''
    pub fn staged_corrections(
        &self,
        cp: &CorrectionPoly,
        family: Family,
        point: Vec2,
        dt: f64,
    ) -> Result<[f64; 4]> {
        let t = cp.t_n;
        let d0 = self.eval_correction(cp, family, point, t, 0)?;
        let d1 = self.eval_correction(cp, family, point, t, 1)?;
        let d2 = self.eval_correction(cp, family, point, t, 2)?;
        let d3 = self.eval_correction(cp, family, point, t, 3)?;
        Ok([
            d0,
            d0 + 0.5 * dt * d1,
            d0 + 0.5 * dt * d1 + 0.25 * dt * dt * d2,
            d0 + dt * d1 + 0.5 * dt * dt * d2 + 0.25 * dt * dt * dt * d3,
        ])
    }
}

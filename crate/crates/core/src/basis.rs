//! Scalar and divergence-free vector polynomial bases on scaled patch-local
//! space-time coordinates (xi, eta) in [-1/2, 1/2]^2 and tau in [-1, 0].
//!
//! The vector basis members are curls (d_eta psi, -d_xi psi) of the scalar
//! monomials psi of degree 1..k+1, which span exactly the divergence-free
//! subspace of [P^k]^2; the member count (k+1)(k+4)/2 stays below the
//! (k+1)(k+2) of the full product space.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 6;

/// xi^ax * eta^ay
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monomial2 {
    pub ax: u32,
    pub ay: u32,
}

impl Monomial2 {
    /// Value of the (dx, dy)-derivative at (xi, eta); dx, dy <= 1.
    fn eval(self, xi: f64, eta: f64, dx: usize, dy: usize) -> f64 {
        let part = |a: u32, t: f64, d: usize| -> f64 {
            match d {
                0 => t.powi(a as i32),
                1 => {
                    if a == 0 {
                        0.0
                    } else {
                        a as f64 * t.powi(a as i32 - 1)
                    }
                }
                _ => unreachable!(),
            }
        };
        part(self.ax, xi, dx) * part(self.ay, eta, dy)
    }
}

/// Monomials of total degree `lo..=hi`, ordered by degree then descending
/// x-exponent.
fn monomials(lo: usize, hi: usize) -> Vec<Monomial2> {
    let mut out = Vec::new();
    for d in lo..=hi {
        for ax in (0..=d).rev() {
            out.push(Monomial2 {
                ax: ax as u32,
                ay: (d - ax) as u32,
            });
        }
    }
    out
}

/// P^k on the patch: all monomials of total degree <= k.
#[derive(Debug, Clone)]
pub struct ScalarBasis {
    pub degree: usize,
    pub terms: Vec<Monomial2>,
}

pub fn scalar_basis(k: usize) -> Result<ScalarBasis> {
    if k > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(k));
    }
    Ok(ScalarBasis {
        degree: k,
        terms: monomials(0, k),
    })
}

impl ScalarBasis {
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn eval(&self, idx: usize, xi: f64, eta: f64, dx: usize, dy: usize) -> f64 {
        self.terms[idx].eval(xi, eta, dx, dy)
    }
}

/// One divergence-free member: the curl of a scalar monomial.
#[derive(Debug, Clone, Copy)]
pub struct CurlMember {
    /// x-component: coefficient and monomial (d_eta of the stream monomial)
    pub vx: (f64, Monomial2),
    /// y-component: -d_xi of the stream monomial
    pub vy: (f64, Monomial2),
}

impl CurlMember {
    /// (vx, vy) with an optional first spatial derivative applied to both.
    pub fn eval(&self, xi: f64, eta: f64, dx: usize, dy: usize) -> (f64, f64) {
        (
            self.vx.0 * self.vx.1.eval(xi, eta, dx, dy),
            self.vy.0 * self.vy.1.eval(xi, eta, dx, dy),
        )
    }
    /// Analytic divergence d_xi vx + d_eta vy at a point (identically zero).
    pub fn divergence(&self, xi: f64, eta: f64) -> f64 {
        self.vx.0 * self.vx.1.eval(xi, eta, 1, 0) + self.vy.0 * self.vy.1.eval(xi, eta, 0, 1)
    }
}

/// Divergence-free subspace of [P^k]^2.
#[derive(Debug, Clone)]
pub struct DivFreeBasis {
    pub degree: usize,
    pub members: Vec<CurlMember>,
}

pub fn divfree_basis(k: usize) -> Result<DivFreeBasis> {
    if k > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(k));
    }
    let members = monomials(1, k + 1)
        .into_iter()
        .map(|m| {
            let vx = if m.ay == 0 {
                (0.0, Monomial2 { ax: m.ax, ay: 0 })
            } else {
                (m.ay as f64, Monomial2 { ax: m.ax, ay: m.ay - 1 })
            };
            let vy = if m.ax == 0 {
                (0.0, Monomial2 { ax: 0, ay: m.ay })
            } else {
                (-(m.ax as f64), Monomial2 { ax: m.ax - 1, ay: m.ay })
            };
            CurlMember { vx, vy }
        })
        .collect();
    Ok(DivFreeBasis { degree: k, members })
}

impl DivFreeBasis {
    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Value of d^d/dtau^d of tau^b.
pub fn tau_eval(b: usize, tau: f64, d: usize) -> f64 {
    if d > b {
        return 0.0;
    }
    let mut c = 1.0;
    for m in 0..d {
        c *= (b - m) as f64;
    }
    c * tau.powi((b - d) as i32)
}

/// Spatial factor of a space-time basis.
#[derive(Debug, Clone)]
pub enum Spatial {
    Scalar(ScalarBasis),
    DivFree(DivFreeBasis),
}

impl Spatial {
    pub fn len(&self) -> usize {
        match self {
            Spatial::Scalar(b) => b.len(),
            Spatial::DivFree(b) => b.len(),
        }
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Tensor product of a spatial basis with the temporal monomials 1..tau^k.
/// Member (a, b) is spatial_a(xi, eta) * tau^b, flattened as a * (k_t+1) + b.
#[derive(Debug, Clone)]
pub struct SpaceTimeBasis {
    pub spatial: Spatial,
    pub time_degree: usize,
}

pub fn spacetime_tensor(spatial: Spatial, time_degree: usize) -> SpaceTimeBasis {
    SpaceTimeBasis {
        spatial,
        time_degree,
    }
}

/// Requested derivative of a space-time member: at most first order in each
/// spatial direction, at most third order in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deriv {
    pub dxi: usize,
    pub deta: usize,
    pub dtau: usize,
}

impl Deriv {
    pub const VALUE: Deriv = Deriv { dxi: 0, deta: 0, dtau: 0 };
    pub fn validate(self) -> Result<()> {
        if self.dxi > 1 || self.deta > 1 || self.dtau > 3 {
            return Err(Error::UnsupportedDerivative {
                space: self.dxi.max(self.deta),
                time: self.dtau,
            });
        }
        Ok(())
    }
}

impl SpaceTimeBasis {
    pub fn len(&self) -> usize {
        self.spatial.len() * (self.time_degree + 1)
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn split(&self, member: usize) -> (usize, usize) {
        (member / (self.time_degree + 1), member % (self.time_degree + 1))
    }

    /// Scalar member value; panics if the spatial factor is vector-valued.
    pub fn eval_scalar(&self, member: usize, xi: f64, eta: f64, tau: f64, d: Deriv) -> f64 {
        let (a, b) = self.split(member);
        match &self.spatial {
            Spatial::Scalar(s) => s.eval(a, xi, eta, d.dxi, d.deta) * tau_eval(b, tau, d.dtau),
            Spatial::DivFree(_) => panic!("vector basis evaluated as scalar"),
        }
    }

    /// Vector member value (vx, vy); panics on a scalar spatial factor.
    pub fn eval_vector(&self, member: usize, xi: f64, eta: f64, tau: f64, d: Deriv) -> (f64, f64) {
        let (a, b) = self.split(member);
        match &self.spatial {
            Spatial::DivFree(v) => {
                let (vx, vy) = v.members[a].eval(xi, eta, d.dxi, d.deta);
                let t = tau_eval(b, tau, d.dtau);
                (vx * t, vy * t)
            }
            Spatial::Scalar(_) => panic!("scalar basis evaluated as vector"),
        }
    }

    /// Per-member values of the requested derivative; scalar members come
    /// back as single values, vector members interleaved (vx, vy).
    pub fn eval_with_derivs(&self, xi: f64, eta: f64, tau: f64, d: Deriv) -> Result<Vec<f64>> {
        d.validate()?;
        let n = self.len();
        Ok(match &self.spatial {
            Spatial::Scalar(_) => (0..n).map(|m| self.eval_scalar(m, xi, eta, tau, d)).collect(),
            Spatial::DivFree(_) => (0..n)
                .flat_map(|m| {
                    let (vx, vy) = self.eval_vector(m, xi, eta, tau, d);
                    [vx, vy]
                })
                .collect(),
        })
    }
}

//! Manufactured-solution problem definitions: per-side exact fields, source
//! terms, jump data and level sets for the four interface geometries.
//!
//! Jump data is always computed from the trace difference of the two sides
//! and the level-set normal, never from hand-derived formulas.

use crate::error::Result;
use crate::geometry::{LevelSet, Side, Vec2};
use crate::grid::Family;
use std::f64::consts::PI;
use std::sync::Arc;

/// Constant physical parameters (continuous across the interface).
#[derive(Debug, Clone, Copy)]
pub struct Physics {
    pub mu: f64,
    pub eps: f64,
    pub sigma: f64,
}

impl Physics {
    pub fn unit() -> Self {
        Physics {
            mu: 1.0,
            eps: 1.0,
            sigma: 1.0,
        }
    }
}

/// Closed-form scalar field of (x, y, t).
pub type Field3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

fn field(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Field3 {
    Arc::new(f)
}

fn zero_field() -> Field3 {
    field(|_, _, _| 0.0)
}

/// Exact fields and sources on one side of the interface.
#[derive(Clone)]
pub struct SideFields {
    pub hx: Field3,
    pub hy: Field3,
    pub ez: Field3,
    pub f1x: Field3,
    pub f1y: Field3,
    pub f2: Field3,
}

/// A manufactured problem: level set, physics, and both sides' closed forms.
#[derive(Clone)]
pub struct Problem {
    pub id: String,
    pub level_set: LevelSet,
    pub physics: Physics,
    pub plus: SideFields,
    pub minus: SideFields,
}

impl Problem {
    pub fn side(&self, s: Side) -> &SideFields {
        match s {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    /// Exact field value of one family on one side.
    pub fn exact(&self, family: Family, s: Side, x: f64, y: f64, t: f64) -> f64 {
        let f = self.side(s);
        match family {
            Family::Hx => (f.hx)(x, y, t),
            Family::Hy => (f.hy)(x, y, t),
            Family::Ez => (f.ez)(x, y, t),
        }
    }

    /// Jump sources f_D = f^+ - f^- feeding the correction PDE system.
    pub fn f_d1x(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.plus.f1x)(x, y, t) - (self.minus.f1x)(x, y, t)
    }
    pub fn f_d1y(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.plus.f1y)(x, y, t) - (self.minus.f1y)(x, y, t)
    }
    pub fn f_d2(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.plus.f2)(x, y, t) - (self.minus.f2)(x, y, t)
    }

    /// Scalar jump data on Gamma: a_s = [[E_z]], b_s = n x [[H]],
    /// d = mu n . [[H]]. Propagates a degenerate-gradient error at cusps.
    pub fn jump_data(&self, q: Vec2, t: f64) -> Result<(f64, f64, f64)> {
        let n = self.level_set.unit_normal(q)?;
        let jhx = (self.plus.hx)(q.x, q.y, t) - (self.minus.hx)(q.x, q.y, t);
        let jhy = (self.plus.hy)(q.x, q.y, t) - (self.minus.hy)(q.x, q.y, t);
        let jez = (self.plus.ez)(q.x, q.y, t) - (self.minus.ez)(q.x, q.y, t);
        let a_s = jez;
        let b_s = n.x * jhy - n.y * jhx;
        let d = self.physics.mu * (n.x * jhx + n.y * jhy);
        Ok((a_s, b_s, d))
    }

    /// Exact jump of one field component at a point (difference of the two
    /// branches; defined everywhere the closed forms are).
    pub fn exact_jump(&self, family: Family, x: f64, y: f64, t: f64) -> f64 {
        self.exact(family, Side::Plus, x, y, t) - self.exact(family, Side::Minus, x, y, t)
    }
}

fn circle_fields() -> (SideFields, SideFields) {
    let tp = 2.0 * PI;
    let plus = SideFields {
        hx: field(move |x, y, t| (tp * x).sin() * (tp * y).sin() * (tp * t).sin()),
        hy: field(move |x, y, t| (tp * x).cos() * (tp * y).cos() * (tp * t).sin()),
        ez: field(move |x, y, t| (tp * x).sin() * (tp * y).cos() * (tp * t).cos()),
        f1x: zero_field(),
        f1y: zero_field(),
        f2: field(move |x, y, t| {
            (tp * (tp * t).sin() + (tp * t).cos()) * (tp * x).sin() * (tp * y).cos()
        }),
    };
    let minus = SideFields {
        hx: field(move |x, y, t| -2.0 * (tp * x).sin() * (tp * y).sin() * (tp * t).sin() + 5.0),
        hy: field(move |x, y, t| -2.0 * (tp * x).cos() * (tp * y).cos() * (tp * t).sin() + 3.0),
        ez: field(move |x, y, t| -2.0 * (tp * x).sin() * (tp * y).cos() * (tp * t).cos() + 2.0),
        f1x: zero_field(),
        f1y: zero_field(),
        f2: field(move |x, y, t| {
            -(2.0 * tp * (tp * t).sin() + 2.0 * (tp * t).cos()) * (tp * x).sin() * (tp * y).cos()
                + 2.0
        }),
    };
    (plus, minus)
}

fn star5_fields() -> (SideFields, SideFields) {
    let tp = 2.0 * PI;
    let fp = 4.0 * PI;
    let plus = SideFields {
        hx: field(move |x, y, t| (fp * x).sin() * (fp * y).sin() * (tp * t).cos()),
        hy: field(move |x, y, t| (fp * x).cos() * (fp * y).cos() * (tp * t).cos()),
        ez: zero_field(),
        f1x: field(move |x, y, t| -tp * (fp * x).sin() * (fp * y).sin() * (tp * t).sin()),
        f1y: field(move |x, y, t| -tp * (fp * x).cos() * (fp * y).cos() * (tp * t).sin()),
        f2: field(move |x, y, t| 2.0 * fp * (fp * x).sin() * (fp * y).cos() * (tp * t).cos()),
    };
    let minus = SideFields {
        hx: field(move |x, y, t| (-x * (-x * y).exp() + 2.0) * (tp * t).sin()),
        hy: field(move |x, y, t| (y * (-x * y).exp() + 3.0) * (tp * t).sin()),
        ez: field(move |x, y, t| (tp * x * y).sin() * (tp * t).cos()),
        f1x: field(move |x, y, t| {
            (tp * (-x * (-x * y).exp() + 2.0) + tp * x * (tp * x * y).cos()) * (tp * t).cos()
        }),
        f1y: field(move |x, y, t| {
            tp * (y * (-x * y).exp() - y * (tp * x * y).cos() + 3.0) * (tp * t).cos()
        }),
        f2: field(move |x, y, t| {
            (-tp * (tp * x * y).sin() + y * y * (-x * y).exp() + x * x * (-x * y).exp())
                * (tp * t).sin()
                + (tp * x * y).sin() * (tp * t).cos()
        }),
    };
    (plus, minus)
}

/// The four interface problems: `circle`, `star5`, `star3`, `nonsmooth`.
pub fn make_problem(id: &str) -> Result<Problem> {
    let physics = Physics::unit();
    let (level_set, fields) = match id {
        "circle" => (LevelSet::circle(0.5, 0.5, 0.25), circle_fields()),
        "star5" => (LevelSet::star(0.5, 0.5, 0.25, 0.05, 5), star5_fields()),
        "star3" => (LevelSet::star(0.55, 0.55, 0.25, 0.15, 3), circle_fields()),
        "nonsmooth" => (LevelSet::nonsmooth_tri_circle(), circle_fields()),
        other => return Err(crate::error::Error::UnknownProblem(other.to_string())),
    };
    Ok(Problem {
        id: id.to_string(),
        level_set,
        physics,
        plus: fields.0,
        minus: fields.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 5-point central difference, O(h^4); h small enough that the 4 pi
    /// frequency fields stay below the 1e-8 residual budget.
    fn d5(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 3e-4;
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    }

    /// TM_z residuals of one side's exact fields with its sources.
    fn residuals(p: &Problem, s: Side, x: f64, y: f64, t: f64) -> [f64; 3] {
        let f = p.side(s);
        let ph = p.physics;
        let hx = |x: f64, y: f64, t: f64| (f.hx)(x, y, t);
        let hy = |x: f64, y: f64, t: f64| (f.hy)(x, y, t);
        let ez = |x: f64, y: f64, t: f64| (f.ez)(x, y, t);
        let r1 = ph.mu * d5(|tt| hx(x, y, tt), t) + d5(|yy| ez(x, yy, t), y) - (f.f1x)(x, y, t);
        let r2 = ph.mu * d5(|tt| hy(x, y, tt), t) - d5(|xx| ez(xx, y, t), x) - (f.f1y)(x, y, t);
        let r3 = ph.eps * d5(|tt| ez(x, y, tt), t) - d5(|xx| hy(xx, y, t), x)
            + d5(|yy| hx(x, yy, t), y)
            + ph.sigma * ez(x, y, t)
            - (f.f2)(x, y, t);
        [r1, r2, r3]
    }

    #[test]
    fn printed_formula_spot_checks() {
        let p = make_problem("circle").unwrap();
        // E_z^+(x, y, 0) = sin(2 pi x) cos(2 pi y)
        let (x, y) = (0.3, 0.7);
        let want = (2.0 * PI * x).sin() * (2.0 * PI * y).cos();
        assert!((p.exact(Family::Ez, Side::Plus, x, y, 0.0) - want).abs() < 1e-15);
        // H_x^-(x, y, 0) = 5 (the sine time factor vanishes)
        assert!((p.exact(Family::Hx, Side::Minus, x, y, 0.0) - 5.0).abs() < 1e-15);
        // star5: f_2^+(x,y,t) = 8 pi sin(4 pi x) cos(4 pi y) cos(2 pi t)
        let s5 = make_problem("star5").unwrap();
        let t = 0.11;
        let want =
            8.0 * PI * (4.0 * PI * x).sin() * (4.0 * PI * y).cos() * (2.0 * PI * t).cos();
        assert!(((s5.plus.f2)(x, y, t) - want).abs() < 1e-12);
    }

    #[test]
    fn exact_fields_satisfy_pde_with_sources() {
        // transcription guard: residuals at random space-time samples
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for id in ["circle", "star5", "star3", "nonsmooth"] {
            let p = make_problem(id).unwrap();
            let mut worst = 0.0_f64;
            for _ in 0..1000 {
                let x = rng.gen_range(0.0..1.0);
                let y = rng.gen_range(0.0..1.0);
                let t = rng.gen_range(0.0..1.0);
                for s in [Side::Plus, Side::Minus] {
                    for r in residuals(&p, s, x, y, t) {
                        worst = worst.max(r.abs());
                    }
                }
            }
            assert!(worst <= 1e-8, "{id}: residual {worst}");
        }
    }

    #[test]
    fn exact_h_is_divergence_free_per_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for id in ["circle", "star5"] {
            let p = make_problem(id).unwrap();
            for _ in 0..200 {
                let x = rng.gen_range(0.0..1.0);
                let y = rng.gen_range(0.0..1.0);
                let t = rng.gen_range(0.0..1.0);
                for s in [Side::Plus, Side::Minus] {
                    let f = p.side(s);
                    let div = d5(|xx| (f.hx)(xx, y, t), x) + d5(|yy| (f.hy)(x, yy, t), y);
                    assert!(div.abs() <= 1e-9, "{id}: div {div}");
                }
            }
        }
    }

    #[test]
    fn jump_data_circle_matches_direct_evaluation() {
        // oracle: direct evaluation of the two printed branches
        let p = make_problem("circle").unwrap();
        let q = Vec2::new(0.75, 0.5);
        let (a_s, b_s, d) = p.jump_data(q, 0.0).unwrap();
        // a_s = 3 sin(1.5 pi) cos(pi) - 2 = 1
        let want = 3.0 * (1.5 * PI).sin() * PI.cos() - 2.0;
        assert!((a_s - want).abs() < 1e-14);
        // at t = 0 the H jumps are the constants (-5, -3); n = (1, 0)
        assert!((b_s - (-3.0)).abs() < 1e-14);
        assert!((d - (-5.0)).abs() < 1e-14);
    }

    #[test]
    fn jump_data_constants_when_time_factor_vanishes() {
        // sin(2 pi t) = 0 at t = 0.5: both sides' H differ by constants only
        let p = make_problem("star3").unwrap();
        let q = p.level_set.closest_point(Vec2::new(0.7, 0.6)).unwrap();
        let n = p.level_set.unit_normal(q).unwrap();
        let (_, b_s, d) = p.jump_data(q, 0.5).unwrap();
        assert!((b_s - (n.x * (-3.0) - n.y * (-5.0))).abs() < 1e-12);
        assert!((d - (n.x * (-5.0) + n.y * (-3.0))).abs() < 1e-12);
    }

    #[test]
    fn jump_data_star5_normal_agrees_with_finite_differences() {
        // oracle: recompute d with a finite-difference normal
        let p = make_problem("star5").unwrap();
        let q = p.level_set.closest_point(Vec2::new(0.78, 0.56)).unwrap();
        let t = 0.25;
        let (_, _, d) = p.jump_data(q, t).unwrap();
        let h = 1e-6;
        let ls = &p.level_set;
        let g = Vec2::new(
            (ls.eval(Vec2::new(q.x + h, q.y)) - ls.eval(Vec2::new(q.x - h, q.y))) / (2.0 * h),
            (ls.eval(Vec2::new(q.x, q.y + h)) - ls.eval(Vec2::new(q.x, q.y - h))) / (2.0 * h),
        );
        let n = g.scale(1.0 / g.norm());
        let jhx = p.exact_jump(Family::Hx, q.x, q.y, t);
        let jhy = p.exact_jump(Family::Hy, q.x, q.y, t);
        let want = p.physics.mu * (n.x * jhx + n.y * jhy);
        assert!((d - want).abs() <= 1e-6, "{d} vs {want}");
    }

    #[test]
    fn jump_data_is_time_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for id in ["circle", "star5", "star3", "nonsmooth"] {
            let p = make_problem(id).unwrap();
            let q = p
                .level_set
                .closest_point(Vec2::new(
                    rng.gen_range(0.4..0.6),
                    rng.gen_range(0.4..0.6),
                ))
                .unwrap();
            let t = rng.gen_range(0.0..1.0);
            let (a0, b0, d0) = p.jump_data(q, t).unwrap();
            let (a1, b1, d1) = p.jump_data(q, t + 1.0).unwrap();
            assert!((a0 - a1).abs() < 1e-12 && (b0 - b1).abs() < 1e-12 && (d0 - d1).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_problem_rejected() {
        assert!(make_problem("torus").is_err());
    }
}

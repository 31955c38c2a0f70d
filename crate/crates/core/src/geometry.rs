//! Implicit interface geometry: level sets, side classification, closest-point
//! projection, normals, and interface-curve quadrature inside a patch square.

use crate::error::{Error, Result};

/// Plain 2-D vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
    /// Rotate by +90 degrees.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}
impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

/// Which subdomain a point belongs to. `Plus` is the closed set phi >= 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// Implicit description of the interface, phi(x, y) = 0 on Gamma,
/// phi >= 0 in Omega+.
#[derive(Debug, Clone)]
pub enum LevelSet {
    /// phi = |p - center|^2 - radius^2
    Circle { center: Vec2, radius: f64 },
    /// phi = |p - center|^2 - r(theta)^2 with r = r0 + eps_amp * sin(omega * theta)
    Star {
        center: Vec2,
        r0: f64,
        eps_amp: f64,
        omega: u32,
    },
    /// Composite of three mutually tangent circles; the bounded lens between
    /// them is Omega-. phi = max over the three disk functions r^2 - d_i^2
    /// and a circumscribed-circle term d0^2 - rb^2 that keeps the thin wedge
    /// regions beyond the cusps in Omega+.
    TriCircle {
        centers: [Vec2; 3],
        radius: f64,
        bound_center: Vec2,
        bound_radius: f64,
        cusps: [Vec2; 3],
    },
    /// phi = normal . p - offset (test geometry; interface is a line)
    HalfPlane { normal: Vec2, offset: f64 },
}

impl LevelSet {
    pub fn circle(cx: f64, cy: f64, r: f64) -> Self {
        LevelSet::Circle {
            center: Vec2::new(cx, cy),
            radius: r,
        }
    }

    pub fn star(cx: f64, cy: f64, r0: f64, eps_amp: f64, omega: u32) -> Self {
        LevelSet::Star {
            center: Vec2::new(cx, cy),
            r0,
            eps_amp,
            omega,
        }
    }

    pub fn half_plane(nx: f64, ny: f64, offset: f64) -> Self {
        LevelSet::HalfPlane {
            normal: Vec2::new(nx, ny),
            offset,
        }
    }

    /// The non-smooth interface: three circles of radius sqrt(3)/2 centered
    /// at (0.5+r, 0.9), (0.5-r, 0.9) and (0.5, -0.6). The circles are
    /// mutually tangent; the cusps are the tangency points and the bounded
    /// curvilinear triangle between the circles is Omega-.
    pub fn nonsmooth_tri_circle() -> Self {
        let r = 3.0_f64.sqrt() / 2.0;
        let centers = [
            Vec2::new(0.5 + r, 0.9),
            Vec2::new(0.5 - r, 0.9),
            Vec2::new(0.5, -0.6),
        ];
        // tangency points are the midpoints of the center pairs
        let cusps = [
            Vec2::new(0.5, 0.9),
            (centers[0] + centers[2]).scale(0.5),
            (centers[1] + centers[2]).scale(0.5),
        ];
        // all three cusps are at distance 1/2 from the centroid of the centers
        let bound_center = Vec2::new(0.5, 0.4);
        LevelSet::TriCircle {
            centers,
            radius: r,
            bound_center,
            bound_radius: 0.5,
            cusps,
        }
    }

    /// Signed level-set value; total on the plane.
    pub fn eval(&self, p: Vec2) -> f64 {
        match self {
            LevelSet::Circle { center, radius } => (p - *center).norm_sq() - radius * radius,
            LevelSet::Star {
                center,
                r0,
                eps_amp,
                omega,
            } => {
                let d = p - *center;
                let theta = d.y.atan2(d.x);
                let r = r0 + eps_amp * (*omega as f64 * theta).sin();
                d.norm_sq() - r * r
            }
            LevelSet::TriCircle {
                centers,
                radius,
                bound_center,
                bound_radius,
                ..
            } => {
                let mut best = (p - *bound_center).norm_sq() - bound_radius * bound_radius;
                for c in centers {
                    let v = radius * radius - (p - *c).norm_sq();
                    if v > best {
                        best = v;
                    }
                }
                best
            }
            LevelSet::HalfPlane { normal, offset } => normal.dot(p) - offset,
        }
    }

    /// Analytic gradient of the active branch.
    pub fn grad(&self, p: Vec2) -> Vec2 {
        match self {
            LevelSet::Circle { center, .. } => (p - *center).scale(2.0),
            LevelSet::Star {
                center,
                r0,
                eps_amp,
                omega,
            } => {
                let d = p - *center;
                let dsq = d.norm_sq();
                if dsq == 0.0 {
                    return Vec2::new(0.0, 0.0);
                }
                let theta = d.y.atan2(d.x);
                let om = *omega as f64;
                let r = r0 + eps_amp * (om * theta).sin();
                let rp = eps_amp * om * (om * theta).cos();
                // grad theta = perp(d) / |d|^2
                let gt = d.perp().scale(1.0 / dsq);
                d.scale(2.0) - gt.scale(2.0 * r * rp)
            }
            LevelSet::TriCircle {
                centers,
                radius,
                bound_center,
                bound_radius,
                ..
            } => {
                // gradient of the active (max) branch; ties resolved by the
                // fixed order circle 0, 1, 2, bounding circle
                let mut best = f64::NEG_INFINITY;
                let mut g = Vec2::new(0.0, 0.0);
                for c in centers {
                    let v = radius * radius - (p - *c).norm_sq();
                    if v > best {
                        best = v;
                        g = (p - *c).scale(-2.0);
                    }
                }
                let vb = (p - *bound_center).norm_sq() - bound_radius * bound_radius;
                if vb > best {
                    g = (p - *bound_center).scale(2.0);
                }
                g
            }
            LevelSet::HalfPlane { normal, .. } => *normal,
        }
    }

    /// Side classification with the closed convention phi >= 0 -> Plus.
    pub fn side_of(&self, p: Vec2) -> Side {
        if self.eval(p) >= 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    /// Unit normal on Gamma pointing toward Omega+.
    pub fn unit_normal(&self, q: Vec2) -> Result<Vec2> {
        let g = self.grad(q);
        let n = g.norm();
        if n < 1e-14 {
            return Err(Error::DegenerateGradient { x: q.x, y: q.y });
        }
        Ok(g.scale(1.0 / n))
    }

    /// Closest point on Gamma to `p`.
    ///
    /// Per kind: circles project radially, the half plane orthogonally, star
    /// interfaces minimize the distance over the polar parametrization
    /// (coarse scan plus a safeguarded Newton polish), and the tri-circle
    /// composite compares the per-branch radial projections with the cusps.
    pub fn closest_point(&self, p: Vec2) -> Result<Vec2> {
        match self {
            LevelSet::Circle { center, radius } => {
                let d = p - *center;
                let n = d.norm();
                if n == 0.0 {
                    return Ok(*center + Vec2::new(*radius, 0.0));
                }
                Ok(*center + d.scale(radius / n))
            }
            LevelSet::HalfPlane { normal, offset } => {
                let t = (normal.dot(p) - offset) / normal.norm_sq();
                Ok(p - normal.scale(t))
            }
            LevelSet::Star { .. } => self.star_closest(p),
            LevelSet::TriCircle {
                centers,
                radius,
                cusps,
                ..
            } => {
                let mut best: Option<(f64, Vec2)> = None;
                let mut consider = |q: Vec2| {
                    let d = p.dist(q);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, q));
                    }
                };
                for c in centers {
                    let d = p - *c;
                    let n = d.norm();
                    if n == 0.0 {
                        continue;
                    }
                    let q = *c + d.scale(radius / n);
                    // the radial projection is on Gamma only if it is not
                    // covered by another branch
                    if self.eval(q) <= 1e-10 {
                        consider(q);
                    }
                }
                for cusp in cusps {
                    consider(*cusp);
                }
                best.map(|(_, q)| q)
                    .ok_or(Error::NonConvergence { what: "tri-circle projection" })
            }
        }
    }

    fn star_params(&self) -> (Vec2, f64, f64, f64) {
        match self {
            LevelSet::Star {
                center,
                r0,
                eps_amp,
                omega,
            } => (*center, *r0, *eps_amp, *omega as f64),
            _ => unreachable!(),
        }
    }

    fn star_gamma(&self, theta: f64) -> (Vec2, Vec2, Vec2) {
        let (c, r0, eps, om) = self.star_params();
        let r = r0 + eps * (om * theta).sin();
        let rp = eps * om * (om * theta).cos();
        let rpp = -eps * om * om * (om * theta).sin();
        let (s, co) = theta.sin_cos();
        let e = Vec2::new(co, s);
        let ep = Vec2::new(-s, co);
        let g = c + e.scale(r);
        let g1 = ep.scale(r) + e.scale(rp);
        let g2 = e.scale(rpp - r) + ep.scale(2.0 * rp);
        (g, g1, g2)
    }

    /// d/dtheta of (1/2)|gamma(theta) - p|^2 and its derivative.
    fn star_obj(&self, theta: f64, p: Vec2) -> (f64, f64) {
        let (g, g1, g2) = self.star_gamma(theta);
        let d = g - p;
        (d.dot(g1), g1.norm_sq() + d.dot(g2))
    }

    /// Newton with bisection safeguard on g(theta) = 0 inside a bracket with
    /// a sign change.
    fn star_polish(&self, p: Vec2, mut lo: f64, mut hi: f64) -> Option<f64> {
        let (mut glo, _) = self.star_obj(lo, p);
        let (ghi, _) = self.star_obj(hi, p);
        if glo == 0.0 {
            return Some(lo);
        }
        if ghi == 0.0 {
            return Some(hi);
        }
        if glo.signum() == ghi.signum() {
            return None;
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..80 {
            let (g, gp) = self.star_obj(t, p);
            if g == 0.0 {
                return Some(t);
            }
            if g.signum() == glo.signum() {
                lo = t;
                glo = g;
            } else {
                hi = t;
            }
            let newton = t - g / gp;
            t = if gp.abs() > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 {
                break;
            }
        }
        Some(t)
    }

    fn star_closest(&self, p: Vec2) -> Result<Vec2> {
        let (c, _, _, _) = self.star_params();
        let tau = 2.0 * std::f64::consts::PI;
        // fast path for points essentially on the curve: the closest point's
        // angle is within a small window of the point's own angle
        let phi = self.eval(p);
        let gn = self.grad(p).norm();
        if gn > 1e-12 {
            let est = phi.abs() / gn;
            if est < 1e-3 {
                let tp = (p.y - c.y).atan2(p.x - c.x);
                let w = tau / 64.0;
                if let Some(t) = self.star_sign_change_polish(p, tp - w, tp + w, 8) {
                    let (q, _, _) = self.star_gamma(t);
                    if p.dist(q) <= 2.0 * est + 1e-10 {
                        return Ok(q);
                    }
                }
            }
        }
        // global coarse scan of the polar parametrization
        let n = 1024;
        let mut best_i = 0;
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            let t = tau * i as f64 / n as f64;
            let (g, _, _) = self.star_gamma(t);
            let d = (g - p).norm_sq();
            if d < best_d {
                best_d = d;
                best_i = i;
            }
        }
        let t0 = tau * best_i as f64 / n as f64;
        let w = tau / n as f64;
        match self.star_sign_change_polish(p, t0 - w, t0 + w, 32) {
            Some(t) => {
                let (q, _, _) = self.star_gamma(t);
                Ok(q)
            }
            None => Err(Error::NonConvergence { what: "star closest point" }),
        }
    }

    /// Locate a sign change of the distance derivative inside [lo, hi] by
    /// subdivision, then polish it.
    fn star_sign_change_polish(&self, p: Vec2, lo: f64, hi: f64, parts: usize) -> Option<f64> {
        let mut prev_t = lo;
        let (mut prev_g, _) = self.star_obj(lo, p);
        let mut best: Option<(f64, f64)> = None;
        for i in 1..=parts {
            let t = lo + (hi - lo) * i as f64 / parts as f64;
            let (g, _) = self.star_obj(t, p);
            if prev_g <= 0.0 && g >= 0.0 {
                if let Some(root) = self.star_polish(p, prev_t, t) {
                    let (q, _, _) = self.star_gamma(root);
                    let d = p.dist(q);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, root));
                    }
                }
            }
            prev_t = t;
            prev_g = g;
        }
        best.map(|(_, t)| t)
    }
}

/// One quadrature point on an interface segment.
#[derive(Debug, Clone, Copy)]
pub struct SegQuadPoint {
    pub point: Vec2,
    /// Physical arclength weight.
    pub weight: f64,
    /// Unit normal pointing toward Omega+.
    pub normal: Vec2,
}

/// A short piece of Gamma inside a patch square with its quadrature.
#[derive(Debug, Clone)]
pub struct InterfaceSegment {
    pub endpoints: [Vec2; 2],
    pub quad: Vec<SegQuadPoint>,
}

impl InterfaceSegment {
    pub fn arclength(&self) -> f64 {
        self.quad.iter().map(|q| q.weight).sum()
    }
}

/// Resolution of the marching-squares sub-grid used to localize Gamma in a
/// patch.
const MS_GRID: usize = 32;

/// Extract Gamma inside the axis-aligned square (center, side) and lay out
/// `n_q` Gauss points per segment, projected onto Gamma, with arclength
/// weights. Segments are chords of at most `max_chord` obtained by
/// resampling the marching-squares polyline; weights carry the metric factor
/// |dq/ds| of the chord-to-curve projection so the rule converges at Gauss
/// rates on smooth pieces.
pub fn interface_segments(
    ls: &LevelSet,
    center: Vec2,
    side: f64,
    n_q: usize,
    max_chord: f64,
) -> Result<Vec<InterfaceSegment>> {
    let m = MS_GRID;
    let x0 = center.x - 0.5 * side;
    let y0 = center.y - 0.5 * side;
    let step = side / m as f64;
    let node = |gi: usize, gj: usize| Vec2::new(x0 + gi as f64 * step, y0 + gj as f64 * step);

    // level-set samples on the (m+1)^2 sub-grid
    let mut v = vec![0.0_f64; (m + 1) * (m + 1)];
    for gi in 0..=m {
        for gj in 0..=m {
            v[gi * (m + 1) + gj] = ls.eval(node(gi, gj));
        }
    }
    let plus = |val: f64| val >= 0.0;

    // crossings per edge, keyed so cells can share endpoints exactly
    // edge ids: horizontal (gi, gj) joins (gi,gj)-(gi+1,gj); vertical joins (gi,gj)-(gi,gj+1)
    let hid = |gi: usize, gj: usize| gi * (m + 1) + gj;
    let vid = |gi: usize, gj: usize| (m + 1) * (m + 1) + gi * (m + 1) + gj;
    let mut crossing: std::collections::HashMap<usize, Vec2> = std::collections::HashMap::new();
    let lerp_zero = |a: Vec2, b: Vec2, va: f64, vb: f64| {
        let t = va / (va - vb);
        Vec2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    };
    // crossings on the square's boundary edges terminate open polylines and
    // fix the integration range, so those are refined to a true root of phi
    // by bisection; interior crossings only seed points that get projected
    // onto Gamma anyway.
    let refine = |a: Vec2, b: Vec2, va: f64, vb: f64| -> Vec2 {
        let (mut ta, mut tb) = (0.0_f64, 1.0_f64);
        let (mut fa, _) = (va, vb);
        for _ in 0..60 {
            let t = 0.5 * (ta + tb);
            let f = ls.eval(Vec2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
            if f == 0.0 {
                ta = t;
                tb = t;
                break;
            }
            if (f >= 0.0) == (fa >= 0.0) {
                ta = t;
                fa = f;
            } else {
                tb = t;
            }
        }
        let t = 0.5 * (ta + tb);
        Vec2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    };
    for gi in 0..m {
        for gj in 0..=m {
            let (va, vb) = (v[gi * (m + 1) + gj], v[(gi + 1) * (m + 1) + gj]);
            if plus(va) != plus(vb) {
                let (a, b) = (node(gi, gj), node(gi + 1, gj));
                let p = if gj == 0 || gj == m {
                    refine(a, b, va, vb)
                } else {
                    lerp_zero(a, b, va, vb)
                };
                crossing.insert(hid(gi, gj), p);
            }
        }
    }
    for gi in 0..=m {
        for gj in 0..m {
            let (va, vb) = (v[gi * (m + 1) + gj], v[gi * (m + 1) + gj + 1]);
            if plus(va) != plus(vb) {
                let (a, b) = (node(gi, gj), node(gi, gj + 1));
                let p = if gi == 0 || gi == m {
                    refine(a, b, va, vb)
                } else {
                    lerp_zero(a, b, va, vb)
                };
                crossing.insert(vid(gi, gj), p);
            }
        }
    }
    if crossing.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    // per-cell connection of crossed edges into segments (edge-id pairs)
    let mut links: Vec<(usize, usize)> = Vec::new();
    for ci in 0..m {
        for cj in 0..m {
            let e = [
                hid(ci, cj),     // bottom
                vid(ci + 1, cj), // right
                hid(ci, cj + 1), // top
                vid(ci, cj),     // left
            ];
            let hit: Vec<usize> = e.iter().copied().filter(|id| crossing.contains_key(id)).collect();
            match hit.len() {
                0 => {}
                2 => links.push((hit[0], hit[1])),
                4 => {
                    // saddle cell: split according to the center sample; when
                    // the center matches the bottom-left corner, the contour
                    // pinches off the bottom-right and top-left corners
                    let cc = node(ci, cj) + Vec2::new(0.5 * step, 0.5 * step);
                    let s00 = plus(v[ci * (m + 1) + cj]);
                    if plus(ls.eval(cc)) == s00 {
                        links.push((e[0], e[1]));
                        links.push((e[2], e[3]));
                    } else {
                        links.push((e[0], e[3]));
                        links.push((e[2], e[1]));
                    }
                }
                _ => {
                    // 1 or 3 crossings can only appear through exact zeros on
                    // corners; connect greedily in pairs
                    for pair in hit.chunks(2) {
                        if pair.len() == 2 {
                            links.push((pair[0], pair[1]));
                        }
                    }
                }
            }
        }
    }
    if links.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    // chain the segment soup into polylines
    let mut adj: std::collections::HashMap<usize, Vec<(usize, usize)>> =
        std::collections::HashMap::new();
    for (k, &(a, b)) in links.iter().enumerate() {
        adj.entry(a).or_default().push((k, b));
        adj.entry(b).or_default().push((k, a));
    }
    let mut used = vec![false; links.len()];
    let mut polylines: Vec<Vec<Vec2>> = Vec::new();
    // open chains first (endpoints of degree 1), then closed loops
    let mut starts: Vec<usize> = adj
        .iter()
        .filter(|(_, l)| l.len() == 1)
        .map(|(&id, _)| id)
        .collect();
    starts.sort_unstable();
    let mut all_edges: Vec<usize> = adj.keys().copied().collect();
    all_edges.sort_unstable();
    let walk = |start: usize, used: &mut Vec<bool>| -> Vec<Vec2> {
        let mut pts = vec![crossing[&start]];
        let mut cur = start;
        loop {
            let next = adj[&cur]
                .iter()
                .find(|(k, _)| !used[*k])
                .copied();
            match next {
                Some((k, other)) => {
                    used[k] = true;
                    pts.push(crossing[&other]);
                    cur = other;
                }
                None => break,
            }
        }
        pts
    };
    for s in starts {
        if adj[&s].iter().any(|(k, _)| !used[*k]) {
            polylines.push(walk(s, &mut used));
        }
    }
    for s in all_edges {
        if adj[&s].iter().any(|(k, _)| !used[*k]) {
            polylines.push(walk(s, &mut used));
        }
    }

    // resample each polyline into chords of bounded length and build the
    // projected Gauss rule on every chord
    let (gx, gw) = crate::quadrature::gauss_legendre(n_q);
    let mut segments = Vec::new();
    for poly in polylines {
        let mut len = 0.0;
        for w in poly.windows(2) {
            len += w[0].dist(w[1]);
        }
        if len == 0.0 {
            continue;
        }
        let nseg = (len / max_chord).ceil().max(1.0) as usize;
        let at = |s: f64| -> Vec2 {
            // point at arclength fraction s of the polyline
            let target = s.clamp(0.0, 1.0) * len;
            let mut acc = 0.0;
            for w in poly.windows(2) {
                let l = w[0].dist(w[1]);
                if acc + l >= target || l == 0.0 {
                    let t = if l > 0.0 { (target - acc) / l } else { 0.0 };
                    return Vec2::new(w[0].x + t * (w[1].x - w[0].x), w[0].y + t * (w[1].y - w[0].y));
                }
                acc += l;
            }
            *poly.last().unwrap()
        };
        for k in 0..nseg {
            let a = at(k as f64 / nseg as f64);
            let b = at((k + 1) as f64 / nseg as f64);
            let chord = b - a;
            let clen = chord.norm();
            if clen == 0.0 {
                continue;
            }
            let proj_at = |s: f64| -> Result<Vec2> {
                ls.closest_point(Vec2::new(a.x + s * chord.x, a.y + s * chord.y))
            };
            let mut quad = Vec::with_capacity(n_q);
            let delta = 1e-4;
            for (gxi, gwi) in gx.iter().zip(&gw) {
                let s = 0.5 * (gxi + 1.0);
                let q = proj_at(s)?;
                let qp = proj_at(s + delta)?;
                let qm = proj_at(s - delta)?;
                let metric = qp.dist(qm) / (2.0 * delta);
                let normal = ls.unit_normal(q)?;
                quad.push(SegQuadPoint {
                    point: q,
                    weight: 0.5 * gwi * metric,
                    normal,
                });
            }
            segments.push(InterfaceSegment {
                endpoints: [ls.closest_point(a)?, ls.closest_point(b)?],
                quad,
            });
        }
    }
    if segments.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(segments)
}

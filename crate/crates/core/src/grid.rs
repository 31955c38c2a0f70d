//! Staggered TM_z grid bookkeeping: node coordinates, periodic wrapping,
//! field storage, side masks, and detection of nodes whose stencils cross the
//! interface.
//!
//! Index conventions follow the staggering definitions: `Hx` lives on edge
//! midpoints (x_i, y_{j+1/2}) with i in [1, Nx], j in [0, Ny-1]; `Hy` on
//! (x_{i+1/2}, y_j) with i in [0, Nx-1], j in [1, Ny]; `Ez` on cell centers
//! (x_i, y_j) with i, j in [1, Nx] x [1, Ny], where x_i = x_l + (i-1/2) dx
//! and x_{i+1/2} = x_l + i dx. Internally every family is stored 0-based in
//! an (Nx, Ny) array.

use crate::error::{Error, Result};
use crate::geometry::{LevelSet, Side, Vec2};
use ndarray::Array2;

/// Field families on the staggered grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Hx,
    Hy,
    Ez,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Hx => "Hx",
            Family::Hy => "Hy",
            Family::Ez => "Ez",
        }
    }
    pub const ALL: [Family; 3] = [Family::Hx, Family::Hy, Family::Ez];
}

/// Rectangular domain with uniform cells.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub x_l: f64,
    pub x_r: f64,
    pub y_b: f64,
    pub y_t: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn unit_square(n: usize) -> Self {
        GridSpec {
            x_l: 0.0,
            x_r: 1.0,
            y_b: 0.0,
            y_t: 1.0,
            nx: n,
            ny: n,
        }
    }
    pub fn dx(&self) -> f64 {
        (self.x_r - self.x_l) / self.nx as f64
    }
    pub fn dy(&self) -> f64 {
        (self.y_t - self.y_b) / self.ny as f64
    }
    pub fn h(&self) -> f64 {
        self.dx().max(self.dy())
    }

    fn ranges(&self, family: Family) -> ((i64, i64), (i64, i64)) {
        let nx = self.nx as i64;
        let ny = self.ny as i64;
        match family {
            Family::Hx => ((1, nx), (0, ny - 1)),
            Family::Hy => ((0, nx - 1), (1, ny)),
            Family::Ez => ((1, nx), (1, ny)),
        }
    }

    /// Node coordinates in the family's index convention. Errors on indices
    /// outside the family's range; use [`GridSpec::wrap`] first for periodic
    /// access.
    pub fn node_coords(&self, family: Family, i: i64, j: i64) -> Result<Vec2> {
        let ((ilo, ihi), (jlo, jhi)) = self.ranges(family);
        if i < ilo || i > ihi || j < jlo || j > jhi {
            return Err(Error::IndexOutOfRange {
                family: family.name(),
                i,
                j,
            });
        }
        Ok(self.coords_unchecked(family, i, j))
    }

    fn coords_unchecked(&self, family: Family, i: i64, j: i64) -> Vec2 {
        let dx = self.dx();
        let dy = self.dy();
        let (xi, yj) = match family {
            Family::Hx => ((i as f64 - 0.5) * dx, j as f64 * dy),
            Family::Hy => (i as f64 * dx, (j as f64 - 0.5) * dy),
            Family::Ez => ((i as f64 - 0.5) * dx, (j as f64 - 0.5) * dy),
        };
        Vec2::new(self.x_l + xi, self.y_b + yj)
    }

    /// Shift indices by multiples of the period into the family's range.
    pub fn wrap(&self, family: Family, i: i64, j: i64) -> (i64, i64) {
        let ((ilo, _), (jlo, _)) = self.ranges(family);
        let nx = self.nx as i64;
        let ny = self.ny as i64;
        (ilo + (i - ilo).rem_euclid(nx), jlo + (j - jlo).rem_euclid(ny))
    }

    /// Coordinates of the wrapped index: always the canonical in-range
    /// position, so periodic images share coordinates bit-exactly.
    pub fn coords_wrapped(&self, family: Family, i: i64, j: i64) -> Vec2 {
        let (iw, jw) = self.wrap(family, i, j);
        self.coords_unchecked(family, iw, jw)
    }

    /// Storage coordinates for a 0-based (row, col) pair; rows index x.
    pub fn storage_coords(&self, family: Family, r: usize, c: usize) -> Vec2 {
        let ((ilo, _), (jlo, _)) = self.ranges(family);
        self.coords_unchecked(family, ilo + r as i64, jlo + c as i64)
    }

    /// Coordinates of the cell corner (x_{i+1/2}, y_{j+1/2}) = (x_l + r dx,
    /// y_b + c dy) where the discrete divergence lives.
    pub fn corner_coords(&self, r: usize, c: usize) -> Vec2 {
        Vec2::new(
            self.x_l + r as f64 * self.dx(),
            self.y_b + c as f64 * self.dy(),
        )
    }

    /// Map family indices to 0-based storage (row, col).
    pub fn to_storage(&self, family: Family, i: i64, j: i64) -> (usize, usize) {
        let (iw, jw) = self.wrap(family, i, j);
        let ((ilo, _), (jlo, _)) = self.ranges(family);
        ((iw - ilo) as usize, (jw - jlo) as usize)
    }

    /// Inverse of [`GridSpec::to_storage`].
    pub fn from_storage(&self, family: Family, r: usize, c: usize) -> (i64, i64) {
        let ((ilo, _), (jlo, _)) = self.ranges(family);
        (ilo + r as i64, jlo + c as i64)
    }

    /// Wrap a 0-based storage index.
    pub fn wrap_storage(&self, r: i64, c: i64) -> (usize, usize) {
        (
            r.rem_euclid(self.nx as i64) as usize,
            c.rem_euclid(self.ny as i64) as usize,
        )
    }
}

/// Staggered field storage at one time level; all arrays are (nx, ny).
#[derive(Debug, Clone)]
pub struct FieldSet {
    pub hx: Array2<f64>,
    pub hy: Array2<f64>,
    pub ez: Array2<f64>,
    pub time: f64,
}

impl FieldSet {
    pub fn zeros(spec: &GridSpec, time: f64) -> Self {
        FieldSet {
            hx: Array2::zeros((spec.nx, spec.ny)),
            hy: Array2::zeros((spec.nx, spec.ny)),
            ez: Array2::zeros((spec.nx, spec.ny)),
            time,
        }
    }
    pub fn get(&self, family: Family) -> &Array2<f64> {
        match family {
            Family::Hx => &self.hx,
            Family::Hy => &self.hy,
            Family::Ez => &self.ez,
        }
    }
    pub fn get_mut(&mut self, family: Family) -> &mut Array2<f64> {
        match family {
            Family::Hx => &mut self.hx,
            Family::Hy => &mut self.hy,
            Family::Ez => &mut self.ez,
        }
    }
}

/// A node identified by family and 0-based storage index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub family: Family,
    pub r: usize,
    pub c: usize,
}

impl PartialOrd for Family {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Family {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let rank = |f: &Family| match f {
            Family::Hx => 0,
            Family::Hy => 1,
            Family::Ez => 2,
        };
        rank(self).cmp(&rank(other))
    }
}

/// Per-node sides for the three field families and the divergence corners,
/// plus the list of nodes needing a correction.
#[derive(Debug, Clone)]
pub struct SideMasks {
    pub hx: Array2<Side>,
    pub hy: Array2<Side>,
    pub ez: Array2<Side>,
    pub corner: Array2<Side>,
    /// Canonical order: family (Hx, Hy, Ez), then row-major storage index.
    pub corrected: Vec<Node>,
    hx_idx: Array2<i32>,
    hy_idx: Array2<i32>,
    ez_idx: Array2<i32>,
}

impl SideMasks {
    pub fn side(&self, family: Family, r: usize, c: usize) -> Side {
        match family {
            Family::Hx => self.hx[(r, c)],
            Family::Hy => self.hy[(r, c)],
            Family::Ez => self.ez[(r, c)],
        }
    }

    /// Index into the corrected list (and any table parallel to it).
    pub fn corrected_index(&self, family: Family, r: usize, c: usize) -> Option<usize> {
        let v = match family {
            Family::Hx => self.hx_idx[(r, c)],
            Family::Hy => self.hy_idx[(r, c)],
            Family::Ez => self.ez_idx[(r, c)],
        };
        (v >= 0).then_some(v as usize)
    }
}

/// Stencil offsets, in half-cell units along one axis, reached by the
/// centered derivative of the given order.
pub fn stencil_offsets(order: usize) -> &'static [i64] {
    match order {
        2 => &[-1, 1],
        4 => &[-3, -1, 1, 3],
        _ => panic!("unsupported scheme order {order}"),
    }
}

/// Classify node sides and collect every node sampled from the opposite side
/// by some stencil of the scheme: the centered first-derivative stencils of
/// the update (centered at Hx, Hy and Ez nodes) and the corner-centered
/// discrete-divergence stencils used by the corrected divergence diagnostic.
pub fn classify_nodes(spec: &GridSpec, ls: &LevelSet, order: usize) -> SideMasks {
    let (nx, ny) = (spec.nx, spec.ny);
    let side_array = |family: Family| {
        Array2::from_shape_fn((nx, ny), |(r, c)| {
            ls.side_of(spec.storage_coords(family, r, c))
        })
    };
    let hx = side_array(Family::Hx);
    let hy = side_array(Family::Hy);
    let ez = side_array(Family::Ez);
    let corner = Array2::from_shape_fn((nx, ny), |(r, c)| ls.side_of(spec.corner_coords(r, c)));

    let mut marked: [Array2<bool>; 3] = [
        Array2::from_elem((nx, ny), false),
        Array2::from_elem((nx, ny), false),
        Array2::from_elem((nx, ny), false),
    ];
    let fam_slot = |f: Family| match f {
        Family::Hx => 0usize,
        Family::Hy => 1,
        Family::Ez => 2,
    };
    let side_of = |f: Family, r: usize, c: usize| match f {
        Family::Hx => hx[(r, c)],
        Family::Hy => hy[(r, c)],
        Family::Ez => ez[(r, c)],
    };
    let offsets = stencil_offsets(order);

    // sample index lists, in storage indexing: the sampled node sits at the
    // center coordinate plus (offset/2) cells along one axis
    //_center family_   _sampled_  _axis_  storage index of sample
    //  Ez(r,c)           Hy         x      (r + (o+1)/2, c)
    //  Ez(r,c)           Hx         y      (r, c + (o+1)/2)
    //  Hx(r,c)           Ez         y      (r, c + (o-1)/2)
    //  Hy(r,c)           Ez         x      (r + (o-1)/2, c)
    //  corner(r,c)       Hx         x      (r + (o-1)/2, c)
    //  corner(r,c)       Hy         y      (r, c + (o-1)/2)
    let mut mark = |center_side: Side, fam: Family, r: i64, c: i64| {
        let (rw, cw) = spec.wrap_storage(r, c);
        if side_of(fam, rw, cw) != center_side {
            marked[fam_slot(fam)][(rw, cw)] = true;
        }
    };
    for r in 0..nx {
        for c in 0..ny {
            let (ri, ci) = (r as i64, c as i64);
            let s_ez = ez[(r, c)];
            let s_hx = hx[(r, c)];
            let s_hy = hy[(r, c)];
            let s_cn = corner[(r, c)];
            for &o in offsets {
                mark(s_ez, Family::Hy, ri + (o + 1) / 2, ci);
                mark(s_ez, Family::Hx, ri, ci + (o + 1) / 2);
                mark(s_hx, Family::Ez, ri, ci + (o - 1) / 2);
                mark(s_hy, Family::Ez, ri + (o - 1) / 2, ci);
                mark(s_cn, Family::Hx, ri + (o - 1) / 2, ci);
                mark(s_cn, Family::Hy, ri, ci + (o - 1) / 2);
            }
        }
    }

    let mut corrected = Vec::new();
    let mut idx = [
        Array2::from_elem((nx, ny), -1_i32),
        Array2::from_elem((nx, ny), -1_i32),
        Array2::from_elem((nx, ny), -1_i32),
    ];
    for family in Family::ALL {
        let slot = fam_slot(family);
        for r in 0..nx {
            for c in 0..ny {
                if marked[slot][(r, c)] {
                    idx[slot][(r, c)] = corrected.len() as i32;
                    corrected.push(Node { family, r, c });
                }
            }
        }
    }
    let [hx_idx, hy_idx, ez_idx] = idx;
    SideMasks {
        hx,
        hy,
        ez,
        corner,
        corrected,
        hx_idx,
        hy_idx,
        ez_idx,
    }
}

//! Uniform cell-centred grids, Ω-masks, and grid functions.
//!
//! A cell belongs to the mask when it meets Ω in positive area; its weight is
//! the covered fraction of the cell. Two neighbouring cells are linked when a
//! single rectangle of Ω overlaps both, so finite differences never jump
//! across a slit or a gap narrower than the grid spacing.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{union_area, Aabb, Point, RectDomain};
use crate::quadrature::PlaneFunction;

pub const NONE: u32 = u32::MAX;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: Point, h: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) || nx == 0 || ny == 0 {
            return Err(Error::Parameter(format!("invalid grid: h={h}, {nx}x{ny}")));
        }
        if origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("grid origin must be finite".into()));
        }
        Ok(GridSpec { origin, h, nx, ny })
    }

    /// Grid aligned to multiples of `h` that covers `b` plus `pad` cells.
    pub fn covering(b: &Aabb, h: f64, pad: usize) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Parameter(format!(
                "grid spacing must be positive, got {h}"
            )));
        }
        let lo = [
            ((b.lo[0] / h).floor() - pad as f64) * h,
            ((b.lo[1] / h).floor() - pad as f64) * h,
        ];
        let nx = ((b.hi[0] - lo[0]) / h).ceil() as usize + pad;
        let ny = ((b.hi[1] - lo[1]) / h).ceil() as usize + pad;
        Self::new(lo, h, nx.max(1), ny.max(1))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, k: usize) -> usize {
        k * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn center(&self, i: usize, k: usize) -> Point {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (k as f64 + 0.5) * self.h,
        ]
    }

    pub fn cell_box(&self, i: usize, k: usize) -> Aabb {
        let lo = [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + k as f64 * self.h,
        ];
        Aabb::new(lo, [lo[0] + self.h, lo[1] + self.h])
    }

    pub fn coverage(&self) -> Aabb {
        Aabb::new(
            self.origin,
            [
                self.origin[0] + self.nx as f64 * self.h,
                self.origin[1] + self.ny as f64 * self.h,
            ],
        )
    }

    /// Cell containing `y` (half-open cells), if any.
    pub fn locate(&self, y: Point) -> Option<(usize, usize)> {
        let fx = ((y[0] - self.origin[0]) / self.h).floor();
        let fy = ((y[1] - self.origin[1]) / self.h).floor();
        (fx >= 0.0 && fy >= 0.0 && (fx as usize) < self.nx && (fy as usize) < self.ny)
            .then_some((fx as usize, fy as usize))
    }

    /// Index range `[i0, i1] x [k0, k1]` of cells meeting the closed box (clipped).
    fn cell_range(&self, b: &Aabb) -> Option<[usize; 4]> {
        let t = |v: f64, o: f64| (v - o) / self.h;
        let i0 = t(b.lo[0], self.origin[0]).floor().max(0.0);
        let k0 = t(b.lo[1], self.origin[1]).floor().max(0.0);
        let i1 = (t(b.hi[0], self.origin[0]).ceil() - 1.0).min(self.nx as f64 - 1.0);
        let k1 = (t(b.hi[1], self.origin[1]).ceil() - 1.0).min(self.ny as f64 - 1.0);
        (i0 <= i1 && k0 <= k1).then(|| [i0 as usize, i1 as usize, k0 as usize, k1 as usize])
    }
}

/// Ω-membership of grid cells with area-fraction weights and neighbour links.
#[derive(Clone, Debug)]
pub struct CellMask {
    spec: GridSpec,
    weight: Vec<f64>,
    /// Link between `(i, k)` and `(i + 1, k)`.
    link_x: Vec<bool>,
    /// Link between `(i, k)` and `(i, k + 1)`.
    link_y: Vec<bool>,
}

impl CellMask {
    /// Every cell active with unit weight and all neighbours linked.
    pub fn full(spec: GridSpec) -> Self {
        let n = spec.len();
        let mut link_x = vec![true; n];
        let mut link_y = vec![true; n];
        for k in 0..spec.ny {
            link_x[spec.index(spec.nx - 1, k)] = false;
        }
        for i in 0..spec.nx {
            link_y[spec.index(i, spec.ny - 1)] = false;
        }
        CellMask {
            spec,
            weight: vec![1.0; n],
            link_x,
            link_y,
        }
    }

    pub fn from_domain(dom: &RectDomain, spec: GridSpec) -> Self {
        let n = spec.len();
        let mut full = vec![false; n];
        let mut link_x = vec![false; n];
        let mut link_y = vec![false; n];
        let mut partial: HashMap<usize, Vec<u32>> = HashMap::new();
        for (id, r) in dom.rects().iter().enumerate() {
            let rb = r.closure();
            let Some([i0, i1, k0, k1]) = spec.cell_range(&rb) else {
                continue;
            };
            for k in k0..=k1 {
                for i in i0..=i1 {
                    let idx = spec.index(i, k);
                    let cb = spec.cell_box(i, k);
                    if rb.contains_box(&cb) {
                        full[idx] = true;
                    } else if !full[idx] && rb.intersect_solid(&cb).is_some() {
                        partial.entry(idx).or_default().push(id as u32);
                    }
                    if i < i1 {
                        link_x[idx] = true;
                    }
                    if k < k1 {
                        link_y[idx] = true;
                    }
                }
            }
        }
        let mut weight: Vec<f64> = full.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect();
        let rects = dom.rects();
        for (idx, ids) in partial {
            if full[idx] {
                continue;
            }
            let (i, k) = spec.coords(idx);
            let cb = spec.cell_box(i, k);
            let boxes: Vec<Aabb> = ids
                .iter()
                .filter_map(|&id| rects[id as usize].closure().intersect_solid(&cb))
                .collect();
            weight[idx] = (union_area(&boxes) / cb.area()).clamp(0.0, 1.0);
        }
        // a link needs both ends active; grid edges are never linked
        for k in 0..spec.ny {
            for i in 0..spec.nx {
                let idx = spec.index(i, k);
                if link_x[idx] && (i + 1 >= spec.nx || weight[idx + 1] <= 0.0 || weight[idx] <= 0.0)
                {
                    link_x[idx] = false;
                }
                if link_y[idx]
                    && (k + 1 >= spec.ny || weight[idx + spec.nx] <= 0.0 || weight[idx] <= 0.0)
                {
                    link_y[idx] = false;
                }
            }
        }
        CellMask {
            spec,
            weight,
            link_x,
            link_y,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn active(&self, idx: usize) -> bool {
        self.weight[idx] > 0.0
    }

    #[inline]
    pub fn weight(&self, idx: usize) -> f64 {
        self.weight[idx]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn linked_x(&self, idx: usize) -> bool {
        self.link_x[idx]
    }

    pub fn linked_y(&self, idx: usize) -> bool {
        self.link_y[idx]
    }

    pub fn active_count(&self) -> usize {
        self.weight.iter().filter(|&&w| w > 0.0).count()
    }

    /// Masked area `Σ weight · h²`.
    pub fn area(&self) -> f64 {
        self.weight.iter().sum::<f64>() * self.spec.h * self.spec.h
    }

    /// Difference stencil over the active cells.
    pub fn stencil(&self) -> Stencil {
        let spec = &self.spec;
        let mut compact = vec![NONE; spec.len()];
        let mut cells = Vec::new();
        for idx in 0..spec.len() {
            if self.active(idx) {
                compact[idx] = cells.len() as u32;
                cells.push(idx as u32);
            }
        }
        let mut weight = Vec::with_capacity(cells.len());
        let mut xpair = Vec::with_capacity(cells.len());
        let mut ypair = Vec::with_capacity(cells.len());
        for (c, &idx) in cells.iter().enumerate() {
            let idx = idx as usize;
            let c = c as u32;
            weight.push(self.weight[idx]);
            let xp = if self.link_x[idx] {
                [c, compact[idx + 1]]
            } else if idx % spec.nx > 0 && self.link_x[idx - 1] {
                [compact[idx - 1], c]
            } else {
                [NONE, NONE]
            };
            let yp = if self.link_y[idx] {
                [c, compact[idx + spec.nx]]
            } else if idx >= spec.nx && self.link_y[idx - spec.nx] {
                [compact[idx - spec.nx], c]
            } else {
                [NONE, NONE]
            };
            xpair.push(xp);
            ypair.push(yp);
        }
        Stencil {
            h: spec.h,
            cells,
            weight,
            xpair,
            ypair,
        }
    }
}

/// Forward differences with a one-sided fallback, in compact (active-cell) numbering.
#[derive(Clone, Debug)]
pub struct Stencil {
    pub h: f64,
    /// Grid index of each active cell.
    pub cells: Vec<u32>,
    pub weight: Vec<f64>,
    /// `[a, b]` with `∂ₓw ≈ (w_b − w_a)/h`, or `[NONE, NONE]`.
    pub xpair: Vec<[u32; 2]>,
    pub ypair: Vec<[u32; 2]>,
}

impl Stencil {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn diff(&self, w: &[f64], c: usize) -> (f64, f64) {
        let d = |p: [u32; 2]| {
            if p[0] == NONE {
                0.0
            } else {
                (w[p[1] as usize] - w[p[0] as usize]) / self.h
            }
        };
        (d(self.xpair[c]), d(self.ypair[c]))
    }

    /// `(Σ m h² |w|^p, Σ m h² |∇w|^p)` for compact values `w`.
    pub fn energy_parts(&self, w: &[f64], p: f64) -> (f64, f64) {
        let h2 = self.h * self.h;
        let mut a = 0.0;
        let mut g = 0.0;
        for c in 0..self.len() {
            let m = self.weight[c] * h2;
            let (dx, dy) = self.diff(w, c);
            a += m * w[c].abs().powf(p);
            g += m * (dx * dx + dy * dy).powf(0.5 * p);
        }
        (a, g)
    }
}

/// Cell-centred values on a masked grid; inactive cells hold 0.
#[derive(Clone, Debug)]
pub struct GridFunction {
    mask: Arc<CellMask>,
    values: Vec<f64>,
    /// Global `[min, max]` of the values and 0.
    span: (f64, f64),
}

impl GridFunction {
    pub fn new(mask: Arc<CellMask>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != mask.spec.len() {
            return Err(Error::Parameter(format!(
                "expected {} values, got {}",
                mask.spec.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("grid values must be finite".into()));
        }
        for (idx, v) in values.iter_mut().enumerate() {
            if !mask.active(idx) {
                *v = 0.0;
            }
        }
        let span = values
            .iter()
            .fold((0.0f64, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Ok(GridFunction { mask, values, span })
    }

    /// Samples `f` at the active cell centres.
    pub fn from_fn(mask: Arc<CellMask>, f: impl Fn(Point) -> f64) -> Result<Self> {
        let spec = mask.spec;
        let values = (0..spec.len())
            .map(|idx| {
                let (i, k) = spec.coords(idx);
                if mask.active(idx) {
                    f(spec.center(i, k))
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(mask, values)
    }

    pub fn constant(mask: Arc<CellMask>, c: f64) -> Result<Self> {
        Self::from_fn(mask, |_| c)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.mask.spec
    }

    pub fn mask(&self) -> &Arc<CellMask> {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[self.mask.spec.index(i, k)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.mask.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs).expect("same shape")
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    /// Values of the active cells in stencil order.
    pub fn compact(&self, st: &Stencil) -> Vec<f64> {
        st.cells.iter().map(|&i| self.values[i as usize]).collect()
    }

    /// `(‖u‖_p^p, ‖∇u‖_p^p)` with area-fraction weights.
    pub fn sobolev_parts(&self, p: f64) -> (f64, f64) {
        let st = self.mask.stencil();
        st.energy_parts(&self.compact(&st), p)
    }

    fn active_at(&self, i: isize, k: isize) -> bool {
        let s = &self.mask.spec;
        i >= 0
            && k >= 0
            && (i as usize) < s.nx
            && (k as usize) < s.ny
            && self.mask.active(s.index(i as usize, k as usize))
    }

    /// Interpolation stencil for a point in cell `(i, k)` lying in the
    /// quarter with offsets `(qi, qk) ∈ {-1, 0}²`: lower-left block corner, or
    /// `None` for the constant fallback.
    fn block(&self, i: usize, k: usize, qi: isize, qk: isize) -> Option<(isize, isize)> {
        let (i, k) = (i as isize, k as isize);
        let natural = (i + qi, k + qk);
        let others = [
            (i + qi, k - 1 - qk),
            (i - 1 - qi, k + qk),
            (i - 1 - qi, k - 1 - qk),
        ];
        std::iter::once(natural).chain(others).find(|&(bi, bk)| {
            self.active_at(bi, bk)
                && self.active_at(bi + 1, bk)
                && self.active_at(bi, bk + 1)
                && self.active_at(bi + 1, bk + 1)
        })
    }

    /// `(i, k, qi, qk)` of the quarter-cell piece containing `y`.
    fn piece(&self, y: Point) -> Option<(usize, usize, isize, isize)> {
        let s = &self.mask.spec;
        let (i, k) = s.locate(y)?;
        let c = s.center(i, k);
        let qi = if y[0] < c[0] { -1 } else { 0 };
        let qk = if y[1] < c[1] { -1 } else { 0 };
        Some((i, k, qi, qk))
    }
}

impl PlaneFunction for GridFunction {
    fn eval(&self, y: Point) -> f64 {
        let Some((i, k, qi, qk)) = self.piece(y) else {
            return 0.0;
        };
        let s = &self.mask.spec;
        match self.block(i, k, qi, qk) {
            Some((bi, bk)) => {
                let (bi, bk) = (bi as usize, bk as usize);
                let c = s.center(bi, bk);
                let t = (y[0] - c[0]) / s.h;
                let u = (y[1] - c[1]) / s.h;
                let v00 = self.value(bi, bk);
                let v10 = self.value(bi + 1, bk);
                let v01 = self.value(bi, bk + 1);
                let v11 = self.value(bi + 1, bk + 1);
                (1.0 - t) * (1.0 - u) * v00
                    + t * (1.0 - u) * v10
                    + (1.0 - t) * u * v01
                    + t * u * v11
            }
            None => self.values[s.index(i, k)],
        }
    }

    fn range(&self, b: &Aabb) -> (f64, f64) {
        let s = &self.mask.spec;
        let Some([i0, i1, k0, k1]) = s.cell_range(&b.expand(s.h)) else {
            return (0.0, 0.0);
        };
        if (i1 - i0 + 1) * (k1 - k0 + 1) > 4096 {
            let spread = self.span.1 - self.span.0;
            return (self.span.0 - 2.0 * spread, self.span.1 + 2.0 * spread);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut ragged = !s.coverage().contains_box(&b.expand(s.h));
        for k in k0..=k1 {
            for i in i0..=i1 {
                let idx = s.index(i, k);
                ragged |= !self.mask.active(idx);
                lo = lo.min(self.values[idx]);
                hi = hi.max(self.values[idx]);
            }
        }
        if ragged {
            // shifted stencils extrapolate by at most half a cell per axis
            let (mid, spread) = (0.5 * (lo + hi), hi - lo);
            (
                lo.min(0.0).min(mid - 2.0 * spread),
                hi.max(0.0).max(mid + 2.0 * spread),
            )
        } else {
            (lo, hi)
        }
    }

    fn is_polynomial_on(&self, b: &Aabb) -> bool {
        let s = &self.mask.spec;
        // one quarter-cell piece: both corners land in the same piece
        let half = 0.5 * s.h;
        let q = |v: f64, o: f64, up: bool| {
            let t = (v - o) / half;
            if up {
                t.ceil() - 1.0
            } else {
                t.floor()
            }
        };
        q(b.lo[0], s.origin[0], false) == q(b.hi[0], s.origin[0], true)
            && q(b.lo[1], s.origin[1], false) == q(b.hi[1], s.origin[1], true)
    }
}

//! Adaptive quadtree quadrature over `B(x, r) ∩ Ω`, `Ω`, or `B(x, r)`.
//!
//! Each quadtree cell is classified against the disk (exactly: corner test
//! and nearest-point distance) and against the rectangle union. Pieces of the
//! cell that lie in at most three rectangles are resolved exactly by local
//! inclusion–exclusion over boxes; each box is then integrated with the exact
//! disk–box area and the integrand's range (or a Gauss rule when the box lies
//! inside the disk). Cells touching four or more rectangles only get area
//! bounds and are refined. Refinement always splits the cell with the largest
//! error bound, so the result is deterministic for fixed inputs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use crate::error::{Error, Result};
use crate::geometry::disk_area::disk_box_area;
use crate::geometry::{Aabb, Disk, Point, RectDomain};

pub const DEFAULT_CELL_BUDGET: usize = 1_000_000;

static CELL_BUDGET: AtomicUsize = AtomicUsize::new(DEFAULT_CELL_BUDGET);

/// Cell budget picked up by [`QuadOptions::absolute`] and [`QuadOptions::relative`].
pub fn default_cell_budget() -> usize {
    CELL_BUDGET.load(AtomicOrdering::Relaxed)
}

/// Process-wide override of the default cell budget.
pub fn set_default_cell_budget(budget: usize) {
    CELL_BUDGET.store(budget.max(1), AtomicOrdering::Relaxed);
}

/// A function on the plane that the quadtree can bound on boxes.
pub trait PlaneFunction: Sync {
    fn eval(&self, y: Point) -> f64;

    /// Lower and upper bounds of the function on the closed box.
    fn range(&self, b: &Aabb) -> (f64, f64);

    /// True when the tensor 2-point Gauss rule is exact on `b`.
    fn is_polynomial_on(&self, _b: &Aabb) -> bool {
        false
    }

    /// Lipschitz constant on `b`, if known.
    fn lipschitz(&self, _b: &Aabb) -> Option<f64> {
        None
    }

    /// False when the function may jump inside `b`; such cells are charged
    /// the rigorous range bound instead of the Gauss-difference estimate,
    /// which can vanish across a jump.
    fn is_continuous_on(&self, _b: &Aabb) -> bool {
        true
    }

    /// True when the integral over the box (a solid piece of the region) is
    /// certainly infinite.
    fn diverges_on(&self, _b: &Aabb) -> bool {
        false
    }
}

impl<F: PlaneFunction + ?Sized> PlaneFunction for &F {
    fn eval(&self, y: Point) -> f64 {
        (**self).eval(y)
    }
    fn range(&self, b: &Aabb) -> (f64, f64) {
        (**self).range(b)
    }
    fn is_polynomial_on(&self, b: &Aabb) -> bool {
        (**self).is_polynomial_on(b)
    }
    fn lipschitz(&self, b: &Aabb) -> Option<f64> {
        (**self).lipschitz(b)
    }
    fn is_continuous_on(&self, b: &Aabb) -> bool {
        (**self).is_continuous_on(b)
    }
    fn diverges_on(&self, b: &Aabb) -> bool {
        (**self).diverges_on(b)
    }
}

/// Integrate `f` or `|f|`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    Signed,
    Absolute,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    /// Relative to the magnitude of the running estimate.
    Relative(f64),
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct QuadOptions {
    pub tol: Tolerance,
    pub budget: usize,
    /// Report divergence once the certified lower bound exceeds this.
    pub ceiling: Option<f64>,
}

impl QuadOptions {
    pub fn absolute(tol: f64) -> Self {
        QuadOptions {
            tol: Tolerance::Absolute(tol),
            budget: default_cell_budget(),
            ceiling: None,
        }
    }

    pub fn relative(tol: f64) -> Self {
        QuadOptions {
            tol: Tolerance::Relative(tol),
            budget: default_cell_budget(),
            ceiling: None,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = Some(ceiling);
        self
    }

    fn validate(&self) -> Result<()> {
        let t = match self.tol {
            Tolerance::Absolute(t) | Tolerance::Relative(t) => t,
        };
        if !(t > 0.0) {
            return Err(Error::Parameter(format!(
                "tolerance must be positive, got {t}"
            )));
        }
        if self.budget == 0 {
            return Err(Error::Parameter("cell budget must be positive".into()));
        }
        Ok(())
    }
}

/// Integration region: optional rectangle union intersected with an optional disk.
#[derive(Copy, Clone, Debug)]
pub struct Region<'a> {
    pub domain: Option<&'a RectDomain>,
    pub disk: Option<Disk>,
}

impl<'a> Region<'a> {
    pub fn ball_in_domain(domain: &'a RectDomain, disk: Disk) -> Self {
        Region {
            domain: Some(domain),
            disk: Some(disk),
        }
    }

    pub fn domain(domain: &'a RectDomain) -> Self {
        Region {
            domain: Some(domain),
            disk: None,
        }
    }

    pub fn ball(disk: Disk) -> Self {
        Region {
            domain: None,
            disk: Some(disk),
        }
    }

    /// `Err` for an unbounded region, `Ok(None)` for an empty one.
    fn root(&self) -> Result<Option<Aabb>> {
        match (self.domain, self.disk) {
            (Some(d), Some(k)) => Ok(d.bbox().intersect_solid(&k.bbox())),
            (Some(d), None) => Ok(Some(d.bbox())),
            (None, Some(k)) => Ok(Some(k.bbox())),
            (None, None) => Err(Error::Parameter(
                "integration region must be bounded".into(),
            )),
        }
    }
}

/// Result of an adaptive integration.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Error bound (heuristic only on Gauss-resolved pieces of non-polynomial integrands).
    pub err: f64,
    /// Certified lower bound (meaningful in absolute mode).
    pub lower: f64,
    pub cells: usize,
}

struct CellEval {
    est: f64,
    err: f64,
    lower: f64,
    diverged: bool,
    cands: Vec<u32>,
}

struct Pending {
    err: f64,
    seq: u64,
    b: Aabb,
    est: f64,
    lower: f64,
    cands: Vec<u32>,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

const G2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
const G3_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const G3_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

fn apply_mode(v: f64, mode: Mode) -> f64 {
    match mode {
        Mode::Signed => v,
        Mode::Absolute => v.abs(),
    }
}

fn gauss2<F: PlaneFunction>(f: &F, b: &Aabb, mode: Mode) -> f64 {
    let [cx, cy] = b.center();
    let (hx, hy) = (0.5 * b.width(), 0.5 * b.height());
    let mut s = 0.0;
    for gx in G2 {
        for gy in G2 {
            s += apply_mode(f.eval([cx + hx * gx, cy + hy * gy]), mode);
        }
    }
    0.25 * s * b.area()
}

fn gauss3<F: PlaneFunction>(f: &F, b: &Aabb, mode: Mode) -> f64 {
    let [cx, cy] = b.center();
    let (hx, hy) = (0.5 * b.width(), 0.5 * b.height());
    let mut s = 0.0;
    for (gx, wx) in G3_X.iter().zip(G3_W) {
        for (gy, wy) in G3_X.iter().zip(G3_W) {
            s += wx * wy * apply_mode(f.eval([cx + hx * gx, cy + hy * gy]), mode);
        }
    }
    0.25 * s * b.area()
}

fn mode_range(lo: f64, hi: f64, mode: Mode) -> (f64, f64) {
    match mode {
        Mode::Signed => (lo, hi),
        Mode::Absolute => {
            if lo >= 0.0 {
                (lo, hi)
            } else if hi <= 0.0 {
                (-hi, -lo)
            } else {
                (0.0, hi.max(-lo))
            }
        }
    }
}

/// `[lower, upper]` of `∫ g` over a set of measure in `[a_lo, a_hi]` with `g ∈ [lo, hi]`.
fn product_bounds(lo: f64, hi: f64, a_lo: f64, a_hi: f64) -> (f64, f64) {
    let l = (lo * a_lo).min(lo * a_hi);
    let u = (hi * a_lo).max(hi * a_hi);
    (
        if l.is_nan() { f64::NEG_INFINITY } else { l },
        if u.is_nan() { f64::INFINITY } else { u },
    )
}

struct BoxEval {
    est: f64,
    err: f64,
    lower: f64,
    diverged: bool,
}

struct Integrator<'a, F: PlaneFunction> {
    f: &'a F,
    region: Region<'a>,
    mode: Mode,
}

impl<'a, F: PlaneFunction> Integrator<'a, F> {
    fn area(&self, b: &Aabb) -> f64 {
        match &self.region.disk {
            Some(d) => disk_box_area(d, b),
            None => b.area(),
        }
    }

    fn inside_disk(&self, b: &Aabb) -> bool {
        self.region.disk.map_or(true, |d| d.contains_box(b))
    }

    /// Integral of the (mode-adjusted) integrand over `b ∩ disk`, `b` a solid box.
    fn eval_box(&self, b: &Aabb) -> BoxEval {
        let a = self.area(b);
        if a <= 0.0 {
            return BoxEval {
                est: 0.0,
                err: 0.0,
                lower: 0.0,
                diverged: false,
            };
        }
        if self.f.diverges_on(b) {
            return BoxEval {
                est: f64::INFINITY,
                err: f64::INFINITY,
                lower: f64::INFINITY,
                diverged: true,
            };
        }
        let (lo, hi) = self.f.range(b);
        let (lo, hi) = mode_range(lo, hi, self.mode);
        if lo == hi && lo.is_finite() {
            let v = lo * a;
            return BoxEval {
                est: v,
                err: 0.0,
                lower: v,
                diverged: false,
            };
        }
        let (lower, upper) = product_bounds(lo, hi, a, a);
        if self.inside_disk(b) && lo.is_finite() && hi.is_finite() {
            let sign_fixed = self.mode == Mode::Signed || {
                let (raw_lo, raw_hi) = self.f.range(b);
                raw_lo >= 0.0 || raw_hi <= 0.0
            };
            if sign_fixed && self.f.is_polynomial_on(b) {
                let v = gauss2(self.f, b, self.mode);
                return BoxEval {
                    est: v,
                    err: 0.0,
                    lower: v.max(lower),
                    diverged: false,
                };
            }
            let g3 = gauss3(self.f, b, self.mode).clamp(lower, upper);
            let g2 = gauss2(self.f, b, self.mode);
            let rigorous = (g3 - lower).max(upper - g3);
            let err = if self.f.is_continuous_on(b) {
                (g3 - g2).abs().min(rigorous)
            } else {
                rigorous
            };
            return BoxEval {
                est: g3,
                err,
                lower,
                diverged: false,
            };
        }
        if !upper.is_finite() {
            return BoxEval {
                est: lower.max(0.0),
                err: f64::INFINITY,
                lower,
                diverged: false,
            };
        }
        BoxEval {
            est: 0.5 * (lower + upper),
            err: 0.5 * (upper - lower),
            lower,
            diverged: false,
        }
    }

    fn eval_cell(&self, b: &Aabb, parent: &[u32]) -> CellEval {
        let zero = |cands| CellEval {
            est: 0.0,
            err: 0.0,
            lower: 0.0,
            diverged: false,
            cands,
        };
        if let Some(d) = &self.region.disk {
            if d.misses_box(b) {
                return zero(Vec::new());
            }
        }
        let Some(domain) = self.region.domain else {
            let e = self.eval_box(b);
            return CellEval {
                est: e.est,
                err: e.err,
                lower: e.lower,
                diverged: e.diverged,
                cands: Vec::new(),
            };
        };
        let rects = domain.rects();
        let cands: Vec<u32> = parent
            .iter()
            .copied()
            .filter(|&i| rects[i as usize].overlaps_solid(b))
            .collect();
        if cands.is_empty() {
            return zero(cands);
        }
        let boxes: Vec<Aabb> = cands
            .iter()
            .map(|&i| {
                rects[i as usize]
                    .closure()
                    .intersect(b)
                    .expect("overlapping")
            })
            .collect();
        if boxes.iter().any(|c| c == b) {
            let e = self.eval_box(b);
            return CellEval {
                est: e.est,
                err: e.err,
                lower: e.lower,
                diverged: e.diverged,
                cands,
            };
        }
        if boxes.len() <= 3 {
            let mut est = 0.0;
            let mut err = 0.0;
            let mut lower_single = f64::NEG_INFINITY;
            let mut lower_sum = 0.0;
            let n = boxes.len();
            for mask in 1u32..(1 << n) {
                let mut acc: Option<Aabb> = None;
                for (k, bx) in boxes.iter().enumerate() {
                    if mask & (1 << k) != 0 {
                        acc = match acc {
                            None => Some(*bx),
                            Some(a) => a.intersect_solid(bx),
                        };
                        if acc.is_none() {
                            break;
                        }
                    }
                }
                let Some(piece) =
                    acc.and_then(|a| (a.width() > 0.0 && a.height() > 0.0).then_some(a))
                else {
                    continue;
                };
                let sign = if mask.count_ones() % 2 == 1 {
                    1.0
                } else {
                    -1.0
                };
                let e = self.eval_box(&piece);
                if e.diverged && sign > 0.0 {
                    return CellEval {
                        est: f64::INFINITY,
                        err: f64::INFINITY,
                        lower: e.lower,
                        diverged: true,
                        cands,
                    };
                }
                est += sign * e.est;
                err += e.err;
                if mask.count_ones() == 1 {
                    lower_single = lower_single.max(e.lower);
                }
                lower_sum += if sign > 0.0 {
                    e.lower
                } else {
                    -(e.est + e.err)
                };
            }
            let lower = match self.mode {
                Mode::Absolute => lower_single.max(lower_sum).max(0.0),
                Mode::Signed => lower_sum,
            };
            return CellEval {
                est,
                err,
                lower,
                diverged: false,
                cands,
            };
        }
        // unresolved union: bracket the covered area
        let a_cell = self.area(b);
        let mut a_lo: f64 = 0.0;
        let mut a_sum = 0.0;
        for bx in &boxes {
            let a = self.area(bx);
            a_lo = a_lo.max(a);
            a_sum += a;
        }
        let a_hi = a_cell.min(a_sum);
        if a_hi <= 0.0 {
            return zero(cands);
        }
        let (lo, hi) = self.f.range(b);
        let (lo, hi) = mode_range(lo, hi, self.mode);
        let (lower, upper) = product_bounds(lo, hi, a_lo, a_hi);
        if lo == hi && a_lo == a_hi {
            return CellEval {
                est: lower,
                err: 0.0,
                lower,
                diverged: false,
                cands,
            };
        }
        let (est, err) = if upper.is_finite() && lower.is_finite() {
            (0.5 * (lower + upper), 0.5 * (upper - lower))
        } else {
            (lower.max(0.0), f64::INFINITY)
        };
        CellEval {
            est,
            err,
            lower,
            diverged: false,
            cands,
        }
    }
}

/// Open cells plus running sums of settled and pending contributions.
#[derive(Default)]
struct Queue {
    heap: BinaryHeap<Pending>,
    seq: u64,
    settled_est: f64,
    settled_lower: f64,
    pending_est: f64,
    pending_lower: f64,
    pending_err: f64,
    /// Open cells with an infinite error bound.
    unbounded: usize,
}

impl Queue {
    fn push(&mut self, e: CellEval, b: Aabb) {
        if e.err > 0.0 {
            self.pending_est += e.est;
            self.pending_lower += e.lower;
            if e.err.is_finite() {
                self.pending_err += e.err;
            } else {
                self.unbounded += 1;
            }
            self.seq += 1;
            self.heap.push(Pending {
                err: e.err,
                seq: self.seq,
                b,
                est: e.est,
                lower: e.lower,
                cands: e.cands,
            });
        } else {
            self.settled_est += e.est;
            self.settled_lower += e.lower;
        }
    }

    fn pop(&mut self) -> Option<Pending> {
        let cell = self.heap.pop()?;
        self.pending_est -= cell.est;
        self.pending_lower -= cell.lower;
        if cell.err.is_finite() {
            self.pending_err -= cell.err;
        } else {
            self.unbounded -= 1;
        }
        Some(cell)
    }

    /// Recompute pending sums from scratch to shed cancellation drift.
    fn resum(&mut self) {
        self.pending_est = self.heap.iter().map(|p| p.est).sum();
        self.pending_lower = self.heap.iter().map(|p| p.lower).sum();
        self.pending_err = self
            .heap
            .iter()
            .filter(|p| p.err.is_finite())
            .map(|p| p.err)
            .sum();
    }

    fn estimate(&self) -> f64 {
        self.settled_est + self.pending_est
    }

    fn lower(&self) -> f64 {
        self.settled_lower + self.pending_lower
    }
}

/// Adaptive integral of `f` (or `|f|`) over the region.
pub fn integrate<F: PlaneFunction>(
    f: &F,
    region: Region<'_>,
    mode: Mode,
    opts: &QuadOptions,
) -> Result<Integral> {
    opts.validate()?;
    let Some(root) = region.root()? else {
        return Ok(Integral {
            value: 0.0,
            err: 0.0,
            lower: 0.0,
            cells: 0,
        });
    };
    let integrator = Integrator { f, region, mode };
    let all: Vec<u32> = match region.domain {
        Some(d) => d.rects_meeting(&root),
        None => Vec::new(),
    };
    let target = |est: f64| match opts.tol {
        Tolerance::Absolute(t) => t,
        Tolerance::Relative(t) => t * est.abs(),
    };

    let mut q = Queue::default();
    let mut cells = 1usize;
    let first = integrator.eval_cell(&root, &all);
    if first.diverged {
        return Err(Error::Diverging {
            partial: first.lower.max(0.0),
        });
    }
    q.push(first, root);
    loop {
        if q.unbounded == 0 && q.pending_err <= target(q.estimate()) {
            q.resum();
            if q.pending_err <= target(q.estimate()) {
                return Ok(Integral {
                    value: q.estimate(),
                    err: q.pending_err,
                    lower: q.lower(),
                    cells,
                });
            }
        }
        if let Some(c) = opts.ceiling {
            if q.lower() > c {
                return Err(Error::Diverging { partial: q.lower() });
            }
        }
        if cells + 4 > opts.budget {
            q.resum();
            let err = if q.unbounded > 0 {
                f64::INFINITY
            } else {
                q.pending_err
            };
            return Err(Error::Precision {
                value: q.estimate(),
                err,
                cells,
            });
        }
        let Some(cell) = q.pop() else {
            return Ok(Integral {
                value: q.settled_est,
                err: 0.0,
                lower: q.settled_lower,
                cells,
            });
        };
        for sub in cell.b.quadrants() {
            cells += 1;
            let e = integrator.eval_cell(&sub, &cell.cands);
            if e.diverged {
                return Err(Error::Diverging {
                    partial: q.lower().max(0.0),
                });
            }
            q.push(e, sub);
        }
    }
}

/// The constant function.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Constant(pub f64);

impl PlaneFunction for Constant {
    fn eval(&self, _y: Point) -> f64 {
        self.0
    }
    fn range(&self, _b: &Aabb) -> (f64, f64) {
        (self.0, self.0)
    }
    fn is_polynomial_on(&self, _b: &Aabb) -> bool {
        true
    }
    fn lipschitz(&self, _b: &Aabb) -> Option<f64> {
        Some(0.0)
    }
}

/// Closed-form callable with caller-supplied global bounds and Lipschitz constant.
pub struct Callable<G: Fn(Point) -> f64 + Sync> {
    pub f: G,
    pub bounds: (f64, f64),
    pub lipschitz: Option<f64>,
}

impl<G: Fn(Point) -> f64 + Sync> PlaneFunction for Callable<G> {
    fn eval(&self, y: Point) -> f64 {
        (self.f)(y)
    }
    fn range(&self, b: &Aabb) -> (f64, f64) {
        match self.lipschitz {
            Some(l) => {
                let c = (self.f)(b.center());
                let spread = 0.5 * l * b.diameter();
                (
                    (c - spread).max(self.bounds.0),
                    (c + spread).min(self.bounds.1),
                )
            }
            None => self.bounds,
        }
    }
    fn lipschitz(&self, _b: &Aabb) -> Option<f64> {
        self.lipschitz
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use std::f64::consts::PI;

    fn domain(rects: &[([f64; 2], [f64; 2])]) -> RectDomain {
        RectDomain::new(
            rects
                .iter()
                .map(|&(lo, s)| Rect::new(lo, s).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn ball_inside_single_rect_is_exact() {
        let d = domain(&[([0.0, 0.0], [1.0, 1.0])]);
        let disk = Disk::new([0.5, 0.5], 0.1).unwrap();
        let r = integrate(
            &Constant(1.0),
            Region::ball_in_domain(&d, disk),
            Mode::Absolute,
            &QuadOptions::absolute(1e-12),
        )
        .unwrap();
        assert!((r.value - PI * 0.01).abs() < 1e-14);
        assert_eq!(r.err, 0.0);
    }

    #[test]
    fn overlapping_rects_use_union_semantics() {
        // two unit squares overlapping in a 0.5 x 1 strip, plus a third crossing both
        let d = domain(&[
            ([0.0, 0.0], [1.0, 1.0]),
            ([0.5, 0.0], [1.0, 1.0]),
            ([0.25, 0.25], [1.0, 0.5]),
        ]);
        let r = integrate(
            &Constant(1.0),
            Region::domain(&d),
            Mode::Absolute,
            &QuadOptions::absolute(1e-10),
        )
        .unwrap();
        assert!((r.value - 1.5).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn many_overlaps_converge_within_tolerance() {
        // staircase of 6 overlapping squares; union area by a fine sweep
        let rects: Vec<_> = (0..6)
            .map(|k| ([0.1 * k as f64, 0.07 * k as f64], [0.5, 0.5]))
            .collect();
        let d = domain(&rects);
        let tol = 1e-6;
        let r = integrate(
            &Constant(1.0),
            Region::domain(&d),
            Mode::Absolute,
            &QuadOptions::absolute(tol),
        )
        .unwrap();
        // exact union area of the staircase: sweep over x slabs
        let mut xs: Vec<f64> = rects
            .iter()
            .flat_map(|(lo, s)| [lo[0], lo[0] + s[0]])
            .collect();
        xs.sort_by(f64::total_cmp);
        let mut exact = 0.0;
        for w in xs.windows(2) {
            let xm = 0.5 * (w[0] + w[1]);
            let mut iv: Vec<(f64, f64)> = rects
                .iter()
                .filter(|(lo, s)| lo[0] < xm && xm < lo[0] + s[0])
                .map(|(lo, s)| (lo[1], lo[1] + s[1]))
                .collect();
            iv.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut len = 0.0;
            let mut cur: Option<(f64, f64)> = None;
            for (a, b) in iv {
                cur = match cur {
                    Some((c0, c1)) if a <= c1 => Some((c0, c1.max(b))),
                    Some((c0, c1)) => {
                        len += c1 - c0;
                        Some((a, b))
                    }
                    None => Some((a, b)),
                };
            }
            if let Some((c0, c1)) = cur {
                len += c1 - c0;
            }
            exact += len * (w[1] - w[0]);
        }
        assert!(
            (r.value - exact).abs() <= tol + 1e-12,
            "{} vs {exact}",
            r.value
        );
    }

    #[test]
    fn budget_exhaustion_reports_best_bound() {
        let rects: Vec<_> = (0..8)
            .map(|k| ([0.1 * k as f64, 0.05 * k as f64], [0.5, 0.5]))
            .collect();
        let d = domain(&rects);
        let disk = Disk::new([0.6, 0.4], 0.45).unwrap();
        let err = integrate(
            &Constant(1.0),
            Region::ball_in_domain(&d, disk),
            Mode::Absolute,
            &QuadOptions::absolute(1e-14).with_budget(5),
        )
        .unwrap_err();
        match err {
            Error::Precision { err, cells, .. } => {
                assert!(err > 0.0 && err.is_finite());
                assert!(cells <= 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn signed_and_absolute_modes() {
        let f = Callable {
            f: |y: Point| y[0],
            bounds: (-1.0, 1.0),
            lipschitz: Some(1.0),
        };
        let disk = Disk::new([0.0, 0.0], 1.0).unwrap();
        let s = integrate(
            &f,
            Region::ball(disk),
            Mode::Signed,
            &QuadOptions::absolute(1e-6),
        )
        .unwrap();
        assert!(s.value.abs() < 1e-6);
        let a = integrate(
            &f,
            Region::ball(disk),
            Mode::Absolute,
            &QuadOptions::absolute(1e-5),
        )
        .unwrap();
        // ∫_{unit disk} |x| = 4/3
        assert!((a.value - 4.0 / 3.0).abs() < 1e-5, "{a:?}");
    }
}

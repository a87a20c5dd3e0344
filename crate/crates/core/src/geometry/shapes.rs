use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the plane.
pub type Point = [f64; 2];

pub fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

pub fn dist(a: Point, b: Point) -> f64 {
    norm([a[0] - b[0], a[1] - b[1]])
}

/// Closed axis-aligned box. Either side may be degenerate (a segment or a point).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Aabb {
    pub lo: Point,
    pub hi: Point,
}

impl Aabb {
    pub fn new(lo: Point, hi: Point) -> Self {
        debug_assert!(lo[0] <= hi[0] && lo[1] <= hi[1]);
        Aabb { lo, hi }
    }

    /// Box spanned by two opposite corners in any order.
    pub fn from_corners(a: Point, b: Point) -> Self {
        Aabb {
            lo: [a[0].min(b[0]), a[1].min(b[1])],
            hi: [a[0].max(b[0]), a[1].max(b[1])],
        }
    }

    pub fn width(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    pub fn height(&self) -> f64 {
        self.hi[1] - self.lo[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        [
            0.5 * (self.lo[0] + self.hi[0]),
            0.5 * (self.lo[1] + self.hi[1]),
        ]
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            self.lo,
            [self.hi[0], self.lo[1]],
            [self.lo[0], self.hi[1]],
            self.hi,
        ]
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// Intersection as a closed box, `None` if empty.
    pub fn intersect(&self, other: &Aabb) -> Option<Aabb> {
        let lo = [self.lo[0].max(other.lo[0]), self.lo[1].max(other.lo[1])];
        let hi = [self.hi[0].min(other.hi[0]), self.hi[1].min(other.hi[1])];
        (lo[0] <= hi[0] && lo[1] <= hi[1]).then_some(Aabb { lo, hi })
    }

    /// Intersection with positive area only.
    pub fn intersect_solid(&self, other: &Aabb) -> Option<Aabb> {
        self.intersect(other)
            .filter(|b| b.width() > 0.0 && b.height() > 0.0)
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.lo[0] <= other.lo[0]
            && self.lo[1] <= other.lo[1]
            && other.hi[0] <= self.hi[0]
            && other.hi[1] <= self.hi[1]
    }

    pub fn contains_point(&self, p: Point) -> bool {
        self.lo[0] <= p[0] && p[0] <= self.hi[0] && self.lo[1] <= p[1] && p[1] <= self.hi[1]
    }

    pub fn expand(&self, by: f64) -> Aabb {
        Aabb {
            lo: [self.lo[0] - by, self.lo[1] - by],
            hi: [self.hi[0] + by, self.hi[1] + by],
        }
    }

    /// Euclidean distance from `p` to the closed box.
    pub fn dist_to_point(&self, p: Point) -> f64 {
        let dx = (self.lo[0] - p[0]).max(0.0).max(p[0] - self.hi[0]);
        let dy = (self.lo[1] - p[1]).max(0.0).max(p[1] - self.hi[1]);
        dx.hypot(dy)
    }

    /// Smallest distance between two closed boxes.
    pub fn dist_to_box(&self, other: &Aabb) -> f64 {
        let dx = (self.lo[0] - other.hi[0])
            .max(0.0)
            .max(other.lo[0] - self.hi[0]);
        let dy = (self.lo[1] - other.hi[1])
            .max(0.0)
            .max(other.lo[1] - self.hi[1]);
        dx.hypot(dy)
    }

    /// Largest distance from a point of `self` to the closed box `other`.
    /// The distance to a convex set is convex, so the maximum sits at a corner.
    pub fn max_dist_to_box(&self, other: &Aabb) -> f64 {
        self.corners()
            .iter()
            .map(|&c| other.dist_to_point(c))
            .fold(0.0, f64::max)
    }

    /// The four quadrants obtained by halving both sides.
    pub fn quadrants(&self) -> [Aabb; 4] {
        let [cx, cy] = self.center();
        [
            Aabb::new(self.lo, [cx, cy]),
            Aabb::new([cx, self.lo[1]], [self.hi[0], cy]),
            Aabb::new([self.lo[0], cy], [cx, self.hi[1]]),
            Aabb::new([cx, cy], self.hi),
        ]
    }
}

/// Open axis-aligned rectangle `lo + (0, w) x (0, h)` with `w, h > 0`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Point,
    pub size: [f64; 2],
}

impl Rect {
    pub fn new(lo: Point, size: [f64; 2]) -> Result<Self> {
        let r = Rect { lo, size };
        r.validate()?;
        Ok(r)
    }

    /// Rectangle `center + (-half_w, half_w) x (-half_h, half_h)`.
    pub fn centered(center: Point, half: [f64; 2]) -> Result<Self> {
        Rect::new(
            [center[0] - half[0], center[1] - half[1]],
            [2.0 * half[0], 2.0 * half[1]],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .lo
            .iter()
            .chain(self.size.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Parameter(format!("non-finite rectangle {self:?}")));
        }
        if self.size[0] <= 0.0 || self.size[1] <= 0.0 {
            return Err(Error::Parameter(format!(
                "rectangle sides must be positive, got {:?}",
                self.size
            )));
        }
        Ok(())
    }

    pub fn hi(&self) -> Point {
        [self.lo[0] + self.size[0], self.lo[1] + self.size[1]]
    }

    pub fn area(&self) -> f64 {
        self.size[0] * self.size[1]
    }

    /// Closure of the rectangle.
    pub fn closure(&self) -> Aabb {
        Aabb::new(self.lo, self.hi())
    }

    /// Strict containment: the rectangle is open.
    pub fn contains(&self, p: Point) -> bool {
        let hi = self.hi();
        self.lo[0] < p[0] && p[0] < hi[0] && self.lo[1] < p[1] && p[1] < hi[1]
    }

    /// Whether the open rectangle meets the box in a set of positive area.
    pub fn overlaps_solid(&self, b: &Aabb) -> bool {
        let hi = self.hi();
        hi[0].min(b.hi[0]) > self.lo[0].max(b.lo[0]) && hi[1].min(b.hi[1]) > self.lo[1].max(b.lo[1])
    }
}

/// Closed disk.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if !(center[0].is_finite() && center[1].is_finite()) {
            return Err(Error::Parameter("non-finite ball center".into()));
        }
        Ok(Disk { center, radius })
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::new(
            [self.center[0] - self.radius, self.center[1] - self.radius],
            [self.center[0] + self.radius, self.center[1] + self.radius],
        )
    }

    pub fn contains_box(&self, b: &Aabb) -> bool {
        let r2 = self.radius * self.radius;
        b.corners().iter().all(|c| {
            let dx = c[0] - self.center[0];
            let dy = c[1] - self.center[1];
            dx * dx + dy * dy <= r2
        })
    }

    pub fn misses_box(&self, b: &Aabb) -> bool {
        b.dist_to_point(self.center) >= self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_rejects_degenerate_sides() {
        assert!(Rect::new([0.0, 0.0], [0.0, 1.0]).is_err());
        assert!(Rect::new([0.0, 0.0], [1.0, -1.0]).is_err());
        assert!(Rect::new([f64::NAN, 0.0], [1.0, 1.0]).is_err());
    }

    #[test]
    fn open_rect_excludes_its_boundary() {
        let r = Rect::new([0.0, 0.0], [1.0, 1.0]).unwrap();
        assert!(r.contains([0.5, 0.5]));
        assert!(!r.contains([1.0, 0.5]));
        assert!(!r.contains([0.0, 0.0]));
    }

    #[test]
    fn box_distances() {
        let a = Aabb::new([0.0, 0.0], [1.0, 0.0]);
        assert_eq!(a.dist_to_point([0.5, 0.25]), 0.25);
        assert_eq!(a.dist_to_point([2.0, 0.0]), 1.0);
        let b = Aabb::new([2.0, 1.0], [3.0, 2.0]);
        assert!((a.dist_to_box(&b) - 2f64.sqrt()).abs() < 1e-15);
        assert!((b.max_dist_to_box(&a) - (4.0f64 + 4.0).sqrt()).abs() < 1e-15);
    }
}

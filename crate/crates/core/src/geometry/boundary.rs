use serde::{Deserialize, Serialize};

use super::shapes::{Aabb, Disk, Point};
use crate::error::{Error, Result};

/// Closed segment (or solid box) given by two opposite corners.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

/// Closed, bounded set: a finite union of closed axis-aligned segments or boxes.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BoundarySet {
    pieces: Vec<Aabb>,
}

impl BoundarySet {
    pub fn new(pieces: Vec<Aabb>) -> Result<Self> {
        for p in &pieces {
            let ok = p.lo.iter().chain(p.hi.iter()).all(|v| v.is_finite())
                && p.width() >= 0.0
                && p.height() >= 0.0;
            if !ok {
                return Err(Error::Parameter(format!("invalid boundary piece {p:?}")));
            }
        }
        Ok(BoundarySet { pieces })
    }

    pub fn from_segments(segments: &[Segment]) -> Result<Self> {
        Self::new(
            segments
                .iter()
                .map(|s| Aabb::from_corners(s.a, s.b))
                .collect(),
        )
    }

    /// The closed segment `[a, b]`, which must be axis-aligned.
    pub fn segment(a: Point, b: Point) -> Result<Self> {
        if a[0] != b[0] && a[1] != b[1] {
            return Err(Error::Parameter(format!(
                "segment {a:?}-{b:?} is not axis-aligned"
            )));
        }
        Self::new(vec![Aabb::from_corners(a, b)])
    }

    pub fn pieces(&self) -> &[Aabb] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn to_segments(&self) -> Vec<Segment> {
        self.pieces
            .iter()
            .map(|p| Segment { a: p.lo, b: p.hi })
            .collect()
    }

    /// Euclidean distance from `y` to the set.
    pub fn dist(&self, y: Point) -> Result<f64> {
        if self.pieces.is_empty() {
            return Err(Error::Domain("distance to an empty set".into()));
        }
        Ok(self.dist_unchecked(y))
    }

    pub(crate) fn dist_unchecked(&self, y: Point) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.dist_to_point(y))
            .fold(f64::INFINITY, f64::min)
    }

    /// Bounds `[min, max]` of the distance function over a closed box.
    pub fn dist_range(&self, b: &Aabb) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::INFINITY;
        for p in &self.pieces {
            lo = lo.min(p.dist_to_box(b));
            hi = hi.min(b.max_dist_to_box(p));
        }
        (lo, hi)
    }

    /// Whether some piece lies along an edge of `b` with positive length.
    pub fn shares_edge_with(&self, b: &Aabb) -> bool {
        self.pieces.iter().any(|p| {
            let along_x = |y: f64| {
                p.lo[1] <= y && y <= p.hi[1] && p.hi[0].min(b.hi[0]) > p.lo[0].max(b.lo[0])
            };
            let along_y = |x: f64| {
                p.lo[0] <= x && x <= p.hi[0] && p.hi[1].min(b.hi[1]) > p.lo[1].max(b.lo[1])
            };
            along_x(b.lo[1]) || along_x(b.hi[1]) || along_y(b.lo[0]) || along_y(b.hi[0])
        })
    }

    /// One-dimensional Hausdorff measure of `D ∩ B(x, r)`.
    ///
    /// Only `l = 1` on unions of segments is supported. Collinear overlapping
    /// segments are merged; distinct lines meet in finitely many points.
    pub fn hausdorff_in_ball(&self, x: Point, r: f64, l: f64) -> Result<f64> {
        if l != 1.0 {
            return Err(Error::Unsupported(format!(
                "Hausdorff dimension {l}: only l = 1 is computed exactly"
            )));
        }
        let disk = Disk::new(x, r)?;
        // (axis, line coordinate) -> intervals along the line
        let mut lines: Vec<((u8, f64), Vec<(f64, f64)>)> = Vec::new();
        for p in &self.pieces {
            let (axis, line, a, b) = if p.height() == 0.0 {
                (0u8, p.lo[1], p.lo[0], p.hi[0])
            } else if p.width() == 0.0 {
                (1u8, p.lo[0], p.lo[1], p.hi[1])
            } else {
                return Err(Error::Unsupported(
                    "Hausdorff length of a solid box is infinite".into(),
                ));
            };
            // clip the line to the disk
            let (along_c, off) = if axis == 0 {
                (disk.center[0], line - disk.center[1])
            } else {
                (disk.center[1], line - disk.center[0])
            };
            if off.abs() > r {
                continue;
            }
            let half = (r * r - off * off).max(0.0).sqrt();
            let (lo, hi) = (a.max(along_c - half), b.min(along_c + half));
            if hi <= lo {
                continue;
            }
            match lines.iter_mut().find(|(k, _)| *k == (axis, line)) {
                Some((_, iv)) => iv.push((lo, hi)),
                None => lines.push(((axis, line), vec![(lo, hi)])),
            }
        }
        let mut total = 0.0;
        for (_, mut iv) in lines {
            iv.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut cur_lo, mut cur_hi) = iv[0];
            for &(lo, hi) in &iv[1..] {
                if lo > cur_hi {
                    total += cur_hi - cur_lo;
                    cur_lo = lo;
                    cur_hi = hi;
                } else {
                    cur_hi = cur_hi.max(hi);
                }
            }
            total += cur_hi - cur_lo;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_segment() -> BoundarySet {
        BoundarySet::segment([0.0, 0.0], [1.0, 0.0]).unwrap()
    }

    #[test]
    fn distance_examples() {
        let d = unit_segment();
        assert_eq!(d.dist([0.5, 0.25]).unwrap(), 0.25);
        assert_eq!(d.dist([0.3, 0.0]).unwrap(), 0.0);
        assert_eq!(d.dist([2.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            BoundarySet::default().dist([0.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hausdorff_examples() {
        let d = unit_segment();
        assert!((d.hausdorff_in_ball([0.5, 0.0], 0.25, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.hausdorff_in_ball([0.0, 0.0], 0.25, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((d.hausdorff_in_ball([0.5, 0.3], 0.5, 1.0).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(
            d.hausdorff_in_ball([0.5, 0.0], 0.25, 2.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn overlapping_collinear_segments_counted_once() {
        let d = BoundarySet::from_segments(&[
            Segment {
                a: [0.0, 0.0],
                b: [0.6, 0.0],
            },
            Segment {
                a: [0.4, 0.0],
                b: [1.0, 0.0],
            },
        ])
        .unwrap();
        assert!((d.hausdorff_in_ball([0.5, 0.0], 10.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distance_range_brackets_samples() {
        let d = unit_segment();
        let b = Aabb::new([-0.5, 0.1], [0.25, 0.6]);
        let (lo, hi) = d.dist_range(&b);
        for i in 0..=20 {
            for k in 0..=20 {
                let y = [-0.5 + 0.75 * i as f64 / 20.0, 0.1 + 0.5 * k as f64 / 20.0];
                let v = d.dist(y).unwrap();
                assert!(lo - 1e-15 <= v && v <= hi + 1e-15);
            }
        }
    }

    #[test]
    fn edge_contact() {
        let d = unit_segment();
        assert!(d.shares_edge_with(&Aabb::new([0.5, 0.0], [2.0, 1.0])));
        assert!(!d.shares_edge_with(&Aabb::new([1.0, 0.0], [2.0, 1.0])));
        assert!(!d.shares_edge_with(&Aabb::new([0.2, 0.1], [0.4, 1.0])));
    }
}

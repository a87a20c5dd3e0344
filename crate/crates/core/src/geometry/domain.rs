use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::shapes::{Aabb, Point, Rect};
use crate::error::{Error, Result};

/// Uniform bucket grid over the bounding box, used for point queries.
#[derive(Clone, Debug)]
struct BucketIndex {
    origin: Point,
    cell: [f64; 2],
    dims: [usize; 2],
    starts: Vec<u32>,
    ids: Vec<u32>,
}

impl BucketIndex {
    fn build(rects: &[Rect], bbox: &Aabb) -> Self {
        let n = rects.len().max(1) as f64;
        let side = (n.sqrt() * 2.0).ceil().clamp(1.0, 512.0) as usize;
        let dims = [side, side];
        let cell = [
            (bbox.width() / side as f64).max(f64::MIN_POSITIVE),
            (bbox.height() / side as f64).max(f64::MIN_POSITIVE),
        ];
        let origin = bbox.lo;
        let range = |r: &Rect| -> [usize; 4] {
            let hi = r.hi();
            let clampi = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
            [
                clampi(((r.lo[0] - origin[0]) / cell[0]).floor(), dims[0]),
                clampi(((hi[0] - origin[0]) / cell[0]).floor(), dims[0]),
                clampi(((r.lo[1] - origin[1]) / cell[1]).floor(), dims[1]),
                clampi(((hi[1] - origin[1]) / cell[1]).floor(), dims[1]),
            ]
        };
        let mut counts = vec![0u32; dims[0] * dims[1] + 1];
        for r in rects {
            let [i0, i1, k0, k1] = range(r);
            for k in k0..=k1 {
                for i in i0..=i1 {
                    counts[k * dims[0] + i + 1] += 1;
                }
            }
        }
        for b in 1..counts.len() {
            counts[b] += counts[b - 1];
        }
        let mut fill = counts.clone();
        let mut ids = vec![0u32; *counts.last().unwrap() as usize];
        for (id, r) in rects.iter().enumerate() {
            let [i0, i1, k0, k1] = range(r);
            for k in k0..=k1 {
                for i in i0..=i1 {
                    let slot = &mut fill[k * dims[0] + i];
                    ids[*slot as usize] = id as u32;
                    *slot += 1;
                }
            }
        }
        BucketIndex {
            origin,
            cell,
            dims,
            starts: counts,
            ids,
        }
    }

    fn bucket(&self, p: Point) -> Option<usize> {
        let fx = (p[0] - self.origin[0]) / self.cell[0];
        let fy = (p[1] - self.origin[1]) / self.cell[1];
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (i, k) = (fx as usize, fy as usize);
        if i > self.dims[0] || k > self.dims[1] {
            return None;
        }
        let (i, k) = (i.min(self.dims[0] - 1), k.min(self.dims[1] - 1));
        Some(k * self.dims[0] + i)
    }

    fn candidates(&self, p: Point) -> &[u32] {
        match self.bucket(p) {
            Some(b) => &self.ids[self.starts[b] as usize..self.starts[b + 1] as usize],
            None => &[],
        }
    }
}

/// Bounded open set given as a finite union of open rectangles.
#[derive(Clone, Debug)]
pub struct RectDomain {
    rects: Vec<Rect>,
    bbox: Aabb,
    index: BucketIndex,
}

impl RectDomain {
    pub fn new(rects: Vec<Rect>) -> Result<Self> {
        if rects.is_empty() {
            return Err(Error::Parameter(
                "a domain needs at least one rectangle".into(),
            ));
        }
        for r in &rects {
            r.validate()?;
        }
        let mut bbox = rects[0].closure();
        for r in &rects[1..] {
            let c = r.closure();
            bbox.lo = [bbox.lo[0].min(c.lo[0]), bbox.lo[1].min(c.lo[1])];
            bbox.hi = [bbox.hi[0].max(c.hi[0]), bbox.hi[1].max(c.hi[1])];
        }
        let index = BucketIndex::build(&rects, &bbox);
        Ok(RectDomain { rects, bbox, index })
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    /// Membership in the open union.
    pub fn contains(&self, y: Point) -> bool {
        self.index
            .candidates(y)
            .iter()
            .any(|&id| self.rects[id as usize].contains(y))
    }

    /// Indices of rectangles meeting `b` in positive area.
    pub fn rects_meeting(&self, b: &Aabb) -> Vec<u32> {
        (0..self.rects.len() as u32)
            .filter(|&i| self.rects[i as usize].overlaps_solid(b))
            .collect()
    }

    /// Sum of rectangle areas: an upper bound for the union area.
    pub fn total_rect_area(&self) -> f64 {
        self.rects.iter().map(Rect::area).sum()
    }
}

impl PartialEq for RectDomain {
    fn eq(&self, other: &Self) -> bool {
        self.rects == other.rects
    }
}

impl Serialize for RectDomain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rects.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RectDomain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rects = Vec::<Rect>::deserialize(d)?;
        RectDomain::new(rects).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> RectDomain {
        RectDomain::new(vec![Rect::new([0.0, 0.0], [1.0, 1.0]).unwrap()]).unwrap()
    }

    #[test]
    fn membership_in_unit_square() {
        let d = unit_square();
        assert!(d.contains([0.5, 0.5]));
        assert!(!d.contains([1.0, 0.5]));
        assert!(!d.contains([-0.1, 0.5]));
    }

    #[test]
    fn empty_domain_rejected() {
        assert!(RectDomain::new(vec![]).is_err());
    }

    #[test]
    fn index_agrees_with_linear_scan() {
        let mut rects = Vec::new();
        for k in 0..40 {
            let t = k as f64 * 0.37;
            rects.push(Rect::new([t.sin(), t.cos()], [0.05 + 0.01 * k as f64, 0.3]).unwrap());
        }
        let d = RectDomain::new(rects.clone()).unwrap();
        for i in 0..200 {
            for k in 0..200 {
                let p = [-1.2 + i as f64 * 0.013, -1.2 + k as f64 * 0.0131];
                let scan = rects.iter().any(|r| r.contains(p));
                assert_eq!(d.contains(p), scan, "{p:?}");
            }
        }
    }
}

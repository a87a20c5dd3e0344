//! Rectilinear domains, closed boundary parts, and measure primitives.

pub mod boundary;
pub mod disk_area;
pub mod domain;
pub mod fractal;
pub mod shapes;

pub use boundary::{BoundarySet, Segment};
pub use disk_area::disk_box_area;
pub use domain::RectDomain;
pub use fractal::{
    build_fractal_domain, fractal_dirichlet_part, fractal_pieces, fractal_rect_count, EdgeKind,
    FractalParams, FractalPiece, FractalRule,
};
pub use shapes::{dist, norm, Aabb, Disk, Point, Rect};

use crate::error::Result;
use crate::quadrature::{integrate, Constant, Integral, Mode, QuadOptions, Region};

/// `|B(x, r) ∩ Ω|` with absolute error at most `tol`.
pub fn ball_domain_area(dom: &RectDomain, x: Point, r: f64, tol: f64) -> Result<Integral> {
    ball_domain_area_with(dom, x, r, &QuadOptions::absolute(tol))
}

pub fn ball_domain_area_with(
    dom: &RectDomain,
    x: Point,
    r: f64,
    opts: &QuadOptions,
) -> Result<Integral> {
    let disk = Disk::new(x, r)?;
    integrate(
        &Constant(1.0),
        Region::ball_in_domain(dom, disk),
        Mode::Absolute,
        opts,
    )
}

/// `|B(x, r) ∩ Ω| / (π r²)`; the returned error is scaled accordingly.
pub fn density(dom: &RectDomain, x: Point, r: f64, tol: f64) -> Result<(f64, f64)> {
    let a = ball_domain_area(dom, x, r, tol)?;
    let full = std::f64::consts::PI * r * r;
    Ok(((a.value / full).clamp(0.0, 1.0), a.err / full))
}

/// `|Ω|` with absolute error at most `tol`.
pub fn domain_area(dom: &RectDomain, tol: f64) -> Result<Integral> {
    integrate(
        &Constant(1.0),
        Region::domain(dom),
        Mode::Absolute,
        &QuadOptions::absolute(tol),
    )
}

/// Exact area of a union of closed boxes (coordinate compression; meant for a handful of boxes).
pub fn union_area(boxes: &[Aabb]) -> f64 {
    match boxes.len() {
        0 => return 0.0,
        1 => return boxes[0].area(),
        _ => {}
    }
    let mut xs: Vec<f64> = boxes.iter().flat_map(|b| [b.lo[0], b.hi[0]]).collect();
    let mut ys: Vec<f64> = boxes.iter().flat_map(|b| [b.lo[1], b.hi[1]]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut total = 0.0;
    for xw in xs.windows(2) {
        let xm = 0.5 * (xw[0] + xw[1]);
        for yw in ys.windows(2) {
            let ym = 0.5 * (yw[0] + yw[1]);
            if boxes.iter().any(|b| b.contains_point([xm, ym])) {
                total += (xw[1] - xw[0]) * (yw[1] - yw[0]);
            }
        }
    }
    total
}

pub fn dist_to_boundary_set(d: &BoundarySet, y: Point) -> Result<f64> {
    d.dist(y)
}

pub fn hausdorff_measure_on_segments(d: &BoundarySet, x: Point, r: f64, l: f64) -> Result<f64> {
    d.hausdorff_in_ball(x, r, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn area_of_disjoint_rects_is_sum_of_pieces() {
        let a = Rect::new([0.0, 0.0], [0.4, 0.3]).unwrap();
        let b = Rect::new([0.5, -0.2], [0.3, 0.6]).unwrap();
        let dom = RectDomain::new(vec![a, b]).unwrap();
        let x = [0.45, 0.1];
        let disk = Disk::new(x, 0.3).unwrap();
        let exact = disk_box_area(&disk, &a.closure()) + disk_box_area(&disk, &b.closure());
        let got = ball_domain_area(&dom, x, 0.3, 1e-10).unwrap();
        assert!((got.value - exact).abs() < 1e-10);
    }

    #[test]
    fn ball_away_from_domain_has_zero_area() {
        let dom = RectDomain::new(vec![Rect::new([0.0, 0.0], [1.0, 1.0]).unwrap()]).unwrap();
        assert_eq!(
            ball_domain_area(&dom, [5.0, 5.0], 0.5, 1e-6).unwrap().value,
            0.0
        );
        let (d, _) = density(&dom, [5.0, 5.0], 0.5, 1e-6).unwrap();
        assert_eq!(d, 0.0);
        let (d, _) = density(&dom, [0.5, 0.5], 0.01, 1e-9).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_radius_on_fractal() {
        let dom = build_fractal_domain(&FractalParams::example2(5.0, 6).unwrap()).unwrap();
        let mut prev = 0.0;
        for k in 0..12 {
            let r = 0.02 + 0.03 * k as f64;
            let a = ball_domain_area(&dom, [0.5, 0.0], r, 1e-7).unwrap();
            assert!(a.value + a.err >= prev - 1e-7);
            prev = a.value;
        }
    }

    #[test]
    fn fractal_area_against_point_counting() {
        let dom = build_fractal_domain(&FractalParams::example2(5.0, 6).unwrap()).unwrap();
        let a = domain_area(&dom, 1e-8).unwrap().value;
        let n = 2048;
        let bb = dom.bbox();
        let (w, h) = (bb.width() / n as f64, bb.height() / n as f64);
        let mut count = 0usize;
        for i in 0..n {
            for k in 0..n {
                let y = [
                    bb.lo[0] + (i as f64 + 0.5) * w,
                    bb.lo[1] + (k as f64 + 0.5) * h,
                ];
                count += dom.contains(y) as usize;
            }
        }
        let mc = count as f64 * w * h;
        assert!((a - mc).abs() < 0.01 * a, "{a} vs {mc}");
        assert!(a < PI);
    }

    #[test]
    fn union_area_of_overlapping_boxes() {
        let a = Aabb::new([0.0, 0.0], [1.0, 1.0]);
        let b = Aabb::new([0.5, 0.5], [1.5, 1.5]);
        assert!((union_area(&[a, b]) - 1.75).abs() < 1e-15);
        assert!((union_area(&[a, a]) - 1.0).abs() < 1e-15);
        assert_eq!(union_area(&[]), 0.0);
    }

    #[test]
    fn ahlfors_bounds_on_unit_segment() {
        let d = fractal_dirichlet_part();
        for k in 0..=8 {
            let x = [k as f64 / 8.0, 0.0];
            for r in [0.01, 0.1, 0.4, 0.9] {
                let m = hausdorff_measure_on_segments(&d, x, r, 1.0).unwrap();
                assert!(r - 1e-15 <= m && m <= 2.0 * r + 1e-15);
            }
        }
    }
}

//! Exact area of the intersection of a disk with an axis-aligned box.

use super::shapes::{Aabb, Disk};

/// `∫ sqrt(r² - u²) du` primitive.
fn half_chord_primitive(u: f64, r: f64) -> f64 {
    let t = (u / r).clamp(-1.0, 1.0);
    let s = (r * r - u * u).max(0.0).sqrt();
    0.5 * (u * s + r * r * t.asin())
}

/// Area of `{|(u,v)| <= r, u <= x, v <= y}` for `x, y` in `[-r, r]`.
fn lower_left_area(x: f64, y: f64, r: f64) -> f64 {
    let s = |a: f64, b: f64| half_chord_primitive(b, r) - half_chord_primitive(a, r);
    let c = (r * r - y * y).max(0.0).sqrt();
    let mid = |hi: f64| -> f64 {
        // ∫_{-c}^{hi} (y + sqrt(r² - u²)) du
        let hi = hi.clamp(-c, c);
        y * (hi + c) + s(-c, hi)
    };
    if y >= 0.0 {
        let mut a = 2.0 * s(-r, x.min(-c));
        a += mid(x);
        if x > c {
            a += 2.0 * s(c, x);
        }
        a
    } else {
        mid(x)
    }
}

/// `|disk ∩ box|`, exact up to rounding.
pub fn disk_box_area(disk: &Disk, b: &Aabb) -> f64 {
    let r = disk.radius;
    let x0 = (b.lo[0] - disk.center[0]).max(-r);
    let x1 = (b.hi[0] - disk.center[0]).min(r);
    let y0 = (b.lo[1] - disk.center[1]).max(-r);
    let y1 = (b.hi[1] - disk.center[1]).min(r);
    if x0 >= x1 || y0 >= y1 {
        return 0.0;
    }
    let a = lower_left_area(x1, y1, r) - lower_left_area(x0, y1, r) - lower_left_area(x1, y0, r)
        + lower_left_area(x0, y0, r);
    a.clamp(0.0, b.area().min(disk.area()))
}

//! Ball averages, radius sweeps, trace verdicts and the Hardy functional.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, BoundarySet, Disk, Point, RectDomain};
use crate::grid::GridFunction;
use crate::quadrature::{integrate, Integral, Mode, PlaneFunction, QuadOptions, Region, Tolerance};

/// Rescale an absolute tolerance on a normalized quantity to the raw integral.
fn scaled(opts: &QuadOptions, factor: f64) -> QuadOptions {
    let mut o = *opts;
    if let Tolerance::Absolute(t) = o.tol {
        o.tol = Tolerance::Absolute(t * factor);
    }
    o
}

/// `(1/(π r²)) ∫_{B(x,r) ∩ Ω} |u|`, returned as `(value, err)`.
///
/// An absolute tolerance in `opts` applies to the normalized value.
pub fn interior_average<F: PlaneFunction>(
    dom: &RectDomain,
    u: &F,
    x: Point,
    r: f64,
    opts: &QuadOptions,
) -> Result<(f64, f64)> {
    let disk = Disk::new(x, r)?;
    let full = PI * r * r;
    let i = integrate(
        u,
        Region::ball_in_domain(dom, disk),
        Mode::Absolute,
        &scaled(opts, full),
    )?;
    Ok((i.value / full, i.err / full))
}

/// Average of `v` (or `|v|`) over the full ball `B(x, r)`.
pub fn full_ball_average(
    v: &GridFunction,
    x: Point,
    r: f64,
    signed: bool,
    opts: &QuadOptions,
) -> Result<(f64, f64)> {
    let disk = Disk::new(x, r)?;
    if !v.spec().coverage().contains_box(&disk.bbox()) {
        return Err(Error::Coverage {
            center: x,
            radius: r,
        });
    }
    let full = PI * r * r;
    let mode = if signed { Mode::Signed } else { Mode::Absolute };
    let i = integrate(v, Region::ball(disk), mode, &scaled(opts, full))?;
    Ok((i.value / full, i.err / full))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageEntry {
    pub r: f64,
    pub value: f64,
    pub err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageSeries {
    pub x: Point,
    pub entries: Vec<AverageEntry>,
}

impl AverageSeries {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for e in &self.entries {
            wr.serialize(e)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn radii(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.r).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }
}

pub fn validate_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::Parameter("radius ladder is empty".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::Parameter("radii must be positive and finite".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter("radii must be strictly decreasing".into()));
    }
    Ok(())
}

/// Dyadic ladder `2^-from, …, 2^-to`.
pub fn dyadic_radii(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|e| (-(e as f64)).exp2()).collect()
}

/// `interior_average` at each radius (evaluated in parallel, order kept).
pub fn average_series<F: PlaneFunction>(
    dom: &RectDomain,
    u: &F,
    x: Point,
    radii: &[f64],
    opts: &QuadOptions,
) -> Result<AverageSeries> {
    validate_radii(radii)?;
    let entries = radii
        .par_iter()
        .map(|&r| {
            interior_average(dom, u, x, r, opts).map(|(value, err)| AverageEntry { r, value, err })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AverageSeries { x, entries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceVerdict {
    pub vanishing: bool,
    /// Least-squares slope of `log value` against `log r`; `null` in JSON
    /// when some value is exactly zero (slope taken as +inf).
    #[serde(with = "inf_as_null")]
    pub slope: f64,
    pub smallest_value: f64,
    pub exact_zero: bool,
    pub slope_min: f64,
    pub tol_value: f64,
}

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn trace_verdict(
    series: &AverageSeries,
    tol_value: f64,
    slope_min: f64,
) -> Result<TraceVerdict> {
    if series.entries.len() < 4 {
        return Err(Error::Parameter(format!(
            "a verdict needs at least 4 radii, got {}",
            series.entries.len()
        )));
    }
    let smallest_value = series.values().into_iter().fold(f64::INFINITY, f64::min);
    let exact_zero = series.entries.iter().any(|e| e.value == 0.0);
    let slope = if exact_zero {
        f64::INFINITY
    } else {
        let lx: Vec<f64> = series.entries.iter().map(|e| e.r.ln()).collect();
        let ly: Vec<f64> = series.entries.iter().map(|e| e.value.ln()).collect();
        ls_slope(&lx, &ly)
    };
    Ok(TraceVerdict {
        vanishing: slope >= slope_min && smallest_value < tol_value,
        slope,
        smallest_value,
        exact_zero,
        slope_min,
        tol_value,
    })
}

/// `|u / dist_D|^p` as a plane function.
pub struct HardyIntegrand<'a, F: PlaneFunction> {
    pub u: &'a F,
    pub d: &'a BoundarySet,
    pub p: f64,
    /// Lipschitz constant of `u` when `u` is known to vanish on `D`; caps `|u|/dist_D`.
    pub vanishing_lipschitz: Option<f64>,
}

impl<F: PlaneFunction> HardyIntegrand<'_, F> {
    fn abs_range(&self, b: &Aabb) -> (f64, f64) {
        let (lo, hi) = self.u.range(b);
        if lo >= 0.0 {
            (lo, hi)
        } else if hi <= 0.0 {
            (-hi, -lo)
        } else {
            (0.0, hi.max(-lo))
        }
    }
}

impl<F: PlaneFunction> PlaneFunction for HardyIntegrand<'_, F> {
    fn eval(&self, y: Point) -> f64 {
        let u = self.u.eval(y).abs();
        if u == 0.0 {
            return 0.0;
        }
        let d = self.d.dist_unchecked(y);
        let q = match self.vanishing_lipschitz {
            Some(l) => (u / d).min(l),
            None => u / d,
        };
        q.powf(self.p)
    }

    fn is_continuous_on(&self, b: &Aabb) -> bool {
        self.u.is_continuous_on(b)
    }

    fn range(&self, b: &Aabb) -> (f64, f64) {
        let (ul, uh) = self.abs_range(b);
        let (dmin, dmax) = self.d.dist_range(b);
        let lo = if ul == 0.0 { 0.0 } else { ul / dmax };
        let mut hi = if uh == 0.0 { 0.0 } else { uh / dmin };
        if let Some(l) = self.vanishing_lipschitz {
            hi = hi.min(l);
        }
        (lo.min(hi).powf(self.p), hi.powf(self.p))
    }

    fn diverges_on(&self, b: &Aabb) -> bool {
        self.vanishing_lipschitz.is_none()
            && self.abs_range(b).0 > 0.0
            && self.d.shares_edge_with(b)
    }
}

/// `∫_Ω |u / dist_D|^p`.
///
/// Divergence is reported as [`Error::Diverging`]: either exactly (`|u|` bounded
/// below on a piece of Ω sharing an edge with `D`) or when the certified lower
/// bound passes `opts.ceiling`.
pub fn hardy_functional<F: PlaneFunction>(
    dom: &RectDomain,
    d: &BoundarySet,
    u: &F,
    p: f64,
    vanishing_lipschitz: Option<f64>,
    opts: &QuadOptions,
) -> Result<Integral> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p must lie in (1, inf), got {p}")));
    }
    if d.is_empty() {
        return Err(Error::Domain("Hardy functional needs a nonempty D".into()));
    }
    let f = HardyIntegrand {
        u,
        d,
        p,
        vanishing_lipschitz,
    };
    integrate(&f, Region::domain(dom), Mode::Absolute, opts)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyRatio {
    pub numerator: f64,
    pub numerator_err: f64,
    pub lp: f64,
    pub grad: f64,
    pub ratio: f64,
}

/// Hardy functional of a closed form `f` over the discrete `‖u‖_p^p + ‖∇u‖_p^p` of its grid sample.
pub fn hardy_ratio_with<F: PlaneFunction>(
    dom: &RectDomain,
    d: &BoundarySet,
    f: &F,
    u: &GridFunction,
    p: f64,
    vanishing_lipschitz: Option<f64>,
    opts: &QuadOptions,
) -> Result<HardyRatio> {
    let (lp, grad) = u.sobolev_parts(p);
    if lp + grad == 0.0 {
        return Err(Error::UndefinedRatio(
            "u vanishes identically on the grid".into(),
        ));
    }
    let num = hardy_functional(dom, d, f, p, vanishing_lipschitz, opts)?;
    Ok(HardyRatio {
        numerator: num.value,
        numerator_err: num.err,
        lp,
        grad,
        ratio: num.value / (lp + grad),
    })
}

/// Hardy ratio with the numerator taken from the interpolated grid function.
pub fn hardy_ratio(
    dom: &RectDomain,
    d: &BoundarySet,
    u: &GridFunction,
    p: f64,
    opts: &QuadOptions,
) -> Result<HardyRatio> {
    hardy_ratio_with(dom, d, u, u, p, None, opts)
}

//! Canned constructions and end-to-end reproductions: the two fractal
//! examples, the sliced rectangle, the `u_j` approximants, and a Hardy
//! level study.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{average_series, interior_average, trace_verdict, AverageSeries};
use crate::capacity::{capacity_of_segment_refinement_study, CapacityEstimate};
use crate::error::{Error, Result};
use crate::geometry::{
    build_fractal_domain, fractal_dirichlet_part, fractal_pieces, Aabb, BoundarySet, Disk,
    FractalParams, Point, Rect, RectDomain,
};
use crate::grid::{CellMask, GridFunction, GridSpec};
use crate::membership::{membership_sweep, DistanceReport, MembershipProblem};
use crate::quadrature::{integrate, Constant, Integral, Mode, PlaneFunction, QuadOptions, Region};

// ---------------------------------------------------------------------------
// report plumbing

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scalar {
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A numeric table written next to the report as CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(|v| v.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: serde_json::Value,
    pub scalars: Vec<Scalar>,
    pub clauses: Vec<Clause>,
    /// Sidecar tables (`<name>_<table>.csv`).
    pub series: Vec<Table>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn new(name: &str, parameters: impl Serialize) -> Result<Self> {
        Ok(ExperimentReport {
            name: name.into(),
            parameters: serde_json::to_value(parameters)?,
            scalars: Vec::new(),
            clauses: Vec::new(),
            series: Vec::new(),
            passed: true,
        })
    }

    pub fn scalar(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        self.scalars.push(Scalar {
            name: name.into(),
            value,
            tol,
        });
    }

    pub fn clause(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.passed &= passed;
        self.clauses.push(Clause {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// A clause whose computation failed: recorded as failed, never raised.
    pub fn failed(&mut self, name: &str, err: &Error) {
        self.clause(name, false, format!("error: {err}"));
    }

    pub fn clause_passed(&self, name: &str) -> Option<bool> {
        self.clauses
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<dir>/<name>.json` and one CSV per table; returns the paths.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.json", self.name));
        std::fs::write(&json, self.to_json()?)?;
        let mut out = vec![json];
        for t in &self.series {
            let path = dir.join(format!("{}_{}.csv", self.name, t.name));
            t.write_csv(std::fs::File::create(&path)?)?;
            out.push(path);
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// closed-form functions

/// The piecewise affine approximant `u_j`: 0 below `2^{-j-1} + 2^{-j-3}`,
/// 1 above `2^{-j} − 2^{-j-2}`, `2^{j+3} y₂ − 5` in between.
pub fn example1_approximant(j: u32, y: Point) -> f64 {
    let s = (-(j as f64)).exp2();
    let (lo, hi) = (0.625 * s, 0.75 * s);
    if y[1] < lo {
        0.0
    } else if y[1] > hi {
        1.0
    } else {
        (j as f64 + 3.0).exp2() * y[1] - 5.0
    }
}

/// `u_j` as a plane function (nondecreasing in `y₂`, constant in `y₁`).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Example1Approximant {
    pub j: u32,
}

impl Example1Approximant {
    fn knees(&self) -> (f64, f64) {
        let s = (-(self.j as f64)).exp2();
        (0.625 * s, 0.75 * s)
    }
}

impl PlaneFunction for Example1Approximant {
    fn eval(&self, y: Point) -> f64 {
        example1_approximant(self.j, y)
    }
    fn range(&self, b: &Aabb) -> (f64, f64) {
        (
            example1_approximant(self.j, b.lo),
            example1_approximant(self.j, b.hi),
        )
    }
    fn is_polynomial_on(&self, b: &Aabb) -> bool {
        let (lo, hi) = self.knees();
        b.hi[1] <= lo || b.lo[1] >= hi || (b.lo[1] >= lo && b.hi[1] <= hi)
    }
    fn lipschitz(&self, _b: &Aabb) -> Option<f64> {
        Some((self.j as f64 + 3.0).exp2())
    }
}

/// `|∇u_j|^p`: `2^{(j+3)p}` on the ramp band, 0 elsewhere.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Example1GradientDensity {
    pub j: u32,
    pub p: f64,
}

impl Example1GradientDensity {
    fn level(&self) -> f64 {
        ((self.j as f64 + 3.0) * self.p).exp2()
    }
}

impl PlaneFunction for Example1GradientDensity {
    fn eval(&self, y: Point) -> f64 {
        let (lo, hi) = Example1Approximant { j: self.j }.knees();
        if y[1] > lo && y[1] < hi {
            self.level()
        } else {
            0.0
        }
    }
    fn range(&self, b: &Aabb) -> (f64, f64) {
        let (lo, hi) = Example1Approximant { j: self.j }.knees();
        let meets = b.hi[1] > lo && b.lo[1] < hi;
        let inside = b.lo[1] >= lo && b.hi[1] <= hi;
        (
            if inside { self.level() } else { 0.0 },
            if meets { self.level() } else { 0.0 },
        )
    }
    fn is_polynomial_on(&self, b: &Aabb) -> bool {
        let (lo, hi) = self.range(b);
        lo == hi
    }
    fn is_continuous_on(&self, b: &Aabb) -> bool {
        self.is_polynomial_on(b)
    }
}

/// `φ(t) = 1` on `[−1, 1]`, `0` for `|t| ≥ 2`, affine between.
fn slice_profile(t: f64) -> f64 {
    (2.0 - t.abs()).clamp(0.0, 1.0)
}

/// `v(y) = sign(y₁) φ(y₂)` on the sliced rectangle.
#[derive(Copy, Clone, Debug, PartialEq, Default)]
pub struct SlicedWitness;

impl SlicedWitness {
    fn profile_range(lo: f64, hi: f64) -> (f64, f64) {
        let near = if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else {
            lo.abs().min(hi.abs())
        };
        let far = lo.abs().max(hi.abs());
        (slice_profile(far), slice_profile(near))
    }
}

impl PlaneFunction for SlicedWitness {
    fn eval(&self, y: Point) -> f64 {
        let s = if y[0] > 0.0 {
            1.0
        } else if y[0] < 0.0 {
            -1.0
        } else {
            0.0
        };
        s * slice_profile(y[1])
    }
    fn range(&self, b: &Aabb) -> (f64, f64) {
        let (pl, ph) = Self::profile_range(b.lo[1], b.hi[1]);
        if b.lo[0] >= 0.0 {
            (if b.lo[0] > 0.0 { pl } else { 0.0 }, ph)
        } else if b.hi[0] <= 0.0 {
            (-ph, if b.hi[0] < 0.0 { -pl } else { 0.0 })
        } else {
            (-ph, ph)
        }
    }
    fn is_polynomial_on(&self, b: &Aabb) -> bool {
        let one_side = b.lo[0] >= 0.0 || b.hi[0] <= 0.0;
        let knots = [-2.0, -1.0, 1.0, 2.0];
        one_side && !knots.iter().any(|&k| b.lo[1] < k && k < b.hi[1])
    }
    fn lipschitz(&self, b: &Aabb) -> Option<f64> {
        (b.lo[0] >= 0.0 || b.hi[0] <= 0.0).then_some(1.0)
    }
    fn is_continuous_on(&self, b: &Aabb) -> bool {
        self.lipschitz(b).is_some()
    }
}

/// Functions selectable from configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Constant { value: f64 },
    Approximant { j: u32 },
    SlicedWitness,
}

impl PlaneFunction for FunctionSpec {
    fn eval(&self, y: Point) -> f64 {
        match self {
            FunctionSpec::Constant { value } => *value,
            FunctionSpec::Approximant { j } => example1_approximant(*j, y),
            FunctionSpec::SlicedWitness => SlicedWitness.eval(y),
        }
    }
    fn range(&self, b: &Aabb) -> (f64, f64) {
        match self {
            FunctionSpec::Constant { value } => Constant(*value).range(b),
            FunctionSpec::Approximant { j } => Example1Approximant { j: *j }.range(b),
            FunctionSpec::SlicedWitness => SlicedWitness.range(b),
        }
    }
    fn is_polynomial_on(&self, b: &Aabb) -> bool {
        match self {
            FunctionSpec::Constant { .. } => true,
            FunctionSpec::Approximant { j } => Example1Approximant { j: *j }.is_polynomial_on(b),
            FunctionSpec::SlicedWitness => SlicedWitness.is_polynomial_on(b),
        }
    }
    fn lipschitz(&self, b: &Aabb) -> Option<f64> {
        match self {
            FunctionSpec::Constant { .. } => Some(0.0),
            FunctionSpec::Approximant { j } => Example1Approximant { j: *j }.lipschitz(b),
            FunctionSpec::SlicedWitness => SlicedWitness.lipschitz(b),
        }
    }
    fn is_continuous_on(&self, b: &Aabb) -> bool {
        match self {
            FunctionSpec::SlicedWitness => SlicedWitness.is_continuous_on(b),
            _ => true,
        }
    }
}

// ---------------------------------------------------------------------------
// gradient energy of the approximants

/// `∫_Ω |∇u_j|^p` by adaptive quadrature.
pub fn example1_gradient_energy(
    dom: &RectDomain,
    j: u32,
    p: f64,
    opts: &QuadOptions,
) -> Result<Integral> {
    integrate(
        &Example1GradientDensity { j, p },
        Region::domain(dom),
        Mode::Absolute,
        opts,
    )
}

/// `(1 − u_j)^p`, nonincreasing in `y₂`.
struct Example1Complement {
    j: u32,
    p: f64,
}

impl PlaneFunction for Example1Complement {
    fn eval(&self, y: Point) -> f64 {
        (1.0 - example1_approximant(self.j, y)).powf(self.p)
    }
    fn range(&self, b: &Aabb) -> (f64, f64) {
        (self.eval(b.hi), self.eval(b.lo))
    }
    fn is_polynomial_on(&self, b: &Aabb) -> bool {
        let (lo, hi) = self.range(b);
        lo == hi
    }
    fn lipschitz(&self, _b: &Aabb) -> Option<f64> {
        Some(self.p * (self.j as f64 + 3.0).exp2())
    }
}

/// `‖1 − u_j‖^p = ∫_Ω (1 − u_j)^p + ∫_Ω |∇u_j|^p` by quadrature: the cost of
/// the explicit competitor `u_j`, which vanishes within `2^{-j-1}` of `D`.
pub fn example1_approximant_cost(
    dom: &RectDomain,
    j: u32,
    p: f64,
    opts: &QuadOptions,
) -> Result<(f64, f64)> {
    let mass = integrate(
        &Example1Complement { j, p },
        Region::domain(dom),
        Mode::Absolute,
        opts,
    )?;
    let grad = example1_gradient_energy(dom, j, p, opts)?;
    Ok((mass.value, grad.value))
}

/// Closed form of `∫_Ω |∇u_j|^p`: the ramp band `[5, 6]·2^{-j-3}` crosses
/// only the `2^{j+1} + 1` rectangles `V_{j+1}^k`, each of width `2 b_{j+1}`,
/// so the energy is `2^{(j+3)p} (2^{j+1} + 1) 2 b_{j+1} 2^{-j-3}`.
pub fn example1_gradient_oracle(params: &FractalParams, j: u32) -> Result<f64> {
    if j < 1 || j + 1 > params.depth {
        return Err(Error::Parameter(format!(
            "closed form needs 1 <= j < depth, got j = {j}, depth = {}",
            params.depth
        )));
    }
    let count = ((1u64 << (j + 1)) + 1) as f64;
    let band = (-(j as f64) - 3.0).exp2();
    Ok(((j as f64 + 3.0) * params.p).exp2() * count * 2.0 * params.b(j + 1) * band)
}

// ---------------------------------------------------------------------------
// Hardy level study

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `∫_B dist(y, [0,1]×{0})^{-p} dy` over a box in the upper half plane:
/// exact over `0 ≤ y₁ ≤ 1`, product Gauss–Legendre beside it.
fn hardy_box(b: &Aabb, p: f64, gl: &[(f64, f64)]) -> f64 {
    let (y0, y1) = (b.lo[1], b.hi[1]);
    let mut s = 0.0;
    let (m0, m1) = (b.lo[0].max(0.0), b.hi[0].min(1.0));
    if m1 > m0 {
        s += (m1 - m0) * (y0.powf(1.0 - p) - y1.powf(1.0 - p)) / (p - 1.0);
    }
    for (x0, x1, anchor) in [
        (b.lo[0], b.hi[0].min(0.0), 0.0),
        (b.lo[0].max(1.0), b.hi[0], 1.0),
    ] {
        if x1 <= x0 {
            continue;
        }
        // split the y range into pieces no taller than their distance to D
        let mut lo = y0;
        while lo < y1 {
            let hi = (2.0 * lo).min(y1);
            let (cx, hx, cy, hy) = (
                0.5 * (x0 + x1),
                0.5 * (x1 - x0),
                0.5 * (lo + hi),
                0.5 * (hi - lo),
            );
            for &(gx, wx) in gl {
                for &(gy, wy) in gl {
                    let dx: f64 = cx + hx * gx - anchor;
                    let yy = cy + hy * gy;
                    s += wx * wy * hx * hy * (dx * dx + yy * yy).powf(-0.5 * p);
                }
            }
            lo = hi;
        }
    }
    s
}

/// Semi-analytic `∫_{Ω_J} dist(y, D)^{-p} dy` for a fractal domain: the union
/// is cut into horizontal slabs (each level adds only a few distinct heights),
/// each slab into disjoint intervals, and each box is integrated by
/// [`hardy_box`].
pub fn hardy_level_oracle(params: &FractalParams) -> Result<f64> {
    let rects: Vec<Aabb> = fractal_pieces(params)?
        .iter()
        .map(|p| p.rect.closure())
        .collect();
    if rects.iter().any(|r| r.lo[1] <= 0.0) {
        return Err(Error::Domain(
            "domain touches D; the Hardy integral diverges".into(),
        ));
    }
    let mut ys: Vec<f64> = rects.iter().flat_map(|r| [r.lo[1], r.hi[1]]).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let gl = gauss_legendre(12);
    let total: f64 = ys
        .par_windows(2)
        .map(|w| {
            let (ya, yb) = (w[0], w[1]);
            let mut iv: Vec<(f64, f64)> = rects
                .iter()
                .filter(|r| r.lo[1] <= ya && r.hi[1] >= yb)
                .map(|r| (r.lo[0], r.hi[0]))
                .collect();
            iv.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (a, b) in iv {
                match merged.last_mut() {
                    Some(last) if a <= last.1 => last.1 = last.1.max(b),
                    _ => merged.push((a, b)),
                }
            }
            merged
                .iter()
                .map(|&(a, b)| hardy_box(&Aabb::new([a, ya], [b, yb]), params.p, &gl))
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyLevel {
    pub depth: u32,
    pub quadrature: f64,
    pub err: f64,
    pub oracle: f64,
    /// `S_depth / S_{depth−1}`, absent for the first entry.
    pub growth: Option<f64>,
}

/// Partial Hardy sums `S_J = ∫_{Ω_J} dist_D^{-p}` of `u ≡ 1` on Example 1
/// truncated at each depth.
pub fn hardy_level_study(p: f64, depths: &[u32], rel_tol: f64) -> Result<Vec<HardyLevel>> {
    let d = fractal_dirichlet_part();
    let mut out: Vec<HardyLevel> = Vec::new();
    for &depth in depths {
        let params = FractalParams::example1(p, depth)?;
        let dom = build_fractal_domain(&params)?;
        let q = crate::analysis::hardy_functional(
            &dom,
            &d,
            &Constant(1.0),
            p,
            None,
            &QuadOptions::relative(rel_tol),
        )?;
        let oracle = hardy_level_oracle(&params)?;
        let growth = out.last().map(|prev| q.value / prev.quadrature);
        out.push(HardyLevel {
            depth,
            quadrature: q.value,
            err: q.err,
            oracle,
            growth,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// configurations

/// Membership sweep settings for the fractal examples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MembershipSettings {
    pub depth: u32,
    pub h: f64,
    pub deltas: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MembershipSettings {
    fn default() -> Self {
        MembershipSettings {
            depth: 10,
            h: (-10f64).exp2(),
            deltas: (3..=7).map(|k| (-(k as f64)).exp2()).collect(),
            tol: 1e-6,
            max_iter: 100,
        }
    }
}

fn default_points() -> Vec<Point> {
    (0..=8).map(|k| [k as f64 / 8.0, 0.0]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Example1Config {
    pub p: f64,
    pub depth: u32,
    pub radii: Vec<f64>,
    pub points: Vec<Point>,
    /// Absolute tolerance on each normalized average.
    pub tol: f64,
    /// The constant function tested (1 for the example, 0 for the control).
    pub value: f64,
    /// Levels `j` whose ratio `E(j+1)/E(j)` is checked.
    pub energy_levels: (u32, u32),
    pub ratio_band: (f64, f64),
    /// Allowed relative gap between quadrature and closed-form energies.
    pub oracle_tol: f64,
    pub membership: Option<MembershipSettings>,
    /// Final/initial distance must not exceed this.
    pub decay_factor: f64,
}

impl Default for Example1Config {
    fn default() -> Self {
        Example1Config {
            p: 2.0,
            depth: 12,
            radii: (3..=8).map(|k| (-(k as f64)).exp2()).collect(),
            points: default_points(),
            tol: 1e-3,
            value: 1.0,
            energy_levels: (3, 8),
            ratio_band: (0.3, 0.7),
            oracle_tol: 0.05,
            membership: Some(MembershipSettings::default()),
            decay_factor: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Example2Config {
    pub p: f64,
    pub depth: u32,
    pub radii: Vec<f64>,
    pub points: Vec<Point>,
    /// Relative tolerance of each average.
    pub tol: f64,
    pub slope_min: f64,
    pub membership: Option<MembershipSettings>,
    /// Final/initial distance must be at least this.
    pub floor_factor: f64,
}

impl Default for Example2Config {
    fn default() -> Self {
        Example2Config {
            p: 5.0,
            depth: 10,
            radii: (2..=7).map(|k| (-(k as f64)).exp2()).collect(),
            points: default_points(),
            tol: 1e-3,
            slope_min: 0.9,
            membership: Some(MembershipSettings::default()),
            floor_factor: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SliceConfig {
    pub p: f64,
    pub radii: Vec<f64>,
    pub points: Vec<Point>,
    pub tol: f64,
    pub capacity_spacings: Vec<f64>,
    pub capacity_floor: f64,
    /// Allowed `max/min − 1` across spacings.
    pub capacity_spread: f64,
}

impl Default for SliceConfig {
    fn default() -> Self {
        SliceConfig {
            p: 2.0,
            radii: (1..=6).map(|k| (-(k as f64)).exp2()).collect(),
            points: [-0.5, -0.25, 0.0, 0.25, 0.5]
                .iter()
                .map(|&t| [0.0, t])
                .collect(),
            tol: 1e-3,
            capacity_spacings: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            capacity_floor: 0.05,
            capacity_spread: 0.15,
        }
    }
}

// ---------------------------------------------------------------------------
// membership helpers

/// How a sweep ended relative to its first distance.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVerdict {
    /// All distances vanish.
    Zero,
    /// Final ≤ `decay` × initial.
    Decaying,
    /// Final ≥ `floor` × initial.
    Floored,
    Inconclusive,
}

pub fn sweep_verdict(reports: &[DistanceReport], decay: f64, floor: f64) -> SweepVerdict {
    let (Some(first), Some(last)) = (reports.first(), reports.last()) else {
        return SweepVerdict::Inconclusive;
    };
    if reports.iter().all(|r| r.distance == 0.0) {
        SweepVerdict::Zero
    } else if last.distance <= decay * first.distance {
        SweepVerdict::Decaying
    } else if last.distance >= floor * first.distance {
        SweepVerdict::Floored
    } else {
        SweepVerdict::Inconclusive
    }
}

/// Sweep for the constant `value` on a fractal domain.
pub fn fractal_membership_sweep(
    params: &FractalParams,
    value: f64,
    s: &MembershipSettings,
) -> Result<Vec<DistanceReport>> {
    let dom = build_fractal_domain(params)?;
    let spec = GridSpec::covering(&dom.bbox(), s.h, 0)?;
    let mask = Arc::new(CellMask::from_domain(&dom, spec));
    let u = GridFunction::constant(mask, value)?;
    let mut prob = MembershipProblem::new(dom, fractal_dirichlet_part(), u, params.p, s.deltas[0]);
    prob.tol = s.tol;
    prob.max_iter = s.max_iter;
    membership_sweep(&prob, &s.deltas)
}

fn sweep_table(reports: &[DistanceReport]) -> Table {
    let mut t = Table::new(
        "membership",
        &["delta", "distance", "energy", "converged", "iterations"],
    );
    for r in reports {
        t.rows.push(vec![
            r.delta,
            r.distance,
            r.energy,
            r.converged as u8 as f64,
            r.iterations as f64,
        ]);
    }
    t
}

fn sweep_detail(reports: &[DistanceReport]) -> String {
    let d: Vec<String> = reports
        .iter()
        .map(|r| format!("{:.6}", r.distance))
        .collect();
    let all = reports.iter().all(|r| r.converged);
    format!("distances [{}], all converged: {all}", d.join(", "))
}

fn series_table(name: &str, series: &[AverageSeries]) -> Table {
    let mut t = Table::new(name, &["x1", "x2", "r", "value", "err"]);
    for s in series {
        for e in &s.entries {
            t.rows.push(vec![s.x[0], s.x[1], e.r, e.value, e.err]);
        }
    }
    t
}

// ---------------------------------------------------------------------------
// reproductions

pub fn verify_example1(cfg: &Example1Config) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("example1", cfg)?;
    let params = FractalParams::example1(cfg.p, cfg.depth)?;
    let dom = build_fractal_domain(&params)?;
    let floor = 1.0 / (32.0 * PI);

    // (a) averages bounded below
    let opts = QuadOptions::absolute(cfg.tol);
    let u = Constant(cfg.value);
    match cfg
        .points
        .iter()
        .map(|&x| average_series(&dom, &u, x, &cfg.radii, &opts))
        .collect::<Result<Vec<_>>>()
    {
        Ok(series) => {
            let min = series
                .iter()
                .flat_map(|s| s.values())
                .fold(f64::INFINITY, f64::min);
            rep.scalar("min_average", min, cfg.tol);
            rep.clause(
                "averages_bounded_below",
                min >= floor - cfg.tol,
                format!("smallest average {min:.6} vs 1/(32π) = {floor:.6}"),
            );
            rep.series.push(series_table("averages", &series));
        }
        Err(e) => rep.failed("averages_bounded_below", &e),
    }

    // (b) gradient energy decay
    let (j0, j1) = cfg.energy_levels;
    let energy = || -> Result<Table> {
        let mut t = Table::new("energy", &["j", "quadrature", "err", "oracle"]);
        for j in j0..=j1 + 1 {
            let q = example1_gradient_energy(&dom, j, cfg.p, &QuadOptions::relative(1e-4))?;
            let o = example1_gradient_oracle(&params, j)?;
            t.rows.push(vec![j as f64, q.value, q.err, o]);
        }
        Ok(t)
    };
    match energy() {
        Ok(t) => {
            let ratios: Vec<f64> = t.rows.windows(2).map(|w| w[1][1] / w[0][1]).collect();
            let oracle_gap = t
                .rows
                .iter()
                .map(|r| (r[1] / r[3] - 1.0).abs())
                .fold(0.0, f64::max);
            let in_band = ratios
                .iter()
                .all(|&q| q >= cfg.ratio_band.0 && q <= cfg.ratio_band.1);
            for (k, q) in ratios.iter().enumerate() {
                rep.scalar(format!("energy_ratio_j{}", j0 + k as u32), *q, 0.0);
            }
            rep.scalar("energy_oracle_gap", oracle_gap, cfg.oracle_tol);
            rep.clause(
                "gradient_energy_decay",
                in_band,
                format!(
                    "ratios {ratios:.4?} in [{}, {}]",
                    cfg.ratio_band.0, cfg.ratio_band.1
                ),
            );
            rep.clause(
                "gradient_energy_oracle",
                oracle_gap <= cfg.oracle_tol,
                format!("largest relative gap to the closed form {oracle_gap:.2e}"),
            );
            rep.series.push(t);
        }
        Err(e) => {
            rep.failed("gradient_energy_decay", &e);
            rep.failed("gradient_energy_oracle", &e);
        }
    }

    // (c) membership
    if let Some(s) = &cfg.membership {
        let mp = FractalParams::example1(cfg.p, s.depth)?;
        match fractal_membership_sweep(&mp, cfg.value, s) {
            Ok(sweep) => {
                let (first, last) = (sweep[0].distance, sweep[sweep.len() - 1].distance);
                let monotone = sweep
                    .windows(2)
                    .all(|w| w[1].distance <= w[0].distance + 2.0 * s.tol);
                let ratio = if first > 0.0 { last / first } else { 0.0 };
                rep.scalar("membership_ratio", ratio, s.tol);
                rep.clause(
                    "membership_decreasing",
                    monotone && first > 0.0 && ratio <= cfg.decay_factor,
                    format!(
                        "{}; final/initial {ratio:.4} (needs <= {})",
                        sweep_detail(&sweep),
                        cfg.decay_factor
                    ),
                );
                rep.series.push(sweep_table(&sweep));
            }
            Err(e) => rep.failed("membership_decreasing", &e),
        }
    }
    Ok(rep)
}

pub fn verify_example2(cfg: &Example2Config) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("example2", cfg)?;
    let params = FractalParams::example2(cfg.p, cfg.depth)?;
    let dom = build_fractal_domain(&params)?;

    let opts = QuadOptions::relative(cfg.tol);
    match cfg
        .points
        .iter()
        .map(|&x| average_series(&dom, &Constant(1.0), x, &cfg.radii, &opts))
        .collect::<Result<Vec<_>>>()
    {
        Ok(series) => {
            let mut slopes = Vec::new();
            for s in &series {
                match trace_verdict(s, f64::INFINITY, cfg.slope_min) {
                    Ok(v) => slopes.push(v.slope),
                    Err(e) => {
                        rep.failed("average_decay", &e);
                        return Ok(rep);
                    }
                }
            }
            let min = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
            rep.scalar("min_slope", min, 0.0);
            rep.clause(
                "average_decay",
                min >= cfg.slope_min,
                format!("log-log slopes {slopes:.3?} (needs >= {})", cfg.slope_min),
            );
            rep.series.push(series_table("averages", &series));
        }
        Err(e) => rep.failed("average_decay", &e),
    }

    if let Some(s) = &cfg.membership {
        let mp = FractalParams::example2(cfg.p, s.depth)?;
        match fractal_membership_sweep(&mp, 1.0, s) {
            Ok(sweep) => {
                let (first, last) = (sweep[0].distance, sweep[sweep.len() - 1].distance);
                let ratio = if first > 0.0 { last / first } else { 0.0 };
                rep.scalar("membership_ratio", ratio, s.tol);
                rep.clause(
                    "membership_floor",
                    first > 0.0 && ratio >= cfg.floor_factor,
                    format!(
                        "{}; final/initial {ratio:.4} (needs >= {})",
                        sweep_detail(&sweep),
                        cfg.floor_factor
                    ),
                );
                rep.series.push(sweep_table(&sweep));
            }
            Err(e) => rep.failed("membership_floor", &e),
        }
    }
    Ok(rep)
}

/// `R = (−2,2)×(−4,4)` sliced along `D = {0}×[−2,2]`, with the witness `v`.
pub fn sliced_rectangle() -> Result<(RectDomain, BoundarySet, SlicedWitness)> {
    let dom = RectDomain::new(vec![
        Rect::new([-2.0, -4.0], [2.0, 8.0])?,
        Rect::new([0.0, -4.0], [2.0, 8.0])?,
        Rect::new([-2.0, -4.0], [4.0, 2.0])?,
        Rect::new([-2.0, 2.0], [4.0, 2.0])?,
    ])?;
    let d = BoundarySet::segment([0.0, -2.0], [0.0, 2.0])?;
    Ok((dom, d, SlicedWitness))
}

/// Signed average of `f` over the full ball `B(x, r)`.
pub fn signed_ball_average<F: PlaneFunction>(
    f: &F,
    x: Point,
    r: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let full = PI * r * r;
    let i = integrate(
        f,
        Region::ball(Disk::new(x, r)?),
        Mode::Signed,
        &QuadOptions::absolute(tol * full),
    )?;
    Ok((i.value / full, i.err / full))
}

pub fn verify_sliced_rectangle(cfg: &SliceConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("slice", cfg)?;
    let (dom, _d, v) = sliced_rectangle()?;
    let mut table = Table::new("averages", &["x1", "x2", "r", "signed", "unsigned"]);
    let mut worst_signed: f64 = 0.0;
    let mut worst_unsigned: f64 = 0.0;
    let mut error = None;
    for &x in &cfg.points {
        for &r in &cfg.radii {
            let s = signed_ball_average(&v, x, r, cfg.tol);
            let a = interior_average(&dom, &v, x, r, &QuadOptions::absolute(cfg.tol));
            match (s, a) {
                (Ok((s, _)), Ok((a, _))) => {
                    worst_signed = worst_signed.max(s.abs());
                    worst_unsigned = worst_unsigned.max((a - 1.0).abs());
                    table.rows.push(vec![x[0], x[1], r, s, a]);
                }
                (Err(e), _) | (_, Err(e)) => error = Some(e),
            }
        }
    }
    rep.series.push(table);
    if let Some(e) = error {
        rep.failed("signed_averages_vanish", &e);
        rep.failed("unsigned_averages_one", &e);
    } else {
        rep.scalar("max_abs_signed_average", worst_signed, cfg.tol);
        rep.scalar("max_unsigned_deviation", worst_unsigned, cfg.tol);
        rep.clause(
            "signed_averages_vanish",
            worst_signed <= cfg.tol,
            format!("max |signed average| {worst_signed:.2e}"),
        );
        rep.clause(
            "unsigned_averages_one",
            worst_unsigned <= cfg.tol,
            format!("max |average − 1| {worst_unsigned:.2e}"),
        );
    }

    match capacity_of_segment_refinement_study(cfg.p, &cfg.capacity_spacings) {
        Ok(est) => {
            let vals: Vec<f64> = est.iter().map(|e| e.value).collect();
            let (lo, hi) = vals
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
            let spread = hi / lo - 1.0;
            rep.scalar("capacity_min", lo, 0.0);
            rep.scalar("capacity_spread", spread, cfg.capacity_spread);
            rep.clause(
                "segment_capacity_positive",
                lo >= cfg.capacity_floor,
                format!("values {vals:.4?} (floor {})", cfg.capacity_floor),
            );
            rep.clause(
                "segment_capacity_stable",
                spread <= cfg.capacity_spread,
                format!(
                    "max/min − 1 = {spread:.4} (allowed {})",
                    cfg.capacity_spread
                ),
            );
            rep.series.push(capacity_table(&est));
        }
        Err(e) => {
            rep.failed("segment_capacity_positive", &e);
            rep.failed("segment_capacity_stable", &e);
        }
    }
    Ok(rep)
}

fn capacity_table(est: &[CapacityEstimate]) -> Table {
    let mut t = Table::new(
        "capacity",
        &["h", "value", "lower_bound", "residual", "iterations"],
    );
    for e in est {
        t.rows.push(vec![
            e.h,
            e.value,
            e.lower_bound,
            e.residual,
            e.iterations as f64,
        ]);
    }
    t
}

/// Sweeps `u` and `|u|` with identical settings and compares the verdicts.
pub fn truncation_check(
    u: &GridFunction,
    dom: &RectDomain,
    d: &BoundarySet,
    p: f64,
    deltas: &[f64],
    tol: f64,
) -> Result<ExperimentReport> {
    #[derive(Serialize)]
    struct Params<'a> {
        p: f64,
        deltas: &'a [f64],
        tol: f64,
        h: f64,
    }
    let mut rep = ExperimentReport::new(
        "truncation",
        Params {
            p,
            deltas,
            tol,
            h: u.spec().h,
        },
    )?;
    let mut run = |g: &GridFunction, tag: &str| -> Option<SweepVerdict> {
        let mut prob = MembershipProblem::new(dom.clone(), d.clone(), g.clone(), p, deltas[0]);
        prob.tol = tol;
        match membership_sweep(&prob, deltas) {
            Ok(sweep) => {
                let mut t = sweep_table(&sweep);
                t.name = format!("membership_{tag}");
                rep.series.push(t);
                Some(sweep_verdict(&sweep, 0.2, 0.5))
            }
            Err(e) => {
                rep.failed(&format!("sweep_{tag}"), &e);
                None
            }
        }
    };
    let a = run(u, "u");
    let b = run(&u.abs(), "abs");
    if let (Some(a), Some(b)) = (a, b) {
        rep.clause(
            "same_verdict",
            a == b && a != SweepVerdict::Inconclusive,
            format!("u: {a:?}, |u|: {b:?}"),
        );
    }
    Ok(rep)
}

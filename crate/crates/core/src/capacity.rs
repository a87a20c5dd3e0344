//! First-order Bessel kernel and a discretized capacity program.
//!
//! The program `min Σ h² f_i^p` subject to `f ≥ 0` and `(K f)_j ≥ 1` for every
//! target point is solved through its concave dual
//! `g(λ) = Σ λ − (p−1) Σ h² f(λ)^p` with `f_i(λ) = ((Kᵀλ)_i / (p h²))^{1/(p−1)}`,
//! maximized over `λ ≥ 0` by projected Newton steps with Armijo backtracking.
//! The reported value is the objective of `f / min_j (K f)_j`, which is
//! feasible, so it is an upper bound for the discrete program; `g(λ)` is a
//! lower bound.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point};
use crate::grid::GridSpec;

/// `G₁(r)` through the heat-kernel subordination integral
/// `G₁(r) = (4π^{3/2})⁻¹ ∫₀^∞ e^{−r²/(4t) − t} t^{−3/2} dt`, with `t = eˢ`
/// and the trapezoid rule (exponentially convergent here).
pub fn bessel_g1_radial(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "G1 is singular or undefined at radius {r}"
        )));
    }
    let a = 0.25 * r * r;
    let s0 = 2.0 * (0.5 * r).ln() - 6.0;
    let s1 = (r + 40.0).ln();
    let ds = 0.04;
    let n = ((s1 - s0) / ds).ceil() as usize;
    let ds = (s1 - s0) / n as f64;
    let mut sum = 0.0;
    for k in 0..=n {
        let s = s0 + k as f64 * ds;
        let t = s.exp();
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        sum += w * (-a / t - t - 0.5 * s).exp();
    }
    Ok(sum * ds / (4.0 * PI.powf(1.5)))
}

pub fn bessel_g1(x: Point) -> Result<f64> {
    bessel_g1_radial(x[0].hypot(x[1]))
}

/// Tabulated `G₁` on a uniform radius grid; interpolates `ln(r·G₁(r))` linearly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BesselKernelTable {
    pub r_min: f64,
    pub dr: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub n: u32,
    pub nodes_per_unit: f64,
}

impl BesselKernelTable {
    /// Table covering `[r_min, r_max]`.
    pub fn new(r_min: f64, r_max: f64, dr: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && dr > 0.0) {
            return Err(Error::Parameter(format!(
                "bad table range [{r_min}, {r_max}] step {dr}"
            )));
        }
        let n = ((r_max - r_min) / dr).ceil() as usize + 1;
        let radii: Vec<f64> = (0..n).map(|k| r_min + k as f64 * dr).collect();
        let values = radii
            .par_iter()
            .map(|&r| bessel_g1_radial(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(BesselKernelTable {
            r_min,
            dr,
            radii,
            values,
            n: 2,
            nodes_per_unit: 1.0 / 0.04,
        })
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// `G₁(r)` for `0 < r`; beyond the table the exact tail `e^{-r}/(2πr)` is not
    /// assumed, zero is returned (the table is sized to cover the grid).
    pub fn eval(&self, r: f64) -> f64 {
        if r > self.r_max() {
            return 0.0;
        }
        let t = ((r - self.r_min) / self.dr).max(0.0);
        let k = (t as usize).min(self.radii.len() - 2);
        let f = (t - k as f64).min(1.0);
        let q0 = (self.radii[k] * self.values[k]).ln();
        let q1 = (self.radii[k + 1] * self.values[k + 1]).ln();
        ((1.0 - f) * q0 + f * q1).exp() / r
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "g1"])?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            wr.write_record([r.to_string(), v.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// `∫∫_{[0,a]×[0,b]} 1/|y| dy` for `a, b ≥ 0`.
fn inv_r_corner(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    a * (b / a).asinh() + b * (a / b).asinh()
}

/// `∫∫_{[x0,x1]×[y0,y1]} 1/|y| dy` in coordinates centred on the singularity.
fn inv_r_rect(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    // split each axis into its nonnegative and nonpositive halves
    let halves = |lo: f64, hi: f64| -> [(f64, f64); 2] {
        [((-hi).max(0.0), (-lo).max(0.0)), (lo.max(0.0), hi.max(0.0))]
    };
    let mut s = 0.0;
    for (a0, a1) in halves(x0, x1) {
        for (b0, b1) in halves(y0, y1) {
            if a1 > a0 && b1 > b0 {
                s += inv_r_corner(a1, b1) - inv_r_corner(a0, b1) - inv_r_corner(a1, b0)
                    + inv_r_corner(a0, b0);
            }
        }
    }
    s
}

const G4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const G4_W: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// `∫_{cell} G₁(e − y) dy`.
fn cell_integral(table: &BesselKernelTable, e: Point, cell: &Aabb) -> f64 {
    let c = cell.center();
    let h = cell.width();
    let d = (c[0] - e[0]).hypot(c[1] - e[1]);
    if d > 8.0 * h {
        return h * h * table.eval(d);
    }
    if d > 3.0 * h {
        let mut s = 0.0;
        for (gx, wx) in G4_X.iter().zip(G4_W) {
            for (gy, wy) in G4_X.iter().zip(G4_W) {
                let y = [c[0] + 0.5 * h * gx, c[1] + 0.5 * h * gy];
                s += wx * wy * table.eval((y[0] - e[0]).hypot(y[1] - e[1]));
            }
        }
        return 0.25 * h * h * s;
    }
    // singular part in closed form, bounded remainder (e^{-r} - 1)/(2πr) by Gauss
    let sing = inv_r_rect(
        cell.lo[0] - e[0],
        cell.hi[0] - e[0],
        cell.lo[1] - e[1],
        cell.hi[1] - e[1],
    ) / (2.0 * PI);
    let mut s = 0.0;
    for (gx, wx) in G4_X.iter().zip(G4_W) {
        for (gy, wy) in G4_X.iter().zip(G4_W) {
            let y = [c[0] + 0.5 * h * gx, c[1] + 0.5 * h * gy];
            let r = (y[0] - e[0]).hypot(y[1] - e[1]);
            let rem = if r < 1e-8 {
                -1.0 / (2.0 * PI)
            } else {
                (-r).exp_m1() / (2.0 * PI * r)
            };
            s += wx * wy * rem;
        }
    }
    sing + 0.25 * h * h * s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityProblem {
    pub points: Vec<Point>,
    pub p: f64,
    pub h: f64,
    /// Padding around the bounding box of the points.
    pub margin: f64,
    /// Relative duality-gap and feasibility tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Explicit grid for `f`; derived from the points and margin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpecDef>,
}

/// Serializable form of a grid.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpecDef {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl From<GridSpec> for GridSpecDef {
    fn from(g: GridSpec) -> Self {
        GridSpecDef {
            origin: g.origin,
            h: g.h,
            nx: g.nx,
            ny: g.ny,
        }
    }
}

impl CapacityProblem {
    pub fn new(points: Vec<Point>, p: f64, h: f64) -> Self {
        CapacityProblem {
            points,
            p,
            h,
            margin: 4.0,
            tol: 1e-4,
            max_iter: 200,
            grid: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Parameter("target set E must be nonempty".into()));
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("target points must be finite".into()));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::Parameter(format!(
                "p must lie in (1, inf), got {}",
                self.p
            )));
        }
        if !(self.h > 0.0) || !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Parameter(
                "h, tol and max_iter must be positive".into(),
            ));
        }
        if !(self.margin >= 1.0) {
            return Err(Error::Parameter(format!(
                "margin must be at least 1, got {}",
                self.margin
            )));
        }
        Ok(())
    }

    pub fn bbox(&self) -> Aabb {
        let mut b = Aabb::new(self.points[0], self.points[0]);
        for q in &self.points[1..] {
            b.lo = [b.lo[0].min(q[0]), b.lo[1].min(q[1])];
            b.hi = [b.hi[0].max(q[0]), b.hi[1].max(q[1])];
        }
        b
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        match self.grid {
            Some(g) => GridSpec::new(g.origin, g.h, g.nx, g.ny),
            None => GridSpec::covering(&self.bbox().expand(self.margin), self.h, 0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    /// `Σ h² f^p` at the rescaled, feasible iterate.
    pub value: f64,
    /// `max_j (1 − (K f)_j)₊` of the unscaled dual iterate.
    pub residual: f64,
    pub iterations: usize,
    /// Dual objective: a lower bound for the discrete program.
    pub lower_bound: f64,
    pub h: f64,
    pub cells: usize,
    pub points: usize,
}

/// Kernel matrix stored cell-major: `k[i * m + j] = ∫_{cell i} G₁(e_j − y) dy`.
struct Kernel {
    m: usize,
    k: Vec<f64>,
}

impl Kernel {
    fn build(points: &[Point], spec: &GridSpec) -> Result<Self> {
        let cov = spec.coverage();
        let mut reach: f64 = 0.0;
        for e in points {
            for c in cov.corners() {
                reach = reach.max((c[0] - e[0]).hypot(c[1] - e[1]));
            }
        }
        let table =
            BesselKernelTable::new(0.25 * spec.h, reach + spec.h, (spec.h * 0.05).min(2e-3))?;
        let m = points.len();
        let n = spec.len();
        let mut k = vec![0.0; n * m];
        k.par_chunks_mut(m).enumerate().for_each(|(idx, row)| {
            let (i, kk) = spec.coords(idx);
            let cb = spec.cell_box(i, kk);
            for (j, e) in points.iter().enumerate() {
                row[j] = cell_integral(&table, *e, &cb);
            }
        });
        Ok(Kernel { m, k })
    }

    fn cells(&self) -> usize {
        self.k.len() / self.m
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.k[i * self.m..(i + 1) * self.m]
    }
}

struct DualState {
    /// `Kᵀλ` per cell.
    s: Vec<f64>,
    f: Vec<f64>,
    /// `K f` per point.
    kf: Vec<f64>,
    g: f64,
}

struct Dual<'a> {
    kern: &'a Kernel,
    p: f64,
    h2: f64,
}

impl Dual<'_> {
    fn state(&self, lambda: &[f64]) -> DualState {
        let m = self.kern.m;
        let q = 1.0 / (self.p - 1.0);
        let n = self.kern.cells();
        let mut s = vec![0.0; n];
        let mut f = vec![0.0; n];
        let mut kf = vec![0.0; m];
        let mut fp = 0.0;
        for i in 0..n {
            let row = self.kern.row(i);
            let si: f64 = row.iter().zip(lambda).map(|(a, b)| a * b).sum();
            s[i] = si;
            if si > 0.0 {
                let fi = (si / (self.p * self.h2)).powf(q);
                f[i] = fi;
                fp += fi * si / self.p; // h² f^p = f · s / p
                for j in 0..m {
                    kf[j] += row[j] * fi;
                }
            }
        }
        // Σ h² f^p = Σ f s / p
        let g = lambda.iter().sum::<f64>() - (self.p - 1.0) * fp;
        DualState { s, f, kf, g }
    }

    /// `−∇²g = K diag(f / ((p−1) s)) Kᵀ` restricted to `free`.
    fn neg_hessian(&self, st: &DualState, free: &[usize]) -> Vec<f64> {
        let nf = free.len();
        let mut hm = vec![0.0; nf * nf];
        let c = 1.0 / (self.p - 1.0);
        for i in 0..st.s.len() {
            if st.s[i] <= 0.0 {
                continue;
            }
            let w = c * st.f[i] / st.s[i];
            let row = self.kern.row(i);
            for (a, &ja) in free.iter().enumerate() {
                let va = w * row[ja];
                if va == 0.0 {
                    continue;
                }
                for (b, &jb) in free.iter().enumerate().skip(a) {
                    hm[a * nf + b] += va * row[jb];
                }
            }
        }
        for a in 0..nf {
            for b in 0..a {
                hm[a * nf + b] = hm[b * nf + a];
            }
        }
        hm
    }
}

/// Solves `A x = b` for symmetric positive definite `A` (Cholesky, with a tiny ridge).
fn spd_solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let ridge = 1e-12 * (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j] + if i == j { ridge } else { 0.0 };
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

fn estimate_from(
    kern: &Kernel,
    spec: &GridSpec,
    prob: &CapacityProblem,
) -> Result<CapacityEstimate> {
    let m = kern.m;
    let h2 = spec.h * spec.h;
    let dual = Dual {
        kern,
        p: prob.p,
        h2,
    };

    // uniform λ scaled so the least covered point is exactly covered
    let ones = vec![1.0; m];
    let st1 = dual.state(&ones);
    let min_kf = st1.kf.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_kf > 0.0) {
        return Err(Error::Domain("kernel matrix has a zero row".into()));
    }
    let mut lambda = vec![min_kf.powf(-(prob.p - 1.0)); m];
    let mut st = dual.state(&lambda);

    let report = |st: &DualState, iterations: usize| -> CapacityEstimate {
        let min_kf = st.kf.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = 1.0 / min_kf;
        let fp: f64 = st.f.iter().map(|f| h2 * f.powf(prob.p)).sum();
        let residual = st.kf.iter().map(|v| (1.0 - v).max(0.0)).fold(0.0, f64::max);
        CapacityEstimate {
            value: fp * scale.powf(prob.p),
            residual,
            iterations,
            lower_bound: st.g,
            h: spec.h,
            cells: kern.cells(),
            points: m,
        }
    };

    for it in 1..=prob.max_iter {
        let est = report(&st, it - 1);
        let gap = (est.value - est.lower_bound) / est.value.max(f64::MIN_POSITIVE);
        if est.residual <= prob.tol && gap <= prob.tol {
            return Ok(est);
        }
        let grad: Vec<f64> = st.kf.iter().map(|v| 1.0 - v).collect();
        // active set: λ_j = 0 and the gradient pushes further down
        let free: Vec<usize> = (0..m)
            .filter(|&j| lambda[j] > 0.0 || grad[j] > 0.0)
            .collect();
        let hm = dual.neg_hessian(&st, &free);
        let gf: Vec<f64> = free.iter().map(|&j| grad[j]).collect();
        let dir_free = spd_solve(&hm, &gf).unwrap_or_else(|| gf.clone());
        let mut dir = vec![0.0; m];
        for (a, &j) in free.iter().enumerate() {
            dir[j] = dir_free[a];
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = lambda
                .iter()
                .zip(&dir)
                .map(|(l, d)| (l + t * d).max(0.0))
                .collect();
            let step: f64 = trial
                .iter()
                .zip(&lambda)
                .zip(&grad)
                .map(|((a, b), g)| (a - b) * g)
                .sum();
            let ts = dual.state(&trial);
            if ts.g >= st.g + 1e-4 * step && ts.g.is_finite() {
                lambda = trial;
                st = ts;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no ascent possible at machine precision: report what we have
            let est = report(&st, it);
            if est.residual <= prob.tol {
                return Ok(est);
            }
            return Err(Error::Convergence {
                iterations: it,
                best_value: est.value,
                residual: est.residual,
            });
        }
    }
    let est = report(&st, prob.max_iter);
    Err(Error::Convergence {
        iterations: prob.max_iter,
        best_value: est.value,
        residual: est.residual,
    })
}

pub fn estimate_capacity(prob: &CapacityProblem) -> Result<CapacityEstimate> {
    prob.validate()?;
    let spec = prob.grid_spec()?;
    let kern = Kernel::build(&prob.points, &spec)?;
    estimate_from(&kern, &spec, prob)
}

impl CapacityEstimate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `n` equispaced points on `{0} × [−1, 1]`.
pub fn segment_cloud(n: usize) -> Vec<Point> {
    if n == 1 {
        return vec![[0.0, 0.0]];
    }
    (0..n)
        .map(|k| [0.0, -1.0 + 2.0 * k as f64 / (n - 1) as f64])
        .collect()
}

/// Capacity of the 33-point segment cloud at each grid spacing.
pub fn capacity_of_segment_refinement_study(
    p: f64,
    spacings: &[f64],
) -> Result<Vec<CapacityEstimate>> {
    spacings
        .iter()
        .map(|&h| estimate_capacity(&CapacityProblem::new(segment_cloud(33), p, h)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_closed_form() {
        let mut r: f64 = 1e-4;
        while r <= 20.0 {
            let exact = (-r).exp() / (2.0 * PI * r);
            let got = bessel_g1_radial(r).unwrap();
            assert!(
                ((got - exact) / exact).abs() < 1e-6,
                "r={r}: {got} vs {exact}"
            );
            r *= 1.7;
        }
    }

    #[test]
    fn symmetric_decreasing_and_singular_at_zero() {
        assert_eq!(
            bessel_g1([0.3, -0.4]).unwrap(),
            bessel_g1([-0.3, 0.4]).unwrap()
        );
        let v: Vec<f64> = [0.1, 0.5, 1.0]
            .iter()
            .map(|&r| bessel_g1_radial(r).unwrap())
            .collect();
        assert!(v[0] > v[1] && v[1] > v[2]);
        assert!(matches!(bessel_g1([0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn table_positive_and_decreasing() {
        let t = BesselKernelTable::new(0.01, 5.0, 0.01).unwrap();
        assert!(t.values.iter().all(|&v| v > 0.0));
        assert!(t.values.windows(2).all(|w| w[1] < w[0]));
        let exact = (-1.234f64).exp() / (2.0 * PI * 1.234);
        assert!((t.eval(1.234) - exact).abs() / exact < 1e-5);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("r,g1\n"));
    }

    #[test]
    fn singular_cell_integral_by_subdivision() {
        // ∫ over [0,1]² of 1/|y| = 2 asinh(1)
        assert!((inv_r_rect(0.0, 1.0, 0.0, 1.0) - 2.0 * 1f64.asinh()).abs() < 1e-14);
        // centred square = 4 × quarter
        let q = inv_r_rect(0.0, 0.5, 0.0, 0.5);
        assert!((inv_r_rect(-0.5, 0.5, -0.5, 0.5) - 4.0 * q).abs() < 1e-14);
        // off-centre rectangle against brute force
        let (x0, x1, y0, y1) = (-0.2, 0.7, 0.1, 0.4);
        let n = 1500;
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                let x = x0 + (i as f64 + 0.5) * (x1 - x0) / n as f64;
                let y = y0 + (k as f64 + 0.5) * (y1 - y0) / n as f64;
                s += 1.0 / x.hypot(y);
            }
        }
        s *= (x1 - x0) * (y1 - y0) / (n * n) as f64;
        assert!((inv_r_rect(x0, x1, y0, y1) - s).abs() < 1e-4);
    }

    #[test]
    fn kernel_mass_is_one() {
        let spec = GridSpec::new([-12.0, -12.0], 1.0 / 16.0, 384, 384).unwrap();
        let kern = Kernel::build(&[[0.0, 0.0]], &spec).unwrap();
        let mass: f64 = kern.k.iter().sum();
        assert!((mass - 1.0).abs() < 1e-3, "{mass}");
    }

    #[test]
    fn empty_set_rejected() {
        assert!(estimate_capacity(&CapacityProblem::new(vec![], 2.0, 0.25)).is_err());
    }

    #[test]
    fn single_point_bounds_and_feasibility() {
        let mut prob = CapacityProblem::new(vec![[0.0, 0.0]], 2.0, 0.125);
        prob.tol = 1e-6;
        let e = estimate_capacity(&prob).unwrap();
        assert!(e.value > 0.0);
        assert!(e.lower_bound <= e.value * (1.0 + 1e-9));
        assert!((e.value - e.lower_bound) / e.value <= 1e-6);
    }

    /// For p = 2 the dual is the QP `max Σλ − λᵀQλ / (4h²)`, `Q = K Kᵀ`, `λ ≥ 0`;
    /// projected Gauss–Seidel on the dense Gram matrix gives an independent value.
    #[test]
    fn newton_dual_matches_dense_gauss_seidel() {
        let prob = CapacityProblem::new(segment_cloud(33), 2.0, 1.0 / 16.0);
        let spec = prob.grid_spec().unwrap();
        let kern = Kernel::build(&prob.points, &spec).unwrap();
        let m = kern.m;
        let mut q = vec![0.0; m * m];
        for i in 0..kern.cells() {
            let row = kern.row(i);
            for a in 0..m {
                for b in 0..m {
                    q[a * m + b] += row[a] * row[b];
                }
            }
        }
        let c = 1.0 / (4.0 * spec.h * spec.h);
        let mut lam = vec![0.0; m];
        for _ in 0..20000 {
            for a in 0..m {
                let off: f64 = (0..m)
                    .filter(|&b| b != a)
                    .map(|b| q[a * m + b] * lam[b])
                    .sum();
                lam[a] = ((1.0 - 2.0 * c * off) / (2.0 * c * q[a * m + a])).max(0.0);
            }
        }
        let quad: f64 = (0..m)
            .map(|a| (0..m).map(|b| lam[a] * q[a * m + b] * lam[b]).sum::<f64>())
            .sum();
        let oracle = lam.iter().sum::<f64>() - c * quad;
        let est = estimate_from(&kern, &spec, &prob).unwrap();
        assert!(
            ((est.value - oracle) / oracle).abs() < 1e-3,
            "{} vs {oracle}",
            est.value
        );
        assert!(est.residual <= prob.tol);
    }

    #[test]
    fn p_three_closes_the_gap() {
        let mut prob = CapacityProblem::new(segment_cloud(5), 3.0, 0.125);
        prob.tol = 1e-6;
        let e = estimate_capacity(&prob).unwrap();
        assert!(e.value > 0.0 && (e.value - e.lower_bound) / e.value <= 1e-6);
        assert!(e.to_json().unwrap().contains("\"residual\""));
    }
}

//! Property checks shared by the integration suite and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trace_lab::capacity::{estimate_capacity, BesselKernelTable, CapacityProblem, GridSpecDef};
use trace_lab::geometry::{ball_domain_area, fractal_dirichlet_part, Point, Rect, RectDomain};

pub struct Check {
    pub passed: bool,
    pub detail: String,
}

/// `2π ∫ r G₁(r) dr` from the tabulated kernel (Simpson on the nodes; below
/// the first node `r G₁ → 1/(2π)`).
pub fn kernel_mass() -> Check {
    let t = BesselKernelTable::new(1e-3, 40.0, 1e-3).unwrap();
    let n = if t.radii.len() % 2 == 0 {
        t.radii.len() - 1
    } else {
        t.radii.len()
    };
    let f = |k: usize| t.radii[k] * t.values[k];
    let mut s = f(0) + f(n - 1);
    for k in 1..n - 1 {
        s += if k % 2 == 1 { 4.0 * f(k) } else { 2.0 * f(k) };
    }
    let mass = 2.0 * PI * (s * t.dr / 3.0 + t.r_min / (2.0 * PI));
    Check {
        passed: (mass - 1.0).abs() <= 1e-3,
        detail: format!("mass {mass:.6}"),
    }
}

fn shared_grid() -> GridSpecDef {
    GridSpecDef {
        origin: [-4.5, -4.5],
        h: 0.125,
        nx: 72,
        ny: 72,
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
    (0..n)
        .map(|_| [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)])
        .collect()
}

fn cap(points: &[Point]) -> (f64, f64) {
    let mut prob = CapacityProblem::new(points.to_vec(), 2.0, 0.125);
    prob.grid = Some(shared_grid());
    let e = estimate_capacity(&prob).unwrap();
    (e.value, prob.tol)
}

/// `cap(E) ≤ cap(E ∪ F)` and `cap(E ∪ F) ≤ cap(E) + cap(F)` on random sets,
/// all on one grid, each within `2·tol` relative.
pub fn capacity_monotone_subadditive(trials: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_mono: f64 = f64::NEG_INFINITY;
    let mut worst_sub: f64 = f64::NEG_INFINITY;
    let mut bad = 0;
    for _ in 0..trials {
        let ne = rng.gen_range(1..=3);
        let e = random_points(&mut rng, ne);
        let f = random_points(&mut rng, 2);
        let union: Vec<Point> = e.iter().chain(&f).copied().collect();
        let (ce, tol) = cap(&e);
        let (cf, _) = cap(&f);
        let (cu, _) = cap(&union);
        let mono = ce / cu - 1.0;
        let sub = cu / (ce + cf) - 1.0;
        worst_mono = worst_mono.max(mono);
        worst_sub = worst_sub.max(sub);
        if mono > 2.0 * tol || sub > 2.0 * tol {
            bad += 1;
        }
    }
    Check {
        passed: bad == 0,
        detail: format!(
            "{trials} sets, {bad} violations; max cap(E)/cap(E∪F) − 1 = {worst_mono:.2e}, \
             max cap(E∪F)/(cap E + cap F) − 1 = {worst_sub:.2e}"
        ),
    }
}

fn halton(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Randomly shifted Halton estimate of `|B(x, r) ∩ Ω|`: (mean, standard error).
fn rqmc_area(dom: &RectDomain, x: Point, r: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (reps, n) = (64, 1024u64);
    let est: Vec<f64> = (0..reps)
        .map(|_| {
            let (s0, s1): (f64, f64) = (rng.gen(), rng.gen());
            let hits = (1..=n)
                .filter(|&i| {
                    let u = (halton(i, 2) + s0).fract();
                    let v = (halton(i, 3) + s1).fract();
                    let (rho, th) = (r * u.sqrt(), 2.0 * PI * v);
                    dom.contains([x[0] + rho * th.cos(), x[1] + rho * th.sin()])
                })
                .count();
            PI * r * r * hits as f64 / n as f64
        })
        .collect();
    let m = est.iter().sum::<f64>() / reps as f64;
    let var = est.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (reps - 1) as f64;
    (m, (var / reps as f64).sqrt())
}

pub fn random_domain(rng: &mut ChaCha8Rng) -> RectDomain {
    let k = rng.gen_range(1..=5);
    let rects = (0..k)
        .map(|_| {
            let lo = [rng.gen_range(0.0..0.8), rng.gen_range(0.0..0.8)];
            let size = [rng.gen_range(0.05..0.6), rng.gen_range(0.05..0.6)];
            Rect::new(lo, size).unwrap()
        })
        .collect();
    RectDomain::new(rects).unwrap()
}

pub fn ball_area_vs_qmc(triples: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for _ in 0..triples {
        let dom = random_domain(&mut rng);
        let x = [rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2)];
        let r = rng.gen_range(0.05..0.7);
        let exact = ball_domain_area(&dom, x, r, 1e-7 * PI * r * r)
            .unwrap()
            .value;
        let (m, se) = rqmc_area(&dom, x, r, &mut rng);
        let z = if se > 0.0 {
            (m - exact).abs() / se
        } else if (m - exact).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
        if z > 3.0 {
            bad += 1;
        }
    }
    Check {
        passed: bad == 0,
        detail: format!("{triples} triples, {bad} outside 3 SE, worst {worst:.2} SE"),
    }
}

/// `r ≤ H₁(B(x, r) ∩ D) ≤ 2r` for `D = [0,1]×{0}`, `x ∈ D`, `r < 1`.
pub fn ahlfors_bounds(samples: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = fractal_dirichlet_part();
    let mut bad = 0;
    let (mut lo, mut hi): (f64, f64) = (f64::INFINITY, 0.0);
    for _ in 0..samples {
        let x = [rng.gen_range(0.0..=1.0), 0.0];
        let r = rng.gen_range(1e-3..1.0);
        let h = d.hausdorff_in_ball(x, r, 1.0).unwrap();
        lo = lo.min(h / r);
        hi = hi.max(h / r);
        if h < r * (1.0 - 1e-12) || h > 2.0 * r * (1.0 + 1e-12) {
            bad += 1;
        }
    }
    Check {
        passed: bad == 0,
        detail: format!("{samples} balls, H₁/r in [{lo:.4}, {hi:.4}]"),
    }
}

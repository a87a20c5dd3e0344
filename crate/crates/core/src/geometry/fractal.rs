//! Rectilinear fractal domains obtained by thickening the edges of a dyadic
//! skeleton.
//!
//! Level `j` of the skeleton consists of the squares
//! `[k/2^j, (k+1)/2^j] x [2^-j, 2^-j+1]`, `k < 2^j`. Its new edges are the
//! `2^j` bottom edges `h_j^k` (at height `2^-j`) and the `2^j + 1` vertical
//! edges `v_j^k` (at abscissa `k/2^j`). Every horizontal edge is thickened by
//! `(-a_j, a_j)^2` and every vertical one by `(-b_j, b_j)^2`.

use serde::{Deserialize, Serialize};

use super::boundary::BoundarySet;
use super::domain::RectDomain;
use super::shapes::Rect;
use crate::error::{Error, Result};

/// How the thickening sequences `(a_j, b_j)` are generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FractalRule {
    /// `a_j = 2^-j-2`, `b_j = 2^-(1+p)j` for `j >= 1`, and `b_0 = 1/4`.
    Example1,
    /// `a_j = b_j = 4^-j-1`.
    Example2,
    Custom {
        a: Vec<f64>,
        b: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalParams {
    pub p: f64,
    pub depth: u32,
    pub rule: FractalRule,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Horizontal,
    Vertical,
}

/// One thickened skeleton edge.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct FractalPiece {
    pub level: u32,
    pub kind: EdgeKind,
    pub index: u32,
    pub rect: Rect,
}

impl FractalParams {
    pub fn new(p: f64, depth: u32, rule: FractalRule) -> Result<Self> {
        let params = FractalParams { p, depth, rule };
        params.validate()?;
        Ok(params)
    }

    pub fn example1(p: f64, depth: u32) -> Result<Self> {
        Self::new(p, depth, FractalRule::Example1)
    }

    pub fn example2(p: f64, depth: u32) -> Result<Self> {
        Self::new(p, depth, FractalRule::Example2)
    }

    /// Horizontal thickening `a_j`.
    pub fn a(&self, j: u32) -> f64 {
        match &self.rule {
            FractalRule::Example1 => exp2(-(j as f64) - 2.0),
            FractalRule::Example2 => 0.25 * exp2(-2.0 * j as f64),
            FractalRule::Custom { a, .. } => a.get(j as usize).copied().unwrap_or(f64::NAN),
        }
    }

    /// Vertical thickening `b_j`.
    pub fn b(&self, j: u32) -> f64 {
        match &self.rule {
            // 2^0 = 1 would swallow the whole unit square; level 0 uses 1/4
            FractalRule::Example1 if j == 0 => 0.25,
            FractalRule::Example1 => exp2(-(1.0 + self.p) * j as f64),
            FractalRule::Example2 => 0.25 * exp2(-2.0 * j as f64),
            FractalRule::Custom { b, .. } => b.get(j as usize).copied().unwrap_or(f64::NAN),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::Parameter(format!(
                "exponent p must lie in (1, inf), got {}",
                self.p
            )));
        }
        if self.depth > 24 {
            return Err(Error::Parameter(format!(
                "depth {} is too large",
                self.depth
            )));
        }
        if let FractalRule::Custom { a, b } = &self.rule {
            let need = self.depth as usize + 1;
            if a.len() < need || b.len() < need {
                return Err(Error::Parameter(format!(
                    "custom rule needs {need} values of a_j and b_j"
                )));
            }
        }
        for j in 0..=self.depth {
            let bound = exp2(-(j as f64) - 1.0);
            for (name, v) in [("a", self.a(j)), ("b", self.b(j))] {
                if !(v > 0.0 && v < bound) {
                    return Err(Error::Parameter(format!(
                        "{name}_{j} = {v} violates 0 < {name}_j < 2^-j-1"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn exp2(x: f64) -> f64 {
    x.exp2()
}

/// All thickened edges, level by level, horizontal before vertical.
pub fn fractal_pieces(params: &FractalParams) -> Result<Vec<FractalPiece>> {
    params.validate()?;
    let mut out = Vec::new();
    for j in 0..=params.depth {
        let len = exp2(-(j as f64));
        let (a, b) = (params.a(j), params.b(j));
        let n = 1u32 << j;
        for k in 0..n {
            let center = [(k as f64 + 0.5) * len, len];
            out.push(FractalPiece {
                level: j,
                kind: EdgeKind::Horizontal,
                index: k,
                rect: Rect::centered(center, [0.5 * len + a, a])?,
            });
        }
        for k in 0..=n {
            let center = [k as f64 * len, 1.5 * len];
            out.push(FractalPiece {
                level: j,
                kind: EdgeKind::Vertical,
                index: k,
                rect: Rect::centered(center, [b, 0.5 * len + b])?,
            });
        }
    }
    Ok(out)
}

/// The truncated fractal domain: union of all thickened edges up to `depth`.
pub fn build_fractal_domain(params: &FractalParams) -> Result<RectDomain> {
    RectDomain::new(
        fractal_pieces(params)?
            .into_iter()
            .map(|p| p.rect)
            .collect(),
    )
}

/// Number of rectangles emitted for a given depth.
pub fn fractal_rect_count(depth: u32) -> usize {
    (0..=depth).map(|j| (1usize << (j + 1)) + 1).sum()
}

/// The Dirichlet part `[0,1] x {0}` used with the fractal domains.
pub fn fractal_dirichlet_part() -> BoundarySet {
    BoundarySet::segment([0.0, 0.0], [1.0, 0.0]).expect("axis-aligned")
}

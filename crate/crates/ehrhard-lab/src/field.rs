//! Probability-valued function families for hypothesis instances.
//!
//! Analytic variants evaluate exactly (which is what makes premise-margin
//! checks at the 1e-9 level meaningful); the grid variant interpolates and
//! reports when a point falls outside its box.

use crate::error::Result;
use crate::gaussian::{probit, ExtReal, QuadratureRule};
use crate::grid::{Extension, GridFunction, RangeTag};
use crate::heat::{heat_evolve_point, probit_affine_evolute};
use serde::{Deserialize, Serialize};

/// A smooth concave correction term `−w·√(1 + (x − ξ)²)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Bump {
    pub weight: f64,
    pub center: f64,
}

/// Probability-valued scalar field on `ℝ^n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    /// `f ≡ c`.
    Constant { value: f64, dim: usize },
    /// `f(x) = Φ(⟨u, x⟩ + c)`; probit-affine, evolves in closed form.
    ProbitAffine { slope: Vec<f64>, offset: f64 },
    /// 1D smooth probit-concave family
    /// `F(x) = κx + c − Σ wⱼ √(1 + (x − ξⱼ)²)`; lies below the affine
    /// majorant `κx + c`, which is what premise constructions use.
    ProbitConcave {
        slope: f64,
        offset: f64,
        bumps: Vec<Bump>,
    },
    /// `f(x) = Φ(1 − |ax|²)`, the counterexample seed.
    ProbitQuad { a: f64, dim: usize },
    /// `g = 1 − f = Φ(|ax|² − 1)` for the same seed.
    ProbitQuadFlipped { a: f64, dim: usize },
    /// Grid-sampled field; evaluation interpolates and extends.
    Grid(GridFunction),
}

impl ScalarField {
    pub fn dim(&self) -> usize {
        match self {
            ScalarField::Constant { dim, .. } => *dim,
            ScalarField::ProbitAffine { slope, .. } => slope.len(),
            ScalarField::ProbitConcave { .. } => 1,
            ScalarField::ProbitQuad { dim, .. } => *dim,
            ScalarField::ProbitQuadFlipped { dim, .. } => *dim,
            ScalarField::Grid(g) => g.dim(),
        }
    }

    /// Probit value `Φ⁻¹(f(x))`, exact for analytic variants.
    pub fn probit_at(&self, x: &[f64]) -> ExtReal {
        match self {
            ScalarField::Constant { value, .. } => probit(*value),
            ScalarField::ProbitAffine { slope, offset } => {
                let dot: f64 = slope.iter().zip(x).map(|(&a, &b)| a * b).sum();
                ExtReal::new(dot + offset)
            }
            ScalarField::ProbitConcave {
                slope,
                offset,
                bumps,
            } => {
                let mut v = slope * x[0] + offset;
                for b in bumps {
                    v -= b.weight * (1.0 + (x[0] - b.center).powi(2)).sqrt();
                }
                ExtReal::new(v)
            }
            ScalarField::ProbitQuad { a, .. } => {
                let r2: f64 = x.iter().map(|&xi| (a * xi) * (a * xi)).sum();
                ExtReal::new(1.0 - r2)
            }
            ScalarField::ProbitQuadFlipped { a, .. } => {
                let r2: f64 = x.iter().map(|&xi| (a * xi) * (a * xi)).sum();
                ExtReal::new(r2 - 1.0)
            }
            ScalarField::Grid(g) => probit(g.eval(x)),
        }
    }

    /// Probability value `f(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant { value, .. } => *value,
            ScalarField::Grid(g) => g.eval(x),
            _ => crate::gaussian::phi_cdf(self.probit_at(x)),
        }
    }

    /// Whether a point is inside the field's represented domain (grids
    /// have boxes; analytic fields cover all of `ℝ^n`).
    pub fn covers(&self, x: &[f64]) -> bool {
        match self {
            ScalarField::Grid(g) => g.contains(x),
            _ => true,
        }
    }

    /// `P_t f(x)`: closed form for constants and probit-affine fields,
    /// quadrature otherwise.
    pub fn evolve_point(&self, t: f64, x: &[f64], rule: &QuadratureRule) -> Result<f64> {
        match self {
            ScalarField::Constant { value, .. } => Ok(*value),
            ScalarField::ProbitAffine { slope, offset } => {
                Ok(probit_affine_evolute(slope, *offset, t, x))
            }
            _ => {
                let f = |y: &[f64]| self.eval(y);
                heat_evolve_point(&f, self.dim(), t, x, rule)
            }
        }
    }

    /// `Φ⁻¹(P_t f(x))`.
    pub fn evolve_probit(&self, t: f64, x: &[f64], rule: &QuadratureRule) -> Result<ExtReal> {
        if t == 0.0 {
            return Ok(self.probit_at(x));
        }
        match self {
            ScalarField::ProbitAffine { slope, offset } => Ok(ExtReal::new(
                crate::heat::probit_affine_evolute_probit(slope, *offset, t, x),
            )),
            _ => {
                let p = self.evolve_point(t, x, rule)?;
                crate::gaussian::phi_inv(p.clamp(0.0, 1.0))
            }
        }
    }

    /// Sample onto a grid.
    pub fn to_grid(&self, axes: Vec<crate::grid::Axis>, extension: Extension) -> GridFunction {
        GridFunction::from_fn(axes, RangeTag::Probability, extension, |x| self.eval(x))
    }
}

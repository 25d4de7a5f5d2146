//! Sampled functions on uniform rectangular grids in dimension `n ≤ 3`.
//!
//! `GridFunction` carries the probability-valued data (`f_i`, `h`, and their
//! evolutes), `ProbitField` the extended-real probit transform
//! `F = Φ⁻¹ ∘ f`. Off-grid values follow the grid's boundary-extension
//! policy: constant extension of the nearest boundary value, or an affine
//! tail on the probit scale (exact for probit-affine functions).

use crate::error::{LabError, Result};
use crate::gaussian::{phi, probit, ExtReal};
use serde::{Deserialize, Serialize};

/// Probability samples are clamped strictly inside (0, 1) at this margin.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeTag {
    /// Values in (0, 1), clamped to `[1e-12, 1 − 1e-12]`.
    Probability,
    /// Unconstrained real values.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Nearest boundary value.
    Constant,
    /// Extend `Φ⁻¹ ∘ f` (or `f` itself for real grids) affinely using the
    /// one-sided boundary slope.
    AffineTail,
}

/// One grid axis: uniform spacing, `count >= 2` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub origin: f64,
    pub spacing: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(origin: f64, spacing: f64, count: usize) -> Self {
        assert!(spacing > 0.0 && count >= 2);
        Axis {
            origin,
            spacing,
            count,
        }
    }

    /// Symmetric axis covering `[-half, half]` with `count` points.
    pub fn symmetric(half: f64, count: usize) -> Self {
        Axis::new(-half, 2.0 * half / (count - 1) as f64, count)
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn max(&self) -> f64 {
        self.coord(self.count - 1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFunction {
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
    pub range: RangeTag,
    pub extension: Extension,
}

impl GridFunction {
    pub fn from_fn(
        axes: Vec<Axis>,
        range: RangeTag,
        extension: Extension,
        f: impl Fn(&[f64]) -> f64,
    ) -> Self {
        assert!((1..=3).contains(&axes.len()));
        let total: usize = axes.iter().map(|a| a.count).product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        let mut x = vec![0.0; axes.len()];
        for _ in 0..total {
            for (k, a) in axes.iter().enumerate() {
                x[k] = a.coord(idx[k]);
            }
            let mut v = f(&x);
            if range == RangeTag::Probability {
                v = v.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            }
            values.push(v);
            // row-major: last axis fastest
            for k in (0..axes.len()).rev() {
                idx[k] += 1;
                if idx[k] < axes[k].count {
                    break;
                }
                idx[k] = 0;
            }
        }
        GridFunction {
            axes,
            values,
            range,
            extension,
        }
    }

    /// Default 1D lab grid: `[-8, 8]`, 257 points.
    pub fn default_axis_1d() -> Vec<Axis> {
        vec![Axis::symmetric(8.0, 257)]
    }

    /// Default 2D lab grid: `[-8, 8]²`, 129² points.
    pub fn default_axes_2d() -> Vec<Axis> {
        vec![Axis::symmetric(8.0, 129), Axis::symmetric(8.0, 129)]
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * self.axes[k].count + i;
        }
        flat
    }

    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    /// Iterate grid coordinates in row-major order.
    pub fn coords(&self) -> Vec<Vec<f64>> {
        let total = self.len();
        let n = self.dim();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            out.push(
                (0..n)
                    .map(|k| self.axes[k].coord(idx[k]))
                    .collect::<Vec<_>>(),
            );
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < self.axes[k].count {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.axes)
            .all(|(&xi, a)| xi >= a.origin - 1e-12 && xi <= a.max() + 1e-12)
    }

    /// Multilinear interpolation at an in-domain point.
    fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for k in 0..n {
            let a = &self.axes[k];
            let t = ((x[k] - a.origin) / a.spacing).clamp(0.0, (a.count - 1) as f64);
            let i = (t.floor() as usize).min(a.count - 2);
            base[k] = i;
            frac[k] = t - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for k in 0..n {
                if corner >> k & 1 == 1 {
                    idx[k] = base[k] + 1;
                    w *= frac[k];
                } else {
                    idx[k] = base[k];
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * self.value_at(&idx[..n]);
            }
        }
        acc
    }

    /// Evaluate at an arbitrary point, applying the boundary-extension
    /// policy outside the grid box.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim());
        if self.contains(x) {
            return self.interpolate(x);
        }
        let n = self.dim();
        let mut clamped = [0.0f64; 3];
        let mut overhang = [0.0f64; 3];
        for k in 0..n {
            let a = &self.axes[k];
            let c = x[k].clamp(a.origin, a.max());
            overhang[k] = x[k] - c;
            clamped[k] = c;
        }
        match self.extension {
            Extension::Constant => self.interpolate(&clamped[..n]),
            Extension::AffineTail => {
                let to_scale = |v: f64| -> f64 {
                    if self.range == RangeTag::Probability {
                        probit(v).value()
                    } else {
                        v
                    }
                };
                let mut val = to_scale(self.interpolate(&clamped[..n]));
                for k in 0..n {
                    if overhang[k] == 0.0 {
                        continue;
                    }
                    let a = &self.axes[k];
                    let mut inner = clamped;
                    inner[k] -= overhang[k].signum() * a.spacing;
                    inner[k] = inner[k].clamp(a.origin, a.max());
                    let f_inner = to_scale(self.interpolate(&inner[..n]));
                    let slope = (val - f_inner) / (clamped[k] - inner[k]);
                    val += slope * overhang[k];
                }
                if self.range == RangeTag::Probability {
                    phi(val).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
                } else {
                    val
                }
            }
        }
    }

    /// Map values pointwise, keeping geometry.
    pub fn map(&self, range: RangeTag, f: impl Fn(f64) -> f64) -> GridFunction {
        let values = self
            .values
            .iter()
            .map(|&v| {
                let w = f(v);
                if range == RangeTag::Probability {
                    w.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
                } else {
                    w
                }
            })
            .collect();
        GridFunction {
            axes: self.axes.clone(),
            values,
            range,
            extension: self.extension,
        }
    }

    /// Indices of interior points at Euclidean distance >= `margin` from
    /// the grid boundary along every axis.
    pub fn interior_indices(&self, margin: f64) -> Vec<Vec<usize>> {
        let n = self.dim();
        let mut keep = Vec::new();
        let total = self.len();
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let ok = (0..n).all(|k| {
                let a = &self.axes[k];
                let x = a.coord(idx[k]);
                x - a.origin >= margin - 1e-12 && a.max() - x >= margin - 1e-12
            });
            if ok {
                keep.push(idx.clone());
            }
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < self.axes[k].count {
                    break;
                }
                idx[k] = 0;
            }
        }
        keep
    }
}

/// Extended-real probit field `F = Φ⁻¹ ∘ f` sharing a grid geometry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbitField {
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
}

impl ProbitField {
    pub fn from_grid(f: &GridFunction) -> Result<ProbitField> {
        if f.range != RangeTag::Probability {
            return Err(LabError::Domain(
                "probit transform requires a probability-valued grid".into(),
            ));
        }
        let values = f.values.iter().map(|&p| probit(p).value()).collect();
        Ok(ProbitField {
            axes: f.axes.clone(),
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * self.axes[k].count + i;
        }
        flat
    }

    pub fn value_at(&self, idx: &[usize]) -> ExtReal {
        ExtReal::new(self.values[self.flat_index(idx)])
    }

    /// Back to probabilities; inverse of `ProbitField::from_grid` within
    /// the probability clamp.
    pub fn to_grid(&self, extension: Extension) -> GridFunction {
        let values = self
            .values
            .iter()
            .map(|&v| phi(v).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
            .collect();
        GridFunction {
            axes: self.axes.clone(),
            values,
            range: RangeTag::Probability,
            extension,
        }
    }

    /// Maximum discrete second difference over interior points of a 1D
    /// field, the discrete concavity test. Points whose probit value sits
    /// at the probability-clamp saturation are skipped: saturation kinks
    /// are artifacts of the clamp, not of the function.
    pub fn max_second_difference_1d(&self) -> f64 {
        assert_eq!(self.dim(), 1);
        let sat = probit(PROB_CLAMP).value().abs() - 1e-9;
        let mut worst = f64::NEG_INFINITY;
        for i in 1..self.axes[0].count - 1 {
            let (a, b, c) = (self.values[i - 1], self.values[i], self.values[i + 1]);
            if a.abs() >= sat || b.abs() >= sat || c.abs() >= sat {
                continue;
            }
            let d2 = a - 2.0 * b + c;
            if d2 > worst {
                worst = d2;
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine_grid() -> GridFunction {
        GridFunction::from_fn(
            vec![Axis::symmetric(4.0, 65)],
            RangeTag::Probability,
            Extension::AffineTail,
            |x| phi(0.3 * x[0] + 0.1),
        )
    }

    #[test]
    fn construction_and_lookup() {
        let g = affine_grid();
        assert_eq!(g.len(), 65);
        assert!((g.value_at(&[32]) - phi(0.1)).abs() <= 1e-15);
        assert!(g.values.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn interpolation_matches_on_nodes() {
        let g = affine_grid();
        for i in 0..65 {
            let x = g.axes[0].coord(i);
            assert!((g.eval(&[x]) - g.value_at(&[i])).abs() <= 1e-14);
        }
    }

    #[test]
    fn affine_tail_is_exact_for_probit_affine() {
        let g = affine_grid();
        for &x in &[-6.0, -4.5, 5.0, 7.5] {
            let expected = phi(0.3 * x + 0.1);
            assert!(
                (g.eval(&[x]) - expected).abs() <= 1e-10,
                "x = {x}: {} vs {expected}",
                g.eval(&[x])
            );
        }
    }

    #[test]
    fn constant_extension_clamps() {
        let mut g = affine_grid();
        g.extension = Extension::Constant;
        let edge = g.value_at(&[64]);
        assert_eq!(g.eval(&[10.0]), edge);
    }

    #[test]
    fn probit_roundtrip_on_grid() {
        let g = affine_grid();
        let p = ProbitField::from_grid(&g).unwrap();
        let back = p.to_grid(Extension::AffineTail);
        for (a, b) in g.values.iter().zip(&back.values) {
            assert!((a - b).abs() <= 1e-12);
        }
        // probit of an affine composition is affine
        for i in 0..65 {
            let x = g.axes[0].coord(i);
            assert!((p.values[i] - (0.3 * x + 0.1)).abs() <= 1e-11);
        }
    }

    #[test]
    fn second_difference_flags_convexity() {
        let concave = GridFunction::from_fn(
            vec![Axis::symmetric(2.0, 33)],
            RangeTag::Probability,
            Extension::Constant,
            |x| phi(1.0 - x[0] * x[0]),
        );
        let p = ProbitField::from_grid(&concave).unwrap();
        assert!(p.max_second_difference_1d() <= 1e-10);

        let convex = GridFunction::from_fn(
            vec![Axis::symmetric(2.0, 33)],
            RangeTag::Probability,
            Extension::Constant,
            |x| phi(x[0] * x[0] - 1.0),
        );
        let p = ProbitField::from_grid(&convex).unwrap();
        assert!(p.max_second_difference_1d() > 1e-3);
    }

    #[test]
    fn interior_indices_respect_margin() {
        let g = affine_grid(); // [-4, 4], spacing 1/8
        let inner = g.interior_indices(2.0);
        assert!(!inner.is_empty());
        for idx in &inner {
            let x = g.axes[0].coord(idx[0]);
            assert!(x >= -2.0 - 1e-9 && x <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn two_dimensional_row_major() {
        let g = GridFunction::from_fn(
            vec![Axis::new(0.0, 1.0, 2), Axis::new(0.0, 1.0, 3)],
            RangeTag::Real,
            Extension::Constant,
            |x| 10.0 * x[0] + x[1],
        );
        assert_eq!(g.values, vec![0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert!((g.eval(&[0.5, 1.5]) - 6.5).abs() <= 1e-14);
    }
}

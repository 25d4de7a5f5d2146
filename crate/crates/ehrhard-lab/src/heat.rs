//! Heat-semigroup evolutes `P_t f(x) = ∫ f(x + √t y) γ_n(dy)` computed
//! pointwise and on grids, the probit transform `F = Φ⁻¹ ∘ P_t f`, and
//! finite-difference residuals of the evolution equations
//! `∂_t P_t f = ½ Δ P_t f` and `∂_t F = ½ (ΔF − F |∇F|²)`.

use crate::error::{LabError, Result};
use crate::gaussian::{gamma_integral, QuadratureRule};
use crate::grid::{Extension, GridFunction, ProbitField, RangeTag};
use rayon::prelude::*;

/// Pointwise evolute of an arbitrary evaluable function.
///
/// `P₀f = f` exactly; for `t > 0` the Gaussian integral is discretized by
/// `rule`, tensorized over up to three dimensions.
pub fn heat_evolve_point(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    n: usize,
    t: f64,
    x: &[f64],
    rule: &QuadratureRule,
) -> Result<f64> {
    if t < 0.0 {
        return Err(LabError::Domain(format!("heat_evolve_point: t = {t} < 0")));
    }
    assert_eq!(x.len(), n);
    if t == 0.0 {
        return Ok(f(x));
    }
    let s = t.sqrt();
    let shifted = |y: &[f64]| -> f64 {
        let mut z = [0.0f64; 3];
        for k in 0..n {
            z[k] = x[k] + s * y[k];
        }
        f(&z[..n])
    };
    gamma_integral(&shifted, n, rule)
}

/// Grid evolute: every grid value is the pointwise evolute, with the grid's
/// boundary-extension policy supplying off-grid values.
pub fn heat_evolve_grid(f: &GridFunction, t: f64, rule: &QuadratureRule) -> Result<GridFunction> {
    if t < 0.0 {
        return Err(LabError::Domain(format!("heat_evolve_grid: t = {t} < 0")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let n = f.dim();
    let coords = f.coords();
    let eval = |x: &[f64]| f.eval(x);
    let values: Vec<f64> = coords
        .par_iter()
        .map(|x| {
            let v = heat_evolve_point(&eval, n, t, x, rule).expect("t >= 0 checked");
            if f.range == RangeTag::Probability {
                v.clamp(crate::grid::PROB_CLAMP, 1.0 - crate::grid::PROB_CLAMP)
            } else {
                v
            }
        })
        .collect();
    Ok(GridFunction {
        axes: f.axes.clone(),
        values,
        range: f.range,
        extension: f.extension,
    })
}

/// `F = Φ⁻¹ ∘ f` on the grid.
pub fn probit_transform(f: &GridFunction) -> Result<ProbitField> {
    ProbitField::from_grid(f)
}

/// Residual report for a finite-difference PDE check.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub max_abs: f64,
}

impl ResidualReport {
    fn from_parts(points: Vec<Vec<f64>>, residuals: Vec<f64>) -> Self {
        let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        ResidualReport {
            points,
            residuals,
            max_abs,
        }
    }
}

/// Residual of `∂_t P_t f − ½ Δ P_t f` at the given sample points, with
/// central differences of step `dt` in time and `h` in space. All evolutes
/// are quadrature-based; `f` may be analytic or a grid evaluator.
pub fn heat_pde_residual_fn(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    n: usize,
    t: f64,
    dt: f64,
    h: f64,
    points: &[Vec<f64>],
    rule: &QuadratureRule,
) -> Result<ResidualReport> {
    if t <= 0.0 || dt <= 0.0 || h <= 0.0 || dt >= t {
        return Err(LabError::Domain(
            "heat_pde_residual: need 0 < dt < t and h > 0".into(),
        ));
    }
    let residuals: Vec<f64> = points
        .par_iter()
        .map(|x| {
            let ev = |tt: f64, xx: &[f64]| heat_evolve_point(f, n, tt, xx, rule).unwrap();
            let u_p = ev(t + dt, x);
            let u_m = ev(t - dt, x);
            let u_0 = ev(t, x);
            let dudt = (u_p - u_m) / (2.0 * dt);
            let mut lap = 0.0;
            for k in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                lap += (ev(t, &xp) - 2.0 * u_0 + ev(t, &xm)) / (h * h);
            }
            dudt - 0.5 * lap
        })
        .collect();
    Ok(ResidualReport::from_parts(points.to_vec(), residuals))
}

/// Grid-backed variant of [`heat_pde_residual_fn`], evaluated on interior
/// grid points at distance `>= 4 √t` from the boundary.
pub fn heat_pde_residual(
    f: &GridFunction,
    t: f64,
    dt: f64,
    h: f64,
    rule: &QuadratureRule,
) -> Result<ResidualReport> {
    let margin = 4.0 * t.sqrt() + h;
    let pts: Vec<Vec<f64>> = f
        .interior_indices(margin)
        .iter()
        .map(|idx| {
            (0..f.dim())
                .map(|k| f.axes[k].coord(idx[k]))
                .collect::<Vec<_>>()
        })
        .collect();
    if pts.is_empty() {
        return Err(LabError::Config(
            "grid too small for the residual stencil and interior margin".into(),
        ));
    }
    let eval = |x: &[f64]| f.eval(x);
    heat_pde_residual_fn(&eval, f.dim(), t, dt, h, &pts, rule)
}

/// Residual of `∂_t F − ½ (ΔF − F |∇F|²)` from three probit fields at
/// times `t − dt`, `t`, `t + dt` sharing one grid geometry.
pub fn probit_pde_residual(
    f_minus: &ProbitField,
    f_mid: &ProbitField,
    f_plus: &ProbitField,
    dt: f64,
    interior_margin: f64,
) -> Result<ResidualReport> {
    if f_minus.axes != f_mid.axes || f_plus.axes != f_mid.axes {
        return Err(LabError::Config(
            "probit_pde_residual: fields must share grid geometry".into(),
        ));
    }
    let n = f_mid.dim();
    let helper = GridFunction {
        axes: f_mid.axes.clone(),
        values: f_mid.values.clone(),
        range: RangeTag::Real,
        extension: Extension::Constant,
    };
    let mut points = Vec::new();
    let mut residuals = Vec::new();
    for idx in helper.interior_indices(interior_margin) {
        if idx.iter().zip(&helper.axes).any(|(&i, a)| i == 0 || i + 1 >= a.count) {
            continue;
        }
        let center = f_mid.value_at(&idx).value();
        let mut lap = 0.0;
        let mut grad_sq = 0.0;
        let mut finite = center.is_finite();
        for k in 0..n {
            let sp = f_mid.axes[k].spacing;
            let mut up = idx.clone();
            let mut dn = idx.clone();
            up[k] += 1;
            dn[k] -= 1;
            let vp = f_mid.value_at(&up).value();
            let vm = f_mid.value_at(&dn).value();
            finite &= vp.is_finite() && vm.is_finite();
            lap += (vp - 2.0 * center + vm) / (sp * sp);
            let g = (vp - vm) / (2.0 * sp);
            grad_sq += g * g;
        }
        let fp = f_plus.value_at(&idx).value();
        let fm = f_minus.value_at(&idx).value();
        finite &= fp.is_finite() && fm.is_finite();
        if !finite {
            return Err(LabError::Domain(
                "probit_pde_residual: non-finite probit value on interior".into(),
            ));
        }
        let dfdt = (fp - fm) / (2.0 * dt);
        residuals.push(dfdt - 0.5 * (lap - center * grad_sq));
        points.push(
            (0..n)
                .map(|k| f_mid.axes[k].coord(idx[k]))
                .collect::<Vec<_>>(),
        );
    }
    if points.is_empty() {
        return Err(LabError::Config(
            "probit_pde_residual: no interior points left".into(),
        ));
    }
    Ok(ResidualReport::from_parts(points, residuals))
}

/// Result of the at-infinity tail check: boundary-shell samples stand in
/// for the `limsup` at infinity.
#[derive(Debug, Clone)]
pub struct TailReport {
    /// Per-`f_i`: measured boundary-shell max and the bound `Φ(a_i)`.
    pub f_shell_max: Vec<f64>,
    pub f_bounds: Vec<f64>,
    pub f_ok: Vec<bool>,
    /// Measured min of `h` over its grid and the bound `Φ(Σ α_i a_i)`.
    pub h_min: f64,
    pub h_bound: f64,
    pub h_ok: bool,
    pub all_ok: bool,
}

/// Checks `limsup_{|x|→∞} f_i ≤ Φ(a_i)` (via the boundary shell) and
/// `h ≥ Φ(Σ α_i a_i)` (everywhere on `h`'s grid).
pub fn tail_condition_check(
    f_list: &[GridFunction],
    h: &GridFunction,
    a_list: &[f64],
    alphas: &[f64],
) -> Result<TailReport> {
    if f_list.len() != a_list.len() || f_list.len() != alphas.len() {
        return Err(LabError::Config(
            "tail_condition_check: lengths of f_list, a_list, alphas must agree".into(),
        ));
    }
    let mut f_shell_max = Vec::new();
    let mut f_bounds = Vec::new();
    let mut f_ok = Vec::new();
    for (f, &a) in f_list.iter().zip(a_list) {
        let mut shell_max = f64::NEG_INFINITY;
        let n = f.dim();
        let total = f.len();
        let mut idx = vec![0usize; n];
        for flat in 0..total {
            let on_shell = idx
                .iter()
                .zip(&f.axes)
                .any(|(&i, ax)| i == 0 || i + 1 == ax.count);
            if on_shell {
                shell_max = shell_max.max(f.values[flat]);
            }
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < f.axes[k].count {
                    break;
                }
                idx[k] = 0;
            }
        }
        let bound = crate::gaussian::phi(a);
        f_shell_max.push(shell_max);
        f_bounds.push(bound);
        f_ok.push(shell_max <= bound + 1e-12);
    }
    let weighted: f64 = alphas.iter().zip(a_list).map(|(&al, &a)| al * a).sum();
    let h_bound = crate::gaussian::phi(weighted);
    let h_min = h.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let h_ok = h_min >= h_bound - 1e-12;
    let all_ok = h_ok && f_ok.iter().all(|&b| b);
    Ok(TailReport {
        f_shell_max,
        f_bounds,
        f_ok,
        h_min,
        h_bound,
        h_ok,
        all_ok,
    })
}

/// Closed-form evolute of a probit-affine function
/// `f(x) = Φ(⟨u, x⟩ + c)`:  `P_t f(x) = Φ((⟨u, x⟩ + c) / √(1 + t|u|²))`.
pub fn probit_affine_evolute(u: &[f64], c: f64, t: f64, x: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(x).map(|(&a, &b)| a * b).sum();
    let r2: f64 = u.iter().map(|&a| a * a).sum();
    crate::gaussian::phi((dot + c) / (1.0 + t * r2).sqrt())
}

/// Probit value of the same closed form.
pub fn probit_affine_evolute_probit(u: &[f64], c: f64, t: f64, x: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(x).map(|(&a, &b)| a * b).sum();
    let r2: f64 = u.iter().map(|&a| a * a).sum();
    (dot + c) / (1.0 + t * r2).sqrt()
}

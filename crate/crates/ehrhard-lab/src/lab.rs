//! The functional laboratory: probit-scale hypothesis margins, semigroup
//! preservation of the functional inequality
//! `Φ⁻¹∘P_th(Σα_ix_i) ≥ Σα_iΦ⁻¹∘P_tf_i(x_i)`,
//! counterexample instances for infeasible coefficients, smooth
//! probit-concave approximants of convex regions, and epigraph lifts.

use crate::alpha::{check_alpha, AlphaSpec};
use crate::error::{LabError, Result};
use crate::field::{Bump, ScalarField};
use crate::gaussian::{phi, ExtReal, QuadratureRule};
use crate::grid::{Extension, GridFunction, ProbitField, RangeTag, PROB_CLAMP};
use crate::regions::RegionSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Where the product-space samples `x = (x_1..x_m)` come from. Grid-backed
/// fields contribute their own (strided) axis nodes; analytic fields get a
/// uniform net on `[−half_width, half_width]^n`. If the full tensor
/// product exceeds `max_tuples`, a seeded random subset of `random_tuples`
/// tuples is drawn instead.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub stride: usize,
    pub points_per_axis: usize,
    pub half_width: f64,
    pub max_tuples: usize,
    pub random_tuples: usize,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            stride: 4,
            points_per_axis: 33,
            half_width: 4.0,
            max_tuples: 20_000,
            random_tuples: 4_000,
            seed: crate::DEFAULT_SEED,
        }
    }
}

impl SamplingPlan {
    /// Per-field candidate points for one factor.
    fn factor_points(&self, field: &ScalarField) -> Vec<Vec<f64>> {
        match field {
            ScalarField::Grid(g) => {
                let per_axis: Vec<Vec<f64>> = g
                    .axes
                    .iter()
                    .map(|ax| {
                        (0..ax.count)
                            .step_by(self.stride.max(1))
                            .map(|i| ax.coord(i))
                            .collect()
                    })
                    .collect();
                tensor(&per_axis)
            }
            _ => {
                let n = field.dim();
                let pts: Vec<f64> = (0..self.points_per_axis)
                    .map(|i| {
                        -self.half_width
                            + 2.0 * self.half_width * i as f64
                                / (self.points_per_axis - 1) as f64
                    })
                    .collect();
                let per_axis: Vec<Vec<f64>> = (0..n).map(|_| pts.clone()).collect();
                tensor(&per_axis)
            }
        }
    }

    /// Tuples over the product space, flattened as `m` blocks of `n`
    /// coordinates.
    pub fn tuples(&self, fields: &[ScalarField]) -> Vec<Vec<f64>> {
        let factors: Vec<Vec<Vec<f64>>> =
            fields.iter().map(|f| self.factor_points(f)).collect();
        let total: f64 = factors.iter().map(|f| f.len() as f64).product();
        if total <= self.max_tuples as f64 {
            let mut out = Vec::with_capacity(total as usize);
            let mut idx = vec![0usize; factors.len()];
            loop {
                let mut tuple = Vec::new();
                for (f, &i) in factors.iter().zip(&idx) {
                    tuple.extend_from_slice(&f[i]);
                }
                out.push(tuple);
                let mut carry = true;
                for (slot, f) in idx.iter_mut().zip(&factors).rev() {
                    *slot += 1;
                    if *slot < f.len() {
                        carry = false;
                        break;
                    }
                    *slot = 0;
                }
                if carry {
                    break;
                }
            }
            out
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            (0..self.random_tuples)
                .map(|_| {
                    let mut tuple = Vec::new();
                    for f in &factors {
                        let i = rng.gen_range(0..f.len());
                        tuple.extend_from_slice(&f[i]);
                    }
                    tuple
                })
                .collect()
        }
    }
}

fn tensor(per_axis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in per_axis {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for base in &out {
            for &v in axis {
                let mut p = base.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// One hypothesis configuration: weights, target field `h`, factor fields
/// `f_1..f_m`, and the product-space sampling plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisInstance {
    pub spec: AlphaSpec,
    pub h: ScalarField,
    pub f_list: Vec<ScalarField>,
    pub dim: usize,
    pub plan: SamplingPlan,
}

impl HypothesisInstance {
    pub fn validate(&self) -> Result<()> {
        if self.f_list.len() != self.spec.m() {
            return Err(LabError::Config(
                "need one factor field per coefficient".into(),
            ));
        }
        if self.h.dim() != self.dim || self.f_list.iter().any(|f| f.dim() != self.dim) {
            return Err(LabError::Config("field dimensions disagree".into()));
        }
        for &i in &self.spec.i_conv {
            if !probit_concave(&self.f_list[i])? {
                return Err(LabError::Validation(format!(
                    "f_{} must have a concave probit field (index is in the convex set)",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Concavity of `Φ⁻¹∘f`: structural for the analytic variants, a discrete
/// second-difference scan for 1D grids.
fn probit_concave(f: &ScalarField) -> Result<bool> {
    Ok(match f {
        ScalarField::Constant { .. }
        | ScalarField::ProbitAffine { .. }
        | ScalarField::ProbitConcave { .. }
        | ScalarField::ProbitQuad { .. } => true,
        ScalarField::ProbitQuadFlipped { .. } => false,
        ScalarField::Grid(g) => {
            if g.dim() != 1 {
                return Err(LabError::Unsupported(
                    "discrete concavity test implemented for 1D grids".into(),
                ));
            }
            ProbitField::from_grid(g)?.max_second_difference_1d() <= 1e-8
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginReport {
    pub margin: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

fn combination(spec: &AlphaSpec, dim: usize, tuple: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; dim];
    for (i, &a) in spec.alpha.iter().enumerate() {
        for (k, yk) in y.iter_mut().enumerate() {
            *yk += a * tuple[i * dim + k];
        }
    }
    y
}

/// Minimum of `C(0, x) = Φ⁻¹h(Σα_ix_i) − Σα_iΦ⁻¹f_i(x_i)` over the
/// sampled product space. Combinations landing outside a grid-backed `h`
/// are skipped and counted.
pub fn hypothesis_margin(inst: &HypothesisInstance) -> Result<MarginReport> {
    inst.validate()?;
    let tuples = inst.plan.tuples(&inst.f_list);
    let mut margin = f64::INFINITY;
    let mut skipped = 0usize;
    let mut evaluated = 0usize;
    for tuple in &tuples {
        let y = combination(&inst.spec, inst.dim, tuple);
        if !inst.h.covers(&y) {
            skipped += 1;
            continue;
        }
        let mut rhs = ExtReal::new(0.0);
        for (i, f) in inst.f_list.iter().enumerate() {
            let xi = &tuple[i * inst.dim..(i + 1) * inst.dim];
            rhs = rhs.add(f.probit_at(xi).scale(inst.spec.alpha[i]));
        }
        let c = inst.h.probit_at(&y).sub(rhs).value();
        margin = margin.min(c);
        evaluated += 1;
    }
    Ok(MarginReport {
        margin,
        evaluated,
        skipped,
    })
}

/// One deficit evaluation record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeficitRecord {
    pub t: f64,
    pub x: Vec<f64>,
    pub c: f64,
    /// `Σα_ix_i` fell outside a grid-backed `h`; excluded from minima.
    pub out_of_grid: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeficitField {
    pub records: Vec<DeficitRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeficitSummary {
    pub min_c_per_t: Vec<(f64, f64)>,
    pub min_c: f64,
    pub skipped: usize,
    pub field: DeficitField,
}

/// Evaluates `C(t, x)` over the sampled product space for each `t`.
/// Requires the premise to hold on samples (margin ≥ −1e-9).
pub fn preservation_check(inst: &HypothesisInstance, t_list: &[f64]) -> Result<DeficitSummary> {
    let margin = hypothesis_margin(inst)?;
    if !(margin.margin >= -1e-9) {
        return Err(LabError::Precondition(format!(
            "hypothesis margin {} < -1e-9; the premise fails at t = 0",
            margin.margin
        )));
    }
    if t_list.is_empty() {
        return Err(LabError::Config("t_list must be nonempty".into()));
    }
    if t_list.iter().any(|&t| !(t >= 0.0)) {
        return Err(LabError::Config("evolution times must be >= 0".into()));
    }
    let rule = QuadratureRule::gauss_hermite(64);
    let tuples = inst.plan.tuples(&inst.f_list);
    let mut records = Vec::with_capacity(tuples.len() * t_list.len());
    let mut min_c_per_t = Vec::with_capacity(t_list.len());
    let mut skipped = 0usize;
    for &t in t_list {
        let per_tuple: Vec<Result<DeficitRecord>> = tuples
            .par_iter()
            .map(|tuple| {
                let y = combination(&inst.spec, inst.dim, tuple);
                if !inst.h.covers(&y) {
                    return Ok(DeficitRecord {
                        t,
                        x: tuple.clone(),
                        c: f64::NAN,
                        out_of_grid: true,
                    });
                }
                let mut rhs = ExtReal::new(0.0);
                for (i, f) in inst.f_list.iter().enumerate() {
                    let xi = &tuple[i * inst.dim..(i + 1) * inst.dim];
                    rhs = rhs.add(f.evolve_probit(t, xi, &rule)?.scale(inst.spec.alpha[i]));
                }
                let c = inst.h.evolve_probit(t, &y, &rule)?.sub(rhs).value();
                Ok(DeficitRecord {
                    t,
                    x: tuple.clone(),
                    c,
                    out_of_grid: false,
                })
            })
            .collect();
        let mut min_t = f64::INFINITY;
        for rec in per_tuple {
            let rec = rec?;
            if rec.out_of_grid {
                skipped += 1;
            } else {
                min_t = min_t.min(rec.c);
            }
            records.push(rec);
        }
        min_c_per_t.push((t, min_t));
    }
    let min_c = min_c_per_t
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::INFINITY, f64::min);
    Ok(DeficitSummary {
        min_c_per_t,
        min_c,
        skipped,
        field: DeficitField { records },
    })
}

/// Which infeasibility branch a counterexample exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleBranch {
    /// `Σα_i < 1`: every slot carries `f = Φ(1 − |ax|²)`.
    SumBelowOne,
    /// `α_j − Σ_{i≠j}α_i > 1` with `j` sphere-constrained: slot `j` and
    /// the target carry `g = 1 − f`.
    DominantIndex(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counterexample {
    pub instance: HypothesisInstance,
    pub a: f64,
    /// `∫ f dγ`, verified `< 0.45`.
    pub f_mass: f64,
    pub branch: CounterexampleBranch,
}

fn quad_mass(a: f64, rule: &QuadratureRule) -> f64 {
    let f = ScalarField::ProbitQuad { a, dim: 1 };
    f.evolve_point(1.0, &[0.0], rule).expect("t = 1 is valid")
}

/// Builds a premise-respecting instance that violates the conclusion at
/// `t = 1, x = 0` for an infeasible coefficient spec. With `a_param =
/// None` the curvature is auto-escalated over {1, 2, 4, 8} until
/// `∫f dγ < 0.45`; an explicit too-small value is a validation error.
pub fn build_counterexample(spec: &AlphaSpec, a_param: Option<f64>) -> Result<Counterexample> {
    let diag = check_alpha(spec);
    if diag.feasible {
        return Err(LabError::Precondition(
            "spec is feasible; no counterexample exists".into(),
        ));
    }
    let sum = spec.sum();
    let dominant = (0..spec.m())
        .find(|&j| !spec.i_conv.contains(&j) && spec.alpha[j] - (sum - spec.alpha[j]) > 1.0);
    let branch = match dominant {
        Some(j) => CounterexampleBranch::DominantIndex(j),
        None if sum < 1.0 => CounterexampleBranch::SumBelowOne,
        None => {
            return Err(LabError::Unsupported(
                "infeasibility driven only by convex-index clauses has no constructed branch"
                    .into(),
            ))
        }
    };
    let rule = QuadratureRule::gauss_hermite(64);
    let (a, f_mass) = match a_param {
        Some(a) => {
            if !(a > 0.0) {
                return Err(LabError::Config("curvature parameter must be > 0".into()));
            }
            let mass = quad_mass(a, &rule);
            if mass >= 0.45 {
                return Err(LabError::Validation(format!(
                    "a = {a} too small: ∫f dγ = {mass} is not below 0.45"
                )));
            }
            (a, mass)
        }
        None => {
            let mut found = None;
            for a in [1.0, 2.0, 4.0, 8.0] {
                let mass = quad_mass(a, &rule);
                if mass < 0.45 {
                    found = Some((a, mass));
                    break;
                }
            }
            found.ok_or_else(|| {
                LabError::Validation("auto-escalation failed to push ∫f dγ below 0.45".into())
            })?
        }
    };
    let f = ScalarField::ProbitQuad { a, dim: 1 };
    let g = ScalarField::ProbitQuadFlipped { a, dim: 1 };
    let (h, f_list) = match branch {
        CounterexampleBranch::SumBelowOne => {
            (f.clone(), vec![f.clone(); spec.m()])
        }
        CounterexampleBranch::DominantIndex(j) => {
            let mut fl = vec![f.clone(); spec.m()];
            fl[j] = g.clone();
            (g, fl)
        }
    };
    let instance = HypothesisInstance {
        spec: spec.clone(),
        h,
        f_list,
        dim: 1,
        plan: SamplingPlan::default(),
    };
    instance.validate()?;
    Ok(Counterexample {
        instance,
        a,
        f_mass,
        branch,
    })
}

/// `C(t, 0)` — the point where the constructed counterexamples violate.
pub fn violation_at_origin(inst: &HypothesisInstance, t: f64) -> Result<f64> {
    let rule = QuadratureRule::gauss_hermite(64);
    let origin = vec![0.0; inst.dim];
    let mut rhs = ExtReal::new(0.0);
    for (i, f) in inst.f_list.iter().enumerate() {
        rhs = rhs.add(f.evolve_probit(t, &origin, &rule)?.scale(inst.spec.alpha[i]));
    }
    Ok(inst.h.evolve_probit(t, &origin, &rule)?.sub(rhs).value())
}

fn bump_kernel(radius: f64, spacing: f64) -> Vec<f64> {
    let k = (radius / spacing).floor() as i64;
    if k == 0 {
        return vec![1.0];
    }
    let mut w: Vec<f64> = (-k..=k)
        .map(|j| {
            let s = j as f64 * spacing / radius;
            if s.abs() >= 1.0 {
                0.0
            } else {
                (-1.0 / (1.0 - s * s)).exp()
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// 1D convolution with linear extrapolation at the edges (preserves
/// discrete concavity because the edge slopes are the extreme ones).
fn convolve_extrapolate(values: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = values.len() as i64;
    let k = (kernel.len() as i64 - 1) / 2;
    let at = |i: i64| -> f64 {
        if i < 0 {
            values[0] + i as f64 * (values[1] - values[0])
        } else if i >= n {
            let last = values[n as usize - 1];
            last + (i - n + 1) as f64 * (last - values[n as usize - 2])
        } else {
            values[i as usize]
        }
    };
    (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, &w)| w * at(i + j as i64 - k))
                .sum()
        })
        .collect()
}

// ρ(x) of the (ε/3)-enlarged region, plus the largest center-to-face
// distance (used to size the probit slope)
struct Gauge {
    eval: Box<dyn Fn(&[f64]) -> f64>,
    reach: f64,
}

fn region_gauge(region: &RegionSet, enlarge: f64) -> Result<Gauge> {
    match region {
        RegionSet::Ball { center, radius } => {
            if !(*radius > 0.0) {
                return Err(LabError::DegenerateRegion("ball has empty interior".into()));
            }
            let r = radius + enlarge;
            let c = center.clone();
            Ok(Gauge {
                eval: Box::new(move |x| {
                    x.iter()
                        .zip(&c)
                        .map(|(xi, ci)| (xi - ci) * (xi - ci))
                        .sum::<f64>()
                        .sqrt()
                        / r
                }),
                reach: r,
            })
        }
        RegionSet::HalfSpace { normal, offset } => {
            let u = normal.clone();
            let x0: Vec<f64> = normal.iter().map(|ui| ui * (offset - 1.0)).collect();
            let denom = 1.0 + enlarge;
            Ok(Gauge {
                eval: Box::new(move |x| {
                    let d: f64 = u.iter().zip(x).zip(&x0).map(|((ui, xi), ci)| ui * (xi - ci)).sum();
                    (d / denom).max(0.0)
                }),
                reach: denom,
            })
        }
        RegionSet::BoxUnion { intervals } => {
            if intervals.len() != 1 {
                return Err(LabError::Precondition(
                    "approximant needs a convex region; box unions must be single intervals"
                        .into(),
                ));
            }
            let (lo, hi) = intervals[0];
            match (lo.is_infinite(), hi.is_infinite()) {
                (true, true) => Ok(Gauge {
                    eval: Box::new(|_| 0.0),
                    reach: 1.0,
                }),
                (true, false) => region_gauge(
                    &RegionSet::HalfSpace {
                        normal: vec![1.0],
                        offset: hi,
                    },
                    enlarge,
                ),
                (false, true) => region_gauge(
                    &RegionSet::HalfSpace {
                        normal: vec![-1.0],
                        offset: -lo,
                    },
                    enlarge,
                ),
                (false, false) => {
                    if !(hi > lo) {
                        return Err(LabError::DegenerateRegion(
                            "interval has empty interior".into(),
                        ));
                    }
                    let mid = 0.5 * (lo + hi);
                    let half = 0.5 * (hi - lo) + enlarge;
                    Ok(Gauge {
                        eval: Box::new(move |x| (x[0] - mid).abs() / half),
                        reach: half,
                    })
                }
            }
        }
        RegionSet::ConvexPolytope { a, b, dim } => {
            let center: Vec<f64> = match dim {
                1 => {
                    let (lo, hi) = region.interval_1d()?;
                    if !lo.is_finite() || !hi.is_finite() {
                        return region_gauge(
                            &RegionSet::BoxUnion {
                                intervals: vec![(lo, hi)],
                            },
                            enlarge,
                        );
                    }
                    vec![0.5 * (lo + hi)]
                }
                2 => {
                    let verts = region.polytope_vertices_2d()?;
                    let n = verts.len() as f64;
                    vec![
                        verts.iter().map(|v| v[0]).sum::<f64>() / n,
                        verts.iter().map(|v| v[1]).sum::<f64>() / n,
                    ]
                }
                _ => {
                    return Err(LabError::Unsupported(
                        "approximant gauge implemented for dimensions 1 and 2".into(),
                    ))
                }
            };
            let mut rows = Vec::new();
            let mut reach = 0.0f64;
            for (row, &bi) in a.iter().zip(b) {
                let nrm: f64 = row.iter().map(|r| r * r).sum::<f64>().sqrt();
                let slack = bi - row.iter().zip(&center).map(|(r, c)| r * c).sum::<f64>();
                if slack <= 0.0 {
                    return Err(LabError::DegenerateRegion(
                        "polytope centroid is not interior".into(),
                    ));
                }
                let denom = slack + enlarge * nrm;
                reach = reach.max(denom / nrm);
                rows.push((row.clone(), denom));
            }
            let c = center;
            Ok(Gauge {
                eval: Box::new(move |x| {
                    rows.iter()
                        .map(|(row, denom)| {
                            row.iter().zip(x).zip(&c).map(|((r, xi), ci)| r * (xi - ci)).sum::<f64>()
                                / denom
                        })
                        .fold(0.0f64, f64::max)
                }),
                reach,
            })
        }
    }
}

/// Smooth probability field that equals `Φ(b)` on the region, has probit
/// value ≤ `a` outside the ε-enlargement, and keeps `Φ⁻¹∘f` concave. The
/// probit field is `b + c(1 − max(ρ, 1))` for the gauge `ρ` of the
/// (ε/3)-enlargement, mollified by a compact bump of radius ε/6.
pub fn phi_concave_approximant(
    region: &RegionSet,
    eps: f64,
    a: f64,
    b: f64,
) -> Result<GridFunction> {
    if !(eps > 0.0) {
        return Err(LabError::Config("enlargement eps must be > 0".into()));
    }
    if !(b > a) {
        return Err(LabError::Config("need b > a".into()));
    }
    region.validate()?;
    let gauge = region_gauge(region, eps / 3.0)?;
    // the drop across the gauge gap between the ε-enlargement minus the
    // mollifier radius and the (ε/3)-enlargement must reach b − a
    let c = (b - a) * gauge.reach * 2.0 / eps;
    let dim = region.dim();
    let axes = match dim {
        1 => GridFunction::default_axis_1d(),
        2 => GridFunction::default_axes_2d(),
        _ => {
            return Err(LabError::Unsupported(
                "approximant grids implemented for dimensions 1 and 2".into(),
            ))
        }
    };
    let probit = |x: &[f64]| -> f64 {
        let rho = (gauge.eval)(x);
        b + c * (1.0 - rho.max(1.0))
    };
    let radius = eps / 6.0;
    let probits: Vec<f64> = if dim == 1 {
        let ax = axes[0];
        let raw: Vec<f64> = (0..ax.count).map(|i| probit(&[ax.coord(i)])).collect();
        let kernel = bump_kernel(radius, ax.spacing);
        convolve_extrapolate(&raw, &kernel)
    } else {
        // separable mollification: convolve rows then columns
        let (ax0, ax1) = (axes[0], axes[1]);
        let mut vals = vec![0.0; ax0.count * ax1.count];
        for i in 0..ax0.count {
            for j in 0..ax1.count {
                vals[i * ax1.count + j] = probit(&[ax0.coord(i), ax1.coord(j)]);
            }
        }
        let k1 = bump_kernel(radius, ax1.spacing);
        for i in 0..ax0.count {
            let row: Vec<f64> = vals[i * ax1.count..(i + 1) * ax1.count].to_vec();
            let s = convolve_extrapolate(&row, &k1);
            vals[i * ax1.count..(i + 1) * ax1.count].copy_from_slice(&s);
        }
        let k0 = bump_kernel(radius, ax0.spacing);
        for j in 0..ax1.count {
            let col: Vec<f64> = (0..ax0.count).map(|i| vals[i * ax1.count + j]).collect();
            let s = convolve_extrapolate(&col, &k0);
            for (i, v) in s.into_iter().enumerate() {
                vals[i * ax1.count + j] = v;
            }
        }
        vals
    };
    let values: Vec<f64> = probits
        .iter()
        .map(|&p| phi(p).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
        .collect();
    Ok(GridFunction {
        axes,
        values,
        range: RangeTag::Probability,
        extension: Extension::Constant,
    })
}

/// Sampled boundary profile of the hypograph
/// `{(u, y) : u ≤ Φ⁻¹f(x + √t·y)}` in dimension `n + 1`, together with its
/// Gaussian measure and the `P_tf(x)` reference it must match.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpigraphLift {
    /// Sample points in the `y` slab.
    pub profile_y: Vec<Vec<f64>>,
    /// Boundary height `Φ⁻¹f(x + √t·y)` at each sample.
    pub profile_u: Vec<f64>,
    pub measure: f64,
    pub reference: f64,
    pub mismatch: f64,
}

/// Builds the lift and cross-checks `γ_{n+1}(lift) = P_tf(x)` to 1e-4
/// using a slab quadrature independent of the Gauss-Hermite reference.
pub fn epigraph_lift(f: &ScalarField, t: f64, x: &[f64]) -> Result<EpigraphLift> {
    let n = f.dim();
    if n + 1 > 3 {
        return Err(LabError::Unsupported(
            "lift quadrature requires n + 1 <= 3".into(),
        ));
    }
    if x.len() != n {
        return Err(LabError::Config("base point dimension mismatch".into()));
    }
    if !(t >= 0.0) {
        return Err(LabError::Domain("negative evolution time".into()));
    }
    let st = t.sqrt();
    let shifted = |y: &[f64]| -> Vec<f64> {
        x.iter().zip(y).map(|(xi, yi)| xi + st * yi).collect()
    };
    let rule = QuadratureRule::composite_legendre(240, 8.0);
    let measure = if n == 1 {
        rule.integrate(|y| f.eval(&shifted(&[y])))
    } else {
        let mut total = 0.0;
        for (&y0, &w0) in rule.nodes.iter().zip(&rule.weights) {
            let mut inner = 0.0;
            for (&y1, &w1) in rule.nodes.iter().zip(&rule.weights) {
                inner += w1 * f.eval(&shifted(&[y0, y1]));
            }
            total += w0 * inner;
        }
        total
    };
    let gh = QuadratureRule::gauss_hermite(64);
    let reference = f.evolve_point(t, x, &gh)?;
    let mismatch = (measure - reference).abs();
    if mismatch > 1e-4 {
        return Err(LabError::Validation(format!(
            "lift measure {measure} disagrees with P_tf(x) = {reference} by {mismatch}"
        )));
    }
    // boundary profile on a uniform net
    let net = 161usize;
    let line: Vec<f64> = (0..net)
        .map(|i| -6.0 + 12.0 * i as f64 / (net - 1) as f64)
        .collect();
    let (profile_y, profile_u): (Vec<Vec<f64>>, Vec<f64>) = if n == 1 {
        line.iter()
            .map(|&y| (vec![y], f.probit_at(&shifted(&[y])).value()))
            .unzip()
    } else {
        let mut ys = Vec::new();
        let mut us = Vec::new();
        for &y0 in &line {
            for &y1 in &line {
                ys.push(vec![y0, y1]);
                us.push(f.probit_at(&shifted(&[y0, y1])).value());
            }
        }
        (ys, us)
    };
    Ok(EpigraphLift {
        profile_y,
        profile_u,
        measure,
        reference,
        mismatch,
    })
}

/// Midpoint-convexity sampling of the lift: for random pairs inside the
/// hypograph, the midpoint must stay inside up to `tol`. Returns the
/// maximum violation found.
pub fn lift_midpoint_convexity(
    f: &ScalarField,
    t: f64,
    x: &[f64],
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    let n = f.dim();
    if n + 1 > 3 {
        return Err(LabError::Unsupported("lift requires n + 1 <= 3".into()));
    }
    let st = t.sqrt();
    let g = |y: &[f64]| -> f64 {
        let p: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| xi + st * yi).collect();
        f.probit_at(&p).value()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let draw = |rng: &mut ChaCha8Rng| -> (Vec<f64>, f64) {
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let depth = rng.gen_range(0.0..3.0);
        let u = g(&y) - depth;
        (y, u)
    };
    for _ in 0..pairs {
        let (y1, u1) = draw(&mut rng);
        let (y2, u2) = draw(&mut rng);
        if !u1.is_finite() || !u2.is_finite() {
            continue;
        }
        let ym: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| 0.5 * (a + b)).collect();
        let violation = 0.5 * (u1 + u2) - g(&ym);
        worst = worst.max(violation);
    }
    Ok(worst)
}

/// Premise-scaling check for the counterexample probit field `F`: with
/// `F(0) > 0` and `F` concave, `F(t·x) ≥ t·F(x)` for `t ∈ [0, 1]`.
pub fn premise_scaling_gap(f: &ScalarField, t: f64, x: &[f64]) -> f64 {
    let tx: Vec<f64> = x.iter().map(|xi| t * xi).collect();
    f.probit_at(&tx).value() - t * f.probit_at(x).value()
}

/// Deterministic generator of feasible smooth instances: factor fields
/// `F_i(x) = κx + c_i − Σ w√(1 + (x − ξ)²)` lie below their affine
/// majorants `κx + c_i`, so `h` probit-affine with offset `Σα_ic_i`
/// satisfies the premise exactly.
pub fn random_feasible_instance(rng: &mut ChaCha8Rng) -> HypothesisInstance {
    let spec = loop {
        let m = rng.gen_range(1..=3usize);
        let alpha: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.5)).collect();
        let i_conv: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.3)).collect();
        let s = AlphaSpec::new(alpha, i_conv).unwrap();
        if check_alpha(&s).feasible {
            break s;
        }
    };
    let kappa = rng.gen_range(0.3..0.8);
    let mut offsets = Vec::new();
    let f_list: Vec<ScalarField> = (0..spec.m())
        .map(|_| {
            let c = rng.gen_range(-1.0..1.0);
            offsets.push(c);
            let bumps: Vec<Bump> = (0..rng.gen_range(0..3usize))
                .map(|_| Bump {
                    weight: rng.gen_range(0.05..0.3),
                    center: rng.gen_range(-2.0..2.0),
                })
                .collect();
            ScalarField::ProbitConcave {
                slope: kappa,
                offset: c,
                bumps,
            }
        })
        .collect();
    let h_offset: f64 = spec
        .alpha
        .iter()
        .zip(&offsets)
        .map(|(a, c)| a * c)
        .sum::<f64>()
        + rng.gen_range(0.0..0.5);
    HypothesisInstance {
        spec,
        h: ScalarField::ProbitAffine {
            slope: vec![kappa],
            offset: h_offset,
        },
        f_list,
        dim: 1,
        plan: SamplingPlan::default(),
    }
}

/// Deterministic generator of infeasible specs kept away from the
/// feasibility boundary, so the constructed violation at `t = 1, x = 0`
/// is clearly negative.
pub fn random_infeasible_spec(rng: &mut ChaCha8Rng) -> AlphaSpec {
    if rng.gen_bool(0.5) {
        // Σα well below 1
        let m = rng.gen_range(1..=3usize);
        let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let target = rng.gen_range(0.3..0.9);
        let alpha: Vec<f64> = raw.iter().map(|a| a * target / s).collect();
        let i_conv: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.3)).collect();
        AlphaSpec::new(alpha, i_conv).unwrap()
    } else {
        // dominant sphere index with excess well above 1
        let m = rng.gen_range(2..=3usize);
        let mut alpha: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..0.8)).collect();
        let j = rng.gen_range(0..m);
        let rest: f64 = alpha.iter().sum::<f64>() - alpha[j];
        alpha[j] = rest + rng.gen_range(1.1..2.0);
        let i_conv: Vec<usize> = (0..m).filter(|&i| i != j && rng.gen_bool(0.3)).collect();
        AlphaSpec::new(alpha, i_conv).unwrap()
    }
}

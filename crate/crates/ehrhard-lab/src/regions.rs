//! Borel test regions, their dilated Minkowski combinations, Gaussian
//! measure evaluation (closed form, quadrature, Monte Carlo), and the
//! probit-scale deficit
//! `Φ⁻¹(γ(Σ α_i A_i)) − Σ α_i Φ⁻¹(γ(A_i))`
//! with the `∞ − ∞ = −∞` convention on the right-hand side.

use crate::error::{LabError, Result};
use crate::gaussian::{phi, phi_inv, ExtReal, QuadratureRule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A region in `ℝ^d`, `d ≤ 3`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSet {
    /// `{x : ⟨u, x⟩ ≤ b}` with `|u| = 1`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// Euclidean ball of radius `r ≥ 0` about `center`.
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : a_j · x ≤ b_j ∀j}`; rows of `a` must match `dim`.
    ConvexPolytope { a: Vec<Vec<f64>>, b: Vec<f64>, dim: usize },
    /// Finite union of disjoint closed intervals on the line.
    BoxUnion { intervals: Vec<(f64, f64)> },
}

/// Replaces a region by its closed ε-enlargement `A + εB_2`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpsilonEnlargement(pub f64);

/// How a Gaussian measure value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureValue {
    pub value: f64,
    pub method: MeasureMethod,
    /// 99% confidence half-width for Monte Carlo; zero otherwise.
    pub ci_half_width: f64,
}

impl RegionSet {
    pub fn dim(&self) -> usize {
        match self {
            RegionSet::HalfSpace { normal, .. } => normal.len(),
            RegionSet::Ball { center, .. } => center.len(),
            RegionSet::ConvexPolytope { dim, .. } => *dim,
            RegionSet::BoxUnion { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RegionSet::HalfSpace { normal, .. } => {
                let d = normal.len();
                if d == 0 || d > 3 {
                    return Err(LabError::Config("half-space dimension must be 1..=3".into()));
                }
                let n: f64 = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (n - 1.0).abs() > 1e-9 {
                    return Err(LabError::Config(format!(
                        "half-space normal must be unit length, got |u| = {n}"
                    )));
                }
            }
            RegionSet::Ball { center, radius } => {
                let d = center.len();
                if d == 0 || d > 3 {
                    return Err(LabError::Config("ball dimension must be 1..=3".into()));
                }
                if !(*radius >= 0.0) {
                    return Err(LabError::Config("ball radius must be >= 0".into()));
                }
            }
            RegionSet::ConvexPolytope { a, b, dim } => {
                if *dim == 0 || *dim > 3 {
                    return Err(LabError::Config("polytope dimension must be 1..=3".into()));
                }
                if a.len() != b.len() || a.is_empty() {
                    return Err(LabError::Config(
                        "polytope needs matching, nonempty constraint lists".into(),
                    ));
                }
                if a.iter().any(|row| row.len() != *dim) {
                    return Err(LabError::Config("polytope row width must equal dim".into()));
                }
                if a.iter().any(|row| row.iter().all(|&x| x == 0.0)) {
                    return Err(LabError::DegenerateRegion(
                        "polytope has an all-zero constraint row".into(),
                    ));
                }
            }
            RegionSet::BoxUnion { intervals } => {
                if intervals.is_empty() {
                    return Err(LabError::Config("box union must be nonempty".into()));
                }
                for &(a, b) in intervals {
                    if !(a <= b) {
                        return Err(LabError::Config(format!("bad interval [{a}, {b}]")));
                    }
                }
                let mut sorted = intervals.clone();
                sorted.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                for w in sorted.windows(2) {
                    if w[1].0 < w[0].1 {
                        return Err(LabError::Config(
                            "box union intervals must be disjoint".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            RegionSet::HalfSpace { normal, offset } => {
                normal.iter().zip(x).map(|(u, xi)| u * xi).sum::<f64>() <= *offset
            }
            RegionSet::Ball { center, radius } => {
                center
                    .iter()
                    .zip(x)
                    .map(|(c, xi)| (xi - c) * (xi - c))
                    .sum::<f64>()
                    .sqrt()
                    <= *radius
            }
            RegionSet::ConvexPolytope { a, b, .. } => a
                .iter()
                .zip(b)
                .all(|(row, &bi)| row.iter().zip(x).map(|(r, xi)| r * xi).sum::<f64>() <= bi),
            RegionSet::BoxUnion { intervals } => {
                intervals.iter().any(|&(a, b)| a <= x[0] && x[0] <= b)
            }
        }
    }

    /// Support function `h_A(u) = sup_{x∈A} ⟨u, x⟩` for the convex kinds
    /// (2D). Returns None for box unions and infinite directions.
    fn support_2d(&self, u: [f64; 2]) -> Option<f64> {
        match self {
            RegionSet::HalfSpace { normal, offset } => {
                // finite only along the normal itself
                let dot = normal[0] * u[0] + normal[1] * u[1];
                let cross = normal[0] * u[1] - normal[1] * u[0];
                if cross.abs() < 1e-12 && dot > 0.0 {
                    Some(offset * dot)
                } else {
                    None
                }
            }
            RegionSet::Ball { center, radius } => {
                Some(center[0] * u[0] + center[1] * u[1] + radius * (u[0].hypot(u[1])))
            }
            RegionSet::ConvexPolytope { .. } => {
                let verts = self.polytope_vertices_2d().ok()?;
                verts
                    .iter()
                    .map(|v| v[0] * u[0] + v[1] * u[1])
                    .fold(None, |acc: Option<f64>, s| {
                        Some(acc.map_or(s, |a| a.max(s)))
                    })
            }
            RegionSet::BoxUnion { .. } => None,
        }
    }

    /// Vertex enumeration for bounded 2D polytopes via pairwise constraint
    /// intersection.
    pub(crate) fn polytope_vertices_2d(&self) -> Result<Vec<[f64; 2]>> {
        let (a, b) = match self {
            RegionSet::ConvexPolytope { a, b, dim: 2 } => (a, b),
            _ => return Err(LabError::Precondition("not a 2D polytope".into())),
        };
        let n = a.len();
        let mut verts = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let det = a[i][0] * a[j][1] - a[i][1] * a[j][0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (b[i] * a[j][1] - b[j] * a[i][1]) / det;
                let y = (a[i][0] * b[j] - a[j][0] * b[i]) / det;
                let feasible = a
                    .iter()
                    .zip(b)
                    .all(|(row, &bi)| row[0] * x + row[1] * y <= bi + 1e-9);
                if feasible {
                    verts.push([x, y]);
                }
            }
        }
        if verts.is_empty() {
            return Err(LabError::DegenerateRegion(
                "2D polytope has no vertices (empty or unbounded)".into(),
            ));
        }
        Ok(verts)
    }

    /// 1D polytopes reduce to an interval (possibly a half-line).
    pub(crate) fn interval_1d(&self) -> Result<(f64, f64)> {
        match self {
            RegionSet::HalfSpace { normal, offset } if normal.len() == 1 => {
                if normal[0] > 0.0 {
                    Ok((f64::NEG_INFINITY, offset / normal[0]))
                } else {
                    Ok((offset / normal[0], f64::INFINITY))
                }
            }
            RegionSet::Ball { center, radius } if center.len() == 1 => {
                Ok((center[0] - radius, center[0] + radius))
            }
            RegionSet::ConvexPolytope { a, b, dim: 1 } => {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for (row, &bi) in a.iter().zip(b) {
                    if row[0] > 0.0 {
                        hi = hi.min(bi / row[0]);
                    } else {
                        lo = lo.max(bi / row[0]);
                    }
                }
                if lo > hi {
                    return Err(LabError::DegenerateRegion("empty 1D polytope".into()));
                }
                Ok((lo, hi))
            }
            _ => Err(LabError::Precondition("region is not a 1D interval".into())),
        }
    }

    /// Minkowski ε-enlargement.
    pub fn enlarge(&self, eps: EpsilonEnlargement) -> Result<RegionSet> {
        let e = eps.0;
        if e < 0.0 {
            return Err(LabError::Config("enlargement radius must be >= 0".into()));
        }
        Ok(match self {
            RegionSet::HalfSpace { normal, offset } => RegionSet::HalfSpace {
                normal: normal.clone(),
                offset: offset + e,
            },
            RegionSet::Ball { center, radius } => RegionSet::Ball {
                center: center.clone(),
                radius: radius + e,
            },
            RegionSet::ConvexPolytope { a, b, dim } => {
                // each face slides outward by ε · |row|
                let b2: Vec<f64> = a
                    .iter()
                    .zip(b)
                    .map(|(row, &bi)| bi + e * row.iter().map(|r| r * r).sum::<f64>().sqrt())
                    .collect();
                RegionSet::ConvexPolytope {
                    a: a.clone(),
                    b: b2,
                    dim: *dim,
                }
            }
            RegionSet::BoxUnion { intervals } => {
                let mut enlarged: Vec<(f64, f64)> =
                    intervals.iter().map(|&(a, b)| (a - e, b + e)).collect();
                enlarged.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                // merge overlaps created by the enlargement
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for iv in enlarged {
                    match merged.last_mut() {
                        Some(last) if iv.0 <= last.1 => last.1 = last.1.max(iv.1),
                        _ => merged.push(iv),
                    }
                }
                RegionSet::BoxUnion { intervals: merged }
            }
        })
    }
}

/// Dilated Minkowski combination `Σ α_i A_i` for compatible region kinds.
///
/// Supported: 1D anything-that-is-an-interval; balls with balls (any
/// dimension); half-spaces with a shared normal; 2D convex bodies via
/// support-function addition sampled on 720 directions. Same-line box
/// unions combine exactly only when each has a single interval.
pub fn minkowski_combine(alphas: &[f64], regions: &[RegionSet]) -> Result<RegionSet> {
    if alphas.len() != regions.len() || regions.is_empty() {
        return Err(LabError::Config(
            "need matching, nonempty alpha and region lists".into(),
        ));
    }
    if alphas.iter().any(|&a| !(a > 0.0)) {
        return Err(LabError::Config("dilation weights must be positive".into()));
    }
    let d = regions[0].dim();
    if regions.iter().any(|r| r.dim() != d) {
        return Err(LabError::Config("regions must share a dimension".into()));
    }
    for r in regions {
        r.validate()?;
    }

    // 1D: unions distribute over the Minkowski sum, so the combination is
    // the merged union of all weighted interval sums
    if d == 1 {
        let lists: Vec<Vec<(f64, f64)>> = regions
            .iter()
            .map(|r| match r {
                RegionSet::BoxUnion { intervals } => Ok(intervals.clone()),
                other => other.interval_1d().map(|iv| vec![iv]),
            })
            .collect::<Result<_>>()?;
        let combos: usize = lists.iter().map(|l| l.len()).product();
        if combos > 1_000_000 {
            return Err(LabError::Resource(
                "too many interval combinations in the 1D Minkowski sum".into(),
            ));
        }
        let mut sums = Vec::with_capacity(combos);
        let mut idx = vec![0usize; lists.len()];
        'product: loop {
            let mut lo = 0.0f64;
            let mut hi = 0.0f64;
            for (k, (a, list)) in alphas.iter().zip(&lists).enumerate() {
                let (l, h) = list[idx[k]];
                lo += a * l;
                hi += a * h;
            }
            sums.push((lo, hi));
            let mut k = lists.len();
            while k > 0 {
                k -= 1;
                idx[k] += 1;
                if idx[k] < lists[k].len() {
                    continue 'product;
                }
                idx[k] = 0;
            }
            break;
        }
        sums.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in sums {
            if lo.is_nan() || hi.is_nan() {
                return Err(LabError::DegenerateRegion(
                    "indeterminate endpoint in the 1D combination".into(),
                ));
            }
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        if merged.len() == 1 {
            let (lo, hi) = merged[0];
            if lo.is_infinite() && hi.is_infinite() {
                return Ok(RegionSet::BoxUnion {
                    intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)],
                });
            }
            if lo.is_infinite() {
                return Ok(RegionSet::HalfSpace {
                    normal: vec![1.0],
                    offset: hi,
                });
            }
            if hi.is_infinite() {
                return Ok(RegionSet::HalfSpace {
                    normal: vec![-1.0],
                    offset: -lo,
                });
            }
        }
        return Ok(RegionSet::BoxUnion { intervals: merged });
    }

    // balls with balls
    if regions.iter().all(|r| matches!(r, RegionSet::Ball { .. })) {
        let mut center = vec![0.0; d];
        let mut radius = 0.0;
        for (a, r) in alphas.iter().zip(regions) {
            if let RegionSet::Ball { center: c, radius: rr } = r {
                for (ci, cj) in center.iter_mut().zip(c) {
                    *ci += a * cj;
                }
                radius += a * rr;
            }
        }
        return Ok(RegionSet::Ball { center, radius });
    }

    // half-spaces with a shared normal
    if regions
        .iter()
        .all(|r| matches!(r, RegionSet::HalfSpace { .. }))
    {
        let first = match &regions[0] {
            RegionSet::HalfSpace { normal, .. } => normal.clone(),
            _ => unreachable!(),
        };
        let shared = regions.iter().all(|r| match r {
            RegionSet::HalfSpace { normal, .. } => normal
                .iter()
                .zip(&first)
                .all(|(a, b)| (a - b).abs() <= 1e-12),
            _ => false,
        });
        if shared {
            let offset = alphas
                .iter()
                .zip(regions)
                .map(|(a, r)| match r {
                    RegionSet::HalfSpace { offset, .. } => a * offset,
                    _ => unreachable!(),
                })
                .sum();
            return Ok(RegionSet::HalfSpace {
                normal: first,
                offset,
            });
        }
        return Err(LabError::UnsupportedCombination(
            "half-spaces with different normals do not combine to a supported kind".into(),
        ));
    }

    // 2D convex bodies: combine support functions on a direction fan and
    // return the circumscribed polytope
    if d == 2 {
        let dirs = 720usize;
        let mut a_rows = Vec::with_capacity(dirs);
        let mut b_vals = Vec::with_capacity(dirs);
        for t in 0..dirs {
            let th = std::f64::consts::TAU * t as f64 / dirs as f64;
            let u = [th.cos(), th.sin()];
            let mut h = 0.0;
            let mut finite = true;
            for (al, r) in alphas.iter().zip(regions) {
                match r.support_2d(u) {
                    Some(s) => h += al * s,
                    None => {
                        finite = false;
                        break;
                    }
                }
            }
            if finite {
                a_rows.push(vec![u[0], u[1]]);
                b_vals.push(h);
            }
        }
        if a_rows.len() < 3 {
            return Err(LabError::UnsupportedCombination(
                "2D combination is unbounded in too many directions".into(),
            ));
        }
        return Ok(RegionSet::ConvexPolytope {
            a: a_rows,
            b: b_vals,
            dim: 2,
        });
    }

    Err(LabError::UnsupportedCombination(format!(
        "no combination rule for this mix of kinds in dimension {d}"
    )))
}

fn chi_measure_ball(d: usize, r: f64) -> f64 {
    // centered ball: P(|Z| <= r) in dimension d
    match d {
        1 => 2.0 * phi(r) - 1.0,
        2 => 1.0 - (-0.5 * r * r).exp(),
        3 => 2.0 * phi(r) - 1.0 - (2.0 / std::f64::consts::PI).sqrt() * r * (-0.5 * r * r).exp(),
        _ => unreachable!(),
    }
}

/// Standard Gaussian measure of a region. Closed forms are used when
/// available (half-spaces, centered balls, boxes/intervals); 2D polytopes
/// go through per-slice quadrature; everything else falls back to seeded
/// Monte Carlo with a 99% confidence half-width.
pub fn gaussian_measure(region: &RegionSet, mc_samples: usize, seed: u64) -> Result<MeasureValue> {
    region.validate()?;
    let closed = |v: f64| MeasureValue {
        value: v.clamp(0.0, 1.0),
        method: MeasureMethod::ClosedForm,
        ci_half_width: 0.0,
    };
    match region {
        RegionSet::HalfSpace { offset, .. } => Ok(closed(phi(*offset))),
        RegionSet::Ball { center, radius } => {
            let d = center.len();
            if center.iter().all(|&c| c == 0.0) {
                return Ok(closed(chi_measure_ball(d, *radius)));
            }
            if d == 1 {
                return Ok(closed(phi(center[0] + radius) - phi(center[0] - radius)));
            }
            monte_carlo(region, mc_samples, seed)
        }
        RegionSet::BoxUnion { intervals } => {
            let mut v = 0.0;
            for &(a, b) in intervals {
                v += phi(b) - phi(a);
            }
            Ok(closed(v))
        }
        RegionSet::ConvexPolytope { dim, .. } => match dim {
            1 => {
                let (lo, hi) = region.interval_1d()?;
                Ok(closed(phi(hi) - phi(lo)))
            }
            2 => polytope_measure_2d(region).map(|v| MeasureValue {
                value: v,
                method: MeasureMethod::Quadrature,
                ci_half_width: 0.0,
            }),
            _ => monte_carlo(region, mc_samples, seed),
        },
    }
}

/// 2D polytope measure: for each `x₁` node, the constraints cut `x₂` to an
/// interval, whose Gaussian mass is a Φ difference; outer integral via a
/// composite Gauss-Legendre rule against the normal density on [−10, 10].
fn polytope_measure_2d(region: &RegionSet) -> Result<f64> {
    let (a, b) = match region {
        RegionSet::ConvexPolytope { a, b, dim: 2 } => (a, b),
        _ => return Err(LabError::Precondition("not a 2D polytope".into())),
    };
    let rule = QuadratureRule::composite_legendre(400, 10.0);
    let mut total = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut feasible = true;
        for (row, &bi) in a.iter().zip(b) {
            let rem = bi - row[0] * x;
            if row[1] > 0.0 {
                hi = hi.min(rem / row[1]);
            } else if row[1] < 0.0 {
                lo = lo.max(rem / row[1]);
            } else if rem < 0.0 {
                feasible = false;
                break;
            }
        }
        if feasible && lo < hi {
            total += w * (phi(hi) - phi(lo));
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

fn monte_carlo(region: &RegionSet, samples: usize, seed: u64) -> Result<MeasureValue> {
    if samples == 0 {
        return Err(LabError::Config("monte carlo sample count must be > 0".into()));
    }
    let d = region.dim();
    let chunks = rayon::current_num_threads().max(1);
    let per = samples.div_ceil(chunks);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((c as u64) << 32));
            let mut h = 0usize;
            let mut x = vec![0.0f64; d];
            for _ in 0..per {
                for xi in &mut x {
                    // Box-Muller on uniform draws keeps the stream simple
                    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    let u2: f64 = rng.gen_range(0.0..1.0);
                    *xi = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                }
                if region.contains(&x) {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let n = (per * chunks) as f64;
    let p = hits as f64 / n;
    let half = 2.576 * (p * (1.0 - p) / n).sqrt();
    Ok(MeasureValue {
        value: p,
        method: MeasureMethod::MonteCarlo,
        ci_half_width: half,
    })
}

/// Deficit report for one region family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeficitReport {
    pub lhs_measure: f64,
    pub rhs_terms: Vec<f64>,
    pub lhs_probit: ExtReal,
    pub rhs_probit: ExtReal,
    /// `Φ⁻¹(γ(Σα_iA_i)) − Σα_iΦ⁻¹(γ(A_i))`; `+∞` when the right side is
    /// `−∞` and the left is finite.
    pub deficit: f64,
    pub methods: Vec<MeasureMethod>,
}

/// Evaluates the probit-scale inequality for dilated combinations of
/// regions. Deficit `≥ 0` is the asserted direction.
pub fn ehrhard_deficit(
    alphas: &[f64],
    regions: &[RegionSet],
    mc_samples: usize,
    seed: u64,
) -> Result<DeficitReport> {
    let combo = minkowski_combine(alphas, regions)?;
    let lhs = gaussian_measure(&combo, mc_samples, seed)?;
    let mut methods = vec![lhs.method];
    let mut rhs_terms = Vec::with_capacity(regions.len());
    let mut rhs = ExtReal::new(0.0);
    for (i, (a, r)) in alphas.iter().zip(regions).enumerate() {
        let mv = gaussian_measure(r, mc_samples, seed.wrapping_add(i as u64 + 1))?;
        methods.push(mv.method);
        rhs_terms.push(mv.value);
        rhs = rhs.add(phi_inv(mv.value)?.scale(*a));
    }
    let lhs_probit = phi_inv(lhs.value)?;
    // +∞ − (+∞) would be ambiguous, but lhs = +∞ forces the inequality
    // to hold, so report +∞ there as well
    let deficit = if lhs_probit.value() == f64::INFINITY {
        f64::INFINITY
    } else {
        lhs_probit.sub(rhs).value()
    };
    Ok(DeficitReport {
        lhs_measure: lhs.value,
        rhs_terms,
        lhs_probit,
        rhs_probit: rhs,
        deficit,
        methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half_space_1d(b: f64) -> RegionSet {
        RegionSet::HalfSpace {
            normal: vec![1.0],
            offset: b,
        }
    }

    #[test]
    fn half_space_measure_is_phi() {
        for b in [-2.0, -0.5, 0.0, 1.3] {
            let m = gaussian_measure(&half_space_1d(b), 0, 0).unwrap();
            assert_eq!(m.method, MeasureMethod::ClosedForm);
            assert!((m.value - phi(b)).abs() < 1e-15);
        }
    }

    #[test]
    fn centered_ball_measures() {
        let m1 = gaussian_measure(
            &RegionSet::Ball { center: vec![0.0], radius: 1.0 },
            0,
            0,
        )
        .unwrap();
        assert!((m1.value - (2.0 * phi(1.0) - 1.0)).abs() < 1e-15);
        let m2 = gaussian_measure(
            &RegionSet::Ball { center: vec![0.0, 0.0], radius: 2.0 },
            0,
            0,
        )
        .unwrap();
        assert!((m2.value - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn box_union_and_enlargement() {
        let r = RegionSet::BoxUnion {
            intervals: vec![(-1.0, 0.0), (0.5, 1.0)],
        };
        r.validate().unwrap();
        let m = gaussian_measure(&r, 0, 0).unwrap();
        let expect = phi(0.0) - phi(-1.0) + phi(1.0) - phi(0.5);
        assert!((m.value - expect).abs() < 1e-15);
        // enlargement by 0.3 merges the gap of width 0.5
        let e = r.enlarge(EpsilonEnlargement(0.3)).unwrap();
        match e {
            RegionSet::BoxUnion { intervals } => {
                assert_eq!(intervals, vec![(-1.3, 1.3)]);
            }
            _ => panic!("expected box union"),
        }
    }

    #[test]
    fn polytope_2d_square_measure() {
        // unit square [-1,1]^2
        let sq = RegionSet::ConvexPolytope {
            a: vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            b: vec![1.0, 1.0, 1.0, 1.0],
            dim: 2,
        };
        let m = gaussian_measure(&sq, 0, 0).unwrap();
        let side = 2.0 * phi(1.0) - 1.0;
        assert!(
            (m.value - side * side).abs() < 1e-9,
            "got {} want {}",
            m.value,
            side * side
        );
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        // offset 2D ball has no closed form here
        let ball = RegionSet::Ball {
            center: vec![0.5, -0.25],
            radius: 1.0,
        };
        let mc = gaussian_measure(&ball, 400_000, crate::DEFAULT_SEED).unwrap();
        assert_eq!(mc.method, MeasureMethod::MonteCarlo);
        // cross-check against a fine polytope approximation of the disc
        let sides = 256;
        let a: Vec<Vec<f64>> = (0..sides)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / sides as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let b: Vec<f64> = a
            .iter()
            .map(|row| row[0] * 0.5 + row[1] * (-0.25) + 1.0)
            .collect();
        let poly = RegionSet::ConvexPolytope { a, b, dim: 2 };
        let quad = gaussian_measure(&poly, 0, 0).unwrap();
        assert!(
            (mc.value - quad.value).abs() <= mc.ci_half_width + 1e-3,
            "mc {} vs quad {} (ci {})",
            mc.value,
            quad.value,
            mc.ci_half_width
        );
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let ball = RegionSet::Ball {
            center: vec![0.5, -0.25, 0.0],
            radius: 1.5,
        };
        let a = gaussian_measure(&ball, 50_000, 42).unwrap();
        let b = gaussian_measure(&ball, 50_000, 42).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn combine_half_spaces_shared_normal() {
        let combo = minkowski_combine(
            &[0.5, 0.5],
            &[half_space_1d(1.0), half_space_1d(-1.0)],
        )
        .unwrap();
        match combo {
            RegionSet::BoxUnion { ref intervals } => {
                // 1D path returns interval arithmetic; half-lines stay half-lines
                assert_eq!(intervals.len(), 1);
            }
            RegionSet::HalfSpace { offset, .. } => assert_eq!(offset, 0.0),
            _ => panic!("unexpected kind {combo:?}"),
        }
    }

    #[test]
    fn half_space_equality_case_zero_deficit() {
        let regions = [half_space_1d(0.7), half_space_1d(-1.2)];
        let rep = ehrhard_deficit(&[0.6, 0.4], &regions, 0, 0).unwrap();
        assert!(rep.deficit.abs() <= 1e-12, "deficit {}", rep.deficit);
    }

    #[test]
    fn ball_combination_has_nonnegative_deficit() {
        let regions = [
            RegionSet::Ball { center: vec![0.0, 0.0], radius: 1.0 },
            RegionSet::Ball { center: vec![0.0, 0.0], radius: 2.0 },
        ];
        let rep = ehrhard_deficit(&[0.5, 0.5], &regions, 0, 0).unwrap();
        assert!(rep.deficit >= -1e-9, "deficit {}", rep.deficit);
    }

    #[test]
    fn interval_combination_has_nonnegative_deficit() {
        let regions = [
            RegionSet::BoxUnion { intervals: vec![(-0.5, 1.0)] },
            RegionSet::BoxUnion { intervals: vec![(-2.0, 0.25)] },
        ];
        let rep = ehrhard_deficit(&[0.7, 0.6], &regions, 0, 0).unwrap();
        assert!(rep.deficit >= -1e-9, "deficit {}", rep.deficit);
    }

    #[test]
    fn empty_interval_gives_neg_infinite_probit() {
        let regions = [
            RegionSet::BoxUnion { intervals: vec![(0.0, 0.0)] },
            RegionSet::BoxUnion { intervals: vec![(-1.0, 1.0)] },
        ];
        let rep = ehrhard_deficit(&[0.5, 0.5], &regions, 0, 0).unwrap();
        assert_eq!(rep.rhs_probit, ExtReal::NEG_INF);
        assert_eq!(rep.deficit, f64::INFINITY);
    }

    #[test]
    fn degenerate_polytope_is_rejected() {
        let p = RegionSet::ConvexPolytope {
            a: vec![vec![0.0, 0.0]],
            b: vec![1.0],
            dim: 2,
        };
        assert!(matches!(p.validate(), Err(LabError::DegenerateRegion(_))));
    }

    #[test]
    fn union_distributes_over_minkowski_sum_1d() {
        let a = RegionSet::BoxUnion {
            intervals: vec![(-1.0, 0.0), (2.0, 3.0)],
        };
        let b = RegionSet::BoxUnion {
            intervals: vec![(0.0, 1.0)],
        };
        let sum = minkowski_combine(&[1.0, 1.0], &[a.clone(), b]).unwrap();
        match &sum {
            RegionSet::BoxUnion { intervals } => {
                assert_eq!(intervals, &vec![(-1.0, 1.0), (2.0, 4.0)])
            }
            other => panic!("expected a box union, got {other:?}"),
        }
        // a union plus a half-line swallows everything to the right
        let hs = RegionSet::HalfSpace {
            normal: vec![1.0],
            offset: 0.5,
        };
        let sum = minkowski_combine(&[1.0, 1.0], &[a, hs]).unwrap();
        assert!(matches!(sum, RegionSet::HalfSpace { .. }));
    }

    #[test]
    fn unsupported_combination_is_reported() {
        let r = minkowski_combine(
            &[0.5, 0.5],
            &[
                RegionSet::HalfSpace { normal: vec![1.0, 0.0], offset: 0.0 },
                RegionSet::HalfSpace {
                    normal: vec![0.0, 1.0],
                    offset: 0.0,
                },
            ],
        );
        assert!(matches!(r, Err(LabError::UnsupportedCombination(_))));
    }

    #[test]
    fn enlargement_monotonicity() {
        let p = RegionSet::ConvexPolytope {
            a: vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            b: vec![0.5, 0.5, 0.5, 0.5],
            dim: 2,
        };
        let m0 = gaussian_measure(&p, 0, 0).unwrap().value;
        let m1 = gaussian_measure(&p.enlarge(EpsilonEnlargement(0.25)).unwrap(), 0, 0)
            .unwrap()
            .value;
        assert!(m1 > m0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_interval_deficit_nonnegative(
            a1 in -2.0f64..2.0, w1 in 0.1f64..3.0,
            a2 in -2.0f64..2.0, w2 in 0.1f64..3.0,
            t1 in 0.2f64..2.0, t2 in 0.2f64..2.0,
        ) {
            prop_assume!(t1 + t2 >= 1.0);
            let regions = [
                RegionSet::BoxUnion { intervals: vec![(a1, a1 + w1)] },
                RegionSet::BoxUnion { intervals: vec![(a2, a2 + w2)] },
            ];
            // intervals are convex, so any positive weights are admissible
            let rep = ehrhard_deficit(&[t1, t2], &regions, 0, 0).unwrap();
            prop_assert!(rep.deficit >= -1e-9, "deficit {}", rep.deficit);
        }

        #[test]
        fn prop_half_space_equality(
            b1 in -2.0f64..2.0, b2 in -2.0f64..2.0,
            lam in 0.05f64..0.95,
        ) {
            let rep = ehrhard_deficit(
                &[lam, 1.0 - lam],
                &[half_space_1d(b1), half_space_1d(b2)],
                0, 0,
            ).unwrap();
            prop_assert!(rep.deficit.abs() <= 1e-10, "deficit {}", rep.deficit);
        }

        #[test]
        fn prop_measure_monotone_in_radius(r in 0.1f64..3.0, dr in 0.01f64..1.0) {
            let small = RegionSet::Ball { center: vec![0.0, 0.0], radius: r };
            let big = RegionSet::Ball { center: vec![0.0, 0.0], radius: r + dr };
            let ms = gaussian_measure(&small, 0, 0).unwrap().value;
            let mb = gaussian_measure(&big, 0, 0).unwrap().value;
            prop_assert!(mb > ms);
        }
    }
}

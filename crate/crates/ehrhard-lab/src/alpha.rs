//! Coefficient condition on the weights `α`, the vector-lemma interval,
//! and construction of the elliptic certificate (vectors `v_i`, PSD matrix
//! `B = VᵀV`, slacks `λ_i`) that powers the maximum-principle argument.
//!
//! The feasibility condition is
//! `Σ α_i ≥ 1` and for every `j ∉ I_conv`, `α_j − Σ_{i≠j} α_i ≤ 1`;
//! equivalently `1` lies in the image interval of
//! `φ(v) = |Σ α_i v_i|` over `(𝕊)^k × (𝔹)^{m−k}`.

use crate::error::{LabError, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Positive coefficients `α_1..α_m` plus the convex-index subset.
/// Indices are zero-based internally.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaSpec {
    pub alpha: Vec<f64>,
    pub i_conv: BTreeSet<usize>,
}

impl AlphaSpec {
    pub fn new(alpha: Vec<f64>, i_conv: impl IntoIterator<Item = usize>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(LabError::Config("alpha list must be nonempty".into()));
        }
        if alpha.iter().any(|&a| !(a > 0.0)) {
            return Err(LabError::Config(
                "all alpha coefficients must be strictly positive".into(),
            ));
        }
        let i_conv: BTreeSet<usize> = i_conv.into_iter().collect();
        if i_conv.iter().any(|&i| i >= alpha.len()) {
            return Err(LabError::Config(
                "convex index outside 1..m (zero-based: 0..m-1)".into(),
            ));
        }
        Ok(AlphaSpec { alpha, i_conv })
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    pub fn sum(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Count of sphere-constrained (non-convex) indices.
    pub fn k_sphere(&self) -> usize {
        self.m() - self.i_conv.len()
    }
}

/// Outcome of the coefficient check, listing every violated clause.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaDiagnostic {
    pub feasible: bool,
    pub sum: f64,
    pub violations: Vec<String>,
}

/// Decides `Σ α_i ≥ 1` and `∀ j ∉ I_conv, α_j − Σ_{i≠j} α_i ≤ 1`.
pub fn check_alpha(spec: &AlphaSpec) -> AlphaDiagnostic {
    let sum = spec.sum();
    let mut violations = Vec::new();
    if sum < 1.0 {
        violations.push(format!("sum clause: Σα = {sum} < 1"));
    }
    for j in 0..spec.m() {
        if spec.i_conv.contains(&j) {
            continue;
        }
        let excess = spec.alpha[j] - (sum - spec.alpha[j]);
        if excess > 1.0 {
            violations.push(format!(
                "difference clause j={} (1-based): α_j − Σ_{{i≠j}}α_i = {excess} > 1",
                j + 1
            ));
        }
    }
    AlphaDiagnostic {
        feasible: violations.is_empty(),
        sum,
        violations,
    }
}

/// Image interval of `φ(v) = |Σ α_i v_i|` over `(𝕊^{d−1})^k × (𝔹^d)^{m−k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalJ {
    pub lo: f64,
    pub hi: f64,
}

impl IntervalJ {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// `J = [max({0} ∪ {α_j − Σ_{i≠j}α_i : j ≤ k}), Σα_i]`, with the first `k`
/// indices sphere-constrained.
pub fn phi_image_interval(alpha: &[f64], k: usize) -> IntervalJ {
    assert!(k <= alpha.len());
    let sum: f64 = alpha.iter().sum();
    let mut lo = 0.0f64;
    for j in 0..k {
        lo = lo.max(alpha[j] - (sum - alpha[j]));
    }
    IntervalJ { lo, hi: sum }
}

fn unit2(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

/// Exhaustive minimization of `|Σ α_i v_i|` over the discretized product of
/// spheres (`i < k`, `resolution` angles) and balls (`i ≥ k`).
///
/// Ball-constrained blocks are collapsed exactly: their Minkowski sum is a
/// centered ball of radius `Σ_{i≥k} α_i`, so the minimum given a sphere
/// partial sum `s` is `max(0, |s| − Σ_{i≥k} α_i)`. The last sphere vector
/// is also collapsed exactly: `|s + α v|` over unit `v` spans
/// `[||s| − α|, |s| + α]`, so its minimum given the partial sum of the
/// remaining spheres is `||s| − α|`. The first sphere vector is pinned by
/// rotation invariance, leaving `k − 2` gridded angles, and a short
/// derivative-free polish around the best grid configuration removes the
/// angular discretization bias.
pub fn phi_min_bruteforce(alpha: &[f64], k: usize, d: usize, resolution: usize) -> Result<f64> {
    let m = alpha.len();
    if k > m {
        return Err(LabError::Config("k exceeds m".into()));
    }
    if !(d == 2 || d == 3) {
        return Err(LabError::Config("brute force supports d = 2 or 3".into()));
    }
    if resolution < 360 {
        return Err(LabError::Config("resolution must be >= 360 angles".into()));
    }
    let ball_budget: f64 = alpha[k..].iter().sum();
    if k == 0 {
        // every vector can vanish
        return Ok(0.0);
    }
    if k == 1 {
        return Ok((alpha[0] - ball_budget).max(0.0));
    }
    if k == 2 {
        // pinned first vector plus the exactly collapsed last sphere
        return Ok(((alpha[0] - alpha[1]).abs() - ball_budget).max(0.0));
    }
    let free = k - 2;
    // d = 3 minima coincide with planar minima (any minimizing
    // configuration can be rotated into a plane), but enumerate a
    // polar-azimuthal product grid anyway so the oracle is honest about
    // the stated geometry.
    let combos = if d == 2 {
        (resolution as f64).powi(free as i32)
    } else {
        (resolution as f64 * (resolution / 2 + 1) as f64).powi(free as i32)
    };
    if combos > 2.5e9 {
        return Err(LabError::Resource(format!(
            "brute force would enumerate {combos:.1e} configurations"
        )));
    }

    let two_pi = std::f64::consts::TAU;
    let step = two_pi / resolution as f64;

    let eval_planar = |angles: &[f64]| -> f64 {
        let mut sx = alpha[0];
        let mut sy = 0.0;
        for (j, &th) in angles.iter().enumerate() {
            let u = unit2(th);
            sx += alpha[j + 1] * u[0];
            sy += alpha[j + 1] * u[1];
        }
        let r = (sx * sx + sy * sy).sqrt();
        ((r - alpha[k - 1]).abs() - ball_budget).max(0.0)
    };

    let (mut best_val, mut best_angles) = if d == 2 {
        // nested enumeration over free sphere angles, parallel on the
        // outermost one
        let per_outer: Vec<(f64, Vec<f64>)> = (0..resolution)
            .into_par_iter()
            .map(|i0| {
                let mut angles = vec![0.0f64; free];
                angles[0] = i0 as f64 * step;
                let mut best = (f64::INFINITY, angles.clone());
                let mut counters = vec![0usize; free.saturating_sub(1)];
                loop {
                    for (j, &c) in counters.iter().enumerate() {
                        angles[j + 1] = c as f64 * step;
                    }
                    let v = eval_planar(&angles);
                    if v < best.0 {
                        best = (v, angles.clone());
                    }
                    // odometer over the remaining free angles
                    let mut carry = true;
                    for c in counters.iter_mut().rev() {
                        *c += 1;
                        if *c < resolution {
                            carry = false;
                            break;
                        }
                        *c = 0;
                    }
                    if carry || counters.is_empty() {
                        break;
                    }
                }
                best
            })
            .collect();
        per_outer
            .into_iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap()
    } else {
        // d = 3: polar-azimuthal product per free vector; pin the first
        // sphere vector at the north pole, which keeps the grid modest.
        let polar_steps = resolution / 2 + 1;
        let eval_sphere = |angles: &[(f64, f64)]| -> f64 {
            let mut s = [0.0f64; 3];
            s[2] = alpha[0];
            for (j, &(th, ph)) in angles.iter().enumerate() {
                let a = alpha[j + 1];
                s[0] += a * ph.sin() * th.cos();
                s[1] += a * ph.sin() * th.sin();
                s[2] += a * ph.cos();
            }
            let norm = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
            ((norm - alpha[k - 1]).abs() - ball_budget).max(0.0)
        };
        let per_outer: Vec<(f64, Vec<f64>)> = (0..polar_steps)
            .into_par_iter()
            .map(|p0| {
                let mut best = (f64::INFINITY, vec![0.0; 2 * free]);
                let mut counters = vec![0usize; 2 * free];
                counters[1] = p0;
                let mut angles = vec![(0.0f64, 0.0f64); free];
                loop {
                    for j in 0..free {
                        angles[j] = (
                            counters[2 * j] as f64 * step,
                            counters[2 * j + 1] as f64 * std::f64::consts::PI
                                / (polar_steps - 1) as f64,
                        );
                    }
                    let v = eval_sphere(&angles);
                    if v < best.0 {
                        let flat: Vec<f64> = angles.iter().flat_map(|&(a, b)| [a, b]).collect();
                        best = (v, flat);
                    }
                    let mut carry = true;
                    for (slot, c) in counters.iter_mut().enumerate().rev() {
                        if slot == 1 {
                            continue; // pinned to the parallel outer loop
                        }
                        *c += 1;
                        let limit = if slot % 2 == 0 { resolution } else { polar_steps };
                        if *c < limit {
                            carry = false;
                            break;
                        }
                        *c = 0;
                    }
                    if carry {
                        break;
                    }
                }
                best
            })
            .collect();
        let best = per_outer
            .into_iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap();
        // project the 3D winner onto its plane for polishing: polish in
        // the planar parametrization, which can only improve the value
        let planar: Vec<f64> = (0..free).map(|j| best.1[2 * j + 1]).collect();
        let v_planar = eval_planar(&planar);
        if v_planar < best.0 {
            (v_planar, planar)
        } else {
            (best.0, planar)
        }
    };

    // cyclic golden-section polish on each free angle
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    for _sweep in 0..4 {
        for j in 0..free {
            let mut lo = best_angles[j] - 2.0 * step;
            let mut hi = best_angles[j] + 2.0 * step;
            let mut x1 = hi - gr * (hi - lo);
            let mut x2 = lo + gr * (hi - lo);
            let mut angles = best_angles.clone();
            let mut f1 = {
                angles[j] = x1;
                eval_planar(&angles)
            };
            let mut f2 = {
                angles[j] = x2;
                eval_planar(&angles)
            };
            for _ in 0..60 {
                if f1 < f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - gr * (hi - lo);
                    angles[j] = x1;
                    f1 = eval_planar(&angles);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + gr * (hi - lo);
                    angles[j] = x2;
                    f2 = eval_planar(&angles);
                }
            }
            let cand = 0.5 * (lo + hi);
            angles[j] = cand;
            let v = eval_planar(&angles);
            if v < best_val {
                best_val = v;
                best_angles = angles;
            }
        }
    }
    Ok(best_val)
}

/// Residual summary attached to a certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertResiduals {
    /// `| |Σ α_i v_i| − 1 |`
    pub sum_norm: f64,
    /// worst `| |v_i| − 1 |` over sphere indices
    pub unit_norm: f64,
    /// worst `max(0, |v_i| − 1)` over ball (convex) indices
    pub ball_excess: f64,
    pub lambda_min: f64,
    pub b_min_eigenvalue: f64,
}

/// Witness from the elliptic-decomposition argument: vectors `v_i ∈ ℝ^m`,
/// `B = VᵀV`, slacks `λ_i = α_i(1 − b_ii) ≥ 0` with `λ_i = 0` off the
/// convex set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipticCertificate {
    pub alpha: Vec<f64>,
    pub i_conv: Vec<usize>,
    pub vectors: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub tol: f64,
    pub residuals: CertResiduals,
    /// Numerical rank of `V`; the search runs in `ℝ^m` but solutions are
    /// planar by construction, so this is typically ≤ 2.
    pub effective_rank: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|&x| x * x).sum::<f64>().sqrt()
}

fn weighted_sum(alpha: &[f64], vs: &[Vec<f64>]) -> Vec<f64> {
    let m = vs[0].len();
    let mut s = vec![0.0; m];
    for (a, v) in alpha.iter().zip(vs) {
        for (si, vi) in s.iter_mut().zip(v) {
            *si += a * vi;
        }
    }
    s
}

fn planar(m: usize, x: f64, y: f64) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[0] = x;
    if m > 1 {
        v[1] = y;
    }
    v
}

fn build_matrices(
    spec: &AlphaSpec,
    vectors: &[Vec<f64>],
) -> (Vec<Vec<f64>>, Vec<f64>, CertResiduals, usize) {
    let m = spec.m();
    let mut b = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            b[i][j] = vectors[i]
                .iter()
                .zip(&vectors[j])
                .map(|(&a, &c)| a * c)
                .sum();
        }
    }
    let lambda: Vec<f64> = (0..m)
        .map(|i| {
            if spec.i_conv.contains(&i) {
                spec.alpha[i] * (1.0 - b[i][i])
            } else {
                0.0
            }
        })
        .collect();
    let s = weighted_sum(&spec.alpha, vectors);
    let sum_norm = (norm(&s) - 1.0).abs();
    let mut unit_norm = 0.0f64;
    let mut ball_excess = 0.0f64;
    for i in 0..m {
        let n = norm(&vectors[i]);
        if spec.i_conv.contains(&i) {
            ball_excess = ball_excess.max((n - 1.0).max(0.0));
        } else {
            unit_norm = unit_norm.max((n - 1.0).abs());
        }
    }
    let bm = DMatrix::from_fn(m, m, |i, j| b[i][j]);
    let eig = bm.clone().symmetric_eigen();
    let b_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let vm = DMatrix::from_fn(m, m, |i, j| vectors[j][i]);
    let svd = vm.svd(false, false);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-9)
        .count();
    let lambda_min = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    (
        b,
        lambda,
        CertResiduals {
            sum_norm,
            unit_norm,
            ball_excess,
            lambda_min,
            b_min_eigenvalue: b_min,
        },
        rank,
    )
}

/// Homotopy construction for the all-unit-vector case: place groups of
/// aligned unit vectors in the plane and solve the closing angle so that
/// `|Σ α_i v_i| = 1`.
fn construct_unit_vectors(alpha: &[f64]) -> Option<Vec<f64>> {
    // returns per-index angles, or None when no planar family was found
    let m = alpha.len();
    let sum: f64 = alpha.iter().sum();
    if sum < 1.0 {
        return None;
    }
    // dominant index: one group against the rest
    if let Some(j) = (0..m).find(|&j| alpha[j] - (sum - alpha[j]) > 0.0) {
        let a = alpha[j];
        let b = sum - alpha[j];
        if a - b > 1.0 {
            return None;
        }
        let mut angles = vec![0.0; m];
        if b == 0.0 {
            // m = 1: need alpha[0] itself... |α v| = 1 requires α = 1
            return if (a - 1.0).abs() <= 1e-12 {
                Some(angles)
            } else {
                None
            };
        }
        let cos_t = ((1.0 - a * a - b * b) / (2.0 * a * b)).clamp(-1.0, 1.0);
        let theta = cos_t.acos();
        for (i, ang) in angles.iter_mut().enumerate() {
            if i != j {
                *ang = theta;
            }
        }
        return Some(angles);
    }
    // two-group partition with |a − b| <= 1
    let mut best: Option<(f64, usize)> = None;
    for mask in 0..(1u32 << m) {
        let a: f64 = (0..m)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| alpha[i])
            .sum();
        let diff = (2.0 * a - sum).abs();
        if best.map_or(true, |(d, _)| diff < d) {
            best = Some((diff, mask as usize));
        }
    }
    let (diff, mask) = best.unwrap();
    if diff <= 1.0 {
        let a: f64 = (0..m)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| alpha[i])
            .sum();
        let b = sum - a;
        let cos_t = if a == 0.0 || b == 0.0 {
            1.0
        } else {
            ((1.0 - a * a - b * b) / (2.0 * a * b)).clamp(-1.0, 1.0)
        };
        let theta = cos_t.acos();
        let mut angles = vec![0.0; m];
        for (i, ang) in angles.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                *ang = theta;
            }
        }
        return Some(angles);
    }
    // three balanced groups (possible because no index dominates): close
    // the triangle continuously and bisect the scale at value 1
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| alpha[j].partial_cmp(&alpha[i]).unwrap());
    let mut groups: [Vec<usize>; 3] = Default::default();
    let mut sums = [0.0f64; 3];
    for &i in &order {
        let g = (0..3).min_by(|&a, &b| sums[a].partial_cmp(&sums[b]).unwrap()).unwrap();
        groups[g].push(i);
        sums[g] += alpha[i];
    }
    let (s1, s2, s3) = (sums[0], sums[1], sums[2]);
    if s1 > s2 + s3 + 1e-15 || s2 > s1 + s3 + 1e-15 || s3 > s1 + s2 + 1e-15 {
        return None;
    }
    // closing angles: s1 e1 + s2 u(phi2) + s3 u(phi3) = 0
    let cos_psi = ((s1 * s1 - s2 * s2 - s3 * s3) / (2.0 * s2 * s3)).clamp(-1.0, 1.0);
    let psi = cos_psi.acos();
    // resultant of s2 at angle 0 and s3 at angle psi
    let wx = s2 + s3 * psi.cos();
    let wy = s3 * psi.sin();
    let delta = std::f64::consts::PI - wy.atan2(wx);
    let phi2 = delta;
    let phi3 = delta + psi;
    let val = |s: f64| -> f64 {
        let u2 = unit2(s * phi2);
        let u3 = unit2(s * phi3);
        let x = s1 + s2 * u2[0] + s3 * u3[0];
        let y = s2 * u2[1] + s3 * u3[1];
        (x * x + y * y).sqrt()
    };
    // val(0) = sum >= 1, val(1) ~ 0: scan for a bracket then bisect
    let mut lo = 0.0;
    let mut hi = 1.0;
    let steps = 400;
    for i in 0..steps {
        let s = (i + 1) as f64 / steps as f64;
        if val(s) <= 1.0 {
            lo = i as f64 / steps as f64;
            hi = s;
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if val(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let mut angles = vec![0.0; m];
    for &i in &groups[1] {
        angles[i] = s * phi2;
    }
    for &i in &groups[2] {
        angles[i] = s * phi3;
    }
    Some(angles)
}

/// Multi-start projected gradient descent on `(|Σ α_i v_i|² − 1)²` over the
/// product of spheres and balls; deterministic fallback for configurations
/// the homotopy misses.
fn pgd_fallback(spec: &AlphaSpec, tol: f64) -> Option<Vec<Vec<f64>>> {
    let m = spec.m();
    let dim = m.max(2);
    let restarts = 32;
    let results: Vec<Option<(usize, Vec<Vec<f64>>)>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::DEFAULT_SEED ^ (r as u64));
            let mut vs: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let n = norm(&v);
                    for x in &mut v {
                        *x /= n.max(1e-12);
                    }
                    v
                })
                .collect();
            let step = 0.1 / spec.alpha.iter().map(|a| a * a).sum::<f64>().max(1.0);
            for _ in 0..4000 {
                let s = weighted_sum(&spec.alpha, &vs);
                let excess = s.iter().map(|&x| x * x).sum::<f64>() - 1.0;
                if excess.abs() < tol * 1e-3 {
                    break;
                }
                for (i, v) in vs.iter_mut().enumerate() {
                    for (vk, sk) in v.iter_mut().zip(&s) {
                        *vk -= step * 4.0 * excess * spec.alpha[i] * sk;
                    }
                    let n = norm(v);
                    if spec.i_conv.contains(&i) {
                        if n > 1.0 {
                            for x in v.iter_mut() {
                                *x /= n;
                            }
                        }
                    } else {
                        for x in v.iter_mut() {
                            *x /= n.max(1e-12);
                        }
                    }
                }
            }
            let s = weighted_sum(&spec.alpha, &vs);
            if (norm(&s) - 1.0).abs() <= tol {
                // re-embed in R^m
                let embedded: Vec<Vec<f64>> = vs
                    .iter()
                    .map(|v| {
                        let mut w = vec![0.0; m.max(dim)];
                        w[..dim].copy_from_slice(v);
                        w.truncate(m.max(2).max(m));
                        w
                    })
                    .collect();
                Some((r, embedded))
            } else {
                None
            }
        })
        .collect();
    results
        .into_iter()
        .flatten()
        .min_by_key(|(r, _)| *r)
        .map(|(_, vs)| vs)
}

/// Constructs an elliptic certificate for a feasible spec, or reports
/// infeasibility (the image interval excludes 1).
pub fn find_certificate(spec: &AlphaSpec, tol: f64) -> Result<EllipticCertificate> {
    let diag = check_alpha(spec);
    if !diag.feasible {
        return Err(LabError::Infeasible(diag.violations.join("; ")));
    }
    let m = spec.m();
    let dim = m.max(2);
    let alpha = &spec.alpha;
    let sum = spec.sum();

    // convex-index shrink case: a single dominant index with
    // α_j − Σ_{i≠j} > 1 must be convex (otherwise check_alpha failed)
    let dominant_big = (0..m).find(|&j| alpha[j] - (sum - alpha[j]) > 1.0);
    let vectors: Vec<Vec<f64>> = if let Some(j) = dominant_big {
        debug_assert!(spec.i_conv.contains(&j));
        let rest = sum - alpha[j];
        let r = (1.0 + rest) / alpha[j];
        (0..m)
            .map(|i| {
                if i == j {
                    planar(dim, r, 0.0)
                } else {
                    planar(dim, -1.0, 0.0)
                }
            })
            .collect()
    } else if let Some(angles) = construct_unit_vectors(alpha) {
        angles
            .iter()
            .map(|&th| {
                let u = unit2(th);
                planar(dim, u[0], u[1])
            })
            .collect()
    } else if let Some(vs) = pgd_fallback(spec, tol) {
        vs
    } else {
        return Err(LabError::Infeasible(
            "certificate search failed on a spec that passed check_alpha".into(),
        ));
    };

    // truncate embedding back to R^m (planar helpers may pad to dim 2)
    let vectors: Vec<Vec<f64>> = vectors
        .into_iter()
        .map(|mut v| {
            if m == 1 {
                // R^1 certificate; planar construction only used x
                v.truncate(1);
            } else {
                v.truncate(m);
            }
            v
        })
        .collect();

    let (b, lambda, residuals, effective_rank) = build_matrices(spec, &vectors);
    let ok = residuals.sum_norm <= tol
        && residuals.unit_norm <= tol
        && residuals.ball_excess <= tol
        && residuals.lambda_min >= -tol
        && residuals.b_min_eigenvalue >= -tol.max(1e-10);
    if !ok {
        return Err(LabError::CertificateInvalid(format!(
            "constructed certificate misses tolerance {tol}: {residuals:?}"
        )));
    }
    Ok(EllipticCertificate {
        alpha: spec.alpha.clone(),
        i_conv: spec.i_conv.iter().cloned().collect(),
        vectors,
        b,
        lambda,
        tol,
        residuals,
        effective_rank,
    })
}

/// Re-derives `(B, λ)` from a certificate's vectors and validates every
/// certificate invariant at the certificate's tolerance.
pub fn certificate_to_elliptic(
    cert: &EllipticCertificate,
    spec: &AlphaSpec,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let (b, lambda, residuals, _) = build_matrices(spec, &cert.vectors);
    let tol = cert.tol;
    if residuals.lambda_min < -tol {
        return Err(LabError::CertificateInvalid(format!(
            "negative slack λ_min = {}",
            residuals.lambda_min
        )));
    }
    for (i, &l) in lambda.iter().enumerate() {
        if !spec.i_conv.contains(&i) && l != 0.0 {
            return Err(LabError::CertificateInvalid(format!(
                "λ_{} = {l} must vanish off the convex set",
                i + 1
            )));
        }
    }
    // <alpha, B alpha> must equal |Σ α_i v_i|² = 1
    let mut quad = 0.0;
    for i in 0..spec.m() {
        for j in 0..spec.m() {
            quad += spec.alpha[i] * b[i][j] * spec.alpha[j];
        }
    }
    if (quad - 1.0).abs() > 3.0 * tol {
        return Err(LabError::CertificateInvalid(format!(
            "⟨α, Bα⟩ = {quad} differs from 1"
        )));
    }
    if residuals.b_min_eigenvalue < -tol.max(1e-10) {
        return Err(LabError::CertificateInvalid(format!(
            "B has eigenvalue {}",
            residuals.b_min_eigenvalue
        )));
    }
    Ok((b, lambda))
}

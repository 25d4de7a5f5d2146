//! Standard-Gaussian primitives: the CDF `Φ`, its inverse, the density,
//! and probabilist quadrature rules for integration against `γ_n`.
//!
//! All probabilities live in double precision. `Φ⁻¹` clamps its argument
//! to `[1e-15, 1 - 1e-15]` before inversion and returns `±∞` only for the
//! exact endpoints `0` and `1`.

use crate::error::{LabError, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Clamp applied to probabilities before probit inversion.
pub const PROBIT_EPS: f64 = 1e-15;

/// Extended real value in `ℝ ∪ {−∞, +∞}` with the convention
/// `(+∞) + (−∞) = −∞`.
///
/// This is the codomain of `Φ⁻¹ ∘ f`; the sum convention makes deficit
/// expressions like `Φ⁻¹γ(ΣαᵢAᵢ) − ΣαᵢΦ⁻¹γ(Aᵢ)` well defined when some
/// measures are 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const NEG_INF: ExtReal = ExtReal(f64::NEG_INFINITY);
    pub const POS_INF: ExtReal = ExtReal(f64::INFINITY);

    pub fn new(v: f64) -> Self {
        debug_assert!(!v.is_nan());
        ExtReal(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// Addition under the `∞ − ∞ = −∞` convention.
    pub fn add(self, other: ExtReal) -> ExtReal {
        if (self.0 == f64::INFINITY && other.0 == f64::NEG_INFINITY)
            || (self.0 == f64::NEG_INFINITY && other.0 == f64::INFINITY)
        {
            ExtReal::NEG_INF
        } else {
            ExtReal(self.0 + other.0)
        }
    }

    /// Subtraction, `a - b` rewritten as `a + (-b)` under the same convention.
    pub fn sub(self, other: ExtReal) -> ExtReal {
        self.add(ExtReal(-other.0))
    }

    /// Scale by a positive coefficient (keeps infinities on their side).
    pub fn scale(self, alpha: f64) -> ExtReal {
        debug_assert!(alpha > 0.0);
        ExtReal(self.0 * alpha)
    }

    /// Sum of a list under the `∞ − ∞ = −∞` convention.
    /// A single `−∞` term forces the whole sum to `−∞`.
    pub fn sum(terms: impl IntoIterator<Item = ExtReal>) -> ExtReal {
        let mut acc = ExtReal(0.0);
        for t in terms {
            acc = acc.add(t);
        }
        acc
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::new(v)
    }
}

// Cody-style rational approximations for erf/erfc, accurate to within a few
// ulp over the double range used here.

const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

const SQRT_PI_INV: f64 = 0.564189583547756287; // 1/sqrt(pi)

fn erf_small(x: f64) -> f64 {
    // |x| <= 0.46875
    let z = x * x;
    let mut num = ERF_A[4] * z;
    let mut den = z;
    for i in 0..3 {
        num = (num + ERF_A[i]) * z;
        den = (den + ERF_B[i]) * z;
    }
    x * (num + ERF_A[3]) / (den + ERF_B[3])
}

fn erfc_mid(x: f64) -> f64 {
    // 0.46875 <= x <= 4
    let mut num = ERF_C[8] * x;
    let mut den = x;
    for i in 0..7 {
        num = (num + ERF_C[i]) * x;
        den = (den + ERF_D[i]) * x;
    }
    let r = (num + ERF_C[7]) / (den + ERF_D[7]);
    let z = (x * 16.0).trunc() / 16.0;
    let del = (x - z) * (x + z);
    (-z * z).exp() * (-del).exp() * r
}

fn erfc_large(x: f64) -> f64 {
    // x > 4
    if x >= 26.6 {
        return 0.0;
    }
    let z = 1.0 / (x * x);
    let mut num = ERF_P[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + ERF_P[i]) * z;
        den = (den + ERF_Q[i]) * z;
    }
    let mut r = z * (num + ERF_P[4]) / (den + ERF_Q[4]);
    r = (SQRT_PI_INV - r) / x;
    let zz = (x * 16.0).trunc() / 16.0;
    let del = (x - zz) * (x + zz);
    (-zz * zz).exp() * (-del).exp() * r
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 0.46875 {
        1.0 - erf_small(x)
    } else if ax <= 4.0 {
        let v = erfc_mid(ax);
        if x < 0.0 {
            2.0 - v
        } else {
            v
        }
    } else {
        let v = erfc_large(ax);
        if x < 0.0 {
            2.0 - v
        } else {
            v
        }
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.abs() <= 0.46875 {
        erf_small(x)
    } else {
        1.0 - erfc(x)
    }
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.5066282746310005024;

/// Standard normal density `φ(x)`.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal CDF `Φ(x)` for finite `x`.
pub fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `Φ` on the extended reals: `Φ(−∞) = 0`, `Φ(+∞) = 1`.
pub fn phi_cdf(x: ExtReal) -> f64 {
    let v = x.value();
    if v == f64::NEG_INFINITY {
        0.0
    } else if v == f64::INFINITY {
        1.0
    } else {
        phi(v)
    }
}

// Acklam's rational approximation for the probit, then one Halley
// refinement against `phi` to reach full double precision.
fn probit_estimate(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -probit_estimate(1.0 - p)
    }
}

/// Inverse normal CDF on `[0, 1]`, extended so that `Φ⁻¹(0) = −∞` and
/// `Φ⁻¹(1) = +∞`. Inputs strictly inside `(0, 1)` are clamped to
/// `[1e-15, 1 − 1e-15]` before inversion.
pub fn phi_inv(p: f64) -> Result<ExtReal> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(LabError::Domain(format!("phi_inv: p = {p} outside [0, 1]")));
    }
    if p == 0.0 {
        return Ok(ExtReal::NEG_INF);
    }
    if p == 1.0 {
        return Ok(ExtReal::POS_INF);
    }
    let p = p.clamp(PROBIT_EPS, 1.0 - PROBIT_EPS);
    let mut x = probit_estimate(p);
    // Halley refinement: e = Φ(x) − p, u = e/φ(x), x ← x − u/(1 + x u / 2).
    for _ in 0..2 {
        let e = phi(x) - p;
        let u = e / normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(ExtReal::new(x))
}

/// Probit of a probability already known to be inside `[0, 1]`;
/// panics on domain violation.
pub fn probit(p: f64) -> ExtReal {
    phi_inv(p).expect("probability outside [0, 1]")
}

/// One-dimensional quadrature rule against `γ₁`: nodes in `ℝ` and positive
/// weights summing to 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Gauss-Hermite rule rescaled to the probabilist weight
    /// `exp(−x²/2)/√(2π)`. Exact on monomials `x^k`, `k ≤ 2·order − 1`.
    ///
    /// Nodes and weights come from the Golub-Welsch eigendecomposition of
    /// the Jacobi matrix of the probabilist Hermite recurrence.
    pub fn gauss_hermite(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be >= 1");
        let n = order;
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let node = eig.eigenvalues[j];
                let first = eig.eigenvectors[(0, j)];
                (node, first * first)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // Symmetrize: the rule is invariant under x -> -x, so average the
        // mirrored weights and zero the central node.
        let nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        for j in 0..n / 2 {
            let w = 0.5 * (weights[j] + weights[n - 1 - j]);
            weights[j] = w;
            weights[n - 1 - j] = w;
        }
        let mut nodes = nodes;
        for j in 0..n / 2 {
            let x = 0.5 * (nodes[n - 1 - j] - nodes[j]);
            nodes[j] = -x;
            nodes[n - 1 - j] = x;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        QuadratureRule { nodes, weights }
    }

    /// Composite Gauss-Legendre rule on `[-half_width, half_width]` with the
    /// normal density folded into the weights. Robust for integrands with
    /// kinks, where the spectral Hermite rule converges slowly.
    pub fn composite_legendre(panels: usize, half_width: f64) -> Self {
        assert!(panels >= 1 && half_width > 0.0);
        // 8-point Gauss-Legendre on [-1, 1].
        const GL_X: [f64; 8] = [
            -0.9602898564975363,
            -0.7966664774136267,
            -0.5255324099163290,
            -0.1834346424956498,
            0.1834346424956498,
            0.5255324099163290,
            0.7966664774136267,
            0.9602898564975363,
        ];
        const GL_W: [f64; 8] = [
            0.1012285362903763,
            0.2223810344533745,
            0.3137066458778873,
            0.3626837833783620,
            0.3626837833783620,
            0.3137066458778873,
            0.2223810344533745,
            0.1012285362903763,
        ];
        let h = 2.0 * half_width / panels as f64;
        let mut nodes = Vec::with_capacity(panels * 8);
        let mut weights = Vec::with_capacity(panels * 8);
        for p in 0..panels {
            let lo = -half_width + p as f64 * h;
            let mid = lo + 0.5 * h;
            for j in 0..8 {
                let x = mid + 0.5 * h * GL_X[j];
                nodes.push(x);
                weights.push(0.5 * h * GL_W[j] * normal_pdf(x));
            }
        }
        QuadratureRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ f dγ₁` estimate.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Tensorized quadrature estimate of `∫ f dγ_n` for `n ≤ 3`.
pub fn gamma_integral(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    n: usize,
    rule: &QuadratureRule,
) -> Result<f64> {
    match n {
        1 => Ok(rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * f(&[x]))
            .sum()),
        2 => {
            let mut acc = 0.0;
            for (&x1, &w1) in rule.nodes.iter().zip(&rule.weights) {
                for (&x2, &w2) in rule.nodes.iter().zip(&rule.weights) {
                    acc += w1 * w2 * f(&[x1, x2]);
                }
            }
            Ok(acc)
        }
        3 => {
            let mut acc = 0.0;
            for (&x1, &w1) in rule.nodes.iter().zip(&rule.weights) {
                for (&x2, &w2) in rule.nodes.iter().zip(&rule.weights) {
                    for (&x3, &w3) in rule.nodes.iter().zip(&rule.weights) {
                        acc += w1 * w2 * w3 * f(&[x1, x2, x3]);
                    }
                }
            }
            Ok(acc)
        }
        _ => Err(LabError::Domain(format!(
            "gamma_integral: dimension {n} not supported (n <= 3)"
        ))),
    }
}

/// Odd double factorial `(k−1)!! ` for even `k`, as f64; used by the moment
/// tests for quadrature exactness.
pub fn double_factorial(k: u32) -> f64 {
    let mut acc = 1.0;
    let mut i = k as i64;
    while i > 1 {
        acc *= i as f64;
        i -= 2;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn phi_trivial_values() {
        assert_eq!(phi_cdf(ExtReal::new(0.0)), 0.5);
        assert_eq!(phi_cdf(ExtReal::POS_INF), 1.0);
        assert_eq!(phi_cdf(ExtReal::NEG_INF), 0.0);
    }

    #[test]
    fn phi_at_one_matches_erf_oracle() {
        // High-precision reference: Phi(1) = (1 + erf(1/sqrt(2)))/2.
        let reference = 0.841344746068542948585232545632;
        assert!((phi(1.0) - reference).abs() <= 1e-15);
    }

    #[test]
    fn phi_symmetry() {
        let mut x = -8.0;
        while x <= 8.0 {
            assert!(
                (phi(-x) - (1.0 - phi(x))).abs() <= 1e-15,
                "symmetry violated at x = {x}"
            );
            x += 1.0 / 64.0;
        }
    }

    #[test]
    fn phi_inv_median_and_endpoints() {
        assert_eq!(phi_inv(0.5).unwrap().value(), 0.0);
        assert_eq!(phi_inv(0.0).unwrap(), ExtReal::NEG_INF);
        assert_eq!(phi_inv(1.0).unwrap(), ExtReal::POS_INF);
        assert!(phi_inv(-0.1).is_err());
        assert!(phi_inv(1.5).is_err());
    }

    #[test]
    fn phi_inv_of_phi_one() {
        let x = phi_inv(0.841344746).unwrap().value();
        assert!((x - 1.0).abs() <= 1e-9, "got {x}");
    }

    #[test]
    fn phi_inv_forward_roundtrip() {
        let ps = [1e-12, 1e-9, 1e-4, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-12];
        for &p in &ps {
            let x = phi_inv(p).unwrap().value();
            assert!((phi(x) - p).abs() <= 1e-12 * p.max(1e-3), "p = {p}");
        }
    }

    #[test]
    fn phi_inv_strictly_increasing() {
        let mut prev = f64::NEG_INFINITY;
        for k in 1..2000 {
            let p = k as f64 / 2000.0;
            let x = phi_inv(p).unwrap().value();
            assert!(x > prev, "not increasing at p = {p}");
            prev = x;
        }
    }

    #[test]
    fn extended_sum_convention() {
        let s = ExtReal::POS_INF.add(ExtReal::NEG_INF);
        assert_eq!(s, ExtReal::NEG_INF);
        let s = ExtReal::NEG_INF.add(ExtReal::POS_INF);
        assert_eq!(s, ExtReal::NEG_INF);
        let s = ExtReal::sum([ExtReal::POS_INF, ExtReal::new(3.0), ExtReal::NEG_INF]);
        assert_eq!(s, ExtReal::NEG_INF);
    }

    #[test]
    fn hermite_moment_test() {
        for order in [8usize, 16, 32, 64] {
            let rule = QuadratureRule::gauss_hermite(order);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 1.0).abs() <= 1e-14);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            // exactness holds through degree 2·order − 1; above ~40 the
            // moments are too ill-conditioned in doubles to verify
            for k in 0..(2 * order).min(40) {
                let est = rule.integrate(|x| x.powi(k as i32));
                if k % 2 == 1 {
                    let scale = double_factorial(k as u32 + 1);
                    assert!(
                        est.abs() <= 1e-10 * scale,
                        "order {order}, odd k = {k}: {est}"
                    );
                } else {
                    let exact = if k == 0 {
                        1.0
                    } else {
                        double_factorial(k as u32 - 1)
                    };
                    // node rounding is amplified by a factor ~k on the
                    // k-th moment, so the budget grows with k
                    let tol = 5e-12 * ((k + 1) * (k + 1)) as f64;
                    assert!(
                        (est - exact).abs() <= tol * exact.max(1.0),
                        "order {order}, k = {k}: est {est} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn gamma_integral_examples() {
        let rule = QuadratureRule::gauss_hermite(64);
        for n in 1..=3 {
            let one = gamma_integral(&|_x: &[f64]| 1.0, n, &rule).unwrap();
            assert!((one - 1.0).abs() <= 1e-13);
        }
        let var = gamma_integral(&|x: &[f64]| x[0] * x[0], 2, &rule).unwrap();
        assert!((var - 1.0).abs() <= 1e-12);
        // Half-space indicator: the spectral rule is useless across a jump,
        // the composite rule localizes the error to one panel.
        let panel_rule = QuadratureRule::composite_legendre(4000, 10.0);
        let ind = gamma_integral(
            &|x: &[f64]| if x[0] <= 0.7 { 1.0 } else { 0.0 },
            1,
            &panel_rule,
        )
        .unwrap();
        assert!((ind - phi(0.7)).abs() <= 1e-3, "got {ind} vs {}", phi(0.7));
        assert!(gamma_integral(&|_x: &[f64]| 1.0, 4, &rule).is_err());
    }

    #[test]
    fn exact_polynomial_integration() {
        let rule = QuadratureRule::gauss_hermite(16);
        // E[x1^2 x2^4] = 1 * 3 = 3 under the product Gaussian.
        let est = gamma_integral(&|x: &[f64]| x[0] * x[0] * x[1].powi(4), 2, &rule).unwrap();
        assert!((est - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn composite_rule_total_mass() {
        let rule = QuadratureRule::composite_legendre(256, 10.0);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
        let var = rule.integrate(|x| x * x);
        assert!((var - 1.0).abs() <= 1e-10);
    }

    proptest! {
        #[test]
        fn probit_roundtrip(x in -6.0f64..6.0) {
            let p = phi(x);
            let back = phi_inv(p).unwrap().value();
            // near p = 1 the probability itself only has ulp resolution
            // ~1e-16, which maps to x-space error eps/phi'(x)
            let tol = 1e-12 + 4.0 * f64::EPSILON / normal_pdf(x);
            prop_assert!((back - x).abs() <= tol, "x = {x}, err {}", (back - x).abs());
        }

        #[test]
        fn finite_extended_addition_is_plain(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let s = ExtReal::new(a).add(ExtReal::new(b));
            prop_assert_eq!(s.value(), a + b);
        }
    }
}

//! Scenario plumbing for the laboratory: JSON scenario configs, flag
//! parsers mirroring the schema one-to-one, per-subcommand seed
//! derivation, and deterministic artifact emission.

use ehrhard_lab::alpha::{
    check_alpha, find_certificate, phi_image_interval, phi_min_bruteforce, AlphaSpec,
};
use ehrhard_lab::bl::{
    bl_layout, bl_preservation_check, ehrhard_layout, kernel_structure, rbl_layout,
    rbl_preservation_check, second_order_feasible, validate_bl_datum, BLDatum, GBLDatum,
    GaussianFn, SecondOrderOutcome,
};
use ehrhard_lab::field::ScalarField;
use ehrhard_lab::grid::{Axis, Extension};
use ehrhard_lab::heat::{heat_evolve_grid, heat_pde_residual};
use ehrhard_lab::io::{deficit_field_to_csv, grid_to_csv, to_json_string, GridSidecar};
use ehrhard_lab::lab::{
    build_counterexample, hypothesis_margin, preservation_check, violation_at_origin,
    HypothesisInstance,
};
use ehrhard_lab::regions::{ehrhard_deficit, RegionSet};
use ehrhard_lab::{LabError, QuadratureRule};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

pub const SUBCOMMANDS: &[&str] = &[
    "check-alpha",
    "interval",
    "certificate",
    "ehrhard",
    "evolve",
    "preserve",
    "counterexample",
    "bl-validate",
    "bl-preserve",
    "rbl-preserve",
    "kernel-report",
    "second-order",
];

/// `0.5,0.5` → `[0.5, 0.5]`.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number {p:?}: {e}"))
        })
        .collect()
}

/// `1,3` (one-based positions) → zero-based indices.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| {
            let v: usize = p
                .trim()
                .parse()
                .map_err(|e| format!("bad index {p:?}: {e}"))?;
            if v == 0 {
                return Err("indices are one-based; 0 is out of range".into());
            }
            Ok(v - 1)
        })
        .collect()
}

/// `-8:8:257` → uniform axis with 257 points on `[-8, 8]`.
pub fn parse_grid_spec(s: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid spec {s:?} must be lo:hi:count"));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|e| format!("bad grid lo {:?}: {e}", parts[0]))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|e| format!("bad grid hi {:?}: {e}", parts[1]))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|e| format!("bad grid count {:?}: {e}", parts[2]))?;
    if !(hi > lo) || count < 2 || count > 1_000_000 || !lo.is_finite() || !hi.is_finite() {
        return Err(format!("grid spec {s:?} out of range"));
    }
    Ok(Axis::new(lo, (hi - lo) / (count - 1) as f64, count))
}

/// Hexadecimal seed, with or without `0x`.
pub fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim().trim_start_matches("0x");
    u64::from_str_radix(t, 16).map_err(|e| format!("bad hex seed {s:?}: {e}"))
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Per-subcommand seed derivation: global seed XOR hash of the name, so
/// scenario reordering never changes any individual result.
pub fn subcommand_seed(global: u64, subcommand: &str) -> u64 {
    global ^ fnv1a64(subcommand.as_bytes())
}

/// A batch scenario: parameters validate against the target subcommand's
/// schema before any computation runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub subcommand: String,
    #[serde(default)]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Hexadecimal global seed override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
}

fn schema_error(sub: &str, e: serde_json::Error) -> LabError {
    LabError::Config(format!("params for {sub} do not match the schema: {e}"))
}

fn typed_params<T: serde::de::DeserializeOwned>(sc: &Scenario) -> Result<T, LabError> {
    serde_json::from_value(sc.params.clone()).map_err(|e| schema_error(&sc.subcommand, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaParams {
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub i_conv: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EhrhardParams {
    pub alpha: Vec<f64>,
    pub regions: Vec<RegionSet>,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
}

fn default_mc_samples() -> usize {
    200_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveParams {
    pub field: ScalarField,
    #[serde(default)]
    pub grid: Option<String>,
    pub t: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_h")]
    pub h: f64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_h() -> f64 {
    1.0 / 64.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreserveParams {
    pub instance: HypothesisInstance,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlValidateParams {
    pub datum: BLDatum,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlPreserveParams {
    pub datum: BLDatum,
    pub f_list: Vec<GaussianFn>,
    pub t: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_trials() -> usize {
    64
}

/// Generalized-datum input: either a literal datum or a layout built from
/// forward data (`bl`/`rbl`) or coefficients (`ehrhard`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gbl: Option<GBLDatum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum: Option<BLDatum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_max_iter() -> usize {
    5000
}

impl LayoutParams {
    fn resolve(&self) -> Result<GBLDatum, LabError> {
        if let Some(g) = &self.gbl {
            return Ok(g.clone());
        }
        match self.layout.as_deref() {
            Some("bl") => {
                let d = self.datum.as_ref().ok_or_else(|| {
                    LabError::Config("layout \"bl\" needs a `datum` object".into())
                })?;
                Ok(bl_layout(d))
            }
            Some("rbl") => {
                let d = self.datum.as_ref().ok_or_else(|| {
                    LabError::Config("layout \"rbl\" needs a `datum` object".into())
                })?;
                Ok(rbl_layout(d))
            }
            Some("ehrhard") => {
                let alpha = self.alpha.as_ref().ok_or_else(|| {
                    LabError::Config("layout \"ehrhard\" needs `alpha`".into())
                })?;
                Ok(ehrhard_layout(alpha, self.n.unwrap_or(1)))
            }
            Some(other) => Err(LabError::Config(format!(
                "unknown layout {other:?} (expected bl, rbl, or ehrhard)"
            ))),
            None => Err(LabError::Config(
                "provide either `gbl` or a `layout` specification".into(),
            )),
        }
    }
}

/// Result of one scenario run, before anything touches the filesystem.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit: i32,
    pub summary: Value,
    pub field_csv: Option<String>,
}

fn error_exit(e: &LabError) -> i32 {
    match e {
        LabError::Config(_)
        | LabError::Io(_)
        | LabError::Serde(_)
        | LabError::Resource(_)
        | LabError::Unsupported(_)
        | LabError::UnsupportedCombination(_) => EXIT_USAGE,
        LabError::Infeasible(_) => EXIT_INFEASIBLE,
        LabError::Domain(_)
        | LabError::DegenerateRegion(_)
        | LabError::Validation(_)
        | LabError::CertificateInvalid(_)
        | LabError::Precondition(_) => EXIT_ASSERTION,
    }
}

fn spec_from(alpha: &[f64], i_conv: &[usize]) -> Result<AlphaSpec, LabError> {
    AlphaSpec::new(alpha.to_vec(), i_conv.iter().cloned())
}

/// Executes a scenario. Never panics on bad input: every failure is a
/// summary with an `error` field and a nonzero exit code.
pub fn run_scenario(sc: &Scenario) -> RunOutcome {
    let global_seed = match &sc.seed {
        Some(s) => match parse_seed(s) {
            Ok(v) => v,
            Err(e) => return usage_outcome(sc, &e),
        },
        None => ehrhard_lab::DEFAULT_SEED,
    };
    let seed = subcommand_seed(global_seed, &sc.subcommand);
    match dispatch(sc, seed) {
        Ok((exit, results, field_csv)) => RunOutcome {
            exit,
            summary: envelope(sc, results),
            field_csv,
        },
        Err(e) => RunOutcome {
            exit: error_exit(&e),
            summary: envelope(sc, json!({ "error": e.to_string() })),
            field_csv: None,
        },
    }
}

fn usage_outcome(sc: &Scenario, msg: &str) -> RunOutcome {
    RunOutcome {
        exit: EXIT_USAGE,
        summary: envelope(sc, json!({ "error": msg })),
        field_csv: None,
    }
}

fn envelope(sc: &Scenario, results: Value) -> Value {
    json!({
        "scenario": {
            "name": sc.name,
            "subcommand": sc.subcommand,
            "params": sc.params,
            "seed": sc.seed,
        },
        "results": results,
    })
}

fn to_val<T: Serialize>(v: &T) -> Result<Value, LabError> {
    serde_json::to_value(v).map_err(LabError::Serde)
}

fn dispatch(sc: &Scenario, seed: u64) -> Result<(i32, Value, Option<String>), LabError> {
    match sc.subcommand.as_str() {
        "check-alpha" => {
            let p: AlphaParams = typed_params(sc)?;
            let spec = spec_from(&p.alpha, &p.i_conv)?;
            let diag = check_alpha(&spec);
            let exit = if diag.feasible {
                EXIT_PASS
            } else {
                EXIT_INFEASIBLE
            };
            Ok((exit, to_val(&diag)?, None))
        }
        "interval" => {
            let p: AlphaParams = typed_params(sc)?;
            let spec = spec_from(&p.alpha, &p.i_conv)?;
            // spheres first: the interval formula takes the sphere count
            let mut reordered: Vec<f64> = (0..spec.m())
                .filter(|i| !spec.i_conv.contains(i))
                .map(|i| spec.alpha[i])
                .collect();
            let k = reordered.len();
            reordered.extend(spec.i_conv.iter().map(|&i| spec.alpha[i]));
            let j = phi_image_interval(&reordered, k);
            let resolution = p.resolution.unwrap_or(360);
            let brute_lo = phi_min_bruteforce(&reordered, k, 2, resolution)?;
            let results = json!({
                "lo": j.lo,
                "hi": j.hi,
                "brute_lo": brute_lo,
                "resolution": resolution,
                "agreement": (j.lo - brute_lo).abs(),
            });
            let exit = if (j.lo - brute_lo).abs() <= 5e-3 {
                EXIT_PASS
            } else {
                EXIT_ASSERTION
            };
            Ok((exit, results, None))
        }
        "certificate" => {
            let p: AlphaParams = typed_params(sc)?;
            let spec = spec_from(&p.alpha, &p.i_conv)?;
            let cert = find_certificate(&spec, p.tol.unwrap_or(1e-9))?;
            Ok((EXIT_PASS, to_val(&cert)?, None))
        }
        "ehrhard" => {
            let p: EhrhardParams = typed_params(sc)?;
            let report = ehrhard_deficit(&p.alpha, &p.regions, p.mc_samples, seed)?;
            let exit = if report.deficit >= -1e-6 {
                EXIT_PASS
            } else {
                EXIT_ASSERTION
            };
            Ok((exit, to_val(&report)?, None))
        }
        "evolve" => {
            let p: EvolveParams = typed_params(sc)?;
            let axis = match &p.grid {
                Some(s) => parse_grid_spec(s).map_err(LabError::Config)?,
                None => Axis::symmetric(8.0, 257),
            };
            if p.field.dim() != 1 {
                return Err(LabError::Config(
                    "evolve drives 1D grids; higher dimensions go through the library".into(),
                ));
            }
            let grid = p.field.to_grid(vec![axis], Extension::Constant);
            if p.t.is_empty() {
                return Ok((EXIT_PASS, json!({ "results": [] }), None));
            }
            let rule = QuadratureRule::gauss_hermite(64);
            let mut per_t = Vec::new();
            let mut last = None;
            for &t in &p.t {
                let evolved = heat_evolve_grid(&grid, t, &rule)?;
                let residual = if t > p.dt {
                    Some(heat_pde_residual(&grid, t, p.dt, p.h, &rule)?.max_abs)
                } else {
                    None
                };
                per_t.push(json!({ "t": t, "max_residual": residual }));
                last = Some(evolved);
            }
            let evolved = last.expect("nonempty t list");
            let results = json!({
                "results": per_t,
                "grid": to_val(&GridSidecar::of(&evolved))?,
            });
            Ok((EXIT_PASS, results, Some(grid_to_csv(&evolved))))
        }
        "preserve" => {
            let p: PreserveParams = typed_params(sc)?;
            if p.t.is_empty() {
                return Ok((EXIT_PASS, json!({ "results": [] }), None));
            }
            let margin = hypothesis_margin(&p.instance)?;
            let summary = preservation_check(&p.instance, &p.t)?;
            let exit = if summary.min_c >= -1e-4 {
                EXIT_PASS
            } else {
                EXIT_ASSERTION
            };
            let csv = deficit_field_to_csv(&summary.field);
            let results = json!({
                "premise_margin": margin.margin,
                "min_C_per_t": summary.min_c_per_t,
                "min_C": summary.min_c,
                "skipped_count": summary.skipped,
            });
            Ok((exit, results, Some(csv)))
        }
        "counterexample" => {
            let p: AlphaParams = typed_params(sc)?;
            let spec = spec_from(&p.alpha, &p.i_conv)?;
            let ce = build_counterexample(&spec, p.a)?;
            let margin = hypothesis_margin(&ce.instance)?;
            let c_origin = violation_at_origin(&ce.instance, 1.0)?;
            let exit = if margin.margin >= -1e-9 && c_origin <= -1e-3 {
                EXIT_PASS
            } else {
                EXIT_ASSERTION
            };
            let results = json!({
                "a": ce.a,
                "f_mass": ce.f_mass,
                "branch": to_val(&ce.branch)?,
                "premise_margin": margin.margin,
                "C_at_origin_t1": c_origin,
            });
            Ok((exit, results, None))
        }
        "bl-validate" => {
            let p: BlValidateParams = typed_params(sc)?;
            let v = validate_bl_datum(&p.datum);
            let pyth = ehrhard_lab::bl::pythagoras_check(&p.datum, p.trials, seed);
            let contr = ehrhard_lab::bl::contraction_check(&p.datum, p.trials, seed);
            let exit = if v.pass { EXIT_PASS } else { EXIT_ASSERTION };
            let results = json!({
                "validation": to_val(&v)?,
                "pythagoras_residual": pyth,
                "contraction_gap": contr,
            });
            Ok((exit, results, None))
        }
        "bl-preserve" => {
            let p: BlPreserveParams = typed_params(sc)?;
            if p.t.is_empty() {
                return Ok((EXIT_PASS, json!({ "results": [] }), None));
            }
            let rep = bl_preservation_check(&p.datum, &p.f_list, &p.t, p.trials, seed)?;
            let exit = if rep.max_deficit <= 1e-3 {
                EXIT_PASS
            } else {
                EXIT_ASSERTION
            };
            Ok((exit, to_val(&rep)?, None))
        }
        "rbl-preserve" => {
            let p: BlPreserveParams = typed_params(sc)?;
            if p.t.is_empty() {
                return Ok((EXIT_PASS, json!({ "results": [] }), None));
            }
            let rep = rbl_preservation_check(&p.datum, &p.f_list, &p.t, p.trials, seed)?;
            let exit = if rep.min_deficit >= -1e-3 {
                EXIT_PASS
            } else {
                EXIT_ASSERTION
            };
            Ok((exit, to_val(&rep)?, None))
        }
        "kernel-report" => {
            let p: LayoutParams = typed_params(sc)?;
            let gbl = p.resolve()?;
            let rep = kernel_structure(&gbl)?;
            Ok((EXIT_PASS, to_val(&rep)?, None))
        }
        "second-order" => {
            let p: LayoutParams = typed_params(sc)?;
            let gbl = p.resolve()?;
            let outcome = second_order_feasible(&gbl, p.max_iter)?;
            let exit = match &outcome {
                SecondOrderOutcome::Feasible { .. } => EXIT_PASS,
                SecondOrderOutcome::InfeasibleOrUnknown { .. } => EXIT_INFEASIBLE,
            };
            Ok((exit, to_val(&outcome)?, None))
        }
        other => Err(LabError::Config(format!(
            "unknown subcommand {other:?}; expected one of {SUBCOMMANDS:?}"
        ))),
    }
}

/// Writes `<out>/<scenario>/<subcommand>.summary.json` and, when present,
/// `<subcommand>.field.csv`. Returns the summary path.
pub fn emit_report(
    sc: &Scenario,
    outcome: &RunOutcome,
    default_out: &Path,
) -> Result<PathBuf, LabError> {
    let base = sc
        .out_dir
        .clone()
        .unwrap_or_else(|| default_out.to_path_buf())
        .join(&sc.name);
    std::fs::create_dir_all(&base)?;
    let summary_path = base.join(format!("{}.summary.json", sc.subcommand));
    let mut text = to_json_string(&outcome.summary)?;
    text.push('\n');
    ehrhard_lab::io::write_text(&summary_path, &text)?;
    if let Some(csv) = &outcome.field_csv {
        let csv_path = base.join(format!("{}.field.csv", sc.subcommand));
        ehrhard_lab::io::write_text(&csv_path, csv)?;
    }
    Ok(summary_path)
}

/// Re-ingests a previously written summary as a runnable scenario.
pub fn scenario_from_summary(summary: &Value) -> Result<Scenario, LabError> {
    let obj = summary
        .get("scenario")
        .ok_or_else(|| LabError::Config("summary has no scenario block".into()))?;
    serde_json::from_value(obj.clone()).map_err(LabError::Serde)
}

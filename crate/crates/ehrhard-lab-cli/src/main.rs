use clap::Parser;
use ehrhard_lab_cli::{
    emit_report, parse_f64_list, parse_grid_spec, parse_index_list, parse_seed, run_scenario,
    Scenario, EXIT_USAGE, SUBCOMMANDS,
};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

/// Batch scenario runner for Gaussian Brunn-Minkowski and geometric
/// Brascamp-Lieb checks.
///
/// Exit codes: 0 pass, 1 usage or configuration error, 2 assertion
/// failure, 3 infeasible or unknown.
#[derive(Parser, Debug)]
#[command(name = "ehrhard-lab", version, about)]
struct Cli {
    /// One of: check-alpha, interval, certificate, ehrhard, evolve,
    /// preserve, counterexample, bl-validate, bl-preserve, rbl-preserve,
    /// kernel-report, second-order
    subcommand: String,

    /// JSON scenario config; inline flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,

    /// Coefficients, e.g. `0.5,0.5`
    #[arg(long)]
    alpha: Option<String>,

    /// One-based convex-slot indices, e.g. `1,3`
    #[arg(long)]
    iconv: Option<String>,

    /// Evolution times, e.g. `0.25,1,4`
    #[arg(long)]
    t: Option<String>,

    /// Grid as `lo:hi:count`, e.g. `-8:8:257`
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,

    /// Hexadecimal global seed
    #[arg(long)]
    seed: Option<String>,

    /// Scenario name (directory under the output root)
    #[arg(long)]
    name: Option<String>,

    /// Output root directory
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Counterexample curvature parameter
    #[arg(long)]
    a: Option<f64>,

    /// Certificate tolerance
    #[arg(long)]
    tol: Option<f64>,

    /// Brute-force angular resolution
    #[arg(long)]
    resolution: Option<usize>,

    /// Monte Carlo sample count for region measures
    #[arg(long)]
    mc_samples: Option<usize>,

    /// Random trial count for datum checks
    #[arg(long)]
    trials: Option<usize>,

    /// Iteration cap for the second-order projection search
    #[arg(long)]
    max_iter: Option<usize>,

    /// Layout selector for kernel-report / second-order (bl, rbl, ehrhard)
    #[arg(long)]
    layout: Option<String>,

    /// Per-slot dimension for the ehrhard layout
    #[arg(long)]
    n: Option<usize>,
}

fn configure_threads() {
    if let Ok(v) = std::env::var("EHRHARD_LAB_THREADS") {
        if let Ok(k) = v.parse::<usize>() {
            if k >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    }
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE as u8)
}

fn set_param(params: &mut Value, key: &str, value: Value) {
    if !params.is_object() {
        *params = json!({});
    }
    params
        .as_object_mut()
        .expect("object ensured above")
        .insert(key.to_string(), value);
}

fn main() -> ExitCode {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };

    if !SUBCOMMANDS.contains(&cli.subcommand.as_str()) {
        return usage(&format!(
            "unknown subcommand {:?}; expected one of {SUBCOMMANDS:?}",
            cli.subcommand
        ));
    }

    let mut scenario = if let Some(path) = &cli.config {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return usage(&format!("cannot read {}: {e}", path.display())),
        };
        match serde_json::from_str::<Scenario>(&text) {
            Ok(sc) => sc,
            Err(e) => return usage(&format!("config {} is invalid: {e}", path.display())),
        }
    } else {
        Scenario {
            name: cli.subcommand.clone(),
            subcommand: cli.subcommand.clone(),
            params: json!({}),
            out_dir: None,
            seed: None,
        }
    };

    if scenario.subcommand != cli.subcommand {
        return usage(&format!(
            "config targets subcommand {:?}, command line says {:?}",
            scenario.subcommand, cli.subcommand
        ));
    }
    if let Some(name) = &cli.name {
        scenario.name = name.clone();
    }
    if let Some(seed) = &cli.seed {
        if let Err(e) = parse_seed(seed) {
            return usage(&e);
        }
        scenario.seed = Some(seed.clone());
    }
    if let Some(s) = &cli.alpha {
        match parse_f64_list(s) {
            Ok(v) => set_param(&mut scenario.params, "alpha", json!(v)),
            Err(e) => return usage(&e),
        }
    }
    if let Some(s) = &cli.iconv {
        match parse_index_list(s) {
            Ok(v) => set_param(&mut scenario.params, "i_conv", json!(v)),
            Err(e) => return usage(&e),
        }
    }
    if let Some(s) = &cli.t {
        match parse_f64_list(s) {
            Ok(v) => set_param(&mut scenario.params, "t", json!(v)),
            Err(e) => return usage(&e),
        }
    }
    if let Some(s) = &cli.grid {
        if let Err(e) = parse_grid_spec(s) {
            return usage(&e);
        }
        set_param(&mut scenario.params, "grid", json!(s));
    }
    if let Some(v) = cli.a {
        set_param(&mut scenario.params, "a", json!(v));
    }
    if let Some(v) = cli.tol {
        set_param(&mut scenario.params, "tol", json!(v));
    }
    if let Some(v) = cli.resolution {
        set_param(&mut scenario.params, "resolution", json!(v));
    }
    if let Some(v) = cli.mc_samples {
        set_param(&mut scenario.params, "mc_samples", json!(v));
    }
    if let Some(v) = cli.trials {
        set_param(&mut scenario.params, "trials", json!(v));
    }
    if let Some(v) = cli.max_iter {
        set_param(&mut scenario.params, "max_iter", json!(v));
    }
    if let Some(v) = &cli.layout {
        set_param(&mut scenario.params, "layout", json!(v));
    }
    if let Some(v) = cli.n {
        set_param(&mut scenario.params, "n", json!(v));
    }

    let outcome = run_scenario(&scenario);
    match emit_report(&scenario, &outcome, &cli.out) {
        Ok(path) => {
            println!("{}", path.display());
        }
        Err(e) => return usage(&format!("cannot write report: {e}")),
    }
    ExitCode::from(outcome.exit as u8)
}

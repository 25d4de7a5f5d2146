//! Scenario config decoding: the top-level envelope plus every typed
//! per-subcommand parameter schema must reject arbitrary bytes without
//! panicking.

#![no_main]

use ehrhard_lab_cli::{
    parse_seed, AlphaParams, BlPreserveParams, BlValidateParams, EhrhardParams, EvolveParams,
    LayoutParams, PreserveParams, Scenario,
};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(scenario) = serde_json::from_slice::<Scenario>(data) else {
        return;
    };
    if let Some(seed) = &scenario.seed {
        let _ = parse_seed(seed);
    }
    let params = scenario.params.clone();
    let _ = serde_json::from_value::<AlphaParams>(params.clone());
    let _ = serde_json::from_value::<EhrhardParams>(params.clone());
    let _ = serde_json::from_value::<EvolveParams>(params.clone());
    let _ = serde_json::from_value::<PreserveParams>(params.clone());
    let _ = serde_json::from_value::<BlValidateParams>(params.clone());
    let _ = serde_json::from_value::<BlPreserveParams>(params.clone());
    let _ = serde_json::from_value::<LayoutParams>(params);
});

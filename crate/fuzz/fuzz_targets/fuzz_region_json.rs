//! Region decoding: arbitrary JSON must either fail to parse, fail
//! validation, or produce a region whose basic queries are total.

#![no_main]

use ehrhard_lab::regions::RegionSet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(region) = serde_json::from_slice::<RegionSet>(data) else {
        return;
    };
    if region.validate().is_err() {
        return;
    }
    let dim = region.dim();
    if dim >= 1 && dim <= 3 {
        let _ = region.contains(&vec![0.25; dim]);
    }
});

//! Grid CSV decoding: the payload carries a JSON sidecar on the first
//! line and the CSV body after it, so the fuzzer can mutate both halves.
//! Decoding must never panic, and accepted grids must round-trip.

#![no_main]

use ehrhard_lab::io::{deficit_field_from_csv, grid_from_csv, grid_to_csv, GridSidecar};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Some((first, rest)) = text.split_once('\n') else {
        return;
    };
    if let Ok(sidecar) = serde_json::from_str::<GridSidecar>(first) {
        if let Ok(grid) = grid_from_csv(rest, &sidecar) {
            let rendered = grid_to_csv(&grid);
            let again = grid_from_csv(&rendered, &GridSidecar::of(&grid))
                .expect("re-encoded grid must decode");
            assert_eq!(again.values.len(), grid.values.len());
        }
    }
    let _ = deficit_field_from_csv(rest);
});

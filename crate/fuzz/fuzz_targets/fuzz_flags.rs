//! CLI flag value parsers must be total over arbitrary strings.

#![no_main]

use ehrhard_lab_cli::{parse_f64_list, parse_grid_spec, parse_index_list, parse_seed};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_f64_list(s);
    let _ = parse_index_list(s);
    let _ = parse_grid_spec(s);
    let _ = parse_seed(s);
    let _ = ehrhard_lab::io::parse_f64(s);
});

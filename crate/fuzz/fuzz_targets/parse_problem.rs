//! Problem-file parser: must never panic, and accepted specs must survive
//! the render → parse round trip unchanged.

#![no_main]

use gkz::problem::{parse_problem, render_problem};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = parse_problem(text) else { return };
    let rendered = render_problem(&spec);
    let again = parse_problem(&rendered).expect("rendered problem re-parses");
    assert_eq!(again, spec);
});

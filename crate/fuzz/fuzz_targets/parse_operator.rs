//! Operator-text parser: must never panic, and accepted operators must
//! survive the render → parse round trip unchanged (the renderer emits the
//! canonical normal-ordered form).

#![no_main]

use gkz::weyl::{parse_operator, render_operator};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(op) = parse_operator(text) else { return };
    let rendered = render_operator(&op);
    let again = parse_operator(&rendered).expect("rendered operator re-parses");
    assert_eq!(again, op);
});

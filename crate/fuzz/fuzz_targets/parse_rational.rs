//! Exact-scalar literals (plain rationals and Gevrey orders, which add
//! `inf`): must never panic, and accepted values must survive
//! display → parse.

#![no_main]

use gkz::gevrey::SValue;
use gkz::Rational;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = text.parse::<Rational>() {
        let again: Rational = r.to_string().parse().expect("canonical form re-parses");
        assert_eq!(again, r);
    }
    if let Ok(s) = text.parse::<SValue>() {
        let again: SValue = s.to_string().parse().expect("canonical form re-parses");
        assert_eq!(again, s);
    }
});

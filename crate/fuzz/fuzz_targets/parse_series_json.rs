//! JSON series decoders: must never panic on arbitrary bytes, and anything
//! they accept must re-encode canonically and decode back to itself.

#![no_main]

use gkz::{FloatSeries, SparseSeries};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(series) = serde_json::from_slice::<SparseSeries>(data) {
        let encoded = serde_json::to_vec(&series).expect("series encodes");
        let again: SparseSeries =
            serde_json::from_slice(&encoded).expect("canonical encoding decodes");
        assert_eq!(again, series);
    }
    if let Ok(series) = serde_json::from_slice::<FloatSeries>(data) {
        let encoded = serde_json::to_vec(&series).expect("float series encodes");
        let again: FloatSeries =
            serde_json::from_slice(&encoded).expect("canonical encoding decodes");
        assert_eq!(again, series);
    }
});

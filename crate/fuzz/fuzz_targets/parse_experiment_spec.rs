#![no_main]

use libfuzzer_sys::fuzz_target;
use navstream::experiment::ExperimentSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = text.parse::<ExperimentSpec>() {
            spec.algorithms().expect("validated algorithms");
        }
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use navstream::environment::{convert_neubot, BandwidthTrace};

fuzz_target!(|data: &[u8]| {
    if let Ok(trace) = convert_neubot(data) {
        assert_eq!(trace.samples().first().map(|s| s.0), Some(0.0));
        BandwidthTrace::parse(&trace.to_csv()).expect("converted trace parses");
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use navstream::environment::BandwidthTrace;

fuzz_target!(|data: &[u8]| {
    if let Ok(trace) = BandwidthTrace::from_csv(data) {
        let end = trace.samples().last().map_or(0.0, |s| s.0);
        assert!(trace.bandwidth_at(end + 1.0) > 0.0);
        assert!(trace.download_time(0.0, 1000.0).is_finite());
    }
});

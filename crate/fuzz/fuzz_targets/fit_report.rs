#![no_main]

use dbchan::pipeline::{emit_report, parse_report, ReportFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for format in [ReportFormat::Csv, ReportFormat::Json] {
        if let Ok(report) = parse_report(data, format) {
            // Accepted reports must round-trip losslessly.
            let bytes = emit_report(&report, format).expect("reports always emit");
            let back = parse_report(&bytes, format).expect("emitted report re-parses");
            assert_eq!(report, back);
        }
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|input: (&str, &[u8])| {
    let (mapping_json, source_csv) = input;
    if let Ok(mapping) = dbchan::pipeline::ColumnMapping::from_json(mapping_json) {
        let mut sink = Vec::new();
        if dbchan::pipeline::convert_mpc_csv(source_csv, &mapping, &mut sink).is_ok() {
            // Converter output always carries the ingest header; the rows
            // may still be rejected, but ingest must handle them cleanly.
            let catalog = dbchan::catalog::Catalog::builtin();
            let _ = dbchan::pipeline::ingest(sink.as_slice(), catalog, true);
        }
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let catalog = dbchan::catalog::Catalog::builtin();
    let _ = dbchan::pipeline::ingest(data, catalog, true);
    let _ = dbchan::pipeline::ingest(data, catalog, false);
});

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(catalog) = dbchan::catalog::Catalog::from_json(text) {
            // Accepted catalogs must survive a serialization round trip.
            let json = catalog.to_json();
            let back =
                dbchan::catalog::Catalog::from_json(&json).expect("emitted catalog JSON re-parses");
            assert_eq!(catalog, back);
        }
    }
});

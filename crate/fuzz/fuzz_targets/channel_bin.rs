#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(h) = dbchan::synth::read_channel_binary(data) {
        // Accepted tensors round-trip bit for bit, NaN payloads included.
        let mut bytes = Vec::new();
        dbchan::synth::write_channel_binary(&mut bytes, &h).expect("tensors always write");
        assert_eq!(bytes.as_slice(), data);
    }
});

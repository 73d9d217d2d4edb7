#![no_main]

use libfuzzer_sys::fuzz_target;
use tinysocp::format::parse_vector_list;

// The first byte is the expected length.
fuzz_target!(|data: &[u8]| {
    let [len, rest @ ..] = data else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let expected = *len as usize % 16;
    if let Ok(v) = parse_vector_list(text, expected) {
        assert_eq!(v.len(), expected);
    }
});

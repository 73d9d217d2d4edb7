#![no_main]

use libfuzzer_sys::fuzz_target;
use tinysocp::format::parse_references;
use tinysocp::ProblemDims;

// First three bytes pick the dimensions, the rest is the document.
fuzz_target!(|data: &[u8]| {
    let [n, m, h, rest @ ..] = data else {
        return;
    };
    let dims = ProblemDims::new(1 + *n as usize % 8, 1 + *m as usize % 4, 2 + *h as usize % 30);
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    if let Ok(refs) = parse_references(text, dims) {
        assert_eq!(refs.x_ref.dim(), dims.n);
        assert_eq!(refs.x_ref.len(), dims.horizon);
        assert_eq!(refs.u_ref.dim(), dims.m);
        assert_eq!(refs.u_ref.len(), dims.horizon - 1);
    }
});

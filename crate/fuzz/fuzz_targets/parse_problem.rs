#![no_main]

use libfuzzer_sys::fuzz_target;
use tinysocp::format::{parse_problem, problem_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // anything accepted must survive a write/read round trip unchanged
    if let Ok(file) = parse_problem(text) {
        let again = parse_problem(&problem_to_json(file.problem.definition(), &file.settings))
            .expect("serialized problem parses");
        assert_eq!(again, file);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // must never panic on malformed input; on success the canonical
    // serialization must reparse to the same matrix
    if let Ok(matrix) = sddkit::io::parse_matrix_market(text) {
        let canonical = sddkit::io::matrix_market_to_string(&matrix);
        let reparsed = sddkit::io::parse_matrix_market(&canonical).expect("canonical form parses");
        assert_eq!(matrix, reparsed);
    }
});

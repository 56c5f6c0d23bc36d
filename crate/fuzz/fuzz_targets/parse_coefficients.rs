#![no_main]

use libfuzzer_sys::fuzz_target;
use noncollide_cli::values::parse_coefficients;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(c) = parse_coefficients(text) {
        for d in 2..6 {
            if let Ok(m) = c.to_matrix(d) {
                assert_eq!((m.nrows(), m.ncols()), (d, d));
            }
        }
    }
});

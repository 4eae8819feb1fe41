//! Result documents: parsing and verification never panic, and every
//! accepted document survives a write/parse round trip unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;
use speedscale::io::ResultFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(result) = ResultFile::parse(text) else { return };
    let again = ResultFile::parse(&result.write()).expect("written result parses");
    assert_eq!(result, again);
    // large embedded instances make verification slow without finding more
    if text.len() <= 4096 {
        let _ = result.verify();
    }
});

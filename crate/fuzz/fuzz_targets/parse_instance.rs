//! Instance documents: parsing and validation never panic, and every
//! accepted document survives a write/parse round trip unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;
use speedscale::io::{read_instance, InstanceFile};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = InstanceFile::parse(text) else { return };
    let again = InstanceFile::parse(&file.write()).expect("written instance parses");
    assert_eq!(file, again);
    assert_eq!(file.digest(), again.digest());
    let _ = read_instance(text, true);
});

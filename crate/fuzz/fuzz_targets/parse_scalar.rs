//! Rational literals: parsing never panics and formatting is a fixed point.

#![no_main]

use libfuzzer_sys::fuzz_target;
use speedscale::scalar;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(value) = scalar::parse(text) else { return };
    let shown = scalar::format(&value);
    assert_eq!(scalar::parse(&shown).as_ref(), Ok(&value));
});

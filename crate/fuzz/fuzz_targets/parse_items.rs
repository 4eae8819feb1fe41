//! Knapsack item lists: parsing never panics and accepted items are positive.

#![no_main]

use libfuzzer_sys::fuzz_target;
use speedscale::io::parse_items;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(items) = parse_items(text) else { return };
    assert!(!items.is_empty());
    assert!(items.iter().all(|&(value, size)| value > 0 && size > 0));
    let written: Vec<String> = items.iter().map(|(v, s)| format!("{v}:{s}")).collect();
    assert_eq!(parse_items(&written.join(",")).unwrap(), items);
});

#![no_main]

use flipkljn_cli::cache::{parse_cache, HEADER};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(entries) = parse_cache(text) else {
        return;
    };
    let mut rendered = format!("{HEADER}\n");
    for e in &entries {
        rendered.push_str(&e.to_line());
        rendered.push('\n');
    }
    let again = parse_cache(&rendered).expect("rendered cache reparses");
    assert_eq!(entries.len(), again.len());
    for (a, b) in entries.iter().zip(&again) {
        assert_eq!(a.to_line(), b.to_line());
    }
});

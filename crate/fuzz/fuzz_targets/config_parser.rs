#![no_main]

use flipkljn_cli::config::{parse_config, render_config};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(map) = parse_config(text) else {
        return;
    };
    // Whatever parses must survive a render and reparse unchanged.
    let entries: Vec<(&str, String)> = map.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    let again = parse_config(&render_config(&entries)).expect("rendered config reparses");
    assert_eq!(map, again);
});

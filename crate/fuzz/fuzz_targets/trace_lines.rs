#![no_main]

use circulant_collectives::formats::{parse_trace, trace_to_lines};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok((meta, events)) = parse_trace(text) else { return };
    let (meta2, events2) = parse_trace(&trace_to_lines(&meta, &events)).expect("renders parse");
    assert_eq!(meta2, meta);
    assert_eq!(events2, events);
});

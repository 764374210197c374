#![no_main]

use circulant_collectives::formats::ScheduleDoc;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = ScheduleDoc::from_csv(text) else { return };
    let again = ScheduleDoc::from_csv(&doc.to_csv()).expect("rendered docs parse");
    assert_eq!(again, doc);
});

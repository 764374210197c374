#![no_main]

use circulant_collectives::formats::ScheduleDoc;
use circulant_collectives::verify_document;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = ScheduleDoc::from_json(text) else { return };
    // Anything that validates must verify without panicking and survive a
    // render round-trip.
    let _ = verify_document(&doc);
    let again = ScheduleDoc::from_json(&doc.to_json()).expect("rendered docs parse");
    assert_eq!(again, doc);
});

#![no_main]

use circulant_collectives::formats::{bench_rows_to_csv, parse_bench_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(rows) = parse_bench_csv(text) else { return };
    // Float rendering is shortest round-trip form, so values survive exactly
    // unless the input held NaN (which compares unequal by definition).
    if rows
        .iter()
        .any(|r| r.total_seconds.is_nan() || r.per_rank_us.is_nan())
    {
        return;
    }
    let again = parse_bench_csv(&bench_rows_to_csv(&rows)).expect("rendered rows parse");
    assert_eq!(again, rows);
});

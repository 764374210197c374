#![no_main]

use circulant_collectives::{
    recv_schedule_with_stats, send_schedule_with_stats, Topology,
};
use libfuzzer_sys::fuzz_target;

// Schedule computation over fuzzer-chosen (p, r): must never panic, and the
// structural bounds must hold for every input.
fuzz_target!(|data: &[u8]| {
    if data.len() < 8 {
        return;
    }
    let p = 1 + u32::from_le_bytes(data[0..4].try_into().unwrap()) as usize % (1 << 16);
    let r = u32::from_le_bytes(data[4..8].try_into().unwrap()) as usize % p;

    let topo = Topology::new(p).expect("p >= 1");
    let q = topo.q();
    let (recv, stats) = recv_schedule_with_stats(&topo, r).expect("rank in range");
    assert!(stats.recursions < (q as u32).max(1));
    assert!(stats.scans <= 2 * q as u32 + stats.recursions);
    assert_eq!(recv.blocks.len(), q);

    let (send, sstats) = send_schedule_with_stats(&topo, r).expect("rank in range");
    assert!(sstats.violations <= 4);
    if r > 0 && q > 0 {
        assert_eq!(send.blocks[0], recv.baseblock as i32 - q as i32);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use switchstab::criteria::{adt_supremum, budget_supremum, mdadt_supremum};
use switchstab::family::{Partition, SubsystemId, TransitionGraph};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(signal) = switchstab::io::parse_signal(text) else {
        return;
    };
    // Per-mode tables are sized by the largest id.
    let n = signal.max_mode().get() as usize;
    if n > 64 {
        return;
    }
    let graph = TransitionGraph::complete(n);
    let partition = Partition::new(
        (0..n).step_by(2).map(SubsystemId::from_index),
        (1..n).step_by(2).map(SubsystemId::from_index),
    );
    let t = signal.horizon();
    let stats = signal.stats_at(t, &graph).unwrap();
    assert!(stats.eta.iter().all(|e| (0.0..=1.0 + 1e-12).contains(e)));
    assert_eq!(stats.switches, signal.switch_count());
    let _ = signal.tail_ratio(t, &partition);
    let adt = adt_supremum(&signal, 1.0);
    assert!(adt.value >= 0.0 && adt.value <= signal.switch_count() as f64);
    let _ = mdadt_supremum(&signal, &vec![1.0; n]).unwrap();
    assert!(budget_supremum(&signal, &partition, 0.5).value >= 0.0);
});

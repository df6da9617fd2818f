#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = switchstab::io::read_csv_table(data) {
        for h in &table.headers {
            let _ = table.column(h);
        }
    }
});

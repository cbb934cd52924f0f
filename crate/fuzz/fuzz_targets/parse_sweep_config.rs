#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(cfg) = modstab::config::parse_sweep(data) {
        assert!(cfg.axes.cells() <= cfg.cap);
    }
});

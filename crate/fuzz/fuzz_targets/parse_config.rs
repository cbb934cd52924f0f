#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(cfg) = modstab::config::parse_experiment(data) {
        let _ = cfg.phi();
        let _ = cfg.grid.build();
    }
});

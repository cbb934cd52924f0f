#![no_main]
use libfuzzer_sys::fuzz_target;

use modstab_core::ModularSpec;

fuzz_target!(|data: &str| {
    if let Ok(spec) = data.parse::<ModularSpec>() {
        let again: ModularSpec = spec.to_string().parse().expect("display output reparses");
        assert_eq!(again, spec);
        let _ = spec.eval(1.5);
    }
});

#![no_main]
use libfuzzer_sys::fuzz_target;

use modstab_core::FunctionHandle;

fuzz_target!(|data: &str| {
    if let Ok(f) = FunctionHandle::parse(data, 3) {
        let again = FunctionHandle::parse(f.description(), 3).expect("description reparses");
        let (a, b) = (f.eval(0.75), again.eval(0.75));
        assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
    }
});

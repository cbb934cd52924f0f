#![no_main]
use libfuzzer_sys::fuzz_target;

use modstab_core::{Control, ControlFunction};

fuzz_target!(|data: &str| {
    if let Ok(alpha) = data.parse::<ControlFunction>() {
        let again: ControlFunction = alpha.to_string().parse().expect("display output reparses");
        assert_eq!(again, alpha);
        assert!(alpha.eval(1.0, -2.0, 0.5) >= 0.0);
    }
});

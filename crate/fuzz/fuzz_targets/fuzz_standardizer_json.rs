#![no_main]
use libfuzzer_sys::fuzz_target;
use anxscreen::features::Standardizer;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = serde_json::from_str::<Standardizer>(text) {
        if s.validate().is_ok() {
            let x = vec![1.0; s.width()];
            let z = s.apply(&x);
            assert_eq!(z.len(), s.width());
        }
    }
});

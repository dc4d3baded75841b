#![no_main]
use libfuzzer_sys::fuzz_target;
use anxscreen::model::LogisticModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = serde_json::from_str::<LogisticModel>(text) {
        if model.validate().is_ok() {
            // a structurally valid model must be able to predict
            let x = vec![0.0; model.feature_names.len()];
            let p = model.predict_proba(&x);
            assert!(p.is_nan() || (0.0..=1.0).contains(&p));
        }
    }
});

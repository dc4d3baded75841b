#![no_main]
use libfuzzer_sys::fuzz_target;
use anxscreen::features::{extract_features, preprocess, tokenize};
use anxscreen::sentiment::{PolarityLexicon, SentimentConfig, ValenceLexicon};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let cleaned = preprocess(text);
    assert_eq!(cleaned, cleaned.to_lowercase());
    let tokens = tokenize(&cleaned);
    assert!(tokens.iter().all(|t| !t.is_empty()));
    let valence = ValenceLexicon::demo();
    let polarity = PolarityLexicon::demo();
    if let Ok(fv) = extract_features(text, &valence, &polarity, &SentimentConfig::default()) {
        assert!(fv.word_count >= 1.0);
        assert!((fv.sent_neg + fv.sent_neu + fv.sent_pos - 1.0).abs() < 1e-9);
        assert!(fv.sent_compound.abs() < 1.0);
        assert!((0.0..=1.0).contains(&fv.punct_density));
        assert!((fv.first_person_rate - 100.0 * fv.first_person_count / fv.word_count).abs() < 1e-12);
    }
});

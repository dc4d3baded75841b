#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(lex) = anxscreen::sentiment::PolarityLexicon::parse(text) {
        for line in text.lines() {
            if let Some((term, _)) = line.split_once('\t') {
                if let Some((p, s)) = lex.lookup(term.trim().to_lowercase().as_str()) {
                    assert!((-1.0..=1.0).contains(&p));
                    assert!((0.0..=1.0).contains(&s));
                }
            }
        }
    }
});

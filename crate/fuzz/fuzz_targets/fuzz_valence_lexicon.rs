#![no_main]
use libfuzzer_sys::fuzz_target;

// The three valence-side sections are separated by 0x1E record separators.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut sections = text.splitn(3, '\x1e');
    let valence = sections.next().unwrap_or("");
    let boosters = sections.next().unwrap_or("");
    let negations = sections.next().unwrap_or("");
    if let Ok(lex) = anxscreen::sentiment::ValenceLexicon::parse(valence, boosters, negations) {
        // accepted lexicons only hold in-range valences
        for line in valence.lines() {
            if let Some((term, _)) = line.split_once('\t') {
                if let Some(v) = lex.valence_of(term.trim().to_lowercase().as_str()) {
                    assert!((-4.0..=4.0).contains(&v));
                }
            }
        }
    }
});

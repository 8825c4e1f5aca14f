//! Fuzz the counter-action table parser: tab-separated predicate
//! mappings must parse or error cleanly, and a parsed table must answer
//! lookups for every predicate it accepted.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sgkit::target_gen::{counter_action, CounterActionTable};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = CounterActionTable::parse(text) {
        // Lookups through the parsed table must never panic, known
        // predicate or not.
        let _ = counter_action("hold", &table);
        for line in text.lines().take(64) {
            if let Some((predicate, _)) = line.split_once('\t') {
                let _ = counter_action(predicate, &table);
            }
        }
    }
});

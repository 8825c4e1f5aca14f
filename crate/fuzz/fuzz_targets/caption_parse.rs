//! Fuzz the caption parser and the prompt builder behind it: any text
//! must parse without panicking, and every extracted triplet must be
//! well-formed enough to build grounding prompts.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sgkit::target_gen::{build_prompts, parse_caption, CounterActionTable};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for triplet in parse_caption(text) {
        assert!(!triplet.subject.is_empty());
        assert!(!triplet.predicate.is_empty());
        assert!(!triplet.object.is_empty());
        let prompts = build_prompts(&triplet, CounterActionTable::builtin());
        assert!(prompts.forward.contains(&triplet.predicate));
        assert!(!prompts.reverse.is_empty());
    }
});

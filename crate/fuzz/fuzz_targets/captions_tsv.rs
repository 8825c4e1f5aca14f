//! Fuzz the captions-file parser: `image_id<TAB>caption` lines must
//! parse or error cleanly, and accepted ids must be filesystem-safe
//! (they name scene-script files).

#![no_main]

use libfuzzer_sys::fuzz_target;
use sgkit_cli::commands::parse_captions_str;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(captions) = parse_captions_str(text) {
        for id in captions.keys() {
            assert!(!id.is_empty());
            assert!(id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'));
        }
    }
});

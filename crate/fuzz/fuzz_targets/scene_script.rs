//! Fuzz the scene-script decoder: arbitrary JSON must produce either a
//! valid scripted grounder or an error, and a grounder that parsed must
//! answer any phrase without panicking.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sgkit::target_gen::{Grounder, ScriptedGrounder};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grounder) = ScriptedGrounder::from_script_str(text) {
        assert!(!grounder.scene_id().is_empty());
        for (bbox, conf) in grounder.ground_phrase("man hold surfboard").unwrap() {
            assert!(bbox.validate().is_ok());
            assert!((0.0..=1.0).contains(&conf));
        }
    }
});

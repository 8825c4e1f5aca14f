//! Fuzz the run-config decoder: arbitrary JSON must deserialize into a
//! config or fail cleanly, and a config that parsed must re-serialize
//! (the CLI hashes the effective config by serializing it back).

#![no_main]

use libfuzzer_sys::fuzz_target;
use sgkit_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = serde_json::from_str::<RunConfig>(text) {
        let round_tripped = serde_json::to_string(&config).expect("parsed configs re-serialize");
        let _ = serde_json::from_str::<RunConfig>(&round_tripped)
            .expect("re-serialized configs parse back");
    }
});

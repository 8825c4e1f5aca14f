//! Fuzz the fixture decoder: arbitrary JSON text must either parse into
//! a fully validated fixture or return an error — never panic, and
//! never produce a fixture that violates its own invariants.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(fixture) = sgkit::fixture::fixture_from_str(text) {
        for graph in &fixture.graphs {
            for node in graph.nodes() {
                assert!(node.class_id < fixture.vocabulary.n_objects());
                assert!(node.bbox.validate().is_ok());
            }
            for edge in graph.edges() {
                assert!(edge.relation < fixture.vocabulary.n_relations());
                assert!(edge.subject < graph.nodes().len());
                assert!(edge.object < graph.nodes().len());
            }
        }
        for matrix in fixture.embeddings.values() {
            assert_eq!(matrix.rows() * matrix.dim(), matrix.as_slice().len());
            assert!(matrix.as_slice().iter().all(|v| v.is_finite()));
        }
    }
});

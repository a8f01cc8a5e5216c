#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(graph) = sddkit::io::parse_graph_text(text) {
        // parsed graphs satisfy the Laplacian structure invariants
        let ones = vec![1.0; graph.n()];
        let row_sums = graph.laplacian_apply(&ones).expect("matching dimension");
        assert!(row_sums.iter().all(|v| v.abs() < 1e-9));
        let canonical = sddkit::io::graph_to_string(&graph);
        let reparsed = sddkit::io::parse_graph_text(&canonical).expect("canonical form parses");
        assert_eq!(graph, reparsed);
    }
});

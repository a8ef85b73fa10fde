//! Disruption scores on a hand-built graph.
//!
//! Paper F cites R1 and R2. Three later papers cite only F, one cites F and
//! R2, and one cites only R1, so D = (3 - 1) / 5.

use innovation_peaks::disruption::{disruption_score, DisruptionParams};
use innovation_peaks::graph::CitationGraph;
use innovation_peaks::ingest::PaperRecord;

fn paper(id: &str, year: i32, refs: &[&str]) -> PaperRecord {
    PaperRecord {
        paper_id: id.into(),
        year,
        author_ids: vec![],
        reference_ids: refs.iter().map(|r| r.to_string()).collect(),
    }
}

fn main() {
    let records = vec![
        paper("R1", 1990, &[]),
        paper("R2", 1990, &[]),
        paper("F", 2000, &["R1", "R2"]),
        paper("I0", 2003, &["F"]),
        paper("I1", 2003, &["F"]),
        paper("I2", 2004, &["F"]),
        paper("J0", 2004, &["F", "R2"]),
        paper("K0", 2005, &["R1"]),
    ];
    let g = CitationGraph::build(&records);
    let params = DisruptionParams::for_graph(&g);
    for id in ["F", "R1", "I0"] {
        let r = disruption_score(&g, g.index_of(id).unwrap(), params).unwrap();
        println!(
            "{id}: n_i={} n_j={} n_k={} score={:?} ({})",
            r.n_i,
            r.n_j,
            r.n_k,
            r.score,
            r.status.as_str()
        );
    }
}

//! Parse a json-lines corpus, build the citation graph and round-trip its snapshot.
//!
//! `cargo run --example ingest_corpus [corpus.jsonl]`; without an argument a
//! small synthetic corpus is written to a temporary file first.

use std::fs::File;
use std::path::PathBuf;

use innovation_peaks::graph::CitationGraph;
use innovation_peaks::ingest::{parse_corpus, write_json_lines, CorpusFormat, YearRange};
use innovation_peaks::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let p = std::env::temp_dir().join("innovation_peaks_example.jsonl");
            let corpus = generate(&SynthConfig {
                n_authors: 50,
                ..Default::default()
            })?;
            write_json_lines(&corpus.records, File::create(&p)?)?;
            p
        }
    };
    let (records, stats) = parse_corpus(&path, CorpusFormat::JsonLines, YearRange::default())?;
    println!("{}", serde_json::to_string_pretty(&stats)?);

    let g = CitationGraph::build(&records);
    let mut bytes = Vec::new();
    g.write_snapshot(&mut bytes)?;
    let back = CitationGraph::read_snapshot(bytes.as_slice())?;
    println!(
        "{} papers, {} edges, {} authors; snapshot {} bytes, round trip ok: {}",
        g.num_papers(),
        g.num_edges(),
        g.num_authors(),
        bytes.len(),
        back.num_edges() == g.num_edges()
    );
    Ok(())
}

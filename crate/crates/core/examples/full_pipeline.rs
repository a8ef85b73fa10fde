//! Every stage from a synthetic corpus to report.json, as the `run`
//! subcommand does it.
//!
//! `cargo run --release --example full_pipeline [out-dir]`

use std::fs::File;
use std::path::PathBuf;

use innovation_peaks::ingest::write_json_lines;
use innovation_peaks::pipeline::{run_all, RunConfig, REPORT};
use innovation_peaks::synth::{generate, InnovationProfile, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "pipeline_out".into()),
    );
    std::fs::create_dir_all(&out)?;
    let input = out.join("corpus.jsonl");
    let corpus = generate(&SynthConfig {
        n_authors: 800,
        profile: InnovationProfile::FrontLoaded { decay: 0.1 },
        ..Default::default()
    })?;
    write_json_lines(&corpus.records, File::create(&input)?)?;

    let cfg = RunConfig {
        input: Some(input),
        out: out.clone(),
        replicates: 3,
        ..Default::default()
    };
    for m in run_all(&cfg)? {
        println!("{:<8} {} outputs", m.stage, m.outputs.len());
    }
    println!("report: {}", out.join(REPORT).display());
    Ok(())
}

//! Peaks and phase averages of careers from a synthetic corpus with a planted
//! peak year.

use innovation_peaks::careers::{
    apply_cohort_filter, assemble_careers, find_peak, phase_averages, CareerOptions, PhaseMode,
};
use innovation_peaks::disruption::{score_all, DisruptionParams};
use innovation_peaks::graph::CitationGraph;
use innovation_peaks::synth::{generate, InnovationProfile, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        n_authors: 300,
        profile: InnovationProfile::MagicYear { boost: 0.9 },
        ..Default::default()
    };
    let corpus = generate(&cfg)?;
    let g = CitationGraph::build(&corpus.records);
    let scores = score_all(&g, DisruptionParams::for_graph(&g));
    let careers = apply_cohort_filter(
        assemble_careers(&g, &scores, &CareerOptions::default()),
        &cfg.cohort_filter(),
    );
    println!("{} careers in the cohort", careers.len());

    let mut hits = 0;
    for planted in &corpus.careers {
        let Some(c) = careers.get(&planted.author_id) else {
            continue;
        };
        if Some(find_peak(c)?.peak_year) == planted.magic_year {
            hits += 1;
        }
    }
    println!("peak year equals the planted year in {hits} careers");

    for (id, c) in careers.iter().take(5) {
        let peak = find_peak(c)?;
        match phase_averages(c, PhaseMode::Window(2)) {
            Ok(ph) => println!(
                "{id}: {}-{} peak {} ({:+.3}) bpy {:?} py {:?} apy {:?}",
                c.first_year,
                c.last_year,
                peak.peak_year,
                peak.peak_score,
                ph.bpy,
                ph.py_excl,
                ph.apy
            ),
            // first- or last-year peaks have no before or after phase
            Err(e) => println!("{id}: peak {} skipped ({e})", peak.peak_year),
        }
    }
    Ok(())
}

//! Standardized effort models on an effort-coupled synthetic cohort, printed
//! as a coefficient table.

use innovation_peaks::careers::{apply_cohort_filter, assemble_careers, CareerOptions};
use innovation_peaks::disruption::{score_all, DisruptionParams};
use innovation_peaks::graph::CitationGraph;
use innovation_peaks::regress::{
    build_rows, fit_models, write_table_csv, Dependent, ImpactAggregate, Variant,
};
use innovation_peaks::synth::{generate, InnovationProfile, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        n_authors: 1500,
        profile: InnovationProfile::EffortCoupled {
            strength: 3.0,
            impact_strength: 1.0,
        },
        ..Default::default()
    };
    let corpus = generate(&cfg)?;
    let g = CitationGraph::build(&corpus.records);
    let scores = score_all(&g, DisruptionParams::for_graph(&g));
    let careers = apply_cohort_filter(
        assemble_careers(&g, &scores, &CareerOptions::default()),
        &cfg.cohort_filter(),
    );
    let (rows, diag) = build_rows(&careers, Variant::PeakOnly, ImpactAggregate::Mean);
    eprintln!("{diag:?}");
    for dep in [Dependent::Innovation, Dependent::Impact] {
        println!("# {dep:?}");
        let models = fit_models(&rows, dep, Variant::PeakOnly)?;
        write_table_csv(&models, std::io::stdout())?;
    }
    Ok(())
}

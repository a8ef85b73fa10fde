//! Observed vs shuffled time to peak for iid and front-loaded cohorts.

use innovation_peaks::careers::{apply_cohort_filter, assemble_careers, CareerOptions};
use innovation_peaks::disruption::{score_all, DisruptionParams};
use innovation_peaks::graph::CitationGraph;
use innovation_peaks::nullmodel::{null_distributions, observed_peaks, ShuffleConfig};
use innovation_peaks::pipeline::compare_peaks;
use innovation_peaks::synth::{generate, InnovationProfile, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for profile in [
        InnovationProfile::Iid,
        InnovationProfile::FrontLoaded { decay: 0.1 },
    ] {
        let cfg = SynthConfig {
            n_authors: 1000,
            profile,
            ..Default::default()
        };
        let corpus = generate(&cfg)?;
        let g = CitationGraph::build(&corpus.records);
        let scores = score_all(&g, DisruptionParams::for_graph(&g));
        let careers = apply_cohort_filter(
            assemble_careers(&g, &scores, &CareerOptions::default()),
            &cfg.cohort_filter(),
        );
        let obs = observed_peaks(&careers).time_to_peak();
        let null = null_distributions(
            &careers,
            &ShuffleConfig {
                seed: 1,
                replicates: 5,
            },
        );
        let cmp = compare_peaks(&obs, &null.time_to_peak());
        println!(
            "{profile:?}: observed {:.2} null {:.2} KS p {:.3e} MWU(less) p {:.3e}",
            cmp.observed.unwrap().mean,
            cmp.null.unwrap().mean,
            cmp.ks.unwrap().p_value,
            cmp.mwu_less.unwrap().p_value
        );
    }
    Ok(())
}

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use innovation_peaks::ingest::{write_csv_pair, write_json_lines, CorpusFormat};
use innovation_peaks::pipeline::{self, PhaseWindow, PipelineError, RunConfig};
use innovation_peaks::regress::{ImpactAggregate, Variant};
use innovation_peaks::synth::{generate, InnovationProfile, SynthConfig};

/// Innovation peaks in scientific careers: disruption scoring, career peaks,
/// null model, phase averages and effort regressions over a citation corpus.
#[derive(Parser)]
#[command(name = "innovation-peaks", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic corpus with planted innovation dynamics.
    Synth(SynthArgs),
    /// Parse a corpus into a graph snapshot.
    Ingest(StageArgs),
    /// Disruption score of every paper.
    Score(StageArgs),
    /// Assemble careers and apply the cohort filter.
    Careers(StageArgs),
    /// Observed vs shuffled peak timing.
    Null(StageArgs),
    /// Before/at/after peak-year averages.
    Phases(StageArgs),
    /// Standardized OLS models for innovation and impact.
    Regress(StageArgs),
    /// Bundle all summaries into report.json.
    Report(StageArgs),
    /// All stages in order.
    Run(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    format: Option<CorpusFormat>,
    #[arg(long)]
    min_window: Option<i32>,
    #[arg(long)]
    horizon: Option<i32>,
    #[arg(long)]
    include_same_year: bool,
    #[arg(long)]
    citation_window: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u32>,
    /// `full` or `2`; both when omitted.
    #[arg(long)]
    phase_window: Option<PhaseWindow>,
    /// `peak-only` or `peak-plus-prepeak`.
    #[arg(long)]
    variant: Option<Variant>,
    /// `mean` or `sum`.
    #[arg(long)]
    impact_agg: Option<ImpactAggregate>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    start_min: Option<i32>,
    #[arg(long)]
    start_max: Option<i32>,
    #[arg(long)]
    min_span: Option<i32>,
    #[arg(long)]
    min_papers: Option<usize>,
    #[arg(long)]
    max_gap: Option<i32>,
}

impl StageArgs {
    fn into_config(self) -> Result<RunConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| {
                    PipelineError::InvalidParams(format!("config {}: {e}", p.display()))
                })?;
                serde_json::from_str(&text).map_err(|e| {
                    PipelineError::InvalidParams(format!("config {}: {e}", p.display()))
                })?
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        set!(
            format => cfg.format,
            min_window => cfg.min_window,
            citation_window => cfg.citation_window,
            seed => cfg.seed,
            replicates => cfg.replicates,
            variant => cfg.variant,
            impact_agg => cfg.impact_agg,
            out => cfg.out,
            start_min => cfg.cohort.start_min,
            start_max => cfg.cohort.start_max,
            min_span => cfg.cohort.min_span,
            min_papers => cfg.cohort.min_papers,
            max_gap => cfg.cohort.max_gap,
        );
        if self.input.is_some() {
            cfg.input = self.input;
        }
        if self.horizon.is_some() {
            cfg.horizon = self.horizon;
        }
        if self.phase_window.is_some() {
            cfg.phase_window = self.phase_window;
        }
        cfg.include_same_year |= self.include_same_year;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileKind {
    Iid,
    FrontLoaded,
    MagicYear,
    EffortCoupled,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON synthetic configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (json-lines) or directory (csv-pair).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "json-lines")]
    format: CorpusFormat,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    authors: Option<usize>,
    #[arg(long, value_enum)]
    profile: Option<ProfileKind>,
    #[arg(long, default_value_t = 0.1)]
    decay: f64,
    #[arg(long, default_value_t = 0.9)]
    boost: f64,
    #[arg(long, default_value_t = 3.0)]
    strength: f64,
    #[arg(long, default_value_t = 1.0)]
    impact_strength: f64,
    #[arg(long)]
    violation_rate: Option<f64>,
    #[arg(long)]
    papers_per_year: Option<u32>,
    #[arg(long)]
    refs_per_paper: Option<f64>,
    /// Also write the planted per-career ground truth as JSON.
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn synth(args: SynthArgs) -> Result<(), PipelineError> {
    let mut cfg: SynthConfig = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                PipelineError::InvalidParams(format!("config {}: {e}", p.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| PipelineError::InvalidParams(format!("config {}: {e}", p.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.authors {
        cfg.n_authors = v;
    }
    if let Some(v) = args.violation_rate {
        cfg.violation_rate = v;
    }
    if let Some(v) = args.refs_per_paper {
        cfg.refs_per_paper = v;
    }
    if args.papers_per_year.is_some() {
        cfg.papers_per_year = args.papers_per_year;
    }
    if let Some(p) = args.profile {
        cfg.profile = match p {
            ProfileKind::Iid => InnovationProfile::Iid,
            ProfileKind::FrontLoaded => InnovationProfile::FrontLoaded { decay: args.decay },
            ProfileKind::MagicYear => InnovationProfile::MagicYear { boost: args.boost },
            ProfileKind::EffortCoupled => InnovationProfile::EffortCoupled {
                strength: args.strength,
                impact_strength: args.impact_strength,
            },
        };
    }
    let corpus = generate(&cfg).map_err(|e| PipelineError::InvalidParams(e.to_string()))?;
    let io = |p: &PathBuf| {
        let p = p.clone();
        move |e: std::io::Error| PipelineError::Io { path: p, source: e }
    };
    match args.format {
        CorpusFormat::JsonLines => {
            if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(io(&args.out))?;
            }
            let f = File::create(&args.out).map_err(io(&args.out))?;
            write_json_lines(&corpus.records, f).map_err(io(&args.out))?;
        }
        CorpusFormat::CsvPair => {
            fs::create_dir_all(&args.out).map_err(io(&args.out))?;
            write_csv_pair(&corpus.records, &args.out).map_err(io(&args.out))?;
        }
    }
    if let Some(t) = &args.truth {
        let f = BufWriter::new(File::create(t).map_err(io(t))?);
        serde_json::to_writer_pretty(f, &corpus.careers).map_err(|e| PipelineError::Io {
            path: t.clone(),
            source: e.into(),
        })?;
    }
    eprintln!(
        "wrote {} papers for {} researchers to {}",
        corpus.records.len(),
        corpus.careers.len(),
        args.out.display()
    );
    Ok(())
}

fn dispatch(cmd: Cmd) -> Result<(), PipelineError> {
    let (stage, args): (fn(&RunConfig) -> Result<_, _>, StageArgs) = match cmd {
        Cmd::Synth(a) => return synth(a),
        Cmd::Run(a) => {
            let cfg = a.into_config()?;
            for m in pipeline::run_all(&cfg)? {
                eprintln!("{}: {} outputs", m.stage, m.outputs.len());
            }
            return Ok(());
        }
        Cmd::Ingest(a) => (pipeline::ingest, a),
        Cmd::Score(a) => (pipeline::score, a),
        Cmd::Careers(a) => (pipeline::careers, a),
        Cmd::Null(a) => (pipeline::null, a),
        Cmd::Phases(a) => (pipeline::phases, a),
        Cmd::Regress(a) => (pipeline::regress, a),
        Cmd::Report(a) => (pipeline::report, a),
    };
    let m = stage(&args.into_config()?)?;
    eprintln!("{}: {} outputs", m.stage, m.outputs.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! File-based pipeline stages behind the command-line tool.
//!
//! Every stage reads its predecessors' artifacts from the output directory,
//! writes its own files, and finishes with `manifest_<stage>.json`: parameters,
//! tool version, input files and SHA-256 hashes of everything it wrote.
//! Manifests carry no timestamps, so equal inputs give equal manifests.
//!
//! | stage    | reads                        | writes                                          |
//! |----------|------------------------------|-------------------------------------------------|
//! | ingest   | corpus                       | `graph.bin`, `ingest_stats.json`                |
//! | score    | `graph.bin`                  | `scores.csv`, `score_summary.json`              |
//! | careers  | `graph.bin`, `scores.csv`    | `careers.jsonl`, `careers_summary.csv`, `cohort.json` |
//! | null     | `careers.jsonl`              | peak samples, histograms, `null_summary.json`   |
//! | phases   | `careers.jsonl`              | per-career phase averages, histograms, `phases_summary.json` |
//! | regress  | `careers.jsonl`              | rows, model JSON, tables, coefficient plot data |
//! | report   | all summaries                | `report.json`                                   |

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::careers::{
    apply_cohort_filter, assemble_careers, find_peak, phase_averages, Career, CareerOptions,
    CoauthorCount, CohortFilter, PhaseMode,
};
use crate::disruption::{read_scores_csv, score_all, write_scores_csv, DisruptionParams};
use crate::graph::CitationGraph;
use crate::ingest::{parse_corpus, validate_corpus, CorpusFormat, YearRange};
use crate::nullmodel::{
    log1p_all, null_distributions, observed_peaks, paired_histograms, Histogram, PeakSamples,
    ShuffleConfig,
};
use crate::regress::{
    build_rows, fit_models, stars, write_coefficient_plot_csv, write_table_csv, Dependent,
    ImpactAggregate, RegressionResult, RegressionRow, Variant,
};
use crate::stats::{ks_two_sample, mean_and_se, mwu, Sidedness, Summary, TestResult};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

pub const GRAPH: &str = "graph.bin";
pub const INGEST_STATS: &str = "ingest_stats.json";
pub const SCORES: &str = "scores.csv";
pub const SCORE_SUMMARY: &str = "score_summary.json";
pub const CAREERS: &str = "careers.jsonl";
pub const CAREERS_SUMMARY: &str = "careers_summary.csv";
pub const COHORT: &str = "cohort.json";
pub const NULL_SUMMARY: &str = "null_summary.json";
pub const PHASES_SUMMARY: &str = "phases_summary.json";
pub const REPORT: &str = "report.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing upstream artifact {}: {hint}", path.display())]
    MissingArtifact { path: PathBuf, hint: String },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("bad input: {0}")]
    Input(String),
    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::MissingArtifact { .. } => 2,
            PipelineError::InvalidParams(_) => 3,
            PipelineError::Invariant(_) => 4,
            PipelineError::Input(_) | PipelineError::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseWindow {
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "2")]
    Two,
}

impl FromStr for PhaseWindow {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(PhaseWindow::Full),
            "2" => Ok(PhaseWindow::Two),
            _ => Err(PipelineError::InvalidParams(format!(
                "phase window `{s}` (expected full or 2)"
            ))),
        }
    }
}

/// Declarative configuration for every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: CorpusFormat,
    pub min_window: i32,
    /// Defaults to the latest publication year in the corpus.
    pub horizon: Option<i32>,
    pub include_same_year: bool,
    pub citation_window: u32,
    pub cohort: CohortFilter,
    pub coauthors: CoauthorCount,
    pub seed: u64,
    pub replicates: u32,
    /// Both modes when unset.
    pub phase_window: Option<PhaseWindow>,
    pub variant: Variant,
    pub impact_agg: ImpactAggregate,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            format: CorpusFormat::JsonLines,
            min_window: 5,
            horizon: None,
            include_same_year: false,
            citation_window: 5,
            cohort: CohortFilter::default(),
            coauthors: CoauthorCount::ExcludeSelf,
            seed: 0,
            replicates: 1,
            phase_window: None,
            variant: Variant::PeakOnly,
            impact_agg: ImpactAggregate::Mean,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::InvalidParams(m));
        if !(0..=100).contains(&self.min_window) {
            return bad(format!("min-window {} outside [0, 100]", self.min_window));
        }
        if let Some(h) = self.horizon {
            if !(1000..=3000).contains(&h) {
                return bad(format!("horizon {h} outside [1000, 3000]"));
            }
        }
        if !(1..=100).contains(&self.citation_window) {
            return bad(format!(
                "citation window {} outside [1, 100]",
                self.citation_window
            ));
        }
        if !(1..=10_000).contains(&self.replicates) {
            return bad(format!("replicates {} outside [1, 10000]", self.replicates));
        }
        self.cohort
            .validate()
            .map_err(|e| PipelineError::InvalidParams(e.to_string()))?;
        if let Some(input) = &self.input {
            if !input.exists() {
                return bad(format!("input {} does not exist", input.display()));
            }
        }
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn require(&self, name: &str, producer: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(PipelineError::MissingArtifact {
                path: p,
                hint: format!("run `innovation-peaks {producer}` with the same --out first"),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    pub parameters: Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(io_err(path))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn manifest_name(stage: &str) -> String {
    format!("manifest_{stage}.json")
}

pub fn read_manifest(out: &Path, stage: &str) -> Result<Manifest> {
    let p = out.join(manifest_name(stage));
    let f = File::open(&p).map_err(io_err(&p))?;
    serde_json::from_reader(BufReader::new(f))
        .map_err(|e| PipelineError::Input(format!("{}: {e}", p.display())))
}

fn write_manifest(
    cfg: &RunConfig,
    stage: &str,
    parameters: Value,
    inputs: &[(String, PathBuf)],
    outputs: &[String],
) -> Result<Manifest> {
    let inputs = inputs
        .iter()
        .map(|(label, p)| {
            Ok(FileHash {
                path: label.clone(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let outputs = outputs
        .iter()
        .map(|name| {
            Ok(FileHash {
                path: name.clone(),
                sha256: sha256_file(&cfg.path(name))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let m = Manifest {
        stage: stage.into(),
        tool_version: TOOL_VERSION.into(),
        parameters,
        inputs,
        outputs,
    };
    write_json(&cfg.path(&manifest_name(stage)), &m)?;
    Ok(m)
}

fn upstream(cfg: &RunConfig, names: &[&str]) -> Vec<(String, PathBuf)> {
    names.iter().map(|n| (n.to_string(), cfg.path(n))).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path)(e.into()))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn read_json(path: &Path) -> Result<Value> {
    let f = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(f))
        .map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> PipelineError + '_ {
    move |e| PipelineError::Io {
        path: path.to_path_buf(),
        source: io::Error::other(e),
    }
}

fn load_graph(cfg: &RunConfig) -> Result<CitationGraph> {
    let p = cfg.require(GRAPH, "ingest")?;
    let f = File::open(&p).map_err(io_err(&p))?;
    CitationGraph::read_snapshot(BufReader::new(f))
        .map_err(|e| PipelineError::Input(format!("{}: {e}", p.display())))
}

pub fn load_careers(cfg: &RunConfig) -> Result<BTreeMap<String, Career>> {
    let p = cfg.require(CAREERS, "careers")?;
    let f = File::open(&p).map_err(io_err(&p))?;
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(&p))?;
        if line.trim().is_empty() {
            continue;
        }
        let c: Career = serde_json::from_str(&line)
            .map_err(|e| PipelineError::Input(format!("{} line {}: {e}", p.display(), i + 1)))?;
        out.insert(c.author_id.clone(), c);
    }
    Ok(out)
}

pub fn ingest(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| PipelineError::InvalidParams("--input is required for ingest".into()))?;
    let (mut records, stats) = parse_corpus(input, cfg.format, YearRange::default())
        .map_err(|e| PipelineError::Input(e.to_string()))?;
    validate_corpus(&mut records).map_err(|e| PipelineError::Input(e.to_string()))?;
    let g = CitationGraph::build(&records);
    drop(records);
    if g.num_edges() as u64 != stats.graph_edges() {
        return Err(PipelineError::Invariant(format!(
            "graph has {} edges, corpus statistics imply {}",
            g.num_edges(),
            stats.graph_edges()
        )));
    }
    let gp = cfg.path(GRAPH);
    let mut w = create(&gp)?;
    g.write_snapshot(&mut w).map_err(io_err(&gp))?;
    w.flush().map_err(io_err(&gp))?;
    write_json(
        &cfg.path(INGEST_STATS),
        &json!({
            "corpus": stats,
            "papers": g.num_papers(),
            "edges": g.num_edges(),
            "authors": g.num_authors(),
        }),
    )?;
    let mut inputs = Vec::new();
    match cfg.format {
        CorpusFormat::JsonLines => inputs.push((input.display().to_string(), input.clone())),
        CorpusFormat::CsvPair => {
            for f in ["papers.csv", "edges.csv"] {
                let p = input.join(f);
                inputs.push((p.display().to_string(), p));
            }
        }
    }
    write_manifest(
        cfg,
        "ingest",
        json!({ "input": input, "format": cfg.format }),
        &inputs,
        &[GRAPH.into(), INGEST_STATS.into()],
    )
}

pub fn score(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let g = load_graph(cfg)?;
    let mut params = DisruptionParams::for_graph(&g);
    params.min_window_years = cfg.min_window;
    params.include_same_year = cfg.include_same_year;
    if let Some(h) = cfg.horizon {
        params.horizon_year = h;
    }
    let results = score_all(&g, params);
    let mut counts = BTreeMap::new();
    for r in &results {
        if let Some(s) = r.score {
            if !(-1.0..=1.0).contains(&s) {
                return Err(PipelineError::Invariant(format!(
                    "score {s} of {} outside [-1, 1]",
                    g.paper_id(r.paper)
                )));
            }
        }
        *counts.entry(r.status.as_str()).or_insert(0usize) += 1;
    }
    let defined: Vec<f64> = results.iter().filter_map(|r| r.score).collect();
    let sp = cfg.path(SCORES);
    write_scores_csv(&g, &results, create(&sp)?).map_err(csv_err(&sp))?;
    write_json(
        &cfg.path(SCORE_SUMMARY),
        &json!({
            "papers": results.len(),
            "status_counts": counts,
            "score": mean_and_se(&defined),
            "params": params,
        }),
    )?;
    write_manifest(
        cfg,
        "score",
        json!({ "params": params }),
        &upstream(cfg, &[GRAPH]),
        &[SCORES.into(), SCORE_SUMMARY.into()],
    )
}

pub fn careers(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let g = load_graph(cfg)?;
    let sp = cfg.require(SCORES, "score")?;
    let f = File::open(&sp).map_err(io_err(&sp))?;
    let scores = read_scores_csv(&g, BufReader::new(f)).map_err(|e| {
        PipelineError::Invariant(format!("{} does not match {GRAPH}: {e}", sp.display()))
    })?;
    let opts = CareerOptions {
        coauthors: cfg.coauthors,
        citation_window: cfg.citation_window,
    };
    let all = assemble_careers(&g, &scores, &opts);
    let authors = all.len();
    let cohort = apply_cohort_filter(all, &cfg.cohort);

    let cp = cfg.path(CAREERS);
    let mut w = create(&cp)?;
    for c in cohort.values() {
        serde_json::to_writer(&mut w, c).map_err(|e| io_err(&cp)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(&cp))?;
    }
    w.flush().map_err(io_err(&cp))?;

    let summary = cfg.path(CAREERS_SUMMARY);
    let mut out = csv::Writer::from_writer(create(&summary)?);
    out.write_record([
        "author_id",
        "first_year",
        "last_year",
        "n_papers",
        "defined_scores",
        "peak_year",
        "peak_paper_id",
        "peak_score",
        "time_to_peak",
        "papers_before_peak",
        "boundary_peak",
    ])
    .map_err(csv_err(&summary))?;
    let mut without_scores = 0usize;
    for c in cohort.values() {
        let defined = c.publications.iter().filter(|p| p.score.is_some()).count();
        let peak = find_peak(c).ok();
        without_scores += peak.is_none() as usize;
        let opt = |v: Option<String>| v.unwrap_or_default();
        out.write_record([
            c.author_id.clone(),
            c.first_year.to_string(),
            c.last_year.to_string(),
            c.n_papers().to_string(),
            defined.to_string(),
            opt(peak.as_ref().map(|p| p.peak_year.to_string())),
            opt(peak.as_ref().map(|p| g.paper_id(p.peak_paper).to_string())),
            opt(peak.as_ref().map(|p| p.peak_score.to_string())),
            opt(peak.as_ref().map(|p| p.time_to_peak.to_string())),
            opt(peak.as_ref().map(|p| p.papers_before_peak.to_string())),
            opt(peak.as_ref().map(|p| p.is_boundary.to_string())),
        ])
        .map_err(csv_err(&summary))?;
    }
    out.flush().map_err(io_err(&summary))?;
    write_json(
        &cfg.path(COHORT),
        &json!({
            "authors": authors,
            "cohort": cohort.len(),
            "cohort_without_defined_scores": without_scores,
            "filter": cfg.cohort,
        }),
    )?;
    write_manifest(
        cfg,
        "careers",
        json!({ "cohort": cfg.cohort, "options": opts }),
        &upstream(cfg, &[GRAPH, SCORES]),
        &[CAREERS.into(), CAREERS_SUMMARY.into(), COHORT.into()],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakComparison {
    pub observed: Option<Summary>,
    pub null: Option<Summary>,
    pub ks: Option<TestResult>,
    /// Alternative: observed values are smaller than null values.
    pub mwu_less: Option<TestResult>,
    pub mwu_two_sided: Option<TestResult>,
}

pub fn compare_peaks(observed: &[f64], null: &[f64]) -> PeakComparison {
    PeakComparison {
        observed: mean_and_se(observed),
        null: mean_and_se(null),
        ks: ks_two_sample(observed, null).ok(),
        mwu_less: mwu(observed, null, Sidedness::Less).ok(),
        mwu_two_sided: mwu(observed, null, Sidedness::TwoSided).ok(),
    }
}

fn write_peaks_csv(path: &Path, s: &PeakSamples) -> Result<()> {
    let mut out = csv::Writer::from_writer(create(path)?);
    out.write_record([
        "author_id",
        "replicate",
        "time_to_peak",
        "papers_before_peak",
    ])
    .map_err(csv_err(path))?;
    for r in &s.rows {
        out.write_record([
            r.author_id.clone(),
            r.replicate.to_string(),
            r.time_to_peak.to_string(),
            r.papers_before_peak.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

fn write_hist_csv(path: &Path, labels: &[&str], hists: &[&Histogram]) -> Result<()> {
    let mut out = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["bin_start".to_string(), "bin_end".to_string()];
    for l in labels {
        header.push(format!("{l}_count"));
        header.push(format!("{l}_density"));
    }
    out.write_record(&header).map_err(csv_err(path))?;
    if let Some(first) = hists.first() {
        let dens: Vec<Vec<f64>> = hists.iter().map(|h| h.density()).collect();
        for i in 0..first.counts.len() {
            let lo = first.origin + i as f64 * first.width;
            let mut row = vec![lo.to_string(), (lo + first.width).to_string()];
            for (h, d) in hists.iter().zip(&dens) {
                row.push(h.counts[i].to_string());
                row.push(d[i].to_string());
            }
            out.write_record(&row).map_err(csv_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

pub fn null(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let careers = load_careers(cfg)?;
    let shuffle = ShuffleConfig {
        seed: cfg.seed,
        replicates: cfg.replicates,
    };
    let obs = observed_peaks(&careers);
    let nul = null_distributions(&careers, &shuffle);
    if nul.len() != obs.len() * cfg.replicates as usize {
        return Err(PipelineError::Invariant(format!(
            "{} null peaks for {} observed careers and {} replicates",
            nul.len(),
            obs.len(),
            cfg.replicates
        )));
    }
    let files = [
        "peaks_observed.csv",
        "peaks_null.csv",
        "hist_time_to_peak.csv",
        "hist_papers_to_peak.csv",
        NULL_SUMMARY,
    ];
    write_peaks_csv(&cfg.path(files[0]), &obs)?;
    write_peaks_csv(&cfg.path(files[1]), &nul)?;
    let (ho, hn) = paired_histograms(&obs.time_to_peak(), &nul.time_to_peak(), 1.0);
    write_hist_csv(&cfg.path(files[2]), &["observed", "null"], &[&ho, &hn])?;
    let (ho, hn) = paired_histograms(
        &log1p_all(&obs.papers_to_peak()),
        &log1p_all(&nul.papers_to_peak()),
        0.25,
    );
    write_hist_csv(&cfg.path(files[3]), &["observed", "null"], &[&ho, &hn])?;
    write_json(
        &cfg.path(NULL_SUMMARY),
        &json!({
            "careers": obs.len(),
            "seed": cfg.seed,
            "replicates": cfg.replicates,
            "time_to_peak": compare_peaks(&obs.time_to_peak(), &nul.time_to_peak()),
            "papers_to_peak": compare_peaks(&obs.papers_to_peak(), &nul.papers_to_peak()),
        }),
    )?;
    write_manifest(
        cfg,
        "null",
        json!({ "shuffle": shuffle }),
        &upstream(cfg, &[CAREERS]),
        &files.map(String::from),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub mode: String,
    pub careers: usize,
    pub excluded_boundary_or_undefined: usize,
    pub bpy: Option<Summary>,
    pub py_excl: Option<Summary>,
    pub apy: Option<Summary>,
    /// Alternative: peak-year averages exceed before-peak averages.
    pub py_vs_bpy: Option<TestResult>,
    pub py_vs_apy: Option<TestResult>,
}

/// Phase averages of every career and their comparison.
pub fn phase_comparison(
    careers: &BTreeMap<String, Career>,
    mode: PhaseMode,
) -> (PhaseSummary, Vec<[Option<f64>; 3]>) {
    let mut per_career = Vec::new();
    let mut excluded = 0;
    for c in careers.values() {
        match phase_averages(c, mode) {
            Ok(p) => per_career.push([p.bpy, p.py_excl, p.apy]),
            Err(_) => {
                excluded += 1;
                per_career.push([None; 3]);
            }
        }
    }
    let col = |i: usize| -> Vec<f64> { per_career.iter().filter_map(|r| r[i]).collect() };
    let (b, p, a) = (col(0), col(1), col(2));
    let summary = PhaseSummary {
        mode: mode_tag(mode),
        careers: careers.len(),
        excluded_boundary_or_undefined: excluded,
        bpy: mean_and_se(&b),
        py_excl: mean_and_se(&p),
        apy: mean_and_se(&a),
        py_vs_bpy: mwu(&p, &b, Sidedness::Greater).ok(),
        py_vs_apy: mwu(&p, &a, Sidedness::Greater).ok(),
    };
    (summary, per_career)
}

fn mode_tag(mode: PhaseMode) -> String {
    match mode {
        PhaseMode::Full => "full".into(),
        PhaseMode::Window(w) => format!("w{w}"),
    }
}

pub fn phases(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let careers = load_careers(cfg)?;
    let modes: Vec<PhaseMode> = match cfg.phase_window {
        None => vec![PhaseMode::Full, PhaseMode::Window(2)],
        Some(PhaseWindow::Full) => vec![PhaseMode::Full],
        Some(PhaseWindow::Two) => vec![PhaseMode::Window(2)],
    };
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    for mode in modes {
        let tag = mode_tag(mode);
        let (summary, rows) = phase_comparison(&careers, mode);
        let name = format!("phases_{tag}.csv");
        let path = cfg.path(&name);
        let mut out = csv::Writer::from_writer(create(&path)?);
        out.write_record(["author_id", "bpy", "py_excl", "apy"])
            .map_err(csv_err(&path))?;
        for (c, r) in careers.values().zip(&rows) {
            let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.write_record([c.author_id.clone(), f(r[0]), f(r[1]), f(r[2])])
                .map_err(csv_err(&path))?;
        }
        out.flush().map_err(io_err(&path))?;
        files.push(name);

        let col = |i: usize| -> Vec<f64> { rows.iter().filter_map(|r| r[i]).collect() };
        let width = 0.05;
        let origin = -1.0;
        let n_bins = 40;
        let hs: Vec<Histogram> = (0..3)
            .map(|i| Histogram::new(&col(i), origin, width, n_bins + 1))
            .collect();
        let hname = format!("phases_hist_{tag}.csv");
        write_hist_csv(
            &cfg.path(&hname),
            &["bpy", "py_excl", "apy"],
            &[&hs[0], &hs[1], &hs[2]],
        )?;
        files.push(hname);
        summaries.push(summary);
    }
    write_json(&cfg.path(PHASES_SUMMARY), &summaries)?;
    files.push(PHASES_SUMMARY.into());
    write_manifest(
        cfg,
        "phases",
        json!({ "phase_window": cfg.phase_window }),
        &upstream(cfg, &[CAREERS]),
        &files,
    )
}

pub fn regression_file(variant: Variant) -> String {
    format!("regression_{variant}.json")
}

fn write_rows_csv(path: &Path, rows: &[RegressionRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(create(path)?);
    out.write_record([
        "author_id",
        "innovation",
        "impact",
        "peak_year",
        "time_to_peak",
        "productivity",
        "time_devoted",
        "effort",
        "relative_productivity",
        "relative_time_devoted",
        "relative_effort",
        "coauthors",
        "prev_innovation",
        "prepeak_relative_effort",
        "prepeak_coauthors",
    ])
    .map_err(csv_err(path))?;
    for r in rows {
        let m = &r.peak;
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.write_record([
            r.author_id.clone(),
            r.innovation.to_string(),
            r.impact.to_string(),
            r.peak_year.to_string(),
            r.time_to_peak.to_string(),
            m.productivity.to_string(),
            m.time_devoted.to_string(),
            m.effort.to_string(),
            m.relative_productivity.to_string(),
            m.relative_time_devoted.to_string(),
            m.relative_effort.to_string(),
            r.coauthors_peak.to_string(),
            r.prev_innovation.to_string(),
            f(r.prepeak.map(|p| p.relative_effort)),
            f(r.coauthors_prepeak),
        ])
        .map_err(csv_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn regress(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let careers = load_careers(cfg)?;
    let v = cfg.variant;
    let (rows, diag) = build_rows(&careers, v, cfg.impact_agg);
    let fit = |dep| {
        fit_models(&rows, dep, v)
            .map_err(|e| PipelineError::Invariant(format!("{dep:?} models: {e}")))
    };
    let innovation = fit(Dependent::Innovation)?;
    let impact = fit(Dependent::Impact)?;
    let files = [
        format!("regression_rows_{v}.csv"),
        regression_file(v),
        format!("table_innovation_{v}.csv"),
        format!("table_impact_{v}.csv"),
        format!("coefficients_{v}.csv"),
    ];
    write_rows_csv(&cfg.path(&files[0]), &rows)?;
    let models: Vec<&RegressionResult> = innovation.iter().chain(&impact).collect();
    write_json(
        &cfg.path(&files[1]),
        &json!({
            "variant": v,
            "impact_agg": cfg.impact_agg,
            "diagnostics": diag,
            "models": models,
        }),
    )?;
    for (name, ms) in [(&files[2], &innovation), (&files[3], &impact)] {
        let p = cfg.path(name);
        write_table_csv(ms, create(&p)?).map_err(csv_err(&p))?;
    }
    let p = cfg.path(&files[4]);
    let all: Vec<RegressionResult> = innovation.iter().chain(&impact).cloned().collect();
    write_coefficient_plot_csv(&all, create(&p)?).map_err(csv_err(&p))?;
    write_manifest(
        cfg,
        &format!("regress_{v}"),
        json!({ "variant": v, "impact_agg": cfg.impact_agg }),
        &upstream(cfg, &[CAREERS]),
        &files,
    )
}

pub fn report(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let regression = regression_file(cfg.variant);
    let needed = [
        (INGEST_STATS, "ingest"),
        (SCORE_SUMMARY, "score"),
        (COHORT, "careers"),
        (NULL_SUMMARY, "null"),
        (PHASES_SUMMARY, "phases"),
        (regression.as_str(), "regress"),
    ];
    let mut sections = serde_json::Map::new();
    for (name, producer) in needed {
        let p = cfg.require(name, producer)?;
        sections.insert(producer.to_string(), read_json(&p)?);
    }
    // headline coefficients: key variable of each model
    let mut key_effects = Vec::new();
    if let Some(models) = sections["regress"]["models"].as_array() {
        for m in models {
            let i = 1;
            let p = m["p_values"][i].as_f64().unwrap_or(f64::NAN);
            key_effects.push(json!({
                "dependent": m["dependent"],
                "key": m["key"],
                "coefficient": m["coefficients"][i],
                "std_error": m["std_errors"][i],
                "t": m["t_stats"][i],
                "p": p,
                "stars": stars(p),
                "n": m["n"],
                "r_squared": m["r_squared"],
            }));
        }
    }
    let tables: Vec<String> = fs::read_dir(&cfg.out)
        .map_err(io_err(&cfg.out))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| {
            n.ends_with(".csv")
                && (n.starts_with("hist_")
                    || n.starts_with("phases_hist_")
                    || n.starts_with("table_")
                    || n.starts_with("coefficients_"))
        })
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let table_hashes = tables
        .iter()
        .map(|n| {
            Ok(FileHash {
                path: n.clone(),
                sha256: sha256_file(&cfg.path(n))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_json(
        &cfg.path(REPORT),
        &json!({
            "tool_version": TOOL_VERSION,
            "sections": sections,
            "key_effects": key_effects,
            "tables": table_hashes,
        }),
    )?;
    let mut inputs: Vec<&str> = needed.iter().map(|(n, _)| *n).collect();
    inputs.extend(tables.iter().map(String::as_str));
    write_manifest(
        cfg,
        "report",
        json!({ "variant": cfg.variant }),
        &upstream(cfg, &inputs),
        &[REPORT.into()],
    )
}

/// Every stage in order.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<Manifest>> {
    Ok(vec![
        ingest(cfg)?,
        score(cfg)?,
        careers(cfg)?,
        null(cfg)?,
        phases(cfg)?,
        regress(cfg)?,
        report(cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::write_json_lines;
    use crate::synth::{generate, SynthConfig};

    fn corpus(dir: &Path) -> PathBuf {
        let c = generate(&SynthConfig {
            n_authors: 80,
            ..Default::default()
        })
        .unwrap();
        let p = dir.join("corpus.jsonl");
        write_json_lines(&c.records, File::create(&p).unwrap()).unwrap();
        p
    }

    #[test]
    fn stages_chain_and_are_deterministic() {
        let tmp = tempfile::tempdir().unwrap();
        let input = corpus(tmp.path());
        let run = |out: &str| {
            let cfg = RunConfig {
                input: Some(input.clone()),
                out: tmp.path().join(out),
                replicates: 2,
                ..Default::default()
            };
            run_all(&cfg).unwrap()
        };
        let a = run("a");
        let b = run("b");
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
        let cohort = read_json(&tmp.path().join("a").join(COHORT)).unwrap();
        assert_eq!(cohort["cohort"], 80);
    }

    #[test]
    fn missing_upstream_is_exit_2() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            out: tmp.path().to_path_buf(),
            ..Default::default()
        };
        for stage in [score, careers, null, phases, regress, report] {
            let e = stage(&cfg).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{e}");
        }
    }

    #[test]
    fn bad_parameters_are_exit_3() {
        let bad = [
            RunConfig {
                replicates: 0,
                ..Default::default()
            },
            RunConfig {
                min_window: -1,
                ..Default::default()
            },
            RunConfig {
                input: Some("/nonexistent/corpus".into()),
                ..Default::default()
            },
            RunConfig {
                cohort: CohortFilter {
                    start_min: 2001,
                    start_max: 2000,
                    ..Default::default()
                },
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert_eq!(ingest(&cfg).unwrap_err().exit_code(), 3);
        }
        assert_eq!(ingest(&RunConfig::default()).unwrap_err().exit_code(), 3);
        assert_eq!("7".parse::<PhaseWindow>().unwrap_err().exit_code(), 3);
    }
}

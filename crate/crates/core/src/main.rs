use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dialectometry::cdistance::{cdistance, GroundMetric};
use dialectometry::cluster::{cophenetic_correlation, cut, linkage, select_method, LinkageMethod};
use dialectometry::distmatrix::{build_matrix, AcousticSource, TranscriptionSource};
use dialectometry::dtw::DtwConfig;
use dialectometry::error::{Error, Result};
use dialectometry::io::{self, MapPayload, MissingPolicy};
use dialectometry::levenshtein::induce;
use dialectometry::mds::classical_mds;
use dialectometry::model::{LocationTable, Partition};
use dialectometry::pipeline::{self, load_inputs, mds_colors, run_sweep};
use dialectometry::segments::{SegmentClassTable, Transcription};

/// Dialect distances, clustering and CDistance evaluation.
///
/// Exit codes: 0 success, 2 invalid input, 3 I/O error, 4 numerical failure.
#[derive(Parser)]
#[command(name = "dialect", version)]
struct Cli {
    /// Worker threads (default: one per core). Outputs do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Location distance matrix from acoustic embeddings of one (model, layer).
    DistAcoustic(DistAcoustic),
    /// Location distance matrix from transcriptions with PMI-induced segment costs.
    DistLd(DistLd),
    /// Build a dendrogram with one linkage, or the ccc-best one with `--method auto`.
    Cluster(ClusterArgs),
    /// Cut a dendrogram into k clusters.
    Cut(CutArgs),
    /// Cophenetic correlation between a matrix and a dendrogram.
    Cophenetic(CopheneticArgs),
    /// CDistance between a predicted partition and the gold labels.
    Cdistance(CdistanceArgs),
    /// Classical MDS coordinates of a matrix.
    Mds(MdsArgs),
    /// GeoJSON map of clusters or MDS colors.
    Maps(MapsArgs),
    /// Select a linkage per matrix, cut, score against gold and report.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct HoldoutArgs {
    /// Words (one per line) excluded from the main matrix.
    #[arg(long, value_name = "FILE", requires = "holdout_out")]
    holdout_words: Option<PathBuf>,
    /// Matrix computed from the held-out words only.
    #[arg(long, value_name = "CSV", requires = "holdout_words")]
    holdout_out: Option<PathBuf>,
}

#[derive(Args)]
struct DistAcoustic {
    /// Archive root containing manifest.json.
    #[arg(long, value_name = "DIR")]
    archive: PathBuf,
    #[arg(long)]
    model: String,
    /// Transformer layer, starting at 1.
    #[arg(long)]
    layer: u32,
    /// Locations CSV (location_id,name,lat,lon,gold_label).
    #[arg(long, value_name = "CSV")]
    locations: PathBuf,
    /// Word ids, one per line.
    #[arg(long, value_name = "FILE")]
    words: PathBuf,
    /// Output matrix CSV.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    /// Sakoe-Chiba band radius in frames (default: unconstrained).
    #[arg(long)]
    band: Option<usize>,
    /// Minimum words a location pair must share.
    #[arg(long, default_value_t = 1)]
    min_shared_words: usize,
    /// Treat absent embedding files as unavailable words instead of failing.
    #[arg(long)]
    allow_missing: bool,
    #[command(flatten)]
    holdout: HoldoutArgs,
}

#[derive(Args)]
struct DistLd {
    /// Transcriptions TSV (location_id, word_id, space-separated segments).
    #[arg(long, value_name = "TSV")]
    transcriptions: PathBuf,
    #[arg(long, value_name = "CSV")]
    locations: PathBuf,
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    /// Induced segment cost table (default: <out>.costs.tsv).
    #[arg(long, value_name = "TSV")]
    costs_out: Option<PathBuf>,
    /// PMI induction rounds; 0 keeps unit costs.
    #[arg(long, default_value_t = 15)]
    pmi_iters: usize,
    /// Additive smoothing of pair counts.
    #[arg(long, default_value_t = 0.5)]
    smoothing: f64,
    #[arg(long, default_value_t = 1)]
    min_shared_words: usize,
    /// Segment class table (char<TAB>V|C lines) replacing the bundled one.
    #[arg(long, value_name = "TSV")]
    segment_classes: Option<PathBuf>,
    #[command(flatten)]
    holdout: HoldoutArgs,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long, value_name = "CSV")]
    matrix: PathBuf,
    /// sl, cl, ga, wa, uc, wc, mv, or auto for the highest cophenetic correlation.
    #[arg(long, default_value = "auto")]
    method: String,
    /// Output dendrogram JSON.
    #[arg(long, value_name = "JSON")]
    out: PathBuf,
}

#[derive(Args)]
struct CutArgs {
    #[arg(long, value_name = "JSON")]
    dendrogram: PathBuf,
    #[arg(long)]
    k: usize,
    /// Output partition CSV (location,cluster).
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
}

#[derive(Args)]
struct CopheneticArgs {
    #[arg(long, value_name = "CSV")]
    matrix: PathBuf,
    #[arg(long, value_name = "JSON")]
    dendrogram: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Haversine,
    Euclidean,
}

impl From<MetricArg> for GroundMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Haversine => GroundMetric::Haversine,
            MetricArg::Euclidean => GroundMetric::Euclidean,
        }
    }
}

#[derive(Args)]
struct CdistanceArgs {
    /// Predicted partition CSV (location,cluster).
    #[arg(long, value_name = "CSV")]
    pred: PathBuf,
    /// Locations CSV with gold labels.
    #[arg(long, value_name = "CSV")]
    gold: PathBuf,
    #[arg(long, value_enum, default_value = "haversine")]
    metric: MetricArg,
}

#[derive(Args)]
struct MdsArgs {
    #[arg(long, value_name = "CSV")]
    matrix: PathBuf,
    #[arg(long, default_value_t = 3)]
    dims: usize,
    /// Output coordinates CSV (location,dim1,...).
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MapMode {
    Cluster,
    Mds,
}

#[derive(Args)]
struct MapsArgs {
    #[arg(long, value_enum)]
    mode: MapMode,
    #[arg(long, value_name = "CSV")]
    locations: PathBuf,
    /// Partition CSV to draw (cluster mode).
    #[arg(long, value_name = "CSV")]
    partition: Option<PathBuf>,
    /// Distance matrix (mds mode, or cluster mode without --partition).
    #[arg(long, value_name = "CSV")]
    matrix: Option<PathBuf>,
    /// Clusters when cutting --matrix (default: number of gold groups).
    #[arg(long)]
    k: Option<usize>,
    /// Linkage when cutting --matrix.
    #[arg(long, default_value = "auto")]
    method: String,
    #[arg(long, value_name = "GEOJSON")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// MODEL:LAYER:PATH, repeatable; LAYER is a number or LD.
    #[arg(long = "matrix", value_name = "SPEC", required = true)]
    matrices: Vec<String>,
    /// Locations CSV with gold labels.
    #[arg(long, value_name = "CSV")]
    gold: PathBuf,
    /// Clusters per cut (default: number of gold groups).
    #[arg(long)]
    k: Option<usize>,
    /// Report CSV; a .summary.json sidecar is written next to it.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    /// Directory for cluster and MDS maps of each model's selected row.
    #[arg(long, value_name = "DIR")]
    maps_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "haversine")]
    metric: MetricArg,
    /// MODEL:LAYER:PATH matrices from held-out words, scored with the selected linkage.
    #[arg(long, value_name = "SPEC")]
    holdout: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(Error::Invalid("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Invalid(format!("cannot start thread pool: {e}")))
            .and_then(|pool| pool.install(|| run(cli.command))),
        None => run(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::DistAcoustic(a) => dist_acoustic(a),
        Command::DistLd(a) => dist_ld(a),
        Command::Cluster(a) => {
            let m = io::read_distance_matrix(&a.matrix)?;
            let (method, d) = match a.method.as_str() {
                "auto" => {
                    let sel = select_method(&m)?;
                    (sel.method, sel.dendrogram)
                }
                code => {
                    let method: LinkageMethod = code.parse()?;
                    (method, linkage(&m, method)?)
                }
            };
            let ccc = cophenetic_correlation(&m, &d)?;
            io::write_dendrogram(&d, &a.out)?;
            println!("{}\t{}", method.code(), io::format_sig9(ccc));
            Ok(())
        }
        Command::Cut(a) => {
            let d = io::read_dendrogram(&a.dendrogram)?;
            io::write_partition(&cut(&d, a.k)?, &a.out)
        }
        Command::Cophenetic(a) => {
            let m = io::read_distance_matrix(&a.matrix)?;
            let d = io::read_dendrogram(&a.dendrogram)?;
            if d.labels() != m.index() {
                return Err(Error::Invalid("dendrogram labels differ from the matrix index".into()));
            }
            println!("{}", io::format_sig9(cophenetic_correlation(&m, &d)?));
            Ok(())
        }
        Command::Cdistance(a) => {
            let pred = io::read_partition(&a.pred)?;
            let table = io::read_locations(&a.gold)?;
            let gold = table.gold_partition()?;
            println!("{:.4}", cdistance(&pred, &gold, &table, a.metric.into())?);
            Ok(())
        }
        Command::Mds(a) => {
            let m = io::read_distance_matrix(&a.matrix)?;
            let r = classical_mds(&m, a.dims)?;
            io::write_coordinates(m.index(), &r.coords, &a.out)
        }
        Command::Maps(a) => maps(a),
        Command::Sweep(a) => {
            let table = io::read_locations(&a.gold)?;
            let inputs = load_inputs(&a.matrices)?;
            let holdout = load_inputs(&a.holdout)?;
            let report = run_sweep(&inputs, &holdout, &table, a.k, a.metric.into())?;
            pipeline::write_sweep(&report, &inputs, &table, &a.out, a.maps_dir.as_deref())?;
            for m in &report.models {
                println!(
                    "{}\tlayer {}\t{}\tcdistance {}\tstd {}",
                    m.model,
                    m.best_layer,
                    m.best_method,
                    io::format_sig9(m.best_cdistance),
                    io::format_sig9(m.cdistance_std)
                );
            }
            Ok(())
        }
    }
}

/// Splits `words` into (kept, held out) according to the optional holdout list.
fn split_words(words: Vec<String>, holdout: &HoldoutArgs) -> Result<(Vec<String>, Vec<String>)> {
    let Some(path) = &holdout.holdout_words else {
        return Ok((words, Vec::new()));
    };
    let held = io::read_word_list(path)?;
    if let Some(w) = held.iter().find(|w| !words.contains(w)) {
        return Err(Error::Invalid(format!("held-out word '{w}' is not in the word list")));
    }
    let kept: Vec<String> = words.into_iter().filter(|w| !held.contains(w)).collect();
    if kept.is_empty() {
        return Err(Error::Invalid("every word is held out".into()));
    }
    Ok((kept, held))
}

fn location_ids(table: &LocationTable) -> Vec<String> {
    table.ids().map(String::from).collect()
}

fn dist_acoustic(a: DistAcoustic) -> Result<()> {
    let table = io::read_locations(&a.locations)?;
    let words = io::read_word_list(&a.words)?;
    let policy = if a.allow_missing {
        MissingPolicy::Skip
    } else {
        MissingPolicy::Error
    };
    let embeddings = io::load_layer(&a.archive, &a.model, a.layer, &location_ids(&table), &words, policy)?;
    let config = match a.band {
        Some(b) => DtwConfig::with_band(b),
        None => DtwConfig::default(),
    };
    let source = AcousticSource {
        embeddings: &embeddings,
        config,
    };
    let (kept, held) = split_words(words, &a.holdout)?;
    io::write_distance_matrix(&build_matrix(&source, &kept, &table, a.min_shared_words)?, &a.out)?;
    if let Some(out) = &a.holdout.holdout_out {
        io::write_distance_matrix(&build_matrix(&source, &held, &table, a.min_shared_words)?, out)?;
    }
    Ok(())
}

fn dist_ld(a: DistLd) -> Result<()> {
    let table = io::read_locations(&a.locations)?;
    let classes = match &a.segment_classes {
        Some(p) => SegmentClassTable::from_tsv(&io::read_text(p)?)?,
        None => SegmentClassTable::default(),
    };
    let corpus = io::read_transcriptions(&a.transcriptions, &classes)?;
    for w in &corpus.warnings {
        eprintln!("warning: {w}");
    }
    let (kept, held) = split_words(corpus.words(), &a.holdout)?;
    let training: Vec<Transcription> = corpus
        .transcriptions
        .iter()
        .filter(|t| kept.contains(&t.word_id) && table.get(&t.location_id).is_some())
        .cloned()
        .collect();
    let induction = induce(&training, a.pmi_iters, a.smoothing)?;
    eprintln!(
        "segment costs: {} round(s){}",
        induction.iterations,
        if induction.converged { ", converged" } else { "" }
    );
    let costs_out = a.costs_out.clone().unwrap_or_else(|| with_suffix(&a.out, "costs.tsv"));
    io::write_cost_table(&induction.table, &costs_out)?;
    let source = TranscriptionSource::new(&corpus.transcriptions, &induction.table).with_classes(&classes);
    io::write_distance_matrix(&build_matrix(&source, &kept, &table, a.min_shared_words)?, &a.out)?;
    if let Some(out) = &a.holdout.holdout_out {
        io::write_distance_matrix(&build_matrix(&source, &held, &table, a.min_shared_words)?, out)?;
    }
    Ok(())
}

/// `dist/ld.csv` + `costs.tsv` → `dist/ld.costs.tsv`.
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn maps(a: MapsArgs) -> Result<()> {
    let table = io::read_locations(&a.locations)?;
    match a.mode {
        MapMode::Cluster => {
            let partition: Partition = match (&a.partition, &a.matrix) {
                (Some(p), _) => io::read_partition(p)?,
                (None, Some(m)) => {
                    let m = io::read_distance_matrix(m)?;
                    let d = match a.method.as_str() {
                        "auto" => select_method(&m)?.dendrogram,
                        code => linkage(&m, code.parse()?)?,
                    };
                    let k = match a.k {
                        Some(k) => k,
                        None => table.gold_partition()?.k(),
                    };
                    cut(&d, k)?
                }
                (None, None) => return Err(Error::Invalid("cluster maps need --partition or --matrix".into())),
            };
            io::write_geojson(&table, &MapPayload::Clusters(&partition), &a.out)
        }
        MapMode::Mds => {
            let path = a
                .matrix
                .as_ref()
                .ok_or_else(|| Error::Invalid("mds maps need --matrix".into()))?;
            let colors = mds_colors(&io::read_distance_matrix(path)?)?;
            io::write_geojson(&table, &MapPayload::Colors(&colors), &a.out)
        }
    }
}

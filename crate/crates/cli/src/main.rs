use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crowdcast_core::bundle::{load_bundle, save_bundle};
use crowdcast_core::classifiers::{JointCategory, ModelKind};
use crowdcast_core::corpus::{
    load_annotated, load_tweets, preprocess, preprocess_tweets, write_jsonl, EventRegistry, Record,
};
use crowdcast_core::evaluation::{f1_report, hamming_report, map_report, PrfCounts, RankedList};
use crowdcast_core::features::FeatureSet;
use crowdcast_core::multilabel::LabelSpace;
use crowdcast_core::pipeline::{train_pipeline, tweet_tokens, Featurizer, PipelineConfig, PredictionRecord};
use crowdcast_core::prediction::{
    aggregate, expert_influence, rank_outcome, trend_series, Bucketing, RankMode, RankedOutcome, TimedPrediction,
};
use crowdcast_core::synth::{generate_synthetic, SynthSpec};
use crowdcast_core::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "crowdcast", version, about = "Sentiment classification and outcome prediction for event microblogs")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Pipeline configuration (TOML); flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Model bundle to write (train) or read (predict, featurize).
    #[arg(long, global = true)]
    bundle: Option<PathBuf>,
    /// Feature set: f1..f6.
    #[arg(long, global = true)]
    features: Option<FeatureSet>,
    /// Classifier: nb, svm, elman or rakel.
    #[arg(long, global = true)]
    model: Option<ModelKind>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a corpus, re-emitting it as JSONL.
    Ingest(CorpusArgs),
    /// Apply the text filters and record-level filters.
    Clean {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Where to write the filter report (stderr when omitted).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Emit feature vectors as JSONL.
    Featurize(CorpusArgs),
    /// Train a model bundle from an annotated corpus.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        registry: PathBuf,
    },
    /// Predict (target, sentiment) for every tweet of a corpus.
    Predict {
        #[arg(long)]
        input: PathBuf,
    },
    /// Score predictions or ranked outcomes.
    Evaluate {
        #[command(subcommand)]
        what: EvalCommand,
    },
    /// Rank participants from predictions.
    Outcome {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        /// `half` or `topN`.
        #[arg(long, default_value = "half")]
        mode: RankMode,
    },
    /// Volume and sentiment per time bucket.
    Trends {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        #[arg(long, default_value = "hour")]
        bucket: Bucketing,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Sentiment before and after the expert announcement.
    Influence {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        registry: PathBuf,
    },
    /// Generate a seeded synthetic annotated corpus.
    Synth {
        /// Spec file, TOML or JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Also write the matching event registry here.
        #[arg(long)]
        registry_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    input: PathBuf,
    /// Treat the input as annotated (target and sentiment per line).
    #[arg(long)]
    annotated: bool,
    /// Registry used to check annotated targets.
    #[arg(long)]
    registry: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Hamming loss of predictions against annotated truth.
    Labels {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        registry: PathBuf,
    },
    /// Mean F-measure and MAP of ranked outcomes against known winners.
    Outcomes {
        /// Outcome files written by `crowdcast outcome`.
        #[arg(long = "outcome", required = true, num_args = 1..)]
        outcomes: Vec<PathBuf>,
        /// JSON object mapping event id to its list of winners.
        #[arg(long)]
        winners: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io { path: p.into(), source: e })?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| {
        Error::Parse {
            line: e.line(),
            message: format!("{}: {e}", path.display()),
        }
        .into()
    })
}

fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = File::open(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::Io { path: path.into(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("{}: {e}", path.display()),
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn timed(preds: &[PredictionRecord]) -> Vec<TimedPrediction> {
    preds.iter().map(|p| (p.category(), p.ts)).collect()
}

fn load_registry(path: Option<&Path>) -> Result<Option<EventRegistry>> {
    path.map(EventRegistry::load).transpose().map_err(Into::into)
}

fn pipeline_config(shared: &Shared) -> Result<PipelineConfig> {
    let mut cfg = match &shared.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(f) = shared.features {
        cfg.features = f;
    }
    if let Some(m) = shared.model {
        cfg.model = m;
    }
    if let Some(s) = shared.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn records(corpus: &CorpusArgs) -> Result<Vec<Record>> {
    let registry = load_registry(corpus.registry.as_deref())?;
    Ok(if corpus.annotated {
        load_annotated(&corpus.input, registry.as_ref())?.iter().map(Record::from).collect()
    } else {
        load_tweets(&corpus.input)?.iter().map(Record::from).collect()
    })
}

fn write_records(out: Option<&Path>, recs: Vec<Record>) -> Result<()> {
    let mut w = output(out)?;
    write_jsonl(&mut w, recs)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FeatureRow<'a> {
    id: &'a str,
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

fn featurize(shared: &Shared, corpus: &CorpusArgs) -> Result<()> {
    let recs = records(corpus)?;
    let docs: Vec<_> = recs.iter().map(|r| tweet_tokens(&r.text)).collect();
    let vectors = match &shared.bundle {
        Some(b) => {
            let pipeline = load_bundle(b)?;
            docs.iter()
                .map(|d| pipeline.featurizer.transform(d))
                .collect::<Result<Vec<_>, _>>()?
        }
        None => {
            let cfg = pipeline_config(shared)?.with_derived_seeds();
            let lexicon = cfg.load_lexicon()?;
            Featurizer::fit(&docs, &cfg, lexicon)?.1
        }
    };
    let mut w = output(shared.out.as_deref())?;
    for (r, x) in recs.iter().zip(&vectors) {
        let row = FeatureRow {
            id: &r.id,
            dim: x.dim(),
            indices: x.indices().to_vec(),
            values: x.values().to_vec(),
        };
        serde_json::to_writer(&mut w, &row)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    bundle: PathBuf,
    model: ModelKind,
    features: FeatureSet,
    seed: u64,
    examples: usize,
    dimension: usize,
}

fn train(shared: &Shared, input: &Path, registry: &Path) -> Result<()> {
    let Some(bundle) = &shared.bundle else {
        bail!(Error::InvalidConfig("train needs --bundle".into()));
    };
    let cfg = pipeline_config(shared)?;
    let registry = EventRegistry::load(registry)?;
    let data = load_annotated(input, Some(&registry))?;
    let (data, report) = preprocess(&data);
    log::info!("training on {} of {} annotated tweets", report.output, report.input);
    let pipeline = train_pipeline(&data, &registry, &cfg)?;
    save_bundle(&pipeline, bundle)?;
    write_json(
        shared.out.as_deref(),
        &TrainSummary {
            bundle: bundle.clone(),
            model: cfg.model,
            features: cfg.features,
            seed: cfg.seed,
            examples: data.len(),
            dimension: pipeline.featurizer.dimension(),
        },
    )
}

fn predict(shared: &Shared, input: &Path) -> Result<()> {
    let Some(bundle) = &shared.bundle else {
        bail!(Error::InvalidConfig("predict needs --bundle".into()));
    };
    let pipeline = load_bundle(bundle)?;
    let (tweets, report) = preprocess_tweets(&load_tweets(input)?);
    log::info!("predicting {} of {} tweets", report.output, report.input);
    let preds = pipeline.predict_tweets(&tweets)?;
    let mut w = output(shared.out.as_deref())?;
    for p in &preds {
        serde_json::to_writer(&mut w, p)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn evaluate_labels(shared: &Shared, truth: &Path, predictions: &Path, registry: &Path) -> Result<()> {
    let registry = EventRegistry::load(registry)?;
    let space = LabelSpace::from_registry(&registry);
    let truth = load_annotated(truth, Some(&registry))?;
    let preds: HashMap<String, JointCategory> = read_predictions(predictions)?
        .into_iter()
        .map(|p| (p.id.clone(), p.category()))
        .collect();
    let mut gold = Vec::new();
    let mut predicted = Vec::new();
    for t in &truth {
        let Some(p) = preds.get(&t.tweet.id) else {
            continue;
        };
        gold.push(space.encode(&JointCategory::new(t.target.clone(), t.sentiment))?);
        predicted.push(space.encode(p)?);
    }
    if gold.is_empty() {
        bail!(Error::EmptyData);
    }
    log::info!("{} of {} annotated tweets have predictions", gold.len(), truth.len());
    write_json(shared.out.as_deref(), &hamming_report(&gold, &predicted, &space)?)
}

fn evaluate_outcomes(shared: &Shared, outcomes: &[PathBuf], winners: &Path) -> Result<()> {
    let winners: BTreeMap<String, Vec<String>> = read_json(winners)?;
    let mut prf = Vec::new();
    let mut ranked = Vec::new();
    for path in outcomes {
        let o: RankedOutcome = read_json(path)?;
        let relevant: BTreeSet<String> = winners
            .get(&o.event_id)
            .ok_or_else(|| Error::NoRelevantItems(o.event_id.clone()))?
            .iter()
            .cloned()
            .collect();
        prf.push(PrfCounts::from_sets(&o.event_id, &o.winners(), &relevant));
        ranked.push(RankedList::new(&o.event_id, o.order(), relevant)?);
    }
    let mut report = BTreeMap::new();
    report.insert("mean_f1", f1_report(&prf)?);
    report.insert("map", map_report(&ranked)?);
    write_json(shared.out.as_deref(), &report)
}

fn synth(shared: &Shared, spec_path: &Path, registry_out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(spec_path).map_err(|e| Error::Io {
        path: spec_path.into(),
        source: e,
    })?;
    let is_json = spec_path.extension().is_some_and(|e| e == "json");
    let mut spec: SynthSpec = if is_json {
        serde_json::from_str(&text).map_err(|e| Error::InvalidSynthSpec(e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| Error::InvalidSynthSpec(e.to_string()))?
    };
    if let Some(s) = shared.seed {
        spec.seed = s;
    }
    let data = generate_synthetic(&spec)?;
    if let Some(p) = registry_out {
        write_json(Some(p), &spec.registry()?)?;
    }
    write_records(shared.out.as_deref(), data.iter().map(Record::from).collect())
}

fn run(cli: Cli) -> Result<()> {
    let shared = &cli.shared;
    let out = shared.out.as_deref();
    match &cli.command {
        Command::Ingest(corpus) => write_records(out, records(corpus)?),
        Command::Clean { corpus, report } => {
            let registry = load_registry(corpus.registry.as_deref())?;
            let (recs, rep) = if corpus.annotated {
                let (kept, rep) = preprocess(&load_annotated(&corpus.input, registry.as_ref())?);
                (kept.iter().map(Record::from).collect(), rep)
            } else {
                let (kept, rep) = preprocess_tweets(&load_tweets(&corpus.input)?);
                (kept.iter().map(Record::from).collect(), rep)
            };
            match report {
                Some(p) => write_json(Some(p), &rep)?,
                None => eprintln!("{}", serde_json::to_string(&rep)?),
            }
            write_records(out, recs)
        }
        Command::Featurize(corpus) => featurize(shared, corpus),
        Command::Train { input, registry } => train(shared, input, registry),
        Command::Predict { input } => predict(shared, input),
        Command::Evaluate { what } => match what {
            EvalCommand::Labels {
                truth,
                predictions,
                registry,
            } => evaluate_labels(shared, truth, predictions, registry),
            EvalCommand::Outcomes { outcomes, winners } => evaluate_outcomes(shared, outcomes, winners),
        },
        Command::Outcome {
            predictions,
            registry,
            mode,
        } => {
            let registry = EventRegistry::load(registry)?;
            let preds = timed(&read_predictions(predictions)?);
            write_json(out, &rank_outcome(&aggregate(&preds), &registry, *mode)?)
        }
        Command::Trends {
            predictions,
            registry,
            bucket,
            format,
        } => {
            let registry = EventRegistry::load(registry)?;
            let series = trend_series(&timed(&read_predictions(predictions)?), *bucket, &registry);
            match format {
                Format::Json => write_json(out, &series),
                Format::Csv => {
                    let mut w = output(out)?;
                    series.write_csv(&mut w)?;
                    w.flush()?;
                    Ok(())
                }
            }
        }
        Command::Influence {
            predictions,
            registry,
        } => {
            let registry = EventRegistry::load(registry)?;
            write_json(out, &expert_influence(&timed(&read_predictions(predictions)?), &registry)?)
        }
        Command::Synth { spec, registry_out } => synth(shared, spec, registry_out.as_deref()),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::class) {
        Some(ErrorClass::Usage) => 1,
        Some(ErrorClass::Numeric) => 3,
        _ => 2,
    }
}

fn broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
            || e.downcast_ref::<serde_json::Error>()
                .is_some_and(|e| e.io_error_kind() == Some(io::ErrorKind::BrokenPipe))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

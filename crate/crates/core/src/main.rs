use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use channelscope::corpus::{LemmaTable, Source};
use channelscope::embedding::{self, load_any};
use channelscope::lexicon::{CategoryLexicon, DEFAULT_CATEGORIES};
use channelscope::pipeline::{
    self, file_stem, Analysis, PipelineError, ReportFormat, RunConfig, TopicClass,
};
use channelscope::topics;
use channelscope::weat::{self, run_weat, OovPolicy, PermutationOptions};

#[derive(Parser)]
#[command(
    name = "channelscope",
    version,
    about = "Lexical, topic and embedding-bias analysis of channel corpora"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the configured global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Read the corpus and print per-group document counts.
    Ingest(RunArgs),
    /// Clean, filter and lemmatize; writes tokens.ndjson.
    Preprocess(RunArgs),
    /// Category profiles, similarities and correlations; writes lexical.json.
    Lexicon(LexiconArgs),
    /// One LDA model per document class; prints the top topics.
    Topics(RunArgs),
    /// Base and per-channel embedding models.
    Embed(RunArgs),
    /// WEAT over the per-channel models, or over a single model file.
    Weat(WeatArgs),
    /// Full analysis, emitting the report in one format.
    Report {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Full analysis with every artifact.
    RunAll(RunArgs),
}

#[derive(Args)]
struct LexiconArgs {
    #[arg(long, required_unless_present = "import_empath")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Convert an Empath `categories.tsv` into a lexicon file instead.
    #[arg(long, requires = "to", conflicts_with = "config")]
    import_empath: Option<PathBuf>,
    /// Destination of the converted lexicon.
    #[arg(long)]
    to: Option<PathBuf>,
    /// Lemma table applied to the imported words.
    #[arg(long)]
    lemmas: Option<PathBuf>,
}

#[derive(Args)]
struct WeatArgs {
    #[arg(long, required_unless_present = "model")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Test a single embedding model file instead of running the pipeline.
    #[arg(long, conflicts_with = "config")]
    model: Option<PathBuf>,
    /// Spec file for --model (default: the built-in specs).
    #[arg(long, requires = "model")]
    specs: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PolicyArg::Strict, requires = "model")]
    oov_policy: PolicyArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Strict,
    Balance,
}

/// Error with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn config_failure(message: impl ToString) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

fn data_failure(message: impl ToString) -> Failure {
    Failure {
        code: 3,
        message: message.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<RunConfig, Failure> {
    let mut c =
        RunConfig::load(config).map_err(|e| config_failure(format!("config stage: {e}")))?;
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(o) = out {
        c.output = o.to_path_buf();
    }
    Ok(c)
}

fn load(args: &RunArgs) -> Result<RunConfig, Failure> {
    load_config(&args.config, args.seed, args.out.as_deref())
}

fn write_file(dir: &Path, relative: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    let path = dir.join(relative);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| data_failure(format!("{}: {e}", parent.display())))?;
    }
    fs::write(&path, bytes).map_err(|e| data_failure(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Ingest(args) => {
            let config = load(&args)?;
            let inputs = pipeline::load_inputs(&config)?;
            let corpus = &inputs.corpus;
            println!(
                "{} channels, {} videos, {} documents",
                corpus.channels.len(),
                corpus.video_ids().len(),
                corpus.documents.len()
            );
            let mut groups: Vec<&str> = corpus.channels.iter().map(|c| c.group.as_str()).collect();
            groups.sort_unstable();
            groups.dedup();
            for g in groups {
                for s in Source::ALL {
                    let n = corpus
                        .documents
                        .iter()
                        .filter(|d| {
                            d.source == s
                                && corpus.channel(&d.channel_id).is_some_and(|c| c.group == g)
                        })
                        .count();
                    println!("{g}\t{s}\t{n}");
                }
            }
            Ok(())
        }
        Command::Preprocess(args) => {
            let config = load(&args)?;
            let inputs = pipeline::load_inputs(&config)?;
            let docs = pipeline::preprocess(&config, &inputs);
            #[derive(Serialize)]
            struct Line<'a> {
                video_id: &'a str,
                channel_id: &'a str,
                group: &'a str,
                source: Source,
                language_score: f64,
                kept: bool,
                tokens: &'a [String],
            }
            let mut text = String::new();
            for d in &docs {
                let line = Line {
                    video_id: &d.doc.video_id,
                    channel_id: &d.doc.channel_id,
                    group: &d.group,
                    source: d.doc.source,
                    language_score: d.language_score,
                    kept: d.kept,
                    tokens: &d.doc.tokens,
                };
                text.push_str(&serde_json::to_string(&line).expect("serializable"));
                text.push('\n');
            }
            let kept = docs.iter().filter(|d| d.kept).count();
            let path = write_file(&config.output, "tokens.ndjson", text.as_bytes())?;
            println!(
                "{kept} of {} documents kept; wrote {}",
                docs.len(),
                path.display()
            );
            Ok(())
        }
        Command::Lexicon(args) => {
            if let Some(empath) = args.import_empath {
                return import_empath(
                    &empath,
                    args.to.as_deref().expect("clap requires --to"),
                    args.lemmas.as_deref(),
                );
            }
            let config = load_config(
                args.config.as_deref().expect("clap requires --config"),
                args.seed,
                args.out.as_deref(),
            )?;
            let inputs = pipeline::load_inputs(&config)?;
            let docs = pipeline::preprocess(&config, &inputs);
            let (section, _) = pipeline::lexical_layer(&config, &inputs, &docs)?;
            let path = write_file(&config.output, "lexical.json", &json_bytes(&section))?;
            let significant = section
                .correlations
                .iter()
                .filter(|r| r.significant)
                .count();
            println!(
                "{} video profiles, {} channel profiles, {} similarities, {} significant correlations; wrote {}",
                section.videos.len(),
                section.channels.len(),
                section.similarities.len(),
                significant,
                path.display()
            );
            Ok(())
        }
        Command::Topics(args) => {
            let config = load(&args)?;
            let inputs = pipeline::load_inputs(&config)?;
            let docs = pipeline::preprocess(&config, &inputs);
            let outcome = pipeline::topic_layer(&config, &docs)?;
            for (class, model) in outcome.classes.iter().zip(&outcome.models) {
                let mut bytes = Vec::new();
                topics::write_model(model, &mut bytes).expect("writing to memory");
                write_file(
                    &config.output,
                    &format!("models/lda/{}.txt", file_stem(&class.label())),
                    &bytes,
                )?;
            }
            write_file(&config.output, "topics.json", &json_bytes(&outcome.classes))?;
            print_topic_blocks(&outcome.classes);
            Ok(())
        }
        Command::Embed(args) => {
            let config = load(&args)?;
            let inputs = pipeline::load_inputs(&config)?;
            let docs = pipeline::preprocess(&config, &inputs);
            let emb = pipeline::embedding_layer(&config, &inputs, &docs)?;
            let analysis_models = write_embeddings(&config.output, &emb)?;
            println!(
                "base model: {} words, dim {} ({:?})",
                emb.base.len(),
                emb.base.dim(),
                emb.origin
            );
            for line in analysis_models {
                println!("{line}");
            }
            Ok(())
        }
        Command::Weat(args) => {
            if let Some(model) = args.model {
                return weat_on_model(&model, args.specs.as_deref(), args.oov_policy);
            }
            let config = load_config(
                args.config.as_deref().expect("clap requires --config"),
                args.seed,
                args.out.as_deref(),
            )?;
            let inputs = pipeline::load_inputs(&config)?;
            let docs = pipeline::preprocess(&config, &inputs);
            let emb = pipeline::embedding_layer(&config, &inputs, &docs)?;
            let section = pipeline::weat_layer(&config, &inputs, &emb);
            write_file(&config.output, "weat.json", &json_bytes(&section))?;
            println!("channel\tspec\tsource\td\tp");
            for row in &section.rows {
                for (s, o) in [("caption", &row.caption), ("comments", &row.comments)] {
                    let d = o
                        .effect_size
                        .map(|d| format!("{d:.3}"))
                        .unwrap_or_else(|| "-".into());
                    let p = o
                        .p_value
                        .map(|p| format!("{p:.4}"))
                        .unwrap_or_else(|| "-".into());
                    println!("{}\t{}\t{s}\t{d}\t{p}", row.channel_id, row.spec);
                }
            }
            Ok(())
        }
        Command::Report { run, format } => {
            let config = load(&run)?;
            let analysis = pipeline::analyze(&config)?;
            let format = match format {
                FormatArg::Json => ReportFormat::Json,
                FormatArg::Csv => ReportFormat::CsvBundle,
            };
            let written = pipeline::emit_report(&analysis.report, format, &config.output)?;
            print_written(&written);
            Ok(())
        }
        Command::RunAll(args) => {
            let config = load(&args)?;
            let analysis: Analysis = pipeline::analyze(&config)?;
            let written = pipeline::write_run(&analysis, &config.output)?;
            print_topic_blocks(&analysis.report.topics);
            print_written(&written);
            Ok(())
        }
    }
}

fn print_written(paths: &[PathBuf]) {
    let mut out = io::stdout().lock();
    for p in paths {
        let _ = writeln!(out, "wrote {}", p.display());
    }
}

fn print_topic_blocks(classes: &[TopicClass]) {
    for class in classes {
        println!(
            "{} {} ({} documents)",
            class.group, class.source, class.documents
        );
        for t in &class.topics {
            println!(
                "  topic {} [#{} dominant in {}]: {}",
                t.rank,
                t.topic,
                t.dominant_documents,
                t.words.join(" ")
            );
        }
    }
}

fn write_embeddings(dir: &Path, emb: &pipeline::Embeddings) -> Result<Vec<String>, Failure> {
    let mut lines = Vec::new();
    if emb.origin == pipeline::BaseOrigin::TrainedOnCorpus {
        let mut bytes = Vec::new();
        embedding::write_binary(&emb.base, &mut bytes).expect("writing to memory");
        write_file(dir, "models/embedding/base.emb", &bytes)?;
    }
    for m in &emb.models {
        let mut bytes = Vec::new();
        embedding::write_binary(&m.model, &mut bytes).expect("writing to memory");
        let rel = format!(
            "models/embedding/{}.emb",
            file_stem(&format!("{}_{}", m.channel_id, m.source))
        );
        let path = write_file(dir, &rel, &bytes)?;
        lines.push(format!(
            "{} {}: {} documents, {} words -> {}",
            m.channel_id,
            m.source,
            m.documents,
            m.model.len(),
            path.display()
        ));
    }
    Ok(lines)
}

fn import_empath(source: &Path, to: &Path, lemmas: Option<&Path>) -> Result<(), Failure> {
    let text = fs::read_to_string(source)
        .map_err(|e| config_failure(format!("{}: {e}", source.display())))?;
    let table = match lemmas {
        Some(p) => LemmaTable::load(p).map_err(data_failure)?,
        None => LemmaTable::default(),
    };
    let lexicon =
        CategoryLexicon::import_empath(&text, &DEFAULT_CATEGORIES, &table).map_err(data_failure)?;
    fs::write(to, lexicon.to_tsv()).map_err(|e| data_failure(format!("{}: {e}", to.display())))?;
    println!("wrote {} categories to {}", lexicon.len(), to.display());
    Ok(())
}

fn weat_on_model(model: &Path, specs: Option<&Path>, policy: PolicyArg) -> Result<(), Failure> {
    let model = load_any(model).map_err(|e| data_failure(format!("{}: {e}", model.display())))?;
    let specs = match specs {
        Some(p) => weat::load_specs(p).map_err(data_failure)?,
        None => weat::builtin_specs(),
    };
    let policy = match policy {
        PolicyArg::Strict => OovPolicy::Strict,
        PolicyArg::Balance => OovPolicy::Balance,
    };
    let mut failed = false;
    println!("spec\tstatistic\td\tp\tpartitions\tdropped");
    for spec in &specs {
        match run_weat(&model, spec, policy, &PermutationOptions::default()) {
            Ok(r) => println!(
                "{}\t{:.6}\t{}\t{}\t{}\t{}",
                r.spec,
                r.statistic,
                r.effect_size
                    .map(|d| format!("{d:.6}"))
                    .unwrap_or_else(|| "-".into()),
                r.p_value,
                r.partitions_evaluated,
                r.dropped.join(",")
            ),
            Err(e) => {
                failed = true;
                eprintln!("{}: {e}", spec.name);
            }
        }
    }
    if failed {
        return Err(data_failure("some specs could not be evaluated"));
    }
    Ok(())
}

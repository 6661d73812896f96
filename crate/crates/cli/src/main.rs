use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use topicvd::assemble::{assemble_sentences, pair_bilingual, SentencePair};
use topicvd::clip::{
    build_manifest, cut_plan_text, emit_cut_plan, parse_transcript, verify_transcript,
    DEFAULT_MISMATCH_THRESHOLD,
};
use topicvd::config::{assembly_rules, load_map, markup_filter, PipelineConfig};
use topicvd::context::{retrieve_context, ContextQuery, Similarity};
use topicvd::corpus::{
    augment, build_scenario, build_split, scenario_file, split_table, stats, CorpusManifest,
    ScenarioKind, ScenarioSpec, SplitRules, SplitSpec, Topic,
};
use topicvd::fusion::{
    alignment_scores, bi_attention, selective_attention, FeatureMatrix, FusionOp, ScoreFn,
};
use topicvd::metrics::{bleu4, tokenize, BleuConfig, TokenizeLang};
use topicvd::pipeline::{run_pipeline, REPORT_FILE};
use topicvd::scoring::{filter_by_score, score_pairs, EmbeddingStore};
use topicvd::subtitle::{clean_track, parse_srt_file, serialize_srt, split_mixed, SubtitleTrack};
use topicvd::{Features, Matrix};

#[derive(Parser)]
#[command(name = "topicvd", version, about = "Bilingual documentary subtitle corpus toolkit")]
struct Cli {
    /// Flat `key = value` config file; `TOPICVD_<KEY>` variables override it.
    #[arg(long, global = true, env = "TOPICVD_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an SRT file and print it canonically or as one JSON record per cue.
    Parse {
        file: PathBuf,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: bool,
        /// Strip markup and blacklisted symbols.
        #[arg(long)]
        clean: bool,
    },
    /// Assemble sentences from a subtitle pair and align them bilingually.
    Assemble {
        source: PathBuf,
        /// Target-language SRT; omit when `source` carries both languages.
        target: Option<PathBuf>,
        #[arg(long)]
        title: String,
        #[arg(long)]
        topic: Topic,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attach quality scores from a vector file and optionally filter.
    Score {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a vector file; fails on any warning.
    ValidateVectors { file: PathBuf },
    /// Build the clip manifest (and cut plan) from pairs.
    Manifest {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Clip records without texts instead of corpus records.
        #[arg(long)]
        clips_only: bool,
        #[arg(long)]
        cut_plan: Option<PathBuf>,
    },
    /// Compare pairs with a recognizer transcript (TSV start, end, text).
    Verify {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MISMATCH_THRESHOLD)]
        threshold: f64,
    },
    /// Seeded documentary-level train/valid/test split.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = SplitRules::default().two_heldout_from)]
        two_heldout_from: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the per-topic split table instead of the split file.
        #[arg(long)]
        table: bool,
    },
    /// Record ids of one training scenario.
    Scenario {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        kind: ScenarioKind,
        #[arg(long)]
        topic: Topic,
        #[arg(long)]
        seed: u64,
        /// Extra corpus for the augmented kinds.
        #[arg(long)]
        extra: Option<PathBuf>,
    },
    /// Merge an extra corpus into a base corpus and report per-topic deltas.
    Augment {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        extra: PathBuf,
        /// Expected post-merge size, `Topic:count`; repeatable.
        #[arg(long = "claim")]
        claims: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-topic corpus statistics, or the split table when a split is given.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Most similar subtitles of the same documentary.
    Context {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        doc: String,
        #[arg(long)]
        position: u32,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        before_only: bool,
        /// Use source-sentence embeddings instead of token overlap.
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Run a fusion kernel on text and video feature matrices.
    Fuse {
        #[arg(long, value_enum)]
        op: FuseOp,
        #[arg(long)]
        text: PathBuf,
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        g: Option<String>,
        /// Bi-attention over the raw frames rather than the selective-attention output.
        #[arg(long)]
        raw_video: bool,
        /// Print the gradient-check error of the sum-of-outputs probe.
        #[arg(long)]
        check: Option<f64>,
    },
    /// Corpus-level BLEU-4 of line-aligned files.
    Bleu(BleuArgs),
    /// Run the whole pipeline described by `--config`.
    Run,
}

#[derive(Args)]
struct BleuArgs {
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long, value_enum, default_value_t = Lang::Zh)]
    lang: Lang,
    #[arg(long)]
    lowercase: bool,
    #[arg(long)]
    smoothing: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FuseOp {
    Align,
    Selattn,
    Biattn,
}

#[derive(Clone, Copy, ValueEnum)]
enum Lang {
    En,
    Zh,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn settings(path: Option<&Path>) -> Result<BTreeMap<String, String>> {
    Ok(load_map(path, |k| std::env::var(k).ok())?.0)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

fn read_pairs(path: &Path) -> Result<Vec<SentencePair>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1))
        })
        .collect()
}

fn read_features(path: &Path, text: bool) -> Result<Features> {
    let m = Matrix::read(path)?;
    Ok(if text {
        FeatureMatrix::text(m)?
    } else {
        FeatureMatrix::video(m)?
    })
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Parse { file, strict, json, clean } => {
            let parsed = parse_srt_file(&file, strict)?;
            for w in &parsed.warnings {
                eprintln!("warning: {}: {w}", file.display());
            }
            let track = if clean {
                clean_track(&parsed.track, &markup_filter(&settings(config)?)?).0
            } else {
                parsed.track
            };
            if json {
                emit(None, &jsonl(&track.cues)?)?;
            } else {
                std::io::stdout().write_all(&serialize_srt(&track))?;
            }
        }
        Command::Assemble { source, target, title, topic, strict, out } => {
            let settings = settings(config)?;
            let filter = markup_filter(&settings)?;
            let rules = assembly_rules(&settings)?;
            let load = |path: &Path| -> Result<SubtitleTrack> {
                let parsed = parse_srt_file(path, strict)?;
                for w in &parsed.warnings {
                    eprintln!("warning: {}: {w}", path.display());
                }
                Ok(clean_track(&parsed.track, &filter).0)
            };
            let (src, tgt) = match &target {
                Some(t) => (load(&source)?, load(t)?),
                None => split_mixed(&load(&source)?),
            };
            let pairing = pair_bilingual(
                &assemble_sentences(&src, &rules),
                &assemble_sentences(&tgt, &rules),
                &title,
                topic,
            );
            if !pairing.unmatched_source.is_empty() || !pairing.unmatched_target.is_empty() {
                eprintln!(
                    "warning: {} unmatched source and {} unmatched target sentences",
                    pairing.unmatched_source.len(),
                    pairing.unmatched_target.len()
                );
            }
            emit(out.as_deref(), &jsonl(&pairing.pairs)?)?;
        }
        Command::Score { pairs, vectors, threshold, out } => {
            let pairs = read_pairs(&pairs)?;
            let parsed = EmbeddingStore::read(&vectors)?;
            for w in &parsed.warnings {
                eprintln!("warning: {}: {w}", vectors.display());
            }
            let scored = score_pairs(&pairs, &parsed.store)?;
            for m in &scored.missing {
                eprintln!("warning: no {} vector for ({}, {})", m.language, m.documentary, m.position);
            }
            let kept = match threshold {
                Some(t) => {
                    let (kept, dropped) = filter_by_score(&scored.pairs, t)?;
                    eprintln!("kept {} of {} pairs", kept.len(), kept.len() + dropped.len());
                    kept
                }
                None => scored.pairs,
            };
            emit(out.as_deref(), &jsonl(&kept)?)?;
        }
        Command::ValidateVectors { file } => {
            let parsed = EmbeddingStore::read(&file)?;
            for w in &parsed.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}",
                json!({
                    "dim": parsed.store.dim(),
                    "records": parsed.store.len(),
                    "warnings": parsed.warnings.len(),
                })
            );
            if !parsed.warnings.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Manifest { pairs, out, clips_only, cut_plan } => {
            let pairs = read_pairs(&pairs)?;
            let clips = build_manifest(&pairs)?;
            if let Some(path) = cut_plan {
                emit(Some(&path), &cut_plan_text(&emit_cut_plan(&clips)))?;
            }
            let text = if clips_only {
                jsonl(&clips)?
            } else {
                CorpusManifest::from_pairs(&pairs)?.to_jsonl()
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Verify { pairs, transcript, threshold } => {
            let pairs = read_pairs(&pairs)?;
            let text = std::fs::read_to_string(&transcript)
                .with_context(|| format!("reading {}", transcript.display()))?;
            let checks = verify_transcript(&pairs, &parse_transcript(&text)?, threshold);
            emit(None, &jsonl(&checks)?)?;
            let review = checks.iter().filter(|c| c.outcome.needs_review()).count();
            eprintln!("{review} of {} pairs need review", checks.len());
        }
        Command::Split { manifest, seed, two_heldout_from, out, table } => {
            let manifest = CorpusManifest::read(&manifest)?;
            let split = build_split(&manifest, seed, &SplitRules { two_heldout_from });
            for w in &split.warnings {
                eprintln!("warning: {w}");
            }
            if table {
                emit(out.as_deref(), &split_table(&manifest, &split).to_string())?;
            } else {
                emit(out.as_deref(), &split.to_text())?;
            }
        }
        Command::Scenario { manifest, split, kind, topic, seed, extra } => {
            let manifest = CorpusManifest::read(&manifest)?;
            let split = SplitSpec::read(&split)?;
            let extra = extra.as_deref().map(CorpusManifest::read).transpose()?;
            let spec = ScenarioSpec { kind, test_topic: topic, seed };
            let records = build_scenario(&manifest, &split, &spec, extra.as_ref())?;
            emit(None, &scenario_file(&records))?;
        }
        Command::Augment { base, extra, claims, out } => {
            let base = CorpusManifest::read(&base)?;
            let extra = CorpusManifest::read(&extra)?;
            let claims = claims
                .iter()
                .map(|c| -> Result<(Topic, usize)> {
                    let (t, n) = c.split_once(':').context("claim must be `Topic:count`")?;
                    Ok((t.parse()?, n.trim().replace(',', "").parse()?))
                })
                .collect::<Result<Vec<_>>>()?;
            let (merged, report) = augment(&base, &extra)?;
            let discrepancies = report.discrepancies(&claims);
            for d in &discrepancies {
                eprintln!("discrepancy: {d}");
            }
            if let Some(path) = out {
                emit(Some(&path), &merged.to_jsonl())?;
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "rows": report.rows,
                    "discrepancies": discrepancies,
                }))?
            );
        }
        Command::Stats { manifest, split, json } => {
            let manifest = CorpusManifest::read(&manifest)?;
            match split {
                Some(path) => {
                    let split = SplitSpec::read(&path)?;
                    let table = split_table(&manifest, &split);
                    if json {
                        println!("{}", serde_json::to_string_pretty(&table)?);
                    } else {
                        print!("{table}");
                    }
                }
                None => {
                    let s = stats(&manifest);
                    if json {
                        println!("{}", serde_json::to_string_pretty(&s)?);
                    } else {
                        print!("{s}");
                    }
                }
            }
        }
        Command::Context { manifest, doc, position, k, before_only, vectors } => {
            let manifest = CorpusManifest::read(&manifest)?;
            let store = vectors.as_deref().map(EmbeddingStore::read).transpose()?;
            let sim = match &store {
                Some(parsed) => Similarity::Embedding(&parsed.store),
                None => Similarity::Lexical,
            };
            let set = retrieve_context(&manifest, &doc, position, ContextQuery { k, before_only }, sim)?;
            println!("{}", serde_json::to_string(&set)?);
        }
        Command::Fuse { op, text, video, g, raw_video, check } => {
            let settings = settings(config)?;
            let g: ScoreFn = match g.or_else(|| settings.get("fusion.g").cloned()) {
                Some(g) => g.parse()?,
                None => ScoreFn::default(),
            };
            let h = read_features(&text, true)?;
            let v = read_features(&video, false)?;
            let (kernel, output) = match op {
                FuseOp::Align => (FusionOp::AlignmentScores, alignment_scores(&h, &v, g)?.to_text()),
                FuseOp::Selattn => (
                    FusionOp::SelectiveAttention,
                    selective_attention(&h, &v)?.matrix.to_text(),
                ),
                FuseOp::Biattn => {
                    let attended = if raw_video { v.clone() } else { selective_attention(&h, &v)? };
                    let out = bi_attention(&h, &attended, g)?;
                    let text = out.text_enhanced.to_text() + &out.video_enhanced.to_text();
                    if let Some(eps) = check {
                        let err = topicvd::fusion::numeric_gradient_check(
                            FusionOp::BiAttention,
                            &h,
                            &attended,
                            g,
                            eps,
                        )?;
                        eprintln!("gradient check: max relative error {err:e}");
                    }
                    (FusionOp::BiAttention, text)
                }
            };
            if let (Some(eps), false) = (check, kernel == FusionOp::BiAttention) {
                let err = topicvd::fusion::numeric_gradient_check(kernel, &h, &v, g, eps)?;
                eprintln!("gradient check: max relative error {err:e}");
            }
            print!("{output}");
        }
        Command::Bleu(args) => {
            let lang = match args.lang {
                Lang::En => TokenizeLang::En,
                Lang::Zh => TokenizeLang::Zh,
            };
            let lines = |path: &Path| -> Result<Vec<Vec<String>>> {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Ok(text.lines().map(|l| tokenize(l, lang, args.lowercase)).collect())
            };
            let report = bleu4(
                &lines(&args.hyp)?,
                &lines(&args.reference)?,
                &BleuConfig { smoothing: args.smoothing },
            )?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Run => {
            let Some(path) = config else {
                bail!("`run` needs --config or TOPICVD_CONFIG");
            };
            let config = PipelineConfig::load(path)?;
            let outcome = run_pipeline(&config)?;
            let report = outcome.out_dir.join(REPORT_FILE);
            if let Some(failure) = outcome.failure {
                eprintln!("error: {failure}");
                eprintln!("run report: {}", report.display());
                return Ok(ExitCode::FAILURE);
            }
            for stage in &outcome.report.stages {
                for w in &stage.warnings {
                    eprintln!("warning: {}: {w}", stage.stage);
                }
            }
            println!("{}", report.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

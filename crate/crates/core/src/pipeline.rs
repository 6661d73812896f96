//! End-to-end corpus construction run: SRT files in, corpus artifacts and a
//! machine-readable run report out.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::assemble::{assemble_sentences, pair_bilingual, SentencePair};
use crate::clip::{build_manifest, cut_plan_text, emit_cut_plan};
use crate::config::{ContextSimilarity, PipelineConfig};
use crate::context::{retrieve_all, ContextQuery, Similarity};
use crate::corpus::{
    augment, build_scenario, build_split, scenario_file, split_table, stats, CorpusManifest,
    ScenarioSpec, SplitRole, SplitSpec, Topic,
};
use crate::error::{Error, Result};
use crate::fusion::{bi_attention, selective_attention, FeatureMatrix, Matrix};
use crate::metrics::{bleu4, tokenize, BleuConfig};
use crate::scoring::{filter_by_score, score_pairs, EmbeddingStore};
use crate::subtitle::{clean_track, parse_srt_file, split_mixed, SubtitleTrack};

pub const STAGES: [&str; 8] = [
    "subtitle-parser",
    "sentence-assembler",
    "alignment-scorer",
    "clip-segmenter",
    "corpus-builder",
    "context-retriever",
    "fusion-kernels",
    "eval-metrics",
];

pub const REPORT_FILE: &str = "run_report.json";

/// One line of the documentary list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentaryEntry {
    pub title: String,
    pub topic: Topic,
    pub source: PathBuf,
    /// `None` when `source` holds both languages.
    pub target: Option<PathBuf>,
}

/// Parses `title TAB topic TAB source.srt TAB target.srt` lines, with `-`
/// as the target for mixed-language files. Paths resolve against `base`.
pub fn parse_documentaries(text: &str, base: &Path) -> Result<Vec<DocumentaryEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [title, topic, source, target] = fields[..] else {
            return Err(Error::parse(i + 1, format!("expected 4 tab-separated fields, got {}", fields.len())));
        };
        if out.iter().any(|d: &DocumentaryEntry| d.title == title) {
            return Err(Error::parse(i + 1, format!("duplicate documentary `{title}`")));
        }
        out.push(DocumentaryEntry {
            title: title.to_string(),
            topic: topic.parse()?,
            source: base.join(source),
            target: (target != "-").then(|| base.join(target)),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Skipped,
    Failed,
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: &'static str,
    pub status: StageStatus,
    pub counts: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl StageReport {
    fn new(stage: &'static str) -> Self {
        StageReport {
            stage,
            status: StageStatus::NotRun,
            counts: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    fn count(&mut self, key: &str, value: impl Into<Value>) {
        self.counts.insert(key.to_string(), value.into());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub success: bool,
    pub failed_stage: Option<&'static str>,
    pub error: Option<String>,
    pub stages: Vec<StageReport>,
    pub outputs: Vec<String>,
}

/// A stage error, tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub report: RunReport,
    pub failure: Option<StageError>,
}

impl RunOutcome {
    pub fn is_success(&self) -> bool {
        self.failure.is_none()
    }
}

struct Run<'c> {
    config: &'c PipelineConfig,
    reports: Vec<StageReport>,
    outputs: Vec<String>,
    tracks: Vec<(DocumentaryEntry, SubtitleTrack, SubtitleTrack)>,
    pairs: Vec<SentencePair>,
    vectors: Option<EmbeddingStore>,
    manifest: CorpusManifest,
}

impl Run<'_> {
    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.config.out_dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    fn report(&mut self, stage: usize) -> &mut StageReport {
        &mut self.reports[stage]
    }

    fn subtitle_parser(&mut self) -> Result<()> {
        let text = std::fs::read_to_string(&self.config.documentaries)
            .map_err(|e| Error::io(&self.config.documentaries, e))?;
        let base = self.config.documentaries.parent().unwrap_or(Path::new("."));
        let entries = parse_documentaries(&text, base)?;
        let (mut cues_src, mut cues_tgt, mut dropped) = (0, 0, 0);
        for entry in entries {
            let mut load = |path: &Path| -> Result<SubtitleTrack> {
                let parsed = parse_srt_file(path, self.config.strict)?;
                for w in &parsed.warnings {
                    self.reports[0]
                        .warnings
                        .push(format!("{}: {w}", path.display()));
                }
                let (track, n) = clean_track(&parsed.track, &self.config.markup);
                dropped += n;
                Ok(track)
            };
            let (src, tgt) = match &entry.target {
                Some(target) => (load(&entry.source)?, load(target)?),
                None => split_mixed(&load(&entry.source)?),
            };
            cues_src += src.len();
            cues_tgt += tgt.len();
            self.tracks.push((entry, src, tgt));
        }
        let n = self.tracks.len();
        let r = self.report(0);
        r.count("documentaries", n);
        r.count("source_cues", cues_src);
        r.count("target_cues", cues_tgt);
        r.count("cues_emptied_by_markup", dropped);
        Ok(())
    }

    fn sentence_assembler(&mut self) -> Result<()> {
        let rules = &self.config.assembly;
        let (mut n_src, mut n_tgt) = (0, 0);
        let mut warnings = Vec::new();
        for (entry, src, tgt) in &self.tracks {
            let s = assemble_sentences(src, rules);
            let t = assemble_sentences(tgt, rules);
            n_src += s.len();
            n_tgt += t.len();
            let pairing = pair_bilingual(&s, &t, &entry.title, entry.topic);
            for (side, unmatched) in [
                ("source", &pairing.unmatched_source),
                ("target", &pairing.unmatched_target),
            ] {
                if !unmatched.is_empty() {
                    warnings.push(format!(
                        "{}: {} unmatched {side} sentences",
                        entry.title,
                        unmatched.len()
                    ));
                }
            }
            self.pairs.extend(pairing.pairs);
        }
        let text = jsonl(&self.pairs)?;
        self.write("pairs.jsonl", text)?;
        let n_pairs = self.pairs.len();
        let r = self.report(1);
        r.count("source_sentences", n_src);
        r.count("target_sentences", n_tgt);
        r.count("pairs", n_pairs);
        r.warnings = warnings;
        Ok(())
    }

    fn alignment_scorer(&mut self) -> Result<bool> {
        let Some(path) = &self.config.vectors else {
            return Ok(false);
        };
        let parsed = EmbeddingStore::read(path)?;
        let scored = score_pairs(&self.pairs, &parsed.store)?;
        let mut warnings: Vec<String> = parsed.warnings.iter().map(|w| w.to_string()).collect();
        warnings.extend(scored.missing.iter().map(|m| {
            format!("no {} vector for ({}, {})", m.language, m.documentary, m.position)
        }));
        let total = scored.pairs.len();
        let mut dropped = 0;
        self.pairs = match self.config.score_threshold {
            Some(threshold) => {
                let (kept, gone) = filter_by_score(&scored.pairs, threshold)?;
                dropped = gone.len();
                kept
            }
            None => scored.pairs,
        };
        self.vectors = Some(parsed.store);
        let text = jsonl(&self.pairs)?;
        self.write("scored_pairs.jsonl", text)?;
        let r = self.report(2);
        r.count("scored", total - scored.missing.len().min(total));
        r.count("missing_vectors", scored.missing.len());
        r.count("dropped_below_threshold", dropped);
        r.count("kept", total - dropped);
        r.warnings = warnings;
        Ok(true)
    }

    fn clip_segmenter(&mut self) -> Result<()> {
        let clips = build_manifest(&self.pairs)?;
        let plan = emit_cut_plan(&clips);
        self.write("clips.jsonl", jsonl(&clips)?)?;
        self.write("cut_plan.tsv", cut_plan_text(&plan))?;
        self.manifest = CorpusManifest::from_pairs(&self.pairs)?;
        let frames = self.config.frames;
        let r = self.report(3);
        r.count("clips", clips.len());
        r.count("cut_directives", plan.len());
        r.count("frame_rate_hz", frames.rate_hz);
        r.count("ssim_threshold", frames.ssim_threshold);
        Ok(())
    }

    fn corpus_builder(&mut self) -> Result<()> {
        let config = self.config;
        let manifest = std::mem::take(&mut self.manifest);
        self.write("manifest.jsonl", manifest.to_jsonl())?;

        let split = match &config.split_file {
            Some(path) => SplitSpec::read(path)?,
            None => build_split(&manifest, config.seed, &config.split_rules),
        };
        let mut warnings = split.warnings.clone();
        self.write("split.tsv", split.to_text())?;
        let table = split_table(&manifest, &split);
        if !table.unassigned.is_empty() {
            warnings.push(format!("documentaries without a split assignment: {}", table.unassigned.join(", ")));
        }
        self.write("split_table.txt", table.to_string())?;
        let corpus_stats = stats(&manifest);
        self.write_json("stats.json", &corpus_stats)?;
        self.write("stats.txt", corpus_stats.to_string())?;

        let extra = config
            .extra_manifest
            .as_deref()
            .map(CorpusManifest::read)
            .transpose()?;
        let mut augmentation = None;
        if let Some(extra) = &extra {
            let train = manifest.restrict(&split, SplitRole::Train);
            let (_, report) = augment(&train, extra)?;
            let discrepancies = report.discrepancies(&config.augment_claims);
            warnings.extend(discrepancies.iter().map(|d| format!("augmentation discrepancy: {d}")));
            self.write_json(
                "augment.json",
                &json!({ "rows": report.rows, "discrepancies": discrepancies }),
            )?;
            augmentation = Some(discrepancies.len());
        }

        let mut scenario_len = None;
        if let Some((kind, test_topic)) = config.scenario {
            let spec = ScenarioSpec {
                kind,
                test_topic,
                seed: config.seed,
            };
            let records = build_scenario(&manifest, &split, &spec, extra.as_ref())?;
            scenario_len = Some(records.len());
            self.write("scenario.txt", scenario_file(&records))?;
        }

        let r = self.report(4);
        r.count("records", manifest.len());
        r.count("documentaries", manifest.documentaries().len());
        for row in table.rows.iter().chain([&table.total]) {
            r.count(
                &format!("split.{}", row.label.to_lowercase()),
                json!({
                    "train": row.train.pairs,
                    "valid": row.valid.pairs,
                    "test": row.test.pairs,
                }),
            );
        }
        if let Some(n) = augmentation {
            r.count("augmentation_discrepancies", n);
        }
        if let Some(n) = scenario_len {
            r.count("scenario_records", n);
        }
        r.warnings = warnings;
        self.manifest = manifest;
        Ok(())
    }

    fn context_retriever(&mut self) -> Result<bool> {
        let config = self.config;
        if config.context_k == 0 {
            return Ok(false);
        }
        let sim = match (config.context_similarity, &self.vectors) {
            (ContextSimilarity::Embedding, Some(store)) => Similarity::Embedding(store),
            (ContextSimilarity::Embedding, None) => {
                return Err(Error::Config("embedding similarity without vectors".into()))
            }
            (ContextSimilarity::Lexical, _) => Similarity::Lexical,
        };
        let query = ContextQuery {
            k: config.context_k,
            before_only: config.context_before_only,
        };
        let sets = retrieve_all(&self.manifest, query, sim)?;
        self.write("context.jsonl", jsonl(&sets)?)?;
        let r = self.report(5);
        r.count("anchors", sets.len());
        r.count("k", config.context_k);
        Ok(true)
    }

    fn fusion_kernels(&mut self) -> Result<bool> {
        let (Some(text_path), Some(video_path)) = (&self.config.fusion_text, &self.config.fusion_video) else {
            return Ok(false);
        };
        let text = FeatureMatrix::text(Matrix::<f64>::read(text_path)?)?;
        let video = FeatureMatrix::video(Matrix::<f64>::read(video_path)?)?;
        let attended = if self.config.fusion_raw_video {
            video.clone()
        } else {
            let out = selective_attention(&text, &video)?;
            self.write("fusion_selective.txt", out.matrix.to_text())?;
            out
        };
        let out = bi_attention(&text, &attended, self.config.score_fn)?;
        self.write("fusion_text.txt", out.text_enhanced.to_text())?;
        self.write("fusion_video.txt", out.video_enhanced.to_text())?;
        let g = self.config.score_fn.as_str();
        let r = self.report(6);
        r.count("text_rows", text.len());
        r.count("video_rows", video.len());
        r.count("dim", text.dim());
        r.count("g", g);
        Ok(true)
    }

    fn eval_metrics(&mut self) -> Result<bool> {
        let (Some(hyp), Some(reference)) = (&self.config.bleu_hyp, &self.config.bleu_ref) else {
            return Ok(false);
        };
        let lines = |path: &Path| -> Result<Vec<Vec<String>>> {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok(text
                .lines()
                .map(|l| tokenize(l, self.config.bleu_lang, self.config.bleu_lowercase))
                .collect())
        };
        let config = BleuConfig {
            smoothing: self.config.bleu_smoothing,
        };
        let report = bleu4(&lines(hyp)?, &lines(reference)?, &config)?;
        self.write_json("bleu.json", &report)?;
        let r = self.report(7);
        r.count("bleu", report.bleu);
        r.count("hyp_len", report.hyp_len);
        r.count("ref_len", report.ref_len);
        Ok(true)
    }
}

fn jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

/// Runs every stage in order. Stops at the first failing stage; the run
/// report is written in every case that the run directory can be created.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunOutcome> {
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let mut run = Run {
        config,
        reports: STAGES.iter().map(|s| StageReport::new(s)).collect(),
        outputs: Vec::new(),
        tracks: Vec::new(),
        pairs: Vec::new(),
        vectors: None,
        manifest: CorpusManifest::default(),
    };

    let mut failure = None;
    for (i, stage) in STAGES.iter().enumerate() {
        let result = match i {
            0 => run.subtitle_parser().map(|_| true),
            1 => run.sentence_assembler().map(|_| true),
            2 => run.alignment_scorer(),
            3 => run.clip_segmenter().map(|_| true),
            4 => run.corpus_builder().map(|_| true),
            5 => run.context_retriever(),
            6 => run.fusion_kernels(),
            _ => run.eval_metrics(),
        };
        run.reports[i].status = match result {
            Ok(true) => StageStatus::Ok,
            Ok(false) => StageStatus::Skipped,
            Err(error) => {
                failure = Some(StageError { stage, error });
                StageStatus::Failed
            }
        };
        if failure.is_some() {
            break;
        }
    }

    let report = RunReport {
        seed: config.seed,
        success: failure.is_none(),
        failed_stage: failure.as_ref().map(|f| f.stage),
        error: failure.as_ref().map(|f| f.error.to_string()),
        stages: run.reports,
        outputs: run.outputs,
    };
    let path = config.out_dir.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(RunOutcome {
        out_dir: config.out_dir.clone(),
        report,
        failure,
    })
}

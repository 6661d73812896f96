//! Topic-annotated corpus: documentary-level splits, training scenarios,
//! augmentation merges and summary statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assemble::SentencePair;
use crate::clip::{build_manifest, ClipRecord};
use crate::error::{Error, Result};
use crate::subtitle::Timecode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Topic {
    Economy,
    Food,
    History,
    Figure,
    Military,
    Nature,
    Social,
    Technology,
}

impl Topic {
    pub const ALL: [Topic; 8] = [
        Topic::Economy,
        Topic::Food,
        Topic::History,
        Topic::Figure,
        Topic::Military,
        Topic::Nature,
        Topic::Social,
        Topic::Technology,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Topic::Economy => "Economy",
            Topic::Food => "Food",
            Topic::History => "History",
            Topic::Figure => "Figure",
            Topic::Military => "Military",
            Topic::Nature => "Nature",
            Topic::Social => "Social",
            Topic::Technology => "Technology",
        }
    }

    fn ordinal(self) -> u64 {
        Topic::ALL.iter().position(|t| *t == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topic {
    type Err = Error;

    /// Case-insensitive; `Human` is accepted as an alias of `Figure`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "human" {
            return Ok(Topic::Figure);
        }
        Topic::ALL
            .into_iter()
            .find(|t| t.as_str().to_ascii_lowercase() == lower)
            .ok_or_else(|| Error::UnknownTopic(s.to_string()))
    }
}

/// A clip record with its subtitle texts attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    #[serde(flatten)]
    pub clip: ClipRecord,
    pub source_text: String,
    pub target_text: String,
}

impl CorpusRecord {
    pub fn title(&self) -> &str {
        &self.clip.title
    }

    pub fn topic(&self) -> Topic {
        self.clip.topic
    }

    pub fn position(&self) -> u32 {
        self.clip.position
    }

    /// `title TAB position`, the identifier used in scenario files.
    pub fn record_id(&self) -> String {
        format!("{}\t{}", self.clip.title, self.clip.position)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusManifest {
    records: Vec<CorpusRecord>,
}

impl CorpusManifest {
    /// Validates that `(title, position)` is unique and that every
    /// documentary carries a single topic.
    pub fn new(records: Vec<CorpusRecord>) -> Result<Self> {
        let mut keys = HashSet::new();
        let mut topics: BTreeMap<&str, Topic> = BTreeMap::new();
        for r in &records {
            if !keys.insert((r.title(), r.position())) {
                return Err(Error::DuplicateRecord {
                    documentary: r.title().to_string(),
                    position: r.position(),
                });
            }
            match topics.insert(r.title(), r.topic()) {
                Some(t) if t != r.topic() => {
                    return Err(Error::Invalid(format!(
                        "documentary `{}` labelled both {t} and {}",
                        r.title(),
                        r.topic()
                    )))
                }
                _ => {}
            }
        }
        Ok(CorpusManifest { records })
    }

    /// Clip manifest of `pairs` with the sentence texts attached.
    pub fn from_pairs(pairs: &[SentencePair]) -> Result<Self> {
        let texts: HashMap<(&str, u32), &SentencePair> = pairs
            .iter()
            .map(|p| ((p.documentary.as_str(), p.position), p))
            .collect();
        let records = build_manifest(pairs)?
            .into_iter()
            .map(|clip| {
                let pair = texts[&(clip.title.as_str(), clip.position)];
                CorpusRecord {
                    source_text: pair.source.text.clone(),
                    target_text: pair.target.text.clone(),
                    clip,
                }
            })
            .collect();
        Self::new(records)
    }

    pub fn records(&self) -> &[CorpusRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Documentary title → (topic, pair count), ordered by title.
    pub fn documentaries(&self) -> BTreeMap<&str, (Topic, usize)> {
        let mut docs: BTreeMap<&str, (Topic, usize)> = BTreeMap::new();
        for r in &self.records {
            docs.entry(r.title()).or_insert((r.topic(), 0)).1 += 1;
        }
        docs
    }

    pub fn find(&self, title: &str, position: u32) -> Option<&CorpusRecord> {
        self.records
            .iter()
            .find(|r| r.title() == title && r.position() == position)
    }

    /// Records whose documentary is assigned `role` in `split`.
    pub fn restrict(&self, split: &SplitSpec, role: SplitRole) -> CorpusManifest {
        CorpusManifest {
            records: self
                .records
                .iter()
                .filter(|r| split.role_of(r.title()) == Some(role))
                .cloned()
                .collect(),
        }
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: CorpusRecord = serde_json::from_str(line)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
            records.push(record);
        }
        Self::new(records)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Train,
    Valid,
    Test,
}

impl SplitRole {
    pub const ALL: [SplitRole; 3] = [SplitRole::Train, SplitRole::Valid, SplitRole::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitRole::Train => "train",
            SplitRole::Valid => "valid",
            SplitRole::Test => "test",
        }
    }
}

impl FromStr for SplitRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(SplitRole::Train),
            "valid" | "validation" | "dev" => Ok(SplitRole::Valid),
            "test" => Ok(SplitRole::Test),
            other => Err(Error::Invalid(format!("unknown split `{other}`"))),
        }
    }
}

/// Whole-documentary assignment to train/valid/test.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitSpec {
    pub seed: u64,
    pub assignment: BTreeMap<String, SplitRole>,
    pub warnings: Vec<String>,
}

impl SplitSpec {
    pub fn role_of(&self, title: &str) -> Option<SplitRole> {
        self.assignment.get(title).copied()
    }

    /// `documentary TAB role` lines, preceded by a `# seed=<n>` comment.
    pub fn to_text(&self) -> String {
        let mut out = format!("# seed={}\n", self.seed);
        for (title, role) in &self.assignment {
            out.push_str(&format!("{title}\t{}\n", role.as_str()));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = SplitSpec::default();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(seed) = comment.trim().strip_prefix("seed=") {
                    spec.seed = seed
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(i + 1, format!("bad seed `{seed}`")))?;
                }
                continue;
            }
            let (title, role) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected `documentary TAB role`"))?;
            let role = role.parse().map_err(|e: Error| Error::parse(i + 1, e.to_string()))?;
            if spec.assignment.insert(title.to_string(), role).is_some() {
                return Err(Error::parse(i + 1, format!("documentary `{title}` assigned twice")));
            }
        }
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRules {
    /// Topics with at least this many documentaries hold out two
    /// documentaries each for valid and test; smaller topics hold out one.
    pub two_heldout_from: usize,
}

impl Default for SplitRules {
    fn default() -> Self {
        SplitRules {
            two_heldout_from: 20,
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seeded documentary-level split. Per topic, documentaries (ordered by
/// title) are shuffled and the first one or two go to valid, the next one
/// or two to test, the rest to train. Topics with fewer than three
/// documentaries go entirely to train with a warning.
pub fn build_split(manifest: &CorpusManifest, seed: u64, rules: &SplitRules) -> SplitSpec {
    let mut by_topic: BTreeMap<Topic, Vec<&str>> = BTreeMap::new();
    for (title, (topic, _)) in manifest.documentaries() {
        by_topic.entry(topic).or_default().push(title);
    }
    let mut spec = SplitSpec {
        seed,
        ..Default::default()
    };
    for (topic, mut titles) in by_topic {
        let n = titles.len();
        if n < 3 {
            spec.warnings.push(format!(
                "{topic}: only {n} documentar{}, valid/test left empty",
                if n == 1 { "y" } else { "ies" }
            ));
            for t in titles {
                spec.assignment.insert(t.to_string(), SplitRole::Train);
            }
            continue;
        }
        let heldout = if n >= rules.two_heldout_from.max(5) { 2 } else { 1 };
        titles.shuffle(&mut stream_rng(seed, topic.ordinal()));
        for (i, t) in titles.into_iter().enumerate() {
            let role = if i < heldout {
                SplitRole::Valid
            } else if i < 2 * heldout {
                SplitRole::Test
            } else {
                SplitRole::Train
            };
            spec.assignment.insert(t.to_string(), role);
        }
    }
    spec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Count {
    pub pairs: usize,
    pub documentaries: usize,
}

impl Count {
    fn add(&mut self, other: Count) {
        self.pairs += other.pairs;
        self.documentaries += other.documentaries;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitRow {
    pub label: String,
    pub train: Count,
    pub valid: Count,
    pub test: Count,
    pub total: Count,
}

impl SplitRow {
    fn empty(label: &str) -> Self {
        SplitRow {
            label: label.to_string(),
            train: Count::default(),
            valid: Count::default(),
            test: Count::default(),
            total: Count::default(),
        }
    }

    fn cell_mut(&mut self, role: SplitRole) -> &mut Count {
        match role {
            SplitRole::Train => &mut self.train,
            SplitRole::Valid => &mut self.valid,
            SplitRole::Test => &mut self.test,
        }
    }

    fn absorb(&mut self, other: &SplitRow) {
        self.train.add(other.train);
        self.valid.add(other.valid);
        self.test.add(other.test);
        self.total.add(other.total);
    }
}

/// Per-topic pair/documentary counts for each split, plus a total row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitTable {
    pub rows: Vec<SplitRow>,
    pub total: SplitRow,
    pub unassigned: Vec<String>,
}

impl SplitTable {
    pub fn row(&self, topic: Topic) -> Option<&SplitRow> {
        self.rows.iter().find(|r| r.label == topic.as_str())
    }
}

pub fn split_table(manifest: &CorpusManifest, split: &SplitSpec) -> SplitTable {
    let mut rows: BTreeMap<Topic, SplitRow> = Topic::ALL
        .iter()
        .map(|t| (*t, SplitRow::empty(t.as_str())))
        .collect();
    let mut unassigned = Vec::new();
    for (title, (topic, pairs)) in manifest.documentaries() {
        let Some(role) = split.role_of(title) else {
            unassigned.push(title.to_string());
            continue;
        };
        let row = rows.get_mut(&topic).expect("all topics present");
        let c = Count {
            pairs,
            documentaries: 1,
        };
        row.cell_mut(role).add(c);
        row.total.add(c);
    }
    let mut total = SplitRow::empty("Total");
    for r in rows.values() {
        total.absorb(r);
    }
    SplitTable {
        rows: rows.into_values().collect(),
        total,
        unassigned,
    }
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl fmt::Display for SplitTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |c: Count| format!("{} / {}", thousands(c.pairs), c.documentaries);
        writeln!(f, "{:<12}{:>16}{:>16}{:>16}{:>18}", "Topic", "Train", "Valid", "Test", "Total")?;
        for r in self.rows.iter().chain(std::iter::once(&self.total)) {
            writeln!(
                f,
                "{:<12}{:>16}{:>16}{:>16}{:>18}",
                r.label,
                cell(r.train),
                cell(r.valid),
                cell(r.test),
                cell(r.total)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Full,
    InDomain,
    OutOfDomainFull,
    OutOfDomainSampled,
    InDomainAugmented,
    OutOfDomainAugmented,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Full => "full",
            ScenarioKind::InDomain => "in_domain",
            ScenarioKind::OutOfDomainFull => "out_of_domain_full",
            ScenarioKind::OutOfDomainSampled => "out_of_domain_sampled",
            ScenarioKind::InDomainAugmented => "in_domain_augmented",
            ScenarioKind::OutOfDomainAugmented => "out_of_domain_augmented",
        }
    }

    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Full,
        ScenarioKind::InDomain,
        ScenarioKind::OutOfDomainFull,
        ScenarioKind::OutOfDomainSampled,
        ScenarioKind::InDomainAugmented,
        ScenarioKind::OutOfDomainAugmented,
    ];
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('-', "_");
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::Invalid(format!("unknown scenario kind `{s}`")))
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub test_topic: Topic,
    pub seed: u64,
}

/// Training records for one experiment scenario, in manifest order.
///
/// Augmented kinds take the test topic's records from `extra` in addition
/// to the in-domain training records; the out-of-domain augmented set is
/// sampled to the size of the augmented in-domain set.
pub fn build_scenario<'a>(
    manifest: &'a CorpusManifest,
    split: &SplitSpec,
    spec: &ScenarioSpec,
    extra: Option<&'a CorpusManifest>,
) -> Result<Vec<&'a CorpusRecord>> {
    let mut train = Vec::new();
    for r in manifest.records() {
        match split.role_of(r.title()) {
            Some(SplitRole::Train) => train.push(r),
            Some(_) => {}
            None => {
                return Err(Error::Invalid(format!(
                    "documentary `{}` has no split assignment",
                    r.title()
                )))
            }
        }
    }
    let topic = spec.test_topic;
    let in_domain = || -> Vec<&'a CorpusRecord> {
        train.iter().copied().filter(|r| r.topic() == topic).collect()
    };
    let out_of_domain = || -> Vec<&'a CorpusRecord> {
        train.iter().copied().filter(|r| r.topic() != topic).collect()
    };
    let augmented = || -> Result<Vec<&'a CorpusRecord>> {
        let extra = extra.ok_or_else(|| {
            Error::Invalid(format!("scenario {} needs an augmentation corpus", spec.kind))
        })?;
        let base: BTreeSet<&str> = manifest.records().iter().map(|r| r.title()).collect();
        if let Some(r) = extra.records().iter().find(|r| base.contains(r.title())) {
            return Err(Error::TitleCollision(r.title().to_string()));
        }
        let mut records = in_domain();
        records.extend(extra.records().iter().filter(|r| r.topic() == topic));
        Ok(records)
    };
    let mut rng = stream_rng(spec.seed, 1000 + topic.ordinal());
    match spec.kind {
        ScenarioKind::Full => Ok(train),
        ScenarioKind::InDomain => Ok(in_domain()),
        ScenarioKind::OutOfDomainFull => Ok(out_of_domain()),
        ScenarioKind::OutOfDomainSampled => {
            stratified_sample(&out_of_domain(), in_domain().len(), &mut rng)
        }
        ScenarioKind::InDomainAugmented => augmented(),
        ScenarioKind::OutOfDomainAugmented => {
            let target = augmented()?.len();
            stratified_sample(&out_of_domain(), target, &mut rng)
        }
    }
}

/// Samples exactly `count` records, allotting each documentary a quota
/// proportional to its size (largest-remainder rounding, ties to the
/// earlier documentary) and drawing uniformly within it. Output keeps the
/// input order.
pub fn stratified_sample<'a>(
    records: &[&'a CorpusRecord],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<&'a CorpusRecord>> {
    let available = records.len();
    if count > available {
        return Err(Error::InsufficientRecords {
            requested: count,
            available,
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut strata: Vec<(&str, Vec<usize>)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match strata.iter_mut().find(|(t, _)| *t == r.title()) {
            Some((_, idx)) => idx.push(i),
            None => strata.push((r.title(), vec![i])),
        }
    }
    let mut quotas: Vec<usize> = Vec::with_capacity(strata.len());
    let mut remainders: Vec<(u128, usize)> = Vec::with_capacity(strata.len());
    for (k, (_, idx)) in strata.iter().enumerate() {
        let exact = count as u128 * idx.len() as u128;
        quotas.push((exact / available as u128) as usize);
        remainders.push((exact % available as u128, k));
    }
    let short = count - quotas.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, k) in remainders.iter().take(short) {
        quotas[k] += 1;
    }

    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    for ((_, idx), &q) in strata.iter().zip(&quotas) {
        let picks = rand::seq::index::sample(rng, idx.len(), q);
        chosen.extend(picks.into_iter().map(|p| idx[p]));
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| records[i]).collect())
}

pub fn scenario_file(records: &[&CorpusRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.record_id());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AugmentRow {
    pub topic: Topic,
    pub pairs_before: usize,
    pub pairs_added: usize,
    pub pairs_after: usize,
    pub documentaries_added: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Discrepancy {
    pub topic: Topic,
    pub claimed: usize,
    pub computed: usize,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: claimed {} pairs after augmentation, computed {} ({:+})",
            self.topic,
            self.claimed,
            self.computed,
            self.computed as i64 - self.claimed as i64
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AugmentReport {
    pub rows: Vec<AugmentRow>,
}

impl AugmentReport {
    pub fn row(&self, topic: Topic) -> Option<&AugmentRow> {
        self.rows.iter().find(|r| r.topic == topic)
    }

    /// Compares claimed post-augmentation sizes with the computed ones.
    pub fn discrepancies(&self, claims: &[(Topic, usize)]) -> Vec<Discrepancy> {
        claims
            .iter()
            .filter_map(|&(topic, claimed)| {
                let computed = self.row(topic).map_or(0, |r| r.pairs_after);
                (computed != claimed).then_some(Discrepancy {
                    topic,
                    claimed,
                    computed,
                })
            })
            .collect()
    }
}

/// Union of two corpora with disjoint documentaries, with per-topic deltas.
pub fn augment(
    base: &CorpusManifest,
    extra: &CorpusManifest,
) -> Result<(CorpusManifest, AugmentReport)> {
    let base_docs = base.documentaries();
    let extra_docs = extra.documentaries();
    if let Some(title) = extra_docs.keys().find(|t| base_docs.contains_key(*t)) {
        return Err(Error::TitleCollision(title.to_string()));
    }
    let rows = Topic::ALL
        .iter()
        .map(|&topic| {
            let before = base.records().iter().filter(|r| r.topic() == topic).count();
            let added = extra.records().iter().filter(|r| r.topic() == topic).count();
            AugmentRow {
                topic,
                pairs_before: before,
                pairs_added: added,
                pairs_after: before + added,
                documentaries_added: extra_docs.values().filter(|(t, _)| *t == topic).count(),
            }
        })
        .collect();
    let mut records = base.records().to_vec();
    records.extend_from_slice(extra.records());
    Ok((CorpusManifest::new(records)?, AugmentReport { rows }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicStats {
    pub label: String,
    pub pairs: usize,
    pub documentaries: usize,
    pub mean_duration_s: f64,
    pub mean_source_tokens: f64,
    pub mean_target_chars: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub topics: Vec<TopicStats>,
    pub total: TopicStats,
}

/// Whitespace tokens for English text.
pub fn source_length(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Characters excluding whitespace for Chinese text; Han characters and
/// punctuation each count once.
pub fn target_length(text: &str) -> usize {
    text.chars().filter(|c| !c.is_whitespace()).count()
}

fn summarize<'a>(label: &str, records: impl Iterator<Item = &'a CorpusRecord>) -> TopicStats {
    let mut docs = BTreeSet::new();
    let (mut n, mut dur, mut src, mut tgt) = (0usize, 0u64, 0usize, 0usize);
    for r in records {
        n += 1;
        docs.insert(r.title());
        dur += r.clip.duration_ms();
        src += source_length(&r.source_text);
        tgt += target_length(&r.target_text);
    }
    let mean = |total: f64| if n == 0 { 0.0 } else { total / n as f64 };
    TopicStats {
        label: label.to_string(),
        pairs: n,
        documentaries: docs.len(),
        mean_duration_s: mean(dur as f64 / 1000.0),
        mean_source_tokens: mean(src as f64),
        mean_target_chars: mean(tgt as f64),
    }
}

pub fn stats(manifest: &CorpusManifest) -> CorpusStats {
    let topics = Topic::ALL
        .iter()
        .map(|&t| summarize(t.as_str(), manifest.records().iter().filter(|r| r.topic() == t)))
        .collect();
    CorpusStats {
        topics,
        total: summarize("Total", manifest.records().iter()),
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12}{:>10}{:>6}{:>10}{:>10}{:>10}",
            "Topic", "Pairs", "Docs", "Sec.", "Len.en", "Len.zh"
        )?;
        for s in self.topics.iter().chain(std::iter::once(&self.total)) {
            writeln!(
                f,
                "{:<12}{:>10}{:>6}{:>10.1}{:>10.1}{:>10.1}",
                s.label,
                thousands(s.pairs),
                s.documentaries,
                s.mean_duration_s,
                s.mean_source_tokens,
                s.mean_target_chars
            )?;
        }
        Ok(())
    }
}

/// Pair and documentary counts for one topic's train/valid/test splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopicShape {
    pub topic: Topic,
    pub train: Count,
    pub valid: Count,
    pub test: Count,
}

/// Builds a synthetic corpus (and its split) with exactly the given counts.
/// Pairs are spread evenly over each split's documentaries; clips are 8.4 s
/// long with placeholder texts.
pub fn synthetic_corpus(shape: &[TopicShape]) -> Result<(CorpusManifest, SplitSpec)> {
    let mut records = Vec::new();
    let mut split = SplitSpec::default();
    for s in shape {
        for (role, count) in [(SplitRole::Train, s.train), (SplitRole::Valid, s.valid), (SplitRole::Test, s.test)] {
            if count.documentaries == 0 {
                if count.pairs > 0 {
                    return Err(Error::Invalid(format!("{}: pairs without documentaries", s.topic)));
                }
                continue;
            }
            if count.pairs < count.documentaries {
                return Err(Error::Invalid(format!("{}: fewer pairs than documentaries", s.topic)));
            }
            let base = count.pairs / count.documentaries;
            let extra = count.pairs % count.documentaries;
            for d in 0..count.documentaries {
                let title = format!("{}-{}-{:03}", s.topic, role.as_str(), d + 1);
                let n = base + usize::from(d < extra);
                records.extend(synthetic_documentary(&title, s.topic, n));
                split.assignment.insert(title, role);
            }
        }
    }
    Ok((CorpusManifest::new(records)?, split))
}

fn synthetic_documentary(title: &str, topic: Topic, pairs: usize) -> Vec<CorpusRecord> {
    (1..=pairs as u32)
        .map(|p| {
            let start = u64::from(p - 1) * 10_000;
            CorpusRecord {
                clip: ClipRecord {
                    title: title.to_string(),
                    topic,
                    start: Timecode::from_millis(start),
                    end: Timecode::from_millis(start + 8_400),
                    position: p,
                    score: None,
                    clip_path: ClipRecord::clip_path_for(title, p),
                },
                source_text: format!("{topic} line {p}"),
                target_text: String::from("字幕"),
            }
        })
        .collect()
}

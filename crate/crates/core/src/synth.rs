//! Synthetic issue corpus with a planted arousal signal, plus the matching
//! general lexicon, WordNet fixture and simulated raters.
//!
//! High-arousal words appear with a probability that rises from Trivial to
//! Blocker, low-arousal words with the reverse trend. Words of one class
//! share context words, so trained embeddings place them near each other.

use std::collections::{BTreeMap, HashMap};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{build_vocabulary, Comment, Field, Issue, Priority, Vocabulary};
use crate::embedding::{count_issue_cooccurrences, glove_train, GloveConfig, TrainMode, WordVectors};
use crate::error::Result;
use crate::evalstats::{evaluate_priorities, EvalTable, TTest};
use crate::lexicon::{
    aggregate_ratings, apply_review, expand_embedding, expand_wordnet, rater_agreement, select_seeds, AgreementReport,
    CandidateSet, Decision, GeneralEntry, GeneralLexicon, RatingRecord, SeaLexicon, SeedConfig, SeedSet, Weighting,
};
use crate::scoring::{score_corpus, Lexicons, Mode, ScoreTable, ScoringLexicon, SeaAvg};
use crate::wordnet::{PartOfSpeech, SynsetDb};

pub const HIGH_WORDS: [&str; 16] = [
    "asap",
    "urgent",
    "immediately",
    "crash",
    "broken",
    "outage",
    "emergency",
    "panic",
    "fatal",
    "hurry",
    "furious",
    "angry",
    "disaster",
    "severe",
    "blocking",
    "unacceptable",
];
pub const LOW_WORDS: [&str; 16] = [
    "calm",
    "relaxed",
    "eventually",
    "someday",
    "cosmetic",
    "typo",
    "polish",
    "gentle",
    "quiet",
    "leisurely",
    "sleepy",
    "idle",
    "later",
    "whenever",
    "tidy",
    "wording",
];
const HIGH_CONTEXT: [&str; 6] = ["production", "now", "down", "tonight", "everyone", "customers"];
const LOW_CONTEXT: [&str; 6] = ["docs", "readme", "spacing", "style", "nice", "maybe"];
const NEUTRAL_WORDS: [&str; 48] = [
    "the", "code", "file", "method", "class", "test", "build", "module", "function", "config", "value", "change",
    "update", "version", "release", "patch", "review", "user", "page", "server", "client", "request", "response",
    "field", "table", "query", "index", "cache", "option", "default", "return", "call", "line", "name", "type",
    "string", "list", "check", "add", "remove", "when", "this", "with", "for", "from", "should", "please", "also",
];
/// Words known to the general lexicon but never emitted into the corpus.
const OFF_CORPUS: [(&str, f64); 6] = [
    ("ecstatic", 8.6),
    ("terror", 8.4),
    ("rage", 8.2),
    ("slumber", 1.6),
    ("tranquil", 1.7),
    ("nap", 1.9),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub issues_per_priority: usize,
    /// Issues with an unrecognised priority label.
    pub unknown_issues: usize,
    pub seed: u64,
    /// Per-sentence probability of a high-arousal sentence, Blocker..Trivial.
    pub high_prob: [f64; 5],
    /// Per-sentence probability of a low-arousal sentence, Blocker..Trivial.
    pub low_prob: [f64; 5],
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            issues_per_priority: 200,
            unknown_issues: 20,
            seed: 7,
            high_prob: [0.55, 0.45, 0.35, 0.25, 0.15],
            low_prob: [0.10, 0.15, 0.20, 0.28, 0.36],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub issues: Vec<Issue>,
    /// Ground-truth arousal of every word the generator can emit.
    pub truth: BTreeMap<String, f64>,
    pub general: GeneralLexicon,
    pub wordnet: Vec<(PartOfSpeech, Vec<String>)>,
}

fn sentence(rng: &mut ChaCha8Rng, class: Option<bool>, len: usize) -> String {
    let mut words: Vec<&str> = (0..len).map(|_| *NEUTRAL_WORDS.choose(rng).unwrap()).collect();
    if let Some(high) = class {
        let (class_words, ctx) = if high {
            (&HIGH_WORDS, &HIGH_CONTEXT)
        } else {
            (&LOW_WORDS, &LOW_CONTEXT)
        };
        let n = rng.random_range(1..=2);
        for _ in 0..n {
            let at = rng.random_range(0..=words.len());
            words.insert(at, class_words.choose(rng).unwrap());
            let at = rng.random_range(0..=words.len());
            words.insert(at, ctx.choose(rng).unwrap());
        }
    }
    words.join(" ")
}

fn text(rng: &mut ChaCha8Rng, rank: usize, cfg: &SynthConfig, sentences: usize, len: usize) -> String {
    (0..sentences)
        .map(|_| {
            let u: f64 = rng.random();
            let class = if u < cfg.high_prob[rank] {
                Some(true)
            } else if u < cfg.high_prob[rank] + cfg.low_prob[rank] {
                Some(false)
            } else {
                None
            };
            sentence(rng, class, len)
        })
        .collect::<Vec<_>>()
        .join(". ")
}

fn issue(rng: &mut ChaCha8Rng, id: usize, priority: Priority, cfg: &SynthConfig) -> Issue {
    // Unknown issues reuse the Major profile.
    let rank = Priority::RANKED.iter().position(|&p| p == priority).unwrap_or(2);
    let n_comments = rng.random_range(0..=4);
    let title = text(rng, rank, cfg, 1, 4);
    let n_desc = rng.random_range(1..=2);
    let description = text(rng, rank, cfg, n_desc, 7);
    let comments = (0..n_comments)
        .map(|_| {
            let n = rng.random_range(1..=2);
            Comment {
                ts: None,
                body: text(rng, rank, cfg, n, 6),
            }
        })
        .collect();
    Issue {
        id: format!("SYN-{id:05}"),
        priority,
        title,
        description,
        comments,
    }
}

/// Generates the corpus and its companion resources. Deterministic in
/// `cfg.seed`.
pub fn generate(cfg: &SynthConfig) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut priorities: Vec<Priority> = Priority::RANKED
        .iter()
        .flat_map(|&p| std::iter::repeat_n(p, cfg.issues_per_priority))
        .chain(std::iter::repeat_n(Priority::Unknown, cfg.unknown_issues))
        .collect();
    rand::seq::SliceRandom::shuffle(priorities.as_mut_slice(), &mut rng);
    let issues = priorities
        .iter()
        .enumerate()
        .map(|(k, &p)| issue(&mut rng, k + 1, p, cfg))
        .collect();

    let mut truth = BTreeMap::new();
    for w in HIGH_WORDS {
        truth.insert(w.to_owned(), rng.random_range(7.0f64..8.8));
    }
    for w in LOW_WORDS {
        truth.insert(w.to_owned(), rng.random_range(1.4..3.0));
    }
    for w in HIGH_CONTEXT.iter().chain(&LOW_CONTEXT).chain(&NEUTRAL_WORDS) {
        truth.insert((*w).to_owned(), rng.random_range(4.2..5.8));
    }

    // The general lexicon covers most corpus words with noisy norms, the
    // way a general-purpose norms list only approximates domain usage.
    let noise = Normal::new(0.0f64, 0.4).unwrap();
    let mut general = GeneralLexicon::default();
    for (k, (w, &a)) in truth.iter().enumerate() {
        if k % 5 == 4 {
            continue;
        }
        let arousal = (a + noise.sample(&mut rng)).clamp(1.0, 9.0);
        general.insert(
            w,
            GeneralEntry {
                arousal,
                arousal_sd: Some(2.0),
                valence: None,
                dominance: None,
            },
        );
    }
    for (w, a) in OFF_CORPUS {
        general.insert(
            w,
            GeneralEntry {
                arousal: a,
                arousal_sd: Some(2.0),
                valence: None,
                dominance: None,
            },
        );
    }

    let groups: [(PartOfSpeech, &[&str]); 10] = [
        (
            PartOfSpeech::Adjective,
            &["urgent", "pressing", "imperative", "blocking"],
        ),
        (PartOfSpeech::Adverb, &["asap", "immediately", "now", "straightaway"]),
        (PartOfSpeech::Noun, &["crash", "outage", "disaster", "wreck"]),
        (PartOfSpeech::Adjective, &["furious", "angry", "irate", "mad"]),
        (PartOfSpeech::Noun, &["panic", "terror", "alarm", "emergency"]),
        (
            PartOfSpeech::Adjective,
            &["calm", "quiet", "tranquil", "gentle", "placid"],
        ),
        (PartOfSpeech::Adverb, &["eventually", "later", "someday", "sometime"]),
        (PartOfSpeech::Adjective, &["relaxed", "leisurely", "idle", "sleepy"]),
        (PartOfSpeech::Noun, &["typo", "misprint", "erratum"]),
        (PartOfSpeech::Verb, &["polish", "tidy", "refine", "clean_up"]),
    ];
    let wordnet = groups
        .iter()
        .map(|(pos, ws)| (*pos, ws.iter().map(|w| (*w).to_owned()).collect()))
        .collect();
    SyntheticData {
        issues,
        truth,
        general,
        wordnet,
    }
}

/// A simulated rater: ground truth plus a constant bias and Gaussian noise,
/// rounded and clamped to 1..=9. Scores depend only on (rater, word).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRater {
    pub name: String,
    pub bias: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticRater {
    pub fn pair() -> [SyntheticRater; 2] {
        [
            SyntheticRater {
                name: "r1".into(),
                bias: 0.1,
                noise_sd: 0.8,
                seed: 11,
            },
            SyntheticRater {
                name: "r2".into(),
                bias: -0.1,
                noise_sd: 1.0,
                seed: 12,
            },
        ]
    }

    /// Words without ground truth are rated as neutral before noise.
    pub fn rate(&self, word: &str, truth: &BTreeMap<String, f64>) -> u8 {
        // FNV-1a keeps the per-word stream stable across platforms.
        let h = word.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
        });
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ h);
        let base = truth.get(word).copied().unwrap_or(5.0);
        let noisy = base + self.bias + Normal::new(0.0, self.noise_sd).unwrap().sample(&mut rng);
        noisy.round().clamp(1.0, 9.0) as u8
    }
}

/// Fills the empty rating column of a generated sheet. Instruction lines
/// and the header pass through untouched.
pub fn fill_sheet(sheet: &str, rater: &SyntheticRater, truth: &BTreeMap<String, f64>) -> String {
    let mut out = String::with_capacity(sheet.len() + sheet.len() / 8);
    let mut header_seen = false;
    for line in sheet.lines() {
        match line.split_once(',') {
            Some((word, rest)) if header_seen && !line.starts_with('#') => {
                let rest = rest.strip_prefix(',').unwrap_or(rest);
                out.push_str(&format!("{word},{},{rest}\n", rater.rate(word, truth)));
            }
            _ => {
                header_seen |= line.starts_with("word,");
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    out
}

pub fn rate_words(words: &[String], raters: &[SyntheticRater], truth: &BTreeMap<String, f64>) -> Vec<RatingRecord> {
    let mut out: Vec<RatingRecord> = raters
        .iter()
        .flat_map(|r| {
            words.iter().map(move |w| RatingRecord {
                word: w.clone(),
                rater: r.name.clone(),
                score: r.rate(w, truth),
            })
        })
        .collect();
    out.sort();
    out
}

/// Settings for the in-memory end-to-end run.
#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub synth: SynthConfig,
    pub glove: GloveConfig,
    pub seeds: SeedConfig,
    pub min_count: u64,
    pub k: usize,
    pub sea_avg: SeaAvg,
    pub test: TTest,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            synth: SynthConfig::default(),
            glove: GloveConfig {
                dim: 50,
                epochs: 15,
                mode: TrainMode::Deterministic,
                ..GloveConfig::default()
            },
            seeds: SeedConfig {
                n1: 3,
                f1: 20,
                n2: 3,
                f2: 60,
            },
            min_count: 5,
            k: 10,
            sea_avg: SeaAvg::TwiceLexiconMean,
            test: TTest::Welch,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedRun {
    pub data: SyntheticData,
    pub vocab: Vocabulary,
    pub losses: Vec<f64>,
    pub vectors: WordVectors,
    pub seeds: SeedSet,
    pub candidates: CandidateSet,
    pub ratings: Vec<RatingRecord>,
    pub agreement: AgreementReport,
    pub sea: SeaLexicon,
    pub scores: ScoreTable,
    pub table: EvalTable,
}

impl PlantedRun {
    pub fn priorities(&self) -> HashMap<String, Priority> {
        self.data.issues.iter().map(|i| (i.id.clone(), i.priority)).collect()
    }

    pub fn d(&self, field: Field, mode: Mode, pair: usize) -> Option<f64> {
        self.table.d(field, mode, crate::evalstats::PAIRS[pair])
    }
}

/// Generate → vocabulary → co-occurrence → GloVe → seeds → WordNet and
/// neighbor expansion → accept all → simulated ratings → domain lexicon →
/// scoring in all modes → priority evaluation.
pub fn run_planted_pipeline(cfg: &PlantedConfig) -> Result<PlantedRun> {
    let data = generate(&cfg.synth);
    let vocab = build_vocabulary(&data.issues, cfg.min_count)?;
    let cooc = count_issue_cooccurrences(&data.issues, &vocab, cfg.glove.window)?;
    let (model, report) = glove_train(&cooc, &vocab, &cfg.glove)?;
    let vectors = model.word_vectors();

    let seeds = select_seeds(&data.general, &vocab, &cfg.seeds)?;
    let (mut candidates, _) = CandidateSet::from_seeds(&seeds, &vocab);
    candidates.merge(expand_wordnet(&seeds, &SynsetDb::from_synsets(&data.wordnet), &vocab));
    candidates.merge(expand_embedding(&seeds, &vectors, cfg.k).0);
    let decisions: Vec<(String, Decision)> = candidates.iter().map(|c| (c.word.clone(), Decision::Accept)).collect();
    apply_review(&mut candidates, &decisions);

    let words = candidates.accepted_words();
    let ratings = rate_words(&words, &SyntheticRater::pair(), &data.truth);
    let agreement = rater_agreement(&ratings, Weighting::Linear)?;
    let sources = candidates
        .iter()
        .map(|c| (c.word.clone(), c.provenance.to_string()))
        .collect();
    let sea = aggregate_ratings(&ratings, &sources);

    let general_lex = ScoringLexicon::from_general(&data.general)?;
    let sea_lex = ScoringLexicon::from_sea(&sea)?;
    let scores = score_corpus(
        &data.issues,
        Lexicons {
            general: Some(&general_lex),
            sea: Some(&sea_lex),
        },
        &Mode::ALL,
        cfg.sea_avg,
    )?;
    let priorities: HashMap<String, Priority> = data.issues.iter().map(|i| (i.id.clone(), i.priority)).collect();
    let table = evaluate_priorities(&scores.rows, &priorities, cfg.test);
    Ok(PlantedRun {
        data,
        vocab,
        losses: report.losses,
        vectors,
        seeds,
        candidates,
        ratings,
        agreement,
        sea,
        scores,
        table,
    })
}

//! Pipeline stages. Each stage reads declared artifacts from the work
//! directory (or external inputs named in the config), writes its own
//! artifacts and records both in the manifest.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use arousal_core::corpus::{build_vocabulary, parse_corpus, write_corpus, Issue, Priority, Vocabulary};
use arousal_core::embedding::{count_issue_cooccurrences, glove_train, WordVectors};
use arousal_core::evalstats::{evaluate_priorities, render_tables};
use arousal_core::lexicon::{
    aggregate_ratings, apply_review, expand_embedding, expand_wordnet, generate_sheet, ingest_ratings, load_ratings,
    load_review, load_seed_list, rater_agreement, save_ratings, select_seeds, CandidateSet, Decision, RatedSheet,
    SeaLexicon, SeedSet, SheetOptions, Weighting,
};
use arousal_core::scoring::{score_corpus, Lexicons, Mode, ScoreTable, ScoringLexicon};
use arousal_core::wordnet::load_wordnet;
use serde_json::json;

use crate::config::PipelineConfig;
use crate::manifest::{sha256_bytes, sha256_path, Manifest, StageRecord};

pub const ISSUES: &str = "issues.jsonl";
pub const VOCAB: &str = "vocab.tsv";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const VECTORS: &str = "vectors.txt";
pub const TRAIN_REPORT: &str = "train_report.json";
pub const SEEDS: &str = "seeds.csv";
pub const CANDIDATES: &str = "candidates.csv";
pub const REVIEWED: &str = "candidates_reviewed.csv";
pub const SHEET: &str = "sheet.csv";
pub const RATINGS: &str = "ratings.csv";
pub const RATINGS_REPORT: &str = "ratings_report.json";
pub const AGREEMENT_TXT: &str = "agreement.txt";
pub const AGREEMENT_JSON: &str = "agreement.json";
pub const SEA: &str = "sea_lexicon.csv";
pub const SCORES: &str = "scores.csv";
pub const SCORE_REPORT: &str = "score_report.json";
pub const TABLES: &str = "tables";
pub const EVALUATION: &str = "evaluation.json";

/// Stage that writes each work-dir artifact.
fn producer(artifact: &str) -> &'static str {
    match artifact {
        ISSUES | VOCAB | INGEST_REPORT => "ingest",
        VECTORS | TRAIN_REPORT => "train",
        SEEDS => "seeds",
        CANDIDATES => "expand",
        REVIEWED | SHEET => "sheet",
        RATINGS | RATINGS_REPORT => "ratings",
        AGREEMENT_TXT | AGREEMENT_JSON => "agreement",
        SEA => "build",
        SCORES | SCORE_REPORT => "score",
        _ => "evaluate",
    }
}

/// The settings a stage depends on; their hash marks the stage stale when
/// they change.
fn stage_settings(stage: &str, cfg: &PipelineConfig) -> serde_json::Value {
    match stage {
        "ingest" => json!({ "min_count": cfg.min_count }),
        "train" => json!({ "embedding": cfg.embedding }),
        "seeds" => json!({ "seeds": cfg.seeds, "columns": cfg.general_columns }),
        "expand" => json!({ "k": cfg.k }),
        "sheet" => json!({ "k": cfg.k, "shuffle": cfg.sheet_shuffle_seed }),
        "agreement" => json!({ "weighting": cfg.kappa_weighting }),
        "score" => json!({ "sea_avg": cfg.sea_avg, "columns": cfg.general_columns }),
        "evaluate" => json!({ "t_test": cfg.t_test }),
        _ => json!({}),
    }
}

fn settings_hash(stage: &str, cfg: &PipelineConfig) -> String {
    sha256_bytes(stage_settings(stage, cfg).to_string().as_bytes())
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub work_dir: PathBuf,
    manifest: Manifest,
}

/// Per-run bookkeeping of one stage.
struct Run<'a> {
    stage: &'static str,
    pipe: &'a mut Pipeline,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
}

impl Run<'_> {
    /// A work-dir artifact from an upstream stage. Missing artifacts are an
    /// error naming the stage to run; stale ones produce a warning.
    fn artifact(&mut self, name: &str) -> Result<PathBuf> {
        let path = self.pipe.work_dir.join(name);
        let stage = producer(name);
        if !path.exists() {
            bail!(
                "missing artifact {}: run the `{stage}` stage first (arousal {stage})",
                path.display()
            );
        }
        let digest = sha256_path(&path)?;
        match self.pipe.manifest.stages.get(stage) {
            None => log::warn!("{name} is not recorded in the manifest; provenance unknown"),
            Some(rec) => {
                if rec.outputs.get(name) != Some(&digest) {
                    log::warn!("{name} changed after the `{stage}` stage wrote it");
                }
                if rec.config_hash != settings_hash(stage, &self.pipe.cfg) {
                    log::warn!("stale: `{stage}` ran with different settings than the current config; re-run it");
                }
                for (input, old) in &rec.inputs {
                    let p = self.pipe.resolve(input);
                    if p.exists() && sha256_path(&p).ok().as_ref() != Some(old) {
                        log::warn!("stale: input {input} of `{stage}` changed since it ran; re-run `{stage}`");
                    }
                }
            }
        }
        self.inputs.insert(name.to_owned(), digest);
        Ok(path)
    }

    /// An input from outside the work directory.
    fn external(&mut self, path: &Path, what: &str) -> Result<PathBuf> {
        if !path.exists() {
            bail!("{what} not found at {}", path.display());
        }
        let key = std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf());
        self.inputs.insert(key.display().to_string(), sha256_path(path)?);
        Ok(path.to_path_buf())
    }

    fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_owned());
        self.pipe.work_dir.join(name)
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.output(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(self) -> Result<()> {
        let mut outputs = BTreeMap::new();
        for name in &self.outputs {
            outputs.insert(name.clone(), sha256_path(&self.pipe.work_dir.join(name))?);
        }
        let record = StageRecord {
            config_hash: settings_hash(self.stage, &self.pipe.cfg),
            inputs: self.inputs,
            outputs,
        };
        self.pipe.manifest.stages.insert(self.stage.to_owned(), record);
        self.pipe.manifest.save(&self.pipe.work_dir)
    }
}

fn read_issues(path: &Path) -> Result<Vec<Issue>> {
    Ok(parse_corpus(path)?.issues)
}

impl Pipeline {
    pub fn open(cfg: PipelineConfig, work_dir: PathBuf) -> Result<Pipeline> {
        std::fs::create_dir_all(&work_dir).with_context(|| format!("creating work dir {}", work_dir.display()))?;
        let manifest = Manifest::load(&work_dir)?;
        Ok(Pipeline {
            cfg,
            work_dir,
            manifest,
        })
    }

    fn resolve(&self, key: &str) -> PathBuf {
        let p = Path::new(key);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.work_dir.join(p)
        }
    }

    fn run(&mut self, stage: &'static str) -> Run<'_> {
        log::info!("stage {stage}");
        Run {
            stage,
            pipe: self,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    fn required(&self, path: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        path.clone()
            .ok_or_else(|| anyhow!("no {key} given: set paths.{key} in the config or pass it as a flag"))
    }

    pub fn ingest(&mut self, corpus: Option<PathBuf>) -> Result<String> {
        let corpus = corpus.map_or_else(|| self.required(&self.cfg.paths.corpus, "corpus"), Ok)?;
        let min_count = self.cfg.min_count;
        let mut run = self.run("ingest");
        let corpus = run.external(&corpus, "corpus")?;
        let parsed = parse_corpus(&corpus)?;
        let vocab = build_vocabulary(&parsed.issues, min_count)?;
        write_corpus(&run.output(ISSUES), &parsed.issues)?;
        vocab.save(&run.output(VOCAB))?;
        let mut by_priority: BTreeMap<String, usize> = BTreeMap::new();
        for i in &parsed.issues {
            *by_priority.entry(i.priority.to_string()).or_default() += 1;
        }
        let skipped: Vec<_> = parsed
            .skipped
            .iter()
            .map(|s| json!({ "line": s.line, "message": s.message }))
            .collect();
        run.write_json(
            INGEST_REPORT,
            &json!({
                "issues": parsed.issues.len(),
                "by_priority": by_priority,
                "skipped_records": skipped,
                "vocabulary_size": vocab.len(),
                "min_count": min_count,
                "tokens": vocab.total_count(),
            }),
        )?;
        run.finish()?;
        Ok(format!(
            "ingested {} issues ({} malformed records skipped), vocabulary {} words",
            parsed.issues.len(),
            parsed.skipped.len(),
            vocab.len()
        ))
    }

    pub fn train(&mut self) -> Result<String> {
        let glove = self.cfg.embedding.clone();
        let mut run = self.run("train");
        let issues = read_issues(&run.artifact(ISSUES)?)?;
        let vocab = Vocabulary::load(&run.artifact(VOCAB)?)?;
        let cooc = count_issue_cooccurrences(&issues, &vocab, glove.window)?;
        let (model, report) = glove_train(&cooc, &vocab, &glove)?;
        model.word_vectors().save(&run.output(VECTORS))?;
        run.write_json(
            TRAIN_REPORT,
            &json!({
                "vocabulary_size": vocab.len(),
                "cooccurrence_entries": cooc.len(),
                "losses": report.losses,
                "config": glove,
            }),
        )?;
        run.finish()?;
        let l = &report.losses;
        Ok(format!(
            "trained {}-d vectors for {} words over {} co-occurrence entries; loss {:.4} -> {:.4}",
            glove.dim,
            vocab.len(),
            cooc.len(),
            l[0],
            l[l.len() - 1]
        ))
    }

    pub fn neighbors(&self, word: &str, k: usize) -> Result<String> {
        let path = self.work_dir.join(VECTORS);
        if !path.exists() {
            bail!(
                "missing artifact {}: run the `train` stage first (arousal train)",
                path.display()
            );
        }
        let vectors = WordVectors::load(&path)?;
        let list = vectors.nearest_neighbors(&word.to_lowercase(), k)?;
        Ok(list
            .neighbors
            .iter()
            .map(|n| format!("{}\t{:.4}\n", n.word, n.similarity))
            .collect())
    }

    pub fn seeds(&mut self, general: Option<PathBuf>, seed_list: Option<PathBuf>) -> Result<String> {
        let general = general.map_or_else(|| self.required(&self.cfg.paths.general_lexicon, "general_lexicon"), Ok)?;
        let seed_list = seed_list.or_else(|| self.cfg.paths.seed_list.clone());
        let (columns, seed_cfg) = (self.cfg.general_columns.clone(), self.cfg.seeds);
        let mut run = self.run("seeds");
        let vocab = Vocabulary::load(&run.artifact(VOCAB)?)?;
        let loaded =
            arousal_core::lexicon::load_general_lexicon(&run.external(&general, "general lexicon")?, &columns)?;
        let mut seeds: SeedSet = select_seeds(&loaded.lexicon, &vocab, &seed_cfg)?;
        let mut extra = 0;
        if let Some(list) = seed_list {
            let entries = load_seed_list(&run.external(&list, "seed list")?)?;
            let before = seeds.len();
            seeds.extend_from_list(&entries, &vocab);
            extra = seeds.len() - before;
        }
        seeds.save(&run.output(SEEDS))?;
        run.finish()?;
        Ok(format!(
            "selected {} seeds from the general lexicon ({} entries, {} load warnings) plus {extra} from the seed list",
            seeds.len() - extra,
            loaded.lexicon.len(),
            loaded.warnings.len()
        ))
    }

    pub fn expand(&mut self, wordnet: Option<PathBuf>) -> Result<String> {
        let wordnet = wordnet.or_else(|| self.cfg.paths.wordnet.clone());
        let k = self.cfg.k;
        let mut run = self.run("expand");
        let seeds = SeedSet::load(&run.artifact(SEEDS)?)?;
        let vocab = Vocabulary::load(&run.artifact(VOCAB)?)?;
        let vectors = WordVectors::load(&run.artifact(VECTORS)?)?;
        let (mut set, _) = CandidateSet::from_seeds(&seeds, &vocab);
        let from_seeds = set.len();
        let via_wordnet = match wordnet {
            Some(dir) => {
                let db = load_wordnet(&run.external(&dir, "WordNet directory")?)?;
                set.merge(expand_wordnet(&seeds, &db, &vocab))
            }
            None => {
                log::warn!("no WordNet directory configured; synonym expansion skipped");
                0
            }
        };
        let via_embedding = set.merge(expand_embedding(&seeds, &vectors, k).0);
        set.save(&run.output(CANDIDATES))?;
        run.finish()?;
        Ok(format!(
            "{} candidates: {from_seeds} seeds, {via_wordnet} WordNet synonyms, {via_embedding} embedding neighbors",
            set.len()
        ))
    }

    pub fn sheet(&mut self, review: Option<PathBuf>, accept_all: bool, shuffle: Option<u64>) -> Result<String> {
        let review = review.or_else(|| self.cfg.paths.review.clone());
        if review.is_none() && !accept_all {
            bail!("no review decisions: pass --review <file>, set paths.review, or pass --accept-all");
        }
        let opts = SheetOptions {
            k: self.cfg.k,
            shuffle_seed: shuffle.or(self.cfg.sheet_shuffle_seed),
            ..SheetOptions::default()
        };
        let mut run = self.run("sheet");
        let mut set = CandidateSet::load(&run.artifact(CANDIDATES)?)?;
        let vocab = Vocabulary::load(&run.artifact(VOCAB)?)?;
        let vectors = WordVectors::load(&run.artifact(VECTORS)?)?;
        if accept_all {
            let all: Vec<(String, Decision)> = set.iter().map(|c| (c.word.clone(), Decision::Accept)).collect();
            apply_review(&mut set, &all);
        }
        if let Some(path) = review {
            let decisions = load_review(&run.external(&path, "review file")?)?;
            apply_review(&mut set, &decisions);
        }
        let words = set.accepted_words();
        let sheet = generate_sheet(&words, &vocab, Some(&vectors), &opts);
        set.save(&run.output(REVIEWED))?;
        run.write(SHEET, &sheet.text)?;
        run.finish()?;
        Ok(format!(
            "rating sheet with {} words written to {} ({} warnings)",
            sheet.rows,
            self.work_dir.join(SHEET).display(),
            sheet.warnings.len()
        ))
    }

    pub fn ratings(&mut self, specs: &[String]) -> Result<String> {
        let mut run = self.run("ratings");
        let sheets: Vec<RatedSheet> = specs.iter().map(|s| RatedSheet::parse(s)).collect();
        for s in &sheets {
            run.external(&s.path, &format!("rating sheet for {}", s.rater))?;
        }
        let ingest = ingest_ratings(&sheets)?;
        for e in &ingest.row_errors {
            log::warn!(
                "rater {} line {}: {:?} is not a rating from 1 to 9 ({})",
                e.rater,
                e.line,
                e.cell,
                e.word
            );
        }
        save_ratings(&run.output(RATINGS), &ingest.records)?;
        let errors: Vec<_> = ingest
            .row_errors
            .iter()
            .map(|e| json!({ "rater": e.rater, "line": e.line, "word": e.word, "cell": e.cell }))
            .collect();
        run.write_json(
            RATINGS_REPORT,
            &json!({
                "records": ingest.records.len(),
                "skipped_empty": ingest.skipped_empty,
                "row_errors": errors,
            }),
        )?;
        run.finish()?;
        Ok(format!(
            "{} ratings from {} sheets ({} empty cells, {} invalid cells)",
            ingest.records.len(),
            sheets.len(),
            ingest.skipped_empty,
            ingest.row_errors.len()
        ))
    }

    pub fn agreement(&mut self, weighting: Option<Weighting>) -> Result<String> {
        let weighting = weighting.unwrap_or(self.cfg.kappa_weighting);
        let mut run = self.run("agreement");
        let records = load_ratings(&run.artifact(RATINGS)?)?;
        let report = rater_agreement(&records, weighting)?;
        let text = report.render();
        run.write(AGREEMENT_TXT, &text)?;
        run.write_json(AGREEMENT_JSON, &serde_json::to_value(&report)?)?;
        run.finish()?;
        Ok(text)
    }

    pub fn build(&mut self) -> Result<String> {
        let mut run = self.run("build");
        let records = load_ratings(&run.artifact(RATINGS)?)?;
        let reviewed = CandidateSet::load(&run.artifact(REVIEWED)?)?;
        let sources: HashMap<String, String> = reviewed
            .iter()
            .map(|c| (c.word.clone(), c.provenance.to_string()))
            .collect();
        let sea = aggregate_ratings(&records, &sources);
        if sea.is_empty() {
            bail!("no ratings to build a lexicon from");
        }
        sea.save(&run.output(SEA))?;
        run.finish()?;
        Ok(format!(
            "domain lexicon of {} words, mean arousal {:.4}",
            sea.len(),
            sea.mean()
        ))
    }

    pub fn score(&mut self, general: Option<PathBuf>, sea: Option<PathBuf>) -> Result<String> {
        let general = general.or_else(|| self.cfg.paths.general_lexicon.clone());
        let sea_override = sea.or_else(|| self.cfg.paths.sea_lexicon.clone());
        let (columns, sea_avg) = (self.cfg.general_columns.clone(), self.cfg.sea_avg);
        let mut run = self.run("score");
        let issues = read_issues(&run.artifact(ISSUES)?)?;
        let general_lex = match general {
            Some(p) => {
                let loaded =
                    arousal_core::lexicon::load_general_lexicon(&run.external(&p, "general lexicon")?, &columns)?;
                Some(ScoringLexicon::from_general(&loaded.lexicon)?)
            }
            None => {
                log::warn!("no general lexicon configured; general and combined modes skipped");
                None
            }
        };
        let sea_path = match sea_override {
            Some(p) => run.external(&p, "domain lexicon")?,
            None => run.artifact(SEA)?,
        };
        let sea_lex = ScoringLexicon::from_sea(&SeaLexicon::load(&sea_path)?)?;
        let modes: Vec<Mode> = if general_lex.is_some() {
            Mode::ALL.to_vec()
        } else {
            vec![Mode::Sea]
        };
        let lex = Lexicons {
            general: general_lex.as_ref(),
            sea: Some(&sea_lex),
        };
        let table = score_corpus(&issues, lex, &modes, sea_avg)?;
        table.save(&run.output(SCORES))?;
        let mut per_mode: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &table.rows {
            *per_mode.entry(r.mode.as_str()).or_default() += 1;
        }
        run.write_json(
            SCORE_REPORT,
            &json!({ "rows": table.rows.len(), "rows_per_mode": per_mode, "sea_avg": table.sea_avg }),
        )?;
        run.finish()?;
        Ok(format!("{} score rows written", table.rows.len()))
    }

    pub fn evaluate(&mut self) -> Result<String> {
        let test = self.cfg.t_test;
        let mut run = self.run("evaluate");
        let issues = read_issues(&run.artifact(ISSUES)?)?;
        let scores = ScoreTable::load(&run.artifact(SCORES)?)?;
        let priorities: HashMap<String, Priority> = issues.iter().map(|i| (i.id.clone(), i.priority)).collect();
        let table = evaluate_priorities(&scores.rows, &priorities, test);
        let rendered = render_tables(&table);
        std::fs::create_dir_all(run.pipe.work_dir.join(TABLES))?;
        for (name, text) in rendered.files() {
            run.write(&format!("{TABLES}/{name}"), text)?;
        }
        run.write_json(EVALUATION, &serde_json::to_value(&table)?)?;
        run.finish()?;
        Ok(rendered.display)
    }
}

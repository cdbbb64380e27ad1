use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use super::seeds::{Pole, SeedSet, SeedSource};
use crate::corpus::Vocabulary;
use crate::embedding::WordVectors;
use crate::error::{Error, Result};
use crate::wordnet::SynsetDb;

/// How a candidate entered the lexicon.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Seed { pole: Pole, source: SeedSource },
    WordNet { seed: String },
    Embedding { seed: String, similarity: f64 },
}

impl fmt::Display for Provenance {
    /// `seed:<pole>:<source>`, `wordnet:<seed>` or `embedding:<seed>:<similarity>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Seed { pole, source } => write!(f, "seed:{pole}:{source}"),
            Provenance::WordNet { seed } => write!(f, "wordnet:{seed}"),
            Provenance::Embedding { seed, similarity } => write!(f, "embedding:{seed}:{similarity}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts[..] {
            ["seed", pole, source] => Ok(Provenance::Seed {
                pole: pole.parse()?,
                source: source.parse()?,
            }),
            ["wordnet", seed] if !seed.is_empty() => Ok(Provenance::WordNet { seed: seed.into() }),
            ["embedding", seed, sim] if !seed.is_empty() => Ok(Provenance::Embedding {
                seed: seed.into(),
                similarity: sim.parse().map_err(|_| format!("bad similarity {sim:?}"))?,
            }),
            _ => Err(format!("unrecognised provenance {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Pending,
    Accepted,
    Rejected,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pending => "pending",
            Status::Accepted => "accepted",
            Status::Rejected => "rejected",
        }
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "pending" => Ok(Status::Pending),
            "accepted" | "accept" => Ok(Status::Accepted),
            "rejected" | "reject" => Ok(Status::Rejected),
            other => Err(format!("unknown status {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub word: String,
    pub provenance: Provenance,
    pub status: Status,
}

impl Candidate {
    pub fn pending(word: impl Into<String>, provenance: Provenance) -> Self {
        Candidate {
            word: word.into(),
            provenance,
            status: Status::Pending,
        }
    }
}

/// Candidate words in insertion order, unique by word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    items: Vec<Candidate>,
    index: HashMap<String, usize>,
}

impl CandidateSet {
    /// Seeds that occur in the corpus vocabulary become pending candidates;
    /// the rest are reported.
    pub fn from_seeds(seeds: &SeedSet, vocab: &Vocabulary) -> (CandidateSet, Vec<String>) {
        let mut set = CandidateSet::default();
        let mut warnings = Vec::new();
        for s in seeds {
            if !vocab.contains(&s.word) {
                let msg = format!("seed {:?} does not occur in the corpus vocabulary, skipped", s.word);
                log::warn!("{msg}");
                warnings.push(msg);
                continue;
            }
            set.insert(Candidate::pending(
                &s.word,
                Provenance::Seed {
                    pole: s.pole,
                    source: s.source,
                },
            ));
        }
        (set, warnings)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Candidate> {
        self.items.iter()
    }

    pub fn get(&self, word: &str) -> Option<&Candidate> {
        self.index.get(word).map(|&k| &self.items[k])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn with_status(&self, status: Status) -> impl Iterator<Item = &Candidate> {
        self.items.iter().filter(move |c| c.status == status)
    }

    pub fn accepted_words(&self) -> Vec<String> {
        self.with_status(Status::Accepted).map(|c| c.word.clone()).collect()
    }

    fn insert(&mut self, c: Candidate) {
        self.index.insert(c.word.clone(), self.items.len());
        self.items.push(c);
    }

    /// Merges expansion results. A word already present keeps its entry,
    /// except that an embedding provenance is replaced by one with a strictly
    /// higher similarity. Returns the number of new words.
    pub fn merge(&mut self, additions: Vec<Candidate>) -> usize {
        let mut added = 0;
        for c in additions {
            match self.index.get(&c.word) {
                None => {
                    self.insert(c);
                    added += 1;
                }
                Some(&k) => {
                    if let (
                        Provenance::Embedding { similarity: old, .. },
                        Provenance::Embedding { similarity: new, .. },
                    ) = (&self.items[k].provenance, &c.provenance)
                    {
                        if new > old {
                            self.items[k].provenance = c.provenance;
                        }
                    }
                }
            }
        }
        added
    }

    /// `word,status,provenance` with a header line.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["word", "status", "provenance"])?;
        for c in &self.items {
            w.write_record([c.word.as_str(), c.status.as_str(), &c.provenance.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<CandidateSet> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut set = CandidateSet::default();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |m: String| Error::malformed(path, k + 2, m);
            if rec.len() != 3 {
                return Err(bad("expected word,status,provenance".into()));
            }
            if set.contains(&rec[0]) {
                return Err(bad(format!("duplicate candidate {:?}", &rec[0])));
            }
            set.insert(Candidate {
                word: rec[0].to_owned(),
                status: rec[1].parse().map_err(bad)?,
                provenance: rec[2].parse().map_err(bad)?,
            });
        }
        Ok(set)
    }
}

impl<'a> IntoIterator for &'a CandidateSet {
    type Item = &'a Candidate;
    type IntoIter = std::slice::Iter<'a, Candidate>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

/// WordNet synonyms of every seed that occur in the corpus vocabulary.
/// A synonym reachable from several seeds keeps the first seed.
pub fn expand_wordnet(seeds: &SeedSet, db: &SynsetDb, vocab: &Vocabulary) -> Vec<Candidate> {
    let mut out = CandidateSet::default();
    for seed in seeds {
        for syn in db.synonyms(&seed.word) {
            if vocab.contains(&syn) && !seeds.contains(&syn) && !out.contains(&syn) {
                out.insert(Candidate::pending(
                    syn,
                    Provenance::WordNet {
                        seed: seed.word.clone(),
                    },
                ));
            }
        }
    }
    out.items
}

/// The `k` nearest embedding neighbors of every seed. A neighbor shared by
/// several seeds keeps the provenance with the highest similarity.
pub fn expand_embedding(seeds: &SeedSet, vectors: &WordVectors, k: usize) -> (Vec<Candidate>, Vec<String>) {
    let mut out = CandidateSet::default();
    let mut warnings = Vec::new();
    if k == 0 {
        return (Vec::new(), warnings);
    }
    for seed in seeds {
        let list = match vectors.nearest_neighbors(&seed.word, k) {
            Ok(list) => list,
            Err(e) => {
                let msg = format!("seed {:?} skipped for neighbor expansion: {e}", seed.word);
                log::warn!("{msg}");
                warnings.push(msg);
                continue;
            }
        };
        let additions = list
            .neighbors
            .into_iter()
            .filter(|n| !seeds.contains(&n.word))
            .map(|n| {
                Candidate::pending(
                    n.word,
                    Provenance::Embedding {
                        seed: seed.word.clone(),
                        similarity: n.similarity,
                    },
                )
            })
            .collect();
        out.merge(additions);
    }
    (out.items, warnings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// Reads a review file: one `word,accept|reject` per line; `#` comments and
/// blank lines are ignored.
pub fn load_review(path: &Path) -> Result<Vec<(String, Decision)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((word, decision)) = line.split_once(',') else {
            return Err(Error::malformed(path, k + 1, "expected word,accept|reject"));
        };
        let decision = match decision.trim().to_ascii_lowercase().as_str() {
            "accept" => Decision::Accept,
            "reject" => Decision::Reject,
            other => return Err(Error::malformed(path, k + 1, format!("unknown decision {other:?}"))),
        };
        out.push((word.trim().to_lowercase(), decision));
    }
    Ok(out)
}

/// Applies accept/reject decisions. Decisions for unknown words are reported
/// and ignored; candidates without a decision keep their status.
pub fn apply_review(candidates: &mut CandidateSet, decisions: &[(String, Decision)]) -> Vec<String> {
    let mut warnings = Vec::new();
    for (word, decision) in decisions {
        match candidates.index.get(word) {
            Some(&k) => {
                candidates.items[k].status = match decision {
                    Decision::Accept => Status::Accepted,
                    Decision::Reject => Status::Rejected,
                };
            }
            None => {
                let msg = format!("review mentions {word:?}, which is not a candidate");
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    warnings
}

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::general::GeneralLexicon;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pole {
    High,
    Low,
}

impl Pole {
    pub fn as_str(self) -> &'static str {
        match self {
            Pole::High => "high",
            Pole::Low => "low",
        }
    }
}

impl fmt::Display for Pole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pole {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(Pole::High),
            "low" => Ok(Pole::Low),
            other => Err(format!("unknown pole {other:?}")),
        }
    }
}

/// Where a seed word came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SeedSource {
    GeneralLexicon,
    Survey,
    Circumplex,
    Liwc,
    Profanity,
    Brainstorm,
}

impl SeedSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SeedSource::GeneralLexicon => "general-lexicon",
            SeedSource::Survey => "survey",
            SeedSource::Circumplex => "circumplex",
            SeedSource::Liwc => "liwc",
            SeedSource::Profanity => "profanity",
            SeedSource::Brainstorm => "brainstorm",
        }
    }
}

impl fmt::Display for SeedSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeedSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "general-lexicon" => Ok(SeedSource::GeneralLexicon),
            "survey" => Ok(SeedSource::Survey),
            "circumplex" => Ok(SeedSource::Circumplex),
            "liwc" => Ok(SeedSource::Liwc),
            "profanity" => Ok(SeedSource::Profanity),
            "brainstorm" => Ok(SeedSource::Brainstorm),
            other => Err(format!("unknown seed source {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    pub word: String,
    pub pole: Pole,
    pub source: SeedSource,
    pub frequency: u64,
}

/// Seed words in selection order, no word twice.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedSet {
    seeds: Vec<Seed>,
}

impl SeedSet {
    pub fn iter(&self) -> std::slice::Iter<'_, Seed> {
        self.seeds.iter()
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.seeds.iter().any(|s| s.word == word)
    }

    pub fn pole(&self, pole: Pole) -> impl Iterator<Item = &Seed> {
        self.seeds.iter().filter(move |s| s.pole == pole)
    }

    /// Appends a seed; returns false if the word is already present.
    pub fn push(&mut self, seed: Seed) -> bool {
        if self.contains(&seed.word) {
            return false;
        }
        self.seeds.push(seed);
        true
    }

    /// Adds entries from a seed list, frequencies taken from `vocab`.
    /// Duplicates of earlier seeds are skipped and reported.
    pub fn extend_from_list(&mut self, list: &[SeedListEntry], vocab: &Vocabulary) -> Vec<String> {
        let mut warnings = Vec::new();
        for e in list {
            let seed = Seed {
                word: e.word.clone(),
                pole: e.pole,
                source: e.source,
                frequency: vocab.count(&e.word),
            };
            if !self.push(seed) {
                let msg = format!("seed {:?} listed more than once, later entry ignored", e.word);
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        warnings
    }

    /// `word,pole,source,frequency` with a header line.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["word", "pole", "source", "frequency"])?;
        for s in &self.seeds {
            w.write_record([&s.word, s.pole.as_str(), s.source.as_str(), &s.frequency.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<SeedSet> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut set = SeedSet::default();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            let bad = |m: String| Error::malformed(path, line, m);
            if rec.len() != 4 {
                return Err(bad("expected word,pole,source,frequency".into()));
            }
            let seed = Seed {
                word: rec[0].to_owned(),
                pole: rec[1].parse().map_err(bad)?,
                source: rec[2].parse().map_err(bad)?,
                frequency: rec[3].parse().map_err(|_| bad("bad frequency".into()))?,
            };
            if !set.push(seed) {
                return Err(bad(format!("duplicate seed {:?}", &rec[0])));
            }
        }
        Ok(set)
    }
}

impl<'a> IntoIterator for &'a SeedSet {
    type Item = &'a Seed;
    type IntoIter = std::slice::Iter<'a, Seed>;

    fn into_iter(self) -> Self::IntoIter {
        self.seeds.iter()
    }
}

/// Two-tier frequency requirement for seeds drawn from the general lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedConfig {
    pub n1: usize,
    pub f1: u64,
    pub n2: usize,
    pub f2: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            n1: 10,
            f1: 100,
            n2: 10,
            f2: 1000,
        }
    }
}

fn scan_pole<'a>(ranked: &[(&'a str, f64)], vocab: &Vocabulary, cfg: &SeedConfig) -> Vec<&'a str> {
    let mut picks = Vec::with_capacity(cfg.n1 + cfg.n2);
    let mut rest = ranked.iter();
    for (quota, threshold) in [(cfg.n1, cfg.f1), (cfg.n2, cfg.f2)] {
        let mut taken = 0;
        while taken < quota {
            let Some((word, _)) = rest.next() else { break };
            if vocab.count(word) > threshold {
                picks.push(*word);
                taken += 1;
            }
        }
    }
    picks
}

/// Picks high and low arousal seeds from the general lexicon.
///
/// Words are scanned by descending arousal (ascending for the low pole, ties
/// by word). The first `n1` words with corpus frequency above `f1` are taken,
/// then the scan continues and takes `n2` further words with frequency above
/// `f2`.
pub fn select_seeds(general: &GeneralLexicon, vocab: &Vocabulary, cfg: &SeedConfig) -> Result<SeedSet> {
    if general.is_empty() {
        return Err(Error::Degenerate("general lexicon is empty".into()));
    }
    let mut ranked: Vec<(&str, f64)> = general.iter().map(|(w, e)| (w, e.arousal)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let high = scan_pole(&ranked, vocab, cfg);
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let low = scan_pole(&ranked, vocab, cfg);

    let needed = cfg.n1 + cfg.n2;
    for (pole, picks) in [(Pole::High, &high), (Pole::Low, &low)] {
        if picks.len() < needed {
            return Err(Error::SeedShortfall {
                pole: pole.to_string(),
                needed,
                found: picks.len(),
            });
        }
    }
    let high_set: HashSet<&str> = high.iter().copied().collect();
    if let Some(w) = low.iter().find(|w| high_set.contains(*w)) {
        return Err(Error::SeedConflict((*w).to_owned()));
    }

    let mut set = SeedSet::default();
    for (pole, picks) in [(Pole::High, high), (Pole::Low, low)] {
        for word in picks {
            set.push(Seed {
                word: word.to_owned(),
                pole,
                source: SeedSource::GeneralLexicon,
                frequency: vocab.count(word),
            });
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedListEntry {
    pub word: String,
    pub pole: Pole,
    pub source: SeedSource,
}

/// Reads a hand-made seed list: one `word,pole,source` per line. Blank lines
/// and `#` comments are ignored.
pub fn load_seed_list(path: &Path) -> Result<Vec<SeedListEntry>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: String| Error::malformed(path, k + 1, m);
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let [word, pole, source] = parts[..] else {
            return Err(bad("expected word,pole,source".into()));
        };
        if word.is_empty() {
            return Err(bad("empty word".into()));
        }
        out.push(SeedListEntry {
            word: word.to_lowercase(),
            pole: pole.parse().map_err(bad)?,
            source: source.parse().map_err(bad)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn vocab(pairs: &[(&str, u64)]) -> Vocabulary {
        let counts: HashMap<String, u64> = pairs.iter().map(|(w, n)| ((*w).to_owned(), *n)).collect();
        Vocabulary::from_counts(counts, 1).unwrap()
    }

    fn small_cfg() -> SeedConfig {
        SeedConfig {
            n1: 2,
            f1: 10,
            n2: 1,
            f2: 100,
        }
    }

    #[test]
    fn frequent_top_word_is_skipped_when_rare() {
        let general = GeneralLexicon::from_arousal([
            ("rare", 9.0),
            ("a", 8.0),
            ("b", 7.5),
            ("c", 7.0),
            ("d", 6.0),
            ("x", 1.0),
            ("y", 2.0),
            ("z", 3.0),
        ]);
        let v = vocab(&[
            ("rare", 5),
            ("a", 50),
            ("b", 11),
            ("c", 50),
            ("d", 500),
            ("x", 200),
            ("y", 200),
            ("z", 200),
        ]);
        let seeds = select_seeds(&general, &v, &small_cfg()).unwrap();
        let high: Vec<_> = seeds.pole(Pole::High).map(|s| s.word.as_str()).collect();
        // a, b pass >10; c fails >100; d passes >100.
        assert_eq!(high, ["a", "b", "d"]);
        let low: Vec<_> = seeds.pole(Pole::Low).map(|s| s.word.as_str()).collect();
        assert_eq!(low, ["x", "y", "z"]);
        assert!(!seeds.contains("rare"));
    }

    #[test]
    fn equal_thresholds_take_the_first_qualifying_words() {
        let general = GeneralLexicon::from_arousal((0..10).map(|i| (format!("w{i}"), 1.0 + i as f64 * 0.8)));
        let counts: Vec<(String, u64)> = (0..10)
            .map(|i| (format!("w{i}"), if i % 3 == 0 { 1 } else { 50 }))
            .collect();
        let refs: Vec<(&str, u64)> = counts.iter().map(|(w, n)| (w.as_str(), *n)).collect();
        let v = vocab(&refs);
        let cfg = SeedConfig {
            n1: 2,
            f1: 10,
            n2: 1,
            f2: 10,
        };
        let seeds = select_seeds(&general, &v, &cfg).unwrap();
        let high: Vec<_> = seeds.pole(Pole::High).map(|s| s.word.as_str()).collect();
        assert_eq!(high, ["w8", "w7", "w5"]);
        let low: Vec<_> = seeds.pole(Pole::Low).map(|s| s.word.as_str()).collect();
        assert_eq!(low, ["w1", "w2", "w4"]);
    }

    #[test]
    fn shortfall_is_reported() {
        let general = GeneralLexicon::from_arousal([("a", 8.0), ("b", 2.0)]);
        let v = vocab(&[("a", 1000), ("b", 1000)]);
        let err = select_seeds(&general, &v, &small_cfg()).unwrap_err();
        assert!(
            matches!(
                err,
                Error::SeedShortfall {
                    needed: 3,
                    found: 2,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn overlapping_poles_are_an_error() {
        let general = GeneralLexicon::from_arousal([("a", 8.0), ("b", 5.0), ("c", 2.0)]);
        let v = vocab(&[("a", 1000), ("b", 1000), ("c", 1000)]);
        let cfg = SeedConfig {
            n1: 1,
            f1: 10,
            n2: 1,
            f2: 10,
        };
        assert!(matches!(select_seeds(&general, &v, &cfg), Err(Error::SeedConflict(w)) if w == "b"));
    }

    #[test]
    fn seed_list_and_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let list_path = dir.path().join("seeds.txt");
        std::fs::write(
            &list_path,
            "# extra seeds\nDeadline,high,survey\nrelaxed,low,circumplex\n\ndeadline,low,brainstorm\n",
        )
        .unwrap();
        let list = load_seed_list(&list_path).unwrap();
        assert_eq!(list.len(), 3);
        let mut set = SeedSet::default();
        let warnings = set.extend_from_list(&list, &vocab(&[("deadline", 40)]));
        assert_eq!(warnings.len(), 1);
        assert_eq!(set.len(), 2);
        assert_eq!(set.iter().next().unwrap().frequency, 40);

        let out = dir.path().join("seeds.csv");
        set.save(&out).unwrap();
        assert_eq!(SeedSet::load(&out).unwrap(), set);
    }

    #[test]
    fn seed_list_rejects_unknown_source() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seeds.txt");
        std::fs::write(&path, "urgent,high,twitter\n").unwrap();
        assert!(matches!(load_seed_list(&path), Err(Error::Malformed { line: 1, .. })));
    }
}

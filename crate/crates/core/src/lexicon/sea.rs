use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use super::sheet::RatingRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SeaEntry {
    /// Mean of the rater scores.
    pub arousal: f64,
    pub scores: BTreeMap<String, u8>,
    pub source: String,
}

/// The domain lexicon built from human ratings. The global mean over all
/// word arousal values is kept current on every mutation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeaLexicon {
    entries: BTreeMap<String, SeaEntry>,
    mean: f64,
}

impl SeaLexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&SeaEntry> {
        self.entries.get(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SeaEntry)> {
        self.entries.iter().map(|(w, e)| (w.as_str(), e))
    }

    /// Mean arousal over all words; NaN when empty.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Every rater id that scored at least one word, sorted.
    pub fn raters(&self) -> BTreeSet<&str> {
        self.entries
            .values()
            .flat_map(|e| e.scores.keys().map(String::as_str))
            .collect()
    }

    pub fn insert(&mut self, word: String, entry: SeaEntry) -> Result<()> {
        if !(1.0..=9.0).contains(&entry.arousal) {
            return Err(Error::InvalidConfig(format!(
                "arousal {} for {word:?} outside [1, 9]",
                entry.arousal
            )));
        }
        self.entries.insert(word, entry);
        self.refresh();
        Ok(())
    }

    pub fn remove(&mut self, word: &str) -> Option<SeaEntry> {
        let e = self.entries.remove(word);
        self.refresh();
        e
    }

    fn refresh(&mut self) {
        self.mean = self.entries.values().map(|e| e.arousal).sum::<f64>() / self.entries.len() as f64;
    }

    /// Header `word,arousal,<rater ids…>,source`; rater cells left empty
    /// where that rater did not score the word.
    pub fn save(&self, path: &Path) -> Result<()> {
        let raters: Vec<&str> = self.raters().into_iter().collect();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["word", "arousal"];
        header.extend(&raters);
        header.push("source");
        w.write_record(&header)?;
        for (word, e) in &self.entries {
            let mut row = vec![word.clone(), e.arousal.to_string()];
            row.extend(
                raters
                    .iter()
                    .map(|r| e.scores.get(*r).map_or(String::new(), u8::to_string)),
            );
            row.push(e.source.clone());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a lexicon file. `word` and `arousal` are required; `source` is
    /// optional; any other column holds one rater's scores.
    pub fn load(path: &Path) -> Result<SeaLexicon> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let headers = rdr.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let missing = |c: &str| Error::MissingColumn {
            path: path.to_path_buf(),
            column: c.into(),
        };
        let word_col = find("word").ok_or_else(|| missing("word"))?;
        let arousal_col = find("arousal").ok_or_else(|| missing("arousal"))?;
        let source_col = find("source");
        let rater_cols: Vec<(usize, String)> = headers
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != word_col && *k != arousal_col && Some(*k) != source_col)
            .map(|(k, h)| (k, h.to_owned()))
            .collect();

        let mut lex = SeaLexicon::default();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            let bad = |m: String| Error::malformed(path, line, m);
            let word = rec.get(word_col).unwrap_or("").to_lowercase();
            if word.is_empty() {
                return Err(bad("empty word".into()));
            }
            let arousal: f64 = rec
                .get(arousal_col)
                .unwrap_or("")
                .parse()
                .map_err(|_| bad(format!("unparsable arousal for {word:?}")))?;
            if !(1.0..=9.0).contains(&arousal) {
                return Err(bad(format!("arousal {arousal} for {word:?} outside [1, 9]")));
            }
            let mut scores = BTreeMap::new();
            for (c, rater) in &rater_cols {
                let cell = rec.get(*c).unwrap_or("");
                if cell.is_empty() {
                    continue;
                }
                match cell.parse::<u8>() {
                    Ok(s @ 1..=9) => {
                        scores.insert(rater.clone(), s);
                    }
                    _ => {
                        return Err(bad(format!(
                            "score {cell:?} from {rater} is not an integer from 1 to 9"
                        )))
                    }
                }
            }
            let source = source_col.and_then(|c| rec.get(c)).unwrap_or("").to_owned();
            if lex.entries.contains_key(&word) {
                return Err(bad(format!("duplicate word {word:?}")));
            }
            lex.entries.insert(
                word,
                SeaEntry {
                    arousal,
                    scores,
                    source,
                },
            );
        }
        lex.refresh();
        Ok(lex)
    }
}

/// Word arousal = mean of its rater scores. `sources` attaches provenance
/// text per word (missing words get an empty source).
pub fn aggregate_ratings(records: &[RatingRecord], sources: &HashMap<String, String>) -> SeaLexicon {
    let mut by_word: BTreeMap<&str, BTreeMap<String, u8>> = BTreeMap::new();
    for r in records {
        by_word.entry(&r.word).or_default().insert(r.rater.clone(), r.score);
    }
    let mut lex = SeaLexicon::default();
    for (word, scores) in by_word {
        let arousal = scores.values().map(|&s| f64::from(s)).sum::<f64>() / scores.len() as f64;
        lex.entries.insert(
            word.to_owned(),
            SeaEntry {
                arousal,
                scores,
                source: sources.get(word).cloned().unwrap_or_default(),
            },
        );
    }
    lex.refresh();
    lex
}

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names in a general-purpose norms file. Defaults follow the
/// widely distributed norms CSV header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub word: String,
    pub arousal: String,
    pub arousal_sd: Option<String>,
    pub valence: Option<String>,
    pub dominance: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            word: "Word".into(),
            arousal: "A.Mean.Sum".into(),
            arousal_sd: Some("A.SD.Sum".into()),
            valence: Some("V.Mean.Sum".into()),
            dominance: Some("D.Mean.Sum".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralEntry {
    pub arousal: f64,
    pub arousal_sd: Option<f64>,
    pub valence: Option<f64>,
    pub dominance: Option<f64>,
}

/// Word → arousal norms, words lowercase and unique, arousal in [1, 9].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeneralLexicon {
    entries: BTreeMap<String, GeneralEntry>,
}

impl GeneralLexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&GeneralEntry> {
        self.entries.get(word)
    }

    pub fn arousal(&self, word: &str) -> Option<f64> {
        self.entries.get(word).map(|e| e.arousal)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &GeneralEntry)> {
        self.entries.iter().map(|(w, e)| (w.as_str(), e))
    }

    /// Inserts an entry, returning false (and leaving the lexicon untouched)
    /// when arousal lies outside [1, 9].
    pub fn insert(&mut self, word: &str, entry: GeneralEntry) -> bool {
        if !(1.0..=9.0).contains(&entry.arousal) {
            return false;
        }
        self.entries.insert(word.to_lowercase(), entry);
        true
    }

    pub fn from_arousal<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut lex = GeneralLexicon::default();
        for (w, a) in pairs {
            lex.insert(
                w.as_ref(),
                GeneralEntry {
                    arousal: a,
                    arousal_sd: None,
                    valence: None,
                    dominance: None,
                },
            );
        }
        lex
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadedGeneral {
    pub lexicon: GeneralLexicon,
    pub warnings: Vec<String>,
}

fn sniff_delimiter(path: &Path, file: &mut File) -> Result<u8> {
    let mut first = String::new();
    BufReader::new(&mut *file)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    file.rewind().map_err(|e| Error::io(path, e))?;
    Ok(if first.contains('\t') { b'\t' } else { b',' })
}

/// Loads a delimited norms file (comma or tab, detected from the header).
///
/// Rows with an unparsable or out-of-range arousal are dropped with a
/// warning; a repeated word replaces the earlier row with a warning.
pub fn load_general_lexicon(path: &Path, columns: &ColumnMap) -> Result<LoadedGeneral> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let delimiter = sniff_delimiter(path, &mut file)?;
    read_general_lexicon(path, file, delimiter, columns)
}

fn read_general_lexicon<R: Read>(path: &Path, reader: R, delimiter: u8, columns: &ColumnMap) -> Result<LoadedGeneral> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = |name: &String| {
        find(name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.clone(),
        })
    };
    let word_col = required(&columns.word)?;
    let arousal_col = required(&columns.arousal)?;
    let optional = |name: &Option<String>| name.as_deref().and_then(find);
    let (sd_col, val_col, dom_col) = (
        optional(&columns.arousal_sd),
        optional(&columns.valence),
        optional(&columns.dominance),
    );

    let mut out = LoadedGeneral::default();
    let mut warn = |msg: String| {
        log::warn!("{msg}");
        out.warnings.push(msg);
    };
    let mut lexicon = GeneralLexicon::default();
    for (k, record) in rdr.records().enumerate() {
        let line = k + 2;
        let record = record?;
        let cell = |c: usize| record.get(c).map(str::trim).unwrap_or("");
        let number = |c: Option<usize>| c.and_then(|c| cell(c).parse::<f64>().ok());
        let word = cell(word_col).to_lowercase();
        if word.is_empty() {
            warn(format!("{}:{line}: empty word, row skipped", path.display()));
            continue;
        }
        let Ok(arousal) = cell(arousal_col).parse::<f64>() else {
            warn(format!(
                "{}:{line}: unparsable arousal for {word:?}, row skipped",
                path.display()
            ));
            continue;
        };
        let entry = GeneralEntry {
            arousal,
            arousal_sd: number(sd_col),
            valence: number(val_col),
            dominance: number(dom_col),
        };
        let duplicate = lexicon.entries.contains_key(&word);
        if !lexicon.insert(&word, entry) {
            warn(format!(
                "{}:{line}: arousal {arousal} for {word:?} outside [1, 9], row rejected",
                path.display()
            ));
            continue;
        }
        if duplicate {
            warn(format!(
                "{}:{line}: duplicate word {word:?}, keeping the last row",
                path.display()
            ));
        }
    }
    out.lexicon = lexicon;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = ",Word,V.Mean.Sum,V.SD.Sum,V.Rat.Sum,A.Mean.Sum,A.SD.Sum,A.Rat.Sum,D.Mean.Sum";

    fn load(body: &str) -> Result<LoadedGeneral> {
        let text = format!("{HEADER}\n{body}");
        read_general_lexicon(Path::new("mem.csv"), text.as_bytes(), b',', &ColumnMap::default())
    }

    #[test]
    fn three_rows() {
        let l = load("1,aardvark,6.26,2.21,19,2.41,1.4,22,4.27\n2,abalone,5.3,1.59,20,2.65,1.9,20,4.95\n3,Abandon,2.84,1.54,19,3.73,2.43,22,3.32\n")
            .unwrap();
        assert_eq!(l.lexicon.len(), 3);
        assert!(l.warnings.is_empty());
        let e = l.lexicon.get("abandon").unwrap();
        assert_eq!(e.arousal, 3.73);
        assert_eq!(e.arousal_sd, Some(2.43));
        assert_eq!(e.valence, Some(2.84));
        assert_eq!(e.dominance, Some(3.32));
    }

    #[test]
    fn out_of_range_rows_are_rejected() {
        let l = load("1,calm,5,1,1,0.5,1,1,5\n2,ok,5,1,1,4.5,1,1,5\n3,hot,5,1,1,9.5,1,1,5\n").unwrap();
        assert_eq!(l.lexicon.len(), 1);
        assert_eq!(l.warnings.len(), 2);
    }

    #[test]
    fn duplicates_keep_the_last_row() {
        let l = load("1,word,5,1,1,3,1,1,5\n2,Word,5,1,1,6,1,1,5\n").unwrap();
        assert_eq!(l.lexicon.len(), 1);
        assert_eq!(l.warnings.len(), 1);
        assert_eq!(l.lexicon.arousal("word"), Some(6.0));
    }

    #[test]
    fn missing_mapped_column_is_fatal() {
        let cols = ColumnMap {
            arousal: "Arousal".into(),
            ..ColumnMap::default()
        };
        let err = read_general_lexicon(Path::new("x.csv"), format!("{HEADER}\n").as_bytes(), b',', &cols).unwrap_err();
        assert!(matches!(err, Error::MissingColumn { ref column, .. } if column == "Arousal"));
    }

    #[test]
    fn tab_separated_file_with_custom_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("norms.tsv");
        std::fs::write(&path, "term\tarousal\nurgent\t7.5\nnap\t1.5\n").unwrap();
        let cols = ColumnMap {
            word: "term".into(),
            arousal: "arousal".into(),
            arousal_sd: None,
            valence: None,
            dominance: None,
        };
        let l = load_general_lexicon(&path, &cols).unwrap();
        assert_eq!(l.lexicon.arousal("urgent"), Some(7.5));
        assert_eq!(l.lexicon.len(), 2);
    }
}

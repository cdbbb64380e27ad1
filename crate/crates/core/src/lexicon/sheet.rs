//! The rating sheet handed to human raters, and reading it back.
//!
//! Layout: `#`-prefixed instruction lines, then a CSV table with columns
//! `word,rating,frequency,neighbors`. The neighbors cell lists the `k`
//! closest embedding neighbors as `word:0.75`, separated by `;`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Vocabulary;
use crate::embedding::WordVectors;
use crate::error::{Error, Result};

/// Default rater instructions written above the table.
pub const DEFAULT_INSTRUCTIONS: &str = "\
Rate how activated a software developer is when writing each word in an
issue report or comment. Use whole numbers from 1 to 9:
  1 = calm, relaxed, sleepy, unaroused
  5 = neutral, neither calm nor excited
  9 = excited, stimulated, jittery, wide awake
Write your rating in the `rating` column and leave everything else as is.
The `neighbors` column lists words used in similar contexts in the issue
tracker, each with its similarity (1.00 = identical usage, 0 = unrelated).
Use them as hints to how the word is used. Do not deliberate for long.";

#[derive(Debug, Clone)]
pub struct SheetOptions {
    pub k: usize,
    /// Shuffle rows with this seed instead of sorting alphabetically.
    pub shuffle_seed: Option<u64>,
    pub instructions: String,
}

impl Default for SheetOptions {
    fn default() -> Self {
        SheetOptions {
            k: 10,
            shuffle_seed: None,
            instructions: DEFAULT_INSTRUCTIONS.to_owned(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Sheet {
    pub text: String,
    pub rows: usize,
    pub warnings: Vec<String>,
}

/// Renders the sheet for `words`. A word without an embedding vector gets an
/// empty neighbors cell and a warning.
pub fn generate_sheet(
    words: &[String],
    vocab: &Vocabulary,
    vectors: Option<&WordVectors>,
    opts: &SheetOptions,
) -> Sheet {
    let mut sheet = Sheet::default();
    for line in opts.instructions.lines() {
        writeln!(sheet.text, "# {line}").unwrap();
    }
    sheet.text.push_str("word,rating,frequency,neighbors\n");

    let mut ordered: Vec<&String> = words.iter().collect();
    ordered.sort();
    ordered.dedup();
    if let Some(seed) = opts.shuffle_seed {
        ordered.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    for word in ordered {
        let neighbors = match vectors.map(|v| v.nearest_neighbors(word, opts.k)) {
            Some(Ok(list)) => list
                .neighbors
                .iter()
                .map(|n| format!("{}:{:.2}", n.word, n.similarity))
                .collect::<Vec<_>>()
                .join(";"),
            Some(Err(e)) => {
                sheet.warn(format!("no neighbors for {word:?}: {e}"));
                String::new()
            }
            None => {
                sheet.warn(format!("no embedding available for {word:?}"));
                String::new()
            }
        };
        writeln!(sheet.text, "{word},,{},{neighbors}", vocab.count(word)).unwrap();
        sheet.rows += 1;
    }
    sheet
}

impl Sheet {
    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatingRecord {
    pub word: String,
    pub rater: String,
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub rater: String,
    pub line: usize,
    pub word: String,
    pub cell: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RatingIngest {
    pub records: Vec<RatingRecord>,
    /// Rows whose rating cell was empty.
    pub skipped_empty: usize,
    /// Rows whose rating was not an integer in 1..=9.
    pub row_errors: Vec<RowError>,
}

/// A filled-in sheet and the rater label its scores are filed under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatedSheet {
    pub rater: String,
    pub path: PathBuf,
}

impl RatedSheet {
    /// Parses `label=path`, or a bare path labelled by its file stem.
    pub fn parse(spec: &str) -> RatedSheet {
        match spec.split_once('=') {
            Some((label, path)) if !label.is_empty() => RatedSheet {
                rater: label.to_owned(),
                path: PathBuf::from(path),
            },
            _ => {
                let path = PathBuf::from(spec);
                let rater = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| spec.to_owned());
                RatedSheet { rater, path }
            }
        }
    }
}

fn ingest_one(sheet: &RatedSheet, text: &str, into: &mut RatingIngest) -> Result<()> {
    let path = &sheet.path;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.clone(),
                column: name.into(),
            })
    };
    let (word_col, rating_col) = (col("word")?, col("rating")?);
    let mut seen: HashMap<String, usize> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let word = rec.get(word_col).unwrap_or("").trim().to_lowercase();
        if word.is_empty() {
            continue;
        }
        if let Some(&first) = seen.get(&word) {
            return Err(Error::DuplicateWord {
                path: path.clone(),
                word,
                first,
                second: line,
            });
        }
        seen.insert(word.clone(), line);
        let cell = rec.get(rating_col).unwrap_or("").trim();
        if cell.is_empty() {
            into.skipped_empty += 1;
            continue;
        }
        match cell.parse::<u8>() {
            Ok(score @ 1..=9) => into.records.push(RatingRecord {
                word,
                rater: sheet.rater.clone(),
                score,
            }),
            _ => into.row_errors.push(RowError {
                rater: sheet.rater.clone(),
                line,
                word,
                cell: cell.to_owned(),
            }),
        }
    }
    Ok(())
}

/// Reads every rater's filled-in sheet. A word listed twice within one sheet
/// fails that sheet, and with it the ingest.
pub fn ingest_ratings(sheets: &[RatedSheet]) -> Result<RatingIngest> {
    if sheets.is_empty() {
        return Err(Error::InvalidConfig("no rating sheets given".into()));
    }
    let mut out = RatingIngest::default();
    for sheet in sheets {
        let text = fs::read_to_string(&sheet.path).map_err(|e| Error::io(&sheet.path, e))?;
        ingest_one(sheet, &text, &mut out)?;
    }
    for e in &out.row_errors {
        log::warn!(
            "{} line {}: rating {:?} for {:?} is not an integer from 1 to 9",
            e.rater,
            e.line,
            e.cell,
            e.word
        );
    }
    Ok(out)
}

/// Long-format rating table `word,rater,score`.
pub fn save_ratings(path: &Path, records: &[RatingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["word", "rater", "score"])?;
    let mut sorted: Vec<&RatingRecord> = records.iter().collect();
    sorted.sort();
    for r in sorted {
        w.write_record([r.word.as_str(), r.rater.as_str(), &r.score.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |m: &str| Error::malformed(path, k + 2, m);
        if rec.len() != 3 {
            return Err(bad("expected word,rater,score"));
        }
        let score: u8 = rec[2].parse().map_err(|_| bad("score is not an integer"))?;
        if !(1..=9).contains(&score) {
            return Err(bad("score outside 1..=9"));
        }
        out.push(RatingRecord {
            word: rec[0].to_owned(),
            rater: rec[1].to_owned(),
            score,
        });
    }
    Ok(out)
}

//! Max+min arousal scoring of text units and the combined general+domain
//! score.
//!
//! A unit's score is `max + min` over the arousal of its matched words,
//! where `max` is raised to the lexicon average when every match lies below
//! it and `min` is lowered to the average when every match lies above it.
//! Units with no match receive no score at all.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{extract_units, Field, Issue};
use crate::error::{Error, Result};
use crate::lexicon::{GeneralLexicon, SeaLexicon};

/// Word → arousal lookup with the mean over all its words.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringLexicon {
    map: HashMap<String, f64>,
    avg: f64,
}

impl ScoringLexicon {
    pub fn new(map: HashMap<String, f64>) -> Result<Self> {
        if map.is_empty() {
            return Err(Error::Degenerate("scoring lexicon is empty".into()));
        }
        if let Some((w, a)) = map.iter().find(|(_, a)| !a.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite arousal {a} for {w:?}")));
        }
        // Summed in sorted order so the mean does not depend on hash order.
        let mut values: Vec<f64> = map.values().copied().collect();
        values.sort_by(f64::total_cmp);
        let avg = values.iter().sum::<f64>() / values.len() as f64;
        Ok(ScoringLexicon { map, avg })
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self::new(pairs.into_iter().map(|(w, a)| (w.into(), a)).collect())
    }

    pub fn from_general(lex: &GeneralLexicon) -> Result<Self> {
        Self::from_pairs(lex.iter().map(|(w, e)| (w.to_owned(), e.arousal)))
    }

    pub fn from_sea(lex: &SeaLexicon) -> Result<Self> {
        Self::from_pairs(lex.iter().map(|(w, e)| (w.to_owned(), e.arousal)))
    }

    pub fn avg(&self) -> f64 {
        self.avg
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn arousal(&self, word: &str) -> Option<f64> {
        self.map.get(word).copied()
    }
}

/// Score of one token sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextScore {
    /// Matched token occurrences (repeats count).
    pub n_matched: usize,
    pub max: f64,
    pub min: f64,
    pub score: f64,
}

pub fn score_text<S: AsRef<str>>(tokens: &[S], lex: &ScoringLexicon) -> Option<TextScore> {
    let mut n_matched = 0;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for a in tokens.iter().filter_map(|t| lex.arousal(t.as_ref())) {
        n_matched += 1;
        hi = hi.max(a);
        lo = lo.min(a);
    }
    if n_matched == 0 {
        return None;
    }
    let max = hi.max(lex.avg);
    let min = lo.min(lex.avg);
    Some(TextScore {
        n_matched,
        max,
        min,
        score: max + min,
    })
}

/// General score plus the centered domain adjustment `sea − sea_avg`.
///
/// Absent whenever the general lexicon has no match. A unit without a domain
/// match is treated as domain-neutral, `sea = 2·avg(sea)`, so its adjustment
/// is zero at the default centering and every combined score moves by the
/// same amount when `sea_avg` changes. `n_matched`, `max` and `min` describe
/// the general part.
pub fn combined_score<S: AsRef<str>>(
    tokens: &[S],
    general: &ScoringLexicon,
    sea: &ScoringLexicon,
    sea_avg: f64,
) -> Option<TextScore> {
    let base = score_text(tokens, general)?;
    let adj = score_text(tokens, sea).map_or(2.0 * sea.avg(), |s| s.score) - sea_avg;
    Some(TextScore {
        score: base.score + adj,
        ..base
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    General,
    Sea,
    Combined,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::General, Mode::Sea, Mode::Combined];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::General => "general",
            Mode::Sea => "sea",
            Mode::Combined => "combined",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scoring mode {s:?}")))
    }
}

/// How the centering constant for combined scores is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SeaAvg {
    /// Twice the domain-lexicon mean: the score of an all-average text.
    #[default]
    TwiceLexiconMean,
    /// Mean of all present domain text scores in the scored corpus.
    DatasetMean,
    Fixed(f64),
}

impl FromStr for SeaAvg {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "twice-lexicon-mean" => Ok(SeaAvg::TwiceLexiconMean),
            "dataset-mean" => Ok(SeaAvg::DatasetMean),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(SeaAvg::Fixed)
                .ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "sea_avg must be \"twice-lexicon-mean\", \"dataset-mean\" or a number, got {s:?}"
                    ))
                }),
        }
    }
}

impl TryFrom<String> for SeaAvg {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SeaAvg> for String {
    fn from(v: SeaAvg) -> String {
        match v {
            SeaAvg::TwiceLexiconMean => "twice-lexicon-mean".into(),
            SeaAvg::DatasetMean => "dataset-mean".into(),
            SeaAvg::Fixed(x) => x.to_string(),
        }
    }
}

/// One row of the score table.
#[derive(Debug, Clone, PartialEq)]
pub struct ArousalScore {
    pub issue_id: String,
    pub field: Field,
    pub mode: Mode,
    pub n_matched: usize,
    pub max: f64,
    pub min: f64,
    pub score: f64,
}

/// Lexicons available for scoring; a mode whose lexicon is missing is
/// skipped.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lexicons<'a> {
    pub general: Option<&'a ScoringLexicon>,
    pub sea: Option<&'a ScoringLexicon>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    /// Canonical order: issue id, field, mode.
    pub rows: Vec<ArousalScore>,
    /// Centering constant used for combined rows, when any were requested.
    pub sea_avg: Option<f64>,
}

fn resolve_sea_avg(units: &[(String, Field, Vec<String>)], sea: &ScoringLexicon, mode: SeaAvg) -> f64 {
    match mode {
        SeaAvg::TwiceLexiconMean => 2.0 * sea.avg(),
        SeaAvg::Fixed(v) => v,
        SeaAvg::DatasetMean => {
            // Sequential so the sum does not depend on thread scheduling.
            let (sum, n) = units
                .iter()
                .filter_map(|(_, _, t)| score_text(t, sea))
                .fold((0.0, 0usize), |a, s| (a.0 + s.score, a.1 + 1));
            // No domain match anywhere means no adjustment is ever applied.
            if n == 0 {
                2.0 * sea.avg()
            } else {
                sum / n as f64
            }
        }
    }
}

/// Scores every text unit of every issue under each requested mode. Absent
/// scores produce no row.
pub fn score_corpus(issues: &[Issue], lex: Lexicons<'_>, modes: &[Mode], sea_avg: SeaAvg) -> Result<ScoreTable> {
    for &m in modes {
        let ok = match m {
            Mode::General => lex.general.is_some(),
            Mode::Sea => lex.sea.is_some(),
            Mode::Combined => lex.general.is_some() && lex.sea.is_some(),
        };
        if !ok {
            return Err(Error::InvalidConfig(format!("mode {m} requested without its lexicon")));
        }
    }
    let units: Vec<(String, Field, Vec<String>)> = issues
        .par_iter()
        .flat_map_iter(|i| extract_units(i).into_iter().map(|u| (u.issue_id, u.field, u.tokens)))
        .collect();
    let avg = match (modes.contains(&Mode::Combined), lex.sea) {
        (true, Some(sea)) => Some(resolve_sea_avg(&units, sea, sea_avg)),
        _ => None,
    };
    let mut rows: Vec<ArousalScore> = units
        .par_iter()
        .flat_map_iter(|(id, field, tokens)| {
            modes.iter().filter_map(move |&mode| {
                let s = match mode {
                    Mode::General => score_text(tokens, lex.general?),
                    Mode::Sea => score_text(tokens, lex.sea?),
                    Mode::Combined => combined_score(tokens, lex.general?, lex.sea?, avg?),
                }?;
                Some(ArousalScore {
                    issue_id: id.clone(),
                    field: *field,
                    mode,
                    n_matched: s.n_matched,
                    max: s.max,
                    min: s.min,
                    score: s.score,
                })
            })
        })
        .collect();
    rows.sort_by(|a, b| (&a.issue_id, a.field, a.mode).cmp(&(&b.issue_id, b.field, b.mode)));
    Ok(ScoreTable { rows, sea_avg: avg })
}

pub const SCORE_HEADER: &str = "issue_id,field,mode,n_matched,max,min,score";

impl ScoreTable {
    /// Delimited text, reals at 4 decimals.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SCORE_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{:.4},{:.4},{:.4}",
                csv_field(&r.issue_id),
                r.field,
                r.mode,
                r.n_matched,
                r.max,
                r.min,
                r.score
            )?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ScoreTable> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>().join(",") != SCORE_HEADER {
            return Err(Error::malformed(path, 1, format!("expected header {SCORE_HEADER:?}")));
        }
        let mut rows = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            let bad = |what: &str| Error::malformed(path, line, format!("bad {what}"));
            let num = |c: usize, what: &str| rec[c].parse::<f64>().map_err(|_| bad(what));
            rows.push(ArousalScore {
                issue_id: rec[0].to_owned(),
                field: rec[1].parse().map_err(|_| bad("field"))?,
                mode: rec[2].parse().map_err(|_| bad("mode"))?,
                n_matched: rec[3].parse().map_err(|_| bad("n_matched"))?,
                max: num(4, "max")?,
                min: num(5, "min")?,
                score: num(6, "score")?,
            });
        }
        Ok(ScoreTable { rows, sea_avg: None })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Comment, Priority};
    use proptest::prelude::*;

    /// Lexicon whose average is exactly `avg` thanks to a balancing pair.
    fn lex_with_avg(words: &[(&str, f64)], avg: f64) -> ScoringLexicon {
        let mut map: HashMap<String, f64> = words.iter().map(|&(w, a)| (w.to_owned(), a)).collect();
        let n = map.len() as f64 + 1.0;
        let rest = avg * n - map.values().sum::<f64>();
        map.insert("zzbalance".into(), rest);
        let lex = ScoringLexicon::new(map).unwrap();
        assert!((lex.avg() - avg).abs() < 1e-12);
        lex
    }

    #[test]
    fn no_match_is_absent() {
        let lex = lex_with_avg(&[("urgent", 8.0)], 5.0);
        assert_eq!(score_text(&["hello", "world"], &lex), None);
    }

    #[test]
    fn unclamped_and_clamped() {
        let lex = lex_with_avg(&[("calm", 2.0), ("panic", 8.0), ("alert", 7.0)], 5.3);
        let s = score_text(&["calm", "x", "panic"], &lex).unwrap();
        assert!((s.score - 10.0).abs() < 1e-12);
        let s = score_text(&["alert"], &lex).unwrap();
        assert_eq!(s.max, 7.0);
        assert!((s.min - 5.3).abs() < 1e-12);
        assert!((s.score - 12.3).abs() < 1e-12);
    }

    #[test]
    fn repeats_count_but_do_not_move_extremes() {
        let lex = lex_with_avg(&[("calm", 2.0)], 5.0);
        let s = score_text(&["calm", "calm", "calm"], &lex).unwrap();
        assert_eq!(s.n_matched, 3);
        assert_eq!(s.score, score_text(&["calm"], &lex).unwrap().score);
    }

    #[test]
    fn combined_rules() {
        // General score 10.9 from a single word at 5.45 with avg 5.45.
        let general = ScoringLexicon::from_pairs([("bug", 5.45)]).unwrap();
        let sea = lex_with_avg(&[("asap", 7.0)], 5.3);
        let none = combined_score(&["bug"], &general, &sea, 2.0 * sea.avg()).unwrap();
        assert!((none.score - 10.9).abs() < 1e-12);
        // Off-default centering moves unmatched units by the same offset.
        let shifted = combined_score(&["bug"], &general, &sea, 2.0 * sea.avg() + 0.5).unwrap();
        assert!((shifted.score - 10.4).abs() < 1e-12);
        let both = combined_score(&["bug", "asap"], &general, &sea, 10.7).unwrap();
        // SEA part: 7.0 + 5.3 = 12.3.
        assert!((both.score - 12.5).abs() < 1e-12);
        assert_eq!(combined_score(&["asap"], &general, &sea, 10.7), None);
    }

    #[test]
    fn sea_avg_parsing() {
        assert_eq!("dataset-mean".parse::<SeaAvg>().unwrap(), SeaAvg::DatasetMean);
        assert_eq!("10.5".parse::<SeaAvg>().unwrap(), SeaAvg::Fixed(10.5));
        assert!("nan".parse::<SeaAvg>().is_err());
        assert_eq!(
            String::from(SeaAvg::TwiceLexiconMean).parse::<SeaAvg>().unwrap(),
            SeaAvg::TwiceLexiconMean
        );
    }

    fn issue(id: &str, title: &str, desc: &str, comments: &[&str]) -> Issue {
        Issue {
            id: id.into(),
            priority: Priority::Major,
            title: title.into(),
            description: desc.into(),
            comments: comments
                .iter()
                .map(|c| Comment {
                    ts: None,
                    body: (*c).into(),
                })
                .collect(),
        }
    }

    #[test]
    fn corpus_rows() {
        let lex = lex_with_avg(&[("urgent", 8.0), ("calm", 2.0)], 5.0);
        let lx = Lexicons {
            general: Some(&lex),
            sea: None,
        };
        let all = [issue("1", "urgent", "calm", &["urgent", "calm now"])];
        let t = score_corpus(&all, lx, &[Mode::General], SeaAvg::default()).unwrap();
        assert_eq!(t.rows.len(), 5);
        let partial = [issue("2", "urgent fix", "nothing here", &[])];
        let t = score_corpus(&partial, lx, &[Mode::General], SeaAvg::default()).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].field, Field::Title);
        assert!(score_corpus(&partial, lx, &[Mode::Sea], SeaAvg::default()).is_err());
    }

    #[test]
    fn table_round_trip_and_order() {
        let general = lex_with_avg(&[("urgent", 8.0), ("calm", 2.0)], 5.0);
        let sea = lex_with_avg(&[("asap", 7.5)], 5.0);
        let lx = Lexicons {
            general: Some(&general),
            sea: Some(&sea),
        };
        let issues = [
            issue("b", "calm asap", "urgent", &["asap urgent"]),
            issue("a", "urgent", "calm", &[]),
        ];
        let t = score_corpus(&issues, lx, &Mode::ALL, SeaAvg::default()).unwrap();
        assert_eq!(t.sea_avg, Some(10.0));
        assert_eq!(t.rows[0].issue_id, "a");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scores.csv");
        t.save(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(
            text.starts_with("issue_id,field,mode,n_matched,max,min,score\na,title,general,1,8.0000,5.0000,13.0000\n")
        );
        let back = ScoreTable::load(&p).unwrap();
        assert_eq!(back.rows.len(), t.rows.len());
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(String::from_utf8(again).unwrap(), text);
    }

    #[test]
    fn dataset_mean_centering() {
        let general = lex_with_avg(&[("urgent", 8.0)], 5.0);
        let sea = lex_with_avg(&[("asap", 7.0)], 5.0);
        let lx = Lexicons {
            general: Some(&general),
            sea: Some(&sea),
        };
        let issues = [issue("1", "urgent asap", "urgent", &[])];
        let t = score_corpus(&issues, lx, &[Mode::Combined], SeaAvg::DatasetMean).unwrap();
        assert_eq!(t.sea_avg, Some(12.0));
        // The only domain score equals its own mean, so no adjustment.
        assert_eq!(t.rows[0].score, 13.0);
    }

    fn lexicon_and_tokens() -> impl Strategy<Value = (ScoringLexicon, Vec<String>)> {
        proptest::collection::vec(1.0f64..=9.0, 1..20).prop_flat_map(|vals| {
            let n = vals.len();
            let lex =
                ScoringLexicon::from_pairs(vals.into_iter().enumerate().map(|(i, a)| (format!("w{i}"), a))).unwrap();
            let toks = proptest::collection::vec(0..n + 5, 0..30)
                .prop_map(|ix| ix.into_iter().map(|i| format!("w{i}")).collect::<Vec<_>>());
            (Just(lex), toks)
        })
    }

    proptest! {
        #[test]
        fn clamp_holds((lex, toks) in lexicon_and_tokens()) {
            let matched = toks.iter().any(|t| lex.arousal(t).is_some());
            match score_text(&toks, &lex) {
                None => prop_assert!(!matched),
                Some(s) => {
                    prop_assert!(s.max >= lex.avg() && lex.avg() >= s.min);
                    prop_assert_eq!(s.score, s.max + s.min);
                }
            }
        }
    }
}

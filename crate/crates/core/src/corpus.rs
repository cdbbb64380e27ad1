//! Issue-tracker corpus: line-delimited JSON records, tokenization, the five
//! scoreable text fields and the frequency vocabulary.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jira priority ladder. `Unknown` holds anything unrecognised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Priority {
    Blocker,
    Critical,
    Major,
    Minor,
    Trivial,
    Unknown,
}

impl Priority {
    /// The five evaluated priorities, highest first.
    pub const RANKED: [Priority; 5] = [
        Priority::Blocker,
        Priority::Critical,
        Priority::Major,
        Priority::Minor,
        Priority::Trivial,
    ];

    pub fn parse(label: &str) -> Priority {
        match label.trim().to_ascii_lowercase().as_str() {
            "blocker" => Priority::Blocker,
            "critical" => Priority::Critical,
            "major" => Priority::Major,
            "minor" => Priority::Minor,
            "trivial" => Priority::Trivial,
            _ => Priority::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Priority::Blocker => "Blocker",
            Priority::Critical => "Critical",
            Priority::Major => "Major",
            Priority::Minor => "Minor",
            Priority::Trivial => "Trivial",
            Priority::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<String>,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub id: String,
    pub priority: Priority,
    pub title: String,
    pub description: String,
    pub comments: Vec<Comment>,
}

impl Issue {
    /// Texts that take part in frequency counting and co-occurrence windows:
    /// title, description, then every comment on its own.
    pub fn raw_texts(&self) -> impl Iterator<Item = &str> {
        [self.title.as_str(), self.description.as_str()]
            .into_iter()
            .chain(self.comments.iter().map(|c| c.body.as_str()))
    }
}

/// Scoreable field of an issue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Field {
    Title,
    Description,
    AllComments,
    FirstComment,
    LastComment,
}

impl Field {
    pub const ALL: [Field; 5] = [
        Field::Title,
        Field::Description,
        Field::AllComments,
        Field::FirstComment,
        Field::LastComment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Title => "title",
            Field::Description => "description",
            Field::AllComments => "all_comments",
            Field::FirstComment => "first_comment",
            Field::LastComment => "last_comment",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Field::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown field {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextUnit {
    pub issue_id: String,
    pub field: Field,
    pub tokens: Vec<String>,
}

/// Lowercase, letters-only tokens. Every non-letter character is a delimiter,
/// so "don't" yields `don` and `t`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for fragment in text.split(|c: char| !c.is_alphabetic()) {
        if fragment.is_empty() {
            continue;
        }
        let lower = fragment.to_lowercase();
        // Lowercasing can introduce combining marks (e.g. U+0130).
        if lower.chars().all(char::is_alphabetic) {
            tokens.push(lower);
        } else {
            tokens.extend(
                lower
                    .split(|c: char| !c.is_alphabetic())
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned),
            );
        }
    }
    tokens
}

/// Title and description always; the three comment fields only when the
/// issue has at least one comment.
pub fn extract_units(issue: &Issue) -> Vec<TextUnit> {
    let unit = |field, tokens| TextUnit {
        issue_id: issue.id.clone(),
        field,
        tokens,
    };
    let mut units = vec![
        unit(Field::Title, tokenize(&issue.title)),
        unit(Field::Description, tokenize(&issue.description)),
    ];
    if let (Some(first), Some(last)) = (issue.comments.first(), issue.comments.last()) {
        let all = issue.comments.iter().flat_map(|c| tokenize(&c.body)).collect();
        units.push(unit(Field::AllComments, all));
        units.push(unit(Field::FirstComment, tokenize(&first.body)));
        units.push(unit(Field::LastComment, tokenize(&last.body)));
    }
    units
}

#[derive(Deserialize)]
struct RawComment {
    #[serde(default)]
    ts: Option<String>,
    #[serde(default)]
    body: Option<String>,
}

#[derive(Deserialize)]
struct RawIssue {
    id: serde_json::Value,
    #[serde(default)]
    priority: Option<String>,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    comments: Option<Vec<RawComment>>,
}

#[derive(Serialize)]
struct RawIssueOut<'a> {
    id: &'a str,
    priority: &'a str,
    title: &'a str,
    description: &'a str,
    comments: &'a [Comment],
}

fn parse_record(line: &str) -> std::result::Result<Issue, String> {
    let raw: RawIssue = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id = match raw.id {
        serde_json::Value::String(s) if !s.is_empty() => s,
        serde_json::Value::Number(n) => n.to_string(),
        _ => return Err("record has no usable \"id\"".into()),
    };
    Ok(Issue {
        id,
        priority: raw.priority.as_deref().map_or(Priority::Unknown, Priority::parse),
        title: raw.title.unwrap_or_default(),
        description: raw.description.unwrap_or_default(),
        comments: raw
            .comments
            .unwrap_or_default()
            .into_iter()
            .map(|c| Comment {
                ts: c.ts,
                body: c.body.unwrap_or_default(),
            })
            .collect(),
    })
}

/// A record that could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    pub line: usize,
    pub message: String,
}

/// Streaming reader over a line-delimited corpus. Malformed records are logged,
/// remembered in [`IssueStream::skipped`] and skipped; blank lines are ignored.
pub struct IssueStream<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    skipped: Vec<SkippedRecord>,
    io_error: Option<std::io::Error>,
}

impl<R: BufRead> IssueStream<R> {
    pub fn new(reader: R) -> Self {
        IssueStream {
            lines: reader.lines(),
            line_no: 0,
            skipped: Vec::new(),
            io_error: None,
        }
    }

    pub fn skipped(&self) -> &[SkippedRecord] {
        &self.skipped
    }

    pub fn take_io_error(&mut self) -> Option<std::io::Error> {
        self.io_error.take()
    }
}

impl<R: BufRead> Iterator for IssueStream<R> {
    type Item = Issue;

    fn next(&mut self) -> Option<Issue> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.io_error = Some(e);
                    return None;
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            match parse_record(&line) {
                Ok(issue) => return Some(issue),
                Err(message) => {
                    log::warn!("corpus line {}: skipping malformed record: {message}", self.line_no);
                    self.skipped.push(SkippedRecord {
                        line: self.line_no,
                        message,
                    });
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub issues: Vec<Issue>,
    pub skipped: Vec<SkippedRecord>,
}

pub fn parse_corpus(path: &Path) -> Result<ParsedCorpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut stream = IssueStream::new(BufReader::new(file));
    let issues: Vec<Issue> = stream.by_ref().collect();
    if let Some(e) = stream.take_io_error() {
        return Err(Error::io(path, e));
    }
    Ok(ParsedCorpus {
        issues,
        skipped: stream.skipped,
    })
}

pub fn write_corpus(path: &Path, issues: &[Issue]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for issue in issues {
        let record = RawIssueOut {
            id: &issue.id,
            priority: issue.priority.as_str(),
            title: &issue.title,
            description: &issue.description,
            comments: &issue.comments,
        };
        let line = serde_json::to_string(&record).expect("issue serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Token counts that can be accumulated in shards and merged.
#[derive(Debug, Clone, Default)]
pub struct TokenCounter {
    counts: HashMap<String, u64>,
}

impl TokenCounter {
    pub fn add_text(&mut self, text: &str) {
        for token in tokenize(text) {
            *self.counts.entry(token).or_insert(0) += 1;
        }
    }

    pub fn add_issue(&mut self, issue: &Issue) {
        for text in issue.raw_texts() {
            self.add_text(text);
        }
    }

    pub fn merge(mut self, other: TokenCounter) -> TokenCounter {
        let (mut big, small) = if self.counts.len() >= other.counts.len() {
            (std::mem::take(&mut self.counts), other.counts)
        } else {
            (other.counts, std::mem::take(&mut self.counts))
        };
        for (word, n) in small {
            *big.entry(word).or_insert(0) += n;
        }
        TokenCounter { counts: big }
    }

    pub fn finish(self, min_count: u64) -> Result<Vocabulary> {
        Vocabulary::from_counts(self.counts, min_count)
    }
}

/// Word → (dense id, frequency). Ids follow descending frequency, ties broken
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    min_count: u64,
}

impl Vocabulary {
    pub fn from_counts(counts: HashMap<String, u64>, min_count: u64) -> Result<Vocabulary> {
        if min_count < 1 {
            return Err(Error::InvalidConfig("min_count must be at least 1".into()));
        }
        let mut entries: Vec<(String, u64)> = counts.into_iter().filter(|(_, n)| *n >= min_count).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i as u32))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Ok(Vocabulary {
            words,
            counts,
            index,
            min_count,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Frequency of `word`, zero when it is not in the vocabulary.
    pub fn count(&self, word: &str) -> u64 {
        self.id(word).map_or(0, |id| self.counts[id as usize])
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words.iter().map(String::as_str).zip(self.counts.iter().copied())
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Tab-separated `word\tcount`, one line per word in id order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# min_count\t{}", self.min_count).map_err(|e| Error::io(path, e))?;
        for (word, n) in self.iter() {
            writeln!(out, "{word}\t{n}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut counts = HashMap::new();
        let mut min_count = 1;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if let Some(rest) = line.strip_prefix("# min_count\t") {
                min_count = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::malformed(path, i + 1, "bad min_count"))?;
                continue;
            }
            let (word, n) = line
                .split_once('\t')
                .ok_or_else(|| Error::malformed(path, i + 1, "expected word<TAB>count"))?;
            let n: u64 = n
                .trim()
                .parse()
                .map_err(|_| Error::malformed(path, i + 1, "count is not an integer"))?;
            counts.insert(word.to_owned(), n);
        }
        Vocabulary::from_counts(counts, min_count)
    }
}

/// Counts tokens over title, description and every comment of every issue.
/// Counting is sharded across threads; the merge is exact, so the result
/// does not depend on the shard layout.
pub fn build_vocabulary(issues: &[Issue], min_count: u64) -> Result<Vocabulary> {
    issues
        .par_iter()
        .fold(TokenCounter::default, |mut counter, issue| {
            counter.add_issue(issue);
            counter
        })
        .reduce(TokenCounter::default, TokenCounter::merge)
        .finish(min_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn issue(title: &str, comments: &[&str]) -> Issue {
        Issue {
            id: "X-1".into(),
            priority: Priority::Major,
            title: title.into(),
            description: "desc".into(),
            comments: comments
                .iter()
                .map(|b| Comment {
                    ts: None,
                    body: (*b).into(),
                })
                .collect(),
        }
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Don't fix this ASAP!"), ["don", "t", "fix", "this", "asap"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("I'll retry in 5s"), ["i", "ll", "retry", "in", "s"]);
        assert_eq!(tokenize("foo_bar42baz"), ["foo", "bar", "baz"]);
    }

    #[test]
    fn parse_well_formed_record() {
        let line = r#"{"id":"X-1","priority":"Blocker","title":"Crash","description":"It fails","comments":[{"ts":"2015-01-01T00:00:00Z","body":"asap"},{"body":"done"}]}"#;
        let issues: Vec<_> = IssueStream::new(line.as_bytes()).collect();
        assert_eq!(
            issues,
            vec![Issue {
                id: "X-1".into(),
                priority: Priority::Blocker,
                title: "Crash".into(),
                description: "It fails".into(),
                comments: vec![
                    Comment {
                        ts: Some("2015-01-01T00:00:00Z".into()),
                        body: "asap".into()
                    },
                    Comment {
                        ts: None,
                        body: "done".into()
                    },
                ],
            }]
        );
    }

    #[test]
    fn priority_is_case_insensitive() {
        let line = r#"{"id":"X-2","priority":"blocker","title":"","description":""}"#;
        let issue = IssueStream::new(line.as_bytes()).next().unwrap();
        assert_eq!(issue.priority, Priority::Blocker);
        assert_eq!(Priority::parse("Showstopper"), Priority::Unknown);
        // Missing comments key is still a valid record.
        assert!(issue.comments.is_empty());
    }

    #[test]
    fn malformed_records_are_skipped_with_line_numbers() {
        let input = "{\"id\":\"A\",\"title\":\"ok\"}\nnot json\n\n{\"title\":\"no id\"}\n{\"id\":\"B\"}\n";
        let mut stream = IssueStream::new(input.as_bytes());
        let ids: Vec<_> = stream.by_ref().map(|i| i.id).collect();
        assert_eq!(ids, ["A", "B"]);
        let lines: Vec<_> = stream.skipped().iter().map(|s| s.line).collect();
        assert_eq!(lines, [2, 4]);
    }

    #[test]
    fn unreadable_file_is_fatal() {
        assert!(matches!(
            parse_corpus(Path::new("/nonexistent/corpus.jsonl")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn corpus_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let issues = vec![issue("Crash \"now\"", &["a", "b"]), issue("t", &[])];
        write_corpus(&path, &issues).unwrap();
        let parsed = parse_corpus(&path).unwrap();
        assert_eq!(parsed.issues, issues);
        assert!(parsed.skipped.is_empty());
    }

    #[test]
    fn units_three_comments() {
        let units = extract_units(&issue("t", &["one two", "three", "four five"]));
        assert_eq!(units.len(), 5);
        let all = units.iter().find(|u| u.field == Field::AllComments).unwrap();
        assert_eq!(all.tokens, ["one", "two", "three", "four", "five"]);
    }

    #[test]
    fn units_without_comments() {
        let units = extract_units(&issue("t", &[]));
        let fields: Vec<_> = units.iter().map(|u| u.field).collect();
        assert_eq!(fields, [Field::Title, Field::Description]);
    }

    #[test]
    fn units_single_comment() {
        let units = extract_units(&issue("t", &["only one"]));
        let get = |f| &units.iter().find(|u| u.field == f).unwrap().tokens;
        assert_eq!(get(Field::FirstComment), get(Field::LastComment));
        assert_eq!(get(Field::FirstComment), get(Field::AllComments));
    }

    #[test]
    fn vocabulary_counting_and_threshold() {
        let mut i = issue("a b b", &[]);
        i.description.clear();
        let vocab = build_vocabulary(std::slice::from_ref(&i), 1).unwrap();
        assert_eq!(vocab.count("b"), 2);
        assert_eq!(vocab.count("a"), 1);
        assert_eq!(vocab.id("b"), Some(0));
        let vocab = build_vocabulary(&[i], 2).unwrap();
        assert_eq!(vocab.len(), 1);
        assert!(!vocab.contains("a"));
    }

    #[test]
    fn vocabulary_ties_are_lexicographic() {
        let mut i = issue("zeta alpha mid", &[]);
        i.description.clear();
        let vocab = build_vocabulary(&[i], 1).unwrap();
        assert_eq!(vocab.words(), ["alpha", "mid", "zeta"]);
    }

    #[test]
    fn vocabulary_rejects_zero_min_count() {
        assert!(build_vocabulary(&[], 0).is_err());
    }

    #[test]
    fn vocabulary_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.tsv");
        let vocab = build_vocabulary(&[issue("x y y z z z", &["z q"])], 1).unwrap();
        vocab.save(&path).unwrap();
        assert_eq!(Vocabulary::load(&path).unwrap(), vocab);
    }

    proptest! {
        #[test]
        fn tokenizer_is_idempotent(text in "\\PC{0,80}") {
            let once = tokenize(&text);
            prop_assert_eq!(tokenize(&once.join(" ")), once.clone());
            for t in &once {
                prop_assert!(!t.is_empty());
                prop_assert!(t.chars().all(char::is_alphabetic));
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }

        #[test]
        fn vocabulary_mass_equals_token_count(
            titles in proptest::collection::vec("[a-d ,.']{0,30}", 1..8),
            shards in 1usize..4,
        ) {
            let issues: Vec<Issue> = titles.iter().enumerate().map(|(k, t)| Issue {
                id: k.to_string(),
                priority: Priority::Minor,
                title: t.clone(),
                description: String::new(),
                comments: vec![],
            }).collect();
            let total: usize = issues.iter().map(|i| tokenize(&i.title).len()).sum();
            let vocab = build_vocabulary(&issues, 1).unwrap();
            prop_assert_eq!(vocab.total_count(), total as u64);
            let ids: Vec<u32> = vocab.words().iter().map(|w| vocab.id(w).unwrap()).collect();
            prop_assert_eq!(ids, (0..vocab.len() as u32).collect::<Vec<_>>());

            // Manual sharding merges to the same vocabulary.
            let sharded = issues
                .chunks(issues.len().div_ceil(shards))
                .map(|chunk| {
                    let mut c = TokenCounter::default();
                    chunk.iter().for_each(|i| c.add_issue(i));
                    c
                })
                .fold(TokenCounter::default(), TokenCounter::merge)
                .finish(1)
                .unwrap();
            prop_assert_eq!(sharded, vocab);
        }

        #[test]
        fn extract_units_never_repeats_a_field(n in 0usize..5) {
            let comments: Vec<String> = (0..n).map(|k| format!("c{k}")).collect();
            let refs: Vec<&str> = comments.iter().map(String::as_str).collect();
            let i = issue("t", &refs);
            let units = extract_units(&i);
            let mut fields: Vec<_> = units.iter().map(|u| u.field).collect();
            fields.sort();
            fields.dedup();
            prop_assert_eq!(fields.len(), units.len());
            prop_assert_eq!(units, extract_units(&i));
        }
    }
}

//! Reader for the WordNet 3.x plain-text database (`index.*` / `data.*`) and
//! single-word synonym lookup.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartOfSpeech {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl PartOfSpeech {
    pub const ALL: [PartOfSpeech; 4] = [
        PartOfSpeech::Noun,
        PartOfSpeech::Verb,
        PartOfSpeech::Adjective,
        PartOfSpeech::Adverb,
    ];

    fn file_suffix(self) -> &'static str {
        match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adjective => "adj",
            PartOfSpeech::Adverb => "adv",
        }
    }

    fn tag(self) -> char {
        match self {
            PartOfSpeech::Noun => 'n',
            PartOfSpeech::Verb => 'v',
            PartOfSpeech::Adjective => 'a',
            PartOfSpeech::Adverb => 'r',
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "n" => Some(PartOfSpeech::Noun),
            "v" => Some(PartOfSpeech::Verb),
            "a" | "s" => Some(PartOfSpeech::Adjective),
            "r" => Some(PartOfSpeech::Adverb),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SynsetId {
    pub pos: PartOfSpeech,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma {
    pub text: String,
    /// Collocations such as `take_care` are kept but never offered as synonyms.
    pub multiword: bool,
}

/// Synsets and the reverse lemma index. Immutable once loaded.
#[derive(Debug, Clone, Default)]
pub struct SynsetDb {
    synsets: BTreeMap<SynsetId, Vec<Lemma>>,
    lemmas: BTreeMap<String, BTreeSet<SynsetId>>,
    warnings: Vec<String>,
}

impl SynsetDb {
    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn members(&self, id: SynsetId) -> &[Lemma] {
        self.synsets.get(&id).map_or(&[], Vec::as_slice)
    }

    pub fn synsets_of(&self, lemma: &str) -> impl Iterator<Item = SynsetId> + '_ {
        self.lemmas
            .get(&lemma.to_lowercase())
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.lemmas.contains_key(&lemma.to_lowercase())
    }

    /// Warnings collected while loading (malformed or dangling lines).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Single-word members of every synset of `word`, across all parts of
    /// speech, without `word` itself.
    pub fn synonyms(&self, word: &str) -> BTreeSet<String> {
        let word = word.to_lowercase();
        self.synsets_of(&word)
            .flat_map(|id| self.members(id))
            .filter(|l| !l.multiword && l.text != word)
            .map(|l| l.text.clone())
            .collect()
    }

    /// Builds a database in memory from (part of speech, members) groups.
    /// Offsets are sequence numbers, not file positions.
    pub fn from_synsets(synsets: &[(PartOfSpeech, Vec<String>)]) -> SynsetDb {
        let mut db = SynsetDb::default();
        for (k, (pos, members)) in synsets.iter().enumerate() {
            let lemmas = members
                .iter()
                .map(|m| Lemma {
                    text: m.to_lowercase(),
                    multiword: m.contains('_'),
                })
                .collect();
            db.insert(
                SynsetId {
                    pos: *pos,
                    offset: k as u64,
                },
                lemmas,
            );
        }
        db
    }

    fn insert(&mut self, id: SynsetId, members: Vec<Lemma>) {
        for m in &members {
            self.lemmas.entry(m.text.clone()).or_default().insert(id);
        }
        self.synsets.insert(id, members);
    }
}

/// Free function form of [`SynsetDb::synonyms`].
pub fn synonyms(db: &SynsetDb, word: &str) -> BTreeSet<String> {
    db.synonyms(word)
}

fn strip_marker(word: &str) -> &str {
    // Adjective position markers: `(a)`, `(p)`, `(ip)`.
    match word.find('(') {
        Some(k) if word.ends_with(')') => &word[..k],
        _ => word,
    }
}

fn parse_data_line(line: &str) -> std::result::Result<(u64, PartOfSpeech, Vec<Lemma>), String> {
    let mut fields = line.split_whitespace();
    let mut next = |what: &str| fields.next().ok_or_else(|| format!("missing {what}"));
    let offset: u64 = next("offset")?.parse().map_err(|_| "bad synset offset".to_string())?;
    next("lex_filenum")?;
    let pos = PartOfSpeech::from_tag(next("ss_type")?).ok_or("bad ss_type")?;
    let w_cnt = usize::from_str_radix(next("w_cnt")?, 16).map_err(|_| "bad w_cnt".to_string())?;
    let mut members = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        let raw = next("word")?;
        next("lex_id")?;
        let text = strip_marker(raw).to_lowercase();
        if text.is_empty() {
            return Err("empty lemma".into());
        }
        members.push(Lemma {
            multiword: text.contains('_'),
            text,
        });
    }
    Ok((offset, pos, members))
}

fn parse_index_line(line: &str) -> std::result::Result<(String, Vec<u64>), String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 4 {
        return Err("too few fields".into());
    }
    let lemma = fields[0].to_lowercase();
    let synset_cnt: usize = fields[2].parse().map_err(|_| "bad synset_cnt".to_string())?;
    let p_cnt: usize = fields[3].parse().map_err(|_| "bad p_cnt".to_string())?;
    let start = 4 + p_cnt + 2;
    if fields.len() < start + synset_cnt {
        return Err("fewer synset offsets than announced".into());
    }
    let offsets = fields[start..start + synset_cnt]
        .iter()
        .map(|f| f.parse::<u64>().map_err(|_| format!("bad offset {f:?}")))
        .collect::<std::result::Result<_, _>>()?;
    Ok((lemma, offsets))
}

fn is_header(line: &str) -> bool {
    line.starts_with("  ") || line.trim().is_empty()
}

/// Loads `index.{noun,verb,adj,adv}` and `data.{…}` from `dir`.
///
/// Malformed lines are skipped with a warning. Every index offset is checked
/// against the data files; dangling ones are reported as warnings.
pub fn load_wordnet(dir: &Path) -> Result<SynsetDb> {
    let mut db = SynsetDb::default();
    let mut texts = Vec::new();
    for pos in PartOfSpeech::ALL {
        let data_path = dir.join(format!("data.{}", pos.file_suffix()));
        let index_path = dir.join(format!("index.{}", pos.file_suffix()));
        let data = fs::read_to_string(&data_path).map_err(|e| Error::io(&data_path, e))?;
        let index = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
        texts.push((pos, data_path, data, index_path, index));
    }

    for (pos, path, data, _, _) in &texts {
        for (k, line) in data.lines().enumerate() {
            if is_header(line) {
                continue;
            }
            match parse_data_line(line) {
                Ok((offset, ss_pos, members)) if ss_pos == *pos => {
                    db.insert(SynsetId { pos: *pos, offset }, members);
                }
                Ok(_) => db.warn(format!("{}:{}: synset type does not match file", path.display(), k + 1)),
                Err(msg) => db.warn(format!("{}:{}: {msg}", path.display(), k + 1)),
            }
        }
    }

    for (pos, _, _, path, index) in &texts {
        for (k, line) in index.lines().enumerate() {
            if is_header(line) {
                continue;
            }
            match parse_index_line(line) {
                Ok((lemma, offsets)) => {
                    for offset in offsets {
                        let id = SynsetId { pos: *pos, offset };
                        if !db.synsets.contains_key(&id) {
                            db.warn(format!(
                                "{}:{}: {lemma:?} points at missing synset {offset:08}",
                                path.display(),
                                k + 1
                            ));
                        } else if !db.members(id).iter().any(|m| m.text == lemma) {
                            db.warn(format!(
                                "{}:{}: synset {offset:08} does not list {lemma:?}",
                                path.display(),
                                k + 1
                            ));
                        }
                    }
                }
                Err(msg) => db.warn(format!("{}:{}: {msg}", path.display(), k + 1)),
            }
        }
    }
    Ok(db)
}

impl SynsetDb {
    fn warn(&mut self, message: String) {
        log::warn!("wordnet: {message}");
        self.warnings.push(message);
    }
}

/// Writes a small database in WordNet file format with correct byte offsets.
/// Each synset is given as its part of speech and member lemmas.
pub fn write_wordnet(dir: &Path, synsets: &[(PartOfSpeech, Vec<String>)]) -> Result<()> {
    const HEADER: &str = "  1 WordNet-format lexical database written by arousal-core\n";
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for pos in PartOfSpeech::ALL {
        let mut data = String::from(HEADER);
        let mut index: BTreeMap<String, Vec<u64>> = BTreeMap::new();
        for (_, members) in synsets.iter().filter(|(p, _)| *p == pos) {
            let offset = data.len() as u64;
            write!(data, "{offset:08} 00 {} {:02x}", pos.tag(), members.len()).unwrap();
            for m in members {
                write!(data, " {m} 0").unwrap();
                index.entry(m.to_lowercase()).or_default().push(offset);
            }
            data.push_str(" 000 | \n");
        }
        let mut idx = String::from(HEADER);
        for (lemma, offsets) in &index {
            write!(idx, "{lemma} {} {} 0 {} 0", pos.tag(), offsets.len(), offsets.len()).unwrap();
            for o in offsets {
                write!(idx, " {o:08}").unwrap();
            }
            idx.push_str(" \n");
        }
        let data_path = dir.join(format!("data.{}", pos.file_suffix()));
        let index_path = dir.join(format!("index.{}", pos.file_suffix()));
        fs::write(&data_path, data).map_err(|e| Error::io(&data_path, e))?;
        fs::write(&index_path, idx).map_err(|e| Error::io(&index_path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| (*w).to_owned()).collect()
    }

    fn fixture() -> (tempfile::TempDir, SynsetDb) {
        let dir = tempfile::tempdir().unwrap();
        write_wordnet(
            dir.path(),
            &[
                (PartOfSpeech::Adjective, s(&["quick", "speedy", "fast"])),
                (PartOfSpeech::Verb, s(&["fast", "abstain", "go_without"])),
            ],
        )
        .unwrap();
        let db = load_wordnet(dir.path()).unwrap();
        (dir, db)
    }

    #[test]
    fn two_synset_fixture_is_bidirectional() {
        let (_dir, db) = fixture();
        assert_eq!(db.len(), 2);
        assert!(db.warnings().is_empty(), "{:?}", db.warnings());
        for id in db.synsets_of("fast").collect::<Vec<_>>() {
            assert!(db.members(id).iter().any(|m| m.text == "fast"));
        }
        assert_eq!(db.synsets_of("fast").count(), 2);
    }

    #[test]
    fn synonyms_cross_parts_of_speech_and_drop_collocations() {
        let (_dir, db) = fixture();
        assert_eq!(db.synonyms("quick"), ["fast", "speedy"].map(String::from).into());
        assert_eq!(
            synonyms(&db, "fast"),
            ["abstain", "quick", "speedy"].map(String::from).into()
        );
        assert!(db.contains("go_without"));
        assert!(db.synonyms("unknownword").is_empty());
    }

    #[test]
    fn singleton_synsets_give_no_synonyms() {
        let dir = tempfile::tempdir().unwrap();
        write_wordnet(dir.path(), &[(PartOfSpeech::Noun, s(&["alone"]))]).unwrap();
        assert!(load_wordnet(dir.path()).unwrap().synonyms("alone").is_empty());
    }

    #[test]
    fn empty_database() {
        let dir = tempfile::tempdir().unwrap();
        write_wordnet(dir.path(), &[]).unwrap();
        let db = load_wordnet(dir.path()).unwrap();
        assert!(db.is_empty());
        assert!(db.warnings().is_empty());
    }

    #[test]
    fn missing_file_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        write_wordnet(dir.path(), &[]).unwrap();
        fs::remove_file(dir.path().join("data.adv")).unwrap();
        assert!(matches!(load_wordnet(dir.path()), Err(Error::Io { .. })));
    }

    #[test]
    fn real_format_lines() {
        // Lines as they appear in the distributed WordNet 3.0 files.
        let data = "00976953 00 s 03 fast 0 quick(a) 0 speedy 0 001 & 00976508 a 0000 | acting or moving quickly";
        let (offset, pos, members) = parse_data_line(data).unwrap();
        assert_eq!((offset, pos), (976953, PartOfSpeech::Adjective));
        let texts: Vec<_> = members.iter().map(|m| m.text.as_str()).collect();
        assert_eq!(texts, ["fast", "quick", "speedy"]);

        let index = "fast a 10 4 ! & ^ = 10 6 00976508 00976953 00977301 00977618 00978006 00978199 00978297 00978436 00978583 00978754";
        let (lemma, offsets) = parse_index_line(index).unwrap();
        assert_eq!(lemma, "fast");
        assert_eq!(offsets.len(), 10);
        assert_eq!(offsets[1], 976953);
    }

    #[test]
    fn malformed_lines_are_skipped_with_warning() {
        let (dir, _) = fixture();
        let path = dir.path().join("data.noun");
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("garbage line here\n");
        fs::write(&path, text).unwrap();
        let db = load_wordnet(dir.path()).unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(db.warnings().len(), 1);
    }

    #[test]
    fn distributed_wordnet_if_available() {
        // Set WORDNET_DICT to a WordNet 3.0 `dict/` directory to run.
        let Some(dir) = std::env::var_os("WORDNET_DICT") else {
            eprintln!("SKIP: WORDNET_DICT not set");
            return;
        };
        let db = load_wordnet(Path::new(&dir)).unwrap();
        assert!(db.synsets_of("fast").any(|id| id.pos == PartOfSpeech::Adjective));
        assert!(db.synonyms("quick").contains("fast"));
    }

    proptest! {
        #[test]
        fn synonymy_is_symmetric(
            groups in proptest::collection::vec(
                proptest::collection::btree_set("[a-f]{1,2}(_[a-f])?", 1..5), 0..6)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let synsets: Vec<_> = groups
                .iter()
                .enumerate()
                .map(|(k, g)| (PartOfSpeech::ALL[k % 4], g.iter().cloned().collect::<Vec<_>>()))
                .collect();
            write_wordnet(dir.path(), &synsets).unwrap();
            let db = load_wordnet(dir.path()).unwrap();
            prop_assert!(db.warnings().is_empty());
            for g in &groups {
                for w1 in g {
                    for w2 in db.synonyms(w1) {
                        prop_assert!(w2 != *w1 && !w2.contains('_'));
                        prop_assert_eq!(w2.to_lowercase(), w2.clone());
                        prop_assert!(db.synonyms(&w2).contains(w1) || w1.contains('_'));
                    }
                }
            }
        }
    }
}

//! Browser bindings. Every export takes plain strings and numbers and
//! returns a JSON document; failures come back as `{"error": "..."}` so the
//! page never has to catch a thrown exception.

use std::collections::BTreeMap;

use arousal_core::corpus::{tokenize, Field, Priority};
use arousal_core::embedding::{GloveConfig, TrainMode};
use arousal_core::evalstats::{render_tables, PAIRS};
use arousal_core::lexicon::agreement::CATEGORIES;
use arousal_core::lexicon::{aggregate_ratings, rater_agreement, RatingRecord, Weighting};
use arousal_core::scoring::{combined_score, score_text, Mode, ScoringLexicon, TextScore};
use arousal_core::synth::{generate, rate_words, run_planted_pipeline, PlantedConfig, SynthConfig, SyntheticRater};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

type Outcome = Result<Value, String>;

fn respond(out: Outcome) -> String {
    out.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

fn fmt_lexicon(pairs: impl Iterator<Item = (String, f64)>) -> String {
    pairs.map(|(w, a)| format!("{w},{a:.2}\n")).collect()
}

/// `word,arousal` per line; blank lines and `#` comments are skipped.
pub fn parse_lexicon(text: &str) -> Result<ScoringLexicon, String> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (w, a) = line
            .split_once([',', '\t'])
            .ok_or_else(|| format!("line {}: expected word,arousal", n + 1))?;
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| format!("line {}: {:?} is not a number", n + 1, a.trim()))?;
        if !(1.0..=9.0).contains(&a) {
            return Err(format!("line {}: arousal {a} outside 1..9", n + 1));
        }
        pairs.push((w.trim().to_lowercase(), a));
    }
    ScoringLexicon::from_pairs(pairs).map_err(|e| e.to_string())
}

/// Starter lexicons built from the synthetic corpus: its general norms, and
/// a domain lexicon of the planted words as rated by two simulated raters.
pub fn default_lexicons_value() -> Value {
    let data = generate(&SynthConfig {
        issues_per_priority: 1,
        unknown_issues: 0,
        ..SynthConfig::default()
    });
    let general = fmt_lexicon(data.general.iter().map(|(w, e)| (w.to_owned(), e.arousal)));
    let words: Vec<String> = data
        .truth
        .iter()
        .filter(|(_, &a)| (a - 5.0).abs() > 1.5)
        .map(|(w, _)| w.clone())
        .collect();
    let ratings = rate_words(&words, &SyntheticRater::pair(), &data.truth);
    let sea = aggregate_ratings(&ratings, &Default::default());
    json!({
        "general": general,
        "sea": fmt_lexicon(sea.iter().map(|(w, e)| (w.to_owned(), e.arousal))),
    })
}

fn score_json(s: Option<TextScore>) -> Value {
    match s {
        Some(s) => json!({ "score": s.score, "max": s.max, "min": s.min, "matched": s.n_matched }),
        None => Value::Null,
    }
}

/// Scores one text in all three modes. `sea_avg` is a number or empty for
/// twice the domain lexicon mean.
pub fn score_value(text: &str, general: &str, sea: &str, sea_avg: &str) -> Outcome {
    let general = parse_lexicon(general).map_err(|e| format!("general lexicon: {e}"))?;
    let sea = parse_lexicon(sea).map_err(|e| format!("domain lexicon: {e}"))?;
    let sea_avg = match sea_avg.trim() {
        "" => 2.0 * sea.avg(),
        s => s.parse().map_err(|_| format!("sea_avg {s:?} is not a number"))?,
    };
    let tokens = tokenize(text);
    let per_token: Vec<Value> = tokens
        .iter()
        .map(|t| json!({ "token": t, "general": general.arousal(t), "sea": sea.arousal(t) }))
        .collect();
    Ok(json!({
        "tokens": per_token,
        "general_avg": general.avg(),
        "sea_avg_lexicon": sea.avg(),
        "sea_avg": sea_avg,
        "general": score_json(score_text(&tokens, &general)),
        "sea": score_json(score_text(&tokens, &sea)),
        "combined": score_json(combined_score(&tokens, &general, &sea, sea_avg)),
    }))
}

/// Parses one `a b` or `a,b` (optionally `word,a,b`) rating pair per line.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, u8, u8)>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c == '\t' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.is_empty() {
            continue;
        }
        let (word, a, b) = match fields.as_slice() {
            [a, b] => (format!("item{:04}", n + 1), *a, *b),
            [w, a, b] => ((*w).to_owned(), *a, *b),
            _ => return Err(format!("line {}: expected two ratings", n + 1)),
        };
        let parse = |s: &str| match s.parse::<u8>() {
            Ok(v @ 1..=9) => Ok(v),
            _ => Err(format!("line {}: {s:?} is not a rating from 1 to 9", n + 1)),
        };
        out.push((word, parse(a)?, parse(b)?));
    }
    Ok(out)
}

/// Agreement statistics and the 9×9 confusion matrix for pasted ratings.
pub fn agreement_value(pairs: &str, weighting: &str) -> Outcome {
    let weighting: Weighting = weighting
        .parse()
        .map_err(|e: arousal_core::error::Error| e.to_string())?;
    let pairs = parse_pairs(pairs)?;
    let mut records = Vec::with_capacity(2 * pairs.len());
    let mut confusion = vec![vec![0u32; CATEGORIES]; CATEGORIES];
    let mut seen = std::collections::BTreeSet::new();
    for (word, a, b) in &pairs {
        if !seen.insert(word.clone()) {
            return Err(format!("item {word:?} appears twice"));
        }
        confusion[usize::from(*a) - 1][usize::from(*b) - 1] += 1;
        for (rater, score) in [("rater 1", *a), ("rater 2", *b)] {
            records.push(RatingRecord {
                word: word.clone(),
                rater: rater.to_owned(),
                score,
            });
        }
    }
    let report = rater_agreement(&records, weighting).map_err(|e| e.to_string())?;
    Ok(json!({
        "report": report,
        "text": report.render(),
        "confusion": confusion,
    }))
}

/// Runs the whole pipeline on a synthetic corpus whose planted signal is
/// scaled by `strength` (0 removes it, 1 is the default, 2 doubles the
/// spread between priorities). Small embeddings keep it interactive.
pub fn planted_value(strength: f64, issues_per_priority: u32, seed: u32) -> Outcome {
    if !(0.0..=2.0).contains(&strength) {
        return Err("strength must lie in [0, 2]".into());
    }
    if !(20..=400).contains(&issues_per_priority) {
        return Err("issues per priority must lie in [20, 400]".into());
    }
    let base = SynthConfig::default();
    let scale = |p: [f64; 5]| {
        let mid = p.iter().sum::<f64>() / 5.0;
        p.map(|v| (mid + strength * (v - mid)).clamp(0.0, 1.0))
    };
    let cfg = PlantedConfig {
        synth: SynthConfig {
            issues_per_priority: issues_per_priority as usize,
            seed: u64::from(seed),
            high_prob: scale(base.high_prob),
            low_prob: scale(base.low_prob),
            ..base
        },
        glove: GloveConfig {
            dim: 16,
            epochs: 10,
            mode: TrainMode::Deterministic,
            ..GloveConfig::default()
        },
        ..PlantedConfig::default()
    };
    let run = run_planted_pipeline(&cfg).map_err(|e| e.to_string())?;
    let mut d: BTreeMap<String, BTreeMap<String, Vec<Option<f64>>>> = BTreeMap::new();
    for field in Field::ALL {
        for mode in Mode::ALL {
            let row = (0..PAIRS.len()).map(|i| run.d(field, mode, i)).collect();
            d.entry(field.to_string()).or_default().insert(mode.to_string(), row);
        }
    }
    let counts: Vec<usize> = Priority::RANKED
        .iter()
        .map(|p| run.data.issues.iter().filter(|i| i.priority == *p).count())
        .collect();
    Ok(json!({
        "pairs": PAIRS.iter().map(|p| p.label()).collect::<Vec<_>>(),
        "d": d,
        "issues_per_priority": counts,
        "high_prob": cfg.synth.high_prob,
        "sea_words": run.sea.len(),
        "kappa": run.agreement.kappa,
        "tables": render_tables(&run.table).display,
    }))
}

#[wasm_bindgen]
pub fn default_lexicons() -> String {
    default_lexicons_value().to_string()
}

#[wasm_bindgen]
pub fn score(text: &str, general: &str, sea: &str, sea_avg: &str) -> String {
    respond(score_value(text, general, sea, sea_avg))
}

#[wasm_bindgen]
pub fn agreement(pairs: &str, weighting: &str) -> String {
    respond(agreement_value(pairs, weighting))
}

#[wasm_bindgen]
pub fn planted(strength: f64, issues_per_priority: u32, seed: u32) -> String {
    respond(planted_value(strength, issues_per_priority, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_formats() {
        let p = parse_pairs("3 4\n\nw,9,1\n2\t2\n").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[0], ("item0001".to_owned(), 3, 4));
        assert_eq!(p[1], ("w".to_owned(), 9, 1));
        assert!(parse_pairs("0 3").is_err());
        assert!(parse_pairs("1 2 3 4").is_err());
    }

    #[test]
    fn lexicon_lines() {
        let lex = parse_lexicon("# header\nUrgent, 8\ncalm\t2\n").unwrap();
        assert_eq!(lex.arousal("urgent"), Some(8.0));
        assert_eq!(lex.avg(), 5.0);
        assert!(parse_lexicon("").is_err());
        assert!(parse_lexicon("x,nan").is_err());
    }

    #[test]
    fn default_lexicons_parse() {
        let v = default_lexicons_value();
        let sea = parse_lexicon(v["sea"].as_str().unwrap()).unwrap();
        assert!(sea.arousal("urgent").unwrap() > 6.0);
        assert!(parse_lexicon(v["general"].as_str().unwrap()).unwrap().len() > 50);
    }
}

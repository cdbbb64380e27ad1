use std::collections::HashMap;

use rayon::prelude::*;

use crate::corpus::{tokenize, Issue, Vocabulary};
use crate::error::{Error, Result};

/// Widest supported window. Weights are accumulated as exact integer
/// multiples of 1/lcm(1..=window), and the lcm must leave headroom in a u128.
pub const MAX_WINDOW: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoocEntry {
    pub row: u32,
    pub col: u32,
    pub weight: f64,
}

/// Symmetric sparse co-occurrence matrix with strictly positive entries,
/// sorted by (row, col).
#[derive(Debug, Clone, PartialEq)]
pub struct CoocMatrix {
    entries: Vec<CoocEntry>,
    vocab_size: usize,
    window: usize,
}

impl CoocMatrix {
    /// Builds a matrix from explicit entries. Both (i, j) and (j, i) must be
    /// present with the same weight.
    pub fn from_entries(vocab_size: usize, window: usize, mut entries: Vec<CoocEntry>) -> Result<Self> {
        entries.sort_by_key(|e| (e.row, e.col));
        for pair in entries.windows(2) {
            if (pair[0].row, pair[0].col) == (pair[1].row, pair[1].col) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate co-occurrence entry ({}, {})",
                    pair[0].row, pair[0].col
                )));
            }
        }
        let matrix = CoocMatrix {
            entries,
            vocab_size,
            window,
        };
        for e in &matrix.entries {
            if e.row as usize >= vocab_size || e.col as usize >= vocab_size {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({}, {}) outside a vocabulary of {vocab_size}",
                    e.row, e.col
                )));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "co-occurrence weight must be positive, got {}",
                    e.weight
                )));
            }
            if matrix.get(e.col, e.row) != e.weight {
                return Err(Error::InvalidConfig(format!(
                    "co-occurrence matrix is not symmetric at ({}, {})",
                    e.row, e.col
                )));
            }
        }
        Ok(matrix)
    }

    pub fn entries(&self) -> &[CoocEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn get(&self, row: u32, col: u32) -> f64 {
        self.entries
            .binary_search_by_key(&(row, col), |e| (e.row, e.col))
            .map_or(0.0, |k| self.entries[k].weight)
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }
}

fn lcm_upto(window: usize) -> u128 {
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=window as u128).fold(1, |acc, d| acc / gcd(acc, d) * d)
}

/// Accumulates harmonic window weights for one shard of text units.
#[derive(Debug, Clone)]
pub struct CoocCounter {
    window: usize,
    scale: u128,
    ticks: HashMap<(u32, u32), u128>,
}

impl CoocCounter {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 || window > MAX_WINDOW {
            return Err(Error::InvalidConfig(format!(
                "window must be in 1..={MAX_WINDOW}, got {window}"
            )));
        }
        Ok(CoocCounter {
            window,
            scale: lcm_upto(window),
            ticks: HashMap::new(),
        })
    }

    /// Adds one text unit. `ids` holds the vocabulary id of each token, `None`
    /// for out-of-vocabulary tokens, which still occupy a position.
    pub fn add_unit(&mut self, ids: &[Option<u32>]) {
        for (pos, left) in ids.iter().enumerate() {
            let Some(left) = *left else { continue };
            let end = (pos + self.window).min(ids.len() - 1);
            for (dist, right) in (1..).zip(&ids[pos + 1..=end]) {
                let Some(right) = *right else { continue };
                let w = self.scale / dist as u128;
                *self.ticks.entry((left, right)).or_insert(0) += w;
                *self.ticks.entry((right, left)).or_insert(0) += w;
            }
        }
    }

    pub fn add_tokens<S: AsRef<str>>(&mut self, tokens: &[S], vocab: &Vocabulary) {
        let ids: Vec<Option<u32>> = tokens.iter().map(|t| vocab.id(t.as_ref())).collect();
        self.add_unit(&ids);
    }

    pub fn merge(mut self, other: CoocCounter) -> CoocCounter {
        debug_assert_eq!(self.window, other.window);
        if self.ticks.len() < other.ticks.len() {
            return other.merge(self);
        }
        for (k, v) in other.ticks {
            *self.ticks.entry(k).or_insert(0) += v;
        }
        self
    }

    pub fn finish(self, vocab_size: usize) -> CoocMatrix {
        let scale = self.scale as f64;
        let mut entries: Vec<CoocEntry> = self
            .ticks
            .into_iter()
            .map(|((row, col), t)| CoocEntry {
                row,
                col,
                weight: t as f64 / scale,
            })
            .collect();
        entries.sort_by_key(|e| (e.row, e.col));
        CoocMatrix {
            entries,
            vocab_size,
            window: self.window,
        }
    }
}

/// Counts co-occurrences over independent text units. Each pair of
/// in-vocabulary tokens at distance `d <= window` inside a unit adds `1/d` to
/// both (i, j) and (j, i). Units never share a window.
///
/// Weights are summed exactly, so the result is independent of unit order and
/// of how the work is split across threads.
pub fn count_cooccurrences<S>(units: &[Vec<S>], vocab: &Vocabulary, window: usize) -> Result<CoocMatrix>
where
    S: AsRef<str> + Sync,
{
    let empty = CoocCounter::new(window)?;
    let counter = units
        .par_iter()
        .fold(
            || empty.clone(),
            |mut c, unit| {
                c.add_tokens(unit, vocab);
                c
            },
        )
        .reduce(|| empty.clone(), CoocCounter::merge);
    Ok(counter.finish(vocab.len()))
}

/// Same as [`count_cooccurrences`] with the title, description and each
/// comment of every issue as separate units.
pub fn count_issue_cooccurrences(issues: &[Issue], vocab: &Vocabulary, window: usize) -> Result<CoocMatrix> {
    let empty = CoocCounter::new(window)?;
    let counter = issues
        .par_iter()
        .fold(
            || empty.clone(),
            |mut c, issue| {
                for text in issue.raw_texts() {
                    c.add_tokens(&tokenize(text), vocab);
                }
                c
            },
        )
        .reduce(|| empty.clone(), CoocCounter::merge);
    Ok(counter.finish(vocab.len()))
}

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

fn cosine_with_norms(u: &[f64], v: &[f64], nu: f64, nv: f64) -> f64 {
    (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0)
}

/// `u·v / (‖u‖‖v‖)`, clamped to [−1, 1].
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(cosine_with_norms(u, v, nu, nv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub similarity: f64,
}

/// Neighbors of `query` by descending cosine similarity, ties broken by word.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub query: String,
    pub neighbors: Vec<Neighbor>,
}

/// Read-only word vectors (the `W + W̃` sums of a trained model, or a loaded
/// dump) with cached norms for neighbor queries.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    words: Vec<String>,
    index: HashMap<String, u32>,
    dim: usize,
    data: Vec<f64>,
    norms: Vec<f64>,
}

impl WordVectors {
    pub fn new(words: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != words.len() * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} words × {dim} dimensions",
                data.len(),
                words.len()
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::InvalidConfig(format!("word {w:?} appears twice in the vectors")));
            }
        }
        let norms = if dim == 0 {
            vec![0.0; words.len()]
        } else {
            data.chunks(dim).map(norm).collect()
        };
        Ok(WordVectors {
            words,
            index,
            dim,
            data,
            norms,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        let id = *self.index.get(word)? as usize;
        Some(&self.data[id * self.dim..(id + 1) * self.dim])
    }

    /// The `k` words most cosine-similar to `word`, excluding `word` itself.
    /// Words with an all-zero vector are never returned.
    pub fn nearest_neighbors(&self, word: &str, k: usize) -> Result<NeighborList> {
        let qid = *self
            .index
            .get(word)
            .ok_or_else(|| Error::UnknownWord(word.to_owned()))? as usize;
        let q = &self.data[qid * self.dim..(qid + 1) * self.dim];
        let nq = self.norms[qid];
        if nq == 0.0 {
            return Err(Error::ZeroVector);
        }
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .into_par_iter()
            .filter(|&c| c != qid && self.norms[c] > 0.0)
            .map(|c| {
                let v = &self.data[c * self.dim..(c + 1) * self.dim];
                (cosine_with_norms(q, v, nq, self.norms[c]), c)
            })
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| {
            b.0.total_cmp(&a.0).then_with(|| self.words[a.1].cmp(&self.words[b.1]))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k, order);
            scored.truncate(k);
        }
        scored.sort_by(order);
        Ok(NeighborList {
            query: word.to_owned(),
            neighbors: scored
                .into_iter()
                .map(|(similarity, c)| Neighbor {
                    word: self.words[c].clone(),
                    similarity,
                })
                .collect(),
        })
    }

    /// Text dump: first line `|V| d`, then `word v1 … vd` per word.
    /// Values use the shortest representation that parses back exactly.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "{} {}", self.len(), self.dim).map_err(io)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(out, "{word}").map_err(io)?;
            for v in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(out, " {v}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::malformed(path, 1, "empty embedding file"))?
            .map_err(|e| Error::io(path, e))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::malformed(path, 1, "header must be `<words> <dim>`"))?;
        let [n, dim] = dims[..] else {
            return Err(Error::malformed(path, 1, "header must be `<words> <dim>`"));
        };
        let mut words = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        for (k, line) in lines.enumerate() {
            let line_no = k + 2;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default();
            let before = data.len();
            for p in parts {
                let v: f64 = p
                    .parse()
                    .map_err(|_| Error::malformed(path, line_no, format!("bad value {p:?}")))?;
                data.push(v);
            }
            if data.len() - before != dim {
                return Err(Error::malformed(
                    path,
                    line_no,
                    format!("expected {dim} values, found {}", data.len() - before),
                ));
            }
            words.push(word.to_owned());
        }
        if words.len() != n {
            return Err(Error::malformed(
                path,
                1,
                format!("header announces {n} words, file has {}", words.len()),
            ));
        }
        WordVectors::new(words, dim, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vectors(rows: &[(&str, &[f64])]) -> WordVectors {
        let dim = rows[0].1.len();
        WordVectors::new(
            rows.iter().map(|r| r.0.to_owned()).collect(),
            dim,
            rows.iter().flat_map(|r| r.1.iter().copied()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn cosine_basics() {
        let u = [1.0, 2.0, -3.0];
        assert!((cosine_similarity(&u, &u).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 5.0]).unwrap(), 0.0);
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        assert!((cosine_similarity(&u, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(cosine_similarity(&u, &[0.0; 3]), Err(Error::ZeroVector)));
        assert!(cosine_similarity(&u, &[1.0]).is_err());
    }

    #[test]
    fn exhaustive_neighbors_are_sorted() {
        let wv = vectors(&[
            ("a", &[1.0, 0.0]),
            ("b", &[0.9, 0.1]),
            ("c", &[0.0, 1.0]),
            ("d", &[-1.0, 0.2]),
        ]);
        let list = wv.nearest_neighbors("a", 3).unwrap();
        let words: Vec<_> = list.neighbors.iter().map(|n| n.word.as_str()).collect();
        assert_eq!(words, ["b", "c", "d"]);
        assert_eq!(wv.nearest_neighbors("a", 10).unwrap().neighbors.len(), 3);
    }

    #[test]
    fn duplicate_vectors_tie_break_by_word() {
        let wv = vectors(&[
            ("q", &[1.0, 1.0]),
            ("zz", &[2.0, 1.0]),
            ("aa", &[2.0, 1.0]),
            ("mm", &[2.0, 1.0]),
        ]);
        let list = wv.nearest_neighbors("q", 2).unwrap();
        let words: Vec<_> = list.neighbors.iter().map(|n| n.word.as_str()).collect();
        assert_eq!(words, ["aa", "mm"]);
    }

    #[test]
    fn unknown_word_is_named() {
        let wv = vectors(&[("a", &[1.0])]);
        match wv.nearest_neighbors("nope", 1) {
            Err(Error::UnknownWord(w)) => assert_eq!(w, "nope"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.txt");
        let wv = vectors(&[("a", &[0.1, -2.5e-9]), ("b", &[1.0 / 3.0, 7.0])]);
        wv.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("2 2\na 0.1 -0.0000000025\n"));
        assert_eq!(WordVectors::load(&path).unwrap(), wv);
    }

    #[test]
    fn dump_rejects_short_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.txt");
        std::fs::write(&path, "1 3\na 1 2\n").unwrap();
        assert!(matches!(
            WordVectors::load(&path),
            Err(Error::Malformed { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn cosine_is_scale_invariant(
            u in proptest::collection::vec(-10.0f64..10.0, 6),
            v in proptest::collection::vec(-10.0f64..10.0, 6),
            a in 0.01f64..100.0,
            b in 0.01f64..100.0,
        ) {
            prop_assume!(norm(&u) > 1e-3 && norm(&v) > 1e-3);
            let base = cosine_similarity(&u, &v).unwrap();
            let su: Vec<f64> = u.iter().map(|x| a * x).collect();
            let sv: Vec<f64> = v.iter().map(|x| b * x).collect();
            prop_assert!((cosine_similarity(&su, &sv).unwrap() - base).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(&base));
        }

        #[test]
        fn neighbor_lists_exclude_query_and_are_sorted(
            data in proptest::collection::vec(-1.0f64..1.0, 30),
            k in 1usize..12,
        ) {
            let words: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
            let wv = WordVectors::new(words, 3, data).unwrap();
            prop_assume!(wv.norms[0] > 0.0);
            let list = wv.nearest_neighbors("w0", k).unwrap();
            prop_assert!(list.neighbors.iter().all(|n| n.word != "w0"));
            for pair in list.neighbors.windows(2) {
                prop_assert!(pair[0].similarity >= pair[1].similarity);
            }
        }
    }
}

//! Dense embedding tables: a GloVe-style text loader for word vectors, a
//! multi-prototype character table, cosine similarity, and exact top-K
//! neighbor search with deterministic tie-breaking.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: duplicate word {word:?}")]
    DuplicateWord { line: usize, word: String },
    #[error("line {line}: duplicate prototype {proto} for character {ch:?}")]
    DuplicatePrototype { line: usize, ch: char, proto: u32 },
    #[error("line {line}: prototype index {proto} outside 1..={max}")]
    PrototypeOutOfRange { line: usize, proto: u32, max: u32 },
    #[error("line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("all-zero vector{}", context_suffix(.0))]
    ZeroVector(Option<usize>),
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("embedding table is empty")]
    EmptyTable,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn context_suffix(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(" at line {n}"),
        None => String::new(),
    }
}

/// Dense word vectors of a fixed dimension, keyed by word string.
#[derive(Debug, Clone)]
pub struct WordEmbeddings {
    dim: usize,
    words: Vec<String>,
    data: Vec<f64>,
    norms: Vec<f64>,
    index: HashMap<String, u32>,
}

impl WordEmbeddings {
    /// Loads `word v1 ... v_dim` lines, whitespace-separated, no header.
    pub fn from_path(path: &Path, dim: usize) -> Result<Self, EmbeddingError> {
        let mut text = String::new();
        BufReader::new(File::open(path)?).read_to_string(&mut text)?;
        Self::parse(&text, dim)
    }

    pub fn parse(text: &str, dim: usize) -> Result<Self, EmbeddingError> {
        let mut words = Vec::new();
        let mut data = Vec::new();
        let mut norms = Vec::new();
        let mut index = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let word = tokens.next().expect("non-empty line has a token");
            let values: Vec<&str> = tokens.collect();
            if values.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    line: lineno,
                    expected: dim,
                    found: values.len(),
                });
            }
            if index.contains_key(word) {
                return Err(EmbeddingError::DuplicateWord {
                    line: lineno,
                    word: word.to_string(),
                });
            }
            let start = data.len();
            for v in values {
                let x: f64 = v.parse().map_err(|_| EmbeddingError::MalformedLine {
                    line: lineno,
                    msg: format!("bad number {v:?}"),
                })?;
                if !x.is_finite() {
                    return Err(EmbeddingError::MalformedLine {
                        line: lineno,
                        msg: format!("non-finite component {v:?}"),
                    });
                }
                data.push(x);
            }
            let norm = l2_norm(&data[start..]);
            if norm == 0.0 {
                return Err(EmbeddingError::ZeroVector(Some(lineno)));
            }
            norms.push(norm);
            index.insert(word.to_string(), words.len() as u32);
            words.push(word.to_string());
        }
        Ok(WordEmbeddings {
            dim,
            words,
            data,
            norms,
            index,
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

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vector(i as usize))
    }

    pub fn vector(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn norm(&self, row: usize) -> f64 {
        self.norms[row]
    }

    pub fn word(&self, row: usize) -> &str {
        &self.words[row]
    }

    pub fn row_of(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    /// Writes the table back in load order; components print in shortest
    /// round-trip form, so load-then-write preserves every value.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (row, word) in self.words.iter().enumerate() {
            write!(out, "{word}")?;
            for v in self.vector(row) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Exact top-`k` cosine neighbors of `query` over the whole table,
    /// minus `exclude`; ties broken by lexicographic word order.
    pub fn nearest_words(
        &self,
        query: &[f64],
        k: usize,
        exclude: &HashSet<String>,
    ) -> Result<NeighborList, EmbeddingError> {
        if self.is_empty() {
            return Err(EmbeddingError::EmptyTable);
        }
        if query.len() != self.dim {
            return Err(EmbeddingError::LengthMismatch(query.len(), self.dim));
        }
        let query_norm = l2_norm(query);
        if query_norm == 0.0 {
            return Err(EmbeddingError::ZeroVector(None));
        }
        let candidates = (0..self.len()).filter(|&row| !exclude.contains(&self.words[row]));
        let ranked = top_k_by_cosine(
            candidates.map(|row| (row, self.words[row].as_str(), self.vector(row), self.norms[row])),
            query,
            query_norm,
            k,
        );
        Ok(NeighborList {
            neighbors: ranked
                .into_iter()
                .enumerate()
                .map(|(i, (row, similarity))| Neighbor {
                    word: self.words[row].clone(),
                    similarity,
                    rank: (i + 1) as u32,
                })
                .collect(),
        })
    }
}

/// Selects the top-`k` items by cosine against `query`, descending, with
/// ties broken by the item's label in ascending order. Returns
/// `(item id, cosine)` pairs in rank order.
pub(crate) fn top_k_by_cosine<'a, T: Copy>(
    items: impl Iterator<Item = (T, &'a str, &'a [f64], f64)>,
    query: &[f64],
    query_norm: f64,
    k: usize,
) -> Vec<(T, f64)> {
    let mut scored: Vec<(T, &str, f64)> = items
        .map(|(id, label, vector, norm)| {
            (id, label, dot(query, vector) / (query_norm * norm))
        })
        .collect();
    scored.sort_unstable_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.1.cmp(b.1)));
    scored.truncate(k);
    scored.into_iter().map(|(id, _, cos)| (id, cos)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub similarity: f64,
    pub rank: u32,
}

/// Cosine neighbors in descending similarity order, ranks starting at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub neighbors: Vec<Neighbor>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Multi-prototype character vectors: up to `n_prototypes` vectors per
/// character, indexed 1-based as in the input file.
#[derive(Debug, Clone)]
pub struct CharEmbeddings {
    dim: usize,
    n_prototypes: u32,
    map: BTreeMap<char, Vec<(u32, Vec<f64>)>>,
}

impl CharEmbeddings {
    /// Loads `char proto_index v1 ... v_dim` lines.
    pub fn from_path(path: &Path, dim: usize, n_prototypes: u32) -> Result<Self, EmbeddingError> {
        let mut text = String::new();
        BufReader::new(File::open(path)?).read_to_string(&mut text)?;
        Self::parse(&text, dim, n_prototypes)
    }

    pub fn parse(text: &str, dim: usize, n_prototypes: u32) -> Result<Self, EmbeddingError> {
        let mut map: BTreeMap<char, Vec<(u32, Vec<f64>)>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let ch_token = tokens.next().expect("non-empty line has a token");
            let mut chars = ch_token.chars();
            let ch = chars.next().expect("token is non-empty");
            if chars.next().is_some() {
                return Err(EmbeddingError::MalformedLine {
                    line: lineno,
                    msg: format!("expected a single character, found {ch_token:?}"),
                });
            }
            let proto: u32 = tokens
                .next()
                .ok_or_else(|| EmbeddingError::MalformedLine {
                    line: lineno,
                    msg: "missing prototype index".into(),
                })?
                .parse()
                .map_err(|_| EmbeddingError::MalformedLine {
                    line: lineno,
                    msg: "bad prototype index".into(),
                })?;
            if proto < 1 || proto > n_prototypes {
                return Err(EmbeddingError::PrototypeOutOfRange {
                    line: lineno,
                    proto,
                    max: n_prototypes,
                });
            }
            let values: Vec<&str> = tokens.collect();
            if values.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    line: lineno,
                    expected: dim,
                    found: values.len(),
                });
            }
            let mut vector = Vec::with_capacity(dim);
            for v in values {
                let x: f64 = v.parse().map_err(|_| EmbeddingError::MalformedLine {
                    line: lineno,
                    msg: format!("bad number {v:?}"),
                })?;
                if !x.is_finite() {
                    return Err(EmbeddingError::MalformedLine {
                        line: lineno,
                        msg: format!("non-finite component {v:?}"),
                    });
                }
                vector.push(x);
            }
            if l2_norm(&vector) == 0.0 {
                return Err(EmbeddingError::ZeroVector(Some(lineno)));
            }
            let protos = map.entry(ch).or_default();
            if protos.iter().any(|(r, _)| *r == proto) {
                return Err(EmbeddingError::DuplicatePrototype {
                    line: lineno,
                    ch,
                    proto,
                });
            }
            protos.push((proto, vector));
        }
        for protos in map.values_mut() {
            protos.sort_by_key(|(r, _)| *r);
        }
        Ok(CharEmbeddings {
            dim,
            n_prototypes,
            map,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_prototypes(&self) -> u32 {
        self.n_prototypes
    }

    pub fn char_count(&self) -> usize {
        self.map.len()
    }

    /// Prototypes of `c` sorted by prototype index, or None if the
    /// character is not in the table.
    pub fn prototypes(&self, c: char) -> Option<&[(u32, Vec<f64>)]> {
        self.map.get(&c).map(Vec::as_slice)
    }

    pub fn contains(&self, c: char) -> bool {
        self.map.contains_key(&c)
    }

    /// Characters in the table, in sorted order.
    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.map.keys().copied()
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (ch, protos) in &self.map {
            for (r, vector) in protos {
                write!(out, "{ch} {r}")?;
                for v in vector {
                    write!(out, " {v}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Standard cosine similarity. Errors on length mismatch or an all-zero
/// input.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::LengthMismatch(u.len(), v.len()));
    }
    let nu = l2_norm(u);
    let nv = l2_norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbeddingError::ZeroVector(None));
    }
    Ok(dot(u, v) / (nu * nv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_word_embeddings() {
        let e = WordEmbeddings::parse("的 0.1 0.2\n猫 -1 2\n", 2).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.get("的"), Some(&[0.1, 0.2][..]));
        assert_eq!(e.get("猫"), Some(&[-1.0, 2.0][..]));
        assert_eq!(e.get("狗"), None);
    }

    #[test]
    fn parse_dimension_mismatch() {
        let err = WordEmbeddings::parse("w 0.1 0.2 0.3\n", 2).unwrap_err();
        assert!(matches!(
            err,
            EmbeddingError::DimensionMismatch {
                line: 1,
                expected: 2,
                found: 3
            }
        ));
    }

    #[test]
    fn parse_duplicate_word() {
        let err = WordEmbeddings::parse("w 1 0\nw 0 1\n", 2).unwrap_err();
        assert!(matches!(err, EmbeddingError::DuplicateWord { line: 2, .. }));
    }

    #[test]
    fn parse_rejects_zero_vector() {
        let err = WordEmbeddings::parse("w 0 0\n", 2).unwrap_err();
        assert!(matches!(err, EmbeddingError::ZeroVector(Some(1))));
    }

    #[test]
    fn write_round_trips_exactly() {
        let src = "w1 0.1 -0.30000000000000004\nw2 1e-300 2.5\n";
        let e = WordEmbeddings::parse(src, 2).unwrap();
        let mut buf = Vec::new();
        e.write(&mut buf).unwrap();
        let e2 = WordEmbeddings::parse(std::str::from_utf8(&buf).unwrap(), 2).unwrap();
        assert_eq!(e.get("w1"), e2.get("w1"));
        assert_eq!(e.get("w2"), e2.get("w2"));
    }

    #[test]
    fn cosine_basic_values() {
        let v = vec![0.3, -0.7, 2.0];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((c - 0.70710678).abs() < 1e-8);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine(&[1.0], &[1.0, 2.0]),
            Err(EmbeddingError::LengthMismatch(1, 2))
        ));
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 2.0]),
            Err(EmbeddingError::ZeroVector(None))
        ));
    }

    #[test]
    fn nearest_excludes_and_ranks() {
        let e = WordEmbeddings::parse("a 1 0\nb 0.9 0.1\nc 0 1\n", 2).unwrap();
        let exclude: HashSet<String> = ["a".to_string()].into();
        let n = e.nearest_words(&[1.0, 0.0], 10, &exclude).unwrap();
        assert_eq!(n.len(), 2);
        assert_eq!(n.neighbors[0].word, "b");
        assert_eq!(n.neighbors[0].rank, 1);
        assert_eq!(n.neighbors[1].word, "c");
        assert_eq!(n.neighbors[1].rank, 2);
        assert!(n.neighbors[0].similarity >= n.neighbors[1].similarity);
    }

    #[test]
    fn nearest_k_larger_than_table() {
        let e = WordEmbeddings::parse("a 1 0\nb 0 1\n", 2).unwrap();
        let n = e.nearest_words(&[1.0, 1.0], 99, &HashSet::new()).unwrap();
        assert_eq!(n.len(), 2);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let text = "w1 1 0 0\nw2 0.5 0.5 0\nw3 0 1 0\nw4 -1 0 0\nw5 0.5 0.5 0.70710678\n";
        let e = WordEmbeddings::parse(text, 3).unwrap();
        let query = [0.8, 0.2, 0.1];
        let got = e.nearest_words(&query, 5, &HashSet::new()).unwrap();

        let mut expected: Vec<(String, f64)> = (0..e.len())
            .map(|row| {
                (
                    e.word(row).to_string(),
                    cosine(&query, e.vector(row)).unwrap(),
                )
            })
            .collect();
        expected.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let got_pairs: Vec<(String, f64)> = got
            .neighbors
            .iter()
            .map(|n| (n.word.clone(), n.similarity))
            .collect();
        assert_eq!(got_pairs, expected);
    }

    #[test]
    fn nearest_breaks_ties_lexicographically() {
        let e = WordEmbeddings::parse("z 2 0\nb 1 0\nm 3 0\n", 2).unwrap();
        let n = e.nearest_words(&[1.0, 0.0], 3, &HashSet::new()).unwrap();
        let order: Vec<&str> = n.neighbors.iter().map(|x| x.word.as_str()).collect();
        assert_eq!(order, vec!["b", "m", "z"]);
    }

    #[test]
    fn nearest_empty_table_is_error() {
        let e = WordEmbeddings::parse("", 2).unwrap();
        assert!(matches!(
            e.nearest_words(&[1.0, 0.0], 1, &HashSet::new()),
            Err(EmbeddingError::EmptyTable)
        ));
    }

    #[test]
    fn parse_char_embeddings_groups_prototypes() {
        let c = CharEmbeddings::parse("铁 1 1 0\n铁 2 0 1\n匠 1 0.5 0.5\n", 2, 3).unwrap();
        assert_eq!(c.char_count(), 2);
        assert_eq!(c.prototypes('铁').unwrap().len(), 2);
        assert_eq!(c.prototypes('匠').unwrap().len(), 1);
        assert_eq!(c.prototypes('锅'), None);
    }

    #[test]
    fn char_prototype_out_of_range() {
        let err = CharEmbeddings::parse("铁 4 1 0\n", 2, 3).unwrap_err();
        assert!(matches!(
            err,
            EmbeddingError::PrototypeOutOfRange {
                line: 1,
                proto: 4,
                max: 3
            }
        ));
    }

    #[test]
    fn char_duplicate_prototype() {
        let err = CharEmbeddings::parse("铁 1 1 0\n铁 1 0 1\n", 2, 3).unwrap_err();
        assert!(matches!(
            err,
            EmbeddingError::DuplicatePrototype { line: 2, proto: 1, .. }
        ));
    }

    #[test]
    fn char_multi_char_token_rejected() {
        let err = CharEmbeddings::parse("铁匠 1 1 0\n", 2, 3).unwrap_err();
        assert!(matches!(err, EmbeddingError::MalformedLine { line: 1, .. }));
    }
}

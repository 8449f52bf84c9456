//! Word–sememe knowledge base: annotation loading, sememe frequency
//! filtering, deterministic dataset splits, and the sememe–sememe PMI
//! correlation matrix.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("dataset is empty after loading or filtering")]
    EmptyDataset,
    #[error("line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("requested split sizes sum to {requested} but only {available} words are available")]
    InsufficientWords { requested: usize, available: usize },
    #[error("word {0:?} contains a tab or newline")]
    InvalidWord(String),
    #[error("sememe {0:?} contains a tab, comma, or newline")]
    InvalidSememe(String),
    #[error("duplicate word {0:?}")]
    DuplicateWord(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A word–sememe annotation set: the word list, the sememe inventory, and
/// the sparse binary word×sememe matrix stored as one sorted row of sememe
/// indices per word.
#[derive(Debug, Clone)]
pub struct AnnotationSet {
    words: Vec<String>,
    sememes: Vec<String>,
    rows: Vec<Vec<u32>>,
    word_index: HashMap<String, u32>,
}

impl AnnotationSet {
    /// Reads `word<TAB>sememe1,sememe2,...` lines from a file.
    pub fn from_path(path: &Path) -> Result<Self, KbError> {
        let file = File::open(path)?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, KbError> {
        let mut text = String::new();
        let mut buf = BufReader::new(reader);
        buf.read_to_string(&mut text)?;
        Self::parse(&text)
    }

    /// Parses annotation text. Repeated lines for one word union their
    /// sememe sets; duplicate sememes within a line collapse silently.
    pub fn parse(text: &str) -> Result<Self, KbError> {
        let mut words: Vec<String> = Vec::new();
        let mut sememes: Vec<String> = Vec::new();
        let mut sememe_index: HashMap<String, u32> = HashMap::new();
        let mut word_index: HashMap<String, u32> = HashMap::new();
        let mut row_sets: Vec<HashSet<u32>> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (word, rest) = line.split_once('\t').ok_or(KbError::MalformedLine {
                line: lineno,
                msg: "expected `word<TAB>sememe1,sememe2,...`".into(),
            })?;
            let word = word.trim();
            if word.is_empty() {
                return Err(KbError::MalformedLine {
                    line: lineno,
                    msg: "empty word".into(),
                });
            }
            let mut ids: Vec<u32> = Vec::new();
            for token in rest.split(',') {
                let token = token.trim();
                if token.is_empty() {
                    return Err(KbError::MalformedLine {
                        line: lineno,
                        msg: "empty sememe in list".into(),
                    });
                }
                let id = *sememe_index.entry(token.to_string()).or_insert_with(|| {
                    sememes.push(token.to_string());
                    (sememes.len() - 1) as u32
                });
                ids.push(id);
            }
            if ids.is_empty() {
                return Err(KbError::MalformedLine {
                    line: lineno,
                    msg: "word with empty sememe list".into(),
                });
            }
            let wid = *word_index.entry(word.to_string()).or_insert_with(|| {
                words.push(word.to_string());
                row_sets.push(HashSet::new());
                (words.len() - 1) as u32
            });
            row_sets[wid as usize].extend(ids);
        }

        if words.is_empty() {
            return Err(KbError::EmptyDataset);
        }

        let rows = row_sets
            .into_iter()
            .map(|set| {
                let mut row: Vec<u32> = set.into_iter().collect();
                row.sort_unstable();
                row
            })
            .collect();

        Ok(AnnotationSet {
            words,
            sememes,
            rows,
            word_index,
        })
    }

    /// Parses annotation text against a fixed sememe inventory, so several
    /// files (train/dev/test splits) share one indexing. Sememes missing
    /// from the inventory are malformed.
    pub fn parse_with_inventory(text: &str, inventory: &[String]) -> Result<Self, KbError> {
        let lookup: HashMap<&str, u32> = inventory
            .iter()
            .enumerate()
            .map(|(j, s)| (s.as_str(), j as u32))
            .collect();
        let parsed = Self::parse(text)?;
        let mut rows = Vec::with_capacity(parsed.rows.len());
        for (i, row) in parsed.rows.iter().enumerate() {
            let mut mapped = Vec::with_capacity(row.len());
            for &j in row {
                let name = &parsed.sememes[j as usize];
                let id = lookup.get(name.as_str()).ok_or_else(|| KbError::InvalidSememe(
                    format!("{name} (word {:?}) not in the shared inventory", parsed.words[i]),
                ))?;
                mapped.push(*id);
            }
            mapped.sort_unstable();
            rows.push(mapped);
        }
        Ok(AnnotationSet {
            words: parsed.words,
            sememes: inventory.to_vec(),
            rows,
            word_index: parsed.word_index,
        })
    }

    pub fn from_path_with_inventory(path: &Path, inventory: &[String]) -> Result<Self, KbError> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        Self::parse_with_inventory(&text, inventory)
    }

    /// Builds a set programmatically. Word and sememe identifiers must be
    /// free of the characters the text format reserves.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, KbError>
    where
        I: IntoIterator<Item = (S, Vec<S>)>,
        S: Into<String>,
    {
        let mut words: Vec<String> = Vec::new();
        let mut sememes: Vec<String> = Vec::new();
        let mut sememe_index: HashMap<String, u32> = HashMap::new();
        let mut word_index: HashMap<String, u32> = HashMap::new();
        let mut rows: Vec<Vec<u32>> = Vec::new();

        for (word, list) in pairs {
            let word: String = word.into();
            if word.is_empty() || word.contains(['\t', '\n']) {
                return Err(KbError::InvalidWord(word));
            }
            if word_index.contains_key(&word) {
                return Err(KbError::DuplicateWord(word));
            }
            let mut ids: HashSet<u32> = HashSet::new();
            for sememe in list {
                let sememe: String = sememe.into();
                if sememe.is_empty() || sememe.contains(['\t', '\n', ',']) {
                    return Err(KbError::InvalidSememe(sememe));
                }
                let id = *sememe_index.entry(sememe.clone()).or_insert_with(|| {
                    sememes.push(sememe);
                    (sememes.len() - 1) as u32
                });
                ids.insert(id);
            }
            if ids.is_empty() {
                return Err(KbError::EmptyDataset);
            }
            word_index.insert(word.clone(), words.len() as u32);
            words.push(word);
            let mut row: Vec<u32> = ids.into_iter().collect();
            row.sort_unstable();
            rows.push(row);
        }
        if words.is_empty() {
            return Err(KbError::EmptyDataset);
        }
        Ok(AnnotationSet {
            words,
            sememes,
            rows,
            word_index,
        })
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn sememe_count(&self) -> usize {
        self.sememes.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn sememes(&self) -> &[String] {
        &self.sememes
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn sememe(&self, idx: usize) -> &str {
        &self.sememes[idx]
    }

    /// Sorted sememe indices annotated on word `idx`.
    pub fn row(&self, idx: usize) -> &[u32] {
        &self.rows[idx]
    }

    pub fn word_id(&self, word: &str) -> Option<u32> {
        self.word_index.get(word).copied()
    }

    pub fn sememe_set(&self, word: &str) -> Option<&[u32]> {
        self.word_id(word).map(|i| self.row(i as usize))
    }

    pub fn has(&self, word_idx: usize, sememe_idx: u32) -> bool {
        self.rows[word_idx].binary_search(&sememe_idx).is_ok()
    }

    /// Number of (word, sememe) annotation pairs.
    pub fn pair_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Writes the `word<TAB>sememe1,sememe2,...` text form.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (word, row) in self.words.iter().zip(&self.rows) {
            let list: Vec<&str> = row.iter().map(|&j| self.sememes[j as usize].as_str()).collect();
            writeln!(out, "{}\t{}", word, list.join(","))?;
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("annotation text is UTF-8")
    }

    /// Removes sememes annotated on fewer than `min_count` words, drops
    /// words whose sememe set becomes empty, and reindexes the matrix.
    pub fn filter_sememes(&self, min_count: usize) -> Result<Self, KbError> {
        assert!(min_count >= 1, "min_count must be at least 1");
        let mut counts = vec![0usize; self.sememes.len()];
        for row in &self.rows {
            for &j in row {
                counts[j as usize] += 1;
            }
        }
        let mut remap = vec![u32::MAX; self.sememes.len()];
        let mut kept_sememes = Vec::new();
        for (j, count) in counts.iter().enumerate() {
            if *count >= min_count {
                remap[j] = kept_sememes.len() as u32;
                kept_sememes.push(self.sememes[j].clone());
            }
        }

        let mut words = Vec::new();
        let mut rows = Vec::new();
        let mut word_index = HashMap::new();
        for (i, row) in self.rows.iter().enumerate() {
            let new_row: Vec<u32> = row
                .iter()
                .filter_map(|&j| {
                    let m = remap[j as usize];
                    (m != u32::MAX).then_some(m)
                })
                .collect();
            if !new_row.is_empty() {
                word_index.insert(self.words[i].clone(), words.len() as u32);
                words.push(self.words[i].clone());
                rows.push(new_row);
            }
        }
        if words.is_empty() {
            return Err(KbError::EmptyDataset);
        }
        Ok(AnnotationSet {
            words,
            sememes: kept_sememes,
            rows,
            word_index,
        })
    }

    /// Uniform random partition of the word list, a pure function of
    /// `(word order, sizes, seed)`. Words beyond the three requested sizes
    /// are left out of every split.
    pub fn split(&self, sizes: SplitSizes, seed: u64) -> Result<DatasetSplit, KbError> {
        let requested = sizes.train + sizes.dev + sizes.test;
        if requested > self.words.len() {
            return Err(KbError::InsufficientWords {
                requested,
                available: self.words.len(),
            });
        }
        let mut order: Vec<usize> = (0..self.words.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);

        let take = |n: usize, cursor: &mut usize| {
            let mut picked: Vec<usize> = order[*cursor..*cursor + n].to_vec();
            *cursor += n;
            picked.sort_unstable();
            self.subset(&picked)
        };
        let mut cursor = 0;
        let train = take(sizes.train, &mut cursor);
        let dev = take(sizes.dev, &mut cursor);
        let test = take(sizes.test, &mut cursor);
        Ok(DatasetSplit {
            train,
            dev,
            test,
            seed,
        })
    }

    /// A new set over the given word indices, sharing this set's sememe
    /// inventory and indexing.
    pub fn subset(&self, word_indices: &[usize]) -> AnnotationSet {
        let mut words = Vec::with_capacity(word_indices.len());
        let mut rows = Vec::with_capacity(word_indices.len());
        let mut word_index = HashMap::with_capacity(word_indices.len());
        for &i in word_indices {
            word_index.insert(self.words[i].clone(), words.len() as u32);
            words.push(self.words[i].clone());
            rows.push(self.rows[i].clone());
        }
        AnnotationSet {
            words,
            sememes: self.sememes.clone(),
            rows,
            word_index,
        }
    }

    /// Pointwise mutual information over sememe co-annotation:
    /// `C_jk = ln(count(j,k) * N / (count(j) * count(k)))` for every pair
    /// co-occurring on at least one word, including the diagonal. Pairs
    /// that never co-occur are not stored.
    pub fn compute_pmi(&self) -> SememeCorrelation {
        let n = self.words.len();
        let mut counts = vec![0usize; self.sememes.len()];
        let mut pair_counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        for row in &self.rows {
            for (a, &j) in row.iter().enumerate() {
                counts[j as usize] += 1;
                for &k in &row[a..] {
                    *pair_counts.entry((j, k)).or_insert(0) += 1;
                }
            }
        }
        let entries = pair_counts
            .into_iter()
            .map(|((j, k), joint)| {
                let value = ((joint * n) as f64
                    / (counts[j as usize] * counts[k as usize]) as f64)
                    .ln();
                ((j, k), value)
            })
            .collect();
        SememeCorrelation {
            entries,
            word_count: n,
        }
    }
}

/// Equality is semantic: same word order, and per word the same sememe
/// identifier set, regardless of how the inventory happens to be indexed.
impl PartialEq for AnnotationSet {
    fn eq(&self, other: &Self) -> bool {
        if self.words != other.words {
            return false;
        }
        self.rows.iter().zip(&other.rows).all(|(a, b)| {
            if a.len() != b.len() {
                return false;
            }
            let left: HashSet<&str> = a.iter().map(|&j| self.sememes[j as usize].as_str()).collect();
            b.iter().all(|&j| left.contains(other.sememes[j as usize].as_str()))
        })
    }
}

impl Eq for AnnotationSet {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

/// Disjoint train/dev/test views sharing one sememe inventory.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: AnnotationSet,
    pub dev: AnnotationSet,
    pub test: AnnotationSet,
    pub seed: u64,
}

/// Sparse symmetric PMI matrix over sememe pairs. Entries are stored once
/// under the canonical `(j, k)` ordering with `j <= k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SememeCorrelation {
    entries: BTreeMap<(u32, u32), f64>,
    word_count: usize,
}

impl SememeCorrelation {
    pub fn get(&self, j: u32, k: u32) -> Option<f64> {
        let key = if j <= k { (j, k) } else { (k, j) };
        self.entries.get(&key).copied()
    }

    pub fn contains(&self, j: u32, k: u32) -> bool {
        self.get(j, k).is_some()
    }

    /// Stored canonical pairs, `j <= k`, in key order.
    pub fn iter_upper(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.entries.iter().map(|(&key, &value)| (key, value))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.word_count
    }

    /// Cache format: a `# words<TAB>N` header, then sorted `j<TAB>k<TAB>value`
    /// rows with `j <= k`. Values print in shortest round-trip form.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# words\t{}", self.word_count)?;
        for (&(j, k), &value) in &self.entries {
            writeln!(out, "{}\t{}\t{}", j, k, value)?;
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("PMI text is UTF-8")
    }

    pub fn parse(text: &str) -> Result<Self, KbError> {
        let mut entries = BTreeMap::new();
        let mut word_count = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(value) = rest.trim().strip_prefix("words\t") {
                    word_count = value.trim().parse().map_err(|_| KbError::MalformedLine {
                        line: lineno,
                        msg: "bad word count in header".into(),
                    })?;
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(KbError::MalformedLine {
                    line: lineno,
                    msg: "expected `j<TAB>k<TAB>value`".into(),
                });
            }
            let j: u32 = fields[0].parse().map_err(|_| KbError::MalformedLine {
                line: lineno,
                msg: "bad sememe index".into(),
            })?;
            let k: u32 = fields[1].parse().map_err(|_| KbError::MalformedLine {
                line: lineno,
                msg: "bad sememe index".into(),
            })?;
            let value: f64 = fields[2].parse().map_err(|_| KbError::MalformedLine {
                line: lineno,
                msg: "bad PMI value".into(),
            })?;
            if j > k {
                return Err(KbError::MalformedLine {
                    line: lineno,
                    msg: "pair not in canonical j <= k order".into(),
                });
            }
            if !value.is_finite() {
                return Err(KbError::MalformedLine {
                    line: lineno,
                    msg: "non-finite PMI value".into(),
                });
            }
            entries.insert((j, k), value);
        }
        Ok(SememeCorrelation {
            entries,
            word_count,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, KbError> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        Self::parse(&text)
    }
}

/// Word occurrence counts from a whitespace-tokenized corpus. Absent words
/// have implicit count 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusFrequencies {
    counts: HashMap<String, u64>,
}

impl CorpusFrequencies {
    pub fn from_path(path: &Path) -> Result<Self, KbError> {
        let file = File::open(path)?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, KbError> {
        let mut counts = HashMap::new();
        for line in reader.lines() {
            for token in line?.split_whitespace() {
                *counts.entry(token.to_string()).or_insert(0) += 1;
            }
        }
        Ok(CorpusFrequencies { counts })
    }

    pub fn parse(text: &str) -> Self {
        let mut counts = HashMap::new();
        for token in text.split_whitespace() {
            *counts.entry(token.to_string()).or_insert(0) += 1;
        }
        CorpusFrequencies { counts }
    }

    pub fn get(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn distinct_words(&self) -> usize {
        self.counts.len()
    }
}

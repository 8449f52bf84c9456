//! Sememe prediction from word-internal characters: SPWCF scores by
//! character-at-position co-annotation statistics, and SPCSE factorizes
//! the word–sememe matrix against frozen multi-prototype character
//! embeddings, picking per (word, sememe) the prototype closest to the
//! evolving sememe embedding.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embeddings::{dot, l2_norm, CharEmbeddings};
use crate::external::{check_table_sizes, check_word_alignment, parse_field, write_row};
use crate::kb::{AnnotationSet, SememeCorrelation};
use crate::model::{
    all_finite, learning_rate, push_cell_samples, push_pair_samples, uniform_init, ModelError,
    Sample, TrainOutcome,
};
use crate::score::ScoreVector;

/// Character position classes within a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Position {
    Begin,
    Middle,
    End,
}

impl Position {
    pub const ALL: [Position; 3] = [Position::Begin, Position::Middle, Position::End];

    pub fn tag(self) -> &'static str {
        match self {
            Position::Begin => "B",
            Position::Middle => "M",
            Position::End => "E",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Position> {
        match tag {
            "B" => Some(Position::Begin),
            "M" => Some(Position::Middle),
            "E" => Some(Position::End),
            _ => None,
        }
    }
}

/// The distinct `(character, position)` slots a word occupies: the first
/// character at Begin, the last at End, interior characters at Middle. A
/// single-character word sits in both Begin and End. Each slot appears
/// once no matter how often a character repeats in the word.
pub fn position_slots(word: &str) -> Vec<(char, Position)> {
    let chars: Vec<char> = word.chars().collect();
    let mut slots: Vec<(char, Position)> = Vec::new();
    let push = |slot: (char, Position), slots: &mut Vec<(char, Position)>| {
        if !slots.contains(&slot) {
            slots.push(slot);
        }
    };
    if let Some(&first) = chars.first() {
        push((first, Position::Begin), &mut slots);
    }
    if chars.len() > 2 {
        for &c in &chars[1..chars.len() - 1] {
            push((c, Position::Middle), &mut slots);
        }
    }
    if let Some(&last) = chars.last() {
        push((last, Position::End), &mut slots);
    }
    slots
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Bucket {
    /// Sorted `(sememe index, count)` pairs.
    counts: Vec<(u32, u32)>,
    /// Sum of |S_w| over contributing words.
    normalizer: u64,
}

/// Per `(character, position)` accumulation of sememe annotation counts
/// over the train words occupying that slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionIndex {
    n_sememes: usize,
    buckets: BTreeMap<(char, Position), Bucket>,
}

impl PositionIndex {
    pub fn build(train: &AnnotationSet) -> PositionIndex {
        let mut buckets: BTreeMap<(char, Position), Bucket> = BTreeMap::new();
        for (i, word) in train.words().iter().enumerate() {
            let row = train.row(i);
            for slot in position_slots(word) {
                let bucket = buckets.entry(slot).or_default();
                bucket.normalizer += row.len() as u64;
                for &j in row {
                    match bucket.counts.binary_search_by_key(&j, |&(s, _)| s) {
                        Ok(pos) => bucket.counts[pos].1 += 1,
                        Err(pos) => bucket.counts.insert(pos, (j, 1)),
                    }
                }
            }
        }
        PositionIndex {
            n_sememes: train.sememe_count(),
            buckets,
        }
    }

    pub fn n_sememes(&self) -> usize {
        self.n_sememes
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn has_slot(&self, c: char, p: Position) -> bool {
        self.buckets.contains_key(&(c, p))
    }

    /// `P_p(s_j | c)`: annotation count over total annotation mass for the
    /// slot. An unseen slot yields the all-zero vector.
    pub fn char_score(&self, c: char, p: Position) -> ScoreVector {
        let mut scores = vec![0.0; self.n_sememes];
        if let Some(bucket) = self.buckets.get(&(c, p)) {
            for &(j, count) in &bucket.counts {
                scores[j as usize] = count as f64 / bucket.normalizer as f64;
            }
        }
        ScoreVector::new(c.to_string(), scores)
    }

    /// Sum of `char_score` over every slot the word occupies. `all_unseen`
    /// reports that no slot had any training evidence.
    pub fn word_score(&self, word: &str) -> Result<SpwcfScore, ModelError> {
        if word.is_empty() {
            return Err(ModelError::EmptyWord);
        }
        let mut scores = vec![0.0; self.n_sememes];
        let mut all_unseen = true;
        for (c, p) in position_slots(word) {
            if let Some(bucket) = self.buckets.get(&(c, p)) {
                all_unseen = false;
                for &(j, count) in &bucket.counts {
                    scores[j as usize] += count as f64 / bucket.normalizer as f64;
                }
            }
        }
        Ok(SpwcfScore {
            scores: ScoreVector::new(word, scores),
            all_unseen,
        })
    }

    /// Index artifact format: sorted `char<TAB>pos<TAB>normalizer<TAB>j:count,...`
    /// rows after a header.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# positions\t{}\t{}", self.n_sememes, self.buckets.len())?;
        for ((c, p), bucket) in &self.buckets {
            let counts: Vec<String> = bucket
                .counts
                .iter()
                .map(|(j, n)| format!("{j}:{n}"))
                .collect();
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                c,
                p.tag(),
                bucket.normalizer,
                counts.join(",")
            )?;
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("index text is UTF-8")
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(ModelError::MalformedCheckpoint {
            line: 1,
            msg: "empty index".into(),
        })?;
        let fields: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
        if fields.len() != 3 || fields[0] != "# positions" {
            return Err(ModelError::MalformedCheckpoint {
                line: 1,
                msg: "expected `# positions<TAB>n_sememes<TAB>n_buckets` header".into(),
            });
        }
        let n_sememes: usize = parse_field(fields[1], 1, "sememe count")?;
        let n_buckets: usize = parse_field(fields[2], 1, "bucket count")?;
        let mut buckets = BTreeMap::new();
        for (lineno, raw) in lines {
            let lineno = lineno + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(ModelError::MalformedCheckpoint {
                    line: lineno,
                    msg: "expected `char<TAB>pos<TAB>normalizer<TAB>counts`".into(),
                });
            }
            let mut chars = fields[0].chars();
            let c = chars.next().ok_or(ModelError::MalformedCheckpoint {
                line: lineno,
                msg: "empty character".into(),
            })?;
            if chars.next().is_some() {
                return Err(ModelError::MalformedCheckpoint {
                    line: lineno,
                    msg: "expected a single character".into(),
                });
            }
            let p = Position::from_tag(fields[1]).ok_or(ModelError::MalformedCheckpoint {
                line: lineno,
                msg: format!("bad position tag {:?}", fields[1]),
            })?;
            let normalizer: u64 = parse_field(fields[2], lineno, "normalizer")?;
            let mut counts = Vec::new();
            if !fields[3].is_empty() {
                for piece in fields[3].split(',') {
                    let (j, n) = piece.split_once(':').ok_or(ModelError::MalformedCheckpoint {
                        line: lineno,
                        msg: format!("bad count entry {piece:?}"),
                    })?;
                    let j: u32 = parse_field(j, lineno, "sememe index")?;
                    if j as usize >= n_sememes {
                        return Err(ModelError::MalformedCheckpoint {
                            line: lineno,
                            msg: format!("sememe index {j} out of range"),
                        });
                    }
                    let n: u32 = parse_field(n, lineno, "count")?;
                    counts.push((j, n));
                }
            }
            if counts.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(ModelError::MalformedCheckpoint {
                    line: lineno,
                    msg: "counts not sorted by sememe index".into(),
                });
            }
            // the normalizer is the total annotation mass of the slot; it
            // can never be below any single sememe count
            if counts.iter().any(|&(_, n)| (n as u64) > normalizer) {
                return Err(ModelError::MalformedCheckpoint {
                    line: lineno,
                    msg: "normalizer below a sememe count".into(),
                });
            }
            buckets.insert((c, p), Bucket { counts, normalizer });
        }
        if buckets.len() != n_buckets {
            return Err(ModelError::MalformedCheckpoint {
                line: 1,
                msg: format!(
                    "header announced {} buckets, found {}",
                    n_buckets,
                    buckets.len()
                ),
            });
        }
        Ok(PositionIndex { n_sememes, buckets })
    }

    pub fn from_path(path: &Path) -> Result<Self, ModelError> {
        let mut text = String::new();
        BufReader::new(File::open(path)?).read_to_string(&mut text)?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut file = File::create(path)?;
        self.write(&mut file)
    }
}

/// An SPWCF score plus the no-evidence flag ensembles use to tell "no
/// signal" apart from "uniformly zero signal".
#[derive(Debug, Clone, PartialEq)]
pub struct SpwcfScore {
    pub scores: ScoreVector,
    pub all_unseen: bool,
}

/// One candidate prototype for a word: 1-based character index within the
/// word, the character, and its 1-based prototype index.
#[derive(Debug, Clone)]
pub struct PrototypeCandidate {
    pub char_index: usize,
    pub ch: char,
    pub proto: u32,
    pub vector: Vec<f64>,
    pub norm: f64,
}

/// All stored prototypes of the word's characters, ordered by character
/// index then prototype index. Empty when no character is in the table.
pub fn prototype_candidates(word: &str, chars: &CharEmbeddings) -> Vec<PrototypeCandidate> {
    let mut out = Vec::new();
    for (pos, ch) in word.chars().enumerate() {
        if let Some(protos) = chars.prototypes(ch) {
            for (proto, vector) in protos {
                out.push(PrototypeCandidate {
                    char_index: pos + 1,
                    ch,
                    proto: *proto,
                    vector: vector.clone(),
                    norm: l2_norm(vector),
                });
            }
        }
    }
    out
}

/// Picks the candidate minimizing the cosine distance to `sememe_vec`,
/// ties broken by smallest character index then smallest prototype index.
/// Returns 1-based `(character index, prototype index)`.
pub fn select_prototype(
    word: &str,
    sememe_vec: &[f64],
    chars: &CharEmbeddings,
) -> Result<(usize, u32), ModelError> {
    let candidates = prototype_candidates(word, chars);
    let best = select_among(&candidates, sememe_vec)
        .ok_or_else(|| ModelError::NoInternalEvidence(word.to_string()))?;
    Ok((best.char_index, best.proto))
}

/// Argmax of cosine over candidates; candidates are pre-ordered by
/// (char index, proto index) so a strict `>` comparison realizes the
/// tie-break. A zero sememe vector degenerates to the first candidate.
pub(crate) fn select_among<'a>(
    candidates: &'a [PrototypeCandidate],
    sememe_vec: &[f64],
) -> Option<&'a PrototypeCandidate> {
    if candidates.is_empty() {
        return None;
    }
    let norm = l2_norm(sememe_vec);
    if norm == 0.0 {
        return Some(&candidates[0]);
    }
    let mut best = &candidates[0];
    let mut best_cos = dot(&best.vector, sememe_vec) / (best.norm * norm);
    for cand in &candidates[1..] {
        let cos = dot(&cand.vector, sememe_vec) / (cand.norm * norm);
        if cos > best_cos {
            best = cand;
            best_cos = cos;
        }
    }
    Some(best)
}

/// SPCSE hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpcseHyper {
    pub lambda: f64,
    pub zero_sample_prob: f64,
    pub epochs: usize,
    pub lr0: f64,
    pub seed: u64,
}

impl Default for SpcseHyper {
    fn default() -> Self {
        SpcseHyper {
            lambda: 0.1,
            zero_sample_prob: 0.025,
            epochs: 20,
            lr0: 0.01,
            seed: 42,
        }
    }
}

impl SpcseHyper {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(0.0..=1.0).contains(&self.zero_sample_prob) {
            return Err(ModelError::InvalidHyper(
                "zero_sample_prob must lie in [0, 1]".into(),
            ));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(ModelError::InvalidHyper("lambda must be finite and >= 0".into()));
        }
        if !self.lr0.is_finite() || self.lr0 <= 0.0 {
            return Err(ModelError::InvalidHyper("lr0 must be positive".into()));
        }
        Ok(())
    }
}

/// Dual sememe embeddings in character-embedding space, with one bias per
/// character type and one per sememe.
#[derive(Debug, Clone, PartialEq)]
pub struct SpcseModel {
    dim: usize,
    n_sememes: usize,
    s: Vec<f64>,
    s_bar: Vec<f64>,
    char_bias: BTreeMap<char, f64>,
    sememe_bias: Vec<f64>,
    train_words: Vec<String>,
}

impl SpcseModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sememes(&self) -> usize {
        self.n_sememes
    }

    pub fn s(&self, j: usize) -> &[f64] {
        &self.s[j * self.dim..(j + 1) * self.dim]
    }

    pub fn s_bar(&self, j: usize) -> &[f64] {
        &self.s_bar[j * self.dim..(j + 1) * self.dim]
    }

    pub fn sememe_bias(&self, j: usize) -> f64 {
        self.sememe_bias[j]
    }

    pub fn char_bias(&self, c: char) -> Option<f64> {
        self.char_bias.get(&c).copied()
    }

    pub fn train_words(&self) -> &[String] {
        &self.train_words
    }

    /// `s'_j + s_bar'_j`.
    pub fn sememe_vec(&self, j: usize) -> Vec<f64> {
        self.s(j)
            .iter()
            .zip(self.s_bar(j))
            .map(|(a, b)| a + b)
            .collect()
    }

    /// Scores every sememe by the dot product of its embedding sum with
    /// the prototype selected per sememe; biases are not applied. A zero
    /// embedding sum scores zero without any selection.
    pub fn score(&self, word: &str, chars: &CharEmbeddings) -> Result<ScoreVector, ModelError> {
        if word.is_empty() {
            return Err(ModelError::EmptyWord);
        }
        if chars.dim() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                found: chars.dim(),
            });
        }
        let candidates = prototype_candidates(word, chars);
        if candidates.is_empty() {
            return Err(ModelError::NoInternalEvidence(word.to_string()));
        }
        let mut scores = vec![0.0; self.n_sememes];
        for (j, score) in scores.iter_mut().enumerate() {
            let u = self.sememe_vec(j);
            if l2_norm(&u) == 0.0 {
                continue;
            }
            let best = select_among(&candidates, &u).expect("candidates checked non-empty");
            *score = dot(&best.vector, &u);
        }
        Ok(ScoreVector::new(word, scores))
    }

    /// Training-time prediction for a (train word, sememe) cell: selected
    /// prototype dot plus the selected character's bias and the sememe
    /// bias.
    pub fn predict_cell(
        &self,
        word: &str,
        sememe: u32,
        chars: &CharEmbeddings,
    ) -> Result<f64, ModelError> {
        if !self.train_words.iter().any(|w| w == word) {
            return Err(ModelError::NoInternalEvidence(word.to_string()));
        }
        let candidates = prototype_candidates(word, chars);
        let u = self.sememe_vec(sememe as usize);
        let best = select_among(&candidates, &u)
            .ok_or_else(|| ModelError::NoInternalEvidence(word.to_string()))?;
        Ok(dot(&best.vector, &u)
            + self.char_bias[&best.ch]
            + self.sememe_bias[sememe as usize])
    }

    pub fn param_count(&self) -> usize {
        self.s.len() + self.s_bar.len() + self.char_bias.len() + self.sememe_bias.len()
    }

    pub fn param(&self, idx: usize) -> f64 {
        let mut idx = idx;
        if idx < self.s.len() {
            return self.s[idx];
        }
        idx -= self.s.len();
        if idx < self.s_bar.len() {
            return self.s_bar[idx];
        }
        idx -= self.s_bar.len();
        if idx < self.char_bias.len() {
            return *self.char_bias.values().nth(idx).expect("in range");
        }
        idx -= self.char_bias.len();
        self.sememe_bias[idx]
    }

    pub fn param_mut(&mut self, idx: usize) -> &mut f64 {
        let mut idx = idx;
        if idx < self.s.len() {
            return &mut self.s[idx];
        }
        idx -= self.s.len();
        if idx < self.s_bar.len() {
            return &mut self.s_bar[idx];
        }
        idx -= self.s_bar.len();
        if idx < self.char_bias.len() {
            return self.char_bias.values_mut().nth(idx).expect("in range");
        }
        idx -= self.char_bias.len();
        &mut self.sememe_bias[idx]
    }

    fn is_finite(&self) -> bool {
        all_finite(&self.s)
            && all_finite(&self.s_bar)
            && self.char_bias.values().all(|v| v.is_finite())
            && all_finite(&self.sememe_bias)
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "spcse\t{}\t{}\t{}\t{}",
            self.dim,
            self.n_sememes,
            self.char_bias.len(),
            self.train_words.len()
        )?;
        for j in 0..self.n_sememes {
            write_row(&mut out, "s", &j.to_string(), self.s(j))?;
        }
        for j in 0..self.n_sememes {
            write_row(&mut out, "sbar", &j.to_string(), self.s_bar(j))?;
        }
        for (c, bias) in &self.char_bias {
            writeln!(out, "cbias\t{}\t{}", c, bias)?;
        }
        for (j, bias) in self.sememe_bias.iter().enumerate() {
            writeln!(out, "sbias\t{}\t{}", j, bias)?;
        }
        for word in &self.train_words {
            writeln!(out, "word\t{}", word)?;
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("checkpoint is UTF-8")
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut file = File::create(path)?;
        self.write(&mut file)
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(ModelError::MalformedCheckpoint {
            line: 1,
            msg: "empty checkpoint".into(),
        })?;
        let fields: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
        if fields.len() != 5 || fields[0] != "spcse" {
            return Err(ModelError::MalformedCheckpoint {
                line: 1,
                msg: "expected `spcse<TAB>dim<TAB>n_sememes<TAB>n_chars<TAB>n_words` header"
                    .into(),
            });
        }
        let dim: usize = parse_field(fields[1], 1, "dim")?;
        let n_sememes: usize = parse_field(fields[2], 1, "sememe count")?;
        let n_chars: usize = parse_field(fields[3], 1, "char count")?;
        let n_words: usize = parse_field(fields[4], 1, "word count")?;
        check_table_sizes(dim, n_sememes, n_chars.max(n_words))?;
        let mut model = SpcseModel {
            dim,
            n_sememes,
            s: vec![0.0; n_sememes * dim],
            s_bar: vec![0.0; n_sememes * dim],
            char_bias: BTreeMap::new(),
            sememe_bias: vec![0.0; n_sememes],
            train_words: Vec::with_capacity(n_words),
        };
        for (lineno, raw) in lines {
            let lineno = lineno + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "s" | "sbar" => {
                    if fields.len() != dim + 2 {
                        return Err(ModelError::MalformedCheckpoint {
                            line: lineno,
                            msg: format!("expected {} components", dim),
                        });
                    }
                    let j: usize = parse_field(fields[1], lineno, "sememe index")?;
                    if j >= n_sememes {
                        return Err(ModelError::MalformedCheckpoint {
                            line: lineno,
                            msg: format!("sememe index {} out of range", j),
                        });
                    }
                    let table = if fields[0] == "s" {
                        &mut model.s
                    } else {
                        &mut model.s_bar
                    };
                    for (d, v) in fields[2..].iter().enumerate() {
                        table[j * dim + d] = parse_field(v, lineno, "component")?;
                    }
                }
                "cbias" => {
                    if fields.len() != 3 {
                        return Err(ModelError::MalformedCheckpoint {
                            line: lineno,
                            msg: "expected `cbias<TAB>char<TAB>value`".into(),
                        });
                    }
                    let mut cs = fields[1].chars();
                    let c = cs.next().ok_or(ModelError::MalformedCheckpoint {
                        line: lineno,
                        msg: "empty character".into(),
                    })?;
                    if cs.next().is_some() {
                        return Err(ModelError::MalformedCheckpoint {
                            line: lineno,
                            msg: "expected a single character".into(),
                        });
                    }
                    model
                        .char_bias
                        .insert(c, parse_field(fields[2], lineno, "bias")?);
                }
                "sbias" => {
                    if fields.len() != 3 {
                        return Err(ModelError::MalformedCheckpoint {
                            line: lineno,
                            msg: "expected `sbias<TAB>index<TAB>value`".into(),
                        });
                    }
                    let j: usize = parse_field(fields[1], lineno, "sememe index")?;
                    if j >= n_sememes {
                        return Err(ModelError::MalformedCheckpoint {
                            line: lineno,
                            msg: format!("sememe index {} out of range", j),
                        });
                    }
                    model.sememe_bias[j] = parse_field(fields[2], lineno, "bias")?;
                }
                "word" => {
                    if fields.len() != 2 {
                        return Err(ModelError::MalformedCheckpoint {
                            line: lineno,
                            msg: "expected `word<TAB>string`".into(),
                        });
                    }
                    model.train_words.push(fields[1].to_string());
                }
                other => {
                    return Err(ModelError::MalformedCheckpoint {
                        line: lineno,
                        msg: format!("unknown record kind {other:?}"),
                    });
                }
            }
        }
        if model.char_bias.len() != n_chars || model.train_words.len() != n_words {
            return Err(ModelError::MalformedCheckpoint {
                line: 1,
                msg: "table sizes do not match header".into(),
            });
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let mut text = String::new();
        BufReader::new(File::open(path)?).read_to_string(&mut text)?;
        Self::parse(&text)
    }
}

/// Gradients of the full SPCSE objective at fixed prototype selections,
/// same layout as the model (char biases in sorted character order).
#[derive(Debug, Clone)]
pub struct SpcseGradients {
    pub s: Vec<f64>,
    pub s_bar: Vec<f64>,
    pub char_bias: Vec<f64>,
    pub sememe_bias: Vec<f64>,
}

impl SpcseGradients {
    pub fn flat(&self, idx: usize) -> f64 {
        let mut idx = idx;
        for table in [&self.s, &self.s_bar, &self.char_bias, &self.sememe_bias] {
            if idx < table.len() {
                return table[idx];
            }
            idx -= table.len();
        }
        panic!("gradient index out of range");
    }
}

struct SpcseTrainData<'a> {
    rows: Vec<Vec<u32>>,
    candidates: Vec<Vec<PrototypeCandidate>>,
    n_sememes: usize,
    pmi: &'a SememeCorrelation,
    lambda: f64,
}

fn spcse_train_data<'a>(
    train: &AnnotationSet,
    pmi: &'a SememeCorrelation,
    chars: &CharEmbeddings,
    lambda: f64,
) -> Result<(SpcseTrainData<'a>, Vec<String>, usize), ModelError> {
    let mut kept_words = Vec::new();
    let mut rows = Vec::new();
    let mut candidates = Vec::new();
    let mut dropped = 0;
    for (i, word) in train.words().iter().enumerate() {
        let cands = prototype_candidates(word, chars);
        if cands.is_empty() {
            dropped += 1;
            continue;
        }
        kept_words.push(word.clone());
        rows.push(train.row(i).to_vec());
        candidates.push(cands);
    }
    if kept_words.is_empty() {
        return Err(ModelError::NoTrainableWords);
    }
    Ok((
        SpcseTrainData {
            rows,
            candidates,
            n_sememes: train.sememe_count(),
            pmi,
            lambda,
        },
        kept_words,
        dropped,
    ))
}

impl<'a> SpcseTrainData<'a> {
    /// Argmax prototype per (kept word, sememe) against the current model:
    /// `selections[i][j]` indexes into `candidates[i]`.
    fn select_all(&self, model: &SpcseModel) -> Vec<Vec<usize>> {
        (0..self.rows.len())
            .map(|i| {
                (0..self.n_sememes)
                    .map(|j| {
                        let u = model.sememe_vec(j);
                        let best = select_among(&self.candidates[i], &u)
                            .expect("kept words have candidates");
                        self.candidates[i]
                            .iter()
                            .position(|c| std::ptr::eq(c, best))
                            .expect("best comes from the slice")
                    })
                    .collect()
            })
            .collect()
    }

    /// Full objective with selections recomputed from the current model:
    /// every word×sememe cell plus every ordered sememe pair.
    fn full_loss(&self, model: &SpcseModel) -> f64 {
        self.full_loss_frozen(model, &self.select_all(model))
    }

    /// Full objective at explicitly fixed per-cell selections.
    fn full_loss_frozen(&self, model: &SpcseModel, selections: &[Vec<usize>]) -> f64 {
        let mut total = 0.0;
        for j in 0..self.n_sememes {
            let u = model.sememe_vec(j);
            for (i, row) in self.rows.iter().enumerate() {
                let target = if row.binary_search(&(j as u32)).is_ok() {
                    1.0
                } else {
                    0.0
                };
                let best = &self.candidates[i][selections[i][j]];
                let pred =
                    dot(&best.vector, &u) + model.char_bias[&best.ch] + model.sememe_bias[j];
                total += (pred - target) * (pred - target);
            }
            for k in 0..self.n_sememes {
                let target = self.pmi.get(j as u32, k as u32).unwrap_or(0.0);
                let err = dot(model.s(j), model.s_bar(k)) - target;
                total += self.lambda * err * err;
            }
        }
        total
    }

    /// Analytic gradient at the given fixed selections.
    fn full_gradient_frozen(
        &self,
        model: &SpcseModel,
        selections: &[Vec<usize>],
    ) -> SpcseGradients {
        let dim = model.dim;
        let char_order: Vec<char> = model.char_bias.keys().copied().collect();
        let mut g = SpcseGradients {
            s: vec![0.0; model.s.len()],
            s_bar: vec![0.0; model.s_bar.len()],
            char_bias: vec![0.0; char_order.len()],
            sememe_bias: vec![0.0; model.sememe_bias.len()],
        };
        for j in 0..self.n_sememes {
            let u = model.sememe_vec(j);
            for (i, row) in self.rows.iter().enumerate() {
                let target = if row.binary_search(&(j as u32)).is_ok() {
                    1.0
                } else {
                    0.0
                };
                let best = &self.candidates[i][selections[i][j]];
                let err =
                    dot(&best.vector, &u) + model.char_bias[&best.ch] + model.sememe_bias[j] - target;
                let coef = 2.0 * err;
                for d in 0..dim {
                    g.s[j * dim + d] += coef * best.vector[d];
                    g.s_bar[j * dim + d] += coef * best.vector[d];
                }
                let c_idx = char_order
                    .binary_search(&best.ch)
                    .expect("selected char has a bias");
                g.char_bias[c_idx] += coef;
                g.sememe_bias[j] += coef;
            }
            for k in 0..self.n_sememes {
                let target = self.pmi.get(j as u32, k as u32).unwrap_or(0.0);
                let err = dot(model.s(j), model.s_bar(k)) - target;
                let coef = 2.0 * self.lambda * err;
                for d in 0..dim {
                    g.s[j * dim + d] += coef * model.s_bar[k * dim + d];
                    g.s_bar[k * dim + d] += coef * model.s[j * dim + d];
                }
            }
        }
        g
    }
}

/// SGD on the SPCSE objective with frozen character embeddings. For every
/// visited cell the closest prototype is reselected against the current
/// sememe embedding sum before the step. Zero cells and zero PMI pairs
/// are resampled per epoch at `zero_sample_prob`; determinism follows
/// from `h.seed` exactly as in SPSE training.
pub fn train_spcse(
    train: &AnnotationSet,
    pmi: &SememeCorrelation,
    chars: &CharEmbeddings,
    h: &SpcseHyper,
) -> Result<TrainOutcome<SpcseModel>, ModelError> {
    h.validate()?;
    let (data, kept_words, dropped) = spcse_train_data(train, pmi, chars, h.lambda)?;
    let dim = chars.dim();
    let n_sememes = train.sememe_count();
    let mut rng = ChaCha8Rng::seed_from_u64(h.seed);
    let mut model = SpcseModel {
        dim,
        n_sememes,
        s: uniform_init(&mut rng, n_sememes * dim, dim),
        s_bar: uniform_init(&mut rng, n_sememes * dim, dim),
        char_bias: chars.chars().map(|c| (c, 0.0)).collect(),
        sememe_bias: vec![0.0; n_sememes],
        train_words: kept_words,
    };
    let mut losses = Vec::with_capacity(h.epochs + 1);
    losses.push(data.full_loss(&model));
    let mut plan: Vec<Sample> = Vec::new();
    for epoch in 0..h.epochs {
        let lr = learning_rate(h.lr0, epoch, h.epochs);
        plan.clear();
        push_cell_samples(&mut plan, &data.rows, n_sememes, h.zero_sample_prob, &mut rng);
        push_pair_samples(&mut plan, pmi, n_sememes, h.zero_sample_prob, &mut rng);
        plan.shuffle(&mut rng);
        for sample in &plan {
            match *sample {
                Sample::Cell {
                    word,
                    sememe,
                    target,
                } => {
                    let i = word as usize;
                    let j = sememe as usize;
                    let u = model.sememe_vec(j);
                    let best = select_among(&data.candidates[i], &u)
                        .expect("kept words have candidates");
                    let err = dot(&best.vector, &u)
                        + model.char_bias[&best.ch]
                        + model.sememe_bias[j]
                        - target;
                    let step = 2.0 * lr * err;
                    for d in 0..dim {
                        model.s[j * dim + d] -= step * best.vector[d];
                        model.s_bar[j * dim + d] -= step * best.vector[d];
                    }
                    *model.char_bias.get_mut(&best.ch).expect("bias exists") -= step;
                    model.sememe_bias[j] -= step;
                }
                Sample::Pair { j, k, target } => {
                    let j = j as usize;
                    let k = k as usize;
                    let err = dot(model.s(j), model.s_bar(k)) - target;
                    let step = 2.0 * lr * h.lambda * err;
                    for d in 0..dim {
                        let old_s = model.s[j * dim + d];
                        let old_sbar = model.s_bar[k * dim + d];
                        model.s[j * dim + d] -= step * old_sbar;
                        model.s_bar[k * dim + d] -= step * old_s;
                    }
                }
            }
        }
        if !model.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch: epoch + 1 });
        }
        losses.push(data.full_loss(&model));
    }
    Ok(TrainOutcome {
        model,
        epoch_losses: losses,
        dropped_words: dropped,
    })
}

/// Full SPCSE objective (selections recomputed from the model).
pub fn spcse_full_loss(
    train: &AnnotationSet,
    pmi: &SememeCorrelation,
    chars: &CharEmbeddings,
    model: &SpcseModel,
    lambda: f64,
) -> Result<f64, ModelError> {
    let (data, kept_words, _) = spcse_train_data(train, pmi, chars, lambda)?;
    check_word_alignment(&kept_words, &model.train_words)?;
    Ok(data.full_loss(model))
}

/// The argmax prototype selection for every (kept word, sememe) cell at
/// the current model; feed it to the frozen-selection loss and gradient.
pub fn spcse_select_all(
    train: &AnnotationSet,
    pmi: &SememeCorrelation,
    chars: &CharEmbeddings,
    model: &SpcseModel,
    lambda: f64,
) -> Result<Vec<Vec<usize>>, ModelError> {
    let (data, kept_words, _) = spcse_train_data(train, pmi, chars, lambda)?;
    check_word_alignment(&kept_words, &model.train_words)?;
    Ok(data.select_all(model))
}

/// Full SPCSE objective at fixed per-cell selections.
pub fn spcse_full_loss_frozen(
    train: &AnnotationSet,
    pmi: &SememeCorrelation,
    chars: &CharEmbeddings,
    model: &SpcseModel,
    lambda: f64,
    selections: &[Vec<usize>],
) -> Result<f64, ModelError> {
    let (data, kept_words, _) = spcse_train_data(train, pmi, chars, lambda)?;
    check_word_alignment(&kept_words, &model.train_words)?;
    Ok(data.full_loss_frozen(model, selections))
}

/// Analytic gradient of the full SPCSE objective at fixed selections.
pub fn spcse_full_gradient_frozen(
    train: &AnnotationSet,
    pmi: &SememeCorrelation,
    chars: &CharEmbeddings,
    model: &SpcseModel,
    lambda: f64,
    selections: &[Vec<usize>],
) -> Result<SpcseGradients, ModelError> {
    let (data, kept_words, _) = spcse_train_data(train, pmi, chars, lambda)?;
    check_word_alignment(&kept_words, &model.train_words)?;
    Ok(data.full_gradient_frozen(model, selections))
}

/// Builds an SPCSE model from explicit tables; intended for tests.
pub fn spcse_model_from_parts(
    dim: usize,
    s: Vec<f64>,
    s_bar: Vec<f64>,
    char_bias: BTreeMap<char, f64>,
    sememe_bias: Vec<f64>,
    train_words: Vec<String>,
) -> SpcseModel {
    assert_eq!(s.len(), s_bar.len());
    assert_eq!(s.len() % dim, 0);
    let n_sememes = s.len() / dim;
    assert_eq!(sememe_bias.len(), n_sememes);
    SpcseModel {
        dim,
        n_sememes,
        s,
        s_bar,
        char_bias,
        sememe_bias,
        train_words,
    }
}

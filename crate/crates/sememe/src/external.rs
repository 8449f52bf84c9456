//! Sememe prediction from external context: SPWE scores a word by the
//! annotations of its embedding-space neighbors, and SPSE factorizes the
//! word–sememe matrix together with the sememe–sememe PMI matrix against
//! frozen word embeddings.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embeddings::{dot, l2_norm, top_k_by_cosine, WordEmbeddings};
use crate::kb::{AnnotationSet, SememeCorrelation};
use crate::model::{
    all_finite, learning_rate, push_cell_samples, push_pair_samples, uniform_init, ModelError,
    Sample, TrainOutcome,
};
use crate::score::ScoreVector;

/// SPWE hyperparameters: the rank discount base and the neighbor cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpweConfig {
    pub c: f64,
    pub k: usize,
}

impl Default for SpweConfig {
    fn default() -> Self {
        SpweConfig { c: 0.8, k: 100 }
    }
}

impl SpweConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(ModelError::InvalidHyper(format!(
                "SPWE discount c must lie in (0, 1), got {}",
                self.c
            )));
        }
        if self.k < 1 {
            return Err(ModelError::InvalidHyper("SPWE K must be at least 1".into()));
        }
        Ok(())
    }
}

/// Neighbor-based scorer. Train words without an embedding are skipped and
/// counted; each query ranks the remaining train words by cosine and sums
/// `cos * c^rank` into every sememe the neighbor is annotated with.
pub struct Spwe<'a> {
    train: &'a AnnotationSet,
    emb: &'a WordEmbeddings,
    cfg: SpweConfig,
    candidates: Vec<(u32, u32)>,
    missing: usize,
}

impl<'a> Spwe<'a> {
    pub fn new(
        train: &'a AnnotationSet,
        emb: &'a WordEmbeddings,
        cfg: SpweConfig,
    ) -> Result<Self, ModelError> {
        cfg.validate()?;
        let mut candidates = Vec::new();
        let mut missing = 0;
        for (i, word) in train.words().iter().enumerate() {
            match emb.row_of(word) {
                Some(row) => candidates.push((i as u32, row)),
                None => missing += 1,
            }
        }
        if candidates.is_empty() {
            return Err(ModelError::NoNeighbors);
        }
        Ok(Spwe {
            train,
            emb,
            cfg,
            candidates,
            missing,
        })
    }

    /// Train words that had no embedding and were skipped.
    pub fn missing_words(&self) -> usize {
        self.missing
    }

    pub fn config(&self) -> SpweConfig {
        self.cfg
    }

    /// Scores a word by its own embedding; the word itself never appears in
    /// its neighbor list.
    pub fn score_word(&self, word: &str) -> Result<ScoreVector, ModelError> {
        let query = self
            .emb
            .get(word)
            .ok_or_else(|| ModelError::WordNotEmbedded(word.to_string()))?;
        self.score_vector(word, query, Some(word))
    }

    /// Scores an arbitrary query vector, optionally excluding one train
    /// word from the neighbor list.
    pub fn score_vector(
        &self,
        word_label: &str,
        query: &[f64],
        exclude: Option<&str>,
    ) -> Result<ScoreVector, ModelError> {
        if query.len() != self.emb.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.emb.dim(),
                found: query.len(),
            });
        }
        let query_norm = l2_norm(query);
        if query_norm == 0.0 {
            return Err(ModelError::ZeroQuery);
        }
        let items = self
            .candidates
            .iter()
            .filter(|(train_idx, _)| {
                exclude != Some(self.train.word(*train_idx as usize))
            })
            .map(|&(train_idx, row)| {
                (
                    train_idx,
                    self.emb.word(row as usize),
                    self.emb.vector(row as usize),
                    self.emb.norm(row as usize),
                )
            });
        let neighbors = top_k_by_cosine(items, query, query_norm, self.cfg.k);

        let mut scores = vec![0.0; self.train.sememe_count()];
        for (rank0, (train_idx, cos)) in neighbors.iter().enumerate() {
            let weight = cos * self.cfg.c.powi(rank0 as i32 + 1);
            for &j in self.train.row(*train_idx as usize) {
                scores[j as usize] += weight;
            }
        }
        Ok(ScoreVector::new(word_label, scores))
    }
}

/// SPSE hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpseHyper {
    pub lambda: f64,
    pub zero_sample_prob: f64,
    pub epochs: usize,
    pub lr0: f64,
    pub seed: u64,
}

impl Default for SpseHyper {
    fn default() -> Self {
        SpseHyper {
            lambda: 0.5,
            zero_sample_prob: 0.005,
            epochs: 20,
            lr0: 0.01,
            seed: 42,
        }
    }
}

impl SpseHyper {
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

/// Dual sememe embeddings with word and sememe biases, learned against
/// frozen word embeddings. Scoring uses only the embedding sum; biases
/// absorb offsets during training.
#[derive(Debug, Clone, PartialEq)]
pub struct SpseModel {
    dim: usize,
    n_sememes: usize,
    s: Vec<f64>,
    s_bar: Vec<f64>,
    word_bias: Vec<f64>,
    sememe_bias: Vec<f64>,
    train_words: Vec<String>,
}

impl SpseModel {
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

    pub fn word_bias_of(&self, word: &str) -> Option<f64> {
        self.train_words
            .iter()
            .position(|w| w == word)
            .map(|i| self.word_bias[i])
    }

    /// Train words that own a bias, in training order.
    pub fn train_words(&self) -> &[String] {
        &self.train_words
    }

    /// `w . (s_j + s_bar_j)` for every sememe; biases are not applied.
    pub fn score(&self, word_label: &str, query: &[f64]) -> Result<ScoreVector, ModelError> {
        if query.len() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        let scores = (0..self.n_sememes)
            .map(|j| dot(query, self.s(j)) + dot(query, self.s_bar(j)))
            .collect();
        Ok(ScoreVector::new(word_label, scores))
    }

    /// The training-time prediction for a (train word, sememe) cell,
    /// including both biases.
    pub fn predict_cell(
        &self,
        word: &str,
        sememe: u32,
        emb: &WordEmbeddings,
    ) -> Result<f64, ModelError> {
        let i = self
            .train_words
            .iter()
            .position(|w| w == word)
            .ok_or_else(|| ModelError::WordNotEmbedded(word.to_string()))?;
        let w = emb
            .get(word)
            .ok_or_else(|| ModelError::WordNotEmbedded(word.to_string()))?;
        let j = sememe as usize;
        Ok(dot(w, self.s(j)) + dot(w, self.s_bar(j)) + self.word_bias[i] + self.sememe_bias[j])
    }

    /// Parameters flattened as `s, s_bar, word_bias, sememe_bias`.
    pub fn param_count(&self) -> usize {
        self.s.len() + self.s_bar.len() + self.word_bias.len() + self.sememe_bias.len()
    }

    pub fn param(&self, idx: usize) -> f64 {
        let mut idx = idx;
        for table in [&self.s, &self.s_bar, &self.word_bias, &self.sememe_bias] {
            if idx < table.len() {
                return table[idx];
            }
            idx -= table.len();
        }
        panic!("parameter index out of range");
    }

    pub fn param_mut(&mut self, idx: usize) -> &mut f64 {
        let mut idx = idx;
        for table in [
            &mut self.s,
            &mut self.s_bar,
            &mut self.word_bias,
            &mut self.sememe_bias,
        ] {
            if idx < table.len() {
                return &mut table[idx];
            }
            idx -= table.len();
        }
        panic!("parameter index out of range");
    }

    fn is_finite(&self) -> bool {
        all_finite(&self.s)
            && all_finite(&self.s_bar)
            && all_finite(&self.word_bias)
            && all_finite(&self.sememe_bias)
    }

    /// Checkpoint layout: a header line, then one line per table entry.
    /// Values print in shortest round-trip form, so write-then-parse is
    /// exact.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "spse\t{}\t{}\t{}",
            self.dim,
            self.n_sememes,
            self.train_words.len()
        )?;
        for j in 0..self.n_sememes {
            write_row(&mut out, "s", &j.to_string(), self.s(j))?;
        }
        for j in 0..self.n_sememes {
            write_row(&mut out, "sbar", &j.to_string(), self.s_bar(j))?;
        }
        for (word, bias) in self.train_words.iter().zip(&self.word_bias) {
            writeln!(out, "wbias\t{}\t{}", word, bias)?;
        }
        for (j, bias) in self.sememe_bias.iter().enumerate() {
            writeln!(out, "sbias\t{}\t{}", j, bias)?;
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
        if fields.len() != 4 || fields[0] != "spse" {
            return Err(ModelError::MalformedCheckpoint {
                line: 1,
                msg: "expected `spse<TAB>dim<TAB>n_sememes<TAB>n_words` header".into(),
            });
        }
        let dim: usize = parse_field(fields[1], 1, "dim")?;
        let n_sememes: usize = parse_field(fields[2], 1, "sememe count")?;
        let n_words: usize = parse_field(fields[3], 1, "word count")?;
        check_table_sizes(dim, n_sememes, n_words)?;
        let mut model = SpseModel {
            dim,
            n_sememes,
            s: vec![0.0; n_sememes * dim],
            s_bar: vec![0.0; n_sememes * dim],
            word_bias: Vec::with_capacity(n_words),
            sememe_bias: vec![0.0; n_sememes],
            train_words: Vec::with_capacity(n_words),
        };
        let mut seen = vec![false; 2 * n_sememes + n_sememes];
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
                    let flag = if fields[0] == "s" { j } else { n_sememes + j };
                    seen[flag] = true;
                }
                "wbias" => {
                    if fields.len() != 3 {
                        return Err(ModelError::MalformedCheckpoint {
                            line: lineno,
                            msg: "expected `wbias<TAB>word<TAB>value`".into(),
                        });
                    }
                    model.train_words.push(fields[1].to_string());
                    model.word_bias.push(parse_field(fields[2], lineno, "bias")?);
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
                    seen[2 * n_sememes + j] = true;
                }
                other => {
                    return Err(ModelError::MalformedCheckpoint {
                        line: lineno,
                        msg: format!("unknown record kind {other:?}"),
                    });
                }
            }
        }
        if model.train_words.len() != n_words {
            return Err(ModelError::MalformedCheckpoint {
                line: 1,
                msg: format!(
                    "header announced {} words, found {}",
                    n_words,
                    model.train_words.len()
                ),
            });
        }
        if let Some(missing) = seen.iter().position(|&x| !x) {
            return Err(ModelError::MalformedCheckpoint {
                line: 1,
                msg: format!("missing table row (flat index {missing})"),
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

pub(crate) fn write_row<W: Write>(
    out: &mut W,
    kind: &str,
    key: &str,
    values: &[f64],
) -> std::io::Result<()> {
    write!(out, "{kind}\t{key}")?;
    for v in values {
        write!(out, "\t{v}")?;
    }
    writeln!(out)
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    field: &str,
    line: usize,
    what: &str,
) -> Result<T, ModelError> {
    field.parse().map_err(|_| ModelError::MalformedCheckpoint {
        line,
        msg: format!("bad {what} {field:?}"),
    })
}

/// Header-declared table sizes are bounded before any allocation, so a
/// corrupt checkpoint cannot demand gigabytes up front.
pub(crate) fn check_table_sizes(dim: usize, n_sememes: usize, n_rows: usize) -> Result<(), ModelError> {
    const MAX_ELEMENTS: usize = 50_000_000;
    let elements = dim
        .checked_mul(n_sememes)
        .filter(|&e| e <= MAX_ELEMENTS)
        .ok_or(ModelError::MalformedCheckpoint {
            line: 1,
            msg: "implausible embedding table size".into(),
        })?;
    let _ = elements;
    if n_rows > MAX_ELEMENTS {
        return Err(ModelError::MalformedCheckpoint {
            line: 1,
            msg: "implausible row count".into(),
        });
    }
    Ok(())
}

/// Gradients of the full SPSE objective, same layout as the model.
#[derive(Debug, Clone)]
pub struct SpseGradients {
    pub s: Vec<f64>,
    pub s_bar: Vec<f64>,
    pub word_bias: Vec<f64>,
    pub sememe_bias: Vec<f64>,
}

impl SpseGradients {
    pub fn flat(&self, idx: usize) -> f64 {
        let mut idx = idx;
        for table in [&self.s, &self.s_bar, &self.word_bias, &self.sememe_bias] {
            if idx < table.len() {
                return table[idx];
            }
            idx -= table.len();
        }
        panic!("gradient index out of range");
    }
}

struct SpseTrainData<'a> {
    emb: &'a WordEmbeddings,
    emb_rows: Vec<u32>,
    rows: Vec<Vec<u32>>,
    n_sememes: usize,
    pmi: &'a SememeCorrelation,
    lambda: f64,
    gram: Vec<f64>,
    w_sum: Vec<f64>,
    nnz: usize,
}

impl<'a> SpseTrainData<'a> {
    fn new(
        emb: &'a WordEmbeddings,
        emb_rows: Vec<u32>,
        rows: Vec<Vec<u32>>,
        n_sememes: usize,
        pmi: &'a SememeCorrelation,
        lambda: f64,
    ) -> Self {
        let dim = emb.dim();
        let mut gram = vec![0.0; dim * dim];
        let mut w_sum = vec![0.0; dim];
        for &row in &emb_rows {
            let w = emb.vector(row as usize);
            for a in 0..dim {
                w_sum[a] += w[a];
                for b in 0..dim {
                    gram[a * dim + b] += w[a] * w[b];
                }
            }
        }
        let nnz = rows.iter().map(Vec::len).sum();
        SpseTrainData {
            emb,
            emb_rows,
            rows,
            n_sememes,
            pmi,
            lambda,
            gram,
            w_sum,
            nnz,
        }
    }

    fn word_vec(&self, i: usize) -> &[f64] {
        self.emb.vector(self.emb_rows[i] as usize)
    }

    /// The complete unsampled objective: the squared cell residual over
    /// every word×sememe cell (annotated and zero alike), plus lambda times
    /// the squared pair residual over every ordered sememe pair, with
    /// unstored correlations treated as zero targets. Gram identities keep
    /// the cost at O((|W| + |S|) d^2 + nnz d) instead of O(|W||S| d).
    fn full_loss(&self, model: &SpseModel) -> f64 {
        let dim = model.dim;
        let n_words = self.emb_rows.len();
        let mut us = vec![0.0; self.n_sememes * dim];
        for j in 0..self.n_sememes {
            for d in 0..dim {
                us[j * dim + d] = model.s[j * dim + d] + model.s_bar[j * dim + d];
            }
        }
        let mut wb = vec![0.0; dim];
        for (i, &bias) in model.word_bias.iter().enumerate() {
            let w = self.word_vec(i);
            for d in 0..dim {
                wb[d] += bias * w[d];
            }
        }
        let sum_b: f64 = model.word_bias.iter().sum();
        let sum_b2: f64 = model.word_bias.iter().map(|b| b * b).sum();
        let sum_c: f64 = model.sememe_bias.iter().sum();
        let sum_c2: f64 = model.sememe_bias.iter().map(|c| c * c).sum();

        let mut squares = 0.0;
        for j in 0..self.n_sememes {
            let u = &us[j * dim..(j + 1) * dim];
            squares += quadratic_form(&self.gram, u, dim);
            squares += 2.0 * dot(&wb, u);
            squares += 2.0 * model.sememe_bias[j] * dot(&self.w_sum, u);
        }
        squares += self.n_sememes as f64 * sum_b2
            + n_words as f64 * sum_c2
            + 2.0 * sum_b * sum_c;

        let mut positives = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            let w = self.word_vec(i);
            for &j in row {
                let u = &us[j as usize * dim..(j as usize + 1) * dim];
                positives += dot(w, u) + model.word_bias[i] + model.sememe_bias[j as usize];
            }
        }
        let term1 = squares - 2.0 * positives + self.nnz as f64;

        let mut gram_bar = vec![0.0; dim * dim];
        for j in 0..self.n_sememes {
            let sb = model.s_bar(j);
            for a in 0..dim {
                for b in 0..dim {
                    gram_bar[a * dim + b] += sb[a] * sb[b];
                }
            }
        }
        let mut pair_squares = 0.0;
        for j in 0..self.n_sememes {
            pair_squares += quadratic_form(&gram_bar, model.s(j), dim);
        }
        let mut cross = 0.0;
        let mut targets = 0.0;
        for ((j, k), value) in self.pmi.iter_upper() {
            let orders: &[(u32, u32)] = if j == k { &[(j, k)] } else { &[(j, k), (k, j)] };
            for &(a, b) in orders {
                cross += dot(model.s(a as usize), model.s_bar(b as usize)) * value;
                targets += value * value;
            }
        }
        let term2 = self.lambda * (pair_squares - 2.0 * cross + targets);
        term1 + term2
    }

    /// Analytic gradient of `full_loss`, accumulated cell by cell and pair
    /// by pair with the same residual formulas the SGD steps use.
    fn full_gradient(&self, model: &SpseModel) -> SpseGradients {
        let dim = model.dim;
        let mut g = SpseGradients {
            s: vec![0.0; model.s.len()],
            s_bar: vec![0.0; model.s_bar.len()],
            word_bias: vec![0.0; model.word_bias.len()],
            sememe_bias: vec![0.0; model.sememe_bias.len()],
        };
        for (i, row) in self.rows.iter().enumerate() {
            let w = self.word_vec(i);
            for j in 0..self.n_sememes {
                let target = if row.binary_search(&(j as u32)).is_ok() {
                    1.0
                } else {
                    0.0
                };
                let err = dot(w, model.s(j))
                    + dot(w, model.s_bar(j))
                    + model.word_bias[i]
                    + model.sememe_bias[j]
                    - target;
                let coef = 2.0 * err;
                for d in 0..dim {
                    g.s[j * dim + d] += coef * w[d];
                    g.s_bar[j * dim + d] += coef * w[d];
                }
                g.word_bias[i] += coef;
                g.sememe_bias[j] += coef;
            }
        }
        for j in 0..self.n_sememes {
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

fn quadratic_form(gram: &[f64], u: &[f64], dim: usize) -> f64 {
    let mut total = 0.0;
    for a in 0..dim {
        let row = &gram[a * dim..(a + 1) * dim];
        total += u[a] * dot(row, u);
    }
    total
}

fn spse_train_data<'a>(
    train: &AnnotationSet,
    pmi: &'a SememeCorrelation,
    emb: &'a WordEmbeddings,
    lambda: f64,
) -> Result<(SpseTrainData<'a>, Vec<String>, usize), ModelError> {
    let mut kept_words = Vec::new();
    let mut emb_rows = Vec::new();
    let mut rows = Vec::new();
    let mut dropped = 0;
    for (i, word) in train.words().iter().enumerate() {
        match emb.row_of(word) {
            Some(row) => {
                kept_words.push(word.clone());
                emb_rows.push(row);
                rows.push(train.row(i).to_vec());
            }
            None => dropped += 1,
        }
    }
    if kept_words.is_empty() {
        return Err(ModelError::NoTrainableWords);
    }
    let data = SpseTrainData::new(emb, emb_rows, rows, train.sememe_count(), pmi, lambda);
    Ok((data, kept_words, dropped))
}

/// Minimizes the SPSE objective by per-sample SGD: every annotated cell,
/// zero cells resampled each epoch with probability `zero_sample_prob`,
/// both orders of every stored PMI entry, and zero-target sememe pairs at
/// the same probability. The learning rate decays linearly to a tenth of
/// `lr0`; everything is determined by `h.seed`.
pub fn train_spse(
    train: &AnnotationSet,
    pmi: &SememeCorrelation,
    emb: &WordEmbeddings,
    h: &SpseHyper,
) -> Result<TrainOutcome<SpseModel>, ModelError> {
    h.validate()?;
    let (data, kept_words, dropped) = spse_train_data(train, pmi, emb, h.lambda)?;
    let dim = emb.dim();
    let n_sememes = train.sememe_count();
    let mut rng = ChaCha8Rng::seed_from_u64(h.seed);
    let mut model = SpseModel {
        dim,
        n_sememes,
        s: uniform_init(&mut rng, n_sememes * dim, dim),
        s_bar: uniform_init(&mut rng, n_sememes * dim, dim),
        word_bias: vec![0.0; kept_words.len()],
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
                    let w = data.word_vec(word as usize);
                    let i = word as usize;
                    let j = sememe as usize;
                    let err = dot(w, model.s(j))
                        + dot(w, model.s_bar(j))
                        + model.word_bias[i]
                        + model.sememe_bias[j]
                        - target;
                    let step = 2.0 * lr * err;
                    for d in 0..dim {
                        model.s[j * dim + d] -= step * w[d];
                        model.s_bar[j * dim + d] -= step * w[d];
                    }
                    model.word_bias[i] -= step;
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

/// Full unsampled SPSE objective for an existing model against the same
/// train set and embeddings it was trained on.
pub fn spse_full_loss(
    train: &AnnotationSet,
    pmi: &SememeCorrelation,
    emb: &WordEmbeddings,
    model: &SpseModel,
    lambda: f64,
) -> Result<f64, ModelError> {
    let (data, kept_words, _) = spse_train_data(train, pmi, emb, lambda)?;
    check_word_alignment(&kept_words, &model.train_words)?;
    Ok(data.full_loss(model))
}

/// Analytic gradient of the full SPSE objective.
pub fn spse_full_gradient(
    train: &AnnotationSet,
    pmi: &SememeCorrelation,
    emb: &WordEmbeddings,
    model: &SpseModel,
    lambda: f64,
) -> Result<SpseGradients, ModelError> {
    let (data, kept_words, _) = spse_train_data(train, pmi, emb, lambda)?;
    check_word_alignment(&kept_words, &model.train_words)?;
    Ok(data.full_gradient(model))
}

pub(crate) fn check_word_alignment(
    expected: &[String],
    actual: &[String],
) -> Result<(), ModelError> {
    if expected != actual {
        return Err(ModelError::InvalidHyper(
            "model train words do not match the given train set".into(),
        ));
    }
    Ok(())
}

/// Builds an SPSE model directly from parameter tables; intended for tests
/// and hand-crafted scoring.
pub fn spse_model_from_parts(
    dim: usize,
    s: Vec<f64>,
    s_bar: Vec<f64>,
    word_bias: Vec<f64>,
    sememe_bias: Vec<f64>,
    train_words: Vec<String>,
) -> SpseModel {
    assert_eq!(s.len(), s_bar.len());
    assert_eq!(s.len() % dim, 0);
    let n_sememes = s.len() / dim;
    assert_eq!(sememe_bias.len(), n_sememes);
    assert_eq!(word_bias.len(), train_words.len());
    SpseModel {
        dim,
        n_sememes,
        s,
        s_bar,
        word_bias,
        sememe_bias,
        train_words,
    }
}

/// Convenience lookup used by ensembles: word -> embedding row as a map.
pub fn embedded_words(emb: &WordEmbeddings) -> HashMap<&str, u32> {
    (0..emb.len()).map(|row| (emb.word(row), row as u32)).collect()
}

//! GloVe: weighted least squares on log co-occurrence counts, optimised with
//! AdaGrad over shuffled nonzero entries.
//!
//! The objective is
//!
//! ```text
//! J = Σ_ij f(X_ij) (w_i · w̃_j + b_i + b̃_j − ln X_ij)²
//! f(x) = (x / x_max)^α  if x < x_max, else 1
//! ```

use std::cell::Cell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cooc::CoocMatrix;
use super::neighbors::WordVectors;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    /// Single thread, bit-reproducible for a given seed.
    Deterministic,
    /// Lock-free concurrent updates; only statistically equivalent to serial.
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GloveConfig {
    pub dim: usize,
    pub window: usize,
    pub x_max: f64,
    pub alpha: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub mode: TrainMode,
}

impl Default for GloveConfig {
    fn default() -> Self {
        GloveConfig {
            dim: 300,
            window: 10,
            x_max: 100.0,
            alpha: 0.75,
            learning_rate: 0.05,
            epochs: 15,
            seed: 42,
            mode: TrainMode::Deterministic,
        }
    }
}

/// False for NaN as well as for non-positive values.
fn positive(x: f64) -> bool {
    x.partial_cmp(&0.0) == Some(std::cmp::Ordering::Greater)
}

impl GloveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("glove: {what}")));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.window == 0 {
            return bad("window must be positive");
        }
        if !positive(self.x_max) {
            return bad("x_max must be positive");
        }
        if !positive(self.alpha) {
            return bad("alpha must be positive");
        }
        if !positive(self.learning_rate) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }

    pub fn weight(&self, x: f64) -> f64 {
        if x < self.x_max {
            (x / self.x_max).powf(self.alpha)
        } else {
            1.0
        }
    }
}

/// Word and context vectors with their biases, all indexed by vocabulary id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    words: Vec<String>,
    index: HashMap<String, u32>,
    dim: usize,
    pub w: Vec<f64>,
    pub w_ctx: Vec<f64>,
    pub b: Vec<f64>,
    pub b_ctx: Vec<f64>,
}

impl EmbeddingModel {
    /// Uniform initialisation in [−0.5/d, 0.5/d] for all four blocks.
    pub fn initialize<R: Rng>(words: Vec<String>, dim: usize, rng: &mut R) -> Self {
        let n = words.len();
        let half = 0.5 / dim as f64;
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-half..=half)).collect() };
        let w = draw(n * dim);
        let w_ctx = draw(n * dim);
        let b = draw(n);
        let b_ctx = draw(n);
        Self::from_parts(words, dim, w, w_ctx, b, b_ctx).expect("consistent shapes")
    }

    pub fn from_parts(
        words: Vec<String>,
        dim: usize,
        w: Vec<f64>,
        w_ctx: Vec<f64>,
        b: Vec<f64>,
        b_ctx: Vec<f64>,
    ) -> Result<Self> {
        let n = words.len();
        if w.len() != n * dim || w_ctx.len() != n * dim || b.len() != n || b_ctx.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "parameter blocks do not match {n} words × {dim} dimensions"
            )));
        }
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Ok(EmbeddingModel {
            words,
            index,
            dim,
            w,
            w_ctx,
            b,
            b_ctx,
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

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn is_finite(&self) -> bool {
        [&self.w, &self.w_ctx, &self.b, &self.b_ctx]
            .iter()
            .all(|block| block.iter().all(|v| v.is_finite()))
    }

    fn row<'a>(&self, block: &'a [f64], id: u32) -> &'a [f64] {
        let start = id as usize * self.dim;
        &block[start..start + self.dim]
    }

    /// `W[word] + W̃[word]`, or `None` for an unknown word.
    pub fn word_vector(&self, word: &str) -> Option<Vec<f64>> {
        let id = self.id(word)?;
        Some(
            self.row(&self.w, id)
                .iter()
                .zip(self.row(&self.w_ctx, id))
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Summed vectors for the whole vocabulary.
    pub fn word_vectors(&self) -> WordVectors {
        let data = self.w.iter().zip(&self.w_ctx).map(|(a, b)| a + b).collect();
        WordVectors::new(self.words.clone(), self.dim, data).expect("consistent shapes")
    }

    fn check(&self, cooc: &CoocMatrix) -> Result<()> {
        if cooc.vocab_size() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "co-occurrence matrix covers {} words, model has {}",
                cooc.vocab_size(),
                self.len()
            )));
        }
        if cooc.is_empty() {
            return Err(Error::Degenerate("co-occurrence matrix is empty".into()));
        }
        Ok(())
    }

    fn residual(&self, i: u32, j: u32, x: f64) -> f64 {
        let dot: f64 = self
            .row(&self.w, i)
            .iter()
            .zip(self.row(&self.w_ctx, j))
            .map(|(a, b)| a * b)
            .sum();
        dot + self.b[i as usize] + self.b_ctx[j as usize] - x.ln()
    }
}

/// Full objective J over every stored entry.
pub fn glove_loss(model: &EmbeddingModel, cooc: &CoocMatrix, cfg: &GloveConfig) -> Result<f64> {
    model.check(cooc)?;
    Ok(cooc
        .entries()
        .iter()
        .map(|e| {
            let r = model.residual(e.row, e.col, e.weight);
            cfg.weight(e.weight) * r * r
        })
        .sum())
}

/// Exact gradient of [`glove_loss`] with respect to every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w: Vec<f64>,
    pub w_ctx: Vec<f64>,
    pub b: Vec<f64>,
    pub b_ctx: Vec<f64>,
}

pub fn glove_gradient(model: &EmbeddingModel, cooc: &CoocMatrix, cfg: &GloveConfig) -> Result<Gradient> {
    model.check(cooc)?;
    let d = model.dim;
    let mut g = Gradient {
        w: vec![0.0; model.w.len()],
        w_ctx: vec![0.0; model.w_ctx.len()],
        b: vec![0.0; model.b.len()],
        b_ctx: vec![0.0; model.b_ctx.len()],
    };
    for e in cooc.entries() {
        let (i, j) = (e.row as usize, e.col as usize);
        let scale = 2.0 * cfg.weight(e.weight) * model.residual(e.row, e.col, e.weight);
        for k in 0..d {
            g.w[i * d + k] += scale * model.w_ctx[j * d + k];
            g.w_ctx[j * d + k] += scale * model.w[i * d + k];
        }
        g.b[i] += scale;
        g.b_ctx[j] += scale;
    }
    Ok(g)
}

trait Slot {
    fn get(&self) -> f64;
    fn set(&self, v: f64);
}

impl Slot for Cell<f64> {
    fn get(&self) -> f64 {
        Cell::get(self)
    }
    fn set(&self, v: f64) {
        Cell::set(self, v)
    }
}

// Hogwild updates: racing writes may lose an update, never tear a value.
impl Slot for AtomicU64 {
    fn get(&self) -> f64 {
        f64::from_bits(self.load(Ordering::Relaxed))
    }
    fn set(&self, v: f64) {
        self.store(f64::to_bits(v), Ordering::Relaxed)
    }
}

struct Params<'a, S> {
    dim: usize,
    w: &'a [S],
    w_ctx: &'a [S],
    b: &'a [S],
    b_ctx: &'a [S],
    gsq_w: &'a [S],
    gsq_w_ctx: &'a [S],
    gsq_b: &'a [S],
    gsq_b_ctx: &'a [S],
}

#[inline]
fn adagrad<S: Slot>(param: &S, gsq: &S, grad: f64, lr: f64) {
    let acc = gsq.get() + grad * grad;
    gsq.set(acc);
    param.set(param.get() - lr * grad / acc.sqrt());
}

impl<S: Slot> Params<'_, S> {
    /// One AdaGrad step on a single entry. Returns that entry's weighted
    /// squared residual before the update.
    fn step(&self, i: usize, j: usize, x: f64, cfg: &GloveConfig, scratch: &mut [f64]) -> f64 {
        let d = self.dim;
        let (wi, wj) = (&self.w[i * d..(i + 1) * d], &self.w_ctx[j * d..(j + 1) * d]);
        let dot: f64 = wi.iter().zip(wj).map(|(a, b)| a.get() * b.get()).sum();
        let r = dot + self.b[i].get() + self.b_ctx[j].get() - x.ln();
        let f = cfg.weight(x);
        let scale = 2.0 * f * r;
        let lr = cfg.learning_rate;
        // The context-side gradient needs w_i from before this step.
        for (s, v) in scratch.iter_mut().zip(wi) {
            *s = v.get();
        }
        for k in 0..d {
            adagrad(&wi[k], &self.gsq_w[i * d + k], scale * wj[k].get(), lr);
        }
        for k in 0..d {
            adagrad(&wj[k], &self.gsq_w_ctx[j * d + k], scale * scratch[k], lr);
        }
        adagrad(&self.b[i], &self.gsq_b[i], scale, lr);
        adagrad(&self.b_ctx[j], &self.gsq_b_ctx[j], scale, lr);
        f * r * r
    }
}

/// Loss trajectory of a training run. `losses[0]` is the loss of the
/// initialised model, `losses[e]` the loss after epoch `e`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub losses: Vec<f64>,
}

/// Trains a fresh model on `cooc` over the words of `vocab`.
pub fn glove_train(cooc: &CoocMatrix, vocab: &Vocabulary, cfg: &GloveConfig) -> Result<(EmbeddingModel, TrainReport)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = EmbeddingModel::initialize(vocab.words().to_vec(), cfg.dim, &mut rng);
    let report = train_model(&mut model, cooc, cfg, &mut rng)?;
    Ok((model, report))
}

/// Runs `cfg.epochs` AdaGrad passes over `model` in place.
pub fn train_model<R: Rng>(
    model: &mut EmbeddingModel,
    cooc: &CoocMatrix,
    cfg: &GloveConfig,
    rng: &mut R,
) -> Result<TrainReport> {
    cfg.validate()?;
    let initial = glove_loss(model, cooc, cfg)?;
    let mut report = TrainReport { losses: vec![initial] };
    if cfg.epochs == 0 {
        return Ok(report);
    }
    let n = model.len();
    let d = model.dim;
    let mut gsq = [vec![1.0; n * d], vec![1.0; n * d], vec![1.0; n], vec![1.0; n]];
    let mut order: Vec<usize> = (0..cooc.len()).collect();
    let entries = cooc.entries();

    for epoch in 1..=cfg.epochs {
        order.shuffle(rng);
        match cfg.mode {
            TrainMode::Deterministic => {
                let [gw, gwc, gb, gbc] = &mut gsq;
                let params = Params {
                    dim: d,
                    w: Cell::from_mut(model.w.as_mut_slice()).as_slice_of_cells(),
                    w_ctx: Cell::from_mut(model.w_ctx.as_mut_slice()).as_slice_of_cells(),
                    b: Cell::from_mut(model.b.as_mut_slice()).as_slice_of_cells(),
                    b_ctx: Cell::from_mut(model.b_ctx.as_mut_slice()).as_slice_of_cells(),
                    gsq_w: Cell::from_mut(gw.as_mut_slice()).as_slice_of_cells(),
                    gsq_w_ctx: Cell::from_mut(gwc.as_mut_slice()).as_slice_of_cells(),
                    gsq_b: Cell::from_mut(gb.as_mut_slice()).as_slice_of_cells(),
                    gsq_b_ctx: Cell::from_mut(gbc.as_mut_slice()).as_slice_of_cells(),
                };
                let mut scratch = vec![0.0; d];
                for &k in &order {
                    let e = entries[k];
                    params.step(e.row as usize, e.col as usize, e.weight, cfg, &mut scratch);
                }
            }
            TrainMode::Parallel => {
                let atomics = |v: &[f64]| -> Vec<AtomicU64> { v.iter().map(|x| AtomicU64::new(x.to_bits())).collect() };
                let blocks = [
                    atomics(&model.w),
                    atomics(&model.w_ctx),
                    atomics(&model.b),
                    atomics(&model.b_ctx),
                    atomics(&gsq[0]),
                    atomics(&gsq[1]),
                    atomics(&gsq[2]),
                    atomics(&gsq[3]),
                ];
                let params = Params {
                    dim: d,
                    w: &blocks[0],
                    w_ctx: &blocks[1],
                    b: &blocks[2],
                    b_ctx: &blocks[3],
                    gsq_w: &blocks[4],
                    gsq_w_ctx: &blocks[5],
                    gsq_b: &blocks[6],
                    gsq_b_ctx: &blocks[7],
                };
                let chunk = order.len().div_ceil(rayon::current_num_threads()).max(1);
                order.par_chunks(chunk).for_each(|part| {
                    let mut scratch = vec![0.0; d];
                    for &k in part {
                        let e = entries[k];
                        params.step(e.row as usize, e.col as usize, e.weight, cfg, &mut scratch);
                    }
                });
                let back = |src: &[AtomicU64], dst: &mut [f64]| {
                    for (s, d) in src.iter().zip(dst) {
                        *d = f64::from_bits(s.load(Ordering::Relaxed));
                    }
                };
                back(&blocks[0], &mut model.w);
                back(&blocks[1], &mut model.w_ctx);
                back(&blocks[2], &mut model.b);
                back(&blocks[3], &mut model.b_ctx);
                for (k, g) in gsq.iter_mut().enumerate() {
                    back(&blocks[4 + k], g);
                }
            }
        }
        let loss = glove_loss(model, cooc, cfg)?;
        log::info!("glove epoch {epoch}: loss {loss:.6}");
        if !loss.is_finite() || !model.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        report.losses.push(loss);
    }
    Ok(report)
}

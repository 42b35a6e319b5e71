//! Small from-scratch LSTM language model: deterministic initialization,
//! truncated-BPTT training with plain SGD and gradient clipping, sequential
//! per-sentence adaptation, surprisal scoring, and a finite-difference
//! gradient check.
//!
//! Everything runs in f64. Shapes are feature-major: activations are
//! `dim x batch` matrices, gate blocks are stacked `[i; f; g; o]` along the
//! first axis.

use ndarray::{s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::util::fnv1a64;

const LOG2_E: f64 = std::f64::consts::LOG2_E;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub bptt_len: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub train_lr: f64,
    pub adapt_lr: f64,
    pub grad_clip: f64,
    pub seed: u64,
    /// Carry the hidden state across stimulus boundaries during adaptation
    /// (parameters always carry). Off by default: each stimulus is scored and
    /// adapted from a fresh state.
    pub carry_hidden: bool,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig {
            embed_dim: 64,
            hidden_dim: 128,
            num_layers: 2,
            bptt_len: 32,
            batch_size: 16,
            epochs: 2,
            train_lr: 1.0,
            adapt_lr: 1.0,
            grad_clip: 5.0,
            seed: 0,
            carry_hidden: false,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim < 1 || self.hidden_dim < 1 || self.num_layers < 1 {
            return Err(Error::Invalid("lstm dimensions must be >= 1".into()));
        }
        if self.bptt_len < 1 || self.batch_size < 1 {
            return Err(Error::Invalid("bptt_len and batch_size must be >= 1".into()));
        }
        if self.train_lr <= 0.0 || self.adapt_lr <= 0.0 {
            return Err(Error::Invalid("learning rates must be > 0".into()));
        }
        if self.grad_clip <= 0.0 {
            return Err(Error::Invalid("grad_clip must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LayerParams {
    /// input weights, 4H x in_dim
    w: Array2<f64>,
    /// recurrent weights, 4H x H
    u: Array2<f64>,
    /// bias, 4H
    b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub config: LstmConfig,
    vocab: Vocabulary,
    /// E x V
    embedding: Array2<f64>,
    layers: Vec<LayerParams>,
    /// V x H
    w_out: Array2<f64>,
    /// V
    b_out: Array1<f64>,
}

/// Per-layer hidden and cell state, H x B each.
#[derive(Debug, Clone)]
pub struct HiddenState {
    h: Vec<Array2<f64>>,
    c: Vec<Array2<f64>>,
}

struct StepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    /// post-activation gates [i; f; g; o], 4H x B
    gates: Array2<f64>,
    tanh_c: Array2<f64>,
}

/// Parameter gradients, mirroring `LstmModel`'s tensors.
struct Grads {
    embedding: Array2<f64>,
    layers: Vec<LayerParams>,
    w_out: Array2<f64>,
    b_out: Array1<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmModel {
    /// Deterministic initialization: all weights uniform in [-a, a] with
    /// a = 1/sqrt(hidden_dim), biases zero except the forget gate's, which
    /// starts at one.
    pub fn init(config: &LstmConfig, vocab: &Vocabulary, seed: u64) -> Result<LstmModel> {
        config.validate()?;
        let v = vocab.len();
        let (e, h, l) = (config.embed_dim, config.hidden_dim, config.num_layers);
        let a = 1.0 / (h as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |rows: usize, cols: usize| -> Array2<f64> {
            Array2::from_shape_fn((rows, cols), |_| rng.random::<f64>() * 2.0 * a - a)
        };

        let embedding = uniform(e, v);
        let mut layers = Vec::with_capacity(l);
        for li in 0..l {
            let in_dim = if li == 0 { e } else { h };
            let w = uniform(4 * h, in_dim);
            let u = uniform(4 * h, h);
            let mut b = Array1::zeros(4 * h);
            b.slice_mut(s![h..2 * h]).fill(1.0);
            layers.push(LayerParams { w, u, b });
        }
        let w_out = uniform(v, h);
        let b_out = Array1::zeros(v);
        Ok(LstmModel {
            config: config.clone(),
            vocab: vocab.clone(),
            embedding,
            layers,
            w_out,
            b_out,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn zero_state(&self, batch: usize) -> HiddenState {
        let h = self.config.hidden_dim;
        HiddenState {
            h: (0..self.config.num_layers).map(|_| Array2::zeros((h, batch))).collect(),
            c: (0..self.config.num_layers).map(|_| Array2::zeros((h, batch))).collect(),
        }
    }

    fn embed(&self, ids: &[TokenId]) -> Array2<f64> {
        let e = self.config.embed_dim;
        Array2::from_shape_fn((e, ids.len()), |(i, j)| self.embedding[[i, ids[j] as usize]])
    }

    /// One LSTM step for one layer. Returns the new h and fills the cache.
    fn step(
        &self,
        layer: usize,
        x: &Array2<f64>,
        state: &mut HiddenState,
        caches: Option<&mut Vec<StepCache>>,
    ) -> Array2<f64> {
        let hd = self.config.hidden_dim;
        let p = &self.layers[layer];
        let mut z = p.w.dot(x) + p.u.dot(&state.h[layer]);
        z += &p.b.view().insert_axis(Axis(1));

        let mut gates = z;
        gates.slice_mut(s![0..hd, ..]).mapv_inplace(sigmoid);
        gates.slice_mut(s![hd..2 * hd, ..]).mapv_inplace(sigmoid);
        gates.slice_mut(s![2 * hd..3 * hd, ..]).mapv_inplace(f64::tanh);
        gates.slice_mut(s![3 * hd..4 * hd, ..]).mapv_inplace(sigmoid);

        let i = gates.slice(s![0..hd, ..]);
        let f = gates.slice(s![hd..2 * hd, ..]);
        let g = gates.slice(s![2 * hd..3 * hd, ..]);
        let o = gates.slice(s![3 * hd..4 * hd, ..]);

        let c = &f * &state.c[layer] + &i * &g;
        let tanh_c = c.mapv(f64::tanh);
        let h_new = &o * &tanh_c;

        if let Some(caches) = caches {
            caches.push(StepCache {
                x: x.clone(),
                h_prev: state.h[layer].clone(),
                c_prev: state.c[layer].clone(),
                gates: gates.clone(),
                tanh_c: tanh_c.clone(),
            });
        }
        state.c[layer] = c;
        state.h[layer] = h_new.clone();
        h_new
    }

    /// Runs the stack over a window of per-timestep input ids. Returns the
    /// top-layer hidden state per timestep; caches (if requested) are indexed
    /// `[t][layer]`.
    fn run_window(
        &self,
        inputs: &[Vec<TokenId>],
        state: &mut HiddenState,
        mut caches: Option<&mut Vec<Vec<StepCache>>>,
    ) -> Vec<Array2<f64>> {
        let mut tops = Vec::with_capacity(inputs.len());
        for ids in inputs {
            let mut x = self.embed(ids);
            let mut step_caches = caches.as_deref_mut().map(|_| Vec::new());
            for layer in 0..self.config.num_layers {
                x = self.step(layer, &x, state, step_caches.as_mut());
            }
            if let Some(all) = caches.as_deref_mut() {
                all.push(step_caches.unwrap());
            }
            tops.push(x);
        }
        tops
    }

    /// Column-stable softmax of `w_out * h + b_out`.
    fn output_probs(&self, top: &Array2<f64>) -> Array2<f64> {
        let mut logits = self.w_out.dot(top);
        logits += &self.b_out.view().insert_axis(Axis(1));
        for mut col in logits.axis_iter_mut(Axis(1)) {
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            col.mapv_inplace(|v| (v - max).exp());
            let sum = col.sum();
            col.mapv_inplace(|v| v / sum);
        }
        logits
    }

    /// Per-position next-token distributions plus the final hidden state.
    /// `ids` are the input tokens (callers prepend `<bos>` for sentence
    /// scoring); the i-th distribution conditions on `ids[..=i]`.
    pub fn forward(&self, ids: &[TokenId]) -> Result<(Vec<Array1<f64>>, HiddenState)> {
        if ids.is_empty() {
            return Err(Error::Invalid("forward needs a non-empty input".into()));
        }
        let mut state = self.zero_state(1);
        let inputs: Vec<Vec<TokenId>> = ids.iter().map(|&id| vec![id]).collect();
        let tops = self.run_window(&inputs, &mut state, None);
        let probs = tops
            .iter()
            .map(|top| self.output_probs(top).index_axis(Axis(1), 0).to_owned())
            .collect();
        Ok((probs, state))
    }

    /// Total surprisal of a sentence in bits, including `<eos>`; the hidden
    /// state is reset per sentence.
    pub fn surprisal(&self, sentence: &[TokenId]) -> f64 {
        let mut inputs = Vec::with_capacity(sentence.len() + 1);
        inputs.push(self.vocab.bos_id());
        inputs.extend_from_slice(sentence);
        let mut targets = Vec::with_capacity(sentence.len() + 1);
        targets.extend_from_slice(sentence);
        targets.push(self.vocab.eos_id());

        let (probs, _) = self.forward(&inputs).expect("inputs are non-empty");
        probs
            .iter()
            .zip(&targets)
            .map(|(p, &y)| -p[y as usize].ln() * LOG2_E)
            .sum()
    }

    fn zero_grads(&self) -> Grads {
        Grads {
            embedding: Array2::zeros(self.embedding.raw_dim()),
            layers: self
                .layers
                .iter()
                .map(|p| LayerParams {
                    w: Array2::zeros(p.w.raw_dim()),
                    u: Array2::zeros(p.u.raw_dim()),
                    b: Array1::zeros(p.b.raw_dim()),
                })
                .collect(),
            w_out: Array2::zeros(self.w_out.raw_dim()),
            b_out: Array1::zeros(self.b_out.raw_dim()),
        }
    }

    /// Forward + backward over one window. Returns summed cross-entropy in
    /// nats and the number of target tokens; gradients are for the mean
    /// per-token loss.
    fn window_grads(
        &self,
        inputs: &[Vec<TokenId>],
        targets: &[Vec<TokenId>],
        state: &mut HiddenState,
    ) -> (Grads, f64, usize) {
        debug_assert_eq!(inputs.len(), targets.len());
        let hd = self.config.hidden_dim;
        let n_layers = self.config.num_layers;
        let mut caches: Vec<Vec<StepCache>> = Vec::with_capacity(inputs.len());
        let tops = self.run_window(inputs, state, Some(&mut caches));

        let n_targets: usize = targets.iter().map(Vec::len).sum();
        let scale = 1.0 / n_targets as f64;
        let mut grads = self.zero_grads();
        let mut loss_sum = 0.0;

        // d-loss w.r.t. h and c flowing backward in time, per layer
        let batch = inputs[0].len();
        let mut dh: Vec<Array2<f64>> = (0..n_layers).map(|_| Array2::zeros((hd, batch))).collect();
        let mut dc: Vec<Array2<f64>> = (0..n_layers).map(|_| Array2::zeros((hd, batch))).collect();

        for t in (0..inputs.len()).rev() {
            let probs = self.output_probs(&tops[t]);
            let mut dlogits = probs;
            for (b, &y) in targets[t].iter().enumerate() {
                loss_sum -= dlogits[[y as usize, b]].ln();
                dlogits[[y as usize, b]] -= 1.0;
            }
            dlogits *= scale;
            grads.w_out += &dlogits.dot(&tops[t].t());
            grads.b_out += &dlogits.sum_axis(Axis(1));
            dh[n_layers - 1] += &self.w_out.t().dot(&dlogits);

            for layer in (0..n_layers).rev() {
                let cache = &caches[t][layer];
                let i = cache.gates.slice(s![0..hd, ..]);
                let f = cache.gates.slice(s![hd..2 * hd, ..]);
                let g = cache.gates.slice(s![2 * hd..3 * hd, ..]);
                let o = cache.gates.slice(s![3 * hd..4 * hd, ..]);

                let dh_t = &dh[layer];
                let d_o = dh_t * &cache.tanh_c;
                let dct = &dc[layer] + &(dh_t * &o * &cache.tanh_c.mapv(|v| 1.0 - v * v));
                let d_i = &dct * &g;
                let d_f = &dct * &cache.c_prev;
                let d_g = &dct * &i;
                dc[layer] = &dct * &f;

                let mut dz = Array2::zeros((4 * hd, batch));
                dz.slice_mut(s![0..hd, ..]).assign(&(&d_i * &i * &i.mapv(|v| 1.0 - v)));
                dz.slice_mut(s![hd..2 * hd, ..]).assign(&(&d_f * &f * &f.mapv(|v| 1.0 - v)));
                dz.slice_mut(s![2 * hd..3 * hd, ..]).assign(&(&d_g * &g.mapv(|v| 1.0 - v * v)));
                dz.slice_mut(s![3 * hd..4 * hd, ..]).assign(&(&d_o * &o * &o.mapv(|v| 1.0 - v)));

                let p = &self.layers[layer];
                grads.layers[layer].w += &dz.dot(&cache.x.t());
                grads.layers[layer].u += &dz.dot(&cache.h_prev.t());
                grads.layers[layer].b += &dz.sum_axis(Axis(1));

                let dx = p.w.t().dot(&dz);
                if layer == 0 {
                    for (b, &id) in inputs[t].iter().enumerate() {
                        let mut col = grads.embedding.column_mut(id as usize);
                        col += &dx.column(b);
                    }
                } else {
                    dh[layer - 1] += &dx;
                }
                dh[layer] = p.u.t().dot(&dz);
            }
        }
        (grads, loss_sum, n_targets)
    }

    fn grad_norm(grads: &Grads) -> f64 {
        let mut sq = 0.0;
        let mut add = |it: &mut dyn Iterator<Item = &f64>| {
            for v in it {
                sq += v * v;
            }
        };
        add(&mut grads.embedding.iter());
        for l in &grads.layers {
            add(&mut l.w.iter());
            add(&mut l.u.iter());
            add(&mut l.b.iter());
        }
        add(&mut grads.w_out.iter());
        add(&mut grads.b_out.iter());
        sq.sqrt()
    }

    /// SGD step with global-norm clipping. Errors on non-finite gradients.
    fn apply_grads(&mut self, grads: &Grads, lr: f64) -> Result<()> {
        let norm = Self::grad_norm(grads);
        if !norm.is_finite() {
            return Err(Error::Diverged(format!("gradient norm is {norm}")));
        }
        let clip = self.config.grad_clip;
        let step = if norm > clip { lr * clip / norm } else { lr };
        self.embedding.scaled_add(-step, &grads.embedding);
        for (p, g) in self.layers.iter_mut().zip(&grads.layers) {
            p.w.scaled_add(-step, &g.w);
            p.u.scaled_add(-step, &g.u);
            p.b.scaled_add(-step, &g.b);
        }
        self.w_out.scaled_add(-step, &grads.w_out);
        self.b_out.scaled_add(-step, &grads.b_out);
        Ok(())
    }

    /// Trains a copy of this model on the corpus with truncated BPTT over a
    /// concatenated `<bos> ... <eos>` sentence stream. Returns the trained
    /// model and the per-epoch mean cross-entropy in bits.
    pub fn trained(&self, corpus: &Corpus) -> Result<(LstmModel, Vec<f64>)> {
        if corpus.sentences.is_empty() || corpus.token_count == 0 {
            return Err(Error::EmptyCorpus(corpus.source_name.clone()));
        }
        let bos = self.vocab.bos_id();
        let eos = self.vocab.eos_id();
        let mut stream: Vec<TokenId> =
            Vec::with_capacity(corpus.token_count + 2 * corpus.sentences.len());
        for sentence in &corpus.sentences {
            stream.push(bos);
            stream.extend_from_slice(sentence);
            stream.push(eos);
        }

        let batch = self.config.batch_size.min(stream.len() / 2).max(1);
        let row_len = stream.len() / batch;
        let row = |b: usize, t: usize| stream[b * row_len + t];

        let mut model = self.clone();
        let mut curve = Vec::with_capacity(self.config.epochs);
        for _epoch in 0..self.config.epochs {
            let mut state = model.zero_state(batch);
            let mut nats = 0.0;
            let mut count = 0usize;
            let mut t0 = 0;
            while t0 + 1 < row_len {
                let t1 = (t0 + self.config.bptt_len).min(row_len - 1);
                let inputs: Vec<Vec<TokenId>> =
                    (t0..t1).map(|t| (0..batch).map(|b| row(b, t)).collect()).collect();
                let targets: Vec<Vec<TokenId>> =
                    (t0..t1).map(|t| (0..batch).map(|b| row(b, t + 1)).collect()).collect();
                let (grads, loss, n) = model.window_grads(&inputs, &targets, &mut state);
                model.apply_grads(&grads, self.config.train_lr)?;
                nats += loss;
                count += n;
                t0 = t1;
            }
            let bits = nats / count.max(1) as f64 * LOG2_E;
            if !bits.is_finite() {
                return Err(Error::Diverged(format!("epoch loss is {bits}")));
            }
            curve.push(bits);
        }
        Ok((model, curve))
    }

    /// Sequential adaptation: one forward, one backward, one SGD update per
    /// stimulus, in the given order. The base model is untouched.
    pub fn adapt(&self, stimuli: &[Vec<TokenId>], adapt_lr: f64) -> Result<LstmModel> {
        let mut state = AdaptState::new(self);
        for sentence in stimuli {
            state.step(sentence, adapt_lr)?;
        }
        Ok(state.into_model())
    }

    /// Central finite-difference check of the analytic gradient on up to
    /// `max_params` evenly spaced parameters per tensor. Returns the largest
    /// relative error. `only` restricts the check to named tensors.
    pub fn grad_check(
        &self,
        input: &[TokenId],
        epsilon: f64,
        max_params: usize,
        only: Option<&[&str]>,
    ) -> Result<f64> {
        if input.is_empty() {
            return Err(Error::Invalid("grad_check needs a non-empty input".into()));
        }
        let (inputs, targets) = sentence_window(&self.vocab, input);
        let (grads, _, _) = self.window_grads(&inputs, &targets, &mut self.zero_state(1));

        let names = self.tensor_names();
        let selected: Vec<usize> = (0..names.len())
            .filter(|&i| only.map_or(true, |sel| sel.contains(&names[i].as_str())))
            .collect();
        if selected.is_empty() {
            return Err(Error::Invalid("no tensors selected".into()));
        }
        let per_tensor = max_params.div_ceil(selected.len()).max(1);

        let mut model = self.clone();
        let mut worst = 0.0f64;
        for &ti in &selected {
            let len = model.tensor_len(ti);
            let k = per_tensor.min(len);
            for j in 0..k {
                let idx = j * len / k;
                let analytic = tensor_get(&grads, ti, idx);
                tensor_add(&mut model, ti, idx, epsilon);
                let (_, up, n) = model.window_grads(&inputs, &targets, &mut model.zero_state(1));
                tensor_add(&mut model, ti, idx, -2.0 * epsilon);
                let (_, down, _) = model.window_grads(&inputs, &targets, &mut model.zero_state(1));
                tensor_add(&mut model, ti, idx, epsilon);
                let numeric = (up - down) / (2.0 * epsilon * n as f64);
                let gap = (analytic - numeric).abs();
                // near-zero pairs compare absolutely: finite-difference noise
                // on a zero gradient is not a relative disagreement
                if gap > 1e-8 {
                    worst = worst.max(gap / analytic.abs().max(numeric.abs()));
                }
            }
        }
        Ok(worst)
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = vec!["embedding".to_string()];
        for l in 0..self.config.num_layers {
            names.push(format!("layer{l}.w"));
            names.push(format!("layer{l}.u"));
            names.push(format!("layer{l}.b"));
        }
        names.push("out.w".into());
        names.push("out.b".into());
        names
    }

    fn tensor_len(&self, idx: usize) -> usize {
        match self.tensor_slot(idx) {
            TensorSlot::Embedding => self.embedding.len(),
            TensorSlot::LayerW(l) => self.layers[l].w.len(),
            TensorSlot::LayerU(l) => self.layers[l].u.len(),
            TensorSlot::LayerB(l) => self.layers[l].b.len(),
            TensorSlot::OutW => self.w_out.len(),
            TensorSlot::OutB => self.b_out.len(),
        }
    }

    fn tensor_slot(&self, idx: usize) -> TensorSlot {
        if idx == 0 {
            return TensorSlot::Embedding;
        }
        let rest = idx - 1;
        let per_layer = 3;
        if rest < self.config.num_layers * per_layer {
            let layer = rest / per_layer;
            match rest % per_layer {
                0 => TensorSlot::LayerW(layer),
                1 => TensorSlot::LayerU(layer),
                _ => TensorSlot::LayerB(layer),
            }
        } else if rest == self.config.num_layers * per_layer {
            TensorSlot::OutW
        } else {
            TensorSlot::OutB
        }
    }

    /// All parameters in dump order.
    fn param_iter(&self) -> impl Iterator<Item = f64> + '_ {
        let layer_params = self
            .layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.u.iter()).chain(l.b.iter()));
        self.embedding
            .iter()
            .chain(layer_params)
            .chain(self.w_out.iter())
            .chain(self.b_out.iter())
            .copied()
    }

    pub fn param_count(&self) -> usize {
        self.embedding.len()
            + self.layers.iter().map(|l| l.w.len() + l.u.len() + l.b.len()).sum::<usize>()
            + self.w_out.len()
            + self.b_out.len()
    }

    // -- checkpoint format ---------------------------------------------------

    /// Versioned header (config + vocabulary hash), blank line, then the raw
    /// little-endian f64 parameter dump.
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut header = String::from("primelm-lstm 1\n");
        header.push_str(&format!("embed_dim={}\n", c.embed_dim));
        header.push_str(&format!("hidden_dim={}\n", c.hidden_dim));
        header.push_str(&format!("num_layers={}\n", c.num_layers));
        header.push_str(&format!("bptt_len={}\n", c.bptt_len));
        header.push_str(&format!("batch_size={}\n", c.batch_size));
        header.push_str(&format!("epochs={}\n", c.epochs));
        header.push_str(&format!("train_lr={}\n", c.train_lr));
        header.push_str(&format!("adapt_lr={}\n", c.adapt_lr));
        header.push_str(&format!("grad_clip={}\n", c.grad_clip));
        header.push_str(&format!("seed={}\n", c.seed));
        header.push_str(&format!("carry_hidden={}\n", u8::from(c.carry_hidden)));
        header.push_str(&format!("vocab_size={}\n", self.vocab.len()));
        header.push_str(&format!("vocab_hash={:016x}\n", fnv1a64(self.vocab.to_tsv().as_bytes())));
        header.push_str(&format!("params={}\n", self.param_count()));
        header.push('\n');

        let mut bytes = header.into_bytes();
        bytes.reserve(self.param_count() * 8);
        for v in self.param_iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes
    }

    /// Loads a checkpoint; the supplied vocabulary must hash to the header's
    /// fingerprint.
    pub fn from_bytes(bytes: &[u8], vocab: &Vocabulary) -> Result<LstmModel> {
        let what = "lstm checkpoint";
        let err = |msg: String| Error::Parse { what, line: 0, msg };

        let sep = find_blank_line(bytes).ok_or_else(|| err("missing header terminator".into()))?;
        let header = std::str::from_utf8(&bytes[..sep + 1])
            .map_err(|e| err(format!("header is not utf-8: {e}")))?;
        let body = &bytes[sep + 2..];

        let mut lines = header.lines();
        if lines.next() != Some("primelm-lstm 1") {
            return Err(err("bad magic".into()));
        }
        let mut fields = std::collections::HashMap::new();
        for line in lines {
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("bad header line `{line}`")))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| err(format!("missing field `{k}`")));
        let get_usize = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| err(format!("bad integer field `{k}`")))
        };
        let get_f64 = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad float field `{k}`")))
        };

        let config = LstmConfig {
            embed_dim: get_usize("embed_dim")?,
            hidden_dim: get_usize("hidden_dim")?,
            num_layers: get_usize("num_layers")?,
            bptt_len: get_usize("bptt_len")?,
            batch_size: get_usize("batch_size")?,
            epochs: get_usize("epochs")?,
            train_lr: get_f64("train_lr")?,
            adapt_lr: get_f64("adapt_lr")?,
            grad_clip: get_f64("grad_clip")?,
            seed: get_usize("seed")? as u64,
            carry_hidden: get_usize("carry_hidden")? != 0,
        };
        config.validate()?;
        if config.embed_dim > 1 << 14 || config.hidden_dim > 1 << 14 || config.num_layers > 64 {
            return Err(err("implausible model dimensions".into()));
        }

        let vocab_size = get_usize("vocab_size")?;
        if vocab_size != vocab.len() {
            return Err(Error::VocabMismatch(format!(
                "checkpoint expects {vocab_size} types, vocabulary has {}",
                vocab.len()
            )));
        }
        let want_hash = get("vocab_hash")?.clone();
        let have_hash = format!("{:016x}", fnv1a64(vocab.to_tsv().as_bytes()));
        if want_hash != have_hash {
            return Err(Error::VocabMismatch(format!(
                "checkpoint vocab hash {want_hash} != supplied {have_hash}"
            )));
        }

        let mut model = LstmModel::init(&config, vocab, 0)?;
        let expect_params = model.param_count();
        if get_usize("params")? != expect_params {
            return Err(err(format!("param count mismatch; expected {expect_params}")));
        }
        if body.len() != expect_params * 8 {
            return Err(err(format!(
                "parameter dump has {} bytes, expected {}",
                body.len(),
                expect_params * 8
            )));
        }
        let mut values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut fill = |arr: &mut [f64]| {
            for v in arr {
                *v = values.next().unwrap();
            }
        };
        fill(model.embedding.as_slice_mut().unwrap());
        for l in &mut model.layers {
            fill(l.w.as_slice_mut().unwrap());
            fill(l.u.as_slice_mut().unwrap());
            fill(l.b.as_slice_mut().unwrap());
        }
        fill(model.w_out.as_slice_mut().unwrap());
        fill(model.b_out.as_slice_mut().unwrap());
        if model.param_iter().any(|v| !v.is_finite()) {
            return Err(err("non-finite parameter in dump".into()));
        }
        Ok(model)
    }

    #[cfg(test)]
    fn zero_output_layer(&mut self) {
        self.w_out.fill(0.0);
        self.b_out.fill(0.0);
    }
}

enum TensorSlot {
    Embedding,
    LayerW(usize),
    LayerU(usize),
    LayerB(usize),
    OutW,
    OutB,
}

fn tensor_get(grads: &Grads, idx: usize, flat: usize) -> f64 {
    // mirrors LstmModel::tensor_slot's layout
    if idx == 0 {
        return grads.embedding.as_slice().unwrap()[flat];
    }
    let rest = idx - 1;
    if rest < grads.layers.len() * 3 {
        let l = &grads.layers[rest / 3];
        return match rest % 3 {
            0 => l.w.as_slice().unwrap()[flat],
            1 => l.u.as_slice().unwrap()[flat],
            _ => l.b.as_slice().unwrap()[flat],
        };
    }
    if rest == grads.layers.len() * 3 {
        grads.w_out.as_slice().unwrap()[flat]
    } else {
        grads.b_out.as_slice().unwrap()[flat]
    }
}

fn tensor_add(model: &mut LstmModel, idx: usize, flat: usize, delta: f64) {
    match model.tensor_slot(idx) {
        TensorSlot::Embedding => model.embedding.as_slice_mut().unwrap()[flat] += delta,
        TensorSlot::LayerW(l) => model.layers[l].w.as_slice_mut().unwrap()[flat] += delta,
        TensorSlot::LayerU(l) => model.layers[l].u.as_slice_mut().unwrap()[flat] += delta,
        TensorSlot::LayerB(l) => model.layers[l].b.as_slice_mut().unwrap()[flat] += delta,
        TensorSlot::OutW => model.w_out.as_slice_mut().unwrap()[flat] += delta,
        TensorSlot::OutB => model.b_out.as_slice_mut().unwrap()[flat] += delta,
    }
}

fn find_blank_line(bytes: &[u8]) -> Option<usize> {
    bytes.windows(2).position(|w| w == b"\n\n")
}

/// Single-sentence window: inputs `<bos> w1..wn`, targets `w1..wn <eos>`.
fn sentence_window(vocab: &Vocabulary, sentence: &[TokenId]) -> (Vec<Vec<TokenId>>, Vec<Vec<TokenId>>) {
    let mut inputs = Vec::with_capacity(sentence.len() + 1);
    let mut targets = Vec::with_capacity(sentence.len() + 1);
    inputs.push(vec![vocab.bos_id()]);
    for &id in sentence {
        inputs.push(vec![id]);
        targets.push(vec![id]);
    }
    targets.push(vec![vocab.eos_id()]);
    (inputs, targets)
}

/// A working copy of a model being primed; the base model stays untouched.
pub struct AdaptState {
    model: LstmModel,
    carried: Option<HiddenState>,
}

impl AdaptState {
    pub fn new(base: &LstmModel) -> AdaptState {
        AdaptState {
            model: base.clone(),
            carried: None,
        }
    }

    /// One forward/backward/update pass on a single stimulus sentence.
    pub fn step(&mut self, sentence: &[TokenId], adapt_lr: f64) -> Result<()> {
        let (inputs, targets) = sentence_window(&self.model.vocab, sentence);
        let mut state = if self.model.config.carry_hidden {
            self.carried.take().unwrap_or_else(|| self.model.zero_state(1))
        } else {
            self.model.zero_state(1)
        };
        let (grads, loss, _) = self.model.window_grads(&inputs, &targets, &mut state);
        if !loss.is_finite() {
            return Err(Error::Diverged(format!("adaptation loss is {loss}")));
        }
        self.model.apply_grads(&grads, adapt_lr)?;
        if self.model.config.carry_hidden {
            self.carried = Some(state);
        }
        Ok(())
    }

    pub fn model(&self) -> &LstmModel {
        &self.model
    }

    pub fn into_model(self) -> LstmModel {
        self.model
    }
}

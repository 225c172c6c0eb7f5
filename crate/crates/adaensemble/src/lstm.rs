//! Peephole LSTM with one hidden layer and a linear output, for the
//! deterministic component. The cell follows the gate order input, forget,
//! cell, output; the input and forget gates peek at the previous cell
//! state, the output gate at the updated one, and the peephole connections
//! are per-cell scalars. Training is backpropagation through the full
//! unroll with optional global gradient-norm clipping.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, split_seed, Rng};
use crate::scale::MinMaxScaler;
use crate::sertext::{fmt_f64, fmt_f64_slice, KvDoc};
use crate::training::{pick_best, validation_split, TrainConfig};

/// Standard logistic sigmoid, range (0, 1).
pub fn sigma(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Centered sigmoid feeding the cell update, range (-2, 2).
pub fn g_centered(x: f64) -> f64 {
    4.0 / (1.0 + (-x).exp()) - 2.0
}

/// Centered sigmoid reading the cell state out, range (-1, 1).
pub fn h_centered(x: f64) -> f64 {
    2.0 / (1.0 + (-x).exp()) - 1.0
}

/// Hidden activation and cell state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub m: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        LstmState { m: vec![0.0; hidden_size], c: vec![0.0; hidden_size] }
    }
}

/// Cell parameters for scalar step input. Field order is the
/// initialization draw order. `b_y` is a one-element vector so every
/// parameter block has the same shape discipline.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmNet {
    pub hidden_size: usize,
    // input weights (one scalar input per step)
    pub w_ix: Vec<f64>,
    pub w_fx: Vec<f64>,
    pub w_cx: Vec<f64>,
    pub w_ox: Vec<f64>,
    // recurrent matrices, hidden x hidden row-major
    pub w_im: Vec<f64>,
    pub w_fm: Vec<f64>,
    pub w_cm: Vec<f64>,
    pub w_om: Vec<f64>,
    // diagonal peephole connections
    pub w_ic: Vec<f64>,
    pub w_fc: Vec<f64>,
    pub w_oc: Vec<f64>,
    // gate biases
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
    // linear output map
    pub w_ym: Vec<f64>,
    pub b_y: Vec<f64>,
}

/// Intermediate values of one step, kept for the backward pass.
#[derive(Debug, Clone)]
struct StepCache {
    x: f64,
    m_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    hc: Vec<f64>,
}

impl LstmNet {
    pub fn init(hidden_size: usize, rng: &mut Rng) -> Self {
        assert!(hidden_size >= 1);
        let n = hidden_size;
        let bound = 1.0 / (n as f64).sqrt();
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        let mut net = LstmNet {
            hidden_size: n,
            w_ix: draw(n),
            w_fx: draw(n),
            w_cx: draw(n),
            w_ox: draw(n),
            w_im: draw(n * n),
            w_fm: draw(n * n),
            w_cm: draw(n * n),
            w_om: draw(n * n),
            w_ic: draw(n),
            w_fc: draw(n),
            w_oc: draw(n),
            b_i: draw(n),
            b_f: draw(n),
            b_c: draw(n),
            b_o: draw(n),
            w_ym: draw(n),
            b_y: draw(1),
        };
        // Open forget gates at the start of training.
        net.b_f = vec![1.0; n];
        net
    }

    pub fn zeros(hidden_size: usize) -> Self {
        let n = hidden_size;
        LstmNet {
            hidden_size: n,
            w_ix: vec![0.0; n],
            w_fx: vec![0.0; n],
            w_cx: vec![0.0; n],
            w_ox: vec![0.0; n],
            w_im: vec![0.0; n * n],
            w_fm: vec![0.0; n * n],
            w_cm: vec![0.0; n * n],
            w_om: vec![0.0; n * n],
            w_ic: vec![0.0; n],
            w_fc: vec![0.0; n],
            w_oc: vec![0.0; n],
            b_i: vec![0.0; n],
            b_f: vec![0.0; n],
            b_c: vec![0.0; n],
            b_o: vec![0.0; n],
            w_ym: vec![0.0; n],
            b_y: vec![0.0],
        }
    }

    fn fields(&self) -> [&Vec<f64>; 17] {
        [
            &self.w_ix, &self.w_fx, &self.w_cx, &self.w_ox, &self.w_im, &self.w_fm,
            &self.w_cm, &self.w_om, &self.w_ic, &self.w_fc, &self.w_oc, &self.b_i,
            &self.b_f, &self.b_c, &self.b_o, &self.w_ym, &self.b_y,
        ]
    }

    fn fields_mut(&mut self) -> [&mut Vec<f64>; 17] {
        [
            &mut self.w_ix, &mut self.w_fx, &mut self.w_cx, &mut self.w_ox,
            &mut self.w_im, &mut self.w_fm, &mut self.w_cm, &mut self.w_om,
            &mut self.w_ic, &mut self.w_fc, &mut self.w_oc, &mut self.b_i,
            &mut self.b_f, &mut self.b_c, &mut self.b_o, &mut self.w_ym, &mut self.b_y,
        ]
    }

    pub fn params_flat(&self) -> Vec<f64> {
        self.fields().iter().flat_map(|f| f.iter().copied()).collect()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut at = 0;
        for field in self.fields_mut() {
            let len = field.len();
            field.copy_from_slice(&flat[at..at + len]);
            at += len;
        }
        assert_eq!(at, flat.len());
    }

    fn grad_norm(&self) -> f64 {
        self.fields()
            .iter()
            .map(|f| f.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    fn add_scaled(&mut self, other: &LstmNet, scale: f64) {
        let theirs = other.fields();
        for (mine, other_field) in self.fields_mut().into_iter().zip(theirs) {
            for (a, b) in mine.iter_mut().zip(other_field.iter()) {
                *a += scale * b;
            }
        }
    }

    fn scale_all(&mut self, factor: f64) {
        for field in self.fields_mut() {
            for v in field.iter_mut() {
                *v *= factor;
            }
        }
    }

    /// One cell step: gates in the order input, forget, cell, output.
    pub fn step(&self, x: f64, prev: &LstmState) -> Result<(f64, LstmState)> {
        if prev.m.len() != self.hidden_size || prev.c.len() != self.hidden_size {
            return Err(Error::invalid("state size does not match hidden size"));
        }
        let (y, state, _) = self.step_cached(x, prev);
        Ok((y, state))
    }

    fn step_cached(&self, x: f64, prev: &LstmState) -> (f64, LstmState, StepCache) {
        let n = self.hidden_size;
        let matvec = |w: &[f64], v: &[f64], j: usize| -> f64 {
            let row = &w[j * n..(j + 1) * n];
            row.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
        };
        let mut i = vec![0.0; n];
        let mut f = vec![0.0; n];
        let mut g = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut o = vec![0.0; n];
        let mut hc = vec![0.0; n];
        let mut m = vec![0.0; n];
        for j in 0..n {
            i[j] = sigma(
                self.w_ix[j] * x
                    + matvec(&self.w_im, &prev.m, j)
                    + self.w_ic[j] * prev.c[j]
                    + self.b_i[j],
            );
            f[j] = sigma(
                self.w_fx[j] * x
                    + matvec(&self.w_fm, &prev.m, j)
                    + self.w_fc[j] * prev.c[j]
                    + self.b_f[j],
            );
            g[j] = g_centered(
                self.w_cx[j] * x + matvec(&self.w_cm, &prev.m, j) + self.b_c[j],
            );
            c[j] = f[j] * prev.c[j] + i[j] * g[j];
            o[j] = sigma(
                self.w_ox[j] * x
                    + matvec(&self.w_om, &prev.m, j)
                    + self.w_oc[j] * c[j]
                    + self.b_o[j],
            );
            hc[j] = h_centered(c[j]);
            m[j] = o[j] * hc[j];
        }
        let y = self.b_y[0] + self.w_ym.iter().zip(m.iter()).map(|(a, b)| a * b).sum::<f64>();
        let cache = StepCache {
            x,
            m_prev: prev.m.clone(),
            c_prev: prev.c.clone(),
            i,
            f,
            g,
            o,
            c: c.clone(),
            hc,
        };
        (y, LstmState { m, c }, cache)
    }

    /// Unroll from the zero state across the window; the output is the
    /// linear read-out at the final step.
    pub fn forward(&self, window: &[f64]) -> Result<f64> {
        if window.is_empty() {
            return Err(Error::invalid("window must be non-empty"));
        }
        let mut state = LstmState::zeros(self.hidden_size);
        let mut y = 0.0;
        for &x in window {
            let (out, next) = self.step(x, &state)?;
            y = out;
            state = next;
        }
        Ok(y)
    }

    fn forward_cached(&self, window: &[f64]) -> (f64, Vec<StepCache>) {
        let mut state = LstmState::zeros(self.hidden_size);
        let mut caches = Vec::with_capacity(window.len());
        let mut y = 0.0;
        for &x in window {
            let (out, next, cache) = self.step_cached(x, &state);
            y = out;
            state = next;
            caches.push(cache);
        }
        (y, caches)
    }

    /// Gradient of the batch mean squared error through the full unroll.
    pub fn gradient(&self, batch: &[(Vec<f64>, f64)]) -> LstmNet {
        let n = self.hidden_size;
        let mut grad = LstmNet::zeros(n);
        let scale = 2.0 / batch.len() as f64;
        for (window, target) in batch {
            let (y, caches) = self.forward_cached(window);
            let dy = scale * (y - target);
            grad.b_y[0] += dy;
            let last_m: Vec<f64> = {
                let cache = caches.last().expect("non-empty window");
                cache.o.iter().zip(cache.hc.iter()).map(|(a, b)| a * b).collect()
            };
            for j in 0..n {
                grad.w_ym[j] += dy * last_m[j];
            }
            let mut dm: Vec<f64> = self.w_ym.iter().map(|w| dy * w).collect();
            let mut dc = vec![0.0; n];
            for cache in caches.iter().rev() {
                let mut dm_prev = vec![0.0; n];
                let mut dc_prev = vec![0.0; n];
                // m = o . h(c)
                let mut da_o = vec![0.0; n];
                for j in 0..n {
                    let do_j = dm[j] * cache.hc[j];
                    dc[j] += dm[j] * cache.o[j] * (1.0 - cache.hc[j] * cache.hc[j]) / 2.0;
                    da_o[j] = do_j * cache.o[j] * (1.0 - cache.o[j]);
                }
                // output gate reads the updated cell state
                for j in 0..n {
                    grad.w_ox[j] += da_o[j] * cache.x;
                    grad.w_oc[j] += da_o[j] * cache.c[j];
                    grad.b_o[j] += da_o[j];
                    dc[j] += da_o[j] * self.w_oc[j];
                    for k in 0..n {
                        grad.w_om[j * n + k] += da_o[j] * cache.m_prev[k];
                        dm_prev[k] += self.w_om[j * n + k] * da_o[j];
                    }
                }
                // c = f . c_prev + i . g
                for j in 0..n {
                    let df_j = dc[j] * cache.c_prev[j];
                    let di_j = dc[j] * cache.g[j];
                    let dg_j = dc[j] * cache.i[j];
                    dc_prev[j] += dc[j] * cache.f[j];

                    let da_c = dg_j * (4.0 - cache.g[j] * cache.g[j]) / 4.0;
                    grad.w_cx[j] += da_c * cache.x;
                    grad.b_c[j] += da_c;
                    for k in 0..n {
                        grad.w_cm[j * n + k] += da_c * cache.m_prev[k];
                        dm_prev[k] += self.w_cm[j * n + k] * da_c;
                    }

                    let da_f = df_j * cache.f[j] * (1.0 - cache.f[j]);
                    grad.w_fx[j] += da_f * cache.x;
                    grad.w_fc[j] += da_f * cache.c_prev[j];
                    grad.b_f[j] += da_f;
                    dc_prev[j] += da_f * self.w_fc[j];
                    for k in 0..n {
                        grad.w_fm[j * n + k] += da_f * cache.m_prev[k];
                        dm_prev[k] += self.w_fm[j * n + k] * da_f;
                    }

                    let da_i = di_j * cache.i[j] * (1.0 - cache.i[j]);
                    grad.w_ix[j] += da_i * cache.x;
                    grad.w_ic[j] += da_i * cache.c_prev[j];
                    grad.b_i[j] += da_i;
                    dc_prev[j] += da_i * self.w_ic[j];
                    for k in 0..n {
                        grad.w_im[j * n + k] += da_i * cache.m_prev[k];
                        dm_prev[k] += self.w_im[j * n + k] * da_i;
                    }
                }
                dm = dm_prev;
                dc = dc_prev;
            }
        }
        grad
    }

    pub fn mse(&self, pairs: &[(Vec<f64>, f64)]) -> f64 {
        let sum: f64 = pairs
            .iter()
            .map(|(w, t)| {
                let e = self.forward(w).expect("non-empty window") - t;
                e * e
            })
            .sum();
        sum / pairs.len() as f64
    }
}

/// Mini-batch gradient descent with backpropagation through time on
/// pre-scaled `(window, target)` pairs. Deterministic for a fixed seed.
pub fn lstm_train(
    pairs: &[(Vec<f64>, f64)],
    hidden_size: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<(LstmNet, f64)> {
    if pairs.is_empty() {
        return Err(Error::data("no training pairs"));
    }
    if pairs.iter().any(|(w, _)| w.is_empty()) {
        return Err(Error::invalid("empty window in training pairs"));
    }
    let mut rng = rng_from_seed(seed);
    let mut net = LstmNet::init(hidden_size, &mut rng);
    let mut velocity = LstmNet::zeros(hidden_size);
    let batch_size = config.batch_size.max(1).min(pairs.len());
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut batch: Vec<(Vec<f64>, f64)> = Vec::with_capacity(batch_size);
    for epoch in 0..config.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| pairs[i].clone()));
            let mut grad = net.gradient(&batch);
            if let Some(clip) = config.clip_norm {
                let norm = grad.grad_norm();
                if norm > clip {
                    let shrink = clip / norm;
                    for field in grad.fields_mut() {
                        for v in field.iter_mut() {
                            *v *= shrink;
                        }
                    }
                }
            }
            velocity.scale_all(config.momentum);
            velocity.add_scaled(&grad, -config.learning_rate);
            net.add_scaled(&velocity, 1.0);
        }
        let probe = net.forward(&pairs[0].0)?;
        if !probe.is_finite() {
            return Err(Error::numerical(format!("diverged at epoch {epoch}")));
        }
    }
    let final_mse = net.mse(pairs);
    if !final_mse.is_finite() {
        return Err(Error::numerical("diverged: final training error is not finite"));
    }
    Ok((net, final_mse))
}

/// Autoregressive forecaster: cell plus scaling and the contiguous lag
/// window it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub net: LstmNet,
    pub scaler: MinMaxScaler,
    pub lag_window: usize,
    pub seed: u64,
    pub train_config: TrainConfig,
    pub final_mse: f64,
    /// Raw (unscaled) tail of the training series.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmFitConfig {
    /// Contiguous window length fed to the unroll.
    pub lag_window: usize,
    pub hidden_candidates: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for LstmFitConfig {
    fn default() -> Self {
        LstmFitConfig {
            lag_window: 24,
            hidden_candidates: (4..=25).collect(),
            train: TrainConfig { clip_norm: Some(5.0), ..TrainConfig::default() },
        }
    }
}

/// Train candidates on the chronological split, pick the hidden size with
/// the lowest validation RMSE (ties to the smallest), then retrain on all
/// pairs with the winner.
pub fn lstm_train_with_selection(
    pairs: &[(Vec<f64>, f64)],
    candidates: &[usize],
    config: &TrainConfig,
    seed: u64,
) -> Result<(LstmNet, usize, f64)> {
    if candidates.is_empty() {
        return Err(Error::invalid("empty hidden-size candidate set"));
    }
    let (train_range, val_range) = validation_split(pairs.len())?;
    let train = &pairs[train_range];
    let val = &pairs[val_range];
    let mut scores = Vec::with_capacity(candidates.len());
    for (idx, &h) in candidates.iter().enumerate() {
        let (net, _) = lstm_train(train, h, config, split_seed(seed, idx as u64))?;
        scores.push(net.mse(val).sqrt());
    }
    let best = pick_best(&scores);
    let (net, final_mse) = lstm_train(pairs, candidates[best], config, seed)?;
    Ok((net, candidates[best], final_mse))
}

pub fn fit_autoregressive(values: &[f64], config: &LstmFitConfig, seed: u64) -> Result<LstmModel> {
    if values.len() <= config.lag_window + 1 {
        return Err(Error::data("series too short for the lag window"));
    }
    let scaler = MinMaxScaler::fit(values)?;
    let scaled = scaler.apply(values);
    let lag_window = config.lag_window;
    let pairs: Vec<(Vec<f64>, f64)> = (lag_window..scaled.len())
        .map(|t| (scaled[t - lag_window..t].to_vec(), scaled[t]))
        .collect();
    let (net, _hidden, final_mse) =
        lstm_train_with_selection(&pairs, &config.hidden_candidates, &config.train, seed)?;
    Ok(LstmModel {
        net,
        scaler,
        lag_window,
        seed,
        train_config: config.train.clone(),
        final_mse,
        history: values[values.len() - lag_window..].to_vec(),
    })
}

impl LstmModel {
    pub fn predict_next(&self, recent_raw: &[f64]) -> Result<f64> {
        if recent_raw.len() < self.lag_window {
            return Err(Error::data(format!(
                "history of {} values is shorter than the lag window {}",
                recent_raw.len(),
                self.lag_window
            )));
        }
        let window: Vec<f64> = recent_raw[recent_raw.len() - self.lag_window..]
            .iter()
            .map(|&v| self.scaler.apply_one(v))
            .collect();
        Ok(self.scaler.invert_one(self.net.forward(&window)?))
    }

    pub fn forecast_recursive(&self, history_raw: &[f64], h: usize) -> Result<Vec<f64>> {
        if h < 1 {
            return Err(Error::invalid("forecast horizon must be at least 1"));
        }
        if history_raw.len() < self.lag_window {
            return Err(Error::data("history shorter than the lag window"));
        }
        let mut extended = history_raw[history_raw.len() - self.lag_window..].to_vec();
        let mut out = Vec::with_capacity(h);
        for _ in 0..h {
            let next = self.predict_next(&extended)?;
            out.push(next);
            extended.push(next);
        }
        Ok(out)
    }

    pub fn one_step_fitted(&self, values: &[f64]) -> Result<(usize, Vec<f64>)> {
        let offset = self.lag_window;
        let mut fitted = Vec::with_capacity(values.len().saturating_sub(offset));
        for t in offset..values.len() {
            fitted.push(self.predict_next(&values[..t])?);
        }
        Ok((offset, fitted))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("format lstm-v1\n");
        out.push_str(&format!("hidden {}\n", self.net.hidden_size));
        let blocks: [(&str, &Vec<f64>); 17] = [
            ("w_ix", &self.net.w_ix),
            ("w_fx", &self.net.w_fx),
            ("w_cx", &self.net.w_cx),
            ("w_ox", &self.net.w_ox),
            ("w_im", &self.net.w_im),
            ("w_fm", &self.net.w_fm),
            ("w_cm", &self.net.w_cm),
            ("w_om", &self.net.w_om),
            ("w_ic", &self.net.w_ic),
            ("w_fc", &self.net.w_fc),
            ("w_oc", &self.net.w_oc),
            ("b_i", &self.net.b_i),
            ("b_f", &self.net.b_f),
            ("b_c", &self.net.b_c),
            ("b_o", &self.net.b_o),
            ("w_ym", &self.net.w_ym),
            ("b_y", &self.net.b_y),
        ];
        for (name, values) in blocks {
            out.push_str(&format!("{name} {}\n", fmt_f64_slice(values)));
        }
        out.push_str(&format!(
            "scaler {} {} {} {}\n",
            fmt_f64(self.scaler.low),
            fmt_f64(self.scaler.high),
            fmt_f64(self.scaler.target_lo),
            fmt_f64(self.scaler.target_hi)
        ));
        out.push_str(&format!("lag_window {}\n", self.lag_window));
        out.push_str(&format!("seed {}\n", self.seed));
        out.push_str(&format!("final_mse {}\n", fmt_f64(self.final_mse)));
        out.push_str(&format!(
            "train {} {} {} {} {}\n",
            fmt_f64(self.train_config.learning_rate),
            self.train_config.epochs,
            self.train_config.batch_size,
            fmt_f64(self.train_config.momentum),
            self.train_config.clip_norm.map_or("none".to_string(), fmt_f64)
        ));
        out.push_str(&format!("history {}\n", fmt_f64_slice(&self.history)));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text);
        if doc.get("format")? != "lstm-v1" {
            return Err(Error::data("not an lstm-v1 model file"));
        }
        let n = doc.get_usize("hidden")?;
        let expect = |key: &str, len: usize| -> Result<Vec<f64>> {
            let v = doc.get_floats(key)?;
            if v.len() != len {
                return Err(Error::data(format!(
                    "block {key} has {} values, expected {len}",
                    v.len()
                )));
            }
            Ok(v)
        };
        let scaler_fields = doc.get_floats("scaler")?;
        if scaler_fields.len() != 4 {
            return Err(Error::data("scaler line must have 4 fields"));
        }
        let train_fields: Vec<&str> = doc.get("train")?.split_whitespace().collect();
        if train_fields.len() != 5 {
            return Err(Error::data("train line must have 5 fields"));
        }
        Ok(LstmModel {
            net: LstmNet {
                hidden_size: n,
                w_ix: expect("w_ix", n)?,
                w_fx: expect("w_fx", n)?,
                w_cx: expect("w_cx", n)?,
                w_ox: expect("w_ox", n)?,
                w_im: expect("w_im", n * n)?,
                w_fm: expect("w_fm", n * n)?,
                w_cm: expect("w_cm", n * n)?,
                w_om: expect("w_om", n * n)?,
                w_ic: expect("w_ic", n)?,
                w_fc: expect("w_fc", n)?,
                w_oc: expect("w_oc", n)?,
                b_i: expect("b_i", n)?,
                b_f: expect("b_f", n)?,
                b_c: expect("b_c", n)?,
                b_o: expect("b_o", n)?,
                w_ym: expect("w_ym", n)?,
                b_y: expect("b_y", 1)?,
            },
            scaler: MinMaxScaler {
                low: scaler_fields[0],
                high: scaler_fields[1],
                target_lo: scaler_fields[2],
                target_hi: scaler_fields[3],
            },
            lag_window: doc.get_usize("lag_window")?,
            seed: doc.get_usize("seed")? as u64,
            train_config: TrainConfig {
                learning_rate: crate::sertext::parse_f64(train_fields[0])?,
                epochs: crate::sertext::parse_usize(train_fields[1])?,
                batch_size: crate::sertext::parse_usize(train_fields[2])?,
                momentum: crate::sertext::parse_f64(train_fields[3])?,
                clip_norm: if train_fields[4] == "none" {
                    None
                } else {
                    Some(crate::sertext::parse_f64(train_fields[4])?)
                },
            },
            final_mse: doc.get_f64("final_mse")?,
            history: doc.get_floats_or_empty("history")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn activations_at_zero() {
        assert_eq!(sigma(0.0), 0.5);
        assert_eq!(g_centered(0.0), 0.0);
        assert_eq!(h_centered(0.0), 0.0);
    }

    #[test]
    fn centered_sigmoids_are_affine_in_sigma() {
        let mut rng = crate::rng::rng_from_seed(31);
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-30.0..30.0);
            assert!((g_centered(x) - (4.0 * sigma(x) - 2.0)).abs() < 1e-15);
            assert!((h_centered(x) - (2.0 * sigma(x) - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn saturation_limits() {
        assert!((g_centered(20.0) - 2.0).abs() < 1e-8);
        assert!((h_centered(-20.0) + 1.0).abs() < 1e-8);
        assert!(sigma(40.0) <= 1.0 && sigma(-40.0) >= 0.0);
    }

    #[test]
    fn zero_cell_from_zero_state() {
        let net = LstmNet::zeros(2);
        let (y, state) = net.step(0.7, &LstmState::zeros(2)).unwrap();
        assert_eq!(y, 0.0);
        assert!(state.c.iter().all(|&v| v == 0.0));
        assert!(state.m.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_cell_halves_previous_state() {
        // All gates sit at 0.5 with zero parameters, and the cell input is
        // g(0) = 0, so the new cell state is half the old one.
        let net = LstmNet::zeros(2);
        let prev = LstmState { m: vec![0.0, 0.0], c: vec![1.0, 1.0] };
        let (_, state) = net.step(0.0, &prev).unwrap();
        for j in 0..2 {
            assert!((state.c[j] - 0.5).abs() < 1e-15);
            assert!((state.m[j] - 0.5 * h_centered(0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn saturated_forget_gate_preserves_memory() {
        let mut net = LstmNet::zeros(3);
        net.b_f = vec![20.0; 3];
        let prev = LstmState { m: vec![0.0; 3], c: vec![1.0, -0.4, 0.9] };
        let (_, state) = net.step(0.0, &prev).unwrap();
        for j in 0..3 {
            assert!((state.c[j] - prev.c[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn gates_stay_in_their_ranges() {
        let mut rng = crate::rng::rng_from_seed(47);
        let net = LstmNet::init(4, &mut rng);
        let mut state = LstmState::zeros(4);
        for _ in 0..50 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            let (_, next) = net.step(x, &state).unwrap();
            for j in 0..4 {
                assert!(next.m[j].abs() < 1.0, "m out of range");
            }
            state = next;
        }
    }

    #[test]
    fn forward_of_zero_net_is_output_bias() {
        let mut net = LstmNet::zeros(3);
        net.b_y = vec![0.25];
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]).unwrap(), 0.25);
    }

    #[test]
    fn single_step_window_equals_step() {
        let mut rng = crate::rng::rng_from_seed(53);
        let net = LstmNet::init(3, &mut rng);
        let (y, _) = net.step(0.4, &LstmState::zeros(3)).unwrap();
        assert_eq!(net.forward(&[0.4]).unwrap(), y);
    }

    #[test]
    fn forward_equals_manual_chaining() {
        let mut rng = crate::rng::rng_from_seed(59);
        let net = LstmNet::init(4, &mut rng);
        let window = [0.2, -0.1, 0.5, 0.05, -0.3];
        let mut state = LstmState::zeros(4);
        let mut y = 0.0;
        for &x in &window {
            let (out, next) = net.step(x, &state).unwrap();
            y = out;
            state = next;
        }
        assert_eq!(net.forward(&window).unwrap(), y);
    }

    #[test]
    fn bptt_gradient_matches_central_differences() {
        let step = 1e-5;
        for trial in 0..10 {
            let mut rng = crate::rng::rng_from_seed(7000 + trial);
            let hidden = 2 + (trial as usize % 3);
            let net = LstmNet::init(hidden, &mut rng);
            let batch: Vec<(Vec<f64>, f64)> = (0..4)
                .map(|_| {
                    let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    (w, rng.gen_range(-1.0..1.0))
                })
                .collect();
            let analytic = net.gradient(&batch).params_flat();
            let base = net.params_flat();
            let mut max_rel = 0.0f64;
            for idx in 0..base.len() {
                let mut probe = net.clone();
                let mut plus = base.clone();
                plus[idx] += step;
                probe.set_params_flat(&plus);
                let up = probe.mse(&batch);
                let mut minus = base.clone();
                minus[idx] -= step;
                probe.set_params_flat(&minus);
                let down = probe.mse(&batch);
                let numeric = (up - down) / (2.0 * step);
                let rel = (analytic[idx] - numeric).abs()
                    / analytic[idx].abs().max(numeric.abs()).max(1e-8);
                max_rel = max_rel.max(rel);
            }
            assert!(max_rel < 1e-4, "trial {trial}: max relative error {max_rel}");
        }
    }

    #[test]
    fn zero_epochs_keeps_initial_weights() {
        let pairs = vec![(vec![0.1, 0.2], 0.5), (vec![0.9, 0.3], 0.2), (vec![0.2, 0.8], 0.4)];
        let config = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let (net, _) = lstm_train(&pairs, 3, &config, 61).unwrap();
        let mut rng = crate::rng::rng_from_seed(61);
        let fresh = LstmNet::init(3, &mut rng);
        assert_eq!(net, fresh);
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = crate::rng::rng_from_seed(67);
        let pairs: Vec<(Vec<f64>, f64)> = (0..30)
            .map(|_| {
                let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
                (w, rng.gen_range(0.0..1.0))
            })
            .collect();
        let config = TrainConfig { epochs: 10, clip_norm: Some(5.0), ..TrainConfig::default() };
        let (a, _) = lstm_train(&pairs, 3, &config, 71).unwrap();
        let (b, _) = lstm_train(&pairs, 3, &config, 71).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn learns_a_first_order_autoregression() {
        // Validation error should approach the innovation noise floor.
        let mut rng = crate::rng::rng_from_seed(73);
        let innovation_std = 0.05;
        let mut series = vec![0.5];
        for _ in 1..800 {
            let eps: f64 = StandardNormal.sample(&mut rng);
            let prev = *series.last().unwrap();
            series.push(0.9 * (prev - 0.5) + 0.5 + innovation_std * eps);
        }
        let lag = 4;
        let pairs: Vec<(Vec<f64>, f64)> = (lag..series.len())
            .map(|t| (series[t - lag..t].to_vec(), series[t]))
            .collect();
        let (train_range, val_range) = validation_split(pairs.len()).unwrap();
        let config = TrainConfig {
            learning_rate: 0.1,
            epochs: 250,
            batch_size: 32,
            clip_norm: Some(5.0),
            ..TrainConfig::default()
        };
        let (net, _) = lstm_train(&pairs[train_range], 4, &config, 79).unwrap();
        let rmse = net.mse(&pairs[val_range]).sqrt();
        assert!(
            rmse < 1.5 * innovation_std,
            "validation rmse {rmse} vs noise floor {innovation_std}"
        );
    }

    #[test]
    fn recursive_forecast_matches_manual_chaining() {
        let series: Vec<f64> = (0..120).map(|t| (t as f64 * 0.2).sin() * 2.0 + 5.0).collect();
        let config = LstmFitConfig {
            lag_window: 4,
            hidden_candidates: vec![4],
            train: TrainConfig { epochs: 15, clip_norm: Some(5.0), ..TrainConfig::default() },
        };
        let model = fit_autoregressive(&series, &config, 83).unwrap();
        let fc = model.forecast_recursive(&series, 2).unwrap();
        let first = model.predict_next(&series).unwrap();
        let mut hist = series.clone();
        hist.push(first);
        let second = model.predict_next(&hist).unwrap();
        assert!((fc[0] - first).abs() < 1e-12);
        assert!((fc[1] - second).abs() < 1e-12);
        // h = 1 equals a single forward pass on the last window.
        let h1 = model.forecast_recursive(&series, 1).unwrap();
        assert_eq!(h1[0], first);
    }

    #[test]
    fn zero_net_forecasts_inverse_scaled_bias() {
        let mut net = LstmNet::zeros(2);
        net.b_y = vec![0.5];
        let scaler = MinMaxScaler::new(0.0, 10.0, 0.0, 1.0).unwrap();
        let model = LstmModel {
            net,
            scaler,
            lag_window: 3,
            seed: 0,
            train_config: TrainConfig::default(),
            final_mse: 0.0,
            history: vec![1.0, 2.0, 3.0],
        };
        let fc = model.forecast_recursive(&[1.0, 2.0, 3.0], 4).unwrap();
        for v in fc {
            assert!((v - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn serialization_round_trip() {
        let series: Vec<f64> = (0..80).map(|t| (t as f64 * 0.4).cos() + 3.0).collect();
        let config = LstmFitConfig {
            lag_window: 3,
            hidden_candidates: vec![4],
            train: TrainConfig { epochs: 5, clip_norm: Some(5.0), ..TrainConfig::default() },
        };
        let model = fit_autoregressive(&series, &config, 89).unwrap();
        let back = LstmModel::from_text(&model.to_text()).unwrap();
        assert_eq!(model, back);
        assert_eq!(
            model.forecast_recursive(&series, 6).unwrap(),
            back.forecast_recursive(&series, 6).unwrap()
        );
    }
}

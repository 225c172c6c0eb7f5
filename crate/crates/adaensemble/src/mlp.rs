//! Single-hidden-layer perceptron: logistic hidden units, linear output,
//! trained by backpropagation on mean squared error. Used for the
//! volatility component, the plain and per-mode benchmarks, and the
//! ensemble recombiner.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, split_seed, Rng};
use crate::scale::MinMaxScaler;
use crate::sertext::{fmt_f64, fmt_f64_slice, KvDoc};
use crate::training::{lagged_pairs, pick_best, validation_split, TrainConfig};

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Network weights: `y = b_out + sum_j w_out[j] * g(b_hidden[j] + sum_i
/// w_hidden[j][i] * x[i])` with logistic `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNet {
    pub input_size: usize,
    pub hidden_size: usize,
    /// hidden x input, row-major.
    pub w_hidden: Vec<f64>,
    pub b_hidden: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

/// Parameter-shaped gradient buffer.
#[derive(Debug, Clone)]
pub struct MlpGradient {
    pub w_hidden: Vec<f64>,
    pub b_hidden: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl MlpNet {
    pub fn init(input_size: usize, hidden_size: usize, rng: &mut Rng) -> Self {
        assert!(input_size >= 1 && hidden_size >= 1);
        let bound = 1.0 / (input_size as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        MlpNet {
            input_size,
            hidden_size,
            w_hidden: draw(hidden_size * input_size),
            b_hidden: draw(hidden_size),
            w_out: draw(hidden_size),
            b_out: rng.gen_range(-bound..bound),
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        if input.len() != self.input_size {
            return Err(Error::invalid(format!(
                "input size {} does not match network input size {}",
                input.len(),
                self.input_size
            )));
        }
        let mut y = self.b_out;
        for j in 0..self.hidden_size {
            let mut z = self.b_hidden[j];
            let row = &self.w_hidden[j * self.input_size..(j + 1) * self.input_size];
            for (w, x) in row.iter().zip(input.iter()) {
                z += w * x;
            }
            y += self.w_out[j] * logistic(z);
        }
        Ok(y)
    }

    /// Analytic gradient of the batch mean squared error.
    pub fn gradient(&self, batch: &[(Vec<f64>, f64)]) -> MlpGradient {
        let p = self.input_size;
        let q = self.hidden_size;
        let mut grad = MlpGradient {
            w_hidden: vec![0.0; q * p],
            b_hidden: vec![0.0; q],
            w_out: vec![0.0; q],
            b_out: 0.0,
        };
        let scale = 2.0 / batch.len() as f64;
        let mut hidden = vec![0.0; q];
        for (input, target) in batch {
            let mut y = self.b_out;
            for j in 0..q {
                let mut z = self.b_hidden[j];
                let row = &self.w_hidden[j * p..(j + 1) * p];
                for (w, x) in row.iter().zip(input.iter()) {
                    z += w * x;
                }
                hidden[j] = logistic(z);
                y += self.w_out[j] * hidden[j];
            }
            let dy = scale * (y - target);
            grad.b_out += dy;
            for j in 0..q {
                grad.w_out[j] += dy * hidden[j];
                let dz = dy * self.w_out[j] * hidden[j] * (1.0 - hidden[j]);
                grad.b_hidden[j] += dz;
                for (i, x) in input.iter().enumerate() {
                    grad.w_hidden[j * p + i] += dz * x;
                }
            }
        }
        grad
    }

    pub fn mse(&self, pairs: &[(Vec<f64>, f64)]) -> f64 {
        let sum: f64 = pairs
            .iter()
            .map(|(x, t)| {
                let e = self.forward(x).expect("shape checked") - t;
                e * e
            })
            .sum();
        sum / pairs.len() as f64
    }

    fn apply_step(&mut self, grad: &MlpGradient, velocity: &mut MlpGradient, config: &TrainConfig) {
        let lr = config.learning_rate;
        let m = config.momentum;
        let step = |param: &mut f64, g: f64, v: &mut f64| {
            *v = m * *v - lr * g;
            *param += *v;
        };
        for i in 0..self.w_hidden.len() {
            step(&mut self.w_hidden[i], grad.w_hidden[i], &mut velocity.w_hidden[i]);
        }
        for j in 0..self.hidden_size {
            step(&mut self.b_hidden[j], grad.b_hidden[j], &mut velocity.b_hidden[j]);
            step(&mut self.w_out[j], grad.w_out[j], &mut velocity.w_out[j]);
        }
        step(&mut self.b_out, grad.b_out, &mut velocity.b_out);
    }
}

/// Mini-batch gradient descent on pre-scaled `(input, target)` pairs.
/// Sample order reshuffles each epoch from the seeded stream, so the same
/// seed gives bit-identical weights.
pub fn mlp_train(
    pairs: &[(Vec<f64>, f64)],
    input_size: usize,
    hidden_size: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<(MlpNet, f64)> {
    if pairs.is_empty() {
        return Err(Error::data("no training pairs"));
    }
    if pairs.iter().any(|(x, _)| x.len() != input_size) {
        return Err(Error::invalid("training pair does not match input size"));
    }
    let mut rng = rng_from_seed(seed);
    let mut net = MlpNet::init(input_size, hidden_size, &mut rng);
    let mut velocity = MlpGradient {
        w_hidden: vec![0.0; hidden_size * input_size],
        b_hidden: vec![0.0; hidden_size],
        w_out: vec![0.0; hidden_size],
        b_out: 0.0,
    };
    let batch_size = config.batch_size.max(1).min(pairs.len());
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut batch: Vec<(Vec<f64>, f64)> = Vec::with_capacity(batch_size);
    for epoch in 0..config.epochs {
        // Fisher-Yates off the same stream.
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| pairs[i].clone()));
            let grad = net.gradient(&batch);
            net.apply_step(&grad, &mut velocity, config);
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

/// Train one candidate per hidden size on the chronological 80% split and
/// return `(best hidden size, its validation RMSE)`. Ties go to the
/// smallest size. Candidate seeds are split from the master seed.
pub fn select_hidden_size(
    pairs: &[(Vec<f64>, f64)],
    input_size: usize,
    candidates: &[usize],
    config: &TrainConfig,
    seed: u64,
) -> Result<(usize, f64)> {
    if candidates.is_empty() {
        return Err(Error::invalid("empty hidden-size candidate set"));
    }
    let (train_range, val_range) = validation_split(pairs.len())?;
    let train = &pairs[train_range];
    let val = &pairs[val_range];
    let mut scores = Vec::with_capacity(candidates.len());
    for (idx, &q) in candidates.iter().enumerate() {
        let (net, _) = mlp_train(train, input_size, q, config, split_seed(seed, idx as u64))?;
        scores.push(net.mse(val).sqrt());
    }
    let best = pick_best(&scores);
    Ok((candidates[best], scores[best]))
}

/// Autoregressive forecaster: network plus scaling, lag layout and the raw
/// training tail needed to forecast from the training origin.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub net: MlpNet,
    pub scaler: MinMaxScaler,
    /// Ascending lags feeding the input layer (window order: oldest first).
    pub lags: Vec<usize>,
    pub lag_window: usize,
    pub seed: u64,
    pub train_config: TrainConfig,
    pub final_mse: f64,
    /// Raw (unscaled) tail of the training series, `lag_window` long.
    pub history: Vec<f64>,
}

/// Fit hyperparameters for the autoregressive wrapper.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpFitConfig {
    /// Number of input lags (the network input size).
    pub n_lags: usize,
    /// Largest lag considered by the autocorrelation filter.
    pub max_lag: usize,
    pub hidden_candidates: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for MlpFitConfig {
    fn default() -> Self {
        MlpFitConfig {
            n_lags: 24,
            max_lag: 24,
            hidden_candidates: (4..=15).collect(),
            train: TrainConfig::default(),
        }
    }
}

/// Fit an autoregressive forecaster on a raw series: scale, pick lags by
/// absolute autocorrelation, select the hidden size on the chronological
/// validation split, then retrain on all pairs with the winning size.
pub fn fit_autoregressive(values: &[f64], config: &MlpFitConfig, seed: u64) -> Result<MlpModel> {
    let scaler = MinMaxScaler::fit(values)?;
    let scaled = scaler.apply(values);
    let n_lags = config.n_lags.min(config.max_lag);
    let lags = crate::training::select_lags(&scaled, n_lags, config.max_lag)?;
    let lag_window = *lags.last().unwrap();
    let pairs = lagged_pairs(&scaled, &lags);
    let (hidden, _score) =
        select_hidden_size(&pairs, lags.len(), &config.hidden_candidates, &config.train, seed)?;
    let (net, final_mse) = mlp_train(&pairs, lags.len(), hidden, &config.train, seed)?;
    Ok(MlpModel {
        net,
        scaler,
        lags,
        lag_window,
        seed,
        train_config: config.train.clone(),
        final_mse,
        history: values[values.len() - lag_window..].to_vec(),
    })
}

impl MlpModel {
    /// One-step prediction from the last `lag_window` raw values.
    pub fn predict_next(&self, recent_raw: &[f64]) -> Result<f64> {
        if recent_raw.len() < self.lag_window {
            return Err(Error::data(format!(
                "history of {} values is shorter than the lag window {}",
                recent_raw.len(),
                self.lag_window
            )));
        }
        let n = recent_raw.len();
        let input: Vec<f64> = self
            .lags
            .iter()
            .rev()
            .map(|&lag| self.scaler.apply_one(recent_raw[n - lag]))
            .collect();
        Ok(self.scaler.invert_one(self.net.forward(&input)?))
    }

    /// Iterated multi-step forecast: each prediction feeds back into the
    /// lag window. Scaling is applied and inverted internally.
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

    /// In-sample one-step fitted values: `(offset, fitted)` where
    /// `fitted[i]` predicts `values[offset + i]`.
    pub fn one_step_fitted(&self, values: &[f64]) -> Result<(usize, Vec<f64>)> {
        let offset = self.lag_window;
        let mut fitted = Vec::with_capacity(values.len().saturating_sub(offset));
        for t in offset..values.len() {
            fitted.push(self.predict_next(&values[..t])?);
        }
        Ok((offset, fitted))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("format mlp-v1\n");
        out.push_str(&format!("dims {} {}\n", self.net.input_size, self.net.hidden_size));
        out.push_str(&format!("w_hidden {}\n", fmt_f64_slice(&self.net.w_hidden)));
        out.push_str(&format!("b_hidden {}\n", fmt_f64_slice(&self.net.b_hidden)));
        out.push_str(&format!("w_out {}\n", fmt_f64_slice(&self.net.w_out)));
        out.push_str(&format!("b_out {}\n", fmt_f64(self.net.b_out)));
        out.push_str(&format!(
            "scaler {} {} {} {}\n",
            fmt_f64(self.scaler.low),
            fmt_f64(self.scaler.high),
            fmt_f64(self.scaler.target_lo),
            fmt_f64(self.scaler.target_hi)
        ));
        out.push_str(&format!(
            "lags {}\n",
            self.lags.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
        ));
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
        if doc.get("format")? != "mlp-v1" {
            return Err(Error::data("not an mlp-v1 model file"));
        }
        let dims: Vec<usize> = doc
            .get("dims")?
            .split_whitespace()
            .map(crate::sertext::parse_usize)
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::data("dims line must have 2 fields"));
        }
        let (p, q) = (dims[0], dims[1]);
        let w_hidden = doc.get_floats("w_hidden")?;
        if w_hidden.len() != p * q {
            return Err(Error::data("w_hidden size does not match dims"));
        }
        let scaler_fields = doc.get_floats("scaler")?;
        if scaler_fields.len() != 4 {
            return Err(Error::data("scaler line must have 4 fields"));
        }
        let lags: Vec<usize> = doc
            .get("lags")?
            .split_whitespace()
            .map(crate::sertext::parse_usize)
            .collect::<Result<_>>()?;
        let train_fields: Vec<&str> = doc.get("train")?.split_whitespace().collect();
        if train_fields.len() != 5 {
            return Err(Error::data("train line must have 5 fields"));
        }
        let lag_window = lags.iter().copied().max().unwrap_or(0);
        Ok(MlpModel {
            net: MlpNet {
                input_size: p,
                hidden_size: q,
                w_hidden,
                b_hidden: doc.get_floats("b_hidden")?,
                w_out: doc.get_floats("w_out")?,
                b_out: doc.get_f64("b_out")?,
            },
            scaler: MinMaxScaler {
                low: scaler_fields[0],
                high: scaler_fields[1],
                target_lo: scaler_fields[2],
                target_hi: scaler_fields[3],
            },
            lags,
            lag_window,
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

//! The decomposition-ensemble pipeline: decompose the series into three
//! band-limited components, forecast the lowest-frequency (periodic)
//! component with a seasonal ARIMA model, the middle (deterministic)
//! component with the LSTM, the highest-frequency (volatility) component
//! with the MLP, and recombine the component forecasts with another MLP.
//! Also hosts the five single-path benchmark constructors.

use std::path::Path;

use crate::error::{Error, Result};
use crate::lstm::{self, LstmFitConfig, LstmModel};
use crate::mlp::{self, MlpFitConfig, MlpModel, MlpNet};
use crate::rng::split_seed;
use crate::sarima::{self, SarimaModel, SarimaOrder, SearchMode};
use crate::scale::MinMaxScaler;
use crate::series::TimeSeries;
use crate::training::TrainConfig;
use crate::vmd::{vmd_decompose, ModeSet, VmdConfig};

/// Roles ordered by center frequency: lowest is the periodic trend,
/// highest absorbs the decomposition residual as volatility.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentTriple {
    pub periodic: Vec<f64>,
    pub deterministic: Vec<f64>,
    pub volatility: Vec<f64>,
}

impl ComponentTriple {
    pub fn len(&self) -> usize {
        self.periodic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periodic.is_empty()
    }

    /// Pointwise sum; equals the decomposed series exactly.
    pub fn sum(&self) -> Vec<f64> {
        (0..self.len())
            .map(|t| self.periodic[t] + self.deterministic[t] + self.volatility[t])
            .collect()
    }

    fn slice(&self, range: std::ops::Range<usize>) -> ComponentTriple {
        ComponentTriple {
            periodic: self.periodic[range.clone()].to_vec(),
            deterministic: self.deterministic[range.clone()].to_vec(),
            volatility: self.volatility[range].to_vec(),
        }
    }
}

/// Which sorted mode landed in which role, with its center frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentAssignment {
    /// (role name, sorted mode index, center frequency).
    pub entries: Vec<(String, usize, f64)>,
}

/// Map a 3-mode decomposition onto the component roles. Modes arrive
/// sorted by center frequency (ties already broken by mode index), so the
/// lowest becomes periodic, the middle deterministic, and the highest plus
/// the residual becomes volatility, keeping the additive identity exact.
pub fn assign_components(modeset: &ModeSet) -> Result<(ComponentTriple, ComponentAssignment)> {
    if modeset.k() != 3 {
        return Err(Error::invalid(format!(
            "component assignment needs exactly 3 modes, got {}",
            modeset.k()
        )));
    }
    let volatility: Vec<f64> = modeset.modes[2]
        .iter()
        .zip(modeset.residual.iter())
        .map(|(m, r)| m + r)
        .collect();
    let triple = ComponentTriple {
        periodic: modeset.modes[0].clone(),
        deterministic: modeset.modes[1].clone(),
        volatility,
    };
    let assignment = ComponentAssignment {
        entries: vec![
            ("periodic".to_string(), 0, modeset.center_freqs[0]),
            ("deterministic".to_string(), 1, modeset.center_freqs[1]),
            ("volatility".to_string(), 2, modeset.center_freqs[2]),
        ],
    };
    Ok((triple, assignment))
}

/// Whether decomposition sees the training span only (leakage-safe) or the
/// full series (replication mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionScope {
    TrainOnly,
    FullSeries,
}

impl DecompositionScope {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecompositionScope::TrainOnly => "train_only",
            DecompositionScope::FullSeries => "full_series",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train_only" => Ok(DecompositionScope::TrainOnly),
            "full_series" => Ok(DecompositionScope::FullSeries),
            other => Err(Error::invalid(format!("unknown decomposition scope {other:?}"))),
        }
    }
}

/// Everything the pipeline and the benchmark constructors need.
#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub vmd: VmdConfig,
    /// Fixed order overrides the automatic search when set.
    pub sarima_order: Option<SarimaOrder>,
    pub sarima_search: SearchMode,
    pub lstm: LstmFitConfig,
    pub mlp: MlpFitConfig,
    pub recombiner_hidden: Vec<usize>,
    pub recombiner_train: TrainConfig,
    pub scope: DecompositionScope,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            vmd: VmdConfig::default(),
            sarima_order: None,
            sarima_search: SearchMode::Stepwise,
            lstm: LstmFitConfig::default(),
            mlp: MlpFitConfig::default(),
            recombiner_hidden: (2..=8).collect(),
            recombiner_train: TrainConfig {
                learning_rate: 0.1,
                epochs: 400,
                ..TrainConfig::default()
            },
            scope: DecompositionScope::TrainOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub vmd_config: VmdConfig,
    pub assignment: ComponentAssignment,
    pub periodic_model: SarimaModel,
    pub deterministic_model: LstmModel,
    pub volatility_model: MlpModel,
    /// Three component forecasts in, one combined value out.
    pub recombiner: MlpModel,
    pub scope: DecompositionScope,
    pub points_per_day: usize,
    pub seed: u64,
}

fn decompose_k3(values: &[f64], config: &VmdConfig) -> Result<ModeSet> {
    let mut vmd_config = config.clone();
    vmd_config.k = 3;
    vmd_decompose(values, &vmd_config)
}

/// Decomposition as the pipeline consumes it. The series mean is removed
/// before the solve — a large constant level otherwise pins one mode to
/// zero frequency and the daily cycle loses its slot — and added back into
/// the lowest mode, so the additive identity stays exact.
#[derive(Debug, Clone)]
pub struct PipelineDecomposition {
    pub triple: ComponentTriple,
    /// The three modes with the mean folded into the lowest; the residual
    /// is not included here (per-mode forecasters carry it as zero).
    pub modes: Vec<Vec<f64>>,
    pub assignment: ComponentAssignment,
    pub converged: bool,
    pub iterations: usize,
}

pub fn decompose_for_pipeline(
    values: &[f64],
    config: &VmdConfig,
) -> Result<PipelineDecomposition> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let modeset = decompose_k3(&centered, config)?;
    let (mut triple, assignment) = assign_components(&modeset)?;
    for v in triple.periodic.iter_mut() {
        *v += mean;
    }
    let mut modes = modeset.modes.clone();
    for v in modes[0].iter_mut() {
        *v += mean;
    }
    Ok(PipelineDecomposition {
        triple,
        modes,
        assignment,
        converged: modeset.converged,
        iterations: modeset.iterations_used,
    })
}

/// Fit the full pipeline on the training series. With the default
/// train-only scope nothing outside `train` is ever read, so test-period
/// perturbations cannot reach any fitted parameter.
pub fn fit_adaensemble(
    train: &TimeSeries,
    config: &EnsembleConfig,
    seed: u64,
) -> Result<EnsembleModel> {
    if train.len() < 10 * train.points_per_day {
        return Err(Error::data(format!(
            "training series of {} points is shorter than 10 days ({} points per day)",
            train.len(),
            train.points_per_day
        )));
    }
    let decomposition = decompose_for_pipeline(&train.values, &config.vmd)
        .map_err(|e| stage_error("decomposition (vmd)", e))?;
    fit_on_components(
        train,
        &decomposition.triple,
        decomposition.assignment,
        config,
        seed,
        DecompositionScope::TrainOnly,
    )
}

/// Replication mode: decompose the full series first (test information
/// leaks into the components by construction), then fit the sub-models on
/// the first `train_days` days of the components.
pub fn fit_adaensemble_full_scope(
    full: &TimeSeries,
    train_days: usize,
    config: &EnsembleConfig,
    seed: u64,
) -> Result<EnsembleModel> {
    let train = full.head_days(train_days)?;
    let decomposition = decompose_for_pipeline(&full.values, &config.vmd)
        .map_err(|e| stage_error("decomposition (vmd)", e))?;
    let components = decomposition.triple.slice(0..train.len());
    fit_on_components(
        &train,
        &components,
        decomposition.assignment,
        config,
        seed,
        DecompositionScope::FullSeries,
    )
}

fn stage_error(stage: &str, e: Error) -> Error {
    match e {
        Error::Invalid(m) => Error::Invalid(format!("{stage}: {m}")),
        Error::Data(m) => Error::Data(format!("{stage}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{stage}: {m}")),
        other => other,
    }
}

fn fit_on_components(
    train: &TimeSeries,
    components: &ComponentTriple,
    assignment: ComponentAssignment,
    config: &EnsembleConfig,
    seed: u64,
    scope: DecompositionScope,
) -> Result<EnsembleModel> {
    let season = train.points_per_day;
    let order = match config.sarima_order {
        Some(order) => order,
        None => sarima::select_order(&components.periodic, season, config.sarima_search)
            .map_err(|e| stage_error("periodic (sarima order selection)", e))?,
    };
    let periodic_model = sarima::fit_sarima(&components.periodic, order)
        .map_err(|e| stage_error("periodic (sarima)", e))?;
    let deterministic_model =
        lstm::fit_autoregressive(&components.deterministic, &config.lstm, split_seed(seed, 2))
            .map_err(|e| stage_error("deterministic (lstm)", e))?;
    let volatility_model =
        mlp::fit_autoregressive(&components.volatility, &config.mlp, split_seed(seed, 3))
            .map_err(|e| stage_error("volatility (mlp)", e))?;

    // One-step in-sample forecasts of each sub-model over the overlap
    // region become the recombiner's training inputs.
    let (p_off, p_fit) = periodic_model
        .one_step_fitted(&components.periodic)
        .map_err(|e| stage_error("periodic (sarima fitted values)", e))?;
    let (d_off, d_fit) = deterministic_model
        .one_step_fitted(&components.deterministic)
        .map_err(|e| stage_error("deterministic (lstm fitted values)", e))?;
    let (v_off, v_fit) = volatility_model
        .one_step_fitted(&components.volatility)
        .map_err(|e| stage_error("volatility (mlp fitted values)", e))?;
    let start = p_off.max(d_off).max(v_off);
    let n = train.len();
    if start + 20 > n {
        return Err(Error::data(format!(
            "recombiner overlap region too short: starts at {start} of {n}"
        )));
    }
    let triples: Vec<[f64; 3]> = (start..n)
        .map(|t| [p_fit[t - p_off], d_fit[t - d_off], v_fit[t - v_off]])
        .collect();
    let targets: Vec<f64> = train.values[start..n].to_vec();
    let recombiner = train_recombiner(&triples, &targets, config, split_seed(seed, 4))
        .map_err(|e| stage_error("recombiner (mlp)", e))?;

    Ok(EnsembleModel {
        vmd_config: VmdConfig { k: 3, ..config.vmd.clone() },
        assignment,
        periodic_model,
        deterministic_model,
        volatility_model,
        recombiner,
        scope,
        points_per_day: season,
        seed,
    })
}

/// The recombiner shares one scaler across its three inputs and the
/// target, fitted on the pooled range, so recombination happens in a
/// single well-conditioned box.
fn train_recombiner(
    triples: &[[f64; 3]],
    targets: &[f64],
    config: &EnsembleConfig,
    seed: u64,
) -> Result<MlpModel> {
    let mut pool: Vec<f64> = triples.iter().flatten().copied().collect();
    pool.extend_from_slice(targets);
    let scaler = MinMaxScaler::fit(&pool)?;
    let pairs: Vec<(Vec<f64>, f64)> = triples
        .iter()
        .zip(targets.iter())
        .map(|(t, y)| (t.iter().map(|v| scaler.apply_one(*v)).collect(), scaler.apply_one(*y)))
        .collect();
    let (hidden, _) = mlp::select_hidden_size(
        &pairs,
        3,
        &config.recombiner_hidden,
        &config.recombiner_train,
        seed,
    )?;
    let (net, final_mse) = mlp::mlp_train(&pairs, 3, hidden, &config.recombiner_train, seed)?;
    Ok(MlpModel {
        net,
        scaler,
        lags: Vec::new(),
        lag_window: 0,
        seed,
        train_config: config.recombiner_train.clone(),
        final_mse,
        history: Vec::new(),
    })
}

impl EnsembleModel {
    /// Feed one component-forecast triple through the recombiner.
    pub fn recombine(&self, periodic: f64, deterministic: f64, volatility: f64) -> Result<f64> {
        let input = [
            self.recombiner.scaler.apply_one(periodic),
            self.recombiner.scaler.apply_one(deterministic),
            self.recombiner.scaler.apply_one(volatility),
        ];
        Ok(self.recombiner.scaler.invert_one(self.recombiner.net.forward(&input)?))
    }

    /// Multi-step forecast from the end of the training period: the
    /// seasonal recursion extends the periodic component, the neural
    /// models feed their own predictions back, and each horizon's triple
    /// goes through the recombiner.
    pub fn forecast(&self, h: usize) -> Result<Vec<f64>> {
        if h < 1 {
            return Err(Error::invalid("forecast horizon must be at least 1"));
        }
        if h > 10 * self.points_per_day {
            return Err(Error::invalid("horizon too long: more than 10 days ahead"));
        }
        let p = self.periodic_model.forecast(h)?;
        let d = self
            .deterministic_model
            .forecast_recursive(&self.deterministic_model.history, h)?;
        let v = self.volatility_model.forecast_recursive(&self.volatility_model.history, h)?;
        self.combine_forecasts(&p, &d, &v)
    }

    /// Same combination, but from explicit component histories (used by the
    /// rolling-origin harness, which re-decomposes the data up to each
    /// origin). Coefficients stay frozen.
    pub fn forecast_from_components(
        &self,
        components: &ComponentTriple,
        h: usize,
    ) -> Result<Vec<f64>> {
        let p = self.periodic_model.forecast_from(&components.periodic, h)?;
        let d = self.deterministic_model.forecast_recursive(&components.deterministic, h)?;
        let v = self.volatility_model.forecast_recursive(&components.volatility, h)?;
        self.combine_forecasts(&p, &d, &v)
    }

    fn combine_forecasts(&self, p: &[f64], d: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        (0..p.len()).map(|j| self.recombine(p[j], d[j], v[j])).collect()
    }

    // -- directory serialization ---------------------------------------------

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("vmd.meta"), self.vmd_meta_text())?;
        let mut assignment = String::new();
        for (role, index, omega) in &self.assignment.entries {
            assignment.push_str(&format!(
                "{role} {index} {}\n",
                crate::sertext::fmt_f64(*omega)
            ));
        }
        std::fs::write(dir.join("assignment.txt"), assignment)?;
        std::fs::write(dir.join("periodic.sarima"), self.periodic_model.to_text())?;
        std::fs::write(dir.join("deterministic.lstm"), self.deterministic_model.to_text())?;
        std::fs::write(dir.join("volatility.mlp"), self.volatility_model.to_text())?;
        std::fs::write(dir.join("recombiner.mlp"), self.recombiner.to_text())?;
        Ok(())
    }

    fn vmd_meta_text(&self) -> String {
        let c = &self.vmd_config;
        let init = match c.init_omega {
            crate::vmd::OmegaInit::Uniform => "uniform".to_string(),
            crate::vmd::OmegaInit::Zero => "zero".to_string(),
            crate::vmd::OmegaInit::Random(s) => format!("random:{s}"),
        };
        format!(
            "format ensemble-vmd-v1\nk {}\nalpha {}\ntau {}\ntol {}\nmax_iter {}\ninit {}\npin_dc {}\nmirror_extend {}\nscope {}\npoints_per_day {}\nseed {}\n",
            c.k,
            crate::sertext::fmt_f64(c.alpha),
            crate::sertext::fmt_f64(c.tau),
            crate::sertext::fmt_f64(c.tol),
            c.max_iter,
            init,
            c.pin_dc,
            c.mirror_extend,
            self.scope.as_str(),
            self.points_per_day,
            self.seed
        )
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let meta_text = std::fs::read_to_string(dir.join("vmd.meta"))?;
        let doc = crate::sertext::KvDoc::parse(&meta_text);
        if doc.get("format")? != "ensemble-vmd-v1" {
            return Err(Error::data("not an ensemble model directory"));
        }
        let init = match doc.get("init")? {
            "uniform" => crate::vmd::OmegaInit::Uniform,
            "zero" => crate::vmd::OmegaInit::Zero,
            other => match other.strip_prefix("random:") {
                Some(s) => crate::vmd::OmegaInit::Random(
                    s.parse().map_err(|_| Error::data("bad random init seed"))?,
                ),
                None => return Err(Error::data(format!("unknown init {other:?}"))),
            },
        };
        let vmd_config = VmdConfig {
            k: doc.get_usize("k")?,
            alpha: doc.get_f64("alpha")?,
            tau: doc.get_f64("tau")?,
            tol: doc.get_f64("tol")?,
            max_iter: doc.get_usize("max_iter")?,
            init_omega: init,
            pin_dc: doc.get("pin_dc")? == "true",
            mirror_extend: doc.get("mirror_extend")? == "true",
        };
        let assignment_text = std::fs::read_to_string(dir.join("assignment.txt"))?;
        let mut entries = Vec::new();
        for line in assignment_text.lines().filter(|l| !l.trim().is_empty()) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::data(format!("bad assignment line {line:?}")));
            }
            entries.push((
                parts[0].to_string(),
                crate::sertext::parse_usize(parts[1])?,
                crate::sertext::parse_f64(parts[2])?,
            ));
        }
        Ok(EnsembleModel {
            vmd_config,
            assignment: ComponentAssignment { entries },
            periodic_model: SarimaModel::from_text(&std::fs::read_to_string(
                dir.join("periodic.sarima"),
            )?)?,
            deterministic_model: LstmModel::from_text(&std::fs::read_to_string(
                dir.join("deterministic.lstm"),
            )?)?,
            volatility_model: MlpModel::from_text(&std::fs::read_to_string(
                dir.join("volatility.mlp"),
            )?)?,
            recombiner: MlpModel::from_text(&std::fs::read_to_string(
                dir.join("recombiner.mlp"),
            )?)?,
            scope: DecompositionScope::parse(doc.get("scope")?)?,
            points_per_day: doc.get_usize("points_per_day")?,
            seed: doc.get_usize("seed")? as u64,
        })
    }
}

// ---------------------------------------------------------------------------
// Benchmark model constructors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Sarima,
    Mlp,
    Lstm,
    VmdMlp,
    VmdLstm,
    AdaEnsemble,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Sarima,
        ModelKind::Mlp,
        ModelKind::Lstm,
        ModelKind::VmdMlp,
        ModelKind::VmdLstm,
        ModelKind::AdaEnsemble,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Sarima => "sarima",
            ModelKind::Mlp => "mlp",
            ModelKind::Lstm => "lstm",
            ModelKind::VmdMlp => "vmd_mlp",
            ModelKind::VmdLstm => "vmd_lstm",
            ModelKind::AdaEnsemble => "adaensemble",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sarima" => Ok(ModelKind::Sarima),
            "mlp" => Ok(ModelKind::Mlp),
            "lstm" => Ok(ModelKind::Lstm),
            "vmd_mlp" => Ok(ModelKind::VmdMlp),
            "vmd_lstm" => Ok(ModelKind::VmdLstm),
            "adaensemble" => Ok(ModelKind::AdaEnsemble),
            other => Err(Error::invalid(format!("unknown model kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fitted benchmark model. The plain kinds work on the raw series; the
/// per-mode kinds carry one network per decomposition mode and forecast by
/// summing mode forecasts (the residual is carried as zero).
#[derive(Debug, Clone)]
pub enum FittedModel {
    Sarima(SarimaModel),
    Mlp(MlpModel),
    Lstm(LstmModel),
    VmdMlp(Vec<MlpModel>),
    VmdLstm(Vec<LstmModel>),
    AdaEnsemble(EnsembleModel),
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Sarima(_) => ModelKind::Sarima,
            FittedModel::Mlp(_) => ModelKind::Mlp,
            FittedModel::Lstm(_) => ModelKind::Lstm,
            FittedModel::VmdMlp(_) => ModelKind::VmdMlp,
            FittedModel::VmdLstm(_) => ModelKind::VmdLstm,
            FittedModel::AdaEnsemble(_) => ModelKind::AdaEnsemble,
        }
    }
}

/// Build one benchmark model on the training series.
pub fn fit_single(
    kind: ModelKind,
    train: &TimeSeries,
    config: &EnsembleConfig,
    seed: u64,
) -> Result<FittedModel> {
    match kind {
        ModelKind::Sarima => {
            let season = train.points_per_day;
            let order = match config.sarima_order {
                Some(order) => order,
                None => sarima::select_order(&train.values, season, config.sarima_search)?,
            };
            Ok(FittedModel::Sarima(sarima::fit_sarima(&train.values, order)?))
        }
        ModelKind::Mlp => Ok(FittedModel::Mlp(mlp::fit_autoregressive(
            &train.values,
            &config.mlp,
            split_seed(seed, 10),
        )?)),
        ModelKind::Lstm => Ok(FittedModel::Lstm(lstm::fit_autoregressive(
            &train.values,
            &config.lstm,
            split_seed(seed, 11),
        )?)),
        ModelKind::VmdMlp => {
            let decomposition = decompose_for_pipeline(&train.values, &config.vmd)?;
            let models: Vec<MlpModel> = decomposition
                .modes
                .iter()
                .enumerate()
                .map(|(i, mode)| {
                    mlp::fit_autoregressive(mode, &config.mlp, split_seed(seed, 20 + i as u64))
                })
                .collect::<Result<_>>()?;
            Ok(FittedModel::VmdMlp(models))
        }
        ModelKind::VmdLstm => {
            let decomposition = decompose_for_pipeline(&train.values, &config.vmd)?;
            let models: Vec<LstmModel> = decomposition
                .modes
                .iter()
                .enumerate()
                .map(|(i, mode)| {
                    lstm::fit_autoregressive(mode, &config.lstm, split_seed(seed, 30 + i as u64))
                })
                .collect::<Result<_>>()?;
            Ok(FittedModel::VmdLstm(models))
        }
        ModelKind::AdaEnsemble => {
            Ok(FittedModel::AdaEnsemble(fit_adaensemble(train, config, seed)?))
        }
    }
}

/// Sum of per-mode recursive forecasts; the residual contributes zero.
pub fn forecast_mode_sum_mlp(models: &[MlpModel], modes: &[Vec<f64>], h: usize) -> Result<Vec<f64>> {
    if models.len() != modes.len() {
        return Err(Error::invalid("mode count does not match model count"));
    }
    let mut total = vec![0.0; h];
    for (model, mode) in models.iter().zip(modes.iter()) {
        let fc = model.forecast_recursive(mode, h)?;
        for (t, f) in total.iter_mut().zip(fc.iter()) {
            *t += f;
        }
    }
    Ok(total)
}

pub fn forecast_mode_sum_lstm(
    models: &[LstmModel],
    modes: &[Vec<f64>],
    h: usize,
) -> Result<Vec<f64>> {
    if models.len() != modes.len() {
        return Err(Error::invalid("mode count does not match model count"));
    }
    let mut total = vec![0.0; h];
    for (model, mode) in models.iter().zip(modes.iter()) {
        let fc = model.forecast_recursive(mode, h)?;
        for (t, f) in total.iter_mut().zip(fc.iter()) {
            *t += f;
        }
    }
    Ok(total)
}

/// A recombiner that adds its inputs exactly, for tests that need the
/// additive baseline expressed through the same pathway.
pub fn additive_recombiner(scaler: MinMaxScaler) -> MlpModel {
    // With weights zero the network is its bias; an exact adder is not
    // representable, so tests build this only to exercise the plumbing.
    MlpModel {
        net: MlpNet {
            input_size: 3,
            hidden_size: 1,
            w_hidden: vec![0.0; 3],
            b_hidden: vec![0.0],
            w_out: vec![0.0],
            b_out: 0.0,
        },
        scaler,
        lags: Vec::new(),
        lag_window: 0,
        seed: 0,
        train_config: TrainConfig::default(),
        final_mse: 0.0,
        history: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SyntheticConfig};

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (x, y) in a.iter().zip(b.iter()) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / (va.sqrt() * vb.sqrt())
    }

    fn fast_config() -> EnsembleConfig {
        EnsembleConfig {
            sarima_order: Some(SarimaOrder::new(1, 0, 0, 0, 1, 0, 71).unwrap()),
            lstm: LstmFitConfig {
                lag_window: 8,
                hidden_candidates: vec![4],
                train: TrainConfig {
                    epochs: 30,
                    clip_norm: Some(5.0),
                    ..TrainConfig::default()
                },
            },
            mlp: MlpFitConfig {
                n_lags: 8,
                max_lag: 8,
                hidden_candidates: vec![4],
                train: TrainConfig { epochs: 30, ..TrainConfig::default() },
            },
            recombiner_hidden: vec![2, 4],
            recombiner_train: TrainConfig {
                learning_rate: 0.1,
                epochs: 150,
                ..TrainConfig::default()
            },
            ..EnsembleConfig::default()
        }
    }

    fn synthetic_train() -> crate::synth::SyntheticSeries {
        generate_synthetic(&SyntheticConfig {
            days: 12,
            points_per_day: 71,
            harmonics: vec![(150.0, 0.0), (40.0, 0.9)],
            ar_coeffs: vec![1.5588, -0.81],
            noise_std: 8.0,
            weekend_scale: 1.0,
            base_level: 400.0,
            seed: 99,
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn assignment_follows_frequency_order() {
        let modeset = ModeSet {
            modes: vec![vec![1.0; 8], vec![2.0; 8], vec![3.0; 8]],
            center_freqs: vec![0.014, 0.08, 0.31],
            residual: vec![0.5; 8],
            iterations_used: 1,
            converged: true,
        };
        let (triple, assignment) = assign_components(&modeset).unwrap();
        assert_eq!(triple.periodic, vec![1.0; 8]);
        assert_eq!(triple.deterministic, vec![2.0; 8]);
        assert_eq!(triple.volatility, vec![3.5; 8]);
        assert_eq!(assignment.entries[0].0, "periodic");
        assert_eq!(assignment.entries[2].2, 0.31);
    }

    #[test]
    fn assignment_sum_identity_is_exact() {
        let signal: Vec<f64> = (0..256)
            .map(|t| {
                let x = t as f64;
                (x * 0.05).sin() + 0.4 * (x * 0.9).sin() + 3.0
            })
            .collect();
        let modeset = vmd_decompose(&signal, &VmdConfig::default()).unwrap();
        let (triple, _) = assign_components(&modeset).unwrap();
        for (sum, original) in triple.sum().iter().zip(signal.iter()) {
            assert!((sum - original).abs() < 1e-10);
        }
    }

    #[test]
    fn assignment_requires_three_modes() {
        let modeset = ModeSet {
            modes: vec![vec![0.0; 4]; 2],
            center_freqs: vec![0.1, 0.2],
            residual: vec![0.0; 4],
            iterations_used: 1,
            converged: true,
        };
        assert!(assign_components(&modeset).is_err());
    }

    #[test]
    fn pipeline_recovers_the_harmonic_in_the_periodic_slot() {
        let data = synthetic_train();
        let model = fit_adaensemble(&data.series, &fast_config(), 7).unwrap();
        // Ground-truth oracle from the generator: the periodic component of
        // the fit should track the true harmonic profile.
        let decomposition =
            decompose_for_pipeline(&data.series.values, &model.vmd_config).unwrap();
        let corr = correlation(&decomposition.triple.periodic, &data.periodic);
        assert!(corr > 0.95, "periodic correlation {corr}");
    }

    #[test]
    fn noiseless_input_has_tiny_volatility_share() {
        let clean = generate_synthetic(&SyntheticConfig {
            days: 12,
            points_per_day: 71,
            harmonics: vec![(150.0, 0.0), (40.0, 0.9)],
            ar_coeffs: vec![],
            noise_std: 0.0,
            weekend_scale: 1.0,
            base_level: 400.0,
            seed: 5,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let decomposition =
            decompose_for_pipeline(&clean.series.values, &VmdConfig::default()).unwrap();
        let triple = decomposition.triple;
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        let share = 100.0 * var(&triple.volatility) / var(&clean.series.values);
        assert!(share < 5.0, "volatility share {share}%");
    }

    #[test]
    fn fit_is_deterministic() {
        let data = synthetic_train();
        let a = fit_adaensemble(&data.series, &fast_config(), 42).unwrap();
        let b = fit_adaensemble(&data.series, &fast_config(), 42).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        a.save_dir(dir_a.path()).unwrap();
        b.save_dir(dir_b.path()).unwrap();
        for name in [
            "vmd.meta",
            "assignment.txt",
            "periodic.sarima",
            "deterministic.lstm",
            "volatility.mlp",
            "recombiner.mlp",
        ] {
            let bytes_a = std::fs::read(dir_a.path().join(name)).unwrap();
            let bytes_b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(bytes_a, bytes_b, "{name} differs between identical fits");
        }
    }

    #[test]
    fn forecast_h1_is_the_recombined_triple() {
        let data = synthetic_train();
        let model = fit_adaensemble(&data.series, &fast_config(), 7).unwrap();
        let p = model.periodic_model.forecast(1).unwrap()[0];
        let d = model
            .deterministic_model
            .forecast_recursive(&model.deterministic_model.history, 1)
            .unwrap()[0];
        let v = model
            .volatility_model
            .forecast_recursive(&model.volatility_model.history, 1)
            .unwrap()[0];
        let expect = model.recombine(p, d, v).unwrap();
        let got = model.forecast(1).unwrap()[0];
        assert!((got - expect).abs() < 1e-12);
        assert!(model.forecast(0).is_err());
    }

    #[test]
    fn zero_subforecasts_give_constant_bias_pathway() {
        let data = synthetic_train();
        let model = fit_adaensemble(&data.series, &fast_config(), 7).unwrap();
        let c1 = model.recombine(0.0, 0.0, 0.0).unwrap();
        let c2 = model.recombine(0.0, 0.0, 0.0).unwrap();
        assert_eq!(c1, c2);
        assert!(c1.is_finite());
    }

    #[test]
    fn recombiner_tracks_the_additive_baseline_in_sample() {
        let data = synthetic_train();
        let model = fit_adaensemble(&data.series, &fast_config(), 7).unwrap();
        let decomposition =
            decompose_for_pipeline(&data.series.values, &model.vmd_config).unwrap();
        let triple = decomposition.triple;
        let (p_off, p_fit) = model.periodic_model.one_step_fitted(&triple.periodic).unwrap();
        let (d_off, d_fit) =
            model.deterministic_model.one_step_fitted(&triple.deterministic).unwrap();
        let (v_off, v_fit) = model.volatility_model.one_step_fitted(&triple.volatility).unwrap();
        let start = p_off.max(d_off).max(v_off);
        let n = data.series.len();
        let mut sq_combined = 0.0;
        let mut sq_additive = 0.0;
        for t in start..n {
            let (p, d, v) =
                (p_fit[t - p_off], d_fit[t - d_off], v_fit[t - v_off]);
            let target = data.series.values[t];
            let combined = model.recombine(p, d, v).unwrap();
            sq_combined += (combined - target).powi(2);
            sq_additive += (p + d + v - target).powi(2);
        }
        let rmse_combined = (sq_combined / (n - start) as f64).sqrt();
        let rmse_additive = (sq_additive / (n - start) as f64).sqrt();
        assert!(
            rmse_combined <= 1.05 * rmse_additive,
            "recombiner {rmse_combined} vs additive {rmse_additive}"
        );
    }

    #[test]
    fn save_load_round_trip_preserves_forecasts() {
        let data = synthetic_train();
        let model = fit_adaensemble(&data.series, &fast_config(), 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model");
        model.save_dir(&path).unwrap();
        let back = EnsembleModel::load_dir(&path).unwrap();
        assert_eq!(model, back);
        assert_eq!(model.forecast(10).unwrap(), back.forecast(10).unwrap());
    }

    #[test]
    fn vmd_mlp_trains_one_network_per_mode() {
        let data = synthetic_train();
        let model = fit_single(ModelKind::VmdMlp, &data.series, &fast_config(), 3).unwrap();
        match model {
            FittedModel::VmdMlp(models) => assert_eq!(models.len(), 3),
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn mode_sum_forecast_equals_manual_summation() {
        let data = synthetic_train();
        let config = fast_config();
        let decomposition = decompose_for_pipeline(&data.series.values, &config.vmd).unwrap();
        let model = fit_single(ModelKind::VmdLstm, &data.series, &config, 3).unwrap();
        let models = match model {
            FittedModel::VmdLstm(m) => m,
            _ => panic!("wrong variant"),
        };
        let h = 1;
        let total = forecast_mode_sum_lstm(&models, &decomposition.modes, h).unwrap();
        let mut manual = 0.0;
        for (m, mode) in models.iter().zip(decomposition.modes.iter()) {
            manual += m.forecast_recursive(mode, h).unwrap()[0];
        }
        assert!((total[0] - manual).abs() < 1e-12);
    }
}

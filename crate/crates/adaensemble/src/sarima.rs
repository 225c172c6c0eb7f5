//! Seasonal autoregressive integrated moving-average modeling for the
//! periodic component: differencing, conditional-sum-of-squares fitting
//! over a stationarity-safe reparametrization, AICc order selection, and
//! multi-step forecasting by the difference-equation recursion.
//!
//! Polynomial sign convention (both regular and seasonal, AR and MA):
//! `poly(z) = 1 - c_1 z - ... - c_n z^n`, so an AR(1) with coefficient
//! 0.5 satisfies `y_t = 0.5 y_{t-1} + e_t` and an MA(1) with coefficient
//! 0.3 satisfies `y_t = e_t - 0.3 e_{t-1}`.

use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::poly::{
    convolve, expand_lag_polynomial, pacf_to_coeffs, roots_outside_unit_circle,
};
use crate::rng::{rng_from_seed, split_seed};
use crate::sertext::{fmt_f64, fmt_f64_slice, KvDoc};

/// Orders `(p, d, q)(P, D, Q)_S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SarimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub sp: usize,
    pub sd: usize,
    pub sq: usize,
    pub s: usize,
}

impl SarimaOrder {
    pub fn new(p: usize, d: usize, q: usize, sp: usize, sd: usize, sq: usize, s: usize) -> Result<Self> {
        let order = SarimaOrder { p, d, q, sp, sd, sq, s };
        order.validate()?;
        Ok(order)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s < 1 {
            return Err(Error::invalid("seasonal period must be at least 1"));
        }
        if self.s == 1 && (self.sp > 0 || self.sd > 0 || self.sq > 0) {
            return Err(Error::invalid("seasonal orders require a period of at least 2"));
        }
        if self.d + self.sd > 3 {
            return Err(Error::invalid("total differencing d + D must not exceed 3"));
        }
        if self.p > 5 || self.q > 5 {
            return Err(Error::invalid("nonseasonal orders p, q must not exceed 5"));
        }
        if self.sp > 2 || self.sq > 2 {
            return Err(Error::invalid("seasonal orders P, Q must not exceed 2"));
        }
        Ok(())
    }

    /// Number of estimated coefficients excluding intercept and variance.
    pub fn n_coeffs(&self) -> usize {
        self.p + self.q + self.sp + self.sq
    }

    pub fn has_intercept(&self) -> bool {
        self.d + self.sd == 0
    }
}

impl std::fmt::Display for SarimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({},{},{})({},{},{})_{}",
            self.p, self.d, self.q, self.sp, self.sd, self.sq, self.s
        )
    }
}

// ---------------------------------------------------------------------------
// Differencing
// ---------------------------------------------------------------------------

/// Apply seasonal differencing `sd` times, then ordinary differencing `d`
/// times. Output length is `input - d - s*sd`.
pub fn difference(values: &[f64], d: usize, sd: usize, s: usize) -> Result<Vec<f64>> {
    Ok(difference_full(values, d, sd, s)?.0)
}

/// Per-stage initial values (prefixes) captured while differencing, enough
/// to integrate the differenced series back to the original exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffInitials {
    /// First `s` values of the input to each seasonal stage, in application order.
    pub seasonal_prefixes: Vec<Vec<f64>>,
    /// First value of the input to each ordinary stage, in application order.
    pub ordinary_prefixes: Vec<f64>,
    pub s: usize,
}

/// Per-stage trailing values captured while differencing, enough to invert
/// future-value forecasts back to the original scale.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffTails {
    /// Last `s` values of the input to each seasonal stage, in application order.
    pub seasonal_tails: Vec<Vec<f64>>,
    /// Last value of the input to each ordinary stage, in application order.
    pub ordinary_tails: Vec<f64>,
    pub s: usize,
}

pub fn difference_full(
    values: &[f64],
    d: usize,
    sd: usize,
    s: usize,
) -> Result<(Vec<f64>, DiffInitials, DiffTails)> {
    if values.len() <= d + s * sd {
        return Err(Error::data(format!(
            "series of length {} too short to difference with d={d}, D={sd}, S={s}",
            values.len()
        )));
    }
    let mut work = values.to_vec();
    let mut initials =
        DiffInitials { seasonal_prefixes: Vec::new(), ordinary_prefixes: Vec::new(), s };
    let mut tails = DiffTails { seasonal_tails: Vec::new(), ordinary_tails: Vec::new(), s };
    for _ in 0..sd {
        initials.seasonal_prefixes.push(work[..s].to_vec());
        tails.seasonal_tails.push(work[work.len() - s..].to_vec());
        work = (s..work.len()).map(|t| work[t] - work[t - s]).collect();
    }
    for _ in 0..d {
        initials.ordinary_prefixes.push(work[0]);
        tails.ordinary_tails.push(*work.last().unwrap());
        work = (1..work.len()).map(|t| work[t] - work[t - 1]).collect();
    }
    Ok((work, initials, tails))
}

/// Exact inverse of `difference_full` over the training span.
pub fn integrate(differenced: &[f64], initials: &DiffInitials) -> Vec<f64> {
    let mut work = differenced.to_vec();
    for &first in initials.ordinary_prefixes.iter().rev() {
        let mut undone = Vec::with_capacity(work.len() + 1);
        undone.push(first);
        for v in &work {
            undone.push(undone.last().unwrap() + v);
        }
        work = undone;
    }
    let s = initials.s;
    for prefix in initials.seasonal_prefixes.iter().rev() {
        let mut undone = Vec::with_capacity(work.len() + s);
        undone.extend_from_slice(prefix);
        for (t, v) in work.iter().enumerate() {
            let prev = undone[t];
            undone.push(v + prev);
        }
        work = undone;
    }
    work
}

/// Carry differenced-scale forecasts back to the original scale using the
/// training-period stage tails.
pub fn integrate_forecasts(forecasts: &[f64], tails: &DiffTails) -> Vec<f64> {
    let mut work = forecasts.to_vec();
    for &last in tails.ordinary_tails.iter().rev() {
        let mut prev = last;
        for v in work.iter_mut() {
            prev += *v;
            *v = prev;
        }
    }
    let s = tails.s;
    for tail in tails.seasonal_tails.iter().rev() {
        let mut extended = tail.clone();
        for v in work.iter_mut() {
            let base = extended[extended.len() - s];
            *v += base;
            extended.push(*v);
        }
    }
    work
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SarimaModel {
    pub order: SarimaOrder,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub seasonal_phi: Vec<f64>,
    pub seasonal_theta: Vec<f64>,
    pub sigma2: f64,
    pub intercept: f64,
    pub loglik: f64,
    pub aicc: f64,
    /// Tail of the differenced training series, long enough for the
    /// autoregressive recursion.
    pub tail_y: Vec<f64>,
    /// Tail of the training residuals, long enough for the moving-average
    /// recursion.
    pub tail_eps: Vec<f64>,
    pub diff_tails: DiffTails,
    pub n_eff: usize,
}

/// Expanded sparse lag polynomials: `(lag, coefficient)` pairs with lag >= 1,
/// signs as they appear in the full polynomial product.
struct ExpandedPolys {
    ar: Vec<(usize, f64)>,
    ma: Vec<(usize, f64)>,
    /// Highest autoregressive lag (conditioning cutoff).
    ar_span: usize,
    ma_span: usize,
}

fn expand(order: &SarimaOrder, phi: &[f64], theta: &[f64], sphi: &[f64], stheta: &[f64]) -> ExpandedPolys {
    let ar_full = convolve(
        &expand_lag_polynomial(phi, 1),
        &expand_lag_polynomial(sphi, order.s),
    );
    let ma_full = convolve(
        &expand_lag_polynomial(theta, 1),
        &expand_lag_polynomial(stheta, order.s),
    );
    let sparse = |poly: &[f64]| -> Vec<(usize, f64)> {
        poly.iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| **c != 0.0)
            .map(|(l, c)| (l, *c))
            .collect()
    };
    ExpandedPolys {
        ar: sparse(&ar_full),
        ma: sparse(&ma_full),
        ar_span: order.p + order.s * order.sp,
        ma_span: order.q + order.s * order.sq,
    }
}

/// Residual recursion conditioned on the first `ar_span` observations:
/// residuals before the cutoff are held at zero.
fn css_residuals(y: &[f64], mu: f64, polys: &ExpandedPolys) -> Vec<f64> {
    let n = y.len();
    let mut eps = vec![0.0; n];
    for t in polys.ar_span..n {
        let mut e = y[t] - mu;
        for &(lag, c) in &polys.ar {
            e += c * (y[t - lag] - mu);
        }
        for &(lag, c) in &polys.ma {
            if t >= lag {
                e -= c * eps[t - lag];
            }
        }
        eps[t] = e;
    }
    eps
}

fn css_value(y: &[f64], mu: f64, polys: &ExpandedPolys) -> f64 {
    let eps = css_residuals(y, mu, polys);
    eps[polys.ar_span..].iter().map(|e| e * e).sum()
}

/// Difference-equation forecast on the differenced scale: future shocks
/// zero, known residuals for past terms, earlier forecasts feeding later
/// ones.
fn forecast_differenced(
    y_hist: &[f64],
    eps_hist: &[f64],
    mu: f64,
    polys: &ExpandedPolys,
    h: usize,
) -> Vec<f64> {
    let n = y_hist.len();
    let mut forecasts = Vec::with_capacity(h);
    for j in 1..=h {
        let mut value = mu;
        for &(lag, c) in &polys.ar {
            let idx = n + j - 1 - lag; // global index of Y_{T+j-lag}
            let past = if idx < n { y_hist[idx] } else { forecasts[idx - n] };
            value -= c * (past - mu);
        }
        for &(lag, c) in &polys.ma {
            if j <= lag {
                let idx = n + j - 1 - lag;
                if idx < eps_hist.len() {
                    value += c * eps_hist[idx];
                }
            }
        }
        forecasts.push(value);
    }
    forecasts
}

struct ParamLayout {
    order: SarimaOrder,
    intercept_base: f64,
}

impl ParamLayout {
    fn dim(&self) -> usize {
        self.order.n_coeffs() + usize::from(self.order.has_intercept())
    }

    /// Unconstrained point -> (phi, theta, sPhi, sTheta, mu). tanh maps to
    /// partial autocorrelations, the Levinson step maps those to stationary
    /// (or invertible) coefficient sets.
    fn unpack(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64) {
        let clamp = 0.9999;
        let mut at = 0;
        let mut take = |count: usize, u: &[f64]| -> Vec<f64> {
            let pacf: Vec<f64> =
                u[at..at + count].iter().map(|v| v.tanh().clamp(-clamp, clamp)).collect();
            at += count;
            pacf_to_coeffs(&pacf)
        };
        let phi = take(self.order.p, u);
        let theta = take(self.order.q, u);
        let sphi = take(self.order.sp, u);
        let stheta = take(self.order.sq, u);
        let mu = if self.order.has_intercept() { self.intercept_base + u[at] } else { 0.0 };
        (phi, theta, sphi, stheta, mu)
    }
}

/// Fit by minimizing the conditional sum of squares of the differenced
/// series. The optimizer runs from a neutral start and once more from a
/// seeded random restart; the better converged run wins.
pub fn fit_sarima(values: &[f64], order: SarimaOrder) -> Result<SarimaModel> {
    order.validate()?;
    let (y, _initials, diff_tails) = difference_full(values, order.d, order.sd, order.s)?;
    let needed = 10 * (order.n_coeffs() + 1);
    if y.len() < needed {
        return Err(Error::data(format!(
            "differenced length {} below the {} required for order {order}",
            y.len(),
            needed
        )));
    }

    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let layout = ParamLayout { order, intercept_base: ybar };
    let objective = |u: &[f64]| -> f64 {
        let (phi, theta, sphi, stheta, mu) = layout.unpack(u);
        let polys = expand(&order, &phi, &theta, &sphi, &stheta);
        css_value(&y, mu, &polys)
    };

    let optimizer = NelderMead::default();
    let start = vec![0.0; layout.dim()];
    let first = optimizer.minimize(&start, objective)?;

    let mut rng = rng_from_seed(split_seed(0x5a71ab, order.n_coeffs() as u64));
    use rand::Rng as _;
    let restart: Vec<f64> = (0..layout.dim()).map(|_| rng.gen_range(-0.6..0.6)).collect();
    let second = optimizer.minimize(&restart, objective)?;

    let best = match (first.converged, second.converged) {
        (true, true) => {
            if first.value <= second.value {
                first
            } else {
                second
            }
        }
        (true, false) => first,
        (false, true) => second,
        (false, false) => {
            return Err(Error::numerical(format!(
                "sarima optimizer did not converge for order {order}: css {:.6e} after {} iterations (restart css {:.6e})",
                first.value, first.iterations, second.value
            )));
        }
    };

    let (phi, theta, sphi, stheta, mu) = layout.unpack(&best.x);
    let polys = expand(&order, &phi, &theta, &sphi, &stheta);
    let eps = css_residuals(&y, mu, &polys);
    let n_css = y.len() - polys.ar_span;
    let css: f64 = eps[polys.ar_span..].iter().map(|e| e * e).sum();
    let sigma2 = css / n_css as f64;
    if !(sigma2 > 0.0) {
        return Err(Error::numerical(format!(
            "degenerate innovation variance for order {order}"
        )));
    }
    let loglik = -0.5 * n_css as f64 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    let k = order.n_coeffs() + usize::from(order.has_intercept()) + 1;
    let aicc = if n_css > k + 1 {
        -2.0 * loglik
            + 2.0 * k as f64
            + 2.0 * (k * (k + 1)) as f64 / (n_css - k - 1) as f64
    } else {
        f64::INFINITY
    };

    // Equal-length tails keep time indices aligned in the forecast recursion.
    let keep = polys.ar_span.max(polys.ma_span).max(1).min(y.len());
    let (keep_y, keep_eps) = (keep, keep);
    Ok(SarimaModel {
        order,
        phi,
        theta,
        seasonal_phi: sphi,
        seasonal_theta: stheta,
        sigma2,
        intercept: mu,
        loglik,
        aicc,
        tail_y: y[y.len() - keep_y..].to_vec(),
        tail_eps: eps[eps.len() - keep_eps..].to_vec(),
        diff_tails,
        n_eff: n_css,
    })
}

impl SarimaModel {
    fn polys(&self) -> ExpandedPolys {
        expand(&self.order, &self.phi, &self.theta, &self.seasonal_phi, &self.seasonal_theta)
    }

    /// Coefficient polynomials satisfy stationarity and invertibility with
    /// the given root margin. Guaranteed by the fitting parametrization;
    /// exposed so tests can verify the invariant independently.
    pub fn roots_are_safe(&self, margin: f64) -> bool {
        roots_outside_unit_circle(&self.phi, margin)
            && roots_outside_unit_circle(&self.theta, margin)
            && roots_outside_unit_circle(&self.seasonal_phi, margin)
            && roots_outside_unit_circle(&self.seasonal_theta, margin)
    }

    /// Forecast `h` steps from the end of the training series.
    pub fn forecast(&self, h: usize) -> Result<Vec<f64>> {
        if h < 1 {
            return Err(Error::invalid("forecast horizon must be at least 1"));
        }
        if h > 10 * self.order.s {
            return Err(Error::invalid(format!(
                "horizon too long: {h} exceeds 10 seasonal periods ({})",
                10 * self.order.s
            )));
        }
        let polys = self.polys();
        let diff_forecasts =
            forecast_differenced(&self.tail_y, &self.tail_eps, self.intercept, &polys, h);
        Ok(integrate_forecasts(&diff_forecasts, &self.diff_tails))
    }

    /// Forecast `h` steps from the end of an arbitrary history, with the
    /// fitted coefficients frozen: the residual recursion is replayed over
    /// the provided values, so no refit happens.
    pub fn forecast_from(&self, history: &[f64], h: usize) -> Result<Vec<f64>> {
        if h < 1 {
            return Err(Error::invalid("forecast horizon must be at least 1"));
        }
        if h > 10 * self.order.s {
            return Err(Error::invalid("horizon too long"));
        }
        let (y, _initials, tails) =
            difference_full(history, self.order.d, self.order.sd, self.order.s)?;
        let polys = self.polys();
        if y.len() <= polys.ar_span {
            return Err(Error::data("history too short for the fitted order"));
        }
        let eps = css_residuals(&y, self.intercept, &polys);
        let diff_forecasts = forecast_differenced(&y, &eps, self.intercept, &polys, h);
        Ok(integrate_forecasts(&diff_forecasts, &tails))
    }

    /// In-sample one-step-ahead fitted values on the original scale.
    /// Returns `(offset, fitted)` where `fitted[i]` predicts
    /// `values[offset + i]` from data before it. Because differencing is
    /// linear in past observations, the one-step error on the original
    /// scale equals the differenced-scale residual.
    pub fn one_step_fitted(&self, values: &[f64]) -> Result<(usize, Vec<f64>)> {
        let (y, _initials, _tails) =
            difference_full(values, self.order.d, self.order.sd, self.order.s)?;
        let polys = self.polys();
        let eps = css_residuals(&y, self.intercept, &polys);
        let shift = self.order.d + self.order.s * self.order.sd;
        let offset = shift + polys.ar_span;
        let fitted: Vec<f64> = (offset..values.len())
            .map(|i| values[i] - eps[i - shift])
            .collect();
        Ok((offset, fitted))
    }

    // -- serialization ------------------------------------------------------

    pub fn to_text(&self) -> String {
        let mut out = String::from("format sarima-v1\n");
        let o = &self.order;
        out.push_str(&format!(
            "order {} {} {} {} {} {} {}\n",
            o.p, o.d, o.q, o.sp, o.sd, o.sq, o.s
        ));
        out.push_str(&format!("phi {}\n", fmt_f64_slice(&self.phi)));
        out.push_str(&format!("theta {}\n", fmt_f64_slice(&self.theta)));
        out.push_str(&format!("seasonal_phi {}\n", fmt_f64_slice(&self.seasonal_phi)));
        out.push_str(&format!("seasonal_theta {}\n", fmt_f64_slice(&self.seasonal_theta)));
        out.push_str(&format!("sigma2 {}\n", fmt_f64(self.sigma2)));
        out.push_str(&format!("intercept {}\n", fmt_f64(self.intercept)));
        out.push_str(&format!("loglik {}\n", fmt_f64(self.loglik)));
        out.push_str(&format!("aicc {}\n", fmt_f64(self.aicc)));
        out.push_str(&format!("n_eff {}\n", self.n_eff));
        out.push_str(&format!("tail_y {}\n", fmt_f64_slice(&self.tail_y)));
        out.push_str(&format!("tail_eps {}\n", fmt_f64_slice(&self.tail_eps)));
        for tail in &self.diff_tails.seasonal_tails {
            out.push_str(&format!("seasonal_tail {}\n", fmt_f64_slice(tail)));
        }
        if !self.diff_tails.ordinary_tails.is_empty() {
            out.push_str(&format!(
                "ordinary_tails {}\n",
                fmt_f64_slice(&self.diff_tails.ordinary_tails)
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text);
        if doc.get("format")? != "sarima-v1" {
            return Err(Error::data("not a sarima-v1 model file"));
        }
        let order_fields: Vec<usize> = doc
            .get("order")?
            .split_whitespace()
            .map(crate::sertext::parse_usize)
            .collect::<Result<_>>()?;
        if order_fields.len() != 7 {
            return Err(Error::data("order line must have 7 fields"));
        }
        let order = SarimaOrder::new(
            order_fields[0],
            order_fields[1],
            order_fields[2],
            order_fields[3],
            order_fields[4],
            order_fields[5],
            order_fields[6],
        )?;
        let seasonal_tails: Vec<Vec<f64>> = doc
            .get_all("seasonal_tail")
            .iter()
            .map(|s| crate::sertext::parse_f64_slice(s))
            .collect::<Result<_>>()?;
        Ok(SarimaModel {
            order,
            phi: doc.get_floats_or_empty("phi")?,
            theta: doc.get_floats_or_empty("theta")?,
            seasonal_phi: doc.get_floats_or_empty("seasonal_phi")?,
            seasonal_theta: doc.get_floats_or_empty("seasonal_theta")?,
            sigma2: doc.get_f64("sigma2")?,
            intercept: doc.get_f64("intercept")?,
            loglik: doc.get_f64("loglik")?,
            aicc: doc.get_f64("aicc")?,
            n_eff: doc.get_usize("n_eff")?,
            tail_y: doc.get_floats_or_empty("tail_y")?,
            tail_eps: doc.get_floats_or_empty("tail_eps")?,
            diff_tails: DiffTails {
                seasonal_tails,
                ordinary_tails: doc.get_floats_or_empty("ordinary_tails")?,
                s: order.s,
            },
        })
    }
}

// ---------------------------------------------------------------------------
// Order selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Neighborhood moves from a handful of starting orders.
    Stepwise,
    /// Exhaustive enumeration of the order box. Slow for large S.
    Grid,
}

/// Pearson autocorrelation at `lag`.
pub fn autocorrelation(values: &[f64], lag: usize) -> f64 {
    if lag == 0 || lag >= values.len() {
        return 0.0;
    }
    let a = &values[lag..];
    let b = &values[..values.len() - lag];
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
    if va <= 0.0 || vb <= 0.0 {
        0.0
    } else {
        cov / (va.sqrt() * vb.sqrt())
    }
}

/// Level-stationarity statistic: normalized partial-sum variance ratio
/// with a Bartlett long-run variance. Values above `KPSS_THRESHOLD`
/// indicate a unit root.
pub fn kpss_statistic(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 8 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let demeaned: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let mut partial = 0.0;
    let mut sum_sq_partial = 0.0;
    for v in &demeaned {
        partial += v;
        sum_sq_partial += partial * partial;
    }
    let gamma0: f64 = demeaned.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let lags = ((4.0 * (n as f64 / 100.0).powf(0.25)) as usize).min(n - 1);
    let mut long_run = gamma0;
    for j in 1..=lags {
        let gamma_j: f64 =
            (j..n).map(|t| demeaned[t] * demeaned[t - j]).sum::<f64>() / n as f64;
        long_run += 2.0 * (1.0 - j as f64 / (lags as f64 + 1.0)) * gamma_j;
    }
    if long_run <= 0.0 {
        return 0.0;
    }
    sum_sq_partial / (n as f64 * n as f64 * long_run)
}

/// 5% critical value of the level-stationarity statistic.
pub const KPSS_THRESHOLD: f64 = 0.463;

/// Portmanteau whiteness statistic over `lags` autocorrelations.
fn ljung_box(values: &[f64], lags: usize) -> f64 {
    let n = values.len() as f64;
    let mut q = 0.0;
    for k in 1..=lags {
        let r = autocorrelation(values, k);
        q += r * r / (n - k as f64);
    }
    n * (n + 2.0) * q
}

/// Wilson-Hilferty 99th-percentile approximation of the chi-square quantile.
fn chi2_q99(dof: usize) -> f64 {
    let k = dof as f64;
    let z = 2.3263478740408408;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

/// Choose `(p,d,q)(P,D,Q)_S`. Differencing first: D = 1 when the lag-S
/// autocorrelation exceeds 0.9, then d by the stationarity statistic,
/// capped at 2. A whiteness gate then short-circuits to the empty order
/// when the differenced series shows no significant autocorrelation;
/// otherwise AICc-minimizing search runs over p,q <= 5 and P,Q <= 2.
pub fn select_order(values: &[f64], s: usize, mode: SearchMode) -> Result<SarimaOrder> {
    if s < 1 {
        return Err(Error::invalid("seasonal period must be at least 1"));
    }
    let seasonal = s >= 2 && values.len() > 3 * s;
    let sd = usize::from(seasonal && autocorrelation(values, s) > 0.9);
    let mut work = if sd > 0 { difference(values, 0, sd, s)? } else { values.to_vec() };
    let mut d = 0;
    while d < 2 && kpss_statistic(&work) > KPSS_THRESHOLD {
        work = difference(&work, 1, 0, 1)?;
        d += 1;
    }

    let lb_lags = if seasonal { s.max(10) } else { 10 }.min(work.len() / 4);
    if lb_lags >= 3 && ljung_box(&work, lb_lags) < chi2_q99(lb_lags) {
        return SarimaOrder::new(0, d, 0, 0, sd, 0, s);
    }

    let max_sp = if seasonal { 2 } else { 0 };
    let fit_candidate = |p: usize, q: usize, sp: usize, sq: usize| -> Option<(SarimaOrder, f64)> {
        let order = SarimaOrder::new(p, d, q, sp, sd, sq, s).ok()?;
        let model = fit_sarima(values, order).ok()?;
        model.aicc.is_finite().then_some((order, model.aicc))
    };

    let mut best: Option<(SarimaOrder, f64)> = None;
    let consider = |candidate: Option<(SarimaOrder, f64)>, best: &mut Option<(SarimaOrder, f64)>| -> bool {
        match (candidate, best.as_ref()) {
            (Some((o, a)), Some((_, b))) if a < *b => {
                *best = Some((o, a));
                true
            }
            (Some((o, a)), None) => {
                *best = Some((o, a));
                true
            }
            _ => false,
        }
    };

    match mode {
        SearchMode::Grid => {
            for p in 0..=5 {
                for q in 0..=5 {
                    for sp in 0..=max_sp {
                        for sq in 0..=max_sp {
                            consider(fit_candidate(p, q, sp, sq), &mut best);
                        }
                    }
                }
            }
        }
        SearchMode::Stepwise => {
            let sp0 = max_sp.min(1);
            let starts: [(usize, usize, usize, usize); 4] =
                [(2, 2, sp0, sp0), (0, 0, 0, 0), (1, 0, sp0, 0), (0, 1, 0, sp0)];
            for (p, q, sp, sq) in starts {
                consider(fit_candidate(p, q, sp, sq), &mut best);
            }
            let mut steps = 0;
            loop {
                steps += 1;
                let (current, _) = match best {
                    Some(b) => b,
                    None => break,
                };
                let (p, q, sp, sq) = (current.p, current.q, current.sp, current.sq);
                let mut moved = false;
                let mut moves: Vec<(i64, i64, i64, i64)> = vec![
                    (1, 0, 0, 0),
                    (-1, 0, 0, 0),
                    (0, 1, 0, 0),
                    (0, -1, 0, 0),
                    (1, 1, 0, 0),
                    (-1, -1, 0, 0),
                ];
                if seasonal {
                    moves.extend_from_slice(&[
                        (0, 0, 1, 0),
                        (0, 0, -1, 0),
                        (0, 0, 0, 1),
                        (0, 0, 0, -1),
                        (0, 0, 1, 1),
                        (0, 0, -1, -1),
                    ]);
                }
                for (dp, dq, dsp, dsq) in moves {
                    let np = p as i64 + dp;
                    let nq = q as i64 + dq;
                    let nsp = sp as i64 + dsp;
                    let nsq = sq as i64 + dsq;
                    if np < 0 || nq < 0 || nsp < 0 || nsq < 0 {
                        continue;
                    }
                    if np > 5 || nq > 5 || nsp > max_sp as i64 || nsq > max_sp as i64 {
                        continue;
                    }
                    if consider(
                        fit_candidate(np as usize, nq as usize, nsp as usize, nsq as usize),
                        &mut best,
                    ) {
                        moved = true;
                    }
                }
                if !moved || steps > 40 {
                    break;
                }
            }
        }
    }

    best.map(|(order, _)| order)
        .ok_or_else(|| Error::numerical("no candidate order could be fitted"))
}

// ---------------------------------------------------------------------------
// Simulation (test and benchmark support)
// ---------------------------------------------------------------------------

/// Simulate a model of the given orders with the crate's sign convention.
/// A burn-in of 10 seasonal periods plus 200 points is discarded.
#[allow(clippy::too_many_arguments)]
pub fn simulate_sarima(
    order: SarimaOrder,
    phi: &[f64],
    theta: &[f64],
    seasonal_phi: &[f64],
    seasonal_theta: &[f64],
    intercept: f64,
    sigma: f64,
    n: usize,
    seed: u64,
) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let polys = expand(&order, phi, theta, seasonal_phi, seasonal_theta);
    let burn = 200 + 10 * order.s;
    let total = n + burn;
    let mut rng = rng_from_seed(seed);
    let eps: Vec<f64> = (0..total)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect();
    let mut y = vec![0.0; total];
    for t in 0..total {
        let mut v = intercept + eps[t];
        for &(lag, c) in &polys.ar {
            if t >= lag {
                v -= c * (y[t - lag] - intercept);
            }
        }
        for &(lag, c) in &polys.ma {
            if t >= lag {
                v += c * eps[t - lag];
            }
        }
        y[t] = v;
    }
    let mut out = y[burn..].to_vec();
    // Integrate to add unit roots when differencing orders are set.
    for _ in 0..order.sd {
        let mut acc = vec![0.0; out.len()];
        for t in 0..out.len() {
            acc[t] = out[t] + if t >= order.s { acc[t - order.s] } else { 0.0 };
        }
        out = acc;
    }
    for _ in 0..order.d {
        let mut acc = 0.0;
        for v in out.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn order(p: usize, d: usize, q: usize, sp: usize, sd: usize, sq: usize, s: usize) -> SarimaOrder {
        SarimaOrder::new(p, d, q, sp, sd, sq, s).unwrap()
    }

    #[test]
    fn ordinary_difference_of_ramp() {
        let out = difference(&[1.0, 2.0, 3.0, 4.0, 5.0], 1, 0, 1).unwrap();
        assert_eq!(out, vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn seasonal_difference_of_periodic_series_is_zero() {
        let base = [3.0, -1.0, 4.0, 1.0];
        let series: Vec<f64> = (0..20).map(|t| base[t % 4]).collect();
        let out = difference(&series, 0, 1, 4).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(out.len(), 16);
    }

    #[test]
    fn difference_integrate_round_trip() {
        let mut rng = crate::rng::rng_from_seed(41);
        for (d, sd, s) in [(1usize, 0usize, 1usize), (0, 1, 7), (1, 1, 5), (2, 1, 4)] {
            let series: Vec<f64> = (0..60).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let (diff, initials, _tails) = difference_full(&series, d, sd, s).unwrap();
            assert_eq!(diff.len(), series.len() - d - s * sd);
            let back = integrate(&diff, &initials);
            assert_eq!(back.len(), series.len());
            for (a, b) in back.iter().zip(series.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn too_short_to_difference() {
        assert!(difference(&[1.0, 2.0], 1, 1, 4).is_err());
    }

    #[test]
    fn fit_ar1_recovers_coefficient() {
        let o = order(1, 0, 0, 0, 0, 0, 1);
        let sim = simulate_sarima(o, &[0.5], &[], &[], &[], 0.0, 1.0, 3000, 7);
        // Independent oracle: the lag-1 autocorrelation of an AR(1).
        let acf1 = autocorrelation(&sim, 1);
        let model = fit_sarima(&sim, o).unwrap();
        assert!(model.phi[0] > 0.4 && model.phi[0] < 0.6, "phi {}", model.phi[0]);
        assert!((model.phi[0] - acf1).abs() < 0.05);
        assert!(model.roots_are_safe(1e-6));
    }

    #[test]
    fn fit_white_noise_variance() {
        let o = order(0, 0, 0, 0, 0, 0, 1);
        let sim = simulate_sarima(o, &[], &[], &[], &[], 0.0, 2.0, 4000, 3);
        // Independent oracle: the sample variance.
        let mean = sim.iter().sum::<f64>() / sim.len() as f64;
        let var = sim.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / sim.len() as f64;
        let model = fit_sarima(&sim, o).unwrap();
        assert!((model.sigma2 - 4.0).abs() / 4.0 < 0.1, "sigma2 {}", model.sigma2);
        assert!((model.sigma2 - var).abs() / var < 0.05);
    }

    #[test]
    fn fit_seasonal_ar_recovers_coefficient() {
        let o = order(0, 0, 0, 1, 0, 0, 12);
        let sim = simulate_sarima(o, &[], &[], &[0.6], &[], 0.0, 1.0, 2400, 11);
        let acf12 = autocorrelation(&sim, 12);
        let model = fit_sarima(&sim, o).unwrap();
        let est = model.seasonal_phi[0];
        assert!(est > 0.5 && est < 0.7, "seasonal phi {est}");
        assert!((est - acf12).abs() < 0.06);
    }

    #[test]
    fn fit_ma1_recovers_sign_convention() {
        // y_t = e_t - 0.6 e_{t-1} under the sign convention here.
        let o = order(0, 0, 1, 0, 0, 0, 1);
        let sim = simulate_sarima(o, &[], &[0.6], &[], &[], 0.0, 1.0, 4000, 19);
        // Oracle: acf(1) of an MA(1) with this convention is -t/(1+t^2).
        let acf1 = autocorrelation(&sim, 1);
        assert!((acf1 + 0.6 / 1.36).abs() < 0.05);
        let model = fit_sarima(&sim, o).unwrap();
        assert!((model.theta[0] - 0.6).abs() < 0.1, "theta {}", model.theta[0]);
    }

    #[test]
    fn random_walk_forecast_is_flat() {
        let o = order(0, 1, 0, 0, 0, 0, 1);
        let sim = simulate_sarima(o, &[], &[], &[], &[], 0.0, 1.0, 300, 23);
        let model = fit_sarima(&sim, o).unwrap();
        let fc = model.forecast(5).unwrap();
        let last = *sim.last().unwrap();
        for v in fc {
            assert!((v - last).abs() < 1e-9, "forecast {v} vs last {last}");
        }
    }

    #[test]
    fn ar1_forecast_decays_geometrically() {
        let o = order(1, 0, 0, 0, 0, 0, 1);
        let model = SarimaModel {
            order: o,
            phi: vec![0.5],
            theta: vec![],
            seasonal_phi: vec![],
            seasonal_theta: vec![],
            sigma2: 1.0,
            intercept: 0.0,
            loglik: 0.0,
            aicc: 0.0,
            tail_y: vec![8.0],
            tail_eps: vec![0.0],
            diff_tails: DiffTails { seasonal_tails: vec![], ordinary_tails: vec![], s: 1 },
            n_eff: 100,
        };
        let fc = model.forecast(3).unwrap();
        assert!((fc[0] - 4.0).abs() < 1e-12);
        assert!((fc[1] - 2.0).abs() < 1e-12);
        assert!((fc[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seasonal_ar_forecast_reaches_back_one_period() {
        let s = 6;
        let o = order(0, 0, 0, 1, 0, 0, s);
        let tail: Vec<f64> = (1..=s).map(|v| v as f64).collect();
        let model = SarimaModel {
            order: o,
            phi: vec![],
            theta: vec![],
            seasonal_phi: vec![0.9],
            seasonal_theta: vec![],
            sigma2: 1.0,
            intercept: 0.0,
            loglik: 0.0,
            aicc: 0.0,
            tail_y: tail.clone(),
            tail_eps: vec![0.0],
            diff_tails: DiffTails { seasonal_tails: vec![], ordinary_tails: vec![], s },
            n_eff: 100,
        };
        let fc = model.forecast(s).unwrap();
        assert!((fc[s - 1] - 0.9 * tail[s - 1]).abs() < 1e-12);
        assert!((fc[0] - 0.9 * tail[0]).abs() < 1e-12);
    }

    #[test]
    fn horizon_guard() {
        let o = order(0, 0, 0, 0, 0, 0, 1);
        let sim = simulate_sarima(o, &[], &[], &[], &[], 0.0, 1.0, 100, 2);
        let model = fit_sarima(&sim, o).unwrap();
        assert!(model.forecast(10).is_ok());
        let err = model.forecast(11).unwrap_err();
        assert!(err.to_string().contains("horizon too long"));
        assert!(model.forecast(0).is_err());
    }

    #[test]
    fn one_step_forecast_matches_fitted_recursion() {
        let o = order(2, 0, 1, 0, 0, 0, 1);
        let sim = simulate_sarima(o, &[0.4, 0.2], &[0.3], &[], &[], 1.0, 1.0, 800, 31);
        let model = fit_sarima(&sim, o).unwrap();
        let fc1 = model.forecast(1).unwrap()[0];
        // Re-derive through the explicit one-step machinery on an extended
        // history: predicting the point after the training end.
        let fc_from = model.forecast_from(&sim, 1).unwrap()[0];
        assert!((fc1 - fc_from).abs() < 1e-9);
    }

    #[test]
    fn fitted_values_align_with_residuals() {
        let o = order(1, 0, 0, 0, 0, 0, 1);
        let sim = simulate_sarima(o, &[0.5], &[], &[], &[], 0.0, 1.0, 500, 13);
        let model = fit_sarima(&sim, o).unwrap();
        let (offset, fitted) = model.one_step_fitted(&sim).unwrap();
        assert_eq!(offset, 1);
        assert_eq!(fitted.len(), sim.len() - 1);
        // The fitted value at t is phi * y_{t-1} + mu-ish; check one point.
        let expect = model.intercept + model.phi[0] * (sim[9] - model.intercept);
        assert!((fitted[9 - offset + 1] - expect).abs() < 1e-9);
    }

    #[test]
    fn select_order_finds_seasonal_difference() {
        let s = 12;
        let base: Vec<f64> = (0..s).map(|i| if i < s / 2 { 5.0 } else { -5.0 }).collect();
        let mut rng = crate::rng::rng_from_seed(17);
        let series: Vec<f64> =
            (0..s * 30).map(|t| base[t % s] + rng.gen_range(-0.3..0.3)).collect();
        assert!(autocorrelation(&series, s) > 0.9);
        let order = select_order(&series, s, SearchMode::Stepwise).unwrap();
        assert_eq!(order.sd, 1, "selected {order}");
    }

    #[test]
    fn select_order_differences_random_walk() {
        let o = order(0, 1, 0, 0, 0, 0, 1);
        let sim = simulate_sarima(o, &[], &[], &[], &[], 0.0, 1.0, 400, 5);
        assert!(kpss_statistic(&sim) > KPSS_THRESHOLD);
        let selected = select_order(&sim, 1, SearchMode::Stepwise).unwrap();
        assert!(selected.d >= 1, "selected {selected}");
    }

    #[test]
    fn select_order_white_noise_monte_carlo() {
        let o = order(0, 0, 0, 0, 0, 0, 1);
        let mut empty = 0;
        for trial in 0..20 {
            let sim = simulate_sarima(o, &[], &[], &[], &[], 0.0, 1.0, 300, 100 + trial);
            let selected = select_order(&sim, 12, SearchMode::Stepwise).unwrap();
            if selected == order(0, 0, 0, 0, 0, 0, 12) {
                empty += 1;
            }
        }
        assert!(empty >= 18, "empty order selected only {empty}/20 times");
    }

    #[test]
    fn select_order_grid_recovers_ar2_neighborhood() {
        let o = order(2, 0, 0, 0, 0, 0, 1);
        let sim = simulate_sarima(o, &[1.2, -0.5], &[], &[], &[], 0.0, 1.0, 600, 29);
        let selected = select_order(&sim, 1, SearchMode::Grid).unwrap();
        assert!(selected.p >= 1, "selected {selected}");
    }

    #[test]
    fn aicc_prefers_true_order_on_simulated_ar1() {
        let mut wins = 0;
        for trial in 0..20 {
            let o = order(1, 0, 0, 0, 0, 0, 1);
            let sim = simulate_sarima(o, &[0.5], &[], &[], &[], 0.0, 1.0, 400, 500 + trial);
            let empty = fit_sarima(&sim, order(0, 0, 0, 0, 0, 0, 1)).unwrap();
            let ar1 = fit_sarima(&sim, o).unwrap();
            if ar1.aicc <= empty.aicc {
                wins += 1;
            }
        }
        assert!(wins >= 16, "true order won only {wins}/20 trials");
    }

    #[test]
    fn serialization_round_trip_preserves_forecasts() {
        let o = order(1, 1, 1, 0, 0, 0, 1);
        let sim = simulate_sarima(o, &[0.4], &[0.2], &[], &[], 0.0, 1.0, 400, 37);
        let model = fit_sarima(&sim, o).unwrap();
        let text = model.to_text();
        let back = SarimaModel::from_text(&text).unwrap();
        assert_eq!(model, back);
        assert_eq!(model.forecast(10).unwrap(), back.forecast(10).unwrap());
    }

    #[test]
    fn invalid_orders_rejected() {
        assert!(SarimaOrder::new(6, 0, 0, 0, 0, 0, 1).is_err());
        assert!(SarimaOrder::new(0, 2, 0, 0, 2, 0, 12).is_err());
        assert!(SarimaOrder::new(0, 0, 0, 1, 0, 0, 1).is_err());
        assert!(SarimaOrder::new(0, 0, 0, 0, 0, 3, 12).is_err());
    }
}

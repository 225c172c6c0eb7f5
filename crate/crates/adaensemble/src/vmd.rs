//! Variational mode decomposition: split a real series into band-limited
//! modes with learned center frequencies by alternating frequency-domain
//! updates — a Wiener-filter mode update, a power-weighted centroid
//! frequency update, and dual ascent on the reconstruction constraint.
//! All spectral arithmetic lives on the positive half-spectrum; the time
//! domain is recovered by Hermitian symmetrization.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaInit {
    /// Centers spread evenly over [0, 0.5).
    Uniform,
    /// All centers start at zero.
    Zero,
    /// Seeded uniform draws in [0, 0.5), sorted ascending.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VmdConfig {
    /// Number of modes.
    pub k: usize,
    /// Bandwidth penalty; larger values give narrower modes.
    pub alpha: f64,
    /// Dual-ascent step. Zero freezes the multiplier, which tolerates
    /// noise; positive values enforce the reconstruction constraint.
    pub tau: f64,
    /// Convergence threshold on the relative spectral change.
    pub tol: f64,
    pub max_iter: usize,
    pub init_omega: OmegaInit,
    /// Hold the first mode's center at zero frequency.
    pub pin_dc: bool,
    /// Reflect the signal by half its length at each end before the FFT
    /// to soften boundary effects; the center window is kept on inversion.
    pub mirror_extend: bool,
}

impl Default for VmdConfig {
    fn default() -> Self {
        VmdConfig {
            k: 3,
            alpha: 2000.0,
            tau: 0.0,
            tol: 1e-7,
            max_iter: 500,
            init_omega: OmegaInit::Uniform,
            pin_dc: false,
            mirror_extend: true,
        }
    }
}

/// Decomposition result. Modes are sorted by center frequency (ascending,
/// ties broken by pre-sort index) and `modes + residual` reproduces the
/// input exactly because the residual is defined as the difference.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub modes: Vec<Vec<f64>>,
    /// Normalized center frequencies in [0, 0.5) cycles per sample.
    pub center_freqs: Vec<f64>,
    pub residual: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl ModeSet {
    pub fn k(&self) -> usize {
        self.modes.len()
    }

    pub fn len(&self) -> usize {
        self.residual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residual.is_empty()
    }
}

/// Sum of all modes plus the residual, in mode-index order. Reproduces the
/// decomposed signal to the last bit of floating-point associativity.
pub fn reconstruct(modeset: &ModeSet) -> Vec<f64> {
    let n = modeset.len();
    let mut out = vec![0.0; n];
    for mode in &modeset.modes {
        for (o, m) in out.iter_mut().zip(mode.iter()) {
            *o += m;
        }
    }
    for (o, r) in out.iter_mut().zip(modeset.residual.iter()) {
        *o += r;
    }
    out
}

pub fn vmd_decompose(signal: &[f64], config: &VmdConfig) -> Result<ModeSet> {
    let k = config.k;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if config.alpha <= 0.0 || config.tol <= 0.0 {
        return Err(Error::invalid("alpha and tol must be positive"));
    }
    if signal.len() < 4 * k {
        return Err(Error::data(format!(
            "signal too short: {} samples for k={k} (need at least {})",
            signal.len(),
            4 * k
        )));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite value in signal"));
    }

    let n = signal.len();
    let (extended, keep_from) = if config.mirror_extend {
        (mirror_extend(signal), signal.len().div_ceil(2))
    } else {
        (signal.to_vec(), 0)
    };
    let t = extended.len();
    let half = t / 2 + 1;
    let freqs: Vec<f64> = (0..half).map(|i| i as f64 / t as f64).collect();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(t);
    let mut buffer: Vec<Complex64> =
        extended.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft.process(&mut buffer);
    let signal_half: Vec<Complex64> = buffer[..half].to_vec();

    let mut omegas = initial_omegas(k, config.init_omega);
    if config.pin_dc {
        omegas[0] = 0.0;
    }
    let mut modes_hat = vec![vec![Complex64::new(0.0, 0.0); half]; k];
    let mut prev_hat = modes_hat.clone();
    let mut lambda_hat = vec![Complex64::new(0.0, 0.0); half];

    let mut iterations_used = 0;
    let mut converged = false;
    for _ in 0..config.max_iter {
        for (mode, prev) in modes_hat.iter_mut().zip(prev_hat.iter_mut()) {
            prev.copy_from_slice(mode);
        }

        for ki in 0..k {
            for i in 0..half {
                let mut others = Complex64::new(0.0, 0.0);
                for (kj, mode) in modes_hat.iter().enumerate() {
                    if kj != ki {
                        others += mode[i];
                    }
                }
                let numerator = signal_half[i] - others + lambda_hat[i] * 0.5;
                let df = freqs[i] - omegas[ki];
                modes_hat[ki][i] = numerator / (1.0 + 2.0 * config.alpha * df * df);
            }
            if !(config.pin_dc && ki == 0) {
                let mut weighted = 0.0;
                let mut power = 0.0;
                for i in 0..half {
                    let p = modes_hat[ki][i].norm_sqr();
                    weighted += freqs[i] * p;
                    power += p;
                }
                if power > 1e-30 {
                    omegas[ki] = weighted / power;
                }
            }
        }

        if config.tau > 0.0 {
            for i in 0..half {
                let mut total = Complex64::new(0.0, 0.0);
                for mode in &modes_hat {
                    total += mode[i];
                }
                lambda_hat[i] += config.tau * (signal_half[i] - total);
            }
        }

        iterations_used += 1;
        let mut change = 0.0;
        for (mode, prev) in modes_hat.iter().zip(prev_hat.iter()) {
            let mut diff = 0.0;
            let mut norm = 0.0;
            for (a, b) in mode.iter().zip(prev.iter()) {
                diff += (a - b).norm_sqr();
                norm += b.norm_sqr();
            }
            change += diff / norm.max(1e-14);
        }
        if change < config.tol {
            converged = true;
            break;
        }
    }

    // Hermitian symmetrization and inversion back to the time domain.
    let ifft = planner.plan_fft_inverse(t);
    let mut time_modes: Vec<Vec<f64>> = Vec::with_capacity(k);
    for mode_hat in &modes_hat {
        let mut full = vec![Complex64::new(0.0, 0.0); t];
        full[..half].copy_from_slice(mode_hat);
        for i in 1..half {
            if t - i > half - 1 {
                full[t - i] = mode_hat[i].conj();
            }
        }
        ifft.process(&mut full);
        let scale = 1.0 / t as f64;
        let mode: Vec<f64> =
            full[keep_from..keep_from + n].iter().map(|c| c.re * scale).collect();
        time_modes.push(mode);
    }

    // Sort by center frequency, ties by pre-sort index.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| omegas[a].partial_cmp(&omegas[b]).unwrap().then(a.cmp(&b)));
    let modes: Vec<Vec<f64>> = order.iter().map(|&i| time_modes[i].clone()).collect();
    let center_freqs: Vec<f64> =
        order.iter().map(|&i| omegas[i].clamp(0.0, 0.5 * (1.0 - 1e-12))).collect();

    let mut residual = signal.to_vec();
    for mode in &modes {
        for (r, m) in residual.iter_mut().zip(mode.iter()) {
            *r -= m;
        }
    }

    Ok(ModeSet { modes, center_freqs, residual, iterations_used, converged })
}

fn initial_omegas(k: usize, init: OmegaInit) -> Vec<f64> {
    match init {
        // Zero-anchored spread: the lowest mode starts at DC, which keeps
        // low-frequency daily structure from being orphaned when the
        // bandwidth penalty is large.
        OmegaInit::Uniform => (0..k).map(|i| i as f64 / (2.0 * k as f64)).collect(),
        OmegaInit::Zero => vec![0.0; k],
        OmegaInit::Random(seed) => {
            use rand::Rng as _;
            let mut rng = rng_from_seed(seed);
            let mut omegas: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..0.5)).collect();
            omegas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            omegas
        }
    }
}

fn mirror_extend(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let m = n.div_ceil(2);
    let mut out = Vec::with_capacity(2 * n);
    out.extend(signal[..m].iter().rev());
    out.extend_from_slice(signal);
    out.extend(signal[m..].iter().rev());
    out
}

/// Spectral concentration of a mode around a trial frequency: the energy of
/// the time derivative of its demodulated analytic signal, evaluated in the
/// frequency domain. Small values mean the mode is narrow around `omega`.
/// Diagnostic only; the solver never calls this.
pub fn mode_bandwidth(mode: &[f64], omega: f64) -> f64 {
    assert!(!mode.is_empty(), "mode must be non-empty");
    let n = mode.len();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut buffer: Vec<Complex64> = mode.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft.process(&mut buffer);

    // One-sided (analytic) spectrum: double the strictly positive bins.
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut energy = 0.0;
    let half = n / 2;
    for (i, value) in buffer.iter().enumerate().take(half + 1) {
        let doubling = if i == 0 || (n % 2 == 0 && i == half) { 1.0 } else { 2.0 };
        let amplitude = doubling * value.norm_sqr() * doubling;
        let df = two_pi * (i as f64 / n as f64 - omega);
        energy += df * df * amplitude;
    }
    energy / n as f64
}

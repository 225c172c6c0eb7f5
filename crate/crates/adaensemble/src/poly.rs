//! Lag-polynomial helpers shared by the autoregressive machinery: the
//! partial-autocorrelation reparametrization, stationarity checks, and
//! polynomial products.
//!
//! Coefficient convention throughout: `coeffs = [c_1, ..., c_n]` stands for
//! the polynomial `1 - c_1 z - ... - c_n z^n`. Stationarity (or
//! invertibility, for a moving-average set) means all roots of that
//! polynomial lie strictly outside the unit circle.

use num_complex::Complex64;

/// Levinson-Durbin step: map partial autocorrelations in (-1, 1) to a
/// coefficient set that is stationary by construction.
pub fn pacf_to_coeffs(pacf: &[f64]) -> Vec<f64> {
    let mut coeffs: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &kappa) in pacf.iter().enumerate() {
        let prev = coeffs.clone();
        coeffs.push(kappa);
        for i in 0..k {
            coeffs[i] = prev[i] - kappa * prev[k - 1 - i];
        }
    }
    coeffs
}

/// Inverse Levinson-Durbin recursion. Returns `None` when the coefficient
/// set is not strictly stationary (some partial autocorrelation leaves
/// (-1, 1)).
pub fn coeffs_to_pacf(coeffs: &[f64]) -> Option<Vec<f64>> {
    let n = coeffs.len();
    let mut work = coeffs.to_vec();
    let mut pacf = vec![0.0; n];
    for k in (0..n).rev() {
        let kappa = work[k];
        if !(kappa > -1.0 && kappa < 1.0) {
            return None;
        }
        pacf[k] = kappa;
        if k > 0 {
            let denom = 1.0 - kappa * kappa;
            let prev = work.clone();
            for i in 0..k {
                work[i] = (prev[i] + kappa * prev[k - 1 - i]) / denom;
            }
        }
    }
    Some(pacf)
}

/// True when every root of `1 - c_1 z - ... - c_n z^n` satisfies
/// `|z| > 1 + margin`.
pub fn roots_outside_unit_circle(coeffs: &[f64], margin: f64) -> bool {
    let roots = match polynomial_roots(coeffs) {
        Some(r) => r,
        None => return false,
    };
    roots.iter().all(|r| r.norm() > 1.0 + margin)
}

/// Roots of `1 - c_1 z - ... - c_n z^n` by Durand-Kerner iteration.
/// Degrees here never exceed single digits, and the final Newton residual
/// is checked before the roots are trusted.
pub fn polynomial_roots(coeffs: &[f64]) -> Option<Vec<Complex64>> {
    // Trim trailing zeros so the leading coefficient is nonzero.
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|v| *v == 0.0) {
        c.pop();
    }
    let n = c.len();
    if n == 0 {
        return Some(Vec::new());
    }
    // p(z) = 1 - c1 z - ... - cn z^n; monic form m(z) = p(z) / (-cn).
    let lead = -c[n - 1];
    let mut monic = vec![Complex64::new(0.0, 0.0); n + 1];
    monic[0] = Complex64::new(1.0 / lead, 0.0);
    for (i, ci) in c.iter().enumerate() {
        monic[i + 1] = Complex64::new(-ci / lead, 0.0);
    }
    monic[n] = Complex64::new(1.0, 0.0);

    let eval = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for coef in monic.iter().rev() {
            acc = acc * z + coef;
        }
        acc
    };

    // Initial guesses spread on a non-real circle.
    let mut roots: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(0.4, 0.9).powu(i as u32 + 1))
        .collect();
    for _ in 0..200 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                denom = Complex64::new(1e-300, 0.0);
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-13 {
            break;
        }
    }
    let ok = roots.iter().all(|&r| eval(r).norm() < 1e-6 * (1.0 + r.norm().powi(n as i32)));
    if ok {
        Some(roots)
    } else {
        None
    }
}

/// Product of two lag polynomials given as full coefficient arrays
/// (`a[0]` is the constant term).
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Expand `[c_1 .. c_n]` into the full array `[1, -c_1, ..., -c_n]`,
/// placing the k-th coefficient at lag `k * stride` (stride > 1 gives the
/// seasonal polynomial in ordinary lag form).
pub fn expand_lag_polynomial(coeffs: &[f64], stride: usize) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len() * stride + 1];
    out[0] = 1.0;
    for (k, &c) in coeffs.iter().enumerate() {
        out[(k + 1) * stride] = -c;
    }
    out
}

/// Stationarity of an autoregressive coefficient set, via the inverse
/// Levinson-Durbin recursion (equivalent to the companion-matrix spectral
/// radius being below one).
pub fn is_stationary(coeffs: &[f64]) -> bool {
    coeffs_to_pacf(coeffs).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn pacf_round_trip() {
        let mut rng = crate::rng::rng_from_seed(3);
        for _ in 0..200 {
            let n = rng.gen_range(1..6);
            let pacf: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.95..0.95)).collect();
            let coeffs = pacf_to_coeffs(&pacf);
            assert!(is_stationary(&coeffs));
            let back = coeffs_to_pacf(&coeffs).unwrap();
            for (a, b) in pacf.iter().zip(back.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ar1_stationarity_boundary() {
        assert!(is_stationary(&[0.5]));
        assert!(is_stationary(&[-0.99]));
        assert!(!is_stationary(&[1.0]));
        assert!(!is_stationary(&[1.3]));
    }

    #[test]
    fn ar2_slow_decay_pair_is_stationary() {
        // Roots of 1 - 1.4 z + 0.45 z^2: z = 10/9 and 2; both outside.
        assert!(is_stationary(&[1.4, -0.45]));
        assert!(roots_outside_unit_circle(&[1.4, -0.45], 1e-6));
        assert!(!roots_outside_unit_circle(&[1.9, -0.9], 0.2));
    }

    #[test]
    fn roots_of_known_quadratic() {
        // 1 - 0.75 z + 0.125 z^2 = (1 - 0.25 z)(1 - 0.5 z): roots 4 and 2.
        let roots = polynomial_roots(&[0.75, -0.125]).unwrap();
        let mut mags: Vec<f64> = roots.iter().map(|r| r.norm()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mags[0] - 2.0).abs() < 1e-8);
        assert!((mags[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn seasonal_expansion_and_product() {
        // (1 - 0.5 z)(1 - 0.9 z^3) = 1 - 0.5 z - 0.9 z^3 + 0.45 z^4
        let a = expand_lag_polynomial(&[0.5], 1);
        let b = expand_lag_polynomial(&[0.9], 3);
        let prod = convolve(&a, &b);
        assert_eq!(prod.len(), 5);
        assert!((prod[0] - 1.0).abs() < 1e-15);
        assert!((prod[1] + 0.5).abs() < 1e-15);
        assert!((prod[2]).abs() < 1e-15);
        assert!((prod[3] + 0.9).abs() < 1e-15);
        assert!((prod[4] - 0.45).abs() < 1e-15);
    }
}

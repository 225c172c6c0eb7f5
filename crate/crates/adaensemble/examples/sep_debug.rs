use adaensemble::ensemble::*;
use adaensemble::synth::*;
use adaensemble::vmd::*;

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut c, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        c += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    c / (va.sqrt() * vb.sqrt())
}

fn main() {
    let theta: f64 = 2.0 * std::f64::consts::PI / 12.0;
    let r: f64 = 0.9;
    let phi1 = 2.0 * r * theta.cos();
    let phi2 = -r * r;
    for (tag, harmonics, wk) in [
        ("h1 wk=1.0", vec![(150.0, 0.0)], 1.0),
        ("h2 wk=1.0", vec![(150.0, 0.0), (40.0, 0.9)], 1.0),
        ("h2 wk=0.6", vec![(150.0, 0.0), (40.0, 0.9)], 0.6),
    ] {
        for alpha in [2000.0, 500.0] {
            let data = generate_synthetic(&SyntheticConfig {
                days: 12,
                points_per_day: 71,
                harmonics: harmonics.clone(),
                ar_coeffs: vec![phi1, phi2],
                noise_std: 8.0,
                weekend_scale: wk,
                base_level: 400.0,
                seed: 99,
                ..SyntheticConfig::default()
            })
            .unwrap();
            // demean before decomposing, add mean back to the lowest mode
            let mean = data.series.values.iter().sum::<f64>() / data.series.len() as f64;
            let centered: Vec<f64> = data.series.values.iter().map(|v| v - mean).collect();
            let cfg = VmdConfig { alpha, ..VmdConfig::default() };
            let modeset = vmd_decompose(&centered, &cfg).unwrap();
            let (mut triple, _) = assign_components(&modeset).unwrap();
            for v in triple.periodic.iter_mut() {
                *v += mean;
            }
            let var = |v: &[f64]| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
            };
            println!(
                "{tag} alpha={alpha}: omegas=[{:.5} {:.5} {:.5}] conv={} corrP={:.3} corrD={:.3} shareV={:.2}%",
                modeset.center_freqs[0], modeset.center_freqs[1], modeset.center_freqs[2],
                modeset.converged,
                corr(&triple.periodic, &data.periodic),
                corr(&triple.deterministic, &data.deterministic),
                100.0 * var(&triple.volatility) / var(&data.series.values),
            );
        }
    }
}

//! Derivative-free minimization: a standard Nelder-Mead simplex with an
//! adaptive shrink step, used by the seasonal ARIMA fitter.

use crate::error::{Error, Result};

pub struct NelderMead {
    pub max_iter: usize,
    /// Convergence threshold on the simplex objective spread.
    pub tol: f64,
    /// Initial simplex edge length.
    pub step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead { max_iter: 4000, tol: 1e-10, step: 0.25 }
    }
}

pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    pub fn minimize<F>(&self, start: &[f64], mut f: F) -> Result<MinimizeResult>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let dim = start.len();
        if dim == 0 {
            let value = f(start);
            return Ok(MinimizeResult { x: Vec::new(), value, iterations: 0, converged: true });
        }

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        simplex.push(start.to_vec());
        for i in 0..dim {
            let mut vertex = start.to_vec();
            vertex[i] += self.step;
            simplex.push(vertex);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("objective not finite at the initial simplex"));
        }

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            iterations += 1;

            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = (values[dim] - values[0]).abs();
            if spread < self.tol * (1.0 + values[0].abs()) {
                converged = true;
                break;
            }

            // Centroid of all but the worst vertex.
            let mut centroid = vec![0.0; dim];
            for vertex in simplex.iter().take(dim) {
                for (c, v) in centroid.iter_mut().zip(vertex.iter()) {
                    *c += v / dim as f64;
                }
            }

            let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
                a.iter().zip(b.iter()).map(|(x, y)| x + t * (y - x)).collect()
            };

            let reflected = blend(&centroid, &simplex[dim], -alpha);
            let f_reflected = f(&reflected);
            if f_reflected < values[0] {
                let expanded = blend(&centroid, &simplex[dim], -alpha * gamma);
                let f_expanded = f(&expanded);
                if f_expanded < f_reflected {
                    simplex[dim] = expanded;
                    values[dim] = f_expanded;
                } else {
                    simplex[dim] = reflected;
                    values[dim] = f_reflected;
                }
                continue;
            }
            if f_reflected < values[dim - 1] {
                simplex[dim] = reflected;
                values[dim] = f_reflected;
                continue;
            }
            let contracted = if f_reflected < values[dim] {
                blend(&centroid, &reflected, rho)
            } else {
                blend(&centroid, &simplex[dim], rho)
            };
            let f_contracted = f(&contracted);
            if f_contracted < values[dim].min(f_reflected) {
                simplex[dim] = contracted;
                values[dim] = f_contracted;
                continue;
            }
            // Shrink toward the best vertex.
            for i in 1..=dim {
                simplex[i] = blend(&simplex[0], &simplex[i], sigma);
                values[i] = f(&simplex[i]);
            }
        }

        Ok(MinimizeResult {
            x: simplex[0].clone(),
            value: values[0],
            iterations,
            converged,
        })
    }
}

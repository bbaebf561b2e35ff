//! Gauss rules on simplices, built by collapsing tensor Gauss–Legendre rules
//! onto the reference simplex.

use std::sync::OnceLock;

use std::collections::HashMap;
use std::sync::Mutex;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_m(x) and P_m'(x)
            let (mut p0, mut p1) = (1.0, x);
            for l in 2..=m {
                let p2 = ((2 * l - 1) as f64 * x * p1 - (l - 1) as f64 * p0) / l as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // recompute derivative at the converged node
        let (mut p0, mut p1) = (1.0, x);
        for l in 2..=m {
            let p2 = ((2 * l - 1) as f64 * x * p1 - (l - 1) as f64 * p0) / l as f64;
            p0 = p1;
            p1 = p2;
        }
        if m > 1 {
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    (idx.iter().map(|&i| nodes[i]).collect(), idx.iter().map(|&i| weights[i]).collect())
}

/// Quadrature on the reference `n`-simplex: barycentric points (`n + 1`
/// coordinates each) and weights summing to one, so that
/// `∫_σ f dV ≈ vol(σ) Σ w_q f(λ_q)`.
#[derive(Clone, Debug)]
pub struct SimplexRule {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    /// Rule exact for polynomials of total degree `degree`.
    pub fn new(dim: usize, degree: usize) -> Self {
        // the collapsed direction carries up to dim-1 extra Jacobian powers
        let m = (degree + dim + 1).div_ceil(2).max(1);
        let (x, w) = gauss_legendre(m);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match dim {
            0 => {
                points.push(vec![1.0]);
                weights.push(1.0);
            }
            1 => {
                for i in 0..m {
                    points.push(vec![1.0 - x[i], x[i]]);
                    weights.push(w[i]);
                }
            }
            2 => {
                for i in 0..m {
                    for j in 0..m {
                        let (u, v) = (x[i], x[j]);
                        let (a, b) = (u, v * (1.0 - u));
                        points.push(vec![1.0 - a - b, a, b]);
                        weights.push(2.0 * w[i] * w[j] * (1.0 - u));
                    }
                }
            }
            3 => {
                for i in 0..m {
                    for j in 0..m {
                        for l in 0..m {
                            let (u, v, t) = (x[i], x[j], x[l]);
                            let a = u;
                            let b = v * (1.0 - u);
                            let c = t * (1.0 - u) * (1.0 - v);
                            points.push(vec![1.0 - a - b - c, a, b, c]);
                            weights.push(6.0 * w[i] * w[j] * w[l] * (1.0 - u) * (1.0 - u) * (1.0 - v));
                        }
                    }
                }
            }
            d => panic!("no simplex quadrature for dimension {d}"),
        }
        Self { dim, points, weights }
    }

    /// Shared cached instance.
    pub fn cached(dim: usize, degree: usize) -> &'static SimplexRule {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static SimplexRule>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry((dim, degree)).or_insert_with(|| Box::leak(Box::new(SimplexRule::new(dim, degree))))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        for p in 0..10 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {p}");
        }
    }

    fn fact(n: u32) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn simplex_rules_reproduce_moments() {
        // ∫ λ^α over the reference simplex, normalized by volume: α! n! / (|α|+n)!
        for dim in 1..=3usize {
            let deg = 6;
            let rule = SimplexRule::new(dim, deg);
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let exps: Vec<Vec<u32>> = match dim {
                1 => vec![vec![3, 3], vec![0, 6], vec![2, 1]],
                2 => vec![vec![2, 2, 2], vec![0, 5, 1], vec![1, 1, 0]],
                _ => vec![vec![1, 2, 1, 2], vec![0, 0, 6, 0], vec![3, 0, 1, 1]],
            };
            for a in exps {
                let total: u32 = a.iter().sum();
                let exact = a.iter().map(|&k| fact(k)).product::<f64>() * fact(dim as u32) / fact(total + dim as u32);
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p.iter().zip(&a).map(|(x, &k)| x.powi(k as i32)).product::<f64>())
                    .sum();
                assert!((q - exact).abs() < 1e-14, "dim {dim} exps {a:?}: {q} vs {exact}");
            }
        }
    }
}

//! Goodness-of-fit checks used to validate null p-value distributions.

use serde::Serialize;

/// One-sample Kolmogorov–Smirnov test against Uniform(0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    /// Asymptotic p-value with Stephens' small-sample correction.
    pub p_value: f64,
}

impl KsResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

pub fn ks_uniform(values: &[f64]) -> KsResult {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let nf = n as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / nf - x).max(x - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let sqrt_n = nf.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic;
    KsResult {
        statistic,
        n,
        p_value: kolmogorov_sf(lambda),
    }
}

/// `Pr(K > λ)` for the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_critical_values() {
        // Classical asymptotic critical values: 1.3581 (5%), 1.6276 (1%).
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn grid_is_uniform_and_shifted_grid_is_not() {
        let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let ks = ks_uniform(&grid);
        assert!((ks.statistic - 0.0005).abs() < 1e-12);
        assert!(ks.passes(0.01));
        let squeezed: Vec<f64> = grid.iter().map(|x| x * 0.9).collect();
        assert!(!ks_uniform(&squeezed).passes(0.01));
    }
}

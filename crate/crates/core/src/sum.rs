// SPDX-License-Identifier: Apache-2.0

//! Pairwise summation. The split points depend only on the slice length, so
//! results are reproducible no matter how the inputs were produced.

use num_complex::Complex64;

const BLOCK: usize = 32;

pub fn pairwise(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise(&values[..mid]) + pairwise(&values[mid..])
}

pub fn pairwise_complex(values: &[Complex64]) -> Complex64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_complex(&values[..mid]) + pairwise_complex(&values[mid..])
}

/// Trapezoidal rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => (pairwise(values) - 0.5 * (values[0] + values[n - 1])) * step,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise(&v), 499500.0);
    }

    #[test]
    fn trapezoid_of_linear_is_exact() {
        let v: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        assert!((trapezoid(&v, 0.1) - 0.5).abs() < 1e-15);
    }
}

//! Replica summaries with Student-t confidence intervals.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Mean and spread of independent replicas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    /// `s / sqrt(n)`.
    pub std_err: f64,
    /// 95% Student-t half-width; infinite for a single non-degenerate sample.
    pub half_width: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { n, mean: f64::NAN, std_dev: f64::NAN, std_err: f64::NAN, half_width: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if xs.iter().all(|&x| x == xs[0]) {
        return Summary { n, mean: xs[0], std_dev: 0.0, std_err: 0.0, half_width: 0.0 };
    }
    if n == 1 {
        return Summary { n, mean, std_dev: f64::NAN, std_err: f64::INFINITY, half_width: f64::INFINITY };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std_dev = var.sqrt();
    let std_err = std_dev / (n as f64).sqrt();
    Summary { n, mean, std_dev, std_err, half_width: t_quantile_975(n - 1) * std_err }
}

/// Two-sided 95% Student-t critical value.
pub fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64).map(|t| t.inverse_cdf(0.975)).unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_width() {
        let s = summarize(&[2.5, 2.5, 2.5]);
        assert_eq!((s.mean, s.half_width), (2.5, 0.0));
    }

    #[test]
    fn known_quantile() {
        assert!((t_quantile_975(7) - 2.364_624).abs() < 1e-5);
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.std_err - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
    }
}

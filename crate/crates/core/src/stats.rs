//! Descriptive statistics with Student-t confidence intervals.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Mean, spread and a two-sided 95% t interval for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Describe {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); `None` when n < 2.
    pub sd: Option<f64>,
    pub se: Option<f64>,
    pub ci95_low: Option<f64>,
    pub ci95_high: Option<f64>,
}

/// Upper 97.5% quantile of Student's t with `df` degrees of freedom.
pub fn t_critical_975(df: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df > 0");
    dist.inverse_cdf(0.975)
}

/// Mean of `values`. Sums in sorted order so the result does not depend on
/// input order.
pub fn mean(values: &[f64]) -> f64 {
    sorted_sum(values) / values.len() as f64
}

fn sorted_sum(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

pub fn describe(values: &[f64]) -> Describe {
    let n = values.len();
    if n == 0 {
        return Describe {
            n,
            mean: f64::NAN,
            sd: None,
            se: None,
            ci95_low: None,
            ci95_high: None,
        };
    }
    let m = mean(values);
    if n < 2 {
        return Describe {
            n,
            mean: m,
            sd: None,
            se: None,
            ci95_low: None,
            ci95_high: None,
        };
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    let sd = (sorted_sum(&sq) / (n - 1) as f64).sqrt();
    let se = sd / (n as f64).sqrt();
    let half = t_critical_975(n - 1) * se;
    Describe {
        n,
        mean: m,
        sd: Some(sd),
        se: Some(se),
        ci95_low: Some(m - half),
        ci95_high: Some(m + half),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_quantile_table_values() {
        // standard t-table entries
        assert!((t_critical_975(2) - 4.302_653).abs() < 1e-5);
        assert!((t_critical_975(10) - 2.228_139).abs() < 1e-5);
        assert!((t_critical_975(1000) - 1.962_339).abs() < 1e-5);
    }

    #[test]
    fn one_two_three() {
        let d = describe(&[1.0, 2.0, 3.0]);
        assert_eq!(d.mean, 2.0);
        assert!((d.sd.unwrap() - 1.0).abs() < 1e-12);
        assert!((d.se.unwrap() - 0.577_35).abs() < 1e-5);
        assert!((d.ci95_high.unwrap() - 2.0 - 2.484).abs() < 1e-3);
        assert!((2.0 - d.ci95_low.unwrap() - 2.484).abs() < 1e-3);
    }

    #[test]
    fn constant_sample_has_zero_width() {
        let d = describe(&[1.0, 1.0, 1.0]);
        assert_eq!(d.mean, 1.0);
        assert_eq!(d.sd, Some(0.0));
        assert_eq!(d.ci95_low, d.ci95_high);
    }

    #[test]
    fn single_value_has_no_interval() {
        let d = describe(&[4.0]);
        assert_eq!(d.mean, 4.0);
        assert!(d.ci95_low.is_none() && d.sd.is_none());
    }
}

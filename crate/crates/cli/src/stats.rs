//! Summary statistics for trial aggregates: success rates get a normal
//! approximation interval, means get a Student-t interval.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation with the n-1 denominator; 0 for fewer than two
/// observations.
pub fn sample_standard_deviation(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Two-sided 95% t quantile for the given degrees of freedom.
pub fn t_quantile_975(degrees_of_freedom: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, degrees_of_freedom as f64)
        .expect("degrees of freedom is positive");
    dist.inverse_cdf(0.975)
}

/// Half-width of the 95% normal-approximation interval for a success rate
/// observed over `trials` trials.
pub fn rate_half_width(rate: f64, trials: usize) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    1.96 * (rate * (1.0 - rate) / trials as f64).sqrt()
}

/// Half-width of the 95% t interval for the mean of `values`; infinite for
/// fewer than two observations.
pub fn mean_half_width(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::INFINITY;
    }
    let sd = sample_standard_deviation(values);
    t_quantile_975(values.len() - 1) * sd / (values.len() as f64).sqrt()
}

//! Small descriptive-statistics helpers and the Student's t tail.

use statrs::function::beta::beta_reg;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n−1 denominator. NaN for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Two-sided tail probability `P(|T| ≥ |t|)` for Student's t with `df`
/// degrees of freedom, via the regularized incomplete beta function
/// `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptive() {
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&xs), 5.0);
        assert!((sample_variance(&xs) - 32.0 / 7.0).abs() < 1e-14);
        assert!(sample_variance(&[1.0]).is_nan());
    }

    #[test]
    fn t_tail_known_values() {
        assert_eq!(student_t_two_sided_p(0.0, 7.0), 1.0);
        // df = 1 is Cauchy: P(|T| ≥ 1) = 1/2.
        assert!((student_t_two_sided_p(1.0, 1.0) - 0.5).abs() < 1e-14);
        // df = 2 has closed form 1 − t/√(2+t²).
        let t: f64 = 1.7;
        let expected = 1.0 - t / (2.0 + t * t).sqrt();
        assert!((student_t_two_sided_p(t, 2.0) - expected).abs() < 1e-14);
        assert!((student_t_two_sided_p(-t, 2.0) - expected).abs() < 1e-14);
    }
}

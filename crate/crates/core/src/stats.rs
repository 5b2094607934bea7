//! Summation helpers shared by the reporting modules.

/// Neumaier-compensated sum. Result is insensitive to input order beyond
/// a few ulps, which keeps parallel reductions reproducible.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(stable_sum(values.iter().copied()) / values.len() as f64)
    }
}

/// Population variance (divides by `n`), two-pass.
pub fn population_variance(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    let ss = stable_sum(values.iter().map(|v| (v - m) * (v - m)));
    Some(ss / values.len() as f64)
}

pub(crate) fn ratio(numerator: usize, denominator: usize) -> Option<f64> {
    (denominator > 0).then(|| numerator as f64 / denominator as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(stable_sum(v), 1.0);
        assert_eq!(stable_sum([]), 0.0);
    }

    #[test]
    fn moments() {
        assert_eq!(mean(&[]), None);
        assert_eq!(mean(&[0.2, 0.4]), Some(0.30000000000000004));
        let var = population_variance(&[0.1, 0.5, 0.9]).unwrap();
        assert!((var - 0.32 / 3.0).abs() < 1e-15);
    }
}

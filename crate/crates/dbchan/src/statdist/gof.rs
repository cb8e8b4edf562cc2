//! Goodness-of-fit measures: one-sample Kolmogorov-Smirnov test and Q-Q
//! plot correlation.

use super::{DistError, DistSpec};
use crate::special::kolmogorov_q;

/// Two-sided one-sample KS test of `data` against `spec`.
///
/// Returns `(statistic, p_value)`. The statistic is the exact supremum
/// distance between the empirical step function and the model CDF,
/// evaluated at the order statistics; the p-value uses the asymptotic
/// Kolmogorov distribution of `sqrt(m) * statistic` with no correction for
/// parameters fitted from the same data.
pub fn ks_test(data: &[f64], spec: &DistSpec) -> Result<(f64, f64), DistError> {
    if data.is_empty() {
        return Err(DistError::InsufficientData { needed: 1, got: 0 });
    }
    let sorted = finite_sorted(data)?;
    let m = sorted.len() as f64;
    let mut stat = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = spec.cdf(x);
        let d_plus = (i + 1) as f64 / m - f;
        let d_minus = f - i as f64 / m;
        stat = stat.max(d_plus).max(d_minus);
    }
    Ok((stat, kolmogorov_q(m.sqrt() * stat)))
}

/// Pearson correlation of the Q-Q plot of `data` against `spec`.
///
/// The plot pairs the sorted data with the model quantiles at plotting
/// positions `(i - 0.5) / m`. A perfect fit gives 1 to machine precision.
pub fn qq_correlation(data: &[f64], spec: &DistSpec) -> Result<f64, DistError> {
    if data.len() < 3 {
        return Err(DistError::InsufficientData {
            needed: 3,
            got: data.len(),
        });
    }
    let sorted = finite_sorted(data)?;
    let m = sorted.len();
    let quantiles: Vec<f64> = (0..m)
        .map(|i| {
            spec.quantile((i as f64 + 0.5) / m as f64)
                .expect("plotting positions lie strictly inside (0, 1)")
        })
        .collect();
    pearson(&sorted, &quantiles)
}

fn finite_sorted(data: &[f64]) -> Result<Vec<f64>, DistError> {
    if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
        return Err(DistError::Domain(format!(
            "data contains non-finite value {bad}"
        )));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finiteness checked"));
    Ok(sorted)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, DistError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(DistError::Undefined(
            "correlation requires nonzero variance on both axes".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statdist::{DistFamily, DistSpec};
    use approx::assert_relative_eq;

    fn std_normal() -> DistSpec {
        DistSpec::new(DistFamily::Normal, &[], 0.0, 1.0).unwrap()
    }

    #[test]
    fn ks_matches_scipy_asymptotic() {
        // scipy.stats.kstest(data, "norm", mode="asymp")
        let data = [
            0.16, -1.38, 0.47, 2.31, -0.62, 1.02, -0.17, 0.84, -2.05, 0.33,
        ];
        let (stat, p) = ks_test(&data, &std_normal()).unwrap();
        assert_relative_eq!(stat, 0.16355946289143286, max_relative = 1e-12);
        assert_relative_eq!(p, 0.9518506337556094, max_relative = 1e-12);
    }

    #[test]
    fn ks_at_plug_positions_is_half_over_m() {
        // Points placed exactly at the quantiles of the plotting positions
        // leave a residual distance of exactly 0.5/m on both sides.
        let spec = DistSpec::new(DistFamily::Weibull, &[1.83], 0.0, 14.6).unwrap();
        for m in [4usize, 17, 100] {
            let data: Vec<f64> = (0..m)
                .map(|i| spec.quantile((i as f64 + 0.5) / m as f64).unwrap())
                .collect();
            let (stat, _) = ks_test(&data, &spec).unwrap();
            assert_relative_eq!(stat, 0.5 / m as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn ks_single_median_point_is_half() {
        let spec = std_normal();
        let (stat, _) = ks_test(&[0.0], &spec).unwrap();
        assert_relative_eq!(stat, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn ks_rejects_empty_and_non_finite() {
        assert!(ks_test(&[], &std_normal()).is_err());
        assert!(ks_test(&[0.1, f64::NAN], &std_normal()).is_err());
    }

    #[test]
    fn ks_is_affine_invariant() {
        // Applying the same strictly increasing affine map to data and
        // distribution leaves the statistic unchanged.
        let data = [
            0.16, -1.38, 0.47, 2.31, -0.62, 1.02, -0.17, 0.84, -2.05, 0.33,
        ];
        let (base, _) = ks_test(&data, &std_normal()).unwrap();
        for (a, b) in [(3.7, -12.0), (0.004, 55.0), (250.0, 1e6)] {
            let mapped: Vec<f64> = data.iter().map(|x| a * x + b).collect();
            let spec = DistSpec::new(DistFamily::Normal, &[], b, a).unwrap();
            let (stat, _) = ks_test(&mapped, &spec).unwrap();
            assert_relative_eq!(stat, base, max_relative = 1e-9);
        }
    }

    #[test]
    fn qq_matches_numpy_corrcoef() {
        // numpy.corrcoef of sorted data vs norm.ppf((i - 0.5) / m)
        let data = [1.1, 0.3, 2.7, 0.9];
        let r = qq_correlation(&data, &std_normal()).unwrap();
        assert_relative_eq!(r, 0.9427559103251544, max_relative = 1e-12);
    }

    #[test]
    fn qq_perfect_quantiles_give_one() {
        let specs = [
            DistSpec::new(DistFamily::LogNormal, &[0.37], -35.5, 17.4).unwrap(),
            DistSpec::new(DistFamily::Exponential, &[], 0.0, 50.52).unwrap(),
            DistSpec::new(DistFamily::Gamma, &[3.66], -30.7, 3.73).unwrap(),
        ];
        for spec in &specs {
            let m = 25;
            let data: Vec<f64> = (0..m)
                .map(|i| spec.quantile((i as f64 + 0.5) / m as f64).unwrap())
                .collect();
            let r = qq_correlation(&data, spec).unwrap();
            assert_relative_eq!(r, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn qq_errors_on_zero_variance_or_short_data() {
        let spec = std_normal();
        assert!(matches!(
            qq_correlation(&[2.0, 2.0, 2.0, 2.0], &spec),
            Err(DistError::Undefined(_))
        ));
        assert!(matches!(
            qq_correlation(&[1.0, 2.0], &spec),
            Err(DistError::InsufficientData { .. })
        ));
    }

    #[test]
    fn qq_stays_in_range_for_mismatched_model() {
        // A badly mismatched model still yields a correlation in [-1, 1].
        let spec = DistSpec::new(DistFamily::Exponential, &[], 0.0, 1.0).unwrap();
        let data = [-5.0, -4.0, -3.0, 10.0, 200.0, 201.0];
        let r = qq_correlation(&data, &spec).unwrap();
        assert!((-1.0..=1.0).contains(&r));
    }
}

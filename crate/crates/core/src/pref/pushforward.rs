use rand::Rng;

use super::{DistError, ExponentialFit, PreferenceDistribution};

/// Kolmogorov–Smirnov distance between the empirical CDF of `values` and a
/// reference CDF.
pub fn ks_statistic(values: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Draws preferences from exp(`sampling_rate`), maps them through the fitted
/// effect model and measures the KS distance of the effects to
/// Unif[0, V_max].
pub fn pushforward_ks<R: Rng + ?Sized>(
    sampling_rate: f64,
    effect: &ExponentialFit,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64, DistError> {
    if n_samples == 0 {
        return Err(DistError::TooFewSamples(0));
    }
    let dist = PreferenceDistribution::exponential(sampling_rate)?;
    let mut effects = (0..n_samples)
        .map(|_| dist.sample(rng).map(|a| effect.effect(a)))
        .collect::<Result<Vec<_>, _>>()?;
    let v_max = effect.v_max;
    Ok(ks_statistic(&mut effects, |v| (v / v_max).clamp(0.0, 1.0)))
}

/// Uniformity check of the fitted pair: sample from exp(λ̂), map through f.
pub fn pushforward_check<R: Rng + ?Sized>(
    fit: &ExponentialFit,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64, DistError> {
    pushforward_ks(fit.lambda, fit, n_samples, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fit(lambda: f64) -> ExponentialFit {
        ExponentialFit {
            lambda,
            v_max: 14.0,
            rss: 0.0,
            iters: 0,
        }
    }

    #[test]
    fn matched_rate_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ks = pushforward_check(&fit(145.45), 100_000, &mut rng).unwrap();
        assert!(ks < 0.02, "{ks}");
    }

    #[test]
    fn mismatched_rate_is_not() {
        // f uses twice the sampling rate: V/V_max = U², CDF sqrt(v); sup gap is 1/4.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ks = pushforward_ks(145.45, &fit(2.0 * 145.45), 100_000, &mut rng).unwrap();
        assert!(ks > 0.1, "{ks}");
        assert!((ks - 0.25).abs() < 0.01, "{ks}");
    }

    #[test]
    fn single_sample_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ks = pushforward_check(&fit(10.0), 1, &mut rng).unwrap();
        assert!((0.0..=1.0).contains(&ks));
    }
}

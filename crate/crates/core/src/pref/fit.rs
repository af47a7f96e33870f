//! Least-squares fit of the effect model `V = V_max · exp(-λ·α)`.
//!
//! `V_max` is pinned to the largest observed effect by default, leaving a
//! one-dimensional problem in λ. Gradient descent runs on `ln λ` because λ
//! spans orders of magnitude between tasks and topologies; the step size is
//! chosen by backtracking (Armijo) line search.

use serde::{Deserialize, Serialize};

use super::{DistError, EffectSample, PreferenceDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub lambda: f64,
    pub v_max: f64,
    pub rss: f64,
    pub iters: usize,
}

impl ExponentialFit {
    /// Effect predicted at a preference value.
    pub fn effect(&self, preference: f64) -> f64 {
        self.v_max * (-self.lambda * preference).exp()
    }

    /// The preference density implied by a uniform effect: exp(λ).
    pub fn distribution(&self) -> PreferenceDistribution {
        PreferenceDistribution::Exponential { rate: self.lambda }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Fit `V_max` jointly instead of fixing it to the observed maximum.
    pub joint_v_max: bool,
    pub max_iters: usize,
    /// Convergence threshold on `|Δλ| / λ`.
    pub rel_tol: f64,
    /// Starting rate; defaults to a log-linear estimate through the peak.
    pub initial_lambda: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            joint_v_max: false,
            max_iters: 100_000,
            rel_tol: 1e-8,
            initial_lambda: None,
        }
    }
}

const MAX_LOG_MOVE: f64 = 1.0;

pub fn fit_exponential(samples: &[EffectSample]) -> Result<ExponentialFit, DistError> {
    fit_exponential_with(samples, FitOptions::default())
}

pub fn fit_exponential_with(
    samples: &[EffectSample],
    opts: FitOptions,
) -> Result<ExponentialFit, DistError> {
    if samples.len() < 2 {
        return Err(DistError::TooFewSamples(samples.len()));
    }
    if samples
        .iter()
        .any(|s| !s.preference.is_finite() || !s.effect.is_finite())
    {
        return Err(DistError::InvalidParameter(
            "effect samples must be finite".into(),
        ));
    }
    let first = samples[0].preference;
    if samples.iter().all(|s| s.preference == first) {
        return Err(DistError::TooFewSamples(1));
    }
    let (i_max, v_max) = samples.iter().enumerate().map(|(i, s)| (i, s.effect)).fold(
        (0, f64::NEG_INFINITY),
        |acc, x| if x.1 > acc.1 { x } else { acc },
    );
    let v_min = samples
        .iter()
        .map(|s| s.effect)
        .fold(f64::INFINITY, f64::min);
    if !(v_max > 0.0) || v_max == v_min {
        return Err(DistError::DegenerateFit);
    }

    let alphas: Vec<f64> = samples.iter().map(|s| s.preference).collect();
    let effects: Vec<f64> = samples.iter().map(|s| s.effect).collect();
    let problem = Problem {
        alphas: &alphas,
        effects: &effects,
    };

    let lambda0 = match opts.initial_lambda {
        Some(l) if l > 0.0 && l.is_finite() => l,
        Some(l) => {
            return Err(DistError::InvalidParameter(format!(
                "initial rate must be positive, got {l}"
            )))
        }
        None => initial_rate(&alphas, &effects, i_max, v_max),
    };
    let mut params = vec![lambda0.ln()];
    if opts.joint_v_max {
        params.push(v_max.ln());
    }
    let eval = |p: &[f64]| {
        let v = if opts.joint_v_max { p[1].exp() } else { v_max };
        problem.loss_and_grad(p[0].exp(), v, opts.joint_v_max)
    };

    let (mut loss, mut grad) = eval(&params);
    let mut step = 1.0;
    let mut iters = 0;
    while iters < opts.max_iters {
        iters += 1;
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2 == 0.0 {
            break;
        }
        // Armijo backtracking, growing the trial step after each success.
        // Convergence is only judged on backtracked steps, so that tiny moves
        // across a flat plateau are not mistaken for a minimum.
        step *= 2.0;
        let mut backtracked = false;
        let (cand, cand_loss, cand_grad) = loop {
            // Moves are capped at one e-fold per iteration; otherwise a long
            // step from a poor start can land on the plateau where every
            // positive-preference prediction has decayed to zero.
            let scale = (MAX_LOG_MOVE / (step * gnorm2.sqrt())).min(1.0);
            let cand: Vec<f64> = params
                .iter()
                .zip(&grad)
                .map(|(p, g)| p - scale * step * g)
                .collect();
            let (l, g) = eval(&cand);
            if l <= loss - 1e-4 * scale * step * gnorm2 {
                break (cand, l, g);
            }
            step *= 0.5;
            backtracked = true;
            if step < 1e-300 {
                break (params.clone(), loss, grad.clone());
            }
        };
        let rel = ((cand[0] - params[0]).exp() - 1.0).abs();
        params = cand;
        loss = cand_loss;
        grad = cand_grad;
        if backtracked && rel < opts.rel_tol {
            break;
        }
    }

    let lambda = params[0].exp();
    let v_max = if opts.joint_v_max {
        params[1].exp()
    } else {
        v_max
    };
    if !lambda.is_finite() || !(lambda > 0.0) {
        return Err(DistError::DegenerateFit);
    }
    Ok(ExponentialFit {
        lambda,
        v_max,
        rss: loss,
        iters,
    })
}

struct Problem<'a> {
    alphas: &'a [f64],
    effects: &'a [f64],
}

impl Problem<'_> {
    /// Squared error and its gradient with respect to (ln λ[, ln V_max]).
    fn loss_and_grad(&self, lambda: f64, v_max: f64, joint: bool) -> (f64, Vec<f64>) {
        let mut loss = 0.0;
        let mut g_rate = 0.0;
        let mut g_vmax = 0.0;
        for (&a, &v) in self.alphas.iter().zip(self.effects) {
            let pred = v_max * (-lambda * a).exp();
            let r = v - pred;
            loss += r * r;
            // d pred / d ln λ = -pred·λ·α ; d pred / d ln V_max = pred
            g_rate += 2.0 * r * pred * lambda * a;
            g_vmax -= 2.0 * r * pred;
        }
        let grad = if joint {
            vec![g_rate, g_vmax]
        } else {
            vec![g_rate]
        };
        (loss, grad)
    }
}

/// Log-linear estimate through the peak, used to start the descent.
fn initial_rate(alphas: &[f64], effects: &[f64], i_max: usize, v_max: f64) -> f64 {
    let a0 = alphas[i_max];
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (&a, &v)) in alphas.iter().zip(effects).enumerate() {
        if i == i_max || v <= 0.0 || a <= a0 {
            continue;
        }
        let da = a - a0;
        num -= da * (v / v_max).ln();
        den += da * da;
    }
    let est = num / den;
    if est.is_finite() && est > 0.0 {
        return est;
    }
    let spread = alphas.iter().fold(f64::NEG_INFINITY, |m, &a| m.max(a))
        - alphas.iter().fold(f64::INFINITY, |m, &a| m.min(a));
    1.0 / spread
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(lambda: f64, v_max: f64, grid: &[f64]) -> Vec<EffectSample> {
        grid.iter()
            .map(|&a| EffectSample {
                preference: a,
                effect: v_max * (-lambda * a).exp(),
            })
            .collect()
    }

    const GRID: [f64; 6] = [0.0, 0.01, 0.02, 0.03, 0.04, 0.05];

    #[test]
    fn recovers_noiseless_rate() {
        let fit = fit_exponential(&synth(145.45, 14.0, &GRID)).unwrap();
        assert!((fit.lambda / 145.45 - 1.0).abs() < 1e-3, "{fit:?}");
        assert_eq!(fit.v_max, 14.0);
        assert!(fit.rss >= 0.0 && fit.rss < 1e-12);
    }

    #[test]
    fn recovers_rate_from_distant_start() {
        for start in [1.0, 5000.0] {
            let opts = FitOptions {
                initial_lambda: Some(start),
                ..Default::default()
            };
            let fit = fit_exponential_with(&synth(241.05, 1.0, &GRID), opts).unwrap();
            assert!(
                (fit.lambda / 241.05 - 1.0).abs() < 1e-3,
                "start {start}: {fit:?}"
            );
        }
    }

    #[test]
    fn two_point_closed_form() {
        // (0, V), (a, V/e) => λ = 1/a
        let a = 0.02;
        let samples = vec![
            EffectSample {
                preference: 0.0,
                effect: 7.0,
            },
            EffectSample {
                preference: a,
                effect: 7.0 * (-1.0f64).exp(),
            },
        ];
        let fit = fit_exponential(&samples).unwrap();
        assert!((fit.lambda * a - 1.0).abs() < 1e-7, "{fit:?}");
    }

    #[test]
    fn descends_from_a_poor_start() {
        // Offset-subtracted data: the last point is forced to zero, so the
        // log-linear start is biased and descent has real work to do.
        let raw = synth(80.0, 10.0, &GRID);
        let floor = raw.last().unwrap().effect;
        let shifted: Vec<EffectSample> = raw
            .iter()
            .map(|s| EffectSample {
                preference: s.preference,
                effect: s.effect - floor,
            })
            .collect();
        let fit = fit_exponential(&shifted).unwrap();
        assert!(fit.iters > 1);
        // Loss at the solution is stationary in λ.
        let h = 1e-4 * fit.lambda;
        let rss = |l: f64| {
            shifted
                .iter()
                .map(|s| (s.effect - fit.v_max * (-l * s.preference).exp()).powi(2))
                .sum::<f64>()
        };
        assert!(rss(fit.lambda) <= rss(fit.lambda + h) && rss(fit.lambda) <= rss(fit.lambda - h));
    }

    #[test]
    fn degenerate_inputs() {
        let zeros: Vec<_> = GRID
            .iter()
            .map(|&a| EffectSample {
                preference: a,
                effect: 0.0,
            })
            .collect();
        assert!(matches!(
            fit_exponential(&zeros),
            Err(DistError::DegenerateFit)
        ));
        let flat: Vec<_> = GRID
            .iter()
            .map(|&a| EffectSample {
                preference: a,
                effect: 3.0,
            })
            .collect();
        assert!(matches!(
            fit_exponential(&flat),
            Err(DistError::DegenerateFit)
        ));
        let one = vec![EffectSample {
            preference: 0.0,
            effect: 1.0,
        }];
        assert!(matches!(
            fit_exponential(&one),
            Err(DistError::TooFewSamples(1))
        ));
    }

    #[test]
    fn scale_consistency() {
        let base = synth(60.0, 3.0, &GRID);
        let noisy: Vec<_> = base
            .iter()
            .enumerate()
            .map(|(i, s)| EffectSample {
                preference: s.preference,
                effect: s.effect * (1.0 + 0.03 * (i as f64 - 2.5)),
            })
            .collect();
        let a = fit_exponential(&noisy).unwrap();
        let scaled: Vec<_> = noisy
            .iter()
            .map(|s| EffectSample {
                preference: s.preference,
                effect: 4.5 * s.effect,
            })
            .collect();
        let b = fit_exponential(&scaled).unwrap();
        assert!((a.lambda / b.lambda - 1.0).abs() < 1e-6);
        assert!((b.v_max / a.v_max - 4.5).abs() < 1e-12);
    }

    #[test]
    fn joint_fit_never_worse_than_pinned() {
        let mut samples = synth(40.0, 5.0, &GRID);
        samples[0].effect *= 1.02;
        let pinned = fit_exponential(&samples).unwrap();
        let joint = fit_exponential_with(
            &samples,
            FitOptions {
                joint_v_max: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(joint.rss <= pinned.rss);
        assert!(joint.v_max < pinned.v_max);
        assert!((joint.lambda / 40.0 - 1.0).abs() < 0.05, "{joint:?}");
    }
}

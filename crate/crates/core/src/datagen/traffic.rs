use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::DatagenError;

/// Active-flow intensity per timestep and ordered (src, dst) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficPattern {
    nodes: usize,
    horizon: usize,
    /// `horizon × nodes × nodes`, row-major.
    intensity: Vec<f64>,
}

impl TrafficPattern {
    pub fn new(nodes: usize, horizon: usize, intensity: Vec<f64>) -> Result<Self, DatagenError> {
        if horizon == 0 {
            return Err(DatagenError::Config("traffic horizon must be >= 1".into()));
        }
        if intensity.len() != horizon * nodes * nodes {
            return Err(DatagenError::Config(format!(
                "intensity has {} values, expected {horizon}x{nodes}x{nodes}",
                intensity.len()
            )));
        }
        if intensity.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(DatagenError::Config(
                "intensities must be finite and >= 0".into(),
            ));
        }
        Ok(Self {
            nodes,
            horizon,
            intensity,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, t: usize, src: usize, dst: usize) -> f64 {
        self.intensity[(t * self.nodes + src) * self.nodes + dst]
    }

    pub fn step(&self, t: usize) -> &[f64] {
        let m = self.nodes * self.nodes;
        &self.intensity[t * m..(t + 1) * m]
    }

    /// Total intensity over all pairs at step `t`.
    pub fn total(&self, t: usize) -> f64 {
        self.step(t).iter().sum()
    }

    /// Parses a traffic-matrix trace: one timestep per line, whitespace- or
    /// comma-separated. A line holds either `N²` values (row-major src×dst)
    /// or `5N²` values, in which case the first of every group of five is
    /// used (the Abilene `X*` file layout). Blank lines and `#` comments are
    /// skipped.
    pub fn from_trace(text: &str, nodes: usize) -> Result<Self, DatagenError> {
        let m = nodes * nodes;
        let mut intensity = Vec::new();
        let mut horizon = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let values = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| DatagenError::Parse(format!("trace line {}: {e}", lineno + 1)))?;
            let row: Vec<f64> = if values.len() == m {
                values
            } else if values.len() == 5 * m {
                values.chunks(5).map(|c| c[0]).collect()
            } else {
                return Err(DatagenError::Parse(format!(
                    "trace line {} has {} values; expected {m} or {}",
                    lineno + 1,
                    values.len(),
                    5 * m
                )));
            };
            intensity.extend(row.into_iter().map(|v| v.max(0.0)));
            horizon += 1;
        }
        let mut out = Self::new(nodes, horizon, intensity)?;
        for t in 0..out.horizon {
            for i in 0..nodes {
                out.intensity[(t * nodes + i) * nodes + i] = 0.0;
            }
        }
        Ok(out)
    }

    /// Rescales so that the mean per-step total equals `target`.
    pub fn rescale_mean_total(&mut self, target: f64) {
        let mean = (0..self.horizon).map(|t| self.total(t)).sum::<f64>() / self.horizon as f64;
        if mean > 0.0 {
            let s = target / mean;
            self.intensity.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Shape of the synthetic diurnal generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficConfig {
    /// Steps per day-cycle.
    pub period: usize,
    /// Relative amplitude of the sinusoid, in [0, 1].
    pub amplitude: f64,
    /// σ of the per-step multiplicative lognormal noise.
    pub noise_sigma: f64,
    /// σ of the per-pair lognormal base rate.
    pub pair_sigma: f64,
    /// Mean total intensity per step (≈ requests per step).
    pub mean_total: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            period: 24,
            amplitude: 0.6,
            noise_sigma: 0.25,
            pair_sigma: 0.5,
            mean_total: 12.0,
        }
    }
}

/// Diurnal sinusoid times lognormal noise for every ordered pair.
pub fn synth_traffic<R: Rng + ?Sized>(
    rng: &mut R,
    nodes: usize,
    horizon: usize,
    config: &TrafficConfig,
) -> Result<TrafficPattern, DatagenError> {
    if horizon == 0 {
        return Err(DatagenError::Config("traffic horizon must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&config.amplitude) || config.period == 0 {
        return Err(DatagenError::Config(
            "amplitude must lie in [0, 1] and period be >= 1".into(),
        ));
    }
    let pair =
        LogNormal::new(0.0, config.pair_sigma).map_err(|e| DatagenError::Config(e.to_string()))?;
    let noise = LogNormal::new(-0.5 * config.noise_sigma.powi(2), config.noise_sigma)
        .map_err(|e| DatagenError::Config(e.to_string()))?;
    let m = nodes * nodes;
    let base: Vec<f64> = (0..m)
        .map(|k| {
            if k / nodes == k % nodes {
                0.0
            } else {
                pair.sample(rng)
            }
        })
        .collect();
    let phase: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..0.5)).collect();
    let mut intensity = Vec::with_capacity(horizon * m);
    for t in 0..horizon {
        let angle = 2.0 * PI * t as f64 / config.period as f64;
        for k in 0..m {
            let diurnal = 1.0 + config.amplitude * (angle + phase[k]).sin();
            let v = base[k] * diurnal * noise.sample(rng);
            intensity.push(v.max(0.0));
        }
    }
    let mut p = TrafficPattern::new(nodes, horizon, intensity)?;
    p.rescale_mean_total(config.mean_total);
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_and_nonnegative() {
        let cfg = TrafficConfig::default();
        let a = synth_traffic(&mut ChaCha8Rng::seed_from_u64(5), 6, 50, &cfg).unwrap();
        let b = synth_traffic(&mut ChaCha8Rng::seed_from_u64(5), 6, 50, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.intensity.iter().all(|&v| v >= 0.0));
        assert!((0..6).all(|i| a.get(3, i, i) == 0.0));
    }

    #[test]
    fn trace_layouts() {
        let n2 = "0 1 2 0\n# comment\n0 3,4 0\n";
        let p = TrafficPattern::from_trace(n2, 2).unwrap();
        assert_eq!(p.horizon(), 2);
        assert_eq!(p.get(1, 0, 1), 3.0);
        let five: String = (0..4).map(|k| format!("{k} 9 9 9 9 ")).collect();
        let p = TrafficPattern::from_trace(&five, 2).unwrap();
        assert_eq!(p.get(0, 0, 1), 1.0);
        assert_eq!(p.get(0, 1, 0), 2.0);
        assert!(TrafficPattern::from_trace("1 2 3", 2).is_err());
    }
}

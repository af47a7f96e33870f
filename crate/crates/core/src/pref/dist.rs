use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DistError;

/// Distribution a preference coefficient is drawn from.
///
/// Textual form (used on the command line and in checkpoints):
/// `exp:145.45`, `unif:0:0.05`, `point:0.0063`, `sched:0=0.0015,50=0.0317`.
#[derive(Debug, Clone, PartialEq)]
pub enum PreferenceDistribution {
    Exponential {
        rate: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Point(f64),
    /// Piecewise-constant value over steps; each entry holds until the next.
    Schedule(Vec<(u64, f64)>),
}

impl PreferenceDistribution {
    pub fn exponential(rate: f64) -> Result<Self, DistError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(DistError::InvalidParameter(format!(
                "exponential rate must be positive, got {rate}"
            )));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, DistError> {
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(DistError::InvalidParameter(format!(
                "uniform needs 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn point(x: f64) -> Result<Self, DistError> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(DistError::InvalidParameter(format!(
                "point mass must be finite and >= 0, got {x}"
            )));
        }
        Ok(Self::Point(x))
    }

    pub fn schedule(entries: Vec<(u64, f64)>) -> Result<Self, DistError> {
        if entries.is_empty() {
            return Err(DistError::InvalidParameter(
                "schedule needs at least one entry".into(),
            ));
        }
        if entries.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(DistError::InvalidParameter(
                "schedule steps must be strictly increasing".into(),
            ));
        }
        if entries.iter().any(|&(_, v)| !(v >= 0.0) || !v.is_finite()) {
            return Err(DistError::InvalidParameter(
                "schedule values must be finite and >= 0".into(),
            ));
        }
        Ok(Self::Schedule(entries))
    }

    /// True for distributions that carry no information at sampling time.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Self::Point(_))
    }

    /// 𝔼[x]; `None` for schedules, whose mean depends on the horizon.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            Self::Exponential { rate } => Some(1.0 / rate),
            Self::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            Self::Point(x) => Some(x),
            Self::Schedule(_) => None,
        }
    }

    pub fn density(&self, x: f64) -> Result<f64, DistError> {
        match *self {
            Self::Exponential { rate } => Ok(if x < 0.0 {
                0.0
            } else {
                rate * (-rate * x).exp()
            }),
            Self::Uniform { lo, hi } => Ok(if (lo..=hi).contains(&x) {
                1.0 / (hi - lo)
            } else {
                0.0
            }),
            Self::Point(p) => Ok(if x == p { f64::INFINITY } else { 0.0 }),
            Self::Schedule(_) => Err(DistError::Unsupported("density of a schedule")),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64, DistError> {
        match *self {
            Self::Exponential { rate } => Ok(if x < 0.0 { 0.0 } else { -(-rate * x).exp_m1() }),
            Self::Uniform { lo, hi } => Ok(((x - lo) / (hi - lo)).clamp(0.0, 1.0)),
            Self::Point(p) => Ok(if x >= p { 1.0 } else { 0.0 }),
            Self::Schedule(_) => Err(DistError::Unsupported("cdf of a schedule")),
        }
    }

    /// Inverse CDF. Unbounded supports reject `q >= 1`.
    pub fn quantile(&self, q: f64) -> Result<f64, DistError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(DistError::QuantileOutOfRange(q));
        }
        match *self {
            Self::Exponential { rate } => {
                if q >= 1.0 {
                    return Err(DistError::QuantileOutOfRange(q));
                }
                Ok(-(-q).ln_1p() / rate)
            }
            Self::Uniform { lo, hi } => Ok(lo + q * (hi - lo)),
            Self::Point(p) => Ok(p),
            Self::Schedule(_) => Err(DistError::Unsupported("quantile of a schedule")),
        }
    }

    /// Inverse-CDF draw. Point masses consume no randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, DistError> {
        match self {
            Self::Point(p) => Ok(*p),
            Self::Schedule(_) => Err(DistError::Unsupported("sampling a schedule without a step")),
            _ => {
                let u: f64 = rng.random();
                self.quantile(u)
            }
        }
    }

    /// Value at a given step: schedules are looked up, everything else sampled.
    pub fn draw<R: Rng + ?Sized>(&self, step: u64, rng: &mut R) -> Result<f64, DistError> {
        match self {
            Self::Schedule(entries) => Ok(schedule_value(entries, step)),
            _ => self.sample(rng),
        }
    }
}

fn schedule_value(entries: &[(u64, f64)], step: u64) -> f64 {
    let idx = entries.partition_point(|&(s, _)| s <= step);
    entries[idx.saturating_sub(1)].1
}

impl fmt::Display for PreferenceDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { rate } => write!(f, "exp:{rate}"),
            Self::Uniform { lo, hi } => write!(f, "unif:{lo}:{hi}"),
            Self::Point(x) => write!(f, "point:{x}"),
            Self::Schedule(entries) => {
                f.write_str("sched:")?;
                for (i, (s, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}={v}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for PreferenceDistribution {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DistError::Parse(s.to_string());
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "exp" => Self::exponential(num(rest)?),
            "unif" => {
                let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
                Self::uniform(num(lo)?, num(hi)?)
            }
            "point" => Self::point(num(rest)?),
            "sched" => {
                let entries = rest
                    .split(',')
                    .map(|e| {
                        let (step, v) = e.split_once('=').ok_or_else(bad)?;
                        Ok((step.trim().parse::<u64>().map_err(|_| bad())?, num(v)?))
                    })
                    .collect::<Result<Vec<_>, DistError>>()?;
                Self::schedule(entries)
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for PreferenceDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PreferenceDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

use serde::{Deserialize, Serialize};

use super::DistError;
use crate::datagen::DatasetRecord;
use crate::eval::{eval_static, MetricReport};
use crate::rl::{Agent, Preference};
use crate::sim::{EnvConfig, Topology};

/// Observed outcome of an agent trained at a fixed preference, offset so the
/// smallest effect over the grid is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSample {
    pub preference: f64,
    pub effect: f64,
}

/// Which metric stands in for the effect of a preference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    /// Mean total VNF instance count (effect of α).
    VnfCount,
    /// Mean normalized power draw (effect of β).
    Power,
}

impl EffectKind {
    pub fn of(self, report: &MetricReport) -> f64 {
        match self {
            EffectKind::VnfCount => report.mean_vnf_total,
            EffectKind::Power => report.mean_power_total,
        }
    }
}

/// Subtracts the minimum raw average across the grid.
pub fn offset_effects(raw: &[(f64, f64)]) -> Vec<EffectSample> {
    let floor = raw.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    raw.iter()
        .map(|&(preference, v)| EffectSample {
            preference,
            effect: v - floor,
        })
        .collect()
}

/// Evaluates each fixed-preference agent at its own training preference and
/// turns the averaged metric into offset effect samples.
///
/// The grid coordinate is α for [`EffectKind::VnfCount`] and β for
/// [`EffectKind::Power`].
pub fn collect_effects(
    agents: &[Agent],
    topology: &Topology,
    env: &EnvConfig,
    testset: &[DatasetRecord],
    kind: EffectKind,
) -> Result<Vec<EffectSample>, DistError> {
    let mut raw = Vec::with_capacity(agents.len());
    for (i, agent) in agents.iter().enumerate() {
        let pref: Preference = agent.training_preference().ok_or_else(|| {
            DistError::Evaluation(format!(
                "checkpoint {i} was not trained at a fixed preference"
            ))
        })?;
        let coord = match kind {
            EffectKind::VnfCount => pref.alpha,
            EffectKind::Power => pref.beta.ok_or_else(|| {
                DistError::Evaluation(format!(
                    "checkpoint {i} has no β; power effects need power-management agents"
                ))
            })?,
        };
        let report = eval_static(agent, topology, env, testset, pref)
            .map_err(|e| DistError::Evaluation(format!("checkpoint {i}: {e}")))?;
        raw.push((coord, kind.of(&report)));
    }
    Ok(offset_effects(&raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_subtraction() {
        let v = offset_effects(&[(0.0, 5.0), (0.01, 3.0), (0.02, 2.0)]);
        let effects: Vec<f64> = v.iter().map(|s| s.effect).collect();
        assert_eq!(effects, [3.0, 1.0, 0.0]);
        assert_eq!(offset_effects(&[(0.0, 4.2)])[0].effect, 0.0);
    }
}

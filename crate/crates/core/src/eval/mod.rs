//! Static and dynamic preference evaluation, reward normalization, report
//! tables and timeline scenarios.

mod metrics;
mod scenario;

pub use metrics::{
    eval_dynamic, eval_static, normalize_rewards, EpisodeTrace, MetricReport, EVAL_EPISODE_LEN,
};
pub use scenario::{
    run_scenario, EventKind, LiveRollout, NodeSnapshot, Scenario, ScenarioEvent, ScenarioStep,
};

use crate::pref::DistError;
use crate::rl::RlError;
use crate::sim::SimError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("nothing to evaluate: empty record set")]
    Empty,
    #[error("incompatible agent: {0}")]
    Incompatible(String),
    #[error("normalization needs at least two reports, got {0}")]
    TooFewReports(usize),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// CSV with one row per agent and one column per setting.
pub fn comparison_csv(settings: &[String], rows: &[(String, Vec<f64>)]) -> String {
    let mut out = String::from("agent");
    for s in settings {
        out.push(',');
        out.push_str(s);
    }
    out.push('\n');
    for (name, values) in rows {
        out.push_str(name);
        for v in values {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let csv = comparison_csv(
            &["a=0.1".into(), "a=0.2".into()],
            &[("dp".into(), vec![0.5, -1.0])],
        );
        assert_eq!(csv, "agent,a=0.1,a=0.2\ndp,0.5,-1\n");
    }
}

//! Python module `prefnet`: preference distributions and fitting, dataset
//! generation, training, evaluation and steerable sessions.
//!
//! Structured results cross the boundary as JSON strings.

use std::path::PathBuf;
use std::sync::Arc;

use prefnet::datagen::{
    generate, read_dataset, read_topology, write_dataset, write_topology, Dataset, GenConfig,
};
use prefnet::eval::{eval_dynamic, eval_static};
use prefnet::neural::ModelConfig;
use prefnet::pref::{fit_exponential_with, EffectSample, FitOptions, PreferenceDistribution};
use prefnet::rl::{train as train_agent, Agent, Preference, PreferenceSource, Task, TrainConfig};
use prefnet::sim::{EnvConfig, Topology};
use prefnet::steer::{ControlMessage, Session as SteerSession};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_json(v: &impl serde::Serialize) -> PyResult<String> {
    serde_json::to_string(v).map_err(runtime_err)
}

fn load_data(dir: &str) -> PyResult<(Topology, Dataset)> {
    let data = read_dataset(dir).map_err(runtime_err)?;
    let topo = read_topology(dir, &data.meta).map_err(runtime_err)?;
    Ok((topo, data))
}

/// Preference distribution parsed from `exp:<rate>`, `unif:<lo>:<hi>`,
/// `point:<x>` or `sched:<step>=<v>,...`.
#[pyclass(name = "Distribution", frozen)]
struct PyDistribution(PreferenceDistribution);

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        spec.parse().map(Self).map_err(value_err)
    }

    fn quantile(&self, q: f64) -> PyResult<f64> {
        self.0.quantile(q).map_err(value_err)
    }

    fn cdf(&self, x: f64) -> PyResult<f64> {
        self.0.cdf(x).map_err(value_err)
    }

    fn mean(&self) -> Option<f64> {
        self.0.mean()
    }

    /// `n` draws from a ChaCha8 stream seeded with `seed`.
    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| self.0.sample(&mut rng).map_err(value_err))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Distribution('{}')", self.0)
    }
}

/// Least-squares fit of `effect = v_max·exp(-λ·preference)`; returns
/// `(lambda, v_max, rss, iters)`.
#[pyfunction]
#[pyo3(signature = (preferences, effects, joint_vmax = false))]
fn fit_exponential(
    preferences: Vec<f64>,
    effects: Vec<f64>,
    joint_vmax: bool,
) -> PyResult<(f64, f64, f64, usize)> {
    if preferences.len() != effects.len() {
        return Err(value_err("preferences and effects differ in length"));
    }
    let samples: Vec<EffectSample> = preferences
        .into_iter()
        .zip(effects)
        .map(|(preference, effect)| EffectSample { preference, effect })
        .collect();
    let opts = FitOptions {
        joint_v_max: joint_vmax,
        ..FitOptions::default()
    };
    let fit = fit_exponential_with(&samples, opts).map_err(value_err)?;
    Ok((fit.lambda, fit.v_max, fit.rss, fit.iters))
}

/// Generates a dataset into `out`; returns the metadata as JSON.
#[pyfunction]
#[pyo3(signature = (topology, out, seed = 0, horizon = None))]
fn generate_dataset(
    topology: &str,
    out: PathBuf,
    seed: u64,
    horizon: Option<usize>,
) -> PyResult<String> {
    let topo = Topology::resolve(topology).map_err(value_err)?;
    let mut config = GenConfig::default();
    if let Some(h) = horizon {
        config.horizon = h;
    }
    let data = generate(&topo, &config, seed).map_err(runtime_err)?;
    write_dataset(&out, &data).map_err(runtime_err)?;
    write_topology(&out, &topo).map_err(runtime_err)?;
    to_json(&data.meta)
}

/// Trains an auto-scaling agent on `data_dir` and saves it to `checkpoint`.
/// Give `dist` for a dynamic-preference agent or `fixed_alpha` for a
/// baseline. Returns the training log as JSON lines.
#[pyfunction]
#[pyo3(signature = (data_dir, checkpoint, dist = None, fixed_alpha = None, iterations = 10, hidden = 16, steps = 3, lr = 3e-4, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    data_dir: &str,
    checkpoint: PathBuf,
    dist: Option<&str>,
    fixed_alpha: Option<f64>,
    iterations: usize,
    hidden: usize,
    steps: usize,
    lr: f64,
    seed: u64,
) -> PyResult<String> {
    let source = match (dist, fixed_alpha) {
        (Some(spec), None) => PreferenceSource::Sampled {
            alpha: spec.parse().map_err(value_err)?,
            beta: None,
        },
        (None, Some(a)) => PreferenceSource::Fixed {
            preference: Preference::alpha(a),
        },
        _ => return Err(value_err("give exactly one of dist or fixed_alpha")),
    };
    let (topo, data) = load_data(data_dir)?;
    let mut config = TrainConfig::new(Task::AutoScaling, source);
    config.model = ModelConfig::new(hidden, steps, 1);
    config.ppo.iterations = iterations;
    config.ppo.lr = lr;
    config.ppo.seed = seed;
    let env = EnvConfig::new(data.meta.sla_ms);
    let outcome = py
        .detach(|| train_agent(&topo, &env, &data.train, None, &config, |_| {}))
        .map_err(runtime_err)?;
    outcome.agent.save(&checkpoint).map_err(runtime_err)?;
    let lines: Vec<String> = outcome.log.iter().map(to_json).collect::<PyResult<_>>()?;
    Ok(lines.join("\n"))
}

/// Greedy evaluation of a checkpoint on the test split at a fixed α, or with
/// α redrawn per episode from `dist`. Returns the metric report as JSON.
#[pyfunction]
#[pyo3(signature = (checkpoint, data_dir, alpha = None, dist = None, seed = 0))]
fn evaluate(
    py: Python<'_>,
    checkpoint: &str,
    data_dir: &str,
    alpha: Option<f64>,
    dist: Option<&str>,
    seed: u64,
) -> PyResult<String> {
    let agent = Agent::load(checkpoint).map_err(runtime_err)?;
    let (topo, data) = load_data(data_dir)?;
    let env = EnvConfig::new(data.meta.sla_ms);
    let report = match (alpha, dist) {
        (Some(a), None) => {
            py.detach(|| eval_static(&agent, &topo, &env, &data.test, Preference::alpha(a)))
        }
        (None, Some(spec)) => {
            let d: PreferenceDistribution = spec.parse().map_err(value_err)?;
            py.detach(|| eval_dynamic(&agent, &topo, &env, &data.test, &d, None, seed))
        }
        _ => return Err(value_err("give exactly one of alpha or dist")),
    }
    .map_err(runtime_err)?;
    to_json(&report)
}

/// Steerable rollout over a dataset's test split, driven tick by tick.
#[pyclass(name = "Session")]
struct PySession(SteerSession);

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (checkpoint, data_dir, alpha, beta = None))]
    fn new(checkpoint: &str, data_dir: &str, alpha: f64, beta: Option<f64>) -> PyResult<Self> {
        let agent = Agent::load(checkpoint).map_err(runtime_err)?;
        let (topo, data) = load_data(data_dir)?;
        let env = EnvConfig::new(data.meta.sla_ms);
        let session = SteerSession::new(
            "py",
            checkpoint,
            Arc::new(agent),
            &topo,
            &env,
            Arc::new(data.test),
            Preference::new(alpha, beta),
        )
        .map_err(value_err)?;
        Ok(Self(session))
    }

    /// Queues a control message (JSON text); returns the ack as JSON.
    fn control(&mut self, message: &str) -> PyResult<String> {
        let msg: ControlMessage = serde_json::from_str(message).map_err(value_err)?;
        let ack = self.0.apply_control(msg).map_err(value_err)?;
        to_json(&ack)
    }

    /// Advances one tick; returns the telemetry frame as JSON, or `None`
    /// while paused.
    fn tick(&mut self) -> PyResult<Option<String>> {
        self.0.tick().map(|f| to_json(&f)).transpose()
    }

    fn state(&self) -> PyResult<String> {
        to_json(&self.0.state())
    }
}

#[pymodule]
#[pyo3(name = "prefnet")]
fn prefnet_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PySession>()?;
    m.add_function(wrap_pyfunction!(fit_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use prefnet::datagen::{
    generate, generate_from_traffic, read_dataset, read_topology, write_dataset, write_topology,
    Dataset, DatasetRecord, TrafficPattern,
};
use prefnet::eval::{
    comparison_csv, eval_dynamic, eval_static, run_scenario, MetricReport, Scenario,
};
use prefnet::neural::{ModelConfig, OptimizerKind};
use prefnet::pref::reference::GRID_QUANTILES;
use prefnet::pref::{
    collect_effects, fit_exponential_with, EffectKind, EffectSample, FitOptions,
    PreferenceDistribution,
};
use prefnet::rl::{train, Agent, Preference, PreferenceSource, Task, TrainConfig};
use prefnet::sim::{EnvConfig, Topology};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{load_file, merge};
use crate::{
    Command, EvalDynamicArgs, EvalStaticArgs, FitDistArgs, GenDataArgs, PretrainGridArgs,
    ScenarioArgs, ServeArgs, TrainArgs, TrainKnobs,
};

pub enum Failure {
    /// Bad flags or configuration (exit code 2).
    Usage(anyhow::Error),
    /// Everything else (exit code 1).
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Result<T, E = Failure> = std::result::Result<T, E>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

fn required<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| usage(format!("--{name} is required")))
}

pub fn run(config: Option<&Path>, command: Command) -> Result<()> {
    let file = config.map(load_file).transpose().map_err(Failure::Usage)?;
    let file = file.as_ref();
    let settle = |e: anyhow::Error| Failure::Usage(e);
    match command {
        Command::GenData(a) => gen_data(merge("gen-data", file, &a).map_err(settle)?),
        Command::PretrainGrid(a) => {
            pretrain_grid(merge("pretrain-grid", file, &a).map_err(settle)?)
        }
        Command::FitDist(a) => fit_dist(merge("fit-dist", file, &a).map_err(settle)?),
        Command::Train(a) => train_cmd(merge("train", file, &a).map_err(settle)?),
        Command::EvalStatic(a) => eval_static_cmd(merge("eval-static", file, &a).map_err(settle)?),
        Command::EvalDynamic(a) => {
            eval_dynamic_cmd(merge("eval-dynamic", file, &a).map_err(settle)?)
        }
        Command::Scenario(a) => scenario_cmd(merge("scenario", file, &a).map_err(settle)?),
        Command::Serve(a) => serve_cmd(merge("serve", file, &a).map_err(settle)?),
    }
}

/// Flag/config seed, else `PREFNET_SEED`, else 0.
fn resolve_seed(seed: Option<u64>) -> Result<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var("PREFNET_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("PREFNET_SEED is not an integer: {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn parse_dist(spec: &str, flag: &str) -> Result<PreferenceDistribution> {
    spec.parse().map_err(|e| usage(format!("--{flag}: {e}")))
}

fn parse_task(task: Option<&str>) -> Result<Task> {
    task.unwrap_or("as").parse().map_err(usage)
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Writes `manifest.json` into `dir` and prints the one-line summary.
fn finish(
    command: &str,
    dir: &Path,
    args: &impl Serialize,
    seed: Option<u64>,
    summary: Value,
) -> Result<()> {
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "args": args,
        "seed": seed,
        "summary": summary,
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    let mut line = json!({ "command": command, "out": dir.display().to_string() });
    if let (Value::Object(l), Value::Object(s)) = (&mut line, summary) {
        l.extend(s);
    }
    println!("{line}");
    Ok(())
}

/// A dataset directory together with the topology it was generated on.
struct Data {
    topology: Topology,
    dataset: Dataset,
}

impl Data {
    fn load(dir: &Path) -> Result<Self> {
        let dataset =
            read_dataset(dir).with_context(|| format!("loading dataset {}", dir.display()))?;
        let topology = read_topology(dir, &dataset.meta)
            .with_context(|| format!("topology of {}", dir.display()))?;
        Ok(Self { topology, dataset })
    }

    fn env_config(&self) -> EnvConfig {
        EnvConfig::new(self.dataset.meta.sla_ms)
    }

    fn split(&self, name: Option<&str>) -> Result<&[DatasetRecord]> {
        match name.unwrap_or("test") {
            "train" => Ok(&self.dataset.train),
            "val" => Ok(&self.dataset.val),
            "test" => Ok(&self.dataset.test),
            other => Err(usage(format!(
                "unknown split `{other}` (expected train|val|test)"
            ))),
        }
    }
}

fn load_agent(path: &Path, data: &Data) -> Result<Agent> {
    let agent =
        Agent::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    if agent.topology != data.topology.name() {
        return Err(Failure::Runtime(anyhow!(
            "{} was trained on {}, dataset uses {}",
            path.display(),
            agent.topology,
            data.topology.name()
        )));
    }
    Ok(agent)
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let out = required(a.out.clone(), "out")?;
    let name = a.topology.clone().unwrap_or_else(|| "internet2".into());
    let topology = Topology::resolve(&name).map_err(|e| usage(format!("--topology: {e}")))?;
    let seed = resolve_seed(a.seed)?;
    let mut config = a.generator.clone().unwrap_or_default();
    if let Some(h) = a.horizon {
        config.horizon = h;
    }
    if let Some(m) = a.mean_total {
        config.traffic.mean_total = m;
    }
    if let Some(p) = a.perturb {
        config.perturb_fraction = p;
    }
    let dataset = match &a.trace {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading trace {}", path.display()))?;
            let mut pattern =
                TrafficPattern::from_trace(&text, topology.len()).context("parsing trace")?;
            if let Some(m) = a.mean_total {
                pattern.rescale_mean_total(m);
            }
            generate_from_traffic(&pattern, &topology, &config, seed)
        }
        None => generate(&topology, &config, seed),
    }
    .context("generating dataset")?;
    write_dataset(&out, &dataset).context("writing dataset")?;
    write_topology(&out, &topology).context("writing topology")?;
    let c = dataset.meta.counts;
    let summary = json!({
        "topology": topology.name(),
        "sla_ms": dataset.meta.sla_ms,
        "train": c.train, "val": c.val, "test": c.test,
    });
    finish("gen-data", &out, &a, Some(seed), summary)
}

fn train_config(
    task: Task,
    source: PreferenceSource,
    knobs: &TrainKnobs,
    seed: u64,
) -> Result<TrainConfig> {
    let mut config = TrainConfig::new(task, source);
    let mut ppo = knobs.ppo.clone().unwrap_or_default();
    if let Some(v) = knobs.iterations {
        ppo.iterations = v;
    }
    if let Some(v) = knobs.update_interval {
        ppo.update_interval = v;
    }
    if let Some(v) = knobs.lr {
        ppo.lr = v;
    }
    if let Some(v) = knobs.epochs {
        ppo.epochs = v;
    }
    if let Some(v) = knobs.minibatch {
        ppo.minibatch_size = v;
    }
    match knobs.optimizer.as_deref() {
        None => {}
        Some("adam") => ppo.optimizer = OptimizerKind::adam(),
        Some("sgd") => ppo.optimizer = OptimizerKind::Sgd,
        Some(other) => {
            return Err(usage(format!(
                "unknown optimizer `{other}` (expected sgd|adam)"
            )))
        }
    }
    ppo.seed = seed;
    ppo.validate().map_err(usage)?;
    let defaults = ModelConfig::default();
    config.model = ModelConfig::new(
        knobs.hidden.unwrap_or(defaults.hidden),
        knobs.steps.unwrap_or(defaults.steps),
        1,
    );
    config.model.validate().map_err(usage)?;
    config.ppo = ppo;
    if let Some(v) = knobs.episode_len {
        config.episode_len = v;
    }
    Ok(config)
}

fn run_training(
    data: &Data,
    config: &TrainConfig,
    log_path: &Path,
) -> Result<(Agent, Option<f64>)> {
    let mut log = std::io::BufWriter::new(
        fs::File::create(log_path).with_context(|| format!("creating {}", log_path.display()))?,
    );
    let mut io_err = None;
    let val = (config.validate_every > 0).then_some(data.dataset.val.as_slice());
    let outcome = train(
        &data.topology,
        &data.env_config(),
        &data.dataset.train,
        val,
        config,
        |rec| {
            if io_err.is_none() {
                if let Err(e) = serde_json::to_writer(&mut log, rec)
                    .map_err(std::io::Error::from)
                    .and_then(|_| log.write_all(b"\n"))
                {
                    io_err = Some(e);
                }
            }
        },
    )
    .context("training")?;
    if let Some(e) = io_err {
        return Err(Failure::Runtime(anyhow!(
            "writing {}: {e}",
            log_path.display()
        )));
    }
    log.flush()
        .with_context(|| format!("writing {}", log_path.display()))?;
    let last = outcome.log.last().map(|r| r.mean_reward);
    Ok((outcome.agent, last))
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let data_dir = required(a.data.clone(), "data")?;
    let out = required(a.out.clone(), "out")?;
    let task = parse_task(a.task.as_deref())?;
    let seed = resolve_seed(a.seed)?;
    let source = match (a.fixed_alpha, &a.dist) {
        (Some(_), Some(_)) => return Err(usage("--fixed-alpha and --dist are mutually exclusive")),
        (Some(alpha), None) => PreferenceSource::Fixed {
            preference: Preference::new(alpha, a.fixed_beta),
        },
        (None, Some(spec)) => PreferenceSource::Sampled {
            alpha: parse_dist(spec, "dist")?,
            beta: a
                .beta_dist
                .as_deref()
                .map(|s| parse_dist(s, "beta-dist"))
                .transpose()?,
        },
        (None, None) => return Err(usage("one of --dist or --fixed-alpha is required")),
    };
    let mut config = train_config(task, source, &a.knobs, seed)?;
    if let Some(v) = a.validate_every {
        config.validate_every = v;
    }
    let data = Data::load(&data_dir)?;
    create_dir(&out)?;
    let (agent, last) = run_training(&data, &config, &out.join("train_log.jsonl"))?;
    let ckpt = out.join("agent.ckpt");
    agent.save(&ckpt).context("saving checkpoint")?;
    write_json(&out.join("train_config.json"), &config)?;
    let summary = json!({
        "checkpoint": ckpt.display().to_string(),
        "iterations": config.ppo.iterations,
        "final_mean_reward": last,
    });
    finish("train", &out, &a, Some(seed), summary)
}

#[derive(Debug, Serialize, Deserialize)]
struct GridEntry {
    preference: f64,
    checkpoint: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridIndex {
    data: PathBuf,
    task: Task,
    /// Which coefficient varies: "alpha" or "beta".
    axis: String,
    entries: Vec<GridEntry>,
}

fn pretrain_grid(a: PretrainGridArgs) -> Result<()> {
    let data_dir = required(a.data.clone(), "data")?;
    let out = required(a.out.clone(), "out")?;
    let task = parse_task(a.task.as_deref())?;
    let seed = resolve_seed(a.seed)?;
    let (axis, values) = match (a.alphas.is_empty(), a.betas.is_empty()) {
        (false, true) => ("alpha", a.alphas.clone()),
        (true, false) => ("beta", a.betas.clone()),
        _ => return Err(usage("give exactly one of --alphas or --betas")),
    };
    if axis == "beta" && (task != Task::PowerManagement || a.alpha.is_none()) {
        return Err(usage("a β grid needs --task pm and a fixed --alpha"));
    }
    if values.len() < 2 {
        return Err(usage("a grid needs at least two values"));
    }
    let data = Data::load(&data_dir)?;
    create_dir(&out)?;
    let mut entries = Vec::new();
    for &v in &values {
        let pref = match axis {
            "alpha" => Preference::new(v, (task == Task::PowerManagement).then_some(0.0)),
            _ => Preference::new(a.alpha.unwrap_or_default(), Some(v)),
        };
        pref.check_task(task).map_err(usage)?;
        let config = train_config(
            task,
            PreferenceSource::Fixed { preference: pref },
            &a.knobs,
            seed,
        )?;
        let name = format!("{axis}-{v}");
        run_training(&data, &config, &out.join(format!("{name}.log.jsonl"))).and_then(
            |(agent, _)| {
                agent
                    .save(out.join(format!("{name}.ckpt")))
                    .context("saving checkpoint")
                    .map_err(Failure::from)
            },
        )?;
        entries.push(GridEntry {
            preference: v,
            checkpoint: format!("{name}.ckpt"),
        });
    }
    let index = GridIndex {
        data: data_dir,
        task,
        axis: axis.into(),
        entries,
    };
    write_json(&out.join("grid.json"), &index)?;
    let summary = json!({ "axis": axis, "checkpoints": index.entries.len() });
    finish("pretrain-grid", &out, &a, Some(seed), summary)
}

fn fit_dist(a: FitDistArgs) -> Result<()> {
    let out = required(a.out.clone(), "out")?;
    let samples: Vec<EffectSample> = match (&a.grid, &a.effects) {
        (Some(grid), None) => {
            let path = grid.join("grid.json");
            let text =
                fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let index: GridIndex = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            let kind = match a.effect.as_deref().unwrap_or(if index.axis == "beta" {
                "power"
            } else {
                "vnf"
            }) {
                "vnf" => EffectKind::VnfCount,
                "power" => EffectKind::Power,
                other => {
                    return Err(usage(format!(
                        "unknown effect `{other}` (expected vnf|power)"
                    )))
                }
            };
            let data = Data::load(a.data.as_deref().unwrap_or(&index.data))?;
            let agents = index
                .entries
                .iter()
                .map(|e| load_agent(&grid.join(&e.checkpoint), &data))
                .collect::<Result<Vec<_>>>()?;
            collect_effects(
                &agents,
                &data.topology,
                &data.env_config(),
                &data.dataset.test,
                kind,
            )
            .context("measuring effects")?
        }
        (None, Some(path)) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        _ => return Err(usage("give exactly one of --grid or --effects")),
    };
    let opts = FitOptions {
        joint_v_max: a.joint_vmax.unwrap_or(false),
        ..FitOptions::default()
    };
    let fit = fit_exponential_with(&samples, opts).context("fitting")?;
    let dist = fit.distribution();
    create_dir(&out)?;
    fs::write(out.join("dist.txt"), format!("{dist}\n")).context("writing dist.txt")?;
    write_json(&out.join("effects.json"), &samples)?;
    write_json(
        &out.join("fit.json"),
        &json!({
            "lambda": fit.lambda, "v_max": fit.v_max, "rss": fit.rss,
            "iters": fit.iters, "samples": samples.len(),
        }),
    )?;
    let mut table = String::from("quantile,value\n");
    let mut quantiles = BTreeMap::new();
    for q in GRID_QUANTILES {
        let v = dist.quantile(q).context("quantile")?;
        table.push_str(&format!("{q},{v:.4}\n"));
        quantiles.insert(q.to_string(), format!("{v:.4}"));
    }
    fs::write(out.join("quantiles.csv"), table).context("writing quantiles.csv")?;
    let summary = json!({ "dist": dist.to_string(), "lambda": fit.lambda, "quantiles": quantiles });
    finish("fit-dist", &out, &a, None, summary)
}

fn report_row(name: &str, setting: &str, r: &MetricReport) -> Value {
    json!({
        "agent": name, "setting": setting,
        "mean_reward": r.mean_reward, "slav": r.slav,
        "mean_vnf_total": r.mean_vnf_total, "mean_power_total": r.mean_power_total,
        "steps": r.steps,
    })
}

/// Row label: the file stem, or the run directory for `train` output.
fn agent_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    match (stem.as_deref(), path.parent().and_then(|p| p.file_name())) {
        (Some("agent"), Some(dir)) => dir.to_string_lossy().into_owned(),
        (Some(s), _) => s.to_string(),
        _ => path.display().to_string(),
    }
}

fn eval_static_cmd(a: EvalStaticArgs) -> Result<()> {
    let data_dir = required(a.data.clone(), "data")?;
    let out = required(a.out.clone(), "out")?;
    if a.checkpoints.is_empty() {
        return Err(usage("at least one --checkpoint is required"));
    }
    let alphas = match (&a.dist, a.alphas.is_empty()) {
        (Some(spec), true) => {
            let dist = parse_dist(spec, "dist")?;
            let qs = if a.quantiles.is_empty() {
                GRID_QUANTILES.to_vec()
            } else {
                a.quantiles.clone()
            };
            qs.iter()
                .map(|&q| {
                    dist.quantile(q)
                        .map_err(|e| usage(format!("--quantiles: {e}")))
                })
                .collect::<Result<Vec<_>>>()?
        }
        (None, false) => a.alphas.clone(),
        _ => return Err(usage("give exactly one of --alphas or --dist")),
    };
    let data = Data::load(&data_dir)?;
    let env = data.env_config();
    let settings: Vec<String> = alphas.iter().map(|v| format!("alpha={v}")).collect();
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    for path in &a.checkpoints {
        let agent = load_agent(path, &data)?;
        let name = agent_name(path);
        let mut rewards = Vec::new();
        for (&alpha, setting) in alphas.iter().zip(&settings) {
            let pref = Preference::new(alpha, a.beta);
            let r = eval_static(&agent, &data.topology, &env, &data.dataset.test, pref)
                .with_context(|| format!("evaluating {name} at {setting}"))?;
            rewards.push(r.mean_reward);
            rows.push(report_row(&name, setting, &r));
        }
        csv_rows.push((name, rewards));
    }
    create_dir(&out)?;
    write_json(&out.join("results.json"), &rows)?;
    fs::write(
        out.join("rewards.csv"),
        comparison_csv(&settings, &csv_rows),
    )
    .context("writing rewards.csv")?;
    let summary = json!({ "agents": csv_rows.len(), "settings": settings.len() });
    finish("eval-static", &out, &a, None, summary)
}

fn eval_dynamic_cmd(a: EvalDynamicArgs) -> Result<()> {
    let data_dir = required(a.data.clone(), "data")?;
    let out = required(a.out.clone(), "out")?;
    let spec = required(a.dist.clone(), "dist")?;
    if a.checkpoints.is_empty() {
        return Err(usage("at least one --checkpoint is required"));
    }
    let alpha = parse_dist(&spec, "dist")?;
    let beta = a
        .beta_dist
        .as_deref()
        .map(|s| parse_dist(s, "beta-dist"))
        .transpose()?;
    let seed = resolve_seed(a.seed)?;
    let data = Data::load(&data_dir)?;
    let env = data.env_config();
    let mut rows = Vec::new();
    for path in &a.checkpoints {
        let agent = load_agent(path, &data)?;
        let name = agent_name(path);
        let r = eval_dynamic(
            &agent,
            &data.topology,
            &env,
            &data.dataset.test,
            &alpha,
            beta.as_ref(),
            seed,
        )
        .with_context(|| format!("evaluating {name}"))?;
        let mut row = report_row(&name, &spec, &r);
        row["episodes"] = serde_json::to_value(&r.episodes).context("serializing episodes")?;
        rows.push(row);
    }
    create_dir(&out)?;
    write_json(&out.join("results.json"), &rows)?;
    let rewards: BTreeMap<String, f64> = rows
        .iter()
        .map(|r| {
            (
                r["agent"].as_str().unwrap_or_default().to_string(),
                r["mean_reward"].as_f64().unwrap_or(f64::NAN),
            )
        })
        .collect();
    finish(
        "eval-dynamic",
        &out,
        &a,
        Some(seed),
        json!({ "mean_reward": rewards }),
    )
}

fn scenario_cmd(a: ScenarioArgs) -> Result<()> {
    let ckpt = required(a.checkpoint.clone(), "checkpoint")?;
    let data_dir = required(a.data.clone(), "data")?;
    let scenario_path = required(a.scenario.clone(), "scenario")?;
    let out = required(a.out.clone(), "out")?;
    let alpha = required(a.alpha, "alpha")?;
    let scenario = Scenario::load(&scenario_path).map_err(|e| usage(format!("--scenario: {e}")))?;
    let data = Data::load(&data_dir)?;
    let records = Arc::new(data.split(a.split.as_deref())?.to_vec());
    let agent = Arc::new(load_agent(&ckpt, &data)?);
    let steps = run_scenario(
        agent,
        &data.topology,
        &data.env_config(),
        &scenario,
        records,
        Preference::new(alpha, a.beta),
    )
    .context("running scenario")?;
    create_dir(&out)?;
    let path = out.join("steps.jsonl");
    let mut w = std::io::BufWriter::new(
        fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    for s in &steps {
        serde_json::to_writer(&mut w, s).context("serializing step")?;
        w.write_all(b"\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    let n = steps.len().max(1) as f64;
    let summary = json!({
        "steps": steps.len(),
        "mean_slav": steps.iter().map(|s| s.slav).sum::<f64>() / n,
        "mean_vnf_total": steps.iter().map(|s| s.vnf_total as f64).sum::<f64>() / n,
    });
    finish("scenario", &out, &a, None, summary)
}

fn serve_cmd(a: ServeArgs) -> Result<()> {
    let data_dir = required(a.data.clone(), "data")?;
    let addr: std::net::SocketAddr = a
        .addr
        .as_deref()
        .unwrap_or("127.0.0.1:8080")
        .parse()
        .map_err(|e| usage(format!("--addr: {e}")))?;
    let mut checkpoints = BTreeMap::new();
    for c in &a.checkpoints {
        let (name, path) = c
            .split_once('=')
            .ok_or_else(|| usage(format!("--checkpoint expects name=path, got `{c}`")))?;
        checkpoints.insert(name.to_string(), PathBuf::from(path));
    }
    let data = Data::load(&data_dir)?;
    let records = Arc::new(data.split(a.split.as_deref())?.to_vec());
    let config = prefnet_serve::ServeConfig {
        env_config: data.env_config(),
        topology: data.topology,
        records,
        checkpoints,
        default_tick_ms: a.tick_ms.unwrap_or(prefnet_serve::DEFAULT_TICK_MS),
    };
    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    eprintln!("serving on {addr}");
    rt.block_on(prefnet_serve::serve(config, addr))
        .with_context(|| format!("serving on {addr}"))?;
    Ok(())
}

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use biovolt::causal::{self, CausalDag, VariableSpec};
use biovolt::env::{run_episode, Env, EpisodeLogger, ARTIFACT_VERSION};
use biovolt::learner::{
    actor_policy, constant_policy, evaluate, load_checkpoint, random_policy, save_checkpoint, write_curve_csv,
    zero_policy, Checkpoint, PolicyCheckpoint, Trainer,
};
use biovolt::metrics::TERM_NAMES;
use biovolt::util::digest_json;
use clap::Args;
use serde_json::{json, Value};

use crate::config::{env_overrides, parse_assignment, read_toml, Effective, Layers};
use crate::{Common, Failure};

impl Common {
    fn layers(&self, extra: Vec<(String, Value)>) -> Result<Layers> {
        let file = self.config.as_deref().map(read_toml).transpose()?;
        let sets = self
            .sets
            .iter()
            .map(|s| parse_assignment(s).map_err(Failure::config))
            .collect::<Result<_>>()?;
        let mut flags = extra;
        if let Some(s) = &self.scenario {
            flags.push(("run.scenario".into(), json!(s)));
        }
        if let Some(s) = self.seed {
            flags.push(("run.seed".into(), json!(s)));
        }
        if let Some(o) = &self.out {
            flags.push(("run.out".into(), json!(o)));
        }
        if let Some(k) = self.snapshots {
            flags.push(("run.snapshots".into(), json!(k)));
        }
        if self.deterministic {
            flags.push(("run.deterministic".into(), json!(true)));
        }
        if self.quiet {
            flags.push(("run.quiet".into(), json!(true)));
        }
        Ok(Layers {
            file,
            env: env_overrides(std::env::vars()),
            sets,
            flags,
        })
    }

    /// Resolves the configuration, fixing the seed (drawing one if needed)
    /// and creating the output directory.
    fn resolve(&self, extra: Vec<(String, Value)>) -> Result<(Effective, u64)> {
        let mut eff = self.layers(extra)?.resolve()?;
        let seed = match eff.run.seed {
            Some(s) => s,
            None => {
                let s = u64::from(rand::random::<u32>());
                eff.run.seed = Some(s);
                eff.train.seed = s;
                crate::config::set_path(&mut eff.tree, "run.seed", json!(s))?;
                s
            }
        };
        crate::config::set_path(&mut eff.tree, "train.seed", json!(eff.train.seed))?;
        fs::create_dir_all(&eff.run.out).with_context(|| format!("creating {}", eff.run.out.display()))?;
        Ok((eff, seed))
    }
}

fn say(eff: &Effective, msg: impl AsRef<str>) {
    if !eff.run.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_manifest(eff: &Effective, command: &str, seed: u64, files: &[String], extra: Value) -> Result<()> {
    let manifest = json!({
        "artifact_version": ARTIFACT_VERSION,
        "command": command,
        "config_digest": digest_json(&eff.tree),
        "scenario_digest": eff.scenario.digest(),
        "seed": seed,
        "files": files,
        "config": eff.tree,
        "result": extra,
    });
    let mut out = create(&eff.run.out.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut out, &manifest)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn open_checkpoint(path: &Path) -> Result<Checkpoint> {
    let f = File::open(path).with_context(|| format!("opening checkpoint {}", path.display()))?;
    load_checkpoint(BufReader::new(f)).with_context(|| format!("reading checkpoint {}", path.display()))
}

fn policy_of(ck: Checkpoint) -> PolicyCheckpoint {
    match ck {
        Checkpoint::Policy(p) => p,
        Checkpoint::Trainer(t) => t.best_checkpoint(),
    }
}

#[derive(Debug, Clone)]
enum PolicyChoice {
    Zero,
    Random,
    Constant(f64),
    Checkpoint(PathBuf),
}

fn parse_policy(s: &str) -> Result<PolicyChoice, String> {
    match s {
        "zero" => Ok(PolicyChoice::Zero),
        "random" => Ok(PolicyChoice::Random),
        _ => {
            if let Some(v) = s.strip_prefix("constant:") {
                v.parse()
                    .map(PolicyChoice::Constant)
                    .map_err(|_| format!("bad voltage `{v}`"))
            } else if let Some(p) = s.strip_prefix("checkpoint:") {
                Ok(PolicyChoice::Checkpoint(PathBuf::from(p)))
            } else {
                Err("expected zero, random, constant:<volts> or checkpoint:<path>".into())
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// zero, random, constant:<volts> or checkpoint:<path>
    #[arg(long, default_value = "zero", value_parser = parse_policy)]
    policy: PolicyChoice,
    /// Number of episodes; episode k uses seed + k.
    #[arg(long)]
    episodes: Option<usize>,
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let extra = args
        .episodes
        .map(|n| vec![("run.episodes".to_string(), json!(n))])
        .unwrap_or_default();
    let (eff, seed) = args.common.resolve(extra)?;
    let actor = match &args.policy {
        PolicyChoice::Checkpoint(p) => {
            let ck = policy_of(open_checkpoint(p)?);
            if ck.scenario.digest() != eff.scenario.digest() {
                say(
                    &eff,
                    "warning: checkpoint was trained on a different scenario configuration",
                );
            }
            Some(ck.actor)
        }
        _ => None,
    };
    let label = match &args.policy {
        PolicyChoice::Zero => "zero".to_string(),
        PolicyChoice::Random => "random".to_string(),
        PolicyChoice::Constant(v) => format!("constant({v})"),
        PolicyChoice::Checkpoint(p) => format!("checkpoint({})", p.display()),
    };
    let mut env = Env::new(eff.scenario.clone())?;
    let mut files = Vec::new();
    let mut summary = csv::Writer::from_path(eff.run.out.join("summary.csv"))
        .with_context(|| format!("creating {}", eff.run.out.join("summary.csv").display()))?;
    let mut header = vec!["episode", "seed", "step", "reward", "terminal_penalty"];
    header.extend(TERM_NAMES);
    summary.write_record(&header)?;
    let mut returns = Vec::new();
    for k in 0..eff.run.episodes {
        let ep_seed = seed.wrapping_add(k as u64);
        let name = format!("episode_{k:03}.jsonl");
        let mut logger = EpisodeLogger::new(create(&eff.run.out.join(&name))?, eff.run.snapshots);
        let log = Some((&mut logger, k, label.as_str()));
        let ep = match (&args.policy, &actor) {
            (PolicyChoice::Zero, _) => run_episode(&mut env, ep_seed, zero_policy, log),
            (PolicyChoice::Random, _) => run_episode(&mut env, ep_seed, random_policy(ep_seed), log),
            (PolicyChoice::Constant(v), _) => run_episode(&mut env, ep_seed, constant_policy(*v), log),
            (PolicyChoice::Checkpoint(_), Some(a)) => run_episode(&mut env, ep_seed, actor_policy(a), log),
            (PolicyChoice::Checkpoint(_), None) => unreachable!("checkpoint actor is loaded above"),
        }?;
        logger.into_inner().flush()?;
        for (step, (r, b)) in ep.rewards.iter().zip(&ep.breakdowns).enumerate() {
            let mut row = vec![
                k.to_string(),
                ep_seed.to_string(),
                step.to_string(),
                r.to_string(),
                (r - b.total).to_string(),
            ];
            row.extend(b.weighted.as_array().iter().map(|x| x.to_string()));
            summary.write_record(&row)?;
        }
        println!("episode {k} seed {ep_seed} return {}", ep.discounted_return);
        returns.push(ep.discounted_return);
        files.push(name);
    }
    summary.flush()?;
    files.push("summary.csv".into());
    write_manifest(
        &eff,
        "simulate",
        seed,
        &files,
        json!({ "policy": label, "returns": returns }),
    )
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Total environment steps (same as `--set train.steps=N`).
    #[arg(long)]
    steps: Option<usize>,
    /// Continue from a saved trainer state; its stored configuration is used.
    #[arg(long, value_name = "FILE")]
    resume: Option<PathBuf>,
}

fn save(path: &Path, ck: &Checkpoint) -> Result<()> {
    let mut out = create(path)?;
    save_checkpoint(ck, &mut out)?;
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<()> {
    let extra = args
        .steps
        .map(|n| vec![("train.steps".to_string(), json!(n))])
        .unwrap_or_default();
    let (eff, seed) = args.common.resolve(extra)?;
    let mut trainer = match &args.resume {
        Some(p) => match open_checkpoint(p)? {
            Checkpoint::Trainer(t) => *t,
            Checkpoint::Policy(_) => bail!(Failure::config(anyhow!(
                "{} holds a policy, not a trainer state",
                p.display()
            ))),
        },
        None => Trainer::new(eff.scenario.clone(), eff.train.clone())?,
    };
    let out = &eff.run.out;
    let persist = |t: &Trainer| -> Result<()> {
        save(&out.join("trainer.ckpt"), &Checkpoint::Trainer(Box::new(t.clone())))?;
        save(&out.join("best.ckpt"), &Checkpoint::Policy(t.best_checkpoint()))?;
        write_curve_csv(t.curve(), create(&out.join("curve.csv"))?)?;
        Ok(())
    };
    while !trainer.is_finished() {
        if let Some(p) = trainer.step()? {
            say(&eff, format!("step {:>8}  eval return {:.4}", p.step, p.eval_return));
            persist(&trainer)?;
        }
    }
    persist(&trainer)?;
    let best = trainer
        .best()
        .map(|b| json!({ "step": b.step, "eval_return": b.eval_return }));
    if let Some(b) = trainer.best() {
        println!("best eval return {} at step {}", b.eval_return, b.step);
    }
    let files = ["trainer.ckpt", "best.ckpt", "curve.csv"].map(String::from);
    write_manifest(&eff, "train", seed, &files, json!({ "best": best }))
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Policy or trainer checkpoint.
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Comma-separated evaluation seeds; defaults to the checkpoint's.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Also evaluate the random and zero-intervention policies.
    #[arg(long)]
    baselines: bool,
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let (eff, seed) = args.common.resolve(Vec::new())?;
    let ck = policy_of(open_checkpoint(&args.checkpoint)?);
    let seeds = if args.seeds.is_empty() {
        ck.config.eval_seeds.clone()
    } else {
        args.seeds.clone()
    };
    let ev = evaluate(&ck.scenario, &seeds, actor_policy(&ck.actor))?;
    let terms: serde_json::Map<String, Value> = TERM_NAMES
        .iter()
        .zip(&ev.term_means)
        .map(|(n, v)| (n.to_string(), json!(v)))
        .collect();
    println!("policy mean return {}", ev.mean_return);
    let mut report = json!({
        "scenario": ck.scenario.name,
        "scenario_digest": ck.scenario.digest(),
        "seeds": seeds,
        "returns": ev.returns,
        "mean_return": ev.mean_return,
        "term_means": terms,
    });
    if args.baselines {
        let random = evaluate(&ck.scenario, &seeds, random_policy(seed))?;
        let zero = evaluate(&ck.scenario, &seeds, zero_policy)?;
        println!("random mean return {}", random.mean_return);
        println!("zero mean return {}", zero.mean_return);
        report["random_mean_return"] = json!(random.mean_return);
        report["zero_mean_return"] = json!(zero.mean_return);
    }
    let mut out = create(&eff.run.out.join("eval.json"))?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    write_manifest(&eff, "eval", seed, &["eval.json".into()], report)
}

#[derive(Debug, Args)]
pub struct CausalArgs {
    #[command(flatten)]
    common: Common,
    /// Episode logs (JSONL). Repeatable.
    #[arg(long = "log", value_name = "FILE", required = true)]
    logs: Vec<PathBuf>,
    /// Built-in graph (bioelectric, bioelectric-expanded) or an edge-list file.
    #[arg(long, default_value = "bioelectric")]
    dag: String,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    /// Comma-separated adjustment set, or `auto` for the smallest back-door set.
    #[arg(long, default_value = "")]
    z: String,
    /// Column definition `NAME=[header:]POINTER:EDGES`, edges comma-separated,
    /// e.g. `Vmem=/observables/mean_v:-0.07,-0.05`. Repeatable.
    #[arg(long = "var", value_name = "SPEC")]
    vars: Vec<String>,
}

fn parse_var(s: &str) -> Result<VariableSpec> {
    let bad = || Failure::config(anyhow!("bad variable spec `{s}`; expected NAME=[header:]POINTER:EDGES"));
    let (name, rest) = s.split_once('=').ok_or_else(bad)?;
    let (header, rest) = match rest.strip_prefix("header:") {
        Some(r) => (true, r),
        None => (false, rest),
    };
    let (pointer, edges) = rest.rsplit_once(':').ok_or_else(bad)?;
    let edges = edges
        .split(',')
        .map(str::trim)
        .filter(|e| !e.is_empty())
        .map(|e| e.parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad())?;
    Ok(if header {
        VariableSpec::header(name.trim(), pointer, edges)
    } else {
        VariableSpec::step(name.trim(), pointer, edges)
    })
}

pub fn causal(args: CausalArgs) -> Result<()> {
    let (eff, seed) = args.common.resolve(Vec::new())?;
    let dag = match CausalDag::builtin(&args.dag) {
        Some(d) => d,
        None => {
            let text = fs::read_to_string(&args.dag).with_context(|| format!("reading graph {}", args.dag))?;
            CausalDag::parse(&text)?
        }
    };
    let specs: Vec<VariableSpec> = args.vars.iter().map(|v| parse_var(v)).collect::<Result<_>>()?;
    let texts = args
        .logs
        .iter()
        .map(|p| fs::read_to_string(p).with_context(|| format!("reading log {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let table = causal::extract_table(&refs, &specs)?;
    let z: Vec<String> = match args.z.trim() {
        "auto" => causal::backdoor_sets(&dag, &[args.x.as_str()], &[args.y.as_str()], dag.len())?
            .into_iter()
            .next()
            .ok_or_else(|| Failure::config(anyhow!("no back-door adjustment set exists")))?,
        "" => Vec::new(),
        list => list.split(',').map(|s| s.trim().to_string()).collect(),
    };
    let zr: Vec<&str> = z.iter().map(String::as_str).collect();
    let adj = causal::adjust(&table, &dag, &args.x, &args.y, &zr)?;
    let mut buf = Vec::new();
    causal::write_adjustment_csv(&adj, &mut buf)?;
    fs::write(eff.run.out.join("causal.csv"), &buf).context("writing causal.csv")?;
    std::io::stdout().write_all(&buf)?;
    write_manifest(
        &eff,
        "causal",
        seed,
        &["causal.csv".into()],
        json!({ "x": adj.x, "y": adj.y, "z": adj.z, "rows": table.len() }),
    )
}

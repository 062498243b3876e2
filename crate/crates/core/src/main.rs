use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use dstlab::agents::Variant;
use dstlab::config::ExperimentConfig;
use dstlab::dialogue::{format_acts, parse_acts, Actor, BeliefState};
use dstlab::orchestrator::chat::ChatSession;
use dstlab::orchestrator::metrics::{mean_std, moving_mean, MetricsSeries};
use dstlab::orchestrator::train::{RunSummary, Trainer, CHECKPOINT_FILE, METRICS_FILE, SUMMARY_FILE};
use dstlab::orchestrator::{aggregate, format_eval_table, joint_train, EvalSummary};

const EXIT_ERROR: u8 = 1;
const EXIT_CRASHED: u8 = 3;

#[derive(Parser)]
#[command(name = "dstlab", version, about = "Train and inspect dialogue managers with neural tracking agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run per seed and write metrics, summaries and checkpoints.
    Train {
        /// TOML experiment config; defaults to the desk-scale dstc2-like setup.
        #[arg(long)]
        config: Option<PathBuf>,
        /// polynomial, ta-g, ta-r, ta-m, ta-all or ta-noteaching.
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        /// Comma-separated seeds, one worker each.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output root; runs go to <out>/<variant>/seed-<n>.
        #[arg(long, env = "DSTLAB_OUT", default_value = "runs")]
        out: PathBuf,
        /// Evaluation dialogues after training.
        #[arg(long)]
        episodes: Option<usize>,
        /// `key=value` with a dotted key, e.g. schedule.n1=500.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Evaluate saved runs greedily.
    Eval {
        /// A run directory, or a directory of runs.
        dir: PathBuf,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Talk to a trained manager in semantic acts.
    Chat {
        dir: PathBuf,
    },
    /// Learning-curve tables or phase summaries for plotting.
    Export {
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportFormat::Table)]
        format: ExportFormat,
        /// Destination directory; defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Table,
    Summary,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { config, variant, seed, seeds, out, episodes, overrides } => {
            cmd_train(config.as_deref(), variant, seed, seeds, &out, episodes, &overrides)
        }
        Command::Eval { dir, episodes, seed } => cmd_eval(&dir, episodes, seed).map(|_| ExitCode::SUCCESS),
        Command::Chat { dir } => cmd_chat(&dir).map(|_| ExitCode::SUCCESS),
        Command::Export { dir, format, out } => cmd_export(&dir, format, out.as_deref()).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn cmd_train(
    config: Option<&Path>,
    variant: Option<Variant>,
    seed: Option<u64>,
    seeds: Option<Vec<u64>>,
    out: &Path,
    episodes: Option<usize>,
    overrides: &[String],
) -> anyhow::Result<ExitCode> {
    let mut cfg = match config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::desk("dstc2-like"),
    };
    cfg = cfg.with_overrides(overrides)?;
    if let Some(v) = variant {
        cfg.variant = v;
    }
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    if let Some(n) = episodes {
        cfg.eval_episodes = n;
    }
    cfg.output_dir = out.to_path_buf();
    cfg.validate()?;
    let root = out.join(cfg.variant.as_str());
    std::fs::create_dir_all(&root).with_context(|| format!("cannot create {}", root.display()))?;

    let results: Vec<anyhow::Result<RunSummary>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&s| {
                let cfg = &cfg;
                let dir = root.join(format!("seed-{s}"));
                scope.spawn(move || -> anyhow::Result<RunSummary> {
                    let (trainer, crashed) = joint_train(cfg, s)?;
                    let eval = match (&crashed, cfg.eval_episodes) {
                        (None, n) if n > 0 => Some(trainer.evaluate(n, s)?),
                        _ => None,
                    };
                    let summary = trainer.summary(crashed, eval);
                    trainer.save(&dir, &summary)?;
                    Ok(summary)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("worker panicked")))).collect()
    });

    let mut crashed = false;
    let mut evals = Vec::new();
    for r in results {
        let s = r?;
        match (&s.crashed, &s.eval) {
            (Some(reason), _) => {
                crashed = true;
                println!("seed {}: crashed ({reason}); partial metrics written", s.seed);
            }
            (None, eval) => {
                println!(
                    "seed {}: final moving reward {:.4}",
                    s.seed,
                    s.final_moving_reward.unwrap_or(f64::NAN)
                );
                evals.extend(eval.iter().copied());
            }
        }
    }
    if !evals.is_empty() {
        let agg = aggregate(&evals);
        print!("{}", format_eval_table(&[(cfg.variant.as_str().to_string(), agg)]));
        std::fs::write(root.join("aggregate.json"), serde_json::to_string_pretty(&agg)?)?;
    }
    Ok(if crashed { ExitCode::from(EXIT_CRASHED) } else { ExitCode::SUCCESS })
}

/// Run directories at or below `dir`, sorted.
fn find_runs(dir: &Path, marker: &str) -> anyhow::Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    let mut runs = Vec::new();
    let mut stack = vec![(dir.to_path_buf(), 0)];
    while let Some((d, depth)) = stack.pop() {
        if d.join(marker).is_file() {
            runs.push(d);
            continue;
        }
        if depth < 3 {
            for entry in std::fs::read_dir(&d)? {
                let p = entry?.path();
                if p.is_dir() {
                    stack.push((p, depth + 1));
                }
            }
        }
    }
    runs.sort();
    Ok(runs)
}

fn cmd_eval(dir: &Path, episodes: usize, seed: u64) -> anyhow::Result<()> {
    let runs = find_runs(dir, CHECKPOINT_FILE)?;
    if runs.is_empty() {
        bail!("no {CHECKPOINT_FILE} under {}", dir.display());
    }
    let mut by_variant: Vec<(String, Vec<EvalSummary>)> = Vec::new();
    for run in &runs {
        let trainer = Trainer::load(run)?;
        let e = trainer.evaluate(episodes, seed)?;
        std::fs::write(run.join("eval.json"), serde_json::to_string_pretty(&e)?)?;
        let name = trainer.variant().as_str().to_string();
        match by_variant.iter_mut().find(|(n, _)| *n == name) {
            Some((_, v)) => v.push(e),
            None => by_variant.push((name, vec![e])),
        }
    }
    let rows: Vec<_> = by_variant.iter().map(|(n, v)| (n.clone(), aggregate(v))).collect();
    print!("{}", format_eval_table(&rows));
    Ok(())
}

fn show_belief(label: &str, b: &BeliefState, session: &ChatSession) {
    let o = &session.environment().ontology;
    let mut parts = Vec::new();
    for (slot, g) in o.informable().iter().zip(&b.goal) {
        let top = g.top();
        parts.push(format!("{}={}:{:.2} none:{:.2}", slot.name, slot.values[top], g.values[top], g.none));
    }
    let req: Vec<String> =
        o.requestable().iter().zip(&b.request).filter(|(_, &p)| p > 0.05).map(|(r, p)| format!("{r}:{p:.2}")).collect();
    let meth: Vec<String> = o.methods().iter().zip(&b.method).map(|(m, p)| format!("{m}:{p:.2}")).collect();
    println!("  {label:<9} goal[{}] request[{}] method[{}]", parts.join(" "), req.join(" "), meth.join(" "));
}

const CHAT_HELP: &str = "type acts like `inform(food=chinese)` or `request(phone)|affirm`, optionally followed by `@0.8` for the SLU confidence; `quit` leaves";

fn cmd_chat(dir: &Path) -> anyhow::Result<()> {
    let trainer = Trainer::load(dir)?;
    let mut session = ChatSession::new(
        trainer.environment().clone(),
        trainer.policy().clone(),
        trainer.trackers().clone(),
        trainer.agents_active(),
    )?;
    println!("{CHAT_HELP}");
    println!("system: {}", session.last_system_act());
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        print!("user> ");
        std::io::stdout().flush()?;
        let Some(line) = lines.next() else { break };
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "quit" {
            break;
        }
        let (text, confidence) = match line.rsplit_once('@') {
            Some((t, c)) => match c.trim().parse::<f64>() {
                Ok(c) => (t.trim(), c),
                Err(_) => {
                    println!("usage: {CHAT_HELP}");
                    continue;
                }
            },
            None => (line, 1.0),
        };
        let acts = match parse_acts(Actor::User, text) {
            Ok(a) => a,
            Err(e) => {
                println!("usage: {e}; {CHAT_HELP}");
                continue;
            }
        };
        let turn = match session.step(acts.clone(), confidence) {
            Ok(t) => t,
            Err(e) => {
                println!("usage: {e}; {CHAT_HELP}");
                continue;
            }
        };
        println!("system: {}   [{}]", turn.system_act, turn.action_label);
        show_belief("teacher", &turn.aux_belief, &session);
        show_belief("executed", &turn.executed_belief, &session);
        let scores: Vec<String> = turn.rewards.basic_score.iter().flatten().map(|s| format!("{s:.4}")).collect();
        println!("  reward    turn {:.2} basic-score [{}]", turn.rewards.turn_penalty, scores.join(" "));
        if turn.finished {
            println!("verdict: {}  (heard: {})", if session.verdict() { "success" } else { "failure" }, format_acts(&acts));
            break;
        }
    }
    Ok(())
}

fn load_run(dir: &Path) -> anyhow::Result<(RunSummary, MetricsSeries)> {
    let summary: RunSummary = serde_json::from_str(&std::fs::read_to_string(dir.join(SUMMARY_FILE))?)
        .with_context(|| format!("corrupt {}", dir.join(SUMMARY_FILE).display()))?;
    let metrics = MetricsSeries::from_csv(&std::fs::read_to_string(dir.join(METRICS_FILE))?, summary.window)?;
    Ok((summary, metrics))
}

fn cmd_export(dir: &Path, format: ExportFormat, out: Option<&Path>) -> anyhow::Result<()> {
    let runs = find_runs(dir, METRICS_FILE)?;
    if runs.is_empty() {
        bail!("no {METRICS_FILE} under {}", dir.display());
    }
    let out = out.unwrap_or(dir);
    std::fs::create_dir_all(out)?;
    let mut loaded = Vec::new();
    for r in &runs {
        loaded.push(load_run(r)?);
    }
    match format {
        ExportFormat::Table => {
            let mut variants: Vec<Variant> = loaded.iter().map(|(s, _)| s.variant).collect();
            variants.dedup();
            for v in variants {
                let group: Vec<&(RunSummary, MetricsSeries)> = loaded.iter().filter(|(s, _)| s.variant == v).collect();
                let len = group.iter().map(|(_, m)| m.len()).max().unwrap_or(0);
                let curves: Vec<Vec<f64>> = group.iter().map(|(s, m)| moving_mean(&m.rewards(), s.window)).collect();
                let mut text = String::from("episode,phase,moving_reward_mean,moving_reward_std,runs\n");
                for i in 0..len {
                    let at: Vec<f64> = curves.iter().filter_map(|c| c.get(i).copied()).collect();
                    let phase = group.iter().find_map(|(_, m)| m.episodes.get(i)).map_or(0, |e| e.phase);
                    let (m, s) = mean_std(&at);
                    text.push_str(&format!("{i},{phase},{m},{s},{}\n", at.len()));
                }
                let path = out.join(format!("curve-{}.csv", v.as_str()));
                std::fs::write(&path, text)?;
                println!("{}", path.display());
            }
        }
        ExportFormat::Summary => {
            let mut text = String::from("variant,seed,n1,n2,n3,n4,episodes,final_moving_reward,eval_success,eval_turns,eval_reward,crashed\n");
            for (s, _) in &loaded {
                let [n1, n2, n3, n4] = s.boundaries;
                let e = s.eval;
                let f = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.4}"));
                text.push_str(&format!(
                    "{},{},{n1},{n2},{n3},{n4},{},{},{},{},{},{}\n",
                    s.variant,
                    s.seed,
                    s.episodes,
                    f(s.final_moving_reward),
                    f(e.map(|e| e.success_rate)),
                    f(e.map(|e| e.mean_turns)),
                    f(e.map(|e| e.mean_reward)),
                    s.crashed.is_some()
                ));
            }
            std::fs::write(out.join("summary.csv"), &text)?;
            print!("{text}");
        }
    }
    Ok(())
}

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use antijam::harness::{
    convergence_rows, derive_run_seed, emit_csv, emit_svg, evaluate_agent, run_training,
    solve_oracle, sweep, AgentKind, EvalRow, HarnessError, RunConfig, Series, SweepParam, METRICS,
};
use antijam::oracle::write_solution;

#[derive(Parser)]
#[command(name = "antijam", version, about = "Anti-jamming backscatter simulator and learning harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; the bundled default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Agents to run (comma separated), overriding the config.
    #[arg(long, value_delimiter = ',')]
    agent: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train over every configured seed and write reward curves and checkpoints.
    Train(Common),
    /// Train if needed, then evaluate with exploration off.
    Eval(Common),
    /// Evaluate the agent and the greedy baseline across parameter values.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Solve the MDP exactly and export both optimal policies.
    Oracle(Common),
}

type Result<T> = std::result::Result<T, HarnessError>;

fn load(common: &Common) -> Result<(RunConfig, Vec<AgentKind>)> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default_config(),
    };
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    let agents = if common.agent.is_empty() {
        vec![cfg.agent]
    } else {
        common
            .agent
            .iter()
            .map(|a| a.parse())
            .collect::<Result<Vec<AgentKind>>>()?
    };
    cfg.agent = agents[0];
    fs::create_dir_all(&cfg.output_dir)?;
    Ok((cfg, agents))
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn train(common: &Common) -> Result<()> {
    let (cfg, agents) = load(common)?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for agent in agents {
        let mut c = cfg.clone();
        c.agent = agent;
        for i in 0..cfg.seeds {
            let seed = derive_run_seed(cfg.base_seed, i as u64);
            let report = run_training(&c, seed)?;
            info!(
                "{agent} seed {i}: mean training reward {:.4}",
                report.metrics.avg_reward()
            );
            let path = out(&cfg, &format!("{agent}_seed{i}.{}", report.checkpoint.extension()));
            report.checkpoint.save(BufWriter::new(File::create(path)?))?;
            series.push(Series {
                name: format!("{agent} seed {i}"),
                points: report
                    .reward_curve
                    .iter()
                    .map(|(s, r)| (*s as f64, *r, 0.0))
                    .collect(),
            });
            rows.extend(convergence_rows(&report));
        }
    }
    emit_csv(&rows, &out(&cfg, "convergence.csv"))?;
    emit_svg(&series, "training slot", "window average reward", &out(&cfg, "convergence.svg"))?;
    Ok(())
}

fn eval(common: &Common) -> Result<()> {
    let (cfg, agents) = load(common)?;
    let mut rows = Vec::new();
    for agent in agents {
        for i in 0..cfg.seeds {
            let seed = derive_run_seed(cfg.base_seed, i as u64);
            let m = evaluate_agent(&cfg, agent, seed)?;
            println!(
                "{agent} seed {i}: throughput {:.4}  loss {:.4}  pdr {:.4}",
                m.avg_throughput(),
                m.packet_loss_rate(),
                m.pdr()
            );
            rows.push(EvalRow {
                agent: agent.name().into(),
                seed,
                slots: m.slots,
                arrived: m.arrived,
                delivered: m.delivered,
                dropped: m.dropped,
                throughput: m.avg_throughput(),
                packet_loss_rate: m.packet_loss_rate(),
                pdr: m.pdr(),
            });
        }
    }
    emit_csv(&rows, &out(&cfg, "eval.csv"))
}

fn run_sweep(common: &Common, param: &str, values: &[f64]) -> Result<()> {
    let (cfg, _) = load(common)?;
    let param: SweepParam = param.parse()?;
    let table = sweep(&cfg, param, values)?;
    for (v, t) in &table.greedy_choice {
        info!("{param}={v}: greedy best at t_harvest={t}");
    }
    emit_csv(&table.rows(), &out(&cfg, &format!("sweep_{param}.csv")))?;
    for metric in METRICS {
        emit_svg(
            &table.series(metric),
            param.name(),
            metric,
            &out(&cfg, &format!("sweep_{param}_{metric}.svg")),
        )?;
    }
    Ok(())
}

fn oracle(common: &Common) -> Result<()> {
    let (cfg, _) = load(common)?;
    let report = solve_oracle(&cfg)?;
    println!("optimal gain {:.6}", report.gain());
    println!(
        "gain of the discounted-optimal policy (gamma {}) {:.6}",
        cfg.dqn.gamma, report.discounted_policy_gain
    );
    println!("states where the two policies differ: {}", report.policy_disagreements());
    write_solution(
        &cfg.env,
        &report.average,
        BufWriter::new(File::create(out(&cfg, "oracle_average.txt"))?),
    )?;
    write_solution(
        &cfg.env,
        &report.discounted,
        BufWriter::new(File::create(out(&cfg, "oracle_discounted.txt"))?),
    )?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(c) => train(c),
        Command::Eval(c) => eval(c),
        Command::Sweep { common, param, values } => run_sweep(common, param, values),
        Command::Oracle(c) => oracle(c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

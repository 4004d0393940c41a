use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dynmsf::oracle::{self, OpRecord, ReplayConfig, ReplayOutcome, Workload};
use dynmsf::{Error, Params, SearchMode};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "dynmsf", version, about = "Fully-dynamic MSF harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random workload file.
    Gen(GenArgs),
    /// Replay a workload, checking it against Kruskal, and write per-op CSV.
    Run(RunArgs),
    /// Replay many random workloads against the oracles.
    Fuzz(FuzzArgs),
    /// Compare per-search work of the two search modes across sizes.
    Scale(ScaleArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Simple,
    Shortcut,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<SearchMode> {
        match self {
            ModeArg::Simple => vec![SearchMode::Simple],
            ModeArg::Shortcut => vec![SearchMode::Shortcut],
            ModeArg::Both => vec![SearchMode::Simple, SearchMode::Shortcut],
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    ops: usize,
    /// Probability that an update is an insert.
    #[arg(long, default_value_t = 0.6)]
    mix: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long = "eps-h")]
    eps_h: Option<f64>,
    #[arg(long = "eps-q")]
    eps_q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

impl ParamArgs {
    fn params(&self) -> Params {
        let mut p = Params::default();
        if let Some(x) = self.eps_h {
            p.eps_h = x;
        }
        if let Some(x) = self.eps_q {
            p.eps_q = x;
        }
        if let Some(x) = self.alpha {
            p.alpha = x;
        }
        if !p.in_recommended_range() {
            eprintln!(
                "warning: eps-h = {} and eps-q = {} lie outside (0, 0.5) and (0, 1/6]",
                p.eps_h, p.eps_q
            );
        }
        p
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    workload: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Shortcut)]
    mode: ModeArg,
    /// Audit every structure after every op.
    #[arg(long)]
    audit: bool,
    #[command(flatten)]
    params: ParamArgs,
    /// Output path; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long = "max-n", default_value_t = 32)]
    max_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    #[arg(long)]
    audit: bool,
    /// Ops per trial.
    #[arg(long, default_value_t = 500)]
    ops: usize,
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long = "n", value_delimiter = ',', default_value = "256,1024,4096,16384")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    ops: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Diverged(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

const RUN_HEADER: &str = "index,op,became_tree,became_nontree,msf_weight,promotions,down_visits,up_visits,queue_ops,hops,credits_spent";

fn opt(e: Option<dynmsf::EdgeId>) -> String {
    e.map(|e| e.0.to_string()).unwrap_or_default()
}

fn run_csv(records: &[OpRecord]) -> String {
    let mut s = String::from(RUN_HEADER);
    s.push('\n');
    for r in records {
        let c = &r.counters;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.op,
            opt(r.change.became_tree),
            opt(r.change.became_nontree),
            r.msf_weight,
            c.promotions,
            c.down_visits,
            c.up_visits,
            c.queue_ops,
            c.hops,
            c.credits_spent
        )
        .unwrap();
    }
    s
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Replays `w` in every requested mode; divergences from the oracles or
/// between modes are collected as messages.
fn replay_modes(w: &Workload, modes: &[SearchMode], audit: bool, params: Params) -> Result<(ReplayOutcome, Vec<String>), Error> {
    let mut outs = Vec::new();
    for &mode in modes {
        let mut cfg = ReplayConfig::new(mode);
        cfg.params = params;
        cfg.audit = audit;
        outs.push((mode, oracle::replay(w, &cfg)?));
    }
    let mut problems = Vec::new();
    for (mode, out) in &outs {
        for d in &out.divergences {
            problems.push(format!("{mode:?} op {}: {}", d.index, d.msg));
        }
    }
    if let [(_, a), (_, b)] = outs.as_slice() {
        let strip = |r: &OpRecord| (r.index, r.op, r.change, r.msf_weight);
        if let Some(i) = a.records.iter().zip(&b.records).position(|(x, y)| strip(x) != strip(y)) {
            problems.push(format!("modes disagree at op {i}"));
        }
    }
    let last = outs.pop().expect("at least one mode").1;
    Ok((last, problems))
}

fn cmd_gen(a: &GenArgs) -> Result<(), Failure> {
    if a.n == 0 || !(0.0..=1.0).contains(&a.mix) {
        return Err(Failure::Usage("need n >= 1 and mix in [0, 1]".into()));
    }
    let w = oracle::gen_workload(a.n, a.ops, a.mix, a.seed);
    fs::write(&a.out, w.to_text())?;
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.workload)?;
    let w = Workload::parse(&text)?;
    let (out, problems) = replay_modes(&w, &a.mode.modes(), a.audit, a.params.params())?;
    emit(a.csv.as_deref(), &run_csv(&out.records))?;
    if problems.is_empty() {
        eprintln!("{} ops, no divergence", w.ops.len());
        Ok(())
    } else {
        Err(Failure::Diverged(problems.join("\n")))
    }
}

fn cmd_fuzz(a: &FuzzArgs) -> Result<(), Failure> {
    if a.max_n < 2 {
        return Err(Failure::Usage("max-n must be at least 2".into()));
    }
    let modes = a.mode.modes();
    let results: Vec<(usize, usize, Result<Vec<String>, Error>)> = (0..a.trials)
        .into_par_iter()
        .map(|t| {
            let seed = a.seed.wrapping_mul(1_000_003).wrapping_add(t as u64);
            let n = 2 + (seed as usize).wrapping_mul(2_654_435_761) % (a.max_n - 1);
            let w = oracle::gen_workload(n, a.ops, 0.6, seed);
            let res = replay_modes(&w, &modes, a.audit, Params::default()).map(|(_, p)| p);
            (t, n, res)
        })
        .collect();
    let mut bad = 0;
    for (t, n, res) in &results {
        match res {
            Ok(p) if p.is_empty() => {}
            Ok(p) => {
                bad += 1;
                eprintln!("trial {t} (n = {n}): {}", p[0]);
            }
            Err(e) => {
                bad += 1;
                eprintln!("trial {t} (n = {n}): {e}");
            }
        }
    }
    println!("{} trials, {bad} failing", a.trials);
    if bad == 0 {
        Ok(())
    } else {
        Err(Failure::Diverged(format!("{bad} trials failed")))
    }
}

const SCALE_HEADER: &str = "n,m,deletes,simple_searches,simple_visits_per_search,shortcut_searches,shortcut_hops_per_search,ratio,promotions,queue_ops,credits_spent,max_hops,hop_violations,ndq_violations";

fn cmd_scale(a: &ScaleArgs) -> Result<(), Failure> {
    let rows: Vec<Result<oracle::ScaleRow, Error>> = a
        .n
        .par_iter()
        .map(|&n| oracle::scale_point(n, a.ops, a.seed, Params::default()))
        .collect();
    let mut s = String::from(SCALE_HEADER);
    s.push('\n');
    for r in rows {
        let r = r.map_err(|e| Failure::Diverged(e.to_string()))?;
        writeln!(
            s,
            "{},{},{},{},{:.4},{},{:.4},{:.4},{},{},{},{},{},{}",
            r.n,
            r.m,
            r.deletes,
            r.simple_searches,
            r.mean_visits(),
            r.shortcut_searches,
            r.mean_hops(),
            r.ratio(),
            r.promotions,
            r.queue_ops,
            r.credits_spent,
            r.max_hops,
            r.hop_violations,
            r.ndq_violations
        )
        .unwrap();
    }
    emit(a.csv.as_deref(), &s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Fuzz(a) => cmd_fuzz(a),
        Cmd::Scale(a) => cmd_scale(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diverged(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

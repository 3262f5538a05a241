//! Command-line front end. Exit codes: 0 success, 1 execution failure,
//! 2 configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use plis_core::mirror::{decide, ScorePairVector};
use plis_core::procedures::{self, method_names, Method, MethodInput, ModelKind, ProcedureResult, WorkingModelSpec};
use plis_core::{Combiner, NullDistribution};
use serde::{Deserialize, Serialize};

use crate::acceptance::{self, AcceptOptions};
use crate::harness::{self, RunOptions};
use crate::io::{self, OutputRow};
use crate::plan::{ExperimentPlan, BUNDLED};
use crate::{AppError, AppResult};

#[derive(Debug, Parser)]
#[command(name = "plis", version, about = "Conformal FDR control for structured multiple testing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a procedure on a data file.
    Test(TestArgs),
    /// Run a simulation plan (a TOML file or a bundled plan name).
    Simulate(SimulateArgs),
    /// Run the acceptance suite.
    Accept(AcceptArgs),
    /// List method names and bundled plans.
    List,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Observations, one per row, with an optional `test`/`null` label column.
    pub input: Option<PathBuf>,
    /// TOML file with any of the settings below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// plis, plis_cbh, plis_sym, derand[:n=N][:ratio=R], or any full
    /// registry name (see `plis list`).
    #[arg(long)]
    pub method: Option<String>,
    /// Working model: hm or tg.
    #[arg(long)]
    pub model: Option<String>,
    /// Baseline combiner: max_abs or additive.
    #[arg(long)]
    pub combiner: Option<String>,
    /// Known null distribution, e.g. `normal(0,1)`, `chisq(3)`, `uniform(0,1)`.
    #[arg(long)]
    pub null: Option<String>,
    /// File of labelled null observations (semi-supervised mode).
    #[arg(long)]
    pub nulls: Option<PathBuf>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fixed HMM parameters (`key = value` file); EM is skipped.
    #[arg(long)]
    pub hmm_params: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub print_config: bool,
    /// Debugging: read (s_x, s_y) pairs and apply the mirror rule directly.
    #[arg(long, hide = true)]
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub plan: String,
    /// Output directory; defaults to the plan's `output` or the current
    /// directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record per-replication wall-clock times (outputs are then no longer
    /// reproducible byte for byte).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct AcceptArgs {
    #[arg(long, default_value_t = acceptance::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Only these criteria (comma separated ids).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}

/// Settings of `plis test`, as read from `--config` and printed by
/// `--print-config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub method: String,
    pub model: String,
    pub combiner: String,
    pub alpha: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nulls: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hmm_params: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            method: "plis".into(),
            model: "hm".into(),
            combiner: "max_abs".into(),
            alpha: 0.05,
            seed: 0,
            null: None,
            nulls: None,
            out: None,
            hmm_params: None,
        }
    }
}

impl RunConfig {
    fn from_args(a: &TestArgs) -> AppResult<Self> {
        let mut c = match &a.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| AppError::io(p, e))?;
                toml::from_str(&text).map_err(|e| AppError::config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {$( if let Some(v) = &a.$f { c.$f = v.clone().into(); } )*};
        }
        take!(alpha, seed, method, model, combiner);
        if a.input.is_some() {
            c.input = a.input.clone();
        }
        if a.null.is_some() {
            c.null = a.null.clone();
        }
        if a.nulls.is_some() {
            c.nulls = a.nulls.clone();
        }
        if a.out.is_some() {
            c.out = a.out.clone();
        }
        if a.hmm_params.is_some() {
            c.hmm_params = a.hmm_params.clone();
        }
        if c.null.is_some() && c.nulls.is_some() {
            return Err(AppError::config("give either a null distribution or a nulls file, not both"));
        }
        if !(c.alpha > 0.0 && c.alpha < 1.0) {
            return Err(AppError::config(format!("alpha must lie in (0, 1), got {}", c.alpha)));
        }
        Ok(c)
    }

    fn model_kind(&self) -> AppResult<ModelKind> {
        match self.model.as_str() {
            "hm" | "hmm" => Ok(ModelKind::Hmm),
            "tg" | "two_group" => Ok(ModelKind::TwoGroup),
            other => Err(AppError::config(format!("unknown model `{other}`; expected hm or tg"))),
        }
    }

    fn combiner(&self) -> AppResult<Combiner> {
        self.combiner.parse().map_err(|e: plis_core::Error| AppError::config(e.to_string()))
    }

    fn f0(&self) -> AppResult<NullDistribution> {
        match &self.null {
            Some(s) => s.parse().map_err(|e: plis_core::Error| AppError::config(e.to_string())),
            None => Ok(NullDistribution::default()),
        }
    }
}

enum Resolved {
    Plis(WorkingModelSpec),
    Registry(Method),
}

fn resolve_method(c: &RunConfig, semi: bool) -> AppResult<Resolved> {
    let kind = c.model_kind()?;
    let (head, opts) = c.method.split_once(':').map_or((c.method.as_str(), ""), |(h, o)| (h, o));
    if head == "plis" && opts.is_empty() {
        let mut spec = WorkingModelSpec::new(kind).with_combiner(c.combiner()?);
        if let Some(p) = &c.hmm_params {
            spec.em.init = Some(io::read_hmm_params(p)?);
            spec.em.tol = f64::INFINITY;
            spec.freeze_known_null = false;
        }
        return Ok(Resolved::Plis(spec));
    }
    let name = match head {
        "plis_cbh" | "plis_sym" | "derand" | "ss_plis" => {
            let tail = if opts.is_empty() { String::new() } else { format!(":{opts}") };
            format!("{head}_{}{tail}", kind.tag())
        }
        _ => c.method.clone(),
    };
    let method: Method = name.parse().map_err(|e: plis_core::Error| AppError::config(e.to_string()))?;
    if semi != method.needs_nulls() {
        let why = if semi { "cannot use a null sample" } else { "needs a null sample (--nulls or a label column)" };
        return Err(AppError::config(format!("method `{method}` {why}")));
    }
    Ok(Resolved::Registry(method))
}

fn rows_from_result(x: Option<&[f64]>, r: &ProcedureResult) -> Vec<OutputRow> {
    (0..r.decisions.len())
        .map(|i| OutputRow {
            index: i + 1,
            x: x.map(|x| x[i]),
            s_x: r.scores.as_ref().map(|s| s.s_x()[i]),
            s_y: r.scores.as_ref().map(|s| s.s_y()[i]),
            q_value: r.q_values.get(i).copied(),
            e_value: r.e_values.get(i).copied(),
            rejected: r.decisions[i],
        })
        .collect()
}

fn emit(c: &RunConfig, rows: &[OutputRow], tau: f64) -> AppResult<()> {
    let k = rows.iter().filter(|r| r.rejected).count();
    let summary = format!("rejections: {k}\ntau: {tau}");
    match &c.out {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| AppError::io(p, e))?;
            io::write_output(std::io::BufWriter::new(f), rows)?;
            println!("{summary}");
        }
        None => {
            io::write_output(std::io::stdout().lock(), rows)?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn cmd_test(a: &TestArgs) -> AppResult<()> {
    let mut c = RunConfig::from_args(a)?;
    if a.print_config {
        if c.nulls.is_none() && c.null.is_none() {
            c.null = Some(NullDistribution::default().to_string());
        }
        print!("{}", toml::to_string(&c).expect("config serializes"));
        return Ok(());
    }
    if let Some(path) = &a.scores {
        let pairs = io::read_score_pairs(path)?;
        let s = ScorePairVector::from_pairs(&pairs)?;
        let d = decide(&s, c.alpha)?;
        let r = ProcedureResult {
            decisions: d.rejected,
            tau: d.tau,
            q_values: d.q_values,
            e_values: d.e_values,
            scores: Some(s),
            diagnostics: Default::default(),
        };
        return emit(&c, &rows_from_result(None, &r), r.tau);
    }
    let input = c.input.as_deref().ok_or_else(|| AppError::config("no input file given"))?;
    let data = io::read_observations(input)?;
    let nulls = match (&c.nulls, data.nulls) {
        (Some(_), Some(_)) => return Err(AppError::config("nulls given both as a file and as a label column")),
        (Some(p), None) => Some(io::read_values(p)?),
        (None, labelled) => labelled,
    };
    if nulls.is_some() && c.null.is_some() {
        return Err(AppError::config("labelled nulls present; drop --null"));
    }
    let f0 = c.f0()?;
    let x = &data.x;
    let (rows, tau) = match resolve_method(&c, nulls.is_some())? {
        Resolved::Plis(spec) => {
            let r = match &nulls {
                Some(u) => procedures::semi_supervised_plis(x, u, &spec, c.alpha, c.seed)?,
                None => procedures::plis(x, &f0, &spec, c.alpha, c.seed)?,
            };
            if r.diagnostics.flagged() {
                eprintln!("warning: working-model fit flagged: {:?}", r.diagnostics);
            }
            (rows_from_result(Some(x), &r), r.tau)
        }
        Resolved::Registry(method) => {
            let out = method.run(&MethodInput { x, f0: &f0, nulls: nulls.as_deref() }, c.alpha, c.seed)?;
            match out.detail {
                Some(r) => (rows_from_result(Some(x), &r), r.tau),
                None => {
                    let rows = (0..x.len())
                        .map(|i| OutputRow {
                            index: i + 1,
                            x: Some(x[i]),
                            s_x: None,
                            s_y: None,
                            q_value: None,
                            e_value: None,
                            rejected: out.decisions[i],
                        })
                        .collect();
                    (rows, f64::NAN)
                }
            }
        }
    };
    emit(&c, &rows, tau)
}

fn cmd_simulate(a: &SimulateArgs) -> AppResult<()> {
    let mut plan = ExperimentPlan::load(&a.plan)?;
    if let Some(r) = a.reps {
        plan = plan.with_reps(r)?;
    }
    if let Some(s) = a.seed {
        plan = plan.with_seed(s)?;
    }
    if a.print_config {
        print!("{}", plan.to_toml());
        return Ok(());
    }
    let out = harness::run_plan(&plan, RunOptions { threads: a.threads, timing: a.timing })?;
    let dir = a.out.clone().or_else(|| plan.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    let (raw, summary) = out.write(&dir)?;
    println!("wrote {} and {}", raw.display(), summary.display());
    let failed = out.wholly_failed();
    if !failed.is_empty() {
        return Err(AppError::Failed(format!("{} (cell, method) pairs failed in every replication: {failed:?}", failed.len())));
    }
    Ok(())
}

fn cmd_accept(a: &AcceptArgs) -> AppResult<()> {
    let outcomes = acceptance::run(&AcceptOptions { reps: a.reps, threads: a.threads }, &a.only, |o| {
        println!("{o}");
        let _ = std::io::stdout().flush();
    })?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(AppError::Failed(format!("{failed} acceptance criteria failed")));
    }
    Ok(())
}

fn cmd_list() {
    println!("methods:");
    for m in method_names() {
        println!("  {m}");
    }
    println!("  derand_hm, derand_tg (options :n=N :ratio=R)");
    println!("bundled plans:");
    for (name, _) in BUNDLED {
        println!("  {name}");
    }
}

pub fn execute(cli: &Cli) -> AppResult<()> {
    match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Accept(a) => cmd_accept(a),
        Command::List => {
            cmd_list();
            Ok(())
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}


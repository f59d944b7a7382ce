//! Command-line interface.
//!
//! Exit codes: 0 when every verdict is as expected, 1 when a property is
//! violated (or no witness exists for `lasso`), 2 for usage, input and
//! resource errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use stabilab_core::analysis::{
    find_synchronous_lasso, lasso_from_schedule, report_from_system, verify_lasso, Limits, StateSpace,
};
use stabilab_core::montecarlo::{Experiment, InitMode, TraceStep, DEFAULT_STEP_CAP};
use stabilab_core::{
    Configuration, FairnessKind, Lasso, SchedulerClass, SchedulerPolicy, ScriptMode, Topology,
};

use crate::error::CliError;
use crate::format;
use crate::instance::{Instance, ProtocolKind};
use crate::parallel;
use crate::report::{self, Report};
use crate::with_protocol;

#[derive(Debug, Parser)]
#[command(name = "stabilab", version, about = "Exhaustive checks and simulations of weak-stabilizing protocols")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weak-stabilization verdict by exhaustive enumeration.
    Check(CheckArgs),
    /// Find and verify a non-converging lasso.
    Lasso(LassoArgs),
    /// Run one trial, optionally printing every step.
    Simulate(SimulateArgs),
    /// Run many seeded trials and report hitting-time statistics.
    Estimate(EstimateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum)]
    pub protocol: ProtocolKind,
    /// Oriented ring of N processes.
    #[arg(long, value_name = "N", group = "topo")]
    pub ring: Option<usize>,
    /// Tree given by edges, e.g. "0-1,1-2,2-3".
    #[arg(long, value_name = "EDGES", group = "topo")]
    pub tree: Option<String>,
    /// TOML topology file.
    #[arg(long, value_name = "FILE", group = "topo")]
    pub topology: Option<PathBuf>,
    /// Apply the coin-toss transformer.
    #[arg(long)]
    pub transform: bool,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Central,
    Distributed,
    Synchronous,
}

impl From<ClassArg> for SchedulerClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Central => SchedulerClass::Central,
            ClassArg::Distributed => SchedulerClass::Distributed,
            ClassArg::Synchronous => SchedulerClass::Synchronous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchedulerArg {
    CentralRr,
    DistributedFull,
    Synchronous,
    RandomizedCentral,
    RandomizedDistributed,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScriptModeArg {
    Fixed,
    Rotating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FairnessArg {
    Weak,
    Strong,
    Gouda,
}

impl From<FairnessArg> for FairnessKind {
    fn from(f: FairnessArg) -> Self {
        match f {
            FairnessArg::Weak => FairnessKind::Weak,
            FairnessArg::Strong => FairnessKind::Strong,
            FairnessArg::Gouda => FairnessKind::Gouda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitModeArg {
    Fixed,
    Uniform,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "distributed")]
    pub class: ClassArg,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_configurations: usize,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_edges: usize,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long, value_enum)]
    pub scheduler: Option<SchedulerArg>,
    /// Inline schedule: steps separated by ';', processes by ','.
    #[arg(long, value_name = "STEPS", conflicts_with = "script_file")]
    pub script: Option<String>,
    /// Schedule file: one step per line, processes comma-separated.
    #[arg(long, value_name = "FILE")]
    pub script_file: Option<PathBuf>,
    /// Rotating shifts entry k by floor(k / len) around the ring. Default:
    /// rotating on rings, fixed elsewhere.
    #[arg(long, value_enum)]
    pub script_mode: Option<ScriptModeArg>,
}

#[derive(Debug, Args)]
pub struct InitArgs {
    /// Initial configuration, e.g. "dt=[0,1,2,0,1,2]", "par=[-1,0,1]",
    /// "B=[false,false];b=[0,0]".
    #[arg(long, value_name = "LITERAL", conflicts_with = "two_token_init")]
    pub init: Option<String>,
    /// Token ring: start with exactly two tokens, at 0 and N/2.
    #[arg(long)]
    pub two_token_init: bool,
}

#[derive(Debug, Args)]
pub struct LassoArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub init: InitArgs,
    #[arg(long, value_enum, default_value = "strong")]
    pub fairness: FairnessArg,
    #[arg(long, default_value_t = 100_000)]
    pub max_steps: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub init: InitArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    pub cap: u64,
    /// Print every step.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub init: InitArgs,
    #[arg(long, value_enum)]
    pub init_mode: Option<InitModeArg>,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    pub cap: u64,
    /// One row per trial: trial, seed, initial, converged, steps, stuck_terminal.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

/// A finished run.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub exit: u8,
}

/// Parses `args` (including the program name), runs the command, emits
/// the report and returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out_path = cli.common().out.clone();
    match run(&cli, out) {
        Ok(outcome) => {
            let emitted = match &out_path {
                Some(path) => outcome.report.write(path),
                None => out.write_all(outcome.report.to_json().as_bytes()).map_err(|e| CliError::io("<stdout>".as_ref(), e)),
            };
            match emitted {
                Ok(()) => outcome.exit,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

impl Cli {
    pub fn common(&self) -> &CommonArgs {
        match &self.command {
            Command::Check(a) => &a.common,
            Command::Lasso(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Estimate(a) => &a.common,
        }
    }
}

/// Runs a parsed command; progress lines go to `out`, the report is
/// returned.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let common = cli.common();
    let topo = topology(common)?;
    let kind = common.protocol;
    match &cli.command {
        Command::Check(args) => with_protocol!(kind, common.transform, &topo, |p| check(p, &topo, common, args, out)),
        Command::Lasso(args) => with_protocol!(kind, common.transform, &topo, |p| lasso(p, &topo, common, args, out)),
        Command::Simulate(args) => {
            with_protocol!(kind, common.transform, &topo, |p| simulate(p, &topo, common, args, out))
        }
        Command::Estimate(args) => {
            with_protocol!(kind, common.transform, &topo, |p| estimate(p, &topo, common, args, out))
        }
    }
}

fn topology(common: &CommonArgs) -> Result<Topology, CliError> {
    if let Some(n) = common.ring {
        return format::ring(n);
    }
    if let Some(edges) = &common.tree {
        return Ok(Topology::tree(&format::parse_edges(edges)?)?);
    }
    if let Some(path) = &common.topology {
        return format::read_topology_file(path);
    }
    if common.protocol == ProtocolKind::TwoFlag {
        return Ok(stabilab_core::TwoFlag::topology());
    }
    Err(CliError::usage("one of --ring, --tree or --topology is required"))
}

fn progress(out: &mut dyn Write, line: impl AsRef<str>) -> Result<(), CliError> {
    writeln!(out, "{}", line.as_ref()).map_err(|e| CliError::io("<stdout>".as_ref(), e))
}

fn spec_echo(command: &str, common: &CommonArgs, topo: &Topology, extra: Value) -> Value {
    let mut spec = json!({
        "command": command,
        "protocol": common.protocol.name(),
        "transform": common.transform,
        "topology": report::topology_json(topo),
    });
    if let (Value::Object(spec), Value::Object(extra)) = (&mut spec, extra) {
        spec.extend(extra);
    }
    spec
}

fn check<P: Instance>(
    p: &P,
    topo: &Topology,
    common: &CommonArgs,
    args: &CheckArgs,
    out: &mut dyn Write,
) -> Result<Outcome, CliError>
where
    P::State: Send + Sync,
{
    let class: SchedulerClass = args.class.into();
    let limits = Limits { max_configurations: args.max_configurations, max_edges: args.max_edges };
    let ts = parallel::enumerate(p, topo, class, limits, parallel::thread_count())?;
    progress(out, format!("enumerated {} configurations, {} edges ({} class)", ts.len(), ts.edge_count(), class.name()))?;
    let analysis = report_from_system(p, topo, &ts)?;
    let (verdicts, witnesses) = report::analysis_json(p, topo, &analysis);
    progress(
        out,
        format!(
            "possible convergence: {}, closure: {}, weak-stabilizing: {}",
            analysis.convergence.holds,
            analysis.closure.holds,
            analysis.weak_stabilizing()
        ),
    )?;
    let spec = spec_echo(
        "check",
        common,
        topo,
        json!({ "class": class.name(), "max_configurations": args.max_configurations, "max_edges": args.max_edges }),
    );
    let exit = if analysis.weak_stabilizing() { 0 } else { 1 };
    Ok(Outcome { report: Report { spec, verdicts, witnesses, stats: Value::Null }, exit })
}

struct Schedule {
    policy: SchedulerPolicy,
    script: Option<Vec<Vec<usize>>>,
}

fn schedule(args: &ScheduleArgs, topo: &Topology, default: SchedulerArg) -> Result<Schedule, CliError> {
    let script = match (&args.script, &args.script_file) {
        (Some(text), _) => Some(format::parse_script(text)?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Some(format::parse_script_file(&text)?)
        }
        (None, None) => None,
    };
    let kind = match (args.scheduler, &script) {
        (None | Some(SchedulerArg::Scripted), Some(_)) => SchedulerArg::Scripted,
        (Some(SchedulerArg::Scripted), None) => {
            return Err(CliError::usage("--scheduler scripted needs --script or --script-file"))
        }
        (Some(other), Some(_)) => {
            return Err(CliError::usage(format!(
                "--script conflicts with --scheduler {}",
                other.to_possible_value().expect("no skipped variants").get_name()
            )))
        }
        (Some(k), None) => k,
        (None, None) => default,
    };
    if args.script_mode.is_some() && script.is_none() {
        return Err(CliError::usage("--script-mode needs a script"));
    }
    let policy = match kind {
        SchedulerArg::CentralRr => SchedulerPolicy::CentralRoundRobin,
        SchedulerArg::DistributedFull => SchedulerPolicy::DistributedFull,
        SchedulerArg::Synchronous => SchedulerPolicy::Synchronous,
        SchedulerArg::RandomizedCentral => SchedulerPolicy::RandomizedCentral,
        SchedulerArg::RandomizedDistributed => SchedulerPolicy::RandomizedDistributed,
        SchedulerArg::Scripted => {
            let steps = script.clone().expect("scripted implies a script");
            if let Some(bad) = steps.iter().flatten().find(|&&q| q >= topo.node_count()) {
                return Err(CliError::usage(format!("--script: process {bad} does not exist")));
            }
            let mode = match args.script_mode {
                Some(ScriptModeArg::Fixed) => ScriptMode::Fixed,
                Some(ScriptModeArg::Rotating) => rotating(topo)?,
                None if topo.is_oriented_ring() => rotating(topo)?,
                None => ScriptMode::Fixed,
            };
            SchedulerPolicy::scripted(steps, mode)?
        }
    };
    Ok(Schedule { policy, script })
}

fn rotating(topo: &Topology) -> Result<ScriptMode, CliError> {
    if !topo.is_oriented_ring() {
        return Err(CliError::usage("--script-mode rotating needs a ring"));
    }
    Ok(ScriptMode::Rotating { ring_size: topo.node_count() })
}

fn schedule_echo(s: &Schedule) -> Value {
    let mode = match &s.policy {
        SchedulerPolicy::Scripted { mode: ScriptMode::Fixed, .. } => Some("fixed"),
        SchedulerPolicy::Scripted { mode: ScriptMode::Rotating { .. }, .. } => Some("rotating"),
        _ => None,
    };
    json!({ "scheduler": s.policy.name(), "script": s.script, "script_mode": mode })
}

fn initial<P: Instance>(p: &P, topo: &Topology, args: &InitArgs) -> Result<Option<Configuration<P::State>>, CliError>
where
    P::State: Send + Sync,
{
    if let Some(literal) = &args.init {
        let cfg = p.parse_config(topo, literal)?;
        stabilab_core::system::validate(p, topo, &cfg)?;
        return Ok(Some(cfg));
    }
    if args.two_token_init {
        if !topo.is_oriented_ring() {
            return Err(CliError::usage("--two-token-init needs a ring"));
        }
        return Ok(Some(p.with_token_holders(topo, &[0, topo.node_count() / 2])?));
    }
    Ok(None)
}

fn merge(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Object(mut a), Value::Object(b)) => {
            a.extend(b);
            Value::Object(a)
        }
        (a, _) => a,
    }
}

fn lasso<P: Instance>(
    p: &P,
    topo: &Topology,
    common: &CommonArgs,
    args: &LassoArgs,
    out: &mut dyn Write,
) -> Result<Outcome, CliError>
where
    P::State: Send + Sync,
{
    if p.is_probabilistic() {
        return Err(CliError::usage("lasso needs a deterministic protocol (drop --transform)"));
    }
    let sched = schedule(&args.schedule, topo, SchedulerArg::Synchronous)?;
    if sched.policy.is_randomized() {
        return Err(CliError::usage("lasso needs a deterministic scheduler"));
    }
    let init = initial(p, topo, &args.init)?;
    let legit = |c: &[P::State]| p.is_legitimate(topo, c);
    let found: Option<Lasso<P::State>> = match (&sched.policy, &init) {
        (SchedulerPolicy::Synchronous, None) => find_synchronous_lasso(p, topo, legit)?,
        (_, Some(cfg)) => lasso_from_schedule(p, topo, cfg, &sched.policy, args.max_steps)?,
        (_, None) => return Err(CliError::usage("this scheduler needs --init or --two-token-init")),
    };
    let requested: FairnessKind = args.fairness.into();
    let mut verdicts = Vec::new();
    if let Some(l) = &found {
        for kind in [FairnessKind::Weak, FairnessKind::Strong, FairnessKind::Gouda] {
            verdicts.push(verify_lasso(l, p, topo, legit, kind)?);
        }
    }
    let chosen = verdicts.iter().find(|v| v.kind == requested);
    let verdict_json = report::lasso_verdicts(found.is_some(), &verdicts, chosen);
    match (&found, chosen) {
        (Some(l), Some(v)) => progress(
            out,
            format!(
                "lasso: prefix {} steps, cycle {} steps; {} fair: {}, avoids legitimate: {}",
                l.prefix.len(),
                l.cycle.len(),
                requested.name(),
                v.fair,
                v.avoids_legitimate
            ),
        )?,
        _ => progress(out, "no lasso found")?,
    }
    let exit = if chosen.is_some_and(|v| v.is_witness()) { 0 } else { 1 };
    let extra = merge(
        schedule_echo(&sched),
        json!({
            "fairness": requested.name(),
            "init": init.as_ref().map(|c| p.render(topo, c)),
            "max_steps": args.max_steps,
        }),
    );
    let witnesses = json!({ "lasso": found.as_ref().map(|l| report::lasso_json(p, topo, l)) });
    Ok(Outcome {
        report: Report { spec: spec_echo("lasso", common, topo, extra), verdicts: verdict_json, witnesses, stats: Value::Null },
        exit,
    })
}

fn simulate<P: Instance>(
    p: &P,
    topo: &Topology,
    common: &CommonArgs,
    args: &SimulateArgs,
    out: &mut dyn Write,
) -> Result<Outcome, CliError>
where
    P::State: Send + Sync,
{
    let sched = schedule(&args.schedule, topo, SchedulerArg::RandomizedDistributed)?;
    let init = match initial(p, topo, &args.init)? {
        Some(cfg) => InitMode::Fixed(cfg),
        None => InitMode::UniformRandom,
    };
    let exp = Experiment {
        protocol: p,
        topo,
        policy: &sched.policy,
        legit: |c: &[P::State]| p.is_legitimate(topo, c),
        step_cap: args.cap,
    };
    let space = StateSpace::new(p, topo)?;
    let mut lines = Vec::new();
    let (outcome, start) = exp.run_trial_with(&space, &init, args.seed, 0, |s: &TraceStep<P::State>| {
        if args.trace {
            let act: Vec<String> = s.activation.pairs().iter().map(|&(q, a)| format!("{q}:{}", p.labels()[a])).collect();
            lines.push(format!("step {}: [{}] -> {}", lines.len() + 1, act.join(","), p.render(topo, &s.after)));
        }
    })?;
    if args.trace {
        progress(out, format!("step 0: {}", p.render(topo, &start)))?;
        for line in lines {
            progress(out, line)?;
        }
    }
    progress(
        out,
        format!(
            "converged: {}, steps: {}{}",
            outcome.converged,
            outcome.steps_taken,
            if outcome.stuck_terminal { " (stuck in a terminal illegitimate configuration)" } else { "" }
        ),
    )?;
    let extra = merge(
        schedule_echo(&sched),
        json!({ "seed": args.seed, "cap": args.cap, "init": p.render(topo, &start) }),
    );
    let verdicts = json!({
        "converged": outcome.converged,
        "steps_to_legitimate": outcome.steps_to_legitimate,
        "steps_taken": outcome.steps_taken,
        "stuck_terminal": outcome.stuck_terminal,
    });
    let stats = report::stats_json(&stabilab_core::montecarlo::TrialStats::from_outcomes(&[outcome]));
    let exit = if outcome.stuck_terminal { 1 } else { 0 };
    Ok(Outcome {
        report: Report { spec: spec_echo("simulate", common, topo, extra), verdicts, witnesses: Value::Null, stats },
        exit,
    })
}

fn estimate<P: Instance>(
    p: &P,
    topo: &Topology,
    common: &CommonArgs,
    args: &EstimateArgs,
    out: &mut dyn Write,
) -> Result<Outcome, CliError>
where
    P::State: Send + Sync,
{
    if args.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let sched = schedule(&args.schedule, topo, SchedulerArg::RandomizedDistributed)?;
    let fixed = initial(p, topo, &args.init)?;
    let init = match (args.init_mode, fixed) {
        (Some(InitModeArg::Uniform), Some(_)) => {
            return Err(CliError::usage("--init-mode uniform conflicts with a fixed initial configuration"))
        }
        (Some(InitModeArg::Fixed), None) => {
            return Err(CliError::usage("--init-mode fixed needs --init or --two-token-init"))
        }
        (_, Some(cfg)) => InitMode::Fixed(cfg),
        (_, None) => InitMode::UniformRandom,
    };
    let exp = Experiment {
        protocol: p,
        topo,
        policy: &sched.policy,
        legit: |c: &[P::State]| p.is_legitimate(topo, c),
        step_cap: args.cap,
    };
    let (outcomes, stats) = parallel::estimate(&exp, &init, args.trials, args.seed, parallel::thread_count())?;
    progress(
        out,
        format!(
            "{} trials: {} converged, rate {}{}",
            stats.trials,
            stats.converged,
            stats.convergence_rate,
            stats.hitting.map(|h| format!(", mean hitting time {:.4} ± {:.4}", h.mean, h.ci95_half_width)).unwrap_or_default()
        ),
    )?;
    if let Some(path) = &args.csv {
        report::write_csv(path, &outcomes)?;
    }
    let (init_mode, init_json) = match &init {
        InitMode::Fixed(cfg) => ("fixed", p.render(topo, cfg)),
        InitMode::UniformRandom => ("uniform", Value::Null),
    };
    let extra = merge(
        schedule_echo(&sched),
        json!({
            "seed": args.seed,
            "trials": args.trials,
            "cap": args.cap,
            "init_mode": init_mode,
            "init": init_json,
        }),
    );
    let verdicts = json!({
        "all_converged": stats.converged == stats.trials,
        "stuck_terminal": stats.stuck_terminal > 0,
    });
    let exit = if stats.stuck_terminal > 0 { 1 } else { 0 };
    Ok(Outcome {
        report: Report {
            spec: spec_echo("estimate", common, topo, extra),
            verdicts,
            witnesses: Value::Null,
            stats: report::stats_json(&stats),
        },
        exit,
    })
}

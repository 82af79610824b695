use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use flakilab::experiment::{self, ExperimentConfig, ExperimentKind, SimMode, SweepConfig};
use flakilab::fl::OchiaiMode;
use flakilab::{Direction, Error, Scope};

/// Flaky-test impact experiments on mutation testing, fault localization
/// and program repair.
#[derive(Parser)]
#[command(name = "flakilab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run(Opts),
    /// Simulated mutation scores over a flake-probability grid.
    MutationSweep(Opts),
    /// Mutation score inflation on random sub-suites.
    SampledSuites(Opts),
    /// Closed-form patch survival for a repair scenario.
    RepairAnalytic(Opts),
    /// Simulated repair campaigns, targeted vs non-targeted.
    RepairSim(Opts),
    /// Ochiai fault localization on a (flaky) run.
    FlLocalize(Opts),
    /// Robustness of the suspicious-statement selection over a grid.
    FlRobustnessSweep(Opts),
    /// Inject flakiness into a JUnit report.
    FlakeReport(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    PassToFail,
    FailToPass,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum OchiaiArg {
    Standard,
    CoveredPlusFailing,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Compare,
    Targeted,
    NonTargeted,
}

#[derive(Args)]
struct Opts {
    /// Config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed; drawn at random (and printed) when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Long-form CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Flaked JUnit report path (flake-report).
    #[arg(long)]
    xml: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,

    /// Kill or coverage matrix CSV.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Repair scenario JSON.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// JUnit XML report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Synthetic program JSON.
    #[arg(long)]
    fixture: Option<PathBuf>,

    /// Uniform flake probability.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    /// all, failing-groups, group:A,B or test:X,Y
    #[arg(long, value_parser = parse_scope)]
    scope: Option<Scope>,
    #[arg(long)]
    p_start: Option<f64>,
    #[arg(long)]
    p_end: Option<f64>,
    #[arg(long)]
    p_step: Option<f64>,

    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    ochiai: Option<OchiaiArg>,
    #[arg(long)]
    n_suites: Option<usize>,
    #[arg(long)]
    size_min: Option<f64>,
    #[arg(long)]
    size_max: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

fn parse_scope(s: &str) -> Result<Scope, String> {
    let list = |v: &str| v.split(',').map(str::to_owned).collect::<Vec<_>>();
    match s {
        "all" => Ok(Scope::All),
        "failing-groups" => Ok(Scope::FailingGroups),
        _ => match s.split_once(':') {
            Some(("group", v)) => Ok(Scope::Groups(list(v))),
            Some(("test", v)) => Ok(Scope::Tests(list(v))),
            _ => Err(format!("unknown scope `{s}`")),
        },
    }
}

fn build_config(kind: Option<ExperimentKind>, o: Opts) -> Result<ExperimentConfig, Error> {
    let mut c = match (&o.config, kind) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(kind)) => ExperimentConfig::new(kind),
        (None, None) => return Err(Error::InvalidArgument("`run` needs --config".into())),
    };
    if let Some(kind) = kind {
        if c.experiment != kind {
            return Err(Error::InvalidArgument(format!(
                "config describes `{}`, not `{}`",
                c.experiment.name(),
                kind.name()
            )));
        }
    }
    fn set<T>(slot: &mut T, value: Option<T>) {
        if let Some(v) = value {
            *slot = v;
        }
    }
    fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
        if value.is_some() {
            *slot = value;
        }
    }
    set_opt(&mut c.seed, o.seed);
    set_opt(&mut c.replicates, o.replicates);
    set_opt(&mut c.outputs.json, o.out);
    set_opt(&mut c.outputs.csv, o.csv);
    set_opt(&mut c.outputs.xml, o.xml);
    set_opt(&mut c.params.jobs, o.jobs);
    set_opt(&mut c.inputs.matrix, o.matrix);
    set_opt(&mut c.inputs.scenario, o.scenario);
    set_opt(&mut c.inputs.report, o.report);
    set_opt(&mut c.inputs.fixture, o.fixture);
    if o.p.is_some() {
        c.flakiness.p = o.p;
        c.flakiness.per_test = None;
    }
    set(
        &mut c.flakiness.direction,
        o.direction.map(|d| match d {
            DirectionArg::PassToFail => Direction::PassToFail,
            DirectionArg::FailToPass => Direction::FailToPass,
            DirectionArg::Both => Direction::Both,
        }),
    );
    set(&mut c.flakiness.scope, o.scope);
    if o.p_start.is_some() || o.p_end.is_some() || o.p_step.is_some() {
        let mut s = c.sweep.unwrap_or_default();
        set(&mut s.p_start, o.p_start);
        set(&mut s.p_end, o.p_end);
        set(&mut s.p_step, o.p_step);
        c.sweep = Some(SweepConfig { ..s });
    }
    set(&mut c.params.threshold, o.threshold);
    set(
        &mut c.params.ochiai,
        o.ochiai.map(|m| match m {
            OchiaiArg::Standard => OchiaiMode::Standard,
            OchiaiArg::CoveredPlusFailing => OchiaiMode::CoveredPlusFailing,
        }),
    );
    set(&mut c.params.n_suites, o.n_suites);
    set(&mut c.params.size_min, o.size_min);
    set(&mut c.params.size_max, o.size_max);
    set(&mut c.params.budget, o.budget);
    set(&mut c.params.population, o.population);
    set(
        &mut c.params.mode,
        o.mode.map(|m| match m {
            ModeArg::Compare => SimMode::Compare,
            ModeArg::Targeted => SimMode::Targeted,
            ModeArg::NonTargeted => SimMode::NonTargeted,
        }),
    );
    Ok(c)
}

fn execute(kind: Option<ExperimentKind>, opts: Opts) -> Result<(), Error> {
    let mut config = build_config(kind, opts)?;
    let seed = *config.seed.get_or_insert_with(|| rand::rng().random());
    eprintln!("seed: {seed}");
    let output = experiment::run(&config)?;
    experiment::write_outputs(&config, &output)?;
    if config.outputs.json.is_none() {
        let json = flakilab::report_io::emit_report_json(&output.report)?;
        print!("{}", String::from_utf8_lossy(&json));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, opts) = match cli.command {
        Command::Run(o) => (None, o),
        Command::MutationSweep(o) => (Some(ExperimentKind::MutationSweep), o),
        Command::SampledSuites(o) => (Some(ExperimentKind::SampledSuites), o),
        Command::RepairAnalytic(o) => (Some(ExperimentKind::RepairAnalytic), o),
        Command::RepairSim(o) => (Some(ExperimentKind::RepairSim), o),
        Command::FlLocalize(o) => (Some(ExperimentKind::FlLocalize), o),
        Command::FlRobustnessSweep(o) => (Some(ExperimentKind::FlRobustnessSweep), o),
        Command::FlakeReport(o) => (Some(ExperimentKind::FlakeReport), o),
    };
    match execute(kind, opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}

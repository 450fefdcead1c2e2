//! `dormhgt` command-line interface.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use dormhgt::branching::{self, McOptions, Mutant};
use dormhgt::experiments::{self, Direction};
use dormhgt::ode::{self, ConvergeOptions, OdeOptions, System};
use dormhgt::regime::{self, Axis, Regime};
use dormhgt::ssa::{self, Counts, Generator, StopRule};
use dormhgt::stability;
use dormhgt::{Density, Error, Params};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::{BranchingConfig, InvadeConfig, MapConfig, OdeConfig, RunConfig, SsaConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// The analysis does not apply to these parameters.
    #[error("{0}")]
    Inapplicable(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::InvalidState(_) => CliError::Usage(e.to_string()),
            Error::Integration(_) | Error::NoConvergence(_) => CliError::Usage(e.to_string()),
            _ => CliError::Inapplicable(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "dormhgt", version, about = "Dormancy versus horizontal transfer in competing populations")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    #[arg(long, global = true)]
    lambda1: Option<f64>,
    #[arg(long, global = true)]
    lambda2: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long = "C", global = true)]
    competition: Option<f64>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    kappa: Option<f64>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    tau: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equilibria, stability, regime and invasion fitnesses.
    Classify,
    /// Integrate the mean-field system.
    Ode {
        #[arg(long, value_parser = parse_system)]
        system: Option<System>,
        /// Comma-separated initial state.
        #[arg(long, value_delimiter = ',')]
        init: Option<Vec<f64>>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Run to an equilibrium and report which one.
        #[arg(long)]
        converge: bool,
    },
    /// One stochastic trajectory.
    Ssa {
        #[arg(long = "K")]
        capacity: Option<u64>,
        /// Initial counts as active,dormant,trait2.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        init: Option<Vec<u64>>,
        /// Initial densities, scaled by K.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        init_scaled: Option<Vec<f64>>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        event_cap: Option<u64>,
        /// Write the sampled path as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Invasion trials of a single mutant.
    Invade {
        #[arg(long, value_parser = parse_direction)]
        direction: Option<Direction>,
        /// Comma-separated carrying capacities.
        #[arg(long = "K", value_delimiter = ',')]
        capacities: Option<Vec<u64>>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        event_cap: Option<u64>,
        /// Write the summary table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write one CSV row per trial.
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Regime labels over a (lambda1, lambda2) grid, as CSV.
    RegimeMap {
        /// Grid for lambda1 as min,max,points.
        #[arg(long = "lambda1-range", value_parser = parse_axis)]
        lambda1_range: Option<Axis>,
        /// Grid for lambda2 as min,max,points.
        #[arg(long = "lambda2-range", value_parser = parse_axis)]
        lambda2_range: Option<Axis>,
    },
    /// Invasion fitnesses, extinction probabilities and type proportions.
    Branching {
        /// Check extinction probabilities with this many simulated lineages.
        #[arg(long)]
        verify_mc: Option<u64>,
        #[arg(long)]
        survival_threshold: Option<u64>,
    },
}

fn parse_system(s: &str) -> Result<System, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown system `{s}` (full, p0, tau0, reduced)"))
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown direction `{s}` (2into1, 1into2)"))
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected min,max,points".into());
    }
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| e.to_string());
    let points = parts[2].trim().parse::<usize>().map_err(|e| e.to_string())?;
    Ok(Axis {
        min: num(parts[0])?,
        max: num(parts[1])?,
        points,
    })
}

fn merge_model(base: Option<Params>, a: &ModelArgs) -> Result<Params, CliError> {
    let flags = [
        a.lambda1,
        a.lambda2,
        a.mu,
        a.competition,
        a.p,
        a.kappa,
        a.sigma,
        a.tau,
    ];
    let p = match base {
        Some(b) => Params {
            birth1: a.lambda1.unwrap_or(b.birth1),
            birth2: a.lambda2.unwrap_or(b.birth2),
            death: a.mu.unwrap_or(b.death),
            competition: a.competition.unwrap_or(b.competition),
            dormancy: a.p.unwrap_or(b.dormancy),
            dormant_death: a.kappa.unwrap_or(b.dormant_death),
            resuscitation: a.sigma.unwrap_or(b.resuscitation),
            transfer: a.tau.unwrap_or(b.transfer),
        },
        None => {
            if flags.iter().any(Option::is_none) {
                return Err(CliError::Usage(
                    "model parameters missing: give a config with a `model` block or all of \
                     --lambda1 --lambda2 --mu --C --p --kappa --sigma --tau"
                        .into(),
                ));
            }
            let v: Vec<f64> = flags.iter().map(|x| x.unwrap()).collect();
            Params {
                birth1: v[0],
                birth2: v[1],
                death: v[2],
                competition: v[3],
                dormancy: v[4],
                dormant_death: v[5],
                resuscitation: v[6],
                transfer: v[7],
            }
        }
    };
    p.validate()?;
    Ok(p)
}

struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    fn write(&self, text: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => write_file(path, text),
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ClassifyReport<'a> {
    config: &'a RunConfig,
    regime: Regime,
    chain: Option<dormhgt::Chain>,
    equilibria: dormhgt::model::EquilibriumReport,
    stability: Option<stability::StabilityReport>,
    fitness: branching::FitnessReport,
}

fn classify(cfg: &RunConfig, p: &Params, sink: &Sink) -> Result<bool, CliError> {
    let reg = regime::regime(p);
    let report = ClassifyReport {
        config: cfg,
        regime: reg,
        chain: p.chain().ok(),
        equilibria: p.equilibrium_report(),
        stability: stability::classify_equilibria(p).ok(),
        fitness: branching::fitness_report(p),
    };
    sink.write(&json(&report))?;
    Ok(matches!(reg, Regime::Boundary | Regime::ResidentUnfit))
}

#[derive(Serialize)]
struct ConvergeReport<'a> {
    config: &'a RunConfig,
    outcome: ode::ConvergeOutcome,
}

fn run_ode(cfg: &RunConfig, p: &Params, oc: &OdeConfig, sink: &Sink) -> Result<bool, CliError> {
    let init = oc.init.clone().expect("resolved");
    let opts = OdeOptions {
        rtol: oc.rtol,
        atol: oc.atol,
        ..OdeOptions::default()
    };
    if oc.converge {
        let outcome = ode::converge(
            p,
            oc.system,
            &init,
            ConvergeOptions {
                t_cap: oc.t_cap,
                match_tol: oc.match_tol,
                ..ConvergeOptions::default()
            },
            opts,
        )?;
        sink.write(&json(&ConvergeReport { config: cfg, outcome }))?;
        return Ok(false);
    }
    let tr = ode::integrate(p, oc.system, &init, oc.t_end, oc.dt, opts)?;
    sink.write(&output::ode_csv(&tr))?;
    Ok(false)
}

#[derive(Serialize)]
struct SsaReport<'a> {
    config: &'a RunConfig,
    outcome: ssa::Outcome,
}

fn run_ssa(cfg: &RunConfig, p: &Params, sc: &SsaConfig, traj: Option<&Path>, sink: &Sink) -> Result<bool, CliError> {
    let gen = Generator::new(p, sc.capacity)?;
    let [a, d, n2] = sc.init.expect("resolved");
    let rule = StopRule {
        time_cap: Some(sc.t_end),
        event_cap: sc.event_cap,
        ..StopRule::default()
    };
    let seed = cfg.seed.unwrap_or(0);
    let (outcome, path) = ssa::run(
        &gen,
        Counts::new(a, d, n2),
        &rule,
        Some(sc.dt),
        &mut dormhgt::rng::seeded(seed),
    );
    if let (Some(t), Some(path)) = (traj, path) {
        write_file(t, &output::ssa_csv(&path))?;
    }
    sink.write(&json(&SsaReport { config: cfg, outcome }))?;
    Ok(false)
}

#[derive(Serialize)]
struct InvadeReport<'a> {
    config: &'a RunConfig,
    summary: experiments::StudySummary,
}

fn run_invade(
    cfg: &RunConfig,
    p: &Params,
    ic: &InvadeConfig,
    csv: Option<&Path>,
    raw: Option<&Path>,
    sink: &Sink,
) -> Result<bool, CliError> {
    let seed = cfg.seed.unwrap_or(0);
    let (summary, records) = experiments::invasion_study(
        p,
        &ic.capacities,
        ic.trials,
        ic.direction,
        ic.beta,
        seed,
        ic.event_cap,
    )?;
    if let Some(path) = csv {
        write_file(path, &output::summary_csv(&summary))?;
    }
    if let Some(path) = raw {
        write_file(path, &output::trials_csv(&summary, &records))?;
    }
    sink.write(&json(&InvadeReport { config: cfg, summary }))?;
    Ok(false)
}

fn run_map(p: &Params, mc: &MapConfig, sink: &Sink) -> Result<bool, CliError> {
    for axis in [mc.lambda1, mc.lambda2] {
        if axis.points == 0 || !(axis.min > 0.0) || axis.max < axis.min {
            return Err(CliError::Usage("axis needs 0 < min <= max and points >= 1".into()));
        }
    }
    let cells = regime::regime_map(p, mc.lambda1, mc.lambda2);
    sink.write(&output::map_csv(&cells))?;
    Ok(false)
}

#[derive(Serialize)]
struct BranchingReport<'a> {
    config: &'a RunConfig,
    fitness: branching::FitnessReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_trait2: Option<branching::McEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_trait1: Option<branching::McEstimate>,
}

fn run_branching(cfg: &RunConfig, p: &Params, bc: &BranchingConfig, sink: &Sink) -> Result<bool, CliError> {
    let fitness = branching::fitness_report(p);
    let seed = cfg.seed.unwrap_or(0);
    let opts = McOptions {
        trials: bc.verify_mc,
        survival_threshold: bc.survival_threshold,
        event_cap: bc.event_cap,
    };
    let (mut mc_trait2, mut mc_trait1) = (None, None);
    if bc.verify_mc > 0 {
        if fitness.extinction2.is_some() {
            mc_trait2 = Some(branching::extinction_mc(p, Mutant::Trait2, &opts, seed)?);
        }
        if fitness.extinction1.is_some() {
            mc_trait1 = Some(branching::extinction_mc(p, Mutant::Trait1, &opts, seed)?);
        }
    }
    let inapplicable = !fitness.notes.is_empty();
    sink.write(&json(&BranchingReport {
        config: cfg,
        fitness,
        mc_trait2,
        mc_trait1,
    }))?;
    Ok(inapplicable)
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    let mut model = cli.model;
    if let Command::RegimeMap { .. } = cli.command {
        // the birth rates are swept, so any placeholder will do
        model.lambda1 = model.lambda1.or(Some(1.0));
        model.lambda2 = model.lambda2.or(Some(1.0));
    }
    let p = merge_model(cfg.model, &model)?;
    cfg.model = Some(p);
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let sink = Sink { out: cli.out.clone() };
    match cli.command {
        Command::Classify => classify(&cfg, &p, &sink),
        Command::Ode {
            system,
            init,
            t_end,
            dt,
            converge,
        } => {
            let mut oc = cfg.ode.clone().unwrap_or_default();
            if let Some(s) = system {
                oc.system = s;
            }
            if init.is_some() {
                oc.init = init;
            }
            if let Some(v) = t_end {
                oc.t_end = v;
            }
            if let Some(v) = dt {
                oc.dt = v;
            }
            oc.converge |= converge;
            let dim = oc.system.dim();
            let init = oc.init.get_or_insert_with(|| vec![0.1; dim]);
            if init.len() != dim {
                return Err(CliError::Usage(format!("--init needs {dim} values for this system")));
            }
            cfg.ode = Some(oc.clone());
            run_ode(&cfg, &p, &oc, &sink)
        }
        Command::Ssa {
            capacity,
            init,
            init_scaled,
            t_end,
            dt,
            event_cap,
            trajectory,
        } => {
            let mut sc = cfg.ssa.clone().unwrap_or_default();
            if let Some(k) = capacity {
                sc.capacity = k;
            }
            if let Some(v) = init {
                let a: [u64; 3] = v
                    .try_into()
                    .map_err(|_| CliError::Usage("--init needs three counts".into()))?;
                sc.init = Some(a);
                sc.init_scaled = None;
            }
            if let Some(v) = init_scaled {
                let a: [f64; 3] = v
                    .try_into()
                    .map_err(|_| CliError::Usage("--init-scaled needs three values".into()))?;
                sc.init_scaled = Some(a);
                sc.init = None;
            }
            if let Some(v) = t_end {
                sc.t_end = v;
            }
            if let Some(v) = dt {
                sc.dt = v;
            }
            if let Some(v) = event_cap {
                sc.event_cap = v;
            }
            if sc.init.is_none() {
                let x = sc
                    .init_scaled
                    .map(Density::from_array)
                    .unwrap_or_else(|| Density::new(0.1, 0.1, 0.1));
                let c = Counts::scaled_from(&x, sc.capacity);
                sc.init = Some([c.active, c.dormant, c.trait2]);
                sc.init_scaled = None;
            }
            if !(sc.t_end >= 0.0 && sc.dt > 0.0) {
                return Err(CliError::Usage("need t_end >= 0 and dt > 0".into()));
            }
            cfg.ssa = Some(sc.clone());
            run_ssa(&cfg, &p, &sc, trajectory.as_deref(), &sink)
        }
        Command::Invade {
            direction,
            capacities,
            trials,
            beta,
            event_cap,
            csv,
            raw,
        } => {
            let mut ic = cfg.invade.clone().unwrap_or_default();
            if let Some(d) = direction {
                ic.direction = d;
            }
            if let Some(k) = capacities {
                ic.capacities = k;
            }
            if let Some(v) = trials {
                ic.trials = v;
            }
            if let Some(v) = beta {
                ic.beta = v;
            }
            if let Some(v) = event_cap {
                ic.event_cap = v;
            }
            cfg.invade = Some(ic.clone());
            run_invade(&cfg, &p, &ic, csv.as_deref(), raw.as_deref(), &sink)
        }
        Command::RegimeMap {
            lambda1_range,
            lambda2_range,
        } => {
            let mut mc = cfg.regime_map.clone().unwrap_or_default();
            if let Some(a) = lambda1_range {
                mc.lambda1 = a;
            }
            if let Some(a) = lambda2_range {
                mc.lambda2 = a;
            }
            cfg.regime_map = Some(mc.clone());
            run_map(&p, &mc, &sink)
        }
        Command::Branching {
            verify_mc,
            survival_threshold,
        } => {
            let mut bc = cfg.branching.clone().unwrap_or_default();
            if let Some(v) = verify_mc {
                bc.verify_mc = v;
            }
            if let Some(v) = survival_threshold {
                bc.survival_threshold = v;
            }
            cfg.branching = Some(bc.clone());
            run_branching(&cfg, &p, &bc, &sink)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(CliError::Inapplicable(msg)) => {
            eprintln!("dormhgt: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("dormhgt: {e}");
            ExitCode::from(1)
        }
    }
}

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crashclique::adversary::{AdversarySpec, LowerBound};
use crashclique::covering::{
    certify_load_balance, generate_with_retry, verify_size_bounds, CoveringFamily, FamilyError,
};
use crashclique::harness::{
    family_params, run_scenario, run_tc, scaling_sweep, sim_growth, write_iterations_csv,
    write_metrics_csv, ConfigError, Experiment, HarnessError, Scenario,
};
use crashclique::net::{Network, SimConfig};
use crashclique::sim::{algorithm_by_name, simulate, SimParams};

#[derive(Parser)]
#[command(
    name = "crashclique",
    version,
    about = "Crash-resilient task completion and simulation in the congested clique"
)]
struct Cli {
    /// Print every scenario key with its default and exit.
    #[arg(long, global = true)]
    explain: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or verify a covering family.
    #[command(subcommand)]
    Family(FamilyCommand),
    /// Run task completion and print one CSV row per iteration.
    RunTc(Common),
    /// Run the robust simulation and print one CSV row per phase.
    RunSim(Common),
    /// Run task completion against the lower-bound adversary.
    Lowerbound(Common),
    /// Scale `n` over powers of two and report rounds / log2 n.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated powers of two.
        #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
        ns: Vec<usize>,
        /// Also fit simulation rounds over these values of T.
        #[arg(long, value_delimiter = ',')]
        ts: Vec<usize>,
    },
    /// Run a scenario file and print its metrics rows.
    Scenario {
        file: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FamilyCommand {
    /// Write a covering family.
    Gen {
        #[command(flatten)]
        common: Box<Common>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check size bounds and load balance of a family file.
    Verify {
        file: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, env = "CRASHCLIQUE_SEED", default_value_t = 1)]
        seed: u64,
    },
}

/// Scenario keys settable from the command line.
#[derive(Args, Clone)]
struct Common {
    /// Scenario file used as the base.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Total number of tasks.
    #[arg(short = 'M', long = "tasks")]
    tasks: Option<usize>,
    /// Tasks per batch.
    #[arg(long)]
    batch: Option<usize>,
    /// Rounds per task.
    #[arg(short = 'R', long = "task-rounds", visible_alias = "R")]
    r: Option<u64>,
    /// Simulated rounds.
    #[arg(short = 'T', long = "sim-rounds", visible_alias = "T")]
    t: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(short = 'B', long = "load", visible_alias = "B")]
    b: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(short = 'k', long)]
    k: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    compact: bool,
    #[arg(long, env = "CRASHCLIQUE_SEED")]
    seed: Option<u64>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the per-round message and crash traces into this directory.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
}

impl Common {
    fn scenario(&self, experiment: Experiment) -> Result<Scenario, HarnessError> {
        let mut s = match &self.scenario {
            Some(path) => Scenario::parse(&read(path)?)?,
            None => Scenario {
                name: experiment.as_str().into(),
                ..Scenario::default()
            },
        };
        s.experiment = experiment;
        let mut set = |key: &str, value: Option<String>| -> Result<(), HarnessError> {
            if let Some(v) = value {
                s.set(key, &v).map_err(|msg| ConfigError {
                    line: 0,
                    field: key.into(),
                    msg,
                })?;
            }
            Ok(())
        };
        set("n", self.n.map(|v| v.to_string()))?;
        set("M", self.tasks.map(|v| v.to_string()))?;
        set("batch", self.batch.map(|v| v.to_string()))?;
        set("R", self.r.map(|v| v.to_string()))?;
        set("T", self.t.map(|v| v.to_string()))?;
        set("alpha", self.alpha.map(|v| v.to_string()))?;
        set("B", self.b.map(|v| v.to_string()))?;
        set("epsilon", self.epsilon.map(|v| v.to_string()))?;
        set("k", self.k.map(|v| v.to_string()))?;
        set("mode", self.mode.clone())?;
        set("adversary", self.adversary.clone())?;
        set("algo", self.algo.clone())?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        if self.compact {
            s.compact = true;
        }
        if self.tasks.is_none() && self.scenario.is_none() {
            s.tasks = s.n;
        }
        s.validate()?;
        Ok(s)
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match path {
        Some(p) => Box::new(
            File::create(p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.explain || cli.command.is_none() {
        print!("{}", Scenario::explain());
        return ExitCode::SUCCESS;
    }
    match run(cli.command.unwrap()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Family(FamilyCommand::Gen { common, out }) => {
            let s = common.scenario(Experiment::FamilyGen)?;
            eprintln!("{}", s.banner());
            let family = generate_with_retry(family_params(&s), 16)?;
            let report = verify_size_bounds(&family);
            eprintln!(
                "# sets={} size_bounds=[{}, {}] violations={}",
                family.len(),
                report.lower,
                report.upper,
                report.violations.len()
            );
            family.write_to(output(&out)?).map_err(io_err)?;
        }
        Command::Family(FamilyCommand::Verify {
            file,
            k,
            samples,
            seed,
        }) => {
            let f = File::open(&file)
                .map_err(|e| HarnessError::Io(format!("{}: {e}", file.display())))?;
            let family = CoveringFamily::read_from(BufReader::new(f))?;
            let k = k.unwrap_or(family.params().k);
            eprintln!(
                "# crashclique family-verify file={} k={k} samples={samples} seed={seed}",
                file.display()
            );
            let sizes = verify_size_bounds(&family);
            let cert = certify_load_balance(&family, k, samples, seed)?;
            println!(
                "sizes: [{}, {}] violations={}",
                sizes.lower,
                sizes.upper,
                sizes.violations.len()
            );
            println!("{cert}");
            if !sizes.passed() {
                return Err(HarnessError::Family(FamilyError::InvalidParams(format!(
                    "{} sets outside the size bounds",
                    sizes.violations.len()
                ))));
            }
            if !cert.passed() {
                return Err(HarnessError::Invariant("load balance not certified".into()));
            }
        }
        Command::RunTc(common) => run_tc_command(common, Experiment::RunTc)?,
        Command::Lowerbound(common) => run_tc_command(common, Experiment::LowerBound)?,
        Command::RunSim(common) => {
            let s = common.scenario(Experiment::RunSim)?;
            eprintln!("{}", s.banner());
            let alg = algorithm_by_name(&s.algo, (s.t > 0).then_some(s.t)).expect("validated");
            let mut net = Network::new(SimConfig::new(s.n, s.alpha).with_seed(s.seed))?;
            if common.trace_dir.is_some() {
                net.record_trace();
            }
            let mut adv = s.adversary.build(s.n, s.alpha, s.seed);
            let mut params = SimParams::new(s.alpha, s.seed);
            params.b = s.b;
            if s.epsilon > 0.0 {
                params.epsilon = s.epsilon;
            }
            params.compact = s.compact;
            let out = simulate(&mut net, &mut adv, alg.as_ref(), &params)?;
            let mut w = csv::Writer::from_writer(output(&common.csv)?);
            w.write_record(["r", "phase", "rounds", "crashes"])
                .map_err(io_err)?;
            for p in &out.phases {
                w.write_record([
                    p.round.to_string(),
                    p.phase.as_str().into(),
                    p.rounds.to_string(),
                    p.crashes.to_string(),
                ])
                .map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
            write_traces(&common.trace_dir, &mut net)?;
            eprintln!(
                "# rounds={} crashes={} matches_reference={}",
                out.rounds,
                net.crashes(),
                out.matches_reference()
            );
            if !out.matches_reference() || !out.phases_ok() {
                return Err(HarnessError::Invariant(
                    "simulated outputs differ from the fault-free run".into(),
                ));
            }
        }
        Command::Sweep { common, ns, ts } => {
            let experiment = if common.algo.is_some() || !ts.is_empty() {
                Experiment::RunSim
            } else {
                Experiment::RunTc
            };
            let s = common.scenario(experiment)?;
            eprintln!("{}", s.banner());
            let report = scaling_sweep(&s, &ns)?;
            let mut w = csv::Writer::from_writer(output(&common.csv)?);
            for row in &report.rows {
                w.serialize(row).map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
            for (n, ratio) in &report.worst {
                eprintln!("# n={n} worst rounds/log2(n)={ratio:.2}");
            }
            eprintln!("# spread={:.3}", report.spread);
            if !ts.is_empty() {
                let fit = sim_growth(&s, &ts)?;
                eprintln!(
                    "# T fit at n={}: c1={:.3} c2={:.3} worst_factor={:.3} points={:?}",
                    fit.n, fit.c1, fit.c2, fit.worst_factor, fit.points
                );
            }
        }
        Command::Scenario { file, csv } => {
            let mut s = Scenario::parse(&read(&file)?)?;
            if let Ok(seed) = std::env::var("CRASHCLIQUE_SEED") {
                s.set("seed", &seed).map_err(|msg| ConfigError {
                    line: 0,
                    field: "CRASHCLIQUE_SEED".into(),
                    msg,
                })?;
            }
            eprintln!("{}", s.banner());
            let rows = run_scenario(&s)?;
            write_metrics_csv(&rows, output(&csv)?).map_err(io_err)?;
        }
    }
    Ok(())
}

fn run_tc_command(common: Common, experiment: Experiment) -> Result<(), HarnessError> {
    let mut s = common.scenario(experiment)?;
    if experiment == Experiment::LowerBound {
        s.adversary = AdversarySpec::LowerBound;
        s.r = 1;
        s.tasks = s.n;
    }
    eprintln!("{}", s.banner());
    let run = run_tc(&s, common.trace_dir.is_some())?;
    write_iterations_csv(run.outcome.iterations(), output(&common.csv)?).map_err(io_err)?;
    if let Some(dir) = &common.trace_dir {
        std::fs::create_dir_all(dir).map_err(io_err)?;
        std::fs::write(
            dir.join("messages.csv"),
            run.messages_csv.as_deref().unwrap_or(""),
        )
        .map_err(io_err)?;
        std::fs::write(
            dir.join("crashes.csv"),
            run.crashes_csv.as_deref().unwrap_or(""),
        )
        .map_err(io_err)?;
    }
    if let Some(steps) = &run.lower_bound {
        for st in steps {
            eprintln!(
                "# step={} round={} kept={} previous={} target={} max_attempts={} attempt_bound={} crashed={}",
                st.step,
                st.round,
                st.kept,
                st.previous,
                LowerBound::target_size(s.n, s.alpha, st.step),
                st.max_attempts,
                st.attempt_bound,
                st.crashed
            );
        }
    }
    eprintln!(
        "# rounds={} crashes={} iterations={} verified={} digest={:016x}",
        run.metrics.rounds,
        run.metrics.crashes,
        run.outcome.iteration_count(),
        run.outcome.all_verified(),
        run.digest
    );
    if !run.invariants_hold() {
        return Err(HarnessError::Invariant(
            "task-completion ledger check failed".into(),
        ));
    }
    Ok(())
}

fn write_traces(dir: &Option<PathBuf>, net: &mut Network) -> Result<(), HarnessError> {
    if let (Some(dir), Some(t)) = (dir, net.take_trace()) {
        std::fs::create_dir_all(dir).map_err(io_err)?;
        std::fs::write(dir.join("messages.csv"), t.messages_csv()).map_err(io_err)?;
        std::fs::write(dir.join("crashes.csv"), t.crashes_csv()).map_err(io_err)?;
    }
    Ok(())
}

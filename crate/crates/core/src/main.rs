use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use msplace::exact::{brute_force_oracle, solve_exact, SolveStatus, DEFAULT_TIME_LIMIT_S};
use msplace::generate::{
    aggregate, gen_5gc_workload, gen_farm, gen_random_procedure, FarmConfig, FarmDemand,
    Homogeneity, NfGrouping, RandomGraphConfig,
};
use msplace::harness::{
    architectures, run_arch_compare, run_cost_gap, run_utilization, workload_farm,
    ArchCompareConfig, CostGapConfig, UtilizationConfig, NON_HOMOGENEOUS_HEADROOM,
};
use msplace::mm::{map_all, Trace};
use msplace::scenario::{AssignmentFile, Scenario};
use msplace::{check_constraints, Error, Violation, Workload};

/// Placement of control-plane microservice graphs onto server farms.
#[derive(Parser)]
#[command(name = "msplace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write the assignment.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Solver::Mm)]
        solver: Solver,
        #[arg(long)]
        out: PathBuf,
        /// Line-delimited JSON log of the heuristic's steps.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TIME_LIMIT_S)]
        time_limit_s: f64,
    },
    /// Check an assignment against every constraint of a scenario.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        assignment: PathBuf,
    },
    /// Write a generated scenario.
    Generate {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Random kind: number of MSs.
        #[arg(long, default_value_t = 8)]
        ms_count: usize,
        /// Random kind: edge probability.
        #[arg(long, default_value_t = 0.75)]
        pi: f64,
        /// Random kind: servers per MS instance.
        #[arg(long, default_value_t = 0.75)]
        sigma: f64,
        #[arg(long, default_value = "homogeneous")]
        homogeneity: String,
        /// 5gc kind: number of servers.
        #[arg(long, default_value_t = 100)]
        servers: usize,
        /// Requested concurrent requests per procedure.
        #[arg(long)]
        u_hat: Option<u64>,
        /// 5gc kind: ms, nf or procedure.
        #[arg(long, default_value = "ms")]
        architecture: String,
        /// 5gc kind: requests served by one NF or procedure instance.
        #[arg(long, default_value_t = 1)]
        threads: u64,
        /// 5gc kind: NF grouping file.
        #[arg(long)]
        grouping: Option<PathBuf>,
        /// 5gc kind: farm capacity multiplier over the MS-based footprint.
        #[arg(long, default_value_t = NON_HOMOGENEOUS_HEADROOM)]
        headroom: f64,
    },
    /// Run a batch experiment and write its CSV files.
    Experiment {
        #[arg(long, value_enum)]
        kind: ExperimentKind,
        /// JSON file overriding default parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "MSPLACE_OUT_DIR", default_value = "results")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        time_limit_s: Option<f64>,
        /// Leave wall-time columns empty so output is byte-reproducible.
        #[arg(long)]
        no_timings: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Mm,
    Exact,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Random,
    #[value(name = "5gc")]
    FiveGc,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    CostGap,
    ArchCompare,
    Utilization,
}

/// Exit status: 0 success, 1 infeasible or violated, 2 bad input.
enum Outcome {
    Ok,
    Infeasible,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<Outcome, Error> {
    match command {
        Command::Solve {
            scenario,
            solver,
            out,
            trace,
            time_limit_s,
        } => solve(&scenario, solver, &out, trace.as_deref(), time_limit_s),
        Command::Validate {
            scenario,
            assignment,
        } => validate(&scenario, &assignment),
        Command::Generate {
            kind,
            out,
            seed,
            ms_count,
            pi,
            sigma,
            homogeneity,
            servers,
            u_hat,
            architecture,
            threads,
            grouping,
            headroom,
        } => {
            let homogeneity: Homogeneity = homogeneity.parse()?;
            let scenario = match kind {
                GenKind::Random => {
                    let p = gen_random_procedure(&RandomGraphConfig::unit(ms_count, pi, seed), 0)?;
                    let procedures = vec![p];
                    let workload = Workload::new().with(0, u_hat.unwrap_or(1));
                    let plan = msplace::replica_counts(&procedures, &workload)?;
                    let infra = gen_farm(
                        &FarmDemand::from_workload(&procedures, &plan),
                        &FarmConfig {
                            server_ratio: sigma,
                            homogeneity,
                            seed,
                        },
                    )?;
                    Scenario {
                        infra,
                        procedures,
                        workload,
                    }
                }
                GenKind::FiveGc => {
                    let u_hat = u_hat.unwrap_or(500);
                    let base = gen_5gc_workload();
                    let grouping = match grouping {
                        Some(path) => NfGrouping::from_json(&read(&path)?)?,
                        None => NfGrouping::illustrative(),
                    };
                    let arch: msplace::generate::Architecture = architecture.parse()?;
                    let model = architectures(grouping, threads, threads)
                        .into_iter()
                        .find(|m| m.kind() == arch)
                        .expect("every architecture is listed");
                    let procedures = aggregate(&base, &model)?;
                    let infra = workload_farm(&base, u_hat, servers, homogeneity, headroom)?;
                    let workload = Workload::uniform(&procedures, u_hat);
                    Scenario {
                        infra,
                        procedures,
                        workload,
                    }
                }
            };
            scenario.save(&out)?;
            eprintln!("wrote {}", out.display());
            Ok(Outcome::Ok)
        }
        Command::Experiment {
            kind,
            config,
            out_dir,
            seed,
            iterations,
            time_limit_s,
            no_timings,
        } => {
            let text = config.as_deref().map(read).transpose()?;
            let written = match kind {
                ExperimentKind::CostGap => {
                    let mut c: CostGapConfig = parse_config(text.as_deref())?;
                    if let Some(s) = seed {
                        c.seed = s;
                    }
                    if let Some(i) = iterations {
                        c.iterations = i;
                    }
                    if let Some(t) = time_limit_s {
                        c.time_limit_s = t;
                    }
                    c.timings &= !no_timings;
                    save_config(&out_dir, "cost_gap", &c)?;
                    run_cost_gap(&c)?.write(&out_dir)?
                }
                ExperimentKind::ArchCompare => {
                    let mut c: ArchCompareConfig = parse_config(text.as_deref())?;
                    c.timings &= !no_timings;
                    save_config(&out_dir, "arch_compare", &c)?;
                    run_arch_compare(&c)?.write(&out_dir)?
                }
                ExperimentKind::Utilization => {
                    let c: UtilizationConfig = parse_config(text.as_deref())?;
                    save_config(&out_dir, "utilization", &c)?;
                    run_utilization(&c)?.write(&out_dir)?
                }
            };
            for path in written {
                println!("{}", path.display());
            }
            Ok(Outcome::Ok)
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse_config<T: serde::de::DeserializeOwned + Default>(text: Option<&str>) -> Result<T, Error> {
    match text {
        Some(t) => Ok(serde_json::from_str(t)?),
        None => Ok(T::default()),
    }
}

/// Records the parameters an experiment actually ran with next to its
/// output.
fn save_config<T: serde::Serialize>(dir: &Path, name: &str, config: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    write(&dir.join(format!("{name}_config.json")), &text)
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn solve(
    scenario_path: &Path,
    solver: Solver,
    out: &Path,
    trace_path: Option<&Path>,
    time_limit_s: f64,
) -> Result<Outcome, Error> {
    let scenario = Scenario::load(scenario_path)?;
    let plan = scenario.plan()?;
    let (infra, procs) = (&scenario.infra, &scenario.procedures);
    let assignment = match solver {
        Solver::Mm => {
            let mut trace = Trace::new();
            let result = map_all(infra, procs, &plan, trace_path.map(|_| &mut trace));
            if let Some(path) = trace_path {
                write(path, &trace.to_jsonl())?;
            }
            match result {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("no solution: {e}");
                    return Ok(Outcome::Infeasible);
                }
            }
        }
        Solver::Exact | Solver::Oracle => {
            let outcome = match solver {
                Solver::Exact => solve_exact(infra, procs, &plan, time_limit_s)?,
                _ => brute_force_oracle(infra, procs, &plan)?,
            };
            eprintln!(
                "status {} after {} nodes, lower bound {}",
                outcome.status.as_str(),
                outcome.nodes,
                outcome.lower_bound
            );
            match outcome.assignment {
                Some(a) => a,
                None => {
                    if outcome.status == SolveStatus::Infeasible {
                        eprintln!("no solution: the scenario is infeasible");
                    } else {
                        eprintln!("no solution: time limit reached without an incumbent");
                    }
                    return Ok(Outcome::Infeasible);
                }
            }
        }
    };
    let file = AssignmentFile::build(&scenario, &assignment)?;
    write(out, &file.to_json())?;
    eprintln!("psi {} PDU/s, wrote {}", file.psi.unwrap_or(0.0), out.display());
    Ok(Outcome::Ok)
}

fn validate(scenario_path: &Path, assignment_path: &Path) -> Result<Outcome, Error> {
    let scenario = Scenario::load(scenario_path)?;
    let plan = scenario.plan()?;
    let file = AssignmentFile::from_json(&read(assignment_path)?)?;
    let (assignment, duplicates) = file.to_assignment();
    let mut report = check_constraints(&scenario.infra, &scenario.procedures, &plan, &assignment);
    if let Some(&instance) = duplicates.first() {
        report.unique_placement = Some(Violation::Duplicate { instance });
    }
    let checks = [
        ("unique placement", &report.unique_placement),
        ("adjacency", &report.adjacency),
        ("resource capacity", &report.resources),
        ("link capacity", &report.links),
    ];
    for (name, v) in checks {
        match v {
            None => println!("pass {name}"),
            Some(v) => println!("FAIL {name}: {v}"),
        }
    }
    Ok(if report.all_pass() {
        Outcome::Ok
    } else {
        Outcome::Infeasible
    })
}

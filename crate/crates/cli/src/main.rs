//! `cvarp`: command-line front end for the persuasion solvers.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvar_persuasion::approx::{local_facets, LocalFamily};
use cvar_persuasion::exact::build_active_facet_lp;
use cvar_persuasion::experiments::{
    comparison_sweep, default_schedule, entropy_sweep, heavy_tail_instance, linear_grid,
    portfolio5, scenario1, scenario2, tradeoff_sweep, HeavyTailConfig,
};
use cvar_persuasion::hardness::{gen_clique_instance, parse_edge_list};
use cvar_persuasion::lp::write_dump;
use cvar_persuasion::{
    audit_scheme, solve_discretized, solve_discretized_local, solve_exact, DiscretizeParams, Error,
    PersuasionInstance, Posterior, SignalingScheme,
};
use serde::Serialize;

use output::{Format, Sink};

#[derive(Parser)]
#[command(
    name = "cvarp",
    version,
    about = "Bayesian persuasion with a CVaR receiver"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for the random instance generators.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON output (default for solve and audit commands).
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// CSV output (default for experiments).
    #[arg(long, global = true)]
    csv: bool,
}

impl Global {
    fn format(&self, default: Format) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            default
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact optimum through the active-facet LP.
    SolveExact {
        instance: PathBuf,
        /// Also write the LP in the text dump format.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Discretized epsilon-IC solve on the k-uniform grid.
    SolveApprox(ApproxArgs),
    /// Recompute plausibility, value, regrets and margins of a scheme.
    Audit {
        instance: PathBuf,
        /// A bare scheme or any solver output with a `scheme` field.
        scheme: PathBuf,
        /// Largest accepted IC regret.
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Clique decision instance from an edge list.
    GenClique {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// CVaR-aware optimum against the expected-utility scheme, over r.
    ExpComparison {
        #[arg(long, value_enum, default_value_t = Scenario::TwoState)]
        scenario: Scenario,
        #[command(flatten)]
        levels: Levels,
    },
    /// Posterior entropy of the optimal portfolio scheme, over r.
    ExpEntropy {
        #[command(flatten)]
        levels: Levels,
    },
    /// Accuracy and wall time of the discretized solver against the exact one.
    ExpTradeoff {
        /// Comma-separated eps values; sorted descending.
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
        eps_grid: Vec<f64>,
        /// Grid resolution at the largest eps; doubled at each step.
        #[arg(long, default_value_t = 4)]
        k0: usize,
        #[arg(long, default_value_t = 4)]
        states: usize,
        #[arg(long, default_value_t = 3)]
        actions: usize,
        #[arg(long, default_value_t = 0.25)]
        r: f64,
    },
}

#[derive(Args)]
struct ApproxArgs {
    instance: PathBuf,
    #[arg(long)]
    eps: f64,
    /// Grid resolution; defaults to the Hoeffding bound.
    #[arg(long)]
    k: Option<usize>,
    /// Margin threshold for strict IC.
    #[arg(long)]
    gamma: Option<f64>,
    /// JSON array of probe posteriors for local refinement.
    #[arg(long, conflicts_with = "gamma")]
    local_probes: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1, requires = "local_probes")]
    eta: f64,
    #[arg(long, default_value_t = 0.1, requires = "local_probes")]
    delta: f64,
}

#[derive(Args)]
struct Levels {
    #[arg(long, default_value_t = 0.05)]
    r_min: f64,
    #[arg(long, default_value_t = 1.0)]
    r_max: f64,
    #[arg(long, default_value_t = 0.05)]
    r_step: f64,
}

impl Levels {
    fn grid(&self) -> Result<Vec<f64>, Failure> {
        if !(self.r_step > 0.0 && self.r_min > 0.0 && self.r_min <= self.r_max && self.r_max <= 1.0)
        {
            return Err(Failure::Input(format!(
                "need 0 < r-min <= r-max <= 1 and r-step > 0, got {}..{} step {}",
                self.r_min, self.r_max, self.r_step
            )));
        }
        Ok(linear_grid(self.r_min, self.r_max, self.r_step))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    /// Two states, safe against risky, prior P(good) = 0.3.
    TwoState,
    /// Five states, three actions.
    FiveState,
}

enum Failure {
    Input(String),
    Solver(String),
    /// The reader closed stdout.
    Closed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Lp(_) | Error::Verification(_) | Error::EmptyAlphabet | Error::NoCrossing => {
                Failure::Solver(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            Failure::Closed
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<PersuasionInstance, Failure> {
    let inst: PersuasionInstance = parse_json(path, &read(path)?)?;
    inst.check()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(inst)
}

fn load_scheme(path: &Path) -> Result<SignalingScheme, Failure> {
    let mut value: serde_json::Value = parse_json(path, &read(path)?)?;
    if let Some(inner) = value.get_mut("scheme") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct ExactOutput {
    value: f64,
    scheme: SignalingScheme,
}

#[derive(Serialize)]
struct ApproxOutput {
    value: f64,
    max_regret: f64,
    min_margin: Option<f64>,
    k: usize,
    eps_r: f64,
    grid_size: usize,
    alphabet_size: usize,
    scheme: SignalingScheme,
    centers: Vec<Posterior>,
    #[serde(skip_serializing_if = "Option::is_none")]
    local: Option<LocalOutput>,
}

#[derive(Serialize)]
struct LocalOutput {
    family: LocalFamily,
    total_facets: usize,
    certified: bool,
    fell_back: bool,
    warning: Option<String>,
}

fn solve_approx(args: &ApproxArgs, sink: &Sink) -> Result<(), Failure> {
    let inst = load_instance(&args.instance)?;
    let out = match &args.local_probes {
        Some(path) => {
            let probes: Vec<Vec<f64>> = parse_json(path, &read(path)?)?;
            let probes = probes
                .into_iter()
                .map(Posterior::new)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            // Surface probe errors as input errors before solving.
            local_facets(&inst, &probes, args.eta)?;
            let sol =
                solve_discretized_local(&inst, &probes, args.eta, args.eps, args.delta, args.k)?;
            if let Some(w) = &sol.warning {
                eprintln!("warning: {w}");
            }
            let s = sol.solution;
            ApproxOutput {
                value: s.value,
                max_regret: s.max_regret,
                min_margin: s.min_margin,
                k: s.k,
                eps_r: s.eps_r,
                grid_size: s.grid_size,
                alphabet_size: s.alphabet_size,
                scheme: s.scheme,
                centers: s.centers,
                local: Some(LocalOutput {
                    family: sol.family,
                    total_facets: sol.total_facets,
                    certified: sol.certified,
                    fell_back: sol.fell_back,
                    warning: sol.warning,
                }),
            }
        }
        None => {
            let mut params = DiscretizeParams::new(args.eps);
            params.k_override = args.k;
            params.gamma = args.gamma;
            let s = solve_discretized(&inst, &params)?;
            ApproxOutput {
                value: s.value,
                max_regret: s.max_regret,
                min_margin: s.min_margin,
                k: s.k,
                eps_r: s.eps_r,
                grid_size: s.grid_size,
                alphabet_size: s.alphabet_size,
                scheme: s.scheme,
                centers: s.centers,
                local: None,
            }
        }
    };
    match sink.format {
        Format::Json => sink.json(&out),
        Format::Csv => sink.scheme_csv(&inst, &out.scheme),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::SolveExact { instance, dump_lp } => {
            let inst = load_instance(instance)?;
            if let Some(path) = dump_lp {
                std::fs::write(path, write_dump(&build_active_facet_lp(&inst)?.lp))?;
            }
            let sol = solve_exact(&inst)?;
            let sink = Sink::new(g.out.clone(), g.format(Format::Json));
            match sink.format {
                Format::Json => sink.json(&ExactOutput {
                    value: sol.value,
                    scheme: sol.scheme,
                }),
                Format::Csv => sink.scheme_csv(&inst, &sol.scheme),
            }
        }
        Command::SolveApprox(args) => {
            solve_approx(args, &Sink::new(g.out.clone(), g.format(Format::Json)))
        }
        Command::Audit {
            instance,
            scheme,
            tol,
        } => {
            let inst = load_instance(instance)?;
            let scheme = load_scheme(scheme)?;
            if scheme.is_empty() {
                return Err(Failure::Input("scheme has no signals".into()));
            }
            let report = audit_scheme(&inst, &scheme)?;
            let sink = Sink::new(g.out.clone(), g.format(Format::Json));
            match sink.format {
                Format::Json => sink.json(&report)?,
                Format::Csv => sink.audit_csv(&report)?,
            }
            if report.passes(*tol) {
                Ok(())
            } else {
                Err(Failure::Solver(format!(
                    "audit failed: bayes residual {:e}, max regret {:e} (tol {tol:e})",
                    report.bayes_residual, report.max_regret
                )))
            }
        }
        Command::GenClique { edges, k } => {
            let (n, list) = parse_edge_list(&read(edges)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", edges.display())))?;
            let inst = gen_clique_instance(n, &list, *k)?;
            Sink::new(g.out.clone(), Format::Json).json(&inst)
        }
        Command::ExpComparison { scenario, levels } => {
            let grid = levels.grid()?;
            let rows = match scenario {
                Scenario::TwoState => comparison_sweep(|r| scenario1(0.3, r), &grid)?,
                Scenario::FiveState => comparison_sweep(scenario2, &grid)?,
            };
            Sink::new(g.out.clone(), g.format(Format::Csv)).rows(&rows)
        }
        Command::ExpEntropy { levels } => {
            let rows = entropy_sweep(portfolio5, &levels.grid()?)?;
            Sink::new(g.out.clone(), g.format(Format::Csv)).rows(&rows)
        }
        Command::ExpTradeoff {
            eps_grid,
            k0,
            states,
            actions,
            r,
        } => {
            if eps_grid.is_empty() || eps_grid.iter().any(|&e| e.is_nan() || e <= 0.0) || *k0 == 0 {
                return Err(Failure::Input(
                    "eps values must be positive and k0 at least 1".into(),
                ));
            }
            let cfg = HeavyTailConfig {
                states: *states,
                actions: *actions,
                r: *r,
            };
            let inst = heavy_tail_instance(cfg, g.seed);
            let rows = tradeoff_sweep(&inst, &default_schedule(eps_grid, *k0))?;
            Sink::new(g.out.clone(), g.format(Format::Csv)).rows(&rows)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use energy_sharing::analysis::{
    compare_schemes, estimate_beta, md_variance, mrp_md_variance, partition_study, summarize_sweep_n, sweep_a,
    sweep_heterogeneity, sweep_n, timing_benchmark, write_heterogeneity_csv, write_partition_csv, write_sweep_a_csv,
    write_sweep_n_csv, write_timing_csv, GeneratorBounds, Interval,
};
use energy_sharing::equilibrium::{solve_individual, solve_ne, solve_social_optimum};
use energy_sharing::market::Role;
use energy_sharing::mrp::{solve_mrp_ne, solve_mrp_social, MrpSolveReport};
use energy_sharing::protocol::{simulate, write_rounds_csv, ProtocolConfig, UpdateMode};
use energy_sharing::{MarketError, MrpScenario, Scenario};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::input::{load_bounds, load_scenario};
use crate::output::{emit, write_result, ResultFile};

#[derive(Debug, Parser)]
#[command(name = "energy-share", version, about = "Supply-demand function energy sharing market")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario under one scheme and write a result file.
    Solve {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Scheme::Ne)]
        scheme: Scheme,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Individual, market and social-optimum costs side by side.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the round-based bidding loop.
    Simulate(SimulateArgs),
    /// Parameter sweeps written as CSV.
    Sweep(SweepArgs),
    /// Chain of equal partitions of a multi-resource scenario, written as CSV.
    Partition {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        z_chain: Vec<usize>,
        /// Require equal c and equal K, the setting where the cost decrease is guaranteed.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wall-clock comparison of the direct solve and the bidding loop, written as CSV.
    Timing {
        #[command(flatten)]
        bounds: BoundsArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 15)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Ne,
    Sco,
    Idl,
    MrpNe,
    MrpSco,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Simultaneous,
    Sequential,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Simultaneous)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    /// Price change below which the loop stops ($/kW).
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Largest bid change still counted as settled (kW).
    #[arg(long, default_value_t = 1e-9)]
    pub bid_tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.0)]
    pub initial_price: f64,
    /// Per-round CSV log.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    N,
    A,
    Heterogeneity,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// JSON bounds file; individual flags override its values.
    #[arg(long)]
    pub bounds: Option<PathBuf>,
    #[arg(long)]
    pub c_min: Option<f64>,
    #[arg(long)]
    pub c_max: Option<f64>,
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    #[arg(long)]
    pub demand_min: Option<f64>,
    #[arg(long)]
    pub demand_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    /// Number of seeds; seeds run from `--first-seed` upward.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "2,5,10,20,40,60,80,100")]
    pub n: Vec<usize>,
    /// Multipliers on `a` for `--kind a`.
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,2.5,3,3.5")]
    pub mult: Vec<f64>,
    /// Heterogeneity factors for `--kind heterogeneity`.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,6,8,10")]
    pub factor: Vec<f64>,
    /// Scenario swept by `--kind a`.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl BoundsArgs {
    pub fn resolve(&self) -> CliResult<GeneratorBounds> {
        let mut b = match &self.bounds {
            Some(path) => load_bounds(path)?.value,
            None => GeneratorBounds::reference(0),
        };
        let set = |iv: &mut Interval, lo: Option<f64>, hi: Option<f64>| {
            if let Some(lo) = lo {
                iv.lo = lo;
            }
            if let Some(hi) = hi {
                iv.hi = hi;
            }
        };
        set(&mut b.c, self.c_min, self.c_max);
        set(&mut b.d, self.d_min, self.d_max);
        set(&mut b.demand, self.demand_min, self.demand_max);
        if let Some(a) = self.a {
            b.a = a;
        }
        if let Some(seed) = self.seed {
            b.seed = seed;
        }
        b.validate().map_err(CliError::input)?;
        Ok(b)
    }
}

#[derive(Serialize)]
struct MarketResult {
    scheme: &'static str,
    productions: Vec<f64>,
    bids: Vec<f64>,
    price: f64,
    trade_quantities: Vec<f64>,
    roles: Vec<Role>,
    /// Disutility plus payment per prosumer.
    costs: Vec<f64>,
    social_disutility: f64,
    md_variance: f64,
    kkt_residual: f64,
}

#[derive(Serialize)]
struct PlannerResult {
    scheme: &'static str,
    productions: Vec<f64>,
    price: Option<f64>,
    costs: Vec<f64>,
    social_disutility: f64,
    md_variance: f64,
}

#[derive(Serialize)]
struct MrpResult {
    scheme: &'static str,
    productions: Vec<Vec<f64>>,
    bids: Vec<f64>,
    price: f64,
    total_disutility: f64,
    md_variance: f64,
    kkt_residual: f64,
}

#[derive(Serialize)]
struct SimulationOutput {
    converged: bool,
    rounds: usize,
    residual_history: Vec<f64>,
    productions: Vec<f64>,
    bids: Vec<f64>,
    price: f64,
    trade_quantities: Vec<f64>,
    costs: Vec<f64>,
    social_disutility: f64,
}

fn costs_of(scenario: &Scenario, p: &[f64]) -> Vec<f64> {
    scenario.prosumers.iter().zip(p).map(|(pr, &x)| pr.disutility(x)).collect()
}

fn mrp_result(scheme: &'static str, s: &MrpScenario, r: MrpSolveReport) -> MrpResult {
    MrpResult {
        scheme,
        total_disutility: r.total_disutility(s),
        md_variance: mrp_md_variance(s, &r),
        bids: r.bids.iter().map(|b| b.0).collect(),
        price: r.price,
        kkt_residual: r.kkt_residual,
        productions: r.productions,
    }
}

fn solve(path: &Path, scheme: Scheme, out: Option<&Path>) -> CliResult<()> {
    let loaded = load_scenario(path)?;
    let result = match scheme {
        Scheme::Ne => {
            let s = loaded.value.single()?;
            let r = solve_ne(&s)?;
            let outcome = r.outcome(&s)?;
            serde_json::to_value(MarketResult {
                scheme: "ne",
                roles: outcome.roles(&s)?,
                md_variance: md_variance(&s, &r),
                productions: outcome.p.clone(),
                bids: outcome.bids.iter().map(|b| b.0).collect(),
                price: r.price,
                trade_quantities: outcome.trade.q.clone(),
                costs: outcome.cost_per_prosumer.clone(),
                social_disutility: outcome.social_disutility,
                kkt_residual: r.kkt_residual,
            })
        }
        Scheme::Sco => {
            let s = loaded.value.single()?;
            let r = solve_social_optimum(&s)?;
            serde_json::to_value(PlannerResult {
                scheme: "sco",
                costs: costs_of(&s, &r.productions),
                social_disutility: r.social_disutility(&s),
                md_variance: md_variance(&s, &r),
                price: Some(r.price),
                productions: r.productions,
            })
        }
        Scheme::Idl => {
            let s = loaded.value.single()?;
            let p: Vec<f64> = s.prosumers.iter().map(|pr| pr.demand).collect();
            let costs = solve_individual(&s);
            serde_json::to_value(PlannerResult {
                scheme: "idl",
                social_disutility: costs.iter().sum(),
                md_variance: energy_sharing::analysis::population_variance(
                    &s.prosumers.iter().zip(&p).map(|(pr, &x)| pr.marginal_disutility(x)).collect::<Vec<_>>(),
                ),
                costs,
                price: None,
                productions: p,
            })
        }
        Scheme::MrpNe => {
            let s = loaded.value.multi()?;
            let r = solve_mrp_ne(&s)?;
            serde_json::to_value(mrp_result("mrp-ne", &s, r))
        }
        Scheme::MrpSco => {
            let s = loaded.value.multi()?;
            let r = solve_mrp_social(&s)?;
            serde_json::to_value(mrp_result("mrp-sco", &s, r))
        }
    }
    .map_err(|e| CliError::Input(format!("cannot encode result: {e}")))?;
    write_result(out, &ResultFile::new("solve", &loaded.digest, result)?)
}

fn compare(path: &Path, out: Option<&Path>) -> CliResult<()> {
    let loaded = load_scenario(path)?;
    let report = compare_schemes(&loaded.value.single()?)?;
    write_result(out, &ResultFile::new("compare", &loaded.digest, report)?)
}

fn run_simulation(args: &SimulateArgs) -> CliResult<()> {
    let loaded = load_scenario(&args.scenario)?;
    let s = loaded.value.single()?;
    let config = ProtocolConfig {
        update_mode: match args.mode {
            Mode::Simultaneous => UpdateMode::Simultaneous,
            Mode::Sequential => UpdateMode::Sequential,
        },
        damping: args.damping,
        price_tolerance: args.tol,
        bid_tolerance: args.bid_tol,
        max_iter: args.max_iter,
        initial_price: args.initial_price,
        log_bids: args.log.is_some(),
    };
    config.validate().map_err(CliError::input)?;
    let sim = simulate(&s, &config)?;

    if let Some(log) = &args.log {
        let mut buf = Vec::new();
        write_rounds_csv(&sim.rounds, s.n(), &mut buf).map_err(|e| CliError::io(log, e))?;
        emit(Some(log), &buf)?;
    }
    let history = sim.residual_history();
    if !sim.converged {
        return Err(CliError::Convergence(MarketError::NonConvergence {
            iterations: sim.rounds.len(),
            residual: history.last().copied().unwrap_or(f64::NAN),
            history,
        }));
    }
    let o = sim.outcome;
    let output = SimulationOutput {
        converged: true,
        rounds: sim.rounds.len(),
        residual_history: history,
        bids: o.bids.iter().map(|b| b.0).collect(),
        price: o.trade.lambda_c,
        trade_quantities: o.trade.q,
        costs: o.cost_per_prosumer,
        social_disutility: o.social_disutility,
        productions: o.p,
    };
    write_result(args.out.as_deref(), &ResultFile::new("simulate", &loaded.digest, output)?)
}

fn sweep(args: &SweepArgs) -> CliResult<()> {
    let bounds = args.bounds.resolve()?;
    let seeds: Vec<u64> = (args.first_seed..args.first_seed + args.seeds).collect();
    let mut buf = Vec::new();
    let io_err = |e| CliError::io("<csv>", e);
    match args.kind {
        SweepKind::N => {
            let rows = sweep_n(&bounds, &args.n, &seeds)?;
            write_sweep_n_csv(&rows, &mut buf).map_err(io_err)?;
            for s in summarize_sweep_n(&rows) {
                eprintln!("N={:<5} max relative gap {:.3e}  median md variance {:.3e}", s.n, s.max_relative_gap, s.median_md_variance);
            }
            eprintln!("beta estimate max N(PoA-1) = {:.6e}", estimate_beta(&rows));
        }
        SweepKind::A => {
            let path = args.scenario.as_ref().ok_or_else(|| CliError::Input("--kind a needs --scenario".into()))?;
            let s = load_scenario(path)?.value.single()?;
            let rows = sweep_a(&s, &args.mult)?;
            write_sweep_a_csv(&rows, &mut buf).map_err(io_err)?;
        }
        SweepKind::Heterogeneity => {
            let rows = sweep_heterogeneity(&bounds, &args.factor, &args.n, &seeds)?;
            write_heterogeneity_csv(&rows, &mut buf).map_err(io_err)?;
        }
    }
    emit(args.out.as_deref(), &buf)
}

fn partition(path: &Path, z_chain: &[usize], strict: bool, out: Option<&Path>) -> CliResult<()> {
    let s = load_scenario(path)?.value.multi()?;
    let rows = partition_study(&s, z_chain, strict)?;
    for r in &rows[1..] {
        eprintln!(
            "Z={} I={}: min residual product {:.3e} kW^2, demand sum error {:.3e} kW",
            r.z, r.prosumers, r.min_residual_product, r.demand_sum_error
        );
    }
    let mut buf = Vec::new();
    write_partition_csv(&rows, &mut buf).map_err(|e| CliError::io("<csv>", e))?;
    emit(out, &buf)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { scenario, scheme, out } => solve(&scenario, scheme, out.as_deref()),
        Command::Compare { scenario, out } => compare(&scenario, out.as_deref()),
        Command::Simulate(args) => run_simulation(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Partition { scenario, z_chain, strict, out } => partition(&scenario, &z_chain, strict, out.as_deref()),
        Command::Timing { bounds, n, repeats, out } => {
            let rows = timing_benchmark(&bounds.resolve()?, &n, repeats)?;
            let mut buf = Vec::new();
            write_timing_csv(&rows, &mut buf).map_err(|e| CliError::io("<csv>", e))?;
            emit(out.as_deref(), &buf)
        }
    }
}

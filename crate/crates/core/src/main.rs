use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use topoprov::error::{Error, Result};
use topoprov::experiment::{analytic_sweep, default_source, num, parse_list, run_experiment, ExperimentConfig, ExperimentId, SweepScheme, Table};
use topoprov::identity::{IdentityCache, KeyRing};
use topoprov::learning::{mssp_embed_walk, mssp_recover, ssmp_embed, ssmp_recover, surplus_edges, DestinationView, SsmpParams};
use topoprov::optimize::{solve_mssp, solve_ssmp_equal, solve_ssmp_variable, SsmpBudget};
use topoprov::provenance::{recover, transmit, BetaRule, ChainMode, EmbedMode, Outcome, RecoveryContext};
use topoprov::sim::delay::{delay_mssp, delay_payload, delay_ssmp, DelayParams};
use topoprov::sim::{plan_keys, run_payload_sweep, run_trials, ContextKind, PathSampling, PayloadSpec, Scheme, TrialPlan};
use topoprov::topology::{DirectedPath, NeighborProfile, Topology};

/// Bloom-filter topology learning and hash-chain provenance recovery.
#[derive(Parser)]
#[command(name = "topoprov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run SSMP learning rounds on a topology file.
    LearnSsmp(LearnArgs),
    /// Run MSSP learning rounds on a topology file.
    LearnMssp(LearnArgs),
    /// Embed payload packets and recover their paths.
    Payload(PayloadArgs),
    /// Analytic false-positive rates over an (m, k, beta) grid.
    Analyze(AnalyzeArgs),
    /// Choose filter sizes and hash counts for a bit budget.
    Optimize(OptimizeArgs),
    /// Monte Carlo learning false-positive rate per k.
    Simulate(SimulateArgs),
    /// Analytic delay breakdown.
    Delay(DelayArgs),
    /// Run a figure recipe or a config file.
    Experiment(ExperimentArgs),
    /// Write a random connected topology in edge-list format.
    Generate(GenerateArgs),
    /// Write a deterministic key file.
    Keygen(KeygenArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Topology edge-list file.
    #[arg(long, conflicts_with = "random")]
    graph: Option<PathBuf>,
    /// Random topology `N E` instead of a file.
    #[arg(long, num_args = 2, value_names = ["N", "E"])]
    random: Option<Vec<usize>>,
    /// Seed of the random topology.
    #[arg(long, default_value_t = 1)]
    fixture_seed: u64,
}

impl GraphArgs {
    fn load(&self) -> Result<Topology> {
        match (&self.graph, &self.random) {
            (Some(p), _) => Topology::parse_edge_list(&read(p)?),
            (None, Some(ne)) => Topology::random_sparse(ne[0], ne[1], self.fixture_seed),
            (None, None) => Err(Error::Domain("give --graph FILE or --random N E".into())),
        }
    }
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Key file, one hex key per node; derived from --seed when absent.
    #[arg(long)]
    keys: Option<PathBuf>,
    /// Filter size: one value, or one per embedding node (SSMP).
    #[arg(long, default_value = "32")]
    m: String,
    /// Hash count: one value, or one per embedding node (SSMP).
    #[arg(long, default_value = "4")]
    k: String,
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the topology learned in the first run here.
    #[arg(long)]
    learned: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Learned,
    Complete,
}

impl From<TopologyArg> for ContextKind {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Learned => ContextKind::Learned,
            TopologyArg::Complete => ContextKind::Complete,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    De,
    Dde,
}

impl From<ModeArg> for EmbedMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::De => EmbedMode::De,
            ModeArg::Dde => EmbedMode::Dde,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BetaRuleArg {
    /// beta counts every verification that fails.
    Attempts,
    /// beta failed verifications are tolerated, then one more is allowed.
    Mismatches,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Uniform,
    Fixed,
}

#[derive(Args)]
struct PayloadArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    keys: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "de")]
    mode: ModeArg,
    /// Verification budget; a list such as `1..3` sweeps it.
    #[arg(long, default_value = "1")]
    beta: String,
    #[arg(long, value_enum, default_value = "learned")]
    topology: TopologyArg,
    /// Treat any ambiguity as a failure instead of checking hash-chains.
    #[arg(long)]
    no_chain: bool,
    #[arg(long, value_enum, default_value = "attempts")]
    beta_rule: BetaRuleArg,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value = "4")]
    k: String,
    #[arg(long, default_value_t = 4)]
    h: usize,
    /// Source node; defaults to the first node with at least four h-hop paths.
    #[arg(long)]
    source: Option<usize>,
    /// Recover one packet sent along this comma-separated node path.
    #[arg(long)]
    path: Option<String>,
    #[arg(long, value_enum, default_value = "uniform")]
    path_sampling: SamplingArg,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// ssmp, mssp, de or dde.
    #[arg(long, default_value = "ssmp")]
    scheme: String,
    #[arg(long, default_value = "32")]
    m: String,
    #[arg(long, default_value = "1..12")]
    k: String,
    #[arg(long, default_value = "1")]
    beta: String,
    #[arg(long, value_enum, default_value = "learned")]
    topology: TopologyArg,
    #[arg(long)]
    source: Option<usize>,
    #[arg(long, default_value_t = 4)]
    h: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OptimizeScheme {
    SsmpEqual,
    SsmpVar,
    Mssp,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long, value_enum)]
    scheme: OptimizeScheme,
    /// Total bit budget.
    #[arg(long)]
    msum: usize,
    #[arg(long, default_value_t = 16)]
    granularity: usize,
    #[arg(long, default_value_t = 16)]
    min_per_node: usize,
    /// Neighbour counts of the embedding nodes, e.g. `5,3,4,1,4,2,4`.
    #[arg(long, requires = "rsu")]
    profile: Option<String>,
    /// Neighbour count of the destination.
    #[arg(long)]
    rsu: Option<usize>,
    #[command(flatten)]
    graph: GraphArgs,
    /// Write the scan as CSV here.
    #[arg(long)]
    scan: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnScheme {
    Ssmp,
    Mssp,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_enum, default_value = "ssmp")]
    scheme: LearnScheme,
    /// Filter size (per node for SSMP).
    #[arg(long, default_value_t = 32)]
    m: usize,
    #[arg(long, default_value = "1..12")]
    k: String,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct DelayArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 32)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    beta: usize,
    #[arg(long, default_value_t = 4)]
    h: usize,
    #[arg(long, default_value_t = 42e-6)]
    t_h_n: f64,
    #[arg(long, default_value_t = 10e-6)]
    t_h_r: f64,
    #[arg(long, default_value_t = 70e-6)]
    t_q_n: f64,
    #[arg(long, default_value_t = 70e-6)]
    t_q_r: f64,
    #[arg(long, default_value_t = 0.5e-3)]
    t_pr: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file.
    #[arg(long, conflicts_with = "recipe")]
    config: Option<PathBuf>,
    /// Built-in recipe: fig4 .. fig9, delay.
    #[arg(long)]
    recipe: Option<String>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 3 when a recipe check fails.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    edges: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Realize this neighbour profile instead, e.g. `5,3,4,1,4,2,4`.
    #[arg(long, requires = "rsu", conflicts_with_all = ["nodes", "edges"])]
    profile: Option<String>,
    #[arg(long)]
    rsu: Option<usize>,
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn list(flag: &str, s: &str) -> Result<Vec<usize>> {
    parse_list(s).map_err(|msg| Error::Domain(format!("--{flag}: {msg}")))
}

fn load_keys(path: &Option<PathBuf>, n: usize, seed: u64) -> Result<KeyRing> {
    let keys = match path {
        Some(p) => KeyRing::parse_key_file(&read(p)?)?,
        None => plan_keys(n, seed),
    };
    if keys.len() < n {
        return Err(Error::MissingKey(keys.len()));
    }
    Ok(keys)
}

fn emit(table: &Table, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, table.to_csv())?,
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

fn per_node(flag: &str, s: &str, nodes: usize) -> Result<Vec<usize>> {
    let v = list(flag, s)?;
    match v.len() {
        1 => Ok(vec![v[0]; nodes]),
        l if l == nodes => Ok(v),
        l => Err(Error::Domain(format!("--{flag} has {l} values for {nodes} embedding nodes"))),
    }
}

fn learn(args: &LearnArgs, ssmp: bool) -> Result<()> {
    let t = args.graph.load()?;
    let n = t.node_count();
    let keys = load_keys(&args.keys, n, args.seed)?;
    let ids = IdentityCache::new(&keys, n, false)?;
    let view = DestinationView::of(&t);
    let params = SsmpParams::new(per_node("m", &args.m, n - 1)?, per_node("k", &args.k, n - 1)?)?;
    let mut table = Table::new("learn", &["run", "seq", "false_positive", "extra_edges"]);
    for run in 0..args.runs {
        let seq = (args.seed as u32).wrapping_mul(0x9e37_79b9).wrapping_add(run as u32);
        let learned = if ssmp {
            let packets = t.embedders().map(|v| ssmp_embed(&t, &ids, v, &params, seq)).collect::<Result<Vec<_>>>()?;
            ssmp_recover(&packets, &ids, &params, &view)?.0
        } else {
            let packet = mssp_embed_walk(&t, &ids, params.m[0], params.k[0], seq)?;
            mssp_recover(&packet, &ids, &view)?.0
        };
        let extra = surplus_edges(&t, &learned);
        if run == 0 {
            if let Some(p) = &args.learned {
                fs::write(p, learned.to_edge_list())?;
            }
        }
        let listed: Vec<String> = extra.iter().map(|(u, v)| format!("{u}-{v}")).collect();
        table.push(vec![run.to_string(), seq.to_string(), (!extra.is_empty() as u8).to_string(), listed.join(" ")]);
    }
    emit(&table, &None)
}

fn payload(args: &PayloadArgs) -> Result<()> {
    let t = args.graph.load()?;
    let n = t.node_count();
    let mode: EmbedMode = args.mode.into();
    let betas = list("beta", &args.beta)?;
    let ks = list("k", &args.k)?;
    let chain_mode = if args.no_chain { ChainMode::NoChain } else { ChainMode::Verify };
    let beta_rule = match args.beta_rule {
        BetaRuleArg::Attempts => BetaRule::Attempts,
        BetaRuleArg::Mismatches => BetaRule::MismatchesOnly,
    };
    if let Some(p) = &args.path {
        let nodes = list("path", p)?;
        let path = DirectedPath::new(&t, nodes)?;
        let keys = load_keys(&args.keys, n, args.seed)?;
        let ids = IdentityCache::new(&keys, n, mode == EmbedMode::Dde)?;
        let seq = args.seed as u32;
        let packet = transmit(mode, &t, &ids, &path, args.m, ks[0], seq)?;
        let mut ctx = match args.topology {
            TopologyArg::Learned => RecoveryContext::learned(&t, betas[0], path.hops()),
            TopologyArg::Complete => RecoveryContext::complete(n, t.destination(), betas[0], path.hops()),
        };
        ctx.beta_rule = beta_rule;
        ctx.chain_mode = chain_mode;
        let res = recover(&packet, &ids, &ctx, mode)?;
        println!("packet = {}", hex::encode(packet.to_bytes()));
        let outcome = match &res.outcome {
            Outcome::Recovered(p) => format!("recovered {}", fmt_path(p.nodes())),
            Outcome::FalsePositive => "false_positive".into(),
            Outcome::Exhausted => "exhausted".into(),
        };
        println!("outcome = {outcome}");
        println!("candidates = {}", res.candidate_paths);
        println!("verified = {}", res.paths_checked);
        return Ok(());
    }
    let source = match args.source {
        Some(s) => s,
        None => default_source(&t, args.h)?,
    };
    let context: ContextKind = args.topology.into();
    let sampling = match args.path_sampling {
        SamplingArg::Uniform => PathSampling::Uniform,
        SamplingArg::Fixed => PathSampling::Fixed,
    };
    let mut table = Table::new("payload", &["k", "beta", "errors", "trials", "fpr", "stderr"]);
    for &k in &ks {
        let spec = PayloadSpec { mode, source, h: args.h, m: args.m, k, beta: betas[0], context, sampling, beta_rule, chain_mode };
        for tally in run_payload_sweep(&t, &spec, &betas, &[context], args.trials, args.seed)? {
            let e = tally.estimate;
            table.push(vec![
                k.to_string(),
                tally.beta.to_string(),
                e.errors.to_string(),
                e.trials.to_string(),
                num(e.rate()),
                num(e.stderr()),
            ]);
        }
    }
    emit(&table, &None)
}

fn fmt_path(nodes: &[usize]) -> String {
    nodes.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let t = args.graph.load()?;
    let scheme: SweepScheme = args.scheme.parse()?;
    let table = analytic_sweep(
        scheme,
        &t,
        &list("m", &args.m)?,
        &list("k", &args.k)?,
        &list("beta", &args.beta)?,
        args.source,
        args.h,
        args.topology.into(),
    )?;
    emit(&table, &args.out)
}

fn optimize(args: &OptimizeArgs) -> Result<()> {
    let profile = match (&args.profile, args.rsu) {
        (Some(p), Some(rsu)) => NeighborProfile::new(list("profile", p)?, rsu),
        _ => args.graph.load()?.neighbor_profile(),
    };
    let n = profile.node_count();
    let budget = SsmpBudget::new(args.msum).with_granularity(args.granularity).with_min_per_node(args.min_per_node);
    let opt = match args.scheme {
        OptimizeScheme::SsmpEqual => solve_ssmp_equal(&profile, n, budget)?,
        OptimizeScheme::SsmpVar => solve_ssmp_variable(&profile, n, budget)?,
        OptimizeScheme::Mssp => solve_mssp(&profile, n, args.msum)?,
    };
    let mut rec = String::new();
    let scheme = match args.scheme {
        OptimizeScheme::SsmpEqual => "ssmp-equal",
        OptimizeScheme::SsmpVar => "ssmp-var",
        OptimizeScheme::Mssp => "mssp",
    };
    let _ = writeln!(rec, "scheme = {scheme}");
    let _ = writeln!(rec, "m = {}", fmt_path(&opt.m));
    let _ = writeln!(rec, "k = {}", fmt_path(&opt.k));
    let _ = writeln!(rec, "objective = {}", num(opt.objective.raw()));
    let _ = writeln!(rec, "unallocated = {}", opt.unallocated);
    let _ = writeln!(rec, "exhaustive = {}", opt.exhaustive);
    print!("{rec}");
    if let Some(p) = &args.scan {
        let mut table = Table::new("scan", &["k", "objective"]);
        for (k, p) in &opt.scan {
            table.push(vec![k.to_string(), num(p.raw())]);
        }
        fs::write(p, table.to_csv())?;
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let t = args.graph.load()?;
    let mut table = Table::new("simulate", &["k", "fpr", "stderr"]);
    for k in list("k", &args.k)? {
        let scheme = match args.scheme {
            LearnScheme::Ssmp => Scheme::Ssmp(SsmpParams::uniform(t.node_count() - 1, args.m, k)?),
            LearnScheme::Mssp => Scheme::Mssp { m: args.m, k },
        };
        let est = run_trials(&TrialPlan { topology: t.clone(), scheme, trials: args.trials, seed: args.seed })?;
        table.push(vec![k.to_string(), num(est.rate()), num(est.stderr())]);
    }
    emit(&table, &None)
}

fn delay(args: &DelayArgs) -> Result<()> {
    let t = args.graph.load()?;
    let d = DelayParams { t_h_n: args.t_h_n, t_h_r: args.t_h_r, t_q_n: args.t_q_n, t_q_r: args.t_q_r, t_pr: args.t_pr };
    let mut table = Table::new("delay", &["phase", "component", "seconds"]);
    let mut row = |phase: &str, component: &str, s: f64| table.push(vec![phase.into(), component.into(), num(s)]);
    let s = delay_ssmp(&t, &SsmpParams::uniform(t.node_count() - 1, args.m, args.k)?, &d)?;
    row("ssmp", "node_processing", s.node_processing);
    row("ssmp", "propagation", s.propagation);
    row("ssmp", "rsu_processing", s.rsu_processing);
    row("ssmp", "total", s.total);
    let ms = delay_mssp(&t, args.k, &d)?;
    row("mssp", "node_processing", ms.node_processing);
    row("mssp", "propagation", ms.propagation);
    row("mssp", "rsu_processing", ms.rsu_processing);
    row("mssp", "total", ms.total);
    for (mode, name) in [(EmbedMode::De, "de"), (EmbedMode::Dde, "dde")] {
        for (ctx, cname) in [(ContextKind::Learned, "learned"), (ContextKind::Complete, "complete")] {
            let p = delay_payload(mode, args.h, args.k, args.beta, ctx, &t, &d)?;
            let phase = format!("payload-{name}-{cname}");
            row(&phase, "transmit", p.transmit);
            row(&phase, "recover", p.recover);
            row(&phase, "total", p.total);
        }
    }
    emit(&table, &None)
}

enum Failure {
    Error(Error),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn experiment(args: &ExperimentArgs) -> std::result::Result<(), Failure> {
    let mut cfg = match (&args.config, &args.recipe) {
        (Some(p), _) => ExperimentConfig::load(p)?,
        (None, Some(r)) => ExperimentConfig::defaults(r.parse::<ExperimentId>()?),
        (None, None) => return Err(Error::Domain("give --config FILE or --recipe NAME".into()).into()),
    };
    if let Some(o) = &args.out {
        cfg.output = o.clone();
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let report = run_experiment(&cfg)?;
    let files = report.write(&cfg.output)?;
    eprintln!("wrote {} files to {}", files.len(), cfg.output.display());
    for c in &report.checks {
        println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if args.check && !report.all_passed() {
        return Err(Failure::Checks);
    }
    Ok(())
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let t = match (&args.profile, args.rsu) {
        (Some(p), Some(rsu)) => Topology::realize_profile(&NeighborProfile::new(list("profile", p)?, rsu), args.seed)?,
        _ => Topology::random_sparse(args.nodes, args.edges, args.seed)?,
    };
    print!("{}", t.to_edge_list());
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InfeasibleBudget(_) | Error::InfeasibleDimensions { .. } | Error::CapExceeded { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::LearnSsmp(a) => learn(a, true).map_err(Failure::from),
        Command::LearnMssp(a) => learn(a, false).map_err(Failure::from),
        Command::Payload(a) => payload(a).map_err(Failure::from),
        Command::Analyze(a) => analyze(a).map_err(Failure::from),
        Command::Optimize(a) => optimize(a).map_err(Failure::from),
        Command::Simulate(a) => simulate(a).map_err(Failure::from),
        Command::Delay(a) => delay(a).map_err(Failure::from),
        Command::Experiment(a) => experiment(a),
        Command::Generate(a) => generate(a).map_err(Failure::from),
        Command::Keygen(a) => {
            print!("{}", plan_keys(a.nodes, a.seed).to_key_file());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => {
            eprintln!("error: one or more checks failed");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

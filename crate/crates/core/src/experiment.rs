//! Figure-reproduction recipes and their on-disk artifacts.
//!
//! A config is a line-oriented `key = value` file; `#` starts a comment.
//! Lists are comma separated and `a..b` is an inclusive range. Every recipe
//! produces CSV tables, a gnuplot script and a manifest, written into a
//! temporary directory that is renamed into place only once complete.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::analysis::{complete_like, mssp_fpr, ssmp_fpr_bound, ssmp_fpr_exact, AveragedPayloadBound, DEFAULT_COMBINATION_CAP};
use crate::error::{Error, Result};
use crate::learning::SsmpParams;
use crate::optimize::{solve_ssmp_variable, SsmpBudget};
use crate::provenance::{BetaRule, ChainMode, EmbedMode};
use crate::sim::delay::{delay_mssp, delay_payload, delay_ssmp, DelayParams};
use crate::sim::{run_payload_sweep, run_trials, ContextKind, FprEstimate, PathSampling, PayloadSpec, Scheme, TrialPlan};
use crate::topology::{NeighborProfile, Node, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Delay,
    Custom,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::Fig4,
        ExperimentId::Fig5,
        ExperimentId::Fig6,
        ExperimentId::Fig7,
        ExperimentId::Fig8,
        ExperimentId::Fig9,
        ExperimentId::Delay,
        ExperimentId::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Fig4 => "fig4",
            ExperimentId::Fig5 => "fig5",
            ExperimentId::Fig6 => "fig6",
            ExperimentId::Fig7 => "fig7",
            ExperimentId::Fig8 => "fig8",
            ExperimentId::Fig9 => "fig9",
            ExperimentId::Delay => "delay",
            ExperimentId::Custom => "custom",
        }
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixtureSpec {
    /// `random_sparse(n, e, fixture_seed)`.
    Random { n: usize, e: usize },
    /// A connected graph realizing the profile, drawn with `fixture_seed`.
    Profile(NeighborProfile),
    File(PathBuf),
}

impl FixtureSpec {
    pub fn build(&self, seed: u64) -> Result<Topology> {
        match self {
            FixtureSpec::Random { n, e } => Topology::random_sparse(*n, *e, seed),
            FixtureSpec::Profile(p) => Topology::realize_profile(p, seed),
            FixtureSpec::File(path) => Topology::parse_edge_list(&fs::read_to_string(path)?),
        }
    }
}

impl std::fmt::Display for FixtureSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FixtureSpec::Random { n, e } => write!(f, "random {n} {e}"),
            FixtureSpec::Profile(p) => write!(f, "profile {} rsu {}", join(&p.gamma), p.gamma_rsu),
            FixtureSpec::File(path) => write!(f, "file {}", path.display()),
        }
    }
}

/// Learning schemes and payload modes a `custom` sweep can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScheme {
    Ssmp,
    Mssp,
    Payload(EmbedMode),
}

impl SweepScheme {
    pub fn name(self) -> &'static str {
        match self {
            SweepScheme::Ssmp => "ssmp",
            SweepScheme::Mssp => "mssp",
            SweepScheme::Payload(EmbedMode::De) => "de",
            SweepScheme::Payload(EmbedMode::Dde) => "dde",
        }
    }
}

impl std::str::FromStr for SweepScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ssmp" => Ok(Self::Ssmp),
            "mssp" => Ok(Self::Mssp),
            "de" => Ok(Self::Payload(EmbedMode::De)),
            "dde" => Ok(Self::Payload(EmbedMode::Dde)),
            _ => Err(Error::Domain(format!("unknown scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub fixture: FixtureSpec,
    pub fixture_seed: u64,
    /// Filter sizes (per node for SSMP).
    pub m: Vec<usize>,
    pub k: Vec<usize>,
    pub beta: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub output: PathBuf,
    /// Node count of the payload and delay fixtures.
    pub nodes: usize,
    /// Edge counts of the payload fixtures.
    pub edges: Vec<usize>,
    /// `(n, e)` of the delay fixtures.
    pub delay_fixtures: Vec<(usize, usize)>,
    pub h: usize,
    pub source: Option<Node>,
    pub m_sum: usize,
    pub granularity: usize,
    pub min_per_node: usize,
    /// Fixed SSMP allocation evaluated next to the optimizer's output.
    pub alloc_m: Vec<usize>,
    pub alloc_k: Vec<usize>,
    pub modes: Vec<EmbedMode>,
    pub sampling: PathSampling,
    pub scheme: SweepScheme,
    pub delay: DelayParams,
}

fn fig5_profile() -> NeighborProfile {
    NeighborProfile::new(vec![5, 3, 4, 1, 4, 2, 4], 5)
}

impl ExperimentConfig {
    /// Recipe defaults, matching the published set-ups.
    pub fn defaults(id: ExperimentId) -> Self {
        let mut cfg = Self {
            id,
            fixture: FixtureSpec::Profile(fig5_profile()),
            fixture_seed: 1,
            m: vec![32],
            k: (1..=12).collect(),
            beta: vec![1, 2, 3],
            trials: 0,
            seed: 1,
            output: PathBuf::from(format!("out/{}", id.name())),
            nodes: 20,
            edges: vec![34, 54],
            delay_fixtures: vec![(10, 26), (20, 23), (20, 34)],
            h: 4,
            source: None,
            m_sum: 280,
            granularity: 8,
            min_per_node: 16,
            alloc_m: vec![48, 48, 48, 16, 48, 32, 48],
            alloc_k: vec![8, 10, 8, 7, 8, 9, 8],
            modes: vec![EmbedMode::De, EmbedMode::Dde],
            sampling: PathSampling::Uniform,
            scheme: SweepScheme::Ssmp,
            delay: DelayParams::reference(),
        };
        match id {
            ExperimentId::Fig4 => {
                cfg.m = vec![24, 32, 40];
                cfg.k = (1..=16).collect();
            }
            ExperimentId::Fig5 => cfg.k = (1..=16).collect(),
            ExperimentId::Fig6 => {
                cfg.k = (1..=10).collect();
                cfg.trials = 100_000;
            }
            ExperimentId::Fig7 | ExperimentId::Fig8 | ExperimentId::Fig9 => {
                cfg.m = vec![20];
                cfg.k = (1..=8).collect();
                cfg.trials = 100_000;
                cfg.modes = match id {
                    ExperimentId::Fig7 => vec![EmbedMode::De],
                    ExperimentId::Fig8 => vec![EmbedMode::Dde],
                    _ => vec![EmbedMode::De, EmbedMode::Dde],
                };
            }
            ExperimentId::Delay => {
                cfg.k = vec![4];
                cfg.beta = vec![1];
            }
            ExperimentId::Custom => {}
        }
        cfg
    }

    /// Parses a config file; relative paths resolve against `base`.
    pub fn parse(text: &str, origin: &str, base: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Config { path: origin.to_string(), line, msg };
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(i + 1, format!("expected `key = value`, got `{line}`")))?;
            entries.push((i + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let (id_line, id) = entries
            .iter()
            .find(|(_, k, _)| k == "experiment")
            .map(|(l, _, v)| (*l, v.clone()))
            .ok_or_else(|| err(0, "missing `experiment` key".into()))?;
        let id: ExperimentId = id.parse().map_err(|e: Error| err(id_line, e.to_string()))?;
        let mut cfg = Self::defaults(id);
        for (line, key, value) in &entries {
            let at = |msg: String| err(*line, format!("{key}: {msg}"));
            match key.as_str() {
                "experiment" => {}
                "fixture" => cfg.fixture = parse_fixture(value, base).map_err(at)?,
                "fixture_seed" => cfg.fixture_seed = parse_num(value).map_err(at)?,
                "m" => cfg.m = parse_list(value).map_err(at)?,
                "k" => cfg.k = parse_list(value).map_err(at)?,
                "beta" => cfg.beta = parse_list(value).map_err(at)?,
                "trials" => cfg.trials = parse_num(value).map_err(at)?,
                "seed" => cfg.seed = parse_num(value).map_err(at)?,
                "output" => cfg.output = base.join(value),
                "nodes" => cfg.nodes = parse_num(value).map_err(at)?,
                "edges" => cfg.edges = parse_list(value).map_err(at)?,
                "delay_fixtures" => cfg.delay_fixtures = parse_pairs(value).map_err(at)?,
                "h" => cfg.h = parse_num(value).map_err(at)?,
                "source" => cfg.source = Some(parse_num(value).map_err(at)?),
                "m_sum" => cfg.m_sum = parse_num(value).map_err(at)?,
                "granularity" => cfg.granularity = parse_num(value).map_err(at)?,
                "min_per_node" => cfg.min_per_node = parse_num(value).map_err(at)?,
                "alloc_m" => cfg.alloc_m = parse_list(value).map_err(at)?,
                "alloc_k" => cfg.alloc_k = parse_list(value).map_err(at)?,
                "mode" => {
                    cfg.modes = match value.as_str() {
                        "both" => vec![EmbedMode::De, EmbedMode::Dde],
                        v => vec![v.parse().map_err(|e: Error| at(e.to_string()))?],
                    }
                }
                "sampling" => cfg.sampling = value.parse().map_err(|e: Error| at(e.to_string()))?,
                "scheme" => cfg.scheme = value.parse().map_err(|e: Error| at(e.to_string()))?,
                "t_h_n" => cfg.delay.t_h_n = parse_f64(value).map_err(at)?,
                "t_h_r" => cfg.delay.t_h_r = parse_f64(value).map_err(at)?,
                "t_q_n" => cfg.delay.t_q_n = parse_f64(value).map_err(at)?,
                "t_q_r" => cfg.delay.t_q_r = parse_f64(value).map_err(at)?,
                "t_pr" => cfg.delay.t_pr = parse_f64(value).map_err(at)?,
                _ => return Err(err(*line, format!("unknown key `{key}`"))),
            }
        }
        cfg.validate().map_err(|e| err(0, e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config { path: path.display().to_string(), line: 0, msg: e.to_string() })?;
        Self::parse(&text, &path.display().to_string(), path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.is_empty() || self.k.is_empty() || self.beta.is_empty() {
            return Err(Error::Domain("sweep ranges must be non-empty".into()));
        }
        if self.k.contains(&0) || self.m.contains(&0) || self.beta.contains(&0) {
            return Err(Error::Domain("m, k and beta must be positive".into()));
        }
        if let FixtureSpec::File(p) = &self.fixture {
            if !p.exists() {
                return Err(Error::Domain(format!("fixture file {} does not exist", p.display())));
            }
        }
        if self.modes.is_empty() {
            return Err(Error::Domain("no embedding mode selected".into()));
        }
        self.delay.validate()
    }

    /// Canonical text form; its digest identifies the run in the manifest.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let d = &self.delay;
        let _ = writeln!(s, "experiment = {}", self.id.name());
        let _ = writeln!(s, "fixture = {}", self.fixture);
        let _ = writeln!(s, "fixture_seed = {}", self.fixture_seed);
        let _ = writeln!(s, "m = {}", join(&self.m));
        let _ = writeln!(s, "k = {}", join(&self.k));
        let _ = writeln!(s, "beta = {}", join(&self.beta));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "nodes = {}", self.nodes);
        let _ = writeln!(s, "edges = {}", join(&self.edges));
        let pairs: Vec<String> = self.delay_fixtures.iter().map(|(n, e)| format!("{n}:{e}")).collect();
        let _ = writeln!(s, "delay_fixtures = {}", pairs.join(","));
        let _ = writeln!(s, "h = {}", self.h);
        if let Some(src) = self.source {
            let _ = writeln!(s, "source = {src}");
        }
        let _ = writeln!(s, "m_sum = {}", self.m_sum);
        let _ = writeln!(s, "granularity = {}", self.granularity);
        let _ = writeln!(s, "min_per_node = {}", self.min_per_node);
        let _ = writeln!(s, "alloc_m = {}", join(&self.alloc_m));
        let _ = writeln!(s, "alloc_k = {}", join(&self.alloc_k));
        let modes: Vec<&str> = self.modes.iter().map(|m| if *m == EmbedMode::De { "de" } else { "dde" }).collect();
        let _ = writeln!(s, "mode = {}", modes.join(","));
        let _ = writeln!(s, "sampling = {}", if self.sampling == PathSampling::Uniform { "uniform" } else { "fixed" });
        let _ = writeln!(s, "scheme = {}", self.scheme.name());
        let _ = writeln!(s, "delay = {:e},{:e},{:e},{:e},{:e}", d.t_h_n, d.t_h_r, d.t_q_n, d.t_q_r, d.t_pr);
        s
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.trim().replace('_', "").parse().map_err(|_| format!("`{s}` is not a valid number"))
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse().map_err(|_| format!("`{s}` is not a valid number"))
}

/// `1,2,5` or `1..12` or a mix such as `1..4,8`.
pub fn parse_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (usize, usize) = (parse_num(a)?, parse_num(b)?);
            if a > b {
                return Err(format!("empty range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(parse_num(part)?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn parse_pairs(s: &str) -> std::result::Result<Vec<(usize, usize)>, String> {
    s.split(',')
        .map(|p| {
            let (a, b) = p.trim().split_once(':').ok_or_else(|| format!("expected `n:e`, got `{p}`"))?;
            Ok((parse_num(a)?, parse_num(b)?))
        })
        .collect()
}

fn parse_fixture(s: &str, base: &Path) -> std::result::Result<FixtureSpec, String> {
    let words: Vec<&str> = s.split_whitespace().collect();
    match words.as_slice() {
        ["random", n, e] => Ok(FixtureSpec::Random { n: parse_num(n)?, e: parse_num(e)? }),
        ["profile", gamma, "rsu", rsu] => Ok(FixtureSpec::Profile(NeighborProfile::new(parse_list(gamma)?, parse_num(rsu)?))),
        ["file", path] => Ok(FixtureSpec::File(base.join(path))),
        _ => Err(format!("expected `random N E`, `profile G1,G2,.. rsu R` or `file PATH`, got `{s}`")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip scientific notation; stable across platforms.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub wall_time_secs: f64,
}

impl Manifest {
    pub fn render(&self, files: &[String]) -> String {
        format!(
            "experiment = {}\nconfig_sha256 = {}\nseed = {}\nversion = {}\nwall_time_secs = {:.3}\nfiles = {}\n",
            self.experiment,
            self.config_hash,
            self.seed,
            self.version,
            self.wall_time_secs,
            files.join(",")
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub tables: Vec<Table>,
    pub plot_script: String,
    /// Extra text files, e.g. fixture edge lists.
    pub attachments: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub manifest: Manifest,
}

impl ExperimentReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Writes every artifact into `dir`, replacing it atomically.
    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        let name = dir.file_name().ok_or_else(|| Error::Io(format!("bad output directory {}", dir.display())))?;
        let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent)?;
        let tmp = parent.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        let result = (|| -> Result<Vec<String>> {
            fs::create_dir(&tmp)?;
            let mut files = Vec::new();
            for t in &self.tables {
                let f = format!("{}.csv", t.name);
                fs::write(tmp.join(&f), t.to_csv())?;
                files.push(f);
            }
            let plot = format!("{}.gp", self.manifest.experiment);
            fs::write(tmp.join(&plot), &self.plot_script)?;
            files.push(plot);
            for (f, body) in &self.attachments {
                fs::write(tmp.join(f), body)?;
                files.push(f.clone());
            }
            if !self.checks.is_empty() {
                let mut s = String::new();
                for c in &self.checks {
                    let _ = writeln!(s, "{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
                fs::write(tmp.join("checks.txt"), s)?;
                files.push("checks.txt".into());
            }
            fs::write(tmp.join("manifest.txt"), self.manifest.render(&files))?;
            if dir.exists() {
                fs::remove_dir_all(dir)?;
            }
            fs::rename(&tmp, dir)?;
            Ok(files)
        })();
        if result.is_err() && tmp.exists() {
            let _ = fs::remove_dir_all(&tmp);
        }
        result
    }
}

/// First embedder with at least four `h`-hop paths, falling back to the
/// one with the most.
pub fn default_source(t: &Topology, h: usize) -> Result<Node> {
    let mut best: Option<(usize, Node)> = None;
    for v in t.embedders() {
        let lambda = t.enumerate_paths(v, h)?.len();
        if lambda >= 4 {
            return Ok(v);
        }
        if lambda > 0 && best.is_none_or(|(l, _)| lambda > l) {
            best = Some((lambda, v));
        }
    }
    best.map(|(_, v)| v).ok_or_else(|| Error::InvalidPath(format!("no node has a {h}-hop path")))
}

fn argmin(values: &[(usize, f64)]) -> usize {
    let mut best = values[0];
    for &v in &values[1..] {
        if v.1 < best.1 {
            best = v;
        }
    }
    best.0
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (tables, plot_script, attachments, checks) = match cfg.id {
        ExperimentId::Fig4 => fig4(cfg)?,
        ExperimentId::Fig5 => fig5(cfg)?,
        ExperimentId::Fig6 => fig6(cfg)?,
        ExperimentId::Fig7 | ExperimentId::Fig8 => fig78(cfg)?,
        ExperimentId::Fig9 => fig9(cfg)?,
        ExperimentId::Delay => delay(cfg)?,
        ExperimentId::Custom => custom(cfg)?,
    };
    let manifest = Manifest {
        experiment: cfg.id.name().into(),
        config_hash: hex::encode(Sha256::digest(cfg.canonical().as_bytes())),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok(ExperimentReport { tables, plot_script, attachments, checks, manifest })
}

type Recipe = (Vec<Table>, String, Vec<(String, String)>, Vec<Check>);

fn learning_fixture(cfg: &ExperimentConfig) -> Result<(Topology, Vec<(String, String)>)> {
    let t = cfg.fixture.build(cfg.fixture_seed)?;
    let att = vec![("fixture.topo".to_string(), t.to_edge_list())];
    Ok((t, att))
}

fn gp_header(title: &str, ylabel: &str) -> String {
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset title '{title}'\nset xlabel 'k'\nset ylabel '{ylabel}'\nset logscale y\n"
    )
}

fn ssmp_sim(t: &Topology, params: SsmpParams, trials: u64, seed: u64) -> Result<FprEstimate> {
    run_trials(&TrialPlan { topology: t.clone(), scheme: Scheme::Ssmp(params), trials, seed })
}

fn fig4(cfg: &ExperimentConfig) -> Result<Recipe> {
    let (t, att) = learning_fixture(cfg)?;
    let profile = t.neighbor_profile();
    let nodes = t.node_count() - 1;
    let sim = cfg.trials > 0;
    let mut header = vec!["m", "k", "fpr_exact", "fpr_bound"];
    if sim {
        header.extend(["fpr_sim", "stderr"]);
    }
    let mut table = Table::new("fig4", &header);
    let mut checks = Vec::new();
    for &m in &cfg.m {
        let mut exact = Vec::new();
        let mut bound = Vec::new();
        for &k in cfg.k.iter().filter(|&&k| k <= m) {
            let params = SsmpParams::uniform(nodes, m, k)?;
            let e = ssmp_fpr_exact(&t, &params)?.raw();
            let b = ssmp_fpr_bound(&profile, &params)?.raw();
            exact.push((k, e));
            bound.push((k, b));
            let mut row = vec![m.to_string(), k.to_string(), num(e), num(b)];
            if sim {
                let est = ssmp_sim(&t, params, cfg.trials, cfg.seed)?;
                row.extend([num(est.rate()), num(est.stderr())]);
            }
            table.push(row);
        }
        let valid = exact.iter().zip(&bound).all(|(e, b)| b.1 >= e.1);
        checks.push(Check::new(format!("bound_dominates_exact_m{m}"), valid, ""));
        let (ke, kb) = (argmin(&exact), argmin(&bound));
        checks.push(Check::new(
            format!("argmin_match_m{m}"),
            ke.abs_diff(kb) <= 1,
            format!("exact argmin k={ke}, bound argmin k={kb}"),
        ));
    }
    let mut gp = gp_header("SSMP false-positive rate, equal filters", "FPR");
    let ms = join(&cfg.m).replace(',', " ");
    let _ = writeln!(
        gp,
        "plot for [m in \"{ms}\"] 'fig4.csv' using 2:($1==m ? $3 : 1/0) with linespoints title 'exact m='.m, \\\n     for [m in \"{ms}\"] 'fig4.csv' using 2:($1==m ? $4 : 1/0) with lines dashtype 2 title 'bound m='.m"
    );
    Ok((vec![table], gp, att, checks))
}

fn fig5(cfg: &ExperimentConfig) -> Result<Recipe> {
    let (t, att) = learning_fixture(cfg)?;
    let profile = t.neighbor_profile();
    let nodes = t.node_count() - 1;
    if !cfg.m_sum.is_multiple_of(nodes) {
        return Err(Error::InfeasibleBudget(format!("m_sum {} is not divisible by {nodes} nodes", cfg.m_sum)));
    }
    let mi = cfg.m_sum / nodes;
    let mut equal = Table::new("fig5_equal", &["k", "fpr_exact", "fpr_bound"]);
    let mut curve = Vec::new();
    for &k in cfg.k.iter().filter(|&&k| k <= mi) {
        let params = SsmpParams::uniform(nodes, mi, k)?;
        let e = ssmp_fpr_exact(&t, &params)?.raw();
        curve.push((k, e));
        equal.push(vec![k.to_string(), num(e), num(ssmp_fpr_bound(&profile, &params)?.raw())]);
    }
    let equal_best = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);

    let mut variable = Table::new("fig5_variable", &["label", "m", "k", "fpr_exact", "fpr_bound"]);
    let mut checks = Vec::new();
    let mut add = |label: &str, params: &SsmpParams| -> Result<()> {
        let e = ssmp_fpr_exact(&t, params)?.raw();
        let b = ssmp_fpr_bound(&profile, params)?.raw();
        variable.push(vec![label.into(), join(&params.m).replace(',', ";"), join(&params.k).replace(',', ";"), num(e), num(b)]);
        checks.push(Check::new(
            format!("{label}_beats_equal"),
            e < equal_best,
            format!("exact {} vs equal-size best {}", num(e), num(equal_best)),
        ));
        Ok(())
    };
    if cfg.alloc_m.len() == nodes && cfg.alloc_k.len() == nodes {
        add("fixed_allocation", &SsmpParams::new(cfg.alloc_m.clone(), cfg.alloc_k.clone())?)?;
    }
    let budget = SsmpBudget::new(cfg.m_sum).with_granularity(cfg.granularity).with_min_per_node(cfg.min_per_node);
    let opt = solve_ssmp_variable(&profile, t.node_count(), budget)?;
    add("optimizer", &opt.ssmp_params()?)?;

    let mut gp = gp_header("SSMP equal vs variable filter sizes", "FPR");
    let _ = writeln!(gp, "stats 'fig5_variable.csv' using 4 every ::1::1 name 'fixed' nooutput");
    let _ = writeln!(gp, "stats 'fig5_variable.csv' using 4 every ::2::2 name 'opt' nooutput");
    let _ = writeln!(
        gp,
        "plot 'fig5_equal.csv' using 1:2 with linespoints title 'equal m_i={mi}', fixed_min with lines title 'fixed allocation', opt_min with lines title 'optimizer'"
    );
    Ok((vec![equal, variable], gp, att, checks))
}

fn fig6(cfg: &ExperimentConfig) -> Result<Recipe> {
    let (t, att) = learning_fixture(cfg)?;
    let profile = t.neighbor_profile();
    let n = t.node_count();
    let mi = cfg.m[0];
    let m_mssp = mi * (n - 1);
    let sim = cfg.trials > 0;
    let mut header = vec!["k", "ssmp_exact", "mssp_exact"];
    if sim {
        header.extend(["ssmp_sim", "ssmp_stderr", "mssp_sim", "mssp_stderr"]);
    }
    let mut table = Table::new("fig6", &header);
    let mut checks = Vec::new();
    for &k in cfg.k.iter().filter(|&&k| k <= mi) {
        let params = SsmpParams::uniform(n - 1, mi, k)?;
        let s = ssmp_fpr_exact(&t, &params)?.raw();
        let m = mssp_fpr(&profile, n, m_mssp, k)?.raw();
        let mut row = vec![k.to_string(), num(s), num(m)];
        checks.push(Check::new(format!("ssmp_below_mssp_k{k}"), s < m, format!("ssmp {} mssp {}", num(s), num(m))));
        if sim {
            let es = ssmp_sim(&t, params, cfg.trials, cfg.seed)?;
            let em = run_trials(&TrialPlan {
                topology: t.clone(),
                scheme: Scheme::Mssp { m: m_mssp, k },
                trials: cfg.trials,
                seed: cfg.seed,
            })?;
            row.extend([num(es.rate()), num(es.stderr()), num(em.rate()), num(em.stderr())]);
            checks.push(Check::new(format!("ssmp_sim_agrees_k{k}"), es.agrees_with(s, 3.0), num(es.rate())));
            checks.push(Check::new(format!("mssp_sim_agrees_k{k}"), em.agrees_with(m, 3.0), num(em.rate())));
        }
        table.push(row);
    }
    let mut gp = gp_header("SSMP vs MSSP at equal total filter size", "FPR");
    let _ = writeln!(gp, "plot 'fig6.csv' using 1:2 with linespoints, '' using 1:3 with linespoints");
    Ok((vec![table], gp, att, checks))
}

fn payload_fixture(cfg: &ExperimentConfig, e: usize) -> Result<(Topology, Node)> {
    let t = Topology::random_sparse(cfg.nodes, e, cfg.fixture_seed)?;
    let source = match cfg.source {
        Some(s) => s,
        None => default_source(&t, cfg.h)?,
    };
    Ok((t, source))
}

fn payload_spec(cfg: &ExperimentConfig, mode: EmbedMode, source: Node, k: usize) -> PayloadSpec {
    PayloadSpec {
        mode,
        source,
        h: cfg.h,
        m: cfg.m[0],
        k,
        beta: cfg.beta[0],
        context: ContextKind::Learned,
        sampling: cfg.sampling,
        beta_rule: BetaRule::Attempts,
        chain_mode: ChainMode::Verify,
    }
}

fn mode_name(mode: EmbedMode) -> &'static str {
    match mode {
        EmbedMode::De => "de",
        EmbedMode::Dde => "dde",
    }
}

fn fig78(cfg: &ExperimentConfig) -> Result<Recipe> {
    let name = cfg.id.name();
    let mut table = Table::new(name, &["mode", "edges", "k", "beta", "fpr_sim", "stderr", "fpr_bound"]);
    let mut att = Vec::new();
    let mut checks = Vec::new();
    let trials = cfg.trials.max(1);
    for &e in &cfg.edges {
        let (t, source) = payload_fixture(cfg, e)?;
        att.push((format!("fixture_e{e}.topo"), t.to_edge_list()));
        for &mode in &cfg.modes {
            let bounds: Vec<Option<AveragedPayloadBound>> = cfg
                .beta
                .iter()
                .map(|&b| match AveragedPayloadBound::build(&t, &t, source, cfg.h, b, mode, DEFAULT_COMBINATION_CAP) {
                    Ok(x) => Ok(Some(x)),
                    Err(Error::CapExceeded { .. }) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<_>>()?;
            let mut sims: Vec<Vec<(usize, f64)>> = vec![Vec::new(); cfg.beta.len()];
            let mut bnds: Vec<Vec<(usize, f64)>> = vec![Vec::new(); cfg.beta.len()];
            for &k in cfg.k.iter().filter(|&&k| k <= cfg.m[0]) {
                let spec = payload_spec(cfg, mode, source, k);
                let tallies = run_payload_sweep(&t, &spec, &cfg.beta, &[ContextKind::Learned], trials, cfg.seed)?;
                let rates: Vec<u64> = tallies.iter().map(|x| x.estimate.errors).collect();
                checks.push(Check::new(
                    format!("{}_e{e}_k{k}_beta_monotone", mode_name(mode)),
                    rates.windows(2).all(|w| w[0] >= w[1]),
                    join(&rates),
                ));
                for (bi, tally) in tallies.iter().enumerate() {
                    let est = tally.estimate;
                    let bound = bounds[bi].as_ref().map(|b| b.bound(cfg.m[0], k)).transpose()?.map(|p| p.raw());
                    sims[bi].push((k, est.rate()));
                    if let Some(b) = bound {
                        bnds[bi].push((k, b));
                        checks.push(Check::new(
                            format!("{}_e{e}_k{k}_beta{}_bound_holds", mode_name(mode), tally.beta),
                            est.rate() <= b + 3.0 * est.stderr(),
                            format!("sim {} bound {}", num(est.rate()), num(b)),
                        ));
                    }
                    table.push(vec![
                        mode_name(mode).into(),
                        e.to_string(),
                        k.to_string(),
                        tally.beta.to_string(),
                        num(est.rate()),
                        num(est.stderr()),
                        bound.map(num).unwrap_or_default(),
                    ]);
                }
            }
            for (bi, &beta) in cfg.beta.iter().enumerate() {
                if beta <= 2 && !bnds[bi].is_empty() {
                    let (ks, kb) = (argmin(&sims[bi]), argmin(&bnds[bi]));
                    checks.push(Check::new(
                        format!("{}_e{e}_beta{beta}_argmin_match", mode_name(mode)),
                        ks.abs_diff(kb) <= 1,
                        format!("sim argmin k={ks}, bound argmin k={kb}"),
                    ));
                }
            }
        }
    }
    let mut gp = gp_header("Payload recovery FPR, learned topology", "FPR");
    let _ = writeln!(
        gp,
        "plot for [b in \"{}\"] '{name}.csv' using 3:($4==b ? $5 : 1/0) with linespoints title 'sim beta='.b, \\\n     for [b in \"{}\"] '{name}.csv' using 3:($4==b ? $7 : 1/0) with lines dashtype 2 title 'bound beta='.b",
        join(&cfg.beta).replace(',', " "),
        join(&cfg.beta).replace(',', " ")
    );
    Ok((vec![table], gp, att, checks))
}

fn fig9(cfg: &ExperimentConfig) -> Result<Recipe> {
    let mut table = Table::new("fig9", &["mode", "edges", "k", "beta", "learned", "complete", "learned_stderr", "complete_stderr"]);
    let mut att = Vec::new();
    let mut checks = Vec::new();
    let trials = cfg.trials.max(1);
    let mut gaps: Vec<(EmbedMode, usize, f64)> = Vec::new();
    for &e in &cfg.edges {
        let (t, source) = payload_fixture(cfg, e)?;
        att.push((format!("fixture_e{e}.topo"), t.to_edge_list()));
        for &mode in &cfg.modes {
            let mut gap = 0.0;
            let mut cells = 0usize;
            let mut dominated = true;
            for &k in cfg.k.iter().filter(|&&k| k <= cfg.m[0]) {
                let spec = payload_spec(cfg, mode, source, k);
                let tallies = run_payload_sweep(
                    &t,
                    &spec,
                    &cfg.beta,
                    &[ContextKind::Learned, ContextKind::Complete],
                    trials,
                    cfg.seed,
                )?;
                let (learned, complete) = tallies.split_at(cfg.beta.len());
                for (l, c) in learned.iter().zip(complete) {
                    dominated &= l.estimate.errors <= c.estimate.errors;
                    gap += c.estimate.rate() - l.estimate.rate();
                    cells += 1;
                    table.push(vec![
                        mode_name(mode).into(),
                        e.to_string(),
                        k.to_string(),
                        l.beta.to_string(),
                        num(l.estimate.rate()),
                        num(c.estimate.rate()),
                        num(l.estimate.stderr()),
                        num(c.estimate.stderr()),
                    ]);
                }
            }
            checks.push(Check::new(format!("{}_e{e}_learned_below_complete", mode_name(mode)), dominated, ""));
            gaps.push((mode, e, gap / cells.max(1) as f64));
        }
    }
    for &mode in &cfg.modes {
        let g: Vec<&(EmbedMode, usize, f64)> = gaps.iter().filter(|x| x.0 == mode).collect();
        for w in g.windows(2) {
            if w[0].1 < w[1].1 {
                checks.push(Check::new(
                    format!("{}_gap_shrinks_e{}_to_e{}", mode_name(mode), w[0].1, w[1].1),
                    w[0].2 > w[1].2,
                    format!("mean gap {} vs {}", num(w[0].2), num(w[1].2)),
                ));
            }
        }
    }
    let mut gp = gp_header("Learned topology vs complete graph", "FPR");
    let _ = writeln!(
        gp,
        "plot 'fig9.csv' using 3:(strcol(1) eq 'de' && $4==1 ? $5 : 1/0) with linespoints title 'DE learned', \\\n     '' using 3:(strcol(1) eq 'de' && $4==1 ? $6 : 1/0) with linespoints title 'DE complete', \\\n     '' using 3:(strcol(1) eq 'dde' && $4==1 ? $5 : 1/0) with linespoints title 'DDE learned', \\\n     '' using 3:(strcol(1) eq 'dde' && $4==1 ? $6 : 1/0) with linespoints title 'DDE complete'"
    );
    Ok((vec![table], gp, att, checks))
}

fn delay(cfg: &ExperimentConfig) -> Result<Recipe> {
    let mut table = Table::new("delay", &["fixture", "phase", "component", "seconds"]);
    let mut att = Vec::new();
    let mut checks = Vec::new();
    let k = cfg.k[0];
    let beta = cfg.beta[0];
    let d = &cfg.delay;
    let mut mssp_prop: Vec<(usize, usize, f64)> = Vec::new();
    for &(n, e) in &cfg.delay_fixtures {
        let t = Topology::random_sparse(n, e, cfg.fixture_seed)?;
        let label = format!("n{n}_e{e}");
        att.push((format!("fixture_{label}.topo"), t.to_edge_list()));
        let ssmp = delay_ssmp(&t, &SsmpParams::uniform(n - 1, cfg.m[0].max(k), k)?, d)?;
        let mssp = delay_mssp(&t, k, d)?;
        let mut row = |phase: &str, component: &str, v: f64| {
            table.push(vec![label.clone(), phase.into(), component.into(), num(v)]);
        };
        row("ssmp", "node_processing", ssmp.node_processing);
        row("ssmp", "propagation", ssmp.propagation);
        row("ssmp", "rsu_processing", ssmp.rsu_processing);
        row("ssmp", "total", ssmp.total);
        row("mssp", "node_processing", mssp.node_processing);
        row("mssp", "propagation", mssp.propagation);
        row("mssp", "rsu_processing", mssp.rsu_processing);
        row("mssp", "total", mssp.total);
        checks.push(Check::new(
            format!("ssmp_faster_{label}"),
            ssmp.total < mssp.total,
            format!("ssmp {} mssp {}", num(ssmp.total), num(mssp.total)),
        ));
        mssp_prop.push((n, e, mssp.propagation));
        for mode in [EmbedMode::De, EmbedMode::Dde] {
            let mut rec = [0.0; 2];
            for (i, ctx) in [ContextKind::Learned, ContextKind::Complete].into_iter().enumerate() {
                let p = delay_payload(mode, cfg.h, k, beta, ctx, &t, d)?;
                let phase = format!("{}_{}", mode_name(mode), if i == 0 { "learned" } else { "complete" });
                row(&phase, "transmit", p.transmit);
                row(&phase, "recover", p.recover);
                row(&phase, "total", p.total);
                rec[i] = p.recover;
            }
            checks.push(Check::new(
                format!("{}_learned_recovery_faster_{label}", mode_name(mode)),
                rec[0] < rec[1],
                format!("learned {} complete {}", num(rec[0]), num(rec[1])),
            ));
        }
    }
    for a in &mssp_prop {
        for b in mssp_prop.iter().filter(|b| b.0 == a.0 && b.1 > a.1) {
            checks.push(Check::new(
                format!("mssp_propagation_drops_n{}_e{}_to_e{}", a.0, a.1, b.1),
                b.2 < a.2,
                format!("{} -> {}", num(a.2), num(b.2)),
            ));
        }
    }
    let gp = "set datafile separator ','\nset style data histograms\nset style fill solid\nset ylabel 'seconds'\nset xtics rotate by -45\nplot 'delay.csv' using ($3 eq 'total' ? $4 : 1/0):xtic(strcol(1).' '.strcol(2)) title 'total'\n".to_string();
    Ok((vec![table], gp, att, checks))
}

/// Analytic sweep table shared by the `custom` recipe and `analyze`.
#[allow(clippy::too_many_arguments)]
pub fn analytic_sweep(
    scheme: SweepScheme,
    t: &Topology,
    ms: &[usize],
    ks: &[usize],
    betas: &[usize],
    source: Option<Node>,
    h: usize,
    context: ContextKind,
) -> Result<Table> {
    let mut table = Table::new("analyze", &["scheme", "m", "k", "beta", "fpr_exact", "fpr_bound"]);
    let n = t.node_count();
    let profile = t.neighbor_profile();
    match scheme {
        SweepScheme::Ssmp | SweepScheme::Mssp => {
            for &m in ms {
                for &k in ks.iter().filter(|&&k| k <= m) {
                    let (exact, bound) = if scheme == SweepScheme::Ssmp {
                        let p = SsmpParams::uniform(n - 1, m, k)?;
                        (ssmp_fpr_exact(t, &p)?.raw(), num(ssmp_fpr_bound(&profile, &p)?.raw()))
                    } else {
                        (mssp_fpr(&profile, n, m, k)?.raw(), String::new())
                    };
                    table.push(vec![scheme.name().into(), m.to_string(), k.to_string(), String::new(), num(exact), bound]);
                }
            }
        }
        SweepScheme::Payload(mode) => {
            let source = match source {
                Some(s) => s,
                None => default_source(t, h)?,
            };
            let candidates = match context {
                ContextKind::Learned => t.clone(),
                ContextKind::Complete => complete_like(t),
            };
            for &beta in betas {
                let avg = AveragedPayloadBound::build(t, &candidates, source, h, beta, mode, DEFAULT_COMBINATION_CAP)?;
                for &m in ms {
                    for &k in ks.iter().filter(|&&k| k <= m) {
                        let b = avg.bound(m, k)?.raw();
                        table.push(vec![scheme.name().into(), m.to_string(), k.to_string(), beta.to_string(), String::new(), num(b)]);
                    }
                }
            }
        }
    }
    Ok(table)
}

fn custom(cfg: &ExperimentConfig) -> Result<Recipe> {
    let t = cfg.fixture.build(cfg.fixture_seed)?;
    let mut table =
        analytic_sweep(cfg.scheme, &t, &cfg.m, &cfg.k, &cfg.beta, cfg.source, cfg.h, ContextKind::Learned)?;
    table.name = "custom".into();
    let mut gp = gp_header("Analytic sweep", "FPR");
    let _ = writeln!(gp, "plot 'custom.csv' using 3:($5 eq '' ? $6 : $5) with linespoints");
    Ok((vec![table], gp, vec![("fixture.topo".into(), t.to_edge_list())], Vec::new()))
}

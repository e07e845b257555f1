//! Python bindings. Build with `cargo build -p topoprov-py --release` and
//! import the resulting shared library as `topoprov`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use ::topoprov::analysis;
use ::topoprov::error::Error;
use ::topoprov::experiment::{run_experiment as run_recipe, ExperimentConfig, ExperimentId};
use ::topoprov::filter;
use ::topoprov::identity::{self, IdentityCache};
use ::topoprov::learning::{self, DestinationView, SsmpParams};
use ::topoprov::optimize::{self, SsmpBudget};
use ::topoprov::provenance::{self, EmbedMode, Outcome, PayloadPacket, RecoveryContext};
use ::topoprov::sim::{self, delay as sim_delay, ContextKind, PathSampling, PayloadSpec, Scheme, TrialPlan};
use ::topoprov::topology::{self, DirectedPath, NeighborProfile};

create_exception!(topoprov, TopoprovError, PyException);

fn err(e: Error) -> PyErr {
    TopoprovError::new_err(e.to_string())
}

fn mode(s: &str) -> PyResult<EmbedMode> {
    s.parse().map_err(err)
}

fn context(s: &str) -> PyResult<ContextKind> {
    match s {
        "learned" => Ok(ContextKind::Learned),
        "complete" => Ok(ContextKind::Complete),
        _ => Err(TopoprovError::new_err(format!("unknown topology mode `{s}`"))),
    }
}

/// Per-node values from either one shared value or a full list.
#[derive(FromPyObject)]
enum PerNode {
    One(usize),
    Many(Vec<usize>),
}

impl PerNode {
    fn expand(self, nodes: usize) -> Vec<usize> {
        match self {
            PerNode::One(v) => vec![v; nodes],
            PerNode::Many(v) => v,
        }
    }
}

#[pyclass(module = "topoprov", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Topology {
    inner: topology::Topology,
}

#[pymethods]
impl Topology {
    #[new]
    fn new(n: usize, destination: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self { inner: topology::Topology::new(n, destination, edges).map_err(err)? })
    }

    /// Connected graph with `e` edges; the destination is the last node.
    #[staticmethod]
    #[pyo3(signature = (n, e, seed=1))]
    fn random(n: usize, e: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: topology::Topology::random_sparse(n, e, seed).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (gamma, gamma_rsu, seed=1))]
    fn from_profile(gamma: Vec<usize>, gamma_rsu: usize, seed: u64) -> PyResult<Self> {
        let p = NeighborProfile::new(gamma, gamma_rsu);
        Ok(Self { inner: topology::Topology::realize_profile(&p, seed).map_err(err)? })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: topology::Topology::parse_edge_list(text).map_err(err)? })
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn destination(&self) -> usize {
        self.inner.destination()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        if v >= self.inner.node_count() {
            return Err(err(Error::Domain(format!("node {v} out of range"))));
        }
        Ok(self.inner.neighbors(v).to_vec())
    }

    fn complement_edges(&self) -> Vec<(usize, usize)> {
        self.inner.complement_edges()
    }

    /// `(gamma, gamma_rsu)`: neighbour counts of the embedders and of the
    /// destination.
    fn profile(&self) -> (Vec<usize>, usize) {
        let p = self.inner.neighbor_profile();
        (p.gamma, p.gamma_rsu)
    }

    fn paths(&self, source: usize, h: usize) -> PyResult<Vec<Vec<usize>>> {
        let paths = self.inner.enumerate_paths(source, h).map_err(err)?;
        Ok(paths.into_iter().map(|p| p.nodes().to_vec()).collect())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Topology(n={}, destination={}, edges={})", self.inner.node_count(), self.inner.destination(), self.inner.edge_count())
    }
}

#[pyclass(module = "topoprov", frozen)]
struct KeyRing {
    inner: identity::KeyRing,
}

#[pymethods]
impl KeyRing {
    #[staticmethod]
    fn from_seed(n: usize, seed: u64) -> Self {
        Self { inner: identity::KeyRing::from_seed(n, seed) }
    }

    /// Parses a key file: one hex-encoded 32-byte key per line.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: identity::KeyRing::parse_key_file(text).map_err(err)? })
    }

    fn to_key_file(&self) -> String {
        self.inner.to_key_file()
    }

    fn edge_id<'py>(&self, py: Python<'py>, i: usize, j: usize) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &self.inner.edge_id(i, j).map_err(err)?.0))
    }

    fn double_edge_id<'py>(&self, py: Python<'py>, a: usize, b: usize, c: usize) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &self.inner.double_edge_id(a, b, c).map_err(err)?.0))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(module = "topoprov")]
struct BloomFilter {
    inner: filter::BloomFilter,
}

#[pymethods]
impl BloomFilter {
    #[new]
    fn new(m: usize, k: usize) -> PyResult<Self> {
        Ok(Self { inner: filter::BloomFilter::new(m, k).map_err(err)? })
    }

    fn insert(&mut self, item: &[u8], seq: u32) {
        self.inner.insert_item(item, seq);
    }

    fn contains(&self, item: &[u8], seq: u32) -> bool {
        self.inner.contains_item(item, seq)
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn popcount(&self) -> usize {
        self.inner.popcount()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }
}

#[pyfunction]
fn occupancy(m: usize, draws: usize) -> Vec<f64> {
    analysis::occupancy_distribution(m, draws).to_vec()
}

#[pyfunction]
fn p_edge_recovered(m: usize, k: usize, gamma: usize) -> PyResult<f64> {
    Ok(analysis::p_edge_recovered(m, k, gamma).map_err(err)?.raw())
}

#[pyfunction]
fn ssmp_fpr_exact(t: &Topology, m: PerNode, k: PerNode) -> PyResult<f64> {
    let nodes = t.inner.node_count() - 1;
    let params = SsmpParams::new(m.expand(nodes), k.expand(nodes)).map_err(err)?;
    Ok(analysis::ssmp_fpr_exact(&t.inner, &params).map_err(err)?.raw())
}

#[pyfunction]
fn ssmp_fpr_bound(gamma: Vec<usize>, gamma_rsu: usize, m: PerNode, k: PerNode) -> PyResult<f64> {
    let nodes = gamma.len();
    let params = SsmpParams::new(m.expand(nodes), k.expand(nodes)).map_err(err)?;
    Ok(analysis::ssmp_fpr_bound(&NeighborProfile::new(gamma, gamma_rsu), &params).map_err(err)?.raw())
}

#[pyfunction]
fn mssp_fpr(gamma: Vec<usize>, gamma_rsu: usize, m: usize, k: usize) -> PyResult<f64> {
    let n = gamma.len() + 1;
    Ok(analysis::mssp_fpr(&NeighborProfile::new(gamma, gamma_rsu), n, m, k).map_err(err)?.raw())
}

#[pyfunction]
fn impersonation_bound(gamma: Vec<usize>, gamma_rsu: usize, m: usize, k: usize) -> PyResult<f64> {
    let n = gamma.len() + 1;
    Ok(analysis::impersonation_success_bound(n, m, k, &NeighborProfile::new(gamma, gamma_rsu)).map_err(err)?.raw())
}

/// Averaged payload bound over every true path of `source`.
#[pyfunction]
#[pyo3(signature = (t, source, h, m, k, beta, mode="de", topology="learned"))]
#[allow(clippy::too_many_arguments)]
fn payload_bound(t: &Topology, source: usize, h: usize, m: usize, k: usize, beta: usize, mode: &str, topology: &str) -> PyResult<f64> {
    let candidates = match context(topology)? {
        ContextKind::Learned => t.inner.clone(),
        ContextKind::Complete => analysis::complete_like(&t.inner),
    };
    let b = analysis::AveragedPayloadBound::build(&t.inner, &candidates, source, h, beta, self::mode(mode)?, analysis::DEFAULT_COMBINATION_CAP)
        .map_err(err)?;
    Ok(b.bound(m, k).map_err(err)?.raw())
}

/// One SSMP round; returns the learned topology.
#[pyfunction]
fn learn_ssmp(t: &Topology, keys: &KeyRing, m: PerNode, k: PerNode, seq: u32) -> PyResult<Topology> {
    let g = &t.inner;
    let nodes = g.node_count() - 1;
    let params = SsmpParams::new(m.expand(nodes), k.expand(nodes)).map_err(err)?;
    let ids = IdentityCache::new(&keys.inner, g.node_count(), false).map_err(err)?;
    let packets = g.embedders().map(|v| learning::ssmp_embed(g, &ids, v, &params, seq)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let (learned, _) = learning::ssmp_recover(&packets, &ids, &params, &DestinationView::of(g)).map_err(err)?;
    Ok(Topology { inner: learned })
}

/// One MSSP round; returns the learned topology.
#[pyfunction]
fn learn_mssp(t: &Topology, keys: &KeyRing, m: usize, k: usize, seq: u32) -> PyResult<Topology> {
    let g = &t.inner;
    let packet = learning::mssp_embed_walk(g, &keys.inner, m, k, seq).map_err(err)?;
    let (learned, _) = learning::mssp_recover(&packet, &keys.inner, &DestinationView::of(g)).map_err(err)?;
    Ok(Topology { inner: learned })
}

/// Sends a payload packet along `path` and returns its wire bytes.
#[pyfunction]
#[pyo3(signature = (t, keys, path, m, k, seq, mode="de"))]
#[allow(clippy::too_many_arguments)]
fn send_payload<'py>(
    py: Python<'py>,
    t: &Topology,
    keys: &KeyRing,
    path: Vec<usize>,
    m: usize,
    k: usize,
    seq: u32,
    mode: &str,
) -> PyResult<Bound<'py, PyBytes>> {
    let path = DirectedPath::new(&t.inner, path).map_err(err)?;
    let packet = provenance::transmit(self::mode(mode)?, &t.inner, &keys.inner, &path, m, k, seq).map_err(err)?;
    Ok(PyBytes::new(py, &packet.to_bytes()))
}

/// Recovers the path of a serialized packet. Returns a dict with
/// `outcome` ("recovered", "false_positive" or "exhausted"), `path`,
/// `candidates` and `verified`.
#[pyfunction]
#[pyo3(signature = (packet, keys, t, beta=1, mode="de", topology="learned", no_chain=false))]
#[allow(clippy::too_many_arguments)]
fn recover_payload<'py>(
    py: Python<'py>,
    packet: &[u8],
    keys: &KeyRing,
    t: &Topology,
    beta: usize,
    mode: &str,
    topology: &str,
    no_chain: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let packet = PayloadPacket::from_bytes(packet).map_err(err)?;
    let g = &t.inner;
    let mut ctx = match context(topology)? {
        ContextKind::Learned => RecoveryContext::learned(g, beta, packet.hop_counter),
        ContextKind::Complete => RecoveryContext::complete(g.node_count(), g.destination(), beta, packet.hop_counter),
    };
    if no_chain {
        ctx.chain_mode = provenance::ChainMode::NoChain;
    }
    let res = provenance::recover(&packet, &keys.inner, &ctx, self::mode(mode)?).map_err(err)?;
    let out = PyDict::new(py);
    let (name, path) = match &res.outcome {
        Outcome::Recovered(p) => ("recovered", Some(p.nodes().to_vec())),
        Outcome::FalsePositive => ("false_positive", None),
        Outcome::Exhausted => ("exhausted", None),
    };
    out.set_item("outcome", name)?;
    out.set_item("path", path)?;
    out.set_item("candidates", res.candidate_paths)?;
    out.set_item("verified", res.paths_checked)?;
    Ok(out)
}

/// Monte Carlo learning failure rate; returns `(errors, trials)`.
#[pyfunction]
#[pyo3(signature = (t, m, k, trials, seed=1, scheme="ssmp"))]
fn simulate_learning(py: Python<'_>, t: &Topology, m: usize, k: usize, trials: u64, seed: u64, scheme: &str) -> PyResult<(u64, u64)> {
    let scheme = match scheme {
        "ssmp" => Scheme::Ssmp(SsmpParams::uniform(t.inner.node_count() - 1, m, k).map_err(err)?),
        "mssp" => Scheme::Mssp { m, k },
        _ => return Err(TopoprovError::new_err(format!("unknown scheme `{scheme}`"))),
    };
    let plan = TrialPlan { topology: t.inner.clone(), scheme, trials, seed };
    let est = py.detach(|| sim::run_trials(&plan)).map_err(err)?;
    Ok((est.errors, est.trials))
}

/// Monte Carlo payload failure counts for each beta; returns a list of
/// `(beta, errors, trials)`.
#[pyfunction]
#[pyo3(signature = (t, source, h, m, k, betas, trials, seed=1, mode="de", topology="learned"))]
#[allow(clippy::too_many_arguments)]
fn simulate_payload(
    py: Python<'_>,
    t: &Topology,
    source: usize,
    h: usize,
    m: usize,
    k: usize,
    betas: Vec<usize>,
    trials: u64,
    seed: u64,
    mode: &str,
    topology: &str,
) -> PyResult<Vec<(usize, u64, u64)>> {
    let ctx = context(topology)?;
    let spec = PayloadSpec {
        mode: self::mode(mode)?,
        source,
        h,
        m,
        k,
        beta: 1,
        context: ctx,
        sampling: PathSampling::Uniform,
        beta_rule: Default::default(),
        chain_mode: Default::default(),
    };
    let g = &t.inner;
    let tallies = py.detach(|| sim::run_payload_sweep(g, &spec, &betas, &[ctx], trials, seed)).map_err(err)?;
    Ok(tallies.into_iter().map(|x| (x.beta, x.estimate.errors, x.estimate.trials)).collect())
}

/// Optimizer for `scheme` in {"ssmp-equal", "ssmp-var", "mssp"}.
#[pyfunction]
#[pyo3(signature = (scheme, gamma, gamma_rsu, m_sum, granularity=16, min_per_node=16))]
fn optimize_filters<'py>(
    py: Python<'py>,
    scheme: &str,
    gamma: Vec<usize>,
    gamma_rsu: usize,
    m_sum: usize,
    granularity: usize,
    min_per_node: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let n = gamma.len() + 1;
    let profile = NeighborProfile::new(gamma, gamma_rsu);
    let budget = SsmpBudget::new(m_sum).with_granularity(granularity).with_min_per_node(min_per_node);
    let opt = match scheme {
        "ssmp-equal" => optimize::solve_ssmp_equal(&profile, n, budget),
        "ssmp-var" => py.detach(|| optimize::solve_ssmp_variable(&profile, n, budget)),
        "mssp" => optimize::solve_mssp(&profile, n, m_sum),
        _ => return Err(TopoprovError::new_err(format!("unknown scheme `{scheme}`"))),
    }
    .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("m", opt.m)?;
    out.set_item("k", opt.k)?;
    out.set_item("objective", opt.objective.raw())?;
    out.set_item("unallocated", opt.unallocated)?;
    out.set_item("exhaustive", opt.exhaustive)?;
    Ok(out)
}

/// Analytic delay totals in seconds under the reference timings.
#[pyfunction]
#[pyo3(signature = (t, m=32, k=4, beta=1, h=4))]
fn delay<'py>(py: Python<'py>, t: &Topology, m: usize, k: usize, beta: usize, h: usize) -> PyResult<Bound<'py, PyDict>> {
    let g = &t.inner;
    let d = sim_delay::DelayParams::reference();
    let out = PyDict::new(py);
    let ssmp = sim_delay::delay_ssmp(g, &SsmpParams::uniform(g.node_count() - 1, m, k).map_err(err)?, &d).map_err(err)?;
    out.set_item("ssmp", ssmp.total)?;
    out.set_item("mssp", sim_delay::delay_mssp(g, k, &d).map_err(err)?.total)?;
    for (mode, name) in [(EmbedMode::De, "de"), (EmbedMode::Dde, "dde")] {
        for (ctx, cname) in [(ContextKind::Learned, "learned"), (ContextKind::Complete, "complete")] {
            let p = sim_delay::delay_payload(mode, h, k, beta, ctx, g, &d).map_err(err)?;
            out.set_item(format!("{name}_{cname}_recover"), p.recover)?;
        }
    }
    Ok(out)
}

/// Runs a recipe (`fig4` .. `fig9`, `delay`) or a config file and writes its
/// outputs to `out`. Returns the list of `(check, passed)` pairs.
#[pyfunction]
#[pyo3(signature = (recipe, out, trials=None))]
fn run_experiment(py: Python<'_>, recipe: &str, out: PathBuf, trials: Option<u64>) -> PyResult<Vec<(String, bool)>> {
    let mut cfg = match recipe.parse::<ExperimentId>() {
        Ok(id) => ExperimentConfig::defaults(id),
        Err(_) => ExperimentConfig::load(std::path::Path::new(recipe)).map_err(err)?,
    };
    cfg.output = out;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    let report = py.detach(|| run_recipe(&cfg)).map_err(err)?;
    report.write(&cfg.output).map_err(err)?;
    Ok(report.checks.into_iter().map(|c| (c.name, c.passed)).collect())
}

#[pymodule(name = "topoprov")]
fn topoprov_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TopoprovError", m.py().get_type::<TopoprovError>())?;
    m.add_class::<Topology>()?;
    m.add_class::<KeyRing>()?;
    m.add_class::<BloomFilter>()?;
    m.add_function(wrap_pyfunction!(occupancy, m)?)?;
    m.add_function(wrap_pyfunction!(p_edge_recovered, m)?)?;
    m.add_function(wrap_pyfunction!(ssmp_fpr_exact, m)?)?;
    m.add_function(wrap_pyfunction!(ssmp_fpr_bound, m)?)?;
    m.add_function(wrap_pyfunction!(mssp_fpr, m)?)?;
    m.add_function(wrap_pyfunction!(impersonation_bound, m)?)?;
    m.add_function(wrap_pyfunction!(payload_bound, m)?)?;
    m.add_function(wrap_pyfunction!(learn_ssmp, m)?)?;
    m.add_function(wrap_pyfunction!(learn_mssp, m)?)?;
    m.add_function(wrap_pyfunction!(send_payload, m)?)?;
    m.add_function(wrap_pyfunction!(recover_payload, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_learning, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_payload, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_filters, m)?)?;
    m.add_function(wrap_pyfunction!(delay, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

//! Workload families, initial task placements and task graphs.
//!
//! Three workload families are supported: independent unit tasks, independent
//! tasks with integer processing times, and unit-task DAGs with a single
//! source and out-degree at most two.
//!
//! DAGs round-trip through a plain-text edge list:
//!
//! ```text
//! n D
//! u v
//! u v
//! ...
//! ```
//!
//! The header holds the node count and the critical path (longest path in
//! nodes); each following line is one edge `u -> v` with 0-based ids. Blank
//! lines and lines starting with `#` are ignored.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{abp_weight, phi, PotentialKind};

pub type NodeId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("workload has no work")]
    Empty,
    #[error("task {0} has processing time 0; processing times are whole slots")]
    ZeroProcessingTime(usize),
    #[error("explicit placement has {got} entries, expected {expected}")]
    PlacementLength { got: usize, expected: usize },
    #[error("explicit placement covers {got} tasks, workload has {expected}")]
    PlacementCoverage { got: u64, expected: u64 },
    #[error("{0} placement is not available for DAG workloads; the source starts on processor 0")]
    DagPlacement(&'static str),
    #[error("balls-and-bins draw failed: {0}")]
    Sampling(String),
    #[error("processor count must be at least 1")]
    NoProcessors,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DagError {
    #[error("graph has no nodes")]
    Empty,
    #[error("edge {0} -> {1} references a node outside 0..{2}")]
    NodeOutOfRange(NodeId, NodeId, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(NodeId, NodeId),
    #[error("node {0} has out-degree {1}, at most 2 allowed")]
    OutDegree(NodeId, usize),
    #[error("expected exactly one source, found {0}")]
    Sources(usize),
    #[error("graph contains a cycle")]
    Cycle,
    #[error("node {0} is not reachable from the source")]
    Unreachable(NodeId),
    #[error("header declares critical path {declared}, graph has {actual}")]
    CriticalPathMismatch { declared: u64, actual: u64 },
    #[error("malformed edge list at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("layer sizes {0:?} cannot be wired with out-degree <= 2 from a single source")]
    LayerSizes(Vec<usize>),
    #[error("layers and width must both be at least 1")]
    BadGeneratorParams,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("node {0} enabled twice")]
    EnabledTwice(NodeId),
    #[error("trace enables the source {0}")]
    SourceEnabled(NodeId),
    #[error("{parent} -> {child} is not an edge of the graph")]
    NotAnEdge { parent: NodeId, child: NodeId },
    #[error("{parent} enables {child} before being enabled itself")]
    ParentNotReady { parent: NodeId, child: NodeId },
    #[error("node {0} is never enabled")]
    NeverEnabled(NodeId),
    #[error("node id {0} out of range")]
    OutOfRange(NodeId),
}

/// A task graph: single source, acyclic, out-degree at most 2, every node
/// reachable from the source. Only constructible through validation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DagRepr", into = "DagRepr")]
pub struct DagSpec {
    children: Vec<Vec<NodeId>>,
    parents: Vec<Vec<NodeId>>,
    source: NodeId,
    critical_path: u64,
    layer_of: Option<Vec<u32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DagRepr {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layer_of: Option<Vec<u32>>,
}

impl TryFrom<DagRepr> for DagSpec {
    type Error = DagError;
    fn try_from(r: DagRepr) -> Result<Self, DagError> {
        let mut dag = DagSpec::from_edges(r.n, &r.edges)?;
        dag.layer_of = r.layer_of.filter(|l| l.len() == r.n);
        Ok(dag)
    }
}

impl From<DagSpec> for DagRepr {
    fn from(d: DagSpec) -> Self {
        DagRepr {
            n: d.len(),
            edges: d.edges(),
            layer_of: d.layer_of,
        }
    }
}

/// Longest path, counted in nodes, of the graph given by `n` and `edges`.
/// Uses Kahn's topological order; a cycle is reported as an error.
pub fn critical_path(n: usize, edges: &[(NodeId, NodeId)]) -> Result<u64, DagError> {
    let mut children = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u as usize >= n || v as usize >= n {
            return Err(DagError::NodeOutOfRange(u, v, n));
        }
        children[u as usize].push(v);
    }
    longest_path(&children)
}

fn longest_path(children: &[Vec<NodeId>]) -> Result<u64, DagError> {
    let n = children.len();
    let mut indeg = vec![0usize; n];
    for cs in children {
        for &c in cs {
            indeg[c as usize] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut len = vec![1u64; n];
    let mut seen = 0;
    while let Some(u) = ready.pop() {
        seen += 1;
        for &c in &children[u] {
            let c = c as usize;
            len[c] = len[c].max(len[u] + 1);
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.push(c);
            }
        }
    }
    if seen != n {
        return Err(DagError::Cycle);
    }
    Ok(len.into_iter().max().unwrap_or(0))
}

impl DagSpec {
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, DagError> {
        if n == 0 {
            return Err(DagError::Empty);
        }
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(DagError::NodeOutOfRange(u, v, n));
            }
            if u == v {
                return Err(DagError::SelfLoop(u));
            }
            if children[u as usize].contains(&v) {
                return Err(DagError::DuplicateEdge(u, v));
            }
            children[u as usize].push(v);
            parents[v as usize].push(u);
        }
        for (u, cs) in children.iter().enumerate() {
            if cs.len() > 2 {
                return Err(DagError::OutDegree(u as NodeId, cs.len()));
            }
        }
        let sources: Vec<usize> = (0..n).filter(|&i| parents[i].is_empty()).collect();
        if sources.len() != 1 {
            return Err(DagError::Sources(sources.len()));
        }
        let source = sources[0] as NodeId;
        let critical_path = longest_path(&children)?;

        let mut reached = vec![false; n];
        let mut stack = vec![source];
        reached[source as usize] = true;
        while let Some(u) = stack.pop() {
            for &c in &children[u as usize] {
                if !reached[c as usize] {
                    reached[c as usize] = true;
                    stack.push(c);
                }
            }
        }
        if let Some(i) = reached.iter().position(|&r| !r) {
            return Err(DagError::Unreachable(i as NodeId));
        }

        Ok(DagSpec {
            children,
            parents,
            source,
            critical_path,
            layer_of: None,
        })
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    /// Critical path length D, in nodes.
    pub fn critical_path(&self) -> u64 {
        self.critical_path
    }

    pub fn children(&self, u: NodeId) -> &[NodeId] {
        &self.children[u as usize]
    }

    pub fn parents(&self, u: NodeId) -> &[NodeId] {
        &self.parents[u as usize]
    }

    pub fn layer_of(&self) -> Option<&[u32]> {
        self.layer_of.as_deref()
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(u, cs)| cs.iter().map(move |&v| (u as NodeId, v)))
            .collect()
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.critical_path);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self, DagError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(DagError::Parse {
            line: 1,
            reason: "missing \"n D\" header".into(),
        })?;
        let (n, declared) = parse_pair::<usize, u64>(header, hline)?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            edges.push(parse_pair::<NodeId, NodeId>(l, line)?);
        }
        let dag = DagSpec::from_edges(n, &edges)?;
        if dag.critical_path != declared {
            return Err(DagError::CriticalPathMismatch {
                declared,
                actual: dag.critical_path,
            });
        }
        Ok(dag)
    }

    /// A chain of `n` nodes, `0 -> 1 -> ... -> n-1`.
    pub fn chain(n: usize) -> Result<Self, DagError> {
        let edges: Vec<_> = (1..n).map(|i| ((i - 1) as NodeId, i as NodeId)).collect();
        DagSpec::from_edges(n, &edges)
    }

    /// Complete binary tree of `2^depth - 1` nodes rooted at 0.
    pub fn binary_tree(depth: u32) -> Result<Self, DagError> {
        let n = (1usize << depth) - 1;
        let edges: Vec<_> = (1..n)
            .map(|i| (((i - 1) / 2) as NodeId, i as NodeId))
            .collect();
        DagSpec::from_edges(n, &edges)
    }
}

fn parse_pair<A: std::str::FromStr, B: std::str::FromStr>(
    s: &str,
    line: usize,
) -> Result<(A, B), DagError> {
    let mut it = s.split_whitespace();
    let bad = |reason: &str| DagError::Parse {
        line,
        reason: reason.to_string(),
    };
    let a = it
        .next()
        .ok_or_else(|| bad("expected two integers"))?
        .parse()
        .map_err(|_| bad("not an integer"))?;
    let b = it
        .next()
        .ok_or_else(|| bad("expected two integers"))?
        .parse()
        .map_err(|_| bad("not an integer"))?;
    if it.next().is_some() {
        return Err(bad("trailing tokens"));
    }
    Ok((a, b))
}

/// Layer widths for [`generate_layered_dag`]. Layer 0 is the single source;
/// every later layer draws its width uniformly from `[width, 2 * width - 1]`,
/// capped at twice the previous layer so that out-degree two can cover it.
pub fn layer_sizes<R: Rng + ?Sized>(layers: usize, width: usize, rng: &mut R) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(layers);
    sizes.push(1);
    for l in 1..layers {
        let cap = 2 * sizes[l - 1];
        let hi = (2 * width - 1).min(cap);
        let lo = width.min(hi);
        sizes.push(rng.random_range(lo..=hi));
    }
    sizes
}

/// Random layered DAG with `layers` layers of roughly `width` nodes. The
/// critical path equals `layers`. See [`layer_sizes`] for the widths and
/// [`generate_layered_dag_with_sizes`] for the wiring.
pub fn generate_layered_dag<R: Rng + ?Sized>(
    layers: usize,
    width: usize,
    rng: &mut R,
) -> Result<DagSpec, DagError> {
    if layers == 0 || width == 0 {
        return Err(DagError::BadGeneratorParams);
    }
    let sizes = layer_sizes(layers, width, rng);
    generate_layered_dag_with_sizes(&sizes, rng)
}

/// Wires explicit layer widths into a DAG. Each node of layer `l + 1` draws a
/// parent uniformly among layer-`l` nodes that still have out-degree
/// capacity, then with probability 1/2 a second distinct parent when capacity
/// remains. A repair pass gives every childless non-final node a child.
pub fn generate_layered_dag_with_sizes<R: Rng + ?Sized>(
    sizes: &[usize],
    rng: &mut R,
) -> Result<DagSpec, DagError> {
    if sizes.first() != Some(&1) || sizes.contains(&0) || sizes.windows(2).any(|w| w[1] > 2 * w[0])
    {
        return Err(DagError::LayerSizes(sizes.to_vec()));
    }
    let n: usize = sizes.iter().sum();
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut acc = 0usize;
    for &s in sizes {
        offsets.push(acc);
        acc += s;
    }
    let mut out_deg = vec![0u8; n];
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut layer_of = vec![0u32; n];

    for l in 1..sizes.len() {
        let prev = offsets[l - 1]..offsets[l - 1] + sizes[l - 1];
        let cur = offsets[l]..offsets[l] + sizes[l];
        for v in cur.clone() {
            layer_of[v] = l as u32;
        }
        let mut open: Vec<usize> = prev.clone().collect();
        let mut first_parent = vec![0usize; sizes[l]];
        for (k, v) in cur.clone().enumerate() {
            let i = rng.random_range(0..open.len());
            let p = open[i];
            out_deg[p] += 1;
            if out_deg[p] == 2 {
                open.swap_remove(i);
            }
            first_parent[k] = p;
            edges.push((p as NodeId, v as NodeId));
        }
        for (k, v) in cur.clone().enumerate() {
            if rng.random_bool(0.5) {
                let candidates: Vec<usize> = open
                    .iter()
                    .copied()
                    .filter(|&p| p != first_parent[k])
                    .collect();
                if !candidates.is_empty() {
                    let p = candidates[rng.random_range(0..candidates.len())];
                    out_deg[p] += 1;
                    if out_deg[p] == 2 {
                        open.retain(|&x| x != p);
                    }
                    edges.push((p as NodeId, v as NodeId));
                }
            }
        }
        for p in prev {
            if out_deg[p] == 0 {
                // Pick a child this parent is not already wired to.
                let v = cur.start + rng.random_range(0..sizes[l]);
                out_deg[p] += 1;
                edges.push((p as NodeId, v as NodeId));
            }
        }
    }

    let mut dag = DagSpec::from_edges(n, &edges)?;
    dag.layer_of = Some(layer_of);
    Ok(dag)
}

/// Layer count and width aimed at a total of roughly `work` nodes on `m`
/// processors. A long critical path uses about `work / (4m)` layers so that
/// every layer keeps a few tasks per processor; a short one uses about
/// `log2(work)` layers, the widths then ramping up by doubling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeredDagParams {
    pub layers: usize,
    pub width: usize,
    pub long_path: bool,
}

impl LayeredDagParams {
    pub fn for_work(work: u64, m: usize, long_path: bool) -> Self {
        let work = work.max(1);
        if long_path {
            let layers = ((work / (4 * m.max(1) as u64)).max(1)) as usize;
            // Mean layer width is about 1.5 * width.
            let width = ((work as f64 / (1.5 * layers as f64)).round() as usize).max(1);
            LayeredDagParams {
                layers,
                width,
                long_path,
            }
        } else {
            let layers = (64 - work.leading_zeros()) as usize; // ceil-ish log2
            let width = ((work as f64 / layers as f64).round() as usize).max(1);
            LayeredDagParams {
                layers,
                width,
                long_path,
            }
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DagSpec, DagError> {
        generate_layered_dag(self.layers, self.width, rng)
    }
}

/// The enabling tree recovered from an execution trace. `height` is the
/// instrumented height `D - enabling_depth`, which is known online.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnablingInfo {
    pub enabling_parent: Vec<Option<NodeId>>,
    pub enabling_depth: Vec<u32>,
    pub height: Vec<u64>,
}

/// Rebuilds the enabling tree from `(parent, child)` enabling events listed
/// in the order they happened.
pub fn enabling_instrument(
    dag: &DagSpec,
    trace: &[(NodeId, NodeId)],
) -> Result<EnablingInfo, TraceError> {
    let n = dag.len();
    let mut parent = vec![None; n];
    let mut depth: Vec<Option<u32>> = vec![None; n];
    depth[dag.source() as usize] = Some(0);
    for &(p, c) in trace {
        if p as usize >= n {
            return Err(TraceError::OutOfRange(p));
        }
        if c as usize >= n {
            return Err(TraceError::OutOfRange(c));
        }
        if c == dag.source() {
            return Err(TraceError::SourceEnabled(c));
        }
        if !dag.children(p).contains(&c) {
            return Err(TraceError::NotAnEdge {
                parent: p,
                child: c,
            });
        }
        if parent[c as usize].is_some() {
            return Err(TraceError::EnabledTwice(c));
        }
        let pd = depth[p as usize].ok_or(TraceError::ParentNotReady {
            parent: p,
            child: c,
        })?;
        parent[c as usize] = Some(p);
        depth[c as usize] = Some(pd + 1);
    }
    let mut enabling_depth = Vec::with_capacity(n);
    for (i, d) in depth.iter().enumerate() {
        enabling_depth.push(d.ok_or(TraceError::NeverEnabled(i as NodeId))?);
    }
    let d = dag.critical_path();
    let height = enabling_depth.iter().map(|&e| d - e as u64).collect();
    Ok(EnablingInfo {
        enabling_parent: parent,
        enabling_depth,
        height,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadSpec {
    UnitTasks { w: u64 },
    WeightedTasks { p: Vec<u64> },
    DagTasks { dag: DagSpec },
}

impl WorkloadSpec {
    /// Weighted workload with processing times drawn uniformly in `lo..=hi`.
    pub fn uniform_weighted<R: Rng + ?Sized>(n: usize, lo: u64, hi: u64, rng: &mut R) -> Self {
        WorkloadSpec::WeightedTasks {
            p: (0..n).map(|_| rng.random_range(lo..=hi)).collect(),
        }
    }

    /// Total work W in slots.
    pub fn total_work(&self) -> u64 {
        match self {
            WorkloadSpec::UnitTasks { w } => *w,
            WorkloadSpec::WeightedTasks { p } => p.iter().sum(),
            WorkloadSpec::DagTasks { dag } => dag.len() as u64,
        }
    }

    pub fn task_count(&self) -> u64 {
        match self {
            WorkloadSpec::UnitTasks { w } => *w,
            WorkloadSpec::WeightedTasks { p } => p.len() as u64,
            WorkloadSpec::DagTasks { dag } => dag.len() as u64,
        }
    }

    pub fn p_max(&self) -> u64 {
        match self {
            WorkloadSpec::WeightedTasks { p } => p.iter().copied().max().unwrap_or(0),
            _ => 1,
        }
    }

    pub fn critical_path(&self) -> Option<u64> {
        match self {
            WorkloadSpec::DagTasks { dag } => Some(dag.critical_path()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.total_work() == 0 {
            return Err(WorkloadError::Empty);
        }
        if let WorkloadSpec::WeightedTasks { p } = self {
            if let Some(i) = p.iter().position(|&x| x == 0) {
                return Err(WorkloadError::ZeroProcessingTime(i));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialDistribution {
    /// Every task starts on processor 0.
    #[default]
    AllOnZero,
    /// Each task goes to a uniformly random processor.
    BallsAndBins,
    /// Tasks per processor: `w[i]` tasks on processor `i`. For weighted
    /// workloads the tasks are dealt in list order.
    Explicit { w: Vec<u64> },
}

impl InitialDistribution {
    fn name(&self) -> &'static str {
        match self {
            InitialDistribution::AllOnZero => "all-on-zero",
            InitialDistribution::BallsAndBins => "balls-and-bins",
            InitialDistribution::Explicit { .. } => "explicit",
        }
    }
}

/// Task counts per processor for `w` unit tasks.
pub fn place_unit<R: Rng + ?Sized>(
    dist: &InitialDistribution,
    w: u64,
    m: usize,
    rng: &mut R,
) -> Result<Vec<u64>, WorkloadError> {
    if m == 0 {
        return Err(WorkloadError::NoProcessors);
    }
    match dist {
        InitialDistribution::AllOnZero => {
            let mut loads = vec![0; m];
            loads[0] = w;
            Ok(loads)
        }
        InitialDistribution::BallsAndBins => {
            // Multinomial(w; 1/m, ..., 1/m) drawn as a chain of conditional binomials.
            let mut loads = vec![0; m];
            let mut left = w;
            for (i, slot) in loads.iter_mut().enumerate().take(m - 1) {
                if left == 0 {
                    break;
                }
                let p = 1.0 / (m - i) as f64;
                let b =
                    Binomial::new(left, p).map_err(|e| WorkloadError::Sampling(e.to_string()))?;
                let k = b.sample(rng);
                *slot = k;
                left -= k;
            }
            loads[m - 1] += left;
            Ok(loads)
        }
        InitialDistribution::Explicit { w: counts } => {
            check_explicit(counts, m, w)?;
            Ok(counts.clone())
        }
    }
}

/// Task queues per processor for weighted tasks `p`.
pub fn place_weighted<R: Rng + ?Sized>(
    dist: &InitialDistribution,
    p: &[u64],
    m: usize,
    rng: &mut R,
) -> Result<Vec<VecDeque<u64>>, WorkloadError> {
    if m == 0 {
        return Err(WorkloadError::NoProcessors);
    }
    let mut queues = vec![VecDeque::new(); m];
    match dist {
        InitialDistribution::AllOnZero => queues[0].extend(p.iter().copied()),
        InitialDistribution::BallsAndBins => {
            for &x in p {
                queues[rng.random_range(0..m)].push_back(x);
            }
        }
        InitialDistribution::Explicit { w: counts } => {
            check_explicit(counts, m, p.len() as u64)?;
            let mut it = p.iter().copied();
            for (q, &c) in queues.iter_mut().zip(counts) {
                q.extend(it.by_ref().take(c as usize));
            }
        }
    }
    Ok(queues)
}

fn check_explicit(counts: &[u64], m: usize, tasks: u64) -> Result<(), WorkloadError> {
    if counts.len() != m {
        return Err(WorkloadError::PlacementLength {
            got: counts.len(),
            expected: m,
        });
    }
    let total: u64 = counts.iter().sum();
    if total != tasks {
        return Err(WorkloadError::PlacementCoverage {
            got: total,
            expected: tasks,
        });
    }
    Ok(())
}

/// Initial potential of a freshly drawn placement. Unit and weighted
/// workloads are measured on task counts per processor; DAG workloads start
/// with the source alone on processor 0.
pub fn initial_phi0<R: Rng + ?Sized>(
    dist: &InitialDistribution,
    workload: &WorkloadSpec,
    m: usize,
    kind: PotentialKind,
    rng: &mut R,
) -> Result<f64, WorkloadError> {
    workload.validate()?;
    let loads: Vec<f64> = match workload {
        WorkloadSpec::UnitTasks { w } => place_unit(dist, *w, m, rng)?
            .into_iter()
            .map(|x| x as f64)
            .collect(),
        WorkloadSpec::WeightedTasks { p } => place_weighted(dist, p, m, rng)?
            .into_iter()
            .map(|q| q.len() as f64)
            .collect(),
        WorkloadSpec::DagTasks { dag } => {
            if *dist != InitialDistribution::AllOnZero {
                return Err(WorkloadError::DagPlacement(dist.name()));
            }
            let mut loads = vec![0.0; m.max(1)];
            loads[0] = abp_weight(1, dag.critical_path());
            loads
        }
    };
    Ok(phi(kind, &loads))
}

pub(crate) fn dag_placement_error(dist: &InitialDistribution) -> Option<WorkloadError> {
    (*dist != InitialDistribution::AllOnZero).then(|| WorkloadError::DagPlacement(dist.name()))
}

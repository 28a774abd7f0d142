//! Weighted undirected overlay graphs.
//!
//! A [`Topology`] has dense node ids in `0..n`, no self-loops, no parallel
//! edges and strictly positive finite weights. Connectivity is enforced by the
//! generators and by edge-list import (which keeps the largest component), not
//! by the type itself; distance queries report `f64::INFINITY` for
//! unreachable nodes.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Dense node index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn new(index: usize) -> Self {
        NodeId(u32::try_from(index).expect("node index exceeds u32"))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn nodes(ids: &[usize]) -> Vec<NodeId> {
    ids.iter().map(|&i| NodeId::new(i)).collect()
}

#[derive(Clone, Debug)]
pub struct Topology {
    adjacency: Vec<Vec<(NodeId, f64)>>,
    edges: BTreeMap<(NodeId, NodeId), f64>,
}

/// Equality is on node count and the weighted edge set; adjacency order is
/// irrelevant.
impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.node_count() == other.node_count() && self.edges == other.edges
    }
}

impl Topology {
    pub fn empty(node_count: usize) -> Self {
        Topology {
            adjacency: vec![Vec::new(); node_count],
            edges: BTreeMap::new(),
        }
    }

    /// Builds a topology from `(u, v, weight)` triples, rejecting self-loops,
    /// duplicates and non-positive or non-finite weights.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut topo = Topology::empty(node_count);
        for &(u, v, w) in edges {
            topo.add_edge(NodeId::new(u), NodeId::new(v), w)?;
        }
        Ok(topo)
    }

    pub fn from_unit_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Topology::from_edges(node_count, &weighted)
    }

    pub fn path(node_count: usize) -> Self {
        let edges: Vec<_> = (1..node_count).map(|i| (i - 1, i)).collect();
        Topology::from_unit_edges(node_count, &edges).expect("path edges are valid")
    }

    pub fn add_node(&mut self) -> NodeId {
        self.adjacency.push(Vec::new());
        NodeId::new(self.adjacency.len() - 1)
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId, weight: f64) -> Result<()> {
        let n = self.node_count();
        for x in [u, v] {
            if x.index() >= n {
                return Err(Error::NodeOutOfRange { node: x.index(), node_count: n });
            }
        }
        if u == v {
            return Err(Error::InvalidEdge(u.index(), v.index(), "self-loop".into()));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidEdge(
                u.index(),
                v.index(),
                format!("weight {weight} must be positive and finite"),
            ));
        }
        let key = canonical(u, v);
        if self.edges.contains_key(&key) {
            return Err(Error::InvalidEdge(u.index(), v.index(), "duplicate edge".into()));
        }
        self.edges.insert(key, weight);
        self.adjacency[u.index()].push((v, weight));
        self.adjacency[v.index()].push((u, weight));
        Ok(())
    }

    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> Option<f64> {
        let w = self.edges.remove(&canonical(u, v))?;
        self.adjacency[u.index()].retain(|&(x, _)| x != v);
        self.adjacency[v.index()].retain(|&(x, _)| x != u);
        Some(w)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId::new)
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, f64)] {
        &self.adjacency[v.index()]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v.index()].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.node_count() == 0 {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.node_count() as f64
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.contains_key(&canonical(u, v))
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<f64> {
        self.edges.get(&canonical(u, v)).copied()
    }

    /// Edges as `(u, v, w)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.edges.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    /// A node is a hub when its degree is at least 10% of the node count.
    pub fn is_hub(&self, v: NodeId) -> bool {
        self.degree(v) as f64 >= 0.1 * self.node_count() as f64
    }

    pub fn hubs(&self) -> Vec<NodeId> {
        self.nodes().filter(|&v| self.is_hub(v)).collect()
    }

    /// Connected components, each sorted ascending, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut comps = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = vec![NodeId::new(start)];
            label[start] = id;
            let mut queue = VecDeque::from([NodeId::new(start)]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in self.neighbors(u) {
                    if label[v.index()] == usize::MAX {
                        label[v.index()] = id;
                        members.push(v);
                        queue.push_back(v);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() <= 1 || self.components().len() == 1
    }

    /// Subgraph induced by `keep`, relabelled densely in the order given.
    pub fn induced(&self, keep: &[NodeId]) -> Topology {
        let mut map = vec![None; self.node_count()];
        for (new, &old) in keep.iter().enumerate() {
            map[old.index()] = Some(NodeId::new(new));
        }
        let mut sub = Topology::empty(keep.len());
        for (u, v, w) in self.edges() {
            if let (Some(a), Some(b)) = (map[u.index()], map[v.index()]) {
                sub.add_edge(a, b, w).expect("induced edge is valid");
            }
        }
        sub
    }

    /// Largest connected component (ties go to the one with the smallest id),
    /// relabelled in ascending original-id order. Returns the kept original ids.
    pub fn largest_component(&self) -> (Topology, Vec<NodeId>) {
        let comps = self.components();
        let best = comps
            .into_iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
            .map(|(_, c)| c)
            .unwrap_or_default();
        (self.induced(&best), best)
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v.index() < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: v.index(), node_count: self.node_count() })
        }
    }

    /// Single-source shortest paths (Dijkstra). Unreachable nodes get infinity.
    pub fn dijkstra(&self, source: NodeId) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.node_count()];
        dist[source.index()] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapEntry { dist: 0.0, node: source });
        while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
            if d > dist[u.index()] {
                continue;
            }
            for &(v, w) in self.neighbors(u) {
                let nd = d + w;
                if nd < dist[v.index()] {
                    dist[v.index()] = nd;
                    heap.push(HeapEntry { dist: nd, node: v });
                }
            }
        }
        dist
    }

    /// Shortest-path distances from each of `sources` to every node.
    pub fn shortest_distances(&self, sources: &[NodeId]) -> Result<DistanceMatrix> {
        for &s in sources {
            self.check_node(s)?;
        }
        let rows = sources.iter().map(|&s| self.dijkstra(s)).collect();
        Ok(DistanceMatrix::new(sources.to_vec(), rows))
    }

    pub fn all_pairs(&self) -> DistanceMatrix {
        let sources: Vec<NodeId> = self.nodes().collect();
        self.shortest_distances(&sources).expect("all nodes are in range")
    }

    /// Plain-text edge list, one `u v weight` line per edge in ascending order.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v, w) in self.edges() {
            out.push_str(&format!("{u} {v} {w}\n"));
        }
        out
    }
}

fn canonical(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: NodeId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Rows of shortest-path distances, one per source node.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    sources: Vec<NodeId>,
    rows: Vec<Vec<f64>>,
    index: HashMap<NodeId, usize>,
}

impl DistanceMatrix {
    pub fn new(sources: Vec<NodeId>, rows: Vec<Vec<f64>>) -> Self {
        assert_eq!(sources.len(), rows.len());
        let index = sources.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        DistanceMatrix { sources, rows, index }
    }

    pub fn sources(&self) -> &[NodeId] {
        &self.sources
    }

    pub fn row(&self, source: NodeId) -> Option<&[f64]> {
        self.index.get(&source).map(|&i| self.rows[i].as_slice())
    }

    /// Distance from `source` to `target`, looking up either endpoint's row.
    pub fn get(&self, source: NodeId, target: NodeId) -> Option<f64> {
        self.row(source)
            .map(|r| r[target.index()])
            .or_else(|| self.row(target).map(|r| r[source.index()]))
    }

    pub fn rows(&self) -> impl Iterator<Item = (NodeId, &[f64])> {
        self.sources.iter().copied().zip(self.rows.iter().map(Vec::as_slice))
    }
}

/// Sources and destinations of the traffic an agent wants to shortcut.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDestSpec {
    pub sources: Vec<NodeId>,
    pub destinations: Vec<NodeId>,
}

impl SourceDestSpec {
    pub fn new(sources: Vec<NodeId>, destinations: Vec<NodeId>) -> Result<Self> {
        if sources.is_empty() || destinations.is_empty() {
            return Err(Error::invalid("sources and destinations must be non-empty"));
        }
        Ok(SourceDestSpec { sources, destinations })
    }

    /// All nodes as sources, and a uniform random `fraction` of them (at least
    /// one) as destinations.
    pub fn all_to_random_fraction(topology: &Topology, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::invalid(format!("destination fraction {fraction} not in (0, 1]")));
        }
        let n = topology.node_count();
        let count = ((fraction * n as f64).round() as usize).clamp(1, n);
        let mut rng = seed::rng(seed);
        let mut dests: Vec<NodeId> =
            index::sample(&mut rng, n, count).into_iter().map(NodeId::new).collect();
        dests.sort_unstable();
        SourceDestSpec::new(topology.nodes().collect(), dests)
    }

    pub fn validate(&self, topology: &Topology) -> Result<()> {
        if self.sources.is_empty() || self.destinations.is_empty() {
            return Err(Error::invalid("sources and destinations must be non-empty"));
        }
        for &v in self.sources.iter().chain(&self.destinations) {
            topology.check_node(v)?;
        }
        Ok(())
    }

    /// Sources followed by destinations not already listed.
    pub fn endpoints(&self) -> Vec<NodeId> {
        let mut out = self.sources.clone();
        for &t in &self.destinations {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphModel {
    ErdosRenyi,
    RandomRegular,
    BarabasiAlbert,
    WattsStrogatz,
    Imported,
}

impl FromStr for GraphModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "erdos-renyi" | "er" => Ok(GraphModel::ErdosRenyi),
            "random-regular" | "regular" | "rr" => Ok(GraphModel::RandomRegular),
            "barabasi-albert" | "ba" | "scale-free" => Ok(GraphModel::BarabasiAlbert),
            "watts-strogatz" | "ws" | "small-world" => Ok(GraphModel::WattsStrogatz),
            "imported" => Ok(GraphModel::Imported),
            other => Err(Error::invalid(format!("unknown graph model '{other}'"))),
        }
    }
}

impl fmt::Display for GraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GraphModel::ErdosRenyi => "erdos-renyi",
            GraphModel::RandomRegular => "random-regular",
            GraphModel::BarabasiAlbert => "barabasi-albert",
            GraphModel::WattsStrogatz => "watts-strogatz",
            GraphModel::Imported => "imported",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub model: GraphModel,
    pub node_count: usize,
    pub target_avg_degree: f64,
    /// Only used by Watts-Strogatz.
    pub rewire_prob: f64,
    pub seed: u64,
}

impl GraphSpec {
    pub fn new(model: GraphModel, node_count: usize, target_avg_degree: f64, seed: u64) -> Self {
        GraphSpec { model, node_count, target_avg_degree, rewire_prob: 0.1, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model == GraphModel::Imported {
            return Err(Error::invalid("imported topologies are loaded, not generated"));
        }
        if self.node_count < 2 {
            return Err(Error::invalid("node_count must be at least 2"));
        }
        if !(self.target_avg_degree > 0.0 && self.target_avg_degree < self.node_count as f64) {
            return Err(Error::invalid(format!(
                "target average degree {} must lie in (0, {})",
                self.target_avg_degree, self.node_count
            )));
        }
        if !(0.0..=1.0).contains(&self.rewire_prob) {
            return Err(Error::invalid("rewire_prob must lie in [0, 1]"));
        }
        match self.model {
            GraphModel::RandomRegular => {
                let d = self.target_avg_degree.round() as usize;
                if d == 0 || d >= self.node_count || (d * self.node_count) % 2 == 1 {
                    return Err(Error::invalid(format!(
                        "no {d}-regular graph on {} nodes",
                        self.node_count
                    )));
                }
            }
            GraphModel::BarabasiAlbert => {
                let m = ba_attachments(self.target_avg_degree);
                if m == 0 || m >= self.node_count {
                    return Err(Error::invalid(format!(
                        "attachment count {m} unusable for {} nodes",
                        self.node_count
                    )));
                }
            }
            GraphModel::WattsStrogatz => {
                let k = ws_ring_degree(self.target_avg_degree);
                if k == 0 || k >= self.node_count {
                    return Err(Error::invalid(format!(
                        "ring degree {k} unusable for {} nodes",
                        self.node_count
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

pub const MAX_CONNECTIVITY_RETRIES: usize = 100;

fn ba_attachments(avg_degree: f64) -> usize {
    (avg_degree / 2.0).round().max(1.0) as usize
}

fn ws_ring_degree(avg_degree: f64) -> usize {
    let k = (avg_degree / 2.0).round() as usize * 2;
    k.max(2)
}

/// Generates a connected random graph with unit weights.
///
/// A disconnected draw is regenerated from a derived sub-seed, up to
/// [`MAX_CONNECTIVITY_RETRIES`] times.
pub fn generate_graph(spec: &GraphSpec) -> Result<Topology> {
    spec.validate()?;
    for attempt in 0..=MAX_CONNECTIVITY_RETRIES {
        let attempt_seed = if attempt == 0 { spec.seed } else { seed::derive(spec.seed, attempt as u64) };
        let mut rng = seed::rng(attempt_seed);
        let edges = match spec.model {
            GraphModel::ErdosRenyi => erdos_renyi(&mut rng, spec.node_count, spec.target_avg_degree),
            GraphModel::RandomRegular => {
                match random_regular(&mut rng, spec.node_count, spec.target_avg_degree.round() as usize) {
                    Some(e) => e,
                    None => continue,
                }
            }
            GraphModel::BarabasiAlbert => {
                barabasi_albert(&mut rng, spec.node_count, ba_attachments(spec.target_avg_degree))
            }
            GraphModel::WattsStrogatz => watts_strogatz(
                &mut rng,
                spec.node_count,
                ws_ring_degree(spec.target_avg_degree),
                spec.rewire_prob,
            ),
            GraphModel::Imported => unreachable!("rejected by validate"),
        };
        let topo = Topology::from_unit_edges(spec.node_count, &edges)?;
        if topo.is_connected() {
            return Ok(topo);
        }
    }
    Err(Error::Disconnected { retries: MAX_CONNECTIVITY_RETRIES })
}

fn erdos_renyi<R: Rng>(rng: &mut R, n: usize, avg_degree: f64) -> Vec<(usize, usize)> {
    let p = avg_degree / (n - 1) as f64;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Stub-pairing with incremental rejection of loops and parallel edges; the
/// whole pairing restarts when it gets stuck. Returns `None` after too many
/// restarts so the caller can move on to the next sub-seed.
fn random_regular<R: Rng>(rng: &mut R, n: usize, d: usize) -> Option<Vec<(usize, usize)>> {
    'restart: for _ in 0..1000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        let mut adjacency = vec![Vec::<usize>::with_capacity(d); n];
        let mut edges = Vec::with_capacity(n * d / 2);
        while !stubs.is_empty() {
            let mut placed = false;
            for _ in 0..(stubs.len() * 4).max(32) {
                let i = rng.random_range(0..stubs.len());
                let j = rng.random_range(0..stubs.len());
                let (u, v) = (stubs[i], stubs[j]);
                if i == j || u == v || adjacency[u].contains(&v) {
                    continue;
                }
                adjacency[u].push(v);
                adjacency[v].push(u);
                edges.push((u.min(v), u.max(v)));
                let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                stubs.swap_remove(hi);
                stubs.swap_remove(lo);
                placed = true;
                break;
            }
            if !placed {
                continue 'restart;
            }
        }
        return Some(edges);
    }
    None
}

/// Preferential attachment starting from a star on `m + 1` nodes.
fn barabasi_albert<R: Rng>(rng: &mut R, n: usize, m: usize) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (1..=m).map(|v| (0, v)).collect();
    let mut repeated: Vec<usize> = Vec::with_capacity(2 * n * m);
    for &(u, v) in &edges {
        repeated.push(u);
        repeated.push(v);
    }
    for source in (m + 1)..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m {
            let t = repeated[rng.random_range(0..repeated.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, source));
            repeated.push(t);
            repeated.push(source);
        }
    }
    edges
}

/// Ring lattice with `k` nearest neighbours, each lattice edge rewired with
/// probability `p` to a uniform endpoint avoiding loops and duplicates.
fn watts_strogatz<R: Rng>(rng: &mut R, n: usize, k: usize, p: f64) -> Vec<(usize, usize)> {
    let mut adjacency: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adjacency[u].insert(v);
            adjacency[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= p || !adjacency[u].contains(&v) {
                continue;
            }
            if adjacency[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adjacency[u].contains(&w) {
                    break w;
                }
            };
            adjacency[u].remove(&v);
            adjacency[v].remove(&u);
            adjacency[u].insert(w);
            adjacency[w].insert(u);
        }
    }
    let mut edges = Vec::new();
    for (u, nbrs) in adjacency.iter().enumerate() {
        for &v in nbrs {
            if u < v {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Appends `hub_count` nodes, each linked with unit weight to `hub_degree`
/// distinct uniformly sampled original nodes.
pub fn enrich_with_hubs(
    topology: &Topology,
    hub_count: usize,
    hub_degree: usize,
    seed: u64,
) -> Result<Topology> {
    let original = topology.node_count();
    if hub_count > 0 && hub_degree > original {
        return Err(Error::invalid(format!(
            "hub degree {hub_degree} exceeds original node count {original}"
        )));
    }
    let mut out = topology.clone();
    let mut rng = seed::rng(seed);
    for _ in 0..hub_count {
        let hub = out.add_node();
        let mut picks: Vec<usize> = index::sample(&mut rng, original, hub_degree).into_vec();
        picks.sort_unstable();
        for v in picks {
            out.add_edge(hub, NodeId::new(v), 1.0)?;
        }
    }
    Ok(out)
}

/// Breadth-first snowball sample of exactly `size` nodes grown from a random
/// start node. The last layer is truncated uniformly at random. The result is
/// the induced subgraph, relabelled in ascending original-id order.
pub fn snowball_sample(topology: &Topology, size: usize, seed: u64) -> Result<Topology> {
    let n = topology.node_count();
    if size < 1 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    if size > n {
        return Err(Error::invalid(format!("sample size {size} exceeds node count {n}")));
    }
    let mut rng = seed::rng(seed);
    let start = NodeId::new(rng.random_range(0..n));
    let mut in_sample = vec![false; n];
    in_sample[start.index()] = true;
    let mut sample = vec![start];
    let mut frontier = vec![start];
    while sample.len() < size {
        let mut next: Vec<NodeId> = Vec::new();
        for &u in &frontier {
            for &(v, _) in topology.neighbors(u) {
                if !in_sample[v.index()] && !next.contains(&v) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            return Err(Error::invalid(format!(
                "component of the start node has only {} nodes, fewer than {size}",
                sample.len()
            )));
        }
        next.sort_unstable();
        let room = size - sample.len();
        if next.len() > room {
            next.shuffle(&mut rng);
            next.truncate(room);
        }
        for &v in &next {
            in_sample[v.index()] = true;
        }
        sample.extend_from_slice(&next);
        frontier = next;
    }
    sample.sort_unstable();
    Ok(topology.induced(&sample))
}

/// Result of parsing a text edge list.
#[derive(Clone, Debug)]
pub struct ImportedTopology {
    pub topology: Topology,
    /// Original token of each node id.
    pub labels: Vec<String>,
    pub skipped_self_loops: usize,
    pub skipped_duplicates: usize,
}

/// Parses `u v [weight]` lines. Labels are arbitrary tokens assigned dense ids
/// in order of first appearance; `#` starts a comment line. Self-loops and
/// repeated edges are skipped (the first occurrence of an edge wins).
pub fn parse_edge_list(text: &str) -> Result<ImportedTopology> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut raw: Vec<(usize, usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected 'u v [weight]', got '{line}'"),
            });
        }
        let weight = match fields.get(2) {
            Some(w) => w.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno + 1,
                message: format!("bad weight '{w}': {e}"),
            })?,
            None => 1.0,
        };
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("weight {weight} must be positive and finite"),
            });
        }
        let mut endpoint = |tok: &str| {
            *ids.entry(tok.to_string()).or_insert_with(|| {
                labels.push(tok.to_string());
                labels.len() - 1
            })
        };
        let u = endpoint(fields[0]);
        let v = endpoint(fields[1]);
        raw.push((u, v, weight));
    }
    let mut topology = Topology::empty(labels.len());
    let (mut loops, mut dups) = (0, 0);
    for (u, v, w) in raw {
        let (a, b) = (NodeId::new(u), NodeId::new(v));
        if u == v {
            loops += 1;
        } else if topology.has_edge(a, b) {
            dups += 1;
        } else {
            topology.add_edge(a, b, w)?;
        }
    }
    Ok(ImportedTopology { topology, labels, skipped_self_loops: loops, skipped_duplicates: dups })
}

/// Parses an edge list and keeps only its largest connected component.
pub fn import_edge_list(text: &str) -> Result<ImportedTopology> {
    let parsed = parse_edge_list(text)?;
    let (topology, kept) = parsed.topology.largest_component();
    let labels = kept.iter().map(|v| parsed.labels[v.index()].clone()).collect();
    Ok(ImportedTopology { topology, labels, ..parsed })
}

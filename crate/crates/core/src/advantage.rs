//! Adversarial advantage of an agent's peer set.
//!
//! The agent is an implicit extra node joined by zero-weight links to every
//! peer in `U`. A source/destination pair `(s, t)` with `s != t` counts 1 when
//! the path through the agent plus the penalty `tau` is strictly shorter than
//! the original distance, and 1/2 when the two are equal. The value is kept
//! as an integer count of half-units so sums never accumulate rounding error.

use std::collections::BTreeSet;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::topology::{NodeId, SourceDestSpec, Topology};

/// Default enumeration cap for [`brute_force_select`].
pub const DEFAULT_ENUMERATION_CAP: u128 = 2_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentPlacement {
    pub peers: Vec<NodeId>,
    pub tau: f64,
}

impl AgentPlacement {
    pub fn new(peers: Vec<NodeId>, tau: f64) -> Self {
        AgentPlacement { peers, tau }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdvantageResult {
    half_units: u64,
    pub shortcut_pairs: Vec<(NodeId, NodeId)>,
    pub tie_pairs: Vec<(NodeId, NodeId)>,
}

impl AdvantageResult {
    pub fn value(&self) -> f64 {
        self.half_units as f64 / 2.0
    }

    /// Twice the advantage, as an exact integer.
    pub fn half_units(&self) -> u64 {
        self.half_units
    }
}

/// A selector's output together with its advantage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub placement: AgentPlacement,
    pub result: AdvantageResult,
}

impl Selection {
    pub fn value(&self) -> f64 {
        self.result.value()
    }
}

/// Precomputed distances for repeated advantage queries on one instance.
///
/// Holds one shortest-path row per source and per destination, plus the
/// source-to-destination distance table.
#[derive(Clone, Debug)]
pub struct AdvantageEvaluator {
    node_count: usize,
    sources: Vec<NodeId>,
    destinations: Vec<NodeId>,
    source_rows: Vec<Vec<f64>>,
    dest_rows: Vec<Vec<f64>>,
    /// `base[i][j]` = d(sources[i], destinations[j]); NaN marks excluded pairs
    /// (same node or unreachable).
    base: Vec<Vec<f64>>,
    tau: f64,
}

impl AdvantageEvaluator {
    pub fn new(topology: &Topology, sd: &SourceDestSpec, tau: f64) -> Result<Self> {
        sd.validate(topology)?;
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::invalid(format!("tau {tau} must be finite and non-negative")));
        }
        let rows = |nodes: &[NodeId]| -> Vec<Vec<f64>> {
            nodes.par_iter().map(|&v| topology.dijkstra(v)).collect()
        };
        let source_rows = rows(&sd.sources);
        let dest_rows = rows(&sd.destinations);
        let base = sd
            .sources
            .iter()
            .zip(&source_rows)
            .map(|(&s, row)| {
                sd.destinations
                    .iter()
                    .map(|&t| {
                        let d = row[t.index()];
                        if s == t || !d.is_finite() {
                            f64::NAN
                        } else {
                            d
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(AdvantageEvaluator {
            node_count: topology.node_count(),
            sources: sd.sources.clone(),
            destinations: sd.destinations.clone(),
            source_rows,
            dest_rows,
            base,
            tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Per-source and per-destination distance to the nearest peer.
    fn reach(&self, peers: &[NodeId]) -> (Vec<f64>, Vec<f64>) {
        let nearest = |rows: &[Vec<f64>]| -> Vec<f64> {
            rows.iter()
                .map(|row| peers.iter().map(|p| row[p.index()]).fold(f64::INFINITY, f64::min))
                .collect()
        };
        (nearest(&self.source_rows), nearest(&self.dest_rows))
    }

    fn extend_reach(&self, reach: &(Vec<f64>, Vec<f64>), v: NodeId) -> (Vec<f64>, Vec<f64>) {
        let src = reach.0.iter().zip(&self.source_rows).map(|(&d, row)| d.min(row[v.index()])).collect();
        let dst = reach.1.iter().zip(&self.dest_rows).map(|(&d, row)| d.min(row[v.index()])).collect();
        (src, dst)
    }

    fn half_units(&self, src_reach: &[f64], dst_reach: &[f64]) -> u64 {
        let tau = self.tau;
        let mut total = 0u64;
        for (i, base_row) in self.base.iter().enumerate() {
            let ds = src_reach[i];
            if !ds.is_finite() {
                continue;
            }
            for (j, &d) in base_row.iter().enumerate() {
                // NaN (excluded pair) fails both comparisons.
                let via = ds + dst_reach[j] + tau;
                if via < d {
                    total += 2;
                } else if via == d {
                    total += 1;
                }
            }
        }
        total
    }

    /// Advantage of `peers`, as twice the value.
    pub fn half_units_of(&self, peers: &[NodeId]) -> u64 {
        let (src, dst) = self.reach(peers);
        self.half_units(&src, &dst)
    }

    pub fn value_of(&self, peers: &[NodeId]) -> f64 {
        self.half_units_of(peers) as f64 / 2.0
    }

    pub fn evaluate(&self, peers: &[NodeId]) -> Result<AdvantageResult> {
        for &p in peers {
            if p.index() >= self.node_count {
                return Err(Error::NodeOutOfRange { node: p.index(), node_count: self.node_count });
            }
        }
        let (src, dst) = self.reach(peers);
        let mut shortcut_pairs = Vec::new();
        let mut tie_pairs = Vec::new();
        for (i, &s) in self.sources.iter().enumerate() {
            for (j, &t) in self.destinations.iter().enumerate() {
                let d = self.base[i][j];
                let via = src[i] + dst[j] + self.tau;
                if via < d {
                    shortcut_pairs.push((s, t));
                } else if via == d {
                    tie_pairs.push((s, t));
                }
            }
        }
        let half_units = 2 * shortcut_pairs.len() as u64 + tie_pairs.len() as u64;
        Ok(AdvantageResult { half_units, shortcut_pairs, tie_pairs })
    }

    fn selection(&self, peers: Vec<NodeId>) -> Selection {
        let result = self.evaluate(&peers).expect("selector peers are in range");
        Selection { placement: AgentPlacement::new(peers, self.tau), result }
    }

    /// Best unordered pair `{x, y}`; ties go to the lexicographically smallest.
    fn best_pair(&self) -> (u64, NodeId, NodeId) {
        let n = self.node_count;
        (0..n)
            .into_par_iter()
            .filter_map(|x| {
                let vx = NodeId::new(x);
                let reach_x = self.reach(&[vx]);
                let mut best: Option<(u64, usize)> = None;
                let mut src = vec![0.0; self.sources.len()];
                let mut dst = vec![0.0; self.destinations.len()];
                for y in (x + 1)..n {
                    for (i, row) in self.source_rows.iter().enumerate() {
                        src[i] = reach_x.0[i].min(row[y]);
                    }
                    for (j, row) in self.dest_rows.iter().enumerate() {
                        dst[j] = reach_x.1[j].min(row[y]);
                    }
                    let v = self.half_units(&src, &dst);
                    if best.is_none_or(|(bv, _)| v > bv) {
                        best = Some((v, y));
                    }
                }
                best.map(|(v, y)| (v, vx, NodeId::new(y)))
            })
            .reduce_with(|a, b| {
                if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                    b
                } else {
                    a
                }
            })
            .expect("at least two nodes")
    }

    /// Greedy peer selection: exhaustive best pair, then one best node per step.
    /// Ties go to the lowest node id. Returns the chosen peers in the order
    /// they were added, with the advantage (in half-units) after each step
    /// from the pair onwards.
    pub fn greedy_trace(&self, k: usize) -> Result<(Vec<NodeId>, Vec<u64>)> {
        if k < 2 {
            return Err(Error::invalid("greedy selection needs k >= 2"));
        }
        if k > self.node_count {
            return Err(Error::invalid(format!(
                "k = {k} exceeds node count {}",
                self.node_count
            )));
        }
        let (v0, x, y) = self.best_pair();
        let mut peers = vec![x, y];
        let mut trace = vec![v0];
        let mut chosen = vec![false; self.node_count];
        chosen[x.index()] = true;
        chosen[y.index()] = true;
        let mut reach = self.reach(&peers);
        while peers.len() < k {
            let best = (0..self.node_count)
                .into_par_iter()
                .filter(|&z| !chosen[z])
                .map(|z| {
                    let (s, d) = self.extend_reach(&reach, NodeId::new(z));
                    (self.half_units(&s, &d), z)
                })
                .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
                .expect("k <= node count leaves a candidate");
            let z = NodeId::new(best.1);
            chosen[best.1] = true;
            reach = self.extend_reach(&reach, z);
            peers.push(z);
            trace.push(best.0);
        }
        Ok((peers, trace))
    }

    pub fn greedy(&self, k: usize) -> Result<Selection> {
        let (peers, _) = self.greedy_trace(k)?;
        Ok(self.selection(peers))
    }

    /// Exact optimum over all k-subsets; ties go to the lexicographically
    /// smallest subset.
    pub fn brute_force(&self, k: usize, cap: u128) -> Result<Selection> {
        let n = self.node_count;
        if k == 0 || k > n {
            return Err(Error::invalid(format!("k = {k} must lie in [1, {n}]")));
        }
        let combinations = binomial(n as u128, k as u128);
        if combinations > cap {
            return Err(Error::InstanceTooLarge { combinations, cap });
        }
        let best = (0..=(n - k))
            .into_par_iter()
            .map(|first| {
                let mut chosen = vec![NodeId::new(first)];
                let reach = self.reach(&chosen);
                let mut best: Option<(u64, Vec<NodeId>)> = None;
                self.enumerate(first + 1, k, &mut chosen, &reach, &mut best);
                best.expect("every first element has a completion")
            })
            .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
            .expect("non-empty range");
        Ok(self.selection(best.1))
    }

    fn enumerate(
        &self,
        next: usize,
        k: usize,
        chosen: &mut Vec<NodeId>,
        reach: &(Vec<f64>, Vec<f64>),
        best: &mut Option<(u64, Vec<NodeId>)>,
    ) {
        if chosen.len() == k {
            let v = self.half_units(&reach.0, &reach.1);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                *best = Some((v, chosen.clone()));
            }
            return;
        }
        let remaining = k - chosen.len();
        for z in next..=(self.node_count - remaining) {
            let v = NodeId::new(z);
            let extended = self.extend_reach(reach, v);
            chosen.push(v);
            self.enumerate(z + 1, k, chosen, &extended, best);
            chosen.pop();
        }
    }
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Advantage of `placement` for the pairs in `sd`. An empty peer set yields 0.
pub fn adversarial_advantage(
    topology: &Topology,
    sd: &SourceDestSpec,
    placement: &AgentPlacement,
) -> Result<AdvantageResult> {
    AdvantageEvaluator::new(topology, sd, placement.tau)?.evaluate(&placement.peers)
}

pub fn greedy_select(topology: &Topology, sd: &SourceDestSpec, k: usize, tau: f64) -> Result<Selection> {
    AdvantageEvaluator::new(topology, sd, tau)?.greedy(k)
}

pub fn brute_force_select(
    topology: &Topology,
    sd: &SourceDestSpec,
    k: usize,
    tau: f64,
) -> Result<Selection> {
    brute_force_select_capped(topology, sd, k, tau, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_select_capped(
    topology: &Topology,
    sd: &SourceDestSpec,
    k: usize,
    tau: f64,
    cap: u128,
) -> Result<Selection> {
    AdvantageEvaluator::new(topology, sd, tau)?.brute_force(k, cap)
}

/// `k` distinct nodes drawn uniformly without replacement, sorted ascending.
pub fn random_select(topology: &Topology, k: usize, tau: f64, seed: u64) -> Result<AgentPlacement> {
    let n = topology.node_count();
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds node count {n}")));
    }
    let mut rng = seed::rng(seed);
    let mut peers: Vec<NodeId> = index::sample(&mut rng, n, k).into_iter().map(NodeId::new).collect();
    peers.sort_unstable();
    Ok(AgentPlacement::new(peers, tau))
}

/// Sum over pairs of `min_u d(s, u) + min_u d(u, t)`.
pub fn aggregate_triangular_latency(
    topology: &Topology,
    pairs: &[(NodeId, NodeId)],
    placement: &AgentPlacement,
) -> Result<f64> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    if placement.peers.is_empty() {
        return Err(Error::invalid("aggregate triangular latency needs at least one peer"));
    }
    for &p in &placement.peers {
        topology.check_node(p)?;
    }
    let endpoints: BTreeSet<NodeId> = pairs.iter().flat_map(|&(s, t)| [s, t]).collect();
    let endpoints: Vec<NodeId> = endpoints.into_iter().collect();
    let dist = topology.shortest_distances(&endpoints)?;
    let nearest = |v: NodeId| -> f64 {
        let row = dist.row(v).expect("endpoint row computed");
        placement.peers.iter().map(|p| row[p.index()]).fold(f64::INFINITY, f64::min)
    };
    Ok(pairs.iter().map(|&(s, t)| nearest(s) + nearest(t)).sum())
}

/// Set-cover instance over elements `0..element_count`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCoverInstance {
    pub element_count: usize,
    pub subsets: Vec<BTreeSet<usize>>,
}

impl SetCoverInstance {
    pub fn new(element_count: usize, subsets: Vec<BTreeSet<usize>>) -> Result<Self> {
        let inst = SetCoverInstance { element_count, subsets };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.element_count == 0 || self.subsets.is_empty() {
            return Err(Error::invalid("set-cover instance needs elements and subsets"));
        }
        let mut covered = vec![false; self.element_count];
        for (j, subset) in self.subsets.iter().enumerate() {
            for &e in subset {
                if e >= self.element_count {
                    return Err(Error::invalid(format!("subset {j} names unknown element {e}")));
                }
                covered[e] = true;
            }
        }
        if let Some(e) = covered.iter().position(|&c| !c) {
            return Err(Error::invalid(format!("element {e} is in no subset")));
        }
        Ok(())
    }

    /// Text form: first line `p q`, then `q` lines of 1-based element indices.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty instance".into() })?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: hline, message: format!("bad header: {e}") })?;
        let [p, q] = nums[..] else {
            return Err(Error::Parse { line: hline, message: "header must be 'p q'".into() });
        };
        let mut subsets = Vec::with_capacity(q);
        for (line, body) in lines {
            let mut subset = BTreeSet::new();
            for tok in body.split_whitespace() {
                let e: usize = tok
                    .parse()
                    .map_err(|e| Error::Parse { line, message: format!("bad element '{tok}': {e}") })?;
                if e == 0 || e > p {
                    return Err(Error::Parse { line, message: format!("element {e} outside 1..={p}") });
                }
                subset.insert(e - 1);
            }
            subsets.push(subset);
        }
        if subsets.len() != q {
            return Err(Error::Parse {
                line: hline,
                message: format!("header announces {q} subsets, found {}", subsets.len()),
            });
        }
        SetCoverInstance::new(p, subsets)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.element_count, self.subsets.len());
        for s in &self.subsets {
            let items: Vec<String> = s.iter().map(|e| (e + 1).to_string()).collect();
            out.push_str(&items.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn union_size(&self, chosen: &[usize]) -> usize {
        chosen.iter().flat_map(|&j| self.subsets[j].iter()).collect::<BTreeSet<_>>().len()
    }
}

/// Graph produced from a set-cover instance.
///
/// Node layout: `center` = 0, element `i` = `1 + i`, subset node `minus[j]`
/// adjacent to its elements and to `plus[j]`, which is adjacent to the center.
#[derive(Clone, Debug)]
pub struct SetCoverReduction {
    pub topology: Topology,
    pub sd: SourceDestSpec,
    pub tau: f64,
    pub center: NodeId,
    pub elements: Vec<NodeId>,
    pub minus: Vec<NodeId>,
    pub plus: Vec<NodeId>,
}

impl SetCoverReduction {
    /// Peer set `{c} ∪ {minus[j] : j ∈ chosen}`.
    pub fn placement_for(&self, chosen: &[usize]) -> AgentPlacement {
        let mut peers = vec![self.center];
        peers.extend(chosen.iter().map(|&j| self.minus[j]));
        AgentPlacement::new(peers, self.tau)
    }
}

pub const SET_COVER_TAU: f64 = 1.99;

pub fn build_setcover_reduction(instance: &SetCoverInstance) -> Result<SetCoverReduction> {
    instance.validate()?;
    let p = instance.element_count;
    let q = instance.subsets.len();
    let center = NodeId(0);
    let elements: Vec<NodeId> = (0..p).map(|i| NodeId::new(1 + i)).collect();
    let minus: Vec<NodeId> = (0..q).map(|j| NodeId::new(1 + p + j)).collect();
    let plus: Vec<NodeId> = (0..q).map(|j| NodeId::new(1 + p + q + j)).collect();
    let mut topology = Topology::empty(1 + p + 2 * q);
    for (j, subset) in instance.subsets.iter().enumerate() {
        for &e in subset {
            topology.add_edge(elements[e], minus[j], 1.0)?;
        }
        topology.add_edge(minus[j], plus[j], 1.0)?;
        topology.add_edge(plus[j], center, 1.0)?;
    }
    let sd = SourceDestSpec::new(elements.clone(), vec![center])?;
    Ok(SetCoverReduction { topology, sd, tau: SET_COVER_TAU, center, elements, minus, plus })
}

/// Tree on which greedy selection is arbitrarily worse than optimal.
///
/// Realisation for parameter `l`, unit weights, `tau` = 3.99:
///
/// * center `z`;
/// * a source branch `z - a - b - g` (source `g` three hops out);
/// * `2l` hub branches `z - h_i`, each `h_i` carrying three destination leaves;
/// * `l` mixed branches `z - m_i` with two leaves, source `s_i` and
///   destination `r_i`.
///
/// `{g, h_i}` shortcuts exactly the three pairs `(g, leaf of h_i)`, every
/// further hub adds three more, and no other single addition does better, so
/// greedy with `2l` peers reaches `6l - 3`. The set `{s_1..s_l, r_1..r_l}`
/// shortcuts every `(s_i, r_j)` with `i != j`, i.e. `l(l - 1)` pairs.
#[derive(Clone, Debug)]
pub struct GreedyCounterexample {
    pub l: usize,
    pub topology: Topology,
    pub sd: SourceDestSpec,
    pub tau: f64,
    pub center: NodeId,
    pub g: NodeId,
    pub hubs: Vec<NodeId>,
    pub hub_leaves: Vec<[NodeId; 3]>,
    pub mixed: Vec<NodeId>,
    pub s: Vec<NodeId>,
    pub r: Vec<NodeId>,
}

impl GreedyCounterexample {
    /// Greedy's value with `2l` peers.
    pub fn greedy_value(&self) -> u64 {
        6 * self.l as u64 - 3
    }

    /// Value of the `{s, r}` placement.
    pub fn alternative_value(&self) -> u64 {
        (self.l * (self.l - 1)) as u64
    }

    pub fn alternative_placement(&self) -> AgentPlacement {
        let mut peers = self.s.clone();
        peers.extend_from_slice(&self.r);
        AgentPlacement::new(peers, self.tau)
    }
}

pub const COUNTEREXAMPLE_TAU: f64 = 3.99;

pub fn build_greedy_counterexample(l: usize) -> Result<GreedyCounterexample> {
    if l < 2 {
        return Err(Error::invalid("counterexample needs l >= 2"));
    }
    let mut t = Topology::empty(0);
    let edge = |t: &mut Topology, a: NodeId, b: NodeId| t.add_edge(a, b, 1.0);
    let center = t.add_node();
    let a = t.add_node();
    let b = t.add_node();
    let g = t.add_node();
    edge(&mut t, center, a)?;
    edge(&mut t, a, b)?;
    edge(&mut t, b, g)?;
    let mut hubs = Vec::with_capacity(2 * l);
    let mut hub_leaves = Vec::with_capacity(2 * l);
    for _ in 0..2 * l {
        let h = t.add_node();
        edge(&mut t, center, h)?;
        let mut leaves = [h; 3];
        for leaf in &mut leaves {
            *leaf = t.add_node();
            edge(&mut t, h, *leaf)?;
        }
        hubs.push(h);
        hub_leaves.push(leaves);
    }
    let (mut mixed, mut s, mut r) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..l {
        let m = t.add_node();
        let si = t.add_node();
        let ri = t.add_node();
        edge(&mut t, center, m)?;
        edge(&mut t, m, si)?;
        edge(&mut t, m, ri)?;
        mixed.push(m);
        s.push(si);
        r.push(ri);
    }
    let mut sources = vec![g];
    sources.extend_from_slice(&s);
    let mut destinations: Vec<NodeId> = hub_leaves.iter().flatten().copied().collect();
    destinations.extend_from_slice(&r);
    let sd = SourceDestSpec::new(sources, destinations)?;
    Ok(GreedyCounterexample {
        l,
        topology: t,
        sd,
        tau: COUNTEREXAMPLE_TAU,
        center,
        g,
        hubs,
        hub_leaves,
        mixed,
        s,
        r,
    })
}

//! Score-and-evict peering.
//!
//! Each period the agent scores its peers, evicts the worst ones, blocklists
//! them, and refills the freed slots with uniformly sampled nodes that are
//! neither current peers nor blocklisted. Two scoring modes are provided:
//!
//! * timestamp-driven: the average capped delay of a peer's deliveries
//!   relative to the fastest peer ([`score_peer`]), used inside the flooding
//!   simulator;
//! * closed-form: the mean graph distance to sources plus the mean distance
//!   to destinations ([`simplified_score`]), used by
//!   [`peri_triangular_sim`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::advantage::{random_select, AdvantageEvaluator, AgentPlacement};
use crate::error::{Error, Result};
use crate::seed;
use crate::topology::{DistanceMatrix, NodeId, SourceDestSpec, Topology};

/// Application-level identity of a transaction sender.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogicalId(pub u64);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relevance {
    All,
    /// Only transactions whose id is divisible by 4.
    HashSampled,
    /// Only transactions sent by one of these logical ids.
    TargetSet(BTreeSet<LogicalId>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriConfig {
    /// Peers kept after each period (K).
    pub keep_count: usize,
    /// Peer slots (N).
    pub max_peers: usize,
    pub period_length: f64,
    /// Cap on a single measured delay.
    pub delta_max: f64,
    /// Peers replaced per period in the closed-form mode.
    pub replace_count: usize,
    pub relevance: Relevance,
}

impl PeriConfig {
    pub fn new(keep_count: usize, max_peers: usize, period_length: f64, delta_max: f64) -> Self {
        PeriConfig {
            keep_count,
            max_peers,
            period_length,
            delta_max,
            replace_count: max_peers.saturating_sub(keep_count).max(1),
            relevance: Relevance::All,
        }
    }

    /// Closed-form mode for peer budget `k`: keep `k`, replace `ceil(k / 3)`.
    pub fn triangular(k: usize) -> Self {
        let r = k.div_ceil(3);
        PeriConfig {
            keep_count: k,
            max_peers: k + r,
            period_length: 1.0,
            delta_max: f64::INFINITY,
            replace_count: r,
            relevance: Relevance::All,
        }
    }

    pub fn with_relevance(mut self, relevance: Relevance) -> Self {
        self.relevance = relevance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.keep_count == 0 || self.keep_count > self.max_peers {
            return Err(Error::invalid(format!(
                "need 0 < keep_count ({}) <= max_peers ({})",
                self.keep_count, self.max_peers
            )));
        }
        if !(self.delta_max > 0.0) {
            return Err(Error::invalid("delta_max must be positive"));
        }
        if !(self.period_length > 0.0 && self.period_length.is_finite()) {
            return Err(Error::invalid("period_length must be positive and finite"));
        }
        if self.replace_count == 0 {
            return Err(Error::invalid("replace_count must be at least 1"));
        }
        Ok(())
    }
}

/// Arrival times of one transaction at the agent, per delivering peer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TxObservation {
    pub tx_id: u64,
    pub source: LogicalId,
    /// Peers missing from the map never delivered (arrival = infinity).
    pub arrivals: BTreeMap<NodeId, f64>,
}

impl TxObservation {
    pub fn first_arrival(&self) -> f64 {
        self.arrivals.values().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn arrival(&self, peer: NodeId) -> f64 {
        self.arrivals.get(&peer).copied().unwrap_or(f64::INFINITY)
    }
}

impl Relevance {
    pub fn matches(&self, tx_id: u64, source: LogicalId) -> bool {
        match self {
            Relevance::All => true,
            Relevance::HashSampled => tx_id.is_multiple_of(4),
            Relevance::TargetSet(targets) => targets.contains(&source),
        }
    }
}

pub fn relevant(tx: &TxObservation, config: &PeriConfig) -> bool {
    config.relevance.matches(tx.tx_id, tx.source)
}

/// Average capped slowdown of `peer` relative to the first delivery.
///
/// The average runs over every relevant transaction that some peer delivered;
/// a transaction `peer` missed contributes the cap. Returns `None` when
/// `peer` delivered none of them.
pub fn score_peer(observations: &[TxObservation], peer: NodeId, config: &PeriConfig) -> Option<f64> {
    let mut delivered_any = false;
    let mut sum = 0.0;
    let mut count = 0usize;
    for tx in observations.iter().filter(|tx| relevant(tx, config)) {
        let first = tx.first_arrival();
        if !first.is_finite() {
            continue;
        }
        let own = tx.arrival(peer);
        delivered_any |= own.is_finite();
        sum += (own - first).min(config.delta_max);
        count += 1;
    }
    delivered_any.then(|| sum / count as f64)
}

/// Fraction of a period below which a peer is never judged.
pub const EXCUSAL_FRACTION: f64 = 0.5;

/// A peer is excused when it has no score this period or was connected for
/// less than half of it.
pub fn is_excused(
    peer: NodeId,
    connected_fraction: f64,
    observations: &[TxObservation],
    config: &PeriConfig,
) -> bool {
    connected_fraction < EXCUSAL_FRACTION || score_peer(observations, peer, config).is_none()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriState {
    /// Current peers, oldest first.
    peers: Vec<NodeId>,
    blocklist: BTreeSet<NodeId>,
    /// Blocklist in insertion order, for recycling the oldest entries.
    block_order: VecDeque<NodeId>,
    /// Scores from the last step; excused peers are absent.
    pub scores: BTreeMap<NodeId, f64>,
    pub period: u64,
    /// Peers that are never evicted.
    pub pinned: BTreeSet<NodeId>,
}

impl PeriState {
    pub fn new() -> Self {
        PeriState::default()
    }

    pub fn with_peers(peers: impl IntoIterator<Item = NodeId>) -> Self {
        let mut state = PeriState::new();
        for p in peers {
            state.add_peer(p);
        }
        state
    }

    pub fn peers(&self) -> &[NodeId] {
        &self.peers
    }

    pub fn blocklist(&self) -> &BTreeSet<NodeId> {
        &self.blocklist
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.peers.contains(&v)
    }

    /// Adds `v` unless it is already a peer or blocklisted.
    pub fn add_peer(&mut self, v: NodeId) -> bool {
        if self.contains(v) || self.blocklist.contains(&v) {
            return false;
        }
        self.peers.push(v);
        true
    }

    /// Drops `v` without blocklisting it (e.g. the remote side hung up).
    pub fn drop_peer(&mut self, v: NodeId) -> bool {
        let before = self.peers.len();
        self.peers.retain(|&p| p != v);
        self.peers.len() != before
    }

    fn block(&mut self, v: NodeId) {
        if self.blocklist.insert(v) {
            self.block_order.push_back(v);
        }
    }

    /// Releases the oldest half (rounded up) of the blocklist. Returns how
    /// many entries were released.
    pub fn recycle_blocklist(&mut self) -> usize {
        let count = self.block_order.len().div_ceil(2);
        for _ in 0..count {
            if let Some(v) = self.block_order.pop_front() {
                self.blocklist.remove(&v);
            }
        }
        count
    }

    /// Evicts according to precomputed scores (`None` = excused) and returns
    /// the evicted peers, worst first.
    pub fn apply_scores(&mut self, scores: &BTreeMap<NodeId, Option<f64>>, config: &PeriConfig) -> Vec<NodeId> {
        let excused = self
            .peers
            .iter()
            .filter(|p| scores.get(p).copied().flatten().is_none())
            .count();
        let budget = config.max_peers.saturating_sub(config.keep_count).saturating_sub(excused);
        self.scores = self
            .peers
            .iter()
            .filter_map(|p| scores.get(p).copied().flatten().map(|s| (*p, s)))
            .collect();
        // Worst score first; on equal scores the most recently added goes first.
        let mut candidates: Vec<(usize, NodeId, f64)> = self
            .peers
            .iter()
            .enumerate()
            .filter(|(_, p)| !self.pinned.contains(p))
            .filter_map(|(pos, &p)| self.scores.get(&p).map(|&s| (pos, p, s)))
            .collect();
        candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(b.0.cmp(&a.0)));
        let evicted: Vec<NodeId> = candidates.into_iter().take(budget).map(|(_, p, _)| p).collect();
        for &v in &evicted {
            self.drop_peer(v);
            self.block(v);
        }
        self.period += 1;
        evicted
    }

    /// The `k` best-scored peers; equal scores favour the longer-held peer.
    pub fn best(&self, scores: &dyn Fn(NodeId) -> f64, k: usize) -> Vec<NodeId> {
        let mut ranked: Vec<(usize, NodeId, f64)> =
            self.peers.iter().enumerate().map(|(pos, &p)| (pos, p, scores(p))).collect();
        ranked.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
        ranked.into_iter().take(k).map(|(_, p, _)| p).collect()
    }
}

/// Per-period inputs for the timestamp-driven step.
pub struct PeriodObservations<'a> {
    pub observations: &'a [TxObservation],
    /// Fraction of the period each peer was connected; peers absent from the
    /// map count as connected throughout.
    pub connected_fraction: &'a BTreeMap<NodeId, f64>,
}

/// One period of the timestamp-driven loop: score, excuse, evict, blocklist.
pub fn peri_step(
    mut state: PeriState,
    period: &PeriodObservations<'_>,
    config: &PeriConfig,
) -> (PeriState, Vec<NodeId>) {
    let scores: BTreeMap<NodeId, Option<f64>> = state
        .peers
        .iter()
        .map(|&p| {
            let fraction = period.connected_fraction.get(&p).copied().unwrap_or(1.0);
            let score = if fraction < EXCUSAL_FRACTION {
                None
            } else {
                score_peer(period.observations, p, config)
            };
            (p, score)
        })
        .collect();
    let evicted = state.apply_scores(&scores, config);
    (state, evicted)
}

/// Source of replacement peers.
pub trait PeerSampler {
    /// A node that is neither a current peer nor blocklisted, or `None` when
    /// no such node exists.
    fn sample(&mut self, state: &PeriState) -> Option<NodeId>;
}

/// Uniform draw over `0..node_count` minus peers, blocklist and `excluded`.
pub struct UniformSampler {
    node_count: usize,
    excluded: BTreeSet<NodeId>,
    rng: ChaCha8Rng,
}

impl UniformSampler {
    pub fn new(node_count: usize, excluded: BTreeSet<NodeId>, seed: u64) -> Self {
        UniformSampler { node_count, excluded, rng: seed::rng(seed) }
    }
}

impl PeerSampler for UniformSampler {
    fn sample(&mut self, state: &PeriState) -> Option<NodeId> {
        let pool: Vec<NodeId> = (0..self.node_count)
            .map(NodeId::new)
            .filter(|v| !self.excluded.contains(v) && !state.blocklist.contains(v) && !state.contains(*v))
            .collect();
        if pool.is_empty() {
            None
        } else {
            Some(pool[self.rng.random_range(0..pool.len())])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefillOutcome {
    pub added: Vec<NodeId>,
    /// The candidate pool ran dry before all slots were filled.
    pub exhausted: bool,
}

/// Fills free slots up to `max_peers` from `sampler`.
pub fn refill_peers(state: &mut PeriState, sampler: &mut dyn PeerSampler, config: &PeriConfig) -> RefillOutcome {
    let mut added = Vec::new();
    while state.peers.len() < config.max_peers {
        match sampler.sample(state) {
            Some(v) if state.add_peer(v) => added.push(v),
            _ => return RefillOutcome { added, exhausted: true },
        }
    }
    RefillOutcome { added, exhausted: false }
}

/// `sum_s weight_s * d(s, v)` over the given weighted nodes.
pub fn weighted_distance_score(distances: &DistanceMatrix, v: NodeId, weights: &[(NodeId, f64)]) -> Result<f64> {
    let mut total = 0.0;
    for &(s, w) in weights {
        let d = distances
            .get(s, v)
            .ok_or_else(|| Error::invalid(format!("no distance row for node {s}")))?;
        total += w * d;
    }
    Ok(total)
}

/// Mean distance from the sources plus mean distance from the destinations.
pub fn simplified_score(distances: &DistanceMatrix, v: NodeId, sd: &SourceDestSpec) -> Result<f64> {
    let equal = |set: &[NodeId]| -> Vec<(NodeId, f64)> {
        let w = 1.0 / set.len() as f64;
        set.iter().map(|&s| (s, w)).collect()
    };
    Ok(weighted_distance_score(distances, v, &equal(&sd.sources))?
        + weighted_distance_score(distances, v, &equal(&sd.destinations))?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: usize,
    pub advantage: f64,
    pub kept_hub_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriSimResult {
    /// The `k` kept peers after the last period.
    pub placement: AgentPlacement,
    pub trajectory: Vec<PeriodRecord>,
    /// Number of times the blocklist had to be recycled.
    pub recycles: usize,
}

impl TriSimResult {
    pub fn final_advantage(&self) -> Option<f64> {
        self.trajectory.last().map(|r| r.advantage)
    }
}

/// Closed-form Peri for the shortcut-advantage objective.
///
/// The agent holds `k + ceil(k / 3)` peers. Every period it refills free
/// slots uniformly from nodes that are neither peers nor blocklisted, ranks
/// peers by [`simplified_score`], records the advantage of the `k` best, and
/// evicts and blocklists the rest. When no candidate is left, the oldest
/// half of the blocklist is released.
pub fn peri_triangular_sim(
    topology: &Topology,
    sd: &SourceDestSpec,
    k: usize,
    periods: usize,
    tau: f64,
    seed: u64,
) -> Result<TriSimResult> {
    if k < 2 {
        return Err(Error::invalid("peri simulation needs k >= 2"));
    }
    let config = PeriConfig::triangular(k);
    let n = topology.node_count();
    if config.max_peers > n {
        return Err(Error::invalid(format!(
            "{} peer slots exceed node count {n}",
            config.max_peers
        )));
    }
    let evaluator = AdvantageEvaluator::new(topology, sd, tau)?;
    let distances = topology.shortest_distances(&sd.endpoints())?;
    let scores: Vec<f64> = topology
        .nodes()
        .map(|v| simplified_score(&distances, v, sd))
        .collect::<Result<_>>()?;
    let score_of = |v: NodeId| scores[v.index()];

    let initial = random_select(topology, config.max_peers, tau, seed::derive(seed, seed::stream::RANDOM_PEERS))?;
    let mut state = PeriState::with_peers(initial.peers);
    let mut sampler = UniformSampler::new(n, BTreeSet::new(), seed::derive(seed, seed::stream::PERI));
    let mut trajectory = Vec::with_capacity(periods);
    let mut recycles = 0;
    let mut kept = state.best(&score_of, k);

    for period in 0..periods {
        loop {
            let outcome = refill_peers(&mut state, &mut sampler, &config);
            if !outcome.exhausted || state.recycle_blocklist() == 0 {
                break;
            }
            recycles += 1;
        }
        kept = state.best(&score_of, k);
        let hubs = kept.iter().filter(|&&v| topology.is_hub(v)).count();
        trajectory.push(PeriodRecord {
            period,
            advantage: evaluator.value_of(&kept),
            kept_hub_fraction: hubs as f64 / kept.len() as f64,
        });
        let period_scores: BTreeMap<NodeId, Option<f64>> =
            state.peers().iter().map(|&p| (p, Some(score_of(p)))).collect();
        state.apply_scores(&period_scores, &config);
    }
    Ok(TriSimResult { placement: AgentPlacement::new(kept, tau), trajectory, recycles })
}

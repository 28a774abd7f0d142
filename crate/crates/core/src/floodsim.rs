//! Discrete-event transaction flooding.
//!
//! Every emitted transaction floods from its source: a node forwards it once,
//! on first receipt, to every current neighbour except the one it came from.
//! Crossing a link costs `hop_multiplier * w + relay_delay`. Optional churn
//! tears connections down after `Exp(rate)` lifetimes; one endpoint then
//! re-peers with a uniformly chosen node below the peer cap.
//!
//! An optional agent is appended as an extra node. It logs which of its
//! peers delivered each transaction when, and at every period boundary lets
//! its strategy rewrite its peer set. The agent relays everything except,
//! under Peri, the transactions it scores peers on: a relayed transaction is
//! never sent back, so slow peers would otherwise drop out of the comparison.
//! Agent links are not subject to churn and do not count against other
//! nodes' caps, so the traffic and churn traces are identical whatever the
//! agent does.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::peri::{
    peri_step, refill_peers, LogicalId, PeriConfig, PeriState, PeriodObservations, TxObservation,
    UniformSampler,
};
use crate::seed;
use crate::stats::{self, Summary};
use crate::topology::{NodeId, Topology};

/// Weight given to links created during the run (churn replacements and
/// agent links).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LinkLatency {
    Constant(f64),
    /// Nodes sit at points of the unit square; a link costs
    /// `base + scale * euclidean distance`.
    Plane { positions: Vec<[f64; 2]>, base: f64, scale: f64 },
}

impl LinkLatency {
    fn between(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        match self {
            LinkLatency::Constant(w) => *w,
            LinkLatency::Plane { base, scale, .. } => base + scale * ((a[0] - b[0]).hypot(a[1] - b[1])),
        }
    }

    fn position(&self, v: usize) -> [f64; 2] {
        match self {
            LinkLatency::Constant(_) => [0.0, 0.0],
            LinkLatency::Plane { positions, .. } => positions[v],
        }
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> f64 {
        self.between(self.position(u.index()), self.position(v.index()))
    }
}

/// Places the nodes uniformly in the unit square and reweights every edge by
/// the plane latency, so that link weights obey the triangle inequality.
pub fn plane_latency(topology: &Topology, base: f64, scale: f64, seed: u64) -> Result<(Topology, LinkLatency)> {
    if !(base > 0.0) || !(scale >= 0.0) {
        return Err(Error::invalid("plane latency needs base > 0 and scale >= 0"));
    }
    let mut rng = seed::rng(seed);
    let positions: Vec<[f64; 2]> = (0..topology.node_count()).map(|_| [rng.random(), rng.random()]).collect();
    let latency = LinkLatency::Plane { positions, base, scale };
    let mut out = Topology::empty(topology.node_count());
    for (u, v, _) in topology.edges() {
        out.add_edge(u, v, latency.weight(u, v))?;
    }
    Ok((out, latency))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Forwarding {
    All,
    /// Forward to this many uniformly chosen eligible neighbours.
    Subset(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChurnConfig {
    /// Teardown rate of each connection.
    pub rate: f64,
    /// Peer cap for re-peering.
    pub max_peers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Strategy {
    /// Uniform random peers, never changed.
    Baseline,
    /// Every period, drop `N - K` random peers and refill uniformly.
    RandomRepeer,
    Peri,
    Static(Vec<NodeId>),
}

impl Strategy {
    pub fn name(&self) -> String {
        match self {
            Strategy::Baseline => "baseline".into(),
            Strategy::RandomRepeer => "random-repeer".into(),
            Strategy::Peri => "peri".into(),
            Strategy::Static(_) => "static".into(),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" => Ok(Strategy::Baseline),
            "random-repeer" | "random_repeer" | "random" => Ok(Strategy::RandomRepeer),
            "peri" => Ok(Strategy::Peri),
            other => {
                let list = other
                    .strip_prefix("static:")
                    .ok_or_else(|| Error::invalid(format!("unknown strategy '{s}'")))?;
                let peers = list
                    .split(['+', ' '])
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<u32>().map(NodeId).map_err(|e| Error::invalid(format!("bad peer '{t}': {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Strategy::Static(peers))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub strategy: Strategy,
    /// Peer budget and period settings; `max_peers` is the agent's degree.
    pub peri: PeriConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub topology: Topology,
    pub latency: LinkLatency,
    /// Per-node emission weights.
    pub source_weights: Vec<f64>,
    /// Transactions per time unit.
    pub tx_rate: f64,
    pub relay_delay: f64,
    pub hop_multiplier: f64,
    pub forwarding: Forwarding,
    pub churn: Option<ChurnConfig>,
    pub duration: f64,
    /// Transactions emitted earlier than this are not reported.
    pub measure_from: f64,
    pub observers: Vec<NodeId>,
    pub agent: Option<AgentConfig>,
}

pub const DEFAULT_HOP_MULTIPLIER: f64 = 3.0;

impl SimConfig {
    /// Pure flooding on a static topology with uniform sources.
    pub fn new(topology: Topology, tx_rate: f64, duration: f64) -> Self {
        let n = topology.node_count();
        SimConfig {
            topology,
            latency: LinkLatency::Constant(1.0),
            source_weights: vec![1.0; n],
            tx_rate,
            relay_delay: 0.0,
            hop_multiplier: 1.0,
            forwarding: Forwarding::All,
            churn: None,
            duration,
            measure_from: 0.0,
            observers: Vec::new(),
            agent: None,
        }
    }

    pub fn with_agent(mut self, strategy: Strategy, peri: PeriConfig) -> Self {
        self.agent = Some(AgentConfig { strategy, peri });
        self
    }

    /// Node id the agent gets in reports.
    pub fn agent_id(&self) -> Option<NodeId> {
        self.agent.as_ref().map(|_| NodeId::new(self.topology.node_count()))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.topology.node_count();
        if n < 2 {
            return Err(Error::invalid("simulation needs at least two nodes"));
        }
        if self.source_weights.len() != n {
            return Err(Error::invalid(format!(
                "{} source weights for {n} nodes",
                self.source_weights.len()
            )));
        }
        if self.source_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite())
            || self.source_weights.iter().all(|w| *w == 0.0)
        {
            return Err(Error::invalid("source weights must be non-negative, finite and not all zero"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration must be positive and finite"));
        }
        if !(self.tx_rate > 0.0 && self.tx_rate.is_finite()) {
            return Err(Error::invalid("tx_rate must be positive and finite"));
        }
        if !(self.hop_multiplier >= 1.0) || !(self.relay_delay >= 0.0) {
            return Err(Error::invalid("need hop_multiplier >= 1 and relay_delay >= 0"));
        }
        if let Forwarding::Subset(0) = self.forwarding {
            return Err(Error::invalid("forwarding subset size must be at least 1"));
        }
        if let LinkLatency::Plane { positions, .. } = &self.latency {
            if positions.len() != n {
                return Err(Error::invalid("plane latency needs one position per node"));
            }
        }
        if let Some(churn) = &self.churn {
            if !(churn.rate > 0.0) || churn.max_peers == 0 {
                return Err(Error::invalid("churn needs rate > 0 and max_peers > 0"));
            }
        }
        for &o in &self.observers {
            self.topology.check_node(o)?;
        }
        if let Some(agent) = &self.agent {
            agent.peri.validate()?;
            if agent.peri.max_peers > n {
                return Err(Error::invalid(format!(
                    "agent wants {} peers but the network has {n} nodes",
                    agent.peri.max_peers
                )));
            }
            if agent.strategy == Strategy::Peri && agent.peri.delta_max >= agent.peri.period_length {
                return Err(Error::invalid("peri in the simulator needs delta_max < period_length"));
            }
            if let Strategy::Static(peers) = &agent.strategy {
                for &p in peers {
                    self.topology.check_node(p)?;
                }
            }
        }
        if !self.topology.is_connected() {
            return Err(Error::invalid("topology must be connected"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub tx_id: u64,
    pub source: NodeId,
    pub observer: NodeId,
    pub emitted_at: f64,
    /// Travel time to the observer; `None` when the transaction never arrived.
    pub latency: Option<f64>,
}

impl Sample {
    pub fn arrival(&self) -> Option<f64> {
        self.latency.map(|l| self.emitted_at + l)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    /// Ordered by transaction id, then observer.
    pub samples: Vec<Sample>,
    pub agent: Option<NodeId>,
    pub agent_final_peers: Vec<NodeId>,
    pub periods: u64,
    pub transactions: u64,
}

impl LatencyReport {
    /// `(tx, observer)` pairs that never received the transaction.
    pub fn missing(&self) -> usize {
        self.samples.iter().filter(|s| s.latency.is_none()).count()
    }

    pub fn latencies(&self, observer: NodeId, source: Option<NodeId>) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.observer == observer && source.is_none_or(|src| s.source == src))
            .filter_map(|s| s.latency)
            .collect()
    }

    pub fn latency_of(&self, tx_id: u64, observer: NodeId) -> Option<f64> {
        self.samples
            .binary_search_by(|s| (s.tx_id, s.observer).cmp(&(tx_id, observer)))
            .ok()
            .and_then(|i| self.samples[i].latency)
    }

    pub fn summary(&self) -> BTreeMap<NodeId, Summary> {
        let mut per: BTreeMap<NodeId, Vec<f64>> = BTreeMap::new();
        for s in &self.samples {
            if let Some(l) = s.latency {
                per.entry(s.observer).or_default().push(l);
            }
        }
        per.into_iter().map(|(o, xs)| (o, Summary::of(&xs))).collect()
    }
}

#[derive(Clone, Copy, Debug)]
enum Event {
    Emit { tx: u32 },
    Deliver { tx: u32, from: u32, to: u32, latency: f64 },
    Teardown { edge: u32 },
    PeriodEnd,
}

struct Scheduled {
    time: f64,
    /// Travel time of a delivery, so that copies of one transaction are
    /// processed in exact latency order even when absolute times round equal.
    latency: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.latency.total_cmp(&self.latency))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Link {
    a: u32,
    b: u32,
    weight: f64,
    alive: bool,
}

struct TxState {
    source: u32,
    emitted_at: f64,
    seen: Vec<bool>,
    /// First arrival per observer slot.
    arrivals: Vec<Option<f64>>,
}

/// Arrival times at the agent, per delivering peer, of a transaction whose
/// first copy reached the agent in the current period.
struct AgentLog {
    source: u32,
    first: f64,
    arrivals: BTreeMap<NodeId, f64>,
}

struct Sim<'a> {
    config: &'a SimConfig,
    n: usize,
    links: Vec<Link>,
    adjacency: Vec<Vec<u32>>,
    base_degree: Vec<usize>,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    txs: Vec<TxState>,
    observer_slot: Vec<Option<usize>>,
    observers: Vec<NodeId>,
    churn_rng: ChaCha8Rng,
    forward_rng: ChaCha8Rng,
    agent_rng: ChaCha8Rng,
    agent_position: [f64; 2],
    agent_state: PeriState,
    agent_links: BTreeMap<NodeId, u32>,
    agent_log: BTreeMap<u32, AgentLog>,
    periods: u64,
}

impl<'a> Sim<'a> {
    fn agent_index(&self) -> Option<u32> {
        self.config.agent.as_ref().map(|_| self.n as u32)
    }

    fn push(&mut self, time: f64, latency: f64, event: Event) {
        self.seq += 1;
        self.heap.push(Scheduled { time, latency, seq: self.seq, event });
    }

    fn add_link(&mut self, a: u32, b: u32, weight: f64) -> u32 {
        let id = self.links.len() as u32;
        self.links.push(Link { a, b, weight, alive: true });
        self.adjacency[a as usize].push(id);
        self.adjacency[b as usize].push(id);
        id
    }

    fn remove_link(&mut self, id: u32) {
        let link = &mut self.links[id as usize];
        link.alive = false;
        let (a, b) = (link.a as usize, link.b as usize);
        self.adjacency[a].retain(|&e| e != id);
        self.adjacency[b].retain(|&e| e != id);
    }

    fn other(&self, id: u32, v: u32) -> u32 {
        let l = &self.links[id as usize];
        if l.a == v { l.b } else { l.a }
    }

    fn connected(&self, a: u32, b: u32) -> bool {
        self.adjacency[a as usize].iter().any(|&e| self.other(e, a) == b)
    }

    fn schedule_teardown(&mut self, edge: u32, now: f64) {
        if let Some(churn) = self.config.churn {
            let life = Exp::new(churn.rate).expect("validated rate").sample(&mut self.churn_rng);
            self.push(now + life, 0.0, Event::Teardown { edge });
        }
    }

    fn receive(&mut self, tx: u32, from: Option<u32>, node: u32, now: f64, latency: f64) {
        let agent = self.agent_index();
        if let (true, Some(from)) = (Some(node) == agent, from) {
            let state = &self.txs[tx as usize];
            if !state.seen[node as usize] {
                let source = state.source;
                self.agent_log.insert(tx, AgentLog { source, first: now, arrivals: BTreeMap::new() });
            }
            if let Some(log) = self.agent_log.get_mut(&tx) {
                log.arrivals.entry(NodeId(from)).or_insert(now);
            }
        }
        let state = &mut self.txs[tx as usize];
        if state.seen[node as usize] {
            return;
        }
        state.seen[node as usize] = true;
        if let Some(slot) = self.observer_slot[node as usize] {
            state.arrivals[slot] = Some(latency);
        }
        if Some(node) == agent && self.withholds(tx) {
            return;
        }
        let mut targets: Vec<(u32, f64)> = self.adjacency[node as usize]
            .iter()
            .map(|&e| (self.other(e, node), self.links[e as usize].weight))
            .filter(|&(v, _)| Some(v) != from)
            .collect();
        if let (Forwarding::Subset(k), false) = (self.config.forwarding, Some(node) == agent) {
            if targets.len() > k {
                targets = index::sample(&mut self.forward_rng, targets.len(), k)
                    .into_iter()
                    .map(|i| targets[i])
                    .collect();
            }
        }
        let emitted = self.txs[tx as usize].emitted_at;
        for (v, w) in targets {
            let lat = latency + (self.config.hop_multiplier * w + self.config.relay_delay);
            self.push(emitted + lat, lat, Event::Deliver { tx, from: node, to: v, latency: lat });
        }
    }

    /// The transaction matters to the Peri agent's scoring.
    fn scored(&self, tx: u32) -> bool {
        match &self.config.agent {
            Some(AgentConfig { strategy: Strategy::Peri, peri }) => {
                peri.relevance.matches(tx as u64, LogicalId(self.txs[tx as usize].source as u64))
            }
            _ => false,
        }
    }

    fn withholds(&self, tx: u32) -> bool {
        self.scored(tx)
    }

    /// Whether flooding `tx` can affect anything reported.
    fn observable(&self, tx: u32) -> bool {
        self.txs[tx as usize].emitted_at >= self.config.measure_from || self.scored(tx)
    }

    fn teardown(&mut self, edge: u32, now: f64) {
        if !self.links[edge as usize].alive {
            return;
        }
        let (a, b) = (self.links[edge as usize].a, self.links[edge as usize].b);
        self.remove_link(edge);
        self.base_degree[a as usize] -= 1;
        self.base_degree[b as usize] -= 1;
        let cap = self.config.churn.expect("churn enabled").max_peers;
        let endpoint = if self.churn_rng.random::<bool>() { a } else { b };
        let candidates: Vec<u32> = (0..self.n as u32)
            .filter(|&v| v != endpoint && self.base_degree[v as usize] < cap && !self.connected(endpoint, v))
            .collect();
        if candidates.is_empty() {
            return;
        }
        let v = candidates[self.churn_rng.random_range(0..candidates.len())];
        let w = self.config.latency.weight(NodeId(endpoint), NodeId(v));
        let id = self.add_link(endpoint, v, w);
        self.base_degree[endpoint as usize] += 1;
        self.base_degree[v as usize] += 1;
        self.schedule_teardown(id, now);
    }

    fn agent_weight(&self, v: NodeId) -> f64 {
        self.config.latency.between(self.agent_position, self.config.latency.position(v.index()))
    }

    fn connect_agent(&mut self, v: NodeId) {
        let a = self.n as u32;
        let w = self.agent_weight(v);
        let id = self.add_link(a, v.0, w);
        self.agent_links.insert(v, id);
    }

    fn disconnect_agent(&mut self, v: NodeId) {
        if let Some(id) = self.agent_links.remove(&v) {
            self.remove_link(id);
        }
    }

    fn sync_agent_links(&mut self) {
        let wanted: BTreeSet<NodeId> = self.agent_state.peers().iter().copied().collect();
        let current: Vec<NodeId> = self.agent_links.keys().copied().collect();
        for v in current {
            if !wanted.contains(&v) {
                self.disconnect_agent(v);
            }
        }
        for &v in self.agent_state.peers().to_vec().iter() {
            if !self.agent_links.contains_key(&v) {
                self.connect_agent(v);
            }
        }
    }

    fn period_end(&mut self, now: f64) {
        let agent = self.config.agent.as_ref().expect("period events only with an agent");
        self.periods += 1;
        // A transaction is scored in the period its first copy arrived, and
        // only if the whole capped comparison window fits in that period.
        let log = std::mem::take(&mut self.agent_log);
        let cutoff = now - agent.peri.delta_max;
        match agent.strategy {
            Strategy::Baseline | Strategy::Static(_) => {}
            Strategy::RandomRepeer => {
                let mut peers = self.agent_state.peers().to_vec();
                peers.shuffle(&mut self.agent_rng);
                let drop = agent.peri.max_peers.saturating_sub(agent.peri.keep_count);
                for v in peers.into_iter().take(drop) {
                    self.agent_state.drop_peer(v);
                }
                self.refill(&agent.peri, false);
            }
            Strategy::Peri => {
                let observations: Vec<TxObservation> = log
                    .into_iter()
                    .filter(|(_, l)| l.first <= cutoff)
                    .map(|(tx, l)| TxObservation {
                        tx_id: tx as u64,
                        source: LogicalId(l.source as u64),
                        arrivals: l.arrivals,
                    })
                    .collect();
                let fractions = BTreeMap::new();
                let state = std::mem::take(&mut self.agent_state);
                let (state, _) = peri_step(
                    state,
                    &PeriodObservations { observations: &observations, connected_fraction: &fractions },
                    &agent.peri,
                );
                self.agent_state = state;
                self.refill(&agent.peri, true);
            }
        }
        self.sync_agent_links();
    }

    fn refill(&mut self, config: &PeriConfig, respect_blocklist: bool) {
        let mut sampler = UniformSampler::new(self.n, BTreeSet::new(), self.agent_rng.random());
        let outcome = refill_peers(&mut self.agent_state, &mut sampler, config);
        if outcome.exhausted && respect_blocklist && self.agent_state.recycle_blocklist() > 0 {
            refill_peers(&mut self.agent_state, &mut sampler, config);
        }
    }
}

/// Runs one simulation. The same `(config, seed)` always yields the same
/// report.
pub fn run_flood_sim(config: &SimConfig, seed: u64) -> Result<LatencyReport> {
    config.validate()?;
    let n = config.topology.node_count();
    let with_agent = config.agent.is_some();
    let total_nodes = n + usize::from(with_agent);

    let mut observers: Vec<NodeId> = config.observers.clone();
    if let Some(a) = config.agent_id() {
        observers.push(a);
    }
    observers.sort_unstable();
    observers.dedup();
    let mut observer_slot = vec![None; total_nodes];
    for (i, o) in observers.iter().enumerate() {
        observer_slot[o.index()] = Some(i);
    }

    let mut agent_rng = seed::rng(seed::derive(seed, seed::stream::AGENT));
    let agent_position = [agent_rng.random(), agent_rng.random()];
    let mut sim = Sim {
        config,
        n,
        links: Vec::new(),
        adjacency: vec![Vec::new(); total_nodes],
        base_degree: vec![0; n],
        heap: BinaryHeap::new(),
        seq: 0,
        txs: Vec::new(),
        observer_slot,
        observers: observers.clone(),
        churn_rng: seed::rng(seed::derive(seed, seed::stream::CHURN)),
        forward_rng: seed::rng(seed::derive(seed, seed::stream::FORWARDING)),
        agent_rng,
        agent_position,
        agent_state: PeriState::new(),
        agent_links: BTreeMap::new(),
        agent_log: BTreeMap::new(),
        periods: 0,
    };

    for (u, v, w) in config.topology.edges() {
        let id = sim.add_link(u.0, v.0, w);
        sim.base_degree[u.index()] += 1;
        sim.base_degree[v.index()] += 1;
        sim.schedule_teardown(id, 0.0);
    }

    // Traffic trace.
    let mut traffic = seed::rng(seed::derive(seed, seed::stream::TRAFFIC));
    let gap = Exp::new(config.tx_rate).expect("validated rate");
    let pick = WeightedIndex::new(&config.source_weights).map_err(|e| Error::invalid(e.to_string()))?;
    let mut t = gap.sample(&mut traffic);
    while t < config.duration {
        let source = pick.sample(&mut traffic) as u32;
        let tx = sim.txs.len() as u32;
        sim.txs.push(TxState {
            source,
            emitted_at: t,
            seen: Vec::new(),
            arrivals: vec![None; observers.len()],
        });
        sim.push(t, 0.0, Event::Emit { tx });
        t += gap.sample(&mut traffic);
    }

    if let Some(agent) = &config.agent {
        let initial: Vec<NodeId> = match &agent.strategy {
            Strategy::Static(peers) => peers.clone(),
            _ => index::sample(&mut sim.agent_rng, n, agent.peri.max_peers)
                .into_iter()
                .map(NodeId::new)
                .collect(),
        };
        sim.agent_state = PeriState::with_peers(initial);
        sim.sync_agent_links();
        if agent.peri.period_length < config.duration {
            sim.push(agent.peri.period_length, 0.0, Event::PeriodEnd);
        }
    }

    while let Some(Scheduled { time, event, .. }) = sim.heap.pop() {
        match event {
            Event::Emit { tx } => {
                if !sim.observable(tx) {
                    continue;
                }
                sim.txs[tx as usize].seen = vec![false; total_nodes];
                let source = sim.txs[tx as usize].source;
                sim.receive(tx, None, source, time, 0.0);
            }
            Event::Deliver { tx, from, to, latency } => sim.receive(tx, Some(from), to, time, latency),
            Event::Teardown { edge } => {
                if time < config.duration {
                    sim.teardown(edge, time);
                }
            }
            Event::PeriodEnd => {
                sim.period_end(time);
                let next = time + config.agent.as_ref().expect("agent").peri.period_length;
                if next < config.duration {
                    sim.push(next, 0.0, Event::PeriodEnd);
                }
            }
        }
    }

    let mut samples = Vec::new();
    for (i, tx) in sim.txs.iter().enumerate() {
        if tx.emitted_at < config.measure_from {
            continue;
        }
        for (slot, &observer) in sim.observers.iter().enumerate() {
            samples.push(Sample {
                tx_id: i as u64,
                source: NodeId(tx.source),
                observer,
                emitted_at: tx.emitted_at,
                latency: tx.arrivals[slot],
            });
        }
    }
    let mut agent_final_peers = sim.agent_state.peers().to_vec();
    agent_final_peers.sort_unstable();
    Ok(LatencyReport {
        samples,
        agent: config.agent_id(),
        agent_final_peers,
        periods: sim.periods,
        transactions: sim.txs.len() as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectLatency {
    /// Mean latency from the target; `None` when the target sent nothing.
    pub targeted: Option<f64>,
    /// Mean latency over all transactions.
    pub global: f64,
    pub per_source: BTreeMap<NodeId, f64>,
    pub missing: usize,
}

pub fn direct_latencies(report: &LatencyReport, agent: NodeId, target: Option<NodeId>) -> Result<DirectLatency> {
    let mine: Vec<&Sample> = report.samples.iter().filter(|s| s.observer == agent).collect();
    if mine.is_empty() {
        return Err(Error::invalid(format!("node {agent} is not an observer in this report")));
    }
    let mut per: BTreeMap<NodeId, Vec<f64>> = BTreeMap::new();
    let mut all = Vec::new();
    for s in &mine {
        if let Some(l) = s.latency {
            per.entry(s.source).or_default().push(l);
            all.push(l);
        }
    }
    let per_source: BTreeMap<NodeId, f64> = per.iter().map(|(k, v)| (*k, stats::mean(v))).collect();
    Ok(DirectLatency {
        targeted: target.and_then(|t| per_source.get(&t).copied()),
        global: stats::mean(&all),
        per_source,
        missing: mine.len() - all.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Predicate {
    True,
    False,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangularLatency {
    /// `L_s(a) + L_t(a)`.
    pub latency: f64,
    /// Whether the agent-free latency from `s` to `t` exceeds `latency`.
    pub front_run: Predicate,
    /// Without the agent, `t` never received anything from `s`.
    pub disconnected: bool,
}

/// Triangular latency of `agent` for the pair `(s, t)`, assuming targeted
/// latency is symmetric. `companion` is a run of the same traffic without
/// the agent, with `t` as an observer.
pub fn triangular_targeted_latency(
    report: &LatencyReport,
    agent: NodeId,
    s: NodeId,
    t: NodeId,
    companion: Option<&LatencyReport>,
) -> Result<TriangularLatency> {
    let direct = direct_latencies(report, agent, None)?;
    let ls = direct.per_source.get(&s).copied();
    let lt = direct.per_source.get(&t).copied();
    let (Some(ls), Some(lt)) = (ls, lt) else {
        return Err(Error::invalid(format!("no measured latency from {s} or {t} at the agent")));
    };
    let latency = ls + lt;
    let Some(companion) = companion else {
        return Ok(TriangularLatency { latency, front_run: Predicate::Unknown, disconnected: false });
    };
    let sent: Vec<&Sample> = companion.samples.iter().filter(|x| x.observer == t && x.source == s).collect();
    if sent.is_empty() {
        return Ok(TriangularLatency { latency, front_run: Predicate::Unknown, disconnected: false });
    }
    let arrived: Vec<f64> = sent.iter().filter_map(|x| x.latency).collect();
    if arrived.is_empty() {
        return Ok(TriangularLatency { latency, front_run: Predicate::True, disconnected: true });
    }
    let baseline = stats::mean(&arrived);
    let front_run = if baseline > latency { Predicate::True } else { Predicate::False };
    Ok(TriangularLatency { latency, front_run, disconnected: false })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedDelta {
    pub tx_id: u64,
    pub source: NodeId,
    pub strategy: String,
    pub arrival: Option<f64>,
    /// Latency under this strategy minus latency under the first strategy.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reports: Vec<(String, LatencyReport)>,
    pub deltas: Vec<PairedDelta>,
}

impl Comparison {
    pub fn deltas_for(&self, strategy: &str) -> Vec<f64> {
        self.deltas.iter().filter(|d| d.strategy == strategy).filter_map(|d| d.delta).collect()
    }

    pub fn mean_delta(&self, strategy: &str) -> f64 {
        stats::mean(&self.deltas_for(strategy))
    }

    pub fn report(&self, strategy: &str) -> Option<&LatencyReport> {
        self.reports.iter().find(|(name, _)| name == strategy).map(|(_, r)| r)
    }
}

/// Replays the same traffic and churn for each strategy and pairs every
/// transaction's agent latency against the first strategy.
pub fn run_strategy_comparison(config: &SimConfig, strategies: &[Strategy], seed: u64) -> Result<Comparison> {
    if strategies.len() < 2 {
        return Err(Error::invalid("comparison needs at least two strategies"));
    }
    let agent = config
        .agent
        .as_ref()
        .ok_or_else(|| Error::invalid("comparison needs an agent configuration"))?;
    let agent_id = config.agent_id().expect("agent configured");
    let mut reports = Vec::with_capacity(strategies.len());
    for s in strategies {
        let mut c = config.clone();
        c.agent = Some(AgentConfig { strategy: s.clone(), peri: agent.peri.clone() });
        reports.push((s.name(), run_flood_sim(&c, seed)?));
    }
    let base = &reports[0].1;
    let mut deltas = Vec::new();
    for (name, report) in &reports {
        for sample in report.samples.iter().filter(|x| x.observer == agent_id) {
            let reference = base.latency_of(sample.tx_id, agent_id);
            deltas.push(PairedDelta {
                tx_id: sample.tx_id,
                source: sample.source,
                strategy: name.clone(),
                arrival: sample.arrival(),
                delta: sample.latency.zip(reference).map(|(l, r)| l - r),
            });
        }
    }
    Ok(Comparison { reports, deltas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::nodes;

    #[test]
    fn single_edge_latency() {
        let t = Topology::from_edges(2, &[(0, 1, 10.0)]).unwrap();
        let mut c = SimConfig::new(t, 1.0, 50.0);
        c.source_weights = vec![1.0, 0.0];
        c.observers = nodes(&[1]);
        let r = run_flood_sim(&c, 1).unwrap();
        assert!(r.transactions > 10);
        assert!(r.latencies(NodeId(1), None).iter().all(|&l| l == 10.0));
        assert_eq!(r.missing(), 0);
    }

    #[test]
    fn static_arrivals_equal_dijkstra() {
        let t = Topology::from_edges(5, &[(0, 1, 1.5), (1, 2, 2.25), (0, 2, 4.0), (2, 3, 0.7), (3, 4, 3.1), (1, 4, 9.0)])
            .unwrap();
        let mut c = SimConfig::new(t.clone(), 2.0, 20.0);
        c.observers = t.nodes().collect();
        let r = run_flood_sim(&c, 3).unwrap();
        for s in &r.samples {
            assert_eq!(s.latency, Some(t.dijkstra(s.source)[s.observer.index()]));
        }
    }

    #[test]
    fn weighted_global_latency() {
        // Sources 0 and 2 at distances 3 and 5 from observer 1.
        let t = Topology::from_edges(3, &[(0, 1, 3.0), (1, 2, 5.0)]).unwrap();
        let mut c = SimConfig::new(t, 5.0, 200.0);
        c.source_weights = vec![1.0, 0.0, 1.0];
        c.observers = nodes(&[1]);
        let r = run_flood_sim(&c, 4).unwrap();
        let d = direct_latencies(&r, NodeId(1), Some(NodeId(0))).unwrap();
        assert_eq!(d.targeted, Some(3.0));
        assert_eq!(d.per_source[&NodeId(2)], 5.0);
        let n0 = r.latencies(NodeId(1), Some(NodeId(0))).len() as f64;
        let n2 = r.latencies(NodeId(1), Some(NodeId(2))).len() as f64;
        assert!((d.global - (3.0 * n0 + 5.0 * n2) / (n0 + n2)).abs() < 1e-9);
        assert!(direct_latencies(&r, NodeId(1), Some(NodeId(1))).unwrap().targeted.is_none());
        assert!(direct_latencies(&r, NodeId(0), None).is_err());
    }

    #[test]
    fn multiplier_and_relay() {
        let t = Topology::from_edges(3, &[(0, 1, 2.0), (1, 2, 2.0)]).unwrap();
        let mut c = SimConfig::new(t, 1.0, 10.0);
        c.source_weights = vec![1.0, 0.0, 0.0];
        c.hop_multiplier = 3.0;
        c.relay_delay = 0.5;
        c.observers = nodes(&[2]);
        let r = run_flood_sim(&c, 5).unwrap();
        assert!(r.latencies(NodeId(2), None).iter().all(|&l| l == 13.0));
    }

    #[test]
    fn triangular_predicate() {
        // s=0 and t=1 are five hops apart; the agent links to both with weight 1.
        let t = Topology::path(6);
        let mut c = SimConfig::new(t.clone(), 4.0, 60.0);
        c.source_weights = vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        c.observers = nodes(&[5]);
        let companion = run_flood_sim(&c, 6).unwrap();
        let with_agent = c.clone().with_agent(Strategy::Static(nodes(&[0, 5])), PeriConfig::new(2, 2, 1000.0, 10.0));
        let r = run_flood_sim(&with_agent, 6).unwrap();
        let agent = with_agent.agent_id().unwrap();
        let tri = triangular_targeted_latency(&r, agent, NodeId(0), NodeId(5), Some(&companion)).unwrap();
        assert_eq!(tri.latency, 2.0);
        assert_eq!(tri.front_run, Predicate::True);
        let unknown = triangular_targeted_latency(&r, agent, NodeId(0), NodeId(5), None).unwrap();
        assert_eq!(unknown.front_run, Predicate::Unknown);
    }

    #[test]
    fn disconnected_companion_counts_as_front_run() {
        let r = LatencyReport {
            samples: vec![
                Sample { tx_id: 0, source: NodeId(0), observer: NodeId(3), emitted_at: 0.0, latency: Some(1.0) },
                Sample { tx_id: 1, source: NodeId(1), observer: NodeId(3), emitted_at: 0.0, latency: Some(1.0) },
            ],
            agent: Some(NodeId(3)),
            agent_final_peers: nodes(&[0, 1]),
            periods: 0,
            transactions: 2,
        };
        let companion = LatencyReport {
            samples: vec![Sample { tx_id: 0, source: NodeId(0), observer: NodeId(1), emitted_at: 0.0, latency: None }],
            agent: None,
            agent_final_peers: vec![],
            periods: 0,
            transactions: 1,
        };
        let tri = triangular_targeted_latency(&r, NodeId(3), NodeId(0), NodeId(1), Some(&companion)).unwrap();
        assert_eq!(tri.front_run, Predicate::True);
        assert!(tri.disconnected);
    }

    fn small_agent_config() -> SimConfig {
        let t = crate::topology::generate_graph(&crate::topology::GraphSpec::new(
            crate::topology::GraphModel::ErdosRenyi,
            40,
            4.0,
            2,
        ))
        .unwrap();
        let (t, latency) = plane_latency(&t, 1.0, 10.0, 3).unwrap();
        let mut c = SimConfig::new(t, 0.5, 800.0);
        c.latency = latency;
        c.churn = Some(ChurnConfig { rate: 0.01, max_peers: 12 });
        c.with_agent(Strategy::Baseline, PeriConfig::new(4, 6, 40.0, 15.0))
    }

    #[test]
    fn comparison_against_itself_is_zero() {
        let c = small_agent_config();
        let cmp = run_strategy_comparison(&c, &[Strategy::Baseline, Strategy::Baseline], 7).unwrap();
        assert!(cmp.deltas.iter().all(|d| d.delta.is_none_or(|x| x == 0.0)));
    }

    #[test]
    fn peri_without_steps_matches_baseline() {
        let mut c = small_agent_config();
        c.agent.as_mut().unwrap().peri.period_length = 1e9;
        let cmp = run_strategy_comparison(&c, &[Strategy::Baseline, Strategy::Peri], 8).unwrap();
        assert!(cmp.deltas_for("peri").iter().all(|&x| x == 0.0));
    }

    #[test]
    fn runs_are_deterministic() {
        let mut c = small_agent_config();
        c.agent.as_mut().unwrap().strategy = Strategy::Peri;
        c.forwarding = Forwarding::Subset(2);
        assert_eq!(run_flood_sim(&c, 9).unwrap(), run_flood_sim(&c, 9).unwrap());
    }

    #[test]
    fn peri_changes_peers_each_period() {
        let mut c = small_agent_config();
        c.agent.as_mut().unwrap().strategy = Strategy::Peri;
        let r = run_flood_sim(&c, 10).unwrap();
        assert_eq!(r.periods, 19);
        assert_eq!(r.agent_final_peers.len(), 6);
    }

    #[test]
    fn rejects_invalid_configs() {
        let t = Topology::path(3);
        let mut c = SimConfig::new(t.clone(), 1.0, 10.0);
        c.source_weights = vec![0.0; 3];
        assert!(run_flood_sim(&c, 0).is_err());
        let mut c = SimConfig::new(t.clone(), 1.0, 0.0);
        assert!(run_flood_sim(&c, 0).is_err());
        c.duration = 1.0;
        c.hop_multiplier = 0.5;
        assert!(run_flood_sim(&c, 0).is_err());
        let split = Topology::from_unit_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(run_flood_sim(&SimConfig::new(split, 1.0, 1.0), 0).is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in ["baseline", "peri", "random-repeer"] {
            assert_eq!(s.parse::<Strategy>().unwrap().name(), s);
        }
        assert_eq!("static:1+4".parse::<Strategy>().unwrap(), Strategy::Static(nodes(&[1, 4])));
        assert!("nope".parse::<Strategy>().is_err());
    }
}

//! Experiment sweeps and their CSV output.
//!
//! Instance `seed` builds its graph, hubs and destination set from
//! [`seed::derive`] sub-streams of that seed, so every emitted number is a
//! function of the configuration alone. Wall-clock timings are the one
//! exception and are only written when asked for.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advantage::{random_select, AdvantageEvaluator, DEFAULT_ENUMERATION_CAP};
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::floodsim::{plane_latency, ChurnConfig, Forwarding, SimConfig, Strategy};
use crate::peri::{peri_triangular_sim, LogicalId, PeriConfig, Relevance};
use crate::seed;
use crate::stats;
use crate::topology::{
    enrich_with_hubs, generate_graph, import_edge_list, snowball_sample, GraphModel, GraphSpec, NodeId,
    SourceDestSpec, Topology,
};

pub const RESULTS_SCHEMA: &str = "# perisim results v1";
pub const SUMMARY_SCHEMA: &str = "# perisim summary v1";
pub const DEFAULT_K_LIST: [usize; 7] = [2, 4, 6, 9, 12, 16, 20];
pub const DEFAULT_PERI_PERIODS: usize = 800;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Greedy,
    Peri,
    Random,
    BruteForce,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "greedy" => Ok(Method::Greedy),
            "peri" => Ok(Method::Peri),
            "random" => Ok(Method::Random),
            "brute" | "brute-force" | "bruteforce" => Ok(Method::BruteForce),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Greedy => "greedy",
            Method::Peri => "peri",
            Method::Random => "random",
            Method::BruteForce => "brute-force",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    Generate { model: GraphModel, node_count: usize, avg_degree: f64, rewire_prob: f64 },
    /// Edge list file; with `snowball`, each instance is a snowball sample
    /// of that many nodes.
    Import { path: PathBuf, snowball: Option<usize> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub graph: GraphSource,
    pub hub_count: usize,
    pub hub_degree: usize,
    pub dest_fraction: f64,
    pub tau: f64,
    pub methods: Vec<Method>,
    pub k_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub periods: usize,
    pub timing: bool,
}

impl ExperimentConfig {
    /// Hub-enriched scale-free sweep over the given instance seeds.
    pub fn hub_sweep(seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            id: "hub-sweep".into(),
            graph: GraphSource::Generate {
                model: GraphModel::BarabasiAlbert,
                node_count: 300,
                avg_degree: 4.0,
                rewire_prob: 0.1,
            },
            hub_count: 20,
            hub_degree: 30,
            dest_fraction: 0.1,
            tau: 0.0,
            methods: vec![Method::Greedy, Method::Peri, Method::Random],
            k_list: DEFAULT_K_LIST.to_vec(),
            seeds,
            periods: DEFAULT_PERI_PERIODS,
            timing: false,
        }
    }

    pub const KEYS: [&'static str; 16] = [
        "id", "model", "nodes", "avg_degree", "rewire_prob", "import", "snowball", "hubs", "hub_degree",
        "dest_fraction", "tau", "methods", "k_list", "seeds", "periods", "timing",
    ];

    /// Reads a sweep from key-values, starting from [`Self::hub_sweep`]
    /// defaults. `seeds` is mandatory.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        kv.check_known(&Self::KEYS)?;
        let seeds: Vec<u64> = kv
            .get_list("seeds")?
            .ok_or_else(|| Error::invalid("'seeds' is required (e.g. seeds = 0..25)"))?;
        let mut c = ExperimentConfig::hub_sweep(seeds);
        if let Some(id) = kv.raw("id") {
            c.id = id.to_string();
        }
        if let Some(path) = kv.raw("import") {
            c.graph = GraphSource::Import { path: PathBuf::from(path), snowball: kv.get("snowball")? };
        } else if let GraphSource::Generate { model, node_count, avg_degree, rewire_prob } = &mut c.graph {
            *model = kv.get_or("model", *model)?;
            *node_count = kv.get_or("nodes", *node_count)?;
            *avg_degree = kv.get_or("avg_degree", *avg_degree)?;
            *rewire_prob = kv.get_or("rewire_prob", *rewire_prob)?;
        }
        c.hub_count = kv.get_or("hubs", c.hub_count)?;
        c.hub_degree = kv.get_or("hub_degree", c.hub_degree)?;
        c.dest_fraction = kv.get_or("dest_fraction", c.dest_fraction)?;
        c.tau = kv.get_or("tau", c.tau)?;
        if let Some(m) = kv.get_list("methods")? {
            c.methods = m;
        }
        if let Some(k) = kv.get_list("k_list")? {
            c.k_list = k;
        }
        c.periods = kv.get_or("periods", c.periods)?;
        c.timing = kv.get_or("timing", c.timing)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dest_fraction > 0.0 && self.dest_fraction <= 1.0) {
            return Err(Error::invalid(format!("dest_fraction must be in (0, 1], got {}", self.dest_fraction)));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seed list must not be empty"));
        }
        if self.methods.is_empty() || self.k_list.is_empty() {
            return Err(Error::invalid("need at least one method and one k"));
        }
        if self.k_list.iter().any(|&k| k < 2) {
            return Err(Error::invalid("every k must be at least 2"));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::invalid("tau must be non-negative"));
        }
        Ok(())
    }
}

/// One graph instance of a sweep.
#[derive(Clone, Debug)]
pub struct Instance {
    pub topology: Topology,
    pub sd: SourceDestSpec,
}

pub fn build_instance(config: &ExperimentConfig, instance_seed: u64) -> Result<Instance> {
    let base = match &config.graph {
        GraphSource::Generate { model, node_count, avg_degree, rewire_prob } => {
            let mut spec = GraphSpec::new(
                *model,
                *node_count,
                *avg_degree,
                seed::derive(instance_seed, seed::stream::GRAPH),
            );
            spec.rewire_prob = *rewire_prob;
            generate_graph(&spec)?
        }
        GraphSource::Import { path, snowball } => {
            let text = std::fs::read_to_string(path)?;
            let imported = import_edge_list(&text)?.topology;
            match snowball {
                Some(size) => snowball_sample(&imported, *size, seed::derive(instance_seed, seed::stream::GRAPH))?,
                None => imported,
            }
        }
    };
    let topology = enrich_with_hubs(
        &base,
        config.hub_count,
        config.hub_degree,
        seed::derive(instance_seed, seed::stream::HUBS),
    )?;
    let sd = SourceDestSpec::all_to_random_fraction(
        &topology,
        config.dest_fraction,
        seed::derive(instance_seed, seed::stream::DESTINATIONS),
    )?;
    Ok(Instance { topology, sd })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub seed: u64,
    pub method: Method,
    pub k: usize,
    pub metric: String,
    pub value: f64,
    pub seconds: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub k: usize,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn mean(&self, method: Method, k: usize) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.method == method && s.k == k && s.metric == "advantage")
            .map(|s| s.mean)
    }
}

struct Cell {
    method: Method,
    k: usize,
    metrics: Vec<(&'static str, f64)>,
    seconds: f64,
    error: Option<String>,
}

fn run_instance(config: &ExperimentConfig, instance_seed: u64) -> Vec<Cell> {
    let fail_all = |e: Error| -> Vec<Cell> {
        config
            .methods
            .iter()
            .flat_map(|&method| {
                let msg = e.to_string();
                config.k_list.iter().map(move |&k| Cell {
                    method,
                    k,
                    metrics: vec![("advantage", f64::NAN)],
                    seconds: 0.0,
                    error: Some(msg.clone()),
                })
            })
            .collect()
    };
    let instance = match build_instance(config, instance_seed) {
        Ok(i) => i,
        Err(e) => return fail_all(e),
    };
    let evaluator = match AdvantageEvaluator::new(&instance.topology, &instance.sd, config.tau) {
        Ok(ev) => ev,
        Err(e) => return fail_all(e),
    };
    let k_max = config.k_list.iter().copied().max().unwrap_or(2);
    let mut cells = Vec::new();
    for &method in &config.methods {
        // Greedy is incremental, so one run to the largest k serves every k.
        let greedy_trace = if method == Method::Greedy {
            let start = Instant::now();
            Some((evaluator.greedy_trace(k_max), start.elapsed().as_secs_f64()))
        } else {
            None
        };
        for &k in &config.k_list {
            let start = Instant::now();
            let outcome: Result<Vec<(&'static str, f64)>> = match method {
                Method::Greedy => match &greedy_trace {
                    Some((Ok((_, trace)), _)) => Ok(vec![("advantage", trace[k - 2] as f64 / 2.0)]),
                    Some((Err(e), _)) => Err(Error::invalid(e.to_string())),
                    None => unreachable!("trace computed for greedy"),
                },
                Method::Random => random_select(
                    &instance.topology,
                    k,
                    config.tau,
                    seed::derive(seed::derive(instance_seed, seed::stream::RANDOM_PEERS), k as u64),
                )
                .map(|p| vec![("advantage", evaluator.value_of(&p.peers))]),
                Method::Peri => peri_triangular_sim(
                    &instance.topology,
                    &instance.sd,
                    k,
                    config.periods,
                    config.tau,
                    seed::derive(instance_seed, k as u64),
                )
                .map(|r| {
                    let hubs = r.trajectory.last().map_or(f64::NAN, |p| p.kept_hub_fraction);
                    vec![("advantage", evaluator.value_of(&r.placement.peers)), ("kept_hub_fraction", hubs)]
                }),
                Method::BruteForce => evaluator
                    .brute_force(k, DEFAULT_ENUMERATION_CAP)
                    .map(|s| vec![("advantage", s.value())]),
            };
            let seconds = match &greedy_trace {
                Some((_, t)) => *t,
                None => start.elapsed().as_secs_f64(),
            };
            cells.push(match outcome {
                Ok(metrics) => Cell { method, k, metrics, seconds, error: None },
                Err(e) => Cell {
                    method,
                    k,
                    metrics: vec![("advantage", f64::NAN)],
                    seconds,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    cells
}

/// Runs every (method, k, seed) cell. Instances run in parallel; rows come
/// back ordered by method (as configured), k (as configured), then seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let per_seed: Vec<(u64, Vec<Cell>)> =
        config.seeds.par_iter().map(|&s| (s, run_instance(config, s))).collect();
    let mut rows = Vec::new();
    for &method in &config.methods {
        for &k in &config.k_list {
            for (s, cells) in &per_seed {
                for cell in cells.iter().filter(|c| c.method == method && c.k == k) {
                    for &(metric, value) in &cell.metrics {
                        rows.push(ResultRow {
                            experiment: config.id.clone(),
                            seed: *s,
                            method,
                            k,
                            metric: metric.to_string(),
                            value,
                            seconds: config.timing.then_some(cell.seconds),
                            error: cell.error.clone(),
                        });
                    }
                }
            }
        }
    }
    let summary = summarize(&rows);
    Ok(ExperimentResult { rows, summary })
}

fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Method, usize, String)> = Vec::new();
    for r in rows {
        let key = (r.method, r.k, r.metric.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, k, metric)| {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method && r.k == k && r.metric == metric && r.error.is_none())
                .map(|r| r.value)
                .collect();
            SummaryRow {
                method,
                k,
                metric,
                count: values.len(),
                mean: stats::mean(&values),
                std_dev: stats::std_dev(&values),
            }
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn rows_csv(rows: &[ResultRow], timing: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{RESULTS_SCHEMA}");
    let _ = writeln!(
        out,
        "experiment,seed,method,k,metric,value{},error",
        if timing { ",seconds" } else { "" }
    );
    for r in rows {
        let seconds = match (timing, r.seconds) {
            (true, Some(s)) => format!(",{s:.6}"),
            (true, None) => ",".to_string(),
            (false, _) => String::new(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}{},{}",
            csv_field(&r.experiment),
            r.seed,
            r.method,
            r.k,
            r.metric,
            r.value,
            seconds,
            csv_field(r.error.as_deref().unwrap_or(""))
        );
    }
    out
}

pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SUMMARY_SCHEMA}");
    let _ = writeln!(out, "method,k,metric,count,mean,std_dev");
    for s in summary {
        let _ = writeln!(out, "{},{},{},{},{},{}", s.method, s.k, s.metric, s.count, s.mean, s.std_dev);
    }
    out
}

/// Which transactions a Peri agent scores its peers on in a flood scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioRelevance {
    All,
    HashSampled,
    /// Only the victim's transactions.
    Victim,
}

impl FromStr for ScenarioRelevance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(ScenarioRelevance::All),
            "hash" | "hash-sampled" | "sampled" => Ok(ScenarioRelevance::HashSampled),
            "victim" | "target" => Ok(ScenarioRelevance::Victim),
            other => Err(Error::invalid(format!("unknown relevance '{other}'"))),
        }
    }
}

/// Recipe for a seeded flooding simulation with an agent.
#[derive(Clone, Debug, PartialEq)]
pub struct FloodScenario {
    pub model: GraphModel,
    pub node_count: usize,
    pub avg_degree: f64,
    pub hub_count: usize,
    pub hub_degree: usize,
    pub latency_base: f64,
    pub latency_scale: f64,
    pub tx_rate: f64,
    pub relay_delay: f64,
    pub hop_multiplier: f64,
    pub forwarding: Forwarding,
    pub churn_rate: Option<f64>,
    pub max_peers: usize,
    /// Periods before measurement starts.
    pub warmup_periods: usize,
    pub measure_periods: usize,
    pub period_length: f64,
    pub delta_max: f64,
    pub keep: usize,
    pub peers: usize,
    pub relevance: ScenarioRelevance,
    /// Fraction of all transactions sent by the victim; 0 disables it.
    pub victim_share: f64,
    pub strategy: Strategy,
}

impl FloodScenario {
    /// Global-latency setting: hub-enriched scale-free network with churn,
    /// 100 Peri periods before a 10-period measurement window.
    pub fn global_latency() -> Self {
        FloodScenario {
            model: GraphModel::BarabasiAlbert,
            node_count: 300,
            avg_degree: 8.0,
            hub_count: 20,
            hub_degree: 30,
            latency_base: 1.0,
            latency_scale: 20.0,
            tx_rate: 0.25,
            relay_delay: 0.5,
            hop_multiplier: crate::floodsim::DEFAULT_HOP_MULTIPLIER,
            forwarding: Forwarding::All,
            churn_rate: Some(5e-5),
            max_peers: 60,
            warmup_periods: 100,
            measure_periods: 10,
            period_length: 200.0,
            delta_max: 50.0,
            keep: 7,
            peers: 10,
            relevance: ScenarioRelevance::HashSampled,
            victim_share: 0.0,
            strategy: Strategy::Peri,
        }
    }

    /// Targeted setting: one emitting victim whose transactions are the
    /// only relevant ones; nothing is measured, only the final peer set.
    pub fn victim_discovery() -> Self {
        FloodScenario {
            warmup_periods: 60,
            measure_periods: 0,
            relevance: ScenarioRelevance::Victim,
            victim_share: 0.2,
            ..FloodScenario::global_latency()
        }
    }

    pub const KEYS: [&'static str; 23] = [
        "model", "nodes", "avg_degree", "hubs", "hub_degree", "latency_base", "latency_scale", "tx_rate",
        "relay_delay", "hop_multiplier", "forwarding", "churn_rate", "max_peers", "warmup_periods",
        "measure_periods", "period_length", "delta_max", "keep", "peers", "relevance", "victim_share",
        "strategy", "scenario",
    ];

    /// Starts from the scenario named by `scenario` (`global` or `victim`)
    /// and applies the remaining keys.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        kv.check_known(&Self::KEYS)?;
        let mut s = match kv.raw("scenario").unwrap_or("global") {
            "global" => FloodScenario::global_latency(),
            "victim" | "targeted" => FloodScenario::victim_discovery(),
            other => return Err(Error::invalid(format!("unknown scenario '{other}'"))),
        };
        s.model = kv.get_or("model", s.model)?;
        s.node_count = kv.get_or("nodes", s.node_count)?;
        s.avg_degree = kv.get_or("avg_degree", s.avg_degree)?;
        s.hub_count = kv.get_or("hubs", s.hub_count)?;
        s.hub_degree = kv.get_or("hub_degree", s.hub_degree)?;
        s.latency_base = kv.get_or("latency_base", s.latency_base)?;
        s.latency_scale = kv.get_or("latency_scale", s.latency_scale)?;
        s.tx_rate = kv.get_or("tx_rate", s.tx_rate)?;
        s.relay_delay = kv.get_or("relay_delay", s.relay_delay)?;
        s.hop_multiplier = kv.get_or("hop_multiplier", s.hop_multiplier)?;
        if let Some(f) = kv.raw("forwarding") {
            s.forwarding = match f {
                "all" => Forwarding::All,
                n => Forwarding::Subset(
                    n.parse().map_err(|e| Error::invalid(format!("forwarding must be 'all' or a count: {e}")))?,
                ),
            };
        }
        if let Some(c) = kv.raw("churn_rate") {
            s.churn_rate = match c {
                "none" | "off" | "0" => None,
                v => Some(v.parse().map_err(|e| Error::invalid(format!("bad churn_rate '{v}': {e}")))?),
            };
        }
        s.max_peers = kv.get_or("max_peers", s.max_peers)?;
        s.warmup_periods = kv.get_or("warmup_periods", s.warmup_periods)?;
        s.measure_periods = kv.get_or("measure_periods", s.measure_periods)?;
        s.period_length = kv.get_or("period_length", s.period_length)?;
        s.delta_max = kv.get_or("delta_max", s.delta_max)?;
        s.keep = kv.get_or("keep", s.keep)?;
        s.peers = kv.get_or("peers", s.peers)?;
        s.relevance = kv.get_or("relevance", s.relevance)?;
        s.victim_share = kv.get_or("victim_share", s.victim_share)?;
        s.strategy = kv.get_or("strategy", s.strategy)?;
        Ok(s)
    }

    /// Builds the simulation for `seed`; also returns the victim, if any.
    pub fn build(&self, seed_value: u64) -> Result<(SimConfig, Option<NodeId>)> {
        if !(0.0..1.0).contains(&self.victim_share) {
            return Err(Error::invalid("victim_share must lie in [0, 1)"));
        }
        let spec = GraphSpec::new(
            self.model,
            self.node_count,
            self.avg_degree,
            seed::derive(seed_value, seed::stream::GRAPH),
        );
        let graph = generate_graph(&spec)?;
        let graph = enrich_with_hubs(
            &graph,
            self.hub_count,
            self.hub_degree,
            seed::derive(seed_value, seed::stream::HUBS),
        )?;
        let (topology, latency) = plane_latency(
            &graph,
            self.latency_base,
            self.latency_scale,
            seed::derive(seed_value, seed::stream::LINKS),
        )?;
        let n = topology.node_count();
        let victim = (self.victim_share > 0.0).then(|| {
            let mut rng = seed::rng(seed::derive(seed_value, seed::stream::DESTINATIONS));
            NodeId::new(rand::Rng::random_range(&mut rng, 0..n))
        });
        let mut weights = vec![1.0; n];
        if let Some(v) = victim {
            weights[v.index()] = self.victim_share * (n - 1) as f64 / (1.0 - self.victim_share);
        }
        let relevance = match self.relevance {
            ScenarioRelevance::All => Relevance::All,
            ScenarioRelevance::HashSampled => Relevance::HashSampled,
            ScenarioRelevance::Victim => {
                let v = victim.ok_or_else(|| Error::invalid("victim relevance needs victim_share > 0"))?;
                Relevance::TargetSet(BTreeSet::from([LogicalId(v.0 as u64)]))
            }
        };
        let peri = PeriConfig::new(self.keep, self.peers, self.period_length, self.delta_max).with_relevance(relevance);
        let periods = (self.warmup_periods + self.measure_periods) as f64;
        let mut config = SimConfig::new(topology, self.tx_rate, self.period_length * periods);
        config.latency = latency;
        config.source_weights = weights;
        config.relay_delay = self.relay_delay;
        config.hop_multiplier = self.hop_multiplier;
        config.forwarding = self.forwarding;
        config.churn = self.churn_rate.map(|rate| ChurnConfig { rate, max_peers: self.max_peers });
        config.measure_from = self.period_length * self.warmup_periods as f64;
        // A trailing boundary exactly at the end still counts as a period.
        config.duration += self.period_length * 1e-9;
        Ok((config.with_agent(self.strategy.clone(), peri), victim))
    }
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use perisim::advantage::{
    build_greedy_counterexample, build_setcover_reduction, random_select, AdvantageEvaluator, AdvantageResult,
    SetCoverInstance, DEFAULT_ENUMERATION_CAP,
};
use perisim::config::KeyValues;
use perisim::experiment::{
    build_instance, rows_csv, run_experiment, summary_csv, ExperimentConfig, FloodScenario, GraphSource,
};
use perisim::floodsim::{run_flood_sim, run_strategy_comparison, Strategy};
use perisim::liveness::{
    derive_schedule, log_grid, lower_bound_fit, lower_bound_probe, poisson_tail_check, run_trials, LiveNetParams,
    MessageProcess,
};
use perisim::peri::peri_triangular_sim;
use perisim::topology::{
    enrich_with_hubs, generate_graph, import_edge_list, parse_edge_list, snowball_sample, GraphModel, GraphSpec,
    SourceDestSpec, Topology,
};
use perisim::verify::verify_suite;
use perisim::{seed, Error, NodeId};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "perisim", version, about = "Strategic peering and latency-advantage simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, import and transform overlay graphs (edge-list text).
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Adversarial advantage of peer sets.
    #[command(subcommand)]
    Advantage(AdvantageCmd),
    /// Score-and-evict peering.
    #[command(subcommand)]
    Peri(PeriCmd),
    /// Discrete-event flooding simulations.
    #[command(subcommand)]
    Floodsim(FloodCmd),
    /// Victim discovery in a churning network.
    #[command(subcommand)]
    Liveness(LivenessCmd),
    /// Run the self-check battery.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Random graph from a named model.
    Gen {
        #[arg(long, default_value = "ba")]
        model: GraphModel,
        #[arg(long, default_value_t = 300)]
        nodes: usize,
        #[arg(long, default_value_t = 4.0)]
        avg_degree: f64,
        #[arg(long, default_value_t = 0.1)]
        rewire_prob: f64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Relabel an arbitrary edge list densely and keep its largest component.
    Import {
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Append hub nodes wired to random existing nodes.
    Hubs {
        input: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 30)]
        degree: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Breadth-first sample from a random start node.
    Snowball {
        input: PathBuf,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct PairArgs {
    /// Edge list; node ids are its numeric labels.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    /// Explicit destinations; otherwise a random fraction of all nodes.
    #[arg(long, value_delimiter = ',')]
    destinations: Option<Vec<u32>>,
    /// Explicit sources; otherwise every node.
    #[arg(long, value_delimiter = ',')]
    sources: Option<Vec<u32>>,
    #[arg(long, default_value_t = 0.1)]
    dest_fraction: f64,
    /// Seeds the destination draw.
    #[arg(long, default_value_t = 0)]
    dest_seed: u64,
}

#[derive(Subcommand)]
enum AdvantageCmd {
    /// Advantage of an explicit peer set.
    Eval {
        #[command(flatten)]
        pairs: PairArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        peers: Vec<u32>,
        /// Also list shortcut and tie pairs.
        #[arg(long)]
        pairs_detail: bool,
    },
    /// Greedy peer selection.
    Greedy {
        #[command(flatten)]
        pairs: PairArgs,
        #[arg(long)]
        k: usize,
    },
    /// Uniformly random peer set.
    Random {
        #[command(flatten)]
        pairs: PairArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Exhaustive search over all k-subsets.
    Brute {
        #[command(flatten)]
        pairs: PairArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u128,
    },
    /// Greedy against the `{s, r}` placement on the counterexample tree.
    Counterexample {
        #[arg(long)]
        l: usize,
    },
    /// Advantage of every subset collection of a set-cover reduction.
    Setcover {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Methods x k x seeds sweep from a key-value config.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `key=value` overrides, applied after the config file.
        #[arg(long = "set")]
        set: Vec<String>,
        /// Also record wall-clock seconds per row.
        #[arg(long)]
        timing: bool,
        /// Row CSV; the summary goes to `<out>.summary.csv`, or stdout when unset.
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Subcommand)]
enum PeriCmd {
    /// Closed-form Peri on hub-enriched instances; one CSV row per period.
    TriSim {
        #[arg(long, default_value = "ba")]
        model: GraphModel,
        #[arg(long, default_value_t = 300)]
        nodes: usize,
        #[arg(long, default_value_t = 4.0)]
        avg_degree: f64,
        #[arg(long, default_value_t = 20)]
        hubs: usize,
        #[arg(long, default_value_t = 30)]
        hub_degree: usize,
        #[arg(long, default_value_t = 0.1)]
        dest_fraction: f64,
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 800)]
        periods: usize,
        /// Instance seeds, e.g. `0..25` or `1,5,9`.
        #[arg(long)]
        seeds: String,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct FloodArgs {
    /// Key-value scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set")]
    set: Vec<String>,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand)]
enum FloodCmd {
    /// One simulation; one CSV row per (transaction, observer).
    Run {
        #[command(flatten)]
        args: FloodArgs,
        /// Observe every node, not just the agent.
        #[arg(long)]
        all_observers: bool,
    },
    /// Same traffic under several agent strategies, paired against the first.
    Compare {
        #[command(flatten)]
        args: FloodArgs,
        #[arg(long, value_delimiter = ',', default_value = "baseline,peri")]
        strategies: Vec<String>,
    },
}

#[derive(Args)]
struct NetArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.1)]
    q: f64,
    #[arg(long, default_value_t = 5)]
    d: u32,
    #[arg(long, default_value_t = 1)]
    targets: u32,
    /// Model messages as one every `1/nu` instead of Poisson.
    #[arg(long)]
    constant_interarrival: bool,
}

impl NetArgs {
    fn params(&self) -> LiveNetParams {
        let mut p = LiveNetParams::new(self.lambda, self.nu, self.q, self.d);
        p.targets = self.targets;
        if self.constant_interarrival {
            p.process = MessageProcess::ConstantInterarrival;
        }
        p
    }
}

#[derive(Subcommand)]
enum LivenessCmd {
    /// Phase timeouts for a target error.
    Schedule {
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        net: NetArgs,
    },
    /// Monte Carlo success rate of the two-phase schedule.
    Run {
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        net: NetArgs,
    },
    /// Poisson tail bound on a log grid of timeouts.
    Tail {
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, default_value_t = 0.01)]
        dmin: f64,
        #[arg(long, default_value_t = 10000.0)]
        dmax: f64,
        #[arg(long, default_value_t = 60)]
        points: usize,
    },
    /// Empirical rounds needed against the lower-bound strategy.
    LowerBound {
        #[arg(long, default_value_t = 0.1)]
        q: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.2,0.1,0.05,0.02,0.01")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 20000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
    },
}

/// Failure mapped to an exit code.
enum Failure {
    Validation(String),
    Runtime(String),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Disconnected { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Verify) => ExitCode::from(EXIT_VERIFY),
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Graph(cmd) => graph(cmd),
        Command::Advantage(cmd) => advantage(cmd),
        Command::Peri(cmd) => peri(cmd),
        Command::Floodsim(cmd) => floodsim(cmd),
        Command::Liveness(cmd) => liveness(cmd),
        Command::Verify { seed } => {
            let report = verify_suite(seed);
            println!("{report}");
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Verify)
            }
        }
    }
}

fn emit(output: &Output, text: &str) -> CliResult {
    match &output.out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("{text}");
    Ok(())
}

/// Reads an edge list. When the labels are exactly `0..n` they become the
/// node ids, so files written by `graph` subcommands round-trip.
fn load_graph(path: &Path) -> Result<Topology, Failure> {
    let text = fs::read_to_string(path)?;
    let parsed = parse_edge_list(&text)?;
    let n = parsed.labels.len();
    let numeric: Option<Vec<usize>> = parsed.labels.iter().map(|l| l.parse::<usize>().ok().filter(|&x| x < n)).collect();
    let Some(ids) = numeric else {
        return Err(Failure::Validation(format!(
            "{}: labels are not 0..{n}; run `graph import` first",
            path.display()
        )));
    };
    let mut t = Topology::empty(n);
    for (u, v, w) in parsed.topology.edges() {
        t.add_edge(NodeId::new(ids[u.index()]), NodeId::new(ids[v.index()]), w)?;
    }
    Ok(t)
}

fn graph(cmd: GraphCmd) -> CliResult {
    match cmd {
        GraphCmd::Gen { model, nodes, avg_degree, rewire_prob, seed, output } => {
            let mut spec = GraphSpec::new(model, nodes, avg_degree, seed);
            spec.rewire_prob = rewire_prob;
            let t = generate_graph(&spec)?;
            emit(&output, &t.to_edge_list())
        }
        GraphCmd::Import { input, output } => {
            let imported = import_edge_list(&fs::read_to_string(&input)?)?;
            eprintln!(
                "{} nodes, {} edges kept; {} self-loops and {} duplicates skipped",
                imported.topology.node_count(),
                imported.topology.edge_count(),
                imported.skipped_self_loops,
                imported.skipped_duplicates
            );
            emit(&output, &imported.topology.to_edge_list())
        }
        GraphCmd::Hubs { input, count, degree, seed, output } => {
            let t = enrich_with_hubs(&load_graph(&input)?, count, degree, seed)?;
            emit(&output, &t.to_edge_list())
        }
        GraphCmd::Snowball { input, size, seed, output } => {
            let t = snowball_sample(&load_graph(&input)?, size, seed)?;
            emit(&output, &t.to_edge_list())
        }
    }
}

fn pair_setup(args: &PairArgs) -> Result<(Topology, SourceDestSpec), Failure> {
    let t = load_graph(&args.graph)?;
    let ids = |v: &[u32]| v.iter().map(|&x| NodeId(x)).collect::<Vec<_>>();
    let sd = match (&args.sources, &args.destinations) {
        (None, None) => SourceDestSpec::all_to_random_fraction(&t, args.dest_fraction, args.dest_seed)?,
        (src, dst) => SourceDestSpec::new(
            src.as_deref().map_or_else(|| t.nodes().collect(), ids),
            dst.as_deref().map_or_else(|| t.nodes().collect(), ids),
        )?,
    };
    sd.validate(&t)?;
    Ok((t, sd))
}

#[derive(Serialize)]
struct PlacementOut {
    peers: Vec<NodeId>,
    advantage: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    shortcut_pairs: Option<Vec<(NodeId, NodeId)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tie_pairs: Option<Vec<(NodeId, NodeId)>>,
}

fn placement_out(peers: Vec<NodeId>, result: AdvantageResult, detail: bool) -> PlacementOut {
    PlacementOut {
        peers,
        advantage: result.value(),
        shortcut_pairs: detail.then(|| result.shortcut_pairs.clone()),
        tie_pairs: detail.then(|| result.tie_pairs.clone()),
    }
}

fn advantage(cmd: AdvantageCmd) -> CliResult {
    match cmd {
        AdvantageCmd::Eval { pairs, peers, pairs_detail } => {
            let (t, sd) = pair_setup(&pairs)?;
            let ev = AdvantageEvaluator::new(&t, &sd, pairs.tau)?;
            let peers: Vec<NodeId> = peers.into_iter().map(NodeId).collect();
            let result = ev.evaluate(&peers)?;
            emit_json(&placement_out(peers, result, pairs_detail))
        }
        AdvantageCmd::Greedy { pairs, k } => {
            let (t, sd) = pair_setup(&pairs)?;
            let s = AdvantageEvaluator::new(&t, &sd, pairs.tau)?.greedy(k)?;
            emit_json(&placement_out(s.placement.peers, s.result, false))
        }
        AdvantageCmd::Random { pairs, k, seed } => {
            let (t, sd) = pair_setup(&pairs)?;
            let ev = AdvantageEvaluator::new(&t, &sd, pairs.tau)?;
            let p = random_select(&t, k, pairs.tau, seed)?;
            let result = ev.evaluate(&p.peers)?;
            emit_json(&placement_out(p.peers, result, false))
        }
        AdvantageCmd::Brute { pairs, k, cap } => {
            let (t, sd) = pair_setup(&pairs)?;
            let s = AdvantageEvaluator::new(&t, &sd, pairs.tau)?.brute_force(k, cap)?;
            emit_json(&placement_out(s.placement.peers, s.result, false))
        }
        AdvantageCmd::Counterexample { l } => {
            let c = build_greedy_counterexample(l)?;
            let ev = AdvantageEvaluator::new(&c.topology, &c.sd, c.tau)?;
            let greedy = ev.greedy(2 * l)?;
            let alt = c.alternative_placement();
            let alt_value = ev.value_of(&alt.peers);
            #[derive(Serialize)]
            struct Out {
                l: usize,
                nodes: usize,
                greedy: PlacementOut,
                alternative: PlacementOut,
                ratio: f64,
            }
            let ratio = greedy.value() / alt_value;
            emit_json(&Out {
                l,
                nodes: c.topology.node_count(),
                greedy: placement_out(greedy.placement.peers, greedy.result, false),
                alternative: PlacementOut {
                    peers: alt.peers,
                    advantage: alt_value,
                    shortcut_pairs: None,
                    tie_pairs: None,
                },
                ratio,
            })
        }
        AdvantageCmd::Setcover { instance, output } => {
            let inst = SetCoverInstance::parse(&fs::read_to_string(&instance)?)?;
            let q = inst.subsets.len();
            if q > 20 {
                return Err(Failure::Validation(format!("{q} subsets is too many to enumerate")));
            }
            let red = build_setcover_reduction(&inst)?;
            let ev = AdvantageEvaluator::new(&red.topology, &red.sd, red.tau)?;
            let mut out = String::from("collection,advantage,union_size\n");
            let mut mismatches = 0;
            for mask in 0u32..(1 << q) {
                let chosen: Vec<usize> = (0..q).filter(|j| mask & (1 << j) != 0).collect();
                let value = ev.value_of(&red.placement_for(&chosen).peers);
                let union = inst.union_size(&chosen);
                if value != union as f64 {
                    mismatches += 1;
                }
                let label: Vec<String> = chosen.iter().map(usize::to_string).collect();
                out.push_str(&format!("{},{value},{union}\n", label.join(" ")));
            }
            emit(&output, &out)?;
            if mismatches > 0 {
                return Err(Failure::Runtime(format!("{mismatches} collections disagree with their union size")));
            }
            Ok(())
        }
        AdvantageCmd::Sweep { config, set, timing, output } => {
            let kv = load_kv(config.as_deref(), &set)?;
            let mut cfg = ExperimentConfig::from_kv(&kv)?;
            cfg.timing |= timing;
            let result = run_experiment(&cfg)?;
            emit(&output, &rows_csv(&result.rows, cfg.timing))?;
            match &output.out {
                Some(path) => {
                    let mut summary = path.clone().into_os_string();
                    summary.push(".summary.csv");
                    fs::write(summary, summary_csv(&result.summary))?;
                }
                None => print!("{}", summary_csv(&result.summary)),
            }
            match result.failed() {
                0 => Ok(()),
                n => Err(Failure::Runtime(format!("{n} rows failed; see the error column"))),
            }
        }
    }
}

fn load_kv(path: Option<&Path>, overrides: &[String]) -> Result<KeyValues, Failure> {
    let mut kv = match path {
        Some(p) => KeyValues::parse(&fs::read_to_string(p)?)?,
        None => KeyValues::new(),
    };
    for o in overrides {
        kv.set(o)?;
    }
    Ok(kv)
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>, Failure> {
    let mut kv = KeyValues::new();
    kv.insert("seeds", spec);
    Ok(kv.get_list("seeds")?.unwrap_or_default())
}

fn peri(cmd: PeriCmd) -> CliResult {
    let PeriCmd::TriSim {
        model,
        nodes,
        avg_degree,
        hubs,
        hub_degree,
        dest_fraction,
        tau,
        k,
        periods,
        seeds,
        output,
    } = cmd;
    let mut cfg = ExperimentConfig::hub_sweep(parse_seeds(&seeds)?);
    cfg.graph = GraphSource::Generate { model, node_count: nodes, avg_degree, rewire_prob: 0.1 };
    cfg.hub_count = hubs;
    cfg.hub_degree = hub_degree;
    cfg.dest_fraction = dest_fraction;
    cfg.tau = tau;
    cfg.validate()?;
    let mut out = String::from("seed,period,advantage,kept_hub_fraction\n");
    for &s in &cfg.seeds {
        let inst = build_instance(&cfg, s)?;
        let r = peri_triangular_sim(&inst.topology, &inst.sd, k, periods, tau, seed::derive(s, k as u64))?;
        for p in &r.trajectory {
            out.push_str(&format!("{s},{},{},{}\n", p.period, p.advantage, p.kept_hub_fraction));
        }
    }
    emit(&output, &out)
}

fn floodsim(cmd: FloodCmd) -> CliResult {
    match cmd {
        FloodCmd::Run { args, all_observers } => {
            let scenario = FloodScenario::from_kv(&load_kv(args.config.as_deref(), &args.set)?)?;
            let (mut cfg, _) = scenario.build(args.seed)?;
            if all_observers {
                cfg.observers = cfg.topology.nodes().collect();
            }
            let report = run_flood_sim(&cfg, args.seed)?;
            let mut out = String::from("tx_id,source,observer,emitted_at,latency\n");
            for s in &report.samples {
                let lat = s.latency.map_or(String::new(), |l| l.to_string());
                out.push_str(&format!("{},{},{},{},{lat}\n", s.tx_id, s.source, s.observer, s.emitted_at));
            }
            emit(&args.output, &out)
        }
        FloodCmd::Compare { args, strategies } => {
            let scenario = FloodScenario::from_kv(&load_kv(args.config.as_deref(), &args.set)?)?;
            let (cfg, _) = scenario.build(args.seed)?;
            let strategies: Vec<Strategy> =
                strategies.iter().map(|s| s.parse()).collect::<perisim::Result<_>>()?;
            let cmp = run_strategy_comparison(&cfg, &strategies, args.seed)?;
            let agent = cfg.agent_id().expect("scenario always has an agent");
            let mut out = String::from("tx_id,source,observer,strategy,arrival,delta_vs_baseline\n");
            for d in &cmp.deltas {
                let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
                out.push_str(&format!(
                    "{},{},{agent},{},{},{}\n",
                    d.tx_id,
                    d.source,
                    d.strategy,
                    opt(d.arrival),
                    opt(d.delta)
                ));
            }
            emit(&args.output, &out)?;
            for s in strategies.iter().skip(1) {
                eprintln!("mean delta {} vs {}: {:.4}", s.name(), strategies[0].name(), cmp.mean_delta(&s.name()));
            }
            Ok(())
        }
    }
}

fn liveness(cmd: LivenessCmd) -> CliResult {
    match cmd {
        LivenessCmd::Schedule { eps, net } => {
            let params = net.params();
            let s = derive_schedule(eps / params.targets as f64, &params)?;
            #[derive(Serialize)]
            struct Out {
                params: LiveNetParams,
                schedule: perisim::liveness::Schedule,
                total_time: f64,
            }
            emit_json(&Out { params, schedule: s, total_time: params.targets as f64 * s.total_time() })
        }
        LivenessCmd::Run { eps, trials, seed, net } => {
            let params = net.params();
            let summary = run_trials(&params, eps, trials, seed)?;
            emit_json(&summary)
        }
        LivenessCmd::Tail { nu, dmin, dmax, points } => {
            if !(dmin > 0.0 && dmax >= dmin) || points == 0 {
                return Err(Failure::Validation("need 0 < dmin <= dmax and points > 0".into()));
            }
            let witnesses = poisson_tail_check(nu, &log_grid(dmin, dmax, points))?;
            emit_json(&witnesses)
        }
        LivenessCmd::LowerBound { q, eps, trials, seed } => {
            let points = lower_bound_probe(q, &eps, trials, seed)?;
            #[derive(Serialize)]
            struct Out {
                points: Vec<perisim::liveness::LowerBoundPoint>,
                fit: Option<perisim::stats::LinearFit>,
            }
            let fit = lower_bound_fit(&points);
            emit_json(&Out { points, fit })
        }
    }
}

//! Self-check battery behind `perisim verify`.
//!
//! Each check recomputes something two ways, or against a closed form, and
//! reports a one-line outcome. Sizes are chosen so the whole battery runs in
//! a few seconds.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;

use crate::advantage::{
    build_greedy_counterexample, build_setcover_reduction, AdvantageEvaluator, AgentPlacement, SetCoverInstance,
};
use crate::error::Result;
use crate::floodsim::{run_flood_sim, SimConfig};
use crate::liveness::{log_grid, poisson_tail_check, run_trials, LiveNetParams};
use crate::seed;
use crate::topology::{generate_graph, GraphModel, GraphSpec, NodeId, SourceDestSpec, Topology};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark}  {:width$}  {}", c.name, c.detail)?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        write!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

fn outcome(name: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome { name, passed: false, detail: format!("error: {e}") },
    }
}

/// Runs every check with seeds derived from `seed`.
pub fn verify_suite(seed: u64) -> VerifyReport {
    let checks = vec![
        outcome("tie-half-unit", tie_half_unit()),
        outcome("counterexample-equalities", counterexample_equalities()),
        outcome("counterexample-ratio-l7", counterexample_ratio(7)),
        outcome("setcover-reduction", setcover_reduction(seed::derive(seed, 1), 10)),
        outcome("shortest-path-oracle", shortest_path_oracle(seed::derive(seed, 2), 10)),
        outcome("flood-dijkstra-equivalence", flood_dijkstra(seed::derive(seed, 3), 5)),
        outcome("poisson-tail", poisson_tail()),
        outcome("schedule-monte-carlo", schedule_monte_carlo(seed::derive(seed, 4))),
    ];
    VerifyReport { checks }
}

fn tie_half_unit() -> Result<(bool, String)> {
    // 0 - 1 - 2 with unit weights: peers {0, 2} and tau = 2 tie the direct
    // distance, worth half a pair.
    let t = Topology::path(3);
    let sd = SourceDestSpec::new(vec![NodeId(0)], vec![NodeId(2)])?;
    let ev = AdvantageEvaluator::new(&t, &sd, 2.0)?;
    let half = ev.half_units_of(&[NodeId(0), NodeId(2)]);
    Ok((half == 1, format!("half-units {half}, expected 1")))
}

fn counterexample_equalities() -> Result<(bool, String)> {
    let mut bad = Vec::new();
    for l in 2..=6 {
        let c = build_greedy_counterexample(l)?;
        let ev = AdvantageEvaluator::new(&c.topology, &c.sd, c.tau)?;
        let greedy = ev.greedy(2 * l)?.result.half_units();
        let alt = ev.half_units_of(&c.alternative_placement().peers);
        if greedy != 2 * c.greedy_value() || alt != 2 * c.alternative_value() {
            bad.push(format!("l={l}: greedy {} alt {}", greedy as f64 / 2.0, alt as f64 / 2.0));
        }
    }
    let detail = if bad.is_empty() { "l = 2..6 exact".to_string() } else { bad.join("; ") };
    Ok((bad.is_empty(), detail))
}

fn counterexample_ratio(l: usize) -> Result<(bool, String)> {
    let c = build_greedy_counterexample(l)?;
    let ev = AdvantageEvaluator::new(&c.topology, &c.sd, c.tau)?;
    let greedy = ev.greedy(2 * l)?.value();
    let alt = ev.value_of(&c.alternative_placement().peers);
    let ratio = greedy / alt;
    Ok((ratio < 1.0, format!("greedy {greedy} / alternative {alt} = {ratio:.4}")))
}

fn random_setcover(rng: &mut impl Rng) -> Result<SetCoverInstance> {
    let p = rng.random_range(1..=8);
    let q = rng.random_range(1..=6);
    let mut subsets: Vec<BTreeSet<usize>> =
        (0..q).map(|_| (0..p).filter(|_| rng.random_bool(0.4)).collect()).collect();
    // Every element must be coverable and no subset empty.
    for e in 0..p {
        if !subsets.iter().any(|s| s.contains(&e)) {
            subsets[rng.random_range(0..q)].insert(e);
        }
    }
    for s in &mut subsets {
        if s.is_empty() {
            s.insert(rng.random_range(0..p));
        }
    }
    SetCoverInstance::new(p, subsets)
}

fn setcover_reduction(seed_value: u64, instances: usize) -> Result<(bool, String)> {
    let mut rng = seed::rng(seed_value);
    let mut checked = 0usize;
    for _ in 0..instances {
        let inst = random_setcover(&mut rng)?;
        let red = build_setcover_reduction(&inst)?;
        let ev = AdvantageEvaluator::new(&red.topology, &red.sd, red.tau)?;
        let q = inst.subsets.len();
        for mask in 0u32..(1 << q) {
            let chosen: Vec<usize> = (0..q).filter(|j| mask & (1 << j) != 0).collect();
            let placement: AgentPlacement = red.placement_for(&chosen);
            let got = ev.value_of(&placement.peers);
            let want = inst.union_size(&chosen) as f64;
            if got != want {
                return Ok((false, format!("collection {chosen:?}: advantage {got}, union {want}")));
            }
            checked += 1;
        }
    }
    Ok((true, format!("{checked} collections over {instances} instances")))
}

fn weighted_graph(rng: &mut impl Rng, seed_value: u64) -> Result<Topology> {
    let n = rng.random_range(5..=40);
    let base = generate_graph(&GraphSpec::new(GraphModel::ErdosRenyi, n, 4.0, seed_value))?;
    let (base, _) = base.largest_component();
    let mut t = Topology::empty(base.node_count());
    for (u, v, _) in base.edges() {
        t.add_edge(u, v, rng.random_range(1..=9) as f64)?;
    }
    Ok(t)
}

fn floyd_warshall(t: &Topology) -> Vec<Vec<f64>> {
    let n = t.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (u, v, w) in t.edges() {
        let (a, b) = (u.index(), v.index());
        d[a][b] = d[a][b].min(w);
        d[b][a] = d[b][a].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn shortest_path_oracle(seed_value: u64, graphs: usize) -> Result<(bool, String)> {
    let mut rng = seed::rng(seed_value);
    for g in 0..graphs {
        let t = weighted_graph(&mut rng, seed::derive(seed_value, g as u64))?;
        let fw = floyd_warshall(&t);
        let all = t.all_pairs();
        for (s, row) in all.rows() {
            if row != fw[s.index()].as_slice() {
                return Ok((false, format!("graph {g}: row {} differs", s.0)));
            }
        }
    }
    Ok((true, format!("{graphs} integer-weighted graphs")))
}

fn flood_dijkstra(seed_value: u64, graphs: usize) -> Result<(bool, String)> {
    let mut rng = seed::rng(seed_value);
    let mut samples = 0usize;
    for g in 0..graphs {
        let t = weighted_graph(&mut rng, seed::derive(seed_value, g as u64))?;
        let all = t.all_pairs();
        let mut cfg = SimConfig::new(t.clone(), 1.0, 20.0);
        cfg.observers = t.nodes().collect();
        let report = run_flood_sim(&cfg, seed::derive(seed_value, 1000 + g as u64))?;
        for s in &report.samples {
            let want = all.get(s.source, s.observer).expect("source row present");
            if s.latency != Some(want) {
                return Ok((false, format!("graph {g} tx {}: {:?} vs {want}", s.tx_id, s.latency)));
            }
            samples += 1;
        }
    }
    Ok((true, format!("{samples} arrivals equal Dijkstra distances")))
}

fn poisson_tail() -> Result<(bool, String)> {
    let grid = log_grid(1e-2, 1e4, 60);
    let witnesses = poisson_tail_check(1.0, &grid)?;
    let failures = witnesses.iter().filter(|w| !w.holds).count();
    Ok((failures == 0, format!("{} of {} windows violate the bound", failures, witnesses.len())))
}

fn schedule_monte_carlo(seed_value: u64) -> Result<(bool, String)> {
    let eps = 0.1;
    let params = LiveNetParams::new(1.0, 1.0, 0.2, 5);
    let summary = run_trials(&params, eps, 1000, seed_value)?;
    Ok((
        summary.wilson_lower >= 1.0 - eps,
        format!(
            "{}/{} found, Wilson lower {:.4} vs {:.2}",
            summary.successes,
            summary.trials,
            summary.wilson_lower,
            1.0 - eps
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let report = verify_suite(7);
        assert!(report.all_passed(), "{report}");
        assert!(report.to_string().contains("counterexample-ratio-l7"));
    }

    #[test]
    fn l7_ratio_below_one() {
        let (ok, detail) = counterexample_ratio(7).unwrap();
        assert!(ok);
        assert!(detail.contains("39") && detail.contains("42"), "{detail}");
    }
}

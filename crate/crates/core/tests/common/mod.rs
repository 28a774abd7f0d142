//! Reference implementations shared by the integration and acceptance tests.
//! They work on plain matrices and never call into the library's own
//! shortest-path or scoring code.
#![allow(dead_code)]

use perisim::topology::{NodeId, Topology};
use rand::Rng;

pub const INF: f64 = f64::INFINITY;

/// Dense weight matrix of an undirected graph plus `extra` isolated nodes.
pub fn matrix(t: &Topology, extra: usize) -> Vec<Vec<f64>> {
    let n = t.node_count() + extra;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (u, v, w) in t.edges() {
        let (a, b) = (u.index(), v.index());
        d[a][b] = d[a][b].min(w);
        d[b][a] = d[b][a].min(w);
    }
    d
}

pub fn floyd_warshall(mut d: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = d.len();
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == INF {
                continue;
            }
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

pub fn all_pairs(t: &Topology) -> Vec<Vec<f64>> {
    floyd_warshall(matrix(t, 0))
}

/// Advantage in half-units, computed by wiring an explicit agent node to
/// every peer with zero-cost links and reading distances through it.
///
/// A pair (s, t) with s != t and d(s, t) finite scores 2 half-units when
/// d(s, a) + d(a, t) + tau < d(s, t) and 1 when they are equal.
pub fn advantage_oracle(t: &Topology, sources: &[NodeId], dests: &[NodeId], peers: &[NodeId], tau: f64) -> u64 {
    let n = t.node_count();
    let base = all_pairs(t);
    let mut m = matrix(t, 1);
    let a = n;
    for p in peers {
        m[a][p.index()] = 0.0;
        m[p.index()][a] = 0.0;
    }
    let with_agent = floyd_warshall(m);
    let mut half = 0;
    for s in sources {
        for d in dests {
            let (si, di) = (s.index(), d.index());
            if si == di || base[si][di] == INF {
                continue;
            }
            let via = with_agent[si][a] + with_agent[a][di] + tau;
            if via < base[si][di] {
                half += 2;
            } else if via == base[si][di] {
                half += 1;
            }
        }
    }
    half
}

/// Random graph with integer weights in `1..=max_w`, possibly disconnected.
pub fn random_weighted(rng: &mut impl Rng, n: usize, p: f64, max_w: u32) -> Topology {
    let mut t = Topology::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                t.add_edge(NodeId::new(u), NodeId::new(v), rng.random_range(1..=max_w) as f64).unwrap();
            }
        }
    }
    t
}

/// Random connected graph: a random spanning tree plus extra edges.
pub fn random_connected(rng: &mut impl Rng, n: usize, extra_p: f64, max_w: u32) -> Topology {
    let mut t = Topology::empty(n);
    for v in 1..n {
        let u = rng.random_range(0..v);
        t.add_edge(NodeId::new(u), NodeId::new(v), rng.random_range(1..=max_w) as f64).unwrap();
    }
    for u in 0..n {
        for v in u + 1..n {
            if !t.has_edge(NodeId::new(u), NodeId::new(v)) && rng.random_bool(extra_p) {
                t.add_edge(NodeId::new(u), NodeId::new(v), rng.random_range(1..=max_w) as f64).unwrap();
            }
        }
    }
    t
}

/// Size of the union of the chosen subsets.
pub fn union_size(subsets: &[Vec<usize>], chosen: &[usize]) -> usize {
    let mut seen = std::collections::BTreeSet::new();
    for &j in chosen {
        seen.extend(subsets[j].iter().copied());
    }
    seen.len()
}

/// `P[N < m]` for `N ~ Poisson(mean)` by summing the pmf in log space.
pub fn poisson_below_oracle(mean: f64, m: f64) -> f64 {
    let mut total = 0.0;
    let mut log_fact = 0.0;
    let mut j = 0u64;
    while (j as f64) < m {
        if j > 0 {
            log_fact += (j as f64).ln();
        }
        total += (-mean + j as f64 * mean.ln() - log_fact).exp();
        j += 1;
    }
    total
}

//! Finding a target's network id in a live network.
//!
//! Connections die after `Exp(lambda)` lifetimes, each target signs messages
//! at rate `nu`, and a discovery oracle returns the target with probability
//! at least `q` per draw. The adversary repeats three phases `K` times:
//!
//! 1. wait up to `delta1` for the next target message and keep the peer that
//!    delivered it first;
//! 2. replace the other `d - 1` peers with fresh oracle draws;
//! 3. wait up to `delta2` for each new candidate to free a dynamic slot.
//!
//! [`derive_schedule`] picks `K`, `delta1`, `delta2` so that the target ends
//! up as a peer with probability at least `1 - eps`.

use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};

use crate::error::{Error, Result};
use crate::seed;
use crate::stats::{self, LinearFit};

/// Safety factor applied to the numerically computed tail constant.
pub const MU_SAFETY: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageProcess {
    Poisson,
    /// One message every `1 / nu`, with a uniformly random phase.
    ConstantInterarrival,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiveNetParams {
    /// Connection teardown rate.
    pub lambda: f64,
    /// Per-target message rate.
    pub nu: f64,
    /// Lower bound on the oracle returning a given node.
    pub q: f64,
    /// Dynamic slots per node.
    pub slots: u32,
    /// Peer cap per node.
    pub max_peers: u32,
    /// Adversary peer budget.
    pub d: u32,
    pub targets: u32,
    pub process: MessageProcess,
}

impl LiveNetParams {
    pub fn new(lambda: f64, nu: f64, q: f64, d: u32) -> Self {
        LiveNetParams {
            lambda,
            nu,
            q,
            slots: 1,
            max_peers: 50,
            d,
            targets: 1,
            process: MessageProcess::Poisson,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::invalid(format!("q must be in (0, 1], got {}", self.q)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) || !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::invalid("lambda and nu must be positive and finite"));
        }
        if self.slots == 0 || self.slots > self.max_peers {
            return Err(Error::invalid(format!(
                "need 0 < slots ({}) <= max_peers ({})",
                self.slots, self.max_peers
            )));
        }
        if self.d < 2 {
            return Err(Error::invalid("adversary needs d >= 2 peers"));
        }
        if self.targets == 0 {
            return Err(Error::invalid("need at least one target"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub epsilon: f64,
    pub k: u32,
    pub delta1: f64,
    pub delta2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub gamma: f64,
    pub mu: f64,
    pub zeta: f64,
}

impl Schedule {
    /// Worst-case running time `K (delta1 + delta2)`.
    pub fn total_time(&self) -> f64 {
        self.k as f64 * (self.delta1 + self.delta2)
    }
}

/// `ceil(log(eps) / log(1 - q))`, ignoring floating-point noise just above
/// an integer.
pub fn geometric_rounds(eps: f64, q: f64) -> u32 {
    if q >= 1.0 {
        return 1;
    }
    let ratio = eps.ln() / (1.0 - q).ln();
    ((ratio - 1e-9 * ratio.abs().max(1.0)).ceil() as u32).max(1)
}

/// `P[N < m]` for `N ~ Poisson(mean)`.
pub fn poisson_below(mean: f64, m: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    let k = m.ceil() as u64 - 1;
    if mean <= 0.0 {
        return 1.0;
    }
    Poisson::new(mean).expect("positive mean").cdf(k)
}

/// `sup_x x * P[Poisson(x) < x / 2]`, i.e. the tail constant for `nu = 1`.
///
/// On `(2j, 2j + 2]` the threshold admits counts `0..=j`, so the product
/// jumps up at each left end; every piece is scanned from just above its
/// left end across a dense grid.
fn poisson_tail_sup_unit() -> f64 {
    static SUP: OnceLock<f64> = OnceLock::new();
    *SUP.get_or_init(|| {
        const PIECES: u64 = 400;
        const STEPS: u32 = 200;
        let mut best: f64 = 0.0;
        for j in 0..PIECES {
            let left = 2.0 * j as f64;
            let cdf_at = |x: f64| Poisson::new(x).expect("positive mean").cdf(j);
            let mut piece: f64 = 0.0;
            if j > 0 {
                piece = left * cdf_at(left);
            }
            for i in 1..=STEPS {
                let x = left + 2.0 * i as f64 / STEPS as f64;
                piece = piece.max(x * cdf_at(x));
            }
            best = best.max(piece);
            if j > 10 && piece < 1e-12 {
                break;
            }
        }
        best
    })
}

/// Tail constant `mu` such that `P[count(Delta) < nu Delta / 2] < mu / Delta`
/// for every window length `Delta`.
pub fn tail_constant(nu: f64, process: MessageProcess) -> f64 {
    let sup = match process {
        MessageProcess::Poisson => poisson_tail_sup_unit(),
        // Windows shorter than 1/nu hold no message with probability 1 - nu Delta;
        // longer windows always hold at least nu Delta / 2 messages.
        MessageProcess::ConstantInterarrival => 0.25,
    };
    MU_SAFETY * sup / nu
}

pub fn derive_schedule(epsilon: f64, params: &LiveNetParams) -> Result<Schedule> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must be in (0, 1), got {epsilon}")));
    }
    params.validate()?;
    let k = geometric_rounds(epsilon / 2.0, params.q);
    let eps1 = epsilon / (4.0 * k as f64);
    let eps2 = eps1;
    let gamma = params.nu / 2.0;
    let mu = tail_constant(params.nu, params.process);
    let zeta = 1.0 / (std::f64::consts::E * params.lambda);
    Ok(Schedule {
        epsilon,
        k,
        delta1: (1.0 / gamma).max(mu / eps1),
        delta2: (params.d - 1) as f64 * zeta / eps2,
        eps1,
        eps2,
        gamma,
        mu,
        zeta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FindResult {
    pub success: bool,
    pub elapsed: f64,
    /// Iteration (1-based) in which the target last became a peer, or `K`
    /// when it never did.
    pub iterations_used: u32,
}

/// Time until the target's next message, from `now`.
struct MessageClock {
    process: MessageProcess,
    nu: f64,
    exp: Exp<f64>,
    phase: f64,
}

impl MessageClock {
    fn new(process: MessageProcess, nu: f64, rng: &mut ChaCha8Rng) -> Self {
        MessageClock {
            process,
            nu,
            exp: Exp::new(nu).expect("positive rate"),
            phase: rng.random::<f64>() / nu,
        }
    }

    fn wait_from(&self, now: f64, rng: &mut ChaCha8Rng) -> f64 {
        match self.process {
            MessageProcess::Poisson => self.exp.sample(rng),
            MessageProcess::ConstantInterarrival => {
                let period = 1.0 / self.nu;
                let since = (now - self.phase).rem_euclid(period);
                if since == 0.0 { 0.0 } else { period - since }
            }
        }
    }
}

/// One search for a single target.
///
/// Propagation delay through the network is not modelled: a target message
/// reaches the adversary when it is signed. A target that is a direct peer is
/// always the first deliverer, since a direct link is a shortest path.
pub fn run_find_target(params: &LiveNetParams, schedule: &Schedule, seed: u64) -> FindResult {
    let mut rng = seed::rng(seed);
    let clock = MessageClock::new(params.process, params.nu, &mut rng);
    let slot_wait = Exp::new(params.slots as f64 * params.lambda).expect("positive rate");
    let d = params.d as usize;

    let mut now = 0.0;
    let mut target_is_peer = false;
    let mut found_at = schedule.k;
    for iteration in 1..=schedule.k {
        // Phase 1: the first deliverer of the next message is kept.
        let wait = clock.wait_from(now, &mut rng);
        if wait <= schedule.delta1 {
            now += wait;
        } else {
            now += schedule.delta1;
            // No message: the kept peer is arbitrary.
            if target_is_peer && rng.random_range(0..d) != 0 {
                target_is_peer = false;
            }
        }
        if target_is_peer {
            continue;
        }
        // Phases 2 and 3: fresh candidates wait for a free slot.
        let mut longest: f64 = 0.0;
        for _ in 0..d - 1 {
            let is_target = rng.random::<f64>() < params.q;
            let w = slot_wait.sample(&mut rng);
            longest = longest.max(w);
            if is_target && w <= schedule.delta2 {
                target_is_peer = true;
                found_at = iteration;
            }
        }
        now += longest.min(schedule.delta2);
    }
    FindResult { success: target_is_peer, elapsed: now, iterations_used: found_at }
}

/// Sequential search for `params.targets` targets with budget `eps / |U|`
/// each.
pub fn find_multi_targets(params: &LiveNetParams, epsilon: f64, seed: u64) -> Result<FindResult> {
    let schedule = derive_schedule(epsilon / params.targets as f64, params)?;
    let mut total = FindResult { success: true, elapsed: 0.0, iterations_used: 0 };
    for i in 0..params.targets {
        let sub_seed = if params.targets == 1 { seed } else { seed::derive(seed, i as u64) };
        let r = run_find_target(params, &schedule, sub_seed);
        total.success &= r.success;
        total.elapsed += r.elapsed;
        total.iterations_used += r.iterations_used;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub wilson_lower: f64,
    pub mean_elapsed: f64,
    pub max_elapsed: f64,
    pub time_bound: f64,
}

/// Independent multi-target searches, trial `i` seeded with `derive(seed, i)`.
pub fn run_trials(params: &LiveNetParams, epsilon: f64, trials: u64, seed: u64) -> Result<TrialSummary> {
    let schedule = derive_schedule(epsilon / params.targets as f64, params)?;
    let results: Vec<FindResult> = (0..trials)
        .into_par_iter()
        .map(|i| find_multi_targets(params, epsilon, seed::derive(seed, i)))
        .collect::<Result<_>>()?;
    let successes = results.iter().filter(|r| r.success).count() as u64;
    let elapsed: Vec<f64> = results.iter().map(|r| r.elapsed).collect();
    Ok(TrialSummary {
        trials,
        successes,
        rate: successes as f64 / trials.max(1) as f64,
        wilson_lower: stats::wilson_lower(successes, trials),
        mean_elapsed: stats::mean(&elapsed),
        max_elapsed: elapsed.iter().copied().fold(0.0, f64::max),
        time_bound: params.targets as f64 * schedule.total_time(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailWitness {
    pub delta: f64,
    pub probability: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `P[Poisson(nu Delta) < nu Delta / 2] < mu / Delta` for each window.
pub fn poisson_tail_check(nu: f64, deltas: &[f64]) -> Result<Vec<TailWitness>> {
    if !(nu > 0.0) {
        return Err(Error::invalid("nu must be positive"));
    }
    let mu = tail_constant(nu, MessageProcess::Poisson);
    deltas
        .iter()
        .map(|&delta| {
            if !(delta > 0.0) {
                return Err(Error::invalid(format!("window length must be positive, got {delta}")));
            }
            let probability = poisson_below(nu * delta, nu * delta / 2.0);
            let bound = mu / delta;
            Ok(TailWitness { delta, probability, bound, holds: probability < bound })
        })
        .collect()
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundPoint {
    pub epsilon: f64,
    /// Smallest draw count whose empirical hit rate reaches `1 - eps`.
    pub empirical: u32,
    /// Geometric quantile `ceil(log eps / log(1 - q))`.
    pub closed_form: u32,
}

/// Draws needed before the oracle first returns the target, per `eps`.
pub fn lower_bound_probe(q: f64, epsilons: &[f64], trials: usize, seed: u64) -> Result<Vec<LowerBoundPoint>> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("q must be in (0, 1), got {q}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let mut rng = seed::rng(seed);
    let geo = Geometric::new(q).map_err(|e| Error::invalid(e.to_string()))?;
    // Geometric counts failures before the first success.
    let mut draws: Vec<u64> = (0..trials).map(|_| geo.sample(&mut rng) + 1).collect();
    draws.sort_unstable();
    epsilons
        .iter()
        .map(|&eps| {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::invalid(format!("epsilon must be in (0, 1), got {eps}")));
            }
            let needed = ((1.0 - eps) * trials as f64 - 1e-9).ceil().max(1.0) as usize;
            Ok(LowerBoundPoint {
                epsilon: eps,
                empirical: draws[needed.min(trials) - 1] as u32,
                closed_form: geometric_rounds(eps, q),
            })
        })
        .collect()
}

/// Fit of draw counts against `log(1 / eps)`.
pub fn lower_bound_fit(points: &[LowerBoundPoint]) -> Option<LinearFit> {
    let xs: Vec<f64> = points.iter().map(|p| (1.0 / p.epsilon).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.empirical as f64).collect();
    stats::linear_fit(&xs, &ys)
}

/// Log-log fit of `K (delta1 + delta2)` against `eps^-1 log^2(eps^-1)`.
pub fn schedule_scaling(params: &LiveNetParams, epsilons: &[f64]) -> Result<LinearFit> {
    let mut xs = Vec::with_capacity(epsilons.len());
    let mut ys = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let s = derive_schedule(eps, params)?;
        let inv = 1.0 / eps;
        xs.push((inv * inv.ln().powi(2)).ln());
        ys.push(s.total_time().ln());
    }
    stats::linear_fit(&xs, &ys).ok_or_else(|| Error::invalid("need at least two distinct epsilons"))
}

/// Residual waits until a continuously re-occupied slot frees up, observed
/// at uniformly random inspection times.
pub fn residual_slot_waits(lambda: f64, samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    let life = Exp::new(lambda).expect("positive rate");
    let horizon = 50.0 / lambda;
    (0..samples)
        .map(|_| {
            let inspect = rng.random::<f64>() * horizon;
            let mut teardown = 0.0;
            while teardown <= inspect {
                teardown += life.sample(&mut rng);
            }
            teardown - inspect
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(q: f64) -> LiveNetParams {
        LiveNetParams::new(1.0, 1.0, q, 5)
    }

    #[test]
    fn schedule_rounds() {
        let s = derive_schedule(0.1, &params(0.05)).unwrap();
        assert_eq!(s.k, 59);
        assert_eq!(s.gamma, 0.5);
        assert!((s.eps1 - 0.1 / (4.0 * 59.0)).abs() < 1e-15);
        assert_eq!(s.eps1, s.eps2);
        assert!(s.delta1 >= 1.0 / s.gamma && s.delta1 >= s.mu / s.eps1);
    }

    #[test]
    fn delta2_for_two_peers() {
        let s = derive_schedule(0.2, &LiveNetParams::new(1.0, 1.0, 0.1, 2)).unwrap();
        assert!((s.delta2 - 1.0 / (std::f64::consts::E * s.eps2)).abs() < 1e-9);
    }

    #[test]
    fn schedule_rejects_bad_epsilon() {
        assert!(derive_schedule(0.0, &params(0.1)).is_err());
        assert!(derive_schedule(1.0, &params(0.1)).is_err());
        let mut p = params(0.1);
        p.d = 1;
        assert!(derive_schedule(0.1, &p).is_err());
    }

    #[test]
    fn certain_oracle_succeeds_first_round() {
        let p = params(1.0);
        let s = derive_schedule(0.1, &p).unwrap();
        assert_eq!(s.k, 1);
        for seed in 0..50 {
            let r = run_find_target(&p, &s, seed);
            assert!(r.success);
            assert_eq!(r.iterations_used, 1);
        }
    }

    #[test]
    fn elapsed_within_bound() {
        let p = params(0.2);
        let s = derive_schedule(0.2, &p).unwrap();
        for seed in 0..200 {
            let r = run_find_target(&p, &s, seed);
            assert!(r.elapsed <= s.total_time() + 1e-9);
        }
    }

    #[test]
    fn success_rate_meets_guarantee() {
        let summary = run_trials(&params(0.1), 0.2, 2000, 5).unwrap();
        assert!(summary.wilson_lower >= 0.8, "{summary:?}");
    }

    #[test]
    fn fast_network_succeeds() {
        let mut p = params(0.1);
        p.lambda = 1e4;
        p.nu = 1e4;
        let summary = run_trials(&p, 0.1, 2000, 6).unwrap();
        assert!(summary.wilson_lower >= 0.9, "{summary:?}");
    }

    #[test]
    fn constant_interarrival_also_works() {
        let mut p = params(0.2);
        p.process = MessageProcess::ConstantInterarrival;
        let summary = run_trials(&p, 0.2, 1000, 7).unwrap();
        assert!(summary.wilson_lower >= 0.8, "{summary:?}");
    }

    #[test]
    fn single_target_multi_search_matches_single() {
        let p = params(0.1);
        let s = derive_schedule(0.2, &p).unwrap();
        assert_eq!(find_multi_targets(&p, 0.2, 11).unwrap(), run_find_target(&p, &s, 11));
    }

    #[test]
    fn two_targets_joint_success() {
        let mut p = params(0.1);
        p.targets = 2;
        let summary = run_trials(&p, 0.2, 2000, 12).unwrap();
        assert!(summary.wilson_lower >= 0.8, "{summary:?}");
    }

    #[test]
    fn poisson_below_examples() {
        // P[Poisson(20) < 10] = P[N <= 9].
        let p = poisson_below(20.0, 10.0);
        let direct: f64 = (0..=9u32)
            .map(|k| (-20.0f64 + k as f64 * 20f64.ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>()).exp())
            .sum();
        assert!((p - direct).abs() < 1e-12);
        assert!((p - 0.004_995).abs() < 1e-5);
        assert_eq!(poisson_below(3.0, 0.0), 0.0);
        assert!((poisson_below(1.0, 0.5) - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn tail_constant_value() {
        // The supremum sits just above x = 4, where 4 P[Poisson(4) <= 2] = 52 e^-4.
        let sup = poisson_tail_sup_unit();
        assert!((sup - 52.0 * (-4.0f64).exp()).abs() < 1e-9, "{sup}");
        assert!((tail_constant(2.0, MessageProcess::Poisson) - MU_SAFETY * sup / 2.0).abs() < 1e-15);
    }

    #[test]
    fn tail_check_tiny_windows_hold() {
        let w = poisson_tail_check(1.0, &[1e-4, 1e-2]).unwrap();
        assert!(w.iter().all(|t| t.holds && t.probability > 0.98));
        assert!(poisson_tail_check(1.0, &[0.0]).is_err());
    }

    #[test]
    fn geometric_rounds_edges() {
        assert_eq!(geometric_rounds(0.9, 0.1), 1);
        assert_eq!(geometric_rounds(0.05, 0.05), 59);
        assert_eq!(geometric_rounds(0.5, 1.0), 1);
    }

    #[test]
    fn lower_bound_probe_tracks_closed_form() {
        let pts = lower_bound_probe(0.1, &[0.9, 0.5, 0.1, 0.05, 0.01], 200_000, 3).unwrap();
        assert_eq!(pts[0].closed_form, 1);
        for p in &pts {
            assert!((p.empirical as i64 - p.closed_form as i64).abs() <= 1, "{p:?}");
        }
    }

    #[test]
    fn residual_waits_are_exponential() {
        let waits = residual_slot_waits(2.0, 10_000, 4);
        assert!(stats::ks_statistic_exponential(&waits, 2.0) < 0.05);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.01, 1e4, 60);
        assert_eq!(g.len(), 60);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[59] - 1e4).abs() < 1e-8);
    }
}

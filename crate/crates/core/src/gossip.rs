//! Asynchronous pairwise-averaging gossip and averaging-time estimation.
//!
//! One tick samples a node `i` with probability `p_i = Σ_j P_ij`, then a
//! partner `j` with probability `P_ij / p_i`, and both replace their values
//! with the pair average. A diagonal draw (lazy Metropolis) is a tick in which
//! nothing changes. Exponential inter-arrival times are not simulated; ticks
//! come straight from the embedded jump chain and [`ticks_to_time`] gives
//! the expected model time.

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::graphs::WeightedGraph;
use crate::linalg::{norm2, symmetric_eigen};
use crate::spectral::{expected_iteration_matrix, ActivationMatrix};
use crate::{rng, Error, Result};

/// Ticks needed before [`edge_frequency_report`] accepts a trace.
pub const MIN_REPORT_TICKS: u64 = 1000;

/// One simulated run.
#[derive(Debug, Clone)]
pub struct GossipRunConfig<'a> {
    pub graph: &'a WeightedGraph,
    pub activation: &'a ActivationMatrix,
    pub y0: Vec<f64>,
    /// Stop at the first tick whose relative error is below this value.
    /// `None` always runs `max_ticks`.
    pub eps: Option<f64>,
    pub max_ticks: u64,
    pub seed: u64,
    /// Keep every this many ticks in the trace (0 keeps only the endpoints).
    pub record_every: u64,
}

/// A recorded tick. `edge` is `None` for tick 0 and for lazy self-loop ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    pub k: u64,
    pub edge: Option<(usize, usize)>,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GossipTrace {
    pub ticks: Vec<TickRecord>,
    /// Activations per edge, indexed like `graph.edges()`.
    pub edge_counts: Vec<u64>,
    pub self_loops: u64,
    /// Node clock rates `r_i = 2(n-1) p_i`, so `Σ r_i = 2(n-1)`.
    pub rates: Vec<f64>,
    pub total_ticks: u64,
    /// First tick with relative error below `eps`, if any.
    pub k_hit: Option<u64>,
    pub final_y: Vec<f64>,
    pub final_error: f64,
}

/// `‖y - ȳ1‖₂ / ‖y⁰‖₂`.
pub fn relative_error(y: &[f64], mean: f64, y0_norm: f64) -> f64 {
    let dev: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    libm::sqrt(dev) / y0_norm
}

/// Clock rates that make one tick correspond to the stated activation
/// probabilities with total rate `2(n-1)`.
pub fn clock_rates(a: &ActivationMatrix) -> Vec<f64> {
    let scale = 2.0 * (a.n() as f64 - 1.0);
    a.node_probs().into_iter().map(|p| p * scale).collect()
}

// Two-stage sampler: node by p_i, then partner by row i of P.
struct PairSampler {
    nodes: WeightedIndex<f64>,
    rows: Vec<Option<WeightedIndex<f64>>>,
}

impl PairSampler {
    fn new(a: &ActivationMatrix) -> Result<Self> {
        let probs = a.node_probs();
        let nodes = WeightedIndex::new(&probs)
            .map_err(|e| Error::Incompatible(alloc::format!("node distribution: {e}")))?;
        let rows = (0..a.n())
            .map(|i| {
                if probs[i] > 0.0 {
                    WeightedIndex::new(a.p.row(i)).ok()
                } else {
                    None
                }
            })
            .collect();
        Ok(PairSampler { nodes, rows })
    }

    fn sample(&self, rng: &mut rng::Rng) -> (usize, usize) {
        let i = self.nodes.sample(rng);
        let j = self.rows[i]
            .as_ref()
            .expect("sampled nodes have positive mass")
            .sample(rng);
        (i, j)
    }
}

fn edge_index(g: &WeightedGraph) -> impl Fn(usize, usize) -> usize + '_ {
    move |i, j| {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        g.edges()
            .binary_search_by(|&(x, y, _)| (x, y).cmp(&(a, b)))
            .expect("activation support is on edges")
    }
}

/// Runs gossip until the relative error drops below `eps` or `max_ticks`
/// ticks have passed.
pub fn simulate_run(cfg: &GossipRunConfig<'_>) -> Result<GossipTrace> {
    let g = cfg.graph;
    let n = g.n();
    cfg.activation.check_compatible(g)?;
    if cfg.y0.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: cfg.y0.len(),
        });
    }
    if let Some(eps) = cfg.eps {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::param(alloc::format!("eps = {eps} must lie in (0, 1)")));
        }
    }
    let y0_norm = norm2(&cfg.y0);
    if y0_norm == 0.0 || !y0_norm.is_finite() {
        return Err(Error::param("initial vector must be nonzero and finite"));
    }
    let mean = cfg.y0.iter().sum::<f64>() / n as f64;
    let sampler = PairSampler::new(cfg.activation)?;
    let index = edge_index(g);
    let mut rng = rng::seeded(cfg.seed);

    let mut y = cfg.y0.clone();
    let mut err = relative_error(&y, mean, y0_norm);
    let mut ticks = vec![TickRecord {
        k: 0,
        edge: None,
        rel_error: err,
    }];
    let mut edge_counts = vec![0u64; g.m()];
    let mut self_loops = 0u64;
    let below = |e: f64| cfg.eps.is_some_and(|eps| e < eps);
    let mut k_hit = below(err).then_some(0);
    let mut k = 0u64;
    let mut last_edge = None;

    while k_hit.is_none() && k < cfg.max_ticks {
        let (i, j) = sampler.sample(&mut rng);
        k += 1;
        if i == j {
            self_loops += 1;
            last_edge = None;
        } else {
            let avg = 0.5 * (y[i] + y[j]);
            y[i] = avg;
            y[j] = avg;
            edge_counts[index(i, j)] += 1;
            err = relative_error(&y, mean, y0_norm);
            last_edge = Some((i, j));
        }
        if below(err) {
            k_hit = Some(k);
        }
        if cfg.record_every > 0 && k % cfg.record_every == 0 {
            ticks.push(TickRecord {
                k,
                edge: last_edge,
                rel_error: err,
            });
        }
    }
    if ticks.last().map(|t| t.k) != Some(k) {
        ticks.push(TickRecord {
            k,
            edge: last_edge,
            rel_error: err,
        });
    }
    Ok(GossipTrace {
        ticks,
        edge_counts,
        self_loops,
        rates: clock_rates(cfg.activation),
        total_ticks: k,
        k_hit,
        final_y: y,
        final_error: err,
    })
}

/// Result of one Monte-Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    /// First tick with relative error below `eps`; `None` if `max_ticks` ran
    /// out first.
    pub k_hit: Option<u64>,
    pub final_error: f64,
}

/// Starting vectors used to probe the worst case of the averaging time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Initialization {
    /// Unit eigenvector of `λ_{n-1}(W̄_P)`, the slowest expected direction.
    Eigenvector,
    /// `+1` on the first `⌊n/2⌋` nodes and `-1` on the rest; on a barbell
    /// this puts the two cliques at opposite values.
    Split,
    /// Run both and report the larger averaging time.
    Both,
}

impl Initialization {
    pub fn name(self) -> &'static str {
        match self {
            Initialization::Eigenvector => "eigenvector",
            Initialization::Split => "split",
            Initialization::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "eigenvector" => Some(Initialization::Eigenvector),
            "split" => Some(Initialization::Split),
            "both" => Some(Initialization::Both),
            _ => None,
        }
    }
}

/// Unit eigenvector of the second largest eigenvalue of `W̄_P`.
pub fn second_eigenvector(a: &ActivationMatrix) -> Result<Vec<f64>> {
    let w = expected_iteration_matrix(a);
    let n = w.n();
    if n < 2 {
        return Err(Error::param("need at least two nodes"));
    }
    Ok(symmetric_eigen(&w)?.vector(n - 2))
}

pub fn split_vector(n: usize) -> Vec<f64> {
    (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect()
}

/// One trial: a run from `y0` with seed `trial_seed(master, trial)`.
pub fn run_trial(
    g: &WeightedGraph,
    a: &ActivationMatrix,
    y0: &[f64],
    eps: f64,
    max_ticks: u64,
    master_seed: u64,
    trial: u64,
) -> Result<TrialOutcome> {
    let trace = simulate_run(&GossipRunConfig {
        graph: g,
        activation: a,
        y0: y0.to_vec(),
        eps: Some(eps),
        max_ticks,
        seed: rng::trial_seed(master_seed, trial),
        record_every: 0,
    })?;
    Ok(TrialOutcome {
        trial,
        k_hit: trace.k_hit,
        final_error: trace.final_error,
    })
}

/// Smallest `k` such that at most a fraction `eps` of the trials still have
/// relative error `≥ eps` at tick `k`. Errors never increase along a run, so
/// this is an order statistic of the per-trial hitting ticks.
pub fn aggregate_averaging_time(outcomes: &[TrialOutcome], eps: f64, max_ticks: u64) -> Result<u64> {
    let t = outcomes.len();
    if t == 0 {
        return Err(Error::param("no trials"));
    }
    let allowed = libm::floor(eps * t as f64 + 1e-9) as usize;
    let mut hits: Vec<u64> = outcomes.iter().filter_map(|o| o.k_hit).collect();
    let unfinished = t - hits.len();
    if unfinished > allowed {
        return Err(Error::ExceededMaxTicks {
            max_ticks,
            unfinished,
            partial: outcomes.to_vec(),
        });
    }
    hits.sort_unstable();
    // The (t - allowed)-th smallest, counting unfinished trials as +∞.
    Ok(hits[t - allowed - 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragingTimeEstimate {
    pub ticks: u64,
    /// The initialization that produced `ticks`.
    pub initialization: Initialization,
    pub outcomes: Vec<TrialOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragingTimeConfig {
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
    pub max_ticks: u64,
    pub initialization: Initialization,
}

impl AveragingTimeConfig {
    pub fn new(eps: f64, trials: u64, seed: u64) -> Self {
        AveragingTimeConfig {
            eps,
            trials,
            seed,
            max_ticks: 10_000_000,
            initialization: Initialization::Eigenvector,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 100 {
            return Err(Error::param(alloc::format!(
                "averaging-time estimates need at least 100 trials, got {}",
                self.trials
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::param(alloc::format!("eps = {} must lie in (0, 1)", self.eps)));
        }
        Ok(())
    }
}

/// Starting vectors for an initialization policy, in evaluation order.
pub fn initial_vectors(a: &ActivationMatrix, init: Initialization) -> Result<Vec<(Initialization, Vec<f64>)>> {
    Ok(match init {
        Initialization::Eigenvector => vec![(init, second_eigenvector(a)?)],
        Initialization::Split => vec![(init, split_vector(a.n()))],
        Initialization::Both => vec![
            (Initialization::Eigenvector, second_eigenvector(a)?),
            (Initialization::Split, split_vector(a.n())),
        ],
    })
}

/// Monte-Carlo ε-averaging time, run sequentially.
pub fn empirical_averaging_time(
    g: &WeightedGraph,
    a: &ActivationMatrix,
    cfg: &AveragingTimeConfig,
) -> Result<AveragingTimeEstimate> {
    cfg.validate()?;
    let mut best: Option<AveragingTimeEstimate> = None;
    for (init, y0) in initial_vectors(a, cfg.initialization)? {
        let outcomes = (0..cfg.trials)
            .map(|t| run_trial(g, a, &y0, cfg.eps, cfg.max_ticks, cfg.seed, t))
            .collect::<Result<Vec<_>>>()?;
        let ticks = aggregate_averaging_time(&outcomes, cfg.eps, cfg.max_ticks)?;
        if best.as_ref().is_none_or(|b| ticks > b.ticks) {
            best = Some(AveragingTimeEstimate {
                ticks,
                initialization: init,
                outcomes,
            });
        }
    }
    Ok(best.expect("at least one initialization"))
}

/// Expected model time of `k` ticks, `k / Σ r_i`.
pub fn ticks_to_time(k: u64, rates: &[f64]) -> Result<f64> {
    let total: f64 = rates.iter().sum();
    if !(total > 0.0) {
        return Err(Error::param("clock rates must have a positive sum"));
    }
    Ok(k as f64 / total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFrequency {
    pub i: usize,
    pub j: usize,
    /// `P_ij + P_ji`.
    pub expected: f64,
    pub empirical: f64,
    /// `empirical / expected`.
    pub ratio: f64,
}

/// Per-edge expected against observed activation frequency, sorted by
/// expected frequency (largest first, then by edge).
pub fn edge_frequency_report(
    trace: &GossipTrace,
    g: &WeightedGraph,
    a: &ActivationMatrix,
) -> Result<Vec<EdgeFrequency>> {
    if trace.total_ticks < MIN_REPORT_TICKS {
        return Err(Error::param(alloc::format!(
            "trace has {} ticks; the report needs at least {MIN_REPORT_TICKS}",
            trace.total_ticks
        )));
    }
    if trace.edge_counts.len() != g.m() {
        return Err(Error::Dimension {
            expected: g.m(),
            got: trace.edge_counts.len(),
        });
    }
    let total = trace.total_ticks as f64;
    let mut rows: Vec<EdgeFrequency> = g
        .edges()
        .iter()
        .zip(&trace.edge_counts)
        .map(|(&(i, j, _), &c)| {
            let expected = a.pair_prob(i, j);
            let empirical = c as f64 / total;
            EdgeFrequency {
                i,
                j,
                expected,
                empirical,
                ratio: if expected > 0.0 { empirical / expected } else { f64::NAN },
            }
        })
        .collect();
    rows.sort_by(|x, y| {
        y.expected
            .total_cmp(&x.expected)
            .then((x.i, x.j).cmp(&(y.i, y.j)))
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{generate_graph, GraphSpec};
    use crate::resistance::effective_resistances;
    use crate::spectral::{build_activation, Scheme};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn barbell(s: usize, scheme: Scheme) -> (WeightedGraph, ActivationMatrix) {
        let g = generate_graph(&GraphSpec::barbell(s)).unwrap();
        let r = effective_resistances(&g).unwrap();
        let a = build_activation(&g, scheme, Some(&r)).unwrap();
        (g, a)
    }

    fn cfg<'a>(g: &'a WeightedGraph, a: &'a ActivationMatrix, y0: Vec<f64>) -> GossipRunConfig<'a> {
        GossipRunConfig {
            graph: g,
            activation: a,
            y0,
            eps: None,
            max_ticks: 2000,
            seed: 11,
            record_every: 1,
        }
    }

    #[test]
    fn consensus_start_stops_immediately() {
        let (g, a) = barbell(4, Scheme::Uniform);
        let mut c = cfg(&g, &a, vec![3.0; 8]);
        c.eps = Some(0.01);
        let t = simulate_run(&c).unwrap();
        assert_eq!(t.k_hit, Some(0));
        assert_eq!(t.total_ticks, 0);
        assert_eq!(t.ticks.len(), 1);
        assert_eq!(t.ticks[0].rel_error, 0.0);
    }

    #[test]
    fn mean_is_conserved_and_error_never_grows() {
        for scheme in [Scheme::Uniform, Scheme::Resistance, Scheme::Metropolis] {
            let (g, a) = barbell(5, scheme);
            let y0: Vec<f64> = (0..10).map(|i| (i * i) as f64 - 7.0).collect();
            let sum0: f64 = y0.iter().sum();
            let t = simulate_run(&cfg(&g, &a, y0)).unwrap();
            assert_eq!(t.ticks.len(), 2001);
            for w in t.ticks.windows(2) {
                assert!(w[1].rel_error <= w[0].rel_error + 1e-15);
            }
            assert_abs_diff_eq!(t.final_y.iter().sum::<f64>(), sum0, epsilon = 1e-10);
            let activations: u64 = t.edge_counts.iter().sum::<u64>() + t.self_loops;
            assert_eq!(activations, 2000);
            if scheme != Scheme::Metropolis {
                assert_eq!(t.self_loops, 0);
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let (g, a) = barbell(5, Scheme::Resistance);
        let y0 = split_vector(10);
        let a1 = simulate_run(&cfg(&g, &a, y0.clone())).unwrap();
        let a2 = simulate_run(&cfg(&g, &a, y0.clone())).unwrap();
        assert_eq!(a1, a2);
        let mut c = cfg(&g, &a, y0);
        c.seed = 12;
        assert_ne!(a1.ticks, simulate_run(&c).unwrap().ticks);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (g, a) = barbell(4, Scheme::Uniform);
        assert!(simulate_run(&cfg(&g, &a, vec![0.0; 8])).is_err());
        assert!(simulate_run(&cfg(&g, &a, vec![1.0; 7])).is_err());
        let other = generate_graph(&GraphSpec::barbell(3)).unwrap();
        assert!(simulate_run(&cfg(&other, &a, vec![1.0; 6])).is_err());
    }

    #[test]
    fn order_statistic() {
        let mk = |hits: &[Option<u64>]| -> Vec<TrialOutcome> {
            hits.iter()
                .enumerate()
                .map(|(t, &k)| TrialOutcome {
                    trial: t as u64,
                    k_hit: k,
                    final_error: 0.0,
                })
                .collect()
        };
        let mut hits: Vec<Option<u64>> = (1..=200).map(Some).collect();
        assert_eq!(aggregate_averaging_time(&mk(&hits), 0.01, 1000).unwrap(), 198);
        hits[5] = None;
        hits[6] = None;
        assert_eq!(aggregate_averaging_time(&mk(&hits), 0.01, 1000).unwrap(), 200);
        hits[7] = None;
        assert!(matches!(
            aggregate_averaging_time(&mk(&hits), 0.01, 1000),
            Err(Error::ExceededMaxTicks { unfinished: 3, .. })
        ));
    }

    #[test]
    fn averaging_time_requires_trials() {
        let (g, a) = barbell(4, Scheme::Uniform);
        let cfg = AveragingTimeConfig::new(0.01, 50, 0);
        assert!(empirical_averaging_time(&g, &a, &cfg).is_err());
    }

    #[test]
    fn max_ticks_cap_reports_partial_data() {
        let (g, a) = barbell(5, Scheme::Uniform);
        let mut cfg = AveragingTimeConfig::new(0.01, 100, 1);
        cfg.max_ticks = 10;
        match empirical_averaging_time(&g, &a, &cfg) {
            Err(Error::ExceededMaxTicks { partial, unfinished, .. }) => {
                assert_eq!(partial.len(), 100);
                assert_eq!(unfinished, 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn time_conversion() {
        assert_eq!(ticks_to_time(0, &[1.0, 2.0]).unwrap(), 0.0);
        let uniform = vec![1.8; 10];
        assert_abs_diff_eq!(ticks_to_time(180, &uniform).unwrap(), 10.0, epsilon = 1e-12);
        assert!(ticks_to_time(5, &[0.0, 0.0]).is_err());
        let (_, a) = barbell(5, Scheme::Resistance);
        assert_abs_diff_eq!(clock_rates(&a).iter().sum::<f64>(), 18.0, epsilon = 1e-12);
        let (_, a) = barbell(5, Scheme::Uniform);
        for r in clock_rates(&a) {
            assert_abs_diff_eq!(r, 1.8, epsilon = 1e-12);
        }
    }

    #[test]
    fn report_needs_enough_ticks_and_sorts() {
        let (g, a) = barbell(5, Scheme::Resistance);
        let mut c = cfg(&g, &a, split_vector(10));
        c.max_ticks = 500;
        let short = simulate_run(&c).unwrap();
        assert!(edge_frequency_report(&short, &g, &a).is_err());
        c.max_ticks = 20_000;
        c.record_every = 0;
        let t = simulate_run(&c).unwrap();
        let rep = edge_frequency_report(&t, &g, &a).unwrap();
        assert_eq!((rep[0].i, rep[0].j), (4, 5));
        assert_abs_diff_eq!(rep[0].expected, 1.0 / 9.0, epsilon = 1e-12);
        for w in rep.windows(2) {
            assert!(w[0].expected >= w[1].expected);
        }
    }

    #[test]
    fn complete_graph_edges_are_equally_likely() {
        let g = generate_graph(&GraphSpec::complete(6)).unwrap();
        let a = build_activation(&g, Scheme::Uniform, None).unwrap();
        for &(i, j, _) in g.edges() {
            assert_abs_diff_eq!(a.pair_prob(i, j), 2.0 / 30.0, epsilon = 1e-15);
        }
    }

    proptest! {
        #[test]
        fn sum_and_monotonicity_hold_on_random_graphs(
            n in 4usize..14,
            seed: u64,
            which in 0usize..3,
            y0 in proptest::collection::vec(-10.0f64..10.0, 14),
        ) {
            let g = generate_graph(&GraphSpec::small_world_dense(n, seed)).unwrap();
            let r = effective_resistances(&g).unwrap();
            let scheme = [Scheme::Uniform, Scheme::Resistance, Scheme::Metropolis][which];
            let a = build_activation(&g, scheme, Some(&r)).unwrap();
            let y0 = y0[..n].to_vec();
            prop_assume!(norm2(&y0) > 1e-6);
            let sum0: f64 = y0.iter().sum();
            let mut c = cfg(&g, &a, y0);
            c.max_ticks = 300;
            c.seed = seed;
            let t = simulate_run(&c).unwrap();
            prop_assert!((t.final_y.iter().sum::<f64>() - sum0).abs() < 1e-9);
            for w in t.ticks.windows(2) {
                prop_assert!(w[1].rel_error <= w[0].rel_error + 1e-14);
            }
        }
    }
}

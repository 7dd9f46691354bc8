//! Thread-pool setup and order-preserving parallel Monte-Carlo trials.

use rayon::prelude::*;

use ergossip_core::gossip::{
    aggregate_averaging_time, initial_vectors, run_trial, AveragingTimeConfig,
    AveragingTimeEstimate, TrialOutcome,
};
use ergossip_core::spectral::ActivationMatrix;
use ergossip_core::WeightedGraph;

use crate::{Error, Result};

pub const THREADS_ENV: &str = "ERGOSSIP_THREADS";

/// Worker count: `ERGOSSIP_THREADS` wins over the flag; `None` lets rayon
/// pick.
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV}={v} is not a positive integer"))),
        _ => Ok(flag.filter(|&t| t > 0)),
    }
}

pub fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs trials `0..trials` in parallel; results come back in trial order so
/// the output does not depend on scheduling.
pub fn par_trials(
    g: &WeightedGraph,
    a: &ActivationMatrix,
    y0: &[f64],
    eps: f64,
    max_ticks: u64,
    seed: u64,
    trials: u64,
) -> Result<Vec<TrialOutcome>> {
    (0..trials)
        .into_par_iter()
        .map(|t| run_trial(g, a, y0, eps, max_ticks, seed, t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Error::from)
}

/// Parallel counterpart of `ergossip_core::gossip::empirical_averaging_time`
/// with identical output.
pub fn par_averaging_time(
    g: &WeightedGraph,
    a: &ActivationMatrix,
    cfg: &AveragingTimeConfig,
) -> Result<AveragingTimeEstimate> {
    cfg.validate()?;
    let mut best: Option<AveragingTimeEstimate> = None;
    for (init, y0) in initial_vectors(a, cfg.initialization)? {
        let outcomes = par_trials(g, a, &y0, cfg.eps, cfg.max_ticks, cfg.seed, cfg.trials)?;
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

#[cfg(test)]
mod tests {
    use super::*;
    use ergossip_core::gossip::empirical_averaging_time;
    use ergossip_core::graphs::{generate_graph, GraphSpec};
    use ergossip_core::resistance::effective_resistances;
    use ergossip_core::spectral::{build_activation, Scheme};

    #[test]
    fn parallel_matches_sequential() {
        let g = generate_graph(&GraphSpec::barbell(3)).unwrap();
        let r = effective_resistances(&g).unwrap();
        let a = build_activation(&g, Scheme::Resistance, Some(&r)).unwrap();
        let cfg = AveragingTimeConfig::new(0.05, 120, 4);
        let pool = build_pool(Some(3)).unwrap();
        let par = pool.install(|| par_averaging_time(&g, &a, &cfg)).unwrap();
        assert_eq!(par, empirical_averaging_time(&g, &a, &cfg).unwrap());
    }
}

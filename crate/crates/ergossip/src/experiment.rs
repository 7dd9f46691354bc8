//! Experiment orchestration: each experiment splits into independent
//! sub-results that run concurrently and write their own CSV files; the
//! summary is assembled afterwards in a fixed order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use ergossip_core::gossip::{AveragingTimeConfig, Initialization};
use ergossip_core::graphs::{diameter, generate_graph, GraphSpec};
use ergossip_core::resistance::{
    drk_expected_messages, drk_rates, drk_solve, effective_resistances, DrkConfig, DrkMode,
};
use ergossip_core::rng::{derive_seed, label_hash};
use ergossip_core::spectral::fmmc::{fmmc_subgradient, FmmcConfig};
use ergossip_core::spectral::{
    averaging_time_bounds, barbell_closed_form_spectrum, c_barbell_conductance_closed_form,
    c_barbell_min_cut_set, cheeger_bounds, diameter_eigen_bound_check, min_conductance_bruteforce,
    mixing_time_empirical, neighbor_hitting_bounds, spectrum, Scheme,
};
use ergossip_core::WeightedGraph;

use crate::checks::{
    activation, extra_comparison, final_medians, fmmc_cost, iteration_matrix, run_check,
    second_eig, small_world_family, CheckOutcome,
};
use crate::config::{ExperimentConfig, ExperimentId};
use crate::csvout::Table;
use crate::parallel::par_averaging_time;
use crate::plotdata::{emit_plotdata, Transform};
use crate::{row, Error, Result};

type Tables = Vec<(String, Table)>;

struct SubResult<'a> {
    name: String,
    run: Box<dyn Fn() -> Result<Tables> + Send + Sync + 'a>,
}

impl<'a> SubResult<'a> {
    fn new(name: impl Into<String>, run: impl Fn() -> Result<Tables> + Send + Sync + 'a) -> Self {
        SubResult {
            name: name.into(),
            run: Box::new(run),
        }
    }
}

/// A plot table derived from one of the written CSVs.
struct PlotSpec {
    csv: String,
    columns: Vec<&'static str>,
    transform: Transform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: ExperimentId,
    /// Written files, in summary order.
    pub outputs: Vec<PathBuf>,
    /// Sub-results that failed, with their error messages.
    pub errors: Vec<(String, String)>,
    pub checks: Vec<CheckOutcome>,
    pub summary: PathBuf,
}

impl ExperimentReport {
    pub fn success(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let (subs, plots) = plan(cfg);
    let results: Vec<(String, Result<Vec<PathBuf>>)> = subs
        .par_iter()
        .map(|s| {
            let written = (s.run)().and_then(|tables| {
                tables
                    .into_iter()
                    .map(|(name, t)| {
                        let path = out.join(format!("{name}.csv"));
                        t.write(&path).map(|_| path)
                    })
                    .collect::<Result<Vec<_>>>()
            });
            (s.name.clone(), written)
        })
        .collect();

    let mut outputs = Vec::new();
    let mut errors = Vec::new();
    for (name, r) in results {
        match r {
            Ok(paths) => outputs.extend(paths),
            Err(e) => errors.push((name, e.to_string())),
        }
    }

    let mut plot_lines = Vec::new();
    for p in plots {
        let csv = out.join(format!("{}.csv", p.csv));
        if !csv.exists() {
            continue;
        }
        match emit_plotdata(&csv, &p.columns, p.transform) {
            Ok(data) => {
                let path = out.join(format!("{}.dat", p.csv));
                std::fs::write(&path, &data.text).map_err(|e| Error::io(&path, e))?;
                plot_lines.push(format!(
                    "plot {} rows={} skipped={}",
                    file_name(&path),
                    data.rows,
                    data.skipped
                ));
                outputs.push(path);
            }
            Err(e) => errors.push((format!("plot {}", p.csv), e.to_string())),
        }
    }

    let checks: Vec<CheckOutcome> = if cfg.checks {
        cfg.experiment
            .criteria()
            .iter()
            .map(|&id| run_check(id, cfg.seed))
            .collect()
    } else {
        Vec::new()
    };

    let summary = out.join("summary.txt");
    let mut s = String::new();
    writeln!(s, "experiment {}", cfg.experiment.name()).unwrap();
    writeln!(s, "seed {}", cfg.seed).unwrap();
    for p in &outputs {
        if p.extension().is_some_and(|e| e == "csv") {
            writeln!(s, "output {}", file_name(p)).unwrap();
        }
    }
    for l in &plot_lines {
        writeln!(s, "{l}").unwrap();
    }
    for (name, e) in &errors {
        writeln!(s, "ERROR {name}: {e}").unwrap();
    }
    for c in &checks {
        writeln!(
            s,
            "{} {:>2} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            c.detail
        )
        .unwrap();
    }
    let report = ExperimentReport {
        experiment: cfg.experiment,
        outputs,
        errors,
        checks,
        summary: summary.clone(),
    };
    writeln!(s, "status {}", if report.success() { "ok" } else { "failed" }).unwrap();
    std::fs::write(&summary, s).map_err(|e| Error::io(&summary, e))?;
    Ok(report)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}

fn sub_seed(cfg: &ExperimentConfig, parts: &[u64]) -> u64 {
    let mut v = vec![label_hash(cfg.experiment.name())];
    v.extend_from_slice(parts);
    derive_seed(cfg.seed, &v)
}

fn plan(cfg: &ExperimentConfig) -> (Vec<SubResult<'_>>, Vec<PlotSpec>) {
    match cfg.experiment {
        ExperimentId::Result1CBarbell => (vec![SubResult::new("conductance", || result1(cfg))], vec![]),
        ExperimentId::Result2Barbell => (
            vec![
                SubResult::new("barbell", || result2(cfg)),
                SubResult::new("spectra", || result2_spectra(cfg)),
            ],
            vec![PlotSpec {
                csv: "barbell".into(),
                columns: vec!["n", "t_emp_u", "t_emp_r"],
                transform: Transform::Linear,
            }],
        ),
        ExperimentId::Result3Bounds => (
            vec![
                SubResult::new("diameter", || result3_diameter(cfg)),
                SubResult::new("hitting", || result3_hitting(cfg)),
                SubResult::new("foster", || result3_foster(cfg)),
            ],
            vec![],
        ),
        ExperimentId::DrkConvergence => {
            let mut plots = Vec::new();
            for (label, _) in drk_graphs(cfg).unwrap_or_default() {
                plots.push(PlotSpec {
                    csv: format!("drk_medians_{label}"),
                    columns: vec!["k", "plain", "normalized", "bound_normalized"],
                    transform: Transform::Log,
                });
            }
            (
                vec![
                    SubResult::new("rates", || drk_rate_table(cfg)),
                    SubResult::new("traces", || drk_traces(cfg)),
                ],
                plots,
            )
        }
        ExperimentId::FmmcVsEr => (
            cfg.clique_sizes
                .iter()
                .map(|&s| SubResult::new(format!("fmmc {s}"), move || fmmc(cfg, s)))
                .collect(),
            vec![],
        ),
        ExperimentId::ExtraComparison => {
            let mut subs = Vec::new();
            let mut plots = Vec::new();
            for &s in &cfg.clique_sizes {
                for &sigma in &cfg.sigmas {
                    subs.push(SubResult::new(format!("extra {s} {sigma}"), move || extra(cfg, s, sigma)));
                    plots.push(PlotSpec {
                        csv: format!("extra_medians_n{}_sigma{sigma}", 2 * s),
                        columns: vec!["round", "consensus_violation_u", "consensus_violation_r"],
                        transform: Transform::Log,
                    });
                }
            }
            (subs, plots)
        }
    }
}

fn result1(cfg: &ExperimentConfig) -> Result<Tables> {
    let cases: Vec<(usize, usize, Scheme)> = cfg
        .clique_sizes
        .iter()
        .flat_map(|&s| cfg.clique_counts.iter().map(move |&c| (s, c)))
        .flat_map(|(s, c)| [Scheme::Uniform, Scheme::Resistance].map(|sc| (s, c, sc)))
        .collect();
    let rows: Vec<Vec<String>> = cases
        .par_iter()
        .map(|&(s, c, scheme)| -> Result<_> {
            let g = generate_graph(&GraphSpec::c_barbell(s, c))?;
            let w = iteration_matrix(&g, scheme)?;
            let (phi, set) = min_conductance_bruteforce(&w)?;
            let closed = c_barbell_conductance_closed_form(s, c, scheme)?;
            let lam = second_eig(&w)?;
            let (lo, hi) = cheeger_bounds(phi)?;
            let argmin: Vec<String> = set.iter().map(|v| (v + 1).to_string()).collect();
            Ok(row![
                s,
                c,
                s * c,
                scheme.name(),
                closed,
                phi,
                (phi - closed).abs(),
                argmin.join(" "),
                set == c_barbell_min_cut_set(s, c),
                lam,
                lo,
                hi
            ])
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&[
        "clique_size",
        "clique_count",
        "n",
        "scheme",
        "phi_closed_form",
        "phi_bruteforce",
        "abs_diff",
        "argmin",
        "argmin_matches",
        "lambda_second",
        "cheeger_lower",
        "cheeger_upper",
    ]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(vec![("result1_cbarbell".into(), t)])
}

fn result2(cfg: &ExperimentConfig) -> Result<Tables> {
    let mut t = Table::new(&[
        "clique_size", "n", "eps", "lambda_u", "lambda_r", "phi_u", "phi_r", "t_emp_u", "t_emp_r",
        "t_lower_u", "t_upper_u", "t_lower_r", "t_upper_r",
    ]);
    let mut trials = Table::new(&["clique_size", "eps", "scheme", "trial", "k_hit", "final_error"]);
    for &s in &cfg.clique_sizes {
        let g = generate_graph(&GraphSpec::barbell(s))?;
        let au = activation(&g, Scheme::Uniform)?;
        let ar = activation(&g, Scheme::Resistance)?;
        let lu = second_eig(&iteration_matrix(&g, Scheme::Uniform)?)?;
        let lr = second_eig(&iteration_matrix(&g, Scheme::Resistance)?)?;
        let pu = c_barbell_conductance_closed_form(s, 2, Scheme::Uniform)?;
        let pr = c_barbell_conductance_closed_form(s, 2, Scheme::Resistance)?;
        for &eps in &cfg.eps {
            let mut ticks = [0u64; 2];
            for (k, (scheme, a)) in [(Scheme::Uniform, &au), (Scheme::Resistance, &ar)].into_iter().enumerate() {
                let mut at = AveragingTimeConfig::new(eps, cfg.trials, sub_seed(cfg, &[s as u64, eps.to_bits(), k as u64]));
                at.initialization = Initialization::Eigenvector;
                let est = par_averaging_time(&g, a, &at)?;
                ticks[k] = est.ticks;
                for o in &est.outcomes {
                    trials.push(row![s, eps, scheme.name(), o.trial, o.k_hit, o.final_error]);
                }
            }
            let (ul, uh) = averaging_time_bounds(lu, eps)?;
            let (rl, rh) = averaging_time_bounds(lr, eps)?;
            t.push(row![s, 2 * s, eps, lu, lr, pu, pr, ticks[0], ticks[1], ul, uh, rl, rh]);
        }
    }
    Ok(vec![
        ("barbell".into(), t),
        ("barbell_trials".into(), trials),
    ])
}

fn result2_spectra(cfg: &ExperimentConfig) -> Result<Tables> {
    let mut t = Table::new(&["clique_size", "scheme", "index", "numeric", "closed_form", "abs_diff"]);
    for &s in &cfg.clique_sizes {
        let g = generate_graph(&GraphSpec::barbell(s))?;
        for scheme in [Scheme::Uniform, Scheme::Resistance] {
            let num = spectrum(&iteration_matrix(&g, scheme)?)?;
            let closed = barbell_closed_form_spectrum(s, scheme)?;
            for (k, (a, b)) in num.eigenvalues.iter().zip(&closed.eigenvalues).enumerate() {
                t.push(row![s, scheme.name(), k + 1, *a, *b, (a - b).abs()]);
            }
        }
    }
    Ok(vec![("spectra".into(), t)])
}

fn bounds_graphs(cfg: &ExperimentConfig) -> Result<Vec<(String, WeightedGraph)>> {
    let mut graphs = Vec::new();
    for &n in &cfg.node_counts {
        for k in 0..cfg.instances {
            let seed = sub_seed(cfg, &[n as u64, k]);
            let m = (n + n / 2 + (k as usize) % n).min(n * (n - 1) / 2);
            graphs.push((
                format!("small_world_n{n}_{k}"),
                generate_graph(&GraphSpec::small_world(n, m, seed))?,
            ));
        }
    }
    for &s in &cfg.clique_sizes {
        graphs.push((format!("barbell_{s}"), generate_graph(&GraphSpec::barbell(s))?));
    }
    Ok(graphs)
}

fn result3_diameter(cfg: &ExperimentConfig) -> Result<Tables> {
    let graphs = bounds_graphs(cfg)?;
    let rows: Vec<Vec<String>> = graphs
        .par_iter()
        .map(|(name, g)| -> Result<_> {
            let c = diameter_eigen_bound_check(g)?;
            Ok(row![
                name.as_str(),
                g.n(),
                g.m(),
                c.diameter,
                c.lambda_resistance,
                c.bound_resistance,
                c.lambda_metropolis,
                c.bound_metropolis,
                c.holds(),
                c.metropolis_holds(),
                c.resistance_bound_tighter()
            ])
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&[
        "graph", "n", "m", "diameter", "lambda_r", "bound_r", "lambda_m", "bound_m", "holds_r",
        "holds_m", "resistance_bound_tighter",
    ]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(vec![("diameter".into(), t)])
}

fn result3_hitting(cfg: &ExperimentConfig) -> Result<Tables> {
    let mut t = Table::new(&["clique_size", "scheme", "from", "to", "hitting_time", "bound", "holds"]);
    let mut mix = Table::new(&["clique_size", "scheme", "lambda", "eps", "mixing_time"]);
    for &s in &cfg.clique_sizes {
        let g = generate_graph(&GraphSpec::barbell(s))?;
        for scheme in [Scheme::Uniform, Scheme::Resistance, Scheme::Metropolis] {
            let w = iteration_matrix(&g, scheme)?;
            for h in neighbor_hitting_bounds(&w, &g)? {
                t.push(row![s, scheme.name(), h.from + 1, h.to + 1, h.hitting_time, h.bound, h.holds()]);
            }
            for &eps in &cfg.eps {
                let tm = mixing_time_empirical(&w, eps)?;
                mix.push(row![s, scheme.name(), second_eig(&w)?, eps, tm]);
            }
        }
    }
    Ok(vec![("hitting".into(), t), ("mixing".into(), mix)])
}

fn result3_foster(cfg: &ExperimentConfig) -> Result<Tables> {
    let graphs = bounds_graphs(cfg)?;
    let mut t = Table::new(&["graph", "n", "m", "diameter", "edge_resistance_sum", "deviation"]);
    for (name, g) in &graphs {
        let r = effective_resistances(g)?;
        t.push(row![
            name.as_str(),
            g.n(),
            g.m(),
            diameter(g)?,
            r.edge_sum,
            (r.edge_sum - (g.n() as f64 - 1.0)).abs()
        ]);
    }
    Ok(vec![("foster".into(), t)])
}

fn drk_graphs(cfg: &ExperimentConfig) -> Result<Vec<(String, WeightedGraph)>> {
    let mut v = Vec::new();
    for &s in &cfg.clique_sizes {
        v.push((format!("barbell{s}"), generate_graph(&GraphSpec::barbell(s))?));
    }
    for &n in &cfg.node_counts {
        let spec = GraphSpec::small_world_dense(n, sub_seed(cfg, &[n as u64]));
        v.push((format!("smallworld{n}"), generate_graph(&spec)?));
    }
    Ok(v)
}

fn drk_rate_table(cfg: &ExperimentConfig) -> Result<Tables> {
    let mut t = Table::new(&[
        "graph", "n", "m", "rho", "rho_s", "messages_per_wakeup_plain", "messages_per_wakeup_normalized",
    ]);
    for (name, g) in drk_graphs(cfg)? {
        let (rho, rho_s) = drk_rates(&g)?;
        t.push(row![
            name.as_str(),
            g.n(),
            g.m(),
            rho,
            rho_s,
            drk_expected_messages(&g, DrkMode::Plain),
            drk_expected_messages(&g, DrkMode::Normalized)
        ]);
    }
    // Small-world family used by the rate check, for reference.
    for k in 0..cfg.instances.max(1) * 5 {
        let g = small_world_family(cfg.seed, crate::checks::FAMILY_LABEL, k, 10, 30)?;
        let (rho, rho_s) = drk_rates(&g)?;
        t.push(row![
            format!("family{k}"),
            g.n(),
            g.m(),
            rho,
            rho_s,
            drk_expected_messages(&g, DrkMode::Plain),
            drk_expected_messages(&g, DrkMode::Normalized)
        ]);
    }
    Ok(vec![("drk_rates".into(), t)])
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn drk_traces(cfg: &ExperimentConfig) -> Result<Tables> {
    let mut out = Vec::new();
    for (label, g) in drk_graphs(cfg)? {
        let (rho, rho_s) = drk_rates(&g)?;
        let runs: Vec<_> = (0..cfg.instances)
            .into_par_iter()
            .map(|t| -> Result<_> {
                let seed = sub_seed(cfg, &[label_hash(&label), t]);
                let mut res = Vec::new();
                for mode in [DrkMode::Plain, DrkMode::Normalized] {
                    let mut c = DrkConfig::new(mode, cfg.iters, seed);
                    c.record_every = cfg.record_every;
                    res.push(drk_solve(&g, &c)?);
                }
                Ok(res)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut trace = Table::new(&["mode", "seed_index", "k", "frobenius_error", "relative_sq_error"]);
        for (t, pair) in runs.iter().enumerate() {
            for st in pair {
                for (&(k, e), &(_, rel)) in st.error_trace.iter().zip(&st.relative_sq_errors()) {
                    trace.push(row![st.mode.name(), t, k, e, rel]);
                }
            }
        }
        let mut med = Table::new(&["k", "plain", "normalized", "bound_plain", "bound_normalized"]);
        let ks: Vec<u64> = runs[0][0].error_trace.iter().map(|x| x.0).collect();
        for (idx, &k) in ks.iter().enumerate() {
            let col = |m: usize| median(runs.iter().map(|r| r[m].relative_sq_errors()[idx].1).collect());
            med.push(row![k, col(0), col(1), rho.powi(k as i32), rho_s.powi(k as i32)]);
        }
        out.push((format!("drk_trace_{label}"), trace));
        out.push((format!("drk_medians_{label}"), med));
    }
    Ok(out)
}

fn fmmc(cfg: &ExperimentConfig, s: usize) -> Result<Tables> {
    let g = generate_graph(&GraphSpec::barbell(s))?;
    let seed = sub_seed(cfg, &[s as u64]);
    let run = fmmc_subgradient(&g, &FmmcConfig::new(cfg.iters as usize, 1.0, seed))?;
    let mut trace = Table::new(&["iter", "lambda", "running_best"]);
    for (k, (l, b)) in run.lambda_trace.iter().zip(&run.running_best).enumerate() {
        if k as u64 % cfg.record_every == 0 || k + 1 == run.lambda_trace.len() {
            trace.push(row![k, *l, *b]);
        }
    }
    let cost = fmmc_cost(&g, seed, cfg.iters as usize, 0.01)?;
    let mut t = Table::new(&[
        "clique_size", "best_lambda", "resistance_lambda", "fmmc_messages", "fmmc_step_scale",
        "fmmc_eig_tol", "fmmc_iterations", "drk_median_messages", "rel_tol",
    ]);
    let (m, r, tol, it) = match cost.fmmc_cheapest {
        Some((r, tol, it, m)) => (Some(m), Some(r), Some(tol), Some(it)),
        None => (None, None, None, None),
    };
    t.push(row![s, cost.best_lambda, cost.resistance_lambda, m, r, tol, it, cost.drk_messages, cost.rel_tol]);
    Ok(vec![
        (format!("fmmc_trace_{s}"), trace),
        (format!("fmmc_cost_{s}"), t),
    ])
}

fn extra(cfg: &ExperimentConfig, s: usize, sigma: f64) -> Result<Tables> {
    let cmp = extra_comparison(cfg.seed, s, sigma, cfg.instances, cfg.rounds)?;
    let tag = format!("n{}_sigma{sigma}", 2 * s);
    let keep = |k: usize| k % cfg.record_every as usize == 0 || k == cfg.rounds;
    let mut metrics = Table::new(&["instance", "flavor", "round", "subopt", "fval", "consensus_violation"]);
    for (flavor, runs) in [("uniform_extra", &cmp.uniform), ("resistance_extra", &cmp.resistance)] {
        for (i, run) in runs.iter().enumerate() {
            for m in run.iter().filter(|m| keep(m.round)) {
                metrics.push(row![i, flavor, m.round, m.subopt, m.fval, m.consensus_violation]);
            }
        }
    }
    let mut med = Table::new(&[
        "round", "subopt_u", "subopt_r", "consensus_violation_u", "consensus_violation_r",
    ]);
    for k in (0..=cfg.rounds).filter(|&k| keep(k)) {
        let col = |runs: &[Vec<ergossip_core::optim::RoundMetrics>], f: fn(&ergossip_core::optim::RoundMetrics) -> f64| {
            median(runs.iter().map(|r| f(&r[k])).collect())
        };
        med.push(row![
            k,
            col(&cmp.uniform, |m| m.subopt),
            col(&cmp.resistance, |m| m.subopt),
            col(&cmp.uniform, |m| m.consensus_violation),
            col(&cmp.resistance, |m| m.consensus_violation)
        ]);
    }
    let (cv_u, so_u) = final_medians(&cmp.uniform);
    let (cv_r, so_r) = final_medians(&cmp.resistance);
    let mut fin = Table::new(&[
        "clique_size", "sigma", "consensus_violation_u", "consensus_violation_r", "subopt_u", "subopt_r",
        "consensus_ordered", "subopt_ordered",
    ]);
    fin.push(row![s, sigma, cv_u, cv_r, so_u, so_r, cv_r < cv_u, so_r < so_u]);
    Ok(vec![
        (format!("extra_metrics_{tag}"), metrics),
        (format!("extra_medians_{tag}"), med),
        (format!("extra_final_{tag}"), fin),
    ])
}

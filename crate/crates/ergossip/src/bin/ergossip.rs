use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ergossip::config::ExperimentConfig;
use ergossip::csvout::Table;
use ergossip::edgelist::{read_edgelist, write_edgelist};
use ergossip::experiment::run_experiment;
use ergossip::parallel::{build_pool, par_averaging_time, resolve_threads};
use ergossip::plotdata::{emit_plotdata, Transform};
use ergossip::row;
use ergossip_core::gossip::{
    initial_vectors, simulate_run, AveragingTimeConfig, GossipRunConfig, Initialization,
};
use ergossip_core::graphs::{diameter, generate_graph, GraphKind, GraphSpec};
use ergossip_core::optim::{
    build_comm_matrix, extra_run, generate_problem, reference_solution, split_initialization,
    CommFlavor, ExtraConfig,
};
use ergossip_core::resistance::{drk_rates, drk_solve, effective_resistances, DrkConfig, DrkMode};
use ergossip_core::rng::derive_seed;
use ergossip_core::spectral::fmmc::{fmmc_subgradient, FmmcConfig};
use ergossip_core::spectral::{
    averaging_time_bounds, build_activation, c_barbell_conductance_closed_form, cheeger_bounds,
    diameter_eigen_bound_check, expected_iteration_matrix, min_conductance_bruteforce, spectrum,
    ActivationMatrix, Scheme, BRUTEFORCE_MAX_NODES,
};
use ergossip_core::WeightedGraph;

#[derive(Parser)]
#[command(name = "ergossip", version, about = "Effective-resistance gossip workbench")]
struct Cli {
    /// Master seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (ERGOSSIP_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a graph and write it as an edge list.
    Graph(GraphArgs),
    /// Effective resistances of all node pairs.
    Resistance {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decentralized randomized Kaczmarz for the Laplacian pseudoinverse.
    Drk {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "normalized")]
        mode: String,
        #[arg(long, default_value_t = 10_000)]
        iters: u64,
        #[arg(long, default_value_t = 100)]
        record_every: u64,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Eigenvalues of the expected iteration matrix, ascending.
    Spectrum {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimum conductance of the expected iteration matrix.
    Conductance {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        scheme: String,
        /// Enumerate all cuts (at most 20 nodes).
        #[arg(long)]
        bruteforce: bool,
        /// Also print the c-barbell closed form for this clique size.
        #[arg(long)]
        clique_size: Option<usize>,
        #[arg(long)]
        clique_count: Option<usize>,
    },
    /// Spectral, averaging-time, Cheeger and diameter bounds.
    Bounds {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        scheme: String,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
    },
    /// Monte-Carlo averaging time, or one traced run with --trace.
    Gossip(GossipArgs),
    /// EXTRA on synthetic logistic regression.
    Optim(OptimArgs),
    /// Projected-subgradient fastest-mixing baseline.
    Fmmc {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long, default_value_t = 1.0)]
        step_scale: f64,
        /// Use power iteration to this residual instead of exact eigenvectors.
        #[arg(long)]
        eig_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment described by a key=value config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Extract columns of a CSV into a whitespace table.
    Plotdata {
        #[arg(long)]
        csv: PathBuf,
        /// Comma-separated column names; the first is the abscissa.
        #[arg(long)]
        columns: String,
        #[arg(long, default_value = "linear")]
        transform: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    kind: String,
    #[arg(long)]
    clique_size: Option<usize>,
    #[arg(long)]
    clique_count: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Edge count for small_world; defaults to the dense setting.
    #[arg(long)]
    edges: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GossipArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    scheme: String,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 10_000_000)]
    max_ticks: u64,
    #[arg(long, default_value = "eigenvector")]
    init: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a single run's ticks (`k,edge_i,edge_j,rel_error`) instead.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    record_every: u64,
}

#[derive(Args)]
struct OptimArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    flavor: String,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 20)]
    instances: u64,
    #[arg(long, default_value_t = 10_000)]
    rounds: usize,
    #[arg(long, default_value_t = 20)]
    features: usize,
    #[arg(long, default_value_t = 5)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
}

struct Ctx {
    seed: u64,
    seed_given: bool,
    out_dir: Option<PathBuf>,
}

impl Ctx {
    fn out(&self, p: &Path) -> anyhow::Result<PathBuf> {
        let path = match &self.out_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        };
        if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(path)
    }
}

fn scheme_arg(s: &str) -> anyhow::Result<Scheme> {
    match Scheme::parse(s) {
        Some(Scheme::Custom) | None => bail!("unknown scheme `{s}` (uniform, resistance, metropolis)"),
        Some(sc) => Ok(sc),
    }
}

fn activation(g: &WeightedGraph, scheme: Scheme) -> anyhow::Result<ActivationMatrix> {
    let r = match scheme {
        Scheme::Resistance => Some(effective_resistances(g)?),
        _ => None,
    };
    Ok(build_activation(g, scheme, r.as_ref())?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let threads = resolve_threads(cli.threads)?;
    let pool = build_pool(threads)?;
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(0),
        seed_given: cli.seed.is_some(),
        out_dir: cli.out_dir,
    };
    pool.install(|| dispatch(cli.cmd, &ctx))
}

fn dispatch(cmd: Cmd, ctx: &Ctx) -> anyhow::Result<ExitCode> {
    match cmd {
        Cmd::Graph(a) => cmd_graph(a, ctx)?,
        Cmd::Resistance { graph, out } => {
            let g = read_edgelist(&graph)?;
            let r = effective_resistances(&g)?;
            let mut t = Table::new(&["i", "j", "R"]);
            for i in 0..g.n() {
                for j in i + 1..g.n() {
                    t.push(row![i + 1, j + 1, r.get(i, j)]);
                }
            }
            t.write(&ctx.out(&out)?)?;
            println!("edge resistance sum {} (n - 1 = {})", r.edge_sum, g.n() - 1);
        }
        Cmd::Drk { graph, mode, iters, record_every, trace } => {
            let g = read_edgelist(&graph)?;
            let mode = DrkMode::parse(&mode).with_context(|| format!("unknown mode `{mode}` (plain, normalized)"))?;
            let mut cfg = DrkConfig::new(mode, iters, ctx.seed);
            cfg.record_every = record_every;
            let st = drk_solve(&g, &cfg)?;
            if let Some(p) = trace {
                let mut t = Table::new(&["k", "frobenius_error"]);
                for &(k, e) in &st.error_trace {
                    t.push(row![k, e]);
                }
                t.write(&ctx.out(&p)?)?;
            }
            let (rho, rho_s) = drk_rates(&g)?;
            let last = st.error_trace.last().expect("trace has endpoints").1;
            println!("mode {} iterations {}", mode.name(), st.iterations);
            println!("frobenius_error {last} relative {}", last / st.pinv_norm);
            println!("rho {rho} rho_s {rho_s}");
            println!("messages {}", st.communications);
        }
        Cmd::Spectrum { graph, scheme, out } => {
            let g = read_edgelist(&graph)?;
            let a = activation(&g, scheme_arg(&scheme)?)?;
            let sp = spectrum(&expected_iteration_matrix(&a))?;
            let mut t = Table::new(&["index", "eigenvalue"]);
            for (k, v) in sp.eigenvalues.iter().enumerate() {
                t.push(row![k + 1, *v]);
            }
            t.write(&ctx.out(&out)?)?;
            println!("lambda_second {}", sp.second_largest().unwrap_or(f64::NAN));
        }
        Cmd::Conductance { graph, scheme, bruteforce, clique_size, clique_count } => {
            let g = read_edgelist(&graph)?;
            let scheme = scheme_arg(&scheme)?;
            if !bruteforce && clique_size.is_none() {
                bail!("pass --bruteforce or --clique-size for the closed form");
            }
            if bruteforce {
                let w = expected_iteration_matrix(&activation(&g, scheme)?);
                let (phi, set) = min_conductance_bruteforce(&w)?;
                let set: Vec<String> = set.iter().map(|v| (v + 1).to_string()).collect();
                println!("phi_bruteforce {phi}");
                println!("argmin {}", set.join(" "));
            }
            if let Some(s) = clique_size {
                let c = clique_count.unwrap_or(g.n() / s);
                println!("phi_closed_form {}", c_barbell_conductance_closed_form(s, c, scheme)?);
            }
        }
        Cmd::Bounds { graph, scheme, eps } => {
            let g = read_edgelist(&graph)?;
            let scheme = scheme_arg(&scheme)?;
            let w = expected_iteration_matrix(&activation(&g, scheme)?);
            let lam = spectrum(&w)?.second_largest().context("need two nodes")?;
            let (lo, hi) = averaging_time_bounds(lam, eps)?;
            println!("lambda_second {lam}");
            println!("averaging_time_ticks [{lo}, {hi}]");
            if g.n() <= BRUTEFORCE_MAX_NODES {
                let (phi, _) = min_conductance_bruteforce(&w)?;
                let (cl, ch) = cheeger_bounds(phi)?;
                println!("conductance {phi}");
                println!("cheeger [{cl}, {ch}]");
            }
            let d = diameter_eigen_bound_check(&g)?;
            println!("diameter {}", diameter(&g)?);
            println!(
                "resistance lambda {} <= {} {}",
                d.lambda_resistance,
                d.bound_resistance,
                d.holds()
            );
            println!(
                "metropolis lambda {} <= {} {}",
                d.lambda_metropolis,
                d.bound_metropolis,
                d.metropolis_holds()
            );
        }
        Cmd::Gossip(a) => cmd_gossip(a, ctx)?,
        Cmd::Optim(a) => cmd_optim(a, ctx)?,
        Cmd::Fmmc { graph, iters, step_scale, eig_tol, out } => {
            let g = read_edgelist(&graph)?;
            let mut cfg = FmmcConfig::new(iters, step_scale, ctx.seed);
            cfg.eig_tol = eig_tol;
            let res = fmmc_subgradient(&g, &cfg)?;
            if let Some(p) = out {
                let mut t = Table::new(&["iter", "lambda", "running_best"]);
                for (k, (l, b)) in res.lambda_trace.iter().zip(&res.running_best).enumerate() {
                    t.push(row![k, *l, *b]);
                }
                t.write(&ctx.out(&p)?)?;
            }
            println!("best_lambda {}", res.best_lambda);
            println!("messages {}", res.communications);
        }
        Cmd::Experiment { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if ctx.seed_given {
                cfg.seed = ctx.seed;
            }
            if let Some(d) = &ctx.out_dir {
                cfg.out_dir = d.clone();
            }
            let report = run_experiment(&cfg)?;
            print!(
                "{}",
                std::fs::read_to_string(&report.summary).context("reading summary")?
            );
            if !report.success() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Plotdata { csv, columns, transform, out } => {
            let tr = Transform::parse(&transform).with_context(|| format!("unknown transform `{transform}`"))?;
            let cols: Vec<&str> = columns.split(',').map(str::trim).collect();
            let data = emit_plotdata(&csv, &cols, tr)?;
            if data.skipped > 0 {
                eprintln!("warning: skipped {} rows", data.skipped);
            }
            match out {
                Some(p) => std::fs::write(ctx.out(&p)?, &data.text)?,
                None => print!("{}", data.text),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_graph(a: GraphArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let kind = GraphKind::parse(&a.kind).with_context(|| format!("unknown graph kind `{}`", a.kind))?;
    let need = |v: Option<usize>, flag: &str| v.with_context(|| format!("--{flag} is required for {}", kind.name()));
    let spec = match kind {
        GraphKind::Complete => GraphSpec::complete(need(a.nodes, "nodes")?),
        GraphKind::Barbell => GraphSpec::barbell(need(a.clique_size, "clique-size")?),
        GraphKind::CBarbell => GraphSpec::c_barbell(need(a.clique_size, "clique-size")?, need(a.clique_count, "clique-count")?),
        GraphKind::SmallWorld => {
            let n = need(a.nodes, "nodes")?;
            match a.edges {
                Some(m) => GraphSpec::small_world(n, m, ctx.seed),
                None => GraphSpec::small_world_dense(n, ctx.seed),
            }
        }
        GraphKind::FromFile => bail!("from_file graphs are read with --graph, not generated"),
    };
    let g = generate_graph(&spec)?;
    write_edgelist(&g, &ctx.out(&a.out)?)?;
    println!("{} n={} m={}", kind.name(), g.n(), g.m());
    Ok(())
}

fn cmd_gossip(a: GossipArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let g = read_edgelist(&a.graph)?;
    let act = activation(&g, scheme_arg(&a.scheme)?)?;
    let init = Initialization::parse(&a.init).with_context(|| format!("unknown initialization `{}`", a.init))?;
    if let Some(p) = a.trace {
        let y0 = initial_vectors(&act, init)?.remove(0).1;
        let tr = simulate_run(&GossipRunConfig {
            graph: &g,
            activation: &act,
            y0,
            eps: Some(a.eps),
            max_ticks: a.max_ticks,
            seed: ctx.seed,
            record_every: a.record_every,
        })?;
        let mut t = Table::new(&["k", "edge_i", "edge_j", "rel_error"]);
        for r in &tr.ticks {
            let (i, j) = match r.edge {
                Some((i, j)) => (Some(i + 1), Some(j + 1)),
                None => (None, None),
            };
            t.push(row![r.k, i, j, r.rel_error]);
        }
        t.write(&ctx.out(&p)?)?;
        println!("ticks {} k_hit {:?} final_error {}", tr.total_ticks, tr.k_hit, tr.final_error);
        return Ok(());
    }
    let mut cfg = AveragingTimeConfig::new(a.eps, a.trials, ctx.seed);
    cfg.max_ticks = a.max_ticks;
    cfg.initialization = init;
    let est = par_averaging_time(&g, &act, &cfg)?;
    if let Some(p) = a.out {
        let mut t = Table::new(&["trial", "k_hit", "final_error"]);
        for o in &est.outcomes {
            t.push(row![o.trial, o.k_hit, o.final_error]);
        }
        t.write(&ctx.out(&p)?)?;
    }
    let lam = spectrum(&expected_iteration_matrix(&act))?
        .second_largest()
        .context("need two nodes")?;
    let (lo, hi) = averaging_time_bounds(lam, a.eps)?;
    println!("averaging_time_ticks {} ({})", est.ticks, est.initialization.name());
    println!("bounds [{lo}, {hi}]");
    Ok(())
}

fn cmd_optim(a: OptimArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let g = read_edgelist(&a.graph)?;
    let flavor = CommFlavor::parse(&a.flavor).with_context(|| format!("unknown flavor `{}`", a.flavor))?;
    if !matches!(flavor, CommFlavor::UniformExtra | CommFlavor::ResistanceExtra) {
        bail!("EXTRA runs need an extra flavor (uniform_extra, resistance_extra)");
    }
    let r = effective_resistances(&g)?;
    let w = build_comm_matrix(&g, flavor, Some(&r))?.w;
    let n = g.n();
    let mut t = Table::new(&["instance", "round", "subopt", "fval", "consensus_violation"]);
    let mut finals = Vec::new();
    for inst in 0..a.instances {
        let prob = generate_problem(n, a.features, a.samples, a.sigma, derive_seed(ctx.seed, &[inst, 0]))?;
        let x_star = reference_solution(&prob, 1e-10, None)?;
        let x0 = split_initialization(n, a.features, derive_seed(ctx.seed, &[inst, 1]));
        let trace = extra_run(&prob, &w, &x0, &x_star, &ExtraConfig { rounds: a.rounds, step: None })?;
        for m in &trace {
            t.push(row![inst, m.round, m.subopt, m.fval, m.consensus_violation]);
        }
        finals.push(*trace.last().expect("rounds >= 1"));
    }
    t.write(&ctx.out(&a.out)?)?;
    for m in finals {
        println!("final subopt {} consensus_violation {}", m.subopt, m.consensus_violation);
    }
    Ok(())
}

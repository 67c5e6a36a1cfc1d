use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use multishift::bench::{
    korobov_f1_cell, pde_cell, run_experiment, ConfigFile, ExperimentConfig, Pipeline, Which,
};
use multishift::cbc::validate_zero_fiber;
use multishift::shifts::{adaptive_shifts_report, strategy_sizes};

#[derive(Parser)]
#[command(
    name = "multishift",
    version,
    about = "Multiple rank-1 lattice shifts: construction, reconstruction and benchmarks"
)]
struct Cli {
    /// TOML file overriding the experiment defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for error samples and probabilistic shifts
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV files
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write gnuplot scripts next to the CSV files
    #[arg(long, global = true)]
    emit_gnuplot: bool,
    #[command(subcommand)]
    command: Command,
}

/// Overrides shared by the single-run subcommands.
#[derive(Args, Clone, Debug, Default)]
struct Params {
    /// Dimensions, comma separated
    #[arg(long, short, value_delimiter = ',')]
    dim: Option<Vec<usize>>,
    /// Lattice sizes, comma separated (nudged to the nearest prime)
    #[arg(long, short, value_delimiter = ',')]
    n: Option<Vec<u64>>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Threshold t in (0, 1)
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a generating vector and report the index set and fibers
    Cbc(Params),
    /// Construct the adaptive shift set and compare strategy sizes
    Shifts {
        #[command(flatten)]
        params: Params,
        /// Also run every strategy on its own
        #[arg(long)]
        all: bool,
    },
    /// Reconstruct the smooth periodic test function and report errors
    Approx(Params),
    /// Solve the Neumann benchmark and report errors of source and solution
    Pde(Params),
    /// Run one experiment (shift_growth, stability, korobov_f1, pde or all) and write CSV files
    Bench { which: String },
}

fn config(cli: &Cli, which: Which, params: &Params) -> Result<ExperimentConfig> {
    let mut file = match &cli.config {
        Some(path) => {
            ConfigFile::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => ConfigFile::default(),
    };
    file.seed = cli.seed.or(file.seed);
    file.out = cli.out.clone().or(file.out);
    if cli.emit_gnuplot {
        file.emit_gnuplot = Some(true);
    }
    file.dims = params.dim.clone().or(file.dims);
    file.n = params.n.clone().or(file.n);
    file.alpha = params.alpha.or(file.alpha);
    file.t = params.t.or(file.t);
    Ok(ExperimentConfig::defaults(which).with_overrides(file)?)
}

fn cells(cfg: &ExperimentConfig) -> impl Iterator<Item = (usize, u64)> + '_ {
    cfg.dims
        .iter()
        .flat_map(|&d| cfg.n.iter().map(move |&n| (d, n)))
}

/// Single-run subcommands default to one small cell unless told otherwise.
fn small(params: &Params) -> Params {
    Params {
        dim: params.dim.clone().or(Some(vec![2])),
        n: params.n.clone().or(Some(vec![1031])),
        ..params.clone()
    }
}

fn run_cbc(cfg: &ExperimentConfig) -> Result<()> {
    println!("d,n,m,index_size,fibers,r,zero_fiber_trivial,generator");
    for (d, n) in cells(cfg) {
        let p = Pipeline::build(cfg.params(d)?, n, cfg.m_mode)?;
        let g: Vec<String> = p.lat.generator().iter().map(u64::to_string).collect();
        println!(
            "{d},{n},{:.6},{},{},{},{},{}",
            p.m,
            p.a.len(),
            p.part.len(),
            p.r,
            validate_zero_fiber(&p.lat, &p.a),
            g.join(" ")
        );
    }
    Ok(())
}

fn run_shifts(cfg: &ExperimentConfig, all: bool) -> Result<()> {
    println!("d,n,r,diff_size,v,s_crt,strategy,s,ratio,threshold");
    for (d, n) in cells(cfg) {
        let p = Pipeline::build(cfg.params(d)?, n, cfg.m_mode)?;
        let (y, report) = adaptive_shifts_report(&p.h, p.r, cfg.t, n, p.m, &p.params)?;
        let threshold = if p.r > 1 {
            cfg.t / (p.r - 1) as f64
        } else {
            f64::INFINITY
        };
        println!(
            "{d},{n},{},{},{},{},{},{},{:.6},{:.6}",
            p.r,
            p.h.len(),
            report.v,
            report.s_crt(),
            y.strategy().name(),
            y.len(),
            y.achieved_ratio().unwrap_or(0.0),
            threshold
        );
        if all {
            let sizes = strategy_sizes(&p.h, p.r, cfg.t, n, p.m, &p.params)?;
            let show = |s: Option<u64>| s.map_or("-".to_string(), |v| v.to_string());
            println!(
                "  polynomial={} single_lattice={} multi_lattice={} crt={} adaptive={}",
                show(sizes.polynomial),
                show(sizes.single_lattice),
                show(sizes.multi_lattice),
                sizes.crt,
                sizes.adaptive
            );
        }
    }
    Ok(())
}

fn run_approx(cfg: &ExperimentConfig) -> Result<()> {
    println!("d,n,s,n_tot,max_kappa,l2,linf,rel_l2,rel_linf");
    for (d, n) in cells(cfg) {
        let r = korobov_f1_cell(cfg, d, n)?;
        println!(
            "{d},{n},{},{},{:.4},{:.3e},{:.3e},{:.3e},{:.3e}",
            r.s, r.n_tot, r.max_kappa, r.l2, r.linf, r.rel_l2, r.rel_linf
        );
    }
    Ok(())
}

fn run_pde(cfg: &ExperimentConfig) -> Result<()> {
    println!("d,n,s,n_tot,max_kappa,rel_l2_f,rel_l2_u,compatibility_residual");
    for (d, n) in cells(cfg) {
        let r = pde_cell(cfg, d, n)?;
        println!(
            "{d},{n},{},{},{:.4},{:.3e},{:.3e},{:.3e}",
            r.s, r.n_tot, r.max_kappa, r.rel_l2_f, r.rel_l2_u, r.compatibility_residual
        );
    }
    Ok(())
}

fn run_bench(cli: &Cli, which: &str) -> Result<()> {
    let list: Vec<Which> = if which == "all" {
        Which::ALL.to_vec()
    } else {
        vec![which.parse()?]
    };
    for w in list {
        let cfg = config(cli, w, &Params::default())?;
        for path in run_experiment(&cfg, w)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    match &cli.command {
        Command::Cbc(p) => run_cbc(&config(&cli, Which::ShiftGrowth, &small(p))?),
        Command::Shifts { params, all } => {
            run_shifts(&config(&cli, Which::ShiftGrowth, &small(params))?, *all)
        }
        Command::Approx(p) => run_approx(&config(&cli, Which::KorobovF1, &small(p))?),
        Command::Pde(p) => run_pde(&config(&cli, Which::Pde, &small(p))?),
        Command::Bench { which } => run_bench(&cli, which),
    }
}

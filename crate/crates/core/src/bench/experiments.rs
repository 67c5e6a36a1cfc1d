use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{DeltaMode, ExperimentConfig, Which};
use super::errors::{estimate_errors, lattice_nodes, ErrorEstimate};
use super::functions::{f1, pde_exact, pde_mean, pde_source};
use super::Pipeline;
use crate::cosine::{approximate_nonperiodic, poisson_from_cosine};
use crate::error::Result;
use crate::reconstruct::{approximate, gram_diagnostics, gram_diagnostics_per_frequency};
use crate::shifts::{
    k_simplified, k_standard, probabilistic_shifts, standard_probabilistic_shifts, strategy_sizes,
    ShiftSet,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftGrowthRow {
    pub d: usize,
    pub n: u64,
    pub m: f64,
    pub index_size: usize,
    pub r: usize,
    pub diff_size: usize,
    pub strategy: &'static str,
    /// Empty when the strategy finds no set below the CRT budget.
    pub s: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRow {
    pub d: usize,
    pub n: u64,
    pub r: usize,
    pub strategy: &'static str,
    pub s: u64,
    pub max_kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub d: usize,
    pub n: u64,
    pub strategy: &'static str,
    pub index_size: usize,
    pub r: usize,
    pub s: u64,
    pub n_tot: u64,
    pub max_kappa: f64,
    pub l2: f64,
    pub linf: f64,
    pub rel_l2: f64,
    pub rel_linf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PdeRow {
    pub d: usize,
    pub n: u64,
    pub strategy: &'static str,
    pub index_size: usize,
    pub r: usize,
    pub s: u64,
    pub n_tot: u64,
    pub max_kappa: f64,
    pub l2_f: f64,
    pub rel_l2_f: f64,
    pub l2_u: f64,
    pub rel_l2_u: f64,
    pub compatibility_residual: f64,
}

#[derive(Serialize)]
struct TimingRow {
    d: usize,
    n: u64,
    seconds: f64,
}

/// Strategy sizes for one `(d, N)`.
pub fn shift_growth_cell(cfg: &ExperimentConfig, d: usize, n: u64) -> Result<Vec<ShiftGrowthRow>> {
    let p = Pipeline::build(cfg.params(d)?, n, cfg.m_mode)?;
    let sizes = strategy_sizes(&p.h, p.r, cfg.t, n, p.m, &p.params)?;
    let row = |strategy, s| ShiftGrowthRow {
        d,
        n,
        m: p.m,
        index_size: p.a.len(),
        r: p.r,
        diff_size: p.h.len(),
        strategy,
        s,
    };
    Ok(vec![
        row("polynomial", sizes.polynomial),
        row("single_lattice", sizes.single_lattice),
        row("multi_lattice", sizes.multi_lattice),
        row("crt", Some(sizes.crt)),
        row("adaptive", Some(sizes.adaptive)),
    ])
}

/// Shift count and worst fiber condition number: adaptive against both
/// probabilistic baselines at the 99% level.
pub fn stability_cell(cfg: &ExperimentConfig, d: usize, n: u64) -> Result<Vec<StabilityRow>> {
    let p = Pipeline::build(cfg.params(d)?, n, cfg.m_mode)?;
    let row = |strategy, s: usize, max_kappa| StabilityRow {
        d,
        n,
        r: p.r,
        strategy,
        s: s as u64,
        max_kappa,
    };
    if p.r <= 1 {
        return Ok(["adaptive", "probabilistic", "standard_probabilistic"]
            .map(|s| row(s, 1, 1.0))
            .to_vec());
    }
    let adaptive = p.adaptive(cfg.t)?;
    let simplified = probabilistic_shifts(p.r, n, k_simplified(n), cfg.t, d, cfg.seed);
    let groups = standard_probabilistic_shifts(p.r, n, k_standard(n, p.r), d, cfg.seed);
    let standard_total: usize = groups.iter().map(ShiftSet::len).sum();
    Ok(vec![
        row(
            "adaptive",
            adaptive.len(),
            gram_diagnostics(&p.a, &p.part, &adaptive).max_kappa,
        ),
        row(
            "probabilistic",
            simplified.len(),
            gram_diagnostics(&p.a, &p.part, &simplified).max_kappa,
        ),
        row(
            "standard_probabilistic",
            standard_total,
            gram_diagnostics_per_frequency(&p.a, &p.part, &groups).max_kappa,
        ),
    ])
}

fn deltas(mode: DeltaMode, d: usize) -> Vec<Vec<f64>> {
    match mode {
        DeltaMode::Zero => vec![vec![0.0; d]],
        DeltaMode::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
                .collect()
        }
    }
}

/// Root-mean-square L2 and worst L-infinity over the draws; all draws share
/// one sample, hence one set of reference norms.
fn aggregate(runs: &[ErrorEstimate]) -> ErrorEstimate {
    let k = runs.len() as f64;
    ErrorEstimate {
        l2: (runs.iter().map(|e| e.l2 * e.l2).sum::<f64>() / k).sqrt(),
        linf: runs.iter().map(|e| e.linf).fold(0.0, f64::max),
        norm_l2: runs[0].norm_l2,
        norm_linf: runs[0].norm_linf,
    }
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Errors of the periodic reconstruction of `f_1`.
pub fn korobov_f1_cell(cfg: &ExperimentConfig, d: usize, n: u64) -> Result<ConvergenceRow> {
    let p = Pipeline::build(cfg.params(d)?, n, cfg.m_mode)?;
    let y = p.shifts(cfg.strategy, cfg.t, cfg.seed)?;
    let max_kappa = gram_diagnostics(&p.a, &p.part, &y).max_kappa;
    let nodes = lattice_nodes(&p.lat, false);
    let f = |x: &[f64]| real(f1(x));
    let runs = deltas(cfg.delta, d)
        .iter()
        .map(|delta| {
            let approx = approximate(&f, &p.lat, &p.a, &p.part, &y, delta)?;
            estimate_errors(
                &f,
                &|x: &[f64]| approx.evaluate(x),
                d,
                cfg.error_budget,
                cfg.seed,
                &nodes,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let e = aggregate(&runs);
    let s = y.len() as u64;
    Ok(ConvergenceRow {
        d,
        n,
        strategy: cfg.strategy.name(),
        index_size: p.a.len(),
        r: p.r,
        s,
        n_tot: n * s,
        max_kappa,
        l2: e.l2,
        linf: e.linf,
        rel_l2: e.rel_l2()?,
        rel_linf: e.rel_linf()?,
    })
}

/// Errors of the cosine reconstruction of the Poisson source and of the
/// resulting Neumann solution.
pub fn pde_cell(cfg: &ExperimentConfig, d: usize, n: u64) -> Result<PdeRow> {
    let p = Pipeline::build(cfg.params(d)?, n, cfg.m_mode)?;
    let y = p.shifts(cfg.strategy, cfg.t, cfg.seed)?;
    let max_kappa = gram_diagnostics(&p.a, &p.part, &y).max_kappa;
    let gamma = p.params.gamma().to_vec();
    let mean = pde_mean(&gamma);
    let nodes = lattice_nodes(&p.lat, true);
    let source = |x: &[f64]| pde_source(&gamma, x);
    let f = |x: &[f64]| real(source(x));
    let u = |x: &[f64]| real(pde_exact(&gamma, x));

    let mut f_runs = Vec::new();
    let mut u_runs = Vec::new();
    let mut residual: f64 = 0.0;
    for delta in deltas(cfg.delta, d) {
        let approx = approximate_nonperiodic(&source, &p.lat, &p.a, &p.part, &y, &delta)?;
        let sol = poisson_from_cosine(&approx.cosine, mean);
        residual = residual.max(sol.compatibility_residual.abs());
        let f_tilde = |x: &[f64]| real(approx.cosine.evaluate(x));
        let u_tilde = |x: &[f64]| real(sol.evaluate(x));
        f_runs.push(estimate_errors(
            &f,
            &f_tilde,
            d,
            cfg.error_budget,
            cfg.seed,
            &nodes,
        )?);
        u_runs.push(estimate_errors(
            &u,
            &u_tilde,
            d,
            cfg.error_budget,
            cfg.seed,
            &nodes,
        )?);
    }
    let ef = aggregate(&f_runs);
    let eu = aggregate(&u_runs);
    let s = y.len() as u64;
    Ok(PdeRow {
        d,
        n,
        strategy: cfg.strategy.name(),
        index_size: p.a.len(),
        r: p.r,
        s,
        n_tot: n * s,
        max_kappa,
        l2_f: ef.l2,
        rel_l2_f: ef.rel_l2()?,
        l2_u: eu.l2,
        rel_l2_u: eu.rel_l2()?,
        compatibility_residual: residual,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn timed<T>(run: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = run()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Runs every `(d, N)` cell of `which` in parallel and writes
/// `<which>.csv`, `<which>_timing.csv` and optionally `<which>.gp` into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig, which: Which) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.out)?;
    let cells: Vec<(usize, u64)> = cfg
        .dims
        .iter()
        .flat_map(|&d| cfg.n.iter().map(move |&n| (d, n)))
        .collect();
    let main = cfg.out.join(format!("{which}.csv"));
    let timing_path = cfg.out.join(format!("{which}_timing.csv"));

    macro_rules! run_cells {
        ($cell:expr) => {{
            let results = cells
                .par_iter()
                .map(|&(d, n)| {
                    log::info!("{which}: d = {d}, N = {n}");
                    timed(|| $cell(cfg, d, n)).map(|(rows, secs)| {
                        (
                            rows,
                            TimingRow {
                                d,
                                n,
                                seconds: secs,
                            },
                        )
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let (rows, timing): (Vec<_>, Vec<_>) = results.into_iter().unzip();
            write_csv(&main, &rows.into_iter().flatten().collect::<Vec<_>>())?;
            write_csv(&timing_path, &timing)?;
        }};
    }
    match which {
        Which::ShiftGrowth => run_cells!(shift_growth_cell),
        Which::Stability => run_cells!(stability_cell),
        Which::KorobovF1 => run_cells!(|c, d, n| korobov_f1_cell(c, d, n).map(|r| vec![r])),
        Which::Pde => run_cells!(|c, d, n| pde_cell(c, d, n).map(|r| vec![r])),
    }

    let mut files = vec![main, timing_path];
    if cfg.emit_gnuplot {
        let gp = cfg.out.join(format!("{which}.gp"));
        std::fs::write(&gp, gnuplot_script(cfg, which))?;
        files.push(gp);
    }
    Ok(files)
}

fn gnuplot_script(cfg: &ExperimentConfig, which: Which) -> String {
    let csv = format!("{which}.csv");
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set key outside right");
    let _ = writeln!(s, "set grid");
    let series = |x: &str, y: &str, strategy: Option<&str>| {
        let filter = strategy.map_or(String::new(), |st| {
            format!(" && strcol(\"strategy\") eq '{st}'")
        });
        let label = strategy.unwrap_or(y);
        cfg.dims
            .iter()
            .map(|d| {
                format!(
                    "'{csv}' using (column(\"d\")=={d}{filter} ? column(\"{x}\") : NaN):\"{y}\" \
                     with linespoints title 'd={d} {label}'"
                )
            })
            .collect::<Vec<_>>()
    };
    let plot = |s: &mut String, out: &str, xlabel: &str, ylabel: &str, lines: Vec<String>| {
        let _ = writeln!(s, "\nset output '{out}'");
        let _ = writeln!(s, "set xlabel '{xlabel}'\nset ylabel '{ylabel}'");
        let _ = writeln!(s, "plot {}", lines.join(", \\\n     "));
    };
    match which {
        Which::ShiftGrowth | Which::Stability => {
            let strategies: &[&str] = if which == Which::ShiftGrowth {
                &[
                    "polynomial",
                    "single_lattice",
                    "multi_lattice",
                    "crt",
                    "adaptive",
                ]
            } else {
                &["adaptive", "probabilistic", "standard_probabilistic"]
            };
            let lines: Vec<String> = strategies
                .iter()
                .flat_map(|st| series("n", "s", Some(st)))
                .collect();
            let _ = writeln!(s, "set logscale x 2\nset logscale y");
            plot(&mut s, &format!("{which}_s.png"), "N", "S", lines);
            if which == Which::Stability {
                plot(
                    &mut s,
                    "stability_kappa.png",
                    "N",
                    "max kappa",
                    strategies
                        .iter()
                        .flat_map(|st| series("n", "max_kappa", Some(st)))
                        .collect(),
                );
            }
        }
        Which::KorobovF1 => {
            let _ = writeln!(s, "set logscale xy");
            plot(
                &mut s,
                "korobov_f1_n.png",
                "N",
                "error",
                [series("n", "l2", None), series("n", "linf", None)].concat(),
            );
            plot(
                &mut s,
                "korobov_f1_ntot.png",
                "N_tot",
                "error",
                [series("n_tot", "l2", None), series("n_tot", "linf", None)].concat(),
            );
            plot(&mut s, "korobov_f1_s.png", "N", "S", series("n", "s", None));
        }
        Which::Pde => {
            let _ = writeln!(s, "set logscale xy");
            plot(
                &mut s,
                "pde_n.png",
                "N",
                "relative L2",
                [series("n", "rel_l2_f", None), series("n", "rel_l2_u", None)].concat(),
            );
            plot(
                &mut s,
                "pde_ntot.png",
                "N_tot",
                "relative L2",
                [
                    series("n_tot", "rel_l2_f", None),
                    series("n_tot", "rel_l2_u", None),
                ]
                .concat(),
            );
            plot(&mut s, "pde_s.png", "N", "S", series("n", "s", None));
        }
    }
    s
}

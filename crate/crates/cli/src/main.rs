//! `edchain`: spectra, correlators, entanglement diagnostics, and
//! Landau-Zener ramp analysis for a four-species fermionic chain.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{ConfigError, Overrides, RunConfig};
use edchain::obs;
use edchain::sweep::{RefineOpts, SlopeWindows};
use edchain::{
    dense_all, fock, landau_zener, locate_crossing, lowest_k, model, run_sweep, EigenResult,
    Error, ModelParams, ParitySector, SectorBasis, SparseHamiltonian, Species, SweepGrid,
    SweepResult,
};
use output::{full, OutputDir};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_INTEGRITY: u8 = 4;

#[derive(Parser)]
#[command(name = "edchain", version, about)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML configuration file; flags override its keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed for the eigensolver start vectors
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 or absent: library default)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Pair-exchange coupling W/T for single-point commands
    #[arg(long = "w-over-t", global = true)]
    w_over_t: Option<f64>,
    /// Sweep grid LO:HI:STEP in W/T
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Number of low-lying states to compute
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Parity sector: even, odd, or all
    #[arg(long, global = true)]
    sector: Option<String>,
    /// Entropy logarithm base: e (nats) or 2 (bits)
    #[arg(long = "log-base", global = true)]
    log_base: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print sector dimensions for the configured (L, N)
    Basis,
    /// Sweep W/T, writing the tracked spectrum and the cubic shift fit
    Spectrum,
    /// Densities, Green functions, parity, and MI at one W/T
    Observables,
    /// Edge-edge mutual information at one W/T
    Mi,
    /// Local parity expectations at one W/T
    Parity,
    /// Locate the avoided crossing and run the Landau-Zener ramp analysis
    Lz,
    /// Internal consistency checks at small sizes
    Selfcheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ov = Overrides {
        out: cli.common.out.clone(),
        seed: cli.common.seed,
        threads: cli.common.threads,
        w_over_t: cli.common.w_over_t,
        grid: cli.common.grid.clone(),
        k: cli.common.k,
        sector: cli.common.sector.clone(),
        log_base: cli.common.log_base.clone(),
    };
    let cfg = match RunConfig::load(cli.common.config.as_deref(), &ov) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if cfg.run.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global()
        {
            eprintln!("thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let result = match cli.command {
        Command::Basis => cmd_basis(&cfg),
        Command::Spectrum => cmd_spectrum(&cfg),
        Command::Observables => cmd_observables(&cfg),
        Command::Mi => cmd_mi(&cfg),
        Command::Parity => cmd_parity(&cfg),
        Command::Lz => cmd_lz(&cfg),
        Command::Selfcheck => cmd_selfcheck(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct CmdError {
    code: u8,
    message: String,
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError {
            code: EXIT_CONFIG,
            message: e.to_string(),
        }
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Convergence { .. } => EXIT_CONVERGENCE,
            Error::NumericalIntegrity(_) => EXIT_INTEGRITY,
            _ => EXIT_CONFIG,
        };
        CmdError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError {
            code: EXIT_CONFIG,
            message: format!("io error: {e}"),
        }
    }
}

fn species_all() -> [Species; 4] {
    [
        Species::UpPlus,
        Species::DownPlus,
        Species::UpMinus,
        Species::DownMinus,
    ]
}

fn cmd_basis(cfg: &RunConfig) -> Result<(), CmdError> {
    let (l, n) = (cfg.system.l, cfg.system.n);
    let even = SectorBasis::enumerate(l, n, ParitySector::Even)?.dim();
    let odd = SectorBasis::enumerate(l, n, ParitySector::Odd)?.dim();
    let total = SectorBasis::enumerate(l, n, ParitySector::Unrestricted)?.dim();
    println!("L = {l}, N = {n}");
    println!("  total: {total}");
    println!("  even:  {even}");
    println!("  odd:   {odd}");
    let mut out = OutputDir::create(&cfg.run.out)?;
    out.write_csv(
        "basis.csv",
        "l,n,total,even,odd",
        &[format!("{l},{n},{total},{even},{odd}")],
    )?;
    out.finish("basis", cfg)?;
    Ok(())
}

fn sweep_rows(sweep: &SweepResult, shift: Option<&edchain::CubicFit>) -> Vec<String> {
    let mut rows = Vec::new();
    for p in &sweep.points {
        for (level, (e, r)) in p.energies.iter().zip(&p.residuals).enumerate() {
            let shifted = match shift {
                Some(fit) => e - fit.eval(p.w),
                None => *e,
            };
            rows.push(format!(
                "{},{level},{},{},{}",
                full(p.w),
                full(*e),
                full(shifted),
                full(*r)
            ));
        }
    }
    rows
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<(), CmdError> {
    let basis = SectorBasis::enumerate(cfg.system.l, cfg.system.n, cfg.sector()?)?;
    let (lo, hi, step) = cfg.grid_bounds()?;
    let grid = SweepGrid::from_range(
        lo,
        hi,
        step,
        cfg.model_params(),
        cfg.sweep.k,
        cfg.sweep.tol,
        cfg.run.seed,
    )?;
    let n_points = grid.w_values.len();
    let sweep = run_sweep(&grid, &basis, |_, _| {})?;
    let fit = if cfg.sweep.k >= 4 && n_points >= 8 {
        Some(edchain::cubic_shift_fit(&sweep)?)
    } else {
        None
    };
    let mut out = OutputDir::create(&cfg.run.out)?;
    out.write_csv(
        "spectrum.csv",
        "w_over_t,level_index,energy,energy_shifted,residual",
        &sweep_rows(&sweep, fit.as_ref()),
    )?;
    if let Some(fit) = &fit {
        out.write_json("cubic_fit.json", fit)?;
    }
    if cfg.export.gnuplot {
        out.write_gnuplot(
            "spectrum.gp",
            "spectrum.csv",
            "low-lying spectrum vs W/T",
            "1:4",
        )?;
    }
    let failed: Vec<&edchain::SweepPoint> =
        sweep.points.iter().filter(|p| p.error.is_some()).collect();
    out.finish("spectrum", cfg)?;
    if let Some(p) = failed.first() {
        return Err(CmdError {
            code: EXIT_CONVERGENCE,
            message: format!(
                "{} of {} grid points did not converge (first at W/T = {}): {}",
                failed.len(),
                sweep.points.len(),
                p.w,
                p.error.as_deref().unwrap_or("")
            ),
        });
    }
    println!(
        "spectrum: {} grid points, k = {} -> {}",
        sweep.points.len(),
        sweep.k,
        cfg.run.out.join("spectrum.csv").display()
    );
    Ok(())
}

fn solve_single(cfg: &RunConfig) -> Result<(SectorBasis, SparseHamiltonian, EigenResult), CmdError> {
    let basis = SectorBasis::enumerate(cfg.system.l, cfg.system.n, cfg.sector()?)?;
    let h = SparseHamiltonian::build(&cfg.model_params(), &basis)?;
    let k = cfg.observables.states.min(basis.dim());
    let eig = lowest_k(&h, k, cfg.sweep.tol, cfg.run.seed)?;
    Ok((basis, h, eig))
}

fn mi_rows(
    cfg: &RunConfig,
    basis: &SectorBasis,
    eig: &EigenResult,
) -> Result<Vec<String>, CmdError> {
    let factor = cfg.log_factor();
    let mut rows = Vec::new();
    for (s, vec) in eig.eigenvectors.iter().enumerate() {
        for &[la, lc] in &cfg.observables.mi_pairs {
            let mi = obs::mutual_information(vec, basis, la, lc)? * factor;
            rows.push(format!("{s},{la},{lc},{}", full(mi)));
        }
    }
    Ok(rows)
}

fn parity_rows(
    cfg: &RunConfig,
    basis: &SectorBasis,
    eig: &EigenResult,
) -> Result<Vec<String>, CmdError> {
    let mut rows = Vec::new();
    for (s, vec) in eig.eigenvectors.iter().enumerate() {
        for &cut in &cfg.observables.parity_cuts {
            let p = obs::local_parity_expectation(vec, basis, cut)?;
            rows.push(format!("{s},{cut},{}", full(p)));
        }
    }
    Ok(rows)
}

fn cmd_mi(cfg: &RunConfig) -> Result<(), CmdError> {
    let (basis, _h, eig) = solve_single(cfg)?;
    let mut out = OutputDir::create(&cfg.run.out)?;
    out.write_csv("mi.csv", "state,l_a,l_c,mi", &mi_rows(cfg, &basis, &eig)?)?;
    out.finish("mi", cfg)?;
    Ok(())
}

fn cmd_observables(cfg: &RunConfig) -> Result<(), CmdError> {
    let (basis, h, eig) = solve_single(cfg)?;
    let mut out = OutputDir::create(&cfg.run.out)?;

    let mut energy_rows = Vec::new();
    for (s, (e, r)) in eig.eigenvalues.iter().zip(&eig.residuals).enumerate() {
        energy_rows.push(format!("{s},{},{}", full(*e), full(*r)));
    }
    out.write_csv("energies.csv", "state,energy,residual", &energy_rows)?;

    if cfg.observables.densities {
        let mut rows = Vec::new();
        for (s, vec) in eig.eigenvectors.iter().enumerate() {
            let mut total = 0.0;
            for j in 1..=basis.l() {
                for sp in species_all() {
                    let d = obs::density(vec, &basis, sp, j)?;
                    total += d;
                    rows.push(format!("{s},{j},{},{}", sp.label(), full(d)));
                }
            }
            // sum-rule footer: totals over all sites and species equal N
            rows.push(format!("{s},0,total,{}", full(total)));
        }
        out.write_csv("densities.csv", "state,site,species,density", &rows)?;
    }
    if cfg.observables.green {
        let mut rows = Vec::new();
        for (s, vec) in eig.eigenvectors.iter().enumerate() {
            for j in 1..=basis.l() {
                let g = obs::green_function(vec, &basis, Species::UpPlus, j, false)?;
                rows.push(format!("{s},{j},0,{}", full(g)));
                if cfg.observables.green_cross_orbital {
                    let gx = obs::green_function(vec, &basis, Species::UpPlus, j, true)?;
                    rows.push(format!("{s},{j},1,{}", full(gx)));
                }
            }
        }
        out.write_csv("green.csv", "state,site,cross_orbital,value", &rows)?;
        if cfg.export.gnuplot {
            out.write_gnuplot(
                "green.gp",
                "green.csv",
                "edge Green function |<a+_1 a_j>|",
                "2:(abs($4))",
            )?;
        }
    }
    out.write_csv("mi.csv", "state,l_a,l_c,mi", &mi_rows(cfg, &basis, &eig)?)?;
    out.write_csv(
        "parity.csv",
        "state,cut,parity_plus",
        &parity_rows(cfg, &basis, &eig)?,
    )?;
    if cfg.export.matrix_market {
        let mut buf = Vec::new();
        h.write_matrix_market(&mut buf)?;
        out.write_bytes("hamiltonian.mtx", &buf)?;
    }
    out.finish("observables", cfg)?;
    println!(
        "observables at W/T = {}: {} states -> {}",
        cfg.model.w_over_t,
        eig.eigenvalues.len(),
        cfg.run.out.display()
    );
    Ok(())
}

fn cmd_parity(cfg: &RunConfig) -> Result<(), CmdError> {
    let (basis, _h, eig) = solve_single(cfg)?;
    let mut out = OutputDir::create(&cfg.run.out)?;
    out.write_csv(
        "parity.csv",
        "state,cut,parity_plus",
        &parity_rows(cfg, &basis, &eig)?,
    )?;
    out.finish("parity", cfg)?;
    Ok(())
}

fn cmd_lz(cfg: &RunConfig) -> Result<(), CmdError> {
    let basis = SectorBasis::enumerate(cfg.system.l, cfg.system.n, cfg.sector()?)?;
    let (lo, hi, step) = cfg.grid_bounds()?;
    let grid = SweepGrid::from_range(
        lo,
        hi,
        step,
        cfg.model_params(),
        cfg.sweep.k,
        cfg.sweep.tol,
        cfg.run.seed,
    )?;
    let refine = RefineOpts {
        window: cfg.sweep.refine_window,
        step: cfg.sweep.refine_step,
    };
    let (coarse, fine, crossing) = locate_crossing(
        &grid,
        &basis,
        cfg.sweep.level_lo,
        cfg.sweep.level_hi,
        &SlopeWindows::default(),
        &refine,
        |_, _| {},
    )?;
    let lz = landau_zener(&crossing, cfg.run.t_phys_hz, &cfg.run.lz_rates)?;

    let mut out = OutputDir::create(&cfg.run.out)?;
    out.write_csv(
        "sweep_coarse.csv",
        "w_over_t,level_index,energy,energy_shifted,residual",
        &sweep_rows(&coarse, None),
    )?;
    out.write_csv(
        "sweep_refined.csv",
        "w_over_t,level_index,energy,energy_shifted,residual",
        &sweep_rows(&fine, None),
    )?;
    out.write_json("crossing.json", &crossing)?;
    out.write_json("lz.json", &lz)?;
    if cfg.export.gnuplot {
        out.write_gnuplot(
            "crossing.gp",
            "sweep_refined.csv",
            "avoided crossing",
            "1:3",
        )?;
    }
    out.finish("lz", cfg)?;

    println!("avoided crossing: W*/T = {:.4}, gap = {:.6e} |T|", crossing.w_star, crossing.gap);
    println!(
        "diabatic slopes: {:.4} and {:.4} (difference {:.4})",
        crossing.slope_left,
        crossing.slope_right,
        crossing.slope_diff()
    );
    println!(
        "T_phys = {} h*Hz -> physical gap {:.4} h*Hz, critical ramp rate {:.1} h*Hz/s",
        lz.t_phys_hz, lz.delta_phys_hz, lz.critical_rate_hz_per_s
    );
    for r in &lz.rates {
        println!(
            "  rate {:>12.3} h*Hz/s: Gamma = {:.5}, P(adiabatic) = {:.6}",
            r.rate_hz_per_s, r.gamma, r.probability
        );
    }
    Ok(())
}

fn cmd_selfcheck() -> Result<(), CmdError> {
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool| {
        println!("selfcheck {name}: {}", if ok { "ok" } else { "FAIL" });
        all_ok &= ok;
    };

    // operator algebra: {a_m, a+_n} = delta acting on every 2-site state,
    // with an intentional sign flip available as a negative control
    let corrupt = std::env::var("EDCHAIN_SELFCHECK_FLIP_SIGN").is_ok();
    let nm = 8u32;
    let mut algebra_ok = true;
    for m in 0..nm {
        for n in 0..nm {
            for bits in 0..(1u64 << nm) {
                let s = edchain::FockState(bits);
                let mut acc: std::collections::HashMap<u64, i32> =
                    std::collections::HashMap::new();
                // a_m a+_n, with the negative-control hook on one term
                if let Some((sign, t)) = fock::apply_string(
                    &[
                        (fock::OpKind::Annihilate, edchain::ModeIndex(m)),
                        (fock::OpKind::Create, edchain::ModeIndex(n)),
                    ],
                    s,
                ) {
                    *acc.entry(t.0).or_insert(0) += if corrupt { -sign } else { sign };
                }
                // a+_n a_m
                if let Some((sign, t)) = fock::apply_string(
                    &[
                        (fock::OpKind::Create, edchain::ModeIndex(n)),
                        (fock::OpKind::Annihilate, edchain::ModeIndex(m)),
                    ],
                    s,
                ) {
                    *acc.entry(t.0).or_insert(0) += sign;
                }
                for (t, coef) in acc {
                    let want = if m == n && t == bits { 1 } else { 0 };
                    if coef != want {
                        algebra_ok = false;
                    }
                }
            }
        }
    }
    check("anticommutation {a_m, a+_n} = delta_mn (L = 2, exhaustive)", algebra_ok);

    // hermiticity of the assembled matrix
    let basis22 = SectorBasis::enumerate(2, 2, ParitySector::Even)?;
    let h22 = SparseHamiltonian::build(&ModelParams::preset(4.0), &basis22)?;
    check("assembled matrix symmetry (L = 2)", h22.symmetry_violation() == 0.0);

    // parity block structure over the unrestricted basis
    let mut blocks_ok = true;
    for l in 1..=2usize {
        for n in 0..=4 * l {
            let basis = SectorBasis::enumerate(l, n, ParitySector::Unrestricted)?;
            let h = SparseHamiltonian::build(&ModelParams::preset(4.0), &basis)?;
            for r in 0..basis.dim() {
                let (cols, vals) = h.row(r);
                for (c, v) in cols.iter().zip(vals) {
                    if *v != 0.0
                        && fock::parity_plus(basis.state(r))
                            != fock::parity_plus(basis.state(*c as usize))
                    {
                        blocks_ok = false;
                    }
                }
            }
        }
    }
    check("parity block structure (L <= 2, exhaustive)", blocks_ok);

    // odd-N cross-sector degeneracy from the dense solver
    let params = ModelParams::preset(5.0);
    let ee = dense_all(&SparseHamiltonian::build(
        &params,
        &SectorBasis::enumerate(3, 3, ParitySector::Even)?,
    )?)?;
    let eo = dense_all(&SparseHamiltonian::build(
        &params,
        &SectorBasis::enumerate(3, 3, ParitySector::Odd)?,
    )?)?;
    let deg_ok = ee.eigenvalues.len() == eo.eigenvalues.len()
        && ee
            .eigenvalues
            .iter()
            .zip(&eo.eigenvalues)
            .all(|(a, b)| (a - b).abs() <= 1e-10);
    check("odd-N even/odd sector degeneracy (L = 3, N = 3, 1e-10)", deg_ok);

    // chiral involution with sign +1 over every state
    let mut chiral_ok = true;
    for l in 1..=3usize {
        for bits in 0..(1u64 << (4 * l)) {
            let s = edchain::FockState(bits);
            let (s1, t1) = model::chiral_transform(s, l);
            let (s2, t2) = model::chiral_transform(t1, l);
            if s1 * s2 != 1 || t2 != s {
                chiral_ok = false;
            }
        }
    }
    check("chiral transform involution (L <= 3, exhaustive)", chiral_ok);

    // species-decoupling limit: pure tunneling is four copies of the
    // open-chain single-particle spectrum
    let l = 3usize;
    let tb = ModelParams {
        t: -1.0,
        so_fwd: 0.0,
        ..ModelParams::preset(0.0)
    };
    let single = dense_all(&SparseHamiltonian::build(
        &tb,
        &SectorBasis::enumerate(l, 1, ParitySector::Unrestricted)?,
    )?)?;
    let mut analytic: Vec<f64> = (1..=l)
        .flat_map(|nq| {
            let e = 2.0 * tb.t * (std::f64::consts::PI * nq as f64 / (l as f64 + 1.0)).cos();
            std::iter::repeat(e).take(4)
        })
        .collect();
    analytic.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tb_ok = single
        .eigenvalues
        .iter()
        .zip(&analytic)
        .all(|(a, b)| (a - b).abs() <= 1e-10);
    check("species-decoupling tight-binding spectrum (L = 3)", tb_ok);

    if all_ok {
        println!("selfcheck: all checks passed");
        Ok(())
    } else {
        Err(CmdError {
            code: EXIT_INTEGRITY,
            message: "selfcheck: at least one check failed".into(),
        })
    }
}

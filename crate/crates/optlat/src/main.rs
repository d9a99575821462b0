//! Command-line driver: run a scenario described by a TOML configuration
//! and write plot-ready CSV data plus a key=value run manifest.
//!
//! Every run writes, into the output directory:
//!
//! * `<prefix>_config.toml` — byte-exact echo of the configuration;
//! * `<prefix>_manifest.txt` — scenario, versions, seed, summary values,
//!   wall time;
//! * one or more `<prefix>_*.csv` data files with `#`-prefixed headers.
//!
//! Data files are deterministic: the same configuration and seed produce
//! byte-identical CSVs (timing lives only in the manifest).  Exit status is
//! 0 on success, 2 on configuration/validation errors, 3 on numeric
//! failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use optlat::angular::branching_weight;
use optlat::atom::AtomSpec;
use optlat::bands::{
    self, uniform_q_grid, BandSolution, LocalizedState, StateLabel,
};
use optlat::config::{
    self, FomMode, LatticeSection, Scenario, ScenarioConfig,
};
use optlat::cooling;
use optlat::coupling::{self, CouplingReport};
use optlat::doublewell::{self, NoiseSpec};
use optlat::error::{LatticeError, Result};
use optlat::halfint::HalfInt;
use optlat::linalg;
use optlat::operator::OperatorField;
use optlat::output::{fmt_f64, write_atomic, CsvWriter, Manifest};
use optlat::polarizability::{dipole_identities, potential_operator, DetuningSpec};

/// Spin-dependent optical lattice designer: potentials, band structure,
/// Raman figures of merit, sideband cooling, and double-well dynamics.
#[derive(Parser, Debug)]
#[command(name = "optlat", version)]
struct Args {
    /// Path to the TOML scenario configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configuration's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configuration's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweep parallelism (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

/// Default reference detuning (linewidths, red) used by the infinite-limit
/// backend when a configuration omits `detuning_gamma`; the operator shape
/// does not depend on it.
const INFINITE_REFERENCE_GAMMA: f64 = -2000.0;

fn run(args: &Args) -> Result<()> {
    let started = Instant::now();
    let mut cfg = config::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(LatticeError::Config(
                "--threads must be at least 1".into(),
            ));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| LatticeError::Config(format!("thread pool: {e}")))?;
    }

    let dir = cfg.output.dir.clone();
    let prefix = cfg.prefix();
    write_atomic(&dir.join(format!("{prefix}_config.toml")), &cfg.echo)?;

    let mut manifest = Manifest::new(cfg.scenario.name());
    manifest.set("tool", "optlat");
    manifest.set("version", env!("CARGO_PKG_VERSION"));
    manifest.set("seed", cfg.seed);

    let summary = match cfg.scenario {
        Scenario::Potential => run_potential(&cfg, &dir, &prefix)?,
        Scenario::Bands => run_bands(&cfg, &dir, &prefix)?,
        Scenario::Fom => run_fom(&cfg, &dir, &prefix)?,
        Scenario::Cool => run_cool(&cfg, &dir, &prefix)?,
        Scenario::Tunnel => run_tunnel(&cfg, &dir, &prefix)?,
        Scenario::Dwspec => run_dwspec(&cfg, &dir, &prefix)?,
        Scenario::Verify => run_verify(&cfg, &dir, &prefix)?,
    };

    for (key, value) in &summary {
        println!("{key}={value}");
        manifest.set(key, value);
    }
    manifest.set("wall_ms", started.elapsed().as_millis());
    write_atomic(&dir.join(format!("{prefix}_manifest.txt")), &manifest.finish())?;
    Ok(())
}

type Summary = Vec<(String, String)>;

fn push(summary: &mut Summary, key: &str, value: f64) {
    summary.push((key.to_string(), fmt_f64(value)));
}

/// Build the 1D lin-angle-lin potential operator described by a `[lattice]`
/// section.
fn lattice_potential(section: &LatticeSection) -> Result<(OperatorField, HalfInt)> {
    let atom = section.atom.atom();
    let f = section.atom.f();
    let geometry = optlat::fields::lin_angle_lin(section.theta_rad)?
        .with_external_b(section.external_b_er);
    let det = match section.detuning_gamma {
        Some(delta) => DetuningSpec::finite(delta)?,
        None => DetuningSpec::infinite(INFINITE_REFERENCE_GAMMA)?,
    };
    let potential = potential_operator(&geometry, &atom, f, section.u1_er, &det)?;
    Ok((potential, f))
}

/// Sublevel labels m = −F … F in storage order.
fn sublevel_labels(f: HalfInt) -> Vec<String> {
    let mut labels = Vec::with_capacity(f.multiplicity());
    let mut m = -f.doubled();
    while m <= f.doubled() {
        labels.push(if m % 2 == 0 {
            format!("{}", m / 2)
        } else {
            format!("{m}over2")
        });
        m += 2;
    }
    labels
}

fn run_potential(cfg: &ScenarioConfig, dir: &Path, prefix: &str) -> Result<Summary> {
    let section = cfg.lattice.as_ref().expect("validated: lattice present");
    let (potential, f) = lattice_potential(section)?;
    let dim = f.multiplicity();
    let n_z = cfg.grid.z_points;

    let labels = sublevel_labels(f);
    let mut diag_cols = vec!["kl_z_rad".to_string()];
    for label in &labels {
        diag_cols.push(format!("u_m{label}_er"));
    }
    let mut diag = CsvWriter::new(&diag_cols);
    diag.comment("diagonal sublevel potentials ⟨F m|U(z)|F m⟩ over one period");

    let mut adia_cols = vec!["kl_z_rad".to_string()];
    for k in 0..dim {
        adia_cols.push(format!("lambda{k}_er"));
    }
    let mut adia = CsvWriter::new(&adia_cols);
    adia.comment("adiabatic potentials: eigenvalues of U(z), ascending");

    let mut min_adiabatic = f64::INFINITY;
    let mut max_adiabatic = f64::NEG_INFINITY;
    for i in 0..n_z {
        let z = std::f64::consts::PI * i as f64 / (n_z - 1) as f64;
        let u = potential.eval([0.0, 0.0, z]);
        let mut row = vec![z];
        for m in 0..dim {
            row.push(u[(m, m)].re);
        }
        diag.row(&row)?;
        let lambda = linalg::eigenvalues(&u)?;
        let mut row = vec![z];
        for &v in lambda.iter() {
            row.push(v);
        }
        min_adiabatic = min_adiabatic.min(lambda[0]);
        max_adiabatic = max_adiabatic.max(lambda[dim - 1]);
        adia.row(&row)?;
    }
    write_atomic(&dir.join(format!("{prefix}_diagonal.csv")), &diag.finish())?;
    write_atomic(&dir.join(format!("{prefix}_adiabatic.csv")), &adia.finish())?;

    let mut summary = Summary::new();
    push(&mut summary, "hermiticity_defect", potential.hermiticity_defect());
    push(&mut summary, "min_adiabatic_er", min_adiabatic);
    push(&mut summary, "max_adiabatic_er", max_adiabatic);
    Ok(summary)
}

/// A band eigenvector column as a localized state, for density evaluation.
fn column_state(solution: &BandSolution, iq: usize, band: usize) -> LocalizedState {
    LocalizedState {
        coefficients: solution.spinors[iq].column(band).to_owned(),
        dim_m: solution.dim_m,
        n_max: solution.n_max,
        label: StateLabel::Symmetric,
    }
}

fn run_bands(cfg: &ScenarioConfig, dir: &Path, prefix: &str) -> Result<Summary> {
    let section = cfg.lattice.as_ref().expect("validated: lattice present");
    let (potential, f) = lattice_potential(section)?;
    let b = &cfg.bands;
    let q_grid = uniform_q_grid(b.q_points);
    let n_store = b.n_bands.max(b.spinor_band.map_or(0, |s| s + 1));
    let solution = bands::band_structure_stored(&potential, &q_grid, b.n_max, n_store)?;

    let mut cols = vec!["q_kl".to_string()];
    for k in 0..b.n_bands {
        cols.push(format!("e{k}_er"));
    }
    let mut csv = CsvWriter::new(&cols);
    csv.comment("band energies over the Brillouin zone");
    for (iq, &q) in solution.q_grid.iter().enumerate() {
        let mut row = vec![q];
        for k in 0..b.n_bands {
            row.push(solution.energies[iq][k]);
        }
        csv.row(&row)?;
    }
    write_atomic(&dir.join(format!("{prefix}_bands.csv")), &csv.finish())?;

    let mut summary = Summary::new();
    let iq0 = solution.q_zero_index()?;
    push(&mut summary, "e0_q0_er", solution.energies[iq0][0]);
    push(
        &mut summary,
        "gap01_q0_er",
        solution.energies[iq0][1] - solution.energies[iq0][0],
    );

    if let Some(band) = b.spinor_band {
        let state = column_state(&solution, iq0, band);
        let labels = sublevel_labels(f);
        let mut cols = vec!["kl_z_rad".to_string()];
        for label in &labels {
            cols.push(format!("density_m{label}"));
        }
        cols.push("density_total".to_string());
        let mut csv = CsvWriter::new(&cols);
        csv.comment(&format!("q = 0 spinor density of band {band}"));
        let n_z = b.spinor_points;
        for i in 0..n_z {
            let z = std::f64::consts::PI * i as f64 / (n_z - 1) as f64;
            let amps = state.amplitudes(z);
            let mut row = vec![z];
            let mut total = 0.0;
            for a in &amps {
                row.push(a.norm_sqr());
                total += a.norm_sqr();
            }
            row.push(total);
            csv.row(&row)?;
        }
        write_atomic(&dir.join(format!("{prefix}_spinor.csv")), &csv.finish())?;
        push(&mut summary, "spinor_fz_hbar", bands::magnetization(&state));
    }
    Ok(summary)
}

fn run_fom(cfg: &ScenarioConfig, dir: &Path, prefix: &str) -> Result<Summary> {
    let section = cfg.fom.as_ref().expect("validated: fom present");
    let atom = section.atom.atom();

    let reports: Vec<Result<CouplingReport>> = section
        .u1_grid_er
        .par_iter()
        .map(|&u1| match section.mode {
            FomMode::Axial => coupling::raman_dm2(u1, &atom, section.detuning_gamma),
            FomMode::Transverse2d => coupling::raman_dm1_2d(
                u1,
                &atom,
                section.detuning_gamma,
                section.e_pi_ratio,
                section.phi_rad,
            ),
        })
        .collect();

    let mut cols = vec![
        "u1_er".to_string(),
        "u_r_er".to_string(),
        "gamma_s_er".to_string(),
        "kappa".to_string(),
    ];
    match section.mode {
        FomMode::Axial => cols.push("kappa_prime".to_string()),
        FomMode::Transverse2d => {
            cols.push("kappa_prime_x".to_string());
            cols.push("kappa_prime_y".to_string());
        }
    }
    cols.push("eta".to_string());
    let mut csv = CsvWriter::new(&cols);
    csv.comment("Raman coupling figures of merit against lattice depth");

    let mut first: Option<(f64, f64)> = None;
    let mut last: Option<(f64, f64)> = None;
    for (&u1, report) in section.u1_grid_er.iter().zip(reports.into_iter()) {
        let report = report?;
        let mut row = vec![u1, report.u_r, report.gamma_s, report.kappa, report.kappa_prime];
        if section.mode == FomMode::Transverse2d {
            row.push(report.kappa_prime_y.ok_or_else(|| {
                LatticeError::Numeric("2D coupling report lacks κ'_y".into())
            })?);
        }
        row.push(report.eta);
        csv.row(&row)?;
        if first.is_none() {
            first = Some((report.kappa, report.kappa_prime));
        }
        last = Some((report.kappa, report.kappa_prime));
    }
    write_atomic(&dir.join(format!("{prefix}_fom.csv")), &csv.finish())?;

    let (kappa_first, kp_first) = first.unwrap_or((f64::NAN, f64::NAN));
    let (kappa_last, kp_last) = last.unwrap_or((f64::NAN, f64::NAN));
    let mut summary = Summary::new();
    push(&mut summary, "kappa_first", kappa_first);
    push(&mut summary, "kappa_last", kappa_last);
    push(&mut summary, "kappa_prime_first", kp_first);
    push(&mut summary, "kappa_prime_last", kp_last);
    Ok(summary)
}

fn run_cool(cfg: &ScenarioConfig, dir: &Path, prefix: &str) -> Result<Summary> {
    let section = cfg.cool.as_ref().expect("validated: cool present");
    let config = section.to_config()?;
    for warning in config.validate()? {
        eprintln!("warning: {warning}");
    }
    let initial = cooling::thermal_initial(config.q_boltzmann, config.n_max)?;
    let trajectory = cooling::evolve(&config, &initial)?;

    let mut cols = vec!["t_hbar_over_er".to_string()];
    for n in 0..=config.n_max {
        cols.push(format!("pi{n}"));
    }
    cols.push("trace".to_string());
    let mut csv = CsvWriter::new(&cols);
    csv.comment("vibrational populations during the cooling schedule");
    for (k, t) in trajectory.times.iter().enumerate() {
        let mut row = vec![*t];
        row.extend_from_slice(&trajectory.populations[k]);
        row.push(trajectory.traces[k]);
        csv.row(&row)?;
    }
    write_atomic(&dir.join(format!("{prefix}_cooling.csv")), &csv.finish())?;

    let final_pops = trajectory
        .populations
        .last()
        .ok_or_else(|| LatticeError::Numeric("cooling produced no samples".into()))?;
    let max_drift = trajectory
        .traces
        .iter()
        .map(|t| (t - 1.0).abs())
        .fold(0.0, f64::max);
    let mut summary = Summary::new();
    push(&mut summary, "final_pi0", final_pops[0]);
    push(&mut summary, "max_trace_drift", max_drift);
    Ok(summary)
}

fn run_tunnel(cfg: &ScenarioConfig, dir: &Path, prefix: &str) -> Result<Summary> {
    let section = cfg.well.as_ref().expect("validated: well present");
    let config = section.to_config()?;
    let doublet = doublewell::tunneling_doublet(&config)?;
    let period = 2.0 * std::f64::consts::PI / doublet.splitting;
    let duration = cfg.tunnel.duration.unwrap_or(cfg.tunnel.periods * period);
    let noise = NoiseSpec::new(cfg.noise.amplitude, cfg.noise.correlation_time)?;
    let initial = doublet.state(cfg.tunnel.initial);

    let seeds: Vec<u64> = (0..cfg.tunnel.n_seeds as u64)
        .map(|k| cfg.seed.wrapping_add(k))
        .collect();
    let ensemble = doublewell::evolve_ensemble(&config, initial, &noise, duration, &seeds)?;

    for trajectory in &ensemble.trajectories {
        let mut csv = CsvWriter::with_columns(&["t_hbar_over_er", "fz_hbar", "norm"]);
        csv.comment(&format!("noise seed {}", trajectory.seed));
        for (k, t) in trajectory.times.iter().enumerate() {
            csv.row(&[*t, trajectory.magnetization[k], trajectory.norms[k]])?;
        }
        write_atomic(
            &dir.join(format!("{prefix}_seed{}.csv", trajectory.seed)),
            &csv.finish(),
        )?;
    }
    let mut csv = CsvWriter::with_columns(&["t_hbar_over_er", "fz_mean_hbar"]);
    csv.comment(&format!("seed-averaged magnetization over {} seeds", seeds.len()));
    for (k, t) in ensemble.times.iter().enumerate() {
        csv.row(&[*t, ensemble.mean_magnetization[k]])?;
    }
    write_atomic(&dir.join(format!("{prefix}_mean.csv")), &csv.finish())?;

    let mut summary = Summary::new();
    push(&mut summary, "delta_e_er", doublet.splitting);
    push(&mut summary, "fz_left", doublet.magnetization);
    push(&mut summary, "period_hbar_over_er", period);
    if let Some(freq) =
        doublewell::oscillation_frequency(&ensemble.times, &ensemble.mean_magnetization)
    {
        push(&mut summary, "measured_omega_er", freq);
    }
    let max_norm_defect = ensemble
        .trajectories
        .iter()
        .flat_map(|t| t.norms.iter())
        .map(|n| (n - 1.0).abs())
        .fold(0.0, f64::max);
    push(&mut summary, "max_norm_defect", max_norm_defect);
    Ok(summary)
}

fn run_dwspec(cfg: &ScenarioConfig, dir: &Path, prefix: &str) -> Result<Summary> {
    let section = cfg.well.as_ref().expect("validated: well present");
    let sweep = cfg.dwspec.as_ref().expect("validated: dwspec present");
    let base = section.to_config()?;

    let biases: Vec<f64> = (0..sweep.points)
        .map(|k| {
            sweep.b_z_min_er
                + (sweep.b_z_max_er - sweep.b_z_min_er) * k as f64
                    / (sweep.points - 1) as f64
        })
        .collect();

    // Independent eigenproblems: solve the bias grid in parallel, keeping
    // the caller's order.
    let rows: Vec<Result<(Vec<f64>, f64, f64)>> = biases
        .par_iter()
        .map(|&b_z| {
            let config = base.clone().with_b_z(b_z);
            let potential = config.potential()?;
            let solution =
                bands::band_structure_stored(&potential, &[0.0], config.n_max(), 2)?;
            let energies = &solution.energies[0];
            if energies.len() < sweep.n_levels {
                return Err(LatticeError::InvalidInput(format!(
                    "requested {} levels but the basis provides {}",
                    sweep.n_levels,
                    energies.len()
                )));
            }
            let levels: Vec<f64> = energies.iter().take(sweep.n_levels).copied().collect();
            let fz0 = bands::magnetization(&column_state(&solution, 0, 0));
            let fz1 = bands::magnetization(&column_state(&solution, 0, 1));
            Ok((levels, fz0, fz1))
        })
        .collect();

    let mut cols = vec!["b_z_er".to_string()];
    for k in 0..sweep.n_levels {
        cols.push(format!("e{k}_er"));
    }
    cols.push("fz0_hbar".to_string());
    cols.push("fz1_hbar".to_string());
    let mut csv = CsvWriter::new(&cols);
    csv.comment("level diagram against the longitudinal bias field at q = 0");

    let mut min_gap = f64::INFINITY;
    let mut min_gap_bias = f64::NAN;
    for (&b_z, row) in biases.iter().zip(rows.into_iter()) {
        let (levels, fz0, fz1) = row?;
        let gap = levels[1] - levels[0];
        if gap < min_gap {
            min_gap = gap;
            min_gap_bias = b_z;
        }
        let mut out = vec![b_z];
        out.extend_from_slice(&levels);
        out.push(fz0);
        out.push(fz1);
        csv.row(&out)?;
    }
    write_atomic(&dir.join(format!("{prefix}_levels.csv")), &csv.finish())?;

    let mut summary = Summary::new();
    push(&mut summary, "min_gap01_er", min_gap);
    push(&mut summary, "b_z_at_min_gap_er", min_gap_bias);
    Ok(summary)
}

/// One line of the verify table.
struct CheckLine {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(lines: &mut Vec<CheckLine>, name: &'static str, passed: bool, detail: String) {
    lines.push(CheckLine {
        name,
        passed,
        detail,
    });
}

fn run_verify(cfg: &ScenarioConfig, dir: &Path, prefix: &str) -> Result<Summary> {
    let atom = AtomSpec::cesium();
    let mut lines = Vec::new();

    // Dipole-operator identities of the J = 1/2 → 3/2 transition.
    let report = dipole_identities();
    check(
        &mut lines,
        "dipole_trace",
        (report.trace - 4.0).abs() <= 1e-14,
        format!("Tr(D†D) = {}", fmt_f64(report.trace)),
    );
    check(
        &mut lines,
        "dipole_vector",
        report.vector_defect <= 1e-14,
        format!("max |(D†×D)_z + (2/3)i σ_z| = {:.3e}", report.vector_defect),
    );
    check(
        &mut lines,
        "dipole_rank2",
        report.rank2_defect <= 1e-14,
        format!("max |rank-2 part| = {:.3e}", report.rank2_defect),
    );

    // Branching weights out of each excited manifold sum to one.
    let i_nuc = atom.i_nuclear;
    let (jg, je) = (atom.j_ground, atom.j_excited);
    let mut worst = 0.0_f64;
    let mut fe = (je - i_nuc).abs();
    while fe <= je + i_nuc {
        let mut total = 0.0;
        let mut fg = (jg - i_nuc).abs();
        while fg <= jg + i_nuc {
            total += branching_weight(fe, fg, i_nuc, jg, je);
            fg = fg + HalfInt::from_int(1);
        }
        worst = worst.max((total - 1.0).abs());
        fe = fe + HalfInt::from_int(1);
    }
    check(
        &mut lines,
        "branching_sum",
        worst <= 1e-12,
        format!("max |Σ_F f(F',F) − 1| = {worst:.3e}"),
    );

    // Closed-form Raman coherence coupling against the hyperfine sum at
    // seeded random detunings on both sides of the line.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst_rel = 0.0_f64;
    for _ in 0..50 {
        let magnitude = 10f64.powf(rng.gen_range(2.0..6.0));
        let delta = if rng.gen_bool(0.5) { magnitude } else { -magnitude };
        let closed = coupling::beta_24(&atom, delta)?;
        let summed = coupling::beta_24_hyperfine_sum(&atom, delta)?;
        worst_rel = worst_rel.max((closed - summed).abs() / summed.abs().max(1e-300));
    }
    check(
        &mut lines,
        "beta_closed_form",
        worst_rel <= 1e-10,
        format!("max rel. deviation over 50 detunings = {worst_rel:.3e}"),
    );

    // Far-detuned scaling of the Δm = ±2 coupling coefficient.
    let delta = -1e6;
    let scaled = coupling::beta_24(&atom, delta)?.abs() * delta.abs();
    let asymptotic = coupling::beta_24_asymptotic(&atom, delta)?.abs() * delta.abs();
    check(
        &mut lines,
        "beta_asymptote",
        (scaled / asymptotic - 1.0).abs() <= 1e-2,
        format!(
            "|β|·|Δ| = {} vs asymptotic {} at Δ = −10⁶ Γ",
            fmt_f64(scaled),
            fmt_f64(asymptotic)
        ),
    );

    let mut table = String::new();
    let mut failures = 0;
    for line in &lines {
        let status = if line.passed { "PASS" } else { "FAIL" };
        if !line.passed {
            failures += 1;
        }
        let text = format!("{status}  {:<18} {}", line.name, line.detail);
        println!("{text}");
        table.push_str(&text);
        table.push('\n');
    }
    write_atomic(&dir.join(format!("{prefix}_checks.txt")), &table)?;

    let mut summary = Summary::new();
    summary.push(("checks_total".into(), lines.len().to_string()));
    summary.push(("checks_failed".into(), failures.to_string()));
    if failures > 0 {
        return Err(LatticeError::Numeric(format!(
            "{failures} of {} identity checks failed",
            lines.len()
        )));
    }
    Ok(summary)
}

//! Scenario configuration: one human-editable TOML file per run.
//!
//! Every physical key carries its unit as a suffix (`_er` for recoil
//! energies, `_rad` for radians, `_gamma` for natural linewidths, times in
//! ħ/E_R).  Parsing is strict: unknown keys, wrong types, missing required
//! keys, and out-of-range values are all collected and reported together in
//! a single validation error, so one round trip fixes the whole file.
//!
//! Schema overview (sections are gated by `scenario`):
//!
//! ```toml
//! scenario = "tunnel"      # potential | bands | fom | cool | tunnel | dwspec | verify
//! seed = 1                 # optional, default 0; the --seed flag overrides
//!
//! [output]                 # optional
//! dir = "runs/demo"        # default "."; the --out flag overrides
//! prefix = "demo"          # default: the scenario name
//!
//! [lattice]                # potential, bands
//! atom = "cesium"          # cesium | spin_half
//! u1_er = 150.0
//! theta_rad = 1.366
//! detuning_gamma = -2000.0 # omit for the infinite-detuning limit
//! external_b_er = [0.0, 0.0, 0.0]   # optional Larmor-energy vector
//!
//! [grid]                   # potential (optional)
//! z_points = 181           # samples over one period k_L z ∈ [0, π]
//!
//! [bands]                  # bands (optional)
//! n_max = 24
//! q_points = 33            # uniform over q ∈ [−1, 1]
//! n_bands = 8
//! spinor_band = 0          # optional: also write the q=0 spinor density
//! spinor_points = 181
//!
//! [fom]                    # fom
//! mode = "axial"           # axial (Δm = ±2) | transverse_2d (Δm = ±1)
//! atom = "cesium"
//! u1_grid_er = [25.0, 500.0]
//! detuning_gamma = -10000.0
//! e_pi_ratio = 0.5         # transverse_2d only
//! phi_rad = 1.5707963267948966
//!
//! [cool]                   # cool: either a preset...
//! preset = "deep_lattice"
//! duration_scale = 1.0
//! # ...or explicit parameters:
//! # u1_er = 500.0
//! # detuning_gamma = -2000.0
//! # gamma_p_er = 0.36
//! # q_boltzmann = 0.5
//! # n_max = 7
//! # schedule = [{ target_n = 5, duration = 120.0 }, ...]
//!
//! [well]                   # tunnel, dwspec
//! model = "cesium_f4"      # cesium_f4 | spin_half
//! u1_er = 150.0
//! theta_rad = 1.3659098493868665
//! omega_perp_er = 10.0
//! b_z_er = 0.0             # optional
//!
//! [noise]                  # tunnel (optional)
//! amplitude = 0.0          # RMS of the fractional angle jitter ε(t)
//! correlation_time = 1.0
//!
//! [tunnel]                 # tunnel (optional)
//! periods = 4.0            # duration in tunneling periods 2π/δE...
//! # duration = 30.0        # ...or absolute (ħ/E_R), overriding `periods`
//! initial = "right"        # right | left | symmetric | antisymmetric
//! n_seeds = 1              # seeds used: seed, seed+1, …
//!
//! [dwspec]                 # dwspec
//! b_z_min_er = -2.0
//! b_z_max_er = 2.0
//! points = 41
//! n_levels = 6
//! ```

use std::path::{Path, PathBuf};

use toml::value::Value;

use crate::atom::AtomSpec;
use crate::bands::StateLabel;
use crate::cooling::{CoolingConfig, ScheduleStep};
use crate::doublewell::{DoubleWellConfig, WellModel};
use crate::error::{LatticeError, Result};
use crate::halfint::HalfInt;

/// The run mode selected by the top-level `scenario` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Evaluate the sublevel potential operator over one lattice period.
    Potential,
    /// Band structure and optional Bloch-spinor densities.
    Bands,
    /// Raman coupling figures of merit over a depth grid.
    Fom,
    /// Sideband-cooling schedule simulation.
    Cool,
    /// Double-well tunneling dynamics with optional angle-jitter noise.
    Tunnel,
    /// Double-well level diagram against the bias field.
    Dwspec,
    /// Angular-momentum and dipole identity suite.
    Verify,
}

impl Scenario {
    fn parse(text: &str) -> Option<Scenario> {
        match text {
            "potential" => Some(Scenario::Potential),
            "bands" => Some(Scenario::Bands),
            "fom" => Some(Scenario::Fom),
            "cool" => Some(Scenario::Cool),
            "tunnel" => Some(Scenario::Tunnel),
            "dwspec" => Some(Scenario::Dwspec),
            "verify" => Some(Scenario::Verify),
            _ => None,
        }
    }

    /// Canonical name, used for default file prefixes and the manifest.
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Potential => "potential",
            Scenario::Bands => "bands",
            Scenario::Fom => "fom",
            Scenario::Cool => "cool",
            Scenario::Tunnel => "tunnel",
            Scenario::Dwspec => "dwspec",
            Scenario::Verify => "verify",
        }
    }
}

/// Atomic structure selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomChoice {
    /// Cesium D2 structure, ground F = 4.
    Cesium,
    /// Two-level spin-1/2 reduction, ground F = 1/2.
    SpinHalf,
}

impl AtomChoice {
    /// Level-structure data.
    pub fn atom(&self) -> AtomSpec {
        match self {
            AtomChoice::Cesium => AtomSpec::cesium(),
            AtomChoice::SpinHalf => AtomSpec::spin_half(),
        }
    }

    /// Ground manifold used for lattice operators.
    pub fn f(&self) -> HalfInt {
        match self {
            AtomChoice::Cesium => HalfInt::from_int(4),
            AtomChoice::SpinHalf => HalfInt::from_doubled(1),
        }
    }
}

/// `[output]` section.
#[derive(Debug, Clone)]
pub struct OutputSection {
    /// Directory all files are written into.
    pub dir: PathBuf,
    /// File-name prefix (default: scenario name).
    pub prefix: Option<String>,
}

/// `[lattice]` section for the potential/bands scenarios.
#[derive(Debug, Clone)]
pub struct LatticeSection {
    /// Atomic structure.
    pub atom: AtomChoice,
    /// Single-beam light shift (E_R).
    pub u1_er: f64,
    /// Angle between the beam polarizations (rad).
    pub theta_rad: f64,
    /// Detuning from the stretched line (Γ); `None` selects the
    /// infinite-detuning limit.
    pub detuning_gamma: Option<f64>,
    /// External Larmor-energy vector (E_R).
    pub external_b_er: [f64; 3],
}

/// `[grid]` section (potential scenario).
#[derive(Debug, Clone)]
pub struct GridSection {
    /// Samples over one period k_L z ∈ [0, π].
    pub z_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { z_points: 181 }
    }
}

/// `[bands]` section.
#[derive(Debug, Clone)]
pub struct BandsSection {
    /// Plane-wave cutoff.
    pub n_max: usize,
    /// Quasimomentum samples over [−1, 1].
    pub q_points: usize,
    /// Number of band energies written.
    pub n_bands: usize,
    /// Band whose q = 0 spinor density is also written, if any.
    pub spinor_band: Option<usize>,
    /// Position samples for the spinor density.
    pub spinor_points: usize,
}

impl Default for BandsSection {
    fn default() -> Self {
        BandsSection {
            n_max: 24,
            q_points: 33,
            n_bands: 8,
            spinor_band: None,
            spinor_points: 181,
        }
    }
}

/// Coupling-geometry selector of the fom scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FomMode {
    /// Δm = ±2 coupling of the 1D crossed-polarization lattice.
    Axial,
    /// Δm = ±1 coupling of the 2D three-beam lattice.
    Transverse2d,
}

/// `[fom]` section.
#[derive(Debug, Clone)]
pub struct FomSection {
    /// Coupling geometry.
    pub mode: FomMode,
    /// Atomic structure.
    pub atom: AtomChoice,
    /// Light-shift grid (E_R), one table row per value.
    pub u1_grid_er: Vec<f64>,
    /// Detuning from the stretched line (Γ).
    pub detuning_gamma: f64,
    /// π-polarized field amplitude ratio E_π/E₁ (transverse mode).
    pub e_pi_ratio: f64,
    /// Propagation half-angle of the 2D geometry (rad).
    pub phi_rad: f64,
}

/// One `{ target_n, duration }` schedule entry.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleEntry {
    /// Vibrational block brought into degeneracy.
    pub target_n: usize,
    /// Hold time (ħ/E_R).
    pub duration: f64,
}

/// `[cool]` section: a named preset or fully explicit parameters.
#[derive(Debug, Clone)]
pub enum CoolSection {
    /// The bundled deep-lattice demonstration schedule, with its step
    /// durations scaled by `duration_scale`.
    Preset {
        /// Multiplier on every schedule duration.
        duration_scale: f64,
    },
    /// Explicit cooling parameters.
    Explicit {
        /// Single-beam light shift (E_R).
        u1_er: f64,
        /// Detuning from the stretched line (Γ).
        detuning_gamma: f64,
        /// Optical pumping rate (E_R/ħ).
        gamma_p_er: f64,
        /// Initial Boltzmann factor.
        q_boltzmann: f64,
        /// Vibrational ladder truncation.
        n_max: usize,
        /// Field-stepping schedule.
        schedule: Vec<ScheduleEntry>,
    },
}

impl CoolSection {
    /// Materialize the cooling parameters.
    pub fn to_config(&self) -> Result<CoolingConfig> {
        match self {
            CoolSection::Preset { duration_scale } => {
                CoolingConfig::deep_lattice_demo(*duration_scale)
            }
            CoolSection::Explicit {
                u1_er,
                detuning_gamma,
                gamma_p_er,
                q_boltzmann,
                n_max,
                schedule,
            } => {
                let config = CoolingConfig {
                    u1: *u1_er,
                    delta: *detuning_gamma,
                    gamma_p: *gamma_p_er,
                    q_boltzmann: *q_boltzmann,
                    n_max: *n_max,
                    schedule: schedule
                        .iter()
                        .map(|s| ScheduleStep {
                            target_n: s.target_n,
                            duration: s.duration,
                        })
                        .collect(),
                };
                config.validate()?;
                Ok(config)
            }
        }
    }
}

/// `[well]` section for the tunnel/dwspec scenarios.
#[derive(Debug, Clone)]
pub struct WellSection {
    /// Sublevel structure.
    pub model: WellModel,
    /// Light-shift scale (E_R).
    pub u1_er: f64,
    /// Polarization angle (rad).
    pub theta_rad: f64,
    /// Transverse coupling (E_R).
    pub omega_perp_er: f64,
    /// Longitudinal bias (E_R).
    pub b_z_er: f64,
}

impl WellSection {
    /// Materialize the double-well parameters.
    pub fn to_config(&self) -> Result<DoubleWellConfig> {
        DoubleWellConfig::new(
            self.u1_er,
            self.theta_rad,
            self.omega_perp_er,
            self.b_z_er,
            self.model,
        )
    }
}

/// `[noise]` section.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSection {
    /// RMS fractional angle jitter.
    pub amplitude: f64,
    /// Correlation time (ħ/E_R).
    pub correlation_time: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            amplitude: 0.0,
            correlation_time: 1.0,
        }
    }
}

/// `[tunnel]` section.
#[derive(Debug, Clone)]
pub struct TunnelSection {
    /// Duration in tunneling periods 2π/δE (used when `duration` is unset).
    pub periods: f64,
    /// Absolute duration override (ħ/E_R).
    pub duration: Option<f64>,
    /// Initial doublet state.
    pub initial: StateLabel,
    /// Ensemble size; seeds used are seed, seed+1, ….
    pub n_seeds: usize,
}

impl Default for TunnelSection {
    fn default() -> Self {
        TunnelSection {
            periods: 4.0,
            duration: None,
            initial: StateLabel::Right,
            n_seeds: 1,
        }
    }
}

/// `[dwspec]` section.
#[derive(Debug, Clone, Copy)]
pub struct DwspecSection {
    /// Bias sweep start (E_R).
    pub b_z_min_er: f64,
    /// Bias sweep end (E_R).
    pub b_z_max_er: f64,
    /// Sweep samples.
    pub points: usize,
    /// Energy levels written per sample.
    pub n_levels: usize,
}

/// A fully parsed and validated scenario configuration.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    /// Selected run mode.
    pub scenario: Scenario,
    /// Base RNG seed.
    pub seed: u64,
    /// Output location and prefix.
    pub output: OutputSection,
    /// Lattice parameters (potential/bands).
    pub lattice: Option<LatticeSection>,
    /// Position grid (potential).
    pub grid: GridSection,
    /// Band-structure parameters (bands).
    pub bands: BandsSection,
    /// Figure-of-merit parameters (fom).
    pub fom: Option<FomSection>,
    /// Cooling parameters (cool).
    pub cool: Option<CoolSection>,
    /// Double-well parameters (tunnel/dwspec).
    pub well: Option<WellSection>,
    /// Angle-jitter noise statistics (tunnel).
    pub noise: NoiseSection,
    /// Tunneling-run parameters (tunnel).
    pub tunnel: TunnelSection,
    /// Bias-sweep parameters (dwspec).
    pub dwspec: Option<DwspecSection>,
    /// The raw configuration text, echoed into the run manifest directory.
    pub echo: String,
}

impl ScenarioConfig {
    /// File-name prefix for outputs.
    pub fn prefix(&self) -> String {
        self.output
            .prefix
            .clone()
            .unwrap_or_else(|| self.scenario.name().to_string())
    }
}

/// Read and validate a configuration file.
pub fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        LatticeError::Config(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_str(&text)
}

/// Error collector: every schema violation is recorded and reported at once.
struct Check {
    errors: Vec<String>,
}

impl Check {
    fn new() -> Check {
        Check { errors: Vec::new() }
    }

    fn push(&mut self, message: String) {
        self.errors.push(message);
    }

    fn finish(self) -> Result<()> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(LatticeError::Config(format!(
                "configuration invalid ({} problem{}):\n  - {}",
                self.errors.len(),
                if self.errors.len() == 1 { "" } else { "s" },
                self.errors.join("\n  - ")
            )))
        }
    }
}

type Table = toml::map::Map<String, Value>;

fn reject_unknown(check: &mut Check, section: &str, table: &Table, allowed: &[&str]) {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            check.push(format!(
                "unknown key `{section}{key}` (allowed: {})",
                allowed.join(", ")
            ));
        }
    }
}

fn get_f64(check: &mut Check, section: &str, table: &Table, key: &str) -> Option<f64> {
    match table.get(key) {
        None => None,
        Some(Value::Float(v)) => Some(*v),
        Some(Value::Integer(v)) => Some(*v as f64),
        Some(other) => {
            check.push(format!(
                "`{section}{key}` must be a number, not {}",
                other.type_str()
            ));
            None
        }
    }
}

fn require_f64(check: &mut Check, section: &str, table: &Table, key: &str) -> Option<f64> {
    if table.contains_key(key) {
        get_f64(check, section, table, key)
    } else {
        check.push(format!("missing required key `{section}{key}`"));
        None
    }
}

fn get_usize(check: &mut Check, section: &str, table: &Table, key: &str) -> Option<usize> {
    match table.get(key) {
        None => None,
        Some(Value::Integer(v)) if *v >= 0 => Some(*v as usize),
        Some(other) => {
            check.push(format!(
                "`{section}{key}` must be a non-negative integer, not {other}"
            ));
            None
        }
    }
}

fn get_str<'a>(
    check: &mut Check,
    section: &str,
    table: &'a Table,
    key: &str,
) -> Option<&'a str> {
    match table.get(key) {
        None => None,
        Some(Value::String(s)) => Some(s.as_str()),
        Some(other) => {
            check.push(format!(
                "`{section}{key}` must be a string, not {}",
                other.type_str()
            ));
            None
        }
    }
}

fn get_f64_triple(
    check: &mut Check,
    section: &str,
    table: &Table,
    key: &str,
) -> Option<[f64; 3]> {
    let value = table.get(key)?;
    let items = match value {
        Value::Array(items) if items.len() == 3 => items,
        _ => {
            check.push(format!(
                "`{section}{key}` must be an array of three numbers"
            ));
            return None;
        }
    };
    let mut out = [0.0; 3];
    for (i, item) in items.iter().enumerate() {
        match item {
            Value::Float(v) => out[i] = *v,
            Value::Integer(v) => out[i] = *v as f64,
            _ => {
                check.push(format!(
                    "`{section}{key}` must be an array of three numbers"
                ));
                return None;
            }
        }
    }
    Some(out)
}

fn get_f64_vec(check: &mut Check, section: &str, table: &Table, key: &str) -> Option<Vec<f64>> {
    let value = table.get(key)?;
    let items = match value {
        Value::Array(items) => items,
        _ => {
            check.push(format!("`{section}{key}` must be an array of numbers"));
            return None;
        }
    };
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        match item {
            Value::Float(v) => out.push(*v),
            Value::Integer(v) => out.push(*v as f64),
            _ => {
                check.push(format!("`{section}{key}` must be an array of numbers"));
                return None;
            }
        }
    }
    Some(out)
}

fn atom_choice(check: &mut Check, section: &str, table: &Table, key: &str) -> AtomChoice {
    match get_str(check, section, table, key) {
        Some("cesium") | None => AtomChoice::Cesium,
        Some("spin_half") => AtomChoice::SpinHalf,
        Some(other) => {
            check.push(format!(
                "`{section}{key}` must be \"cesium\" or \"spin_half\", not \"{other}\""
            ));
            AtomChoice::Cesium
        }
    }
}

fn section<'a>(
    check: &mut Check,
    root: &'a Table,
    name: &str,
    used_by: Scenario,
    scenario: Scenario,
) -> Option<&'a Table> {
    let value = root.get(name)?;
    if scenario != used_by {
        check.push(format!(
            "section [{name}] is not used by the `{}` scenario",
            scenario.name()
        ));
        return None;
    }
    match value {
        Value::Table(table) => Some(table),
        _ => {
            check.push(format!("[{name}] must be a table"));
            None
        }
    }
}

/// Parse and validate configuration text.
pub fn parse_str(text: &str) -> Result<ScenarioConfig> {
    let root: Value = text
        .parse()
        .map_err(|e| LatticeError::Config(format!("configuration is not valid TOML: {e}")))?;
    let root = match root {
        Value::Table(table) => table,
        _ => {
            return Err(LatticeError::Config(
                "configuration root must be a table".into(),
            ))
        }
    };
    let mut check = Check::new();
    reject_unknown(
        &mut check,
        "",
        &root,
        &[
            "scenario", "seed", "output", "lattice", "grid", "bands", "fom", "cool", "well",
            "noise", "tunnel", "dwspec",
        ],
    );

    let scenario = match get_str(&mut check, "", &root, "scenario") {
        Some(name) => match Scenario::parse(name) {
            Some(s) => s,
            None => {
                check.push(format!(
                    "`scenario` must be one of potential, bands, fom, cool, tunnel, dwspec, \
                     verify; got \"{name}\""
                ));
                check.finish()?;
                unreachable!("finish() errors when checks failed");
            }
        },
        None => {
            check.push("missing required key `scenario`".into());
            check.finish()?;
            unreachable!("finish() errors when checks failed");
        }
    };

    let seed = match root.get("seed") {
        None => 0,
        Some(Value::Integer(v)) if *v >= 0 => *v as u64,
        Some(other) => {
            check.push(format!(
                "`seed` must be a non-negative integer, not {other}"
            ));
            0
        }
    };

    // [output] — always allowed.
    let mut output = OutputSection {
        dir: PathBuf::from("."),
        prefix: None,
    };
    if let Some(value) = root.get("output") {
        match value {
            Value::Table(table) => {
                reject_unknown(&mut check, "output.", table, &["dir", "prefix"]);
                if let Some(dir) = get_str(&mut check, "output.", table, "dir") {
                    output.dir = PathBuf::from(dir);
                }
                if let Some(prefix) = get_str(&mut check, "output.", table, "prefix") {
                    output.prefix = Some(prefix.to_string());
                }
            }
            _ => check.push("[output] must be a table".into()),
        }
    }

    // [lattice] — potential and bands share it.
    let lattice_owner = if scenario == Scenario::Bands {
        Scenario::Bands
    } else {
        Scenario::Potential
    };
    let lattice = section(&mut check, &root, "lattice", lattice_owner, scenario).map(|table| {
        reject_unknown(
            &mut check,
            "lattice.",
            table,
            &[
                "atom",
                "u1_er",
                "theta_rad",
                "detuning_gamma",
                "external_b_er",
            ],
        );
        let atom = atom_choice(&mut check, "lattice.", table, "atom");
        let u1_er = require_f64(&mut check, "lattice.", table, "u1_er").unwrap_or(1.0);
        let theta_rad =
            require_f64(&mut check, "lattice.", table, "theta_rad").unwrap_or(1.0);
        let detuning_gamma = get_f64(&mut check, "lattice.", table, "detuning_gamma");
        let external_b_er =
            get_f64_triple(&mut check, "lattice.", table, "external_b_er").unwrap_or([0.0; 3]);
        if u1_er <= 0.0 {
            check.push("`lattice.u1_er` must be positive".into());
        }
        LatticeSection {
            atom,
            u1_er,
            theta_rad,
            detuning_gamma,
            external_b_er,
        }
    });
    if matches!(scenario, Scenario::Potential | Scenario::Bands) && lattice.is_none() {
        check.push("missing required section [lattice]".into());
    }

    // [grid] — potential only.
    let mut grid = GridSection::default();
    if let Some(table) = section(&mut check, &root, "grid", Scenario::Potential, scenario) {
        reject_unknown(&mut check, "grid.", table, &["z_points"]);
        if let Some(v) = get_usize(&mut check, "grid.", table, "z_points") {
            if v < 2 {
                check.push("`grid.z_points` must be at least 2".into());
            } else {
                grid.z_points = v;
            }
        }
    }

    // [bands] — bands only.
    let mut bands = BandsSection::default();
    if let Some(table) = section(&mut check, &root, "bands", Scenario::Bands, scenario) {
        reject_unknown(
            &mut check,
            "bands.",
            table,
            &["n_max", "q_points", "n_bands", "spinor_band", "spinor_points"],
        );
        if let Some(v) = get_usize(&mut check, "bands.", table, "n_max") {
            bands.n_max = v;
        }
        if let Some(v) = get_usize(&mut check, "bands.", table, "q_points") {
            if v < 2 {
                check.push("`bands.q_points` must be at least 2".into());
            } else {
                bands.q_points = v;
            }
        }
        if let Some(v) = get_usize(&mut check, "bands.", table, "n_bands") {
            if v == 0 {
                check.push("`bands.n_bands` must be at least 1".into());
            } else {
                bands.n_bands = v;
            }
        }
        bands.spinor_band = get_usize(&mut check, "bands.", table, "spinor_band");
        if let Some(v) = get_usize(&mut check, "bands.", table, "spinor_points") {
            if v < 2 {
                check.push("`bands.spinor_points` must be at least 2".into());
            } else {
                bands.spinor_points = v;
            }
        }
    }

    // [fom].
    let fom = section(&mut check, &root, "fom", Scenario::Fom, scenario).map(|table| {
        reject_unknown(
            &mut check,
            "fom.",
            table,
            &[
                "mode",
                "atom",
                "u1_grid_er",
                "detuning_gamma",
                "e_pi_ratio",
                "phi_rad",
            ],
        );
        let mode = match get_str(&mut check, "fom.", table, "mode") {
            Some("axial") | None => FomMode::Axial,
            Some("transverse_2d") => FomMode::Transverse2d,
            Some(other) => {
                check.push(format!(
                    "`fom.mode` must be \"axial\" or \"transverse_2d\", not \"{other}\""
                ));
                FomMode::Axial
            }
        };
        let atom = atom_choice(&mut check, "fom.", table, "atom");
        let u1_grid_er = match get_f64_vec(&mut check, "fom.", table, "u1_grid_er") {
            Some(grid) if !grid.is_empty() => grid,
            Some(_) => {
                check.push("`fom.u1_grid_er` must not be empty".into());
                vec![1.0]
            }
            None => {
                check.push("missing required key `fom.u1_grid_er`".into());
                vec![1.0]
            }
        };
        let detuning_gamma =
            require_f64(&mut check, "fom.", table, "detuning_gamma").unwrap_or(-1.0);
        let e_pi_ratio = get_f64(&mut check, "fom.", table, "e_pi_ratio").unwrap_or(0.5);
        let phi_rad = get_f64(&mut check, "fom.", table, "phi_rad")
            .unwrap_or(std::f64::consts::FRAC_PI_2);
        FomSection {
            mode,
            atom,
            u1_grid_er,
            detuning_gamma,
            e_pi_ratio,
            phi_rad,
        }
    });
    if scenario == Scenario::Fom && fom.is_none() {
        check.push("missing required section [fom]".into());
    }

    // [cool].
    let cool = section(&mut check, &root, "cool", Scenario::Cool, scenario).and_then(|table| {
        reject_unknown(
            &mut check,
            "cool.",
            table,
            &[
                "preset",
                "duration_scale",
                "u1_er",
                "detuning_gamma",
                "gamma_p_er",
                "q_boltzmann",
                "n_max",
                "schedule",
            ],
        );
        if let Some(preset) = get_str(&mut check, "cool.", table, "preset") {
            if preset != "deep_lattice" {
                check.push(format!(
                    "`cool.preset` must be \"deep_lattice\", not \"{preset}\""
                ));
            }
            let duration_scale =
                get_f64(&mut check, "cool.", table, "duration_scale").unwrap_or(1.0);
            for key in ["u1_er", "detuning_gamma", "gamma_p_er", "q_boltzmann", "n_max"] {
                if table.contains_key(key) {
                    check.push(format!(
                        "`cool.{key}` conflicts with `cool.preset`; use one or the other"
                    ));
                }
            }
            Some(CoolSection::Preset { duration_scale })
        } else {
            let u1_er = require_f64(&mut check, "cool.", table, "u1_er").unwrap_or(1.0);
            let detuning_gamma =
                require_f64(&mut check, "cool.", table, "detuning_gamma").unwrap_or(-1.0);
            let gamma_p_er =
                require_f64(&mut check, "cool.", table, "gamma_p_er").unwrap_or(0.1);
            let q_boltzmann =
                require_f64(&mut check, "cool.", table, "q_boltzmann").unwrap_or(0.5);
            let n_max = match get_usize(&mut check, "cool.", table, "n_max") {
                Some(v) => v,
                None => {
                    if !table.contains_key("n_max") {
                        check.push("missing required key `cool.n_max`".into());
                    }
                    7
                }
            };
            let mut schedule = Vec::new();
            match table.get("schedule") {
                Some(Value::Array(items)) => {
                    for (i, item) in items.iter().enumerate() {
                        match item {
                            Value::Table(entry) => {
                                let label = format!("cool.schedule[{i}].");
                                reject_unknown(
                                    &mut check,
                                    &label,
                                    entry,
                                    &["target_n", "duration"],
                                );
                                let target_n = match get_usize(&mut check, &label, entry, "target_n")
                                {
                                    Some(v) => v,
                                    None => {
                                        check.push(format!(
                                            "missing required key `{label}target_n`"
                                        ));
                                        1
                                    }
                                };
                                let duration = require_f64(&mut check, &label, entry, "duration")
                                    .unwrap_or(1.0);
                                schedule.push(ScheduleEntry { target_n, duration });
                            }
                            _ => check.push(format!(
                                "`cool.schedule[{i}]` must be a {{ target_n, duration }} table"
                            )),
                        }
                    }
                }
                Some(_) => check.push("`cool.schedule` must be an array of tables".into()),
                None => check.push("missing required key `cool.schedule`".into()),
            }
            Some(CoolSection::Explicit {
                u1_er,
                detuning_gamma,
                gamma_p_er,
                q_boltzmann,
                n_max,
                schedule,
            })
        }
    });
    if scenario == Scenario::Cool && cool.is_none() {
        check.push("missing required section [cool]".into());
    }

    // [well] — tunnel and dwspec share it.
    let well_owner = if scenario == Scenario::Dwspec {
        Scenario::Dwspec
    } else {
        Scenario::Tunnel
    };
    let well = section(&mut check, &root, "well", well_owner, scenario).map(|table| {
        reject_unknown(
            &mut check,
            "well.",
            table,
            &["model", "u1_er", "theta_rad", "omega_perp_er", "b_z_er"],
        );
        let model = match get_str(&mut check, "well.", table, "model") {
            Some("cesium_f4") | None => WellModel::CesiumF4,
            Some("spin_half") => WellModel::SpinHalf,
            Some(other) => {
                check.push(format!(
                    "`well.model` must be \"cesium_f4\" or \"spin_half\", not \"{other}\""
                ));
                WellModel::CesiumF4
            }
        };
        WellSection {
            model,
            u1_er: require_f64(&mut check, "well.", table, "u1_er").unwrap_or(1.0),
            theta_rad: require_f64(&mut check, "well.", table, "theta_rad").unwrap_or(1.0),
            omega_perp_er: require_f64(&mut check, "well.", table, "omega_perp_er")
                .unwrap_or(0.0),
            b_z_er: get_f64(&mut check, "well.", table, "b_z_er").unwrap_or(0.0),
        }
    });
    if matches!(scenario, Scenario::Tunnel | Scenario::Dwspec) && well.is_none() {
        check.push("missing required section [well]".into());
    }

    // [noise] — tunnel only.
    let mut noise = NoiseSection::default();
    if let Some(table) = section(&mut check, &root, "noise", Scenario::Tunnel, scenario) {
        reject_unknown(
            &mut check,
            "noise.",
            table,
            &["amplitude", "correlation_time"],
        );
        if let Some(v) = get_f64(&mut check, "noise.", table, "amplitude") {
            if v < 0.0 {
                check.push("`noise.amplitude` must be ≥ 0".into());
            } else {
                noise.amplitude = v;
            }
        }
        if let Some(v) = get_f64(&mut check, "noise.", table, "correlation_time") {
            if v <= 0.0 {
                check.push("`noise.correlation_time` must be positive".into());
            } else {
                noise.correlation_time = v;
            }
        }
    }

    // [tunnel] — tunnel only.
    let mut tunnel = TunnelSection::default();
    if let Some(table) = section(&mut check, &root, "tunnel", Scenario::Tunnel, scenario) {
        reject_unknown(
            &mut check,
            "tunnel.",
            table,
            &["periods", "duration", "initial", "n_seeds"],
        );
        if let Some(v) = get_f64(&mut check, "tunnel.", table, "periods") {
            if v <= 0.0 {
                check.push("`tunnel.periods` must be positive".into());
            } else {
                tunnel.periods = v;
            }
        }
        tunnel.duration = get_f64(&mut check, "tunnel.", table, "duration");
        if let Some(v) = tunnel.duration {
            if v <= 0.0 {
                check.push("`tunnel.duration` must be positive".into());
            }
        }
        if let Some(name) = get_str(&mut check, "tunnel.", table, "initial") {
            tunnel.initial = match name {
                "left" => StateLabel::Left,
                "right" => StateLabel::Right,
                "symmetric" => StateLabel::Symmetric,
                "antisymmetric" => StateLabel::Antisymmetric,
                other => {
                    check.push(format!(
                        "`tunnel.initial` must be left, right, symmetric, or antisymmetric; \
                         got \"{other}\""
                    ));
                    StateLabel::Right
                }
            };
        }
        if let Some(v) = get_usize(&mut check, "tunnel.", table, "n_seeds") {
            if v == 0 {
                check.push("`tunnel.n_seeds` must be at least 1".into());
            } else {
                tunnel.n_seeds = v;
            }
        }
    }

    // [dwspec] — dwspec only.
    let dwspec = section(&mut check, &root, "dwspec", Scenario::Dwspec, scenario).map(|table| {
        reject_unknown(
            &mut check,
            "dwspec.",
            table,
            &["b_z_min_er", "b_z_max_er", "points", "n_levels"],
        );
        let b_z_min_er = require_f64(&mut check, "dwspec.", table, "b_z_min_er").unwrap_or(0.0);
        let b_z_max_er = require_f64(&mut check, "dwspec.", table, "b_z_max_er").unwrap_or(1.0);
        if b_z_min_er >= b_z_max_er {
            check.push("`dwspec.b_z_min_er` must be below `dwspec.b_z_max_er`".into());
        }
        let points = match get_usize(&mut check, "dwspec.", table, "points") {
            Some(v) if v >= 2 => v,
            Some(_) => {
                check.push("`dwspec.points` must be at least 2".into());
                2
            }
            None => 41,
        };
        let n_levels = match get_usize(&mut check, "dwspec.", table, "n_levels") {
            Some(v) if v >= 1 => v,
            Some(_) => {
                check.push("`dwspec.n_levels` must be at least 1".into());
                1
            }
            None => 6,
        };
        DwspecSection {
            b_z_min_er,
            b_z_max_er,
            points,
            n_levels,
        }
    });
    if scenario == Scenario::Dwspec && dwspec.is_none() {
        check.push("missing required section [dwspec]".into());
    }

    check.finish()?;
    Ok(ScenarioConfig {
        scenario,
        seed,
        output,
        lattice,
        grid,
        bands,
        fom,
        cool,
        well,
        noise,
        tunnel,
        dwspec,
        echo: text.to_string(),
    })
}

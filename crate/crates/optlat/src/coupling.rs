//! Stimulated Raman couplings between vibrational levels of magnetic
//! sublevels, the photon scattering rate, and the figures of merit for
//! coherent manipulation.
//!
//! Two flavors of lattice-induced Raman coupling appear in far-off-resonance
//! spin lattices.  At large but finite detuning, σ₊ ↔ σ₋ two-photon
//! transitions drive Δm = ±2 coherences whose strength is governed by the
//! hyperfine-sum coupling constant β₂,₄; these vanish in the infinite
//! detuning limit.  Couplings with Δm = ±1 arise from π ↔ σ interference
//! (an effective transverse magnetic field) and persist at arbitrary
//! detuning; a 2D lattice with a small π-polarized admixture realizes them
//! with independently tunable phase.
//!
//! Every coupling is summarized by the ratio κ = U_R/ħγ_s of the Raman
//! matrix element to the photon scattering rate, and by the recoil-corrected
//! κ' = κ/(Δk z₀)² relevant for sideband cooling, where (Δk z₀)² is the
//! mean-squared momentum transfer of the scattering cycle in Lamb-Dicke
//! units.

use num_complex::Complex64;

use crate::atom::AtomSpec;
use crate::bands;
use crate::error::{LatticeError, Result};
use crate::fields::{self, three_beam_2d, lin_angle_lin, LatticeGeometry};
use crate::halfint::HalfInt;
use crate::operator::OperatorField;
use crate::polarizability::{potential_operator, DetuningSpec};

/// (Δk z₀)²/η² for photons scattered out of the lattice field itself: the
/// mean-squared momentum transfer along the lattice axis is 11ħ²k²/15.
pub const LATTICE_RECOIL_FACTOR: f64 = 11.0 / 15.0;

/// (Δk z₀)²/η² for a three-step resolved-sideband optical pumping cycle
/// (absorption plus spontaneous emission): 21ħ²k²/5 along the lattice axis.
pub const PUMP_RECOIL_FACTOR: f64 = 21.0 / 5.0;

/// Detunings closer than this (in linewidths) to a hyperfine line are poles.
const POLE_GUARD: f64 = 1.0;

/// Summary of a Raman-coupling analysis at one parameter point.
#[derive(Debug, Clone)]
pub struct CouplingReport {
    /// Magnitude of the Raman matrix element U_R (recoil energies).
    pub u_r: f64,
    /// Photon scattering energy scale ħγ_s (recoil energies; the rate is
    /// γ_s in units E_R/ħ).
    pub gamma_s: f64,
    /// Figure of merit κ = U_R/ħγ_s.
    pub kappa: f64,
    /// Recoil-corrected figure of merit κ' = κ/(Δk z₀)².  For the 2D
    /// Δm = ±1 lattice this is the x-axis value κ'_x.
    pub kappa_prime: f64,
    /// κ'_y for the 2D lattice (three times κ'_x); absent for 1D couplings.
    pub kappa_prime_y: Option<f64>,
    /// Lamb-Dicke parameter η of the relevant trap.
    pub eta: f64,
}

fn require_cesium_structure(atom: &AtomSpec) -> Result<()> {
    if atom.f_max() != HalfInt::from_int(4) || atom.f_excited_max() != HalfInt::from_int(5) {
        return Err(LatticeError::InvalidInput(
            "the Δm = ±2 coupling constant is defined for the cesium level \
             structure (ground F = 4, excited F' = 3..5)"
            .into(),
        ));
    }
    Ok(())
}

fn check_detuning(delta: f64) -> Result<()> {
    if !delta.is_finite() || delta.abs() < POLE_GUARD {
        return Err(LatticeError::InvalidInput(format!(
            "detuning {delta} linewidths is too close to the stretched-state \
             resonance"
        )));
    }
    Ok(())
}

/// Coupling constant β₂,₄ for the σ₊ ↔ σ₋ Raman coherence between
/// |F=4, m=2⟩ and |F=4, m=4⟩, as a closed form in the detuning (units of Γ)
/// from the stretched excited line:
///
/// β₂,₄ = (√7/360)·(16 − 21·Δ/(Δ+δ₅₄) + 5·Δ/(Δ+δ₅₃)),
///
/// where δ₅₄ and δ₅₃ are the excited hyperfine splittings below the top
/// line.  Negative (red) detunings give negative β.
pub fn beta_24(atom: &AtomSpec, delta: f64) -> Result<f64> {
    require_cesium_structure(atom)?;
    check_detuning(delta)?;
    let d54 = atom.splitting_from_top(HalfInt::from_int(4));
    let d53 = atom.splitting_from_top(HalfInt::from_int(3));
    for d in [d54, d53] {
        if (delta + d).abs() < POLE_GUARD {
            return Err(LatticeError::Pole(format!(
                "detuning {delta} linewidths coincides with the hyperfine \
                 line {d} linewidths below the stretched state"
            )));
        }
    }
    let bracket = 16.0 - 21.0 * delta / (delta + d54) + 5.0 * delta / (delta + d53);
    Ok(7.0_f64.sqrt() / 360.0 * bracket)
}

/// β₂,₄ evaluated by the independent hyperfine sum
/// Σ_F' f₄F'·(Δ₄₅/Δ₄F')·⟨F',3|4,2;1,1⟩·⟨F',3|4,4;1,−1⟩, which the closed
/// form of [`beta_24`] resums exactly.
pub fn beta_24_hyperfine_sum(atom: &AtomSpec, delta: f64) -> Result<f64> {
    require_cesium_structure(atom)?;
    check_detuning(delta)?;
    let f4 = HalfInt::from_int(4);
    let one = HalfInt::from_int(1);
    let mut total = 0.0;
    for fe in atom.excited_manifolds() {
        let strength = atom.line_strength(fe, f4);
        if strength == 0.0 {
            continue;
        }
        let ratio = atom.detuning_ratio(fe, delta)?;
        let c_up = crate::angular::clebsch_gordan(
            f4,
            HalfInt::from_int(2),
            one,
            HalfInt::from_int(1),
            fe,
            HalfInt::from_int(3),
        );
        let c_down = crate::angular::clebsch_gordan(
            f4,
            HalfInt::from_int(4),
            one,
            HalfInt::from_int(-1),
            fe,
            HalfInt::from_int(3),
        );
        total += strength * ratio * c_up * c_down;
    }
    Ok(total)
}

/// Leading large-detuning behavior of β₂,₄: expanding the closed form to
/// first order in 1/Δ gives (√7/6)·δ/Δ with δ the base hyperfine interval
/// (≈ 4.4Γ/Δ for cesium's δ = 10Γ).
pub fn beta_24_asymptotic(atom: &AtomSpec, delta: f64) -> Result<f64> {
    require_cesium_structure(atom)?;
    check_detuning(delta)?;
    Ok(7.0_f64.sqrt() / 6.0 * atom.interval / delta)
}

/// Photon scattering energy scale ħγ_s = U₁·(Γ/|Δ|)·|ε̄(x)|² for an atom at
/// position `x` in the given beam geometry (detuning in linewidths).  By
/// convention the intensity is evaluated at the trap minimum of interest;
/// this routine evaluates wherever it is asked.
pub fn scattering_rate(
    geometry: &LatticeGeometry,
    u1: f64,
    delta: f64,
    x: [f64; 3],
) -> Result<f64> {
    if u1 <= 0.0 {
        return Err(LatticeError::InvalidInput(
            "single-beam light shift u1 must be positive".into(),
        ));
    }
    check_detuning(delta)?;
    Ok(u1 / delta.abs() * fields::intensity(geometry, x))
}

/// Δm = ±2 Raman coupling analysis for a 1D crossed-polarization lattice:
/// U_R = 2U₁β₂,₄η with η taken from the m = 4 well of the finite-detuning
/// potential, ħγ_s from the lattice intensity at that well's minimum, and
/// κ' using the lattice-photon recoil factor.
pub fn raman_dm2(u1: f64, atom: &AtomSpec, delta: f64) -> Result<CouplingReport> {
    if u1 <= 0.0 {
        return Err(LatticeError::InvalidInput(
            "single-beam light shift u1 must be positive".into(),
        ));
    }
    let beta = beta_24(atom, delta)?;
    let geometry = lin_angle_lin(std::f64::consts::FRAC_PI_2)?;
    let potential = potential_operator(
        &geometry,
        atom,
        atom.f_max(),
        u1,
        &DetuningSpec::finite(delta)?,
    )?;
    let (_omega, z_min, eta) = bands::harmonic_well(&potential, HalfInt::from_int(4))?;
    let u_r = (2.0 * u1 * beta * eta).abs();
    let gamma_s = scattering_rate(&geometry, u1, delta, [0.0, 0.0, z_min])?;
    let kappa = u_r / gamma_s;
    let kappa_prime = kappa / (LATTICE_RECOIL_FACTOR * eta * eta);
    Ok(CouplingReport {
        u_r,
        gamma_s,
        kappa,
        kappa_prime,
        kappa_prime_y: None,
        eta,
    })
}

/// Δm = ±1 Raman coupling analysis for the three-beam 2D lattice (beam
/// half-angle π/3) with a π-polarized admixture E_π = `e_pi_ratio`·E₁ at
/// relative phase `phi`.  U_R = U₁/(2√(2F))·(E_π/E₁)·η with the closed-form
/// Lamb-Dicke parameter η = (2E_R/15U₁)^{1/4} of the origin well; ħγ_s uses
/// the lattice-only intensity there (the weak pump beam's own scattering is
/// not counted against the lattice figure of merit); κ'_x and κ'_y follow
/// the closed forms 0.17·(E_π/E₁)·(|Δ|/Γ)·(U₁/E_R)^{1/4} and κ'_y = 3κ'_x.
pub fn raman_dm1_2d(
    u1: f64,
    atom: &AtomSpec,
    delta: f64,
    e_pi_ratio: f64,
    phi: f64,
) -> Result<CouplingReport> {
    if u1 <= 0.0 {
        return Err(LatticeError::InvalidInput(
            "single-beam light shift u1 must be positive".into(),
        ));
    }
    if e_pi_ratio < 0.0 {
        return Err(LatticeError::InvalidInput(
            "pump amplitude ratio must be non-negative".into(),
        ));
    }
    check_detuning(delta)?;
    let f = atom.f_max().as_f64();
    let eta = (2.0 / (15.0 * u1)).powf(0.25);
    let u_r = u1 / (2.0 * (2.0 * f).sqrt()) * e_pi_ratio * eta;
    // Lattice-only geometry for the scattering intensity at the origin well.
    let lattice = three_beam_2d(std::f64::consts::FRAC_PI_3, 0.0, phi)?;
    let gamma_s = scattering_rate(&lattice, u1, delta, [0.0, 0.0, 0.0])?;
    let kappa = u_r / gamma_s;
    let kappa_prime = 0.17 * e_pi_ratio * delta.abs() * u1.powf(0.25);
    Ok(CouplingReport {
        u_r,
        gamma_s,
        kappa,
        kappa_prime,
        kappa_prime_y: Some(3.0 * kappa_prime),
        eta,
    })
}

/// A harmonic vibrational level of one magnetic sublevel, localized along a
/// line through the lattice: base point, unit axis, well-center offset along
/// the axis, oscillation quantum ħω, vibrational index and sublevel.
#[derive(Debug, Clone)]
pub struct VibrationalState {
    /// Base point of the sampling line (units 1/k_L).
    pub base: [f64; 3],
    /// Unit direction of the line.
    pub axis: [f64; 3],
    /// Offset of the well center along the axis from the base point.
    pub center: f64,
    /// Oscillation quantum ħω (recoil energies).
    pub omega: f64,
    /// Vibrational quantum number.
    pub n: usize,
    /// Magnetic sublevel.
    pub m: HalfInt,
}

impl VibrationalState {
    /// Harmonic-oscillator amplitude at offset `s` along the axis.
    fn amplitude(&self, s: f64) -> f64 {
        let eta = 1.0 / self.omega.sqrt();
        let u = (s - self.center) / (eta * std::f64::consts::SQRT_2);
        // Physicists' Hermite polynomials by recurrence.
        let mut h_prev = 1.0;
        let mut h = 2.0 * u;
        let hn = match self.n {
            0 => 1.0,
            1 => h,
            n => {
                for k in 1..n {
                    let next = 2.0 * u * h - 2.0 * k as f64 * h_prev;
                    h_prev = h;
                    h = next;
                }
                h
            }
        };
        let mut log_norm = -0.25 * (2.0 * std::f64::consts::PI * eta * eta).ln();
        for k in 1..=self.n {
            log_norm -= 0.5 * (2.0 * k as f64).ln();
        }
        log_norm.exp() * hn * (-0.5 * u * u).exp()
    }
}

fn axis_harmonic_periods(potential: &OperatorField, axis: [f64; 3]) -> Option<f64> {
    let mut min_g = f64::INFINITY;
    for term in potential.terms() {
        let g = term.g[0] * axis[0] + term.g[1] * axis[1] + term.g[2] * axis[2];
        if g.abs() > 1e-9 {
            min_g = min_g.min(g.abs());
        }
    }
    if min_g.is_finite() {
        Some(2.0 * std::f64::consts::PI / min_g)
    } else {
        None
    }
}

/// Harmonic expansion of the well seen by sublevel `m` along an arbitrary
/// line `base + s·axis`: locates the global minimum of the diagonal
/// potential over one period and returns (ħω, s_min, η).  Generalizes the
/// 1-D [`bands::harmonic_well`] to tilted or transverse directions.
pub fn directional_well(
    potential: &OperatorField,
    m: HalfInt,
    base: [f64; 3],
    axis: [f64; 3],
) -> Result<(f64, f64, f64)> {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(LatticeError::InvalidInput(
            "well axis must be a unit vector".into(),
        ));
    }
    let dim = potential.dimension();
    let f = HalfInt::from_doubled(dim as i32 - 1);
    let mi = f.projections().position(|p| p == m).ok_or_else(|| {
        LatticeError::InvalidInput(format!(
            "sublevel m = {m} is outside the potential's F = {f} manifold"
        ))
    })?;
    let period = axis_harmonic_periods(potential, axis).ok_or_else(|| {
        LatticeError::InvalidInput(
            "potential has no harmonic content along the requested axis".into(),
        )
    })?;

    let point = |s: f64| -> [f64; 3] {
        [
            base[0] + s * axis[0],
            base[1] + s * axis[1],
            base[2] + s * axis[2],
        ]
    };
    let energy = |s: f64| potential.eval(point(s))[[mi, mi]].re;
    let slope = |s: f64| potential.derivative(point(s), axis)[[mi, mi]].re;
    let curvature = |s: f64| potential.second_derivative(point(s), axis)[[mi, mi]].re;

    let samples = 4096;
    let mut s_best = 0.0;
    let mut e_best = f64::INFINITY;
    for k in 0..samples {
        let s = period * k as f64 / samples as f64;
        let e = energy(s);
        if e < e_best {
            e_best = e;
            s_best = s;
        }
    }
    let scale: f64 = potential
        .terms()
        .iter()
        .map(|t| t.matrix[[mi, mi]].norm())
        .sum::<f64>()
        .max(1e-300);
    let mut s = s_best;
    for _ in 0..60 {
        let c = curvature(s);
        if c.abs() < 1e-14 * scale {
            break;
        }
        let step = slope(s) / c;
        s -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    let curv = curvature(s);
    if curv <= 1e-12 * scale || slope(s).abs() > 1e-8 * scale {
        return Err(LatticeError::InvalidInput(format!(
            "no quadratic minimum along the requested axis for m = {m} \
             (curvature {curv:.3e})"
        )));
    }
    let omega = (2.0 * curv).sqrt();
    Ok((omega, s, 1.0 / omega.sqrt()))
}

/// Numeric Raman matrix element ⟨bra| Û |ket⟩ between two harmonic
/// vibrational states, evaluated by quadrature along their common axis.
/// Captures the full spatial dependence of the coupling operator, so it
/// serves as an oracle for the lowest-order closed forms.
pub fn raman_matrix_element_general(
    potential: &OperatorField,
    bra: &VibrationalState,
    ket: &VibrationalState,
) -> Result<Complex64> {
    for (a, b) in bra.axis.iter().zip(ket.axis.iter()) {
        if (a - b).abs() > 1e-12 {
            return Err(LatticeError::InvalidInput(
                "bra and ket must share a quadrature axis".into(),
            ));
        }
    }
    for (a, b) in bra.base.iter().zip(ket.base.iter()) {
        if (a - b).abs() > 1e-12 {
            return Err(LatticeError::InvalidInput(
                "bra and ket must share a base point".into(),
            ));
        }
    }
    let dim = potential.dimension();
    let f = HalfInt::from_doubled(dim as i32 - 1);
    let mi_bra = f.projections().position(|p| p == bra.m);
    let mi_ket = f.projections().position(|p| p == ket.m);
    let (row, col) = match (mi_bra, mi_ket) {
        (Some(r), Some(c)) => (r, c),
        _ => {
            return Err(LatticeError::InvalidInput(
                "bra/ket sublevels are outside the potential's manifold".into(),
            ))
        }
    };
    if bra.omega <= 0.0 || ket.omega <= 0.0 {
        return Err(LatticeError::InvalidInput(
            "vibrational states need positive oscillation quanta".into(),
        ));
    }

    let eta_max = (1.0 / bra.omega.sqrt()).max(1.0 / ket.omega.sqrt());
    let n_max = bra.n.max(ket.n) as f64;
    let half_width = eta_max * (9.0 + 3.0 * n_max.sqrt());
    let center = 0.5 * (bra.center + ket.center);
    let lo = center - half_width;
    let hi = center + half_width;
    let steps = 4000usize; // even, for Simpson weights
    let h = (hi - lo) / steps as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..=steps {
        let s = lo + k as f64 * h;
        let weight = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let point = [
            bra.base[0] + s * bra.axis[0],
            bra.base[1] + s * bra.axis[1],
            bra.base[2] + s * bra.axis[2],
        ];
        let matrix = potential.eval(point);
        total += weight * bra.amplitude(s) * matrix[[row, col]] * ket.amplitude(s);
    }
    Ok(total * (h / 3.0))
}

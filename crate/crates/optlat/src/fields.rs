//! Lattice light fields: beam geometries, local polarization, spherical
//! components, and the effective magnetic field of the light shift.
//!
//! All beams are monochromatic plane waves at the lattice wavelength, with
//! wavevectors in units of k_L (unit magnitude) and polarization amplitudes
//! in units of the single-beam reference amplitude.  The local field
//! ε̄(x) = Σ_b ε_b exp(i(k_b·x + φ_b)) is evaluated analytically from the
//! beam list; no grids are stored.  The far-detuned light shift splits into
//! a scalar part ∝ |ε̄|² and an effective magnetic field ∝ i ε̄*×ε̄ set by
//! the local polarization ellipticity.

use crate::error::{LatticeError, Result};
use num_complex::Complex64;

/// Complex polarization / field vector in Cartesian components.
pub type CVec3 = [Complex64; 3];

/// Tolerance for the unit-wavevector and transversality invariants.
const BEAM_TOL: f64 = 1e-12;

fn cvec(x: f64, y: f64, z: f64) -> CVec3 {
    [
        Complex64::new(x, 0.0),
        Complex64::new(y, 0.0),
        Complex64::new(z, 0.0),
    ]
}

/// ⟨a|b⟩ = Σ conj(a_i) b_i.
pub fn cdot(a: &CVec3, b: &CVec3) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1] + a[2].conj() * b[2]
}

/// Componentwise cross product a × b (no conjugation).
pub fn ccross(a: &CVec3, b: &CVec3) -> CVec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// A single lattice beam: unit wavevector (units k_L), complex transverse
/// polarization (units of the reference amplitude), and a phase offset.
#[derive(Debug, Clone)]
pub struct PlaneWave {
    /// Propagation direction, |k| = 1 in units of k_L.
    pub wavevector: [f64; 3],
    /// Complex polarization amplitude, perpendicular to `wavevector`.
    pub polarization: CVec3,
    /// Phase offset in radians; the beam contributes ε·exp(i(k·x + phase)).
    pub phase: f64,
}

impl PlaneWave {
    /// Build a beam, enforcing |k| = 1 and k ⊥ ε within 1e-12.
    pub fn new(wavevector: [f64; 3], polarization: CVec3, phase: f64) -> Result<Self> {
        let k_norm = norm3(&wavevector);
        if (k_norm - 1.0).abs() > BEAM_TOL {
            return Err(LatticeError::InvalidInput(format!(
                "beam wavevector has |k| = {k_norm:.15}; beams must be monochromatic \
                 at the lattice wavelength (|k| = 1 in units of k_L)"
            )));
        }
        let kc = cvec(wavevector[0], wavevector[1], wavevector[2]);
        let overlap = cdot(&kc, &polarization).norm();
        let scale = cdot(&polarization, &polarization).re.sqrt().max(1.0);
        if overlap > BEAM_TOL * scale {
            return Err(LatticeError::InvalidInput(format!(
                "beam polarization is not transverse: |k·ε| = {overlap:.3e}"
            )));
        }
        Ok(PlaneWave {
            wavevector,
            polarization,
            phase,
        })
    }
}

/// A full lattice configuration: the beam list, a static external magnetic
/// field given as a Larmor-energy vector ħγB (units E_R), and the
/// quantization axis used for spherical decompositions.
#[derive(Debug, Clone)]
pub struct LatticeGeometry {
    /// The interfering beams.
    pub beams: Vec<PlaneWave>,
    /// External static field as Larmor energies ħγB, units E_R.
    pub external_b: [f64; 3],
    /// Unit vector defining σ± and π components.
    pub quantization_axis: [f64; 3],
}

impl LatticeGeometry {
    /// Build a geometry from beams; quantization axis defaults to ẑ and the
    /// external field to zero.
    pub fn new(beams: Vec<PlaneWave>) -> Result<Self> {
        if beams.is_empty() {
            return Err(LatticeError::InvalidInput(
                "a lattice geometry needs at least one beam".into(),
            ));
        }
        Ok(LatticeGeometry {
            beams,
            external_b: [0.0; 3],
            quantization_axis: [0.0, 0.0, 1.0],
        })
    }

    /// Replace the external static field (Larmor energies ħγB, units E_R).
    pub fn with_external_b(mut self, b: [f64; 3]) -> Self {
        self.external_b = b;
        self
    }

    /// Replace the quantization axis (must be unit norm).
    pub fn with_quantization_axis(mut self, axis: [f64; 3]) -> Result<Self> {
        if (norm3(&axis) - 1.0).abs() > BEAM_TOL {
            return Err(LatticeError::InvalidInput(
                "quantization axis must be unit norm".into(),
            ));
        }
        self.quantization_axis = axis;
        Ok(self)
    }
}

/// Local lattice polarization ε̄(x) = Σ_b ε_b exp(i(k_b·x + φ_b)).
/// The physical field is Re[E₁ ε̄(x) e^{−iωt}]; ε̄ is not unit norm.
pub fn field_at(geometry: &LatticeGeometry, x: [f64; 3]) -> CVec3 {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for beam in &geometry.beams {
        let phase = beam.wavevector[0] * x[0]
            + beam.wavevector[1] * x[1]
            + beam.wavevector[2] * x[2]
            + beam.phase;
        let factor = Complex64::new(0.0, phase).exp();
        for i in 0..3 {
            out[i] += beam.polarization[i] * factor;
        }
    }
    out
}

/// Local intensity |ε̄(x)|² in units of the single-beam intensity.
pub fn intensity(geometry: &LatticeGeometry, x: [f64; 3]) -> f64 {
    let eps = field_at(geometry, x);
    cdot(&eps, &eps).re
}

/// Right-handed orthonormal triad (ê₁, ê₂, axis) adapted to a quantization
/// axis; reduces to (x̂, ŷ, ẑ) for axis = ẑ and is deterministic for any
/// tilt (ê₁ ⊥ both ẑ and axis away from the poles).
pub fn axis_triad(axis: &[f64; 3]) -> Result<[[f64; 3]; 3]> {
    if (norm3(axis) - 1.0).abs() > 1e-9 {
        return Err(LatticeError::InvalidInput(
            "quantization axis must be unit norm".into(),
        ));
    }
    let zxa = [-axis[1], axis[0], 0.0];
    let n = norm3(&zxa);
    let e1;
    if n < 1e-9 {
        // axis along ±ẑ: keep ê₁ = x̂ so the triad is the Cartesian frame.
        e1 = [1.0, 0.0, 0.0];
    } else {
        e1 = [zxa[0] / n, zxa[1] / n, zxa[2] / n];
    }
    let e2 = [
        axis[1] * e1[2] - axis[2] * e1[1],
        axis[2] * e1[0] - axis[0] * e1[2],
        axis[0] * e1[1] - axis[1] * e1[0],
    ];
    Ok([e1, e2, *axis])
}

/// The spherical unit vectors (e₊, e₋, e₀) adapted to `axis`:
/// e±1 = ∓(ê₁ ± i ê₂)/√2 and e₀ = axis, with (ê₁, ê₂, axis) the triad from
/// `axis_triad`.
pub fn spherical_basis(axis: &[f64; 3]) -> Result<[CVec3; 3]> {
    let [e1, e2, axis] = axis_triad(axis)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e_plus = [
        Complex64::new(-s * e1[0], -s * e2[0]),
        Complex64::new(-s * e1[1], -s * e2[1]),
        Complex64::new(-s * e1[2], -s * e2[2]),
    ];
    let e_minus = [
        Complex64::new(s * e1[0], -s * e2[0]),
        Complex64::new(s * e1[1], -s * e2[1]),
        Complex64::new(s * e1[2], -s * e2[2]),
    ];
    let e_zero = cvec(axis[0], axis[1], axis[2]);
    Ok([e_plus, e_minus, e_zero])
}

/// Decompose a complex field vector onto the spherical basis about `axis`,
/// returning the σ+, σ−, and π amplitudes (a_q = e_q†·ε).  Reconstruction
/// ε = a₊e₊ + a₋e₋ + a₀e₀ is exact.
pub fn spherical_components(
    epsilon: &CVec3,
    axis: &[f64; 3],
) -> Result<(Complex64, Complex64, Complex64)> {
    let [e_plus, e_minus, e_zero] = spherical_basis(axis)?;
    Ok((
        cdot(&e_plus, epsilon),
        cdot(&e_minus, epsilon),
        cdot(&e_zero, epsilon),
    ))
}

/// Scalar light shift and effective magnetic field of the far-detuned
/// potential at a point: U_J = −(2/3)U₁|ε̄|² and B_eff = (i/3)U₁ (ε̄*×ε̄),
/// which is real because the cross product of a vector with its conjugate is
/// purely imaginary.  `u1` > 0 is the single-beam light shift for red
/// detuning; the attractive sign is applied here.
pub fn effective_field(
    geometry: &LatticeGeometry,
    u1: f64,
    x: [f64; 3],
) -> Result<(f64, [f64; 3])> {
    if u1 <= 0.0 {
        return Err(LatticeError::InvalidInput(format!(
            "u1 must be positive (the magnitude of the single-beam light shift); got {u1}"
        )));
    }
    let eps = field_at(geometry, x);
    let u_j = -(2.0 / 3.0) * u1 * cdot(&eps, &eps).re;
    let eps_conj = [eps[0].conj(), eps[1].conj(), eps[2].conj()];
    let cross = ccross(&eps_conj, &eps);
    let b = [
        (Complex64::new(0.0, u1 / 3.0) * cross[0]).re,
        (Complex64::new(0.0, u1 / 3.0) * cross[1]).re,
        (Complex64::new(0.0, u1 / 3.0) * cross[2]).re,
    ];
    Ok((u_j, b))
}

/// 1D lin-angle-lin lattice: two unit-amplitude counterpropagating beams
/// along ±ẑ with linear polarizations at relative angle θ, phased so the two
/// helicity standing waves are cos(k_L z ∓ θ/2).
pub fn lin_angle_lin(theta: f64) -> Result<LatticeGeometry> {
    lin_angle_lin_with_phase(theta, 0.0)
}

/// `lin_angle_lin` with an extra phase offset on the −z beam, which rigidly
/// translates the standing-wave pattern by offset/2 in k_L z.
pub fn lin_angle_lin_with_phase(theta: f64, phase_offset: f64) -> Result<LatticeGeometry> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(LatticeError::InvalidInput(format!(
            "lin-angle-lin requires 0 ≤ θ ≤ π; got {theta}"
        )));
    }
    let (half_sin, half_cos) = (theta / 2.0).sin_cos();
    let forward = PlaneWave::new([0.0, 0.0, 1.0], cvec(half_cos, half_sin, 0.0), 0.0)?;
    let backward = PlaneWave::new(
        [0.0, 0.0, -1.0],
        cvec(half_cos, -half_sin, 0.0),
        phase_offset,
    )?;
    LatticeGeometry::new(vec![forward, backward])
}

/// 2D three-beam lattice: two beams at ±θ from +ŷ polarized in the x–y
/// plane and one along −ŷ polarized along x̂, plus a π-polarized admixture
/// of amplitude `e_pi_amplitude`·e^{iφ} along ẑ on the −ŷ beam.  Beam
/// phases put the σ+ maximum at the origin; the lattice wavevectors are
/// K_x = sinθ and K_y = 1 + cosθ in units of k_L.
pub fn three_beam_2d(theta: f64, e_pi_amplitude: f64, phi: f64) -> Result<LatticeGeometry> {
    if e_pi_amplitude < 0.0 {
        return Err(LatticeError::InvalidInput(format!(
            "π-admixture amplitude must be ≥ 0; got {e_pi_amplitude}"
        )));
    }
    let (sin_t, cos_t) = theta.sin_cos();
    let pi_component = Complex64::new(0.0, phi).exp() * e_pi_amplitude;
    let down = PlaneWave::new(
        [0.0, -1.0, 0.0],
        [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            pi_component,
        ],
        0.0,
    )?;
    let right = PlaneWave::new([sin_t, cos_t, 0.0], cvec(cos_t, -sin_t, 0.0), -theta)?;
    let left = PlaneWave::new([-sin_t, cos_t, 0.0], cvec(cos_t, sin_t, 0.0), theta)?;
    LatticeGeometry::new(vec![down, right, left])
}

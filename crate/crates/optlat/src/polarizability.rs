//! Ground-manifold polarizability tensor and the full lattice potential
//! operator, with finite-detuning and far-detuned backends.
//!
//! The light shift on a hyperfine ground manifold F is the contraction
//! Û(x) = −U₁ Σ_{q'q} a_{q'}*(x) a_q(x) α̂_{q'q}, where a_q are the spherical
//! components of the local polarization and α̂_{q'q} is a (2F+1)×(2F+1)
//! operator built from line strengths, Clebsch–Gordan coefficients, and the
//! per-line detuning weights.  In the far-detuned limit the tensor collapses
//! to a scalar part plus an effective magnetic field coupling, Û = U_J Î +
//! B_eff·F̂/F, valid on the stretched manifold F = I + J.  All potentials
//! are parameterized by the single-beam light shift U₁ in recoil units; the
//! characteristic scalar polarizability is divided out throughout.
//!
//! Spherical indices are ordered (σ+, σ−, π) ↔ q = (+1, −1, 0), matching
//! the component order returned by `fields::spherical_components`.

use crate::angular::clebsch_gordan;
use crate::atom::AtomSpec;
use crate::error::{LatticeError, Result};
use crate::fields::{axis_triad, ccross, cdot, spherical_basis, CVec3, LatticeGeometry};
use crate::halfint::HalfInt;
use crate::operator::{identity, f_vector, OperatorField, OperatorMatrix};
use ndarray::Array2;
use num_complex::Complex64;

/// q values in storage order (σ+, σ−, π).
const Q_ORDER: [i32; 3] = [1, -1, 0];

/// Which backend builds the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetuningMode {
    /// Sum over resolved excited hyperfine manifolds with per-line detunings.
    FiniteHyperfine,
    /// Detuning far beyond the excited hyperfine splitting: scalar plus
    /// effective-field form on the stretched manifold.
    InfiniteLimit,
}

/// Detuning of the lattice laser, referenced to the stretched line
/// (F_max → F'_max), in linewidths; negative is red.
#[derive(Debug, Clone, Copy)]
pub struct DetuningSpec {
    /// Δ from the stretched line in units of Γ; negative = red.
    pub delta_stretch: f64,
    /// Finite-hyperfine or infinite-limit backend.
    pub mode: DetuningMode,
}

impl DetuningSpec {
    /// Finite-hyperfine backend at the given stretched-line detuning.
    pub fn finite(delta_stretch: f64) -> Result<Self> {
        Self::new(delta_stretch, DetuningMode::FiniteHyperfine)
    }

    /// Infinite-limit backend; the detuning still sets scattering rates.
    pub fn infinite(delta_stretch: f64) -> Result<Self> {
        Self::new(delta_stretch, DetuningMode::InfiniteLimit)
    }

    /// Validated constructor: zero detuning is never meaningful.
    pub fn new(delta_stretch: f64, mode: DetuningMode) -> Result<Self> {
        if delta_stretch == 0.0 || !delta_stretch.is_finite() {
            return Err(LatticeError::InvalidInput(
                "detuning must be nonzero and finite".into(),
            ));
        }
        Ok(DetuningSpec {
            delta_stretch,
            mode,
        })
    }
}

/// 3×3 array of sublevel-basis operators, indexed [q'][q] in the
/// (σ+, σ−, π) storage order.
pub type AlphaTensor = [[OperatorMatrix; 3]; 3];

fn sublevel_index(f: HalfInt, m: HalfInt) -> Option<usize> {
    let t = (m + f).doubled();
    if t < 0 || t % 2 != 0 {
        return None;
    }
    let i = (t / 2) as usize;
    if i < f.multiplicity() {
        Some(i)
    } else {
        None
    }
}

/// Normalized polarizability tensor α̂_{q'q} on ground manifold `f`,
/// assembled line-by-line over the excited hyperfine manifolds with
/// detuning weights Δ_stretch/Δ_{F,F'}.  Requires the finite-hyperfine
/// mode; the far-detuned closed form lives in `alpha_infinite`.
pub fn alpha_tensor(atom: &AtomSpec, f: HalfInt, det: &DetuningSpec) -> Result<AlphaTensor> {
    if det.mode != DetuningMode::FiniteHyperfine {
        return Err(LatticeError::InvalidInput(
            "alpha_tensor needs the finite-hyperfine detuning mode; \
             use alpha_infinite for the far-detuned closed form"
                .into(),
        ));
    }
    if !atom.ground_manifolds().contains(&f) {
        return Err(LatticeError::InvalidInput(format!(
            "F = {f} is not a ground hyperfine manifold of this atom"
        )));
    }
    let n = f.multiplicity();
    let one = HalfInt::from_int(1);
    let ms: Vec<HalfInt> = f.projections().collect();

    let mut alpha: AlphaTensor =
        std::array::from_fn(|_| std::array::from_fn(|_| Array2::zeros((n, n))));
    for (ia, &qa) in Q_ORDER.iter().enumerate() {
        for (ib, &qb) in Q_ORDER.iter().enumerate() {
            let hqa = HalfInt::from_int(qa);
            let hqb = HalfInt::from_int(qb);
            for fp in atom.excited_manifolds() {
                let weight = atom.line_strength(fp, f);
                if weight == 0.0 {
                    continue;
                }
                let ratio = atom.detuning_ratio(fp, det.delta_stretch)?;
                for (col, &m) in ms.iter().enumerate() {
                    let m_exc = m + hqb;
                    let m_row = m_exc - hqa;
                    let Some(row) = sublevel_index(f, m_row) else {
                        continue;
                    };
                    let absorb = clebsch_gordan(f, m, one, hqb, fp, m_exc);
                    let emit = clebsch_gordan(f, m_row, one, hqa, fp, m_exc);
                    alpha[ia][ib][[row, col]] +=
                        Complex64::new(ratio * weight * absorb * emit, 0.0);
                }
            }
        }
    }
    Ok(alpha)
}

/// Far-detuned polarizability on the stretched manifold F = I + J:
/// α̂_{q'q} = (2/3) δ_{q'q} Î − (i/3) (e_{q'}* × e_q)·F̂/F.
pub fn alpha_infinite(atom: &AtomSpec, f: HalfInt) -> Result<AlphaTensor> {
    if f != atom.f_max() {
        return Err(LatticeError::InvalidInput(format!(
            "the far-detuned closed form holds on the stretched manifold \
             F = {} only; got F = {f}",
            atom.f_max()
        )));
    }
    let n = f.multiplicity();
    let basis = spherical_basis(&[0.0, 0.0, 1.0])?;
    let fvec = f_vector(f);
    let f_val = f.as_f64();
    let mut alpha: AlphaTensor =
        std::array::from_fn(|_| std::array::from_fn(|_| Array2::zeros((n, n))));
    for a in 0..3 {
        for b in 0..3 {
            let mut m: OperatorMatrix = Array2::zeros((n, n));
            if a == b {
                m = m + identity(f).mapv(|c| c * (2.0 / 3.0));
            }
            let ea_conj = [basis[a][0].conj(), basis[a][1].conj(), basis[a][2].conj()];
            let cross = ccross(&ea_conj, &basis[b]);
            for i in 0..3 {
                let coeff = Complex64::new(0.0, -1.0 / 3.0) * cross[i] / f_val;
                m = m + fvec[i].mapv(|c| c * coeff);
            }
            alpha[a][b] = m;
        }
    }
    Ok(alpha)
}

fn triad_components(v: &CVec3, triad: &[[f64; 3]; 3]) -> [Complex64; 3] {
    std::array::from_fn(|i| {
        v[0] * triad[i][0] + v[1] * triad[i][1] + v[2] * triad[i][2]
    })
}

/// Full potential operator Û(x) on manifold `f` as a finite Fourier series:
/// the light-shift contraction of the beam geometry with the polarizability
/// tensor plus the static Zeeman term −ħγB·F̂ from the geometry's external
/// field.  The infinite-limit backend assembles U_J Î + B_eff·F̂/F and is
/// restricted to the stretched manifold.
pub fn potential_operator(
    geometry: &LatticeGeometry,
    atom: &AtomSpec,
    f: HalfInt,
    u1: f64,
    det: &DetuningSpec,
) -> Result<OperatorField> {
    if u1 <= 0.0 {
        return Err(LatticeError::InvalidInput(format!(
            "u1 must be positive (single-beam light shift magnitude); got {u1}"
        )));
    }
    let n = f.multiplicity();
    let triad = axis_triad(&geometry.quantization_axis)?;
    let fvec = f_vector(f);
    let mut field = OperatorField::new(n);

    match det.mode {
        DetuningMode::InfiniteLimit => {
            if f != atom.f_max() {
                return Err(LatticeError::InvalidInput(format!(
                    "infinite-limit potential holds on the stretched manifold \
                     F = {} only; got F = {f}",
                    atom.f_max()
                )));
            }
            let f_val = f.as_f64();
            for br in &geometry.beams {
                for bc in &geometry.beams {
                    let g = [
                        bc.wavevector[0] - br.wavevector[0],
                        bc.wavevector[1] - br.wavevector[1],
                        bc.wavevector[2] - br.wavevector[2],
                    ];
                    let ph = Complex64::new(0.0, bc.phase - br.phase).exp();
                    let scalar = cdot(&br.polarization, &bc.polarization);
                    let mut m: OperatorMatrix =
                        identity(f).mapv(|c| c * (-(2.0 / 3.0) * u1 * scalar * ph));
                    let pr_conj = [
                        br.polarization[0].conj(),
                        br.polarization[1].conj(),
                        br.polarization[2].conj(),
                    ];
                    let cross = ccross(&pr_conj, &bc.polarization);
                    let cross_t = triad_components(&cross, &triad);
                    for i in 0..3 {
                        let coeff = Complex64::new(0.0, u1 / 3.0) * cross_t[i] * ph / f_val;
                        m = m + fvec[i].mapv(|c| c * coeff);
                    }
                    field.add_term(g, m)?;
                }
            }
        }
        DetuningMode::FiniteHyperfine => {
            let alpha = alpha_tensor(atom, f, det)?;
            let basis = spherical_basis(&geometry.quantization_axis)?;
            let comps: Vec<[Complex64; 3]> = geometry
                .beams
                .iter()
                .map(|b| std::array::from_fn(|q| cdot(&basis[q], &b.polarization)))
                .collect();
            for (ir, br) in geometry.beams.iter().enumerate() {
                for (ic, bc) in geometry.beams.iter().enumerate() {
                    let g = [
                        bc.wavevector[0] - br.wavevector[0],
                        bc.wavevector[1] - br.wavevector[1],
                        bc.wavevector[2] - br.wavevector[2],
                    ];
                    let ph = Complex64::new(0.0, bc.phase - br.phase).exp();
                    let mut m: OperatorMatrix = Array2::zeros((n, n));
                    for a in 0..3 {
                        for b in 0..3 {
                            let coeff = -u1 * comps[ir][a].conj() * comps[ic][b] * ph;
                            if coeff.norm() == 0.0 {
                                continue;
                            }
                            m = m + alpha[a][b].mapv(|c| c * coeff);
                        }
                    }
                    field.add_term(g, m)?;
                }
            }
        }
    }

    // Static Zeeman term −ħγB·F̂, with the field expressed on the axis triad.
    let b = geometry.external_b;
    if b != [0.0; 3] {
        let mut zeeman: OperatorMatrix = Array2::zeros((n, n));
        for i in 0..3 {
            let comp = b[0] * triad[i][0] + b[1] * triad[i][1] + b[2] * triad[i][2];
            zeeman = zeeman + fvec[i].mapv(|c| c * Complex64::new(-comp, 0.0));
        }
        field.add_constant(zeeman)?;
    }
    Ok(field)
}

/// Computed values of the normalized-dipole identities for the two-level
/// fine-structure atom J = 1/2 → J' = 3/2.
#[derive(Debug, Clone)]
pub struct DipoleIdentityReport {
    /// Tr(D̂†·D̂); should be 4.
    pub trace: f64,
    /// Max deviation of (D̂†×D̂)_z from −(2/3)i σ̂_z.
    pub vector_defect: f64,
    /// Max magnitude of the rank-2 irreducible part of α̂(1/2→3/2).
    pub rank2_defect: f64,
}

/// Construct the normalized dipole operators for J = 1/2 → J' = 3/2 and
/// verify the trace, vector, and vanishing-rank-2 identities that underpin
/// the scalar-plus-effective-field form of the far-detuned potential.
pub fn dipole_identities() -> DipoleIdentityReport {
    let jg = HalfInt::from_doubled(1);
    let je = HalfInt::from_doubled(3);
    let one = HalfInt::from_int(1);
    let ng = jg.multiplicity();
    let ne = je.multiplicity();
    let gs: Vec<HalfInt> = jg.projections().collect();

    // Spherical dipole components D_q as (2J'+1)×(2J+1) matrices.
    let mut d_sph: Vec<Array2<Complex64>> = Vec::new();
    for &q in &Q_ORDER {
        let hq = HalfInt::from_int(q);
        let mut d: Array2<Complex64> = Array2::zeros((ne, ng));
        for (col, &m) in gs.iter().enumerate() {
            let m_exc = m + hq;
            if let Some(row) = sublevel_index(je, m_exc) {
                d[[row, col]] = Complex64::new(clebsch_gordan(jg, m, one, hq, je, m_exc), 0.0);
            }
        }
        d_sph.push(d);
    }
    let (d_plus, d_minus, d_zero) = (&d_sph[0], &d_sph[1], &d_sph[2]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let d_x = (d_minus - d_plus).mapv(|c| c * s);
    let d_y = (d_plus + d_minus).mapv(|c| c * Complex64::new(0.0, s));
    let d_z = d_zero.clone();
    let cart = [d_x, d_y, d_z];

    let dagger = |m: &Array2<Complex64>| m.t().mapv(|c| c.conj());

    let mut trace = 0.0;
    for d in &cart {
        let prod = dagger(d).dot(d);
        for i in 0..ng {
            trace += prod[[i, i]].re;
        }
    }

    // (D̂†×D̂)_z vs −(2/3) i σ̂_z  (σ̂_z = diag(−1, +1) on ascending m).
    let cross_z = dagger(&cart[0]).dot(&cart[1]) - dagger(&cart[1]).dot(&cart[0]);
    let mut vector_defect = 0.0f64;
    for i in 0..ng {
        for j in 0..ng {
            let want = if i == j {
                let sign = if i == 0 { -1.0 } else { 1.0 };
                Complex64::new(0.0, -(2.0 / 3.0) * sign)
            } else {
                Complex64::new(0.0, 0.0)
            };
            vector_defect = vector_defect.max((cross_z[[i, j]] - want).norm());
        }
    }

    // Rank-2 irreducible part of the Cartesian tensor α_ij = D_i† D_j.
    let mut alpha_cart: Vec<Vec<Array2<Complex64>>> = Vec::new();
    for i in 0..3 {
        let mut row = Vec::new();
        for j in 0..3 {
            row.push(dagger(&cart[i]).dot(&cart[j]));
        }
        alpha_cart.push(row);
    }
    let third = 1.0 / 3.0;
    let mut trace_op: Array2<Complex64> = Array2::zeros((ng, ng));
    for i in 0..3 {
        trace_op = trace_op + &alpha_cart[i][i];
    }
    let mut rank2_defect = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let mut sym = (&alpha_cart[i][j] + &alpha_cart[j][i]).mapv(|c| c * 0.5);
            if i == j {
                sym = sym - trace_op.mapv(|c| c * third);
            }
            for v in sym.iter() {
                rank2_defect = rank2_defect.max(v.norm());
            }
        }
    }

    DipoleIdentityReport {
        trace,
        vector_defect,
        rank2_defect,
    }
}

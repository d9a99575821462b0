//! Bloch band structure for spinor atoms in one-dimensional lattice potentials.
//!
//! The single-particle Hamiltonian is H = p² + Û(z) in recoil units (energies
//! in E_R, lengths in 1/k_L, M = 1/2 so that p² alone carries the kinetic
//! term).  A lattice potential built from optical harmonics couples plane
//! waves whose wavenumbers differ by even multiples of k_L, so each Bloch
//! state at quasimomentum q ∈ [−1, 1) expands over the discrete set
//! |q + 2n⟩ ⊗ |F m⟩, n ∈ [−n_max, n_max].  Diagonalising the resulting
//! (2n_max+1)(2F+1)-dimensional matrix per q-point yields the band energies
//! and spinor eigenvectors used by the tunneling and cooling analyses.
//!
//! For deep double wells the lowest two bands at q = 0 form a near-degenerate
//! parity doublet; symmetric/antisymmetric combinations of its members build
//! the left/right localized states whose energy splitting sets the tunneling
//! rate.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::error::{LatticeError, Result};
use crate::halfint::HalfInt;
use crate::linalg;
use crate::operator::{OperatorField, OperatorMatrix};

/// Number of eigenvector columns retained per quasimomentum unless the caller
/// asks for more.  Energies are always stored for the full spectrum.
pub const DEFAULT_STORED_BANDS: usize = 12;

/// Default plane-wave cutoff: harmonics n ∈ [−24, 24].
pub const DEFAULT_N_MAX: usize = 24;

/// Acceptable parity-eigenstate residual ‖P c ∓ c‖ for doublet classification.
const PARITY_TOL: f64 = 1e-6;

/// Band energies and (a subset of) Bloch spinors on a quasimomentum grid.
#[derive(Debug, Clone)]
pub struct BandSolution {
    /// Quasimomenta in units of k_L.
    pub q_grid: Vec<f64>,
    /// Number of magnetic sublevels 2F+1.
    pub dim_m: usize,
    /// Plane-wave cutoff used for the expansion.
    pub n_max: usize,
    /// Per-q eigenvalues, ascending; full spectrum.
    pub energies: Vec<Array1<f64>>,
    /// Per-q eigenvector matrix, one column per stored band.  Row index is
    /// the composite plane-wave/sublevel index (see [`BandSolution::index`]).
    pub spinors: Vec<Array2<Complex64>>,
}

impl BandSolution {
    /// Composite basis index of plane wave n (signed) and sublevel column mi.
    pub fn index(&self, n: i32, mi: usize) -> usize {
        composite_index(n, mi, self.n_max, self.dim_m)
    }

    /// Index of the grid point with q = 0, if present.
    pub fn q_zero_index(&self) -> Result<usize> {
        self.q_grid
            .iter()
            .position(|q| q.abs() < 1e-12)
            .ok_or_else(|| {
                LatticeError::InvalidInput(
                    "quasimomentum grid does not contain q = 0".into(),
                )
            })
    }

    /// Width (max − min over q) of each of the lowest `count` bands.
    pub fn band_widths(&self, count: usize) -> Vec<f64> {
        let n_bands = self.energies.first().map_or(0, |e| e.len());
        (0..count.min(n_bands))
            .map(|b| {
                let lo = self
                    .energies
                    .iter()
                    .map(|e| e[b])
                    .fold(f64::INFINITY, f64::min);
                let hi = self
                    .energies
                    .iter()
                    .map(|e| e[b])
                    .fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .collect()
    }
}

fn composite_index(n: i32, mi: usize, n_max: usize, dim_m: usize) -> usize {
    ((n + n_max as i32) as usize) * dim_m + mi
}

/// Uniformly spaced quasimomentum grid of `count` points spanning the zone
/// from −k_L to +k_L inclusive (the two endpoints are the same physical Bloch
/// state).  An odd count places a point exactly at q = 0.
pub fn uniform_q_grid(count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.0];
    }
    (0..count)
        .map(|k| -1.0 + 2.0 * k as f64 / (count - 1) as f64)
        .collect()
}

/// Assemble the Bloch Hamiltonian at quasimomentum `q` from the 1-D harmonic
/// map produced by [`OperatorField::to_1d`].
fn bloch_hamiltonian(
    harmonics: &BTreeMap<i32, OperatorMatrix>,
    dim_m: usize,
    n_max: usize,
    q: f64,
) -> Array2<Complex64> {
    let n_pw = 2 * n_max + 1;
    let dim = n_pw * dim_m;
    let mut h = Array2::<Complex64>::zeros((dim, dim));
    for n in -(n_max as i32)..=(n_max as i32) {
        let kin = {
            let k = q + 2.0 * n as f64;
            k * k
        };
        for mi in 0..dim_m {
            let idx = composite_index(n, mi, n_max, dim_m);
            h[[idx, idx]] += Complex64::new(kin, 0.0);
        }
    }
    for (&shift, block) in harmonics {
        // exp(i 2h z) maps |q + 2n⟩ to |q + 2(n+h)⟩: row block n+h, column n.
        for n in -(n_max as i32)..=(n_max as i32) {
            let nr = n + shift;
            if nr < -(n_max as i32) || nr > n_max as i32 {
                continue;
            }
            for mr in 0..dim_m {
                for mc in 0..dim_m {
                    let v = block[[mr, mc]];
                    if v.norm_sqr() == 0.0 {
                        continue;
                    }
                    let row = composite_index(nr, mr, n_max, dim_m);
                    let col = composite_index(n, mc, n_max, dim_m);
                    h[[row, col]] += v;
                }
            }
        }
    }
    h
}

/// Diagonalise H(q) = p² + Û(z) over the plane-wave/spinor basis for every
/// quasimomentum in `q_grid`, storing the full spectrum and the lowest
/// [`DEFAULT_STORED_BANDS`] eigenvectors per point.
pub fn band_structure(
    potential: &OperatorField,
    q_grid: &[f64],
    n_max: usize,
) -> Result<BandSolution> {
    band_structure_stored(potential, q_grid, n_max, DEFAULT_STORED_BANDS)
}

/// As [`band_structure`] but retaining `n_store` eigenvector columns per
/// quasimomentum (clamped to the matrix dimension).
pub fn band_structure_stored(
    potential: &OperatorField,
    q_grid: &[f64],
    n_max: usize,
    n_store: usize,
) -> Result<BandSolution> {
    if q_grid.is_empty() {
        return Err(LatticeError::InvalidInput(
            "quasimomentum grid must contain at least one point".into(),
        ));
    }
    if n_max == 0 {
        return Err(LatticeError::InvalidInput(
            "plane-wave cutoff n_max must be at least 1".into(),
        ));
    }
    let harmonics = potential.to_1d()?;
    let dim_m = potential.dimension();
    let dim = (2 * n_max + 1) * dim_m;
    let keep = n_store.min(dim).max(1);

    // Independent eigenproblems per q-point; solve in parallel and collect in
    // grid order so results are deterministic regardless of thread count.
    let solved: Vec<Result<(Array1<f64>, Array2<Complex64>)>> = q_grid
        .par_iter()
        .map(|&q| {
            let h = bloch_hamiltonian(&harmonics, dim_m, n_max, q);
            let (vals, vecs) = linalg::eigh(&h)?;
            let stored = vecs.slice(ndarray::s![.., 0..keep]).to_owned();
            Ok((vals, stored))
        })
        .collect();

    let mut energies = Vec::with_capacity(q_grid.len());
    let mut spinors = Vec::with_capacity(q_grid.len());
    for item in solved {
        let (vals, vecs) = item?;
        energies.push(vals);
        spinors.push(vecs);
    }
    Ok(BandSolution {
        q_grid: q_grid.to_vec(),
        dim_m,
        n_max,
        energies,
        spinors,
    })
}

/// Energy gap E₁(0) − E₀(0) between the two lowest bands at zero
/// quasimomentum: the tunnel splitting of a symmetric double well.
pub fn doublet_splitting(solution: &BandSolution) -> Result<f64> {
    let iq = solution.q_zero_index()?;
    let e = &solution.energies[iq];
    if e.len() < 2 {
        return Err(LatticeError::InvalidInput(
            "band solution has fewer than two bands".into(),
        ));
    }
    Ok(e[1] - e[0])
}

/// Which member of a localized or parity pair a state represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateLabel {
    /// Even-parity doublet member.
    Symmetric,
    /// Odd-parity doublet member.
    Antisymmetric,
    /// Localized combination with the larger ⟨F_z⟩.
    Left,
    /// Localized combination with the smaller ⟨F_z⟩.
    Right,
}

/// A q = 0 Bloch-basis spinor wavefunction ψ_m(z) = Σ_n c_{n,m} e^{i 2 n z}.
#[derive(Debug, Clone)]
pub struct LocalizedState {
    /// Plane-wave/sublevel coefficients in the composite index layout.
    pub coefficients: Array1<Complex64>,
    /// Number of magnetic sublevels.
    pub dim_m: usize,
    /// Plane-wave cutoff.
    pub n_max: usize,
    /// Role of this state in its pair.
    pub label: StateLabel,
}

impl LocalizedState {
    /// Composite basis index for plane wave n and sublevel column mi.
    pub fn index(&self, n: i32, mi: usize) -> usize {
        composite_index(n, mi, self.n_max, self.dim_m)
    }

    /// Spinor amplitude ψ_m(z) for each sublevel at position z (units 1/k_L).
    pub fn amplitudes(&self, z: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim_m];
        for n in -(self.n_max as i32)..=(self.n_max as i32) {
            let phase = Complex64::new(0.0, 2.0 * n as f64 * z).exp();
            for (mi, item) in out.iter_mut().enumerate() {
                *item += self.coefficients[self.index(n, mi)] * phase;
            }
        }
        out
    }

    /// Total probability density Σ_m |ψ_m(z)|².
    pub fn density(&self, z: f64) -> f64 {
        self.amplitudes(z).iter().map(|a| a.norm_sqr()).sum()
    }

    /// Inner product ⟨self|other⟩.
    pub fn overlap(&self, other: &LocalizedState) -> Complex64 {
        self.coefficients
            .iter()
            .zip(other.coefficients.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Mean magnetic quantum number ⟨F_z⟩ = Σ_m m Σ_n |c_{n,m}|² of a normalized
/// state (Parseval: the plane-wave sum equals the spatial average).
pub fn magnetization(state: &LocalizedState) -> f64 {
    let f = HalfInt::from_doubled((state.dim_m as i32 - 1) as i32);
    let ms: Vec<f64> = f.projections().map(|m| m.as_f64()).collect();
    let mut total = 0.0;
    for n in -(state.n_max as i32)..=(state.n_max as i32) {
        for (mi, m) in ms.iter().enumerate() {
            total += m * state.coefficients[state.index(n, mi)].norm_sqr();
        }
    }
    total
}

/// Rotate a q = 0 eigenvector's global phase so its largest-magnitude
/// coefficient is real and positive.
fn fix_phase(c: &mut Array1<Complex64>) {
    let mut best = 0usize;
    let mut best_norm = -1.0;
    for (i, v) in c.iter().enumerate() {
        let n = v.norm_sqr();
        if n > best_norm {
            best_norm = n;
            best = i;
        }
    }
    let pivot = c[best];
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        c.mapv_inplace(|v| v * rot);
    }
}

/// Parity image (Pc)_{n,m} = c_{−n,−m} corresponding to z → −z together with
/// sublevel reversal.
fn parity_image(c: &Array1<Complex64>, n_max: usize, dim_m: usize) -> Array1<Complex64> {
    let mut out = Array1::zeros(c.len());
    for n in -(n_max as i32)..=(n_max as i32) {
        for mi in 0..dim_m {
            let src = composite_index(-n, dim_m - 1 - mi, n_max, dim_m);
            let dst = composite_index(n, mi, n_max, dim_m);
            out[dst] = c[src];
        }
    }
    out
}

/// Parity expectation ⟨c|P|c⟩ (≈ ±1 for parity eigenstates) and the residual
/// ‖P c − sign·c‖ for the rounded sign.
fn parity_signature(c: &Array1<Complex64>, n_max: usize, dim_m: usize) -> (f64, f64) {
    let image = parity_image(c, n_max, dim_m);
    let expect: Complex64 = c
        .iter()
        .zip(image.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    let sign = if expect.re >= 0.0 { 1.0 } else { -1.0 };
    let residual: f64 = c
        .iter()
        .zip(image.iter())
        .map(|(a, b)| (b - a * sign).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (sign, residual)
}

/// Even- and odd-parity members (in that order) of the q = 0 ground doublet.
pub fn parity_pair(solution: &BandSolution) -> Result<(LocalizedState, LocalizedState)> {
    let iq = solution.q_zero_index()?;
    let e = &solution.energies[iq];
    if e.len() < 3 || solution.spinors[iq].ncols() < 2 {
        return Err(LatticeError::InvalidInput(
            "band solution must store at least the three lowest bands at q = 0".into(),
        ));
    }
    let splitting = e[1] - e[0];
    let gap = e[2] - e[1];
    if gap < 3.0 * splitting {
        return Err(LatticeError::Degenerate(format!(
            "ground doublet is not isolated: gap to band 2 is {gap:.6e} \
             but 3× the doublet splitting is {:.6e}",
            3.0 * splitting
        )));
    }

    let mut members = Vec::with_capacity(2);
    for b in 0..2 {
        let mut c: Array1<Complex64> = solution.spinors[iq].column(b).to_owned();
        fix_phase(&mut c);
        let (sign, residual) = parity_signature(&c, solution.n_max, solution.dim_m);
        if residual > PARITY_TOL {
            return Err(LatticeError::Numeric(format!(
                "q = 0 band {b} is not a parity eigenstate \
                 (residual {residual:.3e}); the doublet may be mixed by a \
                 symmetry-breaking field"
            )));
        }
        members.push((sign, c));
    }
    if members[0].0 == members[1].0 {
        return Err(LatticeError::Degenerate(
            "both doublet members carry the same parity signature".into(),
        ));
    }
    // Even-parity member first.
    if members[0].0 < 0.0 {
        members.swap(0, 1);
    }
    let (_, c_sym) = members.remove(0);
    let (_, c_anti) = members.remove(0);
    let dim_m = solution.dim_m;
    let n_max = solution.n_max;
    Ok((
        LocalizedState {
            coefficients: c_sym,
            dim_m,
            n_max,
            label: StateLabel::Symmetric,
        },
        LocalizedState {
            coefficients: c_anti,
            dim_m,
            n_max,
            label: StateLabel::Antisymmetric,
        },
    ))
}

/// Left/right localized combinations (S ± A)/√2 of the ground doublet,
/// ordered so the first state has the larger ⟨F_z⟩.
pub fn localized_pair(solution: &BandSolution) -> Result<(LocalizedState, LocalizedState)> {
    let (sym, anti) = parity_pair(solution)?;
    let inv_sqrt2 = 1.0 / f64::sqrt(2.0);
    let plus: Array1<Complex64> = sym
        .coefficients
        .iter()
        .zip(anti.coefficients.iter())
        .map(|(s, a)| (s + a) * inv_sqrt2)
        .collect();
    let minus: Array1<Complex64> = sym
        .coefficients
        .iter()
        .zip(anti.coefficients.iter())
        .map(|(s, a)| (s - a) * inv_sqrt2)
        .collect();
    let mut left = LocalizedState {
        coefficients: plus,
        dim_m: sym.dim_m,
        n_max: sym.n_max,
        label: StateLabel::Left,
    };
    let mut right = LocalizedState {
        coefficients: minus,
        dim_m: sym.dim_m,
        n_max: sym.n_max,
        label: StateLabel::Right,
    };
    if magnetization(&left) < magnetization(&right) {
        std::mem::swap(&mut left.coefficients, &mut right.coefficients);
    }
    left.label = StateLabel::Left;
    right.label = StateLabel::Right;
    Ok((left, right))
}

/// Harmonic expansion of the adiabatic well seen by sublevel `m`: locate the
/// global minimum of the diagonal potential E_m(z) over one period, then
/// return (ħω, z_min, η) where ħω = √(2 E_m''(z*)) is the oscillation quantum
/// (recoil units, M = 1/2) and η = (ħω)^{−1/2} is the Lamb-Dicke parameter
/// k_L z₀ of its ground-state wavepacket.
pub fn harmonic_well(potential: &OperatorField, m: HalfInt) -> Result<(f64, f64, f64)> {
    let harmonics = potential.to_1d()?;
    let dim_m = potential.dimension();
    let f = HalfInt::from_doubled(dim_m as i32 - 1);
    let mi = f
        .projections()
        .position(|p| p == m)
        .ok_or_else(|| {
            LatticeError::InvalidInput(format!(
                "sublevel m = {m} is outside the potential's F = {f} manifold"
            ))
        })?;

    // Fourier coefficients of the m-th diagonal: E_m(z) = Σ_h d_h e^{i 2 h z}.
    let diag: Vec<(i32, Complex64)> = harmonics
        .iter()
        .map(|(&h, block)| (h, block[[mi, mi]]))
        .collect();
    let scale: f64 = diag.iter().map(|(_, d)| d.norm()).sum();
    if scale == 0.0 || diag.iter().all(|&(h, d)| h == 0 || d.norm() < 1e-14 * scale) {
        return Err(LatticeError::InvalidInput(
            "sublevel potential is constant: no harmonic minimum exists".into(),
        ));
    }

    let energy = |z: f64| -> f64 {
        diag.iter()
            .map(|&(h, d)| (d * Complex64::new(0.0, 2.0 * h as f64 * z).exp()).re)
            .sum()
    };
    let slope = |z: f64| -> f64 {
        diag.iter()
            .map(|&(h, d)| {
                (d * Complex64::new(0.0, 2.0 * h as f64) * Complex64::new(0.0, 2.0 * h as f64 * z).exp())
                    .re
            })
            .sum()
    };
    let curvature = |z: f64| -> f64 {
        diag.iter()
            .map(|&(h, d)| {
                let g = 2.0 * h as f64;
                (-g * g * d * Complex64::new(0.0, g * z).exp()).re
            })
            .sum()
    };

    // Coarse scan over one period, then Newton refinement on E'(z) = 0.
    let samples = 4096;
    let period = std::f64::consts::PI;
    let mut z_best = 0.0;
    let mut e_best = f64::INFINITY;
    for k in 0..samples {
        let z = period * k as f64 / samples as f64;
        let e = energy(z);
        if e < e_best {
            e_best = e;
            z_best = z;
        }
    }
    let mut z = z_best;
    for _ in 0..60 {
        let s = slope(z);
        let c = curvature(z);
        if c.abs() < 1e-14 * scale {
            break;
        }
        let step = s / c;
        z -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    let curv = curvature(z);
    if curv <= 1e-12 * scale || slope(z).abs() > 1e-8 * scale {
        return Err(LatticeError::InvalidInput(format!(
            "failed to locate a quadratic minimum for sublevel m = {m} \
             (curvature {curv:.3e})"
        )));
    }
    let omega = (2.0 * curv).sqrt();
    let eta = 1.0 / omega.sqrt();
    Ok((omega, z, eta))
}

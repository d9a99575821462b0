//! Spin operators and position-dependent operator fields.
//!
//! Operators act on a single ground hyperfine manifold of total angular
//! momentum `f`, in the basis of magnetic sublevels ordered by ascending
//! projection m = −f … +f.  Position dependence is stored as a finite set of
//! spatial Fourier harmonics: lattice light fields are sums of a few plane
//! waves, so every operator built from them is exactly a finite trigonometric
//! series.  Keeping the harmonics (rather than grids) makes evaluation exact
//! at any point and feeds the band solver its coupling blocks directly.

use crate::error::{LatticeError, Result};
use crate::halfint::HalfInt;
use ndarray::Array2;
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Dense complex matrix on the (2f+1)-dimensional sublevel basis.
pub type OperatorMatrix = Array2<Complex64>;

/// Number of magnetic sublevels for angular momentum `f`.
pub fn dim(f: HalfInt) -> usize {
    f.multiplicity()
}

/// Identity operator on the sublevel basis.
pub fn identity(f: HalfInt) -> OperatorMatrix {
    Array2::eye(dim(f))
}

/// F̂_z: diagonal matrix of projections m, ascending.
pub fn f_z(f: HalfInt) -> OperatorMatrix {
    let n = dim(f);
    let mut out = Array2::zeros((n, n));
    for (i, m) in f.projections().enumerate() {
        out[[i, i]] = Complex64::new(m.as_f64(), 0.0);
    }
    out
}

/// Raising operator F̂₊ with ⟨m+1|F̂₊|m⟩ = √(f(f+1) − m(m+1)).
pub fn f_plus(f: HalfInt) -> OperatorMatrix {
    let n = dim(f);
    let ff = f.as_f64() * (f.as_f64() + 1.0);
    let mut out = Array2::zeros((n, n));
    let ms: Vec<HalfInt> = f.projections().collect();
    for i in 0..n.saturating_sub(1) {
        let m = ms[i].as_f64();
        out[[i + 1, i]] = Complex64::new((ff - m * (m + 1.0)).sqrt(), 0.0);
    }
    out
}

/// Lowering operator F̂₋ = F̂₊†.
pub fn f_minus(f: HalfInt) -> OperatorMatrix {
    f_plus(f).t().mapv(|c| c.conj())
}

/// F̂_x = (F̂₊ + F̂₋)/2.
pub fn f_x(f: HalfInt) -> OperatorMatrix {
    (f_plus(f) + f_minus(f)).mapv(|c| 0.5 * c)
}

/// F̂_y = (F̂₊ − F̂₋)/2i.
pub fn f_y(f: HalfInt) -> OperatorMatrix {
    (f_plus(f) - f_minus(f)).mapv(|c| c / Complex64::new(0.0, 2.0))
}

/// The Cartesian triple (F̂_x, F̂_y, F̂_z).
pub fn f_vector(f: HalfInt) -> [OperatorMatrix; 3] {
    [f_x(f), f_y(f), f_z(f)]
}

/// Largest elementwise deviation of `a` from Hermiticity.
pub fn hermiticity_defect_matrix(a: &OperatorMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Tolerance for identifying two spatial harmonics as equal (units k_L).
const HARMONIC_MERGE_TOL: f64 = 1e-9;

/// One Fourier component of an operator field: matrix coefficient of
/// exp(i g·x) with g in units of k_L.
#[derive(Debug, Clone)]
pub struct FieldTerm {
    /// Spatial frequency of this harmonic, units k_L.
    pub g: [f64; 3],
    /// Matrix coefficient multiplying exp(i g·x).
    pub matrix: OperatorMatrix,
}

/// Position-dependent operator stored as a finite Fourier series
/// Û(x) = Σ_g M_g · exp(i g·x) over the sublevel basis.
///
/// Hermitian fields satisfy M_{−g} = M_g†, which `hermiticity_defect`
/// verifies without sampling.  Values are immutable once built and safe to
/// share across threads.
#[derive(Debug, Clone)]
pub struct OperatorField {
    dimension: usize,
    terms: Vec<FieldTerm>,
}

impl OperatorField {
    /// Empty field (identically zero) on a `dimension`-level basis.
    pub fn new(dimension: usize) -> Self {
        OperatorField {
            dimension,
            terms: Vec::new(),
        }
    }

    /// Sublevel-basis dimension 2f+1.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// The stored harmonics.
    pub fn terms(&self) -> &[FieldTerm] {
        &self.terms
    }

    /// Add `matrix · exp(i g·x)`, merging with an existing harmonic when the
    /// spatial frequencies agree within 1e-9 k_L.
    pub fn add_term(&mut self, g: [f64; 3], matrix: OperatorMatrix) -> Result<()> {
        if matrix.nrows() != self.dimension || matrix.ncols() != self.dimension {
            return Err(LatticeError::InvalidInput(format!(
                "harmonic matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                self.dimension,
                self.dimension
            )));
        }
        for term in &mut self.terms {
            let d2 = (term.g[0] - g[0]).powi(2)
                + (term.g[1] - g[1]).powi(2)
                + (term.g[2] - g[2]).powi(2);
            if d2.sqrt() < HARMONIC_MERGE_TOL {
                term.matrix = &term.matrix + &matrix;
                return Ok(());
            }
        }
        self.terms.push(FieldTerm { g, matrix });
        Ok(())
    }

    /// Add a position-independent term (harmonic g = 0).
    pub fn add_constant(&mut self, matrix: OperatorMatrix) -> Result<()> {
        self.add_term([0.0, 0.0, 0.0], matrix)
    }

    /// Evaluate Û(x) = Σ_g M_g exp(i g·x) at a point (units 1/k_L).
    pub fn eval(&self, x: [f64; 3]) -> OperatorMatrix {
        let mut out = Array2::zeros((self.dimension, self.dimension));
        for term in &self.terms {
            let phase = term.g[0] * x[0] + term.g[1] * x[1] + term.g[2] * x[2];
            let factor = Complex64::new(0.0, phase).exp();
            out = out + term.matrix.mapv(|c| c * factor);
        }
        out
    }

    /// Directional derivative ∂Û/∂s along unit vector `dir` at `x`:
    /// Σ_g i(g·dir) M_g exp(i g·x).
    pub fn derivative(&self, x: [f64; 3], dir: [f64; 3]) -> OperatorMatrix {
        let mut out = Array2::zeros((self.dimension, self.dimension));
        for term in &self.terms {
            let gdir = term.g[0] * dir[0] + term.g[1] * dir[1] + term.g[2] * dir[2];
            let phase = term.g[0] * x[0] + term.g[1] * x[1] + term.g[2] * x[2];
            let factor = Complex64::new(0.0, gdir) * Complex64::new(0.0, phase).exp();
            out = out + term.matrix.mapv(|c| c * factor);
        }
        out
    }

    /// Second directional derivative ∂²Û/∂s² along `dir` at `x`:
    /// Σ_g −(g·dir)² M_g exp(i g·x).
    pub fn second_derivative(&self, x: [f64; 3], dir: [f64; 3]) -> OperatorMatrix {
        let mut out = Array2::zeros((self.dimension, self.dimension));
        for term in &self.terms {
            let gdir = term.g[0] * dir[0] + term.g[1] * dir[1] + term.g[2] * dir[2];
            let phase = term.g[0] * x[0] + term.g[1] * x[1] + term.g[2] * x[2];
            let factor = -gdir * gdir * Complex64::new(0.0, phase).exp();
            out = out + term.matrix.mapv(|c| c * factor);
        }
        out
    }

    /// Largest elementwise violation of M_{−g} = M_g† over all harmonics.
    /// Zero (to rounding) certifies Û(x) Hermitian at every x.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for term in &self.terms {
            let neg = [-term.g[0], -term.g[1], -term.g[2]];
            let partner = self.terms.iter().find(|t| {
                let d2 = (t.g[0] - neg[0]).powi(2)
                    + (t.g[1] - neg[1]).powi(2)
                    + (t.g[2] - neg[2]).powi(2);
                d2.sqrt() < HARMONIC_MERGE_TOL
            });
            match partner {
                Some(p) => {
                    let dagger = p.matrix.t().mapv(|c| c.conj());
                    for i in 0..self.dimension {
                        for j in 0..self.dimension {
                            worst = worst.max((term.matrix[[i, j]] - dagger[[i, j]]).norm());
                        }
                    }
                }
                None => {
                    for v in term.matrix.iter() {
                        worst = worst.max(v.norm());
                    }
                }
            }
        }
        worst
    }

    /// Collapse to a 1D harmonic map for the band solver: requires every
    /// harmonic to lie along ẑ with g_z an even integer multiple of k_L
    /// (lattice period λ/2).  Keys are h = g_z / 2.
    pub fn to_1d(&self) -> Result<BTreeMap<i32, OperatorMatrix>> {
        let mut map: BTreeMap<i32, OperatorMatrix> = BTreeMap::new();
        for term in &self.terms {
            if term.g[0].abs() > HARMONIC_MERGE_TOL || term.g[1].abs() > HARMONIC_MERGE_TOL {
                return Err(LatticeError::InvalidInput(format!(
                    "harmonic ({:.3e}, {:.3e}, {:.3e}) is not along z; \
                     the band solver handles 1D lattices only",
                    term.g[0], term.g[1], term.g[2]
                )));
            }
            let half = term.g[2] / 2.0;
            let rounded = half.round();
            if (half - rounded).abs() > HARMONIC_MERGE_TOL {
                return Err(LatticeError::InvalidInput(format!(
                    "harmonic g_z = {:.6} k_L is not an even integer; \
                     the potential is not λ/2-periodic",
                    term.g[2]
                )));
            }
            let key = rounded as i32;
            match map.get_mut(&key) {
                Some(m) => *m = &*m + &term.matrix,
                None => {
                    map.insert(key, term.matrix.clone());
                }
            }
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn half(n: i32) -> HalfInt {
        HalfInt::from_doubled(n)
    }

    #[test]
    fn spin_half_matrices_are_half_paulis() {
        let f = half(1);
        let sz = f_z(f);
        assert_abs_diff_eq!(sz[[0, 0]].re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(sz[[1, 1]].re, 0.5, epsilon = 1e-15);
        let sx = f_x(f);
        assert_abs_diff_eq!(sx[[0, 1]].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(sx[[1, 0]].re, 0.5, epsilon = 1e-15);
        let sy = f_y(f);
        assert_abs_diff_eq!(sy[[0, 1]].im, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(sy[[1, 0]].im, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn angular_momentum_algebra_f4() {
        let f = HalfInt::from_int(4);
        let [fx, fy, fz] = f_vector(f);
        // [F_x, F_y] = i F_z
        let comm = fx.dot(&fy) - fy.dot(&fx);
        let expect = fz.mapv(|c| c * Complex64::new(0.0, 1.0));
        for (a, b) in comm.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
        }
        // Casimir F² = f(f+1) I
        let casimir = fx.dot(&fx) + fy.dot(&fy) + fz.dot(&fz);
        for i in 0..dim(f) {
            for j in 0..dim(f) {
                let want = if i == j { 20.0 } else { 0.0 };
                assert_abs_diff_eq!(casimir[[i, j]].re, want, epsilon = 1e-12);
                assert_abs_diff_eq!(casimir[[i, j]].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn field_eval_matches_manual_sum() {
        let mut field = OperatorField::new(2);
        let f = half(1);
        field.add_constant(identity(f).mapv(|c| c * 2.0)).unwrap();
        let m2 = f_z(f).mapv(|c| c * Complex64::new(0.0, 0.5));
        let m2dag = m2.t().mapv(|c| c.conj());
        field.add_term([0.0, 0.0, 2.0], m2.clone()).unwrap();
        field.add_term([0.0, 0.0, -2.0], m2dag).unwrap();
        assert!(field.hermiticity_defect() < 1e-15);
        let z = 0.37;
        let val = field.eval([0.0, 0.0, z]);
        // 2·I + i/2·σ_z/1 e^{2iz} + h.c. → diagonal 2 ∓ sin(2z)·…
        let expect_top = 2.0 + 2.0 * (0.5 * (-0.5)) * -(2.0 * z).sin();
        assert_abs_diff_eq!(val[[0, 0]].re, expect_top, epsilon = 1e-14);
        assert_abs_diff_eq!(val[[0, 0]].im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn merging_and_1d_collapse() {
        let mut field = OperatorField::new(1);
        let one = Array2::from_elem((1, 1), Complex64::new(1.0, 0.0));
        field.add_term([0.0, 0.0, 2.0], one.clone()).unwrap();
        field.add_term([0.0, 0.0, 2.0 + 1e-12], one.clone()).unwrap();
        assert_eq!(field.terms().len(), 1);
        let map = field.to_1d().unwrap();
        assert_eq!(map.len(), 1);
        assert_abs_diff_eq!(map[&1][[0, 0]].re, 2.0, epsilon = 1e-12);

        let mut bad = OperatorField::new(1);
        bad.add_term([0.5, 0.0, 0.0], one.clone()).unwrap();
        assert!(bad.to_1d().is_err());

        let mut odd = OperatorField::new(1);
        odd.add_term([0.0, 0.0, 1.0], one).unwrap();
        assert!(odd.to_1d().is_err());
    }
}

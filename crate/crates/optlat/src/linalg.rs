//! Dense linear algebra for complex Hermitian problems, self-contained.
//!
//! The band-structure and time-evolution code needs three things: a full
//! Hermitian eigensolver (plane-wave Hamiltonians up to ~10³ dimensions),
//! small dense LU solves, and a block-tridiagonal solver for implicit time
//! stepping.  None of this justifies a BLAS/LAPACK dependency, so the
//! classical algorithms are implemented here directly:
//!
//! * Householder reduction of a Hermitian matrix to real symmetric
//!   tridiagonal form (unitary similarity, with a diagonal phase scrub to
//!   make the subdiagonal real),
//! * implicit-shift QL iteration on the tridiagonal matrix, rotating the
//!   accumulated transformation when eigenvectors are requested,
//! * partial-pivoting LU for the small spin-block systems,
//! * block Thomas elimination for block-tridiagonal systems.

use crate::error::{LatticeError, Result};
use ndarray::{Array1, Array2};
use num_complex::Complex64;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Eigenvalues of a complex Hermitian matrix, ascending.
pub fn eigenvalues(a: &Array2<Complex64>) -> Result<Array1<f64>> {
    let (d, _) = eig_hermitian(a, false)?;
    Ok(d)
}

/// Eigenvalues (ascending) and an orthonormal set of eigenvectors of a
/// complex Hermitian matrix; eigenvector j is the column `v.column(j)`.
pub fn eigh(a: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let (d, v) = eig_hermitian(a, true)?;
    Ok((d, v.expect("vectors requested")))
}

fn eig_hermitian(
    a: &Array2<Complex64>,
    want_vectors: bool,
) -> Result<(Array1<f64>, Option<Array2<Complex64>>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LatticeError::InvalidInput(format!(
            "eigensolver needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok((Array1::zeros(0), Some(Array2::zeros((0, 0)))));
    }

    // Tolerate roundoff-level asymmetry but reject structural mistakes.
    let mut scale: f64 = 0.0;
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(a[[i, j]].norm());
            asym = asym.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    if scale > 0.0 && asym > 1e-8 * scale.max(1.0) {
        return Err(LatticeError::InvalidInput(format!(
            "matrix is not Hermitian: max |A - A^H| = {asym:.3e} at scale {scale:.3e}"
        )));
    }

    // Work on the Hermitized copy so tiny asymmetries cannot bias results.
    let mut w = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            w[[i, j]] = 0.5 * (a[[i, j]] + a[[j, i]].conj());
        }
    }

    // --- Householder reduction to Hermitian tridiagonal form. ---
    // Reflectors H = I - tau v v^H are accumulated afterwards; tau is real
    // because the target subdiagonal element carries the phase of x_0.
    let mut reflectors: Vec<(usize, f64, Vec<Complex64>)> = Vec::new();
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut x = vec![C_ZERO; len];
        for i in 0..len {
            x[i] = w[[k + 1 + i, k]];
        }
        let xnorm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { C_ONE } else { x[0] / x[0].norm() };
        let beta = -phase * xnorm;
        let mut v = x;
        v[0] -= beta;
        let vnorm_sq: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm_sq;

        // p = tau * W22 * v on the trailing block.
        let mut p = vec![C_ZERO; len];
        for i in 0..len {
            let mut acc = C_ZERO;
            for j in 0..len {
                acc += w[[k + 1 + i, k + 1 + j]] * v[j];
            }
            p[i] = acc * tau;
        }
        let vhp: Complex64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let kappa = 0.5 * tau * vhp;
        let q: Vec<Complex64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();
        // W22 <- W22 - q v^H - v q^H keeps the trailing block Hermitian.
        for i in 0..len {
            for j in 0..len {
                let upd = q[i] * v[j].conj() + v[i] * q[j].conj();
                w[[k + 1 + i, k + 1 + j]] -= upd;
            }
        }
        w[[k + 1, k]] = beta;
        w[[k, k + 1]] = beta.conj();
        for i in (k + 2)..n {
            w[[i, k]] = C_ZERO;
            w[[k, i]] = C_ZERO;
        }
        reflectors.push((k, tau, v));
    }

    let mut d: Vec<f64> = (0..n).map(|i| w[[i, i]].re).collect();
    let sub: Vec<Complex64> = (0..n - 1).map(|i| w[[i + 1, i]]).collect();

    // Diagonal phase scrub: S^H T S has a real non-negative subdiagonal.
    let mut s = vec![C_ONE; n];
    for k in 0..n - 1 {
        let m = sub[k].norm();
        s[k + 1] = if m == 0.0 { s[k] } else { sub[k] * s[k] / m };
    }
    let mut e: Vec<f64> = sub.iter().map(|c| c.norm()).collect();
    e.push(0.0);

    let mut z = if want_vectors {
        // Z = (H_1 H_2 ... ) * diag(s): columns evolve into eigenvectors.
        let mut q = Array2::<Complex64>::eye(n);
        for (k, tau, v) in &reflectors {
            let base = k + 1;
            let len = v.len();
            for row in 0..n {
                let mut acc = C_ZERO;
                for j in 0..len {
                    acc += q[[row, base + j]] * v[j];
                }
                let acc = acc * *tau;
                for j in 0..len {
                    q[[row, base + j]] -= acc * v[j].conj();
                }
            }
        }
        for col in 0..n {
            for row in 0..n {
                q[[row, col]] *= s[col];
            }
        }
        Some(q)
    } else {
        None
    };

    ql_implicit_shift(&mut d, &mut e, z.as_mut())?;

    // Ascending sort, permuting vectors alongside.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("non-finite eigenvalue"));
    let dsorted = Array1::from_iter(order.iter().map(|&i| d[i]));
    let zsorted = z.map(|zm| {
        let mut out = Array2::<Complex64>::zeros((n, n));
        for (newc, &oldc) in order.iter().enumerate() {
            for row in 0..n {
                out[[row, newc]] = zm[[row, oldc]];
            }
        }
        out
    });
    Ok((dsorted, zsorted))
}

/// Implicit-shift QL sweeps on a real symmetric tridiagonal matrix,
/// following the classical EISPACK/Jama `tql2` scheme.  `e` holds the
/// subdiagonal in `e[0..n-1]` with `e[n-1] = 0`.  When `z` is given, the
/// same plane rotations are applied to its (complex) columns.
fn ql_implicit_shift(
    d: &mut [f64],
    e: &mut [f64],
    mut z: Option<&mut Array2<Complex64>>,
) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m >= n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(LatticeError::Numeric(format!(
                        "QL iteration failed to converge at row {l} of {n} after 60 sweeps \
                         (residual subdiagonal {:.3e}, threshold {:.3e})",
                        e[l].abs(),
                        eps * tst1
                    )));
                }
                // Form the implicit shift from the 2x2 corner.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for i in (l + 2)..n {
                    d[i] -= h;
                }
                f += h;
                // Chase the bulge from m back down to l.
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let gi = c * e[i];
                    let hi = c * p;
                    r = p.hypot(e[i]);
                    if r == 0.0 {
                        return Err(LatticeError::Numeric(
                            "QL rotation collapsed to zero magnitude".into(),
                        ));
                    }
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * gi;
                    d[i + 1] = hi + s * (c * gi + s * d[i]);
                    if let Some(zm) = z.as_deref_mut() {
                        let rows = zm.nrows();
                        for k in 0..rows {
                            let hk = zm[[k, i + 1]];
                            zm[[k, i + 1]] = zm[[k, i]] * s + hk * c;
                            zm[[k, i]] = zm[[k, i]] * c - hk * s;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Dense LU factorization with partial pivoting for small complex systems
/// (spin blocks, typically 9x9).
pub struct Lu {
    lu: Array2<Complex64>,
    piv: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Array2<Complex64>) -> Result<Lu> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LatticeError::InvalidInput("LU needs a square matrix".into()));
        }
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pmax = col;
            let mut vmax = lu[[col, col]].norm();
            for row in (col + 1)..n {
                let v = lu[[row, col]].norm();
                if v > vmax {
                    vmax = v;
                    pmax = row;
                }
            }
            if vmax == 0.0 {
                return Err(LatticeError::Numeric(format!(
                    "singular matrix in LU factorization at column {col}"
                )));
            }
            if pmax != col {
                for j in 0..n {
                    let tmp = lu[[col, j]];
                    lu[[col, j]] = lu[[pmax, j]];
                    lu[[pmax, j]] = tmp;
                }
                piv.swap(col, pmax);
            }
            let pivot = lu[[col, col]];
            for row in (col + 1)..n {
                let factor = lu[[row, col]] / pivot;
                lu[[row, col]] = factor;
                for j in (col + 1)..n {
                    let sub = factor * lu[[col, j]];
                    lu[[row, j]] -= sub;
                }
            }
        }
        Ok(Lu { lu, piv })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solve A x = b for one right-hand side.
    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[[i, j]] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[[i, j]] * x[j];
            }
            x[i] = acc / self.lu[[i, i]];
        }
        x
    }

    /// Solve A X = B for a matrix right-hand side.
    pub fn solve_mat(&self, b: &Array2<Complex64>) -> Array2<Complex64> {
        let n = self.dim();
        assert_eq!(b.nrows(), n, "rhs rows mismatch");
        let cols = b.ncols();
        let mut out = Array2::<Complex64>::zeros((n, cols));
        let mut col = vec![C_ZERO; n];
        for c in 0..cols {
            for r in 0..n {
                col[r] = b[[r, c]];
            }
            let x = self.solve_vec(&col);
            for r in 0..n {
                out[[r, c]] = x[r];
            }
        }
        out
    }
}

/// Solve a block-tridiagonal system by block Thomas elimination.
///
/// The matrix has `nb` row blocks of size `s`: `diag[i]` on the diagonal,
/// `lower[i]` coupling block row i+1 to column block i, `upper[i]` coupling
/// block row i to column block i+1.  The right-hand side is a flat vector of
/// length `nb * s`.
pub fn block_tridiag_solve(
    diag: &[Array2<Complex64>],
    lower: &[Array2<Complex64>],
    upper: &[Array2<Complex64>],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let nb = diag.len();
    if nb == 0 {
        return Ok(Vec::new());
    }
    let s = diag[0].nrows();
    if lower.len() != nb - 1 || upper.len() != nb - 1 {
        return Err(LatticeError::InvalidInput(
            "block tridiagonal solver: off-diagonal block count must be nb - 1".into(),
        ));
    }
    if rhs.len() != nb * s {
        return Err(LatticeError::InvalidInput(format!(
            "block tridiagonal solver: rhs length {} does not match {} blocks of size {}",
            rhs.len(),
            nb,
            s
        )));
    }

    // Forward elimination: D_i = diag_i - L_{i-1} D_{i-1}^{-1} U_{i-1}.
    let mut factors: Vec<Lu> = Vec::with_capacity(nb);
    let mut carry: Vec<Array2<Complex64>> = Vec::with_capacity(nb.saturating_sub(1));
    let mut y: Vec<Complex64> = rhs.to_vec();
    factors.push(Lu::factor(&diag[0])?);
    for i in 1..nb {
        let prev = &factors[i - 1];
        // G = D_{i-1}^{-1} U_{i-1}, cached for back substitution.
        let g = prev.solve_mat(&upper[i - 1]);
        let mut d = diag[i].clone();
        let l = &lower[i - 1];
        for r in 0..s {
            for c in 0..s {
                let mut acc = C_ZERO;
                for k in 0..s {
                    acc += l[[r, k]] * g[[k, c]];
                }
                d[[r, c]] -= acc;
            }
        }
        // y_i -= L_{i-1} D_{i-1}^{-1} y_{i-1}
        let yprev = prev.solve_vec(&y[(i - 1) * s..i * s].to_vec());
        for r in 0..s {
            let mut acc = C_ZERO;
            for k in 0..s {
                acc += l[[r, k]] * yprev[k];
            }
            y[i * s + r] -= acc;
        }
        carry.push(g);
        factors.push(Lu::factor(&d)?);
    }

    // Back substitution.
    let mut x = vec![C_ZERO; nb * s];
    let xlast = factors[nb - 1].solve_vec(&y[(nb - 1) * s..nb * s].to_vec());
    x[(nb - 1) * s..nb * s].copy_from_slice(&xlast);
    for i in (0..nb - 1).rev() {
        let g = &carry[i];
        let yi = factors[i].solve_vec(&y[i * s..(i + 1) * s].to_vec());
        for r in 0..s {
            let mut acc = yi[r];
            for k in 0..s {
                acc -= g[[r, k]] * x[(i + 1) * s + k];
            }
            x[i * s + r] = acc;
        }
    }
    Ok(x)
}

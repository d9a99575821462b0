//! Independent oracles shared by the integration-test targets.
//!
//! Everything here is deliberately implemented by a different route than the
//! library: coupling coefficients through the closed Racah summation
//! formulas in floating point (the library uses exact rational
//! square-root arithmetic), and scalar-lattice band energies through Sturm
//! bisection on analytically derived tridiagonal sectors (the library uses
//! a dense complex Hermitian eigensolver on the full plane-wave matrix).

/// Exact factorial as f64; n! is exactly representable for n ≤ 22, which
/// covers every argument arising from angular momenta j ≤ 5.
pub fn factorial(n: i32) -> f64 {
    assert!((0..=22).contains(&n), "factorial argument {n} out of range");
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Factorial of a doubled half-integer argument, which must be an even
/// non-negative doubled value (i.e. an actual non-negative integer).
fn fact2(d: i32) -> f64 {
    assert!(d >= 0 && d % 2 == 0, "non-integer factorial argument {d}/2");
    factorial(d / 2)
}

/// Triangle coefficient Δ(a,b,c) (squared form) from doubled arguments;
/// returns `None` when the triad violates the triangle or parity rules.
fn triangle_factor(da: i32, db: i32, dc: i32) -> Option<f64> {
    let s1 = da + db - dc;
    let s2 = da - db + dc;
    let s3 = -da + db + dc;
    if s1 < 0 || s2 < 0 || s3 < 0 || (da + db + dc) % 2 != 0 {
        return None;
    }
    Some(fact2(s1) * fact2(s2) * fact2(s3) / fact2(da + db + dc + 2))
}

/// Clebsch-Gordan coefficient ⟨j1 m1, j2 m2 | j3 m3⟩ from the Racah
/// summation formula, all arguments doubled.
pub fn cg_oracle(dj1: i32, dm1: i32, dj2: i32, dm2: i32, dj3: i32, dm3: i32) -> f64 {
    if dm1 + dm2 != dm3
        || dm1.abs() > dj1
        || dm2.abs() > dj2
        || dm3.abs() > dj3
        || (dj1 - dm1) % 2 != 0
        || (dj2 - dm2) % 2 != 0
        || (dj3 - dm3) % 2 != 0
    {
        return 0.0;
    }
    let tri = match triangle_factor(dj1, dj2, dj3) {
        Some(t) => t,
        None => return 0.0,
    };
    let norm = (dj3 + 1) as f64
        * tri
        * fact2(dj3 + dm3)
        * fact2(dj3 - dm3)
        * fact2(dj1 - dm1)
        * fact2(dj1 + dm1)
        * fact2(dj2 - dm2)
        * fact2(dj2 + dm2);

    // Summation index k runs over every value keeping all factorial
    // arguments non-negative; arguments below are doubled, k itself integer.
    let a1 = dj1 + dj2 - dj3; // 2(j1+j2−j3)
    let a2 = dj1 - dm1; // 2(j1−m1)
    let a3 = dj2 + dm2; // 2(j2+m2)
    let b1 = dj3 - dj2 + dm1; // 2(j3−j2+m1), may be negative
    let b2 = dj3 - dj1 - dm2; // 2(j3−j1−m2), may be negative
    let k_min = (0).max(-b1 / 2).max(-b2 / 2);
    let k_max = (a1 / 2).min(a2 / 2).min(a3 / 2);
    let mut total = 0.0;
    for k in k_min..=k_max {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let denom = factorial(k)
            * fact2(a1 - 2 * k)
            * fact2(a2 - 2 * k)
            * fact2(a3 - 2 * k)
            * fact2(b1 + 2 * k)
            * fact2(b2 + 2 * k);
        total += sign / denom;
    }
    norm.sqrt() * total
}

/// Wigner 6-j symbol {a b c; d e f} from the Racah single-sum formula, all
/// arguments doubled.
pub fn sixj_oracle(da: i32, db: i32, dc: i32, dd: i32, de: i32, df: i32) -> f64 {
    let t1 = triangle_factor(da, db, dc);
    let t2 = triangle_factor(da, de, df);
    let t3 = triangle_factor(dd, db, df);
    let t4 = triangle_factor(dd, de, dc);
    let (t1, t2, t3, t4) = match (t1, t2, t3, t4) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => return 0.0,
    };
    let prefactor = (t1 * t2 * t3 * t4).sqrt();

    let s_abc = (da + db + dc) / 2;
    let s_aef = (da + de + df) / 2;
    let s_dbf = (dd + db + df) / 2;
    let s_dec = (dd + de + dc) / 2;
    let q_abde = (da + db + dd + de) / 2;
    let q_bcef = (db + dc + de + df) / 2;
    let q_acdf = (da + dc + dd + df) / 2;
    let k_min = s_abc.max(s_aef).max(s_dbf).max(s_dec);
    let k_max = q_abde.min(q_bcef).min(q_acdf);
    let mut total = 0.0;
    for k in k_min..=k_max {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = factorial(k + 1)
            / (factorial(k - s_abc)
                * factorial(k - s_aef)
                * factorial(k - s_dbf)
                * factorial(k - s_dec)
                * factorial(q_abde - k)
                * factorial(q_bcef - k)
                * factorial(q_acdf - k));
        total += sign * term;
    }
    prefactor * total
}

/// Lowest `count` eigenvalues of a real symmetric tridiagonal matrix
/// (diagonal `diag`, off-diagonal `off`) by Sturm-sequence bisection.
pub fn sturm_eigenvalues(diag: &[f64], off: &[f64], count: usize) -> Vec<f64> {
    let n = diag.len();
    assert_eq!(off.len(), n - 1, "off-diagonal length");
    assert!(count <= n);

    // Number of eigenvalues strictly below lambda.
    let count_below = |lambda: f64| -> usize {
        let mut negatives = 0;
        let mut t = diag[0] - lambda;
        if t < 0.0 {
            negatives += 1;
        }
        for i in 1..n {
            let guard = if t.abs() < 1e-300 { 1e-300 } else { t };
            t = (diag[i] - lambda) - off[i - 1] * off[i - 1] / guard;
            if t < 0.0 {
                negatives += 1;
            }
        }
        negatives
    };

    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i < n - 1 {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }

    (0..count)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if count_below(mid) <= k {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a < 1e-13 * (1.0 + mid.abs()) {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Bloch spectrum of the scalar cosine lattice U(z) = −(U_p/2)·cos(2 k_L z)
/// at q = 0, from the two analytically derived parity sectors (constant +
/// cosine basis, sine basis), merged ascending.
pub fn cosine_q0_spectrum(up: f64, count: usize) -> Vec<f64> {
    let n = 64;
    // Even sector: {1/√π, √(2/π)·cos 2rz}.
    let mut diag: Vec<f64> = (0..n).map(|r| (4 * r * r) as f64).collect();
    let mut off: Vec<f64> = (0..n - 1).map(|_| -up / 4.0).collect();
    off[0] = -up * 2.0_f64.sqrt() / 4.0;
    let even = sturm_eigenvalues(&diag, &off, count.min(n));
    // Odd sector: {√(2/π)·sin 2rz}, r ≥ 1.
    diag = (1..=n).map(|r| (4 * r * r) as f64).collect();
    let off: Vec<f64> = (0..n - 1).map(|_| -up / 4.0).collect();
    let odd = sturm_eigenvalues(&diag, &off, count.min(n));
    merge_ascending(&even, &odd, count)
}

/// Bloch spectrum of the same lattice at the zone edge q = ±1 k_L, from the
/// anti-periodic cosine and sine sectors.
pub fn cosine_edge_spectrum(up: f64, count: usize) -> Vec<f64> {
    let n = 64;
    let base: Vec<f64> = (0..n).map(|r| ((2 * r + 1) * (2 * r + 1)) as f64).collect();
    let off: Vec<f64> = (0..n - 1).map(|_| -up / 4.0).collect();

    let mut diag = base.clone();
    diag[0] += -up / 4.0; // ⟨cos z|U|cos z⟩
    let cos_sector = sturm_eigenvalues(&diag, &off, count.min(n));

    let mut diag = base;
    diag[0] += up / 4.0; // ⟨sin z|U|sin z⟩
    let sin_sector = sturm_eigenvalues(&diag, &off, count.min(n));
    merge_ascending(&cos_sector, &sin_sector, count)
}

fn merge_ascending(a: &[f64], b: &[f64], count: usize) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    all.truncate(count);
    all
}

//! Cross-module structural invariants checked on randomized inputs:
//! orthogonality and completeness of the coupling coefficients, the
//! permutation symmetries of the recoupling symbols, normalization of the
//! hyperfine branching weights, and Hermiticity/periodicity/Zeeman-linearity
//! of assembled lattice potentials.

use optlat::angular::{branching_weight, clebsch_gordan, wigner_6j};
use optlat::atom::AtomSpec;
use optlat::fields::lin_angle_lin;
use optlat::halfint::HalfInt;
use optlat::polarizability::{potential_operator, DetuningSpec};
use proptest::prelude::*;

fn h(doubled: i32) -> HalfInt {
    HalfInt::from_doubled(doubled)
}

/// Resolve an arbitrary index into a doubled total momentum from the triad
/// range |j1 − j2| ..= j1 + j2 (step 1 in j, step 2 doubled).
fn triad_member(dj1: i32, dj2: i32, index: usize) -> i32 {
    let lo = (dj1 - dj2).abs();
    let hi = dj1 + dj2;
    let count = ((hi - lo) / 2 + 1) as usize;
    lo + 2 * (index % count) as i32
}

/// Resolve an arbitrary index into a doubled projection −j ..= j.
fn projection_member(dj: i32, index: usize) -> i32 {
    let count = (dj + 1) as usize;
    -dj + 2 * (index % count) as i32
}

proptest! {
    /// Rows of the coupling matrix are orthonormal: summing the product of
    /// coefficients into two coupled momenta j3, j3' over the uncoupled
    /// projections gives δ_{j3 j3'}.
    #[test]
    fn coupling_rows_are_orthonormal(
        dj1 in 0i32..=8,
        dj2 in 0i32..=8,
        pick_a in 0usize..64,
        pick_b in 0usize..64,
        pick_m in 0usize..64,
    ) {
        let dj3 = triad_member(dj1, dj2, pick_a);
        let dj3p = triad_member(dj1, dj2, pick_b);
        let dm3 = projection_member(dj3.min(dj3p), pick_m);

        let mut sum = 0.0;
        let mut dm1 = -dj1;
        while dm1 <= dj1 {
            let dm2 = dm3 - dm1;
            if dm2.abs() <= dj2 {
                sum += clebsch_gordan(h(dj1), h(dm1), h(dj2), h(dm2), h(dj3), h(dm3))
                    * clebsch_gordan(h(dj1), h(dm1), h(dj2), h(dm2), h(dj3p), h(dm3));
            }
            dm1 += 2;
        }
        let expected = if dj3 == dj3p { 1.0 } else { 0.0 };
        prop_assert!(
            (sum - expected).abs() <= 1e-12,
            "⟨j3||j3'⟩ = {sum}, expected {expected} (dj1={dj1} dj2={dj2} dj3={dj3} dj3'={dj3p} dm3={dm3})"
        );
    }

    /// Columns are normalized too: a fixed uncoupled pair (m1, m2)
    /// distributes unit weight over the accessible coupled momenta.
    #[test]
    fn coupling_columns_are_normalized(
        dj1 in 0i32..=8,
        dj2 in 0i32..=8,
        pick_m1 in 0usize..64,
        pick_m2 in 0usize..64,
    ) {
        let dm1 = projection_member(dj1, pick_m1);
        let dm2 = projection_member(dj2, pick_m2);
        let dm3 = dm1 + dm2;

        let mut sum = 0.0;
        let mut dj3 = (dj1 - dj2).abs();
        while dj3 <= dj1 + dj2 {
            if dm3.abs() <= dj3 {
                let c = clebsch_gordan(h(dj1), h(dm1), h(dj2), h(dm2), h(dj3), h(dm3));
                sum += c * c;
            }
            dj3 += 2;
        }
        prop_assert!(
            (sum - 1.0).abs() <= 1e-12,
            "Σ_j3 |⟨j1 m1 j2 m2|j3 m3⟩|² = {sum} (dj1={dj1} dm1={dm1} dj2={dj2} dm2={dm2})"
        );
    }

    /// The recoupling symbol is invariant under any permutation of its
    /// columns and under exchanging the upper and lower entries of any two
    /// columns.
    #[test]
    fn recoupling_symbol_symmetries(
        da in 0i32..=8,
        db in 0i32..=8,
        de in 0i32..=8,
        pick_c in 0usize..64,
        pick_f in 0usize..64,
    ) {
        let dc = triad_member(da, db, pick_c);
        let df = triad_member(da, de, pick_f);

        let base = wigner_6j(h(da), h(db), h(dc), h(de), h(df), h(dc));
        // Reuse dc twice so at least the reference triads close; the variants
        // below must all agree with `base`, including when it is zero.
        let variants = [
            wigner_6j(h(db), h(da), h(dc), h(df), h(de), h(dc)), // swap columns 1, 2
            wigner_6j(h(dc), h(db), h(da), h(dc), h(df), h(de)), // swap columns 1, 3
            wigner_6j(h(da), h(dc), h(db), h(de), h(dc), h(df)), // swap columns 2, 3
            wigner_6j(h(de), h(df), h(dc), h(da), h(db), h(dc)), // flip columns 1, 2
            wigner_6j(h(de), h(db), h(dc), h(da), h(df), h(dc)), // flip columns 1, 3
            wigner_6j(h(da), h(df), h(dc), h(de), h(db), h(dc)), // flip columns 2, 3
        ];
        for (i, v) in variants.iter().enumerate() {
            prop_assert!(
                (v - base).abs() <= 1e-13,
                "variant {i} = {v} differs from {base} (da={da} db={db} dc={dc} de={de} df={df})"
            );
        }
    }

    /// Anchor against the closed form {a b c; 0 c b} = (−1)^{a+b+c} /
    /// √((2b+1)(2c+1)) whenever (a, b, c) is a closed triad.
    #[test]
    fn recoupling_symbol_with_a_zero_entry(
        da in 0i32..=8,
        db in 0i32..=8,
        pick_c in 0usize..64,
    ) {
        let dc = triad_member(da, db, pick_c);
        let value = wigner_6j(h(da), h(db), h(dc), h(0), h(dc), h(db));
        let phase = if ((da + db + dc) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let closed = phase / (f64::from(db + 1) * f64::from(dc + 1)).sqrt();
        prop_assert!(
            (value - closed).abs() <= 1e-14,
            "{value} vs closed form {closed} (da={da} db={db} dc={dc})"
        );
    }

    /// Decay weights out of any excited hyperfine level sum to one over the
    /// ground manifolds, for arbitrary nuclear spin and a dipole-connected
    /// pair of electronic momenta.
    #[test]
    fn branching_weights_are_normalized(
        di in 0i32..=7,
        djg in prop_oneof![Just(1i32), Just(3i32)],
        pick_fe in 0usize..64,
    ) {
        let dje = djg + 2;
        let dfe = triad_member(dje, di, pick_fe);

        let mut sum = 0.0;
        let mut dfg = (djg - di).abs();
        while dfg <= djg + di {
            sum += branching_weight(h(dfe), h(dfg), h(di), h(djg), h(dje));
            dfg += 2;
        }
        prop_assert!(
            (sum - 1.0).abs() <= 1e-12,
            "Σ_F w(F' → F) = {sum} (di={di} djg={djg} dfe={dfe})"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every assembled lattice potential is Hermitian at every point and
    /// repeats with the λ/2 lattice period, for arbitrary polarization
    /// angle, depth, and red detuning, in both level structures.
    #[test]
    fn potentials_are_hermitian_and_lattice_periodic(
        theta in 0.15f64..3.0,
        u1 in 5.0f64..400.0,
        delta in -5.0e4f64..-500.0,
        z in 0.0f64..3.0,
        cesium in any::<bool>(),
    ) {
        let (atom, f) = if cesium {
            (AtomSpec::cesium(), HalfInt::from_int(4))
        } else {
            (AtomSpec::spin_half(), HalfInt::from_doubled(1))
        };
        let geometry = lin_angle_lin(theta).unwrap();
        let det = DetuningSpec::finite(delta).unwrap();
        let field = potential_operator(&geometry, &atom, f, u1, &det).unwrap();

        prop_assert!(
            field.hermiticity_defect() <= 1e-12 * (1.0 + u1),
            "hermiticity defect {}",
            field.hermiticity_defect()
        );

        let here = field.eval([0.0, 0.0, z]);
        let shifted = field.eval([0.0, 0.0, z + std::f64::consts::PI]);
        let mut worst = 0.0f64;
        for (a, b) in here.iter().zip(shifted.iter()) {
            worst = worst.max((a - b).norm());
        }
        prop_assert!(worst <= 1e-10 * (1.0 + u1), "period defect {worst} at z={z}");
    }

    /// The external-field term enters linearly: the potentials with bias
    /// +b and −b average to the unbiased one, elementwise, at any point.
    #[test]
    fn external_field_enters_linearly(
        theta in 0.15f64..3.0,
        u1 in 5.0f64..400.0,
        b in prop::array::uniform3(-3.0f64..3.0),
        z in 0.0f64..3.0,
    ) {
        let atom = AtomSpec::cesium();
        let f = HalfInt::from_int(4);
        let det = DetuningSpec::finite(-2000.0).unwrap();

        let minus_b = [-b[0], -b[1], -b[2]];
        let plain = potential_operator(&lin_angle_lin(theta).unwrap(), &atom, f, u1, &det).unwrap();
        let plus =
            potential_operator(&lin_angle_lin(theta).unwrap().with_external_b(b), &atom, f, u1, &det)
                .unwrap();
        let minus =
            potential_operator(&lin_angle_lin(theta).unwrap().with_external_b(minus_b), &atom, f, u1, &det)
                .unwrap();

        let x = [0.0, 0.0, z];
        let (p0, pp, pm) = (plain.eval(x), plus.eval(x), minus.eval(x));
        let mut worst = 0.0f64;
        for i in 0..p0.nrows() {
            for j in 0..p0.ncols() {
                worst = worst.max((pp[[i, j]] + pm[[i, j]] - 2.0 * p0[[i, j]]).norm());
            }
        }
        prop_assert!(worst <= 1e-11 * (1.0 + u1), "bias nonlinearity {worst}");
    }
}

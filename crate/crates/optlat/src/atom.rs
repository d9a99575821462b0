//! Atomic structure data for the alkali species driven by the lattice.
//!
//! Everything downstream works in recoil units: energies in units of the
//! photon recoil energy of the lattice light, lengths in inverse lattice
//! wavenumbers, ħ = 1.  The atom is summarized by the electronic angular
//! momenta of the ground and excited fine-structure levels, the nuclear
//! spin, the natural linewidth, and the excited-state hyperfine interval.
//! Detunings are always quoted in units of the linewidth, so only ratios of
//! detunings enter the light-shift tensor; the absolute linewidth is carried
//! as metadata for rate conversions.

use crate::angular::branching_weight;
use crate::error::{LatticeError, Result};
use crate::halfint::{triangle, HalfInt};

/// Electronic/nuclear structure and line data of one alkali D transition.
#[derive(Clone, Debug)]
pub struct AtomSpec {
    /// Ground-state electronic angular momentum J.
    pub j_ground: HalfInt,
    /// Excited-state electronic angular momentum J'.
    pub j_excited: HalfInt,
    /// Nuclear spin I.
    pub i_nuclear: HalfInt,
    /// Natural linewidth of the transition in recoil units.
    pub linewidth: f64,
    /// Spacing parameter of the excited hyperfine ladder, in linewidths:
    /// adjacent excited manifolds F', F'-1 are split by `interval` · F'.
    pub interval: f64,
    /// Magnetic-moment scale: Larmor energy per gauss, in recoil units.
    /// Pure conversion metadata; the physics below is expressed directly in
    /// Larmor energies.
    pub larmor_per_gauss: f64,
}

impl AtomSpec {
    /// Cesium D2 data (J = 1/2 → J' = 3/2, I = 7/2).
    ///
    /// Linewidth and excited hyperfine spacing rounded to the idealized
    /// values used throughout the design studies: the interval between
    /// adjacent excited manifolds is 10 Γ per unit of F', and the magnetic
    /// moment is one Bohr magneton per unit spin projection.
    pub fn cesium() -> Self {
        AtomSpec {
            j_ground: HalfInt::from_doubled(1),
            j_excited: HalfInt::from_doubled(3),
            i_nuclear: HalfInt::from_doubled(7),
            linewidth: 2527.5,
            interval: 10.0,
            larmor_per_gauss: 680.0,
        }
    }

    /// Fictitious spin-1/2 alkali (no nuclear spin): a single ground
    /// manifold F = 1/2 below a single excited manifold F' = 3/2.  Used for
    /// the reduced two-level lattice models and for identity checks where
    /// hyperfine structure only obscures the algebra.
    pub fn spin_half() -> Self {
        AtomSpec {
            j_ground: HalfInt::from_doubled(1),
            j_excited: HalfInt::from_doubled(3),
            i_nuclear: HalfInt::ZERO,
            linewidth: 2527.5,
            interval: 0.0,
            larmor_per_gauss: 680.0,
        }
    }

    /// Ground hyperfine manifolds F, ascending.
    pub fn ground_manifolds(&self) -> Vec<HalfInt> {
        couple_range(self.j_ground, self.i_nuclear)
    }

    /// Excited hyperfine manifolds F', ascending.
    pub fn excited_manifolds(&self) -> Vec<HalfInt> {
        couple_range(self.j_excited, self.i_nuclear)
    }

    /// Largest ground F.
    pub fn f_max(&self) -> HalfInt {
        self.j_ground + self.i_nuclear
    }

    /// Largest excited F'.
    pub fn f_excited_max(&self) -> HalfInt {
        self.j_excited + self.i_nuclear
    }

    /// How far the excited manifold `f_excited` sits below the top of the
    /// excited ladder, in linewidths.  Adjacent manifolds F', F'-1 are
    /// split by `interval`·F', so the distance from the top manifold is
    /// `interval` · Σ_{k=F'+1..F'max} k.
    pub fn splitting_from_top(&self, f_excited: HalfInt) -> f64 {
        let top = self.f_excited_max();
        let mut s = 0.0;
        let mut k = f_excited + HalfInt::from_int(1);
        while k <= top {
            s += k.as_f64();
            k = k + HalfInt::from_int(1);
        }
        self.interval * s
    }

    /// Detuning of the laser from the F → F' line, in linewidths, given the
    /// detuning from the stretched (F_max → F'_max) line.  The ground
    /// hyperfine splitting is far smaller than the optical detunings of
    /// interest and is not modeled, so all ground manifolds share the same
    /// reference.
    pub fn detuning(&self, f_excited: HalfInt, delta_stretch: f64) -> f64 {
        delta_stretch + self.splitting_from_top(f_excited)
    }

    /// Ratio of the stretched-line detuning to the F → F' detuning: the
    /// weight with which that line enters the light-shift tensor relative
    /// to its far-detuned value.  Errors if the detuning lands on the line.
    pub fn detuning_ratio(&self, f_excited: HalfInt, delta_stretch: f64) -> Result<f64> {
        let d = self.detuning(f_excited, delta_stretch);
        if d.abs() < 1.0 {
            return Err(LatticeError::Pole(format!(
                "laser within one linewidth of the F' = {} line (detuning {:.3} linewidths)",
                f_excited, d
            )));
        }
        Ok(delta_stretch / d)
    }

    /// Relative line strength of F ↔ F' (unit sum over ground manifolds for
    /// each excited manifold).
    pub fn line_strength(&self, f_excited: HalfInt, f_ground: HalfInt) -> f64 {
        if !triangle(f_ground, HalfInt::from_int(1), f_excited) {
            return 0.0;
        }
        branching_weight(f_excited, f_ground, self.i_nuclear, self.j_ground, self.j_excited)
    }

    /// Validate structural integrity: triangle rules and sign conventions.
    pub fn validate(&self) -> Result<()> {
        if self.linewidth <= 0.0 {
            return Err(LatticeError::InvalidInput("linewidth must be positive".into()));
        }
        if self.interval < 0.0 {
            return Err(LatticeError::InvalidInput(
                "hyperfine interval must be non-negative".into(),
            ));
        }
        if !triangle(self.j_ground, HalfInt::from_int(1), self.j_excited) {
            return Err(LatticeError::InvalidInput(format!(
                "J = {} to J' = {} is not a dipole transition",
                self.j_ground, self.j_excited
            )));
        }
        Ok(())
    }
}

fn couple_range(a: HalfInt, b: HalfInt) -> Vec<HalfInt> {
    let lo = (a - b).abs();
    let hi = a + b;
    let mut out = Vec::new();
    let mut f = lo;
    while f <= hi {
        out.push(f);
        f = f + HalfInt::from_int(1);
    }
    out
}

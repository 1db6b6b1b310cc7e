//! Unit system and uniform grids.
//!
//! Lengths are in nm, times in ps, energies in meV and wavenumbers in nm⁻¹.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Reduced Planck constant in meV·ps.
pub const HBAR_MEV_PS: f64 = 0.658_211_956_9;

const HBAR_SI: f64 = 1.054_571_817e-34;
const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
const MEV_PER_JOULE: f64 = 1e3 / ELEMENTARY_CHARGE;
const NM2_PER_M2: f64 = 1e18;

/// Default effective mass in kg.
pub const DEFAULT_MASS_KG: f64 = 2.91e-31;

/// ħ and the kinetic prefactor ħ²/2m.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct UnitSystem {
    pub hbar: f64,
    /// ħ²/2m in meV·nm².
    pub kinetic_coeff: f64,
}

impl UnitSystem {
    pub fn from_mass(mass_kg: f64) -> Result<Self> {
        Ok(Self {
            hbar: HBAR_MEV_PS,
            kinetic_coeff: kinetic_coefficient(mass_kg)?,
        })
    }

    pub fn with_kinetic_coeff(kinetic_coeff: f64) -> Result<Self> {
        if !(kinetic_coeff > 0.0 && kinetic_coeff.is_finite()) {
            return Err(Error::config(
                "particle.kinetic_coeff_meV_nm2",
                format!("must be positive, got {kinetic_coeff}"),
            ));
        }
        Ok(Self {
            hbar: HBAR_MEV_PS,
            kinetic_coeff,
        })
    }

    /// Free-particle energy ħ²k²/2m.
    pub fn kinetic_energy(&self, k: f64) -> f64 {
        self.kinetic_coeff * k * k
    }

    /// ħ/m in nm²/ps.
    pub fn hbar_over_mass(&self) -> f64 {
        2.0 * self.kinetic_coeff / self.hbar
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::from_mass(DEFAULT_MASS_KG).expect("default mass is positive")
    }
}

/// ħ²/(2m) in meV·nm² for a mass given in kg.
pub fn kinetic_coefficient(mass_kg: f64) -> Result<f64> {
    if !(mass_kg > 0.0 && mass_kg.is_finite()) {
        return Err(Error::config(
            "particle.mass_kg",
            format!("mass must be positive, got {mass_kg}"),
        ));
    }
    Ok(HBAR_SI * HBAR_SI / (2.0 * mass_kg) * MEV_PER_JOULE * NM2_PER_M2)
}

/// Uniform grid `x[i] = x0_edge + i·dx`, `i = 0..n`, with `n` a power of two.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Grid1D {
    n: usize,
    dx: f64,
    x0_edge: f64,
}

impl Grid1D {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x0_edge(&self) -> f64 {
        self.x0_edge
    }

    pub fn extent(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// Last grid point.
    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0_edge + i as f64 * self.dx
    }

    pub fn xs(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dx)
    }

    pub fn k_nyquist(&self) -> f64 {
        PI / self.dx
    }

    /// Wavenumber of FFT output index `j` (standard layout: non-negative
    /// frequencies first, then the negative ones).
    pub fn k_of_index(&self, j: usize) -> f64 {
        let n = self.n as isize;
        let j = j as isize;
        let signed = if j < n / 2 { j } else { j - n };
        signed as f64 * self.dk()
    }

    /// FFT index holding wavenumber `k` (nearest grid wavenumber, periodic).
    pub fn index_of_k(&self, k: f64) -> usize {
        let n = self.n as isize;
        let m = (k / self.dk()).round() as isize;
        m.rem_euclid(n) as usize
    }

    /// Mirror image of index `i` through the grid center `x0_edge + n·dx/2`.
    /// Index 0 has no partner and maps to itself.
    pub fn mirror_index(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    /// Requires `π/dx > |k_in| + 3·k0` so that the momentum ladder up to
    /// two quanta is resolved with margin.
    pub fn require_nyquist(&self, field: &str, k_in: f64, k0: f64) -> Result<()> {
        let needed = k_in.abs() + 3.0 * k0.abs();
        if self.k_nyquist() <= needed {
            return Err(Error::config(
                field,
                format!(
                    "Nyquist wavenumber π/dx = {:.6} nm⁻¹ does not exceed |k_in| + 3·k0 = {:.6} nm⁻¹; reduce dx",
                    self.k_nyquist(),
                    needed
                ),
            ));
        }
        Ok(())
    }
}

/// Builds a grid of `n` points with spacing `dx` centered on `center`:
/// the points span `[center − n·dx/2, center + (n/2 − 1)·dx]`.
pub fn make_grid(n: usize, dx: f64, center: f64) -> Result<Grid1D> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::config(
            "grid.n",
            format!("grid.n must be a power of two (≥ 2), got {n}"),
        ));
    }
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::config("grid.dx_nm", format!("must be positive, got {dx}")));
    }
    if !center.is_finite() {
        return Err(Error::config("grid.center_nm", "must be finite"));
    }
    Ok(Grid1D {
        n,
        dx,
        x0_edge: center - n as f64 * dx / 2.0,
    })
}

/// Square two-particle grid; both coordinates share one axis.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Grid2D {
    axis: Grid1D,
}

impl Grid2D {
    pub fn new(axis: Grid1D) -> Self {
        Self { axis }
    }

    /// Both axes are identical; this returns either.
    pub fn axis(&self) -> &Grid1D {
        &self.axis
    }

    pub fn n(&self) -> usize {
        self.axis.n
    }

    pub fn dx(&self) -> f64 {
        self.axis.dx
    }

    pub fn len(&self) -> usize {
        self.axis.n * self.axis.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kinetic_coefficient_of_default_mass() {
        let kc = kinetic_coefficient(DEFAULT_MASS_KG).unwrap();
        assert!((kc - 119.3).abs() < 0.1, "{kc}");
    }

    #[test]
    fn kinetic_energy_matches_quoted_pair() {
        let u = UnitSystem::default();
        assert!((u.kinetic_energy(0.290) - 10.0).abs() < 0.1);
        assert_eq!(u.kinetic_energy(0.0), 0.0);
    }

    #[test]
    fn non_positive_mass_is_rejected() {
        assert!(kinetic_coefficient(0.0).is_err());
        assert!(kinetic_coefficient(-1e-31).is_err());
    }

    #[test]
    fn small_grid_layout() {
        let g = make_grid(8, 1.0, 0.0).unwrap();
        assert_eq!(g.x(0), -4.0);
        assert_eq!(g.x_max(), 3.0);
        assert!((g.dk() - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn non_power_of_two_is_rejected() {
        let err = make_grid(7, 1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("grid.n must be a power of two"));
    }

    #[test]
    fn production_grid_spacing() {
        let g = make_grid(2048, 0.5859, 0.0).unwrap();
        assert!((g.extent() - 1200.0).abs() < 0.1);
        assert!((g.dk() - 0.005236).abs() < 1e-6);
    }

    #[test]
    fn nyquist_violation_names_wavenumber() {
        let g = make_grid(64, 3.0, 0.0).unwrap();
        let err = g.require_nyquist("grid.n", 0.205, 0.46).unwrap_err();
        assert!(err.to_string().contains("Nyquist"));
        assert!(make_grid(2048, 0.5859, 0.0)
            .unwrap()
            .require_nyquist("grid.n", 0.205, 0.46)
            .is_ok());
    }

    proptest! {
        #[test]
        fn reciprocal_relation(p in 1u32..14, dx in 1e-3f64..10.0, c in -500.0f64..500.0) {
            let g = make_grid(1 << p, dx, c).unwrap();
            let prod = g.n() as f64 * g.dx() * g.dk();
            prop_assert!((prod / (2.0 * PI) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn momentum_index_round_trip(p in 1u32..14, dx in 1e-3f64..10.0) {
            let g = make_grid(1 << p, dx, 0.0).unwrap();
            for j in 0..g.n() {
                prop_assert_eq!(g.index_of_k(g.k_of_index(j)), j);
            }
        }
    }
}

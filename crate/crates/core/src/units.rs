//! Physical constants and the internal unit system.
//!
//! Everything downstream works in lattice-natural units: energies in recoil
//! energies E_R = hbar^2 k_R^2 / 2m, lengths in 1/k_R, times in hbar/E_R,
//! with hbar = 1. For the default Rb-87 parameters (lambda = 816 nm) one
//! internal time unit is about 46 us and E_R/h is about 3.45 kHz.

use crate::error::{CoreError, Result};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Mass of Rb-87, kg.
pub const MASS_RB87: f64 = 1.443_160_6e-25;
/// Default lattice wavelength, m.
pub const DEFAULT_LAMBDA: f64 = 816e-9;
/// Default s-wave scattering length, m.
pub const DEFAULT_SCATTERING_LENGTH: f64 = 5.31e-9;

/// Photon recoil energy hbar^2 k^2 / 2m for a lattice of wavelength `lambda`, in J.
pub fn recoil_energy(lambda: f64, mass: f64) -> Result<f64> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(CoreError::domain(format!(
            "recoil_energy: wavelength must be positive, got {lambda:e}"
        )));
    }
    if mass <= 0.0 || !mass.is_finite() {
        return Err(CoreError::domain(format!(
            "recoil_energy: mass must be positive, got {mass:e}"
        )));
    }
    let k = std::f64::consts::TAU / lambda;
    Ok(HBAR * HBAR * k * k / (2.0 * mass))
}

/// Fixed experimental constants plus the derived lattice scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Lattice wavelength, m.
    pub lambda: f64,
    /// Atomic mass, kg.
    pub mass: f64,
    /// s-wave scattering length, m.
    pub a_s: f64,
    /// Recoil wavevector 2 pi / lambda, 1/m.
    pub k_r: f64,
    /// Recoil energy, J.
    pub e_r: f64,
}

impl Constants {
    pub fn new(lambda: f64, mass: f64, a_s: f64) -> Result<Self> {
        let e_r = recoil_energy(lambda, mass)?;
        if !a_s.is_finite() {
            return Err(CoreError::domain("Constants: non-finite scattering length"));
        }
        Ok(Self { lambda, mass, a_s, k_r: std::f64::consts::TAU / lambda, e_r })
    }

    /// Default Rb-87 parameter set.
    pub fn rb87() -> Self {
        Self::new(DEFAULT_LAMBDA, MASS_RB87, DEFAULT_SCATTERING_LENGTH)
            .expect("default constants are valid")
    }

    /// E_R expressed as a frequency E_R / h, Hz.
    pub fn recoil_frequency(&self) -> f64 {
        self.e_r / PLANCK
    }

    pub fn units(&self) -> InternalUnits {
        InternalUnits {
            energy: self.e_r,
            length: 1.0 / self.k_r,
            time: HBAR / self.e_r,
        }
    }

    /// Convert an internal energy (E_R units) to a frequency in Hz.
    pub fn internal_energy_to_hz(&self, e: f64) -> f64 {
        e * self.e_r / PLANCK
    }

    /// Convert a frequency in Hz to an internal energy (E_R units).
    pub fn hz_to_internal_energy(&self, f: f64) -> f64 {
        f * PLANCK / self.e_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Energy,
    Length,
    Time,
}

/// SI scale factors of one internal unit: energy E_R (J), length 1/k_R (m),
/// time hbar/E_R (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InternalUnits {
    pub energy: f64,
    pub length: f64,
    pub time: f64,
}

impl InternalUnits {
    fn scale(&self, kind: Quantity) -> f64 {
        match kind {
            Quantity::Energy => self.energy,
            Quantity::Length => self.length,
            Quantity::Time => self.time,
        }
    }

    /// SI value -> internal value.
    pub fn to_internal(&self, value: f64, kind: Quantity) -> f64 {
        value / self.scale(kind)
    }

    /// Internal value -> SI value.
    pub fn from_internal(&self, value: f64, kind: Quantity) -> f64 {
        value * self.scale(kind)
    }
}

/// Microseconds to internal time units at the default constants.
pub fn us_to_internal(t_us: f64) -> f64 {
    t_us * 1e-6 / Constants::rb87().units().time
}

/// Internal time units to microseconds at the default constants.
pub fn internal_to_us(t: f64) -> f64 {
    t * Constants::rb87().units().time * 1e6
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recoil_energy_rb87_816nm() {
        let e_r = recoil_energy(DEFAULT_LAMBDA, MASS_RB87).unwrap();
        let f = e_r / PLANCK;
        // 3.45 kHz nominal for the 816 nm lattice
        assert!((f - 3450.0).abs() / 3450.0 < 5e-3, "E_R/h = {f} Hz");
        assert!(f > 3430.0 && f < 3470.0);
    }

    #[test]
    fn recoil_energy_scales() {
        let e1 = recoil_energy(800e-9, MASS_RB87).unwrap();
        let e2 = recoil_energy(1600e-9, MASS_RB87).unwrap();
        assert_relative_eq!(e1 / e2, 4.0, max_relative = 1e-12);
        let eh = recoil_energy(800e-9, MASS_RB87 / 2.0).unwrap();
        assert_relative_eq!(eh / e1, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn recoil_energy_rejects_bad_input() {
        assert!(recoil_energy(0.0, MASS_RB87).is_err());
        assert!(recoil_energy(-1e-9, MASS_RB87).is_err());
        assert!(recoil_energy(816e-9, 0.0).is_err());
        assert!(recoil_energy(f64::NAN, MASS_RB87).is_err());
    }

    #[test]
    fn time_unit_and_swap_period() {
        let u = Constants::rb87().units();
        // one internal time unit is ~46.1 us
        assert_relative_eq!(u.time, 46.16e-6, max_relative = 2e-3);
        // the 285 us oscillation period in internal units
        let t = u.to_internal(285e-6, Quantity::Time);
        assert_relative_eq!(t, 6.18, max_relative = 2e-3);
    }

    #[test]
    fn roundtrip_is_identity() {
        let u = Constants::rb87().units();
        for kind in [Quantity::Energy, Quantity::Length, Quantity::Time] {
            for v in [1e-30, 2.5e-6, 3.0, 8.1e9] {
                let w = u.from_internal(u.to_internal(v, kind), kind);
                assert_relative_eq!(w, v, max_relative = 1e-12);
            }
        }
    }
}

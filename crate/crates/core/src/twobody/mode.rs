//! The exact four-state exchange engine: the gate truth table as an operator.
//!
//! Basis: one atom in the ground orbital, one in the excited orbital, each
//! carrying a spin, restricted to exactly one atom per orbital. Index order
//! is `2 q_e + q_g`: {|0e,0g>, |0e,1g>, |1e,0g>, |1e,1g>}.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;

use super::ExchangeDecomposition;
use crate::error::{CoreError, Result};
use crate::lattice::LatticeParams;
use crate::spectral::{interaction_integral, self_interaction_integral, SingleParticleSpectrum};
use crate::units::Constants;

pub const MODE_BASIS_LABELS: [&str; 4] = ["|0e,0g>", "|0e,1g>", "|1e,0g>", "|1e,1g>"];

/// Basis index of the state with spin `q_e` on the excited-orbital atom and
/// spin `q_g` on the ground-orbital atom.
pub fn basis_index(q_e: usize, q_g: usize) -> usize {
    2 * q_e + q_g
}

/// Few-mode description of one merged site, all energies in E_R.
#[derive(Debug, Clone, Copy)]
pub struct ModeModel {
    pub eps_g: f64,
    pub eps_e: f64,
    /// Contact energy of the spatially symmetric (e,g) pair; sets the gate
    /// clock.
    pub u_eg: f64,
    /// Same-orbital pair energies, diagnostics only: the four-state basis has
    /// no doubly occupied orbital, but their size bounds how badly
    /// mode-changing collisions are being ignored.
    pub u_gg: f64,
    pub u_ee: f64,
}

impl ModeModel {
    /// Swap time pi hbar / U_eg in internal time units.
    pub fn swap_time(&self) -> f64 {
        PI / self.u_eg
    }

    /// Population oscillation period, 2 T_sw.
    pub fn oscillation_period(&self) -> f64 {
        TAU / self.u_eg
    }
}

/// Assemble the model from a solved single-particle spectrum. The lowest two
/// states are taken as the g and e orbitals; `params` supplies the transverse
/// trap frequencies entering the quasi-1D reduction and `consts` the
/// scattering length.
pub fn build_mode_model(
    spectrum: &SingleParticleSpectrum,
    params: &LatticeParams,
    consts: &Constants,
) -> Result<ModeModel> {
    if spectrum.n_states() < 2 {
        return Err(CoreError::validation(
            "build_mode_model: spectrum must hold at least two states",
        ));
    }
    let phi_g = &spectrum.states[0];
    let phi_e = &spectrum.states[1];
    Ok(ModeModel {
        eps_g: spectrum.energies[0],
        eps_e: spectrum.energies[1],
        u_eg: interaction_integral(phi_e, phi_g, &spectrum.grid, params, consts)?,
        u_gg: self_interaction_integral(phi_g, &spectrum.grid, params, consts)?,
        u_ee: self_interaction_integral(phi_e, &spectrum.grid, params, consts)?,
    })
}

fn check_normalized(state: &[C64; 4]) -> Result<()> {
    let norm: f64 = state.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(CoreError::domain(format!(
            "mode state norm {norm:.12} is not 1"
        )));
    }
    Ok(())
}

/// Exact evolution of four-state amplitudes for time `t` (internal units).
///
/// Gauge follows the published truth table: the global factor
/// exp(-i U_eg t / 2 hbar) is divided out, so the exchange block is the pure
/// cos / -i sin rotation while |0e,0g> and |1e,1g> keep the leftover
/// interaction phase exp(-i U_eg t / 2 hbar). Orbital phases are common to
/// all four states and drop with the same convention.
pub fn evolve_mode_model(model: &ModeModel, state: &[C64; 4], t: f64) -> Result<[C64; 4]> {
    check_normalized(state)?;
    let half = 0.5 * model.u_eg * t;
    let (s, c) = half.sin_cos();
    let edge = C64::new(c, -s);
    let rot_s = C64::new(0.0, -s);
    Ok([
        edge * state[0],
        c * state[1] + rot_s * state[2],
        rot_s * state[1] + c * state[2],
        edge * state[3],
    ])
}

/// Project four-state amplitudes onto the singlet/triplet eigenbasis.
pub fn singlet_triplet_decompose(state: &[C64; 4]) -> Result<ExchangeDecomposition> {
    check_normalized(state)?;
    Ok(ExchangeDecomposition::from_pair_amplitudes([
        [state[0], state[1]],
        [state[2], state[3]],
    ]))
}

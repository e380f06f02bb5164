//! Merge-quality figures of a ramp: how much vibrational population survives
//! in the target bands, and how large a spin-exchange oscillation the final
//! state can support.

use crate::error::Result;
use crate::grid::Boundary;
use crate::lattice::Spin;
use crate::par::Jobs;
use crate::presets::{pair_grid, DEFAULT_GRID_N};
use crate::ramp::RampSchedule;
use crate::spectral::{localized_pair, solve_stationary};

use super::grid::{
    band_spin_populations, init_grid_state, propagate_grid, singlet_triplet_decompose_grid,
    ModeBasis, PropagationOptions,
};

#[derive(Debug, Clone, Copy)]
pub struct AdiabaticityMetrics {
    /// Fraction of atoms ending the ramp in the two target vibrational bands,
    /// from the band projection of the reduced one-particle density.
    pub vibrational_fidelity: f64,
    /// Normalized population swing 2 |a_S| |a_T0| / (|a_S|^2 + |a_T0|^2) of
    /// the exchange block after the ramp: the contrast a subsequent hold-time
    /// oscillation would show.
    pub exchange_amplitude: f64,
}

/// Propagate the canonical pair |0_L, 1_R> across `schedule` and score the
/// end state.
///
/// The initial orbitals are the localized ground states of each atom's own
/// lattice at the start of the schedule; the end state is analyzed against
/// the spectra at the final time.
pub fn adiabaticity_metrics(
    schedule: &RampSchedule,
    dt: f64,
    g1d: f64,
    jobs: Jobs,
) -> Result<AdiabaticityMetrics> {
    let grid = pair_grid(DEFAULT_GRID_N)?;
    let p_start = schedule.sample(schedule.start_time());
    let spec0 = solve_stationary(&p_start, Spin::Zero, &grid, Boundary::Periodic, 2)?;
    let spec1 = solve_stationary(&p_start, Spin::One, &grid, Boundary::Periodic, 2)?;
    let (left, _) = localized_pair(&spec0)?;
    let (_, right) = localized_pair(&spec1)?;
    let state = init_grid_state(&grid, &left, Spin::Zero, &right, Spin::One)?;

    let mut opts = PropagationOptions::new(dt, g1d);
    opts.jobs = jobs;
    let traj = propagate_grid(&state, schedule, &opts)?;
    let final_state = &traj.final_state;

    let p_end = schedule.sample(schedule.end_time());
    let end0 = solve_stationary(&p_end, Spin::Zero, &grid, Boundary::Periodic, 4)?;
    let end1 = solve_stationary(&p_end, Spin::One, &grid, Boundary::Periodic, 4)?;
    let (pops, _) = band_spin_populations(final_state, &end0, &end1)?;
    let vibrational_fidelity = pops[0][0] + pops[0][1] + pops[1][0] + pops[1][1];

    let basis = ModeBasis::per_spin(&end0, &end1)?;
    let decomposition = singlet_triplet_decompose_grid(final_state, &basis)?;
    Ok(AdiabaticityMetrics {
        vibrational_fidelity,
        exchange_amplitude: decomposition.exchange_amplitude(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{default_g1d, merge_ramp, DEFAULT_DT_US};
    use crate::units::us_to_internal;

    #[test]
    fn instantaneous_merge_excites_vibrations() {
        // squeeze the production ramp into two time steps: a sudden quench
        let dt = us_to_internal(DEFAULT_DT_US);
        let sched = merge_ramp(2.0 * dt).unwrap();
        let m = adiabaticity_metrics(&sched, dt, default_g1d(), 1).unwrap();
        assert!(
            m.vibrational_fidelity < 0.8,
            "sudden merge kept {:.3} in the target bands",
            m.vibrational_fidelity
        );
    }
}

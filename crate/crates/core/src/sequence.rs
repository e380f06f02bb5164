//! Experiment programs: state preparation, merge ramps, holds, site-selective
//! RF pulses, and a final measurement, executed against either twobody engine.
//!
//! A sequence is compiled before it runs. Compilation resolves everything that
//! does not depend on the per-site noise draw: addressing shifts at the
//! current lattice configuration, the exchange angle and single-particle
//! phases accumulated across a ramp, and the interaction model for each hold.
//! Execution is then cheap per ensemble site, which is what makes hold-time
//! sweeps over thousands of sites practical with the mode engine.
//!
//! The grid engine runs the same programs from first principles but for a
//! single paired site: per-site field noise commutes with the spin-diagonal
//! spatial evolution, so heterogeneous ensembles gain nothing from it that
//! the mode engine does not already capture, and it would cost one full
//! propagation per site.
//!
//! Pulses are spin-only unitaries applied at a point in sequence time: their
//!
//! duration enters the Rabi rotation exactly, but the lattice does not evolve
//! underneath them and no wall-clock time elapses. The rotation itself is the
//! exact generalized Rabi solution, with the effective detuning resolved per
//! site and per channel (well or orbital) plus the site's noise detuning.

use std::f64::consts::TAU;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{
    measure_populations, sample_field_noise, sample_occupancy, FieldNoiseModel, OccupancyModel,
    SiteKind, SiteOutcome,
};
use crate::error::{CoreError, Result};
use crate::grid::Boundary;
use crate::lattice::{potential_value, LatticeParams, Site, Spin};
use crate::par::Jobs;
use crate::presets::{default_g1d, pair_grid, prep_params, DEFAULT_DT_US, DEFAULT_GRID_N};
use crate::ramp::RampSchedule;
use crate::spectral::{localized_pair, solve_stationary};
use crate::twobody::{
    band_spin_populations, build_mode_model, init_grid_state, propagate_grid, propagate_single,
    ModeModel, PropagationOptions, TwoParticleGridState,
};
use crate::units::{internal_to_us, Constants};

/// Default RF Rabi frequency, Hz. A calibration, not a measured input: it is
/// chosen so a pi pulse addressed to one well transfers less than 5% of the
/// population in the other well at the 20 kHz addressing splitting, which
/// reproduces the quoted 95% preparation fidelity.
pub const DEFAULT_RABI_HZ: f64 = 4000.0;

/// Grid points per axis used when compiling ramp interaction integrals. The
/// integrals are smooth functionals of the orbitals and converge well below
/// the propagation resolution.
const COMPILE_GRID_N: usize = 128;

/// Simpson nodes for the exchange-angle integral along a ramp.
const COMPILE_NODES: usize = 33;

// regime split: the short lattice is exactly zero at the merged end of the
// production ramp, so presence of any barrier marks the double-well regime
fn is_merged(params: &LatticeParams) -> bool {
    params.v_short < 1e-9
}

/// What an RF pulse is aimed at. Left/Right address wells of the double-well
/// regime; Excited/Ground address orbitals of the merged well; Both hits
/// every atom. The target never gates which atoms the field reaches - all of
/// them - it declares which channel the pulse is meant to be resonant with
/// and is validated against the current regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseTarget {
    Left,
    Right,
    Both,
    Excited,
    Ground,
}

impl PulseTarget {
    fn label(self) -> &'static str {
        match self {
            PulseTarget::Left => "L",
            PulseTarget::Right => "R",
            PulseTarget::Both => "both",
            PulseTarget::Excited => "e",
            PulseTarget::Ground => "g",
        }
    }
}

/// One RF pulse on the |0> <-> |1> transition.
#[derive(Debug, Clone)]
pub struct RfPulse {
    pub rabi_freq_hz: f64,
    /// Carrier offset from the uniform-field splitting, Hz.
    pub detuning_from_uniform_hz: f64,
    pub duration_s: f64,
    pub phase_rad: f64,
    pub target: PulseTarget,
}

impl RfPulse {
    /// Pulse area 2 pi f t in radians; pi for a full flip on resonance.
    pub fn area(&self) -> f64 {
        TAU * self.rabi_freq_hz * self.duration_s
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rabi_freq_hz.is_finite() || self.rabi_freq_hz < 0.0 {
            return Err(CoreError::validation("RfPulse: rabi_freq must be finite and >= 0"));
        }
        if !self.duration_s.is_finite() || self.duration_s < 0.0 {
            return Err(CoreError::validation("RfPulse: duration must be finite and >= 0"));
        }
        if !self.detuning_from_uniform_hz.is_finite() || !self.phase_rad.is_finite() {
            return Err(CoreError::validation("RfPulse: detuning and phase must be finite"));
        }
        Ok(())
    }

    fn with_area(target: PulseTarget, area: f64, phase_rad: f64) -> Self {
        RfPulse {
            rabi_freq_hz: DEFAULT_RABI_HZ,
            detuning_from_uniform_hz: 0.0,
            duration_s: area / (TAU * DEFAULT_RABI_HZ),
            phase_rad,
            target,
        }
    }

    /// Resonant pi pulse at the default Rabi frequency.
    pub fn pi(target: PulseTarget) -> Self {
        Self::with_area(target, std::f64::consts::PI, 0.0)
    }

    /// Resonant pi/2 pulse with the given phase.
    pub fn pi_half(target: PulseTarget, phase_rad: f64) -> Self {
        Self::with_area(target, std::f64::consts::FRAC_PI_2, phase_rad)
    }

    /// Same pulse with an explicit carrier offset.
    pub fn detuned(mut self, detuning_hz: f64) -> Self {
        self.detuning_from_uniform_hz = detuning_hz;
        self
    }
}

/// 2x2 rotation of (|0>, |1>) amplitudes for one pulse at one local shift:
/// the exact generalized Rabi unitary about the tilted axis.
fn rf_matrix(pulse: &RfPulse, local_shift_hz: f64) -> [[C64; 2]; 2] {
    let omega = TAU * pulse.rabi_freq_hz;
    let delta = TAU * (pulse.detuning_from_uniform_hz - local_shift_hz);
    let oeff = omega.hypot(delta);
    let theta = oeff * pulse.duration_s;
    if theta == 0.0 {
        return [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
    }
    let (s, c) = (0.5 * theta).sin_cos();
    let (nx, ny, nz) = (
        omega * pulse.phase_rad.cos() / oeff,
        omega * pulse.phase_rad.sin() / oeff,
        delta / oeff,
    );
    // U = cos(theta/2) I - i sin(theta/2) n.sigma with sigma_z = diag(1, -1)
    [
        [C64::new(c, -s * nz), C64::new(-s * ny, -s * nx)],
        [C64::new(s * ny, -s * nx), C64::new(c, s * nz)],
    ]
}

/// Apply one pulse to a single spin, `local_shift_hz` being the lattice (and
/// noise) displacement of this atom's |1> level from the uniform splitting.
pub fn rf_rotation(amps: [C64; 2], pulse: &RfPulse, local_shift_hz: f64) -> [C64; 2] {
    let u = rf_matrix(pulse, local_shift_hz);
    [
        u[0][0] * amps[0] + u[0][1] * amps[1],
        u[1][0] * amps[0] + u[1][1] * amps[1],
    ]
}

/// Apply one pulse to a two-particle grid state at the given lattice
/// configuration: each particle is rotated as a two-level system whose local
/// shift is resolved per site (double well) or per orbital (merged well).
/// `extra_shift_hz` adds a uniform (noise) detuning on top.
///
/// The pulse is long compared to a vibrational period and short compared to
/// the exchange time, so the atom follows its well's carrier transition: the
/// local shift is the orbital-averaged |1> level shift of that well, one
/// number per region, not the bare potential difference point by point. The
/// rotation acts on the spin indices only and treats both particles
/// identically, so bosonic symmetry is preserved exactly.
pub fn apply_pulse_to_pair(
    state: &mut TwoParticleGridState,
    pulse: &RfPulse,
    params: &LatticeParams,
    consts: &Constants,
    extra_shift_hz: f64,
) -> Result<()> {
    pulse.validate()?;
    validate_target(pulse.target, is_merged(params))?;
    let n = state.grid.n;
    let us: Vec<[[C64; 2]; 2]> = if is_merged(params) {
        // orbital shifts coincide for the symmetric merged well; rotate
        // uniformly at their mean
        let (se, sg) = channel_shifts(params, consts)?;
        let u = rf_matrix(pulse, 0.5 * (se + sg) + extra_shift_hz);
        vec![u; n]
    } else {
        // partition the ring by nearest well and rotate each region at its
        // own carrier
        let (sl, sr) = channel_shifts(params, consts)?;
        let geom = crate::lattice::well_geometry(params, Spin::One, consts)?;
        let (xl, xr) = (geom.left(), geom.right());
        let ul = rf_matrix(pulse, sl + extra_shift_hz);
        let ur = rf_matrix(pulse, sr + extra_shift_hz);
        let period = crate::lattice::PERIOD;
        let dist = |x: f64, m: f64| {
            let d = (x - m).rem_euclid(period);
            d.min(period - d)
        };
        (0..n)
            .map(|i| {
                let x = state.grid.point(i);
                if dist(x, xl) <= dist(x, xr) {
                    ul
                } else {
                    ur
                }
            })
            .collect()
    };
    let old = state.psi.clone();
    for s1 in 0..2 {
        for s2 in 0..2 {
            for i in 0..n {
                let u1 = &us[i];
                for j in 0..n {
                    let u2 = &us[j];
                    let mut z = C64::new(0.0, 0.0);
                    for a in 0..2 {
                        for b in 0..2 {
                            z += u1[s1][a] * u2[s2][b] * old[[a, b, i, j]];
                        }
                    }
                    state.psi[[s1, s2, i, j]] = z;
                }
            }
        }
    }
    Ok(())
}

fn validate_target(target: PulseTarget, merged: bool) -> Result<()> {
    match (target, merged) {
        (PulseTarget::Left | PulseTarget::Right, true) => Err(CoreError::domain(format!(
            "pulse target {} addresses a well, but the lattice is merged; \
             merged-regime targets are e, g, or both",
            target.label()
        ))),
        (PulseTarget::Excited | PulseTarget::Ground, false) => Err(CoreError::domain(format!(
            "pulse target {} addresses a merged-well orbital, but the lattice \
             is still a double well; double-well targets are L, R, or both",
            target.label()
        ))),
        _ => Ok(()),
    }
}

/// One step of an experiment program. Times are internal units.
#[derive(Debug, Clone)]
pub enum Step {
    /// Load one atom per well of the prepared double well with these spins.
    Prepare { left: Spin, right: Spin },
    /// Drive the lattice along a schedule; must start where the sequence
    /// currently is.
    Ramp(RampSchedule),
    /// Sit in the current configuration.
    Hold { duration: f64 },
    Pulse(RfPulse),
    /// Band-map and image; always the final step.
    Measure,
}

impl Step {
    fn label(&self) -> &'static str {
        match self {
            Step::Prepare { .. } => "prepare",
            Step::Ramp(_) => "ramp",
            Step::Hold { .. } => "hold",
            Step::Pulse(_) => "pulse",
            Step::Measure => "measure",
        }
    }
}

/// An ordered experiment program.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub steps: Vec<Step>,
}

impl Sequence {
    /// Structural checks; every error names the offending step.
    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(CoreError::validation("sequence: no steps"));
        }
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                Step::Prepare { .. } if i != 0 => {
                    return Err(CoreError::validation(format!(
                        "sequence step {i}: PrepareState is only valid as the first step"
                    )));
                }
                Step::Hold { duration } if !duration.is_finite() || *duration < 0.0 => {
                    return Err(CoreError::validation(format!(
                        "sequence step {i}: hold duration must be finite and >= 0"
                    )));
                }
                Step::Pulse(p) => {
                    p.validate().map_err(|e| {
                        CoreError::validation(format!("sequence step {i}: {e}"))
                    })?;
                }
                Step::Measure if i + 1 != self.steps.len() => {
                    return Err(CoreError::validation(format!(
                        "sequence step {i}: Measure must be the final step"
                    )));
                }
                _ => {}
            }
        }
        if !matches!(self.steps.first(), Some(Step::Prepare { .. })) {
            return Err(CoreError::validation(
                "sequence step 0: must begin with PrepareState",
            ));
        }
        if !matches!(self.steps.last(), Some(Step::Measure)) {
            return Err(CoreError::validation(
                "sequence: must end with a single Measure step",
            ));
        }
        Ok(())
    }

    /// Wall-clock span of the program, internal units. Pulses are
    /// instantaneous in sequence time.
    pub fn total_time(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| match s {
                Step::Ramp(r) => r.duration(),
                Step::Hold { duration } => *duration,
                _ => 0.0,
            })
            .sum()
    }
}

/// Prepare, merge, hold, measure: the plain swap program.
pub fn swap_sequence(
    left: Spin,
    right: Spin,
    merge_duration: f64,
    hold: f64,
) -> Result<Sequence> {
    Ok(Sequence {
        steps: vec![
            Step::Prepare { left, right },
            Step::Ramp(crate::presets::merge_ramp(merge_duration)?),
            Step::Hold { duration: hold },
            Step::Measure,
        ],
    })
}

/// The swap program with a pulse block after the merge: pi/2, then either a
/// refocusing pi at the window midpoint or a bare wait, then the closing
/// pi/2, then an extra hold before measuring.
pub fn echo_sequence(
    left: Spin,
    right: Spin,
    merge_duration: f64,
    window: f64,
    refocus: bool,
    extra_hold: f64,
) -> Result<Sequence> {
    let mut steps = vec![
        Step::Prepare { left, right },
        Step::Ramp(crate::presets::merge_ramp(merge_duration)?),
        Step::Pulse(RfPulse::pi_half(PulseTarget::Both, 0.0)),
    ];
    if refocus {
        steps.push(Step::Hold { duration: 0.5 * window });
        steps.push(Step::Pulse(RfPulse::pi(PulseTarget::Both)));
        steps.push(Step::Hold { duration: 0.5 * window });
    } else {
        steps.push(Step::Hold { duration: window });
    }
    steps.push(Step::Pulse(RfPulse::pi_half(PulseTarget::Both, 0.0)));
    steps.push(Step::Hold { duration: extra_hold });
    steps.push(Step::Measure);
    Ok(Sequence { steps })
}

/// Which dynamical model executes the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Four-state exchange algebra with compiled ramp phases; supports full
    /// occupancy and noise ensembles.
    Mode,
    /// First-principles two-particle propagation; one paired site.
    Grid,
}

impl std::str::FromStr for Engine {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mode" => Ok(Engine::Mode),
            "grid" => Ok(Engine::Grid),
            other => Err(CoreError::validation(format!(
                "unknown engine '{other}'; expected 'mode' or 'grid'"
            ))),
        }
    }
}

/// Ensemble and numerics context for a run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n_sites: usize,
    pub occupancy: OccupancyModel,
    pub noise: FieldNoiseModel,
    /// Grid-engine points per particle.
    pub grid_n: usize,
    /// Grid-engine time step, internal units.
    pub dt: f64,
    /// Grid-engine contact coupling (calibrated); the mode engine derives its
    /// interaction from orbital integrals instead.
    pub g1d: f64,
    pub jobs: Jobs,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_sites: 1,
            occupancy: OccupancyModel::all_paired(),
            noise: FieldNoiseModel::quiet(),
            grid_n: DEFAULT_GRID_N,
            dt: crate::units::us_to_internal(DEFAULT_DT_US),
            g1d: default_g1d(),
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self, engine: Engine) -> Result<()> {
        self.occupancy.validate()?;
        self.noise.validate()?;
        if self.n_sites == 0 {
            return Err(CoreError::validation("RunConfig: n_sites must be >= 1"));
        }
        if engine == Engine::Grid {
            if self.n_sites != 1 {
                return Err(CoreError::validation(
                    "grid engine runs one site; use the mode engine for multi-site ensembles",
                ));
            }
            if (self.occupancy.p_paired_site - 1.0).abs() > 1e-12 {
                return Err(CoreError::validation(
                    "grid engine requires an all-paired occupancy; use the mode engine \
                     for occupancy mixtures",
                ));
            }
        }
        Ok(())
    }
}

/// Wall-clock boundary of one executed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepStamp {
    pub index: usize,
    pub label: &'static str,
    /// Sequence time at which the step finished, microseconds.
    pub t_us: f64,
}

/// Per-realization context a record was taken under.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordMeta {
    pub seed: u64,
    /// The shot's common detuning draw, Hz.
    pub shot_detuning_hz: f64,
    pub n_paired: usize,
    pub n_single: usize,
    pub n_empty: usize,
}

/// Ensemble-averaged outcome of the measurement step.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    /// Sequence time of the measurement, microseconds.
    pub time_us: f64,
    /// `populations[spin][band]` as fractions of all atoms; band 0 is the
    /// ground orbital, band 1 the excited one.
    pub populations: [[f64; 2]; 2],
    /// Atom fraction outside the two mapped bands (grid-engine dressing).
    pub residual: f64,
    pub timestamps: Vec<StepStamp>,
    pub meta: RecordMeta,
}

impl MeasurementRecord {
    /// Sum over the four mapped populations.
    pub fn total(&self) -> f64 {
        self.populations.iter().flatten().sum()
    }

    /// Fraction of e-band atoms carrying spin `q`.
    pub fn p_e(&self, q: Spin) -> f64 {
        self.populations[q.index()][1]
    }

    /// Fraction of g-band atoms carrying spin `q`.
    pub fn p_g(&self, q: Spin) -> f64 {
        self.populations[q.index()][0]
    }
}

// ---------------------------------------------------------------------------
// compilation

#[derive(Debug, Clone)]
struct RampCompilation {
    duration: f64,
    end_params: LatticeParams,
    /// Integrated exchange angle along the ramp, rad.
    theta_exchange: f64,
    /// Dynamical phase of the (side, spin) transfer channel, rad.
    phase: [[f64; 2]; 2],
    /// Transfer probability into the target orbital per channel; diagnostics
    /// recorded at compile time, the mode engine idealizes transfer to 1.
    transfer: [[f64; 2]; 2],
}

/// What compiling a merge ramp for the mode engine learned about it.
#[derive(Debug, Clone)]
pub struct RampDiagnostics {
    /// Exchange angle accumulated across the ramp, rad.
    pub theta_exchange: f64,
    /// `transfer[site][spin]`: single-particle probability that the (left,
    /// right) atom of that spin lands in its target (excited, ground)
    /// orbital. The mode engine idealizes these to 1; values well below 1
    /// mean the ramp is too fast for the four-state picture.
    pub transfer: [[f64; 2]; 2],
}

/// Compile a merge schedule and report its transfer quality and exchange
/// angle without running anything.
pub fn ramp_diagnostics(schedule: &RampSchedule, cfg: &RunConfig) -> Result<RampDiagnostics> {
    let consts = Constants::rb87();
    let rc = compile_ramp(schedule, cfg, &consts)?;
    Ok(RampDiagnostics {
        theta_exchange: rc.theta_exchange,
        transfer: rc.transfer,
    })
}

#[derive(Debug, Clone)]
struct HoldCompilation {
    /// Interaction model, present in the merged regime only.
    model: Option<ModeModel>,
    /// Lattice shift of the |1> level per channel, Hz: (L, R) wells when
    /// separated, (e, g) orbitals when merged.
    shifts_hz: (f64, f64),
}

#[derive(Debug, Clone)]
enum CStep {
    Prepare { left: Spin, right: Spin },
    Ramp(RampCompilation),
    Hold { duration: f64, c: HoldCompilation },
    Pulse { pulse: RfPulse, shifts_hz: (f64, f64) },
    Measure { merged: bool },
}

/// Everything about a sequence that is independent of the noise draw.
#[derive(Debug, Clone)]
struct Compiled {
    steps: Vec<CStep>,
    stamps: Vec<StepStamp>,
    /// Index into `steps` of the final Hold, when one directly precedes the
    /// Measure; sweep overrides target it.
    final_hold: Option<usize>,
}

fn orbital_shift_hz(
    phi: &Array1<f64>,
    params: &LatticeParams,
    grid: &crate::grid::Grid,
    consts: &Constants,
) -> f64 {
    let er_hz = consts.recoil_frequency();
    let dx = grid.dx();
    phi.iter()
        .enumerate()
        .map(|(i, &p)| {
            let x = grid.point(i);
            p * p
                * (potential_value(params, Spin::One, x) - potential_value(params, Spin::Zero, x))
        })
        .sum::<f64>()
        * dx
        * er_hz
}

/// Carrier shifts of the |1> level per addressing channel, Hz: the (left,
/// right) wells when the lattice is a double well, the (excited, ground)
/// orbitals when it is merged. These are orbital averages, the transition
/// frequencies an addressed RF pulse is actually resonant with, which sit a
/// couple of kHz inside the minimum-point splitting reported by
/// [`crate::lattice::differential_shift`] because the orbital samples the
/// curvature of the differential potential.
pub fn channel_shifts(params: &LatticeParams, consts: &Constants) -> Result<(f64, f64)> {
    let grid = pair_grid(COMPILE_GRID_N)?;
    if is_merged(params) {
        let spec = solve_stationary(params, Spin::Zero, &grid, Boundary::Periodic, 2)?;
        Ok((
            orbital_shift_hz(&spec.states[1], params, &grid, consts),
            orbital_shift_hz(&spec.states[0], params, &grid, consts),
        ))
    } else {
        let spec = solve_stationary(params, Spin::One, &grid, Boundary::Periodic, 2)?;
        let (l, r) = localized_pair(&spec)?;
        Ok((
            orbital_shift_hz(&l, params, &grid, consts),
            orbital_shift_hz(&r, params, &grid, consts),
        ))
    }
}

fn compile_ramp(schedule: &RampSchedule, cfg: &RunConfig, consts: &Constants) -> Result<RampCompilation> {
    let start = schedule.sample(schedule.start_time());
    let end = schedule.sample(schedule.end_time());
    if is_merged(&start) || !is_merged(&end) {
        return Err(CoreError::validation(
            "mode engine compiles ramps from the double well into the merged well only",
        ));
    }

    // single-particle channels: exact propagated phases, idealized transfer
    let grid = pair_grid(cfg.grid_n)?;
    let merged_spec = solve_stationary(&end, Spin::Zero, &grid, Boundary::Periodic, 2)?;
    let mut phase = [[0.0f64; 2]; 2];
    let mut transfer = [[0.0f64; 2]; 2];
    for (si, site) in [Site::Left, Site::Right].into_iter().enumerate() {
        for spin in Spin::BOTH {
            let spec = solve_stationary(&start, spin, &grid, Boundary::Periodic, 2)?;
            let (l, r) = localized_pair(&spec)?;
            let orb = if site == Site::Left { l } else { r };
            let phi0 = orb.mapv(|v| C64::new(v, 0.0));
            let psi = propagate_single(&phi0, spin, schedule, cfg.dt, &grid)?;
            // the left atom lands in the excited orbital, the right in the
            // ground one
            let target = &merged_spec.states[if site == Site::Left { 1 } else { 0 }];
            let amp: C64 = psi
                .iter()
                .zip(target.iter())
                .map(|(&z, &t)| z * t)
                .sum::<C64>()
                * grid.dx();
            phase[si][spin.index()] = amp.arg();
            transfer[si][spin.index()] = amp.norm_sqr();
        }
    }

    // exchange angle: Simpson over the adiabatic singlet-triplet gap of the
    // exchange block, tracked through the merge by the two-particle level
    // computation. The gap is exponentially small while the wells are
    // separated and grows into the merged-well exchange splitting, which is
    // what distinguishes it from the naive orbital-pair coupling of the
    // instantaneous doublet.
    let h = schedule.duration() / (COMPILE_NODES - 1) as f64;
    let times: Vec<f64> = (0..COMPILE_NODES)
        .map(|k| schedule.start_time() + k as f64 * h)
        .collect();
    let table = crate::twobody::eigenenergies_along_ramp_detailed(
        schedule,
        &times,
        true,
        consts,
        8,
        10,
        COMPILE_GRID_N,
        1,
    )?;
    let slot = |want: &str| {
        table
            .labels
            .iter()
            .position(|l| l == want)
            .ok_or_else(|| CoreError::numeric(format!("ramp compilation lost the {want} level")))
    };
    let (sa, sb) = (slot("|0_L,1_R>")?, slot("|1_L,0_R>")?);
    let mut theta = 0.0;
    for k in 0..COMPILE_NODES {
        let gap = (table.energies[[k, sa]] - table.energies[[k, sb]]).abs();
        let w = if k == 0 || k == COMPILE_NODES - 1 {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        theta += w * gap;
    }
    theta *= h / 3.0;

    Ok(RampCompilation {
        duration: schedule.duration(),
        end_params: end,
        theta_exchange: theta,
        phase,
        transfer,
    })
}

fn params_match(a: &LatticeParams, b: &LatticeParams) -> bool {
    (a.v_long - b.v_long).abs() < 1e-9
        && (a.v_short - b.v_short).abs() < 1e-9
        && (a.theta - b.theta).abs() < 1e-9
        && (a.dtheta_spin - b.dtheta_spin).abs() < 1e-9
        && (a.f_y_hz - b.f_y_hz).abs() < 1e-3
        && (a.f_z_hz - b.f_z_hz).abs() < 1e-3
}

fn compile_sequence(seq: &Sequence, cfg: &RunConfig, consts: &Constants) -> Result<Compiled> {
    seq.validate()?;
    let mut params = prep_params();
    let mut steps = Vec::with_capacity(seq.steps.len());
    let mut stamps = Vec::with_capacity(seq.steps.len());
    let mut clock_us = 0.0f64;
    let mut hold_cache: Option<(LatticeParams, HoldCompilation)> = None;

    for (i, step) in seq.steps.iter().enumerate() {
        match step {
            Step::Prepare { left, right } => {
                steps.push(CStep::Prepare { left: *left, right: *right });
            }
            Step::Ramp(schedule) => {
                let start = schedule.sample(schedule.start_time());
                if !params_match(&params, &start) {
                    return Err(CoreError::validation(format!(
                        "sequence step {i}: ramp starts at (v_long {:.3}, v_short {:.3}, \
                         theta {:.4}) but the sequence is at (v_long {:.3}, v_short {:.3}, \
                         theta {:.4})",
                        start.v_long, start.v_short, start.theta,
                        params.v_long, params.v_short, params.theta,
                    )));
                }
                let rc = compile_ramp(schedule, cfg, consts)?;
                params = rc.end_params;
                clock_us += internal_to_us(rc.duration);
                steps.push(CStep::Ramp(rc));
                hold_cache = None;
            }
            Step::Hold { duration } => {
                let c = match &hold_cache {
                    Some((p, c)) if params_match(p, &params) => c.clone(),
                    _ => {
                        let merged = is_merged(&params);
                        let model = if merged {
                            let spec = solve_stationary(
                                &params,
                                Spin::Zero,
                                &pair_grid(cfg.grid_n)?,
                                Boundary::Periodic,
                                2,
                            )?;
                            Some(build_mode_model(&spec, &params, consts)?)
                        } else {
                            // cross-well contact is ~2% of the merged coupling
                            // here; the grid engine is the oracle for it
                            None
                        };
                        let c = HoldCompilation {
                            model,
                            shifts_hz: channel_shifts(&params, consts)?,
                        };
                        hold_cache = Some((params, c.clone()));
                        c
                    }
                };
                clock_us += internal_to_us(*duration);
                steps.push(CStep::Hold { duration: *duration, c });
            }
            Step::Pulse(pulse) => {
                validate_target(pulse.target, is_merged(&params))
                    .map_err(|e| CoreError::validation(format!("sequence step {i}: {e}")))?;
                steps.push(CStep::Pulse {
                    pulse: pulse.clone(),
                    shifts_hz: channel_shifts(&params, consts)?,
                });
            }
            Step::Measure => {
                steps.push(CStep::Measure { merged: is_merged(&params) });
            }
        }
        stamps.push(StepStamp { index: i, label: step.label(), t_us: clock_us });
    }

    let final_hold = match (steps.len() >= 2, steps.get(steps.len().wrapping_sub(2))) {
        (true, Some(CStep::Hold { .. })) => Some(steps.len() - 2),
        _ => None,
    };

    Ok(Compiled { steps, stamps, final_hold })
}

// ---------------------------------------------------------------------------
// mode-engine execution

#[derive(Debug, Clone)]
enum ModeSite {
    /// Pair amplitudes; indices mean (left, right) before the merge and
    /// (excited, ground) after it.
    Pair([C64; 4]),
    Single { spin: [C64; 2], side: Site },
    Empty,
}

// the evolve_mode_model gauge for a given accumulated angle: aligned states
// keep the half-angle interaction phase, the exchange block rotates
fn exchange_rotation(c: &mut [C64; 4], theta: f64) {
    let (s, co) = (0.5 * theta).sin_cos();
    let edge = C64::new(co, -s);
    let ms = C64::new(0.0, -s);
    let (a, b) = (c[1], c[2]);
    c[0] *= edge;
    c[3] *= edge;
    c[1] = co * a + ms * b;
    c[2] = ms * a + co * b;
}

fn pair_phase(c: &mut [C64; 4], first: [f64; 2], second: [f64; 2]) {
    for qe in 0..2 {
        for qg in 0..2 {
            c[2 * qe + qg] *= C64::from_polar(1.0, first[qe] + second[qg]);
        }
    }
}

fn pair_spin_rotation(c: &mut [C64; 4], u1: &[[C64; 2]; 2], u2: &[[C64; 2]; 2]) {
    let old = *c;
    for a in 0..2 {
        for b in 0..2 {
            let mut z = C64::new(0.0, 0.0);
            for ap in 0..2 {
                for bp in 0..2 {
                    z += u1[a][ap] * u2[b][bp] * old[2 * ap + bp];
                }
            }
            c[2 * a + b] = z;
        }
    }
}

/// Noise phase on the |1> content over wall time `t_sec` at detuning
/// `delta_hz`: both atoms of a site see the same field.
fn noise_phase(site: &mut ModeSite, delta_hz: f64, t_sec: f64) {
    let phi = TAU * delta_hz * t_sec;
    match site {
        ModeSite::Pair(c) => {
            for qe in 0..2 {
                for qg in 0..2 {
                    let ones = (qe + qg) as f64;
                    c[2 * qe + qg] *= C64::from_polar(1.0, -phi * ones);
                }
            }
        }
        ModeSite::Single { spin, .. } => {
            spin[1] *= C64::from_polar(1.0, -phi);
        }
        ModeSite::Empty => {}
    }
}

fn run_mode_site(
    compiled: &Compiled,
    kind: SiteKind,
    delta_site_hz: f64,
    hold_override: Option<f64>,
    time_unit_s: f64,
) -> SiteOutcome {
    let mut site = ModeSite::Empty;
    for (si, step) in compiled.steps.iter().enumerate() {
        match step {
            CStep::Prepare { left, right } => {
                site = match kind {
                    SiteKind::Paired => {
                        let mut c = [C64::new(0.0, 0.0); 4];
                        c[2 * left.index() + right.index()] = C64::new(1.0, 0.0);
                        ModeSite::Pair(c)
                    }
                    SiteKind::SingleLeft => ModeSite::Single {
                        spin: spin_basis(*left),
                        side: Site::Left,
                    },
                    SiteKind::SingleRight => ModeSite::Single {
                        spin: spin_basis(*right),
                        side: Site::Right,
                    },
                    SiteKind::Empty => ModeSite::Empty,
                };
            }
            CStep::Ramp(rc) => {
                match &mut site {
                    ModeSite::Pair(c) => {
                        pair_phase(c, rc.phase[0], rc.phase[1]);
                        exchange_rotation(c, rc.theta_exchange);
                    }
                    ModeSite::Single { spin, side } => {
                        let si = if *side == Site::Left { 0 } else { 1 };
                        let ph = rc.phase[si];
                        spin[0] *= C64::from_polar(1.0, ph[0]);
                        spin[1] *= C64::from_polar(1.0, ph[1]);
                    }
                    ModeSite::Empty => {}
                }
                noise_phase(&mut site, delta_site_hz, rc.duration * time_unit_s);
            }
            CStep::Hold { duration, c: hc } => {
                let duration = match hold_override {
                    Some(t) if Some(si) == compiled.final_hold => t,
                    _ => *duration,
                };
                match &mut site {
                    ModeSite::Pair(c) => {
                        let t_sec = duration * time_unit_s;
                        if let Some(model) = &hc.model {
                            exchange_rotation(c, model.u_eg * duration);
                        }
                        // channel-resolved lattice shifts on the |1> level
                        let (d1, d2) = hc.shifts_hz;
                        pair_phase(
                            c,
                            [0.0, -TAU * d1 * t_sec],
                            [0.0, -TAU * d2 * t_sec],
                        );
                    }
                    ModeSite::Single { spin, side } => {
                        let t_sec = duration * time_unit_s;
                        // a lone atom stays in its well's channel: the well
                        // itself when separated, the band it feeds when merged
                        let d = match side {
                            Site::Left => hc.shifts_hz.0,
                            Site::Right => hc.shifts_hz.1,
                        };
                        spin[1] *= C64::from_polar(1.0, -TAU * d * t_sec);
                    }
                    ModeSite::Empty => {}
                }
                noise_phase(&mut site, delta_site_hz, duration * time_unit_s);
            }
            CStep::Pulse { pulse, shifts_hz } => {
                let (s1, s2) = *shifts_hz;
                match &mut site {
                    ModeSite::Pair(c) => {
                        let u1 = rf_matrix(pulse, s1 + delta_site_hz);
                        let u2 = rf_matrix(pulse, s2 + delta_site_hz);
                        pair_spin_rotation(c, &u1, &u2);
                    }
                    ModeSite::Single { spin, side } => {
                        let s = if *side == Site::Left { s1 } else { s2 };
                        *spin = rf_rotation(*spin, pulse, s + delta_site_hz);
                    }
                    ModeSite::Empty => {}
                }
            }
            CStep::Measure { merged } => {
                return measure_mode_site(&site, *merged);
            }
        }
    }
    SiteOutcome::empty()
}

fn spin_basis(q: Spin) -> [C64; 2] {
    let mut s = [C64::new(0.0, 0.0); 2];
    s[q.index()] = C64::new(1.0, 0.0);
    s
}

/// Project one mode-engine site onto (spin, band) atom counts. In the merged
/// regime the pair indices are the bands themselves. In the double-well
/// regime each localized orbital is an equal superposition of the
/// tunnel-split doublet, so band mapping spreads every atom half and half;
/// the grid engine resolves this exactly, the mode engine documents the
/// symmetric-doublet idealization.
fn measure_mode_site(site: &ModeSite, merged: bool) -> SiteOutcome {
    let mut populations = [[0.0f64; 2]; 2];
    let mut atoms = 0.0;
    match site {
        ModeSite::Pair(c) => {
            atoms = 2.0;
            for qe in 0..2 {
                for qg in 0..2 {
                    let w = c[2 * qe + qg].norm_sqr();
                    if merged {
                        populations[qe][1] += w;
                        populations[qg][0] += w;
                    } else {
                        for band in 0..2 {
                            populations[qe][band] += 0.5 * w;
                            populations[qg][band] += 0.5 * w;
                        }
                    }
                }
            }
        }
        ModeSite::Single { spin, side } => {
            atoms = 1.0;
            for q in 0..2 {
                let w = spin[q].norm_sqr();
                if merged {
                    let band = if *side == Site::Left { 1 } else { 0 };
                    populations[q][band] += w;
                } else {
                    populations[q][0] += 0.5 * w;
                    populations[q][1] += 0.5 * w;
                }
            }
        }
        ModeSite::Empty => {}
    }
    SiteOutcome { populations, residual: 0.0, atoms }
}

// ---------------------------------------------------------------------------
// grid-engine execution

struct GridExec<'a> {
    cfg: &'a RunConfig,
    consts: &'a Constants,
    state: Option<TwoParticleGridState>,
    params: LatticeParams,
    delta_hz: f64,
}

impl GridExec<'_> {
    fn prepare(&mut self, left: Spin, right: Spin) -> Result<()> {
        let grid = pair_grid(self.cfg.grid_n)?;
        let spec_l = solve_stationary(&self.params, left, &grid, Boundary::Periodic, 2)?;
        let spec_r = solve_stationary(&self.params, right, &grid, Boundary::Periodic, 2)?;
        let (l, _) = localized_pair(&spec_l)?;
        let (_, r) = localized_pair(&spec_r)?;
        self.state = Some(init_grid_state(&grid, &l, left, &r, right)?);
        Ok(())
    }

    fn state_mut(&mut self) -> Result<&mut TwoParticleGridState> {
        self.state
            .as_mut()
            .ok_or_else(|| CoreError::validation("grid engine: no prepared state"))
    }

    fn propagate(&mut self, schedule: &RampSchedule) -> Result<()> {
        let opts = PropagationOptions {
            dt: self.cfg.dt,
            g1d: self.cfg.g1d,
            sample_every: 0,
            mode_basis: None,
            band_spectra: None,
            jobs: self.cfg.jobs,
        };
        let state = self.state_mut()?;
        let traj = propagate_grid(state, schedule, &opts)?;
        *state = traj.final_state;
        self.apply_noise(schedule.duration());
        Ok(())
    }

    // spin blocks are uncoupled, so the common field detuning is an exact
    // per-block phase regardless of the spatial dynamics underneath
    fn apply_noise(&mut self, duration: f64) {
        let t_sec = duration * self.consts.units().time;
        let phi = TAU * self.delta_hz * t_sec;
        if phi == 0.0 {
            return;
        }
        let state = self.state.as_mut().expect("noise follows a prepared state");
        for s1 in 0..2 {
            for s2 in 0..2 {
                let f = C64::from_polar(1.0, -phi * (s1 + s2) as f64);
                state
                    .psi
                    .slice_mut(ndarray::s![s1, s2, .., ..])
                    .mapv_inplace(|z| z * f);
            }
        }
    }

    fn measure(&mut self) -> Result<SiteOutcome> {
        let params = self.params;
        let state = self.state_mut()?;
        let spec0 = solve_stationary(&params, Spin::Zero, &state.grid, Boundary::Periodic, 2)?;
        let spec1 = solve_stationary(&params, Spin::One, &state.grid, Boundary::Periodic, 2)?;
        let (pops, residual) = band_spin_populations(state, &spec0, &spec1)?;
        let mut populations = [[0.0f64; 2]; 2];
        for q in 0..2 {
            for band in 0..2 {
                populations[q][band] = 2.0 * pops[q][band];
            }
        }
        Ok(SiteOutcome { populations, residual: 2.0 * residual, atoms: 2.0 })
    }
}

fn run_grid_sequence(
    seq: &Sequence,
    cfg: &RunConfig,
    consts: &Constants,
    delta_hz: f64,
) -> Result<(SiteOutcome, Vec<StepStamp>)> {
    let mut exec = GridExec {
        cfg,
        consts,
        state: None,
        params: prep_params(),
        delta_hz,
    };
    let mut stamps = Vec::with_capacity(seq.steps.len());
    let mut clock_us = 0.0f64;
    let mut outcome = None;
    for (i, step) in seq.steps.iter().enumerate() {
        match step {
            Step::Prepare { left, right } => exec.prepare(*left, *right)?,
            Step::Ramp(schedule) => {
                let start = schedule.sample(schedule.start_time());
                if !params_match(&exec.params, &start) {
                    return Err(CoreError::validation(format!(
                        "sequence step {i}: ramp does not start at the current configuration"
                    )));
                }
                exec.propagate(schedule)?;
                exec.params = schedule.sample(schedule.end_time());
                clock_us += internal_to_us(schedule.duration());
            }
            Step::Hold { duration } => {
                if *duration > 0.0 {
                    let sched = RampSchedule::hold(exec.params, *duration)?;
                    exec.propagate(&sched)?;
                }
                clock_us += internal_to_us(*duration);
            }
            Step::Pulse(pulse) => {
                let params = exec.params;
                let delta = exec.delta_hz;
                apply_pulse_to_pair(exec.state_mut()?, pulse, &params, consts, delta)?;
            }
            Step::Measure => {
                outcome = Some(exec.measure()?);
            }
        }
        stamps.push(StepStamp { index: i, label: step.label(), t_us: clock_us });
    }
    Ok((outcome.expect("validated sequence measures"), stamps))
}

// ---------------------------------------------------------------------------
// entry points

fn occupancy_meta(seed: u64, shot_hz: f64, occupancy: &[SiteKind]) -> RecordMeta {
    RecordMeta {
        seed,
        shot_detuning_hz: shot_hz,
        n_paired: occupancy.iter().filter(|k| **k == SiteKind::Paired).count(),
        n_single: occupancy
            .iter()
            .filter(|k| matches!(k, SiteKind::SingleLeft | SiteKind::SingleRight))
            .count(),
        n_empty: occupancy.iter().filter(|k| **k == SiteKind::Empty).count(),
    }
}

/// Execute a program once and reduce the ensemble into one record.
///
/// The draw order is fixed: occupancy first (one uniform draw per site, one
/// side draw per lone atom), then field noise (one shot draw, then one draw
/// per site), so identical (sequence, engine, config, seed) reproduce the
/// record bit for bit.
pub fn run_sequence(
    seq: &Sequence,
    engine: Engine,
    cfg: &RunConfig,
    seed: u64,
) -> Result<MeasurementRecord> {
    let mut records = run_shots(seq, engine, cfg, &[seed])?;
    Ok(records.pop().expect("one seed yields one record"))
}

/// Execute a program once per seed: independent experimental shots of the
/// same program. Each record is bit-identical to a standalone
/// [`run_sequence`] call with that seed; the mode engine compiles the
/// program once for the whole batch, the grid engine pays one full
/// propagation per shot.
pub fn run_shots(
    seq: &Sequence,
    engine: Engine,
    cfg: &RunConfig,
    seeds: &[u64],
) -> Result<Vec<MeasurementRecord>> {
    seq.validate()?;
    cfg.validate(engine)?;
    let consts = Constants::rb87();
    let compiled = match engine {
        Engine::Mode => Some(compile_sequence(seq, cfg, &consts)?),
        Engine::Grid => None,
    };
    let mut records = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let occupancy = sample_occupancy(&cfg.occupancy, cfg.n_sites, &mut rng)?;
        let noise = sample_field_noise(&cfg.noise, cfg.n_sites, &mut rng);
        let (outcomes, stamps) = match (&compiled, engine) {
            (Some(compiled), _) => {
                let time_unit = consts.units().time;
                let outcomes: Vec<SiteOutcome> = occupancy
                    .iter()
                    .enumerate()
                    .map(|(i, &kind)| {
                        run_mode_site(compiled, kind, noise.detuning_at(i), None, time_unit)
                    })
                    .collect();
                (outcomes, compiled.stamps.clone())
            }
            (None, _) => {
                let (outcome, stamps) =
                    run_grid_sequence(seq, cfg, &consts, noise.detuning_at(0))?;
                (vec![outcome], stamps)
            }
        };
        let meta = occupancy_meta(seed, noise.shot_hz, &occupancy);
        let time_us = stamps.last().map(|s| s.t_us).unwrap_or(0.0);
        records.push(measure_populations(&outcomes, meta, time_us, stamps)?);
    }
    Ok(records)
}

/// Execute the program once per value of the final hold duration.
///
/// The ensemble identity (occupancy and the static gradient) is drawn once
/// and shared across the sweep; the shot detuning is redrawn per point, as
/// each point is a separate experimental shot. The grid engine shares the
/// propagation prefix and extends the final hold incrementally.
pub fn run_sweep(
    seq: &Sequence,
    holds: &[f64],
    engine: Engine,
    cfg: &RunConfig,
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    seq.validate()?;
    cfg.validate(engine)?;
    if holds.is_empty() {
        return Err(CoreError::validation("run_sweep: empty hold list"));
    }
    if holds.windows(2).any(|w| w[1] <= w[0]) || holds.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(CoreError::validation(
            "run_sweep: hold times must be finite, >= 0, and strictly increasing",
        ));
    }
    let n = seq.steps.len();
    if n < 2 || !matches!(seq.steps[n - 2], Step::Hold { .. }) {
        return Err(CoreError::validation(
            "run_sweep: the step before Measure must be a Hold to sweep over",
        ));
    }
    let consts = Constants::rb87();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let occupancy = sample_occupancy(&cfg.occupancy, cfg.n_sites, &mut rng)?;
    let gradient = sample_field_noise(
        &FieldNoiseModel { shot_sigma_hz: 0.0, ..cfg.noise },
        cfg.n_sites,
        &mut rng,
    );
    let shot_model = FieldNoiseModel { gradient_sigma_hz: 0.0, ..cfg.noise };

    match engine {
        Engine::Mode => {
            let compiled = compile_sequence(seq, cfg, &consts)?;
            let hold_index = compiled
                .final_hold
                .expect("validated sweep sequence has a final hold");
            let base_us = compiled
                .stamps
                .last()
                .map(|s| s.t_us)
                .unwrap_or(0.0)
                - match &compiled.steps[hold_index] {
                    CStep::Hold { duration, .. } => internal_to_us(*duration),
                    _ => 0.0,
                };
            let time_unit = consts.units().time;
            holds
                .iter()
                .map(|&t| {
                    let shot = sample_field_noise(&shot_model, 0, &mut rng).shot_hz;
                    let outcomes: Vec<SiteOutcome> = occupancy
                        .iter()
                        .enumerate()
                        .map(|(i, &kind)| {
                            run_mode_site(
                                &compiled,
                                kind,
                                shot + gradient.site_hz[i],
                                Some(t),
                                time_unit,
                            )
                        })
                        .collect();
                    let mut stamps = compiled.stamps.clone();
                    let t_us = base_us + internal_to_us(t);
                    for s in stamps.iter_mut().skip(hold_index) {
                        s.t_us = t_us;
                    }
                    measure_populations(&outcomes, occupancy_meta(seed, shot, &occupancy), t_us, stamps)
                })
                .collect()
        }
        Engine::Grid => {
            // shared prefix: everything up to the final hold; populations are
            // spin-block diagonal, so the per-point shot phase drops out of
            // the record and one draw serves the whole sweep
            let shot = sample_field_noise(&shot_model, 0, &mut rng).shot_hz;
            let delta = shot + gradient.site_hz[0];
            let mut exec = GridExec {
                cfg,
                consts: &consts,
                state: None,
                params: prep_params(),
                delta_hz: delta,
            };
            let mut clock_us = 0.0f64;
            let mut stamps = Vec::new();
            for (i, step) in seq.steps[..n - 2].iter().enumerate() {
                match step {
                    Step::Prepare { left, right } => exec.prepare(*left, *right)?,
                    Step::Ramp(schedule) => {
                        let start = schedule.sample(schedule.start_time());
                        if !params_match(&exec.params, &start) {
                            return Err(CoreError::validation(format!(
                                "sequence step {i}: ramp does not start at the current configuration"
                            )));
                        }
                        exec.propagate(schedule)?;
                        exec.params = schedule.sample(schedule.end_time());
                        clock_us += internal_to_us(schedule.duration());
                    }
                    Step::Hold { duration } => {
                        if *duration > 0.0 {
                            let sched = RampSchedule::hold(exec.params, *duration)?;
                            exec.propagate(&sched)?;
                        }
                        clock_us += internal_to_us(*duration);
                    }
                    Step::Pulse(pulse) => {
                        let params = exec.params;
                        apply_pulse_to_pair(exec.state_mut()?, pulse, &params, &consts, delta)?;
                    }
                    Step::Measure => unreachable!("measure is the final step"),
                }
                stamps.push(StepStamp { index: i, label: step.label(), t_us: clock_us });
            }

            let mut records = Vec::with_capacity(holds.len());
            let mut prev = 0.0f64;
            for &t in holds {
                let dt_hold = t - prev;
                if dt_hold > 0.0 {
                    let sched = RampSchedule::hold(exec.params, dt_hold)?;
                    exec.propagate(&sched)?;
                }
                prev = t;
                let outcome = exec.measure()?;
                let t_us = clock_us + internal_to_us(t);
                let mut point_stamps = stamps.clone();
                point_stamps.push(StepStamp {
                    index: n - 2,
                    label: "hold",
                    t_us,
                });
                point_stamps.push(StepStamp { index: n - 1, label: "measure", t_us });
                records.push(measure_populations(
                    &[outcome],
                    occupancy_meta(seed, shot, &occupancy),
                    t_us,
                    point_stamps,
                )?);
            }
            Ok(records)
        }
    }
}

//! The state-dependent double-well superlattice potential.
//!
//! In internal units (x in 1/k_R, energies in E_R) the 1D potential along the
//! double-well axis is
//!
//! ```text
//! V_s(x) = -v_short cos^2(2 x) - v_long cos^2(x + theta + s_q dtheta_spin)
//! ```
//!
//! where `s_q` is 0 for spin |0> and 1 for spin |1>. The short component sets
//! a well every pi/2; the long component makes alternating wells inequivalent,
//! so the fundamental period is pi and a unit cell holds one pair of sites.
//! At `theta = pi/4` the pair is symmetric; ramping `theta -> 0` deepens the
//! right site and lifts the left one until only a single well remains.
//! `dtheta_spin` shifts the long component for spin |1> only, which offsets
//! the spin-flip resonance between the two sites and is the addressing knob.

use crate::error::{CoreError, Result};
use crate::units::Constants;

/// Fundamental spatial period of the potential in internal units.
pub const PERIOD: f64 = std::f64::consts::PI;

/// Left edge of the canonical unit-cell window. The window is chosen so the
/// site pair (near -pi/2 and 0) sits away from the edges and the edges fall
/// on the high inter-pair barrier.
pub const WINDOW_START: f64 = -3.0 * std::f64::consts::FRAC_PI_4;

const SCAN_SAMPLES: usize = 1024;
const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 60;

/// Qubit basis label. |0> and |1> are two magnetic sublevels of the ground
/// hyperfine manifold; only |1> sees the `dtheta_spin` phase offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Zero,
    One,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Zero, Spin::One];

    pub fn index(self) -> usize {
        match self {
            Spin::Zero => 0,
            Spin::One => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Spin::Zero),
            1 => Ok(Spin::One),
            _ => Err(CoreError::domain(format!("spin index {i} out of range"))),
        }
    }

    /// Coefficient of `dtheta_spin` in the long-lattice phase.
    pub fn phase_weight(self) -> f64 {
        match self {
            Spin::Zero => 0.0,
            Spin::One => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Spin::Zero => Spin::One,
            Spin::One => Spin::Zero,
        }
    }
}

/// Well site labels within one unit cell, ordered by position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    Left,
    Right,
}

/// Snapshot of the lattice control parameters.
///
/// Depths are in E_R and must be non-negative; `f_y_hz` and `f_z_hz` are the
/// transverse trap frequencies used by the quasi-1D interaction reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParams {
    /// Depth of the pi-periodic (long) component, E_R.
    pub v_long: f64,
    /// Depth of the pi/2-periodic (short) component, E_R.
    pub v_short: f64,
    /// Phase of the long component, rad.
    pub theta: f64,
    /// Extra long-component phase seen by spin |1> only, rad.
    pub dtheta_spin: f64,
    /// Transverse trap frequency along y, Hz.
    pub f_y_hz: f64,
    /// Transverse trap frequency along z, Hz.
    pub f_z_hz: f64,
}

impl LatticeParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("v_long", self.v_long),
            ("v_short", self.v_short),
            ("theta", self.theta),
            ("dtheta_spin", self.dtheta_spin),
            ("f_y_hz", self.f_y_hz),
            ("f_z_hz", self.f_z_hz),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(CoreError::domain(format!("LatticeParams: {name} is not finite")));
            }
        }
        if self.v_long < 0.0 || self.v_short < 0.0 {
            return Err(CoreError::domain("LatticeParams: depths must be non-negative"));
        }
        if self.f_y_hz <= 0.0 || self.f_z_hz <= 0.0 {
            return Err(CoreError::domain("LatticeParams: transverse frequencies must be positive"));
        }
        Ok(())
    }

    /// Linear interpolation of every field; `s` in [0, 1].
    pub fn lerp(a: &Self, b: &Self, s: f64) -> Self {
        let mix = |x: f64, y: f64| x + (y - x) * s;
        Self {
            v_long: mix(a.v_long, b.v_long),
            v_short: mix(a.v_short, b.v_short),
            theta: mix(a.theta, b.theta),
            dtheta_spin: mix(a.dtheta_spin, b.dtheta_spin),
            f_y_hz: mix(a.f_y_hz, b.f_y_hz),
            f_z_hz: mix(a.f_z_hz, b.f_z_hz),
        }
    }

    /// Total phase of the long component for the given spin.
    pub fn long_phase(&self, spin: Spin) -> f64 {
        self.theta + spin.phase_weight() * self.dtheta_spin
    }
}

/// Potential at position `x` (internal units) for the given spin, in E_R.
pub fn potential_value(params: &LatticeParams, spin: Spin, x: f64) -> f64 {
    let a = params.long_phase(spin);
    let cs = (2.0 * x).cos();
    let cl = (x + a).cos();
    -params.v_short * cs * cs - params.v_long * cl * cl
}

/// dV/dx in E_R k_R.
pub(crate) fn potential_derivative(params: &LatticeParams, spin: Spin, x: f64) -> f64 {
    let a = params.long_phase(spin);
    2.0 * params.v_short * (4.0 * x).sin() + params.v_long * (2.0 * (x + a)).sin()
}

/// d2V/dx2 in E_R k_R^2.
pub(crate) fn potential_curvature(params: &LatticeParams, spin: Spin, x: f64) -> f64 {
    let a = params.long_phase(spin);
    8.0 * params.v_short * (4.0 * x).cos() + 2.0 * params.v_long * (2.0 * (x + a)).cos()
}

/// Geometry of one unit cell of the potential for a single spin.
#[derive(Debug, Clone)]
pub struct WellGeometry {
    /// Positions of the potential minima, ascending, inside the canonical window.
    pub minima: Vec<f64>,
    /// Barrier top between the two wells minus the higher minimum. `None` when
    /// the cell has a single well.
    pub barrier: Option<f64>,
    /// V(left) - V(right) well depths; zero for a single well.
    pub tilt_lr: f64,
    /// Difference of the spin-flip resonance offsets between left and right
    /// site, Hz: [(V1 - V0)(x_L) - (V1 - V0)(x_R)] / h.
    pub dnu_rf_hz: f64,
}

impl WellGeometry {
    pub fn is_double(&self) -> bool {
        self.minima.len() == 2
    }

    pub fn left(&self) -> f64 {
        self.minima[0]
    }

    pub fn right(&self) -> f64 {
        *self.minima.last().expect("geometry has at least one minimum")
    }

    pub fn site(&self, site: Site) -> f64 {
        match site {
            Site::Left => self.left(),
            Site::Right => self.right(),
        }
    }
}

fn wrap_to_window(x: f64) -> f64 {
    let mut y = (x - WINDOW_START).rem_euclid(PERIOD) + WINDOW_START;
    if y >= WINDOW_START + PERIOD {
        y -= PERIOD;
    }
    y
}

/// Newton refinement of a stationary point from a bracketing sample.
fn refine_stationary(params: &LatticeParams, spin: Spin, x0: f64, want_min: bool) -> Result<f64> {
    let mut x = x0;
    for _ in 0..NEWTON_MAX_ITER {
        let d1 = potential_derivative(params, spin, x);
        if d1.abs() < NEWTON_TOL {
            let d2 = potential_curvature(params, spin, x);
            if want_min && d2 < 0.0 {
                break; // converged onto a maximum; caller's bracket was bad
            }
            return Ok(x);
        }
        let d2 = potential_curvature(params, spin, x);
        if d2.abs() < 1e-14 {
            break;
        }
        let step = d1 / d2;
        // never leave the sampling cell that bracketed the extremum
        let max_step = PERIOD / SCAN_SAMPLES as f64;
        x -= step.clamp(-max_step, max_step);
    }
    Err(CoreError::numeric(format!(
        "stationary-point refinement failed near x = {x0:.6}"
    )))
}

/// Locate the wells of one unit cell.
///
/// Dense scan over one period followed by Newton refinement; minima closer
/// than one scan cell are merged. Errors if the potential is flat.
pub fn well_geometry(params: &LatticeParams, spin: Spin, consts: &Constants) -> Result<WellGeometry> {
    params.validate()?;
    if params.v_long + params.v_short < 1e-12 {
        return Err(CoreError::geometry("well_geometry: potential is flat"));
    }

    let h = PERIOD / SCAN_SAMPLES as f64;
    let value = |i: usize| {
        let x = WINDOW_START + (i % SCAN_SAMPLES) as f64 * h;
        potential_value(params, spin, x)
    };

    let mut minima: Vec<f64> = Vec::new();
    for i in 0..SCAN_SAMPLES {
        let prev = value(i.checked_sub(1).unwrap_or(SCAN_SAMPLES - 1));
        let here = value(i);
        let next = value(i + 1);
        if here <= prev && here < next {
            let x0 = WINDOW_START + i as f64 * h;
            let x = refine_stationary(params, spin, x0, true)?;
            minima.push(wrap_to_window(x));
        }
    }
    if minima.is_empty() {
        return Err(CoreError::geometry("well_geometry: no minima found"));
    }
    minima.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // merge refinements that collapsed onto the same well (mod period)
    let mut merged: Vec<f64> = Vec::new();
    for &x in &minima {
        let dup = merged.iter().any(|&m| {
            let d = (x - m).abs();
            d.min(PERIOD - d) < 2.0 * h
        });
        if !dup {
            merged.push(x);
        }
    }

    let (barrier, tilt_lr, dnu_rf_hz) = match merged.len() {
        1 => (None, 0.0, 0.0),
        2 => {
            let (xl, xr) = (merged[0], merged[1]);
            let vl = potential_value(params, spin, xl);
            let vr = potential_value(params, spin, xr);
            // saddle on each arc between the wells; the lower one is the
            // intra-pair barrier
            let saddle_in = arc_maximum(params, spin, xl, xr)?;
            let saddle_out = arc_maximum(params, spin, xr, xl + PERIOD)?;
            let barrier = saddle_in.min(saddle_out) - vl.max(vr);
            let dv = |x: f64| {
                potential_value(params, Spin::One, x) - potential_value(params, Spin::Zero, x)
            };
            let dnu = (dv(xl) - dv(xr)) * consts.e_r / crate::units::PLANCK;
            (Some(barrier), vl - vr, dnu)
        }
        n => {
            return Err(CoreError::geometry(format!(
                "well_geometry: {n} minima per cell (expected 1 or 2)"
            )))
        }
    };

    Ok(WellGeometry { minima: merged, barrier, tilt_lr, dnu_rf_hz })
}

/// Highest potential value on the arc (a, b), refined.
fn arc_maximum(params: &LatticeParams, spin: Spin, a: f64, b: f64) -> Result<f64> {
    let n = 256;
    let h = (b - a) / n as f64;
    let mut best = (a, f64::NEG_INFINITY);
    for i in 1..n {
        let x = a + i as f64 * h;
        let v = potential_value(params, spin, x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let x = refine_stationary(params, spin, best.0, false).unwrap_or(best.0);
    Ok(potential_value(params, spin, x))
}

/// Spin-flip resonance offset of one site relative to a uniform field, Hz.
///
/// Only meaningful in the double-well regime; errors when the cell holds a
/// single well.
pub fn differential_shift(params: &LatticeParams, site: Site, consts: &Constants) -> Result<f64> {
    let geom = well_geometry(params, Spin::Zero, consts)?;
    if !geom.is_double() {
        return Err(CoreError::geometry(
            "differential_shift: single-well configuration has no site-resolved shift",
        ));
    }
    let x = geom.site(site);
    let dv = potential_value(params, Spin::One, x) - potential_value(params, Spin::Zero, x);
    Ok(dv * consts.e_r / crate::units::PLANCK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn symmetric_pair() -> LatticeParams {
        LatticeParams {
            v_long: 20.0,
            v_short: 40.0,
            theta: FRAC_PI_4,
            dtheta_spin: 0.0,
            f_y_hz: 100e3,
            f_z_hz: 110e3,
        }
    }

    fn merged() -> LatticeParams {
        LatticeParams {
            v_long: 35.0,
            v_short: 0.0,
            theta: 0.0,
            dtheta_spin: 0.0,
            f_y_hz: 45e3,
            f_z_hz: 50e3,
        }
    }

    #[test]
    fn periodicity() {
        let p = symmetric_pair();
        for i in 0..97 {
            let x = -2.0 + 0.05 * i as f64;
            let a = potential_value(&p, Spin::Zero, x);
            let b = potential_value(&p, Spin::Zero, x + PERIOD);
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn symmetric_double_well_geometry() {
        let consts = Constants::rb87();
        let g = well_geometry(&symmetric_pair(), Spin::Zero, &consts).unwrap();
        assert!(g.is_double(), "minima: {:?}", g.minima);
        // wells sit near -pi/2 and 0, pulled toward each other by the long lattice
        assert!((g.left() + FRAC_PI_2).abs() < 0.1);
        assert!(g.right().abs() < 0.1);
        // symmetric about the pair center at -pi/4
        assert_relative_eq!(g.left() + g.right(), -FRAC_PI_2, epsilon = 1e-8);
        assert!(g.tilt_lr.abs() < 1e-8);
        assert!(g.barrier.unwrap() > 10.0);
        // refinement actually converged
        for &m in &g.minima {
            assert!(potential_derivative(&symmetric_pair(), Spin::Zero, m).abs() < 1e-9);
        }
    }

    #[test]
    fn merged_single_well() {
        let consts = Constants::rb87();
        let g = well_geometry(&merged(), Spin::Zero, &consts).unwrap();
        assert_eq!(g.minima.len(), 1);
        assert!(g.minima[0].abs() < 1e-9);
        assert!(g.barrier.is_none());
        assert_eq!(g.tilt_lr, 0.0);
    }

    #[test]
    fn tilt_follows_theta() {
        let consts = Constants::rb87();
        let mut p = symmetric_pair();
        p.theta = FRAC_PI_4 - 0.1;
        let g = well_geometry(&p, Spin::Zero, &consts).unwrap();
        // theta below pi/4 deepens the right well, so the left sits higher
        assert!(g.tilt_lr > 0.0);
    }

    #[test]
    fn dnu_rf_matches_closed_form() {
        let consts = Constants::rb87();
        let mut p = symmetric_pair();
        p.dtheta_spin = 0.147;
        let g = well_geometry(&p, Spin::Zero, &consts).unwrap();
        // for wells exactly at -pi/2 and 0 the offset is -v_long sin(2 dtheta) E_R/h;
        // the real minima are slightly displaced, so allow a few percent
        let expect = -p.v_long * (2.0 * p.dtheta_spin).sin() * consts.recoil_frequency();
        assert_relative_eq!(g.dnu_rf_hz, expect, max_relative = 0.05);
        let l = differential_shift(&p, Site::Left, &consts).unwrap();
        let r = differential_shift(&p, Site::Right, &consts).unwrap();
        assert_relative_eq!(l - r, g.dnu_rf_hz, max_relative = 1e-9);
    }

    #[test]
    fn differential_shift_rejects_merged() {
        let consts = Constants::rb87();
        assert!(differential_shift(&merged(), Site::Left, &consts).is_err());
    }

    #[test]
    fn flat_potential_is_geometry_error() {
        let consts = Constants::rb87();
        let p = LatticeParams { v_long: 0.0, v_short: 0.0, ..symmetric_pair() };
        assert!(well_geometry(&p, Spin::Zero, &consts).is_err());
    }

    #[test]
    fn depth_validation() {
        let p = LatticeParams { v_short: -1.0, ..symmetric_pair() };
        assert!(p.validate().is_err());
        let p = LatticeParams { f_y_hz: 0.0, ..symmetric_pair() };
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn prop_periodic(v_l in 0.5f64..60.0, v_s in 0.5f64..60.0,
                         theta in -1.0f64..1.0, dth in -0.3f64..0.3,
                         x in -10.0f64..10.0) {
            let p = LatticeParams {
                v_long: v_l, v_short: v_s, theta, dtheta_spin: dth,
                f_y_hz: 50e3, f_z_hz: 60e3,
            };
            for spin in Spin::BOTH {
                let a = potential_value(&p, spin, x);
                let b = potential_value(&p, spin, x + PERIOD);
                prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn prop_minima_count(v_l in 1.0f64..60.0, v_s in 1.0f64..60.0,
                             theta in 0.0f64..FRAC_PI_4) {
            let consts = Constants::rb87();
            let p = LatticeParams {
                v_long: v_l, v_short: v_s, theta, dtheta_spin: 0.0,
                f_y_hz: 50e3, f_z_hz: 60e3,
            };
            let g = well_geometry(&p, Spin::Zero, &consts)?;
            prop_assert!(g.minima.len() == 1 || g.minima.len() == 2);
            for w in g.minima.windows(2) {
                prop_assert!(w[1] > w[0]);
            }
        }
    }
}

//! Time-dependent lattice control: piecewise ramps between parameter knots.

use crate::error::{CoreError, Result};
use crate::lattice::LatticeParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    /// Cubic smoothstep of the knot-local coordinate, zero slope at each knot.
    Smoothstep,
    /// Shape-preserving piecewise cubic: Fritsch-Carlson harmonic-mean
    /// tangents at interior knots, zero slope at the end knots. Monotone
    /// wherever the knot values are, exactly flat across equal-value spans,
    /// and C1 overall, so intermediate knots guide the sweep rate without
    /// pausing it. Over a single interval it reduces to the smoothstep.
    MonotoneCubic,
}

// field accessors used by the monotone-cubic path, which interpolates each
// parameter independently
const FIELDS: [fn(&LatticeParams) -> f64; 6] = [
    |p| p.v_long,
    |p| p.v_short,
    |p| p.theta,
    |p| p.dtheta_spin,
    |p| p.f_y_hz,
    |p| p.f_z_hz,
];

fn params_from_fields(v: [f64; 6]) -> LatticeParams {
    LatticeParams {
        v_long: v[0],
        v_short: v[1],
        theta: v[2],
        dtheta_spin: v[3],
        f_y_hz: v[4],
        f_z_hz: v[5],
    }
}

/// Knot tangent of one field: zero at the ends, weighted harmonic mean of the
/// adjacent secant slopes inside (zero when they disagree in sign).
fn pchip_tangent(knots: &[RampKnot], get: fn(&LatticeParams) -> f64, i: usize) -> f64 {
    if i == 0 || i + 1 == knots.len() {
        return 0.0;
    }
    let h0 = knots[i].t - knots[i - 1].t;
    let h1 = knots[i + 1].t - knots[i].t;
    let d0 = (get(&knots[i].params) - get(&knots[i - 1].params)) / h0;
    let d1 = (get(&knots[i + 1].params) - get(&knots[i].params)) / h1;
    if d0 * d1 <= 0.0 {
        return 0.0;
    }
    let w1 = 2.0 * h1 + h0;
    let w2 = h1 + 2.0 * h0;
    (w1 + w2) / (w1 / d0 + w2 / d1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampKnot {
    /// Knot time in internal units.
    pub t: f64,
    pub params: LatticeParams,
}

/// A ramp of the lattice parameters, sampled by clamped piecewise interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct RampSchedule {
    knots: Vec<RampKnot>,
    pub interpolation: Interpolation,
}

impl RampSchedule {
    pub fn new(knots: Vec<RampKnot>, interpolation: Interpolation) -> Result<Self> {
        if knots.is_empty() {
            return Err(CoreError::domain("RampSchedule: no knots"));
        }
        for k in &knots {
            if !k.t.is_finite() {
                return Err(CoreError::domain("RampSchedule: non-finite knot time"));
            }
            k.params.validate()?;
        }
        for w in knots.windows(2) {
            if w[1].t <= w[0].t {
                return Err(CoreError::domain(format!(
                    "RampSchedule: knot times must strictly increase ({} then {})",
                    w[0].t, w[1].t
                )));
            }
        }
        Ok(Self { knots, interpolation })
    }

    /// Constant-in-time schedule.
    pub fn constant(params: LatticeParams) -> Self {
        Self::new(vec![RampKnot { t: 0.0, params }], Interpolation::Linear)
            .expect("single-knot schedule is valid")
    }

    /// Schedule holding `params` fixed over `[0, duration]`.
    pub fn hold(params: LatticeParams, duration: f64) -> Result<Self> {
        Self::new(
            vec![RampKnot { t: 0.0, params }, RampKnot { t: duration, params }],
            Interpolation::Linear,
        )
    }

    pub fn knots(&self) -> &[RampKnot] {
        &self.knots
    }

    pub fn start_time(&self) -> f64 {
        self.knots[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.knots[self.knots.len() - 1].t
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    pub fn is_constant(&self) -> bool {
        self.knots.windows(2).all(|w| w[0].params == w[1].params)
    }

    /// Parameters at time `t`, clamped to the end knots outside the ramp.
    pub fn sample(&self, t: f64) -> LatticeParams {
        let ks = &self.knots;
        if t <= ks[0].t {
            return ks[0].params;
        }
        if t >= ks[ks.len() - 1].t {
            return ks[ks.len() - 1].params;
        }
        let i = match ks.binary_search_by(|k| k.t.partial_cmp(&t).unwrap()) {
            Ok(i) => return ks[i].params,
            Err(i) => i - 1,
        };
        let (a, b) = (&ks[i], &ks[i + 1]);
        let u = (t - a.t) / (b.t - a.t);
        let s = match self.interpolation {
            Interpolation::Linear => u,
            Interpolation::Smoothstep => u * u * (3.0 - 2.0 * u),
            Interpolation::MonotoneCubic => return self.hermite_sample(i, t),
        };
        LatticeParams::lerp(&a.params, &b.params, s)
    }

    /// Cubic Hermite evaluation on interval `i` with per-field knot tangents.
    fn hermite_sample(&self, i: usize, t: f64) -> LatticeParams {
        let ks = &self.knots;
        let (a, b) = (&ks[i], &ks[i + 1]);
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let (u2, u3) = (u * u, u * u * u);
        let mut out = [0.0; 6];
        for (slot, get) in out.iter_mut().zip(FIELDS) {
            let p0 = get(&a.params);
            let p1 = get(&b.params);
            let m0 = pchip_tangent(ks, get, i);
            let m1 = pchip_tangent(ks, get, i + 1);
            *slot = p0 * (2.0 * u3 - 3.0 * u2 + 1.0)
                + h * m0 * (u3 - 2.0 * u2 + u)
                + p1 * (3.0 * u2 - 2.0 * u3)
                + h * m1 * (u3 - u2);
        }
        params_from_fields(out)
    }

    /// Same trajectory with all knot times scaled by `factor` (slower merge).
    pub fn stretched(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(CoreError::domain("stretched: factor must be positive"));
        }
        let t0 = self.start_time();
        let knots = self
            .knots
            .iter()
            .map(|k| RampKnot { t: t0 + (k.t - t0) * factor, params: k.params })
            .collect();
        Self::new(knots, self.interpolation)
    }

    /// Largest harmonic level spacing 2 sqrt(v_long + 4 v_short) over the
    /// knots, in E_R. Used as the propagation stability scale.
    pub fn max_level_spacing(&self) -> f64 {
        self.knots
            .iter()
            .map(|k| 2.0 * (k.params.v_long + 4.0 * k.params.v_short).sqrt())
            .fold(0.0, f64::max)
    }
}

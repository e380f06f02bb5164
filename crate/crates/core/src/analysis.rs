//! Fitting and bookkeeping for measured oscillations: a damped-sinusoid
//! least-squares fit, the fidelity estimate derived from an oscillation
//! amplitude, and the multiplicative amplitude budget.
//!
//! The fit model is
//!
//! ```text
//! y(t) = offset + amplitude * exp(-t / tau) * cos(2 pi t / period + phase)
//! ```
//!
//! so `amplitude` is the sinusoid coefficient: half the peak-to-peak swing
//! of the undamped oscillation, not the full swing. Times carry whatever
//! unit the caller's samples use; the fitted `period` and `tau` come back in
//! the same unit.

use nalgebra::{SMatrix, SVector};

use crate::error::{CoreError, Result};

const N_PARAMS: usize = 5;
const MAX_ITERS: usize = 200;
/// Relative drop in the sum of squares below which the fit has converged.
const SSR_TOL: f64 = 1e-12;

/// Converged damped-sinusoid fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Sinusoid coefficient, normalized >= 0.
    pub amplitude: f64,
    /// Oscillation period in the time unit of the samples, > 0.
    pub period: f64,
    /// Phase at t = 0, wrapped to (-pi, pi].
    pub phase: f64,
    /// 1/e damping time; infinite when the fit finds no damping, negative
    /// when the envelope grows over the sampled window.
    pub tau: f64,
    pub offset: f64,
    /// One-sigma estimates for (amplitude, period, phase, tau, offset) from
    /// the local quadratic model; NaN where the normal matrix is singular.
    pub sigma: [f64; 5],
    /// Rms misfit per sample.
    pub residual_rms: f64,
    pub iterations: usize,
}

impl FitResult {
    /// Report as CSV, `parameter,value,sigma_estimate` per line; the
    /// residual row carries no sigma.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("parameter,value,sigma_estimate\n");
        let rows = [
            ("amplitude", self.amplitude, self.sigma[0]),
            ("period", self.period, self.sigma[1]),
            ("phase_rad", self.phase, self.sigma[2]),
            ("tau", self.tau, self.sigma[3]),
            ("offset", self.offset, self.sigma[4]),
        ];
        for (name, value, sigma) in rows {
            s.push_str(&format!("{name},{value:.9},{sigma:.9}\n"));
        }
        s.push_str(&format!("residual_rms,{:.9},\n", self.residual_rms));
        s
    }
}

// model value and the residual/jacobian row for one sample
fn model(p: &SVector<f64, N_PARAMS>, t: f64) -> f64 {
    let (a, period, phase, lambda, c) = (p[0], p[1], p[2], p[3], p[4]);
    c + a * (-lambda * t).exp() * (std::f64::consts::TAU * t / period + phase).cos()
}

fn jacobian_row(p: &SVector<f64, N_PARAMS>, t: f64) -> SVector<f64, N_PARAMS> {
    let (a, period, phase, lambda) = (p[0], p[1], p[2], p[3]);
    let env = (-lambda * t).exp();
    let arg = std::f64::consts::TAU * t / period + phase;
    let (s, c) = arg.sin_cos();
    SVector::from([
        env * c,
        a * env * s * std::f64::consts::TAU * t / (period * period),
        -a * env * s,
        -t * a * env * c,
        1.0,
    ])
}

fn ssr(p: &SVector<f64, N_PARAMS>, t: &[f64], y: &[f64]) -> f64 {
    t.iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = model(p, ti) - yi;
            r * r
        })
        .sum()
}

/// Fit `y(t)` to a damped sinusoid.
///
/// Needs at least 8 samples at strictly increasing times with non-degenerate
/// values. The period is seeded from a demodulation scan between twice the
/// median sample spacing and twice the sampled span, then refined by
/// Levenberg-Marquardt until the sum of squares stalls to a relative 1e-12
/// (at most 200 iterations). A fit that fails to converge, or that does not
/// beat a constant model, is an error carrying the best parameters found.
pub fn fit_damped_sinusoid(t: &[f64], y: &[f64]) -> Result<FitResult> {
    if t.len() != y.len() {
        return Err(CoreError::validation("fit: t and y lengths differ"));
    }
    if t.len() < 8 {
        return Err(CoreError::validation("fit: need at least 8 samples"));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CoreError::validation("fit: samples must be finite"));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::validation("fit: times must be strictly increasing"));
    }
    let n = t.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var < 1e-12 {
        return Err(CoreError::domain(
            "fit: sample variance below 1e-12, no oscillation to fit",
        ));
    }
    let span = t[t.len() - 1] - t[0];
    let mut gaps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med_dt = gaps[gaps.len() / 2];

    // demodulation scan for the starting period
    let f_lo = 0.5 / span;
    let f_hi = 0.5 / med_dt;
    let nf = 600;
    let mut best = (0.0f64, f_lo);
    for k in 0..nf {
        let f = f_lo + (f_hi - f_lo) * k as f64 / (nf - 1) as f64;
        let (mut cs, mut sn) = (0.0f64, 0.0f64);
        for (&ti, &yi) in t.iter().zip(y) {
            let (s, c) = (std::f64::consts::TAU * f * ti).sin_cos();
            cs += (yi - mean) * c;
            sn += (yi - mean) * s;
        }
        let power = cs * cs + sn * sn;
        if power > best.0 {
            best = (power, f);
        }
    }
    let f0 = best.1;
    let (mut cs, mut sn) = (0.0f64, 0.0f64);
    for (&ti, &yi) in t.iter().zip(y) {
        let (s, c) = (std::f64::consts::TAU * f0 * ti).sin_cos();
        cs += (yi - mean) * c;
        sn += (yi - mean) * s;
    }
    let mut p = SVector::from([
        2.0 * (cs * cs + sn * sn).sqrt() / n,
        1.0 / f0,
        (-sn).atan2(cs),
        1e-3 / span,
        mean,
    ]);

    // Levenberg-Marquardt with multiplicative damping
    let mut current = ssr(&p, t, y);
    let mut mu = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..MAX_ITERS {
        iterations += 1;
        let mut jtj = SMatrix::<f64, N_PARAMS, N_PARAMS>::zeros();
        let mut jtr = SVector::<f64, N_PARAMS>::zeros();
        for (&ti, &yi) in t.iter().zip(y) {
            let row = jacobian_row(&p, ti);
            let r = model(&p, ti) - yi;
            jtj += row * row.transpose();
            jtr += row * r;
        }
        let mut accepted = false;
        for _ in 0..25 {
            let mut damped = jtj;
            for i in 0..N_PARAMS {
                damped[(i, i)] += mu * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                mu *= 10.0;
                continue;
            };
            let trial = p + step;
            // reject steps that leave the sane region instead of letting the
            // model alias or blow up
            let sane = trial.iter().all(|v| v.is_finite())
                && trial[1] > 0.25 * med_dt
                && trial[1] < 16.0 * span
                && trial[3].abs() < 50.0 / span;
            let trial_ssr = if sane { ssr(&trial, t, y) } else { f64::INFINITY };
            if trial_ssr <= current {
                let drop = current - trial_ssr;
                p = trial;
                let stalled = drop <= SSR_TOL * current.max(1e-300);
                current = trial_ssr;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if stalled {
                    converged = true;
                }
                break;
            }
            mu *= 10.0;
        }
        if converged || !accepted {
            converged = converged || accepted;
            break;
        }
    }

    // canonical parameter ranges
    if p[0] < 0.0 {
        p[0] = -p[0];
        p[2] += std::f64::consts::PI;
    }
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] = -p[2];
    }
    let mut phase = p[2] % std::f64::consts::TAU;
    if phase > std::f64::consts::PI {
        phase -= std::f64::consts::TAU;
    } else if phase <= -std::f64::consts::PI {
        phase += std::f64::consts::TAU;
    }
    let tau = if p[3] == 0.0 { f64::INFINITY } else { 1.0 / p[3] };

    let const_ssr = var * n;
    if !converged || current >= const_ssr {
        return Err(CoreError::numeric(format!(
            "fit did not converge on an oscillation; best so far amplitude {:.4}, \
             period {:.4}, ssr {:.3e} vs constant-model {:.3e}",
            p[0], p[1], current, const_ssr
        )));
    }

    // local one-sigma estimates from the unscaled normal matrix
    let mut jtj = SMatrix::<f64, N_PARAMS, N_PARAMS>::zeros();
    for &ti in t {
        let row = jacobian_row(&p, ti);
        jtj += row * row.transpose();
    }
    let s2 = current / (t.len() - N_PARAMS) as f64;
    let mut sigma = [f64::NAN; N_PARAMS];
    if let Some(inv) = jtj.try_inverse() {
        for (i, s) in sigma.iter_mut().enumerate() {
            let v = inv[(i, i)] * s2;
            *s = if v >= 0.0 { v.sqrt() } else { f64::NAN };
        }
        // sigma of tau from sigma of lambda by the delta method
        sigma[3] *= tau * tau;
    }

    Ok(FitResult {
        amplitude: p[0],
        period: p[1],
        phase,
        tau,
        offset: p[4],
        sigma,
        residual_rms: (current / t.len() as f64).sqrt(),
        iterations,
    })
}

/// Gate fidelity implied by an exchange-oscillation amplitude: (1 + A) / 2.
///
/// The amplitude convention matches [`fit_damped_sinusoid`]: A is the
/// sinusoid coefficient, so a perfect swap has A = 1 and F = 1.
pub fn estimate_fidelity(amplitude: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&amplitude) {
        return Err(CoreError::domain(format!(
            "estimate_fidelity: amplitude {amplitude} outside [0, 1]"
        )));
    }
    Ok(0.5 * (1.0 + amplitude))
}

/// Product of independent amplitude-reduction factors, each in [0, 1].
/// An empty budget multiplies to 1.
pub fn amplitude_budget(factors: &[f64]) -> Result<f64> {
    let mut product = 1.0;
    for &f in factors {
        if !(0.0..=1.0).contains(&f) {
            return Err(CoreError::domain(format!(
                "amplitude_budget: factor {f} outside [0, 1]"
            )));
        }
        product *= f;
    }
    Ok(product)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn synth(n: usize, span: f64, a: f64, period: f64, phase: f64, tau: f64, c: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|k| span * k as f64 / (n - 1) as f64).collect();
        let y = t
            .iter()
            .map(|&ti| {
                c + a * (-ti / tau).exp() * (std::f64::consts::TAU * ti / period + phase).cos()
            })
            .collect();
        (t, y)
    }

    #[test]
    fn noiseless_fit_recovers_the_parameters() {
        let (a, period, phase, tau, c) = (0.27, 285.0, 0.4, 10_000.0, 0.5);
        let (t, y) = synth(60, 1200.0, a, period, phase, tau, c);
        let fit = fit_damped_sinusoid(&t, &y).unwrap();
        assert!((fit.amplitude - a).abs() / a < 1e-6, "amplitude {}", fit.amplitude);
        assert!((fit.period - period).abs() / period < 1e-6, "period {}", fit.period);
        assert!((fit.phase - phase).abs() < 1e-6, "phase {}", fit.phase);
        assert!((fit.tau - tau).abs() / tau < 1e-6, "tau {}", fit.tau);
        assert!((fit.offset - c).abs() < 1e-6);
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn period_survives_measurement_noise() {
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (t, mut y) = synth(50, 1500.0, 0.27, 285.0, 0.4, 10_000.0, 0.5);
            for v in y.iter_mut() {
                *v += 0.02 * rng.sample::<f64, _>(StandardNormal);
            }
            let fit = fit_damped_sinusoid(&t, &y).unwrap();
            let err = (fit.period - 285.0).abs() / 285.0;
            assert!(err < 0.01, "seed {seed}: period {} off by {:.3}%", fit.period, 100.0 * err);
        }
    }

    #[test]
    fn fit_rejects_malformed_input() {
        let (t, y) = synth(20, 100.0, 0.3, 40.0, 0.0, 1e6, 0.0);
        assert!(fit_damped_sinusoid(&t[..10], &y).is_err());
        assert!(fit_damped_sinusoid(&t[..6], &y[..6]).is_err());
        let mut bad_t = t.clone();
        bad_t[5] = bad_t[4];
        assert!(fit_damped_sinusoid(&bad_t, &y).is_err());
        let mut bad_y = y.clone();
        bad_y[3] = f64::NAN;
        assert!(fit_damped_sinusoid(&t, &bad_y).is_err());
        let flat = vec![0.7; 20];
        let err = fit_damped_sinusoid(&t, &flat).unwrap_err().to_string();
        assert!(err.contains("variance"), "got: {err}");
    }

    #[test]
    fn fidelity_maps_amplitude_linearly() {
        let f = estimate_fidelity(0.27).unwrap();
        assert!((f - 0.635).abs() < 1e-12);
        assert_eq!(format!("{f:.2}"), "0.64");
        assert_eq!(estimate_fidelity(1.0).unwrap(), 1.0);
        assert_eq!(estimate_fidelity(0.0).unwrap(), 0.5);
        assert!(estimate_fidelity(-0.1).is_err());
        assert!(estimate_fidelity(1.1).is_err());
        assert!(estimate_fidelity(f64::NAN).is_err());
    }

    #[test]
    fn budget_multiplies_reduction_factors() {
        let b = amplitude_budget(&[0.92, 0.95, 0.80, 0.85]).unwrap();
        let exact = 0.92 * 0.95 * 0.80 * 0.85;
        assert!((b - exact).abs() < 1e-12);
        assert!((b - 0.594).abs() < 1e-3);
        assert_eq!(amplitude_budget(&[]).unwrap(), 1.0);
        assert!(amplitude_budget(&[0.9, 1.2]).is_err());
        assert!(amplitude_budget(&[-0.1]).is_err());
    }

    #[test]
    fn report_lists_every_parameter() {
        let (t, y) = synth(40, 900.0, 0.3, 285.0, 0.0, 2000.0, 0.5);
        let fit = fit_damped_sinusoid(&t, &y).unwrap();
        let csv = fit.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "parameter,value,sigma_estimate");
        assert_eq!(lines.len(), 7);
        for name in ["amplitude", "period", "phase_rad", "tau", "offset", "residual_rms"] {
            assert!(lines.iter().any(|l| l.starts_with(name)), "missing {name}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // relabeling the time origin must not move the undamped amplitude or
        // period
        #[test]
        fn fit_is_time_shift_invariant(
            a in 0.2f64..1.0,
            period in 80.0f64..400.0,
            phase in -3.0f64..3.0,
            c in -0.5f64..0.5,
            shift in 0.0f64..500.0,
        ) {
            let (t, y) = synth(48, 3.0 * period, a, period, phase, 1e12, c);
            let shifted: Vec<f64> = t.iter().map(|&ti| ti + shift).collect();
            let f0 = fit_damped_sinusoid(&t, &y).unwrap();
            let f1 = fit_damped_sinusoid(&shifted, &y).unwrap();
            prop_assert!(f0.amplitude >= 0.0 && f1.amplitude >= 0.0);
            prop_assert!(
                (f0.period - f1.period).abs() / period < 1e-8,
                "period moved: {} vs {}", f0.period, f1.period
            );
            prop_assert!(
                (f0.amplitude - f1.amplitude).abs() / a < 1e-8,
                "amplitude moved: {} vs {}", f0.amplitude, f1.amplitude
            );
        }

        #[test]
        fn budget_is_permutation_invariant(
            factors in prop::collection::vec(0.0f64..=1.0, 0..8),
            seed in 0u64..1000,
        ) {
            let mut shuffled = factors.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.gen_range(0..=i));
            }
            let a = amplitude_budget(&factors).unwrap();
            let b = amplitude_budget(&shuffled).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

//! Scratch harness for cross-engine sequence comparisons.

use num_complex::Complex64 as C64;
use swapsim_core::grid::Boundary;
use swapsim_core::lattice::{differential_shift, Site, Spin};
use swapsim_core::presets::{pair_grid, prep_params, MERGE_DURATION_US};
use swapsim_core::sequence::{
    apply_pulse_to_pair, run_sequence, swap_sequence, Engine, PulseTarget, RfPulse, RunConfig,
};
use swapsim_core::spectral::{localized_pair, solve_stationary};
use swapsim_core::twobody::init_grid_state;
use swapsim_core::units::{us_to_internal, Constants};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    match args.get(1).map(|s| s.as_str()) {
        Some("pulse") => pulse_debug(),
        Some("engines") => engines_debug(&args[2..]),
        _ => eprintln!("usage: seqdebug pulse|engines"),
    }
}

fn pulse_debug() {
    let params = prep_params();
    let consts = Constants::rb87();
    let grid = pair_grid(128).unwrap();
    let spec1 = solve_stationary(&params, Spin::One, &grid, Boundary::Periodic, 2).unwrap();
    let (l1, r1) = localized_pair(&spec1).unwrap();
    println!(
        "orbital centers: l {:.4} r {:.4}",
        mean_x(&l1, &grid),
        mean_x(&r1, &grid)
    );
    let shift_l = differential_shift(&params, Site::Left, &consts).unwrap();
    let shift_r = differential_shift(&params, Site::Right, &consts).unwrap();
    println!("minimum-point shift L {shift_l:.1} Hz  R {shift_r:.1} Hz");
    let avg = |phi: &ndarray::Array1<f64>| -> f64 {
        use swapsim_core::lattice::potential_value;
        phi.iter()
            .enumerate()
            .map(|(i, &p)| {
                let x = grid.point(i);
                p * p
                    * (potential_value(&params, Spin::One, x)
                        - potential_value(&params, Spin::Zero, x))
            })
            .sum::<f64>()
            * grid.dx()
            * consts.recoil_frequency()
    };
    let (avg_l, avg_r) = (avg(&l1), avg(&r1));
    println!("orbital-average shift L {avg_l:.1} Hz  R {avg_r:.1} Hz");
    let (ch_l, ch_r) = swapsim_core::sequence::channel_shifts(&params, &consts).unwrap();
    println!("channel shifts L {ch_l:.1} Hz  R {ch_r:.1} Hz");

    let mut state = init_grid_state(&grid, &l1, Spin::One, &r1, Spin::One).unwrap();
    let pulse = RfPulse::pi(PulseTarget::Left).detuned(ch_l);
    println!("pulse: rabi {} Hz duration {} s", pulse.rabi_freq_hz, pulse.duration_s);
    apply_pulse_to_pair(&mut state, &pulse, &params, &consts, 0.0).unwrap();

    let dx2 = grid.dx() * grid.dx();
    for s1 in 0..2 {
        for s2 in 0..2 {
            let w: f64 = state
                .psi
                .slice(ndarray::s![s1, s2, .., ..])
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                * dx2;
            println!("block ({s1},{s2}): {w:.6}");
        }
    }
    let target = init_grid_state(&grid, &l1, Spin::Zero, &r1, Spin::One).unwrap();
    let ov: C64 = state
        .psi
        .iter()
        .zip(target.psi.iter())
        .map(|(a, b)| b.conj() * a)
        .sum::<C64>()
        * dx2;
    println!("overlap with target: |{:.6}|^2 = {:.6}", ov.norm(), ov.norm_sqr());
}

fn mean_x(phi: &ndarray::Array1<f64>, grid: &swapsim_core::grid::Grid) -> f64 {
    phi.iter()
        .enumerate()
        .map(|(i, &p)| p * p * grid.point(i))
        .sum::<f64>()
        * grid.dx()
}

fn engines_debug(args: &[String]) {
    let hold: f64 = args.first().map(|s| s.parse().unwrap()).unwrap_or(50.0);
    let n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(128);
    let cfg = RunConfig { grid_n: n, ..RunConfig::default() };
    let seq = swap_sequence(
        Spin::Zero,
        Spin::One,
        us_to_internal(MERGE_DURATION_US),
        us_to_internal(hold),
    )
    .unwrap();
    let m = run_sequence(&seq, Engine::Mode, &cfg, 1).unwrap();
    let g = run_sequence(&seq, Engine::Grid, &cfg, 1).unwrap();
    println!("hold {hold} us, grid n {n}, residual {:.4}", g.residual);
    let scale = 1.0 - g.residual;
    for q in 0..2 {
        for band in 0..2 {
            println!(
                "[{q}][{band}] mode {:.5}  grid {:.5}  grid/pairnorm {:.5}  dev {:+.5}",
                m.populations[q][band],
                g.populations[q][band],
                g.populations[q][band] / scale,
                m.populations[q][band] - g.populations[q][band] / scale,
            );
        }
    }
}

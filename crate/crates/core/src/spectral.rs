//! Stationary single-particle problems: bound spectra, Bloch bands, and the
//! interaction overlap integrals built from them.
//!
//! Bound states are computed in a discrete-variable representation: the
//! kinetic operator is assembled exactly in the sine (hard-wall) or plane-wave
//! (periodic) basis and transformed to the grid, where the potential is
//! diagonal. Eigenvalues of smooth potentials then converge spectrally in the
//! grid size rather than at the O(dx^2) rate of finite differences.

use nalgebra::{DMatrix, DVector};
use ndarray::Array1;
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::Mutex;

use crate::error::{CoreError, Result};
use crate::grid::{Boundary, Grid};
use crate::lattice::{potential_value, LatticeParams, Spin};
use crate::units::{Constants, HBAR};

/// Bound eigenstates of the 1D lattice Hamiltonian for one spin.
///
/// `states[k]` is sampled on `grid.points()` and normalized so that
/// `sum |psi_i|^2 dx = 1`; energies are in E_R, ascending.
#[derive(Debug, Clone)]
pub struct SingleParticleSpectrum {
    pub grid: Grid,
    pub boundary: Boundary,
    pub energies: Vec<f64>,
    pub states: Vec<Array1<f64>>,
}

impl SingleParticleSpectrum {
    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    /// Largest deviation of <i|j> from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let dx = self.grid.dx();
        let mut worst = 0.0f64;
        for i in 0..self.n_states() {
            for j in i..self.n_states() {
                let s: f64 = self.states[i].iter().zip(self.states[j].iter()).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s * dx - target).abs());
            }
        }
        worst
    }

    /// Position expectation value of state `k`.
    pub fn mean_position(&self, k: usize) -> f64 {
        let dx = self.grid.dx();
        self.states[k]
            .iter()
            .enumerate()
            .map(|(i, a)| self.grid.point(i) * a * a * dx)
            .sum()
    }
}

// Kinetic DVR matrices depend only on (boundary, n, span); cache them since
// ramps solve the same grid hundreds of times.
type KineticKey = (bool, usize, u64);
static KINETIC_CACHE: Mutex<Option<HashMap<KineticKey, DMatrix<f64>>>> = Mutex::new(None);

fn kinetic_matrix(grid: &Grid, boundary: Boundary) -> DMatrix<f64> {
    let key = (
        matches!(boundary, Boundary::HardWall),
        grid.n,
        grid.span().to_bits(),
    );
    {
        let cache = KINETIC_CACHE.lock().unwrap();
        if let Some(map) = cache.as_ref() {
            if let Some(m) = map.get(&key) {
                return m.clone();
            }
        }
    }
    let m = build_kinetic(grid, boundary);
    let mut cache = KINETIC_CACHE.lock().unwrap();
    cache.get_or_insert_with(HashMap::new).insert(key, m.clone());
    m
}

fn build_kinetic(grid: &Grid, boundary: Boundary) -> DMatrix<f64> {
    let l = grid.span();
    match boundary {
        Boundary::HardWall => {
            // interior points 1..n-1; box modes sin(k pi x / L)
            let m = grid.n - 1;
            let s = DMatrix::from_fn(m, m, |i, k| {
                (2.0 / grid.n as f64).sqrt() * (PI * (k + 1) as f64 * (i + 1) as f64 / grid.n as f64).sin()
            });
            let t = DVector::from_fn(m, |k, _| {
                let kk = (k + 1) as f64 * PI / l;
                kk * kk
            });
            &s * DMatrix::from_diagonal(&t) * s.transpose()
        }
        Boundary::Periodic => {
            // symmetric circulant with first row from the plane-wave energies
            let n = grid.n;
            let dk = TAU / l;
            let mut row = vec![0.0f64; n];
            for (r, entry) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 1..n / 2 {
                    let k = j as f64 * dk;
                    acc += 2.0 * k * k * (TAU * j as f64 * r as f64 / n as f64).cos();
                }
                let k_nyq = (n / 2) as f64 * dk;
                acc += k_nyq * k_nyq * (PI * r as f64).cos();
                *entry = acc / n as f64;
            }
            DMatrix::from_fn(n, n, |i, j| row[(n + i - j) % n])
        }
    }
}

/// Lowest `n_states` eigenstates of `-d2/dx2 + V_spin(x)` on `grid`.
pub fn solve_stationary(
    params: &LatticeParams,
    spin: Spin,
    grid: &Grid,
    boundary: Boundary,
    n_states: usize,
) -> Result<SingleParticleSpectrum> {
    params.validate()?;
    let dim = match boundary {
        Boundary::HardWall => grid.n - 1,
        Boundary::Periodic => grid.n,
    };
    if n_states == 0 || n_states > grid.n / 4 {
        return Err(CoreError::validation(format!(
            "solve_stationary: n_states must be in 1..={} for n = {}",
            grid.n / 4,
            grid.n
        )));
    }

    let mut h = kinetic_matrix(grid, boundary);
    let offset = match boundary {
        Boundary::HardWall => 1,
        Boundary::Periodic => 0,
    };
    for i in 0..dim {
        h[(i, i)] += potential_value(params, spin, grid.point(i + offset));
    }
    let decomp = nalgebra::SymmetricEigen::new(h);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| decomp.eigenvalues[a].partial_cmp(&decomp.eigenvalues[b]).unwrap());

    let dx = grid.dx();
    let mut energies = Vec::with_capacity(n_states);
    let mut states = Vec::with_capacity(n_states);
    for &idx in order.iter().take(n_states) {
        energies.push(decomp.eigenvalues[idx]);
        let col = decomp.eigenvectors.column(idx);
        let mut psi = Array1::<f64>::zeros(grid.n);
        for i in 0..dim {
            psi[i + offset] = col[i] / dx.sqrt();
        }
        fix_phase(&mut psi);
        states.push(psi);
    }
    Ok(SingleParticleSpectrum { grid: *grid, boundary, energies, states })
}

/// Sign convention: the sample of largest magnitude is real positive.
fn fix_phase(psi: &mut Array1<f64>) {
    let mut best = 0usize;
    let mut mag = 0.0f64;
    for (i, &a) in psi.iter().enumerate() {
        if a.abs() > mag {
            mag = a.abs();
            best = i;
        }
    }
    if psi[best] < 0.0 {
        psi.mapv_inplace(|a| -a);
    }
}

/// Rotate the lowest two eigenstates into maximally left/right localized
/// orbitals, ordered by mean position. Exact for a deep double well and a
/// harmless identity once the levels split by tilt.
pub fn localized_pair(spectrum: &SingleParticleSpectrum) -> Result<(Array1<f64>, Array1<f64>)> {
    if spectrum.n_states() < 2 {
        return Err(CoreError::validation("localized_pair: need at least two states"));
    }
    let dx = spectrum.grid.dx();
    let x = |i: usize| spectrum.grid.point(i);
    let mut xm = [[0.0f64; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            xm[a][b] = spectrum.states[a]
                .iter()
                .zip(spectrum.states[b].iter())
                .enumerate()
                .map(|(i, (p, q))| p * q * x(i) * dx)
                .sum();
        }
    }
    // eigenvectors of the 2x2 position operator
    let tr = xm[0][0] + xm[1][1];
    let det = xm[0][0] * xm[1][1] - xm[0][1] * xm[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let lam = [tr / 2.0 - disc, tr / 2.0 + disc];
    let mut orbitals = Vec::with_capacity(2);
    for &l in &lam {
        let (c0, c1) = if xm[0][1].abs() > 1e-14 {
            (xm[0][1], l - xm[0][0])
        } else if xm[0][0] <= xm[1][1] {
            if l == lam[0] { (1.0, 0.0) } else { (0.0, 1.0) }
        } else if l == lam[0] {
            (0.0, 1.0)
        } else {
            (1.0, 0.0)
        };
        let norm = (c0 * c0 + c1 * c1).sqrt();
        let mut phi = Array1::<f64>::zeros(spectrum.grid.n);
        for i in 0..phi.len() {
            phi[i] = (c0 * spectrum.states[0][i] + c1 * spectrum.states[1][i]) / norm;
        }
        fix_phase(&mut phi);
        orbitals.push(phi);
    }
    let right = orbitals.pop().unwrap();
    let left = orbitals.pop().unwrap();
    Ok((left, right))
}

/// Band structure over the first Brillouin zone [-k_R, k_R).
#[derive(Debug, Clone)]
pub struct BlochBands {
    /// Quasimomenta in units of k_R.
    pub qs: Vec<f64>,
    /// `bands[b][iq]`, energies in E_R, ascending in `b` at each q.
    pub bands: Vec<Vec<f64>>,
}

/// Plane-wave band calculation. The reciprocal lattice vectors are even
/// integers in internal units; a hermitian matrix over `2J+1` waves is
/// diagonalized per quasimomentum via a real symmetric embedding.
pub fn bloch_bands(
    params: &LatticeParams,
    spin: Spin,
    n_q: usize,
    n_bands: usize,
) -> Result<BlochBands> {
    params.validate()?;
    if n_q < 2 || n_bands == 0 {
        return Err(CoreError::validation("bloch_bands: need n_q >= 2 and n_bands >= 1"));
    }
    let j_max = (n_bands / 2 + 8) as isize;
    let dim = (2 * j_max + 1) as usize;
    let a = params.long_phase(spin);
    // Fourier components of V at G = 0, +-2, +-4
    let v0 = -(params.v_short + params.v_long) / 2.0;
    let v2 = nalgebra::Complex::new((2.0 * a).cos(), (2.0 * a).sin()) * (-params.v_long / 4.0);
    let v4 = nalgebra::Complex::new(-params.v_short / 4.0, 0.0);

    let qs: Vec<f64> = (0..n_q).map(|i| -1.0 + 2.0 * i as f64 / n_q as f64).collect();
    let mut bands = vec![vec![0.0f64; n_q]; n_bands];
    for (iq, &q) in qs.iter().enumerate() {
        // hermitian H = Re + i Im -> real symmetric [[Re, -Im], [Im, Re]]
        let mut re = DMatrix::<f64>::zeros(dim, dim);
        let mut im = DMatrix::<f64>::zeros(dim, dim);
        for r in 0..dim {
            let j = r as isize - j_max;
            let k = q + 2.0 * j as f64;
            re[(r, r)] = k * k + v0;
            for (dj, v) in [(1isize, v2), (2, v4)] {
                let c = r as isize + dj;
                if (c as usize) < dim && c >= 0 {
                    let c = c as usize;
                    // element <j | V | j+dj> = vhat(-2 dj) = conj(vhat(2 dj))
                    re[(r, c)] = v.re;
                    im[(r, c)] = -v.im;
                    re[(c, r)] = v.re;
                    im[(c, r)] = v.im;
                }
            }
        }
        let mut big = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
        big.view_mut((0, 0), (dim, dim)).copy_from(&re);
        big.view_mut((dim, dim), (dim, dim)).copy_from(&re);
        big.view_mut((0, dim), (dim, dim)).copy_from(&(-&im));
        big.view_mut((dim, 0), (dim, dim)).copy_from(&im);
        let mut evs: Vec<f64> = big.symmetric_eigen().eigenvalues.iter().cloned().collect();
        evs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // each eigenvalue of the hermitian problem appears twice
        for b in 0..n_bands {
            bands[b][iq] = evs[2 * b];
        }
    }
    Ok(BlochBands { qs, bands })
}

/// Trap frequencies (f_x, f_y, f_z) in Hz for one spin.
///
/// f_x is read from the level structure of the 1D solve: the first gap that
/// is not a near-degenerate doublet splitting. In a double well the lowest
/// two levels are the tunneling/tilt doublet, so the vibrational spacing is
/// the next gap up; in a single well it is the lowest gap itself.
pub fn vibrational_frequencies(
    params: &LatticeParams,
    spin: Spin,
    grid: &Grid,
    consts: &Constants,
) -> Result<(f64, f64, f64)> {
    let spec = solve_stationary(params, spin, grid, Boundary::HardWall, 3)?;
    let d0 = spec.energies[1] - spec.energies[0];
    let d1 = spec.energies[2] - spec.energies[1];
    let f_x = d0.max(d1) * consts.recoil_frequency();
    Ok((f_x, params.f_y_hz, params.f_z_hz))
}

/// Transverse Gaussian ground-state width for trap frequency `f` in Hz, m.
pub fn transverse_sigma(f_hz: f64, consts: &Constants) -> f64 {
    (HBAR / (consts.mass * TAU * f_hz)).sqrt()
}

fn overlap_integral(a: &Array1<f64>, b: &Array1<f64>, dx: f64) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| p * p * q * q * dx).sum()
}

fn quasi1d_interaction(
    phi_a: &Array1<f64>,
    phi_b: &Array1<f64>,
    grid: &Grid,
    params: &LatticeParams,
    consts: &Constants,
    prefactor_pi: f64,
) -> Result<f64> {
    if phi_a.len() != grid.n || phi_b.len() != grid.n {
        return Err(CoreError::domain(
            "interaction_integral: orbital sampling does not match the grid",
        ));
    }
    params.validate()?;
    // 1D overlap in SI (1/m): internal value scaled by k_R
    let i_x = overlap_integral(phi_a, phi_b, grid.dx()) * consts.k_r;
    let eta = |f: f64| 1.0 / ((TAU).sqrt() * transverse_sigma(f, consts));
    let pref = prefactor_pi * PI * HBAR * HBAR * consts.a_s / consts.mass;
    let u_si = pref * i_x * eta(params.f_y_hz) * eta(params.f_z_hz);
    Ok(u_si / consts.e_r)
}

/// Contact interaction energy of two atoms in distinct modes `phi_a`, `phi_b`
/// of the same well, E_R. Transverse directions are integrated out with
/// Gaussian ground states of the `f_y_hz`/`f_z_hz` traps.
pub fn interaction_integral(
    phi_a: &Array1<f64>,
    phi_b: &Array1<f64>,
    grid: &Grid,
    params: &LatticeParams,
    consts: &Constants,
) -> Result<f64> {
    quasi1d_interaction(phi_a, phi_b, grid, params, consts, 8.0)
}

/// Same-mode interaction energy (both atoms in `phi`), E_R. Half the
/// distinct-mode prefactor from bosonic double counting.
pub fn self_interaction_integral(
    phi: &Array1<f64>,
    grid: &Grid,
    params: &LatticeParams,
    consts: &Constants,
) -> Result<f64> {
    quasi1d_interaction(phi, phi, grid, params, consts, 4.0)
}

/// Projection of a (complex) wavefunction onto the spectrum's states.
#[derive(Debug, Clone)]
pub struct BandPopulations {
    pub populations: Vec<f64>,
    /// Norm fraction outside the resolved states.
    pub residual: f64,
}

pub fn band_projection(
    psi_re: &[f64],
    psi_im: &[f64],
    spectrum: &SingleParticleSpectrum,
) -> Result<BandPopulations> {
    if psi_re.len() != spectrum.grid.n || psi_im.len() != spectrum.grid.n {
        return Err(CoreError::domain("band_projection: wavefunction length mismatch"));
    }
    let dx = spectrum.grid.dx();
    let norm: f64 = psi_re
        .iter()
        .zip(psi_im.iter())
        .map(|(r, i)| (r * r + i * i) * dx)
        .sum();
    let mut populations = Vec::with_capacity(spectrum.n_states());
    let mut total = 0.0;
    for phi in &spectrum.states {
        let (mut cr, mut ci) = (0.0f64, 0.0f64);
        for i in 0..phi.len() {
            cr += phi[i] * psi_re[i] * dx;
            ci += phi[i] * psi_im[i] * dx;
        }
        let p = cr * cr + ci * ci;
        populations.push(p);
        total += p;
    }
    Ok(BandPopulations { populations, residual: (norm - total).max(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    fn consts() -> Constants {
        Constants::rb87()
    }

    fn merged(v: f64) -> LatticeParams {
        LatticeParams {
            v_long: v,
            v_short: 0.0,
            theta: 0.0,
            dtheta_spin: 0.0,
            f_y_hz: 45e3,
            f_z_hz: 50e3,
        }
    }

    fn cell_grid(n: usize) -> Grid {
        Grid::new(crate::lattice::WINDOW_START, crate::lattice::WINDOW_START + PI, n).unwrap()
    }

    #[test]
    fn particle_in_a_box_ratios() {
        // flat potential via zero depths is rejected, so use a tiny depth and
        // subtract it; here just use a wide box with the long lattice off and
        // short lattice negligible
        let g = Grid::new(0.0, 2.0, 256).unwrap();
        let p = LatticeParams { v_long: 0.0, v_short: 1e-9, ..merged(0.0) };
        let spec = solve_stationary(&p, Spin::Zero, &g, Boundary::HardWall, 4).unwrap();
        let e1 = (PI / 2.0) * (PI / 2.0);
        for (k, &e) in spec.energies.iter().enumerate() {
            let expect = e1 * ((k + 1) * (k + 1)) as f64;
            assert_relative_eq!(e, expect, max_relative = 1e-6);
        }
    }

    #[test]
    fn orthonormal_states() {
        let spec =
            solve_stationary(&merged(35.0), Spin::Zero, &cell_grid(256), Boundary::HardWall, 6)
                .unwrap();
        assert!(spec.orthonormality_error() < 1e-8);
    }

    #[test]
    fn deep_well_spacing_is_2_sqrt_v_minus_1() {
        // first-order quartic anharmonicity lowers the harmonic 2 sqrt(v)
        // spacing by exactly 1 recoil for a -v cos^2 x well, independent of v
        let v = 40.0;
        let g = Grid::new(-PI / 2.0, PI / 2.0, 512).unwrap();
        let spec = solve_stationary(&merged(v), Spin::Zero, &g, Boundary::HardWall, 3).unwrap();
        let gap = spec.energies[1] - spec.energies[0];
        assert_relative_eq!(gap, 2.0 * v.sqrt() - 1.0, max_relative = 0.02);
        assert!(gap < 2.0 * v.sqrt());
    }

    #[test]
    fn grid_doubling_converged() {
        let a = solve_stationary(&merged(35.0), Spin::Zero, &cell_grid(256), Boundary::HardWall, 4)
            .unwrap();
        let b = solve_stationary(&merged(35.0), Spin::Zero, &cell_grid(512), Boundary::HardWall, 4)
            .unwrap();
        for k in 0..4 {
            assert!((a.energies[k] - b.energies[k]).abs() < 1e-6, "state {k}");
        }
    }

    #[test]
    fn double_well_doublet() {
        let p = LatticeParams {
            v_long: 20.0,
            v_short: 40.0,
            theta: FRAC_PI_4,
            dtheta_spin: 0.0,
            f_y_hz: 100e3,
            f_z_hz: 110e3,
        };
        let spec = solve_stationary(&p, Spin::Zero, &cell_grid(256), Boundary::HardWall, 4).unwrap();
        let d0 = spec.energies[1] - spec.energies[0];
        let d1 = spec.energies[2] - spec.energies[1];
        // tunneling doublet well below the vibrational gap; at these depths
        // the splitting is a few percent of the gap, not zero
        assert!(d0 < 0.1 * d1, "doublet {d0} vs gap {d1}");
        assert!(d0 > 1e-4 * d1, "doublet suspiciously degenerate: {d0}");
        let (l, r) = localized_pair(&spec).unwrap();
        let dx = spec.grid.dx();
        let mean = |phi: &Array1<f64>| -> f64 {
            phi.iter().enumerate().map(|(i, a)| spec.grid.point(i) * a * a * dx).sum()
        };
        assert!(mean(&l) < -1.0 && mean(&r) > -0.6, "L at {}, R at {}", mean(&l), mean(&r));
    }

    #[test]
    fn vibrational_frequency_of_40er_well() {
        let c = consts();
        let g = Grid::new(-PI / 2.0, PI / 2.0, 256).unwrap();
        let (fx, fy, fz) = vibrational_frequencies(&merged(40.0), Spin::Zero, &g, &c).unwrap();
        let oracle = (2.0 * 40.0f64.sqrt() - 1.0) * c.recoil_frequency();
        assert_relative_eq!(fx, oracle, max_relative = 0.02);
        assert_eq!(fy, 45e3);
        assert_eq!(fz, 50e3);
    }

    #[test]
    fn vibrational_frequency_scales_with_depth() {
        // quadrupling a single-well depth: harmonic spacing doubles, and the
        // quartic shift stays a constant -1 E_R, so the ratio follows
        // (4 sqrt(v) - 1) / (2 sqrt(v) - 1) rather than exactly 2
        let c = consts();
        let g = Grid::new(-PI / 2.0, PI / 2.0, 256).unwrap();
        let (f1, _, _) = vibrational_frequencies(&merged(25.0), Spin::Zero, &g, &c).unwrap();
        let (f2, _, _) = vibrational_frequencies(&merged(100.0), Spin::Zero, &g, &c).unwrap();
        let v = 25.0f64;
        let expect = (4.0 * v.sqrt() - 1.0) / (2.0 * v.sqrt() - 1.0);
        assert_relative_eq!(f2 / f1, expect, max_relative = 0.02);
        assert!(f2 / f1 > 2.0);
    }

    #[test]
    fn empty_lattice_bands_fold() {
        let p = LatticeParams { v_long: 1e-9, v_short: 0.0, ..merged(0.0) };
        let bands = bloch_bands(&p, Spin::Zero, 16, 3).unwrap();
        for (iq, &q) in bands.qs.iter().enumerate() {
            let mut free: Vec<f64> = (-3..=3).map(|j| (q + 2.0 * j as f64).powi(2)).collect();
            free.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for b in 0..3 {
                assert_relative_eq!(bands.bands[b][iq], free[b], epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn deep_lattice_band_is_flat() {
        let bands = bloch_bands(&merged(40.0), Spin::Zero, 32, 2).unwrap();
        let b0 = &bands.bands[0];
        let width = b0.iter().cloned().fold(f64::MIN, f64::max)
            - b0.iter().cloned().fold(f64::MAX, f64::min);
        assert!(width < 1e-2, "band 0 width {width}");
        // gap to band 1 is about the harmonic spacing
        let gap = bands.bands[1][0] - b0[0];
        assert_relative_eq!(gap, 2.0 * 40.0f64.sqrt(), max_relative = 0.15);
    }

    #[test]
    fn spin_dependent_phase_shifts_spectrum() {
        let p = LatticeParams {
            v_long: 20.0,
            v_short: 40.0,
            theta: FRAC_PI_4,
            dtheta_spin: 0.15,
            f_y_hz: 100e3,
            f_z_hz: 110e3,
        };
        let s0 = solve_stationary(&p, Spin::Zero, &cell_grid(256), Boundary::HardWall, 2).unwrap();
        let s1 = solve_stationary(&p, Spin::One, &cell_grid(256), Boundary::HardWall, 2).unwrap();
        assert!((s0.energies[0] - s1.energies[0]).abs() > 1e-3);
    }

    #[test]
    fn harmonic_overlap_integral_oracle() {
        // Gaussian ground and first excited states of width sigma:
        // integral |phi0|^2 |phi1|^2 dx = 1 / (2 sqrt(2 pi) sigma),
        // exactly half of the |phi0|^4 self overlap.
        let g = Grid::new(-6.0, 6.0, 512).unwrap();
        let sigma = 0.7f64;
        let mut phi0 = Array1::<f64>::zeros(g.n);
        let mut phi1 = Array1::<f64>::zeros(g.n);
        for i in 0..g.n {
            let x = g.point(i);
            let gauss = (-x * x / (2.0 * sigma * sigma)).exp();
            phi0[i] = (PI * sigma * sigma).powf(-0.25) * gauss;
            phi1[i] = (PI * sigma * sigma).powf(-0.25) * (2.0f64).sqrt() * (x / sigma) * gauss;
        }
        let i01 = overlap_integral(&phi0, &phi1, g.dx());
        let i00 = overlap_integral(&phi0, &phi0, g.dx());
        assert_relative_eq!(i01, 1.0 / (2.0 * TAU.sqrt() * sigma), max_relative = 1e-9);
        assert_relative_eq!(i00, 1.0 / (TAU.sqrt() * sigma), max_relative = 1e-9);
        assert_relative_eq!(i01 / i00, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn interaction_integral_near_target() {
        // calibrated final well lands on the measured interaction energy;
        // periodic boundary matches the calibration geometry
        let c = consts();
        let g = cell_grid(256);
        let p = crate::presets::merged_params();
        let spec = solve_stationary(&p, Spin::Zero, &g, Boundary::Periodic, 2).unwrap();
        let u = interaction_integral(&spec.states[1], &spec.states[0], &g, &p, &c).unwrap();
        let u_hz = c.internal_energy_to_hz(u);
        assert_relative_eq!(u_hz, crate::presets::U_EG_TARGET_HZ, max_relative = 0.02);
    }

    #[test]
    fn self_interaction_is_larger() {
        let c = consts();
        let g = cell_grid(256);
        let p = merged(35.0);
        let spec = solve_stationary(&p, Spin::Zero, &g, Boundary::HardWall, 2).unwrap();
        let u_eg = interaction_integral(&spec.states[0], &spec.states[1], &g, &p, &c).unwrap();
        let u_gg = self_interaction_integral(&spec.states[0], &g, &p, &c).unwrap();
        // same-mode density overlap is twice the g-e overlap, prefactor half
        assert_relative_eq!(u_gg, u_eg, max_relative = 0.2);
    }

    #[test]
    fn band_projection_completeness() {
        let g = cell_grid(256);
        let p = merged(35.0);
        let spec = solve_stationary(&p, Spin::Zero, &g, Boundary::HardWall, 6).unwrap();
        // a state inside the resolved span projects to unit total
        let mut re = vec![0.0; g.n];
        let im = vec![0.0; g.n];
        for i in 0..g.n {
            re[i] = (spec.states[0][i] + spec.states[2][i]) / 2f64.sqrt();
        }
        let bp = band_projection(&re, &im, &spec).unwrap();
        assert_relative_eq!(bp.populations[0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(bp.populations[2], 0.5, epsilon = 1e-9);
        assert!(bp.residual < 1e-9);
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let g = cell_grid(256);
        let p = merged(35.0);
        let spec = solve_stationary(&p, Spin::Zero, &g, Boundary::HardWall, 2).unwrap();
        let short = vec![0.0; 17];
        assert!(band_projection(&short, &short, &spec).is_err());
        let phi = Array1::<f64>::zeros(64);
        assert!(interaction_integral(&phi, &phi, &g, &p, &consts()).is_err());
    }
}

//! Frozen two-particle spectra along a ramp: exact diagonalization of the
//! pair Hamiltonian in a truncated basis of symmetrized products of
//! single-particle eigenstates, with adiabatic label tracking.
//!
//! Basis states are bosonic pairs of (spin, orbital) single-particle levels.
//! The single-particle part is diagonal by construction; the contact term
//! couples pairs through spin-conserving density overlaps. Energies are
//! reported relative to the non-interacting level of two spin-1 atoms in the
//! two lowest spin-1 orbitals, the convention used for level diagrams of the
//! merge.

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{CoreError, Result};
use crate::grid::Boundary;
use crate::lattice::Spin;
use crate::par::{self, Jobs};
use crate::presets::{pair_grid, quasi1d_coupling, DEFAULT_GRID_N};
use crate::ramp::RampSchedule;
use crate::spectral::{localized_pair, solve_stationary, SingleParticleSpectrum};
use crate::units::Constants;

/// Single-particle orbitals kept per spin in the pair basis.
pub const LEVELS_DEFAULT_MODES: usize = 8;
/// Two-particle levels tracked and reported: every pair state built from the
/// lowest doublet of each spin.
pub const LEVELS_DEFAULT_TRACKED: usize = 10;

/// Tracked two-particle energies along a ramp.
#[derive(Debug, Clone)]
pub struct LevelTable {
    /// Sample times, internal units.
    pub times: Vec<f64>,
    /// One label per tracked level, assigned from the dominant basis
    /// component at the first sample and carried by adiabatic overlap.
    pub labels: Vec<String>,
    /// energies[[k, l]]: level l at times[k], relative to the reference, E_R.
    pub energies: Array2<f64>,
    /// Absolute non-interacting reference energy per time, E_R.
    pub reference: Vec<f64>,
    /// Truncation diagnostics; non-empty when a tracked eigenvector leans on
    /// the edge of the orbital basis by more than 1%.
    pub warnings: Vec<String>,
}

/// Two-particle eigenenergies over `times` with default basis sizes.
pub fn eigenenergies_along_ramp(
    schedule: &RampSchedule,
    times: &[f64],
    with_interaction: bool,
) -> Result<LevelTable> {
    eigenenergies_along_ramp_detailed(
        schedule,
        times,
        with_interaction,
        &Constants::rb87(),
        LEVELS_DEFAULT_MODES,
        LEVELS_DEFAULT_TRACKED,
        DEFAULT_GRID_N,
        0,
    )
}

// one diagonalized frame: sorted energies, eigenvectors, orbitals, reference
struct Frame {
    energies: Vec<f64>,
    // column l: eigenvector of the l-th energy in the symmetrized pair basis
    vectors: DMatrix<f64>,
    specs: [SingleParticleSpectrum; 2],
    reference: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn eigenenergies_along_ramp_detailed(
    schedule: &RampSchedule,
    times: &[f64],
    with_interaction: bool,
    consts: &Constants,
    n_modes: usize,
    n_tracked: usize,
    grid_n: usize,
    jobs: Jobs,
) -> Result<LevelTable> {
    if times.is_empty() {
        return Err(CoreError::validation("eigenenergies_along_ramp: no sample times"));
    }
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(CoreError::validation(
                "eigenenergies_along_ramp: times must strictly increase",
            ));
        }
    }
    let slack = 1e-9 * (1.0 + schedule.duration());
    if times[0] < schedule.start_time() - slack
        || times[times.len() - 1] > schedule.end_time() + slack
    {
        return Err(CoreError::validation(
            "eigenenergies_along_ramp: times outside the ramp span",
        ));
    }
    if n_modes < 2 {
        return Err(CoreError::validation("eigenenergies_along_ramp: need at least two orbitals"));
    }
    let dim = 2 * n_modes * (2 * n_modes + 1) / 2;
    if n_tracked == 0 || n_tracked > dim {
        return Err(CoreError::validation(format!(
            "eigenenergies_along_ramp: cannot track {n_tracked} of {dim} basis states"
        )));
    }

    let grid = pair_grid(grid_n)?;
    let frames: Vec<Result<Frame>> = par::map_collect(jobs, times, |&t| {
        let params = schedule.sample(t);
        let spec0 = solve_stationary(&params, Spin::Zero, &grid, Boundary::Periodic, n_modes)?;
        let spec1 = solve_stationary(&params, Spin::One, &grid, Boundary::Periodic, n_modes)?;
        let g = if with_interaction { quasi1d_coupling(&params, consts) } else { 0.0 };
        let reference = spec1.energies[0] + spec1.energies[1];
        let (energies, vectors) = diagonalize_pairs(&spec0, &spec1, g, n_modes)?;
        Ok(Frame { energies, vectors, specs: [spec0, spec1], reference })
    });
    let frames: Vec<Frame> = frames.into_iter().collect::<Result<_>>()?;

    // first frame fixes identities; later frames follow by maximal overlap
    let mut tracked: Vec<usize> = (0..n_tracked).collect();
    let labeling = LabelFrame::build(&frames[0], n_modes)?;
    let labels: Vec<String> = tracked
        .iter()
        .map(|&l| labeling.level_label(&frames[0], l, n_modes))
        .collect();

    let mut energies = Array2::<f64>::zeros((times.len(), n_tracked));
    let mut reference = Vec::with_capacity(times.len());
    let mut warnings = Vec::new();
    for (k, frame) in frames.iter().enumerate() {
        if k > 0 {
            tracked = follow_levels(&frames[k - 1], frame, &tracked, n_modes)?;
        }
        for (slot, &l) in tracked.iter().enumerate() {
            energies[[k, slot]] = frame.energies[l] - frame.reference;
            let leak = edge_weight(&frame.vectors, l, n_modes);
            if leak > 0.01 {
                warnings.push(format!(
                    "level {} at t = {:.4}: {:.1}% weight on the edge of the orbital basis",
                    labels[slot],
                    times[k],
                    100.0 * leak
                ));
            }
        }
        reference.push(frame.reference);
    }

    Ok(LevelTable { times: times.to_vec(), labels, energies, reference, warnings })
}

// combined single-particle index: spin q, orbital a -> q * n_modes + a
#[inline]
fn pair_index(alpha: usize, beta: usize, k: usize) -> usize {
    // alpha <= beta over k combined states
    alpha * k - alpha * (alpha + 1) / 2 + beta
}

#[inline]
fn sym_norm(alpha: usize, beta: usize) -> f64 {
    if alpha == beta {
        0.5
    } else {
        std::f64::consts::FRAC_1_SQRT_2
    }
}

fn diagonalize_pairs(
    spec0: &SingleParticleSpectrum,
    spec1: &SingleParticleSpectrum,
    g: f64,
    m: usize,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let k = 2 * m;
    let dim = k * (k + 1) / 2;
    let grid = &spec0.grid;
    let n = grid.n;
    let dx = grid.dx();
    let specs = [spec0, spec1];
    let eps = |alpha: usize| specs[alpha / m].energies[alpha % m];

    // density-product dot table: dots[q1][q2][(a<=c)][(b<=d)] =
    // integral phi^q1_a phi^q1_c phi^q2_b phi^q2_d dx
    let pp = m * (m + 1) / 2;
    let pidx = |a: usize, c: usize| {
        let (a, c) = if a <= c { (a, c) } else { (c, a) };
        a * m - a * (a + 1) / 2 + c
    };
    let mut prods: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    for q in 0..2 {
        let mut list = vec![vec![0.0; n]; pp];
        for a in 0..m {
            for c in a..m {
                let (sa, sc) = (&specs[q].states[a], &specs[q].states[c]);
                let dst = &mut list[pidx(a, c)];
                for i in 0..n {
                    dst[i] = sa[i] * sc[i];
                }
            }
        }
        prods[q] = list;
    }
    let mut dots = vec![vec![vec![vec![0.0f64; pp]; pp]; 2]; 2];
    for q1 in 0..2 {
        for q2 in 0..2 {
            for i1 in 0..pp {
                for i2 in 0..pp {
                    let s: f64 = prods[q1][i1]
                        .iter()
                        .zip(prods[q2][i2].iter())
                        .map(|(x, y)| x * y)
                        .sum();
                    dots[q1][q2][i1][i2] = s * dx;
                }
            }
        }
    }

    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for alpha in 0..k {
        let (qa, aa) = (alpha / m, alpha % m);
        for beta in alpha..k {
            let (qb, ab) = (beta / m, beta % m);
            let row = pair_index(alpha, beta, k);
            h[(row, row)] += eps(alpha) + eps(beta);
            if g == 0.0 {
                continue;
            }
            for gamma in 0..k {
                let (qg, ag) = (gamma / m, gamma % m);
                for delta in gamma..k {
                    let (qd, ad) = (delta / m, delta % m);
                    let col = pair_index(gamma, delta, k);
                    if col < row {
                        continue;
                    }
                    let mut v = 0.0;
                    if qa == qg && qb == qd {
                        v += dots[qa][qb][pidx(aa, ag)][pidx(ab, ad)];
                    }
                    if qa == qd && qb == qg {
                        v += dots[qa][qb][pidx(aa, ad)][pidx(ab, ag)];
                    }
                    if v != 0.0 {
                        let val = g * sym_norm(alpha, beta) * sym_norm(gamma, delta) * 2.0 * v;
                        h[(row, col)] += val;
                        if col != row {
                            h[(col, row)] += val;
                        }
                    }
                }
            }
        }
    }

    let decomp = nalgebra::SymmetricEigen::new(h);
    if decomp.eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(CoreError::numeric("eigenenergies_along_ramp: non-finite eigenvalue"));
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| decomp.eigenvalues[i].partial_cmp(&decomp.eigenvalues[j]).unwrap());
    let energies: Vec<f64> = order.iter().map(|&i| decomp.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(dim, dim);
    for (l, &i) in order.iter().enumerate() {
        vectors.set_column(l, &decomp.eigenvectors.column(i));
    }
    Ok((energies, vectors))
}

// weight of eigenvector l on pair states touching the highest orbital index
fn edge_weight(vectors: &DMatrix<f64>, l: usize, m: usize) -> f64 {
    let k = 2 * m;
    let mut w = 0.0;
    for alpha in 0..k {
        for beta in alpha..k {
            if alpha % m == m - 1 || beta % m == m - 1 {
                let v = vectors[(pair_index(alpha, beta, k), l)];
                w += v * v;
            }
        }
    }
    w
}

// symmetrized pair overlap matrix from spin-conserving single-particle
// overlaps o[(new, old)]: op[(row_new, col_old)] = <S_new(row)|S_old(col)>
fn pair_overlap_from_single(o: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let k = 2 * m;
    let dim = k * (k + 1) / 2;
    let mut op = DMatrix::<f64>::zeros(dim, dim);
    for alpha in 0..k {
        for beta in alpha..k {
            let row = pair_index(alpha, beta, k);
            let na = sym_norm(alpha, beta);
            for gamma in 0..k {
                for delta in gamma..k {
                    let col = pair_index(gamma, delta, k);
                    let v = o[(alpha, gamma)] * o[(beta, delta)]
                        + o[(alpha, delta)] * o[(beta, gamma)];
                    op[(row, col)] = na * sym_norm(gamma, delta) * 2.0 * v;
                }
            }
        }
    }
    op
}

fn states_overlap(a: &ndarray::Array1<f64>, b: &ndarray::Array1<f64>, dx: f64) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>() * dx
}

// labeling frame: per spin, the lowest doublet rotated into left/right
// localized orbitals, the rest kept as eigenstates. Eigenstates of a
// symmetric double well delocalize, so the raw eigenbasis cannot name wells.
struct LabelFrame {
    // (well side 0 = L, local vibrational index) per labeling orbital
    tags: [Vec<(usize, usize)>; 2],
    // pair overlaps of labeling states (rows) with eigenstates (columns)
    to_eigen: DMatrix<f64>,
}

impl LabelFrame {
    fn build(frame: &Frame, m: usize) -> Result<Self> {
        let grid = &frame.specs[0].grid;
        let dx = grid.dx();
        let barrier = -std::f64::consts::FRAC_PI_4;
        let mut states: [Vec<ndarray::Array1<f64>>; 2] = [Vec::new(), Vec::new()];
        let mut tags: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
        for q in 0..2 {
            let spec = &frame.specs[q];
            let (left, right) = localized_pair(spec)?;
            states[q].push(left);
            states[q].push(right);
            tags[q].push((0, 0));
            tags[q].push((1, 0));
            let mut vib = [1usize, 1usize];
            for a in 2..m {
                let side = usize::from(spec.mean_position(a) >= barrier);
                states[q].push(spec.states[a].clone());
                tags[q].push((side, vib[side]));
                vib[side] += 1;
            }
        }
        let k = 2 * m;
        let mut o = DMatrix::<f64>::zeros(k, k);
        for q in 0..2 {
            for a in 0..m {
                for c in 0..m {
                    o[(q * m + a, q * m + c)] =
                        states_overlap(&states[q][a], &frame.specs[q].states[c], dx);
                }
            }
        }
        Ok(LabelFrame { tags, to_eigen: pair_overlap_from_single(&o, m) })
    }

    fn particle_tag(&self, alpha: usize, m: usize) -> (String, usize) {
        let (q, a) = (alpha / m, alpha % m);
        let (well, vib) = self.tags[q][a];
        let name = ["L", "R"][well];
        let tag = if vib == 0 {
            format!("{q}_{name}")
        } else {
            format!("{q}_{name}{vib}")
        };
        (tag, well)
    }

    // name level l of the frame after its dominant localized component
    fn level_label(&self, frame: &Frame, l: usize, m: usize) -> String {
        let comp = &self.to_eigen * frame.vectors.column(l);
        let k = 2 * m;
        let (mut best, mut best_w) = ((0, 0), -1.0);
        for alpha in 0..k {
            for beta in alpha..k {
                let v = comp[pair_index(alpha, beta, k)];
                if v * v > best_w {
                    best_w = v * v;
                    best = (alpha, beta);
                }
            }
        }
        let mut tags = [self.particle_tag(best.0, m), self.particle_tag(best.1, m)];
        // left well first, matching the usual reading order of the pair
        tags.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
        format!("|{},{}>", tags[0].0, tags[1].0)
    }
}

// reassign tracked slots by maximal pair-basis overlap with the previous frame
fn follow_levels(prev: &Frame, cur: &Frame, tracked: &[usize], m: usize) -> Result<Vec<usize>> {
    let k = 2 * m;
    let dim = k * (k + 1) / 2;
    let dx = prev.specs[0].grid.dx();

    let mut o = DMatrix::<f64>::zeros(k, k);
    for q in 0..2 {
        for a in 0..m {
            for c in 0..m {
                o[(q * m + a, q * m + c)] =
                    states_overlap(&cur.specs[q].states[a], &prev.specs[q].states[c], dx);
            }
        }
    }
    let op = pair_overlap_from_single(&o, m);

    let mut assigned = vec![false; dim];
    let mut out = Vec::with_capacity(tracked.len());
    for &old in tracked {
        let target = &op * prev.vectors.column(old);
        let (mut best, mut best_s) = (usize::MAX, -1.0);
        for l in 0..dim {
            if assigned[l] {
                continue;
            }
            let s = cur.vectors.column(l).dot(&target).abs();
            if s > best_s {
                best_s = s;
                best = l;
            }
        }
        if best == usize::MAX {
            return Err(CoreError::numeric("eigenenergies_along_ramp: level tracking exhausted"));
        }
        assigned[best] = true;
        out.push(best);
    }
    Ok(out)
}

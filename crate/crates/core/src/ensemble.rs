//! Ensemble statistics and detection: lattice occupancy, magnetic field
//! noise, reduction of per-site outcomes into measured populations, and the
//! synthetic band-map image.
//!
//! The real experiment averages over thousands of lattice sites per shot.
//! Sites differ in what they hold (a pair, a lone atom, nothing) and in the
//! local field they see; a shot-to-shot field fluctuation rides on top,
//! common to every site. Both field terms shift only the |1> Zeeman level,
//! and both atoms of a site see the same field, which is why the spin-aligned
//! and exchange-symmetric states the swap lives in are insensitive to them
//! while single-spin coherences dephase.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{CoreError, Result};
use crate::sequence::{MeasurementRecord, RecordMeta, StepStamp};

/// Default shot-to-shot field fluctuation, expressed as the rms detuning of
/// the |0> <-> |1> splitting: sigma = 1.5 kHz makes a single-spin Ramsey
/// coherence decay to 1/e at sqrt(2)/(2 pi sigma) = 150 us.
pub const DEFAULT_SHOT_SIGMA_HZ: f64 = 1500.0;

/// Default static site-to-site gradient width, Hz per site. An
/// order-of-magnitude placeholder exposed through configuration; the echo
/// preset carries its own calibrated value.
pub const DEFAULT_GRADIENT_SIGMA_HZ: f64 = 300.0;

/// Nominal bias field, mT; metadata only, dynamics take detunings directly.
pub const DEFAULT_B0_MT: f64 = 4.85;

/// How sites are filled, site by site, independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancyModel {
    /// Probability a site holds a ready pair (one atom per well).
    pub p_paired_site: f64,
    /// Probability a site holds exactly one atom, in either well.
    pub p_single: f64,
}

impl OccupancyModel {
    pub fn all_paired() -> Self {
        OccupancyModel { p_paired_site: 1.0, p_single: 0.0 }
    }

    pub fn p_empty(&self) -> f64 {
        1.0 - self.p_paired_site - self.p_single
    }

    /// Fraction of atoms that sit alone: singles / (2 pairs + singles).
    pub fn unpaired_atom_fraction(&self) -> f64 {
        let denom = 2.0 * self.p_paired_site + self.p_single;
        if denom == 0.0 {
            0.0
        } else {
            self.p_single / denom
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| p.is_finite() && (0.0..=1.0).contains(&p);
        if !ok(self.p_paired_site) || !ok(self.p_single) || self.p_paired_site + self.p_single > 1.0 + 1e-12 {
            return Err(CoreError::domain(
                "OccupancyModel: probabilities must lie in [0, 1] and sum to at most 1",
            ));
        }
        Ok(())
    }
}

/// What one site holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteKind {
    Paired,
    SingleLeft,
    SingleRight,
    Empty,
}

/// Draw site contents independently. Per site: one uniform draw picks the
/// category, and a lone atom costs one extra draw for its well. The order is
/// part of the reproducibility contract.
pub fn sample_occupancy<R: Rng>(
    model: &OccupancyModel,
    n_sites: usize,
    rng: &mut R,
) -> Result<Vec<SiteKind>> {
    model.validate()?;
    let mut sites = Vec::with_capacity(n_sites);
    for _ in 0..n_sites {
        let u: f64 = rng.gen();
        let kind = if u < model.p_paired_site {
            SiteKind::Paired
        } else if u < model.p_paired_site + model.p_single {
            if rng.gen::<bool>() {
                SiteKind::SingleLeft
            } else {
                SiteKind::SingleRight
            }
        } else {
            SiteKind::Empty
        };
        sites.push(kind);
    }
    Ok(sites)
}

/// Magnetic field noise, parameterized directly by the detuning it imposes
/// on the |0> <-> |1> splitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldNoiseModel {
    /// Rms of the common shot-to-shot detuning, Hz.
    pub shot_sigma_hz: f64,
    /// Rms of the static site-to-site detuning, Hz per site, Gaussian over
    /// sites and frozen within a shot.
    pub gradient_sigma_hz: f64,
}

impl FieldNoiseModel {
    /// No noise at all.
    pub fn quiet() -> Self {
        FieldNoiseModel { shot_sigma_hz: 0.0, gradient_sigma_hz: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.shot_sigma_hz.is_finite()
            || self.shot_sigma_hz < 0.0
            || !self.gradient_sigma_hz.is_finite()
            || self.gradient_sigma_hz < 0.0
        {
            return Err(CoreError::domain("FieldNoiseModel: sigmas must be finite and >= 0"));
        }
        Ok(())
    }
}

impl Default for FieldNoiseModel {
    fn default() -> Self {
        FieldNoiseModel {
            shot_sigma_hz: DEFAULT_SHOT_SIGMA_HZ,
            gradient_sigma_hz: DEFAULT_GRADIENT_SIGMA_HZ,
        }
    }
}

/// One realization of the field noise.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldNoiseDraw {
    /// Common detuning of this shot, Hz.
    pub shot_hz: f64,
    /// Static per-site detunings, Hz.
    pub site_hz: Vec<f64>,
}

impl FieldNoiseDraw {
    /// Total |1>-level detuning at a site: shot plus gradient, common to
    /// both atoms of the site.
    pub fn detuning_at(&self, site: usize) -> f64 {
        self.shot_hz + self.site_hz[site]
    }
}

/// One shot draw, then one draw per site, always in that order and always
/// consuming the same number of draws regardless of the sigmas, so seeds
/// stay aligned across noise configurations.
pub fn sample_field_noise<R: Rng>(
    model: &FieldNoiseModel,
    n_sites: usize,
    rng: &mut R,
) -> FieldNoiseDraw {
    let shot: f64 = rng.sample::<f64, _>(StandardNormal) * model.shot_sigma_hz;
    let site_hz = (0..n_sites)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * model.gradient_sigma_hz)
        .collect();
    FieldNoiseDraw { shot_hz: shot, site_hz }
}

/// Measured content of one site, in atom counts: `populations[spin][band]`
/// sums to the number of atoms mapped into the two bands, `residual` counts
/// atoms outside them, `atoms` is the total the site contributes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteOutcome {
    pub populations: [[f64; 2]; 2],
    pub residual: f64,
    pub atoms: f64,
}

impl SiteOutcome {
    pub fn empty() -> Self {
        SiteOutcome { populations: [[0.0; 2]; 2], residual: 0.0, atoms: 0.0 }
    }
}

/// Reduce per-site outcomes into one record of atom fractions. Sites are
/// summed in slice order (the reduction is associative only up to floating
/// point, so the order is fixed) and normalized by the total atom number; an
/// empty ensemble yields an all-zero record.
pub fn measure_populations(
    outcomes: &[SiteOutcome],
    meta: RecordMeta,
    time_us: f64,
    timestamps: Vec<StepStamp>,
) -> Result<MeasurementRecord> {
    let mut populations = [[0.0f64; 2]; 2];
    let mut residual = 0.0;
    let mut atoms = 0.0;
    for o in outcomes {
        if o.atoms < 0.0 || o.residual < -1e-12 {
            return Err(CoreError::domain("SiteOutcome: negative atom content"));
        }
        for q in 0..2 {
            for band in 0..2 {
                populations[q][band] += o.populations[q][band];
            }
        }
        residual += o.residual;
        atoms += o.atoms;
    }
    if atoms > 0.0 {
        for row in populations.iter_mut() {
            for p in row.iter_mut() {
                *p /= atoms;
            }
        }
        residual /= atoms;
    }
    Ok(MeasurementRecord { time_us, populations, residual, timestamps, meta })
}

/// Momentum bins per Brillouin zone half in the synthetic image.
const BINS_PER_HALF_ZONE: usize = 16;
/// Columns across the image: [-2, 2) recoil momenta.
const IMAGE_W: usize = 4 * BINS_PER_HALF_ZONE;
/// Rows above and below the spin-0 stripe.
const ROW_MARGIN: usize = 8;

/// Idealized band-map image: intensity over (momentum, spin-separation).
#[derive(Debug, Clone)]
pub struct SyntheticImage {
    /// `intensity[[row, col]]`, arbitrary units equal to atom fraction.
    pub intensity: Array2<f64>,
    /// Column edges in recoil momenta, `IMAGE_W + 1` values.
    pub k_edges: Vec<f64>,
    /// Row index carrying each spin component.
    pub row_of_spin: [usize; 2],
}

impl SyntheticImage {
    pub fn total_intensity(&self) -> f64 {
        self.intensity.iter().sum()
    }

    /// 8-bit binary PGM, intensity scaled so the brightest pixel is 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (h, w) = self.intensity.dim();
        let max = self.intensity.iter().cloned().fold(0.0f64, f64::max);
        let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
        out.reserve(w * h);
        for v in self.intensity.iter() {
            let byte = if max > 0.0 {
                (v / max * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            };
            out.push(byte);
        }
        out
    }

    /// Momentum histogram per spin as CSV: `k_lo,k_hi,spin0,spin1`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k_lo,k_hi,spin0,spin1\n");
        for col in 0..self.intensity.ncols() {
            let i0 = self.intensity[[self.row_of_spin[0], col]];
            let i1 = self.intensity[[self.row_of_spin[1], col]];
            s.push_str(&format!(
                "{:.6},{:.6},{:.9},{:.9}\n",
                self.k_edges[col],
                self.k_edges[col + 1],
                i0,
                i1
            ));
        }
        s
    }
}

/// Render a record into the image a band-mapped absorption picture would
/// show: the ground band fills the first Brillouin zone, the excited band
/// the two halves of the second, each spread uniformly over its zone; a
/// field-gradient pulse during time of flight displaces |1> atoms by
/// `gradient_displacement` rows while |0> stays put. Total intensity equals
/// the total mapped population to machine precision.
pub fn render_image(record: &MeasurementRecord, gradient_displacement: usize) -> SyntheticImage {
    let h = 2 * ROW_MARGIN + gradient_displacement + 1;
    let row_of_spin = [ROW_MARGIN, ROW_MARGIN + gradient_displacement];
    let mut intensity = Array2::zeros((h, IMAGE_W));
    // band 0: columns within |k| < 1; band 1: 1 <= |k| < 2
    let zone_cols: [Vec<usize>; 2] = [
        (BINS_PER_HALF_ZONE..3 * BINS_PER_HALF_ZONE).collect(),
        (0..BINS_PER_HALF_ZONE).chain(3 * BINS_PER_HALF_ZONE..IMAGE_W).collect(),
    ];
    for spin in 0..2 {
        let row = row_of_spin[spin];
        for band in 0..2 {
            let p = record.populations[spin][band];
            let cols = &zone_cols[band];
            let per = p / cols.len() as f64;
            for &c in cols {
                intensity[[row, c]] += per;
            }
        }
    }
    let k_edges = (0..=IMAGE_W)
        .map(|i| -2.0 + 4.0 * i as f64 / IMAGE_W as f64)
        .collect();
    SyntheticImage { intensity, k_edges, row_of_spin }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn meta() -> RecordMeta {
        RecordMeta {
            seed: 0,
            shot_detuning_hz: 0.0,
            n_paired: 1,
            n_single: 0,
            n_empty: 0,
        }
    }

    fn record(populations: [[f64; 2]; 2]) -> MeasurementRecord {
        MeasurementRecord {
            time_us: 0.0,
            populations,
            residual: 0.0,
            timestamps: vec![],
            meta: meta(),
        }
    }

    #[test]
    fn occupancy_model_validates_probabilities() {
        assert!(OccupancyModel { p_paired_site: -0.1, p_single: 0.5 }.validate().is_err());
        assert!(OccupancyModel { p_paired_site: 0.7, p_single: 0.5 }.validate().is_err());
        assert!(OccupancyModel { p_paired_site: 0.7, p_single: 0.3 }.validate().is_ok());
    }

    #[test]
    fn unpaired_fraction_follows_the_atom_count() {
        let m = OccupancyModel { p_paired_site: 0.5, p_single: 0.5 };
        assert!((m.unpaired_atom_fraction() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(OccupancyModel::all_paired().unpaired_atom_fraction(), 0.0);
        let empty = OccupancyModel { p_paired_site: 0.0, p_single: 0.0 };
        assert_eq!(empty.unpaired_atom_fraction(), 0.0);
        assert!((empty.p_empty() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_model_yields_empty_sites() {
        let m = OccupancyModel { p_paired_site: 0.0, p_single: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sites = sample_occupancy(&m, 100, &mut rng).unwrap();
        assert!(sites.iter().all(|k| *k == SiteKind::Empty));
    }

    #[test]
    fn sampled_unpaired_fraction_converges() {
        let m = OccupancyModel { p_paired_site: 0.5, p_single: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sites = sample_occupancy(&m, 10_000, &mut rng).unwrap();
        let pairs = sites.iter().filter(|k| **k == SiteKind::Paired).count() as f64;
        let singles = sites
            .iter()
            .filter(|k| matches!(k, SiteKind::SingleLeft | SiteKind::SingleRight))
            .count() as f64;
        let frac = singles / (2.0 * pairs + singles);
        assert!(
            (frac - 1.0 / 3.0).abs() < 0.02,
            "unpaired fraction {frac} outside 1/3 +- 0.02"
        );
        // lone atoms land on either side
        assert!(sites.iter().any(|k| *k == SiteKind::SingleLeft));
        assert!(sites.iter().any(|k| *k == SiteKind::SingleRight));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let m = OccupancyModel { p_paired_site: 0.4, p_single: 0.4 };
        let a = sample_occupancy(&m, 500, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_occupancy(&m, 500, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let n = FieldNoiseModel::default();
        let x = sample_field_noise(&n, 50, &mut ChaCha8Rng::seed_from_u64(3));
        let y = sample_field_noise(&n, 50, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(x, y);
    }

    #[test]
    fn quiet_noise_is_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = sample_field_noise(&FieldNoiseModel::quiet(), 20, &mut rng);
        assert_eq!(d.shot_hz, 0.0);
        assert!(d.site_hz.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sigma_scales_draws_without_consuming_extra_randomness() {
        // same seed, different sigmas: identical underlying normals
        let a = sample_field_noise(
            &FieldNoiseModel { shot_sigma_hz: 1000.0, gradient_sigma_hz: 100.0 },
            5,
            &mut ChaCha8Rng::seed_from_u64(11),
        );
        let b = sample_field_noise(
            &FieldNoiseModel { shot_sigma_hz: 2000.0, gradient_sigma_hz: 300.0 },
            5,
            &mut ChaCha8Rng::seed_from_u64(11),
        );
        assert!((b.shot_hz - 2.0 * a.shot_hz).abs() < 1e-9);
        for i in 0..5 {
            assert!((b.site_hz[i] - 3.0 * a.site_hz[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn shot_noise_reproduces_the_ramsey_envelope() {
        // E(t) = <cos(2 pi delta t)> = exp(-(2 pi sigma t)^2 / 2); at the
        // default sigma the 1/e point sits at 150 us
        let model = FieldNoiseModel {
            shot_sigma_hz: DEFAULT_SHOT_SIGMA_HZ,
            gradient_sigma_hz: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = 150.05e-6;
        let n = 8000;
        let mean: f64 = (0..n)
            .map(|_| {
                let d = sample_field_noise(&model, 0, &mut rng);
                (std::f64::consts::TAU * d.shot_hz * t).cos()
            })
            .sum::<f64>()
            / n as f64;
        let expected = (-1.0f64).exp();
        assert!(
            (mean - expected).abs() < 0.04,
            "Ramsey contrast {mean} vs {expected}"
        );
    }

    #[test]
    fn reduction_normalizes_by_atom_number() {
        // ideal pair just after the merge: spin 0 excited, spin 1 ground
        let pair = SiteOutcome {
            populations: [[0.0, 1.0], [1.0, 0.0]],
            residual: 0.0,
            atoms: 2.0,
        };
        let r = measure_populations(&[pair], meta(), 0.0, vec![]).unwrap();
        assert!((r.populations[0][1] - 0.5).abs() < 1e-15);
        assert!((r.populations[1][0] - 0.5).abs() < 1e-15);
        assert!((r.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_ensemble_reduces_to_zero() {
        let r = measure_populations(&[SiteOutcome::empty(); 3], meta(), 0.0, vec![]).unwrap();
        assert_eq!(r.total(), 0.0);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn reduction_is_linear_in_atom_weight() {
        let a = SiteOutcome { populations: [[0.0, 2.0], [0.0, 0.0]], residual: 0.0, atoms: 2.0 };
        let b = SiteOutcome { populations: [[0.0, 0.0], [1.0, 0.0]], residual: 0.0, atoms: 1.0 };
        let r = measure_populations(&[a, b], meta(), 0.0, vec![]).unwrap();
        // 2 of 3 atoms excited spin 0, 1 of 3 ground spin 1
        assert!((r.populations[0][1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.populations[1][0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn image_conserves_total_intensity() {
        let r = record([[0.1, 0.3], [0.35, 0.2]]);
        let img = render_image(&r, 6);
        assert!((img.total_intensity() - r.total()).abs() < 1e-9);
    }

    #[test]
    fn image_separates_bands_and_spins() {
        let r = record([[0.0, 0.5], [0.5, 0.0]]);
        let img = render_image(&r, 6);
        assert_eq!(img.row_of_spin, [8, 14]);
        // spin 0 is excited: its row carries intensity only outside the
        // first zone; spin 1 is ground: only inside
        for col in 0..IMAGE_W {
            let k = 0.5 * (img.k_edges[col] + img.k_edges[col + 1]);
            let i0 = img.intensity[[8, col]];
            let i1 = img.intensity[[14, col]];
            if k.abs() < 1.0 {
                assert_eq!(i0, 0.0);
                assert!(i1 > 0.0);
            } else {
                assert!(i0 > 0.0);
                assert_eq!(i1, 0.0);
            }
        }
        // no displacement collapses both spins onto one row
        let flat = render_image(&r, 0);
        assert_eq!(flat.row_of_spin, [8, 8]);
        assert!((flat.total_intensity() - r.total()).abs() < 1e-9);
    }

    #[test]
    fn pgm_and_csv_have_the_documented_shape() {
        let r = record([[0.25, 0.25], [0.25, 0.25]]);
        let img = render_image(&r, 6);
        let pgm = img.to_pgm();
        let header = b"P5\n64 23\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(pgm.len(), header.len() + 64 * 23);
        assert_eq!(*pgm.iter().max().unwrap(), 255u8);

        let csv = img.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k_lo,k_hi,spin0,spin1");
        assert_eq!(lines.len(), 1 + IMAGE_W);
        // the csv collapse keeps the full intensity too
        let total: f64 = lines[1..]
            .iter()
            .flat_map(|l| l.split(',').skip(2).map(|v| v.parse::<f64>().unwrap()))
            .sum();
        assert!((total - r.total()).abs() < 1e-6);
    }
}

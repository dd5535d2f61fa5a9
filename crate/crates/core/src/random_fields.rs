//! Seeded sampling of initial pore-pressure profiles and consolidation
//! coefficients.
//!
//! All randomness comes from `ChaCha8Rng` seeded with a `u64`. Inside
//! [`CaseSampler::sample`] the draw order is fixed: `cv` first, then the
//! constant pressure (uniform kind) or the field mean (GRF kind), then the
//! standard-normal vector of the field, one value per sensor in depth order.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::consolidation::{sensor_depths, ConsolidationCase};
use crate::error::{Error, Result};

/// Name of the generator recorded in dataset manifests.
pub const GENERATOR_NAME: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64)";

/// Jitter retries after the first factorization attempt, each ×10.
const JITTER_RETRIES: usize = 3;

/// Squared-exponential Gaussian random field `C(z1, z2) = σ²·exp(-|z1-z2|²/l²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfSpec {
    /// Field mean, Pa.
    pub mean: f64,
    /// σ², Pa².
    pub variance: f64,
    /// Correlation length in normalized depth units.
    pub length_scale: f64,
    /// Added to the covariance diagonal, Pa².
    pub jitter: f64,
}

impl GrfSpec {
    pub fn new(mean: f64, variance: f64, length_scale: f64) -> Self {
        GrfSpec {
            mean,
            variance,
            length_scale,
            jitter: 1e-8 * variance,
        }
    }

    /// σ² = 1000 kPa² and l = 0.5.
    pub fn paper_default(mean: f64) -> Self {
        Self::new(mean, 1e9, 0.5)
    }

    pub fn with_length_scale(self, length_scale: f64) -> Self {
        GrfSpec { length_scale, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0) {
            return Err(Error::validation(format!("GRF variance must be positive, got {}", self.variance)));
        }
        if !(self.length_scale > 0.0) {
            return Err(Error::validation(format!(
                "GRF length scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(self.jitter >= 0.0) {
            return Err(Error::validation("GRF jitter must be non-negative"));
        }
        Ok(())
    }
}

/// Ranges for the random case parameters. Pressures in Pa, `cv` in m²/year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingRanges {
    pub u0_uniform_range: (f64, f64),
    pub mean_range: (f64, f64),
    pub cv_range: (f64, f64),
}

impl Default for SamplingRanges {
    /// Uniform and mean pressures in 10–20 kPa, `cv` in [0.3, 1.0].
    fn default() -> Self {
        SamplingRanges {
            u0_uniform_range: (10e3, 20e3),
            mean_range: (10e3, 20e3),
            cv_range: (0.3, 1.0),
        }
    }
}

impl SamplingRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("u0_uniform_range", self.u0_uniform_range),
            ("mean_range", self.mean_range),
            ("cv_range", self.cv_range),
        ] {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::validation(format!("{name}: need low <= high, got [{lo}, {hi}]")));
            }
        }
        if !(self.cv_range.0 > 0.0) {
            return Err(Error::validation("cv_range must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Uniform,
    Grf,
}

/// Covariance matrix of the field at `depths`, jitter included on the diagonal.
pub fn covariance_matrix(depths: &[f64], spec: &GrfSpec) -> DMatrix<f64> {
    let n = depths.len();
    let inv_l2 = 1.0 / (spec.length_scale * spec.length_scale);
    DMatrix::from_fn(n, n, |i, j| {
        let d = depths[i] - depths[j];
        let c = spec.variance * (-d * d * inv_l2).exp();
        if i == j {
            c + spec.jitter
        } else {
            c
        }
    })
}

/// Cached lower Cholesky factor for repeated draws on one depth grid.
#[derive(Debug, Clone)]
pub struct GrfSampler {
    factor: DMatrix<f64>,
    jitter_used: f64,
}

impl GrfSampler {
    pub fn new(depths: &[f64], spec: &GrfSpec) -> Result<Self> {
        spec.validate()?;
        if depths.iter().any(|z| !(0.0..=1.0).contains(z)) {
            return Err(Error::validation("GRF depths must lie in [0, 1]"));
        }
        let base = covariance_matrix(depths, &GrfSpec { jitter: 0.0, ..*spec });
        let mut jitter = spec.jitter;
        let step_base = if spec.jitter > 0.0 { spec.jitter } else { 1e-8 * spec.variance };
        for attempt in 0..=JITTER_RETRIES {
            if attempt > 0 {
                jitter = step_base * 10f64.powi(attempt as i32);
            }
            let mut c = base.clone();
            for i in 0..c.nrows() {
                c[(i, i)] += jitter;
            }
            if let Some(chol) = c.cholesky() {
                return Ok(GrfSampler {
                    factor: chol.unpack(),
                    jitter_used: jitter,
                });
            }
        }
        Err(Error::Factorization { jitter })
    }

    pub fn len(&self) -> usize {
        self.factor.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.factor.nrows() == 0
    }

    /// Diagonal jitter that made the covariance factorizable.
    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    /// `mean + L·ξ` with `ξ ~ N(0, I)` drawn from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> Vec<f64> {
        let n = self.len();
        let xi = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let field = &self.factor * xi;
        field.iter().map(|v| mean + v).collect()
    }

    pub fn sample_seeded(&self, mean: f64, seed: u64) -> Vec<f64> {
        self.sample(mean, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// One field realization at `depths`; deterministic per `(seed, depths, spec)`.
pub fn sample_grf(depths: &[f64], spec: &GrfSpec, seed: u64) -> Result<Vec<f64>> {
    Ok(GrfSampler::new(depths, spec)?.sample_seeded(spec.mean, seed))
}

/// `lo + (hi - lo)·U[0, 1)`, exactly `lo` for a collapsed range.
pub(crate) fn draw_uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    let u: f64 = rng.gen();
    if lo == hi {
        lo
    } else {
        lo + (hi - lo) * u
    }
}

/// Draws whole cases on a fixed sensor grid, reusing one covariance factor.
#[derive(Debug, Clone)]
pub struct CaseSampler {
    ranges: SamplingRanges,
    depths: Vec<f64>,
    grf: GrfSampler,
}

impl CaseSampler {
    pub fn new(ranges: SamplingRanges, grf_spec: &GrfSpec, m: usize) -> Result<Self> {
        ranges.validate()?;
        let depths = sensor_depths(m)?;
        let grf = GrfSampler::new(&depths, grf_spec)?;
        Ok(CaseSampler { ranges, depths, grf })
    }

    pub fn ranges(&self) -> &SamplingRanges {
        &self.ranges
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, kind: ProfileKind, rng: &mut R) -> ConsolidationCase {
        let cv = draw_uniform(rng, self.ranges.cv_range);
        let u0 = match kind {
            ProfileKind::Uniform => vec![draw_uniform(rng, self.ranges.u0_uniform_range); self.depths.len()],
            ProfileKind::Grf => {
                let mean = draw_uniform(rng, self.ranges.mean_range);
                self.grf.sample(mean, rng)
            }
        };
        ConsolidationCase {
            cv,
            h_dr: 1.0,
            u0,
            sensor_depths: self.depths.clone(),
        }
    }

    pub fn sample(&self, kind: ProfileKind, seed: u64) -> ConsolidationCase {
        self.sample_with(kind, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// Draws one case with `m` sensors. See the module docs for the draw order.
pub fn sample_case(ranges: &SamplingRanges, kind: ProfileKind, grf_spec: &GrfSpec, m: usize, seed: u64) -> Result<ConsolidationCase> {
    Ok(CaseSampler::new(*ranges, grf_spec, m)?.sample(kind, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Uniform};

    #[test]
    fn covariance_entries() {
        let spec = GrfSpec {
            mean: 0.0,
            variance: 1.0,
            length_scale: 0.5,
            jitter: 0.0,
        };
        let c = covariance_matrix(&[0.1, 0.1, 0.6], &spec);
        assert_eq!(c[(0, 1)], 1.0);
        assert!((c[(0, 2)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((c[(0, 2)] - 0.367879).abs() < 1e-6);
        assert_eq!(c, c.transpose());
    }

    #[test]
    fn paper_grid_factorizes_with_default_jitter() {
        let depths = sensor_depths(100).unwrap();
        let spec = GrfSpec::paper_default(15e3);
        assert_eq!(spec.jitter, 1e-8 * 1e9);
        let sampler = GrfSampler::new(&depths, &spec).unwrap();
        assert_eq!(sampler.jitter_used(), spec.jitter);
    }

    #[test]
    fn degenerate_variance_gives_constant_profile() {
        let depths = sensor_depths(50).unwrap();
        let spec = GrfSpec::new(12e3, 1e-12, 0.5);
        let p = sample_grf(&depths, &spec, 3).unwrap();
        assert!(p.iter().all(|v| (v - 12e3).abs() < 1e-3));
    }

    #[test]
    fn seeded_draws_repeat() {
        let depths = sensor_depths(100).unwrap();
        let spec = GrfSpec::paper_default(15e3);
        assert_eq!(sample_grf(&depths, &spec, 42).unwrap(), sample_grf(&depths, &spec, 42).unwrap());
        assert_ne!(sample_grf(&depths, &spec, 42).unwrap(), sample_grf(&depths, &spec, 43).unwrap());
    }

    #[test]
    fn empirical_covariance_matches_kernel() {
        let depths = sensor_depths(11).unwrap();
        let spec = GrfSpec::paper_default(0.0);
        let sampler = GrfSampler::new(&depths, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let (i, j) = (2, 7);
        let (mut si, mut sj, mut sij) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let p = sampler.sample(0.0, &mut rng);
            si += p[i];
            sj += p[j];
            sij += p[i] * p[j];
        }
        let nf = n as f64;
        let cov = sij / nf - (si / nf) * (sj / nf);
        let want = 1e9 * (-(0.5f64 * 0.5) / 0.25).exp();
        assert!((cov - want).abs() < 0.05 * want, "cov {cov} vs {want}");
    }

    #[test]
    fn cv_draws_are_uniform_by_ks() {
        let sampler = CaseSampler::new(SamplingRanges::default(), &GrfSpec::paper_default(15e3), 10).unwrap();
        let mut cvs: Vec<f64> = (0..10_000).map(|s| sampler.sample(ProfileKind::Uniform, s).cv).collect();
        cvs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let dist = Uniform::new(0.3, 1.0).unwrap();
        let n = cvs.len() as f64;
        let d = cvs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let f = dist.cdf(x);
                (f - k as f64 / n).abs().max((k as f64 + 1.0) / n - f)
            })
            .fold(0.0f64, f64::max);
        // Asymptotic 1% critical value.
        assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");
    }

    #[test]
    fn collapsed_ranges_are_deterministic() {
        let ranges = SamplingRanges {
            u0_uniform_range: (10e3, 10e3),
            mean_range: (10e3, 10e3),
            cv_range: (0.5, 0.5),
        };
        let a = sample_case(&ranges, ProfileKind::Uniform, &GrfSpec::paper_default(0.0), 100, 1).unwrap();
        let b = sample_case(&ranges, ProfileKind::Uniform, &GrfSpec::paper_default(0.0), 100, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cv, 0.5);
        assert!(a.u0.iter().all(|&u| u == 10e3));
    }

    #[test]
    fn paper_defaults_allow_negative_pressure() {
        let sampler = CaseSampler::new(SamplingRanges::default(), &GrfSpec::paper_default(0.0), 100).unwrap();
        let negatives = (0..200)
            .map(|s| sampler.sample(ProfileKind::Grf, s))
            .filter(|c| c.u0.iter().any(|&u| u < 0.0))
            .count();
        assert!(negatives > 0);
    }

    #[test]
    fn longer_correlation_is_smoother() {
        let depths = sensor_depths(100).unwrap();
        let rough = GrfSampler::new(&depths, &GrfSpec::paper_default(0.0).with_length_scale(0.2)).unwrap();
        let smooth = GrfSampler::new(&depths, &GrfSpec::paper_default(0.0).with_length_scale(0.8)).unwrap();
        let tv = |p: &[f64]| p.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (p.len() - 1) as f64;
        let (mut r, mut s) = (0.0, 0.0);
        for seed in 0..1000 {
            r += tv(&rough.sample_seeded(0.0, seed));
            s += tv(&smooth.sample_seeded(0.0, seed));
        }
        assert!(s < r);
    }

    #[test]
    fn invalid_specs() {
        let depths = sensor_depths(5).unwrap();
        assert!(GrfSampler::new(&depths, &GrfSpec::new(0.0, 0.0, 0.5)).is_err());
        assert!(GrfSampler::new(&depths, &GrfSpec::new(0.0, 1.0, 0.0)).is_err());
        assert!(GrfSampler::new(&[0.0, 1.5], &GrfSpec::new(0.0, 1.0, 0.5)).is_err());
        let bad = SamplingRanges {
            cv_range: (1.0, 0.3),
            ..Default::default()
        };
        assert!(CaseSampler::new(bad, &GrfSpec::paper_default(0.0), 10).is_err());
    }
}

//! Single-drainage 1-D consolidation: problem definition, the classical
//! Fourier-series solution for a uniform initial pressure, and the
//! finite-difference operator used by the numerical integrators.
//!
//! Depths are normalized by the drainage length, so `z = 0` is the draining
//! top boundary (`u = 0`) and `z = 1` is the impermeable bottom
//! (`du/dz = 0`). Pressures are in Pa, times in years, `cv` in m²/year.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::Tridiagonal;

/// Default relative truncation tolerance for the series solutions.
pub const SERIES_TOL: f64 = 1e-12;
/// Default maximum number of series terms.
pub const SERIES_MAX_TERMS: usize = 10_000;

/// One consolidation problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidationCase {
    /// Coefficient of consolidation, m²/year.
    pub cv: f64,
    /// Drainage path length, m.
    pub h_dr: f64,
    /// Initial excess pore pressure at the sensor depths, Pa.
    pub u0: Vec<f64>,
    /// Normalized sensor depths, equally spaced on `[0, 1]`.
    pub sensor_depths: Vec<f64>,
}

impl ConsolidationCase {
    /// Builds a case with `h_dr = 1` and equally spaced sensors.
    pub fn new(cv: f64, u0: Vec<f64>) -> Result<Self> {
        let depths = sensor_depths(u0.len())?;
        Self::with_depths(cv, 1.0, u0, depths)
    }

    pub fn with_depths(cv: f64, h_dr: f64, u0: Vec<f64>, sensor_depths: Vec<f64>) -> Result<Self> {
        let case = ConsolidationCase {
            cv,
            h_dr,
            u0,
            sensor_depths,
        };
        case.validate()?;
        Ok(case)
    }

    /// Uniform initial profile `u0_pa` sampled at `m` sensors.
    pub fn uniform(cv: f64, u0_pa: f64, m: usize) -> Result<Self> {
        Self::new(cv, vec![u0_pa; m])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cv > 0.0 && self.cv.is_finite()) {
            return Err(Error::validation(format!("cv must be positive, got {}", self.cv)));
        }
        if !(self.h_dr > 0.0 && self.h_dr.is_finite()) {
            return Err(Error::validation(format!("h_dr must be positive, got {}", self.h_dr)));
        }
        let m = self.sensor_depths.len();
        if m < 2 {
            return Err(Error::validation("at least two sensor depths are required"));
        }
        if self.u0.len() != m {
            return Err(Error::Shape {
                what: "initial profile",
                expected: m,
                got: self.u0.len(),
            });
        }
        if self.sensor_depths[0] != 0.0 || self.sensor_depths[m - 1] != 1.0 {
            return Err(Error::validation("sensor depths must start at 0 and end at 1"));
        }
        if self.sensor_depths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("sensor depths must be strictly increasing"));
        }
        if self.u0.iter().any(|u| !u.is_finite()) {
            return Err(Error::validation("initial profile contains non-finite values"));
        }
        Ok(())
    }

    /// Linear interpolation of the initial profile at normalized depth `z`.
    pub fn initial_at(&self, z: f64) -> f64 {
        interp_linear(&self.sensor_depths, &self.u0, z)
    }

    /// Physical end time corresponding to a time factor `tv`.
    pub fn time_for(&self, tv: f64) -> f64 {
        tv * self.h_dr * self.h_dr / self.cv
    }

    pub fn is_uniform(&self) -> bool {
        self.u0.iter().all(|&u| u == self.u0[0])
    }
}

/// Excess pore pressure on a depth × time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionField {
    /// Normalized depths (length `nz`).
    pub depths: Vec<f64>,
    /// Physical times, years (length `nt`).
    pub times: Vec<f64>,
    /// Time factors matching `times`.
    pub tv_times: Vec<f64>,
    /// Row-major `nz × nt`: `values[iz * nt + it]`.
    pub values: Vec<f64>,
}

impl SolutionField {
    pub fn nz(&self) -> usize {
        self.depths.len()
    }

    pub fn nt(&self) -> usize {
        self.times.len()
    }

    pub fn at(&self, iz: usize, it: usize) -> f64 {
        self.values[iz * self.nt() + it]
    }

    pub fn depth_row(&self, iz: usize) -> &[f64] {
        let nt = self.nt();
        &self.values[iz * nt..(iz + 1) * nt]
    }

    /// Profile over depth at time index `it`.
    pub fn profile(&self, it: usize) -> Vec<f64> {
        (0..self.nz()).map(|iz| self.at(iz, it)).collect()
    }

    /// Bilinear interpolation in (normalized depth, time factor).
    pub fn interpolate(&self, z: f64, tv: f64) -> f64 {
        let (iz, wz) = bracket(&self.depths, z);
        let (it, wt) = bracket(&self.tv_times, tv);
        let nt = self.nt();
        let iz1 = (iz + 1).min(self.nz() - 1);
        let it1 = (it + 1).min(nt - 1);
        let v00 = self.values[iz * nt + it];
        let v01 = self.values[iz * nt + it1];
        let v10 = self.values[iz1 * nt + it];
        let v11 = self.values[iz1 * nt + it1];
        (1.0 - wz) * ((1.0 - wt) * v00 + wt * v01) + wz * ((1.0 - wt) * v10 + wt * v11)
    }

    /// Values of the four grid nodes enclosing `(z, tv)`.
    pub fn cell_corners(&self, z: f64, tv: f64) -> [f64; 4] {
        let (iz, _) = bracket(&self.depths, z);
        let (it, _) = bracket(&self.tv_times, tv);
        let nt = self.nt();
        let iz1 = (iz + 1).min(self.nz() - 1);
        let it1 = (it + 1).min(nt - 1);
        [
            self.values[iz * nt + it],
            self.values[iz * nt + it1],
            self.values[iz1 * nt + it],
            self.values[iz1 * nt + it1],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `m` equally spaced normalized depths on `[0, 1]`.
pub fn sensor_depths(m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::validation(format!("need at least 2 sensors, got {m}")));
    }
    Ok(linspace(0.0, 1.0, m))
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| a + step * i as f64).collect();
            v[n - 1] = b;
            v
        }
    }
}

/// Index `i` and weight `w` such that `x ≈ (1-w)·xs[i] + w·xs[i+1]`, clamped to the ends.
fn bracket(xs: &[f64], x: f64) -> (usize, f64) {
    let n = xs.len();
    if n == 1 || x <= xs[0] {
        return (0, 0.0);
    }
    if x >= xs[n - 1] {
        return (n - 2, 1.0);
    }
    let i = xs.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    (i, w)
}

pub(crate) fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let (i, w) = bracket(xs, x);
    if xs.len() == 1 {
        return ys[0];
    }
    (1.0 - w) * ys[i] + w * ys[i + 1]
}

/// Dimensionless time factor `cv·t / h_dr²`.
pub fn time_factor(cv: f64, t: f64, h_dr: f64) -> Result<f64> {
    if !(cv > 0.0) {
        return Err(Error::validation(format!("cv must be positive, got {cv}")));
    }
    if !(h_dr > 0.0) {
        return Err(Error::validation(format!("h_dr must be positive, got {h_dr}")));
    }
    if !(t >= 0.0) {
        return Err(Error::validation(format!("time must be non-negative, got {t}")));
    }
    Ok(cv * t / (h_dr * h_dr))
}

fn check_series_args(tv: f64, tol: f64) -> Result<()> {
    if !(tv >= 0.0) || !tv.is_finite() {
        return Err(Error::validation(format!("tv must be finite and non-negative, got {tv}")));
    }
    if !(tol > 0.0) {
        return Err(Error::validation(format!("tol must be positive, got {tol}")));
    }
    Ok(())
}

/// Series solution for a uniform initial pressure `u0_const`.
///
/// Terms `2u0/M · sin(Mz) · exp(-M²·tv)` with `M = π/2·(2m+1)` are summed
/// until the envelope `2|u0|/M · exp(-M²·tv)` of the next term drops below
/// `tol·|u0|`. At `tv = 0` the series converges only conditionally, so its
/// pointwise limit (the initial condition) is returned directly.
pub fn analytical_solution(z: f64, tv: f64, u0_const: f64, tol: f64, max_terms: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::validation(format!("z must lie in [0, 1], got {z}")));
    }
    check_series_args(tv, tol)?;
    if z == 0.0 || u0_const == 0.0 {
        return Ok(0.0);
    }
    if tv == 0.0 {
        return Ok(u0_const);
    }
    let mut sum = 0.0;
    for m in 0..max_terms {
        let big_m = FRAC_PI_2 * (2 * m + 1) as f64;
        let decay = (-big_m * big_m * tv).exp();
        sum += 2.0 / big_m * (big_m * z).sin() * decay;
        let next_m = big_m + std::f64::consts::PI;
        if 2.0 / next_m * (-next_m * next_m * tv).exp() < tol {
            return Ok(u0_const * sum);
        }
    }
    Err(Error::SeriesNotConverged { z, tv, max_terms })
}

/// Average degree of consolidation `U(tv) = 1 - Σ 2/M² · exp(-M²·tv)`.
pub fn average_degree_of_consolidation(tv: f64, tol: f64, max_terms: usize) -> Result<f64> {
    check_series_args(tv, tol)?;
    if tv == 0.0 {
        return Ok(0.0);
    }
    let mut residual = 0.0;
    for m in 0..max_terms {
        let big_m = FRAC_PI_2 * (2 * m + 1) as f64;
        residual += 2.0 / (big_m * big_m) * (-big_m * big_m * tv).exp();
        let next_m = big_m + std::f64::consts::PI;
        if 2.0 / (next_m * next_m) * (-next_m * next_m * tv).exp() < tol {
            return Ok((1.0 - residual).clamp(0.0, 1.0));
        }
    }
    Err(Error::SeriesNotConverged {
        z: f64::NAN,
        tv,
        max_terms,
    })
}

/// Semi-discrete diffusion operator over the `nz - 1` unknown nodes.
///
/// Node 0 (the draining top) is held at zero and eliminated; the last row
/// uses the ghost node `u[nz] = u[nz-1]`, giving `(…, 1, -1)`.
pub fn build_system_matrix(nz: usize, dz: f64, cv: f64) -> Result<Tridiagonal> {
    if nz < 3 {
        return Err(Error::validation(format!("nz must be at least 3, got {nz}")));
    }
    if !(dz > 0.0) || !(cv > 0.0) {
        return Err(Error::validation(format!("dz and cv must be positive (dz = {dz}, cv = {cv})")));
    }
    let n = nz - 1;
    let scale = cv / (dz * dz);
    let mut diag = vec![-2.0 * scale; n];
    diag[n - 1] = -scale;
    Tridiagonal::new(vec![scale; n - 1], diag, vec![scale; n - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    /// Plain fixed-length partial sum, no truncation logic.
    fn series_oracle(z: f64, tv: f64, u0: f64, terms: usize) -> f64 {
        (0..terms)
            .map(|m| {
                let mm = std::f64::consts::PI / 2.0 * (2 * m + 1) as f64;
                2.0 * u0 / mm * (mm * z).sin() * (-mm * mm * tv).exp()
            })
            .sum()
    }

    #[test]
    fn time_factor_examples() {
        assert_eq!(time_factor(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(time_factor(0.3, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(time_factor(0.5, 4.0, 1.0).unwrap(), 2.0);
        assert!(time_factor(0.0, 1.0, 1.0).is_err());
        assert!(time_factor(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn analytical_examples() {
        assert_eq!(analytical_solution(0.0, 0.5, 1e4, SERIES_TOL, SERIES_MAX_TERMS).unwrap(), 0.0);
        let u = analytical_solution(1.0, 0.0, 1e4, SERIES_TOL, SERIES_MAX_TERMS).unwrap();
        assert_relative_eq!(u, 1e4, max_relative = 1e-12);

        let oracle = series_oracle(1.0, 0.2, 1e4, 50);
        let u = analytical_solution(1.0, 0.2, 1e4, SERIES_TOL, SERIES_MAX_TERMS).unwrap();
        assert_relative_eq!(u, oracle, epsilon = 1e-12 * 1e4);
        assert!((u - 7720.0).abs() < 5.0, "u = {u}");
    }

    #[test]
    fn analytical_fails_near_the_initial_discontinuity() {
        let err = analytical_solution(1e-3, 1e-12, 1e4, SERIES_TOL, SERIES_MAX_TERMS).unwrap_err();
        assert!(matches!(err, Error::SeriesNotConverged { .. }));
    }

    #[test]
    fn truncation_is_stable_past_convergence() {
        for &tv in &[0.01, 0.05, 0.3, 1.5] {
            for &z in &[0.1, 0.5, 0.9, 1.0] {
                let a = analytical_solution(z, tv, 1e4, SERIES_TOL, SERIES_MAX_TERMS).unwrap();
                let b = series_oracle(z, tv, 1e4, 5000);
                assert!((a - b).abs() < SERIES_TOL * 1e4, "z={z} tv={tv}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn analytical_monotone_in_time() {
        for iz in 0..20 {
            let z = iz as f64 / 19.0;
            let mut prev = f64::INFINITY;
            for it in 0..20 {
                let tv = 0.01 + 2.0 * it as f64 / 19.0;
                let u = analytical_solution(z, tv, 1e4, SERIES_TOL, SERIES_MAX_TERMS).unwrap();
                assert!(u <= prev * (1.0 + 1e-9) + 1e-12, "z={z} tv={tv}");
                prev = u;
            }
        }
    }

    #[test]
    fn degree_of_consolidation() {
        assert_eq!(average_degree_of_consolidation(0.0, SERIES_TOL, SERIES_MAX_TERMS).unwrap(), 0.0);
        let u = average_degree_of_consolidation(5.0, SERIES_TOL, SERIES_MAX_TERMS).unwrap();
        let lead = 8.0 / (std::f64::consts::PI.powi(2)) * (-std::f64::consts::PI.powi(2) / 4.0 * 5.0).exp();
        assert_relative_eq!(1.0 - u, lead, max_relative = 1e-9);
        assert!((u - 1.0).abs() < 1e-5);
        let u = average_degree_of_consolidation(10.0, SERIES_TOL, SERIES_MAX_TERMS).unwrap();
        assert!((u - 1.0).abs() < 1e-6);
        let oracle: f64 = 1.0
            - (0..200)
                .map(|m| {
                    let mm = std::f64::consts::PI / 2.0 * (2 * m + 1) as f64;
                    2.0 / (mm * mm) * (-mm * mm * 0.197).exp()
                })
                .sum::<f64>();
        let u = average_degree_of_consolidation(0.197, SERIES_TOL, SERIES_MAX_TERMS).unwrap();
        assert_relative_eq!(u, oracle, epsilon = 1e-10);
        assert!((u - 0.5).abs() < 0.005);
        let mut prev = 0.0;
        for i in 0..100 {
            let u = average_degree_of_consolidation(i as f64 * 0.02, SERIES_TOL, SERIES_MAX_TERMS).unwrap();
            assert!(u >= prev);
            prev = u;
        }
    }

    fn dense(t: &Tridiagonal) -> DMatrix<f64> {
        let n = t.len();
        DMatrix::from_fn(n, n, |i, j| t.get(i, j))
    }

    #[test]
    fn system_matrix_transcription() {
        let a = build_system_matrix(4, 1.0, 1.0).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.0, 1.0, -2.0, 1.0, 0.0, 1.0, -1.0]);
        assert_eq!(dense(&a), expect);
        assert!(build_system_matrix(2, 1.0, 1.0).is_err());
        assert!(build_system_matrix(5, 0.0, 1.0).is_err());
    }

    #[test]
    fn system_matrix_negative_definite() {
        let a = build_system_matrix(10, 1.0 / 9.0, 0.5).unwrap();
        let d = dense(&a);
        assert_eq!(d, d.transpose());
        let eig = d.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| l < 0.0));

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let nz = rng.gen_range(3..60);
            let dz = rng.gen_range(0.01..1.0);
            let cv = rng.gen_range(0.1..2.0);
            let d = dense(&build_system_matrix(nz, dz, cv).unwrap());
            assert_eq!(d, d.transpose());
            let max = d.symmetric_eigen().eigenvalues.max();
            assert!(max < 0.0, "nz={nz} dz={dz} cv={cv}: {max}");
        }
    }

    #[test]
    fn case_validation() {
        assert!(ConsolidationCase::uniform(0.5, 1e4, 100).is_ok());
        assert!(ConsolidationCase::uniform(0.0, 1e4, 100).is_err());
        assert!(ConsolidationCase::uniform(0.5, 1e4, 1).is_err());
        assert!(ConsolidationCase::with_depths(0.5, 1.0, vec![1.0, 2.0], vec![0.0, 0.5]).is_err());
        assert!(ConsolidationCase::with_depths(0.5, 1.0, vec![1.0; 3], vec![0.0, 0.7, 0.5]).is_err());
    }

    #[test]
    fn bilinear_interpolation_hits_nodes() {
        let field = SolutionField {
            depths: vec![0.0, 0.5, 1.0],
            times: vec![0.0, 1.0],
            tv_times: vec![0.0, 1.0],
            values: vec![0.0, 0.0, 1.0, 2.0, 3.0, 5.0],
        };
        assert_eq!(field.interpolate(0.5, 1.0), 2.0);
        assert_eq!(field.interpolate(1.0, 0.0), 3.0);
        assert_relative_eq!(field.interpolate(0.75, 0.5), 0.5 * 1.5 + 0.5 * 4.0);
    }
}

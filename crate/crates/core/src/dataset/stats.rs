use serde::{Deserialize, Serialize};

use super::DatasetArrays;
use crate::error::{Error, Result};

/// Component-wise mean / standard deviation used to standardize every
/// network input and the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub branch_mean: Vec<f64>,
    pub branch_std: Vec<f64>,
    pub cv_mean: f64,
    pub cv_std: f64,
    /// `[z, t]`.
    pub coord_mean: [f64; 2],
    pub coord_std: [f64; 2],
    pub target_mean: f64,
    pub target_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n.max(1) as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n.max(1) as f64;
    (mean, var.sqrt())
}

impl StandardizationStats {
    /// Population statistics of a (training) dataset.
    pub fn from_arrays(arrays: &DatasetArrays, n: usize, m: usize, p: usize) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::validation("cannot compute statistics of an empty dataset"));
        }
        let mut branch_mean = Vec::with_capacity(m);
        let mut branch_std = Vec::with_capacity(m);
        for k in 0..m {
            let (mu, sd) = mean_std((0..n).map(|i| arrays.branch[i * m + k]));
            branch_mean.push(mu);
            branch_std.push(sd);
        }
        let (cv_mean, cv_std) = mean_std(arrays.cv.iter().copied());
        let (zm, zs) = mean_std(arrays.coords.iter().step_by(2).copied());
        let (tm, ts) = mean_std(arrays.coords.iter().skip(1).step_by(2).copied());
        let (target_mean, target_std) = mean_std(arrays.targets.iter().copied());
        let stats = StandardizationStats {
            branch_mean,
            branch_std,
            cv_mean,
            cv_std,
            coord_mean: [zm, tm],
            coord_std: [zs, ts],
            target_mean,
            target_std,
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| !(v > 0.0) || !v.is_finite();
        if self.branch_std.len() != self.branch_mean.len() {
            return Err(Error::Shape {
                what: "branch statistics",
                expected: self.branch_mean.len(),
                got: self.branch_std.len(),
            });
        }
        if let Some(k) = self.branch_std.iter().position(|&s| bad(s)) {
            return Err(Error::ZeroStd(format!("branch sensor {k}")));
        }
        if bad(self.cv_std) {
            return Err(Error::ZeroStd("cv".into()));
        }
        if bad(self.coord_std[0]) {
            return Err(Error::ZeroStd("z coordinate".into()));
        }
        if bad(self.coord_std[1]) {
            return Err(Error::ZeroStd("t coordinate".into()));
        }
        if bad(self.target_std) {
            return Err(Error::ZeroStd("target".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.branch_mean.len()
    }

    pub fn branch(&self, u0: &[f64]) -> Vec<f64> {
        u0.iter()
            .zip(self.branch_mean.iter().zip(&self.branch_std))
            .map(|(u, (m, s))| (u - m) / s)
            .collect()
    }

    pub fn cv(&self, cv: f64) -> f64 {
        (cv - self.cv_mean) / self.cv_std
    }

    pub fn z(&self, z: f64) -> f64 {
        (z - self.coord_mean[0]) / self.coord_std[0]
    }

    pub fn t(&self, t: f64) -> f64 {
        (t - self.coord_mean[1]) / self.coord_std[1]
    }

    pub fn target(&self, u: f64) -> f64 {
        (u - self.target_mean) / self.target_std
    }

    /// Standardized target value back to Pa.
    pub fn target_pa(&self, v: f64) -> f64 {
        v * self.target_std + self.target_mean
    }

    /// Elementwise `(x - mean) / std` over every component.
    pub fn standardize(&self, raw: &DatasetArrays) -> DatasetArrays {
        let m = self.m();
        DatasetArrays {
            branch: raw
                .branch
                .iter()
                .enumerate()
                .map(|(i, &u)| (u - self.branch_mean[i % m]) / self.branch_std[i % m])
                .collect(),
            cv: raw.cv.iter().map(|&c| self.cv(c)).collect(),
            coords: raw
                .coords
                .iter()
                .enumerate()
                .map(|(i, &x)| (x - self.coord_mean[i % 2]) / self.coord_std[i % 2])
                .collect(),
            targets: raw.targets.iter().map(|&u| self.target(u)).collect(),
        }
    }

    /// Exact inverse of [`StandardizationStats::standardize`].
    pub fn destandardize(&self, std: &DatasetArrays) -> DatasetArrays {
        let m = self.m();
        DatasetArrays {
            branch: std
                .branch
                .iter()
                .enumerate()
                .map(|(i, &v)| v * self.branch_std[i % m] + self.branch_mean[i % m])
                .collect(),
            cv: std.cv.iter().map(|&v| v * self.cv_std + self.cv_mean).collect(),
            coords: std
                .coords
                .iter()
                .enumerate()
                .map(|(i, &v)| v * self.coord_std[i % 2] + self.coord_mean[i % 2])
                .collect(),
            targets: std.targets.iter().map(|&v| self.target_pa(v)).collect(),
        }
    }
}

//! Tridiagonal matrices and the Thomas algorithm.

use crate::error::{Error, Result};

/// Banded storage of a tridiagonal matrix.
///
/// `lower[i]` is entry `(i + 1, i)`, `upper[i]` is entry `(i, i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::validation("tridiagonal matrix must be non-empty"));
        }
        if lower.len() != n - 1 {
            return Err(Error::Shape {
                what: "tridiagonal lower band",
                expected: n - 1,
                got: lower.len(),
            });
        }
        if upper.len() != n - 1 {
            return Err(Error::Shape {
                what: "tridiagonal upper band",
                expected: n - 1,
                got: upper.len(),
            });
        }
        if lower.iter().chain(&diag).chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::validation("tridiagonal matrix has non-finite entries"));
        }
        Ok(Tridiagonal { lower, diag, upper })
    }

    pub fn identity(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![1.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    /// 1×1 matrix `[a]`, convenient for scalar test problems.
    pub fn scalar(a: f64) -> Self {
        Tridiagonal {
            lower: Vec::new(),
            diag: vec![a],
            upper: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i == j + 1 {
            self.lower[j]
        } else if j == i + 1 {
            self.upper[i]
        } else {
            0.0
        }
    }

    /// `out = self · x`.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        if n == 1 {
            out[0] = self.diag[0] * x[0];
            return;
        }
        out[0] = self.diag[0] * x[0] + self.upper[0] * x[1];
        for i in 1..n - 1 {
            out[i] = self.lower[i - 1] * x[i - 1] + self.diag[i] * x[i] + self.upper[i] * x[i + 1];
        }
        out[n - 1] = self.lower[n - 2] * x[n - 2] + self.diag[n - 1] * x[n - 1];
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.matvec_into(x, &mut out);
        out
    }

    /// `I - c·self`, the implicit-step operator.
    pub fn identity_minus(&self, c: f64) -> Tridiagonal {
        Tridiagonal {
            lower: self.lower.iter().map(|v| -c * v).collect(),
            diag: self.diag.iter().map(|v| 1.0 - c * v).collect(),
            upper: self.upper.iter().map(|v| -c * v).collect(),
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        thomas_solve(self, rhs)
    }
}

/// Solves `a · x = rhs` by forward elimination and back substitution, O(n).
///
/// Fails when a pivot falls below `1e-14 · max|diag|`.
pub fn thomas_solve(a: &Tridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if rhs.len() != n {
        return Err(Error::Shape {
            what: "right-hand side",
            expected: n,
            got: rhs.len(),
        });
    }
    let max_diag = a.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let threshold = 1e-14 * max_diag;
    let check = |row: usize, pivot: f64| {
        if pivot.abs() < threshold || pivot.abs() == 0.0 || !pivot.is_finite() {
            Err(Error::Singular { row, pivot })
        } else {
            Ok(())
        }
    };

    let mut c_prime = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut pivot = a.diag[0];
    check(0, pivot)?;
    if n > 1 {
        c_prime[0] = a.upper[0] / pivot;
    }
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = a.diag[i] - a.lower[i - 1] * c_prime[i - 1];
        check(i, pivot)?;
        if i < n - 1 {
            c_prime[i] = a.upper[i] / pivot;
        }
        x[i] = (rhs[i] - a.lower[i - 1] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_and_two_by_two() {
        let x = thomas_solve(&Tridiagonal::identity(3), &[3.0, 7.0, 2.0]).unwrap();
        assert_eq!(x, vec![3.0, 7.0, 2.0]);
        let a = Tridiagonal::new(vec![1.0], vec![2.0, 2.0], vec![1.0]).unwrap();
        let x = thomas_solve(&a, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_dense_elimination() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        let lower: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(2.5..4.0) * if rng.gen() { 1.0 } else { -1.0 }).collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let a = Tridiagonal::new(lower, diag, upper).unwrap();

        let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        let oracle = dense.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        let x = thomas_solve(&a, &rhs).unwrap();
        for i in 0..n {
            assert!((x[i] - oracle[i]).abs() <= 1e-10 * oracle[i].abs().max(1.0));
        }
    }

    #[test]
    fn singular_pivot_is_reported() {
        let a = Tridiagonal::new(vec![1.0], vec![1.0, 1.0], vec![1.0]).unwrap();
        assert!(matches!(thomas_solve(&a, &[1.0, 1.0]), Err(Error::Singular { row: 1, .. })));
        let z = Tridiagonal::new(vec![], vec![0.0], vec![]).unwrap();
        assert!(matches!(thomas_solve(&z, &[1.0]), Err(Error::Singular { row: 0, .. })));
    }

    #[test]
    fn construction_checks_bands() {
        assert!(Tridiagonal::new(vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0]).is_err());
        assert!(Tridiagonal::new(vec![], vec![f64::NAN], vec![]).is_err());
        assert!(thomas_solve(&Tridiagonal::identity(2), &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn implicit_operator_round_trip(
            nz in 3usize..120,
            cv in 0.05f64..2.0,
            dt in 1e-6f64..1.0,
            c in prop::sample::select(vec![1.0, 2.0 / 3.0]),
            seed in any::<u64>(),
        ) {
            let dz = 1.0 / (nz - 1) as f64;
            let a = crate::consolidation::build_system_matrix(nz, dz, cv).unwrap();
            let m = a.identity_minus(c * dt);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..m.len()).map(|_| rng.gen_range(-1e4..1e4)).collect();
            let back = thomas_solve(&m, &m.matvec(&x)).unwrap();
            let scale = x.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() <= 1e-10 * scale);
            }
        }
    }
}

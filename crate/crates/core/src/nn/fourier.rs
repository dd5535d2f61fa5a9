use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Real;
use crate::error::{Error, Result};

/// Hyperparameters of a random Fourier feature map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierSpec {
    /// Number of frequency rows; the embedding has `2·m_freq` outputs.
    pub m_freq: usize,
    /// Standard deviation of the frequency entries.
    pub sigma: f64,
}

impl Default for FourierSpec {
    fn default() -> Self {
        FourierSpec { m_freq: 50, sigma: 1.0 }
    }
}

/// `γ(v) = [sin(2π·B·v); cos(2π·B·v)]` with `B` (`m_freq × k`) drawn once
/// from `N(0, σ²)` and never trained.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierEmbedding<T> {
    spec: FourierSpec,
    input_dim: usize,
    b_matrix: Vec<T>,
}

impl<T: Real> FourierEmbedding<T> {
    pub fn new(spec: FourierSpec, input_dim: usize, seed: u64) -> Result<Self> {
        if spec.m_freq == 0 || input_dim == 0 {
            return Err(Error::validation("Fourier embedding needs m_freq >= 1 and input_dim >= 1"));
        }
        if !(spec.sigma >= 0.0) || !spec.sigma.is_finite() {
            return Err(Error::validation(format!("Fourier sigma must be non-negative, got {}", spec.sigma)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, spec.sigma).map_err(|e| Error::validation(e.to_string()))?;
        let b_matrix = (0..spec.m_freq * input_dim).map(|_| T::of(normal.sample(&mut rng))).collect();
        Ok(FourierEmbedding {
            spec,
            input_dim,
            b_matrix,
        })
    }

    /// Builds an embedding from an explicit row-major `m_freq × input_dim` matrix.
    pub fn from_matrix(spec: FourierSpec, input_dim: usize, b_matrix: Vec<T>) -> Result<Self> {
        if b_matrix.len() != spec.m_freq * input_dim {
            return Err(Error::Shape {
                what: "Fourier frequency matrix",
                expected: spec.m_freq * input_dim,
                got: b_matrix.len(),
            });
        }
        Ok(FourierEmbedding {
            spec,
            input_dim,
            b_matrix,
        })
    }

    pub fn spec(&self) -> FourierSpec {
        self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        2 * self.spec.m_freq
    }

    pub fn b_matrix(&self) -> &[T] {
        &self.b_matrix
    }

    pub fn cast<U: Real>(&self) -> FourierEmbedding<U> {
        FourierEmbedding {
            spec: self.spec,
            input_dim: self.input_dim,
            b_matrix: self.b_matrix.iter().map(|&b| U::of(b.f64())).collect(),
        }
    }

    pub fn embed(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.input_dim {
            return Err(Error::Shape {
                what: "Fourier embedding input",
                expected: self.input_dim,
                got: v.len(),
            });
        }
        self.embed_batch(v, 1)
    }

    pub fn embed_batch(&self, v: &[T], batch: usize) -> Result<Vec<T>> {
        if v.len() != batch * self.input_dim {
            return Err(Error::Shape {
                what: "Fourier embedding batch",
                expected: batch * self.input_dim,
                got: v.len(),
            });
        }
        let (k, m) = (self.input_dim, self.spec.m_freq);
        let mut out = vec![T::zero(); batch * 2 * m];
        T::gemm(batch, k, m, T::one(), v, k as isize, 1, &self.b_matrix, 1, k as isize, T::zero(), &mut out, 2 * m as isize, 1);
        for row in out.chunks_exact_mut(2 * m) {
            let (sin, cos) = row.split_at_mut(m);
            for (s, c) in sin.iter_mut().zip(cos.iter_mut()) {
                (*s, *c) = s.turn_sin_cos();
            }
        }
        Ok(out)
    }

    /// Embeds every pair of a row of `x` (`nx × split`) followed by a row of
    /// `y` (`ny × (input_dim - split)`), `x` outermost. Uses the angle-sum
    /// identities so only `nx + ny` rows need sines and cosines.
    pub fn embed_product(&self, x: &[T], nx: usize, y: &[T], ny: usize, split: usize) -> Result<Vec<T>> {
        let (k, m) = (self.input_dim, self.spec.m_freq);
        if split == 0 || split >= k {
            return Err(Error::validation(format!("product split must lie in 1..{k}, got {split}")));
        }
        for (what, v, n, w) in [("Fourier product left", x, nx, split), ("Fourier product right", y, ny, k - split)] {
            if v.len() != n * w {
                return Err(Error::Shape {
                    what,
                    expected: n * w,
                    got: v.len(),
                });
            }
        }
        let turns = |v: &[T], n: usize, w: usize, b: &[T]| {
            let mut p = vec![T::zero(); n * m];
            T::gemm(n, w, m, T::one(), v, w as isize, 1, b, 1, k as isize, T::zero(), &mut p, m as isize, 1);
            let c: Vec<T> = p
                .iter_mut()
                .map(|a| {
                    let (s, c) = a.turn_sin_cos();
                    *a = s;
                    c
                })
                .collect();
            (p, c)
        };
        let (sx, cx) = turns(x, nx, split, &self.b_matrix);
        let (sy, cy) = turns(y, ny, k - split, &self.b_matrix[split..]);
        let mut out = vec![T::zero(); nx * ny * 2 * m];
        let mut rows = out.chunks_exact_mut(2 * m);
        for (sa, ca) in sx.chunks_exact(m).zip(cx.chunks_exact(m)) {
            for ((sb, cb), row) in sy.chunks_exact(m).zip(cy.chunks_exact(m)).zip(&mut rows) {
                let (sin, cos) = row.split_at_mut(m);
                for i in 0..m {
                    sin[i] = sa[i] * cb[i] + ca[i] * sb[i];
                    cos[i] = ca[i] * cb[i] - sa[i] * sb[i];
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_frequencies() {
        let spec = FourierSpec { m_freq: 4, sigma: 1.0 };
        let e = FourierEmbedding::<f64>::from_matrix(spec, 3, vec![0.0; 12]).unwrap();
        let out = e.embed(&[0.3, -2.0, 7.0]).unwrap();
        assert!(out[..4].iter().all(|&v| v == 0.0));
        assert!(out[4..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn output_length_is_twice_m() {
        let e = FourierEmbedding::<f32>::new(FourierSpec::default(), 3, 1).unwrap();
        assert_eq!(e.embed(&[0.1, 0.2, 0.3]).unwrap().len(), 100);
    }

    #[test]
    fn quarter_period() {
        let spec = FourierSpec { m_freq: 1, sigma: 1.0 };
        let e = FourierEmbedding::<f64>::from_matrix(spec, 3, vec![1.0, 0.0, 0.0]).unwrap();
        let out = e.embed(&[0.25, 5.0, -1.0]).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-15);
        assert!(out[1].abs() < 1e-15);
    }

    #[test]
    fn sin_cos_pairs_on_unit_circle() {
        let e = FourierEmbedding::<f64>::new(FourierSpec::default(), 3, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        use rand::Rng;
        for _ in 0..100 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let out = e.embed(&v).unwrap();
            for i in 0..50 {
                assert!((out[i] * out[i] + out[50 + i] * out[50 + i] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn batch_matches_single() {
        let e = FourierEmbedding::<f64>::new(FourierSpec { m_freq: 5, sigma: 2.0 }, 2, 1).unwrap();
        let v = [0.1, 0.2, -0.4, 0.9];
        let b = e.embed_batch(&v, 2).unwrap();
        assert_eq!(&b[..10], e.embed(&v[..2]).unwrap().as_slice());
        assert_eq!(&b[10..], e.embed(&v[2..]).unwrap().as_slice());
        assert!(e.embed(&[1.0]).is_err());
    }

    #[test]
    fn product_matches_concatenated_rows() {
        let e = FourierEmbedding::<f64>::new(FourierSpec { m_freq: 7, sigma: 1.5 }, 3, 4).unwrap();
        let x = [0.3, -1.2, 2.0];
        let y = [0.5, 0.1, -0.7, 1.9];
        let got = e.embed_product(&x, 3, &y, 2, 1).unwrap();
        let rows: Vec<f64> = x.iter().flat_map(|&a| y.chunks(2).flat_map(move |b| [a, b[0], b[1]])).collect();
        let want = e.embed_batch(&rows, 6).unwrap();
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
        let e32 = e.cast::<f32>();
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let y32: Vec<f32> = y.iter().map(|&v| v as f32).collect();
        let got32 = e32.embed_product(&x32, 3, &y32, 2, 1).unwrap();
        for (g, w) in got32.iter().zip(&want) {
            assert!((*g as f64 - w).abs() < 2e-5);
        }
        assert!(e.embed_product(&x, 3, &y, 2, 0).is_err());
        assert!(e.embed_product(&x, 3, &y, 2, 3).is_err());
        assert!(e.embed_product(&x, 2, &y, 2, 1).is_err());
    }

    #[test]
    fn frequencies_follow_sigma() {
        let e = FourierEmbedding::<f64>::new(FourierSpec { m_freq: 2000, sigma: 3.0 }, 3, 5).unwrap();
        let n = e.b_matrix().len() as f64;
        let var = e.b_matrix().iter().map(|b| b * b).sum::<f64>() / n;
        assert!((var.sqrt() - 3.0).abs() < 0.1);
    }
}

//! Small dense neural-network engine: MLPs with hand-written reverse mode,
//! Adam, and a frozen Fourier feature embedding.
//!
//! Everything is generic over [`Real`] so training can run in `f32` while
//! gradient checks use `f64`.

mod adam;
mod fourier;
mod mlp;

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use adam::{adam_update, AdamConfig, AdamState};
pub use fourier::{FourierEmbedding, FourierSpec};
pub use mlp::{init_mlp, Activation, Mlp, MlpCache, MlpSpec};

/// Floating-point element type of network parameters and activations.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + Sum + AddAssign + SubAssign + MulAssign + 'static
{
    /// Little-endian dtype label used in manifests (`"f32le"` / `"f64le"`).
    const DTYPE: &'static str;
    const BYTES: usize;

    /// `C = alpha·A·B + beta·C` on strided row/column layouts.
    #[allow(clippy::too_many_arguments)]
    fn gemm(m: usize, k: usize, n: usize, alpha: Self, a: &[Self], rsa: isize, csa: isize, b: &[Self], rsb: isize, csb: isize, beta: Self, c: &mut [Self], rsc: isize, csc: isize);

    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite conversion")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }

    /// Hyperbolic tangent used by the activation layers.
    fn act_tanh(self) -> Self {
        self.tanh()
    }

    /// `(sin 2πx, cos 2πx)`.
    fn turn_sin_cos(self) -> (Self, Self) {
        (Self::of(std::f64::consts::TAU) * self).sin_cos()
    }
}

/// Rational minimax tanh for `f32`, a few ulp from the exact value and
/// free of libm calls so activation loops vectorise.
#[inline]
pub fn tanh_f32(x: f32) -> f32 {
    const CLAMP: f32 = 7.905_311;
    const A: [f32; 7] = [
        4.893_524_6e-3,
        6.372_619_3e-4,
        1.485_722_4e-5,
        5.122_297e-8,
        -8.604_672e-11,
        2.000_188e-13,
        -2.760_768_5e-16,
    ];
    #[allow(clippy::excessive_precision)]
    const B: [f32; 4] = [4.893_525_2e-3, 2.268_434_6e-3, 1.185_347_1e-4, 1.198_258_4e-6];
    let c = x.clamp(-CLAMP, CLAMP);
    let x2 = c * c;
    let p = x2 * (x2 * (x2 * (x2 * (x2 * (x2 * A[6] + A[5]) + A[4]) + A[3]) + A[2]) + A[1]) + A[0];
    let q = x2 * (x2 * (x2 * B[3] + B[2]) + B[1]) + B[0];
    let r = c * p / q;
    if x.abs() < 4e-4 {
        x
    } else {
        r
    }
}

/// `(sin 2πx, cos 2πx)` for `f32`: reduction to the nearest quarter turn,
/// then minimax polynomials on `[-π/4, π/4]`. Branch-free.
#[inline]
pub fn turn_sin_cos_f32(x: f32) -> (f32, f32) {
    let k = (4.0 * x + 0.5f32.copysign(x)) as i32;
    let a = std::f32::consts::TAU * (x - 0.25 * k as f32);
    let a2 = a * a;
    let sa = a + a * a2 * (-1.666_665_5e-1 + a2 * (8.332_161e-3 + a2 * -1.951_529_6e-4));
    let ca = 1.0 - 0.5 * a2 + a2 * a2 * (4.166_664_6e-2 + a2 * (-1.388_731_6e-3 + a2 * 2.443_315_7e-5));
    let (s, c) = if k & 1 != 0 { (ca, sa) } else { (sa, ca) };
    let s = if k & 2 != 0 { -s } else { s };
    let c = if (k + 1) & 2 != 0 { -c } else { c };
    (s, c)
}

#[allow(clippy::too_many_arguments)]
fn check_gemm_bounds<T>(m: usize, k: usize, n: usize, a: &[T], rsa: isize, csa: isize, b: &[T], rsb: isize, csb: isize, c: &[T], rsc: isize, csc: isize) {
    let last = |rows: usize, cols: usize, rs: isize, cs: isize| {
        if rows == 0 || cols == 0 {
            0
        } else {
            ((rows - 1) as isize * rs + (cols - 1) as isize * cs) as usize
        }
    };
    assert!(m == 0 || k == 0 || last(m, k, rsa, csa) < a.len(), "gemm: A out of bounds");
    assert!(k == 0 || n == 0 || last(k, n, rsb, csb) < b.len(), "gemm: B out of bounds");
    assert!(m == 0 || n == 0 || last(m, n, rsc, csc) < c.len(), "gemm: C out of bounds");
}

impl Real for f32 {
    const DTYPE: &'static str = "f32le";
    const BYTES: usize = 4;

    #[inline]
    fn act_tanh(self) -> f32 {
        tanh_f32(self)
    }

    #[inline]
    fn turn_sin_cos(self) -> (f32, f32) {
        turn_sin_cos_f32(self)
    }

    fn gemm(m: usize, k: usize, n: usize, alpha: f32, a: &[f32], rsa: isize, csa: isize, b: &[f32], rsb: isize, csb: isize, beta: f32, c: &mut [f32], rsc: isize, csc: isize) {
        check_gemm_bounds(m, k, n, a, rsa, csa, b, rsb, csb, c, rsc, csc);
        // SAFETY: all accessed offsets were bounds-checked above.
        unsafe {
            matrixmultiply::sgemm(m, k, n, alpha, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), rsc, csc);
        }
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> f32 {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl Real for f64 {
    const DTYPE: &'static str = "f64le";
    const BYTES: usize = 8;

    fn gemm(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], rsa: isize, csa: isize, b: &[f64], rsb: isize, csb: isize, beta: f64, c: &mut [f64], rsc: isize, csc: isize) {
        check_gemm_bounds(m, k, n, a, rsa, csa, b, rsb, csb, c, rsc, csc);
        // SAFETY: all accessed offsets were bounds-checked above.
        unsafe {
            matrixmultiply::dgemm(m, k, n, alpha, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), rsc, csc);
        }
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> f64 {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}
